//! Deterministic synthetic report pages for end-to-end runs.
//!
//! Each page carries two sections: one with a captioned table (plus
//! footnote, unit label and discussion), one with a captioned figure, and
//! a short aside on an unrelated subject. Topics recur across pages with
//! different subjects and numbers, so retrieval over the whole corpus has
//! near-duplicate competitors. Coordinates are in pixels on a 1000 x 1400
//! page; labels follow the annotation vocabulary (`title`, `text_block`,
//! `table_caption`, ...).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{RawElement, RawPage};

pub const PAGE_WIDTH: f64 = 1000.0;
pub const PAGE_HEIGHT: f64 = 1400.0;
pub const DEFAULT_SEED: u64 = 20_240_611;

struct Topic {
    name: &'static str,
    params: &'static [&'static str],
    unit: &'static str,
    verbs: &'static [&'static str],
}

const TOPICS: &[Topic] = &[
    Topic {
        name: "Water quality",
        params: &["pH", "COD", "BOD", "suspended solids", "total nitrogen", "total phosphorus"],
        unit: "mg/L",
        verbs: &["decreased", "stabilized", "fluctuated", "improved"],
    },
    Topic {
        name: "Energy consumption",
        params: &["heating load", "cooling load", "lighting", "ventilation", "pumps"],
        unit: "kWh",
        verbs: &["rose", "fell", "peaked", "levelled off"],
    },
    Topic {
        name: "Crop yield",
        params: &["wheat", "barley", "maize", "soybean", "rice"],
        unit: "t/ha",
        verbs: &["increased", "declined", "recovered", "varied"],
    },
    Topic {
        name: "Traffic volume",
        params: &["passenger cars", "buses", "trucks", "motorcycles", "bicycles"],
        unit: "vehicles/day",
        verbs: &["grew", "dropped", "shifted", "saturated"],
    },
    Topic {
        name: "Tensile strength",
        params: &["specimen A", "specimen B", "specimen C", "specimen D"],
        unit: "MPa",
        verbs: &["exceeded", "matched", "undershot", "tracked"],
    },
    Topic {
        name: "Household income",
        params: &["wages", "transfers", "rent", "dividends", "self-employment"],
        unit: "thousand USD",
        verbs: &["expanded", "contracted", "stagnated", "rebounded"],
    },
    Topic {
        name: "Air pollutant concentration",
        params: &["PM2.5", "PM10", "NO2", "SO2", "ozone"],
        unit: "ug/m3",
        verbs: &["spiked", "eased", "persisted", "dispersed"],
    },
    Topic {
        name: "Patient recovery time",
        params: &["cohort 1", "cohort 2", "cohort 3", "placebo group"],
        unit: "days",
        verbs: &["shortened", "lengthened", "converged", "diverged"],
    },
];

const SUBJECTS: &[&str] = &[
    "the northern treatment plant",
    "the pilot reactor",
    "the coastal district",
    "the 2019 survey wave",
    "the experimental campus",
    "the upland farms",
    "the downtown corridor",
    "the control batch",
    "the rural clinics",
    "the eastern monitoring stations",
    "the retrofit buildings",
    "the reference panel",
];

const ASIDES: &[&str] = &[
    "Field staff were rotated monthly to limit observer bias, and all logbooks were digitised before analysis.",
    "Funding for the instrumentation was provided through a regional infrastructure grant awarded in the previous cycle.",
    "A separate stakeholder workshop discussed governance arrangements; its minutes are archived with the project records.",
    "Calibration certificates for every sensor are listed in the supplementary material together with their expiry dates.",
    "The ethics board approved the protocol without amendments after a single round of review.",
    "Weather during the campaign was unremarkable apart from two days of heavy rain in the second week.",
];

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("nonempty list")
}

fn value(rng: &mut ChaCha8Rng) -> f64 {
    (rng.gen_range(10.0..900.0f64) * 10.0).round() / 10.0
}

struct Layout {
    y: f64,
    order: u32,
    elements: Vec<RawElement>,
}

impl Layout {
    fn push(&mut self, label: &str, x: (f64, f64), height: f64, text: String) {
        let top = self.y;
        self.y += height;
        self.elements.push(RawElement {
            id: None,
            label: label.into(),
            bbox: [x.0, top, x.1, top + height],
            order: Some(self.order),
            text,
            embedding: None,
            subtype: None,
        });
        self.order += 1;
        self.y += 8.0;
    }
}

const BODY: (f64, f64) = (80.0, 920.0);

/// One page. `index` seeds the per-page generator together with `seed`.
pub fn synthetic_page(index: usize, seed: u64) -> RawPage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let t1 = pick(&mut rng, TOPICS);
    let t2 = loop {
        let t = pick(&mut rng, TOPICS);
        if t.name != t1.name {
            break t;
        }
    };
    let s1 = *pick(&mut rng, SUBJECTS);
    let s2 = *pick(&mut rng, SUBJECTS);
    let sec = index + 1;
    let tno = index + 1;

    let mut l = Layout {
        y: 40.0,
        order: 0,
        elements: Vec::new(),
    };
    l.push("page_header", BODY, 30.0, "Proceedings of the Applied Measurement Workshop".into());
    l.y = 110.0;

    // section 1 with table
    l.push("title", BODY, 36.0, format!("{sec}.1 {} at {s1}", t1.name));
    let cols = ["Baseline", "Phase I", "Phase II"];
    let rows: Vec<(String, [f64; 3])> = t1
        .params
        .iter()
        .map(|p| (p.to_string(), [value(&mut rng), value(&mut rng), value(&mut rng)]))
        .collect();
    let (best, best_row) = rows
        .iter()
        .max_by(|a, b| a.1[2].total_cmp(&b.1[2]))
        .map(|(n, v)| (n.clone(), *v))
        .expect("rows");
    l.push(
        "text_block",
        BODY,
        90.0,
        format!(
            "This section reports {} for {s1}. Measurements were taken over three campaign phases \
             and averaged per phase, and the sampling scheme followed the standard procedure for {}.",
            t1.name.to_lowercase(),
            t1.params[0]
        ),
    );
    l.push(
        "table_caption",
        BODY,
        30.0,
        format!("Table {tno}. {} measured at {s1} across campaign phases.", t1.name),
    );
    let mut table = format!("Item | {}", cols.join(" | "));
    for (name, v) in &rows {
        table.push_str(&format!("\n{name} | {} | {} | {}", v[0], v[1], v[2]));
    }
    l.push("table", BODY, 40.0 + 28.0 * rows.len() as f64, table);
    l.push("text_block", (80.0, 400.0), 24.0, format!("(Unit: {})", t1.unit));
    l.push(
        "table_footnote",
        BODY,
        26.0,
        format!("Values are phase means of {} replicate samples.", rng.gen_range(3..9)),
    );
    l.push(
        "text_block",
        BODY,
        90.0,
        format!(
            "As shown in Table {tno}, {best} {} to {} {} in Phase II, compared with {} {} at baseline. \
             The remaining items {} less markedly over the campaign.",
            pick(&mut rng, t1.verbs),
            best_row[2],
            t1.unit,
            best_row[0],
            t1.unit,
            pick(&mut rng, t1.verbs)
        ),
    );

    // section 2 with figure
    l.push("title", BODY, 36.0, format!("{sec}.2 {} trends for {s2}", t2.name));
    l.push(
        "text_block",
        BODY,
        80.0,
        format!(
            "We next examine how {} evolved for {s2}. Monthly records were aggregated and \
             smoothed with a three-month moving window before plotting.",
            t2.name.to_lowercase()
        ),
    );
    l.push(
        "figure_caption",
        BODY,
        30.0,
        format!("Figure {tno}. Monthly {} for {s2}.", t2.name.to_lowercase()),
    );
    l.push("figure", (160.0, 840.0), 240.0, String::new());
    l.push(
        "text_block",
        BODY,
        80.0,
        format!(
            "Figure {tno} indicates that {} {} during the second half of the year, while {} \
             remained close to its long-run average.",
            t2.params[0],
            pick(&mut rng, t2.verbs),
            t2.params[1]
        ),
    );
    l.push("text_block", BODY, 70.0, pick(&mut rng, ASIDES).to_string());
    l.y = l.y.max(1330.0).min(1340.0);
    l.push("page_footer", BODY, 30.0, format!("{}", index + 1));

    RawPage {
        page_id: format!("syn-{:03}", index + 1),
        width_px: PAGE_WIDTH,
        height_px: PAGE_HEIGHT,
        already_normalized: false,
        elements: l.elements,
    }
}

/// `pages` synthetic pages.
pub fn synthetic_corpus(pages: usize, seed: u64) -> Vec<RawPage> {
    (0..pages).map(|i| synthetic_page(i, seed)).collect()
}
