//! Cross-track footprint comparison.
//!
//! Units of the same page built from different parser tracks are paired by
//! greedy maximum IoU of their footprints; the report aggregates per track
//! pair.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{Bbox, EvidenceUnit};

/// Units of one track, keyed by page id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackResult {
    pub track_name: String,
    pub pages: BTreeMap<String, Vec<EvidenceUnit>>,
}

impl TrackResult {
    pub fn new(track_name: impl Into<String>) -> Self {
        Self {
            track_name: track_name.into(),
            pages: BTreeMap::new(),
        }
    }

    /// Groups a flat unit list by page.
    pub fn from_units(track_name: impl Into<String>, eus: impl IntoIterator<Item = EvidenceUnit>) -> Self {
        let mut t = Self::new(track_name);
        for eu in eus {
            t.pages.entry(eu.page_id.clone()).or_default().push(eu);
        }
        t
    }
}

/// One pairing. Either side is `None` for an unmatched unit (IoU 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuMatch {
    pub a: Option<String>,
    pub b: Option<String>,
    pub iou: f64,
    pub members_a: usize,
    pub members_b: usize,
}

fn bbox_key(b: &Bbox) -> [u64; 4] {
    b.to_array().map(f64::to_bits)
}

/// Greedy maximum-IoU matching: repeatedly take the highest-IoU pair of
/// still-unmatched units with IoU > 0. Ties are broken by a key that does
/// not depend on argument order, so swapping `a` and `b` swaps the pairs.
pub fn match_eus(a: &[EvidenceUnit], b: &[EvidenceUnit]) -> Vec<EuMatch> {
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let iou = x.footprint.iou(&y.footprint);
            if iou > 0.0 {
                cands.push((iou, i, j));
            }
        }
    }
    let sym_key = |i: usize, j: usize| {
        let (x, y) = (&a[i], &b[j]);
        let ids = if x.eu_id <= y.eu_id { (&x.eu_id, &y.eu_id) } else { (&y.eu_id, &x.eu_id) };
        let (kx, ky) = (bbox_key(&x.footprint), bbox_key(&y.footprint));
        let boxes = if kx <= ky { (kx, ky) } else { (ky, kx) };
        (ids, boxes)
    };
    cands.sort_by(|p, q| {
        q.0.total_cmp(&p.0)
            .then_with(|| sym_key(p.1, p.2).cmp(&sym_key(q.1, q.2)))
    });
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut out = Vec::new();
    for (iou, i, j) in cands {
        if used_a[i] || used_b[j] {
            continue;
        }
        used_a[i] = true;
        used_b[j] = true;
        out.push(EuMatch {
            a: Some(a[i].eu_id.clone()),
            b: Some(b[j].eu_id.clone()),
            iou,
            members_a: a[i].members.len(),
            members_b: b[j].members.len(),
        });
    }
    for x in a.iter().zip(&used_a).filter(|(_, u)| !**u).map(|(x, _)| x) {
        out.push(EuMatch {
            a: Some(x.eu_id.clone()),
            b: None,
            iou: 0.0,
            members_a: x.members.len(),
            members_b: 0,
        });
    }
    for y in b.iter().zip(&used_b).filter(|(_, u)| !**u).map(|(y, _)| y) {
        out.push(EuMatch {
            a: None,
            b: Some(y.eu_id.clone()),
            iou: 0.0,
            members_a: 0,
            members_b: y.members.len(),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageComparison {
    pub page_id: String,
    pub matches: Vec<EuMatch>,
    /// Highest pair IoU on the page (the converging region), 0 when none.
    pub best_iou: f64,
    /// Mean over all entries, unmatched units counting as 0.
    pub mean_iou: f64,
}

/// Number of equal-width IoU buckets over `[0, 1]`; 1.0 falls in the last.
pub const HISTOGRAM_BUCKETS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub track_a: String,
    pub track_b: String,
    pub pages: Vec<PageComparison>,
    /// Mean / min over matched pairs on all compared pages.
    pub mean_iou: Option<f64>,
    pub min_iou: Option<f64>,
    pub mean_best_iou: Option<f64>,
    pub histogram: [usize; HISTOGRAM_BUCKETS],
    /// Matched pairs whose footprints coincide exactly.
    pub exact_matches: usize,
    pub matched: usize,
    pub unmatched_a: usize,
    pub unmatched_b: usize,
    /// Pages present in only one of the two tracks.
    pub uncomparable: Vec<Uncomparable>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Uncomparable {
    pub page_id: String,
    pub missing_in: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub tracks: Vec<String>,
    pub pairs: Vec<PairReport>,
}

fn bucket(iou: f64) -> usize {
    ((iou * HISTOGRAM_BUCKETS as f64).floor() as usize).min(HISTOGRAM_BUCKETS - 1)
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Compares two tracks page by page.
pub fn compare_tracks(a: &TrackResult, b: &TrackResult) -> PairReport {
    let mut uncomparable = Vec::new();
    let ids: BTreeSet<&String> = a.pages.keys().chain(b.pages.keys()).collect();
    let mut pages = Vec::new();
    let mut matched_ious = Vec::new();
    let mut bests = Vec::new();
    let mut histogram = [0usize; HISTOGRAM_BUCKETS];
    let (mut unmatched_a, mut unmatched_b, mut exact) = (0, 0, 0);
    for id in ids {
        let (Some(pa), Some(pb)) = (a.pages.get(id), b.pages.get(id)) else {
            let missing_in = if a.pages.contains_key(id) { &b.track_name } else { &a.track_name };
            uncomparable.push(Uncomparable {
                page_id: id.clone(),
                missing_in: missing_in.clone(),
            });
            continue;
        };
        let matches = match_eus(pa, pb);
        for m in &matches {
            match (&m.a, &m.b) {
                (Some(_), Some(_)) => {
                    matched_ious.push(m.iou);
                    histogram[bucket(m.iou)] += 1;
                    if m.iou == 1.0 {
                        exact += 1;
                    }
                }
                (Some(_), None) => unmatched_a += 1,
                _ => unmatched_b += 1,
            }
        }
        let best_iou = matches.iter().map(|m| m.iou).fold(0.0, f64::max);
        let all: Vec<f64> = matches.iter().map(|m| m.iou).collect();
        bests.push(best_iou);
        pages.push(PageComparison {
            page_id: id.clone(),
            best_iou,
            mean_iou: mean(&all).unwrap_or(0.0),
            matches,
        });
    }
    PairReport {
        track_a: a.track_name.clone(),
        track_b: b.track_name.clone(),
        pages,
        mean_iou: mean(&matched_ious),
        min_iou: matched_ious.iter().copied().reduce(f64::min),
        mean_best_iou: mean(&bests),
        histogram,
        exact_matches: exact,
        matched: matched_ious.len(),
        unmatched_a,
        unmatched_b,
        uncomparable,
    }
}

/// All unordered track pairs, in input order.
pub fn convergence_report(tracks: &[TrackResult]) -> ConvergenceReport {
    let mut pairs = Vec::new();
    for i in 0..tracks.len() {
        for j in i + 1..tracks.len() {
            pairs.push(compare_tracks(&tracks[i], &tracks[j]));
        }
    }
    ConvergenceReport {
        tracks: tracks.iter().map(|t| t.track_name.clone()).collect(),
        pairs,
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    track_a: &'a str,
    track_b: &'a str,
    page_id: &'a str,
    best_iou: Option<f64>,
    mean_iou: Option<f64>,
    min_iou: Option<f64>,
    matched: usize,
    exact_matches: usize,
    unmatched_a: usize,
    unmatched_b: usize,
}

impl ConvergenceReport {
    pub fn pair(&self, a: &str, b: &str) -> Option<&PairReport> {
        self.pairs
            .iter()
            .find(|p| (p.track_a == a && p.track_b == b) || (p.track_a == b && p.track_b == a))
    }

    /// Per-page rows followed by one `*` aggregate row per track pair.
    pub fn to_csv(&self) -> Result<String, Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.pairs {
            for pg in &p.pages {
                let matched: Vec<f64> = pg
                    .matches
                    .iter()
                    .filter(|m| m.a.is_some() && m.b.is_some())
                    .map(|m| m.iou)
                    .collect();
                w.serialize(CsvRow {
                    track_a: &p.track_a,
                    track_b: &p.track_b,
                    page_id: &pg.page_id,
                    best_iou: Some(pg.best_iou),
                    mean_iou: Some(pg.mean_iou),
                    min_iou: matched.iter().copied().reduce(f64::min),
                    matched: matched.len(),
                    exact_matches: matched.iter().filter(|&&x| x == 1.0).count(),
                    unmatched_a: pg.matches.iter().filter(|m| m.b.is_none()).count(),
                    unmatched_b: pg.matches.iter().filter(|m| m.a.is_none()).count(),
                })?;
            }
            w.serialize(CsvRow {
                track_a: &p.track_a,
                track_b: &p.track_b,
                page_id: "*",
                best_iou: p.mean_best_iou,
                mean_iou: p.mean_iou,
                min_iou: p.min_iou,
                matched: p.matched,
                exact_matches: p.exact_matches,
                unmatched_a: p.unmatched_a,
                unmatched_b: p.unmatched_b,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io {
            path: "<csv buffer>".into(),
            source: e.into_error(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `convergence.json` and `convergence.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), Error> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let json = dir.join("convergence.json");
        std::fs::write(&json, serde_json::to_string_pretty(self)? + "\n").map_err(io(&json))?;
        let csv = dir.join("convergence.csv");
        std::fs::write(&csv, self.to_csv()?).map_err(io(&csv))?;
        Ok(())
    }
}
