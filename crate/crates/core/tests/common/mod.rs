#![allow(dead_code)]

use std::path::PathBuf;

use eu_core::builder::{Builder, PageBuild};
use eu_core::decision::RuleChain;
use eu_core::embed::HashNgramEmbedder;
use eu_core::ingest::{load_canonical, IngestConfig};
use eu_core::model::{Bbox, CanonRole, ConstructionParams, EvidenceUnit, LayoutElement};
use eu_core::pipeline::{build_one, prepare_pages};
use eu_core::roles::{RoleNormalizer, TypeMap};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Track name and parser label table of each worked-example fixture.
pub const TRACKS: [&str; 5] = ["gt", "parser_a", "docling", "paddleocr", "mineru"];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn worked_example(track: &str) -> PathBuf {
    data_dir().join("worked_example").join(format!("{track}.json"))
}

/// Loads one worked-example track and assigns roles with that track's
/// label table.
pub fn load_track(track: &str) -> Vec<LayoutElement> {
    let raws = load_canonical(&worked_example(track)).expect("fixture loads");
    let provider = HashNgramEmbedder::default();
    let normalizer = RoleNormalizer::new(TypeMap::seeded(), &provider, ConstructionParams::default()).unwrap();
    let mut pages = prepare_pages(&raws, &IngestConfig::default(), &normalizer, track).unwrap();
    assert_eq!(pages.len(), 1);
    pages.remove(0)
}

/// Builds and validates one track with the default chain.
pub fn build_track(track: &str) -> (Vec<LayoutElement>, PageBuild) {
    let elements = load_track(track);
    let provider = HashNgramEmbedder::default();
    let params = ConstructionParams::default();
    let chain = RuleChain::default_chain(&params);
    let builder = Builder::new(params, &provider).with_rules(chain.active_rules());
    let build = build_one(&elements, &builder, Some(&chain)).unwrap();
    (elements, build)
}

/// The unit holding `element_id`.
pub fn unit_of<'a>(eus: &'a [EvidenceUnit], element_id: &str) -> &'a EvidenceUnit {
    eus.iter()
        .find(|u| u.members.iter().any(|m| m == element_id))
        .unwrap_or_else(|| panic!("{element_id} is in no unit"))
}

pub fn element(id: &str, role: CanonRole, order: u32, b: [f64; 4], text: &str) -> LayoutElement {
    LayoutElement {
        element_id: id.into(),
        page_id: "p".into(),
        raw_label: role.as_str().into(),
        subtype: None,
        canon_role: Some(role),
        bbox: Bbox::new(b[0], b[1], b[2], b[3]).unwrap(),
        order,
        text: text.into(),
        embedding: None,
        excluded: false,
    }
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-0.5..1.0)).collect()
}

const ROLES: [CanonRole; 8] = CanonRole::ALL;

/// A page of up to `max_elements` elements with random roles, boxes,
/// texts and vectors. Some elements are page furniture (`excluded`), some
/// labels are captions or footnotes.
pub fn random_page(rng: &mut ChaCha8Rng, page_id: &str, max_elements: usize, dim: usize) -> Vec<LayoutElement> {
    let n = rng.gen_range(1..=max_elements);
    let mut orders: Vec<u32> = (0..n as u32).collect();
    // occasional gaps in the reading order
    for o in orders.iter_mut() {
        *o *= rng.gen_range(1..3);
    }
    orders.sort_unstable();
    orders.dedup();
    orders
        .into_iter()
        .enumerate()
        .map(|(i, order)| {
            let role = ROLES[rng.gen_range(0..ROLES.len())];
            let x1 = rng.gen_range(0.0..0.9);
            let y1: f64 = rng.gen_range(0.0..0.95);
            let w = rng.gen_range(0.0..(1.0 - x1));
            let h = rng.gen_range(0.0..(1.0 - y1).min(0.3));
            let raw_label = match rng.gen_range(0..6) {
                0 => "table_caption".to_string(),
                1 => "figure_footnote".to_string(),
                _ => role.as_str().to_string(),
            };
            let numbers: Vec<String> = (0..rng.gen_range(0..4)).map(|_| rng.gen_range(0..50).to_string()).collect();
            LayoutElement {
                element_id: format!("{page_id}#{i}"),
                page_id: page_id.into(),
                raw_label,
                subtype: None,
                canon_role: Some(role),
                bbox: Bbox::new(x1, y1, x1 + w, y1 + h).unwrap(),
                order,
                text: format!("element {i} {}", numbers.join(" ")),
                embedding: rng.gen_bool(0.9).then(|| random_vector(rng, dim)),
                excluded: rng.gen_bool(0.1),
            }
        })
        .collect()
}
