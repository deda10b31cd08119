//! Canonical role assignment.
//!
//! Each element goes through a strict cascade: text patterns first, then the
//! per-parser label table, then embedding similarity against role anchors,
//! and finally `plain_text`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingProvider;
use crate::error::{EmbedError, Error, ModelError};
use crate::model::{cosine_sim, CanonRole, ConstructionParams, LayoutElement};

/// Characters of element text inspected by the unit-label pattern.
pub const UNIT_PATTERN_WINDOW: usize = 40;

fn unit_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\(?\s*\b[Uu]nit\s*:").expect("valid unit regex"))
}

fn topic_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\[.+\]$").expect("valid topic regex"))
}

/// Priority-1 text patterns.
pub fn match_pattern(text: &str) -> Option<CanonRole> {
    let window: String = text.chars().take(UNIT_PATTERN_WINDOW).collect();
    if unit_re().is_match(&window) {
        return Some(CanonRole::UnitLabel);
    }
    if topic_re().is_match(text.trim()) {
        return Some(CanonRole::TopicTitle);
    }
    None
}

/// Parser label table: parser name -> lowercase raw label -> role.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeMap {
    parsers: BTreeMap<String, BTreeMap<String, CanonRole>>,
}

const SECTION: CanonRole = CanonRole::SectionHeader;
const PARA: CanonRole = CanonRole::SupportParagraph;

fn seed(parser: &str) -> Vec<(&'static str, CanonRole)> {
    let parser_a: Vec<(&str, CanonRole)> = vec![
        ("SectionHeader", SECTION),
        ("Title", SECTION),
        ("Paragraph", PARA),
        ("Table", CanonRole::Table),
        ("Chart", CanonRole::Chart),
        ("Picture", CanonRole::Picture),
        ("Caption", PARA),
    ];
    let vendor: Vec<(&str, CanonRole)> = vec![
        ("title", SECTION),
        ("heading", SECTION),
        ("H1", SECTION),
        ("H2", SECTION),
        ("text", PARA),
        ("paragraph", PARA),
        ("Body", PARA),
        ("table", CanonRole::Table),
        ("TableBlock", CanonRole::Table),
        ("figure", CanonRole::Picture),
        ("image", CanonRole::Picture),
    ];
    match parser {
        "parser_a" => parser_a,
        "gt" => parser_a
            .into_iter()
            .chain([
                ("text_block", PARA),
                ("figure", CanonRole::Picture),
                ("table_caption", PARA),
                ("figure_caption", PARA),
                ("table_footnote", PARA),
                ("figure_footnote", PARA),
            ])
            .collect(),
        "mineru" => vendor
            .into_iter()
            .chain([
                ("table_caption", PARA),
                ("table_footnote", PARA),
                ("image_caption", PARA),
                ("image_footnote", PARA),
            ])
            .collect(),
        "docling" => vendor
            .into_iter()
            .chain([
                ("section_header", SECTION),
                ("picture", CanonRole::Picture),
                ("chart", CanonRole::Chart),
                ("caption", PARA),
                ("footnote", PARA),
                ("list_item", PARA),
            ])
            .collect(),
        "paddleocr" => vendor
            .into_iter()
            .chain([
                ("paragraph_title", SECTION),
                ("doc_title", SECTION),
                ("chart", CanonRole::Chart),
                ("figure_title", PARA),
                ("table_title", PARA),
            ])
            .collect(),
        _ => Vec::new(),
    }
}

pub const SEEDED_PARSERS: [&str; 5] = ["parser_a", "gt", "mineru", "docling", "paddleocr"];

impl TypeMap {
    /// Label tables for the known parsers, plus a `canonical` table holding
    /// every seeded alias.
    pub fn seeded() -> Self {
        let mut map = TypeMap::default();
        for p in SEEDED_PARSERS {
            for (label, role) in seed(p) {
                map.insert(p, label, role).expect("seed table is consistent");
                map.insert("canonical", label, role).expect("seed table is consistent");
            }
        }
        map
    }

    /// Adds an entry; a label already mapped to a different role for the
    /// same parser is rejected.
    pub fn insert(&mut self, parser: &str, label: &str, role: CanonRole) -> Result<(), ModelError> {
        let table = self.parsers.entry(parser.to_ascii_lowercase()).or_default();
        let key = label.to_ascii_lowercase();
        match table.get(&key) {
            Some(existing) if *existing != role => Err(ModelError::ParamValue {
                name: format!("typemap.{parser}.{label}"),
                value: format!("{existing} vs {role}"),
            }),
            _ => {
                table.insert(key, role);
                Ok(())
            }
        }
    }

    pub fn lookup(&self, parser: &str, raw_label: &str) -> Option<CanonRole> {
        self.parsers
            .get(&parser.to_ascii_lowercase())?
            .get(&raw_label.to_ascii_lowercase())
            .copied()
    }

    /// Loads `{"parser": {"label": "role", ..}, ..}` and lays it over the
    /// seeded tables. Conflicting case variants inside the file are errors.
    pub fn load_overrides(path: &Path) -> Result<Self, Error> {
        let raw = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: BTreeMap<String, BTreeMap<String, CanonRole>> = serde_json::from_str(&raw)?;
        let mut overrides = TypeMap::default();
        for (parser, labels) in &file {
            for (label, role) in labels {
                overrides.insert(parser, label, *role)?;
            }
        }
        let mut base = TypeMap::seeded();
        for (parser, labels) in overrides.parsers {
            base.parsers.entry(parser).or_default().extend(labels);
        }
        Ok(base)
    }
}

/// Free-function form of [`TypeMap::lookup`] over the seeded tables.
pub fn lookup_typemap(parser: &str, raw_label: &str) -> Option<CanonRole> {
    static SEEDED: OnceLock<TypeMap> = OnceLock::new();
    SEEDED.get_or_init(TypeMap::seeded).lookup(parser, raw_label)
}

/// Reference vectors for the fallback-eligible roles: the role name and each
/// of its aliases, embedded by the active provider.
#[derive(Debug, Clone, Default)]
pub struct RoleAnchorEmbeddings {
    anchors: Vec<(CanonRole, Vec<(String, Vec<f64>)>)>,
}

impl RoleAnchorEmbeddings {
    pub fn build(provider: &dyn EmbeddingProvider) -> Result<Self, EmbedError> {
        let mut anchors = Vec::new();
        for role in CanonRole::ALL {
            if role.fallback_threshold().is_none() {
                continue;
            }
            let mut names: Vec<String> = std::iter::once(role.as_str())
                .chain(role.aliases().iter().copied())
                .map(str::to_ascii_lowercase)
                .collect();
            names.dedup();
            let mut vectors = Vec::new();
            for name in names {
                if vectors.iter().any(|(n, _)| *n == name) {
                    continue;
                }
                match provider.embed(&name) {
                    Ok(v) => vectors.push((name, v)),
                    Err(EmbedError::Missing(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            anchors.push((role, vectors));
        }
        Ok(Self { anchors })
    }

    /// Highest similarity of `v` to each role's anchors, in role order.
    pub fn similarities(&self, v: &[f64]) -> Result<Vec<(CanonRole, f64)>, EmbedError> {
        self.anchors
            .iter()
            .map(|(role, vecs)| {
                let mut best = f64::NEG_INFINITY;
                for (_, a) in vecs {
                    best = best.max(cosine_sim(v, a)?);
                }
                Ok((*role, best))
            })
            .collect()
    }
}

/// Priority-3 embedding fallback for an unmapped raw label.
pub fn fallback_role(
    raw_label: &str,
    anchors: &RoleAnchorEmbeddings,
    provider: &dyn EmbeddingProvider,
    params: &ConstructionParams,
) -> Result<Option<CanonRole>, EmbedError> {
    let wrap = |e: EmbedError| EmbedError::Label {
        label: raw_label.to_string(),
        source: Box::new(e),
    };
    let v = match provider.embed(&raw_label.to_ascii_lowercase()) {
        Ok(v) => v,
        // no vector for the label: nothing to compare, so it stays unresolved
        Err(EmbedError::Missing(_)) => return Ok(None),
        Err(e) => return Err(wrap(e)),
    };
    let sims = anchors.similarities(&v).map_err(wrap)?;
    let mut best: Option<(CanonRole, f64)> = None;
    for (role, s) in sims {
        // Strict comparison keeps the earlier role on ties.
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((role, s));
        }
    }
    Ok(best.and_then(|(role, s)| {
        let threshold = params.fallback_threshold(role)?;
        (s >= threshold).then_some(role)
    }))
}

/// Stage-1 normalizer bundling the label table, anchors and provider.
pub struct RoleNormalizer<'a> {
    pub typemap: TypeMap,
    pub anchors: RoleAnchorEmbeddings,
    pub provider: &'a dyn EmbeddingProvider,
    pub params: ConstructionParams,
    /// Role given to figure-like labels without a `chart` subtype.
    pub figure_default: CanonRole,
}

impl<'a> RoleNormalizer<'a> {
    pub fn new(
        typemap: TypeMap,
        provider: &'a dyn EmbeddingProvider,
        params: ConstructionParams,
    ) -> Result<Self, EmbedError> {
        Ok(Self {
            typemap,
            anchors: RoleAnchorEmbeddings::build(provider)?,
            provider,
            params,
            figure_default: CanonRole::Picture,
        })
    }

    /// Role for a single element following the priority cascade.
    pub fn resolve(&self, el: &LayoutElement, parser: &str) -> Result<CanonRole, EmbedError> {
        if let Some(role) = match_pattern(&el.text) {
            return Ok(role);
        }
        if let Some(role) = self.typemap.lookup(parser, &el.raw_label) {
            return Ok(self.refine_visual(role, el));
        }
        match fallback_role(&el.raw_label, &self.anchors, self.provider, &self.params)? {
            Some(role) => Ok(self.refine_visual(role, el)),
            None => Ok(CanonRole::PlainText),
        }
    }

    fn refine_visual(&self, role: CanonRole, el: &LayoutElement) -> CanonRole {
        if role != CanonRole::Picture {
            return role;
        }
        match el.subtype.as_deref() {
            Some(s) if s.eq_ignore_ascii_case("chart") => CanonRole::Chart,
            Some(s) if s.eq_ignore_ascii_case("picture") || s.eq_ignore_ascii_case("image") => {
                CanonRole::Picture
            }
            _ => self.figure_default,
        }
    }

    /// Sets `canon_role` on every element.
    pub fn normalize_roles(&self, elements: &mut [LayoutElement], parser: &str) -> Result<(), EmbedError> {
        for el in elements.iter_mut() {
            el.canon_role = Some(self.resolve(el, parser)?);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::HashNgramEmbedder;
    use crate::model::Bbox;

    fn el(label: &str, text: &str) -> LayoutElement {
        LayoutElement {
            element_id: "e".into(),
            page_id: "p".into(),
            raw_label: label.into(),
            subtype: None,
            canon_role: None,
            bbox: Bbox::new(0.0, 0.0, 1.0, 0.1).unwrap(),
            order: 0,
            text: text.into(),
            embedding: None,
            excluded: false,
        }
    }

    #[test]
    fn patterns() {
        assert_eq!(match_pattern("(Unit: million)"), Some(CanonRole::UnitLabel));
        assert_eq!(match_pattern("( unit : %)"), Some(CanonRole::UnitLabel));
        assert_eq!(match_pattern("[R&D Projects]"), Some(CanonRole::TopicTitle));
        assert_eq!(match_pattern("  [Overview]  "), Some(CanonRole::TopicTitle));
        assert_eq!(match_pattern("Revenue grew 4%."), None);
        assert_eq!(match_pattern("[]"), None);
        assert_eq!(match_pattern("The subunit: assembly"), None);
    }

    #[test]
    fn unit_pattern_only_in_prefix_window() {
        let late = format!("{} (Unit: kg)", "x".repeat(60));
        assert_eq!(match_pattern(&late), None);
    }

    #[test]
    fn typemap_lookups() {
        assert_eq!(lookup_typemap("docling", "heading"), Some(CanonRole::SectionHeader));
        assert_eq!(lookup_typemap("mineru", "title"), Some(CanonRole::SectionHeader));
        assert_eq!(lookup_typemap("parser_a", "SectionHeader"), Some(CanonRole::SectionHeader));
        assert_eq!(lookup_typemap("paddleocr", "title"), Some(CanonRole::SectionHeader));
        assert_eq!(lookup_typemap("DOCLING", "HEADING"), Some(CanonRole::SectionHeader));
        assert_eq!(lookup_typemap("unknownparser", "blob"), None);
        assert_eq!(lookup_typemap("gt", "Table"), Some(CanonRole::Table));
    }

    #[test]
    fn typemap_rejects_conflicting_entries() {
        let mut m = TypeMap::default();
        m.insert("x", "Title", CanonRole::SectionHeader).unwrap();
        m.insert("x", "title", CanonRole::SectionHeader).unwrap();
        assert!(m.insert("x", "TITLE", CanonRole::Table).is_err());
    }

    #[test]
    fn fallback_exact_alias_is_assigned() {
        let p = HashNgramEmbedder::default();
        let anchors = RoleAnchorEmbeddings::build(&p).unwrap();
        let params = ConstructionParams::default();
        assert_eq!(fallback_role("TableBlock", &anchors, &p, &params).unwrap(), Some(CanonRole::Table));
        assert_eq!(fallback_role("heading", &anchors, &p, &params).unwrap(), Some(CanonRole::SectionHeader));
    }

    #[test]
    fn fallback_gibberish_is_below_every_threshold() {
        let p = HashNgramEmbedder::default();
        let anchors = RoleAnchorEmbeddings::build(&p).unwrap();
        let v = p.embed("zzqx").unwrap();
        let sims = anchors.similarities(&v).unwrap();
        let params = ConstructionParams::default();
        for (role, s) in &sims {
            assert!(*s < params.fallback_threshold(*role).unwrap(), "{role}: {s}");
        }
        assert_eq!(fallback_role("zzqx", &anchors, &p, &params).unwrap(), None);
    }

    /// Provider returning fixed vectors so similarities are exact.
    struct Fixed;

    impl EmbeddingProvider for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn dim(&self) -> usize {
            2
        }
        fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
            match text {
                "section_header" => Ok(vec![1.0, 0.0]),
                "atthreshold" => Ok(vec![4.0, 3.0]),
                "below" => Ok(vec![0.79, 0.613_3]),
                "boom" => Err(EmbedError::Dimension { expected: 2, found: 3 }),
                _ => Err(EmbedError::Missing(text.into())),
            }
        }
    }

    #[test]
    fn fallback_threshold_is_inclusive() {
        let anchors = RoleAnchorEmbeddings::build(&Fixed).unwrap();
        let params = ConstructionParams::default();
        // cos([4,3],[1,0]) = 4/5 = 0.80 exactly.
        assert_eq!(
            fallback_role("atthreshold", &anchors, &Fixed, &params).unwrap(),
            Some(CanonRole::SectionHeader)
        );
        assert_eq!(fallback_role("below", &anchors, &Fixed, &params).unwrap(), None);
    }

    #[test]
    fn fallback_provider_error_carries_label() {
        let anchors = RoleAnchorEmbeddings::build(&Fixed).unwrap();
        let err = fallback_role("boom", &anchors, &Fixed, &ConstructionParams::default()).unwrap_err();
        assert!(matches!(err, EmbedError::Label { ref label, .. } if label == "boom"));
    }

    #[test]
    fn label_without_vector_is_unresolved() {
        let anchors = RoleAnchorEmbeddings::build(&Fixed).unwrap();
        let params = ConstructionParams::default();
        assert_eq!(fallback_role("alien", &anchors, &Fixed, &params).unwrap(), None);
    }

    #[test]
    fn cascade_order() {
        let p = HashNgramEmbedder::default();
        let n = RoleNormalizer::new(TypeMap::seeded(), &p, ConstructionParams::default()).unwrap();
        assert_eq!(n.resolve(&el("text", "(Unit: mg/L)"), "gt").unwrap(), CanonRole::UnitLabel);
        assert_eq!(n.resolve(&el("Table", "a b c"), "gt").unwrap(), CanonRole::Table);
        assert_eq!(n.resolve(&el("zzqx", "body"), "gt").unwrap(), CanonRole::PlainText);
        assert_eq!(n.resolve(&el("Table", "[Key Figures]"), "gt").unwrap(), CanonRole::TopicTitle);
        // Unknown parser, alias label: resolved by the embedding fallback.
        assert_eq!(n.resolve(&el("TableBlock", "1 2 3"), "newparser").unwrap(), CanonRole::Table);
    }

    #[test]
    fn figure_subtype_selects_chart() {
        let p = HashNgramEmbedder::default();
        let mut n = RoleNormalizer::new(TypeMap::seeded(), &p, ConstructionParams::default()).unwrap();
        let mut fig = el("figure", "");
        assert_eq!(n.resolve(&fig, "mineru").unwrap(), CanonRole::Picture);
        fig.subtype = Some("chart".into());
        assert_eq!(n.resolve(&fig, "mineru").unwrap(), CanonRole::Chart);
        n.figure_default = CanonRole::Chart;
        assert_eq!(n.resolve(&el("image", ""), "docling").unwrap(), CanonRole::Chart);
    }

    #[test]
    fn normalize_is_deterministic() {
        let p = HashNgramEmbedder::default();
        let n = RoleNormalizer::new(TypeMap::seeded(), &p, ConstructionParams::default()).unwrap();
        let mut a = vec![el("heading", "Intro"), el("weird", "x"), el("text", "(Unit: %)")];
        let mut b = a.clone();
        n.normalize_roles(&mut a, "docling").unwrap();
        n.normalize_roles(&mut b, "docling").unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.iter().all(|e| e.canon_role.is_some()));
    }
}
