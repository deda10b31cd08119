//! Shared domain types: normalized bounding boxes, canonical roles, layout
//! elements, evidence units and the construction parameter set.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Axis-aligned box in normalized page coordinates (`x` rightward, `y` downward).
///
/// Serialized as `[x1, y1, x2, y2]`. Zero-area boxes are legal; some parsers
/// emit line-shaped regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct Bbox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl Bbox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, ModelError> {
        let coords = [x1, y1, x2, y2];
        if coords.iter().any(|c| !c.is_finite() || *c < 0.0 || *c > 1.0) {
            return Err(ModelError::BboxOutOfRange(coords));
        }
        if x2 < x1 || y2 < y1 {
            return Err(ModelError::BboxInverted(coords));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// Normalizes a pixel-space box by the page dimensions, clamping each
    /// coordinate into `[0, 1]`.
    pub fn from_pixels(px: [f64; 4], width: f64, height: f64) -> Result<Self, ModelError> {
        if !(width > 0.0 && height > 0.0) {
            return Err(ModelError::PageDimensions { width, height });
        }
        let clamp = |v: f64| v.clamp(0.0, 1.0);
        Self::new(
            clamp(px[0] / width),
            clamp(px[1] / height),
            clamp(px[2] / width),
            clamp(px[3] / height),
        )
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center_x(&self) -> f64 {
        (self.x1 + self.x2) / 2.0
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// Smallest box enclosing both inputs.
    pub fn union(&self, other: &Bbox) -> Bbox {
        Bbox {
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
            x2: self.x2.max(other.x2),
            y2: self.y2.max(other.y2),
        }
    }

    /// Envelope of a non-empty collection of boxes; `None` when empty.
    pub fn envelope<'a, I>(boxes: I) -> Option<Bbox>
    where
        I: IntoIterator<Item = &'a Bbox>,
    {
        boxes.into_iter().fold(None, |acc, b| match acc {
            None => Some(*b),
            Some(a) => Some(a.union(b)),
        })
    }

    pub fn intersection_area(&self, other: &Bbox) -> f64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Intersection over union. When both boxes have zero area the result is
    /// 1.0 for identical boxes and 0.0 otherwise.
    pub fn iou(&self, other: &Bbox) -> f64 {
        let (a, b) = (self.area(), other.area());
        if a == 0.0 && b == 0.0 {
            return if self == other { 1.0 } else { 0.0 };
        }
        let inter = self.intersection_area(other);
        let union = a + b - inter;
        if union <= 0.0 {
            return 0.0;
        }
        (inter / union).clamp(0.0, 1.0)
    }

    pub fn contains(&self, other: &Bbox) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && self.x2 >= other.x2 && self.y2 >= other.y2
    }

    /// Nonnegative vertical distance between the two boxes; 0 when their
    /// y-ranges overlap or touch.
    pub fn vertical_gap(&self, other: &Bbox) -> f64 {
        (other.y1 - self.y2).max(self.y1 - other.y2).max(0.0)
    }

    pub fn horizontal_overlap(&self, other: &Bbox) -> f64 {
        (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0)
    }
}

impl From<Bbox> for [f64; 4] {
    fn from(b: Bbox) -> Self {
        b.to_array()
    }
}

impl TryFrom<[f64; 4]> for Bbox {
    type Error = ModelError;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        Bbox::new(c[0], c[1], c[2], c[3])
    }
}

/// Standard cosine similarity. A zero-norm input yields 0.0 (no match).
pub fn cosine_sim(u: &[f64], v: &[f64]) -> Result<f64, ModelError> {
    if u.len() != v.len() {
        return Err(ModelError::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Parser-independent semantic role of a layout element.
///
/// Declaration order is the fixed tie-break order used by the embedding
/// fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonRole {
    SectionHeader,
    SupportParagraph,
    Table,
    Chart,
    Picture,
    UnitLabel,
    TopicTitle,
    PlainText,
}

impl CanonRole {
    pub const ALL: [CanonRole; 8] = [
        CanonRole::SectionHeader,
        CanonRole::SupportParagraph,
        CanonRole::Table,
        CanonRole::Chart,
        CanonRole::Picture,
        CanonRole::UnitLabel,
        CanonRole::TopicTitle,
        CanonRole::PlainText,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CanonRole::SectionHeader => "section_header",
            CanonRole::SupportParagraph => "support_paragraph",
            CanonRole::Table => "table",
            CanonRole::Chart => "chart",
            CanonRole::Picture => "picture",
            CanonRole::UnitLabel => "unit_label",
            CanonRole::TopicTitle => "topic_title",
            CanonRole::PlainText => "plain_text",
        }
    }

    /// Known parser label variants (altLabels) for the role.
    pub fn aliases(&self) -> &'static [&'static str] {
        match self {
            CanonRole::SectionHeader => &[
                "SectionHeader",
                "Title",
                "title",
                "heading",
                "H1",
                "H2",
                "SectionTitle",
                "section_header",
                "header",
            ],
            CanonRole::SupportParagraph => &["Paragraph", "text", "paragraph", "Body"],
            CanonRole::Table => &["Table", "table", "TableBlock"],
            CanonRole::Chart => &["Chart", "chart"],
            CanonRole::Picture => &["Picture", "figure", "image"],
            CanonRole::UnitLabel | CanonRole::TopicTitle | CanonRole::PlainText => &[],
        }
    }

    /// Minimum similarity for the embedding fallback to assign this role.
    /// Pattern-only roles and the fallback sink have none.
    pub fn fallback_threshold(&self) -> Option<f64> {
        match self {
            CanonRole::Table | CanonRole::Picture => Some(0.85),
            CanonRole::SectionHeader | CanonRole::SupportParagraph | CanonRole::Chart => Some(0.80),
            CanonRole::UnitLabel | CanonRole::TopicTitle | CanonRole::PlainText => None,
        }
    }

    pub fn is_visual(&self) -> bool {
        matches!(self, CanonRole::Table | CanonRole::Chart | CanonRole::Picture)
    }

    /// Roles that count as anchors for a visual unit and attach spatially.
    pub fn is_anchor(&self) -> bool {
        matches!(
            self,
            CanonRole::SectionHeader | CanonRole::UnitLabel | CanonRole::TopicTitle
        )
    }

    pub fn is_paragraph(&self) -> bool {
        matches!(self, CanonRole::SupportParagraph | CanonRole::PlainText)
    }
}

impl fmt::Display for CanonRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CanonRole {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CanonRole::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ModelError::UnknownRole(s.to_string()))
    }
}

/// Raw labels that designate a caption region.
pub fn is_caption_label(raw_label: &str) -> bool {
    let l = raw_label.to_ascii_lowercase();
    l.contains("caption") || matches!(l.as_str(), "figure_title" | "table_title" | "chart_title")
}

pub fn is_footnote_label(raw_label: &str) -> bool {
    raw_label.to_ascii_lowercase().contains("footnote")
}

/// One parsed layout region after normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutElement {
    pub element_id: String,
    pub page_id: String,
    pub raw_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
    #[serde(default)]
    pub canon_role: Option<CanonRole>,
    pub bbox: Bbox,
    pub order: u32,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default)]
    pub excluded: bool,
}

impl LayoutElement {
    /// Assigned role, or `plain_text` before normalization.
    pub fn role(&self) -> CanonRole {
        self.canon_role.unwrap_or(CanonRole::PlainText)
    }

    pub fn is_caption(&self) -> bool {
        is_caption_label(&self.raw_label)
    }

    pub fn is_footnote(&self) -> bool {
        is_footnote_label(&self.raw_label)
    }

    /// Elements that attach by spatial proximity in visual-core formation.
    pub fn is_structural(&self) -> bool {
        self.role().is_anchor() || (self.is_caption() && !self.role().is_visual())
    }
}

/// Kind of an evidence unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EuKind {
    TablePanel,
    ChartPanel,
    StatPanel,
    VisualPanel,
    SectionText,
    TextCluster,
}

impl EuKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EuKind::TablePanel => "table_panel",
            EuKind::ChartPanel => "chart_panel",
            EuKind::StatPanel => "stat_panel",
            EuKind::VisualPanel => "visual_panel",
            EuKind::SectionText => "section_text",
            EuKind::TextCluster => "text_cluster",
        }
    }

    pub fn is_visual(&self) -> bool {
        matches!(
            self,
            EuKind::TablePanel | EuKind::ChartPanel | EuKind::StatPanel | EuKind::VisualPanel
        )
    }

    /// Panel kind seeded by a single visual role.
    pub fn for_visual(role: CanonRole) -> Option<EuKind> {
        match role {
            CanonRole::Table => Some(EuKind::TablePanel),
            CanonRole::Chart => Some(EuKind::ChartPanel),
            CanonRole::Picture => Some(EuKind::VisualPanel),
            _ => None,
        }
    }
}

impl fmt::Display for EuKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A typed group of member elements covering one page region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceUnit {
    pub eu_id: String,
    pub kind: EuKind,
    pub members: Vec<String>,
    pub footprint: Bbox,
    #[serde(default)]
    pub page_id: String,
}

impl EvidenceUnit {
    /// Builds a unit from its members, ordering them by reading order and
    /// deriving the footprint envelope. Fails on an empty member list.
    pub fn from_members(
        eu_id: impl Into<String>,
        kind: EuKind,
        page_id: impl Into<String>,
        members: &[&LayoutElement],
    ) -> Result<Self, ModelError> {
        let eu_id = eu_id.into();
        let mut sorted: Vec<&LayoutElement> = members.to_vec();
        sorted.sort_by(|a, b| a.order.cmp(&b.order).then_with(|| a.element_id.cmp(&b.element_id)));
        let footprint = Bbox::envelope(sorted.iter().map(|e| &e.bbox))
            .ok_or_else(|| ModelError::EmptyUnit(eu_id.clone()))?;
        Ok(Self {
            eu_id,
            kind,
            members: sorted.iter().map(|e| e.element_id.clone()).collect(),
            footprint,
            page_id: page_id.into(),
        })
    }
}

/// Numeric knobs for unit construction and validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructionParams {
    pub max_gravity_reach: f64,
    pub x_weight: f64,
    pub stat_panel_gap: f64,
    pub tau: f64,
    pub label_reattach_dist: f64,
    pub c3_vgap: f64,
    pub c3_xalign: f64,
    pub c3_order_gap: u32,
    pub i2_overlap: f64,
    /// Optional cap on the reading-order distance for structural attachment.
    /// `None` leaves only header interposition as the gate.
    pub max_attach_order_gap: Option<u32>,
    pub fallback_sim: BTreeMap<CanonRole, f64>,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        let fallback_sim = CanonRole::ALL
            .iter()
            .filter_map(|r| r.fallback_threshold().map(|t| (*r, t)))
            .collect();
        Self {
            max_gravity_reach: 0.30,
            x_weight: 0.3,
            stat_panel_gap: 0.22,
            tau: 0.40,
            label_reattach_dist: 0.25,
            c3_vgap: 0.07,
            c3_xalign: 0.18,
            c3_order_gap: 3,
            i2_overlap: 0.60,
            max_attach_order_gap: None,
            fallback_sim,
        }
    }
}

impl ConstructionParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let reals = [
            ("max_gravity_reach", self.max_gravity_reach),
            ("x_weight", self.x_weight),
            ("stat_panel_gap", self.stat_panel_gap),
            ("tau", self.tau),
            ("label_reattach_dist", self.label_reattach_dist),
            ("c3_vgap", self.c3_vgap),
            ("c3_xalign", self.c3_xalign),
            ("i2_overlap", self.i2_overlap),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v <= 1.0) {
                return Err(ModelError::ParamRange {
                    name: name.to_string(),
                    value: v,
                });
            }
        }
        for (role, v) in &self.fallback_sim {
            if !(*v > 0.0 && *v <= 1.0) {
                return Err(ModelError::ParamRange {
                    name: format!("fallback_sim.{role}"),
                    value: *v,
                });
            }
        }
        if self.c3_order_gap < 1 {
            return Err(ModelError::ParamRange {
                name: "c3_order_gap".into(),
                value: self.c3_order_gap as f64,
            });
        }
        Ok(())
    }

    /// Fallback threshold for a role, honoring overrides.
    pub fn fallback_threshold(&self, role: CanonRole) -> Option<f64> {
        self.fallback_sim
            .get(&role)
            .copied()
            .or_else(|| role.fallback_threshold())
    }

    /// Applies a `key=value` override, as used by `--set`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        let mut next = self.clone();
        next.apply(key, value)?;
        next.validate()?;
        *self = next;
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        let bad = || ModelError::ParamValue {
            name: key.to_string(),
            value: value.to_string(),
        };
        let real = || value.trim().parse::<f64>().map_err(|_| bad());
        match key {
            "max_gravity_reach" => self.max_gravity_reach = real()?,
            "x_weight" => self.x_weight = real()?,
            "stat_panel_gap" => self.stat_panel_gap = real()?,
            "tau" => self.tau = real()?,
            "label_reattach_dist" => self.label_reattach_dist = real()?,
            "c3_vgap" => self.c3_vgap = real()?,
            "c3_xalign" => self.c3_xalign = real()?,
            "i2_overlap" => self.i2_overlap = real()?,
            "c3_order_gap" => self.c3_order_gap = value.trim().parse().map_err(|_| bad())?,
            "max_attach_order_gap" => {
                self.max_attach_order_gap = match value.trim() {
                    "" | "none" | "unlimited" => None,
                    v => Some(v.parse().map_err(|_| bad())?),
                }
            }
            other => match other.strip_prefix("fallback_sim.") {
                Some(role) => {
                    let role: CanonRole = role.parse()?;
                    self.fallback_sim.insert(role, real()?);
                }
                None => return Err(ModelError::UnknownParam(other.to_string())),
            },
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> Bbox {
        Bbox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn union_is_idempotent() {
        let a = bb(0.1, 0.1, 0.2, 0.2);
        assert_eq!(a.union(&a), a);
    }

    #[test]
    fn union_of_disjoint_boxes_is_envelope() {
        let u = bb(0.0, 0.0, 0.1, 0.1).union(&bb(0.5, 0.5, 0.6, 0.6));
        assert_eq!(u, bb(0.0, 0.0, 0.6, 0.6));
    }

    #[test]
    fn union_over_worked_example_members_spans_header_to_trailing_paragraph() {
        let spans = [(0.07, 0.16), (0.16, 0.27), (0.27, 0.57), (0.57, 0.64), (0.64, 0.70), (0.70, 0.82)];
        let boxes: Vec<Bbox> = spans.iter().map(|(a, b)| bb(0.1, *a, 0.9, *b)).collect();
        let env = Bbox::envelope(&boxes).unwrap();
        assert_eq!((env.y1(), env.y2()), (0.07, 0.82));
        assert!((env.height() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let a = bb(0.2, 0.3, 0.6, 0.9);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(bb(0.0, 0.0, 0.5, 0.5).iou(&bb(0.5, 0.5, 1.0, 1.0)), 0.0);
    }

    #[test]
    fn iou_of_nested_spans_is_height_ratio() {
        let a = bb(0.1, 0.07, 0.9, 0.82);
        let b = bb(0.1, 0.07, 0.9, 0.70);
        assert!((a.iou(&b) - 0.63 / 0.75).abs() < 1e-12);
    }

    #[test]
    fn iou_degenerate_boxes() {
        let line = bb(0.1, 0.5, 0.9, 0.5);
        assert_eq!(line.iou(&line), 1.0);
        assert_eq!(line.iou(&bb(0.1, 0.6, 0.9, 0.6)), 0.0);
        // zero-area against positive-area: intersection is zero.
        assert_eq!(line.iou(&bb(0.0, 0.0, 1.0, 1.0)), 0.0);
    }

    #[test]
    fn bbox_rejects_inverted_and_out_of_range() {
        assert!(Bbox::new(0.5, 0.1, 0.4, 0.2).is_err());
        assert!(Bbox::new(0.1, 0.1, 1.2, 0.2).is_err());
        assert!(Bbox::new(f64::NAN, 0.1, 0.2, 0.2).is_err());
    }

    #[test]
    fn bbox_from_pixels_divides_and_clamps() {
        let b = Bbox::from_pixels([100.0, 100.0, 200.0, 200.0], 1000.0, 1000.0).unwrap();
        assert_eq!(b, bb(0.1, 0.1, 0.2, 0.2));
        let c = Bbox::from_pixels([0.0, 10.0, 50.0, 1003.0], 100.0, 1000.0).unwrap();
        assert_eq!(c.y2(), 1.0);
        assert!(Bbox::from_pixels([0.0, 0.0, 1.0, 1.0], 0.0, 10.0).is_err());
    }

    #[test]
    fn bbox_serializes_as_array() {
        let b = bb(0.1, 0.2, 0.3, 0.4);
        assert_eq!(serde_json::to_string(&b).unwrap(), "[0.1,0.2,0.3,0.4]");
        let back: Bbox = serde_json::from_str("[0.1,0.2,0.3,0.4]").unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<Bbox>("[0.3,0.2,0.1,0.4]").is_err());
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_sim(&[0.3, -2.0, 5.0], &[0.3, -2.0, 5.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 1 / sqrt(2) by hand.
        assert!((cosine_sim(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - 0.707_106_781_186_547_5).abs() < 1e-9);
        assert_eq!(cosine_sim(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(cosine_sim(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn role_thresholds_match_mapping_table() {
        assert_eq!(CanonRole::Table.fallback_threshold(), Some(0.85));
        assert_eq!(CanonRole::Picture.fallback_threshold(), Some(0.85));
        assert_eq!(CanonRole::SectionHeader.fallback_threshold(), Some(0.80));
        assert_eq!(CanonRole::SupportParagraph.fallback_threshold(), Some(0.80));
        assert_eq!(CanonRole::Chart.fallback_threshold(), Some(0.80));
        assert_eq!(CanonRole::UnitLabel.fallback_threshold(), None);
        for r in CanonRole::ALL {
            assert_eq!(r.as_str().parse::<CanonRole>().unwrap(), r);
        }
    }

    #[test]
    fn params_defaults_validate_and_overrides() {
        let mut p = ConstructionParams::default();
        p.validate().unwrap();
        p.set("tau", "0.9").unwrap();
        assert_eq!(p.tau, 0.9);
        assert!(p.set("tau", "0").is_err());
        assert!(p.clone().set("c3_order_gap", "0").is_err());
        assert!(p.set("no_such_knob", "1").is_err());
        p.set("fallback_sim.table", "0.9").unwrap();
        assert_eq!(p.fallback_threshold(CanonRole::Table), Some(0.9));
    }

    fn arb_bbox() -> impl Strategy<Value = Bbox> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, b, c, d)| {
            Bbox::new(a.min(c), b.min(d), a.max(c), b.max(d)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn union_commutative_associative_containing(a in arb_bbox(), b in arb_bbox(), c in arb_bbox()) {
            prop_assert_eq!(a.union(&b), b.union(&a));
            prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
            let u = a.union(&b);
            prop_assert!(u.contains(&a) && u.contains(&b));
        }

        #[test]
        fn iou_symmetric_and_bounded(a in arb_bbox(), b in arb_bbox()) {
            let (ab, ba) = (a.iou(&b), b.iou(&a));
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            if a.area() > 0.0 {
                prop_assert_eq!(a.iou(&a), 1.0);
            }
        }

        #[test]
        fn footprint_never_shrinks_when_member_added(a in arb_bbox(), b in arb_bbox(), c in arb_bbox()) {
            let before = a.union(&b);
            let after = before.union(&c);
            prop_assert!(after.contains(&before));
            prop_assert!(after.area() >= before.area());
        }
    }
}
