//! Evidence-unit construction for a single page.
//!
//! Three phases run in sequence over a [`PageState`]:
//!
//! * **A** seeds one unit per visual element, attaches structural elements
//!   (section headers, unit labels, topic titles, captions) by spatial
//!   proximity, then merges adjacent visual cores: contiguous fragments of
//!   the same visual type consolidate, a table next to a chart becomes a
//!   `stat_panel`.
//! * **B** allocates support paragraphs globally: one similarity matrix of
//!   all unassigned paragraphs against all units, one-shot argmax gated by
//!   `tau`.
//! * **C** consolidates what is left: headers collect their section's
//!   paragraphs, orphan labels reattach to a nearby visual unit or are
//!   demoted, and the residue clusters by layout contiguity.
//!
//! Every input element ends up in exactly one unit.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::embed::{element_vector, EmbeddingProvider};
use crate::error::{EmbedError, ModelError};
use crate::model::{cosine_sim, Bbox, CanonRole, ConstructionParams, EuKind, EvidenceUnit, LayoutElement};

/// Vertical gap up to which two same-type visual regions count as fragments
/// of one region (e.g. a table split into row bands).
pub const FRAGMENT_GAP_EPS: f64 = 1e-9;

/// `v_gap + x_weight * x_diff` between two boxes.
pub fn spatial_distance_bbox(a: &Bbox, b: &Bbox, x_weight: f64) -> f64 {
    a.vertical_gap(b) + x_weight * (a.center_x() - b.center_x()).abs()
}

pub fn spatial_distance(v: &LayoutElement, n: &LayoutElement, params: &ConstructionParams) -> f64 {
    spatial_distance_bbox(&v.bbox, &n.bbox, params.x_weight)
}

/// Construction rules that can be switched off through the rule chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveRules {
    /// D1_010: structural elements attach to visual seeds by proximity.
    pub proximity_mapping: bool,
    /// D1_021: table+chart pairs within the gap merge into a stat panel.
    pub table_chart_merge: bool,
    /// D1_031: a section header between two elements blocks attachment.
    pub section_gating: bool,
    /// D1_040: global semantic paragraph allocation.
    pub semantic_attachment: bool,
    /// D1_051: at most one visual core per type in a merged unit.
    pub type_conflict_guard: bool,
}

impl Default for ActiveRules {
    fn default() -> Self {
        Self {
            proximity_mapping: true,
            table_chart_merge: true,
            section_gating: true,
            semantic_attachment: true,
            type_conflict_guard: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    A,
    B,
    C1,
    C2,
    C3,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Seeded,
    Attached,
    NotAttached,
    Gated,
    MergedFragment,
    MergedStatPanel,
    MergeRejected,
    Assigned,
    BelowThreshold,
    Skipped,
    Created,
    Collected,
    Reattached,
    Demoted,
    Clustered,
    Passed,
    Repaired,
    Split,
    NotApplicable,
}

/// One logged construction or validation decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub phase: Phase,
    pub rule_id: Option<String>,
    pub subjects: Vec<String>,
    pub metric: Option<f64>,
    pub threshold: Option<f64>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConstructionTrace {
    pub entries: Vec<TraceEntry>,
}

impl ConstructionTrace {
    pub fn log(
        &mut self,
        phase: Phase,
        rule_id: Option<&str>,
        subjects: Vec<String>,
        metric: Option<f64>,
        threshold: Option<f64>,
        outcome: Outcome,
    ) {
        self.entries.push(TraceEntry {
            phase,
            rule_id: rule_id.map(str::to_string),
            subjects,
            metric,
            threshold,
            outcome,
        });
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Paragraph-by-unit similarity table used for semantic allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct WorkUnit {
    seq: usize,
    kind: EuKind,
    members: Vec<usize>,
}

/// Mutable per-page construction state. Elements are indexed by position in
/// reading order; each is owned by at most one unit.
#[derive(Debug, Clone)]
pub struct PageState {
    page_id: String,
    elements: Vec<LayoutElement>,
    units: Vec<Option<WorkUnit>>,
    owner: Vec<Option<usize>>,
    next_seq: usize,
    demoted: Vec<String>,
}

impl PageState {
    /// Takes the non-excluded elements of one page.
    pub fn new(elements: &[LayoutElement]) -> Self {
        let mut els: Vec<LayoutElement> = elements.iter().filter(|e| !e.excluded).cloned().collect();
        els.sort_by(|a, b| a.order.cmp(&b.order).then_with(|| a.element_id.cmp(&b.element_id)));
        let page_id = els.first().map(|e| e.page_id.clone()).unwrap_or_default();
        let n = els.len();
        Self {
            page_id,
            elements: els,
            units: Vec::new(),
            owner: vec![None; n],
            next_seq: 0,
            demoted: Vec::new(),
        }
    }

    pub fn elements(&self) -> &[LayoutElement] {
        &self.elements
    }

    pub fn unassigned(&self) -> Vec<&LayoutElement> {
        self.elements
            .iter()
            .zip(&self.owner)
            .filter(|(_, o)| o.is_none())
            .map(|(e, _)| e)
            .collect()
    }

    /// Element ids whose role was demoted to `plain_text`.
    pub fn demoted(&self) -> &[String] {
        &self.demoted
    }

    fn unit_id(&self, unit: usize) -> String {
        let seq = self.units[unit].as_ref().map(|u| u.seq).unwrap_or(usize::MAX);
        format!("{}/eu{}", self.page_id, seq)
    }

    fn eid(&self, i: usize) -> String {
        self.elements[i].element_id.clone()
    }

    fn new_unit(&mut self, kind: EuKind, members: Vec<usize>) -> usize {
        let idx = self.units.len();
        for &m in &members {
            debug_assert!(self.owner[m].is_none());
            self.owner[m] = Some(idx);
        }
        self.units.push(Some(WorkUnit {
            seq: self.next_seq,
            kind,
            members,
        }));
        self.next_seq += 1;
        idx
    }

    fn attach(&mut self, unit: usize, element: usize) {
        debug_assert!(self.owner[element].is_none());
        self.owner[element] = Some(unit);
        if let Some(u) = self.units[unit].as_mut() {
            u.members.push(element);
        }
    }

    /// Moves all members of `from` into `into` and drops `from`.
    fn merge(&mut self, into: usize, from: usize, kind: EuKind) {
        let moved = self.units[from].take().map(|u| u.members).unwrap_or_default();
        for &m in &moved {
            self.owner[m] = Some(into);
        }
        if let Some(u) = self.units[into].as_mut() {
            u.members.extend(moved);
            u.kind = kind;
        }
    }

    fn live_units(&self) -> impl Iterator<Item = (usize, &WorkUnit)> {
        self.units.iter().enumerate().filter_map(|(i, u)| u.as_ref().map(|u| (i, u)))
    }

    fn visual_members(&self, unit: usize) -> Vec<usize> {
        self.units[unit]
            .as_ref()
            .map(|u| {
                u.members
                    .iter()
                    .copied()
                    .filter(|&m| self.elements[m].role().is_visual())
                    .collect()
            })
            .unwrap_or_default()
    }

    fn visual_core(&self, unit: usize) -> Option<Bbox> {
        Bbox::envelope(self.visual_members(unit).iter().map(|&m| &self.elements[m].bbox))
    }

    fn unit_position(&self, unit: usize) -> u32 {
        self.units[unit]
            .as_ref()
            .and_then(|u| u.members.iter().map(|&m| self.elements[m].order).min())
            .unwrap_or(u32::MAX)
    }

    fn header_between(&self, a: u32, b: u32, skip: Option<usize>) -> bool {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.elements.iter().enumerate().any(|(i, e)| {
            Some(i) != skip && e.role() == CanonRole::SectionHeader && e.order > lo && e.order < hi
        })
    }

    /// Final units in creation order.
    pub fn units(&self) -> Vec<EvidenceUnit> {
        let mut live: Vec<&WorkUnit> = self.live_units().map(|(_, u)| u).collect();
        live.sort_by_key(|u| u.seq);
        live.into_iter()
            .map(|u| {
                let members: Vec<&LayoutElement> = u.members.iter().map(|&m| &self.elements[m]).collect();
                EvidenceUnit::from_members(
                    format!("{}/eu{}", self.page_id, u.seq),
                    u.kind,
                    self.page_id.clone(),
                    &members,
                )
                .expect("live units are nonempty")
            })
            .collect()
    }
}

/// Visual-core formation: seeding, structural attachment and core merging.
pub fn phase_a(state: &mut PageState, params: &ConstructionParams, rules: &ActiveRules, trace: &mut ConstructionTrace) {
    // (1) seeds
    let mut seeds = Vec::new();
    for i in 0..state.elements.len() {
        let role = state.elements[i].role();
        if let Some(kind) = EuKind::for_visual(role) {
            let u = state.new_unit(kind, vec![i]);
            seeds.push((i, u));
            trace.log(Phase::A, None, vec![state.eid(i), state.unit_id(u)], None, None, Outcome::Seeded);
        }
    }

    // (2) structural attachment
    if rules.proximity_mapping {
        for i in 0..state.elements.len() {
            let el = &state.elements[i];
            if state.owner[i].is_some() || !el.is_structural() {
                continue;
            }
            let mut best: Option<(f64, u32, usize)> = None;
            let mut nearest_any: Option<f64> = None;
            let mut gated_within_reach = false;
            for &(s, unit) in &seeds {
                let seed = &state.elements[s];
                let d = spatial_distance(el, seed, params);
                nearest_any = Some(nearest_any.map_or(d, |n: f64| n.min(d)));
                if d >= params.max_gravity_reach {
                    continue;
                }
                if rules.section_gating && section_gated(state, i, s, params) {
                    gated_within_reach = true;
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bd, bo, _)) => d < bd || (d == bd && seed.order < bo),
                };
                if better {
                    best = Some((d, seed.order, unit));
                }
            }
            let id = state.eid(i);
            match best {
                Some((d, _, unit)) => {
                    state.attach(unit, i);
                    trace.log(
                        Phase::A,
                        Some("D1_010"),
                        vec![id, state.unit_id(unit)],
                        Some(d),
                        Some(params.max_gravity_reach),
                        Outcome::Attached,
                    );
                }
                None => trace.log(
                    Phase::A,
                    Some(if gated_within_reach { "D1_031" } else { "D1_010" }),
                    vec![id],
                    nearest_any,
                    Some(params.max_gravity_reach),
                    if gated_within_reach { Outcome::Gated } else { Outcome::NotAttached },
                ),
            }
        }
    }

    // (3) visual core merging, one left-to-right pass over units ordered by
    // their first visual element.
    let mut order: Vec<usize> = seeds.iter().map(|&(_, u)| u).collect();
    order.sort_by_key(|&u| {
        state
            .visual_members(u)
            .iter()
            .map(|&m| state.elements[m].order)
            .min()
            .unwrap_or(u32::MAX)
    });
    let mut iter = order.into_iter();
    let Some(mut current) = iter.next() else {
        return;
    };
    for next in iter {
        if let Some(kind) = try_merge(state, current, next, params, rules, trace) {
            state.merge(current, next, kind);
        } else {
            current = next;
        }
    }
}

/// Whether attaching structural element `i` to seed `s` crosses a section
/// boundary. A header never attaches to a visual that precedes it.
fn section_gated(state: &PageState, i: usize, s: usize, params: &ConstructionParams) -> bool {
    let (el, seed) = (&state.elements[i], &state.elements[s]);
    if el.role() == CanonRole::SectionHeader && seed.order < el.order {
        return true;
    }
    if let Some(max_gap) = params.max_attach_order_gap {
        if el.order.abs_diff(seed.order) > max_gap {
            return true;
        }
    }
    state.header_between(el.order, seed.order, Some(i))
}

fn visual_types(state: &PageState, unit: usize) -> BTreeSet<CanonRole> {
    state
        .visual_members(unit)
        .iter()
        .map(|&m| state.elements[m].role())
        .collect()
}

fn try_merge(
    state: &PageState,
    a: usize,
    b: usize,
    params: &ConstructionParams,
    rules: &ActiveRules,
    trace: &mut ConstructionTrace,
) -> Option<EuKind> {
    let (core_a, core_b) = (state.visual_core(a)?, state.visual_core(b)?);
    let gap = core_a.vertical_gap(&core_b);
    let (ta, tb) = (visual_types(state, a), visual_types(state, b));
    let subjects = vec![state.unit_id(a), state.unit_id(b)];
    let kind_a = state.units[a].as_ref()?.kind;

    let fragments = ta == tb
        && ta.len() == 1
        && gap <= FRAGMENT_GAP_EPS
        && (core_a.horizontal_overlap(&core_b) > 0.0 || core_a.x1() == core_b.x1());
    if fragments {
        trace.log(Phase::A, Some("D1_051"), subjects, Some(gap), Some(params.stat_panel_gap), Outcome::MergedFragment);
        return Some(kind_a);
    }
    if gap >= params.stat_panel_gap {
        return None;
    }
    let last_a = state.visual_members(a).iter().map(|&m| state.elements[m].order).max()?;
    let first_b = state.visual_members(b).iter().map(|&m| state.elements[m].order).min()?;
    let reject = |trace: &mut ConstructionTrace, rule: &str| {
        trace.log(Phase::A, Some(rule), subjects.clone(), Some(gap), Some(params.stat_panel_gap), Outcome::MergeRejected);
        None
    };
    if state.header_between(last_a, first_b, None) {
        return reject(trace, "D1_031");
    }
    let overlap = !ta.is_disjoint(&tb);
    if overlap && rules.type_conflict_guard {
        return reject(trace, "D1_051");
    }
    let union: BTreeSet<CanonRole> = ta.union(&tb).copied().collect();
    let table_chart: BTreeSet<CanonRole> = [CanonRole::Table, CanonRole::Chart].into_iter().collect();
    if union == table_chart {
        if !rules.table_chart_merge {
            return reject(trace, "D1_021");
        }
        trace.log(Phase::A, Some("D1_021"), subjects, Some(gap), Some(params.stat_panel_gap), Outcome::MergedStatPanel);
        return Some(EuKind::StatPanel);
    }
    if union.len() == 1 && !rules.type_conflict_guard {
        trace.log(Phase::A, Some("D1_051"), subjects, Some(gap), Some(params.stat_panel_gap), Outcome::MergedFragment);
        return Some(kind_a);
    }
    reject(trace, "D1_021")
}

/// Global semantic allocation of support paragraphs.
///
/// Returns the similarity matrix used for the assignment. Assignments are
/// simultaneous: paragraphs attached in this pass do not change other rows.
pub fn phase_b(
    state: &mut PageState,
    params: &ConstructionParams,
    rules: &ActiveRules,
    provider: &dyn EmbeddingProvider,
    trace: &mut ConstructionTrace,
) -> Result<SimilarityMatrix, EmbedError> {
    let mut matrix = SimilarityMatrix {
        rows: Vec::new(),
        cols: Vec::new(),
        values: Vec::new(),
    };
    let paragraphs: Vec<usize> = (0..state.elements.len())
        .filter(|&i| state.owner[i].is_none() && state.elements[i].role() == CanonRole::SupportParagraph)
        .collect();
    if !rules.semantic_attachment {
        return Ok(matrix);
    }
    let units: Vec<usize> = state.live_units().map(|(i, _)| i).collect();
    let mut vectors: HashMap<usize, Option<Vec<f64>>> = HashMap::new();
    let mut vector_of = |i: usize, state: &PageState| -> Result<Option<Vec<f64>>, EmbedError> {
        if let Some(v) = vectors.get(&i) {
            return Ok(v.clone());
        }
        let v = element_vector(&state.elements[i], provider)?;
        vectors.insert(i, v.clone());
        Ok(v)
    };

    matrix.cols = units.iter().map(|&u| state.unit_id(u)).collect();
    let mut member_vecs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(units.len());
    for &u in &units {
        let members = state.units[u].as_ref().map(|w| w.members.clone()).unwrap_or_default();
        let mut vs = Vec::new();
        for m in members {
            if let Some(v) = vector_of(m, state)? {
                vs.push(v);
            }
        }
        member_vecs.push(vs);
    }

    let mut decisions = Vec::new();
    for &p in &paragraphs {
        let id = state.eid(p);
        let Some(pv) = vector_of(p, state)? else {
            trace.log(Phase::B, Some("D1_040"), vec![id], None, Some(params.tau), Outcome::Skipped);
            continue;
        };
        let mut row = Vec::with_capacity(units.len());
        for vs in &member_vecs {
            let mut best: Option<f64> = None;
            for v in vs {
                let c = cosine_sim(&pv, v).map_err(EmbedError::from)?;
                best = Some(best.map_or(c, |b: f64| b.max(c)));
            }
            row.push(best.unwrap_or(0.0));
        }
        let mut arg: Option<(usize, f64, u32)> = None;
        for (j, &m) in row.iter().enumerate() {
            let pos = state.unit_position(units[j]);
            let better = match arg {
                None => true,
                Some((_, bm, bp)) => m > bm || (m == bm && pos < bp),
            };
            if better {
                arg = Some((j, m, pos));
            }
        }
        matrix.rows.push(id.clone());
        matrix.values.push(row);
        match arg {
            Some((j, m, _)) if m >= params.tau => decisions.push((p, units[j], m)),
            Some((_, m, _)) => {
                trace.log(Phase::B, Some("D1_040"), vec![id], Some(m), Some(params.tau), Outcome::BelowThreshold)
            }
            None => trace.log(Phase::B, Some("D1_040"), vec![id], None, Some(params.tau), Outcome::BelowThreshold),
        }
    }
    for (p, u, m) in decisions {
        state.attach(u, p);
        trace.log(
            Phase::B,
            Some("D1_040"),
            vec![state.eid(p), state.unit_id(u)],
            Some(m),
            Some(params.tau),
            Outcome::Assigned,
        );
    }
    Ok(matrix)
}

/// Residual consolidation: section grouping, label reattachment, layout
/// clustering. Leaves no element unassigned.
pub fn phase_c(state: &mut PageState, params: &ConstructionParams, trace: &mut ConstructionTrace) {
    let n = state.elements.len();

    // C-1
    let header_orders: Vec<u32> = state
        .elements
        .iter()
        .filter(|e| e.role() == CanonRole::SectionHeader)
        .map(|e| e.order)
        .collect();
    for h in 0..n {
        if state.owner[h].is_some() || state.elements[h].role() != CanonRole::SectionHeader {
            continue;
        }
        let start = state.elements[h].order;
        let end = header_orders.iter().copied().filter(|&o| o > start).min().unwrap_or(u32::MAX);
        let collected: Vec<usize> = (0..n)
            .filter(|&i| {
                let e = &state.elements[i];
                state.owner[i].is_none() && e.order > start && e.order < end && e.role().is_paragraph()
            })
            .collect();
        let mut members = vec![h];
        members.extend(&collected);
        let u = state.new_unit(EuKind::SectionText, members);
        trace.log(Phase::C1, None, vec![state.eid(h), state.unit_id(u)], None, None, Outcome::Created);
        for i in collected {
            trace.log(Phase::C1, None, vec![state.eid(i), state.unit_id(u)], None, None, Outcome::Collected);
        }
    }

    // C-2
    let visual_units: Vec<usize> = state
        .live_units()
        .filter(|(_, u)| u.kind.is_visual())
        .map(|(i, _)| i)
        .collect();
    for i in 0..n {
        let role = state.elements[i].role();
        if state.owner[i].is_some() || !matches!(role, CanonRole::UnitLabel | CanonRole::TopicTitle) {
            continue;
        }
        let mut best: Option<(f64, u32, usize)> = None;
        for &u in &visual_units {
            let Some(core) = state.visual_core(u) else { continue };
            let d = spatial_distance_bbox(&state.elements[i].bbox, &core, params.x_weight);
            let pos = state.unit_position(u);
            if best.map_or(true, |(bd, bp, _)| d < bd || (d == bd && pos < bp)) {
                best = Some((d, pos, u));
            }
        }
        let id = state.eid(i);
        match best {
            Some((d, _, u)) if d < params.label_reattach_dist => {
                state.attach(u, i);
                trace.log(
                    Phase::C2,
                    None,
                    vec![id, state.unit_id(u)],
                    Some(d),
                    Some(params.label_reattach_dist),
                    Outcome::Reattached,
                );
            }
            other => {
                state.elements[i].canon_role = Some(CanonRole::PlainText);
                state.demoted.push(id.clone());
                trace.log(
                    Phase::C2,
                    None,
                    vec![id],
                    other.map(|(d, _, _)| d),
                    Some(params.label_reattach_dist),
                    Outcome::Demoted,
                );
            }
        }
    }

    // C-3
    let residual: Vec<usize> = (0..n).filter(|&i| state.owner[i].is_none()).collect();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in residual {
        let joins = clusters.last().and_then(|c| c.last()).is_some_and(|&prev| {
            let (a, b) = (&state.elements[prev], &state.elements[i]);
            a.bbox.vertical_gap(&b.bbox) < params.c3_vgap
                && (a.bbox.x1() - b.bbox.x1()).abs() < params.c3_xalign
                && b.order.abs_diff(a.order) <= params.c3_order_gap
        });
        if joins {
            clusters.last_mut().expect("nonempty").push(i);
        } else {
            clusters.push(vec![i]);
        }
    }
    for c in clusters {
        let ids: Vec<String> = c.iter().map(|&i| state.eid(i)).collect();
        let u = state.new_unit(EuKind::TextCluster, c);
        let mut subjects = ids;
        subjects.push(state.unit_id(u));
        trace.log(Phase::C3, None, subjects, None, None, Outcome::Clustered);
    }
}

/// Result of constructing one page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageBuild {
    pub page_id: String,
    pub eus: Vec<EvidenceUnit>,
    pub trace: ConstructionTrace,
    /// Elements after construction, with roles changed by demotion.
    #[serde(skip)]
    pub elements: Vec<LayoutElement>,
}

/// Stage-2 driver holding parameters, rule switches and the embedder.
pub struct Builder<'a> {
    pub params: ConstructionParams,
    pub rules: ActiveRules,
    pub provider: &'a dyn EmbeddingProvider,
}

impl<'a> Builder<'a> {
    pub fn new(params: ConstructionParams, provider: &'a dyn EmbeddingProvider) -> Self {
        Self {
            params,
            rules: ActiveRules::default(),
            provider,
        }
    }

    pub fn with_rules(mut self, rules: ActiveRules) -> Self {
        self.rules = rules;
        self
    }

    pub fn build_page(&self, elements: &[LayoutElement]) -> Result<PageBuild, crate::Error> {
        self.params.validate()?;
        check_single_page(elements)?;
        let mut state = PageState::new(elements);
        let mut trace = ConstructionTrace::default();
        phase_a(&mut state, &self.params, &self.rules, &mut trace);
        phase_b(&mut state, &self.params, &self.rules, self.provider, &mut trace)?;
        phase_c(&mut state, &self.params, &mut trace);
        Ok(PageBuild {
            page_id: state.page_id.clone(),
            eus: state.units(),
            trace,
            elements: state.elements,
        })
    }
}

fn check_single_page(elements: &[LayoutElement]) -> Result<(), ModelError> {
    if let Some(first) = elements.first() {
        if let Some(other) = elements.iter().find(|e| e.page_id != first.page_id) {
            return Err(ModelError::ParamValue {
                name: "page_id".into(),
                value: format!("mixed pages `{}` and `{}`", first.page_id, other.page_id),
            });
        }
    }
    Ok(())
}

/// Runs all three phases with every rule active.
pub fn build_eus(
    elements: &[LayoutElement],
    params: &ConstructionParams,
    provider: &dyn EmbeddingProvider,
) -> Result<(Vec<EvidenceUnit>, ConstructionTrace), crate::Error> {
    let out = Builder::new(params.clone(), provider).build_page(elements)?;
    Ok((out.eus, out.trace))
}
