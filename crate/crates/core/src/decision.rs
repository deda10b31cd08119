//! Decision layer: the construction/restoration/validation rules as a
//! NEXT-linked chain, the anchoring (I1) and type-consistency (I2)
//! validators with their repairs, the final completeness sweep, and Cypher
//! text export/import of the chain.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::builder::{spatial_distance_bbox, ActiveRules, ConstructionTrace, Outcome, Phase};
use crate::error::{Error, RuleError};
use crate::model::{Bbox, CanonRole, ConstructionParams, EuKind, EvidenceUnit, LayoutElement};

pub const LAYER_NAME: &str = "EU_Decision_Layer";
pub const LAYER_VERSION: &str = "2.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RulePhase {
    #[serde(rename = "D1_CONSTRUCTION")]
    Construction,
    #[serde(rename = "D2_RESTORATION")]
    Restoration,
    #[serde(rename = "D3_VALIDATION")]
    Validation,
}

impl RulePhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            RulePhase::Construction => "D1_CONSTRUCTION",
            RulePhase::Restoration => "D2_RESTORATION",
            RulePhase::Validation => "D3_VALIDATION",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [RulePhase::Construction, RulePhase::Restoration, RulePhase::Validation]
            .into_iter()
            .find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Granularity {
    Page,
    Candidate,
    EuPair,
    Eu,
}

impl Granularity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Granularity::Page => "PAGE",
            Granularity::Candidate => "CANDIDATE",
            Granularity::EuPair => "EU_PAIR",
            Granularity::Eu => "EU",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Granularity::Page, Granularity::Candidate, Granularity::EuPair, Granularity::Eu]
            .into_iter()
            .find(|g| g.as_str() == s)
    }
}

/// Rule parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Number(n) => Some(*n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRule {
    pub rule_id: String,
    pub phase: RulePhase,
    pub granularity: Granularity,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    #[serde(default = "yes")]
    pub active: bool,
    /// Declared in the rule set but not enforced during construction.
    #[serde(default)]
    pub schema_only: bool,
    #[serde(default)]
    pub next: Option<String>,
}

fn yes() -> bool {
    true
}

/// Ordered rule chain. `rules[i].next` always names `rules[i + 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DecisionRule>", into = "Vec<DecisionRule>")]
pub struct RuleChain {
    rules: Vec<DecisionRule>,
}

impl TryFrom<Vec<DecisionRule>> for RuleChain {
    type Error = RuleError;

    fn try_from(rules: Vec<DecisionRule>) -> Result<Self, RuleError> {
        RuleChain::from_rules(rules)
    }
}

impl From<RuleChain> for Vec<DecisionRule> {
    fn from(c: RuleChain) -> Self {
        c.rules
    }
}

/// Parameter keys a rule may carry that map onto [`ConstructionParams`].
const BOUND_PARAMS: &[(&str, &str)] = &[
    ("D1_010", "max_gravity_reach"),
    ("D1_010", "x_weight"),
    ("D1_021", "stat_panel_gap"),
    ("D1_031", "max_attach_order_gap"),
    ("D1_040", "tau"),
    ("D2_010", "max_gravity_reach"),
    ("D2_020", "i2_overlap"),
];

impl RuleChain {
    /// Orders rules by following `next` from the unique head. Fails on
    /// duplicate ids, dangling links, branches, cycles or unreachable rules.
    pub fn from_rules(rules: Vec<DecisionRule>) -> Result<Self, RuleError> {
        if rules.is_empty() {
            return Ok(Self::default());
        }
        let mut by_id: HashMap<&str, usize> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            if by_id.insert(r.rule_id.as_str(), i).is_some() {
                return Err(RuleError::Chain(format!("duplicate rule `{}`", r.rule_id)));
            }
        }
        let mut targeted: HashSet<&str> = HashSet::new();
        for r in &rules {
            if let Some(n) = &r.next {
                if !by_id.contains_key(n.as_str()) {
                    return Err(RuleError::Chain(format!("`{}` -> unknown rule `{n}`", r.rule_id)));
                }
                if !targeted.insert(n.as_str()) {
                    return Err(RuleError::Chain(format!("rule `{n}` has two predecessors")));
                }
            }
        }
        let heads: Vec<usize> = (0..rules.len())
            .filter(|&i| !targeted.contains(rules[i].rule_id.as_str()))
            .collect();
        if heads.len() != 1 {
            return Err(RuleError::Chain(format!(
                "expected one chain head, found {}",
                heads.len()
            )));
        }
        let mut order = Vec::with_capacity(rules.len());
        let mut seen = HashSet::new();
        let mut cur = Some(heads[0]);
        while let Some(i) = cur {
            if !seen.insert(i) {
                return Err(RuleError::Chain("NEXT chain has a cycle".into()));
            }
            order.push(i);
            cur = rules[i].next.as_deref().map(|n| by_id[n]);
        }
        if order.len() != rules.len() {
            return Err(RuleError::Chain("NEXT chain does not reach every rule".into()));
        }
        let mut slots: Vec<Option<DecisionRule>> = rules.into_iter().map(Some).collect();
        Ok(Self {
            rules: order.into_iter().map(|i| slots[i].take().expect("visited once")).collect(),
        })
    }

    /// Links the given rules in sequence, overwriting their `next` fields.
    pub fn linked(mut rules: Vec<DecisionRule>) -> Result<Self, RuleError> {
        let ids: Vec<String> = rules.iter().map(|r| r.rule_id.clone()).collect();
        for (i, r) in rules.iter_mut().enumerate() {
            r.next = ids.get(i + 1).cloned();
        }
        Self::from_rules(rules)
    }

    /// The eight-rule default set, in execution order.
    pub fn default_chain(params: &ConstructionParams) -> Self {
        let num = |v: f64| ParamValue::Number(v);
        let rule = |id: &str, phase, granularity, description: &str, params: Vec<(&str, ParamValue)>| DecisionRule {
            rule_id: id.into(),
            phase,
            granularity,
            description: description.into(),
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            active: true,
            schema_only: phase != RulePhase::Construction,
            next: None,
        };
        let gating = match params.max_attach_order_gap {
            Some(g) => vec![("max_attach_order_gap", num(f64::from(g)))],
            None => vec![("order_gap_threshold", ParamValue::Text("unlimited".into()))],
        };
        let rules = vec![
            rule(
                "D1_010",
                RulePhase::Construction,
                Granularity::Page,
                "Proximity-based structural mapping",
                vec![("max_gravity_reach", num(params.max_gravity_reach)), ("x_weight", num(params.x_weight))],
            ),
            rule(
                "D1_031",
                RulePhase::Construction,
                Granularity::Candidate,
                "Section boundary gating",
                gating,
            ),
            rule(
                "D1_021",
                RulePhase::Construction,
                Granularity::Candidate,
                "Homogeneous visual exclusion",
                vec![
                    ("table_chart_allowed", ParamValue::Bool(true)),
                    ("stat_panel_gap", num(params.stat_panel_gap)),
                ],
            ),
            rule(
                "D1_051",
                RulePhase::Construction,
                Granularity::EuPair,
                "Type-conflict merge guard",
                vec![("max_same_type_visual", num(1.0))],
            ),
            rule(
                "D1_040",
                RulePhase::Construction,
                Granularity::Candidate,
                "Semantic paragraph attachment",
                vec![("tau", num(params.tau))],
            ),
            rule(
                "D2_010",
                RulePhase::Restoration,
                Granularity::Eu,
                "I1: Anchoring invariant",
                vec![("max_gravity_reach", num(params.max_gravity_reach))],
            ),
            rule(
                "D2_020",
                RulePhase::Restoration,
                Granularity::Eu,
                "I2: Type consistency",
                vec![("i2_overlap", num(params.i2_overlap))],
            ),
            rule(
                "D3_010",
                RulePhase::Validation,
                Granularity::Eu,
                "EU completeness final check",
                vec![],
            ),
        ];
        Self::linked(rules).expect("default chain is well formed")
    }

    pub fn load_json(path: &Path) -> Result<Self, Error> {
        let raw = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let rules: Vec<DecisionRule> = serde_json::from_str(&raw).map_err(RuleError::from)?;
        Ok(Self::from_rules(rules)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rules).expect("rules serialize")
    }

    pub fn rules(&self) -> &[DecisionRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, rule_id: &str) -> Option<&DecisionRule> {
        self.rules.iter().find(|r| r.rule_id == rule_id)
    }

    /// Active rules in chain order; inactive ones are skipped.
    pub fn active_sequence(&self) -> impl Iterator<Item = &DecisionRule> {
        self.rules.iter().filter(|r| r.active)
    }

    pub fn set_active(&mut self, rule_id: &str, active: bool) -> Result<(), RuleError> {
        let r = self
            .rules
            .iter_mut()
            .find(|r| r.rule_id == rule_id)
            .ok_or_else(|| RuleError::Chain(format!("no rule `{rule_id}`")))?;
        r.active = active;
        Ok(())
    }

    /// Whether a rule is present and active. Absent rules count as inactive.
    pub fn is_active(&self, rule_id: &str) -> bool {
        self.get(rule_id).is_some_and(|r| r.active)
    }

    /// Construction switches derived from the D1 rules.
    pub fn active_rules(&self) -> ActiveRules {
        ActiveRules {
            proximity_mapping: self.is_active("D1_010"),
            table_chart_merge: self.is_active("D1_021"),
            section_gating: self.is_active("D1_031"),
            semantic_attachment: self.is_active("D1_040"),
            type_conflict_guard: self.is_active("D1_051"),
        }
    }

    /// Applies numeric rule parameters onto `base`.
    pub fn bind_params(&self, base: &ConstructionParams) -> Result<ConstructionParams, Error> {
        let mut out = base.clone();
        for &(rule_id, key) in BOUND_PARAMS {
            if let Some(v) = self.get(rule_id).and_then(|r| r.params.get(key)) {
                let text = match v {
                    ParamValue::Number(n) if key == "max_attach_order_gap" => format!("{}", *n as u32),
                    ParamValue::Number(n) => format!("{n:?}"),
                    ParamValue::Text(t) => t.clone(),
                    ParamValue::Bool(b) => b.to_string(),
                };
                out.set(key, &text)?;
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------- Cypher

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn literal(v: &ParamValue) -> String {
    match v {
        ParamValue::Bool(b) => b.to_string(),
        ParamValue::Number(n) => format!("{n:?}"),
        ParamValue::Text(t) => quote(t),
    }
}

fn rule_props(r: &DecisionRule) -> String {
    let mut s = format!(
        "rule_id:{}, phase:{}, granularity:{}, description:{}, active:{}, schema_only:{}",
        quote(&r.rule_id),
        quote(r.phase.as_str()),
        quote(r.granularity.as_str()),
        quote(&r.description),
        r.active,
        r.schema_only
    );
    for (k, v) in &r.params {
        let _ = write!(s, ", `param_{}`:{}", k.replace('`', "``"), literal(v));
    }
    s
}

/// Cypher CREATE script for the chain: the layer node, one node per rule,
/// HAS_RULE edges and NEXT edges, one statement per line.
pub fn export_cypher(chain: &RuleChain) -> String {
    let mut out = format!(
        "CREATE (:DecisionLayer {{name:{}, version:{}}});\n",
        quote(LAYER_NAME),
        quote(LAYER_VERSION)
    );
    for r in &chain.rules {
        let _ = writeln!(out, "CREATE (:DecisionRule {{{}}});", rule_props(r));
    }
    for r in &chain.rules {
        let _ = writeln!(
            out,
            "MATCH (l:DecisionLayer {{name:{}}}), (r:DecisionRule {{rule_id:{}}}) CREATE (l)-[:HAS_RULE]->(r);",
            quote(LAYER_NAME),
            quote(&r.rule_id)
        );
    }
    for r in &chain.rules {
        if let Some(n) = &r.next {
            let _ = writeln!(
                out,
                "MATCH (a:DecisionRule {{rule_id:{}}}), (b:DecisionRule {{rule_id:{}}}) CREATE (a)-[:NEXT]->(b);",
                quote(&r.rule_id),
                quote(n)
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Lit {
    Str(String),
    Num(f64),
    Bool(bool),
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> RuleError {
        RuleError::Cypher {
            line: self.line,
            message: format!("{} (at column {})", message.into(), self.pos + 1),
        }
    }

    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.s.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> Result<(), RuleError> {
        self.ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    fn try_eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, RuleError> {
        self.ws();
        if self.rest().starts_with('`') {
            let mut out = String::new();
            let mut chars = self.rest()[1..].char_indices().peekable();
            while let Some((i, c)) = chars.next() {
                if c == '`' {
                    if chars.peek().map(|&(_, c)| c) == Some('`') {
                        chars.next();
                        out.push('`');
                        continue;
                    }
                    self.pos += i + 2;
                    return Ok(out);
                }
                out.push(c);
            }
            return Err(self.err("unterminated quoted identifier"));
        }
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.err("expected identifier"));
        }
        let id = self.rest()[..len].to_string();
        self.pos += len;
        Ok(id)
    }

    fn value(&mut self) -> Result<Lit, RuleError> {
        self.ws();
        let rest = self.rest();
        if let Some(body) = rest.strip_prefix('\'') {
            let mut out = String::new();
            let mut chars = body.char_indices();
            while let Some((i, c)) = chars.next() {
                match c {
                    '\'' => {
                        self.pos += i + 2;
                        return Ok(Lit::Str(out));
                    }
                    '\\' => match chars.next() {
                        Some((_, '\\')) => out.push('\\'),
                        Some((_, '\'')) => out.push('\''),
                        Some((_, 'n')) => out.push('\n'),
                        Some((_, 'r')) => out.push('\r'),
                        Some((_, 't')) => out.push('\t'),
                        _ => return Err(self.err("bad escape in string")),
                    },
                    c => out.push(c),
                }
            }
            return Err(self.err("unterminated string"));
        }
        for (word, b) in [("true", true), ("false", false)] {
            if rest.starts_with(word) {
                self.pos += word.len();
                return Ok(Lit::Bool(b));
            }
        }
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E')))
            .unwrap_or(rest.len());
        match rest[..len].parse::<f64>() {
            Ok(n) if len > 0 => {
                self.pos += len;
                Ok(Lit::Num(n))
            }
            _ => Err(self.err("expected a literal")),
        }
    }

    fn map(&mut self) -> Result<Vec<(String, Lit)>, RuleError> {
        self.eat("{")?;
        let mut out = Vec::new();
        if self.try_eat("}") {
            return Ok(out);
        }
        loop {
            let k = self.ident()?;
            self.eat(":")?;
            out.push((k, self.value()?));
            if self.try_eat("}") {
                return Ok(out);
            }
            self.eat(",")?;
        }
    }

    /// `(var:Label {map})`, returning label and map.
    fn node(&mut self) -> Result<(String, Vec<(String, Lit)>), RuleError> {
        self.eat("(")?;
        self.ws();
        if !self.rest().starts_with(':') {
            self.ident()?;
        }
        self.eat(":")?;
        let label = self.ident()?;
        let map = self.map()?;
        self.eat(")")?;
        Ok((label, map))
    }

    fn end(&mut self) -> Result<(), RuleError> {
        self.try_eat(";");
        self.ws();
        if self.rest().is_empty() {
            Ok(())
        } else {
            Err(self.err("trailing input"))
        }
    }
}

fn take_str(cur: &Cursor, map: &mut Vec<(String, Lit)>, key: &str) -> Result<String, RuleError> {
    match take(map, key) {
        Some(Lit::Str(s)) => Ok(s),
        _ => Err(cur.err(format!("missing string property `{key}`"))),
    }
}

fn take_bool(cur: &Cursor, map: &mut Vec<(String, Lit)>, key: &str) -> Result<bool, RuleError> {
    match take(map, key) {
        Some(Lit::Bool(b)) => Ok(b),
        _ => Err(cur.err(format!("missing boolean property `{key}`"))),
    }
}

fn take(map: &mut Vec<(String, Lit)>, key: &str) -> Option<Lit> {
    let i = map.iter().position(|(k, _)| k == key)?;
    Some(map.remove(i).1)
}

/// Reads text produced by [`export_cypher`] back into a chain.
pub fn parse_cypher(text: &str) -> Result<RuleChain, RuleError> {
    let mut rules: Vec<DecisionRule> = Vec::new();
    let mut has_rule: BTreeSet<String> = BTreeSet::new();
    let mut next: Vec<(String, String, usize)> = Vec::new();
    let mut layer = false;

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let mut cur = Cursor { s: line, pos: 0, line: ln + 1 };
        if cur.try_eat("CREATE") {
            let (label, mut map) = cur.node()?;
            cur.end()?;
            match label.as_str() {
                "DecisionLayer" => {
                    let name = take_str(&cur, &mut map, "name")?;
                    if name != LAYER_NAME {
                        return Err(cur.err(format!("unexpected layer `{name}`")));
                    }
                    layer = true;
                }
                "DecisionRule" => {
                    let rule_id = take_str(&cur, &mut map, "rule_id")?;
                    let phase = take_str(&cur, &mut map, "phase")?;
                    let phase = RulePhase::parse(&phase).ok_or_else(|| cur.err(format!("unknown phase `{phase}`")))?;
                    let gran = take_str(&cur, &mut map, "granularity")?;
                    let granularity =
                        Granularity::parse(&gran).ok_or_else(|| cur.err(format!("unknown granularity `{gran}`")))?;
                    let description = take_str(&cur, &mut map, "description")?;
                    let active = take_bool(&cur, &mut map, "active")?;
                    let schema_only = take_bool(&cur, &mut map, "schema_only")?;
                    let mut params = BTreeMap::new();
                    for (k, v) in map {
                        let Some(name) = k.strip_prefix("param_") else {
                            return Err(cur.err(format!("unknown property `{k}`")));
                        };
                        let v = match v {
                            Lit::Str(s) => ParamValue::Text(s),
                            Lit::Num(n) => ParamValue::Number(n),
                            Lit::Bool(b) => ParamValue::Bool(b),
                        };
                        params.insert(name.to_string(), v);
                    }
                    rules.push(DecisionRule {
                        rule_id,
                        phase,
                        granularity,
                        description,
                        params,
                        active,
                        schema_only,
                        next: None,
                    });
                }
                other => return Err(cur.err(format!("unexpected node label `{other}`"))),
            }
        } else if cur.try_eat("MATCH") {
            let (la, mut ma) = cur.node()?;
            cur.eat(",")?;
            let (lb, mut mb) = cur.node()?;
            cur.eat("CREATE")?;
            cur.eat("(")?;
            let _ = cur.ident()?;
            cur.eat(")-[:")?;
            let rel = cur.ident()?;
            cur.eat("]->(")?;
            let _ = cur.ident()?;
            cur.eat(")")?;
            cur.end()?;
            match (la.as_str(), lb.as_str(), rel.as_str()) {
                ("DecisionLayer", "DecisionRule", "HAS_RULE") => {
                    has_rule.insert(take_str(&cur, &mut mb, "rule_id")?);
                }
                ("DecisionRule", "DecisionRule", "NEXT") => {
                    let a = take_str(&cur, &mut ma, "rule_id")?;
                    let b = take_str(&cur, &mut mb, "rule_id")?;
                    next.push((a, b, ln + 1));
                }
                _ => return Err(cur.err(format!("unsupported relationship `{rel}`"))),
            }
        } else {
            return Err(cur.err("expected CREATE or MATCH"));
        }
    }

    if !layer {
        return Err(RuleError::Cypher {
            line: 0,
            message: "no DecisionLayer node".into(),
        });
    }
    for (a, b, line) in next {
        let r = rules
            .iter_mut()
            .find(|r| r.rule_id == a)
            .ok_or_else(|| RuleError::Cypher {
                line,
                message: format!("NEXT from unknown rule `{a}`"),
            })?;
        if r.next.replace(b).is_some() {
            return Err(RuleError::Cypher {
                line,
                message: format!("rule `{a}` has two NEXT edges"),
            });
        }
    }
    if let Some(r) = rules.iter().find(|r| !has_rule.contains(&r.rule_id)) {
        return Err(RuleError::Chain(format!("rule `{}` is not attached to the layer", r.rule_id)));
    }
    RuleChain::from_rules(rules)
}

// ------------------------------------------------------------ validators

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Passed,
    Repaired,
    Demoted,
    Split,
    NotApplicable,
}

/// Outcome of the anchoring check for one visual unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct I1Check {
    pub verdict: Verdict,
    /// Anchor chosen for repair.
    pub anchor: Option<String>,
    pub distance: Option<f64>,
}

fn index(elements: &[LayoutElement]) -> HashMap<&str, &LayoutElement> {
    elements.iter().map(|e| (e.element_id.as_str(), e)).collect()
}

fn visual_core(eu: &EvidenceUnit, by_id: &HashMap<&str, &LayoutElement>) -> Option<Bbox> {
    Bbox::envelope(
        eu.members
            .iter()
            .filter_map(|m| by_id.get(m.as_str()))
            .filter(|e| e.role().is_visual())
            .map(|e| &e.bbox),
    )
}

/// Anchoring check for a visual unit. Repair candidates are anchor elements
/// not already held by another visual unit (unassigned, or sitting in a
/// text unit) within gravity reach of the unit's visual core.
pub fn validate_i1(
    eu: &EvidenceUnit,
    elements: &[LayoutElement],
    page_eus: &[EvidenceUnit],
    params: &ConstructionParams,
) -> I1Check {
    let by_id = index(elements);
    let has_anchor = eu
        .members
        .iter()
        .filter_map(|m| by_id.get(m.as_str()))
        .any(|e| e.role().is_anchor());
    if !eu.kind.is_visual() {
        return I1Check {
            verdict: Verdict::NotApplicable,
            anchor: None,
            distance: None,
        };
    }
    if has_anchor {
        return I1Check {
            verdict: Verdict::Passed,
            anchor: None,
            distance: None,
        };
    }
    let held: HashSet<&str> = page_eus
        .iter()
        .filter(|u| u.kind.is_visual())
        .flat_map(|u| u.members.iter().map(String::as_str))
        .collect();
    let core = visual_core(eu, &by_id);
    let mut best: Option<(f64, u32, &LayoutElement)> = None;
    if let Some(core) = core {
        for e in elements {
            if e.excluded || !e.role().is_anchor() || held.contains(e.element_id.as_str()) {
                continue;
            }
            let d = spatial_distance_bbox(&e.bbox, &core, params.x_weight);
            if d >= params.max_gravity_reach {
                continue;
            }
            if best.map_or(true, |(bd, bo, _)| d < bd || (d == bd && e.order < bo)) {
                best = Some((d, e.order, e));
            }
        }
    }
    match best {
        Some((d, _, e)) => I1Check {
            verdict: Verdict::Repaired,
            anchor: Some(e.element_id.clone()),
            distance: Some(d),
        },
        None => I1Check {
            verdict: Verdict::Demoted,
            anchor: None,
            distance: None,
        },
    }
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[-+]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?").expect("number pattern compiles")
    })
}

/// Canonical numeric tokens of a text: thousands separators dropped, each
/// value re-rendered from its parsed magnitude so `10`, `10.0` and `+10`
/// coincide. A trailing `%` is ignored.
pub fn numeric_values(text: &str) -> BTreeSet<String> {
    number_re()
        .find_iter(text)
        .filter_map(|m| m.as_str().replace(',', "").parse::<f64>().ok())
        .map(|v| if v == 0.0 { "0".to_string() } else { format!("{v}") })
        .collect()
}

/// Outcome of the type-consistency check on a stat panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct I2Check {
    pub verdict: Verdict,
    pub ratio: Option<f64>,
    /// Members of the table and chart panels when split.
    pub table_members: Vec<String>,
    pub chart_members: Vec<String>,
}

/// `|table ∩ chart| / |chart|` over numeric value sets, `None` when the
/// chart holds no numbers.
pub fn overlap_ratio(table: &BTreeSet<String>, chart: &BTreeSet<String>) -> Option<f64> {
    if chart.is_empty() {
        return None;
    }
    Some(table.intersection(chart).count() as f64 / chart.len() as f64)
}

pub fn validate_i2(eu: &EvidenceUnit, elements: &[LayoutElement], params: &ConstructionParams) -> I2Check {
    let na = I2Check {
        verdict: Verdict::NotApplicable,
        ratio: None,
        table_members: Vec::new(),
        chart_members: Vec::new(),
    };
    if eu.kind != EuKind::StatPanel {
        return na;
    }
    let by_id = index(elements);
    let members: Vec<&LayoutElement> = eu.members.iter().filter_map(|m| by_id.get(m.as_str()).copied()).collect();
    let text_of = |role: CanonRole| -> String {
        members
            .iter()
            .filter(|e| e.role() == role)
            .map(|e| e.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let table = numeric_values(&text_of(CanonRole::Table));
    let chart = numeric_values(&text_of(CanonRole::Chart));
    let Some(ratio) = overlap_ratio(&table, &chart) else {
        return na;
    };
    if ratio >= params.i2_overlap {
        return I2Check {
            verdict: Verdict::Passed,
            ratio: Some(ratio),
            ..na
        };
    }
    let core = |role: CanonRole| Bbox::envelope(members.iter().filter(|e| e.role() == role).map(|e| &e.bbox));
    let (tcore, ccore) = (core(CanonRole::Table), core(CanonRole::Chart));
    let mut table_members = Vec::new();
    let mut chart_members = Vec::new();
    for e in &members {
        let to_chart = match e.role() {
            CanonRole::Table => false,
            CanonRole::Chart => true,
            _ => match (tcore, ccore) {
                (Some(t), Some(c)) => {
                    spatial_distance_bbox(&e.bbox, &c, params.x_weight)
                        < spatial_distance_bbox(&e.bbox, &t, params.x_weight)
                }
                (None, Some(_)) => true,
                _ => false,
            },
        };
        if to_chart {
            chart_members.push(e.element_id.clone());
        } else {
            table_members.push(e.element_id.clone());
        }
    }
    I2Check {
        verdict: Verdict::Split,
        ratio: Some(ratio),
        table_members,
        chart_members,
    }
}

/// Problems found by the completeness sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Non-excluded elements absent from every unit.
    pub missing: Vec<String>,
    /// Elements held by more than one unit (or twice by one).
    pub duplicated: Vec<String>,
    /// Member ids that name no non-excluded element.
    pub unknown: Vec<String>,
    /// Units whose footprint differs from their members' envelope.
    pub bad_footprint: Vec<String>,
    /// Visual units without an anchor.
    pub anchorless: Vec<String>,
    pub empty: Vec<String>,
}

impl SweepReport {
    pub fn is_clean(&self) -> bool {
        self.partition_holds() && self.bad_footprint.is_empty() && self.anchorless.is_empty()
    }

    pub fn partition_holds(&self) -> bool {
        self.missing.is_empty() && self.duplicated.is_empty() && self.unknown.is_empty() && self.empty.is_empty()
    }
}

/// Partition, footprint-containment and anchoring sweep over one page.
pub fn completeness_sweep(eus: &[EvidenceUnit], elements: &[LayoutElement]) -> SweepReport {
    let live: HashMap<&str, &LayoutElement> = elements
        .iter()
        .filter(|e| !e.excluded)
        .map(|e| (e.element_id.as_str(), e))
        .collect();
    let mut count: BTreeMap<&str, usize> = BTreeMap::new();
    let mut report = SweepReport::default();
    for eu in eus {
        if eu.members.is_empty() {
            report.empty.push(eu.eu_id.clone());
            continue;
        }
        let mut boxes = Vec::new();
        let mut anchored = false;
        for m in &eu.members {
            *count.entry(m.as_str()).or_default() += 1;
            match live.get(m.as_str()) {
                Some(e) => {
                    boxes.push(e.bbox);
                    anchored |= e.role().is_anchor();
                }
                None => report.unknown.push(m.clone()),
            }
        }
        if let Some(env) = Bbox::envelope(boxes.iter()) {
            if env != eu.footprint || !boxes.iter().all(|b| eu.footprint.contains(b)) {
                report.bad_footprint.push(eu.eu_id.clone());
            }
        }
        if eu.kind.is_visual() && !anchored {
            report.anchorless.push(eu.eu_id.clone());
        }
    }
    let mut ids: Vec<&str> = live.keys().copied().collect();
    ids.sort_unstable();
    for id in ids {
        match count.get(id) {
            None => report.missing.push(id.to_string()),
            Some(&n) if n > 1 => report.duplicated.push(id.to_string()),
            _ => {}
        }
    }
    report.unknown.sort();
    report.unknown.dedup();
    report
}

/// One validator decision on one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub rule_id: String,
    pub eu_id: String,
    pub verdict: Verdict,
    pub metric: Option<f64>,
    pub detail: Option<String>,
}

/// Units and elements after restoration, with what was done.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedPage {
    pub eus: Vec<EvidenceUnit>,
    #[serde(skip)]
    pub elements: Vec<LayoutElement>,
    pub records: Vec<ValidationRecord>,
    pub sweep: Option<SweepReport>,
}

fn unit_seq(eu_id: &str) -> Option<usize> {
    eu_id.rsplit_once("/eu").and_then(|(_, n)| n.parse().ok())
}

fn rebuild(eu: &EvidenceUnit, kind: EuKind, members: &[String], by_id: &HashMap<String, LayoutElement>, id: String) -> Option<EvidenceUnit> {
    let els: Vec<&LayoutElement> = members.iter().filter_map(|m| by_id.get(m)).collect();
    EvidenceUnit::from_members(id, kind, eu.page_id.clone(), &els).ok()
}

/// Runs the active restoration and validation rules over one page, in chain
/// order: I1 anchoring with repair or demotion, I2 type consistency with
/// splitting (each split panel is re-checked for anchoring), then the
/// completeness sweep.
pub fn validate_page(
    eus: &[EvidenceUnit],
    elements: &[LayoutElement],
    params: &ConstructionParams,
    chain: &RuleChain,
    trace: &mut ConstructionTrace,
) -> ValidatedPage {
    let mut eus: Vec<EvidenceUnit> = eus.to_vec();
    let mut elements: Vec<LayoutElement> = elements.to_vec();
    let mut records = Vec::new();
    let mut sweep = None;
    let mut next_seq = eus.iter().filter_map(|u| unit_seq(&u.eu_id)).max().map_or(0, |s| s + 1);

    for rule in chain.active_sequence() {
        match rule.rule_id.as_str() {
            "D2_010" => {
                let ids: Vec<String> = eus.iter().filter(|u| u.kind.is_visual()).map(|u| u.eu_id.clone()).collect();
                for id in ids {
                    apply_i1(&id, &mut eus, &mut elements, params, &mut records, trace);
                }
            }
            "D2_020" => {
                let ids: Vec<String> = eus.iter().filter(|u| u.kind == EuKind::StatPanel).map(|u| u.eu_id.clone()).collect();
                for id in ids {
                    let Some(pos) = eus.iter().position(|u| u.eu_id == id) else { continue };
                    let check = validate_i2(&eus[pos], &elements, params);
                    records.push(ValidationRecord {
                        rule_id: "D2_020".into(),
                        eu_id: id.clone(),
                        verdict: check.verdict,
                        metric: check.ratio,
                        detail: None,
                    });
                    let outcome = match check.verdict {
                        Verdict::Passed => Outcome::Passed,
                        Verdict::Split => Outcome::Split,
                        _ => Outcome::NotApplicable,
                    };
                    trace.log(Phase::Validate, Some("D2_020"), vec![id.clone()], check.ratio, Some(params.i2_overlap), outcome);
                    if check.verdict != Verdict::Split {
                        continue;
                    }
                    let by_id: HashMap<String, LayoutElement> =
                        elements.iter().map(|e| (e.element_id.clone(), e.clone())).collect();
                    let original = eus[pos].clone();
                    let chart_id = format!("{}/eu{}", original.page_id, next_seq);
                    next_seq += 1;
                    let table = rebuild(&original, EuKind::TablePanel, &check.table_members, &by_id, original.eu_id.clone());
                    let chart = rebuild(&original, EuKind::ChartPanel, &check.chart_members, &by_id, chart_id.clone());
                    eus.remove(pos);
                    let mut at = pos;
                    for u in [table, chart].into_iter().flatten() {
                        eus.insert(at, u);
                        at += 1;
                    }
                    if chain.is_active("D2_010") {
                        for sid in [original.eu_id.clone(), chart_id] {
                            if eus.iter().any(|u| u.eu_id == sid) {
                                apply_i1(&sid, &mut eus, &mut elements, params, &mut records, trace);
                            }
                        }
                    }
                }
            }
            "D3_010" => {
                let report = completeness_sweep(&eus, &elements);
                trace.log(
                    Phase::Validate,
                    Some("D3_010"),
                    Vec::new(),
                    None,
                    None,
                    if report.is_clean() { Outcome::Passed } else { Outcome::NotApplicable },
                );
                sweep = Some(report);
            }
            _ => {}
        }
    }
    ValidatedPage {
        eus,
        elements,
        records,
        sweep,
    }
}

fn apply_i1(
    id: &str,
    eus: &mut Vec<EvidenceUnit>,
    elements: &mut [LayoutElement],
    params: &ConstructionParams,
    records: &mut Vec<ValidationRecord>,
    trace: &mut ConstructionTrace,
) {
    let Some(pos) = eus.iter().position(|u| u.eu_id == id) else { return };
    let check = validate_i1(&eus[pos], elements, eus, params);
    records.push(ValidationRecord {
        rule_id: "D2_010".into(),
        eu_id: id.to_string(),
        verdict: check.verdict,
        metric: check.distance,
        detail: check.anchor.clone(),
    });
    match check.verdict {
        Verdict::Repaired => {
            let anchor = check.anchor.clone().expect("repair names an anchor");
            trace.log(
                Phase::Validate,
                Some("D2_010"),
                vec![anchor.clone(), id.to_string()],
                check.distance,
                Some(params.max_gravity_reach),
                Outcome::Repaired,
            );
            let by_id: HashMap<String, LayoutElement> =
                elements.iter().map(|e| (e.element_id.clone(), e.clone())).collect();
            // detach from its current holder, dropping it if emptied
            if let Some(src) = eus.iter().position(|u| u.eu_id != id && u.members.contains(&anchor)) {
                let src_eu = eus[src].clone();
                let rest: Vec<String> = src_eu.members.iter().filter(|m| **m != anchor).cloned().collect();
                match rebuild(&src_eu, src_eu.kind, &rest, &by_id, src_eu.eu_id.clone()) {
                    Some(u) => eus[src] = u,
                    None => {
                        eus.remove(src);
                    }
                }
            }
            let pos = eus.iter().position(|u| u.eu_id == id).expect("target unit survives");
            let mut members = eus[pos].members.clone();
            members.push(anchor);
            let target = eus[pos].clone();
            if let Some(u) = rebuild(&target, target.kind, &members, &by_id, target.eu_id.clone()) {
                eus[pos] = u;
            }
        }
        Verdict::Demoted => {
            trace.log(
                Phase::Validate,
                Some("D2_010"),
                vec![id.to_string()],
                None,
                Some(params.max_gravity_reach),
                Outcome::Demoted,
            );
            let members: HashSet<String> = eus[pos].members.iter().cloned().collect();
            for e in elements.iter_mut() {
                if members.contains(&e.element_id) && e.role().is_visual() {
                    e.canon_role = Some(CanonRole::PlainText);
                }
            }
            eus[pos].kind = EuKind::TextCluster;
        }
        _ => trace.log(Phase::Validate, Some("D2_010"), vec![id.to_string()], None, None, Outcome::Passed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn el(id: &str, role: CanonRole, order: u32, b: [f64; 4], text: &str) -> LayoutElement {
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

    fn unit(id: &str, kind: EuKind, members: &[&LayoutElement]) -> EvidenceUnit {
        EvidenceUnit::from_members(id, kind, "p", members).unwrap()
    }

    #[test]
    fn default_chain_shape() {
        let c = RuleChain::default_chain(&ConstructionParams::default());
        assert_eq!(c.len(), 8);
        let ids: BTreeSet<&str> = c.rules().iter().map(|r| r.rule_id.as_str()).collect();
        let want: BTreeSet<&str> =
            ["D1_010", "D1_021", "D1_031", "D1_040", "D1_051", "D2_010", "D2_020", "D3_010"].into();
        assert_eq!(ids, want);
        assert_eq!(c.get("D1_040").unwrap().params["tau"], ParamValue::Number(0.40));
        assert_eq!(c.get("D1_040").unwrap().next.as_deref(), Some("D2_010"));
        assert_eq!(c.get("D1_010").unwrap().granularity, Granularity::Page);
        assert_eq!(c.get("D1_051").unwrap().granularity, Granularity::EuPair);
        assert!(c.get("D2_020").unwrap().schema_only);
        assert!(!c.get("D1_021").unwrap().schema_only);
        assert_eq!(c.rules().last().unwrap().next, None);
    }

    #[test]
    fn deactivation_skips_rule_and_switches_builder() {
        let mut c = RuleChain::default_chain(&ConstructionParams::default());
        c.set_active("D1_040", false).unwrap();
        let seq: Vec<&str> = c.active_sequence().map(|r| r.rule_id.as_str()).collect();
        assert_eq!(seq.len(), 7);
        assert!(!seq.contains(&"D1_040"));
        assert!(!c.active_rules().semantic_attachment);
        assert!(c.active_rules().proximity_mapping);
    }

    #[test]
    fn malformed_chains_are_rejected() {
        let base = RuleChain::default_chain(&ConstructionParams::default());
        let mut rules: Vec<DecisionRule> = base.clone().into();
        rules[7].next = Some("D1_010".into());
        assert!(RuleChain::from_rules(rules).is_err());
        let mut rules: Vec<DecisionRule> = base.clone().into();
        rules[3].next = Some("D9_999".into());
        assert!(RuleChain::from_rules(rules).is_err());
        let mut rules: Vec<DecisionRule> = base.into();
        rules.push(rules[0].clone());
        assert!(RuleChain::from_rules(rules).is_err());
    }

    #[test]
    fn rule_order_in_input_is_irrelevant() {
        let base = RuleChain::default_chain(&ConstructionParams::default());
        let mut rules: Vec<DecisionRule> = base.clone().into();
        rules.reverse();
        assert_eq!(RuleChain::from_rules(rules).unwrap(), base);
    }

    #[test]
    fn bind_params_applies_rule_values() {
        let mut rules: Vec<DecisionRule> = RuleChain::default_chain(&ConstructionParams::default()).into();
        rules[4].params.insert("tau".into(), ParamValue::Number(0.55));
        let chain = RuleChain::from_rules(rules).unwrap();
        let p = chain.bind_params(&ConstructionParams::default()).unwrap();
        assert_eq!(p.tau, 0.55);
        assert_eq!(p.max_attach_order_gap, None);
    }

    #[test]
    fn json_round_trip() {
        let c = RuleChain::default_chain(&ConstructionParams::default());
        let back: RuleChain = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn cypher_default_chain() {
        let c = RuleChain::default_chain(&ConstructionParams::default());
        let text = export_cypher(&c);
        assert!(text.contains("(:DecisionLayer {name:'EU_Decision_Layer', version:'2.0'})"));
        assert!(text.contains("rule_id:'D1_010'"));
        assert!(text.contains(
            "MATCH (a:DecisionRule {rule_id:'D1_040'}), (b:DecisionRule {rule_id:'D2_010'}) CREATE (a)-[:NEXT]->(b);"
        ));
        assert_eq!(text.lines().count(), 1 + 8 + 8 + 7);
        assert_eq!(parse_cypher(&text).unwrap(), c);
        assert_eq!(export_cypher(&parse_cypher(&text).unwrap()), text);
    }

    #[test]
    fn cypher_empty_chain_is_layer_only() {
        let text = export_cypher(&RuleChain::default());
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("CREATE (:DecisionLayer"));
        assert_eq!(parse_cypher(&text).unwrap(), RuleChain::default());
    }

    #[test]
    fn cypher_reader_reports_line() {
        let text = "CREATE (:DecisionLayer {name:'EU_Decision_Layer', version:'2.0'});\nCREATE (:DecisionRule {rule_id:'X'";
        match parse_cypher(text) {
            Err(RuleError::Cypher { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn i1_pass_repair_demote() {
        let params = ConstructionParams::default();
        let t = el("t", CanonRole::Table, 1, [0.1, 0.3, 0.5, 0.5], "");
        let h = el("h", CanonRole::SectionHeader, 0, [0.1, 0.2, 0.5, 0.25], "Results");
        let with_header = unit("p/eu0", EuKind::TablePanel, &[&t, &h]);
        let els = vec![t.clone(), h.clone()];
        assert_eq!(validate_i1(&with_header, &els, &[with_header.clone()], &params).verdict, Verdict::Passed);

        // gap 0.12, aligned centers: distance 0.12
        let u = el("u", CanonRole::UnitLabel, 2, [0.1, 0.62, 0.5, 0.66], "(Unit: %)");
        let bare = unit("p/eu0", EuKind::TablePanel, &[&t]);
        let els = vec![t.clone(), u.clone()];
        let chk = validate_i1(&bare, &els, &[bare.clone()], &params);
        assert_eq!(chk.verdict, Verdict::Repaired);
        assert_eq!(chk.anchor.as_deref(), Some("u"));
        assert!((chk.distance.unwrap() - 0.12).abs() < 1e-12);

        let pic = el("f", CanonRole::Picture, 0, [0.1, 0.1, 0.3, 0.2], "");
        let far = el("far", CanonRole::UnitLabel, 1, [0.1, 0.9, 0.3, 0.95], "(Unit: m)");
        let pu = unit("p/eu0", EuKind::VisualPanel, &[&pic]);
        let els = vec![pic, far];
        assert_eq!(validate_i1(&pu, &els, &[pu.clone()], &params).verdict, Verdict::Demoted);
    }

    #[test]
    fn i1_page_repair_moves_anchor_out_of_text_unit() {
        let params = ConstructionParams::default();
        let chain = RuleChain::default_chain(&params);
        let t = el("t", CanonRole::Table, 0, [0.1, 0.3, 0.5, 0.5], "");
        let u = el("u", CanonRole::UnitLabel, 1, [0.1, 0.52, 0.5, 0.55], "(Unit: %)");
        let eus = vec![unit("p/eu0", EuKind::TablePanel, &[&t]), unit("p/eu1", EuKind::TextCluster, &[&u])];
        let els = vec![t, u];
        let out = validate_page(&eus, &els, &params, &chain, &mut ConstructionTrace::default());
        assert_eq!(out.eus.len(), 1);
        assert_eq!(out.eus[0].members, vec!["t", "u"]);
        assert!(out.sweep.unwrap().is_clean());
    }

    #[test]
    fn i1_page_demotion_keeps_members() {
        let params = ConstructionParams::default();
        let chain = RuleChain::default_chain(&params);
        let f = el("f", CanonRole::Picture, 0, [0.1, 0.1, 0.3, 0.2], "");
        let c = el("c", CanonRole::SupportParagraph, 1, [0.1, 0.2, 0.3, 0.25], "A photo");
        let eus = vec![unit("p/eu0", EuKind::VisualPanel, &[&f, &c])];
        let out = validate_page(&eus, &[f, c], &params, &chain, &mut ConstructionTrace::default());
        assert_eq!(out.eus[0].kind, EuKind::TextCluster);
        assert_eq!(out.eus[0].members.len(), 2);
        assert_eq!(out.elements[0].canon_role, Some(CanonRole::PlainText));
        assert!(out.sweep.unwrap().is_clean());
    }

    #[test]
    fn numeric_extraction() {
        let v = numeric_values("Revenue 1,234 and 10.0%, then 10 and -3.5; 12,34");
        let want: BTreeSet<String> = ["1234", "10", "-3.5", "12", "34"].iter().map(|s| s.to_string()).collect();
        assert_eq!(v, want);
    }

    fn stat_panel(table_text: &str, chart_text: &str) -> (EvidenceUnit, Vec<LayoutElement>) {
        let t = el("t", CanonRole::Table, 1, [0.0, 0.2, 0.5, 0.4], table_text);
        let c = el("c", CanonRole::Chart, 2, [0.0, 0.45, 0.5, 0.7], chart_text);
        let h = el("h", CanonRole::SectionHeader, 0, [0.0, 0.1, 0.5, 0.15], "Sales");
        let u = el("u", CanonRole::UnitLabel, 3, [0.0, 0.72, 0.5, 0.75], "(Unit: kg)");
        let eu = unit("p/eu0", EuKind::StatPanel, &[&t, &c, &h, &u]);
        (eu, vec![h, t, c, u])
    }

    #[test]
    fn i2_ratio_cases() {
        let params = ConstructionParams::default();
        let (eu, els) = stat_panel("10 20 30 99", "10 20 30");
        let chk = validate_i2(&eu, &els, &params);
        assert_eq!((chk.verdict, chk.ratio), (Verdict::Passed, Some(1.0)));

        let (eu, els) = stat_panel("10 20", "10 20 30 40 50");
        let chk = validate_i2(&eu, &els, &params);
        assert_eq!(chk.verdict, Verdict::Split);
        assert!((chk.ratio.unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(chk.table_members, vec!["h", "t"]);
        assert_eq!(chk.chart_members, vec!["c", "u"]);

        let (eu, els) = stat_panel("10 20 30", "10 20 30 40 50");
        assert_eq!(validate_i2(&eu, &els, &params).verdict, Verdict::Passed);

        let (eu, els) = stat_panel("10 20 30", "no numbers here");
        assert_eq!(validate_i2(&eu, &els, &params).verdict, Verdict::NotApplicable);
    }

    #[test]
    fn i2_split_on_page_preserves_partition() {
        let params = ConstructionParams::default();
        let chain = RuleChain::default_chain(&params);
        let (eu, els) = stat_panel("1 2", "5 6 7");
        let out = validate_page(&[eu], &els, &params, &chain, &mut ConstructionTrace::default());
        assert_eq!(out.eus.len(), 2);
        assert_eq!(out.eus[0].kind, EuKind::TablePanel);
        assert_eq!(out.eus[1].kind, EuKind::ChartPanel);
        assert_eq!(out.eus[1].eu_id, "p/eu1");
        let sweep = out.sweep.unwrap();
        assert!(sweep.partition_holds());
        assert!(sweep.anchorless.is_empty());
    }

    #[test]
    fn sweep_flags_violations() {
        let a = el("a", CanonRole::PlainText, 0, [0.0, 0.0, 0.1, 0.1], "x");
        let b = el("b", CanonRole::PlainText, 1, [0.0, 0.2, 0.1, 0.3], "y");
        let mut bad = unit("p/eu0", EuKind::TextCluster, &[&a]);
        bad.footprint = Bbox::new(0.0, 0.0, 0.5, 0.5).unwrap();
        let rep = completeness_sweep(&[bad.clone(), bad], &[a, b]);
        assert_eq!(rep.missing, vec!["b"]);
        assert_eq!(rep.duplicated, vec!["a"]);
        assert_eq!(rep.bad_footprint.len(), 2);
        assert!(!rep.is_clean());
    }

    fn arb_value() -> impl Strategy<Value = ParamValue> {
        prop_oneof![
            any::<bool>().prop_map(ParamValue::Bool),
            (-1e6f64..1e6).prop_map(ParamValue::Number),
            "[ -~\\n]{0,12}".prop_map(ParamValue::Text),
        ]
    }

    fn arb_chain() -> impl Strategy<Value = RuleChain> {
        prop::collection::vec(
            (
                "[A-Z][0-9]_[0-9]{3}",
                0..3usize,
                0..4usize,
                "[ -~]{0,16}",
                prop::collection::btree_map("[a-z_]{1,8}", arb_value(), 0..3),
                any::<bool>(),
                any::<bool>(),
            ),
            0..6,
        )
        .prop_map(|rows| {
            let mut seen = HashSet::new();
            let rules = rows
                .into_iter()
                .filter(|r| seen.insert(r.0.clone()))
                .map(|(id, ph, gr, desc, params, active, schema_only)| DecisionRule {
                    rule_id: id,
                    phase: [RulePhase::Construction, RulePhase::Restoration, RulePhase::Validation][ph],
                    granularity: [Granularity::Page, Granularity::Candidate, Granularity::EuPair, Granularity::Eu][gr],
                    description: desc,
                    params,
                    active,
                    schema_only,
                    next: None,
                })
                .collect();
            RuleChain::linked(rules).unwrap()
        })
    }

    proptest! {
        #[test]
        fn cypher_round_trip_any_chain(c in arb_chain()) {
            let text = export_cypher(&c);
            prop_assert_eq!(parse_cypher(&text).unwrap(), c);
        }

        #[test]
        fn cypher_export_is_injective(a in arb_chain(), b in arb_chain()) {
            prop_assert_eq!(a == b, export_cypher(&a) == export_cypher(&b));
        }

        #[test]
        fn i2_ratio_matches_set_arithmetic(t in prop::collection::btree_set(0u32..40, 0..15), c in prop::collection::btree_set(0u32..40, 1..15)) {
            let render = |s: &BTreeSet<u32>| s.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ");
            let inter = t.intersection(&c).count() as f64 / c.len() as f64;
            let got = overlap_ratio(&numeric_values(&render(&t)), &numeric_values(&render(&c))).unwrap();
            prop_assert_eq!(got, inter);
        }
    }
}
