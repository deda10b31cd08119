//! Retrieval evaluation: QA generation from annotated pages, chunk sets for
//! element-level and unit-level retrieval, character LCS and the ranking
//! metrics (Avg LCS, Recall@K, MinK, AvgChars).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{element_vector, EmbeddingProvider};
use crate::error::{EmbedError, Error, EvalError};
use crate::model::{cosine_sim, CanonRole, EvidenceUnit, LayoutElement};

/// Per-side input cap for LCS; longer strings are truncated at the tail.
pub const LCS_CAP: usize = 20_000;

/// `lcs_ratio` above which a retrieved chunk counts as a hit.
pub const HIT_THRESHOLD: f64 = 0.3;

pub const DEFAULT_KS: [usize; 4] = [1, 2, 3, 5];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub name: String,
    /// Maximum reading-order distance of evidence elements from the source.
    pub order_distance: usize,
}

impl Protocol {
    pub fn strict() -> Self {
        Self {
            name: "strict".into(),
            order_distance: 3,
        }
    }

    pub fn fair() -> Self {
        Self {
            name: "fair".into(),
            order_distance: 4,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "strict" => Some(Self::strict()),
            "fair" => Some(Self::fair()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceType {
    Table,
    Figure,
    Text,
}

impl SourceType {
    pub fn as_str(&self) -> &'static str {
        match self {
            SourceType::Table => "table",
            SourceType::Figure => "figure",
            SourceType::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub qa_id: String,
    pub page_id: String,
    pub source_type: SourceType,
    pub question: String,
    pub evidence: String,
    pub protocol_scope: usize,
}

fn is_text_block(e: &LayoutElement) -> bool {
    e.role().is_paragraph() && !e.is_caption() && !e.is_footnote()
}

fn caption_type(e: &LayoutElement) -> SourceType {
    if e.raw_label.to_ascii_lowercase().contains("table") {
        SourceType::Table
    } else {
        SourceType::Figure
    }
}

fn visual_matches(kind: SourceType, role: CanonRole) -> bool {
    match kind {
        SourceType::Table => role == CanonRole::Table,
        _ => matches!(role, CanonRole::Picture | CanonRole::Chart),
    }
}

fn join_texts<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    parts
        .into_iter()
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// QA pairs of one page.
///
/// Distances count positions in the page's reading sequence of non-excluded
/// elements. A caption yields a table or figure question (by its raw label)
/// whose evidence is the caption, the nearest matching visual, footnotes
/// and text blocks within the distance. A section header yields a text
/// question whose evidence is the header and the text blocks that follow
/// it within the distance, stopping at the next header; headers followed by
/// no text block yield nothing.
pub fn generate_qa_page(elements: &[LayoutElement], protocol: &Protocol) -> Vec<QaPair> {
    let mut seq: Vec<&LayoutElement> = elements.iter().filter(|e| !e.excluded).collect();
    seq.sort_by_key(|e| e.order);
    let d = protocol.order_distance;
    let mut out = Vec::new();
    for (i, src) in seq.iter().enumerate() {
        let question = src.text.trim();
        if question.is_empty() {
            continue;
        }
        let lo = i.saturating_sub(d);
        let hi = (i + d).min(seq.len().saturating_sub(1));
        let picked: Vec<usize> = if src.is_caption() && !src.role().is_visual() {
            let kind = caption_type(src);
            let visual = (lo..=hi)
                .filter(|&j| visual_matches(kind, seq[j].role()))
                .min_by_key(|&j| (j.abs_diff(i), j));
            (lo..=hi)
                .filter(|&j| {
                    j == i || Some(j) == visual || seq[j].is_footnote() || is_text_block(seq[j])
                })
                .collect()
        } else if src.role() == CanonRole::SectionHeader {
            let mut v = vec![i];
            for (j, e) in seq.iter().enumerate().take(hi + 1).skip(i + 1) {
                if e.role() == CanonRole::SectionHeader {
                    break;
                }
                if is_text_block(e) {
                    v.push(j);
                }
            }
            if v.len() == 1 {
                continue;
            }
            v
        } else {
            continue;
        };
        let source_type = if src.role() == CanonRole::SectionHeader && !src.is_caption() {
            SourceType::Text
        } else {
            caption_type(src)
        };
        let evidence = join_texts(picked.iter().map(|&j| seq[j].text.as_str()));
        if evidence.is_empty() {
            continue;
        }
        out.push(QaPair {
            qa_id: format!("{}/qa{}", src.page_id, out.len()),
            page_id: src.page_id.clone(),
            source_type,
            question: question.to_string(),
            evidence,
            protocol_scope: d,
        });
    }
    out
}

/// QA pairs over several pages, page order preserved.
pub fn generate_qa(pages: &[Vec<LayoutElement>], protocol: &Protocol) -> Vec<QaPair> {
    pages.iter().flat_map(|p| generate_qa_page(p, protocol)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub page_id: String,
    pub text: String,
    pub embedding: Vec<f64>,
    pub char_count: usize,
}

impl Chunk {
    fn new(chunk_id: String, page_id: String, text: String, embedding: Vec<f64>) -> Self {
        let char_count = text.chars().count();
        Self {
            chunk_id,
            page_id,
            text,
            embedding,
            char_count,
        }
    }
}

/// One chunk per non-excluded element.
pub fn chunks_from_elements(
    elements: &[LayoutElement],
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<Chunk>, EmbedError> {
    let mut els: Vec<&LayoutElement> = elements.iter().filter(|e| !e.excluded).collect();
    els.sort_by(|a, b| a.page_id.cmp(&b.page_id).then(a.order.cmp(&b.order)));
    els.into_iter()
        .map(|e| {
            let v = element_vector(e, provider)?.unwrap_or_else(|| vec![0.0; provider.dim()]);
            Ok(Chunk::new(e.element_id.clone(), e.page_id.clone(), e.text.clone(), v))
        })
        .collect()
}

/// One chunk per unit: non-empty member texts in reading order joined by
/// newlines. The provider embeds the joined text; when it has no vector for
/// it, the mean of the member vectors is used.
pub fn chunks_from_eus(
    eus: &[EvidenceUnit],
    elements: &[LayoutElement],
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<Chunk>, EmbedError> {
    let by_id: HashMap<(&str, &str), &LayoutElement> = elements
        .iter()
        .map(|e| ((e.page_id.as_str(), e.element_id.as_str()), e))
        .collect();
    let mut out = Vec::with_capacity(eus.len());
    for eu in eus {
        let members: Vec<&LayoutElement> = eu
            .members
            .iter()
            .filter_map(|m| by_id.get(&(eu.page_id.as_str(), m.as_str())).copied())
            .collect();
        let text = join_texts(members.iter().map(|e| e.text.as_str()));
        let v = if text.is_empty() {
            vec![0.0; provider.dim()]
        } else {
            match provider.embed(&text) {
                Ok(v) => v,
                Err(EmbedError::Missing(_)) => mean_vector(&members, provider)?,
                Err(e) => return Err(e),
            }
        };
        out.push(Chunk::new(eu.eu_id.clone(), eu.page_id.clone(), text, v));
    }
    Ok(out)
}

fn mean_vector(members: &[&LayoutElement], provider: &dyn EmbeddingProvider) -> Result<Vec<f64>, EmbedError> {
    let mut acc = vec![0.0; provider.dim()];
    let mut n = 0usize;
    for e in members {
        if let Some(v) = element_vector(e, provider)? {
            if v.len() != acc.len() {
                return Err(EmbedError::Dimension {
                    expected: acc.len(),
                    found: v.len(),
                });
            }
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
            n += 1;
        }
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    Ok(acc)
}

/// Bit-parallel LCS against a fixed pattern (the evidence), reusable over
/// many candidate texts.
pub struct LcsPattern {
    len: usize,
    words: usize,
    masks: HashMap<char, Vec<u64>>,
}

impl LcsPattern {
    pub fn new(pattern: &str) -> Self {
        let chars: Vec<char> = pattern.chars().take(LCS_CAP).collect();
        let words = chars.len().div_ceil(64);
        let mut masks: HashMap<char, Vec<u64>> = HashMap::new();
        for (i, c) in chars.iter().enumerate() {
            masks.entry(*c).or_insert_with(|| vec![0; words])[i / 64] |= 1u64 << (i % 64);
        }
        Self {
            len: chars.len(),
            words,
            masks,
        }
    }

    /// Pattern length in characters, after capping.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Length of the longest common subsequence with `text`.
    pub fn lcs_len(&self, text: &str) -> usize {
        if self.len == 0 {
            return 0;
        }
        let mut v = vec![u64::MAX; self.words];
        for c in text.chars().take(LCS_CAP) {
            let Some(m) = self.masks.get(&c) else { continue };
            let mut carry = 0u64;
            for k in 0..self.words {
                let u = v[k] & m[k];
                let (s1, c1) = v[k].overflowing_add(u);
                let (s2, c2) = s1.overflowing_add(carry);
                carry = u64::from(c1 || c2);
                v[k] = s2 | (v[k] & !u);
            }
        }
        let mut zeros = 0usize;
        for (k, w) in v.iter().enumerate() {
            let bits = (self.len - k * 64).min(64);
            let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
            zeros += (!w & mask).count_ones() as usize;
        }
        zeros
    }

    /// LCS length divided by the pattern length; 0 for an empty pattern.
    pub fn ratio(&self, text: &str) -> f64 {
        if self.len == 0 {
            return 0.0;
        }
        self.lcs_len(text) as f64 / self.len as f64
    }
}

/// Character-level LCS of `retrieved` and `evidence` over the evidence
/// length. Inputs are capped at [`LCS_CAP`] characters each.
pub fn lcs_ratio(retrieved: &str, evidence: &str) -> f64 {
    LcsPattern::new(evidence).ratio(retrieved)
}

pub fn lcs_len(a: &str, b: &str) -> usize {
    LcsPattern::new(b).lcs_len(a)
}

/// Which chunks compete for a query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalScope {
    /// Every chunk of the collection.
    #[default]
    Corpus,
    /// Only chunks from the query's page.
    Page,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub qa_id: String,
    pub source_type: SourceType,
    /// Chunk ids in rank order, up to the largest K.
    pub ranked: Vec<String>,
    /// `lcs_ratio` of each ranked chunk against the evidence.
    pub lcs: Vec<f64>,
    /// 1-based rank of the first hit within the largest K.
    pub min_k: Option<usize>,
    pub hit_chars: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub queries: usize,
    pub avg_lcs: Option<f64>,
    /// K -> fraction of queries with a hit at rank <= K.
    pub recall: BTreeMap<usize, f64>,
    pub mink: Option<f64>,
    pub avg_chars: Option<f64>,
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub track: String,
    pub protocol: String,
    pub chunking: String,
    pub ks: Vec<usize>,
    pub lcs_cap: usize,
    pub hit_threshold: f64,
    pub chunks: usize,
    /// Set when there were no queries; aggregates are then empty.
    pub empty: bool,
    pub overall: Aggregates,
    pub by_source: BTreeMap<SourceType, Aggregates>,
    pub queries: Vec<QueryRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub ks: Vec<usize>,
    pub scope: RetrievalScope,
    pub track: String,
    pub protocol: String,
    pub chunking: String,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            ks: DEFAULT_KS.to_vec(),
            scope: RetrievalScope::Corpus,
            track: "gt".into(),
            protocol: "strict".into(),
            chunking: "element".into(),
        }
    }
}

fn aggregate(records: &[&QueryRecord], ks: &[usize]) -> Aggregates {
    let n = records.len();
    let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    let recall = ks
        .iter()
        .map(|&k| {
            let hits = records.iter().filter(|r| r.min_k.is_some_and(|m| m <= k)).count();
            (k, if n == 0 { 0.0 } else { hits as f64 / n as f64 })
        })
        .collect();
    Aggregates {
        queries: n,
        avg_lcs: mean(records.iter().map(|r| r.lcs.first().copied().unwrap_or(0.0)).collect()),
        recall,
        mink: mean(records.iter().filter_map(|r| r.min_k.map(|k| k as f64)).collect()),
        avg_chars: mean(records.iter().filter_map(|r| r.hit_chars.map(|c| c as f64)).collect()),
        hits: records.iter().filter(|r| r.min_k.is_some()).count(),
    }
}

/// Ranks chunks for every query by cosine similarity (descending, ties by
/// chunk id) and scores the top `max(ks)`.
pub fn evaluate(
    qas: &[QaPair],
    chunks: &[Chunk],
    provider: &dyn EmbeddingProvider,
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    if chunks.is_empty() {
        return Err(EvalError::NoChunks);
    }
    let mut ks = opts.ks.clone();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() || ks[0] == 0 {
        return Err(EvalError::BadKs);
    }
    let max_k = *ks.last().expect("nonempty");
    let mut records = Vec::with_capacity(qas.len());
    for qa in qas {
        let q = provider.embed(&qa.question)?;
        let mut scored: Vec<(f64, &Chunk)> = Vec::new();
        for c in chunks {
            if opts.scope == RetrievalScope::Page && c.page_id != qa.page_id {
                continue;
            }
            let s = cosine_sim(&q, &c.embedding).map_err(EmbedError::from)?;
            scored.push((s, c));
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.chunk_id.cmp(&b.1.chunk_id)));
        let pattern = LcsPattern::new(&qa.evidence);
        let top: Vec<&Chunk> = scored.iter().take(max_k).map(|(_, c)| *c).collect();
        let lcs: Vec<f64> = top.iter().map(|c| pattern.ratio(&c.text)).collect();
        let first = lcs.iter().position(|&r| r > HIT_THRESHOLD);
        records.push(QueryRecord {
            qa_id: qa.qa_id.clone(),
            source_type: qa.source_type,
            ranked: top.iter().map(|c| c.chunk_id.clone()).collect(),
            lcs,
            min_k: first.map(|i| i + 1),
            hit_chars: first.map(|i| top[i].char_count),
        });
    }
    let all: Vec<&QueryRecord> = records.iter().collect();
    let mut by_source = BTreeMap::new();
    for st in [SourceType::Table, SourceType::Figure, SourceType::Text] {
        let sub: Vec<&QueryRecord> = records.iter().filter(|r| r.source_type == st).collect();
        if !sub.is_empty() {
            by_source.insert(st, aggregate(&sub, &ks));
        }
    }
    Ok(EvalReport {
        track: opts.track.clone(),
        protocol: opts.protocol.clone(),
        chunking: opts.chunking.clone(),
        lcs_cap: LCS_CAP,
        hit_threshold: HIT_THRESHOLD,
        chunks: chunks.len(),
        empty: records.is_empty(),
        overall: aggregate(&all, &ks),
        by_source,
        queries: records,
        ks,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

impl EvalReport {
    /// Recall at K; `None` if K was not evaluated.
    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.overall.recall.get(&k).copied()
    }

    /// Recall@K never decreases with K and MinK is at least 1.
    pub fn check_invariants(&self) -> bool {
        let ok = |a: &Aggregates| {
            a.recall.values().zip(a.recall.values().skip(1)).all(|(x, y)| x <= y)
                && a.mink.map_or(true, |m| m >= 1.0)
        };
        ok(&self.overall) && self.by_source.values().all(ok)
    }

    /// Per-query rows followed by aggregate rows (`qa_id` = `*` or
    /// `*<source>`).
    pub fn to_csv(&self) -> Result<String, Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["qa_id".to_string(), "source_type".into(), "lcs_at_1".into(), "min_k".into(), "hit_chars".into()];
        header.extend(self.ks.iter().map(|k| format!("recall@{k}")));
        w.write_record(&header)?;
        for q in &self.queries {
            let mut row = vec![
                q.qa_id.clone(),
                q.source_type.as_str().into(),
                fmt_opt(q.lcs.first().copied()),
                q.min_k.map_or("-".into(), |k| k.to_string()),
                q.hit_chars.map_or("-".into(), |c| c.to_string()),
            ];
            row.extend(self.ks.iter().map(|&k| u8::from(q.min_k.is_some_and(|m| m <= k)).to_string()));
            w.write_record(&row)?;
        }
        let mut agg_row = |id: String, st: &str, a: &Aggregates| -> Result<(), Error> {
            let mut row = vec![
                id,
                st.to_string(),
                fmt_opt(a.avg_lcs),
                fmt_opt(a.mink),
                fmt_opt(a.avg_chars),
            ];
            row.extend(self.ks.iter().map(|k| fmt_opt(a.recall.get(k).copied())));
            w.write_record(&row)?;
            Ok(())
        };
        agg_row("*".into(), "all", &self.overall)?;
        for (st, a) in &self.by_source {
            agg_row(format!("*{}", st.as_str()), st.as_str(), a)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io {
            path: "<csv buffer>".into(),
            source: e.into_error(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(), Error> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, serde_json::to_string_pretty(self)? + "\n").map_err(io(&json))?;
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv, self.to_csv()?).map_err(io(&csv))?;
        Ok(())
    }
}

/// Side-by-side table of a baseline and a unit-chunking report with the
/// difference row.
pub fn delta_table(baseline: &EvalReport, eu: &EvalReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<10} {:>8}", "Method", "LCS");
    for k in &eu.ks {
        let _ = write!(out, " {:>8}", format!("R@{k}"));
    }
    let _ = writeln!(out, " {:>8} {:>10}", "MinK", "AvgChars");
    let row = |out: &mut String, name: &str, r: &EvalReport| {
        let _ = write!(out, "{:<10} {:>8}", name, fmt_opt(r.overall.avg_lcs));
        for k in &eu.ks {
            let _ = write!(out, " {:>8}", fmt_opt(r.recall_at(*k)));
        }
        let _ = writeln!(
            out,
            " {:>8} {:>10}",
            fmt_opt(r.overall.mink),
            r.overall.avg_chars.map_or("-".into(), |c| format!("{c:.1}"))
        );
    };
    row(&mut out, "w/o EU", baseline);
    row(&mut out, "w/ EU", eu);
    let diff = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => format!("{:+.4}", b - a),
        _ => "-".into(),
    };
    let _ = write!(out, "{:<10} {:>8}", "delta", diff(baseline.overall.avg_lcs, eu.overall.avg_lcs));
    for k in &eu.ks {
        let _ = write!(out, " {:>8}", diff(baseline.recall_at(*k), eu.recall_at(*k)));
    }
    let _ = writeln!(
        out,
        " {:>8} {:>10}",
        diff(baseline.overall.mink, eu.overall.mink),
        match (baseline.overall.avg_chars, eu.overall.avg_chars) {
            (Some(a), Some(b)) => format!("{:+.1}", b - a),
            _ => "-".into(),
        }
    );
    if baseline.empty && eu.empty {
        out.push_str("(no QA pairs)\n");
    }
    out
}
