//! Convenience wiring of the stages over whole page sets.

use crate::builder::{Builder, PageBuild};
use crate::decision::{validate_page, RuleChain, ValidatedPage};
use crate::embed::EmbeddingProvider;
use crate::error::Error;
use crate::eval::{chunks_from_elements, chunks_from_eus, evaluate, generate_qa, EvalOptions, EvalReport, Protocol, QaPair};
use crate::ingest::{normalize_pages, IngestConfig, RawPage};
use crate::model::{EvidenceUnit, LayoutElement};
use crate::roles::RoleNormalizer;

/// Normalizes boxes and assigns roles for every page.
pub fn prepare_pages(
    raws: &[RawPage],
    cfg: &IngestConfig,
    normalizer: &RoleNormalizer,
    parser: &str,
) -> Result<Vec<Vec<LayoutElement>>, Error> {
    let mut pages = normalize_pages(raws, cfg)?;
    for p in &mut pages {
        normalizer.normalize_roles(p, parser)?;
    }
    Ok(pages)
}

/// Builds units for every page, optionally followed by the restoration and
/// validation rules of `chain`.
pub fn build_pages(
    pages: &[Vec<LayoutElement>],
    builder: &Builder,
    validate_with: Option<&RuleChain>,
) -> Result<Vec<PageBuild>, Error> {
    pages
        .iter()
        .map(|els| build_one(els, builder, validate_with))
        .collect()
}

pub fn build_one(
    elements: &[LayoutElement],
    builder: &Builder,
    validate_with: Option<&RuleChain>,
) -> Result<PageBuild, Error> {
    let mut b = builder.build_page(elements)?;
    if let Some(chain) = validate_with {
        let mut all = b.elements.clone();
        // keep excluded elements so ids stay resolvable
        all.extend(elements.iter().filter(|e| e.excluded).cloned());
        let ValidatedPage { eus, elements, .. } = validate_page(&b.eus, &all, &builder.params, chain, &mut b.trace);
        b.eus = eus;
        b.elements = elements.into_iter().filter(|e| !e.excluded).collect();
    }
    Ok(b)
}

/// Baseline (one chunk per element) and unit-chunking reports over the same
/// generated questions.
pub struct Comparison {
    pub qas: Vec<QaPair>,
    pub baseline: EvalReport,
    pub eu: EvalReport,
}

pub fn compare_chunkings(
    pages: &[Vec<LayoutElement>],
    builds: &[PageBuild],
    provider: &dyn EmbeddingProvider,
    protocol: &Protocol,
    opts: &EvalOptions,
) -> Result<Comparison, Error> {
    let qas = generate_qa(pages, protocol);
    let elements: Vec<LayoutElement> = pages.iter().flatten().cloned().collect();
    let base_chunks = chunks_from_elements(&elements, provider)?;
    let built: Vec<LayoutElement> = builds.iter().flat_map(|b| b.elements.iter().cloned()).collect();
    let eus: Vec<EvidenceUnit> = builds.iter().flat_map(|b| b.eus.iter().cloned()).collect();
    let eu_chunks = chunks_from_eus(&eus, &built, provider)?;
    let with = |chunking: &str| EvalOptions {
        chunking: chunking.into(),
        protocol: protocol.name.clone(),
        ..opts.clone()
    };
    let baseline = evaluate(&qas, &base_chunks, provider, &with("element"))?;
    let eu = evaluate(&qas, &eu_chunks, provider, &with("eu"))?;
    Ok(Comparison { qas, baseline, eu })
}
