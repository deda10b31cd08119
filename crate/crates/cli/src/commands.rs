use std::path::{Path, PathBuf};

use eu_core::builder::Builder;
use eu_core::decision::{completeness_sweep, export_cypher, validate_page, RuleChain};
use eu_core::eval::{
    chunks_from_elements, chunks_from_eus, delta_table, evaluate, generate_qa, EvalOptions, Protocol, QaPair,
    RetrievalScope,
};
use eu_core::footprint::{convergence_report, TrackResult};
use eu_core::ingest::{load_pages, normalize_pages, IngestConfig, InputFormat, RawPage};
use eu_core::model::{EvidenceUnit, LayoutElement};
use eu_core::roles::RoleNormalizer;
use eu_core::synthetic::synthetic_corpus;
use rayon::prelude::*;

use crate::config::Settings;
use crate::error::CliError;
use crate::files::{
    read_json, write_build, write_json, write_text, BuiltPage, PageElements, Validation, BUILD_FILE, ELEMENTS_FILE,
    EUS_FILE, GRAPH_FILE,
};

/// Which chunkings `eval` scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Chunking {
    Element,
    Eu,
    Both,
}

// ------------------------------------------------------------- normalize

pub fn load_raw(input: &Path, format: InputFormat) -> Result<Vec<RawPage>, CliError> {
    let mut raws = load_pages(input, format)?;
    raws.sort_by(|a, b| a.page_id.cmp(&b.page_id));
    Ok(raws)
}

pub fn normalize(s: &Settings, raws: &[RawPage], format: InputFormat, parser: &str) -> Result<Vec<PageElements>, CliError> {
    let cfg = IngestConfig::for_format(format);
    let pages = normalize_pages(raws, &cfg)?;
    let normalizer = RoleNormalizer::new(s.typemap.clone(), s.provider.as_ref(), s.params.clone())?;
    let pages = s.in_pool(|| {
        pages
            .into_par_iter()
            .zip(raws.par_iter())
            .map(|(mut els, raw)| {
                normalizer.normalize_roles(&mut els, parser)?;
                Ok(PageElements {
                    page_id: raw.page_id.clone(),
                    elements: els,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()
    })??;
    Ok(pages)
}

pub fn cmd_normalize(s: &Settings, input: &Path, format: InputFormat, parser: &str, out: &Path) -> Result<(), CliError> {
    let raws = load_raw(input, format)?;
    let pages = normalize(s, &raws, format, parser)?;
    write_json(&out.join(ELEMENTS_FILE), &pages)?;
    let n: usize = pages.iter().map(|p| p.elements.len()).sum();
    println!("normalized {} page(s), {n} element(s) -> {}", pages.len(), out.join(ELEMENTS_FILE).display());
    Ok(())
}

// ----------------------------------------------------------------- build

fn validate_built(page: &mut BuiltPage, s: &Settings, chain: &RuleChain) {
    let out = validate_page(&page.eus, &page.elements, &s.params, chain, &mut page.trace);
    page.eus = out.eus;
    page.elements = out.elements;
    page.validation = Some(Validation {
        records: out.records,
        sweep: out.sweep,
    });
}

fn build_page(s: &Settings, builder: &Builder, page: &PageElements, validate: bool) -> Result<BuiltPage, CliError> {
    let b = builder.build_page(&page.elements)?;
    let mut elements = b.elements;
    elements.extend(page.elements.iter().filter(|e| e.excluded).cloned());
    elements.sort_by(|a, b| a.order.cmp(&b.order).then_with(|| a.element_id.cmp(&b.element_id)));
    let mut built = BuiltPage {
        page_id: page.page_id.clone(),
        eus: b.eus,
        trace: b.trace,
        elements,
        validation: None,
    };
    if validate {
        validate_built(&mut built, s, &s.chain);
    }
    Ok(built)
}

pub fn build(s: &Settings, pages: &[PageElements], validate: bool) -> Result<Vec<BuiltPage>, CliError> {
    let builder = Builder::new(s.params.clone(), s.provider.as_ref()).with_rules(s.chain.active_rules());
    let mut built = s.in_pool(|| {
        pages
            .par_iter()
            .map(|p| build_page(s, &builder, p, validate))
            .collect::<Result<Vec<_>, CliError>>()
    })??;
    built.sort_by(|a, b| a.page_id.cmp(&b.page_id));
    Ok(built)
}

/// Partition, footprint and anchoring violations over all pages.
pub fn invariant_report(pages: &[BuiltPage]) -> Vec<String> {
    let mut out = Vec::new();
    for p in pages {
        let sweep = completeness_sweep(&p.eus, &p.elements);
        if !sweep.is_clean() {
            out.push(format!(
                "{}: missing {:?}, duplicated {:?}, unknown {:?}, empty {:?}, bad footprint {:?}, anchorless {:?}",
                p.page_id, sweep.missing, sweep.duplicated, sweep.unknown, sweep.empty, sweep.bad_footprint, sweep.anchorless
            ));
        }
    }
    out
}

fn finish_invariants(pages: &[BuiltPage], strict: bool) -> Result<(), CliError> {
    let problems = invariant_report(pages);
    if problems.is_empty() {
        return Ok(());
    }
    for p in &problems {
        eprintln!("warning: {p}");
    }
    if strict {
        return Err(CliError::Invariant(format!("{} page(s) violate invariants", problems.len())));
    }
    Ok(())
}

fn summarize(pages: &[BuiltPage]) -> String {
    let eus: usize = pages.iter().map(|p| p.eus.len()).sum();
    let visual = pages.iter().flat_map(|p| &p.eus).filter(|u| u.kind.is_visual()).count();
    format!("{} page(s), {eus} unit(s), {visual} visual", pages.len())
}

pub fn cmd_build(s: &Settings, input: &Path, out: &Path, validate: bool, strict: bool) -> Result<(), CliError> {
    let mut pages: Vec<PageElements> = read_json(input)?;
    pages.sort_by(|a, b| a.page_id.cmp(&b.page_id));
    let built = build(s, &pages, validate)?;
    write_build(out, &built)?;
    println!("built {} -> {}", summarize(&built), out.join(BUILD_FILE).display());
    finish_invariants(&built, strict)
}

pub fn cmd_validate(s: &Settings, input: &Path, out: &Path, strict: bool) -> Result<(), CliError> {
    let mut pages: Vec<BuiltPage> = read_json(input)?;
    s.in_pool(|| pages.par_iter_mut().for_each(|p| validate_built(p, s, &s.chain)))?;
    pages.sort_by(|a, b| a.page_id.cmp(&b.page_id));
    write_build(out, &pages)?;
    let changed = pages
        .iter()
        .flat_map(|p| p.validation.iter().flat_map(|v| &v.records))
        .filter(|r| !matches!(r.verdict, eu_core::decision::Verdict::Passed | eu_core::decision::Verdict::NotApplicable))
        .count();
    println!("validated {}, {changed} unit(s) repaired, demoted or split", summarize(&pages));
    finish_invariants(&pages, strict)
}

// ------------------------------------------------------------- footprint

/// Parses `name=path,name=path`. A directory path means its `eus.json`.
pub fn parse_tracks(spec: &str) -> Result<Vec<(String, PathBuf)>, CliError> {
    let mut out: Vec<(String, PathBuf)> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, path) = item
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("--tracks expects name=path, got `{item}`")))?;
        if out.iter().any(|(n, _)| n == name) {
            return Err(CliError::Input(format!("track `{name}` given twice")));
        }
        out.push((name.to_string(), PathBuf::from(path)));
    }
    if out.len() < 2 {
        return Err(CliError::Input("--tracks needs at least two tracks".into()));
    }
    Ok(out)
}

pub fn cmd_footprint(tracks: &str, out: &Path) -> Result<(), CliError> {
    let mut results = Vec::new();
    for (name, path) in parse_tracks(tracks)? {
        let file = if path.is_dir() { path.join(EUS_FILE) } else { path };
        let eus: Vec<EvidenceUnit> = read_json(&file)?;
        results.push(TrackResult::from_units(name, eus));
    }
    let report = convergence_report(&results);
    report.write(out)?;
    for p in &report.pairs {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        println!(
            "{} vs {}: mean IoU {}, mean best IoU {}, exact {} of {}, uncomparable pages {}",
            p.track_a,
            p.track_b,
            f(p.mean_iou),
            f(p.mean_best_iou),
            p.exact_matches,
            p.matched,
            p.uncomparable.len()
        );
    }
    Ok(())
}

// ------------------------------------------------------------------ eval

pub struct EvalArgs<'a> {
    pub qa: Option<&'a Path>,
    pub generate_qa: bool,
    pub protocol: Protocol,
    pub ks: Vec<usize>,
    pub chunks: Chunking,
    pub scope: RetrievalScope,
    pub track: String,
}

pub fn eval(s: &Settings, pages: &[BuiltPage], args: &EvalArgs, out: &Path) -> Result<String, CliError> {
    let page_elements: Vec<Vec<LayoutElement>> = pages.iter().map(|p| p.elements.clone()).collect();
    let qas: Vec<QaPair> = match (args.qa, args.generate_qa) {
        (Some(path), _) => read_json(path)?,
        (None, true) => {
            let qas = generate_qa(&page_elements, &args.protocol);
            write_json(&out.join("qas.json"), &qas)?;
            qas
        }
        (None, false) => return Err(CliError::Input("eval needs --qa <file> or --generate-qa".into())),
    };
    let provider = s.provider.as_ref();
    let elements: Vec<LayoutElement> = page_elements.into_iter().flatten().collect();
    let opts = |chunking: &str| EvalOptions {
        ks: args.ks.clone(),
        scope: args.scope,
        track: args.track.clone(),
        protocol: args.protocol.name.clone(),
        chunking: chunking.into(),
    };
    let mut reports = Vec::new();
    if matches!(args.chunks, Chunking::Element | Chunking::Both) {
        let chunks = chunks_from_elements(&elements, provider)?;
        let r = evaluate(&qas, &chunks, provider, &opts("element"))?;
        r.write(out, "report_element")?;
        reports.push(r);
    }
    if matches!(args.chunks, Chunking::Eu | Chunking::Both) {
        let eus: Vec<EvidenceUnit> = pages.iter().flat_map(|p| p.eus.iter().cloned()).collect();
        let chunks = chunks_from_eus(&eus, &elements, provider)?;
        let r = evaluate(&qas, &chunks, provider, &opts("eu"))?;
        r.write(out, "report_eu")?;
        reports.push(r);
    }
    let summary = match reports.as_slice() {
        [base, eu] => {
            let table = delta_table(base, eu);
            write_text(&out.join("delta.txt"), &table)?;
            table
        }
        [r] => format!(
            "{} chunking: {} queries, LCS {}, R@1 {}\n",
            r.chunking,
            r.overall.queries,
            r.overall.avg_lcs.map_or("-".into(), |v| format!("{v:.4}")),
            r.recall_at(1).map_or("-".into(), |v| format!("{v:.4}"))
        ),
        _ => String::new(),
    };
    Ok(format!("{} QA pairs, protocol {}\n{summary}", qas.len(), args.protocol.name))
}

pub fn cmd_eval(s: &Settings, input: &Path, args: &EvalArgs, out: &Path) -> Result<(), CliError> {
    let mut pages: Vec<BuiltPage> = read_json(input)?;
    pages.sort_by(|a, b| a.page_id.cmp(&b.page_id));
    print!("{}", eval(s, &pages, args, out)?);
    Ok(())
}

// ----------------------------------------------------------------- graph

pub fn cmd_export_graph(s: &Settings, out: &Path) -> Result<(), CliError> {
    let path = out.join(GRAPH_FILE);
    write_text(&path, &export_cypher(&s.chain))?;
    println!("{} rule(s) -> {}", s.chain.len(), path.display());
    Ok(())
}

pub fn cmd_synthetic(pages: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    if pages == 0 {
        return Err(CliError::Input("--pages must be at least 1".into()));
    }
    write_json(out, &synthetic_corpus(pages, seed))?;
    println!("{pages} synthetic page(s) -> {}", out.display());
    Ok(())
}

// --------------------------------------------------------------- run-all

pub struct RunAllArgs<'a> {
    pub raws: Vec<RawPage>,
    pub format: InputFormat,
    pub parser: &'a str,
    pub ks: Vec<usize>,
    pub scope: RetrievalScope,
    pub strict: bool,
}

/// normalize, build with validation, evaluate under both protocols and
/// export the rule graph, all into `out`.
pub fn cmd_run_all(s: &Settings, args: RunAllArgs, out: &Path) -> Result<(), CliError> {
    let pages = normalize(s, &args.raws, args.format, args.parser)?;
    write_json(&out.join(ELEMENTS_FILE), &pages)?;
    let built = build(s, &pages, true)?;
    write_build(out, &built)?;
    println!("built {}", summarize(&built));
    for protocol in [Protocol::strict(), Protocol::fair()] {
        let dir = out.join(&protocol.name);
        let eval_args = EvalArgs {
            qa: None,
            generate_qa: true,
            protocol,
            ks: args.ks.clone(),
            chunks: Chunking::Both,
            scope: args.scope,
            track: args.parser.to_string(),
        };
        print!("{}", eval(s, &built, &eval_args, &dir)?);
    }
    cmd_export_graph(s, out)?;
    finish_invariants(&built, args.strict)
}
