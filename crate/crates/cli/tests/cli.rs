use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eunit"));
    c.env_remove("EU_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn worked_example(track: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data/worked_example")
        .join(format!("{track}.json"))
        .display()
        .to_string()
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn normalize_and_build(dir: &Path, track: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(track);
    ok(&["normalize", "--input", &worked_example(track), "--parser", track, "--out", &s(&out)]);
    let mut args = vec!["build", "--input", "", "--out", "", "--validate"];
    let input = s(&out.join("elements.json"));
    let o = s(&out);
    args[2] = &input;
    args[4] = &o;
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn units_holding<'a>(eus: &'a Value, id: &str) -> &'a Value {
    eus.as_array()
        .unwrap()
        .iter()
        .find(|u| u["members"].as_array().unwrap().iter().any(|m| m == id))
        .unwrap()
}

#[test]
fn normalize_assigns_roles() {
    let tmp = TempDir::new().unwrap();
    ok(&["normalize", "--input", &worked_example("gt"), "--parser", "gt", "--out", &s(tmp.path())]);
    let pages = read(&tmp.path().join("elements.json"));
    let els = pages[0]["elements"].as_array().unwrap();
    let role = |id: &str| els.iter().find(|e| e["element_id"] == id).unwrap()["canon_role"].clone();
    assert_eq!(role("sec_header"), "section_header");
    assert_eq!(role("table"), "table");
    assert_eq!(role("unit_label"), "unit_label");
    assert_eq!(role("para_after"), "support_paragraph");
    assert_eq!(els.iter().filter(|e| e["excluded"] == true).count(), 2);
}

#[test]
fn malformed_input_exits_2_with_field_path() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"page_id": "p", "width_px": 10, "height_px": 10, "elements": [{"label": "text", "bbox": [0, 0, 1]}]}"#).unwrap();
    let out = run(&["normalize", "--input", &s(&bad), "--out", &s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("elements[0].bbox"), "{err}");

    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["normalize", "--input", &s(&bad), "--out", &s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn alien_labels_resolve_without_crashing() {
    let tmp = TempDir::new().unwrap();
    let page = serde_json::json!({
        "page_id": "m", "width_px": 100, "height_px": 100,
        "elements": [
            {"label": "interline_equation", "bbox": [0, 0, 50, 10], "text": "E = mc^2"},
            {"label": "image_body", "bbox": [0, 10, 50, 40], "text": ""},
            {"label": "ref_text", "bbox": [0, 40, 50, 50], "text": "[1] A reference."},
            {"label": "table", "bbox": [0, 50, 50, 80], "text": "a | 1"}
        ]
    });
    let input = tmp.path().join("mineru_like.json");
    std::fs::write(&input, page.to_string()).unwrap();
    ok(&["normalize", "--input", &s(&input), "--parser", "docling", "--out", &s(tmp.path())]);
    let pages = read(&tmp.path().join("elements.json"));
    let roles: Vec<String> = pages[0]["elements"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["canon_role"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(roles.len(), 4);
    assert_eq!(roles[3], "table");

    // a MinerU file read as Docling is an input error, not a crash
    let mineru = tmp.path().join("mineru.json");
    std::fs::write(&mineru, r#"{"pdf_info": [{"page_idx": 0, "page_size": [100, 100], "para_blocks": []}]}"#).unwrap();
    let out = run(&["normalize", "--input", &s(&mineru), "--format", "docling", "--out", &s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn worked_example_builds_match_golden_units() {
    let tmp = TempDir::new().unwrap();
    for (track, table, members, y2) in [
        ("gt", "table", 6, 0.82),
        ("parser_a", "table", 6, 0.82),
        ("paddleocr", "table", 6, 0.82),
        ("mineru", "table", 6, 0.82),
        ("docling", "row_head", 7, 0.70),
    ] {
        let dir = normalize_and_build(tmp.path(), track, &[]);
        let eus = read(&dir.join("eus.json"));
        let u = units_holding(&eus, table);
        assert_eq!(u["members"].as_array().unwrap().len(), members, "{track}");
        assert_eq!(u["footprint"][1].as_f64().unwrap(), 0.07, "{track}");
        assert_eq!(u["footprint"][3].as_f64().unwrap(), y2, "{track}");
        let para_after_unit = units_holding(&eus, "para_after");
        assert_eq!(para_after_unit["eu_id"] == u["eu_id"], track != "docling", "{track}");
    }
    let tracks = ["gt", "parser_a", "docling", "paddleocr", "mineru"]
        .map(|t| format!("{t}={}", s(&tmp.path().join(t))))
        .join(",");
    let fp = tmp.path().join("fp");
    ok(&["footprint", "--tracks", &tracks, "--out", &s(&fp)]);
    let report = read(&fp.join("convergence.json"));
    let pair = report["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["track_a"] == "gt" && p["track_b"] == "docling")
        .unwrap();
    let iou = pair["pages"][0]["best_iou"].as_f64().unwrap();
    assert!((iou - 0.63 / 0.75).abs() < 1e-9, "{iou}");
    let csv = std::fs::read_to_string(fp.join("convergence.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("gt,parser_a,*,")));
}

fn phase_b_assignments(build: &Value) -> usize {
    build
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|p| p["trace"].as_array().unwrap())
        .filter(|t| t["phase"] == "b" || t["phase"] == "B")
        .filter(|t| t["outcome"] == "assigned")
        .count()
}

#[test]
fn higher_tau_never_adds_phase_b_attachments() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus.json");
    ok(&["synthetic", "--pages", "12", "--out", &s(&corpus)]);
    let els = tmp.path().join("n");
    ok(&["normalize", "--input", &s(&corpus), "--parser", "gt", "--out", &s(&els)]);
    let input = s(&els.join("elements.json"));
    let mut counts = Vec::new();
    for tau in ["0.2", "0.4", "0.6", "0.9"] {
        let out = tmp.path().join(format!("tau{tau}"));
        ok(&["build", "--input", &input, "--out", &s(&out), "--set", &format!("tau={tau}")]);
        counts.push(phase_b_assignments(&read(&out.join("build.json"))));
    }
    assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
    assert!(counts[0] > counts[3], "{counts:?}");
}

#[test]
fn trace_phases_are_serialized_as_expected() {
    let tmp = TempDir::new().unwrap();
    let dir = normalize_and_build(tmp.path(), "parser_a", &[]);
    let build = read(&dir.join("build.json"));
    assert!(phase_b_assignments(&build) >= 2, "{}", build[0]["trace"]);
}

fn anchorless_page(dir: &Path, unit_label_y: f64) -> PathBuf {
    let page = serde_json::json!({
        "page_id": "a", "width_px": 1, "height_px": 1, "already_normalized": true,
        "elements": [
            {"id": "t", "label": "Table", "bbox": [0.1, 0.1, 0.9, 0.4], "text": "a | 1"},
            {"id": "p", "label": "Paragraph", "bbox": [0.1, 0.5, 0.9, 0.6], "text": "Unrelated discussion of budgets."},
            {"id": "u", "label": "Paragraph", "bbox": [0.1, unit_label_y, 0.4, unit_label_y + 0.03], "text": "(Unit: %)"}
        ]
    });
    let path = dir.join(format!("anchorless_{unit_label_y}.json"));
    std::fs::write(&path, page.to_string()).unwrap();
    path
}

#[test]
fn validate_repairs_or_demotes_anchorless_visuals() {
    let tmp = TempDir::new().unwrap();
    // 0.45 is within label reattachment; 0.95 is beyond every reach
    let far = anchorless_page(tmp.path(), 0.95);
    let dir = tmp.path().join("far");
    ok(&["normalize", "--input", &s(&far), "--parser", "parser_a", "--out", &s(&dir)]);
    let input = s(&dir.join("elements.json"));

    let out = run(&["build", "--input", &input, "--out", &s(&dir), "--strict-invariants"]);
    assert_eq!(out.status.code(), Some(3), "anchorless visual must be reported");

    ok(&["build", "--input", &input, "--out", &s(&dir), "--validate", "--strict-invariants"]);
    let eus = read(&dir.join("eus.json"));
    assert_eq!(units_holding(&eus, "t")["kind"], "text_cluster");
    let build = read(&dir.join("build.json"));
    let records = build[0]["validation"]["records"].as_array().unwrap();
    assert!(records.iter().any(|r| r["rule_id"] == "D2_010" && r["verdict"] == "demoted"));

    // the unit label was demoted in construction; validate after build
    // on a page whose label sits in a text unit close to the table
    let near = dir.join("near.json");
    let mut pages = read(&dir.join("build.json"));
    let eus = pages[0]["eus"].as_array_mut().unwrap();
    for u in eus.iter_mut() {
        if u["members"].as_array().unwrap().iter().any(|m| m == "t") {
            u["kind"] = "table_panel".into();
        }
    }
    let els = pages[0]["elements"].as_array_mut().unwrap();
    for e in els.iter_mut() {
        match e["element_id"].as_str().unwrap() {
            "t" => e["canon_role"] = "table".into(),
            "u" => {
                e["canon_role"] = "unit_label".into();
                e["bbox"] = serde_json::json!([0.1, 0.42, 0.4, 0.45]);
            }
            _ => {}
        }
    }
    // footprints must follow the moved label
    for u in pages[0]["eus"].as_array_mut().unwrap() {
        if u["members"].as_array().unwrap().iter().any(|m| m == "u") {
            let only_u = u["members"].as_array().unwrap().len() == 1;
            assert!(only_u, "{u}");
            u["footprint"] = serde_json::json!([0.1, 0.42, 0.4, 0.45]);
        }
    }
    pages[0].as_object_mut().unwrap().remove("validation");
    std::fs::write(&near, pages.to_string()).unwrap();
    let vdir = tmp.path().join("validated");
    ok(&["validate", "--input", &s(&near), "--out", &s(&vdir), "--strict-invariants"]);
    let eus = read(&vdir.join("eus.json"));
    let t_unit = units_holding(&eus, "t");
    assert_eq!(t_unit["kind"], "table_panel");
    assert!(t_unit["members"].as_array().unwrap().iter().any(|m| m == "u"));
}

#[test]
fn validate_flags_broken_partition() {
    let tmp = TempDir::new().unwrap();
    let dir = normalize_and_build(tmp.path(), "gt", &[]);
    let mut pages = read(&dir.join("build.json"));
    let members = pages[0]["eus"][0]["members"].as_array_mut().unwrap();
    members.retain(|m| m != "para_after");
    let broken = tmp.path().join("broken.json");
    std::fs::write(&broken, pages.to_string()).unwrap();
    let out = run(&["validate", "--input", &s(&broken), "--out", &s(&tmp.path().join("v")), "--strict-invariants"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["validate", "--input", &s(&broken), "--out", &s(&tmp.path().join("v"))]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn eval_on_synthetic_corpus_favours_units() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus.json");
    ok(&["synthetic", "--pages", "20", "--out", &s(&corpus)]);
    let n = tmp.path().join("n");
    ok(&["normalize", "--input", &s(&corpus), "--parser", "gt", "--out", &s(&n)]);
    ok(&["build", "--input", &s(&n.join("elements.json")), "--out", &s(&n), "--validate"]);
    let build = s(&n.join("build.json"));
    for protocol in ["strict", "fair"] {
        let out_dir = tmp.path().join(protocol);
        let out = ok(&["eval", "--input", &build, "--generate-qa", "--protocol", protocol, "--ks", "1,2,3,5", "--out", &s(&out_dir)]);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("w/ EU") && stdout.contains("delta"), "{stdout}");
        let base = read(&out_dir.join("report_element.json"));
        let eu = read(&out_dir.join("report_eu.json"));
        let r1 = |r: &Value| r["overall"]["recall"]["1"].as_f64().unwrap();
        assert!(r1(&eu) >= r1(&base));
        assert!(r1(&eu) > r1(&base));
        let qas = read(&out_dir.join("qas.json"));
        let scope = if protocol == "fair" { 4 } else { 3 };
        assert!(qas.as_array().unwrap().iter().all(|q| q["protocol_scope"] == scope));
        assert!(out_dir.join("report_eu.csv").exists() && out_dir.join("delta.txt").exists());
    }
    // reuse a QA file
    let out = tmp.path().join("reuse");
    ok(&["eval", "--input", &build, "--qa", &s(&tmp.path().join("strict/qas.json")), "--chunks", "eu", "--out", &s(&out)]);
    assert!(out.join("report_eu.json").exists() && !out.join("report_element.json").exists());
}

#[test]
fn eval_without_questions_reports_empty() {
    let tmp = TempDir::new().unwrap();
    let dir = normalize_and_build(tmp.path(), "gt", &[]);
    let qa = tmp.path().join("none.json");
    std::fs::write(&qa, "[]").unwrap();
    let out = tmp.path().join("e");
    let o = ok(&["eval", "--input", &s(&dir.join("build.json")), "--qa", &s(&qa), "--out", &s(&out)]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("no QA pairs"));
    assert_eq!(read(&out.join("report_eu.json"))["empty"], true);

    let missing = run(&["eval", "--input", &s(&dir.join("build.json")), "--out", &s(&out)]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn export_graph_writes_layer_and_chain() {
    let tmp = TempDir::new().unwrap();
    ok(&["export-graph", "--out", &s(tmp.path())]);
    let text = std::fs::read_to_string(tmp.path().join("decision_layer.cypher")).unwrap();
    assert!(text.starts_with("CREATE (:DecisionLayer {name:'EU_Decision_Layer', version:'2.0'});"));
    assert!(text.contains("(a:DecisionRule {rule_id:'D1_040'}), (b:DecisionRule {rule_id:'D2_010'}) CREATE (a)-[:NEXT]->(b);"));
    assert_eq!(text.lines().filter(|l| l.starts_with("CREATE (:DecisionRule")).count(), 8);
}

#[test]
fn config_file_precedence_and_typos() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "output_dir = \"from_config\"\n[params]\ntua = 0.5\n").unwrap();
    let out = run(&["--config", &s(&cfg), "export-graph"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tua"));

    std::fs::write(&cfg, "output_dir = \"from_config\"\n[params]\ntau = 0.55\n").unwrap();
    let out = bin().args(["export-graph"]).env("EU_CONFIG", &cfg).output().unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(tmp.path().join("from_config/decision_layer.cypher")).unwrap();
    assert!(text.contains("`param_tau`:0.55"), "{text}");

    // the flag wins over the file
    let flag_dir = tmp.path().join("flag");
    ok(&["--config", &s(&cfg), "--set", "tau=0.65", "export-graph", "--out", &s(&flag_dir)]);
    let text = std::fs::read_to_string(flag_dir.join("decision_layer.cypher")).unwrap();
    assert!(text.contains("`param_tau`:0.65"), "{text}");

    let out = run(&["--set", "tau=1.5", "export-graph", "--out", &s(&flag_dir)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["--set", "nonsense=1", "export-graph", "--out", &s(&flag_dir)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rules_file_switches_rules_off() {
    let tmp = TempDir::new().unwrap();
    ok(&["export-graph", "--out", &s(tmp.path())]);
    // round-trip the default chain through JSON with semantic attachment off
    let chain = eu_core::decision::RuleChain::default_chain(&eu_core::model::ConstructionParams::default());
    let mut chain = chain;
    chain.set_active("D1_040", false).unwrap();
    let rules = tmp.path().join("rules.json");
    std::fs::write(&rules, chain.to_json()).unwrap();
    let dir = tmp.path().join("parser_a");
    ok(&["normalize", "--input", &worked_example("parser_a"), "--parser", "parser_a", "--out", &s(&dir)]);
    ok(&["--rules", &s(&rules), "build", "--input", &s(&dir.join("elements.json")), "--out", &s(&dir)]);
    let build = read(&dir.join("build.json"));
    assert_eq!(phase_b_assignments(&build), 0);
}

#[test]
fn outputs_are_deterministic_across_runs_and_jobs() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["--jobs", "1", "run-all", "--synthetic", "8", "--out", &s(&a)]);
    ok(&["--jobs", "4", "run-all", "--synthetic", "8", "--out", &s(&b)]);
    for f in [
        "elements.json",
        "build.json",
        "eus.json",
        "decision_layer.cypher",
        "strict/qas.json",
        "strict/report_eu.json",
        "strict/report_element.csv",
        "fair/delta.txt",
    ] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn precomputed_provider_requires_vectors() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["--provider", "precomputed", "export-graph", "--out", &s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let vecs = tmp.path().join("vecs.json");
    std::fs::write(&vecs, r#"{"dim": 8, "vectors": {}}"#).unwrap();
    // element vectors come from the input; unknown labels stay plain text
    let dir = tmp.path().join("d");
    ok(&[
        "--provider", "precomputed", "--embeddings", &s(&vecs),
        "normalize", "--input", &worked_example("docling"), "--parser", "acme", "--out", &s(&dir),
    ]);
    ok(&["--provider", "precomputed", "--embeddings", &s(&vecs), "build", "--input", &s(&dir.join("elements.json")), "--out", &s(&dir)]);
}
