use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn corrnet(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_corrnet"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("CORRNET_THREADS", t),
        None => cmd.env_remove("CORRNET_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn write_two_block_spec(dir: &Path) -> PathBuf {
    let spec = dir.join("spec.json");
    std::fs::write(
        &spec,
        r#"{"kind":"blocks","n_days":250,"seed":4,"blocks":[[6,0.7],[6,0.7]],"inter_corr":0.1}"#,
    )
    .unwrap();
    spec
}

#[test]
fn synth_then_report_finds_two_components_below_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_two_block_spec(tmp.path());
    let synth_out = tmp.path().join("synth");
    ok(&corrnet(
        &["synth", "--synth", spec.to_str().unwrap(), "--out", synth_out.to_str().unwrap()],
        None,
    ));
    assert!(synth_out.join("panel.csv").exists());
    assert!(synth_out.join("panel.fills.csv").exists());
    assert!(synth_out.join("labels.json").exists());

    let report = tmp.path().join("report");
    ok(&corrnet(
        &[
            "report",
            "--input",
            synth_out.join("panel.csv").to_str().unwrap(),
            "--out",
            report.to_str().unwrap(),
            "--sims",
            "100",
            "--seed",
            "3",
        ],
        None,
    ));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(report.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], 1);
    let noise = summary["noise_threshold"].as_f64().unwrap();
    let hit = summary["components_per_threshold"]
        .as_array()
        .unwrap()
        .iter()
        .any(|t| {
            t["threshold"].as_f64().unwrap() < noise
                && t["components"] == 2
                && t["nodes"] == 12
        });
    assert!(hit, "{summary:#}");
    for f in [
        "correlation.csv",
        "distance.csv",
        "envelope.json",
        "sweep.json",
        "spectrum.csv",
        "noise_band.json",
        "e2.tsv",
        "modes.csv",
        "coords.csv",
        "graphs/graph_T0.50.json",
        "graphs/graph_T0.50.dot",
    ] {
        assert!(report.join(f).exists(), "{f}");
    }
    let graph: Value =
        serde_json::from_str(&std::fs::read_to_string(report.join("graphs/graph_T0.50.json")).unwrap())
            .unwrap();
    assert_eq!(graph["nodes"][0]["coords"].as_array().unwrap().len(), 3);
}

#[test]
fn corr_on_fixture_has_unit_diagonal() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&corrnet(
        &[
            "corr",
            "--input",
            fixture("three_no_gaps.csv").to_str().unwrap(),
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        None,
    ));
    let mut rdr = csv::Reader::from_path(tmp.path().join("correlation.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["symbol", "AAA", "BBB", "CCC"]);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.unwrap();
        assert_eq!(rec[i + 1].parse::<f64>().unwrap(), 1.0);
        // 17 significant digits
        assert!(rec[1].contains("e"));
        assert_eq!(rec[1].split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
    }
}

#[test]
fn report_is_byte_identical_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_two_block_spec(tmp.path());
    let run = |name: &str, threads: Option<&str>| {
        let out = tmp.path().join(name);
        ok(&corrnet(
            &[
                "report",
                "--synth",
                spec.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--sims",
                "50",
            ],
            threads,
        ));
        read_dir_bytes(&out)
    };
    let a = run("a", None);
    let b = run("b", None);
    let c = run("c", Some("1"));
    let d = run("d", Some("4"));
    assert!(a.len() > 10);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a, d);
}

#[test]
fn failures_emit_error_json_and_nonzero_status() {
    let tmp = tempfile::tempdir().unwrap();
    let out = corrnet(
        &[
            "corr",
            "--input",
            fixture("bad_price.csv").to_str().unwrap(),
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "parse");
    assert!(err["error"]["message"].as_str().unwrap().contains("BBB"));
    assert!(tmp.path().join("error.json").exists());
    assert!(!tmp.path().join("correlation.csv").exists());
}

#[test]
fn ingest_graph_embed_and_benchmark() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let input = fixture("ten_by_five.csv");
    ok(&corrnet(&["ingest", "--input", input.to_str().unwrap(), "--out", dir.to_str().unwrap()], None));
    assert_eq!(
        std::fs::read_to_string(dir.join("panel.fills.csv")).unwrap(),
        std::fs::read_to_string(fixture("ten_by_five_expected.fills.csv")).unwrap()
    );

    let spec = write_two_block_spec(dir);
    let synth_dir = dir.join("s");
    ok(&corrnet(&["synth", "--synth", spec.to_str().unwrap(), "--out", synth_dir.to_str().unwrap()], None));
    let panel = synth_dir.join("panel.csv");

    let g = dir.join("g");
    ok(&corrnet(
        &["graph", "--input", panel.to_str().unwrap(), "--out", g.to_str().unwrap(), "--threshold", "0.45"],
        None,
    ));
    assert!(g.join("graphs/graph_T0.45.dot").exists());

    let e = dir.join("e");
    ok(&corrnet(&["embed", "--input", panel.to_str().unwrap(), "--out", e.to_str().unwrap()], None));
    let coords = std::fs::read_to_string(e.join("coords.csv")).unwrap();
    assert!(coords.starts_with("symbol,x,y,z\n"));
    assert_eq!(coords.lines().count(), 13);

    // benchmark = first column of the panel itself
    let mut rdr = csv::Reader::from_path(&panel).unwrap();
    let mut bench = String::from("date,BENCH\n");
    for rec in rdr.records() {
        let rec = rec.unwrap();
        bench.push_str(&format!("{},{}\n", &rec[0], &rec[1]));
    }
    let bench_path = dir.join("bench.csv");
    std::fs::write(&bench_path, bench).unwrap();
    let sp = dir.join("sp");
    ok(&corrnet(
        &[
            "spectra", "--input", panel.to_str().unwrap(), "--out", sp.to_str().unwrap(),
            "--sims", "20", "--benchmark", bench_path.to_str().unwrap(),
        ],
        None,
    ));
    let b: Value = serde_json::from_str(&std::fs::read_to_string(sp.join("benchmark.json")).unwrap()).unwrap();
    let c = b["correlation"].as_f64().unwrap();
    assert!(c > 0.3 && c <= 1.0, "{c}");
    let tsv = std::fs::read_to_string(sp.join("e2.tsv")).unwrap();
    assert!(tsv.starts_with("symbol\tsign\tmagnitude\n"));

    let sw = dir.join("sw");
    ok(&corrnet(
        &["sweep", "--input", panel.to_str().unwrap(), "--out", sw.to_str().unwrap(), "--grid", "0.2:1.0:0.2", "--corr", "pearson"],
        None,
    ));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(sw.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(s["thresholds"].as_array().unwrap().len(), 5);

    let su = dir.join("su");
    ok(&corrnet(
        &["surrogate", "--input", panel.to_str().unwrap(), "--out", su.to_str().unwrap(), "--sims", "10", "--permute"],
        None,
    ));
    let env: Value = serde_json::from_str(&std::fs::read_to_string(su.join("envelope.json")).unwrap()).unwrap();
    assert_eq!(env["mode"], "permutation");
    assert_eq!(env["histogram"]["counts"].as_array().unwrap().len(), 200);
}
