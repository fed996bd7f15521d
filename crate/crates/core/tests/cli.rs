use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cusp-ricci"))
}

fn figure8() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/figure8.tri")
}

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_figure8() {
    let out = bin().arg("validate").arg(figure8()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("N: 2"));
    assert!(text.contains("s: 1"));
    assert!(text.contains("rank(C): 1"));
    assert!(text.contains("edge degrees: [6, 6]"));
    assert!(text.contains("status: pass"));
}

#[test]
fn validate_rejects_count_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.tri");
    std::fs::write(
        &path,
        r#"{"num_edges": 6, "num_cusps": 4, "tets": [{"edges": [0,1,2,3,4,5], "cusps": [0,1,2,3]}]}"#,
    )
    .unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("status: fail"));
}

#[test]
fn flow_random_init_converges() {
    let out = bin()
        .args(["flow"])
        .arg(figure8())
        .args(["--random-init", "42", "--range", "1.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["converged"], true);
    assert_eq!(doc["manifest"]["seed"], 42);
}

#[test]
fn flow_missing_file() {
    let out = bin().args(["flow", "missing.tri"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.tri"));
}

#[test]
fn usage_errors_exit_2() {
    let out = bin().args(["flow"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("flow").arg(figure8()).args(["--scheme", "heun"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("flow").arg(figure8()).args(["--step", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn strip_timestamp(doc: &str) -> String {
    doc.lines()
        .filter(|l| !l.contains("started_at_unix"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn flow_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let trace = dir.path().join(format!("trace-{tag}.csv"));
        let result = dir.path().join(format!("result-{tag}.json"));
        let out = bin()
            .arg("flow")
            .arg(figure8())
            .args(["--lengths", "3.0,-3.0", "--scheme", "euler", "--trace-full"])
            .arg("--trace")
            .arg(&trace)
            .arg("--result")
            .arg(&result)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (
            std::fs::read_to_string(trace).unwrap(),
            std::fs::read_to_string(result).unwrap(),
        )
    };
    let (trace_a, result_a) = run("a");
    let (trace_b, result_b) = run("b");
    assert_eq!(trace_a, trace_b);
    assert_eq!(strip_timestamp(&result_a), strip_timestamp(&result_b));

    let mut lines = trace_a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,knorm_inf,knorm_2,energy,volume,degenerate_tets,l0,l1"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 8);
    assert_eq!(first[5], "2");

    let doc: serde_json::Value = serde_json::from_str(&result_a).unwrap();
    assert_eq!(doc["converged"], true);
    assert_eq!(doc["manifest"]["scheme"], "euler");
    // 17 significant digits
    let raw = result_a.lines().find(|l| l.contains("final_volume")).unwrap();
    let mantissa = raw.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let digits = mantissa.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(digits.len(), 17);
}

#[test]
fn angles_and_report() {
    let out = bin()
        .arg("angles")
        .arg(figure8())
        .args(["--lengths", "3,-3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("tet,class,a12,a13,a14,a34,a24,a23,volume"));
    assert!(text.contains("degenerate(12.34)"));

    let out = bin()
        .arg("report")
        .arg(figure8())
        .args(["--lengths", "0.1,-0.1"])
        .output()
        .unwrap();
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let eig = doc["laplacian"]["kernel_restricted_eigenvalues"][0].as_f64().unwrap();
    assert!(eig < 0.0);
    assert_eq!(doc["degenerate_tets"].as_array().unwrap().len(), 0);

    let out = bin()
        .arg("report")
        .arg(figure8())
        .args(["--lengths", "0.1,-0.1,0.3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn version_flag() {
    let out = bin().arg("--version").output().unwrap();
    assert!(stdout(&out).contains(env!("CARGO_PKG_VERSION")));
}
