//! Acceptance suite: one line per criterion, library checks plus the same
//! scenario driven through the `parisian` binary.
//!
//! Criterion 3 contains a sub-check that cannot hold (5 = 9 − 3 − 1 lies in
//! Ω(1,3,9), so its Riesz coefficient is 1/16, not 0). It runs as stated
//! and prints FAIL; the suite only tolerates exactly those failing checks.
//! Set `ACCEPTANCE_STRICT=1` to make that failure fatal as well.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use parisian_core::numerics::rat;
use parisian_core::verify::{self, CriterionReport};
use parisian_core::generate_sequence;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_parisian");

/// Runtime limits per criterion, where one is given.
const LIMITS: [(u8, u64); 5] = [(1, 1), (2, 30), (4, 5), (6, 60), (8, 60)];

/// Checks of criterion 3 that fail by arithmetic, not by implementation.
const KNOWN_FAILURES: [(u8, &str); 2] = [(3, "coefficient(5) = 0"), (3, "quadrature(5) within 1e-8 of 0")];

struct Line {
    id: u8,
    ok: bool,
    elapsed: Duration,
    notes: Vec<String>,
}

impl Line {
    fn new(id: u8) -> Self {
        Self {
            id,
            ok: true,
            elapsed: Duration::ZERO,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        if !ok {
            self.ok = false;
            self.notes.push(format!("failed: {name}: {}", detail.into()));
        }
    }
}

struct Run {
    code: i32,
    stdout: Vec<u8>,
    stderr: String,
}

fn parisian(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(BIN).current_dir(dir).args(args).output().expect("spawn parisian");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: out.stdout,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("artifact written")).expect("valid json")
}

fn library(id: u8, line: &mut Line) -> CriterionReport {
    let start = Instant::now();
    let report = verify::run(id).expect("known criterion");
    let elapsed = start.elapsed();
    line.elapsed = elapsed;
    if let Some(&(_, secs)) = LIMITS.iter().find(|(c, _)| *c == id) {
        line.check(
            &format!("runtime < {secs} s"),
            elapsed < Duration::from_secs(secs),
            format!("{elapsed:.2?}"),
        );
    }
    for c in report.failures() {
        line.check(&c.name, false, c.detail.clone());
    }
    report
}

fn cli_omega(dir: &Path, line: &mut Line) {
    let run = parisian(dir, &["omega", "--terms", "1,3,9", "--depth", "3"]);
    let text = String::from_utf8_lossy(&run.stdout);
    let values: Vec<i64> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("value"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    line.check("cli omega exit 0", run.code == 0, run.stderr.clone());
    line.check("cli omega 27 values in [-13, 13]", values.len() == 27 && values.iter().all(|v| v.abs() <= 13), "");
    let pair = parisian(dir, &["omega", "--terms", "1,2"]);
    line.check(
        "cli (1,2) reported non-dissociate",
        String::from_utf8_lossy(&pair.stdout).contains("# dissociate: false"),
        "",
    );
}

fn cli_fourier(dir: &Path, line: &mut Line) {
    std::fs::write(dir.join("dirac.json"), r#"{"atoms":[{"point":{"num":"0","den":"1"},"mass":{"num":"1","den":"1"}}]}"#)
        .unwrap();
    let run = parisian(dir, &["fourier", "--measure", "dirac.json", "--from", "0", "--to", "3"]);
    let text = String::from_utf8_lossy(&run.stdout);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    line.check("cli fourier exit 0", run.code == 0, run.stderr.clone());
    line.check(
        "cli dirac rows abs = 0.5",
        rows.len() == 4 && rows.iter().all(|r| r.ends_with(",0.5")),
        text.to_string(),
    );
}

fn cli_riesz(dir: &Path, line: &mut Line) {
    let ok = parisian(dir, &["riesz", "--terms", "1,3,9", "--freq", "0,13,14"]);
    line.check("cli riesz 0, 13, 14 within 1e-8", ok.code == 0, ok.stderr.clone());
}

fn cli_construction(dir: &Path, line: &mut Line) {
    let run = parisian(dir, &["gen-seq", "--alpha", "1/2", "--n1", "16", "--depth", "2", "--out", "params.json"]);
    line.check("cli gen-seq exit 0", run.code == 0, run.stderr.clone());
    let doc = read_json(dir.join("params.json"));
    line.check("cli N = [16, 4097]", doc["params"]["N"] == serde_json::json!(["16", "4097"]), doc["params"]["N"].to_string());
    let run = parisian(
        dir,
        &["build", "--params", "params.json", "--out", "stages.json", "--summary", "summary.csv", "--measure-out", "mu2.json"],
    );
    line.check("cli build verifies exactly", run.code == 0, run.stderr.clone());
    let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap_or_default();
    line.check("cli summary row 2", summary.contains("\n2,4097,262241,29,464,true\n"), summary.clone());
}

fn cli_plain_selection(dir: &Path, line: &mut Line) {
    let run = parisian(
        dir,
        &[
            "select", "--measure", "dirac.json", "--candidate-base", "4", "--candidate-count", "12", "--delta", "1",
            "--depth", "3", "--out", "cert1.json",
        ],
    );
    line.check("cli plain selection exit 0", run.code == 0, run.stderr.clone());
    let cert = read_json(dir.join("cert1.json"));
    let table = cert["certificate"]["table"].as_array().cloned().unwrap_or_default();
    line.check(
        "cli plain selection 27 entries at 0.5",
        table.len() == 27 && table.iter().all(|e| (e["abs"].as_f64().unwrap() - 0.5).abs() <= 1e-12),
        "",
    );
}

fn cli_truncated_selection(dir: &Path, line: &mut Line) {
    let params = generate_sequence(&rat(1, 2), &BigInt::from(16), 4).expect("valid");
    let mu = verify::truncation_atoms(&params).expect("valid");
    std::fs::write(dir.join("atoms.json"), serde_json::to_string(&mu).unwrap()).unwrap();
    std::fs::write(dir.join("params4.json"), serde_json::to_string(&params).unwrap()).unwrap();
    let run = parisian(
        dir,
        &["select", "--measure", "atoms.json", "--mode", "lemma2", "--params", "params4.json", "--depth", "2", "--out", "cert2.json"],
    );
    line.check("cli truncated selection exit 0", run.code == 0, run.stderr.clone());
    let cert = &read_json(dir.join("cert2.json"))["certificate"];
    let chain = cert["gamma_chain"].as_array().cloned().unwrap_or_default();
    let bound = cert["lower_bound"].as_f64().unwrap_or(f64::NAN);
    line.check(
        "cli truncated selection bound γ/6",
        chain.len() == 3 && bound == chain[1].as_f64().unwrap() / 6.0,
        format!("{bound} vs {chain:?}"),
    );
}

fn cli_audit(dir: &Path, line: &mut Line) {
    let run = parisian(
        dir,
        &["dim-audit", "--params", "params.json", "--s", "1/10,1/4,2/5", "--out", "audit.json", "--csv", "audit.csv"],
    );
    line.check("cli dim-audit passes", run.code == 0, run.stderr.clone());
    let doc = read_json(dir.join("audit.json"));
    let est = doc["reports"][0]["dimension_estimate"].as_f64().unwrap_or(f64::NAN);
    line.check("cli dimension estimate in [0.44, 0.55]", (0.44..=0.55).contains(&est), format!("{est}"));
}

/// Every command twice, plus once under a one-thread cap, byte for byte.
fn cli_determinism(dir: &Path, line: &mut Line) {
    let commands: [&[&str]; 7] = [
        &["gen-seq", "--alpha", "1/2", "--n1", "16", "--depth", "3"],
        &["build", "--params", "params.json"],
        &["fourier", "--measure", "mu2.json", "--from", "-300", "--to", "300"],
        &["omega", "--terms", "1,3,9,27"],
        &["riesz", "--terms", "1,3,9", "--from", "-14", "--to", "14", "--tol", "1"],
        &["select", "--measure", "dirac.json", "--candidate-base", "4", "--delta", "1", "--depth", "3"],
        &["dim-audit", "--params", "params.json", "--s", "1/4"],
    ];
    for args in commands {
        let a = parisian(dir, args);
        let b = parisian(dir, args);
        let mut capped = vec!["--threads", "1"];
        capped.extend_from_slice(args);
        let c = parisian(dir, &capped);
        line.check(&format!("cli {} exit 0", args[0]), a.code == 0, a.stderr.clone());
        line.check(
            &format!("cli {} byte-identical", args[0]),
            !a.stdout.is_empty() && a.stdout == b.stdout && a.stdout == c.stdout,
            "",
        );
    }
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir = tmp.path();
    let mut fatal = Vec::new();
    for id in verify::CRITERIA {
        let mut line = Line::new(id);
        let report = library(id, &mut line);
        match id {
            1 => cli_omega(dir, &mut line),
            2 => cli_fourier(dir, &mut line),
            3 => cli_riesz(dir, &mut line),
            4 => cli_construction(dir, &mut line),
            6 => cli_plain_selection(dir, &mut line),
            7 => cli_truncated_selection(dir, &mut line),
            8 => cli_audit(dir, &mut line),
            9 => cli_determinism(dir, &mut line),
            _ => {}
        }
        let status = if line.ok { "PASS" } else { "FAIL" };
        println!("criterion {} {status} {} ({:.2?})", line.id, report.title, line.elapsed);
        for note in &line.notes {
            println!("    {note}");
        }
        let unexpected = report
            .failures()
            .any(|c| !KNOWN_FAILURES.contains(&(id, c.name.as_str())));
        let cli_failed = line.notes.len() > report.failures().count();
        if unexpected || cli_failed || (strict && !line.ok) {
            fatal.push(id);
        }
    }
    let self_test = parisian(dir, &["self-test", "--criteria", "1,3"]);
    let named = self_test.stderr.contains("criteria 3 failed");
    println!(
        "self-test exit {} on the failing criterion{}",
        self_test.code,
        if self_test.code == 1 && named { "" } else { " (expected 1)" }
    );
    if self_test.code != 1 || !named {
        fatal.push(0);
    }
    if !fatal.is_empty() {
        eprintln!("acceptance failures: {fatal:?}");
        std::process::exit(1);
    }
}
