use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use mdswpir::field::FieldMatrix;
use mdswpir::leakage::{build_query_table, LeakageModel};
use mdswpir::lp::SimplexOptions;
use mdswpir::mds::{check_mds, make_rs_code, MdsCode};
use mdswpir::optimizer::{summarize, write_tradeoff_csv, TradeoffModel};
use mdswpir::protocol::TcpCluster;
use mdswpir::scheme::SchemeInstance;
use mdswpir::sim::{simulate_with, verify_retrievability, write_jsonl, Deployment, VerifyMode};
use mdswpir::storage::FileSet;

use crate::config::{InstanceConfig, Pmf};
use crate::Failure;

/// Alphabets larger than this are summarized, not listed.
pub const ELIDE_ABOVE: usize = 1000;

/// Retrievals run by `simulate` when no count is configured.
pub const DEFAULT_SAMPLES: usize = 1000;

/// Tolerance for the floating-point cross-checks in `verify`.
const CHECK_TOL: f64 = 1e-9;

fn scheme(cfg: &InstanceConfig) -> Result<SchemeInstance, Failure> {
    Ok(SchemeInstance::new(cfg.scheme, cfg.files, cfg.servers, cfg.dim)?)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Sends an artifact to `--out`, or to standard output.
fn emit(cfg: &InstanceConfig, text: &str) -> Result<(), Failure> {
    match &cfg.out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Usage(format!("cannot write output: {e}")))
        }
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> mdswpir::Result<()>) -> Result<String, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv writers emit utf-8"))
}

pub fn enumerate(cfg: &InstanceConfig, limit: usize) -> Result<(), Failure> {
    let s = scheme(cfg)?;
    let alphabet = s.alphabet();
    let mut text = cfg.header("enumerate");
    let _ = writeln!(text, "cardinality,{}", alphabet.len());
    if alphabet.len() > limit {
        let _ = writeln!(text, "# members elided: {} > {limit}", alphabet.len());
    } else {
        let _ = writeln!(text, "index,strategy");
        for (i, m) in alphabet.members().iter().enumerate() {
            let entries: Vec<String> = m.entries().iter().map(u8::to_string).collect();
            let _ = writeln!(text, "{},{}", i + 1, entries.join(" "));
        }
    }
    emit(cfg, &text)
}

pub fn table(cfg: &InstanceConfig) -> Result<(), Failure> {
    let s = scheme(cfg)?;
    let t = build_query_table(&s, cfg.server)?;
    let mut text = cfg.header("table");
    let _ = writeln!(text, "# queries = {}", t.len());
    text.push_str(&csv_bytes(|b| t.write_csv(b))?);
    emit(cfg, &text)
}

pub fn tradeoff(cfg: &InstanceConfig) -> Result<(), Failure> {
    let s = scheme(cfg)?;
    let lm = LeakageModel::build(&s)?;
    let model = TradeoffModel::new(&s, &lm, cfg.symmetry)?;
    let grid = model.default_grid(cfg.grid);
    let results = model.solve_targets(&grid, &SimplexOptions::default());
    let sweep = summarize(&grid, results)?;
    let (lo, hi) = model.cost_range();
    let mut text = cfg.header("tradeoff");
    let _ = writeln!(text, "# D range = [{lo:.10}, {hi:.10}]");
    for d in &sweep.infeasible {
        let _ = writeln!(text, "# infeasible D_target = {d:.10}");
        eprintln!("warning: D_target = {d:.10} is infeasible");
    }
    text.push_str(&csv_bytes(|b| write_tradeoff_csv(&model, &sweep.points, b))?);
    emit(cfg, &text)?;
    if let Some(script) = &cfg.plot_script {
        let csv = cfg
            .out
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "tradeoff.csv".into());
        write_file(script, &plot_script(cfg, &csv))?;
    }
    Ok(())
}

fn plot_script(cfg: &InstanceConfig, csv: &str) -> String {
    let mut text = String::from("#!/usr/bin/env python3\n");
    text.push_str(&cfg.header("tradeoff"));
    let _ = write!(
        text,
        r##"import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv:?}
with open(path) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
x = [float(r["leakage_normalized"]) for r in rows]
y = [float(r["rate"]) for r in rows]
plt.plot(x, y, marker="o", label="{label}")
plt.xlabel("normalized maximal leakage")
plt.ylabel("rate")
plt.legend()
plt.grid(True)
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
"##,
        label = format_args!("{} (M={}, N={}, K={})", cfg.scheme, cfg.files, cfg.servers, cfg.dim),
    );
    text
}

/// A systematic Reed-Solomon code, or, under the test hook, the same
/// generator with column 2 overwritten by column 1.
fn build_code(cfg: &InstanceConfig, corrupt: bool) -> mdswpir::Result<MdsCode> {
    let code = make_rs_code(cfg.servers, cfg.dim, cfg.field())?;
    if !corrupt {
        return Ok(code);
    }
    let g = code.generator();
    let mut bad = FieldMatrix::zeros(g.field(), g.rows(), g.cols());
    for r in 0..g.rows() {
        for c in 0..g.cols() {
            bad.set(r, c, g.get(r, if c == 1 { 0 } else { c }));
        }
    }
    MdsCode::from_generator(bad)
}

struct Report {
    text: String,
    failed: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.failed += usize::from(!ok);
    }
}

pub fn verify(cfg: &InstanceConfig, corrupt_generator: bool) -> Result<(), Failure> {
    let s = scheme(cfg)?;
    let mut report = Report {
        text: cfg.header("verify"),
        failed: 0,
    };
    let _ = writeln!(
        report.text,
        "# mode = {}",
        match cfg.samples {
            Some(n) => format!("sampled ({n} runs)"),
            None => "exhaustive".into(),
        }
    );

    let code = match build_code(cfg, corrupt_generator) {
        Ok(code) => {
            report.check("mds", check_mds(&code), "every K-subset of generator columns is invertible");
            Some(code)
        }
        Err(e @ mdswpir::Error::NotMds { .. }) => {
            report.check("mds", false, format!("MDS violation: {e}"));
            None
        }
        Err(e) => return Err(e.into()),
    };

    let lm = LeakageModel::build(&s)?;
    let normalized = lm.tables().iter().filter(|t| t.is_normalized()).count();
    report.check(
        "tables",
        normalized == lm.tables().len(),
        format!("{normalized}/{} server tables sum to 1 for every file", lm.tables().len()),
    );
    match lm.first_unequal_server() {
        None => report.check("time-sharing", true, "all servers see the same conditional query table"),
        Some(j) => report.check("time-sharing", false, format!("server {j} differs from server 1")),
    }
    let uniform = vec![1.0 / lm.strategies() as f64; lm.strategies()];
    let per = lm.per_server_maxl(&uniform)?;
    let spread = per.iter().map(|l| (l.bits - per[0].bits).abs()).fold(0.0, f64::max);
    report.check(
        "leakage",
        spread <= CHECK_TOL,
        format!("per-server MaxL at uniform z = {:.10} bits, spread {spread:.3e}", per[0].bits),
    );
    let expected = lm.download_cost(&uniform)?;

    if let Some(code) = code {
        let files = FileSet::random(cfg.field(), cfg.files, s.params().lambda, cfg.dim, cfg.seed)?;
        let dep = Deployment::new(s, files, &code)?;
        let mode = match cfg.samples {
            Some(count) => VerifyMode::Sampled { count, seed: cfg.seed },
            None => VerifyMode::Exhaustive,
        };
        let v = verify_retrievability(&dep, mode)?;
        report.check(
            "retrievability",
            v.passed(),
            format!("{}/{} retrievals decoded the desired file", v.runs - v.failures.len(), v.runs),
        );
        for f in v.failures.iter().take(10) {
            let _ = writeln!(
                report.text,
                "#   failed: file {} strategy {} shift {}: {}",
                f.file,
                f.strategy + 1,
                f.shift,
                f.error.as_deref().unwrap_or("wrong file")
            );
        }
        let mean = v.mean_downloaded();
        match mode {
            VerifyMode::Exhaustive => report.check(
                "download",
                (mean - expected).abs() <= CHECK_TOL,
                format!("mean downloaded {mean:.10} vs D(uniform) {expected:.10}"),
            ),
            VerifyMode::Sampled { .. } => {
                let _ = writeln!(
                    report.text,
                    "# download: mean downloaded {mean:.10} vs D(uniform) {expected:.10} (not checked when sampled)"
                );
            }
        }
    }

    let _ = writeln!(
        report.text,
        "{}",
        if report.failed == 0 {
            "result: PASS".to_string()
        } else {
            format!("result: FAIL ({} failed)", report.failed)
        }
    );
    emit(cfg, &report.text)?;
    if report.failed > 0 {
        return Err(Failure::Verification(format!("{} verification checks failed", report.failed)));
    }
    Ok(())
}

fn pmf(cfg: &InstanceConfig, strategies: usize) -> Result<Vec<f64>, Failure> {
    match &cfg.pmf {
        Pmf::Uniform => Ok(vec![1.0 / strategies as f64; strategies]),
        Pmf::Weights(w) if w.len() != strategies => Err(Failure::Usage(format!(
            "pmf has {} weights, the alphabet has {strategies} strategies",
            w.len()
        ))),
        Pmf::Weights(w) => {
            let total: f64 = w.iter().sum();
            Ok(w.iter().map(|v| v / total).collect())
        }
    }
}

pub fn simulate(cfg: &InstanceConfig) -> Result<(), Failure> {
    let s = scheme(cfg)?;
    let z = pmf(cfg, s.alphabet().len())?;
    let lm = LeakageModel::build(&s)?;
    let expected = lm.download_cost(&z)?;
    let leak = lm.overall_maxl(&z)?;
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let dep = Deployment::random(s, Some(cfg.field()), cfg.seed)?;

    let mut records = Vec::new();
    let mut keep = |r: &mdswpir::sim::SimulationRecord<'_>| {
        records.push(serde_json::json!({
            "sample": r.sample,
            "seed": r.seed,
            "transcript": r.transcript,
        }));
        Ok(())
    };
    let report = if cfg.tcp {
        let cluster = TcpCluster::spawn(dep.servers())?;
        simulate_with(&dep, &mut cluster.transport(), &z, samples, cfg.seed, cfg.file, &mut keep)?
    } else {
        simulate_with(&dep, &mut dep.in_process(), &z, samples, cfg.seed, cfg.file, &mut keep)?
    };

    let mut summary = cfg.header("simulate");
    let _ = writeln!(summary, "samples,{}", report.samples);
    let _ = writeln!(summary, "failures,{}", report.failures);
    let _ = writeln!(summary, "mean_downloaded,{:.10}", report.mean_downloaded);
    let _ = writeln!(summary, "expected_download,{expected:.10}");
    let _ = writeln!(summary, "leakage_bits,{:.10}", leak.bits);
    let _ = writeln!(summary, "leakage_normalized,{:.10}", leak.normalized);
    let distinct: Vec<String> = report.query_counts.iter().map(|c| c.len().to_string()).collect();
    let _ = writeln!(summary, "distinct_queries_per_server,{}", distinct.join(" "));

    match &cfg.out {
        Some(path) => {
            let mut body = cfg.header("simulate").lines().map(|l| {
                serde_json::json!({ "comment": l.trim_start_matches("# ") })
            }).collect::<Vec<_>>();
            body.extend(records);
            let jsonl = csv_bytes(|b| write_jsonl(&body, b))?;
            write_file(path, &jsonl)?;
            print!("{summary}");
        }
        None => print!("{summary}"),
    }
    if report.failures > 0 {
        return Err(Failure::Verification(format!("{} retrievals failed", report.failures)));
    }
    Ok(())
}
