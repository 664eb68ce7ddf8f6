//! Plain-text rendering of experiment and benchmark reports, using the
//! `mean (std)` cell format with three decimal places.

use std::fmt::Write as _;

use crate::harness::{BenchReport, ExperimentReport, MethodSummary};

fn cell(summary: &MethodSummary) -> String {
    match (summary.mean, summary.std) {
        (Some(m), Some(s)) => format!("{m:.3} ({s:.3})"),
        _ => "-".to_owned(),
    }
}

/// Aligned table with one row per pair and one `mean (std)` column per
/// method, plus a winner-count footer.
pub fn experiment_table(report: &ExperimentReport) -> String {
    let mut rows: Vec<[String; 5]> = vec![[
        "pair".into(),
        "naive".into(),
        "sym".into(),
        "asym".into(),
        "winner".into(),
    ]];
    for pr in &report.pairs {
        rows.push([
            format!("{}~{}", pr.var_a, pr.var_b),
            cell(&pr.naive),
            cell(&pr.sym),
            cell(&pr.asym),
            pr.winner.clone().unwrap_or_else(|| "-".into()),
        ]);
    }
    let mut widths = [0usize; 5];
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    writeln!(
        out,
        "n_sub={} trials={} ratio={} seed={}",
        report.config.n_sub,
        report.config.trials,
        report.config.negative_ratio,
        report.config.base_seed
    )
    .unwrap();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
    }
    let mut counts: Vec<(&String, &usize)> = report.winner_counts.iter().collect();
    counts.sort();
    let footer: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(out, "wins: {}", footer.join(" ")).unwrap();
    out
}

/// Timing table in the `{n, asym, sym}` layout, seconds with std.
pub fn bench_table(report: &BenchReport) -> String {
    let mut out = String::new();
    writeln!(out, "d={} em_iters={} repeats={}", report.d, report.em_iters, report.repeats)
        .unwrap();
    writeln!(out, "{:>6}  {:>18}  {:>18}  {:>6}", "n", "asym [s]", "sym [s]", "ratio").unwrap();
    for row in &report.rows {
        writeln!(
            out,
            "{:>6}  {:>18}  {:>18}  {:>6.3}",
            row.n,
            format!("{:.6} ({:.6})", row.asym_mean, row.asym_std),
            format!("{:.6} ({:.6})", row.sym_mean, row.sym_std),
            row.ratio
        )
        .unwrap();
    }
    out
}
