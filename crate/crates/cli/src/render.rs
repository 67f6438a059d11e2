use std::fmt::Write;

use gazemetric::eval::{AggregateReport, DistributionSummary};

fn row(out: &mut String, name: &str, s: &DistributionSummary) {
    let _ = writeln!(
        out,
        "{name:<10} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>8.4} {:>8.4}",
        s.min, s.q1, s.median, s.q3, s.max, s.mean, s.whisker_low, s.whisker_high
    );
}

/// Plain-text summary: config line, metric distributions, frequency ranking.
pub fn render_report(r: &AggregateReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "report format v{}, {} averaging, {} runs, seed {}",
        r.format_version,
        r.averaging,
        r.runs.len(),
        r.master_seed
    );
    let _ = writeln!(
        out,
        "kernel {}, C {}, {} features: {}",
        r.config.svm.kernel.name(),
        r.config.svm.c,
        r.columns.len(),
        r.columns.join(", ")
    );
    let _ = writeln!(out, "chance level 0.3333");
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<10} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>8} {:>8}",
        "metric", "min", "q1", "median", "q3", "max", "mean", "whisk_lo", "whisk_hi"
    );
    for (name, s) in r.summary.iter() {
        row(&mut out, name, s);
    }
    let undefined: u32 = r.runs.iter().map(|x| x.metrics.undefined_precision).sum();
    if undefined > 0 {
        let _ = writeln!(out, "({undefined} class-runs with no predictions counted as precision 0)");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "top-{} frequency over {} runs", r.frequency.k, r.frequency.runs);
    for (i, e) in r.frequency.ranked().iter().enumerate() {
        let _ = writeln!(out, "{:>3}. {:<20} {:>6}", i + 1, e.feature, e.count);
    }
    if let Some(sel) = &r.selection {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "columns selected from a full pass of {} runs (seed {}), mean accuracy {:.4}",
            sel.source_runs, sel.source_seed, sel.full_accuracy.mean
        );
    }
    out
}
