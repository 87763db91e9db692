//! Plain-text report rendering: markdown tables plus TSV for machines.

use std::fmt::Write as _;

use super::bench::{BenchReport, METHODS};

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

/// Markdown benchmark report with the method × tier table, the per-band
/// fused accuracies, the ablation section, and the window sweep matrix.
pub fn render_markdown(report: &BenchReport) -> String {
    let mut out = String::new();
    let tiers: Vec<String> =
        report.config.tiers.iter().map(|t| t.name().to_string()).collect();

    let _ = writeln!(out, "# Command source identification benchmark\n");
    let _ = writeln!(out, "- config digest: `{}`", report.digest);
    let _ = writeln!(out, "- seeds: {:?}", report.config.seeds);
    let _ = writeln!(
        out,
        "- dataset: {} subjects × {} segments, {} candidates, {:.0}–{:.0} m",
        report.config.dataset.n_subjects,
        report.config.dataset.segments_per_subject,
        report.config.dataset.n_candidates,
        report.config.dataset.distance_range_m.0,
        report.config.dataset.distance_range_m.1
    );
    let _ = writeln!(
        out,
        "- mean validation accuracy (fused model): {}\n",
        pct(report.val_accuracy.iter().sum::<f64>() / report.val_accuracy.len().max(1) as f64)
    );

    let _ = writeln!(out, "## Accuracy (%) ± SD by desynchronization tier\n");
    let mut header = String::from("| method |");
    let mut rule = String::from("|---|");
    for t in &tiers {
        let _ = write!(header, " {t} |");
        rule.push_str("---|");
    }
    let _ = writeln!(out, "{header}");
    let _ = writeln!(out, "{rule}");
    for method in METHODS {
        if let Some(per_tier) = report.method_tier.get(method) {
            let mut row = format!("| {method} |");
            for t in &tiers {
                match per_tier.get(t) {
                    Some(m) => {
                        let _ = write!(row, " {} (±{}) |", pct(m.mean), pct(m.sd));
                    }
                    None => row.push_str(" absent |"),
                }
            }
            let _ = writeln!(out, "{row}");
        } else {
            let _ = writeln!(out, "| {method} | absent |");
        }
    }

    if let Some(film) = &report.film_ablation {
        let _ = writeln!(out, "\n## Quality-modulation ablation (fused model without FiLM)\n");
        let mut row = String::from("| csinet_no_film |");
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{rule}");
        for t in &tiers {
            match film.get(t) {
                Some(m) => {
                    let _ = write!(row, " {} (±{}) |", pct(m.mean), pct(m.sd));
                }
                None => row.push_str(" absent |"),
            }
        }
        let _ = writeln!(out, "{row}");
    }

    let _ = writeln!(out, "\n## Fused model, clean tier, accuracy per distance band\n");
    let edges = &report.config.band_edges;
    let _ = writeln!(out, "| band (m) | accuracy (%) |");
    let _ = writeln!(out, "|---|---|");
    for (b, acc, _) in &report.per_band_clean {
        let _ = writeln!(out, "| {:.0}–{:.0} | {} |", edges[*b], edges[b + 1], pct(*acc));
    }

    if let Some(sweep) = &report.sweep {
        let _ = writeln!(out, "\n## Single-window sweep (clean tier, accuracy %)\n");
        let mut h = String::from("| window |");
        let mut r = String::from("|---|");
        for b in 0..edges.len() - 1 {
            let _ = write!(h, " {:.0}–{:.0} m |", edges[b], edges[b + 1]);
            r.push_str("---|");
        }
        let _ = writeln!(out, "{h}");
        let _ = writeln!(out, "{r}");
        for (wi, w) in sweep.windows.iter().enumerate() {
            let mut row = format!("| {w} |");
            for b in 0..edges.len() - 1 {
                let _ = write!(row, " {} |", pct(sweep.matrix[wi][b]));
            }
            let _ = writeln!(out, "{row}");
        }
        let _ = writeln!(out, "\n- best window per band: {:?}", sweep.best_per_band);
        let _ = writeln!(
            out,
            "- fused overall {} vs best single window {}",
            pct(sweep.fused_overall),
            pct(sweep.best_single_overall)
        );
    }

    out
}

/// TSV rows: method, tier, mean, sd, n.
pub fn render_tsv(report: &BenchReport) -> String {
    let mut out = String::from("method\ttier\taccuracy_mean\taccuracy_sd\truns\n");
    for method in METHODS {
        if let Some(per_tier) = report.method_tier.get(method) {
            for tier in &report.config.tiers {
                if let Some(m) = per_tier.get(tier.name()) {
                    let _ = writeln!(
                        out,
                        "{method}\t{}\t{:.6}\t{:.6}\t{}",
                        tier.name(),
                        m.mean,
                        m.sd,
                        m.n
                    );
                }
            }
        }
    }
    if let Some(film) = &report.film_ablation {
        for tier in &report.config.tiers {
            if let Some(m) = film.get(tier.name()) {
                let _ = writeln!(
                    out,
                    "csinet_no_film\t{}\t{:.6}\t{:.6}\t{}",
                    tier.name(),
                    m.mean,
                    m.sd,
                    m.n
                );
            }
        }
    }
    out
}

/// TSV matrix of the single-window sweep: window × band accuracies.
pub fn render_sweep_tsv(report: &BenchReport) -> Option<String> {
    let sweep = report.sweep.as_ref()?;
    let edges = &sweep.band_edges;
    let mut out = String::from("window");
    for b in 0..edges.len() - 1 {
        let _ = write!(out, "\tband_{:.0}_{:.0}", edges[b], edges[b + 1]);
    }
    out.push('\n');
    for (wi, w) in sweep.windows.iter().enumerate() {
        let _ = write!(out, "{w}");
        for b in 0..edges.len() - 1 {
            let _ = write!(out, "\t{:.6}", sweep.matrix[wi][b]);
        }
        out.push('\n');
    }
    Some(out)
}

/// TSV training curves: epoch, lr, loss, val accuracy.
pub fn render_curves_tsv(curves: &[crate::csinet::EpochStats]) -> String {
    let mut out = String::from("epoch\tlr\ttrain_loss\tval_accuracy\n");
    for c in curves {
        let _ = writeln!(out, "{}\t{:.8}\t{:.6}\t{:.6}", c.epoch, c.lr, c.train_loss, c.val_accuracy);
    }
    out
}
