//! Plain-text rendering of corpus summaries and evaluation results.
//!
//! Output is deterministic byte for byte: fixed decimal places, stable row
//! ordering, and no timestamps, so reports can be diffed across runs.

use crate::corpus::{CorpusSummary, DetectionStats, DistanceStats};
use crate::scalar::Scalar;
use crate::train::{CvReport, DistanceBucket, EpochRecord, KSweepPoint, Metrics};

/// One system in a side-by-side comparison.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub label: String,
    pub metrics: Metrics,
    /// One-sided bootstrap significance against the best system; absent for
    /// the best system itself or when no test was run.
    pub p_value: Option<f64>,
}

/// First column left-aligned, all others right-aligned, two-space gutters.
fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let n_cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        debug_assert_eq!(row.len(), n_cols);
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut write_row = |cells: &[String]| {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i == 0 {
                out.push_str(&format!("{cell:<width$}", width = widths[0]));
            } else {
                out.push_str(&format!("{cell:>width$}", width = widths[i]));
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    write_row(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    for row in rows {
        write_row(row);
    }
    out
}

fn f3(v: f64) -> String {
    format!("{v:.3}")
}

fn metric_cells(m: &Metrics) -> [String; 3] {
    // A star flags ratios that had a zero denominator and were reported as 0.
    let f1 = if m.zero_division {
        format!("{}*", f3(m.f1))
    } else {
        f3(m.f1)
    };
    [f3(m.precision), f3(m.recall), f1]
}

/// Side-by-side precision/recall/F1 of several systems, best F1 first.
pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let mut rows: Vec<&ComparisonRow> = rows.iter().collect();
    rows.sort_by(|a, b| {
        b.metrics
            .f1
            .partial_cmp(&a.metrics.f1)
            .expect("finite F1")
            .then_with(|| a.label.cmp(&b.label))
    });
    let with_p = rows.iter().any(|r| r.p_value.is_some());
    let mut headers = vec!["system", "P", "R", "F1"];
    if with_p {
        headers.push("p vs best");
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let [p, r, f1] = metric_cells(&row.metrics);
            let mut cells = vec![row.label.clone(), p, r, f1];
            if with_p {
                cells.push(match row.p_value {
                    Some(p) => format!("{p:.4}"),
                    None => "-".into(),
                });
            }
            cells
        })
        .collect();
    let mut out = render_table(&headers, &body);
    if rows.iter().any(|r| r.metrics.zero_division) {
        out.push_str("* includes a zero-denominator ratio reported as 0\n");
    }
    out
}

/// Per-bucket metrics by nearest-evidence distance.
pub fn render_distance_table(buckets: &[DistanceBucket]) -> String {
    let rows: Vec<Vec<String>> = buckets
        .iter()
        .map(|b| {
            let [p, r, f1] = metric_cells(&b.metrics);
            vec![b.label.clone(), p, r, f1, b.support.to_string()]
        })
        .collect();
    render_table(&["distance", "P", "R", "F1", "support"], &rows)
}

/// Dev F1 per evidence budget, one column per labeled sweep.
pub fn render_k_sweep(sweeps: &[(String, Vec<KSweepPoint>)]) -> String {
    let mut ks: Vec<usize> = sweeps
        .iter()
        .flat_map(|(_, points)| points.iter().map(|p| p.k))
        .collect();
    ks.sort_unstable();
    ks.dedup();

    let mut headers = vec!["k"];
    for (label, _) in sweeps {
        headers.push(label.as_str());
    }
    let rows: Vec<Vec<String>> = ks
        .iter()
        .map(|&k| {
            let mut cells = vec![k.to_string()];
            for (_, points) in sweeps {
                cells.push(match points.iter().find(|p| p.k == k) {
                    Some(point) => f3(point.dev_metrics.f1),
                    None => "-".into(),
                });
            }
            cells
        })
        .collect();
    render_table(&headers, &rows)
}

/// Fold-by-fold and pooled cross-validation results with the distance
/// breakdown.
pub fn render_cv_report<F: Scalar>(report: &CvReport<F>) -> String {
    let mut rows: Vec<Vec<String>> = report
        .folds
        .iter()
        .map(|fold| {
            let [p, r, f1] = metric_cells(&fold.metrics);
            vec![
                format!("fold {}", fold.fold_index),
                fold.doc_ids.len().to_string(),
                p,
                r,
                f1,
                fold.metrics.support().to_string(),
            ]
        })
        .collect();
    let [p, r, f1] = metric_cells(&report.pooled);
    rows.push(vec![
        "pooled".into(),
        report
            .folds
            .iter()
            .map(|f| f.doc_ids.len())
            .sum::<usize>()
            .to_string(),
        p,
        r,
        f1,
        report.pooled.support().to_string(),
    ]);

    let mut out = format!("function: {}  k: {}\n\n", report.function, report.k);
    out.push_str(&render_table(
        &["split", "docs", "P", "R", "F1", "support"],
        &rows,
    ));
    out.push('\n');
    out.push_str(&render_distance_table(&report.by_distance));
    out
}

/// Per-epoch loss and dev score of one training run.
pub fn render_history(history: &[EpochRecord]) -> String {
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|record| {
            vec![
                record.epoch.to_string(),
                format!("{:.4}", record.train_loss),
                match record.dev_f1 {
                    Some(f1) => f3(f1),
                    None => "-".into(),
                },
            ]
        })
        .collect();
    render_table(&["epoch", "train loss", "dev F1"], &rows)
}

/// Corpus-level counts: split sizes, pair balance, the inter-sentence
/// distance profile, and mention multiplicity.
pub fn render_corpus_report(
    summary: &CorpusSummary,
    distances: &DistanceStats,
    detections: &DetectionStats,
) -> String {
    let split_row = |label: &str, s: &crate::corpus::SplitSummary| {
        vec![
            label.to_string(),
            s.documents.to_string(),
            s.event_mentions.to_string(),
            s.context_mentions.to_string(),
            s.annotations.to_string(),
        ]
    };
    let mut out = render_table(
        &["split", "documents", "events", "context mentions", "annotations"],
        &[
            split_row("dev", &summary.dev),
            split_row("cross-validation", &summary.cross_validation),
            split_row("total", &summary.total),
        ],
    );

    let pairs = summary.positive_pairs + summary.negative_pairs;
    out.push_str(&format!(
        "\ncandidate pairs: {} ({} positive, {} negative, {:.2}% negative)\n",
        pairs,
        summary.positive_pairs,
        summary.negative_pairs,
        summary.negative_fraction * 100.0,
    ));

    out.push_str(&format!(
        "\npositive relations beyond the event sentence: {}\n",
        distances.count,
    ));
    if let (Some(mean), Some(median), Some(max)) =
        (distances.mean, distances.median, distances.max)
    {
        out.push_str(&format!(
            "  mean {mean:.2}  median {median:.1}  max {max}\n",
        ));
        let histogram = distances
            .histogram
            .iter()
            .map(|b| format!("{}: {}", b.label, b.count))
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(&format!("  {histogram}\n"));
    }

    out.push_str(&format!(
        "\n(document, type) entries mentioned two or more times: {:.2}%\n",
        detections.share_with_two_plus * 100.0,
    ));
    out
}
