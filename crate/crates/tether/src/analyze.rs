//! Corpus analysis and its text, JSON and CSV renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use tether_core::assertion::MatcherTable;
use tether_core::metrics::{
    auto_annotations, derive_family_outcomes, summarize, ConvergenceQuality, MetricsError, PhaseRow,
    ScenarioFamilyOutcome,
};
use tether_core::report::{Corpus, CorpusTotals};
use tether_core::signature::{Classifier, CooccurrenceDenominator, FailureSignature};
use tether_core::{format_one_decimal, Ratio};

/// An exact rational with its one-decimal rendering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure {
    /// `numerator/denominator` in lowest terms.
    pub exact: String,
    pub value: f64,
    /// One decimal place, rounded half up.
    pub display: String,
}

impl From<Ratio<u64>> for Figure {
    fn from(r: Ratio<u64>) -> Self {
        Self {
            exact: format!("{}/{}", r.numer(), r.denom()),
            value: *r.numer() as f64 / *r.denom() as f64,
            display: format_one_decimal(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overview {
    #[serde(flatten)]
    pub totals: CorpusTotals,
    /// Percentage of reports that are NO_ARTIFACT.
    pub no_artifact_share: Figure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub rc_naive: Figure,
    pub rc_strict: Figure,
    pub first_pass_rate: Figure,
    pub mean_iterations: Option<Figure>,
    pub median_iterations: Option<Figure>,
    pub max_retry_converged: Option<u32>,
    pub max_retry_unconverged: Option<u32>,
    pub final_completed_tests: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignatureRow {
    pub signature: FailureSignature,
    pub label: &'static str,
    pub reports: u64,
    /// Percentage of all reports.
    pub share: Figure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseTotals {
    pub report_count: usize,
    pub family_count: usize,
    pub converged_count: usize,
    pub pipeline_failure_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub overview: Overview,
    pub convergence: Convergence,
    pub families: Vec<ScenarioFamilyOutcome>,
    pub signatures: Vec<SignatureRow>,
    pub cooccurrence: Figure,
    pub cooccurrence_denominator: CooccurrenceDenominator,
    pub phases: Vec<PhaseRow>,
    pub phase_totals: Option<PhaseTotals>,
}

/// Analysis inputs beyond the corpus.
pub struct AnalysisOptions<'a> {
    pub classifier: &'a Classifier,
    pub matchers: &'a MatcherTable,
    /// Explicit qualities; they override those derived from script pairs.
    pub annotations: BTreeMap<String, ConvergenceQuality>,
    pub denominator: CooccurrenceDenominator,
}

pub fn analyze(corpus: &Corpus, options: &AnalysisOptions<'_>) -> Result<Analysis, MetricsError> {
    let mut annotations = auto_annotations(corpus, options.matchers)?;
    annotations.extend(options.annotations.iter().map(|(k, v)| (k.clone(), *v)));
    let families = derive_family_outcomes(corpus, &annotations)?;
    let summary = summarize(corpus, &families, options.classifier, options.denominator)?;
    let totals = corpus.totals();
    let reports = totals.reports.max(1) as u64;
    let phase_totals = (!summary.phase_rows.is_empty()).then(|| PhaseTotals {
        report_count: summary.phase_rows.iter().map(|r| r.report_count).sum(),
        family_count: summary.phase_rows.iter().map(|r| r.family_count).sum(),
        converged_count: summary.phase_rows.iter().map(|r| r.converged_count).sum(),
        pipeline_failure_count: summary.phase_rows.iter().map(|r| r.pipeline_failure_count).sum(),
    });
    Ok(Analysis {
        overview: Overview {
            totals,
            no_artifact_share: Ratio::new(totals.no_artifact as u64 * 100, reports).into(),
        },
        convergence: Convergence {
            rc_naive: summary.rc_naive.into(),
            rc_strict: summary.rc_strict.into(),
            first_pass_rate: summary.first_pass_rate.into(),
            mean_iterations: summary.mean_iterations.map(Into::into),
            median_iterations: summary.median_iterations.map(Into::into),
            max_retry_converged: summary.max_retry_converged,
            max_retry_unconverged: summary.max_retry_unconverged,
            final_completed_tests: summary.final_completed_tests,
        },
        families,
        signatures: summary
            .signature_histogram
            .iter()
            .map(|(signature, n)| SignatureRow {
                signature,
                label: signature.label(),
                reports: n,
                share: Ratio::new(n * 100, reports).into(),
            })
            .collect(),
        cooccurrence: summary.cooccurrence.into(),
        cooccurrence_denominator: options.denominator,
        phases: summary.phase_rows,
        phase_totals,
    })
}

/// Right-aligns columns whose cells are all numeric, left-aligns the rest.
fn table(out: &mut String, title: &str, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    let mut numeric = vec![true; header.len()];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
            numeric[i] &= cell.is_empty() || cell == "n/a" || cell.starts_with(|c: char| c.is_ascii_digit());
        }
    }
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let mut parts = Vec::new();
        for (i, cell) in cells.enumerate() {
            parts.push(if numeric[i] { format!("{cell:>w$}", w = widths[i]) } else { format!("{cell:<w$}", w = widths[i]) });
        }
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    let _ = writeln!(out, "{title}");
    line(out, &mut header.iter().copied());
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    for row in rows {
        line(out, &mut row.iter().map(String::as_str));
    }
    out.push('\n');
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "n/a".into(), |v| v.to_string())
}

fn pct(f: &Figure) -> String {
    format!("{}%", f.display)
}

/// The overview, convergence, family, signature and phase tables.
pub fn render_text(a: &Analysis) -> String {
    let t = &a.overview.totals;
    let c = &a.convergence;
    let mut out = String::new();
    let row = |k: &str, v: String| vec![k.to_string(), v];
    table(
        &mut out,
        "Corpus overview",
        &["Metric", "Value"],
        &[
            row("Execution reports", t.reports.to_string()),
            row("Reports with no test artifact", format!("{} ({})", t.no_artifact, pct(&a.overview.no_artifact_share))),
            row("Test-case executions", t.test_cases.to_string()),
            row("Passed / failed", format!("{} / {}", t.passed, t.failed)),
            row("Reports reaching COMPLETED", t.completed.to_string()),
            row("Scenario families", t.families.to_string()),
            row("Maximum retry index", t.max_retry.to_string()),
        ],
    );
    table(
        &mut out,
        "Repair convergence",
        &["Metric", "Value"],
        &[
            row("Repair convergence (naive)", pct(&c.rc_naive)),
            row("Repair convergence (strict)", pct(&c.rc_strict)),
            row("First-pass success", pct(&c.first_pass_rate)),
            row("Mean iterations to convergence", opt(c.mean_iterations.as_ref().map(|f| f.display.clone()))),
            row("Median iterations to convergence", opt(c.median_iterations.as_ref().map(|f| f.display.clone()))),
            row("Max retry (converged)", opt(c.max_retry_converged)),
            row("Max retry (not converged)", opt(c.max_retry_unconverged)),
            row("Tests in final COMPLETED runs", c.final_completed_tests.to_string()),
        ],
    );
    table(
        &mut out,
        "Scenario families",
        &["Family", "Reports", "Max retry", "Converged", "Iterations", "Quality"],
        &a.families
            .iter()
            .map(|f| {
                vec![
                    f.family_id.clone(),
                    f.report_count.to_string(),
                    f.max_retry.to_string(),
                    if f.converged { "yes" } else { "no" }.into(),
                    opt(f.iterations_to_convergence),
                    f.convergence_quality.as_str().into(),
                ]
            })
            .collect::<Vec<_>>(),
    );
    let mut rows: Vec<Vec<String>> = a
        .signatures
        .iter()
        .map(|s| vec![s.signature.as_str().into(), s.label.into(), s.reports.to_string(), pct(&s.share)])
        .collect();
    rows.push(vec![
        "mean co-occurrence".into(),
        match a.cooccurrence_denominator {
            CooccurrenceDenominator::SignatureBearing => "per signature-bearing report",
            CooccurrenceDenominator::AllReports => "per report",
        }
        .into(),
        a.cooccurrence.display.clone(),
        String::new(),
    ]);
    table(&mut out, "Failure signatures", &["Signature", "Description", "Reports", "Share"], &rows);
    if let Some(totals) = &a.phase_totals {
        let mut rows: Vec<Vec<String>> = a
            .phases
            .iter()
            .map(|p| {
                vec![
                    p.phase_label.clone(),
                    p.report_count.to_string(),
                    p.family_count.to_string(),
                    p.converged_count.to_string(),
                    p.pipeline_failure_count.to_string(),
                ]
            })
            .collect();
        rows.push(vec![
            "Total".into(),
            totals.report_count.to_string(),
            totals.family_count.to_string(),
            totals.converged_count.to_string(),
            totals.pipeline_failure_count.to_string(),
        ]);
        table(&mut out, "Phases", &["Phase", "Reports", "Families", "Converged", "Pipeline failures"], &rows);
    }
    out.truncate(out.trim_end().len());
    out.push('\n');
    out
}

fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> csv::Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one CSV file per table into `dir`, which must exist.
pub fn write_csv_tables(a: &Analysis, dir: &Path) -> csv::Result<()> {
    let t = &a.overview.totals;
    let c = &a.convergence;
    let s = |v: &dyn ToString| v.to_string();
    write_csv(
        &dir.join("overview.csv"),
        &["metric", "value"],
        [
            ["reports".into(), s(&t.reports)],
            ["no_artifact".into(), s(&t.no_artifact)],
            ["no_artifact_share".into(), a.overview.no_artifact_share.display.clone()],
            ["test_cases".into(), s(&t.test_cases)],
            ["passed".into(), s(&t.passed)],
            ["failed".into(), s(&t.failed)],
            ["completed".into(), s(&t.completed)],
            ["families".into(), s(&t.families)],
            ["max_retry".into(), s(&t.max_retry)],
        ],
    )?;
    let d = |f: &Option<Figure>| f.as_ref().map(|f| f.display.clone()).unwrap_or_default();
    let o = |v: Option<u32>| v.map(|v| v.to_string()).unwrap_or_default();
    write_csv(
        &dir.join("convergence.csv"),
        &["metric", "value"],
        [
            ["rc_naive".to_string(), c.rc_naive.display.clone()],
            ["rc_strict".into(), c.rc_strict.display.clone()],
            ["first_pass_rate".into(), c.first_pass_rate.display.clone()],
            ["mean_iterations".into(), d(&c.mean_iterations)],
            ["median_iterations".into(), d(&c.median_iterations)],
            ["max_retry_converged".into(), o(c.max_retry_converged)],
            ["max_retry_unconverged".into(), o(c.max_retry_unconverged)],
            ["final_completed_tests".into(), s(&c.final_completed_tests)],
        ],
    )?;
    write_csv(
        &dir.join("families.csv"),
        &["family_id", "reports", "max_retry", "converged", "iterations_to_convergence", "quality", "first_pass"],
        a.families.iter().map(|f| {
            [
                f.family_id.clone(),
                s(&f.report_count),
                s(&f.max_retry),
                s(&f.converged),
                o(f.iterations_to_convergence),
                f.convergence_quality.as_str().into(),
                s(&f.first_pass),
            ]
        }),
    )?;
    write_csv(
        &dir.join("signatures.csv"),
        &["signature", "reports", "share"],
        a.signatures.iter().map(|r| [r.signature.as_str().to_string(), s(&r.reports), r.share.display.clone()]),
    )?;
    write_csv(
        &dir.join("phases.csv"),
        &["phase", "reports", "families", "converged", "pipeline_failures"],
        a.phases.iter().map(|p| {
            [
                p.phase_label.clone(),
                s(&p.report_count),
                s(&p.family_count),
                s(&p.converged_count),
                s(&p.pipeline_failure_count),
            ]
        }),
    )
}
