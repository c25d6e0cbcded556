use std::io::Write;

use clap::{Args, ValueEnum};
use collatz_lab::stats::{self, FixtureReport, PUBLISHED_TABLE};
use collatz_lab::{ConfidenceLevel, IntervalMode, SampleStats};
use serde::Serialize;

use crate::config::{self, Format, RunConfig};
use crate::error::{CliError, CliResult, Status};
use crate::output::{self, finite};
use crate::OutputArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    /// The published 14-sample table for length 100.
    Paper14,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Interval {
    Normal,
    T,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    /// Bits per sample.
    #[arg(long, default_value_t = config::LENGTH)]
    pub length: u64,
    #[arg(long, default_value_t = config::SAMPLES)]
    pub samples: u64,
    #[arg(long, default_value_t = config::SEED)]
    pub seed: u64,
    /// 95, 98 or 99.
    #[arg(long, default_value = config::LEVEL)]
    pub level: String,
    #[arg(long, value_enum, default_value_t = Interval::Normal)]
    pub interval: Interval,
    /// Recompute statistics from an embedded table instead of simulating.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Serialize)]
struct Row {
    sample: u64,
    xi: Option<f64>,
    one_plus_xi: Option<f64>,
    s: f64,
    chi: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    count: usize,
    level: u32,
    interval: Interval,
    mean_xi: Option<f64>,
    mean_s: f64,
    mean_one_plus_xi: Option<f64>,
    std_one_plus_xi: Option<f64>,
    /// Interval for `μ = E(1+ξ)`.
    mu_interval: Option<(f64, f64)>,
    /// `(2^lo, 2^hi)` of the `μ` interval.
    chi_interval: Option<(f64, f64)>,
}

#[derive(Serialize)]
struct FixtureSection {
    name: &'static str,
    published_interval: (f64, f64),
    chi_column_interval: (f64, f64),
    published_contains_mean_one_plus_xi: bool,
    published_contains_chi_of_mean: bool,
    discrepancies: Vec<String>,
}

#[derive(Serialize)]
struct Document<'a> {
    config: &'a RunConfig,
    source: &'static str,
    rows: Vec<Row>,
    summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixture: Option<FixtureSection>,
}

fn summarize(rows: &[Row], level: ConfidenceLevel, interval: Interval) -> Result<Summary, CliError> {
    let mode = match interval {
        Interval::Normal => IntervalMode::Normal,
        Interval::T => IntervalMode::StudentT,
    };
    let count = rows.len();
    let mean_s = rows.iter().map(|r| r.s).sum::<f64>() / count as f64;
    let column: Option<Vec<f64>> = rows.iter().map(|r| r.one_plus_xi).collect();
    let (mean, std, mu, chi) = match column {
        Some(values) if values.len() >= 2 => {
            let stats = SampleStats::from_values(&values, level)?;
            let mu = stats::confidence_interval(&stats, mode)?;
            let chi = stats::exponentiate_interval(mu.0, mu.1)?;
            (Some(stats.mean), Some(stats.std), Some(mu), Some(chi))
        }
        Some(values) => (values.first().copied(), None, None, None),
        None => (None, None, None, None),
    };
    Ok(Summary {
        count,
        level: level.percent(),
        interval,
        mean_xi: mean.map(|m| m - 1.0),
        mean_s,
        mean_one_plus_xi: mean,
        std_one_plus_xi: std,
        mu_interval: mu,
        chi_interval: chi,
    })
}

fn fixture_section(report: &FixtureReport, interval: Interval) -> FixtureSection {
    FixtureSection {
        name: "paper14",
        published_interval: report.published,
        chi_column_interval: match interval {
            Interval::Normal => report.chi_column_normal,
            Interval::T => report.chi_column_t,
        },
        published_contains_mean_one_plus_xi: report.published_contains_mu_mean,
        published_contains_chi_of_mean: report.published_contains_chi_of_mean,
        discrepancies: report.discrepancies(),
    }
}

pub fn run(args: MonteCarloArgs) -> CliResult {
    let level = ConfidenceLevel::parse(&args.level)?;
    let mut cfg = RunConfig::new("montecarlo", args.out.format, args.out.output.as_deref())
        .param("level", level.percent())
        .param("interval", args.interval);

    let (source, rows, fixture): (_, Vec<Row>, _) = match args.fixture {
        Some(Fixture::Paper14) => {
            cfg = cfg.param("fixture", "paper14");
            let rows = PUBLISHED_TABLE
                .iter()
                .map(|r| Row {
                    sample: r.sample as u64,
                    xi: Some(r.xi),
                    one_plus_xi: Some(r.one_plus_xi),
                    s: r.s,
                    chi: Some(r.chi),
                })
                .collect();
            let report = stats::fixture_report(level);
            ("fixture", rows, Some(fixture_section(&report, args.interval)))
        }
        None => {
            cfg = cfg
                .param("length", args.length)
                .param("samples", args.samples)
                .param("seed", args.seed);
            let batch = stats::simulate_batch(args.length, args.samples, args.seed)?;
            let rows = batch
                .iter()
                .enumerate()
                .map(|(j, s)| Row {
                    sample: j as u64 + 1,
                    xi: finite(s.xi),
                    one_plus_xi: finite(s.one_plus_xi()),
                    s: s.indicator_std,
                    chi: finite(s.chi()),
                })
                .collect();
            ("simulation", rows, None)
        }
    };
    let summary = summarize(&rows, level, args.interval)?;

    let mut w = output::open(args.out.output.as_deref())?;
    match args.out.format {
        Format::Json => output::json_document(
            &mut w,
            &Document {
                config: &cfg,
                source,
                rows,
                summary,
                fixture,
            },
        )?,
        Format::Csv => {
            writeln!(w, "{}", cfg.comment_line())?;
            let mut csv = output::csv_writer(&mut w);
            csv.write_record(["sample", "xi", "one_plus_xi", "s", "chi"])?;
            let cell = |v: Option<f64>| v.map_or_else(|| "inf".to_string(), |v| v.to_string());
            for r in &rows {
                csv.write_record([r.sample.to_string(), cell(r.xi), cell(r.one_plus_xi), r.s.to_string(), cell(r.chi)])?;
            }
            csv.flush()?;
        }
        Format::Text => {
            writeln!(w, "{}", cfg.comment_line())?;
            writeln!(w, "{:>6} {:>10} {:>10} {:>10} {:>10}", "sample", "xi", "1+xi", "s", "2^(1+xi)")?;
            let cell = |v: Option<f64>| v.map_or_else(|| "inf".to_string(), |v| format!("{v:.4}"));
            for r in &rows {
                writeln!(
                    w,
                    "{:>6} {:>10} {:>10} {:>10.4} {:>10}",
                    r.sample,
                    cell(r.xi),
                    cell(r.one_plus_xi),
                    r.s,
                    cell(r.chi)
                )?;
            }
            let pair = |p: Option<(f64, f64)>| p.map_or_else(|| "n/a".to_string(), |(lo, hi)| format!("[{lo:.4}, {hi:.4}]"));
            writeln!(
                w,
                "mean(1+xi) {}  std {}  mean s {:.4}",
                cell(summary.mean_one_plus_xi),
                cell(summary.std_one_plus_xi),
                summary.mean_s
            )?;
            writeln!(w, "{}% mu interval   {}", summary.level, pair(summary.mu_interval))?;
            writeln!(w, "{}% chi interval  {}", summary.level, pair(summary.chi_interval))?;
            if let Some(f) = &fixture {
                writeln!(w, "published bounds     {}", pair(Some(f.published_interval)))?;
                writeln!(w, "chi-column interval  {}", pair(Some(f.chi_column_interval)))?;
                for d in &f.discrepancies {
                    writeln!(w, "discrepancy: {d}")?;
                }
            }
        }
    }
    w.flush()?;
    Ok(Status::Success)
}
