use std::io::Write;

use clap::Args;
use collatz_lab::sweep::{self, OrbitSummary};
use collatz_lab::stats::TOTAL_STOPPING_REFERENCE;
use collatz_lab::SweepReport;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, Format, RunConfig};
use crate::error::{CliError, CliResult, Status};
use crate::output;
use crate::OutputArgs;

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweeps `1..=limit`.
    #[arg(long, default_value_t = config::SWEEP_LIMIT)]
    pub limit: u64,
    #[arg(long, default_value_t = config::MAX_STEPS)]
    pub max_steps: u64,
    /// Worker threads; defaults to one per core. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also emit one row per start.
    #[arg(long)]
    pub emit_rows: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Serialize)]
struct Extreme<T: Serialize> {
    value: T,
    at: u64,
}

#[derive(Serialize)]
struct RatioExtreme {
    value: Option<f64>,
    at: Option<u64>,
    reference: f64,
}

#[derive(Serialize)]
struct Summary {
    limit: u64,
    max_steps: u64,
    verified: u64,
    failures: Vec<u64>,
    max_total_stopping_time: Extreme<u64>,
    max_ratio: RatioExtreme,
    max_excursion: Extreme<String>,
}

impl Summary {
    fn from_report(limit: u64, r: &SweepReport) -> Self {
        Summary {
            limit,
            max_steps: r.max_steps,
            verified: r.verified,
            failures: r.failures.clone(),
            max_total_stopping_time: Extreme {
                value: r.max_total_stopping_time,
                at: r.max_total_stopping_time_at,
            },
            max_ratio: RatioExtreme {
                value: r.max_ratio,
                at: r.max_ratio.map(|_| r.max_ratio_at),
                reference: TOTAL_STOPPING_REFERENCE,
            },
            max_excursion: Extreme {
                value: r.max_excursion.to_string(),
                at: r.max_excursion_at,
            },
        }
    }
}

#[derive(Serialize)]
struct Document<'a> {
    config: &'a RunConfig,
    summary: Summary,
}

#[derive(Serialize)]
struct Header<'a> {
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct Row {
    x: u64,
    total_stopping_time: Option<u64>,
    stopping_time: Option<u64>,
    peak: String,
}

#[derive(Serialize)]
struct Footer {
    summary: Summary,
}

const ROW_BLOCK: u64 = 1 << 16;

fn row(s: OrbitSummary) -> Row {
    Row {
        x: s.x,
        total_stopping_time: s.total_stopping_time,
        stopping_time: s.stopping_time,
        peak: s.peak.to_string(),
    }
}

pub fn run(args: SweepArgs) -> CliResult {
    if args.limit == 0 {
        return Err(CliError::Usage("--limit must be at least 1".into()));
    }
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = args.threads {
            if t == 0 {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            builder = builder.num_threads(t);
        }
        builder
            .build()
            .map_err(|e| CliError::Resource(format!("cannot start worker threads: {e}")))?
    };
    pool.install(|| execute(&args))
}

fn execute(args: &SweepArgs) -> CliResult {
    let mut cfg = RunConfig::new("sweep", args.out.format, args.out.output.as_deref())
        .param("limit", args.limit)
        .param("max_steps", args.max_steps)
        .param("emit_rows", args.emit_rows);
    if args.emit_rows {
        cfg = cfg.with_schema("sweep-rows");
    }
    let report = sweep::sweep_to_one(args.limit, args.max_steps)?;
    let summary = Summary::from_report(args.limit, &report);
    let status = if report.all_verified() { Status::Success } else { Status::Inconclusive };

    let mut w = output::open(args.out.output.as_deref())?;
    match args.out.format {
        Format::Json if args.emit_rows => {
            output::json_line(&mut w, &Header { config: &cfg })?;
            for_each_block(args, |rows| rows.iter().try_for_each(|r| output::json_line(&mut w, r)))?;
            output::json_line(&mut w, &Footer { summary })?;
        }
        Format::Json => output::json_document(&mut w, &Document { config: &cfg, summary })?,
        Format::Csv if args.emit_rows => {
            writeln!(w, "{}", cfg.comment_line())?;
            let mut csv = output::csv_writer(&mut w);
            for_each_block(args, |rows| {
                rows.iter().try_for_each(|r| csv.serialize(r).map_err(std::io::Error::from))
            })?;
            csv.flush()?;
        }
        Format::Csv => {
            writeln!(w, "{}", cfg.comment_line())?;
            let mut csv = output::csv_writer(&mut w);
            csv.write_record([
                "limit",
                "verified",
                "failures",
                "max_total_stopping_time",
                "max_total_stopping_time_at",
                "max_ratio",
                "max_ratio_at",
                "max_excursion",
                "max_excursion_at",
            ])?;
            csv.write_record([
                summary.limit.to_string(),
                summary.verified.to_string(),
                summary.failures.len().to_string(),
                summary.max_total_stopping_time.value.to_string(),
                summary.max_total_stopping_time.at.to_string(),
                summary.max_ratio.value.map(|v| v.to_string()).unwrap_or_default(),
                summary.max_ratio.at.map(|v| v.to_string()).unwrap_or_default(),
                summary.max_excursion.value.clone(),
                summary.max_excursion.at.to_string(),
            ])?;
            csv.flush()?;
        }
        Format::Text => {
            writeln!(w, "{}", cfg.comment_line())?;
            if args.emit_rows {
                for_each_block(args, |rows| {
                    rows.iter().try_for_each(|r| {
                        let t = r.total_stopping_time.map_or("-".into(), |t| t.to_string());
                        let s = r.stopping_time.map_or("-".into(), |t| t.to_string());
                        writeln!(w, "{:>12} {:>6} {:>6} {}", r.x, t, s, r.peak)
                    })
                })?;
            }
            writeln!(w, "verified {} of {}", summary.verified, summary.limit)?;
            if !summary.failures.is_empty() {
                writeln!(w, "step limit reached for {} starts, first {}", summary.failures.len(), summary.failures[0])?;
            }
            writeln!(
                w,
                "max total stopping time {} at {}",
                summary.max_total_stopping_time.value, summary.max_total_stopping_time.at
            )?;
            if let (Some(v), Some(at)) = (summary.max_ratio.value, summary.max_ratio.at) {
                writeln!(w, "max total/ln x {v:.5} at {at} (reference constant {TOTAL_STOPPING_REFERENCE})")?;
            }
            writeln!(w, "max excursion {} at {}", summary.max_excursion.value, summary.max_excursion.at)?;
        }
    }
    w.flush()?;
    Ok(status)
}

/// Computes rows block by block, in parallel within a block, and hands
/// each block over in order.
fn for_each_block(
    args: &SweepArgs,
    mut sink: impl FnMut(&[Row]) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut first = 1u64;
    while first <= args.limit {
        let last = first.saturating_add(ROW_BLOCK - 1).min(args.limit);
        let rows: Vec<Row> = (first..=last)
            .into_par_iter()
            .map(|x| sweep::summarize(x, args.max_steps).map(row))
            .collect::<Result<_, _>>()?;
        sink(&rows)?;
        first = last + 1;
    }
    Ok(())
}
