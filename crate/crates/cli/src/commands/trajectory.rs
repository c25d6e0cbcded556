use std::io::Write;

use clap::{Args, ValueEnum};
use collatz_lab::{anb, dynamics, AnbParams, Natural, StepKind, Termination, Trajectory};
use serde::Serialize;

use crate::config::{self, Format, RunConfig};
use crate::error::{CliError, CliResult, Status};
use crate::output;
use crate::OutputArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// `x/2` on evens, `(3x+1)/2` on odds.
    General,
    /// Odd part of `3x+1`, on odd values.
    Odd,
    /// Odd part of `ax+b`, on odd values.
    Anb,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    /// Starting value.
    #[arg(value_parser = crate::parse_natural)]
    pub x0: Natural,
    #[arg(long, value_enum, default_value_t = MapKind::General)]
    pub map: MapKind,
    #[arg(long, default_value_t = 3)]
    pub a: u64,
    #[arg(long, default_value_t = 1)]
    pub b: u64,
    /// Defaults to 100000 for the general and odd maps and 1000 for an+b.
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Serialize)]
struct Header<'a> {
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct Row {
    step: usize,
    from: String,
    to: String,
    kind: StepKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u64>,
}

#[derive(Serialize)]
struct Footer {
    terminated: Termination,
    steps: usize,
    last: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    cycle: Option<Vec<String>>,
}

pub fn run(args: TrajectoryArgs) -> CliResult {
    let max_steps = args.max_steps.unwrap_or(match args.map {
        MapKind::Anb => config::ANB_MAX_STEPS,
        _ => config::MAX_STEPS,
    });
    let mut cfg = RunConfig::new("trajectory", args.out.format, args.out.output.as_deref())
        .param("x0", args.x0.to_string())
        .param("map", args.map)
        .param("max_steps", max_steps);
    if args.map == MapKind::Anb {
        cfg = cfg.param("a", args.a).param("b", args.b);
    }

    let (trajectory, exponents, cycle): (Trajectory, Option<Vec<u64>>, Option<Vec<Natural>>) = match args.map {
        MapKind::General => (dynamics::trajectory_general(&args.x0, max_steps)?, None, None),
        MapKind::Odd => {
            let (t, e) = dynamics::trajectory_odd(&args.x0, max_steps)?;
            (t, Some(e.exponents().to_vec()), None)
        }
        MapKind::Anb => {
            let params = AnbParams::new(args.a, args.b)?;
            let run = anb::trajectory_anb(&args.x0, params, max_steps)?;
            let cycle = run.cycle_entry.map(|entry| {
                let vals = &run.trajectory.values;
                let members = vals[entry..vals.len() - 1].to_vec();
                anb::CycleRecord::canonical(params, members, run.exponents.exponents()[entry..].to_vec())
                    .map(|c| c.members)
            });
            let cycle = cycle.transpose()?;
            (run.trajectory, Some(run.exponents.exponents().to_vec()), cycle)
        }
    };

    let rows: Vec<Row> = trajectory
        .values
        .windows(2)
        .zip(&trajectory.steps)
        .enumerate()
        .map(|(i, (w, kind))| Row {
            step: i + 1,
            from: w[0].to_string(),
            to: w[1].to_string(),
            kind: *kind,
            k: exponents.as_ref().map(|e| e[i]),
        })
        .collect();
    let footer = Footer {
        terminated: trajectory.terminated,
        steps: rows.len(),
        last: trajectory.last().to_string(),
        cycle: cycle.map(|c| c.iter().map(|v| v.to_string()).collect()),
    };

    let mut w = output::open(args.out.output.as_deref())?;
    match args.out.format {
        Format::Json => {
            output::json_line(&mut w, &Header { config: &cfg })?;
            for row in &rows {
                output::json_line(&mut w, row)?;
            }
            output::json_line(&mut w, &footer)?;
        }
        Format::Csv => {
            writeln!(w, "{}", cfg.comment_line())?;
            let mut csv = output::csv_writer(&mut w);
            csv.write_record(["step", "from", "to", "kind", "k"])?;
            for row in &rows {
                let k = row.k.map(|k| k.to_string()).unwrap_or_default();
                csv.write_record([row.step.to_string().as_str(), &row.from, &row.to, row.kind.as_str(), &k])?;
            }
            csv.flush()?;
        }
        Format::Text => {
            writeln!(w, "{}", cfg.comment_line())?;
            for row in &rows {
                match row.k {
                    Some(k) => writeln!(w, "{:>6}  {} -> {}  {}  k={k}", row.step, row.from, row.to, row.kind.as_str())?,
                    None => writeln!(w, "{:>6}  {} -> {}  {}", row.step, row.from, row.to, row.kind.as_str())?,
                }
            }
            write!(w, "{} after {} steps, last {}", footer.terminated.as_str(), footer.steps, footer.last)?;
            if let Some(c) = &footer.cycle {
                write!(w, ", cycle [{}]", c.join(","))?;
            }
            writeln!(w)?;
        }
    }
    w.flush().map_err(CliError::Io)?;

    Ok(match trajectory.terminated {
        Termination::StepLimit => Status::Inconclusive,
        _ => Status::Success,
    })
}
