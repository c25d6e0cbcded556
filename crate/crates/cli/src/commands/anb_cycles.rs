use std::io::Write;

use clap::Args;
use collatz_lab::anb;
use collatz_lab::{AnbParams, Natural};
use serde::Serialize;

use crate::config::{self, Format, RunConfig};
use crate::error::{CliError, CliResult, Status};
use crate::output;
use crate::OutputArgs;

#[derive(Debug, Args)]
pub struct AnbCyclesArgs {
    #[arg(long, default_value_t = 5)]
    pub a: u64,
    #[arg(long, default_value_t = 1)]
    pub b: u64,
    /// Searches from every odd start in `1..=max-start`.
    #[arg(long, default_value_t = config::CYCLE_MAX_START)]
    pub max_start: u64,
    #[arg(long, default_value_t = config::ANB_MAX_STEPS)]
    pub max_steps: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Serialize)]
struct Cycle {
    members: Vec<String>,
    exponents: Vec<u64>,
    length: usize,
    exponent_sum: u64,
    /// `2^{Σk} · Π members`.
    product_lhs: String,
    /// `Π (a·member + b)`.
    product_rhs: String,
    product_residue: String,
    verified: bool,
    basin: u64,
}

#[derive(Serialize)]
struct Params {
    a: u64,
    b: u64,
}

#[derive(Serialize)]
struct Document<'a> {
    config: &'a RunConfig,
    params: Params,
    starts: u64,
    cycles: Vec<Cycle>,
    inconclusive: Vec<String>,
}

pub fn run(args: AnbCyclesArgs) -> CliResult {
    if args.max_start == 0 {
        return Err(CliError::Usage("--max-start must be at least 1".into()));
    }
    let params = AnbParams::new(args.a, args.b)?;
    let cfg = RunConfig::new("anb-cycles", args.out.format, args.out.output.as_deref())
        .param("a", args.a)
        .param("b", args.b)
        .param("max_start", args.max_start)
        .param("max_steps", args.max_steps);
    let starts: Vec<Natural> = (1..=args.max_start).step_by(2).map(Natural::from).collect();
    let catalog = anb::cycle_catalog(params, &starts, args.max_steps)?;
    let cycles: Vec<Cycle> = catalog
        .cycles
        .iter()
        .zip(&catalog.basin_counts)
        .map(|(c, &basin)| {
            let (lhs, rhs) = c.product_sides();
            Cycle {
                members: c.members.iter().map(|m| m.to_string()).collect(),
                exponents: c.exponents.clone(),
                length: c.len(),
                exponent_sum: c.exponents.iter().sum(),
                product_lhs: lhs.to_string(),
                product_rhs: rhs.to_string(),
                product_residue: c.product_residue().to_string(),
                verified: c.verify(),
                basin,
            }
        })
        .collect();
    let inconclusive: Vec<String> = catalog.inconclusive.iter().map(|x| x.to_string()).collect();
    let status = if cycles.iter().any(|c| !c.verified) {
        Status::CheckFailed
    } else if inconclusive.is_empty() {
        Status::Success
    } else {
        Status::Inconclusive
    };

    let mut w = output::open(args.out.output.as_deref())?;
    match args.out.format {
        Format::Json => output::json_document(
            &mut w,
            &Document {
                config: &cfg,
                params: Params { a: args.a, b: args.b },
                starts: starts.len() as u64,
                cycles,
                inconclusive,
            },
        )?,
        Format::Csv => {
            writeln!(w, "{}", cfg.comment_line())?;
            let mut csv = output::csv_writer(&mut w);
            csv.write_record(["members", "exponents", "length", "exponent_sum", "product_residue", "verified", "basin"])?;
            for c in &cycles {
                let exps: Vec<String> = c.exponents.iter().map(|k| k.to_string()).collect();
                csv.write_record([
                    c.members.join(" "),
                    exps.join(" "),
                    c.length.to_string(),
                    c.exponent_sum.to_string(),
                    c.product_residue.clone(),
                    c.verified.to_string(),
                    c.basin.to_string(),
                ])?;
            }
            csv.flush()?;
        }
        Format::Text => {
            writeln!(w, "{}", cfg.comment_line())?;
            for c in &cycles {
                writeln!(
                    w,
                    "[{}] k=[{}] basin {} {}",
                    c.members.join(","),
                    c.exponents.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
                    c.basin,
                    if c.verified { "verified" } else { "NOT VERIFIED" }
                )?;
            }
            if !inconclusive.is_empty() {
                writeln!(
                    w,
                    "no cycle within {} steps from {} starts: {}",
                    args.max_steps,
                    inconclusive.len(),
                    inconclusive.join(",")
                )?;
            }
        }
    }
    w.flush()?;
    Ok(status)
}
