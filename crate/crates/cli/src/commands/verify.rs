use std::io::Write;

use clap::{Args, Subcommand, ValueEnum};
use collatz_lab::halfsplit::{self, HalfSplitLimits, HalfSplitMode};
use collatz_lab::identities::{self, ResidueClass};
use collatz_lab::{anb, dynamics, stats, AnbParams, GammaSet, HalfSplitReport, Natural, Rational, Termination};
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{self, Format, RunConfig};
use crate::error::{CliError, CliResult, Status};
use crate::output;
use crate::OutputArgs;

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Residue-class shift law `T^k(2^k m + i) = 3^{p_k} m + T^k(i)`.
    Lemma7 {
        /// Checks every modulus exponent 1..=k.
        #[arg(long, default_value_t = config::LEMMA7_MAX_K)]
        k: u32,
        /// Number of seeded multipliers `m < 2^20`.
        #[arg(long, default_value_t = config::LEMMA7_MULTIPLIERS)]
        multipliers: u64,
        #[arg(long, default_value_t = config::SEED)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Closed-form trajectory identity at every odd step, odd `x0 ≤ max`.
    Eq2 {
        #[arg(long, default_value_t = config::VERIFY_MAX_X0)]
        max_x0: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Bohm–Sontacchi reconstruction of odd `x0 ≤ max`.
    Bohm {
        #[arg(long, default_value_t = config::VERIFY_MAX_X0)]
        max_x0: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Geometric sum of `(4/3)^r` for all `n ≤ max-n`, `m ≤ max-m`.
    Geom {
        #[arg(long, default_value_t = config::GEOM_MAX)]
        max_n: u32,
        #[arg(long, default_value_t = config::GEOM_MAX)]
        max_m: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Closed-form identity for an `an+b` map.
    AnbEq {
        #[arg(long, default_value_t = 5)]
        a: u64,
        #[arg(long, default_value_t = 1)]
        b: u64,
        #[arg(long, default_value_t = config::ANB_EQ_MAX_X0)]
        max_x0: u64,
        #[arg(long, default_value_t = config::ANB_EQ_STEPS)]
        steps: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Increase/decrease tallies over `{1, …, 2^M}`.
    Halfsplit(HalfsplitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Auto,
    Direct,
    Residue,
}

#[derive(Debug, Args)]
pub struct HalfsplitArgs {
    #[arg(long = "M", default_value_t = config::HALFSPLIT_M)]
    pub m: u32,
    /// First element of a subrange (direct route only).
    #[arg(long, requires = "last")]
    pub first: Option<u64>,
    #[arg(long, requires = "first")]
    pub last: Option<u64>,
    #[arg(long, value_enum, default_value_t = Route::Auto)]
    pub route: Route,
    /// Largest element count the direct route iterates, as log2.
    #[arg(long, default_value_t = config::HALFSPLIT_DIRECT_MAX_LOG2)]
    pub direct_max_log2: u32,
    /// Largest M the residue route walks.
    #[arg(long, default_value_t = config::HALFSPLIT_RESIDUE_MAX_M)]
    pub residue_max_m: u32,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Serialize)]
struct Document<'a> {
    config: &'a RunConfig,
    check: &'static str,
    passed: bool,
    complete: bool,
    checks: u64,
    failures: u64,
    summary: Value,
    counterexample: Option<Value>,
}

struct Findings {
    checks: u64,
    failures: u64,
    complete: bool,
    summary: Value,
    counterexample: Option<Value>,
}

pub fn run(cmd: VerifyCommand) -> CliResult {
    match cmd {
        VerifyCommand::Lemma7 { k, multipliers, seed, out } => {
            let cfg = RunConfig::new("verify", out.format, out.output.as_deref())
                .param("check", "lemma7")
                .param("k", k)
                .param("multipliers", multipliers)
                .param("seed", seed);
            let findings = lemma7(k, multipliers, seed)?;
            emit(&cfg, "lemma7", findings, &out, Status::Inconclusive)
        }
        VerifyCommand::Eq2 { max_x0, out } => {
            let cfg = RunConfig::new("verify", out.format, out.output.as_deref())
                .param("check", "eq2")
                .param("max_x0", max_x0);
            emit(&cfg, "eq2", eq2(max_x0)?, &out, Status::Inconclusive)
        }
        VerifyCommand::Bohm { max_x0, out } => {
            let cfg = RunConfig::new("verify", out.format, out.output.as_deref())
                .param("check", "bohm")
                .param("max_x0", max_x0);
            emit(&cfg, "bohm", bohm(max_x0)?, &out, Status::Inconclusive)
        }
        VerifyCommand::Geom { max_n, max_m, out } => {
            let cfg = RunConfig::new("verify", out.format, out.output.as_deref())
                .param("check", "geom")
                .param("max_n", max_n)
                .param("max_m", max_m);
            emit(&cfg, "geom", geom(max_n, max_m), &out, Status::Inconclusive)
        }
        VerifyCommand::AnbEq { a, b, max_x0, steps, out } => {
            let cfg = RunConfig::new("verify", out.format, out.output.as_deref())
                .param("check", "anb-eq")
                .param("a", a)
                .param("b", b)
                .param("max_x0", max_x0)
                .param("steps", steps);
            let params = AnbParams::new(a, b)?;
            emit(&cfg, "anb-eq", anb_eq(params, max_x0, steps)?, &out, Status::Inconclusive)
        }
        VerifyCommand::Halfsplit(args) => halfsplit_cmd(args),
    }
}

fn status(f: &Findings, incomplete: Status) -> Status {
    if f.failures > 0 {
        Status::CheckFailed
    } else if !f.complete {
        incomplete
    } else {
        Status::Success
    }
}

fn emit(cfg: &RunConfig, check: &'static str, f: Findings, out: &OutputArgs, incomplete: Status) -> CliResult {
    let result = status(&f, incomplete);
    let mut w = output::open(out.output.as_deref())?;
    let doc = Document {
        config: cfg,
        check,
        passed: f.failures == 0,
        complete: f.complete,
        checks: f.checks,
        failures: f.failures,
        summary: f.summary,
        counterexample: f.counterexample,
    };
    match out.format {
        Format::Json => output::json_document(&mut w, &doc)?,
        Format::Csv => {
            writeln!(w, "{}", cfg.comment_line())?;
            let mut csv = output::csv_writer(&mut w);
            csv.write_record(["check", "passed", "complete", "checks", "failures"])?;
            csv.write_record([
                check,
                &doc.passed.to_string(),
                &doc.complete.to_string(),
                &doc.checks.to_string(),
                &doc.failures.to_string(),
            ])?;
            csv.flush()?;
        }
        Format::Text => {
            writeln!(w, "{}", cfg.comment_line())?;
            writeln!(
                w,
                "{check}: {} ({} checks, {} failures{})",
                if doc.passed { "pass" } else { "FAIL" },
                doc.checks,
                doc.failures,
                if doc.complete { "" } else { ", incomplete" }
            )?;
            writeln!(w, "summary: {}", doc.summary)?;
            if let Some(c) = &doc.counterexample {
                writeln!(w, "counterexample: {c}")?;
            }
        }
    }
    w.flush()?;
    Ok(result)
}

fn n(v: u64) -> Natural {
    Natural::from(v)
}

/// `count` multipliers below `2^bits`, read from the documented bit stream.
pub fn seeded_multipliers(seed: u64, count: u64, bits: u32) -> Vec<Natural> {
    (0..count)
        .map(|j| {
            let m = stats::seeded_bits(seed, j, bits as u64)
                .enumerate()
                .fold(0u64, |acc, (i, bit)| acc | ((bit as u64) << i));
            n(m)
        })
        .collect()
}

fn lemma7(max_k: u32, multipliers: u64, seed: u64) -> Result<Findings, CliError> {
    if max_k == 0 || max_k > 24 {
        return Err(CliError::Usage(format!("--k must be in 1..=24, got {max_k}")));
    }
    let ms = seeded_multipliers(seed, multipliers, config::LEMMA7_MULTIPLIER_BITS);
    let mut checks = 0u64;
    let mut failures = 0u64;
    let mut counterexample = None;
    for k in 1..=max_k {
        let bad: Vec<Value> = (0..1u64 << k)
            .into_par_iter()
            .flat_map_iter(|i| {
                let class = ResidueClass::new(k, n(i)).expect("i < 2^k");
                ms.iter()
                    .filter_map(|m| {
                        let out = identities::verify_lemma7(&class, m);
                        (!out.holds).then(|| {
                            json!({"k": k, "i": i, "m": m.to_string(), "lhs": out.lhs.to_string(),
                                   "rhs": out.rhs.to_string(), "p_k": out.increases})
                        })
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        checks += (1u64 << k) * ms.len() as u64;
        failures += bad.len() as u64;
        if counterexample.is_none() {
            counterexample = bad.into_iter().next();
        }
    }
    Ok(Findings {
        checks,
        failures,
        complete: true,
        summary: json!({"max_k": max_k, "multipliers": ms.len(), "multiplier_bits": config::LEMMA7_MULTIPLIER_BITS}),
        counterexample,
    })
}

fn odd_starts(max_x0: u64) -> Vec<u64> {
    (1..=max_x0).step_by(2).collect()
}

fn eq2(max_x0: u64) -> Result<Findings, CliError> {
    let results: Vec<(u64, bool, Option<Value>)> = odd_starts(max_x0)
        .par_iter()
        .map(|&x| {
            let x0 = n(x);
            let (traj, exps) = dynamics::trajectory_odd(&x0, config::MAX_STEPS).expect("odd start");
            let reached = traj.terminated == Termination::ReachedOne;
            for step in 1..traj.values.len() {
                let c = identities::closed_form_along(&x0, &traj.values, &exps, step).expect("orbit long enough");
                if !c.holds {
                    let cx = json!({"x0": x, "n": step, "lhs": c.lhs.to_string(), "rhs": c.rhs.to_string()});
                    return (step as u64, reached, Some(cx));
                }
            }
            ((traj.values.len() - 1) as u64, reached, None)
        })
        .collect();
    Ok(collect_findings(
        results,
        json!({"max_x0": max_x0, "starts": max_x0.div_ceil(2)}),
    ))
}

fn collect_findings(results: Vec<(u64, bool, Option<Value>)>, summary: Value) -> Findings {
    let checks = results.iter().map(|r| r.0).sum();
    let complete = results.iter().all(|r| r.1);
    let failures = results.iter().filter(|r| r.2.is_some()).count() as u64;
    let counterexample = results.into_iter().find_map(|r| r.2);
    Findings {
        checks,
        failures,
        complete,
        summary,
        counterexample,
    }
}

fn bohm(max_x0: u64) -> Result<Findings, CliError> {
    let results: Vec<(u64, bool, Option<Value>)> = odd_starts(max_x0)
        .par_iter()
        .map(|&x| {
            let (traj, exps) = dynamics::trajectory_odd(&n(x), config::MAX_STEPS).expect("odd start");
            if traj.terminated != Termination::ReachedOne {
                return (0, false, None);
            }
            let value = identities::bohm_sontacchi_reconstruct(exps.prefix_sums()).expect("increasing sums");
            let bad = (value != Rational::from_integer(BigInt::from(x)))
                .then(|| json!({"x0": x, "reconstructed": value.to_string(), "v": exps.prefix_sums()}));
            (1, true, bad)
        })
        .collect();
    Ok(collect_findings(results, json!({"max_x0": max_x0})))
}

fn geom(max_n: u32, max_m: u32) -> Findings {
    let results: Vec<(u64, bool, Option<Value>)> = (0..=max_n)
        .into_par_iter()
        .flat_map_iter(|a| {
            (0..=max_m).map(move |b| {
                let g = identities::geometric_sum_identity(a, b);
                let bad = (!g.holds)
                    .then(|| json!({"n": a, "m": b, "lhs": g.lhs.to_string(), "rhs": g.rhs.to_string()}));
                (1, true, bad)
            })
        })
        .collect();
    collect_findings(results, json!({"max_n": max_n, "max_m": max_m}))
}

fn anb_eq(params: AnbParams, max_x0: u64, steps: usize) -> Result<Findings, CliError> {
    let results: Vec<(u64, bool, Option<Value>)> = odd_starts(max_x0)
        .par_iter()
        .map(|&x| {
            let x0 = n(x);
            let mut values = vec![x0.clone()];
            let mut exps = Vec::with_capacity(steps);
            for _ in 0..steps {
                let (next, k) = dynamics::step_anb(values.last().unwrap(), &params).expect("odd value");
                values.push(next);
                exps.push(k);
            }
            let exps = collatz_lab::ParityExponents::from_exponents(&exps).expect("positive exponents");
            for (step, value) in values.iter().enumerate().skip(1) {
                let c = anb::closed_form_anb_along(&x0, params, value, &exps, step).expect("enough steps");
                if !c.holds {
                    let cx = json!({"x0": x, "n": step, "lhs": c.lhs.to_string(), "rhs": c.rhs.to_string()});
                    return (step as u64, true, Some(cx));
                }
            }
            (steps as u64, true, None)
        })
        .collect();
    Ok(collect_findings(
        results,
        json!({"a": params.a(), "b": params.b(), "max_x0": max_x0, "steps": steps}),
    ))
}

#[derive(Serialize)]
struct TallyRow {
    step: u32,
    increases: u64,
    decreases: u64,
    within_theorem: bool,
    exact_half: bool,
}

fn tally_rows(report: &HalfSplitReport) -> Vec<TallyRow> {
    let half = (1u64 << report.m) / 2;
    let full = report.is_full();
    report
        .steps
        .iter()
        .map(|t| TallyRow {
            step: t.step,
            increases: t.increases,
            decreases: t.decreases,
            within_theorem: t.within_theorem,
            exact_half: full && t.increases == half && t.decreases == half,
        })
        .collect()
}

fn halfsplit_cmd(args: HalfsplitArgs) -> CliResult {
    let out = &args.out;
    let subrange = args.first.zip(args.last);
    let mut cfg = RunConfig::new("verify", out.format, out.output.as_deref())
        .param("check", "halfsplit")
        .param("M", args.m)
        .param(
            "route",
            match args.route {
                Route::Auto => "auto",
                Route::Direct => "direct",
                Route::Residue => "residue",
            },
        )
        .param("direct_max_log2", args.direct_max_log2)
        .param("residue_max_m", args.residue_max_m);
    if let Some((first, last)) = subrange {
        cfg = cfg.param("first", first).param("last", last);
    }
    let limits = HalfSplitLimits {
        direct_max_log2: args.direct_max_log2,
        residue_max_m: args.residue_max_m,
    };
    let mode = match args.route {
        Route::Auto => HalfSplitMode::Auto,
        Route::Direct => HalfSplitMode::Direct,
        Route::Residue => HalfSplitMode::Residue,
    };

    let (report, guidance) = match halfsplit::halfsplit_verify(args.m, subrange, mode, limits) {
        Ok(r) => (r, None),
        Err(collatz_lab::Error::Resource(message)) => {
            // Partial report over the first budget-sized block.
            let gamma = GammaSet::new(args.m)?;
            let first = subrange.map_or(1, |r| r.0);
            let budget = 1u64 << args.direct_max_log2.min(63);
            let last = subrange.map_or(gamma.last(), |r| r.1).min(first.saturating_add(budget - 1));
            (halfsplit::halfsplit_direct(gamma, first, last)?, Some(message))
        }
        Err(e) => return Err(e.into()),
    };

    let rows = tally_rows(&report);
    let full = report.is_full();
    let failures = if full {
        rows.iter().filter(|r| r.within_theorem && !r.exact_half).count() as u64
    } else {
        rows.iter().filter(|r| r.increases + r.decreases != report.elements()).count() as u64
    };
    let first_break = rows.iter().find(|r| !r.exact_half).map(|r| r.step);
    let counterexample = if full {
        rows.iter()
            .find(|r| r.within_theorem && !r.exact_half)
            .map(|r| serde_json::to_value(r).expect("row serializes"))
    } else {
        None
    };
    let findings = Findings {
        checks: rows.iter().filter(|r| r.within_theorem).count() as u64,
        failures,
        complete: full,
        summary: json!({
            "M": args.m,
            "elements": report.elements(),
            "covered": report.covered,
            "steps": rows,
            "first_unbalanced_step": if full { first_break.map(Value::from) } else { None },
            "resource_limit": guidance,
        }),
        counterexample,
    };

    let incomplete = if guidance.is_some() { Status::ResourceLimited } else { Status::Success };
    if out.format == Format::Csv {
        let result = status(&findings, incomplete);
        let mut w = output::open(out.output.as_deref())?;
        writeln!(w, "{}", cfg.comment_line())?;
        let mut csv = output::csv_writer(&mut w);
        csv.write_record(["step", "increases", "decreases", "within_theorem", "exact_half"])?;
        for r in &rows {
            csv.serialize(r)?;
        }
        csv.flush()?;
        drop(csv);
        w.flush()?;
        return Ok(result);
    }
    if out.format == Format::Text {
        let result = status(&findings, incomplete);
        let mut w = output::open(out.output.as_deref())?;
        writeln!(w, "{}", cfg.comment_line())?;
        if let Some(g) = &guidance {
            writeln!(w, "resource limit: {g}")?;
            writeln!(w, "partial report over {:?}", report.covered)?;
        }
        writeln!(w, "{:>5} {:>12} {:>12}  note", "step", "increases", "decreases")?;
        for r in &rows {
            let note = match (r.within_theorem, r.exact_half) {
                (true, true) => "exact half",
                (true, false) if full => "NOT HALF",
                (true, false) => "",
                (false, true) => "beyond M-1, half",
                (false, false) => "beyond M-1",
            };
            writeln!(w, "{:>5} {:>12} {:>12}  {note}", r.step, r.increases, r.decreases)?;
        }
        writeln!(
            w,
            "halfsplit: {} ({} elements{})",
            if failures == 0 { "pass" } else { "FAIL" },
            report.elements(),
            if full { "" } else { ", partial range" }
        )?;
        w.flush()?;
        return Ok(result);
    }
    emit(&cfg, "halfsplit", findings, out, incomplete)
}
