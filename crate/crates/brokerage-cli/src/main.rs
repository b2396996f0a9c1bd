//! Command-line front end: evaluate one (buyer, seller, schedule) triple,
//! sweep affine schedules over a parameter grid, run the named bound checks,
//! and print the shrinking-delta table.
//!
//! Exit codes: 0 success / all checks pass, 1 at least one check failed,
//! 2 usage or parse error, 3 numerical failure.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use ini::Ini;

use brokerage::dist::{parse_distribution, Distribution};
use brokerage::eval::{
    expected_fee_revenue, expected_max_surplus, expected_myerson_revenue, fmt_sig, ratio_report,
    Estimate, EvalFlags, EvalMethod, EvalReport, CSV_HEADER, DEFAULT_MC_SAMPLES, DEFAULT_QUAD_TOL,
};
use brokerage::mech::{bne_affine, parse_schedule, resolve_schedule, FeeSchedule, MechError};
use brokerage::verify::{
    check_ln13, check_main1, check_max_iid_mhr, check_mhr, check_optimal_fee,
    check_prior_independent_exact8, check_unif_3approx, gdelta_experiment,
    random_regular_staircase, random_staircase_seller, GdeltaRow, TheoremCheck, VerifyError,
    CHECK_CSV_HEADER,
};

/// Seed of the deterministic staircase-seller fixture batteries.
const FIXTURE_SEED: u64 = 17;

const GDELTA_CSV_HEADER: [&str; 6] = [
    "delta",
    "max_surplus",
    "closed_form_surplus",
    "best_proper_revenue",
    "surplus_gap",
    "revenue_gap",
];

#[derive(Parser)]
#[command(name = "brokerage", version, about = "Fee-setting intermediation: equilibria, benchmarks, bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a (buyer, seller, schedule) triple against the benchmarks
    Eval(EvalArgs),
    /// Fee revenue over a grid of affine schedules
    Sweep(SweepArgs),
    /// Run a named bound check over its fixture battery
    Verify(VerifyArgs),
    /// Shrinking-delta experiment table
    Worstcase(WorstcaseArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Evaluation method: quad or mc
    #[arg(long)]
    method: Option<String>,
    /// Absolute tolerance for quadrature
    #[arg(long)]
    tol: Option<String>,
    /// Sample count for Monte Carlo
    #[arg(long)]
    samples: Option<String>,
    /// Seed for Monte Carlo
    #[arg(long)]
    seed: Option<String>,
    /// Output path; .csv appends a CSV row, anything else JSON lines
    #[arg(long)]
    out: Option<String>,
    /// Config file with [command] sections of key = value lines; flags win
    #[arg(long)]
    config: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// uniform:lo,hi | exp:lambda | power:a,vbar | gpd:mu,lambda,xi | rgpd:mu,lambda,xi | gdelta:delta | table:<path>
    #[arg(long)]
    buyer: Option<String>,
    /// Same grammar as --buyer
    #[arg(long)]
    seller: Option<String>,
    /// affine:a,b | constant:k | thm1 | mhr | optimal | ln13:xi,lambda,mu
    #[arg(long)]
    schedule: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Distribution spec, same grammar as eval
    #[arg(long)]
    buyer: Option<String>,
    /// Distribution spec, same grammar as eval
    #[arg(long)]
    seller: Option<String>,
    /// alpha grid as lo,hi
    #[arg(long = "alpha-range")]
    alpha_range: Option<String>,
    /// beta grid as lo,hi
    #[arg(long = "beta-range")]
    beta_range: Option<String>,
    /// Points per axis: n, or n,m for separate alpha/beta counts
    #[arg(long)]
    steps: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// main1 | unif3 | mhr | exact8 | optfee | ln13 | maxiid | gdelta
    name: String,
    /// Narrow the battery to this buyer (same grammar as eval)
    #[arg(long)]
    buyer: Option<String>,
    /// Narrow the battery to this seller (same grammar as eval)
    #[arg(long)]
    seller: Option<String>,
    /// Comma-separated deltas for the gdelta check
    #[arg(long)]
    deltas: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct WorstcaseArgs {
    /// Comma-separated deltas
    #[arg(long)]
    deltas: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

enum CliError {
    Usage(String),
    Numerical(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Verify-time errors: fixture preconditions are the caller's choice, so
/// they count as usage; everything else is a numerical failure.
fn from_verify(e: VerifyError) -> CliError {
    match e {
        VerifyError::BadParameter(m) => CliError::Usage(m),
        other => CliError::Numerical(other.to_string()),
    }
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes instead of panicking
    // mid-println.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Worstcase(args) => cmd_worstcase(args),
    }
}

fn config_section(path: &str, section: &str) -> Result<HashMap<String, String>, CliError> {
    let ini = Ini::load_from_file(path)
        .map_err(|e| usage(format!("cannot read config {path}: {e}")))?;
    let mut map = HashMap::new();
    if let Some(props) = ini.section(Some(section)) {
        for (k, v) in props.iter() {
            map.insert(k.to_string(), v.to_string());
        }
    }
    Ok(map)
}

fn merge(flag: &mut Option<String>, cfg: &HashMap<String, String>, key: &str) {
    if flag.is_none() {
        *flag = cfg.get(key).cloned();
    }
}

impl CommonArgs {
    fn merge_config(&mut self, section: &str) -> Result<HashMap<String, String>, CliError> {
        let cfg = match &self.config {
            Some(path) => config_section(path, section)?,
            None => HashMap::new(),
        };
        merge(&mut self.method, &cfg, "method");
        merge(&mut self.tol, &cfg, "tol");
        merge(&mut self.samples, &cfg, "samples");
        merge(&mut self.seed, &cfg, "seed");
        merge(&mut self.out, &cfg, "out");
        Ok(cfg)
    }
}

fn parse_flag<T: FromStr>(v: &Option<String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match v {
        None => Ok(None),
        Some(s) => s
            .parse::<T>()
            .map(Some)
            .map_err(|e| usage(format!("bad {key} '{s}': {e}"))),
    }
}

fn build_method(common: &CommonArgs) -> Result<EvalMethod, CliError> {
    let name = common.method.as_deref().unwrap_or("quad");
    let method = match name {
        "quad" => EvalMethod::Quadrature {
            abs_tol: parse_flag::<f64>(&common.tol, "tol")?.unwrap_or(DEFAULT_QUAD_TOL),
        },
        "mc" => EvalMethod::MonteCarlo {
            n_samples: parse_flag::<usize>(&common.samples, "samples")?
                .unwrap_or(DEFAULT_MC_SAMPLES),
            seed: parse_flag::<u64>(&common.seed, "seed")?.unwrap_or(0),
        },
        other => return Err(usage(format!("unknown method '{other}', expected quad or mc"))),
    };
    method.validate().map_err(|e| usage(e.to_string()))?;
    Ok(method)
}

fn required(flag: Option<String>, key: &str) -> Result<String, CliError> {
    flag.ok_or_else(|| usage(format!("missing --{key}")))
}

fn parse_dist(s: &str, key: &str) -> Result<Distribution, CliError> {
    parse_distribution(s).map_err(|e| usage(format!("bad {key} '{s}': {e}")))
}

fn parse_pair(s: &str, key: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(usage(format!("bad {key} '{s}': expected lo,hi")));
    }
    let lo = parts[0].trim().parse::<f64>().map_err(|e| usage(format!("bad {key} '{s}': {e}")))?;
    let hi = parts[1].trim().parse::<f64>().map_err(|e| usage(format!("bad {key} '{s}': {e}")))?;
    Ok((lo, hi))
}

fn parse_deltas(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| usage(format!("bad delta '{p}': {e}"))))
        .collect()
}

/// Appends rows to `path`: CSV with a header on a fresh file when the
/// extension is .csv, one JSON object per line otherwise.
fn append_rows(
    path: &str,
    header: &[&str],
    csv_rows: &[Vec<String>],
    json_rows: &[serde_json::Value],
) -> Result<(), CliError> {
    let is_csv = Path::new(path).extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| numerical(format!("cannot open {path}: {e}")))?;
    if is_csv {
        let mut wtr = csv::Writer::from_writer(file);
        if fresh {
            wtr.write_record(header).map_err(numerical)?;
        }
        for row in csv_rows {
            wtr.write_record(row).map_err(numerical)?;
        }
        wtr.flush().map_err(numerical)?;
    } else {
        let mut file = file;
        for obj in json_rows {
            writeln!(file, "{obj}").map_err(numerical)?;
        }
    }
    Ok(())
}

fn cmd_eval(mut args: EvalArgs) -> Result<u8, CliError> {
    let cfg = args.common.merge_config("eval")?;
    merge(&mut args.buyer, &cfg, "buyer");
    merge(&mut args.seller, &cfg, "seller");
    merge(&mut args.schedule, &cfg, "schedule");

    let buyer_s = required(args.buyer, "buyer")?;
    let seller_s = required(args.seller, "seller")?;
    let schedule_s = required(args.schedule, "schedule")?;
    let buyer = parse_dist(&buyer_s, "buyer")?;
    let seller = parse_dist(&seller_s, "seller")?;
    let spec = parse_schedule(&schedule_s)
        .map_err(|e| usage(format!("bad schedule '{schedule_s}': {e}")))?;
    let method = build_method(&args.common)?;
    let w = match resolve_schedule(&spec, &buyer, &seller) {
        Ok(w) => w,
        Err(e @ (MechError::BadParameter(_) | MechError::Precondition(_))) => {
            return Err(usage(format!("cannot resolve schedule '{spec}': {e}")))
        }
        Err(e) => return Err(numerical(e)),
    };
    let report = ratio_report(&buyer, &seller, &w, &method).map_err(numerical)?;

    let schedule_name = spec.to_string();
    println!("buyer {buyer}");
    println!("seller {seller}");
    println!("schedule {schedule_name} resolved {w}");
    println!("method {}", report.method);
    println!("rev_apx {} err {}", fmt_sig(report.rev_apx.value), fmt_sig(report.rev_apx.error));
    println!("opt_rev {} err {}", fmt_sig(report.opt_rev.value), fmt_sig(report.opt_rev.error));
    println!(
        "opt_surplus {} err {}",
        fmt_sig(report.opt_surplus.value),
        fmt_sig(report.opt_surplus.error)
    );
    println!("ratio_rev {}", fmt_sig(report.ratio_rev));
    println!("ratio_surplus {}", fmt_sig(report.ratio_surplus));
    if report.flags.never_trades {
        println!("note: the schedule never trades; ratios are infinite");
    }
    if report.flags.regularity_unverified {
        println!("note: regularity unverified; benchmarks taken at face value");
    }
    if let Some(out) = &args.common.out {
        append_rows(
            out,
            &CSV_HEADER,
            &[report.csv_record(&buyer_s, &seller_s, &schedule_name)],
            &[report.to_json(&buyer_s, &seller_s, &schedule_name)],
        )?;
    }
    Ok(0)
}

/// Cell seeds mix the base seed with the cell index so Monte Carlo sweeps
/// are reproducible cell by cell.
fn cell_seed(seed: u64, cell: usize) -> u64 {
    seed ^ (cell as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn cmd_sweep(mut args: SweepArgs) -> Result<u8, CliError> {
    let cfg = args.common.merge_config("sweep")?;
    merge(&mut args.buyer, &cfg, "buyer");
    merge(&mut args.seller, &cfg, "seller");
    merge(&mut args.alpha_range, &cfg, "alpha-range");
    merge(&mut args.beta_range, &cfg, "beta-range");
    merge(&mut args.steps, &cfg, "steps");

    let buyer_s = required(args.buyer, "buyer")?;
    let seller_s = required(args.seller, "seller")?;
    let buyer = parse_dist(&buyer_s, "buyer")?;
    let seller = parse_dist(&seller_s, "seller")?;
    let (a_lo, a_hi) = parse_pair(&required(args.alpha_range, "alpha-range")?, "alpha-range")?;
    let (b_lo, b_hi) = parse_pair(&required(args.beta_range, "beta-range")?, "beta-range")?;
    let steps_s = required(args.steps, "steps")?;
    let (na, nb) = match steps_s.split_once(',') {
        Some((a, b)) => (
            a.trim().parse::<usize>().map_err(|e| usage(format!("bad steps '{steps_s}': {e}")))?,
            b.trim().parse::<usize>().map_err(|e| usage(format!("bad steps '{steps_s}': {e}")))?,
        ),
        None => {
            let n = steps_s
                .trim()
                .parse::<usize>()
                .map_err(|e| usage(format!("bad steps '{steps_s}': {e}")))?;
            (n, n)
        }
    };
    if na < 2 || nb < 2 {
        return Err(usage(format!("steps must be at least 2 per axis, got {na},{nb}")));
    }
    if !(a_hi >= a_lo && b_hi >= b_lo) {
        return Err(usage("ranges must satisfy lo <= hi".to_string()));
    }
    let method = build_method(&args.common)?;

    // Benchmarks do not depend on the schedule; compute them once.
    let opt_rev = expected_myerson_revenue(&buyer, &seller, &method).map_err(numerical)?;
    let opt_surplus = expected_max_surplus(&buyer, &seller, &method).map_err(numerical)?;

    let mut csv_rows = Vec::with_capacity(na * nb);
    let mut json_rows = Vec::with_capacity(na * nb);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..na {
        let alpha = a_lo + (a_hi - a_lo) * i as f64 / (na - 1) as f64;
        for j in 0..nb {
            let beta = b_lo + (b_hi - b_lo) * j as f64 / (nb - 1) as f64;
            let cell = i * nb + j;
            let cell_method = match method {
                EvalMethod::Quadrature { .. } => method,
                EvalMethod::MonteCarlo { n_samples, seed } => {
                    EvalMethod::MonteCarlo { n_samples, seed: cell_seed(seed, cell) }
                }
            };
            let rev_apx = if alpha > 0.0 {
                let strategy = bne_affine(&buyer, alpha, beta).map_err(numerical)?;
                let w = FeeSchedule::Affine { alpha, beta };
                expected_fee_revenue(&buyer, &seller, &w, &strategy, &cell_method)
                    .map_err(numerical)?
            } else {
                Estimate { value: 0.0, error: 0.0 }
            };
            let never_trades = rev_apx.value <= 0.0;
            let (ratio_rev, ratio_surplus) = if never_trades {
                (f64::INFINITY, f64::INFINITY)
            } else {
                (opt_rev.value / rev_apx.value, opt_surplus.value / rev_apx.value)
            };
            let report = EvalReport {
                rev_apx,
                opt_rev,
                opt_surplus,
                ratio_rev,
                ratio_surplus,
                method: cell_method,
                flags: EvalFlags { never_trades, regularity_unverified: false },
            };
            let schedule_name = format!("affine:{alpha},{beta}");
            if rev_apx.value > best.0 {
                best = (rev_apx.value, alpha, beta);
            }
            csv_rows.push(report.csv_record(&buyer_s, &seller_s, &schedule_name));
            json_rows.push(report.to_json(&buyer_s, &seller_s, &schedule_name));
        }
    }

    match &args.common.out {
        Some(out) => {
            append_rows(out, &CSV_HEADER, &csv_rows, &json_rows)?;
            println!("wrote {} rows to {out}", csv_rows.len());
            println!("max rev_apx {} at affine:{},{}", fmt_sig(best.0), best.1, best.2);
        }
        None => {
            let mut wtr = csv::Writer::from_writer(std::io::stdout());
            wtr.write_record(CSV_HEADER).map_err(numerical)?;
            for row in &csv_rows {
                wtr.write_record(row).map_err(numerical)?;
            }
            wtr.flush().map_err(numerical)?;
            eprintln!("max rev_apx {} at affine:{},{}", fmt_sig(best.0), best.1, best.2);
        }
    }
    Ok(0)
}

/// Reverse-GPD parameters (xi, lambda, mu) of a seller, accepting the
/// uniform family through its reverse-GPD form.
fn rgpd_params(seller: &Distribution) -> Result<(f64, f64, f64), CliError> {
    match seller {
        Distribution::Rgpd(r) => Ok((r.xi, r.lambda, r.mu)),
        Distribution::Uniform(u) => Ok((1.0, 1.0 / (u.hi - u.lo), -u.hi)),
        other => Err(usage(format!("ln13 needs a reverse-GPD seller, got {other}"))),
    }
}

fn staircase_battery(start: u64, count: u64) -> Result<Vec<Distribution>, CliError> {
    (start..start + count)
        .map(|i| random_regular_staircase(FIXTURE_SEED, i, 0.0, 0.9, 8).map_err(from_verify))
        .collect()
}

fn cmd_verify(mut args: VerifyArgs) -> Result<u8, CliError> {
    let cfg = args.common.merge_config("verify")?;
    merge(&mut args.buyer, &cfg, "buyer");
    merge(&mut args.seller, &cfg, "seller");
    merge(&mut args.deltas, &cfg, "deltas");

    let method = build_method(&args.common)?;
    let buyer = args.buyer.as_deref().map(|s| parse_dist(s, "buyer")).transpose()?;
    let seller = args.seller.as_deref().map(|s| parse_dist(s, "seller")).transpose()?;
    let uniform01 = Distribution::uniform(0.0, 1.0).expect("unit interval");

    let mut checks: Vec<TheoremCheck> = Vec::new();
    let mut skips: Vec<String> = Vec::new();
    let mut run_check = |result: Result<Vec<TheoremCheck>, VerifyError>,
                         skips: &mut Vec<String>|
     -> Result<(), CliError> {
        match result {
            Ok(mut c) => {
                checks.append(&mut c);
                Ok(())
            }
            Err(VerifyError::Skipped(m)) => {
                skips.push(m);
                Ok(())
            }
            Err(e) => Err(from_verify(e)),
        }
    };

    match args.name.as_str() {
        "main1" => {
            let buyers = match buyer {
                Some(b) => vec![b],
                None => vec![
                    uniform01.clone(),
                    Distribution::power(2.0, 1.0).map_err(numerical)?,
                    Distribution::power(5.0, 1.0).map_err(numerical)?,
                    Distribution::exponential(1.0).map_err(numerical)?,
                ],
            };
            let sellers = match seller {
                Some(s) => vec![s],
                None => {
                    let mut v = vec![uniform01.clone()];
                    v.extend(staircase_battery(0, 10)?);
                    v
                }
            };
            for b in &buyers {
                for s in &sellers {
                    run_check(check_main1(b, s, &method).map(|p| p.to_vec()), &mut skips)?;
                }
            }
        }
        "unif3" => {
            let sellers = match seller {
                Some(s) => vec![s],
                None => {
                    let mut v = vec![
                        uniform01.clone(),
                        Distribution::worst_case_seller(0.1).map_err(numerical)?,
                        Distribution::worst_case_seller(0.01).map_err(numerical)?,
                    ];
                    v.extend(staircase_battery(10, 10)?);
                    v
                }
            };
            for s in &sellers {
                run_check(check_unif_3approx(s, &method).map(|c| vec![c]), &mut skips)?;
            }
        }
        "mhr" => {
            let pairs: Vec<(Distribution, Distribution)> = match (buyer, seller) {
                (Some(b), Some(s)) => vec![(b, s)],
                (Some(b), None) => vec![(b, uniform01.clone())],
                (None, Some(s)) => vec![(uniform01.clone(), s)],
                (None, None) => vec![
                    (uniform01.clone(), uniform01.clone()),
                    (Distribution::uniform(1.0, 2.0).map_err(numerical)?, uniform01.clone()),
                    (Distribution::uniform(0.0, 2.0).map_err(numerical)?, uniform01.clone()),
                    (Distribution::power(2.0, 1.0).map_err(numerical)?, uniform01.clone()),
                ],
            };
            for (b, s) in &pairs {
                run_check(check_mhr(b, s, &method).map(|c| vec![c]), &mut skips)?;
            }
        }
        "exact8" => {
            let sellers = match seller {
                Some(s) => vec![s],
                None => {
                    let mut v = vec![
                        uniform01.clone(),
                        Distribution::worst_case_seller(0.1).map_err(numerical)?,
                        Distribution::worst_case_seller(0.01).map_err(numerical)?,
                    ];
                    for i in 0..20 {
                        v.push(random_staircase_seller(FIXTURE_SEED, i, 6).map_err(from_verify)?);
                    }
                    v
                }
            };
            for s in &sellers {
                run_check(
                    check_prior_independent_exact8(s, &method).map(|c| vec![c]),
                    &mut skips,
                )?;
            }
        }
        "optfee" => {
            let pairs: Vec<(Distribution, Distribution)> = match (buyer, seller) {
                (Some(b), Some(s)) => vec![(b, s)],
                (Some(b), None) => vec![(b, uniform01.clone())],
                (None, Some(s)) => vec![(uniform01.clone(), s)],
                (None, None) => vec![
                    (uniform01.clone(), uniform01.clone()),
                    (
                        Distribution::exponential(1.0).map_err(numerical)?,
                        Distribution::rgpd(-6.0, 0.25, 1.0).map_err(numerical)?,
                    ),
                ],
            };
            for (b, s) in &pairs {
                run_check(check_optimal_fee(b, s, &method).map(|c| vec![c]), &mut skips)?;
            }
        }
        "ln13" => {
            let fixtures: Vec<(Distribution, f64, f64, f64)> = match (buyer, seller) {
                (b, Some(s)) => {
                    let (xi, lambda, mu) = rgpd_params(&s)?;
                    vec![(b.unwrap_or_else(|| uniform01.clone()), xi, lambda, mu)]
                }
                (Some(b), None) => vec![(b, 1.0, 1.0, -1.0)],
                (None, None) => vec![
                    (uniform01.clone(), 1.0, 1.0, -1.0),
                    (Distribution::exponential(1.0).map_err(numerical)?, 1.0, 0.25, -6.0),
                ],
            };
            for (b, xi, lambda, mu) in &fixtures {
                run_check(
                    check_ln13(b, *xi, *lambda, *mu, &method).map(|c| vec![c]),
                    &mut skips,
                )?;
            }
        }
        "maxiid" => {
            let buyers = match buyer {
                Some(b) => vec![b],
                None => vec![uniform01.clone(), Distribution::exponential(1.0).map_err(numerical)?],
            };
            let s = seller.unwrap_or_else(|| uniform01.clone());
            for b in &buyers {
                run_check(check_max_iid_mhr(b, &s, &[1, 2, 3, 5, 10], &method), &mut skips)?;
            }
        }
        "gdelta" => {
            let deltas = match &args.deltas {
                Some(s) => parse_deltas(s)?,
                None => vec![0.1, 0.01, 0.001],
            };
            let (rows, mut cks) = gdelta_experiment(&deltas, &method).map_err(from_verify)?;
            print_gdelta_rows(&rows);
            checks.append(&mut cks);
        }
        other => return Err(usage(format!("unknown check '{other}'"))),
    }

    for c in &checks {
        println!("{}", c.summary_line());
    }
    for m in &skips {
        println!("SKIP {m}");
    }
    if let Some(out) = &args.common.out {
        let csv_rows: Vec<Vec<String>> = checks.iter().map(|c| c.csv_record()).collect();
        let json_rows: Vec<serde_json::Value> = checks.iter().map(|c| c.to_json()).collect();
        append_rows(out, &CHECK_CSV_HEADER, &csv_rows, &json_rows)?;
    }
    Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 })
}

fn print_gdelta_rows(rows: &[GdeltaRow]) {
    println!(
        "{:<10} {:<15} {:<15} {:<15} {:<15} {:<15}",
        "delta", "max_surplus", "closed_form", "best_proper", "surplus_gap", "revenue_gap"
    );
    for r in rows {
        println!(
            "{:<10} {:<15} {:<15} {:<15} {:<15} {:<15}",
            r.delta,
            fmt_sig(r.max_surplus),
            fmt_sig(r.closed_form_surplus),
            fmt_sig(r.best_proper_revenue),
            fmt_sig(r.surplus_gap),
            fmt_sig(r.revenue_gap)
        );
    }
}

fn gdelta_csv_rows(rows: &[GdeltaRow]) -> (Vec<Vec<String>>, Vec<serde_json::Value>) {
    let csv_rows = rows
        .iter()
        .map(|r| {
            vec![
                r.delta.to_string(),
                fmt_sig(r.max_surplus),
                fmt_sig(r.closed_form_surplus),
                fmt_sig(r.best_proper_revenue),
                fmt_sig(r.surplus_gap),
                fmt_sig(r.revenue_gap),
            ]
        })
        .collect();
    let json_rows = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "delta": r.delta,
                "max_surplus": r.max_surplus,
                "closed_form_surplus": r.closed_form_surplus,
                "best_proper_revenue": r.best_proper_revenue,
                "surplus_gap": r.surplus_gap,
                "revenue_gap": r.revenue_gap,
            })
        })
        .collect();
    (csv_rows, json_rows)
}

fn cmd_worstcase(mut args: WorstcaseArgs) -> Result<u8, CliError> {
    let cfg = args.common.merge_config("worstcase")?;
    merge(&mut args.deltas, &cfg, "deltas");
    let method = build_method(&args.common)?;
    let deltas = match &args.deltas {
        Some(s) => parse_deltas(s)?,
        None => vec![0.1, 0.01, 0.001],
    };
    let (rows, checks) = gdelta_experiment(&deltas, &method).map_err(from_verify)?;
    print_gdelta_rows(&rows);
    for c in &checks {
        println!("{}", c.summary_line());
    }
    if let Some(out) = &args.common.out {
        let (csv_rows, json_rows) = gdelta_csv_rows(&rows);
        append_rows(out, &GDELTA_CSV_HEADER, &csv_rows, &json_rows)?;
    }
    Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 })
}
