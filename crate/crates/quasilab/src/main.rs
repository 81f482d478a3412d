//! Command-line front end: each subcommand drives one library entry point
//! and renders a deterministic table (CSV with `#` metadata preamble, or
//! JSON). Exit codes: 0 on success, 2 on validation errors, 3 when an
//! exact-enumeration guard rejects the instance size, 1 otherwise.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use quasilab::coupling::{BoundingMaps, Side, UniformMatrix};
use quasilab::dynamics::{iterate_to_fixed_point, rho_star};
use quasilab::experiments::{
    default_burn_in, estimate_stationary, measure_times, phase_scan, renewal_check_reduced,
    renewal_check_two_state, ChainSelector, PhaseScanConfig, TimeCaps,
};
use quasilab::occupancy::LumpedKernel;
use quasilab::output::{OutputFormat, Table, Value};
use quasilab::params::SimplexPoint;
use quasilab::rates::{alpha_from_psi, psi, PsiOptions, SelectionDenominator};
use quasilab::reduced::Theta;
use quasilab::sequence::{wf_step, Population};
use quasilab::stream::replica_rng;
use quasilab::tol::{FIXED_POINT_TOL, HITTING_CAP_DEFAULT, ITERATE_MAX, PSI_LMAX_DEFAULT};
use quasilab::{Error, ModelParams, RawParams};

#[derive(Parser)]
#[command(
    name = "quasilab",
    version,
    about = "Finite-population mutation-selection chains, their bounding processes, \
             limit dynamics, and large-deviation diagnostics"
)]
struct Cli {
    /// TOML config file with model parameters; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for all replica streams.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output encoding.
    #[arg(long, global = true, default_value = "csv")]
    format: String,

    #[command(subcommand)]
    command: Command,
}

/// Model parameters; any field may instead come from `--config`.
#[derive(Args, Clone, Default)]
struct ParamFlags {
    /// Sequence length.
    #[arg(long)]
    ell: Option<usize>,
    /// Population size.
    #[arg(long)]
    m: Option<usize>,
    /// Alphabet size.
    #[arg(long)]
    kappa: Option<u32>,
    /// Per-site mutation probability.
    #[arg(long)]
    q: Option<f64>,
    /// Master-class fitness advantage.
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of tracked mutant classes (classes 0..=K are tracked).
    #[arg(long = "K")]
    cap_k: Option<usize>,
    /// Mutation intensity a = q * ell.
    #[arg(long)]
    a: Option<f64>,
    /// Population scaling alpha = m / ell.
    #[arg(long)]
    alpha: Option<f64>,
}

impl ParamFlags {
    fn to_raw(&self) -> RawParams {
        RawParams {
            ell: self.ell,
            m: self.m,
            kappa: self.kappa,
            q: self.q,
            sigma: self.sigma,
            cap_k: self.cap_k,
            a: self.a,
            alpha: self.alpha,
            seed: None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the sequence-level process; one row per replica and step
    /// with tracked class counts.
    SimulateWf {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
    },
    /// Simulate the class-count chain; same schema as simulate-wf.
    SimulateOccupancy {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
    },
    /// Simulate a bounding process (lower or upper) with its enter/exit
    /// handling; rows carry the tracked counts and a state tag.
    SimulateBounds {
        #[command(flatten)]
        params: ParamFlags,
        /// Which side: lower or upper.
        #[arg(long)]
        theta: String,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
    },
    /// Measure discovery (tau_star), regeneration (tau), and master-loss
    /// (tau0) times; one row per replica, censoring flags included.
    HittingTimes {
        #[command(flatten)]
        params: ParamFlags,
        /// Which side: lower or upper.
        #[arg(long, default_value = "lower")]
        theta: String,
        #[arg(long, default_value_t = 100)]
        replicas: usize,
        /// Censoring cap for tau_star.
        #[arg(long, default_value_t = HITTING_CAP_DEFAULT)]
        cap_tau_star: u64,
        /// Censoring cap for tau.
        #[arg(long, default_value_t = HITTING_CAP_DEFAULT)]
        cap_tau: u64,
        /// Censoring cap for tau0.
        #[arg(long, default_value_t = HITTING_CAP_DEFAULT)]
        cap_tau0: u64,
    },
    /// Evaluate the limit dynamics: predicted stationary profile and the
    /// orbit limit from the all-master profile, class by class.
    Dynamics {
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Evaluate the survival exponent psi(a) and the critical scaling it
    /// implies.
    Psi {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        sigma: f64,
        /// Alphabet size used for the critical scaling column.
        #[arg(long, default_value_t = 2)]
        kappa: u32,
        /// Initial cap on path length (doubled until stable).
        #[arg(long)]
        lmax: Option<usize>,
        /// Use the uncorrected selection-success denominator (diagnostic).
        #[arg(long)]
        printed_denominator: bool,
    },
    /// Tabulate psi and the critical scaling over a grid of mutation
    /// intensities; with --alpha-grid, add a matched desk-scale simulation
    /// at every (a, alpha) point.
    PhaseDiagram {
        /// Grid of a values: "start:stop:count" or a comma list.
        #[arg(long)]
        a_grid: String,
        /// Optional grid of alpha values (same syntax) for the simulated
        /// columns.
        #[arg(long)]
        alpha_grid: Option<String>,
        #[arg(long, default_value_t = 2)]
        kappa: u32,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        /// Sequence length of the desk-scale simulation.
        #[arg(long, default_value_t = 20)]
        ell: usize,
        /// Tracked classes of the desk-scale simulation.
        #[arg(long = "K", default_value_t = 2)]
        cap_k: usize,
        #[arg(long, default_value_t = 500)]
        burn_in: usize,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 8)]
        replicas: usize,
    },
    /// Check the renewal identity: long-run average versus regeneration
    /// cycle ratio, with the discrepancy in combined standard errors.
    RenewalCheck {
        /// Which chain: two-state or reduced.
        #[arg(long, default_value = "two-state")]
        chain: String,
        #[command(flatten)]
        params: ParamFlags,
        /// two-state only: probability of moving 0 -> 1.
        #[arg(long, default_value_t = 0.3)]
        p01: f64,
        /// two-state only: probability of moving 1 -> 0.
        #[arg(long, default_value_t = 0.6)]
        p10: f64,
        /// reduced only: which side, lower or upper.
        #[arg(long, default_value = "lower")]
        theta: String,
        #[arg(long, default_value_t = 20_000)]
        horizon: usize,
        #[arg(long, default_value_t = 16)]
        replicas: usize,
    },
    /// Estimate the stationary tracked-class shares by replica-batched
    /// long-run averaging; one row per class.
    Stationary {
        #[command(flatten)]
        params: ParamFlags,
        /// Which chain: wf, occupancy, lower, or upper.
        #[arg(long, default_value = "occupancy")]
        chain: String,
        /// Burn-in steps; defaults to ten times the deterministic
        /// relaxation time.
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 32)]
        replicas: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<Error>().map_or(1u8, |e| match e {
                Error::InvalidParams(_) => 2,
                Error::InstanceTooLarge(_) => 3,
                _ => 1,
            });
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let format = OutputFormat::parse(&cli.format)?;
    let file_raw = load_raw(&cli.config)?;
    let seed = cli.seed.or(file_raw.seed).unwrap_or(0);

    let table = match &cli.command {
        Command::SimulateWf {
            params,
            steps,
            replicas,
        } => {
            let p = resolve(&file_raw, params)?;
            simulate_wf_table(&p, *steps, *replicas, seed)
        }
        Command::SimulateOccupancy {
            params,
            steps,
            replicas,
        } => {
            let p = resolve(&file_raw, params)?;
            simulate_occupancy_table(&p, *steps, *replicas, seed)?
        }
        Command::SimulateBounds {
            params,
            theta,
            steps,
            replicas,
        } => {
            let p = resolve(&file_raw, params)?;
            simulate_bounds_table(&p, parse_theta(theta)?, *steps, *replicas, seed)?
        }
        Command::HittingTimes {
            params,
            theta,
            replicas,
            cap_tau_star,
            cap_tau,
            cap_tau0,
        } => {
            let p = resolve(&file_raw, params)?;
            let caps = TimeCaps {
                tau_star: *cap_tau_star,
                tau: *cap_tau,
                tau0: *cap_tau0,
            };
            hitting_times_table(&p, parse_theta(theta)?, *replicas, caps, seed)?
        }
        Command::Dynamics { params } => {
            let p = resolve(&file_raw, params)?;
            dynamics_table(&p)?
        }
        Command::Psi {
            a,
            sigma,
            kappa,
            lmax,
            printed_denominator,
        } => psi_table(*a, *sigma, *kappa, *lmax, *printed_denominator)?,
        Command::PhaseDiagram {
            a_grid,
            alpha_grid,
            kappa,
            sigma,
            ell,
            cap_k,
            burn_in,
            steps,
            replicas,
        } => {
            let cfg = PhaseScanConfig {
                ell: *ell,
                kappa: *kappa,
                sigma: *sigma,
                cap_k: *cap_k,
                burn_in: *burn_in,
                steps: *steps,
                replicas: *replicas,
            };
            phase_diagram_table(a_grid, alpha_grid.as_deref(), &cfg, seed)?
        }
        Command::RenewalCheck {
            chain,
            params,
            p01,
            p10,
            theta,
            horizon,
            replicas,
        } => match chain.as_str() {
            "two-state" => two_state_renewal_table(*p01, *p10, *horizon, *replicas, seed)?,
            "reduced" => {
                let p = resolve(&file_raw, params)?;
                reduced_renewal_table(&p, parse_theta(theta)?, *horizon, *replicas, seed)?
            }
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown renewal chain {other:?}; expected two-state or reduced"
                ))
                .into())
            }
        },
        Command::Stationary {
            params,
            chain,
            burn_in,
            steps,
            replicas,
        } => {
            let p = resolve(&file_raw, params)?;
            let selector = ChainSelector::parse(chain)?;
            let burn = burn_in.unwrap_or_else(|| default_burn_in(&p));
            stationary_table(&p, selector, burn, *steps, *replicas, seed)?
        }
    };

    let text = table.render(format);
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn load_raw(config: &Option<PathBuf>) -> anyhow::Result<RawParams> {
    match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(RawParams::from_toml(&text)?)
        }
        None => Ok(RawParams::default()),
    }
}

fn resolve(file_raw: &RawParams, flags: &ParamFlags) -> anyhow::Result<ModelParams> {
    let raw = file_raw.overlaid(&flags.to_raw());
    let (params, notes) = raw.resolve()?;
    for note in notes {
        eprintln!("note: {note}");
    }
    Ok(params)
}

fn parse_theta(s: &str) -> Result<Theta, Error> {
    match s {
        "lower" => Ok(Theta::Lower),
        "upper" => Ok(Theta::Upper),
        other => Err(Error::InvalidParams(format!(
            "unknown theta {other:?}; expected lower or upper"
        ))),
    }
}

fn theta_side(theta: Theta) -> Side {
    match theta {
        Theta::Lower => Side::Lower,
        Theta::Upper => Side::Upper,
    }
}

fn param_meta(t: &mut Table, command: &str, p: &ModelParams, seed: u64) {
    t.meta("command", command)
        .meta("ell", p.ell)
        .meta("m", p.m)
        .meta("kappa", p.kappa)
        .meta("q", p.q)
        .meta("sigma", p.sigma)
        .meta("K", p.cap_k)
        .meta("a", p.a)
        .meta("alpha", p.alpha)
        .meta("seed", seed);
}

fn class_columns(cap_k: usize, prefix: &str) -> Vec<String> {
    let mut cols = vec!["replica".to_string(), "step".to_string()];
    for k in 0..=cap_k {
        cols.push(format!("{prefix}_{k}"));
    }
    cols
}

fn simulate_wf_table(p: &ModelParams, steps: usize, replicas: usize, seed: u64) -> Table {
    let mut cols = class_columns(p.cap_k, "N");
    cols.push("N_rest".to_string());
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(&col_refs);
    param_meta(&mut t, "simulate-wf", p, seed);
    t.meta("steps", steps).meta("replicas", replicas);
    for rep in 0..replicas {
        let mut rng = replica_rng(seed, rep as u64);
        let mut pop = Population::all_master(p);
        for step in 0..=steps {
            if step > 0 {
                pop = wf_step(&pop, p, &mut rng);
            }
            let counts = pop.class_counts();
            let tracked: usize = (0..=p.cap_k).map(|k| counts[k]).sum();
            let mut row: Vec<Value> = vec![rep.into(), step.into()];
            for k in 0..=p.cap_k {
                row.push(counts[k].into());
            }
            row.push((p.m - tracked).into());
            t.push_row(row);
        }
    }
    t
}

fn simulate_occupancy_table(
    p: &ModelParams,
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<Table, Error> {
    let kern = LumpedKernel::new(p)?;
    let mut cols = class_columns(p.cap_k, "N");
    cols.push("N_rest".to_string());
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(&col_refs);
    param_meta(&mut t, "simulate-occupancy", p, seed);
    t.meta("steps", steps).meta("replicas", replicas);
    for rep in 0..replicas {
        let mut rng = replica_rng(seed, rep as u64);
        let mut o = quasilab::occupancy::Occupancy::all_at_class(p.ell, p.m, 0);
        for step in 0..=steps {
            if step > 0 {
                o = kern.step(&o, &mut rng);
            }
            let tracked: usize = (0..=p.cap_k).map(|k| o[k]).sum();
            let mut row: Vec<Value> = vec![rep.into(), step.into()];
            for k in 0..=p.cap_k {
                row.push(o[k].into());
            }
            row.push((p.m - tracked).into());
            t.push_row(row);
        }
    }
    Ok(t)
}

fn simulate_bounds_table(
    p: &ModelParams,
    theta: Theta,
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<Table, Error> {
    let kern = LumpedKernel::new(p)?;
    let maps = BoundingMaps::new(&kern, p.cap_k)?;
    let side = theta_side(theta);
    let mut cols = class_columns(p.cap_k, "z");
    cols.push("state_tag".to_string());
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(&col_refs);
    param_meta(&mut t, "simulate-bounds", p, seed);
    t.meta("theta", theta.as_str())
        .meta("steps", steps)
        .meta("replicas", replicas);
    let enter = maps.enter_state(side);
    let exit = maps.exit_state(side);
    for rep in 0..replicas {
        let mut rng = replica_rng(seed, rep as u64);
        let mut o = quasilab::occupancy::Occupancy::all_at_class(p.ell, p.m, 0);
        for step in 0..=steps {
            if step > 0 {
                let r = UniformMatrix::draw(o.m(), kern.ell, &mut rng);
                o = maps.step(side, &o, &r);
            }
            let tag = if o == exit {
                "exit"
            } else if o == enter {
                "enter"
            } else {
                ""
            };
            let mut row: Vec<Value> = vec![rep.into(), step.into()];
            for k in 0..=p.cap_k {
                row.push(o[k].into());
            }
            row.push(tag.into());
            t.push_row(row);
        }
    }
    Ok(t)
}

fn hitting_times_table(
    p: &ModelParams,
    theta: Theta,
    replicas: usize,
    caps: TimeCaps,
    seed: u64,
) -> Result<Table, Error> {
    let meas = measure_times(p, theta, replicas, caps, seed)?;
    let mut t = Table::new(&[
        "replica",
        "tau_star",
        "tau_star_censored",
        "tau",
        "tau_censored",
        "tau0",
        "tau0_censored",
    ]);
    param_meta(&mut t, "hitting-times", p, seed);
    t.meta("theta", theta.as_str())
        .meta("replicas", replicas)
        .meta("cap_tau_star", caps.tau_star)
        .meta("cap_tau", caps.tau)
        .meta("cap_tau0", caps.tau0)
        .meta("mean_tau_star", meas.mean_tau_star)
        .meta("mean_tau", meas.mean_tau)
        .meta("mean_tau0", meas.mean_tau0)
        .meta("censored_tau_star", meas.censored_tau_star)
        .meta("censored_tau", meas.censored_tau)
        .meta("censored_tau0", meas.censored_tau0);
    for s in &meas.samples {
        t.push_row(vec![
            s.replica.into(),
            s.tau_star.into(),
            s.tau_star_censored.into(),
            s.tau.into(),
            s.tau_censored.into(),
            s.tau0.into(),
            s.tau0_censored.into(),
        ]);
    }
    Ok(t)
}

fn dynamics_table(p: &ModelParams) -> Result<Table, Error> {
    let predicted = rho_star(p.sigma, p.a, p.cap_k);
    let mut start = vec![0.0; p.cap_k + 1];
    start[0] = 1.0;
    let start = SimplexPoint::new(start)?;
    let run = iterate_to_fixed_point(&start, p.sigma, p.a, FIXED_POINT_TOL, ITERATE_MAX)?;
    let mut t = Table::new(&["k", "rho_star_k", "orbit_limit_k", "abs_diff"]);
    param_meta(&mut t, "dynamics", p, 0);
    t.meta("supercritical", predicted.supercritical)
        .meta("iterations", run.iterations)
        .meta("deviation", run.deviation)
        .meta("tolerance", FIXED_POINT_TOL);
    for k in 0..=p.cap_k {
        let pr = predicted.rho[k];
        let ob = run.limit[k];
        t.push_row(vec![k.into(), pr.into(), ob.into(), (pr - ob).abs().into()]);
    }
    Ok(t)
}

fn psi_table(
    a: f64,
    sigma: f64,
    kappa: u32,
    lmax: Option<usize>,
    printed: bool,
) -> Result<Table, Error> {
    let opts = PsiOptions {
        l_max: lmax.unwrap_or(PSI_LMAX_DEFAULT),
        denominator: if printed {
            SelectionDenominator::Printed
        } else {
            SelectionDenominator::Corrected
        },
        ..PsiOptions::default()
    };
    let res = psi(a, sigma, &opts)?;
    let alpha_c = alpha_from_psi(res.value, kappa);
    let mut t = Table::new(&["a", "sigma", "kappa", "psi", "alpha_c"]);
    t.meta("command", "psi")
        .meta("denominator", if printed { "printed" } else { "corrected" })
        .meta("l_max_used", res.l_max_used)
        .meta("best_transitions", res.best_transitions)
        .meta("stabilized", res.stabilized)
        .meta("supercritical", res.supercritical)
        .meta("rho_star0", res.rho_star0);
    t.push_row(vec![
        a.into(),
        sigma.into(),
        u64::from(kappa).into(),
        res.value.into(),
        alpha_c.into(),
    ]);
    Ok(t)
}

fn phase_diagram_table(
    a_grid: &str,
    alpha_grid: Option<&str>,
    cfg: &PhaseScanConfig,
    seed: u64,
) -> Result<Table, Error> {
    let a_values = parse_grid(a_grid)?;
    match alpha_grid {
        None => {
            let mut t = Table::new(&["a", "psi", "alpha_c"]);
            t.meta("command", "phase-diagram")
                .meta("kappa", cfg.kappa)
                .meta("sigma", cfg.sigma);
            for &a in &a_values {
                let res = psi(a, cfg.sigma, &PsiOptions::default())?;
                t.push_row(vec![
                    a.into(),
                    res.value.into(),
                    alpha_from_psi(res.value, cfg.kappa).into(),
                ]);
            }
            Ok(t)
        }
        Some(grid) => {
            let alpha_values = parse_grid(grid)?;
            let rows = phase_scan(&a_values, &alpha_values, cfg, seed)?;
            let mut t = Table::new(&[
                "a",
                "alpha",
                "psi",
                "alpha_c",
                "predicted_quasispecies",
                "n0_mean",
                "n0_se",
            ]);
            t.meta("command", "phase-diagram")
                .meta("kappa", cfg.kappa)
                .meta("sigma", cfg.sigma)
                .meta("ell", cfg.ell)
                .meta("K", cfg.cap_k)
                .meta("burn_in", cfg.burn_in)
                .meta("steps", cfg.steps)
                .meta("replicas", cfg.replicas)
                .meta("seed", seed);
            for r in rows {
                t.push_row(vec![
                    r.a.into(),
                    r.alpha.into(),
                    r.psi.into(),
                    r.alpha_critical.into(),
                    r.predicted_quasispecies.into(),
                    r.simulated_n0_mean.into(),
                    r.simulated_n0_se.into(),
                ]);
            }
            Ok(t)
        }
    }
}

fn renewal_columns() -> [&'static str; 9] {
    [
        "long_run",
        "long_run_se",
        "cycle_ratio",
        "cycle_ratio_se",
        "discrepancy_se",
        "completed_cycles",
        "empty_replicas",
        "replicas",
        "horizon",
    ]
}

fn renewal_row(t: &mut Table, check: &quasilab::experiments::RenewalCheck) {
    t.push_row(vec![
        check.long_run.into(),
        check.long_run_se.into(),
        check.cycle_ratio.into(),
        check.cycle_ratio_se.into(),
        check.discrepancy.into(),
        check.completed_cycles.into(),
        check.empty_replicas.into(),
        check.replicas.into(),
        check.horizon.into(),
    ]);
}

fn two_state_renewal_table(
    p01: f64,
    p10: f64,
    horizon: usize,
    replicas: usize,
    seed: u64,
) -> Result<Table, Error> {
    if !(0.0..=1.0).contains(&p01) || !(0.0..=1.0).contains(&p10) {
        return Err(Error::InvalidParams(
            "p01 and p10 must lie in [0, 1]".to_string(),
        ));
    }
    let check = renewal_check_two_state(p01, p10, horizon, replicas, seed);
    let mut t = Table::new(&renewal_columns());
    t.meta("command", "renewal-check")
        .meta("chain", "two-state")
        .meta("p01", p01)
        .meta("p10", p10)
        .meta("exact", p01 / (p01 + p10))
        .meta("seed", seed);
    renewal_row(&mut t, &check);
    Ok(t)
}

fn reduced_renewal_table(
    p: &ModelParams,
    theta: Theta,
    horizon: usize,
    replicas: usize,
    seed: u64,
) -> Result<Table, Error> {
    let check = renewal_check_reduced(p, theta, horizon, replicas, seed)?;
    let mut t = Table::new(&renewal_columns());
    param_meta(&mut t, "renewal-check", p, seed);
    t.meta("chain", "reduced").meta("theta", theta.as_str());
    renewal_row(&mut t, &check);
    Ok(t)
}

fn stationary_table(
    p: &ModelParams,
    selector: ChainSelector,
    burn_in: usize,
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<Table, Error> {
    let est = estimate_stationary(p, selector, burn_in, steps, replicas, seed)?;
    let mut t = Table::new(&["k", "mean", "variance", "std_error"]);
    param_meta(&mut t, "stationary", p, seed);
    t.meta("chain", selector.as_str())
        .meta("burn_in", est.burn_in)
        .meta("steps", est.steps)
        .meta("replicas", est.replicas);
    for (i, w) in est.warnings.iter().enumerate() {
        t.meta(&format!("warning_{i}"), w);
    }
    for k in 0..est.mean.len() {
        t.push_row(vec![
            k.into(),
            est.mean[k].into(),
            est.variance[k].into(),
            est.std_error[k].into(),
        ]);
    }
    Ok(t)
}

/// Parse a grid spec: either an inclusive "start:stop:count" range or a
/// comma-separated list of values.
fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    let bad = |msg: String| Error::InvalidParams(msg);
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("grid {s:?} must be start:stop:count")));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| bad(format!("bad grid start {:?}", parts[0])))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| bad(format!("bad grid stop {:?}", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| bad(format!("bad grid count {:?}", parts[2])))?;
        if count == 0 {
            return Err(bad("grid count must be at least 1".to_string()));
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        Ok((0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect())
    } else {
        s.split(',')
            .map(|part| {
                part.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("bad grid value {part:?}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parses_ranges_and_lists() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0.5:0.5:1").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("0.1, 0.2,0.3").unwrap(), vec![0.1, 0.2, 0.3]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn theta_names_parse() {
        assert_eq!(parse_theta("lower").unwrap(), Theta::Lower);
        assert_eq!(parse_theta("upper").unwrap(), Theta::Upper);
        assert!(parse_theta("middle").is_err());
    }

    #[test]
    fn cli_declaration_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
