//! Reproducible experiment harness over the chain implementations.
//!
//! Four experiment families live here: stationary-distribution estimation
//! with replica batching (for the concentration dichotomy), verification of
//! the renewal identity that underlies stationary-measure decompositions,
//! stopping-time measurement with explicit censoring, and phase scans that
//! pair the variational exponent with matched desk-scale simulation.
//!
//! Every experiment follows the same reproducibility contract: replicas are
//! data-parallel, each replica derives its generator from the master seed and
//! its own index through the documented splitting rule, and aggregation is a
//! commutative sum collected in index order — so results are byte-identical
//! regardless of thread count or the parallel feature.

use crate::coupling::{BoundingMaps, Side, UniformMatrix};
use crate::dynamics::iterate_to_fixed_point;
use crate::error::{Error, Result};
use crate::occupancy::{LumpedKernel, Occupancy};
use crate::par;
use crate::params::{ModelParams, SimplexPoint};
use crate::rates::{alpha_from_psi, psi, PsiOptions};
use crate::reduced::{ReducedChain, Theta};
use crate::sequence::{wf_step, Population};
use crate::stream::{replica_rng, replica_rng_stream, splitmix64};
use crate::tol::HITTING_CAP_DEFAULT;
use rand_chacha::ChaCha8Rng;

/// Which chain implementation an experiment drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainSelector {
    /// Sequence-level process (exact but only viable at small scale).
    Wf,
    /// Class-count process (the lumped chain, the workhorse).
    Occupancy,
    /// Lower bounding process around the tracked classes.
    Lower,
    /// Upper bounding process around the tracked classes.
    Upper,
}

impl ChainSelector {
    pub fn as_str(self) -> &'static str {
        match self {
            ChainSelector::Wf => "wf",
            ChainSelector::Occupancy => "occupancy",
            ChainSelector::Lower => "lower",
            ChainSelector::Upper => "upper",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wf" => Ok(ChainSelector::Wf),
            "occupancy" => Ok(ChainSelector::Occupancy),
            "lower" => Ok(ChainSelector::Lower),
            "upper" => Ok(ChainSelector::Upper),
            other => Err(Error::InvalidParams(format!(
                "unknown chain selector {other:?}; expected wf, occupancy, lower, or upper"
            ))),
        }
    }
}

/// Stationary estimate of the tracked class shares `N_k/m`, k = 0..=K.
#[derive(Debug, Clone)]
pub struct StationaryEstimate {
    /// Per-class time-and-replica mean of `N_k/m`; always in `[0, 1]`.
    pub mean: Vec<f64>,
    /// Per-class pooled variance of `N_k/m` over all recorded samples.
    pub variance: Vec<f64>,
    /// Per-class standard error of the mean, by batch means over replicas
    /// (each replica's window mean is one batch). NaN with fewer than two
    /// replicas.
    pub std_error: Vec<f64>,
    pub replicas: usize,
    pub burn_in: usize,
    pub steps: usize,
    /// Under-mixing diagnostics: classes whose first- and second-half window
    /// means disagree by more than five standard errors.
    pub warnings: Vec<String>,
}

struct ReplicaStats {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    first_half: Vec<f64>,
}

/// Drive one chain replica through `burn_in + steps` generations, recording
/// tracked class shares after every post-burn-in step.
#[allow(clippy::too_many_arguments)]
fn observe_chain<S, F, G>(
    mut state: S,
    mut advance: F,
    tracked: G,
    kk: usize,
    m: f64,
    burn_in: usize,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> ReplicaStats
where
    F: FnMut(&S, &mut ChaCha8Rng) -> S,
    G: Fn(&S, usize) -> usize,
{
    for _ in 0..burn_in {
        state = advance(&state, rng);
    }
    let mut sum = vec![0.0; kk];
    let mut sumsq = vec![0.0; kk];
    let mut first_half = vec![0.0; kk];
    let half = steps.div_ceil(2);
    for n in 0..steps {
        state = advance(&state, rng);
        for k in 0..kk {
            let x = tracked(&state, k) as f64 / m;
            sum[k] += x;
            sumsq[k] += x * x;
            if n < half {
                first_half[k] += x;
            }
        }
    }
    ReplicaStats {
        sum,
        sumsq,
        first_half,
    }
}

/// Estimate the stationary distribution of the tracked class shares by
/// long-run averaging over replicas started from the all-master state.
pub fn estimate_stationary(
    params: &ModelParams,
    selector: ChainSelector,
    burn_in: usize,
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<StationaryEstimate> {
    params.validate()?;
    if steps == 0 {
        return Err(Error::InvalidParams(
            "need at least one recorded step".to_string(),
        ));
    }
    if replicas == 0 {
        return Err(Error::InvalidParams(
            "need at least one replica".to_string(),
        ));
    }
    let kern = match selector {
        ChainSelector::Wf => None,
        _ => Some(LumpedKernel::new(params)?),
    };
    if matches!(selector, ChainSelector::Lower | ChainSelector::Upper) {
        // Fail fast on K + 1 > ell before any replica starts.
        BoundingMaps::new(kern.as_ref().expect("kernel built"), params.cap_k)?;
    }
    let kk = params.cap_k + 1;
    let m = params.m as f64;
    let stats: Vec<ReplicaStats> = par::map_indexed(replicas, |rep| {
        let mut rng = replica_rng(seed, rep as u64);
        match selector {
            ChainSelector::Wf => observe_chain(
                Population::all_master(params),
                |p, rng| wf_step(p, params, rng),
                |p: &Population, k| p.class_counts()[k],
                kk,
                m,
                burn_in,
                steps,
                &mut rng,
            ),
            ChainSelector::Occupancy => {
                let kern = kern.as_ref().expect("kernel built");
                observe_chain(
                    Occupancy::all_at_class(params.ell, params.m, 0),
                    |o, rng| kern.step(o, rng),
                    |o: &Occupancy, k| o[k],
                    kk,
                    m,
                    burn_in,
                    steps,
                    &mut rng,
                )
            }
            ChainSelector::Lower | ChainSelector::Upper => {
                let kern = kern.as_ref().expect("kernel built");
                let maps = BoundingMaps::new(kern, params.cap_k).expect("validated above");
                let side = if selector == ChainSelector::Lower {
                    Side::Lower
                } else {
                    Side::Upper
                };
                observe_chain(
                    Occupancy::all_at_class(params.ell, params.m, 0),
                    |o, rng| {
                        let r = UniformMatrix::draw(o.m(), kern.ell, rng);
                        maps.step(side, o, &r)
                    },
                    |o: &Occupancy, k| o[k],
                    kk,
                    m,
                    burn_in,
                    steps,
                    &mut rng,
                )
            }
        }
    });

    let total = (replicas * steps) as f64;
    let mut mean = vec![0.0; kk];
    let mut sumsq = vec![0.0; kk];
    let mut first = vec![0.0; kk];
    for st in &stats {
        for k in 0..kk {
            mean[k] += st.sum[k];
            sumsq[k] += st.sumsq[k];
            first[k] += st.first_half[k];
        }
    }
    for v in mean.iter_mut() {
        *v /= total;
    }
    let variance: Vec<f64> = (0..kk)
        .map(|k| (sumsq[k] / total - mean[k] * mean[k]).max(0.0))
        .collect();
    let std_error: Vec<f64> = (0..kk)
        .map(|k| {
            if replicas < 2 {
                return f64::NAN;
            }
            let batch: Vec<f64> = stats.iter().map(|st| st.sum[k] / steps as f64).collect();
            let bm = batch.iter().sum::<f64>() / replicas as f64;
            let var =
                batch.iter().map(|b| (b - bm) * (b - bm)).sum::<f64>() / (replicas - 1) as f64;
            (var / replicas as f64).sqrt()
        })
        .collect();
    let half = steps.div_ceil(2);
    let mut warnings = Vec::new();
    for k in 0..kk {
        let first_mean = first[k] / (replicas * half) as f64;
        let second_mean = (mean[k] * total - first[k]) / (replicas * (steps - half)).max(1) as f64;
        let se = std_error[k];
        if se.is_finite() && (first_mean - second_mean).abs() > 5.0 * se + 1e-15 {
            warnings.push(format!(
                "class {k}: first/second half means {first_mean:.6}/{second_mean:.6} \
                 disagree beyond 5 standard errors; consider a longer burn-in"
            ));
        }
    }
    Ok(StationaryEstimate {
        mean,
        variance,
        std_error,
        replicas,
        burn_in,
        steps,
        warnings,
    })
}

/// Default burn-in: ten times the relaxation time of the deterministic
/// orbit from the all-master profile (iterations until the orbit settles to
/// within 1e-3 of its limit) — a chain-free proxy for the mixing time.
pub fn default_burn_in(params: &ModelParams) -> usize {
    let mut start = vec![0.0; params.cap_k + 1];
    start[0] = 1.0;
    let start = SimplexPoint::new(start).expect("valid profile");
    match iterate_to_fixed_point(&start, params.sigma, params.a, 1e-3, 100_000) {
        Ok(run) => 10 * run.iterations.max(1),
        Err(_) => 1_000,
    }
}

// ---------------------------------------------------------------------------
// Renewal identity
// ---------------------------------------------------------------------------

/// Two estimates of the same stationary integral and their agreement. The
/// long-run lane averages `f` along one trajectory per replica; the
/// regeneration lane averages `f` over complete excursion cycles (from the
/// reference state through the target set and back) and divides by the mean
/// cycle length.
#[derive(Debug, Clone)]
pub struct RenewalCheck {
    pub long_run: f64,
    pub long_run_se: f64,
    pub cycle_ratio: f64,
    pub cycle_ratio_se: f64,
    /// |long_run − cycle_ratio| in units of the combined standard error.
    pub discrepancy: f64,
    pub completed_cycles: usize,
    /// Replicas whose regeneration lane completed no cycle at all.
    pub empty_replicas: usize,
    pub replicas: usize,
    pub horizon: usize,
}

struct RenewalLane {
    long_avg: f64,
    cycle_sum: f64,
    cycle_len: f64,
    cycles: usize,
}

/// Verify the renewal identity for a chain given by a step function: the
/// stationary integral of `f` equals the expected `f`-reward accumulated over
/// one regeneration cycle divided by the expected cycle length. A cycle
/// starts at the reference state `e`, must visit the target set `W*` (τ* ≥ 1
/// since `e` lies outside it), and ends on the first return to `e` after
/// that visit; the reward sums `f` over the cycle's states excluding the
/// closing return.
pub fn renewal_check<S, Step, InW, F>(
    e: &S,
    step: Step,
    in_wstar: InW,
    f: F,
    horizon: usize,
    replicas: usize,
    seed: u64,
) -> RenewalCheck
where
    S: Clone + PartialEq + Sync,
    Step: Fn(&S, &mut ChaCha8Rng) -> S + Sync,
    InW: Fn(&S) -> bool + Sync,
    F: Fn(&S) -> f64 + Sync,
{
    assert!(
        !in_wstar(e),
        "the reference state must lie outside the target set"
    );
    assert!(horizon >= 2, "need a horizon of at least two steps");
    assert!(replicas >= 1, "need at least one replica");
    let lanes: Vec<RenewalLane> = par::map_indexed(replicas, |rep| {
        let mut rng = replica_rng_stream(seed, rep as u64, 0);
        let mut x = e.clone();
        let mut acc = f(&x);
        for _ in 1..horizon {
            x = step(&x, &mut rng);
            acc += f(&x);
        }
        let long_avg = acc / horizon as f64;

        let mut rng = replica_rng_stream(seed, rep as u64, 1);
        let mut x = e.clone();
        let mut in_excursion = false;
        let mut cur_sum = f(&x);
        let mut cur_len = 1u64;
        let mut cycle_sum = 0.0;
        let mut cycle_len = 0.0;
        let mut cycles = 0usize;
        for _ in 1..horizon {
            x = step(&x, &mut rng);
            if in_excursion && x == *e {
                // The cycle's reward excludes the closing return, which
                // opens the next cycle instead.
                cycle_sum += cur_sum;
                cycle_len += cur_len as f64;
                cycles += 1;
                cur_sum = 0.0;
                cur_len = 0;
                in_excursion = false;
            }
            cur_sum += f(&x);
            cur_len += 1;
            if in_wstar(&x) {
                in_excursion = true;
            }
        }
        RenewalLane {
            long_avg,
            cycle_sum,
            cycle_len,
            cycles,
        }
    });

    let long_run = lanes.iter().map(|l| l.long_avg).sum::<f64>() / replicas as f64;
    let long_run_se = if replicas >= 2 {
        let var = lanes
            .iter()
            .map(|l| (l.long_avg - long_run) * (l.long_avg - long_run))
            .sum::<f64>()
            / (replicas - 1) as f64;
        (var / replicas as f64).sqrt()
    } else {
        f64::NAN
    };

    let ratios: Vec<f64> = lanes
        .iter()
        .filter(|l| l.cycles > 0)
        .map(|l| l.cycle_sum / l.cycle_len)
        .collect();
    let completed_cycles = lanes.iter().map(|l| l.cycles).sum();
    let empty_replicas = replicas - ratios.len();
    let (cycle_ratio, cycle_ratio_se) = if ratios.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let se = if ratios.len() >= 2 {
            let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
                / (ratios.len() - 1) as f64;
            (var / ratios.len() as f64).sqrt()
        } else {
            f64::NAN
        };
        (mean, se)
    };

    let diff = (long_run - cycle_ratio).abs();
    let combined = (long_run_se * long_run_se + cycle_ratio_se * cycle_ratio_se).sqrt();
    let discrepancy = if diff < 1e-12 {
        0.0
    } else if combined > 0.0 {
        diff / combined
    } else {
        f64::INFINITY
    };
    RenewalCheck {
        long_run,
        long_run_se,
        cycle_ratio,
        cycle_ratio_se,
        discrepancy,
        completed_cycles,
        empty_replicas,
        replicas,
        horizon,
    }
}

/// Renewal check on the two-state chain with transition probabilities
/// `p01` (state 0 → 1) and `p10` (state 1 → 0), reference state 0, target
/// set {1}, and `f` the indicator of state 1. The exact stationary value is
/// `p01 / (p01 + p10)`.
pub fn renewal_check_two_state(
    p01: f64,
    p10: f64,
    horizon: usize,
    replicas: usize,
    seed: u64,
) -> RenewalCheck {
    assert!((0.0..=1.0).contains(&p01) && (0.0..=1.0).contains(&p10));
    renewal_check(
        &0u8,
        |s: &u8, rng: &mut ChaCha8Rng| {
            let u: f64 = rand::Rng::random(rng);
            match s {
                0 => u8::from(u < p01),
                _ => u8::from(u >= p10),
            }
        },
        |s: &u8| *s == 1,
        |s: &u8| if *s == 1 { 1.0 } else { 0.0 },
        horizon,
        replicas,
        seed,
    )
}

/// Renewal self-consistency of the reduced chain: reference state is the
/// master-loss state, the target set is every state with a live master
/// class, and `f` is the master share. Both lanes must agree on the
/// stationary master share.
pub fn renewal_check_reduced(
    params: &ModelParams,
    theta: Theta,
    horizon: usize,
    replicas: usize,
    seed: u64,
) -> Result<RenewalCheck> {
    let chain = ReducedChain::new(params, theta)?;
    let e = chain.z_exit();
    let m = chain.m() as f64;
    Ok(renewal_check(
        &e,
        |z: &Vec<usize>, rng: &mut ChaCha8Rng| chain.step(z, rng),
        |z: &Vec<usize>| z[0] >= 1,
        |z: &Vec<usize>| z[0] as f64 / m,
        horizon,
        replicas,
        seed,
    ))
}

// ---------------------------------------------------------------------------
// Stopping times
// ---------------------------------------------------------------------------

/// Censoring caps for the stopping-time harness.
#[derive(Debug, Clone, Copy)]
pub struct TimeCaps {
    pub tau_star: u64,
    pub tau: u64,
    pub tau0: u64,
}

impl Default for TimeCaps {
    fn default() -> Self {
        Self {
            tau_star: HITTING_CAP_DEFAULT,
            tau: HITTING_CAP_DEFAULT,
            tau0: HITTING_CAP_DEFAULT,
        }
    }
}

/// One replica's stopping-time measurements. Censored entries carry the cap
/// value and the flag; they are reported, never dropped.
#[derive(Debug, Clone, Copy)]
pub struct TimeSample {
    pub replica: usize,
    /// Discovery time: steps for the bounding occupancy process to refill
    /// the master class from its master-loss state.
    pub tau_star: u64,
    pub tau_star_censored: bool,
    /// Full regeneration cycle on the same trajectory: steps until the
    /// process is back at the master-loss state after the discovery. The
    /// bounding process collapses to that state exactly when the master
    /// class empties, so this is its renewal cycle length.
    pub tau: u64,
    pub tau_censored: bool,
    /// Persistence time: steps for the reduced chain to lose the master
    /// class from its entry state.
    pub tau0: u64,
    pub tau0_censored: bool,
}

/// Aggregated stopping-time measurement. Means are taken over all samples
/// with censored entries contributing the cap value, so they are lower
/// bounds when censoring occurred; the censored counts say by how much.
#[derive(Debug, Clone)]
pub struct TimeMeasurement {
    pub theta: Theta,
    pub samples: Vec<TimeSample>,
    pub mean_tau_star: f64,
    pub mean_tau: f64,
    pub mean_tau0: f64,
    pub censored_tau_star: usize,
    pub censored_tau: usize,
    pub censored_tau0: usize,
}

/// Measure discovery, regeneration, and persistence times on the
/// `theta`-side processes: τ* and the full cycle τ on one trajectory of the
/// bounding occupancy process from its master-loss state, τ₀ on the reduced
/// chain from its entry state. One sample triple per replica.
pub fn measure_times(
    params: &ModelParams,
    theta: Theta,
    replicas: usize,
    caps: TimeCaps,
    seed: u64,
) -> Result<TimeMeasurement> {
    params.validate()?;
    if replicas == 0 {
        return Err(Error::InvalidParams(
            "need at least one replica".to_string(),
        ));
    }
    let kern = LumpedKernel::new(params)?;
    BoundingMaps::new(&kern, params.cap_k)?;
    let chain = ReducedChain::new(params, theta)?;
    let side = match theta {
        Theta::Lower => Side::Lower,
        Theta::Upper => Side::Upper,
    };
    let samples: Vec<TimeSample> = par::map_indexed(replicas, |rep| {
        let maps = BoundingMaps::new(&kern, params.cap_k).expect("validated above");
        let mut rng = replica_rng_stream(seed, rep as u64, 0);
        let mut o = maps.exit_state(side);
        let mut tau_star = caps.tau_star.min(caps.tau);
        let mut tau_star_censored = true;
        let mut n = 0u64;
        while n < caps.tau_star.min(caps.tau) {
            let r = UniformMatrix::draw(o.m(), kern.ell, &mut rng);
            o = maps.step(side, &o, &r);
            n += 1;
            if o[0] >= 1 {
                tau_star = n;
                tau_star_censored = false;
                break;
            }
        }
        let mut tau = caps.tau;
        let mut tau_censored = true;
        if !tau_star_censored {
            while n < caps.tau {
                let r = UniformMatrix::draw(o.m(), kern.ell, &mut rng);
                o = maps.step(side, &o, &r);
                n += 1;
                if o[0] == 0 {
                    tau = n;
                    tau_censored = false;
                    break;
                }
            }
        }
        let mut rng = replica_rng_stream(seed, rep as u64, 1);
        let loss = chain.master_loss_time(&mut rng, caps.tau0);
        TimeSample {
            replica: rep,
            tau_star,
            tau_star_censored,
            tau,
            tau_censored,
            tau0: loss.steps,
            tau0_censored: loss.censored,
        }
    });
    let n = replicas as f64;
    let mean_tau_star = samples.iter().map(|s| s.tau_star as f64).sum::<f64>() / n;
    let mean_tau = samples.iter().map(|s| s.tau as f64).sum::<f64>() / n;
    let mean_tau0 = samples.iter().map(|s| s.tau0 as f64).sum::<f64>() / n;
    let censored_tau_star = samples.iter().filter(|s| s.tau_star_censored).count();
    let censored_tau = samples.iter().filter(|s| s.tau_censored).count();
    let censored_tau0 = samples.iter().filter(|s| s.tau0_censored).count();
    Ok(TimeMeasurement {
        theta,
        samples,
        mean_tau_star,
        mean_tau,
        mean_tau0,
        censored_tau_star,
        censored_tau,
        censored_tau0,
    })
}

/// One row of a qualitative trend table: the varied parameter value, the
/// sample mean of the stopping time, and the censored fraction.
#[derive(Debug, Clone, Copy)]
pub struct TrendRow {
    pub varied: usize,
    pub mean: f64,
    pub censored_fraction: f64,
}

/// Persistence-time trend: rerun the τ₀ measurement at each population size
/// in `ms`, holding everything else fixed (α follows m/ℓ).
pub fn tau0_trend(
    base: &ModelParams,
    theta: Theta,
    ms: &[usize],
    replicas: usize,
    cap: u64,
    seed: u64,
) -> Result<Vec<TrendRow>> {
    let mut rows = Vec::with_capacity(ms.len());
    for (i, &m) in ms.iter().enumerate() {
        let p = ModelParams::new(
            base.ell,
            m,
            base.kappa,
            base.q,
            base.sigma,
            base.cap_k,
            base.a,
            m as f64 / base.ell as f64,
        )?;
        let caps = TimeCaps {
            tau_star: 1,
            tau: 1,
            tau0: cap,
        };
        let meas = measure_times(&p, theta, replicas, caps, splitmix64(seed ^ i as u64))?;
        rows.push(TrendRow {
            varied: m,
            mean: meas.mean_tau0,
            censored_fraction: meas.censored_tau0 as f64 / replicas as f64,
        });
    }
    Ok(rows)
}

/// Discovery-time trend: rerun the τ* measurement at each sequence length in
/// `ells`, holding the mutation intensity fixed (q follows a/ℓ).
pub fn tau_star_trend(
    base: &ModelParams,
    theta: Theta,
    ells: &[usize],
    replicas: usize,
    cap: u64,
    seed: u64,
) -> Result<Vec<TrendRow>> {
    let mut rows = Vec::with_capacity(ells.len());
    for (i, &ell) in ells.iter().enumerate() {
        let p = ModelParams::new(
            ell,
            base.m,
            base.kappa,
            base.a / ell as f64,
            base.sigma,
            base.cap_k,
            base.a,
            base.m as f64 / ell as f64,
        )?;
        let caps = TimeCaps {
            tau_star: cap,
            tau: cap,
            tau0: 1,
        };
        let meas = measure_times(&p, theta, replicas, caps, splitmix64(seed ^ i as u64))?;
        rows.push(TrendRow {
            varied: ell,
            mean: meas.mean_tau_star,
            censored_fraction: meas.censored_tau_star as f64 / replicas as f64,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Phase scan
// ---------------------------------------------------------------------------

/// Desk-scale harness configuration for the phase scan's simulated column.
#[derive(Debug, Clone)]
pub struct PhaseScanConfig {
    pub ell: usize,
    pub kappa: u32,
    pub sigma: f64,
    pub cap_k: usize,
    pub burn_in: usize,
    pub steps: usize,
    pub replicas: usize,
}

impl Default for PhaseScanConfig {
    fn default() -> Self {
        Self {
            ell: 20,
            kappa: 2,
            sigma: 2.0,
            cap_k: 2,
            burn_in: 500,
            steps: 2_000,
            replicas: 8,
        }
    }
}

/// One grid point of the phase diagram: the exponent, the critical scaling,
/// the predicted phase, and the matched desk-scale simulation.
#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub a: f64,
    pub alpha: f64,
    pub psi: f64,
    pub alpha_critical: f64,
    /// Predicted quasispecies phase: `α·ψ(a) > ln κ`.
    pub predicted_quasispecies: bool,
    pub simulated_n0_mean: f64,
    pub simulated_n0_se: f64,
}

/// Scan the `(a, α)` grid: evaluate the survival exponent once per mutation
/// intensity, then simulate the class-count chain at the matched desk scale
/// `q = a/ℓ`, `m = round(αℓ)` for every grid point. Emits exactly
/// `|a_grid|·|alpha_grid|` rows, in row-major order.
pub fn phase_scan(
    a_grid: &[f64],
    alpha_grid: &[f64],
    cfg: &PhaseScanConfig,
    seed: u64,
) -> Result<Vec<PhasePoint>> {
    let ln_kappa = f64::from(cfg.kappa).ln();
    let mut rows = Vec::with_capacity(a_grid.len() * alpha_grid.len());
    for (ia, &a) in a_grid.iter().enumerate() {
        let exponent = psi(a, cfg.sigma, &PsiOptions::default())?;
        let alpha_critical = alpha_from_psi(exponent.value, cfg.kappa);
        for (ja, &alpha) in alpha_grid.iter().enumerate() {
            let q = a / cfg.ell as f64;
            let m = (alpha * cfg.ell as f64).round().max(1.0) as usize;
            let p = ModelParams::new(cfg.ell, m, cfg.kappa, q, cfg.sigma, cfg.cap_k, a, alpha)?;
            let point_seed = splitmix64(seed ^ splitmix64(((ia as u64) << 32) | ja as u64));
            let est = estimate_stationary(
                &p,
                ChainSelector::Occupancy,
                cfg.burn_in,
                cfg.steps,
                cfg.replicas,
                point_seed,
            )?;
            rows.push(PhasePoint {
                a,
                alpha,
                psi: exponent.value,
                alpha_critical,
                predicted_quasispecies: alpha * exponent.value > ln_kappa,
                simulated_n0_mean: est.mean[0],
                simulated_n0_se: est.std_error[0],
            });
        }
    }
    Ok(rows)
}
