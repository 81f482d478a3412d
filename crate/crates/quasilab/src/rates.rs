//! Large-deviation rate functions and variational path costs.
//!
//! At population scale, one reproduction round carries a class profile `r`
//! through an intermediate selection profile `ξ` (which classes the parents
//! were drawn from) and a flow matrix `β` (how much of each parent class's
//! offspring lands in each tracked class). The exponential cost of observing
//! profile `t` next is a sum of relative-entropy terms assembled here.
//! Minimizing over the intermediates gives the one-round cost `cost_v1`,
//! chaining rounds gives `cost_vl`, and the scalar (master-class-only)
//! specialization evaluated from the quasispecies profile down to extinction
//! yields the survival exponent `psi` that draws the phase diagram.
//!
//! Every minimization reports the value of an explicit feasible witness, so
//! reported costs are always achievable upper bounds; low-dimensional grid
//! oracles in the test suite pin them from below.

use crate::dynamics::{limit_map, rho_star};
use crate::error::{Error, Result};
use crate::numeric::{l1_norm, ln_multinomial, xlnxy};
use crate::occupancy::lumped_mutation_row;
use crate::par;
use crate::params::SimplexPoint;
use crate::reduced::Theta;
use crate::stream::splitmix64;
use crate::tol::{PSI_LMAX_DEFAULT, PSI_STABLE_RTOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dust tolerance for membership in the constraint sets (column sums,
/// simplex bounds). Derived quantities like `t_j - Σ_i β_ij` carry a few ulps
/// of cancellation error; anything beyond this is a genuine violation.
const FEAS_TOL: f64 = 1e-9;

/// Flow matrix of one reproduction round: entry `(i, j)` is the share of the
/// population produced by class-`i` parents that lands in class `j`. The rate
/// functions price violations of the intended constraint set (upper
/// triangular with column sums matching the target profile in the
/// infinite-length limit) as +∞ rather than panicking, so optimizer iterates
/// can wander freely.
pub type TransportMatrix = Vec<Vec<f64>>;

// ---------------------------------------------------------------------------
// Scalar and vector rate functions
// ---------------------------------------------------------------------------

/// Relative entropy of a coin with success probability `t` with respect to a
/// coin with success probability `p`:
/// `t ln(t/p) + (1−t) ln((1−t)/(1−p))`, with `0·ln(0/0) = 0`.
///
/// Arguments outside `[0, 1]` score +∞ so that optimizer iterates and the
/// printed-denominator variant of the survival exponent stay well defined.
pub fn binomial_rate(p: f64, t: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&t) {
        return f64::INFINITY;
    }
    xlnxy(t, p) + xlnxy(1.0 - t, 1.0 - p)
}

/// Relative entropy of a categorical law over the tracked classes plus an
/// implicit remainder cell: `Σ_k t_k ln(t_k/p_k) + (1−|t|) ln((1−|t|)/(1−|p|))`.
/// Reduces to [`binomial_rate`] in dimension one.
pub fn multinomial_rate(p: &SimplexPoint, t: &SimplexPoint) -> f64 {
    assert_eq!(p.dim(), t.dim(), "profiles must have the same dimension");
    multinomial_rate_raw(p.coords(), t.coords())
}

/// Slice-level core of [`multinomial_rate`]. Inputs are totalized: negative
/// components beyond dust or totals above one score +∞, matching the
/// infeasible-projection convention of the optimizers.
pub(crate) fn multinomial_rate_raw(p: &[f64], t: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), t.len());
    let mut acc = 0.0;
    let mut psum = 0.0;
    let mut tsum = 0.0;
    for (&pk, &tk) in p.iter().zip(t) {
        if pk < -FEAS_TOL || tk < -FEAS_TOL || pk.is_nan() || tk.is_nan() {
            return f64::INFINITY;
        }
        let pk = pk.max(0.0);
        let tk = tk.max(0.0);
        psum += pk;
        tsum += tk;
        acc += xlnxy(tk, pk);
        if acc == f64::INFINITY {
            return acc;
        }
    }
    if psum > 1.0 + FEAS_TOL || tsum > 1.0 + FEAS_TOL {
        return f64::INFINITY;
    }
    acc + xlnxy((1.0 - tsum).max(0.0), (1.0 - psum).max(0.0))
}

/// Result of checking the log-multinomial estimate: the absolute difference
/// between `ln(multinomial coefficient)` and the entropy sum it approximates,
/// together with the polynomial bound it must stay under.
#[derive(Debug, Clone, Copy)]
pub struct BoundCheck {
    pub residual: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.residual <= self.bound
    }
}

/// Checks that the multinomial coefficient of `counts` out of `n` satisfies
/// `|ln C + Σ_k i_k ln(i_k/n) + (n−s) ln((n−s)/n)| ≤ (N+2) ln n + 2N + 3`,
/// where `N` is the number of explicit count entries and `s` their sum
/// (the remainder `n−s` is an implicit extra cell).
pub fn log_multinomial_bound_check(n: u64, counts: &[u64]) -> BoundCheck {
    assert!(n >= 1, "the estimate needs a positive sample size");
    let s: u64 = counts.iter().sum();
    assert!(s <= n, "counts may not exceed the sample size");
    let nf = n as f64;
    let plogterm = |i: u64| -> f64 {
        if i == 0 {
            0.0
        } else {
            (i as f64) * ((i as f64) / nf).ln()
        }
    };
    let mut entropy = counts.iter().map(|&i| plogterm(i)).sum::<f64>();
    entropy += plogterm(n - s);
    let residual = (ln_multinomial(n, counts) + entropy).abs();
    let big_n = counts.len() as f64;
    let bound = (big_n + 2.0) * nf.ln() + 2.0 * big_n + 3.0;
    BoundCheck { residual, bound }
}

/// Mutation kernel of the infinite-length limit: a class-`i` parent begets a
/// class-`j` child with probability `e^{−a} a^{j−i}/(j−i)!` when `j ≥ i`, and
/// never moves down a class.
pub fn limit_mutation(i: usize, j: usize, a: f64) -> f64 {
    if j < i {
        return 0.0;
    }
    let d = j - i;
    if d == 0 {
        return (-a).exp();
    }
    if a <= 0.0 {
        return 0.0;
    }
    let mut ln_fact = 0.0;
    for x in 2..=d {
        ln_fact += (x as f64).ln();
    }
    (-a + d as f64 * a.ln() - ln_fact).exp()
}

/// Row `i` of the limit mutation kernel, truncated to classes `0..=cap_k`.
pub fn limit_mutation_row(i: usize, cap_k: usize, a: f64) -> Vec<f64> {
    (0..=cap_k).map(|j| limit_mutation(i, j, a)).collect()
}

/// Per-child selection profile of the one-round limit map: class 0 is drawn
/// with weight `σ r_0` and every other class with its own share.
fn selection_profile(r: &[f64], sigma: f64) -> Vec<f64> {
    let denom = (sigma - 1.0) * r[0] + 1.0;
    let mut out = Vec::with_capacity(r.len());
    out.push(sigma * r[0] / denom);
    for &x in &r[1..] {
        out.push(x / denom);
    }
    out
}

/// `w · I_K(p, flow/w)`: the cost of routing the flows of a parent share `w`.
/// A vanishing share can only feed vanishing flows; anything else is +∞.
fn scaled_row_rate(w: f64, p: &[f64], flow: &[f64]) -> f64 {
    if w <= FEAS_TOL {
        return if l1_norm(flow) <= 10.0 * FEAS_TOL {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let scaled: Vec<f64> = flow.iter().map(|x| x / w).collect();
    w * multinomial_rate_raw(p, &scaled)
}

/// Shared scorer: selection term plus one routing term per tracked class.
/// `rows[k]` is the mutation law of a class-`k` parent over tracked classes.
fn rate_given_rows(fsel: &[f64], xi: &[f64], rows: &[Vec<f64>], beta: &[Vec<f64>]) -> f64 {
    let mut total = multinomial_rate_raw(fsel, xi);
    if !total.is_finite() {
        return total;
    }
    for k in 0..xi.len() {
        total += scaled_row_rate(xi[k], &rows[k], &beta[k]);
        if total == f64::INFINITY {
            return total;
        }
    }
    total
}

/// Transport rate of one reproduction round in the infinite-length limit:
/// the cost of selecting parent profile `xi` from `r`, then routing each
/// class's offspring through `beta` so that the column sums realize `t`.
/// Scores +∞ unless `beta` is upper triangular with column sums equal to `t`
/// (children never move down a class in the limit, so downward flows and
/// unbalanced columns are unreachable).
pub fn transport_rate(
    sigma: f64,
    a: f64,
    r: &SimplexPoint,
    xi: &SimplexPoint,
    beta: &[Vec<f64>],
    t: &SimplexPoint,
) -> f64 {
    assert_eq!(r.dim(), t.dim(), "profiles must have the same dimension");
    assert_eq!(r.dim(), xi.dim(), "profiles must have the same dimension");
    transport_rate_core(sigma, a, r.coords(), xi.coords(), beta, t.coords())
}

fn transport_rate_core(
    sigma: f64,
    a: f64,
    r: &[f64],
    xi: &[f64],
    beta: &[Vec<f64>],
    t: &[f64],
) -> f64 {
    let kk = r.len();
    assert_eq!(beta.len(), kk, "flow matrix must be (K+1) x (K+1)");
    for row in beta {
        assert_eq!(row.len(), kk, "flow matrix must be (K+1) x (K+1)");
    }
    for (i, row) in beta.iter().enumerate() {
        for &v in row.iter().take(i) {
            if v != 0.0 {
                return f64::INFINITY;
            }
        }
    }
    for j in 0..kk {
        let col: f64 = (0..kk).map(|i| beta[i][j]).sum();
        if (col - t[j]).abs() > FEAS_TOL {
            return f64::INFINITY;
        }
    }
    let fsel = selection_profile(r, sigma);
    let rows: Vec<Vec<f64>> = (0..kk).map(|k| limit_mutation_row(k, kk - 1, a)).collect();
    rate_given_rows(&fsel, xi, &rows, beta)
}

/// Transport rate of one reproduction round at finite sequence length.
///
/// Unlike the limit rate, the flow matrix is unconstrained here: every class
/// can mutate into every tracked class, and the shortfall `t_j − Σ_i β_ij`
/// of each column is supplied by children of untracked parents, priced by a
/// consolidated row keyed to the bounding side `theta` (the worst class for
/// the lower process, the first untracked class for the upper one). As the
/// sequence length grows with `q = a/ℓ`, this converges to [`transport_rate`]
/// on upper-triangular matrices with matching column sums, and to +∞
/// elsewhere.
#[allow(clippy::too_many_arguments)]
pub fn transport_rate_finite(
    ell: usize,
    kappa: u32,
    q: f64,
    theta: Theta,
    sigma: f64,
    r: &SimplexPoint,
    xi: &SimplexPoint,
    beta: &[Vec<f64>],
    t: &SimplexPoint,
) -> f64 {
    let kk = r.dim();
    let cap_k = kk - 1;
    assert!(
        cap_k < ell,
        "tracked classes must fit strictly inside the class range"
    );
    assert_eq!(t.dim(), kk, "profiles must have the same dimension");
    assert_eq!(xi.dim(), kk, "profiles must have the same dimension");
    assert_eq!(beta.len(), kk, "flow matrix must be (K+1) x (K+1)");
    let (r, xi, t) = (r.coords(), xi.coords(), t.coords());
    let fsel = selection_profile(r, sigma);
    let rows: Vec<Vec<f64>> = (0..kk)
        .map(|k| lumped_mutation_row(ell, kappa, q, k)[..=cap_k].to_vec())
        .collect();
    let theta_class = match theta {
        Theta::Lower => ell,
        Theta::Upper => cap_k + 1,
    };
    let theta_row = lumped_mutation_row(ell, kappa, q, theta_class)[..=cap_k].to_vec();
    let mut total = rate_given_rows(&fsel, xi, &rows, beta);
    if !total.is_finite() {
        return total;
    }
    let untracked = (1.0 - xi.iter().sum::<f64>()).max(0.0);
    let deficit: Vec<f64> = (0..kk)
        .map(|j| t[j] - (0..kk).map(|i| beta[i][j]).sum::<f64>())
        .collect();
    total += scaled_row_rate(untracked, &theta_row, &deficit);
    total
}

/// The zero-cost witness of one round from profile `r`: selection profile
/// `ξ = f(r)`, flows `β_ij = ξ_i M_∞(i,j)`, and target `t` = column sums
/// (which equal the one-round limit map of `r`). Returns `(xi, beta, t)`.
pub fn limit_flow_witness(sigma: f64, a: f64, r: &[f64]) -> (Vec<f64>, TransportMatrix, Vec<f64>) {
    let kk = r.len();
    let xi = selection_profile(r, sigma);
    let mut beta = vec![vec![0.0; kk]; kk];
    for (i, row) in beta.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate().skip(i) {
            *slot = xi[i] * limit_mutation(i, j, a);
        }
    }
    let t: Vec<f64> = (0..kk).map(|j| (0..kk).map(|i| beta[i][j]).sum()).collect();
    (xi, beta, t)
}

// ---------------------------------------------------------------------------
// Derivative-free minimization
// ---------------------------------------------------------------------------

/// One-dimensional golden-section minimization over `[lo, hi]`, followed by
/// an endpoint comparison so extended-value (+∞ plateau) objectives cannot
/// trap the bracket away from a boundary minimum. Returns `(argmin, min)`.
/// Exact for convex objectives up to the bracket width `0.618^iters`.
fn golden_min(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let clean = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    if !(hi > lo) {
        let v = clean(f(lo));
        return (lo, v);
    }
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    const INVPHI2: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let mut h = b - a;
    let mut c = a + INVPHI2 * h;
    let mut d = a + INVPHI * h;
    let mut fc = clean(f(c));
    let mut fd = clean(f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            h = b - a;
            c = a + INVPHI2 * h;
            fc = clean(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            h = b - a;
            d = a + INVPHI * h;
            fd = clean(f(d));
        }
    }
    let (mut bx, mut bv) = if fc < fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let v = clean(f(x));
        if v < bv {
            bv = v;
            bx = x;
        }
    }
    (bx, bv)
}

/// Simplex-reflection local search: repeated evaluation only, no gradients.
/// `step` sets the initial simplex size, `max_iter` caps the reflection
/// loop, and the search stops early once the best value drops to
/// `stop_below` (rates are non-negative, so a near-zero value is final).
/// Infinite values are legal and simply rank worst.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    stop_below: f64,
) -> (Vec<f64>, f64) {
    let clean = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let dim = x0.len();
    if dim == 0 {
        let v = clean(f(x0));
        return (x0.to_vec(), v);
    }
    let mut pts: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim + 1);
    let v0 = clean(f(x0));
    pts.push((v0, x0.to_vec()));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = clean(f(&x));
        pts.push((v, x));
    }
    for _ in 0..max_iter {
        pts.sort_by(|p, q| p.0.total_cmp(&q.0));
        if pts[0].0 <= stop_below {
            break;
        }
        let spread = pts[dim].0 - pts[0].0;
        if spread.is_finite() && spread < 1e-14 {
            let diam = (0..dim)
                .map(|k| (pts[dim].1[k] - pts[0].1[k]).abs())
                .fold(0.0, f64::max);
            if diam < 1e-10 {
                break;
            }
        }
        let mut centroid = vec![0.0; dim];
        for p in &pts[..dim] {
            for (slot, &x) in centroid.iter_mut().zip(&p.1) {
                *slot += x;
            }
        }
        for slot in centroid.iter_mut() {
            *slot /= dim as f64;
        }
        let worst = pts[dim].0;
        let second = pts[dim - 1].0;
        let refl: Vec<f64> = (0..dim)
            .map(|k| 2.0 * centroid[k] - pts[dim].1[k])
            .collect();
        let fr = clean(f(&refl));
        if fr < pts[0].0 {
            let expand: Vec<f64> = (0..dim).map(|k| 2.0 * refl[k] - centroid[k]).collect();
            let fe = clean(f(&expand));
            pts[dim] = if fe < fr { (fe, expand) } else { (fr, refl) };
        } else if fr < second {
            pts[dim] = (fr, refl);
        } else {
            let (fc, xc) = if fr < worst {
                let x: Vec<f64> = (0..dim).map(|k| 0.5 * (centroid[k] + refl[k])).collect();
                (clean(f(&x)), x)
            } else {
                let x: Vec<f64> = (0..dim)
                    .map(|k| 0.5 * (centroid[k] + pts[dim].1[k]))
                    .collect();
                (clean(f(&x)), x)
            };
            if fc < worst.min(fr) {
                pts[dim] = (fc, xc);
            } else {
                let best = pts[0].1.clone();
                for p in pts.iter_mut().skip(1) {
                    for (slot, &b) in p.1.iter_mut().zip(&best) {
                        *slot = 0.5 * (b + *slot);
                    }
                    p.0 = clean(f(&p.1));
                }
            }
        }
    }
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (v, x) = pts.swap_remove(0);
    (x, v)
}

/// Multi-start wrapper: restarts run in parallel and are reduced by a
/// sequential min over the restart index, so the result is independent of
/// scheduling. Restart `i` always uses the same start and budget regardless
/// of how many restarts run, so enlarging the restart count can only lower
/// the minimum.
fn multi_start_min<O, S>(
    restarts: usize,
    starts: S,
    objective: O,
    max_iter: usize,
    stop_below: f64,
) -> (f64, Vec<f64>)
where
    O: Fn(&[f64]) -> f64 + Sync,
    S: Fn(usize) -> Vec<f64> + Sync,
{
    let runs = par::map_indexed(restarts.max(1), |i| {
        let x0 = starts(i);
        // Tight initial simplex around the structured warm start, broader
        // steps for the exploratory restarts.
        let step = if i == 0 { 0.02 } else { 0.08 };
        let (x1, v1) = nelder_mead(|x| objective(x), &x0, step, max_iter, stop_below);
        let (x2, v2) = nelder_mead(|x| objective(x), &x1, 1e-3, max_iter / 2, stop_below);
        if v2 < v1 {
            (v2, x2)
        } else {
            (v1, x1)
        }
    });
    let mut iter = runs.into_iter();
    let mut best = iter.next().expect("at least one restart");
    for cand in iter {
        if cand.0 < best.0 {
            best = cand;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// One-round and multi-round costs
// ---------------------------------------------------------------------------

/// Options for the variational cost minimizers.
#[derive(Debug, Clone)]
pub struct CostOptions {
    /// Number of local-search restarts (structured warm starts first, then
    /// seeded random starts). Restart `i` is identical across runs, so more
    /// restarts never increase the reported minimum.
    pub restarts: usize,
    /// Base seed for the random restarts.
    pub seed: u64,
}

/// Base seed for the exploratory restarts; fixed so that default runs are
/// reproducible bit for bit.
const COST_SEED_DEFAULT: u64 = 0x6b8f_1f2d_3c4a_5e70;

impl Default for CostOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            seed: COST_SEED_DEFAULT,
        }
    }
}

/// Outcome of a variational cost minimization: the achieved value plus the
/// feasible witness that achieves it (one selection profile and one flow
/// matrix per round, and the full path of profiles including endpoints).
#[derive(Debug, Clone)]
pub struct CostResult {
    pub value: f64,
    pub xi: Vec<Vec<f64>>,
    pub beta: Vec<TransportMatrix>,
    pub path: Vec<Vec<f64>>,
}

fn validate_rate_params(sigma: f64, a: f64) -> Result<()> {
    if !sigma.is_finite() || sigma <= 1.0 {
        return Err(Error::InvalidParams(format!(
            "selective advantage must exceed 1, got {sigma}"
        )));
    }
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "mutation intensity must be positive, got {a}"
        )));
    }
    Ok(())
}

/// Clamp to the box `[0,1]` coordinate-wise, then rescale onto the simplex
/// boundary if the total exceeds one.
fn project_subsimplex(raw: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = raw.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let s: f64 = v.iter().sum();
    if s > 1.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
    v
}

/// Decode the free flow entries (strictly above the diagonal, column-major:
/// column `j` contributes entries `i = 0..j`) into a full matrix. The
/// diagonal entry of each column is eliminated by the column-sum constraint;
/// free entries are projected to non-negativity, and a negative eliminated
/// entry means the projection is infeasible (`None`, scored +∞).
fn decode_beta(free: &[f64], t: &[f64]) -> Option<TransportMatrix> {
    let kk = t.len();
    debug_assert_eq!(free.len(), kk * (kk - 1) / 2);
    let mut beta = vec![vec![0.0; kk]; kk];
    let mut cur = 0;
    for j in 0..kk {
        let mut used = 0.0;
        for i in 0..j {
            let v = free[cur].max(0.0);
            cur += 1;
            beta[i][j] = v;
            used += v;
        }
        let diag = t[j] - used;
        if diag < -FEAS_TOL {
            return None;
        }
        beta[j][j] = diag.max(0.0);
    }
    Some(beta)
}

/// Variable vector of the zero-cost witness for a round from `r` (selection
/// profile `fsel`) toward `t`: the flows `ξ_i M_∞(i,j)` rescaled per column
/// to meet the column-sum targets.
fn v1_witness_vars(fsel: &[f64], t: &[f64], a: f64) -> Vec<f64> {
    let kk = fsel.len();
    let mut vars = fsel.to_vec();
    for j in 1..kk {
        let denom: f64 = (0..=j).map(|i| fsel[i] * limit_mutation(i, j, a)).sum();
        let factor = if denom > 0.0 { t[j] / denom } else { 0.0 };
        for i in 0..j {
            vars.push(fsel[i] * limit_mutation(i, j, a) * factor);
        }
    }
    vars
}

/// Core one-round solve over slices. Returns `(value, xi, beta)`; the value
/// is +∞ with empty witnesses when no feasible point was found.
fn v1_solve(
    sigma: f64,
    a: f64,
    r: &[f64],
    t: &[f64],
    opts: &CostOptions,
    max_iter: usize,
) -> (f64, Vec<f64>, TransportMatrix) {
    let kk = r.len();
    let nfree = kk * (kk - 1) / 2;
    let fsel = selection_profile(r, sigma);
    let rows: Vec<Vec<f64>> = (0..kk).map(|k| limit_mutation_row(k, kk - 1, a)).collect();
    let objective = |vars: &[f64]| -> f64 {
        let xi = project_subsimplex(&vars[..kk]);
        match decode_beta(&vars[kk..], t) {
            Some(beta) => rate_given_rows(&fsel, &xi, &rows, &beta),
            None => f64::INFINITY,
        }
    };
    let witness = v1_witness_vars(&fsel, t, a);
    let starts = |idx: usize| -> Vec<f64> {
        match idx {
            0 => witness.clone(),
            1 => {
                // Diagonal transport: every class feeds itself, ξ = t. This
                // start is feasible whenever the target is reachable at all,
                // which keeps the search out of all-infinite terrain.
                let mut v = t.to_vec();
                v.extend(std::iter::repeat(0.0).take(nfree));
                v
            }
            _ => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(splitmix64(opts.seed ^ splitmix64(idx as u64)));
                let mut v: Vec<f64> = (0..kk).map(|_| rng.random::<f64>()).collect();
                for j in 0..kk {
                    for _ in 0..j {
                        v.push(rng.random::<f64>() * t[j]);
                    }
                }
                v
            }
        }
    };
    let (value, vars) = multi_start_min(opts.restarts, starts, objective, max_iter, 1e-13);
    if !value.is_finite() {
        return (f64::INFINITY, Vec::new(), Vec::new());
    }
    let xi = project_subsimplex(&vars[..kk]);
    let beta = decode_beta(&vars[kk..], t).expect("finite objective implies decodable flows");
    (value.max(0.0), xi, beta)
}

/// Minimal transport rate of a single reproduction round from `r` to `t`,
/// minimized over the selection profile and the flow matrix.
pub fn cost_v1(sigma: f64, a: f64, r: &SimplexPoint, t: &SimplexPoint) -> Result<CostResult> {
    cost_v1_with(sigma, a, r, t, &CostOptions::default())
}

/// [`cost_v1`] with explicit optimizer options.
pub fn cost_v1_with(
    sigma: f64,
    a: f64,
    r: &SimplexPoint,
    t: &SimplexPoint,
    opts: &CostOptions,
) -> Result<CostResult> {
    validate_rate_params(sigma, a)?;
    if r.dim() != t.dim() {
        return Err(Error::InvalidParams(format!(
            "profile dimensions differ: {} vs {}",
            r.dim(),
            t.dim()
        )));
    }
    let dim = r.dim() + r.dim() * (r.dim() - 1) / 2;
    let (value, xi, beta) = v1_solve(sigma, a, r.coords(), t.coords(), opts, 300 * dim + 100);
    if !value.is_finite() {
        return Err(Error::OptimizerFailure(format!(
            "no feasible transport found for a single round from {:?} to {:?}; \
             the target may be unreachable in one round",
            r.coords(),
            t.coords()
        )));
    }
    Ok(CostResult {
        value,
        xi: vec![xi],
        beta: vec![beta],
        path: vec![r.coords().to_vec(), t.coords().to_vec()],
    })
}

/// Minimal accumulated transport rate of an `l`-round path from `r` to `t`,
/// optimized jointly over the intermediate profiles (each round is then
/// priced by the one-round minimization).
pub fn cost_vl(
    sigma: f64,
    a: f64,
    r: &SimplexPoint,
    t: &SimplexPoint,
    l: usize,
) -> Result<CostResult> {
    cost_vl_with(sigma, a, r, t, l, &CostOptions::default())
}

/// [`cost_vl`] with explicit optimizer options.
///
/// The joint search over intermediates scores candidates with a fast
/// single-start inner solve; the reported result re-solves every round at
/// the full restart budget along the best intermediates found, and also
/// along two deterministic constructions (the forward orbit of the limit
/// map and the straight-line blend), keeping whichever chain is cheapest.
pub fn cost_vl_with(
    sigma: f64,
    a: f64,
    r: &SimplexPoint,
    t: &SimplexPoint,
    l: usize,
    opts: &CostOptions,
) -> Result<CostResult> {
    validate_rate_params(sigma, a)?;
    if l == 0 {
        return Err(Error::InvalidParams(
            "a path needs at least one round".to_string(),
        ));
    }
    if l == 1 {
        return cost_v1_with(sigma, a, r, t, opts);
    }
    if r.dim() != t.dim() {
        return Err(Error::InvalidParams(format!(
            "profile dimensions differ: {} vs {}",
            r.dim(),
            t.dim()
        )));
    }
    let kk = r.dim();
    let rc = r.coords().to_vec();
    let tc = t.coords().to_vec();

    let mut orbit: Vec<Vec<f64>> = Vec::with_capacity(l - 1);
    let mut cur = r.clone();
    for _ in 1..l {
        cur = limit_map(&cur, sigma, a);
        orbit.push(cur.coords().to_vec());
    }
    let blend: Vec<Vec<f64>> = (1..l)
        .map(|k| {
            let w = k as f64 / l as f64;
            (0..kk).map(|i| (1.0 - w) * rc[i] + w * tc[i]).collect()
        })
        .collect();

    let fast = CostOptions {
        restarts: 1,
        seed: opts.seed,
    };
    let leg_dim = kk + kk * (kk - 1) / 2;
    let leg_budget = 120 * leg_dim + 40;
    let chain_value = |mids: &[Vec<f64>]| -> f64 {
        let mut total = 0.0;
        let mut prev: &[f64] = &rc;
        for mid in mids {
            total += v1_solve(sigma, a, prev, mid, &fast, leg_budget).0;
            if total == f64::INFINITY {
                return total;
            }
            prev = mid;
        }
        total + v1_solve(sigma, a, prev, &tc, &fast, leg_budget).0
    };
    let decode_mids =
        |vars: &[f64]| -> Vec<Vec<f64>> { vars.chunks(kk).map(project_subsimplex).collect() };
    let objective = |vars: &[f64]| -> f64 { chain_value(&decode_mids(vars)) };
    let flatten = |mids: &[Vec<f64>]| -> Vec<f64> { mids.concat() };
    let starts = |idx: usize| -> Vec<f64> {
        match idx {
            0 => flatten(&orbit),
            1 => flatten(&blend),
            _ => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(splitmix64(opts.seed ^ splitmix64(idx as u64)));
                (0..(l - 1) * kk).map(|_| rng.random::<f64>()).collect()
            }
        }
    };
    // The outer search multiplies the inner solve cost by its own evaluation
    // count, so its restart budget is capped; the final full-budget re-solve
    // below recovers precision on the selected chain.
    let outer_restarts = opts.restarts.clamp(1, 4);
    let outer_dim = (l - 1) * kk;
    let (_, ovars) = multi_start_min(
        outer_restarts,
        starts,
        objective,
        100 * outer_dim + 40,
        1e-13,
    );

    let full_budget = 300 * leg_dim + 100;
    let mut best: Option<CostResult> = None;
    for mids in [decode_mids(&ovars), orbit, blend] {
        let mut value = 0.0;
        let mut xis = Vec::with_capacity(l);
        let mut betas = Vec::with_capacity(l);
        let mut path = vec![rc.clone()];
        let mut prev: &[f64] = &rc;
        let mut feasible = true;
        for mid in mids.iter().chain(std::iter::once(&tc)) {
            let (v, xi, beta) = v1_solve(sigma, a, prev, mid, opts, full_budget);
            if !v.is_finite() {
                feasible = false;
                break;
            }
            value += v;
            xis.push(xi);
            betas.push(beta);
            path.push(mid.clone());
            prev = mid;
        }
        if feasible && best.as_ref().map_or(true, |b| value < b.value) {
            best = Some(CostResult {
                value,
                xi: xis,
                beta: betas,
                path,
            });
        }
    }
    best.ok_or_else(|| {
        Error::OptimizerFailure(format!(
            "no feasible {l}-round path found from {:?} to {:?}",
            r.coords(),
            t.coords()
        ))
    })
}

// ---------------------------------------------------------------------------
// Scalar master-class path costs and the survival exponent
// ---------------------------------------------------------------------------

/// Which denominator the per-round selection success probability uses. The
/// regular form `σρ/((σ−1)ρ+1)` is the selection map of the model; the
/// printed variant with `(σ−1)ρ−1` is provided for comparison and lands
/// outside `[0,1]` for every ρ in `(0,1]`, so costs built on it are +∞
/// whenever the start is a live master share.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionDenominator {
    Corrected,
    Printed,
}

impl SelectionDenominator {
    fn selection_success(self, sigma: f64, rho: f64) -> f64 {
        let denom = match self {
            SelectionDenominator::Corrected => (sigma - 1.0) * rho + 1.0,
            SelectionDenominator::Printed => (sigma - 1.0) * rho - 1.0,
        };
        sigma * rho / denom
    }
}

/// Cost of one reproduction round moving the master share from `r` to `t`,
/// tracking only the master class: the round first selects a fraction γ of
/// master parents, then a fraction `t/γ` of their children stay mutation
/// free. The intermediate is minimized out:
/// `inf over γ in [t, 1] of I(σr/((σ−1)r+1), γ) + γ·I(e^{−a}, t/γ)`.
/// The objective is convex in γ (the second term is a perspective of a
/// convex function), so golden-section search finds the global minimum.
pub fn master_transition_cost(
    sigma: f64,
    a: f64,
    denom: SelectionDenominator,
    r: f64,
    t: f64,
) -> f64 {
    if !(0.0..=1.0).contains(&r) || !(0.0..=1.0).contains(&t) {
        return f64::INFINITY;
    }
    let p = denom.selection_success(sigma, r);
    let survive = (-a).exp();
    let mut obj = |g: f64| -> f64 {
        if g <= 0.0 {
            // No master parents selected: no master children can appear.
            return if t == 0.0 {
                binomial_rate(p, 0.0)
            } else {
                f64::INFINITY
            };
        }
        let inner = t / g;
        if inner > 1.0 {
            return f64::INFINITY;
        }
        binomial_rate(p, g) + g * binomial_rate(survive, inner)
    };
    golden_min(&mut obj, t, 1.0, 60).1
}

/// Grid + coordinate-descent evaluator for multi-round master-share paths.
/// The transition-cost matrix over the grid is built once; dynamic
/// programming then prices paths of every length in one sweep, and cyclic
/// coordinate descent (golden section per interior point, never accepting a
/// worse pair of adjacent rounds) refines a grid path into the continuum.
struct PathEvaluator {
    sigma: f64,
    a: f64,
    denom: SelectionDenominator,
    grid: Vec<f64>,
    cmat: Vec<f64>,
}

impl PathEvaluator {
    fn new(sigma: f64, a: f64, denom: SelectionDenominator, nodes: usize) -> Self {
        let n = nodes.max(11);
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let rows = par::map_indexed(n, |i| {
            grid.iter()
                .map(|&t| master_transition_cost(sigma, a, denom, grid[i], t))
                .collect::<Vec<f64>>()
        });
        let cmat = rows.concat();
        Self {
            sigma,
            a,
            denom,
            grid,
            cmat,
        }
    }

    fn c(&self, r: f64, t: f64) -> f64 {
        master_transition_cost(self.sigma, self.a, self.denom, r, t)
    }

    fn path_value(&self, path: &[f64]) -> f64 {
        path.windows(2).map(|w| self.c(w[0], w[1])).sum()
    }

    /// Best grid path from `s` to `t` for every transition count `1..=n_max`.
    /// Element `k` of the result corresponds to `k+1` transitions.
    fn dp_values(&self, s: f64, t: f64, n_max: usize) -> Vec<(f64, Vec<f64>)> {
        let g = self.grid.len();
        let from_s: Vec<f64> = self.grid.iter().map(|&x| self.c(s, x)).collect();
        let to_t: Vec<f64> = self.grid.iter().map(|&x| self.c(x, t)).collect();
        let mut out = Vec::with_capacity(n_max);
        out.push((self.c(s, t), vec![s, t]));
        if n_max == 1 {
            return out;
        }
        // d[j]: cheapest way to sit at grid node j after `stage` transitions.
        let mut d = from_s;
        let mut parents: Vec<Vec<u32>> = Vec::new();
        for n in 2..=n_max {
            let mut best = f64::INFINITY;
            let mut bi = 0usize;
            for (i, &di) in d.iter().enumerate() {
                let v = di + to_t[i];
                if v < best {
                    best = v;
                    bi = i;
                }
            }
            let mut chain = vec![0usize; n - 1];
            chain[n - 2] = bi;
            for k in (2..n).rev() {
                chain[k - 2] = parents[k - 2][chain[k - 1]] as usize;
            }
            let mut path = Vec::with_capacity(n + 1);
            path.push(s);
            for &idx in &chain {
                path.push(self.grid[idx]);
            }
            path.push(t);
            out.push((best, path));
            if n == n_max {
                break;
            }
            let mut nd = vec![f64::INFINITY; g];
            let mut np = vec![0u32; g];
            for (j, (slot, parent)) in nd.iter_mut().zip(np.iter_mut()).enumerate() {
                let mut bv = f64::INFINITY;
                let mut bp = 0u32;
                for (i, &di) in d.iter().enumerate() {
                    let v = di + self.cmat[i * g + j];
                    if v < bv {
                        bv = v;
                        bp = i as u32;
                    }
                }
                *slot = bv;
                *parent = bp;
            }
            parents.push(np);
            d = nd;
        }
        out
    }

    /// Cyclic coordinate descent over the interior points of `path`;
    /// endpoints stay pinned. Returns the refined path value.
    fn refine(&self, path: &mut [f64]) -> f64 {
        let mut value = self.path_value(path);
        if path.len() <= 2 {
            return value;
        }
        for _ in 0..60 {
            for idx in 1..path.len() - 1 {
                let (left, right) = (path[idx - 1], path[idx + 1]);
                let cur = self.c(left, path[idx]) + self.c(path[idx], right);
                let mut obj = |x: f64| self.c(left, x) + self.c(x, right);
                let (x, v) = golden_min(&mut obj, 0.0, 1.0, 48);
                if v < cur {
                    path[idx] = x;
                }
            }
            let before = value;
            value = self.path_value(path);
            // NaN-safe: an infinite path yields NaN improvement and stops
            // after a single sweep.
            if !(before - value > 1e-11) {
                break;
            }
        }
        value
    }
}

/// A multi-round master-share path and its accumulated cost.
#[derive(Debug, Clone)]
pub struct MasterPathCost {
    pub value: f64,
    pub path: Vec<f64>,
}

/// Cheapest `transitions`-round master-share path from `s` to `t`.
///
/// Every round along the path is charged: round `k` moves `ρ_k` to `ρ_{k+1}`
/// through its own selection intermediate `γ_k`, with `ρ_0 = s` pinned at the
/// start and the final profile pinned at `t`. Leaving either boundary round
/// unpriced would let a path teleport off its pinned endpoint for free and
/// collapse every infimum to zero, so the sum runs over all `transitions`
/// rounds.
pub fn master_path_cost(
    sigma: f64,
    a: f64,
    denom: SelectionDenominator,
    s: f64,
    t: f64,
    transitions: usize,
) -> MasterPathCost {
    assert!(transitions >= 1, "a path needs at least one round");
    let ev = PathEvaluator::new(sigma, a, denom, 101);
    let dps = ev.dp_values(s, t, transitions);
    let (dv, mut path) = dps.into_iter().last().expect("at least one path length");
    let value = if dv.is_finite() {
        ev.refine(&mut path)
    } else {
        dv
    };
    MasterPathCost { value, path }
}

/// Refinement can improve a grid path by at most roughly the local slope
/// times the grid pitch; 0.02 is a generous ceiling for the 1/100 pitch used
/// here, calibrated against the low-length grid oracles in the test suite.
const REFINE_HEADROOM: f64 = 0.02;

/// Whether the cheapest master-share path from `s` to `t` over at most
/// `l_max` rounds drops below `tol` — the numerical realization of the
/// zero-cost reachability relation. Requires a supercritical regime
/// (`σ e^{−a} > 1`); the zero set is exactly: both shares zero, `t` on the
/// forward orbit of `s` under the scalar limit map, or `s` live and `t` the
/// stable master share (approached along ever longer orbits).
pub fn master_cost_zero_check(sigma: f64, a: f64, s: f64, t: f64, l_max: usize, tol: f64) -> bool {
    assert!(
        sigma * (-a).exp() > 1.0,
        "the zero-set characterization needs a supercritical regime"
    );
    let ev = PathEvaluator::new(sigma, a, SelectionDenominator::Corrected, 101);
    let dps = ev.dp_values(s, t, l_max.max(1));
    for (dv, dpath) in &dps {
        if *dv < tol {
            return true;
        }
        if dv.is_finite() && *dv < tol + REFINE_HEADROOM {
            let mut path = dpath.clone();
            if ev.refine(&mut path) < tol {
                return true;
            }
        }
    }
    false
}

/// Options for the survival-exponent evaluation.
#[derive(Debug, Clone)]
pub struct PsiOptions {
    /// Initial cap on the number of rounds in a path; doubled until the
    /// value stabilizes.
    pub l_max: usize,
    /// Selection-success denominator convention.
    pub denominator: SelectionDenominator,
    /// Relative stabilization tolerance across cap doublings.
    pub rel_tol: f64,
    /// Grid nodes for the path evaluator.
    pub grid_nodes: usize,
    /// How many times the cap may double before reporting non-convergence.
    pub max_doublings: usize,
}

impl Default for PsiOptions {
    fn default() -> Self {
        Self {
            l_max: PSI_LMAX_DEFAULT,
            denominator: SelectionDenominator::Corrected,
            rel_tol: PSI_STABLE_RTOL,
            grid_nodes: 101,
            max_doublings: 3,
        }
    }
}

/// Survival exponent evaluation, with its stabilization certificate.
#[derive(Debug, Clone)]
pub struct PsiResult {
    /// The exponent: cheapest accumulated cost of driving the master share
    /// from its stable value down to extinction.
    pub value: f64,
    /// Number of rounds in the cheapest path found.
    pub best_transitions: usize,
    /// Round cap in force when the value stabilized.
    pub l_max_used: usize,
    /// Whether consecutive cap doublings agreed within the tolerance.
    pub stabilized: bool,
    /// Whether the regime supports a live quasispecies at all.
    pub supercritical: bool,
    /// Stable master share used as the path start.
    pub rho_star0: f64,
}

/// Survival exponent ψ(a): the cheapest accumulated per-round cost of a
/// master-share path from the stable quasispecies share `ρ*(a)` down to 0,
/// over paths of any length (the length cap doubles until the value
/// stabilizes within `rel_tol`). Subcritical regimes (`σe^{−a} ≤ 1`) have
/// `ρ*(a) = 0` and the all-zero path is free, so ψ = 0 by convention.
pub fn psi(a: f64, sigma: f64, opts: &PsiOptions) -> Result<PsiResult> {
    validate_rate_params(sigma, a)?;
    let star = rho_star(sigma, a, 0);
    if !star.supercritical {
        return Ok(PsiResult {
            value: 0.0,
            best_transitions: 0,
            l_max_used: 0,
            stabilized: true,
            supercritical: false,
            rho_star0: 0.0,
        });
    }
    let r0 = star.rho.coords()[0];
    let ev = PathEvaluator::new(sigma, a, opts.denominator, opts.grid_nodes);
    // Refined values per transition count (index n−1), cached across cap
    // doublings. Beyond the first few counts, refinement stops once three
    // consecutive refined values agree to 1e-6 — past that point the grid
    // values (which are themselves feasible path costs) carry the tail. The
    // decision for count n depends only on counts ≤ n, so a larger cap can
    // only extend, never change, the evaluated sequence, keeping the
    // reported value monotone non-increasing in the cap.
    let mut refined: Vec<Option<f64>> = Vec::new();
    let mut cap = opts.l_max.max(1);
    let mut prev: Option<f64> = None;
    let rounds = opts.max_doublings.max(1);
    for round in 0..=rounds {
        let dps = ev.dp_values(r0, 0.0, cap);
        refined.resize(cap.max(refined.len()), None);
        let mut best = f64::INFINITY;
        let mut best_n = 0usize;
        let mut last_refined: Option<f64> = None;
        let mut stable_run = 0usize;
        for (k, (dv, dpath)) in dps.iter().enumerate() {
            let n = k + 1;
            let mut v = *dv;
            let cached = refined[k];
            if let Some(rv) = cached {
                v = rv;
            } else if dv.is_finite() && (n <= 8 || stable_run < 3) {
                let mut path = dpath.clone();
                let rv = ev.refine(&mut path);
                refined[k] = Some(rv);
                v = rv;
            }
            if let Some(rv) = refined[k] {
                if let Some(lr) = last_refined {
                    if (lr - rv).abs() < 1e-6 {
                        stable_run += 1;
                    } else {
                        stable_run = 0;
                    }
                }
                last_refined = Some(rv);
            }
            if v < best {
                best = v;
                best_n = n;
            }
        }
        if let Some(pv) = prev {
            let scale = best.abs().max(1e-9);
            if pv == best || (pv - best).abs() <= opts.rel_tol * scale {
                return Ok(PsiResult {
                    value: best,
                    best_transitions: best_n,
                    l_max_used: cap,
                    stabilized: true,
                    supercritical: true,
                    rho_star0: r0,
                });
            }
        }
        if round == rounds {
            return Err(Error::NoConvergence(format!(
                "master path cost not stabilized within relative {} with the \
                 round cap doubled to {cap} (last values {:?} -> {best})",
                opts.rel_tol, prev
            )));
        }
        prev = Some(best);
        cap *= 2;
    }
    unreachable!("the doubling loop always returns");
}

/// Critical scaling exponent from a survival exponent: `ln κ / ψ`, or +∞
/// when ψ = 0 (no quasispecies regime at any scaling).
pub fn alpha_from_psi(psi_value: f64, kappa: u32) -> f64 {
    assert!(kappa >= 2, "at least two letters are required");
    if psi_value <= 0.0 {
        f64::INFINITY
    } else {
        (kappa as f64).ln() / psi_value
    }
}

/// Critical curve value at `(a, σ, κ)`: evaluates ψ(a) and divides it into
/// `ln κ`. Population scalings `α` above the returned value support a
/// quasispecies; below it the master class washes out.
pub fn critical_alpha(a: f64, sigma: f64, kappa: u32, opts: &PsiOptions) -> Result<f64> {
    let p = psi(a, sigma, opts)?;
    Ok(alpha_from_psi(p.value, kappa))
}
