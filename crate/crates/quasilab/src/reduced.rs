//! The reduced chain on truncated class counts.
//!
//! The state is the vector of occupancy counts of the tracked classes
//! 0..=K, with the rest of the population implicitly parked in a designated
//! class theta: the worst class ell for the lower variant, the best untracked
//! class K+1 for the upper variant. While the master class is populated the
//! chain evolves by selection and mutation exactly like the bounding
//! occupancy process; the first step that empties the master class is
//! collapsed into a single exit state, and the exit state re-enters through
//! a fixed entry state one step later. States with an empty master class
//! other than the exit state are unreachable and are completed as self-loops
//! to keep the matrix stochastic.
//!
//! Exact transition probabilities are evaluated by the full sum over
//! selection counts `s` and mutation-flow matrices `b`; the enumeration
//! bounds are built into the loops (zero-weight cells are never given
//! positive counts), and a size guard keeps the term count manageable.

use crate::error::{Error, Result};
use crate::numeric::ln_multinomial;
use crate::occupancy::lumped_mutation_row;
use crate::params::ModelParams;
use crate::tol::{HITTING_CAP_DEFAULT, Z_ENUM_MAX_K, Z_ENUM_MAX_M};
use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Which class absorbs the untracked population.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theta {
    /// Untracked mass parked in the worst class ell.
    Lower,
    /// Untracked mass parked in the best untracked class K+1.
    Upper,
}

impl Theta {
    pub fn as_str(self) -> &'static str {
        match self {
            Theta::Lower => "lower",
            Theta::Upper => "upper",
        }
    }
}

/// One sample of a hitting time, with the censoring cap recorded.
#[derive(Clone, Copy, Debug)]
pub struct HittingSample {
    pub steps: u64,
    pub censored: bool,
}

/// The reduced chain: tracked-class counts with implicit theta remainder.
#[derive(Clone, Debug)]
pub struct ReducedChain {
    theta: Theta,
    cap_k: usize,
    m: usize,
    sigma: f64,
    /// Mutation rows of the tracked classes, truncated to tracked targets.
    mh_tracked: Vec<Vec<f64>>,
    /// Per tracked class, the mass leaking to untracked targets.
    mh_tracked_rem: Vec<f64>,
    /// Mutation row of the theta class, truncated to tracked targets.
    mh_theta: Vec<f64>,
    mh_theta_rem: f64,
}

impl ReducedChain {
    pub fn new(params: &ModelParams, theta: Theta) -> Result<Self> {
        params.validate()?;
        let cap_k = params.cap_k;
        if cap_k + 1 > params.ell {
            return Err(Error::InvalidParams(format!(
                "reduced chain needs K + 1 <= ell, got K = {cap_k}, ell = {}",
                params.ell
            )));
        }
        let truncate = |row: Vec<f64>| -> (Vec<f64>, f64) {
            let head: Vec<f64> = row[..=cap_k].to_vec();
            let rem = 1.0 - head.iter().sum::<f64>();
            (head, rem.max(0.0))
        };
        let mut mh_tracked = Vec::with_capacity(cap_k + 1);
        let mut mh_tracked_rem = Vec::with_capacity(cap_k + 1);
        for b in 0..=cap_k {
            let (head, rem) = truncate(lumped_mutation_row(params.ell, params.kappa, params.q, b));
            mh_tracked.push(head);
            mh_tracked_rem.push(rem);
        }
        let theta_class = match theta {
            Theta::Lower => params.ell,
            Theta::Upper => cap_k + 1,
        };
        let (mh_theta, mh_theta_rem) = truncate(lumped_mutation_row(
            params.ell,
            params.kappa,
            params.q,
            theta_class,
        ));
        Ok(ReducedChain {
            theta,
            cap_k,
            m: params.m,
            sigma: params.sigma,
            mh_tracked,
            mh_tracked_rem,
            mh_theta,
            mh_theta_rem,
        })
    }

    pub fn theta(&self) -> Theta {
        self.theta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cap_k(&self) -> usize {
        self.cap_k
    }

    /// The state reached when the master class empties.
    pub fn z_exit(&self) -> Vec<usize> {
        let mut z = vec![0usize; self.cap_k + 1];
        if self.theta == Theta::Upper && self.cap_k >= 1 {
            z[1] = self.m;
        }
        z
    }

    /// The state through which the chain re-enters after an exit.
    pub fn z_enter(&self) -> Vec<usize> {
        let mut z = vec![0usize; self.cap_k + 1];
        z[0] = match self.theta {
            Theta::Lower => 1,
            Theta::Upper => self.m,
        };
        z
    }

    /// Tag for output: which special state this is, if any.
    pub fn tag_of(&self, z: &[usize]) -> &'static str {
        if z == self.z_exit().as_slice() {
            "exit"
        } else if z == self.z_enter().as_slice() {
            "enter"
        } else {
            ""
        }
    }

    pub fn validate_state(&self, z: &[usize]) -> Result<()> {
        if z.len() != self.cap_k + 1 {
            return Err(Error::InvalidParams(format!(
                "state length {} does not match K + 1 = {}",
                z.len(),
                self.cap_k + 1
            )));
        }
        let total: usize = z.iter().sum();
        if total > self.m {
            return Err(Error::InvalidParams(format!(
                "state total {total} exceeds population size {}",
                self.m
            )));
        }
        Ok(())
    }

    /// Selection weights over the K+2 cells (tracked classes, then theta).
    fn selection_weights(&self, z: &[usize]) -> (Vec<f64>, f64) {
        let total: usize = z.iter().sum();
        let mut w = Vec::with_capacity(self.cap_k + 2);
        w.push(self.sigma * z[0] as f64);
        for &zi in &z[1..] {
            w.push(zi as f64);
        }
        w.push((self.m - total) as f64);
        let norm = (self.sigma - 1.0) * z[0] as f64 + self.m as f64;
        (w, norm)
    }

    /// Per-child law over tracked target classes (remainder implicit), valid
    /// for states with a populated master class. Each child independently
    /// picks a parent cell by selection weight and then a target class by
    /// the parent's mutation row, so children are i.i.d. with this law.
    pub fn child_law(&self, z: &[usize]) -> Vec<f64> {
        let (w, norm) = self.selection_weights(z);
        let mut law = vec![0.0; self.cap_k + 1];
        for i in 0..=self.cap_k {
            let sel = w[i] / norm;
            if sel == 0.0 {
                continue;
            }
            for (j, lj) in law.iter_mut().enumerate() {
                *lj += sel * self.mh_tracked[i][j];
            }
        }
        let sel_theta = w[self.cap_k + 1] / norm;
        if sel_theta > 0.0 {
            for (j, lj) in law.iter_mut().enumerate() {
                *lj += sel_theta * self.mh_theta[j];
            }
        }
        law
    }

    /// One step of the chain by the mechanistic route: a selection split
    /// over parent cells, then one mutation split per parent cell.
    pub fn step<R: Rng + ?Sized>(&self, z: &[usize], rng: &mut R) -> Vec<usize> {
        if z == self.z_exit().as_slice() {
            return self.z_enter();
        }
        if z[0] == 0 {
            // Unreachable in normal operation; completed as a self-loop.
            return z.to_vec();
        }
        let (w, _) = self.selection_weights(z);
        let selected = multinomial_counts(self.m, &w, rng);
        let mut out = vec![0usize; self.cap_k + 1];
        for i in 0..=self.cap_k {
            if selected[i] == 0 {
                continue;
            }
            let mut probs = self.mh_tracked[i].clone();
            probs.push(self.mh_tracked_rem[i]);
            let flows = multinomial_counts(selected[i], &probs, rng);
            for (j, oj) in out.iter_mut().enumerate() {
                *oj += flows[j];
            }
        }
        let theta_children = selected[self.cap_k + 1];
        if theta_children > 0 {
            let mut probs = self.mh_theta.clone();
            probs.push(self.mh_theta_rem);
            let flows = multinomial_counts(theta_children, &probs, rng);
            for (j, oj) in out.iter_mut().enumerate() {
                *oj += flows[j];
            }
        }
        if out[0] == 0 {
            self.z_exit()
        } else {
            out
        }
    }

    /// Exact transition probability between two states. Enumeration is
    /// guarded; larger instances must fall back to Monte Carlo via [`step`].
    pub fn transition_prob(&self, z: &[usize], z2: &[usize]) -> Result<f64> {
        if self.m > Z_ENUM_MAX_M || self.cap_k > Z_ENUM_MAX_K {
            return Err(Error::InstanceTooLarge(format!(
                "exact reduced-chain rows need m <= {Z_ENUM_MAX_M} and K <= {Z_ENUM_MAX_K}, \
                 got m = {}, K = {}",
                self.m, self.cap_k
            )));
        }
        self.validate_state(z)?;
        self.validate_state(z2)?;
        let exit = self.z_exit();
        if z == exit.as_slice() {
            return Ok(if z2 == self.z_enter().as_slice() {
                1.0
            } else {
                0.0
            });
        }
        if z[0] == 0 {
            // Unreachable states: diagonal completion.
            return Ok(if z2 == z { 1.0 } else { 0.0 });
        }
        if z2[0] == 0 {
            if z2 == exit.as_slice() {
                // All mass of master-emptying targets is collapsed here.
                let mut total = 0.0;
                for v in enumerate_class_vectors(self.m, self.cap_k) {
                    if v[0] == 0 {
                        total += self.raw_prob(z, &v);
                    }
                }
                return Ok(total);
            }
            return Ok(0.0);
        }
        Ok(self.raw_prob(z, z2))
    }

    /// The literal sum over selection counts s and mutation flows b of the
    /// product of the three multinomial factors (selection, per-class
    /// mutation, theta-class mutation), before any exit collapsing.
    fn raw_prob(&self, z: &[usize], z2: &[usize]) -> f64 {
        let kk = self.cap_k;
        let m = self.m;
        let (w, norm) = self.selection_weights(z);
        let ln_norm = norm.ln();
        let mut total = 0.0;

        // Enumerate selection counts for the tracked cells; cells with zero
        // selection weight stay at zero by construction, and an empty theta
        // cell forces the tracked counts to exhaust the population.
        let mut s = vec![0usize; kk + 1];
        enumerate_selection(&mut s, 0, m, &w, &mut |s: &[usize]| {
            let s_total: usize = s.iter().sum();
            let theta_sel = m - s_total;
            // Selection factor.
            let mut ln_sel = ln_multinomial(m as u64, &to_u64(s)) - m as f64 * ln_norm;
            for i in 0..=kk {
                if s[i] > 0 {
                    ln_sel += s[i] as f64 * w[i].ln();
                }
            }
            if theta_sel > 0 {
                ln_sel += theta_sel as f64 * w[kk + 1].ln();
            }

            // Enumerate mutation flows b: b[i][j] children move from tracked
            // class i to tracked class j, bounded by row budgets s_i and
            // column budgets z2_j.
            let mut b = vec![vec![0usize; kk + 1]; kk + 1];
            let mut col_used = vec![0usize; kk + 1];
            enumerate_flows(
                &mut b,
                &mut col_used,
                0,
                0,
                s,
                z2,
                &mut |b: &[Vec<usize>], col_used: &[usize]| {
                    let b_total: usize = col_used.iter().sum();
                    let z2_total: usize = z2.iter().sum();
                    // Children of the theta cell must cover what the tracked
                    // flows leave of z2, with a non-negative remainder
                    // staying in untracked classes.
                    if theta_sel + b_total < z2_total {
                        return;
                    }
                    let theta_stay = theta_sel + b_total - z2_total;

                    let mut ln_term = ln_sel;
                    for i in 0..=kk {
                        let row_total: usize = b[i].iter().sum();
                        ln_term += ln_multinomial(s[i] as u64, &to_u64(&b[i]));
                        for j in 0..=kk {
                            if b[i][j] > 0 {
                                ln_term += b[i][j] as f64 * self.mh_tracked[i][j].ln();
                            }
                        }
                        let stay = s[i] - row_total;
                        if stay > 0 {
                            ln_term += stay as f64 * self.mh_tracked_rem[i].ln();
                        }
                    }
                    let theta_flows: Vec<usize> = (0..=kk).map(|j| z2[j] - col_used[j]).collect();
                    ln_term += ln_multinomial(theta_sel as u64, &to_u64(&theta_flows));
                    for j in 0..=kk {
                        if theta_flows[j] > 0 {
                            ln_term += theta_flows[j] as f64 * self.mh_theta[j].ln();
                        }
                    }
                    if theta_stay > 0 {
                        ln_term += theta_stay as f64 * self.mh_theta_rem.ln();
                    }
                    total += ln_term.exp();
                },
            );
        });
        total
    }

    /// Time until the master class first empties, starting from the entry
    /// state; censored at `cap` steps.
    pub fn master_loss_time<R: Rng + ?Sized>(&self, rng: &mut R, cap: u64) -> HittingSample {
        let cap = if cap == 0 { HITTING_CAP_DEFAULT } else { cap };
        let mut z = self.z_enter();
        for n in 1..=cap {
            z = self.step(&z, rng);
            if z[0] == 0 {
                return HittingSample {
                    steps: n,
                    censored: false,
                };
            }
        }
        HittingSample {
            steps: cap,
            censored: true,
        }
    }
}

fn to_u64(v: &[usize]) -> Vec<u64> {
    v.iter().map(|&x| x as u64).collect()
}

/// Recursive enumeration of tracked selection counts with zero-weight cells
/// pinned to zero and the theta cell absorbing the remainder; when the theta
/// cell has zero weight the tracked counts must sum to the full population.
fn enumerate_selection(
    s: &mut Vec<usize>,
    cell: usize,
    budget: usize,
    w: &[f64],
    visit: &mut impl FnMut(&[usize]),
) {
    let tracked = s.len();
    if cell == tracked {
        if w[tracked] == 0.0 && budget > 0 {
            return;
        }
        visit(s);
        return;
    }
    let max_here = if w[cell] == 0.0 { 0 } else { budget };
    for count in 0..=max_here {
        s[cell] = count;
        enumerate_selection(s, cell + 1, budget - count, w, visit);
    }
    s[cell] = 0;
}

/// Recursive enumeration of mutation-flow matrices within row budgets s and
/// column budgets z2, visiting each complete matrix.
fn enumerate_flows(
    b: &mut Vec<Vec<usize>>,
    col_used: &mut Vec<usize>,
    row: usize,
    col: usize,
    s: &[usize],
    z2: &[usize],
    visit: &mut impl FnMut(&[Vec<usize>], &[usize]),
) {
    let dim = s.len();
    if row == dim {
        visit(b, col_used);
        return;
    }
    let (next_row, next_col) = if col + 1 == dim {
        (row + 1, 0)
    } else {
        (row, col + 1)
    };
    let row_used: usize = b[row].iter().sum();
    let max_here = (s[row] - row_used).min(z2[col] - col_used[col]);
    for count in 0..=max_here {
        b[row][col] = count;
        col_used[col] += count;
        enumerate_flows(b, col_used, next_row, next_col, s, z2, visit);
        col_used[col] -= count;
    }
    b[row][col] = 0;
}

/// All state vectors of length K+1 with total at most m, lexicographic.
pub fn enumerate_class_vectors(m: usize, cap_k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut z = vec![0usize; cap_k + 1];
    fn rec(z: &mut Vec<usize>, idx: usize, budget: usize, out: &mut Vec<Vec<usize>>) {
        if idx == z.len() {
            out.push(z.clone());
            return;
        }
        for count in 0..=budget {
            z[idx] = count;
            rec(z, idx + 1, budget - count, out);
        }
        z[idx] = 0;
    }
    rec(&mut z, 0, m, &mut out);
    out
}

/// Split `n` items over weighted cells by successive binomial draws; the
/// weights need not be normalized. Exact multinomial sampling.
pub fn multinomial_counts<R: Rng + ?Sized>(n: usize, weights: &[f64], rng: &mut R) -> Vec<usize> {
    let mut out = vec![0usize; weights.len()];
    let mut remaining = n as u64;
    let mut weight_left: f64 = weights.iter().sum();
    for (i, &wi) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == weights.len() {
            out[i] = remaining as usize;
            break;
        }
        if weight_left <= 0.0 {
            break;
        }
        let p = (wi / weight_left).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, p)
            .expect("probability in range by clamping")
            .sample(rng);
        out[i] = draw as usize;
        remaining -= draw;
        weight_left -= wi;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ln_binomial as lnb;
    use crate::stream::replica_rng;

    fn chain(ell: usize, m: usize, q: f64, cap_k: usize, theta: Theta) -> ReducedChain {
        let p = ModelParams::new(
            ell,
            m,
            2,
            q,
            2.0,
            cap_k,
            q * ell as f64,
            m as f64 / ell as f64,
        )
        .unwrap();
        ReducedChain::new(&p, theta).unwrap()
    }

    #[test]
    fn special_states_match_their_definitions() {
        let lo = chain(8, 6, 0.1, 1, Theta::Lower);
        assert_eq!(lo.z_exit(), vec![0, 0]);
        assert_eq!(lo.z_enter(), vec![1, 0]);
        let up = chain(8, 6, 0.1, 1, Theta::Upper);
        assert_eq!(up.z_exit(), vec![0, 6]);
        assert_eq!(up.z_enter(), vec![6, 0]);
        // With a single tracked class both exits are the empty state.
        let up0 = chain(8, 6, 0.1, 0, Theta::Upper);
        assert_eq!(up0.z_exit(), vec![0]);
        assert_eq!(up0.z_enter(), vec![6]);
    }

    #[test]
    fn exit_state_reenters_with_probability_one() {
        for theta in [Theta::Lower, Theta::Upper] {
            let ch = chain(8, 5, 0.1, 1, theta);
            let exit = ch.z_exit();
            let enter = ch.z_enter();
            assert_eq!(ch.transition_prob(&exit, &enter).unwrap(), 1.0);
            let mut rng = replica_rng(7, 0);
            for _ in 0..50 {
                assert_eq!(ch.step(&exit, &mut rng), enter);
            }
        }
    }

    #[test]
    fn rows_are_stochastic_at_small_scale() {
        for theta in [Theta::Lower, Theta::Upper] {
            let ch = chain(8, 4, 0.12, 1, theta);
            for z in enumerate_class_vectors(4, 1) {
                let mut row_sum = 0.0;
                for z2 in enumerate_class_vectors(4, 1) {
                    row_sum += ch.transition_prob(&z, &z2).unwrap();
                }
                assert!(
                    (row_sum - 1.0).abs() < 1e-10,
                    "row {z:?} sums to {row_sum} for {theta:?}"
                );
            }
        }
    }

    #[test]
    fn single_class_rows_match_a_binomial_formula() {
        // With one tracked class the chain lives on {0,...,m} and each child
        // is master with probability combining selection and mutation
        // survival; an independent binomial evaluation must agree.
        for theta in [Theta::Lower, Theta::Upper] {
            for m in [1usize, 5] {
                let ch = chain(10, m, 0.08, 0, theta);
                for n in 1..=m {
                    let z = vec![n];
                    let sel_master = 2.0 * n as f64 / ((2.0 - 1.0) * n as f64 + m as f64);
                    let sel_theta = (m - n) as f64 / ((2.0 - 1.0) * n as f64 + m as f64);
                    let p0 = sel_master * ch.mh_tracked[0][0] + sel_theta * ch.mh_theta[0];
                    for j in 0..=m {
                        let expected = (lnb(m as u64, j as u64)
                            + j as f64 * p0.ln()
                            + (m - j) as f64 * (1.0 - p0).ln())
                        .exp();
                        let got = ch.transition_prob(&z, &[j]).unwrap();
                        assert!(
                            (got - expected).abs() < 1e-12,
                            "m={m} n={n} j={j} {theta:?}: got {got}, binomial {expected}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn flow_sum_agrees_with_iid_child_marginal() {
        // Selection-then-mutation splits superpose: each child is i.i.d.
        // categorical under child_law, so the full flow enumeration must
        // collapse to a plain multinomial in the child law.
        let ch = chain(8, 4, 0.15, 1, Theta::Upper);
        let z = vec![2usize, 1];
        let law = ch.child_law(&z);
        for z2 in enumerate_class_vectors(4, 1) {
            if z2[0] == 0 {
                continue;
            }
            let mut ln_p = ln_multinomial(4, &[z2[0] as u64, z2[1] as u64]);
            ln_p += z2[0] as f64 * law[0].ln() + z2[1] as f64 * law[1].ln();
            let rest = 4 - z2[0] - z2[1];
            if rest > 0 {
                ln_p += rest as f64 * (1.0 - law[0] - law[1]).ln();
            }
            let expected = ln_p.exp();
            let got = ch.transition_prob(&z, &z2).unwrap();
            assert!(
                (got - expected).abs() < 1e-12,
                "z2 {z2:?}: enumerated {got}, marginal {expected}"
            );
        }
    }

    #[test]
    fn sampler_frequencies_match_exact_rows() {
        let ch = chain(8, 4, 0.12, 1, Theta::Lower);
        let z = vec![2usize, 1];
        let n = 200_000usize;
        let mut rng = replica_rng(13, 0);
        let states = enumerate_class_vectors(4, 1);
        let mut freq = vec![0.0f64; states.len()];
        for _ in 0..n {
            let nxt = ch.step(&z, &mut rng);
            let idx = states.iter().position(|s| s == &nxt).unwrap();
            freq[idx] += 1.0 / n as f64;
        }
        for (idx, z2) in states.iter().enumerate() {
            let exact = ch.transition_prob(&z, z2).unwrap();
            let se = (exact * (1.0 - exact) / n as f64).sqrt();
            assert!(
                (freq[idx] - exact).abs() <= 5.0 * se + 1e-9,
                "state {z2:?}: observed {}, exact {exact}",
                freq[idx]
            );
        }
    }

    #[test]
    fn master_class_persists_when_mutation_is_negligible() {
        // Mutation turned effectively off: the master class is replenished
        // by its selection advantage and is never lost over the horizon.
        let ch = chain(20, 50, 1e-12, 1, Theta::Upper);
        let mut rng = replica_rng(99, 0);
        let mut z = ch.z_enter();
        for _ in 0..10_000 {
            z = ch.step(&z, &mut rng);
            assert!(z[0] >= 1, "master class lost: {z:?}");
        }
    }

    #[test]
    fn unreachable_masterless_states_self_loop() {
        let ch = chain(8, 6, 0.1, 1, Theta::Upper);
        let z = vec![0usize, 3];
        assert_eq!(ch.transition_prob(&z, &z).unwrap(), 1.0);
        assert_eq!(ch.transition_prob(&z, &ch.z_enter()).unwrap(), 0.0);
        let mut rng = replica_rng(5, 0);
        assert_eq!(ch.step(&z, &mut rng), z);
    }

    #[test]
    fn state_enumeration_has_the_right_cardinality() {
        // Compositions of at most m into K+1 ordered parts.
        assert_eq!(enumerate_class_vectors(6, 1).len(), 28);
        assert_eq!(enumerate_class_vectors(3, 2).len(), 20);
    }

    #[test]
    fn enumeration_guard_trips_on_large_instances() {
        let big = chain(30, 20, 0.05, 1, Theta::Lower);
        let z = big.z_enter();
        assert!(matches!(
            big.transition_prob(&z, &z),
            Err(Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn master_loss_time_is_quick_in_a_hostile_regime() {
        // Heavy mutation makes the master class short-lived.
        let ch = chain(6, 6, 0.2, 1, Theta::Lower);
        let mut rng = replica_rng(21, 0);
        for _ in 0..20 {
            let sample = ch.master_loss_time(&mut rng, 100_000);
            assert!(!sample.censored);
            assert!(sample.steps >= 1);
        }
    }

    #[test]
    fn multinomial_split_conserves_and_matches_expectation() {
        let mut rng = replica_rng(3, 1);
        let weights = [0.5, 0.3, 0.2];
        let n = 2000usize;
        let mut totals = [0usize; 3];
        let reps = 500;
        for _ in 0..reps {
            let counts = multinomial_counts(n, &weights, &mut rng);
            assert_eq!(counts.iter().sum::<usize>(), n);
            for (t, c) in totals.iter_mut().zip(&counts) {
                *t += c;
            }
        }
        for (i, &wi) in weights.iter().enumerate() {
            let mean = totals[i] as f64 / reps as f64;
            let expect = n as f64 * wi;
            let se = (n as f64 * wi * (1.0 - wi) / reps as f64).sqrt();
            assert!(
                (mean - expect).abs() < 5.0 * se,
                "cell {i}: mean {mean}, expected {expect}"
            );
        }
    }
}
