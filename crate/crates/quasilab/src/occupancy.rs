//! Occupancy view of the population: counts per Hamming-distance class.
//!
//! A population of m sequences of length ell collapses to the vector
//! `o = (o(0), ..., o(ell))` of class counts, where class k holds the
//! sequences at Hamming distance k from the all-zero sequence. Because
//! fitness depends only on the class (sigma for class 0, 1 otherwise) and the
//! per-child mutation law depends only on the parent's class, the class-count
//! process is itself a Markov chain; this module holds its kernels, its
//! sampler, and the coordinatewise-prefix partial order used by the coupled
//! bounds.

use crate::error::{Error, Result};
use crate::numeric::{ln_binomial, ln_factorial};
use crate::params::ModelParams;
use rand::Rng;

/// Class counts of one population; entries sum to the population size.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Occupancy {
    counts: Vec<usize>,
}

impl Occupancy {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParams(
                "occupancy needs at least one class".into(),
            ));
        }
        Ok(Occupancy { counts })
    }

    /// Population with every member in the given class.
    pub fn all_at_class(ell: usize, m: usize, class: usize) -> Self {
        let mut counts = vec![0; ell + 1];
        counts[class] = m;
        Occupancy { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn ell(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn m(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of members in the tracked classes 0..=k.
    pub fn prefix(&self, k: usize) -> usize {
        self.counts[..=k].iter().sum()
    }
}

impl std::ops::Index<usize> for Occupancy {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.counts[i]
    }
}

/// Prefix order: `a <= b` when every prefix sum of `a` is dominated by the
/// matching prefix sum of `b`; larger means more mass close to class 0.
pub fn leq(a: &Occupancy, b: &Occupancy) -> bool {
    debug_assert_eq!(a.ell(), b.ell());
    debug_assert_eq!(a.m(), b.m());
    let (mut sa, mut sb) = (0usize, 0usize);
    for k in 0..=a.ell() {
        sa += a[k];
        sb += b[k];
        if sa > sb {
            return false;
        }
    }
    true
}

/// Class-dependent fitness: the advantage applies to class 0 only.
pub fn lumped_fitness(sigma: f64, class: usize) -> f64 {
    if class == 0 {
        sigma
    } else {
        1.0
    }
}

/// Single entry of the class-to-class mutation kernel: the probability that a
/// parent at distance b produces a child at distance c, summing over k fresh
/// mutations among the ell-b matching loci and l reversions among the b
/// mismatched loci with k - l = c - b.
pub fn lumped_mutation(ell: usize, kappa: u32, q: f64, b: usize, c: usize) -> f64 {
    assert!(b <= ell && c <= ell, "classes must lie in 0..=ell");
    let back = q / (kappa as f64 - 1.0);
    let (ln_q, ln_1q) = (q.ln(), (1.0 - q).ln());
    let (ln_bk, ln_1bk) = (back.ln(), (1.0 - back).ln());
    let up = ell - b;
    let mut total = 0.0;
    for l in 0..=b {
        let k_signed = c as i64 - b as i64 + l as i64;
        if k_signed < 0 || k_signed > up as i64 {
            continue;
        }
        let k = k_signed as u64;
        let mut ln_term = ln_binomial(up as u64, k) + ln_binomial(b as u64, l as u64);
        // q = 0 never reaches here (validated away), but guard the k = 0 and
        // l = 0 products against 0 * -inf anyway.
        if k > 0 {
            ln_term += k as f64 * ln_q;
        }
        ln_term += (up as u64 - k) as f64 * ln_1q;
        if l > 0 {
            ln_term += l as f64 * ln_bk;
        }
        ln_term += (b - l) as f64 * ln_1bk;
        total += ln_term.exp();
    }
    total
}

/// One full row of the class-to-class mutation kernel, computed by an
/// independent route: the child class is b + X - Y with X the fresh-mutation
/// count and Y the reversion count, so the row is the convolution of two
/// binomial laws shifted to b.
pub fn lumped_mutation_row(ell: usize, kappa: u32, q: f64, b: usize) -> Vec<f64> {
    let up = binomial_pmf(ell - b, q);
    let down = binomial_pmf(b, q / (kappa as f64 - 1.0));
    let mut row = vec![0.0; ell + 1];
    for (k, &pk) in up.iter().enumerate() {
        if pk == 0.0 {
            continue;
        }
        for (l, &pl) in down.iter().enumerate() {
            let c = b + k - l;
            row[c] += pk * pl;
        }
    }
    row
}

/// Binomial pmf over 0..=n, each entry evaluated in log space so no
/// intermediate under- or overflows for n in the thousands.
fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    if n == 0 {
        return vec![1.0];
    }
    if p == 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        return v;
    }
    let (ln_p, ln_1p) = (p.ln(), (1.0 - p).ln());
    (0..=n as u64)
        .map(|k| {
            let mut ln = ln_binomial(n as u64, k) + (n as u64 - k) as f64 * ln_1p;
            if k > 0 {
                ln += k as f64 * ln_p;
            }
            ln.exp()
        })
        .collect()
}

/// Guard for precomputing the full (ell+1)^2 kernel.
pub const KERNEL_ELL_MAX: usize = 4096;

/// Precomputed mutation kernel plus the pieces every chain step needs.
#[derive(Clone, Debug)]
pub struct LumpedKernel {
    pub ell: usize,
    pub m: usize,
    pub sigma: f64,
    rows: Vec<Vec<f64>>,
    row_cdfs: Vec<Vec<f64>>,
}

impl LumpedKernel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if params.ell > KERNEL_ELL_MAX {
            return Err(Error::InstanceTooLarge(format!(
                "full kernel precompute holds (ell+1)^2 entries; ell = {} exceeds {KERNEL_ELL_MAX}",
                params.ell
            )));
        }
        let rows: Vec<Vec<f64>> = (0..=params.ell)
            .map(|b| lumped_mutation_row(params.ell, params.kappa, params.q, b))
            .collect();
        let row_cdfs = rows
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(LumpedKernel {
            ell: params.ell,
            m: params.m,
            sigma: params.sigma,
            rows,
            row_cdfs,
        })
    }

    pub fn mutation_row(&self, b: usize) -> &[f64] {
        &self.rows[b]
    }

    pub fn mutation_row_cdf(&self, b: usize) -> &[f64] {
        &self.row_cdfs[b]
    }

    /// Law of a single child's class given the parent occupancy: pick the
    /// parent class with probability proportional to count times fitness,
    /// then mutate. Computed once per step.
    pub fn child_class_law(&self, o: &Occupancy) -> Vec<f64> {
        debug_assert_eq!(o.ell(), self.ell);
        let total = (self.sigma - 1.0) * o[0] as f64 + o.m() as f64;
        let mut law = vec![0.0; self.ell + 1];
        for k in 0..=self.ell {
            if o[k] == 0 {
                continue;
            }
            let w = o[k] as f64 * lumped_fitness(self.sigma, k) / total;
            for (h, &mh) in self.rows[k].iter().enumerate() {
                law[h] += w * mh;
            }
        }
        law
    }

    /// Transition probability between occupancies: the children are
    /// independent draws from the child law, so the next occupancy is
    /// multinomial.
    pub fn transition_prob(&self, o: &Occupancy, next: &Occupancy) -> f64 {
        debug_assert_eq!(next.m(), o.m());
        let law = self.child_class_law(o);
        let mut ln_p = ln_factorial(o.m() as u64);
        for (h, &cnt) in next.counts().iter().enumerate() {
            if cnt == 0 {
                continue;
            }
            if law[h] == 0.0 {
                return 0.0;
            }
            ln_p += cnt as f64 * law[h].ln() - ln_factorial(cnt as u64);
        }
        ln_p.exp()
    }

    /// Sample one generation: m independent children from the child law.
    /// Consumes exactly m uniforms, in child order.
    pub fn step<R: Rng + ?Sized>(&self, o: &Occupancy, rng: &mut R) -> Occupancy {
        let law = self.child_class_law(o);
        let mut counts = vec![0usize; self.ell + 1];
        let m = o.m();
        for _ in 0..m {
            let u: f64 = rng.random();
            counts[invert_cdf_linear(&law, u)] += 1;
        }
        Occupancy { counts }
    }
}

/// Smallest index whose cumulative mass strictly exceeds u; when u lands at
/// or beyond the total mass (possible only through float dust), the last
/// positive entry wins.
fn invert_cdf_linear(pmf: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in pmf.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Smallest index whose cumulative value (given as a running CDF) strictly
/// exceeds u, skipping zero-mass indices; used by the coupling construction,
/// which must pick the least class consistent with the uniform.
pub fn invert_cdf(cdf: &[f64], u: f64) -> usize {
    let mut prev = 0.0;
    let mut last_positive = 0;
    for (i, &c) in cdf.iter().enumerate() {
        if c > prev {
            last_positive = i;
            if u < c {
                return i;
            }
            prev = c;
        }
    }
    last_positive
}

/// All occupancies of m individuals over classes 0..=ell, in lexicographic
/// order. Intended for tiny instances (tests and exact checks).
pub fn enumerate_occupancies(ell: usize, m: usize) -> Vec<Occupancy> {
    let mut out = Vec::new();
    let mut current = vec![0usize; ell + 1];
    fn rec(out: &mut Vec<Occupancy>, current: &mut Vec<usize>, class: usize, left: usize) {
        if class == current.len() - 1 {
            current[class] = left;
            out.push(Occupancy {
                counts: current.clone(),
            });
            return;
        }
        for take in (0..=left).rev() {
            current[class] = take;
            rec(out, current, class + 1, left - take);
        }
        current[class] = 0;
    }
    rec(&mut out, &mut current, 0, m);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::replica_rng;

    fn params(ell: usize, m: usize, kappa: u32, q: f64, sigma: f64) -> ModelParams {
        ModelParams::new(
            ell,
            m,
            kappa,
            q,
            sigma,
            1.min(ell),
            q * ell as f64,
            m as f64 / ell as f64,
        )
        .unwrap()
    }

    #[test]
    fn fitness_is_flat_off_the_peak() {
        assert_eq!(lumped_fitness(2.5, 0), 2.5);
        assert_eq!(lumped_fitness(2.5, 1), 1.0);
        assert_eq!(lumped_fitness(2.5, 7), 1.0);
    }

    #[test]
    fn no_mutation_keeps_class_with_full_identity_mass() {
        let v = lumped_mutation(6, 2, 0.1, 0, 0);
        assert!((v - 0.9f64.powi(6)).abs() < 1e-14);
    }

    #[test]
    fn rows_are_stochastic_for_desk_sizes() {
        for &(ell, kappa, q) in &[(5usize, 2u32, 0.1), (12, 4, 0.2), (30, 3, 0.05)] {
            for b in 0..=ell {
                let sum: f64 = (0..=ell)
                    .map(|c| lumped_mutation(ell, kappa, q, b, c))
                    .sum();
                assert!(
                    (sum - 1.0).abs() < crate::tol::ROW_SUM_TOL,
                    "ell={ell} kappa={kappa} q={q} b={b}: row sums to {sum}"
                );
            }
        }
    }

    #[test]
    fn entrywise_and_convolution_routes_agree() {
        for &(ell, kappa, q) in &[(9usize, 2u32, 0.23), (17, 5, 0.11), (40, 3, 0.02)] {
            for b in 0..=ell {
                let row = lumped_mutation_row(ell, kappa, q, b);
                for c in 0..=ell {
                    let e = lumped_mutation(ell, kappa, q, b, c);
                    assert!(
                        (row[c] - e).abs() < 1e-12,
                        "ell={ell} b={b} c={c}: {} vs {e}",
                        row[c]
                    );
                }
            }
        }
    }

    #[test]
    fn long_sequences_approach_the_poisson_limit() {
        // ell*q = 1: one expected mutation; c = 1 from class 0 approaches e^-1.
        let v = lumped_mutation(1000, 2, 0.001, 0, 1);
        assert!((v - (-1.0f64).exp()).abs() < 2e-3, "got {v}");
    }

    #[test]
    fn row_monotone_in_parent_class_under_the_q_invariant() {
        // Stochastic monotonicity of rows holds exactly when q <= 1 - 1/kappa;
        // it is the structural fact the coupling leans on.
        for &(ell, kappa, q) in &[(8usize, 2u32, 0.4), (8, 4, 0.7), (11, 3, 0.55)] {
            assert!(q < 1.0 - 1.0 / kappa as f64);
            for b in 0..ell {
                let lo = lumped_mutation_row(ell, kappa, q, b);
                let hi = lumped_mutation_row(ell, kappa, q, b + 1);
                let (mut cl, mut ch) = (0.0, 0.0);
                for c in 0..=ell {
                    cl += lo[c];
                    ch += hi[c];
                    assert!(
                        cl >= ch - 1e-12,
                        "ell={ell} kappa={kappa} q={q}: CDF crossing at b={b} c={c}"
                    );
                }
            }
        }
    }

    #[test]
    fn child_law_is_a_distribution_and_weights_the_peak() {
        let p = params(4, 6, 2, 0.1, 3.0);
        let kern = LumpedKernel::new(&p).unwrap();
        let o = Occupancy::new(vec![2, 1, 3, 0, 0]).unwrap();
        let law = kern.child_class_law(&o);
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Selection weight of class 0: sigma*2 / (sigma*2 + 4) = 0.6.
        let identity = kern.mutation_row(0)[0];
        let from1 = kern.mutation_row(1)[0];
        let from2 = kern.mutation_row(2)[0];
        let expect = 0.6 * identity + 0.1 * from1 + 0.3 * from2;
        assert!((law[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn transition_rows_sum_to_one_over_all_successors() {
        let p = params(2, 3, 2, 0.2, 2.0);
        let kern = LumpedKernel::new(&p).unwrap();
        for o in enumerate_occupancies(2, 3) {
            let total: f64 = enumerate_occupancies(2, 3)
                .iter()
                .map(|o2| kern.transition_prob(&o, o2))
                .sum();
            assert!(
                (total - 1.0).abs() < crate::tol::PROB_TOL,
                "row {:?} sums to {total}",
                o.counts()
            );
        }
    }

    #[test]
    fn sampler_matches_exact_row() {
        let p = params(2, 3, 2, 0.15, 2.0);
        let kern = LumpedKernel::new(&p).unwrap();
        let o = Occupancy::new(vec![1, 1, 1]).unwrap();
        let n = 200_000;
        let mut rng = replica_rng(2024, 0);
        let mut freq: std::collections::HashMap<Vec<usize>, f64> = Default::default();
        for _ in 0..n {
            let nxt = kern.step(&o, &mut rng);
            *freq.entry(nxt.counts().to_vec()).or_default() += 1.0 / n as f64;
        }
        for o2 in enumerate_occupancies(2, 3) {
            let exact = kern.transition_prob(&o, &o2);
            let obs = freq.get(o2.counts()).copied().unwrap_or(0.0);
            let se = (exact * (1.0 - exact) / n as f64).sqrt();
            assert!(
                (obs - exact).abs() <= 5.0 * se + 1e-9,
                "state {:?}: obs {obs} exact {exact}",
                o2.counts()
            );
        }
    }

    #[test]
    fn prefix_order_extremes_and_a_counterexample() {
        let bottom = Occupancy::all_at_class(3, 5, 3);
        let top = Occupancy::all_at_class(3, 5, 0);
        for o in enumerate_occupancies(3, 5) {
            assert!(leq(&bottom, &o));
            assert!(leq(&o, &top));
        }
        let a = Occupancy::new(vec![1, 0, 4, 0]).unwrap();
        let b = Occupancy::new(vec![0, 3, 2, 0]).unwrap();
        assert!(!leq(&a, &b) && !leq(&b, &a), "incomparable pair");
    }

    #[test]
    fn order_is_antisymmetric_on_the_enumeration() {
        let all = enumerate_occupancies(3, 4);
        for x in &all {
            for y in &all {
                if leq(x, y) && leq(y, x) {
                    assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn inverse_cdf_picks_least_class_with_mass() {
        // Mass only on classes 1 and 3: u = 0 must give class 1, not class 0.
        let cdf = [0.0, 0.4, 0.4, 1.0];
        assert_eq!(invert_cdf(&cdf, 0.0), 1);
        assert_eq!(invert_cdf(&cdf, 0.39), 1);
        assert_eq!(invert_cdf(&cdf, 0.4), 3);
        assert_eq!(invert_cdf(&cdf, 0.9999999), 3);
    }

    #[test]
    fn kernel_guard_rejects_oversized_precompute() {
        let p = ModelParams::new(8000, 10, 2, 1e-5, 2.0, 1, 0.08, 10.0 / 8000.0).unwrap();
        assert!(matches!(
            LumpedKernel::new(&p),
            Err(Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn enumeration_counts_compositions() {
        // C(m + ell, ell) compositions of m into ell+1 ordered parts.
        assert_eq!(enumerate_occupancies(2, 2).len(), 6);
        assert_eq!(enumerate_occupancies(3, 5).len(), 56);
    }
}
