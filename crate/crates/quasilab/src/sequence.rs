//! Sequence-level population process.
//!
//! Sequences over alphabets of up to four letters pack four letters per byte;
//! larger alphabets use one byte per letter. The all-zero sequence is the
//! fitness peak. One generation resamples every child independently: pick a
//! parent with probability proportional to fitness, then mutate each locus
//! independently (probability q, uniform over the other kappa - 1 letters).
//! Per-locus draws are kept deliberately (no binomial shortcut): downstream
//! couplings rely on the child-by-child, locus-by-locus draw discipline.

use crate::error::{Error, Result};
use crate::occupancy::Occupancy;
use crate::params::ModelParams;
use crate::tol::WF_ENUM_MAX_STATES;
use rand::Rng;

/// One sequence of fixed length over letters 0..kappa.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sequence {
    ell: usize,
    kappa: u32,
    /// Packed 2-bit groups when kappa <= 4, one byte per letter otherwise.
    /// Unused padding bits are kept zero so whole-byte scans stay valid.
    data: Vec<u8>,
}

impl Sequence {
    fn packed(kappa: u32) -> bool {
        kappa <= 4
    }

    /// The all-zero sequence (the fitness peak).
    pub fn master(ell: usize, kappa: u32) -> Self {
        let len = if Self::packed(kappa) {
            ell.div_ceil(4)
        } else {
            ell
        };
        Sequence {
            ell,
            kappa,
            data: vec![0; len],
        }
    }

    pub fn from_letters(letters: &[u8], kappa: u32) -> Result<Self> {
        let mut s = Self::master(letters.len(), kappa);
        for (i, &v) in letters.iter().enumerate() {
            if v as u32 >= kappa {
                return Err(Error::InvalidParams(format!(
                    "letter {v} out of range for kappa = {kappa}"
                )));
            }
            s.set_letter(i, v);
        }
        Ok(s)
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    #[inline]
    pub fn letter(&self, i: usize) -> u8 {
        debug_assert!(i < self.ell);
        if Self::packed(self.kappa) {
            (self.data[i >> 2] >> ((i & 3) * 2)) & 0b11
        } else {
            self.data[i]
        }
    }

    #[inline]
    pub fn set_letter(&mut self, i: usize, v: u8) {
        debug_assert!(i < self.ell && (v as u32) < self.kappa);
        if Self::packed(self.kappa) {
            let shift = (i & 3) * 2;
            let byte = &mut self.data[i >> 2];
            *byte = (*byte & !(0b11 << shift)) | (v << shift);
        } else {
            self.data[i] = v;
        }
    }

    pub fn letters(&self) -> Vec<u8> {
        (0..self.ell).map(|i| self.letter(i)).collect()
    }

    pub fn is_master(&self) -> bool {
        self.data.iter().all(|&b| b == 0)
    }

    /// Hamming distance to the all-zero sequence: the number of non-zero
    /// letters, counted bytewise.
    pub fn class(&self) -> usize {
        if Self::packed(self.kappa) {
            self.data
                .iter()
                .map(|&b| ((b | (b >> 1)) & 0b0101_0101).count_ones() as usize)
                .sum()
        } else {
            self.data.iter().filter(|&&b| b != 0).count()
        }
    }

    /// Hamming distance between two sequences of the same shape.
    pub fn hamming(&self, other: &Sequence) -> usize {
        debug_assert_eq!(self.ell, other.ell);
        debug_assert_eq!(self.kappa, other.kappa);
        if Self::packed(self.kappa) {
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| {
                    let x = a ^ b;
                    (((x | (x >> 1)) & 0b0101_0101).count_ones()) as usize
                })
                .sum()
        } else {
            self.data
                .iter()
                .zip(&other.data)
                .filter(|(a, b)| a != b)
                .count()
        }
    }
}

/// Sharp-peak fitness: sigma on the all-zero sequence, 1 elsewhere.
pub fn fitness(x: &Sequence, sigma: f64) -> f64 {
    if x.is_master() {
        sigma
    } else {
        1.0
    }
}

/// An ordered m-tuple of sequences with a common shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Population {
    members: Vec<Sequence>,
}

impl Population {
    pub fn new(members: Vec<Sequence>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidParams("population must be non-empty".into()))?;
        let (ell, kappa) = (first.ell(), first.kappa());
        if members.iter().any(|s| s.ell() != ell || s.kappa() != kappa) {
            return Err(Error::InvalidParams(
                "population members must share length and alphabet".into(),
            ));
        }
        Ok(Population { members })
    }

    pub fn all_master(params: &ModelParams) -> Self {
        Population {
            members: vec![Sequence::master(params.ell, params.kappa); params.m],
        }
    }

    pub fn members(&self) -> &[Sequence] {
        &self.members
    }

    pub fn m(&self) -> usize {
        self.members.len()
    }

    /// Count members per Hamming class.
    pub fn class_counts(&self) -> Occupancy {
        let ell = self.members[0].ell();
        let mut counts = vec![0usize; ell + 1];
        for s in &self.members {
            counts[s.class()] += 1;
        }
        Occupancy::new(counts).expect("class layout is non-empty by construction")
    }
}

/// Probability that fitness-proportional selection picks the sequence `u`
/// from population `x`: fitness(u) times multiplicity, over total fitness.
pub fn selection_probability(x: &Population, u: &Sequence, sigma: f64) -> f64 {
    let total: f64 = x.members().iter().map(|s| fitness(s, sigma)).sum();
    let count = x.members().iter().filter(|s| *s == u).count();
    fitness(u, sigma) * count as f64 / total
}

/// Probability that per-locus mutation turns `u` into `v`: each locus keeps
/// its letter with probability 1 - q or moves to a specific other letter with
/// probability q / (kappa - 1).
pub fn mutation_probability(u: &Sequence, v: &Sequence, q: f64, kappa: u32) -> f64 {
    debug_assert_eq!(u.ell(), v.ell());
    let d = u.hamming(v);
    let stay = (1.0 - q).powi((u.ell() - d) as i32);
    let move_each = (q / (kappa as f64 - 1.0)).powi(d as i32);
    stay * move_each
}

/// One generation: every child independently picks a fitness-weighted parent
/// and mutates locus by locus. Draw order per child: one uniform for the
/// parent group, one index draw within the group, then per-locus uniforms in
/// ascending position with a letter draw on each mutation.
pub fn wf_step<R: Rng + ?Sized>(x: &Population, params: &ModelParams, rng: &mut R) -> Population {
    let m = x.m();
    let masters: Vec<usize> = (0..m).filter(|&i| x.members()[i].is_master()).collect();
    let others: Vec<usize> = (0..m).filter(|&i| !x.members()[i].is_master()).collect();
    let n0 = masters.len() as f64;
    let total = params.sigma * n0 + others.len() as f64;

    let mut children = Vec::with_capacity(m);
    for _ in 0..m {
        let u: f64 = rng.random();
        let parent_idx = if u * total < params.sigma * n0 {
            masters[rng.random_range(0..masters.len())]
        } else {
            others[rng.random_range(0..others.len())]
        };
        let mut child = x.members()[parent_idx].clone();
        for locus in 0..params.ell {
            let hit: f64 = rng.random();
            if hit < params.q {
                let delta = rng.random_range(1..params.kappa) as u8;
                let old = child.letter(locus) as u32;
                child.set_letter(locus, ((old + delta as u32) % params.kappa) as u8);
            }
        }
        children.push(child);
    }
    Population { members: children }
}

/// Every sequence of the given shape, ordered by base-kappa code (letter 0 is
/// the least significant digit).
pub fn all_sequences(ell: usize, kappa: u32) -> Vec<Sequence> {
    let count = (kappa as u64).pow(ell as u32);
    (0..count)
        .map(|code| sequence_from_code(code, ell, kappa))
        .collect()
}

fn sequence_from_code(mut code: u64, ell: usize, kappa: u32) -> Sequence {
    let mut s = Sequence::master(ell, kappa);
    for i in 0..ell {
        s.set_letter(i, (code % kappa as u64) as u8);
        code /= kappa as u64;
    }
    s
}

/// Exact one-step law from population `x`: enumerates every successor
/// m-tuple. Guarded: kappa^(ell*m) successor tuples must stay within the
/// documented budget.
pub fn enumerate_transition_row(
    x: &Population,
    params: &ModelParams,
) -> Result<Vec<(Population, f64)>> {
    let states = (params.kappa as f64).powi((params.ell * params.m) as i32);
    if !(states <= WF_ENUM_MAX_STATES) {
        return Err(Error::InstanceTooLarge(format!(
            "kappa^(ell*m) = {states:.3e} successor tuples exceeds {WF_ENUM_MAX_STATES:.0e}"
        )));
    }
    let seqs = all_sequences(params.ell, params.kappa);
    // Children are i.i.d.: one child-level law, then a product over the tuple.
    let child_law: Vec<f64> = seqs
        .iter()
        .map(|v| {
            x.members()
                .iter()
                .map(|u| {
                    // Sum over parents weighted by selection; group equal
                    // parents through their multiplicity implicitly by
                    // iterating members directly.
                    let sel = fitness(u, params.sigma)
                        / x.members()
                            .iter()
                            .map(|s| fitness(s, params.sigma))
                            .sum::<f64>();
                    sel * mutation_probability(u, v, params.q, params.kappa)
                })
                .sum()
        })
        .collect();

    let n_seq = seqs.len();
    let mut rows = Vec::new();
    let mut tuple = vec![0usize; params.m];
    loop {
        let prob: f64 = tuple.iter().map(|&i| child_law[i]).product();
        let members: Vec<Sequence> = tuple.iter().map(|&i| seqs[i].clone()).collect();
        rows.push((Population { members }, prob));
        // Odometer over base-n_seq tuples.
        let mut pos = 0;
        loop {
            if pos == params.m {
                return Ok(rows);
            }
            tuple[pos] += 1;
            if tuple[pos] < n_seq {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
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
    fn letters_round_trip_in_both_layouts() {
        for kappa in [2u32, 4, 5, 17] {
            let letters: Vec<u8> = (0..13).map(|i| (i * 7 % kappa as usize) as u8).collect();
            let s = Sequence::from_letters(&letters, kappa).unwrap();
            assert_eq!(s.letters(), letters, "kappa = {kappa}");
            let expect = letters.iter().filter(|&&v| v != 0).count();
            assert_eq!(s.class(), expect);
        }
    }

    #[test]
    fn hamming_agrees_with_a_letterwise_loop() {
        let mut rng = replica_rng(7, 0);
        for kappa in [2u32, 4, 9] {
            for _ in 0..50 {
                let a: Vec<u8> = (0..11).map(|_| rng.random_range(0..kappa) as u8).collect();
                let b: Vec<u8> = (0..11).map(|_| rng.random_range(0..kappa) as u8).collect();
                let sa = Sequence::from_letters(&a, kappa).unwrap();
                let sb = Sequence::from_letters(&b, kappa).unwrap();
                let naive = a.iter().zip(&b).filter(|(x, y)| x != y).count();
                assert_eq!(sa.hamming(&sb), naive);
            }
        }
    }

    #[test]
    fn fitness_peaks_only_at_master() {
        let m = Sequence::master(4, 2);
        let mut other = m.clone();
        other.set_letter(2, 1);
        assert_eq!(fitness(&m, 3.5), 3.5);
        assert_eq!(fitness(&other, 3.5), 1.0);
    }

    #[test]
    fn selection_favors_the_peak_two_to_one() {
        // x = (master, u): the master is picked with probability
        // sigma / (sigma + 1) = 2/3 at sigma = 2.
        let master = Sequence::master(3, 2);
        let u = Sequence::from_letters(&[1, 0, 0], 2).unwrap();
        let x = Population::new(vec![master.clone(), u.clone()]).unwrap();
        assert!((selection_probability(&x, &master, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((selection_probability(&x, &u, 2.0) - 1.0 / 3.0).abs() < 1e-15);
        // Multiplicity counts: (master, u, u) at sigma = 2 gives u mass 2/4.
        let x3 = Population::new(vec![master.clone(), u.clone(), u.clone()]).unwrap();
        assert!((selection_probability(&x3, &u, 2.0) - 0.5).abs() < 1e-15);
        let absent = Sequence::from_letters(&[0, 1, 0], 2).unwrap();
        assert_eq!(selection_probability(&x, &absent, 2.0), 0.0);
    }

    #[test]
    fn mutation_probability_examples() {
        let q = 0.1;
        let u = Sequence::master(3, 4);
        assert!((mutation_probability(&u, &u, q, 4) - 0.9f64.powi(3)).abs() < 1e-15);
        let v = Sequence::from_letters(&[0, 2, 0], 4).unwrap();
        let expect = 0.9 * 0.9 * (q / 3.0);
        assert!((mutation_probability(&u, &v, q, 4) - expect).abs() < 1e-15);
    }

    #[test]
    fn mutation_rows_are_stochastic() {
        for (ell, kappa, q) in [(3usize, 2u32, 0.3), (2, 3, 0.25), (3, 4, 0.6)] {
            for u in all_sequences(ell, kappa) {
                let sum: f64 = all_sequences(ell, kappa)
                    .iter()
                    .map(|v| mutation_probability(&u, v, q, kappa))
                    .sum();
                assert!((sum - 1.0).abs() < 1e-12, "ell={ell} kappa={kappa}: {sum}");
            }
        }
    }

    #[test]
    fn class_counts_ignore_member_order() {
        let a = Sequence::from_letters(&[1, 0, 0], 2).unwrap();
        let b = Sequence::from_letters(&[1, 1, 0], 2).unwrap();
        let c = Sequence::master(3, 2);
        let p1 = Population::new(vec![a.clone(), b.clone(), c.clone()]).unwrap();
        let p2 = Population::new(vec![c, b, a]).unwrap();
        assert_eq!(p1.class_counts(), p2.class_counts());
        assert_eq!(p1.class_counts().counts(), &[1, 1, 1, 0]);
    }

    #[test]
    fn single_member_single_locus_keeps_master_at_rate_one_minus_q() {
        let p = params(1, 1, 2, 0.2, 2.0);
        let x = Population::all_master(&p);
        let n = 100_000;
        let mut rng = replica_rng(11, 0);
        let mut kept = 0usize;
        for _ in 0..n {
            if wf_step(&x, &p, &mut rng).members()[0].is_master() {
                kept += 1;
            }
        }
        let obs = kept as f64 / n as f64;
        let se = (0.8 * 0.2 / n as f64).sqrt();
        assert!((obs - 0.8).abs() < 5.0 * se, "observed {obs}");
    }

    #[test]
    fn wf_step_is_reproducible_for_a_fixed_seed() {
        let p = params(6, 10, 4, 0.1, 2.0);
        let mut x = Population::all_master(&p);
        let mut rng1 = replica_rng(99, 3);
        let mut rng2 = replica_rng(99, 3);
        for _ in 0..20 {
            let y1 = wf_step(&x, &p, &mut rng1);
            let y2 = wf_step(&x, &p, &mut rng2);
            assert_eq!(y1, y2);
            x = y1;
        }
    }

    #[test]
    fn exact_row_for_the_smallest_instance() {
        let p = params(1, 1, 2, 0.2, 2.0);
        let x = Population::all_master(&p);
        let row = enumerate_transition_row(&x, &p).unwrap();
        assert_eq!(row.len(), 2);
        let total: f64 = row.iter().map(|(_, pr)| pr).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for (y, pr) in &row {
            let expect = if y.members()[0].is_master() { 0.8 } else { 0.2 };
            assert!((pr - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_rows_sum_to_one() {
        let p = params(2, 2, 2, 0.1, 2.0);
        let u = Sequence::from_letters(&[1, 0], 2).unwrap();
        let x = Population::new(vec![Sequence::master(2, 2), u]).unwrap();
        let row = enumerate_transition_row(&x, &p).unwrap();
        assert_eq!(row.len(), 16);
        let total: f64 = row.iter().map(|(_, pr)| pr).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_matches_exact_row_on_a_small_instance() {
        let p = params(2, 2, 2, 0.15, 2.0);
        let u = Sequence::from_letters(&[1, 1], 2).unwrap();
        let x = Population::new(vec![Sequence::master(2, 2), u]).unwrap();
        let row = enumerate_transition_row(&x, &p).unwrap();
        let n = 150_000;
        let mut rng = replica_rng(5, 0);
        let mut freq: std::collections::HashMap<Vec<Vec<u8>>, f64> = Default::default();
        for _ in 0..n {
            let y = wf_step(&x, &p, &mut rng);
            let key: Vec<Vec<u8>> = y.members().iter().map(|s| s.letters()).collect();
            *freq.entry(key).or_default() += 1.0 / n as f64;
        }
        for (y, exact) in &row {
            let key: Vec<Vec<u8>> = y.members().iter().map(|s| s.letters()).collect();
            let obs = freq.get(&key).copied().unwrap_or(0.0);
            let se = (exact * (1.0 - exact) / n as f64).sqrt();
            assert!(
                (obs - exact).abs() <= 5.0 * se + 1e-9,
                "tuple {key:?}: obs {obs} exact {exact}"
            );
        }
    }

    #[test]
    fn enumeration_guard_trips() {
        let p = params(10, 10, 2, 0.1, 2.0);
        let x = Population::all_master(&p);
        assert!(matches!(
            enumerate_transition_row(&x, &p),
            Err(crate::error::Error::InstanceTooLarge(_))
        ));
    }
}
