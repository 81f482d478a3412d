//! Monotone one-step coupling of the class-count chain, and the lower/upper
//! bounding processes built from it.
//!
//! One generation is driven by an m x (ell+1) matrix of uniforms: child i
//! picks its parent class by inverting the selection CDF at r(i,0), then its
//! own class by inverting the parent row's mutation CDF at r(i,1). Classes
//! are scanned in ascending order, so pointwise-dominating CDFs yield
//! pointwise-lower class picks; this makes the map monotone for the prefix
//! order. Columns 2..=ell of the matrix are deliberately drawn and unused,
//! preserving the one-uniform-per-class-per-child shape at the cost of some
//! entropy.
//!
//! The bounding maps freeze everything outside the tracked classes 0..=K:
//! the lower map dumps untracked mass into the worst class ell, the upper map
//! into the best untracked class K+1. Both re-enter through fixed extremal
//! states when the master class empties or refills, which makes their
//! excursions away from the master region memoryless.

use crate::error::{Error, Result};
use crate::occupancy::{invert_cdf, leq, lumped_fitness, LumpedKernel, Occupancy};
use rand::Rng;

/// The uniforms driving one coupled generation: row per child, column per
/// class; only columns 0 and 1 are consumed by the two-stage inversion.
#[derive(Clone, Debug)]
pub struct UniformMatrix {
    m: usize,
    width: usize,
    data: Vec<f64>,
}

impl UniformMatrix {
    pub fn draw<R: Rng + ?Sized>(m: usize, ell: usize, rng: &mut R) -> Self {
        let width = ell + 1;
        let data = (0..m * width).map(|_| rng.random()).collect();
        UniformMatrix { m, width, data }
    }

    pub fn from_fill(m: usize, ell: usize, value: f64) -> Self {
        UniformMatrix {
            m,
            width: ell + 1,
            data: vec![value; m * (ell + 1)],
        }
    }

    #[inline]
    pub fn get(&self, child: usize, col: usize) -> f64 {
        self.data[child * self.width + col]
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// Apply one coupled generation to `o` under the uniforms `r`. Distributed
/// exactly as the class-count chain's one-step law when `r` is i.i.d uniform.
pub fn coupling_map(kern: &LumpedKernel, o: &Occupancy, r: &UniformMatrix) -> Occupancy {
    let ell = o.ell();
    let m = o.m();
    debug_assert_eq!(r.m(), m);
    // Selection CDF over parent classes, ascending.
    let total = (kern.sigma - 1.0) * o[0] as f64 + m as f64;
    let mut sel_cdf = Vec::with_capacity(ell + 1);
    let mut acc = 0.0;
    for k in 0..=ell {
        acc += o[k] as f64 * lumped_fitness(kern.sigma, k) / total;
        sel_cdf.push(acc);
    }
    let mut counts = vec![0usize; ell + 1];
    for child in 0..m {
        let parent = invert_cdf(&sel_cdf, r.get(child, 0));
        let class = invert_cdf(kern.mutation_row_cdf(parent), r.get(child, 1));
        counts[class] += 1;
    }
    Occupancy::new(counts).expect("non-empty by construction")
}

/// Projection that keeps classes 0..=K and moves all other mass to the worst
/// class ell. Lower extreme of the information kept by the reduced state.
pub fn project_lower(o: &Occupancy, cap_k: usize) -> Occupancy {
    let ell = o.ell();
    let mut counts = vec![0usize; ell + 1];
    counts[..=cap_k].copy_from_slice(&o.counts()[..=cap_k]);
    counts[ell] = o.m() - o.prefix(cap_k);
    Occupancy::new(counts).expect("non-empty by construction")
}

/// Projection that keeps classes 0..=K and moves all other mass to the best
/// untracked class K+1. Upper extreme counterpart of [`project_lower`].
pub fn project_upper(o: &Occupancy, cap_k: usize) -> Occupancy {
    let ell = o.ell();
    let mut counts = vec![0usize; ell + 1];
    counts[..=cap_k].copy_from_slice(&o.counts()[..=cap_k]);
    counts[cap_k + 1] = o.m() - o.prefix(cap_k);
    Occupancy::new(counts).expect("non-empty by construction")
}

/// Which side a bounding process errs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// The four-case bounding dynamics around the coupled map.
#[derive(Clone, Debug)]
pub struct BoundingMaps<'a> {
    kern: &'a LumpedKernel,
    cap_k: usize,
}

impl<'a> BoundingMaps<'a> {
    pub fn new(kern: &'a LumpedKernel, cap_k: usize) -> Result<Self> {
        if cap_k + 1 > kern.ell {
            return Err(Error::InvalidParams(format!(
                "bounding processes need K + 1 <= ell, got K = {cap_k}, ell = {}",
                kern.ell
            )));
        }
        Ok(BoundingMaps { kern, cap_k })
    }

    /// State entered when the master class refills, per side: the minimal
    /// (lower) or maximal (upper) state with one or all members at the peak.
    pub fn enter_state(&self, side: Side) -> Occupancy {
        let (ell, m) = (self.kern.ell, self.kern.m);
        match side {
            Side::Lower => {
                let mut counts = vec![0usize; ell + 1];
                counts[0] = 1;
                counts[ell] = m - 1;
                Occupancy::new(counts).expect("non-empty")
            }
            Side::Upper => Occupancy::all_at_class(ell, m, 0),
        }
    }

    /// State entered when the master class empties, per side: everything in
    /// the worst class (lower) or the best non-master class (upper).
    pub fn exit_state(&self, side: Side) -> Occupancy {
        let (ell, m) = (self.kern.ell, self.kern.m);
        match side {
            Side::Lower => Occupancy::all_at_class(ell, m, ell),
            Side::Upper => Occupancy::all_at_class(ell, m, 1),
        }
    }

    fn project(&self, side: Side, o: &Occupancy) -> Occupancy {
        match side {
            Side::Lower => project_lower(o, self.cap_k),
            Side::Upper => project_upper(o, self.cap_k),
        }
    }

    /// One step of the bounding process on the chosen side.
    pub fn step(&self, side: Side, o: &Occupancy, r: &UniformMatrix) -> Occupancy {
        let in_master_region = o[0] >= 1;
        if in_master_region {
            let next = coupling_map(self.kern, &self.project(side, o), r);
            if next[0] >= 1 {
                self.project(side, &next)
            } else {
                self.exit_state(side)
            }
        } else {
            let next = coupling_map(self.kern, o, r);
            if next[0] >= 1 {
                self.enter_state(side)
            } else {
                next
            }
        }
    }
}

/// Trajectories of the coupled triple driven by shared uniforms.
#[derive(Clone, Debug)]
pub struct CoupledTrajectories {
    pub lower: Vec<Occupancy>,
    pub middle: Vec<Occupancy>,
    pub upper: Vec<Occupancy>,
}

/// Drive the lower bound, the plain chain, and the upper bound with the same
/// uniforms from a common start, checking the order sandwich at every step.
pub fn run_coupled<R: Rng + ?Sized>(
    kern: &LumpedKernel,
    cap_k: usize,
    start: &Occupancy,
    steps: usize,
    rng: &mut R,
) -> Result<CoupledTrajectories> {
    let maps = BoundingMaps::new(kern, cap_k)?;
    let mut lower = vec![start.clone()];
    let mut middle = vec![start.clone()];
    let mut upper = vec![start.clone()];
    for n in 0..steps {
        let r = UniformMatrix::draw(start.m(), kern.ell, rng);
        let lo = maps.step(Side::Lower, &lower[n], &r);
        let mid = coupling_map(kern, &middle[n], &r);
        let up = maps.step(Side::Upper, &upper[n], &r);
        if !leq(&lo, &mid) || !leq(&mid, &up) {
            return Err(Error::CouplingViolation(format!(
                "sandwich broken at step {}: lower {:?}, middle {:?}, upper {:?}",
                n + 1,
                lo.counts(),
                mid.counts(),
                up.counts()
            )));
        }
        lower.push(lo);
        middle.push(mid);
        upper.push(up);
    }
    Ok(CoupledTrajectories {
        lower,
        middle,
        upper,
    })
}

/// Random occupancy: m members thrown independently and uniformly into the
/// ell+1 classes. Test and experiment helper.
pub fn random_occupancy<R: Rng + ?Sized>(ell: usize, m: usize, rng: &mut R) -> Occupancy {
    let mut counts = vec![0usize; ell + 1];
    for _ in 0..m {
        counts[rng.random_range(0..=ell)] += 1;
    }
    Occupancy::new(counts).expect("non-empty")
}

/// Random state dominating `o`: applies `moves` random promotions of one
/// member to a strictly better class. Every promotion raises prefix sums, so
/// the result always dominates the input.
pub fn random_dominating<R: Rng + ?Sized>(o: &Occupancy, moves: usize, rng: &mut R) -> Occupancy {
    let mut counts = o.counts().to_vec();
    for _ in 0..moves {
        let occupied: Vec<usize> = (1..counts.len()).filter(|&k| counts[k] > 0).collect();
        if occupied.is_empty() {
            break;
        }
        let from = occupied[rng.random_range(0..occupied.len())];
        let to = rng.random_range(0..from);
        counts[from] -= 1;
        counts[to] += 1;
    }
    Occupancy::new(counts).expect("non-empty")
}
