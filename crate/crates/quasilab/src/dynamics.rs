//! The infinite-population limit of the tracked-class dynamics.
//!
//! One generation acts on a point of the truncated simplex in two stages:
//! selection tilts mass toward the master class, then mutation spreads each
//! class downward along a Poisson flow with mean `a`. The composed map has
//! at most two fixed points: the origin, and — when the master class can
//! outrun mutation, i.e. `sigma * exp(-a) > 1` — the quasispecies profile
//! whose coordinates have a closed series form. Orbits converge to the
//! profile from any start with a positive master coordinate, and to the
//! origin otherwise.

use crate::error::{Error, Result};
use crate::numeric::{l1_distance, ln_factorial};
use crate::params::SimplexPoint;

/// The limiting class profile together with the regime it belongs to.
#[derive(Clone, Debug)]
pub struct QuasispeciesDistribution {
    pub rho: SimplexPoint,
    /// True when `sigma * exp(-a) > 1`, the only regime with a non-trivial
    /// profile.
    pub supercritical: bool,
}

/// Selection stage: the master class is boosted by `sigma`, everything is
/// renormalized by the mean fitness.
pub fn selection_map(r: &SimplexPoint, sigma: f64) -> SimplexPoint {
    let denom = (sigma - 1.0) * r[0] + 1.0;
    let mut out = Vec::with_capacity(r.dim());
    out.push(sigma * r[0] / denom);
    for k in 1..r.dim() {
        out.push(r[k] / denom);
    }
    SimplexPoint::new(out).expect("selection keeps the simplex")
}

/// Poisson weight `exp(-a) a^d / d!` evaluated stably.
fn poisson_weight(a: f64, d: usize) -> f64 {
    (-a + d as f64 * a.ln() - ln_factorial(d as u64)).exp()
}

/// One full generation: selection followed by the downward Poisson mutation
/// flow. Class k collects the classes i <= k at Poisson weight for the gap.
pub fn limit_map(r: &SimplexPoint, sigma: f64, a: f64) -> SimplexPoint {
    let f = selection_map(r, sigma);
    let weights: Vec<f64> = (0..r.dim()).map(|d| poisson_weight(a, d)).collect();
    let mut out = vec![0.0; r.dim()];
    for (k, ok) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..=k {
            acc += f[i] * weights[k - i];
        }
        *ok = acc;
    }
    SimplexPoint::new(out).expect("generation map keeps the simplex")
}

/// The same generation map with the selection denominator factored out once;
/// used as an algebraic cross-check of [`limit_map`].
pub fn limit_map_closed(r: &SimplexPoint, sigma: f64, a: f64) -> SimplexPoint {
    let denom = (sigma - 1.0) * r[0] + 1.0;
    let mut out = vec![0.0; r.dim()];
    for (k, ok) in out.iter_mut().enumerate() {
        let mut acc = poisson_weight(a, k) * sigma * r[0];
        for i in 1..=k {
            acc += poisson_weight(a, k - i) * r[i];
        }
        *ok = acc / denom;
    }
    SimplexPoint::new(out).expect("generation map keeps the simplex")
}

/// The master-class coordinate of the generation map when all other tracked
/// classes are empty: a one-dimensional increasing concave map.
pub fn scalar_limit_map(r: f64, sigma: f64, a: f64) -> f64 {
    (-a).exp() * sigma * r / ((sigma - 1.0) * r + 1.0)
}

/// Log of the power-weighted geometric series `sum_{i>=1} i^k sigma^(-i)`,
/// summed in log space so large `k` cannot overflow. Truncation: stop after
/// the term has stayed below 1e-18 of the partial sum for 5 consecutive
/// terms, which certifies the tail by the eventual geometric decay.
fn ln_power_series(sigma: f64, k: usize) -> f64 {
    let ln_sigma = sigma.ln();
    let mut max_ln = f64::NEG_INFINITY;
    let mut acc = 0.0f64;
    let mut quiet = 0u32;
    let mut i = 1u64;
    loop {
        let ln_term = k as f64 * (i as f64).ln() - i as f64 * ln_sigma;
        if ln_term > max_ln {
            acc = acc * (max_ln - ln_term).exp() + 1.0;
            max_ln = ln_term;
        } else {
            acc += (ln_term - max_ln).exp();
        }
        let ln_partial = max_ln + acc.ln();
        if ln_term < ln_partial + (1e-18f64).ln() {
            quiet += 1;
            if quiet >= 5 {
                return ln_partial;
            }
        } else {
            quiet = 0;
        }
        i += 1;
    }
}

/// The quasispecies profile over classes 0..=cap_k, or the zero vector in
/// the subcritical regime.
pub fn rho_star(sigma: f64, a: f64, cap_k: usize) -> QuasispeciesDistribution {
    let margin = sigma * (-a).exp() - 1.0;
    if margin <= 0.0 {
        return QuasispeciesDistribution {
            rho: SimplexPoint::zero(cap_k + 1),
            supercritical: false,
        };
    }
    let mut rho = Vec::with_capacity(cap_k + 1);
    for k in 0..=cap_k {
        let ln_coeff = k as f64 * a.ln() - ln_factorial(k as u64);
        rho.push(margin * (ln_coeff + ln_power_series(sigma, k)).exp());
    }
    QuasispeciesDistribution {
        rho: SimplexPoint::new(rho).expect("profile lies in the simplex"),
        supercritical: true,
    }
}

/// Outcome of the fixed-point iteration: the reached point, the step count,
/// the predicted limit for the start's regime, and the distance to it.
#[derive(Clone, Debug)]
pub struct FixedPointRun {
    pub limit: SimplexPoint,
    pub iterations: usize,
    pub predicted: SimplexPoint,
    pub deviation: f64,
}

/// Iterate the generation map until successive iterates differ by less than
/// `tol` in L1. The predicted limit is the quasispecies profile when the
/// start has a positive master coordinate in the supercritical regime, and
/// the origin otherwise.
pub fn iterate_to_fixed_point(
    z0: &SimplexPoint,
    sigma: f64,
    a: f64,
    tol: f64,
    max_iters: usize,
) -> Result<FixedPointRun> {
    let profile = rho_star(sigma, a, z0.dim() - 1);
    let predicted = if profile.supercritical && z0[0] > 0.0 {
        profile.rho
    } else {
        SimplexPoint::zero(z0.dim())
    };
    let mut current = z0.clone();
    for n in 1..=max_iters {
        let next = limit_map(&current, sigma, a);
        let change = l1_distance(next.coords(), current.coords());
        current = next;
        if change < tol {
            let deviation = l1_distance(current.coords(), predicted.coords());
            return Ok(FixedPointRun {
                limit: current,
                iterations: n,
                predicted,
                deviation,
            });
        }
    }
    let hint = if sigma * (-a).exp() - 1.0 < 1e-3 && sigma * (-a).exp() > 1.0 {
        " (the regime is nearly critical, where convergence slows; raise the iteration budget)"
    } else {
        ""
    };
    Err(Error::NoConvergence(format!(
        "no fixed point within {max_iters} iterations{hint}; last iterate {:?}",
        current.coords()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::replica_rng;
    use rand::Rng;

    fn point(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn selection_fixes_masterless_points_and_the_pure_master() {
        let r = point(&[0.0, 0.3, 0.1]);
        assert_eq!(selection_map(&r, 2.0).coords(), r.coords());
        let master = point(&[1.0, 0.0]);
        assert_eq!(selection_map(&master, 3.0).coords(), &[1.0, 0.0]);
    }

    #[test]
    fn selection_matches_direct_arithmetic() {
        let f = selection_map(&point(&[0.5, 0.2]), 2.0);
        assert!((f[0] - 2.0 / 3.0).abs() < 5e-5);
        assert!((f[1] - 0.2 / 1.5).abs() < 5e-5);
    }

    #[test]
    fn series_and_closed_forms_of_the_generation_map_agree() {
        let mut rng = replica_rng(8, 0);
        for _ in 0..200 {
            let raw: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 0.2).collect();
            let r = point(&raw);
            for (sigma, a) in [(2.0, 0.1), (4.0, 0.5), (1.5, 1.2)] {
                let series = limit_map(&r, sigma, a);
                let closed = limit_map_closed(&r, sigma, a);
                assert!(l1_distance(series.coords(), closed.coords()) < 1e-14);
            }
        }
    }

    #[test]
    fn generation_map_fixes_the_origin_and_matches_a_spot_value() {
        let zero = SimplexPoint::zero(3);
        assert_eq!(limit_map(&zero, 2.0, 0.1).coords(), &[0.0, 0.0, 0.0]);
        // Master coordinate of one generation from (0.5, 0, 0):
        // exp(-0.1) * 2 * 0.5 / 1.5.
        let out = limit_map(&point(&[0.5, 0.0, 0.0]), 2.0, 0.1);
        assert!((out[0] - 0.603225).abs() < 1e-6);
    }

    #[test]
    fn generation_map_stays_inside_the_simplex() {
        let mut rng = replica_rng(9, 0);
        for _ in 0..500 {
            let mut raw: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum::<f64>() + rng.random::<f64>();
            for c in raw.iter_mut() {
                *c /= total;
            }
            let out = limit_map(&point(&raw), 2.5, 0.4);
            assert!(out.coords().iter().all(|&c| c >= 0.0));
            assert!(out.coords().iter().sum::<f64>() <= 1.0);
        }
    }

    #[test]
    fn scalar_map_is_the_master_slice_of_the_generation_map() {
        for r in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let full = limit_map(&point(&[r, 0.0, 0.0]), 2.0, 0.1);
            let scalar = scalar_limit_map(r, 2.0, 0.1);
            // The two paths associate the same product differently, so agree
            // to rounding error, not bitwise.
            assert!(
                (full[0] - scalar).abs() <= 4e-16 * scalar.max(1.0),
                "{} vs {scalar}",
                full[0]
            );
        }
        assert_eq!(scalar_limit_map(0.0, 2.0, 0.1), 0.0);
        assert!((scalar_limit_map(1.0, 2.0, 0.1) - (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn profile_matches_frozen_reference_values() {
        // sigma = 2, a = 0.1: the geometric series and its first two
        // power-weighted variants are 1, 2, and 6.
        let qs = rho_star(2.0, 0.1, 2);
        assert!(qs.supercritical);
        let margin = 2.0 * (-0.1f64).exp() - 1.0;
        assert!((qs.rho[0] - margin).abs() < 1e-12);
        assert!((qs.rho[0] - 0.809675).abs() < 1e-6);
        assert!((qs.rho[1] - margin * 0.1 * 2.0).abs() < 1e-12);
        assert!((qs.rho[1] - 0.161935).abs() < 1e-6);
        assert!((qs.rho[2] - margin * 0.005 * 6.0).abs() < 1e-12);
        assert!((qs.rho[2] - 0.024290).abs() < 1e-6);
    }

    #[test]
    fn subcritical_profile_is_zero() {
        let qs = rho_star(2.0, 1.0, 3);
        assert!(!qs.supercritical);
        assert!(qs.rho.coords().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn profile_is_a_fixed_point_of_the_generation_map() {
        for sigma in [2.0, 4.0] {
            for a in [0.1, 0.3, 0.5] {
                for cap_k in [0usize, 1, 2, 5] {
                    let qs = rho_star(sigma, a, cap_k);
                    let image = limit_map(&qs.rho, sigma, a);
                    assert!(
                        l1_distance(image.coords(), qs.rho.coords()) < 1e-12,
                        "residual too large at sigma={sigma}, a={a}, K={cap_k}"
                    );
                }
            }
        }
    }

    #[test]
    fn profile_satisfies_the_coordinate_recurrence() {
        // Independent check: the k-th coordinate is determined by the
        // earlier ones through the fixed-point recurrence obtained by
        // solving one generation for class k.
        for (sigma, a) in [(2.0f64, 0.1f64), (3.0, 0.4)] {
            let qs = rho_star(sigma, a, 5);
            let rho = qs.rho.coords();
            let denom = (sigma - 1.0) * rho[0] + 1.0 - (-a).exp();
            for k in 1..=5 {
                let mut acc = poisson_weight(a, k) * sigma * rho[0];
                for i in 1..k {
                    acc += poisson_weight(a, k - i) * rho[i];
                }
                let rhs = acc / denom;
                assert!(
                    (rho[k] - rhs).abs() < 1e-12,
                    "recurrence off at k={k}: {} vs {rhs}",
                    rho[k]
                );
            }
        }
    }

    #[test]
    fn full_profile_sums_to_one() {
        let qs = rho_star(2.0, 0.1, 60);
        let total: f64 = qs.rho.coords().iter().sum();
        assert!(total >= 1.0 - 1e-10);
        assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn orbits_reach_the_profile_from_interior_starts() {
        let mut rng = replica_rng(10, 0);
        let qs = rho_star(2.0, 0.1, 2);
        for _ in 0..20 {
            let z0 = point(&[
                rng.random::<f64>() * 0.3 + 1e-3,
                rng.random::<f64>() * 0.3,
                rng.random::<f64>() * 0.3,
            ]);
            let run = iterate_to_fixed_point(&z0, 2.0, 0.1, 1e-13, 100_000).unwrap();
            assert!(run.deviation < 1e-10, "deviation {}", run.deviation);
            assert_eq!(run.predicted.coords(), qs.rho.coords());
        }
    }

    #[test]
    fn masterless_and_subcritical_orbits_collapse_to_zero() {
        let run =
            iterate_to_fixed_point(&point(&[0.0, 0.3, 0.1]), 2.0, 0.1, 1e-13, 100_000).unwrap();
        assert!(run.limit.coords().iter().all(|&c| c < 1e-10));
        let run =
            iterate_to_fixed_point(&point(&[0.9, 0.05, 0.0]), 2.0, 1.0, 1e-13, 100_000).unwrap();
        assert!(run.limit.coords().iter().all(|&c| c < 1e-10));
        assert!(run.deviation < 1e-10);
    }

    #[test]
    fn master_coordinate_moves_monotonically() {
        for z00 in [0.01, 0.5, 0.99] {
            let mut current = point(&[z00, 0.0, 0.0]);
            let mut diffs = Vec::new();
            for _ in 0..200 {
                let next = limit_map(&current, 2.0, 0.1);
                diffs.push(next[0] - current[0]);
                current = next;
            }
            let all_up = diffs.iter().all(|&d| d >= -1e-15);
            let all_down = diffs.iter().all(|&d| d <= 1e-15);
            assert!(all_up || all_down, "master coordinate not monotone");
        }
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let err = iterate_to_fixed_point(&point(&[0.5, 0.0]), 2.0, 0.1, 1e-14, 3);
        assert!(matches!(err, Err(Error::NoConvergence(_))));
    }
}
