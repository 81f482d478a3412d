//! Property tests for the structural invariants: the prefix order and its
//! projections, monotonicity of the coupled step, row-stochasticity of the
//! lumped kernel, simplex preservation of the limit map, positivity and
//! Pinsker lower bounds for the rate functions, and bit-exact float
//! round-trips through the CSV renderer.

use proptest::prelude::*;
use quasilab::coupling::{coupling_map, project_lower, project_upper, UniformMatrix};
use quasilab::dynamics::{limit_map, scalar_limit_map};
use quasilab::occupancy::{leq, LumpedKernel, Occupancy};
use quasilab::output::Table;
use quasilab::params::SimplexPoint;
use quasilab::rates::{binomial_rate, multinomial_rate};
use quasilab::stream::replica_rng;
use quasilab::ModelParams;
use rand::Rng;

/// A small random instance: parameters valid for kernel construction plus a
/// population given as one class per member (shrinks toward all-master).
#[derive(Debug, Clone)]
struct SmallInstance {
    ell: usize,
    m: usize,
    q: f64,
    sigma: f64,
    cap_k: usize,
    member_classes: Vec<usize>,
    seed: u64,
}

fn small_instance() -> impl Strategy<Value = SmallInstance> {
    (2usize..=4, 1usize..=6).prop_flat_map(|(ell, m)| {
        (
            Just(ell),
            Just(m),
            0.01f64..0.45,
            1.1f64..4.0,
            0..ell, // cap_k strictly below ell so the upper projection has room
            prop::collection::vec(0..=ell, m),
            any::<u64>(),
        )
            .prop_map(
                |(ell, m, q, sigma, cap_k, member_classes, seed)| SmallInstance {
                    ell,
                    m,
                    q,
                    sigma,
                    cap_k,
                    member_classes,
                    seed,
                },
            )
    })
}

impl SmallInstance {
    fn occupancy(&self) -> Occupancy {
        let mut counts = vec![0usize; self.ell + 1];
        for &c in &self.member_classes {
            counts[c] += 1;
        }
        Occupancy::new(counts).unwrap()
    }

    fn params(&self) -> ModelParams {
        ModelParams::new(
            self.ell,
            self.m,
            2,
            self.q,
            self.sigma,
            self.cap_k,
            self.q * self.ell as f64,
            self.m as f64 / self.ell as f64,
        )
        .unwrap()
    }
}

/// All occupancy vectors of m members over ell + 1 classes.
fn all_occupancies(ell: usize, m: usize) -> Vec<Occupancy> {
    fn rec(cells: usize, budget: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cells == 1 {
            prefix.push(budget);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=budget {
            prefix.push(first);
            rec(cells - 1, budget - first, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    rec(ell + 1, m, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|c| Occupancy::new(c).unwrap())
        .collect()
}

proptest! {
    #[test]
    fn projections_sandwich_and_are_idempotent(inst in small_instance()) {
        let o = inst.occupancy();
        let lo = project_lower(&o, inst.cap_k);
        let hi = project_upper(&o, inst.cap_k);
        prop_assert!(leq(&o, &o), "prefix order must be reflexive");
        prop_assert!(leq(&lo, &o), "lower projection must not gain mass near class 0");
        prop_assert!(leq(&o, &hi), "upper projection must not lose mass near class 0");
        prop_assert_eq!(project_lower(&lo, inst.cap_k), lo);
        prop_assert_eq!(project_upper(&hi, inst.cap_k), hi);
    }

    #[test]
    fn coupled_step_is_monotone_across_random_instances(inst in small_instance()) {
        let params = inst.params();
        let kern = LumpedKernel::new(&params).unwrap();
        let o = inst.occupancy();
        let lo = project_lower(&o, inst.cap_k);
        let hi = project_upper(&o, inst.cap_k);
        let mut rng = replica_rng(inst.seed, 0);
        let r = UniformMatrix::draw(inst.m, inst.ell, &mut rng);
        let next_lo = coupling_map(&kern, &lo, &r);
        let next_mid = coupling_map(&kern, &o, &r);
        let next_hi = coupling_map(&kern, &hi, &r);
        prop_assert!(leq(&next_lo, &next_mid), "lower image escaped: {lo:?} -> {next_lo:?} vs {o:?} -> {next_mid:?}");
        prop_assert!(leq(&next_mid, &next_hi), "upper image escaped: {o:?} -> {next_mid:?} vs {hi:?} -> {next_hi:?}");
    }
}

proptest! {
    // Row sums enumerate the whole state space per case; keep the case count
    // modest and the instances tiny.
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn lumped_rows_are_stochastic_for_random_parameters(
        ell in 1usize..=3,
        m in 1usize..=4,
        q in 0.01f64..0.45,
        sigma in 1.1f64..4.0,
    ) {
        let params = ModelParams::new(
            ell, m, 2, q, sigma, 0, q * ell as f64, m as f64 / ell as f64,
        ).unwrap();
        let kern = LumpedKernel::new(&params).unwrap();
        let states = all_occupancies(ell, m);
        for o in &states {
            let total: f64 = states.iter().map(|n| kern.transition_prob(o, n)).sum();
            prop_assert!(
                (total - 1.0).abs() < 1e-9,
                "row from {o:?} sums to {total} (q {q}, sigma {sigma})"
            );
        }
    }
}

proptest! {
    #[test]
    fn limit_map_preserves_the_simplex_and_its_master_slice(
        raw in prop::collection::vec(0.0f64..1.0, 1..=4),
        headroom in 0.01f64..1.0,
    ) {
        let total: f64 = raw.iter().sum::<f64>() + headroom;
        let r = SimplexPoint::new(raw.iter().map(|c| c / total).collect()).unwrap();
        let sigma = 2.0;
        let a = 0.3;
        let image = limit_map(&r, sigma, a);
        let mut sum = 0.0;
        for k in 0..image.dim() {
            prop_assert!(image[k] >= 0.0, "negative share {} at {k}", image[k]);
            sum += image[k];
        }
        prop_assert!(sum <= 1.0 + 1e-12, "image mass {sum} exceeds one");
        let scalar = scalar_limit_map(r[0], sigma, a);
        prop_assert!(
            (image[0] - scalar).abs() <= 4e-16 * scalar.max(1.0),
            "master slice {} disagrees with scalar map {scalar}",
            image[0]
        );
    }

    #[test]
    fn binomial_rate_is_pinsker_bounded_and_vanishes_on_the_diagonal(
        p in 0.001f64..0.999,
        t in 0.001f64..0.999,
    ) {
        prop_assert!(binomial_rate(p, p).abs() < 1e-14);
        let rate = binomial_rate(p, t);
        prop_assert!(rate >= -1e-15, "rate must be nonnegative, got {rate}");
        // KL(Bern(t) || Bern(p)) >= 2 (t - p)^2 in nats.
        prop_assert!(
            rate + 1e-12 >= 2.0 * (t - p) * (t - p),
            "rate {rate} below the Pinsker bound at p {p}, t {t}"
        );
    }

    #[test]
    fn multinomial_rate_is_nonnegative_and_zero_at_equality(
        raw in prop::collection::vec(0.001f64..1.0, 1..=4),
        traw in prop::collection::vec(0.001f64..1.0, 1..=4),
        headroom in 0.01f64..1.0,
    ) {
        prop_assume!(raw.len() == traw.len());
        let ptot: f64 = raw.iter().sum::<f64>() + headroom;
        let ttot: f64 = traw.iter().sum::<f64>() + headroom;
        let p = SimplexPoint::new(raw.iter().map(|c| c / ptot).collect()).unwrap();
        let t = SimplexPoint::new(traw.iter().map(|c| c / ttot).collect()).unwrap();
        prop_assert!(multinomial_rate(&p, &p).abs() < 1e-12);
        prop_assert!(multinomial_rate(&p, &t) >= -1e-15);
    }

    #[test]
    fn csv_floats_round_trip_bit_exactly(x in any::<f64>()) {
        prop_assume!(!x.is_nan());
        let mut t = Table::new(&["x"]);
        t.push_row(vec![x.into()]);
        let csv = t.to_csv();
        let cell = csv.lines().last().expect("data row");
        let back: f64 = cell.parse().unwrap_or_else(|_| panic!("unparsable cell {cell:?}"));
        prop_assert_eq!(back.to_bits(), x.to_bits(), "cell {}", cell);
    }

    #[test]
    fn replica_streams_are_reproducible_and_distinct(
        seed in any::<u64>(),
        rep_a in 0u64..1000,
        rep_b in 0u64..1000,
    ) {
        let draw4 = |rep: u64| -> Vec<u64> {
            let mut rng = replica_rng(seed, rep);
            (0..4).map(|_| rng.random::<u64>()).collect()
        };
        prop_assert_eq!(draw4(rep_a), draw4(rep_a), "same stream must replay identically");
        if rep_a != rep_b {
            prop_assert_ne!(draw4(rep_a), draw4(rep_b), "distinct replicas must not share a stream");
        }
    }
}
