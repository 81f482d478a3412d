//! Central numeric tolerances. Every comparison constant used by the library
//! and the acceptance suite is pinned here so a failing check cannot be
//! quietly loosened at the call site.

/// Absolute tolerance for probability comparisons (row sums, lumping
/// identities). Kernel entries are assembled from log-space factorials whose
/// absolute error is near machine epsilon, so 1e-12 leaves two orders of
/// headroom.
pub const PROB_TOL: f64 = 1e-12;

/// Row-sum tolerance for kernels over sequence lengths up to a few thousand,
/// where each row sums thousands of log-space terms.
pub const ROW_SUM_TOL: f64 = 1e-10;

/// L1 tolerance for fixed-point identities of the deterministic limit maps.
pub const FIXED_POINT_TOL: f64 = 1e-12;

/// Convergence tolerance for fixed-point iteration (successive L1 change).
pub const ITERATE_TOL: f64 = 1e-12;

/// Cap on fixed-point iterations before reporting non-convergence.
pub const ITERATE_MAX: usize = 1_000_000;

/// Rate values this close to zero count as "zero cost" when checking that a
/// deterministic step is free. Derivative-free optimization cannot do better
/// than ~sqrt(eps) on a flat minimum.
pub const RATE_ZERO_TOL: f64 = 1e-8;

/// Relative stabilization tolerance for the multi-step cost when the path
/// length cap doubles.
pub const PSI_STABLE_RTOL: f64 = 1e-3;

/// Default path-length cap for multi-step cost minimization.
pub const PSI_LMAX_DEFAULT: usize = 20;

/// Hitting-time simulations stop and mark the sample censored at this many
/// steps unless the caller overrides the cap.
pub const HITTING_CAP_DEFAULT: u64 = 1_000_000;

/// Default absolute tolerance for stationary-mean comparisons; combined with
/// a 4-standard-error band, whichever is larger. At desk scale the finite-size
/// bias dominates the Monte Carlo error, so 0.05 absolute is the gate.
pub const STATIONARY_ABS_TOL: f64 = 0.05;

/// Multiplier on standard errors for Monte Carlo comparisons.
pub const SE_BAND: f64 = 4.0;

/// Exact-enumeration guard for reduced-chain transition rows: population size.
pub const Z_ENUM_MAX_M: usize = 12;

/// Exact-enumeration guard for reduced-chain transition rows: tracked classes.
pub const Z_ENUM_MAX_K: usize = 2;

/// Guard on full transition-row enumeration of the sequence-level process:
/// kappa^(ell * m) must stay at or below this many populations.
pub const WF_ENUM_MAX_STATES: f64 = 1e6;
