//! Model parameters and the small value types shared by every module.
//!
//! A parameter set describes a population of `m` sequences of length `ell`
//! over an alphabet of `kappa` letters, with per-locus mutation probability
//! `q`, selective advantage `sigma` for the all-zero sequence, and the scaling
//! knobs `a = ell * q` and `alpha = m / ell` that tie desk-scale instances to
//! their limiting regime. `cap_k` is the number of distance classes tracked
//! explicitly by the reduced chains and the limit dynamics (classes
//! 0..=cap_k).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fully resolved parameter set. Construct through [`RawParams::resolve`] or
/// [`ModelParams::new`], both of which validate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    pub ell: usize,
    pub m: usize,
    pub kappa: u32,
    pub q: f64,
    pub sigma: f64,
    #[serde(rename = "K")]
    pub cap_k: usize,
    pub a: f64,
    pub alpha: f64,
}

/// Largest alphabet the one-byte-per-letter sequence layout supports.
pub const KAPPA_MAX: u32 = 256;

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ell: usize,
        m: usize,
        kappa: u32,
        q: f64,
        sigma: f64,
        cap_k: usize,
        a: f64,
        alpha: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            ell,
            m,
            kappa,
            q,
            sigma,
            cap_k,
            a,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    /// Check every documented invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if self.ell < 1 {
            return fail("ell must be at least 1".into());
        }
        if self.m < 1 {
            return fail("m must be at least 1".into());
        }
        if self.kappa < 2 {
            return fail(format!("kappa must be at least 2, got {}", self.kappa));
        }
        if self.kappa > KAPPA_MAX {
            return fail(format!(
                "kappa must be at most {KAPPA_MAX} (one-byte letters), got {}",
                self.kappa
            ));
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return fail(format!("q must be positive and finite, got {}", self.q));
        }
        let q_max = 1.0 - 1.0 / self.kappa as f64;
        if self.q >= q_max {
            return fail(format!(
                "q must be below 1 - 1/kappa = {q_max} so the identity letter stays the likeliest, got {}",
                self.q
            ));
        }
        if !(self.sigma > 1.0) || !self.sigma.is_finite() {
            return fail(format!(
                "sigma must be finite and exceed 1, got {}",
                self.sigma
            ));
        }
        if self.cap_k > self.ell {
            return fail(format!(
                "K = {} exceeds the sequence length ell = {}",
                self.cap_k, self.ell
            ));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return fail(format!("a must be positive and finite, got {}", self.a));
        }
        if !(self.alpha > 0.0) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        Ok(())
    }
}

/// Partially specified parameters, as read from a config file or CLI flags.
/// Missing fields are derived where the scaling relations allow it:
/// `q = a / ell`, `a = q * ell`, `m = round(alpha * ell)`, `alpha = m / ell`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub ell: Option<usize>,
    pub m: Option<usize>,
    pub kappa: Option<u32>,
    pub q: Option<f64>,
    pub sigma: Option<f64>,
    #[serde(rename = "K")]
    pub cap_k: Option<usize>,
    pub a: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
}

impl RawParams {
    /// Parse a flat key-value TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParams(format!("config parse: {e}")))
    }

    /// Overlay `other` on `self`: fields set in `other` win.
    pub fn overlaid(&self, other: &RawParams) -> RawParams {
        RawParams {
            ell: other.ell.or(self.ell),
            m: other.m.or(self.m),
            kappa: other.kappa.or(self.kappa),
            q: other.q.or(self.q),
            sigma: other.sigma.or(self.sigma),
            cap_k: other.cap_k.or(self.cap_k),
            a: other.a.or(self.a),
            alpha: other.alpha.or(self.alpha),
            seed: other.seed.or(self.seed),
        }
    }

    /// Fill derivable fields, validate, and report any over-specification
    /// diagnostics (never silently ignored).
    pub fn resolve(&self) -> Result<(ModelParams, Vec<String>)> {
        let mut notes = Vec::new();
        let ell = self
            .ell
            .ok_or_else(|| Error::InvalidParams("ell is required".into()))?;
        let kappa = self
            .kappa
            .ok_or_else(|| Error::InvalidParams("kappa is required".into()))?;
        let sigma = self
            .sigma
            .ok_or_else(|| Error::InvalidParams("sigma is required".into()))?;
        let cap_k = self
            .cap_k
            .ok_or_else(|| Error::InvalidParams("K is required".into()))?;

        let (q, a) = match (self.q, self.a) {
            (Some(q), Some(a)) => {
                let implied = q * ell as f64;
                if (implied - a).abs() > 1e-9 * a.abs().max(1.0) {
                    notes.push(format!(
                        "q and a are both set and inconsistent: ell*q = {implied} but a = {a}; keeping both as given"
                    ));
                }
                (q, a)
            }
            (Some(q), None) => (q, q * ell as f64),
            (None, Some(a)) => (a / ell as f64, a),
            (None, None) => {
                return Err(Error::InvalidParams("one of q or a is required".into()));
            }
        };

        let (m, alpha) = match (self.m, self.alpha) {
            (Some(m), Some(alpha)) => {
                if alpha.is_finite() && (alpha * ell as f64).round() as usize != m {
                    notes.push(format!(
                        "m and alpha are both set and inconsistent: round(alpha*ell) = {} but m = {m}; keeping both as given",
                        (alpha * ell as f64).round()
                    ));
                }
                (m, alpha)
            }
            (Some(m), None) => (m, m as f64 / ell as f64),
            (None, Some(alpha)) => {
                if !alpha.is_finite() {
                    return Err(Error::InvalidParams(
                        "alpha = inf cannot derive m; set m explicitly".into(),
                    ));
                }
                let m = (alpha * ell as f64).round();
                if m < 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "alpha * ell rounds to {m}, below the minimum population of 1"
                    )));
                }
                (m as usize, alpha)
            }
            (None, None) => {
                return Err(Error::InvalidParams("one of m or alpha is required".into()));
            }
        };

        let params = ModelParams::new(ell, m, kappa, q, sigma, cap_k, a, alpha)?;
        Ok((params, notes))
    }
}

/// A point of the truncated simplex: coordinates are non-negative and sum to
/// at most 1. Tiny negative dust from float arithmetic is clamped on entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

/// Slack allowed when validating simplex membership of computed points.
pub const SIMPLEX_DUST: f64 = 1e-9;

impl SimplexPoint {
    pub fn new(mut coords: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for c in coords.iter_mut() {
            if !c.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "simplex coordinate must be finite, got {c}"
                )));
            }
            if *c < 0.0 {
                if *c < -SIMPLEX_DUST {
                    return Err(Error::InvalidParams(format!(
                        "simplex coordinate must be non-negative, got {c}"
                    )));
                }
                *c = 0.0;
            }
            sum += *c;
        }
        if sum > 1.0 + SIMPLEX_DUST {
            return Err(Error::InvalidParams(format!(
                "simplex coordinates sum to {sum}, above 1"
            )));
        }
        if sum > 1.0 {
            // Distribute the dust multiplicatively so the invariant is exact.
            for c in coords.iter_mut() {
                *c /= sum;
            }
        }
        Ok(SimplexPoint(coords))
    }

    pub fn zero(dim: usize) -> Self {
        SimplexPoint(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for SimplexPoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-class counts for the tracked classes 0..=K of a population of size m;
/// the remainder m - sum lives in the untracked classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassVector(Vec<usize>);

impl ClassVector {
    pub fn new(counts: Vec<usize>, m: usize) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total > m {
            return Err(Error::InvalidParams(format!(
                "class counts sum to {total}, above the population size {m}"
            )));
        }
        Ok(ClassVector(counts))
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl std::ops::Index<usize> for ClassVector {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}
