//! Log-space combinatorics and small vector helpers shared across modules.
//!
//! Binomial and multinomial coefficients are evaluated through a cached
//! ln-factorial table so that kernels remain finite for sequence lengths in
//! the thousands, where the coefficients themselves overflow `f64`.

use std::sync::OnceLock;

/// Factorials up to this value come from an exact cumulative table; larger
/// arguments use a Stirling series whose truncation error is far below f64
/// precision in that range.
const TABLE_SIZE: usize = 4096;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; TABLE_SIZE];
        // Kahan summation: the table is built once and feeds differences that
        // get exponentiated, so absolute error must stay near machine epsilon.
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for (n, slot) in t.iter_mut().enumerate().skip(1) {
            let term = (n as f64).ln() - comp;
            let next = sum + term;
            comp = (next - sum) - term;
            sum = next;
            *slot = sum;
        }
        t
    })
}

/// ln(n!)
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_SIZE {
        return table()[n as usize];
    }
    let x = n as f64;
    let x2 = x * x;
    (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x * x2 * x2)
}

/// ln of the binomial coefficient C(n, k); negative infinity when k > n.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// ln of the multinomial coefficient n! / (parts[0]! * ... * parts[last]! * (n - sum)!).
/// Negative infinity when the parts exceed n.
pub fn ln_multinomial(n: u64, parts: &[u64]) -> f64 {
    let s: u64 = parts.iter().sum();
    if s > n {
        return f64::NEG_INFINITY;
    }
    let mut acc = ln_factorial(n) - ln_factorial(n - s);
    for &p in parts {
        acc -= ln_factorial(p);
    }
    acc
}

/// Sum of absolute values.
pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// L1 distance between equal-length slices.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// x * ln(x / y) with the boundary convention 0 * ln(0 / y) = 0 (including y = 0).
pub fn xlnxy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_table_matches_exact_values() {
        let exact = [1.0f64, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0];
        for (n, &f) in exact.iter().enumerate() {
            assert!((ln_factorial(n as u64) - f.ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn stirling_branch_continues_table_smoothly() {
        // Compare the series against the table recurrence extended past the cut.
        let mut ln = ln_factorial(TABLE_SIZE as u64 - 1);
        for n in TABLE_SIZE as u64..TABLE_SIZE as u64 + 50 {
            ln += (n as f64).ln();
            assert!(
                (ln_factorial(n) - ln).abs() < 1e-9,
                "n = {n}: {} vs {}",
                ln_factorial(n),
                ln
            );
        }
    }

    #[test]
    fn binomial_small_values() {
        assert!((ln_binomial(5, 2).exp() - 10.0).abs() < 1e-12);
        assert!((ln_binomial(10, 5).exp() - 252.0).abs() < 1e-10);
        assert_eq!(ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn multinomial_with_remainder() {
        // 5! / (2! 1! 2!) = 30
        assert!((ln_multinomial(5, &[2, 1]).exp() - 30.0).abs() < 1e-10);
        assert_eq!(ln_multinomial(3, &[2, 2]), f64::NEG_INFINITY);
    }

    #[test]
    fn xlnxy_conventions() {
        assert_eq!(xlnxy(0.0, 0.0), 0.0);
        assert_eq!(xlnxy(0.0, 0.3), 0.0);
        assert_eq!(xlnxy(0.2, 0.0), f64::INFINITY);
        assert!((xlnxy(0.5, 0.25) - 0.5 * 2.0f64.ln()).abs() < 1e-15);
    }
}
