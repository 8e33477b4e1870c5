//! The two cotangent identities behind the equal-moduli property of the
//! cylinders. Each function evaluates both sides independently so callers can
//! compare them.

use crate::error::{Error, Result};

fn check(theta: f64, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::IndexOutOfRange { index: 0, max: usize::MAX });
    }
    if !(theta > 0.0 && theta < std::f64::consts::PI) || (theta / 2.0).sin().abs() < 1e-300 {
        return Err(Error::DegenerateAngle(theta));
    }
    Ok(())
}

/// `cot(θ/2)·sin(kθ)` against `1 + 2cos θ + … + 2cos((k-1)θ) + cos kθ`.
pub fn telescoping_identity(theta: f64, k: usize) -> Result<(f64, f64)> {
    check(theta, k)?;
    let lhs = (theta / 2.0).cos() / (theta / 2.0).sin() * (k as f64 * theta).sin();
    let middle: f64 = (1..k).map(|i| 2.0 * (i as f64 * theta).cos()).sum();
    let rhs = 1.0 + middle + (k as f64 * theta).cos();
    Ok((lhs, rhs))
}

/// `Σ_{i=1}^{k} cot(α/2)·sin(iα)` against `k + Σ_{i=1}^{k} (2(k-i)+1)·cos(iα)`.
pub fn identity_sum(alpha: f64, k: usize) -> Result<(f64, f64)> {
    check(alpha, k)?;
    let cot = (alpha / 2.0).cos() / (alpha / 2.0).sin();
    let lhs: f64 = (1..=k).map(|i| cot * (i as f64 * alpha).sin()).sum();
    let rhs = k as f64
        + (1..=k)
            .map(|i| (2 * (k - i) + 1) as f64 * (i as f64 * alpha).cos())
            .sum::<f64>();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn quarter_turn_both_sides_are_one() {
        let (l, r) = telescoping_identity(PI / 2.0, 1).unwrap();
        assert!((l - 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pentagon_values() {
        // high-precision value of 1 + 2cos(2π/5) + cos(4π/5)
        let (l, r) = telescoping_identity(2.0 * PI / 5.0, 2).unwrap();
        assert!((l - 0.809_016_994_374_947_5).abs() < 1e-14);
        assert!((r - 0.809_016_994_374_947_5).abs() < 1e-14);
        let (l, r) = identity_sum(2.0 * PI / 5.0, 1).unwrap();
        assert!((l - 1.309_016_994_374_947_5).abs() < 1e-14);
        assert!((r - 1.309_016_994_374_947_5).abs() < 1e-14);
    }

    #[test]
    fn single_term_sum_matches_telescoping() {
        for a in [0.3, 1.0, 2.0, 3.0] {
            let (l1, r1) = identity_sum(a, 1).unwrap();
            let (l2, r2) = telescoping_identity(a, 1).unwrap();
            assert!((l1 - l2).abs() < 1e-14 && (r1 - r2).abs() < 1e-14);
        }
    }

    #[test]
    fn larger_k() {
        let (l, r) = telescoping_identity(2.0 * PI / 7.0, 3).unwrap();
        assert!((l - r).abs() < 1e-12);
        let (l, r) = identity_sum(2.0 * PI / 9.0, 4).unwrap();
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(telescoping_identity(0.0, 2).unwrap_err(), Error::DegenerateAngle(0.0));
        assert!(telescoping_identity(PI, 2).is_err());
        assert!(identity_sum(-1.0, 2).is_err());
        assert!(identity_sum(1.0, 0).is_err());
    }
}
