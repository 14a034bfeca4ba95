//! Response time of a fee rule to a demand shift: the number of
//! consecutive full blocks needed to raise the base fee by a factor `beta`.
//!
//! Under the plain rule each full block multiplies the fee by `1 + phi`,
//! so the answer is the ceiling of `log(beta)` in that base. Under the
//! geometric mitigation the k-th consecutive full block multiplies the fee
//! by `1 + phi (1 - q^k)`, so the answer is the smallest `T` with
//! `prod_{k=1..T} (1 + phi (1 - q^k)) >= beta`.
//!
//! Both counts are decided by accumulating the product directly and
//! comparing — never by a floating logarithm, whose rounding can misplace
//! a ceiling that lands exactly on a representable power.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DelayError {
    #[error("beta must be a finite value >= 1, got {0}")]
    BetaOutOfRange(f64),
    #[error("phi must lie strictly in (0, 1), got {0}")]
    PhiOutOfRange(f64),
    #[error("q must lie strictly in (0, 1), got {0}")]
    QOutOfRange(f64),
    #[error("product did not reach beta within {0} factors")]
    NoTermination(u64),
}

const MAX_FACTORS: u64 = 1_000_000;

fn check_beta_phi(beta: f64, phi: f64) -> Result<(), DelayError> {
    if !beta.is_finite() || beta < 1.0 {
        return Err(DelayError::BetaOutOfRange(beta));
    }
    // 1 + phi must actually exceed 1 in floating point for the product to
    // grow.
    if !(phi > 0.0 && phi < 1.0) || 1.0 + phi == 1.0 {
        return Err(DelayError::PhiOutOfRange(phi));
    }
    Ok(())
}

/// Full blocks needed under the plain rule: smallest `T` with
/// `(1 + phi)^T >= beta`.
pub fn t_eip(beta: f64, phi: f64) -> Result<u64, DelayError> {
    check_beta_phi(beta, phi)?;
    let mut product = 1.0;
    let mut t = 0;
    while product < beta {
        product *= 1.0 + phi;
        t += 1;
        if t > MAX_FACTORS {
            return Err(DelayError::NoTermination(MAX_FACTORS));
        }
    }
    Ok(t)
}

/// Full blocks needed under the geometric mitigation: smallest `T` with
/// `prod_{k=1..T} (1 + phi (1 - q^k)) >= beta`.
pub fn t_mitigated(beta: f64, phi: f64, q: f64) -> Result<u64, DelayError> {
    check_beta_phi(beta, phi)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(DelayError::QOutOfRange(q));
    }
    let mut product = 1.0;
    let mut q_pow = 1.0;
    let mut t = 0;
    while product < beta {
        q_pow *= q;
        product *= 1.0 + phi * (1.0 - q_pow);
        t += 1;
        if t > MAX_FACTORS {
            return Err(DelayError::NoTermination(MAX_FACTORS));
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_change_needs_no_blocks() {
        assert_eq!(t_eip(1.0, 0.125).unwrap(), 0);
        assert_eq!(t_mitigated(1.0, 0.125, 0.5).unwrap(), 0);
    }

    #[test]
    fn doubling_under_the_plain_rule() {
        // 1.125^5 = 1.802... < 2 <= 1.125^6 = 2.027...
        assert_eq!(t_eip(2.0, 0.125).unwrap(), 6);
    }

    #[test]
    fn one_full_block_exactly() {
        assert_eq!(t_eip(1.125, 0.125).unwrap(), 1);
    }

    #[test]
    fn doubling_under_the_mitigation() {
        // Running product: 1.0625, 1.1621..., 1.2892..., 1.4403...,
        // 1.6146..., 1.8133..., 2.0382... — crosses 2 at the 7th factor.
        assert_eq!(t_mitigated(2.0, 0.125, 0.5).unwrap(), 7);
    }

    #[test]
    fn mitigation_is_never_faster() {
        for beta in [1.1, 2.0, 10.0, 100.0] {
            let plain = t_eip(beta, 0.125).unwrap();
            for q in [0.25, 0.5, 0.75] {
                assert!(t_mitigated(beta, 0.125, q).unwrap() >= plain);
            }
        }
    }

    #[test]
    fn monotone_in_q_and_beta_and_antitone_in_phi() {
        let mut prev = 0;
        for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let t = t_mitigated(5.0, 0.125, q).unwrap();
            assert!(t >= prev);
            prev = t;
        }
        let mut prev = 0;
        for beta in [1.0, 1.5, 3.0, 20.0, 100.0] {
            let t = t_mitigated(beta, 0.125, 0.5).unwrap();
            assert!(t >= prev);
            prev = t;
        }
        let mut prev = u64::MAX;
        for phi in [0.05, 0.125, 0.25, 0.5] {
            let t = t_mitigated(10.0, phi, 0.5).unwrap();
            assert!(t <= prev);
            prev = t;
        }
    }

    #[test]
    fn small_q_approaches_the_plain_rule() {
        for beta in [1.2, 2.0, 7.0, 50.0] {
            for phi in [0.0625, 0.125, 0.25] {
                let plain = t_eip(beta, phi).unwrap();
                let near = t_mitigated(beta, phi, 1e-9).unwrap();
                assert!(near - plain <= 1, "beta {beta} phi {phi}: {near} vs {plain}");
            }
        }
    }

    #[test]
    fn rejects_invalid_queries() {
        assert!(t_eip(0.9, 0.125).is_err());
        assert!(t_eip(f64::INFINITY, 0.125).is_err());
        assert!(t_eip(2.0, 0.0).is_err());
        assert!(t_eip(2.0, 1.0).is_err());
        assert!(t_eip(2.0, 1e-17).is_err());
        assert!(t_mitigated(2.0, 0.125, 0.0).is_err());
        assert!(t_mitigated(2.0, 0.125, 1.0).is_err());
    }
}
