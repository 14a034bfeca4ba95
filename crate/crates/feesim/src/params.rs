//! Model parameters and the steady-state demand abstraction.
//!
//! The demand model is deliberately minimal: at any base fee at or above the
//! target fee, demand fills exactly the target block size; at any lower base
//! fee, demand fills the maximum block size. These are the only two points of
//! the demand curve the reward analysis ever evaluates, and the second one is
//! the best case for a miner who stays honest after a fee drop.

use thiserror::Error;

/// Errors from parameter validation and demand queries.
#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("adjustment parameter phi must lie strictly in (0, 1), got {0}")]
    PhiOutOfRange(f64),
    #[error("target block size must be positive, got {0}")]
    NonPositiveTargetSize(f64),
    #[error("initial base fee must be positive, got {0}")]
    NonPositiveBaseFee(f64),
    #[error("target base fee must be positive, got {0}")]
    NonPositiveTargetFee(f64),
    #[error("steady-state tip must be positive, got {0}")]
    NonPositiveTip(f64),
    #[error("tip-reduction share alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("full-block bonus delta must lie in [0, 1], got {0}")]
    DeltaOutOfRange(f64),
    #[error("mining power must lie in [0, 1], got {0}")]
    PowerOutOfRange(f64),
    #[error("combined mining power p_x + p_y must not exceed 1, got {0}")]
    PowerSumTooLarge(f64),
    #[error("base fee must be positive, got {0}")]
    NonPositiveQueryFee(f64),
}

/// Fee-mechanism constants: the adjustment parameter, the target block size,
/// and the genesis base fee.
///
/// The maximum valid block size is always twice the target size and is
/// exposed through [`ProtocolParams::max_size`] rather than stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Sensitivity of the base-fee update to block-size deviation (1/8 on
    /// Ethereum). Strictly between 0 and 1.
    pub phi: f64,
    /// Target block size in gas units.
    pub target_size: f64,
    /// Base fee of the first block, in Gwei per gas.
    pub initial_base_fee: f64,
}

impl ProtocolParams {
    pub fn new(phi: f64, target_size: f64, initial_base_fee: f64) -> Result<Self, ParamError> {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(ParamError::PhiOutOfRange(phi));
        }
        if !(target_size > 0.0) {
            return Err(ParamError::NonPositiveTargetSize(target_size));
        }
        if !(initial_base_fee > 0.0) {
            return Err(ParamError::NonPositiveBaseFee(initial_base_fee));
        }
        Ok(Self { phi, target_size, initial_base_fee })
    }

    /// Maximum valid block size: twice the target size.
    pub fn max_size(&self) -> f64 {
        2.0 * self.target_size
    }
}

/// Steady-state economics of the user side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandParams {
    /// Target base fee b*, in Gwei per gas: the fee at which demand exactly
    /// fills the target block size.
    pub b_star: f64,
    /// Steady-state tip per gas, in Gwei.
    pub eps: f64,
    /// Share of the steady-state tip that fee-aware users keep for
    /// themselves while a fee manipulation is underway. In (0, 1].
    pub alpha: f64,
    /// Aggregate bonus factor for an honest miner's maximum-size block mined
    /// at a lowered base fee. In [0, 1]: 0 means the extra transactions pay
    /// nothing above the base fee, 1 means they pay the full steady-state
    /// price.
    pub delta: f64,
}

impl DemandParams {
    pub fn new(b_star: f64, eps: f64, alpha: f64, delta: f64) -> Result<Self, ParamError> {
        if !(b_star > 0.0) {
            return Err(ParamError::NonPositiveTargetFee(b_star));
        }
        if !(eps > 0.0) {
            return Err(ParamError::NonPositiveTip(eps));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ParamError::AlphaOutOfRange(alpha));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(ParamError::DeltaOutOfRange(delta));
        }
        Ok(Self { b_star, eps, alpha, delta })
    }
}

/// Stationary block-proposal probabilities of the two named miners.
///
/// Each leader election is an independent draw; a miner's probability equals
/// her share of the total network power, whether that power is hash rate or
/// stake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinerPowers {
    pub p_x: f64,
    pub p_y: f64,
}

impl MinerPowers {
    pub fn new(p_x: f64, p_y: f64) -> Result<Self, ParamError> {
        for p in [p_x, p_y] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ParamError::PowerOutOfRange(p));
            }
        }
        if p_x + p_y > 1.0 {
            return Err(ParamError::PowerSumTooLarge(p_x + p_y));
        }
        Ok(Self { p_x, p_y })
    }
}

/// How users set their fee cap and maximum tip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bidding {
    /// Steady-state bidding: fee cap `b* + eps`, maximum tip `eps`.
    Honest,
    /// Bidding while a fee manipulation is underway: fee cap
    /// `b* + (1 - alpha) * eps`, maximum tip `phi * b* + (1 - alpha) * eps`.
    /// The miner captures the base-fee reduction, the user keeps
    /// `alpha * eps` of the tip.
    Attack,
}

/// Block size the demand supports at the given base fee.
///
/// Returns the target size at or above the target fee and the maximum size
/// below it.
pub fn available_block_size(
    base_fee: f64,
    protocol: &ProtocolParams,
    demand: &DemandParams,
) -> Result<f64, ParamError> {
    if !(base_fee > 0.0) {
        return Err(ParamError::NonPositiveQueryFee(base_fee));
    }
    if base_fee >= demand.b_star {
        Ok(protocol.target_size)
    } else {
        Ok(protocol.max_size())
    }
}

/// Tip per gas a miner collects from a transaction included at the given
/// base fee, under the given bidding mode.
///
/// The tip is `min(max_tip, fee_cap - base_fee)`, clamped below at zero:
/// a fee cap under the base fee means the transaction is excluded, not that
/// the miner pays.
pub fn miner_tip_per_gas(
    base_fee: f64,
    demand: &DemandParams,
    protocol: &ProtocolParams,
    bidding: Bidding,
) -> Result<f64, ParamError> {
    if !(base_fee > 0.0) {
        return Err(ParamError::NonPositiveQueryFee(base_fee));
    }
    let (fee_cap, max_tip) = match bidding {
        Bidding::Honest => (demand.b_star + demand.eps, demand.eps),
        Bidding::Attack => {
            let kept = (1.0 - demand.alpha) * demand.eps;
            (demand.b_star + kept, protocol.phi * demand.b_star + kept)
        }
    };
    Ok(max_tip.min(fee_cap - base_fee).max(0.0))
}
