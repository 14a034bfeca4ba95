//! Base-fee update rules and the block payout split.
//!
//! Four variants share one multiplicative update: the next base fee is the
//! current one scaled by `1 + phi * (stat - s*) / s*`, where `stat` is a
//! variant-specific demand statistic,
//!
//! - [`MechanismKind::Eip1559`] — `stat` is the size of the block just
//!   produced,
//! - [`MechanismKind::GeometricAvg`] — `stat` is an exponentially weighted
//!   average of all past block sizes with weight base `q`,
//! - [`MechanismKind::WindowAvg`] — `stat` is the plain mean of the last `W`
//!   block sizes,
//! - [`MechanismKind::FeePool`] — the fee rule is unchanged, but half of the
//!   base fee collected per block is diverted into a pool that pays each
//!   future block a 1/8192 bonus.
//!
//! Every step multiplies the base fee by a factor in `[1 - phi, 1 + phi]`,
//! so a positive fee stays positive. All transitions are pure state-in /
//! state-out; independent trajectories can run concurrently.
//!
//! An arbitrary-precision mirror of these rules lives in [`crate::exact`]
//! and pins the float path down in tests.

use std::collections::VecDeque;

use thiserror::Error;

use crate::params::ProtocolParams;

/// Fraction of the fee pool paid out to each block's miner.
pub const POOL_BONUS_RATE: f64 = 1.0 / 8192.0;

#[derive(Debug, Error, PartialEq)]
pub enum MechanismError {
    #[error("geometric weight q must lie strictly in (0, 1), got {0}")]
    InvalidGeometricWeight(f64),
    #[error("window length must be at least 1")]
    EmptyWindow,
    #[error("block size {size} outside [0, {max}]")]
    BlockSizeOutOfRange { size: f64, max: f64 },
    #[error("chain state does not carry the statistic required by this mechanism")]
    StateKindMismatch,
}

/// Which base-fee rule is in force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechanismKind {
    /// Plain last-block-size rule.
    Eip1559,
    /// Geometric weighted average of block sizes, weight base `q` in (0, 1).
    GeometricAvg { q: f64 },
    /// Mean of the last `window` block sizes.
    WindowAvg { window: usize },
    /// Plain rule plus a redistribution pool fed by half the burned base fee.
    FeePool,
}

impl MechanismKind {
    pub fn validate(&self) -> Result<(), MechanismError> {
        match *self {
            MechanismKind::GeometricAvg { q } if !(q > 0.0 && q < 1.0) => {
                Err(MechanismError::InvalidGeometricWeight(q))
            }
            MechanismKind::WindowAvg { window: 0 } => Err(MechanismError::EmptyWindow),
            _ => Ok(()),
        }
    }
}

/// Evolving chain state: the base fee plus whatever statistic the mechanism
/// variant needs. Auxiliary fields are `None` for variants that do not use
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Base fee of the next block to be produced, Gwei per gas.
    pub base_fee: f64,
    /// Number of blocks applied so far.
    pub height: u64,
    /// Geometric average of block sizes (GeometricAvg only).
    pub s_avg: Option<f64>,
    /// Last `W` block sizes, oldest first (WindowAvg only).
    pub window: Option<VecDeque<f64>>,
    /// Accumulated redistribution pool in Gwei (FeePool only).
    pub pool: Option<f64>,
}

impl ChainState {
    /// Per-block miner bonus paid out of the fee pool, `None` for variants
    /// without a pool.
    pub fn pool_bonus(&self) -> Option<f64> {
        self.pool.map(|p| p * POOL_BONUS_RATE)
    }
}

fn check_block_size(size: f64, protocol: &ProtocolParams) -> Result<(), MechanismError> {
    let max = protocol.max_size();
    if !(0.0..=max).contains(&size) {
        return Err(MechanismError::BlockSizeOutOfRange { size, max });
    }
    Ok(())
}

/// Genesis state for the given mechanism. The demand statistic is seeded
/// with the size of the first observed block; the fee-pool balance starts
/// empty.
pub fn init_state(
    kind: MechanismKind,
    protocol: &ProtocolParams,
    first_block_size: f64,
) -> Result<ChainState, MechanismError> {
    kind.validate()?;
    check_block_size(first_block_size, protocol)?;
    let mut state = ChainState {
        base_fee: protocol.initial_base_fee,
        height: 0,
        s_avg: None,
        window: None,
        pool: None,
    };
    match kind {
        MechanismKind::Eip1559 => {}
        MechanismKind::GeometricAvg { .. } => state.s_avg = Some(first_block_size),
        MechanismKind::WindowAvg { window } => {
            state.window = Some(vec![first_block_size; window].into());
        }
        MechanismKind::FeePool => state.pool = Some(0.0),
    }
    Ok(state)
}

/// The shared multiplicative update. Every variant funnels its statistic
/// through this one expression so that variants that are supposed to agree
/// (window of 1 vs. plain rule, fee-pool fee path vs. plain rule) agree
/// bit for bit.
fn fee_factor(stat: f64, protocol: &ProtocolParams) -> f64 {
    1.0 + protocol.phi * ((stat - protocol.target_size) / protocol.target_size)
}

/// Apply one block of the given size and return the successor state.
pub fn step(
    state: &ChainState,
    block_size: f64,
    kind: MechanismKind,
    protocol: &ProtocolParams,
) -> Result<ChainState, MechanismError> {
    kind.validate()?;
    check_block_size(block_size, protocol)?;
    let mut next = state.clone();
    next.height = state.height + 1;
    match kind {
        MechanismKind::Eip1559 => {
            next.base_fee = state.base_fee * fee_factor(block_size, protocol);
        }
        MechanismKind::GeometricAvg { q } => {
            let s_avg = state.s_avg.ok_or(MechanismError::StateKindMismatch)?;
            // Statistic first, fee second: the fee update sees the average
            // that already includes the block just produced.
            let s_avg = (1.0 - q) * block_size + q * s_avg;
            next.s_avg = Some(s_avg);
            next.base_fee = state.base_fee * fee_factor(s_avg, protocol);
        }
        MechanismKind::WindowAvg { .. } => {
            let window = state.window.as_ref().ok_or(MechanismError::StateKindMismatch)?;
            let mut window = window.clone();
            window.pop_front();
            window.push_back(block_size);
            let mean = window.iter().sum::<f64>() / window.len() as f64;
            next.base_fee = state.base_fee * fee_factor(mean, protocol);
            next.window = Some(window);
        }
        MechanismKind::FeePool => {
            let pool = state.pool.ok_or(MechanismError::StateKindMismatch)?;
            next.pool = Some(pool + block_size * state.base_fee / 2.0);
            next.base_fee = state.base_fee * fee_factor(block_size, protocol);
        }
    }
    Ok(next)
}

/// Split a block's fees into the burned portion and the miner's revenue.
///
/// Burned is `size * base_fee`; the miner keeps `size * tip_per_gas`. Any
/// pool bonus on top of this is reported separately by
/// [`ChainState::pool_bonus`].
pub fn payout_split(
    block_size: f64,
    base_fee: f64,
    tip_per_gas: f64,
) -> Result<(f64, f64), MechanismError> {
    for v in [block_size, base_fee, tip_per_gas] {
        if v < 0.0 {
            return Err(MechanismError::BlockSizeOutOfRange { size: v, max: f64::INFINITY });
        }
    }
    Ok((block_size * base_fee, block_size * tip_per_gas))
}
