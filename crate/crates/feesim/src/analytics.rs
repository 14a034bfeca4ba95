//! Closed-form expected rewards and rationality thresholds for the fee
//! manipulation strategies, plus constructors for the absorbing chains that
//! model them.
//!
//! Three strategy comparisons are covered, each over the consecutive
//! proposer turns of the miners involved:
//!
//! - miner X alone: honest target-size blocks vs. opening with an empty
//!   block and then mining at the reduced fee,
//! - miner Y joining: after X lowers the fee, Y either restores it with a
//!   maximum-size block (honest) or keeps it low with target-size blocks,
//! - miner Y initiating: Y opens with her own empty block, relying on X to
//!   keep the fee low afterwards.
//!
//! Every closed form here has an independent check: [`chain_for`] builds
//! the matching reward chain, and the solver in [`crate::markov`] must
//! reproduce the formula. The tests hold the two routes to 1e-12 relative
//! agreement across the valid parameter space.

use thiserror::Error;

use crate::markov::{AbsorbingChain, MarkovError};
use crate::params::{DemandParams, MinerPowers, ProtocolParams};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("p_x must be below 1 for a finite expectation")]
    PowerAtOne,
    #[error("p_x + p_y must be below 1 for a finite expectation")]
    PowerSumAtOne,
    #[error("degenerate threshold denominator")]
    DegenerateDenominator,
    #[error("honest reward must be positive to take a relative difference")]
    NonPositiveHonest,
    #[error(transparent)]
    Chain(#[from] MarkovError),
}

/// Everything the reward formulas consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioInputs {
    pub protocol: ProtocolParams,
    pub demand: DemandParams,
    pub powers: MinerPowers,
}

/// The six strategy/miner combinations with a reward chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    XHonest,
    XAttack,
    YJoinHonest,
    YJoinAttack,
    YInitHonest,
    YInitAttack,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::XHonest,
        Scenario::XAttack,
        Scenario::YJoinHonest,
        Scenario::YJoinAttack,
        Scenario::YInitHonest,
        Scenario::YInitAttack,
    ];
}

/// Payout of a target-size block mined at the reduced base fee:
/// `s* (phi b* + (1 - alpha) eps)`.
fn reduced_fee_block_payout(inputs: &ScenarioInputs) -> f64 {
    let (p, d) = (&inputs.protocol, &inputs.demand);
    p.target_size * (p.phi * d.b_star + (1.0 - d.alpha) * d.eps)
}

/// Payout of an honest steady-state block: `s* eps`.
fn steady_block_payout(inputs: &ScenarioInputs) -> f64 {
    inputs.protocol.target_size * inputs.demand.eps
}

fn require_px_below_one(inputs: &ScenarioInputs) -> Result<(), AnalyticsError> {
    if inputs.powers.p_x >= 1.0 {
        return Err(AnalyticsError::PowerAtOne);
    }
    Ok(())
}

fn require_power_sum_below_one(inputs: &ScenarioInputs) -> Result<(), AnalyticsError> {
    if inputs.powers.p_x + inputs.powers.p_y >= 1.0 {
        return Err(AnalyticsError::PowerSumAtOne);
    }
    Ok(())
}

/// Expected payout of X's honest strategy over her consecutive proposer
/// turns: `s* eps / (1 - p_x)`.
pub fn x_honest_expected(inputs: &ScenarioInputs) -> Result<f64, AnalyticsError> {
    require_px_below_one(inputs)?;
    Ok(steady_block_payout(inputs) / (1.0 - inputs.powers.p_x))
}

/// Expected payout of X's deviation: an empty block with no payout, then
/// target-size blocks at the reduced fee while her turns last:
/// `p_x s* (phi b* + (1 - alpha) eps) / (1 - p_x)`.
pub fn x_attack_expected(inputs: &ScenarioInputs) -> Result<f64, AnalyticsError> {
    require_px_below_one(inputs)?;
    let p_x = inputs.powers.p_x;
    Ok(p_x * reduced_fee_block_payout(inputs) / (1.0 - p_x))
}

/// Mining power above which X's deviation beats honesty:
/// `eps / (phi b* + (1 - alpha) eps)`.
///
/// The value can reach or exceed 1, meaning no power short of certainty
/// makes the deviation strictly profitable.
pub fn x_attack_threshold(
    protocol: &ProtocolParams,
    demand: &DemandParams,
) -> Result<f64, AnalyticsError> {
    let denom = protocol.phi * demand.b_star + (1.0 - demand.alpha) * demand.eps;
    if denom <= 0.0 {
        return Err(AnalyticsError::DegenerateDenominator);
    }
    Ok(demand.eps / denom)
}

/// Expected payout of Y's honest strategy while X attacks, starting from
/// the block right after X's turn.
pub fn y_join_honest_expected(inputs: &ScenarioInputs) -> Result<f64, AnalyticsError> {
    require_power_sum_below_one(inputs)?;
    let (p, d) = (&inputs.protocol, &inputs.demand);
    let MinerPowers { p_x, p_y } = inputs.powers;
    let (alpha, delta, eps) = (d.alpha, d.delta, d.eps);
    let numer = (1.0 - p_x)
        * ((1.0 - p_y) * (1.0 + delta) * p.phi * d.b_star
            + eps * (1.0 + delta - alpha * (1.0 + delta) * (1.0 - p_y) - delta * p_y))
        * p.target_size;
    Ok(numer / (1.0 - p_x - p_y))
}

/// Expected payout of Y joining the attack: target-size blocks at the
/// reduced fee for as long as the X/Y proposer run lasts.
pub fn y_join_attack_expected(inputs: &ScenarioInputs) -> Result<f64, AnalyticsError> {
    require_power_sum_below_one(inputs)?;
    let MinerPowers { p_x, p_y } = inputs.powers;
    Ok((1.0 - p_x) * reduced_fee_block_payout(inputs) / (1.0 - p_x - p_y))
}

/// Mining power above which joining the attack beats honesty for Y.
///
/// `Ok(None)` means the deviation is not strictly profitable for any
/// `p_y` in (0, 1): either the threshold expression has no positive
/// denominator or its value is at least 1.
pub fn y_join_threshold(inputs: &ScenarioInputs) -> Result<Option<f64>, AnalyticsError> {
    let (p, d) = (&inputs.protocol, &inputs.demand);
    let (alpha, delta, eps) = (d.alpha, d.delta, d.eps);
    let numer = delta * ((1.0 - alpha) * eps + p.phi * d.b_star);
    let denom = (1.0 - alpha) * delta * eps + (1.0 + delta) * p.phi * d.b_star - alpha * eps;
    Ok(finite_threshold(numer, denom))
}

/// Expected payout of Y's honest strategy when she also proposes at the
/// target fee, starting from her own steady-state block.
pub fn y_init_honest_expected(inputs: &ScenarioInputs) -> Result<f64, AnalyticsError> {
    require_power_sum_below_one(inputs)?;
    let (p, d) = (&inputs.protocol, &inputs.demand);
    let MinerPowers { p_x, p_y } = inputs.powers;
    let (alpha, delta, eps) = (d.alpha, d.delta, d.eps);
    let numer = ((1.0 + delta) * d.b_star * p.phi * p_x * p_y
        + eps * (1.0 - p_x + ((1.0 - alpha) * delta - alpha) * p_x * p_y))
        * p.target_size;
    Ok(numer / (1.0 - p_x - p_y))
}

/// Expected payout of Y initiating the attack with her own empty block.
pub fn y_init_attack_expected(inputs: &ScenarioInputs) -> Result<f64, AnalyticsError> {
    require_power_sum_below_one(inputs)?;
    let MinerPowers { p_x, p_y } = inputs.powers;
    Ok(reduced_fee_block_payout(inputs) * p_y / (1.0 - p_x - p_y))
}

/// Mining power above which initiating the attack beats honesty for Y;
/// `Ok(None)` as in [`y_join_threshold`].
pub fn y_init_threshold(inputs: &ScenarioInputs) -> Result<Option<f64>, AnalyticsError> {
    let (p, d) = (&inputs.protocol, &inputs.demand);
    let p_x = inputs.powers.p_x;
    let (alpha, delta, eps) = (d.alpha, d.delta, d.eps);
    let numer = eps * (1.0 - p_x);
    let denom = (1.0 - alpha) * eps + p.phi * d.b_star * (1.0 - p_x)
        + (1.0 + delta) * eps * alpha * p_x
        - delta * p_x * (eps + p.phi * d.b_star);
    Ok(finite_threshold(numer, denom))
}

fn finite_threshold(numer: f64, denom: f64) -> Option<f64> {
    if denom <= 0.0 {
        return None;
    }
    let t = numer / denom;
    (0.0..1.0).contains(&t).then_some(t)
}

/// `(attack - honest) / honest`: positive means the deviation pays.
pub fn relative_difference(attack: f64, honest: f64) -> Result<f64, AnalyticsError> {
    if honest <= 0.0 {
        return Err(AnalyticsError::NonPositiveHonest);
    }
    Ok((attack - honest) / honest)
}

/// Closed-form expected reward of the given scenario — the formula route,
/// paired with the chain route of [`chain_for`].
pub fn closed_form_expected(
    scenario: Scenario,
    inputs: &ScenarioInputs,
) -> Result<f64, AnalyticsError> {
    match scenario {
        Scenario::XHonest => x_honest_expected(inputs),
        Scenario::XAttack => x_attack_expected(inputs),
        Scenario::YJoinHonest => y_join_honest_expected(inputs),
        Scenario::YJoinAttack => y_join_attack_expected(inputs),
        Scenario::YInitHonest => y_init_honest_expected(inputs),
        Scenario::YInitAttack => y_init_attack_expected(inputs),
    }
}

/// Reward chain of the given scenario, with states and payouts as the
/// strategy prescribes. All probability not assigned to an edge absorbs:
/// the consecutive proposer run ends.
pub fn chain_for(
    scenario: Scenario,
    inputs: &ScenarioInputs,
) -> Result<AbsorbingChain, AnalyticsError> {
    let MinerPowers { p_x, p_y } = inputs.powers;
    let attack_pay = reduced_fee_block_payout(inputs);
    let honest_pay = steady_block_payout(inputs);
    let full_block_pay = attack_pay * (1.0 + inputs.demand.delta);

    let chain = match scenario {
        // One state: X proposes at the target fee while her run lasts.
        Scenario::XHonest => {
            AbsorbingChain::new(vec![vec![p_x]], vec![honest_pay], 0)?
        }
        // Start with the unpaid empty block, then X mines at the reduced fee.
        Scenario::XAttack => AbsorbingChain::new(
            vec![vec![0.0, p_x], vec![0.0, p_x]],
            vec![0.0, attack_pay],
            0,
        )?,
        // States: [Y full block after X, Y at restored fee, X re-attacking].
        Scenario::YJoinHonest => AbsorbingChain::new(
            vec![
                vec![0.0, p_y, p_x],
                vec![0.0, p_y, p_x],
                vec![p_y, 0.0, p_x],
            ],
            vec![full_block_pay, honest_pay, 0.0],
            0,
        )?,
        // States: [Y at reduced fee, X at reduced fee].
        Scenario::YJoinAttack => AbsorbingChain::new(
            vec![vec![p_y, p_x], vec![p_y, p_x]],
            vec![attack_pay, 0.0],
            0,
        )?,
        // States: [Y at target fee, X attacking, Y full block after X,
        // Y at restored fee].
        Scenario::YInitHonest => AbsorbingChain::new(
            vec![
                vec![p_y, p_x, 0.0, 0.0],
                vec![0.0, p_x, p_y, 0.0],
                vec![0.0, p_x, 0.0, p_y],
                vec![0.0, p_x, 0.0, p_y],
            ],
            vec![honest_pay, 0.0, full_block_pay, honest_pay],
            0,
        )?,
        // States: [Y's unpaid empty block, X at reduced fee, Y at reduced
        // fee].
        Scenario::YInitAttack => AbsorbingChain::new(
            vec![
                vec![0.0, p_x, p_y],
                vec![0.0, p_x, p_y],
                vec![0.0, p_x, p_y],
            ],
            vec![0.0, 0.0, attack_pay],
            0,
        )?,
    };
    Ok(chain)
}

/// Whether bribing the current proposer to mine an empty block pays for a
/// user holding `gas` worth of transactions. The bribe costs the proposer's
/// forfeited tips `s* eps`; the user then saves the base-fee reduction
/// `phi b*` on every unit of gas, so the margin is `gas phi b* - s* eps`.
pub fn bribe_profitable(
    gas: f64,
    protocol: &ProtocolParams,
    demand: &DemandParams,
) -> (bool, f64) {
    let margin = gas * protocol.phi * demand.b_star - protocol.target_size * demand.eps;
    (margin > 0.0, margin)
}
