//! Monte Carlo engine for the fee-manipulation attack.
//!
//! Each run plays one attack trajectory and its honest counterfactual on
//! the same proposer sequence:
//!
//! - the chain starts in steady state and miner X opens with an empty
//!   block; every later block is hers with probability `p_x`,
//! - attacking, X mines target-size blocks and collects the reduced-fee
//!   tip; honest proposers mine maximum-size blocks and drive the fee back
//!   up,
//! - the run ends once the base fee recovers to `recovery_fraction` of the
//!   target fee, or is cut off at `max_blocks` and flagged as truncated,
//! - the counterfactual pays X the steady-state tip for every block she
//!   proposed over the same horizon, the opening block included.
//!
//! The per-run difference of the two payouts is the excess profit of
//! deviating. Runs are paired by seed, embarrassingly parallel, and reduced
//! in run-index order, so aggregates are bit-identical for any worker
//! count.

use rayon::prelude::*;
use thiserror::Error;

use crate::mechanism::{init_state, step, ChainState, MechanismError, MechanismKind};
use crate::params::{miner_tip_per_gas, Bidding, DemandParams, ProtocolParams};
use crate::rng::{derive_run_seed, SplitMix64};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("runs must be at least 1")]
    ZeroRuns,
    #[error("max_blocks must be at least 1")]
    ZeroMaxBlocks,
    #[error("recovery fraction must lie strictly in (0, 1), got {0}")]
    RecoveryOutOfRange(f64),
    #[error("probability must lie in [0, 1], got {0}")]
    PowerOutOfRange(f64),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

/// One Monte Carlo experiment: a mechanism, the market parameters, and the
/// sampling plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub kind: MechanismKind,
    pub protocol: ProtocolParams,
    pub demand: DemandParams,
    /// X's block-proposal probability.
    pub p_x: f64,
    /// Number of paired runs to average over.
    pub runs: u64,
    /// Base seed; each run derives its own seed from (base_seed, run index).
    pub base_seed: u64,
    /// The run ends when the base fee reaches this fraction of the target
    /// fee.
    pub recovery_fraction: f64,
    /// Hard cap on a run's length; hitting it marks the run truncated.
    pub max_blocks: u64,
    /// Test mode reproducing the analytical simplification: the first
    /// honest block restores the fee instantly and ends the run.
    pub instant_recovery: bool,
}

impl SimConfig {
    /// Sampling plan used throughout: 10,000 runs, 99% recovery, a
    /// 10,000-block cap, and real (non-instant) recovery.
    pub fn new(
        kind: MechanismKind,
        protocol: ProtocolParams,
        demand: DemandParams,
        p_x: f64,
        base_seed: u64,
    ) -> Self {
        Self {
            kind,
            protocol,
            demand,
            p_x,
            runs: 10_000,
            base_seed,
            recovery_fraction: 0.99,
            max_blocks: 10_000,
            instant_recovery: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.kind.validate()?;
        if self.runs == 0 {
            return Err(SimError::ZeroRuns);
        }
        if self.max_blocks == 0 {
            return Err(SimError::ZeroMaxBlocks);
        }
        if !(self.recovery_fraction > 0.0 && self.recovery_fraction < 1.0) {
            return Err(SimError::RecoveryOutOfRange(self.recovery_fraction));
        }
        if !(0.0..=1.0).contains(&self.p_x) {
            return Err(SimError::PowerOutOfRange(self.p_x));
        }
        Ok(())
    }
}

/// Outcome of one paired run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    /// X's payout along the attack trajectory.
    pub attack_payout: f64,
    /// X's payout had she mined honestly over the same proposer sequence.
    pub honest_payout: f64,
    /// Blocks mined before the fee recovered (or the cap, if truncated).
    pub blocks_to_recovery: u64,
    pub truncated: bool,
}

/// Aggregate over all runs of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSummary {
    /// Mean of (attack payout - honest payout).
    pub mean_excess: f64,
    /// 95% confidence half-width, normal approximation; zero for a single
    /// run.
    pub ci_half_width: f64,
    pub runs: u64,
    /// Runs cut off at `max_blocks` before recovering.
    pub truncated_runs: u64,
}

/// Play run `run_index` of the configuration. Deterministic in
/// `(config, run_index)`.
pub fn run_once(config: &SimConfig, run_index: u64) -> Result<RunOutcome, SimError> {
    config.validate()?;
    let protocol = config.protocol;
    let demand = config.demand;
    let kind = config.kind;
    let s_star = protocol.target_size;
    let recovery_fee = config.recovery_fraction * demand.b_star;

    // Steady state: fee at the target fee, statistics seeded with
    // target-size blocks.
    let steady = ProtocolParams::new(protocol.phi, s_star, demand.b_star)
        .expect("steady-state parameters are valid");
    let mut state: ChainState =
        init_state(kind, &steady, s_star).expect("target size is a valid first block");

    let mut rng = SplitMix64::new(derive_run_seed(config.base_seed, run_index));
    let mut attack_payout = 0.0;
    let mut x_blocks: u64 = 1; // the opening empty block is X's
    let mut blocks: u64 = 0;
    let mut recovered = false;

    // Block 0: X's empty block. No payout.
    state = step(&state, 0.0, kind, &steady)?;
    blocks += 1;
    if state.base_fee >= recovery_fee {
        recovered = true;
    }

    while !recovered && blocks < config.max_blocks {
        if rng.next_f64() < config.p_x {
            let tip = miner_tip_per_gas(state.base_fee, &demand, &protocol, Bidding::Attack)
                .expect("base fee stays positive");
            attack_payout += s_star * tip;
            x_blocks += 1;
            state = step(&state, s_star, kind, &steady)?;
        } else {
            state = step(&state, 2.0 * s_star, kind, &steady)?;
            if config.instant_recovery {
                recovered = true;
            }
        }
        blocks += 1;
        if state.base_fee >= recovery_fee {
            recovered = true;
        }
    }

    Ok(RunOutcome {
        attack_payout,
        honest_payout: x_blocks as f64 * s_star * demand.eps,
        blocks_to_recovery: blocks,
        truncated: !recovered,
    })
}

/// Average `run_once` over all run indices. The reduction is in index
/// order, so the summary does not depend on how the runs were scheduled.
pub fn run_many(config: &SimConfig) -> Result<SimSummary, SimError> {
    config.validate()?;
    let outcomes: Vec<RunOutcome> = (0..config.runs)
        .into_par_iter()
        .map(|i| run_once(config, i))
        .collect::<Result<_, _>>()?;
    Ok(summarize(&outcomes))
}

fn summarize(outcomes: &[RunOutcome]) -> SimSummary {
    let n = outcomes.len() as f64;
    let mean = outcomes
        .iter()
        .map(|o| o.attack_payout - o.honest_payout)
        .sum::<f64>()
        / n;
    let ci_half_width = if outcomes.len() > 1 {
        let var = outcomes
            .iter()
            .map(|o| {
                let d = o.attack_payout - o.honest_payout - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0);
        1.96 * (var / n).sqrt()
    } else {
        0.0
    };
    SimSummary {
        mean_excess: mean,
        ci_half_width,
        runs: outcomes.len() as u64,
        truncated_runs: outcomes.iter().filter(|o| o.truncated).count() as u64,
    }
}

/// Sweep axis: which knob varies across the table.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Vary X's proposal probability.
    MinerPower(Vec<f64>),
    /// Vary the tip-to-target-fee ratio `eps / b*`.
    TipRatio(Vec<f64>),
}

impl SweepAxis {
    pub fn values(&self) -> &[f64] {
        match self {
            SweepAxis::MinerPower(v) | SweepAxis::TipRatio(v) => v,
        }
    }

    fn apply(&self, config: &SimConfig, value: f64) -> SimConfig {
        let mut c = *config;
        match self {
            SweepAxis::MinerPower(_) => c.p_x = value,
            SweepAxis::TipRatio(_) => c.demand.eps = value * c.demand.b_star,
        }
        c
    }
}

/// One sweep cell: an axis value, a mechanism, and its summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub kind: MechanismKind,
    pub summary: SimSummary,
}

/// Run one experiment per (axis value, mechanism), all from the same base
/// seed, so mechanisms are compared on identical proposer sequences.
pub fn sweep(
    config: &SimConfig,
    axis: &SweepAxis,
    kinds: &[MechanismKind],
) -> Result<Vec<SweepRow>, SimError> {
    let mut rows = Vec::with_capacity(axis.values().len() * kinds.len());
    for &value in axis.values() {
        for &kind in kinds {
            let mut cell = axis.apply(config, value);
            cell.kind = kind;
            rows.push(SweepRow { axis_value: value, kind, summary: run_many(&cell)? });
        }
    }
    Ok(rows)
}

/// Profitability classification of one parameter cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    /// The attack pays under both the plain rule and the mitigation.
    BothProfit,
    /// The attack pays under the plain rule only: the mitigation defuses it.
    OnlyEipProfit,
    /// The attack pays under neither.
    NeitherProfit,
}

impl CellLabel {
    /// Ordering used for monotonicity checks: neither < only-plain < both.
    pub fn rank(&self) -> u8 {
        match self {
            CellLabel::NeitherProfit => 0,
            CellLabel::OnlyEipProfit => 1,
            CellLabel::BothProfit => 2,
        }
    }
}

/// One classified heatmap cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub p_x: f64,
    pub eps_ratio: f64,
    pub label: CellLabel,
    /// Truncated runs across both mechanisms, for reporting.
    pub truncated_runs: u64,
}

/// A mean counts as profitable only when its confidence interval excludes
/// zero from above.
fn profitable(summary: &SimSummary) -> bool {
    summary.mean_excess > summary.ci_half_width
}

/// Classify every (p_x, eps ratio) cell by whether the attack pays under
/// the plain rule and under the geometric mitigation with weight `q`.
pub fn classify_grid(
    p_x_grid: &[f64],
    eps_ratio_grid: &[f64],
    q: f64,
    config: &SimConfig,
) -> Result<Vec<GridCell>, SimError> {
    let mut cells = Vec::with_capacity(p_x_grid.len() * eps_ratio_grid.len());
    for &eps_ratio in eps_ratio_grid {
        for &p_x in p_x_grid {
            let mut cell = *config;
            cell.p_x = p_x;
            cell.demand.eps = eps_ratio * cell.demand.b_star;

            cell.kind = MechanismKind::Eip1559;
            let plain = run_many(&cell)?;
            cell.kind = MechanismKind::GeometricAvg { q };
            let mitigated = run_many(&cell)?;

            let label = match (profitable(&plain), profitable(&mitigated)) {
                (true, true) => CellLabel::BothProfit,
                (true, false) => CellLabel::OnlyEipProfit,
                (false, _) => CellLabel::NeitherProfit,
            };
            cells.push(GridCell {
                p_x,
                eps_ratio,
                label,
                truncated_runs: plain.truncated_runs + mitigated.truncated_runs,
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: MechanismKind, p_x: f64) -> SimConfig {
        let protocol = ProtocolParams::new(0.125, 1.0, 1.0).unwrap();
        let demand = DemandParams::new(1.0, 0.04, 0.5, 0.2).unwrap();
        SimConfig::new(kind, protocol, demand, p_x, 42)
    }

    #[test]
    fn config_validation() {
        let mut c = config(MechanismKind::Eip1559, 0.3);
        c.runs = 0;
        assert_eq!(c.validate().unwrap_err(), SimError::ZeroRuns);
        let mut c = config(MechanismKind::Eip1559, 0.3);
        c.recovery_fraction = 1.0;
        assert!(c.validate().is_err());
        let mut c = config(MechanismKind::Eip1559, 1.5);
        c.p_x = 1.5;
        assert!(c.validate().is_err());
        assert!(config(MechanismKind::GeometricAvg { q: 1.0 }, 0.3).validate().is_err());
    }

    #[test]
    fn lone_empty_block_recovers_in_two_honest_blocks() {
        // p_x = 0 under the plain rule: fee path 1 -> 7/8 -> 63/64 (still
        // short of 0.99) -> 567/512, three blocks in all. X only proposed
        // the opening block, so the attack pays nothing and the honest
        // counterfactual pays one block of steady tips.
        let c = config(MechanismKind::Eip1559, 0.0);
        let o = run_once(&c, 0).unwrap();
        assert_eq!(o.attack_payout, 0.0);
        assert_eq!(o.honest_payout, 0.04);
        assert_eq!(o.blocks_to_recovery, 3);
        assert!(!o.truncated);
    }

    #[test]
    fn certain_proposer_never_recovers() {
        // p_x = 1: X holds the fee at (1 - phi) b* forever; the run is cut
        // off at the block cap and flagged.
        let mut c = config(MechanismKind::Eip1559, 1.0);
        c.max_blocks = 500;
        let o = run_once(&c, 0).unwrap();
        assert!(o.truncated);
        assert_eq!(o.blocks_to_recovery, 500);
        // Every block after the first pays the full reduced-fee tip.
        let tip = 0.125 + 0.5 * 0.04;
        assert!((o.attack_payout - 499.0 * tip).abs() < 1e-9);
        assert_eq!(o.honest_payout, 500.0 * 0.04);
    }

    #[test]
    fn runs_replay_exactly() {
        let c = config(MechanismKind::GeometricAvg { q: 0.5 }, 0.4);
        for i in [0, 1, 17] {
            assert_eq!(run_once(&c, i).unwrap(), run_once(&c, i).unwrap());
        }
        assert_ne!(run_once(&c, 0).unwrap(), run_once(&c, 1).unwrap());
    }

    #[test]
    fn summary_is_deterministic_and_order_independent() {
        let mut c = config(MechanismKind::Eip1559, 0.4);
        c.runs = 300;
        let a = run_many(&c).unwrap();
        let b = run_many(&c).unwrap();
        assert_eq!(a, b);

        // A single-threaded pool must give the same bits as the default.
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| run_many(&c)).unwrap();
        assert_eq!(a, single);
    }

    #[test]
    fn single_run_summary_has_zero_half_width() {
        let mut c = config(MechanismKind::Eip1559, 0.3);
        c.runs = 1;
        let s = run_many(&c).unwrap();
        assert_eq!(s.ci_half_width, 0.0);
        let o = run_once(&c, 0).unwrap();
        assert_eq!(s.mean_excess, o.attack_payout - o.honest_payout);
    }

    #[test]
    fn trajectories_stay_within_the_model_bounds() {
        for kind in [
            MechanismKind::Eip1559,
            MechanismKind::GeometricAvg { q: 0.75 },
            MechanismKind::WindowAvg { window: 4 },
            MechanismKind::FeePool,
        ] {
            let mut c = config(kind, 0.45);
            c.runs = 50;
            for i in 0..c.runs {
                let o = run_once(&c, i).unwrap();
                assert!(o.attack_payout >= 0.0 && o.honest_payout >= 0.0);
                assert!(o.blocks_to_recovery <= c.max_blocks);
                if o.truncated {
                    assert_eq!(o.blocks_to_recovery, c.max_blocks);
                }
            }
        }
    }

    #[test]
    fn pairing_reduces_variance() {
        let mut c = config(MechanismKind::Eip1559, 0.4);
        c.runs = 2_000;
        let outcomes: Vec<RunOutcome> =
            (0..c.runs).map(|i| run_once(&c, i).unwrap()).collect();
        let n = outcomes.len() as f64;
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / n;
        let var = |xs: &[f64]| {
            let m = mean(xs);
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
        };
        let diffs: Vec<f64> =
            outcomes.iter().map(|o| o.attack_payout - o.honest_payout).collect();
        let attacks: Vec<f64> = outcomes.iter().map(|o| o.attack_payout).collect();
        let honests: Vec<f64> = outcomes.iter().map(|o| o.honest_payout).collect();
        assert!(var(&diffs) <= var(&attacks) + var(&honests) + 1e-12);
    }

    #[test]
    fn sweep_shape_and_seed_pairing() {
        let mut c = config(MechanismKind::Eip1559, 0.0);
        c.runs = 60;
        let kinds = [
            MechanismKind::Eip1559,
            MechanismKind::GeometricAvg { q: 0.25 },
            MechanismKind::GeometricAvg { q: 0.5 },
            MechanismKind::GeometricAvg { q: 0.75 },
        ];
        let grid: Vec<f64> = (0..9).map(|i| 0.1 + 0.05 * i as f64).collect();
        let rows = sweep(&c, &SweepAxis::MinerPower(grid), &kinds).unwrap();
        assert_eq!(rows.len(), 36);
        assert_eq!(rows[0].axis_value, rows[3].axis_value);
        assert_eq!(rows[0].kind, MechanismKind::Eip1559);
    }

    #[test]
    fn grid_labels_follow_the_threshold_geometry() {
        let mut c = config(MechanismKind::Eip1559, 0.0);
        c.runs = 400;
        let cells =
            classify_grid(&[0.1, 0.45], &[0.01, 0.1], 0.25, &c).unwrap();
        let find = |p_x: f64, r: f64| {
            cells
                .iter()
                .find(|c| c.p_x == p_x && c.eps_ratio == r)
                .unwrap()
                .label
        };
        // Far below the rationality threshold nothing pays; far above it
        // even the mitigated rule cannot stop the attack.
        assert_eq!(find(0.1, 0.1), CellLabel::NeitherProfit);
        assert_eq!(find(0.45, 0.01), CellLabel::BothProfit);
    }
}
