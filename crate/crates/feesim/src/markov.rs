//! Absorbing Markov reward chains and their exact solution.
//!
//! A chain is given by its transient states only: an `n x n` substochastic
//! transition matrix (each row's probability deficit is the chance of
//! absorption from that state) and a per-visit payout for each state. The
//! expected total payout vector `v` satisfies `v = P v + r`, solved here as
//! the dense linear system `(I - P) v = r`.
//!
//! [`enumerate_paths_reward`] walks the same chain forward instead,
//! accumulating probability-weighted payouts over bounded-length paths with
//! a rigorous tail bound. It exists to cross-check the solver and shares no
//! code with it.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MarkovError {
    #[error("transition matrix must be square and match the payout vector")]
    ShapeMismatch,
    #[error("start state {0} out of range")]
    StartOutOfRange(usize),
    #[error("transition probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("row {0} sums to more than 1")]
    RowSumExceedsOne(usize),
    #[error("payouts must be non-negative, got {0}")]
    NegativePayout(f64),
    #[error("state {0} cannot reach absorption; expected reward diverges")]
    NotAbsorbing(usize),
    #[error("linear system is singular")]
    Singular,
    #[error("path enumeration needs every row sum below 1")]
    NoContraction,
    #[error("path enumeration needs max_len >= 1")]
    ZeroLength,
}

/// Transient part of an absorbing Markov reward chain.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain {
    transitions: Vec<Vec<f64>>,
    payouts: Vec<f64>,
    start: usize,
}

// Slack for row sums assembled from float probabilities.
const ROW_SUM_TOL: f64 = 1e-12;

impl AbsorbingChain {
    /// Validates shape, probability ranges, and absorption: every state must
    /// reach, through positive-probability edges, some state with a positive
    /// chance of leaving the transient set.
    pub fn new(
        transitions: Vec<Vec<f64>>,
        payouts: Vec<f64>,
        start: usize,
    ) -> Result<Self, MarkovError> {
        let n = transitions.len();
        if payouts.len() != n || transitions.iter().any(|row| row.len() != n) {
            return Err(MarkovError::ShapeMismatch);
        }
        if start >= n {
            return Err(MarkovError::StartOutOfRange(start));
        }
        for row in &transitions {
            for &p in row {
                if !(0.0..=1.0).contains(&p) {
                    return Err(MarkovError::ProbabilityOutOfRange(p));
                }
            }
        }
        for (i, row) in transitions.iter().enumerate() {
            if row.iter().sum::<f64>() > 1.0 + ROW_SUM_TOL {
                return Err(MarkovError::RowSumExceedsOne(i));
            }
        }
        for &r in &payouts {
            if r < 0.0 {
                return Err(MarkovError::NegativePayout(r));
            }
        }

        // Reachability of a leaky state from every state.
        let leaky: Vec<bool> = transitions
            .iter()
            .map(|row| row.iter().sum::<f64>() < 1.0 - ROW_SUM_TOL)
            .collect();
        let mut can_absorb = leaky.clone();
        loop {
            let mut changed = false;
            for i in 0..n {
                if can_absorb[i] {
                    continue;
                }
                if (0..n).any(|j| transitions[i][j] > 0.0 && can_absorb[j]) {
                    can_absorb[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if let Some(stuck) = can_absorb.iter().position(|&ok| !ok) {
            return Err(MarkovError::NotAbsorbing(stuck));
        }

        Ok(Self { transitions, payouts, start })
    }

    pub fn n(&self) -> usize {
        self.transitions.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.transitions
    }

    pub fn payouts(&self) -> &[f64] {
        &self.payouts
    }

    /// Expected total payout starting from the chain's start state.
    pub fn expected_start_reward(&self) -> Result<f64, MarkovError> {
        Ok(solve_expected_rewards(self)?[self.start])
    }
}

/// Solve `(I - P) v = r` by Gaussian elimination with partial pivoting;
/// `v[i]` is the expected total payout starting from state `i`.
pub fn solve_expected_rewards(chain: &AbsorbingChain) -> Result<Vec<f64>, MarkovError> {
    let n = chain.n();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let identity = if i == j { 1.0 } else { 0.0 };
                    identity - chain.transitions[i][j]
                })
                .collect()
        })
        .collect();
    let mut b = chain.payouts.clone();

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .expect("non-empty pivot range");
        if a[pivot_row][col].abs() < 1e-14 {
            return Err(MarkovError::Singular);
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut v = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for col in row + 1..n {
            acc -= a[row][col] * v[col];
        }
        v[row] = acc / a[row][row];
    }
    Ok(v)
}

/// Forward path-sum oracle: probability-weighted payouts accumulated over
/// all paths of length at most `max_len` from the start state, together
/// with a rigorous bound on the truncated tail.
///
/// With non-negative payouts the first component is a lower bound on the
/// true expectation, and the true value lies within `truncation_bound` of
/// it.
pub fn enumerate_paths_reward(
    chain: &AbsorbingChain,
    max_len: usize,
) -> Result<(f64, f64), MarkovError> {
    if max_len == 0 {
        return Err(MarkovError::ZeroLength);
    }
    let n = chain.n();
    let max_row_sum = chain
        .transitions
        .iter()
        .map(|row| row.iter().sum::<f64>())
        .fold(0.0f64, f64::max);
    if max_row_sum >= 1.0 {
        return Err(MarkovError::NoContraction);
    }
    let max_payout = chain.payouts.iter().fold(0.0f64, |m, &r| m.max(r));

    let mut dist = vec![0.0; n];
    dist[chain.start] = 1.0;
    let mut lower = 0.0;
    for depth in 0..=max_len {
        lower += dist
            .iter()
            .zip(&chain.payouts)
            .map(|(&p, &r)| p * r)
            .sum::<f64>();
        if depth < max_len {
            let mut next = vec![0.0; n];
            for (i, &mass) in dist.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for (j, cell) in next.iter_mut().enumerate() {
                    *cell += mass * chain.transitions[i][j];
                }
            }
            dist = next;
        }
    }
    let bound = max_row_sum.powi(max_len as i32) * max_payout / (1.0 - max_row_sum);
    Ok((lower, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_loop(p: f64, r: f64) -> AbsorbingChain {
        AbsorbingChain::new(vec![vec![p]], vec![r], 0).unwrap()
    }

    #[test]
    fn self_loop_is_a_geometric_series() {
        let chain = single_loop(0.5, 1.0);
        let v = solve_expected_rewards(&chain).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-14);
        let chain = single_loop(0.0, 3.0);
        assert_eq!(solve_expected_rewards(&chain).unwrap()[0], 3.0);
    }

    #[test]
    fn two_state_attack_shape() {
        // Start state pays nothing and leads, with probability p, to a
        // paying self-loop state: v[start] = p * r / (1 - p).
        let p = 0.3;
        let r = 0.145;
        let chain = AbsorbingChain::new(
            vec![vec![0.0, p], vec![0.0, p]],
            vec![0.0, r],
            0,
        )
        .unwrap();
        let v = solve_expected_rewards(&chain).unwrap();
        assert!((v[0] - p * r / (1.0 - p)).abs() < 1e-15);
    }

    #[test]
    fn enumeration_truncates_a_geometric_series() {
        let chain = single_loop(0.5, 1.0);
        let (lower, bound) = enumerate_paths_reward(&chain, 20).unwrap();
        assert!(lower < 2.0);
        assert!((2.0 - lower) <= bound);
        assert!(bound < 2e-6);
    }

    #[test]
    fn enumeration_of_zero_payouts_is_zero() {
        let chain = AbsorbingChain::new(
            vec![vec![0.2, 0.3], vec![0.4, 0.1]],
            vec![0.0, 0.0],
            0,
        )
        .unwrap();
        assert_eq!(enumerate_paths_reward(&chain, 10).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn enumeration_rejects_non_contracting_rows() {
        let chain = AbsorbingChain::new(
            vec![vec![0.5, 0.5], vec![0.0, 0.0]],
            vec![1.0, 1.0],
            0,
        )
        .unwrap();
        assert_eq!(enumerate_paths_reward(&chain, 10).unwrap_err(), MarkovError::NoContraction);
        assert_eq!(enumerate_paths_reward(&chain, 0).unwrap_err(), MarkovError::ZeroLength);
    }

    #[test]
    fn rejects_malformed_chains() {
        assert_eq!(
            AbsorbingChain::new(vec![vec![0.5, 0.5]], vec![1.0], 0).unwrap_err(),
            MarkovError::ShapeMismatch
        );
        assert_eq!(
            AbsorbingChain::new(vec![vec![1.2]], vec![1.0], 0).unwrap_err(),
            MarkovError::ProbabilityOutOfRange(1.2)
        );
        assert_eq!(
            AbsorbingChain::new(vec![vec![0.7, 0.7], vec![0.0, 0.0]], vec![1.0, 1.0], 0)
                .unwrap_err(),
            MarkovError::RowSumExceedsOne(0)
        );
        assert_eq!(
            AbsorbingChain::new(vec![vec![0.5]], vec![-1.0], 0).unwrap_err(),
            MarkovError::NegativePayout(-1.0)
        );
        assert_eq!(
            AbsorbingChain::new(vec![vec![0.5]], vec![1.0], 3).unwrap_err(),
            MarkovError::StartOutOfRange(3)
        );
    }

    #[test]
    fn rejects_closed_communicating_class() {
        // Two states that only feed each other can never absorb.
        let err = AbsorbingChain::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1.0, 1.0],
            0,
        )
        .unwrap_err();
        assert!(matches!(err, MarkovError::NotAbsorbing(_)));
    }

    #[test]
    fn absorption_through_an_intermediate_state_is_accepted() {
        // State 0 is lossless but reaches state 1, which leaks.
        let chain = AbsorbingChain::new(
            vec![vec![0.5, 0.5], vec![0.0, 0.9]],
            vec![1.0, 2.0],
            0,
        );
        assert!(chain.is_ok());
    }

    fn arb_chain() -> impl Strategy<Value = AbsorbingChain> {
        (1usize..5).prop_flat_map(|n| {
            let rows = proptest::collection::vec(
                proptest::collection::vec(0.0f64..1.0, n),
                n,
            );
            let payouts = proptest::collection::vec(0.0f64..10.0, n);
            (rows, payouts, 0..n).prop_map(move |(mut rows, payouts, start)| {
                for row in &mut rows {
                    // Scale rows to sum below 1 so absorption is guaranteed.
                    let sum: f64 = row.iter().sum();
                    let scale = 0.95 / sum.max(1.0);
                    for p in row.iter_mut() {
                        *p *= scale.min(1.0);
                    }
                }
                AbsorbingChain::new(rows, payouts, start).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn solver_and_enumeration_agree(chain in arb_chain()) {
            let v = solve_expected_rewards(&chain).unwrap();
            let (lower, bound) = enumerate_paths_reward(&chain, 60).unwrap();
            prop_assert!((v[chain.start()] - lower).abs() <= bound + 1e-9);
        }

        #[test]
        fn solver_is_permutation_equivariant(chain in arb_chain(), rot in 0usize..4) {
            let n = chain.n();
            let shift = rot % n;
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let mut t = vec![vec![0.0; n]; n];
            let mut r = vec![0.0; n];
            for i in 0..n {
                r[perm[i]] = chain.payouts()[i];
                for j in 0..n {
                    t[perm[i]][perm[j]] = chain.transitions()[i][j];
                }
            }
            let relabeled = AbsorbingChain::new(t, r, perm[chain.start()]).unwrap();
            let v = solve_expected_rewards(&chain).unwrap();
            let w = solve_expected_rewards(&relabeled).unwrap();
            for i in 0..n {
                prop_assert!((v[i] - w[perm[i]]).abs() <= 1e-9 * (1.0 + v[i].abs()));
            }
        }

        #[test]
        fn rewards_scale_linearly_with_payouts(chain in arb_chain(), c in 0.1f64..50.0) {
            let scaled = AbsorbingChain::new(
                chain.transitions().to_vec(),
                chain.payouts().iter().map(|r| r * c).collect(),
                chain.start(),
            ).unwrap();
            let v = solve_expected_rewards(&chain).unwrap();
            let w = solve_expected_rewards(&scaled).unwrap();
            for i in 0..chain.n() {
                prop_assert!((w[i] - c * v[i]).abs() <= 1e-9 * (1.0 + w[i].abs()));
            }
        }
    }
}
