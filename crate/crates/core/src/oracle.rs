//! Exact solvers by exhaustive enumeration, used to certify the heuristic
//! stages at small scale.
//!
//! Both enumerations are depth-first in user-index order with prefix
//! pruning: interference and constraint load only grow as more users are
//! added, so a violated prefix can never be completed into a feasible
//! solution. Reported optima are therefore true maxima over the full
//! space, and the first maximum found in enumeration order is the
//! lexicographically smallest one.

use serde::Serialize;
use thiserror::Error;

use crate::model::{derive_links, Allocation, ChannelId, Scenario};
use crate::transform::BqcProblem;

/// Default candidate budget for the original (channel-assignment) problem.
pub const DEFAULT_ORIGINAL_BUDGET: u64 = 100_000_000;
/// Default candidate budget for the binary admission problem (2^24).
pub const DEFAULT_BQC_BUDGET: u64 = 1 << 24;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration budget exceeded: {candidates} candidates over budget {budget}")]
    BudgetExceeded { candidates: u128, budget: u64 },
}

/// Outcome of an exhaustive search: the maximum objective, one argmax
/// (lexicographically smallest) and the number of complete candidates
/// evaluated (prefix-pruned subtrees are not counted).
#[derive(Debug, Clone, Serialize)]
pub struct ExactResult<T> {
    pub objective: f64,
    pub argmax: T,
    pub explored: u64,
}

/// Number of complete assignments of the original problem: every user
/// picks one of its channels or stays silent.
pub fn candidate_count_original(scenario: &Scenario) -> u128 {
    scenario
        .users
        .iter()
        .fold(1u128, |acc, u| acc.saturating_mul(u.channel_set.len() as u128 + 1))
}

struct OriginalSearch<'a> {
    scenario: &'a Scenario,
    signal: Vec<f64>,
    /// Accumulated co-channel interference at each currently assigned user.
    interference: Vec<f64>,
    choice: Vec<Option<ChannelId>>,
    /// Journal of overwritten interference values; backtracking restores
    /// rather than subtracts so partial sums stay path-independent.
    undo: Vec<(usize, f64)>,
    best_value: f64,
    best: Vec<Option<ChannelId>>,
    explored: u64,
}

impl<'a> OriginalSearch<'a> {
    fn satisfied(&self, i: usize) -> bool {
        let sinr = self.signal[i] / (self.scenario.noise + self.interference[i]);
        sinr >= self.scenario.users[i].sinr_target
    }

    fn recurse(&mut self, user: usize, revenue: f64) {
        let n = self.scenario.len();
        if user == n {
            self.explored += 1;
            if revenue > self.best_value {
                self.best_value = revenue;
                self.best = self.choice.clone();
            }
            return;
        }
        // Silence first: it precedes any channel in lexicographic order.
        self.choice[user] = None;
        self.recurse(user + 1, revenue);

        for ci in 0..self.scenario.users[user].channel_set.len() {
            let k = self.scenario.users[user].channel_set[ci];
            let mut omega = 0.0;
            for j in 0..user {
                if self.choice[j] == Some(k) {
                    omega += self.scenario.gain(j, user) * self.scenario.users[j].power;
                }
            }
            self.choice[user] = Some(k);
            self.interference[user] = omega;
            if !self.satisfied(user) {
                self.choice[user] = None;
                continue;
            }
            // Charge this transmitter to earlier co-channel users; any of
            // them dropping below target kills the whole subtree.
            let mark = self.undo.len();
            let mut ok = true;
            for j in 0..user {
                if self.choice[j] == Some(k) {
                    self.undo.push((j, self.interference[j]));
                    self.interference[j] +=
                        self.scenario.gain(user, j) * self.scenario.users[user].power;
                    if !self.satisfied(j) {
                        ok = false;
                    }
                }
            }
            if ok {
                self.recurse(user + 1, revenue + self.scenario.users[user].revenue);
            }
            while self.undo.len() > mark {
                let (j, old) = self.undo.pop().unwrap();
                self.interference[j] = old;
            }
            self.choice[user] = None;
        }
    }
}

/// Exhaustive maximum-revenue search over all channel/silence assignments:
/// every user is assigned one of its channels or silence, and every
/// transmitting user must meet its SINR target.
pub fn solve_original_exact(
    scenario: &Scenario,
    budget: u64,
) -> Result<ExactResult<Allocation>, OracleError> {
    let candidates = candidate_count_original(scenario);
    if candidates > budget as u128 {
        return Err(OracleError::BudgetExceeded { candidates, budget });
    }
    let n = scenario.len();
    let links = derive_links(scenario);
    let mut search = OriginalSearch {
        scenario,
        signal: links.signal.clone(),
        interference: vec![0.0; n],
        choice: vec![None; n],
        undo: Vec::new(),
        best_value: f64::NEG_INFINITY,
        best: vec![None; n],
        explored: 0,
    };
    search.recurse(0, 0.0);
    let allocation =
        Allocation::new(scenario, search.best).expect("search only assigns channels from each user's set");
    Ok(ExactResult {
        objective: search.best_value.max(0.0),
        argmax: allocation,
        explored: search.explored,
    })
}

struct BqcSearch<'a> {
    problem: &'a BqcProblem,
    /// Constraint left-hand side for currently admitted users.
    lhs: Vec<f64>,
    x: Vec<bool>,
    /// Journal of overwritten `lhs` values. Backtracking restores the
    /// saved values instead of subtracting, so every partial sum is built
    /// by ascending-index additions only and matches the canonical
    /// feasibility check bit for bit.
    undo: Vec<(usize, f64)>,
    best_value: f64,
    best: Vec<bool>,
    explored: u64,
}

impl<'a> BqcSearch<'a> {
    fn recurse(&mut self, user: usize, revenue: f64) {
        let n = self.problem.len();
        if user == n {
            self.explored += 1;
            if revenue > self.best_value {
                self.best_value = revenue;
                self.best = self.x.clone();
            }
            return;
        }
        // Reject first: lexicographically smaller.
        self.x[user] = false;
        self.recurse(user + 1, revenue);

        if self.problem.forced_zero[user] {
            return;
        }
        let mut own = 1.0;
        for j in 0..user {
            if self.x[j] {
                own += self.problem.coeff(user, j);
            }
        }
        if own > self.problem.capacity[user] as f64 {
            return;
        }
        let mark = self.undo.len();
        let mut ok = true;
        for j in 0..user {
            if self.x[j] {
                self.undo.push((j, self.lhs[j]));
                self.lhs[j] += self.problem.coeff(j, user);
                if self.lhs[j] > self.problem.capacity[j] as f64 {
                    ok = false;
                }
            }
        }
        if ok {
            self.x[user] = true;
            self.lhs[user] = own;
            self.recurse(user + 1, revenue + self.problem.revenue[user]);
            self.x[user] = false;
        }
        while self.undo.len() > mark {
            let (j, old) = self.undo.pop().unwrap();
            self.lhs[j] = old;
        }
    }
}

/// Exhaustive maximum over all feasible admit vectors of the binary
/// quadratic admission problem.
pub fn solve_bqc_exact(
    problem: &BqcProblem,
    budget: u64,
) -> Result<ExactResult<Vec<bool>>, OracleError> {
    let n = problem.len();
    let candidates = if n >= 128 { u128::MAX } else { 1u128 << n };
    if candidates > budget as u128 {
        return Err(OracleError::BudgetExceeded { candidates, budget });
    }
    let mut search = BqcSearch {
        problem,
        lhs: vec![0.0; n],
        x: vec![false; n],
        undo: Vec::new(),
        best_value: f64::NEG_INFINITY,
        best: vec![false; n],
        explored: 0,
    };
    search.recurse(0, 0.0);
    Ok(ExactResult {
        objective: search.best_value.max(0.0),
        argmax: search.best,
        explored: search.explored,
    })
}

/// Number of channel assignments available to the admitted users.
pub fn candidate_count_assignment(scenario: &Scenario, admitted: &[bool]) -> u128 {
    scenario
        .users
        .iter()
        .enumerate()
        .filter(|(i, _)| admitted[*i])
        .fold(1u128, |acc, (_, u)| {
            acc.saturating_mul(u.channel_set.len() as u128)
        })
}

struct AssignmentSearch<'a> {
    scenario: &'a Scenario,
    admitted: Vec<usize>,
    signal: Vec<f64>,
    interference: Vec<f64>,
    choice: Vec<Option<ChannelId>>,
    undo: Vec<(usize, f64)>,
    found: Option<Vec<Option<ChannelId>>>,
    explored: u64,
}

impl<'a> AssignmentSearch<'a> {
    fn satisfied(&self, i: usize) -> bool {
        let sinr = self.signal[i] / (self.scenario.noise + self.interference[i]);
        sinr >= self.scenario.users[i].sinr_target
    }

    fn recurse(&mut self, pos: usize) -> bool {
        if pos == self.admitted.len() {
            self.explored += 1;
            self.found = Some(self.choice.clone());
            return true;
        }
        let user = self.admitted[pos];
        for ci in 0..self.scenario.users[user].channel_set.len() {
            let k = self.scenario.users[user].channel_set[ci];
            let mut omega = 0.0;
            for idx in 0..pos {
                let j = self.admitted[idx];
                if self.choice[j] == Some(k) {
                    omega += self.scenario.gain(j, user) * self.scenario.users[j].power;
                }
            }
            self.choice[user] = Some(k);
            self.interference[user] = omega;
            if !self.satisfied(user) {
                self.choice[user] = None;
                continue;
            }
            let mark = self.undo.len();
            let mut ok = true;
            for idx in 0..pos {
                let j = self.admitted[idx];
                if self.choice[j] == Some(k) {
                    self.undo.push((j, self.interference[j]));
                    self.interference[j] +=
                        self.scenario.gain(user, j) * self.scenario.users[user].power;
                    if !self.satisfied(j) {
                        ok = false;
                    }
                }
            }
            if ok && self.recurse(pos + 1) {
                return true;
            }
            while self.undo.len() > mark {
                let (j, old) = self.undo.pop().unwrap();
                self.interference[j] = old;
            }
            self.choice[user] = None;
        }
        false
    }
}

/// Exhaustive search for a channel assignment that satisfies every
/// admitted user simultaneously; silence is not an option here. Returns
/// the first such assignment in lexicographic order, or `None`.
pub fn find_successful_assignment(
    scenario: &Scenario,
    admitted: &[bool],
    budget: u64,
) -> Result<Option<Allocation>, OracleError> {
    let candidates = candidate_count_assignment(scenario, admitted);
    if candidates > budget as u128 {
        return Err(OracleError::BudgetExceeded { candidates, budget });
    }
    let n = scenario.len();
    let links = derive_links(scenario);
    let mut search = AssignmentSearch {
        scenario,
        admitted: (0..n).filter(|&i| admitted[i]).collect(),
        signal: links.signal.clone(),
        interference: vec![0.0; n],
        choice: vec![None; n],
        undo: Vec::new(),
        found: None,
        explored: 0,
    };
    search.recurse(0);
    match search.found {
        Some(choice) => Ok(Some(
            Allocation::new(scenario, choice).expect("channels drawn from user sets"),
        )),
        None => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evaluate_allocation;
    use crate::test_util::{random_scenario, scenario_from_parts, ChannelMode};
    use crate::transform::{build_equal, build_unequal};
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn single_feasible_user_gets_its_revenue() {
        let s = scenario_from_parts(
            vec![vec![1e-6]],
            vec![1.0],
            vec![2.0],
            vec![3.5],
            vec![vec![1]],
            1e-8,
            1,
        );
        let result = solve_original_exact(&s, DEFAULT_ORIGINAL_BUDGET).unwrap();
        assert_eq!(result.objective, 3.5);
        assert_eq!(result.argmax.channel_of(0), Some(1));
        assert_eq!(result.explored, 2);
    }

    #[test]
    fn disjoint_channel_sets_add_up() {
        let s = scenario_from_parts(
            vec![vec![1e-6, 1e-5], vec![1e-5, 1e-6]],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![1.0, 2.0],
            vec![vec![1], vec![2]],
            1e-8,
            2,
        );
        let result = solve_original_exact(&s, DEFAULT_ORIGINAL_BUDGET).unwrap();
        assert_eq!(result.objective, 3.0);
    }

    #[test]
    fn classic_ten_user_space_is_budget_checked() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let s = random_scenario(&mut rng, 10, 5, ChannelMode::Equal);
        assert_eq!(candidate_count_original(&s), 6u128.pow(10));
        // A small budget must be rejected with the exact candidate count.
        match solve_original_exact(&s, 1_000_000) {
            Err(OracleError::BudgetExceeded { candidates, budget }) => {
                assert_eq!(candidates, 60_466_176);
                assert_eq!(budget, 1_000_000);
            }
            other => panic!("expected budget rejection, got {other:?}"),
        }
    }

    #[test]
    fn original_exact_matches_unpruned_reference() {
        // Independent oracle: enumerate in a different order (channel-major
        // odometer, no pruning) and evaluate each full allocation directly.
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..5 {
            let n = 4;
            let s = random_scenario(&mut rng, n, 3, ChannelMode::Uniform);
            let mut best = 0.0f64;
            let mut counter = vec![0usize; n];
            loop {
                let channels: Vec<Option<usize>> = (0..n)
                    .map(|i| {
                        if counter[i] == 0 {
                            None
                        } else {
                            Some(s.users[i].channel_set[counter[i] - 1])
                        }
                    })
                    .collect();
                let alloc = Allocation::new(&s, channels).unwrap();
                let report = evaluate_allocation(&s, &alloc);
                if report.successful {
                    let revenue: f64 = alloc.transmitting().map(|i| s.users[i].revenue).sum();
                    best = best.max(revenue);
                }
                // Odometer increment from the last position.
                let mut pos = n;
                while pos > 0 {
                    pos -= 1;
                    counter[pos] += 1;
                    if counter[pos] <= s.users[pos].channel_set.len() {
                        break;
                    }
                    counter[pos] = 0;
                    if pos == 0 {
                        pos = usize::MAX;
                        break;
                    }
                }
                if pos == usize::MAX {
                    break;
                }
            }
            let result = solve_original_exact(&s, DEFAULT_ORIGINAL_BUDGET).unwrap();
            assert_eq!(result.objective, best);
        }
    }

    #[test]
    fn bqc_all_zero_coefficients_admit_everyone() {
        let p = BqcProblem::new(
            vec![vec![0.0; 3]; 3],
            vec![1, 1, 1],
            vec![1.0, 2.0, 3.0],
            vec![false; 3],
        );
        let result = solve_bqc_exact(&p, DEFAULT_BQC_BUDGET).unwrap();
        assert_eq!(result.objective, 6.0);
        assert_eq!(result.argmax, vec![true, true, true]);
        assert_eq!(result.explored, 8);
    }

    #[test]
    fn bqc_two_users_with_capacity_two_is_trivial() {
        let p = BqcProblem::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![2, 2],
            vec![1.0, 1.0],
            vec![false; 2],
        );
        let result = solve_bqc_exact(&p, DEFAULT_BQC_BUDGET).unwrap();
        assert_eq!(result.objective, 2.0);
        assert_eq!(result.argmax, vec![true, true]);
    }

    #[test]
    fn bqc_exact_matches_bitmask_reference() {
        // Independent oracle: iterate bitmasks high-to-low and evaluate
        // feasibility through the public constraint check.
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for _ in 0..3 {
            let s = random_scenario(&mut rng, 12, 4, ChannelMode::Uniform);
            let p = build_unequal(&s);
            let mut best = 0.0f64;
            for mask in (0u32..(1 << 12)).rev() {
                let x: Vec<bool> = (0..12).map(|i| mask >> i & 1 == 1).collect();
                if p.is_feasible(&x) {
                    let value: f64 = (0..12).filter(|&i| x[i]).map(|i| p.revenue[i]).sum();
                    best = best.max(value);
                }
            }
            let result = solve_bqc_exact(&p, DEFAULT_BQC_BUDGET).unwrap();
            assert_eq!(result.objective, best);
            assert!(p.is_feasible(&result.argmax));
        }
    }

    #[test]
    fn bqc_respects_forced_zero() {
        let p = BqcProblem::new(
            vec![vec![0.0; 2]; 2],
            vec![1, 1],
            vec![10.0, 1.0],
            vec![true, false],
        );
        let result = solve_bqc_exact(&p, DEFAULT_BQC_BUDGET).unwrap();
        assert_eq!(result.objective, 1.0);
        assert_eq!(result.argmax, vec![false, true]);
    }

    #[test]
    fn bqc_budget_rejection() {
        let p = BqcProblem::new(
            vec![vec![0.0; 30]; 30],
            vec![1; 30],
            vec![1.0; 30],
            vec![false; 30],
        );
        assert!(matches!(
            solve_bqc_exact(&p, DEFAULT_BQC_BUDGET),
            Err(OracleError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn equal_transform_feasible_sets_are_assignable() {
        // Admit vectors feasible under the worst-case transform always
        // admit a satisfying channel assignment.
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..10 {
            let n = rng.random_range(3..7);
            let s = random_scenario(&mut rng, n, 3, ChannelMode::Equal);
            let p = build_equal(&s);
            let best = solve_bqc_exact(&p, DEFAULT_BQC_BUDGET).unwrap();
            let assignment =
                find_successful_assignment(&s, &best.argmax, DEFAULT_ORIGINAL_BUDGET).unwrap();
            assert!(
                assignment.is_some(),
                "admitted set has no satisfying assignment"
            );
            let alloc = assignment.unwrap();
            assert!(evaluate_allocation(&s, &alloc).successful);
        }
    }

    #[test]
    fn bqc_optimum_bounded_by_original_optimum_on_equal_sets() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        for _ in 0..10 {
            let n = rng.random_range(3..7);
            let s = random_scenario(&mut rng, n, 3, ChannelMode::Equal);
            let p = build_equal(&s);
            let bqc = solve_bqc_exact(&p, DEFAULT_BQC_BUDGET).unwrap();
            let original = solve_original_exact(&s, DEFAULT_ORIGINAL_BUDGET).unwrap();
            assert!(
                bqc.objective <= original.objective,
                "transformed optimum {} exceeds true optimum {}",
                bqc.objective,
                original.objective
            );
        }
    }

    #[test]
    fn find_assignment_respects_admitted_subset() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let s = random_scenario(&mut rng, 5, 3, ChannelMode::Equal);
        let admitted = vec![true, false, true, false, false];
        if let Some(alloc) = find_successful_assignment(&s, &admitted, 1_000_000).unwrap() {
            for i in 0..5 {
                assert_eq!(alloc.channel_of(i).is_some(), admitted[i]);
            }
        }
    }
}
