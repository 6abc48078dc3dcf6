//! Finite normal-form games, mixed strategies, best-response families,
//! potential functions, and equilibrium analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIMPLEX_TOL: f64 = 1e-9;

/// A finite n-player game given by one payoff tensor per player.
///
/// Payoff tensors are stored flattened row-major with the last player's
/// action index varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    action_counts: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
}

/// On-disk representation used by the CLI `--game` flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    pub players: usize,
    pub actions: Vec<usize>,
    pub payoffs: Vec<Vec<f64>>,
}

impl NormalFormGame {
    pub fn new(action_counts: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if action_counts.is_empty() {
            return Err(Error::Argument("game needs at least one player".into()));
        }
        if action_counts.iter().any(|&c| c == 0) {
            return Err(Error::Argument("every player needs at least one action".into()));
        }
        if payoffs.len() != action_counts.len() {
            return Err(Error::Shape(format!(
                "expected {} payoff tensors, got {}",
                action_counts.len(),
                payoffs.len()
            )));
        }
        let size: usize = action_counts.iter().product();
        for (i, tensor) in payoffs.iter().enumerate() {
            if tensor.len() != size {
                return Err(Error::Shape(format!(
                    "player {i} payoff tensor has {} entries, expected {size}",
                    tensor.len()
                )));
            }
            if tensor.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument(format!("player {i} has a non-finite payoff")));
            }
        }
        Ok(Self { action_counts, payoffs })
    }

    pub fn from_file_repr(file: &GameFile) -> Result<Self> {
        if file.players != file.actions.len() {
            return Err(Error::Shape(format!(
                "`players` is {} but `actions` lists {} counts",
                file.players,
                file.actions.len()
            )));
        }
        Self::new(file.actions.clone(), file.payoffs.clone())
    }

    pub fn to_file_repr(&self) -> GameFile {
        GameFile {
            players: self.num_players(),
            actions: self.action_counts.clone(),
            payoffs: self.payoffs.clone(),
        }
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.action_counts[player]
    }

    pub fn joint_index(&self, joint: &[usize]) -> usize {
        debug_assert_eq!(joint.len(), self.action_counts.len());
        joint
            .iter()
            .zip(&self.action_counts)
            .fold(0, |idx, (&a, &count)| {
                debug_assert!(a < count);
                idx * count + a
            })
    }

    pub fn payoff(&self, player: usize, joint: &[usize]) -> f64 {
        self.payoffs[player][self.joint_index(joint)]
    }

    /// Payoff lookup by precomputed joint index (see [`Self::joint_index`]).
    pub fn payoff_indexed(&self, player: usize, joint_index: usize) -> f64 {
        self.payoffs[player][joint_index]
    }

    pub fn payoff_range(&self, player: usize) -> f64 {
        let t = &self.payoffs[player];
        let max = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = t.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Enumerates all joint pure actions in row-major order.
    pub fn joint_actions(&self) -> JointActionIter {
        JointActionIter::new(self.action_counts.clone())
    }

    fn check_profile(&self, profile: &BeliefProfile) -> Result<()> {
        if profile.strategies.len() != self.num_players() {
            return Err(Error::Shape(format!(
                "profile has {} strategies for a {}-player game",
                profile.strategies.len(),
                self.num_players()
            )));
        }
        for (i, s) in profile.strategies.iter().enumerate() {
            if s.probs.len() != self.action_counts[i] {
                return Err(Error::Shape(format!(
                    "player {i} strategy has {} entries, expected {}",
                    s.probs.len(),
                    self.action_counts[i]
                )));
            }
        }
        Ok(())
    }

    /// Expected reward of the mixed extension under an independent joint lottery.
    pub fn expected_reward(&self, profile: &BeliefProfile, player: usize) -> Result<f64> {
        self.check_profile(profile)?;
        let mut total = 0.0;
        for joint in self.joint_actions() {
            let mut prob = 1.0;
            for (j, &a) in joint.iter().enumerate() {
                prob *= profile.strategies[j].probs[a];
            }
            if prob != 0.0 {
                total += prob * self.payoff(player, &joint);
            }
        }
        Ok(total)
    }

    /// Expected reward to `player` of the pure action `action`, with everyone
    /// else playing their strategy from `profile` (the player's own entry in
    /// the profile is ignored).
    pub fn action_value(&self, player: usize, action: usize, profile: &BeliefProfile) -> Result<f64> {
        self.check_profile(profile)?;
        let mut total = 0.0;
        for joint in self.joint_actions() {
            if joint[player] != action {
                continue;
            }
            let mut prob = 1.0;
            for (j, &a) in joint.iter().enumerate() {
                if j != player {
                    prob *= profile.strategies[j].probs[a];
                }
            }
            if prob != 0.0 {
                total += prob * self.payoff(player, &joint);
            }
        }
        Ok(total)
    }

    /// Pure actions achieving the maximal expected reward against `profile`.
    pub fn best_response(&self, player: usize, profile: &BeliefProfile) -> Result<Vec<usize>> {
        self.delta_best_response(player, profile, 0.0)
    }

    /// All pure actions within `delta` of the maximal expected reward.
    pub fn delta_best_response(
        &self,
        player: usize,
        profile: &BeliefProfile,
        delta: f64,
    ) -> Result<Vec<usize>> {
        if delta < 0.0 {
            return Err(Error::Argument("delta must be nonnegative".into()));
        }
        let values: Vec<f64> = (0..self.num_actions(player))
            .map(|a| self.action_value(player, a, profile))
            .collect::<Result<_>>()?;
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // Ties at the max are resolved by membership within a strict numeric
        // tolerance so that exactly-equal payoffs land in the set.
        let tol = delta.max(SIMPLEX_TOL);
        Ok((0..values.len()).filter(|&a| values[a] >= max - tol).collect())
    }

    /// The mixed strategy spreading 1−eps uniformly over the best-response
    /// set and eps uniformly over the remaining actions.
    pub fn epsilon_best_response(
        &self,
        player: usize,
        profile: &BeliefProfile,
        eps: f64,
    ) -> Result<MixedStrategy> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Argument("eps must lie in [0, 1]".into()));
        }
        let br = self.best_response(player, profile)?;
        let n = self.num_actions(player);
        if eps > 0.0 && br.len() == n {
            return Err(Error::DegenerateDenominator);
        }
        let mut probs = vec![0.0; n];
        if br.len() < n {
            let off = eps / (n - br.len()) as f64;
            probs.iter_mut().for_each(|p| *p = off);
        }
        let on = (1.0 - eps) / br.len() as f64;
        for &a in &br {
            probs[a] = on;
        }
        MixedStrategy::new(probs)
    }

    /// Exhaustive enumeration of pure Nash equilibria with strictness flags.
    pub fn pure_nash(&self) -> Vec<PureEquilibrium> {
        let mut out = Vec::new();
        'outer: for joint in self.joint_actions() {
            let mut strict = true;
            for player in 0..self.num_players() {
                let here = self.payoff(player, &joint);
                let mut dev = joint.clone();
                for a in 0..self.num_actions(player) {
                    if a == joint[player] {
                        continue;
                    }
                    dev[player] = a;
                    let gain = self.payoff(player, &dev) - here;
                    if gain > SIMPLEX_TOL {
                        continue 'outer;
                    }
                    if gain >= -SIMPLEX_TOL {
                        strict = false;
                    }
                }
            }
            out.push(PureEquilibrium { joint, strict });
        }
        out
    }

    /// True iff no player has a pure deviation improving by more than `tol`.
    pub fn is_nash(&self, profile: &BeliefProfile, tol: f64) -> Result<bool> {
        self.check_profile(profile)?;
        for player in 0..self.num_players() {
            let current = self.expected_reward(profile, player)?;
            for a in 0..self.num_actions(player) {
                if self.action_value(player, a, profile)? > current + tol {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Reconstructs a potential function by integrating reward differences
    /// along single-coordinate paths from the all-zeros joint action, then
    /// verifies every unilateral-deviation constraint exhaustively.
    ///
    /// Failure is a value carrying a witness edge, not an error.
    pub fn potential_reconstruct(&self) -> std::result::Result<PotentialFunction, PotentialWitness> {
        let size: usize = self.action_counts.iter().product();
        let mut values = vec![0.0; size];
        for joint in self.joint_actions() {
            // Path: flip coordinates one at a time, player 0 first.
            let mut prev = vec![0usize; self.num_players()];
            let mut acc = 0.0;
            for (player, &a) in joint.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let mut next = prev.clone();
                next[player] = a;
                acc += self.payoff(player, &next) - self.payoff(player, &prev);
                prev = next;
            }
            values[self.joint_index(&joint)] = acc;
        }
        // Exhaustive verification of P(a_i, a_-i) - P(a_i', a_-i) = r_i diff.
        for joint in self.joint_actions() {
            for player in 0..self.num_players() {
                let mut dev = joint.clone();
                for a in 0..self.num_actions(player) {
                    if a == joint[player] {
                        continue;
                    }
                    dev[player] = a;
                    let dp = values[self.joint_index(&joint)] - values[self.joint_index(&dev)];
                    let dr = self.payoff(player, &joint) - self.payoff(player, &dev);
                    if (dp - dr).abs() > SIMPLEX_TOL {
                        return Err(PotentialWitness {
                            player,
                            from: dev,
                            to: joint,
                            potential_diff: dp,
                            reward_diff: dr,
                        });
                    }
                    dev[player] = joint[player];
                }
            }
        }
        Ok(PotentialFunction {
            action_counts: self.action_counts.clone(),
            values,
        })
    }

    /// Smallest p such that every player's equilibrium action stays a best
    /// response against any joint belief placing mass ≥ p on the others'
    /// equilibrium actions. Adversarial beliefs range over joint (possibly
    /// correlated) distributions, so checking opponent-action vertices is exact.
    pub fn min_p_dominance(&self, equilibrium: &[usize]) -> Result<PDominanceReport> {
        let is_ne = self
            .pure_nash()
            .iter()
            .any(|e| e.joint == equilibrium);
        if !is_ne {
            return Err(Error::Argument("supplied joint action is not a pure NE".into()));
        }
        let mut min_p: f64 = 0.0;
        let mut constraints: Vec<(usize, usize, Vec<usize>, f64)> = Vec::new();
        for player in 0..self.num_players() {
            let eq_own = equilibrium[player];
            // g_star: payoff edge at the equilibrium vertex.
            for dev in 0..self.num_actions(player) {
                if dev == eq_own {
                    continue;
                }
                let mut at_eq = equilibrium.to_vec();
                let g_star = {
                    at_eq[player] = eq_own;
                    let top = self.payoff(player, &at_eq);
                    at_eq[player] = dev;
                    let bottom = self.payoff(player, &at_eq);
                    top - bottom
                };
                // Opponent-action vertices other than the equilibrium profile.
                for vertex in self.opponent_vertices(player) {
                    if Self::matches_opponents(&vertex, equilibrium, player) {
                        continue;
                    }
                    let mut joint = vertex.clone();
                    joint[player] = eq_own;
                    let top = self.payoff(player, &joint);
                    joint[player] = dev;
                    let bottom = self.payoff(player, &joint);
                    let g = top - bottom;
                    let critical = if g >= 0.0 {
                        0.0
                    } else if g_star - g <= 0.0 {
                        1.0
                    } else {
                        ((-g) / (g_star - g)).clamp(0.0, 1.0)
                    };
                    if critical > min_p {
                        min_p = critical;
                    }
                    constraints.push((player, dev, vertex, critical));
                }
            }
        }
        let binding = constraints
            .into_iter()
            .filter(|(_, _, _, c)| (c - min_p).abs() <= 1e-12 && min_p > 0.0)
            .map(|(player, deviation, vertex, _)| BindingConstraint {
                player,
                deviation,
                opponent_joint: vertex,
            })
            .collect();
        Ok(PDominanceReport {
            equilibrium: equilibrium.to_vec(),
            min_p,
            binding_constraints: binding,
        })
    }

    fn opponent_vertices(&self, player: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for joint in self.joint_actions() {
            if joint[player] == 0 {
                out.push(joint);
            }
        }
        out
    }

    fn matches_opponents(a: &[usize], b: &[usize], skip: usize) -> bool {
        a.iter()
            .zip(b)
            .enumerate()
            .all(|(j, (x, y))| j == skip || x == y)
    }
}

/// Noise level below which GWFP keeps converging to a p-dominant NE:
/// 1 − p^{1/(N−1)}.
pub fn gwfp_noise_threshold(p: f64, num_players: usize) -> Result<f64> {
    if num_players < 2 {
        return Err(Error::Argument("threshold needs at least 2 players".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument("p must lie in [0, 1]".into()));
    }
    Ok(1.0 - p.powf(1.0 / (num_players as f64 - 1.0)))
}

pub struct JointActionIter {
    counts: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl JointActionIter {
    fn new(counts: Vec<usize>) -> Self {
        let current = Some(vec![0; counts.len()]);
        Self { counts, current }
    }
}

impl Iterator for JointActionIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.current.clone()?;
        // Advance, last coordinate fastest.
        let mut next = current.clone();
        let mut pos = self.counts.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            next[pos] += 1;
            if next[pos] < self.counts[pos] {
                self.current = Some(next);
                break;
            }
            next[pos] = 0;
        }
        Some(current)
    }
}

/// A probability distribution over one player's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !(0.0..=1.0 + SIMPLEX_TOL).contains(&p)) {
            return Err(Error::Argument("strategy entries must lie in [0, 1]".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Argument(format!("strategy sums to {sum}, expected 1")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn pure(action: usize, n: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[action] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, action: usize) -> f64 {
        self.probs[action]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// L∞ distance to another strategy over the same action set.
    pub fn linf_distance(&self, other: &MixedStrategy) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// L1 distance to another strategy over the same action set.
    pub fn l1_distance(&self, other: &MixedStrategy) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Convex step toward `target`: (1−alpha)·self + alpha·target.
    pub fn step_toward(&self, target: &MixedStrategy, alpha: f64) -> MixedStrategy {
        let probs = self
            .probs
            .iter()
            .zip(&target.probs)
            .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
            .collect();
        MixedStrategy { probs }
    }

    /// Clamps entries to at least `floor` and renormalizes.
    pub fn floored(&self, floor: f64) -> MixedStrategy {
        let mut probs: Vec<f64> = self.probs.iter().map(|&p| p.max(floor)).collect();
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        MixedStrategy { probs }
    }

    pub(crate) fn from_unchecked(probs: Vec<f64>) -> MixedStrategy {
        MixedStrategy { probs }
    }
}

/// One mixed strategy per player in the game.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefProfile {
    strategies: Vec<MixedStrategy>,
}

impl BeliefProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Self {
        Self { strategies }
    }

    pub fn uniform(action_counts: &[usize]) -> Self {
        Self {
            strategies: action_counts.iter().map(|&n| MixedStrategy::uniform(n)).collect(),
        }
    }

    pub fn pure(joint: &[usize], action_counts: &[usize]) -> Self {
        Self {
            strategies: joint
                .iter()
                .zip(action_counts)
                .map(|(&a, &n)| MixedStrategy::pure(a, n))
                .collect(),
        }
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.strategies
    }

    pub fn strategy(&self, player: usize) -> &MixedStrategy {
        &self.strategies[player]
    }

    pub fn strategy_mut(&mut self, player: usize) -> &mut MixedStrategy {
        &mut self.strategies[player]
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureEquilibrium {
    pub joint: Vec<usize>,
    pub strict: bool,
}

/// A potential function over joint actions, canonicalized so the value at
/// the all-zeros joint action is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFunction {
    action_counts: Vec<usize>,
    values: Vec<f64>,
}

impl PotentialFunction {
    pub fn value(&self, joint: &[usize]) -> f64 {
        let idx = joint
            .iter()
            .zip(&self.action_counts)
            .fold(0, |idx, (&a, &count)| idx * count + a);
        self.values[idx]
    }

    /// Joint pure actions that are local maxima under unilateral deviations.
    pub fn local_maxima(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        'outer: for joint in JointActionIter::new(self.action_counts.clone()) {
            let here = self.value(&joint);
            let mut dev = joint.clone();
            for (player, &count) in self.action_counts.iter().enumerate() {
                for a in 0..count {
                    if a == joint[player] {
                        continue;
                    }
                    dev[player] = a;
                    if self.value(&dev) > here + SIMPLEX_TOL {
                        continue 'outer;
                    }
                }
                dev[player] = joint[player];
            }
            out.push(joint);
        }
        out
    }
}

/// Witness for a game that admits no potential: a unilateral deviation whose
/// reward difference cannot be matched by any potential built from the
/// all-zeros anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialWitness {
    pub player: usize,
    pub from: Vec<usize>,
    pub to: Vec<usize>,
    pub potential_diff: f64,
    pub reward_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BindingConstraint {
    pub player: usize,
    pub deviation: usize,
    pub opponent_joint: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PDominanceReport {
    pub equilibrium: Vec<usize>,
    pub min_p: f64,
    pub binding_constraints: Vec<BindingConstraint>,
}
