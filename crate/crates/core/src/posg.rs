//! Partially observable stochastic games with deterministic action-driven
//! transitions, state-belief tracking, and per-state opponent-action beliefs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{BeliefProfile, MixedStrategy, NormalFormGame};
use crate::learn::{FilterSpec, StepSchedule, BELIEF_FLOOR};

/// A finite set of stage games linked by a total deterministic transition
/// map, a discount factor, and an optional per-player local signal table.
///
/// Action sets are required to be uniform across states: every stage game
/// shares one action-count vector.
#[derive(Debug, Clone)]
pub struct Posg {
    stage_games: Vec<NormalFormGame>,
    /// transition[state][joint_index] -> next state
    transition: Vec<Vec<usize>>,
    gamma: f64,
    initial_state: usize,
    /// signals[state][player] -> signal index
    signals: Option<Vec<Vec<usize>>>,
    num_signals: usize,
}

/// On-disk representation extending the normal-form game format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosgFile {
    pub players: usize,
    pub actions: Vec<usize>,
    pub states: usize,
    /// payoffs[state][player]: flattened row-major tensor.
    pub payoffs: Vec<Vec<Vec<f64>>>,
    /// (state, joint-action index, next state) triples.
    pub transition: Vec<(usize, usize, usize)>,
    pub gamma: f64,
    pub initial: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<Vec<Vec<usize>>>,
}

impl Posg {
    pub fn new(
        stage_games: Vec<NormalFormGame>,
        transition: Vec<Vec<usize>>,
        gamma: f64,
        initial_state: usize,
        signals: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        if stage_games.is_empty() {
            return Err(Error::Argument("POSG needs at least one state".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Argument("gamma must lie in [0, 1)".into()));
        }
        let counts = stage_games[0].action_counts().to_vec();
        if stage_games.iter().any(|g| g.action_counts() != counts) {
            return Err(Error::Shape("stage games must share one action-count vector".into()));
        }
        let num_states = stage_games.len();
        let num_joints: usize = counts.iter().product();
        if transition.len() != num_states
            || transition.iter().any(|row| row.len() != num_joints)
        {
            return Err(Error::Shape("transition map must be total".into()));
        }
        if transition.iter().flatten().any(|&s| s >= num_states) {
            return Err(Error::Argument("transition target out of range".into()));
        }
        if initial_state >= num_states {
            return Err(Error::Argument("initial state out of range".into()));
        }
        let num_signals = match &signals {
            Some(table) => {
                if table.len() != num_states
                    || table.iter().any(|row| row.len() != counts.len())
                {
                    return Err(Error::Shape("signal table must cover every (state, player)".into()));
                }
                table.iter().flatten().max().map_or(0, |&m| m + 1)
            }
            None => 0,
        };
        Ok(Self {
            stage_games,
            transition,
            gamma,
            initial_state,
            signals,
            num_signals,
        })
    }

    pub fn num_states(&self) -> usize {
        self.stage_games.len()
    }

    pub fn num_players(&self) -> usize {
        self.stage_games[0].num_players()
    }

    pub fn action_counts(&self) -> &[usize] {
        self.stage_games[0].action_counts()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn stage_game(&self, state: usize) -> &NormalFormGame {
        &self.stage_games[state]
    }

    pub fn num_signals(&self) -> usize {
        self.num_signals
    }

    pub fn signal(&self, state: usize, player: usize) -> Option<usize> {
        self.signals.as_ref().map(|t| t[state][player])
    }

    pub fn transition_apply(&self, state: usize, joint: &[usize]) -> Result<usize> {
        if state >= self.num_states() {
            return Err(Error::Argument(format!("state {state} out of range")));
        }
        let idx = self.stage_games[state].joint_index(joint);
        Ok(self.transition[state][idx])
    }

    pub fn next_state(&self, state: usize, joint_idx: usize) -> usize {
        self.transition[state][joint_idx]
    }

    pub fn to_file_repr(&self) -> PosgFile {
        let counts = self.action_counts().to_vec();
        let mut triples = Vec::new();
        for (s, row) in self.transition.iter().enumerate() {
            for (idx, &next) in row.iter().enumerate() {
                triples.push((s, idx, next));
            }
        }
        PosgFile {
            players: self.num_players(),
            actions: counts,
            states: self.num_states(),
            payoffs: self
                .stage_games
                .iter()
                .map(|g| g.to_file_repr().payoffs)
                .collect(),
            transition: triples,
            gamma: self.gamma,
            initial: self.initial_state,
            signals: self.signals.clone(),
        }
    }

    pub fn from_file_repr(file: &PosgFile) -> Result<Self> {
        let num_joints: usize = file.actions.iter().product();
        let stage_games = file
            .payoffs
            .iter()
            .map(|tensors| NormalFormGame::new(file.actions.clone(), tensors.clone()))
            .collect::<Result<Vec<_>>>()?;
        if stage_games.len() != file.states {
            return Err(Error::Shape("`states` disagrees with payoff table length".into()));
        }
        let mut transition = vec![vec![usize::MAX; num_joints]; file.states];
        for &(s, idx, next) in &file.transition {
            if s >= file.states || idx >= num_joints {
                return Err(Error::Argument("transition triple out of range".into()));
            }
            transition[s][idx] = next;
        }
        if transition.iter().flatten().any(|&s| s == usize::MAX) {
            return Err(Error::Shape("transition triples do not cover every (state, joint)".into()));
        }
        Self::new(stage_games, transition, file.gamma, file.initial, file.signals.clone())
    }
}

/// A distribution over states, stored sparsely: only states with positive
/// mass appear, sorted by state index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBelief {
    num_states: usize,
    entries: Vec<(usize, f64)>,
}

impl StateBelief {
    pub fn point(state: usize, num_states: usize) -> Self {
        Self { num_states, entries: vec![(state, 1.0)] }
    }

    pub fn uniform(num_states: usize) -> Self {
        let p = 1.0 / num_states as f64;
        Self { num_states, entries: (0..num_states).map(|s| (s, p)).collect() }
    }

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Argument("state belief must be a distribution".into()));
        }
        let num_states = probs.len();
        let entries = probs
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .collect();
        Ok(Self { num_states, entries })
    }

    fn from_entries(num_states: usize, mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_unstable_by_key(|&(s, _)| s);
        Self { num_states, entries }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Dense probability vector.
    pub fn probs(&self) -> Vec<f64> {
        let mut probs = vec![0.0; self.num_states];
        for &(s, p) in &self.entries {
            probs[s] = p;
        }
        probs
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.entries
            .binary_search_by_key(&state, |&(s, _)| s)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn mode(&self) -> usize {
        self.entries
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|&(s, _)| s)
            .unwrap()
    }

    /// States carrying mass above `threshold`.
    pub fn support(&self, threshold: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries
            .iter()
            .filter(move |&&(_, p)| p > threshold)
            .map(|&(s, p)| (s, p))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Drops mass below `threshold` and renormalizes; keeps the mode if
    /// everything would be dropped.
    pub fn pruned(&self, threshold: f64) -> StateBelief {
        let entries: Vec<(usize, f64)> = self
            .entries
            .iter()
            .copied()
            .filter(|&(_, p)| p >= threshold)
            .collect();
        let sum: f64 = entries.iter().map(|&(_, p)| p).sum();
        if sum <= 0.0 {
            return StateBelief::point(self.mode(), self.num_states);
        }
        let entries = entries.into_iter().map(|(s, p)| (s, p / sum)).collect();
        Self { num_states: self.num_states, entries }
    }

    /// Keeps at most `k` highest-mass states and renormalizes, bounding the
    /// cost of subsequent propagation steps.
    pub fn capped(&self, k: usize) -> StateBelief {
        if self.entries.len() <= k {
            return self.clone();
        }
        let mut entries = self.entries.clone();
        entries.sort_unstable_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        entries.truncate(k);
        let sum: f64 = entries.iter().map(|&(_, p)| p).sum();
        entries.iter_mut().for_each(|e| e.1 /= sum);
        Self::from_entries(self.num_states, entries)
    }
}

/// Result of one state-belief propagation step.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBeliefUpdate {
    pub belief: StateBelief,
    /// True when the local signal contradicted every state and the belief
    /// was reset to uniform.
    pub reset: bool,
}

/// Propagates the state belief through the deterministic transition map,
/// marginalizing over the opponents' filtered action posteriors, then
/// conditions on the local signal as hard evidence.
///
/// `opponent_posteriors[j]` is a distribution over player j's actions; the
/// observer's own slot is ignored (its action is `own_action`).
pub fn state_belief_update(
    posg: &Posg,
    belief: &StateBelief,
    player: usize,
    own_action: usize,
    opponent_posteriors: &BeliefProfile,
    local_signal: Option<usize>,
) -> Result<StateBeliefUpdate> {
    let n = posg.num_players();
    let game = posg.stage_game(0);
    // Joint weights depend only on the posteriors, so compute them once and
    // reuse across every state in the belief support.
    let weighted_joints: Vec<(usize, f64)> = game
        .joint_actions()
        .filter(|joint| joint[player] == own_action)
        .filter_map(|joint| {
            let mut w = 1.0;
            for j in 0..n {
                if j != player {
                    w *= opponent_posteriors.strategy(j).prob(joint[j]);
                }
            }
            (w > 0.0).then(|| (game.joint_index(&joint), w))
        })
        .collect();
    let mut next: HashMap<usize, f64> = HashMap::new();
    for (s, mass) in belief.support(0.0) {
        for &(idx, w) in &weighted_joints {
            let target = posg.next_state(s, idx);
            *next.entry(target).or_insert(0.0) += mass * w;
        }
    }
    if let Some(sig) = local_signal {
        next.retain(|&s, _| posg.signal(s, player) == Some(sig));
    }
    let norm: f64 = next.values().sum();
    if norm <= 0.0 {
        // Contradiction: restart from the least-informative belief that
        // agrees with the current local signal.
        let consistent: Vec<usize> = match local_signal {
            Some(sig) => (0..posg.num_states())
                .filter(|&s| posg.signal(s, player) == Some(sig))
                .collect(),
            None => (0..posg.num_states()).collect(),
        };
        let states = if consistent.is_empty() {
            (0..posg.num_states()).collect()
        } else {
            consistent
        };
        let p = 1.0 / states.len() as f64;
        return Ok(StateBeliefUpdate {
            belief: StateBelief::from_entries(
                posg.num_states(),
                states.into_iter().map(|s| (s, p)).collect(),
            ),
            reset: true,
        });
    }
    let entries = next.into_iter().map(|(s, w)| (s, w / norm)).collect();
    Ok(StateBeliefUpdate {
        belief: StateBelief::from_entries(posg.num_states(), entries),
        reset: false,
    })
}

/// Per-state beliefs about the other agents' actions, stored sparsely and
/// defaulting to uniform for states never yet weighted.
#[derive(Debug, Clone)]
pub struct PerStateBeliefs {
    action_counts: Vec<usize>,
    table: HashMap<usize, BeliefProfile>,
    uniform: BeliefProfile,
}

impl PerStateBeliefs {
    pub fn new(action_counts: Vec<usize>) -> Self {
        let uniform = BeliefProfile::uniform(&action_counts);
        Self { action_counts, table: HashMap::new(), uniform }
    }

    pub fn get(&self, state: usize) -> BeliefProfile {
        self.get_ref(state).clone()
    }

    /// Borrowing lookup; states never updated read as uniform.
    pub fn get_ref(&self, state: usize) -> &BeliefProfile {
        self.table.get(&state).unwrap_or(&self.uniform)
    }

    pub fn set(&mut self, state: usize, profile: BeliefProfile) {
        self.table.insert(state, profile);
    }

    /// Marginal belief about `opponent`'s action under the state belief.
    pub fn marginal(&self, opponent: usize, state_belief: &StateBelief) -> MixedStrategy {
        let n = self.action_counts[opponent];
        let mut probs = vec![0.0; n];
        let mut total = 0.0;
        for (s, mass) in state_belief.support(0.0) {
            let profile = self.get_ref(s);
            for a in 0..n {
                probs[a] += mass * profile.strategy(opponent).prob(a);
            }
            total += mass;
        }
        if total <= 0.0 {
            return MixedStrategy::uniform(n);
        }
        probs.iter_mut().for_each(|p| *p /= total);
        MixedStrategy::from_unchecked(probs)
    }
}

/// Responsibility-weighted belief revision: every state in the belief's
/// support steps its opponent-action beliefs with effective step size
/// alpha^(t+1) * beta(state). States believed impossible are unchanged.
pub fn per_state_belief_update(
    beliefs: &mut PerStateBeliefs,
    state_belief: &StateBelief,
    observed_joint: &[usize],
    agent: usize,
    filter: &FilterSpec,
    schedule: &StepSchedule,
    t: u64,
) -> Result<()> {
    let alpha = schedule.step_size(t + 1)?;
    let num_players = beliefs.action_counts.len();
    for (s, mass) in state_belief.support(0.0) {
        let effective = alpha * mass;
        if effective == 0.0 {
            continue;
        }
        let mut profile = beliefs.get(s);
        for j in 0..num_players {
            if j == agent {
                continue;
            }
            let prior = profile.strategy(j);
            let target = filter.posterior(prior, observed_joint[j], prior.len())?;
            *profile.strategy_mut(j) = prior.step_toward(&target, effective).floored(BELIEF_FLOOR);
        }
        beliefs.set(s, profile);
    }
    Ok(())
}
