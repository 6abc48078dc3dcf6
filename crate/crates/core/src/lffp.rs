//! Depth-limited online lookahead over state beliefs, mixing optimal and
//! optimistic node evaluations with annealed optimism, plus the full
//! learning loop for POSGs under perturbed action observations.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ObservationChannel;
use crate::error::{Error, Result};
use crate::game::BeliefProfile;
use crate::learn::{FilterSpec, StepSchedule};
use crate::posg::{
    per_state_belief_update, state_belief_update, PerStateBeliefs, Posg, StateBelief,
};
use crate::rng::{purpose, substream};

/// How the planner consumes the tracked state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateMode {
    /// Root value is the belief-weighted mixture of per-state evaluations.
    Distribution,
    /// Root is the belief's mode.
    PointEstimate,
}

#[derive(Debug, Clone)]
pub struct LffpConfig {
    pub depth: usize,
    pub xi0: f64,
    pub filter: FilterSpec,
    pub schedule: StepSchedule,
    pub state_mode: StateMode,
    /// Force xi to 0 (pure optimal planning) regardless of xi0 and t.
    pub force_greedy: bool,
    /// Stop revising opponent-action beliefs (state tracking still runs).
    pub freeze_learning: bool,
}

impl LffpConfig {
    pub fn new(depth: usize, xi0: f64, filter: FilterSpec, schedule: StepSchedule) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Argument("lookahead depth must be at least 1".into()));
        }
        if xi0 < 0.0 {
            return Err(Error::Argument("xi0 must be nonnegative".into()));
        }
        Ok(Self {
            depth,
            xi0,
            filter,
            schedule,
            state_mode: StateMode::PointEstimate,
            force_greedy: false,
            freeze_learning: false,
        })
    }
}

/// Exploration weight at iteration t: min(1, xi0 / sqrt(t)).
pub fn xi_schedule(xi0: f64, t: u64) -> f64 {
    (xi0 / (t as f64).sqrt()).min(1.0)
}

/// One optimal backup: max over own actions of the expected reward under the
/// state's opponent beliefs plus the discounted child value. `child_values`
/// is indexed by state and ignored at d = 0 (myopic leaf).
pub fn v_star(
    posg: &Posg,
    d: usize,
    state: usize,
    agent: usize,
    stage_beliefs: &BeliefProfile,
    child_values: &[f64],
) -> f64 {
    let game = posg.stage_game(state);
    let gamma = posg.gamma();
    let mut best = f64::NEG_INFINITY;
    for own in 0..game.num_actions(agent) {
        let mut value = 0.0;
        for joint in game.joint_actions() {
            if joint[agent] != own {
                continue;
            }
            let mut w = 1.0;
            for (j, &a) in joint.iter().enumerate() {
                if j != agent {
                    w *= stage_beliefs.strategy(j).prob(a);
                }
            }
            if w == 0.0 {
                continue;
            }
            let mut q = game.payoff(agent, &joint);
            if d > 0 {
                q += gamma * child_values[posg.next_state(state, game.joint_index(&joint))];
            }
            value += w * q;
        }
        best = best.max(value);
    }
    best
}

/// One optimistic backup: max over own actions and opponent joint actions of
/// the reward plus the discounted child value.
pub fn v_opt(posg: &Posg, d: usize, state: usize, agent: usize, child_values: &[f64]) -> f64 {
    let game = posg.stage_game(state);
    let gamma = posg.gamma();
    let mut best = f64::NEG_INFINITY;
    for joint in game.joint_actions() {
        let mut q = game.payoff(agent, &joint);
        if d > 0 {
            q += gamma * child_values[posg.next_state(state, game.joint_index(&joint))];
        }
        best = best.max(q);
    }
    best
}

struct TreeEval<'a> {
    posg: &'a Posg,
    beliefs: &'a PerStateBeliefs,
    agent: usize,
    xi: f64,
    /// All joint actions with their flat indices; every stage game shares the
    /// same action sets.
    joints: Vec<(Vec<usize>, usize)>,
    memo: HashMap<(usize, usize), f64>,
}

impl<'a> TreeEval<'a> {
    fn new(posg: &'a Posg, beliefs: &'a PerStateBeliefs, agent: usize, xi: f64) -> Self {
        let game = posg.stage_game(0);
        let joints = game
            .joint_actions()
            .map(|j| {
                let idx = game.joint_index(&j);
                (j, idx)
            })
            .collect();
        Self { posg, beliefs, agent, xi, joints, memo: HashMap::new() }
    }

    /// Value of a non-root node with `d` remaining steps. One xi draw per
    /// distinct (d, state) node per build; leaves are myopic optimal.
    fn value<R: Rng>(&mut self, d: usize, state: usize, rng: &mut R) -> f64 {
        if let Some(&v) = self.memo.get(&(d, state)) {
            return v;
        }
        let posg = self.posg;
        let game = posg.stage_game(state);
        let gamma = posg.gamma();
        let agent = self.agent;
        let optimistic = d > 0 && self.xi > 0.0 && rng.gen::<f64>() < self.xi;
        let v = if optimistic {
            let mut best = f64::NEG_INFINITY;
            for k in 0..self.joints.len() {
                let idx = self.joints[k].1;
                let next = posg.next_state(state, idx);
                let q = game.payoff_indexed(agent, idx) + gamma * self.value(d - 1, next, rng);
                best = best.max(q);
            }
            best
        } else {
            let num_own = game.num_actions(agent);
            let mut values = vec![0.0; num_own];
            for k in 0..self.joints.len() {
                let idx = self.joints[k].1;
                let (own, w) = {
                    let joint = &self.joints[k].0;
                    let stage_beliefs = self.beliefs.get_ref(state);
                    let mut w = 1.0;
                    for (j, &a) in joint.iter().enumerate() {
                        if j != agent {
                            w *= stage_beliefs.strategy(j).prob(a);
                        }
                    }
                    (joint[agent], w)
                };
                if w == 0.0 {
                    continue;
                }
                let mut q = game.payoff_indexed(agent, idx);
                if d > 0 {
                    let next = posg.next_state(state, idx);
                    q += gamma * self.value(d - 1, next, rng);
                }
                values[own] += w * q;
            }
            values.into_iter().fold(f64::NEG_INFINITY, f64::max)
        };
        self.memo.insert((d, state), v);
        v
    }
}

/// Builds the depth-limited tree over the tracked state and returns the own
/// action maximizing the root optimal backup. Internal nodes randomize
/// between optimal and optimistic evaluation with probability xi; the root
/// never randomizes. Ties at the root break by a seeded uniform draw.
pub fn select_action<R: Rng>(
    posg: &Posg,
    tracking: &StateBelief,
    beliefs: &PerStateBeliefs,
    agent: usize,
    config: &LffpConfig,
    t: u64,
    xi_rng: &mut R,
    tie_rng: &mut R,
) -> usize {
    let xi = if config.force_greedy {
        0.0
    } else {
        xi_schedule(config.xi0, t.max(1))
    };
    let mut tree = TreeEval::new(posg, beliefs, agent, xi);

    let root_states: Vec<(usize, f64)> = match config.state_mode {
        StateMode::PointEstimate => vec![(tracking.mode(), 1.0)],
        StateMode::Distribution => tracking.support(0.0).collect(),
    };

    let num_own = posg.action_counts()[agent];
    let mut action_values = vec![0.0; num_own];
    for &(state, mass) in &root_states {
        let game = posg.stage_game(state);
        for k in 0..tree.joints.len() {
            let idx = tree.joints[k].1;
            let (own, w) = {
                let joint = &tree.joints[k].0;
                let stage_beliefs = beliefs.get_ref(state);
                let mut w = 1.0;
                for (j, &a) in joint.iter().enumerate() {
                    if j != agent {
                        w *= stage_beliefs.strategy(j).prob(a);
                    }
                }
                (joint[agent], w)
            };
            if w == 0.0 {
                continue;
            }
            let next = posg.next_state(state, idx);
            let q = game.payoff_indexed(agent, idx)
                + posg.gamma() * tree.value(config.depth - 1, next, xi_rng);
            action_values[own] += mass * w * q;
        }
    }

    let max = action_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..num_own)
        .filter(|&a| action_values[a] >= max - 1e-9)
        .collect();
    ties[tie_rng.gen_range(0..ties.len())]
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: u64,
    pub steps_elapsed: u64,
    pub team_reward: f64,
}

/// One environment step: the true state, the joint action played, and the
/// immediate team reward.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub t: u64,
    pub episode: u64,
    pub state: usize,
    pub joint: Vec<usize>,
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct LffpTrace {
    pub episodes: Vec<EpisodeRow>,
    pub steps: Vec<StepRow>,
    /// Count of state-belief uniform resets across all agents.
    pub belief_resets: u64,
}

impl LffpTrace {
    pub fn mean_episode_reward(&self) -> f64 {
        let n = self.episodes.len().max(1) as f64;
        self.episodes.iter().map(|e| e.team_reward).sum::<f64>() / n
    }

    /// Mean team reward over the final quartile of episodes.
    pub fn final_quartile_reward(&self) -> f64 {
        let n = self.episodes.len();
        let start = n - (n / 4).max(1);
        let tail = &self.episodes[start..];
        tail.iter().map(|e| e.team_reward).sum::<f64>() / tail.len() as f64
    }
}

const STATE_BELIEF_PRUNE: f64 = 1e-6;
/// Upper bound on tracked-state support, bounding per-step propagation cost.
const STATE_BELIEF_CAP: usize = 256;

struct AgentRuntime {
    state_belief: StateBelief,
    beliefs: PerStateBeliefs,
    channel_rng: rand_chacha::ChaCha12Rng,
    tie_rng: rand_chacha::ChaCha12Rng,
    xi_rng: rand_chacha::ChaCha12Rng,
}

/// Runs episodes of `episode_horizon` steps from the initial state until
/// `total_steps` elapse. Each step every agent plans with `select_action`,
/// the true joint action drives the environment, and each agent updates its
/// state tracking and opponent beliefs from its own perturbed observations.
///
/// With an identity filter this is the LGWFP baseline; with a Bayes filter
/// it is LFFP.
pub fn run_lffp(
    posg: &Posg,
    true_eps: f64,
    config: &LffpConfig,
    total_steps: u64,
    episode_horizon: u64,
    seed: u64,
) -> Result<LffpTrace> {
    if episode_horizon == 0 || total_steps < episode_horizon {
        return Err(Error::Argument("need total_steps >= episode_horizon >= 1".into()));
    }
    let n = posg.num_players();
    let counts = posg.action_counts().to_vec();
    let channel = ObservationChannel::new(true_eps, counts.clone())?;

    let mut agents: Vec<AgentRuntime> = (0..n)
        .map(|i| AgentRuntime {
            state_belief: StateBelief::point(posg.initial_state(), posg.num_states()),
            beliefs: PerStateBeliefs::new(counts.clone()),
            channel_rng: substream(seed, &[i as u64, purpose::CHANNEL]),
            tie_rng: substream(seed, &[i as u64, purpose::TIE_BREAK]),
            xi_rng: substream(seed, &[i as u64, purpose::XI_DRAW]),
        })
        .collect();

    let mut trace = LffpTrace { episodes: Vec::new(), steps: Vec::new(), belief_resets: 0 };
    let num_episodes = (total_steps / episode_horizon).max(1);
    let mut t: u64 = 1;
    for episode in 0..num_episodes {
        let mut state = posg.initial_state();
        for agent in agents.iter_mut() {
            agent.state_belief = StateBelief::point(posg.initial_state(), posg.num_states());
        }
        let mut episode_reward = 0.0;
        for _ in 0..episode_horizon {
            let joint: Vec<usize> = (0..n)
                .map(|i| {
                    let a = &mut agents[i];
                    // Split borrows: beliefs read-only, rngs mutable.
                    let (belief, tracking) = (&a.beliefs, &a.state_belief);
                    let mut xi_rng = a.xi_rng.clone();
                    let mut tie_rng = a.tie_rng.clone();
                    let action = select_action(
                        posg, tracking, belief, i, config, t, &mut xi_rng, &mut tie_rng,
                    );
                    a.xi_rng = xi_rng;
                    a.tie_rng = tie_rng;
                    action
                })
                .collect();

            let reward = posg.stage_game(state).payoff(0, &joint);
            episode_reward += reward;
            trace.steps.push(StepRow { t, episode, state, joint: joint.clone(), reward });
            let next_state = posg.transition_apply(state, &joint)?;

            for (i, agent) in agents.iter_mut().enumerate() {
                let mut observed = joint.clone();
                for j in 0..n {
                    if j != i {
                        observed[j] = channel.perturb_component(j, joint[j], &mut agent.channel_rng);
                    }
                }
                // Posteriors for state tracking use the belief marginal over
                // the tracked state as the prior.
                let posteriors = BeliefProfile::new(
                    (0..n)
                        .map(|j| {
                            if j == i {
                                Ok(crate::game::MixedStrategy::pure(joint[i], counts[j]))
                            } else {
                                let prior = agent.beliefs.marginal(j, &agent.state_belief);
                                config.filter.posterior(&prior, observed[j], counts[j])
                            }
                        })
                        .collect::<Result<Vec<_>>>()?,
                );
                if !config.freeze_learning {
                    per_state_belief_update(
                        &mut agent.beliefs,
                        &agent.state_belief,
                        &observed,
                        i,
                        &config.filter,
                        &config.schedule,
                        t,
                    )?;
                }
                let signal = posg.signal(next_state, i);
                let update = state_belief_update(
                    posg,
                    &agent.state_belief,
                    i,
                    joint[i],
                    &posteriors,
                    signal,
                )?;
                if update.reset {
                    trace.belief_resets += 1;
                }
                agent.state_belief =
                    update.belief.pruned(STATE_BELIEF_PRUNE).capped(STATE_BELIEF_CAP);
            }

            state = next_state;
            t += 1;
        }
        trace.episodes.push(EpisodeRow {
            episode,
            steps_elapsed: (episode + 1) * episode_horizon,
            team_reward: episode_reward,
        });
    }
    Ok(trace)
}
