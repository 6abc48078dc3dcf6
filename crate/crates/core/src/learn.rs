//! GWFP and filtered fictitious play: step schedules, observation filters,
//! belief revision, and the full repeated-game loop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{likelihood, ObservationChannel};
use crate::error::{Error, Result};
use crate::game::{BeliefProfile, MixedStrategy, NormalFormGame};
use crate::rng::{purpose, substream};

/// Elementwise floor applied to beliefs after every update, keeping Bayes
/// normalizers bounded away from zero.
pub const BELIEF_FLOOR: f64 = 1e-6;

/// Decaying step sequence (c + t)^(-rho).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub c: f64,
    pub rho: f64,
}

impl StepSchedule {
    pub fn new(c: f64, rho: f64) -> Result<Self> {
        if c < 0.0 {
            return Err(Error::Argument("schedule constant must be nonnegative".into()));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Argument("schedule exponent must lie in (0, 1]".into()));
        }
        Ok(Self { c, rho })
    }

    /// The classical 1/t fictitious-play schedule.
    pub fn classical() -> Self {
        Self { c: 0.0, rho: 1.0 }
    }

    pub fn step_size(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(Error::Argument("step schedule starts at t = 1".into()));
        }
        Ok((self.c + t as f64).powf(-self.rho))
    }
}

/// How an agent turns a (possibly perturbed) observation into a distribution
/// over the opponent's true action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FilterSpec {
    /// Trust the observation: point mass on whatever was seen. This is the
    /// naive GWFP update under noise.
    Identity,
    /// Bayes posterior under the uniform-wrong-action channel with the
    /// agent's assumed perturbation probability, which may differ from the
    /// true one.
    Bayes { assumed_eps: f64 },
}

impl FilterSpec {
    /// Posterior over the observed player's true action, given the prior and
    /// one observation.
    pub fn posterior(
        &self,
        prior: &MixedStrategy,
        observed: usize,
        num_actions: usize,
    ) -> Result<MixedStrategy> {
        match *self {
            FilterSpec::Identity => Ok(MixedStrategy::pure(observed, num_actions)),
            FilterSpec::Bayes { assumed_eps } => {
                let mut post: Vec<f64> = (0..num_actions)
                    .map(|a| likelihood(assumed_eps, observed, a, num_actions) * prior.prob(a))
                    .collect();
                let norm: f64 = post.iter().sum();
                if norm <= 0.0 {
                    return Err(Error::FilterDegenerate);
                }
                post.iter_mut().for_each(|p| *p /= norm);
                Ok(MixedStrategy::from_unchecked(post))
            }
        }
    }
}

/// One agent's beliefs about everyone's play, plus its iteration counter.
/// The agent's own entry in the profile is carried along but never read.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub agent: usize,
    pub beliefs: BeliefProfile,
    pub t: u64,
}

impl LearnerState {
    pub fn new(agent: usize, action_counts: &[usize]) -> Self {
        Self {
            agent,
            beliefs: BeliefProfile::uniform(action_counts),
            t: 0,
        }
    }

    /// One belief revision: every opponent's belief steps toward the filter
    /// posterior with step size alpha^(t+1), then gets floored and
    /// renormalized. `observed_joint` holds one observed action per player;
    /// the agent's own slot is ignored.
    pub fn belief_update(
        &mut self,
        observed_joint: &[usize],
        filter: &FilterSpec,
        schedule: &StepSchedule,
    ) -> Result<()> {
        let alpha = schedule.step_size(self.t + 1)?;
        for j in 0..self.beliefs.len() {
            if j == self.agent {
                continue;
            }
            let prior = self.beliefs.strategy(j);
            let target = filter.posterior(prior, observed_joint[j], prior.len())?;
            let updated = prior.step_toward(&target, alpha).floored(BELIEF_FLOOR);
            *self.beliefs.strategy_mut(j) = updated;
        }
        self.t += 1;
        Ok(())
    }
}

/// Per-iteration record of one repeated-game run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub iterations: u64,
    pub snapshot_stride: u64,
    /// Joint true action at every iteration.
    pub true_actions: Vec<Vec<usize>>,
    /// observed_actions[t][observer] is the joint action as seen by that observer.
    pub observed_actions: Vec<Vec<Vec<usize>>>,
    /// (t, per-agent belief profiles) at every stride-th iteration.
    pub snapshots: Vec<(u64, Vec<BeliefProfile>)>,
    /// Final beliefs of every agent.
    pub final_beliefs: Vec<BeliefProfile>,
}

/// Outcome of convergence detection over the tail of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvergenceVerdict {
    PureNash(Vec<usize>),
    MixedNash,
    None,
}

impl ConvergenceVerdict {
    pub fn converged(&self) -> bool {
        !matches!(self, ConvergenceVerdict::None)
    }

    pub fn label(&self) -> String {
        match self {
            ConvergenceVerdict::PureNash(joint) => {
                let parts: Vec<String> = joint.iter().map(|a| a.to_string()).collect();
                format!("pure:{}", parts.join("-"))
            }
            ConvergenceVerdict::MixedNash => "mixed".into(),
            ConvergenceVerdict::None => "none".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FpConfig {
    pub true_eps: f64,
    pub filter: FilterSpec,
    pub schedule: StepSchedule,
    pub iterations: u64,
    pub snapshot_stride: u64,
    /// Optional fixed initial beliefs shared by all agents (defaults to uniform).
    pub initial_beliefs: Option<BeliefProfile>,
}

impl FpConfig {
    pub fn new(true_eps: f64, filter: FilterSpec, schedule: StepSchedule, iterations: u64) -> Self {
        Self {
            true_eps,
            filter,
            schedule,
            iterations,
            snapshot_stride: 0,
            initial_beliefs: None,
        }
    }
}

/// Runs the repeated game: every iteration each agent best-responds to its
/// beliefs (ties broken by a seeded uniform draw), the channel perturbs each
/// observer's view of the others, and each agent revises its beliefs through
/// its filter.
pub fn run_fp(game: &NormalFormGame, config: &FpConfig, seed: u64) -> Result<RunTrace> {
    if config.iterations == 0 {
        return Err(Error::Argument("need at least one iteration".into()));
    }
    let n = game.num_players();
    let channel = ObservationChannel::new(config.true_eps, game.action_counts().to_vec())?;
    let mut learners: Vec<LearnerState> = (0..n)
        .map(|i| {
            let mut s = LearnerState::new(i, game.action_counts());
            if let Some(init) = &config.initial_beliefs {
                s.beliefs = init.clone();
            }
            s
        })
        .collect();
    let mut tie_rngs: Vec<_> = (0..n)
        .map(|i| substream(seed, &[i as u64, purpose::TIE_BREAK]))
        .collect();
    let mut channel_rngs: Vec<_> = (0..n)
        .map(|i| substream(seed, &[i as u64, purpose::CHANNEL]))
        .collect();

    let stride = config.snapshot_stride;
    let mut trace = RunTrace {
        iterations: config.iterations,
        snapshot_stride: stride,
        true_actions: Vec::with_capacity(config.iterations as usize),
        observed_actions: Vec::with_capacity(config.iterations as usize),
        snapshots: Vec::new(),
        final_beliefs: Vec::new(),
    };

    for t in 1..=config.iterations {
        let joint: Vec<usize> = learners
            .iter()
            .enumerate()
            .map(|(i, learner)| {
                let br = game.best_response(i, &learner.beliefs)?;
                Ok(br[tie_rngs[i].gen_range(0..br.len())])
            })
            .collect::<Result<_>>()?;

        let mut per_observer = Vec::with_capacity(n);
        for i in 0..n {
            // Each observer gets its own independent perturbation of the
            // joint action; its own component is passed through unchanged.
            let mut seen = joint.clone();
            for j in 0..n {
                if j != i {
                    seen[j] = channel.perturb_component(j, joint[j], &mut channel_rngs[i]);
                }
            }
            per_observer.push(seen);
        }

        for (i, learner) in learners.iter_mut().enumerate() {
            learner.belief_update(&per_observer[i], &config.filter, &config.schedule)?;
        }

        trace.true_actions.push(joint);
        trace.observed_actions.push(per_observer);
        if stride > 0 && t % stride == 0 {
            trace
                .snapshots
                .push((t, learners.iter().map(|l| l.beliefs.clone()).collect()));
        }
    }
    trace.final_beliefs = learners.into_iter().map(|l| l.beliefs).collect();
    Ok(trace)
}

/// Default convergence window: the last min(1000, iterations/10) iterations.
pub fn default_window(iterations: u64) -> u64 {
    (iterations / 10).min(1000).max(1)
}

/// Converged iff the empirical joint-play frequency over the final window
/// places at least 1−tol mass on a single pure NE, or the terminal beliefs
/// form a Nash profile within tol.
pub fn detect_convergence(
    trace: &RunTrace,
    window: u64,
    tol: f64,
    game: &NormalFormGame,
) -> Result<ConvergenceVerdict> {
    if window > trace.iterations {
        return Err(Error::Argument("window exceeds iteration count".into()));
    }
    let tail = &trace.true_actions[(trace.iterations - window) as usize..];
    for eq in game.pure_nash() {
        let hits = tail.iter().filter(|j| **j == eq.joint).count();
        if hits as f64 / window as f64 >= 1.0 - tol {
            return Ok(ConvergenceVerdict::PureNash(eq.joint));
        }
    }
    // Assemble one strategy per player from another agent's terminal beliefs.
    let n = game.num_players();
    if n >= 2 {
        let strategies: Vec<MixedStrategy> = (0..n)
            .map(|j| {
                let observer = if j == 0 { 1 } else { 0 };
                trace.final_beliefs[observer].strategy(j).clone()
            })
            .collect();
        let profile = BeliefProfile::new(strategies);
        if game.is_nash(&profile, tol)? {
            return Ok(ConvergenceVerdict::MixedNash);
        }
    }
    Ok(ConvergenceVerdict::None)
}

/// Terminal L∞ gap between the true empirical frequency of `opponent`'s play
/// and `agent`'s final belief about it: the empirical filter precision.
pub fn precision_estimate(trace: &RunTrace, agent: usize, opponent: usize) -> f64 {
    let belief = trace.final_beliefs[agent].strategy(opponent);
    let mut counts = vec![0u64; belief.len()];
    for joint in &trace.true_actions {
        counts[joint[opponent]] += 1;
    }
    let total = trace.true_actions.len() as f64;
    counts
        .iter()
        .zip(belief.probs())
        .map(|(&c, &b)| (c as f64 / total - b).abs())
        .fold(0.0, f64::max)
}
