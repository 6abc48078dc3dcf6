//! The perturbed action-observation process: each observed component is the
//! true action with probability 1−ε, otherwise an action drawn uniformly from
//! the other actions of that player.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationChannel {
    eps: f64,
    action_counts: Vec<usize>,
}

impl ObservationChannel {
    pub fn new(eps: f64, action_counts: Vec<usize>) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Argument("eps must lie in [0, 1]".into()));
        }
        if eps > 0.0 && action_counts.iter().any(|&n| n < 2) {
            return Err(Error::DegenerateChannel);
        }
        Ok(Self { eps, action_counts })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Perturbs one component: the observed action of player `player` who
    /// truly played `action`.
    pub fn perturb_component<R: Rng>(&self, player: usize, action: usize, rng: &mut R) -> usize {
        let n = self.action_counts[player];
        if self.eps > 0.0 && rng.gen::<f64>() < self.eps {
            // Uniform over the other n−1 actions.
            let mut wrong = rng.gen_range(0..n - 1);
            if wrong >= action {
                wrong += 1;
            }
            wrong
        } else {
            action
        }
    }

    /// Perturbs every component of a joint action independently.
    pub fn perturb<R: Rng>(&self, true_joint: &[usize], rng: &mut R) -> Vec<usize> {
        true_joint
            .iter()
            .enumerate()
            .map(|(j, &a)| self.perturb_component(j, a, rng))
            .collect()
    }

    /// P(observed | true) for one player's component.
    pub fn likelihood(&self, observed: usize, truth: usize, num_actions: usize) -> f64 {
        likelihood(self.eps, observed, truth, num_actions)
    }
}

/// P(observed | true) under the uniform-wrong-action channel with
/// perturbation probability `eps`.
pub fn likelihood(eps: f64, observed: usize, truth: usize, num_actions: usize) -> f64 {
    if observed == truth {
        1.0 - eps
    } else {
        eps / (num_actions as f64 - 1.0)
    }
}
