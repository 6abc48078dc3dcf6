//! Shared brute-force oracles and fixture generators for the integration
//! suites. Everything here is implemented independently of the library
//! routines it is used to check.

// Each integration test binary compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use ffp::game::{BeliefProfile, MixedStrategy, NormalFormGame};
use ffp::posg::{PerStateBeliefs, Posg};
use rand::Rng;

// ---------------------------------------------------------------------------
// Random fixtures (integer payoffs: exact arithmetic, no tie jitter)
// ---------------------------------------------------------------------------

pub fn random_game<R: Rng>(rng: &mut R) -> NormalFormGame {
    let players = rng.gen_range(2..=3);
    let counts: Vec<usize> = (0..players).map(|_| rng.gen_range(2..=3)).collect();
    let size: usize = counts.iter().product();
    let payoffs = (0..players)
        .map(|_| (0..size).map(|_| rng.gen_range(-5..=5) as f64).collect())
        .collect();
    NormalFormGame::new(counts, payoffs).unwrap()
}

/// A game guaranteed to admit a potential: u_i = P + Q_i(a_{-i}) with integer
/// P and opponent-only dummy terms Q_i.
pub fn random_potential_game<R: Rng>(rng: &mut R) -> NormalFormGame {
    let players = rng.gen_range(2..=3);
    let counts: Vec<usize> = (0..players).map(|_| rng.gen_range(2..=3)).collect();
    let size: usize = counts.iter().product();
    let potential: Vec<f64> = (0..size).map(|_| rng.gen_range(-5..=5) as f64).collect();
    let shell = NormalFormGame::new(counts.clone(), vec![vec![0.0; size]; players]).unwrap();
    let mut payoffs = vec![vec![0.0; size]; players];
    for player in 0..players {
        let opp_size: usize = counts
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != player)
            .map(|(_, &n)| n)
            .product();
        let dummy: Vec<f64> = (0..opp_size).map(|_| rng.gen_range(-5..=5) as f64).collect();
        for joint in shell.joint_actions() {
            let mut opp_index = 0;
            for (j, &a) in joint.iter().enumerate() {
                if j != player {
                    opp_index = opp_index * counts[j] + a;
                }
            }
            payoffs[player][shell.joint_index(&joint)] =
                potential[shell.joint_index(&joint)] + dummy[opp_index];
        }
    }
    NormalFormGame::new(counts, payoffs).unwrap()
}

pub fn random_posg<R: Rng>(rng: &mut R) -> Posg {
    let counts = vec![rng.gen_range(2..=3), rng.gen_range(2..=3)];
    let size: usize = counts.iter().product();
    let num_states = 3;
    let stage_games = (0..num_states)
        .map(|_| {
            let payoffs: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..size).map(|_| rng.gen_range(-5..=5) as f64).collect())
                .collect();
            NormalFormGame::new(counts.clone(), payoffs).unwrap()
        })
        .collect();
    let transition = (0..num_states)
        .map(|_| (0..size).map(|_| rng.gen_range(0..num_states)).collect())
        .collect();
    let gamma = rng.gen_range(0.1..0.95);
    Posg::new(stage_games, transition, gamma, 0, None).unwrap()
}

/// Per-state beliefs putting the full mass on one fixed opponent joint action.
pub fn point_beliefs(posg: &Posg, fixed: &[usize]) -> PerStateBeliefs {
    let mut beliefs = PerStateBeliefs::new(posg.action_counts().to_vec());
    for s in 0..posg.num_states() {
        let strategies = fixed
            .iter()
            .zip(posg.action_counts())
            .map(|(&a, &n)| MixedStrategy::pure(a, n))
            .collect();
        beliefs.set(s, BeliefProfile::new(strategies));
    }
    beliefs
}

// ---------------------------------------------------------------------------
// Brute-force oracles
// ---------------------------------------------------------------------------

/// Exhaustive pure-equilibrium search: a joint is an equilibrium iff no
/// unilateral deviation strictly gains (exact comparison on integer payoffs).
pub fn oracle_pure_nash(game: &NormalFormGame) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    'outer: for joint in game.joint_actions() {
        for player in 0..game.num_players() {
            let here = game.payoff(player, &joint);
            let mut dev = joint.clone();
            for a in 0..game.num_actions(player) {
                dev[player] = a;
                if game.payoff(player, &dev) > here {
                    continue 'outer;
                }
            }
        }
        out.push(joint);
    }
    out
}

/// Potential existence oracle: assign values by breadth-first propagation
/// over the unilateral-deviation graph from the all-zeros joint action, then
/// verify every deviation constraint. Returns the table if consistent.
pub fn oracle_potential(game: &NormalFormGame) -> Option<Vec<f64>> {
    let size: usize = game.action_counts().iter().product();
    let mut values = vec![f64::NAN; size];
    let origin = vec![0usize; game.num_players()];
    values[game.joint_index(&origin)] = 0.0;
    let mut frontier = vec![origin];
    while let Some(joint) = frontier.pop() {
        let here = values[game.joint_index(&joint)];
        for player in 0..game.num_players() {
            let mut dev = joint.clone();
            for a in 0..game.num_actions(player) {
                if a == joint[player] {
                    continue;
                }
                dev[player] = a;
                let delta = game.payoff(player, &dev) - game.payoff(player, &joint);
                let idx = game.joint_index(&dev);
                if values[idx].is_nan() {
                    values[idx] = here + delta;
                    frontier.push(dev.clone());
                }
            }
            dev[player] = joint[player];
        }
    }
    for joint in game.joint_actions() {
        for player in 0..game.num_players() {
            let mut dev = joint.clone();
            for a in 0..game.num_actions(player) {
                if a == joint[player] {
                    continue;
                }
                dev[player] = a;
                let dp = values[game.joint_index(&dev)] - values[game.joint_index(&joint)];
                let dr = game.payoff(player, &dev) - game.payoff(player, &joint);
                if (dp - dr).abs() > 1e-9 {
                    return None;
                }
            }
            dev[player] = joint[player];
        }
    }
    Some(values)
}

/// Grid oracle for the p-dominance threshold: scan p over a uniform grid and
/// return the first value at which every player's equilibrium action stays a
/// best response against every adversarial vertex belief mixing p on the
/// others' equilibrium and 1-p on any other opponent joint action.
pub fn oracle_min_p_grid(game: &NormalFormGame, equilibrium: &[usize], step: f64) -> f64 {
    let holds = |p: f64| -> bool {
        for player in 0..game.num_players() {
            let eq_own = equilibrium[player];
            for vertex in game.joint_actions() {
                if vertex[player] != 0 {
                    continue;
                }
                let same = vertex
                    .iter()
                    .enumerate()
                    .all(|(j, &a)| j == player || a == equilibrium[j]);
                if same {
                    continue;
                }
                for dev in 0..game.num_actions(player) {
                    if dev == eq_own {
                        continue;
                    }
                    let mut at = equilibrium.to_vec();
                    at[player] = eq_own;
                    let eq_top = game.payoff(player, &at);
                    at[player] = dev;
                    let eq_bot = game.payoff(player, &at);
                    let mut adv = vertex.clone();
                    adv[player] = eq_own;
                    let adv_top = game.payoff(player, &adv);
                    adv[player] = dev;
                    let adv_bot = game.payoff(player, &adv);
                    let value = p * (eq_top - eq_bot) + (1.0 - p) * (adv_top - adv_bot);
                    if value < -1e-9 {
                        return false;
                    }
                }
            }
        }
        true
    };
    let mut k = 0u64;
    loop {
        let p = (k as f64 * step).min(1.0);
        if holds(p) {
            return p;
        }
        if p >= 1.0 {
            return 1.0;
        }
        k += 1;
    }
}

/// Single-agent finite-horizon dynamic program: the value of each state with
/// `d` stage games left after the current one, when the opponents play
/// `fixed` forever and the leaf is the myopic best reward.
pub fn dp_values(posg: &Posg, agent: usize, fixed: &[usize], depth: usize) -> Vec<Vec<f64>> {
    let num_states = posg.num_states();
    let mut table = vec![vec![0.0; num_states]; depth + 1];
    for d in 0..=depth {
        for s in 0..num_states {
            let game = posg.stage_game(s);
            let mut best = f64::NEG_INFINITY;
            for own in 0..game.num_actions(agent) {
                let mut joint = fixed.to_vec();
                joint[agent] = own;
                let mut q = game.payoff(agent, &joint);
                if d > 0 {
                    let next = posg.next_state(s, game.joint_index(&joint));
                    q += posg.gamma() * table[d - 1][next];
                }
                best = best.max(q);
            }
            table[d][s] = best;
        }
    }
    table
}

// ---------------------------------------------------------------------------
// Synthetic threshold game
// ---------------------------------------------------------------------------

/// Identical-interest 2x2 game with a unique strict pure equilibrium at
/// (0, 0) whose dominance threshold is 0.75 (vs 0.8 in the surveillance
/// game): u = [[1, -4], [0, -1]] for both players. Player 1's equilibrium
/// action survives only while it believes the opponent plays action 0 with
/// probability at least 0.75, so learning collapses once the observed
/// frequency drops below that, i.e. for noise beyond 0.25.
pub fn synthetic_threshold_game() -> NormalFormGame {
    let table = vec![1.0, -4.0, 0.0, -1.0];
    NormalFormGame::new(vec![2, 2], vec![table.clone(), table]).unwrap()
}

// ---------------------------------------------------------------------------
// Oracle-equivalence checks shared by the granular suite and the gate
// ---------------------------------------------------------------------------

use ffp::learn::{FilterSpec, StepSchedule};
use ffp::lffp::{select_action, v_star, LffpConfig};
use ffp::posg::StateBelief;
use ffp::rng::substream;

/// pure_nash / potential_reconstruct / min_p_dominance vs brute force on a
/// battery of random games, half of them guaranteed-potential.
pub fn check_matrix_oracles(cases: usize) -> Result<(), String> {
    let mut rng = substream(0xA11CE, &[1]);
    for case in 0..cases {
        let game = if case % 2 == 0 {
            random_game(&mut rng)
        } else {
            random_potential_game(&mut rng)
        };

        let lib: Vec<Vec<usize>> = game.pure_nash().into_iter().map(|e| e.joint).collect();
        let oracle = oracle_pure_nash(&game);
        if lib != oracle {
            return Err(format!("pure NE mismatch on case {case}"));
        }

        match (game.potential_reconstruct(), oracle_potential(&game)) {
            (Ok(p), Some(table)) => {
                let origin = vec![0usize; game.num_players()];
                let shift = p.value(&origin) - table[game.joint_index(&origin)];
                for joint in game.joint_actions() {
                    let diff = p.value(&joint) - table[game.joint_index(&joint)];
                    if (diff - shift).abs() > 1e-9 {
                        return Err(format!("potential tables disagree on case {case}"));
                    }
                }
            }
            (Err(_), None) => {}
            (lib, oracle) => {
                return Err(format!(
                    "potential existence mismatch on case {case}: lib ok={}, oracle ok={}",
                    lib.is_ok(),
                    oracle.is_some()
                ))
            }
        }

        for eq in &lib {
            let report = game
                .min_p_dominance(eq)
                .map_err(|e| format!("min_p failed on case {case}: {e}"))?;
            let grid = oracle_min_p_grid(&game, eq, 1e-3);
            if (report.min_p - grid).abs() > 2e-3 {
                return Err(format!(
                    "min-p mismatch on case {case}: lib {} vs grid {}",
                    report.min_p, grid
                ));
            }
        }
    }
    Ok(())
}

/// v_star vs the DP table on the two-state toy fixture for every fixed
/// opponent action and depth up to 4.
pub fn check_lookahead_toy() -> Result<(), String> {
    let posg = ffp::envs::toy_posg();
    let agent = 0;
    for depth in 1..=4 {
        for &fixed in &[[0usize, 0], [0, 1], [1, 0], [1, 1]] {
            let beliefs = point_beliefs(&posg, &fixed);
            let table = dp_values(&posg, agent, &fixed, depth);
            for d in 1..=depth {
                for s in 0..posg.num_states() {
                    let v = v_star(&posg, d, s, agent, beliefs.get_ref(s), &table[d - 1]);
                    if (v - table[d][s]).abs() > 1e-9 {
                        return Err(format!(
                            "toy fixture: v_star({d},{s}) = {v}, dp = {}",
                            table[d][s]
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

/// v_star and the greedy planner's root choice vs the DP oracle on random
/// three-state fixtures with point-mass opponent beliefs and zero noise.
pub fn check_lookahead_random(cases: u64) -> Result<(), String> {
    let mut rng = substream(0xD0, &[2]);
    for case in 0..cases {
        let posg = random_posg(&mut rng);
        let depth = rng.gen_range(1..=3);
        let fixed: Vec<usize> = posg
            .action_counts()
            .iter()
            .map(|&n| rng.gen_range(0..n))
            .collect();
        let agent = 0;
        let beliefs = point_beliefs(&posg, &fixed);
        let table = dp_values(&posg, agent, &fixed, depth);

        for d in 1..=depth {
            for s in 0..posg.num_states() {
                let v = v_star(&posg, d, s, agent, beliefs.get_ref(s), &table[d - 1]);
                if (v - table[d][s]).abs() > 1e-9 {
                    return Err(format!(
                        "case {case}: v_star({d},{s}) = {v} vs dp {}",
                        table[d][s]
                    ));
                }
            }
        }

        let mut config = LffpConfig::new(
            depth,
            0.0,
            FilterSpec::Identity,
            StepSchedule::classical(),
        )
        .unwrap();
        config.force_greedy = true;
        for root in 0..posg.num_states() {
            let tracking = StateBelief::point(root, posg.num_states());
            let mut xi_rng = substream(7, &[case, root as u64, 1]);
            let mut tie_rng = substream(7, &[case, root as u64, 2]);
            let chosen = select_action(
                &posg, &tracking, &beliefs, agent, &config, 1, &mut xi_rng, &mut tie_rng,
            );
            let game = posg.stage_game(root);
            let q = |own: usize| -> f64 {
                let mut joint = fixed.clone();
                joint[agent] = own;
                let next = posg.next_state(root, game.joint_index(&joint));
                game.payoff(agent, &joint) + posg.gamma() * table[depth - 1][next]
            };
            let best = (0..game.num_actions(agent))
                .map(q)
                .fold(f64::NEG_INFINITY, f64::max);
            if (q(chosen) - best).abs() > 1e-9 {
                return Err(format!(
                    "case {case} root {root}: chose Q {} vs best {best}",
                    q(chosen)
                ));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Property bodies shared by the randomized suite and the gate
// ---------------------------------------------------------------------------

use ffp::game::BeliefProfile as Profile;
use ffp::learn::LearnerState;
use ffp::lffp::v_opt;
use ffp::posg::state_belief_update;

fn check_simplex(probs: &[f64]) -> Result<(), String> {
    if probs.iter().any(|&p| p < 0.0) {
        return Err(format!("negative entry in {probs:?}"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(format!("sum {sum} in {probs:?}"));
    }
    Ok(())
}

fn small_game(players: usize, actions: usize, payoffs: &[f64]) -> ffp::game::NormalFormGame {
    let size = actions.pow(players as u32);
    let tensors = (0..players)
        .map(|p| payoffs[p * size..(p + 1) * size].to_vec())
        .collect();
    ffp::game::NormalFormGame::new(vec![actions; players], tensors).unwrap()
}

fn normalized(raw: &[f64]) -> Vec<f64> {
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}

/// Filter posteriors and belief revisions stay on the probability simplex.
pub fn prop_simplex_preservation(
    prior_raw: &[f64],
    observed: usize,
    assumed_eps: f64,
    alpha_t: u64,
    use_bayes: bool,
) -> Result<(), String> {
    let prior = MixedStrategy::new(normalized(prior_raw)).map_err(|e| e.to_string())?;
    let filter = if use_bayes {
        FilterSpec::Bayes { assumed_eps }
    } else {
        FilterSpec::Identity
    };
    let post = filter
        .posterior(&prior, observed, prior_raw.len())
        .map_err(|e| e.to_string())?;
    check_simplex(post.probs())?;

    let n = prior_raw.len();
    let mut learner = LearnerState::new(0, &[n, n]);
    learner.t = alpha_t - 1;
    learner
        .belief_update(&[0, observed], &filter, &StepSchedule::classical())
        .map_err(|e| e.to_string())?;
    for s in learner.beliefs.strategies() {
        check_simplex(s.probs())?;
    }
    Ok(())
}

/// State-belief propagation stays on the simplex for any transition table.
pub fn prop_state_belief_simplex(
    belief_raw: &[f64],
    own: usize,
    opp_raw: &[f64],
    targets: &[usize],
) -> Result<(), String> {
    let stage = ffp::game::NormalFormGame::new(vec![2, 2], vec![vec![0.0; 4]; 2]).unwrap();
    let games = vec![stage.clone(), stage.clone(), stage];
    let transition = targets.chunks(4).map(|c| c.to_vec()).collect();
    let posg = Posg::new(games, transition, 0.9, 0, None).map_err(|e| e.to_string())?;
    let belief = StateBelief::new(normalized(belief_raw)).map_err(|e| e.to_string())?;
    let posteriors = Profile::new(vec![
        MixedStrategy::uniform(2),
        MixedStrategy::new(normalized(opp_raw)).map_err(|e| e.to_string())?,
    ]);
    let update =
        state_belief_update(&posg, &belief, 0, own, &posteriors, None).map_err(|e| e.to_string())?;
    check_simplex(&update.belief.probs())
}

/// The eps-mixed response loses at most eps times the payoff range.
pub fn prop_eps_br_bound(
    payoffs: &[f64],
    profile0_raw: &[f64],
    profile1_raw: &[f64],
    eps: f64,
) -> Result<(), String> {
    let game = small_game(2, 3, payoffs);
    let profile = Profile::new(vec![
        MixedStrategy::new(normalized(profile0_raw)).map_err(|e| e.to_string())?,
        MixedStrategy::new(normalized(profile1_raw)).map_err(|e| e.to_string())?,
    ]);
    let br = game.best_response(0, &profile).map_err(|e| e.to_string())?;
    if br.len() == game.num_actions(0) {
        // Degenerate: every action ties; the eps mass has nowhere worse to go
        // and the API rejects the split.
        return Ok(());
    }
    let mixed = game
        .epsilon_best_response(0, &profile, eps)
        .map_err(|e| e.to_string())?;
    let best = game.action_value(0, br[0], &profile).map_err(|e| e.to_string())?;
    let achieved: f64 = (0..3)
        .map(|a| mixed.prob(a) * game.action_value(0, a, &profile).unwrap())
        .sum();
    let delta = eps * game.payoff_range(0);
    if achieved < best - delta - 1e-9 {
        return Err(format!("achieved {achieved} < best {best} - {delta}"));
    }
    Ok(())
}

/// In a game built from an explicit potential, the potential's local maxima
/// are exactly the pure Nash equilibria.
pub fn prop_potential_maxima(
    potential: &[i32],
    dummy0: &[i32],
    dummy1: &[i32],
) -> Result<(), String> {
    let shell = ffp::game::NormalFormGame::new(vec![3, 3], vec![vec![0.0; 9]; 2]).unwrap();
    let mut payoffs = vec![vec![0.0; 9]; 2];
    for joint in shell.joint_actions() {
        let idx = shell.joint_index(&joint);
        payoffs[0][idx] = (potential[idx] + dummy0[joint[1]]) as f64;
        payoffs[1][idx] = (potential[idx] + dummy1[joint[0]]) as f64;
    }
    let game = ffp::game::NormalFormGame::new(vec![3, 3], payoffs).unwrap();
    let p = game
        .potential_reconstruct()
        .map_err(|w| format!("reconstruction refused a potential game: {w:?}"))?;
    let mut maxima = p.local_maxima();
    let mut nash: Vec<Vec<usize>> = game.pure_nash().into_iter().map(|e| e.joint).collect();
    maxima.sort();
    nash.sort();
    if maxima != nash {
        return Err(format!("maxima {maxima:?} != pure NE {nash:?}"));
    }
    Ok(())
}

/// With shared child values, the optimistic backup never falls below the
/// optimal backup.
pub fn prop_v_opt_dominates(
    payoffs: &[f64],
    child: &[f64],
    targets: &[usize],
    opp_raw: &[f64],
    d: usize,
) -> Result<(), String> {
    let games = vec![small_game(2, 2, payoffs), small_game(2, 2, payoffs)];
    let transition = targets.chunks(4).map(|c| c.to_vec()).collect();
    let posg = Posg::new(games, transition, 0.9, 0, None).map_err(|e| e.to_string())?;
    let beliefs = Profile::new(vec![
        MixedStrategy::uniform(2),
        MixedStrategy::new(normalized(opp_raw)).map_err(|e| e.to_string())?,
    ]);
    for state in 0..2 {
        let star = v_star(&posg, d, state, 0, &beliefs, child);
        let opt = v_opt(&posg, d, state, 0, child);
        if opt < star - 1e-9 {
            return Err(format!("v_opt {opt} < v_star {star}"));
        }
    }
    Ok(())
}

/// Over all possible observations of a fixed true action, the channel
/// likelihood sums to one and every entry is nonnegative.
pub fn prop_likelihood_rows(eps: f64, num_actions: usize) -> Result<(), String> {
    for truth in 0..num_actions {
        let total: f64 = (0..num_actions)
            .map(|obs| ffp::channel::likelihood(eps, obs, truth, num_actions))
            .sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("row sum {total}"));
        }
        for obs in 0..num_actions {
            if ffp::channel::likelihood(eps, obs, truth, num_actions) < 0.0 {
                return Err("negative likelihood".into());
            }
        }
    }
    Ok(())
}
