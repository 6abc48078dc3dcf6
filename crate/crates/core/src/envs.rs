//! Shipped test problems: the two-UAV monitoring game, a two-state toy POSG,
//! and the cooperative box pushing gridworld.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::NormalFormGame;
use crate::posg::Posg;

/// Action indices in the UAV game.
pub const UAV_SECONDARY: usize = 0;
pub const UAV_ABOVE: usize = 1;

/// The two-UAV coordination game: one UAV above the target and one at a
/// secondary point is optimal, both above collide.
///
/// Orientation: the player positioned Above earns 1 and the Secondary player
/// 0, which makes the symmetric mix placing 0.8 on Secondary an equilibrium.
pub fn uav_game() -> NormalFormGame {
    // Row-major, column player's action fastest: (S,S) (S,A) (A,S) (A,A).
    NormalFormGame::new(
        vec![2, 2],
        vec![
            vec![0.0, 0.0, 1.0, -4.0],
            vec![0.0, 1.0, 0.0, -4.0],
        ],
    )
    .expect("static game")
}

/// The alternative orientation in which the Secondary player earns the 1
/// in mixed outcomes. Kept for comparison; it has no symmetric mixed
/// equilibrium at 0.8.
pub fn uav_game_printed() -> NormalFormGame {
    NormalFormGame::new(
        vec![2, 2],
        vec![
            vec![0.0, 1.0, 0.0, -4.0],
            vec![0.0, 0.0, 1.0, -4.0],
        ],
    )
    .expect("static game")
}

/// Two-state identical-interest POSG: state 0 pays 1 at (0,0), state 1 pays
/// 4 at (1,1); the joint action (1,1) moves play from state 0 to the
/// absorbing state 1.
pub fn toy_posg() -> Posg {
    let r0 = vec![1.0, 0.0, 0.0, 0.0];
    let r1 = vec![0.0, 0.0, 0.0, 4.0];
    let g0 = NormalFormGame::new(vec![2, 2], vec![r0.clone(), r0]).expect("static game");
    let g1 = NormalFormGame::new(vec![2, 2], vec![r1.clone(), r1]).expect("static game");
    // Joint order: (0,0) (0,1) (1,0) (1,1).
    let transition = vec![vec![0, 0, 0, 1], vec![1, 1, 1, 1]];
    Posg::new(vec![g0, g1], transition, 0.9, 0, None).expect("static posg")
}

/// Box pushing action indices.
pub const BP_FORWARD: usize = 0;
pub const BP_TURN_LEFT: usize = 1;
pub const BP_TURN_RIGHT: usize = 2;
pub const BP_STAY: usize = 3;

/// Box pushing local-signal alphabet: contents of the cell an agent faces.
pub const SIG_EMPTY: usize = 0;
pub const SIG_WALL: usize = 1;
pub const SIG_AGENT: usize = 2;
pub const SIG_SMALL_BOX: usize = 3;
pub const SIG_LARGE_BOX: usize = 4;

pub const NUM_BP_SIGNALS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Facing {
    North,
    East,
    South,
    West,
}

impl Facing {
    fn left(self) -> Facing {
        match self {
            Facing::North => Facing::West,
            Facing::West => Facing::South,
            Facing::South => Facing::East,
            Facing::East => Facing::North,
        }
    }

    fn right(self) -> Facing {
        match self {
            Facing::North => Facing::East,
            Facing::East => Facing::South,
            Facing::South => Facing::West,
            Facing::West => Facing::North,
        }
    }

    fn delta(self) -> (i32, i32) {
        match self {
            Facing::North => (-1, 0),
            Facing::East => (0, 1),
            Facing::South => (1, 0),
            Facing::West => (0, -1),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxPushingConfig {
    pub width: usize,
    pub height: usize,
    /// Row that absorbs boxes; agents may not enter it.
    pub goal_row: usize,
    pub small_boxes: [(usize, usize); 2],
    /// Two adjacent cells occupied by the large box.
    pub large_box: [(usize, usize); 2],
    pub agent_starts: [((usize, usize), Facing); 2],
    pub small_box_reward: f64,
    pub large_box_reward: f64,
    pub bump_penalty: f64,
    pub step_cost: f64,
    pub horizon: u64,
    pub gamma: f64,
}

impl Default for BoxPushingConfig {
    fn default() -> Self {
        // 4-row, 4-column arena: goal along the top row, large box spanning
        // the middle two columns of the third row, small boxes flanking it,
        // agents starting in the bottom row facing the goal. The large box
        // needs two synchronized joint pushes to reach the goal, so sustained
        // coordination under noise is required to earn the big reward.
        Self {
            width: 4,
            height: 4,
            goal_row: 0,
            small_boxes: [(2, 0), (2, 3)],
            large_box: [(2, 1), (2, 2)],
            agent_starts: [((3, 1), Facing::North), ((3, 2), Facing::North)],
            small_box_reward: 10.0,
            large_box_reward: 100.0,
            bump_penalty: -6.5,
            step_cost: -0.1,
            horizon: 100,
            gamma: 0.95,
        }
    }
}

/// Full world configuration: agent poses plus box occupancy. Absorbed boxes
/// are collapsed to `None`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct BpState {
    agents: [((usize, usize), Facing); 2],
    small: [Option<(usize, usize)>; 2],
    large: Option<[(usize, usize); 2]>,
}

/// A built box pushing environment: the POSG plus its enumeration report.
#[derive(Debug, Clone)]
pub struct BoxPushing {
    pub posg: Posg,
    pub config: BoxPushingConfig,
    /// Number of reachable states enumerated by the builder.
    pub state_count: usize,
}

struct BpWorld {
    cfg: BoxPushingConfig,
}

impl BpWorld {
    fn on_grid(&self, r: i32, c: i32) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.cfg.height && (c as usize) < self.cfg.width
    }

    fn is_agent_cell(&self, r: i32, c: i32) -> bool {
        self.on_grid(r, c) && r as usize != self.cfg.goal_row
    }

    /// Steps the world; returns (next state, team reward).
    fn step(&self, state: &BpState, joint: [usize; 2]) -> (BpState, f64) {
        let mut next = state.clone();
        let mut reward = self.cfg.step_cost;

        // Turns and stays resolve first.
        for i in 0..2 {
            match joint[i] {
                BP_TURN_LEFT => next.agents[i].1 = next.agents[i].1.left(),
                BP_TURN_RIGHT => next.agents[i].1 = next.agents[i].1.right(),
                _ => {}
            }
        }

        let forward: Vec<usize> = (0..2).filter(|&i| joint[i] == BP_FORWARD).collect();
        if forward.is_empty() {
            return (next, reward);
        }

        // Joint push of the large box: both agents forward, facing north,
        // directly south of the box's two cells, box's north row is the goal.
        if forward.len() == 2 {
            if let Some(cells) = next.large {
                let mut south = [(cells[0].0 + 1, cells[0].1), (cells[1].0 + 1, cells[1].1)];
                south.sort_unstable();
                let mut poses = [
                    (next.agents[0].0, next.agents[0].1),
                    (next.agents[1].0, next.agents[1].1),
                ];
                poses.sort_unstable_by_key(|p| p.0);
                let positions = [poses[0].0, poses[1].0];
                let facing_north = poses.iter().all(|p| p.1 == Facing::North);
                if positions == south && facing_north {
                    if cells[0].0 == self.cfg.goal_row + 1 {
                        next.large = None;
                        reward += self.cfg.large_box_reward;
                        for i in 0..2 {
                            let (r, c) = next.agents[i].0;
                            next.agents[i].0 = (r - 1, c);
                        }
                        return (next, reward);
                    }
                    // Further from the goal the box advances one row per
                    // joint push, if nothing occupies the row ahead.
                    let ahead = [
                        (cells[0].0 - 1, cells[0].1),
                        (cells[1].0 - 1, cells[1].1),
                    ];
                    let blocked = ahead.iter().any(|cell| {
                        next.small.iter().any(|s| *s == Some(*cell))
                    });
                    if !blocked {
                        next.large = Some(ahead);
                        for i in 0..2 {
                            let (r, c) = next.agents[i].0;
                            next.agents[i].0 = (r - 1, c);
                        }
                        return (next, reward);
                    }
                    reward += 2.0 * self.cfg.bump_penalty;
                    return (next, reward);
                }
            }
        }

        // Individual forward moves. Proposed targets first, then collision
        // resolution: two agents claiming one cell both bump.
        #[derive(Clone, Copy, PartialEq)]
        enum Move {
            Bump,
            To((usize, usize)),
            PushSmall { box_idx: usize, agent_to: (usize, usize), box_to: Option<(usize, usize)> },
        }
        let mut moves: HashMap<usize, Move> = HashMap::new();
        for &i in &forward {
            let ((r, c), facing) = next.agents[i];
            let (dr, dc) = facing.delta();
            let (tr, tc) = (r as i32 + dr, c as i32 + dc);
            let other = next.agents[1 - i].0;
            let m = if !self.is_agent_cell(tr, tc) {
                Move::Bump
            } else if (tr as usize, tc as usize) == other {
                Move::Bump
            } else if next.large.map_or(false, |cells| {
                cells.contains(&(tr as usize, tc as usize))
            }) {
                // Lone push against the large box.
                Move::Bump
            } else if let Some(bi) = (0..2).find(|&b| next.small[b] == Some((tr as usize, tc as usize))) {
                // Boxes only move toward the goal: a push from any other
                // direction is a bump.
                if facing != Facing::North {
                    Move::Bump
                } else {
                    let (br, bc) = (tr - 1, tc);
                    if br >= 0 && (br as usize) == self.cfg.goal_row {
                        Move::PushSmall {
                            box_idx: bi,
                            agent_to: (tr as usize, tc as usize),
                            box_to: None,
                        }
                    } else if self.on_grid(br, bc)
                        && !next.small.iter().any(|s| *s == Some((br as usize, bc as usize)))
                        && !next
                            .large
                            .map_or(false, |cells| cells.contains(&(br as usize, bc as usize)))
                        && other != (br as usize, bc as usize)
                    {
                        Move::PushSmall {
                            box_idx: bi,
                            agent_to: (tr as usize, tc as usize),
                            box_to: Some((br as usize, bc as usize)),
                        }
                    } else {
                        Move::Bump
                    }
                }
            } else {
                Move::To((tr as usize, tc as usize))
            };
            moves.insert(i, m);
        }

        // Same-target collision.
        if forward.len() == 2 {
            let target = |m: &Move| match *m {
                Move::To(t) => Some(t),
                Move::PushSmall { agent_to, .. } => Some(agent_to),
                Move::Bump => None,
            };
            let t0 = moves.get(&0).and_then(target);
            let t1 = moves.get(&1).and_then(target);
            if t0.is_some() && t0 == t1 {
                moves.insert(0, Move::Bump);
                moves.insert(1, Move::Bump);
            }
        }

        for &i in &forward {
            match moves[&i] {
                Move::Bump => reward += self.cfg.bump_penalty,
                Move::To(t) => next.agents[i].0 = t,
                Move::PushSmall { box_idx, agent_to, box_to } => {
                    next.agents[i].0 = agent_to;
                    next.small[box_idx] = box_to;
                    if box_to.is_none() {
                        reward += self.cfg.small_box_reward;
                    }
                }
            }
        }
        (next, reward)
    }

    fn signal(&self, state: &BpState, agent: usize) -> usize {
        let ((r, c), facing) = state.agents[agent];
        let (dr, dc) = facing.delta();
        let (tr, tc) = (r as i32 + dr, c as i32 + dc);
        if !self.is_agent_cell(tr, tc) {
            return SIG_WALL;
        }
        let cell = (tr as usize, tc as usize);
        if state.agents[1 - agent].0 == cell {
            SIG_AGENT
        } else if state.small.iter().any(|s| *s == Some(cell)) {
            SIG_SMALL_BOX
        } else if state.large.map_or(false, |cells| cells.contains(&cell)) {
            SIG_LARGE_BOX
        } else {
            SIG_EMPTY
        }
    }
}

/// Builds the box pushing POSG by enumerating every state reachable from the
/// start configuration under joint actions, and reports the enumeration size.
pub fn box_pushing(config: &BoxPushingConfig) -> Result<BoxPushing> {
    validate(config)?;
    let world = BpWorld { cfg: config.clone() };
    let initial = BpState {
        agents: config.agent_starts,
        small: [Some(config.small_boxes[0]), Some(config.small_boxes[1])],
        large: Some(config.large_box),
    };

    let mut index: HashMap<BpState, usize> = HashMap::new();
    let mut states: Vec<BpState> = Vec::new();
    index.insert(initial.clone(), 0);
    states.push(initial);

    let mut transitions: Vec<Vec<usize>> = Vec::new();
    let mut rewards: Vec<Vec<f64>> = Vec::new();
    let mut cursor = 0;
    while cursor < states.len() {
        let state = states[cursor].clone();
        let mut row_t = vec![0usize; 16];
        let mut row_r = vec![0.0f64; 16];
        for a0 in 0..4 {
            for a1 in 0..4 {
                let (next, reward) = world.step(&state, [a0, a1]);
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = states.len();
                        index.insert(next.clone(), id);
                        states.push(next);
                        id
                    }
                };
                let joint = a0 * 4 + a1;
                row_t[joint] = id;
                row_r[joint] = reward;
            }
        }
        transitions.push(row_t);
        rewards.push(row_r);
        cursor += 1;
    }

    let stage_games = rewards
        .iter()
        .map(|r| NormalFormGame::new(vec![4, 4], vec![r.clone(), r.clone()]))
        .collect::<Result<Vec<_>>>()?;
    let signals = states
        .iter()
        .map(|s| (0..2).map(|i| world.signal(s, i)).collect())
        .collect();
    let state_count = states.len();
    let posg = Posg::new(stage_games, transitions, config.gamma, 0, Some(signals))?;
    Ok(BoxPushing { posg, config: config.clone(), state_count })
}

fn validate(config: &BoxPushingConfig) -> Result<()> {
    let cell_ok = |(r, c): (usize, usize)| r < config.height && c < config.width;
    if config.goal_row >= config.height {
        return Err(Error::Layout("goal row off-grid".into()));
    }
    let [l0, l1] = config.large_box;
    let adjacent = l0.0 == l1.0 && (l0.1 as i64 - l1.1 as i64).abs() == 1;
    if !adjacent || !cell_ok(l0) || !cell_ok(l1) {
        return Err(Error::Layout("large box must occupy two adjacent on-grid cells".into()));
    }
    let (a0, a1) = (config.agent_starts[0].0, config.agent_starts[1].0);
    if a0 == a1 {
        return Err(Error::Layout("agents must start on distinct cells".into()));
    }
    let mut occupied = vec![l0, l1, a0, a1];
    for b in config.small_boxes {
        if !cell_ok(b) {
            return Err(Error::Layout("small box off-grid".into()));
        }
        occupied.push(b);
    }
    if !cell_ok(a0) || !cell_ok(a1) {
        return Err(Error::Layout("agent start off-grid".into()));
    }
    occupied.sort_unstable();
    occupied.dedup();
    if occupied.len() != 6 {
        return Err(Error::Layout("overlapping starting positions".into()));
    }
    if occupied.iter().any(|&(r, _)| r == config.goal_row) {
        return Err(Error::Layout("nothing may start in the goal row".into()));
    }
    Ok(())
}
