use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::config::GameConfig;
use super::types::*;
use super::GameError;
use crate::rng::GameRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    AwaitingGeneration,
    ReadPause,
    Moving,
    YellowInput,
    Ended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollisionCause {
    Wall,
    Obstacle,
    OwnBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndReason {
    LivesExhausted,
    /// No room left to spawn candies or respawn the snake.
    BoardFull,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TickOutcome {
    Moved,
    CandyEaten(Candy),
    LifeLost {
        cause: CollisionCause,
        lives_after: u8,
        /// New body after respawn; `None` when the game ended instead.
        respawned: Option<Vec<Position>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectOutcome {
    pub effect: CandyEffect,
    pub lives_after: u8,
    pub obstacles_after: usize,
    pub added_obstacles: Vec<Position>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EatenCandy {
    pub round_index: u32,
    pub candy: Candy,
}

/// Authoritative game state. Every rule lives in the methods below; the
/// fields are public for inspection and test setup only.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub config: GameConfig,
    pub round_index: u32,
    pub phase: Phase,
    pub snake: Snake,
    /// Sorted by id.
    pub candies: Vec<Candy>,
    pub obstacles: BTreeSet<Position>,
    pub lives: u8,
    pub pending_yellow: bool,
    pub rng: GameRng,
    pub rounds_played: u32,
    pub candies_eaten: Vec<EatenCandy>,
    pub end_reason: Option<EndReason>,
    pub next_candy_id: CandyId,
}

/// The fixed-field view used for replay comparison and the wire protocol.
#[derive(Debug, Serialize)]
pub struct CanonicalState<'a> {
    pub round_index: u32,
    pub phase: Phase,
    pub snake: &'a Snake,
    pub candies: &'a [Candy],
    pub obstacles: &'a BTreeSet<Position>,
    pub lives: u8,
    pub pending_yellow: bool,
    pub rounds_played: u32,
}

impl GameState {
    pub fn new(config: GameConfig, seed: u64) -> Result<Self, GameError> {
        config.validate()?;
        let len = config.initial_snake_length as i32;
        let cy = config.grid_height / 2;
        // Centered horizontally, head on the right.
        let tail_x = (config.grid_width - len) / 2;
        let body: Vec<Position> = (0..len).rev().map(|i| Position::new(tail_x + i, cy)).collect();
        let mut state = Self {
            round_index: 1,
            phase: Phase::AwaitingGeneration,
            snake: Snake {
                body,
                heading: Direction::Right,
            },
            candies: Vec::new(),
            obstacles: BTreeSet::new(),
            lives: config.initial_lives,
            pending_yellow: false,
            rng: GameRng::seed_from_u64(seed),
            rounds_played: 0,
            candies_eaten: Vec::new(),
            end_reason: None,
            next_candy_id: 0,
            config,
        };
        let free = state.free_cells();
        let picked = state.rng.sample(&free, state.config.initial_obstacles);
        state.obstacles.extend(picked);
        Ok(state)
    }

    pub fn canonical(&self) -> CanonicalState<'_> {
        CanonicalState {
            round_index: self.round_index,
            phase: self.phase,
            snake: &self.snake,
            candies: &self.candies,
            obstacles: &self.obstacles,
            lives: self.lives,
            pending_yellow: self.pending_yellow,
            rounds_played: self.rounds_played,
        }
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("canonical state serializes")
    }

    pub fn in_bounds(&self, p: Position) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.config.grid_width && p.y < self.config.grid_height
    }

    pub fn candy_at(&self, p: Position) -> Option<&Candy> {
        self.candies.iter().find(|c| c.position == p)
    }

    pub fn candy(&self, id: CandyId) -> Option<&Candy> {
        self.candies.iter().find(|c| c.id == id)
    }

    /// Cells not covered by the snake, an obstacle or a candy, in row-major order.
    pub fn free_cells(&self) -> Vec<Position> {
        let taken = self.taken_cells();
        self.all_cells().filter(|p| !taken.contains(p)).collect()
    }

    fn taken_cells(&self) -> HashSet<Position> {
        let mut taken: HashSet<Position> = self.snake.body.iter().copied().collect();
        taken.extend(self.obstacles.iter().copied());
        taken.extend(self.candies.iter().map(|c| c.position));
        taken
    }

    fn all_cells(&self) -> impl Iterator<Item = Position> {
        let (w, h) = (self.config.grid_width, self.config.grid_height);
        (0..h).flat_map(move |y| (0..w).map(move |x| Position::new(x, y)))
    }

    pub fn is_over(&self) -> bool {
        self.phase == Phase::Ended
    }

    fn expect_phase(&self, expected: &[Phase], op: &'static str) -> Result<(), GameError> {
        if expected.contains(&self.phase) {
            Ok(())
        } else {
            Err(GameError::WrongPhase { op, phase: self.phase })
        }
    }

    /// Places this round's candies. Returns the new candies in id order.
    pub fn spawn_round_candies(&mut self) -> Result<Vec<Candy>, GameError> {
        self.expect_phase(&[Phase::AwaitingGeneration], "spawn_round_candies")?;
        let free = self.free_cells();
        if free.len() < 3 {
            return Err(GameError::BoardFull);
        }
        let mut kinds = Vec::with_capacity(3);
        for number in [CandyNumber::One, CandyNumber::Two] {
            let weights = self
                .config
                .candy_color_weights
                .for_number(number)
                .expect("weighted number");
            let colors: Vec<CandyColor> = weights.keys().copied().collect();
            let w: Vec<f64> = weights.values().copied().collect();
            kinds.push((colors[self.rng.weighted_index(&w)], number));
        }
        if self.pending_yellow {
            kinds.push((CandyColor::Yellow, CandyNumber::Three));
            self.pending_yellow = false;
        }
        let cells = self.rng.sample(&free, kinds.len());
        let spawned: Vec<Candy> = kinds
            .into_iter()
            .zip(cells)
            .map(|((color, number), position)| {
                let id = self.next_candy_id;
                self.next_candy_id += 1;
                Candy {
                    id,
                    color,
                    number,
                    position,
                    segment_id: None,
                }
            })
            .collect();
        self.candies.extend(spawned.iter().cloned());
        Ok(spawned)
    }

    pub fn bind_candy(&mut self, candy: CandyId, segment: SegmentId) -> Result<(), GameError> {
        let c = self
            .candies
            .iter_mut()
            .find(|c| c.id == candy)
            .ok_or(GameError::UnknownCandy(candy))?;
        c.segment_id = Some(segment);
        Ok(())
    }

    pub fn start_read_pause(&mut self) -> Result<(), GameError> {
        self.expect_phase(&[Phase::AwaitingGeneration], "start_read_pause")?;
        if let Some(c) = self
            .candies
            .iter()
            .find(|c| c.color != CandyColor::Yellow && c.segment_id.is_none())
        {
            return Err(GameError::UnboundCandy(c.id));
        }
        self.phase = Phase::ReadPause;
        Ok(())
    }

    pub fn start_moving(&mut self) -> Result<(), GameError> {
        self.expect_phase(&[Phase::ReadPause], "start_moving")?;
        self.phase = Phase::Moving;
        Ok(())
    }

    /// Requests a new heading for the next tick. Returns whether it was accepted;
    /// reversals onto the neck and requests outside ReadPause/Moving are ignored.
    pub fn set_heading(&mut self, direction: Direction) -> bool {
        if !matches!(self.phase, Phase::ReadPause | Phase::Moving) {
            return false;
        }
        if self.snake.len() > 1 && self.snake.head().step(direction) == self.snake.body[1] {
            return false;
        }
        self.snake.heading = direction;
        true
    }

    pub fn tick(&mut self) -> Result<TickOutcome, GameError> {
        self.expect_phase(&[Phase::Moving], "tick")?;
        let target = self.snake.head().step(self.snake.heading);
        let cause = if !self.in_bounds(target) {
            Some(CollisionCause::Wall)
        } else if self.obstacles.contains(&target) {
            Some(CollisionCause::Obstacle)
        } else {
            let body = &self.snake.body;
            // The tail cell is vacated this tick, so it is not a collision.
            let solid = &body[..body.len() - 1];
            solid.contains(&target).then_some(CollisionCause::OwnBody)
        };
        if let Some(cause) = cause {
            return Ok(self.lose_life_by_collision(cause));
        }

        self.snake.body.insert(0, target);
        match self.candies.iter().position(|c| c.position == target) {
            Some(i) => {
                let candy = self.candies.remove(i);
                self.candies_eaten.push(EatenCandy {
                    round_index: self.round_index,
                    candy: candy.clone(),
                });
                Ok(TickOutcome::CandyEaten(candy))
            }
            None => {
                self.snake.body.pop();
                Ok(TickOutcome::Moved)
            }
        }
    }

    fn lose_life_by_collision(&mut self, cause: CollisionCause) -> TickOutcome {
        self.lives -= 1;
        if self.lives == 0 {
            self.end(EndReason::LivesExhausted);
            return TickOutcome::LifeLost {
                cause,
                lives_after: 0,
                respawned: None,
            };
        }
        let respawned = self.respawn();
        if respawned.is_none() {
            self.end(EndReason::BoardFull);
        }
        TickOutcome::LifeLost {
            cause,
            lives_after: self.lives,
            respawned,
        }
    }

    /// Replaces the snake with a fresh body of the same length. Prefers a
    /// straight run in the longest free horizontal span; longer snakes are laid
    /// along a serpentine row scan.
    fn respawn(&mut self) -> Option<Vec<Position>> {
        let len = self.snake.len();
        let mut blocked: HashSet<Position> = self.obstacles.iter().copied().collect();
        blocked.extend(self.candies.iter().map(|c| c.position));
        let (w, h) = (self.config.grid_width, self.config.grid_height);

        let mut best: Option<(i32, i32, i32)> = None; // (row, start, run length)
        for y in 0..h {
            let mut x = 0;
            while x < w {
                if blocked.contains(&Position::new(x, y)) {
                    x += 1;
                    continue;
                }
                let start = x;
                while x < w && !blocked.contains(&Position::new(x, y)) {
                    x += 1;
                }
                let run = x - start;
                if best.is_none_or(|(_, _, b)| run > b) {
                    best = Some((y, start, run));
                }
            }
        }
        if let Some((y, start, run)) = best {
            if run as usize >= len {
                let body: Vec<Position> = (0..len as i32).rev().map(|i| Position::new(start + i, y)).collect();
                self.snake = Snake {
                    body: body.clone(),
                    heading: Direction::Right,
                };
                return Some(body);
            }
        }

        let scan: Vec<Position> = (0..h)
            .flat_map(|y| {
                let row: Vec<Position> = (0..w).map(|x| Position::new(x, y)).collect();
                if y % 2 == 0 {
                    row
                } else {
                    row.into_iter().rev().collect()
                }
            })
            .collect();
        let window = scan.windows(len).find(|win| win.iter().all(|p| !blocked.contains(p)))?;
        let body: Vec<Position> = window.iter().rev().copied().collect();
        let heading = if len > 1 {
            Direction::between(body[1], body[0]).expect("scan neighbors")
        } else {
            Direction::Right
        };
        self.snake = Snake {
            body: body.clone(),
            heading,
        };
        Some(body)
    }

    /// Resolves the effect of a candy eaten on the previous tick and, unless it
    /// opens the yellow input phase, closes the round.
    pub fn apply_candy_effect(&mut self, candy: &Candy) -> Result<EffectOutcome, GameError> {
        self.expect_phase(&[Phase::Moving], "apply_candy_effect")?;
        let just_eaten = self
            .candies_eaten
            .last()
            .is_some_and(|e| e.candy.id == candy.id && e.round_index == self.round_index);
        if !just_eaten {
            return Err(GameError::NotJustEaten(candy.id));
        }
        let effect = candy.effect();
        let mut added = Vec::new();
        match effect {
            CandyEffect::LoseOneLife => {
                self.lives = self.lives.saturating_sub(1);
            }
            CandyEffect::AddObstacles => {
                let free = self.free_cells();
                added = self.rng.sample(&free, self.config.obstacles_per_black);
                self.obstacles.extend(added.iter().copied());
            }
            CandyEffect::None => {}
            CandyEffect::SpawnYellowNextRound => self.pending_yellow = true,
            CandyEffect::RestoreOneLife => {
                self.lives = (self.lives + 1).min(self.config.max_lives);
            }
            CandyEffect::HumanInput => self.phase = Phase::YellowInput,
        }
        if self.lives == 0 {
            self.close_round(false);
            self.end(EndReason::LivesExhausted);
        } else if effect != CandyEffect::HumanInput {
            self.close_round(true);
        }
        Ok(EffectOutcome {
            effect,
            lives_after: self.lives,
            obstacles_after: self.obstacles.len(),
            added_obstacles: added,
        })
    }

    /// Ends the yellow input phase and the round it belongs to.
    pub fn finish_yellow_input(&mut self) -> Result<(), GameError> {
        self.expect_phase(&[Phase::YellowInput], "finish_yellow_input")?;
        self.close_round(true);
        Ok(())
    }

    /// Ends the session because the board cannot hold another round.
    pub fn end_board_full(&mut self) {
        self.end(EndReason::BoardFull);
    }

    fn close_round(&mut self, advance: bool) {
        self.candies.clear();
        self.rounds_played += 1;
        if advance {
            self.round_index += 1;
            self.phase = Phase::AwaitingGeneration;
        }
    }

    fn end(&mut self, reason: EndReason) {
        self.phase = Phase::Ended;
        self.end_reason = Some(reason);
    }

    /// Checks every structural invariant; returns a description of each violation.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lives > self.config.max_lives {
            out.push(format!("lives {} above max {}", self.lives, self.config.max_lives));
        }
        match (self.phase == Phase::Ended, self.lives == 0, self.end_reason) {
            (true, true, Some(EndReason::LivesExhausted)) | (true, _, Some(EndReason::BoardFull)) => {}
            (false, false, None) => {}
            other => out.push(format!("phase/lives/end mismatch: {other:?}")),
        }
        let body = &self.snake.body;
        if body.is_empty() {
            out.push("empty snake".into());
        }
        let unique: HashSet<_> = body.iter().collect();
        if unique.len() != body.len() {
            out.push("snake overlaps itself".into());
        }
        if body.windows(2).any(|w| !w[0].is_neighbor(w[1])) {
            out.push("snake body not contiguous".into());
        }
        let mut seen: HashSet<Position> = HashSet::new();
        for p in body
            .iter()
            .chain(self.obstacles.iter())
            .chain(self.candies.iter().map(|c| &c.position))
        {
            if !self.in_bounds(*p) {
                out.push(format!("{p} out of bounds"));
            }
            if !seen.insert(*p) {
                out.push(format!("{p} occupied twice"));
            }
        }
        if matches!(self.phase, Phase::ReadPause | Phase::Moving) {
            let count = |n| self.candies.iter().filter(|c| c.number == n).count();
            if count(CandyNumber::One) != 1 || count(CandyNumber::Two) != 1 {
                out.push("round must hold one number-1 and one number-2 candy".into());
            }
            let blue_last_round = self
                .candies_eaten
                .iter()
                .rev()
                .find(|e| e.round_index + 1 == self.round_index)
                .is_some_and(|e| e.candy.color == CandyColor::Blue);
            let yellow_count = count(CandyNumber::Three);
            if yellow_count != blue_last_round as usize {
                out.push(format!(
                    "yellow candies {yellow_count} but blue eaten last round = {blue_last_round}"
                ));
            }
            for c in &self.candies {
                if CandyEffect::of(c.color, c.number).is_none() {
                    out.push(format!("candy {} has illegal kind", c.id));
                }
                if c.color != CandyColor::Yellow && c.segment_id.is_none() {
                    out.push(format!("candy {} unbound", c.id));
                }
            }
        }
        out
    }
}
