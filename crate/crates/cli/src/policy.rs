//! Scripted players for headless simulation.
//!
//! A bot picks one target candy per round according to its policy, walks
//! there along a shortest path that avoids everything solid and every other
//! candy, and answers the yellow prompt from a small pool of lines. Bots slip
//! now and then (a random heading) so cohorts include crashes, and give up
//! on rounds that drag on by driving straight ahead.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use snake_story_core::game::{Candy, CandyColor, CandyId, Direction, GameState, Phase, Position};
use snake_story_core::llm::{StubCorpus, StubPool};
use snake_story_core::rng::GameRng;
use snake_story_core::session::{Controller, GeneratedCandy, Intent, SessionView};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// Prefers candies by effect: Green, Blue, White or Yellow, Black, Red.
    SurvivalGreedy,
    /// Prefers the text it scores highest.
    TextGreedy,
    /// Each round chooses by effect with probability `p`, else by text.
    Mixed(f64),
    RandomPolicy,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SurvivalGreedy => f.write_str("survival-greedy"),
            Self::TextGreedy => f.write_str("text-greedy"),
            Self::Mixed(p) => write!(f, "mixed:{p}"),
            Self::RandomPolicy => f.write_str("random"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "survival-greedy" => Ok(Self::SurvivalGreedy),
            "text-greedy" => Ok(Self::TextGreedy),
            "random" => Ok(Self::RandomPolicy),
            _ => {
                let p = s
                    .strip_prefix("mixed:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| format!("unknown policy {s:?} (survival-greedy, text-greedy, mixed:<p>, random)"))?;
                if (0.0..=1.0).contains(&p) {
                    Ok(Self::Mixed(p))
                } else {
                    Err(format!("mixed probability must be in [0, 1], got {p}"))
                }
            }
        }
    }
}

/// How much a survival-minded player wants a candy.
pub fn survival_score(color: CandyColor) -> u8 {
    match color {
        CandyColor::Green => 5,
        CandyColor::Blue => 4,
        CandyColor::White | CandyColor::Yellow => 3,
        CandyColor::Black => 1,
        CandyColor::Red => 0,
    }
}

const STORY_WORDS: [&str; 12] = [
    "snake",
    "scales",
    "coiled",
    "slithered",
    "forest",
    "river",
    "hiss",
    "moon",
    "burrow",
    "tail",
    "egg",
    "grass",
];

/// Text preference. Stub texts score by pool (coherent over creative);
/// other texts by story keywords, with a penalty for being far from 30 words.
pub fn text_score(text: Option<&str>) -> f64 {
    let Some(text) = text else {
        // A yellow candy: the player writes something themselves.
        return 1.0;
    };
    match StubCorpus::bundled().pool_of(text) {
        Some(StubPool::Coherent) => 2.0,
        Some(_) => 0.0,
        None => {
            let lower = text.to_lowercase();
            let hits = STORY_WORDS.iter().filter(|w| lower.contains(*w)).count() as f64;
            let words = text.split_whitespace().count() as f64;
            hits - (words - 30.0).abs() / 30.0
        }
    }
}

const YELLOW_LINES: [&str; 8] = [
    "The snake paused to admire its own reflection in a puddle.",
    "Somewhere far away a drum started beating.",
    "It decided that tomorrow would be a better day for adventures.",
    "A small bird landed on its head and refused to leave.",
    "The grass whispered a secret that nobody could repeat.",
    "Then it sneezed.",
    "Its grandmother had warned it about places like this.",
    "The snake wrote its name in the sand with its tail.",
];

#[derive(Debug, Clone)]
pub struct BotSettings {
    /// Chance per decision of a random heading instead of the planned one.
    pub slip_rate: f64,
    /// Chance of leaving the yellow prompt empty.
    pub empty_yellow_rate: f64,
    /// Ticks after which a round is abandoned by driving straight ahead.
    pub stall_ticks: u32,
}

impl Default for BotSettings {
    fn default() -> Self {
        Self {
            slip_rate: 0.02,
            empty_yellow_rate: 0.1,
            stall_ticks: 600,
        }
    }
}

pub struct Bot {
    kind: PolicyKind,
    settings: BotSettings,
    rng: GameRng,
    last_deadline: Option<u64>,
    round: Option<u32>,
    target: Option<CandyId>,
    ticks_in_round: u32,
}

impl Bot {
    pub fn new(kind: PolicyKind, seed: u64, settings: BotSettings) -> Self {
        Self {
            kind,
            settings,
            rng: GameRng::seed_from_u64(seed),
            last_deadline: None,
            round: None,
            target: None,
            ticks_in_round: 0,
        }
    }

    /// Candies ranked most wanted first.
    fn ranking(&mut self, candies: &[Candy], offers: &[GeneratedCandy]) -> Vec<CandyId> {
        let text_of = |id: CandyId| offers.iter().find(|o| o.id == id).and_then(|o| o.text.as_deref());
        let by_effect = match self.kind {
            PolicyKind::SurvivalGreedy => true,
            PolicyKind::TextGreedy => false,
            PolicyKind::Mixed(p) => self.rng.chance(p),
            PolicyKind::RandomPolicy => {
                let ids: Vec<CandyId> = candies.iter().map(|c| c.id).collect();
                return self.rng.sample(&ids, ids.len());
            }
        };
        let mut scored: Vec<(f64, CandyId)> = candies
            .iter()
            .map(|c| {
                let score = if by_effect {
                    f64::from(survival_score(c.color))
                } else {
                    text_score(text_of(c.id))
                };
                (score, c.id)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().map(|(_, id)| id).collect()
    }

    fn plan(&mut self, view: &SessionView<'_>) -> Option<Direction> {
        let state = view.state;
        if self.round != Some(state.round_index) {
            self.round = Some(state.round_index);
            self.ticks_in_round = 0;
            self.target = None;
        }
        if state.phase == Phase::Moving {
            self.ticks_in_round += 1;
        }
        if self.ticks_in_round > self.settings.stall_ticks {
            return None;
        }
        if self.rng.chance(self.settings.slip_rate) {
            return Some(Direction::ALL[self.rng.index(4)]);
        }
        if self.target.is_none_or(|id| state.candy(id).is_none()) {
            let ranking = self.ranking(&state.candies, view.offers);
            self.target = ranking
                .into_iter()
                .find(|&id| first_step(state, id).is_some())
                .or(self.target);
        }
        self.target
            .and_then(|id| first_step(state, id))
            .or_else(|| safest_step(state))
    }
}

impl Controller for Bot {
    fn next_intent(&mut self, view: &SessionView<'_>, deadline_ms: u64) -> Option<Intent> {
        if self.last_deadline == Some(deadline_ms) {
            return None;
        }
        self.last_deadline = Some(deadline_ms);
        match view.state.phase {
            Phase::YellowInput => {
                if self.rng.chance(self.settings.empty_yellow_rate) {
                    None
                } else {
                    Some(Intent::YellowText(
                        YELLOW_LINES[self.rng.index(YELLOW_LINES.len())].into(),
                    ))
                }
            }
            Phase::ReadPause | Phase::Moving => {
                let d = self.plan(view)?;
                (d != view.state.snake.heading).then_some(Intent::Heading(d))
            }
            _ => None,
        }
    }
}

/// Cells the head may enter next tick, not counting candies.
fn passable(state: &GameState, p: Position) -> bool {
    let body = &state.snake.body;
    state.in_bounds(p) && !state.obstacles.contains(&p) && !body[..body.len() - 1].contains(&p)
}

/// First move of a shortest path to candy `id` that touches no other candy.
/// The body is treated as static, which is conservative.
pub fn first_step(state: &GameState, id: CandyId) -> Option<Direction> {
    let goal = state.candy(id)?.position;
    let head = state.snake.head();
    let neck = state.snake.body.get(1).copied();
    let (w, h) = (state.config.grid_width, state.config.grid_height);
    let idx = |p: Position| (p.y * w + p.x) as usize;
    let mut first: Vec<Option<Direction>> = vec![None; (w * h) as usize];
    let mut seen = vec![false; (w * h) as usize];
    let mut queue = VecDeque::new();
    for d in Direction::ALL {
        let p = head.step(d);
        if Some(p) == neck || !passable(state, p) || seen[idx(p)] {
            continue;
        }
        if p == goal {
            return Some(d);
        }
        if state.candy_at(p).is_some() {
            continue;
        }
        seen[idx(p)] = true;
        first[idx(p)] = Some(d);
        queue.push_back(p);
    }
    while let Some(p) = queue.pop_front() {
        for d in Direction::ALL {
            let q = p.step(d);
            if !state.in_bounds(q) || seen[idx(q)] || !passable(state, q) {
                continue;
            }
            if q == goal {
                return first[idx(p)];
            }
            if state.candy_at(q).is_some() {
                continue;
            }
            seen[idx(q)] = true;
            first[idx(q)] = first[idx(p)];
            queue.push_back(q);
        }
    }
    None
}

/// The move into the largest open area, preferring cells without candies.
pub fn safest_step(state: &GameState) -> Option<Direction> {
    let head = state.snake.head();
    Direction::ALL
        .into_iter()
        .filter(|d| passable(state, head.step(*d)))
        .map(|d| {
            let p = head.step(d);
            let area = open_area(state, p);
            (state.candy_at(p).is_none(), area, d)
        })
        .max_by_key(|(no_candy, area, _)| (*no_candy, *area))
        .map(|(_, _, d)| d)
}

fn open_area(state: &GameState, from: Position) -> usize {
    let w = state.config.grid_width;
    let idx = |p: Position| (p.y * w + p.x) as usize;
    let mut seen = vec![false; (w * state.config.grid_height) as usize];
    let mut stack = vec![from];
    seen[idx(from)] = true;
    let mut n = 0;
    while let Some(p) = stack.pop() {
        n += 1;
        for d in Direction::ALL {
            let q = p.step(d);
            if passable(state, q) && !seen[idx(q)] {
                seen[idx(q)] = true;
                stack.push(q);
            }
        }
    }
    n
}
