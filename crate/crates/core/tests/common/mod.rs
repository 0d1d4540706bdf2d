#![allow(dead_code)]

use snake_story_core::game::{CandyColor, Direction, GameConfig, GameState, Phase, Position};
use snake_story_core::rng::GameRng;
use snake_story_core::session::{Controller, Intent, LiveTextSource, Session, SessionSetup, SessionView, SimClock};
use snake_story_core::story::StoryConfig;

/// Heads for the most wanted candy one greedy step at a time, avoiding
/// immediate collisions. Answers at most once per waiting window.
pub struct Chaser {
    pub preference: Vec<CandyColor>,
    pub yellow_text: Option<String>,
    last_deadline: Option<u64>,
}

impl Chaser {
    pub fn new(preference: &[CandyColor]) -> Self {
        Self {
            preference: preference.to_vec(),
            yellow_text: Some("the snake learned to read".into()),
            last_deadline: None,
        }
    }

    pub fn blue_first() -> Self {
        use CandyColor::*;
        Self::new(&[Yellow, Blue, Green, White, Black, Red])
    }
}

pub fn safe(state: &GameState, p: Position, target: Position) -> bool {
    if !state.in_bounds(p) || state.obstacles.contains(&p) {
        return false;
    }
    let body = &state.snake.body;
    if body[..body.len() - 1].contains(&p) {
        return false;
    }
    p == target || state.candy_at(p).is_none()
}

impl Controller for Chaser {
    fn next_intent(&mut self, view: &SessionView<'_>, deadline_ms: u64) -> Option<Intent> {
        if self.last_deadline == Some(deadline_ms) {
            return None;
        }
        self.last_deadline = Some(deadline_ms);
        let state = view.state;
        if state.phase == Phase::YellowInput {
            return self.yellow_text.clone().map(Intent::YellowText);
        }
        let target = self
            .preference
            .iter()
            .find_map(|c| state.candies.iter().find(|k| k.color == *c))?
            .position;
        let head = state.snake.head();
        let dist = |p: Position| (p.x - target.x).abs() + (p.y - target.y).abs();
        let mut options: Vec<Direction> = Direction::ALL
            .into_iter()
            .filter(|d| safe(state, head.step(*d), target))
            .collect();
        options.sort_by_key(|d| (dist(head.step(*d)), *d != state.snake.heading));
        options.first().copied().map(Intent::Heading)
    }
}

/// Random headings; sometimes answers the yellow prompt, sometimes not.
pub struct RandomInput {
    rng: GameRng,
    last_deadline: Option<u64>,
}

impl RandomInput {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: GameRng::seed_from_u64(seed),
            last_deadline: None,
        }
    }
}

impl Controller for RandomInput {
    fn next_intent(&mut self, view: &SessionView<'_>, deadline_ms: u64) -> Option<Intent> {
        if self.last_deadline == Some(deadline_ms) {
            return None;
        }
        self.last_deadline = Some(deadline_ms);
        if view.state.phase == Phase::YellowInput {
            return self
                .rng
                .chance(0.7)
                .then(|| Intent::YellowText(format!("word{}", self.rng.below(100))));
        }
        if self.rng.chance(0.3) {
            Some(Intent::Heading(Direction::ALL[self.rng.index(4)]))
        } else {
            None
        }
    }
}

pub fn small_config() -> GameConfig {
    GameConfig {
        grid_width: 10,
        grid_height: 10,
        ..GameConfig::default()
    }
}

pub fn stub_session(id: &str, seed: u64, config: GameConfig) -> Session {
    let story = StoryConfig::default();
    let setup = SessionSetup {
        id: id.into(),
        seed,
        config,
        story: story.clone(),
    };
    Session::new(
        setup,
        Box::new(SimClock::new()),
        Box::new(LiveTextSource::stub(seed, &story)),
    )
    .unwrap()
}
