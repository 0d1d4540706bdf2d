//! Headless cohorts: many bot-driven sessions on a simulated clock.

use anyhow::{Context, Result};
use rayon::prelude::*;

use snake_story_core::game::GameConfig;
use snake_story_core::llm::ProviderConfig;
use snake_story_core::rng::derive_seed;
use snake_story_core::session::{LiveTextSource, Session, SessionLog, SessionSetup, SimClock};
use snake_story_core::story::StoryConfig;

use crate::policy::{Bot, BotSettings, PolicyKind};

#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub game: GameConfig,
    pub story: StoryConfig,
    pub provider: ProviderConfig,
    pub policy: PolicyKind,
    pub bot: BotSettings,
    pub sessions: usize,
    pub seed: u64,
    pub max_rounds: u32,
}

impl SimulationPlan {
    pub fn new(policy: PolicyKind, sessions: usize, seed: u64) -> Self {
        Self {
            game: GameConfig::default(),
            story: StoryConfig::default(),
            provider: ProviderConfig::stub(),
            policy,
            bot: BotSettings::default(),
            sessions,
            seed,
            max_rounds: 10_000,
        }
    }

    pub fn session_id(&self, index: usize) -> String {
        format!("sim-{}-{index:04}", self.seed)
    }
}

#[derive(Debug)]
pub struct SimulatedSession {
    pub id: String,
    pub log: SessionLog,
    pub jsonl: String,
}

/// Runs every session of the plan. Results come back in session order and
/// do not depend on how rayon schedules them.
pub fn simulate(plan: &SimulationPlan) -> Result<Vec<SimulatedSession>> {
    (0..plan.sessions).into_par_iter().map(|i| run_one(plan, i)).collect()
}

pub fn run_one(plan: &SimulationPlan, index: usize) -> Result<SimulatedSession> {
    let seed = derive_seed(plan.seed, index as u64);
    let provider = plan.provider.build(seed).context("building the text provider")?;
    let source = LiveTextSource::new(provider, seed, &plan.story);
    let id = plan.session_id(index);
    let setup = SessionSetup {
        id: id.clone(),
        seed,
        config: plan.game.clone(),
        story: plan.story.clone(),
    };
    let mut session = Session::new(setup, Box::new(SimClock::new()), Box::new(source))?;
    let mut bot = Bot::new(plan.policy, derive_seed(seed, u64::MAX), plan.bot.clone());
    session
        .run_to_end(&mut bot, plan.max_rounds)
        .with_context(|| format!("session {id}"))?;
    Ok(SimulatedSession {
        id,
        jsonl: session.log().to_jsonl(),
        log: SessionLog {
            records: session.log().records().to_vec(),
        },
    })
}
