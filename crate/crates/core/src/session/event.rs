use serde::{Deserialize, Serialize};

use crate::game::{
    CandyColor, CandyEffect, CandyId, CandyNumber, CollisionCause, Direction, EndReason, GameConfig, Position,
};
use crate::llm::ProviderKind;
use crate::story::StoryConfig;

/// Log format version written into every `SessionStarted`.
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStarted {
    pub version: u32,
    pub session_id: String,
    pub seed: u64,
    pub config: GameConfig,
    pub story: StoryConfig,
}

/// One spawned candy with the text bound to it. Yellow candies carry no text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedCandy {
    pub id: CandyId,
    pub color: CandyColor,
    pub number: CandyNumber,
    pub position: Position,
    pub text: Option<String>,
    pub temperature: Option<f64>,
    pub provider_kind: Option<ProviderKind>,
    /// The provider failed and the text came from the stub corpus.
    pub fallback: bool,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EatenSummary {
    pub round: u32,
    pub id: CandyId,
    pub color: CandyColor,
    pub number: CandyNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameEnded {
    pub ending_text: String,
    pub word_count: usize,
    pub candies_eaten: Vec<EatenSummary>,
    pub end_reason: EndReason,
    pub ending_provider: Option<ProviderKind>,
    pub ending_fallback: bool,
    pub ending_latency_ms: u64,
    /// Canonical state serialization at the end of the session.
    pub final_state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum EventKind {
    SessionStarted(SessionStarted),
    SegmentsGenerated {
        round: u32,
        candies: Vec<GeneratedCandy>,
    },
    /// `duration` in seconds.
    ReadPauseStarted {
        round: u32,
        duration: u64,
    },
    MovingStarted {
        round: u32,
    },
    HeadingSet {
        direction: Direction,
    },
    Ticked {
        head: Position,
    },
    CandyEaten {
        candy: CandyId,
    },
    EffectApplied {
        effect: CandyEffect,
        lives_after: u8,
        obstacles_after: usize,
    },
    /// `duration` in seconds.
    YellowInputStarted {
        duration: u64,
    },
    HumanTextSubmitted {
        text: String,
    },
    LifeLost {
        cause: CollisionCause,
        lives_after: u8,
    },
    SnakeRespawned {
        positions: Vec<Position>,
    },
    GameEnded(GameEnded),
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SessionStarted(_) => "SessionStarted",
            Self::SegmentsGenerated { .. } => "SegmentsGenerated",
            Self::ReadPauseStarted { .. } => "ReadPauseStarted",
            Self::MovingStarted { .. } => "MovingStarted",
            Self::HeadingSet { .. } => "HeadingSet",
            Self::Ticked { .. } => "Ticked",
            Self::CandyEaten { .. } => "CandyEaten",
            Self::EffectApplied { .. } => "EffectApplied",
            Self::YellowInputStarted { .. } => "YellowInputStarted",
            Self::HumanTextSubmitted { .. } => "HumanTextSubmitted",
            Self::LifeLost { .. } => "LifeLost",
            Self::SnakeRespawned { .. } => "SnakeRespawned",
            Self::GameEnded(_) => "GameEnded",
        }
    }
}

/// One line of the event log. `chk` chains each record to its predecessor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    /// Milliseconds since the session started.
    pub at: u64,
    pub kind: EventKind,
    pub chk: String,
}
