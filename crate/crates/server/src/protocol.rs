//! JSON messages exchanged over the session WebSocket.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use snake_story_core::game::{CandyColor, CandyId, CandyNumber, Direction};
use snake_story_core::session::{EatenSummary, EventKind, Observed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandyText {
    pub id: CandyId,
    pub color: CandyColor,
    pub number: CandyNumber,
    pub text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimerPhase {
    ReadPause,
    YellowInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    /// Canonical game state, plus the story so far.
    State {
        state: Value,
        story: String,
    },
    Segments {
        round: u32,
        candies: Vec<CandyText>,
    },
    Timer {
        phase: TimerPhase,
        remaining_ms: u64,
    },
    Ended {
        story: String,
        word_count: usize,
        candies_eaten: Vec<EatenSummary>,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMsg {
    Heading {
        direction: Direction,
    },
    YellowText {
        text: String,
    },
    Start {
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl ServerMsg {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("message serializes")
    }

    /// Messages to push to clients after an event.
    pub fn for_event(observed: &Observed<'_>) -> Vec<ServerMsg> {
        let state = || ServerMsg::State {
            state: serde_json::from_str(&observed.state.canonical_json()).expect("canonical state is JSON"),
            story: observed.story.full_text(),
        };
        match &observed.record.kind {
            EventKind::SessionStarted(_) => vec![state()],
            EventKind::SegmentsGenerated { round, candies } => vec![
                ServerMsg::Segments {
                    round: *round,
                    candies: candies
                        .iter()
                        .map(|c| CandyText {
                            id: c.id,
                            color: c.color,
                            number: c.number,
                            text: c.text.clone(),
                        })
                        .collect(),
                },
                state(),
            ],
            EventKind::ReadPauseStarted { duration, .. } => vec![ServerMsg::Timer {
                phase: TimerPhase::ReadPause,
                remaining_ms: duration * 1000,
            }],
            EventKind::YellowInputStarted { duration } => vec![ServerMsg::Timer {
                phase: TimerPhase::YellowInput,
                remaining_ms: duration * 1000,
            }],
            EventKind::GameEnded(end) => vec![
                state(),
                ServerMsg::Ended {
                    story: observed.story.full_text(),
                    word_count: end.word_count,
                    candies_eaten: end.candies_eaten.clone(),
                },
            ],
            _ => vec![state()],
        }
    }
}
