//! Session orchestration: the round loop, its timers, the event log and
//! replay.
//!
//! A [`Session`] is the only writer of its game state and story. Player
//! input reaches it through a [`Controller`], AI text through a
//! [`TextSource`], and time through a [`Clock`], so the same loop serves
//! live play (wall clock, socket input, HTTP provider), headless simulation
//! and replay (simulated clock, scripted input, stub or logged text).

mod clock;
mod engine;
mod event;
mod log;
mod replay;
mod source;

use thiserror::Error;

use crate::game::GameError;
use crate::story::StoryError;

pub use clock::{Clock, SimClock, WallClock};
pub use engine::{
    Controller, Idle, Intent, Observed, Observer, Session, SessionSetup, SessionSummary, SessionView, MAX_HUMAN_CHARS,
    MAX_INTENTS_PER_WINDOW, SAFETY_MARGIN,
};
pub use event::{EatenSummary, EventKind, GameEnded, GeneratedCandy, LogRecord, SessionStarted, LOG_VERSION};
pub use log::{chain_checksum, log_file_name, CorruptLog, EventLog, SessionLog};
pub use replay::{replay, replay_text, ReplayController, ReplayError, Replayed};
pub use source::{GeneratedText, LiveTextSource, LoggedTextSource, TextSource};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Story(#[from] StoryError),
    #[error("log write failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("session did not end within {0} rounds")]
    RoundCap(u32),
    #[error("diverged at seq {seq}: {detail}")]
    Diverged { seq: u64, detail: String },
    #[error("replay: {0}")]
    Replay(String),
}
