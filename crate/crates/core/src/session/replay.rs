use thiserror::Error;

use super::clock::SimClock;
use super::engine::{Controller, Intent, Session, SessionSetup, SessionView};
use super::event::{EventKind, LogRecord};
use super::log::{CorruptLog, SessionLog};
use super::source::LoggedTextSource;
use super::SessionError;
use crate::game::{GameState, Phase};
use crate::story::Story;

/// Upper bound on rounds during replay; a valid log never gets near it.
const REPLAY_ROUND_CAP: u32 = 1_000_000;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Corrupt(#[from] CorruptLog),
    #[error("log is incomplete: no GameEnded record")]
    Incomplete,
    #[error("replay diverged from the log at seq {seq}: {detail}")]
    Diverged { seq: u64, detail: String },
    #[error("replayed final state differs from the recorded one")]
    FinalState { recorded: String, replayed: String },
    #[error("replay failed: {0}")]
    Session(SessionError),
}

impl ReplayError {
    /// First sequence number at fault, when one is known.
    pub fn seq(&self) -> Option<u64> {
        match self {
            Self::Corrupt(c) => Some(c.seq),
            Self::Diverged { seq, .. } => Some(*seq),
            _ => None,
        }
    }
}

impl From<SessionError> for ReplayError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Diverged { seq, detail } => Self::Diverged { seq, detail },
            other => Self::Session(other),
        }
    }
}

/// Feeds the player inputs recorded in a log back into a session at the
/// points where they were originally applied.
pub struct ReplayController<'a> {
    records: &'a [LogRecord],
}

impl<'a> ReplayController<'a> {
    pub fn new(records: &'a [LogRecord]) -> Self {
        Self { records }
    }
}

impl Controller for ReplayController<'_> {
    fn next_intent(&mut self, view: &SessionView<'_>, _deadline_ms: u64) -> Option<Intent> {
        match &self.records.get(view.next_seq as usize)?.kind {
            EventKind::HeadingSet { direction } => Some(Intent::Heading(*direction)),
            EventKind::HumanTextSubmitted { text } if view.state.phase == Phase::YellowInput => {
                Some(Intent::YellowText(text.clone()))
            }
            _ => None,
        }
    }
}

#[derive(Debug)]
pub struct Replayed {
    pub state: GameState,
    pub story: Story,
    /// Canonical serialization of the replayed final state.
    pub final_state: String,
}

/// Re-executes a verified log: the state machine runs from the logged seed
/// and config, takes player inputs and AI texts from the log, and must
/// reproduce every recorded event and the recorded final state.
pub fn replay(log: &SessionLog) -> Result<Replayed, ReplayError> {
    let recorded = log.ended().ok_or(ReplayError::Incomplete)?.final_state.clone();
    let started = log.started();
    let setup = SessionSetup {
        id: started.session_id.clone(),
        seed: started.seed,
        config: started.config.clone(),
        story: started.story.clone(),
    };
    let source = LoggedTextSource::from_records(&log.records);
    let mut session =
        Session::new(setup, Box::new(SimClock::new()), Box::new(source))?.expecting(log.kinds().cloned().collect());
    let mut controller = ReplayController::new(&log.records);
    session.run_to_end(&mut controller, REPLAY_ROUND_CAP)?;
    if session.log().next_seq() != log.records.len() as u64 {
        return Err(ReplayError::Diverged {
            seq: session.log().next_seq(),
            detail: "replay ended before the log did".into(),
        });
    }
    let final_state = session.state().canonical_json();
    if final_state != recorded {
        return Err(ReplayError::FinalState {
            recorded,
            replayed: final_state,
        });
    }
    Ok(Replayed {
        state: session.state().clone(),
        story: session.story().clone(),
        final_state,
    })
}

/// Parses and replays JSONL text.
pub fn replay_text(text: &str) -> Result<Replayed, ReplayError> {
    replay(&SessionLog::parse(text)?)
}
