//! Snake Story rules: grid, snake movement, collisions, lives, round
//! lifecycle, candy spawning and the candy effect table.
//!
//! Everything here is a pure state machine driven from outside; no clock is
//! read and all randomness comes from the state's own [`GameRng`](crate::rng::GameRng).

mod config;
mod state;
mod types;

use thiserror::Error;

pub use config::{AssignmentPolicy, CandyColorWeights, GameConfig};
pub use state::{CanonicalState, CollisionCause, EatenCandy, EffectOutcome, EndReason, GameState, Phase, TickOutcome};
pub use types::{Candy, CandyColor, CandyEffect, CandyId, CandyNumber, Direction, Position, SegmentId, Snake};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{op} is not allowed during {phase:?}")]
    WrongPhase { op: &'static str, phase: Phase },
    #[error("board full: fewer than 3 free cells")]
    BoardFull,
    #[error("no candy with id {0} on the board")]
    UnknownCandy(CandyId),
    #[error("candy {0} has no story segment bound")]
    UnboundCandy(CandyId),
    #[error("candy {0} was not eaten on the last tick")]
    NotJustEaten(CandyId),
}
