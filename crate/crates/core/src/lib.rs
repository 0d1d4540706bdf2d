pub mod analytics;
pub mod game;
pub mod llm;
pub mod rng;
pub mod session;
pub mod story;
