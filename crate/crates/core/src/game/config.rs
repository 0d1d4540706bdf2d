use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{CandyColor, CandyNumber};
use super::GameError;

/// How generated segments are matched to the candies of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AssignmentPolicy {
    /// Coherent (low temperature) text on the number-1 candy, creative text on number 2.
    #[default]
    AsPaper,
    /// Coherent text on whichever candy has the better effect.
    AlignedPositive,
}

/// Per-number color weights. Keys in JSON are the candy numbers `"1"` and `"2"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandyColorWeights {
    #[serde(rename = "1")]
    pub one: BTreeMap<CandyColor, f64>,
    #[serde(rename = "2")]
    pub two: BTreeMap<CandyColor, f64>,
}

impl Default for CandyColorWeights {
    fn default() -> Self {
        let uniform = |n: CandyNumber| n.colors().iter().map(|c| (*c, 1.0)).collect();
        Self {
            one: uniform(CandyNumber::One),
            two: uniform(CandyNumber::Two),
        }
    }
}

impl CandyColorWeights {
    pub fn for_number(&self, number: CandyNumber) -> Option<&BTreeMap<CandyColor, f64>> {
        match number {
            CandyNumber::One => Some(&self.one),
            CandyNumber::Two => Some(&self.two),
            CandyNumber::Three => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub grid_width: i32,
    pub grid_height: i32,
    /// Milliseconds between movement ticks.
    pub tick_interval: u64,
    /// Seconds.
    pub read_pause: u64,
    /// Seconds.
    pub yellow_pause: u64,
    pub max_lives: u8,
    pub initial_lives: u8,
    pub initial_snake_length: usize,
    pub obstacles_per_black: usize,
    pub initial_obstacles: usize,
    pub candy_color_weights: CandyColorWeights,
    pub assignment_policy: AssignmentPolicy,
    /// When set, the first heading input during the read pause ends the pause.
    pub input_ends_read_pause: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            grid_width: 16,
            grid_height: 16,
            tick_interval: 250,
            read_pause: 25,
            yellow_pause: 45,
            max_lives: 5,
            initial_lives: 5,
            initial_snake_length: 3,
            obstacles_per_black: 3,
            initial_obstacles: 0,
            candy_color_weights: CandyColorWeights::default(),
            assignment_policy: AssignmentPolicy::AsPaper,
            input_ends_read_pause: false,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        let bad = |msg: String| Err(GameError::Config(msg));
        if self.grid_width < 8 || self.grid_height < 8 {
            return bad(format!(
                "grid must be at least 8x8, got {}x{}",
                self.grid_width, self.grid_height
            ));
        }
        if self.tick_interval == 0 {
            return bad("tick_interval must be positive".into());
        }
        if self.read_pause == 0 {
            return bad("read_pause must be positive".into());
        }
        if self.yellow_pause != self.read_pause + 20 {
            return bad(format!(
                "yellow_pause must be read_pause + 20 ({}), got {}",
                self.read_pause + 20,
                self.yellow_pause
            ));
        }
        if self.initial_lives == 0 || self.initial_lives > self.max_lives {
            return bad(format!(
                "initial_lives must be in 1..={}, got {}",
                self.max_lives, self.initial_lives
            ));
        }
        if self.initial_snake_length == 0 || self.initial_snake_length as i32 > self.grid_width {
            return bad(format!(
                "initial_snake_length must be in 1..={}, got {}",
                self.grid_width, self.initial_snake_length
            ));
        }
        let cells = (self.grid_width * self.grid_height) as usize;
        if self.initial_obstacles + self.initial_snake_length + 3 > cells {
            return bad("initial_obstacles leave no room for candies".into());
        }
        for number in [CandyNumber::One, CandyNumber::Two] {
            let weights = self
                .candy_color_weights
                .for_number(number)
                .expect("1 and 2 carry weights");
            let keys: Vec<CandyColor> = weights.keys().copied().collect();
            let mut expected = number.colors().to_vec();
            expected.sort();
            if keys != expected {
                return bad(format!(
                    "weights for number {number} must cover exactly {expected:?}, got {keys:?}"
                ));
            }
            if let Some((c, w)) = weights.iter().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
                return bad(format!("weight for {c} on number {number} must be positive, got {w}"));
            }
        }
        Ok(())
    }

    pub fn read_pause_ms(&self) -> u64 {
        self.read_pause * 1000
    }

    pub fn yellow_pause_ms(&self) -> u64 {
        self.yellow_pause * 1000
    }
}
