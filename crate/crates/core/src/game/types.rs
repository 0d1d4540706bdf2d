use std::fmt;

use serde::{Deserialize, Serialize};

/// Grid cell. `x` is the column, `y` the row; (0, 0) is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: i32,
    pub y: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, direction: Direction) -> Self {
        let (dx, dy) = direction.delta();
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn is_neighbor(self, other: Position) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn opposite(self) -> Self {
        match self {
            Self::Up => Self::Down,
            Self::Down => Self::Up,
            Self::Left => Self::Right,
            Self::Right => Self::Left,
        }
    }

    /// (dx, dy) with y growing downwards.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Self::Up => (0, -1),
            Self::Down => (0, 1),
            Self::Left => (-1, 0),
            Self::Right => (1, 0),
        }
    }

    /// Direction of the single step from `from` to `to`, if they are neighbors.
    pub fn between(from: Position, to: Position) -> Option<Self> {
        Self::ALL.into_iter().find(|d| from.step(*d) == to)
    }
}

/// Snake body, head first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snake {
    pub body: Vec<Position>,
    pub heading: Direction,
}

impl Snake {
    pub fn head(&self) -> Position {
        self.body[0]
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    pub fn occupies(&self, p: Position) -> bool {
        self.body.contains(&p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CandyColor {
    Red,
    Black,
    White,
    Blue,
    Green,
    Yellow,
}

impl CandyColor {
    /// Candy-table order, used wherever colors are listed.
    pub const TABLE_ORDER: [CandyColor; 6] = [
        CandyColor::Red,
        CandyColor::Black,
        CandyColor::White,
        CandyColor::Blue,
        CandyColor::Green,
        CandyColor::Yellow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Red => "red",
            Self::Black => "black",
            Self::White => "white",
            Self::Blue => "blue",
            Self::Green => "green",
            Self::Yellow => "yellow",
        }
    }
}

impl fmt::Display for CandyColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The number printed on a candy. Serialized as the bare integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum CandyNumber {
    One,
    Two,
    Three,
}

impl CandyNumber {
    pub fn value(self) -> u8 {
        match self {
            Self::One => 1,
            Self::Two => 2,
            Self::Three => 3,
        }
    }

    /// Colors a candy with this number may take.
    pub fn colors(self) -> &'static [CandyColor] {
        match self {
            Self::One => &[CandyColor::Red, CandyColor::Black, CandyColor::White],
            Self::Two => &[CandyColor::White, CandyColor::Blue, CandyColor::Green],
            Self::Three => &[CandyColor::Yellow],
        }
    }
}

impl From<CandyNumber> for u8 {
    fn from(n: CandyNumber) -> u8 {
        n.value()
    }
}

impl TryFrom<u8> for CandyNumber {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            other => Err(format!("candy number must be 1, 2 or 3, got {other}")),
        }
    }
}

impl fmt::Display for CandyNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CandyEffect {
    LoseOneLife,
    AddObstacles,
    None,
    SpawnYellowNextRound,
    RestoreOneLife,
    HumanInput,
}

impl CandyEffect {
    /// The effect for a (color, number) pair, or `None` for pairs outside the candy table.
    pub fn of(color: CandyColor, number: CandyNumber) -> Option<CandyEffect> {
        use CandyColor::*;
        use CandyNumber::*;
        Some(match (color, number) {
            (Red, One) => CandyEffect::LoseOneLife,
            (Black, One) => CandyEffect::AddObstacles,
            (White, One) | (White, Two) => CandyEffect::None,
            (Blue, Two) => CandyEffect::SpawnYellowNextRound,
            (Green, Two) => CandyEffect::RestoreOneLife,
            (Yellow, Three) => CandyEffect::HumanInput,
            _ => return Option::None,
        })
    }

    /// Higher is better for the player. Used by the aligned assignment policy
    /// and by scripted players.
    pub fn rank(self) -> u8 {
        match self {
            CandyEffect::RestoreOneLife | CandyEffect::SpawnYellowNextRound => 2,
            CandyEffect::None | CandyEffect::HumanInput => 1,
            CandyEffect::LoseOneLife | CandyEffect::AddObstacles => 0,
        }
    }
}

pub type CandyId = u32;
pub type SegmentId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candy {
    pub id: CandyId,
    pub color: CandyColor,
    pub number: CandyNumber,
    pub position: Position,
    pub segment_id: Option<SegmentId>,
}

impl Candy {
    pub fn effect(&self) -> CandyEffect {
        CandyEffect::of(self.color, self.number).expect("candy built from the candy table")
    }
}
