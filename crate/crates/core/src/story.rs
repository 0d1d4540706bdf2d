//! The story document and the prompting contract around it.
//!
//! A story is an ordered list of segments joined by single spaces. Each round
//! asks the completion provider for two continuations of the same context: a
//! coherent one at temperature 0.6 and a creative one at 1.4. When the snake
//! dies the story is closed by one more completion whose prompt ends with
//! [`ENDING_SUFFIX`], cut back to at most 80 words.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{AssignmentPolicy, Candy, CandyColor, CandyId, CandyNumber, SegmentId};

pub const TITLE: &str = "A Story of A Snake";
pub const OPENING_PROMPT: &str = "Write a story of a snake:";
pub const ENDING_SUFFIX: &str = ", and the story of the snake ends";
pub const COHERENT_TEMPERATURE: f64 = 0.6;
pub const CREATIVE_TEMPERATURE: f64 = 1.4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoryError {
    #[error("the story has already ended")]
    Ended,
    #[error("an ending needs at least one segment")]
    EmptyStory,
    #[error("AI segments must have text")]
    EmptyAiText,
    #[error("contract violation: {0}")]
    ContractViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    AICoherent,
    AICreative,
    Human,
}

impl Provenance {
    pub fn temperature(self) -> Option<f64> {
        match self {
            Self::AICoherent => Some(COHERENT_TEMPERATURE),
            Self::AICreative => Some(CREATIVE_TEMPERATURE),
            Self::Human => None,
        }
    }

    /// The candy number this provenance belongs to under the default binding.
    pub fn candy_number(self) -> CandyNumber {
        match self {
            Self::AICoherent => CandyNumber::One,
            Self::AICreative => CandyNumber::Two,
            Self::Human => CandyNumber::Three,
        }
    }

    pub fn from_temperature(t: Option<f64>) -> Option<Self> {
        match t {
            None => Some(Self::Human),
            Some(t) if t == COHERENT_TEMPERATURE => Some(Self::AICoherent),
            Some(t) if t == CREATIVE_TEMPERATURE => Some(Self::AICreative),
            Some(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorySegment {
    pub id: SegmentId,
    pub text: String,
    pub provenance: Provenance,
    pub round_index: u32,
    pub temperature: Option<f64>,
}

impl StorySegment {
    /// An AI segment. Surrounding whitespace is trimmed; the rest must be non-empty.
    pub fn ai(id: SegmentId, text: &str, provenance: Provenance, round_index: u32) -> Result<Self, StoryError> {
        if provenance == Provenance::Human {
            return Err(StoryError::ContractViolation(
                "ai() called with Human provenance".into(),
            ));
        }
        let text = text.trim();
        if text.is_empty() {
            return Err(StoryError::EmptyAiText);
        }
        Ok(Self {
            id,
            text: text.to_string(),
            provenance,
            round_index,
            temperature: provenance.temperature(),
        })
    }

    /// Player-written text; may be empty.
    pub fn human(id: SegmentId, text: &str, round_index: u32) -> Self {
        Self {
            id,
            text: text.trim().to_string(),
            provenance: Provenance::Human,
            round_index,
            temperature: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Purpose {
    Segment(CandyNumber),
    Ending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub purpose: Purpose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoryConfig {
    pub segment_max_tokens: u32,
    pub ending_max_tokens: u32,
    pub ending_max_words: usize,
    pub ending_temperature: f64,
    /// Characters of trailing story context sent with each request.
    pub context_chars: usize,
}

impl Default for StoryConfig {
    fn default() -> Self {
        Self {
            segment_max_tokens: 40,
            ending_max_tokens: 120,
            ending_max_words: 80,
            ending_temperature: COHERENT_TEMPERATURE,
            context_chars: 3000,
        }
    }
}

/// The pair of requests issued at the start of every round.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRequests {
    pub coherent: GenerationRequest,
    pub creative: GenerationRequest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Story {
    pub title: String,
    pub segments: Vec<StorySegment>,
    pub ended: bool,
    pub ending_text: Option<String>,
    next_segment_id: SegmentId,
}

impl Default for Story {
    fn default() -> Self {
        Self::new()
    }
}

impl Story {
    pub fn new() -> Self {
        Self {
            title: TITLE.to_string(),
            segments: Vec::new(),
            ended: false,
            ending_text: None,
            next_segment_id: 0,
        }
    }

    /// Allocates an id for a segment that may or may not end up in the story.
    pub fn mint_segment_id(&mut self) -> SegmentId {
        let id = self.next_segment_id;
        self.next_segment_id += 1;
        id
    }

    pub fn full_text(&self) -> String {
        let mut parts: Vec<&str> = self.segments.iter().map(|s| s.text.as_str()).collect();
        if let Some(ending) = self.ending_text.as_deref().filter(|_| self.ended) {
            if !ending.is_empty() {
                parts.push(ending);
            }
        }
        parts.join(" ")
    }

    pub fn word_count(&self) -> usize {
        word_count(&self.full_text())
    }

    pub fn segment_requests(&self, config: &StoryConfig) -> Result<SegmentRequests, StoryError> {
        if self.ended {
            return Err(StoryError::Ended);
        }
        let prompt = if self.segments.is_empty() {
            OPENING_PROMPT.to_string()
        } else {
            context_window(&self.full_text(), config.context_chars).to_string()
        };
        let request = |temperature, number| GenerationRequest {
            prompt: prompt.clone(),
            temperature,
            max_tokens: config.segment_max_tokens,
            purpose: Purpose::Segment(number),
        };
        Ok(SegmentRequests {
            coherent: request(COHERENT_TEMPERATURE, CandyNumber::One),
            creative: request(CREATIVE_TEMPERATURE, CandyNumber::Two),
        })
    }

    /// Appends a selected segment. Empty human text leaves the story unchanged.
    pub fn append_selected(&mut self, segment: StorySegment) -> Result<(), StoryError> {
        if self.ended {
            return Err(StoryError::Ended);
        }
        if segment.text.is_empty() {
            if segment.provenance == Provenance::Human {
                return Ok(());
            }
            return Err(StoryError::EmptyAiText);
        }
        self.segments.push(segment);
        Ok(())
    }

    pub fn ending_request(&self, config: &StoryConfig) -> Result<GenerationRequest, StoryError> {
        if self.ended {
            return Err(StoryError::Ended);
        }
        if self.segments.is_empty() {
            return Err(StoryError::EmptyStory);
        }
        let full = self.full_text();
        let mut prompt = context_window(&full, config.context_chars).to_string();
        prompt.push_str(ENDING_SUFFIX);
        Ok(GenerationRequest {
            prompt,
            temperature: config.ending_temperature,
            max_tokens: config.ending_max_tokens,
            purpose: Purpose::Ending,
        })
    }

    /// Closes the story with an ending that has already been truncated.
    pub fn finish(&mut self, ending_text: String) -> Result<(), StoryError> {
        if self.ended {
            return Err(StoryError::Ended);
        }
        self.ended = true;
        self.ending_text = Some(ending_text);
        Ok(())
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// The last `max_chars` characters of `text`.
pub fn context_window(text: &str, max_chars: usize) -> &str {
    let total = text.chars().count();
    if total <= max_chars {
        return text;
    }
    let skip = total - max_chars;
    let (byte, _) = text.char_indices().nth(skip).expect("skip < total");
    &text[byte..]
}

fn ends_sentence(word: &str) -> bool {
    let stripped = word.trim_end_matches(['"', '\'', '\u{201d}', '\u{2019}', ')', ']']);
    stripped.ends_with(['.', '!', '?', '\u{2026}'])
}

/// Cuts an ending to at most `max_words` words, at the last sentence boundary
/// inside that limit. Text with no boundary in range is cut at the limit and
/// closed with a period. Whitespace is normalized to single spaces.
pub fn truncate_ending(text: &str, max_words: usize) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    let Some(last) = words.last() else {
        return String::new();
    };
    if words.len() <= max_words && ends_sentence(last) {
        return words.join(" ");
    }
    let limit = words.len().min(max_words);
    if let Some(i) = words[..limit].iter().rposition(|w| ends_sentence(w)) {
        return words[..=i].join(" ");
    }
    let mut cut = words[..limit].join(" ");
    let trimmed = cut.trim_end_matches([',', ';', ':', '-', '\u{2014}']).len();
    cut.truncate(trimmed);
    cut.push('.');
    cut
}

/// Checks that a segment may be bound to a candy under the default rule
/// (number 1 takes coherent text, number 2 creative, number 3 human).
pub fn bind_segment(candy: &Candy, segment: &StorySegment) -> Result<Candy, StoryError> {
    if candy.segment_id.is_some() {
        return Err(StoryError::ContractViolation(format!(
            "candy {} is already bound",
            candy.id
        )));
    }
    if segment.provenance.candy_number() != candy.number {
        return Err(StoryError::ContractViolation(format!(
            "{:?} segment cannot go on a number-{} candy",
            segment.provenance, candy.number
        )));
    }
    Ok(Candy {
        segment_id: Some(segment.id),
        ..candy.clone()
    })
}

/// Decides which candy receives which of the round's two AI segments.
///
/// `AsPaper` uses the strict number rule. `AlignedPositive` puts the coherent
/// segment on the candy with the better effect; equal effects fall back to the
/// number rule. Yellow candies are never bound here.
pub fn assign_segments(
    policy: AssignmentPolicy,
    candies: &[Candy],
    coherent: StorySegment,
    creative: StorySegment,
) -> Result<Vec<(CandyId, StorySegment)>, StoryError> {
    let find = |n: CandyNumber| {
        candies
            .iter()
            .find(|c| c.number == n && c.color != CandyColor::Yellow)
            .ok_or_else(|| StoryError::ContractViolation(format!("round has no number-{n} candy")))
    };
    let one = find(CandyNumber::One)?;
    let two = find(CandyNumber::Two)?;
    match policy {
        AssignmentPolicy::AsPaper => {
            bind_segment(one, &coherent)?;
            bind_segment(two, &creative)?;
            Ok(vec![(one.id, coherent), (two.id, creative)])
        }
        AssignmentPolicy::AlignedPositive => {
            if two.effect().rank() > one.effect().rank() {
                Ok(vec![(one.id, creative), (two.id, coherent)])
            } else {
                Ok(vec![(one.id, coherent), (two.id, creative)])
            }
        }
    }
}
