use std::collections::BTreeMap;
use std::time::Duration;

use super::clock::Clock;
use super::event::{EatenSummary, EventKind, GameEnded, GeneratedCandy, LogRecord, SessionStarted, LOG_VERSION};
use super::log::EventLog;
use super::source::{GeneratedText, TextSource};
use super::SessionError;
use crate::game::{
    Candy, CandyColor, CandyEffect, CandyId, Direction, EndReason, GameConfig, GameError, GameState, Phase, TickOutcome,
};
use crate::story::{assign_segments, truncate_ending, Provenance, Story, StoryConfig, StorySegment};

/// Time kept free at the end of the read pause when generation runs long.
pub const SAFETY_MARGIN: Duration = Duration::from_secs(5);
/// Intents consumed per waiting window before the loop moves on.
pub const MAX_INTENTS_PER_WINDOW: usize = 16;
/// Longest human contribution kept, in characters.
pub const MAX_HUMAN_CHARS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Intent {
    Heading(Direction),
    YellowText(String),
}

/// What a controller sees when asked for input.
pub struct SessionView<'a> {
    pub state: &'a GameState,
    pub story: &'a Story,
    /// Candies of the current round with their texts.
    pub offers: &'a [GeneratedCandy],
    pub now_ms: u64,
    /// Sequence number the next event will get.
    pub next_seq: u64,
}

/// Source of player intents. Returns the next intent arriving before
/// `deadline_ms`, or `None` when nothing more arrives in time.
pub trait Controller {
    fn next_intent(&mut self, view: &SessionView<'_>, deadline_ms: u64) -> Option<Intent>;
}

/// A player who never does anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct Idle;

impl Controller for Idle {
    fn next_intent(&mut self, _view: &SessionView<'_>, _deadline_ms: u64) -> Option<Intent> {
        None
    }
}

/// Everything needed to start a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSetup {
    pub id: String,
    pub seed: u64,
    pub config: GameConfig,
    pub story: StoryConfig,
}

impl SessionSetup {
    pub fn new(id: impl Into<String>, seed: u64) -> Self {
        Self {
            id: id.into(),
            seed,
            config: GameConfig::default(),
            story: StoryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionSummary {
    pub id: String,
    pub rounds_played: u32,
    pub lives: u8,
    pub word_count: usize,
    pub candies_eaten: usize,
    pub end_reason: Option<EndReason>,
}

/// Borrowed snapshot passed to observers after every event.
pub struct Observed<'a> {
    pub record: &'a LogRecord,
    pub line: &'a str,
    pub state: &'a GameState,
    pub story: &'a Story,
}

pub type Observer = Box<dyn FnMut(&Observed<'_>) + Send>;

/// Single-writer session: owns the game state, the story and the event log,
/// and is the only place either is mutated.
pub struct Session {
    id: String,
    seed: u64,
    state: GameState,
    story: Story,
    story_config: StoryConfig,
    clock: Box<dyn Clock>,
    source: Box<dyn TextSource>,
    log: EventLog,
    offers: Vec<GeneratedCandy>,
    round_segments: BTreeMap<CandyId, StorySegment>,
    observer: Option<Observer>,
    expected: Option<Vec<EventKind>>,
    closed: bool,
}

impl Session {
    pub fn new(setup: SessionSetup, clock: Box<dyn Clock>, source: Box<dyn TextSource>) -> Result<Self, SessionError> {
        let state = GameState::new(setup.config, setup.seed)?;
        Ok(Self {
            id: setup.id,
            seed: setup.seed,
            state,
            story: Story::new(),
            story_config: setup.story,
            clock,
            source,
            log: EventLog::new(),
            offers: Vec::new(),
            round_segments: BTreeMap::new(),
            observer: None,
            expected: None,
            closed: false,
        })
    }

    pub fn with_log(mut self, log: EventLog) -> Self {
        self.log = log;
        self
    }

    pub fn with_observer(mut self, observer: Observer) -> Self {
        self.observer = Some(observer);
        self
    }

    /// Makes every emitted event be checked against `kinds`; the first
    /// difference aborts with [`SessionError::Diverged`].
    pub(crate) fn expecting(mut self, kinds: Vec<EventKind>) -> Self {
        self.expected = Some(kinds);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn story(&self) -> &Story {
        &self.story
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            id: self.id.clone(),
            rounds_played: self.state.rounds_played,
            lives: self.state.lives,
            word_count: self.story.word_count(),
            candies_eaten: self.state.candies_eaten.len(),
            end_reason: self.state.end_reason,
        }
    }

    fn generation_budget(&self) -> Duration {
        let pause = Duration::from_millis(self.state.config.read_pause_ms());
        pause.saturating_sub(SAFETY_MARGIN).max(pause / 2)
    }

    fn emit(&mut self, kind: EventKind) -> Result<(), SessionError> {
        let seq = self.log.next_seq();
        if let Some(expected) = &self.expected {
            match expected.get(seq as usize) {
                Some(e) if *e == kind => {}
                Some(e) => {
                    return Err(SessionError::Diverged {
                        seq,
                        detail: format!("log has {}, replay produced {}", e.name(), kind.name()),
                    })
                }
                None => {
                    return Err(SessionError::Diverged {
                        seq,
                        detail: format!("log ends before replayed {}", kind.name()),
                    })
                }
            }
        }
        let at = self.clock.now_ms();
        self.log.append(at, kind)?;
        if let Some(observer) = self.observer.as_mut() {
            let i = self.log.records().len() - 1;
            observer(&Observed {
                record: &self.log.records()[i],
                line: &self.log.lines()[i],
                state: &self.state,
                story: &self.story,
            });
        }
        Ok(())
    }

    fn ensure_started(&mut self) -> Result<(), SessionError> {
        if self.log.next_seq() == 0 {
            self.emit(EventKind::SessionStarted(SessionStarted {
                version: LOG_VERSION,
                session_id: self.id.clone(),
                seed: self.seed,
                config: self.state.config.clone(),
                story: self.story_config.clone(),
            }))?;
        }
        Ok(())
    }

    fn ask(&mut self, controller: &mut dyn Controller, deadline: u64) -> Option<Intent> {
        let view = SessionView {
            state: &self.state,
            story: &self.story,
            offers: &self.offers,
            now_ms: self.clock.now_ms(),
            next_seq: self.log.next_seq(),
        };
        controller.next_intent(&view, deadline)
    }

    /// Applies heading intents until the deadline. Returns true when an
    /// accepted heading should end the window early.
    fn take_headings(
        &mut self,
        controller: &mut dyn Controller,
        deadline: u64,
        end_on_heading: bool,
    ) -> Result<bool, SessionError> {
        for _ in 0..MAX_INTENTS_PER_WINDOW {
            match self.ask(controller, deadline) {
                None => break,
                Some(Intent::Heading(d)) => {
                    if self.state.snake.heading != d && self.state.set_heading(d) {
                        self.emit(EventKind::HeadingSet { direction: d })?;
                        if end_on_heading {
                            return Ok(true);
                        }
                    }
                }
                Some(Intent::YellowText(_)) => {}
            }
            if self.clock.now_ms() >= deadline {
                break;
            }
        }
        Ok(false)
    }

    fn take_yellow_text(&mut self, controller: &mut dyn Controller, deadline: u64) -> Option<String> {
        for _ in 0..MAX_INTENTS_PER_WINDOW {
            match self.ask(controller, deadline) {
                None => return None,
                Some(Intent::YellowText(t)) => return Some(t),
                Some(Intent::Heading(_)) => {}
            }
            if self.clock.now_ms() >= deadline {
                break;
            }
        }
        None
    }

    /// Plays one round from candy spawn to the next `AwaitingGeneration`, or
    /// to the end of the session.
    pub fn run_round(&mut self, controller: &mut dyn Controller) -> Result<(), SessionError> {
        self.ensure_started()?;
        if self.state.phase != Phase::AwaitingGeneration {
            return Err(GameError::WrongPhase {
                op: "run_round",
                phase: self.state.phase,
            }
            .into());
        }
        let round = self.state.round_index;

        let spawned = match self.state.spawn_round_candies() {
            Ok(c) => c,
            Err(GameError::BoardFull) => {
                self.state.end_board_full();
                return self.finish();
            }
            Err(e) => return Err(e.into()),
        };

        let requests = self.story.segment_requests(&self.story_config)?;
        let budget = self.generation_budget();
        let gen_start = self.clock.now_ms();
        let [coherent, creative] = self.source.segments(round, &requests, budget)?;
        self.clock
            .sleep_until(gen_start + coherent.latency_ms.max(creative.latency_ms));
        self.bind_round(round, &spawned, coherent, creative)?;
        self.emit(EventKind::SegmentsGenerated {
            round,
            candies: self.offers.clone(),
        })?;

        self.state.start_read_pause()?;
        self.emit(EventKind::ReadPauseStarted {
            round,
            duration: self.state.config.read_pause,
        })?;
        let deadline = self.clock.now_ms() + self.state.config.read_pause_ms();
        let skip = self.state.config.input_ends_read_pause;
        if !self.take_headings(controller, deadline, skip)? {
            self.clock.sleep_until(deadline);
        }
        self.state.start_moving()?;
        self.emit(EventKind::MovingStarted { round })?;

        let Some(eaten) = self.move_until_eaten(controller)? else {
            return self.finish();
        };

        let outcome = self.state.apply_candy_effect(&eaten)?;
        self.emit(EventKind::EffectApplied {
            effect: outcome.effect,
            lives_after: outcome.lives_after,
            obstacles_after: outcome.obstacles_after,
        })?;
        if outcome.effect == CandyEffect::HumanInput {
            self.emit(EventKind::YellowInputStarted {
                duration: self.state.config.yellow_pause,
            })?;
            let deadline = self.clock.now_ms() + self.state.config.yellow_pause_ms();
            let text = match self.take_yellow_text(controller, deadline) {
                Some(t) => t,
                None => {
                    self.clock.sleep_until(deadline);
                    String::new()
                }
            };
            let text: String = text.trim().chars().take(MAX_HUMAN_CHARS).collect();
            let text = text.trim_end().to_string();
            self.emit(EventKind::HumanTextSubmitted { text: text.clone() })?;
            let id = self.story.mint_segment_id();
            self.story.append_selected(StorySegment::human(id, &text, round))?;
            self.state.finish_yellow_input()?;
        } else {
            let segment = self
                .round_segments
                .remove(&eaten.id)
                .ok_or(GameError::UnboundCandy(eaten.id))?;
            self.story.append_selected(segment)?;
        }
        self.offers.clear();
        self.round_segments.clear();

        if self.state.is_over() {
            return self.finish();
        }
        Ok(())
    }

    fn bind_round(
        &mut self,
        round: u32,
        spawned: &[Candy],
        coherent: GeneratedText,
        creative: GeneratedText,
    ) -> Result<(), SessionError> {
        let coherent_seg = StorySegment::ai(
            self.story.mint_segment_id(),
            &coherent.text,
            Provenance::AICoherent,
            round,
        )?;
        let creative_seg = StorySegment::ai(
            self.story.mint_segment_id(),
            &creative.text,
            Provenance::AICreative,
            round,
        )?;
        let pairs = assign_segments(self.state.config.assignment_policy, spawned, coherent_seg, creative_seg)?;
        self.offers.clear();
        self.round_segments.clear();
        for candy in spawned {
            let mut entry = GeneratedCandy {
                id: candy.id,
                color: candy.color,
                number: candy.number,
                position: candy.position,
                text: None,
                temperature: None,
                provider_kind: None,
                fallback: false,
                latency_ms: 0,
            };
            if let Some((_, seg)) = pairs.iter().find(|(id, _)| *id == candy.id) {
                let meta = if seg.provenance == Provenance::AICoherent {
                    &coherent
                } else {
                    &creative
                };
                entry.text = Some(seg.text.clone());
                entry.temperature = seg.temperature;
                entry.provider_kind = Some(meta.provider_kind);
                entry.fallback = meta.fallback;
                entry.latency_ms = meta.latency_ms;
                self.state.bind_candy(candy.id, seg.id)?;
                self.round_segments.insert(candy.id, seg.clone());
            } else if candy.color != CandyColor::Yellow {
                return Err(GameError::UnboundCandy(candy.id).into());
            }
            self.offers.push(entry);
        }
        Ok(())
    }

    /// Ticks until a candy is eaten. `None` when the game ended first.
    fn move_until_eaten(&mut self, controller: &mut dyn Controller) -> Result<Option<Candy>, SessionError> {
        loop {
            let deadline = self.clock.now_ms() + self.state.config.tick_interval;
            self.take_headings(controller, deadline, false)?;
            self.clock.sleep_until(deadline);
            match self.state.tick()? {
                TickOutcome::Moved => {
                    self.emit(EventKind::Ticked {
                        head: self.state.snake.head(),
                    })?;
                }
                TickOutcome::CandyEaten(candy) => {
                    self.emit(EventKind::Ticked {
                        head: self.state.snake.head(),
                    })?;
                    self.emit(EventKind::CandyEaten { candy: candy.id })?;
                    return Ok(Some(candy));
                }
                TickOutcome::LifeLost {
                    cause,
                    lives_after,
                    respawned,
                } => {
                    self.emit(EventKind::LifeLost { cause, lives_after })?;
                    if let Some(positions) = respawned {
                        self.emit(EventKind::SnakeRespawned { positions })?;
                    }
                    if self.state.is_over() {
                        return Ok(None);
                    }
                }
            }
        }
    }

    /// Generates the ending, emits `GameEnded` and closes the log.
    fn finish(&mut self) -> Result<(), SessionError> {
        let (ending_text, meta) = if self.story.segments.is_empty() {
            (String::new(), None)
        } else {
            let request = self.story.ending_request(&self.story_config)?;
            let budget = self.generation_budget();
            let gen_start = self.clock.now_ms();
            let generated = self.source.ending(&request, budget)?;
            self.clock.sleep_until(gen_start + generated.latency_ms);
            let text = truncate_ending(&generated.text, self.story_config.ending_max_words);
            (text, Some(generated))
        };
        self.story.finish(ending_text.clone())?;
        let candies_eaten = self
            .state
            .candies_eaten
            .iter()
            .map(|e| EatenSummary {
                round: e.round_index,
                id: e.candy.id,
                color: e.candy.color,
                number: e.candy.number,
            })
            .collect();
        self.emit(EventKind::GameEnded(GameEnded {
            ending_text,
            word_count: self.story.word_count(),
            candies_eaten,
            end_reason: self.state.end_reason.expect("ended state has a reason"),
            ending_provider: meta.as_ref().map(|m| m.provider_kind),
            ending_fallback: meta.as_ref().is_some_and(|m| m.fallback),
            ending_latency_ms: meta.as_ref().map_or(0, |m| m.latency_ms),
            final_state: self.state.canonical_json(),
        }))?;
        self.log.flush()?;
        self.closed = true;
        Ok(())
    }

    /// Plays rounds until the game ends. Fails with
    /// [`SessionError::RoundCap`] if `max_rounds` rounds pass first.
    pub fn run_to_end(
        &mut self,
        controller: &mut dyn Controller,
        max_rounds: u32,
    ) -> Result<SessionSummary, SessionError> {
        self.ensure_started()?;
        while !self.closed {
            if self.state.round_index >= max_rounds {
                return Err(SessionError::RoundCap(max_rounds));
            }
            self.run_round(controller)?;
        }
        Ok(self.summary())
    }
}
