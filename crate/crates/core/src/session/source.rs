use std::collections::HashMap;
use std::time::{Duration, Instant};

use super::event::{EventKind, LogRecord};
use super::SessionError;
use crate::llm::{CompletionProvider, LlmError, ProviderKind, StubProvider};
use crate::story::{truncate_ending, GenerationRequest, SegmentRequests, StoryConfig, COHERENT_TEMPERATURE};

/// Text handed to the session for one request, with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedText {
    pub text: String,
    pub provider_kind: ProviderKind,
    pub fallback: bool,
    pub latency_ms: u64,
    /// Why the provider result was replaced, when it was.
    pub error: Option<String>,
}

/// Where a session gets its AI texts from.
pub trait TextSource: Send {
    /// Returns `[coherent, creative]` for the round.
    fn segments(
        &mut self,
        round: u32,
        requests: &SegmentRequests,
        budget: Duration,
    ) -> Result<[GeneratedText; 2], SessionError>;

    fn ending(&mut self, request: &GenerationRequest, budget: Duration) -> Result<GeneratedText, SessionError>;
}

/// Asks a provider, falling back to the stub corpus when it fails or
/// returns nothing usable.
pub struct LiveTextSource {
    provider: Box<dyn CompletionProvider>,
    fallback: StubProvider,
    ending_max_words: usize,
}

impl LiveTextSource {
    pub fn new(provider: Box<dyn CompletionProvider>, fallback_seed: u64, story: &StoryConfig) -> Self {
        Self {
            provider,
            fallback: StubProvider::new(fallback_seed),
            ending_max_words: story.ending_max_words,
        }
    }

    /// A source backed only by the stub provider.
    pub fn stub(seed: u64, story: &StoryConfig) -> Self {
        Self::new(Box::new(StubProvider::new(seed)), seed, story)
    }

    fn resolve(
        &self,
        request: &GenerationRequest,
        result: Result<crate::llm::CompletionResult, LlmError>,
        budget: Duration,
        started: Instant,
        usable: impl Fn(&str) -> bool,
    ) -> GeneratedText {
        let error = match result {
            Ok(r) if usable(&r.text) => {
                return GeneratedText {
                    text: r.text,
                    provider_kind: r.provider_kind,
                    fallback: false,
                    latency_ms: r.latency_ms,
                    error: None,
                }
            }
            Ok(_) => LlmError::Malformed("empty completion".into()),
            Err(e) => e,
        };
        let latency_ms = match error {
            LlmError::Timeout { .. } => budget.as_millis() as u64,
            _ => started.elapsed().as_millis() as u64,
        };
        let stub = self
            .fallback
            .complete(request, Duration::MAX)
            .expect("stub serves every valid request");
        GeneratedText {
            text: stub.text,
            provider_kind: ProviderKind::DeterministicStub,
            fallback: true,
            latency_ms,
            error: Some(error.to_string()),
        }
    }
}

impl TextSource for LiveTextSource {
    fn segments(
        &mut self,
        _round: u32,
        requests: &SegmentRequests,
        budget: Duration,
    ) -> Result<[GeneratedText; 2], SessionError> {
        let started = Instant::now();
        let provider = &self.provider;
        let (coherent, creative) = std::thread::scope(|s| {
            let creative = s.spawn(|| provider.complete(&requests.creative, budget));
            let coherent = provider.complete(&requests.coherent, budget);
            (coherent, creative.join().expect("completion thread panicked"))
        });
        let usable = |t: &str| !t.trim().is_empty();
        Ok([
            self.resolve(&requests.coherent, coherent, budget, started, usable),
            self.resolve(&requests.creative, creative, budget, started, usable),
        ])
    }

    fn ending(&mut self, request: &GenerationRequest, budget: Duration) -> Result<GeneratedText, SessionError> {
        let started = Instant::now();
        let result = self.provider.complete(request, budget);
        let max = self.ending_max_words;
        Ok(self.resolve(request, result, budget, started, |t| {
            !truncate_ending(t, max).is_empty()
        }))
    }
}

/// Serves the texts recorded in a log, for replay.
pub struct LoggedTextSource {
    rounds: HashMap<u32, [GeneratedText; 2]>,
    ending: Option<GeneratedText>,
}

impl LoggedTextSource {
    pub fn from_records(records: &[LogRecord]) -> Self {
        let mut rounds = HashMap::new();
        let mut ending = None;
        for record in records {
            match &record.kind {
                EventKind::SegmentsGenerated { round, candies } => {
                    let mut coherent = None;
                    let mut creative = None;
                    for c in candies {
                        let (Some(text), Some(t)) = (&c.text, c.temperature) else {
                            continue;
                        };
                        let g = GeneratedText {
                            text: text.clone(),
                            provider_kind: c.provider_kind.unwrap_or(ProviderKind::DeterministicStub),
                            fallback: c.fallback,
                            latency_ms: c.latency_ms,
                            error: None,
                        };
                        if t == COHERENT_TEMPERATURE {
                            coherent = Some(g);
                        } else {
                            creative = Some(g);
                        }
                    }
                    if let (Some(a), Some(b)) = (coherent, creative) {
                        rounds.insert(*round, [a, b]);
                    }
                }
                EventKind::GameEnded(e) => {
                    ending = e.ending_provider.map(|kind| GeneratedText {
                        text: e.ending_text.clone(),
                        provider_kind: kind,
                        fallback: e.ending_fallback,
                        latency_ms: e.ending_latency_ms,
                        error: None,
                    });
                }
                _ => {}
            }
        }
        Self { rounds, ending }
    }
}

impl TextSource for LoggedTextSource {
    fn segments(
        &mut self,
        round: u32,
        _requests: &SegmentRequests,
        _budget: Duration,
    ) -> Result<[GeneratedText; 2], SessionError> {
        self.rounds
            .remove(&round)
            .ok_or_else(|| SessionError::Replay(format!("log has no texts for round {round}")))
    }

    fn ending(&mut self, _request: &GenerationRequest, _budget: Duration) -> Result<GeneratedText, SessionError> {
        self.ending
            .take()
            .ok_or_else(|| SessionError::Replay("log has no generated ending".into()))
    }
}
