use std::collections::HashSet;
use std::sync::OnceLock;
use std::time::Duration;

use serde::Deserialize;

use super::{validate_request, CompletionProvider, CompletionResult, LlmError, ProviderKind};
use crate::rng::splitmix64;
use crate::story::{GenerationRequest, Purpose, COHERENT_TEMPERATURE, CREATIVE_TEMPERATURE};

const CORPUS_JSON: &str = include_str!("../../assets/stub_corpus.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StubPool {
    Coherent,
    Creative,
    Ending,
}

impl StubPool {
    pub fn for_request(request: &GenerationRequest) -> Result<Self, LlmError> {
        match request.purpose {
            Purpose::Ending => Ok(Self::Ending),
            Purpose::Segment(_) if request.temperature == COHERENT_TEMPERATURE => Ok(Self::Coherent),
            Purpose::Segment(_) if request.temperature == CREATIVE_TEMPERATURE => Ok(Self::Creative),
            Purpose::Segment(_) => Err(LlmError::InvalidRequest(format!(
                "stub has no pool for temperature {}",
                request.temperature
            ))),
        }
    }

    fn tag(self) -> u64 {
        match self {
            Self::Coherent => 1,
            Self::Creative => 2,
            Self::Ending => 3,
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct StubCorpus {
    pub version: u32,
    pub coherent: Vec<String>,
    pub creative: Vec<String>,
    pub ending: Vec<String>,
    #[serde(skip)]
    coherent_set: HashSet<String>,
    #[serde(skip)]
    creative_set: HashSet<String>,
}

impl StubCorpus {
    pub fn bundled() -> &'static StubCorpus {
        static CORPUS: OnceLock<StubCorpus> = OnceLock::new();
        CORPUS.get_or_init(|| {
            let mut corpus: StubCorpus = serde_json::from_str(CORPUS_JSON).expect("bundled corpus is valid JSON");
            corpus.coherent_set = corpus.coherent.iter().cloned().collect();
            corpus.creative_set = corpus.creative.iter().cloned().collect();
            corpus
        })
    }

    pub fn pool(&self, pool: StubPool) -> &[String] {
        match pool {
            StubPool::Coherent => &self.coherent,
            StubPool::Creative => &self.creative,
            StubPool::Ending => &self.ending,
        }
    }

    /// Which segment pool a text came from, if any.
    pub fn pool_of(&self, text: &str) -> Option<StubPool> {
        if self.coherent_set.contains(text) {
            Some(StubPool::Coherent)
        } else if self.creative_set.contains(text) {
            Some(StubPool::Creative)
        } else {
            None
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Deterministic fragment for (seed, pool, context). The context enters the
/// key through its length and content hash, so successive rounds of one
/// story draw different fragments.
pub fn stub_fragment(seed: u64, pool: StubPool, context: &str) -> &'static str {
    let fragments = StubCorpus::bundled().pool(pool);
    let mut key = seed
        ^ pool.tag().wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (context.chars().count() as u64).rotate_left(32)
        ^ fnv1a(context.as_bytes());
    let h = splitmix64(&mut key);
    &fragments[(h % fragments.len() as u64) as usize]
}

/// Offline provider backed by the bundled corpus.
#[derive(Debug, Clone)]
pub struct StubProvider {
    seed: u64,
    simulated_latency: Duration,
}

impl StubProvider {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            simulated_latency: Duration::ZERO,
        }
    }

    /// Reports `latency` on every completion and times out when it exceeds the
    /// caller's budget. Nothing actually sleeps.
    pub fn with_simulated_latency(mut self, latency: Duration) -> Self {
        self.simulated_latency = latency;
        self
    }
}

impl CompletionProvider for StubProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::DeterministicStub
    }

    fn complete(&self, request: &GenerationRequest, budget: Duration) -> Result<CompletionResult, LlmError> {
        validate_request(request)?;
        if self.simulated_latency > budget {
            return Err(LlmError::Timeout { attempts: 1 });
        }
        let pool = StubPool::for_request(request)?;
        Ok(CompletionResult {
            text: stub_fragment(self.seed, pool, &request.prompt).to_string(),
            latency_ms: self.simulated_latency.as_millis() as u64,
            provider_kind: ProviderKind::DeterministicStub,
            truncated: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::story::{word_count, Story, StoryConfig};

    #[test]
    fn corpus_shape() {
        let c = StubCorpus::bundled();
        assert_eq!(c.version, 1);
        for pool in [StubPool::Coherent, StubPool::Creative, StubPool::Ending] {
            let frags = c.pool(pool);
            assert!(frags.len() >= 64, "{pool:?} has {}", frags.len());
            let unique: HashSet<&String> = frags.iter().collect();
            assert_eq!(unique.len(), frags.len(), "{pool:?} has duplicates");
            for f in frags {
                let n = word_count(f);
                assert!((20..=35).contains(&n), "{pool:?} fragment has {n} words: {f}");
            }
        }
        assert!(c.coherent_set.is_disjoint(&c.creative_set));
    }

    #[test]
    fn endings_close_with_a_sentence() {
        for e in &StubCorpus::bundled().ending {
            assert!(word_count(e) <= 80);
            assert!(e.ends_with('.'), "{e}");
        }
    }

    #[test]
    fn fragment_is_deterministic() {
        let a = stub_fragment(1, StubPool::Coherent, "");
        assert_eq!(a, stub_fragment(1, StubPool::Coherent, ""));
        assert_eq!(StubCorpus::bundled().pool_of(a), Some(StubPool::Coherent));
    }

    #[test]
    fn pools_never_cross_over_seeds() {
        let corpus = StubCorpus::bundled();
        let reqs = Story::new().segment_requests(&StoryConfig::default()).unwrap();
        for seed in 0..1000 {
            let p = StubProvider::new(seed);
            let low = p.complete(&reqs.coherent, Duration::from_secs(1)).unwrap();
            let high = p.complete(&reqs.creative, Duration::from_secs(1)).unwrap();
            assert_eq!(corpus.pool_of(&low.text), Some(StubPool::Coherent));
            assert_eq!(corpus.pool_of(&high.text), Some(StubPool::Creative));
            assert!(low.latency_ms <= 5);
            assert_eq!(low, p.complete(&reqs.coherent, Duration::from_secs(1)).unwrap());
        }
    }

    #[test]
    fn seeds_spread_over_pool() {
        let distinct: HashSet<&str> = (0..500).map(|s| stub_fragment(s, StubPool::Creative, "")).collect();
        assert!(distinct.len() > 50, "only {} distinct", distinct.len());
    }

    #[test]
    fn simulated_latency_is_reported_and_budgeted() {
        let req = Story::new().segment_requests(&StoryConfig::default()).unwrap().coherent;
        let p = StubProvider::new(3).with_simulated_latency(Duration::from_millis(3000));
        assert_eq!(p.complete(&req, Duration::from_secs(20)).unwrap().latency_ms, 3000);
        assert!(matches!(
            p.complete(&req, Duration::from_secs(2)),
            Err(LlmError::Timeout { .. })
        ));
    }
}
