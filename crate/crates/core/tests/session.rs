mod common;

use std::io::Write;
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use common::{small_config, stub_session, Chaser, RandomInput};
use snake_story_core::game::{CandyColor, CandyEffect, CandyNumber, Direction, GameConfig, Phase};
use snake_story_core::llm::{HttpProvider, ProviderConfig, ProviderKind, Secret, StubProvider};
use snake_story_core::session::{
    replay, replay_text, EventKind, EventLog, Idle, LiveTextSource, LogRecord, ReplayError, Session, SessionError,
    SessionLog, SessionSetup, SimClock,
};
use snake_story_core::story::{word_count, StoryConfig, ENDING_SUFFIX, OPENING_PROMPT};

const CAP: u32 = 10_000;

fn kinds(session: &Session) -> Vec<&EventKind> {
    session.log().records().iter().map(|r| &r.kind).collect()
}

fn at_of(records: &[LogRecord], pred: impl Fn(&EventKind) -> bool) -> Vec<u64> {
    records.iter().filter(|r| pred(&r.kind)).map(|r| r.at).collect()
}

#[test]
fn read_pause_is_25_seconds_and_expiry_keeps_heading() {
    let mut s = stub_session("t", 1, GameConfig::default());
    s.run_round(&mut Idle).unwrap();
    let r = s.log().records();
    let start = at_of(r, |k| matches!(k, EventKind::ReadPauseStarted { duration: 25, .. }))[0];
    let moving = at_of(r, |k| matches!(k, EventKind::MovingStarted { .. }))[0];
    assert_eq!(moving - start, 25_000);
    assert!(!r.iter().any(|x| matches!(x.kind, EventKind::HeadingSet { .. })));
    let first_tick = r.iter().find_map(|x| match x.kind {
        EventKind::Ticked { head } => Some((head, x.at)),
        _ => None,
    });
    let (head, at) = first_tick.unwrap();
    assert_eq!(head.x, 8 + 1, "moved right from the starting head");
    assert_eq!(at - moving, 250);
}

#[test]
fn yellow_input_lasts_45_seconds_without_input() {
    let mut found = 0;
    for seed in 0..40 {
        let mut chaser = Chaser::blue_first();
        chaser.yellow_text = None;
        let mut s = stub_session("t", seed, small_config());
        s.run_to_end(&mut chaser, CAP).unwrap();
        let r = s.log().records();
        for (i, rec) in r.iter().enumerate() {
            if let EventKind::YellowInputStarted { duration } = rec.kind {
                assert_eq!(duration, 45);
                let next = &r[i + 1];
                assert_eq!(next.kind, EventKind::HumanTextSubmitted { text: String::new() });
                assert_eq!(next.at - rec.at, 45_000);
                assert_eq!(duration, GameConfig::default().read_pause + 20);
                found += 1;
            }
        }
    }
    assert!(found > 0, "no yellow candy eaten in any seed");
}

#[test]
fn blue_spawns_yellow_next_round_and_only_then() {
    let mut blues = 0;
    for seed in 0..30 {
        let mut s = stub_session("t", seed, small_config());
        s.run_to_end(&mut Chaser::blue_first(), CAP).unwrap();
        let mut blue_last_round = false;
        for k in kinds(&s) {
            match k {
                EventKind::SegmentsGenerated { candies, .. } => {
                    let yellow = candies.iter().any(|c| c.color == CandyColor::Yellow);
                    assert_eq!(yellow, blue_last_round);
                    assert_eq!(candies.len(), if yellow { 3 } else { 2 });
                    blue_last_round = false;
                }
                EventKind::EffectApplied { effect, .. } => {
                    blue_last_round = *effect == CandyEffect::SpawnYellowNextRound;
                    blues += blue_last_round as u32;
                }
                _ => {}
            }
        }
    }
    assert!(blues > 0);
}

#[test]
fn heading_during_read_pause_does_not_end_it_by_default() {
    let mut s = stub_session("t", 3, GameConfig::default());
    s.run_round(&mut Chaser::blue_first()).unwrap();
    let r = s.log().records();
    let start = at_of(r, |k| matches!(k, EventKind::ReadPauseStarted { .. }))[0];
    let moving = at_of(r, |k| matches!(k, EventKind::MovingStarted { .. }))[0];
    assert_eq!(moving - start, 25_000);
}

#[test]
fn input_can_end_read_pause_when_configured() {
    let config = GameConfig {
        input_ends_read_pause: true,
        ..GameConfig::default()
    };
    // Find a seed where the first move is a turn.
    for seed in 0..50 {
        let mut s = stub_session("t", seed, config.clone());
        s.run_round(&mut Chaser::blue_first()).unwrap();
        let r = s.log().records();
        let pos = |p: fn(&EventKind) -> bool| r.iter().position(|x| p(&x.kind)).unwrap();
        let pause = pos(|k| matches!(k, EventKind::ReadPauseStarted { .. }));
        if matches!(r[pause + 1].kind, EventKind::HeadingSet { .. }) {
            assert!(matches!(r[pause + 2].kind, EventKind::MovingStarted { .. }));
            assert_eq!(r[pause + 2].at, r[pause].at);
            return;
        }
    }
    panic!("no seed turned during the read pause");
}

#[test]
fn round_event_order() {
    let mut s = stub_session("t", 5, GameConfig::default());
    s.run_round(&mut Chaser::blue_first()).unwrap();
    let names: Vec<&str> = kinds(&s).iter().map(|k| k.name()).collect();
    let pos = |n: &str| names.iter().position(|x| *x == n).unwrap();
    assert_eq!(&names[..3], ["SessionStarted", "SegmentsGenerated", "ReadPauseStarted"]);
    assert!(pos("MovingStarted") < pos("CandyEaten"));
    let eaten = names.iter().position(|n| *n == "CandyEaten").unwrap();
    assert_eq!(names[eaten - 1], "Ticked");
    assert_eq!(names[eaten + 1], "EffectApplied");
    assert_eq!(s.state().phase, Phase::AwaitingGeneration);
    assert_eq!(s.story().segments.len(), 1);
}

#[test]
fn first_round_texts_follow_temperature_rule() {
    for seed in 0..200 {
        let mut s = stub_session("t", seed, GameConfig::default());
        s.run_round(&mut Idle).ok();
        for k in kinds(&s) {
            if let EventKind::SegmentsGenerated { candies, .. } = k {
                for c in candies {
                    let expected = match c.number {
                        CandyNumber::One => Some(0.6),
                        CandyNumber::Two => Some(1.4),
                        CandyNumber::Three => None,
                    };
                    assert_eq!(c.temperature, expected);
                }
            }
        }
    }
}

#[test]
fn red_at_one_life_ends_the_game_with_an_ending() {
    let config = GameConfig {
        initial_lives: 1,
        ..small_config()
    };
    use CandyColor::*;
    for seed in 0..60 {
        let mut s = stub_session("t", seed, config.clone());
        let mut red_first = Chaser::new(&[Red, Black, White, Blue, Green, Yellow]);
        s.run_to_end(&mut red_first, CAP).unwrap();
        let ks = kinds(&s);
        let red = ks.iter().position(|k| {
            matches!(
                k,
                EventKind::EffectApplied {
                    effect: CandyEffect::LoseOneLife,
                    ..
                }
            )
        });
        if let Some(i) = red {
            assert!(matches!(ks[i], EventKind::EffectApplied { lives_after: 0, .. }));
            assert!(matches!(ks[i + 1], EventKind::GameEnded(_)));
            assert!(s.story().ended);
            assert_eq!(s.state().phase, Phase::Ended);
            let EventKind::GameEnded(end) = ks[i + 1] else {
                unreachable!()
            };
            assert!(!end.ending_text.is_empty());
            return;
        }
    }
    panic!("no red candy eaten");
}

#[test]
fn ending_accounting_matches_the_log() {
    for seed in 0..25 {
        let mut s = stub_session("t", seed, small_config());
        s.run_to_end(&mut RandomInput::new(seed), CAP).unwrap();
        let log = SessionLog::parse(&s.log().to_jsonl()).unwrap();
        let end = log.ended().unwrap();

        let eaten_events: Vec<u32> = log
            .kinds()
            .filter_map(|k| match k {
                EventKind::CandyEaten { candy } => Some(*candy),
                _ => None,
            })
            .collect();
        assert_eq!(end.candies_eaten.len(), eaten_events.len());
        assert_eq!(end.candies_eaten.iter().map(|e| e.id).collect::<Vec<_>>(), eaten_events);

        // Rebuild the story text from the log alone.
        let mut texts: std::collections::HashMap<u32, String> = Default::default();
        let mut parts: Vec<String> = Vec::new();
        for k in log.kinds() {
            match k {
                EventKind::SegmentsGenerated { candies, .. } => {
                    for c in candies {
                        if let Some(t) = &c.text {
                            texts.insert(c.id, t.clone());
                        }
                    }
                }
                EventKind::CandyEaten { candy } => {
                    if let Some(t) = texts.get(candy) {
                        parts.push(t.clone());
                    }
                }
                EventKind::HumanTextSubmitted { text } if !text.is_empty() => parts.push(text.clone()),
                _ => {}
            }
        }
        if !end.ending_text.is_empty() {
            parts.push(end.ending_text.clone());
        }
        assert_eq!(end.word_count, word_count(&parts.join(" ")));
        assert_eq!(end.word_count, s.story().word_count());
        assert!(word_count(&end.ending_text) <= 80);
        assert_eq!(end.final_state, s.state().canonical_json());
    }
}

#[test]
fn empty_yellow_submission_appends_nothing() {
    for seed in 0..40 {
        let mut chaser = Chaser::blue_first();
        chaser.yellow_text = Some("   ".into());
        let mut s = stub_session("t", seed, small_config());
        s.run_to_end(&mut chaser, CAP).unwrap();
        let submitted = kinds(&s)
            .iter()
            .filter(|k| matches!(k, EventKind::HumanTextSubmitted { text } if text.is_empty()))
            .count();
        if submitted > 0 {
            let eaten_ai = s
                .state()
                .candies_eaten
                .iter()
                .filter(|e| e.candy.color != CandyColor::Yellow)
                .count();
            assert_eq!(s.story().segments.len(), eaten_ai);
            return;
        }
    }
    panic!("no yellow eaten");
}

#[test]
fn sessions_terminate_and_keep_invariants() {
    for seed in 0..30 {
        let mut s = stub_session("t", seed, small_config());
        let summary = s.run_to_end(&mut RandomInput::new(seed ^ 77), CAP).unwrap();
        assert!(s.state().invariant_violations().is_empty());
        assert!(s.is_closed());
        assert_eq!(summary.rounds_played, s.state().rounds_played);
    }
}

#[test]
fn simulated_latency_delays_the_pause_not_shortens_it() {
    let story = StoryConfig::default();
    let setup = SessionSetup::new("lat", 9);
    let provider = StubProvider::new(9).with_simulated_latency(Duration::from_millis(3_500));
    let source = LiveTextSource::new(Box::new(provider), 9, &story);
    let mut s = Session::new(setup, Box::new(SimClock::new()), Box::new(source)).unwrap();
    s.run_round(&mut Idle).unwrap();
    let r = s.log().records();
    let generated = at_of(r, |k| matches!(k, EventKind::SegmentsGenerated { .. }))[0];
    let pause = at_of(r, |k| matches!(k, EventKind::ReadPauseStarted { .. }))[0];
    let moving = at_of(r, |k| matches!(k, EventKind::MovingStarted { .. }))[0];
    assert_eq!(generated, 3_500);
    assert_eq!(pause, 3_500);
    assert_eq!(moving - pause, 25_000);
    let EventKind::SegmentsGenerated { candies, .. } = &r[1].kind else {
        panic!()
    };
    assert!(candies.iter().all(|c| c.latency_ms == 3_500 && !c.fallback));
}

#[test]
fn latency_envelope_fits_the_budget() {
    for ms in [2_000, 3_000, 4_000, 5_000] {
        let story = StoryConfig::default();
        let provider = StubProvider::new(1).with_simulated_latency(Duration::from_millis(ms));
        let source = LiveTextSource::new(Box::new(provider), 1, &story);
        let mut s = Session::new(SessionSetup::new("e", 1), Box::new(SimClock::new()), Box::new(source)).unwrap();
        s.run_round(&mut Idle).unwrap();
        let EventKind::SegmentsGenerated { candies, .. } = &s.log().records()[1].kind else {
            panic!()
        };
        assert!(candies.iter().all(|c| !c.fallback));
    }
}

#[test]
fn slow_provider_is_replaced_by_stub_within_budget() {
    let story = StoryConfig::default();
    let provider = StubProvider::new(2).with_simulated_latency(Duration::from_secs(22));
    let source = LiveTextSource::new(Box::new(provider), 2, &story);
    let mut s = Session::new(
        SessionSetup::new("slow", 2),
        Box::new(SimClock::new()),
        Box::new(source),
    )
    .unwrap();
    s.run_round(&mut Idle).unwrap();
    let r = s.log().records();
    assert_eq!(r[1].at, 20_000, "budget is the read pause minus 5 s");
    let EventKind::SegmentsGenerated { candies, .. } = &r[1].kind else {
        panic!()
    };
    for c in candies {
        assert!(c.fallback);
        assert_eq!(c.provider_kind, Some(ProviderKind::DeterministicStub));
    }
}

fn refusing_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut buf = [0u8; 8192];
            let _ = std::io::Read::read(&mut stream, &mut buf);
            let _ = stream.write_all(b"HTTP/1.1 401 Unauthorized\r\nContent-Length: 2\r\nConnection: close\r\n\r\n{}");
        }
    });
    url
}

#[test]
fn provider_failure_falls_back_and_no_secret_leaks() {
    let secret = "sk-live-DO-NOT-LOG-4242";
    let config = ProviderConfig {
        kind: ProviderKind::HttpCompletion,
        endpoint: Some(refusing_server()),
        ..ProviderConfig::default()
    };
    let provider = HttpProvider::new(config.clone(), Some(Secret::new(secret))).unwrap();
    let story = StoryConfig::default();
    let source = LiveTextSource::new(Box::new(provider), 4, &story);
    let setup = SessionSetup {
        config: small_config(),
        ..SessionSetup::new("leak", 4)
    };
    let mut s = Session::new(setup, Box::new(SimClock::new()), Box::new(source)).unwrap();
    s.run_to_end(&mut RandomInput::new(4), CAP).unwrap();

    let jsonl = s.log().to_jsonl();
    assert!(!jsonl.contains(secret));
    assert!(!s.state().canonical_json().contains(secret));
    assert!(!format!("{:?}", s.state()).contains(secret));
    assert!(!format!("{config:?}").contains(secret));
    let log = SessionLog::parse(&jsonl).unwrap();
    let end = log.ended().unwrap();
    assert!(end.ending_fallback || end.ending_provider.is_none());
    for k in log.kinds() {
        if let EventKind::SegmentsGenerated { candies, .. } = k {
            assert!(candies.iter().filter(|c| c.text.is_some()).all(|c| c.fallback));
        }
    }
    replay(&log).unwrap();
}

#[test]
fn replay_round_trip() {
    for seed in 0..40 {
        let mut s = stub_session(&format!("r{seed}"), seed, small_config());
        if seed % 2 == 0 {
            s.run_to_end(&mut RandomInput::new(seed), CAP).unwrap();
        } else {
            s.run_to_end(&mut Chaser::blue_first(), CAP).unwrap();
        }
        let replayed = replay_text(&s.log().to_jsonl()).unwrap();
        assert_eq!(replayed.final_state, s.state().canonical_json());
        assert_eq!(replayed.story, *s.story());
    }
}

#[test]
fn same_seed_same_log() {
    let run = || {
        let mut s = stub_session("d", 11, small_config());
        s.run_to_end(&mut RandomInput::new(3), CAP).unwrap();
        s.log().to_jsonl()
    };
    assert_eq!(run(), run());
}

fn finished_log(seed: u64) -> String {
    let mut s = stub_session("m", seed, small_config());
    s.run_to_end(&mut RandomInput::new(seed), CAP).unwrap();
    s.log().to_jsonl()
}

#[test]
fn corrupt_logs_are_rejected_at_the_first_bad_seq() {
    let text = finished_log(6);
    let lines: Vec<&str> = text.lines().collect();
    let join = |ls: &[&str]| ls.iter().map(|l| format!("{l}\n")).collect::<String>();

    let err = replay_text("").unwrap_err();
    assert_eq!(err.seq(), Some(0));

    let mut gap = lines.clone();
    gap.remove(5);
    assert_eq!(replay_text(&join(&gap)).unwrap_err().seq(), Some(5));

    let mut swapped = lines.clone();
    swapped.swap(3, 4);
    assert_eq!(replay_text(&join(&swapped)).unwrap_err().seq(), Some(3));

    let mut edited = lines.clone();
    let changed = edited[7].replacen("\"at\":", "\"at\":1", 1);
    edited[7] = &changed;
    assert_eq!(replay_text(&join(&edited)).unwrap_err().seq(), Some(7));

    let mut spaced = lines.clone();
    let with_space = format!("{} ", lines[2]);
    spaced[2] = &with_space;
    assert_eq!(replay_text(&join(&spaced)).unwrap_err().seq(), Some(2));

    let truncated = join(&lines[..lines.len() - 1]);
    assert!(matches!(replay_text(&truncated), Err(ReplayError::Incomplete)));

    let no_start = join(&lines[1..]);
    assert_eq!(replay_text(&no_start).unwrap_err().seq(), Some(0));
}

#[test]
fn re_chained_edit_is_caught_by_re_execution() {
    // Rewrite a heading and recompute every checksum: the chain is intact
    // but the state machine no longer produces the same events.
    let text = finished_log(8);
    let mut records: Vec<LogRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let i = records
        .iter()
        .position(|r| matches!(r.kind, EventKind::Ticked { .. }))
        .unwrap();
    if let EventKind::Ticked { head } = &mut records[i].kind {
        head.x += 1;
    }
    let mut log = EventLog::new();
    for r in records {
        log.append(r.at, r.kind).unwrap();
    }
    let err = replay_text(&log.to_jsonl()).unwrap_err();
    assert!(
        matches!(err, ReplayError::Diverged { seq, .. } if seq == i as u64),
        "{err:?}"
    );
}

#[test]
fn observer_and_sink_see_every_line() {
    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);
    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }
    let sink = Shared::default();
    let seen = Arc::new(Mutex::new(String::new()));
    let seen2 = seen.clone();
    let mut s = stub_session("o", 2, small_config())
        .with_log(EventLog::with_sink(Box::new(sink.clone())))
        .with_observer(Box::new(move |o| {
            let mut s = seen2.lock().unwrap();
            s.push_str(o.line);
            s.push('\n');
        }));
    s.run_to_end(&mut Idle, CAP).unwrap();
    let written = String::from_utf8(sink.0.lock().unwrap().clone()).unwrap();
    assert_eq!(written, s.log().to_jsonl());
    assert_eq!(*seen.lock().unwrap(), written);
}

#[test]
fn round_cap_is_reported() {
    let mut s = stub_session("c", 1, GameConfig::default());
    let err = s.run_to_end(&mut Chaser::blue_first(), 1).unwrap_err();
    assert!(matches!(err, SessionError::RoundCap(1)));
}

#[test]
fn idle_player_dies_at_the_wall() {
    let mut s = stub_session("w", 1, GameConfig::default());
    let summary = s.run_to_end(&mut Idle, CAP).unwrap();
    assert_eq!(summary.lives, 0);
    assert_eq!(s.state().snake.heading, Direction::Right);
    let lost = kinds(&s)
        .iter()
        .filter(|k| matches!(k, EventKind::LifeLost { .. }))
        .count();
    assert_eq!(lost, 5);
}

#[test]
fn prompts_in_the_log_flow() {
    // The first request always uses the opening prompt; the ending carries the suffix.
    let story = StoryConfig::default();
    struct Recording(Arc<Mutex<Vec<String>>>, StubProvider);
    impl snake_story_core::llm::CompletionProvider for Recording {
        fn kind(&self) -> ProviderKind {
            ProviderKind::DeterministicStub
        }
        fn complete(
            &self,
            request: &snake_story_core::story::GenerationRequest,
            budget: Duration,
        ) -> Result<snake_story_core::llm::CompletionResult, snake_story_core::llm::LlmError> {
            self.0.lock().unwrap().push(request.prompt.clone());
            self.1.complete(request, budget)
        }
    }
    let prompts = Arc::new(Mutex::new(Vec::new()));
    let provider = Recording(prompts.clone(), StubProvider::new(5));
    let source = LiveTextSource::new(Box::new(provider), 5, &story);
    let setup = SessionSetup {
        config: small_config(),
        ..SessionSetup::new("p", 5)
    };
    let mut s = Session::new(setup, Box::new(SimClock::new()), Box::new(source)).unwrap();
    s.run_to_end(&mut Chaser::blue_first(), CAP).unwrap();
    let prompts = prompts.lock().unwrap();
    assert_eq!(prompts[0], OPENING_PROMPT);
    assert_eq!(prompts[1], OPENING_PROMPT);
    assert!(prompts.last().unwrap().ends_with(ENDING_SUFFIX));
}
