#![allow(dead_code)]

use std::path::PathBuf;

use snake_story_core::game::{CandyColor, CandyNumber, EndReason, GameConfig, Position};
use snake_story_core::llm::ProviderKind;
use snake_story_core::rng::GameRng;
use snake_story_core::session::{
    EatenSummary, EventKind, EventLog, GameEnded, GeneratedCandy, SessionStarted, LOG_VERSION,
};
use snake_story_core::story::{StoryConfig, COHERENT_TEMPERATURE, CREATIVE_TEMPERATURE};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn fixture_glob() -> String {
    format!("{}/*.jsonl", fixture_dir().display())
}

/// Rounds per session of the reference cohort: 11 sessions, 142 rounds.
pub const COHORT_ROUNDS: [usize; 11] = [13, 13, 13, 13, 13, 13, 13, 13, 13, 13, 12];
pub const COHORT_WORDS: [usize; 11] = [301, 245, 288, 260, 312, 230, 279, 266, 295, 251, 272];

use CandyColor::*;

fn repeat<T: Clone>(parts: &[(T, usize)]) -> Vec<T> {
    parts
        .iter()
        .flat_map(|(v, n)| std::iter::repeat_n(v.clone(), *n))
        .collect()
}

fn shuffled<T: Clone>(rng: &mut GameRng, items: Vec<T>) -> Vec<T> {
    rng.sample(&items, items.len())
}

struct Round {
    one: CandyColor,
    two: Option<CandyColor>,
    yellow: bool,
    eaten: CandyNumber,
}

/// Per-round candy layouts whose totals are the reference counts:
/// generated white 91, black 50, red 47, green 46, blue 47, yellow 40;
/// selected white 42, black 18, red 11, green 31, blue 30, yellow 10.
fn cohort_rounds() -> Vec<Round> {
    let mut rng = GameRng::seed_from_u64(2024);
    let eaten = shuffled(
        &mut rng,
        repeat(&[
            ((Red, CandyNumber::One), 11),
            ((Black, CandyNumber::One), 18),
            ((White, CandyNumber::One), 14),
            ((White, CandyNumber::Two), 28),
            ((Blue, CandyNumber::Two), 30),
            ((Green, CandyNumber::Two), 31),
            ((Yellow, CandyNumber::Three), 10),
        ]),
    );
    let mut spare_one = shuffled(&mut rng, repeat(&[(Red, 36), (Black, 32), (White, 31)])).into_iter();
    let mut spare_two = shuffled(
        &mut rng,
        repeat(&[(Some(Blue), 17), (Some(Green), 15), (Some(White), 18), (None, 3)]),
    )
    .into_iter();
    let mut spare_yellow = shuffled(&mut rng, repeat(&[(true, 30), (false, 132 - 30)])).into_iter();
    let rounds: Vec<Round> = eaten
        .into_iter()
        .map(|(color, number)| match number {
            CandyNumber::One => Round {
                one: color,
                two: spare_two.next().unwrap(),
                yellow: spare_yellow.next().unwrap(),
                eaten: number,
            },
            CandyNumber::Two => Round {
                one: spare_one.next().unwrap(),
                two: Some(color),
                yellow: spare_yellow.next().unwrap(),
                eaten: number,
            },
            CandyNumber::Three => Round {
                one: spare_one.next().unwrap(),
                two: spare_two.next().unwrap(),
                yellow: true,
                eaten: number,
            },
        })
        .collect();
    assert!(spare_one.next().is_none() && spare_two.next().is_none() && spare_yellow.next().is_none());
    rounds
}

fn offer(id: u32, color: CandyColor, number: CandyNumber, round: usize) -> GeneratedCandy {
    let (text, temperature) = match number {
        CandyNumber::One => (
            Some(format!("Round {round} went on calmly.")),
            Some(COHERENT_TEMPERATURE),
        ),
        CandyNumber::Two => (
            Some(format!("Round {round} turned strange.")),
            Some(CREATIVE_TEMPERATURE),
        ),
        CandyNumber::Three => (None, None),
    };
    GeneratedCandy {
        id,
        color,
        number,
        position: Position::new(id as i32 % 16, 2 + round as i32 % 12),
        provider_kind: text.as_ref().map(|_| ProviderKind::HttpCompletion),
        text,
        temperature,
        fallback: false,
        latency_ms: 2400,
    }
}

/// The reference cohort as JSONL logs, one per session. The logs pass the
/// integrity checks and carry the reference counts, but they are not replays
/// of real play: the counts cannot arise under the game rules.
pub fn build_cohort() -> Vec<(String, String)> {
    let mut rounds = cohort_rounds().into_iter();
    let mut files = Vec::new();
    for (s, (&n_rounds, &words)) in COHORT_ROUNDS.iter().zip(&COHORT_WORDS).enumerate() {
        let id = format!("cohort-{:02}", s + 1);
        let mut log = EventLog::new();
        let mut at = 0;
        let mut append = |log: &mut EventLog, dt: u64, kind: EventKind| {
            at += dt;
            log.append(at, kind).unwrap();
        };
        append(
            &mut log,
            0,
            EventKind::SessionStarted(SessionStarted {
                version: LOG_VERSION,
                session_id: id.clone(),
                seed: s as u64,
                config: GameConfig::default(),
                story: StoryConfig::default(),
            }),
        );
        let mut next_id = 0;
        let mut eaten_summary = Vec::new();
        for r in 0..n_rounds {
            let round = rounds.next().unwrap();
            let mut candies = vec![offer(next_id, round.one, CandyNumber::One, r)];
            if let Some(two) = round.two {
                candies.push(offer(next_id + 1, two, CandyNumber::Two, r));
            }
            if round.yellow {
                candies.push(offer(next_id + 2, Yellow, CandyNumber::Three, r));
            }
            next_id += 3;
            let eaten = candies.iter().find(|c| c.number == round.eaten).unwrap().clone();
            append(
                &mut log,
                2400,
                EventKind::SegmentsGenerated {
                    round: r as u32,
                    candies,
                },
            );
            append(
                &mut log,
                0,
                EventKind::ReadPauseStarted {
                    round: r as u32,
                    duration: 25,
                },
            );
            append(&mut log, 25_000, EventKind::MovingStarted { round: r as u32 });
            append(&mut log, 3_000, EventKind::CandyEaten { candy: eaten.id });
            if eaten.color == Yellow {
                append(&mut log, 0, EventKind::YellowInputStarted { duration: 45 });
                append(
                    &mut log,
                    12_000,
                    EventKind::HumanTextSubmitted {
                        text: format!("A player wrote line {r}."),
                    },
                );
            }
            eaten_summary.push(EatenSummary {
                round: r as u32,
                id: eaten.id,
                color: eaten.color,
                number: eaten.number,
            });
        }
        append(
            &mut log,
            2400,
            EventKind::GameEnded(GameEnded {
                ending_text: "And so the snake curled up and slept.".into(),
                word_count: words,
                candies_eaten: eaten_summary,
                end_reason: EndReason::LivesExhausted,
                ending_provider: Some(ProviderKind::HttpCompletion),
                ending_fallback: false,
                ending_latency_ms: 2400,
                final_state: "{}".into(),
            }),
        );
        files.push((format!("session-{id}.jsonl"), log.to_jsonl()));
    }
    files
}
