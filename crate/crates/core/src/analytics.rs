//! Cohort statistics over session logs: per-color generated and selected
//! counts with selection rates, and per-session round, provenance and word
//! summaries.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{CandyColor, CandyId};
use crate::session::{EventKind, SessionLog};
use crate::story::{word_count, COHERENT_TEMPERATURE, CREATIVE_TEMPERATURE};

/// Printed in place of a rate or deviation that is undefined.
pub const UNDEFINED: &str = "n/a";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("no sessions")]
    NoSessions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorStats {
    pub color: CandyColor,
    pub generated: u64,
    pub selected: u64,
    /// Percentage rounded half-up to two decimals; `None` when nothing was generated.
    pub rate: Option<f64>,
}

impl ColorStats {
    pub fn new(color: CandyColor, generated: u64, selected: u64) -> Self {
        let rate = rate_hundredths(selected, generated).map(|h| h as f64 / 100.0);
        Self {
            color,
            generated,
            selected,
            rate,
        }
    }

    pub fn rate_text(&self) -> String {
        match rate_hundredths(self.selected, self.generated) {
            Some(h) => format!("{}.{:02}", h / 100, h % 100),
            None => UNDEFINED.to_string(),
        }
    }
}

/// `100 * selected / generated` in hundredths of a percent, rounded half-up,
/// in exact integer arithmetic.
pub fn rate_hundredths(selected: u64, generated: u64) -> Option<u64> {
    (generated > 0).then(|| (20_000 * selected + generated) / (2 * generated))
}

/// Per-color counts in table order: red, black, white, blue, green, yellow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SelectionStats {
    pub colors: Vec<ColorStats>,
}

impl SelectionStats {
    pub fn get(&self, color: CandyColor) -> &ColorStats {
        self.colors
            .iter()
            .find(|c| c.color == color)
            .expect("every color present")
    }
}

/// Total, mean and sample standard deviation of one per-session quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub total: u64,
    pub mean: f64,
    /// Sample SD (n − 1 denominator); `None` for a single session.
    pub sd: Option<f64>,
}

impl Measure {
    pub fn of(values: &[u64]) -> Self {
        let n = values.len() as f64;
        let total: u64 = values.iter().sum();
        let mean = total as f64 / n;
        let sd = (values.len() > 1).then(|| {
            let ss: f64 = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        });
        Self { total, mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub sessions: u64,
    pub rounds: Measure,
    pub low_temp_selected: Measure,
    pub high_temp_selected: Measure,
    pub human_written: Measure,
    pub words: Measure,
}

/// Per-session figures the summary is built from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SessionFigures {
    pub rounds: u64,
    pub low_temp_selected: u64,
    pub high_temp_selected: u64,
    pub human_written: u64,
    pub words: u64,
}

impl SessionFigures {
    /// A round ends when a candy is eaten, so rounds equal `CandyEaten`
    /// events. Words come from `GameEnded` when the session finished, or are
    /// recomputed from the selected texts otherwise.
    pub fn of(log: &SessionLog) -> Self {
        let mut temperatures: HashMap<CandyId, Option<f64>> = HashMap::new();
        let mut f = SessionFigures::default();
        for kind in log.kinds() {
            match kind {
                EventKind::SegmentsGenerated { candies, .. } => {
                    temperatures.extend(candies.iter().map(|c| (c.id, c.temperature)));
                }
                EventKind::CandyEaten { candy } => {
                    f.rounds += 1;
                    match temperatures.get(candy).copied().flatten() {
                        Some(t) if t == COHERENT_TEMPERATURE => f.low_temp_selected += 1,
                        Some(t) if t == CREATIVE_TEMPERATURE => f.high_temp_selected += 1,
                        _ => {}
                    }
                }
                EventKind::HumanTextSubmitted { text } if !text.is_empty() => f.human_written += 1,
                _ => {}
            }
        }
        f.words = match log.ended() {
            Some(end) => end.word_count as u64,
            None => word_count(&log.story_text()) as u64,
        };
        f
    }
}

pub fn selection_rates(logs: &[SessionLog]) -> SelectionStats {
    let mut generated: HashMap<CandyColor, u64> = HashMap::new();
    let mut selected: HashMap<CandyColor, u64> = HashMap::new();
    for log in logs {
        let mut colors: HashMap<CandyId, CandyColor> = HashMap::new();
        for kind in log.kinds() {
            match kind {
                EventKind::SegmentsGenerated { candies, .. } => {
                    for c in candies {
                        colors.insert(c.id, c.color);
                        *generated.entry(c.color).or_default() += 1;
                    }
                }
                EventKind::CandyEaten { candy } => {
                    if let Some(color) = colors.get(candy) {
                        *selected.entry(*color).or_default() += 1;
                    }
                }
                _ => {}
            }
        }
    }
    SelectionStats {
        colors: CandyColor::TABLE_ORDER
            .iter()
            .map(|&c| {
                ColorStats::new(
                    c,
                    generated.get(&c).copied().unwrap_or(0),
                    selected.get(&c).copied().unwrap_or(0),
                )
            })
            .collect(),
    }
}

pub fn summarize(figures: &[SessionFigures]) -> Result<CohortSummary, AnalyticsError> {
    if figures.is_empty() {
        return Err(AnalyticsError::NoSessions);
    }
    let measure = |get: fn(&SessionFigures) -> u64| Measure::of(&figures.iter().map(get).collect::<Vec<_>>());
    Ok(CohortSummary {
        sessions: figures.len() as u64,
        rounds: measure(|f| f.rounds),
        low_temp_selected: measure(|f| f.low_temp_selected),
        high_temp_selected: measure(|f| f.high_temp_selected),
        human_written: measure(|f| f.human_written),
        words: measure(|f| f.words),
    })
}

pub fn cohort_summary(logs: &[SessionLog]) -> Result<CohortSummary, AnalyticsError> {
    summarize(&logs.iter().map(SessionFigures::of).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub selection_stats: SelectionStats,
    pub cohort_summary: CohortSummary,
}

impl Report {
    pub fn from_logs(logs: &[SessionLog]) -> Result<Self, AnalyticsError> {
        Ok(Self {
            cohort_summary: cohort_summary(logs)?,
            selection_stats: selection_rates(logs),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

fn fixed2(v: f64) -> String {
    format!("{v:.2}")
}

fn sd_text(sd: Option<f64>) -> String {
    sd.map_or_else(|| UNDEFINED.to_string(), fixed2)
}

pub fn render_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Text => {
            let mut out = String::new();
            out.push_str("color generated selected rate\n");
            for c in &report.selection_stats.colors {
                let _ = writeln!(
                    out,
                    "{} {} {} {}",
                    c.color.name(),
                    c.generated,
                    c.selected,
                    c.rate_text()
                );
            }
            let s = &report.cohort_summary;
            out.push('\n');
            let _ = writeln!(out, "sessions {}", s.sessions);
            for (name, m) in [
                ("rounds", &s.rounds),
                ("low_temp_selected", &s.low_temp_selected),
                ("high_temp_selected", &s.high_temp_selected),
                ("human_written", &s.human_written),
                ("words", &s.words),
            ] {
                let _ = writeln!(
                    out,
                    "{name} total {} mean {} sd {}",
                    m.total,
                    fixed2(m.mean),
                    sd_text(m.sd)
                );
            }
            out
        }
    }
}
