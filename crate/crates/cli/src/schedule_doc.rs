//! Standalone attack-schedule files for `validate-schedule`: either a bare
//! JSON array of intervals or an object that also carries the budget and
//! horizon. Intervals are `[start, end]` pairs or `{"start": .., "end": ..}`
//! objects.

use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDoc {
    #[serde(default)]
    pub nu_d_seconds: Option<f64>,
    #[serde(default)]
    pub p_d_ratio: Option<f64>,
    #[serde(default)]
    pub horizon_seconds: Option<f64>,
    pub intervals: Vec<IntervalDoc>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum IntervalDoc {
    Pair([f64; 2]),
    Named { start: f64, end: f64 },
}

impl IntervalDoc {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            IntervalDoc::Pair([start, end]) => (start, end),
            IntervalDoc::Named { start, end } => (start, end),
        }
    }
}

pub fn parse(text: &str) -> Result<ScheduleDoc, String> {
    if let Ok(intervals) = serde_json::from_str::<Vec<IntervalDoc>>(text) {
        return Ok(ScheduleDoc {
            nu_d_seconds: None,
            p_d_ratio: None,
            horizon_seconds: None,
            intervals,
        });
    }
    serde_json::from_str(text).map_err(|e| format!("schedule file: {e}"))
}
