use std::fmt::Write as _;

use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceLine {
    pub at: SimTime,
    pub device: String,
    pub kind: String,
    pub detail: String,
}

/// Event log of one run, one tab-separated line per event:
/// `timestamp_us device event_kind detail`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceLog {
    enabled: bool,
    lines: Vec<TraceLine>,
}

impl TraceLog {
    pub fn enabled() -> Self {
        TraceLog {
            enabled: true,
            lines: Vec::new(),
        }
    }

    pub fn disabled() -> Self {
        TraceLog::default()
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn push(&mut self, at: SimTime, device: &str, kind: &str, detail: &str) {
        log::trace!("{}\t{}\t{}\t{}", at.as_micros(), device, kind, detail);
        if self.enabled {
            self.lines.push(TraceLine {
                at,
                device: device.to_string(),
                kind: kind.to_string(),
                detail: detail.to_string(),
            });
        }
    }

    pub fn lines(&self) -> &[TraceLine] {
        &self.lines
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", l.at.as_micros(), l.device, l.kind, l.detail);
        }
        out
    }
}
