//! Lexical grammar for positional temporal references.
//!
//! Accepted forms:
//! * timecodes `M:SS`, `MM:SS`, `H:MM:SS` (minutes may exceed 59 in the
//!   two-field form),
//! * ranges `A-B`, `A to B`, `A until B`, `A till B`, optionally preceded by
//!   `from`,
//! * lists of the above separated by commas or `and`, each item its own match,
//! * abstract designations of the start or end of the video ("intro",
//!   "ending", ...).

use std::sync::OnceLock;

use regex::Regex;

/// How far into the video an abstract designation reaches.
pub const ABSTRACT_WINDOW_S: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PositionKind {
    Timecode(f64),
    Range(f64, f64),
    Start,
    End,
}

/// A positional reference found in text; `start..end` are byte offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionMatch {
    pub start: usize,
    pub end: usize,
    pub kind: PositionKind,
}

const TC: &str = r"\d{1,3}:\d{2}(?::\d{2})?";

fn range_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"(?i)(?:\bfrom\s+)?\b({TC})\s*(?:-|–|—|\bto\b|\buntil\b|\btill\b)\s*({TC})\b"
        ))
        .unwrap()
    })
}

fn timecode_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(&format!(r"\b({TC})\b")).unwrap())
}

fn abstract_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)\b(?:(intro|introduction|opening|beginning(?: part)?(?: of the video)?|start of the video)|(outro|ending|conclusion|end of the video|last part of the video))\b",
        )
        .unwrap()
    })
}

/// Seconds for a timecode string, or `None` if a field is out of range.
pub fn parse_timecode(tc: &str) -> Option<f64> {
    let parts: Vec<u32> = tc
        .split(':')
        .map(|p| p.parse().ok())
        .collect::<Option<_>>()?;
    match parts.as_slice() {
        [m, s] if *s < 60 => Some((m * 60 + s) as f64),
        [h, m, s] if *m < 60 && *s < 60 => Some((h * 3600 + m * 60 + s) as f64),
        _ => None,
    }
}

/// All positional references in `text`, ordered by position. Ranges take
/// precedence over the timecodes they contain.
pub fn scan_positions(text: &str) -> Vec<PositionMatch> {
    let mut out: Vec<PositionMatch> = Vec::new();
    for caps in range_re().captures_iter(text) {
        let whole = caps.get(0).unwrap();
        if let (Some(a), Some(b)) = (parse_timecode(&caps[1]), parse_timecode(&caps[2])) {
            out.push(PositionMatch {
                start: whole.start(),
                end: whole.end(),
                kind: PositionKind::Range(a, b),
            });
        }
    }
    for m in timecode_re().find_iter(text) {
        if out.iter().any(|r| m.start() < r.end && r.start < m.end()) {
            continue;
        }
        if let Some(t) = parse_timecode(m.as_str()) {
            out.push(PositionMatch {
                start: m.start(),
                end: m.end(),
                kind: PositionKind::Timecode(t),
            });
        }
    }
    for caps in abstract_re().captures_iter(text) {
        let whole = caps.get(0).unwrap();
        let kind = if caps.get(1).is_some() {
            PositionKind::Start
        } else {
            PositionKind::End
        };
        out.push(PositionMatch {
            start: whole.start(),
            end: whole.end(),
            kind,
        });
    }
    out.sort_by_key(|m| m.start);
    out
}

/// Formats seconds as `M:SS` or `H:MM:SS`.
pub fn format_timecode(seconds: u32) -> String {
    let (h, m, s) = (seconds / 3600, (seconds / 60) % 60, seconds % 60);
    if h > 0 {
        format!("{h}:{m:02}:{s:02}")
    } else {
        format!("{m}:{s:02}")
    }
}
