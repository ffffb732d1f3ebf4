//! Timestamp text encoding shared by every CSV and JSON artifact.

use chrono::{DateTime, FixedOffset, SecondsFormat};

pub type Timestamp = DateTime<FixedOffset>;

/// RFC 3339 with the original offset kept (never `Z`), sub-second digits only
/// when present.
pub fn format_ts(ts: &Timestamp) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, false)
}

pub fn parse_ts(text: &str) -> Result<Timestamp, chrono::ParseError> {
    DateTime::parse_from_rfc3339(text.trim())
}

/// Shortest decimal text that parses back to the identical `f64`.
pub fn format_f64(value: f64) -> String {
    format!("{value}")
}
