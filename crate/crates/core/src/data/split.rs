use serde::{Deserialize, Serialize};

use super::align::AlignedPanel;
use crate::error::{Error, Result};
use crate::timefmt::{format_ts, Timestamp};

/// Half-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeRange {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self> {
        if start >= end {
            return Err(Error::Split(format!(
                "range start {} is not before end {}",
                format_ts(&start),
                format_ts(&end)
            )));
        }
        Ok(TimeRange { start, end })
    }

    pub fn contains(&self, ts: &Timestamp) -> bool {
        *ts >= self.start && *ts < self.end
    }

    /// Index rows falling inside the range, given a sorted index.
    pub fn rows(&self, index: &[Timestamp]) -> std::ops::Range<usize> {
        let lo = index.partition_point(|t| *t < self.start);
        let hi = index.partition_point(|t| *t < self.end);
        lo..hi
    }
}

/// Train and test intervals with `train.end <= test.start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRanges {
    train: TimeRange,
    test: TimeRange,
}

impl SplitRanges {
    pub fn new(train: TimeRange, test: TimeRange) -> Result<Self> {
        TimeRange::new(train.start, train.end)?;
        TimeRange::new(test.start, test.end)?;
        if train.end > test.start {
            return Err(Error::Split(format!(
                "train range ends at {} after test range starts at {}",
                format_ts(&train.end),
                format_ts(&test.start)
            )));
        }
        Ok(SplitRanges { train, test })
    }

    pub fn train(&self) -> TimeRange {
        self.train
    }

    pub fn test(&self) -> TimeRange {
        self.test
    }
}

/// Restricts the panel to the train and test intervals.
pub fn split_panel(panel: &AlignedPanel, ranges: &SplitRanges) -> Result<(AlignedPanel, AlignedPanel)> {
    let ranges = SplitRanges::new(ranges.train, ranges.test)?;
    let train_rows = ranges.train.rows(panel.index());
    let test_rows = ranges.test.rows(panel.index());
    if train_rows.is_empty() {
        return Err(Error::Split("train slice is empty".into()));
    }
    if test_rows.is_empty() {
        return Err(Error::Split("test slice is empty".into()));
    }
    Ok((panel.slice_rows(train_rows), panel.slice_rows(test_rows)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{union_align, Bar, BarSeries};
    use crate::timefmt::parse_ts;

    fn t(s: &str) -> Timestamp {
        parse_ts(s).unwrap()
    }

    fn daily_panel() -> AlignedPanel {
        // One bar on the first of every month, 2022-01 through 2023-12.
        let bars = (0..24)
            .map(|m| Bar {
                timestamp: t(&format!("{}-{:02}-01T09:15:00+05:30", 2022 + m / 12, m % 12 + 1)),
                open: 1.0,
                high: 1.0,
                low: 1.0,
                close: 1.0,
                volume: 1.0,
            })
            .collect();
        union_align(&[BarSeries::new("A", bars).unwrap()]).unwrap()
    }

    fn ranges(a: &str, b: &str, c: &str, d: &str) -> Result<SplitRanges> {
        SplitRanges::new(TimeRange::new(t(a), t(b))?, TimeRange::new(t(c), t(d))?)
    }

    #[test]
    fn yearly_split_is_disjoint_and_covering() {
        let panel = daily_panel();
        let r = ranges(
            "2022-01-01T00:00:00+05:30",
            "2023-01-01T00:00:00+05:30",
            "2023-01-01T00:00:00+05:30",
            "2024-01-01T00:00:00+05:30",
        )
        .unwrap();
        let (train, test) = split_panel(&panel, &r).unwrap();
        assert_eq!(train.len(), 12);
        assert_eq!(test.len(), 12);
        assert!(train.index().last().unwrap() < test.index().first().unwrap());
    }

    #[test]
    fn overlapping_ranges_rejected() {
        let r = ranges(
            "2022-01-01T00:00:00+05:30",
            "2023-02-01T00:00:00+05:30",
            "2023-01-01T00:00:00+05:30",
            "2024-01-01T00:00:00+05:30",
        );
        assert!(matches!(r, Err(Error::Split(_))));
    }

    #[test]
    fn empty_slice_rejected() {
        let panel = daily_panel();
        let r = ranges(
            "2020-01-01T00:00:00+05:30",
            "2021-01-01T00:00:00+05:30",
            "2023-01-01T00:00:00+05:30",
            "2024-01-01T00:00:00+05:30",
        )
        .unwrap();
        assert!(split_panel(&panel, &r).is_err());
    }

    #[test]
    fn partition_counts() {
        let panel = daily_panel();
        let r = ranges(
            "2022-03-15T00:00:00+05:30",
            "2022-09-01T00:00:00+05:30",
            "2023-02-01T00:00:00+05:30",
            "2023-05-01T00:00:00+05:30",
        )
        .unwrap();
        let (train, test) = split_panel(&panel, &r).unwrap();
        let inside = panel
            .index()
            .iter()
            .filter(|ts| r.train().contains(ts) || r.test().contains(ts))
            .count();
        assert_eq!(train.len() + test.len(), inside);
        assert_eq!((train.len(), test.len()), (5, 3));
    }
}
