//! Bar ingestion, adjustment, union alignment and train/test splitting.

mod adjust;
mod align;
mod bars;
mod split;

pub use adjust::{apply_adjustment, compute_adjustment_factors, ingest_daily, AdjustmentFactorSeries, DailyCloses};
pub use align::{read_panel, union_align, write_panel, AlignedPanel, SymbolColumns};
pub use bars::{ingest_bars, write_bars, Bar, BarSeries};
pub use split::{split_panel, SplitRanges, TimeRange};
