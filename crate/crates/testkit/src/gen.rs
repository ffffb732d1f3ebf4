use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treetrade::data::{Bar, BarSeries};
use treetrade::timefmt::{parse_ts, Timestamp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn minute_index(n: usize) -> Vec<Timestamp> {
    let t0 = parse_ts("2023-01-02T09:15:00+05:30").unwrap();
    (0..n).map(|i| t0 + Duration::minutes(i as i64)).collect()
}

/// Geometric random walk starting at 100 with per-bar moves up to `step`.
pub fn random_walk(rng: &mut impl Rng, n: usize, step: f64) -> Vec<f64> {
    let mut p = 100.0;
    (0..n)
        .map(|_| {
            p *= 1.0 + rng.random_range(-step..step);
            p
        })
        .collect()
}

/// Random bars with a valid low/high envelope and positive volume.
pub fn random_bars(rng: &mut impl Rng, n: usize) -> Vec<Bar> {
    let index = minute_index(n);
    let close = random_walk(rng, n, 0.004);
    let mut prev = 100.0;
    index
        .into_iter()
        .zip(close)
        .map(|(timestamp, c)| {
            let open = prev;
            prev = c;
            let top = open.max(c);
            let bottom = open.min(c);
            Bar {
                timestamp,
                open,
                high: top * (1.0 + rng.random_range(0.0..0.002)),
                low: bottom * (1.0 - rng.random_range(0.0..0.002)),
                close: c,
                volume: rng.random_range(0.0..5000.0f64).floor(),
            }
        })
        .collect()
}

pub fn random_series(rng: &mut impl Rng, symbol: &str, n: usize) -> BarSeries {
    BarSeries::new(symbol, random_bars(rng, n)).unwrap()
}

/// Small classification dataset: `n` rows, `features` columns of values drawn
/// from a coarse grid (so ties occur) and noisy labels.
pub fn small_dataset(rng: &mut impl Rng, n: usize, features: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..features)
                .map(|_| f64::from(rng.random_range(0..12u8)) * 0.5)
                .collect()
        })
        .collect();
    let labels = rows
        .iter()
        .map(|r| {
            let signal = r[0] > 2.5 || r.get(1).is_some_and(|v| *v < 1.0);
            u8::from(signal ^ rng.random_bool(0.25))
        })
        .collect();
    (rows, labels)
}
