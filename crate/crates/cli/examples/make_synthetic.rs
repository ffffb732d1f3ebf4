//! Regenerates the bundled two-symbol dataset in `data/synthetic/`.
//!
//! ALPHA is mean-reverting and goes through a 2:1 split (with a daily
//! adjustment file); BETA trends mildly and is missing some bars.
//!
//! ```text
//! cargo run -p treetrade-cli --example make_synthetic -- data/synthetic
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use chrono::{Datelike, Duration, NaiveDate, TimeZone, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DAYS_PER_YEAR: usize = 8;
const BARS_PER_DAY: i64 = 375;

fn trading_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    start
        .iter_days()
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .take(n)
        .collect()
}

struct Spec {
    symbol: &'static str,
    start_price: f64,
    autocorr: f64,
    noise: f64,
    drift: f64,
    missing: f64,
    split_on: Option<NaiveDate>,
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn generate(spec: &Spec, days: &[NaiveDate], rng: &mut ChaCha8Rng) -> (String, Option<String>) {
    let tz = chrono::FixedOffset::east_opt(5 * 3600 + 1800).unwrap();
    let mut bars = String::from("timestamp,open,high,low,close,volume\n");
    let mut daily = String::from("date,close,adjusted_close\n");
    let mut price = spec.start_price;
    let mut prev_r = 0.0;
    for day in days {
        let split_factor = match spec.split_on {
            Some(d) if *day < d => 1.0,
            Some(_) => 0.5,
            None => 1.0,
        };
        price *= 1.0 + rng.random_range(-0.006..0.006);
        let open_time = tz.from_local_datetime(&day.and_hms_opt(9, 15, 0).unwrap()).unwrap();
        let mut last_close = 0.0;
        for m in 0..BARS_PER_DAY {
            let r = spec.autocorr * prev_r + spec.drift + spec.noise * rng.random_range(-1.0..1.0);
            prev_r = r;
            let open = price;
            price *= 1.0 + r;
            let wiggle = spec.noise * 0.5;
            let top = open.max(price) * (1.0 + wiggle * rng.random_range(0.0..1.0));
            let bottom = open.min(price) * (1.0 - wiggle * rng.random_range(0.0..1.0));
            let raw = |v: f64| round2(v * split_factor);
            let (o, c) = (raw(open), raw(price));
            let (h, l) = (raw(top).max(o).max(c), raw(bottom).min(o).min(c));
            let volume = (rng.random_range(200.0..6000.0f64) / split_factor).round();
            last_close = c;
            let skip = m > 0 && m < BARS_PER_DAY - 1 && rng.random_bool(spec.missing);
            if skip {
                continue;
            }
            let ts = open_time + Duration::minutes(m);
            let _ = writeln!(bars, "{},{o},{h},{l},{c},{volume}", ts.format("%Y-%m-%dT%H:%M:%S%:z"));
        }
        let adjusted = match spec.split_on {
            Some(d) if *day < d => last_close * 0.5,
            _ => last_close,
        };
        let _ = writeln!(daily, "{day},{last_close},{adjusted}");
    }
    (bars, spec.split_on.map(|_| daily))
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/synthetic".into()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut days = trading_days(NaiveDate::from_ymd_opt(2022, 3, 1).unwrap(), DAYS_PER_YEAR);
    days.extend(trading_days(
        NaiveDate::from_ymd_opt(2023, 3, 1).unwrap(),
        DAYS_PER_YEAR,
    ));
    let specs = [
        Spec {
            symbol: "ALPHA",
            start_price: 1200.0,
            autocorr: -0.18,
            noise: 0.0009,
            drift: 0.0,
            missing: 0.0,
            split_on: NaiveDate::from_ymd_opt(2023, 3, 6),
        },
        Spec {
            symbol: "BETA",
            start_price: 450.0,
            autocorr: 0.1,
            noise: 0.0011,
            drift: 0.00001,
            missing: 0.03,
            split_on: None,
        },
    ];
    for (seed, spec) in specs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(20240513 + seed as u64);
        let (bars, daily) = generate(spec, &days, &mut rng);
        std::fs::write(dir.join(format!("{}.csv", spec.symbol)), bars).unwrap();
        if let Some(daily) = daily {
            std::fs::write(dir.join(format!("{}.daily.csv", spec.symbol)), daily).unwrap();
        }
    }
}
