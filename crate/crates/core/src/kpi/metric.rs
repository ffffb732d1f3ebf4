use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A report cell: a finite number, not available, or +infinity. Serialised as
/// a JSON number, `"NA"` or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    NotAvailable,
    Infinite,
}

impl Metric {
    /// Non-finite input becomes `NotAvailable` (or `Infinite` for +inf).
    pub fn from_f64(v: f64) -> Self {
        if v.is_finite() {
            Metric::Value(v)
        } else if v == f64::INFINITY {
            Metric::Infinite
        } else {
            Metric::NotAvailable
        }
    }

    pub fn from_result<E>(r: Result<f64, E>) -> Self {
        r.map_or(Metric::NotAvailable, Metric::from_f64)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(*v),
            Metric::Infinite => Some(f64::INFINITY),
            Metric::NotAvailable => None,
        }
    }

    pub fn is_available(&self) -> bool {
        !matches!(self, Metric::NotAvailable)
    }

    pub fn scaled(&self, factor: f64) -> Metric {
        match self {
            Metric::Value(v) => Metric::Value(v * factor),
            other => *other,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Value(v) => write!(f, "{v}"),
            Metric::NotAvailable => f.write_str("NA"),
            Metric::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Metric::Value(v) => s.serialize_f64(*v),
            Metric::NotAvailable => s.serialize_str("NA"),
            Metric::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Metric::Value(v)),
            Raw::Text(t) if t == "NA" => Ok(Metric::NotAvailable),
            Raw::Text(t) if t == "inf" => Ok(Metric::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("unexpected metric {t:?}"))),
        }
    }
}

/// Whether the strategy beats the benchmark on one metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flag {
    #[serde(rename = "OVER")]
    Over,
    #[serde(rename = "UNDER")]
    Under,
    #[serde(rename = "NA")]
    NotAvailable,
}

impl Flag {
    /// Strictly better is `Over`; ties are `Under`.
    pub fn compare(strategy: Metric, benchmark: Metric, higher_is_better: bool) -> Flag {
        match (strategy.value(), benchmark.value()) {
            (Some(s), Some(b)) => {
                let better = if higher_is_better { s > b } else { s < b };
                if better {
                    Flag::Over
                } else {
                    Flag::Under
                }
            }
            _ => Flag::NotAvailable,
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::Over => "OVER",
            Flag::Under => "UNDER",
            Flag::NotAvailable => "NA",
        })
    }
}
