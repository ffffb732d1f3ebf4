//! Reference implementations written straight from the formulas, plus
//! seeded generators. Nothing here shares code paths with the engine beyond
//! its public data types.

pub mod gen;
pub mod indicators;
pub mod kpi;
pub mod rules;
pub mod tree;
