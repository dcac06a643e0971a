//! Exact distributional privacy of histogram-based mechanisms and voting rules.
//!
//! All probabilities are exact rationals. The central quantity is δ of a
//! deterministic mechanism that only looks at the histogram of an i.i.d.
//! database, measured between the output distributions conditioned on one
//! row taking two different values.

pub mod asymptotics;
pub mod checks;
pub mod ddp;
pub mod error;
pub mod geometric;
pub mod mechanism;
pub mod prob;
pub mod rational;
pub mod rules;
pub mod sweep;
pub mod trails;

pub use ddp::{
    delta_bruteforce_db, delta_bruteforce_db_at, delta_exact, delta_exact_pair, delta_series,
    delta_series_many, delta_via_trails, eps_delta_curve, output_distribution,
    simulator_ddp_min_delta, DeltaResult,
};
pub use error::{Error, Result};
pub use mechanism::{postprocess, Label, Mechanism};
pub use prob::{
    binomial_pmf, cond_hist_prob, enumerate_histograms, multinomial_pmf, FactorialTable, Histogram,
    VoteDistribution,
};
pub use rational::{format_rational, parse_rational, Rational};
pub use rules::{canonical_orders, rule_by_name, GsrRule, LinearOrder, Selector, TieBreak};
pub use sweep::{conditional_table, conditional_tables, ConditionalTable};
pub use trails::{partition_into_trails, trail_points, trail_theorem_sides, Direction, Trail};
