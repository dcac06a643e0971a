//! Shared fixtures for the criterion benches.

use votepriv_core::{rule_by_name, Mechanism, VoteDistribution};

/// Winner and score mechanisms of a named rule on three candidates.
pub fn three_candidate_pair(rule: &str) -> (Mechanism, Mechanism) {
    let rule = rule_by_name(rule, 3).expect("built-in rule");
    (Mechanism::winner(rule.clone()), Mechanism::score(rule))
}

/// Impartial culture over the six rankings of three candidates.
pub fn impartial_culture() -> VoteDistribution {
    VoteDistribution::uniform(6).expect("six bins")
}
