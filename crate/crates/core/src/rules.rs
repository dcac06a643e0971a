//! Voting rules as generalized scoring rules.
//!
//! A rule is a per-vote score table `f` (one row of `K` entries per linear
//! order) plus a selector `g` that reads only the weak order of the summed
//! score vector. Every selector here uses comparisons between score entries
//! and nothing else, so it can be fed either the raw scores or their weak
//! order and pick the same winner.
//!
//! Independent "direct" evaluators (positional tallies, pairwise matrices,
//! round-by-round STV) are provided alongside for cross-checking.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub const MAX_CANDIDATES: usize = 5;

/// A ranking of candidates `0..m`, position 0 being the top.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearOrder {
    ranking: Vec<usize>,
}

impl LinearOrder {
    pub fn new(ranking: Vec<usize>) -> Result<Self> {
        let m = ranking.len();
        let mut seen = vec![false; m];
        for &c in &ranking {
            if c >= m || seen[c] {
                return Err(Error::InvalidRule(format!(
                    "{ranking:?} is not a permutation"
                )));
            }
            seen[c] = true;
        }
        Ok(LinearOrder { ranking })
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    pub fn candidates(&self) -> usize {
        self.ranking.len()
    }

    /// Position of `candidate` (0 = top).
    pub fn position(&self, candidate: usize) -> usize {
        self.ranking.iter().position(|&c| c == candidate).unwrap()
    }

    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.position(a) < self.position(b)
    }

    /// Top-ranked candidate once `eliminated` (bit mask) are struck out.
    pub fn top_among(&self, eliminated: u32) -> Option<usize> {
        self.ranking
            .iter()
            .copied()
            .find(|&c| eliminated & (1 << c) == 0)
    }
}

impl fmt::Display for LinearOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ranking.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(">"))
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidRule("need at least one candidate".into()));
    }
    if m > MAX_CANDIDATES {
        return Err(Error::TooManyCandidates(m));
    }
    Ok(())
}

/// All `m!` linear orders, lexicographic in their ranking vectors.
pub fn canonical_orders(m: usize) -> Result<Vec<LinearOrder>> {
    check_m(m)?;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(m);
    let mut used = vec![false; m];
    fn rec(m: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<LinearOrder>) {
        if current.len() == m {
            out.push(LinearOrder {
                ranking: current.clone(),
            });
            return;
        }
        for c in 0..m {
            if !used[c] {
                used[c] = true;
                current.push(c);
                rec(m, current, used, out);
                current.pop();
                used[c] = false;
            }
        }
    }
    rec(m, &mut current, &mut used, &mut out);
    Ok(out)
}

/// Index of `ranking` within [`canonical_orders`].
pub fn order_index(ranking: &[usize]) -> usize {
    // Lehmer code in the factorial number system.
    let m = ranking.len();
    let mut index = 0;
    for i in 0..m {
        let smaller_later = ranking[i + 1..].iter().filter(|&&c| c < ranking[i]).count();
        index = index * (m - i) + smaller_later;
    }
    index
}

pub fn factorial(m: usize) -> usize {
    (1..=m).product()
}

/// Fixed candidate ordering used to resolve every tie: among tied
/// candidates the one listed first wins, and STV eliminates the one listed
/// last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieBreak {
    priority: Vec<usize>,
}

impl TieBreak {
    /// Lowest candidate index first.
    pub fn lexicographic(m: usize) -> Self {
        TieBreak {
            priority: (0..m).collect(),
        }
    }

    pub fn new(priority: Vec<usize>) -> Result<Self> {
        LinearOrder::new(priority.clone())?;
        Ok(TieBreak { priority })
    }

    pub fn priority(&self) -> &[usize] {
        &self.priority
    }

    /// The first candidate in priority order accepted by `tied`.
    pub fn choose(&self, tied: impl Fn(usize) -> bool) -> usize {
        *self
            .priority
            .iter()
            .find(|&&c| tied(c))
            .expect("at least one tied candidate")
    }

    /// The last candidate in priority order accepted by `tied`.
    pub fn choose_last(&self, tied: impl Fn(usize) -> bool) -> usize {
        *self
            .priority
            .iter()
            .rev()
            .find(|&&c| tied(c))
            .expect("at least one tied candidate")
    }
}

/// The `g` half of a generalized scoring rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selector {
    /// Component `i` is candidate `i`'s score; the largest wins.
    Argmax,
    /// Components are pairwise counts `N(a, b)`; see [`pair_slot`].
    Maximin,
    Copeland,
    /// Components are top counts after removing a set of candidates; see [`stv_slot`].
    Stv,
}

/// Slot of the ordered pair `(a, b)` in a pairwise score vector of length `m(m-1)`.
pub fn pair_slot(m: usize, a: usize, b: usize) -> usize {
    debug_assert!(a != b);
    a * (m - 1) + if b < a { b } else { b - 1 }
}

/// Dimension of the STV score vector: `sum_{i<m} C(m, i) (m - i)`.
pub fn stv_dimension(m: usize) -> usize {
    (0..(1u32 << m))
        .filter(|&mask| (mask.count_ones() as usize) < m)
        .map(|mask| m - mask.count_ones() as usize)
        .sum()
}

/// Slot of `(removed set, candidate)` in the STV score vector.
///
/// Removed sets are visited by increasing bit mask, candidates by index.
pub fn stv_slot(m: usize, removed: u32, candidate: usize) -> usize {
    debug_assert!(removed & (1 << candidate) == 0);
    let before: usize = (0..removed)
        .filter(|&mask| (mask.count_ones() as usize) < m)
        .map(|mask| m - mask.count_ones() as usize)
        .sum();
    before + (0..candidate).filter(|&c| removed & (1 << c) == 0).count()
}

impl Selector {
    /// Winner from a score vector, using only comparisons between entries.
    pub fn select(&self, m: usize, score: &[i64], tie: &TieBreak) -> usize {
        match self {
            Selector::Argmax => {
                let best = score[..m].iter().max().unwrap();
                tie.choose(|c| &score[c] == best)
            }
            Selector::Maximin => {
                let mins = maximin_values(m, |a, b| score[pair_slot(m, a, b)]);
                let best = mins.iter().max().unwrap();
                tie.choose(|c| &mins[c] == best)
            }
            Selector::Copeland => {
                let points = copeland_points(m, |a, b| score[pair_slot(m, a, b)]);
                let best = points.iter().max().unwrap();
                tie.choose(|c| &points[c] == best)
            }
            Selector::Stv => {
                let mut removed = 0u32;
                for _ in 1..m {
                    let count = |c: usize| score[stv_slot(m, removed, c)];
                    let alive = |c: usize| removed & (1 << c) == 0;
                    let low = (0..m).filter(|&c| alive(c)).map(count).min().unwrap();
                    let out = tie.choose_last(|c| alive(c) && count(c) == low);
                    removed |= 1 << out;
                }
                (0..m).find(|&c| removed & (1 << c) == 0).unwrap()
            }
        }
    }

    /// Every candidate that wins under some resolution of ties.
    pub fn co_winners(&self, m: usize, score: &[i64]) -> Vec<usize> {
        match self {
            Selector::Argmax => {
                let best = score[..m].iter().max().unwrap();
                (0..m).filter(|&c| &score[c] == best).collect()
            }
            Selector::Maximin => {
                let mins = maximin_values(m, |a, b| score[pair_slot(m, a, b)]);
                let best = mins.iter().max().unwrap();
                (0..m).filter(|&c| &mins[c] == best).collect()
            }
            Selector::Copeland => {
                let points = copeland_points(m, |a, b| score[pair_slot(m, a, b)]);
                let best = points.iter().max().unwrap();
                (0..m).filter(|&c| &points[c] == best).collect()
            }
            Selector::Stv => {
                let mut winners = 0u32;
                stv_universes(
                    m,
                    0,
                    &|removed, c| score[stv_slot(m, removed, c)],
                    &mut winners,
                );
                (0..m).filter(|&c| winners & (1 << c) != 0).collect()
            }
        }
    }
}

fn maximin_values(m: usize, n: impl Fn(usize, usize) -> i64) -> Vec<i64> {
    (0..m)
        .map(|c| {
            (0..m)
                .filter(|&d| d != c)
                .map(|d| n(c, d))
                .min()
                .unwrap_or(0)
        })
        .collect()
}

/// Copeland points doubled: 2 per pairwise win, 1 per pairwise tie.
fn copeland_points(m: usize, n: impl Fn(usize, usize) -> i64) -> Vec<i64> {
    (0..m)
        .map(|c| {
            (0..m)
                .filter(|&d| d != c)
                .map(|d| match n(c, d).cmp(&n(d, c)) {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                })
                .sum()
        })
        .collect()
}

fn stv_universes(m: usize, removed: u32, count: &dyn Fn(u32, usize) -> i64, winners: &mut u32) {
    let alive: Vec<usize> = (0..m).filter(|&c| removed & (1 << c) == 0).collect();
    if alive.len() == 1 {
        *winners |= 1 << alive[0];
        return;
    }
    let low = alive.iter().map(|&c| count(removed, c)).min().unwrap();
    for &c in &alive {
        if count(removed, c) == low {
            stv_universes(m, removed | (1 << c), count, winners);
        }
    }
}

/// Dense weak order of a score vector: equal entries share a rank, larger
/// entries get larger ranks, ranks start at 0.
pub fn weak_order(score: &[i64]) -> Vec<i64> {
    let mut sorted: Vec<i64> = score.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    score
        .iter()
        .map(|v| sorted.binary_search(v).unwrap() as i64)
        .collect()
}

/// A generalized scoring rule over `m` candidates and the `m!` orders of
/// [`canonical_orders`].
#[derive(Clone, Debug)]
pub struct GsrRule {
    name: String,
    m: usize,
    orders: Vec<LinearOrder>,
    f: Vec<Vec<Rational>>,
    // f scaled by `scale` into integers, flattened row-major (m! x K).
    f_int: Vec<i64>,
    scale: BigInt,
    k: usize,
    selector: Selector,
    tie: TieBreak,
}

impl GsrRule {
    pub fn new(name: &str, m: usize, f: Vec<Vec<Rational>>, selector: Selector) -> Result<Self> {
        check_m(m)?;
        let orders = canonical_orders(m)?;
        if f.len() != orders.len() {
            return Err(Error::InvalidRule(format!(
                "score table has {} rows, expected {}",
                f.len(),
                orders.len()
            )));
        }
        let k = f.first().map_or(0, |r| r.len());
        if k == 0 || f.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidRule(
                "score rows must share a positive length".into(),
            ));
        }
        let expected_k = match selector {
            Selector::Argmax => m,
            Selector::Maximin | Selector::Copeland => m * (m - 1),
            Selector::Stv => stv_dimension(m),
        };
        if k != expected_k {
            return Err(Error::InvalidRule(format!(
                "selector needs K = {expected_k}, table has K = {k}"
            )));
        }
        let scale = f
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let mut f_int = Vec::with_capacity(orders.len() * k);
        for v in f.iter().flatten() {
            let scaled = (v * Rational::from_integer(scale.clone())).to_integer();
            f_int.push(scaled.to_i64().ok_or_else(|| {
                Error::InvalidRule("score entries too large after scaling".into())
            })?);
        }
        Ok(GsrRule {
            name: name.to_string(),
            m,
            orders,
            f,
            f_int,
            scale,
            k,
            selector,
            tie: TieBreak::lexicographic(m),
        })
    }

    pub fn with_tie_break(mut self, tie: TieBreak) -> Result<Self> {
        if tie.priority.len() != self.m {
            return Err(Error::InvalidRule(
                "tie-break must rank every candidate".into(),
            ));
        }
        self.tie = tie;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn candidates(&self) -> usize {
        self.m
    }

    /// Number of vote types, `m!`.
    pub fn bins(&self) -> usize {
        self.orders.len()
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn orders(&self) -> &[LinearOrder] {
        &self.orders
    }

    pub fn vote_scores(&self, order: usize) -> &[Rational] {
        &self.f[order]
    }

    pub fn selector(&self) -> &Selector {
        &self.selector
    }

    pub fn tie_break(&self) -> &TieBreak {
        &self.tie
    }

    /// Common denominator by which integer score labels are scaled.
    pub fn scale(&self) -> &BigInt {
        &self.scale
    }

    fn check_profile(&self, profile: &[u32]) -> Result<()> {
        if profile.len() != self.bins() {
            return Err(Error::DimensionMismatch {
                expected: self.bins(),
                actual: profile.len(),
            });
        }
        Ok(())
    }

    /// `f(P) = sum_V P[V] f(V)`.
    pub fn score(&self, profile: &[u32]) -> Result<Vec<Rational>> {
        self.check_profile(profile)?;
        let mut total = vec![Rational::zero(); self.k];
        for (row, &count) in self.f.iter().zip(profile) {
            if count == 0 {
                continue;
            }
            let count = Rational::from_integer(BigInt::from(count));
            for (acc, v) in total.iter_mut().zip(row) {
                *acc += v * &count;
            }
        }
        Ok(total)
    }

    /// `scale · f(P)` as integers; same weak order as [`GsrRule::score`].
    pub fn score_scaled(&self, profile: &[u32], out: &mut Vec<i64>) {
        debug_assert_eq!(profile.len(), self.bins());
        out.clear();
        out.resize(self.k, 0);
        for (row, &count) in self.f_int.chunks_exact(self.k).zip(profile) {
            if count == 0 {
                continue;
            }
            let count = count as i64;
            for (acc, v) in out.iter_mut().zip(row) {
                *acc += v * count;
            }
        }
    }

    /// `g(Ord(f(P)))`.
    pub fn winner(&self, profile: &[u32]) -> Result<usize> {
        self.check_profile(profile)?;
        let mut score = Vec::new();
        self.score_scaled(profile, &mut score);
        let ord = weak_order(&score);
        Ok(self.selector.select(self.m, &ord, &self.tie))
    }

    /// Winner computed straight from an integer score vector.
    pub fn winner_from_scaled(&self, score: &[i64]) -> usize {
        self.selector.select(self.m, score, &self.tie)
    }

    /// Candidates that win under some tie resolution.
    pub fn co_winners(&self, profile: &[u32]) -> Result<Vec<usize>> {
        self.check_profile(profile)?;
        let mut score = Vec::new();
        self.score_scaled(profile, &mut score);
        Ok(self.selector.co_winners(self.m, &score))
    }

    /// Renders an integer-scaled score label back to exact rationals.
    pub fn unscale(&self, scaled: &[i64]) -> Vec<Rational> {
        scaled
            .iter()
            .map(|&v| Rational::new(BigInt::from(v), self.scale.clone()))
            .collect()
    }
}

/// Positional scoring rule for a non-increasing scoring vector.
pub fn positional_rule(name: &str, s: &[Rational]) -> Result<GsrRule> {
    let m = s.len();
    check_m(m)?;
    if s.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidRule(format!(
            "scoring vector must be non-increasing: {}",
            s.iter()
                .map(rational::format_rational)
                .collect::<Vec<_>>()
                .join(",")
        )));
    }
    let orders = canonical_orders(m)?;
    let f = orders
        .iter()
        .map(|o| (0..m).map(|c| s[o.position(c)].clone()).collect())
        .collect();
    GsrRule::new(name, m, f, Selector::Argmax)
}

pub fn plurality(m: usize) -> Result<GsrRule> {
    k_approval_named("plurality", 1, m)
}

pub fn k_approval(k: usize, m: usize) -> Result<GsrRule> {
    k_approval_named(&format!("{k}-approval"), k, m)
}

fn k_approval_named(name: &str, k: usize, m: usize) -> Result<GsrRule> {
    if k == 0 || k > m {
        return Err(Error::InvalidRule(format!(
            "k-approval needs 1 <= k <= m, got k = {k}"
        )));
    }
    let s: Vec<Rational> = (0..m).map(|i| rational::int((i < k) as i64)).collect();
    positional_rule(name, &s)
}

pub fn veto(m: usize) -> Result<GsrRule> {
    check_m(m)?;
    let s: Vec<Rational> = (0..m).map(|i| rational::int((i + 1 < m) as i64)).collect();
    positional_rule("veto", &s)
}

pub fn borda(m: usize) -> Result<GsrRule> {
    check_m(m)?;
    let s: Vec<Rational> = (0..m).map(|i| rational::int((m - 1 - i) as i64)).collect();
    positional_rule("borda", &s)
}

fn pairwise_table(m: usize) -> Result<Vec<Vec<Rational>>> {
    let orders = canonical_orders(m)?;
    Ok(orders
        .iter()
        .map(|o| {
            let mut row = vec![Rational::zero(); m * (m - 1)];
            for a in 0..m {
                for b in 0..m {
                    if a != b && o.prefers(a, b) {
                        row[pair_slot(m, a, b)] = Rational::one();
                    }
                }
            }
            row
        })
        .collect())
}

pub fn maximin(m: usize) -> Result<GsrRule> {
    check_m(m)?;
    if m < 2 {
        return Err(Error::InvalidRule("maximin needs m >= 2".into()));
    }
    GsrRule::new("maximin", m, pairwise_table(m)?, Selector::Maximin)
}

pub fn copeland(m: usize) -> Result<GsrRule> {
    check_m(m)?;
    if m < 2 {
        return Err(Error::InvalidRule("copeland needs m >= 2".into()));
    }
    GsrRule::new("copeland", m, pairwise_table(m)?, Selector::Copeland)
}

pub fn stv(m: usize) -> Result<GsrRule> {
    check_m(m)?;
    let orders = canonical_orders(m)?;
    let k = stv_dimension(m);
    let f = orders
        .iter()
        .map(|o| {
            let mut row = vec![Rational::zero(); k];
            for removed in 0..(1u32 << m) {
                if removed.count_ones() as usize >= m {
                    continue;
                }
                let top = o.top_among(removed).unwrap();
                row[stv_slot(m, removed, top)] = Rational::one();
            }
            row
        })
        .collect();
    GsrRule::new("stv", m, f, Selector::Stv)
}

/// Builds a rule from its command-line name:
/// `plurality | kapproval:<k> | <k>-approval | veto | borda | stv | maximin |
/// copeland`, or a custom scoring vector `s1,s2,...,sm`.
pub fn rule_by_name(name: &str, m: usize) -> Result<GsrRule> {
    let name = name.trim();
    match name {
        "plurality" => plurality(m),
        "veto" => veto(m),
        "borda" => borda(m),
        "stv" => stv(m),
        "maximin" => maximin(m),
        "copeland" => copeland(m),
        _ => {
            if let Some(k) = name.strip_prefix("kapproval:") {
                let k = k
                    .parse()
                    .map_err(|_| Error::InvalidRule(format!("bad k in {name:?}")))?;
                return k_approval(k, m);
            }
            if let Some(k) = name.strip_suffix("-approval") {
                let k = k
                    .parse()
                    .map_err(|_| Error::InvalidRule(format!("bad k in {name:?}")))?;
                return k_approval(k, m);
            }
            if name.contains(',') {
                let s = rational::parse_rational_list(name)
                    .map_err(|_| Error::InvalidRule(format!("bad scoring vector {name:?}")))?;
                if s.len() != m {
                    return Err(Error::InvalidRule(format!(
                        "scoring vector has {} entries for m = {m}",
                        s.len()
                    )));
                }
                return positional_rule(name, &s);
            }
            Err(Error::InvalidRule(format!("unknown rule {name:?}")))
        }
    }
}

// ---- direct evaluators ----------------------------------------------------

/// Positional totals tallied vote by vote.
pub fn positional_totals(s: &[Rational], profile: &[u32]) -> Result<Vec<Rational>> {
    let m = s.len();
    let orders = canonical_orders(m)?;
    if profile.len() != orders.len() {
        return Err(Error::DimensionMismatch {
            expected: orders.len(),
            actual: profile.len(),
        });
    }
    let mut totals = vec![Rational::zero(); m];
    for (o, &count) in orders.iter().zip(profile) {
        for (pos, &c) in o.ranking().iter().enumerate() {
            totals[c] += &s[pos] * Rational::from_integer(BigInt::from(count));
        }
    }
    Ok(totals)
}

/// `N[a][b]`: number of votes ranking `a` above `b`.
pub fn pairwise_matrix(m: usize, profile: &[u32]) -> Result<Vec<Vec<u64>>> {
    let orders = canonical_orders(m)?;
    if profile.len() != orders.len() {
        return Err(Error::DimensionMismatch {
            expected: orders.len(),
            actual: profile.len(),
        });
    }
    let mut n = vec![vec![0u64; m]; m];
    for (o, &count) in orders.iter().zip(profile) {
        for (i, &a) in o.ranking().iter().enumerate() {
            for &b in &o.ranking()[i + 1..] {
                n[a][b] += count as u64;
            }
        }
    }
    Ok(n)
}

/// Argmax with lexicographic tie-break.
fn first_argmax<T: PartialOrd>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v > &values[best] {
            best = i;
        }
    }
    best
}

pub fn maximin_winner(m: usize, profile: &[u32]) -> Result<usize> {
    if m < 2 {
        return Err(Error::InvalidRule("maximin needs m >= 2".into()));
    }
    let n = pairwise_matrix(m, profile)?;
    let mins: Vec<u64> = (0..m)
        .map(|c| (0..m).filter(|&d| d != c).map(|d| n[c][d]).min().unwrap())
        .collect();
    Ok(first_argmax(&mins))
}

pub fn copeland_winner(m: usize, profile: &[u32]) -> Result<usize> {
    if m < 2 {
        return Err(Error::InvalidRule("copeland needs m >= 2".into()));
    }
    let n = pairwise_matrix(m, profile)?;
    // wins + ties / 2, kept exact by counting half points
    let halves: Vec<u64> = (0..m)
        .map(|c| {
            (0..m)
                .filter(|&d| d != c)
                .map(|d| {
                    if n[c][d] > n[d][c] {
                        2
                    } else if n[c][d] == n[d][c] {
                        1
                    } else {
                        0
                    }
                })
                .sum()
        })
        .collect();
    Ok(first_argmax(&halves))
}

/// Round-by-round STV: repeatedly drop the candidate ranked first least
/// often among the survivors, the highest index among ties.
pub fn stv_winner(m: usize, profile: &[u32]) -> Result<usize> {
    let orders = canonical_orders(m)?;
    if profile.len() != orders.len() {
        return Err(Error::DimensionMismatch {
            expected: orders.len(),
            actual: profile.len(),
        });
    }
    let mut alive: Vec<usize> = (0..m).collect();
    while alive.len() > 1 {
        let mut tops = vec![0u64; m];
        for (o, &count) in orders.iter().zip(profile) {
            let top = o.ranking().iter().find(|c| alive.contains(c)).unwrap();
            tops[*top] += count as u64;
        }
        let low = alive.iter().map(|&c| tops[c]).min().unwrap();
        let out = *alive.iter().rev().find(|&&c| tops[c] == low).unwrap();
        alive.retain(|&c| c != out);
    }
    Ok(alive[0])
}

/// Two-candidate biased majority: outputs 0 (`x1`) iff at least `alpha·n`
/// rows are in bin 0, otherwise 1 (`x2`).
pub fn alpha_majority(alpha: &Rational, t: &[u32]) -> Result<usize> {
    if t.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: t.len(),
        });
    }
    if alpha.is_negative() || alpha > &Rational::one() {
        return Err(Error::InvalidParameter("alpha must lie in [0, 1]".into()));
    }
    let n: u32 = t.iter().sum();
    let lhs = BigInt::from(t[0]) * alpha.denom();
    let rhs = alpha.numer() * BigInt::from(n);
    Ok(if lhs >= rhs { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn profile_of(m: usize, votes: &[(&[usize], u32)]) -> Vec<u32> {
        let mut p = vec![0; factorial(m)];
        for (ranking, count) in votes {
            p[order_index(ranking)] += count;
        }
        p
    }

    #[test]
    fn canonical_orders_small() {
        let o2 = canonical_orders(2).unwrap();
        assert_eq!(
            o2.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
            vec!["0>1", "1>0"]
        );
        let o3 = canonical_orders(3).unwrap();
        assert_eq!(o3.len(), 6);
        assert_eq!(o3[0].ranking(), &[0, 1, 2]);
        assert_eq!(o3[5].ranking(), &[2, 1, 0]);
        let o1 = canonical_orders(1).unwrap();
        assert_eq!(o1.len(), 1);
        assert!(matches!(
            canonical_orders(6),
            Err(Error::TooManyCandidates(6))
        ));
        for m in 1..=5 {
            for (i, o) in canonical_orders(m).unwrap().iter().enumerate() {
                assert_eq!(order_index(o.ranking()), i);
            }
        }
    }

    #[test]
    fn positional_examples() {
        let b = borda(3).unwrap();
        let p = profile_of(3, &[(&[0, 1, 2], 1)]);
        assert_eq!(
            b.score(&p).unwrap(),
            vec![ratio(2, 1), ratio(1, 1), ratio(0, 1)]
        );
        assert_eq!(b.winner(&p).unwrap(), 0);

        let pl = plurality(3).unwrap();
        let p = profile_of(3, &[(&[0, 1, 2], 2), (&[1, 2, 0], 2), (&[2, 0, 1], 1)]);
        assert_eq!(pl.winner(&p).unwrap(), 0);

        let two = k_approval(2, 3).unwrap();
        assert_eq!(
            two.vote_scores(order_index(&[0, 1, 2])),
            &[ratio(1, 1), ratio(1, 1), ratio(0, 1)]
        );
        assert!(positional_rule("bad", &[ratio(0, 1), ratio(1, 1)]).is_err());
    }

    #[test]
    fn borda_on_two_is_majority() {
        let b = borda(2).unwrap();
        assert_eq!(b.winner(&[3, 1]).unwrap(), 0);
        assert_eq!(b.winner(&[1, 3]).unwrap(), 1);
        assert_eq!(b.winner(&[2, 2]).unwrap(), 0);
    }

    #[test]
    fn pairwise_rules_on_two_are_majority() {
        let half = ratio(1, 2);
        for a in 0..8u32 {
            for b in 0..8u32 {
                let majority = alpha_majority(&half, &[a, b]).unwrap();
                assert_eq!(maximin(2).unwrap().winner(&[a, b]).unwrap(), majority);
                assert_eq!(copeland(2).unwrap().winner(&[a, b]).unwrap(), majority);
                assert_eq!(maximin_winner(2, &[a, b]).unwrap(), majority);
                assert_eq!(copeland_winner(2, &[a, b]).unwrap(), majority);
            }
        }
    }

    #[test]
    fn condorcet_cycle_breaks_to_zero() {
        let p = profile_of(3, &[(&[0, 1, 2], 1), (&[1, 2, 0], 1), (&[2, 0, 1], 1)]);
        let n = pairwise_matrix(3, &p).unwrap();
        assert_eq!(n[0][1], 2);
        assert_eq!(n[1][2], 2);
        assert_eq!(n[2][0], 2);
        assert_eq!(maximin(3).unwrap().winner(&p).unwrap(), 0);
        assert_eq!(maximin_winner(3, &p).unwrap(), 0);
        assert_eq!(copeland(3).unwrap().winner(&p).unwrap(), 0);
        assert_eq!(copeland_winner(3, &p).unwrap(), 0);
    }

    #[test]
    fn condorcet_winner_selected() {
        let p = profile_of(3, &[(&[1, 0, 2], 3), (&[2, 1, 0], 2), (&[0, 1, 2], 2)]);
        assert_eq!(maximin_winner(3, &p).unwrap(), 1);
        assert_eq!(copeland_winner(3, &p).unwrap(), 1);
    }

    #[test]
    fn stv_examples() {
        let p = profile_of(3, &[(&[0, 1, 2], 2), (&[1, 0, 2], 2), (&[2, 1, 0], 1)]);
        assert_eq!(stv_winner(3, &p).unwrap(), 1);
        assert_eq!(stv(3).unwrap().winner(&p).unwrap(), 1);

        // all orders once: 2 goes first, then 1, leaving 0
        let all = vec![1u32; 6];
        assert_eq!(stv_winner(3, &all).unwrap(), 0);
        assert_eq!(stv(3).unwrap().winner(&all).unwrap(), 0);
        assert_eq!(stv(3).unwrap().co_winners(&all).unwrap(), vec![0, 1, 2]);

        for a in 0..4u32 {
            for b in 0..4u32 {
                assert_eq!(
                    stv_winner(2, &[a, b]).unwrap(),
                    plurality(2).unwrap().winner(&[a, b]).unwrap()
                );
            }
        }
    }

    #[test]
    fn stv_dimension_formula() {
        assert_eq!(stv_dimension(2), 2 + 2);
        assert_eq!(stv_dimension(3), 3 + 6 + 3);
        assert_eq!(stv(3).unwrap().dimension(), 12);
        assert_eq!(stv_dimension(4), 4 + 12 + 12 + 4);
    }

    #[test]
    fn plurality_score_is_top_histogram() {
        let p = profile_of(3, &[(&[0, 1, 2], 4), (&[0, 2, 1], 1), (&[2, 1, 0], 3)]);
        assert_eq!(
            plurality(3).unwrap().score(&p).unwrap(),
            vec![ratio(5, 1), ratio(0, 1), ratio(3, 1)]
        );
        assert!(plurality(3)
            .unwrap()
            .score(&[0; 6])
            .unwrap()
            .iter()
            .all(|v| v.is_zero()));
    }

    #[test]
    fn alpha_majority_boundaries() {
        let half = ratio(1, 2);
        assert_eq!(alpha_majority(&half, &[4, 3]).unwrap(), 0);
        assert_eq!(alpha_majority(&half, &[2, 2]).unwrap(), 0);
        assert_eq!(alpha_majority(&ratio(1, 1), &[6, 1]).unwrap(), 1);
        assert_eq!(alpha_majority(&ratio(0, 1), &[0, 5]).unwrap(), 0);
        assert!(alpha_majority(&half, &[1, 1, 1]).is_err());
    }

    #[test]
    fn names_parse() {
        for name in [
            "plurality",
            "veto",
            "borda",
            "stv",
            "maximin",
            "copeland",
            "kapproval:2",
            "2-approval",
        ] {
            assert!(rule_by_name(name, 3).is_ok(), "{name}");
        }
        assert_eq!(
            rule_by_name("3,1,0", 3)
                .unwrap()
                .winner(&[1, 0, 0, 0, 0, 0])
                .unwrap(),
            0
        );
        assert!(rule_by_name("0,1,3", 3).is_err());
        assert!(rule_by_name("dictator", 3).is_err());
        assert!(rule_by_name("kapproval:4", 3).is_err());
    }

    #[test]
    fn custom_tie_break() {
        let rule = plurality(3)
            .unwrap()
            .with_tie_break(TieBreak::new(vec![2, 1, 0]).unwrap())
            .unwrap();
        assert_eq!(rule.winner(&[1, 0, 1, 0, 1, 0]).unwrap(), 2);
    }

    // ---- properties -------------------------------------------------------

    fn all_rules(m: usize) -> Vec<GsrRule> {
        vec![
            plurality(m).unwrap(),
            k_approval(2, m).unwrap(),
            veto(m).unwrap(),
            borda(m).unwrap(),
            maximin(m).unwrap(),
            copeland(m).unwrap(),
            stv(m).unwrap(),
        ]
    }

    fn direct_winner(rule: &GsrRule, p: &[u32]) -> usize {
        let m = rule.candidates();
        match rule.selector() {
            Selector::Argmax => {
                let s: Vec<Rational> = (0..m)
                    .map(|pos| rule.vote_scores(0)[rule.orders()[0].ranking()[pos]].clone())
                    .collect();
                first_argmax(&positional_totals(&s, p).unwrap())
            }
            Selector::Maximin => maximin_winner(m, p).unwrap(),
            Selector::Copeland => copeland_winner(m, p).unwrap(),
            Selector::Stv => stv_winner(m, p).unwrap(),
        }
    }

    fn arb_profile() -> impl Strategy<Value = (usize, Vec<u32>)> {
        (2usize..=4).prop_flat_map(|m| (Just(m), proptest::collection::vec(0u32..6, factorial(m))))
    }

    /// Moves `winner` one place up in one vote of type `from`.
    fn raise(m: usize, p: &[u32], from: usize, winner: usize) -> Option<Vec<u32>> {
        if p[from] == 0 {
            return None;
        }
        let orders = canonical_orders(m).unwrap();
        let mut r = orders[from].ranking().to_vec();
        let pos = r.iter().position(|&c| c == winner).unwrap();
        if pos == 0 {
            return None;
        }
        r.swap(pos, pos - 1);
        let mut q = p.to_vec();
        q[from] -= 1;
        q[order_index(&r)] += 1;
        Some(q)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn fg_matches_direct((m, p) in arb_profile()) {
            for rule in all_rules(m) {
                let via_fg = rule.winner(&p).unwrap();
                prop_assert_eq!(via_fg, direct_winner(&rule, &p), "{}", rule.name());
                let mut s = Vec::new();
                rule.score_scaled(&p, &mut s);
                prop_assert_eq!(via_fg, rule.winner_from_scaled(&s));
            }
        }

        #[test]
        fn canceling_out((m, p) in arb_profile()) {
            let q: Vec<u32> = p.iter().map(|v| v + 1).collect();
            for rule in all_rules(m) {
                prop_assert_eq!(rule.winner(&p).unwrap(), rule.winner(&q).unwrap(), "{}", rule.name());
            }
        }

        #[test]
        fn monotone((m, p) in arb_profile(), pick in any::<usize>()) {
            for rule in all_rules(m) {
                if rule.name() == "stv" {
                    continue;
                }
                let w = rule.winner(&p).unwrap();
                let from = pick % p.len();
                if let Some(q) = raise(m, &p, from, w) {
                    prop_assert_eq!(rule.winner(&q).unwrap(), w, "{}", rule.name());
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn neutral_up_to_ties((m, p) in arb_profile(), perm_seed in any::<u64>()) {
            // random relabeling sigma of candidates
            let mut sigma: Vec<usize> = (0..m).collect();
            let mut seed = perm_seed;
            for i in (1..m).rev() {
                let j = (seed % (i as u64 + 1)) as usize;
                seed /= i as u64 + 1;
                sigma.swap(i, j);
            }
            let orders = canonical_orders(m).unwrap();
            let mut q = vec![0u32; p.len()];
            for (o, &count) in orders.iter().zip(&p) {
                let relabeled: Vec<usize> = o.ranking().iter().map(|&c| sigma[c]).collect();
                q[order_index(&relabeled)] += count;
            }
            for rule in all_rules(m) {
                let mut before: Vec<usize> = rule.co_winners(&p).unwrap().iter().map(|&c| sigma[c]).collect();
                before.sort_unstable();
                prop_assert_eq!(before, rule.co_winners(&q).unwrap(), "{}", rule.name());
                prop_assert!(rule.co_winners(&p).unwrap().contains(&rule.winner(&p).unwrap()));
            }
        }
    }
}
