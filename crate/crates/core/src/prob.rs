//! Exact multinomial machinery: histograms, i.i.d. row distributions and the
//! probabilities of histograms conditioned on one fixed row.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Bin counts of a database over a universe of `c` values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Histogram {
    counts: Vec<u32>,
}

impl Histogram {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidHistogram(format!(
                "need at least 2 bins, got {}",
                counts.len()
            )));
        }
        Ok(Histogram { counts })
    }

    pub fn zeros(bins: usize) -> Result<Self> {
        Self::new(vec![0; bins])
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Number of rows.
    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn get(&self, bin: usize) -> u32 {
        self.counts[bin]
    }

    /// `self + z·e_bin`, or `None` if a count would go negative.
    pub fn shifted(&self, bin: usize, z: i64) -> Option<Histogram> {
        let v = self.counts[bin] as i64 + z;
        if v < 0 || v > u32::MAX as i64 {
            return None;
        }
        let mut counts = self.counts.clone();
        counts[bin] = v as u32;
        Some(Histogram { counts })
    }
}

impl TryFrom<Vec<u32>> for Histogram {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Histogram::new(v)
    }
}

impl From<Histogram> for Vec<u32> {
    fn from(h: Histogram) -> Vec<u32> {
        h.counts
    }
}

impl fmt::Display for Histogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Histogram {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidHistogram(s.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Histogram::new(counts)
    }
}

/// Probability vector of a single row; rows are drawn i.i.d. from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteDistribution {
    probs: Vec<Rational>,
}

impl VoteDistribution {
    pub fn new(probs: Vec<Rational>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution("need at least 2 values".into()));
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidDistribution("negative probability".into()));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {}, not 1",
                rational::format_rational(&total)
            )));
        }
        if probs.iter().filter(|p| p.is_positive()).count() < 2 {
            return Err(Error::InsufficientSupport);
        }
        Ok(VoteDistribution { probs })
    }

    pub fn uniform(bins: usize) -> Result<Self> {
        Self::new(vec![rational::ratio(1, bins.max(1) as i64); bins])
    }

    /// Parses `uniform:<c>` or a comma-separated list of rationals.
    pub fn parse(s: &str, bins_if_uniform: usize) -> Result<Self> {
        if s.trim() == "uniform" {
            return Self::uniform(bins_if_uniform);
        }
        Self::new(rational::parse_rational_list(s)?)
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn p(&self, bin: usize) -> &Rational {
        &self.probs[bin]
    }

    pub fn bins(&self) -> usize {
        self.probs.len()
    }

    /// Indices with positive probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.bins())
            .filter(|&i| self.probs[i].is_positive())
            .collect()
    }

    /// Smallest single-bin probability.
    pub fn p_min(&self) -> Rational {
        self.probs.iter().min().cloned().unwrap()
    }

    /// Smallest probability mass of a pair of distinct bins.
    pub fn p_min_pair(&self) -> Rational {
        let mut sorted = self.probs.clone();
        sorted.sort();
        &sorted[0] + &sorted[1]
    }

    /// Integer weights `a_i = p_i · D` over the common denominator `D`.
    pub fn integer_weights(&self) -> (BigUint, Vec<BigUint>) {
        let d = rational::common_denominator(&self.probs);
        let d_int = BigInt::from(d.clone());
        let weights = self
            .probs
            .iter()
            .map(|p| (p.numer() * (&d_int / p.denom())).magnitude().clone())
            .collect();
        (d, weights)
    }
}

impl fmt::Display for VoteDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.probs.iter().map(rational::format_rational).collect();
        f.write_str(&parts.join(","))
    }
}

/// Memoized factorials and binomial coefficients up to a fixed size.
///
/// Built once before a sweep and only read afterwards.
#[derive(Clone, Debug)]
pub struct FactorialTable {
    factorials: Vec<BigUint>,
    // pascal[n][k] = C(n, k)
    pascal: Vec<Vec<BigUint>>,
}

impl FactorialTable {
    pub fn new(max_n: u32) -> Self {
        let max_n = max_n as usize;
        let mut factorials = Vec::with_capacity(max_n + 1);
        factorials.push(BigUint::one());
        for i in 1..=max_n {
            let next = &factorials[i - 1] * BigUint::from(i);
            factorials.push(next);
        }
        let mut pascal: Vec<Vec<BigUint>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = Vec::with_capacity(n + 1);
            for k in 0..=n {
                if k == 0 || k == n {
                    row.push(BigUint::one());
                } else {
                    let v = &pascal[n - 1][k - 1] + &pascal[n - 1][k];
                    row.push(v);
                }
            }
            pascal.push(row);
        }
        FactorialTable { factorials, pascal }
    }

    pub fn max_n(&self) -> u32 {
        (self.factorials.len() - 1) as u32
    }

    pub fn factorial(&self, n: u32) -> &BigUint {
        &self.factorials[n as usize]
    }

    pub fn binomial(&self, n: u32, k: u32) -> BigUint {
        if k > n {
            BigUint::zero()
        } else {
            self.pascal[n as usize][k as usize].clone()
        }
    }

    pub fn binomial_ref(&self, n: u32, k: u32) -> &BigUint {
        &self.pascal[n as usize][k as usize]
    }

    /// `n! / (t_1! ... t_c!)`.
    pub fn multinomial(&self, counts: &[u32]) -> BigUint {
        let mut remaining: u32 = counts.iter().sum();
        let mut acc = BigUint::one();
        for &c in counts {
            acc *= self.binomial_ref(remaining, c);
            remaining -= c;
        }
        acc
    }
}

fn check_dims(t: &Histogram, pi: &VoteDistribution) -> Result<()> {
    if t.bins() != pi.bins() {
        return Err(Error::DimensionMismatch {
            expected: pi.bins(),
            actual: t.bins(),
        });
    }
    Ok(())
}

/// `Pr(Hist = t)` when `t.n()` rows are drawn i.i.d. from `pi`.
pub fn multinomial_pmf(t: &Histogram, pi: &VoteDistribution) -> Result<Rational> {
    check_dims(t, pi)?;
    let table = FactorialTable::new(t.n());
    Ok(multinomial_pmf_with(&table, t.counts(), pi))
}

pub(crate) fn multinomial_pmf_with(
    table: &FactorialTable,
    counts: &[u32],
    pi: &VoteDistribution,
) -> Rational {
    let mut prob = Rational::from_integer(BigInt::from(table.multinomial(counts)));
    for (&c, p) in counts.iter().zip(pi.probs()) {
        if c == 0 {
            continue;
        }
        if p.is_zero() {
            return Rational::zero();
        }
        prob *= num_traits::pow(p.clone(), c as usize);
    }
    prob
}

/// `Pr(Hist(X) = t | X_i = x)`: the remaining `n - 1` rows must form `t - e_x`.
pub fn cond_hist_prob(t: &Histogram, x: usize, pi: &VoteDistribution) -> Result<Rational> {
    check_dims(t, pi)?;
    if x >= t.bins() {
        return Err(Error::IndexOutOfRange {
            index: x,
            len: t.bins(),
        });
    }
    if t.n() == 0 {
        return Err(Error::InvalidHistogram(
            "conditioning needs at least one row".into(),
        ));
    }
    match t.shifted(x, -1) {
        None => Ok(Rational::zero()),
        Some(rest) => multinomial_pmf(&rest, pi),
    }
}

/// `C(n, k) p^k (1 - p)^(n - k)`.
pub fn binomial_pmf(k: u32, n: u32, p: &Rational) -> Result<Rational> {
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    if p.is_negative() || p > &Rational::one() {
        return Err(Error::InvalidParameter("p must lie in [0, 1]".into()));
    }
    let table = FactorialTable::new(n);
    Ok(binomial_pmf_with(&table, k, n, p))
}

pub(crate) fn binomial_pmf_with(table: &FactorialTable, k: u32, n: u32, p: &Rational) -> Rational {
    let q = Rational::one() - p;
    Rational::from_integer(BigInt::from(table.binomial(n, k)))
        * num_traits::pow(p.clone(), k as usize)
        * num_traits::pow(q, (n - k) as usize)
}

/// Every histogram of `n` rows over `c` bins, in colexicographic order:
/// histograms are compared on their last bin first, so the stream starts at
/// `(n, 0, ..., 0)` and ends at `(0, ..., 0, n)`.
pub fn enumerate_histograms(n: u32, c: usize) -> HistogramIter {
    assert!(c >= 2, "histograms need at least 2 bins");
    let mut first = vec![0; c];
    first[0] = n;
    HistogramIter { next: Some(first) }
}

/// Number of histograms of `n` rows over `c` bins, `C(n + c - 1, c - 1)`.
pub fn histogram_count(n: u32, c: usize) -> BigUint {
    let table = FactorialTable::new(n + c as u32 - 1);
    table.binomial(n + c as u32 - 1, c as u32 - 1)
}

#[derive(Clone, Debug)]
pub struct HistogramIter {
    next: Option<Vec<u32>>,
}

impl HistogramIter {
    fn advance(t: &mut [u32]) -> bool {
        let Some(i) = t.iter().position(|&v| v > 0) else {
            return false;
        };
        if i + 1 == t.len() {
            return false;
        }
        let v = t[i];
        t[i] = 0;
        t[0] = v - 1;
        t[i + 1] += 1;
        true
    }
}

impl Iterator for HistogramIter {
    type Item = Histogram;

    fn next(&mut self) -> Option<Histogram> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if Self::advance(&mut succ) {
            self.next = Some(succ);
        }
        Some(Histogram { counts: current })
    }
}
