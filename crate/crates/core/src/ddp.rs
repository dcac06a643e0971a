//! Exact δ of histogram-respecting mechanisms.
//!
//! For a likelihood-ratio bound `r = e^ε`, δ is the largest, over ordered
//! pairs of supported values `(x, x')`, of
//! `sum_o max(0, Pr(M = o | X_1 = x) - r·Pr(M = o | X_1 = x'))`.
//! The maximizing output set is `{o : Pr(o | x) > r·Pr(o | x')}`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::mechanism::{Label, Mechanism};
use crate::prob::{cond_hist_prob, enumerate_histograms, Histogram, VoteDistribution};
use crate::rational::{self, Rational};
use crate::sweep::{conditional_table, conditional_tables, ConditionalTable, Masses};
use crate::trails::{partition_into_trails, Direction};

/// Databases the brute-force oracle is willing to enumerate.
pub const ORACLE_LIMIT: u64 = 10_000_000;

/// Exact δ together with the pair and output set attaining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaResult {
    pub rule: String,
    pub observable: String,
    pub n: u32,
    pub eps_ratio: Rational,
    pub delta: Rational,
    pub x: usize,
    pub xprime: usize,
    pub witness: Vec<Label>,
}

pub const CSV_HEADER: &str = "n,rule,observable,eps_ratio,delta_num,delta_den,delta_float,x,xprime";

impl DeltaResult {
    pub fn delta_f64(&self) -> f64 {
        rational::to_f64(&self.delta)
    }

    pub fn epsilon(&self) -> f64 {
        rational::ln(&self.eps_ratio)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            csv_field(&self.rule),
            self.observable,
            rational::format_rational(&self.eps_ratio),
            self.delta.numer(),
            self.delta.denom(),
            self.delta_f64(),
            self.x,
            self.xprime
        )
    }

    /// JSON object; the witness set is listed only when it has at most
    /// `max_witness` outputs.
    pub fn to_json(&self, max_witness: usize) -> serde_json::Value {
        let mut v = json!({
            "n": self.n,
            "rule": self.rule,
            "observable": self.observable,
            "eps_ratio": rational::format_rational(&self.eps_ratio),
            "delta": rational::format_rational(&self.delta),
            "delta_num": self.delta.numer().to_string(),
            "delta_den": self.delta.denom().to_string(),
            "delta_float": self.delta_f64(),
            "x": self.x,
            "xprime": self.xprime,
            "witness_size": self.witness.len(),
        });
        if self.witness.len() <= max_witness {
            v["witness"] = json!(self
                .witness
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>());
        }
        v
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn check_ratio(r: &Rational) -> Result<()> {
    if r < &Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "eps ratio must be at least 1, got {}",
            rational::format_rational(r)
        )));
    }
    Ok(())
}

/// Sum of positive parts for support slots `(sx, sy)` as an exact rational,
/// plus the ids of the outputs contributing to it.
fn pair_delta(
    table: &ConditionalTable,
    sx: usize,
    sy: usize,
    r: &Rational,
    want_ids: bool,
) -> (Rational, Vec<usize>) {
    let s = table.support().len();
    let mut ids = Vec::new();
    if r.is_one() {
        if let Masses::Small(m) = &table.masses {
            let mut sum = 0u128;
            for (id, row) in m.chunks_exact(s).enumerate() {
                if row[sx] > row[sy] {
                    sum += row[sx] - row[sy];
                    if want_ids {
                        ids.push(id);
                    }
                }
            }
            let delta = Rational::new(BigInt::from(sum), BigInt::from(table.total().clone()));
            return (delta, ids);
        }
    }
    let a = r.numer().clone();
    let b = r.denom().clone();
    let mut sum = BigInt::zero();
    for id in 0..table.labels().len() {
        let diff =
            &b * BigInt::from(table.mass_big(id, sx)) - &a * BigInt::from(table.mass_big(id, sy));
        if diff.is_positive() {
            sum += diff;
            if want_ids {
                ids.push(id);
            }
        }
    }
    let delta = Rational::new(sum, b * BigInt::from(table.total().clone()));
    (delta, ids)
}

fn witness_labels(table: &ConditionalTable, ids: Vec<usize>) -> Vec<Label> {
    let mut out: Vec<Label> = ids
        .into_iter()
        .map(|id| table.labels()[id].clone())
        .collect();
    out.sort_unstable();
    out
}

impl ConditionalTable {
    /// δ at ratio `r`, maximized over ordered pairs of supported values.
    /// Ties between pairs go to the lexicographically first pair.
    pub fn delta(&self, mechanism: &Mechanism, r: &Rational) -> Result<DeltaResult> {
        check_ratio(r)?;
        let s = self.support().len();
        if s < 2 {
            return Err(Error::InsufficientSupport);
        }
        let mut best: Option<(Rational, usize, usize)> = None;
        for sx in 0..s {
            for sy in 0..s {
                if sx == sy {
                    continue;
                }
                let (d, _) = pair_delta(self, sx, sy, r, false);
                if best.as_ref().is_none_or(|b| d > b.0) {
                    best = Some((d, sx, sy));
                }
            }
        }
        let (_, sx, sy) = best.unwrap();
        self.finish(mechanism, r, sx, sy)
    }

    /// δ for the single ordered pair `(x, x')`.
    pub fn delta_pair(
        &self,
        mechanism: &Mechanism,
        r: &Rational,
        x: usize,
        xprime: usize,
    ) -> Result<DeltaResult> {
        check_ratio(r)?;
        let sx = self.support_slot(x)?;
        let sy = self.support_slot(xprime)?;
        if sx == sy {
            return Err(Error::InvalidParameter(
                "pair needs two distinct values".into(),
            ));
        }
        self.finish(mechanism, r, sx, sy)
    }

    fn finish(
        &self,
        mechanism: &Mechanism,
        r: &Rational,
        sx: usize,
        sy: usize,
    ) -> Result<DeltaResult> {
        let (delta, ids) = pair_delta(self, sx, sy, r, true);
        Ok(DeltaResult {
            rule: mechanism.rule_name(),
            observable: mechanism.observable().to_string(),
            n: self.n(),
            eps_ratio: r.clone(),
            delta,
            x: self.support()[sx],
            xprime: self.support()[sy],
            witness: witness_labels(self, ids),
        })
    }

    /// Signed mass `Pr(S | x) - r·Pr(S | x')` of an output set.
    pub fn signed_mass(
        &self,
        set: &[Label],
        x: usize,
        xprime: usize,
        r: &Rational,
    ) -> Result<Rational> {
        let px = self.distribution(x)?;
        let py = self.distribution(xprime)?;
        let zero = Rational::zero();
        Ok(set
            .iter()
            .map(|l| px.get(l).unwrap_or(&zero) - r * py.get(l).unwrap_or(&zero))
            .sum())
    }

    /// Smallest δ achievable by a simulator that substitutes a fixed
    /// supported value `g` for the missing row, over all choices of `g`.
    pub fn simulator_delta(&self, r: &Rational) -> Result<Rational> {
        check_ratio(r)?;
        let s = self.support().len();
        let mut best: Option<Rational> = None;
        for g in 0..s {
            let mut worst = Rational::zero();
            for x in 0..s {
                if x == g {
                    continue;
                }
                let (up, _) = pair_delta(self, x, g, r, false);
                let (down, _) = pair_delta(self, g, x, r, false);
                worst = worst.max(up).max(down);
            }
            if best.as_ref().is_none_or(|b| &worst < b) {
                best = Some(worst);
            }
        }
        best.ok_or(Error::InsufficientSupport)
    }
}

/// `Pr(M(X) = o | X_1 = x)` for every output `o` that occurs under some
/// supported value.
pub fn output_distribution(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    n: u32,
    x: usize,
) -> Result<BTreeMap<Label, Rational>> {
    conditional_table(mechanism, pi, n)?.distribution(x)
}

pub fn delta_exact(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    n: u32,
    r: &Rational,
) -> Result<DeltaResult> {
    conditional_table(mechanism, pi, n)?.delta(mechanism, r)
}

/// δ restricted to the ordered pair `(x, x')`.
pub fn delta_exact_pair(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    n: u32,
    r: &Rational,
    x: usize,
    xprime: usize,
) -> Result<DeltaResult> {
    conditional_table(mechanism, pi, n)?.delta_pair(mechanism, r, x, xprime)
}

/// δ at each ratio from a single enumeration.
pub fn eps_delta_curve(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    n: u32,
    ratios: &[Rational],
) -> Result<Vec<(Rational, Rational)>> {
    let table = conditional_table(mechanism, pi, n)?;
    ratios
        .iter()
        .map(|r| Ok((r.clone(), table.delta(mechanism, r)?.delta)))
        .collect()
}

pub fn simulator_ddp_min_delta(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    n: u32,
    r: &Rational,
) -> Result<Rational> {
    conditional_table(mechanism, pi, n)?.simulator_delta(r)
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// δ for each `n`, computed in parallel on `jobs` threads (default: all
/// cores). Results come back in the order of `ns`.
pub fn delta_series(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    ns: &[u32],
    r: &Rational,
    jobs: Option<usize>,
) -> Result<Vec<DeltaResult>> {
    Ok(delta_series_many(&[mechanism], pi, ns, r, jobs)?
        .into_iter()
        .map(|mut v| v.remove(0))
        .collect())
}

/// Like [`delta_series`] for several mechanisms sharing each enumeration.
/// Entry `[i][j]` is mechanism `j` at `ns[i]`.
pub fn delta_series_many(
    mechanisms: &[&Mechanism],
    pi: &VoteDistribution,
    ns: &[u32],
    r: &Rational,
    jobs: Option<usize>,
) -> Result<Vec<Vec<DeltaResult>>> {
    check_ratio(r)?;
    pool(jobs)?.install(|| {
        ns.par_iter()
            .map(|&n| {
                let tables = conditional_tables(mechanisms, pi, n)?;
                tables
                    .iter()
                    .zip(mechanisms)
                    .map(|(t, m)| t.delta(m, r))
                    .collect::<Result<Vec<_>>>()
            })
            .collect()
    })
}

// ---- brute-force oracle over databases -----------------------------------

/// Conditional output distributions from all `c^n` databases, conditioning
/// on row `row` (0-based).
fn database_distributions(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    n: u32,
    row: usize,
) -> Result<BTreeMap<usize, BTreeMap<Label, Rational>>> {
    let c = pi.bins();
    mechanism.check_bins(c)?;
    if n == 0 || row >= n as usize {
        return Err(Error::InvalidParameter(format!(
            "row {row} out of range for n = {n}"
        )));
    }
    let count = (c as u64).checked_pow(n).filter(|&v| v <= ORACLE_LIMIT);
    if count.is_none() {
        return Err(Error::ResourceGuard(format!(
            "{c}^{n} databases exceed the oracle limit of {ORACLE_LIMIT}"
        )));
    }
    let mut out: BTreeMap<usize, BTreeMap<Label, Rational>> = BTreeMap::new();
    let mut db = vec![0usize; n as usize];
    loop {
        let x = db[row];
        if pi.p(x).is_positive() {
            let mut prob = Rational::one();
            for (i, &v) in db.iter().enumerate() {
                if i != row {
                    prob *= pi.p(v);
                }
            }
            if !prob.is_zero() {
                let mut hist = vec![0u32; c];
                for &v in &db {
                    hist[v] += 1;
                }
                let label = mechanism.eval(&hist)?;
                *out.entry(x)
                    .or_default()
                    .entry(label)
                    .or_insert_with(Rational::zero) += prob;
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == db.len() {
                return Ok(out);
            }
            db[i] += 1;
            if db[i] < c {
                break;
            }
            db[i] = 0;
            i += 1;
        }
    }
}

const SUBSET_LIMIT: usize = 12;

/// Best output set for one pair; exhaustive over subsets for small alphabets.
fn oracle_pair(
    alphabet: &[Label],
    px: &BTreeMap<Label, Rational>,
    py: &BTreeMap<Label, Rational>,
    r: &Rational,
) -> (Rational, Vec<Label>) {
    let zero = Rational::zero();
    let diffs: Vec<Rational> = alphabet
        .iter()
        .map(|l| px.get(l).unwrap_or(&zero) - r * py.get(l).unwrap_or(&zero))
        .collect();
    if alphabet.len() <= SUBSET_LIMIT {
        let mut best = (Rational::zero(), 0u32);
        for mask in 0u32..(1 << alphabet.len()) {
            let v: Rational = (0..alphabet.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| &diffs[i])
                .sum();
            // prefer the smaller set among equal values
            if v > best.0 || (v == best.0 && mask.count_ones() < best.1.count_ones()) {
                best = (v, mask);
            }
        }
        let set = (0..alphabet.len())
            .filter(|i| best.1 & (1 << i) != 0)
            .map(|i| alphabet[i].clone())
            .collect();
        return (best.0, set);
    }
    let mut total = Rational::zero();
    let mut set = Vec::new();
    for (l, d) in alphabet.iter().zip(&diffs) {
        if d.is_positive() {
            total += d;
            set.push(l.clone());
        }
    }
    (total, set)
}

/// Independent δ by enumerating every database and conditioning on row
/// `row`; same contract as [`delta_exact`].
pub fn delta_bruteforce_db_at(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    n: u32,
    r: &Rational,
    row: usize,
) -> Result<DeltaResult> {
    check_ratio(r)?;
    let dists = database_distributions(mechanism, pi, n, row)?;
    let support = pi.support();
    let alphabet: Vec<Label> = dists
        .values()
        .flat_map(|d| d.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let empty = BTreeMap::new();
    let mut best: Option<(Rational, usize, usize, Vec<Label>)> = None;
    for &x in &support {
        for &y in &support {
            if x == y {
                continue;
            }
            let px = dists.get(&x).unwrap_or(&empty);
            let py = dists.get(&y).unwrap_or(&empty);
            let (d, set) = oracle_pair(&alphabet, px, py, r);
            if best.as_ref().is_none_or(|b| d > b.0) {
                best = Some((d, x, y, set));
            }
        }
    }
    let (delta, x, xprime, witness) = best.ok_or(Error::InsufficientSupport)?;
    Ok(DeltaResult {
        rule: mechanism.rule_name(),
        observable: mechanism.observable().to_string(),
        n,
        eps_ratio: r.clone(),
        delta,
        x,
        xprime,
        witness,
    })
}

pub fn delta_bruteforce_db(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    n: u32,
    r: &Rational,
) -> Result<DeltaResult> {
    delta_bruteforce_db_at(mechanism, pi, n, r, 0)
}

// ---- trail engine -----------------------------------------------------------

/// δ for the pair `(d.j, d.k)` at ratio 1, evaluated by splitting the
/// preimage of the maximizing output set into trails along `d` and summing
/// `Pr(exit | j) - Pr(entry | k)` over them.
pub fn delta_via_trails(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    n: u32,
    d: Direction,
) -> Result<DeltaResult> {
    let one = Rational::one();
    let table = conditional_table(mechanism, pi, n)?;
    let pair = table.delta_pair(mechanism, &one, d.j, d.k)?;
    let set = preimage(mechanism, &pair.witness, n, pi.bins())?;
    let mut delta = Rational::zero();
    for trail in partition_into_trails(&set, d)? {
        delta += cond_hist_prob(&trail.exit(), d.j, pi)? - cond_hist_prob(trail.entry(), d.k, pi)?;
    }
    Ok(DeltaResult { delta, ..pair })
}

/// Preimage of an output set on histograms of size `n`.
pub fn preimage(
    mechanism: &Mechanism,
    set: &[Label],
    n: u32,
    bins: usize,
) -> Result<BTreeSet<Histogram>> {
    let targets: BTreeSet<&Label> = set.iter().collect();
    let mut out = BTreeSet::new();
    for t in enumerate_histograms(n, bins) {
        if targets.contains(&mechanism.eval(t.counts())?) {
            out.insert(t);
        }
    }
    Ok(out)
}
