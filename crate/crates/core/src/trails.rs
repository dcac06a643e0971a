//! Trails: runs of histograms obtained by repeatedly moving one row from bin
//! `j` to bin `k`.
//!
//! For i.i.d. rows, the difference between the probability of a trail
//! conditioned on a row being `j` and on it being `k` telescopes down to the
//! two endpoints. [`trail_theorem_sides`] evaluates both sides exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{cond_hist_prob, Histogram, VoteDistribution};
use crate::rational::Rational;

/// Ordered pair of distinct bins `(j, k)`; one step along it moves a row from `j` to `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Direction {
    pub j: usize,
    pub k: usize,
}

impl Direction {
    pub fn new(j: usize, k: usize) -> Result<Self> {
        if j == k {
            return Err(Error::InvalidTrail(format!(
                "direction needs j != k (both {j})"
            )));
        }
        Ok(Direction { j, k })
    }

    pub fn reversed(self) -> Direction {
        Direction {
            j: self.k,
            k: self.j,
        }
    }

    fn check_bins(self, bins: usize) -> Result<()> {
        for index in [self.j, self.k] {
            if index >= bins {
                return Err(Error::IndexOutOfRange { index, len: bins });
            }
        }
        Ok(())
    }
}

/// `{entry - z·e_j + z·e_k : 0 <= z <= q}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TrailRepr", into = "TrailRepr")]
pub struct Trail {
    entry: Histogram,
    direction: Direction,
    length: u32,
}

#[derive(Serialize, Deserialize)]
struct TrailRepr {
    entry: Histogram,
    j: usize,
    k: usize,
    q: u32,
}

impl TryFrom<TrailRepr> for Trail {
    type Error = Error;
    fn try_from(r: TrailRepr) -> Result<Self> {
        Trail::new(r.entry, Direction::new(r.j, r.k)?, r.q)
    }
}

impl From<Trail> for TrailRepr {
    fn from(t: Trail) -> Self {
        TrailRepr {
            entry: t.entry,
            j: t.direction.j,
            k: t.direction.k,
            q: t.length,
        }
    }
}

impl Trail {
    pub fn new(entry: Histogram, direction: Direction, length: u32) -> Result<Self> {
        direction.check_bins(entry.bins())?;
        if entry.get(direction.j) < length {
            return Err(Error::InvalidTrail(format!(
                "entry {entry} has only {} rows in bin {} but length is {length}",
                entry.get(direction.j),
                direction.j
            )));
        }
        Ok(Trail {
            entry,
            direction,
            length,
        })
    }

    pub fn entry(&self) -> &Histogram {
        &self.entry
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    /// `entry - q·e_j + q·e_k`.
    pub fn exit(&self) -> Histogram {
        self.point(self.length)
    }

    fn point(&self, z: u32) -> Histogram {
        let mut counts = self.entry.counts().to_vec();
        counts[self.direction.j] -= z;
        counts[self.direction.k] += z;
        Histogram::new(counts).expect("same bin count as entry")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trail serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidTrail(e.to_string()))
    }
}

/// The `q + 1` histograms of the trail, from entry to exit.
pub fn trail_points(trail: &Trail) -> Vec<Histogram> {
    (0..=trail.length).map(|z| trail.point(z)).collect()
}

/// Splits `set` into disjoint maximal `(j, k)`-trails.
///
/// Histograms agreeing on every bin other than `j` and `k` lie on a common
/// line; within a line, maximal runs of consecutive `t_j` values are trails
/// entered at their largest `t_j`. Output is sorted by entry.
pub fn partition_into_trails(set: &BTreeSet<Histogram>, d: Direction) -> Result<Vec<Trail>> {
    let Some(first) = set.iter().next() else {
        return Ok(Vec::new());
    };
    let (bins, n) = (first.bins(), first.n());
    d.check_bins(bins)?;
    if set.iter().any(|t| t.bins() != bins || t.n() != n) {
        return Err(Error::InvalidHistogram(
            "all histograms must share bin count and total".into(),
        ));
    }

    let mut lines: BTreeMap<Vec<u32>, Vec<u32>> = BTreeMap::new();
    for t in set {
        let key: Vec<u32> = t
            .counts()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != d.j && i != d.k)
            .map(|(_, &c)| c)
            .collect();
        lines.entry(key).or_default().push(t.get(d.j));
    }

    let mut trails = Vec::new();
    for (key, mut tj) in lines {
        tj.sort_unstable_by(|a, b| b.cmp(a));
        let rest: u32 = key.iter().sum();
        let pair_total = n - rest;
        let build = |top: u32, bottom: u32| -> Result<Trail> {
            let mut counts = Vec::with_capacity(bins);
            let mut others = key.iter();
            for i in 0..bins {
                if i == d.j {
                    counts.push(top);
                } else if i == d.k {
                    counts.push(pair_total - top);
                } else {
                    counts.push(*others.next().unwrap());
                }
            }
            Trail::new(Histogram::new(counts)?, d, top - bottom)
        };
        let mut run_start = tj[0];
        let mut prev = tj[0];
        for &v in &tj[1..] {
            if v + 1 != prev {
                trails.push(build(run_start, prev)?);
                run_start = v;
            }
            prev = v;
        }
        trails.push(build(run_start, prev)?);
    }
    trails.sort_by(|a, b| a.entry.cmp(&b.entry));
    Ok(trails)
}

/// Both sides of the trail identity for direction `(j, k)`:
///
/// * lhs = `Pr(Hist ∈ T | X_1 = j) - Pr(Hist ∈ T | X_1 = k)`, summed point by point;
/// * rhs = `Pr(Hist = Ext(T) | X_1 = j) - Pr(Hist = Ent(T) | X_1 = k)`.
pub fn trail_theorem_sides(trail: &Trail, pi: &VoteDistribution) -> Result<(Rational, Rational)> {
    let Direction { j, k } = trail.direction;
    if trail.entry.bins() != pi.bins() {
        return Err(Error::DimensionMismatch {
            expected: pi.bins(),
            actual: trail.entry.bins(),
        });
    }
    let mut lhs = Rational::default();
    for t in trail_points(trail) {
        lhs += cond_hist_prob(&t, j, pi)? - cond_hist_prob(&t, k, pi)?;
    }
    let rhs = cond_hist_prob(&trail.exit(), j, pi)? - cond_hist_prob(&trail.entry, k, pi)?;
    Ok((lhs, rhs))
}
