//! Conditional output distributions by enumerating histograms of the free rows.
//!
//! Conditioning on one row being `x`, the histogram is `u + e_x` where `u`
//! ranges over histograms of the other `n - 1` rows. With integer weights
//! `a_i = p_i·D`, `Pr(u) = W(u) / D^(n-1)` where
//! `W(u) = (n-1)!/prod u_i! · prod a_i^u_i` is an integer. All masses are
//! accumulated as such integers over the shared denominator.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, ToPrimitive, Zero};
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::mechanism::{Evaluator, Label, Mechanism};
use crate::prob::{FactorialTable, VoteDistribution};
use crate::rational::Rational;

pub(crate) trait Weight: Clone + Send + Sync {
    fn zero() -> Self;
    fn from_big(v: &BigUint) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn add_assign(&mut self, other: &Self);
    fn is_zero(&self) -> bool;
}

impl Weight for u128 {
    fn zero() -> Self {
        0
    }

    fn from_big(v: &BigUint) -> Self {
        v.to_u128().expect("weight fits in u128")
    }

    fn mul(&self, other: &Self) -> Self {
        self * other
    }

    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }

    fn is_zero(&self) -> bool {
        *self == 0
    }
}

impl Weight for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }

    fn from_big(v: &BigUint) -> Self {
        v.clone()
    }

    fn mul(&self, other: &Self) -> Self {
        self * other
    }

    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Label storage, indexed by first-seen id.
enum Interner {
    Dense {
        lo: Vec<i64>,
        radix: Vec<u64>,
        slots: Vec<u32>,
        keys: Vec<Label>,
    },
    Packed {
        lo: Vec<i64>,
        radix: Vec<u128>,
        map: FxHashMap<u128, u32>,
        keys: Vec<u128>,
    },
    Generic {
        map: FxHashMap<Label, u32>,
    },
}

const DENSE_LIMIT: u128 = 1 << 22;

impl Interner {
    fn new(bounds: Option<Vec<(i64, i64)>>) -> Self {
        let Some(bounds) = bounds else {
            return Interner::Generic {
                map: FxHashMap::default(),
            };
        };
        let mut total: Option<u128> = Some(1);
        for &(lo, hi) in &bounds {
            total = total.and_then(|t| t.checked_mul((hi - lo + 1) as u128));
        }
        let lo: Vec<i64> = bounds.iter().map(|b| b.0).collect();
        match total {
            Some(t) if t <= DENSE_LIMIT => Interner::Dense {
                lo,
                radix: bounds.iter().map(|b| (b.1 - b.0 + 1) as u64).collect(),
                slots: vec![u32::MAX; t as usize],
                keys: Vec::new(),
            },
            Some(_) => Interner::Packed {
                lo,
                radix: bounds.iter().map(|b| (b.1 - b.0 + 1) as u128).collect(),
                map: FxHashMap::default(),
                keys: Vec::new(),
            },
            None => Interner::Generic {
                map: FxHashMap::default(),
            },
        }
    }

    /// Returns the id of `label` and whether it is new.
    #[inline]
    fn intern(&mut self, label: &[i64]) -> (u32, bool) {
        match self {
            Interner::Dense {
                lo,
                radix,
                slots,
                keys,
            } => {
                let mut code = 0u64;
                for ((v, l), r) in label.iter().zip(lo.iter()).zip(radix.iter()) {
                    code = code * r + (v - l) as u64;
                }
                let slot = &mut slots[code as usize];
                if *slot == u32::MAX {
                    *slot = keys.len() as u32;
                    keys.push(Label::from_slice(label));
                    (*slot, true)
                } else {
                    (*slot, false)
                }
            }
            Interner::Packed {
                lo,
                radix,
                map,
                keys,
            } => {
                let mut code = 0u128;
                for ((v, l), r) in label.iter().zip(lo.iter()).zip(radix.iter()) {
                    code = code * r + (v - l) as u128;
                }
                let next = keys.len() as u32;
                let id = *map.entry(code).or_insert(next);
                if id == next {
                    keys.push(code);
                }
                (id, id == next)
            }
            Interner::Generic { map } => {
                let next = map.len() as u32;
                if let Some(&id) = map.get(label) {
                    return (id, false);
                }
                map.insert(Label::from_slice(label), next);
                (next, true)
            }
        }
    }

    fn into_labels(self) -> Vec<Label> {
        match self {
            Interner::Dense { keys, .. } => keys,
            Interner::Packed {
                lo, radix, keys, ..
            } => keys
                .into_iter()
                .map(|mut code| {
                    let mut out = vec![0i64; lo.len()];
                    for i in (0..lo.len()).rev() {
                        out[i] = (code % radix[i]) as i64 + lo[i];
                        code /= radix[i];
                    }
                    Label::from_slice(&out)
                })
                .collect(),
            Interner::Generic { map } => {
                let mut pairs: Vec<(Label, u32)> = map.into_iter().collect();
                pairs.sort_unstable_by_key(|p| p.1);
                pairs.into_iter().map(|p| p.0).collect()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Masses {
    Small(Vec<u128>),
    Big(Vec<BigUint>),
}

/// `Pr(M(X) = label | X_1 = x)` for every label and every supported `x`,
/// stored as integer masses over the common denominator `total`.
#[derive(Clone, Debug)]
pub struct ConditionalTable {
    n: u32,
    bins: usize,
    support: Vec<usize>,
    total: BigUint,
    labels: Vec<Label>,
    pub(crate) masses: Masses,
}

impl ConditionalTable {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Bins with positive probability, in increasing order.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Common denominator `D^(n-1)` of all masses.
    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub(crate) fn support_slot(&self, x: usize) -> Result<usize> {
        self.support
            .iter()
            .position(|&s| s == x)
            .ok_or_else(|| Error::InvalidParameter(format!("value {x} has zero probability")))
    }

    /// Integer mass of label `id` conditioned on support slot `slot`.
    pub(crate) fn mass_big(&self, id: usize, slot: usize) -> BigUint {
        let s = self.support.len();
        match &self.masses {
            Masses::Small(v) => BigUint::from(v[id * s + slot]),
            Masses::Big(v) => v[id * s + slot].clone(),
        }
    }

    /// Exact conditional distribution given one row equal to `x`.
    pub fn distribution(&self, x: usize) -> Result<BTreeMap<Label, Rational>> {
        let slot = self.support_slot(x)?;
        let denom = BigInt::from(self.total.clone());
        Ok(self
            .labels
            .iter()
            .enumerate()
            .map(|(id, l)| {
                let mass = BigInt::from(self.mass_big(id, slot));
                (l.clone(), Rational::new(mass, denom.clone()))
            })
            .collect())
    }
}

struct Sweep<'a, W: Weight> {
    weights: Vec<W>,
    // binom[r][k] = C(r, k)
    binom: Vec<Vec<W>>,
    // powers[i][k] = a_i^k
    powers: Vec<Vec<W>>,
    support: Vec<usize>,
    evaluators: Vec<Box<dyn Evaluator + 'a>>,
    interners: Vec<Interner>,
    masses: Vec<Vec<W>>,
    u: Vec<u32>,
    buf: Vec<i64>,
}

impl<W: Weight> Sweep<'_, W> {
    fn run(&mut self, bin: usize, remaining: u32, weight: W) -> Result<()> {
        let last = self.u.len() - 1;
        if bin == last {
            if remaining > 0 && self.weights[bin].is_zero() {
                return Ok(());
            }
            let w = weight.mul(&self.powers[bin][remaining as usize]);
            self.u[bin] = remaining;
            return self.leaf(&w);
        }
        if self.weights[bin].is_zero() {
            self.u[bin] = 0;
            return self.run(bin + 1, remaining, weight);
        }
        for k in 0..=remaining {
            let factor =
                self.binom[remaining as usize][k as usize].mul(&self.powers[bin][k as usize]);
            self.u[bin] = k;
            self.run(bin + 1, remaining - k, weight.mul(&factor))?;
        }
        Ok(())
    }

    fn leaf(&mut self, w: &W) -> Result<()> {
        let s = self.support.len();
        for m in 0..self.evaluators.len() {
            self.evaluators[m].begin(&self.u);
            for (slot, &x) in self.support.iter().enumerate() {
                self.evaluators[m].eval(Some(x), &mut self.buf)?;
                let (id, new) = self.interners[m].intern(&self.buf);
                let masses = &mut self.masses[m];
                if new {
                    masses.resize(masses.len() + s, W::zero());
                }
                masses[id as usize * s + slot].add_assign(w);
            }
        }
        Ok(())
    }
}

fn sweep_with<W: Weight>(
    mechanisms: &[&Mechanism],
    pi: &VoteDistribution,
    n: u32,
    weights: &[BigUint],
) -> Result<Vec<(Vec<Label>, Vec<W>)>> {
    let free = n - 1;
    let table = FactorialTable::new(free);
    let binom = (0..=free)
        .map(|r| {
            (0..=r)
                .map(|k| W::from_big(table.binomial_ref(r, k)))
                .collect()
        })
        .collect();
    let powers = weights
        .iter()
        .map(|a| {
            let mut row = Vec::with_capacity(free as usize + 1);
            let mut acc = BigUint::one();
            for _ in 0..=free {
                row.push(W::from_big(&acc));
                acc *= a;
            }
            row
        })
        .collect();
    let mut sweep = Sweep::<W> {
        weights: weights.iter().map(W::from_big).collect(),
        binom,
        powers,
        support: pi.support(),
        evaluators: mechanisms.iter().map(|m| m.evaluator()).collect(),
        interners: mechanisms
            .iter()
            .map(|m| Interner::new(m.label_bounds(n, pi.bins())))
            .collect(),
        masses: vec![Vec::new(); mechanisms.len()],
        u: vec![0; pi.bins()],
        buf: Vec::new(),
    };
    sweep.run(0, free, W::from_big(&BigUint::one()))?;
    let Sweep {
        interners, masses, ..
    } = sweep;
    Ok(interners
        .into_iter()
        .map(Interner::into_labels)
        .zip(masses)
        .collect())
}

/// Conditional output tables of several mechanisms from one enumeration.
pub fn conditional_tables(
    mechanisms: &[&Mechanism],
    pi: &VoteDistribution,
    n: u32,
) -> Result<Vec<ConditionalTable>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1 rows".into()));
    }
    for m in mechanisms {
        m.check_bins(pi.bins())?;
    }
    let (d, weights) = pi.integer_weights();
    let total: BigUint = Pow::pow(&d, n - 1);
    let support = pi.support();
    let bins = pi.bins();
    let build = |labels: Vec<Label>, masses: Masses| ConditionalTable {
        n,
        bins,
        support: support.clone(),
        total: total.clone(),
        labels,
        masses,
    };
    if total.bits() < 127 {
        let raw = sweep_with::<u128>(mechanisms, pi, n, &weights)?;
        Ok(raw
            .into_iter()
            .map(|(labels, m)| build(labels, Masses::Small(m)))
            .collect())
    } else {
        let raw = sweep_with::<BigUint>(mechanisms, pi, n, &weights)?;
        Ok(raw
            .into_iter()
            .map(|(labels, m)| build(labels, Masses::Big(m)))
            .collect())
    }
}

pub fn conditional_table(
    mechanism: &Mechanism,
    pi: &VoteDistribution,
    n: u32,
) -> Result<ConditionalTable> {
    Ok(conditional_tables(&[mechanism], pi, n)?.remove(0))
}
