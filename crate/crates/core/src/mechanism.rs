//! Deterministic histogram-respecting mechanisms and their output labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::prob::enumerate_histograms;
use crate::rational::{self, Rational};
use crate::rules::{alpha_majority, GsrRule};

/// An output of a mechanism: a short vector of integers.
///
/// Winners and majority outcomes are single entries, histograms and
/// (scaled) score vectors are longer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub SmallVec<[i64; 4]>);

impl Label {
    pub fn scalar(v: i64) -> Self {
        Label(SmallVec::from_slice(&[v]))
    }

    pub fn from_slice(v: &[i64]) -> Self {
        Label(SmallVec::from_slice(v))
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }
}

impl std::borrow::Borrow<[i64]> for Label {
    fn borrow(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A deterministic map from histograms to labels.
#[derive(Clone, Debug)]
pub enum Mechanism {
    /// Releases the histogram itself.
    Histogram,
    /// Releases the winner of a voting rule.
    Winner(Arc<GsrRule>),
    /// Releases the rule's score vector `f(P)` (scaled to integers).
    Score(Arc<GsrRule>),
    /// Two-bin threshold rule, see [`alpha_majority`]. Label 0 is `x1`.
    AlphaMajority(Rational),
    /// Always outputs the same label.
    Constant,
    /// Explicit table from histogram counts to labels.
    Table {
        name: String,
        table: Arc<BTreeMap<Vec<u32>, Label>>,
    },
    /// `map ∘ inner`.
    PostProcess {
        inner: Box<Mechanism>,
        map: Arc<BTreeMap<Label, Label>>,
    },
}

impl Mechanism {
    pub fn winner(rule: GsrRule) -> Self {
        Mechanism::Winner(Arc::new(rule))
    }

    pub fn score(rule: GsrRule) -> Self {
        Mechanism::Score(Arc::new(rule))
    }

    pub fn alpha_majority(alpha: Rational) -> Result<Self> {
        if alpha.is_negative() || alpha > Rational::one() {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1]".into()));
        }
        Ok(Mechanism::AlphaMajority(alpha))
    }

    /// Rule name as printed in result rows.
    pub fn rule_name(&self) -> String {
        match self {
            Mechanism::Histogram => "histogram".into(),
            Mechanism::Winner(r) | Mechanism::Score(r) => r.name().into(),
            Mechanism::AlphaMajority(a) => format!("majority:{}", rational::format_rational(a)),
            Mechanism::Constant => "constant".into(),
            Mechanism::Table { name, .. } => name.clone(),
            Mechanism::PostProcess { inner, .. } => format!("post({})", inner.rule_name()),
        }
    }

    /// Observable as printed in result rows.
    pub fn observable(&self) -> &'static str {
        match self {
            Mechanism::Histogram => "histogram",
            Mechanism::Winner(_) | Mechanism::AlphaMajority(_) => "winner",
            Mechanism::Score(_) => "score",
            Mechanism::Constant => "constant",
            Mechanism::Table { .. } => "table",
            Mechanism::PostProcess { .. } => "postprocess",
        }
    }

    /// Number of bins the mechanism is defined on, if fixed.
    pub fn required_bins(&self) -> Option<usize> {
        match self {
            Mechanism::Winner(r) | Mechanism::Score(r) => Some(r.bins()),
            Mechanism::AlphaMajority(_) => Some(2),
            Mechanism::Table { table, .. } => table.keys().next().map(|k| k.len()),
            Mechanism::PostProcess { inner, .. } => inner.required_bins(),
            Mechanism::Histogram | Mechanism::Constant => None,
        }
    }

    pub(crate) fn check_bins(&self, bins: usize) -> Result<()> {
        match self.required_bins() {
            Some(expected) if expected != bins => Err(Error::DimensionMismatch {
                expected,
                actual: bins,
            }),
            _ => Ok(()),
        }
    }

    /// Output on histogram `t`.
    pub fn eval(&self, t: &[u32]) -> Result<Label> {
        self.check_bins(t.len())?;
        let mut ev = self.evaluator();
        ev.begin(t);
        let mut out = Vec::new();
        ev.eval(None, &mut out)?;
        Ok(Label::from_slice(&out))
    }

    /// Human-readable form of a label.
    pub fn describe(&self, label: &Label) -> String {
        match self {
            Mechanism::Score(rule) => {
                let parts: Vec<String> = rule
                    .unscale(label.as_slice())
                    .iter()
                    .map(rational::format_rational)
                    .collect();
                format!("({})", parts.join(","))
            }
            Mechanism::AlphaMajority(_) => match label.as_slice() {
                [0] => "x1".into(),
                [1] => "x2".into(),
                _ => label.to_string(),
            },
            _ => label.to_string(),
        }
    }

    /// All labels produced on histograms of `n` rows over `bins` bins.
    pub fn output_alphabet(&self, n: u32, bins: usize) -> Result<BTreeSet<Label>> {
        self.check_bins(bins)?;
        let mut out = BTreeSet::new();
        for t in enumerate_histograms(n, bins) {
            out.insert(self.eval(t.counts())?);
        }
        Ok(out)
    }

    /// Per-component bounds of the integer labels at size `n`, when known.
    pub(crate) fn label_bounds(&self, n: u32, bins: usize) -> Option<Vec<(i64, i64)>> {
        let n = n as i64;
        match self {
            Mechanism::Histogram => Some(vec![(0, n); bins]),
            Mechanism::Winner(r) => Some(vec![(0, r.candidates() as i64 - 1)]),
            Mechanism::Score(r) => {
                let k = r.dimension();
                let mut bounds = vec![(i64::MAX, i64::MIN); k];
                let mut row = Vec::new();
                for v in 0..r.bins() {
                    let mut e = vec![0u32; r.bins()];
                    e[v] = 1;
                    r.score_scaled(&e, &mut row);
                    for (b, &s) in bounds.iter_mut().zip(&row) {
                        b.0 = b.0.min(s);
                        b.1 = b.1.max(s);
                    }
                }
                Some(
                    bounds
                        .into_iter()
                        .map(|(lo, hi)| (lo.min(0) * n, hi.max(0) * n))
                        .collect(),
                )
            }
            Mechanism::AlphaMajority(_) => Some(vec![(0, 1)]),
            Mechanism::Constant => Some(vec![(0, 0)]),
            Mechanism::Table { .. } | Mechanism::PostProcess { .. } => None,
        }
    }

    pub(crate) fn evaluator(&self) -> Box<dyn Evaluator + '_> {
        match self {
            Mechanism::Histogram => Box::new(HistogramEval { base: Vec::new() }),
            Mechanism::Winner(rule) => Box::new(GsrEval {
                rule,
                winner: true,
                base: Vec::new(),
                row: Vec::new(),
                scratch: Vec::new(),
            }),
            Mechanism::Score(rule) => Box::new(GsrEval {
                rule,
                winner: false,
                base: Vec::new(),
                row: Vec::new(),
                scratch: Vec::new(),
            }),
            Mechanism::AlphaMajority(alpha) => Box::new(MajorityEval {
                alpha,
                base: [0, 0],
            }),
            Mechanism::Constant => Box::new(ConstantEval),
            Mechanism::Table { table, .. } => Box::new(TableEval {
                table,
                base: Vec::new(),
                t: Vec::new(),
            }),
            Mechanism::PostProcess { inner, map } => Box::new(PostEval {
                inner: inner.evaluator(),
                map,
                scratch: Vec::new(),
            }),
        }
    }
}

/// `map ∘ mechanism`, after checking that `map` covers every output the
/// mechanism can produce on `n` rows over `bins` bins.
pub fn postprocess(
    mechanism: &Mechanism,
    map: BTreeMap<Label, Label>,
    n: u32,
    bins: usize,
) -> Result<Mechanism> {
    for label in mechanism.output_alphabet(n, bins)? {
        if !map.contains_key(&label) {
            return Err(Error::PartialMap(mechanism.describe(&label)));
        }
    }
    Ok(Mechanism::PostProcess {
        inner: Box::new(mechanism.clone()),
        map: Arc::new(map),
    })
}

/// Evaluates a mechanism on `u + e_x` for a fixed `u` and several `x`.
pub(crate) trait Evaluator {
    fn begin(&mut self, u: &[u32]);
    /// Writes the label of `u + e_x` (or of `u` itself for `None`).
    fn eval(&mut self, x: Option<usize>, out: &mut Vec<i64>) -> Result<()>;
}

struct HistogramEval {
    base: Vec<i64>,
}

impl Evaluator for HistogramEval {
    fn begin(&mut self, u: &[u32]) {
        self.base.clear();
        self.base.extend(u.iter().map(|&v| v as i64));
    }

    fn eval(&mut self, x: Option<usize>, out: &mut Vec<i64>) -> Result<()> {
        out.clear();
        out.extend_from_slice(&self.base);
        if let Some(x) = x {
            out[x] += 1;
        }
        Ok(())
    }
}

struct GsrEval<'a> {
    rule: &'a GsrRule,
    winner: bool,
    base: Vec<i64>,
    row: Vec<i64>,
    scratch: Vec<u32>,
}

impl Evaluator for GsrEval<'_> {
    fn begin(&mut self, u: &[u32]) {
        self.rule.score_scaled(u, &mut self.base);
    }

    fn eval(&mut self, x: Option<usize>, out: &mut Vec<i64>) -> Result<()> {
        let score: &[i64] = match x {
            None => &self.base,
            Some(x) => {
                self.scratch.clear();
                self.scratch.resize(self.rule.bins(), 0);
                self.scratch[x] = 1;
                self.rule.score_scaled(&self.scratch, &mut self.row);
                for (r, b) in self.row.iter_mut().zip(&self.base) {
                    *r += b;
                }
                &self.row
            }
        };
        out.clear();
        if self.winner {
            out.push(self.rule.winner_from_scaled(score) as i64);
        } else {
            out.extend_from_slice(score);
        }
        Ok(())
    }
}

struct MajorityEval<'a> {
    alpha: &'a Rational,
    base: [u32; 2],
}

impl Evaluator for MajorityEval<'_> {
    fn begin(&mut self, u: &[u32]) {
        self.base = [u[0], u[1]];
    }

    fn eval(&mut self, x: Option<usize>, out: &mut Vec<i64>) -> Result<()> {
        let mut t = self.base;
        if let Some(x) = x {
            t[x] += 1;
        }
        out.clear();
        out.push(alpha_majority(self.alpha, &t)? as i64);
        Ok(())
    }
}

struct ConstantEval;

impl Evaluator for ConstantEval {
    fn begin(&mut self, _u: &[u32]) {}

    fn eval(&mut self, _x: Option<usize>, out: &mut Vec<i64>) -> Result<()> {
        out.clear();
        out.push(0);
        Ok(())
    }
}

struct TableEval<'a> {
    table: &'a BTreeMap<Vec<u32>, Label>,
    base: Vec<u32>,
    t: Vec<u32>,
}

impl Evaluator for TableEval<'_> {
    fn begin(&mut self, u: &[u32]) {
        self.base.clear();
        self.base.extend_from_slice(u);
    }

    fn eval(&mut self, x: Option<usize>, out: &mut Vec<i64>) -> Result<()> {
        self.t.clear();
        self.t.extend_from_slice(&self.base);
        if let Some(x) = x {
            self.t[x] += 1;
        }
        let label = self.table.get(&self.t).ok_or_else(|| {
            Error::PartialMap(format!("table has no entry for histogram {:?}", self.t))
        })?;
        out.clear();
        out.extend_from_slice(label.as_slice());
        Ok(())
    }
}

struct PostEval<'a> {
    inner: Box<dyn Evaluator + 'a>,
    map: &'a BTreeMap<Label, Label>,
    scratch: Vec<i64>,
}

impl Evaluator for PostEval<'_> {
    fn begin(&mut self, u: &[u32]) {
        self.inner.begin(u);
    }

    fn eval(&mut self, x: Option<usize>, out: &mut Vec<i64>) -> Result<()> {
        self.inner.eval(x, &mut self.scratch)?;
        let key = Label::from_slice(&self.scratch);
        let mapped = self
            .map
            .get(&key)
            .ok_or_else(|| Error::PartialMap(key.to_string()))?;
        out.clear();
        out.extend_from_slice(mapped.as_slice());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::rules::{borda, plurality};

    #[test]
    fn eval_matches_rules() {
        let rule = borda(3).unwrap();
        let p = [1, 0, 2, 0, 0, 3];
        let w = Mechanism::winner(rule.clone());
        assert_eq!(
            w.eval(&p).unwrap(),
            Label::scalar(rule.winner(&p).unwrap() as i64)
        );
        let s = Mechanism::score(rule.clone());
        let described = s.describe(&s.eval(&p).unwrap());
        let expected: Vec<String> = rule
            .score(&p)
            .unwrap()
            .iter()
            .map(rational::format_rational)
            .collect();
        assert_eq!(described, format!("({})", expected.join(",")));
        assert!(w.eval(&[1, 2]).is_err());
    }

    #[test]
    fn majority_labels() {
        let m = Mechanism::alpha_majority(ratio(1, 2)).unwrap();
        assert_eq!(m.describe(&m.eval(&[2, 2]).unwrap()), "x1");
        assert_eq!(m.describe(&m.eval(&[1, 3]).unwrap()), "x2");
        assert!(Mechanism::alpha_majority(ratio(3, 2)).is_err());
    }

    #[test]
    fn alphabet_and_postprocess() {
        let m = Mechanism::winner(plurality(2).unwrap());
        let alphabet = m.output_alphabet(3, 2).unwrap();
        assert_eq!(alphabet.len(), 2);

        let partial: BTreeMap<Label, Label> = [(Label::scalar(0), Label::scalar(7))].into();
        assert!(matches!(
            postprocess(&m, partial, 3, 2),
            Err(Error::PartialMap(_))
        ));

        let total: BTreeMap<Label, Label> = alphabet
            .iter()
            .map(|l| (l.clone(), Label::scalar(0)))
            .collect();
        let post = postprocess(&m, total, 3, 2).unwrap();
        assert_eq!(post.output_alphabet(3, 2).unwrap().len(), 1);
    }

    #[test]
    fn histogram_identity() {
        let m = Mechanism::Histogram;
        assert_eq!(m.eval(&[2, 1]).unwrap(), Label::from_slice(&[2, 1]));
        assert_eq!(m.output_alphabet(3, 2).unwrap().len(), 4);
        assert_eq!(Label::from_slice(&[2, 1]).to_string(), "(2,1)");
    }

    #[test]
    fn score_bounds_cover_outputs() {
        let rule = borda(3).unwrap();
        let m = Mechanism::score(rule);
        let bounds = m.label_bounds(4, 6).unwrap();
        for l in m.output_alphabet(4, 6).unwrap() {
            for (v, (lo, hi)) in l.as_slice().iter().zip(&bounds) {
                assert!(lo <= v && v <= hi);
            }
        }
    }
}
