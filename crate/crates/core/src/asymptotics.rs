//! Closed forms for δ, their leading-order approximations, hyperplane
//! distance bounds, and the `δ = 1/sqrt(a·n + b)` fit.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{binomial_pmf_with, FactorialTable, VoteDistribution};
use crate::rational::{self, Rational};
use crate::rules::canonical_orders;

fn check_open_unit(p: &Rational, what: &str) -> Result<()> {
    if !p.is_positive() || p >= &Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "{what} must lie strictly between 0 and 1, got {}",
            rational::format_rational(p)
        )));
    }
    Ok(())
}

fn floor_u32(r: &Rational) -> u32 {
    rational::floor(r).to_u32().expect("small floor")
}

fn ceil_u32(r: &Rational) -> u32 {
    rational::ceil(r).to_u32().expect("small ceil")
}

/// δ at ratio 1 of releasing the histogram of `n` rows over two bins with
/// `Pr(bin 0) = p`: `Pr(Bin(n-1, p) = floor(p·n))`.
pub fn hist2_delta_closed_form(p: &Rational, n: u32) -> Result<Rational> {
    check_open_unit(p, "p")?;
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1".into()));
    }
    let table = FactorialTable::new(n);
    Ok(hist2_with(&table, p, n))
}

fn hist2_with(table: &FactorialTable, p: &Rational, n: u32) -> Rational {
    // largest i with i <= p·n; the maximizing set is {t_0 > p·n}
    let k = floor_u32(&(p * Rational::from_integer(BigInt::from(n))));
    binomial_pmf_with(table, k, n - 1, p)
}

/// δ at ratio 1 of the threshold rule that outputs `x1` iff at least
/// `alpha·n` of `n` rows are `x1`, rows being `x1` with probability `p`:
/// `Pr(Bin(n-1, p) = ceil(alpha·n) - 1)`, or 0 when the threshold is 0.
pub fn majority_delta_exact(alpha: &Rational, p: &Rational, n: u32) -> Result<Rational> {
    if alpha.is_negative() || alpha > &Rational::one() {
        return Err(Error::InvalidParameter("alpha must lie in [0, 1]".into()));
    }
    check_open_unit(p, "p")?;
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1".into()));
    }
    let threshold = ceil_u32(&(alpha * Rational::from_integer(BigInt::from(n))));
    if threshold == 0 {
        return Ok(Rational::zero());
    }
    let table = FactorialTable::new(n);
    Ok(binomial_pmf_with(&table, threshold - 1, n - 1, p))
}

/// Per-row decay factor `(p/alpha)^alpha ((1-p)/(1-alpha))^(1-alpha)` of the
/// threshold rule's δ. Equals 1 exactly when `alpha = p`.
pub fn majority_rate(alpha: f64, p: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "p must lie strictly between 0 and 1, got {p}"
        )));
    }
    let log = alpha * (p / alpha).ln() + (1.0 - alpha) * ((1.0 - p) / (1.0 - alpha)).ln();
    Ok(log.exp())
}

/// δ at ratio 1 for the pair `(j, k)` of releasing a histogram over any
/// number of bins, as a mixture of two-bin values over the number `s` of
/// rows (including the conditioned one) falling in `{j, k}`.
pub fn histc_delta_mixture(pi: &VoteDistribution, n: u32, j: usize, k: usize) -> Result<Rational> {
    let c = pi.bins();
    for index in [j, k] {
        if index >= c {
            return Err(Error::IndexOutOfRange { index, len: c });
        }
    }
    if j == k {
        return Err(Error::InvalidParameter(
            "pair needs two distinct bins".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1".into()));
    }
    if !pi.p(j).is_positive() {
        return Err(Error::InvalidParameter(format!(
            "bin {j} has zero probability"
        )));
    }
    let q = pi.p(j) + pi.p(k);
    let inner = pi.p(j) / &q;
    let table = FactorialTable::new(n);
    let mut delta = Rational::zero();
    for s in 1..=n {
        let weight = binomial_pmf_with(&table, s - 1, n - 1, &q);
        if weight.is_zero() {
            continue;
        }
        let part = if inner.is_one() {
            Rational::one()
        } else {
            hist2_with(&table, &inner, s)
        };
        delta += weight * part;
    }
    Ok(delta)
}

/// Leading term `1/sqrt(2π p(1-p) n)` of the two-bin histogram δ.
pub fn hist2_leading_term(p: f64, n: u32) -> f64 {
    1.0 / (2.0 * PI * p * (1.0 - p) * n as f64).sqrt()
}

/// Leading term `rate^n / sqrt(2π alpha(1-alpha) n)` of the threshold rule's δ.
pub fn majority_leading_term(alpha: f64, p: f64, n: u32) -> Result<f64> {
    let rate = majority_rate(alpha, p)?;
    Ok(rate.powi(n as i32) / (2.0 * PI * alpha * (1.0 - alpha) * n as f64).sqrt())
}

/// Least-squares fit of `δ^-2 = a·n + b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    /// Mean square error between the δ samples and `1/sqrt(a·n + b)`.
    pub mse: f64,
    /// Mean square residual of the linear fit itself, in `δ^-2` units.
    pub mse_inverse_square: f64,
    pub n_min: u32,
    pub n_max: u32,
}

impl FitResult {
    pub fn predict(&self, n: u32) -> f64 {
        1.0 / (self.a * n as f64 + self.b).sqrt()
    }

    /// `δ(n) = 1/sqrt(a·n + b)` with four-significant-digit coefficients.
    pub fn formula(&self) -> String {
        let sign = if self.b < 0.0 { '-' } else { '+' };
        format!("δ(n) = 1/sqrt({:.4}·n {sign} {:.4})", self.a, self.b.abs())
    }
}

pub fn fit_inverse_sqrt(samples: &[(u32, f64)]) -> Result<FitResult> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    if let Some(&(n, d)) = samples.iter().find(|s| s.1.is_nan() || s.1 <= 0.0 || s.1.is_infinite()) {
        return Err(Error::InvalidParameter(format!(
            "δ must be positive, got {d} at n = {n}"
        )));
    }
    let k = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0 as f64).collect();
    let ys: Vec<f64> = samples.iter().map(|s| 1.0 / (s.1 * s.1)).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "need at least two distinct n".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let mut fit = FitResult {
        a,
        b,
        mse: 0.0,
        mse_inverse_square: 0.0,
        n_min: samples.iter().map(|s| s.0).min().unwrap(),
        n_max: samples.iter().map(|s| s.0).max().unwrap(),
    };
    fit.mse = samples
        .iter()
        .map(|&(n, d)| (d - fit.predict(n)).powi(2))
        .sum::<f64>()
        / k;
    fit.mse_inverse_square = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (a * x + b)).powi(2))
        .sum::<f64>()
        / k;
    Ok(fit)
}

/// Decision boundaries of a positional rule over the `m!` vote types: for
/// each pair of candidates `k1 < k2`, the vector of per-vote score
/// differences `s(V, k1) - s(V, k2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperplaneSet {
    m: usize,
    pairs: Vec<(usize, usize)>,
    planes: Vec<Vec<Rational>>,
}

impl HyperplaneSet {
    pub fn candidates(&self) -> usize {
        self.m
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn planes(&self) -> &[Vec<Rational>] {
        &self.planes
    }
}

pub fn scoring_hyperplanes(s: &[Rational]) -> Result<HyperplaneSet> {
    let m = s.len();
    if s.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidRule(
            "scoring vector must be non-increasing".into(),
        ));
    }
    let orders = canonical_orders(m)?;
    let mut pairs = Vec::new();
    let mut planes = Vec::new();
    for k1 in 0..m {
        for k2 in k1 + 1..m {
            let h: Vec<Rational> = orders
                .iter()
                .map(|o| &s[o.position(k1)] - &s[o.position(k2)])
                .collect();
            debug_assert!(h.iter().sum::<Rational>().is_zero());
            pairs.push((k1, k2));
            planes.push(h);
        }
    }
    Ok(HyperplaneSet { m, pairs, planes })
}

/// Signed distance `π·h / |h|`.
pub fn dist_to_hyperplane(pi: &VoteDistribution, h: &[Rational]) -> Result<f64> {
    if pi.bins() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            actual: pi.bins(),
        });
    }
    let norm_sq: Rational = h.iter().map(|v| v * v).sum();
    if norm_sq.is_zero() {
        return Err(Error::InvalidParameter("zero hyperplane normal".into()));
    }
    let dot: Rational = pi.probs().iter().zip(h).map(|(p, v)| p * v).sum();
    Ok(rational::to_f64(&dot) / rational::to_f64(&norm_sq).sqrt())
}

/// `min{exp(-d²·n / (3·m!·max π)), sqrt(1/n)}` with `d` the smallest
/// absolute distance from `π` to a hyperplane of `set`.
pub fn gsr_exponential_bound(pi: &VoteDistribution, set: &HyperplaneSet, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1".into()));
    }
    let mut min_dist = f64::INFINITY;
    for h in &set.planes {
        min_dist = min_dist.min(dist_to_hyperplane(pi, h)?.abs());
    }
    let factorial: f64 = (1..=set.m).map(|v| v as f64).product();
    let p_max = pi.probs().iter().max().map(rational::to_f64).unwrap_or(1.0);
    let exponential = (-min_dist * min_dist / (3.0 * factorial * p_max) * n as f64).exp();
    Ok(exponential.min((1.0 / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddp::{delta_exact, delta_exact_pair};
    use crate::mechanism::Mechanism;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn two(p: &Rational) -> VoteDistribution {
        VoteDistribution::new(vec![p.clone(), Rational::one() - p]).unwrap()
    }

    #[test]
    fn hist2_examples() {
        assert_eq!(
            hist2_delta_closed_form(&ratio(1, 2), 3).unwrap(),
            ratio(1, 2)
        );
        assert_eq!(
            hist2_delta_closed_form(&ratio(1, 2), 5).unwrap(),
            ratio(3, 8)
        );
        // p·n integral: boundary bin is p·n itself
        assert_eq!(
            hist2_delta_closed_form(&ratio(1, 2), 4).unwrap(),
            ratio(3, 8)
        );
        assert!(hist2_delta_closed_form(&ratio(1, 1), 4).is_err());
    }

    #[test]
    fn majority_examples() {
        let half = ratio(1, 2);
        assert_eq!(majority_delta_exact(&half, &half, 3).unwrap(), ratio(1, 2));
        for n in 1..8 {
            assert_eq!(
                majority_delta_exact(&ratio(1, 1), &half, n).unwrap(),
                Rational::new(BigInt::one(), BigInt::from(2).pow(n - 1))
            );
        }
        assert!(majority_delta_exact(&ratio(0, 1), &half, 5)
            .unwrap()
            .is_zero());
        let m0 = Mechanism::alpha_majority(ratio(0, 1)).unwrap();
        assert!(delta_exact(&m0, &two(&half), 5, &Rational::one())
            .unwrap()
            .delta
            .is_zero());
    }

    #[test]
    fn majority_rate_values() {
        assert!((majority_rate(0.3, 0.3).unwrap() - 1.0).abs() < 1e-15);
        let r = majority_rate(0.6, 0.5).unwrap();
        assert!((r.ln() + 0.020136).abs() < 1e-6, "{}", r.ln());
        assert!((r - 0.98007).abs() < 1e-5);
        assert!(majority_rate(0.0, 0.5).is_err());
        assert!(majority_rate(1.0, 0.5).is_err());
    }

    #[test]
    fn mixture_examples() {
        let pi = VoteDistribution::uniform(3).unwrap();
        let one = Rational::one();
        let exact = delta_exact_pair(&Mechanism::Histogram, &pi, 4, &one, 0, 1).unwrap();
        assert_eq!(histc_delta_mixture(&pi, 4, 0, 1).unwrap(), exact.delta);

        let half = ratio(1, 2);
        assert_eq!(
            histc_delta_mixture(&two(&half), 7, 0, 1).unwrap(),
            hist2_delta_closed_form(&half, 7).unwrap()
        );
        let skew = VoteDistribution::new(vec![ratio(1, 2), ratio(0, 1), ratio(1, 2)]).unwrap();
        assert_eq!(
            histc_delta_mixture(&skew, 6, 0, 1).unwrap(),
            Rational::one()
        );
    }

    #[test]
    fn fit_recovers_synthetic() {
        let samples: Vec<(u32, f64)> = (1..=20)
            .map(|n| (n, 1.0 / (2.0 * n as f64 + 3.0).sqrt()))
            .collect();
        let fit = fit_inverse_sqrt(&samples).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-9);
        assert!((fit.b - 3.0).abs() < 1e-9);
        assert!(fit.mse < 1e-12);
        assert_eq!((fit.n_min, fit.n_max), (1, 20));
        assert!(fit_inverse_sqrt(&[(1, 0.5), (2, 0.0)]).is_err());
        assert!(fit_inverse_sqrt(&[(1, 0.5)]).is_err());
    }

    #[test]
    fn hyperplanes() {
        let pl = scoring_hyperplanes(&[ratio(1, 1), ratio(0, 1)]).unwrap();
        assert_eq!(pl.planes(), &[vec![ratio(1, 1), ratio(-1, 1)]]);

        let borda = scoring_hyperplanes(&[ratio(2, 1), ratio(1, 1), ratio(0, 1)]).unwrap();
        assert_eq!(borda.planes().len(), 3);
        for h in borda.planes() {
            assert!(h.iter().all(|v| v.abs() <= ratio(2, 1) && v.is_integer()));
            assert!(h.iter().sum::<Rational>().is_zero());
        }
        let uniform = VoteDistribution::uniform(6).unwrap();
        for h in borda.planes() {
            assert_eq!(dist_to_hyperplane(&uniform, h).unwrap(), 0.0);
        }
        let bound = gsr_exponential_bound(&uniform, &borda, 100).unwrap();
        assert!((bound - 0.1).abs() < 1e-12);

        let skew = VoteDistribution::new(vec![ratio(3, 5), ratio(2, 5)]).unwrap();
        let d = dist_to_hyperplane(&skew, &pl.planes()[0]).unwrap();
        assert!((d - 0.2 / 2f64.sqrt()).abs() < 1e-12);
        let b = gsr_exponential_bound(&skew, &pl, 10_000).unwrap();
        assert!(b < 0.01);

        let point = VoteDistribution::new(vec![
            ratio(1, 1),
            ratio(0, 1),
            ratio(0, 1),
            ratio(0, 1),
            ratio(0, 1),
            ratio(0, 1),
        ]);
        assert!(point.is_err());
        assert!(dist_to_hyperplane(&uniform, &vec![Rational::zero(); 6]).is_err());
    }

    fn arb_unit() -> impl Strategy<Value = Rational> {
        (2i64..40).prop_flat_map(|d| (1..d).prop_map(move |k| ratio(k, d)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn hist2_matches_engine(p in arb_unit(), n in 1u32..=40) {
            let exact = delta_exact(&Mechanism::Histogram, &two(&p), n, &Rational::one()).unwrap();
            prop_assert_eq!(hist2_delta_closed_form(&p, n).unwrap(), exact.delta);
        }

        #[test]
        fn majority_matches_engine(alpha in (0i64..=12).prop_map(|k| ratio(k, 12)), p in arb_unit(), n in 1u32..=40) {
            let m = Mechanism::alpha_majority(alpha.clone()).unwrap();
            let exact = delta_exact(&m, &two(&p), n, &Rational::one()).unwrap();
            prop_assert_eq!(majority_delta_exact(&alpha, &p, n).unwrap(), exact.delta);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn mixture_matches_engine(
            weights in proptest::collection::vec(1i64..6, 3..=4),
            n in 1u32..=12,
            j in 0usize..4,
            k in 0usize..4,
        ) {
            let c = weights.len();
            let (j, k) = (j % c, k % c);
            prop_assume!(j != k);
            let total: i64 = weights.iter().sum();
            let pi = VoteDistribution::new(weights.iter().map(|&w| ratio(w, total)).collect()).unwrap();
            let exact = delta_exact_pair(&Mechanism::Histogram, &pi, n, &Rational::one(), j, k).unwrap();
            prop_assert_eq!(histc_delta_mixture(&pi, n, j, k).unwrap(), exact.delta);
        }
    }
}
