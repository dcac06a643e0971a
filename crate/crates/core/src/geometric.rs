//! Oblivious mechanisms for a count query with outputs `0..=n`, the
//! truncated geometric mechanism, and their exact ε and utility.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Row `i` is the output distribution when the true count is `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMechanismMatrix {
    rows: Vec<Vec<Rational>>,
}

impl FiniteMechanismMatrix {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::DimensionMismatch {
                    expected: size,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| v.is_negative()) {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has a negative entry"
                )));
            }
            let sum: Rational = row.iter().sum();
            if !sum.is_one() {
                return Err(Error::InvalidParameter(format!(
                    "row {i} sums to {}",
                    rational::format_rational(&sum)
                )));
            }
        }
        Ok(FiniteMechanismMatrix { rows })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..=n)
            .map(|i| {
                (0..=n)
                    .map(|r| {
                        if i == r {
                            Rational::one()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        FiniteMechanismMatrix { rows }
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    /// Largest query output `n`.
    pub fn n(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn get(&self, i: usize, r: usize) -> &Rational {
        &self.rows[i][r]
    }
}

impl fmt::Display for FiniteMechanismMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(rational::format_rational).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

fn pow(base: &Rational, e: usize) -> Rational {
    num_traits::pow(base.clone(), e)
}

/// Two-sided geometric noise `(1-α)/(1+α)·α^|z|` added to the count, with
/// everything below 0 moved to 0 and everything above `n` moved to `n`.
pub fn truncated_geometric(alpha: &Rational, n: usize) -> Result<FiniteMechanismMatrix> {
    if !alpha.is_positive() || alpha >= &Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie strictly between 0 and 1, got {}",
            rational::format_rational(alpha)
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1".into()));
    }
    let one = Rational::one();
    let edge = &one / (&one + alpha);
    let inner = (&one - alpha) / (&one + alpha);
    let rows = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|r| {
                    if r == 0 {
                        &edge * pow(alpha, i)
                    } else if r == n {
                        &edge * pow(alpha, n - i)
                    } else {
                        &inner * pow(alpha, i.abs_diff(r))
                    }
                })
                .collect()
        })
        .collect();
    FiniteMechanismMatrix::new(rows)
}

/// Largest likelihood ratio between neighbouring counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DpRatio {
    Finite(Rational),
    /// Some output is possible for one count and impossible for a neighbour.
    Unbounded,
}

impl DpRatio {
    pub fn epsilon(&self) -> f64 {
        match self {
            DpRatio::Finite(r) => rational::ln(r),
            DpRatio::Unbounded => f64::INFINITY,
        }
    }
}

impl fmt::Display for DpRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DpRatio::Finite(r) => f.write_str(&rational::format_rational(r)),
            DpRatio::Unbounded => f.write_str("inf"),
        }
    }
}

/// `max M[i][r] / M[i'][r]` over `|i - i'| = 1` and all outputs `r`; the
/// mechanism is exactly `ln(ratio)`-differentially private.
pub fn exact_dp_ratio(mx: &FiniteMechanismMatrix) -> DpRatio {
    let mut best = Rational::one();
    let rows = mx.rows();
    for i in 0..rows.len().saturating_sub(1) {
        for (a, b) in [(i, i + 1), (i + 1, i)] {
            for (num, den) in rows[a].iter().zip(&rows[b]) {
                if den.is_zero() {
                    if num.is_positive() {
                        return DpRatio::Unbounded;
                    }
                    continue;
                }
                let q = num / den;
                if q > best {
                    best = q;
                }
            }
        }
    }
    DpRatio::Finite(best)
}

/// Expected utility under a uniform prior on the count with loss
/// `1 + γ|i - r|` for every wrong answer.
pub fn utility(mx: &FiniteMechanismMatrix, gamma: &Rational) -> Result<Rational> {
    if gamma.is_negative() {
        return Err(Error::InvalidParameter("gamma must be non-negative".into()));
    }
    let mut loss = Rational::zero();
    for (i, row) in mx.rows().iter().enumerate() {
        for (r, p) in row.iter().enumerate() {
            if r != i {
                let dist = Rational::from_integer(BigInt::from(i.abs_diff(r)));
                loss += p * (Rational::one() + gamma * dist);
            }
        }
    }
    Ok(-loss / Rational::from_integer(BigInt::from(mx.rows().len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn small_matrix() {
        let m = truncated_geometric(&ratio(1, 2), 1).unwrap();
        assert_eq!(
            m.rows(),
            &[
                vec![ratio(2, 3), ratio(1, 3)],
                vec![ratio(1, 3), ratio(2, 3)]
            ]
        );
        assert_eq!(m.to_string(), "2/3 1/3\n1/3 2/3\n");
    }

    #[test]
    fn rows_are_stochastic() {
        for alpha in [ratio(1, 3), ratio(1, 2), ratio(9, 10)] {
            for n in 1..8 {
                let m = truncated_geometric(&alpha, n).unwrap();
                for row in m.rows() {
                    assert!(row.iter().sum::<Rational>().is_one());
                }
            }
        }
        assert!(truncated_geometric(&ratio(1, 1), 3).is_err());
        assert!(truncated_geometric(&ratio(0, 1), 3).is_err());
    }

    #[test]
    fn ratio_is_inverse_alpha() {
        for alpha in [ratio(1, 2), ratio(1, 3), ratio(2, 5)] {
            for n in [2, 5, 10] {
                let m = truncated_geometric(&alpha, n).unwrap();
                assert_eq!(exact_dp_ratio(&m), DpRatio::Finite(alpha.recip()));
            }
        }
    }

    #[test]
    fn degenerate_matrices() {
        assert_eq!(
            exact_dp_ratio(&FiniteMechanismMatrix::identity(3)),
            DpRatio::Unbounded
        );
        let uniform = FiniteMechanismMatrix::new(vec![vec![ratio(1, 3); 3]; 3]).unwrap();
        assert_eq!(exact_dp_ratio(&uniform), DpRatio::Finite(Rational::one()));
        assert_eq!(exact_dp_ratio(&uniform).epsilon(), 0.0);
        assert_eq!(utility(&uniform, &Rational::zero()).unwrap(), ratio(-2, 3));
        assert!(FiniteMechanismMatrix::new(vec![
            vec![ratio(1, 2), ratio(1, 3)],
            vec![ratio(1, 2); 2]
        ])
        .is_err());
    }

    #[test]
    fn utility_values() {
        assert!(utility(&FiniteMechanismMatrix::identity(5), &ratio(1, 10))
            .unwrap()
            .is_zero());
        let gamma = ratio(1, 10);
        let u: Vec<Rational> = [ratio(3, 4), ratio(1, 2), ratio(1, 4)]
            .iter()
            .map(|a| utility(&truncated_geometric(a, 5).unwrap(), &gamma).unwrap())
            .collect();
        assert!(u[0] < u[1] && u[1] < u[2]);
        assert!(utility(&FiniteMechanismMatrix::identity(2), &ratio(-1, 2)).is_err());
    }
}
