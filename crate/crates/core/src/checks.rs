//! Seeded randomized verification suites over the whole crate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::{hist2_delta_closed_form, histc_delta_mixture, majority_delta_exact};
use crate::ddp::{delta_bruteforce_db, delta_via_trails};
use crate::error::{Error, Result};
use crate::geometric::{exact_dp_ratio, truncated_geometric, utility, DpRatio};
use crate::mechanism::{postprocess, Label, Mechanism};
use crate::prob::{Histogram, VoteDistribution};
use crate::rational::{format_rational, ratio, Rational};
use crate::rules::rule_by_name;
use crate::sweep::conditional_table;
use crate::trails::{trail_theorem_sides, Direction, Trail};

pub const SUITES: [&str; 6] = [
    "trails",
    "oracle",
    "postprocess",
    "lemma1",
    "geom",
    "bounds",
];

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub seed: u64,
    pub cases: usize,
    /// Largest database size; each suite caps it further where enumeration
    /// would get expensive.
    pub n_max: u32,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: 42,
            cases: 100,
            n_max: 8,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub suite: String,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(detail());
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "{status} {}: {} cases, {} failures",
            self.suite,
            self.cases,
            self.failures.len()
        )?;
        for failure in &self.failures {
            writeln!(f, "  {failure}")?;
        }
        Ok(())
    }
}

pub fn run_suite(name: &str, config: &CheckConfig) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = CheckReport {
        suite: name.to_string(),
        ..Default::default()
    };
    match name {
        "trails" => check_trails(config, &mut rng, &mut report)?,
        "oracle" => check_oracle(config, &mut rng, &mut report)?,
        "postprocess" => check_postprocess(config, &mut rng, &mut report)?,
        "lemma1" => check_simulator(config, &mut rng, &mut report)?,
        "geom" => check_geom(&mut report)?,
        "bounds" => check_bounds(config, &mut rng, &mut report)?,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "unknown suite {name:?}; expected one of {}",
                SUITES.join(", ")
            )))
        }
    }
    Ok(report)
}

/// Random distribution over `bins` values with at least two in the support
/// and small denominators.
pub fn random_distribution(rng: &mut impl Rng, bins: usize) -> VoteDistribution {
    loop {
        let weights: Vec<i64> = (0..bins).map(|_| rng.gen_range(0..=6)).collect();
        if weights.iter().filter(|&&w| w > 0).count() < 2 {
            continue;
        }
        let total: i64 = weights.iter().sum();
        return VoteDistribution::new(weights.iter().map(|&w| ratio(w, total)).collect()).unwrap();
    }
}

/// Random mechanism with a matching distribution.
fn random_setup(rng: &mut impl Rng) -> Result<(Mechanism, VoteDistribution)> {
    let kind = rng.gen_range(0..5);
    Ok(match kind {
        0 => {
            let c = rng.gen_range(2..=3);
            (Mechanism::Histogram, random_distribution(rng, c))
        }
        1 => {
            let alpha = ratio(rng.gen_range(0..=8), 8);
            (
                Mechanism::alpha_majority(alpha)?,
                random_distribution(rng, 2),
            )
        }
        _ => {
            let names = ["plurality", "borda", "stv", "maximin", "copeland", "veto"];
            let name = names.choose(rng).unwrap();
            let m = if kind == 2 { 2 } else { 3 };
            let rule = rule_by_name(name, m)?;
            let bins = rule.bins();
            let mech = if rng.gen_bool(0.5) {
                Mechanism::winner(rule)
            } else {
                Mechanism::score(rule)
            };
            (mech, random_distribution(rng, bins))
        }
    })
}

fn random_ratio(rng: &mut impl Rng) -> Rational {
    if rng.gen_bool(0.3) {
        Rational::from_integer(1.into())
    } else {
        let den = rng.gen_range(1..=6);
        ratio(den + rng.gen_range(0..=2 * den), den)
    }
}

fn check_trails(
    config: &CheckConfig,
    rng: &mut ChaCha8Rng,
    report: &mut CheckReport,
) -> Result<()> {
    let n_max = config.n_max.clamp(1, 12);
    for _ in 0..config.cases {
        let c = rng.gen_range(2..=4);
        let pi = random_distribution(rng, c);
        let n = rng.gen_range(1..=n_max);
        let mut counts = vec![0u32; c];
        for _ in 0..n {
            counts[rng.gen_range(0..c)] += 1;
        }
        let j = rng.gen_range(0..c);
        let k = (j + rng.gen_range(1..c)) % c;
        let q = rng.gen_range(0..=counts[j]);
        let trail = Trail::new(Histogram::new(counts)?, Direction::new(j, k)?, q)?;
        let (lhs, rhs) = trail_theorem_sides(&trail, &pi)?;
        report.record(lhs == rhs, || {
            format!(
                "trail {} under {pi}: lhs {} != rhs {} (diff {})",
                trail.to_json(),
                format_rational(&lhs),
                format_rational(&rhs),
                format_rational(&(&lhs - &rhs))
            )
        });
    }
    Ok(())
}

fn check_oracle(
    config: &CheckConfig,
    rng: &mut ChaCha8Rng,
    report: &mut CheckReport,
) -> Result<()> {
    for _ in 0..config.cases {
        let (mech, pi) = random_setup(rng)?;
        let cap = if pi.bins() > 3 { 5 } else { 8 };
        let n = rng.gen_range(1..=config.n_max.clamp(1, cap));
        let r = random_ratio(rng);
        let fast = conditional_table(&mech, &pi, n)?.delta(&mech, &r)?;
        let slow = delta_bruteforce_db(&mech, &pi, n, &r)?;
        report.record(fast.delta == slow.delta, || {
            format!(
                "{} {} n={n} π={pi} r={}: engine {} vs oracle {} (diff {})",
                mech.rule_name(),
                mech.observable(),
                format_rational(&r),
                format_rational(&fast.delta),
                format_rational(&slow.delta),
                format_rational(&(&fast.delta - &slow.delta))
            )
        });
    }
    Ok(())
}

fn check_postprocess(
    config: &CheckConfig,
    rng: &mut ChaCha8Rng,
    report: &mut CheckReport,
) -> Result<()> {
    for _ in 0..config.cases {
        let (mech, pi) = random_setup(rng)?;
        let cap = if pi.bins() > 3 { 6 } else { 10 };
        let n = rng.gen_range(1..=config.n_max.clamp(1, cap));
        let alphabet: BTreeSet<Label> = mech.output_alphabet(n, pi.bins())?;
        let targets = rng.gen_range(1..=alphabet.len().min(4)) as i64;
        let map: BTreeMap<Label, Label> = alphabet
            .into_iter()
            .map(|l| (l, Label::scalar(rng.gen_range(0..targets))))
            .collect();
        let post = postprocess(&mech, map, n, pi.bins())?;
        let r = random_ratio(rng);
        let before = conditional_table(&mech, &pi, n)?.delta(&mech, &r)?.delta;
        let after = conditional_table(&post, &pi, n)?.delta(&post, &r)?.delta;
        report.record(after <= before, || {
            format!(
                "{} n={n} π={pi} r={}: post-processed {} > original {} (excess {})",
                mech.rule_name(),
                format_rational(&r),
                format_rational(&after),
                format_rational(&before),
                format_rational(&(&after - &before))
            )
        });
    }
    Ok(())
}

fn check_simulator(
    config: &CheckConfig,
    rng: &mut ChaCha8Rng,
    report: &mut CheckReport,
) -> Result<()> {
    for _ in 0..config.cases {
        let (mech, pi) = random_setup(rng)?;
        let cap = if pi.bins() > 3 { 6 } else { 10 };
        let n = rng.gen_range(1..=config.n_max.clamp(1, cap));
        let r = random_ratio(rng);
        let table = conditional_table(&mech, &pi, n)?;
        let alt = table.delta(&mech, &r)?.delta;
        let sim = table.simulator_delta(&r)?;
        report.record(sim <= alt, || {
            format!(
                "{} n={n} π={pi} r={}: simulator δ {} exceeds δ {}",
                mech.rule_name(),
                format_rational(&r),
                format_rational(&sim),
                format_rational(&alt)
            )
        });
        let squared = &r * &r;
        let alt_sq = table.delta(&mech, &squared)?.delta;
        let bound = (Rational::from_integer(1.into()) + &r) * &sim;
        report.record(alt_sq <= bound, || {
            format!(
                "{} n={n} π={pi} r={}: δ at r² {} exceeds (1+r)·simulator δ {}",
                mech.rule_name(),
                format_rational(&r),
                format_rational(&alt_sq),
                format_rational(&bound)
            )
        });
    }
    Ok(())
}

fn check_geom(report: &mut CheckReport) -> Result<()> {
    for alpha in [ratio(1, 2), ratio(1, 3), ratio(2, 5)] {
        for n in [2, 5, 10] {
            let m = truncated_geometric(&alpha, n)?;
            let got = exact_dp_ratio(&m);
            let want = DpRatio::Finite(alpha.recip());
            report.record(got == want, || {
                format!(
                    "α={} n={n}: ratio {got}, expected {want}",
                    format_rational(&alpha)
                )
            });
            let stochastic = m
                .rows()
                .iter()
                .all(|row| row.iter().sum::<Rational>() == ratio(1, 1));
            report.record(stochastic, || {
                format!(
                    "α={} n={n}: row sums differ from 1",
                    format_rational(&alpha)
                )
            });
        }
    }
    let gamma = ratio(1, 10);
    let alphas = [ratio(3, 4), ratio(1, 2), ratio(1, 4)];
    let utilities: Vec<Rational> = alphas
        .iter()
        .map(|a| utility(&truncated_geometric(a, 5)?, &gamma))
        .collect::<Result<_>>()?;
    for w in 0..utilities.len() - 1 {
        report.record(utilities[w] < utilities[w + 1], || {
            format!(
                "utility at α={} ({}) is not below α={} ({})",
                format_rational(&alphas[w]),
                format_rational(&utilities[w]),
                format_rational(&alphas[w + 1]),
                format_rational(&utilities[w + 1])
            )
        });
    }
    Ok(())
}

fn check_bounds(
    config: &CheckConfig,
    rng: &mut ChaCha8Rng,
    report: &mut CheckReport,
) -> Result<()> {
    let one = ratio(1, 1);
    let n_max = config.n_max.clamp(1, 40);
    for _ in 0..config.cases {
        let den = rng.gen_range(2..=30);
        let p = ratio(rng.gen_range(1..den), den);
        let pi = VoteDistribution::new(vec![p.clone(), &one - &p])?;
        let n = rng.gen_range(1..=n_max);
        let table = conditional_table(&Mechanism::Histogram, &pi, n)?;
        let engine = table.delta(&Mechanism::Histogram, &one)?.delta;
        let closed = hist2_delta_closed_form(&p, n)?;
        report.record(engine == closed, || {
            format!(
                "histogram p={} n={n}: closed form {} vs engine {}",
                format_rational(&p),
                format_rational(&closed),
                format_rational(&engine)
            )
        });

        let alpha = ratio(rng.gen_range(0..=den), den);
        let mech = Mechanism::alpha_majority(alpha.clone())?;
        let engine = conditional_table(&mech, &pi, n)?.delta(&mech, &one)?.delta;
        let closed = majority_delta_exact(&alpha, &p, n)?;
        report.record(engine == closed, || {
            format!(
                "majority α={} p={} n={n}: closed form {} vs engine {}",
                format_rational(&alpha),
                format_rational(&p),
                format_rational(&closed),
                format_rational(&engine)
            )
        });

        let c = rng.gen_range(3..=4);
        let pi = random_distribution(rng, c);
        let support = pi.support();
        let j = *support.choose(rng).unwrap();
        let k = *support
            .iter()
            .filter(|&&v| v != j)
            .collect::<Vec<_>>()
            .choose(rng)
            .unwrap();
        let n = rng.gen_range(1..=n_max.min(if c == 3 { 25 } else { 12 }));
        let engine = conditional_table(&Mechanism::Histogram, &pi, n)?
            .delta_pair(&Mechanism::Histogram, &one, j, *k)?
            .delta;
        let mixture = histc_delta_mixture(&pi, n, j, *k)?;
        report.record(engine == mixture, || {
            format!(
                "mixture π={pi} n={n} pair ({j},{k}): {} vs engine {}",
                format_rational(&mixture),
                format_rational(&engine)
            )
        });

        if pi.bins() == 3 && n <= 20 {
            let d = Direction::new(j, *k)?;
            let trails = delta_via_trails(&Mechanism::Histogram, &pi, n, d)?.delta;
            report.record(trails == engine, || {
                format!(
                    "trail engine π={pi} n={n} pair ({j},{k}): {} vs {}",
                    format_rational(&trails),
                    format_rational(&engine)
                )
            });
        }
    }
    Ok(())
}
