use std::io::{self, Write};
use std::process::ExitCode;

use clap::ValueEnum;
use votepriv_core::ddp::CSV_HEADER;
use votepriv_core::{
    delta_bruteforce_db, delta_series, delta_via_trails, parse_rational, rule_by_name, DeltaResult,
    Direction, Mechanism, Rational, VoteDistribution,
};

use crate::{Failure, OutFormat};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Observable {
    Winner,
    Score,
    Histogram,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Exact,
    Trails,
    Oracle,
}

#[derive(clap::Args)]
pub struct DeltaArgs {
    /// plurality, borda, stv, maximin, copeland, veto, <k>-approval, a scoring
    /// vector "s1,...,sm", `majority` (two candidates, see --alpha) or
    /// `histogram` (release of the raw histogram over --m bins)
    #[arg(long)]
    rule: String,
    #[arg(long, value_enum, default_value = "winner")]
    observable: Observable,
    /// Number of candidates (bins for `--rule histogram`).
    #[arg(long)]
    m: Option<usize>,
    /// Vote threshold of `--rule majority`.
    #[arg(long)]
    alpha: Option<String>,
    /// `uniform` or a comma-separated list of rationals, one per bin.
    #[arg(long, default_value = "uniform")]
    dist: String,
    /// Electorate sizes `a..b` (inclusive) or a single `n`.
    #[arg(long)]
    n: String,
    /// e^ε as a rational, at least 1.
    #[arg(long, default_value = "1")]
    eps_ratio: String,
    #[arg(long, value_enum, default_value = "exact")]
    engine: Engine,
    #[arg(long, value_enum, default_value = "csv")]
    out: OutFormat,
    /// Worker threads for the exact engine; defaults to all cores.
    #[arg(long, env = "VOTEPRIV_JOBS")]
    jobs: Option<usize>,
    /// Largest witness set listed in JSON output.
    #[arg(long, default_value_t = 64)]
    max_witness: usize,
}

pub fn parse_range(s: &str) -> Result<Vec<u32>, Failure> {
    let bad = || Failure::usage(format!("bad --n {s:?}; expected a..b or n"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

fn build(args: &DeltaArgs) -> Result<(Mechanism, VoteDistribution), Failure> {
    if args.alpha.is_some() && args.rule != "majority" {
        return Err(Failure::usage("--alpha only applies to --rule majority"));
    }
    match args.rule.as_str() {
        "majority" => {
            if args.m.is_some_and(|m| m != 2) {
                return Err(Failure::usage("--rule majority has two candidates"));
            }
            let alpha = parse_rational(args.alpha.as_deref().unwrap_or("1/2"))?;
            let mech = match args.observable {
                Observable::Winner => Mechanism::alpha_majority(alpha)?,
                Observable::Histogram => Mechanism::Histogram,
                Observable::Score => {
                    return Err(Failure::usage("--rule majority has no score observable"))
                }
            };
            Ok((mech, VoteDistribution::parse(&args.dist, 2)?))
        }
        "histogram" => {
            let pi = match (args.dist.trim(), args.m) {
                ("uniform", None) => {
                    return Err(Failure::usage(
                        "--rule histogram with a uniform --dist needs --m",
                    ))
                }
                ("uniform", Some(c)) => VoteDistribution::uniform(c)?,
                (list, m) => {
                    let pi = VoteDistribution::parse(list, 0)?;
                    if m.is_some_and(|m| m != pi.bins()) {
                        return Err(Failure::usage("--m disagrees with the length of --dist"));
                    }
                    pi
                }
            };
            Ok((Mechanism::Histogram, pi))
        }
        name => {
            let rule = rule_by_name(name, args.m.unwrap_or(3))?;
            let pi = VoteDistribution::parse(&args.dist, rule.bins())?;
            let mech = match args.observable {
                Observable::Winner => Mechanism::winner(rule),
                Observable::Score => Mechanism::score(rule),
                Observable::Histogram => Mechanism::Histogram,
            };
            if let Some(bins) = mech.required_bins() {
                if bins != pi.bins() {
                    return Err(Failure::usage(format!(
                        "--dist has {} entries, the rule needs one per ranking ({bins})",
                        pi.bins()
                    )));
                }
            }
            Ok((mech, pi))
        }
    }
}

fn via_trails(mech: &Mechanism, pi: &VoteDistribution, n: u32) -> Result<DeltaResult, Failure> {
    let support = pi.support();
    let mut best: Option<DeltaResult> = None;
    for &j in &support {
        for &k in &support {
            if j == k {
                continue;
            }
            let r = delta_via_trails(mech, pi, n, Direction::new(j, k)?)?;
            if best.as_ref().is_none_or(|b| r.delta > b.delta) {
                best = Some(r);
            }
        }
    }
    best.ok_or_else(|| Failure::usage("distribution needs two values with positive probability"))
}

fn compute(args: &DeltaArgs) -> Result<Vec<DeltaResult>, Failure> {
    let (mech, pi) = build(args)?;
    let ns = parse_range(&args.n)?;
    let r: Rational = parse_rational(&args.eps_ratio)?;
    match args.engine {
        Engine::Exact => Ok(delta_series(&mech, &pi, &ns, &r, args.jobs)?),
        Engine::Oracle => ns
            .iter()
            .map(|&n| Ok(delta_bruteforce_db(&mech, &pi, n, &r)?))
            .collect(),
        Engine::Trails => {
            if !num_is_one(&r) {
                return Err(Failure::usage(
                    "the trails engine works at --eps-ratio 1 only",
                ));
            }
            ns.iter().map(|&n| via_trails(&mech, &pi, n)).collect()
        }
    }
}

fn num_is_one(r: &Rational) -> bool {
    r.numer() == r.denom()
}

pub fn run(args: DeltaArgs) -> Result<ExitCode, Failure> {
    let results = compute(&args)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match args.out {
        OutFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in &results {
                writeln!(out, "{}", r.csv_row())?;
            }
        }
        OutFormat::Json => {
            for r in &results {
                writeln!(out, "{}", r.to_json(args.max_witness))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
