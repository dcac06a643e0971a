use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read};
use std::process::ExitCode;

use clap::ValueEnum;
use serde::Deserialize;
use serde_json::json;
use votepriv_core::asymptotics::{fit_inverse_sqrt, FitResult};
use votepriv_core::{parse_rational, rational};

use crate::Failure;

#[derive(Clone, Copy, ValueEnum)]
pub enum FitFormat {
    Json,
    Table,
}

#[derive(clap::Args)]
pub struct FitArgs {
    /// CSV written by `delta`; `-` reads standard input.
    #[arg(long)]
    input: String,
    #[arg(long)]
    n_min: Option<u32>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long, value_enum, default_value = "json")]
    format: FitFormat,
}

#[derive(Deserialize)]
struct Row {
    n: u32,
    rule: String,
    observable: String,
    eps_ratio: String,
    delta_num: String,
    delta_den: String,
}

pub struct Series {
    pub rule: String,
    pub observable: String,
    pub samples: Vec<(u32, f64)>,
}

/// Groups rows by (rule, observable, eps ratio) in order of first appearance.
pub fn read_series(input: impl Read, n_min: u32, n_max: u32) -> Result<Vec<Series>, Failure> {
    let mut reader = csv::Reader::from_reader(input);
    let mut groups: Vec<Series> = Vec::new();
    let mut index: BTreeMap<(String, String, String), usize> = BTreeMap::new();
    for (line, row) in reader.deserialize::<Row>().enumerate() {
        let row =
            row.map_err(|e| Failure::usage(format!("malformed CSV at record {}: {e}", line + 1)))?;
        if row.n < n_min || row.n > n_max {
            continue;
        }
        let delta = parse_rational(&format!("{}/{}", row.delta_num, row.delta_den))?;
        let key = (row.rule.clone(), row.observable.clone(), row.eps_ratio);
        let slot = *index.entry(key).or_insert_with(|| {
            groups.push(Series {
                rule: row.rule,
                observable: row.observable,
                samples: Vec::new(),
            });
            groups.len() - 1
        });
        groups[slot].samples.push((row.n, rational::to_f64(&delta)));
    }
    if groups.is_empty() {
        return Err(Failure::usage("no rows in the requested n range"));
    }
    Ok(groups)
}

fn table(fits: &[(Series, FitResult)]) -> String {
    let mut rules: Vec<&str> = Vec::new();
    for (s, _) in fits {
        if !rules.contains(&s.rule.as_str()) {
            rules.push(&s.rule);
        }
    }
    let cell = |rule: &str, obs: &str| {
        fits.iter()
            .find(|(s, _)| s.rule == rule && s.observable == obs)
            .map(|(_, f)| f.formula())
            .unwrap_or_else(|| "-".to_string())
    };
    let rows: Vec<[String; 3]> = rules
        .iter()
        .map(|r| [r.to_string(), cell(r, "winner"), cell(r, "score")])
        .collect();
    let header = ["rule", "winner", "score"].map(String::from);
    let width = |i: usize| {
        rows.iter()
            .chain(std::iter::once(&header))
            .map(|r| r[i].chars().count())
            .max()
            .unwrap_or(0)
    };
    let widths = [width(0), width(1), width(2)];
    let line = |r: &[String; 3]| {
        format!(
            "| {:<w0$} | {:<w1$} | {:<w2$} |\n",
            r[0],
            r[1],
            r[2],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2]
        )
    };
    let rule_line = format!(
        "|{}|{}|{}|\n",
        "-".repeat(widths[0] + 2),
        "-".repeat(widths[1] + 2),
        "-".repeat(widths[2] + 2)
    );
    let mut out = line(&header);
    out.push_str(&rule_line);
    for r in &rows {
        out.push_str(&line(r));
    }
    out
}

pub fn run(args: FitArgs) -> Result<ExitCode, Failure> {
    let n_min = args.n_min.unwrap_or(0);
    let n_max = args.n_max.unwrap_or(u32::MAX);
    let series = if args.input == "-" {
        read_series(io::stdin().lock(), n_min, n_max)?
    } else {
        read_series(File::open(&args.input)?, n_min, n_max)?
    };
    let mut fits = Vec::new();
    for s in series {
        let fit = fit_inverse_sqrt(&s.samples)?;
        fits.push((s, fit));
    }
    match args.format {
        FitFormat::Json => {
            for (s, f) in &fits {
                let v = json!({
                    "rule": s.rule,
                    "observable": s.observable,
                    "a": f.a,
                    "b": f.b,
                    "mse": f.mse,
                    "n_min": f.n_min,
                    "n_max": f.n_max,
                    "formula": f.formula(),
                });
                println!("{v}");
            }
        }
        FitFormat::Table => print!("{}", table(&fits)),
    }
    Ok(ExitCode::SUCCESS)
}
