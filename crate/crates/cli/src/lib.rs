//! Command-line front end. [`run`] executes one parsed invocation and writes
//! its report to any sink, so the binary and the integration tests share the
//! same path.
//!
//! Output is one JSON object per line with rationals as `"p/q"` strings, or
//! CSV for `dual-growth`. Exit status: 0 when every asserted contract holds,
//! 1 on a contract violation (the witness is printed first), 2 on usage or
//! input errors.

pub mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use lindqg::direct_sum::{ds_greedy_sets, ds_greedy_with, ds_norm, ds_qg_check, DSVec};
use lindqg::dual::growth_table;
use lindqg::greedy::{
    conditionality_witness, greedy_sets, qg_constant, qg_lower_bound_search, ucc_constants,
    SearchConfig,
};
use lindqg::lindenstrauss::{analyze, basis_vector, dual_vector, expand, positive, CoeffMap};
use lindqg::theorem::{trace_chain, verify_theorem, Instance, VerifyConfig};
use lindqg::vector::{l1_norm, IndexSet, SparseVec};
use lindqg::Rational;

/// Largest `--max-index` accepted by `verify-theorem`.
pub const MAX_INDEX_CAP: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "lindqg", version, about = "Exact greedy-basis experiments on the Lindenstrauss sequence in l1")]
pub struct RunConfig {
    /// Worker threads for parallel subcommands (0 = one per core). Output does
    /// not depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print x_i in unit-vector coordinates.
    GenBasis(IndexArg),
    /// Print the representative y_i* of the i-th coefficient functional.
    GenDual(IndexArg),
    /// Expand a coefficient map Σ a_i x_i into unit-vector coordinates.
    Expand {
        #[arg(long)]
        coeffs: PathBuf,
    },
    /// Recover coefficients against x_1..x_N of a vector.
    Analyze {
        #[arg(long)]
        vec: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        n: i64,
    },
    /// Apply the greedy operator G_m to a coefficient map.
    Greedy {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        m: usize,
        /// Report every valid greedy set, not only the canonical one.
        #[arg(long)]
        all_selections: bool,
    },
    /// Search for large quasi-greedy ratios (configuration as JSON).
    QgSearch {
        #[arg(long)]
        config: PathBuf,
    },
    /// Extremal sign-flip constants for Σ_{i<=m} ±x_i.
    Ucc {
        #[arg(long)]
        m: usize,
    },
    /// Level-alternating sign ratio witnessing conditionality.
    Conditionality {
        #[arg(long)]
        n: u32,
    },
    /// Replay the proof chain on one instance.
    Trace {
        /// Comma-separated indices, e.g. `1,3`
        #[arg(long, value_parser = parse_index_list, allow_hyphen_values = true)]
        s1: IndexSet,
        #[arg(long, value_parser = parse_index_list, allow_hyphen_values = true)]
        s2: IndexSet,
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        emit_certificate: Option<PathBuf>,
    },
    /// Trace many seeded random instances.
    VerifyTheorem {
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_index: usize,
        /// Upper bound on |S1| + |S2| (default: max-index / 2).
        #[arg(long)]
        max_size: Option<usize>,
    },
    /// Norm in the direct sum.
    DsNorm {
        #[arg(long)]
        vec: PathBuf,
    },
    /// Greedy operator in the direct sum.
    DsGreedy {
        #[arg(long)]
        vec: PathBuf,
        #[arg(long)]
        m: usize,
    },
    /// Growth table for sums of coefficient functionals.
    DualGrowth {
        #[arg(long)]
        n_max: u32,
        /// Write the CSV here and print JSON lines on stdout instead.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct IndexArg {
    #[arg(long, allow_negative_numbers = true)]
    pub i: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ContractViolation,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ContractViolation => 1,
        }
    }
}

pub fn parse_index_list(s: &str) -> Result<IndexSet, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(IndexSet::new());
    }
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let v: i64 = t.parse().map_err(|_| format!("invalid index {t:?}"))?;
            positive(v).map_err(|e| e.to_string())
        })
        .collect()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn within_bound(r: &Rational) -> bool {
    *r <= qg_constant()
}

pub fn run(config: &RunConfig, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build()?;
    let mut buf = Vec::new();
    let outcome = pool.install(|| dispatch(&config.command, &mut buf));
    out.write_all(&buf)?;
    outcome
}

fn dispatch(command: &Command, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    match command {
        Command::GenBasis(IndexArg { i }) => {
            emit(out, &basis_vector(positive(*i)?)?)?;
        }
        Command::GenDual(IndexArg { i }) => {
            emit(out, &dual_vector(positive(*i)?)?)?;
        }
        Command::Expand { coeffs } => {
            let a: CoeffMap = read_json(coeffs)?;
            emit(out, &expand(&a))?;
        }
        Command::Analyze { vec, n } => {
            let v: SparseVec = read_json(vec)?;
            emit(out, &analyze(&v, positive(*n)?)?)?;
        }
        Command::Greedy { coeffs, m, all_selections } => {
            return greedy(read_json(coeffs)?, *m, *all_selections, out);
        }
        Command::QgSearch { config } => {
            let cfg: SearchConfig = read_json(config)?;
            let report = qg_lower_bound_search(&cfg)?;
            emit(out, &report)?;
            if !within_bound(&report.ratio) {
                return Ok(Outcome::ContractViolation);
            }
        }
        Command::Ucc { m } => {
            emit(out, &ucc_constants(*m)?)?;
        }
        Command::Conditionality { n } => {
            emit(out, &conditionality_witness(*n)?)?;
        }
        Command::Trace { s1, s2, alpha, emit_certificate } => {
            let alpha: CoeffMap = read_json(alpha)?;
            let inst = Instance::new(s1.clone(), s2.clone(), alpha)?;
            let report = trace_chain(&inst);
            if let Some(path) = emit_certificate {
                let text = serde_json::to_string_pretty(&report)?;
                fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            let main = report.check("main").expect("main check recorded");
            emit(
                out,
                &json!({
                    "kind": "trace",
                    "k": report.k,
                    "a0": report.a0,
                    "b0": report.b0,
                    "c0": report.c0,
                    "w": report.steps.iter().map(|s| &s.w).collect::<Vec<_>>(),
                    "main_lhs": main.lhs,
                    "main_rhs": main.rhs,
                    "all_hold": report.all_hold(),
                    "failures": report.failures(),
                }),
            )?;
            if !report.all_hold() {
                return Ok(Outcome::ContractViolation);
            }
        }
        Command::VerifyTheorem { trials, seed, max_index, max_size } => {
            if *max_index > MAX_INDEX_CAP {
                bail!("--max-index {max_index} exceeds cap {MAX_INDEX_CAP}");
            }
            if *max_index == 0 {
                bail!("--max-index must be >= 1");
            }
            let cfg = VerifyConfig {
                trials: *trials,
                seed: *seed,
                max_index: *max_index,
                max_size: *max_size,
                grid: lindqg::greedy::default_grid(),
            };
            let summary = verify_theorem(&cfg)?;
            if let Some((t, report)) = &summary.first_failure {
                emit(out, &json!({"kind": "failure", "trial": t, "certificate": report}))?;
            }
            emit(
                out,
                &json!({
                    "kind": "verify-theorem",
                    "trials": summary.trials,
                    "certified": summary.certified,
                    "failures": summary.failures,
                    "max_ratio": summary.max_ratio,
                    "max_ratio_trial": summary.max_ratio_trial,
                    "max_k": summary.max_k,
                    "k_histogram": summary.k_histogram,
                    "seed": seed,
                    "max_index": max_index,
                }),
            )?;
            if summary.failures > 0 {
                return Ok(Outcome::ContractViolation);
            }
        }
        Command::DsNorm { vec } => {
            let y: DSVec = read_json(vec)?;
            emit(out, &json!({"kind": "ds-norm", "norm": ds_norm(&y)}))?;
        }
        Command::DsGreedy { vec, m } => {
            let y: DSVec = read_json(vec)?;
            let sets = ds_greedy_sets(&y, *m)?;
            let g = ds_greedy_with(&y, *m, &sets.canonical)?;
            let mut record = json!({"kind": "ds-greedy", "m": m, "result": g, "greedy_norm": ds_norm(&g)});
            if !y.is_empty() {
                let check = ds_qg_check(&y, *m)?;
                record["norm"] = json!(check.norm);
                record["ratio"] = json!(check.ratio);
                record["block_counts"] = json!(check.block_counts);
                emit(out, &record)?;
                if !within_bound(&check.ratio) {
                    return Ok(Outcome::ContractViolation);
                }
            } else {
                emit(out, &record)?;
            }
        }
        Command::DualGrowth { n_max, csv } => {
            let rows = growth_table(*n_max)?;
            let table = growth_csv(&rows);
            match csv {
                Some(path) => {
                    fs::write(path, &table).with_context(|| format!("writing {}", path.display()))?;
                    for r in &rows {
                        emit(out, r)?;
                    }
                }
                None => out.write_all(table.as_bytes())?,
            }
            let half = Rational::new(1, 2);
            let ok = rows.iter().all(|r| {
                r.alt_norm == Rational::one()
                    && r.lower_bound >= &half * &Rational::from_integer(r.n as i64)
            });
            if !ok {
                return Ok(Outcome::ContractViolation);
            }
        }
    }
    Ok(Outcome::Success)
}

fn greedy(a: CoeffMap, m: usize, all_selections: bool, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    if a.is_empty() {
        bail!("coefficient map is empty");
    }
    let sets = greedy_sets(&a, m)?;
    let selections = if all_selections {
        match sets.all {
            Some(all) => all,
            None => bail!(
                "{} valid greedy sets exceed the enumeration cap {}",
                sets.count,
                lindqg::greedy::SELECTION_CAP
            ),
        }
    } else {
        vec![sets.canonical.clone()]
    };
    let input_norm = l1_norm(&expand(&a));
    let mut records = Vec::new();
    for sel in &selections {
        let g = a.restricted(&sel.indices);
        let norm = l1_norm(&expand(&g));
        let record = json!({
            "kind": "greedy",
            "m": m,
            "selection": sel.indices,
            "canonical": sel.canonical,
            "result": g,
            "norm": norm,
            "input_norm": input_norm,
            "ratio": &norm / &input_norm,
        });
        emit(out, &record)?;
        records.push(record);
    }
    let summary = report::report_summary(records.iter());
    if all_selections {
        emit(out, &summary)?;
    }
    Ok(if summary.max_ratio.as_ref().map_or(true, within_bound) {
        Outcome::Success
    } else {
        Outcome::ContractViolation
    })
}

/// CSV with exact columns first and `*_approx` decimal companions.
pub fn growth_csv(rows: &[lindqg::dual::GrowthRow]) -> String {
    let mut s = String::from(
        "n,M,alt_norm,witness_norm,pairing,lower_bound,alt_norm_approx,witness_norm_approx,pairing_approx,lower_bound_approx\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            r.n,
            r.m,
            r.alt_norm,
            r.witness_norm,
            r.pairing,
            r.lower_bound,
            r.alt_norm.to_f64_approx(),
            r.witness_norm.to_f64_approx(),
            r.pairing.to_f64_approx(),
            r.lower_bound.to_f64_approx(),
        ));
    }
    s
}
