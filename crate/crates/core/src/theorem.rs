//! Exact verification of the quasi-greedy inequality
//!
//! ```text
//! 3 ∥Σ_{S1 ∪ S2} α_i x_i∥ >= ∥Σ_{S1} α_i x_i∥   whenever   min_{S1} |α_i| >= max_{S2} |α_i|
//! ```
//!
//! together with a replay of its proof on each instance. [`trace_chain`]
//! rebuilds the coordinate partition `A0/B0/C0` of `x = Σ_{S1} α_i x_i`, walks
//! the chain `W_l, A_l, B_l` into `S2`, and records both sides of every
//! intermediate inequality as exact rationals. A [`TraceReport`] is a
//! certificate: any failing entry pinpoints the step and quantity involved.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::{default_grid, qg_constant};
use crate::lindenstrauss::{children, expand, parent, CoeffMap};
use crate::rational::Rational;
use crate::vector::{l1_norm, IndexSet, SparseVec};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub s1: IndexSet,
    pub s2: IndexSet,
    pub alpha: CoeffMap,
}

impl Instance {
    /// Validates and normalizes an instance. Indices whose coefficient is zero
    /// (or missing) are dropped from `s1`/`s2`.
    pub fn new(s1: IndexSet, s2: IndexSet, alpha: CoeffMap) -> Result<Instance> {
        if let Some(i) = s1.intersection(&s2).next() {
            return Err(Error::PreconditionViolated(format!("index {i} lies in both S1 and S2")));
        }
        if s1.contains(&0) || s2.contains(&0) {
            return Err(Error::NonPositiveIndex(0));
        }
        if let Some((i, _)) = alpha.iter().find(|(i, _)| !s1.contains(i) && !s2.contains(i)) {
            return Err(Error::PreconditionViolated(format!(
                "coefficient given for index {i} outside S1 ∪ S2"
            )));
        }
        let s1: IndexSet = s1.into_iter().filter(|&i| !alpha.get(i).is_zero()).collect();
        let s2: IndexSet = s2.into_iter().filter(|&i| !alpha.get(i).is_zero()).collect();
        let min1 = s1.iter().map(|&i| alpha.get(i).abs()).min();
        let max2 = s2.iter().map(|&i| alpha.get(i).abs()).max();
        if let (Some(lo), Some(hi)) = (&min1, &max2) {
            if lo < hi {
                return Err(Error::PreconditionViolated(format!(
                    "min over S1 of |α| = {lo} < max over S2 of |α| = {hi}"
                )));
            }
        }
        Ok(Instance { s1, s2, alpha })
    }

    /// `x = Σ_{S1} α_i x_i`.
    pub fn x(&self) -> SparseVec {
        expand(&self.alpha.restricted(&self.s1))
    }

    /// `y = Σ_{S2} α_i x_i`.
    pub fn y(&self) -> SparseVec {
        expand(&self.alpha.restricted(&self.s2))
    }
}

/// Coordinates where `Σ_{i ∈ S1} x_i` equals `1`, `-1/2` and `1/2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub a0: IndexSet,
    pub b0: IndexSet,
    pub c0: IndexSet,
}

pub fn partition_support(s1: &IndexSet) -> Partition {
    let one = Rational::one();
    let half = Rational::new(1, 2);
    let minus_half = Rational::new(-1, 2);
    let sum = expand(&s1.iter().map(|&i| (i, Rational::one())).collect());
    let pick = |target: &Rational| -> IndexSet {
        sum.iter().filter(|(_, c)| *c == target).map(|(j, _)| j).collect()
    };
    Partition { a0: pick(&one), b0: pick(&minus_half), c0: pick(&half) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `lhs >= rhs`
    Ge,
    /// `lhs == rhs`
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub relation: Relation,
    pub lhs: Rational,
    pub rhs: Rational,
    pub holds: bool,
}

impl Check {
    fn ge(label: &str, lhs: Rational, rhs: Rational) -> Check {
        let holds = lhs >= rhs;
        Check { label: label.to_string(), relation: Relation::Ge, lhs, rhs, holds }
    }

    fn eq(label: &str, lhs: Rational, rhs: Rational) -> Check {
        let holds = lhs == rhs;
        Check { label: label.to_string(), relation: Relation::Eq, lhs, rhs, holds }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub name: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// One stage `l >= 1` of the chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub l: usize,
    pub w: IndexSet,
    pub a: IndexSet,
    pub b: IndexSet,
    /// `∥P_{B_{l-1}}(y_{l-1}+y_l)∥ + ∥P_{B_{l-1}} y_l∥ >= ∥P_{B_{l-1}} y_{l-1}∥`
    pub triangle: Check,
    /// `∥P_{B_{l-1}} y_l∥ = ∥P_{A_l} y_l∥ + ∥P_{B_l} y_l∥`
    pub split: Check,
    /// `∥P_{B_{l-1}}(y_{l-1}+y_l)∥ + ∥P_{B_l} y_l∥ >= ∥P_{B_{l-1}} y_{l-1}∥ - ∥P_{A_l} y_l∥`
    pub star: Check,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceReport {
    pub instance: Instance,
    pub a0: IndexSet,
    pub b0: IndexSet,
    pub c0: IndexSet,
    pub steps: Vec<TraceStep>,
    pub k: usize,
    /// Inequalities after the chain, in proof order. Labels: `reduce_lhs`,
    /// `reduce_a`, `ww`, `majorineq`, `split_xy`, `MNw`, `a0_dominates`, `MN`,
    /// `a0_half`, `L`, `split_x`, `main`.
    pub final_checks: Vec<Check>,
    pub claims: Vec<Claim>,
}

impl TraceReport {
    pub fn check(&self, label: &str) -> Option<&Check> {
        self.final_checks.iter().find(|c| c.label == label)
    }

    /// Every step inequality, final inequality and structural claim holds.
    pub fn all_hold(&self) -> bool {
        self.steps.iter().all(|s| s.triangle.holds && s.split.holds && s.star.holds)
            && self.final_checks.iter().all(|c| c.holds)
            && self.claims.iter().all(|c| c.holds)
    }

    /// Labels of everything that failed, for diagnostics.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.steps {
            for c in [&s.triangle, &s.split, &s.star] {
                if !c.holds {
                    out.push(format!("step {}: {}", s.l, c.label));
                }
            }
        }
        out.extend(self.final_checks.iter().filter(|c| !c.holds).map(|c| c.label.clone()));
        out.extend(self.claims.iter().filter(|c| !c.holds).map(|c| c.name.clone()));
        out
    }
}

fn union_all<'a, I: IntoIterator<Item = &'a IndexSet>>(sets: I) -> IndexSet {
    sets.into_iter().flat_map(|s| s.iter().copied()).collect()
}

fn mutually_disjoint(sets: &[&IndexSet]) -> Option<String> {
    let mut seen = BTreeSet::new();
    for (n, s) in sets.iter().enumerate() {
        for &j in s.iter() {
            if !seen.insert(j) {
                return Some(format!("coordinate {j} repeats (set #{n})"));
            }
        }
    }
    None
}

fn sum(u: &SparseVec, v: &SparseVec) -> SparseVec {
    let mut out = u.clone();
    out.add_scaled(&Rational::one(), v);
    out
}

pub fn trace_chain(inst: &Instance) -> TraceReport {
    let x = inst.x();
    let y = inst.y();
    let xy = sum(&x, &y);
    let Partition { a0, b0, c0 } = partition_support(&inst.s1);

    // ys[l] = y_l, bs[l] = B_l, with y_0 = x.
    let mut ys: Vec<SparseVec> = vec![x.clone()];
    let mut bs: Vec<IndexSet> = vec![b0.clone()];
    let mut steps = Vec::new();
    loop {
        let b_prev = bs.last().expect("B_0 present");
        // x_i(j) = 1 iff i = j, so W_l = S2 ∩ B_{l-1}.
        let w: IndexSet = inst.s2.intersection(b_prev).copied().collect();
        if w.is_empty() {
            break;
        }
        let kids: IndexSet = w.iter().flat_map(|&i| children(i)).collect();
        let a: IndexSet = kids.iter().copied().filter(|j| a0.contains(j)).collect();
        let b: IndexSet = kids.iter().copied().filter(|j| !a0.contains(j)).collect();
        let y_l = expand(&inst.alpha.restricted(&w));
        let y_prev = ys.last().expect("y_0 present");

        let both = sum(y_prev, &y_l).l1_norm_on(b_prev);
        let prev_on_prev = y_prev.l1_norm_on(b_prev);
        let cur_on_prev = y_l.l1_norm_on(b_prev);
        let cur_on_a = y_l.l1_norm_on(&a);
        let cur_on_b = y_l.l1_norm_on(&b);

        let l = steps.len() + 1;
        steps.push(TraceStep {
            l,
            triangle: Check::ge("oone", &both + &cur_on_prev, prev_on_prev.clone()),
            split: Check::eq("split_b", cur_on_prev, &cur_on_a + &cur_on_b),
            star: Check::ge("star", &both + &cur_on_b, prev_on_prev - cur_on_a),
            w,
            a,
            b: b.clone(),
        });
        ys.push(y_l);
        bs.push(b);
    }
    let k = steps.len();
    let a_sets: Vec<&IndexSet> = steps.iter().map(|s| &s.a).collect();

    // (ww): the telescoped sum of the (*) inequalities.
    let ww_lhs: Rational = (1..=k)
        .map(|i| sum(&ys[i - 1], &ys[i]).l1_norm_on(&bs[i - 1]))
        .sum::<Rational>()
        + ys[k].l1_norm_on(&bs[k]);
    let a_parts: Rational = (1..=k).map(|i| ys[i].l1_norm_on(a_sets[i - 1])).sum();
    let ww_rhs = x.l1_norm_on(&b0) - &a_parts;

    let b_on_xy: Rational = bs.iter().map(|b| xy.l1_norm_on(b)).sum();
    let xy_a0 = xy.l1_norm_on(&a0);
    let xy_c0 = xy.l1_norm_on(&c0);
    let y_a0 = y.l1_norm_on(&a0);
    let x_a0 = x.l1_norm_on(&a0);
    let x_b0 = x.l1_norm_on(&b0);
    let x_c0 = x.l1_norm_on(&c0);
    let xy_norm = l1_norm(&xy);
    let x_norm = l1_norm(&x);
    let two = Rational::from_integer(2);

    let final_checks = vec![
        Check::eq("reduce_lhs", ww_lhs.clone(), b_on_xy.clone()),
        Check::ge("reduce_a", y_a0.clone(), a_parts),
        Check::ge("ww", ww_lhs, ww_rhs),
        Check::ge("majorineq", b_on_xy.clone(), &x_b0 - &y_a0),
        Check::ge("split_xy", xy_norm.clone(), &xy_a0 + &b_on_xy + &xy_c0),
        Check::ge("MNw", xy_norm.clone(), &xy_a0 - &y_a0 + &x_b0 + &x_c0),
        Check::ge("a0_dominates", xy_a0.clone(), y_a0),
        Check::ge("MN", xy_norm.clone(), &x_b0 + &x_c0),
        Check::ge("a0_half", &two * &xy_a0, x_a0.clone()),
        Check::ge("L", &two * &xy_norm, x_a0.clone()),
        Check::eq("split_x", x_norm.clone(), &x_a0 + &x_b0 + &x_c0),
        Check::ge("main", qg_constant() * xy_norm, x_norm),
    ];

    let mut claims = Vec::new();
    let mut disjoint_sets: Vec<&IndexSet> = a_sets.clone();
    disjoint_sets.extend(bs.iter());
    disjoint_sets.push(&c0);
    let detail = mutually_disjoint(&disjoint_sets);
    claims.push(Claim { name: "disjoint_a_b_c0".into(), holds: detail.is_none(), detail });

    let all_a = union_all(a_sets.iter().copied());
    let outside: Vec<usize> = all_a.difference(&a0).copied().collect();
    claims.push(Claim {
        name: "a_within_a0".into(),
        holds: outside.is_empty(),
        detail: (!outside.is_empty()).then(|| format!("{outside:?} not in A0")),
    });

    let mut partition_sets: Vec<&IndexSet> = vec![&a0, &c0];
    partition_sets.extend(bs.iter());
    let detail = mutually_disjoint(&partition_sets);
    claims.push(Claim { name: "disjoint_a0_c0_b".into(), holds: detail.is_none(), detail });

    let supports: Vec<IndexSet> = ys.iter().map(SparseVec::support).collect();
    let mut separation_detail = None;
    'outer: for (i, b) in bs.iter().enumerate() {
        for (j, supp) in supports.iter().enumerate() {
            if j != i && j != i + 1 {
                if let Some(c) = b.intersection(supp).next() {
                    separation_detail = Some(format!("B_{i} meets supp y_{j} at {c}"));
                    break 'outer;
                }
            }
        }
    }
    claims.push(Claim {
        name: "support_separation".into(),
        holds: separation_detail.is_none(),
        detail: separation_detail,
    });

    let mins: Vec<usize> = bs.iter().filter_map(|b| b.first().copied()).collect();
    let increasing = mins.windows(2).all(|w| w[0] < w[1]) && mins.len() + 1 >= bs.len();
    claims.push(Claim {
        name: "b_min_increasing".into(),
        holds: increasing,
        detail: (!increasing).then(|| format!("min B_l = {mins:?}")),
    });

    let max_index = xy.max_index().max(x.max_index()).unwrap_or(1);
    let depth_bound = (usize::BITS - max_index.leading_zeros()) as usize;
    claims.push(Claim {
        name: "chain_length".into(),
        holds: k <= depth_bound,
        detail: (k > depth_bound).then(|| format!("k = {k} > log2 bound {depth_bound}")),
    });

    // Every W_l lies in S2 and every A_l/B_l consists of children of W_l.
    let coherent = steps.iter().all(|s| {
        s.w.is_subset(&inst.s2)
            && s.a.iter().chain(s.b.iter()).all(|&j| {
                parent(j).ok().flatten().map_or(false, |p| s.w.contains(&p))
            })
    });
    claims.push(Claim { name: "chain_coherent".into(), holds: coherent, detail: None });

    TraceReport { instance: inst.clone(), a0, b0, c0, steps, k, final_checks, claims }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: Rational,
    pub rhs: Rational,
    pub slack: Rational,
}

/// `3∥x + y∥` against `∥x∥`, computed directly without the chain.
pub fn check_inequality(inst: &Instance) -> InequalityCheck {
    let lhs = qg_constant() * l1_norm(&expand(&inst.alpha));
    let rhs = l1_norm(&inst.x());
    InequalityCheck { slack: &lhs - &rhs, lhs, rhs }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub max_index: usize,
    pub s1_size: usize,
    pub s2_size: usize,
    #[serde(default = "default_grid")]
    pub grid: Vec<Rational>,
    #[serde(default)]
    pub seed: u64,
}

/// Draws an instance with the given sizes from `rng`. Coefficients come from
/// `grid` (zero ignored); S2 magnitudes are drawn among grid values not
/// exceeding the smallest S1 magnitude, so the ordering precondition holds by
/// construction.
pub fn sample_instance<R: Rng>(
    rng: &mut R,
    max_index: usize,
    s1_size: usize,
    s2_size: usize,
    grid: &[Rational],
) -> Result<Instance> {
    if s1_size + s2_size > max_index {
        return Err(Error::TooLarge { what: "|S1| + |S2|", value: s1_size + s2_size, cap: max_index });
    }
    let grid: Vec<Rational> = grid.iter().filter(|c| !c.is_zero()).cloned().collect();
    if grid.is_empty() && s1_size + s2_size > 0 {
        return Err(Error::PreconditionViolated("coefficient grid has no nonzero value".into()));
    }
    let mut pool: Vec<usize> = (1..=max_index).collect();
    pool.shuffle(rng);
    let s1: IndexSet = pool[..s1_size].iter().copied().collect();
    let s2: IndexSet = pool[s1_size..s1_size + s2_size].iter().copied().collect();

    let mut alpha = CoeffMap::new();
    for &i in &s1 {
        alpha.insert(i, grid[rng.gen_range(0..grid.len())].clone());
    }
    let floor = s1.iter().map(|&i| alpha.get(i).abs()).min();
    let allowed: Vec<Rational> = match &floor {
        Some(lo) => grid.iter().filter(|c| c.abs() <= *lo).cloned().collect(),
        None => grid.clone(),
    };
    for &i in &s2 {
        let c = if allowed.is_empty() {
            let lo = floor.clone().expect("allowed is only empty when S1 is not");
            if rng.gen_bool(0.5) { lo } else { -lo }
        } else {
            allowed[rng.gen_range(0..allowed.len())].clone()
        };
        alpha.insert(i, c);
    }
    Instance::new(s1, s2, alpha)
}

pub fn random_instance(config: &InstanceConfig) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    sample_instance(&mut rng, config.max_index, config.s1_size, config.s2_size, &config.grid)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub trials: u64,
    pub seed: u64,
    pub max_index: usize,
    /// Upper bound on `|S1| + |S2|`; defaults to `max_index / 2`.
    #[serde(default)]
    pub max_size: Option<usize>,
    #[serde(default = "default_grid")]
    pub grid: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub trials: u64,
    pub certified: u64,
    pub failures: u64,
    /// Largest observed `∥x∥ / ∥x + y∥` (at most 3 if the inequality holds).
    pub max_ratio: Rational,
    pub max_ratio_trial: Option<u64>,
    pub max_k: usize,
    /// Histogram of chain lengths `k`, indexed by `k`.
    pub k_histogram: Vec<u64>,
    /// First failing trial, if any.
    pub first_failure: Option<(u64, TraceReport)>,
}

/// The instance used for trial `t` of a seeded run: stream `t` of the seed.
pub fn trial_instance(config: &VerifyConfig, t: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(t);
    let cap = config.max_size.unwrap_or(config.max_index / 2).min(config.max_index);
    let total = rng.gen_range(0..=cap);
    let s1_size = rng.gen_range(0..=total);
    sample_instance(&mut rng, config.max_index, s1_size, total - s1_size, &config.grid)
}

struct TrialOutcome {
    trial: u64,
    ok: bool,
    ratio: Option<Rational>,
    k: usize,
    report: Option<TraceReport>,
}

fn merge(mut a: VerifySummary, b: VerifySummary) -> VerifySummary {
    a.trials += b.trials;
    a.certified += b.certified;
    a.failures += b.failures;
    let take_b = match (&a.max_ratio_trial, &b.max_ratio_trial) {
        (_, None) => false,
        (None, Some(_)) => true,
        (Some(ta), Some(tb)) => b.max_ratio > a.max_ratio || (b.max_ratio == a.max_ratio && tb < ta),
    };
    if take_b {
        a.max_ratio = b.max_ratio;
        a.max_ratio_trial = b.max_ratio_trial;
    }
    a.max_k = a.max_k.max(b.max_k);
    if a.k_histogram.len() < b.k_histogram.len() {
        a.k_histogram.resize(b.k_histogram.len(), 0);
    }
    for (slot, n) in a.k_histogram.iter_mut().zip(b.k_histogram) {
        *slot += n;
    }
    a.first_failure = match (a.first_failure, b.first_failure) {
        (Some(x), Some(y)) => Some(if y.0 < x.0 { y } else { x }),
        (x, y) => x.or(y),
    };
    a
}

fn empty_summary() -> VerifySummary {
    VerifySummary {
        trials: 0,
        certified: 0,
        failures: 0,
        max_ratio: Rational::zero(),
        max_ratio_trial: None,
        max_k: 0,
        k_histogram: Vec::new(),
        first_failure: None,
    }
}

fn outcome_summary(o: TrialOutcome) -> VerifySummary {
    let mut hist = vec![0; o.k + 1];
    hist[o.k] = 1;
    VerifySummary {
        trials: 1,
        certified: o.ok as u64,
        failures: (!o.ok) as u64,
        max_ratio: o.ratio.clone().unwrap_or_else(Rational::zero),
        max_ratio_trial: o.ratio.map(|_| o.trial),
        max_k: o.k,
        k_histogram: hist,
        first_failure: if o.ok { None } else { o.report.map(|r| (o.trial, r)) },
    }
}

/// Traces `config.trials` seeded random instances. The summary is independent
/// of thread count: every trial has its own RNG stream and the merge is
/// order-insensitive.
pub fn verify_theorem(config: &VerifyConfig) -> Result<VerifySummary> {
    // fail fast on a bad configuration
    trial_instance(config, 0)?;
    let summary = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let inst = trial_instance(config, t).expect("configuration validated");
            let report = trace_chain(&inst);
            let main = report.check("main").expect("main check recorded");
            let ratio = (!main.lhs.is_zero()).then(|| {
                // lhs = 3∥x+y∥, so ∥x∥/∥x+y∥ = 3 rhs / lhs
                qg_constant() * &main.rhs / main.lhs.clone()
            });
            let direct = check_inequality(&inst);
            let ok = report.all_hold()
                && direct.lhs == main.lhs
                && direct.rhs == main.rhs
                && direct.slack >= Rational::zero();
            let k = report.k;
            outcome_summary(TrialOutcome { trial: t, ok, ratio, k, report: (!ok).then_some(report) })
        })
        .reduce(empty_summary, merge);
    Ok(summary)
}
