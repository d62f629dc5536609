//! Thresholding greedy operator `G_m` on coefficient maps, quasi-greedy ratio
//! estimation, and sign-pattern constants.
//!
//! A greedy set for `(a, m)` is any `A` with `|A| = m` such that every
//! `|a_i|, i ∈ A` dominates every `|a_k|, k ∉ A`. Ties make `A` non-unique, and
//! because the basis is conditional, different valid sets can give vectors of
//! different norm. `G_m` is therefore handled both as a relation (all valid
//! sets) and as a function (the canonical set: larger modulus first, smaller
//! index first among equals).
//!
//! All norms of greedy outputs are computed by expanding to unit-vector
//! coordinates.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindenstrauss::{expand, level, level_weights, CoeffMap};
use crate::rational::Rational;
use crate::vector::{l1_norm, IndexSet};

/// Largest number of valid greedy sets enumerated before falling back to the
/// canonical set alone.
pub const SELECTION_CAP: u128 = 64;

/// Largest `m` accepted by [`ucc_constants`].
pub const UCC_CAP: usize = 20;

/// Largest `n` accepted by [`conditionality_witness`].
pub const CONDITIONALITY_CAP: u32 = 12;

/// Upper bound on candidate vectors in an exhaustive [`qg_lower_bound_search`].
pub const EXHAUSTIVE_CAP: u128 = 5_000_000;

/// The quasi-greedy constant established for the Lindenstrauss basis.
pub fn qg_constant() -> Rational {
    Rational::from_integer(3)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GreedySelection {
    pub indices: BTreeSet<usize>,
    pub canonical: bool,
}

impl GreedySelection {
    pub fn new(indices: BTreeSet<usize>) -> Self {
        GreedySelection { indices, canonical: false }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedySets {
    pub canonical: GreedySelection,
    /// Every valid greedy set in lexicographic order, or `None` when there are
    /// more than the cap.
    pub all: Option<Vec<GreedySelection>>,
    pub count: u128,
}

/// Indices sorted by decreasing modulus, then increasing index.
fn ranked(a: &CoeffMap) -> Vec<(usize, Rational)> {
    let mut v: Vec<(usize, Rational)> = a.iter().map(|(i, c)| (i, c.abs())).collect();
    v.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    v
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.saturating_mul((n - j) as u128) / (j as u128 + 1);
    }
    acc
}

/// Visits every `k`-subset of `items` in lexicographic order.
fn for_each_subset<F: FnMut(&[usize])>(items: &[usize], k: usize, mut f: F) {
    let n = items.len();
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = Vec::with_capacity(k);
    loop {
        buf.clear();
        buf.extend(idx.iter().map(|&p| items[p]));
        f(&buf);
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == pos - 1 + n - k {
            pos -= 1;
        }
        if pos == 0 {
            return;
        }
        idx[pos - 1] += 1;
        for q in pos..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

pub fn greedy_sets(a: &CoeffMap, m: usize) -> Result<GreedySets> {
    greedy_sets_with_cap(a, m, SELECTION_CAP)
}

pub fn greedy_sets_with_cap(a: &CoeffMap, m: usize, cap: u128) -> Result<GreedySets> {
    let support = a.len();
    if m > support {
        return Err(Error::MTooLarge { m, support });
    }
    let ranked = ranked(a);
    let canonical = GreedySelection {
        indices: ranked[..m].iter().map(|(i, _)| *i).collect(),
        canonical: true,
    };
    if m == 0 {
        return Ok(GreedySets { all: Some(vec![canonical.clone()]), canonical, count: 1 });
    }
    let threshold = &ranked[m - 1].1;
    let forced: BTreeSet<usize> =
        ranked.iter().filter(|(_, c)| c > threshold).map(|(i, _)| *i).collect();
    let ties: Vec<usize> = ranked.iter().filter(|(_, c)| c == threshold).map(|(i, _)| *i).collect();
    let free = m - forced.len();
    let count = binomial(ties.len(), free);
    let all = (count <= cap).then(|| {
        let mut out = Vec::with_capacity(count as usize);
        for_each_subset(&ties, free, |pick| {
            let mut indices = forced.clone();
            indices.extend(pick.iter().copied());
            let is_canon = indices == canonical.indices;
            out.push(GreedySelection { indices, canonical: is_canon });
        });
        out
    });
    Ok(GreedySets { canonical, all, count })
}

/// Checks the threshold property for `selection` against `(a, m)`.
pub fn validate_selection(a: &CoeffMap, m: usize, selection: &GreedySelection) -> Result<()> {
    if m > a.len() {
        return Err(Error::MTooLarge { m, support: a.len() });
    }
    if selection.len() != m {
        return Err(Error::InvalidSelection(format!(
            "selection has {} indices, expected {m}",
            selection.len()
        )));
    }
    let mut min_in: Option<Rational> = None;
    for &i in &selection.indices {
        let c = a.get(i);
        if c.is_zero() {
            return Err(Error::InvalidSelection(format!("index {i} is outside the support")));
        }
        let c = c.abs();
        min_in = Some(match min_in {
            Some(cur) => cur.min(c),
            None => c,
        });
    }
    if let Some(min_in) = min_in {
        for (k, c) in a.iter() {
            if !selection.indices.contains(&k) && c.abs() > min_in {
                return Err(Error::InvalidSelection(format!(
                    "index {k} with |a| = {} outranks a selected coefficient of modulus {min_in}",
                    c.abs()
                )));
            }
        }
    }
    Ok(())
}

/// `G_m a` for the given greedy set: the restriction of `a` to it.
pub fn greedy_operator(a: &CoeffMap, m: usize, selection: &GreedySelection) -> Result<CoeffMap> {
    validate_selection(a, m, selection)?;
    Ok(a.restricted(&selection.indices))
}

/// `G_m a` with the canonical greedy set.
pub fn greedy_canonical(a: &CoeffMap, m: usize) -> Result<CoeffMap> {
    let sets = greedy_sets(a, m)?;
    Ok(a.restricted(&sets.canonical.indices))
}

/// `max_A ∥G_m a∥ / ∥a∥` over all valid greedy sets, or over the canonical set
/// alone when the number of valid sets exceeds [`SELECTION_CAP`].
pub fn qg_ratio(a: &CoeffMap, m: usize) -> Result<Rational> {
    qg_ratio_detail(a, m).map(|(r, _)| r)
}

/// Like [`qg_ratio`], also returning the maximizing set (first in
/// lexicographic order among maximizers).
pub fn qg_ratio_detail(a: &CoeffMap, m: usize) -> Result<(Rational, GreedySelection)> {
    if a.is_empty() {
        return Err(Error::EmptyVector);
    }
    let sets = greedy_sets(a, m)?;
    let denom = l1_norm(&expand(a));
    let candidates = sets.all.unwrap_or_else(|| vec![sets.canonical.clone()]);
    let mut best: Option<(Rational, GreedySelection)> = None;
    for sel in candidates {
        let ratio = l1_norm(&expand(&a.restricted(&sel.indices))) / denom.clone();
        if best.as_ref().map_or(true, |(r, _)| ratio > *r) {
            best = Some((ratio, sel));
        }
    }
    Ok(best.expect("at least one selection"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QGWitness {
    pub coeffs: CoeffMap,
    pub m: usize,
    pub selection: GreedySelection,
}

impl QGWitness {
    fn key(&self) -> (Vec<(usize, Rational)>, usize, Vec<usize>) {
        (
            self.coeffs.iter().map(|(i, c)| (i, c.clone())).collect(),
            self.m,
            self.selection.indices.iter().copied().collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QGReport {
    pub ratio: Rational,
    pub witness: Option<QGWitness>,
    pub bound: Rational,
    pub evaluated: u64,
}

/// Configuration of [`qg_lower_bound_search`]. `trials = 0` requests an
/// exhaustive sweep over every support of size `1..=support_size` inside
/// `1..=max_index` and every assignment of nonzero grid values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_index: usize,
    pub support_size: usize,
    #[serde(default = "default_grid")]
    pub grid: Vec<Rational>,
    #[serde(default)]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

/// `{±2^{-k} : 0 <= k <= 4}`. Zero is implicit: indices outside the support.
pub fn default_grid() -> Vec<Rational> {
    (0..=4)
        .flat_map(|k| [Rational::half_pow(k), -Rational::half_pow(k)])
        .collect()
}

type Candidate = (Rational, Option<QGWitness>);

fn better(a: Candidate, b: Candidate) -> Candidate {
    match a.0.cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => match (&a.1, &b.1) {
            (Some(wa), Some(wb)) if wb.key() < wa.key() => b,
            (None, Some(_)) => b,
            _ => a,
        },
    }
}

fn evaluate(a: CoeffMap) -> (Candidate, u64) {
    let mut best: Candidate = (Rational::zero(), None);
    let mut evaluated = 0;
    for m in 1..=a.len() {
        let (ratio, selection) = qg_ratio_detail(&a, m).expect("m within support");
        evaluated += 1;
        let cand = (ratio, Some(QGWitness { coeffs: a.clone(), m, selection }));
        best = better(best, cand);
    }
    (best, evaluated)
}

fn decode(support: &[usize], grid: &[Rational], mut code: u128) -> CoeffMap {
    let g = grid.len() as u128;
    support
        .iter()
        .map(|&i| {
            let c = grid[(code % g) as usize].clone();
            code /= g;
            (i, c)
        })
        .collect()
}

/// Searches for large quasi-greedy ratios. The result is the maximum ratio
/// with the lexicographically smallest witness among maximizers, so it does
/// not depend on evaluation order or thread count.
pub fn qg_lower_bound_search(config: &SearchConfig) -> Result<QGReport> {
    let grid: Vec<Rational> = config.grid.iter().filter(|c| !c.is_zero()).cloned().collect();
    if grid.is_empty() || config.max_index == 0 || config.support_size == 0 {
        return Ok(QGReport { ratio: Rational::zero(), witness: None, bound: qg_constant(), evaluated: 0 });
    }
    let size_cap = config.support_size.min(config.max_index);
    let (best, evaluated) = if config.trials == 0 {
        let universe: Vec<usize> = (1..=config.max_index).collect();
        let total: u128 = (1..=size_cap)
            .map(|k| binomial(universe.len(), k).saturating_mul((grid.len() as u128).saturating_pow(k as u32)))
            .fold(0u128, |a, b| a.saturating_add(b));
        if total > EXHAUSTIVE_CAP {
            return Err(Error::TooLarge {
                what: "exhaustive candidate count",
                value: usize::try_from(total).unwrap_or(usize::MAX),
                cap: EXHAUSTIVE_CAP as usize,
            });
        }
        let mut supports = Vec::new();
        for k in 1..=size_cap {
            for_each_subset(&universe, k, |s| supports.push(s.to_vec()));
        }
        supports
            .par_iter()
            .flat_map_iter(|s| {
                let combos = (grid.len() as u128).pow(s.len() as u32);
                (0..combos).map(move |code| (s, code))
            })
            .map(|(s, code)| evaluate(decode(s, &grid, code)))
            .reduce(|| ((Rational::zero(), None), 0), |x, y| (better(x.0, y.0), x.1 + y.1))
    } else {
        (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(t);
                let k = rng.gen_range(1..=size_cap);
                let mut support: Vec<usize> =
                    sample(&mut rng, config.max_index, k).into_iter().map(|i| i + 1).collect();
                support.sort_unstable();
                let a: CoeffMap = support
                    .into_iter()
                    .map(|i| (i, grid[rng.gen_range(0..grid.len())].clone()))
                    .collect();
                evaluate(a)
            })
            .reduce(|| ((Rational::zero(), None), 0), |x, y| (better(x.0, y.0), x.1 + y.1))
    };
    Ok(QGReport { ratio: best.0, witness: best.1, bound: qg_constant(), evaluated })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UccReport {
    pub m: usize,
    pub c_min: Rational,
    #[serde(rename = "C_max")]
    pub c_max: Rational,
    pub min_pattern: String,
    pub max_pattern: String,
}

fn pattern_string(signs: &[i8]) -> String {
    signs.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

fn signed_sum_norm(signs: &[i8]) -> Rational {
    let a: CoeffMap = signs
        .iter()
        .enumerate()
        .map(|(k, &s)| (k + 1, Rational::from_integer(s as i64)))
        .collect();
    l1_norm(&expand(&a))
}

/// Best constants `c, C` in `c∥Σ x_i∥ <= ∥Σ ε_i x_i∥ <= C∥Σ x_i∥` for sums of
/// length `m`, exhaustive over sign patterns with `ε_1 = +1`. Extremal
/// patterns are the first in enumeration order (bit `k` set means `ε_{k+2} = -1`).
pub fn ucc_constants(m: usize) -> Result<UccReport> {
    if m == 0 {
        return Err(Error::NonPositiveIndex(0));
    }
    if m > UCC_CAP {
        return Err(Error::TooLarge { what: "m", value: m, cap: UCC_CAP });
    }
    let base = signed_sum_norm(&vec![1; m]);
    let patterns = 1u64 << (m - 1);
    let signs_of = |code: u64| -> Vec<i8> {
        std::iter::once(1)
            .chain((0..m - 1).map(|k| if code >> k & 1 == 1 { -1 } else { 1 }))
            .collect()
    };
    type Ext = (Rational, u64);
    let (lo, hi): (Ext, Ext) = (0..patterns)
        .into_par_iter()
        .map(|code| {
            let norm = signed_sum_norm(&signs_of(code));
            ((norm.clone(), code), (norm, code))
        })
        .reduce_with(|(lo_a, hi_a), (lo_b, hi_b)| {
            let lo = if lo_b.0 < lo_a.0 || (lo_b.0 == lo_a.0 && lo_b.1 < lo_a.1) { lo_b } else { lo_a };
            let hi = if hi_b.0 > hi_a.0 || (hi_b.0 == hi_a.0 && hi_b.1 < hi_a.1) { hi_b } else { hi_a };
            (lo, hi)
        })
        .expect("at least one pattern");
    Ok(UccReport {
        m,
        c_min: lo.0 / base.clone(),
        c_max: hi.0 / base,
        min_pattern: pattern_string(&signs_of(lo.1)),
        max_pattern: pattern_string(&signs_of(hi.1)),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalityWitness {
    pub n: u32,
    pub len: usize,
    pub signs: String,
    pub numerator: Rational,
    pub denominator: Rational,
    pub ratio: Rational,
}

/// `∥Σ ε_i α_i x_i∥ / ∥Σ α_i x_i∥` with level-halving weights and signs
/// `ε_i = (-1)^{level(i)}`.
pub fn conditionality_witness(n: u32) -> Result<ConditionalityWitness> {
    if n == 0 {
        return Err(Error::NonPositiveIndex(0));
    }
    if n > CONDITIONALITY_CAP {
        return Err(Error::TooLarge { what: "n", value: n as usize, cap: CONDITIONALITY_CAP as usize });
    }
    let weights = level_weights(n);
    let signs: Vec<i8> = (1..=weights.len())
        .map(|i| if level(i).expect("i >= 1") % 2 == 0 { 1 } else { -1 })
        .collect();
    let signed: CoeffMap = weights
        .iter()
        .map(|(i, w)| (i, if signs[i - 1] > 0 { w.clone() } else { -w }))
        .collect();
    let numerator = l1_norm(&expand(&signed));
    let denominator = l1_norm(&expand(&weights));
    Ok(ConditionalityWitness {
        n,
        len: weights.len(),
        signs: pattern_string(&signs),
        ratio: &numerator / &denominator,
        numerator,
        denominator,
    })
}

/// Threshold property as a predicate, for tests and report validation.
pub fn is_threshold_set(a: &CoeffMap, set: &IndexSet) -> bool {
    let min_in = set.iter().map(|&i| a.get(i).abs()).min();
    let max_out = a.iter().filter(|(k, _)| !set.contains(k)).map(|(_, c)| c.abs()).max();
    match (min_in, max_out) {
        (Some(lo), Some(hi)) => lo >= hi,
        _ => true,
    }
}
