//! Growth of the coefficient functionals `x_i*`.
//!
//! `x_i*` lives in the quotient `l∞ / [x_i]^⊥` and is represented by `y_i*`.
//! Norms of combinations `Σ c_i x_i*` are never computed exactly here;
//! instead they are sandwiched:
//!
//! * above by the sup norm of the representative `Σ c_i y_i*`
//!   ([`dual_norm_upper`]);
//! * below by `|Σ c_k w_k| / ∥Σ w_k x_k∥_1` for witness vectors
//!   `Σ w_k x_k` in the span ([`dual_norm_lower`]).
//!
//! For sums over the first `2^{n+1} - 2` indices the alternating sum stays at
//! norm 1 while the plain sum grows at least like `n/2`, the witness being
//! `z_n = Σ α_i x_i` with level-halving weights. Expanding `z_n` gives
//! `e_1 + e_2` plus `2^{n+1}` leaf coordinates equal to `-2^{-n}` (every
//! interior coordinate cancels), so `∥z_n∥_1 = 4` for all `n`.
//!
//! [`exact_dual_norm`] computes the norm of the functional restricted to
//! `F_N = span{x_1..x_N}` exactly for small `N`, by enumerating the vertices of
//! the unit ball of `F_N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindenstrauss::{dual_vector, expand, level_weights, nodes_through_level, CoeffMap};
use crate::rational::Rational;
use crate::vector::{l1_norm, pair, sup_norm, SparseVec};

/// Largest `n` accepted by the growth-table operations.
pub const GROWTH_CAP: u32 = 12;

/// Largest `N` accepted by [`exact_dual_norm`].
pub const EXACT_DUAL_CAP: usize = 6;

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::NonPositiveIndex(0));
    }
    if n > GROWTH_CAP {
        return Err(Error::TooLarge { what: "n", value: n as usize, cap: GROWTH_CAP as usize });
    }
    Ok(())
}

/// `α = (1, 1, 1/2, 1/2, 1/2, 1/2, 1/4, ...)` on `1..=2^{n+1}-2`.
pub fn remark_weights(n: u32) -> Result<CoeffMap> {
    check_n(n)?;
    Ok(level_weights(n))
}

/// `z_n = Σ_{i <= 2^{n+1}-2} α_i x_i`.
pub fn z_vector(n: u32) -> Result<SparseVec> {
    Ok(expand(&remark_weights(n)?))
}

/// `Σ c_i y_i*`.
pub fn representative(c: &CoeffMap) -> SparseVec {
    let mut out = SparseVec::new();
    for (i, ci) in c.iter() {
        out.add_scaled(ci, &dual_vector(i).expect("indices are positive"));
    }
    out
}

fn alternating(len: usize) -> CoeffMap {
    (1..=len)
        .map(|i| (i, Rational::from_integer(if i % 2 == 0 { 1 } else { -1 })))
        .collect()
}

fn all_ones(len: usize) -> CoeffMap {
    (1..=len).map(|i| (i, Rational::one())).collect()
}

/// `∥Σ_{i <= 2^{n+1}-2} (-1)^i y_i*∥_∞`.
pub fn alternating_dual_norm(n: u32) -> Result<Rational> {
    check_n(n)?;
    Ok(sup_norm(&representative(&alternating(nodes_through_level(n)))))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: u32,
    #[serde(rename = "M")]
    pub m: usize,
    pub alt_norm: Rational,
    pub witness_norm: Rational,
    pub pairing: Rational,
    pub lower_bound: Rational,
}

/// Lower bound `|⟨Σ y_i*, z_n⟩| / ∥z_n∥` for `∥Σ_{i <= M} x_i*∥`.
pub fn dual_sum_lower_bound(n: u32) -> Result<GrowthRow> {
    check_n(n)?;
    let m = nodes_through_level(n);
    let z = z_vector(n)?;
    let pairing = pair(&representative(&all_ones(m)), &z);
    let witness_norm = l1_norm(&z);
    Ok(GrowthRow {
        n,
        m,
        alt_norm: alternating_dual_norm(n)?,
        lower_bound: pairing.abs() / witness_norm.clone(),
        witness_norm,
        pairing,
    })
}

/// Upper bound: sup norm of the representative `Σ c_i y_i*`.
pub fn dual_norm_upper(c: &CoeffMap) -> Rational {
    sup_norm(&representative(c))
}

/// Lower bound from witnesses `w` (vectors `Σ w_k x_k`):
/// `max_w |Σ c_k w_k| / ∥Σ w_k x_k∥_1`. Zero witnesses contribute nothing.
pub fn dual_norm_lower(c: &CoeffMap, witnesses: &[CoeffMap]) -> Result<Rational> {
    if witnesses.is_empty() {
        return Err(Error::EmptyWitnessList);
    }
    Ok(witnesses
        .iter()
        .filter(|w| !w.is_empty())
        .map(|w| pair(c.as_vec(), w.as_vec()).abs() / l1_norm(&expand(w)))
        .max()
        .unwrap_or_else(Rational::zero))
}

/// Single basis vectors `x_1..x_len` and every `z_n` with `2^{n+1}-2 <= len`.
pub fn builtin_witnesses(len: usize) -> Vec<CoeffMap> {
    let mut out: Vec<CoeffMap> = (1..=len).map(|i| [(i, Rational::one())].into_iter().collect()).collect();
    let mut n = 1;
    while n <= GROWTH_CAP && nodes_through_level(n) <= len {
        out.push(level_weights(n));
        n += 1;
    }
    out
}

pub fn growth_table(n_max: u32) -> Result<Vec<GrowthRow>> {
    check_n(n_max)?;
    (1..=n_max).map(dual_sum_lower_bound).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactDualNorm {
    pub value: Rational,
    /// A maximizing vertex of the unit ball of `F_N`, in basis coordinates.
    pub vertex: CoeffMap,
    pub vertices_examined: usize,
}

/// Kernel of a `(n-1) × n` rational matrix when it has rank `n - 1`.
fn one_dim_kernel(mut rows: Vec<Vec<Rational>>, n: usize) -> Option<Vec<Rational>> {
    let mut pivots = Vec::with_capacity(rows.len());
    let mut r = 0;
    for col in 0..n {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = Rational::one() / rows[r][col].clone();
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                for j in 0..n {
                    let delta = &f * &rows[r][j];
                    rows[i][j] -= delta;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if pivots.len() + 1 != n {
        return None;
    }
    let free = (0..n).find(|c| !pivots.contains(c)).expect("one free column");
    let mut d = vec![Rational::zero(); n];
    d[free] = Rational::one();
    for (row, &pc) in pivots.iter().enumerate() {
        d[pc] = -rows[row][free].clone();
    }
    Some(d)
}

/// `sup { |Σ c_i a_i| : ∥Σ_{i <= N} a_i x_i∥_1 <= 1 }`, exactly.
///
/// A point `a` of the unit ball is extreme exactly when the coordinates where
/// `Σ a_i x_i` vanishes pin `a` down to a line, so every vertex is found by
/// choosing `N - 1` vanishing coordinates among the `2N + 2` the span touches
/// and normalizing the kernel direction.
pub fn exact_dual_norm(c: &CoeffMap, big_n: usize) -> Result<ExactDualNorm> {
    if big_n == 0 {
        return Err(Error::NonPositiveIndex(0));
    }
    if big_n > EXACT_DUAL_CAP {
        return Err(Error::TooLarge { what: "N", value: big_n, cap: EXACT_DUAL_CAP });
    }
    if let Some(i) = c.max_index().filter(|&i| i > big_n) {
        return Err(Error::PreconditionViolated(format!("coefficient index {i} exceeds N = {big_n}")));
    }
    let dim = 2 * big_n + 2;
    // rows[j][i] = x_{i+1}(j+1)
    let rows: Vec<Vec<Rational>> = (1..=dim)
        .map(|j| {
            (1..=big_n)
                .map(|i| {
                    if j == i {
                        Rational::one()
                    } else if j == 2 * i + 1 || j == 2 * i + 2 {
                        Rational::new(-1, 2)
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();

    let mut best: Option<(Rational, CoeffMap)> = None;
    let mut examined = 0;
    let k = big_n - 1;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let chosen: Vec<Vec<Rational>> = idx.iter().map(|&j| rows[j].clone()).collect();
        if let Some(d) = one_dim_kernel(chosen, big_n) {
            examined += 1;
            let a: CoeffMap = d.iter().enumerate().map(|(i, v)| (i + 1, v.clone())).collect();
            let norm = l1_norm(&expand(&a));
            let value = pair(c.as_vec(), a.as_vec()).abs() / norm.clone();
            if best.as_ref().map_or(true, |(b, _)| value > *b) {
                let vertex: CoeffMap = a.iter().map(|(i, v)| (i, v / &norm)).collect();
                best = Some((value, vertex));
            }
        }
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == pos - 1 + dim - k {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        idx[pos - 1] += 1;
        for q in pos..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
    let (value, vertex) = best.expect("the unit ball has vertices");
    Ok(ExactDualNorm { value, vertex, vertices_examined: examined })
}
