//! The Lindenstrauss basic sequence `x_i = e_i - (e_{2i+1} + e_{2i+2}) / 2` in
//! `l1` and the Holub–Retherford representatives `y_i*` of its coefficient
//! functionals.
//!
//! Coordinates form a binary forest: the children of `i` are `2i+1` and
//! `2i+2`, and the roots are 1 and 2. `x_i` couples node `i` with weight 1 to
//! its children with weight `-1/2`; `y_i*` puts weight `2^{-(j-1)}` on the
//! `j`-th node of the path from `i` up to its root.
//!
//! Notation clash: the literature writes both the path (here [`AlphaChain`])
//! and the expansion coefficients (here [`CoeffMap`]) with the letter alpha.
//! The two are unrelated.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::vector::{pair, IndexSet, SparseVec};

/// Coefficients `a_i` of a vector `Σ a_i x_i`, keyed by basis index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoeffMap(SparseVec);

impl CoeffMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Rational)>,
    {
        SparseVec::from_entries(entries).map(CoeffMap)
    }

    pub fn get(&self, i: usize) -> Rational {
        self.0.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> + '_ {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> IndexSet {
        self.0.support()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.max_index()
    }

    pub fn insert(&mut self, i: usize, c: Rational) {
        let old = self.0.get(i);
        self.0.add_at(i, &(c - old));
    }

    /// Coefficients on `set` only.
    pub fn restricted(&self, set: &IndexSet) -> CoeffMap {
        CoeffMap(crate::vector::restrict(&self.0, set))
    }

    /// Coefficients with index `<= n` (the partial-sum projection).
    pub fn truncated(&self, n: usize) -> CoeffMap {
        CoeffMap(self.0.iter().filter(|(i, _)| *i <= n).map(|(i, c)| (i, c.clone())).collect())
    }

    pub fn as_vec(&self) -> &SparseVec {
        &self.0
    }
}

impl FromIterator<(usize, Rational)> for CoeffMap {
    fn from_iter<I: IntoIterator<Item = (usize, Rational)>>(iter: I) -> Self {
        CoeffMap(iter.into_iter().collect())
    }
}

/// The path `i = α(1) > α(2) > ... > α(r) >= 1` with
/// `α(j) = α(j-1) - (⌊α(j-1)/2⌋ + 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlphaChain(Vec<usize>);

impl AlphaChain {
    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Validates a user-facing signed index.
pub fn positive(i: i64) -> Result<usize> {
    usize::try_from(i).ok().filter(|&i| i > 0).ok_or(Error::NonPositiveIndex(i))
}

/// `x_i`.
pub fn basis_vector(i: usize) -> Result<SparseVec> {
    if i == 0 {
        return Err(Error::NonPositiveIndex(0));
    }
    let half = Rational::new(-1, 2);
    Ok(SparseVec::from_entries([(i, Rational::one()), (2 * i + 1, half.clone()), (2 * i + 2, half)])
        .expect("indices are positive"))
}

/// The unique `i` with `j ∈ {2i+1, 2i+2}`; `None` for the roots 1 and 2.
pub fn parent(j: usize) -> Result<Option<usize>> {
    match j {
        0 => Err(Error::NonPositiveIndex(0)),
        1 | 2 => Ok(None),
        _ => Ok(Some((j - 1) / 2)),
    }
}

pub fn alpha_chain(i: usize) -> Result<AlphaChain> {
    if i == 0 {
        return Err(Error::NonPositiveIndex(0));
    }
    let mut entries = vec![i];
    let mut cur = i;
    loop {
        let step = cur / 2 + 1;
        if step >= cur {
            break;
        }
        cur -= step;
        entries.push(cur);
    }
    Ok(AlphaChain(entries))
}

/// `y_i* = Σ_j 2^{-(j-1)} e_{α_i(j)}`.
pub fn dual_vector(i: usize) -> Result<SparseVec> {
    let chain = alpha_chain(i)?;
    Ok(chain
        .entries()
        .iter()
        .enumerate()
        .map(|(j, &node)| (node, Rational::half_pow(j as u32)))
        .collect())
}

/// `Σ a_i x_i` in unit-vector coordinates.
pub fn expand(a: &CoeffMap) -> SparseVec {
    let mut out = SparseVec::new();
    for (i, c) in a.iter() {
        out.add_at(i, c);
        let half = c * Rational::new(-1, 2);
        out.add_at(2 * i + 1, &half);
        out.add_at(2 * i + 2, &half);
    }
    out
}

/// Recovers the coefficients of `v` against `x_1..x_n` through the dual
/// representatives and checks that they reproduce `v` exactly.
pub fn analyze(v: &SparseVec, n: usize) -> Result<CoeffMap> {
    let a: CoeffMap = (1..=n)
        .map(|i| (i, pair(&dual_vector(i).expect("i >= 1"), v)))
        .collect();
    let mut residual = expand(&a);
    residual.add_scaled(&Rational::from_integer(-1), v);
    if residual.is_empty() {
        Ok(a)
    } else {
        Err(Error::NotInSpan { n, residual_len: residual.len() })
    }
}

/// Tree depth: level 1 is `{1, 2}`, level `l` is `{2^l - 1, ..., 2^{l+1} - 2}`.
pub fn level(i: usize) -> Result<u32> {
    let mut cur = i;
    let mut depth = 1;
    while let Some(p) = parent(cur)? {
        cur = p;
        depth += 1;
    }
    Ok(depth)
}

/// Children of node `i`.
pub fn children(i: usize) -> [usize; 2] {
    [2 * i + 1, 2 * i + 2]
}

/// Number of nodes on levels `1..=n`, i.e. `2^{n+1} - 2`.
pub fn nodes_through_level(n: u32) -> usize {
    (1usize << (n + 1)) - 2
}

/// Level-halving weights `2^{1-level(i)}` on `1..=2^{n+1}-2`, i.e.
/// `1, 1, 1/2, 1/2, 1/2, 1/2, 1/4, ...`.
pub fn level_weights(n: u32) -> CoeffMap {
    (1..=nodes_through_level(n))
        .map(|i| (i, Rational::half_pow(level(i).expect("i >= 1") - 1)))
        .collect()
}

/// Lookup of the map `i -> y_i*` for the first `n` indices.
pub fn dual_table(n: usize) -> BTreeMap<usize, SparseVec> {
    (1..=n).map(|i| (i, dual_vector(i).expect("i >= 1"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::{l1_norm, sup_norm};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn sv(entries: &[(usize, i64, i64)]) -> SparseVec {
        entries.iter().map(|&(j, n, d)| (j, q(n, d))).collect()
    }

    fn cm(entries: &[(usize, i64, i64)]) -> CoeffMap {
        entries.iter().map(|&(j, n, d)| (j, q(n, d))).collect()
    }

    #[test]
    fn basis_vector_examples() {
        assert_eq!(basis_vector(1).unwrap(), sv(&[(1, 1, 1), (3, -1, 2), (4, -1, 2)]));
        assert_eq!(basis_vector(2).unwrap(), sv(&[(2, 1, 1), (5, -1, 2), (6, -1, 2)]));
        assert_eq!(basis_vector(10).unwrap(), sv(&[(10, 1, 1), (21, -1, 2), (22, -1, 2)]));
        assert_eq!(basis_vector(0), Err(Error::NonPositiveIndex(0)));
        assert_eq!(positive(-3), Err(Error::NonPositiveIndex(-3)));
    }

    #[test]
    fn parent_examples() {
        assert_eq!(parent(3).unwrap(), Some(1));
        assert_eq!(parent(4).unwrap(), Some(1));
        assert_eq!(parent(1).unwrap(), None);
        assert_eq!(parent(2).unwrap(), None);
        assert!(parent(0).is_err());
    }

    #[test]
    fn alpha_chain_examples() {
        assert_eq!(alpha_chain(7).unwrap().entries(), &[7, 3, 1]);
        assert_eq!(alpha_chain(5).unwrap().entries(), &[5, 2]);
        assert_eq!(alpha_chain(1).unwrap().entries(), &[1]);
        assert!(alpha_chain(0).is_err());
    }

    #[test]
    fn dual_vector_examples() {
        assert_eq!(dual_vector(8).unwrap(), sv(&[(1, 1, 4), (3, 1, 2), (8, 1, 1)]));
        assert_eq!(dual_vector(4).unwrap(), sv(&[(1, 1, 2), (4, 1, 1)]));
        assert_eq!(dual_vector(2).unwrap(), sv(&[(2, 1, 1)]));
        assert!(dual_vector(0).is_err());
    }

    #[test]
    fn expand_examples() {
        assert_eq!(expand(&cm(&[(1, 1, 1)])), sv(&[(1, 1, 1), (3, -1, 2), (4, -1, 2)]));
        assert_eq!(
            expand(&cm(&[(1, 1, 1), (3, 1, 2), (4, 1, 2)])),
            sv(&[(1, 1, 1), (7, -1, 4), (8, -1, 4), (9, -1, 4), (10, -1, 4)])
        );
        assert!(expand(&CoeffMap::new()).is_empty());
    }

    #[test]
    fn analyze_examples() {
        let a = cm(&[(2, 3, 1), (5, -1, 2)]);
        assert_eq!(analyze(&expand(&a), 5).unwrap(), a);
        assert!(matches!(analyze(&sv(&[(1, 1, 1)]), 4), Err(Error::NotInSpan { n: 4, .. })));
        assert_eq!(analyze(&SparseVec::new(), 1).unwrap(), CoeffMap::new());
    }

    #[test]
    fn level_examples() {
        assert_eq!(level(1).unwrap(), 1);
        assert_eq!(level(2).unwrap(), 1);
        assert_eq!(level(6).unwrap(), 2);
        assert_eq!(level(7).unwrap(), 3);
        assert!(level(0).is_err());
    }

    #[test]
    fn level_boundaries_match_closed_form() {
        for i in 1..5000usize {
            let l = level(i).unwrap();
            assert!((1usize << l) - 1 <= i && i <= (1usize << (l + 1)) - 2, "i={i} l={l}");
        }
    }

    #[test]
    fn biorthogonality() {
        let duals = dual_table(200);
        for (i, y) in &duals {
            for k in 1..=200 {
                let want = if *i == k { Rational::one() } else { Rational::zero() };
                assert_eq!(pair(y, &basis_vector(k).unwrap()), want, "i={i} k={k}");
            }
        }
    }

    #[test]
    fn chain_parent_coherence() {
        for i in 1..2000usize {
            let chain = alpha_chain(i).unwrap();
            let e = chain.entries();
            assert_eq!(e[0], i);
            assert!(e.windows(2).all(|w| w[0] > w[1]));
            for w in e.windows(2) {
                assert_eq!(parent(w[0]).unwrap(), Some(w[1]));
            }
            assert_eq!(parent(*e.last().unwrap()).unwrap(), None);
            assert_eq!(chain.len() as u32, level(i).unwrap());
            for c in children(i) {
                assert_eq!(parent(c).unwrap(), Some(i));
            }
        }
    }

    #[test]
    fn normalization() {
        for i in 1..500usize {
            assert_eq!(l1_norm(&basis_vector(i).unwrap()), q(2, 1));
            assert_eq!(sup_norm(&dual_vector(i).unwrap()), Rational::one());
        }
    }

    fn arb_coeffs(max_index: usize) -> impl Strategy<Value = CoeffMap> {
        proptest::collection::vec((1usize..=max_index, -8i64..=8, 0u32..4), 0..14).prop_map(|e| {
            e.into_iter()
                .map(|(i, n, k)| (i, Rational::new(n, 1 << k)))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn analyze_inverts_expand(a in arb_coeffs(40)) {
            let n = a.max_index().unwrap_or(1);
            prop_assert_eq!(analyze(&expand(&a), n).unwrap(), a);
        }

        #[test]
        fn monotone_partial_sums(a in arb_coeffs(30)) {
            let full = l1_norm(&expand(&a));
            let m = a.max_index().unwrap_or(0);
            let mut prev = Rational::zero();
            for n in 1..=m {
                let part = l1_norm(&expand(&a.truncated(n)));
                prop_assert!(part >= prev);
                prop_assert!(part <= full);
                prev = part;
            }
        }
    }
}
