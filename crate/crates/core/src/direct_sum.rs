//! The space `(Σ ⊕ F_n)_1` with `F_n = span{x_1..x_n}`, its natural basis,
//! and the greedy operator with respect to that basis.
//!
//! Elements are finite block sequences; block `n` holds coefficients against
//! `x_1..x_n`. The norm is the sum of the `l1` norms of the expanded blocks.
//! Basis vectors are enumerated block by block: `(1,1), (2,1), (2,2), (3,1), ...`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::greedy::{greedy_sets, validate_selection, GreedySelection, GreedySets};
use crate::lindenstrauss::{expand, CoeffMap};
use crate::rational::Rational;
use crate::vector::l1_norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GlobalIndex {
    pub block: usize,
    pub inner: usize,
}

impl GlobalIndex {
    pub fn new(block: usize, inner: usize) -> Result<GlobalIndex> {
        if block == 0 || inner == 0 || inner > block {
            return Err(Error::MalformedIndex(format!("({block}, {inner})")));
        }
        Ok(GlobalIndex { block, inner })
    }
}

/// Position of `g` in the block-major enumeration, starting at 1.
pub fn flatten(g: GlobalIndex) -> Result<usize> {
    let g = GlobalIndex::new(g.block, g.inner)?;
    Ok(g.block * (g.block - 1) / 2 + g.inner)
}

pub fn unflatten(k: usize) -> Result<GlobalIndex> {
    if k == 0 {
        return Err(Error::MalformedIndex("0".into()));
    }
    // largest n with n(n-1)/2 < k
    let mut n = (((8.0 * k as f64 + 1.0).sqrt() - 1.0) / 2.0) as usize;
    while n * (n + 1) / 2 < k {
        n += 1;
    }
    while n > 1 && (n - 1) * n / 2 >= k {
        n -= 1;
    }
    GlobalIndex::new(n, k - n * (n - 1) / 2)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct DSVec {
    blocks: BTreeMap<usize, CoeffMap>,
}

impl DSVec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops empty blocks; rejects a block whose support leaves `1..=n`.
    pub fn from_blocks<I: IntoIterator<Item = (usize, CoeffMap)>>(blocks: I) -> Result<DSVec> {
        let mut out = BTreeMap::new();
        for (n, c) in blocks {
            if n == 0 {
                return Err(Error::NonPositiveIndex(0));
            }
            if let Some(inner) = c.max_index().filter(|&i| i > n) {
                return Err(Error::InnerIndexOutOfRange { block: n, inner });
            }
            if !c.is_empty() {
                out.insert(n, c);
            }
        }
        Ok(DSVec { blocks: out })
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, &CoeffMap)> + '_ {
        self.blocks.iter().map(|(&n, c)| (n, c))
    }

    pub fn block(&self, n: usize) -> Option<&CoeffMap> {
        self.blocks.get(&n)
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.blocks.values().map(CoeffMap::len).sum()
    }

    /// Coefficients against the flattened natural basis.
    pub fn flattened(&self) -> CoeffMap {
        self.blocks
            .iter()
            .flat_map(|(&n, c)| {
                c.iter().map(move |(i, v)| {
                    (flatten(GlobalIndex { block: n, inner: i }).expect("validated"), v.clone())
                })
            })
            .collect()
    }

    pub fn from_flattened(a: &CoeffMap) -> Result<DSVec> {
        let mut blocks: BTreeMap<usize, CoeffMap> = BTreeMap::new();
        for (k, c) in a.iter() {
            let g = unflatten(k)?;
            blocks.entry(g.block).or_default().insert(g.inner, c.clone());
        }
        DSVec::from_blocks(blocks)
    }
}

impl<'de> Deserialize<'de> for DSVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<usize, CoeffMap>::deserialize(deserializer)?;
        DSVec::from_blocks(raw).map_err(serde::de::Error::custom)
    }
}

/// `Σ_n ∥expand(block n)∥_1`.
pub fn ds_norm(y: &DSVec) -> Rational {
    y.blocks.values().map(|c| l1_norm(&expand(c))).sum()
}

/// Valid greedy sets with respect to the natural basis, in flattened indices.
/// The canonical set breaks ties by block, then by inner index.
pub fn ds_greedy_sets(y: &DSVec, m: usize) -> Result<GreedySets> {
    greedy_sets(&y.flattened(), m)
}

pub fn ds_greedy(y: &DSVec, m: usize) -> Result<DSVec> {
    let sets = ds_greedy_sets(y, m)?;
    ds_greedy_with(y, m, &sets.canonical)
}

/// `G_m y` for a given greedy set of flattened indices.
pub fn ds_greedy_with(y: &DSVec, m: usize, selection: &GreedySelection) -> Result<DSVec> {
    let flat = y.flattened();
    validate_selection(&flat, m, selection)?;
    DSVec::from_flattened(&flat.restricted(&selection.indices))
}

/// How many terms of each block a flattened selection keeps: `k(n)`.
pub fn block_counts(selection: &GreedySelection) -> Result<BTreeMap<usize, usize>> {
    let mut out = BTreeMap::new();
    for &k in &selection.indices {
        *out.entry(unflatten(k)?.block).or_insert(0) += 1;
    }
    Ok(out)
}

/// Checks that the restriction of `selection` to every block is a valid inner
/// greedy set of size `k(n)`, and that the sizes add up to `m`.
pub fn check_block_restrictions(y: &DSVec, m: usize, selection: &GreedySelection) -> Result<()> {
    let counts = block_counts(selection)?;
    let total: usize = counts.values().sum();
    if total != m {
        return Err(Error::InvalidSelection(format!("block counts sum to {total}, expected {m}")));
    }
    for (n, c) in y.blocks() {
        let inner: GreedySelection = GreedySelection::new(
            selection
                .indices
                .iter()
                .map(|&k| unflatten(k).expect("validated"))
                .filter(|g| g.block == n)
                .map(|g| g.inner)
                .collect(),
        );
        let k = counts.get(&n).copied().unwrap_or(0);
        validate_selection(c, k, &inner)
            .map_err(|e| Error::InvalidSelection(format!("block {n}: {e}")))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsQgCheck {
    pub ratio: Rational,
    pub greedy_norm: Rational,
    pub norm: Rational,
    pub block_counts: BTreeMap<usize, usize>,
}

/// `∥G_m y∥ / ∥y∥` for the canonical greedy set.
pub fn ds_qg_check(y: &DSVec, m: usize) -> Result<DsQgCheck> {
    if y.is_empty() {
        return Err(Error::EmptyVector);
    }
    let sets = ds_greedy_sets(y, m)?;
    let g = ds_greedy_with(y, m, &sets.canonical)?;
    let norm = ds_norm(y);
    let greedy_norm = ds_norm(&g);
    Ok(DsQgCheck {
        ratio: &greedy_norm / &norm,
        greedy_norm,
        norm,
        block_counts: block_counts(&sets.canonical)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{conditionality_witness, qg_constant, qg_ratio_detail};
    use crate::lindenstrauss::level_weights;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn cm(entries: &[(usize, i64, i64)]) -> CoeffMap {
        entries.iter().map(|&(j, n, d)| (j, q(n, d))).collect()
    }

    fn ds(blocks: Vec<(usize, CoeffMap)>) -> DSVec {
        DSVec::from_blocks(blocks).unwrap()
    }

    #[test]
    fn ds_norm_examples() {
        assert_eq!(ds_norm(&ds(vec![(2, cm(&[(1, 1, 1)])), (3, cm(&[(3, 1, 1)]))])), q(4, 1));
        assert_eq!(ds_norm(&DSVec::new()), Rational::zero());
        assert_eq!(ds_norm(&ds(vec![(1, cm(&[(1, 1, 1)]))])), q(2, 1));
        assert_eq!(ds_norm(&ds(vec![(5, cm(&[(1, 1, 1)]))])), q(2, 1));
    }

    #[test]
    fn inner_index_bound_enforced() {
        assert_eq!(
            DSVec::from_blocks([(2, cm(&[(3, 1, 1)]))]),
            Err(Error::InnerIndexOutOfRange { block: 2, inner: 3 })
        );
        assert!(serde_json::from_str::<DSVec>(r#"{"1":{"2":"1"}}"#).is_err());
        let v: DSVec = serde_json::from_str(r#"{"2":{"1":"1","2":"1/2"}}"#).unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"2":{"1":"1","2":"1/2"}}"#);
    }

    #[test]
    fn ds_greedy_examples() {
        let y = ds(vec![(2, cm(&[(1, 1, 1), (2, 1, 2)])), (3, cm(&[(1, 1, 4)]))]);
        assert_eq!(ds_greedy(&y, 2).unwrap(), ds(vec![(2, cm(&[(1, 1, 1), (2, 1, 2)]))]));
        assert!(ds_greedy(&y, 0).unwrap().is_empty());
        assert_eq!(ds_greedy(&y, 3).unwrap(), y);
        assert!(matches!(ds_greedy(&y, 4), Err(Error::MTooLarge { .. })));
    }

    #[test]
    fn ds_qg_examples() {
        let y = ds(vec![(2, cm(&[(1, 1, 1), (2, 1, 1)])), (4, cm(&[(1, 1, 1), (2, 1, 1)]))]);
        let c = ds_qg_check(&y, 2).unwrap();
        assert_eq!(c.ratio, q(1, 2));
        assert_eq!(c.block_counts, BTreeMap::from([(2, 2)]));

        // single block agrees with the base greedy ratio on the canonical set
        let a = cm(&[(1, 1, 1), (3, 1, 2), (4, -1, 2), (7, 1, 4)]);
        let y = ds(vec![(9, a.clone())]);
        for m in 0..=a.len() {
            let base = qg_ratio_detail(&a, m).unwrap();
            let canon = crate::greedy::greedy_sets(&a, m).unwrap().canonical;
            let want = l1_norm(&expand(&a.restricted(&canon.indices))) / l1_norm(&expand(&a));
            assert_eq!(ds_qg_check(&y, m).unwrap().ratio, want);
            assert!(base.0 >= want);
        }
    }

    #[test]
    fn flatten_examples() {
        assert_eq!(flatten(GlobalIndex { block: 1, inner: 1 }).unwrap(), 1);
        assert_eq!(flatten(GlobalIndex { block: 3, inner: 2 }).unwrap(), 5);
        assert_eq!(unflatten(5).unwrap(), GlobalIndex { block: 3, inner: 2 });
        assert!(flatten(GlobalIndex { block: 2, inner: 3 }).is_err());
        assert!(unflatten(0).is_err());
        let mut expect = Vec::new();
        for n in 1..200 {
            for i in 1..=n {
                expect.push(GlobalIndex { block: n, inner: i });
            }
        }
        for k in 1..=10_000 {
            let g = unflatten(k).unwrap();
            assert_eq!(g, expect[k - 1]);
            assert_eq!(flatten(g).unwrap(), k);
        }
    }

    #[test]
    fn conditionality_transfers_to_blocks() {
        for n in 1..=5u32 {
            let weights = level_weights(n);
            let len = weights.len();
            let signed: CoeffMap = weights
                .iter()
                .map(|(i, w)| (i, if crate::lindenstrauss::level(i).unwrap() % 2 == 0 { w.clone() } else { -w }))
                .collect();
            for block in [len, len + 3] {
                let num = ds_norm(&ds(vec![(block, signed.clone())]));
                let den = ds_norm(&ds(vec![(block, weights.clone())]));
                assert_eq!(num / den, conditionality_witness(n).unwrap().ratio);
            }
        }
    }

    fn arb_dsvec() -> impl Strategy<Value = DSVec> {
        proptest::collection::btree_map(
            1usize..=12,
            proptest::collection::vec((0usize..100, -4i64..=4, 0u32..3), 1..6),
            1..6,
        )
        .prop_map(|blocks| {
            DSVec::from_blocks(blocks.into_iter().map(|(n, entries)| {
                let c: CoeffMap = entries
                    .into_iter()
                    .map(|(i, v, k)| (i % n + 1, Rational::new(v, 1 << k)))
                    .collect();
                (n, c)
            }))
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn norm_is_additive(y in arb_dsvec()) {
            let parts: Rational = y.blocks().map(|(n, c)| ds_norm(&ds(vec![(n, c.clone())]))).sum();
            prop_assert_eq!(ds_norm(&y), parts);
        }

        #[test]
        fn greedy_restricts_to_blocks(y in arb_dsvec()) {
            for m in 0..=y.support_size() {
                let sets = ds_greedy_sets(&y, m).unwrap();
                prop_assert!(check_block_restrictions(&y, m, &sets.canonical).is_ok());
                if let Some(all) = sets.all {
                    for s in &all {
                        prop_assert!(check_block_restrictions(&y, m, s).is_ok());
                        let g = ds_greedy_with(&y, m, s).unwrap();
                        prop_assert!(ds_norm(&g) <= qg_constant() * ds_norm(&y));
                    }
                }
                if !y.is_empty() {
                    prop_assert!(ds_qg_check(&y, m).unwrap().ratio <= qg_constant());
                }
            }
        }

        #[test]
        fn flatten_round_trip(y in arb_dsvec()) {
            prop_assert_eq!(DSVec::from_flattened(&y.flattened()).unwrap(), y);
        }
    }
}
