//! Finitely supported sequences over 1-based coordinates.
//!
//! A [`SparseVec`] stands for either an element of `l1` (norm [`l1_norm`]) or a
//! representative of an `l∞` functional (norm [`sup_norm`]). Zero entries are
//! never stored, so derived equality is exact equality of sequences.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub type IndexSet = BTreeSet<usize>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct SparseVec {
    coords: BTreeMap<usize, Rational>,
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from `(index, value)` pairs, summing repeated indices
    /// and dropping zeros. Rejects index 0.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Rational)>,
    {
        let mut v = SparseVec::new();
        for (j, c) in entries {
            if j == 0 {
                return Err(Error::NonPositiveIndex(0));
            }
            v.add_at(j, &c);
        }
        Ok(v)
    }

    /// Unit vector `e_j`.
    pub fn unit(j: usize) -> Self {
        assert!(j >= 1, "coordinates are 1-based");
        let mut coords = BTreeMap::new();
        coords.insert(j, Rational::one());
        SparseVec { coords }
    }

    pub fn get(&self, j: usize) -> Rational {
        self.coords.get(&j).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.coords.keys().next_back().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> + '_ {
        self.coords.iter().map(|(&j, c)| (j, c))
    }

    pub fn support(&self) -> IndexSet {
        self.coords.keys().copied().collect()
    }

    /// `self[j] += c`, removing the entry if it cancels.
    pub fn add_at(&mut self, j: usize, c: &Rational) {
        debug_assert!(j >= 1);
        if c.is_zero() {
            return;
        }
        match self.coords.get_mut(&j) {
            Some(cur) => {
                *cur += c;
                if cur.is_zero() {
                    self.coords.remove(&j);
                }
            }
            None => {
                self.coords.insert(j, c.clone());
            }
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, scale: &Rational, other: &SparseVec) {
        if scale.is_zero() {
            return;
        }
        for (j, c) in other.iter() {
            self.add_at(j, &(scale * c));
        }
    }

    pub fn scaled(&self, scale: &Rational) -> SparseVec {
        let mut out = SparseVec::new();
        out.add_scaled(scale, self);
        out
    }

    /// `Σ |v(j)|` over coordinates in `set` without materializing the restriction.
    pub fn l1_norm_on(&self, set: &IndexSet) -> Rational {
        if set.len() < self.coords.len() {
            set.iter()
                .filter_map(|j| self.coords.get(j))
                .map(Rational::abs)
                .sum()
        } else {
            self.coords
                .iter()
                .filter(|(j, _)| set.contains(j))
                .map(|(_, c)| c.abs())
                .sum()
        }
    }
}

impl<'de> Deserialize<'de> for SparseVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<usize, Rational>::deserialize(deserializer)?;
        SparseVec::from_entries(raw).map_err(serde::de::Error::custom)
    }
}

impl FromIterator<(usize, Rational)> for SparseVec {
    /// Panics on index 0; use [`SparseVec::from_entries`] for untrusted input.
    fn from_iter<I: IntoIterator<Item = (usize, Rational)>>(iter: I) -> Self {
        SparseVec::from_entries(iter).expect("coordinates are 1-based")
    }
}

/// `Σ_j |v(j)|`.
pub fn l1_norm(v: &SparseVec) -> Rational {
    v.coords.values().map(Rational::abs).sum()
}

/// `max_j |v(j)|`, zero for the empty vector.
pub fn sup_norm(v: &SparseVec) -> Rational {
    v.coords
        .values()
        .map(Rational::abs)
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Duality pairing `Σ_j f(j) v(j)`.
pub fn pair(f: &SparseVec, v: &SparseVec) -> Rational {
    let (small, large) = if f.len() <= v.len() { (f, v) } else { (v, f) };
    small
        .coords
        .iter()
        .filter_map(|(j, a)| large.coords.get(j).map(|b| a * b))
        .sum()
}

pub fn linear_combine<'a, I>(terms: I) -> SparseVec
where
    I: IntoIterator<Item = (&'a Rational, &'a SparseVec)>,
{
    let mut out = SparseVec::new();
    for (c, v) in terms {
        out.add_scaled(c, v);
    }
    out
}

/// `P_A v`: keeps the coordinates in `set`.
pub fn restrict(v: &SparseVec, set: &IndexSet) -> SparseVec {
    SparseVec {
        coords: v
            .coords
            .iter()
            .filter(|(j, _)| set.contains(j))
            .map(|(&j, c)| (j, c.clone()))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn sv(entries: &[(usize, i64, i64)]) -> SparseVec {
        entries.iter().map(|&(j, n, d)| (j, q(n, d))).collect()
    }

    fn x1() -> SparseVec {
        sv(&[(1, 1, 1), (3, -1, 2), (4, -1, 2)])
    }

    fn set(ix: &[usize]) -> IndexSet {
        ix.iter().copied().collect()
    }

    #[test]
    fn l1_norm_examples() {
        assert_eq!(l1_norm(&SparseVec::new()), Rational::zero());
        assert_eq!(l1_norm(&x1()), q(2, 1));
        assert_eq!(l1_norm(&sv(&[(1, 3, 2)])), q(3, 2));
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(sup_norm(&sv(&[(1, 1, 4), (3, 1, 2), (7, 1, 1)])), Rational::one());
        assert_eq!(sup_norm(&SparseVec::new()), Rational::zero());
        assert_eq!(sup_norm(&sv(&[(2, -5, 1)])), q(5, 1));
    }

    #[test]
    fn pair_examples() {
        assert_eq!(pair(&sv(&[(1, 1, 1)]), &x1()), Rational::one());
        assert_eq!(pair(&sv(&[(1, 1, 2), (3, 1, 1)]), &x1()), Rational::zero());
        assert_eq!(pair(&SparseVec::new(), &x1()), Rational::zero());
    }

    #[test]
    fn linear_combine_examples() {
        let e1 = sv(&[(1, 1, 1)]);
        let (one, minus) = (Rational::one(), q(-1, 1));
        assert!(linear_combine([(&one, &e1), (&minus, &e1)]).is_empty());

        let x3 = sv(&[(3, 1, 1), (7, -1, 2), (8, -1, 2)]);
        let x4 = sv(&[(4, 1, 1), (9, -1, 2), (10, -1, 2)]);
        let got = linear_combine([(&one, &x1()), (&one, &x3), (&one, &x4)]);
        let want = sv(&[
            (1, 1, 1),
            (3, 1, 2),
            (4, 1, 2),
            (7, -1, 2),
            (8, -1, 2),
            (9, -1, 2),
            (10, -1, 2),
        ]);
        assert_eq!(got, want);

        let two = q(2, 1);
        assert_eq!(linear_combine([(&two, &sv(&[(2, 1, 2)]))]), sv(&[(2, 1, 1)]));
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(restrict(&sv(&[(1, 1, 1), (3, 1, 2)]), &set(&[1])), sv(&[(1, 1, 1)]));
        assert!(restrict(&sv(&[(1, 1, 1)]), &set(&[])).is_empty());
        assert_eq!(restrict(&x1(), &set(&[3, 4])), sv(&[(3, -1, 2), (4, -1, 2)]));
    }

    #[test]
    fn zero_entries_are_dropped() {
        let v = SparseVec::from_entries([(2, Rational::zero()), (3, q(1, 2)), (3, q(-1, 2))]).unwrap();
        assert!(v.is_empty());
        assert_eq!(v.max_index(), None);
        assert!(SparseVec::from_entries([(0, Rational::one())]).is_err());
    }

    #[test]
    fn serialization_format() {
        let s = serde_json::to_string(&x1()).unwrap();
        assert_eq!(s, r#"{"1":"1","3":"-1/2","4":"-1/2"}"#);
        let back: SparseVec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x1());
        // keys sort numerically, not lexically
        let v = sv(&[(10, 1, 1), (9, 1, 1)]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"9":"1","10":"1"}"#);
        assert!(serde_json::from_str::<SparseVec>(r#"{"0":"1"}"#).is_err());
        assert!(serde_json::from_str::<SparseVec>(r#"{"1":"x"}"#).is_err());
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-20i64..=20, 1i64..=16).prop_map(|(n, d)| Rational::new(n, d))
    }

    fn arb_vec() -> impl Strategy<Value = SparseVec> {
        proptest::collection::vec((1usize..30, arb_rational()), 0..12)
            .prop_map(|e| SparseVec::from_entries(e).unwrap())
    }

    proptest! {
        #[test]
        fn norms_ordered(v in arb_vec()) {
            let l1 = l1_norm(&v);
            let sup = sup_norm(&v);
            prop_assert!(l1 >= sup);
            prop_assert!(sup >= Rational::zero());
            prop_assert_eq!(l1.is_zero(), v.is_empty());
            prop_assert_eq!(sup.is_zero(), v.is_empty());
        }

        #[test]
        fn restriction_splits_norm(v in arb_vec(), a in proptest::collection::btree_set(1usize..30, 0..15),
                                   b in proptest::collection::btree_set(1usize..30, 0..15)) {
            let b: IndexSet = b.difference(&a).copied().collect();
            let union: IndexSet = a.union(&b).copied().collect();
            prop_assert_eq!(
                l1_norm(&restrict(&v, &a)) + l1_norm(&restrict(&v, &b)),
                l1_norm(&restrict(&v, &union))
            );
            prop_assert_eq!(v.l1_norm_on(&a), l1_norm(&restrict(&v, &a)));
        }

        #[test]
        fn triangle_inequality(u in arb_vec(), v in arb_vec()) {
            let one = Rational::one();
            let sum = linear_combine([(&one, &u), (&one, &v)]);
            prop_assert!(l1_norm(&sum) <= l1_norm(&u) + l1_norm(&v));
        }

        #[test]
        fn pairing_is_bilinear(f in arb_vec(), u in arb_vec(), v in arb_vec(),
                               a in arb_rational(), b in arb_rational()) {
            let combo = linear_combine([(&a, &u), (&b, &v)]);
            prop_assert_eq!(pair(&f, &combo), &a * pair(&f, &u) + &b * pair(&f, &v));
        }

        #[test]
        fn serde_round_trip(v in arb_vec()) {
            let s = serde_json::to_string(&v).unwrap();
            let back: SparseVec = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, v);
        }
    }
}
