//! Pairwise zones: disjoint cell regions forced to balance by the magic
//! conditions.
//!
//! Take two collections of strips with the same number of strips and no strip
//! in common. If, for every cell, the number of containing strips from the
//! first collection and from the second differ by at most one, the cells
//! split into a `+1` region X (covered once more by the first collection) and
//! a `-1` region Y (covered once more by the second). In any additive square
//! X and Y have equal sums; in any multiplicative square, equal products.
//! These are the *pairwise zones* of the two collections.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::Monomial;
use crate::board::{strips, Cell, ConcreteSquare, SquareForm, Strip};

/// A set of distinct strips for a given side length.
///
/// Collections are sets: a strip may not repeat within one collection.
/// (Within-collection repetition is never needed and would muddy the
/// count-difference rule, so it is rejected outright.)
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StripCollection {
    n: usize,
    strips: Vec<Strip>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CollectionError {
    #[error("strip {0} is out of range for side {1}")]
    OutOfRange(Strip, usize),
    #[error("strip {0} repeats within the collection")]
    Repeated(Strip),
    #[error("collection is empty")]
    Empty,
}

impl StripCollection {
    /// Builds a collection, sorting strips into the canonical report order.
    pub fn new(n: usize, strips_in: impl IntoIterator<Item = Strip>) -> Result<StripCollection, CollectionError> {
        let mut strips: Vec<Strip> = strips_in.into_iter().collect();
        if strips.is_empty() {
            return Err(CollectionError::Empty);
        }
        for &s in &strips {
            let ok = match s {
                Strip::Row(i) => i < n,
                Strip::Col(j) => j < n,
                _ => true,
            };
            if !ok {
                return Err(CollectionError::OutOfRange(s, n));
            }
        }
        strips.sort_unstable();
        if let Some(w) = strips.windows(2).find(|w| w[0] == w[1]) {
            return Err(CollectionError::Repeated(w[0]));
        }
        Ok(StripCollection { n, strips })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn strips(&self) -> &[Strip] {
        &self.strips
    }

    pub fn len(&self) -> usize {
        self.strips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strips.is_empty()
    }

    /// How many strips of this collection contain `cell`.
    fn count(&self, cell: Cell) -> usize {
        self.strips.iter().filter(|s| s.contains(cell, self.n)).count()
    }
}

impl fmt::Display for StripCollection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, s) in self.strips.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}

/// Why two collections fail to derive a zone pair.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZoneRejection {
    #[error("collections have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("strip {0} appears in both collections")]
    SharedStrip(Strip),
    #[error("cell {0:?} is covered {1} more times by one collection")]
    CountDifference(Cell, usize),
    #[error("derived zone {0} is empty")]
    EmptyZone(&'static str),
    #[error("collections are for different side lengths")]
    SideMismatch,
}

/// Two disjoint nonempty cell regions derived from two strip collections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZonePair {
    pub x: BTreeSet<Cell>,
    pub y: BTreeSet<Cell>,
    pub first: StripCollection,
    pub second: StripCollection,
}

impl ZonePair {
    pub fn n(&self) -> usize {
        self.first.n()
    }

    /// Monomials of a form at the X cells, sorted.
    pub fn x_monomials(&self, form: &SquareForm) -> Vec<Monomial> {
        let mut v: Vec<Monomial> = self.x.iter().map(|&c| form.get(c).clone()).collect();
        v.sort_unstable();
        v
    }

    /// Monomials of a form at the Y cells, sorted.
    pub fn y_monomials(&self, form: &SquareForm) -> Vec<Monomial> {
        let mut v: Vec<Monomial> = self.y.iter().map(|&c| form.get(c).clone()).collect();
        v.sort_unstable();
        v
    }
}

fn render_cells(f: &mut fmt::Formatter<'_>, cells: &BTreeSet<Cell>) -> fmt::Result {
    write!(f, "{{")?;
    for (i, (r, c)) in cells.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "({r},{c})")?;
    }
    write!(f, "}}")
}

impl fmt::Display for ZonePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X=")?;
        render_cells(f, &self.x)?;
        write!(f, " Y=")?;
        render_cells(f, &self.y)?;
        write!(f, " from A={} B={}", self.first, self.second)
    }
}

/// Derives the pairwise zones of two collections, or explains the rejection.
///
/// X collects the cells covered once more by `a` than by `b`; Y the reverse.
/// Rejections: size mismatch, a shared strip, any cell with count difference
/// above one, or an empty zone.
pub fn derive_zone_pair(
    a: &StripCollection,
    b: &StripCollection,
) -> Result<ZonePair, ZoneRejection> {
    if a.n() != b.n() {
        return Err(ZoneRejection::SideMismatch);
    }
    if a.len() != b.len() {
        return Err(ZoneRejection::SizeMismatch(a.len(), b.len()));
    }
    for s in a.strips() {
        if b.strips().contains(s) {
            return Err(ZoneRejection::SharedStrip(*s));
        }
    }
    let n = a.n();
    let mut x = BTreeSet::new();
    let mut y = BTreeSet::new();
    for r in 0..n {
        for c in 0..n {
            let ca = a.count((r, c));
            let cb = b.count((r, c));
            let diff = ca.abs_diff(cb);
            if diff > 1 {
                return Err(ZoneRejection::CountDifference((r, c), diff));
            }
            if ca == cb + 1 {
                x.insert((r, c));
            } else if cb == ca + 1 {
                y.insert((r, c));
            }
        }
    }
    if x.is_empty() {
        return Err(ZoneRejection::EmptyZone("X"));
    }
    if y.is_empty() {
        return Err(ZoneRejection::EmptyZone("Y"));
    }
    Ok(ZonePair { x, y, first: a.clone(), second: b.clone() })
}

/// Exact sum of a cell set's entries; 0 for the empty set.
pub fn zone_sum(square: &ConcreteSquare, zone: &BTreeSet<Cell>) -> BigUint {
    zone.iter().fold(BigUint::zero(), |acc, &cell| acc + square.get(cell))
}

/// Exact product of a cell set's entries; 1 for the empty set.
pub fn zone_product(square: &ConcreteSquare, zone: &BTreeSet<Cell>) -> BigUint {
    zone.iter().fold(BigUint::one(), |acc, &cell| acc * square.get(cell))
}

/// Componentwise exponent sum of a form's entries over a cell set.
pub fn zone_exponent_sum(form: &SquareForm, zone: &BTreeSet<Cell>) -> Monomial {
    zone.iter().fold(Monomial::one(), |acc, &cell| acc.mul(form.get(cell)))
}

fn subsets(items: &[Strip], size: usize) -> Vec<Vec<Strip>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(items: &[Strip], size: usize, start: usize, current: &mut Vec<Strip>, out: &mut Vec<Vec<Strip>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for i in start..items.len() {
            current.push(items[i]);
            rec(items, size, i + 1, current, out);
            current.pop();
        }
    }
    rec(items, size, 0, &mut current, &mut out);
    out
}

/// Enumerates every valid zone pair derivable from two equal-size, disjoint
/// strip collections with at most `max_strips` strips each.
///
/// Each unordered pair of collections is considered once (ordered by
/// collection size, then lexicographic strip order) and yields at most one
/// zone pair. The X/Y labels are canonicalized so that X contains the
/// lexicographically smallest cell of the union; the provenance collections
/// are swapped along with the labels, so every returned pair re-validates
/// under [`derive_zone_pair`].
pub fn enumerate_zone_pairs(n: usize, max_strips: usize) -> Vec<ZonePair> {
    assert!(max_strips >= 1 && max_strips <= 2 * n + 2);
    let all = strips(n);
    let mut out = Vec::new();
    for size in 1..=max_strips {
        let groups = subsets(&all, size);
        for (ai, a_strips) in groups.iter().enumerate() {
            let a = StripCollection::new(n, a_strips.iter().copied()).expect("valid subset");
            for b_strips in groups.iter().skip(ai + 1) {
                if a_strips.iter().any(|s| b_strips.contains(s)) {
                    continue;
                }
                let b = StripCollection::new(n, b_strips.iter().copied()).expect("valid subset");
                if let Ok(mut zp) = derive_zone_pair(&a, &b) {
                    let min_x = zp.x.iter().next().copied();
                    let min_y = zp.y.iter().next().copied();
                    if min_y < min_x {
                        zp = ZonePair {
                            x: zp.y,
                            y: zp.x,
                            first: zp.second,
                            second: zp.first,
                        };
                    }
                    out.push(zp);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coll(n: usize, strips: &[Strip]) -> StripCollection {
        StripCollection::new(n, strips.iter().copied()).unwrap()
    }

    #[test]
    fn two_rows_vs_two_columns_give_rectangles() {
        let a = coll(6, &[Strip::Row(0), Strip::Row(1)]);
        let b = coll(6, &[Strip::Col(0), Strip::Col(1)]);
        let zp = derive_zone_pair(&a, &b).unwrap();
        let x_expected: BTreeSet<Cell> =
            (0..2).flat_map(|r| (2..6).map(move |c| (r, c))).collect();
        let y_expected: BTreeSet<Cell> =
            (2..6).flat_map(|r| (0..2).map(move |c| (r, c))).collect();
        assert_eq!(zp.x, x_expected);
        assert_eq!(zp.y, y_expected);
    }

    #[test]
    fn corner_double_cover_is_tolerated() {
        // The corner cell sits in both strips of the first collection but in
        // exactly one of the second, so the count difference stays at one.
        let a = coll(6, &[Strip::Row(0), Strip::Col(0)]);
        let b = coll(6, &[Strip::MainDiag, Strip::AntiDiag]);
        let zp = derive_zone_pair(&a, &b).unwrap();
        assert!(zp.x.contains(&(0, 0)));
        assert!(!zp.x.contains(&(0, 5)) && !zp.y.contains(&(0, 0)));
        assert!(zp.y.contains(&(1, 1)));
    }

    #[test]
    fn rejections_are_distinguished() {
        let r0 = coll(5, &[Strip::Row(0)]);
        assert_eq!(
            derive_zone_pair(&r0, &r0),
            Err(ZoneRejection::SharedStrip(Strip::Row(0)))
        );
        let two = coll(5, &[Strip::Row(1), Strip::Row(2)]);
        assert_eq!(derive_zone_pair(&r0, &two), Err(ZoneRejection::SizeMismatch(1, 2)));
        // At n = 1 every strip covers the single cell, so both zones vanish.
        let a = coll(1, &[Strip::Row(0)]);
        let b = coll(1, &[Strip::Col(0)]);
        assert_eq!(derive_zone_pair(&a, &b), Err(ZoneRejection::EmptyZone("X")));
        // Two rows against the two diagonals double-cover nothing, but rows
        // {0,1} against {row 2, col 2} leave a count gap of two at (2,2)?
        // Build an actual gap: {R0,C0} vs {R0'}... use {R1,C1} vs {D+,D+}
        // is impossible (set), so check CountDifference via {R1,C1} doubled
        // coverage against two strips missing (1,1) entirely.
        let a = coll(5, &[Strip::Row(1), Strip::Col(1)]);
        let b = coll(5, &[Strip::Row(3), Strip::Col(3)]);
        assert_eq!(
            derive_zone_pair(&a, &b),
            Err(ZoneRejection::CountDifference((1, 1), 2))
        );
    }

    #[test]
    fn derive_is_symmetric() {
        let a = coll(6, &[Strip::Row(0), Strip::Row(1)]);
        let b = coll(6, &[Strip::Col(0), Strip::Col(1)]);
        let zp = derive_zone_pair(&a, &b).unwrap();
        let swapped = derive_zone_pair(&b, &a).unwrap();
        assert_eq!(zp.x, swapped.y);
        assert_eq!(zp.y, swapped.x);
    }

    #[test]
    fn singleton_enumeration_count_at_n5() {
        // 12 strips give C(12,2) = 66 unordered pairs and none are rejected.
        let pairs = enumerate_zone_pairs(5, 1);
        assert_eq!(pairs.len(), 66);
    }

    #[test]
    fn enumerated_pairs_revalidate() {
        for n in [5usize, 6] {
            for zp in enumerate_zone_pairs(n, 2) {
                let again = derive_zone_pair(&zp.first, &zp.second).unwrap();
                assert_eq!(again.x, zp.x);
                assert_eq!(again.y, zp.y);
                assert!(zp.x.is_disjoint(&zp.y));
                // canonical labeling: X owns the smallest cell
                assert!(zp.x.iter().next() < zp.y.iter().next());
            }
        }
    }

    #[test]
    fn enumeration_is_deterministic() {
        let a = enumerate_zone_pairs(6, 2);
        let b = enumerate_zone_pairs(6, 2);
        assert_eq!(a, b);
    }

    #[test]
    fn zone_aggregates_on_empty_sets() {
        let sq = ConcreteSquare::from_u64(2, &[1, 2, 3, 4]).unwrap();
        let empty = BTreeSet::new();
        assert_eq!(zone_sum(&sq, &empty), BigUint::zero());
        assert_eq!(zone_product(&sq, &empty), BigUint::one());
    }

    #[test]
    fn rendering_format() {
        let a = coll(2, &[Strip::Row(0)]);
        let b = coll(2, &[Strip::Col(0)]);
        let zp = derive_zone_pair(&a, &b).unwrap();
        assert_eq!(zp.to_string(), "X={(0,1)} Y={(1,0)} from A=[R0] B=[C0]");
    }
}
