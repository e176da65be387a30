//! The two per-zone-pair unacceptability checks.
//!
//! Both inspect the monomials sitting in a zone pair. The minimum-order check
//! is a congruence argument: if one variable attains its least exponent at
//! exactly one element, the two zone sums land in different residue classes
//! mod the next power and can never be equal. The bigger-zone check builds a
//! map from one zone into the other under which the target zone's sum
//! strictly dominates, for every choice of primes.

use crate::algebra::{Monomial, VarId};
use crate::board::SquareForm;
use crate::zones::ZonePair;

use super::{FilterVerdict, MapDirection, Witness};

/// Outcome of the set-level minimum-order check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinOrderWitness {
    pub var: VarId,
    pub element: Monomial,
    pub min_exponent: u32,
}

/// Looks for a variable whose minimum exponent over both zones is attained
/// exactly once. Variables are scanned in alphabetical order; the first hit
/// wins.
pub fn min_order_check(x: &[Monomial], y: &[Monomial]) -> Option<MinOrderWitness> {
    let var_count = x.iter().chain(y).map(Monomial::var_count).max().unwrap_or(0);
    for i in 0..var_count {
        let var = VarId::new(i);
        let min = x.iter().chain(y).map(|m| m.exponent(var)).min()?;
        let mut attaining = x.iter().chain(y).filter(|m| m.exponent(var) == min);
        let element = attaining.next()?.clone();
        if attaining.next().is_none() {
            return Some(MinOrderWitness { var, element, min_exponent: min });
        }
    }
    None
}

/// Applies the minimum-order check to the entries of a zone pair.
pub fn min_order_filter(form: &SquareForm, zp: &ZonePair) -> FilterVerdict {
    match min_order_check(&zp.x_monomials(form), &zp.y_monomials(form)) {
        Some(w) => FilterVerdict::Unacceptable(Witness::MinOrder {
            var: w.var,
            element: w.element,
            min_exponent: w.min_exponent,
        }),
        None => FilterVerdict::NoInformation,
    }
}

/// True when `map` satisfies the bigger-zone conditions: every source maps
/// to a distinct-from-itself multiple, and a target with several preimages
/// must exceed each of them in every variable of its own support (that is,
/// each preimage divides target / radical(target)).
pub fn verify_bigger_zone_map(map: &[(Monomial, Monomial)]) -> bool {
    let mut by_target: Vec<(&Monomial, Vec<&Monomial>)> = Vec::new();
    for (x, y) in map {
        if x == y || !x.divides(y) {
            return false;
        }
        match by_target.iter_mut().find(|(t, _)| *t == y) {
            Some((_, xs)) => xs.push(x),
            None => by_target.push((y, vec![x])),
        }
    }
    for (y, xs) in by_target {
        if xs.len() >= 2 {
            let shrunk = y.shrink_by_radical();
            if !xs.iter().all(|x| x.divides(&shrunk)) {
                return false;
            }
        }
    }
    true
}

/// Searches for a total map from `x` into `y` meeting the bigger-zone
/// conditions, by backtracking over the divisibility edges. Candidate
/// targets are tried largest first (total degree, then exponent order);
/// sources are processed in slice order. Returns the map in source order.
pub fn bigger_zone_map(x: &[Monomial], y: &[Monomial]) -> Option<Vec<(Monomial, Monomial)>> {
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(x.len());
    for xm in x {
        let mut targets: Vec<usize> =
            (0..y.len()).filter(|&j| xm.divides(&y[j]) && *xm != y[j]).collect();
        targets.sort_by(|&a, &b| y[b].degree_then_lex(&y[a]));
        if targets.is_empty() {
            return None;
        }
        candidates.push(targets);
    }

    fn search(
        i: usize,
        x: &[Monomial],
        y: &[Monomial],
        candidates: &[Vec<usize>],
        assignment: &mut Vec<usize>,
        preimages: &mut Vec<Vec<usize>>,
    ) -> bool {
        if i == x.len() {
            return true;
        }
        'target: for &j in &candidates[i] {
            // A second arrival at a target re-checks every preimage against
            // target / radical(target).
            if !preimages[j].is_empty() {
                let shrunk = y[j].shrink_by_radical();
                if !x[i].divides(&shrunk) {
                    continue 'target;
                }
                if preimages[j].len() == 1 && !x[preimages[j][0]].divides(&shrunk) {
                    continue 'target;
                }
            }
            preimages[j].push(i);
            assignment.push(j);
            if search(i + 1, x, y, candidates, assignment, preimages) {
                return true;
            }
            assignment.pop();
            preimages[j].pop();
        }
        false
    }

    let mut assignment = Vec::with_capacity(x.len());
    let mut preimages = vec![Vec::new(); y.len()];
    if search(0, x, y, &candidates, &mut assignment, &mut preimages) {
        let map: Vec<(Monomial, Monomial)> = assignment
            .iter()
            .enumerate()
            .map(|(i, &j)| (x[i].clone(), y[j].clone()))
            .collect();
        debug_assert!(verify_bigger_zone_map(&map));
        Some(map)
    } else {
        None
    }
}

/// Applies the bigger-zone check to a zone pair, trying both orientations.
pub fn bigger_zone_filter(form: &SquareForm, zp: &ZonePair) -> FilterVerdict {
    let xs = zp.x_monomials(form);
    let ys = zp.y_monomials(form);
    if let Some(map) = bigger_zone_map(&xs, &ys) {
        return FilterVerdict::Unacceptable(Witness::BiggerZone {
            direction: MapDirection::XToY,
            map,
        });
    }
    if let Some(map) = bigger_zone_map(&ys, &xs) {
        return FilterVerdict::Unacceptable(Witness::BiggerZone {
            direction: MapDirection::YToX,
            map,
        });
    }
    FilterVerdict::NoInformation
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(strs: &[&str]) -> Vec<Monomial> {
        let mut v: Vec<Monomial> = strs.iter().map(|s| s.parse().unwrap()).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn worked_example_fires_with_the_expected_map() {
        let x = ms(&["a^3*b^5", "a^3*b^3*c^2", "a^4", "a*b^3*c^4"]);
        let y = ms(&["a^4*b^5", "b^2", "a*c", "a^6*b^4*c^5"]);
        let map = bigger_zone_map(&x, &y).unwrap();
        assert!(verify_bigger_zone_map(&map));
        for (xm, ym) in &map {
            if xm == &"a^3*b^5".parse::<Monomial>().unwrap() {
                assert_eq!(ym, &"a^4*b^5".parse::<Monomial>().unwrap());
            } else {
                assert_eq!(ym, &"a^6*b^4*c^5".parse::<Monomial>().unwrap());
            }
        }
    }

    #[test]
    fn no_divisibility_means_no_information() {
        assert_eq!(bigger_zone_map(&ms(&["a"]), &ms(&["b"])), None);
    }

    #[test]
    fn shared_target_allows_equal_shrunk_divisor() {
        // Both a and a^2 map onto a^3; both divide a^3 / rad = a^2.
        let map = bigger_zone_map(&ms(&["a", "a^2"]), &ms(&["a^3", "b"])).unwrap();
        assert_eq!(map.len(), 2);
        for (_, y) in &map {
            assert_eq!(y, &"a^3".parse::<Monomial>().unwrap());
        }
    }

    #[test]
    fn multi_preimage_violation_is_rejected() {
        // b^2 divides a*b^2 but not (a*b^2)/rad = b; a alone could map, but
        // the pair cannot share the target, and there is no second target.
        assert_eq!(bigger_zone_map(&ms(&["a", "b^2"]), &ms(&["a*b^2", "c"])), None);
        assert!(!verify_bigger_zone_map(&[
            ("a".parse().unwrap(), "a*b^2".parse().unwrap()),
            ("b^2".parse().unwrap(), "a*b^2".parse().unwrap()),
        ]));
    }

    #[test]
    fn min_order_unique_minimum_fires() {
        let w = min_order_check(&ms(&["a^2", "a^3"]), &ms(&["a", "a^4"])).unwrap();
        assert_eq!(w.var, VarId::new(0));
        assert_eq!(w.element, "a".parse().unwrap());
        assert_eq!(w.min_exponent, 1);
    }

    #[test]
    fn min_order_scans_variables_alphabetically() {
        // Variable a: exponents {1,0,1,1}, minimum attained once at "b".
        let w = min_order_check(&ms(&["a*b", "b"]), &ms(&["a", "a*b^2"])).unwrap();
        assert_eq!(w.var, VarId::new(0));
        assert_eq!(w.element, "b".parse().unwrap());
        assert_eq!(w.min_exponent, 0);
    }

    #[test]
    fn min_order_all_ties_is_silent() {
        assert_eq!(min_order_check(&ms(&["a", "b"]), &ms(&["1", "a*b"])), None);
    }
}
