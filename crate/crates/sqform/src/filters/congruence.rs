//! Congruence extraction from zone pairs, and a bounded residue solver that
//! refutes candidate prime values one at a time.
//!
//! If an evaluated form is additive, a zone pair's sums are equal, hence
//! congruent mod any power of any variable's value. Dropping the terms
//! divisible by `v^k` from both sides leaves a congruence between two small
//! monomial sums mod `v^k`. Collecting these over many zone pairs and asking
//! whether *any* residues of the other variables can satisfy them all is a
//! finite check per candidate value of `v` — a refuted candidate can never
//! make the form additive. The sweep is explicitly bounded: a verdict only
//! speaks for the candidate set it was given.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::algebra::{evaluate, Monomial, PrimeAssignment, VarId};
use crate::board::SquareForm;
use crate::zones::{enumerate_zone_pairs, ZonePair};

use super::{FilterError, FilterVerdict, PrimeConstraintSet, Witness};

/// A derived congruence: under any additive evaluation, the sums of the two
/// monomial lists are congruent mod `modulus_var ^ modulus_power`. No
/// monomial on either side carries `modulus_var` to the modulus power or
/// higher.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Congruence {
    pub modulus_var: VarId,
    pub modulus_power: u32,
    pub lhs: Vec<Monomial>,
    pub rhs: Vec<Monomial>,
}

impl Congruence {
    /// A congruence with identical sides says nothing.
    pub fn is_trivial(&self) -> bool {
        self.lhs == self.rhs
    }

    /// Variables other than the modulus variable appearing on either side.
    pub fn free_vars(&self) -> BTreeSet<VarId> {
        self.lhs
            .iter()
            .chain(&self.rhs)
            .flat_map(Monomial::support)
            .filter(|&v| v != self.modulus_var)
            .collect()
    }

    /// Checks the congruence numerically under a full prime assignment.
    pub fn holds_under(&self, assignment: &PrimeAssignment) -> bool {
        let modulus = assignment
            .get(self.modulus_var)
            .expect("assignment covers modulus variable")
            .pow(self.modulus_power);
        let side = |ms: &[Monomial]| -> BigUint {
            ms.iter().fold(BigUint::zero(), |acc, m| {
                acc + evaluate(m, assignment).expect("assignment covers congruence")
            }) % &modulus
        };
        side(&self.lhs) == side(&self.rhs)
    }
}

fn render_side(f: &mut fmt::Formatter<'_>, side: &[Monomial]) -> fmt::Result {
    if side.is_empty() {
        return write!(f, "0");
    }
    for (i, m) in side.iter().enumerate() {
        if i > 0 {
            write!(f, " + ")?;
        }
        write!(f, "{m}")?;
    }
    Ok(())
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render_side(f, &self.lhs)?;
        write!(f, " = ")?;
        render_side(f, &self.rhs)?;
        write!(f, " (mod {}", self.modulus_var)?;
        if self.modulus_power > 1 {
            write!(f, "^{}", self.modulus_power)?;
        }
        write!(f, ")")
    }
}

/// Keeps, from each side of a zone pair, the entries whose `v`-exponent is
/// below `k`; the dropped entries are divisible by `v^k`, so additivity
/// forces the kept sums to agree mod `v^k`. Sides are sorted; both may be
/// empty (a vacuous congruence).
pub fn extract_congruence(form: &SquareForm, zp: &ZonePair, v: VarId, k: u32) -> Congruence {
    let keep = |ms: Vec<Monomial>| -> Vec<Monomial> {
        ms.into_iter().filter(|m| m.exponent(v) < k).collect()
    };
    Congruence {
        modulus_var: v,
        modulus_power: k,
        lhs: keep(zp.x_monomials(form)),
        rhs: keep(zp.y_monomials(form)),
    }
}

/// Extracts, deduplicates, and sorts the nontrivial congruences for `v` over
/// all zone pairs with collections of at most `max_strips` strips and all
/// modulus powers up to `max_power`. Swapped sides count as the same
/// congruence.
pub fn collect_congruences(
    form: &SquareForm,
    v: VarId,
    max_strips: usize,
    max_power: u32,
) -> Vec<Congruence> {
    let mut set: BTreeSet<Congruence> = BTreeSet::new();
    for zp in enumerate_zone_pairs(form.n(), max_strips) {
        for k in 1..=max_power {
            let mut c = extract_congruence(form, &zp, v, k);
            if c.is_trivial() {
                continue;
            }
            if c.rhs < c.lhs {
                std::mem::swap(&mut c.lhs, &mut c.rhs);
            }
            set.insert(c);
        }
    }
    set.into_iter().collect()
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u32, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Residue solver for one candidate value `p` of the modulus variable.
struct ResidueSearch<'a> {
    congruences: &'a [Congruence],
    /// Free variables in decision order.
    order: Vec<VarId>,
    /// For each congruence, the decision depth after which its support is
    /// fully assigned (0 = checkable before any decision).
    ready_at: Vec<usize>,
    p: u64,
    /// p^K for the largest modulus power in play; residues live mod this.
    residue_modulus: u64,
}

impl ResidueSearch<'_> {
    fn congruence_holds(&self, c: &Congruence, residues: &[u64]) -> bool {
        let modulus = pow_mod_exact(self.p, c.modulus_power);
        let eval_side = |side: &[Monomial]| -> u64 {
            let mut sum = 0u64;
            for m in side {
                let mut term = pow_mod(self.p, m.exponent(c.modulus_var), modulus);
                for v in m.support() {
                    if v == c.modulus_var {
                        continue;
                    }
                    let idx = self.order.iter().position(|&w| w == v).expect("ordered var");
                    term = mul_mod(term, pow_mod(residues[idx], m.exponent(v), modulus), modulus);
                }
                sum = (sum + term) % modulus;
            }
            sum
        };
        eval_side(&c.lhs) == eval_side(&c.rhs)
    }

    fn satisfiable_from(&self, depth: usize, residues: &mut Vec<u64>) -> bool {
        for (ci, c) in self.congruences.iter().enumerate() {
            if self.ready_at[ci] == depth && !self.congruence_holds(c, residues) {
                return false;
            }
        }
        if depth == self.order.len() {
            return true;
        }
        // Values of primes distinct from p are exactly the units mod p^K.
        for r in 1..self.residue_modulus {
            if r % self.p == 0 {
                continue;
            }
            residues.push(r);
            if self.satisfiable_from(depth + 1, residues) {
                residues.pop();
                return true;
            }
            residues.pop();
        }
        false
    }
}

fn pow_mod_exact(p: u64, k: u32) -> u64 {
    p.checked_pow(k).expect("modulus power within u64")
}

fn satisfiable(congruences: &[Congruence], p: u64) -> bool {
    let max_power = congruences.iter().map(|c| c.modulus_power).max().unwrap_or(1);
    let residue_modulus = pow_mod_exact(p, max_power);

    // Decide variables in the order the smallest-support congruences
    // introduce them, so refutations happen near the root of the search.
    let mut by_support: Vec<&Congruence> = congruences.iter().collect();
    by_support.sort_by_key(|c| (c.free_vars().len(), *c));
    let mut order: Vec<VarId> = Vec::new();
    for c in by_support {
        for v in c.free_vars() {
            if !order.contains(&v) {
                order.push(v);
            }
        }
    }
    let ready_at: Vec<usize> = congruences
        .iter()
        .map(|c| {
            c.free_vars()
                .iter()
                .map(|v| order.iter().position(|w| w == v).expect("ordered var") + 1)
                .max()
                .unwrap_or(0)
        })
        .collect();

    let search = ResidueSearch { congruences, order, ready_at, p, residue_modulus };
    search.satisfiable_from(0, &mut Vec::new())
}

/// Sweeps the candidate values of `v`, pruning every candidate whose
/// congruence system is unsatisfiable over residues of the other variables.
///
/// An empty survivor set is an unacceptability verdict *relative to the
/// candidate set* (recorded in the witness); survivors come back as a
/// constraint on `v`. With no nontrivial congruences the sweep says nothing.
pub fn congruence_csp(
    form: &SquareForm,
    v: VarId,
    candidates: &BTreeSet<u64>,
    max_strips: usize,
    max_power: u32,
) -> Result<FilterVerdict, FilterError> {
    if candidates.is_empty() {
        return Err(FilterError::EmptyCandidates);
    }
    let congruences = collect_congruences(form, v, max_strips, max_power);
    if congruences.is_empty() {
        return Ok(FilterVerdict::NoInformation);
    }
    let surviving: BTreeSet<u64> =
        candidates.iter().copied().filter(|&p| satisfiable(&congruences, p)).collect();
    if surviving.is_empty() {
        return Ok(FilterVerdict::Unacceptable(Witness::CongruenceCsp {
            var: v,
            candidates: candidates.iter().copied().collect(),
            congruences: congruences.len(),
        }));
    }
    let set = PrimeConstraintSet::single(v, surviving).expect("nonempty survivors");
    Ok(FilterVerdict::Constrained(set))
}
