//! Unacceptability filters and prime-value constraints for square forms.
//!
//! A square form is *acceptable* when some assignment of distinct primes to
//! its variables makes the evaluated square additive, and *unacceptable*
//! otherwise. Each filter here either proves unacceptability (returning a
//! machine-checkable witness), restricts the prime values a variable can
//! take, or reports nothing.
//!
//! The standard pipeline order is cheapest first: [`signature_filter`],
//! [`prime_power_filter`], [`four_times_filter`], then the per-zone-pair
//! checks ([`min_order_filter`], [`bigger_zone_filter`]), then
//! [`derive_prime_constraints`], then the bounded [`congruence_csp`]. The
//! order is configuration, not semantics; every filter is sound on its own.
//!
//! Several results are proved for squares with at least four columns, so the
//! pattern filters stand down (report nothing) below that side length; the
//! zone-pair checks are sound at every size.

mod congruence;
mod zone_filters;

pub use congruence::{collect_congruences, congruence_csp, extract_congruence, Congruence};
pub use zone_filters::{
    bigger_zone_filter, bigger_zone_map, min_order_check, min_order_filter, verify_bigger_zone_map,
    MinOrderWitness,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::json;
use thiserror::Error;

use crate::algebra::{Monomial, VarId};
use crate::board::{Cell, SquareForm, Strip};

/// Smallest side length at which the pattern filters (signature, prime
/// power, four times) are valid; below it they report nothing.
pub const PATTERN_FILTER_MIN_SIDE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FilterError {
    #[error("zones must be pairwise disjoint")]
    ZoneOverlap,
    #[error("zones must be nonempty")]
    EmptyZone,
    #[error("candidate set must be nonempty")]
    EmptyCandidates,
}

/// Direction of a bigger-zone mapping witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapDirection {
    XToY,
    YToX,
}

impl fmt::Display for MapDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapDirection::XToY => write!(f, "X->Y"),
            MapDirection::YToX => write!(f, "Y->X"),
        }
    }
}

/// The concrete objects that made a filter fire. Re-running the named
/// filter's condition on the witness always succeeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// A total map from the smaller zone into the bigger one: every element
    /// maps to a proper multiple, and any shared target dominates all of its
    /// preimages with strictly larger exponents on its whole support.
    BiggerZone { direction: MapDirection, map: Vec<(Monomial, Monomial)> },
    /// A variable attains its minimum exponent exactly once over both zones.
    MinOrder { var: VarId, element: Monomial, min_exponent: u32 },
    /// An entry whose cofactor (magic / entry) is a prime power (or 1).
    PrimePower { cell: Cell, entry: Monomial, cofactor: Monomial },
    /// A variable attains its minimum exponent fewer than four times.
    FourTimes { var: VarId, min_exponent: u32, cells: Vec<Cell> },
    /// The magic vector matches an always-unacceptable pattern.
    SignaturePattern { pattern: String, vars: Vec<VarId> },
    /// Fewer divisors than cells forces duplicate entries.
    DivisorShortage { divisors: u128, cells: usize },
    /// A prime-value bound left no admissible prime.
    PrimeValueEmpty { var: VarId, zones: usize, components: usize, bound: u64 },
    /// Merged per-variable constraints admit no injective prime choice.
    InfeasibleConstraints { sets: Vec<(VarId, Vec<u64>)> },
    /// Every candidate value for the variable was refuted by the congruence
    /// system; conclusive only over the stated candidate set.
    CongruenceCsp { var: VarId, candidates: Vec<u64>, congruences: usize },
}

impl Witness {
    pub fn lemma_name(&self) -> &'static str {
        match self {
            Witness::BiggerZone { .. } => "bigger_zone_filter",
            Witness::MinOrder { .. } => "min_order_filter",
            Witness::PrimePower { .. } => "prime_power_filter",
            Witness::FourTimes { .. } => "four_times_filter",
            Witness::SignaturePattern { .. } | Witness::DivisorShortage { .. } => {
                "signature_filter"
            }
            Witness::PrimeValueEmpty { .. } => "prime_value_bound",
            Witness::InfeasibleConstraints { .. } => "derive_prime_constraints",
            Witness::CongruenceCsp { .. } => "congruence_csp",
        }
    }

    /// JSON rendering with byte-stable (alphabetical) key order.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Witness::BiggerZone { direction, map } => json!({
                "direction": direction.to_string(),
                "map": map
                    .iter()
                    .map(|(x, y)| vec![x.to_string(), y.to_string()])
                    .collect::<Vec<_>>(),
            }),
            Witness::MinOrder { var, element, min_exponent } => json!({
                "element": element.to_string(),
                "min_exponent": min_exponent,
                "var": var.to_string(),
            }),
            Witness::PrimePower { cell, entry, cofactor } => json!({
                "cell": vec![cell.0, cell.1],
                "cofactor": cofactor.to_string(),
                "entry": entry.to_string(),
            }),
            Witness::FourTimes { var, min_exponent, cells } => json!({
                "cells": cells.iter().map(|c| vec![c.0, c.1]).collect::<Vec<_>>(),
                "count": cells.len(),
                "min_exponent": min_exponent,
                "var": var.to_string(),
            }),
            Witness::SignaturePattern { pattern, vars } => json!({
                "pattern": pattern,
                "vars": vars.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            }),
            Witness::DivisorShortage { divisors, cells } => json!({
                "cells": cells,
                "divisors": divisors.to_string(),
            }),
            Witness::PrimeValueEmpty { var, zones, components, bound } => json!({
                "bound": bound,
                "components": components,
                "var": var.to_string(),
                "zones": zones,
            }),
            Witness::InfeasibleConstraints { sets } => json!({
                "sets": sets
                    .iter()
                    .map(|(v, ps)| json!({"allowed": ps, "var": v.to_string()}))
                    .collect::<Vec<_>>(),
            }),
            Witness::CongruenceCsp { var, candidates, congruences } => json!({
                "candidates": candidates,
                "congruences": congruences,
                "var": var.to_string(),
            }),
        }
    }
}

/// Per-variable allowed prime values; a variable absent from the map may be
/// any prime. Finite sets are never empty: an intersection that would empty
/// one is reported instead of stored, so it can be promoted to an
/// unacceptability verdict.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrimeConstraintSet {
    allowed: BTreeMap<VarId, BTreeSet<u64>>,
}

impl PrimeConstraintSet {
    pub fn unconstrained() -> PrimeConstraintSet {
        PrimeConstraintSet::default()
    }

    pub fn single(var: VarId, primes: BTreeSet<u64>) -> Result<PrimeConstraintSet, VarId> {
        let mut set = PrimeConstraintSet::default();
        set.restrict(var, &primes)?;
        Ok(set)
    }

    /// Intersects the allowed set of `var` with `primes`. Errors with the
    /// variable when the result would be empty (constraints only ever
    /// shrink).
    pub fn restrict(&mut self, var: VarId, primes: &BTreeSet<u64>) -> Result<(), VarId> {
        let next: BTreeSet<u64> = match self.allowed.get(&var) {
            Some(current) => current.intersection(primes).copied().collect(),
            None => primes.clone(),
        };
        if next.is_empty() {
            return Err(var);
        }
        self.allowed.insert(var, next);
        Ok(())
    }

    pub fn merge(&mut self, other: &PrimeConstraintSet) -> Result<(), VarId> {
        for (&var, primes) in &other.allowed {
            self.restrict(var, primes)?;
        }
        Ok(())
    }

    /// The finite allowed set for `var`, or `None` for "any prime".
    pub fn allowed(&self, var: VarId) -> Option<&BTreeSet<u64>> {
        self.allowed.get(&var)
    }

    pub fn permits(&self, var: VarId, prime: u64) -> bool {
        self.allowed.get(&var).is_none_or(|set| set.contains(&prime))
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.allowed.keys().copied()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.allowed.is_empty()
    }

    /// Whether distinct primes can be chosen for all finitely-constrained
    /// variables simultaneously (variables allowed any prime never block).
    pub fn has_injective_choice(&self) -> bool {
        fn assign(vars: &[(&VarId, &BTreeSet<u64>)], used: &mut BTreeSet<u64>) -> bool {
            let Some(((_, set), rest)) = vars.split_first() else {
                return true;
            };
            for &p in set.iter() {
                if used.insert(p) {
                    if assign(rest, used) {
                        return true;
                    }
                    used.remove(&p);
                }
            }
            false
        }
        let mut vars: Vec<(&VarId, &BTreeSet<u64>)> = self.allowed.iter().collect();
        vars.sort_by_key(|(_, set)| set.len());
        assign(&vars, &mut BTreeSet::new())
    }

    /// One `CONSTRAIN <var> IN {p1,p2,...}` line per constrained variable.
    pub fn render_lines(&self) -> Vec<String> {
        self.allowed
            .iter()
            .map(|(var, primes)| {
                let list: Vec<String> = primes.iter().map(u64::to_string).collect();
                format!("CONSTRAIN {var} IN {{{}}}", list.join(","))
            })
            .collect()
    }

    fn witness_sets(&self) -> Vec<(VarId, Vec<u64>)> {
        self.allowed
            .iter()
            .map(|(&v, ps)| (v, ps.iter().copied().collect()))
            .collect()
    }
}

/// What a filter learned about a form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterVerdict {
    Unacceptable(Witness),
    Constrained(PrimeConstraintSet),
    NoInformation,
}

impl FilterVerdict {
    pub fn is_unacceptable(&self) -> bool {
        matches!(self, FilterVerdict::Unacceptable(_))
    }

    /// Report lines in the stable format: `UNACCEPTABLE <lemma> <json>`,
    /// `CONSTRAIN <var> IN {..}` per variable, or `NOINFO`.
    pub fn render_lines(&self) -> Vec<String> {
        match self {
            FilterVerdict::Unacceptable(w) => {
                vec![format!("UNACCEPTABLE {} {}", w.lemma_name(), w.to_json())]
            }
            FilterVerdict::Constrained(set) => set.render_lines(),
            FilterVerdict::NoInformation => vec!["NOINFO".to_string()],
        }
    }
}

/// All primes up to and including `bound`, by trial division (bounds here
/// are tiny).
pub fn primes_up_to(bound: u64) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    let mut n = 2u64;
    while n <= bound {
        if (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0) {
            out.insert(n);
        }
        n += 1;
    }
    out
}

/// Declares a magic vector unacceptable by its shape alone.
///
/// Patterns (side length at least 4): a single variable; two variables with
/// the smaller exponent at most 3; three variables with at least two unit
/// exponents. At any side length, a divisor count below the cell count
/// forces duplicate entries.
pub fn signature_filter(magic: &Monomial, n: usize) -> FilterVerdict {
    let positive: Vec<(VarId, u32)> = magic
        .support()
        .map(|v| (v, magic.exponent(v)))
        .collect();

    if n >= PATTERN_FILTER_MIN_SIDE {
        match positive.as_slice() {
            [(v, _)] => {
                return FilterVerdict::Unacceptable(Witness::SignaturePattern {
                    pattern: "a^n".to_string(),
                    vars: vec![*v],
                });
            }
            [(u, eu), (w, ew)] if *eu.min(ew) <= 3 => {
                return FilterVerdict::Unacceptable(Witness::SignaturePattern {
                    pattern: "a^n*b^m (1<=m<=3)".to_string(),
                    vars: vec![*u, *w],
                });
            }
            [(u, eu), (w, ew), (z, ez)]
                if [eu, ew, ez].into_iter().filter(|&&e| e == 1).count() >= 2 =>
            {
                return FilterVerdict::Unacceptable(Witness::SignaturePattern {
                    pattern: "a^n*b*c".to_string(),
                    vars: vec![*u, *w, *z],
                });
            }
            _ => {}
        }
    }

    let divisors = magic
        .exponents()
        .iter()
        .fold(1u128, |acc, &e| acc.saturating_mul(u128::from(e) + 1));
    if divisors < (n * n) as u128 {
        return FilterVerdict::Unacceptable(Witness::DivisorShortage {
            divisors,
            cells: n * n,
        });
    }
    FilterVerdict::NoInformation
}

/// Fires when some entry's cofactor (magic / entry) has at most one variable
/// in its support: a prime-power cofactor makes the row and column through
/// the entry a pair of zones of bare powers of one prime, and the cofactor 1
/// would force every other entry of those strips to be 1. Needs side length
/// at least 2.
pub fn prime_power_filter(form: &SquareForm) -> FilterVerdict {
    if form.n() < 2 {
        return FilterVerdict::NoInformation;
    }
    let n = form.n();
    for r in 0..n {
        for c in 0..n {
            let entry = form.get((r, c));
            let Some(cofactor) = form.magic().try_div(entry) else {
                continue;
            };
            if cofactor.support().count() <= 1 {
                return FilterVerdict::Unacceptable(Witness::PrimePower {
                    cell: (r, c),
                    entry: entry.clone(),
                    cofactor,
                });
            }
        }
    }
    FilterVerdict::NoInformation
}

/// Fires when some variable attains its minimum exponent fewer than four
/// times across the whole grid. Valid from side length 4 upward.
pub fn four_times_filter(form: &SquareForm) -> FilterVerdict {
    if form.n() < PATTERN_FILTER_MIN_SIDE {
        return FilterVerdict::NoInformation;
    }
    let n = form.n();
    for i in 0..form.var_count() {
        let var = VarId::new(i);
        let min = form
            .entries()
            .iter()
            .map(|m| m.exponent(var))
            .min()
            .expect("nonempty grid");
        let cells: Vec<Cell> = (0..n * n)
            .filter(|idx| form.entries()[*idx].exponent(var) == min)
            .map(|idx| (idx / n, idx % n))
            .collect();
        if cells.len() < 4 {
            return FilterVerdict::Unacceptable(Witness::FourTimes {
                var,
                min_exponent: min,
                cells,
            });
        }
    }
    FilterVerdict::NoInformation
}

/// The zones given by the rows of the square (additivity makes all their
/// sums equal).
pub fn zones_rows(form: &SquareForm) -> Vec<BTreeSet<Cell>> {
    let n = form.n();
    (0..n)
        .map(|r| Strip::Row(r).cells(n).into_iter().collect())
        .collect()
}

/// The zones through a cell: its row minus the cell, its column minus the
/// cell, and each long diagonal through the cell minus the cell. If the
/// square is additive, these all sum to (magic sum - cell value).
pub fn zones_through_cell(form: &SquareForm, cell: Cell) -> Vec<BTreeSet<Cell>> {
    let n = form.n();
    let mut strips_here = vec![Strip::Row(cell.0), Strip::Col(cell.1)];
    if Strip::MainDiag.contains(cell, n) {
        strips_here.push(Strip::MainDiag);
    }
    if Strip::AntiDiag.contains(cell, n) {
        strips_here.push(Strip::AntiDiag);
    }
    strips_here
        .into_iter()
        .map(|strip| {
            strip
                .cells(n)
                .into_iter()
                .filter(|&c| c != cell)
                .collect::<BTreeSet<Cell>>()
        })
        .collect()
}

/// Bounds the value of variable `v` from a family of equal-sum zones.
///
/// With `t` zones and `d` distinct non-`v` components across their union
/// (`d < t`), additivity forces `v <= ceil(d / (t - d))`; the verdict
/// constrains `v` to the primes within that bound, or is outright
/// unacceptability when no prime fits. With `d >= t` nothing is learned.
///
/// The caller must supply zones whose sums are forced equal by additivity
/// ([`zones_rows`] and [`zones_through_cell`] discharge this).
pub fn prime_value_bound(
    zone_list: &[BTreeSet<Cell>],
    form: &SquareForm,
    v: VarId,
) -> Result<FilterVerdict, FilterError> {
    if zone_list.iter().any(BTreeSet::is_empty) {
        return Err(FilterError::EmptyZone);
    }
    let mut union: BTreeSet<Cell> = BTreeSet::new();
    let mut total = 0usize;
    for zone in zone_list {
        total += zone.len();
        union.extend(zone.iter().copied());
    }
    if union.len() != total {
        return Err(FilterError::ZoneOverlap);
    }

    let t = zone_list.len();
    let components: BTreeSet<Monomial> =
        union.iter().map(|&cell| form.get(cell).without_var(v)).collect();
    let d = components.len();
    if d >= t {
        return Ok(FilterVerdict::NoInformation);
    }
    let bound = (d as u64).div_ceil((t - d) as u64);
    let primes = primes_up_to(bound);
    if primes.is_empty() {
        return Ok(FilterVerdict::Unacceptable(Witness::PrimeValueEmpty {
            var: v,
            zones: t,
            components: d,
            bound,
        }));
    }
    let set = PrimeConstraintSet::single(v, primes).expect("nonempty prime set");
    Ok(FilterVerdict::Constrained(set))
}

/// Cells on either long diagonal, each listed once.
fn diagonal_cells(n: usize) -> Vec<Cell> {
    let mut cells: BTreeSet<Cell> = Strip::MainDiag.cells(n).into_iter().collect();
    cells.extend(Strip::AntiDiag.cells(n));
    cells.into_iter().collect()
}

/// Returns the variables that can play "a" in a two-variable pattern
/// `a^n * b^k` for the given fixed `k`: every support variable whose
/// *partner* has exponent exactly `k`.
fn two_var_pattern_roles(m: &Monomial, k: u32) -> Vec<VarId> {
    let support: Vec<(VarId, u32)> = m.support().map(|v| (v, m.exponent(v))).collect();
    if support.len() != 2 {
        return Vec::new();
    }
    let mut roles = Vec::new();
    for (i, &(v, _)) in support.iter().enumerate() {
        let (_, partner_exp) = support[1 - i];
        if partner_exp == k {
            roles.push(v);
        }
    }
    roles
}

/// Variables that can play "a" in the three-variable pattern `a^n * b^2 * c`.
fn anb2c_pattern_roles(m: &Monomial) -> Vec<VarId> {
    let support: Vec<(VarId, u32)> = m.support().map(|v| (v, m.exponent(v))).collect();
    if support.len() != 3 {
        return Vec::new();
    }
    let mut roles = Vec::new();
    for (i, &(v, _)) in support.iter().enumerate() {
        let mut others: Vec<u32> =
            support.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &(_, e))| e).collect();
        others.sort_unstable();
        if others == [1, 2] {
            roles.push(v);
        }
    }
    roles
}

/// Applies every prime-value specialization the form's shape admits and
/// merges the results.
///
/// Sources: zones through each diagonal cell whose cofactor has the shape
/// `a^n*b` (and, at an odd center, also `a^n*b^2`), and the row zones when
/// the whole magic product has the shape `a^n*b^4`, `a^n*b^5`, or
/// `a^n*b^2*c`. Ambiguous patterns constrain every admissible labeling; an
/// empty merged set, or one admitting no choice of distinct primes, is
/// unacceptability.
pub fn derive_prime_constraints(form: &SquareForm) -> FilterVerdict {
    if form.n() < 2 {
        return FilterVerdict::NoInformation;
    }
    let n = form.n();
    let mut merged = PrimeConstraintSet::unconstrained();
    let mut any = false;

    let mut apply = |zones: &[BTreeSet<Cell>],
                     v: VarId,
                     merged: &mut PrimeConstraintSet,
                     any: &mut bool|
     -> Option<FilterVerdict> {
        match prime_value_bound(zones, form, v).expect("constructed zones are disjoint") {
            FilterVerdict::Unacceptable(w) => Some(FilterVerdict::Unacceptable(w)),
            FilterVerdict::Constrained(set) => {
                *any = true;
                if merged.merge(&set).is_err() {
                    let mut sets = merged.witness_sets();
                    sets.extend(set.witness_sets());
                    return Some(FilterVerdict::Unacceptable(Witness::InfeasibleConstraints {
                        sets,
                    }));
                }
                None
            }
            FilterVerdict::NoInformation => None,
        }
    };

    for cell in diagonal_cells(n) {
        let Some(cofactor) = form.magic().try_div(form.get(cell)) else {
            continue;
        };
        let zones = zones_through_cell(form, cell);
        if zones.iter().any(BTreeSet::is_empty) {
            continue;
        }
        let mut roles = two_var_pattern_roles(&cofactor, 1);
        let is_center = n % 2 == 1 && cell == (n / 2, n / 2);
        if is_center {
            roles.extend(two_var_pattern_roles(&cofactor, 2));
        }
        roles.sort_unstable();
        roles.dedup();
        for v in roles {
            if let Some(verdict) = apply(&zones, v, &mut merged, &mut any) {
                return verdict;
            }
        }
    }

    let row_zones = zones_rows(form);
    let mut whole_roles = two_var_pattern_roles(form.magic(), 4);
    whole_roles.extend(two_var_pattern_roles(form.magic(), 5));
    whole_roles.extend(anb2c_pattern_roles(form.magic()));
    whole_roles.sort_unstable();
    whole_roles.dedup();
    for v in whole_roles {
        if let Some(verdict) = apply(&row_zones, v, &mut merged, &mut any) {
            return verdict;
        }
    }

    if !any {
        return FilterVerdict::NoInformation;
    }
    if !merged.has_injective_choice() {
        return FilterVerdict::Unacceptable(Witness::InfeasibleConstraints {
            sets: merged.witness_sets(),
        });
    }
    FilterVerdict::Constrained(merged)
}

/// Which filters a pipeline run may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FilterName {
    Signature,
    PrimePower,
    FourTimes,
    MinOrder,
    BiggerZone,
    Constraints,
    CongruenceCsp,
}

impl FilterName {
    pub const ALL: [FilterName; 7] = [
        FilterName::Signature,
        FilterName::PrimePower,
        FilterName::FourTimes,
        FilterName::MinOrder,
        FilterName::BiggerZone,
        FilterName::Constraints,
        FilterName::CongruenceCsp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterName::Signature => "signature",
            FilterName::PrimePower => "prime_power",
            FilterName::FourTimes => "four_times",
            FilterName::MinOrder => "min_order",
            FilterName::BiggerZone => "bigger_zone",
            FilterName::Constraints => "constraints",
            FilterName::CongruenceCsp => "csp",
        }
    }

    pub fn parse(s: &str) -> Option<FilterName> {
        FilterName::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

/// Pipeline configuration. `csp_bound` enables the congruence solver and
/// caps its fallback candidate primes for variables no constraint pinned
/// down.
#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub max_strips: usize,
    pub max_power: u32,
    pub csp_bound: Option<u64>,
    pub only: Option<BTreeSet<FilterName>>,
}

impl Default for FilterConfig {
    fn default() -> FilterConfig {
        FilterConfig { max_strips: 2, max_power: 1, csp_bound: None, only: None }
    }
}

impl FilterConfig {
    fn enabled(&self, name: FilterName) -> bool {
        self.only.as_ref().is_none_or(|set| set.contains(&name))
    }
}

/// One filter's outcome within a pipeline run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterEvent {
    pub filter: &'static str,
    pub verdict: FilterVerdict,
}

/// The outcome of a full pipeline run over one form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterReport {
    pub events: Vec<FilterEvent>,
    /// Congruences shown to the solver, when it ran.
    pub congruences: Vec<Congruence>,
    /// Merged surviving constraints (meaningful when not unacceptable).
    pub constraints: PrimeConstraintSet,
    pub unacceptable: bool,
}

impl FilterReport {
    /// Stable report lines: congruences first (when the solver ran), then
    /// each informative verdict, or a single `NOINFO`.
    pub fn render_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> =
            self.congruences.iter().map(|c| format!("CONGRUENCE {c}")).collect();
        let mut informative = false;
        for event in &self.events {
            if matches!(event.verdict, FilterVerdict::NoInformation) {
                continue;
            }
            informative = true;
            lines.extend(event.verdict.render_lines());
        }
        if !informative {
            lines.push("NOINFO".to_string());
        }
        lines
    }
}

/// Runs the filters in pipeline order, stopping at the first
/// unacceptability verdict. Constraint verdicts merge as they appear; a
/// merge that empties a variable's allowed set is promoted to
/// unacceptability.
pub fn run_filter_pipeline(form: &SquareForm, config: &FilterConfig) -> FilterReport {
    let mut events = Vec::new();
    let mut congruences = Vec::new();
    let mut constraints = PrimeConstraintSet::unconstrained();

    let finish = |events: Vec<FilterEvent>, congruences: Vec<Congruence>, constraints: PrimeConstraintSet| {
        let unacceptable = events.iter().any(|e| e.verdict.is_unacceptable());
        FilterReport { events, congruences, constraints, unacceptable }
    };

    macro_rules! push_event {
        ($name:expr, $verdict:expr) => {{
            let verdict = $verdict;
            let stop = verdict.is_unacceptable();
            events.push(FilterEvent { filter: $name, verdict });
            if stop {
                return finish(events, congruences, constraints);
            }
        }};
    }

    if config.enabled(FilterName::Signature) {
        push_event!("signature_filter", signature_filter(form.magic(), form.n()));
    }
    if config.enabled(FilterName::PrimePower) {
        push_event!("prime_power_filter", prime_power_filter(form));
    }
    if config.enabled(FilterName::FourTimes) {
        push_event!("four_times_filter", four_times_filter(form));
    }

    let want_min_order = config.enabled(FilterName::MinOrder);
    let want_bigger_zone = config.enabled(FilterName::BiggerZone);
    if want_min_order || want_bigger_zone {
        let pairs = crate::zones::enumerate_zone_pairs(form.n(), config.max_strips);
        let mut min_order_verdict = FilterVerdict::NoInformation;
        let mut bigger_zone_verdict = FilterVerdict::NoInformation;
        for zp in &pairs {
            if want_min_order && !min_order_verdict.is_unacceptable() {
                min_order_verdict = min_order_filter(form, zp);
            }
            if min_order_verdict.is_unacceptable() {
                break;
            }
            if want_bigger_zone && !bigger_zone_verdict.is_unacceptable() {
                bigger_zone_verdict = bigger_zone_filter(form, zp);
            }
        }
        if want_min_order {
            push_event!("min_order_filter", min_order_verdict);
        }
        if want_bigger_zone {
            push_event!("bigger_zone_filter", bigger_zone_verdict);
        }
    }

    if config.enabled(FilterName::Constraints) {
        let verdict = derive_prime_constraints(form);
        if let FilterVerdict::Constrained(set) = &verdict {
            if constraints.merge(set).is_err() {
                let sets = constraints.witness_sets();
                push_event!(
                    "derive_prime_constraints",
                    FilterVerdict::Unacceptable(Witness::InfeasibleConstraints { sets })
                );
            }
        }
        push_event!("derive_prime_constraints", verdict);
    }

    if let Some(bound) = config.csp_bound {
        if config.enabled(FilterName::CongruenceCsp) {
            let fallback = primes_up_to(bound);
            for i in 0..form.var_count() {
                let var = VarId::new(i);
                let candidates = constraints.allowed(var).cloned().unwrap_or_else(|| fallback.clone());
                if candidates.is_empty() {
                    continue;
                }
                let found = collect_congruences(form, var, config.max_strips, config.max_power);
                let verdict = congruence_csp(form, var, &candidates, config.max_strips, config.max_power)
                    .expect("candidates nonempty");
                congruences.extend(found);
                if let FilterVerdict::Constrained(set) = &verdict {
                    if constraints.merge(set).is_err() {
                        let sets = constraints.witness_sets();
                        push_event!(
                            "congruence_csp",
                            FilterVerdict::Unacceptable(Witness::InfeasibleConstraints { sets })
                        );
                    }
                }
                push_event!("congruence_csp", verdict);
            }
        }
    }

    finish(events, congruences, constraints)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Monomial {
        s.parse().unwrap()
    }

    fn v(i: usize) -> VarId {
        VarId::new(i)
    }

    fn magic(exps: &[u32]) -> Monomial {
        Monomial::from_exponents(exps.to_vec())
    }

    fn fig2() -> SquareForm {
        SquareForm::parse(
            "a^7,a*d*e*f,b^4,b*d,c^3,1\n\
             b^2*e,c,a^5*b,a^2*b*f,d^2,a*b*c^2\n\
             b*c,a^2,c^2*d^2,a^4*b*e,a*b*f,a*b^2\n\
             b^2*d,a^2*c^2,a^2*c*f,b^2,a^3*b*e,a*d\n\
             a*d*f,a^2*b^4,e,a*c^2,b,a^4*c*d\n\
             c^2,a*b*d,a,a*c*d,a^4*b^2,a*b^2*e*f\n",
        )
        .unwrap()
    }

    /// n-by-n helper grid: entry i is a^i times the given component, so the
    /// non-a components are exactly the listed ones.
    fn form_with_components(n: usize, comps: &[&str]) -> SquareForm {
        assert_eq!(comps.len(), n * n);
        let grid: Vec<Monomial> = comps
            .iter()
            .enumerate()
            .map(|(i, c)| Monomial::from_exponents(vec![i as u32]).mul(&m(c)))
            .collect();
        SquareForm::new(n, grid).unwrap()
    }

    #[test]
    fn signature_patterns_fire() {
        assert!(matches!(
            signature_filter(&magic(&[9]), 5),
            FilterVerdict::Unacceptable(Witness::SignaturePattern { ref pattern, .. })
                if pattern == "a^n"
        ));
        assert!(matches!(
            signature_filter(&magic(&[12, 3]), 5),
            FilterVerdict::Unacceptable(Witness::SignaturePattern { ref pattern, .. })
                if pattern.starts_with("a^n*b^m")
        ));
        assert!(matches!(
            signature_filter(&magic(&[7, 1, 1]), 6),
            FilterVerdict::Unacceptable(Witness::SignaturePattern { ref pattern, .. })
                if pattern == "a^n*b*c"
        ));
        // 2592 divisors at 36 cells, and no pattern matches six variables.
        assert_eq!(signature_filter(&magic(&[8, 5, 3, 2, 1, 1]), 6), FilterVerdict::NoInformation);
    }

    #[test]
    fn signature_divisor_shortage_fires_at_any_side() {
        assert!(matches!(
            signature_filter(&magic(&[2, 2, 2]), 6),
            FilterVerdict::Unacceptable(Witness::DivisorShortage { divisors: 27, cells: 36 })
        ));
        // Below the pattern side bound only the divisor count applies.
        assert_eq!(signature_filter(&magic(&[15]), 3), FilterVerdict::NoInformation);
        assert!(matches!(
            signature_filter(&magic(&[7]), 3),
            FilterVerdict::Unacceptable(Witness::DivisorShortage { divisors: 8, cells: 9 })
        ));
    }

    #[test]
    fn prime_power_scans_cofactors() {
        assert_eq!(prime_power_filter(&fig2()), FilterVerdict::NoInformation);
        // magic = a*b*c; the entry a*b has the prime-power cofactor c.
        let form = SquareForm::parse("a*b,c\nc^2,a\n").unwrap();
        match prime_power_filter(&form) {
            FilterVerdict::Unacceptable(Witness::PrimePower { cell, entry, cofactor }) => {
                assert_eq!(cell, (0, 0));
                assert_eq!(entry, m("a*b"));
                assert_eq!(cofactor, m("c"));
            }
            other => panic!("expected a prime-power hit, got {other:?}"),
        }
        // The whole-product entry counts too (cofactor 1).
        let form = SquareForm::parse("a*b,1\nc,a\n").unwrap();
        match prime_power_filter(&form) {
            FilterVerdict::Unacceptable(Witness::PrimePower { cofactor, .. }) => {
                assert!(cofactor.is_one());
            }
            other => panic!("expected a prime-power hit, got {other:?}"),
        }
    }

    #[test]
    fn four_times_counts_minimum_attainers() {
        assert_eq!(four_times_filter(&fig2()), FilterVerdict::NoInformation);
        // Spot-check the variable f on the actual grid: 30 entries are f-free.
        let form = fig2();
        let f_free =
            form.entries().iter().filter(|e| e.exponent(v(5)) == 0).count();
        assert_eq!(f_free, 30);

        // A 4x4 grid where b misses its minimum everywhere but three cells.
        let comps: Vec<&str> =
            (0..16).map(|i| if i < 3 { "1" } else { "b" }).collect();
        let form = form_with_components(4, &comps);
        match four_times_filter(&form) {
            FilterVerdict::Unacceptable(Witness::FourTimes { var, min_exponent, cells }) => {
                assert_eq!(var, v(1));
                assert_eq!(min_exponent, 0);
                assert_eq!(cells, vec![(0, 0), (0, 1), (0, 2)]);
            }
            other => panic!("expected a four-times hit, got {other:?}"),
        }
    }

    #[test]
    fn prime_value_bound_reproduces_theorem_bounds() {
        let rows = |form: &SquareForm| zones_rows(form);

        // 4 zones, 2 component values: bound 1, no prime fits.
        let comps4 = vec!["1", "b", "1", "b"].repeat(4);
        let form = form_with_components(4, &comps4);
        assert!(matches!(
            prime_value_bound(&rows(&form), &form, v(0)).unwrap(),
            FilterVerdict::Unacceptable(Witness::PrimeValueEmpty {
                zones: 4, components: 2, bound: 1, ..
            })
        ));

        // 4 zones, 3 values: primes up to ceil(3/1) = 3.
        let comps = vec!["1", "b", "b^2", "b"].repeat(4);
        let form = form_with_components(4, &comps);
        let expected: BTreeSet<u64> = [2, 3].into();
        assert_eq!(
            prime_value_bound(&rows(&form), &form, v(0)).unwrap(),
            FilterVerdict::Constrained(PrimeConstraintSet::single(v(0), expected).unwrap())
        );

        // 6 zones, 4 values: bound 2.
        let comps = vec!["1", "b", "b^2", "b^3", "1", "b"].repeat(6);
        let form = form_with_components(6, &comps);
        let expected: BTreeSet<u64> = [2].into();
        assert_eq!(
            prime_value_bound(&rows(&form), &form, v(0)).unwrap(),
            FilterVerdict::Constrained(PrimeConstraintSet::single(v(0), expected).unwrap())
        );

        // 6 zones, 5 values: bound 5.
        let comps = vec!["1", "b", "b^2", "b^3", "b^4", "b"].repeat(6);
        let form = form_with_components(6, &comps);
        let expected: BTreeSet<u64> = [2, 3, 5].into();
        assert_eq!(
            prime_value_bound(&rows(&form), &form, v(0)).unwrap(),
            FilterVerdict::Constrained(PrimeConstraintSet::single(v(0), expected).unwrap())
        );

        // 5 zones, 4 values: bound 4, so primes 2 and 3.
        let comps = vec!["1", "b", "b^2", "b^3", "1"].repeat(5);
        let form = form_with_components(5, &comps);
        let expected: BTreeSet<u64> = [2, 3].into();
        assert_eq!(
            prime_value_bound(&rows(&form), &form, v(0)).unwrap(),
            FilterVerdict::Constrained(PrimeConstraintSet::single(v(0), expected).unwrap())
        );

        // Components at or above the zone count say nothing.
        let comps = vec!["1", "b", "b^2", "b^3"].repeat(4);
        let form = form_with_components(4, &comps);
        assert_eq!(
            prime_value_bound(&rows(&form), &form, v(0)).unwrap(),
            FilterVerdict::NoInformation
        );
    }

    #[test]
    fn prime_value_bound_rejects_bad_zones() {
        let form = form_with_components(4, &vec!["1"; 16]);
        let overlapping = vec![
            BTreeSet::from([(0usize, 0usize)]),
            BTreeSet::from([(0usize, 0usize), (1, 1)]),
        ];
        assert_eq!(
            prime_value_bound(&overlapping, &form, v(0)),
            Err(FilterError::ZoneOverlap)
        );
        let with_empty = vec![BTreeSet::from([(0usize, 0usize)]), BTreeSet::new()];
        assert_eq!(prime_value_bound(&with_empty, &form, v(0)), Err(FilterError::EmptyZone));
    }

    #[test]
    fn prime_value_bound_is_monotone_in_zone_count() {
        // Adding a zone with an already-seen component (t up, d fixed) never
        // raises the bound.
        let mut prev_bound = u64::MAX;
        for t in 3..=8usize {
            let d = 2usize;
            let bound = (d as u64).div_ceil((t - d) as u64);
            assert!(bound <= prev_bound);
            prev_bound = bound;
        }
    }

    #[test]
    fn zones_through_cell_shapes() {
        let form = form_with_components(5, &vec!["1"; 25]);
        let center = zones_through_cell(&form, (2, 2));
        assert_eq!(center.len(), 4);
        assert!(center.iter().all(|z| z.len() == 4));
        let corner = zones_through_cell(&form, (0, 0));
        assert_eq!(corner.len(), 3);
        let plain = zones_through_cell(&form, (0, 2));
        assert_eq!(plain.len(), 2);
    }

    #[test]
    fn center_cofactor_anb_is_unacceptable() {
        // magic a^9*b^2, center a^2*b: cofactor a^7*b, and the four zones
        // through the center carry components {1, b} only.
        let grid = [
            "a^5", "a^2", "a*b", "a", "b", //
            "a^9", "a^3", "a^4*b", "a^6", "a^9*b", //
            "a^7", "a^8*b", "a^2*b", "a^10*b", "a^11", //
            "a^12", "a^13*b", "a^14", "a^15*b", "a^16", //
            "a^17*b", "a^18", "a^19*b", "a^20", "a^21",
        ];
        let form =
            SquareForm::new(5, grid.iter().map(|s| m(s)).collect::<Vec<_>>()).unwrap();
        assert_eq!(form.magic(), &m("a^9*b^2"));
        match derive_prime_constraints(&form) {
            FilterVerdict::Unacceptable(Witness::PrimeValueEmpty { zones: 4, .. }) => {}
            other => panic!("expected center refutation, got {other:?}"),
        }
    }

    #[test]
    fn ambiguous_whole_product_intersects_labelings() {
        // magic a^4*b^4 on a 6x6 grid whose non-a and non-b components both
        // take four values: each labeling pins its variable to {2}, and two
        // variables cannot both be 2.
        let mut comps = Vec::new();
        for r in 0..6usize {
            for c in 0..6usize {
                let i = (r + c) % 4;
                let j = (r + 2 * c) % 4;
                comps.push((i as u32, j as u32));
            }
        }
        // Row 0 must multiply to a^4*b^4: patch it explicitly.
        let row0 =
            [(1u32, 1u32), (1, 1), (1, 1), (1, 1), (0, 0), (0, 0)];
        let grid: Vec<Monomial> = (0..36)
            .map(|idx| {
                let (i, j) = if idx < 6 { row0[idx] } else { comps[idx] };
                Monomial::from_exponents(vec![i, j])
            })
            .collect();
        let form = SquareForm::new(6, grid).unwrap();
        assert_eq!(form.magic(), &m("a^4*b^4"));
        match derive_prime_constraints(&form) {
            FilterVerdict::Unacceptable(Witness::InfeasibleConstraints { sets }) => {
                assert_eq!(sets.len(), 2);
                for (_, allowed) in sets {
                    assert_eq!(allowed, vec![2]);
                }
            }
            other => panic!("expected infeasible constraints, got {other:?}"),
        }
    }

    #[test]
    fn constraint_set_algebra() {
        let s23: BTreeSet<u64> = [2, 3].into();
        let s35: BTreeSet<u64> = [3, 5].into();
        let mut a = PrimeConstraintSet::single(v(0), s23.clone()).unwrap();
        let b = PrimeConstraintSet::single(v(0), s35.clone()).unwrap();
        let mut ba = b.clone();
        ba.merge(&a).unwrap();
        a.merge(&b).unwrap();
        assert_eq!(a, ba);
        assert_eq!(a.allowed(v(0)), Some(&[3u64].into()));
        assert!(a.permits(v(1), 97));

        let mut c = PrimeConstraintSet::single(v(0), [2].into()).unwrap();
        assert_eq!(c.restrict(v(0), &[3].into()), Err(v(0)));

        // Injective choice: {2} and {2} clash, {2} and {2,3} do not.
        let mut d = PrimeConstraintSet::single(v(0), [2].into()).unwrap();
        d.restrict(v(1), &[2].into()).unwrap();
        assert!(!d.has_injective_choice());
        let mut e = PrimeConstraintSet::single(v(0), [2].into()).unwrap();
        e.restrict(v(1), &[2, 3].into()).unwrap();
        assert!(e.has_injective_choice());
    }

    #[test]
    fn merge_is_associative_on_samples() {
        let sets: Vec<PrimeConstraintSet> = vec![
            PrimeConstraintSet::single(v(0), [2, 3, 5].into()).unwrap(),
            PrimeConstraintSet::single(v(0), [3, 5, 7].into()).unwrap(),
            PrimeConstraintSet::single(v(1), [2, 7].into()).unwrap(),
        ];
        let mut ab_c = sets[0].clone();
        ab_c.merge(&sets[1]).unwrap();
        ab_c.merge(&sets[2]).unwrap();
        let mut bc = sets[1].clone();
        bc.merge(&sets[2]).unwrap();
        let mut a_bc = sets[0].clone();
        a_bc.merge(&bc).unwrap();
        assert_eq!(ab_c, a_bc);
    }

    #[test]
    fn pipeline_short_circuits_and_reports() {
        // Single variable: the signature filter ends it immediately.
        let exps = [2u32, 7, 6, 9, 5, 1, 4, 3, 8];
        let grid: Vec<Monomial> =
            exps.iter().map(|&e| Monomial::from_exponents(vec![e])).collect();
        let lo_shu = SquareForm::new(3, grid).unwrap();
        // At n = 3 the signature pattern stands down but the zone filters fire.
        let report = run_filter_pipeline(&lo_shu, &FilterConfig::default());
        assert!(report.unacceptable);
        let last = report.events.last().unwrap();
        assert!(last.verdict.is_unacceptable());

        // Figure 2 dies within the candidate bound once the solver runs.
        let config = FilterConfig { csp_bound: Some(13), ..FilterConfig::default() };
        let report = run_filter_pipeline(&fig2(), &config);
        assert!(report.unacceptable);
        let lines = report.render_lines();
        assert!(lines.iter().any(|l| l.starts_with("UNACCEPTABLE congruence_csp")));
    }

    #[test]
    fn verdict_rendering_is_stable() {
        let w = Witness::SignaturePattern { pattern: "a^n".into(), vars: vec![v(0)] };
        assert_eq!(
            FilterVerdict::Unacceptable(w).render_lines(),
            vec![r#"UNACCEPTABLE signature_filter {"pattern":"a^n","vars":["a"]}"#]
        );
        let set = PrimeConstraintSet::single(v(0), [2, 3].into()).unwrap();
        assert_eq!(
            FilterVerdict::Constrained(set).render_lines(),
            vec!["CONSTRAIN a IN {2,3}"]
        );
        assert_eq!(FilterVerdict::NoInformation.render_lines(), vec!["NOINFO"]);
    }
}
