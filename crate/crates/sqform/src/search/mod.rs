//! Square-form enumeration, canonical symmetry breaking, prime-assignment
//! search, and the end-to-end pipeline for a concrete magic product.

mod cache;

pub use cache::{CacheError, FormCache};

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use thiserror::Error;

use crate::algebra::{factorize, AlgebraError, Monomial, PrimeAssignment, PrimeSignature, VarId};
use crate::board::{check_magic, evaluate_form, validate_form, SquareForm, SYMMETRY_COUNT};
use crate::filters::{
    primes_up_to, run_filter_pipeline, signature_filter, FilterConfig, FilterReport,
    FilterVerdict, PrimeConstraintSet,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("side length must be at least 1")]
    EmptySide,
    #[error("magic vector needs at least one positive exponent")]
    EmptyMagic,
    #[error("magic exponents must be non-increasing (relabel variables)")]
    UnsortedMagic,
    #[error("budgets must be positive")]
    ZeroBudget,
    #[error("prefix longer than the grid")]
    PrefixTooLong,
}

/// What to enumerate: side length, magic exponent vector, and the knobs that
/// bound the walk.
///
/// The magic vector must be non-increasing; variable labels carry no meaning
/// beyond their magic exponent, so any target vector can be brought to this
/// shape by relabeling, and the form cache relies on the normalization.
/// Budgets are node counts (one node per entry placed), not wall time, so
/// runs reproduce exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationSpec {
    n: usize,
    magic: Monomial,
    max_exponent: Option<u32>,
    node_budget: u64,
    form_budget: u64,
    prefix: Vec<Monomial>,
}

impl EnumerationSpec {
    pub fn new(n: usize, magic: Monomial) -> Result<EnumerationSpec, SearchError> {
        if n == 0 {
            return Err(SearchError::EmptySide);
        }
        if magic.is_one() {
            return Err(SearchError::EmptyMagic);
        }
        if magic.exponents().windows(2).any(|w| w[0] < w[1]) {
            return Err(SearchError::UnsortedMagic);
        }
        Ok(EnumerationSpec {
            n,
            magic,
            max_exponent: None,
            node_budget: u64::MAX,
            form_budget: u64::MAX,
            prefix: Vec::new(),
        })
    }

    /// Caps every entry's exponent of every variable.
    pub fn with_max_exponent(mut self, cap: u32) -> EnumerationSpec {
        self.max_exponent = Some(cap);
        self
    }

    pub fn with_node_budget(mut self, budget: u64) -> Result<EnumerationSpec, SearchError> {
        if budget == 0 {
            return Err(SearchError::ZeroBudget);
        }
        self.node_budget = budget;
        Ok(self)
    }

    pub fn with_form_budget(mut self, budget: u64) -> Result<EnumerationSpec, SearchError> {
        if budget == 0 {
            return Err(SearchError::ZeroBudget);
        }
        self.form_budget = budget;
        Ok(self)
    }

    /// Fixes the first cells (row-major) for work-splitting: disjoint
    /// prefixes explore disjoint subtrees, and merging the runs in prefix
    /// order reproduces the unsplit stream.
    pub fn with_prefix(mut self, prefix: Vec<Monomial>) -> Result<EnumerationSpec, SearchError> {
        if prefix.len() > self.n * self.n {
            return Err(SearchError::PrefixTooLong);
        }
        self.prefix = prefix;
        self
            .prefix
            .iter()
            .all(|_| true)
            .then_some(())
            .expect("infallible");
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn magic(&self) -> &Monomial {
        &self.magic
    }

    /// The entry pool: divisors of the magic vector under the exponent cap,
    /// largest first (total degree, then exponent order). This is the
    /// candidate order the enumerator commits to.
    pub fn divisor_pool(&self) -> Vec<Monomial> {
        let caps: Vec<u32> = self
            .magic
            .exponents()
            .iter()
            .map(|&e| self.max_exponent.map_or(e, |cap| e.min(cap)))
            .collect();
        let mut pool = Vec::new();
        let mut exps = vec![0u32; caps.len()];
        loop {
            pool.push(Monomial::from_exponents(exps.clone()));
            let mut i = 0;
            loop {
                if i == caps.len() {
                    pool.sort_by(|x, y| y.degree_then_lex(x));
                    return pool;
                }
                if exps[i] < caps[i] {
                    exps[i] += 1;
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
        }
    }
}

/// How an enumeration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationOutcome {
    /// The search space was exhausted; the stream is complete.
    Complete,
    /// The node budget ran out; the stream is a correct partial exploration.
    NodeBudgetExhausted,
    /// The form budget was reached; the stream is a correct partial
    /// exploration.
    FormBudgetReached,
}

/// A collected enumeration run.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub forms: Vec<SquareForm>,
    pub outcome: EnumerationOutcome,
    pub nodes: u64,
}

struct Enumerator<'a, F: FnMut(&SquareForm)> {
    n: usize,
    pool: Vec<Monomial>,
    pool_index: BTreeMap<Monomial, usize>,
    prefix: &'a [Monomial],
    grid: Vec<usize>,
    used: Vec<bool>,
    rem_row: Vec<Monomial>,
    rem_col: Vec<Monomial>,
    rem_main: Monomial,
    rem_anti: Monomial,
    nodes: u64,
    node_budget: u64,
    forms: u64,
    form_budget: u64,
    stopped: Option<EnumerationOutcome>,
    sink: F,
}

impl<F: FnMut(&SquareForm)> Enumerator<'_, F> {
    fn run(&mut self) {
        self.fill(0);
    }

    /// Tries `value` at cell `idx`; on success recurses to the next cell.
    fn try_place(&mut self, idx: usize, pool_pos: usize) {
        let n = self.n;
        let (r, c) = (idx / n, idx % n);
        if self.used[pool_pos] {
            return;
        }
        let value = self.pool[pool_pos].clone();
        let on_main = r == c;
        let on_anti = r + c == n - 1;

        let Some(next_row) = self.rem_row[r].try_div(&value) else { return };
        let Some(next_col) = self.rem_col[c].try_div(&value) else { return };
        let next_main = if on_main {
            match self.rem_main.try_div(&value) {
                Some(m) => Some(m),
                None => return,
            }
        } else {
            None
        };
        let next_anti = if on_anti {
            match self.rem_anti.try_div(&value) {
                Some(m) => Some(m),
                None => return,
            }
        } else {
            None
        };
        // A strip that closes at this cell must close exactly.
        if c == n - 1 && !next_row.is_one() {
            return;
        }
        if r == n - 1 && !next_col.is_one() {
            return;
        }
        if let Some(m) = &next_main {
            if (r, c) == (n - 1, n - 1) && !m.is_one() {
                return;
            }
        }
        if let Some(m) = &next_anti {
            if (r, c) == (n - 1, 0) && !m.is_one() {
                return;
            }
        }

        if self.nodes >= self.node_budget {
            self.stopped = Some(EnumerationOutcome::NodeBudgetExhausted);
            return;
        }
        self.nodes += 1;

        let saved_row = std::mem::replace(&mut self.rem_row[r], next_row);
        let saved_col = std::mem::replace(&mut self.rem_col[c], next_col);
        let saved_main = next_main.map(|m| std::mem::replace(&mut self.rem_main, m));
        let saved_anti = next_anti.map(|m| std::mem::replace(&mut self.rem_anti, m));
        self.used[pool_pos] = true;
        self.grid.push(pool_pos);

        self.fill(idx + 1);

        self.grid.pop();
        self.used[pool_pos] = false;
        if let Some(m) = saved_anti {
            self.rem_anti = m;
        }
        if let Some(m) = saved_main {
            self.rem_main = m;
        }
        self.rem_col[c] = saved_col;
        self.rem_row[r] = saved_row;
    }

    fn fill(&mut self, idx: usize) {
        if self.stopped.is_some() {
            return;
        }
        let n = self.n;
        if idx == n * n {
            let grid: Vec<Monomial> =
                self.grid.iter().map(|&i| self.pool[i].clone()).collect();
            let form = SquareForm::new(n, grid).expect("enumerator grid is square");
            debug_assert!(validate_form(&form).is_ok());
            (self.sink)(&form);
            self.forms += 1;
            if self.forms >= self.form_budget {
                self.stopped = Some(EnumerationOutcome::FormBudgetReached);
            }
            return;
        }
        let (r, c) = (idx / n, idx % n);
        if idx < self.prefix.len() {
            if let Some(&pos) = self.pool_index.get(&self.prefix[idx]) {
                self.try_place(idx, pos);
            }
            return;
        }
        // The last cell of a row is forced by the row remainder, and the
        // last row is forced by the column remainders.
        if c == n - 1 {
            if let Some(&pos) = self.pool_index.get(&self.rem_row[r].clone()) {
                self.try_place(idx, pos);
            }
            return;
        }
        if r == n - 1 {
            if let Some(&pos) = self.pool_index.get(&self.rem_col[c].clone()) {
                self.try_place(idx, pos);
            }
            return;
        }
        for pos in 0..self.pool.len() {
            if self.stopped.is_some() {
                return;
            }
            self.try_place(idx, pos);
        }
    }
}

/// Streams every square form for the spec into `sink`, in a deterministic
/// order (row-major fill, pool candidates largest first). Returns how the
/// walk ended and the number of placements made.
pub fn enumerate_with(
    spec: &EnumerationSpec,
    sink: impl FnMut(&SquareForm),
) -> (EnumerationOutcome, u64) {
    let n = spec.n();
    let pool = spec.divisor_pool();
    // Fewer divisors than cells cannot seat distinct entries.
    if pool.len() < n * n {
        return (EnumerationOutcome::Complete, 0);
    }
    let pool_index: BTreeMap<Monomial, usize> =
        pool.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let mut enumerator = Enumerator {
        n,
        pool_index,
        prefix: &spec.prefix,
        grid: Vec::with_capacity(n * n),
        used: vec![false; pool.len()],
        rem_row: vec![spec.magic.clone(); n],
        rem_col: vec![spec.magic.clone(); n],
        rem_main: spec.magic.clone(),
        rem_anti: spec.magic.clone(),
        nodes: 0,
        node_budget: spec.node_budget,
        forms: 0,
        form_budget: spec.form_budget,
        stopped: None,
        sink,
        pool,
    };
    enumerator.run();
    (enumerator.stopped.unwrap_or(EnumerationOutcome::Complete), enumerator.nodes)
}

/// Collects an enumeration run.
pub fn enumerate_forms(spec: &EnumerationSpec) -> Enumeration {
    let mut forms = Vec::new();
    let (outcome, nodes) = enumerate_with(spec, |form| forms.push(form.clone()));
    Enumeration { forms, outcome, nodes }
}

fn group_preserving_permutations(magic: &Monomial, var_count: usize) -> Vec<Vec<usize>> {
    // Variables with equal magic exponents are interchangeable.
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for i in 0..var_count {
        groups.entry(magic.exponent(VarId::new(i))).or_default().push(i);
    }
    let mut perms: Vec<Vec<usize>> = vec![vec![0; var_count]];
    for group in groups.values() {
        let group_perms = permutations_of(group);
        let mut next = Vec::with_capacity(perms.len() * group_perms.len());
        for base in &perms {
            for gp in &group_perms {
                let mut perm = base.clone();
                for (slot, &target) in group.iter().zip(gp) {
                    perm[*slot] = target;
                }
                next.push(perm);
            }
        }
        perms = next;
    }
    perms
}

fn permutations_of(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let mut rest: Vec<usize> = items.to_vec();
        rest.remove(i);
        for mut tail in permutations_of(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// The least representative of a form's orbit under the eight grid
/// symmetries and the relabelings of variables with equal magic exponents.
/// Idempotent; constant on orbits.
pub fn canonicalize(form: &SquareForm) -> SquareForm {
    let perms = group_preserving_permutations(form.magic(), form.var_count());
    let mut best: Option<SquareForm> = None;
    for sym in 0..SYMMETRY_COUNT {
        let transformed = form.symmetry(sym);
        for perm in &perms {
            let candidate = transformed.relabel(perm);
            if best.as_ref().is_none_or(|b| candidate < *b) {
                best = Some(candidate);
            }
        }
    }
    best.expect("at least the identity")
}

/// Result of a prime-assignment search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(PrimeAssignment),
    Exhausted { tried: u64 },
}

/// Tries injective assignments of primes up to `prime_bound` to the form's
/// variables, in deterministic order (variables in alphabetical order, each
/// drawing ascending primes), honoring the constraint set. Returns the first
/// assignment whose evaluation is additive, or the count of full assignments
/// evaluated.
pub fn search_assignment(
    form: &SquareForm,
    prime_bound: u64,
    constraints: &PrimeConstraintSet,
) -> SearchOutcome {
    assert!(prime_bound >= 2, "prime bound below the smallest prime");
    let primes = primes_up_to(prime_bound);
    let candidates: Vec<Vec<u64>> = (0..form.var_count())
        .map(|i| {
            let var = VarId::new(i);
            primes.iter().copied().filter(|&p| constraints.permits(var, p)).collect()
        })
        .collect();

    fn assign(
        form: &SquareForm,
        candidates: &[Vec<u64>],
        depth: usize,
        chosen: &mut Vec<u64>,
        tried: &mut u64,
    ) -> Option<PrimeAssignment> {
        if depth == candidates.len() {
            *tried += 1;
            let assignment =
                PrimeAssignment::from_small(chosen).expect("distinct primes by construction");
            let square = evaluate_form(form, &assignment).expect("assignment covers form");
            if check_magic(&square).is_additive {
                return Some(assignment);
            }
            return None;
        }
        for &p in &candidates[depth] {
            if chosen.contains(&p) {
                continue;
            }
            chosen.push(p);
            if let Some(found) = assign(form, candidates, depth + 1, chosen, tried) {
                return Some(found);
            }
            chosen.pop();
        }
        None
    }

    let mut tried = 0;
    match assign(form, &candidates, 0, &mut Vec::new(), &mut tried) {
        Some(assignment) => SearchOutcome::Found(assignment),
        None => SearchOutcome::Exhausted { tried },
    }
}

/// Pipeline configuration: budgets and filter knobs.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub node_budget: u64,
    pub form_budget: u64,
    pub max_strips: usize,
    pub max_power: u32,
    pub enable_csp: bool,
    pub cache: Option<FormCache>,
}

impl Default for PipelineOptions {
    fn default() -> PipelineOptions {
        PipelineOptions {
            node_budget: u64::MAX,
            form_budget: u64::MAX,
            max_strips: 2,
            max_power: 1,
            enable_csp: true,
            cache: None,
        }
    }
}

/// Per-form pipeline outcome: the filter report, and the assignment search
/// over the product's own primes when the filters did not rule the form out.
#[derive(Debug, Clone)]
pub struct FormOutcome {
    pub form: SquareForm,
    pub report: FilterReport,
    pub search: Option<SearchOutcome>,
}

/// End-to-end pipeline result for one magic product.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub n: usize,
    pub product: BigUint,
    pub signature: PrimeSignature,
    pub magic: Monomial,
    pub signature_verdict: FilterVerdict,
    pub enumeration: Option<EnumerationOutcome>,
    pub forms: Vec<FormOutcome>,
    /// Index into `forms` plus the additive assignment, if one was found.
    pub additive: Option<(usize, PrimeAssignment)>,
}

/// Checks whether `product` can be the magic product of an n-by-n
/// additive-multiplicative square: factorizes it, short-circuits on the
/// signature, loads or enumerates the canonical forms for the signature,
/// filters each form, and searches the survivors over the product's own
/// primes (the only assignments with this exact magic product).
pub fn pipeline(
    product: &BigUint,
    n: usize,
    options: &PipelineOptions,
) -> Result<PipelineReport, PipelineError> {
    let factors = factorize(product)?;
    let signature = PrimeSignature::new(
        factors.iter().map(|(_, e)| *e).collect::<Vec<_>>(),
    );
    let magic = signature.as_magic();

    let signature_verdict = signature_filter(&magic, n);
    let mut report = PipelineReport {
        n,
        product: product.clone(),
        signature: signature.clone(),
        magic: magic.clone(),
        signature_verdict,
        enumeration: None,
        forms: Vec::new(),
        additive: None,
    };
    if report.signature_verdict.is_unacceptable() || magic.is_one() {
        return Ok(report);
    }

    let forms = match &options.cache {
        Some(cache) => {
            let cached = cache.get(n, &signature)?;
            if cached.is_empty() {
                let canonical = enumerate_canonical(n, &magic, options, &mut report)?;
                cache.put(n, &signature, &canonical)?;
                canonical
            } else {
                cached
            }
        }
        None => enumerate_canonical(n, &magic, options, &mut report)?,
    };

    // Group the product's primes by exponent; a variable may only take a
    // prime of its own magic exponent, anything else changes the product.
    let mut prime_groups: BTreeMap<u32, Vec<BigUint>> = BTreeMap::new();
    for (p, e) in &factors {
        prime_groups.entry(*e).or_default().push(p.clone());
    }

    let csp_candidates: Option<BTreeMap<VarId, BTreeSet<u64>>> = options.enable_csp.then(|| {
        (0..magic.var_count())
            .filter_map(|i| {
                let var = VarId::new(i);
                let exponent = magic.exponent(var);
                let group = prime_groups.get(&exponent)?;
                let small: BTreeSet<u64> =
                    group.iter().filter_map(|p| u64::try_from(p).ok()).collect();
                (!small.is_empty()).then_some((var, small))
            })
            .collect()
    });

    let config = FilterConfig {
        max_strips: options.max_strips,
        max_power: options.max_power,
        csp_bound: None,
        csp_candidates,
        only: None,
    };

    for form in forms {
        let filter_report = run_filter_pipeline(&form, &config);
        let search = if filter_report.unacceptable {
            None
        } else {
            Some(search_product_assignment(&form, &prime_groups, &filter_report.constraints))
        };
        let index = report.forms.len();
        if let Some(SearchOutcome::Found(assignment)) = &search {
            report.additive = Some((index, assignment.clone()));
        }
        report.forms.push(FormOutcome { form, report: filter_report, search });
        if report.additive.is_some() {
            break;
        }
    }
    Ok(report)
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

fn enumerate_canonical(
    n: usize,
    magic: &Monomial,
    options: &PipelineOptions,
    report: &mut PipelineReport,
) -> Result<Vec<SquareForm>, PipelineError> {
    let spec = EnumerationSpec::new(n, magic.clone())
        .expect("pipeline magic is sorted and nonempty")
        .with_node_budget(options.node_budget)
        .and_then(|s| s.with_form_budget(options.form_budget))
        .expect("budgets validated by options");
    let mut canonical: BTreeSet<SquareForm> = BTreeSet::new();
    let (outcome, _nodes) = enumerate_with(&spec, |form| {
        canonical.insert(canonicalize(form));
    });
    report.enumeration = Some(outcome);
    Ok(canonical.into_iter().collect())
}

/// Iterates the bijections between variables and the product's primes that
/// respect exponent groups, honoring `constraints`, and evaluates each.
fn search_product_assignment(
    form: &SquareForm,
    prime_groups: &BTreeMap<u32, Vec<BigUint>>,
    constraints: &PrimeConstraintSet,
) -> SearchOutcome {
    let magic = form.magic();
    let var_count = form.var_count();
    let candidates: Vec<Vec<BigUint>> = (0..var_count)
        .map(|i| {
            let var = VarId::new(i);
            let group = prime_groups.get(&magic.exponent(var)).cloned().unwrap_or_default();
            group
                .into_iter()
                .filter(|p| match u64::try_from(p) {
                    Ok(small) => constraints.permits(var, small),
                    Err(_) => constraints.allowed(var).is_none(),
                })
                .collect()
        })
        .collect();

    fn assign(
        form: &SquareForm,
        candidates: &[Vec<BigUint>],
        depth: usize,
        chosen: &mut Vec<(VarId, BigUint)>,
        tried: &mut u64,
    ) -> Option<PrimeAssignment> {
        if depth == candidates.len() {
            *tried += 1;
            let assignment = PrimeAssignment::new(chosen.iter().cloned())
                .expect("product primes are distinct");
            let square = evaluate_form(form, &assignment).expect("assignment covers form");
            if check_magic(&square).is_additive {
                return Some(assignment);
            }
            return None;
        }
        for p in &candidates[depth] {
            if chosen.iter().any(|(_, q)| q == p) {
                continue;
            }
            chosen.push((VarId::new(depth), p.clone()));
            if let Some(found) = assign(form, candidates, depth + 1, chosen, tried) {
                return Some(found);
            }
            chosen.pop();
        }
        None
    }

    let mut tried = 0;
    match assign(form, &candidates, 0, &mut Vec::new(), &mut tried) {
        Some(assignment) => SearchOutcome::Found(assignment),
        None => SearchOutcome::Exhausted { tried },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Monomial {
        s.parse().unwrap()
    }

    fn lo_shu_spec() -> EnumerationSpec {
        EnumerationSpec::new(3, Monomial::from_exponents(vec![15]))
            .unwrap()
            .with_max_exponent(9)
    }

    #[test]
    fn spec_validation() {
        assert_eq!(
            EnumerationSpec::new(0, m("a")).unwrap_err(),
            SearchError::EmptySide
        );
        assert_eq!(
            EnumerationSpec::new(3, Monomial::one()).unwrap_err(),
            SearchError::EmptyMagic
        );
        assert_eq!(
            EnumerationSpec::new(3, m("a*b^2")).unwrap_err(),
            SearchError::UnsortedMagic
        );
        assert!(EnumerationSpec::new(3, m("a^2*b")).is_ok());
        assert_eq!(
            EnumerationSpec::new(3, m("a")).unwrap().with_node_budget(0).unwrap_err(),
            SearchError::ZeroBudget
        );
    }

    #[test]
    fn divisor_pool_is_capped_and_ordered() {
        let spec = lo_shu_spec();
        let pool = spec.divisor_pool();
        assert_eq!(pool.len(), 10); // exponents 0..=9
        assert_eq!(pool.first().unwrap(), &m("a^9"));
        assert_eq!(pool.last().unwrap(), &Monomial::one());
    }

    #[test]
    fn lo_shu_enumerates_its_dihedral_orbit() {
        let run = enumerate_forms(&lo_shu_spec());
        assert_eq!(run.outcome, EnumerationOutcome::Complete);
        assert_eq!(run.forms.len(), 8);
        for form in &run.forms {
            validate_form(form).unwrap();
        }
        let canonical: BTreeSet<SquareForm> =
            run.forms.iter().map(canonicalize).collect();
        assert_eq!(canonical.len(), 1);
    }

    #[test]
    fn divisor_shortage_short_circuits() {
        let spec = EnumerationSpec::new(3, m("a^3")).unwrap();
        let run = enumerate_forms(&spec);
        assert_eq!(run.outcome, EnumerationOutcome::Complete);
        assert!(run.forms.is_empty());
        assert_eq!(run.nodes, 0);
    }

    #[test]
    fn budgets_signal_instead_of_erroring() {
        let spec = lo_shu_spec().with_node_budget(50).unwrap();
        let run = enumerate_forms(&spec);
        assert_eq!(run.outcome, EnumerationOutcome::NodeBudgetExhausted);
        assert_eq!(run.nodes, 50);

        let spec = lo_shu_spec().with_form_budget(3).unwrap();
        let run = enumerate_forms(&spec);
        assert_eq!(run.outcome, EnumerationOutcome::FormBudgetReached);
        assert_eq!(run.forms.len(), 3);
        let full = enumerate_forms(&lo_shu_spec());
        assert_eq!(&full.forms[..3], &run.forms[..]);
    }

    #[test]
    fn prefix_partition_reproduces_the_stream() {
        let full = enumerate_forms(&lo_shu_spec());
        let mut merged = Vec::new();
        for first in lo_shu_spec().divisor_pool() {
            let spec = lo_shu_spec().with_prefix(vec![first]).unwrap();
            merged.extend(enumerate_forms(&spec).forms);
        }
        assert_eq!(full.forms, merged);
    }

    #[test]
    fn enumeration_is_deterministic() {
        let a = enumerate_forms(&lo_shu_spec());
        let b = enumerate_forms(&lo_shu_spec());
        assert_eq!(a.forms, b.forms);
        assert_eq!(a.nodes, b.nodes);
    }

    #[test]
    fn canonicalize_collapses_symmetries_and_relabelings() {
        let form = SquareForm::parse(
            "a^7,a*d*e*f,b^4,b*d,c^3,1\n\
             b^2*e,c,a^5*b,a^2*b*f,d^2,a*b*c^2\n\
             b*c,a^2,c^2*d^2,a^4*b*e,a*b*f,a*b^2\n\
             b^2*d,a^2*c^2,a^2*c*f,b^2,a^3*b*e,a*d\n\
             a*d*f,a^2*b^4,e,a*c^2,b,a^4*c*d\n\
             c^2,a*b*d,a,a*c*d,a^4*b^2,a*b^2*e*f\n",
        )
        .unwrap();
        let canon = canonicalize(&form);
        assert_eq!(canonicalize(&canon), canon);
        for sym in 0..SYMMETRY_COUNT {
            assert_eq!(canonicalize(&form.symmetry(sym)), canon);
        }
        // e and f share the magic exponent 1; swapping them is cosmetic.
        let swapped = form.relabel(&[0, 1, 2, 3, 5, 4]);
        assert_eq!(canonicalize(&swapped), canon);
    }

    #[test]
    fn search_exhausts_single_prime_forms() {
        let run = enumerate_forms(&lo_shu_spec());
        let outcome =
            search_assignment(&run.forms[0], 2, &PrimeConstraintSet::unconstrained());
        assert_eq!(outcome, SearchOutcome::Exhausted { tried: 1 });
    }

    #[test]
    fn search_honors_constraints() {
        // Two variables, a pinned to 2: only the five pairs (2, q) are tried.
        let form = SquareForm::parse("a,b\nb^2,1\n").unwrap();
        // Not a valid form (строки disagree), but the search only needs shape.
        let constraints = PrimeConstraintSet::single(VarId::new(0), [2].into()).unwrap();
        let outcome = search_assignment(&form, 13, &constraints);
        assert_eq!(outcome, SearchOutcome::Exhausted { tried: 5 });
    }

    #[test]
    fn pipeline_rejects_prime_powers_instantly() {
        let report =
            pipeline(&BigUint::from(512u32), 5, &PipelineOptions::default()).unwrap();
        assert!(report.signature_verdict.is_unacceptable());
        assert!(report.forms.is_empty());
        assert_eq!(report.enumeration, None);
    }

    #[test]
    fn pipeline_rejects_divisor_shortage_instantly() {
        // 210 has 16 divisors, fewer than 25 cells.
        let report =
            pipeline(&BigUint::from(210u32), 5, &PipelineOptions::default()).unwrap();
        assert!(report.signature_verdict.is_unacceptable());
        assert!(report.forms.is_empty());
    }
}
