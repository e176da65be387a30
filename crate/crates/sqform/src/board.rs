//! Square grids, concrete and symbolic: strip enumeration, magic
//! verification, square-form validation, and form evaluation.
//!
//! A *strip* is a row, a column, or one of the two long diagonals; an n-by-n
//! square has `2n + 2` of them. A [`ConcreteSquare`] holds exact integers; a
//! [`SquareForm`] holds monomials over prime-placeholder variables such that
//! all entries are distinct and every strip has the same symbolic product.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{evaluate, AlgebraError, Monomial, MonomialParseError, PrimeAssignment};

/// Grid coordinate, `(row, column)`, zero-based.
pub type Cell = (usize, usize);

/// A row, column, or long diagonal.
///
/// `MainDiag` runs from the upper-left cell to the lower-right cell;
/// `AntiDiag` runs from the upper-right cell to the lower-left cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strip {
    Row(usize),
    Col(usize),
    MainDiag,
    AntiDiag,
}

impl Strip {
    /// The cells of this strip in an n-by-n square, in traversal order.
    pub fn cells(self, n: usize) -> Vec<Cell> {
        match self {
            Strip::Row(i) => (0..n).map(|j| (i, j)).collect(),
            Strip::Col(j) => (0..n).map(|i| (i, j)).collect(),
            Strip::MainDiag => (0..n).map(|i| (i, i)).collect(),
            Strip::AntiDiag => (0..n).map(|i| (i, n - 1 - i)).collect(),
        }
    }

    pub fn contains(self, cell: Cell, n: usize) -> bool {
        let (r, c) = cell;
        match self {
            Strip::Row(i) => r == i,
            Strip::Col(j) => c == j,
            Strip::MainDiag => r == c,
            Strip::AntiDiag => r + c == n - 1,
        }
    }

    /// Compact label used in reports: `R2`, `C0`, `D+` (main), `D-` (anti).
    pub fn label(self) -> String {
        match self {
            Strip::Row(i) => format!("R{i}"),
            Strip::Col(j) => format!("C{j}"),
            Strip::MainDiag => "D+".to_string(),
            Strip::AntiDiag => "D-".to_string(),
        }
    }

    /// Parses a label produced by [`Strip::label`].
    pub fn from_label(s: &str) -> Option<Strip> {
        match s {
            "D+" => Some(Strip::MainDiag),
            "D-" => Some(Strip::AntiDiag),
            _ => {
                let (kind, idx) = s.split_at(1.min(s.len()));
                let idx: usize = idx.parse().ok()?;
                match kind {
                    "R" => Some(Strip::Row(idx)),
                    "C" => Some(Strip::Col(idx)),
                    _ => None,
                }
            }
        }
    }
}

impl fmt::Display for Strip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// All `2n + 2` strips in the fixed report order: rows top-down, columns
/// left-right, then the main and anti diagonals. For `n = 1` all four strips
/// contain the single cell.
pub fn strips(n: usize) -> Vec<Strip> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(2 * n + 2);
    out.extend((0..n).map(Strip::Row));
    out.extend((0..n).map(Strip::Col));
    out.push(Strip::MainDiag);
    out.push(Strip::AntiDiag);
    out
}

/// The eight dihedral transforms of a square grid, in the fixed order:
/// rotations by 0/90/180/270 degrees, then each of those composed with a
/// transpose. Returns the source cell that lands at `(r, c)`.
pub fn symmetry_source(sym: usize, n: usize, r: usize, c: usize) -> Cell {
    let (r, c) = if sym >= 4 { (c, r) } else { (r, c) };
    match sym % 4 {
        0 => (r, c),
        1 => (n - 1 - c, r),
        2 => (n - 1 - r, n - 1 - c),
        3 => (c, n - 1 - r),
        _ => unreachable!(),
    }
}

pub const SYMMETRY_COUNT: usize = 8;

fn apply_symmetry<T: Clone>(grid: &[T], n: usize, sym: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(grid.len());
    for r in 0..n {
        for c in 0..n {
            let (sr, sc) = symmetry_source(sym, n, r, c);
            out.push(grid[sr * n + sc].clone());
        }
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoardError {
    #[error("grid has {got} entries, expected {expected} for side {n}")]
    Dimension { n: usize, expected: usize, got: usize },
    #[error("side length must be at least 1")]
    EmptySide,
    #[error("entry at {0:?} must be positive")]
    ZeroEntry(Cell),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Parse failure for the square CSV format, with 1-based line and field.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, field {column}: {message}")]
pub struct SquareParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// An n-by-n grid of positive integers with exact arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteSquare {
    n: usize,
    grid: Vec<BigUint>,
}

impl ConcreteSquare {
    pub fn new(n: usize, grid: Vec<BigUint>) -> Result<ConcreteSquare, BoardError> {
        if n == 0 {
            return Err(BoardError::EmptySide);
        }
        if grid.len() != n * n {
            return Err(BoardError::Dimension { n, expected: n * n, got: grid.len() });
        }
        if let Some(pos) = grid.iter().position(|v| v.is_zero()) {
            return Err(BoardError::ZeroEntry((pos / n, pos % n)));
        }
        Ok(ConcreteSquare { n, grid })
    }

    pub fn from_u64(n: usize, values: &[u64]) -> Result<ConcreteSquare, BoardError> {
        ConcreteSquare::new(n, values.iter().map(|&v| BigUint::from(v)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, cell: Cell) -> &BigUint {
        &self.grid[cell.0 * self.n + cell.1]
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.grid
    }

    pub fn transpose(&self) -> ConcreteSquare {
        ConcreteSquare { n: self.n, grid: apply_symmetry(&self.grid, self.n, 4) }
    }

    pub fn symmetry(&self, sym: usize) -> ConcreteSquare {
        ConcreteSquare { n: self.n, grid: apply_symmetry(&self.grid, self.n, sym) }
    }

    /// Parses the square file format: n lines of n comma-separated decimal
    /// integers, no header, optional trailing newline.
    pub fn parse(text: &str) -> Result<ConcreteSquare, SquareParseError> {
        let lines: Vec<&str> = text.lines().collect();
        let n = lines.len();
        if n == 0 {
            return Err(SquareParseError { line: 1, column: 1, message: "empty square file".into() });
        }
        let mut grid = Vec::with_capacity(n * n);
        for (li, line) in lines.iter().enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n {
                return Err(SquareParseError {
                    line: li + 1,
                    column: fields.len(),
                    message: format!("expected {n} fields, found {}", fields.len()),
                });
            }
            for (fi, field) in fields.iter().enumerate() {
                let trimmed = field.trim();
                let value = BigUint::from_str(trimmed).map_err(|_| SquareParseError {
                    line: li + 1,
                    column: fi + 1,
                    message: format!("invalid integer {trimmed:?}"),
                })?;
                if value == BigUint::zero() {
                    return Err(SquareParseError {
                        line: li + 1,
                        column: fi + 1,
                        message: "entries must be positive".into(),
                    });
                }
                grid.push(value);
            }
        }
        Ok(ConcreteSquare { n, grid })
    }
}

impl fmt::Display for ConcreteSquare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.n {
            for c in 0..self.n {
                if c > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get((r, c)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Per-strip exact sum and product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripStat {
    pub strip: Strip,
    pub sum: BigUint,
    pub product: BigUint,
}

/// The outcome of checking all strips of a concrete square.
///
/// `magic_sum`/`magic_product` are present only when every strip agrees. The
/// modal value (most frequent; smallest on ties) is always present and is the
/// reference point for the per-strip deviation lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MagicReport {
    pub stats: Vec<StripStat>,
    pub is_additive: bool,
    pub is_multiplicative: bool,
    pub magic_sum: Option<BigUint>,
    pub magic_product: Option<BigUint>,
    pub modal_sum: BigUint,
    pub modal_product: BigUint,
    /// Strips whose sum differs from the modal sum, with `value - modal`.
    pub sum_deviations: Vec<(Strip, BigInt)>,
    /// Strips whose product differs from the modal product, with `value - modal`.
    pub product_deviations: Vec<(Strip, BigInt)>,
}

fn modal_value(values: impl Iterator<Item = BigUint>) -> BigUint {
    let mut counts: BTreeMap<BigUint, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|(va, ca), (vb, cb)| ca.cmp(cb).then(vb.cmp(va)))
        .map(|(v, _)| v)
        .expect("at least one strip")
}

/// Checks every strip of a concrete square for a shared sum and product.
pub fn check_magic(square: &ConcreteSquare) -> MagicReport {
    let n = square.n();
    let stats: Vec<StripStat> = strips(n)
        .into_iter()
        .map(|strip| {
            let mut sum = BigUint::zero();
            let mut product = BigUint::one();
            for cell in strip.cells(n) {
                sum += square.get(cell);
                product *= square.get(cell);
            }
            StripStat { strip, sum, product }
        })
        .collect();

    let modal_sum = modal_value(stats.iter().map(|s| s.sum.clone()));
    let modal_product = modal_value(stats.iter().map(|s| s.product.clone()));
    let sum_deviations: Vec<(Strip, BigInt)> = stats
        .iter()
        .filter(|s| s.sum != modal_sum)
        .map(|s| (s.strip, BigInt::from(s.sum.clone()) - BigInt::from(modal_sum.clone())))
        .collect();
    let product_deviations: Vec<(Strip, BigInt)> = stats
        .iter()
        .filter(|s| s.product != modal_product)
        .map(|s| (s.strip, BigInt::from(s.product.clone()) - BigInt::from(modal_product.clone())))
        .collect();
    let is_additive = sum_deviations.is_empty();
    let is_multiplicative = product_deviations.is_empty();
    MagicReport {
        magic_sum: is_additive.then(|| modal_sum.clone()),
        magic_product: is_multiplicative.then(|| modal_product.clone()),
        stats,
        is_additive,
        is_multiplicative,
        modal_sum,
        modal_product,
        sum_deviations,
        product_deviations,
    }
}

impl fmt::Display for MagicReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for stat in &self.stats {
            writeln!(f, "{} sum={} product={}", stat.strip, stat.sum, stat.product)?;
        }
        writeln!(f, "additive={}", self.is_additive)?;
        writeln!(f, "multiplicative={}", self.is_multiplicative)?;
        match &self.magic_sum {
            Some(s) => writeln!(f, "magic sum={s}")?,
            None => {
                writeln!(f, "modal sum={}", self.modal_sum)?;
                for (strip, delta) in &self.sum_deviations {
                    writeln!(f, "DEVIATES {strip} sum delta={delta}")?;
                }
            }
        }
        match &self.magic_product {
            Some(p) => writeln!(f, "magic product={p}")?,
            None => {
                writeln!(f, "modal product={}", self.modal_product)?;
                for (strip, delta) in &self.product_deviations {
                    writeln!(f, "DEVIATES {strip} product delta={delta}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error("grid has {got} entries, expected {expected} for side {n}")]
    Dimension { n: usize, expected: usize, got: usize },
    #[error("side length must be at least 1")]
    EmptySide,
    #[error("strip {strip} has exponent sum {found}, magic is {magic}")]
    StripMismatch { strip: Strip, found: Monomial, magic: Monomial },
    #[error("duplicate entry {entry} at {first:?} and {second:?}")]
    DuplicateEntries { entry: Monomial, first: Cell, second: Cell },
}

/// Parse failure for the form file format, with 1-based line and field.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, field {column}: {message}")]
pub struct FormParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// An n-by-n grid of monomials meant to share one magic exponent vector.
///
/// Construction checks dimensions only and records the first row's exponent
/// sum as the magic vector; [`validate_form`] checks the two defining
/// invariants (distinct entries, every strip summing to the magic vector).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SquareForm {
    n: usize,
    var_count: usize,
    grid: Vec<Monomial>,
    magic: Monomial,
}

impl SquareForm {
    pub fn new(n: usize, grid: Vec<Monomial>) -> Result<SquareForm, FormError> {
        if n == 0 {
            return Err(FormError::EmptySide);
        }
        if grid.len() != n * n {
            return Err(FormError::Dimension { n, expected: n * n, got: grid.len() });
        }
        let magic = grid[..n].iter().fold(Monomial::one(), |acc, m| acc.mul(m));
        let var_count = grid
            .iter()
            .map(Monomial::var_count)
            .max()
            .unwrap_or(0)
            .max(magic.var_count());
        Ok(SquareForm { n, var_count, grid, magic })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of variables in play (highest variable index + 1).
    pub fn var_count(&self) -> usize {
        self.var_count
    }

    /// The magic exponent vector, as a monomial (the magic product P).
    pub fn magic(&self) -> &Monomial {
        &self.magic
    }

    pub fn get(&self, cell: Cell) -> &Monomial {
        &self.grid[cell.0 * self.n + cell.1]
    }

    pub fn entries(&self) -> &[Monomial] {
        &self.grid
    }

    pub fn transpose(&self) -> SquareForm {
        self.symmetry(4)
    }

    /// Applies one of the eight dihedral grid symmetries (see
    /// [`symmetry_source`]); the magic vector is unchanged.
    pub fn symmetry(&self, sym: usize) -> SquareForm {
        SquareForm {
            n: self.n,
            var_count: self.var_count,
            grid: apply_symmetry(&self.grid, self.n, sym),
            magic: self.magic.clone(),
        }
    }

    /// Relabels variables: entry exponents of variable `i` move to variable
    /// `perm[i]`. `perm` must be a permutation of `0..var_count`.
    pub fn relabel(&self, perm: &[usize]) -> SquareForm {
        assert_eq!(perm.len(), self.var_count);
        let map = |m: &Monomial| {
            let mut exps = vec![0u32; self.var_count];
            for (i, &e) in m.exponents().iter().enumerate() {
                exps[perm[i]] = e;
            }
            Monomial::from_exponents(exps)
        };
        SquareForm {
            n: self.n,
            var_count: self.var_count,
            grid: self.grid.iter().map(map).collect(),
            magic: map(&self.magic),
        }
    }

    /// Parses the form file format: n lines of n comma-separated monomials.
    pub fn parse(text: &str) -> Result<SquareForm, FormParseError> {
        let lines: Vec<&str> = text.lines().collect();
        let n = lines.len();
        if n == 0 {
            return Err(FormParseError { line: 1, column: 1, message: "empty form file".into() });
        }
        let mut grid = Vec::with_capacity(n * n);
        for (li, line) in lines.iter().enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n {
                return Err(FormParseError {
                    line: li + 1,
                    column: fields.len(),
                    message: format!("expected {n} fields, found {}", fields.len()),
                });
            }
            for (fi, field) in fields.iter().enumerate() {
                let m: Monomial =
                    field.trim().parse().map_err(|e: MonomialParseError| FormParseError {
                        line: li + 1,
                        column: fi + 1,
                        message: e.to_string(),
                    })?;
                grid.push(m);
            }
        }
        SquareForm::new(n, grid).map_err(|e| FormParseError {
            line: 1,
            column: 1,
            message: e.to_string(),
        })
    }
}

impl fmt::Display for SquareForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.n {
            for c in 0..self.n {
                if c > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get((r, c)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Checks the two square-form invariants: every strip's exponent sum equals
/// the magic vector (strips are checked first, in report order), and all
/// entries are pairwise distinct.
pub fn validate_form(form: &SquareForm) -> Result<(), FormError> {
    let n = form.n();
    for strip in strips(n) {
        let sum = strip
            .cells(n)
            .into_iter()
            .fold(Monomial::one(), |acc, cell| acc.mul(form.get(cell)));
        if sum != *form.magic() {
            return Err(FormError::StripMismatch {
                strip,
                found: sum,
                magic: form.magic().clone(),
            });
        }
    }
    let mut seen: BTreeMap<&Monomial, Cell> = BTreeMap::new();
    for r in 0..n {
        for c in 0..n {
            if let Some(&first) = seen.get(form.get((r, c))) {
                return Err(FormError::DuplicateEntries {
                    entry: form.get((r, c)).clone(),
                    first,
                    second: (r, c),
                });
            }
            seen.insert(form.get((r, c)), (r, c));
        }
    }
    Ok(())
}

/// Evaluates every entry under the assignment. The assignment must cover all
/// of the form's variables; since assignments hold distinct primes, the
/// result of a valid form is a multiplicative square of distinct entries.
pub fn evaluate_form(
    form: &SquareForm,
    assignment: &PrimeAssignment,
) -> Result<ConcreteSquare, AlgebraError> {
    let grid: Result<Vec<BigUint>, AlgebraError> =
        form.entries().iter().map(|m| evaluate(m, assignment)).collect();
    ConcreteSquare::new(form.n(), grid?).map_err(|_| AlgebraError::NonPositive)
}
