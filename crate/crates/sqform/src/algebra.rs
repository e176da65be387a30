//! Exact arithmetic over monomials in prime-placeholder variables, prime
//! signatures, integer factorization, and the sum-of-divisors function.
//!
//! A [`Monomial`] is a product of powers of variables `a, b, c, ...` standing
//! for distinct primes. Assigning actual primes to the variables (a
//! [`PrimeAssignment`]) evaluates a monomial to an exact integer. All value
//! paths use arbitrary-precision integers.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

/// Most variables a monomial may use; bounded by the `a..z` display alphabet.
pub const MAX_VARS: usize = 26;

/// A prime-placeholder variable, displayed as a lowercase letter
/// (index 0 is `a`, index 1 is `b`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(usize);

impl VarId {
    /// Creates a variable id. Panics if `index >= MAX_VARS` (a format limit,
    /// not a mathematical one).
    pub fn new(index: usize) -> VarId {
        assert!(index < MAX_VARS, "variable index {index} exceeds alphabet");
        VarId(index)
    }

    pub fn index(self) -> usize {
        self.0
    }

    fn from_letter(c: char) -> Option<VarId> {
        if c.is_ascii_lowercase() {
            Some(VarId(c as usize - 'a' as usize))
        } else {
            None
        }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", (b'a' + self.0 as u8) as char)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MonomialParseError {
    #[error("empty monomial text")]
    Empty,
    #[error("unexpected character {found:?} at byte {at}")]
    UnexpectedChar { found: char, at: usize },
    #[error("exponent overflow at byte {at}")]
    ExponentOverflow { at: usize },
    #[error("missing exponent digits at byte {at}")]
    MissingExponent { at: usize },
}

/// A product of powers of variables, stored as a dense exponent vector.
///
/// The vector never carries trailing zeros, so equality, hashing and ordering
/// are independent of the variable-count context a monomial came from. The
/// empty monomial is the constant `1`.
///
/// The text grammar is `"1"` or `*`-separated factors `letter('^'int)?`:
/// `a^7`, `a*d*e*f`, `b^2*e`, `1`. [`fmt::Display`] always renders the
/// canonical form (variables ascending, exponent 1 omitted), and
/// `parse::<Monomial>()` round-trips it bit-exactly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    /// The constant monomial `1`.
    pub fn one() -> Monomial {
        Monomial { exps: Vec::new() }
    }

    /// A single variable to the first power.
    pub fn var(v: VarId) -> Monomial {
        Monomial::from_exponents(
            (0..=v.index()).map(|i| u32::from(i == v.index())).collect::<Vec<_>>(),
        )
    }

    /// Builds a monomial from an exponent vector (position i = variable i).
    pub fn from_exponents(exps: impl Into<Vec<u32>>) -> Monomial {
        let mut exps = exps.into();
        while exps.last() == Some(&0) {
            exps.pop();
        }
        assert!(exps.len() <= MAX_VARS, "monomial uses more than {MAX_VARS} variables");
        Monomial { exps }
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    /// Exponent of `v` (zero when the variable does not occur).
    pub fn exponent(&self, v: VarId) -> u32 {
        self.exps.get(v.index()).copied().unwrap_or(0)
    }

    /// Normalized exponent vector (no trailing zeros).
    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    /// One past the highest variable index in use.
    pub fn var_count(&self) -> usize {
        self.exps.len()
    }

    pub fn total_degree(&self) -> u64 {
        self.exps.iter().map(|&e| u64::from(e)).sum()
    }

    /// Variables with positive exponent, ascending.
    pub fn support(&self) -> impl Iterator<Item = VarId> + '_ {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| VarId(i))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.exps.len().max(other.exps.len());
        let exps: Vec<u32> = (0..n)
            .map(|i| {
                self.exps.get(i).copied().unwrap_or(0) + other.exps.get(i).copied().unwrap_or(0)
            })
            .collect();
        Monomial::from_exponents(exps)
    }

    /// Componentwise quotient, or `None` when `other` does not divide `self`.
    pub fn try_div(&self, other: &Monomial) -> Option<Monomial> {
        if other.exps.len() > self.exps.len() {
            return None;
        }
        let exps: Option<Vec<u32>> = (0..self.exps.len())
            .map(|i| self.exps[i].checked_sub(other.exps.get(i).copied().unwrap_or(0)))
            .collect();
        exps.map(Monomial::from_exponents)
    }

    /// True when `self` divides `other` componentwise.
    pub fn divides(&self, other: &Monomial) -> bool {
        other.try_div(self).is_some()
    }

    /// The non-`v` component: `self` with the exponent of `v` zeroed.
    pub fn without_var(&self, v: VarId) -> Monomial {
        let mut exps = self.exps.clone();
        if v.index() < exps.len() {
            exps[v.index()] = 0;
        }
        Monomial::from_exponents(exps)
    }

    /// Quotient by the radical: every positive exponent decremented by one.
    pub fn shrink_by_radical(&self) -> Monomial {
        Monomial::from_exponents(
            self.exps.iter().map(|&e| e.saturating_sub(1)).collect::<Vec<_>>(),
        )
    }

    /// Compares by total degree first, then exponent-vector order; used where
    /// "largest first" candidate ordering is wanted.
    pub fn degree_then_lex(&self, other: &Monomial) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "{}", VarId(i))?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Monomial {
    type Err = MonomialParseError;

    fn from_str(s: &str) -> Result<Monomial, MonomialParseError> {
        if s.is_empty() {
            return Err(MonomialParseError::Empty);
        }
        if s == "1" {
            return Ok(Monomial::one());
        }
        let mut exps = vec![0u32; 0];
        let bytes = s.as_bytes();
        let mut pos = 0;
        loop {
            let c = *bytes.get(pos).ok_or(MonomialParseError::Empty)? as char;
            let var = VarId::from_letter(c).ok_or(MonomialParseError::UnexpectedChar {
                found: c,
                at: pos,
            })?;
            pos += 1;
            let mut exp: u32 = 1;
            if bytes.get(pos) == Some(&b'^') {
                pos += 1;
                let start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                if pos == start {
                    return Err(MonomialParseError::MissingExponent { at: start });
                }
                exp = s[start..pos]
                    .parse()
                    .map_err(|_| MonomialParseError::ExponentOverflow { at: start })?;
            }
            if var.index() >= exps.len() {
                exps.resize(var.index() + 1, 0);
            }
            exps[var.index()] = exps[var.index()]
                .checked_add(exp)
                .ok_or(MonomialParseError::ExponentOverflow { at: pos })?;
            match bytes.get(pos) {
                None => break,
                Some(&b'*') => pos += 1,
                Some(&c) => {
                    return Err(MonomialParseError::UnexpectedChar {
                        found: c as char,
                        at: pos,
                    })
                }
            }
        }
        Ok(Monomial::from_exponents(exps))
    }
}

/// The multiset of exponents in an integer's prime factorization, stored
/// sorted descending. The integer 1 has the empty signature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PrimeSignature {
    exps: Vec<u32>,
}

impl PrimeSignature {
    pub fn new(exps: impl Into<Vec<u32>>) -> PrimeSignature {
        let mut exps = exps.into();
        assert!(exps.iter().all(|&e| e >= 1), "signature elements must be positive");
        exps.sort_unstable_by(|a, b| b.cmp(a));
        PrimeSignature { exps }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    /// The magic exponent vector canonically associated with this signature:
    /// variable `a` gets the largest exponent, and so on.
    pub fn as_magic(&self) -> Monomial {
        Monomial::from_exponents(self.exps.clone())
    }
}

impl fmt::Display for PrimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.exps.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("input must be a positive integer")]
    NonPositive,
    #[error("input exceeds the 2^96 factorization guard")]
    TooLarge,
    #[error("no prime assigned to variable {0}")]
    MissingVariable(VarId),
    #[error("{0} failed the primality check")]
    NotPrime(BigUint),
    #[error("prime {0} assigned to more than one variable")]
    DuplicatePrime(BigUint),
}

/// A mapping from variables to distinct primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeAssignment {
    primes: BTreeMap<VarId, BigUint>,
}

impl PrimeAssignment {
    /// Validates that every value is prime and that values are pairwise
    /// distinct.
    pub fn new(
        pairs: impl IntoIterator<Item = (VarId, BigUint)>,
    ) -> Result<PrimeAssignment, AlgebraError> {
        let mut primes = BTreeMap::new();
        for (v, p) in pairs {
            if !is_prime(&p) {
                return Err(AlgebraError::NotPrime(p));
            }
            if primes.values().any(|q| *q == p) {
                return Err(AlgebraError::DuplicatePrime(p));
            }
            primes.insert(v, p);
        }
        Ok(PrimeAssignment { primes })
    }

    /// Assigns `primes[i]` to variable `i`.
    pub fn from_small(primes: &[u64]) -> Result<PrimeAssignment, AlgebraError> {
        PrimeAssignment::new(
            primes
                .iter()
                .enumerate()
                .map(|(i, &p)| (VarId::new(i), BigUint::from(p))),
        )
    }

    pub fn get(&self, v: VarId) -> Option<&BigUint> {
        self.primes.get(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &BigUint)> {
        self.primes.iter().map(|(&v, p)| (v, p))
    }

    /// Number of variables covered.
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// True when every variable index below `var_count` has a prime.
    pub fn covers(&self, var_count: usize) -> bool {
        (0..var_count).all(|i| self.primes.contains_key(&VarId::new(i)))
    }
}

// Witnesses for the deterministic Miller-Rabin test: the first 13 primes
// decide primality for everything below 3317044064679887385961981.
const MR_BASES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
const MR_PROVEN_LIMIT: &str = "3317044064679887385961981";

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'base: for &a in &MR_BASES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'base;
            }
        }
        return false;
    }
    true
}

fn is_prime_biguint_mr(n: &BigUint) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'base: for &a in &MR_BASES {
        let a = BigUint::from(a);
        if &a >= n {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'base;
            }
        }
        return false;
    }
    true
}

/// Deterministic primality test.
///
/// Inputs below 3.3e24 are decided by Miller-Rabin with a proven witness set;
/// larger inputs fall back to trial division (correct but slow; evaluation
/// primes in practice are small).
pub fn is_prime(n: &BigUint) -> bool {
    if let Ok(small) = u64::try_from(n) {
        return is_prime_u64(small);
    }
    for p in MR_BASES {
        if (n % BigUint::from(p)).is_zero() {
            return false;
        }
    }
    if *n < BigUint::from_str(MR_PROVEN_LIMIT).unwrap() {
        return is_prime_biguint_mr(n);
    }
    // Unconditional fallback.
    let mut d = BigUint::from(43u32);
    while &d * &d <= *n {
        if (n % &d).is_zero() {
            return false;
        }
        d += 2u32;
    }
    true
}

/// Prime factorization by trial division, smallest prime first.
///
/// Accepts any positive integer up to 2^96 (inputs are curated magic-product
/// candidates, not cryptographic sizes); larger inputs are rejected rather
/// than risking an open-ended factoring run. Returns the empty list for 1.
pub fn factorize(n: &BigUint) -> Result<Vec<(BigUint, u32)>, AlgebraError> {
    if n.is_zero() {
        return Err(AlgebraError::NonPositive);
    }
    if n.bits() > 96 {
        return Err(AlgebraError::TooLarge);
    }
    let mut rem: u128 = u128::try_from(n).expect("96-bit guarded");
    let mut factors: Vec<(BigUint, u32)> = Vec::new();
    let mut push = |p: u128, e: u32, out: &mut Vec<(BigUint, u32)>| {
        out.push((BigUint::from(p), e));
    };
    let mut extract = |rem: &mut u128, p: u128| -> u32 {
        let mut e = 0;
        while *rem % p == 0 {
            *rem /= p;
            e += 1;
        }
        e
    };
    for p in [2u128, 3, 5] {
        let e = extract(&mut rem, p);
        if e > 0 {
            push(p, e, &mut factors);
        }
    }
    let mut p: u128 = 7;
    // 2-4-2-4... steps walk the numbers coprime to 2 and 3.
    let mut step: u128 = 4;
    while rem > 1 {
        if rem <= u128::from(u64::MAX) && is_prime_u64(rem as u64) {
            push(rem, 1, &mut factors);
            break;
        }
        if p * p > rem {
            push(rem, 1, &mut factors);
            break;
        }
        let e = extract(&mut rem, p);
        if e > 0 {
            push(p, e, &mut factors);
            if rem > u128::from(u64::MAX) && is_prime(&BigUint::from(rem)) {
                push(rem, 1, &mut factors);
                break;
            }
        }
        p += step;
        step = 6 - step;
    }
    Ok(factors)
}

/// The prime signature of `n`: its factorization exponents as a multiset.
pub fn signature_of(n: &BigUint) -> Result<PrimeSignature, AlgebraError> {
    let exps: Vec<u32> = factorize(n)?.into_iter().map(|(_, e)| e).collect();
    Ok(PrimeSignature::new(exps))
}

/// Evaluates a monomial to an exact integer under a prime assignment.
pub fn evaluate(m: &Monomial, assignment: &PrimeAssignment) -> Result<BigUint, AlgebraError> {
    let mut acc = BigUint::one();
    for v in m.support() {
        let p = assignment.get(v).ok_or(AlgebraError::MissingVariable(v))?;
        acc *= p.pow(m.exponent(v));
    }
    Ok(acc)
}

/// Sum of divisors of the evaluated monomial, by the closed-form product
/// `sigma(p1^n1 ... pk^nk) = prod (p_i^(n_i+1) - 1)/(p_i - 1)`.
pub fn sigma(m: &Monomial, assignment: &PrimeAssignment) -> Result<BigUint, AlgebraError> {
    let one = BigUint::one();
    let mut acc = BigUint::one();
    for v in m.support() {
        let p = assignment.get(v).ok_or(AlgebraError::MissingVariable(v))?;
        let num = p.pow(m.exponent(v) + 1) - &one;
        let den = p - &one;
        acc *= num / den;
    }
    Ok(acc)
}

/// The two sides of the sigma inequality: for a monomial with all-positive
/// exponents, `sigma` of the exponent-decremented monomial (left) is always
/// strictly below the value of the monomial itself (right).
pub fn sigma_lemma_gap(
    m: &Monomial,
    assignment: &PrimeAssignment,
) -> Result<(BigUint, BigUint), AlgebraError> {
    let lhs = sigma(&m.shrink_by_radical(), assignment)?;
    let rhs = evaluate(m, assignment)?;
    Ok((lhs, rhs))
}
