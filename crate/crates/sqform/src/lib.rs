//! Exact-arithmetic toolkit for additive-multiplicative magic squares.
//!
//! An additive-multiplicative magic square is a grid of distinct positive
//! integers whose rows, columns, and both long diagonals share one sum (the
//! magic sum) and one product (the magic product). This crate works with such
//! squares both concretely and symbolically:
//!
//! - [`algebra`]: monomials in prime-placeholder variables, prime signatures,
//!   factorization, and the sum-of-divisors function — all exact.
//! - [`board`]: concrete squares and symbolic square forms, strip
//!   enumeration, magic verification, form validation and evaluation.
//! - [`zones`]: pairwise zones — disjoint cell regions derived from two strip
//!   collections that any magic square must balance in sum and product.
//! - [`filters`]: unacceptability checks and prime-value constraints that
//!   rule square forms out (or pin their variables down) before any search,
//!   plus a bounded congruence solver for per-form refutations.
//! - [`search`]: backtracking enumeration of square forms for a magic
//!   exponent vector, canonical symmetry breaking, prime-assignment search,
//!   the end-to-end pipeline, and the on-disk form cache.

pub mod algebra;
pub mod board;

pub use algebra::{
    evaluate, factorize, is_prime, sigma, sigma_lemma_gap, signature_of, Monomial,
    PrimeAssignment, PrimeSignature, VarId,
};
pub use board::{check_magic, strips, ConcreteSquare, MagicReport, SquareForm, Strip};
