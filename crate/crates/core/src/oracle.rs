//! Brute-force coefficient extraction by enumerating every index word.
//!
//! Nothing here shares code paths with [`crate::series`] beyond matrix
//! arithmetic, so agreement between the two is meaningful.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::scalar::Scalar;
use crate::series::CoefficientKey;

/// Default cap on enumerated words per call.
pub const DEFAULT_ORACLE_BUDGET: u128 = 10_000_000;

/// Every word `(i₁, …, iₘ)` over `{0, …, n-1}`, in odometer order.
#[derive(Clone, Debug)]
pub struct WordEnumeration {
    n: usize,
    current: Vec<usize>,
    done: bool,
    visited: u128,
}

impl WordEnumeration {
    pub fn new(n: usize, m: usize) -> Self {
        WordEnumeration { n, current: vec![0; m], done: n == 0, visited: 0 }
    }

    /// Words yielded so far.
    pub fn visited(&self) -> u128 {
        self.visited
    }

    pub fn total(n: usize, m: usize, budget: u128) -> Result<u128> {
        let mut required: u128 = 1;
        for _ in 0..m {
            required = required.saturating_mul(n as u128);
        }
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        Ok(required)
    }
}

impl Iterator for WordEnumeration {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        self.visited += 1;
        let mut pos = self.current.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.current[pos] += 1;
            if self.current[pos] < self.n {
                break;
            }
            self.current[pos] = 0;
        }
        Some(out)
    }
}

/// `m! / ∏ kᵢ!`: the number of words with occurrence counts `key`.
pub fn multinomial(key: &CoefficientKey) -> BigUint {
    let fact = |k: u32| (1..=k).fold(BigUint::one(), |a, b| a * b);
    let denom = key.exponents().iter().fold(BigUint::one(), |a, &k| a * fact(k));
    fact(key.degree()) / denom
}

fn has_counts(word: &[usize], key: &CoefficientKey) -> bool {
    let mut counts = vec![0u32; key.exponents().len()];
    for &w in word {
        counts[w] += 1;
    }
    counts == key.exponents()
}

fn check_key(q: &SymMatrix, key: &CoefficientKey) -> Result<usize> {
    if key.exponents().len() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), got: key.exponents().len() });
    }
    if key.degree() == 0 {
        return Err(Error::InvalidArgument("constant key has no word expansion".into()));
    }
    Ok(key.degree() as usize)
}

fn count_mismatch(found: u128, key: &CoefficientKey) -> Error {
    Error::AssertionViolation(format!("visited {found} words for {key}, expected {}", multinomial(key)))
}

/// `(1/2m) · Σ_{words with counts = key} q_{i₁i₂} q_{i₂i₃} ⋯ q_{iₘi₁}`.
pub fn brute_phi1_coefficient(q: &SymMatrix, key: &CoefficientKey, budget: u128) -> Result<Scalar> {
    let m = check_key(q, key)?;
    WordEnumeration::total(q.dim(), m, budget)?;
    let mut sum = q.get(0, 0).int_like(0);
    let mut matched: u128 = 0;
    for word in WordEnumeration::new(q.dim(), m) {
        if !has_counts(&word, key) {
            continue;
        }
        matched += 1;
        let mut prod = q.get(0, 0).int_like(1);
        for l in 0..m {
            prod = prod * q.get(word[l], word[(l + 1) % m]);
        }
        sum = sum + prod;
    }
    if Some(matched) != multinomial(key).to_u128() {
        return Err(count_mismatch(matched, key));
    }
    Ok(sum / q.get(0, 0).int_like(2 * m as i64))
}

/// Degree-`m` part of `(α²t/2)·𝟏[(I - Q⁻¹)(QS)ᵐ(Q - I)]𝟏ᵀ` using `I - Q⁻¹ = -Γ⁻¹/t`:
///
/// ```text
/// (α²t/2) · Σ_{words} (-𝟏Γ⁻¹Q/t)_{i₁} · q_{i₁i₂} ⋯ q_{iₘ₋₁iₘ} · ((Q - I)𝟏)_{iₘ}
/// ```
pub fn brute_phi2_coefficient(
    q: &SymMatrix,
    gamma_inv: &SymMatrix,
    alpha: &Scalar,
    t: &Scalar,
    key: &CoefficientKey,
    budget: u128,
) -> Result<Scalar> {
    let m = check_key(q, key)?;
    let n = q.dim();
    WordEnumeration::total(n, m, budget)?;
    let gq = gamma_inv.mul_dense(q)?;
    let left: Vec<Scalar> = (0..n)
        .map(|a| -((0..n).map(|r| gq[r][a].clone()).sum::<Scalar>()) / t.clone())
        .collect();
    let id = SymMatrix::identity(n, q.is_exact());
    let right = q.sub(&id)?.row_sums();
    let mut sum = q.get(0, 0).int_like(0);
    let mut matched: u128 = 0;
    for word in WordEnumeration::new(n, m) {
        if !has_counts(&word, key) {
            continue;
        }
        matched += 1;
        let mut prod = &left[word[0]] * right.get(word[m - 1]);
        for l in 0..m - 1 {
            prod = prod * q.get(word[l], word[l + 1]);
        }
        sum = sum + prod;
    }
    if Some(matched) != multinomial(key).to_u128() {
        return Err(count_mismatch(matched, key));
    }
    Ok(sum * (&(alpha * alpha) * t) / alpha.int_like(2))
}

/// Largest `α` with `|Γ⁻¹₁₂|/2 + α²D₁D₂ > 0`, found by bisection to `1e-12`.
///
/// `None` when `D₁D₂ ≥ 0`, where the inequality never fails.
pub fn brute_2x2_bound(gamma_inv: &SymMatrix, d: &[f64]) -> Result<Option<f64>> {
    if gamma_inv.dim() != 2 || d.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: gamma_inv.dim().max(d.len()) });
    }
    let g = gamma_inv.get(0, 1).to_f64().abs();
    let dd = d[0] * d[1];
    if dd >= 0.0 {
        return Ok(None);
    }
    let holds = |a: f64| g / 2.0 + a * a * dd > 0.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while holds(hi) {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}
