//! Decision procedures for `G²` and `(G + α𝟏)²`.
//!
//! All index pairs and triples are 0-based.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::matrix::{RowSums, SymMatrix};
use crate::mclass::{find_signature, is_m_matrix, SignatureVector};
use crate::scalar::{Scalar, Tolerance};

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroMeanVerdict {
    pub infinitely_divisible: bool,
    /// `N` with `N·Γ⁻¹·N` an M-matrix, present iff divisible.
    pub signature: Option<SignatureVector>,
}

/// `G²` is infinitely divisible iff `N·Γ⁻¹·N` is an M-matrix for some signature `N`.
pub fn zero_mean_id(gamma: &SymMatrix, tol: Tolerance) -> Result<ZeroMeanVerdict> {
    if let Some(minor) = gamma.first_nonpositive_minor(tol) {
        return Err(Error::NotPositiveDefinite { minor });
    }
    if !gamma.is_irreducible(tol) {
        return Err(Error::NotIrreducible);
    }
    let signature = find_signature(&gamma.invert(tol)?, tol)?;
    Ok(ZeroMeanVerdict { infinitely_divisible: signature.is_some(), signature })
}

/// Pairs `(i, j)`, `i < j`, with `D_i·D_j < 0` strictly.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DiscordantPairs {
    pub pairs: Vec<(usize, usize)>,
}

impl DiscordantPairs {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.pairs.contains(&key)
    }
}

pub fn discordant_pairs(d: &RowSums, tol: Tolerance) -> DiscordantPairs {
    let scale = d.scale();
    let signs: Vec<Ordering> = d.values().iter().map(|x| tol.sign(x, scale)).collect();
    let n = signs.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let discordant = matches!(
                (signs[i], signs[j]),
                (Ordering::Less, Ordering::Greater) | (Ordering::Greater, Ordering::Less)
            );
            if discordant {
                pairs.push((i, j));
            }
        }
    }
    DiscordantPairs { pairs }
}

/// Upper bound on the critical point `α₀` of `(G + α𝟏)²`.
///
/// The bound is symmetric in the sign of `α`; only `α ≥ 0` is reported.
#[derive(Clone, Debug, PartialEq)]
pub enum CriticalBound {
    /// `𝒟` is empty: `(G + α𝟏)²` is infinitely divisible for every `α`.
    NoCriticalPoint,
    /// Some discordant pair has `Γ⁻¹[i][j] = 0`, forcing `α₀ = 0`.
    BoundZero { witness: (usize, usize) },
    /// `α₀ ≤ sqrt(radicand)`, attained at `witness`.
    Bound { radicand: Scalar, value: f64, witness: (usize, usize) },
    /// `Γ⁻¹` is not an M-matrix, so `G²` itself is not infinitely divisible.
    NotApplicable,
}

impl CriticalBound {
    pub fn witness(&self) -> Option<(usize, usize)> {
        match self {
            CriticalBound::BoundZero { witness } | CriticalBound::Bound { witness, .. } => Some(*witness),
            _ => None,
        }
    }
}

/// `inf over 𝒟 of sqrt(Γ⁻¹[i][j] / (2·D_i·D_j))`.
///
/// Both numerator and denominator are negative on `𝒟`, so every radicand is
/// positive. Ties go to the lexicographically first pair.
pub fn critical_bound(gamma_inv: &SymMatrix, d: &RowSums, tol: Tolerance) -> Result<CriticalBound> {
    if d.len() != gamma_inv.dim() {
        return Err(Error::DimensionMismatch { expected: gamma_inv.dim(), got: d.len() });
    }
    if !is_m_matrix(gamma_inv, tol)?.is_m_matrix {
        return Ok(CriticalBound::NotApplicable);
    }
    let pairs = discordant_pairs(d, tol);
    if pairs.is_empty() {
        return Ok(CriticalBound::NoCriticalPoint);
    }
    let scale = gamma_inv.max_abs();
    if let Some(&witness) = pairs.pairs.iter().find(|&&(i, j)| tol.is_zero(gamma_inv.get(i, j), scale)) {
        return Ok(CriticalBound::BoundZero { witness });
    }
    let mut best: Option<(Scalar, (usize, usize))> = None;
    for &(i, j) in &pairs.pairs {
        let denom = d.get(i) * d.get(j) * d.get(i).int_like(2);
        let radicand = gamma_inv.get(i, j).checked_div(&denom)?;
        let better = match &best {
            None => true,
            Some((current, _)) => radicand < *current,
        };
        if better {
            best = Some((radicand, (i, j)));
        }
    }
    let (radicand, witness) = best.expect("nonempty discordant set");
    let value = radicand.sqrt_f64();
    Ok(CriticalBound::Bound { radicand, value, witness })
}

/// Smallest power with a nonzero `(i, j)` entry, and that entry's sign.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroOrder {
    pub k: u32,
    pub sign: i8,
    pub entry: Scalar,
}

/// `k = min{l ≥ 1 : (Γ⁻ˡ)[i][j] ≠ 0}` for an irreducible M-matrix.
///
/// Fails with `AssertionViolation` if `k > n - 1` or the entry's sign is not
/// `(-1)^k`; both are theorems for valid input.
pub fn zero_order(gamma_inv: &SymMatrix, i: usize, j: usize, tol: Tolerance) -> Result<ZeroOrder> {
    let n = gamma_inv.dim();
    if i == j || i >= n || j >= n {
        return Err(Error::InvalidArgument(format!("need distinct indices below {n}, got ({i},{j})")));
    }
    if !gamma_inv.is_irreducible(tol) {
        return Err(Error::NotIrreducible);
    }
    if !is_m_matrix(gamma_inv, tol)?.is_m_matrix {
        return Err(Error::NotMMatrix);
    }
    let mut power = gamma_inv.clone();
    for k in 1..n as u32 {
        if k > 1 {
            power = power_step(&power, gamma_inv);
        }
        let entry = power.get(i, j);
        match tol.sign(entry, power.max_abs()) {
            Ordering::Equal => continue,
            s => {
                let sign = if s == Ordering::Greater { 1 } else { -1 };
                let expected = if k % 2 == 0 { 1 } else { -1 };
                if sign != expected {
                    return Err(Error::AssertionViolation(format!(
                        "(Γ^-{k})[{i}][{j}] has sign {sign}, expected {expected}"
                    )));
                }
                return Ok(ZeroOrder { k, sign, entry: entry.clone() });
            }
        }
    }
    Err(Error::AssertionViolation(format!(
        "(Γ^-l)[{i}][{j}] vanishes for every l ≤ {}",
        n - 1
    )))
}

fn power_step(power: &SymMatrix, base: &SymMatrix) -> SymMatrix {
    let n = base.dim();
    SymMatrix::from_upper(n, |a, b| {
        power.row(a).iter().zip(base.row(b)).map(|(x, y)| x * y).sum()
    })
}

/// Triple `(i, j, k)` proving `(G + α𝟏)²` is never infinitely divisible:
/// `Γ⁻¹[k][j] < 0`, `Γ⁻¹[i][k] < 0`, `Γ⁻¹[j][i] > 0` and `D_i, D_j, D_k > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NonIdCertificate {
    pub triple: (usize, usize, usize),
}

/// First certificate in lexicographic order of ordered triples, if any.
///
/// Requires `gamma` entrywise positive and strictly positive definite.
pub fn non_id_certificate(gamma: &SymMatrix, tol: Tolerance) -> Result<Option<NonIdCertificate>> {
    if let Some(minor) = gamma.first_nonpositive_minor(tol) {
        return Err(Error::NotPositiveDefinite { minor });
    }
    let n = gamma.dim();
    let scale = gamma.max_abs();
    for row in 0..n {
        for col in row..n {
            if !tol.is_positive(gamma.get(row, col), scale) {
                return Err(Error::NotEntrywisePositive { row, col });
            }
        }
    }
    let inv = gamma.invert(tol)?;
    let d = inv.row_sums();
    let inv_scale = inv.max_abs();
    let d_scale = d.scale();
    let positive_row: Vec<bool> = d.values().iter().map(|x| tol.is_positive(x, d_scale)).collect();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                if tol.is_negative(inv.get(k, j), inv_scale)
                    && tol.is_negative(inv.get(i, k), inv_scale)
                    && tol.is_positive(inv.get(j, i), inv_scale)
                    && positive_row[i]
                    && positive_row[j]
                    && positive_row[k]
                {
                    return Ok(Some(NonIdCertificate { triple: (i, j, k) }));
                }
            }
        }
    }
    Ok(None)
}

/// `C·Γ⁻¹·C` is an M-matrix with nonnegative row sums, `C = diag(c)`.
pub fn var_mean_condition3(gamma: &SymMatrix, c: &[Scalar], tol: Tolerance) -> Result<bool> {
    if c.len() != gamma.dim() {
        return Err(Error::DimensionMismatch { expected: gamma.dim(), got: c.len() });
    }
    let conj = gamma.invert(tol)?.conjugate_diag(c)?;
    let verdict = match is_m_matrix(&conj, tol) {
        Ok(v) => v,
        Err(Error::SingularMatrix) => return Ok(false),
        Err(e) => return Err(e),
    };
    if !verdict.is_m_matrix {
        return Ok(false);
    }
    let d = conj.row_sums();
    let scale = d.scale().max(conj.max_abs());
    Ok(d.values().iter().all(|x| !tol.is_negative(x, scale)))
}

/// Covariance of `(G₁ + c₁η, …, Gₙ + cₙη, η)` with `η ~ N(0, b)` independent of `G`.
pub fn extended_covariance(gamma: &SymMatrix, c: &[Scalar], b: &Scalar) -> Result<SymMatrix> {
    let n = gamma.dim();
    if c.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: c.len() });
    }
    Ok(SymMatrix::from_upper(n + 1, |i, j| match (i < n, j < n) {
        (true, true) => gamma.get(i, j) + &(&(b * &c[i]) * &c[j]),
        (true, false) => b * &c[i],
        (false, true) => b * &c[j],
        (false, false) => b.clone(),
    }))
}

/// The squares of `(G + cη, η)` are infinitely divisible; the answer does not
/// depend on `b > 0`.
pub fn var_mean_condition2(gamma: &SymMatrix, c: &[Scalar], b: &Scalar, tol: Tolerance) -> Result<bool> {
    if tol.sign(b, b.abs_f64()) != Ordering::Greater {
        return Err(Error::InvalidArgument(format!("variance b must be positive, got {b}")));
    }
    let ext = extended_covariance(gamma, c, b)?;
    Ok(zero_mean_id(&ext, tol)?.infinitely_divisible)
}
