//! Truncated power-series expansion of the log-Laplace transform of `(G + α𝟏)²`.
//!
//! With `Λ = t(I - S)` and `Q = I - (I + tΓ)⁻¹`, the log-Laplace transform
//! splits as `Φ = Φ₁ + Φ₂` where
//!
//! ```text
//! Φ₁ = ½ log det(I - Q) + ½ Σ_m trace((QS)^m) / m
//! Φ₂ = (α²t/2) 𝟏[(Q - I) + (I - Q⁻¹) Σ_m (QS)^m (Q - I)]𝟏ᵀ
//! ```
//!
//! Since `Q·Γ⁻¹ = t(I - Q)`, the degree-`m` part of `Φ₂` equals
//! `(α²t/2)·uᵀ(QS)^{m-1}·diag(s)·u`-style path sums with `u = (I - Q)𝟏`, and the
//! expansion here uses that symmetric form. Both parts are built from one pass
//! over path polynomials `W_m[a][b]` (sum over index words from `a` to `b` of
//! length `m`), so tables are exact functions of `t` when the inputs are
//! rational.
//!
//! Infinite divisibility requires every non-constant coefficient to be
//! nonnegative for all large `t`. [`truncated_id_check`] tests this up to a
//! finite order on a ladder of `t` values, which makes it a semi-decision.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::divisibility::zero_order;
use crate::error::{Error, Result};
use crate::matrix::{RowSums, SymMatrix};
use crate::scalar::{Scalar, Tolerance};

/// Default cap on enumerated index sequences.
pub const DEFAULT_BUDGET: u128 = 2_000_000;

/// Exponent multi-index `(k₁, …, kₙ)` of a monomial `s₁^k₁ ⋯ sₙ^kₙ`.
///
/// Ordered by total degree, then lexicographically by exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoefficientKey(Vec<u32>);

impl CoefficientKey {
    pub fn new(exponents: Vec<u32>) -> Self {
        CoefficientKey(exponents)
    }

    /// `s_i^{m_i} · s_j^{m_j}` in `n` variables.
    pub fn pair(n: usize, i: usize, mi: u32, j: usize, mj: u32) -> Self {
        let mut e = vec![0; n];
        e[i] += mi;
        e[j] += mj;
        CoefficientKey(e)
    }

    /// Key with exponent 1 at each listed index.
    pub fn product(n: usize, indices: &[usize]) -> Self {
        let mut e = vec![0; n];
        for &i in indices {
            e[i] += 1;
        }
        CoefficientKey(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn monomial(&self, s: &[Scalar]) -> Scalar {
        self.0
            .iter()
            .zip(s)
            .filter(|(&k, _)| k > 0)
            .fold(s[0].int_like(1), |acc, (&k, x)| acc * x.pow(k))
    }
}

impl Ord for CoefficientKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for CoefficientKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CoefficientKey {
    /// 1-based, e.g. `s1^2 s3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(i, &k)| if k == 1 { format!("s{}", i + 1) } else { format!("s{}^{k}", i + 1) })
            .collect();
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// Constant term `½·ln(log_det_argument) + offset`.
///
/// Only the logarithm leaves the rationals, so the argument is kept exact.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantTerm {
    pub log_det_argument: Scalar,
    pub offset: Scalar,
}

impl ConstantTerm {
    pub fn value(&self) -> f64 {
        0.5 * self.log_det_argument.ln() + self.offset.to_f64()
    }

    fn merge(&self, other: &ConstantTerm) -> ConstantTerm {
        ConstantTerm {
            log_det_argument: &self.log_det_argument * &other.log_det_argument,
            offset: &self.offset + &other.offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    /// `None` for a `Φ₁` table built from `Q` alone.
    pub t: Option<Scalar>,
    pub alpha: Scalar,
    pub order: u32,
    pub constant: ConstantTerm,
    terms: BTreeMap<CoefficientKey, Scalar>,
}

impl CoefficientTable {
    pub fn get(&self, key: &CoefficientKey) -> Option<&Scalar> {
        self.terms.get(key)
    }

    /// Coefficient of `key`, zero when absent.
    pub fn coefficient(&self, key: &CoefficientKey) -> Scalar {
        self.terms.get(key).cloned().unwrap_or_else(|| self.alpha.int_like(0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CoefficientKey, &Scalar)> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &CoefficientKey> {
        self.terms.keys()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of absolute coefficient values.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(Scalar::abs_f64).sum()
    }

    /// Termwise sum of two tables over the same variables.
    pub fn merged(&self, other: &CoefficientTable) -> CoefficientTable {
        let mut terms = self.terms.clone();
        for (k, v) in &other.terms {
            let entry = terms.entry(k.clone()).or_insert_with(|| v.int_like(0));
            *entry = &*entry + v;
        }
        terms.retain(|_, v| !v.is_zero());
        CoefficientTable {
            t: self.t.clone().or_else(|| other.t.clone()),
            alpha: if self.alpha.is_zero() { other.alpha.clone() } else { self.alpha.clone() },
            order: self.order.min(other.order),
            constant: self.constant.merge(&other.constant),
            terms,
        }
    }

    /// `Σ coefficient · monomial(s)` over non-constant terms.
    pub fn polynomial_part(&self, s: &[Scalar]) -> Scalar {
        self.terms.iter().map(|(k, v)| v * &k.monomial(s)).fold(self.alpha.int_like(0), |a, b| a + b)
    }

    /// Truncated series value at `s`.
    pub fn evaluate(&self, s: &[Scalar]) -> f64 {
        self.constant.value() + self.polynomial_part(s).to_f64()
    }
}

/// `Q(t) = I - (I + tΓ)⁻¹`.
pub fn compute_q(gamma: &SymMatrix, t: &Scalar, tol: Tolerance) -> Result<SymMatrix> {
    if tol.sign(t, t.abs_f64()) != Ordering::Greater {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let n = gamma.dim();
    let exact = gamma.is_exact() && t.is_exact();
    let id = SymMatrix::identity(n, exact);
    let shifted = id.add(&gamma.scale(t))?;
    id.sub(&shifted.invert(tol)?)
}

// Monomial polynomials keyed by exponent vectors.
type Poly = HashMap<Vec<u32>, Scalar>;

fn add_into(poly: &mut Poly, key: Vec<u32>, value: Scalar) {
    match poly.get_mut(&key) {
        Some(v) => *v = &*v + &value,
        None => {
            poly.insert(key, value);
        }
    }
}

fn check_budget(n: usize, order: u32, budget: u128) -> Result<()> {
    let mut required: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..order {
        level = level.saturating_mul(n as u128);
        required = required.saturating_add(level);
    }
    if required > budget {
        return Err(Error::OrderTooLarge { required, budget });
    }
    Ok(())
}

/// Accumulates per-degree contributions of the path polynomials
/// `W_m[a][b] = Σ_{words a=a₁…a_m=b} q_{a₁a₂}⋯q_{a_{m-1}a_m} · s_{a₁}⋯s_{a_m}`.
///
/// `visit(m, a, b, poly)` is called for every nonempty entry of every degree.
fn for_each_path_polynomial(
    q: &SymMatrix,
    order: u32,
    budget: u128,
    mut visit: impl FnMut(u32, usize, usize, &Poly),
) -> Result<()> {
    let n = q.dim();
    if order == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    check_budget(n, order, budget)?;
    let one = q.get(0, 0).int_like(1);
    let mut w: Vec<Vec<Poly>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let mut p = Poly::new();
                    if a == b {
                        let mut e = vec![0; n];
                        e[a] = 1;
                        p.insert(e, one.clone());
                    }
                    p
                })
                .collect()
        })
        .collect();
    for m in 1..=order {
        if m > 1 {
            let mut next: Vec<Vec<Poly>> = vec![vec![Poly::new(); n]; n];
            for a in 0..n {
                for b in 0..n {
                    let target = &mut next[a][b];
                    for c in 0..n {
                        let qcb = q.get(c, b);
                        if qcb.is_zero() {
                            continue;
                        }
                        for (key, coef) in &w[a][c] {
                            let mut k = key.clone();
                            k[b] += 1;
                            add_into(target, k, coef * qcb);
                        }
                    }
                }
            }
            w = next;
        }
        for a in 0..n {
            for b in 0..n {
                if !w[a][b].is_empty() {
                    visit(m, a, b, &w[a][b]);
                }
            }
        }
    }
    Ok(())
}

fn finish_terms(poly: Poly) -> BTreeMap<CoefficientKey, Scalar> {
    poly.into_iter()
        .filter(|(_, v)| !v.is_zero())
        .map(|(k, v)| (CoefficientKey(k), v))
        .collect()
}

/// `u = (I - Q)𝟏 = (I + tΓ)⁻¹𝟏`.
fn right_vector(q: &SymMatrix) -> Vec<Scalar> {
    q.row_sums().values().iter().map(|x| x.int_like(1) - x).collect()
}

/// `Φ₁` up to total degree `order`.
pub fn phi1_table(q: &SymMatrix, order: u32, budget: u128) -> Result<CoefficientTable> {
    let n = q.dim();
    let mut acc = Poly::new();
    for_each_path_polynomial(q, order, budget, |m, a, b, poly| {
        let close = q.get(b, a);
        if close.is_zero() {
            return;
        }
        let factor = close / &close.int_like(2 * m as i64);
        for (k, v) in poly {
            add_into(&mut acc, k.clone(), v * &factor);
        }
    })?;
    let id = SymMatrix::identity(n, q.is_exact());
    let zero = q.get(0, 0).int_like(0);
    Ok(CoefficientTable {
        t: None,
        alpha: zero.clone(),
        order,
        constant: ConstantTerm { log_det_argument: id.sub(q)?.determinant(), offset: zero },
        terms: finish_terms(acc),
    })
}

/// `Φ₂` up to total degree `order`, exact at the given `t`.
pub fn phi2_table(q: &SymMatrix, alpha: &Scalar, t: &Scalar, order: u32, budget: u128) -> Result<CoefficientTable> {
    let u = right_vector(q);
    let prefactor = &(&(alpha * alpha) * t) / &alpha.int_like(2);
    let mut acc = Poly::new();
    if !prefactor.is_zero() {
        for_each_path_polynomial(q, order, budget, |_, a, b, poly| {
            let factor = &(&u[a] * &u[b]) * &prefactor;
            if factor.is_zero() {
                return;
            }
            for (k, v) in poly {
                add_into(&mut acc, k.clone(), v * &factor);
            }
        })?;
    } else {
        check_budget(q.dim(), order, budget)?;
    }
    let total_u: Scalar = u.iter().cloned().fold(prefactor.int_like(0), |a, b| a + b);
    Ok(CoefficientTable {
        t: Some(t.clone()),
        alpha: alpha.clone(),
        order,
        constant: ConstantTerm { log_det_argument: prefactor.int_like(1), offset: -(&prefactor * &total_u) },
        terms: finish_terms(acc),
    })
}

/// `Φ = Φ₁ + Φ₂` from a single path enumeration.
pub fn phi_table(q: &SymMatrix, alpha: &Scalar, t: &Scalar, order: u32, budget: u128) -> Result<CoefficientTable> {
    let n = q.dim();
    let u = right_vector(q);
    let prefactor = &(&(alpha * alpha) * t) / &alpha.int_like(2);
    let mut acc = Poly::new();
    for_each_path_polynomial(q, order, budget, |m, a, b, poly| {
        let close = q.get(b, a);
        let factor = &(close / &close.int_like(2 * m as i64)) + &(&(&u[a] * &u[b]) * &prefactor);
        if factor.is_zero() {
            return;
        }
        for (k, v) in poly {
            add_into(&mut acc, k.clone(), v * &factor);
        }
    })?;
    let id = SymMatrix::identity(n, q.is_exact());
    let total_u: Scalar = u.iter().cloned().fold(prefactor.int_like(0), |a, b| a + b);
    Ok(CoefficientTable {
        t: Some(t.clone()),
        alpha: alpha.clone(),
        order,
        constant: ConstantTerm { log_det_argument: id.sub(q)?.determinant(), offset: -(&prefactor * &total_u) },
        terms: finish_terms(acc),
    })
}

/// `log Ψ` evaluated directly: `-½ log det(I + ΓΛ) + (α²/2)·𝟏[ΛΓ̃Λ - Λ]𝟏ᵀ` with
/// `Λ = t(I - S)` and `Γ̃ = (Γ⁻¹ + Λ)⁻¹`.
///
/// Uses `det(I + ΓΛ) = det(Γ)·det(Γ⁻¹ + Λ)` so only symmetric matrices appear.
pub fn direct_log_laplace(gamma: &SymMatrix, alpha: &Scalar, s: &[Scalar], t: &Scalar, tol: Tolerance) -> Result<f64> {
    let n = gamma.dim();
    if s.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s.len() });
    }
    for (i, x) in s.iter().enumerate() {
        if x.to_f64() < 0.0 || x.to_f64() > 1.0 {
            return Err(Error::InvalidArgument(format!("s[{i}] = {x} outside [0, 1]")));
        }
    }
    let lambda: Vec<Scalar> = s.iter().map(|x| t * &(x.int_like(1) - x)).collect();
    let gamma_inv = gamma.invert(tol)?;
    let shifted = gamma_inv.add(&SymMatrix::diagonal(&lambda))?;
    let det_product = &gamma.determinant() * &shifted.determinant();
    if tol.sign(&det_product, 1.0) != Ordering::Greater {
        return Err(Error::SingularMatrix);
    }
    let tilde = shifted.invert(tol)?;
    let tl = tilde.mul_vec(&lambda)?;
    let quad: Scalar = lambda.iter().zip(&tl).map(|(a, b)| a * b).sum::<Scalar>()
        - lambda.iter().cloned().sum::<Scalar>();
    let alpha_part = &(alpha * alpha) * &quad / alpha.int_like(2);
    Ok(-0.5 * det_product.ln() + alpha_part.to_f64())
}

fn binomial(n: u32, k: u32, like: &Scalar) -> Scalar {
    if k > n {
        return like.int_like(0);
    }
    let mut acc = BigInt::from(1);
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Scalar::Exact(BigRational::from_integer(acc)).with_exactness(like.is_exact())
}

/// Exact coefficient of `s_i^{m_i} s_j^{m_j}` in `Φ₁`:
///
/// ```text
/// ½ · Σ_{p=0}^{min(m_i,m_j)-1} C(m_i-1,p)·C(m_j-1,p)/(p+1) · q_ii^{m_i-p-1}·q_jj^{m_j-p-1}·q_ij^{2(p+1)}
/// ```
///
/// The leading ½ comes from the ½ in front of the trace series; matching
/// against brute-force cycle enumeration pins it.
pub fn closed_form_a(q: &SymMatrix, i: usize, j: usize, mi: u32, mj: u32) -> Scalar {
    assert!(i != j && mi >= 1 && mj >= 1, "need distinct indices and positive exponents");
    let (qii, qjj, qij) = (q.get(i, i), q.get(j, j), q.get(i, j));
    let like = qij;
    let mut sum = like.int_like(0);
    for p in 0..mi.min(mj) {
        let count = binomial(mi - 1, p, like) * binomial(mj - 1, p, like);
        let term = count * qii.pow(mi - p - 1) * qjj.pow(mj - p - 1) * qij.pow(2 * (p + 1));
        sum = sum + term / like.int_like((p + 1) as i64);
    }
    sum / like.int_like(2)
}

/// Exact coefficient of `s_i^{m_i} s_j^{m_j}` in `Φ₂`, grouping index words by
/// their block structure:
///
/// ```text
/// (α²/2t) · [ Σ_{p≥0}  2·ũ_i·ũ_j · C(m_i-1,p)C(m_j-1,p)   · q_ii^{m_i-p-1} q_jj^{m_j-p-1} q_ij^{2p+1}
///           + Σ_{p≥1}  ũ_i²      · C(m_i-1,p)C(m_j-1,p-1) · q_ii^{m_i-p-1} q_jj^{m_j-p}   q_ij^{2p}
///           + Σ_{p≥1}  ũ_j²      · C(m_i-1,p-1)C(m_j-1,p) · q_ii^{m_i-p}   q_jj^{m_j-p-1} q_ij^{2p} ]
/// ```
///
/// where `ũ = t(𝟏 - Q𝟏)` is the finite-`t` row-sum vector (`ũ → D` as `t → ∞`).
/// The three sums are words that start and end on different indices, both on
/// `i`, and both on `j`.
pub fn closed_form_b(q: &SymMatrix, alpha: &Scalar, t: &Scalar, i: usize, j: usize, mi: u32, mj: u32) -> Scalar {
    assert!(i != j && mi >= 1 && mj >= 1, "need distinct indices and positive exponents");
    let u = right_vector(q);
    let (ui, uj) = (t * &u[i], t * &u[j]);
    let (qii, qjj, qij) = (q.get(i, i), q.get(j, j), q.get(i, j));
    let like = &(qij * alpha) * t;
    let mut sum = like.int_like(0);
    for p in 0..mi.min(mj) {
        let count = binomial(mi - 1, p, &like) * binomial(mj - 1, p, &like);
        sum = sum + count * qii.pow(mi - p - 1) * qjj.pow(mj - p - 1) * qij.pow(2 * p + 1) * like.int_like(2) * &ui * &uj;
    }
    for p in 1..=mi.saturating_sub(1).min(mj) {
        let count = binomial(mi - 1, p, &like) * binomial(mj - 1, p - 1, &like);
        sum = sum + count * qii.pow(mi - p - 1) * qjj.pow(mj - p) * qij.pow(2 * p) * &ui * &ui;
    }
    for p in 1..=mi.min(mj.saturating_sub(1)) {
        let count = binomial(mi - 1, p - 1, &like) * binomial(mj - 1, p, &like);
        sum = sum + count * qii.pow(mi - p) * qjj.pow(mj - p - 1) * qij.pow(2 * p) * &uj * &uj;
    }
    let scale = &(alpha * alpha) / &(t * &like.int_like(2));
    sum * scale
}

/// `coefficient / t^power`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadingTerm {
    pub coefficient: Scalar,
    pub power: u32,
}

impl LeadingTerm {
    pub fn at(&self, t: &Scalar) -> Scalar {
        &self.coefficient / &t.pow(self.power)
    }
}

/// Leading large-`t` behaviour of the `s_i^{m_i} s_j^{m_j}` coefficient of `Φ`
/// (independent of `m_i, m_j` at leading order).
#[derive(Clone, Debug, PartialEq)]
pub enum LeadingC {
    /// `Γ⁻¹[i][j] ≠ 0`: `C ≈ (-Γ⁻¹ᵢⱼ)(-Γ⁻¹ᵢⱼ/2 + α²DᵢDⱼ) / t²`.
    Direct(LeadingTerm),
    /// `Γ⁻¹[i][j] = 0` and `k` is the first power with `(Γ⁻ᵏ)ᵢⱼ ≠ 0`:
    /// `Φ₁` contributes `(Γ⁻ᵏ)ᵢⱼ²/(2t^{2k})` and `Φ₂` contributes
    /// `α²DᵢDⱼ|(Γ⁻ᵏ)ᵢⱼ|/t^{k+1}`.
    Higher { k: u32, phi1: LeadingTerm, phi2: LeadingTerm },
}

impl LeadingC {
    /// Sign of the coefficient for all sufficiently large `t`.
    pub fn sign(&self) -> Ordering {
        match self {
            LeadingC::Direct(term) => term.coefficient.signum(),
            LeadingC::Higher { phi1, phi2, .. } => {
                // 2k > k + 1 for k ≥ 2, so a nonzero Φ₂ term dominates.
                if phi2.coefficient.is_zero() {
                    phi1.coefficient.signum()
                } else {
                    phi2.coefficient.signum()
                }
            }
        }
    }

    pub fn at(&self, t: &Scalar) -> Scalar {
        match self {
            LeadingC::Direct(term) => term.at(t),
            LeadingC::Higher { phi1, phi2, .. } => phi1.at(t) + phi2.at(t),
        }
    }
}

pub fn leading_c(gamma_inv: &SymMatrix, d: &RowSums, alpha: &Scalar, i: usize, j: usize, tol: Tolerance) -> Result<LeadingC> {
    let g = gamma_inv.get(i, j);
    let a2 = alpha * alpha;
    let dd = d.get(i) * d.get(j);
    if !tol.is_zero(g, gamma_inv.max_abs()) {
        let neg = -g;
        let coefficient = &neg * &(&neg / &g.int_like(2) + &a2 * &dd);
        return Ok(LeadingC::Direct(LeadingTerm { coefficient, power: 2 }));
    }
    let z = zero_order(gamma_inv, i, j, tol)?;
    let magnitude = z.entry.abs();
    Ok(LeadingC::Higher {
        k: z.k,
        phi1: LeadingTerm { coefficient: &(&magnitude * &magnitude) / &magnitude.int_like(2), power: 2 * z.k },
        phi2: LeadingTerm { coefficient: &(&a2 * &dd) * &magnitude, power: z.k + 1 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignKind {
    Positive,
    Negative,
    Zero,
    Undetermined,
}

/// Sign of `f(t)` for large `t`, read off a ladder of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticSign {
    pub sign: SignKind,
    /// `p` with `|f(t)| ~ c / t^p`.
    pub leading_power: Option<i32>,
    pub ladder: Vec<(Scalar, Scalar)>,
}

/// Relative drift allowed in `|f|·t^p` between the top two rungs.
const RATIO_STABILITY: f64 = 0.1;

pub fn asymptotic_sign(mut f: impl FnMut(&Scalar) -> Result<Scalar>, ladder: &[Scalar]) -> Result<AsymptoticSign> {
    validate_ladder(ladder)?;
    let samples = ladder.iter().map(|t| Ok((t.clone(), f(t)?))).collect::<Result<Vec<_>>>()?;
    Ok(classify_samples(samples))
}

fn validate_ladder(ladder: &[Scalar]) -> Result<()> {
    if ladder.len() < 3 {
        return Err(Error::InvalidArgument(format!("ladder needs at least 3 rungs, got {}", ladder.len())));
    }
    if ladder[0].to_f64() <= 0.0 || ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("ladder must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// Declares a sign when every rung past the first agrees and `|f|·t^p`, with
/// `p` fitted from the top two rungs, is stable between them.
pub fn classify_samples(samples: Vec<(Scalar, Scalar)>) -> AsymptoticSign {
    let undetermined = |samples, leading_power| AsymptoticSign { sign: SignKind::Undetermined, leading_power, ladder: samples };
    if samples.iter().all(|(_, v)| v.is_zero()) {
        return AsymptoticSign { sign: SignKind::Zero, leading_power: None, ladder: samples };
    }
    let tail = &samples[1..];
    let first = tail[0].1.signum();
    if first == Ordering::Equal || tail.iter().any(|(_, v)| v.signum() != first) {
        return undetermined(samples, None);
    }
    let k = samples.len();
    let (t_lo, v_lo) = (samples[k - 2].0.to_f64(), samples[k - 2].1.abs_f64());
    let (t_hi, v_hi) = (samples[k - 1].0.to_f64(), samples[k - 1].1.abs_f64());
    let slope = -(v_hi.ln() - v_lo.ln()) / (t_hi.ln() - t_lo.ln());
    if !slope.is_finite() {
        return undetermined(samples, None);
    }
    let p = slope.round() as i32;
    let r_lo = (v_lo.ln() + p as f64 * t_lo.ln()).exp();
    let r_hi = (v_hi.ln() + p as f64 * t_hi.ln()).exp();
    if (r_hi / r_lo - 1.0).abs() > RATIO_STABILITY {
        return undetermined(samples, Some(p));
    }
    let sign = if first == Ordering::Greater { SignKind::Positive } else { SignKind::Negative };
    AsymptoticSign { sign, leading_power: Some(p), ladder: samples }
}

/// `T, 10T, 100T, 1000T` with `T = 10·n·max|Γ⁻¹ᵢⱼ|`, which keeps the spectral
/// radius of `Γ⁻¹/t` below 0.1 on every rung.
pub fn default_ladder(gamma_inv: &SymMatrix) -> Vec<Scalar> {
    let n = gamma_inv.dim();
    let max = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| gamma_inv.get(i, j).abs())
        .fold(gamma_inv.get(0, 0).int_like(0), |a, b| if b > a { b } else { a });
    let base = max * gamma_inv.get(0, 0).int_like(10 * n as i64);
    (0..4).map(|e| &base * &base.int_like(10i64.pow(e))).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum TruncatedVerdict {
    /// Every non-constant coefficient up to the order is nonnegative on the ladder.
    AllNonneg,
    /// First asymptotically negative key in key order.
    NegativeFound(CoefficientKey),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedCheck {
    pub verdict: TruncatedVerdict,
    pub order: u32,
    pub ladder: Vec<Scalar>,
    pub tables: Vec<CoefficientTable>,
    pub signs: BTreeMap<CoefficientKey, AsymptoticSign>,
}

impl TruncatedCheck {
    pub fn negative_keys(&self) -> Vec<&CoefficientKey> {
        self.keys_with(SignKind::Negative)
    }

    pub fn undetermined_keys(&self) -> Vec<&CoefficientKey> {
        self.keys_with(SignKind::Undetermined)
    }

    fn keys_with(&self, kind: SignKind) -> Vec<&CoefficientKey> {
        self.signs.iter().filter(|(_, s)| s.sign == kind).map(|(k, _)| k).collect()
    }
}

/// Builds `Φ` at every rung and classifies each coefficient's asymptotic sign.
///
/// Keys that are never negative but fail to settle are reported as
/// undetermined and do not affect the verdict.
pub fn truncated_id_check(
    gamma: &SymMatrix,
    alpha: &Scalar,
    order: u32,
    ladder: Option<&[Scalar]>,
    budget: u128,
    tol: Tolerance,
) -> Result<TruncatedCheck> {
    if let Some(minor) = gamma.first_nonpositive_minor(tol) {
        return Err(Error::NotPositiveDefinite { minor });
    }
    let ladder = match ladder {
        Some(l) => l.to_vec(),
        None => default_ladder(&gamma.invert(tol)?),
    };
    validate_ladder(&ladder)?;
    let tables = ladder
        .iter()
        .map(|t| phi_table(&compute_q(gamma, t, tol)?, alpha, t, order, budget))
        .collect::<Result<Vec<_>>>()?;
    let mut keys: Vec<CoefficientKey> = tables.iter().flat_map(|tb| tb.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    let mut signs = BTreeMap::new();
    for key in keys {
        let samples = ladder.iter().zip(&tables).map(|(t, tb)| (t.clone(), tb.coefficient(&key))).collect();
        signs.insert(key, classify_samples(samples));
    }
    let verdict = signs
        .iter()
        .find(|(_, s)| s.sign == SignKind::Negative)
        .map(|(k, _)| TruncatedVerdict::NegativeFound(k.clone()))
        .unwrap_or(TruncatedVerdict::AllNonneg);
    Ok(TruncatedCheck { verdict, order, ladder, tables, signs })
}

/// Leading-order value of the per-`p` factor `R` of the two-index coefficient
/// followed by its two successive lower bounds, valid when `√(m_i m_j) ≤ N·t`
/// and `D_i D_j < 0`. Each entry is at most the previous one.
#[allow(clippy::too_many_arguments)]
pub fn two_index_bound_chain(
    gamma_inv_ij: f64,
    di: f64,
    dj: f64,
    alpha: f64,
    t: f64,
    mi: u32,
    mj: u32,
    p: u32,
    big_n: f64,
) -> [f64; 3] {
    let g = gamma_inv_ij.abs();
    let dd = (di * dj).abs();
    let a2 = alpha * alpha;
    let (p_f, mi_f, mj_f) = (p as f64, mi as f64, mj as f64);
    let head = g * g / ((p_f + 1.0) * t * t);
    let cross = -2.0 * dd * g / (t * t);
    let first = head
        + a2 / 2.0 * (cross + di * di / t * p_f / (mj_f - p_f) + dj * dj / t * p_f / (mi_f - p_f));
    let second = head + a2 / 2.0 * (cross + 2.0 * dd / t * p_f / (mi_f * mj_f).sqrt());
    let third = (g * g / (p_f + 1.0) + a2 / 2.0 * 2.0 * dd * (-g + p_f / big_n)) / (t * t);
    [first, second, third]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn ex1_gamma() -> SymMatrix {
        SymMatrix::from_scaled_i64(&[vec![15, 4, 2], vec![4, 2, 1], vec![2, 1, 4]], 7).unwrap()
    }

    #[test]
    fn key_order_is_graded_lex() {
        let a = CoefficientKey::new(vec![1, 0, 1]);
        let b = CoefficientKey::new(vec![1, 1, 0]);
        let c = CoefficientKey::new(vec![3, 0, 0]);
        assert!(a < b);
        assert!(b < c);
        assert_eq!(a.to_string(), "s1 s3");
        assert_eq!(CoefficientKey::new(vec![2, 0, 1]).to_string(), "s1^2 s3");
    }

    #[test]
    fn q_of_identity() {
        let q = compute_q(&SymMatrix::identity(3, true), &Scalar::int(1), tol()).unwrap();
        assert_eq!(q, SymMatrix::identity(3, true).scale(&Scalar::ratio(1, 2)));
        assert!(compute_q(&SymMatrix::identity(2, true), &Scalar::int(0), tol()).is_err());
    }

    #[test]
    fn q_diagonal_tends_to_one() {
        let q = compute_q(&ex1_gamma(), &Scalar::int(8000), tol()).unwrap();
        for i in 0..3 {
            assert!(q.get(i, i).to_f64() > 0.99);
        }
    }

    #[test]
    fn scalar_phi1_series() {
        // n = 1: coefficient of s^m is q^m / (2m).
        let q = SymMatrix::new(vec![vec![Scalar::ratio(2, 3)]]).unwrap();
        let table = phi1_table(&q, 5, DEFAULT_BUDGET).unwrap();
        for m in 1..=5u32 {
            let expected = Scalar::ratio(2, 3).pow(m) / Scalar::int(2 * m as i64);
            assert_eq!(table.coefficient(&CoefficientKey::new(vec![m])), expected);
        }
        assert_eq!(table.constant.log_det_argument, Scalar::ratio(1, 3));
    }

    #[test]
    fn phi1_pair_coefficient() {
        let q = compute_q(&ex1_gamma(), &Scalar::int(100), tol()).unwrap();
        let table = phi1_table(&q, 2, DEFAULT_BUDGET).unwrap();
        let q12 = q.get(0, 1);
        assert_eq!(table.coefficient(&CoefficientKey::pair(3, 0, 1, 1, 1)), q12 * q12 / Scalar::int(2));
    }

    #[test]
    fn phi2_vanishes_without_mean() {
        let q = compute_q(&ex1_gamma(), &Scalar::int(100), tol()).unwrap();
        let table = phi2_table(&q, &Scalar::int(0), &Scalar::int(100), 4, DEFAULT_BUDGET).unwrap();
        assert!(table.is_empty());
        assert!(table.constant.offset.is_zero());
        let phi = phi_table(&q, &Scalar::int(0), &Scalar::int(100), 4, DEFAULT_BUDGET).unwrap();
        let phi1 = phi1_table(&q, 4, DEFAULT_BUDGET).unwrap();
        assert_eq!(phi.iter().collect::<Vec<_>>(), phi1.iter().collect::<Vec<_>>());
    }

    #[test]
    fn combined_table_is_sum_of_parts() {
        let t = Scalar::int(50);
        let alpha = Scalar::ratio(1, 2);
        let q = compute_q(&ex1_gamma(), &t, tol()).unwrap();
        let phi = phi_table(&q, &alpha, &t, 4, DEFAULT_BUDGET).unwrap();
        let parts = phi1_table(&q, 4, DEFAULT_BUDGET).unwrap().merged(&phi2_table(&q, &alpha, &t, 4, DEFAULT_BUDGET).unwrap());
        assert_eq!(phi.iter().collect::<Vec<_>>(), parts.iter().collect::<Vec<_>>());
        assert_eq!(phi.constant, parts.constant);
    }

    #[test]
    fn budget_is_enforced() {
        let q = SymMatrix::identity(4, true);
        assert!(matches!(phi1_table(&q, 12, 1000), Err(Error::OrderTooLarge { .. })));
        assert!(matches!(phi1_table(&q, 0, 1000), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn direct_scalar_case() {
        // α = 0, n = 1: -½ log(1 + γ t (1 - s)).
        let g = SymMatrix::new(vec![vec![Scalar::ratio(3, 2)]]).unwrap();
        let v = direct_log_laplace(&g, &Scalar::int(0), &[Scalar::ratio(1, 4)], &Scalar::int(2), tol()).unwrap();
        assert!((v - (-0.5 * (1.0f64 + 1.5 * 2.0 * 0.75).ln())).abs() < 1e-14);
        assert!(direct_log_laplace(&g, &Scalar::int(0), &[Scalar::int(2)], &Scalar::int(2), tol()).is_err());
    }

    #[test]
    fn direct_matches_constant_term_at_origin() {
        let t = Scalar::int(100);
        let alpha = Scalar::ratio(3, 2);
        let q = compute_q(&ex1_gamma(), &t, tol()).unwrap();
        let table = phi_table(&q, &alpha, &t, 2, DEFAULT_BUDGET).unwrap();
        let zero = vec![Scalar::int(0); 3];
        let direct = direct_log_laplace(&ex1_gamma(), &alpha, &zero, &t, tol()).unwrap();
        assert!((direct - table.constant.value()).abs() < 1e-10);
    }

    #[test]
    fn closed_form_a_small_cases() {
        let q = compute_q(&ex1_gamma(), &Scalar::int(30), tol()).unwrap();
        let (qii, qij) = (q.get(0, 0), q.get(0, 1));
        assert_eq!(closed_form_a(&q, 0, 1, 1, 1), qij * qij / Scalar::int(2));
        assert_eq!(closed_form_a(&q, 0, 1, 2, 1), qii * qij * qij / Scalar::int(2));
    }

    #[test]
    fn closed_form_b_vanishes_without_mean() {
        let q = compute_q(&ex1_gamma(), &Scalar::int(30), tol()).unwrap();
        assert!(closed_form_b(&q, &Scalar::int(0), &Scalar::int(30), 0, 1, 2, 3).is_zero());
    }

    #[test]
    fn leading_c_direct_and_higher() {
        let inv = ex1_gamma().invert(tol()).unwrap();
        let d = inv.row_sums();
        let alpha = Scalar::ratio(1, 10);
        // (0,1): (2)(2/2 + 0.01·(-5)) = 1.9
        match leading_c(&inv, &d, &alpha, 0, 1, tol()).unwrap() {
            LeadingC::Direct(term) => assert_eq!(term.coefficient, Scalar::ratio(19, 10)),
            other => panic!("unexpected {other:?}"),
        }
        match leading_c(&inv, &d, &alpha, 0, 2, tol()).unwrap() {
            LeadingC::Higher { k, phi1, phi2 } => {
                assert_eq!(k, 2);
                assert_eq!(phi1, LeadingTerm { coefficient: Scalar::int(2), power: 4 });
                assert_eq!(phi2, LeadingTerm { coefficient: Scalar::ratio(-2, 100), power: 3 });
            }
            other => panic!("unexpected {other:?}"),
        }
        // α = 0: (Γ⁻¹ᵢⱼ)²/2 ≥ 0.
        match leading_c(&inv, &d, &Scalar::int(0), 0, 1, tol()).unwrap() {
            LeadingC::Direct(term) => assert_eq!(term.coefficient, Scalar::int(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asymptotic_sign_examples() {
        let ladder: Vec<Scalar> = [100, 1_000, 10_000, 100_000].iter().map(|&v| Scalar::int(v)).collect();
        let a2 = Scalar::ratio(1, 100);
        let pos = asymptotic_sign(|t| Ok(Scalar::int(1) / t.pow(2) - Scalar::int(2) * &a2 / t.pow(3)), &ladder).unwrap();
        assert_eq!(pos.sign, SignKind::Positive);
        assert_eq!(pos.leading_power, Some(2));
        let neg = asymptotic_sign(|t| Ok(-(Scalar::int(2) * &a2) / t.pow(3) + Scalar::int(1) / t.pow(4)), &ladder).unwrap();
        assert_eq!(neg.sign, SignKind::Negative);
        assert_eq!(neg.leading_power, Some(3));
        let zero = asymptotic_sign(|_| Ok(Scalar::int(0)), &ladder).unwrap();
        assert_eq!(zero.sign, SignKind::Zero);
        // Oscillating sign never settles.
        let mut flip = 1;
        let osc = asymptotic_sign(|t| { flip = -flip; Ok(Scalar::int(flip) / t.clone()) }, &ladder).unwrap();
        assert_eq!(osc.sign, SignKind::Undetermined);
        assert!(asymptotic_sign(|_| Ok(Scalar::int(1)), &ladder[..2]).is_err());
    }

    #[test]
    fn default_ladder_spacing() {
        let inv = ex1_gamma().invert(tol()).unwrap();
        let ladder = default_ladder(&inv);
        assert_eq!(ladder, vec![Scalar::int(240), Scalar::int(2400), Scalar::int(24000), Scalar::int(240000)]);
    }

    #[test]
    fn bound_chain_is_monotone() {
        let chain = two_index_bound_chain(-0.5, -1.0, 2.0, 0.7, 100.0, 3, 4, 2, 1.0);
        assert!(chain[0] >= chain[1] && chain[1] >= chain[2]);
    }
}
