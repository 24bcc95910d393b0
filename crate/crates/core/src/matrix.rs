//! Dense symmetric matrices over [`Scalar`].
//!
//! A matrix is exact when every entry is an exact rational. Exact inversion
//! uses fraction-free Gauss-Jordan elimination on an integer-scaled copy, so no
//! intermediate rational ever needs reducing; float inversion uses partial
//! pivoting. Positive definiteness is decided by leading principal minors.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerance};

#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    entries: Vec<Scalar>,
}

/// Row sums `d[i] = Σ_k m[i][k]` of the matrix they were computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct RowSums {
    d: Vec<Scalar>,
}

impl RowSums {
    pub fn new(d: Vec<Scalar>) -> Self {
        RowSums { d }
    }

    pub fn values(&self) -> &[Scalar] {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn get(&self, i: usize) -> &Scalar {
        &self.d[i]
    }

    /// Magnitude used for relative sign decisions.
    pub fn scale(&self) -> f64 {
        self.d.iter().map(Scalar::abs_f64).fold(0.0, f64::max)
    }
}

impl SymMatrix {
    /// Builds a matrix from rows, rejecting ragged or non-symmetric input.
    pub fn new(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { row: i, len: row.len(), expected: n });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(SymMatrix { n, entries: rows.into_iter().flatten().collect() })
    }

    /// Evaluates `f` on the upper triangle and mirrors it.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut entries = vec![Scalar::zero(true); n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                entries[j * n + i] = v.clone();
                entries[i * n + j] = v;
            }
        }
        SymMatrix { n, entries }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.iter().map(|&v| Scalar::int(v)).collect()).collect())
    }

    /// `(1/den) * rows`, exactly.
    pub fn from_scaled_i64(rows: &[Vec<i64>], den: i64) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| Scalar::ratio(v, den)).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize, exact: bool) -> Self {
        Self::from_upper(n, |i, j| if i == j { Scalar::one(exact) } else { Scalar::zero(exact) })
    }

    pub fn diagonal(d: &[Scalar]) -> Self {
        let exact = d.iter().all(Scalar::is_exact);
        Self::from_upper(d.len(), |i, j| if i == j { d[i].clone() } else { Scalar::zero(exact) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<Scalar>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(Scalar::is_exact)
    }

    pub fn to_float(&self) -> Self {
        SymMatrix { n: self.n, entries: self.entries.iter().map(Scalar::to_float).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(Scalar::abs_f64).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(&Scalar) -> Scalar) -> Self {
        SymMatrix { n: self.n, entries: self.entries.iter().map(f).collect() }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.map(|x| x * c)
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        self.check_dim(other.n)?;
        Ok(SymMatrix {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        self.check_dim(other.n)?;
        Ok(SymMatrix {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        })
    }

    /// `diag(c) · self · diag(c)`.
    pub fn conjugate_diag(&self, c: &[Scalar]) -> Result<Self> {
        self.check_dim(c.len())?;
        Ok(Self::from_upper(self.n, |i, j| &(&c[i] * self.get(i, j)) * &c[j]))
    }

    /// General product; the result need not be symmetric.
    pub fn mul_dense(&self, other: &SymMatrix) -> Result<Vec<Vec<Scalar>>> {
        self.check_dim(other.n)?;
        let n = self.n;
        Ok((0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum()).collect())
            .collect())
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        self.check_dim(v.len())?;
        Ok((0..self.n).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    /// Sum of all entries, `𝟏·M·𝟏ᵀ`.
    pub fn total(&self) -> Scalar {
        self.entries.iter().cloned().sum()
    }

    pub fn row_sums(&self) -> RowSums {
        RowSums::new((0..self.n).map(|i| self.row(i).iter().cloned().sum()).collect())
    }

    /// `self^k` for `k >= 1`; `k == 0` gives the identity.
    pub fn power(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.n, self.is_exact());
        for _ in 0..k {
            acc = acc.commuting_product(self);
        }
        acc
    }

    // Product of two commuting symmetric matrices; only the upper triangle is
    // computed so float rounding cannot break symmetry.
    fn commuting_product(&self, other: &SymMatrix) -> Self {
        Self::from_upper(self.n, |i, j| {
            self.row(i).iter().zip(other.row(j)).map(|(a, b)| a * b).sum()
        })
    }

    pub fn invert(&self, tol: Tolerance) -> Result<Self> {
        if self.is_exact() {
            self.invert_exact()
        } else {
            self.invert_float(tol)
        }
    }

    fn invert_exact(&self) -> Result<Self> {
        let n = self.n;
        let (mut work, row_scale) = self.integer_rows();
        for (i, row) in work.iter_mut().enumerate() {
            row.extend((0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }));
        }
        let mut prev = BigInt::one();
        for k in 0..n {
            let pivot = (k..n).find(|&r| !work[r][k].is_zero()).ok_or(Error::SingularMatrix)?;
            work.swap(k, pivot);
            for i in 0..n {
                if i == k {
                    continue;
                }
                for j in 0..2 * n {
                    if j == k {
                        continue;
                    }
                    let num = &work[k][k] * &work[i][j] - &work[i][k] * &work[k][j];
                    let (q, r) = num.div_rem(&prev);
                    debug_assert!(r.is_zero(), "fraction-free step must divide exactly");
                    work[i][j] = q;
                }
                work[i][k] = BigInt::zero();
            }
            prev = work[k][k].clone();
        }
        // Left block is now prev·I; right block is prev·B⁻¹ where B = diag(row_scale)·A.
        // Hence A⁻¹[i][j] = right[i][j] · row_scale[j] / prev.
        Ok(Self::from_upper(n, |i, j| {
            Scalar::Exact(BigRational::new(&work[i][n + j] * &row_scale[j], prev.clone()))
        }))
    }

    // Each row multiplied by the lcm of its denominators.
    fn integer_rows(&self) -> (Vec<Vec<BigInt>>, Vec<BigInt>) {
        let n = self.n;
        let mut rows = Vec::with_capacity(n);
        let mut scales = Vec::with_capacity(n);
        for i in 0..n {
            let lcm = self
                .row(i)
                .iter()
                .map(|x| x.as_rational().expect("exact matrix").denom().clone())
                .fold(BigInt::one(), |acc, d| acc.lcm(&d));
            rows.push(
                self.row(i)
                    .iter()
                    .map(|x| {
                        let r = x.as_rational().expect("exact matrix");
                        r.numer() * (&lcm / r.denom())
                    })
                    .collect::<Vec<_>>(),
            );
            scales.push(lcm);
        }
        (rows, scales)
    }

    fn invert_float(&self, tol: Tolerance) -> Result<Self> {
        let n = self.n;
        let scale = self.max_abs();
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row: Vec<f64> = self.row(i).iter().map(Scalar::to_f64).collect();
                row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
                .expect("non-empty range");
            let p = a[pivot][k].abs();
            if p.is_nan() || p <= tol.eps * scale {
                return Err(Error::SingularMatrix);
            }
            a.swap(k, pivot);
            let p = a[k][k];
            for v in a[k].iter_mut() {
                *v /= p;
            }
            for i in 0..n {
                if i != k && a[i][k] != 0.0 {
                    let f = a[i][k];
                    for j in 0..2 * n {
                        a[i][j] -= f * a[k][j];
                    }
                }
            }
        }
        Ok(Self::from_upper(n, |i, j| Scalar::Float(0.5 * (a[i][n + j] + a[j][n + i]))))
    }

    pub fn determinant(&self) -> Scalar {
        if self.is_exact() {
            let (mut work, row_scale) = self.integer_rows();
            let det = bareiss_determinant(&mut work);
            let total_scale = row_scale.iter().fold(BigInt::one(), |acc, s| acc * s);
            Scalar::Exact(BigRational::new(det, total_scale))
        } else {
            let n = self.n;
            let mut a: Vec<Vec<f64>> =
                (0..n).map(|i| self.row(i).iter().map(Scalar::to_f64).collect()).collect();
            let mut det = 1.0;
            for k in 0..n {
                let pivot = (k..n)
                    .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
                    .expect("non-empty range");
                if a[pivot][k] == 0.0 {
                    return Scalar::Float(0.0);
                }
                if pivot != k {
                    a.swap(k, pivot);
                    det = -det;
                }
                det *= a[k][k];
                for i in (k + 1)..n {
                    let f = a[i][k] / a[k][k];
                    for j in k..n {
                        a[i][j] -= f * a[k][j];
                    }
                }
            }
            Scalar::Float(det)
        }
    }

    /// Size (1-based) of the first leading principal minor that is not strictly
    /// positive, or `None` when the matrix is positive definite.
    ///
    /// Elimination without pivoting: the k-th pivot equals the ratio of the
    /// k-th and (k-1)-th leading minors, so all minors are positive iff all
    /// pivots are.
    pub fn first_nonpositive_minor(&self, tol: Tolerance) -> Option<usize> {
        let n = self.n;
        let scale = self.max_abs();
        let mut a = self.rows();
        for k in 0..n {
            let pivot = a[k][k].clone();
            if tol.sign(&pivot, scale) != std::cmp::Ordering::Greater {
                return Some(k + 1);
            }
            for i in (k + 1)..n {
                let f = &a[i][k] / &pivot;
                for j in k..n {
                    let delta = &f * &a[k][j];
                    a[i][j] = &a[i][j] - &delta;
                }
            }
        }
        None
    }

    pub fn is_positive_definite(&self, tol: Tolerance) -> bool {
        self.first_nonpositive_minor(tol).is_none()
    }

    /// Connected components of the off-diagonal nonzero pattern, each sorted,
    /// ordered by smallest member.
    pub fn components(&self, tol: Tolerance) -> Vec<Vec<usize>> {
        let n = self.n;
        let scale = self.max_abs();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if v != u && !seen[v] && !tol.is_zero(self.get(u, v), scale) {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_irreducible(&self, tol: Tolerance) -> bool {
        self.components(tol).len() == 1
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, got })
        }
    }
}

fn bareiss_determinant(a: &mut [Vec<BigInt>]) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(pivot) = (k..n).find(|&r| !a[r][k].is_zero()) else {
            return BigInt::zero();
        };
        if pivot != k {
            a.swap(k, pivot);
            sign = -sign;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                let num = &a[k][k] * &a[i][j] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    if n == 0 {
        return BigInt::one();
    }
    sign * &a[n - 1][n - 1]
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let cells: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// True when every entry of `product` equals the identity to within `tol`.
pub fn is_identity(product: &[Vec<Scalar>], tol: Tolerance) -> bool {
    product.iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, x)| {
            let target = if i == j { x.int_like(1) } else { x.int_like(0) };
            tol.is_zero(&(x - &target), 1.0)
        })
    })
}
