//! M-matrix recognition, signature search and the associated-vector predicate.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::scalar::{Scalar, Tolerance};

/// Diagonal of a signature matrix: every entry is `+1` or `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignatureVector {
    signs: Vec<i8>,
}

impl SignatureVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument(format!("signature entry {bad} is not ±1")));
        }
        Ok(SignatureVector { signs })
    }

    pub fn all_positive(n: usize) -> Self {
        SignatureVector { signs: vec![1; n] }
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.signs.iter().all(|&s| s == 1)
    }

    /// Flips every sign; `N` and `-N` conjugate identically.
    pub fn negated(&self) -> Self {
        SignatureVector { signs: self.signs.iter().map(|s| -s).collect() }
    }

    /// `N · a · N`.
    pub fn conjugate(&self, a: &SymMatrix) -> Result<SymMatrix> {
        let exact = a.is_exact();
        let diag: Vec<Scalar> = self.signs.iter().map(|&s| Scalar::int(s as i64).with_exactness(exact)).collect();
        a.conjugate_diag(&diag)
    }
}

/// Outcome of the M-matrix test. At most one witness is reported.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MMatrixVerdict {
    pub is_m_matrix: bool,
    /// An off-diagonal entry that is positive.
    pub failing_offdiagonal: Option<(usize, usize)>,
    /// An entry of the inverse that is negative.
    pub failing_inverse_entry: Option<(usize, usize)>,
}

impl MMatrixVerdict {
    fn pass() -> Self {
        MMatrixVerdict { is_m_matrix: true, failing_offdiagonal: None, failing_inverse_entry: None }
    }
}

/// Nonpositive off-diagonal entries and an entrywise nonnegative inverse.
pub fn is_m_matrix(a: &SymMatrix, tol: Tolerance) -> Result<MMatrixVerdict> {
    let inv = a.invert(tol)?;
    Ok(m_matrix_verdict(a, &inv, tol))
}

/// Same as [`is_m_matrix`] when the inverse is already known.
pub fn m_matrix_verdict(a: &SymMatrix, inv: &SymMatrix, tol: Tolerance) -> MMatrixVerdict {
    let n = a.dim();
    let scale = a.max_abs();
    for i in 0..n {
        for j in (i + 1)..n {
            if tol.is_positive(a.get(i, j), scale) {
                return MMatrixVerdict {
                    is_m_matrix: false,
                    failing_offdiagonal: Some((i, j)),
                    failing_inverse_entry: None,
                };
            }
        }
    }
    let inv_scale = inv.max_abs();
    for i in 0..n {
        for j in i..n {
            if tol.is_negative(inv.get(i, j), inv_scale) {
                return MMatrixVerdict {
                    is_m_matrix: false,
                    failing_offdiagonal: None,
                    failing_inverse_entry: Some((i, j)),
                };
            }
        }
    }
    MMatrixVerdict::pass()
}

/// Finds a signature `N` with `N·a·N` an M-matrix, normalized so the first
/// sign is `+1`.
///
/// Signs are propagated along the nonzero off-diagonal pattern by BFS with
/// `n_i·n_j = -sign(a[i][j])`; an inconsistent cycle means no signature exists.
/// When zeros disconnect the pattern, the relative orientations of the
/// components are enumerated.
pub fn find_signature(a: &SymMatrix, tol: Tolerance) -> Result<Option<SignatureVector>> {
    let n = a.dim();
    let scale = a.max_abs();
    let mut signs = vec![0i8; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for root in 0..n {
        if signs[root] != 0 {
            continue;
        }
        signs[root] = 1;
        let mut members = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if v == u {
                    continue;
                }
                let required = match tol.sign(a.get(u, v), scale) {
                    Ordering::Equal => continue,
                    Ordering::Greater => -signs[u],
                    Ordering::Less => signs[u],
                };
                if signs[v] == 0 {
                    signs[v] = required;
                    members.push(v);
                    queue.push_back(v);
                } else if signs[v] != required {
                    return Ok(None);
                }
            }
        }
        components.push(members);
    }

    let inv = a.invert(tol)?;
    let free = components.len().saturating_sub(1);
    for mask in 0u64..(1u64 << free.min(63)) {
        let mut candidate = signs.clone();
        for (c, comp) in components.iter().enumerate().skip(1) {
            if mask >> (c - 1) & 1 == 1 {
                for &v in comp {
                    candidate[v] = -candidate[v];
                }
            }
        }
        let sig = SignatureVector { signs: candidate };
        let conj = sig.conjugate(a)?;
        let conj_inv = sig.conjugate(&inv)?;
        if m_matrix_verdict(&conj, &conj_inv, tol).is_m_matrix {
            return Ok(Some(sig));
        }
    }
    Ok(None)
}

/// `g[i][j] ≤ min(g[i][i], g[j][j])` for all `i ≠ j`: necessary for a covariance
/// to be a 0-potential density, not sufficient.
pub fn is_associated_candidate(g: &SymMatrix, tol: Tolerance) -> bool {
    let n = g.dim();
    let scale = g.max_abs();
    (0..n).all(|i| {
        ((i + 1)..n).all(|j| {
            let cap = if g.get(i, i) <= g.get(j, j) { g.get(i, i) } else { g.get(j, j) };
            !tol.is_positive(&(g.get(i, j) - cap), scale)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn ex1_inverse() -> SymMatrix {
        SymMatrix::from_i64(&[vec![1, -2, 0], vec![-2, 8, -1], vec![0, -1, 2]]).unwrap()
    }

    fn ex5_inverse() -> SymMatrix {
        SymMatrix::from_i64(&[vec![23, -14, 4], vec![-14, 86, -67], vec![4, -67, 104]]).unwrap()
    }

    #[test]
    fn signature_rejects_bad_entries() {
        assert!(SignatureVector::new(vec![1, 0, -1]).is_err());
        assert!(SignatureVector::new(vec![1, -1]).is_ok());
    }

    #[test]
    fn m_matrix_examples() {
        assert!(is_m_matrix(&ex1_inverse(), tol()).unwrap().is_m_matrix);
        let v = is_m_matrix(&ex5_inverse(), tol()).unwrap();
        assert!(!v.is_m_matrix);
        assert_eq!(v.failing_offdiagonal, Some((0, 2)));
        assert!(is_m_matrix(&SymMatrix::identity(4, true), tol()).unwrap().is_m_matrix);
    }

    #[test]
    fn m_matrix_inverse_witness() {
        // Z-pattern but not an M-matrix: det < 0 so the inverse has negative entries.
        let a = SymMatrix::from_i64(&[vec![1, -2], vec![-2, 1]]).unwrap();
        let v = is_m_matrix(&a, tol()).unwrap();
        assert!(!v.is_m_matrix);
        assert_eq!(v.failing_offdiagonal, None);
        assert!(v.failing_inverse_entry.is_some());
    }

    #[test]
    fn signature_of_m_matrix_is_trivial() {
        assert_eq!(find_signature(&ex1_inverse(), tol()).unwrap(), Some(SignatureVector::all_positive(3)));
    }

    #[test]
    fn signature_recovers_conjugation() {
        let d = SignatureVector::new(vec![1, -1, -1]).unwrap();
        let a = d.conjugate(&ex1_inverse()).unwrap();
        let found = find_signature(&a, tol()).unwrap().unwrap();
        assert_eq!(found, d);
        assert!(is_m_matrix(&found.conjugate(&a).unwrap(), tol()).unwrap().is_m_matrix);
    }

    #[test]
    fn no_signature_for_frustrated_triangle() {
        assert_eq!(find_signature(&ex5_inverse(), tol()).unwrap(), None);
        // Exhaustive check over the four patterns with first sign +1.
        for mask in 0..4 {
            let sig = SignatureVector::new(vec![1, if mask & 1 == 1 { -1 } else { 1 }, if mask & 2 == 2 { -1 } else { 1 }]).unwrap();
            let conj = sig.conjugate(&ex5_inverse()).unwrap();
            assert!(!is_m_matrix(&conj, tol()).unwrap().is_m_matrix);
        }
    }

    #[test]
    fn signature_over_disconnected_pattern() {
        let a = SymMatrix::from_i64(&[
            vec![2, 1, 0, 0],
            vec![1, 2, 0, 0],
            vec![0, 0, 3, -1],
            vec![0, 0, -1, 3],
        ])
        .unwrap();
        let sig = find_signature(&a, tol()).unwrap().unwrap();
        assert_eq!(sig.signs()[0], 1);
        assert_eq!(sig.signs()[0] * sig.signs()[1], -1);
        assert_eq!(sig.signs()[2] * sig.signs()[3], 1);
        let diag = SymMatrix::identity(3, true);
        assert_eq!(find_signature(&diag, tol()).unwrap(), Some(SignatureVector::all_positive(3)));
    }

    #[test]
    fn associated_candidate_examples() {
        let g = SymMatrix::from_scaled_i64(&[vec![15, 4, 2], vec![4, 6, 3], vec![2, 3, 20]], 37).unwrap();
        assert!(is_associated_candidate(&g, tol()));
        let g = SymMatrix::from_scaled_i64(&[vec![15, 4, 2], vec![4, 2, 1], vec![2, 1, 4]], 7).unwrap();
        assert!(!is_associated_candidate(&g, tol()));
        assert!(is_associated_candidate(&SymMatrix::identity(3, true), tol()));
    }

    #[test]
    fn float_mode_uses_tolerance() {
        let a = ex1_inverse().map(|x| Scalar::float(x.to_f64() + 1e-14));
        assert!(is_m_matrix(&a, tol()).unwrap().is_m_matrix);
        assert_eq!(find_signature(&a, tol()).unwrap(), Some(SignatureVector::all_positive(3)));
    }
}
