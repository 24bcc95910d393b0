#![allow(dead_code)]

use idsq_core::{Scalar, SymMatrix};
use rand::Rng;

pub fn fixture1() -> SymMatrix {
    SymMatrix::from_scaled_i64(&[vec![15, 4, 2], vec![4, 2, 1], vec![2, 1, 4]], 7).unwrap()
}

pub fn fixture2() -> SymMatrix {
    SymMatrix::from_scaled_i64(&[vec![8, 3, 4], vec![3, 5, 2], vec![4, 2, 4]], 5).unwrap()
}

pub fn fixture3() -> SymMatrix {
    SymMatrix::from_scaled_i64(&[vec![15, 4, 2], vec![4, 6, 3], vec![2, 3, 20]], 37).unwrap()
}

pub fn fixture4_inverse() -> SymMatrix {
    let i = Scalar::int;
    SymMatrix::new(vec![
        vec![i(10), i(-3), i(-3), i(0)],
        vec![i(-3), i(9), i(-2), i(-3)],
        vec![i(-3), i(-2), i(9), i(-3)],
        vec![i(0), i(-3), i(-3), Scalar::ratio(65, 11)],
    ])
    .unwrap()
}

pub fn fixture4_printed_gamma() -> SymMatrix {
    let r = Scalar::ratio;
    SymMatrix::new(vec![
        vec![r(257, 1400), r(39, 280), r(39, 280), r(99, 700)],
        vec![r(39, 280), r(171, 616), r(115, 616), r(33, 140)],
        vec![r(39, 280), r(115, 616), r(171, 616), r(33, 140)],
        vec![r(99, 700), r(33, 140), r(33, 140), r(143, 350)],
    ])
    .unwrap()
}

pub fn fixture5() -> SymMatrix {
    SymMatrix::from_scaled_i64(&[vec![15, 4, 2], vec![4, 8, 5], vec![2, 5, 6]], 297).unwrap()
}

/// Small connected 2×2 inverse-covariance with a negative off-diagonal.
pub fn two_by_two_inverse() -> SymMatrix {
    SymMatrix::new(vec![
        vec![Scalar::int(3), Scalar::ratio(-3, 2)],
        vec![Scalar::ratio(-3, 2), Scalar::int(2)],
    ])
    .unwrap()
}

/// Off-diagonal rational in `[-5, 0)` with denominator up to 4.
fn negative_entry<R: Rng>(rng: &mut R) -> Scalar {
    let den = rng.gen_range(1..=4i64);
    let num = rng.gen_range(1..=5 * den);
    Scalar::ratio(-num, den)
}

/// Random irreducible M-matrix: a random spanning tree plus extra edges with
/// probability `density`, made strictly diagonally dominant.
pub fn random_m_matrix<R: Rng>(rng: &mut R, n: usize, density: f64) -> SymMatrix {
    let mut off = vec![vec![Scalar::int(0); n]; n];
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let x = negative_entry(rng);
        off[u][v] = x.clone();
        off[v][u] = x;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if off[i][j].is_zero() && rng.gen_bool(density) {
                let x = negative_entry(rng);
                off[i][j] = x.clone();
                off[j][i] = x;
            }
        }
    }
    let rows = (0..n)
        .map(|i| {
            let slack = Scalar::ratio(rng.gen_range(1..=8), rng.gen_range(1..=4));
            let dominance: Scalar = off[i].iter().map(|x| x.abs()).sum();
            (0..n).map(|j| if i == j { &dominance + &slack } else { off[i][j].clone() }).collect()
        })
        .collect();
    SymMatrix::new(rows).unwrap()
}

/// Random positive-definite rational matrix `BᵀB + I` with small integer `B`.
pub fn random_pd<R: Rng>(rng: &mut R, n: usize) -> SymMatrix {
    let b: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-3..=3)).collect()).collect();
    SymMatrix::from_upper(n, |i, j| {
        let dot: i64 = (0..n).map(|k| b[k][i] * b[k][j]).sum();
        Scalar::int(dot + if i == j { 1 } else { 0 })
    })
}

pub fn keys_up_to(n: usize, degree: u32) -> Vec<idsq_core::series::CoefficientKey> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, degree, &mut Vec::new(), &mut out);
    out.into_iter()
        .filter(|e| e.iter().sum::<u32>() > 0)
        .map(idsq_core::series::CoefficientKey::new)
        .collect()
}
