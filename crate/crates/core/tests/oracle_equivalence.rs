mod common;

use idsq_core::oracle::{brute_phi1_coefficient, brute_phi2_coefficient, DEFAULT_ORACLE_BUDGET};
use idsq_core::series::{closed_form_a, closed_form_b, compute_q, phi1_table, phi2_table, CoefficientKey, DEFAULT_BUDGET};
use idsq_core::{Scalar, SymMatrix, Tolerance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn assert_tables_match_oracle(gamma: &SymMatrix, alpha: &Scalar, t: &Scalar, order: u32) {
    let q = compute_q(gamma, t, tol()).unwrap();
    let gamma_inv = gamma.invert(tol()).unwrap();
    let phi1 = phi1_table(&q, order, DEFAULT_BUDGET).unwrap();
    let phi2 = phi2_table(&q, alpha, t, order, DEFAULT_BUDGET).unwrap();
    for key in common::keys_up_to(gamma.dim(), order) {
        let b1 = brute_phi1_coefficient(&q, &key, DEFAULT_ORACLE_BUDGET).unwrap();
        let b2 = brute_phi2_coefficient(&q, &gamma_inv, alpha, t, &key, DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(phi1.coefficient(&key), b1, "phi1 at {key}");
        assert_eq!(phi2.coefficient(&key), b2, "phi2 at {key}");
    }
}

#[test]
fn fixture_tables_match_enumeration() {
    for gamma in [common::fixture1(), common::fixture3()] {
        assert_tables_match_oracle(&gamma, &Scalar::ratio(1, 2), &Scalar::int(100), 5);
    }
}

#[test]
fn fixture1_order4_full_table() {
    assert_tables_match_oracle(&common::fixture1(), &Scalar::int(1), &Scalar::int(100), 4);
}

#[test]
fn random_m_matrix_tables_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let n = 2 + case % 2;
        let inv = common::random_m_matrix(&mut rng, n, 0.5);
        let gamma = inv.invert(tol()).unwrap();
        assert_tables_match_oracle(&gamma, &Scalar::ratio(3, 2), &Scalar::int(40), 5);
    }
}

#[test]
fn float_tables_match_enumeration() {
    let gamma = common::fixture1().to_float();
    let t = Scalar::float(100.0);
    let alpha = Scalar::float(0.5);
    let q = compute_q(&gamma, &t, tol()).unwrap();
    let inv = gamma.invert(tol()).unwrap();
    let phi1 = phi1_table(&q, 4, DEFAULT_BUDGET).unwrap();
    let phi2 = phi2_table(&q, &alpha, &t, 4, DEFAULT_BUDGET).unwrap();
    for key in common::keys_up_to(3, 4) {
        let b1 = brute_phi1_coefficient(&q, &key, DEFAULT_ORACLE_BUDGET).unwrap().to_f64();
        let b2 = brute_phi2_coefficient(&q, &inv, &alpha, &t, &key, DEFAULT_ORACLE_BUDGET).unwrap().to_f64();
        let (s1, s2) = (phi1.coefficient(&key).to_f64(), phi2.coefficient(&key).to_f64());
        assert!((s1 - b1).abs() <= 1e-9 * b1.abs().max(1e-300), "phi1 {key}: {s1} vs {b1}");
        assert!((s2 - b2).abs() <= 1e-9 * b2.abs().max(1e-300), "phi2 {key}: {s2} vs {b2}");
    }
}

#[test]
fn oracle_examples() {
    let gamma = common::fixture1();
    let t = Scalar::int(100);
    let q = compute_q(&gamma, &t, tol()).unwrap();
    let key = CoefficientKey::new(vec![2, 1, 1]);
    let table = phi1_table(&q, 4, DEFAULT_BUDGET).unwrap();
    assert_eq!(brute_phi1_coefficient(&q, &key, DEFAULT_ORACLE_BUDGET).unwrap(), table.coefficient(&key));
    let inv = gamma.invert(tol()).unwrap();
    let zero = brute_phi2_coefficient(&q, &inv, &Scalar::int(0), &t, &key, DEFAULT_ORACLE_BUDGET).unwrap();
    assert!(zero.is_zero());
}

#[test]
fn phi2_pair_leading_order() {
    // B(1,1) ~ (α²/t²)·D₁D₂·(-Γ⁻¹₁₂) for the (1,2) pair of fixture 1.
    let gamma = common::fixture1();
    let inv = gamma.invert(tol()).unwrap();
    let d = inv.row_sums();
    let alpha = Scalar::ratio(1, 2);
    let key = CoefficientKey::pair(3, 0, 1, 1, 1);
    let mut errors = Vec::new();
    for t in [1_000i64, 10_000, 100_000] {
        let t = Scalar::int(t);
        let q = compute_q(&gamma, &t, tol()).unwrap();
        let b = brute_phi2_coefficient(&q, &inv, &alpha, &t, &key, DEFAULT_ORACLE_BUDGET).unwrap();
        let lead = &(&alpha * &alpha) / &t.pow(2) * d.get(0) * d.get(1) * (-inv.get(0, 1));
        errors.push((b.to_f64() / lead.to_f64() - 1.0).abs());
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]));
    assert!(errors[2] < 1e-3);
}

#[test]
fn phi2_zero_pair_tends_to_minus_two_alpha_squared_over_t_cubed() {
    let gamma = common::fixture1();
    let inv = gamma.invert(tol()).unwrap();
    let alpha = Scalar::ratio(1, 10);
    let key = CoefficientKey::pair(3, 0, 1, 2, 1);
    let mut last = f64::INFINITY;
    for t in [1_000i64, 10_000, 100_000, 1_000_000] {
        let t = Scalar::int(t);
        let q = compute_q(&gamma, &t, tol()).unwrap();
        let b = brute_phi2_coefficient(&q, &inv, &alpha, &t, &key, DEFAULT_ORACLE_BUDGET).unwrap();
        let target = Scalar::int(-2) * &alpha * &alpha / t.pow(3);
        let err = (b.to_f64() / target.to_f64() - 1.0).abs();
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-4);
}

fn closed_form_fixtures() -> Vec<SymMatrix> {
    vec![common::two_by_two_inverse().invert(tol()).unwrap(), common::fixture1(), common::fixture3()]
}

#[test]
fn closed_form_a_matches_tables() {
    let t = Scalar::int(20);
    for gamma in closed_form_fixtures() {
        let n = gamma.dim();
        let q = compute_q(&gamma, &t, tol()).unwrap();
        let table = phi1_table(&q, 10, DEFAULT_BUDGET).unwrap();
        for (i, j) in [(0, 1), (0, n - 1), (n - 1, n - 2)] {
            for mi in 1..=5 {
                for mj in 1..=5 {
                    let key = CoefficientKey::pair(n, i, mi, j, mj);
                    assert_eq!(closed_form_a(&q, i, j, mi, mj), table.coefficient(&key), "A {key}");
                }
            }
        }
    }
}

#[test]
fn closed_form_b_matches_tables() {
    let t = Scalar::int(20);
    let alpha = Scalar::ratio(2, 3);
    for gamma in closed_form_fixtures() {
        let n = gamma.dim();
        let q = compute_q(&gamma, &t, tol()).unwrap();
        let table = phi2_table(&q, &alpha, &t, 10, DEFAULT_BUDGET).unwrap();
        for (i, j) in [(0, 1), (0, n - 1), (n - 1, n - 2)] {
            for mi in 1..=5 {
                for mj in 1..=5 {
                    let key = CoefficientKey::pair(n, i, mi, j, mj);
                    assert_eq!(closed_form_b(&q, &alpha, &t, i, j, mi, mj), table.coefficient(&key), "B {key}");
                }
            }
        }
    }
}

#[test]
fn closed_form_a_against_oracle_small() {
    let gamma = common::fixture3();
    let q = compute_q(&gamma, &Scalar::int(100), tol()).unwrap();
    let (qii, qij) = (q.get(0, 0), q.get(0, 1));
    assert_eq!(closed_form_a(&q, 0, 1, 1, 1), qij * qij / Scalar::int(2));
    let key = CoefficientKey::pair(3, 0, 2, 1, 1);
    let brute = brute_phi1_coefficient(&q, &key, DEFAULT_ORACLE_BUDGET).unwrap();
    assert_eq!(brute, qii * qij * qij / Scalar::int(2));
    assert_eq!(closed_form_a(&q, 0, 1, 2, 1), brute);
}
