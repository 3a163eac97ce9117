use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safe_embed::numkit::{eigenvalues, max_abs, rk4_integrate, solve_care, solve_lyapunov, IntegrationStatus};
use safe_embed::{Matrix, Vector};

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn square(max_n: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| Matrix::from_vec(n, n, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eigenvalue_sum_and_product(m in square(12)) {
        let s = eigenvalues(&m).unwrap();
        prop_assert_eq!(s.len(), m.nrows());
        let tr = m.trace();
        let det = m.determinant();
        let sum = s.sum();
        let prod = s.product();
        let scale = 1.0 + m.abs().sum();
        prop_assert!((sum.re - tr).abs() <= 1e-8 * scale, "trace {} vs {}", tr, sum);
        prop_assert!(sum.im.abs() <= 1e-8 * scale);
        // Hadamard bound keeps near-singular cases meaningful
        let hadamard: f64 = m.column_iter().map(|c| c.norm()).product();
        prop_assert!((prod.re - det).abs() <= 1e-8 * det.abs().max(hadamard).max(1e-300));
        prop_assert!(prod.im.abs() <= 1e-8 * det.abs().max(hadamard).max(1e-300));
    }

    #[test]
    fn complex_eigenvalues_come_in_pairs(m in square(8)) {
        let s = eigenvalues(&m).unwrap();
        for v in s.iter().filter(|v| v.im.abs() > 1e-9) {
            prop_assert!(s.iter().any(|w| (w - v.conj()).norm() <= 1e-8 * (1.0 + v.norm())));
        }
    }
}

fn kron_lyapunov(a: &Matrix, q: &Matrix) -> Matrix {
    let n = a.nrows();
    let eye = Matrix::identity(n, n);
    let at = a.transpose();
    let mut big = Matrix::zeros(n * n, n * n);
    // vec(AᵀP + PA) = (I⊗Aᵀ + Aᵀ⊗I) vec(P)
    big += eye.kronecker(&at);
    big += at.kronecker(&eye);
    let rhs = -Vector::from_column_slice(q.as_slice());
    let sol = big.lu().solve(&rhs).unwrap();
    Matrix::from_column_slice(n, n, sol.as_slice())
}

#[test]
fn lyapunov_matches_kronecker_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=6 {
        for _ in 0..20 {
            let a = random_matrix(&mut rng, n, n) * 2.0 - Matrix::identity(n, n) * (2.0 * n as f64);
            let g = random_matrix(&mut rng, n, n);
            let q = &g * g.transpose() + Matrix::identity(n, n);
            let p = solve_lyapunov(&a, &q).unwrap();
            assert!(max_abs(&(&p - kron_lyapunov(&a, &q))) <= 1e-8, "n = {n}");
        }
    }
}

#[test]
fn care_on_random_stabilizable_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=3);
        let a = random_matrix(&mut rng, n, n) * 2.0;
        let b = random_matrix(&mut rng, n, m);
        let q = Matrix::identity(n, n);
        let r = Matrix::identity(m, m);
        let p = solve_care(&a, &b, &q, &r).unwrap();
        let k = b.transpose() * &p;
        let res = a.transpose() * &p + &p * &a - &p * &b * &k + &q;
        assert!(max_abs(&res) <= 1e-7 * (1.0 + max_abs(&p)));
        assert!(eigenvalues(&(&a - &b * k)).unwrap().is_hurwitz());
        assert!(max_abs(&(&p - p.transpose())) <= 1e-9 * (1.0 + max_abs(&p)));
    }
}

#[test]
fn care_rejects_unstabilizable_pair() {
    let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
    let b = Matrix::from_row_slice(2, 1, &[1.0, 0.0]);
    assert!(solve_care(&a, &b, &Matrix::identity(2, 2), &Matrix::identity(1, 1)).is_err());
}

fn rk4_error(dt: f64) -> f64 {
    // x' = x cos t, x(0) = 1  =>  x = e^{sin t}
    let track = rk4_integrate(|t, x| Ok(x * t.cos()), &Vector::from_element(1, 1.0), (0.0, 2.0), dt).unwrap();
    assert_eq!(track.status, IntegrationStatus::Completed);
    (track.last()[0] - 2.0f64.sin().exp()).abs()
}

#[test]
fn rk4_is_fourth_order() {
    let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&dt| rk4_error(dt)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((3.7..=4.3).contains(&order), "observed order {order}");
    }
}

#[test]
fn rk4_harmonic_oscillator() {
    let x0 = Vector::from_vec(vec![1.0, 0.0]);
    let track = rk4_integrate(|_, x| Ok(Vector::from_vec(vec![x[1], -x[0]])), &x0, (0.0, 10.0), 1e-3).unwrap();
    let x = track.last();
    assert!((x[0] - 10f64.cos()).abs() < 1e-10);
    assert!((x[1] + 10f64.sin()).abs() < 1e-10);
}
