use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use safe_embed::analysis::simulate_closed_loop;
use safe_embed::linearize::linearize_at_equilibrium;
use safe_embed::model::{Disturbance, LinearFeedback, SignConvention};
use safe_embed::numkit::{eigenvalues, rk4_step, solve_care, solve_lyapunov};
use safe_embed::scenarios::linear::{linear_safe_system, PAPER_GAIN};
use safe_embed::scenarios::robots::{robots_system, RobotsParams};
use safe_embed::{Matrix, Vector};

fn test_matrix(n: usize) -> Matrix {
    // deterministic, non-symmetric, Hurwitz
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            -(n as f64) - 1.0
        } else {
            ((3 * i + 7 * j) % 11) as f64 / 11.0 - 0.5
        }
    })
}

fn numerics(c: &mut Criterion) {
    for n in [4, 12] {
        let a = test_matrix(n);
        c.bench_function(&format!("eigenvalues_{n}"), |b| b.iter(|| eigenvalues(black_box(&a)).unwrap()));
        let q = Matrix::identity(n, n);
        c.bench_function(&format!("lyapunov_{n}"), |b| b.iter(|| solve_lyapunov(black_box(&a), &q).unwrap()));
    }

    let lin = linearize_at_equilibrium(&robots_system(&RobotsParams::default()).unwrap()).unwrap();
    let (q, r) = (Matrix::identity(7, 7), Matrix::identity(4, 4));
    c.bench_function("care_robots", |b| b.iter(|| solve_care(black_box(&lin.a), &lin.b, &q, &r).unwrap()));
}

fn embedded(c: &mut Criterion) {
    let emb = linear_safe_system([2.0, 2.0], 0.5, 1.0).unwrap();
    let xbar = emb.consistent_state(&Vector::from_vec(vec![4.0, 4.0])).unwrap();
    let u = Vector::from_element(1, 0.3);
    c.bench_function("embedded_eval", |b| b.iter(|| emb.eval(black_box(&xbar), &u).unwrap()));

    let mut field = |_t: f64, x: &Vector| emb.eval(x, &u);
    c.bench_function("rk4_step", |b| b.iter(|| rk4_step(&mut field, 0.0, black_box(&xbar), 1e-3).unwrap()));

    let fb = LinearFeedback::row(&PAPER_GAIN, SignConvention::Positive);
    let d = Disturbance::zero(1);
    c.bench_function("simulate_1s", |b| {
        b.iter(|| simulate_closed_loop(&emb, &fb, &d, black_box(&xbar), 1.0, 1e-3).unwrap())
    });
}

criterion_group!(benches, numerics, embedded);
criterion_main!(benches);
