//! Library results against independent brute-force computations.

use modaldyn_core::channels::{
    apply, evolve, JumpOperator, KrausChannel, LindbladGenerator, LocalUnitary,
};
use modaldyn_core::linalg::{kron, partial_trace, partial_trace_pure, ComplexMatrix, SystemLayout};
use modaldyn_core::random::{random_density, random_pure_state, random_unitary, rng};
use modaldyn_core::states::DensityMatrix;
use num_complex::Complex;

/// Sum over every pair of parent indices whose traced digits agree.
fn naive_partial_trace(
    rho: &ComplexMatrix<f64>,
    dims: &[usize],
    keep: &[usize],
) -> ComplexMatrix<f64> {
    let total: usize = dims.iter().product();
    let digits = |mut x: usize| {
        let mut d = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            d[k] = x % dims[k];
            x /= dims[k];
        }
        d
    };
    let kept_index = |d: &[usize]| keep.iter().fold(0, |acc, &p| acc * dims[p] + d[p]);
    let m: usize = keep.iter().map(|&p| dims[p]).product();
    let mut out = ComplexMatrix::zeros(m, m);
    for i in 0..total {
        let di = digits(i);
        for j in 0..total {
            let dj = digits(j);
            let traced_equal = (0..dims.len())
                .filter(|p| !keep.contains(p))
                .all(|p| di[p] == dj[p]);
            if traced_equal {
                let (r, c) = (kept_index(&di), kept_index(&dj));
                out[(r, c)] += rho[(i, j)];
            }
        }
    }
    out
}

#[test]
fn partial_trace_matches_index_summation() {
    let mut r = rng(2024);
    let dims = [2, 3, 2];
    let layout = SystemLayout::new(dims.to_vec(), vec!["A", "B", "C"]).unwrap();
    let subsets: [&[usize]; 6] = [&[0], &[1], &[2], &[0, 1], &[0, 2], &[1, 2]];
    for _ in 0..20 {
        let rho = random_density::<f64, _>(12, 12, &mut r);
        for keep in subsets {
            let labels: Vec<&str> = keep.iter().map(|&p| ["A", "B", "C"][p]).collect();
            let fast = partial_trace(&rho, &layout, &labels).unwrap();
            let slow = naive_partial_trace(&rho, &dims, keep);
            assert!(fast.max_abs_diff(&slow) <= 1e-12, "keep {keep:?}");
        }
    }
}

#[test]
fn pure_partial_trace_matches_projector_route() {
    let mut r = rng(5);
    let layout = SystemLayout::new(vec![3, 2, 2], vec!["A", "B", "C"]).unwrap();
    for _ in 0..10 {
        let psi = random_pure_state::<f64, _>(12, &mut r);
        let full = ComplexMatrix::outer(&psi);
        for keep in [vec!["A"], vec!["B", "C"], vec!["A", "C"]] {
            let a = partial_trace_pure(&psi, &layout, &keep).unwrap();
            let b = partial_trace(&full, &layout, &keep).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-14);
        }
    }
}

#[test]
fn partial_trace_of_product_returns_factor() {
    let mut r = rng(8);
    let a = random_density::<f64, _>(2, 2, &mut r);
    let b = random_density::<f64, _>(3, 3, &mut r);
    let layout = SystemLayout::new(vec![2, 3], vec!["A", "B"]).unwrap();
    let ab = kron(&a, &b);
    assert!(
        partial_trace(&ab, &layout, &["A"])
            .unwrap()
            .max_abs_diff(&a)
            < 1e-14
    );
    assert!(
        partial_trace(&ab, &layout, &["B"])
            .unwrap()
            .max_abs_diff(&b)
            < 1e-14
    );
}

#[test]
fn local_unitary_matches_kronecker_embedding() {
    let mut r = rng(13);
    let layout = SystemLayout::new(vec![2, 3, 2], vec!["A", "B", "C"]).unwrap();
    let u = random_unitary::<f64, _>(2, &mut r);
    let gate = LocalUnitary::new(layout.clone(), &["C"], u.clone()).unwrap();
    let full = kron(&ComplexMatrix::identity(6), &u);
    assert!(gate.embedded().max_abs_diff(&full) < 1e-15);
    let psi = random_pure_state::<f64, _>(12, &mut r);
    let via_gate = gate.apply_vector(&psi).unwrap();
    let via_matrix = full.mat_vec(&psi).unwrap();
    let diff = via_gate
        .iter()
        .zip(&via_matrix)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-15);
}

#[test]
fn amplitude_damping_matches_explicit_kraus_form() {
    // Kraus form of damping with decay probability p = 1 − e^{−γt}.
    let gamma = 0.9;
    let lower = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let g = LindbladGenerator::new(
        ComplexMatrix::zeros(2, 2),
        vec![JumpOperator {
            operator: lower,
            rate: gamma,
        }],
    )
    .unwrap();
    let layout = SystemLayout::single(2, "Q").unwrap();
    let rho = DensityMatrix::<f64>::new(random_density(2, 2, &mut rng(1)), layout).unwrap();
    for k in 1..=5 {
        let t = 0.4 * k as f64;
        let p = 1.0 - (-gamma * t).exp();
        let k0 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - p).sqrt()]]);
        let k1 = ComplexMatrix::from_real_rows(&[&[0.0, p.sqrt()], &[0.0, 0.0]]);
        let explicit = KrausChannel::new(vec![k0, k1]).unwrap();
        let a = apply(&evolve(&g, t, 4).unwrap(), &rho).unwrap();
        let b = apply(&explicit, &rho).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-10, "t = {t}");
    }
}

#[test]
fn hamiltonian_evolution_matches_rotation() {
    // H = (ω/2) σ_x rotates |0> to cos(ωt/2)|0> − i sin(ωt/2)|1>.
    let omega = 1.7;
    let h = ComplexMatrix::from_real_rows(&[&[0.0, omega / 2.0], &[omega / 2.0, 0.0]]);
    let g = LindbladGenerator::new(h, vec![]).unwrap();
    let layout = SystemLayout::single(2, "Q").unwrap();
    let zero = [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
    let rho0 = DensityMatrix::<f64>::from_pure(&zero, layout).unwrap();
    let t = 0.8;
    let out = apply(&evolve(&g, t, 2).unwrap(), &rho0).unwrap();
    let psi = [
        Complex::new((omega * t / 2.0).cos(), 0.0),
        Complex::new(0.0, -(omega * t / 2.0).sin()),
    ];
    assert!(out.matrix().max_abs_diff(&ComplexMatrix::outer(&psi)) < 1e-12);
}
