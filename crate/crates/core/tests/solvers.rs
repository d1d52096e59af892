use mixed_eig_core::eigsolve::{dense_eigenvalues, solve_descent, solve_p2};
use mixed_eig_core::geometry::{build_mask, random_connected_mask, DomainMask, Lattice, ShapeSpec};
use mixed_eig_core::{OperatorParams, SolverOptions};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn p2_matches_dense_oracle_on_random_blobs() {
    let l = Lattice::centered(2, 0.125, 10).unwrap();
    let params = OperatorParams::mixed(2.0, 0.5);
    for seed in 0..4 {
        let m = random_connected_mask(l, 40 + 20 * seed as usize, [0.0, 0.0], seed).unwrap();
        let oracle = dense_eigenvalues(&m, &params).unwrap()[0];
        let r = solve_p2(&m, &params, &SolverOptions::p2()).unwrap();
        assert!(r.converged);
        assert!(rel(r.lambda, oracle) <= 1e-10, "seed {seed}: {} vs {oracle}", r.lambda);
        assert!(r.interior_min > 0.0);
    }
}

#[test]
fn eigenvalue_decreases_under_inclusion() {
    let l = Lattice::centered(2, 0.125, 12).unwrap();
    let params = OperatorParams::mixed(2.0, 0.3);
    let small = build_mask(&l, &ShapeSpec::Ball { center: [0.0, 0.0], radius: 0.5 }).unwrap();
    let big = build_mask(&l, &ShapeSpec::Ball { center: [0.0, 0.0], radius: 0.8 }).unwrap();
    assert!(small.is_subset_of(&big));
    let a = solve_p2(&small, &params, &SolverOptions::p2()).unwrap().lambda;
    let b = solve_p2(&big, &params, &SolverOptions::p2()).unwrap().lambda;
    assert!(a > b);
}

#[test]
fn weights_scale_lambda_and_translation_is_exact() {
    let l = Lattice::centered(2, 0.125, 12).unwrap();
    let m = build_mask(&l, &ShapeSpec::Rectangle { lo: [-0.6, -0.3], hi: [0.4, 0.3] }).unwrap();
    let one = OperatorParams::weighted(2.0, 0.5, 1.0, 1.0);
    let two = OperatorParams::weighted(2.0, 0.5, 2.0, 2.0);
    let opts = SolverOptions::p2();
    let a = solve_p2(&m, &one, &opts).unwrap().lambda;
    let b = solve_p2(&m, &two, &opts).unwrap().lambda;
    assert!(rel(b, 2.0 * a) <= 1e-12);

    // identical padding: the box moves with the mask by a whole lattice vector
    let norm = OperatorParams::mixed(2.0, 0.5);
    let moved = Lattice::centered_at(2, 0.125, 25, [0.25, -0.125]).unwrap();
    let shifted = DomainMask::from_fn(moved, |i| m.contains(i));
    assert_eq!(moved.coord(shifted.indices()[0])[0] - l.coord(m.indices()[0])[0], 0.25);
    let la = solve_p2(&m, &norm, &opts).unwrap().lambda;
    let lb = solve_p2(&shifted, &norm, &opts).unwrap().lambda;
    assert_eq!(la.to_bits(), lb.to_bits());
}

#[test]
fn descent_is_seed_independent_at_p3() {
    let l = Lattice::centered(2, 0.125, 14).unwrap();
    let shape = ShapeSpec::Annulus { outer_radius: 1.0, inner_radius: 0.3, hole_center: [0.25, 0.0] };
    let m = build_mask(&l, &shape).unwrap();
    let params = OperatorParams::mixed(3.0, 0.5);
    let lambdas: Vec<f64> = (0..3)
        .map(|seed| {
            let r = solve_descent(&m, &params, &SolverOptions::descent().with_seed(seed)).unwrap();
            assert!(r.converged, "seed {seed}: residual {}", r.residual);
            assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
            assert!(r.interior_min > 0.0);
            r.lambda
        })
        .collect();
    for l in &lambdas[1..] {
        assert!(rel(*l, lambdas[0]) <= 1e-4, "{lambdas:?}");
    }
}

#[test]
fn empty_mask_is_rejected() {
    let l = Lattice::centered(2, 0.5, 3).unwrap();
    let params = OperatorParams::mixed(2.0, 0.5);
    assert!(solve_p2(&DomainMask::empty(l), &params, &SolverOptions::p2()).is_err());
    assert!(solve_descent(&DomainMask::empty(l), &params, &SolverOptions::descent()).is_err());
}
