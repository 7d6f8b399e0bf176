use cartan::liealg::presets::{co, gl, o, sl, u};
use cartan::liealg::{
    antisymmetrization_rank, first_prolongation, make_algebra, prolongation, prolongation_tower, AlgebraType,
    FiniteTypeVerdict, MatrixLieAlgebra,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn conjugate(g: &MatrixLieAlgebra, p: &DMatrix<f64>) -> MatrixLieAlgebra {
    let inv = p.clone().try_inverse().unwrap();
    make_algebra(g.basis().iter().map(|x| p * x * &inv).collect()).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn bilinear(b: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    (0..x.len()).flat_map(|i| (0..y.len()).map(move |j| (i, j))).map(|(i, j)| x[i] * b[(i, j)] * y[j]).sum()
}

#[test]
fn killing_form_is_ad_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for g in [o(3), sl(2), gl(2), co(3), u(2)] {
        let c = g.structure_constants();
        let b = g.killing_form();
        for _ in 0..20 {
            let (x, y, z) = (random_vec(&mut rng, g.dim()), random_vec(&mut rng, g.dim()), random_vec(&mut rng, g.dim()));
            let lhs = bilinear(&b, &c.bracket(&z, &x), &y) + bilinear(&b, &x, &c.bracket(&z, &y));
            assert!(lhs.abs() < 1e-10, "{lhs}");
        }
    }
}

#[test]
fn killing_form_matches_trace_formula() {
    // B(X,Y) = 2n tr(XY) - 2 tr X tr Y on gl(n)
    for n in 2..=3 {
        let g = gl(n);
        let b = g.killing_form();
        for (i, x) in g.basis().iter().enumerate() {
            for (j, y) in g.basis().iter().enumerate() {
                let expect = 2.0 * n as f64 * (x * y).trace() - 2.0 * x.trace() * y.trace();
                assert!((b[(i, j)] - expect).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn structure_constants_satisfy_jacobi() {
    for g in [o(4), gl(3), sl(3), co(3), u(2)] {
        assert!(g.structure_constants().jacobi_defect() < 1e-12);
    }
}

#[test]
fn rank_nullity_for_antisymmetrization() {
    for g in [o(2), o(3), o(4), gl(2), gl(3), sl(2), sl(3), co(2), co(3), u(2)] {
        let total = g.n() * g.dim();
        assert_eq!(antisymmetrization_rank(&g) + first_prolongation(&g).dim(), total, "n={} m={}", g.n(), g.dim());
    }
}

#[test]
fn kernel_and_symmetric_models_agree() {
    for g in [o(3), gl(2), sl(2), co(2), co(3), u(2)] {
        assert_eq!(first_prolongation(&g).dim(), prolongation(&g, 1).dim());
    }
}

#[test]
fn classical_prolongation_dimensions() {
    for n in 2..=4 {
        assert_eq!(prolongation(&o(n), 1).dim(), 0);
        assert_eq!(prolongation_tower(&o(n), 3).verdict, FiniteTypeVerdict::FiniteType(1));
    }
    for n in 2..=3 {
        assert_eq!(first_prolongation(&gl(n)).dim(), n * n * (n + 1) / 2);
        // trace-free partial maps: n constraints on the gl prolongation
        assert_eq!(prolongation(&sl(n), 1).dim(), n * n * (n + 1) / 2 - n);
    }
    assert_eq!(prolongation(&gl(2), 2).dim(), 2 * 4);
    let t = prolongation_tower(&co(3), 4);
    assert_eq!(t.dims, vec![3, 0]);
    assert_eq!(t.verdict, FiniteTypeVerdict::FiniteType(2));
    assert!(matches!(prolongation_tower(&gl(2), 3).verdict, FiniteTypeVerdict::Undetermined(3)));
}

#[test]
fn prolongation_elements_are_symmetric_with_partials_in_g() {
    let g = co(3);
    let p = prolongation(&g, 1);
    for e in 0..p.dim() {
        for a in 0..3 {
            for b in 0..3 {
                for k in 0..3 {
                    assert!((p.component(e, &[a, b], k) - p.component(e, &[b, a], k)).abs() < 1e-12);
                }
            }
            assert!(g.contains(&p.partial(e, &[a]), 1e-9));
        }
    }
}

#[test]
fn classification_of_three_dimensional_algebras() {
    assert_eq!(o(3).structure_constants().classify(1e-9), AlgebraType::So3);
    assert_eq!(sl(2).structure_constants().classify(1e-9), AlgebraType::Sl2);
    let e = |i: usize, j: usize| DMatrix::from_fn(3, 3, |r, c| if (r, c) == (i, j) { 1.0 } else { 0.0 });
    let heis = make_algebra(vec![e(0, 1), e(1, 2), e(0, 2)]).unwrap();
    assert_eq!(heis.structure_constants().classify(1e-9), AlgebraType::Heisenberg);
    let se2 = make_algebra(vec![e(0, 1) - e(1, 0), e(0, 2), e(1, 2)]).unwrap();
    assert_eq!(se2.structure_constants().classify(1e-9), AlgebraType::Se2);
    let se11 = make_algebra(vec![e(0, 1) + e(1, 0), e(0, 2), e(1, 2)]).unwrap();
    assert_eq!(se11.structure_constants().classify(1e-9), AlgebraType::Se11);
}

#[test]
fn non_closed_basis_is_rejected() {
    let e = |i: usize, j: usize| DMatrix::from_fn(2, 2, |r, c| if (r, c) == (i, j) { 1.0 } else { 0.0 });
    assert!(make_algebra(vec![e(0, 1), e(1, 0)]).is_err());
    assert!(make_algebra(vec![e(0, 1), e(0, 1) * 2.0]).is_err());
}

fn invertible(seed: u64, n: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let p = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        if p.determinant().abs() > 0.2 {
            return p;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prolongation_dims_invariant_under_conjugation(seed in any::<u64>(), which in 0usize..4) {
        let g = [o(3), co(3), sl(2), co(2)][which].clone();
        let h = conjugate(&g, &invertible(seed, g.n()));
        prop_assert_eq!(prolongation_tower(&g, 3), prolongation_tower(&h, 3));
        prop_assert_eq!(antisymmetrization_rank(&g), antisymmetrization_rank(&h));
    }

    #[test]
    fn prolongation_dims_invariant_under_basis_mixing(seed in any::<u64>()) {
        let g = co(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mix = loop {
            let q = DMatrix::<f64>::from_fn(g.dim(), g.dim(), |_, _| rng.gen_range(-1.0..1.0));
            if q.determinant().abs() > 0.2 { break q; }
        };
        let basis: Vec<DMatrix<f64>> = (0..g.dim())
            .map(|i| g.basis().iter().enumerate().fold(DMatrix::zeros(3, 3), |acc, (j, b)| acc + b * mix[(i, j)]))
            .collect();
        let h = make_algebra(basis).unwrap();
        prop_assert_eq!(prolongation(&h, 1).dim(), 3);
        prop_assert_eq!(prolongation(&h, 2).dim(), 0);
    }
}
