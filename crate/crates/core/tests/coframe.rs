mod common;

use std::collections::BTreeMap;

use cartan::catalog;
use cartan::coframe::{derive_classifying_algebroid, invariant_tower, verify_classifying_data, Coframe, DeriveOptions, TowerOptions};
use cartan::realize::numeric_exterior_derivative;
use cartan::symexpr::{is_identically_zero, normalize, Chart, Expr, ZeroOptions};
use common::{ex, rand_poly};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vanishes(e: &Expr, chart: &Chart) -> bool {
    is_identically_zero(e, chart, &ZeroOptions::default()).unwrap().vanishes()
}

fn random_coframe(rng: &mut ChaCha8Rng) -> Coframe {
    // unipotent plus a small perturbation keeps it invertible on the box
    let chart = Chart::new(&["x", "y"], &[(0.5, 1.5), (0.5, 1.5)]).unwrap();
    let a = vec![
        vec![Expr::num(2.0) + rand_poly(rng, &["x", "y"], 1, 1).scale(0.05), rand_poly(rng, &["x", "y"], 2, 2)],
        vec![Expr::zero(), Expr::num(3.0) + rand_poly(rng, &["x"], 2, 2).scale(0.05)],
    ];
    Coframe::new(chart, a).unwrap()
}

#[test]
fn structure_functions_match_numeric_exterior_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let theta = random_coframe(&mut rng);
        let c = theta.structure_functions();
        let coords = theta.chart().coords().to_vec();
        for _ in 0..5 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(0.6..1.4)).collect();
            let form = |y: &[f64]| theta.matrix_at(y);
            let dth = numeric_exterior_derivative(&form, &x, 1e-4).unwrap();
            let a = theta.matrix_at(&x).unwrap();
            for k in 0..2 {
                // Σ_{i<j} C^k_ij (θ^i∧θ^j)_{01}
                let ck = c[(k * 2) * 2 + 1].eval(&coords, &x).unwrap();
                let wedge = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
                assert!((dth[k][(0, 1)] - ck * wedge).abs() < 1e-7, "{} vs {}", dth[k][(0, 1)], ck * wedge);
            }
        }
    }
}

#[test]
fn coframe_derivative_obeys_leibniz() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10 {
        let theta = random_coframe(&mut rng);
        let f = rand_poly(&mut rng, &["x", "y"], 2, 3) + Expr::one();
        let g = rand_poly(&mut rng, &["x", "y"], 2, 3);
        let dfg = theta.coframe_derivative(&(f.clone() * g.clone()));
        let (df, dg) = (theta.coframe_derivative(&f), theta.coframe_derivative(&g));
        for k in 0..2 {
            let r = dfg[k].clone() - (f.clone() * dg[k].clone() + g.clone() * df[k].clone());
            assert!(vanishes(&r, theta.chart()), "{r}");
        }
    }
}

#[test]
fn coframe_derivative_reconstructs_differential() {
    // df = Σ_k (∂f/∂θ^k) θ^k
    let theta = catalog::coframe_x_dy().coframe;
    let f = ex("x^2*y + sin(y)");
    let dk = theta.coframe_derivative(&f);
    for (mu, x) in ["x", "y"].iter().enumerate() {
        let r = Expr::sum((0..2).map(|k| dk[k].clone() * theta.coefficient(k, mu).clone()))
            - cartan::symexpr::differentiate(&f, x);
        assert!(vanishes(&r, theta.chart()));
    }
}

#[test]
fn structure_functions_are_chart_independent() {
    // θ¹=dx, θ²=x dy under x = e^u
    let old = catalog::coframe_x_dy().coframe;
    let chart = Chart::new(&["u", "y"], &[(0.5f64.ln(), 2f64.ln()), (-1.0, 1.0)]).unwrap();
    let new = Coframe::parse(chart.clone(), &[&["exp(u)", "0"], &["0", "exp(u)"]]).unwrap();
    let sub = BTreeMap::from([("x".to_string(), ex("exp(u)"))]);
    let (c_old, c_new) = (old.structure_functions(), new.structure_functions());
    for (a, b) in c_old.iter().zip(&c_new) {
        assert!(vanishes(&(a.substitute(&sub) - b.clone()), &chart), "{a} vs {b}");
    }
}

#[test]
fn structure_functions_transform_under_constant_frame_change() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let theta = random_coframe(&mut rng);
    let p = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, 1.0]);
    let pinv = p.clone().try_inverse().unwrap();
    let rows: Vec<Vec<Expr>> = (0..2)
        .map(|i| {
            (0..2)
                .map(|mu| normalize(&Expr::sum((0..2).map(|j| theta.coefficient(j, mu).scale(p[(i, j)])))))
                .collect()
        })
        .collect();
    let moved = Coframe::new(theta.chart().clone(), rows).unwrap();
    let (c, c2) = (theta.structure_functions(), moved.structure_functions());
    // C'^k_{12} = P^k_l C^l_{ab} Q^a_1 Q^b_2 with Q = P^{-1}
    let x = [0.9, 1.1];
    let coords = theta.chart().coords().to_vec();
    let det_q = pinv.determinant();
    for k in 0..2 {
        let expect: f64 = (0..2).map(|l| p[(k, l)] * c[(l * 2) * 2 + 1].eval(&coords, &x).unwrap() * det_q).sum();
        let got = c2[(k * 2) * 2 + 1].eval(&coords, &x).unwrap();
        assert!((expect - got).abs() < 1e-10, "{expect} vs {got}");
    }
}

#[test]
fn worked_coframes_have_expected_ranks() {
    let expected = [("x-dy", 1), ("exp-dy", 0), ("dy-y-dx", 0), ("identity", 0)];
    for w in catalog::worked_coframes() {
        let tower = invariant_tower(&w.coframe, &TowerOptions::new(3)).unwrap();
        let want = expected.iter().find(|(n, _)| *n == w.name).unwrap().1;
        assert_eq!(tower.rank(), Some(want), "{}", w.name);
        assert_eq!(tower.generators.len(), want);
    }
}

#[test]
fn x_dy_classifying_algebroid() {
    let theta = catalog::coframe_x_dy().coframe;
    let c = theta.structure_functions();
    assert_eq!(normalize(&c[(2 - 1) * 4 + 1]), normalize(&ex("1/x")));
    let tower = invariant_tower(&theta, &TowerOptions::new(3)).unwrap();
    let data = derive_classifying_algebroid(&theta, &tower, &DeriveOptions::default()).unwrap();
    let alg = &data.algebroid;
    let chart = alg.chart();
    assert!(alg.certify(&ZeroOptions::default()).unwrap().passed());
    // h = 1/x gives [e1,e2] = h e2 and F = (-h^2, 0)
    assert!(vanishes(&(alg.c(1, 0, 1).clone() - ex("h")), chart));
    assert!(vanishes(&(alg.f(0, 0).clone() + ex("h^2")), chart));
    assert!(vanishes(alg.f(0, 1), chart));
    let report = verify_classifying_data(&theta, &data.h, alg, &ZeroOptions::default()).unwrap();
    assert!(report.passed());
}

#[test]
fn user_generator_changes_presentation_not_validity() {
    let theta = catalog::coframe_x_dy().coframe;
    let mut opts = TowerOptions::new(3);
    opts.generators = Some(vec![ex("x")]);
    let tower = invariant_tower(&theta, &opts).unwrap();
    let data = derive_classifying_algebroid(&theta, &tower, &DeriveOptions::default()).unwrap();
    let chart = data.algebroid.chart();
    // with h = x: [e1,e2] = e2/h, F = (1, 0)
    assert!(vanishes(&(data.algebroid.c(1, 0, 1).clone() - ex("1/h")), chart));
    assert!(vanishes(&(data.algebroid.f(0, 0).clone() - Expr::one()), chart));
    assert!(verify_classifying_data(&theta, &data.h, &data.algebroid, &ZeroOptions::default()).unwrap().passed());
}

#[test]
fn singular_coframe_is_rejected() {
    let chart = Chart::new(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
    assert!(Coframe::parse(chart.clone(), &[&["1", "0"], &["0", "x"]]).is_err());
    assert!(Coframe::parse(chart, &[&["1", "1"], &["2", "2"]]).is_err());
}
