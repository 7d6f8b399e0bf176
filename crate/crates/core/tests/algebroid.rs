mod common;

use cartan::algebroid::{FlatAlgebroid, OrbitVerdict, SignConvention};
use cartan::catalog;
use cartan::symexpr::{is_identically_zero, Chart, ZeroOptions};
use common::{ex, known_realizations, rand_poly, rank2_algebroid, Exterior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_algebroid(rng: &mut ChaCha8Rng, n: usize) -> FlatAlgebroid {
    let chart = Chart::new(&["p", "q"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
    let vars = ["p", "q"];
    let mut c = Vec::new();
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                c.push(((k, i, j), rand_poly(rng, &vars, 2, 2)));
            }
        }
    }
    let mut f = Vec::new();
    for a in 0..2 {
        for i in 0..n {
            f.push(((a, i), rand_poly(rng, &vars, 2, 2)));
        }
    }
    FlatAlgebroid::from_entries(chart, n, c, f).unwrap()
}

fn eval(e: &cartan::symexpr::Expr, chart: &Chart, p: &[f64]) -> f64 {
    e.eval(chart.coords(), p).unwrap()
}

#[test]
fn residual_tables_equal_second_exterior_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..6 {
        let alg = random_algebroid(&mut rng, 3);
        let ext = Exterior { alg: &alg };
        let chart = alg.chart().clone();
        let pts: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        for ((i, j, k, m), e) in alg.jacobi_table() {
            let dd = ext.d(&ext.d_basis(m)).coefficient(&[i, j, k]);
            for p in &pts {
                let (a, b) = (eval(&e, &chart, p), eval(&dd, &chart, p));
                assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "J^{m}_{i}{j}{k}: {a} vs {b}");
            }
        }
        for ((i, j, b), e) in alg.anchor_table() {
            let h = ex(&chart.coords()[b]);
            let dd = ext.d(&ext.d_function(&h)).coefficient(&[i, j]);
            for p in &pts {
                let (x, y) = (eval(&e, &chart, p), eval(&dd, &chart, p));
                assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "M^{b}_{i}{j}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn literal_convention_breaks_the_d_squared_identity() {
    // θ¹ = dx, θ² = dy − y dx, h = y: C²₁₂ = 1, F = (h, 1)
    let chart = Chart::new(&["h"], &[(-1.0, 1.0)]).unwrap();
    let alg = FlatAlgebroid::from_entries(chart, 2, [((1, 0, 1), ex("1"))], [((0, 0), ex("h")), ((0, 1), ex("1"))]).unwrap();
    let opts = ZeroOptions::default();
    assert!(alg.certify(&opts).unwrap().passed());
    let lit = alg.clone().with_convention(SignConvention::Literal).certify(&opts).unwrap();
    assert!(!lit.passed());
    assert!((lit.anchor.max_abs - 2.0).abs() < 1e-12);
}

#[test]
fn known_realizations_give_certified_algebroids() {
    let opts = ZeroOptions::default();
    for k in known_realizations() {
        assert!(k.alg.certify(&opts).unwrap().passed(), "{}", k.name);
        for e in common::structure_equation_residuals(&k.alg, &k.chart, &k.theta, &k.h) {
            assert!(is_identically_zero(&e, &k.chart, &opts).unwrap().vanishes(), "{}: {e}", k.name);
        }
    }
}

#[test]
fn residuals_are_invariant_under_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = ZeroOptions::default();
    let mut algs = vec![catalog::constant_curvature(), rank2_algebroid(), catalog::bochner_kahler(1)];
    algs.push(random_algebroid(&mut rng, 3));
    for alg in algs {
        let n = alg.n();
        let base = alg.certify(&opts).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.reverse();
        if n > 2 {
            perm.swap(0, 1);
        }
        let other = alg.relabel(&perm).certify(&opts).unwrap();
        assert_eq!(base.passed(), other.passed());
        assert_eq!(base.jacobi.components, other.jacobi.components);
        assert_eq!(base.anchor.components, other.anchor.components);
    }
}

#[test]
fn isotropy_of_the_rank2_example() {
    let alg = rank2_algebroid();
    let iso = alg.isotropy_at(&[1.0]).unwrap();
    assert_eq!(iso.dim(), 1);
    assert!(iso.basis[0][0].abs() < 1e-12);
    assert_eq!(alg.orbit_rank_at(&[1.0]).unwrap(), 1);
}

#[test]
fn isotropy_closure_vanishes_for_certified_algebroids() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for alg in [catalog::bochner_kahler(1), catalog::constant_curvature(), rank2_algebroid()] {
        for x in alg.chart().sample(&mut rng, 5, &[]).unwrap() {
            let iso = alg.isotropy_at(&x).unwrap();
            assert!(iso.closure_residual < 1e-9, "{}", iso.closure_residual);
        }
    }
}

#[test]
fn orbit_rank_does_not_drop_under_perturbation() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let alg = catalog::bochner_kahler(1);
    for x in alg.chart().sample(&mut rng, 20, &[]).unwrap() {
        let r = alg.orbit_rank_at(&x).unwrap();
        let y: Vec<f64> = x.iter().map(|v| (v + rng.gen_range(-1e-4..1e-4)).clamp(-1.0, 1.0)).collect();
        assert!(alg.orbit_rank_at(&y).unwrap() >= r);
    }
}

#[test]
fn orbit_of_rank2_example_follows_the_anchor_flow() {
    let chart = Chart::new(&["h"], &[(0.25, 2.0)]).unwrap();
    let alg = FlatAlgebroid::from_entries(chart, 2, [((1, 0, 1), ex("h"))], [((0, 0), -ex("h^2"))]).unwrap();
    match alg.same_orbit(&[1.0], &[0.5], 100_000).unwrap() {
        OrbitVerdict::Yes { endpoint, .. } => assert!((endpoint[0] - 0.5).abs() < 1e-6),
        other => panic!("{other:?}"),
    }
    assert!(matches!(alg.same_orbit(&[1.0], &[1.0], 10).unwrap(), OrbitVerdict::Yes { ref path, .. } if path.is_empty()));
}

#[test]
fn distinct_curvatures_lie_on_distinct_orbits() {
    let v = catalog::constant_curvature().same_orbit(&[1.0], &[2.0], 1000).unwrap();
    assert!(matches!(v, OrbitVerdict::No { .. }), "{v:?}");
}
