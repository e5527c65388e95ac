use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skewmix::density::DensityModel;
use skewmix::maps::PreimageWord;
use skewmix::symbol::{
    cocycle_along_word, cocycle_step, direction_grid, direction_lipschitz, dt_n_transpose,
    exterior_bound, find_n0, ptilde, ptilde_by_words, ptilde_field, w_n, FieldSpec, WeightG,
};
use skewmix::trig::RealTerm;
use skewmix::{ExpandingMap, FiberRotation, TrigPoly};

fn cos_poly(a: f64) -> TrigPoly {
    TrigPoly::from_real_terms(1, &[RealTerm::cos(vec![1], a)])
}

fn cosine() -> FiberRotation {
    FiberRotation::scalar(cos_poly(1.0)).unwrap()
}

fn lebesgue() -> DensityModel {
    DensityModel::lebesgue(1)
}

#[test]
fn weight_profile() {
    let g = WeightG::for_system(&ExpandingMap::doubling(), &cosine());
    assert_eq!(g.g0(g.r / 2.0), 1.0);
    assert_eq!(g.g0(g.gamma * g.r), g.gamma * g.r);
    let mid = 0.5 * (g.r + g.b);
    assert!(g.g0(mid) > 1.0 && g.g0(mid) < mid);
    let samples: Vec<f64> = (0..=400).map(|i| g.g0(g.r + (g.b - g.r) * i as f64 / 400.0)).collect();
    assert!(samples.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn cocycle_examples() {
    let d = ExpandingMap::doubling();
    // Dτ = −sin(2πx) at x = 1/4 is −1.
    let tau = FiberRotation::scalar(cos_poly(1.0 / (2.0 * PI))).unwrap();
    let out = cocycle_step(&d, &tau, &[1.0], &[0.25], &[0.5]);
    assert!(out[0].abs() < 1e-15);
    assert_eq!(cocycle_step(&d, &tau, &[0.0], &[0.3], &[0.7]), vec![1.4]);
    assert_eq!(w_n(&d, &tau, &[0.3], 0)[(0, 0)], 0.0);
    assert!((w_n(&d, &tau, &[0.3], 1)[(0, 0)] - tau.jacobian(&[0.3])[(0, 0)]).abs() < 1e-15);
    let g = WeightG::for_system(&d, &cosine());
    let factor = 0.5 * (g.gamma + 1.0);
    for xi in [g.r * 1.001, 2.0 * g.r, -3.0 * g.r] {
        for x in [0.0, 0.2, 0.7] {
            let eta = cocycle_step(&d, &cosine(), &[1.0], &[x], &[xi]);
            assert!(eta[0].abs() > factor * xi.abs());
        }
    }
}

#[test]
fn words_follow_the_closed_form() {
    let d = ExpandingMap::doubling();
    let tau = cosine();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.random_range(1..=5);
        let word = PreimageWord((0..n).map(|_| rng.random_range(0..2)).collect());
        let x = [rng.random::<f64>()];
        let xi = [rng.random_range(-4.0..4.0)];
        let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let y = d.follow_word(&x, &word).unwrap();
        let want = dt_n_transpose(&d, &y, n)[(0, 0)] * xi[0] + w_n(&d, &tau, &y, n)[(0, 0)] * dir;
        let got = cocycle_along_word(&d, &tau, &[dir], &x, &word, &xi).unwrap()[0];
        assert!((got - want).abs() < 1e-10 * want.abs().max(1.0));
    }
}

#[test]
fn constant_rotation_is_trapped_near_zero() {
    let d = ExpandingMap::doubling();
    let tau = FiberRotation::scalar(TrigPoly::constant(1, 0.4)).unwrap();
    let g = WeightG::for_system(&d, &tau);
    for n in 1..=4 {
        let xi = g.r / 2f64.powi(n as i32);
        let p = ptilde(&d, &tau, &lebesgue(), &g, -1.0, &[1.0], n, &[0.3], &[xi]).unwrap();
        assert!((p.value - 1.0).abs() < 1e-15 && !p.escaped());
    }
    // Past log_γ R + 1 steps every ξ with |ξ| ≥ 1 escapes.
    let n = (g.r.ln() / 2f64.ln()).ceil() as usize + 1;
    let f = ptilde_field(&d, &tau, &lebesgue(), &g, -1.0, &[1.0], n, &FieldSpec::default_for(1)).unwrap();
    let m = f.xis.len();
    let mut worst = 0.0f64;
    for (idx, v) in f.values.iter().enumerate() {
        if f.xis[idx % m][0].abs() >= 1.0 {
            worst = worst.max(*v);
        }
    }
    assert!(worst < 1.0);
}

#[test]
fn tree_descent_matches_word_enumeration_at_origin() {
    let d = ExpandingMap::doubling();
    let tau = cosine();
    let g = WeightG::for_system(&d, &tau);
    for n in 1..=6 {
        let a = ptilde(&d, &tau, &lebesgue(), &g, -1.0, &[1.0], n, &[0.0], &[0.0]).unwrap().value;
        let b = ptilde_by_words(&d, &tau, &lebesgue(), &g, -1.0, &[1.0], n, &[0.0], &[0.0]).unwrap();
        assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
    }
}

#[test]
fn sup_is_monotone_in_depth() {
    let d = ExpandingMap::doubling();
    let tau = cosine();
    let g = WeightG::for_system(&d, &tau);
    let spec = FieldSpec::default_for(1);
    for dir in [[1.0], [-1.0]] {
        let sups: Vec<f64> = (1..=6)
            .map(|n| ptilde_field(&d, &tau, &lebesgue(), &g, -1.0, &dir, n, &spec).unwrap().sup)
            .collect();
        for m in 0..sups.len() {
            for k in m + 1..sups.len() {
                assert!(sups[k] <= sups[m] + 2e-9, "{sups:?}");
            }
        }
    }
}

#[test]
fn antipodal_directions_mirror_covectors() {
    let d = ExpandingMap::doubling();
    let tau = cosine();
    let g = WeightG::for_system(&d, &tau);
    let spec = FieldSpec { x_points: 8, xi_points: 33 };
    let plus = ptilde_field(&d, &tau, &lebesgue(), &g, -1.0, &[1.0], 3, &spec).unwrap();
    let minus = ptilde_field(&d, &tau, &lebesgue(), &g, -1.0, &[-1.0], 3, &spec).unwrap();
    let m = plus.xis.len();
    for i in 0..plus.xs.len() {
        for j in 0..m {
            assert!((plus.values[i * m + j] - minus.values[i * m + (m - 1 - j)]).abs() < 1e-13);
        }
    }
    assert!((plus.sup - minus.sup).abs() < 1e-13);
}

#[test]
fn cosine_finds_n0_and_coboundary_does_not() {
    let d = ExpandingMap::doubling();
    let dirs = direction_grid(1, 30.0).unwrap();
    let spec = FieldSpec::default_for(1);
    let cos = find_n0(&d, &cosine(), &lebesgue(), -1.0, &dirs, 8, &spec, 1e-3).unwrap();
    assert!(cos.found && cos.n0.unwrap() <= 8);
    for h in &cos.per_direction {
        assert!(h.sup_history.windows(2).all(|w| w[1] <= w[0] + 2e-9));
    }
    let a = 1.0 / (2.0 * PI);
    let cob = FiberRotation::scalar(TrigPoly::from_real_terms(
        1,
        &[RealTerm::cos(vec![0], 0.3), RealTerm::sin(vec![1], a), RealTerm::sin(vec![2], -a)],
    ))
    .unwrap();
    let search = find_n0(&d, &cob, &lebesgue(), -1.0, &dirs, 5, &spec, 1e-3).unwrap();
    assert!(!search.found && search.n0.is_none());
    for h in &search.per_direction {
        assert!(h.sup_history.iter().all(|&v| (v - 1.0).abs() < 1e-12), "{:?}", h.sup_history);
    }
}

#[test]
fn dependent_direction_stays_at_one() {
    let d = ExpandingMap::doubling();
    let tau = FiberRotation::new(1, vec![cos_poly(1.0), cos_poly(2.0)]).unwrap();
    let g = WeightG::for_system(&d, &tau);
    let dir = [2.0 / 5f64.sqrt(), -1.0 / 5f64.sqrt()];
    for n in 1..=4 {
        let f = ptilde_field(&d, &tau, &lebesgue(), &g, -1.0, &dir, n, &FieldSpec::default_for(1)).unwrap();
        assert_eq!(f.sup, 1.0);
    }
}

/// Boundedness, the escape criterion and the exterior bound on random
/// `(x, ξ, n_dir, n)`, for a circle and a planar fiber.
#[test]
fn escape_criterion_on_random_samples() {
    let d = ExpandingMap::doubling();
    let systems = [
        cosine(),
        FiberRotation::new(
            1,
            vec![cos_poly(1.0), TrigPoly::from_real_terms(1, &[RealTerm::sin(vec![2], 0.4)])],
        )
        .unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (t, tau) in systems.iter().enumerate() {
        let g = WeightG::for_system(&d, tau);
        for _ in 0..500 {
            let n = rng.random_range(1..=5);
            let x = [rng.random::<f64>()];
            let xi = [rng.random_range(-2.0 * g.r..2.0 * g.r)];
            let dir: Vec<f64> = if t == 0 {
                vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]
            } else {
                let a: f64 = rng.random_range(0.0..2.0 * PI);
                vec![a.cos(), a.sin()]
            };
            let p = ptilde(&d, tau, &lebesgue(), &g, -1.0, &dir, n, &x, &xi).unwrap();
            assert!(p.value > 0.0 && p.value <= 1.0);
            assert_eq!(p.escaped(), p.max_image_norm > g.r, "{p:?}");
            if xi[0].abs() > g.r {
                assert!(p.value <= exterior_bound(&g, -1.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn directions_move_ptilde_within_the_lipschitz_bound(
        x in 0.0..1.0f64, xi in -3.0..3.0f64, a in 0.0..6.3f64, da in -0.2..0.2f64, n in 1usize..=4
    ) {
        let d = ExpandingMap::doubling();
        let tau = FiberRotation::new(
            1,
            vec![cos_poly(1.0), TrigPoly::from_real_terms(1, &[RealTerm::sin(vec![2], 0.4)])],
        )
        .unwrap();
        let g = WeightG::for_system(&d, &tau);
        let (d1, d2) = ([a.cos(), a.sin()], [(a + da).cos(), (a + da).sin()]);
        let dist = ((d1[0] - d2[0]).powi(2) + (d1[1] - d2[1]).powi(2)).sqrt();
        let p1 = ptilde(&d, &tau, &lebesgue(), &g, -1.0, &d1, n, &[x], &[xi]).unwrap().value;
        let p2 = ptilde(&d, &tau, &lebesgue(), &g, -1.0, &d2, n, &[x], &[xi]).unwrap().value;
        prop_assert!((p1 - p2).abs() <= direction_lipschitz(&d, &tau, &g, -1.0, n) * dist + 1e-9);
    }

    #[test]
    fn words_and_tree_agree(x in 0.0..1.0f64, xi in -3.0..3.0f64, n in 1usize..=6, s in -2.0..-0.2f64) {
        let d = ExpandingMap::linear(vec![vec![3]]).unwrap();
        let tau = cosine();
        let g = WeightG::for_system(&d, &tau);
        let n = n.min(4);
        let a = ptilde(&d, &tau, &lebesgue(), &g, s, &[1.0], n, &[x], &[xi]).unwrap().value;
        let b = ptilde_by_words(&d, &tau, &lebesgue(), &g, s, &[1.0], n, &[x], &[xi]).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
