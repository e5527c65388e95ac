use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skewmix::density::DensityModel;
use skewmix::lab::{
    correlation_series, fit_decay_rate, run, run_to_disk, Command, ExperimentConfig, Observable,
};
use skewmix::trig::{Coefficient, RealTerm};
use skewmix::{Error, ExpandingMap, FiberRotation, TrigPoly};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn geometric(amp: f64, rho: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| amp * rho.powi(k as i32)).collect()
}

fn cosine() -> FiberRotation {
    FiberRotation::scalar(TrigPoly::from_real_terms(1, &[RealTerm::cos(vec![1], 1.0)])).unwrap()
}

#[test]
fn fit_recovers_exact_and_noisy_geometric_series() {
    let exact = fit_decay_rate(&geometric(0.5, 0.7, 40), [10, 40]).unwrap();
    assert!((exact.rate - 0.7).abs() < 1e-12 && exact.excluded.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noisy: Vec<f64> = geometric(0.5, 0.7, 40)
        .into_iter()
        .map(|c| c + rng.random_range(-1e-14..1e-14))
        .collect();
    assert!((fit_decay_rate(&noisy, [10, 40]).unwrap().rate - 0.7).abs() < 1e-3);
    let fast = geometric(1.0, 0.1, 40);
    assert!(matches!(fit_decay_rate(&fast, [10, 40]), Err(Error::WindowTooNoisy { .. })));
}

#[test]
fn constant_observables_do_not_correlate() {
    let d = ExpandingMap::doubling();
    let h = DensityModel::lebesgue(1);
    let one = Observable::from_coefficients(1, 1, &[Coefficient { freq: vec![0, 0], re: 2.0, im: 0.0 }]).unwrap();
    let c = correlation_series(&d, &cosine(), &h, &one, &one, 10, 16).unwrap();
    assert!(c.moduli.iter().all(|&m| m < 1e-14));
}

/// With `φ = e^{2πiy}` and `ψ = a(x) e^{−2πiy}` the fiber integral leaves
/// `C_n = ∫ a(x) e^{2πi S_nτ(x)} dx`, evaluated here by plain quadrature.
#[test]
fn fiber_pure_pair_reduces_to_a_base_integral() {
    let d = ExpandingMap::doubling();
    let h = DensityModel::lebesgue(1);
    let phi = Observable::fiber_mode(1, &[1]);
    let psi = Observable::from_coefficients(
        1,
        1,
        &[
            Coefficient { freq: vec![0, -1], re: 0.5, im: 0.0 },
            Coefficient { freq: vec![1, -1], re: 0.5, im: 0.0 },
            Coefficient { freq: vec![-1, -1], re: 0.5, im: 0.0 },
        ],
    )
    .unwrap();
    let series = correlation_series(&d, &cosine(), &h, &phi, &psi, 4, 64).unwrap();
    let m = 1 << 14;
    for n in 1..=4usize {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            let x = i as f64 / m as f64;
            let s: f64 = (0..n).map(|k| (2.0 * PI * x * 2f64.powi(k as i32)).cos()).sum();
            acc += Complex64::from_polar(0.5 + (2.0 * PI * x).cos(), 2.0 * PI * s);
        }
        acc /= m as f64;
        assert!((series.values[n - 1] - acc).norm() < 1e-10, "n={n}: {} vs {acc}", series.values[n - 1]);
    }
}

#[test]
fn coboundary_pair_does_not_decay() {
    let cfg = ExperimentConfig::load(&config("coboundary_integral.toml")).unwrap();
    let sys = cfg.build().unwrap();
    let h = cfg.density(&sys.map).unwrap();
    let phi = Observable::fiber_mode(1, &[1]).conj();
    let psi = Observable::fiber_mode(1, &[1]);
    let c = correlation_series(&sys.map, &sys.tau, &h, &phi, &psi, 40, 64).unwrap();
    let floor = c.moduli.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(floor > 0.5, "floor {floor}");
    match fit_decay_rate(&c.moduli, [10, 40]) {
        Ok(f) => assert!(f.r2 < 0.5 || (f.rate - 1.0).abs() < 1e-6, "{f:?}"),
        Err(e) => assert!(matches!(e, Error::WindowTooNoisy { .. })),
    }
}

#[test]
fn shipped_configs_round_trip() {
    for name in ["mixing_cos.toml", "coboundary_integral.toml", "coboundary_sqrt3.toml"] {
        let cfg = ExperimentConfig::load(&config(name)).unwrap();
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg, "{name}");
        cfg.build().unwrap();
    }
}

#[test]
fn runners_write_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::load(&config("mixing_cos.toml")).unwrap();
    cfg.output.dir = dir.path().to_path_buf();
    cfg.spectral.k = Some(32);
    let paths = run_to_disk(Command::Density, &cfg).unwrap();
    assert_eq!(paths.len(), 2);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
    assert_eq!(json["command"], "density");
    assert_eq!(json["seed"], 1);
    let csv = std::fs::read_to_string(&paths[1]).unwrap();
    assert_eq!(csv.lines().count(), 257);
    for cmd in Command::ALL {
        assert_eq!(Command::from_name(cmd.name()), Some(cmd));
    }
    let out = run(Command::TwistSpectrum, &cfg).unwrap();
    assert_eq!(out.csv.unwrap().lines().count(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_recovers_any_geometric_rate(rho in 0.4..0.97f64, amp in 1e-3..10.0f64) {
        let f = fit_decay_rate(&geometric(amp, rho, 40), [10, 40]).unwrap();
        prop_assert!((f.rate - rho).abs() < 1e-10);
        prop_assert!(f.r2 > 1.0 - 1e-10);
    }

    #[test]
    fn config_overrides_round_trip(seed in any::<u64>(), s in -4.0..=-0.25f64, k in 8usize..200, n_max in 1usize..60) {
        let mut cfg = ExperimentConfig::load(&config("coboundary_sqrt3.toml")).unwrap();
        cfg.seed = seed;
        cfg.s = s;
        cfg.spectral.k = Some(k);
        cfg.correlate.n_max = n_max;
        cfg.correlate.window = [1, n_max];
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(again, cfg);
    }
}
