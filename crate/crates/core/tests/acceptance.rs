//! Acceptance criteria 1–8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skewmix::cobound::livsic;
use skewmix::density::{invariant_density, weight_A, DensityModel};
use skewmix::fft::{interpolant_real, UniformGrid};
use skewmix::lab::{
    correlation_series, dichotomy_report, fit_decay_rate, run, Command, DecayReport, ExperimentConfig,
    MapKindSpec, MapSpec, Observable, TauComponent, TauSpec, Verdict,
};
use skewmix::symbol::{
    direction_grid, exterior_bound, find_n0, ptilde, ptilde_by_words, ptilde_field, FieldSpec, WeightG,
};
use skewmix::trig::{Coefficient, RealTerm};
use skewmix::twisted::{assemble_transfer, eigenvalues, spectral_radius, SobolevWeight};
use skewmix::{ExpandingMap, FiberRotation, TrigPoly};

/// `(n₀, p̃₀)` for `τ = cos(2πx)` on the doubling map, `s = −1`, default
/// grids; recorded from the first verified run.
const FROZEN_N0: usize = 3;
const FROZEN_PTILDE0: f64 = 0.865291572188152;

type Outcome = Result<String, String>;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn cosine() -> FiberRotation {
    FiberRotation::scalar(TrigPoly::from_real_terms(1, &[RealTerm::cos(vec![1], 1.0)])).unwrap()
}

fn perturbed_doubling(a: f64) -> ExpandingMap {
    ExpandingMap::perturbed(2, TrigPoly::from_real_terms(1, &[RealTerm::sin(vec![1], a)])).unwrap()
}

fn within(label: &str, elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed > limit {
        Err(format!("{label} took {elapsed:.1?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn normalization() -> Outcome {
    let t0 = Instant::now();
    let maps = [
        ("doubling", ExpandingMap::doubling()),
        ("tripling", ExpandingMap::linear(vec![vec![3]]).unwrap()),
        ("diag(2,3)", ExpandingMap::linear(vec![vec![2, 0], vec![0, 3]]).unwrap()),
        ("perturbed doubling", perturbed_doubling(0.05 / (2.0 * PI))),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for (name, map) in &maps {
        let h = invariant_density(map, 64, 1e-13).map_err(|e| format!("{name}: {e}"))?;
        for _ in 0..4 {
            let x: Vec<f64> = (0..map.dim()).map(|_| rng.random()).collect();
            for n in 0..=6 {
                let total: f64 = map
                    .preimage_tree(&x, n)
                    .map_err(|e| e.to_string())?
                    .iter()
                    .map(|(_, y)| weight_A(map, &h, y, n))
                    .sum();
                worst = worst.max((total - 1.0).abs());
                if (total - 1.0).abs() > 1e-9 {
                    return Err(format!("{name}, x = {x:?}, n = {n}: Σ A_n = {total}"));
                }
            }
        }
    }
    within("normalization", t0.elapsed(), Duration::from_secs(10))?;
    Ok(format!("max |Σ A_n − 1| = {worst:.1e} over 4 maps, n ≤ 6 ({:.1?})", t0.elapsed()))
}

fn symbol_laws() -> Outcome {
    let t0 = Instant::now();
    let d = ExpandingMap::doubling();
    let h = DensityModel::lebesgue(1);
    let planar = FiberRotation::new(
        1,
        vec![cosine().components()[0].clone(), TrigPoly::from_real_terms(1, &[RealTerm::sin(vec![2], 0.4)])],
    )
    .unwrap();
    let systems = [cosine(), planar];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut escaped, mut exterior) = (0, 0);
    for i in 0..1000 {
        let tau = &systems[i % 2];
        let g = WeightG::for_system(&d, tau);
        let n = rng.random_range(1..=5);
        let x = [rng.random::<f64>()];
        let xi = [rng.random_range(-2.0 * g.r..2.0 * g.r)];
        let dir: Vec<f64> = if tau.fiber_dim() == 1 {
            vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]
        } else {
            let a: f64 = rng.random_range(0.0..2.0 * PI);
            vec![a.cos(), a.sin()]
        };
        let p = ptilde(&d, tau, &h, &g, -1.0, &dir, n, &x, &xi).map_err(|e| e.to_string())?;
        let at = format!("x = {x:?}, ξ = {xi:?}, n_dir = {dir:?}, n = {n}");
        if !(p.value > 0.0 && p.value <= 1.0) {
            return Err(format!("p̃ = {} out of (0, 1] at {at}", p.value));
        }
        if p.escaped() != (p.max_image_norm > g.r) {
            return Err(format!("escape criterion fails at {at}: {p:?}, R = {}", g.r));
        }
        escaped += p.escaped() as usize;
        if xi[0].abs() > g.r {
            exterior += 1;
            if p.value > exterior_bound(&g, -1.0) {
                return Err(format!("exterior bound exceeded at {at}: {}", p.value));
            }
        }
    }
    let g = WeightG::for_system(&d, &systems[0]);
    let spec = FieldSpec::default_for(1);
    for dir in [[1.0], [-1.0]] {
        let sups = (1..=6)
            .map(|n| ptilde_field(&d, &systems[0], &h, &g, -1.0, &dir, n, &spec).map(|f| f.sup))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        for m in 0..sups.len() {
            for k in m + 1..sups.len() {
                if sups[k] > sups[m] + 2e-9 {
                    return Err(format!("sup p̃ increases from n = {} to n = {}: {sups:?}", m + 1, k + 1));
                }
            }
        }
    }
    within("symbol laws", t0.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "10³ samples ({escaped} escaping, {exterior} exterior), sup monotone for n = 1..6 ({:.1?})",
        t0.elapsed()
    ))
}

fn ground_truth(reports: &[(&str, DecayReport)]) -> Outcome {
    let expected = [
        Verdict::ExponentialMixing,
        Verdict::EssentialCoboundaryIntegral,
        Verdict::EssentialCoboundaryNonIntegral,
    ];
    let mut details = Vec::new();
    for ((name, r), want) in reports.iter().zip(expected) {
        if r.verdict != want {
            return Err(format!("{name}: verdict {:?}, expected {want:?}; notes {:?}", r.verdict, r.notes));
        }
        if want != Verdict::ExponentialMixing {
            let cert = r.livsic.valid_certificate().ok_or(format!("{name}: no valid certificate"))?;
            if cert.residuals.equation.is_nan() || cert.residuals.equation >= 1e-6 {
                return Err(format!("{name}: equation residual {:e}", cert.residuals.equation));
            }
            details.push(format!("{name} equation {:.1e}", cert.residuals.equation));
        }
        if want == Verdict::EssentialCoboundaryIntegral {
            let s = r.semiconjugacy.as_ref().ok_or(format!("{name}: no semiconjugacy"))?;
            if s.residual.is_nan() || s.residual >= 1e-7 {
                return Err(format!("{name}: semiconjugacy residual {:e}", s.residual));
            }
            details.push(format!("semiconjugacy {:.1e}", s.residual));
        }
    }
    Ok(format!("verdicts mixing / integral / non-integral; {}", details.join(", ")))
}

fn coboundary_eigenvalue() -> Outcome {
    let sys = config("coboundary_integral.toml").build().map_err(|e| e.to_string())?;
    let op = assemble_transfer(&sys.map, &sys.tau, &[1], 64).map_err(|e| e.to_string())?;
    let lead = eigenvalues(&op.matrix).map_err(|e| e.to_string())?[0];
    let want = Complex64::from_polar(1.0, 2.0 * PI * 0.3);
    let dmod = (lead.norm() - 1.0).abs();
    let darg = (lead / want).arg().abs();
    if dmod < 1e-4 && darg < 1e-4 {
        Ok(format!("λ = {lead:.10}, |λ| − 1 = {dmod:.1e}, arg error {darg:.1e}"))
    } else {
        Err(format!("λ = {lead}, modulus error {dmod:e}, argument error {darg:e}"))
    }
}

fn gap_signature() -> Outcome {
    let d = ExpandingMap::doubling();
    let tau = cosine();
    let mut radii = Vec::new();
    for k in [64, 128, 256] {
        let op = assemble_transfer(&d, &tau, &[1], k).map_err(|e| e.to_string())?;
        let w = SobolevWeight::standard(-1.0, &[1], op.basis);
        radii.push(spectral_radius(&op.with_weight(w)).map_err(|e| e.to_string())?.radius);
    }
    let spread = radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - radii.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread > 1e-3 || radii.iter().any(|&r| r >= 1.0 - 1e-3) {
        return Err(format!("radii at K = 64, 128, 256: {radii:?}"));
    }

    let h = DensityModel::lebesgue(1);
    let dirs = direction_grid(1, 30.0).map_err(|e| e.to_string())?;
    let spec = FieldSpec::default_for(1);
    let search = find_n0(&d, &tau, &h, -1.0, &dirs, 8, &spec, 1e-3).map_err(|e| e.to_string())?;
    let (n0, p0) = match (search.n0, search.ptilde0) {
        (Some(n), Some(p)) if n <= 8 => (n, p),
        _ => return Err(format!("find_n0 found nothing within n ≤ 8: {:?}", search.per_direction)),
    };
    if n0 != FROZEN_N0 || (p0 - FROZEN_PTILDE0).abs() > 1e-10 {
        return Err(format!("(n₀, p̃₀) = ({n0}, {p0}), frozen ({FROZEN_N0}, {FROZEN_PTILDE0})"));
    }

    // Second implementation of p̃ at the worst grid points of the n₀ field.
    let g = WeightG::for_system(&d, &tau);
    let mut oracle_gap = 0.0f64;
    for dir in &dirs {
        let f = ptilde_field(&d, &tau, &h, &g, -1.0, dir, n0, &spec).map_err(|e| e.to_string())?;
        let m = f.xis.len();
        let mut order: Vec<usize> = (0..f.values.len()).collect();
        order.sort_by(|a, b| f.values[*b].total_cmp(&f.values[*a]));
        for &idx in order.iter().take(8).chain(order.iter().step_by(97)) {
            let (x, xi) = (&f.xs[idx / m], &f.xis[idx % m]);
            let by_words = ptilde_by_words(&d, &tau, &h, &g, -1.0, dir, n0, x, xi).map_err(|e| e.to_string())?;
            oracle_gap = oracle_gap.max((by_words - f.values[idx]).abs());
        }
    }
    if oracle_gap > 1e-12 {
        return Err(format!("tree descent and word enumeration differ by {oracle_gap:e}"));
    }
    Ok(format!(
        "radii {:.6} / {:.6} / {:.6}; n₀ = {n0}, p̃₀ = {p0:.15}; oracle gap {oracle_gap:.1e}",
        radii[0], radii[1], radii[2]
    ))
}

fn correlation_cross_check(cos_report: &DecayReport) -> Outcome {
    let cfg = config("mixing_cos.toml");
    let sys = cfg.build().map_err(|e| e.to_string())?;
    let h = cfg.density(&sys.map).map_err(|e| e.to_string())?;
    let half = |nu: i64| Coefficient { freq: vec![0, nu], re: 0.5, im: 0.0 };
    let cos_y = Observable::from_coefficients(1, 1, &[half(1), half(-1)]).map_err(|e| e.to_string())?;
    let series = correlation_series(&sys.map, &sys.tau, &h, &cos_y, &cos_y, 40, 64).map_err(|e| e.to_string())?;
    let fit = fit_decay_rate(&series.moduli, [10, 40]).map_err(|e| e.to_string())?;
    let radius = cos_report
        .spectral
        .iter()
        .find(|e| e.nu == [1])
        .and_then(|e| e.radius)
        .ok_or("no ν = 1 radius in the cos report")?;
    let rel = (fit.rate - radius).abs() / radius;
    if rel > 0.15 {
        return Err(format!("ρ̂ = {} vs radius {radius}: {:.1}% apart", fit.rate, 100.0 * rel));
    }

    let cfg = config("coboundary_integral.toml");
    let sys = cfg.build().map_err(|e| e.to_string())?;
    let h = cfg.density(&sys.map).map_err(|e| e.to_string())?;
    let psi = Observable::fiber_mode(1, &[1]);
    let c = correlation_series(&sys.map, &sys.tau, &h, &psi.conj(), &psi, 40, 64).map_err(|e| e.to_string())?;
    let max = |lo: usize, hi: usize| c.moduli[lo - 1..hi].iter().cloned().fold(0.0, f64::max);
    let (late, early) = (max(10, 40), max(1, 10));
    if late < 0.5 * early {
        return Err(format!("coboundary correlations decay: max late {late}, max early {early}"));
    }
    Ok(format!(
        "ρ̂ = {:.4} (r² = {:.2}) vs radius {radius:.4}, {:.1}% apart; coboundary late/early max {:.3}",
        fit.rate,
        fit.r2,
        100.0 * rel,
        late / early
    ))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Real Fourier terms of a real one-variable polynomial.
fn real_terms(p: &TrigPoly) -> Vec<RealTerm> {
    p.terms()
        .iter()
        .filter(|(k, _)| k[0] >= 0)
        .map(|(k, c)| match k[0] {
            0 => RealTerm { freq: k.clone(), cos: c.re, sin: 0.0 },
            _ => RealTerm { freq: k.clone(), cos: 2.0 * c.re, sin: -2.0 * c.im },
        })
        .collect()
}

fn random_poly(rng: &mut ChaCha8Rng, degree: i64, amp: f64) -> TrigPoly {
    let terms: Vec<RealTerm> = (1..=degree)
        .map(|k| RealTerm {
            freq: vec![k],
            cos: rng.random_range(-amp..amp) / k as f64,
            sin: rng.random_range(-amp..amp) / k as f64,
        })
        .collect();
    TrigPoly::from_real_terms(1, &terms)
}

fn random_base(rng: &mut ChaCha8Rng) -> MapSpec {
    let mut spec = MapSpec { kind: MapKindSpec::Doubling, matrix: None, base: None, perturbation: vec![], budget: None };
    match rng.random_range(0..3) {
        0 => {}
        1 => {
            spec.kind = MapKindSpec::Linear;
            spec.matrix = Some(vec![vec![3]]);
        }
        _ => {
            spec.kind = MapKindSpec::Perturbed;
            spec.base = Some(2);
            spec.perturbation = vec![RealTerm::sin(vec![1], rng.random_range(-0.05..0.05))];
        }
    }
    spec
}

/// `u∘T` as a trigonometric polynomial; resolved on a fine grid when `T` is
/// not linear.
fn compose(map: &ExpandingMap, u: &TrigPoly) -> TrigPoly {
    map.compose(u).unwrap_or_else(|| {
        let grid = UniformGrid::new(1, 4096);
        let values: Vec<f64> = (0..grid.len()).map(|i| u.eval_re(&map.eval(&grid.point(i)))).collect();
        interpolant_real(grid, &values).pruned(1e-16)
    })
}

fn experiment(map: MapSpec, components: Vec<Vec<RealTerm>>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml("[map]\nkind = \"doubling\"\n[[tau.components]]\nterms = []\n")
        .expect("minimal config");
    cfg.map = map;
    cfg.tau = TauSpec { components: components.into_iter().map(|terms| TauComponent { terms }).collect() };
    cfg
}

/// `v·τ = c + u − u∘T` with primitive `v ∈ Z^ℓ`, plus a free component along
/// `v^⊥` when `ℓ = 2`.
fn random_coboundary(rng: &mut ChaCha8Rng) -> ExperimentConfig {
    let spec = random_base(rng);
    let map = spec.build().expect("valid base");
    let l = rng.random_range(1..=2usize);
    let v: Vec<i64> = loop {
        let v: Vec<i64> = (0..l).map(|_| rng.random_range(-3..=3)).collect();
        if v.iter().fold(0, |g, &a| gcd(g, a)) == 1 {
            break v;
        }
    };
    let degree = rng.random_range(1..=6);
    let u = random_poly(rng, degree, 0.3);
    let c: f64 = rng.random_range(-1.0..1.0);
    let g = TrigPoly::constant(1, c).add(&u).sub(&compose(&map, &u));
    let free = random_poly(rng, 3, 0.5);
    let vv: f64 = v.iter().map(|a| (a * a) as f64).sum();
    let perp: Vec<f64> = if l == 2 { vec![-(v[1] as f64), v[0] as f64] } else { vec![0.0] };
    let comps = (0..l)
        .map(|i| real_terms(&g.scale(v[i] as f64 / vv).add(&free.scale(perp[i] / vv))))
        .collect();
    experiment(spec, comps)
}

/// Random `τ`, redrawn while some orbit relation fits to within 0.01.
fn random_non_coboundary(rng: &mut ChaCha8Rng) -> (ExperimentConfig, usize) {
    for draws in 1.. {
        let spec = random_base(rng);
        let l = rng.random_range(1..=2usize);
        let comps = (0..l).map(|_| real_terms(&random_poly(rng, 3, 0.5))).collect();
        let cfg = experiment(spec, comps);
        let sys = cfg.build().expect("valid system");
        let report = livsic(&sys.map, &sys.tau, &cfg.livsic).expect("livsic runs");
        if report.best_orbit_residual >= 0.01 {
            return (cfg, draws);
        }
    }
    unreachable!()
}

fn randomized_soundness() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240917);
    let mut failures = Vec::new();
    let mut redraws = 0;
    for case in 0..40 {
        let (cfg, want) = if case < 20 {
            (random_coboundary(&mut rng), Verdict::EssentialCoboundaryIntegral)
        } else {
            let (cfg, draws) = random_non_coboundary(&mut rng);
            redraws += draws - 1;
            (cfg, Verdict::ExponentialMixing)
        };
        match dichotomy_report(&cfg) {
            Ok(r) if r.verdict == want => {}
            Ok(r) => failures.push(format!(
                "case {case}: {:?}, expected {want:?}; notes {:?}\n{}",
                r.verdict,
                r.notes,
                cfg.to_toml()
            )),
            Err(e) => failures.push(format!("case {case}: error {e}\n{}", cfg.to_toml())),
        }
    }
    within("randomized suite", t0.elapsed(), Duration::from_secs(15 * 60))?;
    if failures.is_empty() {
        Ok(format!("40/40 classified ({redraws} non-coboundary redraws) ({:.1?})", t0.elapsed()))
    } else {
        Err(format!("{} misclassified:\n{}", failures.len(), failures.join("\n")))
    }
}

fn determinism() -> Outcome {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/mixing_cos.toml");
    let cli = || {
        std::process::Command::new(env!("CARGO_BIN_EXE_skewmix"))
            .args(["dichotomy", "--config", path.to_str().unwrap(), "--no-write"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (cli()?, cli()?);
    if !a.status.success() {
        return Err(format!("skewmix dichotomy failed: {}", String::from_utf8_lossy(&a.stderr)));
    }
    if a.stdout != b.stdout {
        return Err("CLI dichotomy output differs between runs".into());
    }
    let cfg = config("coboundary_sqrt3.toml");
    let x = run(Command::Dichotomy, &cfg).map_err(|e| e.to_string())?;
    let y = run(Command::Dichotomy, &cfg).map_err(|e| e.to_string())?;
    if x.json != y.json || x.csv != y.csv {
        return Err("library dichotomy output differs between runs".into());
    }
    Ok(format!("byte-identical JSON ({} and {} bytes)", a.stdout.len(), x.json.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| match outcome {
        Ok(msg) => println!("PASS {n} {name}: {msg}"),
        Err(msg) => {
            failed += 1;
            println!("FAIL {n} {name}: {msg}");
        }
    };

    report(1, "normalization", normalization());
    report(2, "symbol-bound laws", symbol_laws());

    let t0 = Instant::now();
    let reports: Vec<(&str, DecayReport)> = ["mixing_cos.toml", "coboundary_integral.toml", "coboundary_sqrt3.toml"]
        .into_iter()
        .map(|name| (name, dichotomy_report(&config(name)).unwrap_or_else(|e| panic!("{name}: {e}"))))
        .collect();
    let elapsed = t0.elapsed();
    let third = ground_truth(&reports).and_then(|msg| {
        within("dichotomy", elapsed, Duration::from_secs(300))?;
        Ok(format!("{msg} ({elapsed:.1?})"))
    });
    report(3, "dichotomy ground truth", third);
    report(4, "coboundary spectral signature", coboundary_eigenvalue());
    report(5, "gap signature", gap_signature());
    report(6, "correlation cross-check", correlation_cross_check(&reports[0].1));
    report(7, "randomized soundness", randomized_soundness());
    report(8, "determinism", determinism());

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
