//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hcbound_core::certificate::{check_certificate, check_certificate_coeffs, trivial_scalar_bound};
use hcbound_core::config::RadiiConfig;
use hcbound_core::lie::elementary;
use hcbound_core::oracle::{cross_check, exp_nilpotent, langlands_factorize, log_discrepancy};
use hcbound_core::psi::{
    component_map_t, evaluate_psi, evaluate_psi_coeffs, grade_coefficients, injectivity_modulus,
};
use hcbound_core::verify::{positivity_counterexample_demo, sample_direction, sample_verify, VerifyConfig};
use hcbound_core::{compositions, Pipeline, Tolerances};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn cases() -> Vec<(usize, Vec<usize>)> {
    (2..=4)
        .flat_map(|n| compositions(n).into_iter().map(move |b| (n, b)))
        .collect()
}

fn nontrivial() -> Vec<(usize, Vec<usize>, Pipeline)> {
    cases()
        .into_iter()
        .filter(|(_, b)| b.len() > 1)
        .map(|(n, b)| {
            let p = Pipeline::sl(n, &b).expect("pipeline builds");
            (n, b, p)
        })
        .collect()
}

/// Point with `|X| <= max_radius`, uniform in radius.
fn random_point(rng: &mut ChaCha8Rng, seed: u64, index: usize, dim: usize, max_radius: f64) -> DVector<f64> {
    sample_direction(seed, index, dim) * (max_radius * rng.random::<f64>())
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut total = 0;
    for (n, blocks, p) in nontrivial() {
        let module = p.module.as_ref().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..1000 {
            let c = random_point(&mut rng, 1, i, p.graded.r(), 10.0);
            let x = p.graded.n_plus_element(&c);
            let d = cross_check(module, &p.graded, &x).map_err(|e| format!("sl{n} {blocks:?}: {e}"))?;
            check(d < 1e-8, || format!("sl{n} {blocks:?} sample {i}: discrepancy {d:.3e}"))?;
            worst = worst.max(d);
            total += 1;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{total} samples, max rel. discrepancy {worst:.2e}, {:.1} s", elapsed.as_secs_f64()))
}

fn sl2_closed_form() -> Outcome {
    let p = Pipeline::sl(2, &[1, 1]).unwrap();
    let module = p.module.as_ref().unwrap();
    for x in [0.0, 1.0, -1.0, 10.0, -10.0, 100.0, -100.0] {
        let xm = elementary(2, 0, 1) * x;
        let psi = evaluate_psi(module, &p.graded, &xm).map_err(|e| e.to_string())?.norm_squared();
        let target = (1.0 + x * x).powi(2);
        check((psi - target).abs() <= 1e-10 * target, || format!("|psi|^2 = {psi} at x = {x}"))?;
        let f = langlands_factorize(&p.graded, &exp_nilpotent(&xm).unwrap()).map_err(|e| e.to_string())?;
        let a = 1.0 + x * x;
        check((f.a_2rho - a).abs() <= 1e-10 * a, || format!("a^2rho = {} at x = {x}", f.a_2rho))?;
    }
    Ok("x in {0, +-1, +-10, +-100}".into())
}

fn setup_structure() -> Outcome {
    let mut min_lambda = f64::INFINITY;
    for (n, blocks, p) in nontrivial() {
        let (gs, module) = (&p.graded, p.module.as_ref().unwrap());
        let tag = format!("sl{n} {blocks:?}");
        let xi = module.xi_coords();
        let grades = gs.n_plus_grades();
        let maps: Vec<DMatrix<f64>> = (1..=gs.q())
            .map(|j| component_map_t(module, gs, j))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("{tag}: {e}"))?;
        for (j, t) in maps.iter().enumerate() {
            let lambda = injectivity_modulus(t);
            check(lambda > 1e-10, || format!("{tag}: lambda_{} = {lambda:.3e}", j + 1))?;
            min_lambda = min_lambda.min(lambda);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..1000 {
            let c = random_point(&mut rng, 3, i, gs.r(), 10.0);
            let psi = evaluate_psi_coeffs(module, c.as_slice());

            let d0 = (psi.component(0).unwrap() - module.grade_component(&xi, 0)).norm();
            check(d0 <= 1e-12, || format!("{tag}: |psi_0 - xi| = {d0:.3e}"))?;

            let x1: Vec<f64> = c.iter().zip(&grades).map(|(v, &g)| if g == 1 { *v } else { 0.0 }).collect();
            let expect1 = module.grade_component(&-module.apply(&x1, &xi), 1);
            let d1 = (psi.component(1).unwrap() - &expect1).norm();
            check(d1 <= 1e-10 * expect1.norm().max(1.0), || {
                format!("{tag}: |psi_1 + sigma(X_1) xi| = {d1:.3e}")
            })?;

            // replace X_j by an independent draw and compare psi_j - T_j X_j
            for j in 2..=gs.q() {
                let other = random_point(&mut rng, 1_000_003, i, gs.r(), 10.0);
                let moved: Vec<f64> = c
                    .iter()
                    .zip(other.iter())
                    .zip(&grades)
                    .map(|((a, b), &g)| if g == j { *b } else { *a })
                    .collect();
                let psi_moved = evaluate_psi_coeffs(module, &moved);
                let t = &maps[j - 1];
                let rest = psi.component(j).unwrap() - t * grade_coefficients(gs, c.as_slice(), j);
                let rest_moved = psi_moved.component(j).unwrap() - t * grade_coefficients(gs, &moved, j);
                let scale = rest.norm().max(psi.component(j).unwrap().norm()).max(1.0);
                let dj = (&rest - &rest_moved).norm();
                check(dj <= 1e-9 * scale, || format!("{tag}: grade {j} residual moved by {dj:.3e}"))?;
            }
        }
    }
    Ok(format!("11 cases x 1000 samples, min lambda_j = {min_lambda:.4}"))
}

fn factorial(q: usize) -> f64 {
    (1..=q).map(|k| k as f64).product()
}

fn certificate_soundness() -> Outcome {
    let mut worst_log = f64::INFINITY;
    for (n, blocks) in cases() {
        let tag = format!("sl{n} {blocks:?}");
        let p = Pipeline::sl(n, &blocks).map_err(|e| format!("{tag}: {e}"))?;
        let cert = p.certificate(Tolerances::default()).map_err(|e| format!("{tag}: {e}"))?;
        let Some(module) = p.module.as_ref() else {
            check(cert.is_trivial(), || format!("{tag}: expected trivial certificate"))?;
            continue;
        };
        let q = p.graded.q();
        check(cert.final_psi.m == 1.0 / factorial(q), || {
            format!("{tag}: m_q = {} but 1/q! = {}", cert.final_psi.m, 1.0 / factorial(q))
        })?;
        let dim = p.graded.r();
        let samples: Vec<DVector<f64>> = (0..10_000)
            .map(|i| {
                // radii log-uniform over [1e-2, 1e3]
                let t = (i % 100) as f64 / 99.0;
                sample_direction(17, i, dim) * 10f64.powf(-2.0 + 5.0 * t)
            })
            .collect();
        let report = check_certificate_coeffs(module, &cert, &samples).map_err(|e| format!("{tag}: {e}"))?;
        worst_log = worst_log.min(report.min_log_ratio);
        // the matrix entry point on a subset
        let mats: Vec<DMatrix<f64>> = samples[..50].iter().map(|c| p.graded.n_plus_element(c)).collect();
        check_certificate(module, &p.graded, &cert, &mats).map_err(|e| format!("{tag}: {e}"))?;
    }
    Ok(format!("14 cases, 10^4 samples each, min ln(|psi|^2/bound) = {worst_log:.3e}"))
}

fn scalar_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    for _ in 0..1_000_000 {
        let a = 10f64.powf(6.0 * rng.random::<f64>());
        let b = match rng.random_range(0..4) {
            0 => 0.0,
            _ => 10f64.powf(-6.0 + 12.0 * rng.random::<f64>()),
        };
        let m = 1.0 - rng.random::<f64>();
        if !trivial_scalar_bound(a, b, m).map_err(|e| e.to_string())? {
            violations += 1;
        }
    }
    check(violations == 0, || format!("{violations} violations"))?;
    Ok("10^6 triples, 0 violations".into())
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let mut q = a.qr().q();
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

fn random_in(rng: &mut ChaCha8Rng, n: usize, basis: &[DMatrix<f64>], radius: f64) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, n);
    let c = DVector::from_fn(basis.len(), |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let norm = c.norm().max(1e-300);
    for (ci, b) in c.iter().zip(basis) {
        x += b * (ci / norm * radius);
    }
    x
}

fn oracle_invariance() -> Outcome {
    let mut worst = 0.0f64;
    for (n, blocks) in cases() {
        let tag = format!("sl{n} {blocks:?}");
        let p = Pipeline::sl(n, &blocks).unwrap();
        let gs = &p.graded;
        let plus: Vec<DMatrix<f64>> = gs.frame()[gs.n_plus_range()].iter().map(|f| f.matrix.clone()).collect();
        let minus: Vec<DMatrix<f64>> = gs.frame()[gs.n_minus_range()].iter().map(|f| f.matrix.clone()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let rx = 2.0 * rng.random::<f64>();
            let x = random_in(&mut rng, n, &plus, rx);
            let t = rng.random::<f64>() * 2.0 - 1.0;
            let torus = DMatrix::from_diagonal(&gs.h().diagonal().map(|c| (c * t).exp()));
            let g = exp_nilpotent(&x).unwrap() * torus;
            let ry = 2.0 * rng.random::<f64>();
            let nbar = exp_nilpotent(&random_in(&mut rng, n, &minus, ry)).unwrap();
            let k = random_orthogonal(&mut rng, n);
            let base = langlands_factorize(gs, &g).map_err(|e| format!("{tag}: {e}"))?;
            for (label, h) in [("left n-bar", &nbar * &g), ("right k", &g * &k)] {
                let f = langlands_factorize(gs, &h).map_err(|e| format!("{tag}: {e}"))?;
                let d = log_discrepancy(f.log_a_2rho, base.log_a_2rho);
                check(d <= 1e-9, || format!("{tag} trial {trial}: {label} changed a^2rho by {d:.3e}"))?;
                worst = worst.max(d);
            }
        }
    }
    Ok(format!("14 cases x 100 trials, max rel. change {worst:.2e}"))
}

fn positivity_demo() -> Outcome {
    let demo = positivity_counterexample_demo();
    check(demo.strictly_positive_on_grid && demo.grid.min_value > 0.0, || {
        format!("grid minimum {}", demo.grid.min_value)
    })?;
    let at = demo
        .curve_points
        .iter()
        .find(|p| (p.t - 1e3).abs() < 1e-9)
        .ok_or("no curve point at t = 1e3")?;
    check(at.value <= 1e-5, || format!("f(1/t, t) = {} at t = 1e3", at.value))?;
    Ok(format!(
        "grid min {:.3e} > 0, f(1e-3, 1e3) = {:.1e}",
        demo.grid.min_value, at.value
    ))
}

fn determinism() -> Outcome {
    let config = VerifyConfig {
        seed: 42,
        samples: 64,
        radii: RadiiConfig {
            min_exp: 0.0,
            max_exp: 3.0,
            count: 8,
        },
        tolerances: Tolerances::default(),
    };
    let run = |blocks: &[usize]| {
        let p = Pipeline::sl(blocks.iter().sum(), blocks).unwrap();
        let cert = p.certificate(Tolerances::default()).unwrap();
        let report = sample_verify(p.module.as_ref(), &p.graded, &cert, &config);
        (cert.to_json(), report.to_json())
    };
    for blocks in [vec![1, 1], vec![3], vec![1, 1, 1], vec![1, 2, 1]] {
        let (c1, r1) = run(&blocks);
        let (c2, r2) = run(&blocks);
        check(c1.as_bytes() == c2.as_bytes(), || format!("{blocks:?}: certificate.json differs"))?;
        check(r1.as_bytes() == r2.as_bytes(), || format!("{blocks:?}: report.json differs"))?;
    }
    Ok("certificate and report JSON byte-identical across repeated runs".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("sl(2) closed form", sl2_closed_form),
        ("setup structure", setup_structure),
        ("certificate soundness", certificate_soundness),
        ("scalar lemma", scalar_lemma),
        ("oracle invariance", oracle_invariance),
        ("positivity demonstration", positivity_demo),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("acceptance {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
