//! Sampling harness: certificate soundness, oracle agreement, the empirical
//! growth exponent, and the positivity-without-lower-bound demonstration.
//!
//! Directions are unit Gaussian vectors in orthonormal `n_P` coordinates. The
//! direction with index `i` draws from a ChaCha8 stream `i` seeded by the
//! master seed, so results do not depend on evaluation order; aggregation
//! runs sequentially over the index-ordered results.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{check_sample, LowerBoundCertificate};
use crate::config::{AlgebraSpec, RadiiConfig, RunConfig, Tolerances};
use crate::exterior::CyclicModule;
use crate::oracle::{exp_nilpotent, langlands_factorize, log_discrepancy};
use crate::parabolic::GradedStructure;
use crate::psi::evaluate_psi_coeffs;

/// At most this many violation witnesses are serialized.
pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Number of sampled directions.
    pub samples: usize,
    pub radii: RadiiConfig,
    pub tolerances: Tolerances,
}

impl From<&RunConfig> for VerifyConfig {
    fn from(c: &RunConfig) -> Self {
        Self {
            seed: c.seed,
            samples: c.samples,
            radii: c.radii,
            tolerances: c.tolerances,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub direction: usize,
    pub radius: f64,
    pub coefficients: Vec<f64>,
    pub psi_norm_sqr: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    pub count: usize,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub radius: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: VerifyConfig,
    pub algebra: AlgebraSpec,
    pub blocks: Vec<usize>,
    pub trivial: bool,
    pub evaluated: usize,
    pub oracle_max_discrepancy: f64,
    pub oracle_compared: usize,
    /// Samples where `exp X` was too ill-conditioned for the factorization to
    /// resolve `oracle_rel` (`eps * cond(g g^T) > oracle_rel`).
    pub oracle_skipped: usize,
    pub certificate_min_slack: Option<f64>,
    /// Minimum of `ln(|psi|^2 / (C (1+|X|^2)^m))`.
    pub certificate_min_log_ratio: Option<f64>,
    pub violations: Violations,
    pub empirical_m: Option<f64>,
    pub empirical_by_radius: Vec<RadiusEstimate>,
    pub certified_m: f64,
    pub demo_results: Option<DemoTrace>,
}

impl VerificationReport {
    /// `violations = 0` and the oracle agreed within tolerance.
    pub fn passed(&self) -> bool {
        self.violations.count == 0 && self.oracle_max_discrepancy <= self.config.tolerances.oracle_rel
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Unit direction number `index` in `dim` coordinates.
pub fn sample_direction(seed: u64, index: usize, dim: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    loop {
        let v: DVector<f64> = DVector::from_fn(dim, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        });
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PointResult {
    psi_norm_sqr: f64,
    bound: f64,
    slack: f64,
    log_ratio: f64,
    violated: bool,
    oracle: Option<f64>,
}

fn evaluate_direction(
    module: &CyclicModule,
    gs: &GradedStructure,
    cert: &LowerBoundCertificate,
    direction: &DVector<f64>,
    radii: &[f64],
    oracle_rel: f64,
) -> Vec<PointResult> {
    radii
        .iter()
        .map(|&radius| {
            let coeffs = direction * radius;
            let check = check_sample(module, cert, coeffs.as_slice());
            let x = gs.n_plus_element(&coeffs);
            let oracle = exp_nilpotent(&x)
                .and_then(|g| langlands_factorize(gs, &g))
                .ok()
                // Cholesky of g g^T loses about eps * cond digits
                .filter(|f| f64::EPSILON * f.condition <= oracle_rel)
                .map(|f| log_discrepancy(0.5 * check.psi_norm_sqr.ln(), f.log_a_2rho));
            PointResult {
                psi_norm_sqr: check.psi_norm_sqr,
                bound: check.bound,
                slack: check.slack,
                log_ratio: check.log_ratio,
                violated: check.violated,
                oracle,
            }
        })
        .collect()
}

fn exponent_at(psi_norm_sqr: f64, radius: f64) -> f64 {
    psi_norm_sqr.ln() / (radius * radius).ln_1p()
}

fn trivial_report(gs: &GradedStructure, cert: &LowerBoundCertificate, config: &VerifyConfig) -> VerificationReport {
    VerificationReport {
        config: config.clone(),
        algebra: cert.algebra,
        blocks: gs.block_sizes().to_vec(),
        trivial: true,
        evaluated: 0,
        oracle_max_discrepancy: 0.0,
        oracle_compared: 0,
        oracle_skipped: 0,
        certificate_min_slack: None,
        certificate_min_log_ratio: None,
        violations: Violations {
            count: 0,
            witnesses: Vec::new(),
        },
        empirical_m: None,
        empirical_by_radius: Vec::new(),
        certified_m: cert.final_psi.m,
        demo_results: None,
    }
}

/// Check the certificate and the oracle over `samples` directions times the
/// configured radii. A trivial parabolic skips sampling.
pub fn sample_verify(
    module: Option<&CyclicModule>,
    gs: &GradedStructure,
    cert: &LowerBoundCertificate,
    config: &VerifyConfig,
) -> VerificationReport {
    let Some(module) = module else {
        return trivial_report(gs, cert, config);
    };
    let radii = config.radii.values();
    let dim = gs.r();
    let per_direction: Vec<(DVector<f64>, Vec<PointResult>)> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let u = sample_direction(config.seed, i, dim);
            let results = evaluate_direction(module, gs, cert, &u, &radii, config.tolerances.oracle_rel);
            (u, results)
        })
        .collect();

    let mut report = trivial_report(gs, cert, config);
    report.trivial = false;
    let mut min_slack = f64::INFINITY;
    let mut min_log_ratio = f64::INFINITY;
    let mut per_radius = vec![f64::INFINITY; radii.len()];
    for (i, (u, results)) in per_direction.iter().enumerate() {
        for (k, (res, &radius)) in results.iter().zip(&radii).enumerate() {
            report.evaluated += 1;
            min_slack = min_slack.min(res.slack);
            min_log_ratio = min_log_ratio.min(res.log_ratio);
            per_radius[k] = per_radius[k].min(exponent_at(res.psi_norm_sqr, radius));
            match res.oracle {
                Some(d) => {
                    report.oracle_compared += 1;
                    report.oracle_max_discrepancy = report.oracle_max_discrepancy.max(d);
                }
                None => report.oracle_skipped += 1,
            }
            if res.violated {
                report.violations.count += 1;
                if report.violations.witnesses.len() < MAX_WITNESSES {
                    report.violations.witnesses.push(Witness {
                        direction: i,
                        radius,
                        coefficients: (u * radius).iter().copied().collect(),
                        psi_norm_sqr: res.psi_norm_sqr,
                        bound: res.bound,
                    });
                }
            }
        }
    }
    report.certificate_min_slack = Some(min_slack);
    report.certificate_min_log_ratio = Some(min_log_ratio);
    report.empirical_by_radius = radii
        .iter()
        .zip(&per_radius)
        .map(|(&radius, &exponent)| RadiusEstimate { radius, exponent })
        .collect();
    report.empirical_m = per_radius.last().copied();
    report
}

/// Smallest `ln |psi(R u)|^2 / ln(1 + R^2)` over the sampled directions `u`
/// at the largest configured radius `R`.
pub fn empirical_exponent(module: &CyclicModule, gs: &GradedStructure, config: &VerifyConfig) -> f64 {
    let radius = config.radii.values().last().copied().unwrap_or(1.0);
    let dim = gs.r();
    let values: Vec<f64> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let u = sample_direction(config.seed, i, dim) * radius;
            exponent_at(evaluate_psi_coeffs(module, u.as_slice()).norm_squared(), radius)
        })
        .collect();
    values.into_iter().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub norm: f64,
    pub value: f64,
    /// `ln f / ln(1 + |(x, y)|^2)`.
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub min_value: f64,
    pub argmin: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoTrace {
    pub polynomial: String,
    pub curve: String,
    pub value_at_one_one: f64,
    pub curve_points: Vec<DemoPoint>,
    pub grid: GridSummary,
    pub strictly_positive_on_grid: bool,
    pub decays_along_curve: bool,
}

/// `f(x, y) = x^2 + (1 - x y)^2`: positive everywhere (it vanishes only if
/// `x = 0` and `x y = 1`), yet `f(1/t, t) = 1/t^2 -> 0`.
pub fn demo_polynomial(x: f64, y: f64) -> f64 {
    let w = 1.0 - x * y;
    x * x + w * w
}

/// Evaluate [`demo_polynomial`] along `(1/t, t)` and on a grid over
/// `[-10, 10]^2`: positivity alone admits no bound `f >= C (1 + |x|^2)^m`
/// with `m > 0`.
pub fn positivity_counterexample_demo() -> DemoTrace {
    let curve_points: Vec<DemoPoint> = (0..=8)
        .map(|k| {
            let t = 10f64.powf(k as f64 * 0.5);
            let (x, y) = (1.0 / t, t);
            let value = demo_polynomial(x, y);
            let norm = x.hypot(y);
            DemoPoint {
                t,
                x,
                y,
                norm,
                value,
                exponent: value.ln() / (norm * norm).ln_1p(),
            }
        })
        .collect();

    let (lo, hi, steps) = (-10.0, 10.0, 400);
    let h = (hi - lo) / steps as f64;
    let mut min_value = f64::INFINITY;
    let mut argmin = (0.0, 0.0);
    for i in 0..=steps {
        for j in 0..=steps {
            let (x, y) = (lo + i as f64 * h, lo + j as f64 * h);
            let v = demo_polynomial(x, y);
            if v < min_value {
                min_value = v;
                argmin = (x, y);
            }
        }
    }
    let decays_along_curve = curve_points.windows(2).all(|w| w[1].value < w[0].value);
    DemoTrace {
        polynomial: "x^2 + (1 - x*y)^2".into(),
        curve: "(1/t, t)".into(),
        value_at_one_one: demo_polynomial(1.0, 1.0),
        curve_points,
        grid: GridSummary {
            lo,
            hi,
            steps,
            min_value,
            argmin,
        },
        strictly_positive_on_grid: min_value > 0.0,
        decays_along_curve,
    }
}

/// Replay a serialized witness: `Some(true)` if it still violates `cert`.
pub fn replay_witness(module: &CyclicModule, cert: &LowerBoundCertificate, witness: &Witness) -> bool {
    check_sample(module, cert, &witness.coefficients).violated
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Pipeline;

    fn small_config(samples: usize) -> VerifyConfig {
        VerifyConfig {
            seed: 7,
            samples,
            radii: RadiiConfig {
                min_exp: 0.0,
                max_exp: 3.0,
                count: 7,
            },
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn directions_are_unit_and_seeded() {
        let a = sample_direction(1, 3, 5);
        let b = sample_direction(1, 3, 5);
        let c = sample_direction(1, 4, 5);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sl2_report() {
        let p = Pipeline::sl(2, &[1, 1]).unwrap();
        let cert = p.certificate(Tolerances::default()).unwrap();
        let cfg = small_config(10);
        let report = sample_verify(p.module.as_ref(), &p.graded, &cert, &cfg);
        assert_eq!(report.violations.count, 0);
        assert_eq!(report.evaluated, 70);
        assert!(report.passed());
        // |psi|^2 = (1 + R^2)^2 exactly
        let m = report.empirical_m.unwrap();
        assert!((m - 2.0).abs() < 1e-9);
        assert_eq!(report.certified_m, 1.0);
        let direct = empirical_exponent(p.module.as_ref().unwrap(), &p.graded, &cfg);
        assert_eq!(direct, m);
    }

    #[test]
    fn trivial_report_skips() {
        let p = Pipeline::sl(3, &[3]).unwrap();
        let cert = p.certificate(Tolerances::default()).unwrap();
        let report = sample_verify(None, &p.graded, &cert, &small_config(5));
        assert!(report.trivial);
        assert_eq!(report.evaluated, 0);
        assert!(report.passed());
    }

    #[test]
    fn witnesses_replay() {
        let p = Pipeline::sl(2, &[1, 1]).unwrap();
        let mut cert = p.certificate(Tolerances::default()).unwrap();
        cert.final_psi.m = 5.0;
        let report = sample_verify(p.module.as_ref(), &p.graded, &cert, &small_config(4));
        assert!(report.violations.count > 0);
        assert!(!report.passed());
        for w in &report.violations.witnesses {
            assert!(replay_witness(p.module.as_ref().unwrap(), &cert, w));
        }
    }

    #[test]
    fn demo_properties() {
        let d = positivity_counterexample_demo();
        assert_eq!(d.value_at_one_one, 1.0);
        assert!(d.strictly_positive_on_grid);
        assert!(d.grid.min_value > 0.0);
        let at_1e3 = d.curve_points.iter().find(|p| (p.t - 1e3).abs() < 1e-6).unwrap();
        assert!(at_1e3.value <= 1e-5);
        assert!(at_1e3.norm >= 1e3);
        assert!(d.decays_along_curve);
        assert!(d.curve_points.last().unwrap().exponent < 0.0);
    }
}
