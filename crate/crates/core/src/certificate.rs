//! Constructive lower bound `|psi(X)|^2 >= C (1 + |X|^2)^m`.
//!
//! Write `w = X = w_1 + ... + w_q` (grade components), `phi_r = sum_{j<=r} psi_j`,
//! `a = 1 + |w_{<r}|^2`, `b = |w_r|^2`. The chain keeps
//! `|phi_r(w)|^2 >= C_r (1 + |w_{<=r}|^2)^{m_r}`:
//!
//! * `r = 1`: `|phi_1|^2 = 1 + |T_1 w_1|^2 >= min(1, lambda_1^2)(1 + b)`, `m_1 = 1`.
//! * `r >= 2`, `|T_r w_r| > 2|u_r|`: the grade-`r` part has norm at least
//!   `lambda_r |w_r| / 2`, so `|phi_r|^2 >= L (a^{m} + b)` with
//!   `L = min(C_{r-1}, lambda_r^2 / 4)`, and `a^m + b >= (a + b)^m / 2` gives
//!   `C_in = L / 2` at exponent `m_{r-1}`.
//! * `r >= 2`, `|T_r w_r| <= 2|u_r|`: `|u_r| <= M_r a^{r/2}` forces
//!   `b <= (2 M_r / lambda_r)^2 a^r`, hence `a + b <= K_r a^{e_r}` with
//!   `K_r = 1 + (2 M_r / lambda_r)^2`, `e_r = max(d_r, 1)`. Dropping the grade-`r`
//!   term, `|phi_r|^2 >= C_{r-1} a^{m_{r-1}} >= C_out (a + b)^{m_{r-1}/e_r}` with
//!   `C_out = C_{r-1} K_r^{-m_{r-1}/e_r}`.
//! * `m_r = m_{r-1} / e_r`, `C_r = min(C_in, C_out)`; both branches hold at
//!   the smaller exponent because the base is at least 1.
//!
//! Grades above `q` only add orthogonal norm, so `|psi|^2 >= C_q (1+|X|^2)^{m_q}`.
//! Since `|psi(X)| = a_{P-bar}(exp X)^{2 rho_P}`, the group form is
//! `a^{rho_P} >= C_q^{1/4} (1 + |X|^2)^{m_q / 4}`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{structure_hash, AlgebraSpec, Tolerances};
use crate::error::{Error, Result};
use crate::exterior::{CyclicModule, CLOSURE_TOL};
use crate::lie::{FormKind, InvolutionKind};
use crate::parabolic::GradedStructure;
use crate::psi::{component_map_t, evaluate_psi_coeffs, injectivity_modulus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    NormativeCorrected,
    /// Reserved for the uncorrected chain; not produced.
    Uncorrected,
}

/// One level of the induction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub r: usize,
    pub lambda_r: f64,
    pub d_r: usize,
    #[serde(rename = "M_r")]
    pub poly_bound: f64,
    pub e_r: usize,
    #[serde(rename = "K_r")]
    pub k_r: Option<f64>,
    #[serde(rename = "C_in")]
    pub c_in: Option<f64>,
    #[serde(rename = "C_out")]
    pub c_out: Option<f64>,
    #[serde(rename = "C_r")]
    pub c_r: f64,
    pub m_r: f64,
    /// `m_r = 1 / m_den`.
    pub m_den: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    #[serde(rename = "C")]
    pub c: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub crate_version: String,
    pub config_hash: String,
    pub trivial: bool,
    pub q: usize,
    pub r: usize,
    pub rho_h: f64,
    pub dim_z: usize,
    pub top_grade: usize,
    pub form: FormKind,
    pub involution: InvolutionKind,
    pub closure_tol: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCertificate {
    pub algebra: AlgebraSpec,
    pub blocks: Vec<usize>,
    pub levels: Vec<LevelRecord>,
    pub s_bound: f64,
    /// `|psi(X)|^2 >= C (1 + |X|^2)^m`.
    pub final_psi: Bound,
    /// `a_{P-bar}(exp X)^{rho_P} >= C (1 + |X|^2)^m`.
    pub final_hc: Bound,
    pub chain_kind: ChainKind,
    pub tolerances: Tolerances,
    pub build_info: BuildInfo,
}

impl LowerBoundCertificate {
    /// Denominator of the final `psi` exponent (`m_q = 1 / den`).
    pub fn m_denominator(&self) -> u64 {
        self.levels.last().map_or(1, |l| l.m_den)
    }

    pub fn is_trivial(&self) -> bool {
        self.build_info.trivial
    }

    /// `C (1 + |X|^2)^m` for the `psi` form.
    pub fn psi_bound(&self, norm_sqr: f64) -> f64 {
        self.final_psi.c * (1.0 + norm_sqr).powf(self.final_psi.m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// `a^m + b >= (a + b)^m / 2` for `a >= 1`, `b >= 0`, `0 < m <= 1`.
pub fn trivial_scalar_bound(a: f64, b: f64, m: f64) -> Result<bool> {
    if !(a >= 1.0 && a.is_finite()) {
        return Err(Error::Domain(format!("a = {a} must be >= 1")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("b = {b} must be >= 0")));
    }
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::Domain(format!("m = {m} must lie in (0, 1]")));
    }
    Ok(a.powf(m) + b >= 0.5 * (a + b).powf(m))
}

/// Spectral norm of `sigma(b_i)` on `Z`. The generator maps `Z_j` into
/// `Z_{j+g}` for disjoint source and target blocks, so the norm is the
/// largest block norm.
pub fn generator_norm(module: &CyclicModule, i: usize) -> f64 {
    let dense = module.sigma_dense(i);
    let g = module.generator_grades()[i];
    let p = module.top_grade();
    (0..=p)
        .filter(|j| j + g <= p)
        .map(|j| {
            let src = module.block(j);
            let dst = module.block(j + g);
            let sub = dense.view((dst.start, src.start), (dst.len(), src.len())).clone_owned();
            sub.singular_values().iter().copied().fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `s` with `|sigma(X)|_op <= s |X|` on `n_P`:
/// `s = sqrt(sum_i |sigma(b_i)|^2)` over the orthonormal `n_P` frame.
pub fn sigma_norm_bound(module: &CyclicModule) -> f64 {
    (0..module.sigma_gens().len())
        .map(|i| generator_norm(module, i).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `M_r = sum_{k=2}^{r} s^k / k!`, bounding `|u_r(w)| <= M_r (1 + |w|^2)^{r/2}`.
pub fn polynomial_bound_m(r: usize, s: f64) -> f64 {
    let mut term = s; // s^1 / 1!
    let mut total = 0.0;
    for k in 2..=r {
        term *= s / k as f64;
        total += term;
    }
    total
}

fn build_info(gs: &GradedStructure, module: Option<&CyclicModule>, warnings: Vec<String>) -> BuildInfo {
    let alg = gs.algebra();
    BuildInfo {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: structure_hash(&algebra_spec(gs), gs.block_sizes()),
        trivial: gs.is_trivial(),
        q: gs.q(),
        r: gs.r(),
        rho_h: gs.rho_value(),
        dim_z: module.map_or(1, |m| m.dim()),
        top_grade: module.map_or(0, |m| m.top_grade()),
        form: alg.form_kind(),
        involution: alg.involution_kind(),
        closure_tol: CLOSURE_TOL,
        warnings,
    }
}

pub fn algebra_spec(gs: &GradedStructure) -> AlgebraSpec {
    AlgebraSpec {
        family: gs.algebra().family(),
        n: gs.algebra().n(),
    }
}

/// Certificate for `P = G`: `n_P = 0`, so the only point is `X = 0` where
/// `|psi|^2 = 1`.
pub fn trivial_certificate(gs: &GradedStructure, tolerances: Tolerances) -> LowerBoundCertificate {
    let warning = "trivial parabolic (single block): n_P = 0 and the bound is vacuous".to_string();
    LowerBoundCertificate {
        algebra: algebra_spec(gs),
        blocks: gs.block_sizes().to_vec(),
        levels: Vec::new(),
        s_bound: 0.0,
        final_psi: Bound { c: 1.0, m: 1.0 },
        final_hc: Bound { c: 1.0, m: 0.25 },
        chain_kind: ChainKind::NormativeCorrected,
        tolerances,
        build_info: build_info(gs, None, vec![warning]),
    }
}

/// Run the induction over the grades `1..=q`.
pub fn build_certificate(
    module: &CyclicModule,
    gs: &GradedStructure,
    tolerances: Tolerances,
) -> Result<LowerBoundCertificate> {
    let q = gs.q();
    if q == 0 {
        return Err(Error::TrivialModule);
    }
    let s = sigma_norm_bound(module);
    let mut levels: Vec<LevelRecord> = Vec::with_capacity(q);
    for r in 1..=q {
        let t = component_map_t(module, gs, r)?;
        let lambda = injectivity_modulus(&t);
        if !(lambda > tolerances.svd_floor) {
            return Err(Error::InjectivityViolation {
                grade: r,
                lambda,
                floor: tolerances.svd_floor,
            });
        }
        let record = match levels.last() {
            None => LevelRecord {
                r,
                lambda_r: lambda,
                d_r: 1,
                poly_bound: 0.0,
                e_r: 1,
                k_r: None,
                c_in: None,
                c_out: None,
                c_r: 1f64.min(lambda * lambda),
                m_r: 1.0,
                m_den: 1,
            },
            Some(prev) => {
                let d = r;
                let e = d.max(1);
                let poly = polynomial_bound_m(r, s);
                let k = 1.0 + (2.0 * poly / lambda).powi(2);
                let c_in = 0.5 * prev.c_r.min(lambda * lambda / 4.0);
                let c_out = prev.c_r * k.powf(-prev.m_r / e as f64);
                let m_den = prev.m_den * e as u64;
                LevelRecord {
                    r,
                    lambda_r: lambda,
                    d_r: d,
                    poly_bound: poly,
                    e_r: e,
                    k_r: Some(k),
                    c_in: Some(c_in),
                    c_out: Some(c_out),
                    c_r: c_in.min(c_out),
                    m_r: 1.0 / m_den as f64,
                    m_den,
                }
            }
        };
        levels.push(record);
    }

    let last = levels.last().expect("q >= 1");
    let final_psi = Bound {
        c: last.c_r,
        m: last.m_r,
    };
    let final_hc = Bound {
        c: last.c_r.sqrt().sqrt(),
        m: last.m_r / 4.0,
    };
    Ok(LowerBoundCertificate {
        algebra: algebra_spec(gs),
        blocks: gs.block_sizes().to_vec(),
        levels,
        s_bound: s,
        final_psi,
        final_hc,
        chain_kind: ChainKind::NormativeCorrected,
        tolerances,
        build_info: build_info(gs, Some(module), Vec::new()),
    })
}

/// Outcome of evaluating the certificate at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleCheck {
    pub psi_norm_sqr: f64,
    pub bound: f64,
    pub slack: f64,
    /// `ln(|psi|^2 / bound)`.
    pub log_ratio: f64,
    pub violated: bool,
}

pub fn check_sample(module: &CyclicModule, cert: &LowerBoundCertificate, coeffs: &[f64]) -> SampleCheck {
    let norm_sqr: f64 = coeffs.iter().map(|c| c * c).sum();
    let psi = evaluate_psi_coeffs(module, coeffs).norm_squared();
    let bound = cert.psi_bound(norm_sqr);
    let slack = psi - bound;
    SampleCheck {
        psi_norm_sqr: psi,
        bound,
        slack,
        log_ratio: psi.ln() - bound.ln(),
        violated: slack < -cert.tolerances.cert_slack * psi,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    pub samples: usize,
    /// Minimum of `|psi|^2 - C (1 + |X|^2)^m`.
    pub min_slack: f64,
    /// Minimum of `ln(|psi|^2 / bound)`, attained at `worst_index`.
    pub min_log_ratio: f64,
    pub worst_index: usize,
    pub worst_coefficients: Vec<f64>,
}

/// Check the certificate on samples given as `n_P` frame coefficients.
pub fn check_certificate_coeffs(
    module: &CyclicModule,
    cert: &LowerBoundCertificate,
    samples: &[DVector<f64>],
) -> Result<SlackReport> {
    let checks: Vec<SampleCheck> = samples
        .par_iter()
        .map(|c| check_sample(module, cert, c.as_slice()))
        .collect();
    let mut report = SlackReport {
        samples: samples.len(),
        min_slack: f64::INFINITY,
        min_log_ratio: f64::INFINITY,
        worst_index: 0,
        worst_coefficients: Vec::new(),
    };
    for (index, check) in checks.iter().enumerate() {
        if check.violated {
            return Err(Error::CertificateUnsound {
                index,
                coefficients: samples[index].iter().copied().collect(),
                psi_norm_sqr: check.psi_norm_sqr,
                bound: check.bound,
            });
        }
        report.min_slack = report.min_slack.min(check.slack);
        if check.log_ratio < report.min_log_ratio {
            report.min_log_ratio = check.log_ratio;
            report.worst_index = index;
        }
    }
    if let Some(worst) = samples.get(report.worst_index) {
        report.worst_coefficients = worst.iter().copied().collect();
    }
    Ok(report)
}

/// Check the certificate on samples `X` in `n_P`.
pub fn check_certificate(
    module: &CyclicModule,
    gs: &GradedStructure,
    cert: &LowerBoundCertificate,
    samples: &[DMatrix<f64>],
) -> Result<SlackReport> {
    let coeffs: Vec<DVector<f64>> = samples
        .iter()
        .map(|x| gs.n_plus_coefficients(x))
        .collect::<Result<_>>()?;
    check_certificate_coeffs(module, cert, &coeffs)
}
