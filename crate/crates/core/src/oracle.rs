//! Matrix-level `a_{P-bar}` through `g = n-bar m a k`.
//!
//! Writing `g = L Q` with `L` lower triangular (positive diagonal) and `Q`
//! orthogonal, `L` factors as a unipotent lower block-triangular part times a
//! block-diagonal part whose `i`-th block `D_i` equals `m_i t_i` with
//! `|det m_i| = 1`. Hence `t_i = det(D_i)^{1/n_i}` and
//! `a^{2 rho_P} = prod_{i<j} (t_i / t_j)^{n_i n_j}`. `L` is the Cholesky factor
//! of `g g^T`. Everything is accumulated in log space.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::CyclicModule;
use crate::parabolic::GradedStructure;
use crate::psi::evaluate_psi;

/// Largest admissible condition number of `g g^T`.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Allowed deviation of `det g` from 1.
pub const DET_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LanglandsFactors {
    /// Lower triangular with positive diagonal, `g = L Q`.
    pub l: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// Block scalars of the `A_P` component.
    pub t: Vec<f64>,
    pub log_t: Vec<f64>,
    /// `ln a^{2 rho_P}`.
    pub log_a_2rho: f64,
    /// `a^{2 rho_P}`; may overflow to infinity, use `log_a_2rho` instead.
    pub a_2rho: f64,
    /// Condition number of `g g^T`.
    pub condition: f64,
}

pub fn langlands_factorize(gs: &GradedStructure, g: &DMatrix<f64>) -> Result<LanglandsFactors> {
    gs.algebra().check_shape(g)?;
    let det = g.clone().determinant();
    if !((det - 1.0).abs() <= DET_TOL) {
        return Err(Error::NotUnimodular(det));
    }
    let sv = g.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::Conditioning {
            condition,
            limit: CONDITION_LIMIT,
        });
    }

    let ggt = g * g.transpose();
    let chol = ggt.cholesky().ok_or(Error::Conditioning {
        condition,
        limit: CONDITION_LIMIT,
    })?;
    let l = chol.unpack();
    let q = l
        .clone()
        .solve_lower_triangular(g)
        .ok_or(Error::Conditioning {
            condition,
            limit: CONDITION_LIMIT,
        })?;

    let mut log_t = Vec::with_capacity(gs.block_sizes().len());
    let mut offset = 0;
    for &ni in gs.block_sizes() {
        let log_det: f64 = (offset..offset + ni).map(|k| l[(k, k)].ln()).sum();
        log_t.push(log_det / ni as f64);
        offset += ni;
    }
    let log_a_2rho: f64 = gs
        .rho_terms()
        .iter()
        .map(|term| term.weight as f64 * (log_t[term.i] - log_t[term.j]))
        .sum();

    Ok(LanglandsFactors {
        l,
        q,
        t: log_t.iter().map(|x| x.exp()).collect(),
        log_t,
        log_a_2rho,
        a_2rho: log_a_2rho.exp(),
        condition,
    })
}

/// `exp(X)` for nilpotent `X` by the finite power series.
pub fn exp_nilpotent(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if x.ncols() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=n {
        term = &term * x / k as f64;
        result += &term;
    }
    let tail = (&term * x).norm();
    if tail > 1e-12 * x.norm().powi(n as i32).max(1.0) {
        return Err(Error::Domain("exp_nilpotent called on a non-nilpotent matrix".into()));
    }
    Ok(result)
}

/// `|psi(X)| / a^{2 rho_P}(exp X) - 1` in absolute value, computed in log space.
pub fn cross_check(module: &CyclicModule, gs: &GradedStructure, x: &DMatrix<f64>) -> Result<f64> {
    let psi = evaluate_psi(module, gs, x)?;
    let factors = langlands_factorize(gs, &exp_nilpotent(x)?)?;
    Ok(log_discrepancy(0.5 * psi.norm_squared().ln(), factors.log_a_2rho))
}

/// `|exp(lhs - rhs) - 1|` for logarithms of two positive quantities.
pub fn log_discrepancy(log_lhs: f64, log_rhs: f64) -> f64 {
    (log_lhs - log_rhs).exp_m1().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{elementary, MatrixLieAlgebra};
    use crate::parabolic::{grading_from_blocks, GRADE_CLUSTER_TOL};

    fn graded(n: usize, blocks: &[usize]) -> GradedStructure {
        let alg = MatrixLieAlgebra::special_linear(n).unwrap();
        grading_from_blocks(&alg, blocks, GRADE_CLUSTER_TOL).unwrap()
    }

    #[test]
    fn identity_factors() {
        let gs = graded(3, &[1, 2]);
        let f = langlands_factorize(&gs, &DMatrix::identity(3, 3)).unwrap();
        assert!(f.t.iter().all(|t| (t - 1.0).abs() < 1e-15));
        assert_eq!(f.a_2rho, 1.0);
        assert_eq!(f.q, DMatrix::identity(3, 3));
    }

    #[test]
    fn sl2_unipotent_closed_form() {
        let gs = graded(2, &[1, 1]);
        for x in [0.0, 1.0, -1.0, 10.0, -10.0, 100.0, -100.0] {
            let g = exp_nilpotent(&(elementary(2, 0, 1) * x)).unwrap();
            let f = langlands_factorize(&gs, &g).unwrap();
            let target = 1.0 + x * x;
            assert!((f.a_2rho - target).abs() <= 1e-10 * target, "x = {x}");
            assert!((f.t[0] - target.sqrt()).abs() <= 1e-10 * target);
            assert!((&f.l * &f.q - &g).norm() < 1e-10 * g.norm());
        }
    }

    #[test]
    fn torus_element() {
        let gs = graded(3, &[1, 1, 1]);
        let t = 0.7;
        let g = DMatrix::from_diagonal(&gs.h().diagonal().map(|c| (c * t).exp()));
        let f = langlands_factorize(&gs, &g).unwrap();
        let expected = 2.0 * gs.rho_value() * t;
        assert!((f.log_a_2rho - expected).abs() < 1e-13);
        assert!((f.q.clone() - DMatrix::identity(3, 3)).norm() < 1e-14);
        let prod: f64 = f.t.iter().zip(gs.block_sizes()).map(|(t, &n)| t.powi(n as i32)).product();
        assert!((prod - 1.0).abs() < 1e-10);
    }

    #[test]
    fn block_lower_triangular_has_identity_q() {
        let gs = graded(3, &[2, 1]);
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 1.0, 0.5, 0.0, 3.0, -1.0, 1.0]);
        let f = langlands_factorize(&gs, &g).unwrap();
        assert!((f.q - DMatrix::identity(3, 3)).norm() < 1e-14);
        // t_1 = det(D_1)^{1/2} = 1, t_2 = 1
        assert!(f.log_a_2rho.abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let gs = graded(2, &[1, 1]);
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(matches!(langlands_factorize(&gs, &g), Err(Error::NotUnimodular(_))));
        let g = DMatrix::from_row_slice(2, 2, &[1e7, 0.0, 0.0, 1e-7]);
        assert!(matches!(langlands_factorize(&gs, &g), Err(Error::Conditioning { .. })));
        assert!(exp_nilpotent(&DMatrix::identity(2, 2)).is_err());
    }
}
