//! `psi(X) = sigma(exp(-X)) xi` on `n_P`, its grade components, the linear
//! maps `T_j : X_j -> -sigma(X_j) xi` and the lower-grade residuals `u_j`.
//!
//! `sigma(X)` raises the grade by at least one, so the exponential series is a
//! finite sum: `psi(X) = sum_{k=0}^{p} (-1)^k / k! sigma(X)^k xi`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exterior::CyclicModule;
use crate::parabolic::GradedStructure;

/// `psi(X)` in `Z` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiValue {
    pub coords: DVector<f64>,
    /// Block-local coordinates of `psi(X)_j` for `j = 0..=p`.
    pub components: Vec<DVector<f64>>,
}

impl PsiValue {
    pub fn norm_squared(&self) -> f64 {
        self.coords.norm_squared()
    }

    pub fn component(&self, j: usize) -> Option<&DVector<f64>> {
        self.components.get(j)
    }
}

/// `sum_k (-1)^k / k! sigma(X)^k xi` for `X = sum_i coeffs[i] b_i`, summed
/// over `k` in `k_range` only.
fn series(module: &CyclicModule, coeffs: &[f64], k_min: usize, k_max: usize) -> DVector<f64> {
    let mut term = module.xi_coords();
    let mut acc = DVector::zeros(module.dim());
    if k_min == 0 {
        acc += &term;
    }
    for k in 1..=k_max {
        // term is supported in grades >= k - 1
        let mut next = DVector::zeros(module.dim());
        module.apply_add_from_grade(coeffs, &term, &mut next, k - 1);
        term = next / -(k as f64);
        if k >= k_min {
            acc += &term;
        }
        if term.iter().all(|x| *x == 0.0) {
            break;
        }
    }
    acc
}

/// Evaluate `psi` at `n_P` frame coefficients.
pub fn evaluate_psi_coeffs(module: &CyclicModule, coeffs: &[f64]) -> PsiValue {
    let coords = series(module, coeffs, 0, module.top_grade());
    let components = (0..=module.top_grade())
        .map(|j| module.grade_component(&coords, j))
        .collect();
    PsiValue { coords, components }
}

/// Evaluate `psi(X)`; `X` must lie in `n_P`.
pub fn evaluate_psi(module: &CyclicModule, gs: &GradedStructure, x: &DMatrix<f64>) -> Result<PsiValue> {
    let coeffs = gs.n_plus_coefficients(x)?;
    Ok(evaluate_psi_coeffs(module, coeffs.as_slice()))
}

/// `n_P` frame positions belonging to grade `j`.
fn grade_positions(gs: &GradedStructure, j: usize) -> Vec<usize> {
    gs.n_plus_grades()
        .iter()
        .enumerate()
        .filter(|(_, g)| **g == j)
        .map(|(i, _)| i)
        .collect()
}

/// Matrix of `X_j -> -sigma(X_j) xi` from the orthonormal basis of `g_j` to the
/// orthonormal basis of `Z_j`.
pub fn component_map_t(module: &CyclicModule, gs: &GradedStructure, j: usize) -> Result<DMatrix<f64>> {
    if j == 0 || j > gs.q() {
        return Err(Error::GradeOutOfRange { grade: j, max: gs.q() });
    }
    let positions = grade_positions(gs, j);
    let xi = module.xi_coords();
    let block = module.block(j);
    let mut t = DMatrix::zeros(block.len(), positions.len());
    for (col, &i) in positions.iter().enumerate() {
        let mut unit = vec![0.0; gs.r()];
        unit[i] = 1.0;
        let image = -module.apply(&unit, &xi);
        let outside: f64 = image
            .iter()
            .enumerate()
            .filter(|(idx, _)| !block.contains(idx))
            .map(|(_, v)| v * v)
            .sum::<f64>()
            .sqrt();
        if outside > 1e-10 {
            return Err(Error::Internal {
                stage: "psi",
                detail: format!("T_{j} column {col} leaves Z_{j} (residual {outside:.3e})"),
            });
        }
        for (row, idx) in block.clone().enumerate() {
            t[(row, col)] = image[idx];
        }
    }
    Ok(t)
}

/// Smallest singular value of `T_j` (zero if `dim g_j > dim Z_j`).
pub fn injectivity_modulus(t: &DMatrix<f64>) -> f64 {
    if t.ncols() == 0 {
        return f64::INFINITY;
    }
    if t.nrows() < t.ncols() {
        return 0.0;
    }
    t.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Split `n_P` coefficients into the part of grade `< j` (others zeroed).
pub fn lower_part(gs: &GradedStructure, coeffs: &[f64], j: usize) -> Vec<f64> {
    gs.n_plus_grades()
        .iter()
        .zip(coeffs)
        .map(|(&g, &c)| if g < j { c } else { 0.0 })
        .collect()
}

/// `u_j(X_1, ..., X_{j-1}) = sum_{k=2}^{j} (-1)^k/k! (sigma(X_{<j})^k xi)_j`,
/// block-local in `Z_j`.
pub fn residual_u_coeffs(
    module: &CyclicModule,
    gs: &GradedStructure,
    j: usize,
    coeffs: &[f64],
) -> Result<DVector<f64>> {
    if j < 2 || j > gs.q() {
        return Err(Error::GradeOutOfRange { grade: j, max: gs.q() });
    }
    let lower = lower_part(gs, coeffs, j);
    let sum = series(module, &lower, 2, j);
    Ok(module.grade_component(&sum, j))
}

pub fn residual_u(
    module: &CyclicModule,
    gs: &GradedStructure,
    j: usize,
    x: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let coeffs = gs.n_plus_coefficients(x)?;
    residual_u_coeffs(module, gs, j, coeffs.as_slice())
}

/// Coefficients of grade `j` only, as a `g_j`-local vector.
pub fn grade_coefficients(gs: &GradedStructure, coeffs: &[f64], j: usize) -> DVector<f64> {
    let positions = grade_positions(gs, j);
    DVector::from_iterator(positions.len(), positions.iter().map(|&i| coeffs[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::build_cyclic_module;
    use crate::lie::{elementary, MatrixLieAlgebra};
    use crate::parabolic::{grading_from_blocks, GRADE_CLUSTER_TOL};

    fn pipeline(n: usize, blocks: &[usize]) -> (GradedStructure, CyclicModule) {
        let alg = MatrixLieAlgebra::special_linear(n).unwrap();
        let gs = grading_from_blocks(&alg, blocks, GRADE_CLUSTER_TOL).unwrap();
        let m = build_cyclic_module(&gs, GRADE_CLUSTER_TOL).unwrap();
        (gs, m)
    }

    #[test]
    fn psi_at_zero_is_xi() {
        let (gs, m) = pipeline(3, &[1, 1, 1]);
        let psi = evaluate_psi(&m, &gs, &DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(psi.coords, m.xi_coords());
    }

    #[test]
    fn sl2_closed_form() {
        let (gs, m) = pipeline(2, &[1, 1]);
        for x in [0.0, 1.0, -1.0, 10.0, -10.0, 100.0, -100.0] {
            let psi = evaluate_psi(&m, &gs, &(elementary(2, 0, 1) * x)).unwrap();
            // f - x h - x^2 e with |f| = |e| = 1, |h| = sqrt 2
            let expected = [1.0, 2.0 * x * x, x.powi(4)];
            for (j, e) in expected.iter().enumerate() {
                let c = psi.component(j).unwrap().norm_squared();
                assert!((c - e).abs() <= 1e-12 * e.max(1.0), "grade {j} at x={x}");
            }
            let target = (1.0 + x * x).powi(2);
            assert!((psi.norm_squared() - target).abs() <= 1e-10 * target);
        }
    }

    #[test]
    fn psi_rejects_outside_nilradical() {
        let (gs, m) = pipeline(2, &[1, 1]);
        assert!(matches!(
            evaluate_psi(&m, &gs, &elementary(2, 1, 0)),
            Err(Error::OutsideNilradical { .. })
        ));
    }

    #[test]
    fn t1_sl2_has_norm_sqrt2() {
        let (gs, m) = pipeline(2, &[1, 1]);
        let t = component_map_t(&m, &gs, 1).unwrap();
        assert_eq!(t.shape(), (1, 1));
        assert!((t[(0, 0)].abs() - 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(component_map_t(&m, &gs, 2), Err(Error::GradeOutOfRange { .. })));
        assert!(matches!(component_map_t(&m, &gs, 0), Err(Error::GradeOutOfRange { .. })));
    }

    #[test]
    fn residual_u_vanishes_without_lower_part() {
        let (gs, m) = pipeline(3, &[1, 1, 1]);
        let x = elementary(3, 0, 2) * 3.5;
        let u = residual_u(&m, &gs, 2, &x).unwrap();
        assert_eq!(u.norm(), 0.0);
        assert!(matches!(residual_u(&m, &gs, 1, &x), Err(Error::GradeOutOfRange { .. })));
        assert!(matches!(residual_u(&m, &gs, 3, &x), Err(Error::GradeOutOfRange { .. })));
    }
}
