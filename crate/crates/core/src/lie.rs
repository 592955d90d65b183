//! Concrete matrix Lie algebras with their Cartan involution, invariant form
//! and the induced inner product `<X, Y> = -B(X, theta Y)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drop threshold used when orthonormalizing algebra elements.
pub const ORTHO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `sl(n, R)`, traceless real matrices.
    Sl,
}

/// Invariant symmetric bilinear form on the algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    /// `B(X, Y) = tr(XY)`. Proportional to the Killing form on `sl(n)`.
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvolutionKind {
    /// `theta X = -X^T`.
    NegativeTranspose,
}

/// A Lie algebra realized as a span of `n x n` real matrices.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct MatrixLieAlgebra {
    family: Family,
    n: usize,
    basis: Vec<DMatrix<f64>>,
    form_kind: FormKind,
    involution_kind: InvolutionKind,
    gram: DMatrix<f64>,
}

/// Output of [`MatrixLieAlgebra::orthonormalize`].
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    pub vectors: Vec<DMatrix<f64>>,
    /// Number of inputs dropped as (numerically) dependent.
    pub dropped: usize,
}

/// Elementary matrix `E_pq` (zero-based indices).
pub fn elementary(n: usize, p: usize, q: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(p, q)] = 1.0;
    m
}

impl MatrixLieAlgebra {
    /// `sl(n, R)` with basis `E_pq` (p != q, row-major order) followed by
    /// `E_pp - E_{p+1,p+1}`.
    pub fn special_linear(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let mut basis = Vec::with_capacity(n * n - 1);
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    basis.push(elementary(n, p, q));
                }
            }
        }
        for p in 0..n - 1 {
            let mut h = DMatrix::zeros(n, n);
            h[(p, p)] = 1.0;
            h[(p + 1, p + 1)] = -1.0;
            basis.push(h);
        }
        let mut alg = Self {
            family: Family::Sl,
            n,
            basis,
            form_kind: FormKind::Trace,
            involution_kind: InvolutionKind::NegativeTranspose,
            gram: DMatrix::zeros(0, 0),
        };
        let d = alg.basis.len();
        alg.gram = DMatrix::from_fn(d, d, |i, j| {
            alg.inner_product_unchecked(&alg.basis[i], &alg.basis[j])
        });
        Ok(alg)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Matrix size.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Algebra dimension.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn form_kind(&self) -> FormKind {
        self.form_kind
    }

    pub fn involution_kind(&self) -> InvolutionKind {
        self.involution_kind
    }

    /// Gram matrix of `<., .>` on the basis.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn check_shape(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(Error::ShapeMismatch {
                expected: self.n,
                rows: x.nrows(),
                cols: x.ncols(),
            });
        }
        Ok(())
    }

    /// `[X, Y] = XY - YX`.
    pub fn bracket(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        Ok(x * y - y * x)
    }

    /// The invariant form `B`.
    pub fn form(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        Ok(self.form_unchecked(x, y))
    }

    fn form_unchecked(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        match self.form_kind {
            // tr(XY) = sum_ij X_ij Y_ji
            FormKind::Trace => x.component_mul(&y.transpose()).sum(),
        }
    }

    /// The Cartan involution.
    pub fn theta(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self.involution_kind {
            InvolutionKind::NegativeTranspose => -x.transpose(),
        }
    }

    /// `<X, Y> = -B(X, theta Y)`.
    pub fn inner_product(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        Ok(self.inner_product_unchecked(x, y))
    }

    pub(crate) fn inner_product_unchecked(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        -self.form_unchecked(x, &self.theta(y))
    }

    pub fn norm(&self, x: &DMatrix<f64>) -> f64 {
        self.inner_product_unchecked(x, x).max(0.0).sqrt()
    }

    /// Coordinates of `x` in the algebra basis (least squares through the Gram
    /// matrix; exact when `x` lies in the span).
    pub fn coordinates(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.check_shape(x)?;
        let rhs = DVector::from_iterator(
            self.dim(),
            self.basis.iter().map(|b| self.inner_product_unchecked(b, x)),
        );
        let chol = self.gram.clone().cholesky().ok_or_else(|| Error::Internal {
            stage: "lie",
            detail: "basis Gram matrix is not positive definite".into(),
        })?;
        Ok(chol.solve(&rhs))
    }

    pub fn from_coordinates(&self, c: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (ci, b) in c.iter().zip(&self.basis) {
            m += b * *ci;
        }
        m
    }

    /// Distance from `x` to the span of the basis.
    pub fn span_residual(&self, x: &DMatrix<f64>) -> Result<f64> {
        let c = self.coordinates(x)?;
        Ok(self.norm(&(x - self.from_coordinates(&c))))
    }

    /// Modified Gram-Schmidt (two passes) with respect to `<., .>`. Inputs whose
    /// residual falls below [`ORTHO_TOL`] relative to their norm are dropped.
    pub fn orthonormalize(&self, vectors: &[DMatrix<f64>]) -> Orthonormalized {
        let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(vectors.len());
        let mut dropped = 0;
        for v in vectors {
            let norm0 = self.norm(v);
            if norm0 <= ORTHO_TOL {
                dropped += 1;
                continue;
            }
            let mut w = v.clone();
            for _ in 0..2 {
                for u in &out {
                    let c = self.inner_product_unchecked(&w, u);
                    w -= u * c;
                }
            }
            let norm = self.norm(&w);
            if norm <= ORTHO_TOL * norm0.max(1.0) {
                dropped += 1;
                continue;
            }
            out.push(w / norm);
        }
        Orthonormalized { vectors: out, dropped }
    }
}
