//! Block parabolics of `sl(n)` and the grading `g = sum_j g_j` they induce.
//!
//! For block sizes `(n_1, ..., n_k)` the grading element is
//! `H = diag(c_1 I_{n_1}, ..., c_k I_{n_k})` with `c_i - c_{i+1} = 1` and
//! `sum n_i c_i = 0`, so the entry in block position `(i, j)` has grade `j - i`.
//! `n_P` is the strictly upper block triangle, `m_P = g_0`.

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::MatrixLieAlgebra;

/// Default tolerance for clustering `ad H` eigenvalues to integers.
pub const GRADE_CLUSTER_TOL: f64 = 1e-9;

/// Relative tolerance for the "lies in n_P" domain check.
pub const DOMAIN_TOL: f64 = 1e-10;

/// One element of the grade-adapted orthonormal frame of `g`.
#[derive(Debug, Clone)]
pub struct FrameElement {
    pub grade: i32,
    pub matrix: DMatrix<f64>,
}

/// A factor `(t_i / t_j)^weight` of `a^{2 rho_P}` on the block torus `A_P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RhoTerm {
    pub i: usize,
    pub j: usize,
    pub weight: usize,
}

#[derive(Debug, Clone)]
pub struct GradedStructure {
    algebra: MatrixLieAlgebra,
    block_sizes: Vec<usize>,
    levels: Vec<f64>,
    h: DMatrix<f64>,
    frame: Vec<FrameElement>,
    grade_ranges: BTreeMap<i32, Range<usize>>,
    q: usize,
    r: usize,
    rho_h: f64,
    rho_terms: Vec<RhoTerm>,
    trivial: bool,
}

/// Build the grading of `alg` attached to the block parabolic with the given
/// block sizes. A single block yields a flagged trivial structure (`P = G`).
pub fn grading_from_blocks(
    alg: &MatrixLieAlgebra,
    block_sizes: &[usize],
    cluster_tol: f64,
) -> Result<GradedStructure> {
    let n = alg.n();
    let invalid = |reason: &str| Error::InvalidBlocks {
        blocks: block_sizes.to_vec(),
        reason: reason.to_string(),
    };
    if block_sizes.is_empty() {
        return Err(invalid("no blocks given"));
    }
    if block_sizes.contains(&0) {
        return Err(invalid("block sizes must be positive"));
    }
    let total: usize = block_sizes.iter().sum();
    if total != n {
        return Err(invalid(&format!("block sizes sum to {total}, expected {n}")));
    }

    let k = block_sizes.len();
    // c_i = c_1 - (i - 1), sum n_i c_i = 0
    let weighted: f64 = block_sizes
        .iter()
        .enumerate()
        .map(|(i, &ni)| (ni * i) as f64)
        .sum();
    let c1 = weighted / n as f64;
    let levels: Vec<f64> = (0..k).map(|i| c1 - i as f64).collect();
    let mut diag = Vec::with_capacity(n);
    for (&ni, &c) in block_sizes.iter().zip(&levels) {
        diag.extend(std::iter::repeat_n(c, ni));
    }
    let h = DMatrix::from_diagonal(&DVector::from_vec(diag));

    // Group basis elements by their ad H eigenvalue.
    let mut groups: BTreeMap<i32, Vec<DMatrix<f64>>> = BTreeMap::new();
    for (idx, b) in alg.basis().iter().enumerate() {
        let hb = alg.bracket(&h, b)?;
        let nb2 = alg.inner_product(b, b)?;
        let lambda = alg.inner_product(&hb, b)? / nb2;
        let residual = alg.norm(&(&hb - b * lambda));
        if residual > cluster_tol * nb2.sqrt() {
            return Err(Error::NonIntegralGrade(format!(
                "basis element {idx} is not an ad H eigenvector (residual {residual:.3e})"
            )));
        }
        let j = lambda.round();
        if (lambda - j).abs() > cluster_tol {
            return Err(Error::NonIntegralGrade(format!(
                "basis element {idx} has ad H eigenvalue {lambda}"
            )));
        }
        groups.entry(j as i32).or_default().push(b.clone());
    }

    let mut frame = Vec::with_capacity(alg.dim());
    let mut grade_ranges = BTreeMap::new();
    for (j, members) in &groups {
        let ortho = alg.orthonormalize(members);
        if ortho.dropped != 0 {
            return Err(Error::Internal {
                stage: "parabolic",
                detail: format!("grade {j} basis is rank deficient"),
            });
        }
        let start = frame.len();
        frame.extend(ortho.vectors.into_iter().map(|matrix| FrameElement { grade: *j, matrix }));
        grade_ranges.insert(*j, start..frame.len());
    }

    let q = grade_ranges.keys().copied().max().unwrap_or(0).max(0) as usize;
    let r = frame.iter().filter(|f| f.grade > 0).count();
    let two_rho: i64 = frame
        .iter()
        .filter(|f| f.grade > 0)
        .map(|f| f.grade as i64)
        .sum();
    let mut rho_terms = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            rho_terms.push(RhoTerm {
                i,
                j,
                weight: block_sizes[i] * block_sizes[j],
            });
        }
    }

    Ok(GradedStructure {
        algebra: alg.clone(),
        block_sizes: block_sizes.to_vec(),
        levels,
        h,
        frame,
        grade_ranges,
        q,
        r,
        rho_h: two_rho as f64 / 2.0,
        rho_terms,
        trivial: k == 1,
    })
}

impl GradedStructure {
    pub fn algebra(&self) -> &MatrixLieAlgebra {
        &self.algebra
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// The scalars `c_i` on the diagonal of `H`, one per block.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// The grading element `H`.
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Orthonormal frame of `g` ordered by ascending grade.
    pub fn frame(&self) -> &[FrameElement] {
        &self.frame
    }

    /// Frame index range of `g_j` (empty when `g_j = 0`).
    pub fn grade_range(&self, j: i32) -> Range<usize> {
        self.grade_ranges.get(&j).cloned().unwrap_or(0..0)
    }

    pub fn grade_basis(&self, j: i32) -> &[FrameElement] {
        &self.frame[self.grade_range(j)]
    }

    pub fn grade_dim(&self, j: i32) -> usize {
        self.grade_range(j).len()
    }

    /// Grades with nonzero spaces, ascending.
    pub fn grades(&self) -> impl Iterator<Item = i32> + '_ {
        self.grade_ranges.keys().copied()
    }

    /// Frame indices spanning `n_P` (grades >= 1); contiguous by ordering.
    pub fn n_plus_range(&self) -> Range<usize> {
        let start = self.frame.iter().position(|f| f.grade > 0).unwrap_or(self.frame.len());
        start..self.frame.len()
    }

    /// Frame indices spanning `n_{P-bar}` (grades <= -1).
    pub fn n_minus_range(&self) -> Range<usize> {
        let end = self.frame.iter().position(|f| f.grade >= 0).unwrap_or(self.frame.len());
        0..end
    }

    /// Top positive grade.
    pub fn q(&self) -> usize {
        self.q
    }

    /// `dim n_P`.
    pub fn r(&self) -> usize {
        self.r
    }

    /// `rho_P(H) = 1/2 tr(ad H | n_P)`.
    pub fn rho_value(&self) -> f64 {
        self.rho_h
    }

    /// `2 rho_P(H)` as an integer (sum of positive grades with multiplicity).
    pub fn two_rho(&self) -> usize {
        (2.0 * self.rho_h).round() as usize
    }

    /// Exponent pattern of `a^{2 rho_P}` in the block scalars.
    pub fn rho_terms(&self) -> &[RhoTerm] {
        &self.rho_terms
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    /// Block index of each row/column.
    pub fn block_of_index(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .enumerate()
            .flat_map(|(i, &ni)| std::iter::repeat_n(i, ni))
            .collect()
    }

    /// Orthogonal projections `X_j` of `x` onto each nonzero grade space.
    pub fn grade_decompose(&self, x: &DMatrix<f64>) -> Result<BTreeMap<i32, DMatrix<f64>>> {
        self.algebra.check_shape(x)?;
        let n = self.algebra.n();
        let mut out = BTreeMap::new();
        for (&j, range) in &self.grade_ranges {
            let mut xj = DMatrix::zeros(n, n);
            for f in &self.frame[range.clone()] {
                let c = self.algebra.inner_product_unchecked(x, &f.matrix);
                xj += &f.matrix * c;
            }
            out.insert(j, xj);
        }
        Ok(out)
    }

    /// Coordinates of `x` on the orthonormal `n_P` frame. Errors when `x` has a
    /// component outside `n_P`.
    pub fn n_plus_coefficients(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.algebra.check_shape(x)?;
        let range = self.n_plus_range();
        let coeffs = DVector::from_iterator(
            range.len(),
            self.frame[range]
                .iter()
                .map(|f| self.algebra.inner_product_unchecked(x, &f.matrix)),
        );
        let outside = (x - self.n_plus_element(&coeffs)).norm();
        if outside > DOMAIN_TOL * x.norm().max(1.0) {
            return Err(Error::OutsideNilradical { outside });
        }
        Ok(coeffs)
    }

    /// `sum_i c_i b_i` over the `n_P` frame.
    pub fn n_plus_element(&self, coeffs: &DVector<f64>) -> DMatrix<f64> {
        let n = self.algebra.n();
        let mut x = DMatrix::zeros(n, n);
        for (c, f) in coeffs.iter().zip(&self.frame[self.n_plus_range()]) {
            x += &f.matrix * *c;
        }
        x
    }

    /// Grade of each `n_P` frame element, in frame order.
    pub fn n_plus_grades(&self) -> Vec<usize> {
        self.frame[self.n_plus_range()]
            .iter()
            .map(|f| f.grade as usize)
            .collect()
    }
}
