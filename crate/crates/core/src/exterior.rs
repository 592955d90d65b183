//! The representation `sigma = wedge^r ad` on the cyclic subspace
//! `Z = sigma(U(n_P)) xi` of `wedge^r g`, `r = dim n_P`.
//!
//! The ambient space `wedge^r g` is never materialized. Ambient vectors are
//! sparse maps from sorted index sets (into the grade-adapted orthonormal
//! frame of `g`) to coefficients; with an orthonormal frame the induced inner
//! product on `wedge^r g` is the coordinate dot product. Every ambient basis
//! vector is a `sigma(H)` eigenvector with eigenvalue the sum of the frame
//! grades, so `Z` is built one grade at a time:
//! `Z_j = sum_b sigma(b) Z_{j - grade(b)}` over the `n_P` frame.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};
use crate::parabolic::GradedStructure;

/// Relative tolerance for new directions during the closure and for the
/// closure residual of the generator matrices.
pub const CLOSURE_TOL: f64 = 1e-10;

/// Structure constants below this magnitude are treated as exact zeros.
const ADJOINT_DROP: f64 = 1e-14;

/// Sorted frame indices `i_1 < ... < i_r` naming `e_{i_1} ^ ... ^ e_{i_r}`.
pub type WedgeKey = Box<[u16]>;

/// Sparse vector in `wedge^r g`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WedgeVector {
    terms: BTreeMap<WedgeKey, f64>,
}

impl WedgeVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// A single basis wedge. Indices need not be sorted; the sign of the
    /// sorting permutation is applied and repeated indices give zero.
    pub fn basis_wedge(indices: &[u16]) -> Self {
        let mut v = Self::new();
        let mut key = indices.to_vec();
        let mut sign = 1.0;
        // insertion sort, counting transpositions
        for i in 1..key.len() {
            let mut k = i;
            while k > 0 && key[k - 1] > key[k] {
                key.swap(k - 1, k);
                sign = -sign;
                k -= 1;
            }
        }
        if key.windows(2).any(|w| w[0] == w[1]) {
            return v;
        }
        v.terms.insert(key.into_boxed_slice(), sign);
        v
    }

    pub fn add(&mut self, key: WedgeKey, value: f64) {
        *self.terms.entry(key).or_insert(0.0) += value;
    }

    pub fn get(&self, key: &[u16]) -> f64 {
        self.terms.get(key).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&WedgeKey, &f64)> {
        self.terms.iter()
    }

    pub fn nnz(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dot(&self, other: &WedgeVector) -> f64 {
        let (small, large) = if self.nnz() <= other.nnz() {
            (self, other)
        } else {
            (other, self)
        };
        small.terms.iter().map(|(k, v)| v * large.get(k)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &WedgeVector) {
        for (k, v) in &other.terms {
            self.add(k.clone(), alpha * v);
        }
    }

    pub fn scaled(&self, alpha: f64) -> WedgeVector {
        WedgeVector {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), alpha * v)).collect(),
        }
    }

    /// Drop entries that are exactly zero.
    fn pruned(mut self) -> Self {
        self.terms.retain(|_, v| *v != 0.0);
        self
    }
}

/// Frame coordinates of `ad(X)`: column `l` lists the nonzero coordinates of
/// `[X, e_l]`.
#[derive(Debug, Clone)]
pub struct AdjointAction {
    columns: Vec<Vec<(u16, f64)>>,
}

impl AdjointAction {
    pub fn new(gs: &GradedStructure, x: &DMatrix<f64>) -> Result<Self> {
        let alg = gs.algebra();
        let frame = gs.frame();
        let mut columns = Vec::with_capacity(frame.len());
        for el in frame {
            let br = alg.bracket(x, &el.matrix)?;
            let col = frame
                .iter()
                .enumerate()
                .filter_map(|(m, em)| {
                    let c = alg.inner_product_unchecked(&br, &em.matrix);
                    (c.abs() > ADJOINT_DROP).then_some((m as u16, c))
                })
                .collect();
            columns.push(col);
        }
        Ok(Self { columns })
    }

    /// Derivation action on a wedge:
    /// `sum_l e_{i_1} ^ ... ^ [X, e_{i_l}] ^ ... ^ e_{i_r}`.
    pub fn apply(&self, v: &WedgeVector) -> WedgeVector {
        let mut out = WedgeVector::new();
        let mut scratch: Vec<u16> = Vec::new();
        for (key, &coef) in v.iter() {
            for (pos, &idx) in key.iter().enumerate() {
                for &(m, a) in &self.columns[idx as usize] {
                    if m == idx {
                        out.add(key.clone(), coef * a);
                        continue;
                    }
                    if key.binary_search(&m).is_ok() {
                        continue;
                    }
                    scratch.clear();
                    scratch.extend_from_slice(key);
                    scratch[pos] = m;
                    let mut sign = 1.0;
                    let mut p = pos;
                    while p > 0 && scratch[p - 1] > scratch[p] {
                        scratch.swap(p - 1, p);
                        sign = -sign;
                        p -= 1;
                    }
                    while p + 1 < scratch.len() && scratch[p + 1] < scratch[p] {
                        scratch.swap(p, p + 1);
                        sign = -sign;
                        p += 1;
                    }
                    out.add(scratch.clone().into_boxed_slice(), sign * coef * a);
                }
            }
        }
        out.pruned()
    }
}

/// `sigma(X) v` for `X` in the algebra and `v` in `wedge^r g`.
pub fn wedge_action(gs: &GradedStructure, x: &DMatrix<f64>, v: &WedgeVector) -> Result<WedgeVector> {
    Ok(AdjointAction::new(gs, x)?.apply(v))
}

/// `Z = sigma(U(n_P)) xi` with an orthonormal grade-adapted basis and the
/// matrices of `sigma(b)` for each `n_P` frame element `b`.
#[derive(Debug, Clone)]
pub struct CyclicModule {
    r: usize,
    algebra_dim: usize,
    two_rho: usize,
    xi: WedgeVector,
    z_basis: Vec<WedgeVector>,
    z_grades: Vec<usize>,
    grade_blocks: Vec<Range<usize>>,
    sigma_gens: Vec<CsrMatrix<f64>>,
    generator_grades: Vec<usize>,
    sigma_h_eigs: Vec<f64>,
    merged: MergedGenerators,
}

/// All generator matrices in one row-major pattern, each entry tagged with its
/// generator, so `sum_i c_i sigma(b_i) v` is a single pass.
#[derive(Debug, Clone)]
struct MergedGenerators {
    row_offsets: Vec<usize>,
    cols: Vec<u32>,
    gens: Vec<u16>,
    vals: Vec<f64>,
}

impl MergedGenerators {
    fn new(dim: usize, gens: &[CsrMatrix<f64>]) -> Self {
        let mut row_offsets = Vec::with_capacity(dim + 1);
        let (mut cols, mut tags, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        row_offsets.push(0);
        for row in 0..dim {
            for (g, m) in gens.iter().enumerate() {
                let lane = m.row(row);
                for (&c, &v) in lane.col_indices().iter().zip(lane.values()) {
                    cols.push(c as u32);
                    tags.push(g as u16);
                    vals.push(v);
                }
            }
            row_offsets.push(cols.len());
        }
        Self {
            row_offsets,
            cols,
            gens: tags,
            vals,
        }
    }
}

/// Modified Gram-Schmidt of sparse candidates against each other; returns the
/// new orthonormal directions.
fn orthonormal_directions(candidates: &[WedgeVector], tol: f64) -> Vec<WedgeVector> {
    let support: BTreeSet<&WedgeKey> = candidates.iter().flat_map(|c| c.terms.keys()).collect();
    let support: Vec<&WedgeKey> = support.into_iter().collect();
    let index: HashMap<&WedgeKey, usize> =
        support.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let dim = support.len();

    let mut accepted: Vec<Vec<f64>> = Vec::new();
    for cand in candidates {
        let mut w = vec![0.0; dim];
        for (k, v) in cand.iter() {
            w[index[k]] = *v;
        }
        let norm0 = cand.norm();
        if norm0 <= tol {
            continue;
        }
        for _ in 0..2 {
            for u in &accepted {
                let c: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
        }
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= tol * norm0 {
            continue;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        accepted.push(w);
    }

    accepted
        .into_iter()
        .map(|u| {
            let mut v = WedgeVector::new();
            for (i, x) in u.into_iter().enumerate() {
                if x != 0.0 {
                    v.terms.insert(support[i].clone(), x);
                }
            }
            v
        })
        .collect()
}

/// Build `Z` for the grading `gs`.
///
/// `xi` is the wedge of the orthonormal `n_{P-bar}` frame in ascending index
/// order. `cluster_tol` bounds the distance of each `sigma(H)` Rayleigh
/// quotient from its integer grade.
pub fn build_cyclic_module(gs: &GradedStructure, cluster_tol: f64) -> Result<CyclicModule> {
    let r = gs.r();
    if r == 0 {
        return Err(Error::TrivialModule);
    }
    let frame = gs.frame();
    if frame.len() > u16::MAX as usize {
        return Err(Error::Internal {
            stage: "exterior",
            detail: "algebra too large for 16-bit wedge indices".into(),
        });
    }
    let minus = gs.n_minus_range();
    if minus.len() != r {
        return Err(Error::Internal {
            stage: "exterior",
            detail: format!("dim n_P-bar = {} but dim n_P = {r}", minus.len()),
        });
    }
    let xi_key: Vec<u16> = minus.map(|i| i as u16).collect();
    let xi = WedgeVector::basis_wedge(&xi_key);

    let plus = gs.n_plus_range();
    let generator_grades = gs.n_plus_grades();
    let actions: Vec<AdjointAction> = frame[plus]
        .iter()
        .map(|f| AdjointAction::new(gs, &f.matrix))
        .collect::<Result<_>>()?;

    let q = gs.q();
    let two_rho = gs.two_rho();
    // grades of wedge^r g relative to xi lie in [0, 4 rho_P(H)]
    let cap = 2 * two_rho;

    let mut blocks: Vec<Vec<WedgeVector>> = vec![vec![xi.clone()]];
    let mut j = 0;
    loop {
        j += 1;
        let mut candidates = Vec::new();
        for (action, &g) in actions.iter().zip(&generator_grades) {
            if g > j {
                continue;
            }
            for z in &blocks[j - g] {
                candidates.push(action.apply(z));
            }
        }
        let block = orthonormal_directions(&candidates, CLOSURE_TOL);
        if !block.is_empty() && j > cap {
            return Err(Error::Internal {
                stage: "exterior",
                detail: format!("closure produced grade {j} beyond the cap {cap}"),
            });
        }
        blocks.push(block);
        if j >= q && blocks[j + 1 - q..=j].iter().all(|b| b.is_empty()) {
            break;
        }
    }
    while blocks.last().is_some_and(|b| b.is_empty()) {
        blocks.pop();
    }
    if blocks.iter().any(|b| b.is_empty()) {
        return Err(Error::Internal {
            stage: "exterior",
            detail: "grade blocks of Z are not contiguous".into(),
        });
    }

    let mut z_basis = Vec::new();
    let mut z_grades = Vec::new();
    let mut grade_blocks = Vec::new();
    for (grade, block) in blocks.into_iter().enumerate() {
        let start = z_basis.len();
        z_grades.extend(std::iter::repeat_n(grade, block.len()));
        z_basis.extend(block);
        grade_blocks.push(start..z_basis.len());
    }
    let dim_z = z_basis.len();

    // Inverted index per block: ambient key -> (basis position, coefficient).
    let inverted: Vec<HashMap<&WedgeKey, Vec<(usize, f64)>>> = grade_blocks
        .iter()
        .map(|range| {
            let mut map: HashMap<&WedgeKey, Vec<(usize, f64)>> = HashMap::new();
            for m in range.clone() {
                for (k, v) in z_basis[m].iter() {
                    map.entry(k).or_default().push((m, *v));
                }
            }
            map
        })
        .collect();

    let mut sigma_gens = Vec::with_capacity(actions.len());
    for (gen, (action, &g)) in actions.iter().zip(&generator_grades).enumerate() {
        let mut coo = CooMatrix::new(dim_z, dim_z);
        for (l, z) in z_basis.iter().enumerate() {
            let w = action.apply(z);
            let target = z_grades[l] + g;
            let wnorm = w.norm();
            if target >= grade_blocks.len() {
                if wnorm > CLOSURE_TOL {
                    return Err(Error::Internal {
                        stage: "exterior",
                        detail: format!("generator {gen} maps basis vector {l} above the top grade"),
                    });
                }
                continue;
            }
            let mut coords: BTreeMap<usize, f64> = BTreeMap::new();
            for (k, v) in w.iter() {
                if let Some(hits) = inverted[target].get(k) {
                    for &(m, c) in hits {
                        *coords.entry(m).or_insert(0.0) += v * c;
                    }
                }
            }
            let mut resid = w.clone();
            for (&m, &c) in &coords {
                resid.axpy(-c, &z_basis[m]);
            }
            let rnorm = resid.norm();
            if rnorm > CLOSURE_TOL * wnorm.max(1.0) {
                return Err(Error::Internal {
                    stage: "exterior",
                    detail: format!("Z is not closed under generator {gen} (residual {rnorm:.3e})"),
                });
            }
            for (m, c) in coords {
                if c != 0.0 {
                    coo.push(m, l, c);
                }
            }
        }
        sigma_gens.push(CsrMatrix::from(&coo));
    }

    // sigma(H) Rayleigh quotients, offset by -2 rho_P(H).
    let h_action = AdjointAction::new(gs, gs.h())?;
    let mut sigma_h_eigs = Vec::with_capacity(dim_z);
    for (l, z) in z_basis.iter().enumerate() {
        let eig = z.dot(&h_action.apply(z));
        let grade = eig + two_rho as f64;
        if (grade - z_grades[l] as f64).abs() > cluster_tol {
            return Err(Error::Internal {
                stage: "exterior",
                detail: format!(
                    "sigma(H) eigenvalue {eig} of basis vector {l} does not match grade {}",
                    z_grades[l]
                ),
            });
        }
        sigma_h_eigs.push(eig);
    }
    let multiplicity_at_xi = sigma_h_eigs
        .iter()
        .filter(|e| (**e + two_rho as f64).abs() <= cluster_tol)
        .count();
    if multiplicity_at_xi != 1 {
        return Err(Error::Internal {
            stage: "exterior",
            detail: format!("sigma(H) eigenvalue -2 rho_P(H) has multiplicity {multiplicity_at_xi} on Z"),
        });
    }

    let sigma_gens_ref = sigma_gens.clone();
    Ok(CyclicModule {
        r,
        algebra_dim: frame.len(),
        two_rho,
        xi,
        z_basis,
        z_grades,
        grade_blocks,
        sigma_gens,
        generator_grades,
        sigma_h_eigs,
        merged: MergedGenerators::new(dim_z, &sigma_gens_ref),
    })
}

impl CyclicModule {
    /// Exterior degree `r = dim n_P`.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.z_basis.len()
    }

    /// `binomial(dim g, r)`, the dimension of the ambient `wedge^r g`.
    pub fn ambient_dim(&self) -> u128 {
        let (n, k) = (self.algebra_dim as u128, self.r as u128);
        (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
    }

    /// `xi` as an ambient vector.
    pub fn xi(&self) -> &WedgeVector {
        &self.xi
    }

    /// `xi` in `Z` coordinates (the first basis vector).
    pub fn xi_coords(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = 1.0;
        v
    }

    pub fn z_basis(&self) -> &[WedgeVector] {
        &self.z_basis
    }

    /// Grade of each basis vector of `Z`.
    pub fn z_grades(&self) -> &[usize] {
        &self.z_grades
    }

    /// Top grade `p` of `Z`.
    pub fn top_grade(&self) -> usize {
        self.grade_blocks.len() - 1
    }

    /// Index range of `Z_j` (empty outside `0..=p`).
    pub fn block(&self, j: usize) -> Range<usize> {
        self.grade_blocks.get(j).cloned().unwrap_or(0..0)
    }

    pub fn grade_blocks(&self) -> &[Range<usize>] {
        &self.grade_blocks
    }

    /// `sigma(b_i)` on `Z` for the `i`-th `n_P` frame element.
    pub fn sigma_gens(&self) -> &[CsrMatrix<f64>] {
        &self.sigma_gens
    }

    pub fn sigma_dense(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from(&self.sigma_gens[i])
    }

    pub fn generator_grades(&self) -> &[usize] {
        &self.generator_grades
    }

    /// `sigma(H)` eigenvalue of each basis vector.
    pub fn sigma_h_eigs(&self) -> &[f64] {
        &self.sigma_h_eigs
    }

    /// `2 rho_P(H)`.
    pub fn two_rho(&self) -> usize {
        self.two_rho
    }

    /// `out += sum_i coeffs[i] * sigma(b_i) v`.
    pub fn apply_add(&self, coeffs: &[f64], v: &DVector<f64>, out: &mut DVector<f64>) {
        self.apply_add_from_grade(coeffs, v, out, 0);
    }

    /// As [`apply_add`](Self::apply_add) for `v` supported in grades
    /// `>= min_grade`; output rows below `min_grade + 1` are skipped.
    pub fn apply_add_from_grade(
        &self,
        coeffs: &[f64],
        v: &DVector<f64>,
        out: &mut DVector<f64>,
        min_grade: usize,
    ) {
        if min_grade + 1 > self.top_grade() {
            return;
        }
        let m = &self.merged;
        let first_row = self.block(min_grade + 1).start;
        let v = v.as_slice();
        for row in first_row..self.dim() {
            let lane = m.row_offsets[row]..m.row_offsets[row + 1];
            let mut s = 0.0;
            for e in lane {
                s += m.vals[e] * coeffs[m.gens[e] as usize] * v[m.cols[e] as usize];
            }
            out[row] += s;
        }
    }

    /// `sigma(X) v` for `X = sum_i coeffs[i] b_i` in `n_P`.
    pub fn apply(&self, coeffs: &[f64], v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.apply_add(coeffs, v, &mut out);
        out
    }

    /// Orthogonal projection onto `Z_j`, as a full-length vector.
    pub fn grade_project(&self, z: &DVector<f64>, j: usize) -> DVector<f64> {
        let mut out = DVector::zeros(z.len());
        for i in self.block(j) {
            out[i] = z[i];
        }
        out
    }

    /// The `Z_j` coordinates of `z` (block-local).
    pub fn grade_component(&self, z: &DVector<f64>, j: usize) -> DVector<f64> {
        let range = self.block(j);
        DVector::from_iterator(range.len(), range.map(|i| z[i]))
    }

    /// Ambient vector with the given `Z` coordinates.
    pub fn to_ambient(&self, z: &DVector<f64>) -> WedgeVector {
        let mut out = WedgeVector::new();
        for (c, b) in z.iter().zip(&self.z_basis) {
            if *c != 0.0 {
                out.axpy(*c, b);
            }
        }
        out
    }

    /// Orthogonal projection of an ambient vector onto `Z`: coordinates and
    /// the norm of the rejected part.
    pub fn project_ambient(&self, w: &WedgeVector) -> (DVector<f64>, f64) {
        let coords = DVector::from_iterator(self.dim(), self.z_basis.iter().map(|b| b.dot(w)));
        let mut resid = w.clone();
        resid.axpy(-1.0, &self.to_ambient(&coords));
        (coords, resid.norm())
    }
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

    fn frame_index(gs: &GradedStructure, m: &DMatrix<f64>) -> u16 {
        gs.frame().iter().position(|f| f.matrix == *m).unwrap() as u16
    }

    #[test]
    fn basis_wedge_signs() {
        let v = WedgeVector::basis_wedge(&[2, 0, 1]);
        assert_eq!(v.get(&[0, 1, 2]), 1.0);
        let v = WedgeVector::basis_wedge(&[1, 0, 2]);
        assert_eq!(v.get(&[0, 1, 2]), -1.0);
        assert!(WedgeVector::basis_wedge(&[3, 1, 3]).is_empty());
    }

    #[test]
    fn wedge_one_is_adjoint() {
        let gs = graded(2, &[1, 1]);
        let e = elementary(2, 0, 1);
        let f = elementary(2, 1, 0);
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let fi = frame_index(&gs, &f);
        let out = wedge_action(&gs, &e, &WedgeVector::basis_wedge(&[fi])).unwrap();
        // h = sqrt(2) * (unit grade-0 frame element)
        let h_unit = &gs.grade_basis(0)[0].matrix;
        let hi = frame_index(&gs, h_unit);
        let sign = if (h_unit - &h / 2f64.sqrt()).norm() < 1e-12 { 1.0 } else { -1.0 };
        assert!((out.get(&[hi]) - sign * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(out.nnz(), 1);
    }

    #[test]
    fn wedge_action_kills_repeated_factor() {
        // X = E_12 in sl(3), v = E_21 ^ E_31; [E_12, E_21] is diagonal but
        // the term [X, E_31] = -E_32 survives; a wedge v ^ v pattern is zero.
        let gs = graded(3, &[1, 1, 1]);
        let a = frame_index(&gs, &elementary(3, 1, 0));
        let v = WedgeVector::basis_wedge(&[a, a]);
        assert!(v.is_empty());
        let out = wedge_action(&gs, &elementary(3, 0, 1), &v).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn sigma_h_on_xi_sl3() {
        let gs = graded(3, &[1, 1, 1]);
        let m = build_cyclic_module(&gs, GRADE_CLUSTER_TOL).unwrap();
        let out = wedge_action(&gs, gs.h(), m.xi()).unwrap();
        let mut expected = m.xi().scaled(-4.0);
        expected.axpy(-1.0, &out);
        assert!(expected.norm() < 1e-14);
        assert!((m.xi().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sl2_module() {
        let gs = graded(2, &[1, 1]);
        let m = build_cyclic_module(&gs, GRADE_CLUSTER_TOL).unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(m.top_grade(), 2);
        for j in 0..3 {
            assert_eq!(m.block(j).len(), 1);
        }
        assert_eq!(m.ambient_dim(), 3);
    }

    #[test]
    fn trivial_structure_has_no_module() {
        let gs = graded(3, &[3]);
        assert!(matches!(
            build_cyclic_module(&gs, GRADE_CLUSTER_TOL),
            Err(Error::TrivialModule)
        ));
    }

    #[test]
    fn grade_project_examples() {
        let gs = graded(3, &[1, 1, 1]);
        let m = build_cyclic_module(&gs, GRADE_CLUSTER_TOL).unwrap();
        let xi = m.xi_coords();
        assert_eq!(m.grade_project(&xi, 0), xi);
        assert_eq!(m.grade_project(&xi, 1).norm(), 0.0);
        assert_eq!(m.grade_project(&xi, m.top_grade() + 3).norm(), 0.0);
        let z = DVector::from_fn(m.dim(), |i, _| ((i * 7 + 3) as f64).cos());
        let total: f64 = (0..=m.top_grade()).map(|j| m.grade_project(&z, j).norm_squared()).sum();
        assert!((total - z.norm_squared()).abs() < 1e-12 * z.norm_squared());
        let sum = (0..=m.top_grade()).fold(DVector::zeros(m.dim()), |acc, j| acc + m.grade_project(&z, j));
        assert_eq!(sum, z);
    }
}
