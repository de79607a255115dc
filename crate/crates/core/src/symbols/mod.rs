//! Symbol-level linear algebra for homogeneous constant-coefficient
//! differential operators.
//!
//! An operator of order `k` from `E` to `F` is stored as its coefficient
//! matrices indexed by multi-indices of order exactly `k`. Its symbol at a
//! frequency `xi` is the real matrix obtained by substituting `xi^alpha` for
//! the derivative `d^alpha`; the `i^k` phase of the Fourier transform is
//! tracked by the spectral module because it changes neither kernels nor
//! ranks. All kernel/image computations are numerical-rank decisions via
//! SVD with a relative threshold.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub mod presets;

/// Default relative rank threshold: singular values at or below
/// `default_tol(rows, cols) * sigma_max` count as zero.
pub fn default_tol(rows: usize, cols: usize) -> f64 {
    1e-9 * rows.max(cols).max(1) as f64
}

/// Entries below this are treated as zero when fixing basis column signs.
const SIGN_EPS: f64 = 1e-12;

/// A multi-index `alpha` addressing the derivative `d^alpha`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    /// The zero multi-index in `n` variables.
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// `e_axis`: a single first derivative along `axis`.
    pub fn unit(n: usize, axis: usize) -> Self {
        let mut e = vec![0; n];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// Number of variables.
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// `|alpha|`, the total derivative order.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// The monomial `xi^alpha`.
    pub fn monomial(&self, xi: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(xi)
            .map(|(&a, &x)| x.powi(a as i32))
            .product()
    }
}

/// A homogeneous constant-coefficient differential operator of order `k`
/// between value spaces of dimensions `dim_e` and `dim_f`.
#[derive(Debug, Clone)]
pub struct DiffOp {
    n: usize,
    k: u32,
    dim_e: usize,
    dim_f: usize,
    coeffs: BTreeMap<MultiIndex, DMatrix<f64>>,
    name: Option<String>,
}

impl DiffOp {
    /// Builds an operator from coefficient matrices. Every multi-index must
    /// have order exactly `k`, all matrices must be `dim_f x dim_e`, and at
    /// least one matrix must be nonzero.
    pub fn new(
        n: usize,
        k: u32,
        dim_e: usize,
        dim_f: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, DMatrix<f64>)>,
    ) -> Result<Self> {
        let op = Self::assemble(n, k, dim_e, dim_f, coeffs)?;
        if dim_e > 0 && dim_f > 0 && !op.coeffs.values().any(|m| m.iter().any(|&v| v != 0.0)) {
            return Err(Error::input("operator has no nonzero coefficient matrix"));
        }
        Ok(op)
    }

    /// Like [`DiffOp::new`] but permits an identically zero operator; the
    /// restriction of an operator to a kernel subspace may vanish.
    fn new_allow_zero(
        n: usize,
        k: u32,
        dim_e: usize,
        dim_f: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, DMatrix<f64>)>,
    ) -> Result<Self> {
        Self::assemble(n, k, dim_e, dim_f, coeffs)
    }

    fn assemble(
        n: usize,
        k: u32,
        dim_e: usize,
        dim_f: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, DMatrix<f64>)>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!("spatial dimension must be >= 2, got {n}")));
        }
        if k < 1 {
            return Err(Error::input("operator order must be >= 1"));
        }
        let mut map = BTreeMap::new();
        for (alpha, mat) in coeffs {
            if alpha.dimension() != n {
                return Err(Error::input(format!(
                    "multi-index {:?} has {} entries, expected {n}",
                    alpha.entries(),
                    alpha.dimension()
                )));
            }
            if alpha.order() != k {
                return Err(Error::input(format!(
                    "multi-index {:?} has order {}, expected {k}",
                    alpha.entries(),
                    alpha.order()
                )));
            }
            if mat.nrows() != dim_f || mat.ncols() != dim_e {
                return Err(Error::shape(format!(
                    "coefficient matrix is {}x{}, expected {dim_f}x{dim_e}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            if map.insert(alpha, mat).is_some() {
                return Err(Error::input("duplicate multi-index in coefficient list"));
            }
        }
        if map.is_empty() {
            return Err(Error::input("operator needs at least one coefficient matrix"));
        }
        Ok(DiffOp {
            n,
            k,
            dim_e,
            dim_f,
            coeffs: map,
            name: None,
        })
    }

    pub(crate) fn with_name(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Order `k` of the operator.
    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn dim_f(&self) -> usize {
        self.dim_f
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, &DMatrix<f64>)> {
        self.coeffs.iter()
    }

    /// The symbol `sum_alpha coeffs[alpha] * xi^alpha` at frequency `xi`.
    pub fn eval_symbol(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        if xi.len() != self.n {
            return Err(Error::input(format!(
                "frequency has {} entries, expected {}",
                xi.len(),
                self.n
            )));
        }
        let mut out = DMatrix::zeros(self.dim_f, self.dim_e);
        self.symbol_into(xi, &mut out);
        Ok(out)
    }

    /// Accumulates the symbol into a caller-provided matrix; used by the
    /// per-frequency spectral loops. `xi.len()` and the shape of `out` must
    /// already be correct.
    pub(crate) fn symbol_into(&self, xi: &[f64], out: &mut DMatrix<f64>) {
        out.fill(0.0);
        for (alpha, mat) in &self.coeffs {
            let s = alpha.monomial(xi);
            if s != 0.0 {
                out.zip_apply(mat, |o, m| *o += s * m);
            }
        }
    }

    /// The same operator with every coefficient scaled by `c`.
    pub fn scaled(&self, c: f64) -> DiffOp {
        let mut op = self.clone();
        for mat in op.coeffs.values_mut() {
            *mat *= c;
        }
        op
    }

    /// Restricts the domain to `ker A`: coefficients become
    /// `coeffs[alpha] * kernel_basis`, so the restricted symbol at `xi`
    /// equals `symbol(xi) * kernel_basis`.
    pub fn restrict_to_kernel(&self, a: &PartMap) -> Result<DiffOp> {
        if a.dim_v() != self.dim_e {
            return Err(Error::shape(format!(
                "part map acts on dimension {}, operator domain is {}",
                a.dim_v(),
                self.dim_e
            )));
        }
        let basis = a.kernel_basis();
        let d0 = basis.ncols();
        let coeffs = self
            .coeffs
            .iter()
            .map(|(alpha, mat)| (alpha.clone(), mat * basis));
        DiffOp::new_allow_zero(self.n, self.k, d0, self.dim_f, coeffs)
    }
}

/// A subspace of `R^ambient_dim` carried by a column-orthonormal basis
/// (possibly with zero columns).
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(ambient_dim: usize, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != ambient_dim {
            return Err(Error::shape(format!(
                "basis has {} rows, ambient dimension is {ambient_dim}",
                basis.nrows()
            )));
        }
        let gram = basis.transpose() * &basis;
        let eye = DMatrix::identity(basis.ncols(), basis.ncols());
        if (gram - eye).norm() > 1e-12 * (basis.ncols().max(1) as f64) {
            return Err(Error::input("subspace basis is not column-orthonormal"));
        }
        Ok(Subspace { ambient_dim, basis })
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }
}

/// Flips basis columns so the first entry of magnitude above `SIGN_EPS`
/// is positive; makes reported bases reproducible.
fn fix_column_signs(m: &mut DMatrix<f64>) {
    for c in 0..m.ncols() {
        let mut flip = false;
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v.abs() > SIGN_EPS {
                flip = v < 0.0;
                break;
            }
        }
        if flip {
            for r in 0..m.nrows() {
                m[(r, c)] = -m[(r, c)];
            }
        }
    }
}

/// Sorted singular values (descending) together with the right singular
/// basis covering all of the domain. Rows are padded so the right basis is
/// square even for wide matrices.
fn full_right_svd(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    let work = if rows < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let vt = svd.v_t.expect("svd requested v_t");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    (sv, vt.transpose())
}

/// Orthonormal basis of the numerical kernel of `m`: right singular vectors
/// with `sigma <= tol * sigma_max`. The kernel of a zero matrix is the full
/// domain.
pub fn kernel_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if rows == 0 {
        return DMatrix::identity(cols, cols);
    }
    let (sv, v) = full_right_svd(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = tol * smax;
    let keep: Vec<usize> = (0..cols)
        .filter(|&i| sv.get(i).copied().unwrap_or(0.0) <= cut)
        .collect();
    let mut basis = DMatrix::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &v.column(i));
    }
    fix_column_signs(&mut basis);
    basis
}

/// Orthogonal projector onto the numerical kernel of `m`.
pub fn kernel_projector(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let basis = kernel_basis(m, tol);
    &basis * basis.transpose()
}

/// Orthonormal basis of the numerical image of `m`.
pub fn image_basis(m: &DMatrix<f64>, tol: f64) -> Subspace {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Subspace::zero(rows);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Subspace::zero(rows);
    }
    let cut = tol * smax;
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > cut).collect();
    let mut basis = DMatrix::zeros(rows, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &u.column(i));
    }
    fix_column_signs(&mut basis);
    Subspace {
        ambient_dim: rows,
        basis,
    }
}

/// Intersection of two subspaces via principal angles: directions whose
/// principal cosine is within `tol` of 1.
pub fn subspace_intersect(s1: &Subspace, s2: &Subspace, tol: f64) -> Result<Subspace> {
    if s1.ambient_dim != s2.ambient_dim {
        return Err(Error::input(format!(
            "ambient dimensions differ: {} vs {}",
            s1.ambient_dim, s2.ambient_dim
        )));
    }
    if s1.dim() == 0 || s2.dim() == 0 {
        return Ok(Subspace::zero(s1.ambient_dim));
    }
    let c = s1.basis.transpose() * &s2.basis;
    let svd = c.svd(true, false);
    let u = svd.u.expect("svd requested u");
    let sv = &svd.singular_values;
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] >= 1.0 - tol).collect();
    let mut basis = DMatrix::zeros(s1.ambient_dim, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &(&s1.basis * u.column(i)));
    }
    fix_column_signs(&mut basis);
    Ok(Subspace {
        ambient_dim: s1.ambient_dim,
        basis,
    })
}

/// A linear part map `A: V -> Vtilde` with its derived kernel data: an
/// orthonormal kernel basis, the orthogonal projector onto `ker A`, and the
/// smallest constant `c` with `|P_{(ker A)^perp} v| <= c |A v|` for all `v`
/// (the reciprocal of the smallest positive singular value).
#[derive(Debug, Clone)]
pub struct PartMap {
    matrix: DMatrix<f64>,
    kernel_basis: DMatrix<f64>,
    kernel_projector: DMatrix<f64>,
    compl_bound: f64,
    degenerate: bool,
    name: Option<String>,
}

impl PartMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let tol = default_tol(matrix.nrows(), matrix.ncols());
        Self::with_tol(matrix, tol)
    }

    pub fn with_tol(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        if matrix.ncols() == 0 {
            return Err(Error::input("part map needs a nonempty domain"));
        }
        let kernel_basis = kernel_basis(&matrix, tol);
        let kernel_projector = &kernel_basis * kernel_basis.transpose();
        let sv = matrix.clone().svd(false, false).singular_values;
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let cut = tol * smax;
        let smin_pos = sv.iter().copied().filter(|&s| s > cut).fold(f64::INFINITY, f64::min);
        let (compl_bound, degenerate) = if smin_pos.is_finite() {
            (1.0 / smin_pos, false)
        } else {
            // Zero map: the complement of the kernel is trivial and the
            // pointwise bound is vacuous.
            (0.0, true)
        };
        Ok(PartMap {
            matrix,
            kernel_basis,
            kernel_projector,
            compl_bound,
            degenerate,
            name: None,
        })
    }

    pub(crate) fn with_name(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim_v(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn dim_vtilde(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kernel_basis(&self) -> &DMatrix<f64> {
        &self.kernel_basis
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.ncols()
    }

    pub fn kernel_projector(&self) -> &DMatrix<f64> {
        &self.kernel_projector
    }

    /// `I - P_{ker A}`, the projector onto the orthogonal complement.
    pub fn complement_projector(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim_v(), self.dim_v()) - &self.kernel_projector
    }

    /// The smallest `c` with `|P_{(ker A)^perp} v| <= c |A v|`; `0` and the
    /// degenerate flag for the zero map, where the bound is vacuous.
    pub fn part_map_bound(&self) -> f64 {
        self.compl_bound
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}
