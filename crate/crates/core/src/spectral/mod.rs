//! Discrete Fourier-multiplier engine on the periodic box.
//!
//! Fields live on a uniform lattice over `[0, L)^n` and stand in for
//! compactly supported test functions (supported in the centered half-box
//! via the lab module's cutoff). Because everything is periodic and
//! band-limited, the multiplier calculus is exact on the lattice: applying
//! an operator, projecting onto its symbol kernel, differentiating, and
//! taking Riesz potentials are all per-frequency matrix or scalar
//! multiplications between one forward and one inverse FFT.
//!
//! Homogeneous symbols vanish at the zero frequency, so the kernel
//! projection acts there as the identity and Riesz potentials drop the
//! mode (flagging fields whose mean was significant).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::{default_tol, kernel_projector, DiffOp, MultiIndex, PartMap};

mod fft;
pub mod kmsf;

/// Relative mean threshold above which dropping the zero mode is flagged.
const MEAN_FLAG_TOL: f64 = 1e-10;

/// Uniform periodic lattice: `points` samples per axis on `[0, period)^n`.
/// Integer frequencies run over `{-points/2, ..., points/2 - 1}` per axis
/// and are scaled by `2 pi / period`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    points: usize,
    period: f64,
}

impl Grid {
    pub fn new(n: usize, points: usize, period: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("grid dimension must be >= 1"));
        }
        if points < 8 || points % 2 != 0 {
            return Err(Error::input(format!(
                "points per axis must be even and >= 8, got {points}"
            )));
        }
        if !(period > 0.0) {
            return Err(Error::input("period must be positive"));
        }
        Ok(Grid { n, points, period })
    }

    /// Grid on the standard box `[0, 2 pi)^n`.
    pub fn standard(n: usize, points: usize) -> Result<Self> {
        Self::new(n, points, std::f64::consts::TAU)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn lattice_len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    /// Integer frequency of a lattice index along one axis.
    pub fn freq_component(&self, idx: usize) -> i64 {
        if idx < self.points / 2 {
            idx as i64
        } else {
            idx as i64 - self.points as i64
        }
    }

    /// Physical frequency scale `2 pi / period`.
    pub fn xi_scale(&self) -> f64 {
        std::f64::consts::TAU / self.period
    }

    /// Flat lattice index of an integer frequency vector (entries must
    /// satisfy `|m| < points/2` or match a representable frequency).
    pub fn lattice_index_of_freq(&self, m: &[i64]) -> usize {
        let np = self.points as i64;
        let mut flat = 0usize;
        for &mi in m {
            let idx = mi.rem_euclid(np) as usize;
            flat = flat * self.points + idx;
        }
        flat
    }

    /// Visits every lattice site in flat order with its integer frequency
    /// vector.
    pub(crate) fn for_each_freq(&self, mut visit: impl FnMut(usize, &[i64])) {
        let n = self.n;
        let np = self.points;
        let mut idx = vec![0usize; n];
        let mut m = vec![0i64; n];
        let total = self.lattice_len();
        for flat in 0..total {
            visit(flat, &m);
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] == np {
                    idx[a] = 0;
                    m[a] = 0;
                } else {
                    m[a] = self.freq_component(idx[a]);
                    break;
                }
            }
        }
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            n: self.n,
            points: self.points,
            period: self.period,
        }
    }
}

/// Serializable grid descriptor for reports.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridSummary {
    pub n: usize,
    pub points: usize,
    pub period: f64,
}

/// A vector-valued function sampled on a grid. Values are stored flat with
/// axes row-major and the component index fastest-varying.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    dim_v: usize,
    values: Vec<f64>,
    /// Set by operations that dropped a significant zero mode.
    pub mean_dropped: bool,
}

impl Field {
    pub fn zeros(grid: Grid, dim_v: usize) -> Self {
        let len = grid.lattice_len() * dim_v;
        Field {
            grid,
            dim_v,
            values: vec![0.0; len],
            mean_dropped: false,
        }
    }

    pub fn from_values(grid: Grid, dim_v: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.lattice_len() * dim_v {
            return Err(Error::shape(format!(
                "value buffer has {} entries, expected {}",
                values.len(),
                grid.lattice_len() * dim_v
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("field values must be finite"));
        }
        Ok(Field {
            grid,
            dim_v,
            values,
            mean_dropped: false,
        })
    }

    /// Samples `f(x, component)` at every grid point.
    pub fn from_fn(grid: Grid, dim_v: usize, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let n = grid.n();
        let np = grid.points();
        let h = grid.spacing();
        let mut values = vec![0.0; grid.lattice_len() * dim_v];
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0f64; n];
        for flat in 0..grid.lattice_len() {
            for c in 0..dim_v {
                values[flat * dim_v + c] = f(&x, c);
            }
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] == np {
                    idx[a] = 0;
                    x[a] = 0.0;
                } else {
                    x[a] = idx[a] as f64 * h;
                    break;
                }
            }
        }
        Field {
            grid,
            dim_v,
            values,
            mean_dropped: false,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, lattice_flat: usize, component: usize) -> f64 {
        self.values[lattice_flat * self.dim_v + component]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Field {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid || self.dim_v != other.dim_v {
            return Err(Error::shape("field difference needs matching shapes"));
        }
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v -= w;
        }
        out.mean_dropped = self.mean_dropped || other.mean_dropped;
        Ok(out)
    }
}

/// Complex Fourier coefficients of a field, same layout as `Field`.
#[derive(Debug, Clone)]
pub(crate) struct Spectrum {
    pub(crate) grid: Grid,
    pub(crate) dim: usize,
    pub(crate) data: Vec<Complex64>,
}

impl Spectrum {
    pub(crate) fn zeros(grid: Grid, dim: usize) -> Self {
        let len = grid.lattice_len() * dim;
        Spectrum {
            grid,
            dim,
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub(crate) fn from_field(f: &Field) -> Self {
        let mut data: Vec<Complex64> =
            f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::transform(&mut data, f.grid.n(), f.grid.points(), f.dim_v, true);
        Spectrum {
            grid: f.grid.clone(),
            dim: f.dim_v,
            data,
        }
    }

    /// Inverse transform; returns the real field and the largest imaginary
    /// residue left behind (tiny when conjugate symmetry was preserved).
    pub(crate) fn into_real_field_checked(mut self) -> (Field, f64) {
        fft::transform(&mut self.data, self.grid.n(), self.grid.points(), self.dim, false);
        let mut residual = 0.0f64;
        let values: Vec<f64> = self
            .data
            .iter()
            .map(|c| {
                residual = residual.max(c.im.abs());
                c.re
            })
            .collect();
        (
            Field {
                grid: self.grid,
                dim_v: self.dim,
                values,
                mean_dropped: false,
            },
            residual,
        )
    }

    pub(crate) fn into_real_field(self) -> Field {
        self.into_real_field_checked().0
    }

    /// Euclidean norm of all coefficients.
    pub(crate) fn l2(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Drops the Nyquist planes. The frequency `-N/2` has no `+N/2`
    /// partner on the lattice, so multipliers that are odd in `xi` cannot
    /// preserve conjugate symmetry there; every `xi`-dependent operation
    /// works on the symmetric band and zeroes these planes.
    pub(crate) fn zero_nyquist(&mut self) {
        let nyquist = -(self.grid.points() as i64) / 2;
        let dim = self.dim;
        let grid = self.grid.clone();
        grid.for_each_freq(|flat, m| {
            if m.iter().any(|&mi| mi == nyquist) {
                for c in 0..dim {
                    self.data[flat * dim + c] = Complex64::new(0.0, 0.0);
                }
            }
        });
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn check_field_op(op: &DiffOp, f: &Field) -> Result<()> {
    if f.dim_v != op.dim_e() {
        return Err(Error::shape(format!(
            "field has {} components, operator domain is {}",
            f.dim_v,
            op.dim_e()
        )));
    }
    if f.grid.n() != op.n() {
        return Err(Error::shape(format!(
            "field grid dimension {} differs from operator dimension {}",
            f.grid.n(),
            op.n()
        )));
    }
    Ok(())
}

/// Applies `op` spectrally: the output spectrum at frequency `m` is
/// `(i)^k op[xi_m] fhat(m)`.
pub fn apply_diffop(op: &DiffOp, f: &Field) -> Result<Field> {
    check_field_op(op, f)?;
    let spec = Spectrum::from_field(f);
    Ok(apply_diffop_spectrum(op, &spec).into_real_field())
}

pub(crate) fn apply_diffop_spectrum(op: &DiffOp, spec: &Spectrum) -> Spectrum {
    let grid = &spec.grid;
    let scale = grid.xi_scale();
    let phase = i_pow(op.order());
    let dim_in = op.dim_e();
    let dim_out = op.dim_f();
    let mut out = Spectrum::zeros(grid.clone(), dim_out);
    let mut symbol = nalgebra::DMatrix::<f64>::zeros(dim_out, dim_in);
    let mut xi = vec![0.0f64; grid.n()];
    grid.for_each_freq(|flat, m| {
        for (x, &mi) in xi.iter_mut().zip(m) {
            *x = scale * mi as f64;
        }
        op.symbol_into(&xi, &mut symbol);
        let src = &spec.data[flat * dim_in..(flat + 1) * dim_in];
        let dst = &mut out.data[flat * dim_out..(flat + 1) * dim_out];
        for i in 0..dim_out {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, s) in src.iter().enumerate() {
                acc += symbol[(i, j)] * s;
            }
            dst[i] = phase * acc;
        }
    });
    out.zero_nyquist();
    out
}

/// Projects every Fourier coefficient onto the kernel of the symbol at its
/// frequency. At the zero frequency the symbol of a homogeneous operator
/// vanishes, so the projector is the identity there.
pub fn project_symbol_kernel(op: &DiffOp, f: &Field) -> Result<Field> {
    check_field_op(op, f)?;
    let bank = KernelProjectorBank::new(op, f.grid(), None)?;
    bank.project(f)
}

/// Pointwise application of a part map: `(A f)(x) = A f(x)`.
pub fn apply_partmap(a: &PartMap, f: &Field) -> Result<Field> {
    if a.dim_v() != f.dim_v {
        return Err(Error::shape(format!(
            "part map domain {} differs from field components {}",
            a.dim_v(),
            f.dim_v
        )));
    }
    Ok(pointwise_matrix(a.matrix(), f))
}

/// Pointwise projection onto `ker A`.
pub fn project_kernel_pointwise(a: &PartMap, f: &Field) -> Result<Field> {
    if a.dim_v() != f.dim_v {
        return Err(Error::shape(format!(
            "part map domain {} differs from field components {}",
            a.dim_v(),
            f.dim_v
        )));
    }
    Ok(pointwise_matrix(a.kernel_projector(), f))
}

fn pointwise_matrix(m: &nalgebra::DMatrix<f64>, f: &Field) -> Field {
    let rows = m.nrows();
    let cols = m.ncols();
    let lat = f.grid.lattice_len();
    let mut values = vec![0.0f64; lat * rows];
    for flat in 0..lat {
        let src = &f.values[flat * cols..(flat + 1) * cols];
        let dst = &mut values[flat * rows..(flat + 1) * rows];
        for i in 0..rows {
            let mut acc = 0.0;
            for (j, s) in src.iter().enumerate() {
                acc += m[(i, j)] * s;
            }
            dst[i] = acc;
        }
    }
    Field {
        grid: f.grid.clone(),
        dim_v: rows,
        values,
        mean_dropped: f.mean_dropped,
    }
}

/// The corrected projection `Pi_B (Pi_{ker A} f)`: the part-map kernel
/// projection acts pointwise in space, the symbol-kernel projection per
/// frequency.
pub fn kms_correction(op: &DiffOp, a: &PartMap, f: &Field) -> Result<Field> {
    if a.dim_v() != op.dim_e() {
        return Err(Error::shape(format!(
            "part map domain {} differs from operator domain {}",
            a.dim_v(),
            op.dim_e()
        )));
    }
    let projected = project_kernel_pointwise(a, f)?;
    project_symbol_kernel(op, &projected)
}

/// Multiplies the spectrum by `|xi|^{-s}` and drops the zero mode. A zero
/// mode above `1e-10` of the spectral mass marks the output `mean_dropped`.
pub fn riesz_potential(f: &Field, s: f64) -> Result<Field> {
    if !(s >= 0.0) {
        return Err(Error::input("riesz potential order must be >= 0"));
    }
    let mut spec = Spectrum::from_field(f);
    let total = spec.l2();
    let dim = spec.dim;
    let mut mean_mass = 0.0f64;
    for c in 0..dim {
        mean_mass += spec.data[c].norm_sqr();
    }
    let mean_dropped = mean_mass.sqrt() > MEAN_FLAG_TOL * total;

    let scale = spec.grid.xi_scale();
    let grid = spec.grid.clone();
    grid.for_each_freq(|flat, m| {
        let norm_sq: f64 = m.iter().map(|&mi| (mi as f64) * (mi as f64)).sum();
        let factor = if norm_sq == 0.0 {
            0.0
        } else {
            (scale * norm_sq.sqrt()).powf(-s)
        };
        for c in 0..dim {
            spec.data[flat * dim + c] *= factor;
        }
    });
    let mut out = spec.into_real_field();
    out.mean_dropped = mean_dropped;
    Ok(out)
}

/// Spectral derivative `d^alpha f`.
pub fn derivative(f: &Field, alpha: &MultiIndex) -> Result<Field> {
    if alpha.dimension() != f.grid.n() {
        return Err(Error::input(format!(
            "multi-index has {} entries, grid dimension is {}",
            alpha.dimension(),
            f.grid.n()
        )));
    }
    if alpha.order() == 0 {
        return Ok(f.clone());
    }
    let mut spec = Spectrum::from_field(f);
    let phase = i_pow(alpha.order());
    let scale = spec.grid.xi_scale();
    let dim = spec.dim;
    let grid = spec.grid.clone();
    let mut xi = vec![0.0f64; grid.n()];
    grid.for_each_freq(|flat, m| {
        for (x, &mi) in xi.iter_mut().zip(m) {
            *x = scale * mi as f64;
        }
        let factor = phase * alpha.monomial(&xi);
        for c in 0..dim {
            spec.data[flat * dim + c] *= factor;
        }
    });
    spec.zero_nyquist();
    Ok(spec.into_real_field())
}

/// Frequency-side L2 norm; equals the grid L2 norm by the discrete
/// Plancherel identity and serves as its independent cross-check.
pub fn spectrum_l2_norm(f: &Field) -> f64 {
    let spec = Spectrum::from_field(f);
    f.grid.period().powf(f.grid.n() as f64 / 2.0) * spec.l2()
}

/// Projection onto the symmetric frequency band: drops the Nyquist planes
/// and keeps everything else. Fields produced by spatial multiplication
/// (windowing) pick up Nyquist content; inequality evaluations identify
/// them with this band-limited interpolant.
pub fn band_limit(f: &Field) -> Field {
    let mut spec = Spectrum::from_field(f);
    spec.zero_nyquist();
    spec.into_real_field()
}

/// Precomputed per-frequency kernel projectors of one operator on one grid.
/// Building the bank runs one SVD per lattice site; applying it is a dense
/// matrix-vector product per site and is reused across ensemble members.
pub struct KernelProjectorBank {
    grid: Grid,
    dim: usize,
    mats: Vec<f64>,
}

impl KernelProjectorBank {
    pub fn new(op: &DiffOp, grid: &Grid, tol: Option<f64>) -> Result<Self> {
        if grid.n() != op.n() {
            return Err(Error::shape(format!(
                "grid dimension {} differs from operator dimension {}",
                grid.n(),
                op.n()
            )));
        }
        let tol = tol.unwrap_or_else(|| default_tol(op.dim_f(), op.dim_e()));
        let dim = op.dim_e();
        let scale = grid.xi_scale();
        let mut mats = vec![0.0f64; grid.lattice_len() * dim * dim];
        let mut symbol = nalgebra::DMatrix::<f64>::zeros(op.dim_f(), dim);
        let mut xi = vec![0.0f64; grid.n()];
        grid.for_each_freq(|flat, m| {
            for (x, &mi) in xi.iter_mut().zip(m) {
                *x = scale * mi as f64;
            }
            op.symbol_into(&xi, &mut symbol);
            let proj = kernel_projector(&symbol, tol);
            let base = flat * dim * dim;
            for i in 0..dim {
                for j in 0..dim {
                    mats[base + i * dim + j] = proj[(i, j)];
                }
            }
        });
        Ok(KernelProjectorBank {
            grid: grid.clone(),
            dim,
            mats,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn apply_spectrum(&self, spec: &Spectrum) -> Spectrum {
        assert_eq!(spec.dim, self.dim);
        assert_eq!(spec.grid, self.grid);
        let dim = self.dim;
        let mut out = Spectrum::zeros(self.grid.clone(), dim);
        for flat in 0..self.grid.lattice_len() {
            let base = flat * dim * dim;
            let src = &spec.data[flat * dim..(flat + 1) * dim];
            let dst = &mut out.data[flat * dim..(flat + 1) * dim];
            for i in 0..dim {
                let row = &self.mats[base + i * dim..base + (i + 1) * dim];
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, s) in src.iter().enumerate() {
                    acc += row[j] * s;
                }
                dst[i] = acc;
            }
        }
        out.zero_nyquist();
        out
    }

    pub fn project(&self, f: &Field) -> Result<Field> {
        if f.dim_v != self.dim || *f.grid() != self.grid {
            return Err(Error::shape("field does not match projector bank"));
        }
        let spec = Spectrum::from_field(f);
        Ok(self.apply_spectrum(&spec).into_real_field())
    }
}
