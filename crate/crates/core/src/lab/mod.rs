//! Inequality experiments: scenario catalog, test-field generation,
//! left/right side evaluation, ensemble constant estimation, stochastic
//! ratio ascent, and the no-correction blow-up demonstration.
//!
//! Test fields mimic compactly supported smooth functions: band-limited
//! trigonometric polynomials multiplied by a fixed tensorized smoothstep
//! window supported in the centered half-box. The divergence-free gradient
//! family takes `P = Du` with `u = curl(window * psi)`, which keeps the
//! support, the divergence-freeness of `u`, and the row-wise curl-freeness
//! of `P` all exact at once.
//!
//! Estimated constants are lower bounds on the best constant for this
//! discretization; nothing here certifies an upper bound.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{hom_sobolev_norm, lp_norm, neg_sobolev_norm, sobolev_conjugate};
use crate::spectral::{
    apply_diffop_spectrum, apply_partmap, project_kernel_pointwise, Field, Grid, GridSummary,
    KernelProjectorBank, Spectrum,
};
use crate::symbols::{presets, DiffOp, PartMap};

/// Ratios whose right side falls below `rhs_floor * |f|_{L^2}` are marked
/// degenerate instead of reported as infinities.
pub const DEFAULT_RHS_FLOOR: f64 = 1e-12;

/// SPSA step schedule `a_t = A0 / (1 + t)^0.602`.
const SPSA_A0: f64 = 0.1;
/// SPSA perturbation schedule `c_t = C0 / (1 + t)^0.101`.
const SPSA_C0: f64 = 0.1;

/// One inequality configuration: a part map, an operator, and an
/// integrability exponent with its Sobolev conjugate.
#[derive(Debug, Clone)]
pub struct Scenario {
    label: String,
    a: PartMap,
    b: DiffOp,
    p: f64,
    q_star: f64,
}

impl Scenario {
    pub fn new(label: impl Into<String>, a: PartMap, b: DiffOp, p: f64) -> Result<Self> {
        if a.dim_v() != b.dim_e() {
            return Err(Error::shape(format!(
                "part map acts on dimension {}, operator domain is {}",
                a.dim_v(),
                b.dim_e()
            )));
        }
        let q_star = sobolev_conjugate(p, b.n())?;
        Ok(Scenario {
            label: label.into(),
            a,
            b,
            p,
            q_star,
        })
    }

    /// Same scenario at a different exponent.
    pub fn with_p(self, p: f64) -> Result<Self> {
        Scenario::new(self.label, self.a, self.b, p)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn part_map(&self) -> &PartMap {
        &self.a
    }

    pub fn operator(&self) -> &DiffOp {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.b.n()
    }

    pub fn order(&self) -> u32 {
        self.b.order()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q_star(&self) -> f64 {
        self.q_star
    }

    /// Labels of the shipped catalog combinations.
    pub fn preset_labels() -> &'static [&'static str] {
        &[
            "tr-Curl-3d",
            "tr-Curl-3d-p2",
            "sym-Curl-3d",
            "dev-Div-3d",
            "dev-symCurl-3d",
            "curl-only-3d",
        ]
    }

    pub fn preset(label: &str) -> Result<Scenario> {
        let (pm, op, p) = match label {
            "tr-Curl-3d" => ("tr", "matrix_curl3", 1.0),
            "tr-Curl-3d-p2" => ("tr", "matrix_curl3", 2.0),
            "sym-Curl-3d" => ("sym", "matrix_curl3", 2.0),
            "dev-Div-3d" => ("dev", "matrix_div", 2.0),
            "dev-symCurl-3d" => ("dev", "sym_curl3", 2.0),
            "curl-only-3d" => ("zero", "curl3", 2.0),
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        let b = presets::operator_preset(op)?;
        let a = presets::partmap_preset(pm, b.dim_e())?;
        Scenario::new(label, a, b, p)
    }
}

/// How a test field is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FieldKind {
    /// Windowed band-limited trigonometric polynomial.
    Generic,
    /// Generic field projected pointwise into `ker A`.
    KernelValued,
    /// `P = Du` for a windowed random potential `u`.
    GradientType,
    /// `P = Du` with `u = curl(window * psi)`, exactly divergence-free.
    DivFreeGradient,
}

impl FieldKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "generic" => FieldKind::Generic,
            "kernelValued" | "kernel-valued" => FieldKind::KernelValued,
            "gradientType" | "gradient-type" => FieldKind::GradientType,
            "divFreeGradient" | "div-free-gradient" => FieldKind::DivFreeGradient,
            other => return Err(Error::input(format!("unknown field kind '{other}'"))),
        })
    }
}

/// Deterministic ensemble description.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub count: usize,
    pub max_frequency: i64,
    pub seed: u64,
    pub field_kind: FieldKind,
    pub rhs_floor: f64,
}

impl EnsembleConfig {
    pub fn new(count: usize, max_frequency: i64, seed: u64, field_kind: FieldKind) -> Self {
        EnsembleConfig {
            count,
            max_frequency,
            seed,
            field_kind,
            rhs_floor: DEFAULT_RHS_FLOOR,
        }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if self.max_frequency < 1 {
            return Err(Error::input("max frequency must be >= 1"));
        }
        if self.max_frequency >= grid.points() as i64 / 2 {
            return Err(Error::input(format!(
                "max frequency {} aliases on a grid with {} points per axis",
                self.max_frequency,
                grid.points()
            )));
        }
        if !(self.rhs_floor >= 0.0) {
            return Err(Error::input("rhs floor must be nonnegative"));
        }
        Ok(())
    }
}

/// One inequality evaluation with provenance.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub degenerate: bool,
    pub rhs_floor_abs: f64,
    pub grid: GridSummary,
    pub seed: Option<u64>,
    pub index: Option<u64>,
    pub field_kind: Option<FieldKind>,
}

impl RatioReport {
    fn stamp(mut self, cfg: &EnsembleConfig, index: u64) -> Self {
        self.seed = Some(cfg.seed);
        self.index = Some(index);
        self.field_kind = Some(cfg.field_kind);
        self
    }
}

fn floored_ratio(lhs: f64, rhs: f64, floor_abs: f64) -> (f64, bool) {
    if rhs > floor_abs {
        (lhs / rhs, false)
    } else if floor_abs > 0.0 {
        (lhs / floor_abs, true)
    } else {
        (0.0, true)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-member RNG seed; parallel and serial ensemble runs agree because
/// members never share a stream.
fn member_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5A5A_A5A5)))
}

/// Degree-7 smoothstep ramp on [0, 1].
fn smoothstep7(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let t2 = t * t;
        t2 * t2 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t2 * t)
    }
}

/// Tensorized window supported exactly in the centered half-box
/// `[L/4, 3L/4]^n`, ramping with the degree-7 smoothstep.
pub fn cutoff_value(x: &[f64], period: f64) -> f64 {
    x.iter()
        .map(|&xi| {
            let t = 4.0 * xi / period - 1.0;
            smoothstep7(1.0 - (t - 1.0).abs())
        })
        .product()
}

/// The cutoff window sampled on a grid (one component).
pub fn cutoff_window(grid: &Grid) -> Field {
    let period = grid.period();
    Field::from_fn(grid.clone(), 1, |x, _| cutoff_value(x, period))
}

fn apply_cutoff(f: &mut Field) {
    let grid = f.grid().clone();
    let window = cutoff_window(&grid);
    let dim = f.dim_v();
    let values = f.values_mut();
    for (flat, &w) in window.values().iter().enumerate() {
        for c in 0..dim {
            values[flat * dim + c] *= w;
        }
    }
}

/// Integer modes with `|m|_inf <= max_frequency`, zero excluded, in a fixed
/// lexicographic order independent of any grid.
fn band_modes(n: usize, max_frequency: i64) -> Vec<Vec<i64>> {
    let mut modes = Vec::new();
    let mut current = vec![-max_frequency; n];
    loop {
        if current.iter().any(|&m| m != 0) {
            modes.push(current.clone());
        }
        let mut axis = n;
        while axis > 0 {
            axis -= 1;
            current[axis] += 1;
            if current[axis] <= max_frequency {
                break;
            }
            current[axis] = -max_frequency;
            if axis == 0 {
                return modes;
            }
        }
    }
}

/// Places per-mode complex coefficients on the lattice, enforces conjugate
/// symmetry, and inverts. The coefficient slice is ordered mode-major,
/// component-minor, (re, im) innermost — the same order in which
/// [`random_band_limited`] draws.
fn field_from_coefficients(
    grid: &Grid,
    dim: usize,
    modes: &[Vec<i64>],
    coeffs: &[f64],
) -> Field {
    debug_assert_eq!(coeffs.len(), modes.len() * dim * 2);
    let mut raw = Spectrum::zeros(grid.clone(), dim);
    for (mi, m) in modes.iter().enumerate() {
        let flat = grid.lattice_index_of_freq(m);
        for c in 0..dim {
            let base = (mi * dim + c) * 2;
            raw.data[flat * dim + c] = Complex64::new(coeffs[base], coeffs[base + 1]);
        }
    }
    let mut sym = raw.clone();
    let mut neg = vec![0i64; grid.n()];
    for m in modes {
        let flat = grid.lattice_index_of_freq(m);
        for (t, &mi) in neg.iter_mut().zip(m.iter()) {
            *t = -mi;
        }
        let mirror = grid.lattice_index_of_freq(&neg);
        for c in 0..dim {
            sym.data[flat * dim + c] =
                0.5 * (raw.data[flat * dim + c] + raw.data[mirror * dim + c].conj());
        }
    }
    sym.into_real_field()
}

/// Mean-zero band-limited random field; the coefficient draws depend only
/// on `(seed, index, max_frequency, dim)`, never on the grid, so the same
/// continuum field can be sampled at several resolutions.
pub fn random_band_limited(
    grid: &Grid,
    dim: usize,
    max_frequency: i64,
    seed: u64,
    index: u64,
) -> Result<Field> {
    if max_frequency < 1 || max_frequency >= grid.points() as i64 / 2 {
        return Err(Error::input(format!(
            "max frequency {max_frequency} invalid for {} points per axis",
            grid.points()
        )));
    }
    let modes = band_modes(grid.n(), max_frequency);
    let mut rng = ChaCha8Rng::seed_from_u64(member_seed(seed, index));
    let coeffs: Vec<f64> = (0..modes.len() * dim * 2)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    Ok(field_from_coefficients(grid, dim, &modes, &coeffs))
}

/// Jacobian `P_{ij} = d_j u_i` computed per frequency.
fn jacobian_spectrum(u: &Spectrum) -> Spectrum {
    let n = u.grid.n();
    let dim_out = n * n;
    let scale = u.grid.xi_scale();
    let grid = u.grid.clone();
    let mut out = Spectrum::zeros(grid.clone(), dim_out);
    grid.for_each_freq(|flat, m| {
        for i in 0..n {
            let ui = u.data[flat * n + i];
            for (j, &mj) in m.iter().enumerate() {
                let xi_j = scale * mj as f64;
                out.data[flat * dim_out + i * n + j] = Complex64::new(0.0, xi_j) * ui;
            }
        }
    });
    out.zero_nyquist();
    out
}

/// Spectral curl of a 3-component potential, or the rotated gradient of a
/// scalar stream function in two dimensions. Both outputs are exactly
/// divergence-free per frequency.
fn div_free_from_potential(psi: &Spectrum) -> Result<Spectrum> {
    let n = psi.grid.n();
    let scale = psi.grid.xi_scale();
    let grid = psi.grid.clone();
    match n {
        3 => {
            let mut out = Spectrum::zeros(grid.clone(), 3);
            grid.for_each_freq(|flat, m| {
                let xi = [
                    scale * m[0] as f64,
                    scale * m[1] as f64,
                    scale * m[2] as f64,
                ];
                let p = &psi.data[flat * 3..flat * 3 + 3];
                let cross = [
                    xi[1] * p[2] - xi[2] * p[1],
                    xi[2] * p[0] - xi[0] * p[2],
                    xi[0] * p[1] - xi[1] * p[0],
                ];
                for (i, v) in cross.into_iter().enumerate() {
                    out.data[flat * 3 + i] = Complex64::new(0.0, 1.0) * v;
                }
            });
            out.zero_nyquist();
            Ok(out)
        }
        2 => {
            let mut out = Spectrum::zeros(grid.clone(), 2);
            grid.for_each_freq(|flat, m| {
                let p = psi.data[flat];
                out.data[flat * 2] = Complex64::new(0.0, scale * m[1] as f64) * p;
                out.data[flat * 2 + 1] = Complex64::new(0.0, -scale * m[0] as f64) * p;
            });
            out.zero_nyquist();
            Ok(out)
        }
        other => Err(Error::input(format!(
            "divergence-free potentials are implemented for n = 2 or 3, got {other}"
        ))),
    }
}

/// Deterministic test field number `index` for a scenario.
pub fn gen_field(
    scenario: &Scenario,
    grid: &Grid,
    cfg: &EnsembleConfig,
    index: u64,
) -> Result<Field> {
    cfg.validate(grid)?;
    if grid.n() != scenario.n() {
        return Err(Error::shape("grid dimension differs from scenario"));
    }
    let dim_v = scenario.operator().dim_e();
    let n = grid.n();
    match cfg.field_kind {
        FieldKind::Generic => {
            let mut f = random_band_limited(grid, dim_v, cfg.max_frequency, cfg.seed, index)?;
            apply_cutoff(&mut f);
            Ok(f)
        }
        FieldKind::KernelValued => {
            let mut f = random_band_limited(grid, dim_v, cfg.max_frequency, cfg.seed, index)?;
            apply_cutoff(&mut f);
            project_kernel_pointwise(scenario.part_map(), &f)
        }
        FieldKind::GradientType => {
            if dim_v != n * n {
                return Err(Error::shape(
                    "gradient-type fields need a square-matrix value space",
                ));
            }
            let mut u = random_band_limited(grid, n, cfg.max_frequency, cfg.seed, index)?;
            apply_cutoff(&mut u);
            let spec = Spectrum::from_field(&u);
            Ok(jacobian_spectrum(&spec).into_real_field())
        }
        FieldKind::DivFreeGradient => {
            if dim_v != n * n {
                return Err(Error::shape(
                    "divergence-free gradient fields need a square-matrix value space",
                ));
            }
            let pot_dim = if n == 3 { 3 } else { 1 };
            let mut psi = random_band_limited(grid, pot_dim, cfg.max_frequency, cfg.seed, index)?;
            apply_cutoff(&mut psi);
            let u = div_free_from_potential(&Spectrum::from_field(&psi))?;
            Ok(jacobian_spectrum(&u).into_real_field())
        }
    }
}

/// A scenario bound to a grid with its per-frequency kernel projectors
/// precomputed; reuse this across ensemble members.
pub struct ScenarioEngine {
    scenario: Scenario,
    grid: Grid,
    bank: KernelProjectorBank,
}

impl ScenarioEngine {
    pub fn new(scenario: Scenario, grid: Grid) -> Result<Self> {
        let bank = KernelProjectorBank::new(scenario.operator(), &grid, None)?;
        Ok(ScenarioEngine {
            scenario,
            grid,
            bank,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn check_field(&self, f: &Field) -> Result<()> {
        if f.dim_v() != self.scenario.operator().dim_e() || *f.grid() != self.grid {
            return Err(Error::shape("field does not match scenario engine"));
        }
        Ok(())
    }

    /// The correction `Pi_B (Pi_{ker A} f)`.
    pub fn correction(&self, f: &Field) -> Result<Field> {
        self.check_field(f)?;
        let kernel_part = project_kernel_pointwise(self.scenario.part_map(), f)?;
        self.bank.project(&kernel_part)
    }

    /// Corrected field `f - Pi_B Pi_{ker A} f` and the operator image `B f`,
    /// sharing one forward transform.
    fn corrected_and_image(&self, f: &Field) -> Result<(Field, Field)> {
        let kernel_part = project_kernel_pointwise(self.scenario.part_map(), f)?;
        let mut corr_spec = self.bank.apply_spectrum(&Spectrum::from_field(&kernel_part));
        // Inputs are identified with their symmetric-band interpolants so
        // the left and right sides see the same model space.
        let mut spec = Spectrum::from_field(f);
        spec.zero_nyquist();
        for (c, s) in corr_spec.data.iter_mut().zip(&spec.data) {
            *c = s - *c;
        }
        let corrected = corr_spec.into_real_field();
        let image = apply_diffop_spectrum(self.scenario.operator(), &spec).into_real_field();
        Ok((corrected, image))
    }

    /// Main-inequality sides at exponents `(q*, p)`:
    /// `lhs = |f - correction|_{W^{k-1,q*}}`,
    /// `rhs = |A f|_{W^{k-1,q*}} + |B f|_{L^p}`.
    pub fn kms_sides(&self, f: &Field, rhs_floor: f64) -> Result<RatioReport> {
        self.check_field(f)?;
        let s = self.scenario.order() - 1;
        let q_star = self.scenario.q_star();
        let (corrected, image) = self.corrected_and_image(f)?;
        let a_f = apply_partmap(self.scenario.part_map(), f)?;
        let lhs = hom_sobolev_norm(&corrected, s, q_star)?;
        let rhs = hom_sobolev_norm(&a_f, s, q_star)? + lp_norm(&image, self.scenario.p());
        let floor_abs = rhs_floor * lp_norm(f, 2.0);
        let (ratio, degenerate) = floored_ratio(lhs, rhs, floor_abs);
        Ok(RatioReport {
            lhs,
            rhs,
            ratio,
            degenerate,
            rhs_floor_abs: floor_abs,
            grid: self.grid.summary(),
            seed: None,
            index: None,
            field_kind: None,
        })
    }

    /// Single-exponent sides with the negative norm on the right:
    /// `lhs = |f - correction|_{L^q}`,
    /// `rhs = |A f|_{L^q} + |B f|_{W^{-k,q}}`.
    pub fn lemma_sides(&self, f: &Field, q: f64, rhs_floor: f64) -> Result<RatioReport> {
        self.check_field(f)?;
        let k = self.scenario.order();
        let (corrected, image) = self.corrected_and_image(f)?;
        let a_f = apply_partmap(self.scenario.part_map(), f)?;
        let lhs = lp_norm(&corrected, q);
        let rhs = lp_norm(&a_f, q) + neg_sobolev_norm(&image, k, q)?;
        let floor_abs = rhs_floor * lp_norm(f, 2.0);
        let (ratio, degenerate) = floored_ratio(lhs, rhs, floor_abs);
        Ok(RatioReport {
            lhs,
            rhs,
            ratio,
            degenerate,
            rhs_floor_abs: floor_abs,
            grid: self.grid.summary(),
            seed: None,
            index: None,
            field_kind: None,
        })
    }
}

/// One-shot main-inequality evaluation; builds the projector bank each
/// call, so prefer [`ScenarioEngine`] inside loops.
pub fn kms_sides(scenario: &Scenario, f: &Field) -> Result<RatioReport> {
    ScenarioEngine::new(scenario.clone(), f.grid().clone())?.kms_sides(f, DEFAULT_RHS_FLOOR)
}

/// One-shot single-exponent evaluation, as [`kms_sides`].
pub fn lemma_sides(scenario: &Scenario, f: &Field, q: f64) -> Result<RatioReport> {
    ScenarioEngine::new(scenario.clone(), f.grid().clone())?.lemma_sides(f, q, DEFAULT_RHS_FLOOR)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuantilePoint {
    pub q: f64,
    pub value: f64,
}

/// Ensemble summary: the max ratio is a lower bound for the best constant
/// of this scenario at this discretization.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantEstimate {
    pub label: String,
    pub p: f64,
    pub q_star: f64,
    pub grid: GridSummary,
    pub count: usize,
    pub valid: usize,
    pub degenerate: usize,
    pub seed: u64,
    pub field_kind: FieldKind,
    pub max_frequency: i64,
    pub max_ratio: f64,
    pub argmax_index: u64,
    pub quantiles: Vec<QuantilePoint>,
}

fn quantiles_of(sorted: &[f64], probes: &[f64]) -> Vec<QuantilePoint> {
    probes
        .iter()
        .map(|&q| {
            let pos = q * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            QuantilePoint {
                q,
                value: sorted[lo] * (1.0 - frac) + sorted[hi] * frac,
            }
        })
        .collect()
}

enum SidesMode {
    Kms,
    Lemma { q: f64 },
}

fn run_ensemble(
    scenario: &Scenario,
    grid: &Grid,
    cfg: &EnsembleConfig,
    mode: SidesMode,
) -> Result<ConstantEstimate> {
    if cfg.count < 1 {
        return Err(Error::input("ensemble count must be >= 1"));
    }
    cfg.validate(grid)?;
    let engine = ScenarioEngine::new(scenario.clone(), grid.clone())?;
    let mut ratios = Vec::with_capacity(cfg.count);
    let mut degenerate = 0usize;
    for index in 0..cfg.count as u64 {
        let f = gen_field(scenario, grid, cfg, index)?;
        let report = match mode {
            SidesMode::Kms => engine.kms_sides(&f, cfg.rhs_floor)?,
            SidesMode::Lemma { q } => engine.lemma_sides(&f, q, cfg.rhs_floor)?,
        }
        .stamp(cfg, index);
        if report.degenerate {
            degenerate += 1;
        } else {
            ratios.push((index, report.ratio));
        }
    }
    if ratios.is_empty() {
        return Err(Error::Degenerate(format!(
            "all {} ensemble members of '{}' were degenerate",
            cfg.count,
            scenario.label()
        )));
    }
    let (argmax_index, max_ratio) = ratios
        .iter()
        .fold((ratios[0].0, f64::NEG_INFINITY), |acc, &(i, r)| {
            if r > acc.1 {
                (i, r)
            } else {
                acc
            }
        });
    let mut sorted: Vec<f64> = ratios.iter().map(|&(_, r)| r).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    Ok(ConstantEstimate {
        label: scenario.label().to_string(),
        p: scenario.p(),
        q_star: scenario.q_star(),
        grid: grid.summary(),
        count: cfg.count,
        valid: ratios.len(),
        degenerate,
        seed: cfg.seed,
        field_kind: cfg.field_kind,
        max_frequency: cfg.max_frequency,
        max_ratio,
        argmax_index,
        quantiles: quantiles_of(&sorted, &[0.25, 0.5, 0.75, 0.9]),
    })
}

/// Max and quantiles of the main-inequality ratio over a deterministic
/// ensemble, skipping degenerate members.
pub fn estimate_constant(
    scenario: &Scenario,
    grid: &Grid,
    cfg: &EnsembleConfig,
) -> Result<ConstantEstimate> {
    run_ensemble(scenario, grid, cfg, SidesMode::Kms)
}

/// Ensemble over the single-exponent sides with the negative norm at `q`.
pub fn estimate_constant_lemma(
    scenario: &Scenario,
    grid: &Grid,
    cfg: &EnsembleConfig,
    q: f64,
) -> Result<ConstantEstimate> {
    run_ensemble(scenario, grid, cfg, SidesMode::Lemma { q })
}

/// Result of the stochastic ratio ascent.
#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub label: String,
    pub grid: GridSummary,
    pub seed: u64,
    pub iterations: usize,
    pub max_frequency: i64,
    pub start_ratio: f64,
    pub best_ratio: f64,
    pub improved: bool,
    pub evaluations: usize,
    pub degenerate_evaluations: usize,
    #[serde(skip)]
    pub best_field: Field,
}

/// Simultaneous-perturbation ascent of `lhs / (rhs + floor)` over the
/// windowed Fourier coefficients of a generic field. Iteration 1 evaluates
/// the seed field; every later iteration takes one SPSA step (two
/// evaluations) and re-normalizes the coefficients so the right-hand side
/// stays at its starting value. Only non-degenerate evaluations compete
/// for the returned best ratio.
pub fn adversarial_search(
    scenario: &Scenario,
    grid: &Grid,
    iters: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    let max_frequency = (grid.points() as i64 / 4).max(1);
    adversarial_search_with(scenario, grid, iters, seed, max_frequency, DEFAULT_RHS_FLOOR)
}

pub fn adversarial_search_with(
    scenario: &Scenario,
    grid: &Grid,
    iters: usize,
    seed: u64,
    max_frequency: i64,
    rhs_floor: f64,
) -> Result<SearchOutcome> {
    if iters < 1 {
        return Err(Error::input("search needs at least one iteration"));
    }
    let cfg = EnsembleConfig {
        count: 1,
        max_frequency,
        seed,
        field_kind: FieldKind::Generic,
        rhs_floor,
    };
    cfg.validate(grid)?;
    if grid.n() != scenario.n() {
        return Err(Error::shape("grid dimension differs from scenario"));
    }
    let engine = ScenarioEngine::new(scenario.clone(), grid.clone())?;
    let dim_v = scenario.operator().dim_e();
    let modes = band_modes(grid.n(), max_frequency);

    // Seed coefficients match gen_field(index = 0) for the same seed.
    let mut rng = ChaCha8Rng::seed_from_u64(member_seed(seed, 0));
    let mut theta: Vec<f64> = (0..modes.len() * dim_v * 2)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let mut spsa_rng = ChaCha8Rng::seed_from_u64(member_seed(seed, 0xD1CE));

    let mut evaluations = 0usize;
    let mut degenerate_evaluations = 0usize;
    let mut best_ratio = f64::NEG_INFINITY;
    let mut best_field: Option<Field> = None;

    let eval = |theta: &[f64],
                    evaluations: &mut usize,
                    degenerate_evaluations: &mut usize,
                    best_ratio: &mut f64,
                    best_field: &mut Option<Field>|
     -> Result<(f64, f64, f64)> {
        let mut f = field_from_coefficients(grid, dim_v, &modes, theta);
        apply_cutoff(&mut f);
        let report = engine.kms_sides(&f, rhs_floor)?;
        *evaluations += 1;
        if report.degenerate {
            *degenerate_evaluations += 1;
        } else if report.ratio > *best_ratio {
            *best_ratio = report.ratio;
            *best_field = Some(f);
        }
        let objective = if report.rhs + report.rhs_floor_abs > 0.0 {
            report.lhs / (report.rhs + report.rhs_floor_abs)
        } else {
            0.0
        };
        Ok((objective, report.rhs, report.ratio))
    };

    let (_, rhs0, start_ratio) = eval(
        &theta,
        &mut evaluations,
        &mut degenerate_evaluations,
        &mut best_ratio,
        &mut best_field,
    )?;

    let mut delta = vec![0.0f64; theta.len()];
    for t in 1..iters {
        let a_t = SPSA_A0 / (1.0 + t as f64).powf(0.602);
        let c_t = SPSA_C0 / (1.0 + t as f64).powf(0.101);
        for d in delta.iter_mut() {
            *d = if spsa_rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let plus: Vec<f64> = theta
            .iter()
            .zip(&delta)
            .map(|(&x, &d)| x + c_t * d)
            .collect();
        let minus: Vec<f64> = theta
            .iter()
            .zip(&delta)
            .map(|(&x, &d)| x - c_t * d)
            .collect();
        let (j_plus, _, _) = eval(
            &plus,
            &mut evaluations,
            &mut degenerate_evaluations,
            &mut best_ratio,
            &mut best_field,
        )?;
        let (j_minus, _, _) = eval(
            &minus,
            &mut evaluations,
            &mut degenerate_evaluations,
            &mut best_ratio,
            &mut best_field,
        )?;
        let slope = (j_plus - j_minus) / (2.0 * c_t);
        for (x, &d) in theta.iter_mut().zip(&delta) {
            *x += a_t * slope * d;
        }
        // Pin the right-hand side back to its starting value so the
        // coefficient scale stays comparable across iterations.
        let (_, rhs_now, _) = eval(
            &theta,
            &mut evaluations,
            &mut degenerate_evaluations,
            &mut best_ratio,
            &mut best_field,
        )?;
        if rhs_now > 0.0 && rhs0 > 0.0 {
            let rescale = rhs0 / rhs_now;
            for x in theta.iter_mut() {
                *x *= rescale;
            }
        }
    }

    let best_field = match best_field {
        Some(f) => f,
        None => {
            // Every evaluation was degenerate; report the seed field.
            let mut f = field_from_coefficients(grid, dim_v, &modes, &theta);
            apply_cutoff(&mut f);
            f
        }
    };
    let improved = best_ratio > start_ratio;
    Ok(SearchOutcome {
        label: scenario.label().to_string(),
        grid: grid.summary(),
        seed,
        iterations: iters,
        max_frequency,
        start_ratio,
        best_ratio: if best_ratio.is_finite() { best_ratio } else { 0.0 },
        improved,
        evaluations,
        degenerate_evaluations,
        best_field,
    })
}

/// Fixed seed of the demonstration family.
const DEMO_SEED: u64 = 7;

/// Why the correction is necessary: the `j`-th divergence-free gradient
/// field annihilates both right-hand terms of the trace/curl scenario, so
/// the uncorrected ratio blows up to the floor while the corrected left
/// side vanishes.
#[derive(Debug, Clone, Serialize)]
pub struct NullFamilyReport {
    pub label: String,
    pub j: u64,
    pub grid: GridSummary,
    pub field_lqstar: f64,
    pub uncorrected: RatioReport,
    pub corrected: RatioReport,
    /// `|f - correction|_{L^{q*}} / |f|_{L^{q*}}`.
    pub corrected_lhs_rel: f64,
}

pub fn null_family_demo(grid: &Grid, j: u64) -> Result<NullFamilyReport> {
    if grid.n() != 3 {
        return Err(Error::input("the demonstration family lives in n = 3"));
    }
    let scenario = Scenario::preset("tr-Curl-3d")?;
    let cfg = EnsembleConfig::new(
        1,
        (grid.points() as i64 / 4).max(1),
        DEMO_SEED,
        FieldKind::DivFreeGradient,
    );
    let field = gen_field(&scenario, grid, &cfg, j)?;
    let engine = ScenarioEngine::new(scenario.clone(), grid.clone())?;

    // Uncorrected sides: |P|_{q*} against |tr P|_{q*} + |Curl P|_{L^p}.
    let q_star = scenario.q_star();
    let lhs = lp_norm(&field, q_star);
    let a_f = apply_partmap(scenario.part_map(), &field)?;
    let image = crate::spectral::apply_diffop(scenario.operator(), &field)?;
    let rhs = lp_norm(&a_f, q_star) + lp_norm(&image, scenario.p());
    let floor_abs = cfg.rhs_floor * lp_norm(&field, 2.0);
    let (ratio, degenerate) = floored_ratio(lhs, rhs, floor_abs);
    let uncorrected = RatioReport {
        lhs,
        rhs,
        ratio,
        degenerate,
        rhs_floor_abs: floor_abs,
        grid: grid.summary(),
        seed: Some(DEMO_SEED),
        index: Some(j),
        field_kind: Some(FieldKind::DivFreeGradient),
    }
    .stamp(&cfg, j);

    let corrected = engine.kms_sides(&field, cfg.rhs_floor)?.stamp(&cfg, j);
    let corrected_lhs_rel = if lhs > 0.0 { corrected.lhs / lhs } else { 0.0 };
    Ok(NullFamilyReport {
        label: scenario.label().to_string(),
        j,
        grid: grid.summary(),
        field_lqstar: lhs,
        uncorrected,
        corrected,
        corrected_lhs_rel,
    })
}
