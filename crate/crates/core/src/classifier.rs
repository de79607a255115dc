//! Sampled verdicts for the algebraic conditions on operator symbols:
//! ellipticity, constant rank, and cancellation, plain and reduced relative
//! to a part map.
//!
//! The quantifier "for all xi != 0" is discretized over a deterministic
//! direction set (signed axes, normalized +/-1 diagonals, seeded uniform
//! samples), so every verdict is a sampled verdict; generic directions
//! determine ranks almost surely, and a singular-value guard rejects
//! near-rank-drop samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbols::{image_basis, subspace_intersect, DiffOp, PartMap, Subspace};

/// Extra seeded directions used when none are requested explicitly.
pub const DEFAULT_EXTRA_DIRECTIONS: usize = 64;

/// Principal-angle tolerance for folding image intersections.
const INTERSECTION_TOL: f64 = 1e-8;

/// Stop folding after the running intersection has been trivial this many
/// consecutive directions.
const ZERO_STREAK_EXIT: usize = 3;

/// A constant-rank verdict additionally requires the smallest kept singular
/// value to clear `RANK_GUARD_FACTOR * tol * sigma_max`.
const RANK_GUARD_FACTOR: f64 = 10.0;

/// Deterministic set of unit directions: the `2n` signed axes, all `2^n`
/// normalized +/-1 diagonals, and `extra` seeded uniform samples.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    dimension: usize,
    points: Vec<Vec<f64>>,
    seed: u64,
}

impl DirectionSet {
    pub fn new(dimension: usize, extra: usize, seed: u64) -> Self {
        let mut points = Vec::with_capacity(2 * dimension + (1 << dimension) + extra);
        for axis in 0..dimension {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; dimension];
                v[axis] = sign;
                points.push(v);
            }
        }
        let scale = 1.0 / (dimension as f64).sqrt();
        for bits in 0..(1usize << dimension) {
            let v: Vec<f64> = (0..dimension)
                .map(|a| if bits >> a & 1 == 0 { scale } else { -scale })
                .collect();
            points.push(v);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while points.len() < 2 * dimension + (1 << dimension) + extra {
            let v: Vec<f64> = (0..dimension).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue;
            }
            points.push(v.into_iter().map(|x| x / norm).collect());
        }
        DirectionSet {
            dimension,
            points,
            seed,
        }
    }

    /// Axes + diagonals + [`DEFAULT_EXTRA_DIRECTIONS`] seeded samples.
    pub fn standard(dimension: usize, seed: u64) -> Self {
        Self::new(dimension, DEFAULT_EXTRA_DIRECTIONS, seed)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.as_slice())
    }
}

/// Verdicts and evidence gathered over one direction set.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    /// Multiset of observed numerical ranks as (rank, count) pairs.
    pub rank_counts: Vec<(usize, usize)>,
    pub constant_rank: bool,
    /// The common rank `r` when `constant_rank` holds.
    pub rank: Option<usize>,
    pub elliptic: bool,
    pub cancelling: bool,
    /// Dimension of the intersection of symbol images after the fold.
    pub residual_intersection_dim: usize,
    /// Smallest kept singular value over all sampled symbols; absent when
    /// every sampled symbol vanished.
    pub min_positive_singular_value: Option<f64>,
    /// Running intersection dimension after each folded direction.
    pub intersection_trace: Vec<usize>,
    /// Set when classifying a restriction to a zero-dimensional kernel.
    pub degenerate: bool,
    pub directions: usize,
    pub seed: u64,
    pub tol: f64,
    /// Verdicts are decided on sampled directions, not symbolically.
    pub verdict_basis: &'static str,
}

fn singular_values(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Classifies an operator over the given directions with relative rank
/// tolerance `tol`.
pub fn classify(op: &DiffOp, dirs: &DirectionSet, tol: f64) -> Result<ClassificationReport> {
    classify_scaled(op, dirs, tol, None)
}

/// Like [`classify`] but with an explicit reference scale for the rank
/// cut. Restrictions are measured against their parent operator's symbol
/// scale, so an identically vanishing restriction (float noise in the
/// coefficients) classifies as rank 0 everywhere.
fn classify_scaled(
    op: &DiffOp,
    dirs: &DirectionSet,
    tol: f64,
    reference_scale: Option<f64>,
) -> Result<ClassificationReport> {
    if dirs.dimension() != op.n() {
        return Err(Error::input(format!(
            "direction set lives in dimension {}, operator in {}",
            dirs.dimension(),
            op.n()
        )));
    }
    if dirs.is_empty() {
        return Err(Error::input("direction set is empty"));
    }
    if tol <= 0.0 {
        return Err(Error::input("tolerance must be positive"));
    }

    // First pass: singular values and the scale the rank cut refers to.
    let mut sigma_max_global: f64 = 0.0;
    let mut spectra = Vec::with_capacity(dirs.len());
    let mut symbols = Vec::with_capacity(dirs.len());
    for xi in dirs.iter() {
        let m = op.eval_symbol(xi)?;
        let sv = singular_values(&m);
        sigma_max_global = sigma_max_global.max(sv.first().copied().unwrap_or(0.0));
        spectra.push(sv);
        symbols.push(m);
    }
    let scale = reference_scale.unwrap_or(0.0).max(sigma_max_global);
    let cut = tol * scale;

    let mut rank_counts = std::collections::BTreeMap::new();
    let mut min_pos_sv = f64::INFINITY;
    for sv in &spectra {
        let rank = sv.iter().filter(|&&s| s > cut).count();
        if rank > 0 {
            min_pos_sv = min_pos_sv.min(sv[rank - 1]);
        }
        *rank_counts.entry(rank).or_insert(0usize) += 1;
    }

    let ranks: Vec<usize> = rank_counts.keys().copied().collect();
    let uniform_rank = if ranks.len() == 1 { Some(ranks[0]) } else { None };
    // Guard: near-rank-drop directions (tiny kept singular values) disqualify
    // both the constant-rank and the ellipticity verdicts.
    let guard_ok = match uniform_rank {
        Some(0) => true,
        Some(_) => min_pos_sv > RANK_GUARD_FACTOR * cut,
        None => false,
    };
    let constant_rank = uniform_rank.is_some() && guard_ok;
    let rank = if constant_rank { uniform_rank } else { None };
    let elliptic = constant_rank && rank == Some(op.dim_e());

    // Cancellation: fold the intersection of symbol images.
    let mut running = Subspace::full(op.dim_f());
    let mut trace = Vec::new();
    let mut zero_streak = 0usize;
    for (m, sv) in symbols.iter().zip(&spectra) {
        // The global cut decides which directions carry an image at all.
        let smax = sv.first().copied().unwrap_or(0.0);
        let img = if smax <= cut {
            Subspace::zero(op.dim_f())
        } else {
            image_basis(m, cut / smax)
        };
        running = subspace_intersect(&running, &img, INTERSECTION_TOL)?;
        trace.push(running.dim());
        if running.dim() == 0 {
            zero_streak += 1;
            if zero_streak >= ZERO_STREAK_EXIT {
                break;
            }
        } else {
            zero_streak = 0;
        }
    }
    let residual_intersection_dim = running.dim();

    Ok(ClassificationReport {
        rank_counts: rank_counts.into_iter().collect(),
        constant_rank,
        rank,
        elliptic,
        cancelling: residual_intersection_dim == 0,
        residual_intersection_dim,
        min_positive_singular_value: if min_pos_sv.is_finite() {
            Some(min_pos_sv)
        } else {
            None
        },
        intersection_trace: trace,
        degenerate: op.dim_e() == 0,
        directions: dirs.len(),
        seed: dirs.seed(),
        tol,
        verdict_basis: "sampled",
    })
}

/// Classifies the restriction of `op` to `ker A`: reduced ellipticity is
/// maximal rank of the restricted symbols, reduced cancellation is the
/// triviality of the intersection of `B[xi](ker A)`. A zero-dimensional
/// kernel yields a trivially elliptic/cancelling report flagged degenerate.
pub fn reduced_classify(
    op: &DiffOp,
    a: &PartMap,
    dirs: &DirectionSet,
    tol: f64,
) -> Result<ClassificationReport> {
    let restricted = op.restrict_to_kernel(a)?;
    // Rank decisions on the restriction are measured against the parent
    // operator's symbol scale; the restriction may vanish identically.
    let mut parent_scale: f64 = 0.0;
    for xi in dirs.iter() {
        let sv = singular_values(&op.eval_symbol(xi)?);
        parent_scale = parent_scale.max(sv.first().copied().unwrap_or(0.0));
    }
    classify_scaled(&restricted, dirs, tol, Some(parent_scale))
}
