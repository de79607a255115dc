//! Norm evaluators on grid fields: Lebesgue norms, homogeneous Sobolev
//! norms of nonnegative integer order, Riesz-realized negative-order norms,
//! and Sobolev-conjugate exponent arithmetic.
//!
//! Quadrature is the trapezoidal rule on the periodic lattice (spectrally
//! accurate for smooth periodic integrands). For `q != 2` the negative
//! norm `|g|_{W^{-k,q}} = |I_k g|_{L^q}` is an equivalent norm rather than
//! the textbook dual norm; all reports use this one convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{derivative, riesz_potential, Field};
use crate::symbols::MultiIndex;

/// A norm selection for reports and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum NormSpec {
    Lp { q: f64 },
    HomSobolev { s: u32, q: f64 },
    NegSobolev { s: u32, q: f64 },
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        let q = match self {
            NormSpec::Lp { q } => *q,
            NormSpec::HomSobolev { q, .. } => *q,
            NormSpec::NegSobolev { s, q } => {
                if *s < 1 {
                    return Err(Error::input("negative Sobolev order must be >= 1"));
                }
                *q
            }
        };
        if !q.is_finite() || q < 1.0 {
            return Err(Error::input(format!("exponent must be finite and >= 1, got {q}")));
        }
        Ok(())
    }

    pub fn evaluate(&self, f: &Field) -> Result<f64> {
        self.validate()?;
        match *self {
            NormSpec::Lp { q } => Ok(lp_norm(f, q)),
            NormSpec::HomSobolev { s, q } => hom_sobolev_norm(f, s, q),
            NormSpec::NegSobolev { s, q } => neg_sobolev_norm(f, s, q),
        }
    }
}

/// `(sum_x |f(x)|^p h^n)^{1/p}` with the Euclidean norm on value space.
pub fn lp_norm(f: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "exponent must be >= 1");
    let dim = f.dim_v();
    let cell = f.grid().cell_volume();
    let mut acc = 0.0f64;
    for chunk in f.values().chunks_exact(dim.max(1)) {
        let mag_sq: f64 = chunk.iter().map(|v| v * v).sum();
        acc += mag_sq.sqrt().powf(p);
    }
    (acc * cell).powf(1.0 / p)
}

/// All multi-indices of the given order in `n` variables, lexicographic.
fn multi_indices_of_order(n: usize, order: u32) -> Vec<MultiIndex> {
    fn fill(remaining: u32, slot: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if slot + 1 == current.len() {
            current[slot] = remaining;
            out.push(MultiIndex::new(current.clone()));
            return;
        }
        for v in (0..=remaining).rev() {
            current[slot] = v;
            fill(remaining - v, slot + 1, current, out);
        }
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    fill(order, 0, &mut current, &mut out);
    out
}

/// `( sum_{|alpha| = s} |d^alpha f|_{L^q}^q )^{1/q}`; `s = 0` reduces to
/// the Lebesgue norm. No multinomial weights are applied.
pub fn hom_sobolev_norm(f: &Field, s: u32, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::input(format!("exponent must be >= 1, got {q}")));
    }
    if s == 0 {
        return Ok(lp_norm(f, q));
    }
    let mut acc = 0.0f64;
    for alpha in multi_indices_of_order(f.grid().n(), s) {
        let d = derivative(f, &alpha)?;
        acc += lp_norm(&d, q).powf(q);
    }
    Ok(acc.powf(1.0 / q))
}

/// Riesz-realized negative norm `|I_k f|_{L^q}`; exact for `q = 2` by
/// Plancherel, an equivalent norm otherwise.
pub fn neg_sobolev_norm(f: &Field, k: u32, q: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::input("negative Sobolev order must be >= 1"));
    }
    if !(q >= 1.0) {
        return Err(Error::input(format!("exponent must be >= 1, got {q}")));
    }
    let potential = riesz_potential(f, k as f64)?;
    Ok(lp_norm(&potential, q))
}

/// The Sobolev conjugate `p* = n p / (n - p)` for `1 <= p < n`.
pub fn sobolev_conjugate(p: f64, n: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::input(format!("exponent must be >= 1, got {p}")));
    }
    if p >= n as f64 {
        return Err(Error::input(format!(
            "sobolev conjugate needs p < n, got p = {p}, n = {n}"
        )));
    }
    Ok(n as f64 * p / (n as f64 - p))
}
