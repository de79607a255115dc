//! Named operators and part maps.
//!
//! Matrix-valued spaces use row-major vectorization: entry `(i, j)` of a
//! `d x d` matrix sits at component `i * d + j`. The matrix curl and matrix
//! divergence act row-wise, so their coefficient blocks repeat the vector
//! operator once per row.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::symbols::{DiffOp, MultiIndex, PartMap};

/// Names accepted by [`operator_preset`].
pub const OPERATOR_PRESETS: [&str; 5] =
    ["grad", "curl3", "matrix_curl3", "matrix_div", "sym_curl3"];

/// Names accepted by [`partmap_preset`].
pub const PARTMAP_PRESETS: [&str; 5] = ["tr", "dev", "sym", "id", "zero"];

fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Coefficient matrices of the vector curl in three dimensions:
/// `(curl u)_l = eps_{lab} d_a u_b`.
fn curl3_coeffs() -> Vec<(MultiIndex, DMatrix<f64>)> {
    (0..3)
        .map(|a| {
            let mut m = DMatrix::zeros(3, 3);
            for l in 0..3 {
                for b in 0..3 {
                    m[(l, b)] = levi_civita(l, a, b);
                }
            }
            (MultiIndex::unit(3, a), m)
        })
        .collect()
}

/// Row-wise lift of a 3x3 coefficient block to 9x9 (one copy per matrix row).
fn rowwise(block: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(9, 9);
    for i in 0..3 {
        for l in 0..3 {
            for b in 0..3 {
                m[(i * 3 + l, i * 3 + b)] = block[(l, b)];
            }
        }
    }
    m
}

/// The matrix that sends `vec(P)` to `vec((P + P^T)/2)` (row-major).
fn sym_matrix(d: usize) -> DMatrix<f64> {
    let dim = d * d;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, i * d + j)] += 0.5;
            m[(i * d + j, j * d + i)] += 0.5;
        }
    }
    m
}

/// Builds a named operator. All presets live in three spatial dimensions.
pub fn operator_preset(name: &str) -> Result<DiffOp> {
    let op = match name {
        // Gradient on scalar fields: symbol xi as a column vector.
        "grad" => {
            let coeffs = (0..3).map(|a| {
                let mut m = DMatrix::zeros(3, 1);
                m[(a, 0)] = 1.0;
                (MultiIndex::unit(3, a), m)
            });
            DiffOp::new(3, 1, 1, 3, coeffs)?
        }
        "curl3" => DiffOp::new(3, 1, 3, 3, curl3_coeffs())?,
        // Row-wise curl on 3x3 matrix fields.
        "matrix_curl3" => {
            let coeffs = curl3_coeffs()
                .into_iter()
                .map(|(alpha, block)| (alpha, rowwise(&block)));
            DiffOp::new(3, 1, 9, 9, coeffs)?
        }
        // Row-wise divergence: (Div P)_i = d_j P_{ij}.
        "matrix_div" => {
            let coeffs = (0..3).map(|a| {
                let mut m = DMatrix::zeros(3, 9);
                for i in 0..3 {
                    m[(i, i * 3 + a)] = 1.0;
                }
                (MultiIndex::unit(3, a), m)
            });
            DiffOp::new(3, 1, 9, 3, coeffs)?
        }
        // Symmetric part of the matrix curl, kept in the full 3x3 codomain.
        "sym_curl3" => {
            let s = sym_matrix(3);
            let coeffs = curl3_coeffs()
                .into_iter()
                .map(|(alpha, block)| (alpha, &s * rowwise(&block)));
            DiffOp::new(3, 1, 9, 9, coeffs)?
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(op.with_name(name))
}

/// Builds a named part map on a `dim_v`-dimensional value space. The matrix
/// presets (`tr`, `dev`, `sym`) require `dim_v` to be a perfect square.
pub fn partmap_preset(name: &str, dim_v: usize) -> Result<PartMap> {
    let square_side = |name: &str| -> Result<usize> {
        let d = (dim_v as f64).sqrt().round() as usize;
        if d * d != dim_v || d == 0 {
            return Err(Error::input(format!(
                "part map '{name}' needs a square-matrix value space, got dimension {dim_v}"
            )));
        }
        Ok(d)
    };
    let matrix = match name {
        "tr" => {
            let d = square_side("tr")?;
            let mut m = DMatrix::zeros(1, dim_v);
            for i in 0..d {
                m[(0, i * d + i)] = 1.0;
            }
            m
        }
        "dev" => {
            let d = square_side("dev")?;
            let mut m = DMatrix::identity(dim_v, dim_v);
            for i in 0..d {
                for j in 0..d {
                    m[(i * d + i, j * d + j)] -= 1.0 / d as f64;
                }
            }
            m
        }
        "sym" => {
            let d = square_side("sym")?;
            sym_matrix(d)
        }
        "id" => DMatrix::identity(dim_v, dim_v),
        "zero" => DMatrix::zeros(1, dim_v),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(PartMap::new(matrix)?.with_name(name))
}
