//! Minimal n-dimensional FFT driver over flat buffers, built on 1-D
//! transforms from `rustfft`. Data layout matches `Field`: axes row-major
//! (axis 0 slowest), value components fastest-varying.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

static PLANS: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();

fn plans(len: usize) -> PlanPair {
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry(len)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(len), planner.plan_fft_inverse(len))
        })
        .clone()
}

/// In-place FFT along every axis of an `n_axes`-dimensional cube with
/// `points` samples per axis and `dim` interleaved components. The forward
/// direction normalizes by `points^n_axes`, so forward output holds Fourier
/// coefficients and the inverse is a plain evaluation sum.
pub(crate) fn transform(
    data: &mut [Complex64],
    n_axes: usize,
    points: usize,
    dim: usize,
    forward: bool,
) {
    debug_assert_eq!(data.len(), points.pow(n_axes as u32) * dim);
    let (fwd, inv) = plans(points);
    let plan = if forward { fwd } else { inv };
    let mut line = vec![Complex64::new(0.0, 0.0); points];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];

    for axis in 0..n_axes {
        let post = points.pow((n_axes - 1 - axis) as u32);
        let pre = points.pow(axis as u32);
        let stride = post * dim;
        for ip in 0..pre {
            let block = ip * points * stride;
            for jp in 0..post {
                for c in 0..dim {
                    let base = block + jp * dim + c;
                    for (t, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + t * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (t, slot) in line.iter().enumerate() {
                        data[base + t * stride] = *slot;
                    }
                }
            }
        }
    }

    if forward {
        let scale = 1.0 / points.pow(n_axes as u32) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}
