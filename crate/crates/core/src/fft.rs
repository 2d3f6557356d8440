//! Unnormalized 3D FFTs over cubic row-major arrays, built from 1D rustfft
//! plans. Plans are cached per size and shared between threads.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft(n, FftDirection::Forward),
                inverse: planner.plan_fft(n, FftDirection::Inverse),
            })
        })
        .clone()
}

/// Forward transform: `X_k = sum_m x_m exp(-2 pi i k.m / n)`.
pub fn forward(data: &mut [Complex64], n: usize) {
    let p = plans(n);
    transform(data, n, p.forward.as_ref());
}

/// Inverse transform without the `1/n^3` factor: `x_m = sum_k X_k exp(+2 pi i k.m / n)`.
pub fn inverse(data: &mut [Complex64], n: usize) {
    let p = plans(n);
    transform(data, n, p.inverse.as_ref());
}

fn transform(data: &mut [Complex64], n: usize, fft: &dyn Fft<f64>) {
    assert_eq!(data.len(), n * n * n, "array is not n^3");
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::new(0.0, 0.0); n];

    // last axis is contiguous
    for chunk in data.chunks_exact_mut(n) {
        fft.process_with_scratch(chunk, &mut scratch);
    }
    // middle axis
    for i0 in 0..n {
        for i2 in 0..n {
            for i1 in 0..n {
                line[i1] = data[(i0 * n + i1) * n + i2];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for i1 in 0..n {
                data[(i0 * n + i1) * n + i2] = line[i1];
            }
        }
    }
    // first axis
    for i1 in 0..n {
        for i2 in 0..n {
            for i0 in 0..n {
                line[i0] = data[(i0 * n + i1) * n + i2];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for i0 in 0..n {
                data[(i0 * n + i1) * n + i2] = line[i0];
            }
        }
    }
}
