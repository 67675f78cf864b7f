//! Cached three-dimensional complex FFTs.
//!
//! Forward transforms are unnormalized; inverse transforms carry the full
//! `1/n^3` factor, so `inverse(forward(f)) == f` up to rounding.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Fft3>>>> = OnceLock::new();

/// Shared plan for an `n^3` transform.
pub(crate) fn plan(n: usize) -> Arc<Fft3> {
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut plans = plans.lock().unwrap_or_else(|e| e.into_inner());
    plans
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Fft3 {
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

impl Fft3 {
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.forward, data);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inverse, data);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    // Transform the contiguous axis, then rotate the axes with a
    // (n) x (n^2) transpose; three rounds bring the layout back to (x, y, z).
    fn run(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut rotated = vec![Complex64::new(0.0, 0.0); data.len()];
        fft.process_with_scratch(data, &mut scratch);
        transpose::transpose(data, &mut rotated, n * n, n);
        fft.process_with_scratch(&mut rotated, &mut scratch);
        transpose::transpose(&rotated, data, n * n, n);
        fft.process_with_scratch(data, &mut scratch);
        transpose::transpose(data, &mut rotated, n * n, n);
        data.copy_from_slice(&rotated);
    }
}
