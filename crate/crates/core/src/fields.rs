//! Data builders: seeded random solenoidal fields, homogeneous and Gaussian
//! spectra, single cosine modes.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PmnsError, Result};
use crate::grid::{FrequencyGrid, SpectralVectorField};
use crate::pm::pm_norm;
use crate::symbols::{leray_apply, leray_matrix};

fn zero() -> [Complex64; 3] {
    [Complex64::new(0.0, 0.0); 3]
}

/// Scales `f` so that its PM^2 norm equals `target` (a zero field stays zero).
pub fn normalize_pm2(f: &SpectralVectorField, target: f64) -> SpectralVectorField {
    let n = pm_norm(f, 2.0).expect("a = 2 is valid").value;
    if n == 0.0 {
        f.clone()
    } else {
        f.scale(target / n)
    }
}

/// `amplitude |xi|^{-2} P(xi) e`: the spectrum of a degree -1 homogeneous field.
pub fn homogeneous_field(grid: FrequencyGrid, e: [f64; 3], amplitude: f64) -> SpectralVectorField {
    SpectralVectorField::from_fn(grid, |idx| {
        if idx == 0 || grid.is_nyquist(idx) {
            return zero();
        }
        let xi = grid.xi_at(idx);
        let p = leray_matrix(xi);
        let w = amplitude / grid.xi_sq_at(idx);
        let mut v = zero();
        for j in 0..3 {
            v[j] = Complex64::new(w * (p[j][0] * e[0] + p[j][1] * e[1] + p[j][2] * e[2]), 0.0);
        }
        v
    })
}

/// `amplitude exp(-|xi|^2 / (2 width^2)) P(xi) e`.
pub fn gaussian_field(grid: FrequencyGrid, e: [f64; 3], amplitude: f64, width: f64) -> SpectralVectorField {
    let inv = 1.0 / (2.0 * width * width);
    SpectralVectorField::from_fn(grid, |idx| {
        if idx == 0 || grid.is_nyquist(idx) {
            return zero();
        }
        let p = leray_matrix(grid.xi_at(idx));
        let w = amplitude * (-grid.xi_sq_at(idx) * inv).exp();
        let mut v = zero();
        for j in 0..3 {
            v[j] = Complex64::new(w * (p[j][0] * e[0] + p[j][1] * e[1] + p[j][2] * e[2]), 0.0);
        }
        v
    })
}

/// `amplitude cos(x . xi_k) pol`: coefficient `amplitude (2 pi)^{3/2} / (2 delta_xi^3)` at `+-k`.
pub fn cosine_mode(grid: FrequencyGrid, k: [i64; 3], pol: [f64; 3], amplitude: f64) -> Result<SpectralVectorField> {
    let plus = grid
        .index_of(k)
        .ok_or_else(|| PmnsError::Parameter(format!("mode {k:?} is off the lattice")))?;
    let minus = grid
        .index_of([-k[0], -k[1], -k[2]])
        .ok_or_else(|| PmnsError::Parameter(format!("mode {k:?} has no partner on the lattice")))?;
    if plus == 0 {
        return Err(PmnsError::Parameter("cosine mode needs k != 0".into()));
    }
    let c = amplitude / (2.0 * crate::grid::fourier_norm() * grid.delta_xi().powi(3));
    let mut f = SpectralVectorField::zeros(grid);
    let v = [
        Complex64::new(c * pol[0], 0.0),
        Complex64::new(c * pol[1], 0.0),
        Complex64::new(c * pol[2], 0.0),
    ];
    f.set(plus, v);
    f.set(minus, v);
    Ok(f)
}

/// Spectral envelope of a random field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// `|xi|^{-2} exp(-|xi|^2 / (2 width^2))`
    Gaussian { width: f64 },
    /// `|xi|^{-2}` restricted to `|xi| >= xi_min`
    HighPass { xi_min: f64 },
    /// `|xi|^{-2}` restricted to `|xi| <= xi_max`
    LowPass { xi_max: f64 },
}

impl Envelope {
    fn weight(&self, s: f64) -> f64 {
        match *self {
            Envelope::Gaussian { width } => (-s / (2.0 * width * width)).exp() / s,
            Envelope::HighPass { xi_min } => {
                if s >= xi_min * xi_min {
                    1.0 / s
                } else {
                    0.0
                }
            }
            Envelope::LowPass { xi_max } => {
                if s <= xi_max * xi_max {
                    1.0 / s
                } else {
                    0.0
                }
            }
        }
    }
}

/// Seeded random real divergence-free field with the given envelope, scaled to
/// PM^2 norm `pm2`. Independent uniform coefficients in `[-1, 1]` are
/// symmetrized, Leray-projected and stripped of Nyquist rows.
pub fn random_solenoidal(grid: FrequencyGrid, seed: u64, envelope: Envelope, pm2: f64) -> SpectralVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = SpectralVectorField::from_fn(grid, |idx| {
        let mut v = zero();
        for z in v.iter_mut() {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        if idx == 0 || grid.is_nyquist(idx) {
            return zero();
        }
        let w = envelope.weight(grid.xi_sq_at(idx));
        [v[0] * w, v[1] * w, v[2] * w]
    });
    let f = leray_apply(&raw.hermitian_part()).without_nyquist().zero_mode_pinned();
    normalize_pm2(&f, pm2)
}
