use rayon::prelude::*;

use crate::error::{PmnsError, Result};
use crate::grid::{FrequencyGrid, SpectralVectorField};
use crate::pm::pm_norm_value;

/// Spectral fields sampled at increasing time knots starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: FrequencyGrid,
    knots: Vec<f64>,
    fields: Vec<SpectralVectorField>,
}

/// Relative tolerance used to match a requested time against the knots.
pub const KNOT_MATCH_TOL: f64 = 1e-10;

pub fn validate_knots(knots: &[f64]) -> Result<()> {
    if knots.is_empty() {
        return Err(PmnsError::Input("knot list is empty".into()));
    }
    if knots[0] != 0.0 {
        return Err(PmnsError::Input(format!("knots must start at 0, got {}", knots[0])));
    }
    for w in knots.windows(2) {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(PmnsError::Input(format!(
                "knots must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// `[0, t_min, t_min r, t_min r^2, ...]` up to `t_max`.
pub fn geometric_knots(t_min: f64, ratio: f64, t_max: f64) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && ratio > 1.0 && t_max >= t_min) {
        return Err(PmnsError::Parameter(format!(
            "geometric knots need 0 < t_min <= t_max and ratio > 1 (got {t_min}, {ratio}, {t_max})"
        )));
    }
    let mut knots = vec![0.0];
    let mut k = 0;
    loop {
        let t = t_min * ratio.powi(k);
        if t > t_max * (1.0 + 1e-12) {
            break;
        }
        knots.push(t);
        k += 1;
    }
    Ok(knots)
}

impl Trajectory {
    pub fn new(knots: Vec<f64>, fields: Vec<SpectralVectorField>) -> Result<Self> {
        validate_knots(&knots)?;
        if knots.len() != fields.len() {
            return Err(PmnsError::Input(format!(
                "{} knots but {} fields",
                knots.len(),
                fields.len()
            )));
        }
        let grid = *fields[0].grid();
        for f in &fields {
            grid.check_same(f.grid())?;
        }
        Ok(Self { grid, knots, fields })
    }

    /// The same field at every knot.
    pub fn constant(field: &SpectralVectorField, knots: &[f64]) -> Result<Self> {
        Self::new(knots.to_vec(), vec![field.clone(); knots.len()])
    }

    pub fn zeros(grid: FrequencyGrid, knots: &[f64]) -> Result<Self> {
        Self::constant(&SpectralVectorField::zeros(grid), knots)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn fields(&self) -> &[SpectralVectorField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn field(&self, i: usize) -> &SpectralVectorField {
        &self.fields[i]
    }

    pub fn last(&self) -> &SpectralVectorField {
        self.fields.last().expect("trajectory is never empty")
    }

    pub fn knot_index(&self, t: f64) -> Result<usize> {
        self.knots
            .iter()
            .position(|&k| (k - t).abs() <= KNOT_MATCH_TOL * k.abs().max(t.abs()))
            .ok_or(PmnsError::NotAKnot(t))
    }

    pub fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.knots.len() != other.knots.len()
            || self
                .knots
                .iter()
                .zip(&other.knots)
                .any(|(a, b)| (a - b).abs() > KNOT_MATCH_TOL * a.abs().max(b.abs()))
        {
            return Err(PmnsError::Input("trajectories use different time knots".into()));
        }
        Ok(())
    }

    pub fn map_fields(&self, f: impl Fn(usize, &SpectralVectorField) -> SpectralVectorField + Sync) -> Self {
        let fields: Vec<_> = self.fields.par_iter().enumerate().map(|(i, u)| f(i, u)).collect();
        Self {
            grid: self.grid,
            knots: self.knots.clone(),
            fields,
        }
    }

    /// PM^2 norm at every knot.
    pub fn pm2_curve(&self) -> Vec<f64> {
        self.fields.par_iter().map(|f| pm_norm_value(f, 2.0)).collect()
    }

    /// `sup_t ||u(t)||_{PM^2}` over the knots.
    pub fn sup_pm2(&self) -> f64 {
        self.pm2_curve().into_iter().fold(0.0, f64::max)
    }

    /// `sup_t ||u(t) - v(t)||_{PM^2}` over the knots.
    pub fn sup_pm2_distance(&self, other: &Trajectory) -> f64 {
        self.fields
            .par_iter()
            .zip(other.fields.par_iter())
            .map(|(a, b)| pm_norm_value(&(a - b), 2.0))
            .reduce(|| 0.0, f64::max)
    }
}
