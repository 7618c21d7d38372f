use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::C64;

/// Two-slit geometry in SI length units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitGeometry {
    pub slit_separation: f64,
    pub slit_width: f64,
    pub wavelength: f64,
    pub screen_distance: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    /// Relative amplitude of each slit; equal by default.
    #[serde(default = "equal_weights")]
    pub slit_weights: [f64; 2],
}

fn equal_weights() -> [f64; 2] {
    [1.0, 1.0]
}

impl Default for SlitGeometry {
    /// 500 nm light, 50 µm slit spacing, 10 µm slits, screen at 1 m.
    fn default() -> Self {
        Self {
            slit_separation: 50e-6,
            slit_width: 10e-6,
            wavelength: 500e-9,
            screen_distance: 1.0,
            x_min: -0.05,
            x_max: 0.05,
            n_points: 2001,
            slit_weights: equal_weights(),
        }
    }
}

impl SlitGeometry {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("slit_separation", self.slit_separation),
            ("slit_width", self.slit_width),
            ("wavelength", self.wavelength),
            ("screen_distance", self.screen_distance),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(Error::InvalidArgument("grid needs x_min < x_max".into()));
        }
        if self.n_points < 64 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 64 points, got {}",
                self.n_points
            )));
        }
        if self.slit_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("slit weights must be nonnegative".into()));
        }
        Ok(())
    }

    /// Far-field fringe period `λL/d`.
    pub fn fringe_period(&self) -> f64 {
        self.wavelength * self.screen_distance / self.slit_separation
    }

    pub fn grid_step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    /// Fresnel number of the aperture as seen from the screen.
    pub fn fresnel_number(&self) -> f64 {
        let a = self.slit_separation / 2.0 + self.slit_width;
        a * a / (self.wavelength * self.screen_distance)
    }

    /// Fraunhofer regime: Fresnel number well below one.
    pub fn far_field(&self) -> bool {
        self.fresnel_number() < 0.1
    }

    /// Amplitude on the screen from one slit: a Gaussian aperture centred on
    /// the slit, with the far-field phase `π x (±d) / (λL)`.
    fn slit_amplitude(&self, slit: usize, x: f64) -> C64 {
        let sign = if slit == 0 { 1.0 } else { -1.0 };
        let scale = PI * self.slit_width / (self.wavelength * self.screen_distance);
        let u = (x - sign * self.slit_separation / 2.0) * scale;
        let envelope = (-0.5 * u * u).exp();
        let phase = PI * x * sign * self.slit_separation / (self.wavelength * self.screen_distance);
        C64::from_polar(self.slit_weights[slit] * envelope, phase)
    }
}

/// Screen detection density on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityProfile {
    pub x: Vec<f64>,
    /// Probability density; integrates to 1 by Riemann sum.
    pub density: Vec<f64>,
    /// `density · Δx` per grid point.
    pub bin_probabilities: Vec<f64>,
    pub dx: f64,
    pub far_field: bool,
}

impl IntensityProfile {
    pub fn riemann_sum(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.dx
    }
}

/// Born density `|Σ wᵢ(x)|²` over the open slits, normalized on the grid.
pub fn double_slit(geom: &SlitGeometry, open: [bool; 2]) -> Result<IntensityProfile> {
    geom.validate()?;
    if !open.iter().any(|&o| o) {
        return Err(Error::EmptyProfile);
    }
    let dx = geom.grid_step();
    let x: Vec<f64> = (0..geom.n_points)
        .map(|i| geom.x_min + i as f64 * dx)
        .collect();
    let intensity: Vec<f64> = x
        .par_iter()
        .map(|&xi| {
            (0..2)
                .filter(|&s| open[s])
                .map(|s| geom.slit_amplitude(s, xi))
                .sum::<C64>()
                .norm_sqr()
        })
        .collect();
    let total: f64 = intensity.iter().sum::<f64>() * dx;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::EmptyProfile);
    }
    let density: Vec<f64> = intensity.iter().map(|v| v / total).collect();
    let bin_probabilities = density.iter().map(|d| d * dx).collect();
    Ok(IntensityProfile {
        x,
        density,
        bin_probabilities,
        dx,
        far_field: geom.far_field(),
    })
}

/// Interior strict local maxima (plateaus count once, at their left edge).
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1])
        .collect()
}

pub fn local_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] < values[i - 1] && values[i] <= values[i + 1])
        .collect()
}

/// Mean spacing of the dark fringes where the pattern is above a thousandth
/// of its peak. Dark-fringe positions are not pulled by the envelope slope
/// the way bright-fringe peaks are.
pub fn fringe_spacing(profile: &IntensityProfile) -> Option<f64> {
    let peak = profile.density.iter().copied().fold(0.0, f64::max);
    let significant: Vec<usize> = (0..profile.density.len())
        .filter(|&i| profile.density[i] >= 1e-3 * peak)
        .collect();
    let (&lo, &hi) = (significant.first()?, significant.last()?);
    let minima: Vec<usize> = local_minima(&profile.density)
        .into_iter()
        .filter(|&i| i > lo && i < hi)
        .collect();
    if minima.len() < 2 {
        return None;
    }
    let first = profile.x[minima[0]];
    let last = profile.x[*minima.last()?];
    Some((last - first) / (minima.len() - 1) as f64)
}

/// `(Imax − Imin)/(Imax + Imin)` over `|x| ≤ half_window`.
pub fn fringe_visibility(profile: &IntensityProfile, half_window: f64) -> f64 {
    let window = profile
        .x
        .iter()
        .zip(&profile.density)
        .filter(|(x, _)| x.abs() <= half_window)
        .map(|(_, d)| *d);
    let (lo, hi) = window.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    if hi + lo == 0.0 {
        return 0.0;
    }
    (hi - lo) / (hi + lo)
}
