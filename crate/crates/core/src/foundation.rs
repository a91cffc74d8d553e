//! Shared numeric primitives: the Shannon rate function, unit conversions,
//! uniform-linear-array geometry, steering vectors, and field-region
//! boundaries.
//!
//! The array convention used everywhere in this crate is a symmetric ULA with
//! an odd number of elements `N = 2*Ñ + 1` indexed `i = −Ñ..Ñ`, element 0 at
//! the origin. Angles are the direction of arrival measured from the array
//! axis, in radians; broadside is `θ = π/2`.

use num_complex::Complex64;

use crate::{MaError, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Shannon rate of a Gaussian channel at SNR `x`, in bits per channel use:
/// `C(x) = log2(1 + x)`.
///
/// # Examples
/// ```
/// use ma_lab_core::foundation::shannon_rate;
/// assert_eq!(shannon_rate(1.0).unwrap(), 1.0);
/// assert_eq!(shannon_rate(3.0).unwrap(), 2.0);
/// assert_eq!(shannon_rate(0.0).unwrap(), 0.0);
/// ```
pub fn shannon_rate(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(MaError::InvalidArgument(format!(
            "shannon_rate requires a nonnegative SNR, got {x}"
        )));
    }
    // log2(1+x) via ln_1p for accuracy near zero.
    Ok(x.ln_1p() / std::f64::consts::LN_2)
}

/// Converts a decibel value to the linear scale: `10^(v/10)`.
pub fn db_to_linear(v_db: f64) -> f64 {
    10f64.powf(v_db / 10.0)
}

/// Converts a linear value to decibels: `10·log10(v)`. Inverse of
/// [`db_to_linear`].
pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Symmetric uniform linear array: `N = 2*Ñ + 1` elements (N odd) spaced `d`
/// meters apart, operating at wavelength `λ` meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    /// Total element count `N` (odd).
    pub n_antennas: usize,
    /// Inter-element spacing `d` in meters.
    pub spacing_d: f64,
    /// Carrier wavelength `λ` in meters.
    pub wavelength: f64,
}

impl ArrayGeometry {
    /// Creates a geometry, enforcing `N` odd and positive `d`, `λ`.
    pub fn new(n_antennas: usize, spacing_d: f64, wavelength: f64) -> Result<Self> {
        if n_antennas == 0 || n_antennas % 2 == 0 {
            return Err(MaError::InvalidArgument(format!(
                "antenna count must be odd and positive, got {n_antennas}"
            )));
        }
        if !(spacing_d > 0.0) {
            return Err(MaError::InvalidArgument(format!(
                "element spacing must be positive, got {spacing_d}"
            )));
        }
        if !(wavelength > 0.0) {
            return Err(MaError::InvalidArgument(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        Ok(Self {
            n_antennas,
            spacing_d,
            wavelength,
        })
    }

    /// Half-width `Ñ` of the index range `i = −Ñ..Ñ`.
    pub fn n_tilde(&self) -> i64 {
        (self.n_antennas as i64 - 1) / 2
    }

    /// Iterator over the symmetric element indices `−Ñ, …, Ñ`.
    pub fn indices(&self) -> impl Iterator<Item = i64> {
        let nt = self.n_tilde();
        -nt..=nt
    }

    /// Array aperture `A = (N − 1)·d` in meters.
    pub fn aperture(&self) -> f64 {
        (self.n_antennas as f64 - 1.0) * self.spacing_d
    }
}

/// Polar user position: range `r` (meters, > 0) and direction of arrival `θ`
/// (radians from the array axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub range_r: f64,
    pub angle_theta: f64,
}

impl Position {
    pub fn new(range_r: f64, angle_theta: f64) -> Result<Self> {
        if !(range_r > 0.0) {
            return Err(MaError::InvalidArgument(format!(
                "range must be positive, got {range_r}"
            )));
        }
        Ok(Self {
            range_r,
            angle_theta,
        })
    }
}

/// Far-field array steering vector for direction `θ`: entries
/// `e^{−j(2π/λ)(i−1)d·cosθ}` over `i = −Ñ..Ñ`, unit modulus, norm `√N`.
pub fn steering_vector(geom: &ArrayGeometry, theta: f64) -> Vec<Complex64> {
    let phase_scale = -2.0 * std::f64::consts::PI / geom.wavelength * geom.spacing_d * theta.cos();
    geom.indices()
        .map(|i| Complex64::from_polar(1.0, phase_scale * (i as f64 - 1.0)))
        .collect()
}

/// Field-region boundaries of an aperture, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldBoundaries {
    /// Rayleigh distance `2A²/λ`: beyond it the planar-wave (far-field) model
    /// holds.
    pub rayleigh: f64,
    /// Reactive near-field boundary `0.62·√(A³/λ)`: below it evanescent
    /// coupling dominates and the radiating models here do not apply.
    pub reactive: f64,
}

/// Computes the Rayleigh and reactive near-field boundaries of `geom`.
pub fn field_boundaries(geom: &ArrayGeometry) -> FieldBoundaries {
    let a = geom.aperture();
    FieldBoundaries {
        rayleigh: 2.0 * a * a / geom.wavelength,
        reactive: 0.62 * (a.powi(3) / geom.wavelength).sqrt(),
    }
}
