//! Channel realizations for every propagation model used in this crate, plus
//! normalized channel correlations and the beamspace (DFT) transform.
//!
//! Models:
//! - far-field LoS (planar wave): `h = (√β_r·r_r/r)·a(θ)`;
//! - isotropic scattering: `h = (√β_r·r_r/r)·g`, `g ~ CN(0, I)`;
//! - sparse mmWave (Rician): weighted LoS steering vector plus `L` NLoS paths;
//! - near-field spherical wave (SPD array): per-element distances, exactly or
//!   under the quadratic (Fresnel) approximation;
//! - continuous-aperture (CAP) Green's function samples.
//!
//! The reference pathloss `β_r` is measured at `r_r = 1 m` throughout.

use num_complex::Complex64;

use crate::foundation::{field_boundaries, steering_vector, ArrayGeometry, Position};
use crate::linalg::{inner, norm_sqr};
use crate::rng::{keyed_rng, standard_complex, tag};
use crate::special::erf_complex;
use crate::{MaError, Result};

/// Reference distance for the pathloss anchor, meters.
pub const REFERENCE_DISTANCE: f64 = 1.0;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Which propagation model produced a channel vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelModel {
    FarfieldLos,
    Isotropic,
    RicianSparse,
    NearfieldExact,
    NearfieldApprox,
}

/// A channel realization between the array and one user.
#[derive(Debug, Clone)]
pub struct ChannelVector {
    /// Complex gains, one per array element (index `−Ñ..Ñ`).
    pub entries: Vec<Complex64>,
    pub model: ChannelModel,
    pub position: Position,
    /// Reference pathloss `β_r` at 1 m.
    pub pathloss_ref: f64,
    /// Model-applicability warning (e.g. far-field model used inside the
    /// Rayleigh distance); informational, never an error.
    pub warning: Option<String>,
}

impl ChannelVector {
    /// Squared norm of the channel.
    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.entries)
    }
}

/// Far-field LoS channel `h = (√β_r·r_r/r)·a(θ)`.
///
/// Positions inside the Rayleigh distance are allowed (the caller may want
/// the mismatch on purpose) but flagged via [`ChannelVector::warning`].
pub fn farfield_los(geom: &ArrayGeometry, pos: Position, beta_r: f64) -> Result<ChannelVector> {
    check_pathloss(beta_r)?;
    let gain = beta_r.sqrt() * REFERENCE_DISTANCE / pos.range_r;
    let entries: Vec<Complex64> = steering_vector(geom, pos.angle_theta)
        .into_iter()
        .map(|e| e * gain)
        .collect();
    let rayleigh = field_boundaries(geom).rayleigh;
    let warning = (pos.range_r < rayleigh).then(|| {
        format!(
            "far-field model used at r = {} m inside the Rayleigh distance {} m",
            pos.range_r, rayleigh
        )
    });
    Ok(ChannelVector {
        entries,
        model: ChannelModel::FarfieldLos,
        position: pos,
        pathloss_ref: beta_r,
        warning,
    })
}

/// Isotropic-scattering channel `h = (√β_r·r_r/r)·g`, `g ~ CN(0, I)`,
/// reproducible under `(seed, user)` keying.
pub fn isotropic(
    geom: &ArrayGeometry,
    pos: Position,
    beta_r: f64,
    rng_seed: u64,
    user: u64,
) -> Result<ChannelVector> {
    check_pathloss(beta_r)?;
    let gain = beta_r.sqrt() * REFERENCE_DISTANCE / pos.range_r;
    let mut rng = keyed_rng(rng_seed, tag::ISOTROPIC, user, 0);
    let entries: Vec<Complex64> = (0..geom.n_antennas)
        .map(|_| standard_complex(&mut rng) * gain)
        .collect();
    Ok(ChannelVector {
        entries,
        model: ChannelModel::Isotropic,
        position: pos,
        pathloss_ref: beta_r,
        warning: None,
    })
}

/// Parameters of the sparse-mmWave (Rician) channel.
#[derive(Debug, Clone)]
pub struct RicianParams {
    /// Rician K-factor `K_k ≥ 0` (LoS-to-NLoS power ratio).
    pub k_factor: f64,
    /// Number of NLoS paths `L_k ≥ 1`.
    pub n_paths: usize,
    /// LoS direction of arrival, radians.
    pub los_angle: f64,
    /// NLoS angles; when `None`, sampled uniformly on (−π, π].
    pub nlos_angles: Option<Vec<f64>>,
    /// NLoS complex gains (unit variance convention); when `None`, sampled
    /// `CN(0, 1)`.
    pub nlos_gains: Option<Vec<Complex64>>,
    /// User index for RNG keying.
    pub user: u64,
}

/// Sparse mmWave channel with Rician factor `K`:
/// `h = (√β_r·r_r/r)·[√(K/(1+K))·a(θ₀) + √(1/((1+K)L))·Σ_ℓ μ_ℓ a(θ_ℓ)]`.
pub fn rician_sparse(
    geom: &ArrayGeometry,
    pos: Position,
    beta_r: f64,
    params: &RicianParams,
    rng_seed: u64,
) -> Result<ChannelVector> {
    check_pathloss(beta_r)?;
    if params.k_factor < 0.0 {
        return Err(MaError::InvalidArgument(
            "Rician K-factor must be nonnegative".into(),
        ));
    }
    if params.n_paths == 0 {
        return Err(MaError::InvalidArgument(
            "Rician model needs at least one NLoS path".into(),
        ));
    }
    let l = params.n_paths;
    let angles: Vec<f64> = match &params.nlos_angles {
        Some(a) => {
            if a.len() != l {
                return Err(MaError::DimensionMismatch(format!(
                    "expected {l} NLoS angles, got {}",
                    a.len()
                )));
            }
            a.clone()
        }
        None => (0..l)
            .map(|p| {
                let mut rng = keyed_rng(rng_seed, tag::RICIAN_ANGLE, params.user, p as u64);
                // Uniform on (−π, π].
                std::f64::consts::PI * (1.0 - 2.0 * rand::Rng::gen::<f64>(&mut rng))
            })
            .collect(),
    };
    let gains: Vec<Complex64> = match &params.nlos_gains {
        Some(g) => {
            if g.len() != l {
                return Err(MaError::DimensionMismatch(format!(
                    "expected {l} NLoS gains, got {}",
                    g.len()
                )));
            }
            g.clone()
        }
        None => (0..l)
            .map(|p| {
                let mut rng = keyed_rng(rng_seed, tag::RICIAN_GAIN, params.user, p as u64);
                standard_complex(&mut rng)
            })
            .collect(),
    };

    let k = params.k_factor;
    let los_w = (k / (1.0 + k)).sqrt();
    let nlos_w = (1.0 / ((1.0 + k) * l as f64)).sqrt();
    let gain = beta_r.sqrt() * REFERENCE_DISTANCE / pos.range_r;

    let mut entries = vec![Complex64::new(0.0, 0.0); geom.n_antennas];
    let los = steering_vector(geom, params.los_angle);
    for (e, a) in entries.iter_mut().zip(&los) {
        *e += los_w * a;
    }
    for (theta, mu) in angles.iter().zip(&gains) {
        let a = steering_vector(geom, *theta);
        for (e, ai) in entries.iter_mut().zip(&a) {
            *e += nlos_w * mu * ai;
        }
    }
    for e in &mut entries {
        *e *= gain;
    }
    Ok(ChannelVector {
        entries,
        model: ChannelModel::RicianSparse,
        position: pos,
        pathloss_ref: beta_r,
        warning: None,
    })
}

/// Evaluation mode of the near-field spherical-wave model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NearfieldMode {
    /// Exact per-element distances and amplitudes.
    Exact,
    /// Quadratic (Fresnel) phase approximation with uniform `1/r` amplitude.
    Quadratic,
}

/// Exact element-`i` distance `r_{k,i} = √((r·cosθ − i·d)² + r²·sin²θ)`.
pub fn nearfield_distance(pos: Position, spacing_d: f64, i: i64) -> f64 {
    let x = pos.range_r * pos.angle_theta.cos() - i as f64 * spacing_d;
    let y = pos.range_r * pos.angle_theta.sin();
    (x * x + y * y).sqrt()
}

/// Quadratic approximation `r − i·d·cosθ + i²·d²·sin²θ/(2r)`.
pub fn nearfield_distance_quadratic(pos: Position, spacing_d: f64, i: i64) -> f64 {
    let id = i as f64 * spacing_d;
    let s = pos.angle_theta.sin();
    pos.range_r - id * pos.angle_theta.cos() + id * id * s * s / (2.0 * pos.range_r)
}

/// Near-field spherical-wave (SPD array) channel: entries
/// `(√β_r·r_r / r_{k,i})·e^{−j2π·r_{k,i}/λ}`.
///
/// In `Quadratic` mode the phase uses the Fresnel expansion and the amplitude
/// is uniform `1/r` (the uniform-power approximation); `Exact` mode keeps the
/// per-element `1/r_{k,i}` amplitudes. Ranges below `10·d` are flagged since
/// the element-discretized model itself degrades there.
pub fn nearfield_spd(
    geom: &ArrayGeometry,
    pos: Position,
    beta_r: f64,
    mode: NearfieldMode,
) -> Result<ChannelVector> {
    check_pathloss(beta_r)?;
    let amp_ref = beta_r.sqrt() * REFERENCE_DISTANCE;
    let entries: Vec<Complex64> = geom
        .indices()
        .map(|i| {
            let (dist, amp) = match mode {
                NearfieldMode::Exact => {
                    let d = nearfield_distance(pos, geom.spacing_d, i);
                    (d, amp_ref / d)
                }
                NearfieldMode::Quadratic => (
                    nearfield_distance_quadratic(pos, geom.spacing_d, i),
                    amp_ref / pos.range_r,
                ),
            };
            Complex64::from_polar(amp, -TWO_PI * dist / geom.wavelength)
        })
        .collect();
    let warning = (pos.range_r < 10.0 * geom.spacing_d).then(|| {
        format!(
            "range {} m is below 10 element spacings; the discretized model is unreliable",
            pos.range_r
        )
    });
    Ok(ChannelVector {
        entries,
        model: match mode {
            NearfieldMode::Exact => ChannelModel::NearfieldExact,
            NearfieldMode::Quadratic => ChannelModel::NearfieldApprox,
        },
        position: pos,
        pathloss_ref: beta_r,
        warning,
    })
}

/// Evaluation mode of the CAP-array Green's function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapMode {
    Exact,
    Approx,
}

/// Green's function between aperture point `x` (meters along the line
/// aperture) and a user position:
/// exact `G = e^{−j2π‖r−a‖/λ}/(4π‖r−a‖)`, or the Fresnel approximation
/// `G ≈ e^{−j(2π/λ)(r − x·cosθ + x²·sin²θ/(2r))}/(4πr)`.
pub fn cap_green(x: f64, pos: Position, wavelength: f64, mode: CapMode) -> Result<Complex64> {
    let (dist, denom) = match mode {
        CapMode::Exact => {
            let dx = pos.range_r * pos.angle_theta.cos() - x;
            let dy = pos.range_r * pos.angle_theta.sin();
            let d = (dx * dx + dy * dy).sqrt();
            (d, d)
        }
        CapMode::Approx => {
            let s = pos.angle_theta.sin();
            let d = pos.range_r - x * pos.angle_theta.cos()
                + x * x * s * s / (2.0 * pos.range_r);
            (d, pos.range_r)
        }
    };
    if !(dist > 0.0) {
        return Err(MaError::InvalidArgument(
            "Green's function is singular at coincident points".into(),
        ));
    }
    Ok(Complex64::from_polar(
        1.0 / (4.0 * std::f64::consts::PI * denom),
        -TWO_PI * dist / wavelength,
    ))
}

/// Result of the beamspace (DFT) transform of a set of channels.
#[derive(Debug, Clone)]
pub struct BeamspaceResult {
    /// Beamspace channels, one `Vec` per input channel.
    pub transformed: Vec<Vec<Complex64>>,
    /// Grid directions `ψ_i = (2i − N − 1)/N`, `i = 1..N`.
    pub grid: Vec<f64>,
    /// Per-user nearest-grid index (0-based) of the LoS direction, ties
    /// broken to the lower index.
    pub dominant_index: Vec<usize>,
}

/// DFT beamspace transform `h̃ = U·h` with
/// `U = (1/√N)[u(ψ_1) … u(ψ_N)]ᴴ`, `u(ψ)_i = e^{−jπ(i−1)ψ}`.
///
/// Requires `d = λ/2`, which is what makes the grid `ψ_i = (2i − N − 1)/N`
/// orthogonal (`U` unitary). `los_cos` carries each user's LoS `cosθ` used
/// for the dominant-index report.
pub fn beamspace_transform(
    geom: &ArrayGeometry,
    channels: &[&ChannelVector],
    los_cos: &[f64],
) -> Result<BeamspaceResult> {
    if (geom.spacing_d - geom.wavelength / 2.0).abs() > 1e-12 * geom.wavelength {
        return Err(MaError::InvalidArgument(
            "beamspace transform requires half-wavelength spacing d = λ/2".into(),
        ));
    }
    if channels.len() != los_cos.len() {
        return Err(MaError::DimensionMismatch(
            "one LoS cosine per channel is required".into(),
        ));
    }
    let n = geom.n_antennas;
    let grid: Vec<f64> = (1..=n)
        .map(|i| (2.0 * i as f64 - n as f64 - 1.0) / n as f64)
        .collect();
    let scale = 1.0 / (n as f64).sqrt();
    // Row m of U is u(ψ_m)^H / √N; with d = λ/2 the steering phase factor is
    // exactly π, so u(ψ) is steering_vector evaluated at cosθ = ψ.
    let rows: Vec<Vec<Complex64>> = grid
        .iter()
        .map(|&psi| {
            geom.indices()
                .map(|i| Complex64::from_polar(scale, std::f64::consts::PI * (i as f64 - 1.0) * psi))
                .collect()
        })
        .collect();
    let transformed: Vec<Vec<Complex64>> = channels
        .iter()
        .map(|ch| {
            rows.iter()
                .map(|row| row.iter().zip(&ch.entries).map(|(u, h)| u * h).sum())
                .collect()
        })
        .collect();
    let dominant_index = los_cos
        .iter()
        .map(|&c| {
            let mut best = 0usize;
            for (idx, &psi) in grid.iter().enumerate() {
                // Strict improvement only: ties stay at the lower index.
                if (psi - c).abs() < (grid[best] - c).abs() {
                    best = idx;
                }
            }
            best
        })
        .collect();
    Ok(BeamspaceResult {
        transformed,
        grid,
        dominant_index,
    })
}

/// Normalized channel correlation `ρ = |h₁ᴴh₂|/(‖h₁‖‖h₂‖) ∈ [0, 1]`.
pub fn correlation_rho(h1: &[Complex64], h2: &[Complex64]) -> Result<f64> {
    if h1.len() != h2.len() {
        return Err(MaError::DimensionMismatch(
            "correlation requires equal-length vectors".into(),
        ));
    }
    let n1 = norm_sqr(h1).sqrt();
    let n2 = norm_sqr(h2).sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(MaError::InvalidArgument(
            "correlation of a zero vector is undefined".into(),
        ));
    }
    Ok((inner(h1, h2).norm() / (n1 * n2)).min(1.0))
}

/// Closed-form near-field correlation between two users under the quadratic
/// phase model, via the complex error function.
///
/// Writing the per-element phase difference as `b·i + a·i²` with
/// `a = (2π/λ)·d²·(sin²θ₁/(2r₁) − sin²θ₂/(2r₂))` and
/// `b = (2π/λ)·d·(cosθ₂ − cosθ₁)`, the Riemann-sum limit of `|Σ_i e^{j(bi+ai²)}|/N`
/// evaluates to
/// `ρ = (√π/2)/(N·√|a|)·|erf(z₊) + erf(z₋)|` with
/// `z_± = e^{−jπ/4}·(|a|N ± b·sign(a))/(2√|a|)`.
///
/// Degenerate quadratic term (`a ≈ 0`) falls back to the Dirichlet-kernel
/// magnitude, and `a = b = 0` returns 1 by continuity.
pub fn nearfield_rho_closed(geom: &ArrayGeometry, pos1: Position, pos2: Position) -> f64 {
    let kappa = TWO_PI / geom.wavelength;
    let d = geom.spacing_d;
    let (s1, s2) = (pos1.angle_theta.sin(), pos2.angle_theta.sin());
    let a = kappa * d * d * (s1 * s1 / (2.0 * pos1.range_r) - s2 * s2 / (2.0 * pos2.range_r));
    let b = kappa * d * (pos2.angle_theta.cos() - pos1.angle_theta.cos());
    let n = geom.n_antennas as f64;

    // Total quadratic phase across the aperture; below numerical relevance we
    // are in the pure linear-phase (Dirichlet) regime.
    if (a * n * n / 4.0).abs() < 1e-9 {
        let half = b / 2.0;
        if half.abs() < 1e-15 {
            return 1.0;
        }
        return ((n * half).sin() / (n * half.sin())).abs().min(1.0);
    }

    // Conjugating the phase flips the sign of both a and b and leaves the
    // magnitude unchanged, so reduce to a > 0.
    let (aa, bb) = if a > 0.0 { (a, b) } else { (-a, -b) };
    let sa = aa.sqrt();
    let dir = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    let z_plus = dir * ((aa * n + bb) / (2.0 * sa));
    let z_minus = dir * ((aa * n - bb) / (2.0 * sa));
    let val = (std::f64::consts::PI.sqrt() / (2.0 * n * sa))
        * (erf_complex(z_plus) + erf_complex(z_minus)).norm();
    val.min(1.0)
}

fn check_pathloss(beta_r: f64) -> Result<()> {
    if !(beta_r > 0.0) {
        return Err(MaError::InvalidArgument(format!(
            "reference pathloss must be positive, got {beta_r}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::CompensatedSum;
    use approx::assert_abs_diff_eq;

    fn deg(v: f64) -> f64 {
        v.to_radians()
    }

    #[test]
    fn farfield_broadside_unit_range_is_all_ones() {
        let geom = ArrayGeometry::new(7, 0.005, 0.01).unwrap();
        let h = farfield_los(&geom, Position::new(1.0, deg(90.0)).unwrap(), 1.0).unwrap();
        for e in &h.entries {
            assert_abs_diff_eq!(e.re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(e.im, 0.0, epsilon = 1e-12);
        }
        // This small array has Rayleigh distance 0.18 m, so r = 1 m is clean;
        // a large array at the same range must be flagged.
        assert!(h.warning.is_none());
        let big = ArrayGeometry::new(1025, 0.005, 0.01).unwrap();
        let flagged = farfield_los(&big, Position::new(1.0, deg(90.0)).unwrap(), 1.0).unwrap();
        assert!(flagged.warning.is_some());
    }

    #[test]
    fn farfield_norm_identity() {
        let geom = ArrayGeometry::new(65, 0.005, 0.01).unwrap();
        let (r, beta) = (250.0, 2.5);
        let h = farfield_los(&geom, Position::new(r, 1.1).unwrap(), beta).unwrap();
        assert_abs_diff_eq!(
            h.norm_sqr(),
            geom.n_antennas as f64 * beta / (r * r),
            epsilon = 1e-12
        );
    }

    #[test]
    fn farfield_two_users_nearly_orthogonal() {
        // Dirichlet-kernel decay: θ = 20° vs 40°, N = 1024 (odd variant 1025
        // keeps the symmetric-index convention) gives ρ < 0.05.
        let geom = ArrayGeometry::new(1025, 0.005, 0.01).unwrap();
        let h1 = farfield_los(&geom, Position::new(1e4, deg(20.0)).unwrap(), 1.0).unwrap();
        let h2 = farfield_los(&geom, Position::new(1e4, deg(40.0)).unwrap(), 1.0).unwrap();
        let rho = correlation_rho(&h1.entries, &h2.entries).unwrap();
        assert!(rho < 0.05, "rho = {rho}");
        // Cross-check against the Dirichlet ratio |sin(πNdΔ/λ)/(N·sin(πdΔ/λ))|.
        let delta = deg(20.0).cos() - deg(40.0).cos();
        let x = std::f64::consts::PI * geom.spacing_d * delta / geom.wavelength;
        let dirichlet = ((geom.n_antennas as f64 * x).sin()
            / (geom.n_antennas as f64 * x.sin()))
        .abs();
        assert_abs_diff_eq!(rho, dirichlet, epsilon = 1e-10);
    }

    #[test]
    fn isotropic_deterministic_and_lln() {
        let geom = ArrayGeometry::new(65, 0.005, 0.01).unwrap();
        let pos = Position::new(100.0, deg(45.0)).unwrap();
        let a = isotropic(&geom, pos, 2.0, 7, 3).unwrap();
        let b = isotropic(&geom, pos, 2.0, 7, 3).unwrap();
        assert_eq!(a.entries, b.entries);

        // Law of large numbers: E‖h‖²/N = β_r/r² within 2% over 10⁴ draws.
        let (beta, r) = (3.0, 50.0);
        let pos = Position::new(r, deg(90.0)).unwrap();
        let mut acc = 0.0;
        let draws = 10_000;
        for u in 0..draws {
            let h = isotropic(&geom, pos, beta, 11, u).unwrap();
            acc += h.norm_sqr() / geom.n_antennas as f64;
        }
        let want = beta / (r * r);
        assert!(
            (acc / draws as f64 - want).abs() < 0.02 * want,
            "LLN mean {} vs {}",
            acc / draws as f64,
            want
        );
    }

    #[test]
    fn isotropic_rejects_bad_pathloss() {
        let geom = ArrayGeometry::new(5, 0.005, 0.01).unwrap();
        let pos = Position::new(10.0, 0.3).unwrap();
        assert!(isotropic(&geom, pos, 0.0, 1, 0).is_err());
    }

    #[test]
    fn isotropic_independent_draws_decorrelate() {
        let geom = ArrayGeometry::new(4097, 0.005, 0.01).unwrap();
        let pos = Position::new(100.0, deg(90.0)).unwrap();
        let mut small = 0usize;
        let trials = 100;
        for t in 0..trials {
            let h1 = isotropic(&geom, pos, 1.0, 23, 2 * t).unwrap();
            let h2 = isotropic(&geom, pos, 1.0, 23, 2 * t + 1).unwrap();
            if correlation_rho(&h1.entries, &h2.entries).unwrap() < 0.1 {
                small += 1;
            }
        }
        assert!(small >= 99, "only {small}/{trials} below 0.1");
    }

    #[test]
    fn rician_large_k_tends_to_los() {
        let geom = ArrayGeometry::new(129, 0.005, 0.01).unwrap();
        let pos = Position::new(200.0, deg(30.0)).unwrap();
        let params = RicianParams {
            k_factor: 1e12,
            n_paths: 4,
            los_angle: deg(30.0),
            nlos_angles: None,
            nlos_gains: None,
            user: 0,
        };
        let h = rician_sparse(&geom, pos, 1.0, &params, 5).unwrap();
        let los = farfield_los(&geom, pos, 1.0).unwrap();
        for (a, b) in h.entries.iter().zip(&los.entries) {
            assert!((a - b).norm() <= 1e-5 * b.norm());
        }
    }

    #[test]
    fn rician_zero_k_single_path_is_scaled_steering() {
        let geom = ArrayGeometry::new(33, 0.005, 0.01).unwrap();
        let pos = Position::new(100.0, deg(90.0)).unwrap();
        let mu = Complex64::new(0.4, -1.2);
        let params = RicianParams {
            k_factor: 0.0,
            n_paths: 1,
            los_angle: deg(90.0),
            nlos_angles: Some(vec![deg(70.0)]),
            nlos_gains: Some(vec![mu]),
            user: 0,
        };
        let h = rician_sparse(&geom, pos, 1.0, &params, 5).unwrap();
        let a = steering_vector(&geom, deg(70.0));
        let gain = 1.0 / pos.range_r;
        for (e, ai) in h.entries.iter().zip(&a) {
            assert!((e - gain * mu * ai).norm() < 1e-12);
        }
    }

    #[test]
    fn nearfield_center_element_and_broadside_distance() {
        let geom = ArrayGeometry::new(257, 0.005, 0.01).unwrap();
        let pos = Position::new(12.0, deg(90.0)).unwrap();
        for mode in [NearfieldMode::Exact, NearfieldMode::Quadratic] {
            let h = nearfield_spd(&geom, pos, 4.0, mode).unwrap();
            let center = h.entries[geom.n_tilde() as usize];
            assert_abs_diff_eq!(center.norm(), 2.0 / 12.0, epsilon = 1e-12);
            let want_phase = -TWO_PI * 12.0 / 0.01;
            let diff = (center.arg() - want_phase).rem_euclid(TWO_PI);
            assert!(diff.min(TWO_PI - diff) < 1e-6);
        }
        // Broadside geometry identity.
        for i in geom.indices() {
            let d = nearfield_distance(pos, geom.spacing_d, i);
            let id = i as f64 * geom.spacing_d;
            assert_abs_diff_eq!(d, (144.0 + id * id).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn nearfield_planar_limit_matches_farfield() {
        // Far beyond the Rayleigh distance the exact spherical phases become
        // linear in the element index. The spherical model's planar limit is
        // the steering pattern of the mirrored angle π−θ (the two printed
        // conventions differ by an array reflection), so compare against
        // farfield_los at π−θ after removing the bulk phase.
        let geom = ArrayGeometry::new(201, 0.005, 0.01).unwrap();
        let rayleigh = field_boundaries(&geom).rayleigh;
        let theta = deg(10.0);
        let pos = Position::new(100.0 * rayleigh, theta).unwrap();
        let nf = nearfield_spd(&geom, pos, 1.0, NearfieldMode::Exact).unwrap();
        let ff = farfield_los(
            &geom,
            Position::new(pos.range_r, std::f64::consts::PI - theta).unwrap(),
            1.0,
        )
        .unwrap();
        let bulk = nf.entries[0] / ff.entries[0];
        for (a, b) in nf.entries.iter().zip(&ff.entries) {
            let resid = (a / b) / bulk;
            assert!(
                resid.arg().abs() < 1e-3,
                "phase residual {} rad",
                resid.arg()
            );
        }
        let rho = correlation_rho(&nf.entries, &ff.entries).unwrap();
        assert!(rho > 0.999, "planar-limit correlation {rho}");
    }

    #[test]
    fn cap_green_center_and_modulus() {
        let pos = Position::new(50.0, deg(90.0)).unwrap();
        let g = cap_green(0.0, pos, 0.01, CapMode::Exact).unwrap();
        assert_abs_diff_eq!(g.norm(), 1.0 / (4.0 * std::f64::consts::PI * 50.0), epsilon = 1e-15);
        let want_phase = -TWO_PI * 50.0 / 0.01;
        let diff = (g.arg() - want_phase).rem_euclid(TWO_PI);
        assert!(diff.min(TWO_PI - diff) < 1e-6);

        let g2 = cap_green(0.7, pos, 0.01, CapMode::Exact).unwrap();
        let dist = (50.0f64 * 50.0 + 0.49).sqrt();
        assert_abs_diff_eq!(g2.norm(), 1.0 / (4.0 * std::f64::consts::PI * dist), epsilon = 1e-15);
    }

    #[test]
    fn cap_green_approx_phase_error_small() {
        // r = 50 m, A = 1 m, λ = 0.01 m: Fresnel phase error < 0.05 rad
        // across the aperture.
        let pos = Position::new(50.0, deg(70.0)).unwrap();
        let mut max_err: f64 = 0.0;
        for k in 0..=200 {
            let x = -0.5 + k as f64 / 200.0;
            let exact = cap_green(x, pos, 0.01, CapMode::Exact).unwrap();
            let approx = cap_green(x, pos, 0.01, CapMode::Approx).unwrap();
            let dphi = (exact / approx).arg().abs();
            max_err = max_err.max(dphi);
        }
        assert!(max_err < 0.05, "max phase error {max_err}");
    }

    #[test]
    fn beamspace_on_grid_steering_is_a_delta() {
        let geom = ArrayGeometry::new(65, 0.005, 0.01).unwrap(); // d = λ/2
        let m = 20usize;
        let psi = (2.0 * (m as f64 + 1.0) - 66.0) / 65.0;
        let theta = psi.acos();
        let h = farfield_los(&geom, Position::new(100.0, theta).unwrap(), 1.0).unwrap();
        let out = beamspace_transform(&geom, &[&h], &[psi]).unwrap();
        let t = &out.transformed[0];
        let peak = t[m].norm();
        for (idx, v) in t.iter().enumerate() {
            if idx != m {
                assert!(
                    v.norm() < 1e-9 * peak.max(1.0),
                    "leakage {} at {idx}",
                    v.norm()
                );
            }
        }
        assert!(peak > 1e-3);
        assert_eq!(out.dominant_index[0], m);
    }

    #[test]
    fn beamspace_unitary_and_norm_preserving() {
        let geom = ArrayGeometry::new(129, 0.005, 0.01).unwrap();
        let pos = Position::new(300.0, deg(35.0)).unwrap();
        let h = isotropic(&geom, pos, 1.0, 3, 0).unwrap();
        let out = beamspace_transform(&geom, &[&h], &[deg(35.0).cos()]).unwrap();
        let norm_in = h.norm_sqr().sqrt();
        let norm_out = norm_sqr(&out.transformed[0]).sqrt();
        assert_abs_diff_eq!(norm_in, norm_out, epsilon = 1e-10);
    }

    #[test]
    fn beamspace_requires_half_wavelength_spacing() {
        let geom = ArrayGeometry::new(65, 0.004, 0.01).unwrap();
        let h = farfield_los(&geom, Position::new(1e4, 1.0).unwrap(), 1.0).unwrap();
        assert!(beamspace_transform(&geom, &[&h], &[0.0]).is_err());
    }

    #[test]
    fn beamspace_dominant_index_matches_linear_scan() {
        // N = 128 grid (odd-count 129 here), θ = −160°.
        let geom = ArrayGeometry::new(129, 0.005, 0.01).unwrap();
        let c = deg(-160.0).cos();
        let h = farfield_los(&geom, Position::new(1e4, deg(-160.0)).unwrap(), 1.0).unwrap();
        let out = beamspace_transform(&geom, &[&h], &[c]).unwrap();
        let mut best = 0;
        for (i, &psi) in out.grid.iter().enumerate() {
            if (psi - c).abs() < (out.grid[best] - c).abs() {
                best = i;
            }
        }
        assert_eq!(out.dominant_index[0], best);
    }

    #[test]
    fn correlation_trivial_cases() {
        let e0 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let e1 = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        assert_abs_diff_eq!(correlation_rho(&e0, &e0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(correlation_rho(&e0, &e1).unwrap(), 0.0, epsilon = 1e-15);
        assert!(correlation_rho(&e0, &[Complex64::new(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn nearfield_same_angle_users_decorrelate() {
        // Range-division: same direction, different ranges, large array.
        let geom = ArrayGeometry::new(1025, 0.005, 0.01).unwrap();
        let h1 = nearfield_spd(
            &geom,
            Position::new(10.0, deg(90.0)).unwrap(),
            1.0,
            NearfieldMode::Exact,
        )
        .unwrap();
        let h2 = nearfield_spd(
            &geom,
            Position::new(20.0, deg(90.0)).unwrap(),
            1.0,
            NearfieldMode::Exact,
        )
        .unwrap();
        let rho = correlation_rho(&h1.entries, &h2.entries).unwrap();
        assert!(rho < 0.1, "rho = {rho}");
    }

    /// Direct compensated sum of the approximated inner product
    /// `|Σ_i e^{j(b·i + a·i²)}|/N` — the oracle for the closed form.
    fn rho_direct_sum(geom: &ArrayGeometry, p1: Position, p2: Position) -> f64 {
        let kappa = TWO_PI / geom.wavelength;
        let d = geom.spacing_d;
        let (s1, s2) = (p1.angle_theta.sin(), p2.angle_theta.sin());
        let a = kappa * d * d * (s1 * s1 / (2.0 * p1.range_r) - s2 * s2 / (2.0 * p2.range_r));
        let b = kappa * d * (p2.angle_theta.cos() - p1.angle_theta.cos());
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for i in geom.indices() {
            let phi = b * i as f64 + a * (i as f64) * (i as f64);
            re.add(phi.cos());
            im.add(phi.sin());
        }
        Complex64::new(re.value(), im.value()).norm() / geom.n_antennas as f64
    }

    #[test]
    fn rho_closed_form_same_position_is_one() {
        let geom = ArrayGeometry::new(513, 0.005, 0.01).unwrap();
        let p = Position::new(15.0, deg(90.0)).unwrap();
        assert_abs_diff_eq!(nearfield_rho_closed(&geom, p, p), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rho_closed_form_matches_direct_sum_oracle() {
        let geom = ArrayGeometry::new(513, 0.005, 0.01).unwrap();
        let p1 = Position::new(10.0, deg(90.0)).unwrap();
        let p2 = Position::new(20.0, deg(90.0)).unwrap();
        let closed = nearfield_rho_closed(&geom, p1, p2);
        let direct = rho_direct_sum(&geom, p1, p2);
        assert!(
            (closed - direct).abs() < 0.02,
            "closed {closed} vs direct {direct}"
        );
        // Also against the actual quadratic-approx channel correlation.
        let h1 = nearfield_spd(&geom, p1, 1.0, NearfieldMode::Quadratic).unwrap();
        let h2 = nearfield_spd(&geom, p2, 1.0, NearfieldMode::Quadratic).unwrap();
        let rho = correlation_rho(&h1.entries, &h2.entries).unwrap();
        assert!(
            (closed - rho).abs() < 0.02,
            "closed {closed} vs channel {rho}"
        );
    }

    #[test]
    fn rho_closed_form_mixed_angles_match_oracle() {
        let geom = ArrayGeometry::new(513, 0.005, 0.01).unwrap();
        let cases = [
            (10.0, deg(90.0), 20.0, deg(80.0)),
            (8.0, deg(60.0), 25.0, deg(60.0)),
            (12.0, deg(100.0), 12.0, deg(95.0)),
        ];
        for (r1, t1, r2, t2) in cases {
            let p1 = Position::new(r1, t1).unwrap();
            let p2 = Position::new(r2, t2).unwrap();
            let closed = nearfield_rho_closed(&geom, p1, p2);
            let direct = rho_direct_sum(&geom, p1, p2);
            assert!(
                (closed - direct).abs() < 0.03,
                "({r1},{t1},{r2},{t2}): closed {closed} vs direct {direct}"
            );
        }
    }

    #[test]
    fn rho_closed_form_sweep_decays() {
        let p1 = Position::new(10.0, deg(90.0)).unwrap();
        let p2 = Position::new(20.0, deg(90.0)).unwrap();
        let mut prev = f64::INFINITY;
        let mut last = 1.0;
        for n in [65usize, 129, 257, 513, 1025, 2049, 4097] {
            let geom = ArrayGeometry::new(n, 0.005, 0.01).unwrap();
            let rho = nearfield_rho_closed(&geom, p1, p2);
            assert!(rho <= prev + 0.02, "non-monotone at N={n}: {rho} > {prev}");
            prev = rho;
            last = rho;
        }
        assert!(last < 0.05, "final rho {last}");
    }

    #[test]
    fn erf_quadrature_crosscheck_of_rho() {
        // Integral oracle ∫_{−1/2}^{1/2} e^{j(bNx + aN²x²)} dx by Simpson,
        // compared with the erf closed form to 1e−6.
        let geom = ArrayGeometry::new(513, 0.005, 0.01).unwrap();
        let p1 = Position::new(10.0, deg(90.0)).unwrap();
        let p2 = Position::new(20.0, deg(85.0)).unwrap();
        let kappa = TWO_PI / geom.wavelength;
        let d = geom.spacing_d;
        let a = kappa * d * d * (1.0 / (2.0 * p1.range_r)
            - p2.angle_theta.sin().powi(2) / (2.0 * p2.range_r));
        let b = kappa * d * (p2.angle_theta.cos() - p1.angle_theta.cos());
        let n = geom.n_antennas as f64;
        let panels = 400_000usize;
        let h = 1.0 / panels as f64;
        let f = |x: f64| Complex64::from_polar(1.0, b * n * x + a * n * n * x * x);
        let mut acc = f(-0.5) + f(0.5);
        for k in 1..panels {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(-0.5 + k as f64 * h);
        }
        let integral = (acc * h / 3.0).norm();
        let closed = nearfield_rho_closed(&geom, p1, p2);
        assert!(
            (closed - integral).abs() < 1e-6,
            "closed {closed} vs integral {integral}"
        );
    }
}
