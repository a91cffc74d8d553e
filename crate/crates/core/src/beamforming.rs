//! Linear multi-user transceivers: uplink combiners (MRC/ZF/LMMSE), downlink
//! precoders (MRT/ZF/RZF/SLNR/LMMSE), their achievable rates treating residual
//! interference as noise, and hybrid digital-analog SINR.
//!
//! Channels are stored column-wise: `H` is `N_BS × K` with column `k` the
//! channel `h_k` of user `k`. Combiner/precoder outputs are unit-norm
//! directions; transmit powers enter separately.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::{invert, solve};
use crate::{MaError, Result};

/// Combining / precoding criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UplinkMethod {
    /// Maximum-ratio combining `v_k = h_k`.
    Mrc,
    /// Zero-forcing: `v_k` is the k-th column of `H(HᴴH)⁻¹`.
    Zf,
    /// Linear MMSE: `v_k = (H·diag(p)·Hᴴ + σ²I)⁻¹ h_k`.
    Lmmse,
}

/// Downlink precoding criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DownlinkMethod {
    /// Maximum-ratio transmission `g_k = h_k/‖h_k‖`.
    Mrt,
    /// Zero-forcing: normalized columns of `H(HᴴH)⁻¹`.
    Zf,
    /// Regularized ZF: normalized columns of `H(αI + HᴴH)⁻¹`.
    Rzf { alpha: f64 },
    /// Signal-to-leakage-plus-noise ratio: normalized
    /// `(p_k·HHᴴ + σ_k²I)⁻¹ h_k` (the closed form of the principal
    /// generalized eigenvector).
    Slnr,
    /// Transmit LMMSE: normalized `(H·diag(p)·Hᴴ + σ_k²I)⁻¹ h_k`.
    Lmmse,
}

const ZF_CONDITION_LIMIT: f64 = 1e12;

fn check_channels(h: &DMatrix<Complex64>) -> Result<()> {
    if h.ncols() == 0 || h.nrows() == 0 {
        return Err(MaError::DimensionMismatch("empty channel matrix".into()));
    }
    Ok(())
}

/// Gram-matrix inverse `（HᴴH)⁻¹` with an explicit conditioning guard for the
/// zero-forcing constructions.
fn zf_gram_inverse(h: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if h.nrows() < h.ncols() {
        return Err(MaError::Infeasible(format!(
            "zero forcing needs N_BS ≥ K, got {} antennas for {} users",
            h.nrows(),
            h.ncols()
        )));
    }
    let gram = h.adjoint() * h;
    let ev = crate::linalg::hermitian_eigenvalues(&gram);
    let (min, max) = (ev.first().copied().unwrap_or(0.0), ev.last().copied().unwrap_or(0.0));
    if min <= 0.0 || max / min > ZF_CONDITION_LIMIT {
        return Err(MaError::Numerical(format!(
            "HᴴH condition number {:.3e} exceeds the zero-forcing limit",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    invert(&gram)
}

/// Uplink receive combiners, one unit-norm vector per user.
pub fn uplink_combiner(
    h: &DMatrix<Complex64>,
    powers: &[f64],
    noise: f64,
    method: UplinkMethod,
) -> Result<Vec<Vec<Complex64>>> {
    check_channels(h)?;
    let k = h.ncols();
    if powers.len() != k {
        return Err(MaError::DimensionMismatch(
            "one transmit power per user is required".into(),
        ));
    }
    if !(noise > 0.0) {
        return Err(MaError::InvalidArgument("noise power must be positive".into()));
    }
    let raw: Vec<DVector<Complex64>> = match method {
        UplinkMethod::Mrc => (0..k).map(|u| h.column(u).into_owned()).collect(),
        UplinkMethod::Zf => {
            let ginv = zf_gram_inverse(h)?;
            let m = h * ginv;
            (0..k).map(|u| m.column(u).into_owned()).collect()
        }
        UplinkMethod::Lmmse => {
            let mut cov = DMatrix::identity(h.nrows(), h.nrows()).scale(noise);
            for u in 0..k {
                let hu = h.column(u);
                cov += (hu * hu.adjoint()).scale(powers[u]);
            }
            (0..k)
                .map(|u| solve(&cov, &h.column(u).into_owned()))
                .collect::<Result<_>>()?
        }
    };
    Ok(raw
        .into_iter()
        .map(|v| {
            let n = v.norm();
            v.unscale(n).iter().copied().collect()
        })
        .collect())
}

/// Per-user uplink rates with combiners `v_k`, treating inter-user
/// interference as noise:
/// `R_k = log2(1 + p_k|v_kᴴh_k|²/(Σ_{k'≠k} p_{k'}|v_kᴴh_{k'}|² + σ²‖v_k‖²))`.
pub fn uplink_rates(
    h: &DMatrix<Complex64>,
    combiners: &[Vec<Complex64>],
    powers: &[f64],
    noise: f64,
) -> Result<Vec<f64>> {
    check_channels(h)?;
    let k = h.ncols();
    if combiners.len() != k || powers.len() != k {
        return Err(MaError::DimensionMismatch(
            "combiners and powers must match the user count".into(),
        ));
    }
    let mut rates = Vec::with_capacity(k);
    for u in 0..k {
        let v = &combiners[u];
        let vnorm = crate::linalg::norm_sqr(v);
        if vnorm == 0.0 {
            return Err(MaError::InvalidArgument(format!("zero combiner for user {u}")));
        }
        let mut signal = 0.0;
        let mut interference = 0.0;
        for j in 0..k {
            let cross = crate::linalg::inner(v, h.column(j).as_slice()).norm_sqr();
            if j == u {
                signal = powers[j] * cross;
            } else {
                interference += powers[j] * cross;
            }
        }
        rates.push((1.0 + signal / (interference + noise * vnorm)).log2());
    }
    Ok(rates)
}

/// Downlink precoder directions, unit-norm, one per user.
pub fn downlink_precoder(
    h: &DMatrix<Complex64>,
    method: DownlinkMethod,
    powers: &[f64],
    noise_powers: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    check_channels(h)?;
    let k = h.ncols();
    if powers.len() != k || noise_powers.len() != k {
        return Err(MaError::DimensionMismatch(
            "powers and noise powers must match the user count".into(),
        ));
    }
    let raw: Vec<DVector<Complex64>> = match method {
        DownlinkMethod::Mrt => (0..k).map(|u| h.column(u).into_owned()).collect(),
        DownlinkMethod::Zf => {
            let ginv = zf_gram_inverse(h)?;
            let m = h * ginv;
            (0..k).map(|u| m.column(u).into_owned()).collect()
        }
        DownlinkMethod::Rzf { alpha } => {
            if !(alpha > 0.0) {
                return Err(MaError::InvalidArgument(
                    "RZF regularizer must be positive".into(),
                ));
            }
            let reg = h.adjoint() * h + DMatrix::identity(k, k).scale(alpha);
            let m = h * invert(&reg)?;
            (0..k).map(|u| m.column(u).into_owned()).collect()
        }
        DownlinkMethod::Slnr => {
            let hh = h * h.adjoint();
            (0..k)
                .map(|u| {
                    let m = hh.clone().scale(powers[u])
                        + DMatrix::identity(h.nrows(), h.nrows()).scale(noise_powers[u]);
                    solve(&m, &h.column(u).into_owned())
                })
                .collect::<Result<_>>()?
        }
        DownlinkMethod::Lmmse => {
            let mut weighted = DMatrix::zeros(h.nrows(), h.nrows());
            for u in 0..k {
                let hu = h.column(u);
                weighted += (hu * hu.adjoint()).scale(powers[u]);
            }
            (0..k)
                .map(|u| {
                    let m = weighted.clone()
                        + DMatrix::identity(h.nrows(), h.nrows()).scale(noise_powers[u]);
                    solve(&m, &h.column(u).into_owned())
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(raw
        .into_iter()
        .map(|v| {
            let n = v.norm();
            v.unscale(n).iter().copied().collect()
        })
        .collect())
}

/// Per-user downlink (SDMA) rates with precoders `g_k`:
/// `R_k = log2(1 + p_k|h_kᴴg_k|²/(Σ_{k'≠k} p_{k'}|h_kᴴg_{k'}|² + σ_k²))`.
///
/// When `power_budget` is given, `Σ p_k‖g_k‖²` is checked against it.
pub fn downlink_rates(
    h: &DMatrix<Complex64>,
    precoders: &[Vec<Complex64>],
    powers: &[f64],
    noise_powers: &[f64],
    power_budget: Option<f64>,
) -> Result<Vec<f64>> {
    check_channels(h)?;
    let k = h.ncols();
    if precoders.len() != k || powers.len() != k || noise_powers.len() != k {
        return Err(MaError::DimensionMismatch(
            "precoders, powers, noises must match the user count".into(),
        ));
    }
    if let Some(p) = power_budget {
        let used: f64 = precoders
            .iter()
            .zip(powers)
            .map(|(g, &pk)| pk * crate::linalg::norm_sqr(g))
            .sum();
        if used > p * (1.0 + 1e-9) {
            return Err(MaError::InvalidArgument(format!(
                "transmit power {used} exceeds budget {p}"
            )));
        }
    }
    let mut rates = Vec::with_capacity(k);
    for u in 0..k {
        let hu = h.column(u);
        let mut signal = 0.0;
        let mut interference = 0.0;
        for j in 0..k {
            let cross = crate::linalg::inner(hu.as_slice(), &precoders[j]).norm_sqr();
            if j == u {
                signal = powers[j] * cross;
            } else {
                interference += powers[j] * cross;
            }
        }
        rates.push((1.0 + signal / (interference + noise_powers[u])).log2());
    }
    Ok(rates)
}

/// A hybrid digital-analog transmitter: phase-only analog stage `F`
/// (`N_BS × N_RF`, entries of modulus `1/√(N_RF·N_BS)`), digital stage `W`
/// (`N_RF × K`), total transmit power `p`.
#[derive(Debug, Clone)]
pub struct HybridConfig {
    pub analog: DMatrix<Complex64>,
    pub digital: DMatrix<Complex64>,
    pub power: f64,
}

impl HybridConfig {
    /// Checks the constant-modulus and power constraints.
    pub fn validate(&self) -> Result<()> {
        let (n_bs, n_rf) = (self.analog.nrows(), self.analog.ncols());
        if self.digital.nrows() != n_rf {
            return Err(MaError::DimensionMismatch(
                "digital stage rows must equal the RF chain count".into(),
            ));
        }
        let want = 1.0 / ((n_rf * n_bs) as f64).sqrt();
        for z in self.analog.iter() {
            if (z.norm() - want).abs() > 1e-9 * want {
                return Err(MaError::InvalidArgument(format!(
                    "analog entry modulus {} violates the phase-shifter constraint {want}",
                    z.norm()
                )));
            }
        }
        let fw = &self.analog * &self.digital;
        let used: f64 = fw.iter().map(|z| z.norm_sqr()).sum();
        if (used - self.power).abs() > 1e-9 * self.power.max(1.0) {
            return Err(MaError::InvalidArgument(format!(
                "trace(WᴴFᴴFW) = {used} does not meet the power constraint {}",
                self.power
            )));
        }
        Ok(())
    }

    /// Scales the digital stage so the transmit power constraint binds.
    pub fn normalize_power(&mut self) {
        let fw = &self.analog * &self.digital;
        let used: f64 = fw.iter().map(|z| z.norm_sqr()).sum();
        if used > 0.0 {
            self.digital *= Complex64::new((self.power / used).sqrt(), 0.0);
        }
    }
}

/// Per-user hybrid-beamforming SINRs and rates:
/// `γ_k = |h_kᴴF·w_k|²/(Σ_{k'≠k}|h_kᴴF·w_{k'}|² + σ_k²)`.
pub fn hybrid_sinr(
    config: &HybridConfig,
    h: &DMatrix<Complex64>,
    noise_powers: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    config.validate()?;
    check_channels(h)?;
    let k = config.digital.ncols();
    if h.ncols() != k || noise_powers.len() != k {
        return Err(MaError::DimensionMismatch(
            "channel columns and noises must match the digital-stage user count".into(),
        ));
    }
    if h.nrows() != config.analog.nrows() {
        return Err(MaError::DimensionMismatch(
            "channel rows must match the antenna count".into(),
        ));
    }
    let fw = &config.analog * &config.digital; // N_BS × K effective precoders
    let mut sinrs = Vec::with_capacity(k);
    let mut rates = Vec::with_capacity(k);
    for u in 0..k {
        let hu = h.column(u);
        let mut signal = 0.0;
        let mut interference = 0.0;
        for j in 0..k {
            let cross = hu.dotc(&fw.column(j)).norm_sqr();
            if j == u {
                signal = cross;
            } else {
                interference += cross;
            }
        }
        let g = signal / (interference + noise_powers[u]);
        sinrs.push(g);
        rates.push((1.0 + g).log2());
    }
    Ok((sinrs, rates))
}
