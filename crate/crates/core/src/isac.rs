//! Mutual-information sensing metrics and integrated sensing-and-communication
//! (ISAC) rate regions.
//!
//! Sensing performance is measured by the mutual information between the
//! random target response and the echo observation, normalized by the pulse
//! length into a sensing rate (SR) in bits per channel use. Communication
//! performance is the usual Shannon rate (CR). The module provides:
//!
//! - stochastic target-response synthesis under the Swerling-I model
//!   ([`target_response`]);
//! - sensing mutual information in the general (vectorized) form and the
//!   separated-receive-antenna form ([`sensing_mi`]);
//! - the Gaussian distortion-rate function, the universal lower bound on
//!   estimation distortion at a given sensing MI ([`gaussian_distortion_rate`]);
//! - four case-study SR-CR regions with orthogonal (OSAC) baselines:
//!   uplink SIC-based ISAC ([`UplinkIsacInstance`]), downlink SISO-NOMA
//!   ([`dl_siso_noma_isac`]), downlink single-user MISO
//!   ([`dl_su_miso_isac`]), and downlink cluster-based MIMO-NOMA
//!   ([`ClusterIsacInstance`]).
//!
//! Sensing noise is unit variance per receive entry throughout; power scaling
//! belongs in the probing signal and the reflection variances.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::foundation::{steering_vector, ArrayGeometry};
use crate::linalg::{
    col, from_columns, hermitian_eigen, hermitian_eigenvalues, inner, log2_det_i_plus, norm_sqr,
    water_fill,
};
use crate::noma::{intercluster_zf, ClusterAssignment, ZfDesign, ZfInput};
use crate::rng::{keyed_rng, standard_complex, tag};
use crate::{MaError, Result};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Collection of point targets sensed by a transmit/receive array pair.
///
/// Target `q` sits at angle `angles[q]` (radians) and reflects with a
/// Swerling-I coefficient `α_q ~ CN(0, variances[q])`: the radar cross section
/// is constant from pulse to pulse with Rayleigh-distributed amplitude, and
/// `variances[q]` absorbs both the mean reflection strength and the round-trip
/// path loss. A zero variance is allowed and describes an absent target; it
/// contributes nothing to the response.
#[derive(Debug, Clone)]
pub struct TargetModel {
    /// Direction of arrival of each target, radians.
    pub angles: Vec<f64>,
    /// Reflection-coefficient power `ς_q²` of each target.
    pub variances: Vec<f64>,
    /// Transmit array at the dual-functional BS.
    pub tx_geometry: ArrayGeometry,
    /// Receive array at the dual-functional BS.
    pub rx_geometry: ArrayGeometry,
}

impl TargetModel {
    /// Validates lengths and variance signs.
    pub fn new(
        angles: Vec<f64>,
        variances: Vec<f64>,
        tx_geometry: ArrayGeometry,
        rx_geometry: ArrayGeometry,
    ) -> Result<Self> {
        if angles.len() != variances.len() {
            return Err(MaError::DimensionMismatch(
                "one variance per target angle is required".into(),
            ));
        }
        if variances.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(MaError::InvalidArgument(
                "reflection variances must be nonnegative".into(),
            ));
        }
        Ok(Self {
            angles,
            variances,
            tx_geometry,
            rx_geometry,
        })
    }
}

/// One draw of the target response together with its second-order statistics.
#[derive(Debug, Clone)]
pub struct TargetResponse {
    /// Sampled response `G = Σ_q α_q a_r(θ_q) b_tᵀ(θ_q)`, `N_r × N_t`.
    pub g: DMatrix<Complex64>,
    /// Covariance `R_G = Σ_q ς_q² (b_q ⊗ a_q)(b_q ⊗ a_q)ᴴ` of the vectorized
    /// response, `N_r·N_t × N_r·N_t`.
    pub r_g: DMatrix<Complex64>,
    /// Transmit-side correlation `R = Σ_q ς_q² b_q b_qᴴ`, `N_t × N_t`; this is
    /// the matrix entering the separated-antenna sensing MI.
    pub r_tx: DMatrix<Complex64>,
}

/// Samples a target response under the Swerling-I model.
///
/// Reflection coefficients are drawn once per scenario (they are constant
/// from pulse to pulse), keyed by `seed` so repeated calls with the same seed
/// return the same draw.
pub fn target_response(model: &TargetModel, seed: u64) -> TargetResponse {
    let n_t = model.tx_geometry.n_antennas;
    let n_r = model.rx_geometry.n_antennas;
    let mut g = DMatrix::zeros(n_r, n_t);
    let mut r_g = DMatrix::zeros(n_r * n_t, n_r * n_t);
    let mut r_tx = DMatrix::zeros(n_t, n_t);
    for (q, (&theta, &var)) in model.angles.iter().zip(&model.variances).enumerate() {
        if var == 0.0 {
            continue;
        }
        let a = steering_vector(&model.rx_geometry, theta);
        let b = steering_vector(&model.tx_geometry, theta);
        let mut rng = keyed_rng(seed, tag::TARGET, q as u64, 0);
        let alpha = standard_complex(&mut rng) * var.sqrt();
        for i in 0..n_r {
            for j in 0..n_t {
                g[(i, j)] += alpha * a[i] * b[j];
            }
        }
        // b ⊗ a stacks N_r-blocks indexed by the transmit antenna.
        let ba: Vec<Complex64> = b
            .iter()
            .flat_map(|&bj| a.iter().map(move |&ai| bj * ai))
            .collect();
        for i in 0..ba.len() {
            for j in 0..ba.len() {
                r_g[(i, j)] += ba[i] * ba[j].conj() * var;
            }
        }
        for i in 0..n_t {
            for j in 0..n_t {
                r_tx[(i, j)] += b[i] * b[j].conj() * var;
            }
        }
    }
    TargetResponse { g, r_g, r_tx }
}

/// Echo observation model `Y_s = G X_s + N_s` with unit-variance noise
/// entries: transmit correlation, probing signal, pulse length, and receive
/// array size.
#[derive(Debug, Clone)]
pub struct SensingScene {
    /// Transmit correlation `R` of the target response, Hermitian PSD
    /// `N_t × N_t`.
    pub r: DMatrix<Complex64>,
    /// Pulse length `L_s` in symbols.
    pub pulse_len: usize,
    /// Number of (widely separated) receive antennas `N_r`.
    pub n_rx: usize,
    /// Probing signal `X_s`, `N_t × L_s`.
    pub probing: DMatrix<Complex64>,
}

impl SensingScene {
    /// Validates Hermitian positive semidefiniteness of `R` and the probing
    /// signal dimensions.
    pub fn new(
        r: DMatrix<Complex64>,
        pulse_len: usize,
        n_rx: usize,
        probing: DMatrix<Complex64>,
    ) -> Result<Self> {
        if r.nrows() != r.ncols() {
            return Err(MaError::DimensionMismatch(
                "transmit correlation must be square".into(),
            ));
        }
        if pulse_len == 0 || n_rx == 0 {
            return Err(MaError::InvalidArgument(
                "pulse length and receive antenna count must be positive".into(),
            ));
        }
        if probing.nrows() != r.nrows() || probing.ncols() != pulse_len {
            return Err(MaError::DimensionMismatch(format!(
                "probing signal must be {} x {}",
                r.nrows(),
                pulse_len
            )));
        }
        let scale = r.norm().max(1.0);
        if (&r - r.adjoint()).norm() > 1e-9 * scale {
            return Err(MaError::InvalidArgument(
                "transmit correlation must be Hermitian".into(),
            ));
        }
        let min_eig = hermitian_eigenvalues(&r)
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -1e-9 * scale {
            return Err(MaError::InvalidArgument(
                "transmit correlation must be positive semidefinite".into(),
            ));
        }
        Ok(Self {
            r,
            pulse_len,
            n_rx,
            probing,
        })
    }
}

/// Which sensing-MI expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiMode {
    /// Vectorized form `logdet(I + (I ⊗ X_sᴴ) R_G (I ⊗ X_s))` with
    /// `R_G = I_{N_r} ⊗ R`.
    General,
    /// Separated-receive-antenna form `N_r · logdet(I + X_sᴴ R X_s)`; equal
    /// to the general form whenever `R_G = I ⊗ R`.
    Separated,
}

/// Sensing mutual information of a scene in bits (per pulse, not yet
/// normalized by the pulse length).
pub fn sensing_mi(scene: &SensingScene, mode: MiMode) -> Result<f64> {
    match mode {
        MiMode::Separated => {
            let inner_mat = scene.probing.adjoint() * &scene.r * &scene.probing;
            Ok(scene.n_rx as f64 * log2_det_i_plus(&inner_mat)?)
        }
        MiMode::General => {
            let eye = DMatrix::<Complex64>::identity(scene.n_rx, scene.n_rx);
            let r_g = eye.kronecker(&scene.r);
            sensing_mi_general(&r_g, &scene.probing, scene.n_rx)
        }
    }
}

/// Sensing MI for an arbitrary response covariance `R_G` (covariance of the
/// vectorized response, receive antenna as the outer Kronecker index):
/// `logdet(I + (I_{N_r} ⊗ X_sᴴ) R_G (I_{N_r} ⊗ X_s))` in bits.
pub fn sensing_mi_general(
    r_g: &DMatrix<Complex64>,
    probing: &DMatrix<Complex64>,
    n_rx: usize,
) -> Result<f64> {
    let n_t = probing.nrows();
    if r_g.nrows() != n_rx * n_t || r_g.ncols() != n_rx * n_t {
        return Err(MaError::DimensionMismatch(format!(
            "response covariance must be {0} x {0}",
            n_rx * n_t
        )));
    }
    let eye = DMatrix::<Complex64>::identity(n_rx, n_rx);
    let chan = eye.kronecker(&probing.adjoint());
    log2_det_i_plus(&(&chan * r_g * chan.adjoint()))
}

/// Gaussian distortion-rate function: the minimum mean-squared distortion of
/// independent complex Gaussian parameters with the given prior `variances`
/// when at most `rate_bits` of information about them is available.
///
/// Scalar case: `D = ς²·2^{−R}`. Vector case: reverse water-filling — a
/// common level `γ` is chosen so the active components spend
/// `log2(ς_i²/γ)` bits each, and components below the level are not described
/// at all (`D_i = ς_i²`).
pub fn gaussian_distortion_rate(variances: &[f64], rate_bits: f64) -> Result<f64> {
    if rate_bits < 0.0 || !rate_bits.is_finite() {
        return Err(MaError::InvalidArgument(
            "rate must be finite and nonnegative".into(),
        ));
    }
    if variances.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(MaError::InvalidArgument(
            "prior variances must be nonnegative".into(),
        ));
    }
    let mut sorted: Vec<f64> = variances.iter().copied().filter(|&v| v > 0.0).collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if sorted.is_empty() || rate_bits == 0.0 {
        return Ok(variances.iter().sum());
    }
    // With the m largest components active, the water level solves
    // Σ_{i<m} log2(ς_i²/γ) = R, i.e. γ = (Π ς_i²)^{1/m} · 2^{−R/m}; the
    // candidate is valid when γ lies below the smallest active variance.
    let mut log2_prod = 0.0;
    for m in 1..=sorted.len() {
        log2_prod += sorted[m - 1].log2();
        let log2_gamma = (log2_prod - rate_bits) / m as f64;
        let gamma = log2_gamma.exp2();
        let next = sorted.get(m).copied().unwrap_or(0.0);
        if gamma >= next - 1e-15 * sorted[0] || m == sorted.len() {
            let tail: f64 = sorted[m..].iter().sum();
            return Ok(gamma * m as f64 + tail);
        }
    }
    unreachable!("reverse water-filling always terminates at m = n");
}

/// How a point of an SR-CR region was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointLabel {
    /// Sensing-centric design (maximum SR).
    SensingCentric,
    /// Communication-centric design (maximum CR).
    CommCentric,
    /// Rate-profile Pareto point with sensing weight `alpha`.
    Pareto {
        /// Sensing rate-profile weight in `[0, 1]`.
        alpha: f64,
    },
    /// Time sharing: fraction `t` of the frame uses the sensing-favoring
    /// corner, `1 − t` the communication-favoring corner.
    TimeShare {
        /// Sensing-corner time fraction in `[0, 1]`.
        t: f64,
    },
    /// Orthogonal resource allocation giving the sensing function the
    /// fraction `split` of the resources.
    Osac {
        /// Sensing resource fraction in `[0, 1]`.
        split: f64,
    },
}

/// One achievable (sensing rate, communication rate) pair in bits per channel
/// use.
#[derive(Debug, Clone, PartialEq)]
pub struct SrCrPoint {
    /// Sensing rate.
    pub sr: f64,
    /// Communication rate (sum rate over users where applicable).
    pub cr: f64,
    /// Provenance of the point.
    pub label: PointLabel,
}

/// Straight-line time sharing between two operating points.
pub fn time_share(a: &SrCrPoint, b: &SrCrPoint, grid: &[f64]) -> Result<Vec<SrCrPoint>> {
    if grid.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(MaError::InvalidArgument(
            "time-share fractions must lie in [0, 1]".into(),
        ));
    }
    Ok(grid
        .iter()
        .map(|&t| SrCrPoint {
            sr: t * a.sr + (1.0 - t) * b.sr,
            cr: t * a.cr + (1.0 - t) * b.cr,
            label: PointLabel::TimeShare { t },
        })
        .collect())
}

/// Orthogonal sensing-and-communication baseline: the resource fraction `t`
/// runs the sensing function alone and `1 − t` the communication function
/// alone, so the achievable pairs are `(t·sr_max, (1−t)·cr_max)`.
pub fn osac_region(sr_max: f64, cr_max: f64, split_grid: &[f64]) -> Result<Vec<SrCrPoint>> {
    if split_grid.len() < 2 {
        return Err(MaError::InvalidArgument(
            "at least two split points are required".into(),
        ));
    }
    if split_grid.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(MaError::InvalidArgument(
            "resource splits must lie in [0, 1]".into(),
        ));
    }
    Ok(split_grid
        .iter()
        .map(|&t| SrCrPoint {
            sr: t * sr_max,
            cr: (1.0 - t) * cr_max,
            label: PointLabel::Osac { split: t },
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Uplink SIC-based ISAC
// ---------------------------------------------------------------------------

/// Outer-stage SIC order at the BS of an uplink ISAC system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UplinkSic {
    /// Sense first treating the communication signal as noise, then decode
    /// the users interference-free: best communication performance (C-SIC).
    CommFavoring,
    /// Decode the users first treating the sensing echo as noise, then sense
    /// interference-free: best sensing performance (S-SIC).
    SensingFavoring,
}

/// Uplink ISAC system: `K` single-antenna users transmit to an `N_r`-antenna
/// BS whose own probing signal simultaneously illuminates the targets, so the
/// BS observes `Y = Σ_k h_k x_kᵀ + G X_s + N` with unit-variance noise.
///
/// The exact MI of the interference-limited stages is not available in closed
/// form here; the corners use a Gaussian noise-whitening model — the
/// not-yet-cancelled signal's spatial covariance is treated as colored
/// Gaussian noise and whitened before applying the respective MI formula.
/// The echo covariance uses the isotropic lift `E[G B Gᴴ] = tr(R B)·I` valid
/// under the separated-antenna response model.
#[derive(Debug, Clone)]
pub struct UplinkIsacInstance {
    /// Uplink channel vectors `h_k ∈ C^{N_r}`, one per user.
    pub channels: Vec<Vec<Complex64>>,
    /// Transmit powers `p_k ≥ 0`.
    pub powers: Vec<f64>,
    /// Sensing scene; `scene.n_rx` must equal the channel dimension and
    /// `scene.pulse_len` is the shared frame length `L`.
    pub scene: SensingScene,
}

impl UplinkIsacInstance {
    fn validate(&self) -> Result<()> {
        if self.channels.len() != self.powers.len() {
            return Err(MaError::DimensionMismatch(
                "one power per user is required".into(),
            ));
        }
        if self.powers.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(MaError::InvalidArgument(
                "user powers must be nonnegative".into(),
            ));
        }
        let n_r = self.scene.n_rx;
        if self.channels.iter().any(|h| h.len() != n_r) {
            return Err(MaError::DimensionMismatch(
                "each uplink channel must match the receive array size".into(),
            ));
        }
        Ok(())
    }

    /// Spatial covariance `Σ_k p_k h_k h_kᴴ` of the superposed communication
    /// signal.
    fn comm_covariance(&self) -> DMatrix<Complex64> {
        let n_r = self.scene.n_rx;
        let mut k = DMatrix::zeros(n_r, n_r);
        for (h, &p) in self.channels.iter().zip(&self.powers) {
            for i in 0..n_r {
                for j in 0..n_r {
                    k[(i, j)] += h[i] * h[j].conj() * p;
                }
            }
        }
        k
    }

    /// MAC sum capacity `logdet(I + Σ p_k h_k h_kᴴ)` with unit noise (the
    /// interference-free communication corner).
    pub fn comm_sum_capacity(&self) -> Result<f64> {
        self.validate()?;
        log2_det_i_plus(&self.comm_covariance())
    }

    /// Interference-free sensing rate `L⁻¹·N_r·logdet(I + X_sᴴRX_s)`.
    pub fn sensing_rate_max(&self) -> Result<f64> {
        self.validate()?;
        Ok(sensing_mi(&self.scene, MiMode::Separated)? / self.scene.pulse_len as f64)
    }

    /// Corner point of the ISAC region under the given outer SIC order.
    pub fn corner(&self, sic: UplinkSic) -> Result<SrCrPoint> {
        self.validate()?;
        let l = self.scene.pulse_len as f64;
        let sr_max = self.sensing_rate_max()?;
        let cr_max = self.comm_sum_capacity()?;
        match sic {
            UplinkSic::CommFavoring => {
                // Sensing sees the communication signal as colored noise with
                // per-column covariance K_c = I + Σ p h hᴴ; after whitening
                // the response covariance becomes K_c^{−T} ⊗ R, so the MI is
                // Σ_{i,j} log2(1 + ν_j / κ_i) over the eigenvalues κ of K_c
                // and ν of X_sᴴRX_s.
                let mut k_c = self.comm_covariance();
                for i in 0..k_c.nrows() {
                    k_c[(i, i)] += Complex64::new(1.0, 0.0);
                }
                let kappas = hermitian_eigenvalues(&k_c);
                let gram = self.scene.probing.adjoint() * &self.scene.r * &self.scene.probing;
                let nus = hermitian_eigenvalues(&gram);
                let mut mi = 0.0;
                for &kappa in &kappas {
                    for &nu in &nus {
                        mi += (1.0 + nu.max(0.0) / kappa).log2();
                    }
                }
                Ok(SrCrPoint {
                    sr: mi / l,
                    cr: cr_max,
                    label: PointLabel::CommCentric,
                })
            }
            UplinkSic::SensingFavoring => {
                // Decoding sees the echo as noise; under the separated model
                // the average per-symbol echo covariance is the isotropic
                // lift (tr(R X_sX_sᴴ)/L)·I.
                let echo = (&self.scene.r
                    * (&self.scene.probing * self.scene.probing.adjoint()))
                .trace()
                .re
                    / l;
                let scale = Complex64::new(1.0 / (1.0 + echo.max(0.0)), 0.0);
                let cr = log2_det_i_plus(&(self.comm_covariance() * scale))?;
                Ok(SrCrPoint {
                    sr: sr_max,
                    cr,
                    label: PointLabel::SensingCentric,
                })
            }
        }
    }

    /// ISAC region sample: both corners plus time-share points at the given
    /// sensing-corner fractions.
    pub fn region(&self, time_share_grid: &[f64]) -> Result<Vec<SrCrPoint>> {
        let c_corner = self.corner(UplinkSic::CommFavoring)?;
        let s_corner = self.corner(UplinkSic::SensingFavoring)?;
        let mut points = vec![c_corner.clone()];
        points.extend(time_share(&s_corner, &c_corner, time_share_grid)?);
        points.push(s_corner);
        Ok(points)
    }

    /// OSAC baseline built from the interference-free component maxima.
    pub fn osac(&self, split_grid: &[f64]) -> Result<Vec<SrCrPoint>> {
        osac_region(
            self.sensing_rate_max()?,
            self.comm_sum_capacity()?,
            split_grid,
        )
    }
}

// ---------------------------------------------------------------------------
// Downlink SISO-NOMA ISAC
// ---------------------------------------------------------------------------

/// Rate region of the downlink SISO-NOMA ISAC system: a single-antenna BS
/// sends the superposed two-user NOMA signal, which simultaneously serves as
/// the sensing waveform.
#[derive(Debug, Clone)]
pub struct SisoNomaIsacRegion {
    /// Maximum sensing rate `L⁻¹ log2(1 + L·p·ς²)`, attained at full power.
    pub sr_max: f64,
    /// Two-user NOMA communication region boundary at full power, one
    /// `[R_1, R_2]` pair per power split.
    pub cr_boundary: Vec<Vec<f64>>,
    /// Maximum sum communication rate on the boundary.
    pub sum_cr_max: f64,
    /// Simultaneously achievable corner `(sr_max, sum_cr_max)`: the region is
    /// the full rectangle, there is no sensing-communication tradeoff.
    pub corner: SrCrPoint,
}

/// Downlink SISO-NOMA ISAC region. `channel_gains[k] = |h_k|²` and
/// `noise_powers[k]` describe the two users; `varsigma_sq` is the target
/// reflection variance seen by the single-antenna BS; `resolution` controls
/// the NOMA power-split sampling of the communication boundary.
pub fn dl_siso_noma_isac(
    power: f64,
    channel_gains: &[f64],
    noise_powers: &[f64],
    varsigma_sq: f64,
    pulse_len: usize,
    resolution: usize,
) -> Result<SisoNomaIsacRegion> {
    if channel_gains.len() != 2 || noise_powers.len() != 2 {
        return Err(MaError::DimensionMismatch(
            "exactly two users are required".into(),
        ));
    }
    if power < 0.0 || varsigma_sq < 0.0 || channel_gains.iter().any(|&g| g <= 0.0) {
        return Err(MaError::InvalidArgument(
            "power and variances must be nonnegative and gains positive".into(),
        ));
    }
    if pulse_len == 0 || resolution < 2 {
        return Err(MaError::InvalidArgument(
            "pulse length must be positive and resolution at least 2".into(),
        ));
    }
    let l = pulse_len as f64;
    // The full-power superposed signal carries L·p energy onto the ς² target.
    let sr_max = (1.0 + l * power * varsigma_sq).log2() / l;
    // Effective scalar BC with noises σ_k²/|h_k|².
    let users = crate::capacity::ScalarUsers::new(
        power,
        noise_powers
            .iter()
            .zip(channel_gains)
            .map(|(&s, &g)| s / g)
            .collect(),
    )?;
    let cr_boundary = crate::capacity::scalar_bc_region(&users, resolution)?;
    let sum_cr_max = cr_boundary
        .iter()
        .map(|r| r.iter().sum::<f64>())
        .fold(0.0, f64::max);
    Ok(SisoNomaIsacRegion {
        sr_max,
        cr_boundary,
        sum_cr_max,
        corner: SrCrPoint {
            sr: sr_max,
            cr: sum_cr_max,
            label: PointLabel::Pareto { alpha: 0.5 },
        },
    })
}

// ---------------------------------------------------------------------------
// Downlink SU-MISO ISAC
// ---------------------------------------------------------------------------

/// Parameters of the downlink single-user MISO ISAC system: an `N_t`-antenna
/// BS serves one single-antenna user through `h_c` while sensing one target
/// at `theta_target` with reflection variance `varsigma_sq`.
#[derive(Debug, Clone)]
pub struct SuMisoIsacParams {
    /// Communication channel `h_c ∈ C^{N_t}` (noise-normalized).
    pub h_c: Vec<Complex64>,
    /// Target direction, radians.
    pub theta_target: f64,
    /// Reflection-coefficient variance `ς₁²`.
    pub varsigma_sq: f64,
    /// Transmit power budget `p`.
    pub power: f64,
    /// Receive antennas used for sensing.
    pub n_rx: usize,
    /// Frame/pulse length `L`.
    pub pulse_len: usize,
    /// Transmit array geometry (defines the sensing steering vector).
    pub tx_geometry: ArrayGeometry,
}

impl SuMisoIsacParams {
    fn validate(&self) -> Result<()> {
        if self.h_c.len() != self.tx_geometry.n_antennas {
            return Err(MaError::DimensionMismatch(
                "communication channel must match the transmit array size".into(),
            ));
        }
        if norm_sqr(&self.h_c) == 0.0 {
            return Err(MaError::InvalidArgument(
                "communication channel must be nonzero".into(),
            ));
        }
        if self.power <= 0.0 || self.varsigma_sq <= 0.0 || self.n_rx == 0 || self.pulse_len == 0 {
            return Err(MaError::InvalidArgument(
                "power, variance, receive antennas, and pulse length must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Sensing channel `h_s = b_t(θ₁)`.
    pub fn sensing_channel(&self) -> Vec<Complex64> {
        steering_vector(&self.tx_geometry, self.theta_target)
    }

    /// `(SR, CR)` achieved by a unit-norm beamformer `w`.
    pub fn rates(&self, w: &[Complex64]) -> Result<(f64, f64)> {
        self.validate()?;
        if w.len() != self.h_c.len() {
            return Err(MaError::DimensionMismatch(
                "beamformer must match the transmit array size".into(),
            ));
        }
        let h_s = self.sensing_channel();
        let l = self.pulse_len as f64;
        let cr = (1.0 + self.power * inner(w, &self.h_c).norm_sqr()).log2();
        let sr = (1.0
            + self.power * self.n_rx as f64 * l * self.varsigma_sq * inner(w, &h_s).norm_sqr())
        .log2()
            / l;
        Ok((sr, cr))
    }
}

/// SR-CR region of the downlink SU-MISO ISAC system: the two centric designs
/// plus the rate-profile Pareto boundary.
#[derive(Debug, Clone)]
pub struct SuMisoIsacRegion {
    /// Sensing-centric point, `w = h_s/‖h_s‖`.
    pub sensing_centric: SrCrPoint,
    /// Communication-centric point, `w = h_c/‖h_c‖`.
    pub comm_centric: SrCrPoint,
    /// Pareto-boundary points, one per rate-profile weight.
    pub pareto: Vec<SrCrPoint>,
}

/// Orthonormal span basis and channel coordinates used by the Pareto solver.
struct SuMisoSpan {
    e1: Vec<Complex64>,
    e2: Vec<Complex64>,
    /// `e1ᴴh_s`.
    a: Complex64,
    /// `e2ᴴh_s ≥ 0` by construction.
    b: f64,
    h_c_norm: f64,
}

impl SuMisoSpan {
    fn build(params: &SuMisoIsacParams) -> Self {
        let h_s = params.sensing_channel();
        let h_c_norm = norm_sqr(&params.h_c).sqrt();
        let e1: Vec<Complex64> = params.h_c.iter().map(|&z| z / h_c_norm).collect();
        let a = inner(&e1, &h_s);
        let resid: Vec<Complex64> = h_s
            .iter()
            .zip(&e1)
            .map(|(&hs, &e)| hs - a * e)
            .collect();
        let b = norm_sqr(&resid).sqrt();
        let e2 = if b > 1e-12 {
            resid.iter().map(|&z| z / b).collect()
        } else {
            vec![Complex64::new(0.0, 0.0); e1.len()]
        };
        Self {
            e1,
            e2,
            a,
            b: if b > 1e-12 { b } else { 0.0 },
            h_c_norm,
        }
    }

    /// Beamformer `w(t) = cos t · e1 + e^{jφ} sin t · e2` with the phase
    /// aligning both channel responses.
    fn beamformer(&self, t: f64) -> Vec<Complex64> {
        let phase = Complex64::from_polar(1.0, -self.a.arg());
        self.e1
            .iter()
            .zip(&self.e2)
            .map(|(&e1, &e2)| e1 * t.cos() + e2 * phase * t.sin())
            .collect()
    }

    /// Angle maximizing the sensing response.
    fn t_star(&self) -> f64 {
        self.b.atan2(self.a.norm())
    }
}

/// Computes the SU-MISO ISAC region. For each `alpha` in `alpha_grid` the
/// rate-profile problem `max R s.t. SR ≥ αR, CR ≥ (1−α)R, ‖w‖ = 1` is solved
/// by restricting `w` to `span{h_c, h_s}` (a component orthogonal to both
/// channels changes neither rate and wastes norm) and bisecting on `R` to
/// tolerance `1e−6`.
pub fn dl_su_miso_isac(
    params: &SuMisoIsacParams,
    alpha_grid: &[f64],
) -> Result<SuMisoIsacRegion> {
    params.validate()?;
    if alpha_grid.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
        return Err(MaError::InvalidArgument(
            "rate-profile weights must lie in [0, 1]".into(),
        ));
    }
    let h_s = params.sensing_channel();
    let h_s_norm = norm_sqr(&h_s).sqrt();
    let w_s: Vec<Complex64> = h_s.iter().map(|&z| z / h_s_norm).collect();
    let h_c_norm = norm_sqr(&params.h_c).sqrt();
    let w_c: Vec<Complex64> = params.h_c.iter().map(|&z| z / h_c_norm).collect();
    let (sr_s, cr_s) = params.rates(&w_s)?;
    let (sr_c, cr_c) = params.rates(&w_c)?;
    let sensing_centric = SrCrPoint {
        sr: sr_s,
        cr: cr_s,
        label: PointLabel::SensingCentric,
    };
    let comm_centric = SrCrPoint {
        sr: sr_c,
        cr: cr_c,
        label: PointLabel::CommCentric,
    };

    let span = SuMisoSpan::build(params);
    let l = params.pulse_len as f64;
    let sense_gain = params.power * params.n_rx as f64 * l * params.varsigma_sq;
    // Feasibility of a target R: the comm constraint caps t at t_c, the best
    // sensing response under that cap is at min(t_c, t*).
    let feasible_t = |alpha: f64, r: f64| -> Option<f64> {
        let c_req = ((1.0 - alpha) * r).exp2() - 1.0;
        let c0 = (c_req / params.power).sqrt() / span.h_c_norm;
        if c0 > 1.0 {
            return None;
        }
        let t_c = c0.clamp(-1.0, 1.0).acos();
        let t = t_c.min(span.t_star());
        let s_req = (alpha * r * l).exp2() - 1.0;
        let s0 = (s_req / sense_gain).sqrt();
        let response = t.cos() * span.a.norm() + t.sin() * span.b;
        if response + 1e-12 >= s0 {
            Some(t)
        } else {
            None
        }
    };

    let mut pareto = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        if alpha == 0.0 {
            pareto.push(SrCrPoint {
                sr: sr_c,
                cr: cr_c,
                label: PointLabel::Pareto { alpha },
            });
            continue;
        }
        if alpha == 1.0 {
            pareto.push(SrCrPoint {
                sr: sr_s,
                cr: cr_s,
                label: PointLabel::Pareto { alpha },
            });
            continue;
        }
        let mut lo = 0.0;
        let mut hi = sr_s + cr_c + 1.0;
        debug_assert!(feasible_t(alpha, lo).is_some());
        while feasible_t(alpha, hi).is_some() {
            hi *= 2.0;
        }
        while hi - lo > 1e-7 {
            let mid = 0.5 * (lo + hi);
            if feasible_t(alpha, mid).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = feasible_t(alpha, lo).expect("lower bisection bound stays feasible");
        let w = span.beamformer(t);
        let (sr, cr) = params.rates(&w)?;
        pareto.push(SrCrPoint {
            sr,
            cr,
            label: PointLabel::Pareto { alpha },
        });
    }
    Ok(SuMisoIsacRegion {
        sensing_centric,
        comm_centric,
        pareto,
    })
}

// ---------------------------------------------------------------------------
// Downlink cluster-based MIMO-NOMA ISAC
// ---------------------------------------------------------------------------

/// Downlink cluster-based MIMO-NOMA ISAC system: the `N_t`-antenna BS sends
/// one beam per cluster carrying the superposed intra-cluster NOMA signal,
/// the same waveform illuminates targets with transmit correlation `R`, and
/// each `N_U`-antenna user cancels other clusters by zero-forcing equalizers
/// (feasible when `N_U ≥ N_Cluster`).
#[derive(Debug, Clone)]
pub struct ClusterIsacInstance {
    /// `user_channels[c][k]` is `H_{c,k} ∈ C^{N_t × N_U}` of user `k` in
    /// cluster `c`; the cluster count must not exceed `N_t`.
    pub user_channels: Vec<Vec<DMatrix<Complex64>>>,
    /// Transmit correlation of the target response, Hermitian PSD `N_t × N_t`.
    pub r: DMatrix<Complex64>,
    /// Transmit power budget.
    pub power: f64,
    /// Frame/pulse length `L`.
    pub pulse_len: usize,
    /// Sensing receive antennas `N_r`.
    pub n_rx: usize,
    /// Per-user communication noise power `σ²`.
    pub noise: f64,
}

/// One evaluated cluster design: beam directions, cluster powers, and rates.
#[derive(Debug, Clone)]
pub struct ClusterDesign {
    /// Unit-norm beam direction per cluster.
    pub directions: Vec<Vec<Complex64>>,
    /// Cluster power allocation summing to the budget.
    pub cluster_powers: Vec<f64>,
    /// Achieved point.
    pub point: SrCrPoint,
}

/// Region of the cluster-based system: centric designs plus the rate-profile
/// boundary.
#[derive(Debug, Clone)]
pub struct ClusterIsacRegion {
    /// Sensing-centric design: eigen-directions of `R`, water-filling over
    /// its eigenvalues.
    pub sensing_centric: ClusterDesign,
    /// Communication-centric design: per-cluster dominant channel
    /// directions, water-filling over post-ZF effective gains.
    pub comm_centric: ClusterDesign,
    /// Pareto points, one per rate-profile weight.
    pub pareto: Vec<SrCrPoint>,
}

impl ClusterIsacInstance {
    fn validate(&self) -> Result<()> {
        let n_t = self.r.nrows();
        let n_cluster = self.user_channels.len();
        if n_cluster == 0 || self.user_channels.iter().any(|c| c.is_empty()) {
            return Err(MaError::InvalidArgument(
                "at least one cluster with one user is required".into(),
            ));
        }
        if n_cluster > n_t {
            return Err(MaError::Infeasible(
                "cluster count must not exceed the transmit antenna count".into(),
            ));
        }
        let n_u = self.user_channels[0][0].ncols();
        for cluster in &self.user_channels {
            for h in cluster {
                if h.nrows() != n_t || h.ncols() != n_u {
                    return Err(MaError::DimensionMismatch(
                        "all user channels must be N_t x N_U".into(),
                    ));
                }
            }
        }
        if n_u < n_cluster {
            return Err(MaError::Infeasible(
                "user-side zero-forcing requires N_U ≥ N_Cluster".into(),
            ));
        }
        if self.power <= 0.0 || self.noise <= 0.0 || self.pulse_len == 0 || self.n_rx == 0 {
            return Err(MaError::InvalidArgument(
                "power, noise, pulse length, and receive antennas must be positive".into(),
            ));
        }
        Ok(())
    }

    fn n_clusters(&self) -> usize {
        self.user_channels.len()
    }

    /// Post-ZF effective power gains `|v_{c,k}ᴴ H_{c,k}ᴴ w_c|²/σ²` for the
    /// best user of each cluster under the given directions.
    fn effective_comm_gains(&self, directions: &[Vec<Complex64>]) -> Result<Vec<f64>> {
        let flat: Vec<DMatrix<Complex64>> = self
            .user_channels
            .iter()
            .flat_map(|c| c.iter().cloned())
            .collect();
        let clusters: Vec<Vec<usize>> = {
            let mut next = 0usize;
            self.user_channels
                .iter()
                .map(|c| {
                    let ids: Vec<usize> = (next..next + c.len()).collect();
                    next += c.len();
                    ids
                })
                .collect()
        };
        let assignment = ClusterAssignment::new(clusters.clone(), flat.len())?;
        let design = intercluster_zf(
            ZfInput::UserSide {
                user_channels: &flat,
                cluster_beamformers: directions,
            },
            &assignment,
        )?;
        let equalizers = match design {
            ZfDesign::UserSide { equalizers } => equalizers,
            ZfDesign::BsSide { .. } => unreachable!("user-side input yields user-side design"),
        };
        let mut gains = Vec::with_capacity(self.n_clusters());
        for (c, ids) in clusters.iter().enumerate() {
            let mut best = 0.0f64;
            for &u in ids {
                let response: Vec<Complex64> = (flat[u].adjoint() * col(&directions[c]))
                    .iter()
                    .copied()
                    .collect();
                let gain = inner(&equalizers[u], &response).norm_sqr() / self.noise;
                best = best.max(gain);
            }
            gains.push(best);
        }
        Ok(gains)
    }

    /// `(SR, CR)` of a direction/power design. The SR is
    /// `L⁻¹·N_r·logdet(I + L·PᴴRP)` with `P = [√p̃_c w_c]`; the CR sums the
    /// per-cluster SIC rates, with each cluster's power carried by its
    /// strongest post-ZF user.
    pub fn rates(
        &self,
        directions: &[Vec<Complex64>],
        cluster_powers: &[f64],
    ) -> Result<(f64, f64)> {
        self.validate()?;
        if directions.len() != self.n_clusters() || cluster_powers.len() != self.n_clusters() {
            return Err(MaError::DimensionMismatch(
                "one direction and one power per cluster are required".into(),
            ));
        }
        let l = self.pulse_len as f64;
        let p_mat = from_columns(
            &directions
                .iter()
                .zip(cluster_powers)
                .map(|(w, &p)| w.iter().map(|&z| z * p.max(0.0).sqrt()).collect())
                .collect::<Vec<_>>(),
        );
        let inner_mat = (p_mat.adjoint() * &self.r * &p_mat).scale(l);
        let sr = self.n_rx as f64 / l * log2_det_i_plus(&inner_mat)?;
        let gains = self.effective_comm_gains(directions)?;
        let cr = gains
            .iter()
            .zip(cluster_powers)
            .map(|(&g, &p)| (1.0 + g * p.max(0.0)).log2())
            .sum();
        Ok((sr, cr))
    }

    fn sensing_centric_design(&self) -> Result<ClusterDesign> {
        let (eigvals, eigvecs) = hermitian_eigen(&self.r);
        let n_c = self.n_clusters();
        let directions: Vec<Vec<Complex64>> = (0..n_c)
            .map(|c| eigvecs.column(c).iter().copied().collect())
            .collect();
        let l = self.pulse_len as f64;
        let gains: Vec<f64> = eigvals[..n_c].iter().map(|&v| l * v.max(0.0)).collect();
        let cluster_powers = water_fill(&gains, self.power);
        let (sr, cr) = self.rates(&directions, &cluster_powers)?;
        Ok(ClusterDesign {
            directions,
            cluster_powers,
            point: SrCrPoint {
                sr,
                cr,
                label: PointLabel::SensingCentric,
            },
        })
    }

    fn comm_centric_design(&self) -> Result<ClusterDesign> {
        // Dominant left singular direction of each cluster's strongest user.
        let directions: Vec<Vec<Complex64>> = self
            .user_channels
            .iter()
            .map(|cluster| {
                let best = cluster
                    .iter()
                    .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
                    .expect("clusters are nonempty");
                let (_, vecs) = hermitian_eigen(&(best * best.adjoint()));
                vecs.column(0).iter().copied().collect()
            })
            .collect();
        let gains = self.effective_comm_gains(&directions)?;
        let cluster_powers = water_fill(&gains, self.power);
        let (sr, cr) = self.rates(&directions, &cluster_powers)?;
        Ok(ClusterDesign {
            directions,
            cluster_powers,
            point: SrCrPoint {
                sr,
                cr,
                label: PointLabel::CommCentric,
            },
        })
    }

    /// Computes the region: both centric designs and, per rate-profile
    /// weight, the best point among interpolated beam directions with a
    /// power-allocation line search (an inner approximation of the Pareto
    /// boundary; its endpoints are the exact centric designs).
    pub fn region(&self, alpha_grid: &[f64]) -> Result<ClusterIsacRegion> {
        self.validate()?;
        if alpha_grid.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(MaError::InvalidArgument(
                "rate-profile weights must lie in [0, 1]".into(),
            ));
        }
        let s_design = self.sensing_centric_design()?;
        let c_design = self.comm_centric_design()?;
        let l = self.pulse_len as f64;
        let mut pareto = Vec::with_capacity(alpha_grid.len());
        for &alpha in alpha_grid {
            if alpha == 0.0 {
                pareto.push(SrCrPoint {
                    label: PointLabel::Pareto { alpha },
                    ..c_design.point.clone()
                });
                continue;
            }
            if alpha == 1.0 {
                pareto.push(SrCrPoint {
                    label: PointLabel::Pareto { alpha },
                    ..s_design.point.clone()
                });
                continue;
            }
            // Phase-align and interpolate the beam directions.
            let directions: Vec<Vec<Complex64>> = c_design
                .directions
                .iter()
                .zip(&s_design.directions)
                .map(|(wc, ws)| {
                    let ip = inner(wc, ws);
                    let phase = if ip.norm() > 1e-12 {
                        Complex64::from_polar(1.0, -ip.arg())
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                    let mixed: Vec<Complex64> = wc
                        .iter()
                        .zip(ws)
                        .map(|(&c, &s)| c * (1.0 - alpha) + s * phase * alpha)
                        .collect();
                    let norm = norm_sqr(&mixed).sqrt();
                    if norm > 1e-12 {
                        mixed.iter().map(|&z| z / norm).collect()
                    } else {
                        ws.clone()
                    }
                })
                .collect();
            let comm_gains = self.effective_comm_gains(&directions)?;
            let sense_gains: Vec<f64> = directions
                .iter()
                .map(|w| {
                    let wv = col(w);
                    l * (wv.adjoint() * &self.r * &wv)[(0, 0)].re.max(0.0)
                })
                .collect();
            let p_comm = water_fill(&comm_gains, self.power);
            let p_sense = water_fill(&sense_gains, self.power);
            let mut best: Option<(f64, f64, f64)> = None;
            for step in 0..=50 {
                let beta = step as f64 / 50.0;
                let powers: Vec<f64> = p_comm
                    .iter()
                    .zip(&p_sense)
                    .map(|(&pc, &ps)| (1.0 - beta) * pc + beta * ps)
                    .collect();
                let (sr, cr) = self.rates(&directions, &powers)?;
                let ratio = (sr / alpha).min(cr / (1.0 - alpha));
                if best.as_ref().is_none_or(|&(r, _, _)| ratio > r) {
                    best = Some((ratio, sr, cr));
                }
            }
            let (_, sr, cr) = best.expect("the power line search is nonempty");
            pareto.push(SrCrPoint {
                sr,
                cr,
                label: PointLabel::Pareto { alpha },
            });
        }
        Ok(ClusterIsacRegion {
            sensing_centric: s_design,
            comm_centric: c_design,
            pareto,
        })
    }

    /// OSAC baseline from the centric maxima.
    pub fn osac(&self, split_grid: &[f64]) -> Result<Vec<SrCrPoint>> {
        let s = self.sensing_centric_design()?;
        let c = self.comm_centric_design()?;
        osac_region(s.point.sr, c.point.cr, split_grid)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{keyed_rng, standard_complex_vec};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn geom(n: usize) -> ArrayGeometry {
        ArrayGeometry::new(n, 0.005, 0.01).unwrap()
    }

    fn random_psd(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
        let cols: Vec<Vec<Complex64>> = (0..n).map(|_| standard_complex_vec(rng, n)).collect();
        let a = from_columns(&cols);
        (&a * a.adjoint()).scale(1.0 / n as f64)
    }

    fn random_scene(n_t: usize, l: usize, n_r: usize, rng: &mut impl Rng) -> SensingScene {
        let r = random_psd(n_t, rng);
        let cols: Vec<Vec<Complex64>> = (0..l).map(|_| standard_complex_vec(rng, n_t)).collect();
        SensingScene::new(r, l, n_r, from_columns(&cols)).unwrap()
    }

    // ----- target_response -----

    #[test]
    fn single_target_transmit_correlation_is_rank_one() {
        let model =
            TargetModel::new(vec![1.0], vec![1.0], geom(5), geom(3)).unwrap();
        let resp = target_response(&model, 7);
        let eigs = hermitian_eigenvalues(&resp.r_tx);
        let n = eigs.len();
        assert!(eigs[n - 1] > 1.0);
        for &e in &eigs[..n - 1] {
            assert!(e.abs() < 1e-10);
        }
    }

    #[test]
    fn zero_variance_target_contributes_nothing() {
        let one = TargetModel::new(vec![0.4], vec![2.0], geom(5), geom(3)).unwrap();
        let two =
            TargetModel::new(vec![0.4, 1.1], vec![2.0, 0.0], geom(5), geom(3)).unwrap();
        let g1 = target_response(&one, 42);
        let g2 = target_response(&two, 42);
        assert_relative_eq!((&g1.g - &g2.g).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((&g1.r_g - &g2.r_g).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn frobenius_energy_matches_trace_identity() {
        let model = TargetModel::new(
            vec![0.3, 1.2],
            vec![1.5, 0.7],
            geom(3),
            geom(5),
        )
        .unwrap();
        let n_t = 3.0;
        let n_r = 5.0;
        let expected = (1.5 + 0.7) * n_t * n_r;
        let mut acc = 0.0;
        let draws = 10_000;
        for s in 0..draws {
            acc += target_response(&model, s as u64).g.norm().powi(2);
        }
        let mean = acc / draws as f64;
        assert!(
            (mean - expected).abs() / expected < 0.03,
            "MC energy {mean} vs expected {expected}"
        );
    }

    // ----- sensing_mi -----

    #[test]
    fn zero_probing_and_zero_correlation_give_zero_mi() {
        let mut rng = keyed_rng(1, 90, 0, 0);
        let r = random_psd(3, &mut rng);
        let zero_x = SensingScene::new(r.clone(), 4, 2, DMatrix::zeros(3, 4)).unwrap();
        assert_eq!(sensing_mi(&zero_x, MiMode::General).unwrap(), 0.0);
        assert_eq!(sensing_mi(&zero_x, MiMode::Separated).unwrap(), 0.0);
        let cols: Vec<Vec<Complex64>> =
            (0..4).map(|_| standard_complex_vec(&mut rng, 3)).collect();
        let zero_r =
            SensingScene::new(DMatrix::zeros(3, 3), 4, 2, from_columns(&cols)).unwrap();
        assert_eq!(sensing_mi(&zero_r, MiMode::General).unwrap(), 0.0);
    }

    #[test]
    fn scalar_reduction_matches_shannon() {
        let x = Complex64::new(1.2, -0.4);
        let r = 0.8;
        let scene = SensingScene::new(
            DMatrix::from_element(1, 1, Complex64::new(r, 0.0)),
            1,
            3,
            DMatrix::from_element(1, 1, x),
        )
        .unwrap();
        let expected = 3.0 * (1.0 + x.norm_sqr() * r).log2();
        assert_relative_eq!(
            sensing_mi(&scene, MiMode::Separated).unwrap(),
            expected,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            sensing_mi(&scene, MiMode::General).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn general_equals_separated_on_random_scene() {
        let mut rng = keyed_rng(2, 90, 0, 0);
        let scene = random_scene(4, 8, 2, &mut rng);
        let g = sensing_mi(&scene, MiMode::General).unwrap();
        let s = sensing_mi(&scene, MiMode::Separated).unwrap();
        assert!((g - s).abs() < 1e-9, "general {g} vs separated {s}");
    }

    #[test]
    fn mi_concave_in_gram_and_monotone_in_power() {
        let mut rng = keyed_rng(3, 90, 0, 0);
        for trial in 0..10 {
            let n_t = 3;
            let l = 4;
            let r = random_psd(n_t, &mut rng);
            let make = |rng: &mut rand_chacha::ChaCha8Rng| {
                let cols: Vec<Vec<Complex64>> =
                    (0..l).map(|_| standard_complex_vec(rng, n_t)).collect();
                from_columns(&cols)
            };
            let xa = make(&mut rng);
            let xb = make(&mut rng);
            let mi = |x: &DMatrix<Complex64>| {
                let scene =
                    SensingScene::new(r.clone(), x.ncols(), 2, x.clone()).unwrap();
                sensing_mi(&scene, MiMode::Separated).unwrap()
            };
            // Gram of the concatenation scaled by 1/√2 is the Gram average.
            let mut xc = DMatrix::zeros(n_t, 2 * l);
            let scale = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            for c in 0..l {
                xc.set_column(c, &(xa.column(c) * scale));
                xc.set_column(l + c, &(xb.column(c) * scale));
            }
            let lhs = mi(&xc);
            let rhs = 0.5 * (mi(&xa) + mi(&xb));
            assert!(lhs >= rhs - 1e-9, "trial {trial}: {lhs} < {rhs}");
            // Strict power monotonicity.
            assert!(mi(&(&xa * Complex64::new(1.5, 0.0))) > mi(&xa) + 1e-9);
        }
    }

    // ----- gaussian_distortion_rate -----

    #[test]
    fn distortion_rate_closed_forms() {
        assert_relative_eq!(
            gaussian_distortion_rate(&[1.0], 1.0).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        let vars = [0.3, 1.7, 0.9];
        assert_relative_eq!(
            gaussian_distortion_rate(&vars, 0.0).unwrap(),
            vars.iter().sum::<f64>(),
            epsilon = 1e-14
        );
        assert!(gaussian_distortion_rate(&[1.0], -0.1).is_err());
        // Monotone nonincreasing in R.
        let mut last = f64::INFINITY;
        for step in 0..40 {
            let d = gaussian_distortion_rate(&vars, step as f64 * 0.25).unwrap();
            assert!(d <= last + 1e-12);
            last = d;
        }
    }

    #[test]
    fn reverse_water_filling_matches_scalar_split() {
        // Equal variances: D = n·ς²·2^{−R/n}.
        let d = gaussian_distortion_rate(&[2.0, 2.0, 2.0, 2.0], 3.0).unwrap();
        assert_relative_eq!(d, 4.0 * 2.0 * (-3.0f64 / 4.0).exp2(), epsilon = 1e-12);
        // Small rate: only the largest component is described.
        let vars = [4.0, 0.1];
        let d = gaussian_distortion_rate(&vars, 1.0).unwrap();
        assert_relative_eq!(d, 4.0 * 0.5 + 0.1, epsilon = 1e-12);
    }

    #[test]
    fn lmmse_monte_carlo_respects_distortion_rate_bound() {
        let mut seed_rng = keyed_rng(4, 90, 0, 0);
        for trial in 0..20 {
            let snr_db: f64 = seed_rng.gen_range(-10.0..20.0);
            let gain_sq = 10f64.powf(snr_db / 10.0);
            let varsigma_sq = 1.0;
            let mi = (1.0 + gain_sq * varsigma_sq).log2();
            let bound = gaussian_distortion_rate(&[varsigma_sq], mi).unwrap();
            // LMMSE estimate of η from y = x·η + n.
            let x = gain_sq.sqrt();
            let coeff = x * varsigma_sq / (1.0 + gain_sq * varsigma_sq);
            let mut rng = keyed_rng(5, 90, trial, 1);
            let draws = 500_000;
            let mut err_acc = 0.0;
            let mut eta_acc = 0.0;
            let mut noise_acc = 0.0;
            for _ in 0..draws {
                let eta = standard_complex(&mut rng);
                let noise = standard_complex(&mut rng);
                let y = eta * x + noise;
                err_acc += (eta - y * coeff).norm_sqr();
                eta_acc += eta.norm_sqr();
                noise_acc += noise.norm_sqr();
            }
            let n = draws as f64;
            // Control variates: |η|² and |n|² have known unit means, so
            // subtracting their empirical excess leaves only the zero-mean
            // signal-noise cross term's fluctuation in the MSE estimate.
            let a = 1.0 - coeff * x;
            let mse = err_acc / n
                - a * a * (eta_acc / n - 1.0)
                - coeff * coeff * (noise_acc / n - 1.0);
            assert!(
                mse >= bound - 1e-3,
                "trial {trial}: MC MSE {mse} below bound {bound}"
            );
            assert!((mse - bound).abs() < 5e-3);
        }
    }

    // ----- uplink ISAC -----

    fn random_uplink(seed: u64, sensing_power: f64) -> UplinkIsacInstance {
        let mut rng = keyed_rng(seed, 91, 0, 0);
        let n_r = 3;
        let n_t = 2;
        let l = 8;
        let k = 2;
        let channels: Vec<Vec<Complex64>> =
            (0..k).map(|_| standard_complex_vec(&mut rng, n_r)).collect();
        let powers: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..4.0)).collect();
        let r = random_psd(n_t, &mut rng);
        let cols: Vec<Vec<Complex64>> = (0..l)
            .map(|_| {
                standard_complex_vec(&mut rng, n_t)
                    .into_iter()
                    .map(|z| z * sensing_power.sqrt())
                    .collect()
            })
            .collect();
        let scene = SensingScene::new(r, l, n_r, from_columns(&cols)).unwrap();
        UplinkIsacInstance {
            channels,
            powers,
            scene,
        }
    }

    #[test]
    fn zero_sensing_power_collapses_both_corners() {
        let inst = random_uplink(11, 0.0);
        let c = inst.corner(UplinkSic::CommFavoring).unwrap();
        let s = inst.corner(UplinkSic::SensingFavoring).unwrap();
        let cap = inst.comm_sum_capacity().unwrap();
        for p in [&c, &s] {
            assert_relative_eq!(p.sr, 0.0, epsilon = 1e-12);
            assert_relative_eq!(p.cr, cap, epsilon = 1e-12);
        }
    }

    #[test]
    fn corner_ordering_on_random_instances() {
        for seed in 0..50 {
            let inst = random_uplink(100 + seed, 2.0);
            let c = inst.corner(UplinkSic::CommFavoring).unwrap();
            let s = inst.corner(UplinkSic::SensingFavoring).unwrap();
            // Both signals active: strict ordering.
            assert!(s.sr > c.sr + 1e-9, "seed {seed}: S-SIC SR not larger");
            assert!(c.cr > s.cr + 1e-9, "seed {seed}: C-SIC CR not larger");
        }
    }

    #[test]
    fn osac_is_dominated_by_time_sharing() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        for seed in 0..10 {
            let inst = random_uplink(200 + seed, 1.5);
            let c = inst.corner(UplinkSic::CommFavoring).unwrap();
            let s = inst.corner(UplinkSic::SensingFavoring).unwrap();
            for osac in inst.osac(&grid).unwrap() {
                let PointLabel::Osac { split } = osac.label else {
                    panic!("osac label expected")
                };
                let ts = &time_share(&s, &c, &[split]).unwrap()[0];
                assert!(ts.sr + 1e-9 >= osac.sr && ts.cr + 1e-9 >= osac.cr);
            }
        }
    }

    // ----- downlink SISO-NOMA ISAC -----

    #[test]
    fn siso_noma_rectangle_and_shrinkage() {
        let region =
            dl_siso_noma_isac(4.0, &[1.0, 0.25], &[1.0, 1.0], 0.5, 8, 41).unwrap();
        // Both maxima are attained at the same full transmit power.
        assert_relative_eq!(
            region.sr_max,
            (1.0f64 + 8.0 * 4.0 * 0.5).log2() / 8.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(region.corner.sr, region.sr_max, epsilon = 1e-15);
        assert_relative_eq!(region.corner.cr, region.sum_cr_max, epsilon = 1e-15);
        // Best sum rate is the single-user rate of the strong user.
        assert_relative_eq!(
            region.sum_cr_max,
            (1.0f64 + 4.0 * 1.0).log2(),
            epsilon = 1e-12
        );
        let half = dl_siso_noma_isac(2.0, &[1.0, 0.25], &[1.0, 1.0], 0.5, 8, 41).unwrap();
        assert!(half.sr_max < region.sr_max - 1e-9);
        assert!(half.sum_cr_max < region.sum_cr_max - 1e-9);
    }

    // ----- downlink SU-MISO ISAC -----

    fn su_params(seed: u64) -> SuMisoIsacParams {
        let mut rng = keyed_rng(seed, 92, 0, 0);
        SuMisoIsacParams {
            h_c: standard_complex_vec(&mut rng, 5),
            theta_target: 60f64.to_radians(),
            varsigma_sq: 1.0,
            power: 10.0,
            n_rx: 4,
            pulse_len: 8,
            tx_geometry: geom(5),
        }
    }

    #[test]
    fn su_miso_endpoints_match_closed_forms() {
        let params = su_params(21);
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let region = dl_su_miso_isac(&params, &grid).unwrap();
        let h_s = params.sensing_channel();
        let l = params.pulse_len as f64;
        let sr_max = (1.0
            + params.power * params.n_rx as f64 * l * params.varsigma_sq * norm_sqr(&h_s))
        .log2()
            / l;
        let cr_max = (1.0 + params.power * norm_sqr(&params.h_c)).log2();
        assert_relative_eq!(region.sensing_centric.sr, sr_max, epsilon = 1e-10);
        assert_relative_eq!(region.comm_centric.cr, cr_max, epsilon = 1e-10);
        // α endpoints coincide with the centric points.
        assert_relative_eq!(region.pareto[0].sr, region.comm_centric.sr, epsilon = 1e-10);
        assert_relative_eq!(region.pareto[0].cr, region.comm_centric.cr, epsilon = 1e-10);
        assert_relative_eq!(
            region.pareto[4].sr,
            region.sensing_centric.sr,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            region.pareto[4].cr,
            region.sensing_centric.cr,
            epsilon = 1e-10
        );
    }

    #[test]
    fn su_miso_boundary_monotone_and_profile_feasible() {
        let params = su_params(22);
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let region = dl_su_miso_isac(&params, &grid).unwrap();
        let mut points = region.pareto.clone();
        points.sort_by(|a, b| a.cr.partial_cmp(&b.cr).unwrap());
        for pair in points.windows(2) {
            assert!(pair[1].sr <= pair[0].sr + 1e-9, "boundary not nonincreasing");
        }
        for p in &region.pareto {
            let PointLabel::Pareto { alpha } = p.label else {
                panic!("pareto label expected")
            };
            let r = if alpha == 0.0 {
                p.cr
            } else if alpha == 1.0 {
                p.sr
            } else {
                (p.sr / alpha).min(p.cr / (1.0 - alpha))
            };
            assert!(p.sr + 1e-6 >= alpha * r && p.cr + 1e-6 >= (1.0 - alpha) * r);
        }
    }

    #[test]
    fn su_miso_boundary_matches_grid_oracle() {
        let params = su_params(23);
        let alphas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let region = dl_su_miso_isac(&params, &alphas).unwrap();
        let span = SuMisoSpan::build(&params);
        // Oracle: search w = (x1·e1 + (x2 + j·x3)·e2)/‖·‖ over a refined grid
        // of the three real parameters.
        let rate_of = |alpha: f64, x: [f64; 3]| -> f64 {
            let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if norm < 1e-9 {
                return 0.0;
            }
            let w: Vec<Complex64> = span
                .e1
                .iter()
                .zip(&span.e2)
                .map(|(&e1, &e2)| {
                    (e1 * x[0] + e2 * Complex64::new(x[1], x[2])) / norm
                })
                .collect();
            let (sr, cr) = params.rates(&w).unwrap();
            let mut r = f64::INFINITY;
            if alpha > 0.0 {
                r = r.min(sr / alpha);
            }
            if alpha < 1.0 {
                r = r.min(cr / (1.0 - alpha));
            }
            r
        };
        for (p, &alpha) in region.pareto.iter().zip(&alphas) {
            let mut center = [0.5, 0.0, 0.0];
            let mut half = 1.0;
            let mut best = f64::NEG_INFINITY;
            for _round in 0..4 {
                let steps = 20;
                let mut best_x = center;
                for i in 0..=steps {
                    for j in 0..=steps {
                        for k in 0..=steps {
                            let x = [
                                (center[0] + half * (2.0 * i as f64 / steps as f64 - 1.0))
                                    .clamp(0.0, 1.0),
                                center[1] + half * (2.0 * j as f64 / steps as f64 - 1.0),
                                center[2] + half * (2.0 * k as f64 / steps as f64 - 1.0),
                            ];
                            let r = rate_of(alpha, x);
                            if r > best {
                                best = r;
                                best_x = x;
                            }
                        }
                    }
                }
                center = best_x;
                half /= steps as f64 / 2.0;
            }
            let solver = if alpha == 0.0 {
                p.cr
            } else if alpha == 1.0 {
                p.sr
            } else {
                (p.sr / alpha).min(p.cr / (1.0 - alpha))
            };
            assert!(
                (solver - best).abs() < 1e-3,
                "alpha {alpha}: solver {solver} vs oracle {best}"
            );
        }
    }

    #[test]
    fn su_miso_osac_contained_in_isac() {
        let params = su_params(24);
        let region = dl_su_miso_isac(&params, &[0.0, 1.0]).unwrap();
        let s = &region.sensing_centric;
        let c = &region.comm_centric;
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        for osac in osac_region(s.sr, c.cr, &grid).unwrap() {
            let PointLabel::Osac { split } = osac.label else {
                panic!("osac label expected")
            };
            let ts = &time_share(s, c, &[split]).unwrap()[0];
            assert!(ts.sr + 1e-9 >= osac.sr && ts.cr + 1e-9 >= osac.cr);
        }
    }

    // ----- downlink cluster ISAC -----

    fn random_cluster(seed: u64, cluster_sizes: &[usize], n_t: usize, n_u: usize)
        -> ClusterIsacInstance {
        let mut rng = keyed_rng(seed, 93, 0, 0);
        let user_channels: Vec<Vec<DMatrix<Complex64>>> = cluster_sizes
            .iter()
            .map(|&k| {
                (0..k)
                    .map(|_| {
                        let cols: Vec<Vec<Complex64>> = (0..n_u)
                            .map(|_| standard_complex_vec(&mut rng, n_t))
                            .collect();
                        from_columns(&cols)
                    })
                    .collect()
            })
            .collect();
        let r = random_psd(n_t, &mut rng);
        ClusterIsacInstance {
            user_channels,
            r,
            power: 6.0,
            pulse_len: 8,
            n_rx: 2,
            noise: 1.0,
        }
    }

    #[test]
    fn sensing_centric_matches_water_filling_kkt() {
        let inst = random_cluster(31, &[1, 2], 2, 2);
        let design = inst.sensing_centric_design().unwrap();
        let (eigvals, _) = hermitian_eigen(&inst.r);
        let l = inst.pulse_len as f64;
        let gains: Vec<f64> = eigvals[..2].iter().map(|&v| l * v).collect();
        // Water-filling KKT: active modes share the level 1/g + p, inactive
        // modes sit above it; powers exhaust the budget.
        let total: f64 = design.cluster_powers.iter().sum();
        assert_relative_eq!(total, inst.power, epsilon = 1e-9);
        let level = gains
            .iter()
            .zip(&design.cluster_powers)
            .filter(|&(_, &p)| p > 1e-12)
            .map(|(&g, &p)| 1.0 / g + p)
            .fold(f64::NAN, |acc, v| if acc.is_nan() { v } else { acc });
        for (&g, &p) in gains.iter().zip(&design.cluster_powers) {
            if p > 1e-12 {
                assert_relative_eq!(1.0 / g + p, level, epsilon = 1e-9);
            } else {
                assert!(1.0 / g >= level - 1e-9);
            }
        }
        // The achieved SR equals the closed water-filling sum within 1e−9.
        let expected: f64 = gains
            .iter()
            .zip(&design.cluster_powers)
            .map(|(&g, &p)| inst.n_rx as f64 / l * (1.0 + g * p).log2())
            .sum();
        assert_relative_eq!(design.point.sr, expected, epsilon = 1e-9);
        // No feasible reallocation improves the SR.
        let mut rng = keyed_rng(32, 93, 0, 0);
        for _ in 0..200 {
            let a: f64 = rng.gen_range(0.0..1.0);
            let powers = [a * inst.power, (1.0 - a) * inst.power];
            let alt: f64 = gains
                .iter()
                .zip(&powers)
                .map(|(&g, &p)| inst.n_rx as f64 / l * (1.0 + g * p).log2())
                .sum();
            assert!(alt <= design.point.sr + 1e-9);
        }
    }

    #[test]
    fn single_cluster_single_user_reduces_to_su_miso_shapes() {
        let mut rng = keyed_rng(33, 93, 0, 0);
        let n_t = 5;
        let theta = 60f64.to_radians();
        let h_s = steering_vector(&geom(n_t), theta);
        let varsigma_sq = 0.5;
        // Rank-one transmit correlation ς²·h_s h_sᴴ.
        let mut r = DMatrix::zeros(n_t, n_t);
        for i in 0..n_t {
            for j in 0..n_t {
                r[(i, j)] = h_s[i] * h_s[j].conj() * varsigma_sq;
            }
        }
        let h_col = standard_complex_vec(&mut rng, n_t);
        let inst = ClusterIsacInstance {
            user_channels: vec![vec![from_columns(&[h_col.clone()])]],
            r,
            power: 10.0,
            pulse_len: 8,
            n_rx: 2,
            noise: 1.0,
        };
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let region = inst.region(&grid).unwrap();
        let l = inst.pulse_len as f64;
        // S-C: the single beam is the principal eigenvector of R, i.e. the
        // sensing steering direction, with full power.
        let expected_sr =
            inst.n_rx as f64 / l * (1.0 + l * inst.power * varsigma_sq * n_t as f64).log2();
        assert_relative_eq!(region.sensing_centric.point.sr, expected_sr, epsilon = 1e-9);
        // C-C: matched beam to the single user's channel.
        let expected_cr = (1.0 + inst.power * norm_sqr(&h_col)).log2();
        assert_relative_eq!(region.comm_centric.point.cr, expected_cr, epsilon = 1e-9);
        // Pareto endpoints coincide with the centric points and the boundary
        // is nonincreasing, the same shape as the SU-MISO region.
        assert_relative_eq!(
            region.pareto[0].cr,
            region.comm_centric.point.cr,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            region.pareto[10].sr,
            region.sensing_centric.point.sr,
            epsilon = 1e-12
        );
        let mut points = region.pareto.clone();
        points.sort_by(|a, b| a.cr.partial_cmp(&b.cr).unwrap());
        for pair in points.windows(2) {
            assert!(pair[1].sr <= pair[0].sr + 1e-9);
        }
    }

    #[test]
    fn cluster_osac_contained_in_isac_on_random_scenes() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        for seed in 0..20 {
            let inst = random_cluster(300 + seed, &[1, 2], 2, 2);
            let s = inst.sensing_centric_design().unwrap().point;
            let c = inst.comm_centric_design().unwrap().point;
            for osac in inst.osac(&grid).unwrap() {
                let PointLabel::Osac { split } = osac.label else {
                    panic!("osac label expected")
                };
                let ts = &time_share(&s, &c, &[split]).unwrap()[0];
                assert!(
                    ts.sr + 1e-9 >= osac.sr && ts.cr + 1e-9 >= osac.cr,
                    "seed {seed}: OSAC point escapes the ISAC region"
                );
            }
        }
    }

    #[test]
    fn cluster_zf_infeasible_dimensions_are_rejected() {
        // N_U = 1 < N_Cluster = 2.
        let inst = random_cluster(40, &[1, 1], 2, 1);
        assert!(matches!(
            inst.region(&[0.0, 1.0]),
            Err(MaError::Infeasible(_))
        ));
    }

    // ----- osac_region -----

    #[test]
    fn osac_region_trivials_and_convexity() {
        let pts = osac_region(2.0, 6.0, &[0.0, 0.5, 1.0]).unwrap();
        assert_relative_eq!(pts[2].sr, 2.0, epsilon = 1e-15);
        assert_relative_eq!(pts[2].cr, 0.0, epsilon = 1e-15);
        assert_relative_eq!(pts[1].sr, 1.0, epsilon = 1e-15);
        assert_relative_eq!(pts[1].cr, 3.0, epsilon = 1e-15);
        // Every point lies on the segment between the endpoints.
        for p in &pts {
            assert_relative_eq!(p.sr / 2.0 + p.cr / 6.0, 1.0, epsilon = 1e-12);
        }
        assert!(osac_region(1.0, 1.0, &[0.3]).is_err());
        assert!(osac_region(1.0, 1.0, &[0.0, 1.5]).is_err());
    }

    // ----- cross-checks -----

    #[test]
    fn general_mi_accepts_target_response_covariance() {
        // Rank-deficient R_G from two targets still yields a finite MI that
        // grows with probing power.
        let model = TargetModel::new(
            vec![0.5, 1.3],
            vec![1.0, 0.5],
            geom(3),
            geom(5),
        )
        .unwrap();
        let resp = target_response(&model, 9);
        let mut rng = keyed_rng(10, 94, 0, 0);
        let cols: Vec<Vec<Complex64>> =
            (0..4).map(|_| standard_complex_vec(&mut rng, 3)).collect();
        let probing = from_columns(&cols);
        let mi = sensing_mi_general(&resp.r_g, &probing, 5).unwrap();
        assert!(mi > 0.0);
        let boosted =
            sensing_mi_general(&resp.r_g, &(&probing * Complex64::new(2.0, 0.0)), 5).unwrap();
        assert!(boosted > mi);
        assert!(sensing_mi_general(&resp.r_g, &probing, 4).is_err());
    }
}
