//! Capacity regions and sum capacities of Gaussian multiple-access and
//! broadcast channels.
//!
//! Covers:
//! - the scalar Gaussian BC region (superposition coding + SIC, power split
//!   `α` over the simplex) and scalar MAC polymatroid membership;
//! - vector MAC SIC corner points and the iterative water-filling solver for
//!   the MAC sum capacity under per-user power budgets;
//! - DPC rate tuples for a fixed encoding order and the BC sum capacity via
//!   BC–MAC duality (sum-power iterative water-filling on the dual MAC);
//! - the orthogonal (TDMA) baseline region.
//!
//! Regions are represented as boundary point lists for export plus exact
//! membership predicates where the region is a polymatroid.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::foundation::shannon_rate;
use crate::linalg::{hermitian_eigen, inv_sqrt_hermitian, log2_det_i_plus, water_fill};
use crate::{MaError, Result};

/// Scalar broadcast-channel users: one total power `P` and per-user noise
/// powers `N_k` sorted ascending (user 1 strongest).
#[derive(Debug, Clone)]
pub struct ScalarUsers {
    pub power: f64,
    pub noise_powers: Vec<f64>,
}

impl ScalarUsers {
    pub fn new(power: f64, noise_powers: Vec<f64>) -> Result<Self> {
        if !(power > 0.0) {
            return Err(MaError::InvalidArgument("power must be positive".into()));
        }
        if noise_powers.is_empty() || noise_powers.iter().any(|&n| !(n > 0.0)) {
            return Err(MaError::InvalidArgument(
                "noise powers must be positive and nonempty".into(),
            ));
        }
        if noise_powers.windows(2).any(|w| w[0] > w[1]) {
            return Err(MaError::InvalidArgument(
                "BC noise powers must be sorted ascending (strongest user first)".into(),
            ));
        }
        Ok(Self {
            power,
            noise_powers,
        })
    }

    pub fn n_users(&self) -> usize {
        self.noise_powers.len()
    }
}

/// Rates of the scalar BC under superposition coding with power split `α`
/// (Σα = 1): `R_k = C(α_k·P/(N_k + Σ_{k'<k} α_{k'}·P))`.
///
/// Decoding: user `k` cancels the messages of all weaker users `k' > k` and
/// treats stronger users' messages (`k' < k`) as noise.
pub fn scalar_bc_rates(users: &ScalarUsers, alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.len() != users.n_users() {
        return Err(MaError::DimensionMismatch(
            "one power fraction per user is required".into(),
        ));
    }
    if alpha.iter().any(|&a| a < -1e-12) || (alpha.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(MaError::InvalidArgument(
            "power fractions must be nonnegative and sum to 1".into(),
        ));
    }
    let p = users.power;
    let mut seen = 0.0;
    let mut rates = Vec::with_capacity(alpha.len());
    for (a, n) in alpha.iter().zip(&users.noise_powers) {
        let a = a.max(0.0);
        rates.push(shannon_rate(a * p / (n + seen * p))?);
        seen += a;
    }
    Ok(rates)
}

/// Boundary of the scalar BC region: superposition rates over a simplex grid
/// of power splits with `resolution` points per axis (K = 2) or the
/// equivalent Dirichlet lattice for K ≥ 3.
pub fn scalar_bc_region(users: &ScalarUsers, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if resolution < 2 {
        return Err(MaError::InvalidArgument(
            "simplex grid needs at least 2 points per axis".into(),
        ));
    }
    let k = users.n_users();
    if k == 1 {
        return Ok(vec![vec![shannon_rate(users.power / users.noise_powers[0])?]]);
    }
    let steps = resolution - 1;
    let mut region = Vec::new();
    let mut composition = vec![0usize; k];
    compose(steps, 0, &mut composition, &mut |c: &[usize]| {
        let alpha: Vec<f64> = c.iter().map(|&x| x as f64 / steps as f64).collect();
        region.push(scalar_bc_rates(users, &alpha));
    });
    region.into_iter().collect()
}

/// Enumerates all compositions of `remaining` into `slots[pos..]`.
fn compose(remaining: usize, pos: usize, slots: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if pos == slots.len() - 1 {
        slots[pos] = remaining;
        f(slots);
        return;
    }
    for take in 0..=remaining {
        slots[pos] = take;
        compose(remaining - take, pos + 1, slots, f);
    }
}

/// Scalar MAC membership: `candidate` lies in the capacity region iff
/// `Σ_{k∈S} R_k ≤ C(Σ_{k∈S} P_k/N)` for every nonempty subset `S`.
pub fn scalar_mac_region_contains(
    powers: &[f64],
    noise: f64,
    candidate: &[f64],
    tol: f64,
) -> Result<bool> {
    let k = powers.len();
    if k > 20 {
        return Err(MaError::InvalidArgument(format!(
            "subset enumeration limited to K ≤ 20, got {k}"
        )));
    }
    if candidate.len() != k {
        return Err(MaError::DimensionMismatch(
            "candidate dimension must match user count".into(),
        ));
    }
    if candidate.iter().any(|&r| r < -tol) {
        return Ok(false);
    }
    for mask in 1u32..(1 << k) {
        let mut p_sum = 0.0;
        let mut r_sum = 0.0;
        for j in 0..k {
            if mask & (1 << j) != 0 {
                p_sum += powers[j];
                r_sum += candidate[j];
            }
        }
        if r_sum > shannon_rate(p_sum / noise)? + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A Gaussian vector MAC: per-user channels `H_k` (N_BS × N_k), transmit
/// covariances `Σ_k` (N_k × N_k, PSD), common noise power `σ²`, and per-user
/// trace budgets.
#[derive(Debug, Clone)]
pub struct VectorMacInstance {
    pub channels: Vec<DMatrix<Complex64>>,
    pub covariances: Vec<DMatrix<Complex64>>,
    pub noise: f64,
    pub budgets: Vec<f64>,
}

impl VectorMacInstance {
    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.len() != self.covariances.len() {
            return Err(MaError::DimensionMismatch(
                "need one covariance per channel".into(),
            ));
        }
        if !(self.noise > 0.0) {
            return Err(MaError::InvalidArgument("noise power must be positive".into()));
        }
        let n_bs = self.channels[0].nrows();
        for (h, s) in self.channels.iter().zip(&self.covariances) {
            if h.nrows() != n_bs || s.nrows() != h.ncols() || !s.is_square() {
                return Err(MaError::DimensionMismatch(
                    "channel/covariance dimensions disagree".into(),
                ));
            }
        }
        Ok(())
    }

    /// Received-signal covariance contribution `H_k Σ_k H_kᴴ` of one user.
    fn contribution(&self, k: usize) -> DMatrix<Complex64> {
        &self.channels[k] * &self.covariances[k] * self.channels[k].adjoint()
    }

    /// MAC sum rate `log2 det(I + σ⁻² Σ_k H_k Σ_k H_kᴴ)` of the current
    /// covariances.
    pub fn sum_rate(&self) -> Result<f64> {
        let n_bs = self.channels[0].nrows();
        let mut total = DMatrix::zeros(n_bs, n_bs);
        for k in 0..self.channels.len() {
            total += self.contribution(k);
        }
        log2_det_i_plus(&total.unscale(self.noise))
    }
}

/// SIC corner of the vector MAC for a decoding order (`order[0]` decoded
/// first, its interference being everyone decoded later).
///
/// Computed by telescoping log-determinants, which makes the sum rate
/// order-invariant to machine precision by construction.
pub fn mac_sic_corner(instance: &VectorMacInstance, order: &[usize]) -> Result<Vec<f64>> {
    instance.validate()?;
    let k = instance.channels.len();
    if order.len() != k || {
        let mut seen = vec![false; k];
        order.iter().any(|&u| u >= k || std::mem::replace(&mut seen[u], true))
    } {
        return Err(MaError::InvalidArgument(
            "decoding order must be a permutation of the users".into(),
        ));
    }
    let n_bs = instance.channels[0].nrows();
    // suffix[j] = Σ_{m ≥ j} H Σ Hᴴ of users decoded at position m.
    let mut logdets = vec![0.0; k + 1];
    let mut acc: DMatrix<Complex64> = DMatrix::zeros(n_bs, n_bs);
    for j in (0..k).rev() {
        acc += instance.contribution(order[j]);
        logdets[j] = log2_det_i_plus(&acc.clone().unscale(instance.noise))?;
    }
    let mut rates = vec![0.0; k];
    for j in 0..k {
        rates[order[j]] = logdets[j] - logdets[j + 1];
    }
    Ok(rates)
}

/// Result of the iterative water-filling MAC sum-capacity solver.
#[derive(Debug, Clone)]
pub struct IwfResult {
    /// Optimal transmit covariances.
    pub covariances: Vec<DMatrix<Complex64>>,
    /// Achieved sum capacity, bits per channel use.
    pub sum_capacity: f64,
    /// Objective after each full cycle (monotone nondecreasing).
    pub objective_trace: Vec<f64>,
}

/// Iterative water-filling for the vector MAC sum capacity under per-user
/// trace budgets: each cycle water-fills every user against the interference
/// of the others, which can only improve the (jointly concave) objective.
pub fn iwf_mac(
    instance: &VectorMacInstance,
    tol: f64,
    max_iter: usize,
) -> Result<IwfResult> {
    instance.validate()?;
    if instance.budgets.len() != instance.channels.len()
        || instance.budgets.iter().any(|&p| !(p > 0.0))
    {
        return Err(MaError::InvalidArgument(
            "one positive power budget per user is required".into(),
        ));
    }
    let k = instance.channels.len();
    let n_bs = instance.channels[0].nrows();
    let mut work = instance.clone();
    // Start from zero covariances; the first cycle is then plain per-user
    // water-filling against noise only.
    for (s, h) in work.covariances.iter_mut().zip(&work.channels) {
        *s = DMatrix::zeros(h.ncols(), h.ncols());
    }
    let mut trace = Vec::new();
    let mut last = 0.0;
    for cycle in 0..max_iter {
        for u in 0..k {
            let mut interference: DMatrix<Complex64> =
                DMatrix::identity(n_bs, n_bs).scale(work.noise);
            for j in 0..k {
                if j != u {
                    interference += work.contribution(j);
                }
            }
            work.covariances[u] = waterfill_against(
                &work.channels[u],
                &interference,
                work.budgets[u],
            )?;
        }
        let obj = work.sum_rate()?;
        trace.push(obj);
        if cycle > 0 && obj - last < tol {
            return Ok(IwfResult {
                covariances: work.covariances,
                sum_capacity: obj,
                objective_trace: trace,
            });
        }
        last = obj;
    }
    let last_improvement = match trace.as_slice() {
        [.., a, b] => b - a,
        _ => f64::NAN,
    };
    Err(MaError::NoConvergence {
        iterations: max_iter,
        last_improvement,
    })
}

/// Single-user water-filling of `H` against colored noise `Z`: returns the
/// trace-`budget` covariance maximizing `log det(Z + H Σ Hᴴ)`.
fn waterfill_against(
    h: &DMatrix<Complex64>,
    z: &DMatrix<Complex64>,
    budget: f64,
) -> Result<DMatrix<Complex64>> {
    let w = inv_sqrt_hermitian(z)?;
    let g = &w * h; // whitened channel
    let gram = g.adjoint() * &g;
    let (vals, vecs) = hermitian_eigen(&gram);
    let gains: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
    let powers = water_fill(&gains, budget);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        powers.len(),
        powers.iter().map(|&p| Complex64::new(p, 0.0)),
    ));
    Ok(&vecs * d * vecs.adjoint())
}

/// A DPC (dirty-paper coding) broadcast instance: downlink channels `H_k`
/// (N_BS × N_k), codebook covariances `Ξ_k` (N_BS × N_BS), noise powers
/// `σ_k²`, sum power `P`, and the encoding order (first entry encoded first,
/// i.e. it suffers interference from everyone encoded later).
#[derive(Debug, Clone)]
pub struct DpcInstance {
    pub channels: Vec<DMatrix<Complex64>>,
    pub covariances: Vec<DMatrix<Complex64>>,
    pub noise_powers: Vec<f64>,
    pub sum_power: f64,
    pub order: Vec<usize>,
}

/// Rates of DPC with a fixed encoding order: the user encoded at position `j`
/// sees only the covariances of users encoded after it,
/// `R = log2 det(I + HᴴΞH·(σ²I + Hᴴ(Σ_{later}Ξ)H)⁻¹)`.
pub fn dpc_rates(instance: &DpcInstance) -> Result<Vec<f64>> {
    let k = instance.channels.len();
    if instance.covariances.len() != k
        || instance.noise_powers.len() != k
        || instance.order.len() != k
    {
        return Err(MaError::DimensionMismatch(
            "channels, covariances, noises, and order must agree in length".into(),
        ));
    }
    let used: f64 = instance
        .covariances
        .iter()
        .map(|s| s.diagonal().iter().map(|z| z.re).sum::<f64>())
        .sum();
    if used > instance.sum_power * (1.0 + 1e-9) + 1e-12 {
        return Err(MaError::InvalidArgument(format!(
            "sum power budget violated: trace {} > {}",
            used, instance.sum_power
        )));
    }
    let mut rates = vec![0.0; k];
    for j in 0..k {
        let u = instance.order[j];
        let h = &instance.channels[u];
        // Interference: users encoded after position j.
        let mut xi_later: DMatrix<Complex64> = DMatrix::zeros(h.nrows(), h.nrows());
        for &v in &instance.order[j + 1..] {
            xi_later += &instance.covariances[v];
        }
        let n_u = h.ncols();
        let noise = DMatrix::identity(n_u, n_u).scale(instance.noise_powers[u])
            + h.adjoint() * xi_later * h;
        let signal = h.adjoint() * &instance.covariances[u] * h;
        let w = inv_sqrt_hermitian(&noise)?;
        rates[u] = log2_det_i_plus(&(&w * signal * &w))?;
    }
    Ok(rates)
}

/// BC sum capacity via BC–MAC duality: sum-power iterative water-filling on
/// the dual MAC (uplink channels `H_k`, joint budget `P`), with the damped
/// covariance update that guarantees convergence.
pub fn bc_sum_capacity(
    channels: &[DMatrix<Complex64>],
    noise: f64,
    sum_power: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    if channels.is_empty() {
        return Err(MaError::InvalidArgument("at least one user required".into()));
    }
    if !(noise > 0.0) || !(sum_power > 0.0) {
        return Err(MaError::InvalidArgument(
            "noise and sum power must be positive".into(),
        ));
    }
    let k = channels.len();
    let n_bs = channels[0].nrows();
    let mut cov: Vec<DMatrix<Complex64>> = channels
        .iter()
        .map(|h| DMatrix::zeros(h.ncols(), h.ncols()))
        .collect();
    let objective = |cov: &[DMatrix<Complex64>]| -> Result<f64> {
        let mut total: DMatrix<Complex64> = DMatrix::zeros(n_bs, n_bs);
        for (h, s) in channels.iter().zip(cov) {
            total += h * s * h.adjoint();
        }
        log2_det_i_plus(&total.unscale(noise))
    };
    let mut last = 0.0;
    for cycle in 0..max_iter {
        // Whitened eigenmodes of every user against the other users'
        // interference, then one joint water-fill under the sum power.
        let mut per_user: Vec<(DMatrix<Complex64>, Vec<f64>)> = Vec::with_capacity(k);
        let mut all_gains = Vec::new();
        for u in 0..k {
            let mut z: DMatrix<Complex64> = DMatrix::identity(n_bs, n_bs).scale(noise);
            for j in 0..k {
                if j != u {
                    z += &channels[j] * &cov[j] * channels[j].adjoint();
                }
            }
            let w = inv_sqrt_hermitian(&z)?;
            let g = &w * &channels[u];
            let gram = g.adjoint() * &g;
            let (vals, vecs) = hermitian_eigen(&gram);
            let gains: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
            all_gains.extend(gains.iter().copied());
            per_user.push((vecs, gains));
        }
        let alloc = water_fill(&all_gains, sum_power);
        let mut offset = 0;
        let mut new_cov = Vec::with_capacity(k);
        for (vecs, gains) in &per_user {
            let m = gains.len();
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                m,
                alloc[offset..offset + m]
                    .iter()
                    .map(|&p| Complex64::new(p, 0.0)),
            ));
            new_cov.push(vecs * d * vecs.adjoint());
            offset += m;
        }
        // Damped update: Q ← ((K−1)·Q_old + Q_new)/K.
        for (old, new) in cov.iter_mut().zip(new_cov) {
            *old = (old.clone().scale(k as f64 - 1.0) + new).unscale(k as f64);
        }
        let obj = objective(&cov)?;
        if cycle > 0 && (obj - last).abs() < tol {
            return Ok(obj);
        }
        last = obj;
    }
    Err(MaError::NoConvergence {
        iterations: max_iter,
        last_improvement: f64::NAN,
    })
}

/// TDMA baseline region: time-share points with full power during the active
/// slot, over a simplex grid of slot fractions.
pub fn oma_region(users: &ScalarUsers, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if resolution < 2 {
        return Err(MaError::InvalidArgument(
            "time-share grid needs at least 2 points".into(),
        ));
    }
    let k = users.n_users();
    let full: Vec<f64> = users
        .noise_powers
        .iter()
        .map(|&n| shannon_rate(users.power / n))
        .collect::<Result<_>>()?;
    let steps = resolution - 1;
    let mut region = Vec::new();
    let mut composition = vec![0usize; k];
    compose(steps, 0, &mut composition, &mut |c: &[usize]| {
        region.push(
            c.iter()
                .zip(&full)
                .map(|(&t, &r)| t as f64 / steps as f64 * r)
                .collect(),
        );
    });
    Ok(region)
}

/// Uplink TDMA points for per-user powers `P_k` over a shared noise `N`
/// (each user active alone in its slot at full power).
pub fn oma_region_mac(powers: &[f64], noise: f64, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if resolution < 2 {
        return Err(MaError::InvalidArgument(
            "time-share grid needs at least 2 points".into(),
        ));
    }
    let full: Vec<f64> = powers
        .iter()
        .map(|&p| shannon_rate(p / noise))
        .collect::<Result<_>>()?;
    let steps = resolution - 1;
    let mut region = Vec::new();
    let mut composition = vec![0usize; powers.len()];
    compose(steps, 0, &mut composition, &mut |c: &[usize]| {
        region.push(
            c.iter()
                .zip(&full)
                .map(|(&t, &r)| t as f64 / steps as f64 * r)
                .collect(),
        );
    });
    Ok(region)
}
