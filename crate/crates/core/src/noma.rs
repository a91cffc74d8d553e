//! Downlink MIMO-NOMA rate engines: beamformer-based NOMA with per-user
//! beamformers, cluster-based NOMA with shared beamformers, the unifying
//! cluster-free framework, inter-cluster zero-forcing designs, and
//! SIC-feasibility checks.
//!
//! Conventions. SIC decoding orders are encoded by a binary matrix `α` with
//! `α_{k,k'} = 0` meaning user `k` first decodes and cancels user `k'`'s
//! message; `α_{k,k'} = 1` means user `k'`'s message stays as interference.
//! Within a cluster the indicators satisfy `α_{k,k'} + α_{k',k} = 1` and the
//! induced relation is a total order.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{from_columns, inner, norm_sqr, nullspace};
use crate::{MaError, Result};

/// Tolerance below which a residual cross-link power is treated as absent, so
/// the corresponding SIC requirement is vacuous.
const NEGLIGIBLE_POWER: f64 = 1e-30;

/// Slack on the strict SIC rate inequality, avoiding false positives at
/// numerical ties.
const SIC_SLACK: f64 = 1e-12;

/// A total SIC decoding order over `len` users, stored as the binary
/// indicator matrix `α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SicOrdering {
    len: usize,
    /// Row-major `len × len`; diagonal unused (kept at 0).
    alpha: Vec<u8>,
}

impl SicOrdering {
    /// Builds an ordering from the raw indicator matrix, validating
    /// antisymmetry (`α_{k,k'} + α_{k',k} = 1`) and transitivity (the induced
    /// relation must be a total order).
    pub fn from_alpha(alpha: &[Vec<u8>]) -> Result<Self> {
        let len = alpha.len();
        let mut flat = vec![0u8; len * len];
        for (k, row) in alpha.iter().enumerate() {
            if row.len() != len {
                return Err(MaError::DimensionMismatch("α must be square".into()));
            }
            for (kp, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(MaError::InvalidArgument("α entries must be binary".into()));
                }
                if k != kp {
                    flat[k * len + kp] = v;
                }
            }
        }
        let out = Self { len, alpha: flat };
        for k in 0..len {
            for kp in 0..len {
                if k != kp && out.alpha(k, kp) + out.alpha(kp, k) != 1 {
                    return Err(MaError::InvalidArgument(format!(
                        "α_{{{k},{kp}}} + α_{{{kp},{k}}} must equal 1 (mutual SIC is impossible)"
                    )));
                }
            }
        }
        // Transitivity: the count of later-decoded users must identify a
        // strict total order.
        let counts: Vec<usize> = (0..len)
            .map(|k| (0..len).filter(|&kp| kp != k && out.alpha(k, kp) == 1).count())
            .collect();
        for k in 0..len {
            for kp in 0..len {
                if k != kp && out.alpha(k, kp) == 1 && counts[k] <= counts[kp] {
                    return Err(MaError::InvalidArgument(
                        "α is not transitive: no total decoding order induces it".into(),
                    ));
                }
            }
        }
        Ok(out)
    }

    /// Builds the ordering in which `order[0]` is decoded first,
    /// `order[1]` second, and so on. `order` must be a permutation of
    /// `0..len`.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let len = order.len();
        let mut pos = vec![usize::MAX; len];
        for (i, &u) in order.iter().enumerate() {
            if u >= len || pos[u] != usize::MAX {
                return Err(MaError::InvalidArgument(
                    "decode order must be a permutation of the user set".into(),
                ));
            }
            pos[u] = i;
        }
        let mut alpha = vec![0u8; len * len];
        for k in 0..len {
            for kp in 0..len {
                if k != kp && pos[kp] > pos[k] {
                    // k' decoded after k ⇒ its message is not cancelled at k.
                    alpha[k * len + kp] = 1;
                }
            }
        }
        Ok(Self { len, alpha })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `α_{k,k'}`: 1 when user `k'`'s message remains as interference while
    /// user `k` decodes its own.
    pub fn alpha(&self, k: usize, kp: usize) -> u8 {
        self.alpha[k * self.len + kp]
    }

    /// Decode position of each user (0 = decoded first).
    pub fn positions(&self) -> Vec<usize> {
        (0..self.len)
            .map(|k| {
                self.len
                    - 1
                    - (0..self.len)
                        .filter(|&kp| kp != k && self.alpha(k, kp) == 1)
                        .count()
            })
            .collect()
    }
}

/// A partition of users `0..K` into clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    clusters: Vec<Vec<usize>>,
    n_users: usize,
}

impl ClusterAssignment {
    /// Validates that `clusters` is a disjoint cover of `0..n_users` with at
    /// least one cluster.
    pub fn new(clusters: Vec<Vec<usize>>, n_users: usize) -> Result<Self> {
        if clusters.is_empty() || clusters.len() > n_users {
            return Err(MaError::InvalidArgument(
                "need between 1 and K clusters".into(),
            ));
        }
        let mut seen = vec![false; n_users];
        for cluster in &clusters {
            if cluster.is_empty() {
                return Err(MaError::InvalidArgument("empty cluster".into()));
            }
            for &u in cluster {
                if u >= n_users || seen[u] {
                    return Err(MaError::InvalidArgument(format!(
                        "clusters must disjointly cover 0..{n_users}; user {u} repeated or out of range"
                    )));
                }
                seen[u] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(MaError::InvalidArgument(
                "clusters must cover every user".into(),
            ));
        }
        Ok(Self { clusters, n_users })
    }

    /// Singleton clusters (the SDMA degenerate case).
    pub fn singletons(n_users: usize) -> Self {
        Self {
            clusters: (0..n_users).map(|u| vec![u]).collect(),
            n_users,
        }
    }

    /// One cluster holding everyone (the beamformer-NOMA degenerate case).
    pub fn single(n_users: usize) -> Self {
        Self {
            clusters: vec![(0..n_users).collect()],
            n_users,
        }
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// Cluster index of each user.
    pub fn cluster_of(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.n_users];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &u in cluster {
                out[u] = c;
            }
        }
        out
    }
}

/// Output of [`bb_noma_rates`].
#[derive(Debug, Clone)]
pub struct BbNomaRates {
    /// Own-message rates `R_{k,k}`.
    pub rates: Vec<f64>,
    /// `cross_rates[k''][k] = R_{k'',k}`: the rate at which user `k''` decodes
    /// user `k`'s message (diagonal equals `rates`).
    pub cross_rates: Vec<Vec<f64>>,
    /// Whether every required SIC inequality `R_{k'',k} > R_{k,k}` holds
    /// (pairs with negligible cross power are vacuous).
    pub sic_feasible: bool,
    /// Required pairs `(k'', k)` whose inequality failed.
    pub violations: Vec<(usize, usize)>,
}

fn check_users(
    h: &DMatrix<Complex64>,
    n_beams: usize,
    powers: &[f64],
    noises: &[f64],
) -> Result<usize> {
    let k = h.ncols();
    if k == 0 {
        return Err(MaError::DimensionMismatch("no users".into()));
    }
    if powers.len() != k || noises.len() != k {
        return Err(MaError::DimensionMismatch(
            "powers and noises must match the user count".into(),
        ));
    }
    if powers.iter().any(|&p| p < 0.0) || noises.iter().any(|&n| !(n > 0.0)) {
        return Err(MaError::InvalidArgument(
            "powers must be nonnegative and noises positive".into(),
        ));
    }
    if n_beams != k {
        return Err(MaError::DimensionMismatch(
            "one beamformer per user is required".into(),
        ));
    }
    Ok(k)
}

/// Beamformer-based MIMO-NOMA: per-user beamformers `w_k`, one shared SIC
/// order across all users.
///
/// `R_{k'',k} = log2(1 + |h_{k''}ᴴw_k|²p_k /
///   (Σ_{k'≠k} α_{k,k'}|h_{k''}ᴴw_{k'}|²p_{k'} + σ_{k''}²))` and
/// `sic_feasible ⇔ R_{k'',k} > R_{k,k}` for every `k'' ≠ k` with
/// `α_{k'',k} = 0` whose cross power `|h_{k''}ᴴw_k|²p_k` is non-negligible.
pub fn bb_noma_rates(
    h: &DMatrix<Complex64>,
    beamformers: &[Vec<Complex64>],
    powers: &[f64],
    noises: &[f64],
    ordering: &SicOrdering,
) -> Result<BbNomaRates> {
    let k = check_users(h, beamformers.len(), powers, noises)?;
    if ordering.len() != k {
        return Err(MaError::DimensionMismatch(
            "ordering size must match the user count".into(),
        ));
    }
    // gain[r][t] = |h_rᴴ w_t|²
    let gain: Vec<Vec<f64>> = (0..k)
        .map(|r| {
            (0..k)
                .map(|t| inner(h.column(r).as_slice(), &beamformers[t]).norm_sqr())
                .collect()
        })
        .collect();
    let mut cross = vec![vec![0.0f64; k]; k];
    for msg in 0..k {
        for rx in 0..k {
            let mut interference = 0.0;
            for other in 0..k {
                if other != msg && ordering.alpha(msg, other) == 1 {
                    interference += gain[rx][other] * powers[other];
                }
            }
            cross[rx][msg] =
                (1.0 + gain[rx][msg] * powers[msg] / (interference + noises[rx])).log2();
        }
    }
    let rates: Vec<f64> = (0..k).map(|u| cross[u][u]).collect();
    let mut violations = Vec::new();
    for msg in 0..k {
        for rx in 0..k {
            if rx != msg
                && ordering.alpha(rx, msg) == 0
                && gain[rx][msg] * powers[msg] > NEGLIGIBLE_POWER
                && cross[rx][msg] <= rates[msg] + SIC_SLACK
            {
                violations.push((rx, msg));
            }
        }
    }
    Ok(BbNomaRates {
        rates,
        cross_rates: cross,
        sic_feasible: violations.is_empty(),
        violations,
    })
}

fn check_cluster_orderings(
    assignment: &ClusterAssignment,
    orderings: &[SicOrdering],
) -> Result<()> {
    if orderings.len() != assignment.n_clusters() {
        return Err(MaError::DimensionMismatch(
            "one SIC ordering per cluster is required".into(),
        ));
    }
    for (cluster, ordering) in assignment.clusters().iter().zip(orderings) {
        if ordering.len() != cluster.len() {
            return Err(MaError::DimensionMismatch(
                "ordering size must match its cluster size".into(),
            ));
        }
    }
    Ok(())
}

/// Unified cluster-free SIC rates with per-user beamformers: intra-cluster
/// interference is α-masked, out-of-cluster interference enters in full.
///
/// `N_Cluster = K` reduces to SDMA, `N_Cluster = 1` to beamformer-based NOMA,
/// and shared per-cluster beamformers reproduce cluster-based NOMA.
pub fn clusterfree_rates(
    h: &DMatrix<Complex64>,
    beamformers: &[Vec<Complex64>],
    powers: &[f64],
    noises: &[f64],
    assignment: &ClusterAssignment,
    orderings: &[SicOrdering],
) -> Result<Vec<f64>> {
    let k = check_users(h, beamformers.len(), powers, noises)?;
    if assignment.n_users() != k {
        return Err(MaError::DimensionMismatch(
            "assignment must cover exactly the user set".into(),
        ));
    }
    check_cluster_orderings(assignment, orderings)?;
    let cluster_of = assignment.cluster_of();
    // local index of each user inside its cluster
    let mut local = vec![0usize; k];
    for cluster in assignment.clusters() {
        for (i, &u) in cluster.iter().enumerate() {
            local[u] = i;
        }
    }
    let mut rates = Vec::with_capacity(k);
    for u in 0..k {
        let c = cluster_of[u];
        let hu = h.column(u);
        let signal = inner(hu.as_slice(), &beamformers[u]).norm_sqr() * powers[u];
        let mut interference = 0.0;
        for other in 0..k {
            if other == u {
                continue;
            }
            let g = inner(hu.as_slice(), &beamformers[other]).norm_sqr();
            if cluster_of[other] == c {
                interference +=
                    f64::from(orderings[c].alpha(local[u], local[other])) * g * powers[other];
            } else {
                interference += g * powers[other];
            }
        }
        rates.push((1.0 + signal / (interference + noises[u])).log2());
    }
    Ok(rates)
}

/// Cluster-based MIMO-NOMA with a shared beamformer `w_c` per cluster:
/// `R_k = log2(1 + p_{c,k}|h_kᴴw_c|² / (|h_kᴴw_c|²·p̄_{c,k} +
/// Σ_{c'≠c}|h_kᴴw_{c'}|²·p̄_{c'} + σ_k²))` with `p̄_{c,k}` the α-masked
/// intra-cluster power and `p̄_{c'}` the full power of cluster `c'`.
pub fn cluster_noma_rates(
    h: &DMatrix<Complex64>,
    cluster_beamformers: &[Vec<Complex64>],
    powers: &[f64],
    noises: &[f64],
    assignment: &ClusterAssignment,
    orderings: &[SicOrdering],
) -> Result<Vec<f64>> {
    if cluster_beamformers.len() != assignment.n_clusters() {
        return Err(MaError::DimensionMismatch(
            "one beamformer per cluster is required".into(),
        ));
    }
    let cluster_of = assignment.cluster_of();
    let per_user: Vec<Vec<Complex64>> = (0..assignment.n_users())
        .map(|u| cluster_beamformers[cluster_of[u]].clone())
        .collect();
    clusterfree_rates(h, &per_user, powers, noises, assignment, orderings)
}

/// Input side of the inter-cluster zero-forcing design.
pub enum ZfInput<'a> {
    /// BS-side MISO design: `channels` is `N_BS × K`, one column per user.
    /// Produces one beamformer per cluster that nulls every other cluster's
    /// users.
    BsSide { channels: &'a DMatrix<Complex64> },
    /// User-side MIMO design: each user has a channel matrix
    /// `H_{c,k} ∈ C^{N_BS×N_U}` and the clusters use given beamformers;
    /// produces per-user equalizers `v` with `vᴴH ᴴw_{c'} = 0` for `c' ≠ c`.
    UserSide {
        user_channels: &'a [DMatrix<Complex64>],
        cluster_beamformers: &'a [Vec<Complex64>],
    },
}

/// Output of [`intercluster_zf`].
#[derive(Debug, Clone)]
pub enum ZfDesign {
    /// One unit-norm beamformer per cluster.
    BsSide { beamformers: Vec<Vec<Complex64>> },
    /// One unit-norm equalizer per user (global index order).
    UserSide { equalizers: Vec<Vec<Complex64>> },
}

/// Inter-cluster zero-forcing. Residual cross terms are guaranteed below
/// `1e−10` relative; otherwise an [`MaError::Infeasible`] names the violated
/// dimension condition (`N_BS ≥ N_Cluster` for rank-1 intra-cluster channels,
/// `N_BS ≥ max_c Σ_{c'≠c} K_{c'}` in the full-rank worst case, and
/// `N_U ≥ N_Cluster` for the user-side design).
pub fn intercluster_zf(input: ZfInput<'_>, assignment: &ClusterAssignment) -> Result<ZfDesign> {
    match input {
        ZfInput::BsSide { channels } => {
            let n_bs = channels.nrows();
            if channels.ncols() != assignment.n_users() {
                return Err(MaError::DimensionMismatch(
                    "one channel column per user is required".into(),
                ));
            }
            let mut beamformers = Vec::with_capacity(assignment.n_clusters());
            for (c, cluster) in assignment.clusters().iter().enumerate() {
                // Channels of all users outside cluster c.
                let others: Vec<Vec<Complex64>> = assignment
                    .clusters()
                    .iter()
                    .enumerate()
                    .filter(|&(cp, _)| cp != c)
                    .flat_map(|(_, users)| {
                        users
                            .iter()
                            .map(|&u| channels.column(u).iter().copied().collect())
                    })
                    .collect();
                // With a single cluster there is nothing to null: the whole
                // transmit space is available.
                let basis = if others.is_empty() {
                    DMatrix::identity(n_bs, n_bs)
                } else {
                    let constraints = from_columns(&others).transpose(); // rows = hᵀ
                    // Null space of the conjugated constraint rows: h_uᴴw=0.
                    nullspace(&constraints.map(|z| z.conj()), 1e-10)
                };
                if basis.ncols() == 0 {
                    let n_other: usize = others.len();
                    let condition = if n_bs < assignment.n_clusters() {
                        format!(
                            "rank-1 intra-cluster condition N_BS ≥ N_Cluster fails: {n_bs} < {}",
                            assignment.n_clusters()
                        )
                    } else {
                        format!(
                            "full-rank condition N_BS ≥ max_c Σ_{{c'≠c}} K_c' fails: \
                             {n_bs} ≤ {n_other} constraints for cluster {c}"
                        )
                    };
                    return Err(MaError::Infeasible(condition));
                }
                // Project the cluster's own channels onto the null space and
                // take the strongest direction so h_{c,k}ᴴw_c ≠ 0.
                let mut best: Option<(f64, Vec<Complex64>)> = None;
                for &u in cluster {
                    let hu = channels.column(u).into_owned();
                    let coeff = basis.adjoint() * &hu;
                    let proj = &basis * coeff;
                    let p = proj.norm_squared();
                    if best.as_ref().is_none_or(|(b, _)| p > *b) {
                        best = Some((p, proj.unscale(proj.norm().max(1e-300)).iter().copied().collect()));
                    }
                }
                let (p, w) = best.expect("non-empty cluster");
                if p <= NEGLIGIBLE_POWER {
                    return Err(MaError::Infeasible(format!(
                        "cluster {c}: every in-cluster channel lies in the span of the other \
                         clusters' channels; h_{{c,k}}ᴴw_c ≠ 0 cannot be met"
                    )));
                }
                beamformers.push(w);
            }
            Ok(ZfDesign::BsSide { beamformers })
        }
        ZfInput::UserSide {
            user_channels,
            cluster_beamformers,
        } => {
            if user_channels.len() != assignment.n_users()
                || cluster_beamformers.len() != assignment.n_clusters()
            {
                return Err(MaError::DimensionMismatch(
                    "need one channel matrix per user and one beamformer per cluster".into(),
                ));
            }
            let cluster_of = assignment.cluster_of();
            let mut equalizers = Vec::with_capacity(assignment.n_users());
            for u in 0..assignment.n_users() {
                let hm = &user_channels[u];
                let n_u = hm.ncols();
                if n_u < assignment.n_clusters() {
                    return Err(MaError::Infeasible(format!(
                        "user-side condition N_U ≥ N_Cluster fails: {n_u} < {}",
                        assignment.n_clusters()
                    )));
                }
                // v ⊥ Hᴴw_{c'} for c' ≠ c: null space of the rows (Hᴴw_{c'})ᴴ.
                let c = cluster_of[u];
                let rows: Vec<Vec<Complex64>> = (0..assignment.n_clusters())
                    .filter(|&cp| cp != c)
                    .map(|cp| {
                        let w = crate::linalg::col(&cluster_beamformers[cp]);
                        (hm.adjoint() * w).iter().copied().collect()
                    })
                    .collect();
                // With a single cluster there is nothing to null: the whole
                // receive space is available.
                let basis = if rows.is_empty() {
                    DMatrix::identity(n_u, n_u)
                } else {
                    let constraints =
                        from_columns(&rows).transpose().map(|z: Complex64| z.conj());
                    nullspace(&constraints, 1e-10)
                };
                if basis.ncols() == 0 {
                    return Err(MaError::Infeasible(format!(
                        "user {u}: no equalizer satisfies the inter-cluster zero constraints"
                    )));
                }
                let target = hm.adjoint() * crate::linalg::col(&cluster_beamformers[c]);
                let coeff = basis.adjoint() * target;
                let proj = &basis * coeff;
                if proj.norm_squared() <= NEGLIGIBLE_POWER {
                    return Err(MaError::Infeasible(format!(
                        "user {u}: own-cluster response vanishes on the zero-forcing subspace"
                    )));
                }
                equalizers.push(proj.unscale(proj.norm()).iter().copied().collect());
            }
            Ok(ZfDesign::UserSide { equalizers })
        }
    }
}

/// SIC ordering from effective channel gains `|h_kᴴw|²` under a common
/// beamformer: users sorted by descending gain decode first (position 0 holds
/// the strongest effective channel; ties break toward the lower user index).
pub fn ordering_by_effective_gain(h: &DMatrix<Complex64>, w: &[Complex64]) -> Result<SicOrdering> {
    let k = h.ncols();
    if k == 0 {
        return Err(MaError::DimensionMismatch("no users".into()));
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let gains: Vec<f64> = (0..k)
        .map(|u| inner(h.column(u).as_slice(), w).norm_sqr())
        .collect();
    idx.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap().then(a.cmp(&b)));
    SicOrdering::from_order(&idx)
}

/// Greedy correlation-threshold clustering: user `k` joins the first cluster
/// whose representative (first member) satisfies
/// `|h_repᴴh_k|/(‖h_rep‖‖h_k‖) ≥ threshold`, else it opens a new cluster.
pub fn cluster_by_correlation(
    h: &DMatrix<Complex64>,
    threshold: f64,
) -> Result<ClusterAssignment> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(MaError::InvalidArgument(
            "correlation threshold must lie in [0, 1]".into(),
        ));
    }
    let k = h.ncols();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for u in 0..k {
        let hu: Vec<Complex64> = h.column(u).iter().copied().collect();
        let nu = norm_sqr(&hu).sqrt();
        let mut placed = false;
        for cluster in clusters.iter_mut() {
            let rep: Vec<Complex64> = h.column(cluster[0]).iter().copied().collect();
            let corr = inner(&rep, &hu).norm() / (norm_sqr(&rep).sqrt() * nu).max(1e-300);
            if corr >= threshold {
                cluster.push(u);
                placed = true;
                break;
            }
        }
        if !placed {
            clusters.push(vec![u]);
        }
    }
    ClusterAssignment::new(clusters, k)
}
