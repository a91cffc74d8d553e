//! Experiment registry: named, deterministic, config-driven computations
//! dispatching into [`ma_lab_core`], each producing a [`ResultTable`].
//!
//! Region tables use a shared numeric `label_code` column:
//! `0` communication-centric corner, `1` sensing-centric corner,
//! `2` time-share (parameter `t`), `3` orthogonal split (parameter `split`),
//! `4` Pareto rate-profile point (parameter `α`).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::Value;

use ma_lab_core::beamforming::{uplink_combiner, uplink_rates, UplinkMethod};
use ma_lab_core::capacity::{iwf_mac, scalar_bc_rates, ScalarUsers, VectorMacInstance};
use ma_lab_core::channels::{
    beamspace_transform, correlation_rho, farfield_los, nearfield_spd, rician_sparse,
    NearfieldMode, RicianParams,
};
use ma_lab_core::foundation::{steering_vector, ArrayGeometry, Position};
use ma_lab_core::isac::{
    dl_su_miso_isac, ClusterIsacInstance, PointLabel, SensingScene, SrCrPoint,
    SuMisoIsacParams, UplinkIsacInstance,
};
use ma_lab_core::nearfield::{
    analog_snr_closed, analog_snr_direct, cap_matched_current, cap_sinr, nearfield_hb_sdma_sumrate,
    CapAperture, ClosedVariant, HbChannelMode,
};
use ma_lab_core::noma::{
    cluster_by_correlation, cluster_noma_rates, intercluster_zf, ordering_by_effective_gain,
    ClusterAssignment, SicOrdering, ZfDesign, ZfInput,
};
use ma_lab_core::rng::{keyed_rng, standard_complex_vec, tag};
use ma_lab_core::{MaError, Result as CoreResult};

use crate::config::{config_hash, Cfg};
use crate::table::ResultTable;

const LABEL_COMM_CENTRIC: f64 = 0.0;
const LABEL_SENSING_CENTRIC: f64 = 1.0;
const LABEL_TIME_SHARE: f64 = 2.0;
const LABEL_OSAC: f64 = 3.0;
const LABEL_PARETO: f64 = 4.0;

/// One registry entry.
pub struct Experiment {
    /// Stable registry name.
    pub name: &'static str,
    /// One-line description for `ma-lab list`.
    pub description: &'static str,
    extract: fn(&Cfg) -> Option<Box<dyn Runnable>>,
}

trait Runnable: Send + Sync {
    fn run(&self, seed: u64) -> CoreResult<ResultTable>;
}

impl<F> Runnable for F
where
    F: Fn(u64) -> CoreResult<ResultTable> + Send + Sync,
{
    fn run(&self, seed: u64) -> CoreResult<ResultTable> {
        self(seed)
    }
}

/// The experiment registry in stable order.
pub fn registry() -> &'static [Experiment] {
    &[
        Experiment {
            name: "bc-region",
            description: "two-user scalar broadcast-channel rate region under superposition coding",
            extract: bc_region,
        },
        Experiment {
            name: "mac-region",
            description: "two-user scalar multiple-access-channel region: SIC corners and time sharing",
            extract: mac_region,
        },
        Experiment {
            name: "iwf-mac",
            description: "iterative water-filling sum-capacity trajectory on a random vector MAC",
            extract: iwf_mac_exp,
        },
        Experiment {
            name: "beamforming-compare",
            description: "uplink sum rate of MRC/ZF/LMMSE combining over an SNR sweep",
            extract: beamforming_compare,
        },
        Experiment {
            name: "noma-clusterfree",
            description: "per-user rates of SDMA, single-cluster NOMA, and correlation-clustered NOMA",
            extract: noma_clusterfree,
        },
        Experiment {
            name: "favorable-propagation-sweep",
            description: "channel correlation versus array size for far-field or near-field users",
            extract: favorable_propagation,
        },
        Experiment {
            name: "beamspace-map",
            description: "DFT beamspace magnitudes of sparse mmWave user channels",
            extract: beamspace_map,
        },
        Experiment {
            name: "nearfield-analog-snr",
            description: "near-field analog-beamfocusing SNR: direct sum versus closed forms",
            extract: nearfield_analog_snr,
        },
        Experiment {
            name: "nearfield-hb-sdma",
            description: "hybrid-beamforming SDMA sum rate, near-field versus far-field channels",
            extract: nearfield_hb_sdma,
        },
        Experiment {
            name: "cap-sinr",
            description: "continuous-aperture matched-current SINR per user",
            extract: cap_sinr_exp,
        },
        Experiment {
            name: "isac-uplink-region",
            description: "uplink ISAC SR-CR region: SIC corners, time sharing, OSAC baseline",
            extract: isac_uplink_region,
        },
        Experiment {
            name: "isac-su-miso-region",
            description: "downlink SU-MISO ISAC region: centric corners and Pareto boundary",
            extract: isac_su_miso_region,
        },
        Experiment {
            name: "isac-cluster-region",
            description: "downlink cluster-based MIMO-NOMA ISAC region with OSAC baseline",
            extract: isac_cluster_region,
        },
    ]
}

/// Looks up an experiment by name.
pub fn find(name: &str) -> Option<&'static Experiment> {
    registry().iter().find(|e| e.name == name)
}

/// Why a run failed.
#[derive(Debug)]
pub enum RunError {
    /// Invalid configuration; every violation is listed.
    Config(Vec<String>),
    /// The computation itself failed (propagated from the core library).
    Core(MaError),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(errs) => {
                writeln!(f, "configuration is invalid:")?;
                for e in errs {
                    writeln!(f, "  - {e}")?;
                }
                Ok(())
            }
            RunError::Core(e) => write!(f, "{e}"),
        }
    }
}

/// Validates a config against its experiment's schema, returning all
/// violations (empty when valid).
pub fn validate_config(root: &Value) -> Vec<String> {
    let cfg = Cfg::new(root);
    extract(&cfg);
    cfg.finish()
}

fn extract(cfg: &Cfg) -> Option<(Box<dyn Runnable>, u64)> {
    let seed = cfg.u64("seed");
    cfg.str_opt("output");
    let runnable = match cfg.str("experiment") {
        Some(name) => match find(name) {
            Some(exp) => (exp.extract)(cfg),
            None => {
                let names: Vec<&str> = registry().iter().map(|e| e.name).collect();
                cfg.error(format!(
                    "unknown experiment '{name}'; known experiments: {}",
                    names.join(", ")
                ));
                None
            }
        },
        None => None,
    };
    Some((runnable?, seed?))
}

/// Validates and runs a config. `seed_override` replaces the config seed;
/// `threads` sizes the worker pool (output is identical for any count).
pub fn run(
    root: &Value,
    seed_override: Option<u64>,
    threads: usize,
) -> Result<ResultTable, RunError> {
    let cfg = Cfg::new(root);
    let extracted = extract(&cfg);
    let errors = cfg.finish();
    if !errors.is_empty() {
        return Err(RunError::Config(errors));
    }
    let (runnable, cfg_seed) = extracted.expect("no errors implies extraction succeeded");
    let seed = seed_override.unwrap_or(cfg_seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| RunError::Core(MaError::Numerical(format!("thread pool: {e}"))))?;
    let mut table = pool
        .install(|| runnable.run(seed))
        .map_err(RunError::Core)?;
    table.meta("config_hash", config_hash(root));
    table.meta("seed", seed.to_string());
    table.meta("tool_version", env!("CARGO_PKG_VERSION"));
    if let Some(name) = root.get("experiment").and_then(|v| v.as_str()) {
        table.meta("experiment", name);
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Shared extraction helpers
// ---------------------------------------------------------------------------

fn odd_n(cfg: &Cfg, path: &str) -> Option<usize> {
    let n = cfg.usize(path)?;
    if n == 0 || n % 2 == 0 {
        cfg.error(format!(
            "'{path}' must be odd and positive (symmetric array), got {n}"
        ));
        return None;
    }
    Some(n)
}

fn odd_grid(cfg: &Cfg, path: &str) -> Option<Vec<usize>> {
    let grid = cfg.arr_usize(path)?;
    if grid.is_empty() {
        cfg.error(format!("'{path}' must not be empty"));
        return None;
    }
    if let Some(bad) = grid.iter().find(|&&n| n == 0 || n % 2 == 0) {
        cfg.error(format!(
            "'{path}' entries must be odd and positive (symmetric array), got {bad}"
        ));
        return None;
    }
    Some(grid)
}

fn positive(cfg: &Cfg, path_label: &str, v: f64) -> Option<f64> {
    if v > 0.0 {
        Some(v)
    } else {
        cfg.error(format!("{path_label} must be positive, got {v}"));
        None
    }
}

fn angles_arr(cfg: &Cfg, base: &str, expected_len: Option<usize>) -> Option<Vec<f64>> {
    let deg = format!("{base}_deg");
    let rad = format!("{base}_rad");
    let has_deg = cfg.raw(&deg);
    let values = match (has_deg, cfg.raw(&rad)) {
        (Some(_), Some(_)) => {
            cfg.error(format!("'{deg}' and '{rad}' are mutually exclusive"));
            return None;
        }
        (Some(_), None) => cfg.arr_f64(&deg)?.iter().map(|v| v.to_radians()).collect(),
        (None, Some(_)) => cfg.arr_f64(&rad)?,
        (None, None) => {
            cfg.error(format!("missing unit-tagged key: provide '{deg}' or '{rad}'"));
            return None;
        }
    };
    check_len(cfg, base, &values, expected_len)
}

fn check_len<T>(cfg: &Cfg, label: &str, v: &[T], expected: Option<usize>) -> Option<Vec<T>>
where
    T: Clone,
{
    if let Some(n) = expected {
        if v.len() != n {
            cfg.error(format!("'{label}' must have {n} entries, got {}", v.len()));
            return None;
        }
    }
    Some(v.to_vec())
}

fn random_channel_matrix(n: usize, k: usize, seed: u64, unit: u64) -> DMatrix<Complex64> {
    let cols: Vec<Vec<Complex64>> = (0..k)
        .map(|u| {
            let mut rng = keyed_rng(seed, tag::EXPERIMENT, unit, u as u64);
            standard_complex_vec(&mut rng, n)
        })
        .collect();
    ma_lab_core::linalg::from_columns(&cols)
}

fn steering_correlation(
    geom: &ArrayGeometry,
    angles: &[f64],
    variances: &[f64],
) -> DMatrix<Complex64> {
    let n = geom.n_antennas;
    let mut r = DMatrix::zeros(n, n);
    for (&theta, &var) in angles.iter().zip(variances) {
        let b = steering_vector(geom, theta);
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] += b[i] * b[j].conj() * var;
            }
        }
    }
    r
}

fn push_point(table: &mut ResultTable, point: &SrCrPoint) {
    let (code, parameter) = match point.label {
        PointLabel::CommCentric => (LABEL_COMM_CENTRIC, 0.0),
        PointLabel::SensingCentric => (LABEL_SENSING_CENTRIC, 1.0),
        PointLabel::TimeShare { t } => (LABEL_TIME_SHARE, t),
        PointLabel::Osac { split } => (LABEL_OSAC, split),
        PointLabel::Pareto { alpha } => (LABEL_PARETO, alpha),
    };
    table.push_row(vec![code, parameter, point.sr, point.cr]);
}

fn unit_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

fn bc_region(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let power = cfg.power("users.power");
    let noises = cfg
        .arr_f64("users.noise_powers_linear")
        .and_then(|n| check_len(cfg, "users.noise_powers_linear", &n, Some(2)));
    let resolution = cfg.usize_or("sweep.resolution", 101);
    let power = positive(cfg, "'users.power'", power?)?;
    let noises = noises?;
    let resolution = resolution?;
    if resolution < 2 {
        cfg.error("'sweep.resolution' must be at least 2");
        return None;
    }
    Some(Box::new(move |_seed: u64| {
        let users = ScalarUsers::new(power, noises.clone())?;
        let mut t = ResultTable::new(vec![
            "alpha_user1".into(),
            "rate_user1_bits".into(),
            "rate_user2_bits".into(),
        ]);
        for i in 0..resolution {
            let a = i as f64 / (resolution - 1) as f64;
            let rates = scalar_bc_rates(&users, &[a, 1.0 - a])?;
            t.push_row(vec![a, rates[0], rates[1]]);
        }
        Ok(t)
    }))
}

fn mac_region(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let powers = cfg
        .arr_f64("users.powers_linear")
        .and_then(|v| check_len(cfg, "users.powers_linear", &v, Some(2)));
    let gains = cfg
        .arr_f64("users.channel_gains_linear")
        .and_then(|v| check_len(cfg, "users.channel_gains_linear", &v, Some(2)));
    let noise = cfg.power("users.noise_power");
    let resolution = cfg.usize_or("sweep.resolution", 101);
    let powers = powers?;
    let gains = gains?;
    let noise = positive(cfg, "'users.noise_power'", noise?)?;
    let resolution = resolution?;
    if resolution < 2 {
        cfg.error("'sweep.resolution' must be at least 2");
        return None;
    }
    Some(Box::new(move |_seed: u64| {
        let s = [powers[0] * gains[0], powers[1] * gains[1]];
        // SIC corner with user 1 decoded first (sees user 2 as noise).
        let corner_a = [
            (1.0 + s[0] / (noise + s[1])).log2(),
            (1.0 + s[1] / noise).log2(),
        ];
        let corner_b = [
            (1.0 + s[0] / noise).log2(),
            (1.0 + s[1] / (noise + s[0])).log2(),
        ];
        let mut t = ResultTable::new(vec![
            "time_share_t".into(),
            "rate_user1_bits".into(),
            "rate_user2_bits".into(),
        ]);
        for i in 0..resolution {
            let w = i as f64 / (resolution - 1) as f64;
            t.push_row(vec![
                w,
                (1.0 - w) * corner_a[0] + w * corner_b[0],
                (1.0 - w) * corner_a[1] + w * corner_b[1],
            ]);
        }
        Ok(t)
    }))
}

fn iwf_mac_exp(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let n_bs = cfg.usize("geometry.n_bs_antennas");
    let budgets = cfg.arr_f64("users.power_budgets_linear");
    let noise = cfg.power("users.noise_power");
    let tolerance = cfg.f64_or("solver.tolerance", 1e-10);
    let max_iter = cfg.usize_or("solver.max_iterations", 500);
    let n_bs = n_bs?;
    let budgets = budgets?;
    if budgets.is_empty() || budgets.iter().any(|&p| p <= 0.0) {
        cfg.error("'users.power_budgets_linear' must be a nonempty array of positive powers");
        return None;
    }
    let noise = positive(cfg, "'users.noise_power'", noise?)?;
    let tolerance = tolerance?;
    let max_iter = max_iter?;
    Some(Box::new(move |seed: u64| {
        let k = budgets.len();
        let channels: Vec<DMatrix<Complex64>> = (0..k)
            .map(|u| random_channel_matrix(n_bs, 1, seed, u as u64))
            .collect();
        let instance = VectorMacInstance {
            covariances: channels
                .iter()
                .map(|_| DMatrix::zeros(1, 1))
                .collect(),
            channels,
            noise,
            budgets: budgets.clone(),
        };
        let result = iwf_mac(&instance, tolerance, max_iter)?;
        let mut t = ResultTable::new(vec!["iteration".into(), "sum_rate_bits".into()]);
        for (i, &obj) in result.objective_trace.iter().enumerate() {
            t.push_row(vec![(i + 1) as f64, obj]);
        }
        t.meta("sum_capacity_bits", format!("{:.16e}", result.sum_capacity));
        Ok(t)
    }))
}

fn beamforming_compare(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let n_bs = cfg.usize("geometry.n_bs_antennas");
    let k = cfg.usize("users.count");
    let snr_grid = cfg.arr_f64("sweep.snr_db_grid");
    let (n_bs, k) = (n_bs?, k?);
    if k == 0 || n_bs < k {
        cfg.error(format!(
            "'geometry.n_bs_antennas' must be at least 'users.count' (ZF feasibility), got {n_bs} < {k}"
        ));
        return None;
    }
    let snr_grid = snr_grid?;
    if snr_grid.is_empty() {
        cfg.error("'sweep.snr_db_grid' must not be empty");
        return None;
    }
    Some(Box::new(move |seed: u64| {
        let h = random_channel_matrix(n_bs, k, seed, 0);
        let rows: Vec<CoreResult<Vec<f64>>> = snr_grid
            .par_iter()
            .map(|&snr_db| {
                let p = 10f64.powf(snr_db / 10.0);
                let powers = vec![p; k];
                let mut row = vec![snr_db];
                for method in [UplinkMethod::Mrc, UplinkMethod::Zf, UplinkMethod::Lmmse] {
                    let combiners = uplink_combiner(&h, &powers, 1.0, method)?;
                    let rates = uplink_rates(&h, &combiners, &powers, 1.0)?;
                    row.push(rates.iter().sum());
                }
                Ok(row)
            })
            .collect();
        let mut t = ResultTable::new(vec![
            "snr_db".into(),
            "sum_rate_mrc_bits".into(),
            "sum_rate_zf_bits".into(),
            "sum_rate_lmmse_bits".into(),
        ]);
        for row in rows {
            t.push_row(row?);
        }
        Ok(t)
    }))
}

fn noma_clusterfree(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let n_bs = cfg.usize("geometry.n_bs_antennas");
    let k = cfg.usize("users.count");
    let power = cfg.power("users.power");
    let noise = cfg.power("users.noise_power");
    let threshold = cfg.f64("cluster.correlation_threshold");
    let (n_bs, k) = (n_bs?, k?);
    if k == 0 {
        cfg.error("'users.count' must be positive");
        return None;
    }
    let power = positive(cfg, "'users.power'", power?)?;
    let noise = positive(cfg, "'users.noise_power'", noise?)?;
    let threshold = threshold?;
    if !(0.0..=1.0).contains(&threshold) {
        cfg.error("'cluster.correlation_threshold' must lie in [0, 1]");
        return None;
    }
    Some(Box::new(move |seed: u64| {
        let h = random_channel_matrix(n_bs, k, seed, 0);
        let powers = vec![power / k as f64; k];
        let noises = vec![noise; k];
        let rates_for = |assignment: &ClusterAssignment| -> CoreResult<Vec<f64>> {
            let design = intercluster_zf(ZfInput::BsSide { channels: &h }, assignment)?;
            let beamformers = match design {
                ZfDesign::BsSide { beamformers } => beamformers,
                ZfDesign::UserSide { .. } => unreachable!("BS-side input"),
            };
            let orderings: CoreResult<Vec<SicOrdering>> = assignment
                .clusters()
                .iter()
                .enumerate()
                .map(|(c, members)| {
                    let cols: Vec<Vec<Complex64>> = members
                        .iter()
                        .map(|&u| h.column(u).iter().copied().collect())
                        .collect();
                    let sub = ma_lab_core::linalg::from_columns(&cols);
                    ordering_by_effective_gain(&sub, &beamformers[c])
                })
                .collect();
            cluster_noma_rates(&h, &beamformers, &powers, &noises, assignment, &orderings?)
        };
        let sdma = rates_for(&ClusterAssignment::singletons(k))?;
        let bb = rates_for(&ClusterAssignment::single(k))?;
        let clustered = rates_for(&cluster_by_correlation(&h, threshold)?)?;
        let mut t = ResultTable::new(vec![
            "user".into(),
            "rate_sdma_bits".into(),
            "rate_bb_noma_bits".into(),
            "rate_clusterfree_bits".into(),
        ]);
        for u in 0..k {
            t.push_row(vec![u as f64, sdma[u], bb[u], clustered[u]]);
        }
        Ok(t)
    }))
}

fn favorable_propagation(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let spacing = cfg.f64("geometry.spacing_m");
    let wavelength = cfg.f64("geometry.wavelength_m");
    let grid = odd_grid(cfg, "sweep.n_grid");
    let ranges = cfg
        .arr_f64("users.ranges_m")
        .and_then(|r| check_len(cfg, "users.ranges_m", &r, Some(2)));
    let angles = angles_arr(cfg, "users.angles", Some(2));
    let model = cfg.str("users.model").map(str::to_string);
    let spacing = positive(cfg, "'geometry.spacing_m'", spacing?)?;
    let wavelength = positive(cfg, "'geometry.wavelength_m'", wavelength?)?;
    let grid = grid?;
    let ranges = ranges?;
    let angles = angles?;
    let model = model?;
    if model != "farfield" && model != "nearfield-exact" {
        cfg.error("'users.model' must be 'farfield' or 'nearfield-exact'");
        return None;
    }
    Some(Box::new(move |_seed: u64| {
        let rows: Vec<CoreResult<Vec<f64>>> = grid
            .par_iter()
            .map(|&n| {
                let geom = ArrayGeometry::new(n, spacing, wavelength)?;
                let channel = |r: f64, theta: f64| -> CoreResult<Vec<f64>> {
                    let pos = Position::new(r, theta)?;
                    let ch = if model == "farfield" {
                        farfield_los(&geom, pos, 1.0)?
                    } else {
                        nearfield_spd(&geom, pos, 1.0, NearfieldMode::Exact)?
                    };
                    Ok(ch.entries.iter().flat_map(|z| [z.re, z.im]).collect())
                };
                let h1 = channel(ranges[0], angles[0])?;
                let h2 = channel(ranges[1], angles[1])?;
                let to_complex = |v: &[f64]| -> Vec<Complex64> {
                    v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
                };
                let rho = correlation_rho(&to_complex(&h1), &to_complex(&h2))?;
                Ok(vec![n as f64, rho])
            })
            .collect();
        let mut t = ResultTable::new(vec!["n_antennas".into(), "rho".into()]);
        for row in rows {
            t.push_row(row?);
        }
        Ok(t)
    }))
}

fn beamspace_map(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let n = odd_n(cfg, "geometry.n_bs_antennas");
    let wavelength = cfg.f64("geometry.wavelength_m");
    let ranges = cfg.arr_f64("users.ranges_m");
    let k_factor = cfg.power("channel.k_factor");
    let n_paths = cfg.usize("channel.n_paths");
    let angles = match &ranges {
        Some(r) => angles_arr(cfg, "users.angles", Some(r.len())),
        None => angles_arr(cfg, "users.angles", None),
    };
    let n = n?;
    let wavelength = positive(cfg, "'geometry.wavelength_m'", wavelength?)?;
    let ranges = ranges?;
    let angles = angles?;
    if ranges.is_empty() {
        cfg.error("'users.ranges_m' must not be empty");
        return None;
    }
    let k_factor = k_factor?;
    let n_paths = n_paths?;
    if n_paths == 0 {
        cfg.error("'channel.n_paths' must be positive");
        return None;
    }
    Some(Box::new(move |seed: u64| {
        let geom = ArrayGeometry::new(n, wavelength / 2.0, wavelength)?;
        let mut channels = Vec::with_capacity(ranges.len());
        for (u, (&r, &theta)) in ranges.iter().zip(&angles).enumerate() {
            let params = RicianParams {
                k_factor,
                n_paths,
                los_angle: theta,
                nlos_angles: None,
                nlos_gains: None,
                user: u as u64,
            };
            channels.push(rician_sparse(&geom, Position::new(r, theta)?, 1.0, &params, seed)?);
        }
        let refs: Vec<&_> = channels.iter().collect();
        let los_cos: Vec<f64> = angles.iter().map(|a| a.cos()).collect();
        let result = beamspace_transform(&geom, &refs, &los_cos)?;
        let mut columns = vec!["beam_index".into(), "grid_cos".into()];
        for u in 0..ranges.len() {
            columns.push(format!("magnitude_user{}", u + 1));
        }
        let mut t = ResultTable::new(columns);
        for b in 0..n {
            let mut row = vec![b as f64, result.grid[b]];
            for transformed in &result.transformed {
                row.push(transformed[b].norm());
            }
            t.push_row(row);
        }
        for (u, (&dom, transformed)) in result
            .dominant_index
            .iter()
            .zip(&result.transformed)
            .enumerate()
        {
            let total: f64 = transformed.iter().map(|z| z.norm_sqr()).sum();
            let frac = transformed[dom].norm_sqr() / total;
            t.meta(&format!("dominant_index_user{}", u + 1), dom.to_string());
            t.meta(
                &format!("dominant_energy_fraction_user{}", u + 1),
                format!("{frac:.16e}"),
            );
        }
        Ok(t)
    }))
}

fn nearfield_analog_snr(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let spacing = cfg.f64("geometry.spacing_m");
    let wavelength = cfg.f64("geometry.wavelength_m");
    let range = cfg.f64("link.range_m");
    let power = cfg.power("link.power");
    let beta_r = cfg.f64_or("link.beta_r_linear", 1.0);
    let noise = cfg.power("link.noise_power");
    let grid = odd_grid(cfg, "sweep.n_grid");
    let spacing = positive(cfg, "'geometry.spacing_m'", spacing?)?;
    let wavelength = positive(cfg, "'geometry.wavelength_m'", wavelength?)?;
    let range = positive(cfg, "'link.range_m'", range?)?;
    let power = positive(cfg, "'link.power'", power?)?;
    let beta_r = positive(cfg, "'link.beta_r_linear'", beta_r?)?;
    let noise = positive(cfg, "'link.noise_power'", noise?)?;
    let grid = grid?;
    Some(Box::new(move |_seed: u64| {
        let rows: Vec<CoreResult<Vec<f64>>> = grid
            .par_iter()
            .map(|&n| {
                let geom = ArrayGeometry::new(n, spacing, wavelength)?;
                let direct = analog_snr_direct(&geom, range, power, beta_r, noise)?;
                let printed =
                    analog_snr_closed(&geom, range, power, beta_r, noise, ClosedVariant::Printed)?;
                let squared =
                    analog_snr_closed(&geom, range, power, beta_r, noise, ClosedVariant::Squared)?;
                Ok(vec![n as f64, direct, printed, squared])
            })
            .collect();
        let mut t = ResultTable::new(vec![
            "n_antennas".into(),
            "snr_direct".into(),
            "snr_closed_printed".into(),
            "snr_closed_squared".into(),
        ]);
        for row in rows {
            t.push_row(row?);
        }
        let n_rad = wavelength.cbrt() / spacing * (range / 0.62).powf(2.0 / 3.0);
        t.meta("n_rad", format!("{n_rad:.16e}"));
        t.meta("quoted_n_star", format!("{:.16e}", 3.728 * range / spacing));
        Ok(t)
    }))
}

fn nearfield_hb_sdma(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let spacing = cfg.f64("geometry.spacing_m");
    let wavelength = cfg.f64("geometry.wavelength_m");
    let ranges = cfg.arr_f64("users.ranges_m");
    let angles = match &ranges {
        Some(r) => angles_arr(cfg, "users.angles", Some(r.len())),
        None => angles_arr(cfg, "users.angles", None),
    };
    // Normalized link budget p·β_r/σ² with β_r = σ² = 1.
    let snr = cfg.power("link.snr");
    let grid = odd_grid(cfg, "sweep.n_grid");
    let spacing = positive(cfg, "'geometry.spacing_m'", spacing?)?;
    let wavelength = positive(cfg, "'geometry.wavelength_m'", wavelength?)?;
    let ranges = ranges?;
    let angles = angles?;
    if ranges.is_empty() {
        cfg.error("'users.ranges_m' must not be empty");
        return None;
    }
    let snr = positive(cfg, "'link.snr'", snr?)?;
    let grid = grid?;
    Some(Box::new(move |_seed: u64| {
        let positions: CoreResult<Vec<Position>> = ranges
            .iter()
            .zip(&angles)
            .map(|(&r, &a)| Position::new(r, a))
            .collect();
        let positions = positions?;
        let noises = vec![1.0; positions.len()];
        let rows: Vec<CoreResult<Vec<f64>>> = grid
            .par_iter()
            .map(|&n| {
                let geom = ArrayGeometry::new(n, spacing, wavelength)?;
                let near = nearfield_hb_sdma_sumrate(
                    &positions,
                    &geom,
                    snr,
                    1.0,
                    &noises,
                    HbChannelMode::NearfieldExact,
                )?;
                let far = nearfield_hb_sdma_sumrate(
                    &positions,
                    &geom,
                    snr,
                    1.0,
                    &noises,
                    HbChannelMode::Farfield,
                )?;
                Ok(vec![n as f64, near, far])
            })
            .collect();
        let mut t = ResultTable::new(vec![
            "n_antennas".into(),
            "sum_rate_nearfield_bits".into(),
            "sum_rate_farfield_bits".into(),
        ]);
        for row in rows {
            t.push_row(row?);
        }
        Ok(t)
    }))
}

fn cap_sinr_exp(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let length = cfg.f64("aperture.length_m");
    let wavelength = cfg.f64("aperture.wavelength_m");
    let resolution = cfg.usize_or("aperture.resolution", 64);
    let ranges = cfg.arr_f64("users.ranges_m");
    let k = ranges.as_ref().map(Vec::len);
    let angles = angles_arr(cfg, "users.angles", k);
    let shares = cfg
        .arr_f64("users.power_shares_linear")
        .and_then(|v| check_len(cfg, "users.power_shares_linear", &v, k));
    let noises = cfg
        .arr_f64("users.noise_powers_linear")
        .and_then(|v| check_len(cfg, "users.noise_powers_linear", &v, k));
    let length = positive(cfg, "'aperture.length_m'", length?)?;
    let wavelength = positive(cfg, "'aperture.wavelength_m'", wavelength?)?;
    let resolution = resolution?;
    let ranges = ranges?;
    let angles = angles?;
    let shares = shares?;
    let noises = noises?;
    if ranges.is_empty() {
        cfg.error("'users.ranges_m' must not be empty");
        return None;
    }
    Some(Box::new(move |_seed: u64| {
        let aperture = CapAperture::new(length, resolution, wavelength)?;
        let mut currents = Vec::with_capacity(ranges.len());
        for ((&r, &a), &share) in ranges.iter().zip(&angles).zip(&shares) {
            currents.push(cap_matched_current(Position::new(r, a)?, &aperture, share)?);
        }
        let positions: CoreResult<Vec<Position>> = ranges
            .iter()
            .zip(&angles)
            .map(|(&r, &a)| Position::new(r, a))
            .collect();
        let budget: f64 = shares.iter().sum();
        let sinrs = cap_sinr(&aperture, &currents, &positions?, &noises, budget)?;
        let mut t = ResultTable::new(vec![
            "user".into(),
            "sinr_linear".into(),
            "sinr_db".into(),
        ]);
        for (u, &s) in sinrs.iter().enumerate() {
            t.push_row(vec![u as f64, s, 10.0 * s.log10()]);
        }
        Ok(t)
    }))
}

fn isac_uplink_region(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let n_rx = cfg.usize("geometry.n_rx_antennas");
    let n_tx = odd_n(cfg, "geometry.n_tx_antennas");
    let spacing = cfg.f64("geometry.spacing_m");
    let wavelength = cfg.f64("geometry.wavelength_m");
    let powers = cfg.arr_f64("users.powers_linear");
    let pulse_len = cfg.usize("scene.pulse_len");
    let probing_power = cfg.power("scene.probing_power");
    let target_angles = angles_arr(cfg, "target.angles", None);
    let variances = cfg.arr_f64("target.variances_linear");
    let grid_points = cfg.usize_or("sweep.grid_points", 21);
    let n_rx = n_rx?;
    let n_tx = n_tx?;
    let spacing = positive(cfg, "'geometry.spacing_m'", spacing?)?;
    let wavelength = positive(cfg, "'geometry.wavelength_m'", wavelength?)?;
    let powers = powers?;
    if powers.is_empty() || powers.iter().any(|&p| p < 0.0) {
        cfg.error("'users.powers_linear' must be a nonempty array of nonnegative powers");
        return None;
    }
    let pulse_len = pulse_len?;
    let probing_power = positive(cfg, "'scene.probing_power'", probing_power?)?;
    let target_angles = target_angles?;
    let variances = check_len(
        cfg,
        "target.variances_linear",
        &variances?,
        Some(target_angles.len()),
    )?;
    let grid_points = grid_points?;
    if grid_points < 2 || pulse_len == 0 || n_rx == 0 {
        cfg.error("'sweep.grid_points' must be ≥ 2 and 'scene.pulse_len'/'geometry.n_rx_antennas' positive");
        return None;
    }
    Some(Box::new(move |seed: u64| {
        let tx_geom = ArrayGeometry::new(n_tx, spacing, wavelength)?;
        let r = steering_correlation(&tx_geom, &target_angles, &variances);
        let scale = (probing_power / n_tx as f64).sqrt();
        let probing = random_channel_matrix(n_tx, pulse_len, seed, 1).map(|z| z * scale);
        let scene = SensingScene::new(r, pulse_len, n_rx, probing)?;
        let channels: Vec<Vec<Complex64>> = (0..powers.len())
            .map(|u| {
                let mut rng = keyed_rng(seed, tag::EXPERIMENT, 2, u as u64);
                standard_complex_vec(&mut rng, n_rx)
            })
            .collect();
        let instance = UplinkIsacInstance {
            channels,
            powers: powers.clone(),
            scene,
        };
        let grid = unit_grid(grid_points);
        let mut t = ResultTable::new(vec![
            "label_code".into(),
            "parameter".into(),
            "sr_bits".into(),
            "cr_bits".into(),
        ]);
        for point in instance.region(&grid)? {
            push_point(&mut t, &point);
        }
        for point in instance.osac(&grid)? {
            push_point(&mut t, &point);
        }
        Ok(t)
    }))
}

fn isac_su_miso_region(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let n_tx = odd_n(cfg, "geometry.n_tx_antennas");
    let spacing = cfg.f64("geometry.spacing_m");
    let wavelength = cfg.f64("geometry.wavelength_m");
    let theta = cfg.angle("target.angle");
    let varsigma_sq = cfg.f64("target.variance_linear");
    let power = cfg.power("link.power");
    let n_rx = cfg.usize("link.n_rx_antennas");
    let pulse_len = cfg.usize("link.pulse_len");
    let alpha_points = cfg.usize_or("sweep.alpha_points", 11);
    let n_tx = n_tx?;
    let spacing = positive(cfg, "'geometry.spacing_m'", spacing?)?;
    let wavelength = positive(cfg, "'geometry.wavelength_m'", wavelength?)?;
    let theta = theta?;
    let varsigma_sq = positive(cfg, "'target.variance_linear'", varsigma_sq?)?;
    let power = positive(cfg, "'link.power'", power?)?;
    let n_rx = n_rx?;
    let pulse_len = pulse_len?;
    let alpha_points = alpha_points?;
    if alpha_points < 2 || n_rx == 0 || pulse_len == 0 {
        cfg.error("'sweep.alpha_points' must be ≥ 2 and 'link.n_rx_antennas'/'link.pulse_len' positive");
        return None;
    }
    Some(Box::new(move |seed: u64| {
        let mut rng = keyed_rng(seed, tag::EXPERIMENT, 0, 0);
        let params = SuMisoIsacParams {
            h_c: standard_complex_vec(&mut rng, n_tx),
            theta_target: theta,
            varsigma_sq,
            power,
            n_rx,
            pulse_len,
            tx_geometry: ArrayGeometry::new(n_tx, spacing, wavelength)?,
        };
        let region = dl_su_miso_isac(&params, &unit_grid(alpha_points))?;
        let mut t = ResultTable::new(vec![
            "label_code".into(),
            "alpha".into(),
            "sr_bits".into(),
            "cr_bits".into(),
        ]);
        push_point(&mut t, &region.comm_centric);
        push_point(&mut t, &region.sensing_centric);
        for point in &region.pareto {
            push_point(&mut t, point);
        }
        Ok(t)
    }))
}

fn isac_cluster_region(cfg: &Cfg) -> Option<Box<dyn Runnable>> {
    let n_tx = odd_n(cfg, "geometry.n_tx_antennas");
    let spacing = cfg.f64("geometry.spacing_m");
    let wavelength = cfg.f64("geometry.wavelength_m");
    let cluster_sizes = cfg.arr_usize("users.cluster_sizes");
    let n_u = cfg.usize("users.n_user_antennas");
    let noise = cfg.power("users.noise_power");
    let power = cfg.power("link.power");
    let pulse_len = cfg.usize("link.pulse_len");
    let n_rx = cfg.usize("link.n_rx_antennas");
    let target_angles = angles_arr(cfg, "target.angles", None);
    let variances = cfg.arr_f64("target.variances_linear");
    let alpha_points = cfg.usize_or("sweep.alpha_points", 11);
    let osac_points = cfg.usize_or("sweep.osac_points", 11);
    let n_tx = n_tx?;
    let spacing = positive(cfg, "'geometry.spacing_m'", spacing?)?;
    let wavelength = positive(cfg, "'geometry.wavelength_m'", wavelength?)?;
    let cluster_sizes = cluster_sizes?;
    if cluster_sizes.is_empty() || cluster_sizes.iter().any(|&s| s == 0) {
        cfg.error("'users.cluster_sizes' must be a nonempty array of positive sizes");
        return None;
    }
    let n_u = n_u?;
    let noise = positive(cfg, "'users.noise_power'", noise?)?;
    let power = positive(cfg, "'link.power'", power?)?;
    let pulse_len = pulse_len?;
    let n_rx = n_rx?;
    let target_angles = target_angles?;
    let variances = check_len(
        cfg,
        "target.variances_linear",
        &variances?,
        Some(target_angles.len()),
    )?;
    let alpha_points = alpha_points?;
    let osac_points = osac_points?;
    if alpha_points < 2 || osac_points < 2 || pulse_len == 0 || n_rx == 0 || n_u == 0 {
        cfg.error("grid points must be ≥ 2 and antenna/pulse counts positive");
        return None;
    }
    if cluster_sizes.len() > n_tx || n_u < cluster_sizes.len() {
        cfg.error(format!(
            "zero-forcing feasibility requires cluster count ≤ N_t and N_U ≥ cluster count \
             (got {} clusters, N_t = {n_tx}, N_U = {n_u})",
            cluster_sizes.len()
        ));
        return None;
    }
    Some(Box::new(move |seed: u64| {
        let tx_geom = ArrayGeometry::new(n_tx, spacing, wavelength)?;
        let r = steering_correlation(&tx_geom, &target_angles, &variances);
        let mut unit = 0u64;
        let user_channels: Vec<Vec<DMatrix<Complex64>>> = cluster_sizes
            .iter()
            .map(|&size| {
                (0..size)
                    .map(|_| {
                        unit += 1;
                        random_channel_matrix(n_tx, n_u, seed, unit)
                    })
                    .collect()
            })
            .collect();
        let instance = ClusterIsacInstance {
            user_channels,
            r,
            power,
            pulse_len,
            n_rx,
            noise,
        };
        let region = instance.region(&unit_grid(alpha_points))?;
        let mut t = ResultTable::new(vec![
            "label_code".into(),
            "parameter".into(),
            "sr_bits".into(),
            "cr_bits".into(),
        ]);
        push_point(&mut t, &region.comm_centric.point);
        push_point(&mut t, &region.sensing_centric.point);
        for point in &region.pareto {
            push_point(&mut t, point);
        }
        for point in instance.osac(&unit_grid(osac_points))? {
            push_point(&mut t, &point);
        }
        Ok(t)
    }))
}
