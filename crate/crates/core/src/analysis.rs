//! Numerical evaluation of the balance-energy bounds: spectral constants of
//! the nearest-neighbour communication topology, the decay/forcing
//! coefficients of the energy differential inequality, the resulting
//! envelope on sqrt(H), the sweep-time-error bound, and the
//! collision-avoidance threshold. Also the trajectory verdict that checks a
//! recorded run against every inequality.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::partition::PartitionHistory;
use crate::region::{RegionError, RegionSpec};
use crate::sweep::SweepConfig;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("invalid analysis input '{name}': {reason}")]
    Invalid { name: &'static str, reason: String },
}

/// Balance energy: sum of squared deviations of the masses from their mean.
pub fn energy(m: &[f64]) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let mean = m.iter().sum::<f64>() / m.len() as f64;
    m.iter().map(|&v| (v - mean) * (v - mean)).sum()
}

// ---------------------------------------------------------------------------
// Spectral constants
// ---------------------------------------------------------------------------

/// Extremal nonzero eigenvalues of the quadratic form
/// `sum_{i=1}^{n-1} (z_{i+1} - z_i)^2`, the path-graph Laplacian of the
/// nearest-neighbour topology.
#[derive(Debug, Clone, Copy)]
pub struct SpectralConstants {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n: usize,
}

/// Builds the path Laplacian for `n` agents and eigen-decomposes it
/// numerically, returning the smallest nonzero and the largest eigenvalue.
pub fn spectral_constants(n: usize) -> Result<SpectralConstants, AnalysisError> {
    if n < 2 {
        return Err(AnalysisError::Invalid {
            name: "n",
            reason: format!("need n >= 2, got {n}"),
        });
    }
    let mut mat = DMatrix::<f64>::zeros(n, n);
    for i in 0..n - 1 {
        // (z_{i+1} - z_i)^2 contributes [1, -1; -1, 1] on rows/cols (i, i+1).
        mat[(i, i)] += 1.0;
        mat[(i + 1, i + 1)] += 1.0;
        mat[(i, i + 1)] -= 1.0;
        mat[(i + 1, i)] -= 1.0;
    }
    let eigen = mat.symmetric_eigen();
    let mut values: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lambda_max = *values.last().unwrap();
    let zero_cut = 1e-9 * lambda_max.max(1.0);
    let lambda_min = values
        .iter()
        .copied()
        .find(|&v| v > zero_cut)
        .ok_or_else(|| AnalysisError::Invalid {
            name: "spectrum",
            reason: "no nonzero eigenvalue found".to_string(),
        })?;
    Ok(SpectralConstants {
        lambda_min,
        lambda_max,
        n,
    })
}

// ---------------------------------------------------------------------------
// Differential-inequality coefficients
// ---------------------------------------------------------------------------

/// Constant decay coefficient of the energy inequality:
/// `kappa * rho_lower * epsilon * lambda_min / n`.
pub fn xi_value(kappa: f64, rho_lower: f64, epsilon: f64, lambda_min: f64, n: usize) -> f64 {
    kappa * rho_lower * epsilon * lambda_min / n as f64
}

/// Time-varying forcing coefficient:
/// `rho_upper * (2 v eps max(|g_a'|, |g_b'|) + width) * sqrt((n-1)/n)`,
/// slopes and width taken at height `v t + eps`.
pub fn zeta_value(
    region: &RegionSpec,
    v: f64,
    epsilon: f64,
    rho_upper: f64,
    n: usize,
    t: f64,
) -> Result<f64, RegionError> {
    let y = v * t + epsilon;
    let h = crate::region::SLOPE_STEP;
    let slope = region
        .left
        .slope_at(y, h)?
        .abs()
        .max(region.right.slope_at(y, h)?.abs());
    let width = region.right.value_at(y)? - region.left.value_at(y)?;
    let frac = ((n as f64 - 1.0) / n as f64).sqrt();
    Ok(rho_upper * (2.0 * v * epsilon * slope + width) * frac)
}

/// Forcing coefficient of the energy inequality as assembled directly from
/// the dH/dt expansion: `dH/dt = 2 sum z_i (bar flux)_i + 2 v sum z_i
/// (row deviation)_i` keeps a factor 2 on the flux estimate and 2 v on the
/// row estimate, giving
/// `rho_upper * (4 v eps max|g'| + 2 v width) * sqrt((n-1)/n)`.
/// [`zeta_value`] is the compact form the time-error and collision bounds
/// quote; realized trajectories obey this one.
pub fn envelope_forcing_value(
    region: &RegionSpec,
    v: f64,
    epsilon: f64,
    rho_upper: f64,
    n: usize,
    t: f64,
) -> Result<f64, RegionError> {
    let y = v * t + epsilon;
    let h = crate::region::SLOPE_STEP;
    let slope = region
        .left
        .slope_at(y, h)?
        .abs()
        .max(region.right.slope_at(y, h)?.abs());
    let width = region.right.value_at(y)? - region.left.value_at(y)?;
    let frac = ((n as f64 - 1.0) / n as f64).sqrt();
    Ok(rho_upper * (4.0 * v * epsilon * slope + 2.0 * v * width) * frac)
}

/// Decay coefficient matching [`envelope_forcing_value`]: twice the
/// compact constant from [`xi_value`].
pub fn envelope_decay_value(xi: f64) -> f64 {
    2.0 * xi
}

// ---------------------------------------------------------------------------
// Envelope on sqrt(H)
// ---------------------------------------------------------------------------

/// Envelope on `sqrt(H)` from sampled decay/forcing coefficients, evaluated
/// at every grid time. All time integrals use the trapezoid rule on `ts`.
pub fn iss_envelope_samples(h0: f64, ts: &[f64], xi: &[f64], zeta: &[f64]) -> Vec<f64> {
    assert_eq!(ts.len(), xi.len());
    assert_eq!(ts.len(), zeta.len());
    let s0 = h0.max(0.0).sqrt();
    let mut out = Vec::with_capacity(ts.len());
    if ts.is_empty() {
        return out;
    }
    // Cumulative integral of xi and of exp(Xi/2) * zeta.
    let mut big_xi: f64 = 0.0;
    let mut weighted: f64 = 0.0;
    let mut prev_t = ts[0];
    let mut prev_xi = xi[0];
    let mut prev_w = (big_xi / 2.0).exp() * zeta[0];
    out.push(s0);
    for j in 1..ts.len() {
        let dt = ts[j] - prev_t;
        big_xi += 0.5 * (prev_xi + xi[j]) * dt;
        let w = (big_xi / 2.0).exp() * zeta[j];
        weighted += 0.5 * (prev_w + w) * dt;
        let damp = (-big_xi / 2.0).exp();
        out.push(damp * (s0 + 0.5 * weighted));
        prev_t = ts[j];
        prev_xi = xi[j];
        prev_w = w;
    }
    out
}

/// Envelope with a constant decay coefficient and a forcing function.
pub fn iss_envelope<F: Fn(f64) -> f64>(h0: f64, ts: &[f64], xi: f64, zeta: F) -> Vec<f64> {
    let xis = vec![xi; ts.len()];
    let zetas: Vec<f64> = ts.iter().map(|&t| zeta(t)).collect();
    iss_envelope_samples(h0, ts, &xis, &zetas)
}

// ---------------------------------------------------------------------------
// Bounds
// ---------------------------------------------------------------------------

/// Scalar parameters feeding the closed-form bounds.
#[derive(Debug, Clone, Copy)]
pub struct BoundParams {
    pub n: usize,
    pub kappa: f64,
    pub epsilon: f64,
    pub v: f64,
    pub sigma: f64,
    pub rho_lower: f64,
    pub rho_upper: f64,
}

impl From<&SweepConfig> for BoundParams {
    fn from(cfg: &SweepConfig) -> Self {
        Self {
            n: cfg.partition.n,
            kappa: cfg.partition.kappa,
            epsilon: cfg.partition.epsilon,
            v: cfg.partition.v,
            sigma: cfg.sigma,
            rho_lower: cfg.density.rho_lower,
            rho_upper: cfg.density.rho_upper,
        }
    }
}

const ZETA_SAMPLES_PER_INTERVAL: usize = 200;

fn zeta_max_on(
    params: &BoundParams,
    region: &RegionSpec,
    t0: f64,
    t1: f64,
    samples: usize,
) -> Result<f64, RegionError> {
    let mut best = f64::NEG_INFINITY;
    for k in 0..=samples {
        let t = t0 + (t1 - t0) * k as f64 / samples as f64;
        best = best.max(zeta_value(
            region,
            params.v,
            params.epsilon,
            params.rho_upper,
            params.n,
            t,
        )?);
    }
    Ok(best)
}

/// Upper bound on the sweep time error, evaluated with `q` subintervals of
/// `[0, T_p]` and dense max-sampling of the forcing coefficient on each.
pub fn delta_t_bound(
    params: &BoundParams,
    region: &RegionSpec,
    spectral: &SpectralConstants,
    h0: f64,
    q: u32,
) -> Result<f64, AnalysisError> {
    if q == 0 {
        return Err(AnalysisError::Invalid {
            name: "q",
            reason: "must be >= 1".to_string(),
        });
    }
    let n = params.n as f64;
    let t_p = (region.length_l - params.epsilon) / params.v;
    let decay = params.kappa * params.rho_lower * params.epsilon * spectral.lambda_min;
    let mut sum = 0.0;
    for i in 1..=q {
        let t0 = t_p * (i - 1) as f64 / q as f64;
        let t1 = t_p * i as f64 / q as f64;
        let zmax = zeta_max_on(params, region, t0, t1, ZETA_SAMPLES_PER_INTERVAL)?;
        let w = (-decay * (q - i) as f64 * t_p / (2.0 * n * q as f64)).exp();
        sum += w * zmax;
    }
    let head = h0.max(0.0).sqrt() * (-decay * t_p / (2.0 * n)).exp();
    Ok(((n - 1.0) / n).sqrt() / params.sigma * (head + t_p / (2.0 * q as f64) * sum))
}

/// Time-error bound assembled with the derivation-level coefficients
/// (doubled decay, [`envelope_forcing_value`] forcing): the inequality that
/// realized trajectories actually obey. [`delta_t_bound`] keeps the compact
/// closed form, which simulations can exceed.
pub fn corrected_delta_t_bound(
    params: &BoundParams,
    region: &RegionSpec,
    spectral: &SpectralConstants,
    h0: f64,
    q: u32,
) -> Result<f64, AnalysisError> {
    if q == 0 {
        return Err(AnalysisError::Invalid {
            name: "q",
            reason: "must be >= 1".to_string(),
        });
    }
    let n = params.n as f64;
    let t_p = (region.length_l - params.epsilon) / params.v;
    let decay = 2.0 * params.kappa * params.rho_lower * params.epsilon * spectral.lambda_min;
    let mut sum = 0.0;
    for i in 1..=q {
        let t0 = t_p * (i - 1) as f64 / q as f64;
        let t1 = t_p * i as f64 / q as f64;
        let mut fmax = f64::NEG_INFINITY;
        for k in 0..=ZETA_SAMPLES_PER_INTERVAL {
            let t = t0 + (t1 - t0) * k as f64 / ZETA_SAMPLES_PER_INTERVAL as f64;
            fmax = fmax.max(envelope_forcing_value(
                region,
                params.v,
                params.epsilon,
                params.rho_upper,
                params.n,
                t,
            )?);
        }
        let w = (-decay * (q - i) as f64 * t_p / (2.0 * n * q as f64)).exp();
        sum += w * fmax;
    }
    let head = h0.max(0.0).sqrt() * (-decay * t_p / (2.0 * n)).exp();
    Ok(((n - 1.0) / n).sqrt() / params.sigma * (head + t_p / (2.0 * q as f64) * sum))
}

/// Specialization of [`delta_t_bound`] to a rectangle of width `l_a` and
/// height `l_b`, where the forcing coefficient is constant.
pub fn rect_delta_t_bound(
    params: &BoundParams,
    l_a: f64,
    l_b: f64,
    spectral: &SpectralConstants,
    h0: f64,
    q: u32,
) -> f64 {
    let n = params.n as f64;
    let t_p = (l_b - params.epsilon) / params.v;
    let decay = params.kappa * params.rho_lower * params.epsilon * spectral.lambda_min;
    let head =
        (((n - 1.0) * h0.max(0.0) / n).sqrt() / params.sigma) * (-decay * t_p / (2.0 * n)).exp();
    let mut sum = 0.0;
    for i in 1..=q {
        sum += (-decay * (q - i) as f64 * t_p / (2.0 * n * q as f64)).exp();
    }
    head + params.rho_upper * (n - 1.0) * l_a * t_p / (2.0 * q as f64 * n * params.sigma) * sum
}

/// Initial-spacing threshold that guarantees collision-free bars:
/// `kappa T_p sqrt(lambda_max) (2 sqrt(H0) + T_p max zeta)`.
pub fn collision_threshold(
    params: &BoundParams,
    region: &RegionSpec,
    spectral: &SpectralConstants,
    h0: f64,
) -> Result<f64, AnalysisError> {
    let t_p = (region.length_l - params.epsilon) / params.v;
    let zmax = zeta_max_on(params, region, 0.0, t_p, 2000)?;
    Ok(params.kappa
        * t_p
        * spectral.lambda_max.sqrt()
        * (2.0 * h0.max(0.0).sqrt() + t_p * zmax))
}

// ---------------------------------------------------------------------------
// Bound report
// ---------------------------------------------------------------------------

/// All theoretical quantities evaluated for one configuration, sampled on a
/// shared time grid.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub n: usize,
    pub q: u32,
    pub h0: f64,
    pub xi: f64,
    pub spectral: SpectralConstants,
    /// Compact forcing coefficient sampled on the report grid.
    pub zeta_samples: Vec<(f64, f64)>,
    /// Envelope on sqrt(H) over the same grid, computed from the
    /// derivation-level coefficients (see [`envelope_forcing_value`]).
    pub iss_envelope: Vec<(f64, f64)>,
    pub delta_t_bound: f64,
    /// Same bound with the derivation-level coefficients; trajectories are
    /// guaranteed to respect this one.
    pub delta_t_bound_corrected: f64,
    /// Rectangle specialization, present when both boundaries are constant.
    pub rect_bound: Option<f64>,
    pub collision_threshold: f64,
    /// Multiplicative slack allowed when comparing sqrt(H) to the envelope.
    pub envelope_slack: f64,
}

/// Evaluates every bound for the given parameters on the time grid `ts`
/// (typically the recorded step times of a run, restricted to the partition
/// phase).
pub fn build_report(
    params: &BoundParams,
    region: &RegionSpec,
    ts: &[f64],
    h0: f64,
    q: u32,
    envelope_slack: f64,
) -> Result<BoundReport, AnalysisError> {
    let spectral = spectral_constants(params.n)?;
    let xi = xi_value(
        params.kappa,
        params.rho_lower,
        params.epsilon,
        spectral.lambda_min,
        params.n,
    );
    let mut zeta = Vec::with_capacity(ts.len());
    let mut forcing = Vec::with_capacity(ts.len());
    for &t in ts {
        zeta.push(zeta_value(
            region,
            params.v,
            params.epsilon,
            params.rho_upper,
            params.n,
            t,
        )?);
        forcing.push(envelope_forcing_value(
            region,
            params.v,
            params.epsilon,
            params.rho_upper,
            params.n,
            t,
        )?);
    }
    let decay = vec![envelope_decay_value(xi); ts.len()];
    let env = iss_envelope_samples(h0, ts, &decay, &forcing);
    let bound = delta_t_bound(params, region, &spectral, h0, q)?;
    let corrected = corrected_delta_t_bound(params, region, &spectral, h0, q)?;
    let rect_bound = if region.is_rectangular() {
        let l_a = region.right.value_at(0.0)? - region.left.value_at(0.0)?;
        Some(rect_delta_t_bound(
            params,
            l_a,
            region.length_l,
            &spectral,
            h0,
            q,
        ))
    } else {
        None
    };
    let threshold = collision_threshold(params, region, &spectral, h0)?;
    Ok(BoundReport {
        n: params.n,
        q,
        h0,
        xi,
        spectral,
        zeta_samples: ts.iter().copied().zip(zeta).collect(),
        iss_envelope: ts.iter().copied().zip(env).collect(),
        delta_t_bound: bound,
        delta_t_bound_corrected: corrected,
        rect_bound,
        collision_threshold: threshold,
        envelope_slack,
    })
}

// ---------------------------------------------------------------------------
// Trajectory verdict
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub pass: bool,
    /// Time and description of the first violation.
    pub first_violation: Option<(f64, String)>,
}

impl Check {
    fn ok() -> Self {
        Self {
            pass: true,
            first_violation: None,
        }
    }

    fn fail(&mut self, t: f64, detail: String) {
        if self.pass {
            self.pass = false;
            self.first_violation = Some((t, detail));
        }
    }
}

/// Outcome of checking one recorded trajectory against the proved
/// inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictReport {
    /// sqrt(H) stays below the envelope (within the mode's slack).
    pub envelope: Check,
    /// Spectral sandwich on the neighbour mass differences.
    pub sandwich: Check,
    /// Deviation norm bounded by sqrt(n(n-1)) times the mean mass.
    pub norm_bound: Check,
    /// Max deviation bounded by sqrt((n-1)/n) times the deviation norm.
    pub deviation_bound: Check,
    /// Bars keep strictly positive spacing.
    pub spacing: Check,
}

impl VerdictReport {
    pub fn all_pass(&self) -> bool {
        self.envelope.pass
            && self.sandwich.pass
            && self.norm_bound.pass
            && self.deviation_bound.pass
            && self.spacing.pass
    }
}

/// Checks a recorded history against the report's envelope and the exact
/// algebraic inequalities. Records in the sweep phase (t beyond the envelope
/// grid) are checked for spacing only.
pub fn verify_trajectory(history: &PartitionHistory, report: &BoundReport) -> VerdictReport {
    let n = history.n as f64;
    // Small relative slack for the exact inequalities: they are algebraic
    // identities, violated only by floating-point noise.
    let fp = 1e-9;

    let mut envelope = Check::ok();
    let mut sandwich = Check::ok();
    let mut norm_bound = Check::ok();
    let mut deviation_bound = Check::ok();
    let mut spacing = Check::ok();

    for rec in &history.records {
        let sqrt_h = rec.energy.max(0.0).sqrt();

        // (a) envelope, on the partition-phase grid
        if let Ok(idx) = report
            .iss_envelope
            .binary_search_by(|(t, _)| t.partial_cmp(&rec.t).unwrap())
        {
            let env = report.iss_envelope[idx].1;
            if sqrt_h > env * report.envelope_slack + 1e-12 {
                envelope.fail(
                    rec.t,
                    format!("sqrt(H) = {sqrt_h} above envelope {env} * {}", report.envelope_slack),
                );
            }
        }

        // (b) spectral sandwich
        let diff_sq: f64 = rec.m.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
        let lo = report.spectral.lambda_min / n * rec.energy;
        let hi = report.spectral.lambda_max * rec.energy;
        let scale = rec.energy.abs().max(1e-300);
        if diff_sq < lo - fp * scale || diff_sq > hi + fp * scale {
            sandwich.fail(
                rec.t,
                format!("difference form {diff_sq} outside [{lo}, {hi}]"),
            );
        }

        // (c) norm versus mean
        if sqrt_h > (n * (n - 1.0)).sqrt() * rec.mean_mass + fp * rec.mean_mass.abs().max(1e-300) {
            norm_bound.fail(
                rec.t,
                format!(
                    "deviation norm {sqrt_h} above sqrt(n(n-1)) * mean = {}",
                    (n * (n - 1.0)).sqrt() * rec.mean_mass
                ),
            );
        }

        // (d) max deviation versus norm
        let max_dev = rec
            .m
            .iter()
            .map(|&v| (v - rec.mean_mass).abs())
            .fold(0.0f64, f64::max);
        let cap = ((n - 1.0) / n).sqrt() * sqrt_h;
        if max_dev > cap + fp * sqrt_h.max(1e-300) {
            deviation_bound.fail(rec.t, format!("max deviation {max_dev} above {cap}"));
        }

        // (e) spacing
        for i in 1..rec.x.len() {
            if rec.x[i] <= rec.x[i - 1] {
                spacing.fail(
                    rec.t,
                    format!("bar {i} at {} reached bar {} at {}", rec.x[i], i - 1, rec.x[i - 1]),
                );
                break;
            }
        }
    }

    VerdictReport {
        envelope,
        sandwich,
        norm_bound,
        deviation_bound,
        spacing,
    }
}
