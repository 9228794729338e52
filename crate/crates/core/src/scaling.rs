//! Regime classification, one-shot width recursions and closed-form shot
//! counts for shot-by-shot estimation, plus least-squares refits of the
//! constants they depend on.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Empirical constants of the two asymptotic laws and the regime split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    /// Gaussian law `Delta_out = c_G sqrt(Delta_in / N)`.
    #[serde(rename = "c_G")]
    pub c_g: f64,
    /// N00N law `Delta_out - Delta_in = -c_N N^2 Delta_in^3`.
    #[serde(rename = "c_N")]
    pub c_n: f64,
    /// Best-fit Gaussian width `rho = c_rho Delta / N`.
    pub c_rho: f64,
    /// Value of `N Delta` separating the two regimes.
    pub boundary: f64,
}

impl Default for ScalingConstants {
    fn default() -> Self {
        Self {
            c_g: 1.27,
            c_n: 0.04,
            c_rho: 0.16,
            boundary: 5.0,
        }
    }
}

impl ScalingConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_G", self.c_g),
            ("c_N", self.c_n),
            ("c_rho", self.c_rho),
            ("boundary", self.boundary),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Width at which photon number `n` crosses the regime boundary.
    pub fn boundary_delta(&self, photon_count: usize) -> f64 {
        self.boundary / photon_count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Regime {
    Noon,
    Gaussian,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Noon => "NOON",
            Regime::Gaussian => "GAUSSIAN",
        })
    }
}

fn check_width(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return domain(format!("phase width must be positive and finite, got {delta}"));
    }
    Ok(())
}

pub fn classify_regime(photon_count: usize, delta: f64) -> Result<Regime> {
    classify_regime_with(photon_count, delta, &ScalingConstants::default())
}

/// `NOON` iff `N Delta < boundary`; ties go to `GAUSSIAN`.
pub fn classify_regime_with(
    photon_count: usize,
    delta: f64,
    constants: &ScalingConstants,
) -> Result<Regime> {
    match photon_count {
        0 => return domain("regimes need N >= 1"),
        1 => {
            return Err(Error::Unsupported(
                "the N00N/Gaussian split does not exist for a single photon".into(),
            ))
        }
        _ => {}
    }
    check_width(delta)?;
    Ok(if photon_count as f64 * delta < constants.boundary {
        Regime::Noon
    } else {
        Regime::Gaussian
    })
}

pub fn gaussian_next_delta(photon_count: usize, delta_in: f64, constants: &ScalingConstants) -> f64 {
    constants.c_g * (delta_in / photon_count as f64).sqrt()
}

pub fn noon_next_delta(photon_count: usize, delta_in: f64, constants: &ScalingConstants) -> f64 {
    let n = photon_count as f64;
    delta_in - constants.c_n * n * n * delta_in.powi(3)
}

/// `ceil(ln(ln(N Di / c_G^2) / ln(N Df / c_G^2)) / ln 2)`.
pub fn shots_gaussian(
    photon_count: usize,
    delta_i: f64,
    delta_f: f64,
    constants: &ScalingConstants,
) -> Result<u32> {
    check_width(delta_i)?;
    check_width(delta_f)?;
    if photon_count == 0 {
        return domain("shot counts need N >= 1");
    }
    let n = photon_count as f64;
    let floor = constants.c_g * constants.c_g;
    if n * delta_f <= floor {
        return domain(format!(
            "Gaussian shot formula needs N * Delta_f > c_G^2 = {floor:.4}, got {:.4}",
            n * delta_f
        ));
    }
    if delta_f > delta_i {
        return domain("target width exceeds the starting width");
    }
    if delta_f == delta_i {
        return Ok(0);
    }
    let ratio = (n * delta_i / floor).ln() / (n * delta_f / floor).ln();
    Ok(ceil_count(ratio.ln() / std::f64::consts::LN_2))
}

/// `ceil((1/Df^2 - 1/Di^2) / (2 c_N N^2))`.
pub fn shots_noon(
    photon_count: usize,
    delta_i: f64,
    delta_f: f64,
    constants: &ScalingConstants,
) -> Result<u32> {
    check_width(delta_i)?;
    check_width(delta_f)?;
    if photon_count == 0 {
        return domain("shot counts need N >= 1");
    }
    if delta_f >= delta_i {
        return domain(format!(
            "N00N shot formula needs Delta_f < Delta_i, got {delta_f} >= {delta_i}"
        ));
    }
    let n = photon_count as f64;
    let x = (delta_f.powi(-2) - delta_i.powi(-2)) / (2.0 * constants.c_n * n * n);
    Ok(ceil_count(x).max(1))
}

fn ceil_count(x: f64) -> u32 {
    // a relative nudge keeps exact integers from rounding up by one ulp
    let nudged = x - 1e-12 * x.abs().max(1.0);
    nudged.ceil().max(0.0) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub gaussian_shots: u32,
    pub noon_shots: u32,
    pub total: u32,
    /// Split point `boundary / N` when the plan crosses regimes.
    pub boundary_delta: Option<f64>,
}

/// Shot plan from `delta_start` down to `delta_req`, split at the boundary
/// when the two endpoints fall in different regimes.
pub fn general_shot_plan(
    photon_count: usize,
    delta_start: f64,
    delta_req: f64,
    constants: &ScalingConstants,
) -> Result<ShotPlan> {
    if !(delta_req < delta_start && delta_start <= std::f64::consts::PI) {
        return domain(format!(
            "shot plan needs Delta_req < Delta_start <= pi, got {delta_req} and {delta_start}"
        ));
    }
    let start = classify_regime_with(photon_count, delta_start, constants)?;
    let end = classify_regime_with(photon_count, delta_req, constants)?;
    let plan = match (start, end) {
        (Regime::Gaussian, Regime::Gaussian) => {
            let g = shots_gaussian(photon_count, delta_start, delta_req, constants)?;
            ShotPlan {
                gaussian_shots: g,
                noon_shots: 0,
                total: g,
                boundary_delta: None,
            }
        }
        (Regime::Noon, Regime::Noon) => {
            let k = shots_noon(photon_count, delta_start, delta_req, constants)?;
            ShotPlan {
                gaussian_shots: 0,
                noon_shots: k,
                total: k,
                boundary_delta: None,
            }
        }
        (Regime::Gaussian, Regime::Noon) => {
            let b = constants.boundary_delta(photon_count);
            let g = shots_gaussian(photon_count, delta_start, b, constants)?;
            let k = shots_noon(photon_count, b, delta_req, constants)?;
            ShotPlan {
                gaussian_shots: g,
                noon_shots: k,
                total: g + k,
                boundary_delta: Some(b),
            }
        }
        (Regime::Noon, Regime::Gaussian) => unreachable!("widths only shrink"),
    };
    Ok(plan)
}

/// Iterate a recursion until the width reaches `delta_f`, counting steps.
pub fn count_recursion_steps(
    mut delta: f64,
    delta_f: f64,
    step: impl Fn(f64) -> f64,
    max_steps: u32,
) -> Option<u32> {
    let mut count = 0;
    while delta > delta_f {
        if count == max_steps {
            return None;
        }
        let next = step(delta);
        if !(next < delta) {
            return None;
        }
        delta = next;
        count += 1;
    }
    Some(count)
}

/// `Delta_nu * N * sqrt(nu)` after `nu` N00N-law steps from `delta_i`; tends
/// to `1 / sqrt(2 c_N)` for large `nu`.
pub fn heisenberg_product(photon_count: usize, delta_i: f64, shots: u32, constants: &ScalingConstants) -> f64 {
    let mut d = delta_i;
    for _ in 0..shots {
        d = noon_next_delta(photon_count, d, constants);
    }
    d * photon_count as f64 * (shots as f64).sqrt()
}

/// One observed shot-by-shot step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSample {
    pub photon_count: usize,
    pub delta_in: f64,
    pub delta_out: f64,
}

/// Optimized Gaussian width at a given `(N, Delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSample {
    pub photon_count: usize,
    pub delta: f64,
    pub rho: f64,
}

/// Validity windows in `N Delta` for the two laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindows {
    pub gaussian_min_n_delta: f64,
    pub noon_max_n_delta: f64,
}

impl Default for FitWindows {
    fn default() -> Self {
        Self {
            gaussian_min_n_delta: 8.0,
            noon_max_n_delta: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub value: f64,
    pub samples: usize,
    /// Root-mean-square residual in the fitted form.
    pub rms_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub constants: ScalingConstants,
    pub c_g: Option<FitSummary>,
    pub c_n: Option<FitSummary>,
    pub c_rho: Option<FitSummary>,
}

/// Least-squares refit: `c_G` in log form on the Gaussian window, `c_N`
/// through the origin of `Din - Dout` against `N^2 Din^3` on the N00N
/// window, and `c_rho` through the origin of `rho` against `Delta / N`.
/// Constants without samples keep their value from `base`.
pub fn fit_scaling_constants(
    samples: &[ScalingSample],
    rho_samples: &[RhoSample],
    windows: &FitWindows,
    base: &ScalingConstants,
) -> Result<ScalingFit> {
    if samples.len() + rho_samples.len() < 4 {
        return domain(format!(
            "constant fit needs at least 4 samples, got {}",
            samples.len() + rho_samples.len()
        ));
    }
    let nd = |s: &ScalingSample| s.photon_count as f64 * s.delta_in;
    let gauss: Vec<&ScalingSample> = samples.iter().filter(|s| nd(s) >= windows.gaussian_min_n_delta).collect();
    let noon: Vec<&ScalingSample> = samples.iter().filter(|s| nd(s) <= windows.noon_max_n_delta).collect();

    let c_g = (!gauss.is_empty()).then(|| {
        let logs: Vec<f64> = gauss
            .iter()
            .map(|s| s.delta_out.ln() - 0.5 * (s.delta_in / s.photon_count as f64).ln())
            .collect();
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        FitSummary {
            value: mean.exp(),
            samples: logs.len(),
            rms_residual: rms(logs.iter().map(|l| l - mean)),
        }
    });
    let c_n = (!noon.is_empty()).then(|| {
        let xy: Vec<(f64, f64)> = noon
            .iter()
            .map(|s| {
                let n = s.photon_count as f64;
                (n * n * s.delta_in.powi(3), s.delta_in - s.delta_out)
            })
            .collect();
        through_origin(&xy)
    });
    let c_rho = (!rho_samples.is_empty()).then(|| {
        let xy: Vec<(f64, f64)> = rho_samples
            .iter()
            .map(|s| (s.delta / s.photon_count as f64, s.rho))
            .collect();
        through_origin(&xy)
    });
    let mut constants = *base;
    if let Some(f) = c_g {
        constants.c_g = f.value;
    }
    if let Some(f) = c_n {
        constants.c_n = f.value;
    }
    if let Some(f) = c_rho {
        constants.c_rho = f.value;
    }
    Ok(ScalingFit {
        constants,
        c_g,
        c_n,
        c_rho,
    })
}

fn through_origin(xy: &[(f64, f64)]) -> FitSummary {
    let sxx: f64 = xy.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = xy.iter().map(|(x, y)| x * y).sum();
    let value = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    FitSummary {
        value,
        samples: xy.len(),
        rms_residual: rms(xy.iter().map(|(x, y)| y - value * x)),
    }
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), r| (s + r * r, n + 1));
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}
