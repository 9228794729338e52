//! Analytic input families and the mode-interchange-symmetric
//! parameterization shared by the optimizers.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fock::InputState;
use crate::numeric::wrap_angle;
use crate::scaling::{Regime, ScalingConstants};

/// Sign of the phase step `s` in the N00N and Gaussian families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => domain(format!("sign must be +1 or -1, got {v}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub rho: f64,
    /// Quartic correction; only the quasi-Gaussian family reads it.
    #[serde(default)]
    pub rho_prime: f64,
    #[serde(default)]
    pub sign: Sign,
}

impl GaussianParams {
    pub fn new(rho: f64, sign: Sign) -> Self {
        Self {
            rho,
            rho_prime: 0.0,
            sign,
        }
    }
}

/// `(|N,0> + e^{+-i pi/2} |0,N>) / sqrt 2`.
pub fn make_noon(photon_count: usize, sign: Sign) -> Result<InputState> {
    if photon_count == 0 {
        return domain("N00N state needs N >= 1");
    }
    let mut r = vec![0.0; photon_count + 1];
    let mut theta = vec![0.0; photon_count + 1];
    r[0] = FRAC_1_SQRT_2;
    r[photon_count] = FRAC_1_SQRT_2;
    theta[photon_count] = sign.value() * FRAC_PI_2;
    InputState::new(r, theta)
}

fn stepped_profile(photon_count: usize, params: &GaussianParams) -> Result<InputState> {
    if photon_count == 0 {
        return domain("Gaussian state needs N >= 1");
    }
    if !(params.rho.is_finite() && params.rho_prime.is_finite()) {
        return domain("Gaussian parameters must be finite");
    }
    let half = photon_count as f64 / 2.0;
    let exps: Vec<f64> = (0..=photon_count)
        .map(|k| {
            let d = k as f64 - half;
            -params.rho * d * d - params.rho_prime * d.powi(4)
        })
        .collect();
    // subtract the largest exponent so strongly peaked profiles stay finite
    let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let r = exps.iter().map(|e| (e - top).exp()).collect();
    let theta = (0..=photon_count)
        .map(|k| wrap_angle(params.sign.value() * k as f64 * FRAC_PI_2))
        .collect();
    InputState::normalized(r, theta)
}

/// `r_k ~ e^{-rho (k - N/2)^2}`, `theta_k = s k pi/2`, with `rho >= 0`.
pub fn make_gaussian(photon_count: usize, params: GaussianParams) -> Result<InputState> {
    if params.rho < 0.0 {
        return Err(Error::Constraint(format!(
            "Gaussian width rho must be nonnegative, got {}",
            params.rho
        )));
    }
    stepped_profile(
        photon_count,
        &GaussianParams {
            rho_prime: 0.0,
            ..params
        },
    )
}

/// Gaussian with an extra quartic exponent `-rho' (k - N/2)^4`; unconstrained.
pub fn make_quasi_gaussian(photon_count: usize, params: GaussianParams) -> Result<InputState> {
    stepped_profile(photon_count, &params)
}

/// `rho = c_rho * delta / N` with the default constants.
pub fn best_fit_gaussian(photon_count: usize, delta: f64, sign: Sign) -> Result<InputState> {
    best_fit_gaussian_with(photon_count, delta, sign, &ScalingConstants::default())
}

pub fn best_fit_gaussian_with(
    photon_count: usize,
    delta: f64,
    sign: Sign,
    constants: &ScalingConstants,
) -> Result<InputState> {
    if !(delta.is_finite() && delta > 0.0 && delta <= std::f64::consts::PI) {
        return domain(format!("prior width must lie in (0, pi], got {delta}"));
    }
    if photon_count == 0 {
        return domain("Gaussian state needs N >= 1");
    }
    let rho = constants.c_rho * delta / photon_count as f64;
    make_gaussian(photon_count, GaussianParams::new(rho, sign))
}

/// N00N below the regime boundary, best-fit Gaussian on or above it. At
/// N = 1 both families coincide with the single-photon N00N state.
pub fn analytic_state(
    photon_count: usize,
    delta: f64,
    sign: Sign,
    constants: &ScalingConstants,
) -> Result<(Regime, InputState)> {
    if photon_count == 1 {
        return Ok((Regime::Noon, make_noon(1, sign)?));
    }
    let regime = crate::scaling::classify_regime_with(photon_count, delta, constants)?;
    let state = match regime {
        Regime::Noon => make_noon(photon_count, sign)?,
        Regime::Gaussian => best_fit_gaussian_with(photon_count, delta, sign, constants)?,
    };
    Ok((regime, state))
}

/// Independent parameters of a state with `r_k = r_{N-k}` and
/// `theta_k = -theta_{N-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricParams {
    pub photon_count: usize,
    /// `r_k` for `k <= N/2`.
    pub half_amplitudes: Vec<f64>,
    /// `theta_k` for `k < N/2`.
    pub half_phases: Vec<f64>,
}

impl SymmetricParams {
    pub fn amplitude_len(photon_count: usize) -> usize {
        photon_count / 2 + 1
    }

    pub fn phase_len(photon_count: usize) -> usize {
        photon_count.div_ceil(2)
    }
}

/// Mirror the half parameters into a full normalized state.
pub fn expand_symmetric(params: &SymmetricParams) -> Result<InputState> {
    let n = params.photon_count;
    if n == 0 {
        return domain("symmetric state needs N >= 1");
    }
    if params.half_amplitudes.len() != SymmetricParams::amplitude_len(n)
        || params.half_phases.len() != SymmetricParams::phase_len(n)
    {
        return domain(format!(
            "N = {n} needs {} amplitudes and {} phases",
            SymmetricParams::amplitude_len(n),
            SymmetricParams::phase_len(n)
        ));
    }
    let mut r = vec![0.0; n + 1];
    let mut theta = vec![0.0; n + 1];
    for (k, &a) in params.half_amplitudes.iter().enumerate() {
        r[k] = a.abs();
        r[n - k] = a.abs();
    }
    for (k, &t) in params.half_phases.iter().enumerate() {
        theta[k] = wrap_angle(t);
        theta[n - k] = wrap_angle(-t);
    }
    InputState::normalized(r, theta)
}

/// Nearest symmetric parameters: removes the global phase that makes the
/// phase profile odd, then averages each mirror pair.
pub fn project_symmetric(state: &InputState) -> SymmetricParams {
    let n = state.photon_count();
    let c = state.coeffs();
    let pair_sum: Complex64 = (0..=n).map(|k| c[k] * c[n - k]).sum();
    let mut alpha = 0.5 * pair_sum.arg();
    if n % 2 == 0 && state.amplitudes()[n / 2] > 0.0 {
        // of the two square roots, keep the one putting the midpoint phase at ~0
        let mid = state.phases()[n / 2];
        if wrap_angle(mid - alpha).abs() > wrap_angle(mid - alpha - std::f64::consts::PI).abs() {
            alpha += std::f64::consts::PI;
        }
    }
    let rotate = Complex64::from_polar(1.0, -alpha);
    let c: Vec<Complex64> = c.iter().map(|x| x * rotate).collect();
    let half_amplitudes = (0..SymmetricParams::amplitude_len(n))
        .map(|k| {
            if 2 * k == n {
                c[k].norm()
            } else {
                (0.5 * (c[k].norm_sqr() + c[n - k].norm_sqr())).sqrt()
            }
        })
        .collect();
    let half_phases = (0..SymmetricParams::phase_len(n))
        .map(|k| {
            // a mirror-symmetric partner contributes conj(c_{N-k})
            let z = c[k] + c[n - k].conj();
            if z.norm() > 0.0 {
                wrap_angle(z.arg())
            } else {
                0.0
            }
        })
        .collect();
    SymmetricParams {
        photon_count: n,
        half_amplitudes,
        half_phases,
    }
}

/// True when `state` equals its symmetric projection up to a global phase.
pub fn is_symmetric(state: &InputState, tol: f64) -> bool {
    match expand_symmetric(&project_symmetric(state)) {
        Ok(s) => (1.0 - s.overlap(state)).abs() <= tol,
        Err(_) => false,
    }
}
