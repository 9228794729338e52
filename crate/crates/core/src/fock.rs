//! Forward physics of the lossless Mach-Zehnder interferometer.
//!
//! An N-photon input `sum_k c_k |N-k, k>` acquires the phase `e^{i phi (N-k)}`
//! on arm 1, is mixed by a beam splitter of angle `gamma`, and is detected by
//! photon counting. The outcome label `m` is always the photon count at
//! detector D1 (output arm 1); the pair of counts is `(m, N - m)`.

use std::f64::consts::FRAC_PI_4;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{binomial, factorial, ln_factorial, wrap_angle};

/// Tolerance on `sum r_k^2 = 1` accepted by [`InputState::new`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Outcomes whose probability is below this are dropped from Fisher sums.
pub const FISHER_PROB_FLOOR: f64 = 1e-14;

/// Default beam-splitter angle (50:50).
pub const BALANCED_GAMMA: f64 = FRAC_PI_4;

/// Pure N-photon two-mode input state in polar form `c_k = r_k e^{i theta_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct InputState {
    photon_count: usize,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    #[serde(rename = "N")]
    n: usize,
    r: Vec<f64>,
    theta: Vec<f64>,
}

impl TryFrom<StateJson> for InputState {
    type Error = Error;

    fn try_from(value: StateJson) -> Result<Self> {
        if value.r.len() != value.n + 1 {
            return domain(format!(
                "state has N = {} but {} amplitudes",
                value.n,
                value.r.len()
            ));
        }
        InputState::new(value.r, value.theta)
    }
}

impl From<InputState> for StateJson {
    fn from(s: InputState) -> Self {
        StateJson {
            n: s.photon_count,
            r: s.amplitudes,
            theta: s.phases,
        }
    }
}

impl InputState {
    /// Builds a state from already-normalized amplitudes and phases.
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return domain("an input state needs at least one photon (N >= 1)");
        }
        if amplitudes.len() != phases.len() {
            return domain(format!(
                "{} amplitudes but {} phases",
                amplitudes.len(),
                phases.len()
            ));
        }
        if let Some(r) = amplitudes.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return domain(format!("amplitudes must be finite and nonnegative, got {r}"));
        }
        if phases.iter().any(|t| !t.is_finite()) {
            return domain("phases must be finite");
        }
        let norm: f64 = amplitudes.iter().map(|r| r * r).sum();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return domain(format!("state is not normalized: sum r^2 = {norm}"));
        }
        Ok(Self {
            photon_count: amplitudes.len() - 1,
            amplitudes,
            phases,
        })
    }

    /// Normalizes arbitrary nonnegative amplitudes before construction.
    pub fn normalized(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|r| r * r).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return domain("cannot normalize a zero or non-finite amplitude vector");
        }
        let amps: Vec<f64> = amplitudes.iter().map(|r| r / norm).collect();
        Self::new(amps, phases)
    }

    /// Builds a state from complex coefficients, normalizing them.
    pub fn from_coeffs(coeffs: &[Complex64]) -> Result<Self> {
        let amps = coeffs.iter().map(|c| c.norm()).collect();
        let phases = coeffs.iter().map(|c| wrap_angle(c.arg())).collect();
        Self::normalized(amps, phases)
    }

    pub fn photon_count(&self) -> usize {
        self.photon_count
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn coeffs(&self) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .zip(&self.phases)
            .map(|(&r, &t)| Complex64::from_polar(r, t))
            .collect()
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &InputState) -> f64 {
        if self.photon_count != other.photon_count {
            return 0.0;
        }
        let a = self.coeffs();
        let b = other.coeffs();
        a.iter()
            .zip(&b)
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Overlap maximized over the symmetry orbit of `self`: global phase,
    /// the `s -> -s` conjugation and mode interchange `k -> N - k`.
    pub fn fidelity(&self, other: &InputState) -> f64 {
        [
            self.clone(),
            self.conjugated(),
            self.mode_swapped(),
            self.mode_swapped().conjugated(),
        ]
        .iter()
        .map(|s| s.overlap(other))
        .fold(0.0, f64::max)
    }

    /// Complex conjugate of every coefficient (flips the phase-step sign).
    pub fn conjugated(&self) -> InputState {
        InputState {
            photon_count: self.photon_count,
            amplitudes: self.amplitudes.clone(),
            phases: self.phases.iter().map(|t| wrap_angle(-t)).collect(),
        }
    }

    /// Exchanges the two input arms: `c'_k = c_{N-k}`.
    pub fn mode_swapped(&self) -> InputState {
        InputState {
            photon_count: self.photon_count,
            amplitudes: self.amplitudes.iter().rev().copied().collect(),
            phases: self.phases.iter().rev().copied().collect(),
        }
    }

    /// The state whose outcome statistics are translated in phase:
    /// `p_shifted(m | phi) = p(m | phi - offset)`.
    pub fn phase_shifted(&self, offset: f64) -> InputState {
        let n = self.photon_count as f64;
        InputState {
            photon_count: self.photon_count,
            amplitudes: self.amplitudes.clone(),
            phases: self
                .phases
                .iter()
                .enumerate()
                .map(|(k, t)| wrap_angle(t - offset * (n - k as f64)))
                .collect(),
        }
    }
}

/// `B[m][k] = <m, N-m| U_BS |N-k, k>` restricted to the N-photon sector.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSplitterMatrix {
    photon_count: usize,
    gamma: f64,
    entries: Vec<f64>,
}

impl BeamSplitterMatrix {
    /// Expands `(cos g a1+ + sin g a2+)^{N-k} (-sin g a1+ + cos g a2+)^k |0,0>`
    /// and collects the coefficient of `a1+^m a2+^{N-m}`.
    pub fn new(photon_count: usize, gamma: f64) -> Result<Self> {
        if photon_count == 0 {
            return domain("beam splitter needs N >= 1");
        }
        if !gamma.is_finite() {
            return domain("beam splitter angle must be finite");
        }
        let n = photon_count;
        let (s, c) = gamma.sin_cos();
        let dim = n + 1;
        let mut entries = vec![0.0; dim * dim];
        for m in 0..=n {
            for k in 0..=n {
                let mut total = 0.0;
                let j_lo = m.saturating_sub(k);
                let j_hi = m.min(n - k);
                for j in j_lo..=j_hi {
                    let l = m - j;
                    total += binomial(n - k, j)
                        * binomial(k, l)
                        * c.powi((j + k - l) as i32)
                        * s.powi((n - k - j) as i32)
                        * (-s).powi(l as i32);
                }
                entries[m * dim + k] = fock_norm_ratio(n, m, k) * total;
            }
        }
        Ok(Self {
            photon_count,
            gamma,
            entries,
        })
    }

    pub fn balanced(photon_count: usize) -> Result<Self> {
        Self::new(photon_count, BALANCED_GAMMA)
    }

    /// Process-wide cached balanced splitter for photon number `n`.
    pub fn balanced_shared(photon_count: usize) -> Result<&'static BeamSplitterMatrix> {
        static CACHE: OnceLock<Mutex<Vec<&'static BeamSplitterMatrix>>> = OnceLock::new();
        if photon_count == 0 {
            return domain("beam splitter needs N >= 1");
        }
        let mut guard = CACHE
            .get_or_init(|| Mutex::new(Vec::new()))
            .lock()
            .expect("beam splitter cache poisoned");
        if let Some(b) = guard.iter().find(|b| b.photon_count == photon_count) {
            return Ok(b);
        }
        let b: &'static BeamSplitterMatrix = Box::leak(Box::new(Self::balanced(photon_count)?));
        guard.push(b);
        Ok(b)
    }

    pub fn photon_count(&self) -> usize {
        self.photon_count
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn entry(&self, m: usize, k: usize) -> f64 {
        self.entries[m * (self.photon_count + 1) + k]
    }

    /// Largest deviation of `B^T B` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let dim = self.photon_count + 1;
        let mut worst = 0.0f64;
        for k in 0..dim {
            for kp in 0..dim {
                let dot: f64 = (0..dim).map(|m| self.entry(m, k) * self.entry(m, kp)).sum();
                let target = if k == kp { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// `sqrt(m! (N-m)! / ((N-k)! k!))`.
fn fock_norm_ratio(n: usize, m: usize, k: usize) -> f64 {
    if n <= 20 {
        (factorial(m) * factorial(n - m) / (factorial(n - k) * factorial(k))).sqrt()
    } else {
        (0.5 * (ln_factorial(m) + ln_factorial(n - m) - ln_factorial(n - k) - ln_factorial(k)))
            .exp()
    }
}

/// Photon-count distribution `p(m | phi)` at detector D1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomePmf {
    pub probs: Vec<f64>,
}

impl OutcomePmf {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

fn check_dims(state: &InputState, bs: &BeamSplitterMatrix) -> Result<()> {
    if state.photon_count() != bs.photon_count() {
        return domain(format!(
            "state has N = {} but beam splitter has N = {}",
            state.photon_count(),
            bs.photon_count()
        ));
    }
    Ok(())
}

/// Output amplitudes `A_m(phi) = sum_k c_k e^{i phi (N-k)} B[m][k]`, written
/// into `out` (length N+1).
fn amplitudes_into(coeffs: &[Complex64], phi: f64, bs: &BeamSplitterMatrix, out: &mut [Complex64]) {
    let n = bs.photon_count();
    let step = Complex64::from_polar(1.0, phi);
    // phase factor for k = N is 1; walk k downward multiplying by e^{i phi}
    let mut phased = [Complex64::new(0.0, 0.0); 64];
    let phased: &mut [Complex64] = if n < 64 {
        &mut phased[..=n]
    } else {
        return amplitudes_into_large(coeffs, phi, bs, out);
    };
    let mut factor = Complex64::new(1.0, 0.0);
    for k in (0..=n).rev() {
        phased[k] = coeffs[k] * factor;
        factor *= step;
    }
    for (m, slot) in out.iter_mut().enumerate().take(n + 1) {
        let row = &bs.entries[m * (n + 1)..(m + 1) * (n + 1)];
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, c) in row.iter().zip(phased.iter()) {
            acc += c * *b;
        }
        *slot = acc;
    }
}

fn amplitudes_into_large(
    coeffs: &[Complex64],
    phi: f64,
    bs: &BeamSplitterMatrix,
    out: &mut [Complex64],
) {
    let n = bs.photon_count();
    let phased: Vec<Complex64> = (0..=n)
        .map(|k| coeffs[k] * Complex64::from_polar(1.0, phi * (n - k) as f64))
        .collect();
    for (m, slot) in out.iter_mut().enumerate().take(n + 1) {
        *slot = (0..=n).map(|k| phased[k] * bs.entry(m, k)).sum();
    }
}

/// `p(m | phi) = |A_m(phi)|^2`.
pub fn outcome_pmf(state: &InputState, phi: f64, bs: &BeamSplitterMatrix) -> Result<OutcomePmf> {
    check_dims(state, bs)?;
    let n = state.photon_count();
    let coeffs = state.coeffs();
    let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
    amplitudes_into(&coeffs, phi, bs, &mut amps);
    Ok(OutcomePmf {
        probs: amps.iter().map(|a| a.norm_sqr()).collect(),
    })
}

/// Outcome probabilities on a list of phases, row-major `[node][m]`.
pub fn pmf_table(state: &InputState, phis: &[f64], bs: &BeamSplitterMatrix) -> Result<Vec<f64>> {
    check_dims(state, bs)?;
    let dim = state.photon_count() + 1;
    let coeffs = state.coeffs();
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    let mut table = Vec::with_capacity(phis.len() * dim);
    for &phi in phis {
        amplitudes_into(&coeffs, phi, bs, &mut amps);
        table.extend(amps.iter().map(|a| a.norm_sqr()));
    }
    Ok(table)
}

/// Classical Fisher information `sum_m (dp/dphi)^2 / p` of photon counting.
pub fn fisher_information(state: &InputState, phi: f64, bs: &BeamSplitterMatrix) -> Result<f64> {
    check_dims(state, bs)?;
    let n = state.photon_count();
    let coeffs = state.coeffs();
    let derived: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * Complex64::new(0.0, (n - k) as f64))
        .collect();
    let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut damps = vec![Complex64::new(0.0, 0.0); n + 1];
    amplitudes_into(&coeffs, phi, bs, &mut amps);
    amplitudes_into(&derived, phi, bs, &mut damps);
    let mut info = 0.0;
    for (a, da) in amps.iter().zip(&damps) {
        let p = a.norm_sqr();
        if p < FISHER_PROB_FLOOR {
            continue;
        }
        let dp = 2.0 * (a.conj() * da).re;
        info += dp * dp / p;
    }
    Ok(info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn fock(n: usize, k: usize) -> InputState {
        let mut r = vec![0.0; n + 1];
        r[k] = 1.0;
        InputState::new(r, vec![0.0; n + 1]).unwrap()
    }

    fn noon(n: usize) -> InputState {
        let mut r = vec![0.0; n + 1];
        let mut t = vec![0.0; n + 1];
        r[0] = FRAC_1_SQRT_2;
        r[n] = FRAC_1_SQRT_2;
        t[n] = FRAC_PI_2;
        InputState::new(r, t).unwrap()
    }

    #[test]
    fn single_photon_matrix() {
        let b = BeamSplitterMatrix::balanced(1).unwrap();
        assert_abs_diff_eq!(b.entry(1, 0), FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(b.entry(1, 1), -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(b.entry(0, 0), FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(b.entry(0, 1), FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn zero_angle_is_identity_up_to_relabeling() {
        // gamma = 0 leaves |N-k, k> untouched, i.e. m = N - k.
        for n in 1..=6 {
            let b = BeamSplitterMatrix::new(n, 0.0).unwrap();
            for m in 0..=n {
                for k in 0..=n {
                    let expect = if m == n - k { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(b.entry(m, k), expect, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn hong_ou_mandel_null() {
        let b = BeamSplitterMatrix::balanced(2).unwrap();
        assert_abs_diff_eq!(b.entry(1, 1), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_photons_rejected() {
        assert!(matches!(BeamSplitterMatrix::new(0, 0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let b = BeamSplitterMatrix::balanced(3).unwrap();
        assert!(outcome_pmf(&fock(2, 0), 0.1, &b).is_err());
        assert!(fisher_information(&fock(2, 0), 0.1, &b).is_err());
    }

    #[test]
    fn fock_input_gives_fair_coin() {
        let b = BeamSplitterMatrix::balanced(1).unwrap();
        for phi in [-1.0, 0.0, 0.4, 2.5] {
            let p = outcome_pmf(&fock(1, 0), phi, &b).unwrap();
            assert_abs_diff_eq!(p.probs[0], 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(p.probs[1], 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_photon_fringe() {
        let b = BeamSplitterMatrix::balanced(1).unwrap();
        for phi in [-1.2, 0.0, 0.3, 1.0] {
            let p = outcome_pmf(&noon(1), phi, &b).unwrap();
            assert_abs_diff_eq!(p.probs[1], (1.0 - phi.sin()) / 2.0, epsilon = 1e-14);
            assert_abs_diff_eq!(p.probs[0], (1.0 + phi.sin()) / 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn noon_fisher_is_heisenberg() {
        for n in 2..=6 {
            let b = BeamSplitterMatrix::balanced(n).unwrap();
            for phi in [0.0, 0.17, -0.4] {
                let f = fisher_information(&noon(n), phi, &b).unwrap();
                assert_abs_diff_eq!(f, (n * n) as f64, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn fock_input_has_no_information() {
        let b = BeamSplitterMatrix::balanced(4).unwrap();
        assert_abs_diff_eq!(fisher_information(&fock(4, 0), 0.3, &b).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn shifted_state_translates_statistics() {
        let b = BeamSplitterMatrix::balanced(3).unwrap();
        let s = InputState::normalized(vec![0.3, 0.6, 0.5, 0.2], vec![0.1, -0.7, 1.2, 0.4]).unwrap();
        let shifted = s.phase_shifted(0.37);
        for phi in [-0.5, 0.0, 0.8] {
            let a = outcome_pmf(&shifted, phi, &b).unwrap();
            let c = outcome_pmf(&s, phi - 0.37, &b).unwrap();
            for (x, y) in a.probs.iter().zip(&c.probs) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn pmf_period_two_pi() {
        let b = BeamSplitterMatrix::balanced(5).unwrap();
        let s = InputState::normalized(vec![0.2, 0.5, 0.1, 0.6, 0.3, 0.4], vec![0.0, 1.0, -2.0, 0.5, 3.0, -1.0])
            .unwrap();
        let a = outcome_pmf(&s, 0.3, &b).unwrap();
        let c = outcome_pmf(&s, 0.3 + 2.0 * PI, &b).unwrap();
        for (x, y) in a.probs.iter().zip(&c.probs) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn validation_errors() {
        assert!(InputState::new(vec![1.0], vec![0.0]).is_err());
        assert!(InputState::new(vec![0.5, 0.5], vec![0.0, 0.0]).is_err());
        assert!(InputState::new(vec![-1.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(InputState::normalized(vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = noon(3);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"N\":3"));
        let back: InputState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<InputState>(r#"{"N":2,"r":[1,0],"theta":[0,0]}"#).is_err());
    }
}
