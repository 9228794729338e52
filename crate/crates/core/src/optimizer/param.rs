//! Unconstrained coordinates for each searchable state family.
//!
//! The full family maps hyperspherical angles onto the independent
//! amplitudes of a mirror-symmetric state, so every coordinate vector is a
//! normalized state and the simplex needs no penalty terms.

use std::f64::consts::SQRT_2;

use crate::error::Result;
use crate::fock::InputState;
use crate::states::{
    expand_symmetric, make_gaussian, make_quasi_gaussian, project_symmetric, GaussianParams, Sign,
    SymmetricParams,
};

use super::Family;

/// Coordinate layout of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout {
    pub family: Family,
    pub photon_count: usize,
    pub sign: Sign,
}

impl Layout {
    pub fn dimension(&self) -> usize {
        let n = self.photon_count;
        match self.family {
            Family::Full => SymmetricParams::amplitude_len(n) - 1 + SymmetricParams::phase_len(n),
            Family::GaussianRho => 1,
            Family::QuasiGaussian => 2,
            Family::Analytic => 0,
        }
    }

    /// Builds the state a coordinate vector represents.
    pub fn state(&self, x: &[f64]) -> Result<InputState> {
        let n = self.photon_count;
        match self.family {
            Family::Full => {
                let a = SymmetricParams::amplitude_len(n);
                let u = sphere_point(&x[..a - 1]);
                let half_amplitudes = u
                    .iter()
                    .enumerate()
                    .map(|(k, v)| if 2 * k == n { v.abs() } else { v.abs() / SQRT_2 })
                    .collect();
                expand_symmetric(&SymmetricParams {
                    photon_count: n,
                    half_amplitudes,
                    half_phases: x[a - 1..].to_vec(),
                })
            }
            Family::GaussianRho => make_gaussian(n, GaussianParams::new(x[0].abs(), self.sign)),
            Family::QuasiGaussian => make_quasi_gaussian(
                n,
                GaussianParams {
                    rho: x[0],
                    rho_prime: x[1],
                    sign: self.sign,
                },
            ),
            Family::Analytic => unreachable!("the analytic family has no coordinates"),
        }
    }

    /// Coordinates of the symmetric projection of `state` (full family only).
    pub fn coords_of(&self, state: &InputState) -> Vec<f64> {
        let n = self.photon_count;
        let p = project_symmetric(state);
        let u: Vec<f64> = p
            .half_amplitudes
            .iter()
            .enumerate()
            .map(|(k, r)| if 2 * k == n { *r } else { r * SQRT_2 })
            .collect();
        let mut x = sphere_angles(&u);
        x.extend(p.half_phases);
        x
    }
}

/// `u_1 = cos a_1, u_i = sin a_1 ... sin a_{i-1} cos a_i, u_d = prod sin a_i`.
pub fn sphere_point(angles: &[f64]) -> Vec<f64> {
    let d = angles.len() + 1;
    let mut u = vec![0.0; d];
    let mut carry = 1.0;
    for (i, a) in angles.iter().enumerate() {
        let (s, c) = a.sin_cos();
        u[i] = carry * c;
        carry *= s;
    }
    u[d - 1] = carry;
    u
}

/// Inverse of [`sphere_point`] for a unit vector.
pub fn sphere_angles(u: &[f64]) -> Vec<f64> {
    let d = u.len();
    if d <= 1 {
        return Vec::new();
    }
    let mut angles = Vec::with_capacity(d - 1);
    let mut tail: f64 = u.iter().map(|v| v * v).sum::<f64>();
    for i in 0..d - 1 {
        tail -= u[i] * u[i];
        let rest = tail.max(0.0).sqrt();
        angles.push(if i == d - 2 { u[d - 1].atan2(u[i]) } else { rest.atan2(u[i]) });
    }
    angles
}
