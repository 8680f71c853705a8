//! Nearly-constant-velocity (NCV) dynamics.
//!
//! `F = blockdiag(A, A)` with `A = [[1, T], [0, 1]]` and
//! `Q = blockdiag(B, B)` with `B = σ² [[T³/3, T²/2], [T²/2, T]]`,
//! acting on states ordered `[px, vx, py, vy]`.

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rfs::StateVector;

#[derive(Debug, Clone, PartialEq)]
pub struct NcvParams {
    dt: f64,
    sigma_motion_sq: f64,
    f: Matrix4<f64>,
    q: Matrix4<f64>,
    /// Lower Cholesky factor of `q`; zero when `sigma_motion_sq == 0`.
    q_chol: Matrix4<f64>,
}

pub fn make_ncv(dt: f64, sigma_motion_sq: f64) -> Result<NcvParams> {
    NcvParams::new(dt, sigma_motion_sq)
}

impl NcvParams {
    pub fn new(dt: f64, sigma_motion_sq: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("time step must be positive, got {dt}")));
        }
        if !(sigma_motion_sq >= 0.0 && sigma_motion_sq.is_finite()) {
            return Err(Error::invalid(
                "sigma_motion_sq",
                format!("process noise intensity must be nonnegative, got {sigma_motion_sq}"),
            ));
        }
        let t = dt;
        let mut f = Matrix4::identity();
        f[(0, 1)] = t;
        f[(2, 3)] = t;

        let b11 = sigma_motion_sq * t.powi(3) / 3.0;
        let b12 = sigma_motion_sq * t.powi(2) / 2.0;
        let b22 = sigma_motion_sq * t;
        let mut q = Matrix4::zeros();
        for o in [0, 2] {
            q[(o, o)] = b11;
            q[(o, o + 1)] = b12;
            q[(o + 1, o)] = b12;
            q[(o + 1, o + 1)] = b22;
        }

        // 2x2 Cholesky per block; B is positive definite whenever σ² > 0.
        let l11 = b11.sqrt();
        let l21 = if l11 > 0.0 { b12 / l11 } else { 0.0 };
        let l22 = (b22 - l21 * l21).max(0.0).sqrt();
        let mut q_chol = Matrix4::zeros();
        for o in [0, 2] {
            q_chol[(o, o)] = l11;
            q_chol[(o + 1, o)] = l21;
            q_chol[(o + 1, o + 1)] = l22;
        }

        Ok(Self {
            dt,
            sigma_motion_sq,
            f,
            q,
            q_chol,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sigma_motion_sq(&self) -> f64 {
        self.sigma_motion_sq
    }

    pub fn transition(&self) -> &Matrix4<f64> {
        &self.f
    }

    pub fn process_noise(&self) -> &Matrix4<f64> {
        &self.q
    }

    pub fn process_noise_chol(&self) -> &Matrix4<f64> {
        &self.q_chol
    }
}

fn to_vec(s: StateVector) -> Vector4<f64> {
    Vector4::from(s.to_array())
}

fn from_vec(v: Vector4<f64>) -> StateVector {
    StateVector::new(v[0], v[1], v[2], v[3])
}

/// `F · state`.
pub fn noise_free_predict(state: StateVector, params: &NcvParams) -> StateVector {
    from_vec(params.f * to_vec(state))
}

/// `F · state + e`, `e ~ N(0, Q)` drawn through the Cholesky factor of `Q`.
pub fn sample_transition<R: Rng + ?Sized>(
    state: StateVector,
    params: &NcvParams,
    rng: &mut R,
) -> StateVector {
    let z = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    from_vec(params.f * to_vec(state) + params.q_chol * z)
}
