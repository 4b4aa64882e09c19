//! Multirotor rigid-body plant, rotor mixing, and the manifold-respecting
//! RK4 integrator shared by the plant and the auxiliary attitude filter.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector4};
use thiserror::Error;

use crate::so3::{exp_so3, RotationMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("non-finite value produced in {context}")]
    NonFinite { context: &'static str },
    #[error("mixer is rank deficient (condition number {cond:.3e})")]
    RankDeficient { cond: f64 },
    #[error("invalid vehicle parameters: {0}")]
    BadParams(String),
}

/// Rotor layout: `[f, M]ᵀ = Γ·ω_T` with `ω_T` the squared rotor speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct MixerConfig {
    /// 4×n mixing matrix, n ≥ 4, full row rank.
    pub gamma: DMatrix<f64>,
}

impl MixerConfig {
    pub fn new(gamma: DMatrix<f64>) -> Result<Self, DynamicsError> {
        if gamma.nrows() != 4 || gamma.ncols() < 4 {
            return Err(DynamicsError::BadParams(format!(
                "mixer must be 4×n with n ≥ 4, got {}×{}",
                gamma.nrows(),
                gamma.ncols()
            )));
        }
        Ok(MixerConfig { gamma })
    }

    /// Quad in X configuration with unit thrust/moment coefficients.
    pub fn quad_x_unit() -> Self {
        MixerConfig {
            gamma: DMatrix::from_row_slice(
                4,
                4,
                &[
                    1.0, 1.0, 1.0, 1.0, //
                    1.0, -1.0, -1.0, 1.0, //
                    -1.0, -1.0, 1.0, 1.0, //
                    1.0, -1.0, 1.0, -1.0,
                ],
            ),
        }
    }
}

/// Mass, inertia, gravity, and rotor layout of the vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub gravity: f64,
    pub mixer: MixerConfig,
    inertia_inv: Matrix3<f64>,
}

impl VehicleParams {
    pub fn new(
        mass: f64,
        inertia: Matrix3<f64>,
        gravity: f64,
        mixer: MixerConfig,
    ) -> Result<Self, DynamicsError> {
        if !(mass > 0.0) || !(gravity > 0.0) {
            return Err(DynamicsError::BadParams(format!(
                "mass and gravity must be positive (m = {mass}, g = {gravity})"
            )));
        }
        if (inertia - inertia.transpose()).norm() > 1e-12 {
            return Err(DynamicsError::BadParams("inertia must be symmetric".into()));
        }
        let eig = inertia.symmetric_eigenvalues();
        if eig.min() <= 0.0 {
            return Err(DynamicsError::BadParams(
                "inertia must be positive definite".into(),
            ));
        }
        let inertia_inv = inertia
            .try_inverse()
            .ok_or_else(|| DynamicsError::BadParams("inertia not invertible".into()))?;
        Ok(VehicleParams {
            mass,
            inertia,
            gravity,
            mixer,
            inertia_inv,
        })
    }

    pub fn inertia_inv(&self) -> &Matrix3<f64> {
        &self.inertia_inv
    }

    pub fn inertia_min_eig(&self) -> f64 {
        self.inertia.symmetric_eigenvalues().min()
    }

    pub fn inertia_max_eig(&self) -> f64 {
        self.inertia.symmetric_eigenvalues().max()
    }
}

/// Full plant state: inertial position/velocity, attitude, body rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MultirotorState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: RotationMatrix,
    pub omega: Vector3<f64>,
}

impl MultirotorState {
    pub fn at_rest(position: Vector3<f64>) -> Self {
        MultirotorState {
            position,
            velocity: Vector3::zeros(),
            attitude: RotationMatrix::identity(),
            omega: Vector3::zeros(),
        }
    }
}

/// Thrust magnitude plus body moment: the plant's control inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    /// Total thrust along `−R·e₃` (N). The controller guarantees `f ≥ 0`.
    pub thrust: f64,
    pub moment: Vector3<f64>,
}

/// Time derivative of the plant state. The rotational part is reported as
/// the body rate (so `Ṙ = R·hat(omega)`) next to `Ω̇`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    pub omega: Vector3<f64>,
    pub omega_dot: Vector3<f64>,
}

const E3: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);

/// Rigid-body equations of motion:
/// `ẋ = v`, `m·v̇ = m·g·e₃ − f·R·e₃`, `Ṙ = R·Ω̂`, `J·Ω̇ = −Ω × JΩ + M`.
///
/// Gravity points along `+e₃`; at hover the thrust axis `−R·e₃` cancels it.
pub fn state_derivative(
    state: &MultirotorState,
    input: &ControlInput,
    params: &VehicleParams,
) -> Result<StateDerivative, DynamicsError> {
    let acceleration =
        E3 * params.gravity - state.attitude.matrix() * E3 * (input.thrust / params.mass);
    let omega_dot = params.inertia_inv
        * (input.moment - state.omega.cross(&(params.inertia * state.omega)));
    let d = StateDerivative {
        velocity: state.velocity,
        acceleration,
        omega: state.omega,
        omega_dot,
    };
    if d.acceleration.iter().all(|x| x.is_finite()) && d.omega_dot.iter().all(|x| x.is_finite()) {
        Ok(d)
    } else {
        Err(DynamicsError::NonFinite {
            context: "state_derivative",
        })
    }
}

/// Body-frame attitude increment rate. `sigma` parametrizes the attitude
/// within a step as `R(τ) = R₀·exp(sigma(τ))`; the commutator terms keep
/// the increment consistent with `Ṙ = R·Ω̂` to the order of the integrator.
#[inline]
pub(crate) fn increment_rate(sigma: &Vector3<f64>, omega: &Vector3<f64>) -> Vector3<f64> {
    let c = sigma.cross(omega);
    omega + c * 0.5 + sigma.cross(&c) / 12.0
}

/// One classical RK4 step of the plant with the control input held constant.
///
/// The embedded state is `(x, v, σ, Ω)` with `σ` the body-frame attitude
/// increment, so the only attitude update is the single exponential
/// `R ← R·exp(σ)` at the end of the step. If rounding ever degrades the
/// result past an orthogonality residual of 1e-12 it is re-projected.
pub fn step(
    state: &MultirotorState,
    input: &ControlInput,
    params: &VehicleParams,
    dt: f64,
) -> Result<MultirotorState, DynamicsError> {
    debug_assert!(dt > 0.0);
    let r0 = &state.attitude;
    let thrust_scale = input.thrust / params.mass;

    // derivative of the embedded state (x, v, sigma, Omega)
    let deriv = |_x: &Vector3<f64>,
                 v: &Vector3<f64>,
                 sigma: &Vector3<f64>,
                 omega: &Vector3<f64>| {
        let r_stage = if sigma.norm_squared() == 0.0 {
            *r0
        } else {
            r0 * &exp_so3(sigma)
        };
        (
            *v,
            E3 * params.gravity - r_stage.matrix() * E3 * thrust_scale,
            increment_rate(sigma, omega),
            params.inertia_inv * (input.moment - omega.cross(&(params.inertia * omega))),
        )
    };

    let x0 = state.position;
    let v0 = state.velocity;
    let s0 = Vector3::zeros();
    let w0 = state.omega;

    let k1 = deriv(&x0, &v0, &s0, &w0);
    let k2 = deriv(
        &(x0 + k1.0 * (dt / 2.0)),
        &(v0 + k1.1 * (dt / 2.0)),
        &(k1.2 * (dt / 2.0)),
        &(w0 + k1.3 * (dt / 2.0)),
    );
    let k3 = deriv(
        &(x0 + k2.0 * (dt / 2.0)),
        &(v0 + k2.1 * (dt / 2.0)),
        &(k2.2 * (dt / 2.0)),
        &(w0 + k2.3 * (dt / 2.0)),
    );
    let k4 = deriv(
        &(x0 + k3.0 * dt),
        &(v0 + k3.1 * dt),
        &(k3.2 * dt),
        &(w0 + k3.3 * dt),
    );

    let c = dt / 6.0;
    let position = x0 + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * c;
    let velocity = v0 + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * c;
    let sigma = (k1.2 + k2.2 * 2.0 + k3.2 * 2.0 + k4.2) * c;
    let omega = w0 + (k1.3 + k2.3 * 2.0 + k3.3 * 2.0 + k4.3) * c;

    let mut attitude = r0 * &exp_so3(&sigma);
    if attitude.orthogonality_residual() > 1e-12 {
        attitude = RotationMatrix::project(attitude.matrix());
    }

    let next = MultirotorState {
        position,
        velocity,
        attitude,
        omega,
    };
    if next.position.iter().all(|x| x.is_finite())
        && next.velocity.iter().all(|x| x.is_finite())
        && next.omega.iter().all(|x| x.is_finite())
        && next.attitude.matrix().iter().all(|x| x.is_finite())
    {
        Ok(next)
    } else {
        Err(DynamicsError::NonFinite { context: "step" })
    }
}

/// Squared rotor speeds realizing a wrench, with infeasibility flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorAllocation {
    /// Minimum-norm solution of `Γ·ω_T = [f, M]ᵀ` (rad²/s²).
    pub omega_sq: DVector<f64>,
    /// Indices whose squared speed came out negative. Flagged, not clamped:
    /// the wrench is treated as the true input.
    pub infeasible: Vec<usize>,
}

/// Minimum-norm rotor allocation via the Moore–Penrose pseudo-inverse.
pub fn allocate_rotors(
    input: &ControlInput,
    mixer: &MixerConfig,
) -> Result<RotorAllocation, DynamicsError> {
    let svd = mixer.gamma.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > 1e12 {
        return Err(DynamicsError::RankDeficient { cond });
    }
    let wrench = Vector4::new(input.thrust, input.moment.x, input.moment.y, input.moment.z);
    let omega_sq = svd
        .solve(&DVector::from_column_slice(wrench.as_slice()), 1e-15)
        .map_err(|_| DynamicsError::RankDeficient { cond })?;
    let infeasible = omega_sq
        .iter()
        .enumerate()
        .filter(|(_, &w)| w < 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(RotorAllocation {
        omega_sq,
        infeasible,
    })
}
