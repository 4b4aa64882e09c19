//! The tracking control law: saturated position loop with an auxiliary
//! hyperbolic filter state, virtual force input, commanded attitude
//! construction, half-angle thrust scaling, an auxiliary attitude filter on
//! SO(3) that supplies smooth desired-attitude derivatives, and the moment
//! law that closes the attitude loop.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::dynamics::{MultirotorState, VehicleParams};
use crate::so3::{
    angular_velocity_error, config_error, e_matrix, exp_so3, tanh_vec, RotationMatrix, So3Error,
    EPS_PSI,
};
use crate::trajectory::TrajectorySample;

/// The `e_f` dynamics abort past this componentwise magnitude; reaching it
/// means the gains are misconfigured, not that clamping is wanted.
pub const EF_ABORT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("virtual input has zero norm, commanded attitude undefined")]
    ZeroThrustDirection,
    #[error("heading nearly parallel to thrust axis (‖x_Bd × z_Bc‖ = {cross_norm:.3e})")]
    HeadingSingular { cross_norm: f64 },
    #[error(transparent)]
    NearAntipodal(#[from] So3Error),
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
    #[error("auxiliary filter state |e_f| exceeded {EF_ABORT} (gains misconfigured)")]
    EfDiverged,
    #[error("invalid controller gains: {0}")]
    BadGains(String),
}

/// Position-loop, attitude-loop, and auxiliary-filter gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    pub k_alpha: f64,
    pub alpha_x: f64,
    pub alpha_f: f64,
    pub k_r: f64,
    pub k_omega: f64,
    /// Attitude-filter error mixing constant (also scales `e_{Ω_dc}`).
    pub gamma3: f64,
    /// Attitude-filter damping constant; sets the filter's fastest pole.
    pub gamma4: f64,
    /// Lower bound kept on `‖x_Bd × z_Bc‖` before the commanded attitude is
    /// declared singular.
    pub delta_a: f64,
}

impl ControllerGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let pos = self.k_alpha > 0.0
            && self.alpha_x > 0.0
            && self.alpha_f > 0.0
            && self.k_r > 0.0
            && self.k_omega > 0.0
            && self.gamma3 > 0.0
            && self.gamma4 > 0.0;
        if pos && self.delta_a > 0.0 && self.delta_a <= 1.0 {
            Ok(())
        } else {
            Err(ControlError::BadGains(format!("{self:?}")))
        }
    }
}

/// Auxiliary position-loop filter state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PositionLoopState {
    pub e_f: Vector3<f64>,
}

/// Filtered desired attitude and its angular rate, evolving on SO(3).
#[derive(Debug, Clone, PartialEq)]
pub struct AttitudeFilterState {
    pub r_d: RotationMatrix,
    pub omega_d: Vector3<f64>,
}

impl AttitudeFilterState {
    /// Start the filter at the commanded attitude with zero rate, which is
    /// its equilibrium: both filter errors vanish there.
    pub fn aligned_with(r_c: &RotationMatrix) -> Self {
        AttitudeFilterState {
            r_d: *r_c,
            omega_d: Vector3::zeros(),
        }
    }
}

/// How the thrust magnitude is scaled against attitude error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThrustStrategy {
    /// `f = ‖f_d‖·e₃ᵀR_cᵀR·e₃` — goes negative past 90° of tilt error.
    Lee2010,
    /// `f = ‖f_d‖` — ignores attitude error entirely.
    KarMagnitude,
    /// `f = ‖f_d‖·√((1 + e₃ᵀR_cᵀR·e₃)/2)` — the half-angle cosine, which is
    /// non-negative over the whole configuration space.
    ProposedHalfAngle,
}

const E3: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);

/// Position tracking error and filter tracking error.
///
/// `v_d_used` is whichever desired-velocity signal the run mode feeds back:
/// the oracle derivative or the estimator output. The controller never
/// reaches into the sample's oracle channel itself.
pub fn position_errors(
    state: &MultirotorState,
    sample: &TrajectorySample,
    v_d_used: &Vector3<f64>,
    pls: &PositionLoopState,
    gains: &ControllerGains,
) -> (Vector3<f64>, Vector3<f64>) {
    let e_x = state.position - sample.x_d;
    let e_alpha = (state.velocity - v_d_used) + tanh_vec(&e_x) * gains.alpha_x
        + tanh_vec(&pls.e_f);
    (e_x, e_alpha)
}

/// Right-hand side of the auxiliary filter. The `Cosh²` factor multiplies
/// the saturated drive terms; its product with `tanh(e_f)` is evaluated as
/// `cosh·sinh` so no unbounded factor is ever materialized alone.
fn ef_rate(
    e_f: &Vector3<f64>,
    e_alpha: &Vector3<f64>,
    e_x: &Vector3<f64>,
    gains: &ControllerGains,
) -> Vector3<f64> {
    let drive = -e_alpha * gains.k_alpha + tanh_vec(e_x);
    Vector3::new(
        e_f.x.cosh().powi(2) * drive.x - gains.alpha_f * e_f.x.cosh() * e_f.x.sinh(),
        e_f.y.cosh().powi(2) * drive.y - gains.alpha_f * e_f.y.cosh() * e_f.y.sinh(),
        e_f.z.cosh().powi(2) * drive.z - gains.alpha_f * e_f.z.cosh() * e_f.z.sinh(),
    )
}

/// Advance the auxiliary filter variable one step (RK4, inputs held over
/// the step). Aborts if any component leaves `[-50, 50]`.
pub fn ef_advance(
    pls: &PositionLoopState,
    e_alpha: &Vector3<f64>,
    e_x: &Vector3<f64>,
    gains: &ControllerGains,
    dt: f64,
) -> Result<PositionLoopState, ControlError> {
    debug_assert!(dt > 0.0);
    let y0 = pls.e_f;
    let k1 = ef_rate(&y0, e_alpha, e_x, gains);
    let k2 = ef_rate(&(y0 + k1 * (dt / 2.0)), e_alpha, e_x, gains);
    let k3 = ef_rate(&(y0 + k2 * (dt / 2.0)), e_alpha, e_x, gains);
    let k4 = ef_rate(&(y0 + k3 * dt), e_alpha, e_x, gains);
    let e_f = y0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if !e_f.iter().all(|v| v.is_finite()) {
        return Err(ControlError::NonFinite { context: "ef_advance" });
    }
    if e_f.amax() > EF_ABORT {
        return Err(ControlError::EfDiverged);
    }
    Ok(PositionLoopState { e_f })
}

/// Virtual force input: gravity feedforward, bounded acceleration estimate,
/// and saturated position/filter feedback. Every term is bounded, which is
/// what keeps the commanded attitude well defined.
pub fn virtual_input(
    e_x: &Vector3<f64>,
    e_f: &Vector3<f64>,
    g1: &Vector3<f64>,
    params: &VehicleParams,
    gains: &ControllerGains,
) -> Vector3<f64> {
    (E3 * params.gravity - g1 + tanh_vec(e_x) * 2.0 - tanh_vec(e_f) * gains.k_alpha)
        * params.mass
}

/// Commanded attitude from the virtual input direction and the desired
/// heading: `z_Bc` along `f_d`, `y_Bc` perpendicular to the heading plane.
pub fn desired_attitude(
    f_d: &Vector3<f64>,
    x_bd: &Vector3<f64>,
    gains: &ControllerGains,
) -> Result<RotationMatrix, ControlError> {
    let norm = f_d.norm();
    if norm <= 0.0 {
        return Err(ControlError::ZeroThrustDirection);
    }
    let z_bc = f_d / norm;
    let a = x_bd.cross(&z_bc);
    let cross_norm = a.norm();
    if cross_norm < gains.delta_a {
        return Err(ControlError::HeadingSingular { cross_norm });
    }
    let y_bc = -a / cross_norm;
    let x_bc = y_bc.cross(&z_bc);
    Ok(RotationMatrix::new_unchecked(Matrix3::from_columns(&[
        x_bc, y_bc, z_bc,
    ])))
}

/// Thrust magnitude under the selected scaling strategy.
pub fn thrust(
    f_d: &Vector3<f64>,
    r_c: &RotationMatrix,
    r: &RotationMatrix,
    strategy: ThrustStrategy,
) -> f64 {
    let norm = f_d.norm();
    let cos_tilt = (r_c.matrix().transpose() * r.matrix() * E3).z;
    match strategy {
        ThrustStrategy::Lee2010 => norm * cos_tilt,
        ThrustStrategy::KarMagnitude => norm,
        ThrustStrategy::ProposedHalfAngle => norm * ((1.0 + cos_tilt).max(0.0) / 2.0).sqrt(),
    }
}

/// Analytic right-hand side of the attitude filter at its current state:
/// the `Ω̇_d` this returns is exactly what the moment law feeds forward, so
/// no derivative of the commanded attitude is ever differenced numerically.
pub fn attitude_filter_rate(
    afs: &AttitudeFilterState,
    r_c: &RotationMatrix,
    gains: &ControllerGains,
) -> Result<Vector3<f64>, ControlError> {
    let pair = config_error(&afs.r_d, r_c)?;
    let e_omega_dc = afs.omega_d + pair.e_r / gains.gamma3;
    let e = e_matrix(&afs.r_d, r_c)?;
    Ok(-e_omega_dc / gains.gamma4 + pair.e_r + e * afs.omega_d / gains.gamma3)
}

/// Advance the attitude filter one step with `R_c` held, returning the new
/// state together with the `Ω̇_d` evaluated at the step start (the value the
/// moment law consumed this cycle). RK4 with a single exponential update.
pub fn attitude_filter_advance(
    afs: &AttitudeFilterState,
    r_c: &RotationMatrix,
    gains: &ControllerGains,
    dt: f64,
) -> Result<(AttitudeFilterState, Vector3<f64>), ControlError> {
    debug_assert!(dt > 0.0);
    let pair = config_error(&afs.r_d, r_c)?;
    if pair.psi >= 2.0 - EPS_PSI {
        return Err(ControlError::NearAntipodal(So3Error::NearAntipodal {
            trace_term: 2.0 - pair.psi,
        }));
    }
    let rate_now = attitude_filter_rate(afs, r_c, gains)?;

    let rhs = |sigma: &Vector3<f64>,
               omega_d: &Vector3<f64>|
     -> Result<(Vector3<f64>, Vector3<f64>), ControlError> {
        let stage = AttitudeFilterState {
            r_d: if sigma.norm_squared() == 0.0 {
                afs.r_d
            } else {
                &afs.r_d * &exp_so3(sigma)
            },
            omega_d: *omega_d,
        };
        Ok((
            crate::dynamics::increment_rate(sigma, omega_d),
            attitude_filter_rate(&stage, r_c, gains)?,
        ))
    };

    let w0 = afs.omega_d;
    let z = Vector3::zeros();
    let k1 = (crate::dynamics::increment_rate(&z, &w0), rate_now);
    let k2 = rhs(&(k1.0 * (dt / 2.0)), &(w0 + k1.1 * (dt / 2.0)))?;
    let k3 = rhs(&(k2.0 * (dt / 2.0)), &(w0 + k2.1 * (dt / 2.0)))?;
    let k4 = rhs(&(k3.0 * dt), &(w0 + k3.1 * dt))?;
    let c = dt / 6.0;
    let sigma = (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * c;
    let omega_d = w0 + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * c;
    let mut r_d = &afs.r_d * &exp_so3(&sigma);
    if r_d.orthogonality_residual() > 1e-12 {
        r_d = RotationMatrix::project(r_d.matrix());
    }
    if !omega_d.iter().all(|v| v.is_finite()) {
        return Err(ControlError::NonFinite {
            context: "attitude_filter_advance",
        });
    }
    Ok((AttitudeFilterState { r_d, omega_d }, rate_now))
}

/// Moment law tracking the filtered attitude reference. Substituted into
/// the rotational dynamics it closes the loop as
/// `J·ė_Ω = −k_R·e_R − k_Ω·e_Ω`.
pub fn moment(
    state: &MultirotorState,
    afs: &AttitudeFilterState,
    omega_d_dot: &Vector3<f64>,
    params: &VehicleParams,
    gains: &ControllerGains,
) -> Result<Vector3<f64>, ControlError> {
    let pair = config_error(&state.attitude, &afs.r_d)?;
    if pair.psi >= 2.0 - EPS_PSI {
        return Err(ControlError::NearAntipodal(So3Error::NearAntipodal {
            trace_term: 2.0 - pair.psi,
        }));
    }
    let e_om = angular_velocity_error(&state.attitude, &state.omega, &afs.r_d, &afs.omega_d);
    let rt_rd = state.attitude.matrix().transpose() * afs.r_d.matrix();
    let omega = state.omega;
    Ok(-pair.e_r * gains.k_r - e_om * gains.k_omega
        + omega.cross(&(params.inertia * omega))
        - params.inertia
            * (crate::so3::hat(&omega).matrix() * rt_rd * afs.omega_d - rt_rd * omega_d_dot))
}
