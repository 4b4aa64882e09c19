//! Stability certification and run-time monitors: derives every bound
//! constant and gain condition from the configured vehicle, gains, and
//! trajectory bounds, evaluates the composite Lyapunov function along runs,
//! and audits the filter/force inequalities the design guarantees.

use nalgebra::Vector3;
use thiserror::Error;

use crate::controller::{AttitudeFilterState, ControllerGains};
use crate::estimator::EstimatorGains;
use crate::so3::{angular_velocity_error, config_error, RotationMatrix, So3Error};
use crate::trajectory::{TrajectoryBounds, TrajectoryOracle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    NearAntipodal(#[from] So3Error),
    #[error("constant estimation needs {0}")]
    EstimateUnavailable(String),
}

/// Everything the certificate depends on. The cross-term constant `c1`,
/// the Lipschitz pair `(l1, rho02)` for the commanded-attitude rate, and
/// the filter-error initial norms have no closed form and are declared
/// here (use [`estimate_l1_rho02`] for a conservative chain-derived pair).
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateInputs {
    pub mass: f64,
    pub gravity: f64,
    pub inertia_min: f64,
    pub inertia_max: f64,
    pub gains: ControllerGains,
    pub estimator: EstimatorGains,
    pub bounds: TrajectoryBounds,
    pub c1: f64,
    pub l1: f64,
    pub rho02: f64,
    pub e_alpha_bar: f64,
    /// Declared initial filter-error norms `(e_gx, e_ẍd, e_gv, e_g1)`.
    /// Zero declares the steady-state certificate, with the transient
    /// terms excluded from the α's.
    pub initial_filter_errors: [f64; 4],
}

/// One named gain condition with its margin (`value > 0` means pass).
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub description: &'static str,
    pub value: f64,
    pub pass: bool,
}

/// Estimated region of attraction of the attitude loop: any initial
/// configuration error below `psi_max` with a squared rate error below
/// `(2·k_R/λ_max(J))·(psi_max − Ψ(0))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionOfAttraction {
    pub psi_max: f64,
    /// Rate-error bound evaluated at `Ψ(0) = 0`.
    pub omega_err_max: f64,
}

/// All derived constants, gain-condition margins, and the ultimate bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Variants of the force bounds using the projection radius
    /// `h2·√(1+eps0)` instead of `h2`; the run-time monitors use these.
    pub alpha1_proj: f64,
    pub alpha2_proj: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub alpha5: f64,
    pub alpha6: f64,
    pub alpha7: f64,
    pub rho03: f64,
    pub lambda: [f64; 7],
    pub lambda_v: f64,
    pub d: f64,
    pub ultimate_bound: f64,
    pub beta_bar: f64,
    pub e_alpha_bar_required: f64,
    pub roa: RegionOfAttraction,
    pub conditions: Vec<Condition>,
}

impl CertificateReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<&Condition> {
        self.conditions.iter().filter(|c| !c.pass).collect()
    }
}

/// Largest eigenvalue of the symmetric 2×2 matrix `[[a, b], [b, c]]`.
fn sym2_max_eig(a: f64, b: f64, c: f64) -> f64 {
    let mean = (a + c) / 2.0;
    let delta = ((a - c) / 2.0).hypot(b);
    mean + delta
}

/// Derive every proof constant and gain-condition margin. Pure: identical
/// inputs produce bitwise-identical reports.
pub fn compute_constants(ci: &CertificateInputs) -> CertificateReport {
    let m = ci.mass;
    let g = ci.gains;
    let sqrt3 = 3.0_f64.sqrt();
    let h = &ci.bounds;
    let h2_proj = ci.estimator.h2 * (1.0 + ci.estimator.eps0).sqrt();

    let alpha1 = m * (ci.gravity + h.h2 + 2.0 * sqrt3 + sqrt3 * g.k_alpha);
    let alpha2 = m * (ci.gravity - h.h2 - 2.0 - g.k_alpha);
    let alpha1_proj = m * (ci.gravity + h2_proj + 2.0 * sqrt3 + sqrt3 * g.k_alpha);
    let alpha2_proj = m * (ci.gravity - h2_proj - 2.0 - g.k_alpha);

    let [e_gx0, e_xdd0, e_gv0, e_g10] = ci.initial_filter_errors;
    let ge = ci.estimator;
    let alpha3 = e_gx0.max(ge.gamma1 * h.h2);
    let alpha4 = e_xdd0.max(ge.gamma1 * h.h3);
    let alpha5 = e_gv0.max(ge.gamma2 / ge.gamma1 * alpha4);
    let alpha7 = 8.0 * (alpha4 * alpha4 + alpha5 * alpha5)
        + 2.0 * ge.gamma21 * ge.gamma21 * h.h3 * h.h3;
    let alpha6 = e_g10.max(alpha7.sqrt());

    let rho03 = m / 2.0
        + 1.0
        + ci.l1 * ci.l1 * (4.0 * g.gamma3 * g.gamma3 + g.gamma4) / (8.0 * g.gamma3 * g.gamma3);

    let lambda1 = m * g.k_alpha
        - m * g.alpha_x * (3.0 * g.alpha_x + 1.0) / 2.0
        - m * g.alpha_f / 2.0
        - rho03;
    let lambda2 = m * g.alpha_x - m * g.alpha_x * g.alpha_x / 2.0;
    let lambda3 = m * g.alpha_f / 2.0 - m * g.alpha_x / 2.0;
    let lambda4 = 1.0 / (2.0 * g.gamma3) - 2.0 * alpha1 * alpha1;
    let lambda5 = 1.0 / (2.0 * g.gamma4);
    let lambda6 = g.k_omega - ci.c1 / 2.0 - ci.c1 * g.k_omega / (2.0 * ci.inertia_min);
    let lambda7 = ci.c1 * g.k_r / ci.inertia_max
        - ci.c1 * g.k_omega / (2.0 * ci.inertia_min)
        - 2.0 * alpha1 * alpha1;
    let lambda = [lambda1, lambda2, lambda3, lambda4, lambda5, lambda6, lambda7];
    let lambda_v = lambda.iter().cloned().fold(f64::INFINITY, f64::min);

    let d = (g.gamma3 / 2.0 + g.gamma4 / (8.0 * g.gamma3 * g.gamma3)) * ci.rho02 * ci.rho02
        + m / 2.0 * alpha6 * alpha6;
    let ultimate_bound = d / lambda_v;

    // attitude-loop exponential rate: slowest decay over the largest level
    let w12_max = sym2_max_eig(2.0 * g.k_r, ci.c1 / 2.0, ci.inertia_max / 2.0);
    let beta_bar = lambda6.min(
        ci.c1 * g.k_r / ci.inertia_max - ci.c1 * g.k_omega / (2.0 * ci.inertia_min),
    ) / w12_max;

    let e_alpha_bar_required = (2.0 * ultimate_bound.max(0.0) / m).sqrt();
    let eq13_margin = ci.gravity - h.h2 - 2.0 - g.k_alpha;

    let conditions = vec![
        Condition {
            name: "thrust_margin",
            description: "k_alpha < g - h2 - 2 (keeps the virtual input away from zero)",
            value: eq13_margin,
            pass: eq13_margin > 0.0,
        },
        Condition {
            name: "lambda1",
            description: "lambda1 > 0 (filter tracking-error decay)",
            value: lambda1,
            pass: lambda1 > 0.0,
        },
        Condition {
            name: "lambda2",
            description: "lambda2 > 0 (position-error decay)",
            value: lambda2,
            pass: lambda2 > 0.0,
        },
        Condition {
            name: "lambda3",
            description: "lambda3 > 0 (requires alpha_f > alpha_x)",
            value: lambda3,
            pass: lambda3 > 0.0,
        },
        Condition {
            name: "lambda4",
            description: "lambda4 > 0 (requires gamma3 < 1/(4*alpha1^2))",
            value: lambda4,
            pass: lambda4 > 0.0,
        },
        Condition {
            name: "lambda5",
            description: "lambda5 > 0 (auxiliary rate-error decay)",
            value: lambda5,
            pass: lambda5 > 0.0,
        },
        Condition {
            name: "lambda6",
            description: "lambda6 > 0 (attitude rate damping vs cross term)",
            value: lambda6,
            pass: lambda6 > 0.0,
        },
        Condition {
            name: "lambda7",
            description: "lambda7 > 0 (attitude stiffness vs force coupling)",
            value: lambda7,
            pass: lambda7 > 0.0,
        },
        Condition {
            name: "beta_bar",
            description: "beta_bar > 0 (attitude-loop exponential rate)",
            value: beta_bar,
            pass: beta_bar > 0.0,
        },
        Condition {
            name: "e_alpha_bar",
            description: "e_alpha_bar >= sqrt(2*(D/lambda_V)/m) (self-consistent domain)",
            value: ci.e_alpha_bar - e_alpha_bar_required,
            pass: ci.e_alpha_bar >= e_alpha_bar_required,
        },
    ];

    CertificateReport {
        alpha1,
        alpha2,
        alpha1_proj,
        alpha2_proj,
        alpha3,
        alpha4,
        alpha5,
        alpha6,
        alpha7,
        rho03,
        lambda,
        lambda_v,
        d,
        ultimate_bound,
        beta_bar,
        e_alpha_bar_required,
        roa: RegionOfAttraction {
            psi_max: 2.0,
            omega_err_max: (4.0 * g.k_r / ci.inertia_max).sqrt(),
        },
        conditions,
    }
}

/// Conservative `(L1, rho02)` pair from the commanded-attitude rate bound
/// chain, sampled over a grid of error norms with `‖e_α‖ ≤ e_alpha_bar` and
/// the saturated feedback terms at worst case. The slope this produces is
/// honest but very pessimistic; measured pairs from representative runs are
/// usually orders of magnitude smaller.
pub fn estimate_l1_rho02(
    mass: f64,
    gravity: f64,
    gains: &ControllerGains,
    estimator: &EstimatorGains,
    bounds: &TrajectoryBounds,
    e_alpha_bar: f64,
) -> Result<(f64, f64), AnalysisError> {
    if estimator.h2 <= 0.0 {
        return Err(AnalysisError::EstimateUnavailable("h2 > 0".into()));
    }
    let alpha2 = mass * (gravity - bounds.h2 - 2.0 - gains.k_alpha);
    if alpha2 <= 0.0 {
        return Err(AnalysisError::EstimateUnavailable(
            "a positive lower force bound (thrust_margin must pass)".into(),
        ));
    }
    // filter-error sup norms entering the projection rate (steady parts)
    let a4 = estimator.gamma1 * bounds.h3;
    let a5 = estimator.gamma2 / estimator.gamma1 * a4;
    let a6 = (8.0 * (a4 * a4 + a5 * a5)
        + 2.0 * estimator.gamma21 * estimator.gamma21 * bounds.h3 * bounds.h3)
        .sqrt();
    let proj_factor = 1.0 + (estimator.eps0 + 2.0 * estimator.h2) / (estimator.h2 * estimator.h2);
    let geom = 4.0 + 4.0 / gains.delta_a;

    let fd_rate = |e_a: f64, tx: f64, tf: f64| -> f64 {
        mass / estimator.gamma21 * proj_factor * (a6 + a5 + a4)
            + 2.0 * mass * (e_a + gains.alpha_x * tx + tf)
            + mass * gains.k_alpha * gains.k_alpha * e_a
            + mass * gains.k_alpha * tx
            + mass * gains.k_alpha * gains.alpha_f * tf
    };
    let chain = |e_a: f64, tx: f64, tf: f64| -> f64 {
        geom * fd_rate(e_a, tx, tf) / alpha2 + 4.0 / gains.delta_a * bounds.h5
    };

    let sqrt3 = 3.0_f64.sqrt();
    let n = 32;
    let mut l1: f64 = 0.0;
    let mut rho02: f64 = 0.0;
    for i in 0..=n {
        let tx = sqrt3 * i as f64 / n as f64;
        for j in 0..=n {
            let tf = sqrt3 * j as f64 / n as f64;
            rho02 = rho02.max(chain(0.0, tx, tf));
            // affine in ‖e_α‖: the secant over the domain is the slope
            let slope = (chain(e_alpha_bar, tx, tf) - chain(0.0, tx, tf)) / e_alpha_bar;
            l1 = l1.max(slope);
        }
    }
    Ok((l1, rho02))
}

/// Instantaneous loop errors assembled by the simulation for the Lyapunov
/// evaluation and the monitors.
#[derive(Debug, Clone)]
pub struct LoopErrors {
    pub e_x: Vector3<f64>,
    pub e_alpha: Vector3<f64>,
    pub e_f: Vector3<f64>,
    /// Attitude tracking error pair of `(R, R_d)`.
    pub e_r_d: Vector3<f64>,
    pub psi_r_rd: f64,
    pub e_omega_d: Vector3<f64>,
    /// Auxiliary filter error pair of `(R_d, R_c)`.
    pub e_r_dc: Vector3<f64>,
    pub psi_rd_rc: f64,
    pub e_omega_dc: Vector3<f64>,
}

impl LoopErrors {
    /// Assemble all error coordinates from the plant/controller states.
    pub fn assemble(
        state: &crate::dynamics::MultirotorState,
        afs: &AttitudeFilterState,
        r_c: &RotationMatrix,
        e_x: &Vector3<f64>,
        e_alpha: &Vector3<f64>,
        e_f: &Vector3<f64>,
        gains: &ControllerGains,
    ) -> Result<Self, AnalysisError> {
        let track = config_error(&state.attitude, &afs.r_d)?;
        let aux = config_error(&afs.r_d, r_c)?;
        let e_omega_d =
            angular_velocity_error(&state.attitude, &state.omega, &afs.r_d, &afs.omega_d);
        let e_omega_dc = afs.omega_d + aux.e_r / gains.gamma3;
        Ok(LoopErrors {
            e_x: *e_x,
            e_alpha: *e_alpha,
            e_f: *e_f,
            e_r_d: track.e_r,
            psi_r_rd: track.psi,
            e_omega_d,
            e_r_dc: aux.e_r,
            psi_rd_rc: aux.psi,
            e_omega_dc,
        })
    }

    /// Stacked squared error norm `‖e₁‖² + ‖e₂‖² + ‖e₃‖²`.
    pub fn norm_sq(&self) -> f64 {
        self.e_r_d.norm_squared()
            + self.e_omega_d.norm_squared()
            + self.e_r_dc.norm_squared()
            + self.e_omega_dc.norm_squared()
            + self.e_alpha.norm_squared()
            + crate::so3::tanh_vec(&self.e_x).norm_squared()
            + crate::so3::tanh_vec(&self.e_f).norm_squared()
    }
}

/// Values of the composite Lyapunov function and its three parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovValues {
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    pub v: f64,
    pub e_norm_sq: f64,
}

/// Evaluate the Lyapunov candidates on the assembled errors.
///
/// `v2` carries the unit-weighted rate term as printed in the source
/// analysis; [`v2_inertia_weighted`] provides the `J`-weighted variant whose
/// quadratic sandwich actually holds for light vehicles.
pub fn lyapunov_eval(errors: &LoopErrors, mass: f64, k_r: f64, c1: f64) -> LyapunovValues {
    let tanh_ef = crate::so3::tanh_vec(&errors.e_f);
    let v3 = mass / 2.0 * errors.e_alpha.norm_squared()
        + mass
            * (errors.e_x.x.cosh().ln() + errors.e_x.y.cosh().ln() + errors.e_x.z.cosh().ln())
        + mass / 2.0 * tanh_ef.norm_squared();
    let v4 = errors.psi_rd_rc + 0.5 * errors.e_omega_dc.norm_squared();
    let v2 = 0.5 * errors.e_omega_d.norm_squared()
        + k_r * errors.psi_r_rd
        + c1 * errors.e_omega_d.dot(&errors.e_r_d);
    LyapunovValues {
        v2,
        v3,
        v4,
        v: v2 + v3 + v4,
        e_norm_sq: errors.norm_sq(),
    }
}

/// `½·e_ΩᵀJ·e_Ω + k_R·Ψ + c₁·e_Ωᵀe_R` — the inertia-weighted attitude
/// Lyapunov candidate, bounded by the quadratic forms
/// `zᵀ[[k_R, ∓c₁/2], [∓c₁/2, λ(J)/2]]z` in `z = (‖e_R‖, ‖e_Ω‖)`.
pub fn v2_inertia_weighted(
    e_r: &Vector3<f64>,
    e_omega: &Vector3<f64>,
    inertia: &nalgebra::Matrix3<f64>,
    psi: f64,
    k_r: f64,
    c1: f64,
) -> f64 {
    0.5 * e_omega.dot(&(inertia * e_omega)) + k_r * psi + c1 * e_omega.dot(e_r)
}

/// Finite-difference estimate of the commanded-attitude angular rate from
/// two consecutive samples.
pub fn omega_c_diagnostic(
    r_c_prev: &RotationMatrix,
    r_c_next: &RotationMatrix,
    dt: f64,
) -> Result<Vector3<f64>, AnalysisError> {
    let rel = &r_c_prev.transpose() * r_c_next;
    let t = 1.0 + rel.matrix().trace();
    if t <= crate::so3::EPS_PSI {
        return Err(AnalysisError::NearAntipodal(So3Error::NearAntipodal {
            trace_term: t,
        }));
    }
    Ok(rel.log() / dt)
}

/// Identifiers for the monitored inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MonitorId {
    ForceLower,
    ForceUpper,
    ForceGap,
    FilterVelocity,
    FilterAccelRaw,
    FilterAccelSmoothed,
    FilterAccelProjected,
    LyapunovDecrease,
    PsiTracking,
    PsiAuxiliary,
}

impl MonitorId {
    pub fn label(&self) -> &'static str {
        match self {
            MonitorId::ForceLower => "force_lower",
            MonitorId::ForceUpper => "force_upper",
            MonitorId::ForceGap => "force_gap",
            MonitorId::FilterVelocity => "filter_velocity",
            MonitorId::FilterAccelRaw => "filter_accel_raw",
            MonitorId::FilterAccelSmoothed => "filter_accel_smoothed",
            MonitorId::FilterAccelProjected => "filter_accel_projected",
            MonitorId::LyapunovDecrease => "lyapunov_decrease",
            MonitorId::PsiTracking => "psi_tracking",
            MonitorId::PsiAuxiliary => "psi_auxiliary",
        }
    }
}

/// One evaluated inequality: satisfied iff `lhs ≤ rhs + slack_tolerance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub id: MonitorId,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Filter errors derived from the oracle channel for the monitor step.
#[derive(Debug, Clone, Copy)]
pub struct FilterErrors {
    pub e_gx: f64,
    pub e_xdd: f64,
    pub e_gv: f64,
    pub e_g1: f64,
}

impl FilterErrors {
    pub fn from_oracle(
        oracle: &TrajectoryOracle,
        output: &crate::estimator::EstimatorOutput,
        gamma1: f64,
    ) -> Self {
        let g_xd_dot = (oracle.xd_dot - output.g_xd) / gamma1;
        FilterErrors {
            e_gx: (oracle.xd_dot - output.g_xd).norm(),
            e_xdd: (oracle.xd_ddot - g_xd_dot).norm(),
            e_gv: (g_xd_dot - output.g_vd).norm(),
            e_g1: (oracle.xd_ddot - output.g1).norm(),
        }
    }
}

/// Numerical slack applied to every monitored inequality.
pub const MONITOR_SLACK: f64 = 1e-6;
/// Band above the ultimate bound inside which the decrease of `V` is not
/// asserted (finite-difference noise at the boundary).
pub const DECREASE_MARGIN: f64 = 0.05;

/// Accumulating run-time monitor. Feed it once per step; it evaluates the
/// force and filter inequalities pointwise, the sub-level conditions on
/// both configuration errors, and the decrease of `V` (by central
/// differences, one step delayed) wherever the squared error norm exceeds
/// the ultimate bound by the margin band.
#[derive(Debug, Clone)]
pub struct Monitors {
    cert: CertificateReport,
    dt: f64,
    /// (V, e_norm_sq) of the two previous steps for the central difference.
    history: [(f64, f64); 2],
    steps_seen: usize,
    pub violation_count: u64,
    /// Minimum of `rhs − lhs` seen per inequality.
    pub min_slack: Vec<(MonitorId, f64)>,
}

impl Monitors {
    pub fn new(cert: CertificateReport, dt: f64) -> Self {
        let ids = [
            MonitorId::ForceLower,
            MonitorId::ForceUpper,
            MonitorId::ForceGap,
            MonitorId::FilterVelocity,
            MonitorId::FilterAccelRaw,
            MonitorId::FilterAccelSmoothed,
            MonitorId::FilterAccelProjected,
            MonitorId::LyapunovDecrease,
            MonitorId::PsiTracking,
            MonitorId::PsiAuxiliary,
        ];
        Monitors {
            cert,
            dt,
            history: [(0.0, 0.0); 2],
            steps_seen: 0,
            violation_count: 0,
            min_slack: ids.iter().map(|&id| (id, f64::INFINITY)).collect(),
        }
    }

    pub fn certificate(&self) -> &CertificateReport {
        &self.cert
    }

    fn record(&mut self, checks: &mut Vec<InequalityCheck>, id: MonitorId, lhs: f64, rhs: f64) {
        let satisfied = lhs <= rhs + MONITOR_SLACK;
        if !satisfied {
            self.violation_count += 1;
        }
        let slack = rhs - lhs;
        for entry in &mut self.min_slack {
            if entry.0 == id {
                entry.1 = entry.1.min(slack);
            }
        }
        checks.push(InequalityCheck {
            id,
            lhs,
            rhs,
            satisfied,
        });
    }

    /// Evaluate every monitored inequality for the current step.
    pub fn step(
        &mut self,
        errors: &LoopErrors,
        lyap: &LyapunovValues,
        f_d_norm: f64,
        delta_f_norm: f64,
        filter_errors: &FilterErrors,
    ) -> Vec<InequalityCheck> {
        let mut checks = Vec::with_capacity(10);
        let (a1p, a2p, a3, a4, a5, a6) = (
            self.cert.alpha1_proj,
            self.cert.alpha2_proj,
            self.cert.alpha3,
            self.cert.alpha4,
            self.cert.alpha5,
            self.cert.alpha6,
        );

        self.record(&mut checks, MonitorId::ForceLower, a2p, f_d_norm);
        self.record(&mut checks, MonitorId::ForceUpper, f_d_norm, a1p);
        let gap_rhs = 2.0 * a1p * (errors.e_r_dc.norm() + errors.e_r_d.norm());
        self.record(&mut checks, MonitorId::ForceGap, delta_f_norm, gap_rhs);

        self.record(&mut checks, MonitorId::FilterVelocity, filter_errors.e_gx, a3);
        self.record(&mut checks, MonitorId::FilterAccelRaw, filter_errors.e_xdd, a4);
        self.record(&mut checks, MonitorId::FilterAccelSmoothed, filter_errors.e_gv, a5);
        self.record(&mut checks, MonitorId::FilterAccelProjected, filter_errors.e_g1, a6);

        self.record(&mut checks, MonitorId::PsiTracking, errors.psi_r_rd, 2.0);
        self.record(&mut checks, MonitorId::PsiAuxiliary, errors.psi_rd_rc, 2.0);

        // central-difference V̇ at the previous step, asserted negative only
        // outside the margin band around the ultimate bound
        if self.steps_seen >= 2 {
            let (v_prev2, _) = self.history[0];
            let (_, e_sq_prev) = self.history[1];
            let threshold = (1.0 + DECREASE_MARGIN) * self.cert.ultimate_bound;
            if e_sq_prev > threshold {
                let v_dot = (lyap.v - v_prev2) / (2.0 * self.dt);
                self.record(&mut checks, MonitorId::LyapunovDecrease, v_dot, 0.0);
            }
        }
        self.history[0] = self.history[1];
        self.history[1] = (lyap.v, lyap.e_norm_sq);
        self.steps_seen += 1;
        checks
    }

    pub fn slack_for(&self, id: MonitorId) -> f64 {
        self.min_slack
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, s)| *s)
            .unwrap_or(f64::INFINITY)
    }
}
