//! Reference trajectories. The controller-facing sample carries only the
//! desired position and heading; true derivatives travel on a separate
//! oracle channel that only the analysis monitors read.

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("bad trajectory parameters: {0}")]
    BadParams(String),
}

/// Sup-norms of the reference derivatives: orders 1–4 of the position and
/// 1–2 of the heading direction. All finite and non-negative (a hover
/// reference legitimately has all-zero bounds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryBounds {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    pub h5: f64,
    pub h6: f64,
}

impl TrajectoryBounds {
    fn validate(self) -> Result<Self, TrajectoryError> {
        let all = [self.h1, self.h2, self.h3, self.h4, self.h5, self.h6];
        if all.iter().all(|h| h.is_finite() && *h >= 0.0) {
            Ok(self)
        } else {
            Err(TrajectoryError::BadParams(
                "derivative bounds must be finite and non-negative".into(),
            ))
        }
    }
}

/// True derivatives of the reference. Diagnostic channel: monitors and
/// oracle-mode runs use it, the control law itself never sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOracle {
    pub xd_dot: Vector3<f64>,
    pub xd_ddot: Vector3<f64>,
    pub xd_dddot: Vector3<f64>,
    pub xbd_dot: Vector3<f64>,
}

/// One sample of the reference: time, desired position, desired heading
/// direction (unit, planar).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x_d: Vector3<f64>,
    pub x_bd: Vector3<f64>,
    oracle: Option<TrajectoryOracle>,
}

impl TrajectorySample {
    /// Diagnostic accessor for the hidden derivative channel. Not for
    /// control-law use.
    pub fn oracle(&self) -> Option<&TrajectoryOracle> {
        self.oracle.as_ref()
    }
}

/// Built-in reference trajectory providers. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    /// Constant position and heading.
    Hover { position: Vector3<f64>, heading: f64 },
    /// Planar circle of radius `r` at angular rate `omega`, heading swept
    /// at the same rate.
    Circle {
        center: Vector3<f64>,
        radius: f64,
        omega: f64,
    },
    /// Planar figure-eight `[a·sin(ωt), (a/2)·sin(2ωt)]` at fixed heading.
    Lemniscate {
        center: Vector3<f64>,
        half_width: f64,
        omega: f64,
        heading: f64,
    },
    /// Piecewise-constant position jump at `t_step`. Violates the bounded
    /// derivative assumption; carried for negative-control runs.
    Step {
        before: Vector3<f64>,
        after: Vector3<f64>,
        t_step: f64,
        heading: f64,
    },
}

fn heading_dir(psi: f64) -> Vector3<f64> {
    Vector3::new(psi.cos(), psi.sin(), 0.0)
}

impl Trajectory {
    pub fn hover(position: Vector3<f64>, heading: f64) -> Self {
        Trajectory::Hover { position, heading }
    }

    pub fn circle(center: Vector3<f64>, radius: f64, omega: f64) -> Result<Self, TrajectoryError> {
        if radius <= 0.0 || omega == 0.0 {
            return Err(TrajectoryError::BadParams(format!(
                "circle needs r > 0 and ω ≠ 0 (r = {radius}, ω = {omega})"
            )));
        }
        Ok(Trajectory::Circle {
            center,
            radius,
            omega,
        })
    }

    pub fn lemniscate(
        center: Vector3<f64>,
        half_width: f64,
        omega: f64,
        heading: f64,
    ) -> Result<Self, TrajectoryError> {
        if half_width <= 0.0 || omega == 0.0 {
            return Err(TrajectoryError::BadParams(format!(
                "lemniscate needs a > 0 and ω ≠ 0 (a = {half_width}, ω = {omega})"
            )));
        }
        Ok(Trajectory::Lemniscate {
            center,
            half_width,
            omega,
            heading,
        })
    }

    pub fn step(
        before: Vector3<f64>,
        after: Vector3<f64>,
        t_step: f64,
        heading: f64,
    ) -> Result<Self, TrajectoryError> {
        if t_step < 0.0 {
            return Err(TrajectoryError::BadParams("t_step must be ≥ 0".into()));
        }
        Ok(Trajectory::Step {
            before,
            after,
            t_step,
            heading,
        })
    }

    /// Whether the bounded-derivative assumption holds for this reference.
    pub fn derivatives_bounded(&self) -> bool {
        !matches!(self, Trajectory::Step { .. })
    }

    /// Exact derivative sup-norms for the smooth kinds; `None` for the step
    /// reference, whose derivative is unbounded at the jump.
    pub fn bounds(&self) -> Option<TrajectoryBounds> {
        match *self {
            Trajectory::Hover { .. } => Some(TrajectoryBounds {
                h1: 0.0,
                h2: 0.0,
                h3: 0.0,
                h4: 0.0,
                h5: 0.0,
                h6: 0.0,
            }),
            Trajectory::Circle { radius, omega, .. } => {
                let w = omega.abs();
                Some(TrajectoryBounds {
                    h1: radius * w,
                    h2: radius * w * w,
                    h3: radius * w.powi(3),
                    h4: radius * w.powi(4),
                    h5: w,
                    h6: w * w,
                })
            }
            // Maxima of ‖dⁿx_d/dtⁿ‖ for [a·sin u, (a/2)·sin 2u], u = ωt:
            // the squared norms are quadratics in sin²u or cos²u, maximized
            // in closed form (√2, 17/8, √17, 257/32 times a·ωⁿ).
            Trajectory::Lemniscate {
                half_width, omega, ..
            } => {
                let a = half_width;
                let w = omega.abs();
                Some(TrajectoryBounds {
                    h1: 2.0_f64.sqrt() * a * w,
                    h2: 17.0 / 8.0 * a * w * w,
                    h3: 17.0_f64.sqrt() * a * w.powi(3),
                    h4: 257.0 / 32.0 * a * w.powi(4),
                    h5: 0.0,
                    h6: 0.0,
                })
            }
            Trajectory::Step { .. } => None,
        }
        .map(|b| b.validate().expect("builtin bounds are valid"))
    }

    /// Sample the reference at `t ≥ 0`.
    pub fn sample(&self, t: f64) -> TrajectorySample {
        debug_assert!(t >= 0.0);
        match *self {
            Trajectory::Hover { position, heading } => TrajectorySample {
                t,
                x_d: position,
                x_bd: heading_dir(heading),
                oracle: Some(TrajectoryOracle {
                    xd_dot: Vector3::zeros(),
                    xd_ddot: Vector3::zeros(),
                    xd_dddot: Vector3::zeros(),
                    xbd_dot: Vector3::zeros(),
                }),
            },
            Trajectory::Circle {
                center,
                radius,
                omega,
            } => {
                let (s, c) = (omega * t).sin_cos();
                let r = radius;
                let w = omega;
                TrajectorySample {
                    t,
                    x_d: center + Vector3::new(r * c, r * s, 0.0),
                    x_bd: Vector3::new(c, s, 0.0),
                    oracle: Some(TrajectoryOracle {
                        xd_dot: Vector3::new(-r * w * s, r * w * c, 0.0),
                        xd_ddot: Vector3::new(-r * w * w * c, -r * w * w * s, 0.0),
                        xd_dddot: Vector3::new(r * w.powi(3) * s, -r * w.powi(3) * c, 0.0),
                        xbd_dot: Vector3::new(-w * s, w * c, 0.0),
                    }),
                }
            }
            Trajectory::Lemniscate {
                center,
                half_width,
                omega,
                heading,
            } => {
                let a = half_width;
                let w = omega;
                let u = w * t;
                let (s1, c1) = u.sin_cos();
                let (s2, c2) = (2.0 * u).sin_cos();
                TrajectorySample {
                    t,
                    x_d: center + Vector3::new(a * s1, a / 2.0 * s2, 0.0),
                    x_bd: heading_dir(heading),
                    oracle: Some(TrajectoryOracle {
                        xd_dot: Vector3::new(a * w * c1, a * w * c2, 0.0),
                        xd_ddot: Vector3::new(-a * w * w * s1, -2.0 * a * w * w * s2, 0.0),
                        xd_dddot: Vector3::new(
                            -a * w.powi(3) * c1,
                            -4.0 * a * w.powi(3) * c2,
                            0.0,
                        ),
                        xbd_dot: Vector3::zeros(),
                    }),
                }
            }
            Trajectory::Step {
                before,
                after,
                t_step,
                heading,
            } => TrajectorySample {
                t,
                x_d: if t < t_step { before } else { after },
                x_bd: heading_dir(heading),
                // derivatives almost everywhere (undefined at the jump)
                oracle: Some(TrajectoryOracle {
                    xd_dot: Vector3::zeros(),
                    xd_ddot: Vector3::zeros(),
                    xd_dddot: Vector3::zeros(),
                    xbd_dot: Vector3::zeros(),
                }),
            },
        }
    }
}
