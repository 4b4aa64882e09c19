//! Scenario configuration: TOML files with `[vehicle]`, `[gains]`,
//! `[analysis]`, `[trajectory]`, `[sim]`, and `[initial]` sections, resolved
//! into a ready-to-run [`SimSetup`].

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;
use thiserror::Error;

use crate::analysis::{estimate_l1_rho02, CertificateInputs};
use crate::controller::{ControllerGains, ThrustStrategy};
use crate::dynamics::{MixerConfig, MultirotorState, VehicleParams};
use crate::estimator::EstimatorGains;
use crate::sim::{RunMode, SimSetup};
use crate::so3::exp_so3;
use crate::trajectory::{Trajectory, TrajectoryBounds};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub vehicle: VehicleSection,
    pub gains: GainsSection,
    pub analysis: AnalysisSection,
    pub trajectory: TrajectorySection,
    pub sim: SimSection,
    #[serde(default)]
    pub initial: Option<InitialSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    pub mass: f64,
    /// Either a 3-element diagonal or 9 row-major entries.
    pub inertia: Vec<f64>,
    pub gravity: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub k_alpha: f64,
    pub alpha_x: f64,
    pub alpha_f: f64,
    pub k_r: f64,
    pub k_omega: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    #[serde(default = "default_delta_a")]
    pub delta_a: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma21: f64,
    pub eps0: f64,
    /// Projection radius for the acceleration estimate; defaults to the
    /// trajectory's second-derivative bound.
    pub h2: Option<f64>,
}

fn default_delta_a() -> f64 {
    0.1
}

/// Number, or the literal string `"estimate"` to derive the value from the
/// conservative bound chain.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumberOrEstimate {
    Number(f64),
    Keyword(String),
}

impl NumberOrEstimate {
    fn resolve(&self, what: &str) -> Result<Option<f64>, ConfigError> {
        match self {
            NumberOrEstimate::Number(x) => Ok(Some(*x)),
            NumberOrEstimate::Keyword(s) if s == "estimate" => Ok(None),
            NumberOrEstimate::Keyword(s) => {
                Err(invalid(format!("{what}: expected a number or \"estimate\", got {s:?}")))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub c1: f64,
    pub l1: NumberOrEstimate,
    pub rho02: NumberOrEstimate,
    pub e_alpha_bar: f64,
    /// Declared initial filter-error norms (e_gx, e_ẍd, e_gv, e_g1);
    /// zeros declare the steady-state certificate.
    #[serde(default)]
    pub initial_filter_errors: [f64; 4],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub kind: String,
    #[serde(default)]
    pub position: Option<[f64; 3]>,
    #[serde(default)]
    pub center: Option<[f64; 3]>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub heading: Option<f64>,
    #[serde(default)]
    pub before: Option<[f64; 3]>,
    #[serde(default)]
    pub after: Option<[f64; 3]>,
    #[serde(default)]
    pub t_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub duration: f64,
    pub run_mode: String,
    pub thrust_strategy: String,
    pub monitors: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub position: Option<[f64; 3]>,
    pub velocity: Option<[f64; 3]>,
    /// Rotation vector (axis times angle, radians).
    pub attitude: Option<[f64; 3]>,
    pub omega: Option<[f64; 3]>,
}

fn vec3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

impl ScenarioConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn trajectory(&self) -> Result<Trajectory, ConfigError> {
        let t = &self.trajectory;
        let heading = t.heading.unwrap_or(0.0);
        let named = |field: Option<[f64; 3]>, name: &str| {
            field.ok_or_else(|| invalid(format!("trajectory.{name} required for kind {:?}", t.kind)))
        };
        let scalar = |field: Option<f64>, name: &str| {
            field.ok_or_else(|| invalid(format!("trajectory.{name} required for kind {:?}", t.kind)))
        };
        match t.kind.as_str() {
            "hover" => Ok(Trajectory::hover(vec3(named(t.position, "position")?), heading)),
            "circle" => Trajectory::circle(
                vec3(t.center.unwrap_or([0.0; 3])),
                scalar(t.radius, "radius")?,
                scalar(t.omega, "omega")?,
            )
            .map_err(|e| invalid(e.to_string())),
            "lemniscate" => Trajectory::lemniscate(
                vec3(t.center.unwrap_or([0.0; 3])),
                scalar(t.half_width, "half_width")?,
                scalar(t.omega, "omega")?,
                heading,
            )
            .map_err(|e| invalid(e.to_string())),
            "step" => Trajectory::step(
                vec3(named(t.before, "before")?),
                vec3(named(t.after, "after")?),
                scalar(t.t_step, "t_step")?,
                heading,
            )
            .map_err(|e| invalid(e.to_string())),
            other => Err(invalid(format!(
                "unknown trajectory kind {other:?} (hover|circle|lemniscate|step)"
            ))),
        }
    }

    fn inertia(&self) -> Result<Matrix3<f64>, ConfigError> {
        match self.vehicle.inertia.len() {
            3 => Ok(Matrix3::from_diagonal(&vec3([
                self.vehicle.inertia[0],
                self.vehicle.inertia[1],
                self.vehicle.inertia[2],
            ]))),
            9 => Ok(Matrix3::from_row_slice(&self.vehicle.inertia)),
            n => Err(invalid(format!("vehicle.inertia needs 3 or 9 entries, got {n}"))),
        }
    }

    /// Resolve the full setup; validates gains, derives defaulted fields,
    /// and resolves `"estimate"` analysis entries.
    pub fn build(&self) -> Result<SimSetup, ConfigError> {
        let params = VehicleParams::new(
            self.vehicle.mass,
            self.inertia()?,
            self.vehicle.gravity,
            MixerConfig::quad_x_unit(),
        )
        .map_err(|e| invalid(e.to_string()))?;

        let trajectory = self.trajectory()?;
        let bounds = trajectory.bounds().unwrap_or(TrajectoryBounds {
            h1: 0.0,
            h2: 0.0,
            h3: 0.0,
            h4: 0.0,
            h5: 0.0,
            h6: 0.0,
        });

        let g = &self.gains;
        let gains = ControllerGains {
            k_alpha: g.k_alpha,
            alpha_x: g.alpha_x,
            alpha_f: g.alpha_f,
            k_r: g.k_r,
            k_omega: g.k_omega,
            gamma3: g.gamma3,
            gamma4: g.gamma4,
            delta_a: g.delta_a,
        };
        gains.validate().map_err(|e| invalid(e.to_string()))?;

        let h2 = match g.h2 {
            Some(h) => h,
            None if bounds.h2 > 0.0 => bounds.h2,
            None => {
                return Err(invalid(
                    "gains.h2 must be given explicitly when the trajectory's \
                     second-derivative bound is zero or unavailable",
                ))
            }
        };
        let estimator_gains = EstimatorGains {
            gamma1: g.gamma1,
            gamma2: g.gamma2,
            gamma21: g.gamma21,
            eps0: g.eps0,
            h2,
        };
        estimator_gains.validate().map_err(|e| invalid(e.to_string()))?;

        if !(self.sim.dt > 0.0) {
            return Err(invalid("sim.dt must be positive"));
        }
        if self.sim.duration <= self.sim.dt {
            return Err(invalid("sim.duration must exceed sim.dt"));
        }
        let run_mode = match self.sim.run_mode.as_str() {
            "oracle" => RunMode::Oracle,
            "deployment" => RunMode::Deployment,
            other => return Err(invalid(format!("sim.run_mode {other:?} (oracle|deployment)"))),
        };
        let thrust_strategy = match self.sim.thrust_strategy.as_str() {
            "lee2010" => ThrustStrategy::Lee2010,
            "kar" => ThrustStrategy::KarMagnitude,
            "proposed" => ThrustStrategy::ProposedHalfAngle,
            other => {
                return Err(invalid(format!(
                    "sim.thrust_strategy {other:?} (lee2010|kar|proposed)"
                )))
            }
        };
        let monitors_on = match self.sim.monitors.as_str() {
            "on" => true,
            "off" => false,
            other => return Err(invalid(format!("sim.monitors {other:?} (on|off)"))),
        };

        let a = &self.analysis;
        if a.c1 <= 0.0 || a.e_alpha_bar <= 0.0 {
            return Err(invalid("analysis.c1 and analysis.e_alpha_bar must be positive"));
        }
        let l1_cfg = a.l1.resolve("analysis.l1")?;
        let rho02_cfg = a.rho02.resolve("analysis.rho02")?;
        let (l1, rho02) = if l1_cfg.is_none() || rho02_cfg.is_none() {
            let (l1_est, rho02_est) = estimate_l1_rho02(
                params.mass,
                params.gravity,
                &gains,
                &estimator_gains,
                &bounds,
                a.e_alpha_bar,
            )
            .map_err(|e| invalid(e.to_string()))?;
            (l1_cfg.unwrap_or(l1_est), rho02_cfg.unwrap_or(rho02_est))
        } else {
            (l1_cfg.unwrap(), rho02_cfg.unwrap())
        };
        if l1 <= 0.0 || rho02 <= 0.0 {
            return Err(invalid("analysis.l1 and analysis.rho02 must be positive"));
        }

        let certificate_inputs = CertificateInputs {
            mass: params.mass,
            gravity: params.gravity,
            inertia_min: params.inertia_min_eig(),
            inertia_max: params.inertia_max_eig(),
            gains,
            estimator: estimator_gains,
            bounds,
            c1: a.c1,
            l1,
            rho02,
            e_alpha_bar: a.e_alpha_bar,
            initial_filter_errors: a.initial_filter_errors,
        };

        let start = trajectory.sample(0.0);
        let init = self.initial.clone().unwrap_or(InitialSection {
            position: None,
            velocity: None,
            attitude: None,
            omega: None,
        });
        let initial = MultirotorState {
            position: init.position.map(vec3).unwrap_or(start.x_d),
            velocity: init.velocity.map(vec3).unwrap_or_else(Vector3::zeros),
            attitude: exp_so3(&init.attitude.map(vec3).unwrap_or_else(Vector3::zeros)),
            omega: init.omega.map(vec3).unwrap_or_else(Vector3::zeros),
        };

        Ok(SimSetup {
            params,
            gains,
            estimator_gains,
            trajectory,
            initial,
            dt: self.sim.dt,
            duration: self.sim.duration,
            run_mode,
            thrust_strategy,
            monitors_on,
            certificate_inputs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
[vehicle]
mass = 0.3
inertia = [0.005, 0.005, 0.009]
gravity = 9.81

[gains]
k_alpha = 6.0
alpha_x = 0.2
alpha_f = 0.3
k_r = 300.0
k_omega = 2.0
gamma3 = 4.5e-3
gamma4 = 1e-5
delta_a = 0.1
gamma1 = 4.0
gamma2 = 4.0
gamma21 = 4.0
eps0 = 0.1

[analysis]
c1 = 0.004
l1 = 0.6
rho02 = 0.6
e_alpha_bar = 18.0

[trajectory]
kind = "circle"
center = [0.0, 0.0, 0.0]
radius = 1.0
omega = 0.5

[sim]
dt = 2e-5
duration = 60.0
run_mode = "oracle"
thrust_strategy = "proposed"
monitors = "on"

[initial]
position = [1.0, 0.0, 0.0]
velocity = [0.0, 0.5, 0.0]
omega = [0.0, 0.0, 0.5]
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ScenarioConfig::parse(SAMPLE).unwrap();
        let setup = cfg.build().unwrap();
        assert_eq!(setup.params.mass, 0.3);
        // h2 defaulted from the circle bound r·ω²
        assert!((setup.estimator_gains.h2 - 0.25).abs() < 1e-15);
        assert_eq!(setup.run_mode, RunMode::Oracle);
        assert_eq!(setup.initial.position, Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn estimate_keyword_resolves() {
        let text = SAMPLE
            .replace("l1 = 0.6", "l1 = \"estimate\"")
            .replace("rho02 = 0.6", "rho02 = \"estimate\"");
        let cfg = ScenarioConfig::parse(&text).unwrap();
        let setup = cfg.build().unwrap();
        // chain-derived slope is deliberately conservative
        assert!(setup.certificate_inputs.l1 > 10.0);
        assert!(setup.certificate_inputs.rho02 > 0.0);
    }

    #[test]
    fn hover_requires_explicit_h2() {
        let text = SAMPLE.replace(
            "kind = \"circle\"\ncenter = [0.0, 0.0, 0.0]\nradius = 1.0\nomega = 0.5",
            "kind = \"hover\"\nposition = [0.0, 0.0, -1.0]",
        );
        let cfg = ScenarioConfig::parse(&text).unwrap();
        assert!(cfg.build().is_err());
        let with_h2 = text.replace("eps0 = 0.1", "eps0 = 0.1\nh2 = 0.1");
        let cfg = ScenarioConfig::parse(&with_h2).unwrap();
        assert!(cfg.build().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("dt = 2e-5", "dt = -1.0"),
            ("run_mode = \"oracle\"", "run_mode = \"psychic\""),
            ("k_alpha = 6.0", "k_alpha = -6.0"),
            ("thrust_strategy = \"proposed\"", "thrust_strategy = \"none\""),
        ] {
            let text = SAMPLE.replace(from, to);
            let cfg = ScenarioConfig::parse(&text).unwrap();
            assert!(cfg.build().is_err(), "accepted {to}");
        }
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = SAMPLE.replace("mass = 0.3", "mass = 0.3\nwings = 2");
        assert!(ScenarioConfig::parse(&text).is_err());
    }
}
