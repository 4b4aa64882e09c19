//! Rotation-group kernel: hat/vee maps, the exponential map, attitude error
//! maps on SO(3), and the componentwise hyperbolic saturation maps.
//!
//! Everything in here is a pure function; all downstream modules (plant,
//! controller, auxiliary filters, monitors) are built on these operations.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Residual tolerance for orthogonality / determinant checks on rotations.
pub const ROT_TOL: f64 = 1e-9;

/// Guard on `1 + tr(R1ᵀR2)` below which the attitude error maps are
/// rejected instead of amplifying noise. The analysis lives entirely in the
/// sub-level set `Ψ < 2`, so rejecting near-antipodal pairs loses nothing.
pub const EPS_PSI: f64 = 1e-8;

/// Hyperbolic argument clamp: beyond this, `sech²` is below 1e-25 and the
/// paired `cosh²` entry would dwarf anything it multiplies.
const COSH_ARG_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum So3Error {
    /// `vee` was handed a matrix that is not skew-symmetric.
    #[error("matrix is not skew-symmetric (‖S + Sᵀ‖ = {residual:.3e})")]
    NotSkew { residual: f64 },
    /// The pair of rotations is within `EPS_PSI` of the antipodal
    /// configuration `Ψ = 2`, where `e_R` and `E` blow up.
    #[error("attitude pair near antipodal configuration (1 + tr = {trace_term:.3e})")]
    NearAntipodal { trace_term: f64 },
    /// A matrix failed the rotation-matrix invariants.
    #[error("not a rotation matrix (orthogonality residual {ortho:.3e}, det {det})")]
    NotRotation { ortho: f64, det: f64 },
}

/// A member of SO(3): orthogonal with unit determinant.
///
/// Construction either validates (`try_new`) or is closed by construction
/// (`exp_so3`, composition, `rotation_z`). The inner matrix maps body frame
/// to inertial frame throughout this crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    /// Validates the SO(3) invariants (`‖RᵀR − I‖_F < 1e-9`, `det ≈ 1`).
    pub fn try_new(m: Matrix3<f64>) -> Result<Self, So3Error> {
        let ortho = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        if ortho < ROT_TOL && (det - 1.0).abs() < ROT_TOL {
            Ok(RotationMatrix(m))
        } else {
            Err(So3Error::NotRotation { ortho, det })
        }
    }

    /// Wraps without validation. For matrices that are rotations by
    /// construction (products of validated rotations, exponentials).
    pub(crate) fn new_unchecked(m: Matrix3<f64>) -> Self {
        RotationMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> RotationMatrix {
        RotationMatrix(self.0.transpose())
    }

    /// Rotation about the inertial z-axis by `angle` radians.
    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RotationMatrix(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Frobenius residual of `RᵀR − I`.
    pub fn orthogonality_residual(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }

    /// Nearest rotation by polar decomposition (SVD with determinant fix).
    /// Used as a drift fallback by the integrator.
    pub fn project(m: &Matrix3<f64>) -> Self {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd of 3x3 always yields u");
        let vt = svd.v_t.expect("svd of 3x3 always yields v_t");
        let d = (u * vt).determinant();
        let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum()));
        RotationMatrix(u * fix * vt)
    }

    /// Body-frame rotation vector `θ` with `exp_so3(θ) = R`. The angle is
    /// recovered through `atan2`, which stays accurate toward `θ = π` where
    /// an `acos` of the trace alone loses digits.
    pub fn log(&self) -> Vector3<f64> {
        let w = vee_unchecked(&(self.0 - self.0.transpose()));
        let sin_theta = w.norm() / 2.0;
        let cos_theta = (self.0.trace() - 1.0) / 2.0;
        let theta = sin_theta.atan2(cos_theta);
        if sin_theta < 1e-8 {
            // near identity (θ ≈ 0) or near π, where the axis needs the
            // symmetric part; only the θ ≈ 0 branch is exercised here
            w / 2.0
        } else {
            w * (theta / (2.0 * sin_theta))
        }
    }
}

impl std::ops::Mul for &RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: &RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

/// Skew-symmetric matrix, skew exactly by construction from a 3-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewMatrix(Matrix3<f64>);

impl SkewMatrix {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn vee(&self) -> Vector3<f64> {
        vee_unchecked(&self.0)
    }
}

/// Configuration error `Ψ` together with the attitude error vector `e_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeErrorPair {
    /// `Ψ = 2 − √(1 + tr(R1ᵀR2))`, in `[0, 2)` on the valid domain.
    pub psi: f64,
    /// `e_R = (R1ᵀR2 − R2ᵀR1)∨ / (2√(1 + tr(R1ᵀR2)))`, `‖e_R‖ ≤ 1`.
    pub e_r: Vector3<f64>,
}

/// Skew-symmetric map: `hat(v)·w = v × w`.
pub fn hat(v: &Vector3<f64>) -> SkewMatrix {
    SkewMatrix(Matrix3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    ))
}

fn vee_unchecked(s: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)])
}

/// Inverse of the hat map. Rejects matrices whose symmetric part exceeds
/// the skewness tolerance.
pub fn vee(s: &Matrix3<f64>) -> Result<Vector3<f64>, So3Error> {
    let residual = (s + s.transpose()).norm();
    if residual >= 1e-9 {
        return Err(So3Error::NotSkew { residual });
    }
    // average the two off-diagonal copies so tiny asymmetries cancel
    Ok(Vector3::new(
        (s[(2, 1)] - s[(1, 2)]) / 2.0,
        (s[(0, 2)] - s[(2, 0)]) / 2.0,
        (s[(1, 0)] - s[(0, 1)]) / 2.0,
    ))
}

/// Exponential map via Rodrigues' formula, with a Taylor fallback below
/// `‖v‖ < 1e-8` so the `sin θ / θ` factors never hit 0/0.
pub fn exp_so3(v: &Vector3<f64>) -> RotationMatrix {
    let theta = v.norm();
    let k = hat(v).0;
    let (a, b) = if theta < 1e-8 {
        let t2 = theta * theta;
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    RotationMatrix(Matrix3::identity() + k * a + k * k * b)
}

/// Unit quaternion `(w, v)` of a rotation matrix with `w ≥ 0`, extracted by
/// the largest-pivot rule so no component suffers cancellation. Near the
/// antipodal configuration `w = cos(θ/2)` comes out with full absolute
/// accuracy, which a direct `1 + tr` evaluation cannot deliver.
fn robust_quaternion(q: &Matrix3<f64>) -> (f64, Vector3<f64>) {
    let t = q.trace();
    let (mut w, mut v);
    if t > 0.0 {
        let r = (1.0 + t).sqrt();
        w = 0.5 * r;
        v = Vector3::new(q[(2, 1)] - q[(1, 2)], q[(0, 2)] - q[(2, 0)], q[(1, 0)] - q[(0, 1)])
            / (2.0 * r);
    } else {
        // pivot on the largest diagonal entry
        let i = if q[(0, 0)] >= q[(1, 1)] && q[(0, 0)] >= q[(2, 2)] {
            0
        } else if q[(1, 1)] >= q[(2, 2)] {
            1
        } else {
            2
        };
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let r = (1.0 + q[(i, i)] - q[(j, j)] - q[(k, k)]).sqrt();
        let mut vv = Vector3::zeros();
        vv[i] = 0.5 * r;
        vv[j] = (q[(j, i)] + q[(i, j)]) / (2.0 * r);
        vv[k] = (q[(k, i)] + q[(i, k)]) / (2.0 * r);
        w = (q[(k, j)] - q[(j, k)]) / (2.0 * r);
        v = vv;
    }
    if w < 0.0 {
        w = -w;
        v = -v;
    }
    let norm = (w * w + v.norm_squared()).sqrt();
    (w / norm, v / norm)
}

/// Configuration error function `Ψ = 2 − √(1 + tr(R1ᵀR2))` and attitude
/// error vector `e_R = (R1ᵀR2 − R2ᵀR1)∨ / (2√(1 + tr))`, measuring how far
/// `r2` is from `r1`. Evaluated through the relative quaternion — with
/// `w = cos(θ/2)` those forms are `2 − 2w` and the vector part — which
/// stays accurate all the way to the antipodal guard.
pub fn config_error(r2: &RotationMatrix, r1: &RotationMatrix) -> Result<AttitudeErrorPair, So3Error> {
    let (w, v) = robust_quaternion(&(r1.0.transpose() * r2.0));
    let t = 4.0 * w * w; // = 1 + tr
    if t <= EPS_PSI {
        return Err(So3Error::NearAntipodal { trace_term: t });
    }
    Ok(AttitudeErrorPair {
        psi: 2.0 - 2.0 * w,
        e_r: v,
    })
}

/// Angular velocity error `Ω2 − R2ᵀR1·Ω1`, expressed in the `r2` body frame.
pub fn angular_velocity_error(
    r2: &RotationMatrix,
    omega2: &Vector3<f64>,
    r1: &RotationMatrix,
    omega1: &Vector3<f64>,
) -> Vector3<f64> {
    omega2 - r2.0.transpose() * r1.0 * omega1
}

/// The Jacobian `E(R2, R1)` relating `ė_R = E·e_Ω`. In quaternion form the
/// defining expression
/// `(tr(R2ᵀR1)·I − R2ᵀR1 + 2·e_R·e_Rᵀ) / (2√(1 + tr(R1ᵀR2)))`
/// collapses to `(w·I + hat(e_R))/2`, whose singular values are
/// `{1/2, 1/2, w/2}` — so the spectral norm is 1/2 exactly.
pub fn e_matrix(r2: &RotationMatrix, r1: &RotationMatrix) -> Result<Matrix3<f64>, So3Error> {
    let pair = config_error(r2, r1)?;
    let w = 1.0 - pair.psi / 2.0;
    Ok((Matrix3::identity() * w + hat(&pair.e_r).0) / 2.0)
}

/// Componentwise saturation maps of a 3-vector: `tanh(v)` and the diagonal
/// `Cosh²(v)`, `Sech²(v)` matrices.
///
/// Arguments are clamped at ±30 for the cosh/sech pair so the two diagonals
/// stay exact reciprocals without overflow; past the clamp `sech²` is below
/// 1e-25 and `tanh` is 1 to machine precision anyway.
pub fn saturation_maps(v: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>, Matrix3<f64>) {
    let tanh = v.map(f64::tanh);
    let cosh2 = v.map(|x| {
        let c = x.clamp(-COSH_ARG_CLAMP, COSH_ARG_CLAMP).cosh();
        c * c
    });
    let sech2 = cosh2.map(|c2| 1.0 / c2);
    (
        tanh,
        Matrix3::from_diagonal(&cosh2),
        Matrix3::from_diagonal(&sech2),
    )
}

/// Componentwise `tanh` on its own; the controller uses this constantly.
pub fn tanh_vec(v: &Vector3<f64>) -> Vector3<f64> {
    v.map(f64::tanh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    pub(crate) fn random_unit(rng: &mut StdRng) -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 1e-3 {
                return v / n;
            }
        }
    }

    pub(crate) fn random_rotation(rng: &mut StdRng, max_angle: f64) -> RotationMatrix {
        let axis = random_unit(rng);
        let angle = rng.gen_range(0.0..max_angle);
        exp_so3(&(axis * angle))
    }

    #[test]
    fn hat_zero_and_basis() {
        assert_eq!(hat(&Vector3::zeros()).0, Matrix3::zeros());
        let e3 = hat(&Vector3::new(0.0, 0.0, 1.0));
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(e3.0, expected);
    }

    #[test]
    fn hat_general_value() {
        let s = hat(&Vector3::new(1.0, 2.0, 3.0));
        let expected = Matrix3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(s.0, expected);
    }

    #[test]
    fn hat_is_cross_product() {
        let mut rng = StdRng::seed_from_u64(1);
        let v = Vector3::new(1.0, 2.0, 3.0);
        let s = hat(&v);
        for _ in 0..100 {
            let w = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            assert_relative_eq!(s.0 * w, v.cross(&w), epsilon = 1e-14);
        }
    }

    #[test]
    fn vee_zero_and_inverse() {
        assert_eq!(vee(&Matrix3::zeros()).unwrap(), Vector3::zeros());
        let v = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(hat(&v).matrix()).unwrap(), v);
    }

    #[test]
    fn vee_round_trip_random() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..1000 {
            let v = Vector3::new(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
            );
            assert_eq!(vee(hat(&v).matrix()).unwrap(), v);
        }
    }

    #[test]
    fn vee_rejects_non_skew() {
        let m = Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(vee(&m), Err(So3Error::NotSkew { .. })));
    }

    #[test]
    fn exp_identity_and_quarter_turn() {
        assert_eq!(exp_so3(&Vector3::zeros()).0, Matrix3::identity());
        // Rodrigues by hand for a quarter turn about z
        let r = exp_so3(&Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(r.0, expected, epsilon = 1e-15);
    }

    #[test]
    fn exp_group_inverse() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let v = random_unit(&mut rng) * rng.gen_range(0.0..3.0);
            let r = exp_so3(&v);
            let rinv = exp_so3(&(-v));
            assert_relative_eq!((r.0 * rinv.0), Matrix3::identity(), epsilon = 1e-12);
        }
    }

    #[test]
    fn exp_valid_up_to_large_angles() {
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..200 {
            let v = random_unit(&mut rng) * rng.gen_range(0.0..10.0 * std::f64::consts::PI);
            let r = exp_so3(&v);
            assert!(r.orthogonality_residual() < 1e-9);
            assert!((r.0.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn exp_small_angle_fallback() {
        let v = Vector3::new(1e-9, -2e-9, 5e-10);
        let r = exp_so3(&v);
        assert!(r.orthogonality_residual() < 1e-15);
        assert_relative_eq!(r.log(), v, epsilon = 1e-20);
    }

    #[test]
    fn config_error_identity_pair() {
        let i = RotationMatrix::identity();
        let e = config_error(&i, &i).unwrap();
        assert_eq!(e.psi, 0.0);
        assert_eq!(e.e_r, Vector3::zeros());
    }

    #[test]
    fn config_error_quarter_turn() {
        // Ψ(Rz(π/2), I) = 2 − √2, e_R = [0, 0, sin(π/4)]
        let r = RotationMatrix::rotation_z(std::f64::consts::FRAC_PI_2);
        let e = config_error(&r, &RotationMatrix::identity()).unwrap();
        assert_relative_eq!(e.psi, 2.0 - 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(
            e.e_r,
            Vector3::new(0.0, 0.0, (std::f64::consts::FRAC_PI_4).sin()),
            epsilon = 1e-15
        );
    }

    // Away from the antipodal region the quaternion evaluation must agree
    // with the direct trace/vee formulas to rounding.
    #[test]
    fn quaternion_route_matches_definitional_formulas() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..500 {
            let r2 = random_rotation(&mut rng, 2.8);
            let r1 = random_rotation(&mut rng, 2.8);
            let q = r1.matrix().transpose() * r2.matrix();
            let t = 1.0 + q.trace();
            if t < 0.05 {
                continue;
            }
            let s = t.sqrt();
            let psi_direct = 2.0 - s;
            let e_r_direct = vee_unchecked(&(q - q.transpose())) / (2.0 * s);
            let e_direct = (Matrix3::identity() * q.transpose().trace() - q.transpose()
                + e_r_direct * e_r_direct.transpose() * 2.0)
                / (2.0 * s);
            let pair = config_error(&r2, &r1).unwrap();
            assert_relative_eq!(pair.psi, psi_direct, epsilon = 1e-12);
            assert_relative_eq!(pair.e_r, e_r_direct, epsilon = 1e-12);
            let e = e_matrix(&r2, &r1).unwrap();
            assert_relative_eq!(e, e_direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn config_error_near_antipodal_limit() {
        let r = RotationMatrix::rotation_z(std::f64::consts::PI - 1e-3);
        let e = config_error(&r, &RotationMatrix::identity()).unwrap();
        assert!(e.psi < 2.0 && e.psi > 2.0 - 2e-3);
        let theta = std::f64::consts::PI - 1e-3;
        assert_relative_eq!(e.e_r.norm(), (theta / 2.0).sin(), epsilon = 1e-9);
    }

    #[test]
    fn config_error_rejects_antipodal() {
        let r = RotationMatrix::rotation_z(std::f64::consts::PI);
        assert!(matches!(
            config_error(&r, &RotationMatrix::identity()),
            Err(So3Error::NearAntipodal { .. })
        ));
    }

    #[test]
    fn angular_velocity_error_cases() {
        let i = RotationMatrix::identity();
        let w = Vector3::new(0.3, -0.2, 0.9);
        assert_eq!(angular_velocity_error(&i, &w, &i, &w), Vector3::zeros());
        assert_eq!(
            angular_velocity_error(&i, &Vector3::new(1.0, 0.0, 0.0), &i, &Vector3::zeros()),
            Vector3::new(1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn angular_velocity_error_algebraic_identity() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let r2 = random_rotation(&mut rng, 3.0);
            let r1 = random_rotation(&mut rng, 3.0);
            let w1 = random_unit(&mut rng) * rng.gen_range(0.0..5.0);
            let w2 = random_unit(&mut rng) * rng.gen_range(0.0..5.0);
            let e = angular_velocity_error(&r2, &w2, &r1, &w1);
            let back = e + r2.matrix().transpose() * r1.matrix() * w1;
            assert_relative_eq!(back, w2, epsilon = 1e-12);
        }
    }

    #[test]
    fn e_matrix_identity_pair() {
        let i = RotationMatrix::identity();
        let e = e_matrix(&i, &i).unwrap();
        assert_relative_eq!(e, Matrix3::identity() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn e_matrix_spectral_norm_half() {
        let mut rng = StdRng::seed_from_u64(6);
        let mut checked = 0;
        while checked < 500 {
            let r2 = random_rotation(&mut rng, std::f64::consts::PI * 0.98);
            let r1 = random_rotation(&mut rng, std::f64::consts::PI * 0.98);
            let Ok(pair) = config_error(&r2, &r1) else {
                continue;
            };
            if pair.psi >= 2.0 - 1e-6 {
                continue;
            }
            let e = e_matrix(&r2, &r1).unwrap();
            let norm = e.svd(false, false).singular_values[0];
            assert!((norm - 0.5).abs() < 1e-9, "‖E‖ = {norm}");
            checked += 1;
        }
    }

    // dΨ/dt = e_Rᵀe_Ω and ė_R = E·e_Ω, checked by central differences along
    // rigid-body flows of both arguments.
    #[test]
    fn config_error_flow_derivatives() {
        let mut rng = StdRng::seed_from_u64(7);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 100 {
            let r2 = random_rotation(&mut rng, 2.8);
            let r1 = random_rotation(&mut rng, 2.8);
            let Ok(pair) = config_error(&r2, &r1) else {
                continue;
            };
            if pair.psi > 1.9 {
                continue;
            }
            let w1 = random_unit(&mut rng) * rng.gen_range(0.1..2.0);
            let w2 = random_unit(&mut rng) * rng.gen_range(0.1..2.0);
            let flow = |t: f64| {
                (
                    &r2 * &exp_so3(&(w2 * t)),
                    &r1 * &exp_so3(&(w1 * t)),
                )
            };
            let (r2p, r1p) = flow(h);
            let (r2m, r1m) = flow(-h);
            let e_om = angular_velocity_error(&r2, &w2, &r1, &w1);

            let dpsi_fd = (config_error(&r2p, &r1p).unwrap().psi
                - config_error(&r2m, &r1m).unwrap().psi)
                / (2.0 * h);
            let dpsi = pair.e_r.dot(&e_om);
            assert!(
                (dpsi_fd - dpsi).abs() / dpsi.abs().max(1e-3) < 1e-5,
                "dΨ mismatch: fd {dpsi_fd} vs {dpsi}"
            );

            let der_fd = (config_error(&r2p, &r1p).unwrap().e_r
                - config_error(&r2m, &r1m).unwrap().e_r)
                / (2.0 * h);
            let der = e_matrix(&r2, &r1).unwrap() * e_om;
            assert!(
                (der_fd - der).norm() / der.norm().max(1e-3) < 1e-5,
                "ė_R mismatch: fd {der_fd:?} vs {der:?}"
            );
            checked += 1;
        }
    }

    #[test]
    fn psi_er_inequalities_random() {
        let mut rng = StdRng::seed_from_u64(8);
        let mut checked = 0;
        while checked < 10_000 {
            let r2 = random_rotation(&mut rng, std::f64::consts::PI * 0.999);
            let r1 = random_rotation(&mut rng, std::f64::consts::PI * 0.999);
            let Ok(pair) = config_error(&r2, &r1) else {
                continue;
            };
            if pair.psi >= 2.0 - 1e-6 {
                continue;
            }
            let er2 = pair.e_r.norm_squared();
            assert!(er2 <= pair.psi + 1e-12);
            assert!(pair.psi <= 2.0 * er2 + 1e-12);
            assert!(pair.e_r.norm() <= 1.0 + 1e-12);
            let theta = (&r1.transpose() * &r2).log().norm();
            assert!((pair.e_r.norm() - (theta / 2.0).sin()).abs() < 1e-9);
            checked += 1;
        }
    }

    #[test]
    fn saturation_maps_zero() {
        let (t, c2, s2) = saturation_maps(&Vector3::zeros());
        assert_eq!(t, Vector3::zeros());
        assert_eq!(c2, Matrix3::identity());
        assert_eq!(s2, Matrix3::identity());
    }

    #[test]
    fn saturation_maps_large_argument() {
        let (t, c2, s2) = saturation_maps(&Vector3::new(50.0, 0.0, 0.0));
        assert!((t.x - 1.0).abs() < 1e-12);
        assert!(s2[(0, 0)] < 1e-25);
        assert!(c2[(0, 0)].is_finite());
        // the pair stays an exact reciprocal so products cannot overflow
        assert_relative_eq!(c2 * s2, Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn tanh_norm_bound() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..1000 {
            let v = Vector3::new(
                rng.gen_range(-100.0..100.0),
                rng.gen_range(-100.0..100.0),
                rng.gen_range(-100.0..100.0),
            );
            let (t, _, _) = saturation_maps(&v);
            assert!(t.norm() <= 3f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn project_recovers_rotation() {
        let mut rng = StdRng::seed_from_u64(10);
        for _ in 0..50 {
            let r = random_rotation(&mut rng, 3.0);
            let mut m = *r.matrix();
            m[(0, 0)] += 1e-10; // small drift
            let p = RotationMatrix::project(&m);
            assert!(p.orthogonality_residual() < 1e-14);
            assert_relative_eq!(p.0, r.0, epsilon = 1e-9);
        }
    }
}
