//! SO(n) / SE(n) arithmetic for n = 2 and n = 3.
//!
//! Rotations are stored as plain matrices and kept on the manifold by polar
//! projection whenever composition drifts by more than [`ORTHO_TOLERANCE`].
//! Twists carry the rotational part as a skew-symmetric matrix, so the same
//! gradient and metric code serves both dimensions; the dimension-specific
//! closed forms for `exp`/`log` live behind [`SpecialEuclidean`].

use std::fmt;
use std::ops::Mul;

use nalgebra::{DMatrix, Matrix2, Matrix3, Quaternion, Rotation3, SMatrix, SVector, UnitQuaternion, Vector3};
use thiserror::Error;

pub type Vector<const N: usize> = SVector<f64, N>;
pub type Matrix<const N: usize> = SMatrix<f64, N, N>;

/// Frobenius drift of `R Rᵀ - I` above which a rotation is re-projected.
pub const ORTHO_TOLERANCE: f64 = 1e-9;
/// Angles closer than this to π are refused by the principal logarithm.
pub const BRANCH_MARGIN: f64 = 1e-6;
/// Rotation angles (θ or t·θ) below this use the series form of the exponential.
pub const SMALL_ANGLE: f64 = 1e-8;
// Series is used up to this |tθ|; four terms keep the truncation below 1e-16 relative.
const SERIES_LIMIT: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("rotation angle {angle} is at or beyond the logarithm branch cut")]
    BranchCut { angle: f64 },
    #[error("matrix is not a proper rotation (orthogonality error {orthogonality:e}, det {det})")]
    NotARotation { orthogonality: f64, det: f64 },
    #[error("matrix is not skew-symmetric")]
    NotSkew,
}

/// Marker type for the supported dimensions.
#[derive(Debug, Clone, Copy)]
pub struct Dim<const N: usize>;

/// Dimension-specific pieces of SE(n): closed-form exponential and
/// logarithm, and coordinates of 𝔰𝔬(n).
pub trait SpecialEuclidean<const N: usize> {
    /// Number of independent skew coefficients, n(n-1)/2.
    const SKEW_DIM: usize;

    /// `exp(t·(ω̂, v))` as `(ΔR, ΔT)`.
    fn exp(omega: &Matrix<N>, v: &Vector<N>, t: f64) -> (Matrix<N>, Vector<N>);

    /// Principal logarithm of `(R, T)` as `(ω̂, v)`.
    fn log(rotation: &Matrix<N>, translation: &Vector<N>) -> Result<(Matrix<N>, Vector<N>), LieError>;

    /// Rotation angle in `[0, π]`.
    fn angle(rotation: &Matrix<N>) -> f64;

    /// Skew coefficients: `ω` with `ω̂x = ω × x` for n = 3, and the rate
    /// `θ` with `ω̂ = θ·[[0, -1], [1, 0]]` for n = 2.
    fn vee(omega: &Matrix<N>) -> Vec<f64>;

    fn hat(coeffs: &[f64]) -> Result<Matrix<N>, LieError>;
}

fn check_finite(values: &[f64]) -> Result<(), LieError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LieError::NonFinite)
    }
}

/// Coefficients `(sin x / θ, (1 - cos x) / θ², (x - sin x) / θ³)` with `x = tθ`.
fn exp_coefficients(theta: f64, t: f64) -> (f64, f64, f64) {
    let x = t * theta;
    if theta < SMALL_ANGLE || x.abs() < SERIES_LIMIT {
        let x2 = x * x;
        let a = t * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0)));
        let b = t * t * (0.5 - x2 / 24.0 * (1.0 - x2 / 30.0 * (1.0 - x2 / 56.0)));
        let c = t * t * t * (1.0 / 6.0 - x2 / 120.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)));
        (a, b, c)
    } else {
        let half = 0.5 * x;
        let one_minus_cos = 2.0 * half.sin() * half.sin();
        (
            x.sin() / theta,
            one_minus_cos / (theta * theta),
            (x - x.sin()) / (theta * theta * theta),
        )
    }
}

pub fn skew3(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

fn vee3(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

const PLANAR_GENERATOR: Matrix2<f64> = Matrix2::new(0.0, -1.0, 1.0, 0.0);

impl SpecialEuclidean<3> for Dim<3> {
    const SKEW_DIM: usize = 3;

    fn exp(omega: &Matrix3<f64>, v: &Vector3<f64>, t: f64) -> (Matrix3<f64>, Vector3<f64>) {
        let theta = vee3(omega).norm();
        let (a, b, c) = exp_coefficients(theta, t);
        let omega2 = omega * omega;
        let rotation = Matrix3::identity() + omega * a + omega2 * b;
        let jacobian = Matrix3::identity() * t + omega * b + omega2 * c;
        (rotation, jacobian * v)
    }

    fn log(rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Result<(Matrix3<f64>, Vector3<f64>), LieError> {
        check_finite(rotation.as_slice())?;
        check_finite(translation.as_slice())?;
        let axis_sin = vee3(&(rotation - rotation.transpose())) * 0.5;
        let sin_theta = axis_sin.norm();
        let cos_theta = 0.5 * (rotation.trace() - 1.0);
        let theta = sin_theta.atan2(cos_theta);
        if theta >= std::f64::consts::PI - BRANCH_MARGIN {
            return Err(LieError::BranchCut { angle: theta });
        }
        // θ / sin θ, expanded near zero
        let scale = if theta < 1e-4 {
            1.0 + theta * theta / 6.0 + 7.0 * theta.powi(4) / 360.0
        } else {
            theta / sin_theta
        };
        let omega = skew3(&(axis_sin * scale));
        // V⁻¹ = I - ω̂/2 + k ω̂²
        let k = if theta < 1e-4 {
            1.0 / 12.0 + theta * theta / 720.0
        } else {
            (1.0 - theta * sin_theta / (2.0 * (1.0 - cos_theta))) / (theta * theta)
        };
        let v_inv = Matrix3::identity() - omega * 0.5 + omega * omega * k;
        Ok((omega, v_inv * translation))
    }

    fn angle(rotation: &Matrix3<f64>) -> f64 {
        let sin_theta = (vee3(&(rotation - rotation.transpose())) * 0.5).norm();
        sin_theta.atan2(0.5 * (rotation.trace() - 1.0))
    }

    fn vee(omega: &Matrix3<f64>) -> Vec<f64> {
        vee3(omega).as_slice().to_vec()
    }

    fn hat(coeffs: &[f64]) -> Result<Matrix3<f64>, LieError> {
        if coeffs.len() != 3 {
            return Err(LieError::DimensionMismatch { expected: 3, found: coeffs.len() });
        }
        Ok(skew3(&Vector3::new(coeffs[0], coeffs[1], coeffs[2])))
    }
}

impl SpecialEuclidean<2> for Dim<2> {
    const SKEW_DIM: usize = 1;

    fn exp(omega: &Matrix2<f64>, v: &Vector<2>, t: f64) -> (Matrix2<f64>, Vector<2>) {
        let rate = omega[(1, 0)];
        let x = t * rate;
        let rotation = Matrix2::new(x.cos(), -x.sin(), x.sin(), x.cos());
        // ΔT = (sin x / θ · I + (1 - cos x) / θ · J) v
        let (a, b, _) = exp_coefficients(rate.abs(), t);
        let jacobian = Matrix2::identity() * a + PLANAR_GENERATOR * (b * rate);
        (rotation, jacobian * v)
    }

    fn log(rotation: &Matrix2<f64>, translation: &Vector<2>) -> Result<(Matrix2<f64>, Vector<2>), LieError> {
        check_finite(rotation.as_slice())?;
        check_finite(translation.as_slice())?;
        let theta = rotation[(1, 0)].atan2(rotation[(0, 0)]);
        if theta.abs() >= std::f64::consts::PI - BRANCH_MARGIN {
            return Err(LieError::BranchCut { angle: theta.abs() });
        }
        let (a, b, _) = exp_coefficients(theta.abs(), 1.0);
        let b = b * theta;
        let det = a * a + b * b;
        let v_inv = Matrix2::new(a, b, -b, a) / det;
        Ok((PLANAR_GENERATOR * theta, v_inv * translation))
    }

    fn angle(rotation: &Matrix2<f64>) -> f64 {
        rotation[(1, 0)].atan2(rotation[(0, 0)]).abs()
    }

    fn vee(omega: &Matrix2<f64>) -> Vec<f64> {
        vec![omega[(1, 0)]]
    }

    fn hat(coeffs: &[f64]) -> Result<Matrix2<f64>, LieError> {
        match coeffs {
            [rate] => Ok(PLANAR_GENERATOR * *rate),
            _ => Err(LieError::DimensionMismatch { expected: 1, found: coeffs.len() }),
        }
    }
}

/// Element of SO(n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<const N: usize> {
    matrix: Matrix<N>,
}

fn orthogonality_error<const N: usize>(m: &Matrix<N>) -> f64 {
    (m * m.transpose() - Matrix::<N>::identity()).norm()
}

/// Closest rotation in the Frobenius sense (polar factor of `m`).
fn polar_projection<const N: usize>(m: &Matrix<N>) -> Matrix<N> {
    let svd = DMatrix::from_column_slice(N, N, m.as_slice()).svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut r = &u * &v_t;
    if r.determinant() < 0.0 {
        let mut d = DMatrix::identity(N, N);
        d[(N - 1, N - 1)] = -1.0;
        r = u * d * v_t;
    }
    Matrix::<N>::from_column_slice(r.as_slice())
}

fn determinant<const N: usize>(m: &Matrix<N>) -> f64 {
    DMatrix::from_column_slice(N, N, m.as_slice()).determinant()
}

impl<const N: usize> Rotation<N> {
    pub fn identity() -> Self {
        Self { matrix: Matrix::identity() }
    }

    /// Validates `m` as a rotation within [`ORTHO_TOLERANCE`].
    pub fn from_matrix(m: Matrix<N>) -> Result<Self, LieError> {
        check_finite(m.as_slice())?;
        let orthogonality = orthogonality_error(&m);
        let det = determinant(&m);
        if orthogonality > ORTHO_TOLERANCE || (det - 1.0).abs() > ORTHO_TOLERANCE {
            return Err(LieError::NotARotation { orthogonality, det });
        }
        Ok(Self { matrix: m })
    }

    /// Projects an approximately orthogonal matrix with positive determinant
    /// onto SO(n). Fails on reflections and grossly non-orthogonal input.
    pub fn from_matrix_projected(m: Matrix<N>) -> Result<Self, LieError> {
        check_finite(m.as_slice())?;
        let det = determinant(&m);
        if det <= 0.0 {
            return Err(LieError::NotARotation { orthogonality: orthogonality_error(&m), det });
        }
        Ok(Self::renormalized(m))
    }

    fn renormalized(m: Matrix<N>) -> Self {
        if orthogonality_error(&m) > ORTHO_TOLERANCE {
            Self { matrix: polar_projection(&m) }
        } else {
            Self { matrix: m }
        }
    }

    pub fn matrix(&self) -> &Matrix<N> {
        &self.matrix
    }

    pub fn transpose(&self) -> Self {
        Self { matrix: self.matrix.transpose() }
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.matrix)
    }
}

impl Rotation<3> {
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let (omega, _) = Dim::<3>::exp(&skew3(&axis.normalize()), &Vector3::zeros(), angle);
        Self { matrix: omega }
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>) -> Self {
        Self::renormalized(*q.to_rotation_matrix().matrix())
    }

    pub fn to_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.matrix))
    }
}

impl Rotation<2> {
    pub fn from_angle(angle: f64) -> Self {
        Self { matrix: Matrix2::new(angle.cos(), -angle.sin(), angle.sin(), angle.cos()) }
    }
}

impl<const N: usize> Mul for Rotation<N> {
    type Output = Rotation<N>;

    fn mul(self, rhs: Rotation<N>) -> Rotation<N> {
        Rotation::renormalized(self.matrix * rhs.matrix)
    }
}

/// Element of SE(n), acting on points as `x ↦ R x + T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry<const N: usize> {
    pub rotation: Rotation<N>,
    pub translation: Vector<N>,
}

pub type Isometry3 = Isometry<3>;
pub type Isometry2 = Isometry<2>;

impl<const N: usize> Default for Isometry<N> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<const N: usize> Isometry<N> {
    pub fn identity() -> Self {
        Self { rotation: Rotation::identity(), translation: Vector::zeros() }
    }

    pub fn new(rotation: Rotation<N>, translation: Vector<N>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(translation: Vector<N>) -> Self {
        Self { rotation: Rotation::identity(), translation }
    }

    pub fn from_rotation(rotation: Rotation<N>) -> Self {
        Self { rotation, translation: Vector::zeros() }
    }

    /// `(R, T).x = R x + T`
    pub fn act(&self, x: &Vector<N>) -> Vector<N> {
        self.rotation.matrix * x + self.translation
    }

    /// `h⁻¹ z = Rᵀ z - Rᵀ T`
    pub fn inverse_act(&self, z: &Vector<N>) -> Vector<N> {
        self.rotation.matrix.tr_mul(&(z - self.translation))
    }

    /// Slice form of [`Isometry::act`] for callers holding untyped coordinates.
    pub fn act_slice(&self, x: &[f64]) -> Result<Vector<N>, LieError> {
        Ok(self.act(&vector_from_slice::<N>(x)?))
    }

    pub fn inverse_act_slice(&self, z: &[f64]) -> Result<Vector<N>, LieError> {
        Ok(self.inverse_act(&vector_from_slice::<N>(z)?))
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt.matrix * self.translation) }
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.matrix.iter().chain(self.translation.iter()).all(|v| v.is_finite())
    }
}

pub fn vector_from_slice<const N: usize>(x: &[f64]) -> Result<Vector<N>, LieError> {
    if x.len() != N {
        return Err(LieError::DimensionMismatch { expected: N, found: x.len() });
    }
    Ok(Vector::<N>::from_column_slice(x))
}

impl<const N: usize> Mul for Isometry<N> {
    type Output = Isometry<N>;

    fn mul(self, rhs: Isometry<N>) -> Isometry<N> {
        Isometry {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation.matrix * rhs.translation + self.translation,
        }
    }
}

impl Isometry<3> {
    pub fn from_quaternion(translation: Vector3<f64>, q: &UnitQuaternion<f64>) -> Self {
        Self { rotation: Rotation::from_quaternion(q), translation }
    }

    /// Parses `tx ty tz qx qy qz qw` (Hamilton quaternion, w last).
    pub fn from_pose_fields(fields: &[f64]) -> Result<Self, LieError> {
        if fields.len() != 7 {
            return Err(LieError::DimensionMismatch { expected: 7, found: fields.len() });
        }
        check_finite(fields)?;
        let q = Quaternion::new(fields[6], fields[3], fields[4], fields[5]);
        if q.norm() < 1e-12 {
            return Err(LieError::NonFinite);
        }
        Ok(Self::from_quaternion(
            Vector3::new(fields[0], fields[1], fields[2]),
            &UnitQuaternion::from_quaternion(q),
        ))
    }

    pub fn pose_fields(&self) -> [f64; 7] {
        let q = self.rotation.to_quaternion();
        let t = &self.translation;
        // + 0.0 maps -0 to 0 so the text form is sign-stable
        [t.x, t.y, t.z, q.i, q.j, q.k, q.w].map(|v| v + 0.0)
    }
}

/// Pose text form `tx ty tz qx qy qz qw`.
impl fmt::Display for Isometry<3> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.pose_fields();
        write!(f, "{} {} {} {} {} {} {}", p[0], p[1], p[2], p[3], p[4], p[5], p[6])
    }
}

/// Element `(ω̂, v)` of 𝔰𝔢(n); `omega` is skew-symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist<const N: usize> {
    omega: Matrix<N>,
    pub v: Vector<N>,
}

pub type Twist3 = Twist<3>;
pub type Twist2 = Twist<2>;

impl<const N: usize> Twist<N> {
    pub fn zero() -> Self {
        Self { omega: Matrix::zeros(), v: Vector::zeros() }
    }

    pub fn from_skew(omega: Matrix<N>, v: Vector<N>) -> Result<Self, LieError> {
        check_finite(omega.as_slice())?;
        check_finite(v.as_slice())?;
        if (omega + omega.transpose()).amax() > 0.0 {
            return Err(LieError::NotSkew);
        }
        Ok(Self { omega, v })
    }

    /// Builds from a matrix that is skew up to rounding, keeping only the
    /// antisymmetric part.
    pub(crate) fn from_skew_part(omega: Matrix<N>, v: Vector<N>) -> Self {
        Self { omega: (omega - omega.transpose()) * 0.5, v }
    }

    pub fn skew(&self) -> &Matrix<N> {
        &self.omega
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { omega: self.omega * s, v: self.v * s }
    }

    pub fn is_zero(&self) -> bool {
        self.omega.iter().chain(self.v.iter()).all(|&x| x == 0.0)
    }

    /// Frobenius norm of the 𝔰𝔢(n) matrix `[[ω̂, v], [0, 0]]`.
    pub fn frobenius_norm(&self) -> f64 {
        (self.omega.norm_squared() + self.v.norm_squared()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.omega.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

impl<const N: usize> Twist<N>
where
    Dim<N>: SpecialEuclidean<N>,
{
    pub fn from_coefficients(omega: &[f64], v: Vector<N>) -> Result<Self, LieError> {
        check_finite(omega)?;
        check_finite(v.as_slice())?;
        Ok(Self { omega: Dim::<N>::hat(omega)?, v })
    }

    pub fn omega_coefficients(&self) -> Vec<f64> {
        Dim::<N>::vee(&self.omega)
    }
}

impl Twist<3> {
    pub fn new(omega: Vector3<f64>, v: Vector3<f64>) -> Self {
        Self { omega: skew3(&omega), v }
    }

    pub fn omega(&self) -> Vector3<f64> {
        vee3(&self.omega)
    }
}

impl Twist<2> {
    pub fn new(rate: f64, v: Vector<2>) -> Self {
        Self { omega: PLANAR_GENERATOR * rate, v }
    }

    pub fn rate(&self) -> f64 {
        self.omega[(1, 0)]
    }
}

/// Group exponential `exp(t ξ)`.
pub fn exp_twist<const N: usize>(xi: &Twist<N>, t: f64) -> Result<Isometry<N>, LieError>
where
    Dim<N>: SpecialEuclidean<N>,
{
    if !xi.is_finite() || !t.is_finite() {
        return Err(LieError::NonFinite);
    }
    let (rotation, translation) = Dim::<N>::exp(&xi.omega, &xi.v, t);
    Ok(Isometry { rotation: Rotation::renormalized(rotation), translation })
}

/// Principal logarithm; fails within [`BRANCH_MARGIN`] of a half turn.
pub fn log_iso<const N: usize>(h: &Isometry<N>) -> Result<Twist<N>, LieError>
where
    Dim<N>: SpecialEuclidean<N>,
{
    let (omega, v) = Dim::<N>::log(&h.rotation.matrix, &h.translation)?;
    Ok(Twist { omega, v })
}

/// `‖log(R₁ R₂ᵀ)‖_F`, i.e. √2 times the relative rotation angle.
pub fn rot_distance<const N: usize>(r1: &Rotation<N>, r2: &Rotation<N>) -> f64
where
    Dim<N>: SpecialEuclidean<N>,
{
    let relative = r1.matrix * r2.matrix.transpose();
    std::f64::consts::SQRT_2 * Dim::<N>::angle(&relative)
}

/// `‖T₁ - R₁ R₂ᵀ T₂‖`, the translation of `h₁ h₂⁻¹`.
pub fn trans_distance<const N: usize>(h1: &Isometry<N>, h2: &Isometry<N>) -> f64 {
    let relative = h1.rotation.matrix * h2.rotation.matrix.transpose();
    (h1.translation - relative * h2.translation).norm()
}

/// `‖log(h₁ h₂⁻¹)‖_F`.
pub fn iso_distance<const N: usize>(h1: &Isometry<N>, h2: &Isometry<N>) -> Result<f64, LieError>
where
    Dim<N>: SpecialEuclidean<N>,
{
    Ok(log_iso(&(*h1 * h2.inverse()))?.frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    /// Matrix logarithm oracle for rotations near identity: log(I + A) series.
    fn log_series(r: &Matrix3<f64>) -> Matrix3<f64> {
        let a = r - Matrix3::identity();
        let mut term = a;
        let mut sum = Matrix3::zeros();
        for k in 1..200 {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += term * (sign / k as f64);
            term *= a;
        }
        sum
    }

    fn random_twist(rng: &mut ChaCha8Rng, max_angle: f64) -> Twist3 {
        let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let omega = axis.normalize() * rng.gen_range(0.0..max_angle);
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        Twist3::new(omega, v)
    }

    #[test]
    fn act_examples() {
        let x = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(Isometry3::identity().act(&x), x);
        let up = Isometry3::from_translation(Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(up.act(&Vector3::zeros()), Vector3::new(0.0, 0.0, 1.0));
        let quarter = Isometry3::from_rotation(Rotation::from_axis_angle(&Vector3::z(), FRAC_PI_2));
        let y = quarter.act(&Vector3::x());
        assert_relative_eq!(y, Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn act_slice_rejects_wrong_dimension() {
        let h = Isometry3::identity();
        assert_eq!(
            h.act_slice(&[1.0, 2.0]),
            Err(LieError::DimensionMismatch { expected: 3, found: 2 })
        );
        assert!(h.inverse_act_slice(&[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn inverse_act_examples() {
        let shift = Isometry3::from_translation(Vector3::x());
        assert_eq!(shift.inverse_act(&Vector3::x()), Vector3::zeros());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let h = exp_twist(&random_twist(&mut rng, 3.0), 1.0).unwrap();
            let z = Vector3::new(rng.gen(), rng.gen(), rng.gen()) * 10.0;
            assert_relative_eq!(h.act(&h.inverse_act(&z)), z, epsilon = 1e-12);
        }
    }

    #[test]
    fn exp_examples() {
        let pure = Twist3::new(Vector3::zeros(), Vector3::x());
        let h = exp_twist(&pure, 0.5).unwrap();
        assert_eq!(*h.rotation.matrix(), Matrix3::identity());
        assert_relative_eq!(h.translation, Vector3::new(0.5, 0.0, 0.0), epsilon = 1e-16);

        let any = Twist3::new(Vector3::new(0.3, -1.0, 2.0), Vector3::new(1.0, 2.0, 3.0));
        let e = exp_twist(&any, 0.0).unwrap();
        assert_eq!(e, Isometry3::identity());

        let quarter = exp_twist(&Twist3::new(Vector3::new(0.0, 0.0, FRAC_PI_2), Vector3::zeros()), 1.0).unwrap();
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(*quarter.rotation.matrix(), expected, epsilon = 1e-15);
    }

    #[test]
    fn exp_rejects_non_finite() {
        let bad = Twist3::new(Vector3::new(f64::NAN, 0.0, 0.0), Vector3::zeros());
        assert_eq!(exp_twist(&bad, 1.0), Err(LieError::NonFinite));
        assert_eq!(exp_twist(&Twist3::zero(), f64::INFINITY), Err(LieError::NonFinite));
    }

    #[test]
    fn log_examples() {
        assert!(log_iso(&Isometry3::identity()).unwrap().is_zero());
        let rz = Isometry3::from_rotation(Rotation::from_axis_angle(&Vector3::z(), 0.1));
        let xi = log_iso(&rz).unwrap();
        assert_relative_eq!(xi.omega(), Vector3::new(0.0, 0.0, 0.1), epsilon = 1e-15);
        assert_relative_eq!(xi.v, Vector3::zeros());
        // matrix-log oracle
        assert_relative_eq!(*xi.skew(), log_series(rz.rotation.matrix()), epsilon = 1e-14);
    }

    #[test]
    fn log_branch_cut() {
        let half_turn = Isometry3::from_rotation(Rotation::from_axis_angle(&Vector3::x(), std::f64::consts::PI));
        assert!(matches!(log_iso(&half_turn), Err(LieError::BranchCut { .. })));
        let planar = Isometry2::from_rotation(Rotation::<2>::from_angle(std::f64::consts::PI - 1e-7));
        assert!(matches!(log_iso(&planar), Err(LieError::BranchCut { .. })));
    }

    #[test]
    fn exp_log_round_trip_3d() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let xi = random_twist(&mut rng, 3.0);
            let back = log_iso(&exp_twist(&xi, 1.0).unwrap()).unwrap();
            assert_relative_eq!(back.omega(), xi.omega(), epsilon = 1e-9);
            assert_relative_eq!(back.v, xi.v, epsilon = 1e-9);
        }
    }

    #[test]
    fn exp_log_round_trip_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let xi = Twist2::new(rng.gen_range(-3.0..3.0), Vector::<2>::new(rng.gen_range(-1.0..1.0), rng.gen()));
            let back = log_iso(&exp_twist(&xi, 1.0).unwrap()).unwrap();
            assert_relative_eq!(back.rate(), xi.rate(), epsilon = 1e-9);
            assert_relative_eq!(back.v, xi.v, epsilon = 1e-9);
        }
    }

    #[test]
    fn hat_vee_exact() {
        let w = [0.25, -1.5, 3.0];
        let m = Dim::<3>::hat(&w).unwrap();
        assert_eq!(Dim::<3>::vee(&m), w.to_vec());
        assert_eq!(Dim::<3>::hat(&Dim::<3>::vee(&m)).unwrap(), m);
        let x = Vector3::new(0.1, 0.2, 0.7);
        let w = Vector3::from_column_slice(&w);
        assert_relative_eq!(m * x, w.cross(&x), epsilon = 1e-15);
        assert_eq!(Dim::<2>::vee(&Dim::<2>::hat(&[0.4]).unwrap()), vec![0.4]);
        assert!(Dim::<2>::hat(&[0.4, 1.0]).is_err());
    }

    #[test]
    fn rot_distance_examples() {
        let r = Rotation::from_axis_angle(&Vector3::new(1.0, 2.0, -0.5), 0.7);
        assert_eq!(rot_distance(&r, &r), 0.0);
        for axis in [Vector3::x(), Vector3::y(), Vector3::new(1.0, 1.0, 1.0)] {
            let r = Rotation::from_axis_angle(&axis, 0.1);
            let d = rot_distance(&r, &Rotation::identity());
            assert_relative_eq!(d, SQRT_2 * 0.1, epsilon = 1e-14);
            assert_relative_eq!(d, log_series(r.matrix()).norm(), epsilon = 1e-13);
            assert_relative_eq!(d, 0.141421356237, epsilon = 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let q = exp_twist(&random_twist(&mut rng, 3.0), 1.0).unwrap().rotation;
            let a = exp_twist(&random_twist(&mut rng, 1.0), 1.0).unwrap().rotation;
            let b = exp_twist(&random_twist(&mut rng, 1.0), 1.0).unwrap().rotation;
            assert_relative_eq!(rot_distance(&(q * a), &(q * b)), rot_distance(&a, &b), epsilon = 1e-10);
        }
    }

    #[test]
    fn trans_distance_examples() {
        let h = Isometry3::from_translation(Vector3::x());
        assert_eq!(trans_distance(&h, &h), 0.0);
        assert_eq!(trans_distance(&h, &Isometry3::identity()), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let h1 = exp_twist(&random_twist(&mut rng, 3.0), 1.0).unwrap();
            let h2 = exp_twist(&random_twist(&mut rng, 3.0), 1.0).unwrap();
            let composed = (h1 * h2.inverse()).translation.norm();
            assert_relative_eq!(trans_distance(&h1, &h2), composed, epsilon = 1e-12);
        }
    }

    #[test]
    fn iso_distance_examples() {
        let e = Isometry3::identity();
        assert_eq!(iso_distance(&e, &e).unwrap(), 0.0);
        let a = Isometry3::from_rotation(Rotation::from_axis_angle(&Vector3::y(), 0.4));
        let b = Isometry3::from_rotation(Rotation::from_axis_angle(&Vector3::x(), -0.3));
        assert_relative_eq!(
            iso_distance(&a, &b).unwrap(),
            rot_distance(&a.rotation, &b.rotation),
            epsilon = 1e-12
        );
    }

    #[test]
    fn pose_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = exp_twist(&random_twist(&mut rng, 2.0), 1.0).unwrap();
        let fields: Vec<f64> = h.to_string().split_whitespace().map(|s| s.parse().unwrap()).collect();
        let back = Isometry3::from_pose_fields(&fields).unwrap();
        assert_relative_eq!(*back.rotation.matrix(), *h.rotation.matrix(), epsilon = 1e-12);
        assert_relative_eq!(back.translation, h.translation, epsilon = 1e-12);
        assert_eq!(Isometry3::identity().to_string(), "0 0 0 0 0 0 1");
    }

    #[test]
    fn rotation_validation() {
        assert!(Rotation::<3>::from_matrix(Matrix3::identity() * 2.0).is_err());
        let reflection = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(Rotation::<3>::from_matrix(reflection).is_err());
        assert!(Rotation::<3>::from_matrix_projected(reflection).is_err());
        let nearly = Matrix3::identity() + Matrix3::from_element(1e-6);
        let r = Rotation::<3>::from_matrix_projected(nearly).unwrap();
        assert!(r.orthogonality_error() < 1e-12);
    }
}
