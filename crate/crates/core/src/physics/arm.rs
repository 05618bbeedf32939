//! Serial arm kinematics: sequential-transform forward kinematics and
//! damped-least-squares inverse kinematics on position targets.

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::PhysicsError;
use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArmAxis {
    /// Rotation about the local +z axis.
    Yaw,
    /// Rotation about the local −y axis: positive angles raise the link.
    Pitch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmJoint {
    pub axis: ArmAxis,
    /// Link length along the local +x axis after the joint rotation.
    pub length: f64,
    pub limits: [f64; 2],
    /// rad/s
    pub max_velocity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    /// Arm base relative to the robot base frame.
    pub mount: [f64; 3],
    pub joints: Vec<ArmJoint>,
    pub link_radius: f64,
    /// Tucked configuration used when the arm is retracted.
    pub home: Vec<f64>,
}

impl Default for ArmSpec {
    /// Yaw joint followed by three pitch links.
    fn default() -> Self {
        let pitch = |length| ArmJoint { axis: ArmAxis::Pitch, length, limits: [-0.95 * PI, 0.95 * PI], max_velocity: 1.0 };
        ArmSpec {
            mount: [0.0, 0.0, 0.6],
            joints: vec![
                ArmJoint { axis: ArmAxis::Yaw, length: 0.0, limits: [-PI, PI], max_velocity: 1.0 },
                pitch(0.35),
                pitch(0.3),
                pitch(0.25),
            ],
            link_radius: 0.04,
            home: vec![0.0, PI / 2.0, 0.0, 0.0],
        }
    }
}

impl ArmSpec {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn reach(&self) -> f64 {
        self.joints.iter().map(|j| j.length).sum()
    }

    pub fn clamp(&self, q: &mut [f64]) {
        for (v, j) in q.iter_mut().zip(&self.joints) {
            *v = v.clamp(j.limits[0], j.limits[1]);
        }
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.dof() && q.iter().zip(&self.joints).all(|(v, j)| *v >= j.limits[0] && *v <= j.limits[1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndEffectorPose {
    pub position: Vec3,
    pub rotation: Matrix3<f64>,
}

fn joint_rotation(axis: ArmAxis, q: f64) -> Matrix3<f64> {
    let (s, c) = q.sin_cos();
    match axis {
        ArmAxis::Yaw => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        // Rotation about −y.
        ArmAxis::Pitch => Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c),
    }
}

/// Positions of the arm mount and of every joint's link tip, in the base frame.
pub fn joint_positions(q: &[f64], spec: &ArmSpec) -> Result<Vec<Vec3>, PhysicsError> {
    if q.len() != spec.dof() {
        return Err(PhysicsError::DimensionMismatch { expected: spec.dof(), got: q.len() });
    }
    let mut rot = Matrix3::identity();
    let mut p = Vec3::from(spec.mount);
    let mut out = Vec::with_capacity(q.len() + 1);
    out.push(p);
    for (j, v) in spec.joints.iter().zip(q) {
        rot *= joint_rotation(j.axis, *v);
        p += rot * Vec3::new(j.length, 0.0, 0.0);
        out.push(p);
    }
    Ok(out)
}

/// End-effector pose in the robot base frame.
pub fn forward_kinematics(q: &[f64], spec: &ArmSpec) -> Result<EndEffectorPose, PhysicsError> {
    if q.len() != spec.dof() {
        return Err(PhysicsError::DimensionMismatch { expected: spec.dof(), got: q.len() });
    }
    let mut rot = Matrix3::identity();
    let mut p = Vec3::from(spec.mount);
    for (j, v) in spec.joints.iter().zip(q) {
        rot *= joint_rotation(j.axis, *v);
        p += rot * Vec3::new(j.length, 0.0, 0.0);
    }
    Ok(EndEffectorPose { position: p, rotation: rot })
}

pub const IK_DAMPING: f64 = 0.05;
pub const IK_MAX_ITERATIONS: usize = 200;
pub const IK_FD_STEP: f64 = 1e-5;
pub const IK_TOLERANCE: f64 = 1e-3;

fn dls_solve(target: &Vec3, spec: &ArmSpec, seed: &[f64]) -> (Vec<f64>, f64) {
    let n = spec.dof();
    let mut q = seed.to_vec();
    spec.clamp(&mut q);
    let fk = |q: &[f64]| forward_kinematics(q, spec).map(|p| p.position).unwrap_or_default();
    let mut pos = fk(&q);
    let mut err = (target - pos).norm();
    let lambda2 = IK_DAMPING * IK_DAMPING;
    for _ in 0..IK_MAX_ITERATIONS {
        if err <= IK_TOLERANCE * 0.1 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(3, n);
        for i in 0..n {
            let mut qh = q.clone();
            qh[i] += IK_FD_STEP;
            let d = (fk(&qh) - pos) / IK_FD_STEP;
            jac.set_column(i, &d);
        }
        let e = DVector::from_column_slice((target - pos).as_slice());
        let jjt = &jac * jac.transpose() + DMatrix::<f64>::identity(3, 3) * lambda2;
        let Some(inv) = jjt.try_inverse() else { break };
        let dq = jac.transpose() * (inv * e);
        for i in 0..n {
            q[i] += dq[i];
        }
        spec.clamp(&mut q);
        pos = fk(&q);
        err = (target - pos).norm();
    }
    (q, err)
}

/// Damped least squares (λ = 0.05, ≤ 200 iterations per attempt,
/// finite-difference Jacobian with h = 1e-5), joints clamped every iteration.
///
/// Starts from `seed`; if that attempt stalls, retries from the seed with
/// the yaw joints pointed at the target.
pub fn inverse_kinematics(target: Vec3, spec: &ArmSpec, seed: &[f64]) -> Result<Vec<f64>, PhysicsError> {
    if seed.len() != spec.dof() {
        return Err(PhysicsError::DimensionMismatch { expected: spec.dof(), got: seed.len() });
    }
    if !target.iter().all(|v| v.is_finite()) {
        return Err(PhysicsError::Unreachable { residual: f64::INFINITY });
    }
    let mount = Vec3::from(spec.mount);
    if (target - mount).norm() > spec.reach() + IK_TOLERANCE {
        return Err(PhysicsError::Unreachable { residual: (target - mount).norm() - spec.reach() });
    }
    let (q, err) = dls_solve(&target, spec, seed);
    if err <= IK_TOLERANCE {
        return Ok(q);
    }
    let heading = (target.y - mount.y).atan2(target.x - mount.x);
    let mut best = (q, err);
    for bend in [0.3, -0.3, 1.0] {
        let mut alt = seed.to_vec();
        let mut first_yaw = true;
        for (v, j) in alt.iter_mut().zip(&spec.joints) {
            match j.axis {
                ArmAxis::Yaw if first_yaw => {
                    *v = heading;
                    first_yaw = false;
                }
                ArmAxis::Pitch => *v = bend,
                _ => {}
            }
        }
        let (q, err) = dls_solve(&target, spec, &alt);
        if err <= IK_TOLERANCE {
            return Ok(q);
        }
        if err < best.1 {
            best = (q, err);
        }
    }
    Err(PhysicsError::Unreachable { residual: best.1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_link() -> ArmSpec {
        let pitch = ArmJoint { axis: ArmAxis::Pitch, length: 0.5, limits: [-PI, PI], max_velocity: 1.0 };
        ArmSpec { mount: [0.0, 0.0, 0.0], joints: vec![pitch.clone(), pitch], link_radius: 0.02, home: vec![0.0, 0.0] }
    }

    #[test]
    fn fully_extended() {
        let p = forward_kinematics(&[0.0, 0.0], &two_link()).unwrap();
        assert!((p.position - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quarter_turn_points_up() {
        let p = forward_kinematics(&[PI / 2.0, 0.0], &two_link()).unwrap();
        assert!((p.position - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        assert!((p.rotation * Vec3::x() - Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn wrong_dimension() {
        assert_eq!(
            forward_kinematics(&[0.0], &two_link()),
            Err(PhysicsError::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn ik_full_extension() {
        let spec = ArmSpec::default();
        let target = Vec3::new(0.9, 0.0, 0.6);
        let q = inverse_kinematics(target, &spec, &spec.home).unwrap();
        let p = forward_kinematics(&q, &spec).unwrap().position;
        assert!((p - target).norm() <= 1e-3);
    }

    #[test]
    fn ik_beyond_reach() {
        let spec = ArmSpec::default();
        let r = inverse_kinematics(Vec3::new(2.0, 0.0, 0.6), &spec, &spec.home);
        assert!(matches!(r, Err(PhysicsError::Unreachable { .. })));
    }
}
