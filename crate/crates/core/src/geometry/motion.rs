use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::transform::RigidTransform;
use crate::error::GeometryError;

/// Planar displacement and yaw of the robot base defining a novel egocentric
/// viewpoint. `dtheta` is counterclockwise about the base +z axis, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoMotion {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl EgoMotion {
    pub fn new(dx: f64, dy: f64, dtheta: f64) -> Self {
        Self { dx, dy, dtheta }
    }

    pub fn is_finite(&self) -> bool {
        self.dx.is_finite() && self.dy.is_finite() && self.dtheta.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.dx == 0.0 && self.dy == 0.0 && self.dtheta == 0.0
    }

    /// Change-of-coordinates from the old base frame to the displaced base
    /// frame. The new base pose in the old frame is
    /// `D = Trans(dx, dy, 0) * Rot_z(dtheta)`; the returned transform is
    /// `D^-1`, so old-frame coordinates `p` map to new-frame coordinates
    /// `T_v * p`.
    pub fn to_base_transform(&self) -> RigidTransform {
        let d = RigidTransform::from_axis_angle(&Vector3::z_axis(), self.dtheta)
            .with_translation(Vector3::new(self.dx, self.dy, 0.0));
        d.inverse()
    }
}

/// Closed sampling intervals for each ego-motion component.
/// Translations in meters, rotation in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewpointRange {
    pub dx_range: (f64, f64),
    pub dy_range: (f64, f64),
    pub dtheta_range: (f64, f64),
}

impl ViewpointRange {
    pub fn new(
        dx_range: (f64, f64),
        dy_range: (f64, f64),
        dtheta_range: (f64, f64),
    ) -> Result<Self, GeometryError> {
        for (name, (lo, hi)) in [
            ("dx", dx_range),
            ("dy", dy_range),
            ("dtheta", dtheta_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(GeometryError::InvalidRange {
                    component: name,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self {
            dx_range,
            dy_range,
            dtheta_range,
        })
    }

    /// Simulation profile: dx, dy in [-0.1, 0.1] m, yaw in [-10, 10] degrees.
    pub fn sim_profile() -> Self {
        let ten_deg = 10.0f64.to_radians();
        Self {
            dx_range: (-0.1, 0.1),
            dy_range: (-0.1, 0.1),
            dtheta_range: (-ten_deg, ten_deg),
        }
    }

    /// Real-robot profile: the platform cannot move forward, so dx is
    /// restricted to [-0.1, 0.0] m.
    pub fn real_profile() -> Self {
        let ten_deg = 10.0f64.to_radians();
        Self {
            dx_range: (-0.1, 0.0),
            dy_range: (-0.1, 0.1),
            dtheta_range: (-ten_deg, ten_deg),
        }
    }

    pub fn contains(&self, m: &EgoMotion) -> bool {
        self.dx_range.0 <= m.dx
            && m.dx <= self.dx_range.1
            && self.dy_range.0 <= m.dy
            && m.dy <= self.dy_range.1
            && self.dtheta_range.0 <= m.dtheta
            && m.dtheta <= self.dtheta_range.1
    }
}

/// Uniform per-component sample, deterministic for a fixed seed.
pub fn sample_ego_motion(range: &ViewpointRange, seed: u64) -> EgoMotion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_ego_motion_with(range, &mut rng)
}

pub fn sample_ego_motion_with<R: Rng>(range: &ViewpointRange, rng: &mut R) -> EgoMotion {
    let draw = |rng: &mut R, (lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..=hi)
        }
    };
    EgoMotion {
        dx: draw(rng, range.dx_range),
        dy: draw(rng, range.dy_range),
        dtheta: draw(rng, range.dtheta_range),
    }
}
