use serde::{Deserialize, Serialize};

use super::model::{ArticulatedObject, BoundingBox, ObjectInstance};
use super::SceneError;

/// Class-labeled placement box: an object entry without a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxPlacement {
    pub id: u32,
    #[serde(rename = "class")]
    pub class_label: String,
    pub bbox: BoundingBox,
    #[serde(rename = "static", default)]
    pub is_static: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<u32>,
}

/// Place `model` in the box. Scale is per-axis and implied by the ratio of the
/// bbox extents to the model's native extents (see [`ObjectInstance::scale`]).
pub fn fill_bounding_box(placement: &BoxPlacement, model: ArticulatedObject) -> Result<ObjectInstance, SceneError> {
    let ext = model.native_aabb().extent();
    if let Some(axis) = (0..3).find(|&i| !(ext[i] > 0.0) || !ext[i].is_finite()) {
        return Err(SceneError::DegenerateModel { axis });
    }
    if placement.bbox.half_extents.iter().any(|h| !(*h > 0.0)) {
        return Err(SceneError::Import(format!("placement {} has non-positive half-extents", placement.id)));
    }
    Ok(ObjectInstance {
        id: placement.id,
        class_label: placement.class_label.clone(),
        bbox: placement.bbox,
        is_static: placement.is_static,
        model,
        room: placement.room,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Aabb, Vec3};

    fn placement(half: [f64; 3]) -> BoxPlacement {
        BoxPlacement {
            id: 1,
            class_label: "table".into(),
            bbox: BoundingBox { center: [1.0, 2.0, 0.25], yaw: 0.3, half_extents: half },
            is_static: false,
            room: None,
        }
    }

    #[test]
    fn unit_cube_scales_per_axis() {
        let model = ArticulatedObject::single_box([0.5, 0.5, 0.5], "oak");
        let obj = fill_bounding_box(&placement([0.5, 1.0, 0.25]), model).unwrap();
        assert!((obj.scale() - Vec3::new(1.0, 2.0, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn exact_fit_is_identity() {
        let model = ArticulatedObject::single_box([0.3, 0.2, 0.1], "oak");
        let obj = fill_bounding_box(&placement([0.3, 0.2, 0.1]), model).unwrap();
        assert!((obj.scale() - Vec3::repeat(1.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_extent_is_degenerate() {
        let model = ArticulatedObject::single_box([0.5, 0.5, 0.0], "oak");
        assert_eq!(fill_bounding_box(&placement([0.5, 0.5, 0.5]), model), Err(SceneError::DegenerateModel { axis: 2 }));
    }

    #[test]
    fn posed_model_matches_bbox_within_one_percent() {
        let mut model = ArticulatedObject::single_box([0.4, 0.3, 0.02], "oak");
        model.links[0].center = [0.1, 0.0, 0.7];
        model.links.push(model.links[0].clone());
        model.links[1].center = [0.1, 0.0, 0.35];
        model.links[1].half_extents = [0.05, 0.05, 0.35];
        model.joints.clear();
        // Second link is rigidly attached through a zero-range prismatic joint.
        model.joints.push(super::super::Joint {
            kind: super::super::JointKind::Prismatic,
            parent: 0,
            child: 1,
            axis: [0.0, 0.0, 1.0],
            anchor: [0.0, 0.0, 0.0],
            limits: [0.0, 0.0],
            friction: 0.0,
            damping: 0.0,
            position: 0.0,
        });
        let mut p = placement([0.6, 0.45, 0.4]);
        p.bbox.yaw = 0.0;
        let obj = fill_bounding_box(&p, model).unwrap();
        let posed = obj.posed_links(&obj.rest_joint_positions(), None);
        let bb = posed.iter().fold(Aabb::empty(), |a, b| a.union(&b.aabb()));
        let target = Vec3::new(1.2, 0.9, 0.8);
        for i in 0..3 {
            assert!((bb.extent()[i] - target[i]).abs() <= 0.01 * target[i]);
        }
        assert!((bb.center() - Vec3::new(1.0, 2.0, 0.25)).norm() < 1e-9);
    }
}
