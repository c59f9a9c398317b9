//! Parametric hand: template, forward kinematics, joint angles and parts.

mod kinematics;
mod params;
mod template;

pub use kinematics::{
    angle_at, center_vertices, forward_batch, forward_kinematics, forward_with_layer, joint_angles,
    partition_vertices, tensor_points, HandLayer, HandMesh, ANGLE_CLAMP, MIN_BONE_LENGTH,
};
pub use params::{import_param_file, HandParams, PARAM_DIM, POSE_DIM, POSITION_DIM, POSTURE_DIM, SHAPE_DIM};
pub use template::{joint_parents, HandTemplate, Part, TemplateResolution, NUM_BONES, NUM_JOINTS, NUM_PARTS};
