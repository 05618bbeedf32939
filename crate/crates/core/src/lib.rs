pub mod bench;
pub mod env;
pub mod geometry;
pub mod hash;
pub mod math;
pub mod physics;
pub mod plan;
pub mod randomize;
pub mod render;
pub mod scene;
pub mod sensors;
pub mod teleop;
