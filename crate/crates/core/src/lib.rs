pub mod control;
pub mod curriculum;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod pose;
pub mod rewards;
pub mod sapu;

pub use error::{Error, Result};
pub use pose::{compose, difference, Pose6D, PoseDelta, Vec3};
