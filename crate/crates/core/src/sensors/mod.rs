//! Simulated range sensors that reduce to a distance and bearing measurement.

mod lidar;
mod stereo;

pub use lidar::{scan_to_safety_input, simulate_lidar, LidarReading, LidarScan, DEFAULT_BEAMS};
pub use stereo::{
    depth_map_to_safety_input, disparity_to_depth, pixel_to_point, simulate_depth_map, DepthMap,
    StereoReading, StereoRig,
};
