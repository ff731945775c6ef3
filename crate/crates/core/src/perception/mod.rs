//! Perception side: pub-sub bus with QoS and the simulated motion-capture
//! source driven by a scripted trajectory.

mod bus;
mod trajectory;
mod vision;

pub use bus::{
    Bus, Delivery, QosPolicy, Reliability, SubscriptionCounters, SubscriptionId, TOPIC_FC_ACK, TOPIC_FC_STATE,
    TOPIC_VISION_POSE,
};
pub use trajectory::{trajectory_eval, Segment, SegmentKind, Trajectory, TrajectoryError};
pub use vision::{GapWindow, VisionConfigError, VisionSource, VisionSourceConfig};
