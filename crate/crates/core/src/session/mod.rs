//! Live sessions: per-frame classification with temporal smoothing and
//! correction, served over wire protocol v1, with per-day activity logs.

pub mod client;
pub mod protocol;
pub mod server;
pub mod service;
pub mod smoothing;
pub mod store;

pub use client::{replay, Client, Replay};
pub use protocol::{ClientMessage, ErrorCode, ResultMessage, ServerMessage, PROTOCOL_VERSION};
pub use server::{Server, ShutdownHandle};
pub use service::{FrameMessage, ServiceError, SessionConfig, SessionManager};
pub use smoothing::LabelSmoother;
pub use store::{
    activity_report, pose_seconds, ActivityReport, DateRange, LogStore, PoseActivity, SessionEntry, SessionRecord,
    UNSTABLE,
};
