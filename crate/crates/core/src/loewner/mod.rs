//! Discretised chordal Loewner evolution.

pub mod driver;
pub mod flow;
pub mod sweep;
pub mod trace;

pub use driver::{sample_driver, DriverKind, DrivingPath};
pub use flow::{
    advance_step, flow_point_to, forward_map, swallow_time, swallow_time_interior, swallow_times_grid,
    PointStatus, SwallowTime, TrackedPoint,
};
pub use sweep::{AdaptiveSweep, SweepConfig};
pub use trace::{alive_at, gap_at, hull_distance, hull_distance_below, hull_distance_past, trace_point, trace_points, TracePoint};
