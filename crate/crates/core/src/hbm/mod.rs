//! Slot-level model of one HBM switch: SRAM stages, frame interleaving over
//! HBM bank groups, and the command trace it issues.

mod schedule;
mod switch;
mod trace;
mod workload;

pub use schedule::{
    check_faw, check_group_reuse, check_timing, pfi_read_schedule,
    pfi_write_schedule, CommandKind, FrameTag, HbmCommand, TimingReport, TIME_EPS,
};
pub use switch::{run, HbmSwitch, SimOptions};
pub use trace::{BoundViolations, Counters, HeadArrival, Occupancy, SimTrace, COMPONENTS};
pub use workload::{
    frame_only_workload, lone_packet, mixed_workload, overloaded_output_workload, periodic_mixed_workload, place,
    LinePlacement, Packet, MAX_PACKET, MIN_PACKET,
};
