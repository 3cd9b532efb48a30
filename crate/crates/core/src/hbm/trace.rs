//! Simulation outputs.

use serde::{Deserialize, Serialize};

use super::schedule::HbmCommand;
use crate::config::SramBounds;

/// Bytes held per SRAM component (pad bytes included).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occupancy {
    pub inputs: u64,
    pub tail: u64,
    pub head: u64,
    pub outputs: u64,
}

impl Occupancy {
    pub fn total(&self) -> u64 {
        self.inputs + self.tail + self.head + self.outputs
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.inputs, self.tail, self.head, self.outputs]
    }

    pub fn max_with(&mut self, o: &Occupancy) {
        self.inputs = self.inputs.max(o.inputs);
        self.tail = self.tail.max(o.tail);
        self.head = self.head.max(o.head);
        self.outputs = self.outputs.max(o.outputs);
    }
}

pub const COMPONENTS: [&str; 4] = ["inputs", "tail", "head", "outputs"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub frames_formed: u64,
    pub frames_written: u64,
    pub frames_read: u64,
    pub padded_batches: u64,
    pub padded_frames: u64,
    pub padded_bytes: u64,
    pub bypasses: u64,
    pub idle_read_turns: u64,
    pub marked_frames: u64,
    pub marked_slots: u64,
    pub dropped_frames: u64,
}

/// Slots in which a component exceeded its bound, and the first such slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundViolations {
    pub counts: [u64; 4],
    pub first_slot: [Option<u64>; 4],
}

impl BoundViolations {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn record(&mut self, comp: usize, slot: u64) {
        self.counts[comp] += 1;
        if self.first_slot[comp].is_none() {
            self.first_slot[comp] = Some(slot);
        }
    }
}

/// A frame reaching the head SRAM, in order of arrival there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadArrival {
    pub slot: u64,
    pub output: u32,
    pub seq: u64,
    pub bypass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub slots: u64,
    pub slot_ns: f64,
    /// Bytes per slot on every port.
    pub bytes_per_slot: u64,
    /// Departure slot per packet, in workload order; `None` if still inside.
    pub departures: Vec<Option<u64>>,
    pub commands: Vec<HbmCommand>,
    /// Occupancy every `occupancy_stride` slots (empty when the stride is 0).
    pub occupancy: Vec<Occupancy>,
    pub occupancy_stride: u64,
    pub max_occupancy: Occupancy,
    pub bounds: SramBounds,
    pub bound_violations: BoundViolations,
    pub head_arrivals: Vec<HeadArrival>,
    pub counters: Counters,
}

impl SimTrace {
    pub fn delivered(&self) -> usize {
        self.departures.iter().filter(|d| d.is_some()).count()
    }
}
