//! Slot-level HBM switch running parallel frame interleaving.
//!
//! One slot is the time for a port to move `w = sram_width_bits / 8` bytes at
//! line rate P. Each slot, in order:
//!
//! 1. a new interleaving cycle may start: the write phase picks up to L/γ
//!    complete frames from the tail FIFO and schedules their bank passes;
//! 2. due HBM events run: write passes drain the tail, read turns pop one
//!    frame per output in round-robin order, read passes fill the head;
//! 3. in speedup mode, every n-th slot also runs one marked slot, which
//!    moves padded widow frames through a separate fixed-latency pipeline;
//! 4. inputs push one batch slice each through the cyclic crossbar, and the
//!    tail closes frames of K/k batches (or pads stale ones);
//! 5. the input lines deliver this slot's bytes into per-output VOQs, which
//!    are cut into k-byte batches;
//! 6. outputs pull one batch slice each from the head through the cyclic
//!    crossbar, reassemble packets and put them on the line.
//!
//! HBM command times are exact ns; they act in slot `ceil(t / slot_ns)`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::schedule::{
    check_faw, check_group_reuse, pfi_read_schedule, pfi_write_schedule, FrameTag, HbmCommand,
};
use super::trace::{BoundViolations, Counters, HeadArrival, Occupancy, SimTrace, COMPONENTS};
use super::workload::{place, LinePlacement, Packet, MAX_PACKET, MIN_PACKET};
use crate::config::{derive_and_validate, sram_bounds, DerivedConfig, HbmTiming, SramBounds, SwitchConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    /// Slots to simulate.
    pub slots: u64,
    /// Pad a VOQ batch or tail frame whose oldest byte is this many slots old.
    pub padding_timeout: Option<u64>,
    /// Send a lone tail frame straight to the head when the HBM holds nothing
    /// for its output.
    pub bypass: bool,
    /// Speedup 1 + 1/n: one marked slot after every n regular slots.
    pub speedup_n: Option<u64>,
    /// Minimum age (slots) of unframed data before it may be marked.
    /// Defaults to 2·K/w.
    pub widow_age: Option<u64>,
    /// Let packets straddle batches (and hence frames). When false, a batch
    /// is closed with padding before a packet that would not fit.
    pub allow_straddle: bool,
    /// Total HBM capacity in frames; frames beyond it are dropped.
    pub hbm_capacity_frames: Option<u64>,
    pub record_commands: bool,
    /// Record occupancy every this many slots; 0 disables the series.
    pub occupancy_stride: u64,
    /// Return `CapacityOverflow` on the first bound violation.
    pub strict_bounds: bool,
    pub min_packet: u64,
    pub max_packet: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            slots: 10_000,
            padding_timeout: None,
            bypass: false,
            speedup_n: None,
            widow_age: None,
            allow_straddle: true,
            hbm_capacity_frames: None,
            record_commands: true,
            occupancy_stride: 1,
            strict_bounds: false,
            min_packet: MIN_PACKET,
            max_packet: MAX_PACKET,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Src {
    input: usize,
    start: u64,
    end: u64,
}

/// Up to k bytes for one output: a run of one input's stream plus padding.
#[derive(Debug, Clone, Copy)]
struct Batch {
    src: Option<Src>,
    output: usize,
    pad: u64,
    born: u64,
}

impl Batch {
    fn new(src: Src, output: usize, pad: u64, born: u64) -> Self {
        Batch { src: Some(src), output, pad, born }
    }

    fn real(&self) -> u64 {
        self.src.map_or(0, |s| s.end - s.start)
    }
}

#[derive(Debug, Clone)]
struct Frame {
    uid: u64,
    output: usize,
    seq: u64,
    batches: Vec<Batch>,
}

impl Frame {
    fn real(&self) -> u64 {
        self.batches.iter().map(Batch::real).sum()
    }
    fn pad(&self) -> u64 {
        self.batches.iter().map(|b| b.pad).sum()
    }
}

#[derive(Debug)]
struct HeadFrame {
    frame: Frame,
    delivered: u64,
    consumed: u64,
}

#[derive(Debug)]
struct Marked {
    output: usize,
    chunks: Vec<Batch>,
    /// Marked-slot count at which the frame reaches its output.
    due: u64,
}

/// Input to tail, tail to head, head to output; K/k marked slots each.
const MARKED_STAGES: u64 = 3;

#[derive(Debug, Clone, Copy)]
enum Event {
    WritePass { pass: u64 },
    ReadTurn,
    ReadPass { output: usize, from_hbm: bool },
}

struct Stream {
    /// `(start, end, packet index)` in stream order.
    packets: Vec<(u64, u64, usize)>,
    arrived: u64,
    batched: u64,
}

/// A configured switch. [`HbmSwitch::run`] simulates one workload.
pub struct HbmSwitch {
    cfg: SwitchConfig,
    timing: HbmTiming,
    d: DerivedConfig,
    bounds: SramBounds,
    opts: SimOptions,
}

impl HbmSwitch {
    pub fn new(cfg: &SwitchConfig, timing: &HbmTiming, opts: SimOptions) -> Result<Self> {
        let d = derive_and_validate(cfg, timing)?;
        check_faw(timing, &d)?;
        check_group_reuse(cfg, timing, &d)?;
        let w = cfg.sram_width_bits / 8;
        if (d.frame_bytes / cfg.gamma) % w != 0 {
            return Err(Error::InvalidConfig(
                "a bank pass (T*S bytes) must be a whole number of SRAM words".into(),
            ));
        }
        if opts.speedup_n == Some(0) {
            return Err(Error::InvalidConfig("speedup_n must be at least 1".into()));
        }
        Ok(HbmSwitch { cfg: cfg.clone(), timing: timing.clone(), bounds: sram_bounds(cfg), d, opts })
    }

    pub fn derived(&self) -> &DerivedConfig {
        &self.d
    }

    pub fn run(&self, packets: &[Packet]) -> Result<SimTrace> {
        let w = self.cfg.sram_width_bits / 8;
        let placements = place(
            packets,
            self.cfg.n_ports as usize,
            w,
            (self.opts.min_packet, self.opts.max_packet),
        )?;
        Sim::new(self, packets, placements).run()
    }
}

/// Convenience wrapper: build a switch and run one workload.
pub fn run(
    packets: &[Packet],
    cfg: &SwitchConfig,
    timing: &HbmTiming,
    opts: SimOptions,
) -> Result<SimTrace> {
    HbmSwitch::new(cfg, timing, opts)?.run(packets)
}

struct Sim<'a> {
    sw: &'a HbmSwitch,
    packets: &'a [Packet],
    place: Vec<LinePlacement>,
    n: usize,
    w: u64,
    k: u64,
    big_k: u64,
    pass_bytes: u64,
    groups: u64,
    slot_ns: f64,

    // Input lines.
    by_input: Vec<Vec<usize>>,
    line_cursor: Vec<usize>,
    streams: Vec<Stream>,
    remaining: Vec<u64>,

    // Input ports.
    fifo: Vec<VecDeque<Batch>>,
    sending: Vec<Option<(Batch, u64)>>,

    // Tail SRAM.
    partial: Vec<Vec<Batch>>,
    tail_fifo: VecDeque<Frame>,
    next_seq: Vec<u64>,
    next_uid: u64,

    // HBM.
    writing: HashMap<u64, Frame>,
    hbm: Vec<VecDeque<Frame>>,
    hbm_bytes: u64,
    next_cycle: u64,
    read_turns: u64,
    events: BinaryHeap<Reverse<(u64, u64)>>,
    event_data: HashMap<u64, (u64, Event)>,
    next_event: u64,

    // Head SRAM and outputs.
    head: Vec<VecDeque<HeadFrame>>,
    received: Vec<u64>,
    line_free: Vec<u64>,
    on_line: Vec<VecDeque<(u64, u64)>>,
    sent: Vec<u64>,
    completed: Vec<Vec<usize>>,

    marked: VecDeque<Marked>,

    occ: Occupancy,
    marked_bytes: u64,
    arrived_real: u64,
    pad_live: u64,
    dropped_real: u64,

    departures: Vec<Option<u64>>,
    commands: Vec<HbmCommand>,
    series: Vec<Occupancy>,
    max_occ: Occupancy,
    viol: BoundViolations,
    head_log: Vec<HeadArrival>,
    c: Counters,
}

impl<'a> Sim<'a> {
    fn new(sw: &'a HbmSwitch, packets: &'a [Packet], place: Vec<LinePlacement>) -> Self {
        let n = sw.cfg.n_ports as usize;
        let mut by_input = vec![Vec::new(); n];
        let mut streams: Vec<Stream> = (0..n * n)
            .map(|_| Stream { packets: Vec::new(), arrived: 0, batched: 0 })
            .collect();
        for (idx, p) in packets.iter().enumerate() {
            by_input[p.input].push(idx);
            let off = place[idx].stream_offset;
            streams[p.input * n + p.output].packets.push((off, off + p.size, idx));
        }
        Sim {
            sw,
            packets,
            place,
            n,
            w: sw.cfg.sram_width_bits / 8,
            k: sw.d.batch_bytes,
            big_k: sw.d.frame_bytes,
            pass_bytes: sw.d.frame_bytes / sw.cfg.gamma,
            groups: sw.d.bank_groups,
            slot_ns: sw.d.slot_ns,
            by_input,
            line_cursor: vec![0; n],
            streams,
            remaining: packets.iter().map(|p| p.size).collect(),
            fifo: vec![VecDeque::new(); n],
            sending: vec![None; n],
            partial: vec![Vec::new(); n],
            tail_fifo: VecDeque::new(),
            next_seq: vec![0; n],
            next_uid: 0,
            writing: HashMap::new(),
            hbm: vec![VecDeque::new(); n],
            hbm_bytes: 0,
            next_cycle: 0,
            read_turns: 0,
            events: BinaryHeap::new(),
            event_data: HashMap::new(),
            next_event: 0,
            head: (0..n).map(|_| VecDeque::new()).collect(),
            received: vec![0; n],
            line_free: vec![0; n],
            on_line: vec![VecDeque::new(); n],
            sent: vec![0; n],
            completed: vec![Vec::new(); n],
            marked: VecDeque::new(),
            occ: Occupancy::default(),
            marked_bytes: 0,
            arrived_real: 0,
            pad_live: 0,
            dropped_real: 0,
            departures: vec![None; packets.len()],
            commands: Vec::new(),
            series: Vec::new(),
            max_occ: Occupancy::default(),
            viol: BoundViolations::default(),
            head_log: Vec::new(),
            c: Counters::default(),
        }
    }

    /// Slot in which something timed at `ns` takes effect.
    fn slot_of(&self, ns: f64) -> u64 {
        (ns / self.slot_ns - 1e-9).ceil().max(0.0) as u64
    }

    fn cycle_start(&self, c: u64) -> f64 {
        self.sw.timing.t_rcd_ns + c as f64 * self.sw.d.cycle_ns
    }

    fn schedule(&mut self, slot: u64, uid: u64, ev: Event) {
        let id = self.next_event;
        self.next_event += 1;
        self.event_data.insert(id, (uid, ev));
        self.events.push(Reverse((slot, id)));
    }

    /// Slot in which byte `x` of stream `s` arrived.
    fn byte_slot(&self, s: usize, x: u64) -> u64 {
        let pk = &self.streams[s].packets;
        let i = pk.partition_point(|&(_, end, _)| end <= x);
        let (start, _, idx) = pk[i];
        let size = self.packets[idx].size;
        let bt = self.place[idx].end - size + (x - start) + 1;
        bt.div_ceil(self.w) - 1
    }

    fn run(mut self) -> Result<SimTrace> {
        let slots = self.sw.opts.slots;
        for t in 0..slots {
            self.start_cycles(t)?;
            self.run_events(t)?;
            if let Some(n) = self.sw.opts.speedup_n {
                if t % n == n - 1 {
                    self.marked_slot(t);
                }
            }
            self.inputs_to_tail(t);
            self.inject(t);
            self.outputs(t);
            self.account(t)?;
        }
        Ok(SimTrace {
            slots,
            slot_ns: self.slot_ns,
            bytes_per_slot: self.w,
            departures: self.departures,
            commands: self.commands,
            occupancy: self.series,
            occupancy_stride: self.sw.opts.occupancy_stride,
            max_occupancy: self.max_occ,
            bounds: self.sw.bounds,
            bound_violations: self.viol,
            head_arrivals: self.head_log,
            counters: self.c,
        })
    }

    fn start_cycles(&mut self, t: u64) -> Result<()> {
        while self.slot_of(self.cycle_start(self.next_cycle)) <= t {
            let c = self.next_cycle;
            self.next_cycle += 1;
            let cs = self.cycle_start(c);
            let t_s = self.sw.d.t_segment_ns;
            let gamma = self.sw.cfg.gamma;
            let frame_ns = gamma as f64 * t_s;

            // Write phase: frame set fixed now.
            let cap = self.sw.opts.hbm_capacity_frames;
            let mut picked = Vec::new();
            let mut kept = VecDeque::new();
            while let Some(f) = self.tail_fifo.pop_front() {
                if picked.len() as u64 >= self.groups || self.hold_for_bypass(&f, &kept) {
                    kept.push_back(f);
                } else {
                    picked.push(f);
                }
            }
            self.tail_fifo = kept;
            for (slot_idx, f) in picked.into_iter().enumerate() {
                let stored: u64 =
                    self.hbm.iter().map(|q| q.len() as u64).sum::<u64>() + self.writing.len() as u64;
                if cap.is_some_and(|c| stored >= c) {
                    self.c.dropped_frames += 1;
                    self.occ.tail -= self.big_k;
                    self.dropped_real += f.real();
                    self.pad_live -= f.pad();
                    continue;
                }
                let start = cs + slot_idx as f64 * frame_ns;
                let tag = FrameTag::new(f.output as u32, f.seq, self.groups);
                let cmds = pfi_write_schedule(tag, &self.sw.cfg, &self.sw.timing, &self.sw.d, start)?;
                if self.sw.opts.record_commands {
                    self.commands.extend(cmds);
                }
                for g in 0..gamma {
                    let s = self.slot_of(start + (g + 1) as f64 * t_s);
                    self.schedule(s, f.uid, Event::WritePass { pass: g });
                }
                self.writing.insert(f.uid, f);
            }

            // Read phase turns.
            let rs = cs + self.sw.cfg.banks_per_channel as f64 * t_s + self.sw.timing.t_wtr_ns;
            for r in 0..self.groups {
                let s = self.slot_of(rs + r as f64 * frame_ns);
                self.schedule(s, c * self.groups + r, Event::ReadTurn);
            }
        }
        let _ = t;
        Ok(())
    }

    /// A frame waits in the tail, eligible for bypass, when nothing for its
    /// output is in the HBM and it is the only tail frame for that output.
    fn hold_for_bypass(&self, f: &Frame, kept: &VecDeque<Frame>) -> bool {
        if !self.sw.opts.bypass {
            return false;
        }
        let j = f.output;
        self.hbm[j].is_empty()
            && !self.writing.values().any(|x| x.output == j)
            && !kept.iter().any(|x| x.output == j)
            && !self.tail_fifo.iter().any(|x| x.output == j)
    }

    fn run_events(&mut self, t: u64) -> Result<()> {
        while let Some(&Reverse((slot, id))) = self.events.peek() {
            if slot > t {
                break;
            }
            self.events.pop();
            let (uid, ev) = self.event_data.remove(&id).expect("event payload");
            match ev {
                Event::WritePass { pass } => {
                    self.occ.tail -= self.pass_bytes;
                    self.hbm_bytes += self.pass_bytes;
                    if pass + 1 == self.sw.cfg.gamma {
                        let f = self.writing.remove(&uid).expect("frame being written");
                        self.c.frames_written += 1;
                        self.hbm[f.output].push_back(f);
                    }
                }
                Event::ReadTurn => self.read_turn(t, uid)?,
                Event::ReadPass { output, from_hbm } => {
                    if from_hbm {
                        self.hbm_bytes -= self.pass_bytes;
                    } else {
                        self.occ.tail -= self.pass_bytes;
                    }
                    self.occ.head += self.pass_bytes;
                    let hf = self.head[output]
                        .iter_mut()
                        .find(|h| h.frame.uid == uid)
                        .expect("head frame");
                    hf.delivered += self.pass_bytes;
                }
            }
        }
        Ok(())
    }

    fn read_turn(&mut self, t: u64, key: u64) -> Result<()> {
        let j = (self.read_turns % self.n as u64) as usize;
        self.read_turns += 1;
        let (cycle, turn) = (key / self.groups, key % self.groups);
        let cs = self.cycle_start(cycle);
        let t_s = self.sw.d.t_segment_ns;
        let start = cs
            + self.sw.cfg.banks_per_channel as f64 * t_s
            + self.sw.timing.t_wtr_ns
            + turn as f64 * self.sw.cfg.gamma as f64 * t_s;
        let (frame, from_hbm) = if let Some(f) = self.hbm[j].pop_front() {
            let tag = FrameTag::new(j as u32, f.seq, self.groups);
            let cmds = pfi_read_schedule(tag, &self.sw.cfg, &self.sw.timing, &self.sw.d, start)?;
            if self.sw.opts.record_commands {
                self.commands.extend(cmds);
            }
            self.c.frames_read += 1;
            (f, true)
        } else if self.sw.opts.bypass && !self.writing.values().any(|f| f.output == j) {
            match self.tail_fifo.iter().position(|f| f.output == j) {
                Some(pos) => {
                    self.c.bypasses += 1;
                    (self.tail_fifo.remove(pos).unwrap(), false)
                }
                None => {
                    self.c.idle_read_turns += 1;
                    return Ok(());
                }
            }
        } else {
            self.c.idle_read_turns += 1;
            return Ok(());
        };
        self.head_log.push(HeadArrival { slot: t, output: j as u32, seq: frame.seq, bypass: !from_hbm });
        for g in 0..self.sw.cfg.gamma {
            let s = self.slot_of(start + (g + 1) as f64 * t_s);
            self.schedule(s, frame.uid, Event::ReadPass { output: j, from_hbm });
        }
        self.head[j].push_back(HeadFrame { frame, delivered: 0, consumed: 0 });
        Ok(())
    }

    fn close_frame(&mut self, j: usize) {
        let batches = std::mem::take(&mut self.partial[j]);
        let seq = self.next_seq[j];
        self.next_seq[j] += 1;
        let uid = self.next_uid;
        self.next_uid += 1;
        self.c.frames_formed += 1;
        self.tail_fifo.push_back(Frame { uid, output: j, seq, batches });
    }

    fn inputs_to_tail(&mut self, t: u64) {
        let n = self.n;
        let per_frame = (self.big_k / self.k) as usize;
        for i in 0..n {
            if self.sending[i].is_none() && (t as usize + i) % n == 0 {
                if let Some(b) = self.fifo[i].pop_front() {
                    self.sending[i] = Some((b, 0));
                }
            }
            if let Some((b, sent)) = self.sending[i].as_mut() {
                *sent += 1;
                self.occ.inputs -= self.w;
                self.occ.tail += self.w;
                if *sent == n as u64 {
                    let b = *b;
                    self.sending[i] = None;
                    let j = b.output;
                    self.partial[j].push(b);
                    if self.partial[j].len() == per_frame {
                        self.close_frame(j);
                    }
                }
            }
        }
        if let Some(to) = self.sw.opts.padding_timeout {
            for j in 0..n {
                let Some(born) = self.partial[j].iter().map(|b| b.born).min() else {
                    continue;
                };
                if t.saturating_sub(born) >= to {
                    let missing = per_frame - self.partial[j].len();
                    for _ in 0..missing {
                        self.partial[j].push(Batch { src: None, output: j, pad: self.k, born: t });
                    }
                    let pad = missing as u64 * self.k;
                    self.occ.tail += pad;
                    self.pad_live += pad;
                    self.c.padded_frames += 1;
                    self.c.padded_bytes += pad;
                    self.close_frame(j);
                }
            }
        }
    }

    fn inject(&mut self, t: u64) {
        let n = self.n;
        let lo = self.w * t;
        let hi = self.w * (t + 1);
        for i in 0..n {
            while let Some(&idx) = self.by_input[i].get(self.line_cursor[i]) {
                let p = &self.packets[idx];
                let end = self.place[idx].end;
                let start = end - p.size;
                if start >= hi {
                    break;
                }
                let got = end.min(hi) - start.max(lo);
                let s = &mut self.streams[i * n + p.output];
                s.arrived += got;
                self.occ.inputs += got;
                self.arrived_real += got;
                if end <= hi {
                    self.line_cursor[i] += 1;
                } else {
                    break;
                }
            }
        }
        for s in 0..n * n {
            self.cut_batches(s, t);
        }
    }

    fn push_batch(&mut self, s: usize, end: u64, t: u64) {
        let (i, j) = (s / self.n, s % self.n);
        let start = self.streams[s].batched;
        let born = self.byte_slot(s, start);
        let pad = self.k - (end - start);
        self.streams[s].batched = end;
        if pad > 0 {
            self.occ.inputs += pad;
            self.pad_live += pad;
            self.c.padded_batches += 1;
            self.c.padded_bytes += pad;
        }
        let _ = t;
        self.fifo[i].push_back(Batch::new(Src { input: i, start, end }, j, pad, born));
    }

    fn cut_batches(&mut self, s: usize, t: u64) {
        let k = self.k;
        loop {
            let st = &self.streams[s];
            let (arrived, batched) = (st.arrived, st.batched);
            if arrived == batched {
                return;
            }
            let lim = batched + k;
            if self.sw.opts.allow_straddle {
                if arrived >= lim {
                    self.push_batch(s, lim, t);
                    continue;
                }
            } else {
                // Last packet boundary within [batched, lim].
                let pk = &st.packets;
                let mut i = pk.partition_point(|&(_, end, _)| end <= batched);
                let mut boundary = batched;
                while i < pk.len() && pk[i].1 <= lim {
                    boundary = pk[i].1;
                    i += 1;
                }
                if boundary == lim || boundary == batched {
                    // Exact fit, or one packet larger than a batch.
                    if arrived >= lim {
                        self.push_batch(s, lim, t);
                        continue;
                    }
                } else if arrived > boundary {
                    self.push_batch(s, boundary, t);
                    continue;
                }
            }
            break;
        }
        if let Some(to) = self.sw.opts.padding_timeout {
            let st = &self.streams[s];
            if st.arrived > st.batched && t.saturating_sub(self.byte_slot(s, st.batched)) >= to {
                let end = st.arrived;
                self.push_batch(s, end, t);
            }
        }
    }

    fn deliver(&mut self, j: usize, src: Src) {
        self.received[j] += src.end - src.start;
        let s = src.input * self.n + j;
        let pk = &self.streams[s].packets;
        let mut i = pk.partition_point(|&(_, end, _)| end <= src.start);
        while i < pk.len() && pk[i].0 < src.end {
            let (a, b, idx) = pk[i];
            let overlap = b.min(src.end) - a.max(src.start);
            self.remaining[idx] -= overlap;
            if self.remaining[idx] == 0 {
                self.completed[j].push(idx);
            }
            i += 1;
        }
    }

    fn outputs(&mut self, t: u64) {
        let n = self.n;
        for j in 0..n {
            let Some(hf) = self.head[j].front_mut() else { continue };
            if hf.consumed + self.w > hf.delivered {
                continue;
            }
            let pos_in_batch = hf.consumed % self.k;
            if (t as usize + j) % n != (pos_in_batch / self.w) as usize {
                continue;
            }
            let b = hf.frame.batches[(hf.consumed / self.k) as usize];
            hf.consumed += self.w;
            let done = hf.consumed == self.big_k;
            self.occ.head -= self.w;
            let real = b.real();
            let lo = pos_in_batch;
            let hi = (pos_in_batch + self.w).min(real);
            if lo < hi {
                let src = b.src.unwrap();
                self.occ.outputs += hi - lo;
                self.deliver(j, Src { input: src.input, start: src.start + lo, end: src.start + hi });
            }
            let pad = self.w - hi.saturating_sub(lo);
            self.pad_live -= pad;
            if done {
                self.head[j].pop_front();
            }
        }
        // Line scheduling, ties by (arrival slot, id).
        for j in 0..n {
            if self.completed[j].is_empty() {
                continue;
            }
            let mut done = std::mem::take(&mut self.completed[j]);
            done.sort_by_key(|&idx| (self.packets[idx].arrival_slot, self.packets[idx].id));
            for idx in done {
                let size = self.packets[idx].size;
                let start = self.line_free[j].max(self.w * (t + 1));
                let end = start + size;
                self.line_free[j] = end;
                self.on_line[j].push_back((start, end));
                self.departures[idx] = Some(end.div_ceil(self.w) - 1);
            }
        }
        // Bytes that left on the line by the end of this slot.
        let now = self.w * (t + 1);
        let mut out_occ = 0;
        for j in 0..n {
            while let Some(&(a, b)) = self.on_line[j].front() {
                if b <= now {
                    self.sent[j] += b - a;
                    self.on_line[j].pop_front();
                } else {
                    break;
                }
            }
            let partial = self.on_line[j].front().map_or(0, |&(a, b)| now.saturating_sub(a).min(b - a));
            out_occ += self.received[j] - self.sent[j] - partial;
        }
        self.occ.outputs = out_occ;
    }

    /// One marked slot: frames whose pipeline time is up reach their output,
    /// then the oldest unframed data (if old enough) enters the pipeline.
    fn marked_slot(&mut self, t: u64) {
        self.c.marked_slots += 1;
        let now = self.c.marked_slots;
        while self.marked.front().is_some_and(|m| m.due <= now) {
            let m = self.marked.pop_front().unwrap();
            for b in m.chunks {
                self.marked_bytes -= b.real() + b.pad;
                self.pad_live -= b.pad;
                if let Some(src) = b.src {
                    self.deliver(m.output, src);
                }
            }
        }
        self.pick_widow(t, now + MARKED_STAGES * self.big_k / self.k);
    }

    /// Marks the unframed data holding the oldest byte, if old enough.
    fn pick_widow(&mut self, t: u64, due: u64) {
        let n = self.n;
        let min_age = self.sw.opts.widow_age.unwrap_or(2 * self.big_k / self.w);
        // (age, input or n for tail, output); larger age wins, then lower ids.
        let mut best: Option<(u64, usize, usize)> = None;
        let mut consider = |age: u64, i: usize, j: usize| {
            let better = match best {
                None => true,
                Some((a, bi, bj)) => age > a || (age == a && (i, j) < (bi, bj)),
            };
            if better {
                best = Some((age, i, j));
            }
        };
        for s in 0..n * n {
            let st = &self.streams[s];
            if st.arrived > st.batched {
                consider(t - self.byte_slot(s, st.batched).min(t), s / n, s % n);
            }
        }
        for j in 0..n {
            if let Some(born) = self.partial[j].iter().map(|b| b.born).min() {
                consider(t - born.min(t), n, j);
            }
        }
        let Some((age, i, j)) = best else { return };
        if age < min_age {
            return;
        }
        let chunks = if i < n {
            let s = i * n + j;
            let start = self.streams[s].batched;
            let end = self.streams[s].arrived;
            let born = self.byte_slot(s, start);
            self.streams[s].batched = end;
            self.occ.inputs -= end - start;
            vec![Batch::new(Src { input: i, start, end }, j, 0, born)]
        } else {
            let v = std::mem::take(&mut self.partial[j]);
            self.occ.tail -= v.len() as u64 * self.k;
            v
        };
        self.marked_bytes += chunks.iter().map(|b| b.real() + b.pad).sum::<u64>();
        self.c.marked_frames += 1;
        self.marked.push_back(Marked { output: j, chunks, due });
    }

    fn account(&mut self, t: u64) -> Result<()> {
        let held = self.occ.total() + self.hbm_bytes + self.marked_bytes;
        let sent: u64 = self.sent.iter().sum::<u64>()
            + (0..self.n)
                .map(|j| {
                    self.on_line[j]
                        .front()
                        .map_or(0, |&(a, b)| (self.w * (t + 1)).saturating_sub(a).min(b - a))
                })
                .sum::<u64>();
        if held + sent + self.dropped_real != self.arrived_real + self.pad_live {
            return Err(Error::Invariant(format!(
                "byte conservation broken at slot {t}: held {held} + sent {sent} + dropped {} != arrived {} + pad {}",
                self.dropped_real, self.arrived_real, self.pad_live
            )));
        }
        let o = self.occ;
        self.max_occ.max_with(&o);
        let b = self.sw.bounds;
        let limits = [b.inputs_bits, b.tail_bits, b.head_bits, b.outputs_bits];
        for (c, (&bytes, &lim)) in o.as_array().iter().zip(&limits).enumerate() {
            if bytes * 8 > lim {
                self.viol.record(c, t);
                if self.sw.opts.strict_bounds {
                    return Err(Error::CapacityOverflow {
                        component: COMPONENTS[c],
                        slot: t,
                        bytes,
                        bound_bits: lim,
                    });
                }
            }
        }
        let stride = self.sw.opts.occupancy_stride;
        if stride > 0 && t % stride == 0 {
            self.series.push(o);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hbm::schedule::check_timing;
    use crate::hbm::workload::{frame_only_workload, lone_packet};

    fn desk() -> (SwitchConfig, HbmTiming) {
        (SwitchConfig::desk(), HbmTiming::desk())
    }

    #[test]
    fn empty_workload_is_idle() {
        let (c, t) = desk();
        let tr = run(&[], &c, &t, SimOptions { slots: 500, ..Default::default() }).unwrap();
        assert!(tr.commands.is_empty());
        assert_eq!(tr.max_occupancy.total(), 0);
    }

    #[test]
    fn lone_packet_needs_padding() {
        let (c, t) = desk();
        let wl = lone_packet(1, 2, 100, 3);
        let stuck = run(&wl, &c, &t, SimOptions { slots: 2000, ..Default::default() }).unwrap();
        assert_eq!(stuck.departures[0], None);
        let opts = SimOptions { slots: 2000, padding_timeout: Some(10), bypass: true, ..Default::default() };
        let tr = run(&wl, &c, &t, opts).unwrap();
        assert!(tr.departures[0].is_some());
        assert!(tr.commands.is_empty());
        assert_eq!(tr.counters.bypasses, 1);
        let opts = SimOptions { slots: 2000, padding_timeout: Some(10), ..Default::default() };
        let tr = run(&wl, &c, &t, opts).unwrap();
        assert!(tr.departures[0].is_some());
        assert_eq!(tr.counters.frames_written, 1);
    }

    #[test]
    fn consecutive_frames_use_successive_groups() {
        let (c, t) = desk();
        let k = c.frame_bytes();
        let w = c.sram_width_bits / 8;
        let mut wl = Vec::new();
        let mut id = 0;
        for f in 0..2 {
            for b in 0..k / 256 {
                let off = f * k + (b + 1) * 256;
                wl.push(Packet { id, input: 0, output: 3, size: 256, arrival_slot: off.div_ceil(w) - 1 });
                id += 1;
            }
        }
        let tr = run(&wl, &c, &t, SimOptions { slots: 3000, ..Default::default() }).unwrap();
        assert_eq!(tr.delivered(), wl.len());
        let seqs: Vec<u64> = tr.head_arrivals.iter().map(|h| h.seq).collect();
        assert_eq!(seqs, vec![0, 1]);
        let banks: std::collections::BTreeSet<u32> = tr
            .commands
            .iter()
            .filter(|x| x.kind == super::super::schedule::CommandKind::Act)
            .map(|x| x.bank)
            .collect();
        let g = c.gamma as u32;
        assert!(banks.iter().all(|b| *b < 2 * g));
        assert!(banks.iter().any(|b| *b >= g));
        let d: Vec<u64> = tr.departures.iter().map(|d| d.unwrap()).collect();
        assert!(d.windows(2).all(|x| x[0] < x[1]));
    }

    #[test]
    fn frame_only_trace_meets_timing() {
        let (c, t) = desk();
        let wl = frame_only_workload(&c, 0.9, 4000, &[64, 128, 256], 1);
        let opts = SimOptions { slots: 4000, ..Default::default() };
        let sw = HbmSwitch::new(&c, &t, opts).unwrap();
        let tr = sw.run(&wl).unwrap();
        let rep = check_timing(&tr.commands, &c, &t, sw.derived());
        assert_eq!(rep.violations(), 0, "{rep:?}");
        assert!(tr.counters.frames_read > 0);
    }

    #[test]
    fn infeasible_timing_rejected() {
        let (c, mut t) = desk();
        t.t_faw_ns = 100.0;
        assert!(matches!(
            HbmSwitch::new(&c, &t, SimOptions::default()),
            Err(Error::TimingInfeasible(_))
        ));
    }
}
