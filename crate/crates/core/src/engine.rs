//! Event-driven simulation of the tile pipeline.
//!
//! Each reduction step `s` of the blocked GEMM reads one A and one B tile
//! into a double-buffered slot, computes on the array and, at the end of an
//! output block, drains the finished block into the C page. The read for
//! step `s` may start once step `s - 2` has released its buffers. A compute
//! starts once its operands have arrived and the driver has taken the
//! previous completion interrupt and rung the doorbell.
//!
//! Time before the first compute and after the last one is charged to
//! `link_txn` (`dram` in device-memory mode). Every gap between computes is
//! charged first to `control`, up to the interrupt plus doorbell cost, and
//! the remainder is split over the buckets of the transfer the array was
//! waiting on, in proportion to where that transfer spent its time.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::dtype::DataType;
use crate::error::{Error, Result};
use crate::gemm::{tile_geometry, TileAccessTrace, PAGE_BYTES};
use crate::link::transfer_timing;
use crate::memory::{Llc, MemoryServer};
use crate::report::{Bucket, LatencyBreakdown, SimReport, SCHEMA_VERSION};
use crate::system::{AccessMode, DrainPolicy, SystemConfig};
use crate::systolic::tile_compute_cycles;
use crate::time::Ps;
use crate::translation::{footprint_pages, Smmu};

const PTE_BYTES: usize = 8;
const RING: usize = 4;

/// Buckets a transfer's time can fall in, in the order of `Xfer::parts`.
const PART_BUCKETS: [Bucket; 5] =
    [Bucket::Fetch, Bucket::Translation, Bucket::LinkTxn, Bucket::LlcBus, Bucket::Dram];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    Read,
    Compute,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stage {
    Start,
    Translate,
    Access,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Read { step: usize, op: usize, stage: Stage },
    TryCompute { step: usize },
    ComputeDone { step: usize },
    Write { id: usize, stage: Stage },
}

#[derive(Debug, Clone, Copy, Default)]
struct Xfer {
    page: u64,
    addr: u64,
    bytes: usize,
    parts: [Ps; 5],
    done: Option<Ps>,
}

impl Xfer {
    fn new(page: u64, addr: u64, bytes: usize) -> Xfer {
        Xfer { page, addr, bytes, parts: [Ps::ZERO; 5], done: None }
    }
}

type Key = (Ps, usize, Phase, u64, Ev);

struct Sim<'a> {
    cfg: &'a SystemConfig,
    heap: BinaryHeap<Reverse<Key>>,
    seq: u64,

    steps: usize,
    k_tiles: usize,
    n_tiles: usize,
    b_base: u64,
    c_base: u64,
    block_bytes: usize,
    blocks_per_page: usize,
    compute_time: Ps,
    control_time: Ps,

    read_chan_free: Vec<Ps>,
    write_chan_free: Vec<Ps>,
    read_link_free: Ps,
    write_link_free: Ps,
    read_link_busy: Ps,
    walker_free: Ps,
    mem: MemoryServer,
    llc: Option<Llc>,
    smmu: Smmu,

    reads: [Xfer; RING * 2],
    writes: Vec<Xfer>,
    /// Write id of the drain holding the C page, if any.
    draining: Option<usize>,
    pending_blocks: usize,
    last_write_done: Ps,
    /// Block-final compute waiting for the C page, with its end time.
    held: Option<(usize, Ps)>,

    next_step: usize,
    computing: bool,
    launch_at: Ps,
    prev_done: Ps,

    breakdown: LatencyBreakdown,
    packets: u64,
    descriptors: u64,
    interrupts: u64,
    doorbells: u64,
    bytes_read: u64,
    bytes_written: u64,
    link_bytes: u64,
    idle_sum: Ps,
    idle_max_steady: Ps,
}

impl<'a> Sim<'a> {
    fn push(&mut self, t: Ps, ev: Ev) {
        let (tile, phase) = match ev {
            Ev::Read { step, .. } => (step, Phase::Read),
            Ev::TryCompute { step } | Ev::ComputeDone { step } => (step, Phase::Compute),
            Ev::Write { id, .. } => (self.write_tile(id), Phase::Write),
        };
        self.seq += 1;
        self.heap.push(Reverse((t, tile, phase, self.seq, ev)));
    }

    /// Step index a write belongs to, for tie-breaking.
    fn write_tile(&self, id: usize) -> usize {
        let blk = ((self.writes[id].addr / PAGE_BYTES as u64 - self.c_base) as usize
            * self.blocks_per_page)
            + (self.writes[id].addr % PAGE_BYTES as u64) as usize / self.block_bytes;
        (blk + 1) * self.k_tiles - 1
    }

    fn dma_cycles(&self, n: f64) -> Ps {
        Ps::from_cycles(n, self.cfg.dma.clock_hz)
    }

    fn slot(step: usize, op: usize) -> usize {
        (step % RING) * 2 + op
    }

    fn is_block_end(&self, step: usize) -> bool {
        step % self.k_tiles == self.k_tiles - 1
    }

    fn issue_reads(&mut self, step: usize, t: Ps) {
        let blk = step / self.k_tiles;
        let (i, j, k) = (blk / self.n_tiles, blk % self.n_tiles, step % self.k_tiles);
        let a_page = (i * self.k_tiles + k) as u64;
        let b_page = self.b_base + (j * self.k_tiles + k) as u64;
        for (op, page) in [(0, a_page), (1, b_page)] {
            self.reads[Self::slot(step, op)] = Xfer::new(page, page * PAGE_BYTES as u64, PAGE_BYTES);
            self.push(t, Ev::Read { step, op, stage: Stage::Start });
        }
    }

    fn issue_write(&mut self, blk: usize, blocks: usize, t: Ps) {
        let first = blk + 1 - blocks;
        let page = self.c_base + (first / self.blocks_per_page) as u64;
        let addr = page * PAGE_BYTES as u64 + ((first % self.blocks_per_page) * self.block_bytes) as u64;
        let id = self.writes.len();
        self.writes.push(Xfer::new(page, addr, blocks * self.block_bytes));
        self.draining = Some(id);
        self.push(t, Ev::Write { id, stage: Stage::Start });
    }

    fn xfer(&mut self, write: bool, idx: usize) -> &mut Xfer {
        if write {
            &mut self.writes[idx]
        } else {
            &mut self.reads[idx]
        }
    }

    /// Descriptor handling on the first free DMA channel.
    fn stage_start(&mut self, write: bool, idx: usize, t: Ps) -> Ps {
        let bytes = self.xfer(write, idx).bytes;
        let timing = transfer_timing(bytes, &self.cfg.link, &self.cfg.dma);
        let chans = if write { &mut self.write_chan_free } else { &mut self.read_chan_free };
        let (c, free) = chans.iter().copied().enumerate().min_by_key(|&(i, f)| (f, i)).unwrap();
        let start = t.max(free);
        chans[c] = start + timing.fetch;
        self.descriptors += timing.descriptors;
        let end = start + timing.fetch;
        self.xfer(write, idx).parts[0] += end - t;
        end
    }

    fn stage_translate(&mut self, write: bool, idx: usize, t: Ps) -> Ps {
        if self.cfg.mode == AccessMode::DevMem {
            return t;
        }
        let page = self.xfer(write, idx).page;
        let hz = self.cfg.dma.clock_hz;
        let lookup = self.dma_cycles(1.0);
        let base = self.dma_cycles(self.cfg.smmu.ptw_base_cycles as f64);
        let mut end = t + lookup;
        let Sim { smmu, mem, walker_free, .. } = self;
        smmu.translate_with(page, |visits| {
            let ready = t + lookup;
            let start = ready.max(*walker_free);
            let mut at = start + base;
            for _ in 0..visits {
                at = mem.serve(at, PTE_BYTES).done;
            }
            *walker_free = at;
            end = at;
            (at - ready - base).to_cycles(hz).round() as u64
        });
        self.xfer(write, idx).parts[1] += end - t;
        end
    }

    fn stage_access(&mut self, write: bool, idx: usize, t: Ps) -> Ps {
        let (bytes, addr) = {
            let x = self.xfer(write, idx);
            (x.bytes, x.addr)
        };
        let cfg = self.cfg;
        let mut e1 = t;
        let mut mem_done = t;
        match cfg.mode {
            AccessMode::DM | AccessMode::DevMem => {
                mem_done = self.mem.serve(t, bytes).done;
            }
            AccessMode::DC => {
                let llc = self.llc.as_mut().expect("LLC present in DC mode");
                let misses = llc.access_range(addr, bytes, write);
                let hit = self.dma_cycles(cfg.llc.hit_latency_cycles as f64);
                e1 = t + hit + Ps::for_bytes(bytes as f64, cfg.llc.bus_gbps * 1e9);
                let to_dram = if write && cfg.llc.write_allocate { 0 } else { misses };
                if to_dram > 0 {
                    let line = cfg.llc.line_bytes;
                    mem_done = self.mem.serve(t + hit, to_dram as usize * line).done;
                }
            }
        }
        let e2 = e1.max(mem_done);
        let e3 = if cfg.mode == AccessMode::DevMem {
            e2
        } else {
            let timing = transfer_timing(bytes, &cfg.link, &cfg.dma);
            let free = if write { &mut self.write_link_free } else { &mut self.read_link_free };
            let start = t.max(*free);
            *free = start + timing.wire;
            if !write {
                self.read_link_busy += timing.wire;
            }
            self.packets += timing.packets;
            self.link_bytes += bytes as u64;
            e2.max(start + timing.wire) + timing.latency
        };
        if write {
            self.bytes_written += bytes as u64;
        } else {
            self.bytes_read += bytes as u64;
        }
        let x = self.xfer(write, idx);
        x.parts[3] += e1 - t;
        x.parts[4] += e2 - e1;
        x.parts[2] += e3 - e2;
        e3
    }

    fn handle_transfer(&mut self, write: bool, idx: usize, stage: Stage, t: Ps, ev: impl Fn(Stage) -> Ev) {
        let next = match stage {
            Stage::Start => (self.stage_start(write, idx, t), Stage::Translate),
            Stage::Translate => (self.stage_translate(write, idx, t), Stage::Access),
            Stage::Access => (self.stage_access(write, idx, t), Stage::Done),
            Stage::Done => {
                self.xfer(write, idx).done = Some(t);
                if write {
                    self.last_write_done = self.last_write_done.max(t);
                    if self.draining == Some(idx) {
                        self.draining = None;
                        if let Some((step, ended)) = self.held.take() {
                            let parts = self.writes[idx].parts;
                            self.attribute(t - ended, &parts);
                            self.idle_sum += t - ended;
                            self.finish_compute(step, t);
                        }
                    }
                }
                let step = self.next_step;
                if step < self.steps {
                    self.push(t, Ev::TryCompute { step });
                }
                return;
            }
        };
        self.push(next.0, ev(next.1));
    }

    fn try_compute(&mut self, step: usize, t: Ps) {
        if step != self.next_step || self.computing || t < self.launch_at {
            return;
        }
        let a = self.reads[Self::slot(step, 0)];
        let b = self.reads[Self::slot(step, 1)];
        let (Some(a_done), Some(b_done)) = (a.done, b.done) else { return };
        if step == 0 {
            self.breakdown.add(self.edge_bucket(), t);
        } else {
            let gap = t - self.prev_done;
            let ctrl = gap.min(self.control_time);
            self.breakdown.add(Bucket::Control, ctrl);
            let rest = gap - ctrl;
            if rest > Ps::ZERO {
                let blocker = if b_done >= a_done { b } else { a };
                self.attribute(rest, &blocker.parts);
            }
            self.idle_sum += rest;
            if step >= 2 {
                self.idle_max_steady = self.idle_max_steady.max(rest);
            }
        }
        self.computing = true;
        self.breakdown.add(Bucket::Compute, self.compute_time);
        self.push(t + self.compute_time, Ev::ComputeDone { step });
    }

    /// A finished output block can only leave the array once the C page
    /// has drained; until then the completion is held.
    fn compute_done(&mut self, step: usize, t: Ps) {
        if self.is_block_end(step) && self.draining.is_some() {
            self.held = Some((step, t));
            return;
        }
        self.finish_compute(step, t);
    }

    fn finish_compute(&mut self, step: usize, t: Ps) {
        self.computing = false;
        self.prev_done = t;
        self.next_step = step + 1;
        self.interrupts += 1;
        if step + 2 < self.steps {
            self.issue_reads(step + 2, t);
        }
        if self.is_block_end(step) {
            let blk = step / self.k_tiles;
            let last = step + 1 == self.steps;
            match self.cfg.drain {
                DrainPolicy::PerBlock => self.issue_write(blk, 1, t),
                DrainPolicy::PerPage => {
                    self.pending_blocks += 1;
                    if self.pending_blocks == self.blocks_per_page
                        || (blk + 1) % self.blocks_per_page == 0
                        || last
                    {
                        let n = self.pending_blocks;
                        self.pending_blocks = 0;
                        self.issue_write(blk, n, t);
                    }
                }
            }
        }
        if self.next_step < self.steps {
            self.doorbells += 1;
            self.launch_at = t + self.control_time;
            self.push(self.launch_at, Ev::TryCompute { step: self.next_step });
        }
    }

    fn edge_bucket(&self) -> Bucket {
        if self.cfg.mode == AccessMode::DevMem {
            Bucket::Dram
        } else {
            Bucket::LinkTxn
        }
    }

    /// Splits `rest` over the parts in proportion, largest remainder first.
    fn attribute(&mut self, rest: Ps, parts: &[Ps; 5]) {
        let total: u64 = parts.iter().map(|p| p.0).sum();
        if total == 0 {
            self.breakdown.add(self.edge_bucket(), rest);
            return;
        }
        let mut shares = [0u64; 5];
        let mut rems = [(0u128, 0usize); 5];
        let mut given = 0u64;
        for (i, p) in parts.iter().enumerate() {
            let num = rest.0 as u128 * p.0 as u128;
            shares[i] = (num / total as u128) as u64;
            rems[i] = (num % total as u128, i);
            given += shares[i];
        }
        rems.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
        for &(_, i) in rems.iter().take((rest.0 - given) as usize) {
            shares[i] += 1;
        }
        for (i, s) in shares.iter().enumerate() {
            self.breakdown.add(PART_BUCKETS[i], Ps(*s));
        }
    }

    fn run(&mut self) {
        for step in 0..self.steps.min(2) {
            self.issue_reads(step, Ps::ZERO);
        }
        self.push(Ps::ZERO, Ev::TryCompute { step: 0 });
        while let Some(Reverse((t, _, _, _, ev))) = self.heap.pop() {
            match ev {
                Ev::Read { step, op, stage } => self.handle_transfer(false, Self::slot(step, op), stage, t, |stage| {
                    Ev::Read { step, op, stage }
                }),
                Ev::Write { id, stage } => {
                    self.handle_transfer(true, id, stage, t, |stage| Ev::Write { id, stage })
                }
                Ev::TryCompute { step } => self.try_compute(step, t),
                Ev::ComputeDone { step } => self.compute_done(step, t),
            }
        }
    }
}

/// Simulates an `m × k` by `k × n` GEMM on the configured system.
pub fn simulate_gemm(m: usize, n: usize, k: usize, dtype: DataType, cfg: &SystemConfig) -> Result<SimReport> {
    if m == 0 || n == 0 || k == 0 {
        return Err(Error::InvalidInput("GEMM dimensions must be at least 1".into()));
    }
    cfg.validate_for_simulation()?;
    let trace = TileAccessTrace::for_dims(m, n, k, dtype);
    let geo = tile_geometry(dtype);
    let w = geo.rows;
    let acc = dtype.accumulator().element_size();
    let block_bytes = w * w * acc;
    let steps = trace.compute_events();
    let a_pages = (trace.m_tiles * trace.k_tiles) as u64;
    let b_pages = (trace.n_tiles * trace.k_tiles) as u64;
    let array = crate::systolic::ArrayConfig { dtype, ..cfg.array };
    let compute_time = Ps::from_cycles(tile_compute_cycles(&array, geo.cols) as f64, cfg.array.freq_hz);
    let control_cycles = (cfg.dma.interrupt_cycles + cfg.dma.doorbell_cycles) as f64;

    let mut sim = Sim {
        cfg,
        heap: BinaryHeap::new(),
        seq: 0,
        steps,
        k_tiles: trace.k_tiles,
        n_tiles: trace.n_tiles,
        b_base: a_pages,
        c_base: a_pages + b_pages,
        block_bytes,
        blocks_per_page: PAGE_BYTES / block_bytes,
        compute_time,
        control_time: Ps::from_cycles(control_cycles, cfg.dma.clock_hz),
        read_chan_free: vec![Ps::ZERO; cfg.dma.read_channels],
        write_chan_free: vec![Ps::ZERO; cfg.dma.write_channels],
        read_link_free: Ps::ZERO,
        write_link_free: Ps::ZERO,
        read_link_busy: Ps::ZERO,
        walker_free: Ps::ZERO,
        mem: MemoryServer::new(cfg.operand_memory().clone()),
        llc: (cfg.mode == AccessMode::DC).then(|| Llc::new(cfg.llc)),
        smmu: Smmu::new(cfg.smmu),
        reads: [Xfer::default(); RING * 2],
        writes: Vec::new(),
        draining: None,
        pending_blocks: 0,
        last_write_done: Ps::ZERO,
        held: None,
        next_step: 0,
        computing: false,
        launch_at: Ps::ZERO,
        prev_done: Ps::ZERO,
        breakdown: LatencyBreakdown::default(),
        packets: 0,
        descriptors: 0,
        interrupts: 0,
        doorbells: 0,
        bytes_read: 0,
        bytes_written: 0,
        link_bytes: 0,
        idle_sum: Ps::ZERO,
        idle_max_steady: Ps::ZERO,
    };
    sim.run();

    if sim.next_step != steps {
        return Err(Error::Invariant(format!("only {} of {steps} computes ran", sim.next_step)));
    }
    let end = sim.prev_done.max(sim.last_write_done);
    let edge = sim.edge_bucket();
    sim.breakdown.add(edge, end - sim.prev_done);
    if sim.breakdown.total() != end {
        return Err(Error::Invariant(format!(
            "breakdown sums to {} but the run took {}",
            sim.breakdown.total(),
            end
        )));
    }
    let expected_read = 2 * steps as u64 * PAGE_BYTES as u64;
    let expected_write = (trace.output_blocks() * block_bytes) as u64;
    if sim.bytes_read != expected_read || sim.bytes_written != expected_write {
        return Err(Error::Invariant("transferred bytes do not match the tile trace".into()));
    }
    if sim.writes.iter().any(|w| w.done.is_none()) {
        return Err(Error::Invariant("a C drain never completed".into()));
    }

    let hz = cfg.array.freq_hz;
    let secs = end.as_secs();
    let frac = |p: Ps| if end.0 == 0 { 0.0 } else { p.0 as f64 / end.0 as f64 };
    let (llc_hits, llc_misses) = sim.llc.as_ref().map_or((0, 0), |l| (l.hits(), l.misses()));
    Ok(SimReport {
        schema_version: SCHEMA_VERSION,
        config_hash: cfg.config_hash(),
        m,
        n,
        k,
        dtype: dtype.name().to_string(),
        mode: cfg.mode.name().to_string(),
        drain: cfg.drain.name().to_string(),
        total: end,
        total_cycles: secs * hz,
        breakdown: sim.breakdown,
        translation: sim.smmu.stats_report(end.to_cycles(cfg.dma.clock_hz)),
        footprint_pages: footprint_pages(m, n, k, dtype),
        compute_events: steps as u64,
        packets: sim.packets,
        descriptors: sim.descriptors,
        interrupts: sim.interrupts,
        doorbells: sim.doorbells,
        bytes_read: sim.bytes_read,
        bytes_written: sim.bytes_written,
        link_bytes: sim.link_bytes,
        dram_bytes: sim.mem.bytes_served(),
        llc_hits,
        llc_misses,
        mean_idle_cycles: if steps > 1 { sim.idle_sum.to_cycles(hz) / (steps - 1) as f64 } else { 0.0 },
        max_steady_idle_cycles: sim.idle_max_steady.to_cycles(hz),
        measured_eta_sa: frac(sim.breakdown.compute),
        measured_eta_io: frac(sim.read_link_busy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::overlap_bound;
    use crate::link::LinkConfig;

    fn int8(n: usize, cfg: &SystemConfig) -> SimReport {
        simulate_gemm(n, n, n, DataType::Int8, cfg).unwrap()
    }

    #[test]
    fn compute_bound_limit() {
        let cfg = SystemConfig::ideal(1e6);
        let r = int8(512, &cfg);
        let ideal = r.compute_events as f64 * 286.0;
        assert!((r.total_cycles / ideal - 1.0).abs() < 0.01, "{} vs {ideal}", r.total_cycles);
    }

    #[test]
    fn io_bound_limit() {
        let mut cfg = SystemConfig::ideal(2.0);
        cfg.array.freq_hz = 1e18;
        let r = int8(512, &cfg);
        let predicted = r.bytes_read as f64 / 2e9;
        assert!((r.total.as_secs() / predicted - 1.0).abs() < 0.05);
    }

    #[test]
    fn overlap_threshold() {
        let bound = overlap_bound(16, 1e9, 1, 256, 1.0, 1.0).unwrap();
        let at = int8(512, &SystemConfig::ideal(bound / 1e9));
        assert!(at.max_steady_idle_cycles < 1.0, "{}", at.max_steady_idle_cycles);
        let half = int8(512, &SystemConfig::ideal(bound / 2e9));
        assert!(half.max_steady_idle_cycles > 0.0);
        let predicted = half.bytes_read as f64 / (bound / 2.0);
        assert!((half.total.as_secs() / predicted - 1.0).abs() < 0.05);
    }

    #[test]
    fn breakdown_partitions_total() {
        for mode in [AccessMode::DM, AccessMode::DC, AccessMode::DevMem] {
            for drain in [DrainPolicy::PerBlock, DrainPolicy::PerPage] {
                let cfg = SystemConfig { mode, drain, ..SystemConfig::default() };
                let r = simulate_gemm(100, 70, 300, DataType::Fp16, &cfg).unwrap();
                assert_eq!(r.breakdown.total(), r.total);
                assert!(r.total_cycles > 0.0);
            }
        }
    }

    #[test]
    fn devmem_uses_no_link() {
        let cfg = SystemConfig { mode: AccessMode::DevMem, ..SystemConfig::default() };
        let r = int8(256, &cfg);
        assert_eq!((r.packets, r.link_bytes, r.translation.lookups), (0, 0, 0));
        assert_eq!(r.dram_bytes, r.bytes_read + r.bytes_written);
    }

    #[test]
    fn dm_bytes_are_conserved() {
        let r = int8(256, &SystemConfig::default());
        assert_eq!(r.link_bytes, r.bytes_read + r.bytes_written);
        let ptes = r.translation.walks * 8;
        assert_eq!(r.dram_bytes, r.link_bytes + ptes);
        assert_eq!(r.descriptors, r.compute_events * 2 + (256 / 16) * (256 / 16));
    }

    #[test]
    fn dc_reuses_a_tiles() {
        let cfg = SystemConfig { mode: AccessMode::DC, ..SystemConfig::default() };
        let r = int8(512, &cfg);
        assert!(r.llc_hits > 0);
        assert!(r.dram_bytes < r.bytes_read + r.bytes_written);
    }

    #[test]
    fn per_page_drains_fewer_writes() {
        let block = int8(256, &SystemConfig::default());
        let page = int8(256, &SystemConfig { drain: DrainPolicy::PerPage, ..SystemConfig::default() });
        assert_eq!(block.bytes_written, page.bytes_written);
        assert!(page.descriptors < block.descriptors);
    }

    #[test]
    fn deterministic() {
        let cfg = SystemConfig { mode: AccessMode::DC, ..SystemConfig::default() };
        assert_eq!(int8(200, &cfg), int8(200, &cfg));
    }

    #[test]
    fn slower_link_is_never_faster() {
        let mut prev = Ps::ZERO;
        for gbps in [64.0, 16.0, 4.0, 1.0] {
            let cfg = SystemConfig { link: LinkConfig::from_aggregate(gbps, 16), ..Default::default() };
            let t = int8(256, &cfg).total;
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(simulate_gemm(0, 1, 1, DataType::Int8, &SystemConfig::default()).is_err());
        let mut cfg = SystemConfig::default();
        cfg.array.width = 8;
        assert!(simulate_gemm(16, 16, 16, DataType::Int8, &cfg).is_err());
    }

    #[test]
    fn single_tile() {
        let r = simulate_gemm(1, 1, 1, DataType::Int8, &SystemConfig::ideal(1e6)).unwrap();
        assert_eq!(r.compute_events, 1);
        assert_eq!(r.total, Ps(286_000) + r.breakdown.link_txn);
    }
}
