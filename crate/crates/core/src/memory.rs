//! DRAM technologies, a bandwidth/latency server and the shared LLC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Ps;

pub const DEFAULT_FIXED_LATENCY_NS: f64 = 12.0;

const TECH_TABLE_HEADER: &str =
    "name,channels,data_width_bits,bandwidth_gbps,data_rate_mtps,fixed_latency_ns";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryTech {
    pub name: String,
    pub channels: u32,
    pub data_width_bits: u32,
    pub bandwidth_gbps: f64,
    pub data_rate_mtps: u32,
    pub fixed_latency_ns: f64,
}

impl MemoryTech {
    fn row(name: &str, channels: u32, width: u32, gbps: f64, mtps: u32) -> MemoryTech {
        MemoryTech {
            name: name.to_string(),
            channels,
            data_width_bits: width,
            bandwidth_gbps: gbps,
            data_rate_mtps: mtps,
            fixed_latency_ns: DEFAULT_FIXED_LATENCY_NS,
        }
    }

    pub fn bytes_per_sec(&self) -> f64 {
        self.bandwidth_gbps * 1e9
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_gbps > 0.0) {
            return Err(Error::Config(format!("{}: bandwidth must be positive", self.name)));
        }
        if !(self.fixed_latency_ns >= 0.0) {
            return Err(Error::Config(format!("{}: latency must be non-negative", self.name)));
        }
        Ok(())
    }
}

/// The built-in technology rows.
pub fn tech_presets() -> Vec<MemoryTech> {
    vec![
        MemoryTech::row("DDR3", 1, 64, 12.8, 1600),
        MemoryTech::row("DDR4", 1, 64, 19.2, 2400),
        MemoryTech::row("DDR5", 2, 32, 25.6, 3200),
        MemoryTech::row("HBM2", 2, 128, 64.0, 2000),
        MemoryTech::row("GDDR6", 2, 64, 32.0, 2000),
    ]
}

pub fn tech_preset(name: &str) -> Result<MemoryTech> {
    tech_presets()
        .into_iter()
        .find(|t| t.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

/// Parses a technology table: a `# memory-tech v1` line, a CSV header and
/// one row per technology.
pub fn parse_tech_table(text: &str) -> Result<Vec<MemoryTech>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "# memory-tech v1")) => {}
        Some((line, _)) => return Err(Error::Parse { line, msg: "expected `# memory-tech v1`".into() }),
        None => return Err(Error::Parse { line: 1, msg: "empty table".into() }),
    }
    match lines.next() {
        Some((_, h)) if h == TECH_TABLE_HEADER => {}
        Some((line, _)) => return Err(Error::Parse { line, msg: "unexpected header".into() }),
        None => return Err(Error::Parse { line: 2, msg: "missing header".into() }),
    }
    let mut out = Vec::new();
    for (line, l) in lines {
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(Error::Parse { line, msg: format!("expected 6 fields, got {}", f.len()) });
        }
        let bad = |what: &str| Error::Parse { line, msg: format!("bad {what}") };
        let tech = MemoryTech {
            name: f[0].to_string(),
            channels: f[1].parse().map_err(|_| bad("channels"))?,
            data_width_bits: f[2].parse().map_err(|_| bad("data width"))?,
            bandwidth_gbps: f[3].parse().map_err(|_| bad("bandwidth"))?,
            data_rate_mtps: f[4].parse().map_err(|_| bad("data rate"))?,
            fixed_latency_ns: f[5].parse().map_err(|_| bad("latency"))?,
        };
        tech.validate().map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        out.push(tech);
    }
    Ok(out)
}

pub fn format_tech_table(rows: &[MemoryTech]) -> String {
    let mut s = format!("# memory-tech v1\n{TECH_TABLE_HEADER}\n");
    for t in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.name, t.channels, t.data_width_bits, t.bandwidth_gbps, t.data_rate_mtps, t.fixed_latency_ns
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    HostViaLink,
    DeviceLocal,
}

/// Timing of one memory request.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Service {
    pub queue: Ps,
    pub transfer: Ps,
    pub latency: Ps,
    pub done: Ps,
}

impl Service {
    pub fn total(&self) -> Ps {
        self.queue + self.transfer + self.latency
    }
}

/// Single-server token bucket: requests occupy the channel for
/// `bytes / bandwidth` and complete a fixed latency later.
#[derive(Debug, Clone)]
pub struct MemoryServer {
    tech: MemoryTech,
    free_at: Ps,
    bytes: u64,
}

impl MemoryServer {
    pub fn new(tech: MemoryTech) -> MemoryServer {
        MemoryServer { tech, free_at: Ps::ZERO, bytes: 0 }
    }

    pub fn tech(&self) -> &MemoryTech {
        &self.tech
    }

    pub fn bytes_served(&self) -> u64 {
        self.bytes
    }

    pub fn serve(&mut self, at: Ps, bytes: usize) -> Service {
        let start = at.max(self.free_at);
        let transfer = Ps::for_bytes(bytes as f64, self.tech.bytes_per_sec());
        self.free_at = start + transfer;
        self.bytes += bytes as u64;
        let latency = Ps::from_ns(self.tech.fixed_latency_ns);
        Service { queue: start - at, transfer, latency, done: start + transfer + latency }
    }
}

/// Unloaded service time of a single request.
pub fn service_time(bytes: usize, tech: &MemoryTech) -> Ps {
    MemoryServer::new(tech.clone()).serve(Ps::ZERO, bytes).total()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlcConfig {
    pub size_bytes: usize,
    pub ways: usize,
    pub line_bytes: usize,
    pub hit_latency_cycles: u64,
    /// On-chip bus between the LLC and the memory controller.
    pub bus_gbps: f64,
    pub inclusive: bool,
    pub write_allocate: bool,
}

impl Default for LlcConfig {
    fn default() -> Self {
        LlcConfig {
            size_bytes: 2 << 20,
            ways: 16,
            line_bytes: 64,
            hit_latency_cycles: 20,
            bus_gbps: 64.0,
            inclusive: true,
            write_allocate: true,
        }
    }
}

impl LlcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ways == 0 || self.line_bytes == 0 || self.size_bytes % (self.ways * self.line_bytes) != 0
        {
            return Err(Error::Config("LLC size must divide into ways x line size".into()));
        }
        if self.size_bytes == 0 {
            return Err(Error::Config("LLC size must be positive".into()));
        }
        if !(self.bus_gbps > 0.0) {
            return Err(Error::Config("LLC bus bandwidth must be positive".into()));
        }
        Ok(())
    }

    pub fn sets(&self) -> usize {
        self.size_bytes / (self.ways * self.line_bytes)
    }
}

/// Set-associative LRU hit/miss classifier.
#[derive(Debug, Clone)]
pub struct Llc {
    cfg: LlcConfig,
    /// Per set, line tags ordered least recently used first.
    sets: Vec<Vec<u64>>,
    hits: u64,
    misses: u64,
}

impl Llc {
    pub fn new(cfg: LlcConfig) -> Llc {
        Llc { sets: vec![Vec::with_capacity(cfg.ways); cfg.sets()], cfg, hits: 0, misses: 0 }
    }

    pub fn config(&self) -> &LlcConfig {
        &self.cfg
    }

    /// Classifies one line access. Write misses allocate only with
    /// write-allocate enabled.
    pub fn access(&mut self, line_addr: u64, write: bool) -> bool {
        let n_sets = self.sets.len() as u64;
        let set = &mut self.sets[(line_addr % n_sets) as usize];
        if let Some(pos) = set.iter().position(|&t| t == line_addr) {
            let tag = set.remove(pos);
            set.push(tag);
            self.hits += 1;
            return true;
        }
        self.misses += 1;
        if !write || self.cfg.write_allocate {
            if set.len() == self.cfg.ways {
                set.remove(0);
            }
            set.push(line_addr);
        }
        false
    }

    /// Probes every line of `[byte_addr, byte_addr + bytes)` and returns the
    /// number of misses.
    pub fn access_range(&mut self, byte_addr: u64, bytes: usize, write: bool) -> u64 {
        let line = self.cfg.line_bytes as u64;
        let first = byte_addr / line;
        let last = (byte_addr + bytes as u64).div_ceil(line);
        (first..last).filter(|&l| !self.access(l, write)).count() as u64
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn hit_ratio(&self) -> f64 {
        let n = self.hits + self.misses;
        if n == 0 {
            0.0
        } else {
            self.hits as f64 / n as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let ddr3 = tech_preset("DDR3").unwrap();
        assert_eq!((ddr3.bandwidth_gbps, ddr3.data_rate_mtps, ddr3.channels), (12.8, 1600, 1));
        let hbm = tech_preset("hbm2").unwrap();
        assert_eq!((hbm.bandwidth_gbps, hbm.channels, hbm.data_width_bits), (64.0, 2, 128));
        let ddr5 = tech_preset("DDR5").unwrap();
        assert_eq!((ddr5.bandwidth_gbps, ddr5.data_rate_mtps), (25.6, 3200));
        assert!(matches!(tech_preset("SRAM9"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn table_text_round_trips() {
        let text = format_tech_table(&tech_presets());
        assert_eq!(parse_tech_table(&text).unwrap(), tech_presets());
        assert!(parse_tech_table("name\n").is_err());
        let broken = text.replace("12.8", "fast");
        assert!(matches!(parse_tech_table(&broken), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn unloaded_service() {
        assert_eq!(service_time(4096, &tech_preset("HBM2").unwrap()), Ps::from_ns(76.0));
    }

    #[test]
    fn queueing_is_fifo() {
        let mut srv = MemoryServer::new(tech_preset("HBM2").unwrap());
        let a = srv.serve(Ps::ZERO, 4096);
        let b = srv.serve(Ps::ZERO, 4096);
        assert_eq!(a.queue, Ps::ZERO);
        assert_eq!(b.queue, Ps::from_ns(64.0));
        assert_eq!(b.done, Ps::from_ns(140.0));
        let late = srv.serve(Ps::from_ns(1000.0), 64);
        assert_eq!(late.queue, Ps::ZERO);
        assert_eq!(srv.bytes_served(), 8256);
    }

    #[test]
    fn service_monotone() {
        let mut tech = tech_preset("DDR4").unwrap();
        let mut prev = Ps::ZERO;
        for bytes in (1..10_000).step_by(61) {
            let t = service_time(bytes, &tech);
            assert!(t >= prev);
            prev = t;
        }
        let base = service_time(4096, &tech);
        tech.fixed_latency_ns = 36.0;
        assert!(service_time(4096, &tech) > base);
    }

    #[test]
    fn llc_repeat_hits() {
        let mut llc = Llc::new(LlcConfig::default());
        assert!(!llc.access(5, false));
        assert!(llc.access(5, false));
        assert!(llc.access(5, false));
    }

    #[test]
    fn llc_streaming_capacity() {
        let mut llc = Llc::new(LlcConfig::default());
        for _ in 0..2 {
            llc.access_range(0, 4 << 20, false);
        }
        assert!(llc.misses() as f64 >= 0.5 * (llc.hits() + llc.misses()) as f64);
    }

    #[test]
    fn llc_write_no_allocate() {
        let cfg = LlcConfig { write_allocate: false, ..Default::default() };
        let mut llc = Llc::new(cfg);
        assert!(!llc.access(9, true));
        assert!(!llc.access(9, false));
        assert!(llc.access(9, true));
    }

    #[test]
    fn b_tile_reuse_hits() {
        let mut llc = Llc::new(LlcConfig::default());
        assert_eq!(llc.access_range(1 << 20, 4096, false), 64);
        for _ in 0..16 {
            assert_eq!(llc.access_range(1 << 20, 4096, false), 0);
        }
        assert!(LlcConfig { size_bytes: 1000, ..Default::default() }.validate().is_err());
    }
}
