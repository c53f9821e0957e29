//! PCIe-style link and DMA engine timing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Ps;

/// 128b/130b line coding.
pub const ENCODING_128B130B: f64 = 128.0 / 130.0;

/// Payload per in-flight packet slot before large packets start to stall.
pub const STALL_SLOT_BYTES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub lanes: u32,
    /// Per-lane signalling rate in GT/s.
    pub lane_rate_gt: f64,
    pub encoding_efficiency: f64,
    pub max_payload: usize,
    pub header_bytes: usize,
    pub packet_setup_cycles: u64,
    pub link_clock_hz: f64,
    pub pipeline_depth: usize,
    /// Throughput lost per extra stall slot a packet occupies.
    pub stall_gain: f64,
    pub link_latency_ns: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            lanes: 16,
            lane_rate_gt: 64.0,
            encoding_efficiency: ENCODING_128B130B,
            max_payload: 256,
            header_bytes: 24,
            packet_setup_cycles: 64,
            link_clock_hz: 1e9,
            pipeline_depth: 4,
            stall_gain: 0.05,
            link_latency_ns: 0.0,
        }
    }
}

impl LinkConfig {
    /// A link whose raw per-direction bandwidth is exactly `gbps` GB/s.
    pub fn from_aggregate(gbps: f64, lanes: u32) -> LinkConfig {
        let base = LinkConfig::default();
        LinkConfig {
            lanes,
            lane_rate_gt: gbps * 8.0 / (lanes as f64 * base.encoding_efficiency),
            ..base
        }
    }

    /// Same link with the aggregate rate changed and the lane count kept.
    pub fn with_aggregate(self, gbps: f64) -> LinkConfig {
        LinkConfig {
            lane_rate_gt: gbps * 8.0 / (self.lanes as f64 * self.encoding_efficiency),
            ..self
        }
    }

    /// A link with no framing, setup, stall or latency costs.
    pub fn ideal(gbps: f64) -> LinkConfig {
        LinkConfig {
            header_bytes: 0,
            packet_setup_cycles: 0,
            stall_gain: 0.0,
            link_latency_ns: 0.0,
            max_payload: 4096,
            ..LinkConfig::from_aggregate(gbps, 16)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![1, 2, 4, 8, 16].contains(&self.lanes) {
            return Err(Error::Config(format!("unsupported lane count {}", self.lanes)));
        }
        if !(self.lane_rate_gt > 0.0 && self.lane_rate_gt.is_finite()) {
            return Err(Error::Config("lane rate must be positive".into()));
        }
        if !(self.encoding_efficiency > 0.0 && self.encoding_efficiency <= 1.0) {
            return Err(Error::Config("encoding efficiency must be in (0, 1]".into()));
        }
        if !self.max_payload.is_power_of_two() || !(64..=4096).contains(&self.max_payload) {
            return Err(Error::Config(format!(
                "max payload {} must be a power of two in [64, 4096]",
                self.max_payload
            )));
        }
        if self.pipeline_depth == 0 {
            return Err(Error::Config("pipeline depth must be at least 1".into()));
        }
        if !(self.link_clock_hz > 0.0) {
            return Err(Error::Config("link clock must be positive".into()));
        }
        if !(self.stall_gain >= 0.0) || !(self.link_latency_ns >= 0.0) {
            return Err(Error::Config("stall gain and latency must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmaConfig {
    pub read_channels: usize,
    pub write_channels: usize,
    pub burst_bytes: usize,
    pub descriptor_cycles: u64,
    /// Engine cycles to issue one burst.
    pub burst_issue_cycles: u64,
    pub doorbell_cycles: u64,
    pub interrupt_cycles: u64,
    pub clock_hz: f64,
}

impl Default for DmaConfig {
    fn default() -> Self {
        DmaConfig {
            read_channels: 2,
            write_channels: 2,
            burst_bytes: 1024,
            descriptor_cycles: 16,
            burst_issue_cycles: 2,
            doorbell_cycles: 300,
            interrupt_cycles: 1000,
            clock_hz: 1e9,
        }
    }
}

impl DmaConfig {
    /// No descriptor, doorbell or interrupt costs.
    pub fn ideal() -> DmaConfig {
        DmaConfig {
            descriptor_cycles: 0,
            burst_issue_cycles: 0,
            doorbell_cycles: 0,
            interrupt_cycles: 0,
            ..DmaConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.read_channels == 0 || self.write_channels == 0 {
            return Err(Error::Config("DMA needs at least one channel per direction".into()));
        }
        if self.burst_bytes == 0 || self.burst_bytes > 4096 {
            return Err(Error::Config("burst size must be in [1, 4096]".into()));
        }
        if !(self.clock_hz > 0.0) {
            return Err(Error::Config("DMA clock must be positive".into()));
        }
        Ok(())
    }

    pub fn cycles(&self, n: u64) -> Ps {
        Ps::from_cycles(n as f64, self.clock_hz)
    }
}

/// Per-direction raw bandwidth in bytes per second.
pub fn raw_bandwidth(link: &LinkConfig) -> f64 {
    link.lanes as f64 * link.lane_rate_gt * 1e9 * link.encoding_efficiency / 8.0
}

/// Fraction of the wire rate kept once a packet of `payload` bytes
/// outgrows the in-flight window.
pub fn stall_factor(link: &LinkConfig, payload: usize) -> f64 {
    let knee = (link.pipeline_depth * STALL_SLOT_BYTES) as f64;
    let excess = (payload as f64 / knee - 1.0).max(0.0);
    1.0 / (1.0 + link.stall_gain * excess)
}

/// Sustained payload throughput for packets of `payload` bytes.
pub fn effective_bandwidth(link: &LinkConfig, payload: usize) -> Result<f64> {
    if payload == 0 || payload > link.max_payload {
        return Err(Error::InvalidInput(format!(
            "payload {payload} outside [1, {}]",
            link.max_payload
        )));
    }
    let framing = payload as f64 / (payload + link.header_bytes) as f64;
    Ok(raw_bandwidth(link) * framing * stall_factor(link, payload))
}

/// Components of one DMA transfer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferTiming {
    pub packets: u64,
    pub descriptors: u64,
    /// Descriptor processing and burst issue on the DMA engine.
    pub fetch: Ps,
    /// Time the wire is occupied.
    pub wire: Ps,
    /// Pipelined packet setup plus propagation; not an occupancy.
    pub latency: Ps,
}

impl TransferTiming {
    pub fn total(&self) -> Ps {
        self.fetch + self.wire + self.latency
    }
}

/// Timing of a `bytes`-long transfer split into `max_payload` packets.
///
/// Packet setups overlap with serialization of earlier packets, so only the
/// first setup is exposed.
pub fn transfer_timing(bytes: usize, link: &LinkConfig, dma: &DmaConfig) -> TransferTiming {
    if bytes == 0 {
        return TransferTiming::default();
    }
    let payload = link.max_payload;
    let packets = bytes.div_ceil(payload);
    let framed = bytes + packets * link.header_bytes;
    let rate = raw_bandwidth(link) * stall_factor(link, payload.min(bytes));
    let bursts = bytes.div_ceil(dma.burst_bytes) as u64;
    TransferTiming {
        packets: packets as u64,
        descriptors: 1,
        fetch: dma.cycles(dma.descriptor_cycles + bursts * dma.burst_issue_cycles),
        wire: Ps::for_bytes(framed as f64, rate),
        latency: Ps::from_cycles(link.packet_setup_cycles as f64, link.link_clock_hz)
            + Ps::from_ns(link.link_latency_ns),
    }
}

pub fn transfer_time(bytes: usize, link: &LinkConfig, dma: &DmaConfig) -> Ps {
    transfer_timing(bytes, link, dma).total()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAYLOADS: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

    fn sweep_link(gbps: f64) -> LinkConfig {
        LinkConfig { max_payload: 4096, ..LinkConfig::from_aggregate(gbps, 4) }
    }

    #[test]
    fn raw_rates() {
        let gen6 = LinkConfig::default();
        assert!((raw_bandwidth(&gen6) / 1e9 - 126.03).abs() < 0.01);
        let slow = LinkConfig { lanes: 4, lane_rate_gt: 4.0, encoding_efficiency: 1.0, ..gen6 };
        assert_eq!(raw_bandwidth(&slow), 2e9);
        assert!((raw_bandwidth(&LinkConfig::from_aggregate(2.0, 4)) - 2e9).abs() < 1e-3);
        let dead = LinkConfig { lanes: 1, lane_rate_gt: 0.0, ..gen6 };
        assert!(dead.validate().is_err());
        assert!(LinkConfig { lanes: 3, ..gen6 }.validate().is_err());
        assert!(LinkConfig { max_payload: 100, ..gen6 }.validate().is_err());
    }

    #[test]
    fn framing_efficiency_at_256() {
        let link = LinkConfig { stall_gain: 0.0, ..sweep_link(2.0) };
        let eff = effective_bandwidth(&link, 256).unwrap() / raw_bandwidth(&link);
        assert!((eff - 256.0 / 280.0).abs() < 1e-12);
        assert!(effective_bandwidth(&LinkConfig::default(), 512).is_err());
    }

    #[test]
    fn bounded_and_unimodal() {
        let link = sweep_link(2.0);
        let raw = raw_bandwidth(&link);
        let bw: Vec<f64> = PAYLOADS
            .iter()
            .map(|&p| effective_bandwidth(&link, p).unwrap())
            .collect();
        assert!(bw.iter().all(|&b| b <= raw));
        let best = bw.iter().cloned().fold(0.0, f64::max);
        assert_eq!(bw[2], best);
        assert!(bw.windows(2).take(2).all(|w| w[0] < w[1]));
        assert!(bw.windows(2).skip(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn default_penalties() {
        let link = sweep_link(2.0);
        let at = |p| effective_bandwidth(&link, p).unwrap();
        assert!(at(64) <= 0.9 * at(256));
        assert!(at(4096) <= 0.75 * at(256));
    }

    #[test]
    fn ideal_tile_transfer() {
        let t = transfer_time(4096, &LinkConfig::ideal(64.0), &DmaConfig::ideal());
        assert_eq!(t, Ps(64_000));
    }

    #[test]
    fn setup_is_pipelined() {
        let link = LinkConfig { max_payload: 1024, packet_setup_cycles: 50, ..LinkConfig::ideal(8.0) };
        let dma = DmaConfig::ideal();
        let one = transfer_timing(1024, &link, &dma);
        let two = transfer_timing(2048, &link, &dma);
        assert_eq!(two.packets, 2);
        assert_eq!(two.wire, Ps(one.wire.0 * 2));
        assert_eq!(two.total(), Ps(one.wire.0 * 2) + Ps(50_000));
    }

    #[test]
    fn slow_link_tile() {
        let link = LinkConfig::ideal(2.0);
        let t = transfer_time(4096, &link, &DmaConfig::ideal());
        assert_eq!(t, Ps(2_048_000));
        let real = transfer_time(4096, &LinkConfig::from_aggregate(2.0, 4), &DmaConfig::default());
        assert!(real > t);
    }

    #[test]
    fn monotone_in_bytes_and_rate() {
        let dma = DmaConfig::default();
        let link = LinkConfig::from_aggregate(8.0, 8);
        let mut prev = Ps::ZERO;
        for bytes in (1..20_000).step_by(97) {
            let t = transfer_time(bytes, &link, &dma);
            assert!(t >= prev);
            prev = t;
        }
        let fast = LinkConfig { lane_rate_gt: link.lane_rate_gt * 2.0, ..link };
        let wide = LinkConfig { lanes: 16, ..link };
        let base = transfer_time(4096, &link, &dma);
        assert!(transfer_time(4096, &fast, &dma) <= base);
        assert!(transfer_time(4096, &wide, &dma) <= base);
    }
}
