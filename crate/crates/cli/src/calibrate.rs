//! Bounded grid-search calibration of model knobs to measured targets.
//!
//! Target files use the same key-value format as configs:
//!
//! ```text
//! packet.penalty_64 = 0.12      # 64 B vs 256 B payload
//! packet.penalty_4096 = 0.36    # 4096 B vs 256 B payload
//! pcie.speedup = 11             # (2 lanes, 0.5 GB/s) -> (16 lanes, 32 GB/s)
//! vit.model = vit-large
//! vit.link_gbps = 2, 8, 64
//! vit.latency_s = 2.98, 1.108, 0.98
//! ```
//!
//! Each group is optional. The output is a knob file holding only the
//! fitted keys, so an empty target set yields empty (identity) knobs.

use crate::error::Result;
use rayon::prelude::*;
use streamflow::config::KvConfig;
use streamflow::engine::simulate_gemm;
use streamflow::link::LinkConfig;
use streamflow::system::{AccessMode, SystemConfig};
use streamflow::translation::footprint_pages;
use streamflow::workload::{decompose, end_to_end, NonGemmModel, Op, TransformerSpec};
use streamflow::DataType;

#[derive(Debug, Clone, PartialEq)]
pub struct PacketTargets {
    pub size: usize,
    pub lanes: u32,
    pub link_gbps: f64,
    pub penalty_64: f64,
    pub penalty_4096: f64,
    /// Accepted residual in percentage points.
    pub tolerance_pp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcieTargets {
    pub size: usize,
    pub slow: (u32, f64),
    pub fast: (u32, f64),
    pub speedup: f64,
    /// Accepted relative residual.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VitTargets {
    pub model: TransformerSpec,
    pub link_gbps: Vec<f64>,
    pub latency_s: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Targets {
    pub packet: Option<PacketTargets>,
    pub pcie: Option<PcieTargets>,
    pub vit: Option<VitTargets>,
}

impl Targets {
    pub fn from_kv(kv: &KvConfig) -> streamflow::Result<Targets> {
        for e in kv.entries() {
            let known = [
                "packet.size", "packet.lanes", "packet.link_gbps", "packet.penalty_64", "packet.penalty_4096",
                "packet.tolerance_pp", "pcie.size", "pcie.slow_lanes", "pcie.slow_gbps", "pcie.fast_lanes",
                "pcie.fast_gbps", "pcie.speedup", "pcie.tolerance", "vit.model", "vit.link_gbps", "vit.latency_s",
                "vit.tolerance",
            ];
            if !known.contains(&e.key.as_str()) {
                return Err(streamflow::Error::Parse { line: e.line, msg: format!("unknown target `{}`", e.key) });
            }
        }
        let packet = match (kv.get_parsed("packet.penalty_64")?, kv.get_parsed("packet.penalty_4096")?) {
            (Some(penalty_64), Some(penalty_4096)) => Some(PacketTargets {
                size: kv.get_parsed("packet.size")?.unwrap_or(512),
                lanes: kv.get_parsed("packet.lanes")?.unwrap_or(4),
                link_gbps: kv.get_parsed("packet.link_gbps")?.unwrap_or(2.0),
                penalty_64,
                penalty_4096,
                tolerance_pp: kv.get_parsed("packet.tolerance_pp")?.unwrap_or(3.0),
            }),
            (None, None) => None,
            _ => return Err(streamflow::Error::Config("packet targets need both penalty_64 and penalty_4096".into())),
        };
        let pcie = match kv.get_parsed::<f64>("pcie.speedup")? {
            Some(speedup) => Some(PcieTargets {
                size: kv.get_parsed("pcie.size")?.unwrap_or(512),
                slow: (kv.get_parsed("pcie.slow_lanes")?.unwrap_or(2), kv.get_parsed("pcie.slow_gbps")?.unwrap_or(0.5)),
                fast: (kv.get_parsed("pcie.fast_lanes")?.unwrap_or(16), kv.get_parsed("pcie.fast_gbps")?.unwrap_or(32.0)),
                speedup,
                tolerance: kv.get_parsed("pcie.tolerance")?.unwrap_or(0.05),
            }),
            None => None,
        };
        let vit = match kv.get_list::<f64>("vit.latency_s")? {
            Some(latency_s) => {
                let link_gbps: Vec<f64> = kv.get_list("vit.link_gbps")?.unwrap_or_default();
                if link_gbps.len() != latency_s.len() || latency_s.is_empty() {
                    return Err(streamflow::Error::Config("vit.link_gbps and vit.latency_s must pair up".into()));
                }
                Some(VitTargets {
                    model: TransformerSpec::preset(kv.get_str("vit.model").unwrap_or("vit-large"))?,
                    link_gbps,
                    latency_s,
                    tolerance: kv.get_parsed("vit.tolerance")?.unwrap_or(0.20),
                })
            }
            None => None,
        };
        Ok(Targets { packet, pcie, vit })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub target: String,
    pub goal: f64,
    pub achieved: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub unit: &'static str,
}

impl Residual {
    pub fn ok(&self) -> bool {
        self.residual.abs() <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} target {:.4} achieved {:.4} residual {:+.4} {} (tolerance {}) {}",
            self.target,
            self.goal,
            self.achieved,
            self.residual,
            self.unit,
            self.tolerance,
            if self.ok() { "ok" } else { "MISS" }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub knobs: KvConfig,
    pub residuals: Vec<Residual>,
    pub system: SystemConfig,
    pub ngm: NonGemmModel,
}

impl Calibration {
    pub fn converged(&self) -> bool {
        self.residuals.iter().all(Residual::ok)
    }

    pub fn report(&self) -> String {
        self.residuals.iter().map(|r| r.line() + "\n").collect()
    }
}

fn gemm_secs(n: usize, cfg: &SystemConfig) -> streamflow::Result<f64> {
    Ok(simulate_gemm(n, n, n, DataType::Int8, cfg)?.total.as_secs())
}

/// Smallest `score` over `grid`; ties go to the earliest candidate.
fn argmin<T: Copy + Send + Sync>(grid: &[T], score: impl Fn(T) -> streamflow::Result<f64> + Sync) -> streamflow::Result<(T, f64)> {
    let scores: Vec<f64> = grid.par_iter().map(|&g| score(g)).collect::<streamflow::Result<_>>()?;
    let (i, s) = scores
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &s)| if s < best.1 { (i, s) } else { best });
    Ok((grid[i], s))
}

fn with_payload(cfg: &SystemConfig, p: &PacketTargets, payload: usize) -> SystemConfig {
    let mut c = cfg.clone();
    c.link = LinkConfig { lanes: p.lanes, max_payload: payload, ..c.link }.with_aggregate(p.link_gbps);
    c
}

/// Penalties of 64 B and 4096 B payloads relative to 256 B.
pub fn packet_penalties(cfg: &SystemConfig, p: &PacketTargets) -> streamflow::Result<(f64, f64)> {
    let t = |payload| gemm_secs(p.size, &with_payload(cfg, p, payload));
    let base = t(256)?;
    Ok((t(64)? / base - 1.0, t(4096)? / base - 1.0))
}

fn fit_packet(cfg: &mut SystemConfig, p: &PacketTargets) -> streamflow::Result<()> {
    let headers: Vec<usize> = (0..=64).collect();
    let (h, _) = argmin(&headers, |h| {
        let mut c = cfg.clone();
        c.link.header_bytes = h;
        Ok((packet_penalties(&c, p)?.0 - p.penalty_64).abs())
    })?;
    cfg.link.header_bytes = h;
    let base = gemm_secs(p.size, &with_payload(cfg, p, 256))?;
    let gains: Vec<f64> = (0..=200).map(|i| i as f64 * 0.001).collect();
    let (g, _) = argmin(&gains, |g| {
        let mut c = cfg.clone();
        c.link.stall_gain = g;
        Ok((gemm_secs(p.size, &with_payload(&c, p, 4096))? / base - 1.0 - p.penalty_4096).abs())
    })?;
    cfg.link.stall_gain = g;
    Ok(())
}

pub fn pcie_speedup(cfg: &SystemConfig, p: &PcieTargets) -> streamflow::Result<f64> {
    let at = |(lanes, gbps): (u32, f64)| {
        let mut c = cfg.clone();
        c.link = LinkConfig { lanes, ..c.link }.with_aggregate(gbps);
        gemm_secs(p.size, &c)
    };
    Ok(at(p.slow)? / at(p.fast)?)
}

fn fit_pcie(cfg: &mut SystemConfig, p: &PcieTargets) -> streamflow::Result<()> {
    let grid: Vec<u64> = (0..=160).map(|i| i * 25).collect();
    let (irq, _) = argmin(&grid, |irq| {
        let mut c = cfg.clone();
        c.dma.interrupt_cycles = irq;
        Ok((pcie_speedup(&c, p)? - p.speedup).abs())
    })?;
    cfg.dma.interrupt_cycles = irq;
    Ok(())
}

/// Latency of the encoder as an affine function of the host-cost scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyModel {
    pub gemm: f64,
    pub nongemm_unit: f64,
    pub gemm_count: f64,
    pub pages: f64,
}

impl LatencyModel {
    pub fn build(spec: &TransformerSpec, cfg: &SystemConfig, ngm: &NonGemmModel) -> streamflow::Result<LatencyModel> {
        let bare = NonGemmModel { scale: 1.0, launch_ns_per_gemm: 0.0, pin_ns_per_page: 0.0, ..*ngm };
        let r = end_to_end(spec, cfg, &bare)?;
        let mut pages = 0u64;
        if cfg.mode != AccessMode::DevMem {
            for op in decompose(spec)? {
                if let Op::Gemm { m, n, k, .. } = op {
                    pages += footprint_pages(m, n, k, spec.dtype);
                }
            }
        }
        Ok(LatencyModel {
            gemm: r.gemm_time.as_secs(),
            nongemm_unit: r.nongemm_time.as_secs(),
            gemm_count: r.gemm_count as f64,
            pages: pages as f64,
        })
    }

    pub fn latency(&self, scale: f64, launch_ns: f64, pin_ns: f64) -> f64 {
        self.gemm + scale * self.nongemm_unit + (launch_ns * self.gemm_count + pin_ns * self.pages) * 1e-9
    }
}

fn vit_config(cfg: &SystemConfig, gbps: f64) -> SystemConfig {
    SystemConfig { mode: AccessMode::DM, link: cfg.link.with_aggregate(gbps), ..cfg.clone() }
}

fn fit_vit(cfg: &SystemConfig, ngm: &mut NonGemmModel, v: &VitTargets) -> streamflow::Result<Vec<LatencyModel>> {
    let models: Vec<LatencyModel> = v
        .link_gbps
        .par_iter()
        .map(|&g| LatencyModel::build(&v.model, &vit_config(cfg, g), ngm))
        .collect::<streamflow::Result<_>>()?;
    let mut grid = Vec::new();
    for s in 0..=80 {
        for l in 0..=40 {
            for p in 0..=40 {
                grid.push((s as f64 * 0.05, l as f64 * 500.0, p as f64 * 50.0));
            }
        }
    }
    let ((s, l, p), _) = argmin(&grid, |(s, l, p)| {
        Ok(models.iter().zip(&v.latency_s).map(|(m, &goal)| (m.latency(s, l, p) / goal - 1.0).abs()).fold(0.0, f64::max))
    })?;
    ngm.scale = s;
    ngm.launch_ns_per_gemm = l;
    ngm.pin_ns_per_page = p;
    Ok(models)
}

/// Fits every target group present on top of `system` and `ngm`.
pub fn calibrate(targets: &Targets, system: &SystemConfig, ngm: &NonGemmModel) -> Result<Calibration> {
    let mut cfg = system.clone();
    let mut ngm = *ngm;
    let mut knobs = KvConfig::default();
    let mut residuals = Vec::new();
    // Framing and control costs interact, so alternate the two fits.
    let rounds = if targets.packet.is_some() && targets.pcie.is_some() { 2 } else { 1 };
    for _ in 0..rounds {
        if let Some(p) = &targets.packet {
            fit_packet(&mut cfg, p)?;
        }
        if let Some(p) = &targets.pcie {
            fit_pcie(&mut cfg, p)?;
        }
    }
    if let Some(p) = &targets.packet {
        knobs.set("link.header_bytes", &cfg.link.header_bytes.to_string());
        knobs.set("link.stall_gain", &format!("{:.3}", cfg.link.stall_gain));
        let (p64, p4096) = packet_penalties(&cfg, p)?;
        for (name, goal, got) in [("packet.penalty_64", p.penalty_64, p64), ("packet.penalty_4096", p.penalty_4096, p4096)] {
            residuals.push(Residual {
                target: name.into(),
                goal: goal * 100.0,
                achieved: got * 100.0,
                residual: (got - goal) * 100.0,
                tolerance: p.tolerance_pp,
                unit: "pp",
            });
        }
    }
    if let Some(p) = &targets.pcie {
        knobs.set("dma.interrupt_cycles", &cfg.dma.interrupt_cycles.to_string());
        let s = pcie_speedup(&cfg, p)?;
        residuals.push(Residual {
            target: "pcie.speedup".into(),
            goal: p.speedup,
            achieved: s,
            residual: s / p.speedup - 1.0,
            tolerance: p.tolerance,
            unit: "rel",
        });
    }
    if let Some(v) = &targets.vit {
        let models = fit_vit(&cfg, &mut ngm, v)?;
        knobs.set("ngm.scale", &format!("{:.2}", ngm.scale));
        knobs.set("ngm.launch_ns_per_gemm", &format!("{}", ngm.launch_ns_per_gemm));
        knobs.set("ngm.pin_ns_per_page", &format!("{}", ngm.pin_ns_per_page));
        for ((m, &goal), &g) in models.iter().zip(&v.latency_s).zip(&v.link_gbps) {
            let got = m.latency(ngm.scale, ngm.launch_ns_per_gemm, ngm.pin_ns_per_page);
            residuals.push(Residual {
                target: format!("vit.latency_s@{g}"),
                goal,
                achieved: got,
                residual: got / goal - 1.0,
                tolerance: v.tolerance,
                unit: "rel",
            });
        }
    }
    Ok(Calibration { knobs, residuals, system: cfg, ngm })
}

/// Knob file text with the residual report as leading comments.
pub fn render_knobs(cal: &Calibration) -> String {
    let mut out = String::from("# fitted knobs\n");
    for r in &cal.residuals {
        out.push_str(&format!("# {}\n", r.line()));
    }
    out.push_str(&cal.knobs.render());
    out
}
