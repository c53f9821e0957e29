//! Transformer encoders as GEMM and host-side operation lists.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dtype::DataType;
use crate::engine::simulate_gemm;
use crate::error::{Error, Result};
use crate::link::effective_bandwidth;
use crate::report::LatencyBreakdown;
use crate::system::{AccessMode, SystemConfig};
use crate::time::Ps;
use crate::translation::footprint_pages;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerSpec {
    pub name: String,
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub seq_len: usize,
    pub mlp_ratio: usize,
    pub dtype: DataType,
}

/// Tokens for a ViT on a square image: one per patch plus the class token.
pub fn vit_seq_len(image: usize, patch: usize) -> usize {
    (image / patch).pow(2) + 1
}

const PRESETS: [(&str, usize, usize, usize, usize); 6] = [
    ("bert-medium", 8, 512, 8, 128),
    ("bert-base", 12, 768, 12, 128),
    ("bert-large", 24, 1024, 16, 128),
    ("vit-base", 12, 768, 12, 197),
    ("vit-large", 24, 1024, 16, 197),
    // ViT-Huge/14 at 224².
    ("vit-huge", 32, 1280, 16, 257),
];

impl TransformerSpec {
    pub fn new(name: &str, layers: usize, hidden: usize, heads: usize, seq_len: usize) -> TransformerSpec {
        TransformerSpec {
            name: name.to_string(),
            layers,
            hidden,
            heads,
            seq_len,
            mlp_ratio: 4,
            dtype: DataType::Int8,
        }
    }

    pub fn preset(name: &str) -> Result<TransformerSpec> {
        PRESETS
            .iter()
            .find(|p| p.0 == name)
            .map(|&(n, l, h, a, s)| TransformerSpec::new(n, l, h, a, s))
            .ok_or_else(|| Error::UnknownPreset(name.to_string()))
    }

    pub fn preset_names() -> Vec<&'static str> {
        PRESETS.iter().map(|p| p.0).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden == 0 || self.heads == 0 || self.seq_len == 0 || self.mlp_ratio == 0 {
            return Err(Error::InvalidInput(format!("{}: all dimensions must be positive", self.name)));
        }
        if self.hidden % self.heads != 0 {
            return Err(Error::InvalidInput(format!(
                "{}: hidden size {} is not divisible by {} heads",
                self.name, self.hidden, self.heads
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    /// Closed-form GEMM FLOPs for the whole encoder stack.
    pub fn closed_form_flops(&self) -> f64 {
        let (l, s, h) = (self.layers as f64, self.seq_len as f64, self.hidden as f64);
        let r = self.mlp_ratio as f64;
        (8.0 + 4.0 * r) * l * s * h * h + 4.0 * l * s * s * h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpClass {
    FF1,
    FF2,
    MHA,
    Projection,
    NonGEMM,
    Control,
}

impl OpClass {
    pub const ALL: [OpClass; 6] =
        [OpClass::FF1, OpClass::FF2, OpClass::MHA, OpClass::Projection, OpClass::NonGEMM, OpClass::Control];

    pub fn name(self) -> &'static str {
        match self {
            OpClass::FF1 => "FF1",
            OpClass::FF2 => "FF2",
            OpClass::MHA => "MHA",
            OpClass::Projection => "Projection",
            OpClass::NonGEMM => "NonGEMM",
            OpClass::Control => "Control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NonGemmKind {
    Softmax,
    LayerNorm,
    Activation,
    Transpose,
}

impl NonGemmKind {
    /// Sweeps over the data each kind makes.
    fn passes(self) -> usize {
        match self {
            NonGemmKind::Softmax | NonGemmKind::LayerNorm => 3,
            NonGemmKind::Activation | NonGemmKind::Transpose => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    Gemm { class: OpClass, m: usize, n: usize, k: usize },
    NonGemm { kind: NonGemmKind, elements: usize },
}

impl Op {
    pub fn class(&self) -> OpClass {
        match self {
            Op::Gemm { class, .. } => *class,
            Op::NonGemm { .. } => OpClass::NonGEMM,
        }
    }

    pub fn flops(&self) -> f64 {
        match self {
            Op::Gemm { m, n, k, .. } => 2.0 * (*m * *n * *k) as f64,
            Op::NonGemm { .. } => 0.0,
        }
    }
}

/// Operations of one encoder layer, in execution order.
fn layer_ops(spec: &TransformerSpec) -> Vec<Op> {
    let (s, h, hd) = (spec.seq_len, spec.hidden, spec.head_dim());
    let f = h * spec.mlp_ratio;
    let gemm = |class, m, n, k| Op::Gemm { class, m, n, k };
    let ngm = |kind, elements| Op::NonGemm { kind, elements };
    let mut ops = vec![ngm(NonGemmKind::LayerNorm, s * h)];
    ops.extend((0..3).map(|_| gemm(OpClass::Projection, s, h, h)));
    for _ in 0..spec.heads {
        ops.push(ngm(NonGemmKind::Transpose, s * hd));
        ops.push(gemm(OpClass::MHA, s, s, hd));
        ops.push(ngm(NonGemmKind::Softmax, s * s));
        ops.push(gemm(OpClass::MHA, s, hd, s));
    }
    ops.push(gemm(OpClass::Projection, s, h, h));
    ops.push(ngm(NonGemmKind::LayerNorm, s * h));
    ops.push(gemm(OpClass::FF1, s, f, h));
    ops.push(ngm(NonGemmKind::Activation, s * f));
    ops.push(gemm(OpClass::FF2, s, h, f));
    ops
}

pub fn decompose(spec: &TransformerSpec) -> Result<Vec<Op>> {
    spec.validate()?;
    let layer = layer_ops(spec);
    Ok((0..spec.layers).flat_map(|_| layer.iter().copied()).collect())
}

/// Host-side costs outside the accelerator's GEMMs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonGemmModel {
    pub softmax_ns_per_element: f64,
    pub layernorm_ns_per_element: f64,
    pub activation_ns_per_element: f64,
    pub transpose_ns_per_element: f64,
    /// Multiplier on the amount of host-side work.
    pub scale: f64,
    /// Bytes per activation element as the host sees it.
    pub element_bytes: usize,
    /// Driver cost of launching one GEMM.
    pub launch_ns_per_gemm: f64,
    /// Pinning and mapping host pages for an offloaded GEMM; host memory
    /// modes only.
    pub pin_ns_per_page: f64,
}

impl Default for NonGemmModel {
    fn default() -> Self {
        NonGemmModel {
            softmax_ns_per_element: 2.0,
            layernorm_ns_per_element: 1.5,
            activation_ns_per_element: 1.0,
            transpose_ns_per_element: 0.5,
            scale: 1.0,
            element_bytes: 4,
            launch_ns_per_gemm: 2000.0,
            pin_ns_per_page: 500.0,
        }
    }
}

impl NonGemmModel {
    /// No host-side cost at all.
    pub fn zero() -> NonGemmModel {
        NonGemmModel {
            softmax_ns_per_element: 0.0,
            layernorm_ns_per_element: 0.0,
            activation_ns_per_element: 0.0,
            transpose_ns_per_element: 0.0,
            launch_ns_per_gemm: 0.0,
            pin_ns_per_page: 0.0,
            ..NonGemmModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.softmax_ns_per_element,
            self.layernorm_ns_per_element,
            self.activation_ns_per_element,
            self.transpose_ns_per_element,
            self.scale,
            self.launch_ns_per_gemm,
            self.pin_ns_per_page,
        ];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config("host-side costs must be non-negative".into()));
        }
        Ok(())
    }

    fn ns_per_element(&self, kind: NonGemmKind) -> f64 {
        match kind {
            NonGemmKind::Softmax => self.softmax_ns_per_element,
            NonGemmKind::LayerNorm => self.layernorm_ns_per_element,
            NonGemmKind::Activation => self.activation_ns_per_element,
            NonGemmKind::Transpose => self.transpose_ns_per_element,
        }
    }

    /// Host CPU time for one op; with device-resident activations every
    /// byte the CPU reads or writes also crosses the link.
    pub fn op_time(&self, kind: NonGemmKind, elements: usize, cfg: &SystemConfig) -> Ps {
        let work = elements as f64 * self.scale;
        let mut ns = work * self.ns_per_element(kind);
        if cfg.mode == AccessMode::DevMem {
            let touched = work * (self.element_bytes * kind.passes() * 2) as f64;
            let bw = effective_bandwidth(&cfg.link, cfg.link.max_payload).unwrap_or(f64::INFINITY);
            ns += touched / bw * 1e9;
        }
        Ps::from_ns(ns)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadReport {
    pub model: String,
    pub mode: String,
    pub total: Ps,
    /// Time per class in [`OpClass::ALL`] order.
    pub class_times: Vec<(OpClass, Ps)>,
    pub gemm_time: Ps,
    pub nongemm_time: Ps,
    pub gemm_count: usize,
    pub nongemm_count: usize,
    pub gemm_flops: f64,
    pub gemm_breakdown: LatencyBreakdown,
    pub config_hash: String,
}

impl WorkloadReport {
    pub fn class_time(&self, class: OpClass) -> Ps {
        self.class_times.iter().find(|c| c.0 == class).map_or(Ps::ZERO, |c| c.1)
    }

    /// Share of total runtime per class, in percent.
    pub fn percentages(&self) -> Vec<(OpClass, f64)> {
        self.class_times
            .iter()
            .map(|&(c, t)| (c, if self.total.0 == 0 { 0.0 } else { 100.0 * t.0 as f64 / self.total.0 as f64 }))
            .collect()
    }

    pub fn latency_secs(&self) -> f64 {
        self.total.as_secs()
    }
}

struct Tally {
    class: HashMap<OpClass, Ps>,
}

impl Tally {
    fn add(&mut self, c: OpClass, t: Ps) {
        *self.class.entry(c).or_insert(Ps::ZERO) += t;
    }
}

/// Runs every operation of `spec` on `cfg` and aggregates by class.
///
/// Each GEMM starts with a cold TLB and LLC. The exposed fetch, translation
/// and control parts of a GEMM's timeline count as `Control`, together with
/// launch and pinning costs.
pub fn end_to_end(spec: &TransformerSpec, cfg: &SystemConfig, ngm: &NonGemmModel) -> Result<WorkloadReport> {
    ngm.validate()?;
    let ops = decompose(spec)?;
    let mut cache: HashMap<(usize, usize, usize), crate::report::SimReport> = HashMap::new();
    let mut tally = Tally { class: HashMap::new() };
    let mut gemm_breakdown = LatencyBreakdown::default();
    let (mut gemm_time, mut nongemm_time) = (Ps::ZERO, Ps::ZERO);
    let (mut gemm_count, mut nongemm_count, mut flops) = (0, 0, 0.0);
    let host_mode = cfg.mode != AccessMode::DevMem;
    for op in &ops {
        match *op {
            Op::Gemm { class, m, n, k } => {
                let r = match cache.get(&(m, n, k)) {
                    Some(r) => r,
                    None => {
                        let r = simulate_gemm(m, n, k, spec.dtype, cfg)?;
                        cache.entry((m, n, k)).or_insert(r)
                    }
                };
                let b = &r.breakdown;
                let overhead = b.control + b.translation + b.fetch;
                tally.add(class, r.total - overhead);
                let mut host = Ps::from_ns(ngm.launch_ns_per_gemm);
                if host_mode {
                    host += Ps::from_ns(ngm.pin_ns_per_page * footprint_pages(m, n, k, spec.dtype) as f64);
                }
                tally.add(OpClass::Control, overhead + host);
                gemm_breakdown.merge(b);
                gemm_time += r.total + host;
                gemm_count += 1;
                flops += op.flops();
            }
            Op::NonGemm { kind, elements } => {
                let t = ngm.op_time(kind, elements, cfg);
                tally.add(OpClass::NonGEMM, t);
                nongemm_time += t;
                nongemm_count += 1;
            }
        }
    }
    let class_times: Vec<(OpClass, Ps)> =
        OpClass::ALL.iter().map(|&c| (c, tally.class.get(&c).copied().unwrap_or(Ps::ZERO))).collect();
    let total = class_times.iter().map(|c| c.1).sum();
    Ok(WorkloadReport {
        model: spec.name.clone(),
        mode: cfg.mode.name().to_string(),
        total,
        class_times,
        gemm_time,
        nongemm_time,
        gemm_count,
        nongemm_count,
        gemm_flops: flops,
        gemm_breakdown,
        config_hash: cfg.config_hash(),
    })
}

/// A host CPU executing the whole encoder itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpuBackend {
    pub gemm_gflops: f64,
}

impl Default for CpuBackend {
    fn default() -> Self {
        CpuBackend { gemm_gflops: 2.0 }
    }
}

/// Per-class percentages when the CPU runs GEMMs at a fixed rate.
pub fn cpu_breakdown(spec: &TransformerSpec, cpu: &CpuBackend, ngm: &NonGemmModel) -> Result<Vec<(OpClass, f64)>> {
    if !(cpu.gemm_gflops > 0.0) {
        return Err(Error::Config("CPU GEMM rate must be positive".into()));
    }
    let host = SystemConfig::default();
    let mut times: HashMap<OpClass, f64> = HashMap::new();
    for op in decompose(spec)? {
        let ns = match op {
            Op::Gemm { .. } => op.flops() / cpu.gemm_gflops,
            Op::NonGemm { kind, elements } => ngm.op_time(kind, elements, &host).as_ns(),
        };
        *times.entry(op.class()).or_insert(0.0) += ns;
    }
    let total: f64 = times.values().sum();
    Ok(OpClass::ALL.iter().map(|&c| (c, 100.0 * times.get(&c).copied().unwrap_or(0.0) / total)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverPoint {
    pub fraction: f64,
    pub devmem_latency: f64,
    pub host_latency: f64,
    /// Host throughput normalized to device memory; above 1 the host wins.
    pub host_vs_devmem: f64,
}

/// Scales host-side work so it makes up each `fraction` of the device
/// memory run, then compares against the host-memory run of `cfg`.
pub fn crossover_sweep(
    spec: &TransformerSpec,
    cfg: &SystemConfig,
    ngm: &NonGemmModel,
    fractions: &[f64],
) -> Result<Vec<CrossoverPoint>> {
    if fractions.iter().any(|f| !(0.0..1.0).contains(f)) {
        return Err(Error::InvalidInput("fractions must lie in [0, 1)".into()));
    }
    let dev_cfg = SystemConfig { mode: AccessMode::DevMem, ..cfg.clone() };
    let base = NonGemmModel { scale: 1.0, ..*ngm };
    let dev = end_to_end(spec, &dev_cfg, &base)?;
    let host = end_to_end(spec, cfg, &base)?;
    let (g_dev, n_dev) = (dev.gemm_time.as_secs(), dev.nongemm_time.as_secs());
    let (g_host, n_host) = (host.gemm_time.as_secs(), host.nongemm_time.as_secs());
    Ok(fractions
        .iter()
        .map(|&f| {
            let x = if n_dev > 0.0 { f / (1.0 - f) * g_dev / n_dev } else { 0.0 };
            let t_dev = g_dev + x * n_dev;
            let t_host = g_host + x * n_host;
            CrossoverPoint { fraction: f, devmem_latency: t_dev, host_latency: t_host, host_vs_devmem: t_dev / t_host }
        })
        .collect())
}

/// First fraction in a sweep at which the host configuration is at least
/// as fast, interpolated linearly.
pub fn crossover_fraction(points: &[CrossoverPoint]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.host_vs_devmem < 1.0 && b.host_vs_devmem >= 1.0 {
            let t = (1.0 - a.host_vs_devmem) / (b.host_vs_devmem - a.host_vs_devmem);
            Some(a.fraction + t * (b.fraction - a.fraction))
        } else {
            None
        }
    })
}
