//! Experiment descriptions read from key-value files.

use crate::error::CliError;
use std::path::PathBuf;
use streamflow::config::{apply_nongemm, apply_system, KvConfig};
use streamflow::system::{AccessMode, SystemConfig};
use streamflow::workload::{NonGemmModel, TransformerSpec};
use streamflow::DataType;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Run,
    Sweep,
    Roofline,
    Crossover,
    ValidateGemm,
    Calibrate,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Run => "run",
            Kind::Sweep => "sweep",
            Kind::Roofline => "roofline",
            Kind::Crossover => "crossover",
            Kind::ValidateGemm => "validate-gemm",
            Kind::Calibrate => "calibrate",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        [Kind::Run, Kind::Sweep, Kind::Roofline, Kind::Crossover, Kind::ValidateGemm, Kind::Calibrate]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

/// One explicit sweep point given as `MODE@GBPS`, e.g. `DM@8`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPoint {
    pub mode: AccessMode,
    pub gbps: f64,
}

impl std::str::FromStr for LinkPoint {
    type Err = streamflow::Error;
    fn from_str(s: &str) -> streamflow::Result<LinkPoint> {
        let (mode, gbps) = s
            .split_once('@')
            .ok_or_else(|| streamflow::Error::Config(format!("expected MODE@GBPS, got `{s}`")))?;
        let gbps = gbps
            .trim()
            .parse()
            .map_err(|_| streamflow::Error::Config(format!("bad bandwidth in `{s}`")))?;
        Ok(LinkPoint { mode: mode.trim().parse()?, gbps })
    }
}

impl LinkPoint {
    pub fn label(&self) -> String {
        format!("{}@{}", self.mode.name(), self.gbps)
    }
}

/// Sweep axes; empty axes are not swept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Axes {
    pub mode: Vec<AccessMode>,
    pub memtech: Vec<String>,
    pub lanes: Vec<u32>,
    pub link_gbps: Vec<f64>,
    pub payload: Vec<usize>,
    pub size: Vec<usize>,
    pub points: Vec<LinkPoint>,
}

impl Axes {
    pub fn is_empty(&self) -> bool {
        self.mode.is_empty()
            && self.memtech.is_empty()
            && self.lanes.is_empty()
            && self.link_gbps.is_empty()
            && self.payload.is_empty()
            && self.size.is_empty()
            && self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub name: String,
    pub seed: u64,
    pub system: SystemConfig,
    pub ngm: NonGemmModel,
    pub dims: (usize, usize, usize),
    pub dtype: DataType,
    pub models: Vec<TransformerSpec>,
    pub axes: Axes,
    pub gops: Vec<f64>,
    pub fractions: Vec<f64>,
    pub validate_shapes: usize,
    pub validate_max_dim: usize,
    pub validate_dtypes: Vec<DataType>,
    pub fixture_dir: Option<PathBuf>,
}

const SECTIONS: [&str; 16] = [
    "experiment", "gemm", "workload", "sweep", "roofline", "crossover", "validate", "ngm", "array",
    "link", "dma", "smmu", "host_mem", "device_mem", "llc", "system",
];

const KEYS: [&str; 23] = [
    "experiment.kind", "experiment.name", "experiment.seed", "gemm.m", "gemm.n", "gemm.k", "gemm.size", "gemm.dtype",
    "workload.models", "sweep.mode", "sweep.memtech", "sweep.lanes", "sweep.link_gbps", "sweep.payload", "sweep.size",
    "sweep.configs", "roofline.gops", "crossover.fractions", "validate.shapes", "validate.max_dim",
    "validate.dtypes", "validate.fixtures", "workload.seq_len",
];

fn parse_err(e: &streamflow::config::Entry, msg: String) -> streamflow::Error {
    streamflow::Error::Parse { line: e.line, msg }
}

impl ExperimentConfig {
    /// Builds an experiment from `kv` with `knobs` layered on top of the
    /// system and host-cost sections. Relative paths resolve against
    /// `base_dir`.
    pub fn from_kv(kv: &KvConfig, knobs: Option<&KvConfig>, base_dir: &std::path::Path) -> streamflow::Result<Self> {
        for e in kv.entries() {
            let section = e.key.split('.').next().unwrap_or("");
            if !SECTIONS.contains(&section) {
                return Err(parse_err(e, format!("unknown section `{section}`")));
            }
            let system_like = !matches!(
                section,
                "experiment" | "gemm" | "workload" | "sweep" | "roofline" | "crossover" | "validate"
            );
            if !system_like && !KEYS.contains(&e.key.as_str()) {
                return Err(parse_err(e, format!("unknown key `{}`", e.key)));
            }
        }
        let kind = match kv.get("experiment.kind") {
            Some(e) => Kind::parse(&e.value).ok_or_else(|| parse_err(e, format!("unknown experiment kind `{}`", e.value)))?,
            None => Kind::Run,
        };
        let mut system = SystemConfig::default();
        apply_system(kv, &mut system)?;
        let mut ngm = NonGemmModel::default();
        apply_nongemm(kv, &mut ngm)?;
        if let Some(k) = knobs {
            apply_system(k, &mut system)?;
            apply_nongemm(k, &mut ngm)?;
        }
        let size = kv.get_parsed::<usize>("gemm.size")?.unwrap_or(512);
        let dims = (
            kv.get_parsed("gemm.m")?.unwrap_or(size),
            kv.get_parsed("gemm.n")?.unwrap_or(size),
            kv.get_parsed("gemm.k")?.unwrap_or(size),
        );
        let dtype = kv.get_parsed("gemm.dtype")?.unwrap_or(DataType::Int8);
        let mut models = Vec::new();
        if let Some(e) = kv.get("workload.models") {
            for name in e.parse_list::<String>()? {
                models.push(TransformerSpec::preset(&name).map_err(|_| parse_err(e, format!("unknown model `{name}`")))?);
            }
        }
        if let Some(seq) = kv.get_parsed::<usize>("workload.seq_len")? {
            models.iter_mut().for_each(|m| m.seq_len = seq);
        }
        let axes = Axes {
            mode: kv.get_list("sweep.mode")?.unwrap_or_default(),
            memtech: kv.get_list("sweep.memtech")?.unwrap_or_default(),
            lanes: kv.get_list("sweep.lanes")?.unwrap_or_default(),
            link_gbps: kv.get_list("sweep.link_gbps")?.unwrap_or_default(),
            payload: kv.get_list("sweep.payload")?.unwrap_or_default(),
            size: kv.get_list("sweep.size")?.unwrap_or_default(),
            points: kv.get_list("sweep.configs")?.unwrap_or_default(),
        };
        if kind == Kind::Sweep && axes.is_empty() {
            return Err(streamflow::Error::Config("a sweep needs at least one sweep.* axis".into()));
        }
        let cfg = ExperimentConfig {
            kind,
            name: kv.get_str("experiment.name").unwrap_or(kind.name()).to_string(),
            seed: kv.get_parsed("experiment.seed")?.unwrap_or(0),
            system,
            ngm,
            dims,
            dtype,
            models,
            axes,
            gops: kv.get_list("roofline.gops")?.unwrap_or_else(|| vec![64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0]),
            fractions: kv
                .get_list("crossover.fractions")?
                .unwrap_or_else(|| (0..19).map(|i| i as f64 * 0.05).collect()),
            validate_shapes: kv.get_parsed("validate.shapes")?.unwrap_or(50),
            validate_max_dim: kv.get_parsed("validate.max_dim")?.unwrap_or(300),
            validate_dtypes: kv.get_list("validate.dtypes")?.unwrap_or_else(|| DataType::ALL.to_vec()),
            fixture_dir: kv.get_str("validate.fixtures").map(|p| base_dir.join(p)),
        };
        if cfg.validate_max_dim == 0 {
            return Err(streamflow::Error::Config("validate.max_dim must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn with_kind(mut self, kind: Kind) -> Self {
        self.kind = kind;
        self
    }
}

pub fn config_error(path: &std::path::Path, source: streamflow::Error) -> CliError {
    CliError::Config { path: path.display().to_string(), source }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn parse(text: &str) -> streamflow::Result<ExperimentConfig> {
        ExperimentConfig::from_kv(&KvConfig::parse(text).unwrap(), None, Path::new("."))
    }

    #[test]
    fn defaults_to_a_single_run() {
        let cfg = parse("").unwrap();
        assert_eq!((cfg.kind, cfg.dims, cfg.dtype), (Kind::Run, (512, 512, 512), DataType::Int8));
    }

    #[test]
    fn reads_axes_and_points() {
        let cfg = parse(
            "experiment.kind = sweep\nsweep.payload = 64, 256\nsweep.configs = DM@2, DevMem@64\nworkload.models = vit-base\n",
        )
        .unwrap();
        assert_eq!(cfg.axes.payload, vec![64, 256]);
        assert_eq!(cfg.axes.points[1], LinkPoint { mode: AccessMode::DevMem, gbps: 64.0 });
        assert_eq!(cfg.models[0].name, "vit-base");
    }

    #[test]
    fn rejects_unknown_keys_with_line() {
        assert!(matches!(parse("gemm.m = 4\nsweep.colour = red\n"), Err(streamflow::Error::Parse { line: 2, .. })));
        assert!(matches!(parse("bogus.x = 1\n"), Err(streamflow::Error::Parse { line: 1, .. })));
        assert!(parse("experiment.kind = sweep\n").is_err());
        assert!(parse("experiment.kind = dance\n").is_err());
    }

    #[test]
    fn knobs_override_config() {
        let kv = KvConfig::parse("link.header_bytes = 30\n").unwrap();
        let knobs = KvConfig::parse("link.header_bytes = 10\n").unwrap();
        let cfg = ExperimentConfig::from_kv(&kv, Some(&knobs), Path::new(".")).unwrap();
        assert_eq!(cfg.system.link.header_bytes, 10);
    }
}
