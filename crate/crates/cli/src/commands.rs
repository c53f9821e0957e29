use crate::calibrate::{calibrate, render_knobs, Targets};
use crate::error::{io_err, CliError, Result};
use crate::experiment::{config_error, ExperimentConfig, Kind};
use crate::presets::{list_presets, load_file, load_preset, preset_dir};
use crate::runner::{run_experiment, with_jobs};
use std::path::{Path, PathBuf};
use streamflow::config::KvConfig;
use streamflow::system::SystemConfig;
use streamflow::workload::NonGemmModel;

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub knobs: Option<PathBuf>,
    pub force: bool,
}

impl Options {
    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Loads the config named by `--config` or `--preset`, falling back to
/// `default_preset` and then to an empty config. Returns the config and the
/// directory relative paths resolve against.
fn load_source(opts: &Options, default_preset: Option<&str>) -> Result<(KvConfig, PathBuf, String)> {
    if opts.config.is_some() && opts.preset.is_some() {
        return Err(CliError::Usage("pass either --config or --preset, not both".into()));
    }
    if let Some(path) = &opts.config {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        return Ok((load_file(path)?, base, path.display().to_string()));
    }
    let dir = preset_dir();
    match opts.preset.as_deref().or(default_preset) {
        Some(name) => Ok((load_preset(&dir, name)?, dir.clone(), dir.join(format!("{name}.cfg")).display().to_string())),
        None => Ok((KvConfig::default(), PathBuf::from("."), "<defaults>".into())),
    }
}

fn load_knobs(opts: &Options) -> Result<Option<KvConfig>> {
    opts.knobs.as_deref().map(load_file).transpose()
}

/// Runs an experiment subcommand; `kind` of `None` runs whatever the
/// config declares. Returns the lines printed to stdout.
pub fn experiment(kind: Option<Kind>, opts: &Options) -> Result<Vec<String>> {
    let default_preset = match kind {
        Some(Kind::ValidateGemm) => Some("validate-gemm"),
        _ => None,
    };
    let (kv, base, source) = load_source(opts, default_preset)?;
    let knobs = load_knobs(opts)?;
    let mut exp = ExperimentConfig::from_kv(&kv, knobs.as_ref(), &base).map_err(|e| config_error(Path::new(&source), e))?;
    if let Some(k) = kind {
        exp = exp.with_kind(k);
    }
    if exp.kind == Kind::Calibrate {
        return calibrate_cmd(opts);
    }
    if exp.kind == Kind::Sweep && exp.axes.is_empty() {
        return Err(config_error(Path::new(&source), streamflow::Error::Config("a sweep needs at least one sweep.* axis".into())));
    }
    if let Some(seed) = opts.seed {
        exp.seed = seed;
    }
    let outcome = with_jobs(opts.jobs, || run_experiment(&exp))??;
    let (csv, json) = outcome.table.write(&opts.out_dir())?;
    let mut lines = outcome.summary;
    lines.push(format!("wrote {} and {}", csv.display(), json.display()));
    if outcome.failures > 0 {
        lines.iter().for_each(|l| println!("{l}"));
        return Err(CliError::ValidationFailed(outcome.failures));
    }
    Ok(lines)
}

pub fn calibrate_cmd(opts: &Options) -> Result<Vec<String>> {
    let (kv, _, source) = load_source(opts, Some("targets"))?;
    let targets = Targets::from_kv(&kv).map_err(|e| config_error(Path::new(&source), e))?;
    let path = opts.knobs.clone().unwrap_or_else(|| opts.out_dir().join("knobs.cfg"));
    if path.exists() && !opts.force {
        return Err(CliError::Exists(path));
    }
    let cal = with_jobs(opts.jobs, || calibrate(&targets, &SystemConfig::default(), &NonGemmModel::default()))??;
    if !cal.converged() {
        return Err(CliError::NoConvergence(format!("{}best knobs:\n{}", cal.report(), cal.knobs.render())));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(&path, render_knobs(&cal)).map_err(io_err(&path))?;
    let mut lines: Vec<String> = cal.residuals.iter().map(|r| r.line()).collect();
    lines.push(format!("wrote {}", path.display()));
    Ok(lines)
}

pub fn presets_cmd() -> Result<Vec<String>> {
    let dir = preset_dir();
    let mut lines = vec![format!("presets in {}:", dir.display())];
    for name in list_presets(&dir)? {
        let kv = load_preset(&dir, &name)?;
        let kind = kv.get_str("experiment.kind").unwrap_or(if name.contains("targets") { "calibrate" } else { "knobs" });
        lines.push(format!("  {name:<16} {kind}"));
    }
    Ok(lines)
}
