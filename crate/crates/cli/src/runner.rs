use crate::error::{CliError, Result};
use crate::experiment::{ExperimentConfig, Kind, LinkPoint};
use crate::output::{f, Table};
use rayon::prelude::*;
use serde_json::json;
use streamflow::analytic::roofline;
use streamflow::engine::simulate_gemm;
use streamflow::memory::tech_preset;
use streamflow::report::{SimReport, CSV_COLUMNS, SCHEMA_VERSION};
use streamflow::system::{AccessMode, SystemConfig};
use streamflow::workload::{crossover_fraction, crossover_sweep, end_to_end, OpClass, TransformerSpec, WorkloadReport};

/// Result of one experiment: the table to write and lines for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub summary: Vec<String>,
    /// Failed checks; nonzero makes the command fail after writing output.
    pub failures: usize,
}

/// One configuration produced by expanding the sweep axes.
#[derive(Debug, Clone)]
pub struct Point {
    pub labels: Vec<(&'static str, String)>,
    pub system: SystemConfig,
    pub dims: (usize, usize, usize),
}

fn set_memtech(cfg: &mut SystemConfig, name: &str) -> streamflow::Result<()> {
    let tech = tech_preset(name)?;
    if cfg.mode == AccessMode::DevMem {
        cfg.device_mem = tech;
    } else {
        cfg.host_mem = tech;
    }
    Ok(())
}

/// Cartesian product of the axes, outermost first: config or mode, memory
/// technology, lanes, link bandwidth, payload, size.
pub fn expand(exp: &ExperimentConfig) -> streamflow::Result<Vec<Point>> {
    let ax = &exp.axes;
    let mut points = vec![Point { labels: Vec::new(), system: exp.system.clone(), dims: exp.dims }];
    fn grow<T: Clone>(
        points: Vec<Point>,
        values: &[T],
        step: impl Fn(&mut Point, &T) -> streamflow::Result<()>,
    ) -> streamflow::Result<Vec<Point>> {
        if values.is_empty() {
            return Ok(points);
        }
        let mut out = Vec::with_capacity(points.len() * values.len());
        for p in points {
            for v in values {
                let mut q = p.clone();
                step(&mut q, v)?;
                out.push(q);
            }
        }
        Ok(out)
    }
    points = grow(points, &ax.points, |p, lp: &LinkPoint| {
        p.system.mode = lp.mode;
        p.system.link = p.system.link.with_aggregate(lp.gbps);
        p.labels.push(("config", lp.label()));
        p.labels.push(("mode", lp.mode.name().to_string()));
        p.labels.push(("link_GBps", lp.gbps.to_string()));
        Ok(())
    })?;
    points = grow(points, &ax.mode, |p, m: &AccessMode| {
        p.system.mode = *m;
        p.labels.push(("mode", m.name().to_string()));
        Ok(())
    })?;
    points = grow(points, &ax.memtech, |p, name: &String| {
        set_memtech(&mut p.system, name)?;
        p.labels.push(("mem_tech", name.clone()));
        Ok(())
    })?;
    points = grow(points, &ax.lanes, |p, lanes: &u32| {
        let gbps = streamflow::link::raw_bandwidth(&p.system.link) / 1e9;
        p.system.link.lanes = *lanes;
        p.system.link = p.system.link.with_aggregate(gbps);
        p.labels.push(("lanes", lanes.to_string()));
        Ok(())
    })?;
    points = grow(points, &ax.link_gbps, |p, gbps: &f64| {
        p.system.link = p.system.link.with_aggregate(*gbps);
        p.labels.push(("link_GBps", gbps.to_string()));
        Ok(())
    })?;
    points = grow(points, &ax.payload, |p, bytes: &usize| {
        p.system.link.max_payload = *bytes;
        p.labels.push(("payload_bytes", bytes.to_string()));
        Ok(())
    })?;
    points = grow(points, &ax.size, |p, n: &usize| {
        p.dims = (*n, *n, *n);
        p.labels.push(("size", n.to_string()));
        Ok(())
    })?;
    for p in &points {
        p.system.validate()?;
    }
    Ok(points)
}

fn label_header(points: &[Point]) -> Vec<&'static str> {
    points.first().map(|p| p.labels.iter().map(|l| l.0).collect()).unwrap_or_default()
}

fn gemm_table(exp: &ExperimentConfig, points: &[Point], reports: &[SimReport]) -> Table {
    let mut header = label_header(points);
    header.push("exec_time_cycles");
    header.extend(CSV_COLUMNS);
    let mut t = Table::new(&exp.name, &header);
    for (p, r) in points.iter().zip(reports) {
        let mut row: Vec<String> = p.labels.iter().map(|l| l.1.clone()).collect();
        row.push(format!("{:.3}", r.total_cycles));
        row.extend(r.csv_record());
        t.rows.push(row);
    }
    t.json = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": exp.name,
        "seed": exp.seed,
        "points": points.iter().zip(reports).map(|(p, r)| json!({
            "labels": p.labels.iter().map(|l| (l.0.to_string(), json!(l.1))).collect::<serde_json::Map<_, _>>(),
            "report": r,
        })).collect::<Vec<_>>(),
    });
    t
}

fn workload_table(exp: &ExperimentConfig, rows: &[(String, Point, WorkloadReport)]) -> Table {
    let points: Vec<Point> = rows.iter().map(|r| r.1.clone()).collect();
    let mut header = vec!["model"];
    header.extend(label_header(&points));
    header.extend(["latency_ms", "normalized_throughput", "schema_version", "config_hash"]);
    let pct: Vec<String> = OpClass::ALL.iter().map(|c| format!("pct_{}", c.name())).collect();
    header.extend(pct.iter().map(String::as_str));
    let mut t = Table::new(&exp.name, &header);
    for (model, p, r) in rows {
        let first = rows.iter().find(|x| &x.0 == model).expect("model present");
        let mut row = vec![model.clone()];
        row.extend(p.labels.iter().map(|l| l.1.clone()));
        row.push(f(r.total.as_secs() * 1e3));
        row.push(f(first.2.total.as_secs() / r.total.as_secs()));
        row.push(SCHEMA_VERSION.to_string());
        row.push(r.config_hash.clone());
        row.extend(r.percentages().iter().map(|x| f(x.1)));
        t.rows.push(row);
    }
    t.json = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": exp.name,
        "seed": exp.seed,
        "points": rows.iter().map(|(m, p, r)| json!({
            "model": m,
            "labels": p.labels.iter().map(|l| (l.0.to_string(), json!(l.1))).collect::<serde_json::Map<_, _>>(),
            "report": r,
        })).collect::<Vec<_>>(),
    });
    t
}

fn simulate_points(exp: &ExperimentConfig, points: &[Point]) -> Result<Outcome> {
    if exp.models.is_empty() {
        let reports: Vec<SimReport> = points
            .par_iter()
            .map(|p| simulate_gemm(p.dims.0, p.dims.1, p.dims.2, exp.dtype, &p.system))
            .collect::<streamflow::Result<_>>()?;
        let summary = points
            .iter()
            .zip(&reports)
            .map(|(p, r)| {
                let labels: Vec<String> = p.labels.iter().map(|l| format!("{}={}", l.0, l.1)).collect();
                format!("{} {}x{}x{} {:.1} cycles", labels.join(" "), r.m, r.n, r.k, r.total_cycles).trim().to_string()
            })
            .collect();
        Ok(Outcome { table: gemm_table(exp, points, &reports), summary, failures: 0 })
    } else {
        let jobs: Vec<(&TransformerSpec, &Point)> =
            exp.models.iter().flat_map(|m| points.iter().map(move |p| (m, p))).collect();
        let reports: Vec<WorkloadReport> =
            jobs.par_iter().map(|(m, p)| end_to_end(m, &p.system, &exp.ngm)).collect::<streamflow::Result<_>>()?;
        let rows: Vec<(String, Point, WorkloadReport)> =
            jobs.iter().zip(reports).map(|((m, p), r)| (m.name.clone(), (*p).clone(), r)).collect();
        let summary = rows
            .iter()
            .map(|(m, p, r)| {
                let labels: Vec<String> = p.labels.iter().map(|l| format!("{}={}", l.0, l.1)).collect();
                format!("{m} {} {:.3} ms", labels.join(" "), r.total.as_secs() * 1e3).replace("  ", " ")
            })
            .collect();
        Ok(Outcome { table: workload_table(exp, &rows), summary, failures: 0 })
    }
}

pub fn run(exp: &ExperimentConfig) -> Result<Outcome> {
    let point = Point { labels: Vec::new(), system: exp.system.clone(), dims: exp.dims };
    simulate_points(exp, &[point])
}

pub fn sweep(exp: &ExperimentConfig) -> Result<Outcome> {
    let points = expand(exp)?;
    simulate_points(exp, &points)
}

pub fn run_roofline(exp: &ExperimentConfig) -> Result<Outcome> {
    let pts = roofline(&exp.system, exp.dims, exp.dtype, &exp.gops)?;
    let mut t = Table::new(
        &exp.name,
        &["ideal_gops", "bound_gops", "achieved_gops", "exec_time_ns", "schema_version", "config_hash"],
    );
    let hash = exp.system.config_hash();
    for p in &pts {
        t.rows.push(vec![
            f(p.ideal_gops),
            f(p.bound_gops),
            f(p.achieved_gops),
            f(p.time.as_ns()),
            SCHEMA_VERSION.to_string(),
            hash.clone(),
        ]);
    }
    let summary = pts.iter().map(|p| format!("{:.0} GOP/s ideal -> {:.2} GOP/s achieved", p.ideal_gops, p.achieved_gops)).collect();
    t.json = json!({ "schema_version": SCHEMA_VERSION, "experiment": exp.name, "config_hash": hash, "points": pts });
    Ok(Outcome { table: t, summary, failures: 0 })
}

pub fn run_crossover(exp: &ExperimentConfig) -> Result<Outcome> {
    let models = if exp.models.is_empty() { vec![TransformerSpec::preset("vit-base")?] } else { exp.models.clone() };
    let mut t = Table::new(
        &exp.name,
        &["model", "fraction", "host_vs_devmem", "devmem_latency_s", "host_latency_s", "winner", "schema_version", "config_hash"],
    );
    let hash = exp.system.config_hash();
    let curves: Vec<_> =
        models.par_iter().map(|m| crossover_sweep(m, &exp.system, &exp.ngm, &exp.fractions)).collect::<streamflow::Result<_>>()?;
    let mut summary = Vec::new();
    let mut json_models = Vec::new();
    for (m, pts) in models.iter().zip(&curves) {
        for p in pts {
            let winner = if p.host_vs_devmem >= 1.0 { exp.system.mode.name() } else { "DevMem" };
            t.rows.push(vec![
                m.name.clone(),
                f(p.fraction),
                f(p.host_vs_devmem),
                f(p.devmem_latency),
                f(p.host_latency),
                winner.to_string(),
                SCHEMA_VERSION.to_string(),
                hash.clone(),
            ]);
        }
        let x = crossover_fraction(pts);
        summary.push(match x {
            Some(x) => format!("{}: host overtakes DevMem at non-GEMM fraction {x:.3}", m.name),
            None => format!("{}: no crossover in the swept range", m.name),
        });
        json_models.push(json!({ "model": m.name, "crossover_fraction": x, "points": pts }));
    }
    t.json = json!({ "schema_version": SCHEMA_VERSION, "experiment": exp.name, "config_hash": hash, "models": json_models });
    Ok(Outcome { table: t, summary, failures: 0 })
}

/// Dispatches on the experiment kind. Calibration needs a target file
/// and is run through [`crate::calibrate`] instead.
pub fn run_experiment(exp: &ExperimentConfig) -> Result<Outcome> {
    match exp.kind {
        Kind::Run => run(exp),
        Kind::Sweep => sweep(exp),
        Kind::Roofline => run_roofline(exp),
        Kind::Crossover => run_crossover(exp),
        Kind::ValidateGemm => crate::validate::run_validation(exp),
        Kind::Calibrate => Err(CliError::Usage("calibrate experiments run through the calibrate subcommand".into())),
    }
}

/// Runs `f` on a pool of `jobs` threads, or on rayon's default pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
