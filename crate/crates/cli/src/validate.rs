//! Oracle comparison of the tiled kernel against the triple loop.

use crate::error::{io_err, CliError, Result};
use crate::experiment::ExperimentConfig;
use crate::output::Table;
use crate::runner::Outcome;
use half::f16;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use std::path::Path;
use streamflow::gemm::{block_matrix_multiply, max_ulp_error, naive_gemm, pack_a, pack_b, read_fixture, Matrix};
use streamflow::report::SCHEMA_VERSION;
use streamflow::DataType;

/// Largest float error accepted, in units in the last place.
pub const MAX_ULP: u32 = 4;

pub fn random_matrix(rows: usize, cols: usize, dtype: DataType, rng: &mut ChaCha8Rng) -> Matrix {
    let n = rows * cols;
    let m = match dtype {
        DataType::Int8 => Matrix::new(rows, cols, (0..n).map(|_| rng.gen::<i8>()).collect()),
        DataType::Int16 => Matrix::new(rows, cols, (0..n).map(|_| rng.gen::<i16>()).collect()),
        DataType::Int32 => Matrix::new(rows, cols, (0..n).map(|_| rng.gen::<i32>()).collect()),
        DataType::Fp16 => {
            Matrix::new(rows, cols, (0..n).map(|_| f16::from_f32(rng.gen_range(-1.0f32..1.0))).collect())
        }
        DataType::Fp32 => Matrix::new(rows, cols, (0..n).map(|_| rng.gen_range(-1.0f32..1.0)).collect()),
    };
    m.expect("length matches shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseResult {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub max_ulp: u32,
}

impl CaseResult {
    pub fn passed(&self, dtype: DataType) -> bool {
        if dtype.is_float() {
            self.max_ulp <= MAX_ULP
        } else {
            self.max_ulp == 0
        }
    }
}

/// Multiplies `a·b` both ways and reports the largest element error.
pub fn check_pair(a: &Matrix, b: &Matrix) -> streamflow::Result<CaseResult> {
    let tiled = block_matrix_multiply(&pack_a(a)?, &pack_b(b)?)?;
    let oracle = naive_gemm(a, b)?;
    Ok(CaseResult { m: a.rows(), n: b.cols(), k: a.cols(), max_ulp: max_ulp_error(&tiled, &oracle) })
}

/// `count` random shapes with every dimension in `1..=max_dim`.
pub fn random_cases(dtype: DataType, count: usize, max_dim: usize, seed: u64) -> streamflow::Result<Vec<CaseResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(dtype.code() as u64);
    let shapes: Vec<(usize, usize, usize, u64)> = (0..count)
        .map(|_| (rng.gen_range(1..=max_dim), rng.gen_range(1..=max_dim), rng.gen_range(1..=max_dim), rng.gen()))
        .collect();
    shapes
        .par_iter()
        .map(|&(m, n, k, s)| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            let a = random_matrix(m, k, dtype, &mut r);
            let b = random_matrix(k, n, dtype, &mut r);
            check_pair(&a, &b)
        })
        .collect()
}

fn load(path: &Path) -> Result<Matrix> {
    let mut file = std::fs::File::open(path).map_err(io_err(path))?;
    Ok(read_fixture(&mut file).map_err(|source| CliError::Config { path: path.display().to_string(), source })?.0)
}

/// Fixture cases in `dir`: `<case>.a.mfmx` and `<case>.b.mfmx`, with an
/// optional expected product `<case>.c.mfmx`.
pub fn fixture_cases(dir: &Path) -> Result<Vec<(String, DataType, CaseResult)>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".a.mfmx")).map(str::to_string))
        .collect();
    names.sort();
    let mut out = Vec::new();
    for name in names {
        let a = load(&dir.join(format!("{name}.a.mfmx")))?;
        let b = load(&dir.join(format!("{name}.b.mfmx")))?;
        let mut res = check_pair(&a, &b)?;
        let expected = dir.join(format!("{name}.c.mfmx"));
        if expected.exists() {
            let c = load(&expected)?;
            let tiled = block_matrix_multiply(&pack_a(&a)?, &pack_b(&b)?)?;
            res.max_ulp = res.max_ulp.max(max_ulp_error(&tiled, &c));
        }
        out.push((name, a.dtype(), res));
    }
    Ok(out)
}

pub fn run_validation(exp: &ExperimentConfig) -> Result<Outcome> {
    let mut t = Table::new(&exp.name, &["source", "dtype", "cases", "failed", "max_ulp", "status", "schema_version", "seed"]);
    let mut summary = Vec::new();
    let mut failed_total = 0;
    let mut json_rows = Vec::new();
    let mut push = |t: &mut Table, source: &str, dtype: DataType, cases: &[CaseResult]| {
        let failed = cases.iter().filter(|c| !c.passed(dtype)).count();
        let worst = cases.iter().map(|c| c.max_ulp).max().unwrap_or(0);
        let status = if failed == 0 { "PASS" } else { "FAIL" };
        failed_total += failed;
        t.rows.push(vec![
            source.to_string(),
            dtype.name().to_string(),
            cases.len().to_string(),
            failed.to_string(),
            worst.to_string(),
            status.to_string(),
            SCHEMA_VERSION.to_string(),
            exp.seed.to_string(),
        ]);
        summary.push(format!("{status} {} {source}: {}/{} cases, max ulp {worst}", dtype.name(), cases.len() - failed, cases.len()));
        json_rows.push(json!({ "source": source, "dtype": dtype.name(), "failed": failed, "cases": cases.iter().map(|c| json!({"m": c.m, "n": c.n, "k": c.k, "max_ulp": c.max_ulp})).collect::<Vec<_>>() }));
    };
    for &dtype in &exp.validate_dtypes {
        let cases = random_cases(dtype, exp.validate_shapes, exp.validate_max_dim, exp.seed)?;
        push(&mut t, "random", dtype, &cases);
    }
    if let Some(dir) = &exp.fixture_dir {
        for (name, dtype, res) in fixture_cases(dir)? {
            push(&mut t, &format!("fixture:{name}"), dtype, &[res]);
        }
    }
    t.json = json!({ "schema_version": SCHEMA_VERSION, "experiment": exp.name, "seed": exp.seed, "results": json_rows });
    Ok(Outcome { table: t, summary, failures: failed_total })
}
