//! Simulation results.

use serde::{Deserialize, Serialize};

use crate::time::Ps;
use crate::translation::TranslationStats;

pub const SCHEMA_VERSION: u32 = 1;

/// Which latency bucket a span of time belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bucket {
    Fetch,
    LinkTxn,
    Translation,
    LlcBus,
    Dram,
    Compute,
    Control,
}

impl Bucket {
    pub const ALL: [Bucket; 7] = [
        Bucket::Fetch,
        Bucket::LinkTxn,
        Bucket::Translation,
        Bucket::LlcBus,
        Bucket::Dram,
        Bucket::Compute,
        Bucket::Control,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Bucket::Fetch => "fetch",
            Bucket::LinkTxn => "link_txn",
            Bucket::Translation => "translation",
            Bucket::LlcBus => "llc_bus",
            Bucket::Dram => "dram",
            Bucket::Compute => "compute",
            Bucket::Control => "control",
        }
    }
}

/// Wall time split over the buckets. The buckets partition the run:
/// their sum equals the total exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub fetch: Ps,
    pub link_txn: Ps,
    pub translation: Ps,
    pub llc_bus: Ps,
    pub dram: Ps,
    pub compute: Ps,
    pub control: Ps,
}

impl LatencyBreakdown {
    pub fn get(&self, b: Bucket) -> Ps {
        match b {
            Bucket::Fetch => self.fetch,
            Bucket::LinkTxn => self.link_txn,
            Bucket::Translation => self.translation,
            Bucket::LlcBus => self.llc_bus,
            Bucket::Dram => self.dram,
            Bucket::Compute => self.compute,
            Bucket::Control => self.control,
        }
    }

    pub fn get_mut(&mut self, b: Bucket) -> &mut Ps {
        match b {
            Bucket::Fetch => &mut self.fetch,
            Bucket::LinkTxn => &mut self.link_txn,
            Bucket::Translation => &mut self.translation,
            Bucket::LlcBus => &mut self.llc_bus,
            Bucket::Dram => &mut self.dram,
            Bucket::Compute => &mut self.compute,
            Bucket::Control => &mut self.control,
        }
    }

    pub fn add(&mut self, b: Bucket, t: Ps) {
        *self.get_mut(b) += t;
    }

    pub fn total(&self) -> Ps {
        Bucket::ALL.iter().map(|&b| self.get(b)).sum()
    }

    pub fn merge(&mut self, other: &LatencyBreakdown) {
        for b in Bucket::ALL {
            self.add(b, other.get(b));
        }
    }
}

/// Result of one GEMM simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub dtype: String,
    pub mode: String,
    pub drain: String,
    pub total: Ps,
    pub total_cycles: f64,
    pub breakdown: LatencyBreakdown,
    pub translation: TranslationStats,
    pub footprint_pages: u64,
    pub compute_events: u64,
    pub packets: u64,
    pub descriptors: u64,
    pub interrupts: u64,
    pub doorbells: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub link_bytes: u64,
    pub dram_bytes: u64,
    pub llc_hits: u64,
    pub llc_misses: u64,
    /// Operand wait before each compute after the second, in array cycles.
    pub mean_idle_cycles: f64,
    pub max_steady_idle_cycles: f64,
    /// Fraction of the run the array spends computing.
    pub measured_eta_sa: f64,
    /// Fraction of the run the read link is busy.
    pub measured_eta_io: f64,
}

pub const CSV_COLUMNS: [&str; 37] = [
    "schema_version",
    "config_hash",
    "m",
    "n",
    "k",
    "dtype",
    "mode",
    "drain",
    "total_ps",
    "total_cycles",
    "fetch_cycles",
    "link_txn_cycles",
    "translation_cycles",
    "llc_bus_cycles",
    "dram_cycles",
    "compute_cycles",
    "control_cycles",
    "footprint_pages",
    "tlb_lookups",
    "tlb_misses",
    "ptw_count",
    "ptw_mean_cycles",
    "trans_overhead_pct",
    "compute_events",
    "packets",
    "descriptors",
    "interrupts",
    "doorbells",
    "bytes_read",
    "bytes_written",
    "link_bytes",
    "dram_bytes",
    "llc_hits",
    "llc_misses",
    "mean_idle_cycles",
    "measured_eta_sa",
    "measured_eta_io",
];

impl SimReport {
    /// Bucket time in array cycles at `hz`.
    pub fn bucket_cycles(&self, b: Bucket, hz: f64) -> f64 {
        self.breakdown.get(b).to_cycles(hz)
    }

    fn hz(&self) -> f64 {
        if self.total.0 == 0 {
            1e9
        } else {
            self.total_cycles / self.total.as_secs()
        }
    }

    /// One CSV row matching [`CSV_COLUMNS`].
    pub fn csv_record(&self) -> Vec<String> {
        let hz = self.hz();
        let f = |x: f64| format!("{x:.3}");
        let mut row = vec![
            self.schema_version.to_string(),
            self.config_hash.clone(),
            self.m.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.dtype.clone(),
            self.mode.clone(),
            self.drain.clone(),
            self.total.0.to_string(),
            f(self.total_cycles),
        ];
        row.extend(Bucket::ALL.iter().map(|&b| f(self.bucket_cycles(b, hz))));
        let t = &self.translation;
        row.extend([
            self.footprint_pages.to_string(),
            t.lookups.to_string(),
            t.misses.to_string(),
            t.walks.to_string(),
            f(t.mean_ptw_cycles),
            format!("{:.4}", t.overhead_fraction * 100.0),
            self.compute_events.to_string(),
            self.packets.to_string(),
            self.descriptors.to_string(),
            self.interrupts.to_string(),
            self.doorbells.to_string(),
            self.bytes_read.to_string(),
            self.bytes_written.to_string(),
            self.link_bytes.to_string(),
            self.dram_bytes.to_string(),
            self.llc_hits.to_string(),
            self.llc_misses.to_string(),
            f(self.mean_idle_cycles),
            format!("{:.6}", self.measured_eta_sa),
            format!("{:.6}", self.measured_eta_io),
        ]);
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakdown_sums() {
        let mut b = LatencyBreakdown::default();
        for (i, bucket) in Bucket::ALL.into_iter().enumerate() {
            b.add(bucket, Ps(i as u64 + 1));
        }
        assert_eq!(b.total(), Ps(28));
        let mut c = b;
        c.merge(&b);
        assert_eq!(c.total(), Ps(56));
        assert_eq!(c.get(Bucket::Control), Ps(14));
    }

    #[test]
    fn column_names_are_unique() {
        let mut cols = CSV_COLUMNS.to_vec();
        cols.sort();
        cols.dedup();
        assert_eq!(cols.len(), CSV_COLUMNS.len());
        for required in [
            "footprint_pages",
            "tlb_lookups",
            "tlb_misses",
            "ptw_count",
            "ptw_mean_cycles",
            "trans_overhead_pct",
            "schema_version",
            "config_hash",
        ] {
            assert!(CSV_COLUMNS.contains(&required));
        }
    }
}
