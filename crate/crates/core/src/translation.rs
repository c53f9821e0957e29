//! SMMU micro-TLB and page-table walks.

use serde::{Deserialize, Serialize};

use crate::dtype::DataType;
use crate::error::{Error, Result};
use crate::gemm::PAGE_BYTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Replacement {
    Lru,
    Fifo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmmuConfig {
    pub tlb_entries: usize,
    pub page_bytes: usize,
    pub ptw_base_cycles: u64,
    pub ptw_levels: u32,
    /// Page-table reads per walk that reach the memory system.
    pub ptw_memory_visits: u32,
    pub replacement: Replacement,
}

impl Default for SmmuConfig {
    fn default() -> Self {
        SmmuConfig {
            tlb_entries: 64,
            page_bytes: PAGE_BYTES,
            ptw_base_cycles: 250,
            ptw_levels: 4,
            ptw_memory_visits: 1,
            replacement: Replacement::Lru,
        }
    }
}

impl SmmuConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tlb_entries == 0 {
            return Err(Error::Config("TLB needs at least one entry".into()));
        }
        if self.page_bytes != PAGE_BYTES {
            return Err(Error::Config(format!("page size must be {PAGE_BYTES} bytes")));
        }
        if self.ptw_memory_visits > self.ptw_levels {
            return Err(Error::Config("walk cannot visit memory more often than it has levels".into()));
        }
        Ok(())
    }
}

/// Fully associative TLB keyed by page number.
#[derive(Debug, Clone)]
pub struct Tlb {
    capacity: usize,
    policy: Replacement,
    /// Ordered oldest first, by last use (LRU) or insertion (FIFO).
    entries: Vec<u64>,
}

impl Tlb {
    pub fn new(capacity: usize, policy: Replacement) -> Tlb {
        Tlb { capacity, policy, entries: Vec::with_capacity(capacity) }
    }

    /// Looks up `page`, installing it on a miss. Returns whether it hit.
    pub fn access(&mut self, page: u64) -> bool {
        if let Some(pos) = self.entries.iter().rposition(|&p| p == page) {
            if self.policy == Replacement::Lru {
                self.entries.remove(pos);
                self.entries.push(page);
            }
            return true;
        }
        if self.entries.len() == self.capacity {
            self.entries.remove(0);
        }
        self.entries.push(page);
        false
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TranslationStats {
    pub lookups: u64,
    pub misses: u64,
    pub walks: u64,
    pub mean_translate_cycles: f64,
    pub mean_ptw_cycles: f64,
    pub overhead_fraction: f64,
}

/// Translation state for one simulation run.
#[derive(Debug, Clone)]
pub struct Smmu {
    cfg: SmmuConfig,
    tlb: Tlb,
    lookups: u64,
    misses: u64,
    translate_cycles: u64,
    ptw_cycles: u64,
}

impl Smmu {
    pub fn new(cfg: SmmuConfig) -> Smmu {
        Smmu {
            tlb: Tlb::new(cfg.tlb_entries, cfg.replacement),
            cfg,
            lookups: 0,
            misses: 0,
            translate_cycles: 0,
            ptw_cycles: 0,
        }
    }

    pub fn config(&self) -> &SmmuConfig {
        &self.cfg
    }

    /// Translates `page`, returning cycles spent. On a miss `visit` is
    /// called with the number of page-table reads and returns the cycles
    /// they took in the memory system.
    pub fn translate_with(&mut self, page: u64, visit: impl FnOnce(u32) -> u64) -> u64 {
        self.lookups += 1;
        let cycles = if self.tlb.access(page) {
            1
        } else {
            self.misses += 1;
            let walk = self.cfg.ptw_base_cycles + visit(self.cfg.ptw_memory_visits);
            self.ptw_cycles += walk;
            1 + walk
        };
        self.translate_cycles += cycles;
        cycles
    }

    /// Translation with page-table reads costing nothing extra.
    pub fn translate(&mut self, page: u64) -> u64 {
        self.translate_with(page, |_| 0)
    }

    pub fn translate_cycles(&self) -> u64 {
        self.translate_cycles
    }

    /// Counters so far; `total_cycles` is the run length used for the
    /// overhead fraction.
    pub fn stats_report(&self, total_cycles: f64) -> TranslationStats {
        let mean = |sum: u64, n: u64| if n == 0 { 0.0 } else { sum as f64 / n as f64 };
        let overhead = if total_cycles > 0.0 {
            (self.translate_cycles as f64 / total_cycles).min(1.0)
        } else {
            0.0
        };
        TranslationStats {
            lookups: self.lookups,
            misses: self.misses,
            walks: self.misses,
            mean_translate_cycles: mean(self.translate_cycles, self.lookups),
            mean_ptw_cycles: mean(self.ptw_cycles, self.misses),
            overhead_fraction: overhead,
        }
    }
}

/// Pages touched by A, B and C of an `M × K` by `K × N` product.
pub fn footprint_pages(m: usize, n: usize, k: usize, dtype: DataType) -> u64 {
    let s = dtype.element_size();
    let s_acc = dtype.accumulator().element_size();
    let pages = |bytes: usize| bytes.div_ceil(PAGE_BYTES) as u64;
    pages(m * k * s) + pages(k * n * s) + pages(m * n * s_acc)
}
