//! The composite configuration of one simulation run.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gemm::ARRAY_WIDTH;
use crate::link::{DmaConfig, LinkConfig};
use crate::memory::{tech_preset, LlcConfig, MemoryTech, Placement};
use crate::systolic::ArrayConfig;
use crate::translation::SmmuConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessMode {
    /// Link, SMMU, host DRAM.
    DM,
    /// Link, SMMU, LLC, memory bus, host DRAM on miss.
    DC,
    /// Device-local DRAM only.
    DevMem,
}

impl AccessMode {
    pub fn name(self) -> &'static str {
        match self {
            AccessMode::DM => "DM",
            AccessMode::DC => "DC",
            AccessMode::DevMem => "DevMem",
        }
    }

    pub fn path(self) -> &'static [&'static str] {
        match self {
            AccessMode::DM => &["link", "smmu", "dram"],
            AccessMode::DC => &["link", "smmu", "llc", "membus", "dram-on-miss"],
            AccessMode::DevMem => &["device-dram"],
        }
    }

    pub fn placement(self) -> Placement {
        match self {
            AccessMode::DevMem => Placement::DeviceLocal,
            _ => Placement::HostViaLink,
        }
    }
}

impl std::str::FromStr for AccessMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dm" => Ok(AccessMode::DM),
            "dc" => Ok(AccessMode::DC),
            "devmem" => Ok(AccessMode::DevMem),
            _ => Err(Error::Config(format!("unknown access mode `{s}`"))),
        }
    }
}

/// When the output page is written back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DrainPolicy {
    /// Every finished `W × W` block is written as soon as it completes.
    PerBlock,
    /// Blocks collect in the page, which drains when full or at the end.
    PerPage,
}

impl DrainPolicy {
    pub fn name(self) -> &'static str {
        match self {
            DrainPolicy::PerBlock => "per-block",
            DrainPolicy::PerPage => "per-page",
        }
    }
}

impl std::str::FromStr for DrainPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "per-block" | "perblock" | "block" => Ok(DrainPolicy::PerBlock),
            "per-page" | "perpage" | "page" => Ok(DrainPolicy::PerPage),
            _ => Err(Error::Config(format!("unknown drain policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub array: ArrayConfig,
    pub link: LinkConfig,
    pub dma: DmaConfig,
    pub smmu: SmmuConfig,
    pub host_mem: MemoryTech,
    pub device_mem: MemoryTech,
    pub llc: LlcConfig,
    pub mode: AccessMode,
    pub drain: DrainPolicy,
    pub eta_io: f64,
    pub eta_sa: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            array: ArrayConfig::default(),
            link: LinkConfig::default(),
            dma: DmaConfig::default(),
            smmu: SmmuConfig::default(),
            host_mem: tech_preset("DDR3").expect("built-in preset"),
            device_mem: tech_preset("HBM2").expect("built-in preset"),
            llc: LlcConfig::default(),
            mode: AccessMode::DM,
            drain: DrainPolicy::PerBlock,
            eta_io: 1.0,
            eta_sa: 1.0,
        }
    }
}

impl SystemConfig {
    /// A system whose only cost besides compute is serialization on a
    /// `link_gbps` link: no framing, control, translation walks or memory
    /// latency.
    pub fn ideal(link_gbps: f64) -> SystemConfig {
        let fast_mem = |name: &str| MemoryTech {
            bandwidth_gbps: 1e9,
            fixed_latency_ns: 0.0,
            ..tech_preset(name).expect("built-in preset")
        };
        SystemConfig {
            link: LinkConfig::ideal(link_gbps),
            dma: DmaConfig::ideal(),
            smmu: SmmuConfig { ptw_base_cycles: 0, ptw_memory_visits: 0, ..SmmuConfig::default() },
            host_mem: fast_mem("DDR3"),
            device_mem: fast_mem("HBM2"),
            ..SystemConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.link.validate()?;
        self.dma.validate()?;
        self.smmu.validate()?;
        self.host_mem.validate()?;
        self.device_mem.validate()?;
        self.llc.validate()?;
        for (name, eta) in [("eta_io", self.eta_io), ("eta_sa", self.eta_sa)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1], got {eta}")));
            }
        }
        Ok(())
    }

    /// Checks that the configuration can drive the tile simulator.
    pub fn validate_for_simulation(&self) -> Result<()> {
        self.validate()?;
        if self.array.width != ARRAY_WIDTH {
            return Err(Error::Config(format!(
                "tile streaming requires a {ARRAY_WIDTH}-wide array, got {}",
                self.array.width
            )));
        }
        Ok(())
    }

    /// Memory holding the operands in this mode.
    pub fn operand_memory(&self) -> &MemoryTech {
        match self.mode {
            AccessMode::DevMem => &self.device_mem,
            _ => &self.host_mem,
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = SystemConfig::default();
        cfg.validate_for_simulation().unwrap();
        assert_eq!(cfg.operand_memory().name, "DDR3");
        let dev = SystemConfig { mode: AccessMode::DevMem, ..cfg };
        assert_eq!(dev.operand_memory().name, "HBM2");
        assert_eq!(dev.mode.placement(), Placement::DeviceLocal);
    }

    #[test]
    fn eta_range() {
        let bad = SystemConfig { eta_io: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SystemConfig { eta_sa: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = SystemConfig::default();
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.link.header_bytes += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn parse_enums() {
        assert_eq!("devmem".parse::<AccessMode>().unwrap(), AccessMode::DevMem);
        assert_eq!("per-page".parse::<DrainPolicy>().unwrap(), DrainPolicy::PerPage);
        assert!("ram".parse::<AccessMode>().is_err());
        assert_eq!(AccessMode::DC.path().len(), 5);
    }
}
