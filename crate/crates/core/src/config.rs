//! Line-oriented `section.key = value` configuration files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! link.lanes = 16          # trailing comment
//! experiment.name = "fig9"
//! sweep.payload = 64, 128, 256
//! ```
//!
//! Keys are dotted identifiers. Values run to the end of the line or to a
//! ` #` comment; surrounding double quotes are stripped. A key may appear
//! only once. Lists are comma separated.

use crate::dtype::DataType;
use crate::error::{config_err, Error, Result};
use crate::link::LinkConfig;
use crate::memory::tech_preset;
use crate::system::SystemConfig;
use crate::translation::Replacement;
use crate::workload::NonGemmModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    entries: Vec<Entry>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        })
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<KvConfig> {
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find(" #") {
                Some(pos) if !raw.trim_start().starts_with('#') => &raw[..pos],
                _ => raw,
            };
            let content = content.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got `{content}`") })?;
            let key = key.trim();
            if !valid_key(key) {
                return Err(Error::Parse { line, msg: format!("invalid key `{key}`") });
            }
            let mut value = value.trim();
            if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
                value = &value[1..value.len() - 1];
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(Error::Parse {
                    line,
                    msg: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
            entries.push(Entry { key: key.to_string(), value: value.to_string(), line });
        }
        Ok(KvConfig { entries })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        match self.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value.to_string(),
            None => self.entries.push(Entry { key: key.to_string(), value: value.to_string(), line: 0 }),
        }
    }

    /// Entries whose key starts with `prefix.`.
    pub fn section<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key.split_once('.').is_some_and(|(p, _)| p == prefix))
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.get(key).map(|e| e.value.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key).map(|e| e.parse()).transpose()
    }

    pub fn get_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key).map(|e| e.parse_list()).transpose()
    }

    /// Renders entries back in their original order.
    pub fn render(&self) -> String {
        self.entries.iter().map(|e| format!("{} = {}\n", e.key, e.value)).collect()
    }
}

impl Entry {
    pub fn parse<T: std::str::FromStr>(&self) -> Result<T> {
        self.value.parse().map_err(|_| Error::Parse {
            line: self.line,
            msg: format!("bad value `{}` for `{}`", self.value, self.key),
        })
    }

    pub fn parse_list<T: std::str::FromStr>(&self) -> Result<Vec<T>> {
        self.value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|_| Error::Parse {
                    line: self.line,
                    msg: format!("bad list item `{s}` for `{}`", self.key),
                })
            })
            .collect()
    }

    fn parse_bool(&self) -> Result<bool> {
        match self.value.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(Error::Parse { line: self.line, msg: format!("`{}` expects a boolean", self.key) }),
        }
    }

    fn unknown(&self) -> Error {
        Error::Parse { line: self.line, msg: format!("unknown key `{}`", self.key) }
    }
}

impl std::str::FromStr for Replacement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lru" => Ok(Replacement::Lru),
            "fifo" => Ok(Replacement::Fifo),
            _ => Err(config_err(format!("unknown replacement policy `{s}`"))),
        }
    }
}

const SYSTEM_SECTIONS: [&str; 8] = ["array", "link", "dma", "smmu", "host_mem", "device_mem", "llc", "system"];

/// Applies the system sections of `kv` on top of `cfg`. Memory `tech` keys
/// are applied before other memory keys, and `link.gbps` after the lane
/// count, regardless of their order in the file.
pub fn apply_system(kv: &KvConfig, cfg: &mut SystemConfig) -> Result<()> {
    for (side, key) in [("host_mem", "host_mem.tech"), ("device_mem", "device_mem.tech")] {
        if let Some(e) = kv.get(key) {
            let tech = tech_preset(&e.value).map_err(|_| Error::Parse {
                line: e.line,
                msg: format!("unknown memory technology `{}`", e.value),
            })?;
            if side == "host_mem" {
                cfg.host_mem = tech;
            } else {
                cfg.device_mem = tech;
            }
        }
    }
    let mut aggregate = None;
    for e in kv.entries().iter().filter(|e| SYSTEM_SECTIONS.iter().any(|s| e.key.starts_with(&format!("{s}.")))) {
        let (section, field) = e.key.split_once('.').expect("section prefix");
        match (section, field) {
            ("array", "width") => cfg.array.width = e.parse()?,
            ("array", "freq_hz") => cfg.array.freq_hz = e.parse()?,
            ("array", "dtype") => cfg.array.dtype = e.parse::<DataType>()?,
            ("link", "lanes") => cfg.link.lanes = e.parse()?,
            ("link", "lane_rate_gt") => cfg.link.lane_rate_gt = e.parse()?,
            ("link", "gbps") => aggregate = Some(e.parse::<f64>()?),
            ("link", "encoding_efficiency") => cfg.link.encoding_efficiency = e.parse()?,
            ("link", "max_payload") => cfg.link.max_payload = e.parse()?,
            ("link", "header_bytes") => cfg.link.header_bytes = e.parse()?,
            ("link", "packet_setup_cycles") => cfg.link.packet_setup_cycles = e.parse()?,
            ("link", "clock_hz") => cfg.link.link_clock_hz = e.parse()?,
            ("link", "pipeline_depth") => cfg.link.pipeline_depth = e.parse()?,
            ("link", "stall_gain") => cfg.link.stall_gain = e.parse()?,
            ("link", "latency_ns") => cfg.link.link_latency_ns = e.parse()?,
            ("dma", "read_channels") => cfg.dma.read_channels = e.parse()?,
            ("dma", "write_channels") => cfg.dma.write_channels = e.parse()?,
            ("dma", "burst_bytes") => cfg.dma.burst_bytes = e.parse()?,
            ("dma", "descriptor_cycles") => cfg.dma.descriptor_cycles = e.parse()?,
            ("dma", "burst_issue_cycles") => cfg.dma.burst_issue_cycles = e.parse()?,
            ("dma", "doorbell_cycles") => cfg.dma.doorbell_cycles = e.parse()?,
            ("dma", "interrupt_cycles") => cfg.dma.interrupt_cycles = e.parse()?,
            ("dma", "clock_hz") => cfg.dma.clock_hz = e.parse()?,
            ("smmu", "tlb_entries") => cfg.smmu.tlb_entries = e.parse()?,
            ("smmu", "page_bytes") => cfg.smmu.page_bytes = e.parse()?,
            ("smmu", "ptw_base_cycles") => cfg.smmu.ptw_base_cycles = e.parse()?,
            ("smmu", "ptw_levels") => cfg.smmu.ptw_levels = e.parse()?,
            ("smmu", "ptw_memory_visits") => cfg.smmu.ptw_memory_visits = e.parse()?,
            ("smmu", "replacement") => cfg.smmu.replacement = e.parse()?,
            ("host_mem" | "device_mem", f) => {
                let mem = if section == "host_mem" { &mut cfg.host_mem } else { &mut cfg.device_mem };
                match f {
                    "tech" => {}
                    "bandwidth_gbps" => mem.bandwidth_gbps = e.parse()?,
                    "latency_ns" => mem.fixed_latency_ns = e.parse()?,
                    "channels" => mem.channels = e.parse()?,
                    "data_width_bits" => mem.data_width_bits = e.parse()?,
                    "data_rate_mtps" => mem.data_rate_mtps = e.parse()?,
                    _ => return Err(e.unknown()),
                }
            }
            ("llc", "size_bytes") => cfg.llc.size_bytes = e.parse()?,
            ("llc", "ways") => cfg.llc.ways = e.parse()?,
            ("llc", "line_bytes") => cfg.llc.line_bytes = e.parse()?,
            ("llc", "hit_latency_cycles") => cfg.llc.hit_latency_cycles = e.parse()?,
            ("llc", "bus_gbps") => cfg.llc.bus_gbps = e.parse()?,
            ("llc", "inclusive") => cfg.llc.inclusive = e.parse_bool()?,
            ("llc", "write_allocate") => cfg.llc.write_allocate = e.parse_bool()?,
            ("system", "mode") => cfg.mode = e.parse()?,
            ("system", "drain") => cfg.drain = e.parse()?,
            ("system", "eta_io") => cfg.eta_io = e.parse()?,
            ("system", "eta_sa") => cfg.eta_sa = e.parse()?,
            _ => return Err(e.unknown()),
        }
    }
    if let Some(gbps) = aggregate {
        cfg.link = LinkConfig { ..cfg.link.with_aggregate(gbps) };
    }
    cfg.validate()
}

/// Applies `ngm.*` keys on top of `ngm`.
pub fn apply_nongemm(kv: &KvConfig, ngm: &mut NonGemmModel) -> Result<()> {
    for e in kv.section("ngm") {
        let field = &e.key["ngm.".len()..];
        match field {
            "softmax_ns_per_element" => ngm.softmax_ns_per_element = e.parse()?,
            "layernorm_ns_per_element" => ngm.layernorm_ns_per_element = e.parse()?,
            "activation_ns_per_element" => ngm.activation_ns_per_element = e.parse()?,
            "transpose_ns_per_element" => ngm.transpose_ns_per_element = e.parse()?,
            "scale" => ngm.scale = e.parse()?,
            "element_bytes" => ngm.element_bytes = e.parse()?,
            "launch_ns_per_gemm" => ngm.launch_ns_per_gemm = e.parse()?,
            "pin_ns_per_page" => ngm.pin_ns_per_page = e.parse()?,
            _ => return Err(e.unknown()),
        }
    }
    ngm.validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::raw_bandwidth;
    use crate::system::AccessMode;

    #[test]
    fn parses_comments_quotes_and_lists() {
        let kv = KvConfig::parse(
            "# header\n\nexperiment.name = \"fig9\"  # trailing\nsweep.payload = 64, 128 ,256\n",
        )
        .unwrap();
        assert_eq!(kv.get_str("experiment.name"), Some("fig9"));
        assert_eq!(kv.get_list::<usize>("sweep.payload").unwrap(), Some(vec![64, 128, 256]));
        assert_eq!(kv.get("sweep.payload").unwrap().line, 4);
    }

    #[test]
    fn parse_errors_carry_lines() {
        assert!(matches!(KvConfig::parse("a.b = 1\nnonsense\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(KvConfig::parse("a.b = 1\na.b = 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(KvConfig::parse("bad key = 1\n"), Err(Error::Parse { line: 1, .. })));
        let kv = KvConfig::parse("link.lanes = many\n").unwrap();
        assert!(matches!(apply_system(&kv, &mut SystemConfig::default()), Err(Error::Parse { line: 1, .. })));
        let kv = KvConfig::parse("link.colour = red\n").unwrap();
        assert!(apply_system(&kv, &mut SystemConfig::default()).is_err());
    }

    #[test]
    fn applies_system_overrides() {
        let kv = KvConfig::parse(
            "link.gbps = 2\nlink.lanes = 4\nhost_mem.latency_ns = 36\nhost_mem.tech = DDR4\n\
             system.mode = DC\nsmmu.replacement = fifo\nllc.write_allocate = false\n",
        )
        .unwrap();
        let mut cfg = SystemConfig::default();
        apply_system(&kv, &mut cfg).unwrap();
        assert_eq!(cfg.link.lanes, 4);
        assert!((raw_bandwidth(&cfg.link) - 2e9).abs() < 1e-3);
        assert_eq!(cfg.host_mem.name, "DDR4");
        assert_eq!(cfg.host_mem.fixed_latency_ns, 36.0);
        assert_eq!(cfg.mode, AccessMode::DC);
        assert_eq!(cfg.smmu.replacement, Replacement::Fifo);
        assert!(!cfg.llc.write_allocate);
    }

    #[test]
    fn applies_nongemm_overrides() {
        let kv = KvConfig::parse("ngm.scale = 2.5\nngm.pin_ns_per_page = 0\n").unwrap();
        let mut ngm = NonGemmModel::default();
        apply_nongemm(&kv, &mut ngm).unwrap();
        assert_eq!((ngm.scale, ngm.pin_ns_per_page), (2.5, 0.0));
        let bad = KvConfig::parse("ngm.scale = -1\n").unwrap();
        assert!(apply_nongemm(&bad, &mut NonGemmModel::default()).is_err());
    }

    #[test]
    fn render_round_trips() {
        let kv = KvConfig::parse("a.b = 1\nc.d = x y\n").unwrap();
        let again = KvConfig::parse(&kv.render()).unwrap();
        assert_eq!(again.render(), kv.render());
    }
}
