//! Declarative platform descriptions and their instantiation.
//!
//! A platform file describes a complete virtual computer: clock, memory
//! map, device instances and their parameters. Parsing and validation
//! are pure; [`instantiate`] turns a validated description into a
//! ready-to-step [`Simulator`]. `parse_platform(render(config))` returns
//! the identical config for every valid config.
//!
//! File format (see the crate README for the full reference):
//!
//! ```text
//! [platform]
//! name = demo
//! clock_hz = 10000000
//! entry_point = 0x00000000
//! test_exit_address = 0xf0000000
//!
//! [device.rom0]
//! kind = rom
//! base = 0x00000000
//! size = 0x1000
//! ```
//!
//! Device kinds are `rom`, `ram`, `eeprom`, `timer` and `console`;
//! `eeprom` additionally requires `write_latency_ms` (there is no default
//! nominal programming time). Unknown sections and keys are errors.

use thiserror::Error;

use crate::bus::{validate_map, Interconnect, MapEntry, MapError, MemoryMap};
use crate::device::{Console, Device, DeviceKind, Eeprom, Ram, Rom, Timer};
use crate::kv::{self, KvError};
use crate::sim::Simulator;

pub const DEFAULT_CLOCK_HZ: u64 = 10_000_000;

/// Minimum clock: millisecond latencies must be representable as at
/// least one cycle.
pub const MIN_CLOCK_HZ: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceConfig {
    pub id: String,
    pub kind: DeviceKind,
    pub base: u32,
    pub size: u32,
    /// EEPROM nominal programming time; required for eeprom devices.
    pub write_latency_ms: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlatformConfig {
    pub name: String,
    pub clock_hz: u64,
    pub entry_point: u32,
    pub test_exit_address: u32,
    pub devices: Vec<DeviceConfig>,
}

impl PlatformConfig {
    pub fn device(&self, id: &str) -> Option<&DeviceConfig> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn memory_map(&self) -> MemoryMap {
        MemoryMap {
            entries: self
                .devices
                .iter()
                .map(|d| MapEntry {
                    base: d.base,
                    size: d.size,
                    device: d.id.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(#[from] KvError),
    #[error("line {line}: unknown device kind `{kind}`")]
    UnknownDeviceKind { kind: String, line: usize },
    #[error("missing required key `{key}` in section [{section}]")]
    MissingField { key: String, section: String },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("duplicate device id `{0}`")]
    DuplicateDeviceId(String),
    #[error("clock_hz {0} is below the minimum of {MIN_CLOCK_HZ}")]
    ClockTooSlow(u64),
    #[error("entry_point {0:#010x} does not lie within a mapped region")]
    EntryPointUnmapped(u32),
    #[error("entry_point {0:#010x} is not 4-byte aligned")]
    EntryPointMisaligned(u32),
    #[error("device `{id}`: {reason}")]
    BadDeviceGeometry { id: String, reason: String },
}

fn missing(key: &str, section: &str) -> ConfigError {
    ConfigError::MissingField {
        key: key.to_string(),
        section: section.to_string(),
    }
}

/// Parse and validate a platform document.
pub fn parse_platform(text: &str) -> Result<PlatformConfig, ConfigError> {
    let doc = kv::parse_document(text)?;
    let mut platform: Option<PlatformConfig> = None;
    let mut devices = Vec::new();

    for section in &doc.sections {
        if section.name == "platform" {
            let fields = section.fields(
                &["name", "clock_hz", "entry_point", "test_exit_address"],
                &[],
            )?;
            let name = fields
                .optional("name")
                .ok_or_else(|| missing("name", "platform"))?
                .value
                .clone();
            let clock_hz = fields
                .optional("clock_hz")
                .map(kv::parse_u64)
                .transpose()?
                .unwrap_or(DEFAULT_CLOCK_HZ);
            let entry_point = fields
                .optional("entry_point")
                .ok_or_else(|| missing("entry_point", "platform"))
                .and_then(|e| kv::parse_u32(e).map_err(ConfigError::from))?;
            let test_exit_address = fields
                .optional("test_exit_address")
                .ok_or_else(|| missing("test_exit_address", "platform"))
                .and_then(|e| kv::parse_u32(e).map_err(ConfigError::from))?;
            platform = Some(PlatformConfig {
                name,
                clock_hz,
                entry_point,
                test_exit_address,
                devices: Vec::new(),
            });
        } else if let Some(id) = section.name.strip_prefix("device.") {
            if id.is_empty() {
                return Err(KvError::new(section.line, "empty device id").into());
            }
            let kind_entry = section
                .entries
                .iter()
                .find(|e| e.key == "kind")
                .ok_or_else(|| missing("kind", &section.name))?;
            let kind = DeviceKind::parse(&kind_entry.value).ok_or_else(|| {
                ConfigError::UnknownDeviceKind {
                    kind: kind_entry.value.clone(),
                    line: kind_entry.line,
                }
            })?;
            let allowed: &[&str] = match kind {
                DeviceKind::Eeprom => &["kind", "base", "size", "write_latency_ms"],
                _ => &["kind", "base", "size"],
            };
            let fields = section.fields(allowed, &[])?;
            let base = fields
                .optional("base")
                .ok_or_else(|| missing("base", &section.name))
                .and_then(|e| kv::parse_u32(e).map_err(ConfigError::from))?;
            let size = fields
                .optional("size")
                .ok_or_else(|| missing("size", &section.name))
                .and_then(|e| kv::parse_u32(e).map_err(ConfigError::from))?;
            let write_latency_ms = match kind {
                DeviceKind::Eeprom => Some(
                    fields
                        .optional("write_latency_ms")
                        .ok_or_else(|| missing("write_latency_ms", &section.name))
                        .and_then(|e| kv::parse_u32(e).map_err(ConfigError::from))?,
                ),
                _ => None,
            };
            devices.push(DeviceConfig {
                id: id.to_string(),
                kind,
                base,
                size,
                write_latency_ms,
            });
        } else {
            return Err(KvError::new(
                section.line,
                format!("unknown section [{}]", section.name),
            )
            .into());
        }
    }

    let mut config = platform.ok_or_else(|| missing("platform", "document"))?;
    config.devices = devices;
    validate_config(&config)?;
    Ok(config)
}

fn validate_config(config: &PlatformConfig) -> Result<(), ConfigError> {
    if config.clock_hz < MIN_CLOCK_HZ {
        return Err(ConfigError::ClockTooSlow(config.clock_hz));
    }
    for (i, d) in config.devices.iter().enumerate() {
        if config.devices[..i].iter().any(|other| other.id == d.id) {
            return Err(ConfigError::DuplicateDeviceId(d.id.clone()));
        }
        let min_size = match d.kind {
            DeviceKind::Eeprom => 8,  // at least 4 cells + status word
            DeviceKind::Timer => 16,  // counter lo/hi, compare, status
            DeviceKind::Console => 8, // tx word + count word
            _ => 4,
        };
        if d.size < min_size {
            return Err(ConfigError::BadDeviceGeometry {
                id: d.id.clone(),
                reason: format!("{} devices need at least {min_size} bytes", d.kind.name()),
            });
        }
    }
    validate_map(config.memory_map())?;
    if !config.entry_point.is_multiple_of(4) {
        return Err(ConfigError::EntryPointMisaligned(config.entry_point));
    }
    let entry = config.entry_point as u64;
    let mapped = config
        .devices
        .iter()
        .any(|d| (d.base as u64) <= entry && entry < d.base as u64 + d.size as u64);
    if !mapped {
        return Err(ConfigError::EntryPointUnmapped(config.entry_point));
    }
    Ok(())
}

/// Canonical serialization; `parse_platform` of the result reproduces
/// the config exactly.
pub fn render(config: &PlatformConfig) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "[platform]").unwrap();
    writeln!(out, "name = {}", config.name).unwrap();
    writeln!(out, "clock_hz = {}", config.clock_hz).unwrap();
    writeln!(out, "entry_point = {:#010x}", config.entry_point).unwrap();
    writeln!(out, "test_exit_address = {:#010x}", config.test_exit_address).unwrap();
    for d in &config.devices {
        writeln!(out).unwrap();
        writeln!(out, "[device.{}]", d.id).unwrap();
        writeln!(out, "kind = {}", d.kind.name()).unwrap();
        writeln!(out, "base = {:#010x}", d.base).unwrap();
        writeln!(out, "size = {:#x}", d.size).unwrap();
        if let Some(ms) = d.write_latency_ms {
            writeln!(out, "write_latency_ms = {ms}").unwrap();
        }
    }
    out
}

fn build_device(d: &DeviceConfig, clock_hz: u64) -> Box<dyn Device> {
    match d.kind {
        DeviceKind::Rom => Box::new(Rom::new(&d.id, d.size)),
        DeviceKind::Ram => Box::new(Ram::new(&d.id, d.size)),
        DeviceKind::Eeprom => Box::new(Eeprom::new(
            &d.id,
            d.size - 4,
            d.write_latency_ms.unwrap_or(0),
            clock_hz,
        )),
        DeviceKind::Timer => Box::new(Timer::new(&d.id)),
        DeviceKind::Console => Box::new(Console::new(&d.id)),
    }
}

/// Build a ready-to-step simulator from a validated config. No fault
/// campaign is attached; instances built from the same config are fully
/// independent.
pub fn instantiate(config: &PlatformConfig) -> Result<Simulator, ConfigError> {
    validate_config(config)?;
    let map = validate_map(config.memory_map())?;
    let devices = map
        .entries
        .iter()
        .map(|entry| {
            let d = config.device(&entry.device).expect("validated id");
            (entry.clone(), build_device(d, config.clock_hz))
        })
        .collect();
    let bus = Interconnect::new(devices);
    let mut cpu = crate::cpu::CpuState::reset(config.entry_point)
        .expect("validated entry alignment");
    cpu.test_exit = Some(config.test_exit_address);
    Ok(Simulator::new(cpu, bus, config.clock_hz))
}
