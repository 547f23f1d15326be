//! Test scenario files.
//!
//! ```text
//! [scenario]
//! id = smoke
//! platform = demo.vp
//! binary = prog.bin
//! load_address = 0x0          # raw images only
//! campaign = faults.vf        # optional
//! stop = exit                 # exit | budget | pc:<addr>
//! cycle_budget = 100000
//! seed = 1                    # optional, overrides the campaign seed
//!
//! [stimuli]
//! write = <cycle> <device> <offset> <byte>
//!
//! [assert]
//! reg = <index> <value>
//! mem = <addr> <width> <value>
//! console = "text with \n escapes"
//! exit_code = <value>
//! device_status = <device> <value>
//! ```
//!
//! Relative paths are resolved against the scenario file's directory.
//! Every scenario carries a finite cycle budget; for `stop = exit` and
//! `stop = pc:<addr>` it acts as a backstop, for `stop = budget` it is
//! the stop condition itself. Stimuli are byte writes routed through the
//! bus (and thus through any fault interposers) right before the step at
//! their cycle. Assertions are evaluated only after the run stops as
//! expected.

use std::path::{Path, PathBuf};

use crate::kv::{self, Entry, KvError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCondition {
    TestExit,
    CycleBudget,
    PcEquals(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stimulus {
    pub cycle: u64,
    pub device: String,
    pub offset: u32,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assertion {
    RegEquals { reg: u8, value: u32 },
    MemEquals { address: u32, width: u8, value: u32 },
    ConsoleEquals { expected: Vec<u8> },
    ExitCodeEquals { value: u32 },
    DeviceStatusEquals { device: String, value: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestScenario {
    pub id: String,
    pub platform_path: PathBuf,
    pub binary_path: PathBuf,
    pub load_address: Option<u32>,
    pub campaign_path: Option<PathBuf>,
    pub stop: StopCondition,
    pub cycle_budget: u64,
    pub seed: Option<u64>,
    pub stimuli: Vec<Stimulus>,
    pub assertions: Vec<Assertion>,
}

impl TestScenario {
    /// Resolve relative file references against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        resolve(&mut self.platform_path);
        resolve(&mut self.binary_path);
        if let Some(c) = &mut self.campaign_path {
            if c.is_relative() {
                *c = base.join(&c);
            }
        }
    }
}

fn split_fields(entry: &Entry, expect: usize) -> Result<Vec<&str>, KvError> {
    let parts: Vec<&str> = entry.value.split_whitespace().collect();
    if parts.len() != expect {
        return Err(KvError::new(
            entry.line,
            format!(
                "key `{}` expects {expect} fields, got {}",
                entry.key,
                parts.len()
            ),
        ));
    }
    Ok(parts)
}

fn num_u64(entry: &Entry, text: &str) -> Result<u64, KvError> {
    let cleaned = text.replace('_', "");
    let parsed = if let Some(hex) = cleaned.strip_prefix("0x") {
        u64::from_str_radix(hex, 16)
    } else {
        cleaned.parse()
    };
    parsed.map_err(|_| KvError::new(entry.line, format!("`{text}` is not an unsigned integer")))
}

fn num_u32(entry: &Entry, text: &str) -> Result<u32, KvError> {
    num_u64(entry, text)?
        .try_into()
        .map_err(|_| KvError::new(entry.line, format!("`{text}` does not fit in 32 bits")))
}

/// Decode a double-quoted string with \n \r \t \0 \" \\ and \xNN escapes.
fn parse_quoted(entry: &Entry) -> Result<Vec<u8>, KvError> {
    let v = entry.value.as_str();
    let inner = v
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .ok_or_else(|| KvError::new(entry.line, "console assertion expects a quoted string"))?;
    let mut out = Vec::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            let mut buf = [0u8; 4];
            out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            continue;
        }
        match chars.next() {
            Some('n') => out.push(b'\n'),
            Some('r') => out.push(b'\r'),
            Some('t') => out.push(b'\t'),
            Some('0') => out.push(0),
            Some('"') => out.push(b'"'),
            Some('\\') => out.push(b'\\'),
            Some('x') => {
                let hi = chars.next();
                let lo = chars.next();
                let byte = match (hi, lo) {
                    (Some(h), Some(l)) => u8::from_str_radix(&format!("{h}{l}"), 16).ok(),
                    _ => None,
                };
                out.push(byte.ok_or_else(|| {
                    KvError::new(entry.line, "bad \\x escape in quoted string")
                })?);
            }
            other => {
                return Err(KvError::new(
                    entry.line,
                    format!("bad escape `\\{}`", other.map(String::from).unwrap_or_default()),
                ))
            }
        }
    }
    Ok(out)
}

pub fn parse_scenario(text: &str) -> Result<TestScenario, KvError> {
    let doc = kv::parse_document(text)?;
    let mut scenario: Option<TestScenario> = None;
    let mut stimuli = Vec::new();
    let mut assertions = Vec::new();

    for section in &doc.sections {
        match section.name.as_str() {
            "scenario" => {
                let fields = section.fields(
                    &[
                        "id",
                        "platform",
                        "binary",
                        "load_address",
                        "campaign",
                        "stop",
                        "cycle_budget",
                        "seed",
                    ],
                    &[],
                )?;
                let stop_entry = fields.required("stop")?;
                let stop = match stop_entry.value.as_str() {
                    "exit" => StopCondition::TestExit,
                    "budget" => StopCondition::CycleBudget,
                    other => match other.strip_prefix("pc:") {
                        Some(addr) => StopCondition::PcEquals(num_u32(stop_entry, addr)?),
                        None => {
                            return Err(KvError::new(
                                stop_entry.line,
                                format!("bad stop condition `{other}`"),
                            ))
                        }
                    },
                };
                scenario = Some(TestScenario {
                    id: fields.required("id")?.value.clone(),
                    platform_path: PathBuf::from(&fields.required("platform")?.value),
                    binary_path: PathBuf::from(&fields.required("binary")?.value),
                    load_address: fields
                        .optional("load_address")
                        .map(kv::parse_u32)
                        .transpose()?,
                    campaign_path: fields.optional("campaign").map(|e| PathBuf::from(&e.value)),
                    stop,
                    cycle_budget: kv::parse_u64(fields.required("cycle_budget")?)?,
                    seed: fields.optional("seed").map(kv::parse_u64).transpose()?,
                    stimuli: Vec::new(),
                    assertions: Vec::new(),
                });
            }
            "stimuli" => {
                let fields = section.fields(&["write"], &["write"])?;
                for entry in fields.all("write") {
                    let f = split_fields(entry, 4)?;
                    let value = num_u32(entry, f[3])?;
                    if value > 0xFF {
                        return Err(KvError::new(
                            entry.line,
                            format!("stimulus value {value:#x} exceeds one byte"),
                        ));
                    }
                    stimuli.push(Stimulus {
                        cycle: num_u64(entry, f[0])?,
                        device: f[1].to_string(),
                        offset: num_u32(entry, f[2])?,
                        value: value as u8,
                    });
                }
            }
            "assert" => {
                // Key-set validation only; evaluation order is file order.
                section.fields(
                    &["reg", "mem", "console", "exit_code", "device_status"],
                    &["reg", "mem", "console", "exit_code", "device_status"],
                )?;
                for entry in &section.entries {
                    let assertion = match entry.key.as_str() {
                        "reg" => {
                            let f = split_fields(entry, 2)?;
                            let reg = num_u32(entry, f[0])?;
                            if reg > 31 {
                                return Err(KvError::new(
                                    entry.line,
                                    format!("register index {reg} out of range"),
                                ));
                            }
                            Assertion::RegEquals {
                                reg: reg as u8,
                                value: num_u32(entry, f[1])?,
                            }
                        }
                        "mem" => {
                            let f = split_fields(entry, 3)?;
                            let width = num_u32(entry, f[1])?;
                            if !matches!(width, 1 | 2 | 4) {
                                return Err(KvError::new(
                                    entry.line,
                                    format!("bad assertion width {width}"),
                                ));
                            }
                            Assertion::MemEquals {
                                address: num_u32(entry, f[0])?,
                                width: width as u8,
                                value: num_u32(entry, f[2])?,
                            }
                        }
                        "console" => Assertion::ConsoleEquals {
                            expected: parse_quoted(entry)?,
                        },
                        "exit_code" => Assertion::ExitCodeEquals {
                            value: kv::parse_u32(entry)?,
                        },
                        "device_status" => {
                            let f = split_fields(entry, 2)?;
                            Assertion::DeviceStatusEquals {
                                device: f[0].to_string(),
                                value: num_u32(entry, f[1])?,
                            }
                        }
                        _ => unreachable!("filtered by fields()"),
                    };
                    assertions.push(assertion);
                }
            }
            other => {
                return Err(KvError::new(section.line, format!("unknown section [{other}]")))
            }
        }
    }

    let mut scenario =
        scenario.ok_or_else(|| KvError::new(1, "missing [scenario] section"))?;
    scenario.stimuli = stimuli;
    scenario.assertions = assertions;
    Ok(scenario)
}
