//! Fault campaign file parsing.
//!
//! Format: an optional `[campaign]` section (key `seed`), then one
//! `[fault.<id>]` section per fault with keys `target`, `type`, the
//! type's parameter keys (`mask`, `value`, `delay_cycles`, `bit`,
//! `latency_ms_min`/`latency_ms_max`), `start`, `stop`, `frequency`
//! (`every`, `every_nth=N`, `period=P`), `seed`, and for bus targets
//! `kind` (`read`/`write`/`any`) and `include_fetch`.

use crate::bus::TxKind;
use crate::fault::{
    FaultCampaign, FaultSpec, FaultTarget, FaultType, Frequency, InternalFaultParams, Schedule,
};
use crate::kv::{self, KvError, Section};

const FAULT_KEYS: &[&str] = &[
    "target",
    "type",
    "mask",
    "value",
    "delay_cycles",
    "bit",
    "latency_ms_min",
    "latency_ms_max",
    "start",
    "stop",
    "frequency",
    "seed",
    "kind",
    "include_fetch",
];

pub fn parse_campaign(text: &str) -> Result<FaultCampaign, KvError> {
    let doc = kv::parse_document(text)?;
    let mut campaign = FaultCampaign::default();
    for section in &doc.sections {
        if section.name == "campaign" {
            let fields = section.fields(&["seed"], &[])?;
            if let Some(e) = fields.optional("seed") {
                campaign.seed = kv::parse_u64(e)?;
            }
        } else if let Some(id) = section.name.strip_prefix("fault.") {
            campaign.faults.push(parse_fault(id, section)?);
        } else {
            return Err(KvError::new(
                section.line,
                format!("unknown section [{}]", section.name),
            ));
        }
    }
    Ok(campaign)
}

fn parse_fault(id: &str, section: &Section) -> Result<FaultSpec, KvError> {
    if id.is_empty() {
        return Err(KvError::new(section.line, "empty fault id"));
    }
    let fields = section.fields(FAULT_KEYS, &[])?;
    let err = |line: usize, msg: String| -> KvError { KvError::new(line, msg) };

    let target_entry = fields.required("target")?;
    let target = parse_target(&target_entry.value)
        .ok_or_else(|| err(target_entry.line, format!("bad target `{}`", target_entry.value)))?;

    let type_entry = fields.required("type")?;
    let mask = fields.optional("mask").map(kv::parse_u32).transpose()?;
    let value = fields.optional("value").map(kv::parse_u32).transpose()?;
    let delay = fields.optional("delay_cycles").map(kv::parse_u64).transpose()?;
    let bit = fields.optional("bit").map(kv::parse_u32).transpose()?;
    let lat_min = fields.optional("latency_ms_min").map(kv::parse_u32).transpose()?;
    let lat_max = fields.optional("latency_ms_max").map(kv::parse_u32).transpose()?;

    let need = |param: Option<u32>, name: &str| -> Result<u32, KvError> {
        param.ok_or_else(|| {
            err(
                type_entry.line,
                format!("type `{}` requires key `{name}`", type_entry.value),
            )
        })
    };

    let fault_type = match type_entry.value.as_str() {
        "bit_flip" => FaultType::BitFlip { mask: need(mask, "mask")? },
        "stuck_at_0" => FaultType::StuckAt0 { mask: need(mask, "mask")? },
        "stuck_at_1" => FaultType::StuckAt1 { mask: need(mask, "mask")? },
        "value_replace" => FaultType::ValueReplace { value: need(value, "value")? },
        "extra_delay" => FaultType::ExtraDelay {
            cycles: delay.ok_or_else(|| {
                err(type_entry.line, "type `extra_delay` requires key `delay_cycles`".into())
            })?,
        },
        "error_response" => FaultType::ErrorResponse,
        "drop_write" => FaultType::DropWrite,
        "state_upset" => FaultType::StateUpset {
            bit: need(bit, "bit")? as u8,
        },
        other => match other.strip_prefix("internal:") {
            Some(name) if !name.is_empty() => {
                let min_ms = need(lat_min, "latency_ms_min")?;
                let max_ms = need(lat_max, "latency_ms_max")?;
                if min_ms > max_ms {
                    return Err(err(
                        type_entry.line,
                        format!("latency window [{min_ms}, {max_ms}] is inverted"),
                    ));
                }
                FaultType::DeviceInternal {
                    name: name.to_string(),
                    params: InternalFaultParams::LatencyWindowMs { min_ms, max_ms },
                }
            }
            _ => return Err(err(type_entry.line, format!("unknown fault type `{other}`"))),
        },
    };

    // Target/type pairing rules.
    let is_bus = matches!(target, FaultTarget::BusDevice(_) | FaultTarget::BusRange { .. });
    let pairing_ok = match &fault_type {
        FaultType::DeviceInternal { .. } => matches!(target, FaultTarget::Device(_)),
        FaultType::StateUpset { .. } => {
            matches!(target, FaultTarget::Register(_) | FaultTarget::Memory(_))
        }
        _ => is_bus,
    };
    if !pairing_ok {
        return Err(err(
            type_entry.line,
            format!(
                "fault type `{}` cannot target `{}`",
                type_entry.value, target_entry.value
            ),
        ));
    }

    let kind = match fields.optional("kind") {
        None => None,
        Some(e) if !is_bus => {
            return Err(err(e.line, "`kind` is only valid for bus targets".into()))
        }
        Some(e) => match e.value.as_str() {
            "read" => Some(TxKind::Read),
            "write" => Some(TxKind::Write),
            "any" => None,
            other => return Err(err(e.line, format!("bad transaction kind `{other}`"))),
        },
    };
    if matches!(fault_type, FaultType::DropWrite) && kind == Some(TxKind::Read) {
        return Err(err(type_entry.line, "`drop_write` cannot filter on reads".into()));
    }
    let kind = if matches!(fault_type, FaultType::DropWrite) {
        Some(TxKind::Write)
    } else {
        kind
    };

    let include_fetch = match fields.optional("include_fetch") {
        None => false,
        Some(e) if !is_bus => {
            return Err(err(e.line, "`include_fetch` is only valid for bus targets".into()))
        }
        Some(e) => kv::parse_bool(e)?,
    };

    let start = fields.optional("start").map(kv::parse_u64).transpose()?.unwrap_or(0);
    let stop = fields.optional("stop").map(kv::parse_u64).transpose()?;
    if let Some(stop) = stop {
        if start > stop {
            return Err(err(
                fields.required("stop")?.line,
                format!("schedule start {start} exceeds stop {stop}"),
            ));
        }
    }
    let frequency = match fields.optional("frequency") {
        None => Frequency::Every,
        Some(e) => parse_frequency(e)?,
    };
    let seed = fields.optional("seed").map(kv::parse_u64).transpose()?.unwrap_or(0);

    Ok(FaultSpec {
        id: id.to_string(),
        target,
        fault_type,
        kind,
        include_fetch,
        schedule: Schedule::new(start, stop, frequency),
        seed,
    })
}

fn parse_target(text: &str) -> Option<FaultTarget> {
    if let Some(rest) = text.strip_prefix("bus:") {
        if let Some((lo, hi)) = rest.split_once("..") {
            let lo = parse_number(lo)?;
            let hi = parse_number_u64(hi)?;
            if lo as u64 >= hi || hi > 1 << 32 {
                return None;
            }
            return Some(FaultTarget::BusRange { lo, hi });
        }
        return Some(FaultTarget::BusDevice(rest.to_string()));
    }
    if let Some(dev) = text.strip_prefix("device:") {
        return Some(FaultTarget::Device(dev.to_string()));
    }
    if let Some(reg) = text.strip_prefix("reg:") {
        let r: u8 = reg.parse().ok()?;
        return Some(FaultTarget::Register(r));
    }
    if let Some(addr) = text.strip_prefix("mem:") {
        return Some(FaultTarget::Memory(parse_number(addr)?));
    }
    None
}

fn parse_number(text: &str) -> Option<u32> {
    parse_number_u64(text)?.try_into().ok()
}

fn parse_number_u64(text: &str) -> Option<u64> {
    let text = text.replace('_', "");
    if let Some(hex) = text.strip_prefix("0x") {
        u64::from_str_radix(hex, 16).ok()
    } else {
        text.parse().ok()
    }
}

fn parse_frequency(entry: &kv::Entry) -> Result<Frequency, KvError> {
    let v = entry.value.as_str();
    if v == "every" {
        return Ok(Frequency::Every);
    }
    if let Some(n) = v.strip_prefix("every_nth=") {
        let n = parse_number_u64(n)
            .filter(|&n| n >= 1)
            .ok_or_else(|| KvError::new(entry.line, format!("bad every_nth value `{n}`")))?;
        return Ok(Frequency::EveryNth(n));
    }
    if let Some(p) = v.strip_prefix("period=") {
        let p = parse_number_u64(p)
            .filter(|&p| p >= 1)
            .ok_or_else(|| KvError::new(entry.line, format!("bad period value `{p}`")))?;
        return Ok(Frequency::Periodic(p));
    }
    Err(KvError::new(entry.line, format!("bad frequency `{v}`")))
}
