//! Schedulable, non-intrusive fault injection.
//!
//! A fault campaign is an ordered list of fault specifications, each with
//! one target, one type, and a schedule (start, stop, frequency).
//! Compiling a campaign against a platform yields transaction interposers
//! (external faults applied on the bus), device fault activations
//! (internal faults embedded in device models), and scheduled state
//! upsets. None of these touch the software under test: the loaded image
//! is never modified, and an empty campaign leaves every run bit-identical
//! to one executed with no fault engine at all.
//!
//! Randomized parameters (the EEPROM latency window) draw from
//! counter-based streams keyed by (campaign seed, fault id, fault seed),
//! so campaigns replay exactly and adding one fault never shifts
//! another's draws.

mod parse;

pub use parse::parse_campaign;

use std::fmt;

use thiserror::Error;

use crate::bus::{Response, Transaction, TxKind};
use crate::platform::PlatformConfig;
use crate::rng::DetRng;

/// How often a fault fires among its matching events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frequency {
    /// Every matching event inside the window.
    Every,
    /// Every Nth matching event, counted from the first event at or
    /// after `start`.
    EveryNth(u64),
    /// At most once per `period` cycles: an event fires if it is the
    /// first at or after the window start, or at least `period` cycles
    /// after the previous firing.
    Periodic(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    /// First cycle (inclusive) at which the fault may fire.
    pub start: u64,
    /// Cycle (exclusive) after which it no longer fires; None = unbounded.
    pub stop: Option<u64>,
    pub frequency: Frequency,
}

impl Schedule {
    pub fn new(start: u64, stop: Option<u64>, frequency: Frequency) -> Self {
        Self {
            start,
            stop,
            frequency,
        }
    }

    pub fn always() -> Self {
        Self::new(0, None, Frequency::Every)
    }
}

/// Per-instance schedule evaluation state (hit counter, periodic cursor).
#[derive(Debug, Clone)]
pub struct ScheduleState {
    schedule: Schedule,
    hits: u64,
    next_due: u64,
}

impl ScheduleState {
    pub fn new(schedule: Schedule) -> Self {
        Self {
            schedule,
            hits: 0,
            next_due: schedule.start,
        }
    }

    /// Decide whether this matching event fires. Must be called exactly
    /// once per matching event, with non-decreasing `now`.
    pub fn should_fire(&mut self, now: u64) -> bool {
        if now < self.schedule.start {
            return false;
        }
        if let Some(stop) = self.schedule.stop {
            if now >= stop {
                return false;
            }
        }
        self.hits += 1;
        match self.schedule.frequency {
            Frequency::Every => true,
            Frequency::EveryNth(n) => self.hits.is_multiple_of(n),
            Frequency::Periodic(period) => {
                if now >= self.next_due {
                    self.next_due = now + period;
                    true
                } else {
                    false
                }
            }
        }
    }
}

/// Parameters of a device-internal fault behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InternalFaultParams {
    LatencyWindowMs { min_ms: u32, max_ms: u32 },
}

/// Everything a device needs to arm one internal fault behavior.
#[derive(Debug, Clone)]
pub struct InternalFaultActivation {
    pub fault_id: String,
    pub name: String,
    pub params: InternalFaultParams,
    pub schedule: Schedule,
    pub rng: DetRng,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultType {
    BitFlip { mask: u32 },
    StuckAt0 { mask: u32 },
    StuckAt1 { mask: u32 },
    ValueReplace { value: u32 },
    ExtraDelay { cycles: u64 },
    ErrorResponse,
    DropWrite,
    DeviceInternal { name: String, params: InternalFaultParams },
    StateUpset { bit: u8 },
}

impl FaultType {
    /// Alter a 32-bit value. None for types that are not value alterations.
    pub fn apply_to_value(&self, value: u32) -> Option<u32> {
        match *self {
            FaultType::BitFlip { mask } => Some(value ^ mask),
            FaultType::StuckAt0 { mask } => Some(value & !mask),
            FaultType::StuckAt1 { mask } => Some(value | mask),
            FaultType::ValueReplace { value: v } => Some(v),
            _ => None,
        }
    }

    fn is_transaction_fault(&self) -> bool {
        matches!(
            self,
            FaultType::BitFlip { .. }
                | FaultType::StuckAt0 { .. }
                | FaultType::StuckAt1 { .. }
                | FaultType::ValueReplace { .. }
                | FaultType::ExtraDelay { .. }
                | FaultType::ErrorResponse
                | FaultType::DropWrite
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultTarget {
    /// Device-internal fault on one device instance.
    Device(String),
    /// Transactions addressed to one device's mapped region.
    BusDevice(String),
    /// Transactions whose address lies in [lo, hi).
    BusRange { lo: u32, hi: u64 },
    /// One CPU general register.
    Register(u8),
    /// One 4-byte-aligned memory word.
    Memory(u32),
}

impl fmt::Display for FaultTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultTarget::Device(id) => write!(f, "device:{id}"),
            FaultTarget::BusDevice(id) => write!(f, "bus:{id}"),
            FaultTarget::BusRange { lo, hi } => write!(f, "bus:{lo:#x}..{hi:#x}"),
            FaultTarget::Register(r) => write!(f, "reg:{r}"),
            FaultTarget::Memory(a) => write!(f, "mem:{a:#x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSpec {
    pub id: String,
    pub target: FaultTarget,
    pub fault_type: FaultType,
    /// Transaction kind filter for bus targets; None matches both.
    pub kind: Option<TxKind>,
    /// Whether instruction fetches are also subject to this fault.
    pub include_fetch: bool,
    pub schedule: Schedule,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FaultCampaign {
    pub seed: u64,
    pub faults: Vec<FaultSpec>,
}

/// One fault activation, recorded for attribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultLogRecord {
    pub cycle: u64,
    pub fault_id: String,
    pub target: String,
    pub pre: u64,
    pub post: u64,
}

impl fmt::Display for FaultLogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {:#x} {:#x}",
            self.cycle, self.fault_id, self.target, self.pre, self.post
        )
    }
}

/// Address filter one transaction interposer applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxFilter {
    pub lo: u32,
    pub hi: u64,
    pub kind: Option<TxKind>,
    pub include_fetch: bool,
}

impl TxFilter {
    pub fn matches(&self, tx: &Transaction) -> bool {
        if tx.is_fetch() && !self.include_fetch {
            return false;
        }
        if let Some(kind) = self.kind {
            if tx.kind != kind {
                return false;
            }
        }
        (self.lo as u64) <= tx.address as u64 && (tx.address as u64) < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledTxFault {
    pub id: String,
    pub target: FaultTarget,
    pub filter: TxFilter,
    pub effect: FaultType,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledActivation {
    pub fault_id: String,
    pub device: String,
    pub name: String,
    pub params: InternalFaultParams,
    pub schedule: Schedule,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpsetLocus {
    Register(u8),
    Memory(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledUpset {
    pub fault_id: String,
    pub locus: UpsetLocus,
    pub bit: u8,
    pub schedule: Schedule,
}

/// A campaign bound to one platform. Immutable and shareable; all mutable
/// evaluation state lives in per-instance runtimes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompiledCampaign {
    pub seed: u64,
    pub interposers: Vec<CompiledTxFault>,
    pub activations: Vec<CompiledActivation>,
    pub upsets: Vec<CompiledUpset>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("fault `{fault}`: unknown target `{target}`")]
    UnknownTarget { fault: String, target: String },
    #[error("fault `{fault}`: device `{device}` has no internal fault `{name}`")]
    UnknownDeviceFault {
        fault: String,
        device: String,
        name: String,
    },
    #[error("duplicate fault id `{0}`")]
    DuplicateFaultId(String),
    #[error("fault `{fault}`: invalid locus: {reason}")]
    InvalidLocus { fault: String, reason: String },
}

/// Compile a campaign against a validated platform description.
pub fn compile_campaign(
    campaign: &FaultCampaign,
    platform: &PlatformConfig,
) -> Result<CompiledCampaign, CompileError> {
    let mut out = CompiledCampaign {
        seed: campaign.seed,
        ..Default::default()
    };
    for (i, spec) in campaign.faults.iter().enumerate() {
        if campaign.faults[..i].iter().any(|other| other.id == spec.id) {
            return Err(CompileError::DuplicateFaultId(spec.id.clone()));
        }
        match (&spec.target, &spec.fault_type) {
            (FaultTarget::Device(dev), FaultType::DeviceInternal { name, params }) => {
                let device = platform.device(dev).ok_or_else(|| CompileError::UnknownTarget {
                    fault: spec.id.clone(),
                    target: spec.target.to_string(),
                })?;
                if !device.kind.internal_fault_names().contains(&name.as_str()) {
                    return Err(CompileError::UnknownDeviceFault {
                        fault: spec.id.clone(),
                        device: dev.clone(),
                        name: name.clone(),
                    });
                }
                out.activations.push(CompiledActivation {
                    fault_id: spec.id.clone(),
                    device: dev.clone(),
                    name: name.clone(),
                    params: *params,
                    schedule: spec.schedule,
                    seed: spec.seed,
                });
            }
            (target @ (FaultTarget::BusDevice(_) | FaultTarget::BusRange { .. }), effect)
                if effect.is_transaction_fault() =>
            {
                let (lo, hi) = match target {
                    FaultTarget::BusDevice(dev) => {
                        let device =
                            platform.device(dev).ok_or_else(|| CompileError::UnknownTarget {
                                fault: spec.id.clone(),
                                target: spec.target.to_string(),
                            })?;
                        (device.base, device.base as u64 + device.size as u64)
                    }
                    FaultTarget::BusRange { lo, hi } => (*lo, *hi),
                    _ => unreachable!(),
                };
                out.interposers.push(CompiledTxFault {
                    id: spec.id.clone(),
                    target: spec.target.clone(),
                    filter: TxFilter {
                        lo,
                        hi,
                        kind: spec.kind,
                        include_fetch: spec.include_fetch,
                    },
                    effect: effect.clone(),
                    schedule: spec.schedule,
                });
            }
            (FaultTarget::Register(r), FaultType::StateUpset { bit }) => {
                if *r > 31 || *bit > 31 {
                    return Err(CompileError::InvalidLocus {
                        fault: spec.id.clone(),
                        reason: format!("register {r} bit {bit} out of range"),
                    });
                }
                out.upsets.push(CompiledUpset {
                    fault_id: spec.id.clone(),
                    locus: UpsetLocus::Register(*r),
                    bit: *bit,
                    schedule: spec.schedule,
                });
            }
            (FaultTarget::Memory(addr), FaultType::StateUpset { bit }) => {
                if *bit > 31 {
                    return Err(CompileError::InvalidLocus {
                        fault: spec.id.clone(),
                        reason: format!("bit {bit} out of range"),
                    });
                }
                if addr % 4 != 0 {
                    return Err(CompileError::InvalidLocus {
                        fault: spec.id.clone(),
                        reason: format!("memory word {addr:#x} is not 4-byte aligned"),
                    });
                }
                let in_ram = platform.devices.iter().any(|d| {
                    d.kind == crate::device::DeviceKind::Ram
                        && *addr >= d.base
                        && (*addr as u64) + 4 <= d.base as u64 + d.size as u64
                });
                if !in_ram {
                    return Err(CompileError::InvalidLocus {
                        fault: spec.id.clone(),
                        reason: format!("memory word {addr:#x} is not in a RAM region"),
                    });
                }
                out.upsets.push(CompiledUpset {
                    fault_id: spec.id.clone(),
                    locus: UpsetLocus::Memory(*addr),
                    bit: *bit,
                    schedule: spec.schedule,
                });
            }
            _ => {
                return Err(CompileError::UnknownTarget {
                    fault: spec.id.clone(),
                    target: spec.target.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Runtime state of one transaction interposer within one simulation
/// instance.
#[derive(Debug, Clone)]
pub struct TxInterposer {
    desc: CompiledTxFault,
    schedule: ScheduleState,
    fired: bool,
}

impl TxInterposer {
    pub fn new(desc: CompiledTxFault) -> Self {
        let schedule = ScheduleState::new(desc.schedule);
        Self {
            desc,
            schedule,
            fired: false,
        }
    }

    pub fn fault_id(&self) -> &str {
        &self.desc.id
    }

    /// Per-transaction firing decision; consumes a schedule hit when the
    /// filter matches.
    pub fn begin(&mut self, tx: &Transaction) {
        self.fired = self.desc.filter.matches(tx) && self.schedule.should_fire(tx.issue_cycle);
    }

    /// Apply outbound effects to the transaction. Returns false if the
    /// write must be dropped before reaching the device.
    pub fn outbound(&mut self, tx: &mut Transaction, log: &mut Vec<FaultLogRecord>) -> bool {
        if !self.fired {
            return true;
        }
        match &self.desc.effect {
            effect @ (FaultType::BitFlip { .. }
            | FaultType::StuckAt0 { .. }
            | FaultType::StuckAt1 { .. }
            | FaultType::ValueReplace { .. })
                if tx.kind == TxKind::Write =>
            {
                let pre = tx.payload;
                tx.payload = effect.apply_to_value(pre).unwrap();
                log.push(self.record(tx.issue_cycle, pre as u64, tx.payload as u64));
                true
            }
            FaultType::DropWrite if tx.kind == TxKind::Write => {
                log.push(self.record(tx.issue_cycle, tx.payload as u64, tx.payload as u64));
                false
            }
            _ => true,
        }
    }

    /// Apply inbound effects to the response.
    pub fn inbound(
        &mut self,
        tx: &Transaction,
        resp: &mut Response,
        log: &mut Vec<FaultLogRecord>,
    ) {
        if !self.fired {
            return;
        }
        match &self.desc.effect {
            effect @ (FaultType::BitFlip { .. }
            | FaultType::StuckAt0 { .. }
            | FaultType::StuckAt1 { .. }
            | FaultType::ValueReplace { .. })
                if tx.kind == TxKind::Read =>
            {
                if resp.status.is_ok() {
                    let pre = resp.payload;
                    resp.payload = effect.apply_to_value(pre).unwrap();
                    log.push(self.record(tx.issue_cycle, pre as u64, resp.payload as u64));
                }
            }
            FaultType::ExtraDelay { cycles } => {
                let pre = resp.latency;
                resp.latency += cycles;
                log.push(self.record(tx.issue_cycle, pre, resp.latency));
            }
            FaultType::ErrorResponse => {
                let pre = resp.status.code();
                *resp = Response::bus_error();
                log.push(self.record(tx.issue_cycle, pre as u64, resp.status.code() as u64));
            }
            _ => {}
        }
    }

    fn record(&self, cycle: u64, pre: u64, post: u64) -> FaultLogRecord {
        FaultLogRecord {
            cycle,
            fault_id: self.desc.id.clone(),
            target: self.desc.target.to_string(),
            pre,
            post,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events_fired(schedule: Schedule, events: &[u64]) -> Vec<u64> {
        let mut state = ScheduleState::new(schedule);
        events
            .iter()
            .copied()
            .filter(|&now| state.should_fire(now))
            .collect()
    }

    #[test]
    fn window_bounds_are_half_open() {
        let s = Schedule::new(100, Some(200), Frequency::Every);
        assert_eq!(
            events_fired(s, &[99, 100, 150, 199, 200, 201]),
            vec![100, 150, 199]
        );
    }

    #[test]
    fn every_nth_fires_on_multiples() {
        // Ten matching events inside the window; an independent counter
        // says every-3rd fires on hits 3, 6 and 9.
        let s = Schedule::new(0, None, Frequency::EveryNth(3));
        let events: Vec<u64> = (1..=10).collect();
        let fired = events_fired(s, &events);
        let mut expected = Vec::new();
        let mut count = 0;
        for &e in &events {
            count += 1;
            if count % 3 == 0 {
                expected.push(e);
            }
        }
        assert_eq!(fired, expected);
        assert_eq!(fired, vec![3, 6, 9]);
    }

    #[test]
    fn nth_counting_starts_at_window_entry() {
        let s = Schedule::new(5, None, Frequency::EveryNth(2));
        // Events 1..=4 are before start and must not advance the counter.
        assert_eq!(events_fired(s, &[1, 2, 3, 4, 5, 6, 7, 8]), vec![6, 8]);
    }

    #[test]
    fn periodic_throttles_by_cycle_distance() {
        let s = Schedule::new(10, None, Frequency::Periodic(100));
        assert_eq!(
            events_fired(s, &[0, 10, 50, 109, 110, 150, 210, 211]),
            vec![10, 110, 210]
        );
    }

    #[test]
    fn value_faults_match_bitwise_oracle() {
        // Brute-force oracle over individual bit positions.
        fn oracle(value: u32, mask: u32, mode: u8) -> u32 {
            let mut out = 0u32;
            for bit in 0..32 {
                let v = value >> bit & 1;
                let m = mask >> bit & 1;
                let r = match mode {
                    0 => v ^ m,
                    1 => {
                        if m == 1 {
                            0
                        } else {
                            v
                        }
                    }
                    _ => {
                        if m == 1 {
                            1
                        } else {
                            v
                        }
                    }
                };
                out |= r << bit;
            }
            out
        }
        let cases = [
            (0x0000_0000u32, 0x0000_0001u32),
            (0xABCD_1234, 0xFF00_0000),
            (0xFFFF_FFFF, 0x0F0F_0F0F),
            (0x8000_0001, 0xFFFF_FFFF),
        ];
        for (value, mask) in cases {
            assert_eq!(
                FaultType::BitFlip { mask }.apply_to_value(value).unwrap(),
                oracle(value, mask, 0)
            );
            assert_eq!(
                FaultType::StuckAt0 { mask }.apply_to_value(value).unwrap(),
                oracle(value, mask, 1)
            );
            assert_eq!(
                FaultType::StuckAt1 { mask }.apply_to_value(value).unwrap(),
                oracle(value, mask, 2)
            );
        }
        // Frozen spot checks.
        assert_eq!(
            FaultType::BitFlip { mask: 1 }.apply_to_value(0).unwrap(),
            0x0000_0001
        );
        assert_eq!(
            FaultType::StuckAt0 { mask: 0xFF00_0000 }
                .apply_to_value(0xABCD_1234)
                .unwrap(),
            0x00CD_1234
        );
        assert_eq!(
            FaultType::ValueReplace { value: 0xDEAD_BEEF }
                .apply_to_value(0x1234_5678)
                .unwrap(),
            0xDEAD_BEEF
        );
    }

    #[test]
    fn log_record_renders_one_line() {
        let r = FaultLogRecord {
            cycle: 42,
            fault_id: "flip1".into(),
            target: "bus:ram0".into(),
            pre: 0,
            post: 1,
        };
        assert_eq!(r.to_string(), "42 flip1 bus:ram0 0x0 0x1");
    }

    fn test_platform() -> PlatformConfig {
        crate::platform::parse_platform(
            "[platform]\nname = t\nentry_point = 0x0\ntest_exit_address = 0xf0000000\n\
             [device.rom0]\nkind = rom\nbase = 0x0\nsize = 0x1000\n\
             [device.ram0]\nkind = ram\nbase = 0x80000000\nsize = 0x1000\n\
             [device.eeprom0]\nkind = eeprom\nbase = 0x40000000\nsize = 0x104\nwrite_latency_ms = 5\n",
        )
        .unwrap()
    }

    #[test]
    fn empty_campaign_compiles_to_nothing() {
        let compiled = compile_campaign(&FaultCampaign::default(), &test_platform()).unwrap();
        assert!(compiled.interposers.is_empty());
        assert!(compiled.activations.is_empty());
        assert!(compiled.upsets.is_empty());
    }

    #[test]
    fn one_flip_and_one_internal_compile_in_order() {
        let campaign = crate::fault::parse_campaign(
            "[fault.flip]\ntarget = bus:ram0\ntype = bit_flip\nmask = 1\nkind = read\n\
             [fault.slow]\ntarget = device:eeprom0\ntype = internal:slow_response\n\
             latency_ms_min = 3\nlatency_ms_max = 10\n",
        )
        .unwrap();
        let compiled = compile_campaign(&campaign, &test_platform()).unwrap();
        assert_eq!(compiled.interposers.len(), 1);
        assert_eq!(compiled.interposers[0].id, "flip");
        // The device region resolves to the interposer's address filter.
        assert_eq!(compiled.interposers[0].filter.lo, 0x8000_0000);
        assert_eq!(compiled.interposers[0].filter.hi, 0x8000_1000);
        assert_eq!(compiled.activations.len(), 1);
        assert_eq!(compiled.activations[0].device, "eeprom0");
        assert_eq!(compiled.activations[0].name, "slow_response");
    }

    #[test]
    fn unknown_targets_and_duplicates_are_rejected() {
        let platform = test_platform();
        let campaign = crate::fault::parse_campaign(
            "[fault.f]\ntarget = bus:uart9\ntype = bit_flip\nmask = 1\n",
        )
        .unwrap();
        assert!(matches!(
            compile_campaign(&campaign, &platform),
            Err(CompileError::UnknownTarget { .. })
        ));

        let campaign = crate::fault::parse_campaign(
            "[fault.f]\ntarget = device:ram0\ntype = internal:slow_response\n\
             latency_ms_min = 3\nlatency_ms_max = 10\n",
        )
        .unwrap();
        assert!(matches!(
            compile_campaign(&campaign, &platform),
            Err(CompileError::UnknownDeviceFault { .. })
        ));

        let mut campaign = crate::fault::parse_campaign(
            "[fault.f]\ntarget = bus:ram0\ntype = bit_flip\nmask = 1\n",
        )
        .unwrap();
        campaign.faults.push(campaign.faults[0].clone());
        assert_eq!(
            compile_campaign(&campaign, &platform),
            Err(CompileError::DuplicateFaultId("f".into()))
        );
    }

    #[test]
    fn upset_loci_are_validated() {
        let platform = test_platform();
        for (target, ok) in [
            ("mem:0x80000000", true),
            ("mem:0x80000002", false), // unaligned
            ("mem:0x40000000", false), // not RAM
            ("reg:31", true),
        ] {
            let campaign = crate::fault::parse_campaign(&format!(
                "[fault.u]\ntarget = {target}\ntype = state_upset\nbit = 31\n"
            ))
            .unwrap();
            assert_eq!(
                compile_campaign(&campaign, &platform).is_ok(),
                ok,
                "{target}"
            );
        }
    }
}
