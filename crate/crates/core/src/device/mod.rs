//! Memory-mapped device models.
//!
//! Every device answers bus reads and writes over its mapped region,
//! advances its own timed behavior through [`Device::tick`], and may carry
//! a registry of named internal fault behaviors that a compiled campaign
//! activates. With no activation the registry is unobservable: nominal
//! behavior is bit-identical to a device built without one.
//!
//! Observation (`peek`, `status`, `console_bytes`, `fingerprint`) never
//! touches device state, so the harness can assert on it non-intrusively.

mod console;
mod eeprom;
mod ram;
mod rom;
mod timer;

pub use console::Console;
pub use eeprom::Eeprom;
pub use ram::Ram;
pub use rom::Rom;
pub use timer::Timer;

use crate::bus::Response;
use crate::fault::{FaultLogRecord, InternalFaultActivation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceKind {
    Rom,
    Ram,
    Eeprom,
    Timer,
    Console,
}

impl DeviceKind {
    pub fn name(self) -> &'static str {
        match self {
            DeviceKind::Rom => "rom",
            DeviceKind::Ram => "ram",
            DeviceKind::Eeprom => "eeprom",
            DeviceKind::Timer => "timer",
            DeviceKind::Console => "console",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "rom" => DeviceKind::Rom,
            "ram" => DeviceKind::Ram,
            "eeprom" => DeviceKind::Eeprom,
            "timer" => DeviceKind::Timer,
            "console" => DeviceKind::Console,
            _ => return None,
        })
    }

    /// Named internal fault behaviors a device of this kind can embed.
    pub fn internal_fault_names(self) -> &'static [&'static str] {
        match self {
            DeviceKind::Eeprom => &["slow_response"],
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceEvent {
    pub cycle: u64,
    pub device: String,
    pub kind: DeviceEventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceEventKind {
    IrqRaised,
    IrqCleared,
    ProgrammingComplete,
}

pub trait Device {
    fn id(&self) -> &str;
    fn kind(&self) -> DeviceKind;

    /// Handle a bus read of `width` bytes at `offset`, observed at cycle `now`.
    fn read(&mut self, offset: u32, width: u8, now: u64) -> Response;

    /// Handle a bus write, observed at cycle `now`.
    fn write(&mut self, offset: u32, width: u8, payload: u32, now: u64) -> Response;

    /// Advance device-local time to `now`, appending any events produced.
    fn tick(&mut self, now: u64, events: &mut Vec<DeviceEvent>);

    /// True if instruction fetches from this device are allowed.
    fn executable(&self) -> bool {
        false
    }

    /// Loader poke, outside the transaction path. Returns false if this
    /// device cannot hold loaded images.
    fn load_byte(&mut self, offset: u32, value: u8) -> bool {
        let _ = (offset, value);
        false
    }

    /// Non-intrusive byte observation; None for offsets without stable
    /// backing storage.
    fn peek(&self, offset: u32) -> Option<u8>;

    /// Device status word used by `device_status` assertions.
    fn status(&self) -> u32 {
        0
    }

    fn console_bytes(&self) -> Option<&[u8]> {
        None
    }

    /// Activate a named internal fault. Returns false for names not in
    /// this device's registry (campaign compilation validates first).
    fn activate_fault(&mut self, activation: InternalFaultActivation) -> bool {
        let _ = activation;
        false
    }

    /// Invert one bit of the 32-bit word at `offset` (state-upset path).
    /// Returns (pre, post) word values, or None if unsupported here.
    fn upset_word(&mut self, offset: u32, bit: u8) -> Option<(u32, u32)> {
        let _ = (offset, bit);
        None
    }

    /// Hash of all internal state, for observation-purity checks.
    fn fingerprint(&self) -> u64;

    /// Move internally produced fault log records to `out`.
    fn drain_fault_records(&mut self, out: &mut Vec<FaultLogRecord>) {
        let _ = out;
    }
}

pub(crate) fn read_le(bytes: &[u8], offset: usize, width: u8) -> u32 {
    let mut v = 0u32;
    for i in (0..width as usize).rev() {
        v = v << 8 | bytes[offset + i] as u32;
    }
    v
}

pub(crate) fn write_le(bytes: &mut [u8], offset: usize, width: u8, value: u32) {
    for i in 0..width as usize {
        bytes[offset + i] = (value >> (8 * i)) as u8;
    }
}

/// Extract `width` bytes of a 32-bit register word at a byte lane.
pub(crate) fn lane_read(word: u32, lane: u32, width: u8) -> u32 {
    let shifted = word >> (8 * lane);
    match width {
        1 => shifted & 0xff,
        2 => shifted & 0xffff,
        _ => shifted,
    }
}

/// Merge `width` bytes of `value` into a 32-bit register word at a byte lane.
pub(crate) fn lane_write(word: u32, lane: u32, width: u8, value: u32) -> u32 {
    let mask: u32 = match width {
        1 => 0xff,
        2 => 0xffff,
        _ => 0xffff_ffff,
    };
    let mask = mask << (8 * lane);
    (word & !mask) | ((value << (8 * lane)) & mask)
}

pub(crate) fn fnv_step(h: u64, bytes: &[u8]) -> u64 {
    let mut h = h;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub(crate) const FNV_SEED: u64 = 0xCBF2_9CE4_8422_2325;
