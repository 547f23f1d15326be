//! Transaction-level interconnect.
//!
//! CPU and harness accesses are routed to memory-mapped devices through
//! an interposer chain in which compiled faults may alter the outbound
//! transaction and the inbound response, in campaign declaration order.
//! Routing is total: unmapped addresses, region-spanning accesses and
//! malformed transactions produce a bus-error response, never a crash.

use thiserror::Error;

use crate::device::Device;
use crate::fault::{FaultLogRecord, TxInterposer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxKind {
    Read,
    Write,
}

/// Who issued a transaction. Fault filters use this to exempt instruction
/// fetches unless a fault opts in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Initiator {
    CpuFetch,
    CpuData,
    Harness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transaction {
    pub kind: TxKind,
    pub address: u32,
    /// Access width in bytes: 1, 2 or 4.
    pub width: u8,
    /// Write payload; 0 for reads.
    pub payload: u32,
    pub initiator: Initiator,
    pub issue_cycle: u64,
}

impl Transaction {
    pub fn read(address: u32, width: u8, initiator: Initiator, issue_cycle: u64) -> Self {
        Self {
            kind: TxKind::Read,
            address,
            width,
            payload: 0,
            initiator,
            issue_cycle,
        }
    }

    pub fn write(
        address: u32,
        width: u8,
        payload: u32,
        initiator: Initiator,
        issue_cycle: u64,
    ) -> Self {
        Self {
            kind: TxKind::Write,
            address,
            width,
            payload,
            initiator,
            issue_cycle,
        }
    }

    pub fn is_fetch(&self) -> bool {
        self.initiator == Initiator::CpuFetch
    }

    /// Width is 1/2/4, the address is width-aligned, and the access does
    /// not run past the top of the 32-bit space.
    pub fn is_well_formed(&self) -> bool {
        matches!(self.width, 1 | 2 | 4)
            && self.address.is_multiple_of(self.width as u32)
            && self.address as u64 + self.width as u64 <= 1 << 32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RespStatus {
    Ok,
    BusError,
    DeviceBusy,
}

impl RespStatus {
    pub fn is_ok(self) -> bool {
        self == RespStatus::Ok
    }

    pub fn is_device_busy(self) -> bool {
        self == RespStatus::DeviceBusy
    }

    pub fn code(self) -> u32 {
        match self {
            RespStatus::Ok => 0,
            RespStatus::BusError => 1,
            RespStatus::DeviceBusy => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Response {
    pub status: RespStatus,
    /// Read payload; 0 for writes and errors.
    pub payload: u32,
    /// Wait cycles charged to the initiator.
    pub latency: u64,
}

impl Response {
    pub fn ok_read(payload: u32, latency: u64) -> Self {
        Self {
            status: RespStatus::Ok,
            payload,
            latency,
        }
    }

    pub fn ok_write(latency: u64) -> Self {
        Self {
            status: RespStatus::Ok,
            payload: 0,
            latency,
        }
    }

    pub fn bus_error() -> Self {
        Self {
            status: RespStatus::BusError,
            payload: 0,
            latency: 0,
        }
    }

    pub fn device_busy() -> Self {
        Self {
            status: RespStatus::DeviceBusy,
            payload: 0,
            latency: 0,
        }
    }
}

/// One memory-map entry: a device instance owning [base, base + size).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapEntry {
    pub base: u32,
    pub size: u32,
    pub device: String,
}

impl MapEntry {
    pub fn end(&self) -> u64 {
        self.base as u64 + self.size as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MemoryMap {
    pub entries: Vec<MapEntry>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("regions `{0}` and `{1}` overlap")]
    OverlappingRegions(String, String),
    #[error("region `{0}` has a base or size that is not a 4-byte multiple")]
    MisalignedRegion(String),
    #[error("region `{0}` is empty")]
    EmptyRegion(String),
    #[error("region `{0}` runs past the 32-bit address space")]
    RegionOutOfRange(String),
}

/// Check map invariants and return the map with entries sorted by base.
pub fn validate_map(map: MemoryMap) -> Result<MemoryMap, MapError> {
    let mut entries = map.entries;
    for e in &entries {
        if e.size == 0 {
            return Err(MapError::EmptyRegion(e.device.clone()));
        }
        if e.base % 4 != 0 || e.size % 4 != 0 {
            return Err(MapError::MisalignedRegion(e.device.clone()));
        }
        if e.end() > 1 << 32 {
            return Err(MapError::RegionOutOfRange(e.device.clone()));
        }
    }
    entries.sort_by_key(|e| e.base);
    for pair in entries.windows(2) {
        if pair[0].end() > pair[1].base as u64 {
            return Err(MapError::OverlappingRegions(
                pair[0].device.clone(),
                pair[1].device.clone(),
            ));
        }
    }
    Ok(MemoryMap { entries })
}

struct MappedDevice {
    base: u32,
    size: u32,
    device: Box<dyn Device>,
}

/// The bus: a validated memory map bound to device instances, plus the
/// interposer chain installed by the active campaign.
pub struct Interconnect {
    regions: Vec<MappedDevice>,
    chain: Vec<TxInterposer>,
    log: Vec<FaultLogRecord>,
}

impl Interconnect {
    /// Build from (map entry, device) pairs. The map must already be
    /// validated; entries are sorted by base here.
    pub fn new(devices: Vec<(MapEntry, Box<dyn Device>)>) -> Self {
        let mut regions: Vec<MappedDevice> = devices
            .into_iter()
            .map(|(entry, device)| MappedDevice {
                base: entry.base,
                size: entry.size,
                device,
            })
            .collect();
        regions.sort_by_key(|r| r.base);
        Self {
            regions,
            chain: Vec::new(),
            log: Vec::new(),
        }
    }

    pub fn install_interposers(&mut self, chain: Vec<TxInterposer>) {
        self.chain = chain;
    }

    /// Route one transaction: outbound interposers in declared order, the
    /// owning device, then inbound interposers in declared order.
    pub fn access(&mut self, mut tx: Transaction) -> Response {
        if !tx.is_well_formed() {
            return Response::bus_error();
        }
        for itp in &mut self.chain {
            itp.begin(&tx);
        }
        let mut dropped = false;
        for itp in &mut self.chain {
            if !dropped && !itp.outbound(&mut tx, &mut self.log) {
                // A dropped write never reaches the device; later
                // outbound alterations would alter nothing observable.
                dropped = true;
            }
        }
        let mut resp = if dropped {
            Response::ok_write(0)
        } else {
            self.dispatch(&tx)
        };
        for itp in &mut self.chain {
            itp.inbound(&tx, &mut resp, &mut self.log);
        }
        resp
    }

    fn dispatch(&mut self, tx: &Transaction) -> Response {
        let region = match self.region_index(tx.address) {
            Some(i) => &mut self.regions[i],
            None => return Response::bus_error(),
        };
        // The whole access must stay inside the owning region.
        if tx.address as u64 + tx.width as u64 > region.base as u64 + region.size as u64 {
            return Response::bus_error();
        }
        if tx.is_fetch() && !region.device.executable() {
            return Response::bus_error();
        }
        let offset = tx.address - region.base;
        match tx.kind {
            TxKind::Read => region.device.read(offset, tx.width, tx.issue_cycle),
            TxKind::Write => region.device.write(offset, tx.width, tx.payload, tx.issue_cycle),
        }
    }

    fn region_index(&self, address: u32) -> Option<usize> {
        let i = self
            .regions
            .partition_point(|r| r.base as u64 <= address as u64);
        if i == 0 {
            return None;
        }
        let r = &self.regions[i - 1];
        ((address as u64) < r.base as u64 + r.size as u64).then_some(i - 1)
    }

    pub fn tick_devices(&mut self, now: u64, events: &mut Vec<crate::device::DeviceEvent>) {
        for r in &mut self.regions {
            r.device.tick(now, events);
        }
    }

    pub fn device(&self, id: &str) -> Option<&dyn Device> {
        self.regions
            .iter()
            .find(|r| r.device.id() == id)
            .map(|r| r.device.as_ref())
    }

    pub fn device_mut(&mut self, id: &str) -> Option<&mut (dyn Device + '_)> {
        for r in &mut self.regions {
            if r.device.id() == id {
                return Some(r.device.as_mut());
            }
        }
        None
    }

    pub fn devices(&self) -> impl Iterator<Item = &dyn Device> {
        self.regions.iter().map(|r| r.device.as_ref())
    }

    /// Region owning `address`, as (device id, base).
    pub fn region_of(&self, address: u32) -> Option<(&str, u32)> {
        self.region_index(address)
            .map(|i| (self.regions[i].device.id(), self.regions[i].base))
    }

    /// Non-intrusive byte read across the map.
    pub fn peek(&self, address: u32) -> Option<u8> {
        let i = self.region_index(address)?;
        let r = &self.regions[i];
        r.device.peek(address - r.base)
    }

    /// Invert one bit of the word at `address` (state-upset path).
    pub fn upset_word(&mut self, address: u32, bit: u8) -> Option<(u32, u32)> {
        let i = self.region_index(address)?;
        let r = &mut self.regions[i];
        let offset = address - r.base;
        r.device.upset_word(offset, bit)
    }

    /// Loader poke across the map; fails outside loadable devices.
    pub fn load_byte(&mut self, address: u32, value: u8) -> bool {
        match self.region_index(address) {
            Some(i) => {
                let r = &mut self.regions[i];
                let offset = address - r.base;
                r.device.load_byte(offset, value)
            }
            None => false,
        }
    }

    /// Move accumulated fault records (chain first, then devices in map
    /// order) to `out`.
    pub fn drain_fault_records(&mut self, out: &mut Vec<FaultLogRecord>) {
        out.append(&mut self.log);
        for r in &mut self.regions {
            r.device.drain_fault_records(out);
        }
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = crate::device::FNV_SEED;
        for r in &self.regions {
            h ^= r.device.fingerprint();
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        h
    }
}

/// Anything a CPU can issue transactions to.
pub trait Bus {
    fn access(&mut self, tx: Transaction) -> Response;
}

impl Bus for Interconnect {
    fn access(&mut self, tx: Transaction) -> Response {
        Interconnect::access(self, tx)
    }
}
