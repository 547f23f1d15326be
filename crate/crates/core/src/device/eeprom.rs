//! Byte-programmable EEPROM with asynchronous write timing.
//!
//! The mapped region is the cell array followed by one 32-bit status
//! register at offset `cells`. A write to a cell offset while idle is
//! accepted with handshake latency 0 and starts programming; the busy bit
//! stays set for `write_latency_ms` (converted to cycles at the platform
//! clock), after which the value commits and becomes readable. Writes
//! issued while busy are rejected with a device-busy response and do not
//! disturb the in-flight byte. Reads of a cell always return the last
//! committed value; unwritten cells read as the erase value 0xFF.
//!
//! The fault registry holds one behavior, `slow_response`: while its
//! schedule fires, the busy duration of an accepted write is drawn
//! uniformly from the configured `[min_ms, max_ms]` window instead of the
//! nominal latency.

use crate::bus::Response;
use crate::device::{fnv_step, lane_read, read_le, Device, DeviceEvent, DeviceEventKind, DeviceKind, FNV_SEED};
use crate::fault::{FaultLogRecord, InternalFaultActivation, InternalFaultParams, ScheduleState};
use crate::rng::DetRng;

pub const ERASE_VALUE: u8 = 0xFF;

struct SlowResponse {
    fault_id: String,
    min_ms: u32,
    max_ms: u32,
    schedule: ScheduleState,
    rng: DetRng,
}

pub struct Eeprom {
    id: String,
    cells: Vec<u8>,
    write_latency_ms: u32,
    clock_hz: u64,
    /// Programming in flight: (cell offset, value, commit cycle).
    inflight: Option<(u32, u8, u64)>,
    last_now: u64,
    completed_since_tick: bool,
    slow: Option<SlowResponse>,
    pending_log: Vec<FaultLogRecord>,
}

impl Eeprom {
    pub fn new(id: impl Into<String>, cell_count: u32, write_latency_ms: u32, clock_hz: u64) -> Self {
        Self {
            id: id.into(),
            cells: vec![ERASE_VALUE; cell_count as usize],
            write_latency_ms,
            clock_hz,
            inflight: None,
            last_now: 0,
            completed_since_tick: false,
            slow: None,
            pending_log: Vec::new(),
        }
    }

    pub fn cell_count(&self) -> u32 {
        self.cells.len() as u32
    }

    /// Byte offset of the status register (one word past the cell array).
    pub fn status_offset(&self) -> u32 {
        self.cells.len() as u32
    }

    pub fn is_busy(&self) -> bool {
        self.inflight.is_some()
    }

    /// Commit cycle of the write in flight, if any.
    pub fn busy_until(&self) -> Option<u64> {
        self.inflight.map(|(_, _, deadline)| deadline)
    }

    fn latency_cycles(&self, ms: u32) -> u64 {
        ms as u64 * self.clock_hz / 1000
    }

    fn sync(&mut self, now: u64) {
        if let Some((offset, value, deadline)) = self.inflight {
            if now >= deadline {
                self.cells[offset as usize] = value;
                self.inflight = None;
                self.completed_since_tick = true;
            }
        }
        self.last_now = self.last_now.max(now);
    }

    /// Begin programming one byte, or reject with device-busy.
    pub fn write_cell(&mut self, offset: u32, value: u8, now: u64) -> Response {
        self.sync(now);
        if offset >= self.cell_count() {
            return Response::bus_error();
        }
        if self.inflight.is_some() {
            return Response::device_busy();
        }
        let nominal = self.latency_cycles(self.write_latency_ms);
        let mut duration = nominal;
        if let Some(slow) = &mut self.slow {
            if slow.schedule.should_fire(now) {
                let lo = slow.min_ms as u64 * self.clock_hz / 1000;
                let hi = slow.max_ms as u64 * self.clock_hz / 1000;
                duration = slow.rng.range_inclusive(lo, hi);
                self.pending_log.push(FaultLogRecord {
                    cycle: now,
                    fault_id: slow.fault_id.clone(),
                    target: format!("device:{}", self.id),
                    pre: nominal,
                    post: duration,
                });
            }
        }
        self.inflight = Some((offset, value, now + duration));
        Response::ok_write(0)
    }

    /// Read a committed cell value or the status register.
    pub fn read_at(&mut self, offset: u32, width: u8, now: u64) -> Response {
        self.sync(now);
        let cells = self.cell_count();
        if offset + width as u32 <= cells {
            return Response::ok_read(read_le(&self.cells, offset as usize, width), 0);
        }
        // Status word occupies [cells, cells + 4).
        if offset >= cells && offset + width as u32 <= cells + 4 {
            let status = self.is_busy() as u32;
            return Response::ok_read(lane_read(status, offset - cells, width), 0);
        }
        Response::bus_error()
    }
}

impl Device for Eeprom {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> DeviceKind {
        DeviceKind::Eeprom
    }

    fn read(&mut self, offset: u32, width: u8, now: u64) -> Response {
        self.read_at(offset, width, now)
    }

    fn write(&mut self, offset: u32, width: u8, payload: u32, now: u64) -> Response {
        self.sync(now);
        if offset + (width as u32) > self.cell_count() {
            // Status register and out-of-range offsets are not writable.
            return Response::bus_error();
        }
        if width != 1 {
            // Programming is byte-granular.
            return Response::bus_error();
        }
        self.write_cell(offset, payload as u8, now)
    }

    fn tick(&mut self, now: u64, events: &mut Vec<DeviceEvent>) {
        self.sync(now);
        if self.completed_since_tick {
            self.completed_since_tick = false;
            events.push(DeviceEvent {
                cycle: now,
                device: self.id.clone(),
                kind: DeviceEventKind::ProgrammingComplete,
            });
        }
    }

    fn load_byte(&mut self, offset: u32, value: u8) -> bool {
        match self.cells.get_mut(offset as usize) {
            Some(b) => {
                *b = value;
                true
            }
            None => false,
        }
    }

    fn peek(&self, offset: u32) -> Option<u8> {
        self.cells.get(offset as usize).copied()
    }

    fn status(&self) -> u32 {
        self.is_busy() as u32
    }

    fn activate_fault(&mut self, activation: InternalFaultActivation) -> bool {
        if activation.name != "slow_response" {
            return false;
        }
        let InternalFaultParams::LatencyWindowMs { min_ms, max_ms } = activation.params;
        self.slow = Some(SlowResponse {
            fault_id: activation.fault_id,
            min_ms,
            max_ms,
            schedule: ScheduleState::new(activation.schedule),
            rng: activation.rng,
        });
        true
    }

    fn fingerprint(&self) -> u64 {
        let mut h = fnv_step(FNV_SEED, &self.cells);
        h = fnv_step(h, &self.last_now.to_le_bytes());
        if let Some((o, v, d)) = self.inflight {
            h = fnv_step(h, &o.to_le_bytes());
            h = fnv_step(h, &[v]);
            h = fnv_step(h, &d.to_le_bytes());
        }
        h
    }

    fn drain_fault_records(&mut self, out: &mut Vec<FaultLogRecord>) {
        out.append(&mut self.pending_log);
    }
}
