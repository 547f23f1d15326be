//! Free-running cycle timer with a compare register.
//!
//! Register map (word offsets): 0x0 counter low, 0x4 counter high (both
//! read-only views of the platform cycle counter), 0x8 compare, 0xC
//! interrupt status (read: pending flag; any write acknowledges and
//! clears). The pending flag sets when the counter crosses the compare
//! value; compare 0 leaves the timer disarmed.

use crate::bus::Response;
use crate::device::{
    fnv_step, lane_read, lane_write, Device, DeviceEvent, DeviceEventKind, DeviceKind, FNV_SEED,
};

pub struct Timer {
    id: String,
    compare: u32,
    pending: bool,
    last_now: u64,
    raised_since_tick: bool,
    cleared_since_tick: bool,
}

impl Timer {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            compare: 0,
            pending: false,
            last_now: 0,
            raised_since_tick: false,
            cleared_since_tick: false,
        }
    }

    pub fn irq_pending(&self) -> bool {
        self.pending
    }

    fn sync(&mut self, now: u64) {
        let cmp = self.compare as u64;
        if cmp != 0 && !self.pending && self.last_now < cmp && now >= cmp {
            self.pending = true;
            self.raised_since_tick = true;
        }
        self.last_now = self.last_now.max(now);
    }
}

impl Device for Timer {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> DeviceKind {
        DeviceKind::Timer
    }

    fn read(&mut self, offset: u32, width: u8, now: u64) -> Response {
        self.sync(now);
        let (word_base, word) = match offset & !3 {
            0x0 => (0x0, now as u32),
            0x4 => (0x4, (now >> 32) as u32),
            0x8 => (0x8, self.compare),
            0xC => (0xC, self.pending as u32),
            _ => return Response::bus_error(),
        };
        if offset + width as u32 > word_base + 4 {
            return Response::bus_error();
        }
        Response::ok_read(lane_read(word, offset - word_base, width), 0)
    }

    fn write(&mut self, offset: u32, width: u8, payload: u32, now: u64) -> Response {
        self.sync(now);
        match offset & !3 {
            0x8 => {
                if offset + width as u32 > 0xC {
                    return Response::bus_error();
                }
                self.compare = lane_write(self.compare, offset - 0x8, width, payload);
                Response::ok_write(0)
            }
            0xC => {
                if offset + width as u32 > 0x10 {
                    return Response::bus_error();
                }
                if self.pending {
                    self.pending = false;
                    self.cleared_since_tick = true;
                }
                Response::ok_write(0)
            }
            // Counter words are read-only.
            _ => Response::bus_error(),
        }
    }

    fn tick(&mut self, now: u64, events: &mut Vec<DeviceEvent>) {
        self.sync(now);
        if self.raised_since_tick {
            self.raised_since_tick = false;
            events.push(DeviceEvent {
                cycle: now,
                device: self.id.clone(),
                kind: DeviceEventKind::IrqRaised,
            });
        }
        if self.cleared_since_tick {
            self.cleared_since_tick = false;
            events.push(DeviceEvent {
                cycle: now,
                device: self.id.clone(),
                kind: DeviceEventKind::IrqCleared,
            });
        }
    }

    fn peek(&self, _offset: u32) -> Option<u8> {
        None
    }

    fn status(&self) -> u32 {
        self.pending as u32
    }

    fn fingerprint(&self) -> u64 {
        let mut h = fnv_step(FNV_SEED, &self.compare.to_le_bytes());
        h = fnv_step(h, &[self.pending as u8]);
        fnv_step(h, &self.last_now.to_le_bytes())
    }
}
