//! Write-only console: a transmit register plus a captured output stream.
//!
//! Any write touching the transmit word at offset 0 pushes the low byte
//! of the payload; offset 4 is a read-only count of bytes written.

use crate::bus::Response;
use crate::device::{fnv_step, lane_read, Device, DeviceEvent, DeviceKind, FNV_SEED};

pub struct Console {
    id: String,
    captured: Vec<u8>,
}

impl Console {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            captured: Vec::new(),
        }
    }

    pub fn output(&self) -> &[u8] {
        &self.captured
    }
}

impl Device for Console {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> DeviceKind {
        DeviceKind::Console
    }

    fn read(&mut self, offset: u32, width: u8, _now: u64) -> Response {
        let (word_base, word) = match offset & !3 {
            0x0 => (0x0, 0),
            0x4 => (0x4, self.captured.len() as u32),
            _ => return Response::bus_error(),
        };
        if offset + width as u32 > word_base + 4 {
            return Response::bus_error();
        }
        Response::ok_read(lane_read(word, offset - word_base, width), 0)
    }

    fn write(&mut self, offset: u32, width: u8, payload: u32, _now: u64) -> Response {
        if offset + (width as u32) <= 4 {
            self.captured.push(payload as u8);
            return Response::ok_write(0);
        }
        Response::bus_error()
    }

    fn tick(&mut self, _now: u64, _events: &mut Vec<DeviceEvent>) {}

    fn peek(&self, _offset: u32) -> Option<u8> {
        None
    }

    fn status(&self) -> u32 {
        self.captured.len() as u32
    }

    fn console_bytes(&self) -> Option<&[u8]> {
        Some(&self.captured)
    }

    fn fingerprint(&self) -> u64 {
        fnv_step(FNV_SEED, &self.captured)
    }
}
