use crate::bus::Response;
use crate::device::{
    fnv_step, read_le, write_le, Device, DeviceEvent, DeviceKind, FNV_SEED,
};

/// Volatile byte-addressable memory. Zero-initialized, zero wait states.
pub struct Ram {
    id: String,
    bytes: Vec<u8>,
}

impl Ram {
    pub fn new(id: impl Into<String>, size: u32) -> Self {
        Self {
            id: id.into(),
            bytes: vec![0; size as usize],
        }
    }

    fn in_range(&self, offset: u32, width: u8) -> bool {
        (offset as usize) + (width as usize) <= self.bytes.len()
    }
}

impl Device for Ram {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> DeviceKind {
        DeviceKind::Ram
    }

    fn read(&mut self, offset: u32, width: u8, _now: u64) -> Response {
        if !self.in_range(offset, width) {
            return Response::bus_error();
        }
        Response::ok_read(read_le(&self.bytes, offset as usize, width), 0)
    }

    fn write(&mut self, offset: u32, width: u8, payload: u32, _now: u64) -> Response {
        if !self.in_range(offset, width) {
            return Response::bus_error();
        }
        write_le(&mut self.bytes, offset as usize, width, payload);
        Response::ok_write(0)
    }

    fn tick(&mut self, _now: u64, _events: &mut Vec<DeviceEvent>) {}

    fn executable(&self) -> bool {
        true
    }

    fn load_byte(&mut self, offset: u32, value: u8) -> bool {
        match self.bytes.get_mut(offset as usize) {
            Some(b) => {
                *b = value;
                true
            }
            None => false,
        }
    }

    fn peek(&self, offset: u32) -> Option<u8> {
        self.bytes.get(offset as usize).copied()
    }

    fn upset_word(&mut self, offset: u32, bit: u8) -> Option<(u32, u32)> {
        if bit > 31 || !offset.is_multiple_of(4) || !self.in_range(offset, 4) {
            return None;
        }
        let pre = read_le(&self.bytes, offset as usize, 4);
        let post = pre ^ (1 << bit);
        write_le(&mut self.bytes, offset as usize, 4, post);
        Some((pre, post))
    }

    fn fingerprint(&self) -> u64 {
        fnv_step(FNV_SEED, &self.bytes)
    }
}
