use crate::bus::Response;
use crate::device::{fnv_step, read_le, Device, DeviceEvent, DeviceKind, FNV_SEED};

/// Read-only memory. Populated by the loader; bus writes are rejected.
pub struct Rom {
    id: String,
    bytes: Vec<u8>,
}

impl Rom {
    pub fn new(id: impl Into<String>, size: u32) -> Self {
        Self {
            id: id.into(),
            bytes: vec![0; size as usize],
        }
    }
}

impl Device for Rom {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> DeviceKind {
        DeviceKind::Rom
    }

    fn read(&mut self, offset: u32, width: u8, _now: u64) -> Response {
        if (offset as usize) + (width as usize) > self.bytes.len() {
            return Response::bus_error();
        }
        Response::ok_read(read_le(&self.bytes, offset as usize, width), 0)
    }

    fn write(&mut self, _offset: u32, _width: u8, _payload: u32, _now: u64) -> Response {
        Response::bus_error()
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

    fn fingerprint(&self) -> u64 {
        fnv_step(FNV_SEED, &self.bytes)
    }
}
