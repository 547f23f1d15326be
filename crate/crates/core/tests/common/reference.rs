//! Independent RV32I reference interpreter used as the conformance
//! oracle.
//!
//! Deliberately shares no code with the crate under test: decoding is a
//! single match over raw bit fields, immediates are sign-extended by
//! subtraction, and memory is a flat byte map with explicit region
//! bounds. Semantics implemented directly from the public base-ISA
//! encoding tables.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefStop {
    Exited(u32),
    Trapped { cause: &'static str, value: u32 },
}

pub struct RefRegion {
    pub base: u32,
    pub size: u32,
    pub writable: bool,
}

pub struct RefSim {
    pub regs: [u32; 32],
    pub pc: u32,
    pub instret: u64,
    pub mem: BTreeMap<u32, u8>,
    pub regions: Vec<RefRegion>,
    pub test_exit: u32,
    pub stopped: Option<RefStop>,
}

impl RefSim {
    pub fn new(entry: u32, test_exit: u32, regions: Vec<RefRegion>) -> Self {
        Self {
            regs: [0; 32],
            pc: entry,
            instret: 0,
            mem: BTreeMap::new(),
            regions,
            test_exit,
            stopped: None,
        }
    }

    pub fn load(&mut self, base: u32, bytes: &[u8]) {
        for (i, b) in bytes.iter().enumerate() {
            self.mem.insert(base + i as u32, *b);
        }
    }

    fn mapped(&self, addr: u32, len: u32, write: bool) -> bool {
        self.regions.iter().any(|r| {
            addr as u64 >= r.base as u64
                && addr as u64 + len as u64 <= r.base as u64 + r.size as u64
                && (!write || r.writable)
        })
    }

    fn read_mem(&self, addr: u32, len: u32) -> u32 {
        let mut v: u32 = 0;
        for i in (0..len).rev() {
            v = (v << 8) | *self.mem.get(&(addr + i)).unwrap_or(&0) as u32;
        }
        v
    }

    fn write_mem(&mut self, addr: u32, len: u32, value: u32) {
        for i in 0..len {
            self.mem.insert(addr + i, (value >> (8 * i)) as u8);
        }
    }

    fn wreg(&mut self, r: u32, v: u32) {
        if r != 0 {
            self.regs[r as usize] = v;
        }
    }

    pub fn run(&mut self, max_steps: u64) -> Option<RefStop> {
        for _ in 0..max_steps {
            self.step();
            if self.stopped.is_some() {
                break;
            }
        }
        self.stopped.clone()
    }

    pub fn step(&mut self) {
        if self.stopped.is_some() {
            return;
        }
        let trap = |cause: &'static str, value: u32| -> Option<RefStop> {
            Some(RefStop::Trapped { cause, value })
        };
        let pc = self.pc;
        if !pc.is_multiple_of(4) {
            self.stopped = trap("misaligned-fetch", pc);
            return;
        }
        if !self.mapped(pc, 4, false) {
            self.stopped = trap("bus-error", pc);
            return;
        }
        let w = self.read_mem(pc, 4);

        let opcode = w & 0x7f;
        let rd = (w >> 7) & 0x1f;
        let f3 = (w >> 12) & 0x7;
        let f7 = (w >> 25) & 0x7f;
        let r1 = self.regs[((w >> 15) & 0x1f) as usize];
        let r2 = self.regs[((w >> 20) & 0x1f) as usize];

        // Immediates assembled from fields and sign-extended by
        // subtraction, as in the encoding tables.
        let imm_i = {
            let v = (w >> 20) & 0xfff;
            if v & 0x800 != 0 { v as i64 - 4096 } else { v as i64 }
        };
        let imm_s = {
            let v = ((w >> 25) & 0x7f) << 5 | ((w >> 7) & 0x1f);
            if v & 0x800 != 0 { v as i64 - 4096 } else { v as i64 }
        };
        let imm_b = {
            let v = ((w >> 31) & 1) << 12
                | ((w >> 7) & 1) << 11
                | ((w >> 25) & 0x3f) << 5
                | ((w >> 8) & 0xf) << 1;
            if v & 0x1000 != 0 { v as i64 - 8192 } else { v as i64 }
        };
        let imm_j = {
            let v = ((w >> 31) & 1) << 20
                | ((w >> 12) & 0xff) << 12
                | ((w >> 20) & 1) << 11
                | ((w >> 21) & 0x3ff) << 1;
            if v & 0x10_0000 != 0 { v as i64 - (1 << 21) } else { v as i64 }
        };

        let mut next = pc.wrapping_add(4);
        match opcode {
            0x37 => self.wreg(rd, w & 0xffff_f000),
            0x17 => self.wreg(rd, pc.wrapping_add(w & 0xffff_f000)),
            0x6f => {
                let target = pc.wrapping_add(imm_j as u32);
                if !target.is_multiple_of(4) {
                    self.stopped = trap("misaligned-fetch", target);
                    return;
                }
                self.wreg(rd, pc.wrapping_add(4));
                next = target;
            }
            0x67 => {
                if f3 != 0 {
                    self.stopped = trap("illegal-instruction", w);
                    return;
                }
                let target = r1.wrapping_add(imm_i as u32) & 0xffff_fffe;
                if !target.is_multiple_of(4) {
                    self.stopped = trap("misaligned-fetch", target);
                    return;
                }
                self.wreg(rd, pc.wrapping_add(4));
                next = target;
            }
            0x63 => {
                let taken = match f3 {
                    0 => r1 == r2,
                    1 => r1 != r2,
                    4 => (r1 as i32) < (r2 as i32),
                    5 => (r1 as i32) >= (r2 as i32),
                    6 => r1 < r2,
                    7 => r1 >= r2,
                    _ => {
                        self.stopped = trap("illegal-instruction", w);
                        return;
                    }
                };
                if taken {
                    let target = pc.wrapping_add(imm_b as u32);
                    if !target.is_multiple_of(4) {
                        self.stopped = trap("misaligned-fetch", target);
                        return;
                    }
                    next = target;
                }
            }
            0x03 => {
                let addr = r1.wrapping_add(imm_i as u32);
                let (len, signed) = match f3 {
                    0 => (1u32, true),
                    1 => (2, true),
                    2 => (4, false),
                    4 => (1, false),
                    5 => (2, false),
                    _ => {
                        self.stopped = trap("illegal-instruction", w);
                        return;
                    }
                };
                if !addr.is_multiple_of(len) {
                    self.stopped = trap("misaligned-access", addr);
                    return;
                }
                if !self.mapped(addr, len, false) {
                    self.stopped = trap("bus-error", addr);
                    return;
                }
                let raw = self.read_mem(addr, len);
                let v = if signed {
                    let bits = len * 8;
                    let shift = 32 - bits;
                    (((raw << shift) as i32) >> shift) as u32
                } else {
                    raw
                };
                self.wreg(rd, v);
            }
            0x23 => {
                let addr = r1.wrapping_add(imm_s as u32);
                let len = match f3 {
                    0 => 1u32,
                    1 => 2,
                    2 => 4,
                    _ => {
                        self.stopped = trap("illegal-instruction", w);
                        return;
                    }
                };
                if !addr.is_multiple_of(len) {
                    self.stopped = trap("misaligned-access", addr);
                    return;
                }
                let value = match len {
                    1 => r2 & 0xff,
                    2 => r2 & 0xffff,
                    _ => r2,
                };
                if addr == self.test_exit {
                    self.pc = next;
                    self.instret += 1;
                    self.stopped = Some(RefStop::Exited(value));
                    return;
                }
                if !self.mapped(addr, len, true) {
                    self.stopped = trap("bus-error", addr);
                    return;
                }
                self.write_mem(addr, len, value);
            }
            0x13 => {
                let v = match f3 {
                    0 => r1.wrapping_add(imm_i as u32),
                    2 => ((r1 as i32) < imm_i as i32) as u32,
                    3 => (r1 < imm_i as u32) as u32,
                    4 => r1 ^ imm_i as u32,
                    6 => r1 | imm_i as u32,
                    7 => r1 & imm_i as u32,
                    1 => {
                        if f7 != 0 {
                            self.stopped = trap("illegal-instruction", w);
                            return;
                        }
                        r1 << ((w >> 20) & 0x1f)
                    }
                    5 => match f7 {
                        0x00 => r1 >> ((w >> 20) & 0x1f),
                        0x20 => ((r1 as i32) >> ((w >> 20) & 0x1f)) as u32,
                        _ => {
                            self.stopped = trap("illegal-instruction", w);
                            return;
                        }
                    },
                    _ => unreachable!(),
                };
                self.wreg(rd, v);
            }
            0x33 => {
                let v = match (f3, f7) {
                    (0, 0x00) => r1.wrapping_add(r2),
                    (0, 0x20) => r1.wrapping_sub(r2),
                    (1, 0x00) => r1 << (r2 & 0x1f),
                    (2, 0x00) => ((r1 as i32) < (r2 as i32)) as u32,
                    (3, 0x00) => (r1 < r2) as u32,
                    (4, 0x00) => r1 ^ r2,
                    (5, 0x00) => r1 >> (r2 & 0x1f),
                    (5, 0x20) => ((r1 as i32) >> (r2 & 0x1f)) as u32,
                    (6, 0x00) => r1 | r2,
                    (7, 0x00) => r1 & r2,
                    _ => {
                        self.stopped = trap("illegal-instruction", w);
                        return;
                    }
                };
                self.wreg(rd, v);
            }
            0x0f => {
                if f3 != 0 {
                    self.stopped = trap("illegal-instruction", w);
                    return;
                }
                // fence: no-op on a single in-order core
            }
            0x73 => {
                match w {
                    0x0000_0073 => self.stopped = trap("environment-call", pc),
                    0x0010_0073 => self.stopped = trap("breakpoint", pc),
                    _ => self.stopped = trap("illegal-instruction", w),
                }
                return;
            }
            _ => {
                self.stopped = trap("illegal-instruction", w);
                return;
            }
        }
        self.pc = next;
        self.instret += 1;
    }
}
