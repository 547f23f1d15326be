//! Interpreting RV32I core.
//!
//! One [`step`] fetches, decodes and executes exactly one instruction,
//! with all memory effects issued as transactions on the supplied bus.
//! The default timing model charges one cycle per retired instruction
//! plus whatever latency the bus reports. Identical starting state and
//! identical bus responses produce bit-identical outcomes.
//!
//! Traps never vector: the core halts with the trap recorded, because
//! scenarios define what was supposed to happen and silent vectoring
//! would hide errors. A store to the configured test-exit address halts
//! the core and records the stored value as the exit code, which gives
//! unmodified bare-metal binaries a non-intrusive termination channel.

use thiserror::Error;

use crate::bus::{Bus, Initiator, Transaction, TxKind};
use crate::decode::{decode, DecodedInstruction, Op};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrapCause {
    IllegalInstruction,
    MisalignedFetch,
    MisalignedAccess,
    BusError,
    EnvironmentCall,
    Breakpoint,
}

impl TrapCause {
    pub fn name(self) -> &'static str {
        match self {
            TrapCause::IllegalInstruction => "illegal-instruction",
            TrapCause::MisalignedFetch => "misaligned-fetch",
            TrapCause::MisalignedAccess => "misaligned-access",
            TrapCause::BusError => "bus-error",
            TrapCause::EnvironmentCall => "environment-call",
            TrapCause::Breakpoint => "breakpoint",
        }
    }
}

/// A trap with its cause-specific faulting value: the offending word for
/// illegal instructions, the offending address for alignment and bus
/// faults, and the pc for environment calls and breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trap {
    pub cause: TrapCause,
    pub value: u32,
}

impl Trap {
    fn new(cause: TrapCause, value: u32) -> Self {
        Self { cause, value }
    }
}

impl std::fmt::Display for Trap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({:#010x})", self.cause.name(), self.value)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResetError {
    #[error("entry point {0:#010x} is not 4-byte aligned")]
    MisalignedEntry(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpuState {
    pub pc: u32,
    regs: [u32; 32],
    pub cycles: u64,
    pub halted: bool,
    pub pending_trap: Option<Trap>,
    /// Store address that halts the core, recording the value as exit code.
    pub test_exit: Option<u32>,
    pub exit_code: Option<u32>,
}

impl CpuState {
    /// Architectural reset: pc at `entry`, registers cleared, cycle
    /// counter zeroed.
    pub fn reset(entry: u32) -> Result<Self, ResetError> {
        if !entry.is_multiple_of(4) {
            return Err(ResetError::MisalignedEntry(entry));
        }
        Ok(Self {
            pc: entry,
            regs: [0; 32],
            cycles: 0,
            halted: false,
            pending_trap: None,
            test_exit: None,
            exit_code: None,
        })
    }

    #[inline]
    pub fn reg(&self, index: u8) -> u32 {
        self.regs[index as usize]
    }

    /// Register write honoring the hardwired-zero register.
    #[inline]
    pub fn set_reg(&mut self, index: u8, value: u32) {
        if index != 0 {
            self.regs[index as usize] = value;
        }
    }

    /// Invert one bit of a register (state-upset path). Upsets aimed at
    /// register 0 are suppressed; the returned pair is then (0, 0).
    pub fn upset_reg(&mut self, index: u8, bit: u8) -> (u32, u32) {
        let pre = self.reg(index);
        let post = pre ^ (1 << bit);
        self.set_reg(index, post);
        (pre, self.reg(index))
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = crate::device::FNV_SEED;
        h = crate::device::fnv_step(h, &self.pc.to_le_bytes());
        for r in &self.regs {
            h = crate::device::fnv_step(h, &r.to_le_bytes());
        }
        crate::device::fnv_step(h, &self.cycles.to_le_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemOp {
    pub kind: TxKind,
    pub address: u32,
    pub width: u8,
    /// Bus payload: the stored value for writes, the raw loaded value for
    /// reads (before sign extension).
    pub value: u32,
}

/// Everything observable about one retired instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetiredInfo {
    /// pc the instruction was fetched from.
    pub pc: u32,
    pub word: u32,
    pub decoded: DecodedInstruction,
    /// Committed register write (suppressed writes to x0 are omitted).
    pub reg_write: Option<(u8, u32)>,
    pub mem_op: Option<MemOp>,
    /// For conditional branches: whether the branch was taken.
    pub branch_taken: Option<bool>,
    /// Device wait cycles charged on top of the base cycle.
    pub wait_cycles: u64,
    /// Cycle count at which the instruction started.
    pub at_cycle: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Retired(Box<RetiredInfo>),
    Trapped(Trap),
    /// The core was already halted; nothing happened.
    Halted,
}

/// Fetch, decode and execute one instruction. On a trap nothing commits:
/// pc, registers and the cycle counter keep their pre-step values, the
/// trap is recorded in `pending_trap`, and the core halts.
pub fn step(state: &mut CpuState, bus: &mut impl Bus) -> StepOutcome {
    if state.halted {
        return StepOutcome::Halted;
    }
    match step_inner(state, bus) {
        Ok(info) => StepOutcome::Retired(info),
        Err(trap) => {
            state.halted = true;
            state.pending_trap = Some(trap);
            StepOutcome::Trapped(trap)
        }
    }
}

fn step_inner(state: &mut CpuState, bus: &mut impl Bus) -> Result<Box<RetiredInfo>, Trap> {
    let pc = state.pc;
    let at_cycle = state.cycles;
    if !pc.is_multiple_of(4) {
        return Err(Trap::new(TrapCause::MisalignedFetch, pc));
    }
    let fetch = bus.access(Transaction::read(pc, 4, Initiator::CpuFetch, at_cycle));
    if !fetch.status.is_ok() {
        return Err(Trap::new(TrapCause::BusError, pc));
    }
    let word = fetch.payload;
    let d = decode(word).map_err(|_| Trap::new(TrapCause::IllegalInstruction, word))?;

    let rs1 = state.reg(d.rs1);
    let rs2 = state.reg(d.rs2);
    let imm = d.imm as u32;

    let mut next_pc = pc.wrapping_add(4);
    let mut reg_write: Option<(u8, u32)> = None;
    let mut mem_op: Option<MemOp> = None;
    let mut branch_taken: Option<bool> = None;
    let mut data_wait: u64 = 0;
    let mut halt_code: Option<u32> = None;

    let jump_to = |target: u32| -> Result<u32, Trap> {
        if !target.is_multiple_of(4) {
            Err(Trap::new(TrapCause::MisalignedFetch, target))
        } else {
            Ok(target)
        }
    };

    match d.op {
        Op::Lui => reg_write = Some((d.rd, imm)),
        Op::Auipc => reg_write = Some((d.rd, pc.wrapping_add(imm))),
        Op::Jal => {
            let target = jump_to(pc.wrapping_add(imm))?;
            reg_write = Some((d.rd, pc.wrapping_add(4)));
            next_pc = target;
        }
        Op::Jalr => {
            let target = jump_to(rs1.wrapping_add(imm) & !1)?;
            reg_write = Some((d.rd, pc.wrapping_add(4)));
            next_pc = target;
        }
        Op::Beq | Op::Bne | Op::Blt | Op::Bge | Op::Bltu | Op::Bgeu => {
            let taken = match d.op {
                Op::Beq => rs1 == rs2,
                Op::Bne => rs1 != rs2,
                Op::Blt => (rs1 as i32) < (rs2 as i32),
                Op::Bge => (rs1 as i32) >= (rs2 as i32),
                Op::Bltu => rs1 < rs2,
                _ => rs1 >= rs2,
            };
            if taken {
                next_pc = jump_to(pc.wrapping_add(imm))?;
            }
            branch_taken = Some(taken);
        }
        Op::Lb | Op::Lh | Op::Lw | Op::Lbu | Op::Lhu => {
            let address = rs1.wrapping_add(imm);
            let width: u8 = match d.op {
                Op::Lb | Op::Lbu => 1,
                Op::Lh | Op::Lhu => 2,
                _ => 4,
            };
            // Misaligned data accesses trap before reaching the bus.
            if !address.is_multiple_of(width as u32) {
                return Err(Trap::new(TrapCause::MisalignedAccess, address));
            }
            let resp = bus.access(Transaction::read(address, width, Initiator::CpuData, at_cycle));
            if !resp.status.is_ok() {
                return Err(Trap::new(TrapCause::BusError, address));
            }
            data_wait = resp.latency;
            let raw = resp.payload;
            let value = match d.op {
                Op::Lb => raw as u8 as i8 as i32 as u32,
                Op::Lh => raw as u16 as i16 as i32 as u32,
                Op::Lbu => raw & 0xff,
                Op::Lhu => raw & 0xffff,
                _ => raw,
            };
            reg_write = Some((d.rd, value));
            mem_op = Some(MemOp {
                kind: TxKind::Read,
                address,
                width,
                value: raw,
            });
        }
        Op::Sb | Op::Sh | Op::Sw => {
            let address = rs1.wrapping_add(imm);
            let (width, payload): (u8, u32) = match d.op {
                Op::Sb => (1, rs2 & 0xff),
                Op::Sh => (2, rs2 & 0xffff),
                _ => (4, rs2),
            };
            if !address.is_multiple_of(width as u32) {
                return Err(Trap::new(TrapCause::MisalignedAccess, address));
            }
            if state.test_exit == Some(address) {
                // Halt convention: the store retires without touching the
                // bus and its value becomes the exit code.
                halt_code = Some(payload);
            } else {
                let resp = bus.access(Transaction::write(
                    address,
                    width,
                    payload,
                    Initiator::CpuData,
                    at_cycle,
                ));
                if resp.status == crate::bus::RespStatus::BusError {
                    return Err(Trap::new(TrapCause::BusError, address));
                }
                // Device-busy rejections retire; software observes them
                // through device status registers.
                data_wait = resp.latency;
            }
            mem_op = Some(MemOp {
                kind: TxKind::Write,
                address,
                width,
                value: payload,
            });
        }
        Op::Addi => reg_write = Some((d.rd, rs1.wrapping_add(imm))),
        Op::Slti => reg_write = Some((d.rd, ((rs1 as i32) < (imm as i32)) as u32)),
        Op::Sltiu => reg_write = Some((d.rd, (rs1 < imm) as u32)),
        Op::Xori => reg_write = Some((d.rd, rs1 ^ imm)),
        Op::Ori => reg_write = Some((d.rd, rs1 | imm)),
        Op::Andi => reg_write = Some((d.rd, rs1 & imm)),
        Op::Slli => reg_write = Some((d.rd, rs1 << (imm & 0x1f))),
        Op::Srli => reg_write = Some((d.rd, rs1 >> (imm & 0x1f))),
        Op::Srai => reg_write = Some((d.rd, ((rs1 as i32) >> (imm & 0x1f)) as u32)),
        Op::Add => reg_write = Some((d.rd, rs1.wrapping_add(rs2))),
        Op::Sub => reg_write = Some((d.rd, rs1.wrapping_sub(rs2))),
        Op::Sll => reg_write = Some((d.rd, rs1 << (rs2 & 0x1f))),
        Op::Slt => reg_write = Some((d.rd, ((rs1 as i32) < (rs2 as i32)) as u32)),
        Op::Sltu => reg_write = Some((d.rd, (rs1 < rs2) as u32)),
        Op::Xor => reg_write = Some((d.rd, rs1 ^ rs2)),
        Op::Srl => reg_write = Some((d.rd, rs1 >> (rs2 & 0x1f))),
        Op::Sra => reg_write = Some((d.rd, ((rs1 as i32) >> (rs2 & 0x1f)) as u32)),
        Op::Or => reg_write = Some((d.rd, rs1 | rs2)),
        Op::And => reg_write = Some((d.rd, rs1 & rs2)),
        Op::Fence => {}
        Op::Ecall => return Err(Trap::new(TrapCause::EnvironmentCall, pc)),
        Op::Ebreak => return Err(Trap::new(TrapCause::Breakpoint, pc)),
    }

    // Commit.
    let wait_cycles = fetch.latency + data_wait;
    state.pc = next_pc;
    state.cycles = at_cycle + 1 + wait_cycles;
    if let Some((r, v)) = reg_write {
        state.set_reg(r, v);
    }
    if let Some(code) = halt_code {
        state.halted = true;
        state.exit_code = Some(code);
    }
    Ok(Box::new(RetiredInfo {
        pc,
        word,
        decoded: d,
        reg_write: reg_write.filter(|&(r, _)| r != 0),
        mem_op,
        branch_taken,
        wait_cycles,
        at_cycle,
    }))
}
