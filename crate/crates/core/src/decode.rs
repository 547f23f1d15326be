//! RV32I instruction decoding.
//!
//! Decoding is a pure function of the 32-bit word: the same word always
//! yields the same [`DecodedInstruction`], and words outside the base
//! integer set decode to [`DecodeError::IllegalInstruction`]. The decoder
//! covers the 37 user-level RV32I instructions plus ECALL, EBREAK and
//! FENCE (retired as a no-op on this single-core platform).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("illegal instruction encoding {0:#010x}")]
    IllegalInstruction(u32),
}

/// Coarse instruction class, one per decodable word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstrClass {
    AluImmediate,
    AluRegister,
    Load,
    Store,
    Branch,
    Jump,
    UpperImmediate,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Lui,
    Auipc,
    Jal,
    Jalr,
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
    Sb,
    Sh,
    Sw,
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
    Fence,
    Ecall,
    Ebreak,
}

impl Op {
    pub fn class(self) -> InstrClass {
        use Op::*;
        match self {
            Lui | Auipc => InstrClass::UpperImmediate,
            Jal | Jalr => InstrClass::Jump,
            Beq | Bne | Blt | Bge | Bltu | Bgeu => InstrClass::Branch,
            Lb | Lh | Lw | Lbu | Lhu => InstrClass::Load,
            Sb | Sh | Sw => InstrClass::Store,
            Addi | Slti | Sltiu | Xori | Ori | Andi | Slli | Srli | Srai => {
                InstrClass::AluImmediate
            }
            Add | Sub | Sll | Slt | Sltu | Xor | Srl | Sra | Or | And => InstrClass::AluRegister,
            Fence | Ecall | Ebreak => InstrClass::System,
        }
    }

    pub fn mnemonic(self) -> &'static str {
        use Op::*;
        match self {
            Lui => "lui",
            Auipc => "auipc",
            Jal => "jal",
            Jalr => "jalr",
            Beq => "beq",
            Bne => "bne",
            Blt => "blt",
            Bge => "bge",
            Bltu => "bltu",
            Bgeu => "bgeu",
            Lb => "lb",
            Lh => "lh",
            Lw => "lw",
            Lbu => "lbu",
            Lhu => "lhu",
            Sb => "sb",
            Sh => "sh",
            Sw => "sw",
            Addi => "addi",
            Slti => "slti",
            Sltiu => "sltiu",
            Xori => "xori",
            Ori => "ori",
            Andi => "andi",
            Slli => "slli",
            Srli => "srli",
            Srai => "srai",
            Add => "add",
            Sub => "sub",
            Sll => "sll",
            Slt => "slt",
            Sltu => "sltu",
            Xor => "xor",
            Srl => "srl",
            Sra => "sra",
            Or => "or",
            And => "and",
            Fence => "fence",
            Ecall => "ecall",
            Ebreak => "ebreak",
        }
    }
}

/// One decoded instruction. Fields not used by the operation are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodedInstruction {
    pub word: u32,
    pub op: Op,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    /// Sign-extended immediate; for shifts, the 5-bit shift amount.
    pub imm: i32,
}

#[inline]
fn rd(w: u32) -> u8 {
    ((w >> 7) & 0x1f) as u8
}

#[inline]
fn rs1(w: u32) -> u8 {
    ((w >> 15) & 0x1f) as u8
}

#[inline]
fn rs2(w: u32) -> u8 {
    ((w >> 20) & 0x1f) as u8
}

#[inline]
fn funct3(w: u32) -> u32 {
    (w >> 12) & 0x7
}

#[inline]
fn funct7(w: u32) -> u32 {
    w >> 25
}

#[inline]
fn imm_i(w: u32) -> i32 {
    (w as i32) >> 20
}

#[inline]
fn imm_s(w: u32) -> i32 {
    (((w >> 25) << 5 | ((w >> 7) & 0x1f)) as i32) << 20 >> 20
}

#[inline]
fn imm_b(w: u32) -> i32 {
    let imm = ((w >> 31) & 1) << 12
        | ((w >> 7) & 1) << 11
        | ((w >> 25) & 0x3f) << 5
        | ((w >> 8) & 0xf) << 1;
    (imm as i32) << 19 >> 19
}

#[inline]
fn imm_u(w: u32) -> i32 {
    (w & 0xffff_f000) as i32
}

#[inline]
fn imm_j(w: u32) -> i32 {
    let imm = ((w >> 31) & 1) << 20
        | ((w >> 12) & 0xff) << 12
        | ((w >> 20) & 1) << 11
        | ((w >> 21) & 0x3ff) << 1;
    (imm as i32) << 11 >> 11
}

/// Decode one 32-bit word.
pub fn decode(word: u32) -> Result<DecodedInstruction, DecodeError> {
    let illegal = Err(DecodeError::IllegalInstruction(word));
    let mut d = DecodedInstruction {
        word,
        op: Op::Addi,
        rd: 0,
        rs1: 0,
        rs2: 0,
        imm: 0,
    };
    match word & 0x7f {
        0x37 => {
            d.op = Op::Lui;
            d.rd = rd(word);
            d.imm = imm_u(word);
        }
        0x17 => {
            d.op = Op::Auipc;
            d.rd = rd(word);
            d.imm = imm_u(word);
        }
        0x6f => {
            d.op = Op::Jal;
            d.rd = rd(word);
            d.imm = imm_j(word);
        }
        0x67 => {
            if funct3(word) != 0 {
                return illegal;
            }
            d.op = Op::Jalr;
            d.rd = rd(word);
            d.rs1 = rs1(word);
            d.imm = imm_i(word);
        }
        0x63 => {
            d.op = match funct3(word) {
                0b000 => Op::Beq,
                0b001 => Op::Bne,
                0b100 => Op::Blt,
                0b101 => Op::Bge,
                0b110 => Op::Bltu,
                0b111 => Op::Bgeu,
                _ => return illegal,
            };
            d.rs1 = rs1(word);
            d.rs2 = rs2(word);
            d.imm = imm_b(word);
        }
        0x03 => {
            d.op = match funct3(word) {
                0b000 => Op::Lb,
                0b001 => Op::Lh,
                0b010 => Op::Lw,
                0b100 => Op::Lbu,
                0b101 => Op::Lhu,
                _ => return illegal,
            };
            d.rd = rd(word);
            d.rs1 = rs1(word);
            d.imm = imm_i(word);
        }
        0x23 => {
            d.op = match funct3(word) {
                0b000 => Op::Sb,
                0b001 => Op::Sh,
                0b010 => Op::Sw,
                _ => return illegal,
            };
            d.rs1 = rs1(word);
            d.rs2 = rs2(word);
            d.imm = imm_s(word);
        }
        0x13 => {
            d.rd = rd(word);
            d.rs1 = rs1(word);
            match funct3(word) {
                0b000 => {
                    d.op = Op::Addi;
                    d.imm = imm_i(word);
                }
                0b010 => {
                    d.op = Op::Slti;
                    d.imm = imm_i(word);
                }
                0b011 => {
                    d.op = Op::Sltiu;
                    d.imm = imm_i(word);
                }
                0b100 => {
                    d.op = Op::Xori;
                    d.imm = imm_i(word);
                }
                0b110 => {
                    d.op = Op::Ori;
                    d.imm = imm_i(word);
                }
                0b111 => {
                    d.op = Op::Andi;
                    d.imm = imm_i(word);
                }
                0b001 => {
                    if funct7(word) != 0 {
                        return illegal;
                    }
                    d.op = Op::Slli;
                    d.imm = rs2(word) as i32;
                }
                0b101 => {
                    d.op = match funct7(word) {
                        0x00 => Op::Srli,
                        0x20 => Op::Srai,
                        _ => return illegal,
                    };
                    d.imm = rs2(word) as i32;
                }
                _ => unreachable!(),
            }
        }
        0x33 => {
            d.rd = rd(word);
            d.rs1 = rs1(word);
            d.rs2 = rs2(word);
            d.op = match (funct3(word), funct7(word)) {
                (0b000, 0x00) => Op::Add,
                (0b000, 0x20) => Op::Sub,
                (0b001, 0x00) => Op::Sll,
                (0b010, 0x00) => Op::Slt,
                (0b011, 0x00) => Op::Sltu,
                (0b100, 0x00) => Op::Xor,
                (0b101, 0x00) => Op::Srl,
                (0b101, 0x20) => Op::Sra,
                (0b110, 0x00) => Op::Or,
                (0b111, 0x00) => Op::And,
                _ => return illegal,
            };
        }
        0x0f => {
            if funct3(word) != 0 {
                return illegal;
            }
            d.op = Op::Fence;
        }
        0x73 => {
            d.op = match word {
                0x0000_0073 => Op::Ecall,
                0x0010_0073 => Op::Ebreak,
                _ => return illegal,
            };
        }
        _ => return illegal,
    }
    Ok(d)
}

impl fmt::Display for DecodedInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use InstrClass::*;
        let m = self.op.mnemonic();
        match self.op.class() {
            UpperImmediate => write!(f, "{} x{},{:#x}", m, self.rd, (self.imm as u32) >> 12),
            Jump => match self.op {
                Op::Jal => write!(f, "{} x{},{}", m, self.rd, self.imm),
                _ => write!(f, "{} x{},x{},{}", m, self.rd, self.rs1, self.imm),
            },
            Branch => write!(f, "{} x{},x{},{}", m, self.rs1, self.rs2, self.imm),
            Load => write!(f, "{} x{},{}(x{})", m, self.rd, self.imm, self.rs1),
            Store => write!(f, "{} x{},{}(x{})", m, self.rs2, self.imm, self.rs1),
            AluImmediate => write!(f, "{} x{},x{},{}", m, self.rd, self.rs1, self.imm),
            AluRegister => write!(f, "{} x{},x{},x{}", m, self.rd, self.rs1, self.rs2),
            System => write!(f, "{m}"),
        }
    }
}
