//! RV32I instruction encoders for building fixture programs in Rust.
//!
//! These produce raw little-endian words suitable for loading as a raw
//! image or wrapping into an executable. Register arguments are plain
//! indices 0..=31; immediates are checked against the encodable range and
//! panic on overflow, since fixture bugs should fail loudly at build time.

fn check_reg(r: u8) {
    assert!(r < 32, "register index {r} out of range");
}

fn enc_r(opcode: u32, funct3: u32, funct7: u32, rd: u8, rs1: u8, rs2: u8) -> u32 {
    check_reg(rd);
    check_reg(rs1);
    check_reg(rs2);
    funct7 << 25 | (rs2 as u32) << 20 | (rs1 as u32) << 15 | funct3 << 12 | (rd as u32) << 7 | opcode
}

fn enc_i(opcode: u32, funct3: u32, rd: u8, rs1: u8, imm: i32) -> u32 {
    check_reg(rd);
    check_reg(rs1);
    assert!((-2048..=2047).contains(&imm), "i-immediate {imm} out of range");
    ((imm as u32) & 0xfff) << 20 | (rs1 as u32) << 15 | funct3 << 12 | (rd as u32) << 7 | opcode
}

fn enc_s(opcode: u32, funct3: u32, rs1: u8, rs2: u8, imm: i32) -> u32 {
    check_reg(rs1);
    check_reg(rs2);
    assert!((-2048..=2047).contains(&imm), "s-immediate {imm} out of range");
    let v = imm as u32;
    (v >> 5 & 0x7f) << 25
        | (rs2 as u32) << 20
        | (rs1 as u32) << 15
        | funct3 << 12
        | (v & 0x1f) << 7
        | opcode
}

fn enc_b(opcode: u32, funct3: u32, rs1: u8, rs2: u8, imm: i32) -> u32 {
    check_reg(rs1);
    check_reg(rs2);
    assert!(imm % 2 == 0, "branch offset {imm} must be even");
    assert!((-4096..=4094).contains(&imm), "branch offset {imm} out of range");
    let v = imm as u32;
    (v >> 12 & 1) << 31
        | (v >> 5 & 0x3f) << 25
        | (rs2 as u32) << 20
        | (rs1 as u32) << 15
        | funct3 << 12
        | (v >> 1 & 0xf) << 8
        | (v >> 11 & 1) << 7
        | opcode
}

fn enc_u(opcode: u32, rd: u8, imm20: u32) -> u32 {
    check_reg(rd);
    assert!(imm20 < (1 << 20), "u-immediate {imm20:#x} out of range");
    imm20 << 12 | (rd as u32) << 7 | opcode
}

fn enc_j(opcode: u32, rd: u8, imm: i32) -> u32 {
    check_reg(rd);
    assert!(imm % 2 == 0, "jump offset {imm} must be even");
    assert!((-(1 << 20)..(1 << 20)).contains(&imm), "jump offset {imm} out of range");
    let v = imm as u32;
    (v >> 20 & 1) << 31
        | (v >> 1 & 0x3ff) << 21
        | (v >> 11 & 1) << 20
        | (v >> 12 & 0xff) << 12
        | (rd as u32) << 7
        | opcode
}

pub fn lui(rd: u8, imm20: u32) -> u32 {
    enc_u(0x37, rd, imm20)
}
pub fn auipc(rd: u8, imm20: u32) -> u32 {
    enc_u(0x17, rd, imm20)
}
pub fn jal(rd: u8, offset: i32) -> u32 {
    enc_j(0x6f, rd, offset)
}
pub fn jalr(rd: u8, rs1: u8, offset: i32) -> u32 {
    enc_i(0x67, 0, rd, rs1, offset)
}

pub fn beq(rs1: u8, rs2: u8, offset: i32) -> u32 {
    enc_b(0x63, 0b000, rs1, rs2, offset)
}
pub fn bne(rs1: u8, rs2: u8, offset: i32) -> u32 {
    enc_b(0x63, 0b001, rs1, rs2, offset)
}
pub fn blt(rs1: u8, rs2: u8, offset: i32) -> u32 {
    enc_b(0x63, 0b100, rs1, rs2, offset)
}
pub fn bge(rs1: u8, rs2: u8, offset: i32) -> u32 {
    enc_b(0x63, 0b101, rs1, rs2, offset)
}
pub fn bltu(rs1: u8, rs2: u8, offset: i32) -> u32 {
    enc_b(0x63, 0b110, rs1, rs2, offset)
}
pub fn bgeu(rs1: u8, rs2: u8, offset: i32) -> u32 {
    enc_b(0x63, 0b111, rs1, rs2, offset)
}

pub fn lb(rd: u8, rs1: u8, offset: i32) -> u32 {
    enc_i(0x03, 0b000, rd, rs1, offset)
}
pub fn lh(rd: u8, rs1: u8, offset: i32) -> u32 {
    enc_i(0x03, 0b001, rd, rs1, offset)
}
pub fn lw(rd: u8, rs1: u8, offset: i32) -> u32 {
    enc_i(0x03, 0b010, rd, rs1, offset)
}
pub fn lbu(rd: u8, rs1: u8, offset: i32) -> u32 {
    enc_i(0x03, 0b100, rd, rs1, offset)
}
pub fn lhu(rd: u8, rs1: u8, offset: i32) -> u32 {
    enc_i(0x03, 0b101, rd, rs1, offset)
}

pub fn sb(rs2: u8, rs1: u8, offset: i32) -> u32 {
    enc_s(0x23, 0b000, rs1, rs2, offset)
}
pub fn sh(rs2: u8, rs1: u8, offset: i32) -> u32 {
    enc_s(0x23, 0b001, rs1, rs2, offset)
}
pub fn sw(rs2: u8, rs1: u8, offset: i32) -> u32 {
    enc_s(0x23, 0b010, rs1, rs2, offset)
}

pub fn addi(rd: u8, rs1: u8, imm: i32) -> u32 {
    enc_i(0x13, 0b000, rd, rs1, imm)
}
pub fn slti(rd: u8, rs1: u8, imm: i32) -> u32 {
    enc_i(0x13, 0b010, rd, rs1, imm)
}
pub fn sltiu(rd: u8, rs1: u8, imm: i32) -> u32 {
    enc_i(0x13, 0b011, rd, rs1, imm)
}
pub fn xori(rd: u8, rs1: u8, imm: i32) -> u32 {
    enc_i(0x13, 0b100, rd, rs1, imm)
}
pub fn ori(rd: u8, rs1: u8, imm: i32) -> u32 {
    enc_i(0x13, 0b110, rd, rs1, imm)
}
pub fn andi(rd: u8, rs1: u8, imm: i32) -> u32 {
    enc_i(0x13, 0b111, rd, rs1, imm)
}
pub fn slli(rd: u8, rs1: u8, shamt: u8) -> u32 {
    assert!(shamt < 32);
    enc_i(0x13, 0b001, rd, rs1, shamt as i32)
}
pub fn srli(rd: u8, rs1: u8, shamt: u8) -> u32 {
    assert!(shamt < 32);
    enc_i(0x13, 0b101, rd, rs1, shamt as i32)
}
pub fn srai(rd: u8, rs1: u8, shamt: u8) -> u32 {
    assert!(shamt < 32);
    enc_i(0x13, 0b101, rd, rs1, shamt as i32) | 0x4000_0000
}

pub fn add(rd: u8, rs1: u8, rs2: u8) -> u32 {
    enc_r(0x33, 0b000, 0x00, rd, rs1, rs2)
}
pub fn sub(rd: u8, rs1: u8, rs2: u8) -> u32 {
    enc_r(0x33, 0b000, 0x20, rd, rs1, rs2)
}
pub fn sll(rd: u8, rs1: u8, rs2: u8) -> u32 {
    enc_r(0x33, 0b001, 0x00, rd, rs1, rs2)
}
pub fn slt(rd: u8, rs1: u8, rs2: u8) -> u32 {
    enc_r(0x33, 0b010, 0x00, rd, rs1, rs2)
}
pub fn sltu(rd: u8, rs1: u8, rs2: u8) -> u32 {
    enc_r(0x33, 0b011, 0x00, rd, rs1, rs2)
}
pub fn xor(rd: u8, rs1: u8, rs2: u8) -> u32 {
    enc_r(0x33, 0b100, 0x00, rd, rs1, rs2)
}
pub fn srl(rd: u8, rs1: u8, rs2: u8) -> u32 {
    enc_r(0x33, 0b101, 0x00, rd, rs1, rs2)
}
pub fn sra(rd: u8, rs1: u8, rs2: u8) -> u32 {
    enc_r(0x33, 0b101, 0x20, rd, rs1, rs2)
}
pub fn or(rd: u8, rs1: u8, rs2: u8) -> u32 {
    enc_r(0x33, 0b110, 0x00, rd, rs1, rs2)
}
pub fn and(rd: u8, rs1: u8, rs2: u8) -> u32 {
    enc_r(0x33, 0b111, 0x00, rd, rs1, rs2)
}

pub fn fence() -> u32 {
    0x0000_000f
}
pub fn ecall() -> u32 {
    0x0000_0073
}
pub fn ebreak() -> u32 {
    0x0010_0073
}
pub fn nop() -> u32 {
    addi(0, 0, 0)
}

/// Two-instruction sequence loading an arbitrary 32-bit constant into `rd`.
pub fn li32(rd: u8, value: u32) -> [u32; 2] {
    let lo = (value & 0xfff) as i32;
    let lo = (lo << 20) >> 20; // sign-extend the low 12 bits
    let hi = value.wrapping_sub(lo as u32) >> 12;
    [lui(rd, hi & 0xfffff), addi(rd, rd, lo)]
}

/// Serialize a program to a little-endian byte image.
pub fn to_bytes(words: &[u32]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_le_bytes()).collect()
}
