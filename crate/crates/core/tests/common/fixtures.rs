//! Assembled fixture programs shared by the conformance and acceptance
//! suites.
//!
//! Convention: programs load at 0 in ROM, data segments land in RAM at
//! 0x8000_0000, x10 carries the exit code, and x31 is reserved for the
//! test-exit pointer in the epilogue. Branch offsets are written as
//! (target_index - branch_index) * 4; index comments mark the jump
//! targets.

use vplat_core::asm::*;

pub const ROM_BASE: u32 = 0x0000_0000;
pub const ROM_SIZE: u32 = 0x1000;
pub const RAM_BASE: u32 = 0x8000_0000;
pub const RAM_SIZE: u32 = 0x1000;
pub const TEST_EXIT: u32 = 0xF000_0000;

pub struct Fixture {
    pub name: &'static str,
    pub prog: Vec<u32>,
    /// Extra (address, bytes) segments preloaded into RAM.
    pub data: Vec<(u32, Vec<u8>)>,
    /// Terminates by trap instead of a test-exit store.
    pub expect_trap: bool,
}

fn with_exit(mut body: Vec<u32>) -> Vec<u32> {
    body.extend(li32(31, TEST_EXIT));
    body.push(sw(10, 31, 0));
    body
}

fn fixture(name: &'static str, body: Vec<u32>) -> Fixture {
    Fixture {
        name,
        prog: with_exit(body),
        data: Vec::new(),
        expect_trap: false,
    }
}

fn fixture_with_data(name: &'static str, body: Vec<u32>, data: Vec<(u32, Vec<u8>)>) -> Fixture {
    Fixture {
        data,
        ..fixture(name, body)
    }
}

fn trap_fixture(name: &'static str, prog: Vec<u32>) -> Fixture {
    Fixture {
        name,
        prog,
        data: Vec::new(),
        expect_trap: true,
    }
}

fn words(values: &[u32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn all_fixtures() -> Vec<Fixture> {
    vec![
        fixture("addi_chain", vec![
            addi(1, 0, 100),
            addi(2, 1, -50),
            addi(3, 2, 2047),
            addi(4, 3, -2048),
            add(10, 1, 2),
            add(10, 10, 3),
            add(10, 10, 4),
        ]),
        fixture("add_sub_wrap", {
            let mut b = li32(5, 0xFFFF_FFFE).to_vec();
            b.extend([
                addi(6, 0, 5),
                add(7, 5, 6),
                addi(28, 0, 20),
                addi(29, 0, 22),
                sub(30, 28, 29),
                add(10, 7, 30),
            ]);
            b
        }),
        fixture("logic_ops", {
            let mut b = li32(5, 0x00FF_FF00).to_vec();
            b.extend(li32(6, 0x0F0F_F0F0));
            b.extend([
                and(7, 5, 6),
                or(28, 5, 6),
                xor(29, 5, 6),
                andi(30, 5, 0x7F0),
                ori(26, 5, -16),
                xori(27, 5, -1),
                add(10, 7, 28),
                add(10, 10, 29),
                add(10, 10, 30),
                add(10, 10, 26),
                add(10, 10, 27),
            ]);
            b
        }),
        fixture("shifts_imm", {
            let mut b = li32(5, 0xF000_0F00).to_vec();
            b.extend([
                slli(6, 5, 4),
                srli(7, 5, 4),
                srai(28, 5, 4),
                srai(29, 5, 31),
                add(10, 6, 7),
                add(10, 10, 28),
                add(10, 10, 29),
            ]);
            b
        }),
        fixture("shifts_reg_masked", {
            let mut b = vec![
                addi(5, 0, 1),
                addi(6, 0, 33), // shift amount masks to 1
                sll(7, 5, 6),
            ];
            b.extend(li32(28, 0xF000_0F00));
            b.extend([
                addi(6, 0, 36), // masks to 4
                srl(29, 28, 6),
                sra(30, 28, 6),
                add(10, 7, 29),
                add(10, 10, 30),
            ]);
            b
        }),
        fixture("slt_matrix", vec![
            addi(5, 0, -24),
            addi(6, 0, 5),
            slt(7, 5, 6),
            sltu(28, 5, 6),
            slti(29, 5, -5),
            sltiu(30, 6, 22),
            add(10, 0, 7),
            slli(28, 28, 1),
            add(10, 10, 28),
            slli(29, 29, 2),
            add(10, 10, 29),
            slli(30, 30, 3),
            add(10, 10, 30),
        ]),
        fixture("lui_auipc", vec![
            lui(5, 0x12345),
            auipc(6, 0x1),
            srli(6, 6, 4),
            add(10, 5, 6),
        ]),
        fixture("jal_links", vec![
            jal(5, 8),       // 0 -> 2, x5 links to 4
            addi(10, 0, 13), // 1: skipped
            addi(10, 5, 38), // 2: 4 + 38 = 42
        ]),
        fixture("jalr_bit_zero", vec![
            addi(5, 0, 0x11), // 0: target 0x11 & !1 = 0x10 = index 4
            jalr(1, 5, 0),    // 1: link = 8
            addi(10, 0, 99),  // 2: skipped
            addi(10, 0, 98),  // 3: skipped
            addi(10, 1, 34),  // 4: 8 + 34 = 42
        ]),
        fixture("branch_matrix", vec![
            addi(5, 0, 5),     // 0
            addi(6, 0, -3),    // 1
            addi(10, 0, 0),    // 2
            beq(5, 5, 8),      // 3  taken -> 5
            addi(10, 10, 1),   // 4
            bne(5, 6, 8),      // 5  taken -> 7
            addi(10, 10, 2),   // 6
            blt(6, 5, 8),      // 7  taken (signed) -> 9
            addi(10, 10, 4),   // 8
            bge(5, 6, 8),      // 9  taken -> 11
            addi(10, 10, 8),   // 10
            bltu(5, 6, 8),     // 11 taken (unsigned) -> 13
            addi(10, 10, 16),  // 12
            bgeu(6, 5, 8),     // 13 taken -> 15
            addi(10, 10, 32),  // 14
            beq(5, 6, 8),      // 15 not taken
            addi(10, 10, 64),  // 16 executed
            bne(5, 5, 8),      // 17 not taken
            addi(10, 10, 128), // 18 executed -> 192
        ]),
        fixture("loop_countdown", vec![
            addi(5, 0, 10),
            addi(6, 0, 0),
            add(6, 6, 5),   // 2
            addi(5, 5, -1), // 3
            bne(5, 0, -8),  // 4 -> 2
            addi(10, 6, 0), // 55
        ]),
        fixture("fib_iter", vec![
            addi(5, 0, 0),
            addi(6, 0, 1),
            addi(7, 0, 10),
            add(28, 5, 6),   // 3
            addi(5, 6, 0),   // 4
            addi(6, 28, 0),  // 5
            addi(7, 7, -1),  // 6
            bne(7, 0, -16),  // 7 -> 3
            addi(10, 5, 0),  // fib(10) = 55
        ]),
        fixture("load_store_word", {
            let mut b = li32(5, RAM_BASE).to_vec();
            b.extend(li32(6, 0xDEAD_BEEF));
            b.extend([
                sw(6, 5, 0x10),
                lw(7, 5, 0x10),
                sw(7, 5, 0x20),
                lw(10, 5, 0x20),
            ]);
            b
        }),
        fixture("load_store_byte", {
            let mut b = li32(5, RAM_BASE).to_vec();
            b.extend([
                addi(6, 0, -112),
                sb(6, 5, 5),
                lb(7, 5, 5),
                lbu(28, 5, 5),
                sub(10, 7, 28),
            ]);
            b
        }),
        fixture("load_store_half", {
            let mut b = li32(5, RAM_BASE).to_vec();
            b.extend(li32(6, 0x8001_ABCD));
            b.extend([
                sh(6, 5, 0),
                lh(7, 5, 0),
                lhu(28, 5, 0),
                sub(10, 28, 7),
            ]);
            b
        }),
        fixture("byte_lanes", {
            let mut b = li32(5, RAM_BASE).to_vec();
            b.extend([
                addi(6, 0, 0x11),
                sb(6, 5, 0),
                addi(6, 0, 0x22),
                sb(6, 5, 1),
                addi(6, 0, 0x33),
                sb(6, 5, 2),
                addi(6, 0, 0x44),
                sb(6, 5, 3),
                lw(10, 5, 0), // 0x44332211
            ]);
            b
        }),
        fixture("store_negative", {
            let mut b = li32(5, RAM_BASE).to_vec();
            b.extend([
                addi(6, 0, -2),
                sw(6, 5, 0),
                lb(7, 5, 0),
                lbu(28, 5, 3),
                sub(10, 28, 7),
            ]);
            b
        }),
        fixture_with_data(
            "memcpy_loop",
            {
                let mut b = li32(5, RAM_BASE).to_vec();
                b.extend([
                    addi(6, 5, 0x100), // 2
                    addi(7, 0, 16),    // 3
                    lbu(28, 5, 0),     // 4
                    sb(28, 6, 0),      // 5
                    addi(5, 5, 1),     // 6
                    addi(6, 6, 1),     // 7
                    addi(7, 7, -1),    // 8
                    bne(7, 0, -20),    // 9 -> 4
                    addi(10, 0, 0),    // 10
                ]);
                b
            },
            vec![(RAM_BASE, (1..=16u8).collect())],
        ),
        fixture_with_data(
            "sum_array",
            {
                let mut b = li32(5, RAM_BASE).to_vec();
                b.extend([
                    addi(6, 0, 8),  // 2
                    addi(7, 0, 0),  // 3
                    lw(28, 5, 0),   // 4
                    add(7, 7, 28),  // 5
                    addi(5, 5, 4),  // 6
                    addi(6, 6, -1), // 7
                    bne(6, 0, -16), // 8 -> 4
                    addi(10, 7, 0), // 9
                ]);
                b
            },
            vec![(
                RAM_BASE,
                words(&[1, 2, 3, 4, 0xFFFF_FFFF, 100, 1000, 0x8000_0000]),
            )],
        ),
        fixture_with_data(
            "max_array_signed",
            {
                let mut b = li32(5, RAM_BASE).to_vec();
                b.extend([
                    addi(6, 0, 6),   // 2
                    lw(7, 5, 0),     // 3
                    lw(28, 5, 0),    // 4
                    bge(7, 28, 8),   // 5 -> 7
                    addi(7, 28, 0),  // 6
                    addi(5, 5, 4),   // 7
                    addi(6, 6, -1),  // 8
                    bne(6, 0, -20),  // 9 -> 4
                    addi(10, 7, 0),  // 10: 100
                ]);
                b
            },
            vec![(
                RAM_BASE,
                words(&[5, (-3i32) as u32, 100, (-200i32) as u32, 42, 7]),
            )],
        ),
        fixture_with_data(
            "bubble_sort4",
            {
                let mut b = li32(5, RAM_BASE).to_vec(); // 0, 1
                b.extend([
                    addi(6, 0, 3),   // 2: passes
                    addi(7, 0, 0),   // 3: j = 0        outer
                    slli(28, 7, 2),  // 4:              inner
                    add(28, 28, 5),  // 5
                    lw(29, 28, 0),   // 6
                    lw(30, 28, 4),   // 7
                    bge(30, 29, 12), // 8 -> 11
                    sw(30, 28, 0),   // 9
                    sw(29, 28, 4),   // 10
                    addi(7, 7, 1),   // 11
                    addi(26, 0, 3),  // 12
                    blt(7, 26, -36), // 13 -> 4
                    addi(6, 6, -1),  // 14
                    bne(6, 0, -48),  // 15 -> 3
                    addi(10, 0, 0),  // 16
                ]);
                b
            },
            vec![(RAM_BASE, words(&[7, 3, 9, 1]))],
        ),
        fixture("gcd_subtraction", vec![
            addi(5, 0, 48),  // 0
            addi(6, 0, 36),  // 1
            beq(6, 0, 32),   // 2 -> 10
            blt(5, 6, 12),   // 3 -> 6
            sub(5, 5, 6),    // 4
            jal(0, -8),      // 5 -> 3
            addi(7, 5, 0),   // 6
            addi(5, 6, 0),   // 7
            addi(6, 7, 0),   // 8
            jal(0, -28),     // 9 -> 2
            addi(10, 5, 0),  // 10: gcd = 12
        ]),
        fixture("mul_by_addition", vec![
            addi(5, 0, 13),
            addi(6, 0, 11),
            addi(7, 0, 0),
            add(7, 7, 5),   // 3
            addi(6, 6, -1), // 4
            bne(6, 0, -8),  // 5 -> 3
            addi(10, 7, 0), // 143
        ]),
        fixture("popcount", {
            let mut b = li32(5, 0xDEAD_BEEF).to_vec();
            b.extend([
                addi(6, 0, 0),  // 2
                addi(7, 0, 32), // 3
                andi(28, 5, 1), // 4
                add(6, 6, 28),  // 5
                srli(5, 5, 1),  // 6
                addi(7, 7, -1), // 7
                bne(7, 0, -16), // 8 -> 4
                addi(10, 6, 0), // 9: 24
            ]);
            b
        }),
        fixture("collatz27", vec![
            addi(5, 0, 27),  // 0
            addi(6, 0, 0),   // 1
            addi(26, 0, 1),  // 2  loop:
            beq(5, 26, 44),  // 3  -> 14 done
            andi(28, 5, 1),  // 4
            beq(28, 0, 20),  // 5  -> 10 even
            add(29, 5, 5),   // 6
            add(5, 29, 5),   // 7
            addi(5, 5, 1),   // 8
            jal(0, 12),      // 9  -> 12 cont
            srli(5, 5, 1),   // 10 even:
            nop(),           // 11 fall through to cont
            addi(6, 6, 1),   // 12 cont:
            jal(0, -44),     // 13 -> 2 loop
            addi(10, 6, 0),  // 14 done: 111 steps
        ]),
        fixture("xorshift32", {
            let mut b = li32(5, 0x1234_5678).to_vec();
            b.extend([
                addi(6, 0, 5),   // 2
                slli(28, 5, 13), // 3
                xor(5, 5, 28),   // 4
                srli(28, 5, 17), // 5
                xor(5, 5, 28),   // 6
                slli(28, 5, 5),  // 7
                xor(5, 5, 28),   // 8
                addi(6, 6, -1),  // 9
                bne(6, 0, -28),  // 10 -> 3
                addi(10, 5, 0),  // 11
            ]);
            b
        }),
        fixture("nested_loops", vec![
            addi(5, 0, 0),  // 0
            addi(6, 0, 4),  // 1
            addi(7, 0, 3),  // 2 outer:
            add(5, 5, 7),   // 3 inner:
            addi(7, 7, -1), // 4
            bne(7, 0, -8),  // 5 -> 3
            addi(6, 6, -1), // 6
            bne(6, 0, -20), // 7 -> 2
            addi(10, 5, 0), // 8: 24
        ]),
        fixture("call_return", vec![
            auipc(5, 0),     // 0: x5 = 0
            jalr(1, 5, 32),  // 1: call index 8, link = 8
            addi(10, 7, 0),  // 2: resume here, x7 = 99
            addi(10, 10, 0), // 3
            jal(0, 24),      // 4 -> 10 (epilogue)
            nop(),           // 5
            nop(),           // 6
            nop(),           // 7
            addi(7, 0, 99),  // 8: callee
            jalr(0, 1, 0),   // 9: return to byte 8 = index 2
        ]),
        fixture("stack_discipline", {
            let mut b = li32(2, RAM_BASE + 0x800).to_vec();
            b.extend([
                addi(5, 0, 0x11),
                addi(6, 0, 0x22),
                addi(2, 2, -8),
                sw(5, 2, 0),
                sw(6, 2, 4),
                lw(7, 2, 4),
                lw(28, 2, 0),
                addi(2, 2, 8),
                sub(10, 7, 28), // 0x11
            ]);
            b
        }),
        fixture("fence_passthrough", vec![
            addi(5, 0, 1),
            fence(),
            addi(10, 5, 41), // 42
        ]),
        fixture("x0_sink", vec![
            addi(0, 0, 100),
            lui(0, 0x12345),
            add(0, 5, 6),
            sltiu(5, 0, 1),  // x0 == 0 -> 1
            addi(10, 5, 41), // 42
        ]),
        fixture("ram_top_word", {
            let mut b = li32(5, RAM_BASE + RAM_SIZE - 4).to_vec();
            b.extend(li32(6, 0xA5A5_5A5A));
            b.extend([
                sw(6, 5, 0),
                lw(7, 5, 0),
                sb(6, 5, 3),
                lw(28, 5, 0),
                sub(10, 28, 7),
            ]);
            b
        }),
        trap_fixture("trap_ecall", vec![addi(10, 0, 1), ecall()]),
        trap_fixture("trap_ebreak", vec![ebreak()]),
        trap_fixture("trap_illegal_word", vec![addi(5, 0, 3), 0x0000_0000]),
        trap_fixture("trap_misaligned_load", {
            let mut b = li32(5, RAM_BASE).to_vec();
            b.push(lw(6, 5, 2));
            b
        }),
        trap_fixture("trap_misaligned_branch", vec![beq(0, 0, 2)]),
        trap_fixture("trap_bus_error_load", {
            let mut b = li32(5, 0x7000_0000).to_vec();
            b.push(lw(6, 5, 0));
            b
        }),
        trap_fixture("trap_rom_write", vec![addi(6, 0, 7), sw(6, 0, 0x100)]),
    ]
}

#[allow(dead_code)]
pub fn fixture_by_name(name: &str) -> Fixture {
    all_fixtures()
        .into_iter()
        .find(|f| f.name == name)
        .unwrap_or_else(|| panic!("no fixture named {name}"))
}
