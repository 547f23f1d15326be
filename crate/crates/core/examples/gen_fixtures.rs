//! Regenerates the raw binary images under `fixtures/`.
//!
//! Usage: `cargo run -p vplat-core --example gen_fixtures [dir]`
//! (default dir: ./fixtures)

use std::fs;
use std::path::PathBuf;

use vplat_core::asm::{self, *};

const CONSOLE_BASE: u32 = 0x6000_0000;
const EEPROM_BASE: u32 = 0x4000_0000;
const EEPROM_STATUS: i32 = 0x100;
const TEST_EXIT: u32 = 0xF000_0000;

fn with_exit(mut body: Vec<u32>) -> Vec<u32> {
    body.extend(li32(31, TEST_EXIT));
    body.push(sw(10, 31, 0));
    body
}

/// Prints a fixed message on the console, exits 0.
fn hello() -> Vec<u32> {
    let mut p = li32(5, CONSOLE_BASE).to_vec();
    for b in b"hello from the virtual platform\n" {
        p.push(addi(6, 0, *b as i32));
        p.push(sb(6, 5, 0));
    }
    p.push(addi(10, 0, 0));
    with_exit(p)
}

/// Programs one EEPROM byte and polls the busy flag before reading back.
/// Robust against any programming latency; exits 42 on verified data.
fn eeprom_poll() -> Vec<u32> {
    let mut p = li32(1, EEPROM_BASE).to_vec(); // 0,1
    p.extend([
        addi(2, 0, 0x5A),       // 2
        sb(2, 1, 0),            // 3
        lw(3, 1, EEPROM_STATUS),// 4
        bne(3, 0, -4),          // 5 -> 4
        lbu(4, 1, 0),           // 6
        bne(4, 2, 12),          // 7 -> 10
        addi(10, 0, 42),        // 8
        jal(0, 8),              // 9 -> 11
        addi(10, 0, 13),        // 10
    ]);
    with_exit(p)
}

/// Programs one EEPROM byte and waits a fixed 1 ms before reading back.
/// Correct only if programming finishes within 1 ms; a slow part breaks it.
fn eeprom_wait() -> Vec<u32> {
    let mut p = li32(1, EEPROM_BASE).to_vec(); // 0,1
    p.extend([
        addi(2, 0, 0x5A), // 2
        sb(2, 1, 0),      // 3
    ]);
    p.extend(li32(5, 5000)); // 4,5: 5000 x 2 cycles = 1 ms at 10 MHz
    p.extend([
        addi(5, 5, -1),  // 6
        bne(5, 0, -4),   // 7 -> 6
        lbu(4, 1, 0),    // 8
        bne(4, 2, 12),   // 9 -> 12
        addi(10, 0, 42), // 10
        jal(0, 8),       // 11 -> 13
        addi(10, 0, 13), // 12
    ]);
    with_exit(p)
}

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| "fixtures".into());
    fs::create_dir_all(&dir).expect("create fixtures dir");
    for (name, prog) in [
        ("hello.bin", hello()),
        ("eeprom_poll.bin", eeprom_poll()),
        ("eeprom_wait.bin", eeprom_wait()),
    ] {
        let path = dir.join(name);
        fs::write(&path, asm::to_bytes(&prog)).expect("write image");
        println!("wrote {}", path.display());
    }
}
