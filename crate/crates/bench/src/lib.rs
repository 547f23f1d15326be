//! Workload builders shared by the engine benchmarks.

use vplat_core::asm::*;
use vplat_core::platform::{instantiate, parse_platform, PlatformConfig};
use vplat_core::sim::Simulator;

pub const TEST_EXIT: u32 = 0xF000_0000;
pub const RAM_BASE: u32 = 0x8000_0000;

pub fn bench_platform() -> PlatformConfig {
    parse_platform(
        "[platform]\n\
         name = bench\n\
         clock_hz = 10000000\n\
         entry_point = 0x0\n\
         test_exit_address = 0xf0000000\n\
         \n\
         [device.rom0]\n\
         kind = rom\n\
         base = 0x0\n\
         size = 0x4000\n\
         \n\
         [device.ram0]\n\
         kind = ram\n\
         base = 0x80000000\n\
         size = 0x4000\n",
    )
    .expect("bench platform parses")
}

/// Busy loop mixing ALU work with RAM traffic; `iterations` controls the
/// retired-instruction count (10 per iteration plus a short epilogue).
pub fn workload_program(iterations: u32) -> Vec<u32> {
    let mut p = li32(5, iterations).to_vec(); // 0,1
    p.extend(li32(6, RAM_BASE)); // 2,3
    p.extend([
        addi(7, 0, 0),   // 4
        add(7, 7, 5),    // 5  loop:
        xor(28, 7, 5),   // 6
        slli(29, 28, 3), // 7
        srli(29, 29, 1), // 8
        sw(29, 6, 0x10), // 9
        lw(30, 6, 0x10), // 10
        add(7, 7, 30),   // 11
        addi(5, 5, -1),  // 12
        bne(5, 0, -32),  // 13 -> 5
    ]);
    p.push(addi(10, 7, 0));
    p.extend(li32(31, TEST_EXIT));
    p.push(sw(10, 31, 0));
    p
}

pub fn loaded_simulator(program: &[u32]) -> Simulator {
    let config = bench_platform();
    let mut sim = instantiate(&config).expect("bench platform instantiates");
    for (i, b) in to_bytes(program).iter().enumerate() {
        assert!(sim.bus.load_byte(i as u32, *b));
    }
    sim
}
