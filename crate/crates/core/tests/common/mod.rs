//! Shared helpers for the integration suites.

#![allow(dead_code)]

pub mod fixtures;
pub mod reference;

use std::path::{Path, PathBuf};

use vplat_core::asm;
use vplat_core::cpu::StepOutcome;
use vplat_core::harness::build_executable;
use vplat_core::platform::{instantiate, parse_platform, PlatformConfig};
use vplat_core::sim::Simulator;

use fixtures::{Fixture, RAM_BASE, RAM_SIZE, ROM_BASE, ROM_SIZE, TEST_EXIT};
use reference::{RefRegion, RefSim, RefStop};

/// Platform matching the fixture memory conventions.
pub fn fixture_platform_text() -> String {
    format!(
        "[platform]\n\
         name = fixture\n\
         clock_hz = 10000000\n\
         entry_point = {ROM_BASE:#010x}\n\
         test_exit_address = {TEST_EXIT:#010x}\n\
         \n\
         [device.rom0]\n\
         kind = rom\n\
         base = {ROM_BASE:#010x}\n\
         size = {ROM_SIZE:#x}\n\
         \n\
         [device.ram0]\n\
         kind = ram\n\
         base = {RAM_BASE:#010x}\n\
         size = {RAM_SIZE:#x}\n"
    )
}

pub fn fixture_platform() -> PlatformConfig {
    parse_platform(&fixture_platform_text()).expect("fixture platform is valid")
}

/// Build a simulator with the fixture's program and data loaded.
pub fn simulator_for(fixture: &Fixture) -> Simulator {
    let config = fixture_platform();
    let mut sim = instantiate(&config).expect("fixture platform instantiates");
    for (i, b) in asm::to_bytes(&fixture.prog).iter().enumerate() {
        assert!(sim.bus.load_byte(ROM_BASE + i as u32, *b), "program fits in ROM");
    }
    for (base, bytes) in &fixture.data {
        for (i, b) in bytes.iter().enumerate() {
            assert!(sim.bus.load_byte(base + i as u32, *b), "data fits in RAM");
        }
    }
    sim
}

/// Reference simulator mirroring the fixture platform.
pub fn reference_for(fixture: &Fixture) -> RefSim {
    let mut sim = RefSim::new(
        ROM_BASE,
        TEST_EXIT,
        vec![
            RefRegion { base: ROM_BASE, size: ROM_SIZE, writable: false },
            RefRegion { base: RAM_BASE, size: RAM_SIZE, writable: true },
        ],
    );
    let prog: Vec<u8> = asm::to_bytes(&fixture.prog);
    sim.load(ROM_BASE, &prog);
    for (base, bytes) in &fixture.data {
        sim.load(*base, bytes);
    }
    sim
}

pub const FIXTURE_STEP_LIMIT: u64 = 1_000_000;

/// Final architectural state used for conformance comparison.
#[derive(Debug, PartialEq, Eq)]
pub struct FinalState {
    pub stop: String,
    pub pc: u32,
    pub regs: [u32; 32],
    pub ram: Vec<u8>,
    pub instructions: u64,
}

pub fn run_fixture_on_simulator(fixture: &Fixture) -> FinalState {
    let mut sim = simulator_for(fixture);
    let mut instructions = 0u64;
    let stop = loop {
        match sim.step() {
            StepOutcome::Retired(_) => {
                instructions += 1;
                if sim.cpu.halted {
                    break format!("exit:{}", sim.cpu.exit_code.unwrap());
                }
                if instructions > FIXTURE_STEP_LIMIT {
                    panic!("fixture {} ran away", fixture.name);
                }
            }
            StepOutcome::Trapped(t) => {
                break format!("trap:{}:{:#x}", t.cause.name(), t.value)
            }
            StepOutcome::Halted => unreachable!(),
        }
    };
    let regs = std::array::from_fn(|i| sim.cpu.reg(i as u8));
    FinalState {
        stop,
        pc: sim.cpu.pc,
        regs,
        ram: sim.peek_range(RAM_BASE, 0x200).expect("ram is peekable"),
        instructions,
    }
}

pub fn run_fixture_on_reference(fixture: &Fixture) -> FinalState {
    let mut sim = reference_for(fixture);
    let stop = match sim.run(FIXTURE_STEP_LIMIT) {
        Some(RefStop::Exited(code)) => format!("exit:{code}"),
        Some(RefStop::Trapped { cause, value }) => format!("trap:{cause}:{value:#x}"),
        None => panic!("reference run of {} did not terminate", fixture.name),
    };
    let mut ram = vec![0u8; 0x200];
    for (i, byte) in ram.iter_mut().enumerate() {
        *byte = *sim.mem.get(&(RAM_BASE + i as u32)).unwrap_or(&0);
    }
    FinalState {
        stop,
        pc: sim.pc,
        regs: sim.regs,
        ram,
        instructions: sim.instret,
    }
}

/// Materialize a fixture as on-disk scenario inputs: platform file,
/// binary (executable format when data segments exist, raw otherwise),
/// and a scenario file. Returns the scenario path.
pub fn write_fixture_scenario(
    dir: &Path,
    fixture: &Fixture,
    campaign: Option<&str>,
    seed: Option<u64>,
) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("platform.vp"), fixture_platform_text()).unwrap();

    let prog_bytes = asm::to_bytes(&fixture.prog);
    let (binary_name, load_line) = if fixture.data.is_empty() {
        std::fs::write(dir.join("prog.bin"), &prog_bytes).unwrap();
        ("prog.bin", format!("load_address = {ROM_BASE:#010x}\n"))
    } else {
        let mut segments = vec![(ROM_BASE, prog_bytes)];
        segments.extend(fixture.data.iter().cloned());
        let image = build_executable(ROM_BASE, &segments);
        std::fs::write(dir.join("prog.elf"), image).unwrap();
        ("prog.elf", String::new())
    };

    let campaign_line = match campaign {
        Some(text) => {
            std::fs::write(dir.join("faults.vf"), text).unwrap();
            "campaign = faults.vf\n".to_string()
        }
        None => String::new(),
    };
    let seed_line = seed.map(|s| format!("seed = {s}\n")).unwrap_or_default();

    let scenario = format!(
        "[scenario]\n\
         id = {}\n\
         platform = platform.vp\n\
         binary = {binary_name}\n\
         {load_line}{campaign_line}{seed_line}stop = exit\n\
         cycle_budget = {FIXTURE_STEP_LIMIT}\n",
        fixture.name
    );
    let path = dir.join(format!("{}.vt", fixture.name));
    std::fs::write(&path, scenario).unwrap();
    path
}
