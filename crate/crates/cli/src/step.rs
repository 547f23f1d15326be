//! Interactive stepping: a plain read-eval-print prompt over one
//! simulation instance. Observation commands are non-intrusive; malformed
//! input re-prompts without touching state.

use std::io::{self, BufRead, Write};
use std::path::Path;

use vplat_core::cpu::StepOutcome;
use vplat_core::harness::load_binary;
use vplat_core::platform::{instantiate, parse_platform};
use vplat_core::sim::Simulator;

const HELP: &str = "\
commands:
  step [N] | s [N]   execute N instructions (default 1)
  regs               print all registers
  reg I              print register I
  mem ADDR LEN       dump LEN bytes at ADDR (hex, non-intrusive)
  help               this text
  quit | q           leave the session
";

pub fn cmd_step(platform: &Path, binary: &Path, load_address: Option<u64>) -> u8 {
    let mut sim = match build(platform, binary, load_address) {
        Ok(sim) => sim,
        Err(e) => {
            eprintln!("vplat: {e}");
            return 3;
        }
    };
    println!(
        "loaded {} on {}; pc={:#010x}",
        binary.display(),
        platform.display(),
        sim.cpu.pc
    );

    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        print!("vplat> ");
        let _ = io::stdout().flush();
        let line = match lines.next() {
            Some(Ok(line)) => line,
            _ => return 0, // EOF ends the session
        };
        let mut words = line.split_whitespace();
        match words.next() {
            None => continue,
            Some("quit") | Some("q") => return 0,
            Some("help") => print!("{HELP}"),
            Some("step") | Some("s") => {
                let n = match words.next() {
                    None => 1u64,
                    Some(t) => match t.parse() {
                        Ok(n) => n,
                        Err(_) => {
                            println!("bad count `{t}`");
                            continue;
                        }
                    },
                };
                run_steps(&mut sim, n);
            }
            Some("regs") => {
                for row in 0..8 {
                    let cols: Vec<String> = (0..4)
                        .map(|c| {
                            let i = (row * 4 + c) as u8;
                            format!("x{i:<2}={:08x}", sim.cpu.reg(i))
                        })
                        .collect();
                    println!("{}", cols.join("  "));
                }
                println!("pc ={:08x}  cycles={}", sim.cpu.pc, sim.cpu.cycles);
            }
            Some("reg") => match words.next().and_then(|t| t.parse::<u8>().ok()) {
                Some(i) if i < 32 => println!("x{i} = {:#010x}", sim.cpu.reg(i)),
                _ => println!("usage: reg I  (I in 0..=31)"),
            },
            Some("mem") => {
                let addr = words.next().and_then(parse_num);
                let len = words.next().and_then(parse_num);
                match (addr, len) {
                    (Some(addr), Some(len)) if len > 0 && len <= 4096 => dump(&sim, addr, len),
                    _ => println!("usage: mem ADDR LEN  (LEN in 1..=4096)"),
                }
            }
            Some(other) => println!("unrecognized command `{other}` (try `help`)"),
        }
    }
}

fn build(platform: &Path, binary: &Path, load_address: Option<u64>) -> Result<Simulator, String> {
    let text = std::fs::read_to_string(platform)
        .map_err(|e| format!("{}: {e}", platform.display()))?;
    let config = parse_platform(&text).map_err(|e| format!("{}: {e}", platform.display()))?;
    let mut sim = instantiate(&config).map_err(|e| e.to_string())?;
    let image = std::fs::read(binary).map_err(|e| format!("{}: {e}", binary.display()))?;
    let load_address = match load_address {
        Some(a) => Some(u32::try_from(a).map_err(|_| "load_address exceeds 32 bits")?),
        None => None,
    };
    let loaded = load_binary(&image, load_address, &mut sim)
        .map_err(|e| format!("{}: {e}", binary.display()))?;
    sim.cpu = vplat_core::cpu::CpuState::reset(loaded.entry).map_err(|e| e.to_string())?;
    sim.cpu.test_exit = Some(config.test_exit_address);
    Ok(sim)
}

fn run_steps(sim: &mut Simulator, n: u64) {
    for i in 0..n {
        match sim.step() {
            StepOutcome::Retired(info) => {
                if sim.cpu.halted {
                    println!(
                        "{} {:08x} {}  -> exit code {}",
                        info.at_cycle,
                        info.pc,
                        info.decoded,
                        sim.cpu.exit_code.unwrap_or(0)
                    );
                    return;
                }
                if i == n - 1 {
                    println!(
                        "{} {:08x} {}  pc={:#010x} cycles={}",
                        info.at_cycle, info.pc, info.decoded, sim.cpu.pc, sim.cpu.cycles
                    );
                }
            }
            StepOutcome::Trapped(t) => {
                println!("trap: {t} at pc={:#010x}", sim.cpu.pc);
                return;
            }
            StepOutcome::Halted => {
                println!("core is halted");
                return;
            }
        }
    }
}

fn dump(sim: &Simulator, addr: u32, len: u32) {
    let mut offset = 0;
    while offset < len {
        let row: Vec<String> = (0..16.min(len - offset))
            .map(|i| match sim.bus.peek(addr + offset + i) {
                Some(b) => format!("{b:02x}"),
                None => "--".into(),
            })
            .collect();
        println!("{:08x}: {}", addr + offset, row.join(" "));
        offset += 16;
    }
}

fn parse_num(t: &str) -> Option<u32> {
    let t = t.replace('_', "");
    if let Some(hex) = t.strip_prefix("0x") {
        u32::from_str_radix(hex, 16).ok()
    } else {
        t.parse().ok()
    }
}
