//! One simulation instance: a core, its interconnect, and the runtime
//! state of the attached fault campaign.
//!
//! An instance is single-threaded and must not be shared; distinct
//! instances never touch common state and may run concurrently.

use crate::bus::{Initiator, Interconnect, Response, Transaction};
use crate::cpu::{self, CpuState, StepOutcome};
use crate::device::DeviceEvent;
use crate::fault::{
    CompiledCampaign, CompiledUpset, FaultLogRecord, InternalFaultActivation, ScheduleState,
    UpsetLocus,
};
use crate::rng::DetRng;

struct UpsetRuntime {
    desc: CompiledUpset,
    schedule: ScheduleState,
}

pub struct Simulator {
    pub cpu: CpuState,
    pub bus: Interconnect,
    pub clock_hz: u64,
    upsets: Vec<UpsetRuntime>,
    fault_log: Vec<FaultLogRecord>,
    events: Vec<DeviceEvent>,
}

impl Simulator {
    pub fn new(cpu: CpuState, bus: Interconnect, clock_hz: u64) -> Self {
        Self {
            cpu,
            bus,
            clock_hz,
            upsets: Vec::new(),
            fault_log: Vec::new(),
            events: Vec::new(),
        }
    }

    /// Install a compiled campaign: one interposer per transaction fault
    /// in campaign order, internal-fault activations on their devices,
    /// and scheduled state upsets.
    pub fn attach_campaign(&mut self, campaign: &CompiledCampaign) {
        let chain = campaign
            .interposers
            .iter()
            .cloned()
            .map(crate::fault::TxInterposer::new)
            .collect();
        self.bus.install_interposers(chain);
        for act in &campaign.activations {
            let device = self
                .bus
                .device_mut(&act.device)
                .expect("campaign compiled against this platform");
            let ok = device.activate_fault(InternalFaultActivation {
                fault_id: act.fault_id.clone(),
                name: act.name.clone(),
                params: act.params,
                schedule: act.schedule,
                rng: DetRng::for_fault(campaign.seed, &act.fault_id, act.seed),
            });
            debug_assert!(ok, "activation validated at compile time");
        }
        self.upsets = campaign
            .upsets
            .iter()
            .map(|desc| UpsetRuntime {
                desc: desc.clone(),
                schedule: ScheduleState::new(desc.schedule),
            })
            .collect();
    }

    /// Advance one instruction: due state upsets apply first, then the
    /// core steps, then devices catch up to the new cycle count.
    pub fn step(&mut self) -> StepOutcome {
        if self.cpu.halted {
            return StepOutcome::Halted;
        }
        let now = self.cpu.cycles;
        self.apply_upsets(now);
        let outcome = cpu::step(&mut self.cpu, &mut self.bus);
        self.events.clear();
        self.bus.tick_devices(self.cpu.cycles, &mut self.events);
        self.bus.drain_fault_records(&mut self.fault_log);
        outcome
    }

    fn apply_upsets(&mut self, now: u64) {
        for upset in &mut self.upsets {
            if !upset.schedule.should_fire(now) {
                continue;
            }
            let (target, pre_post) = match upset.desc.locus {
                UpsetLocus::Register(r) => (
                    format!("reg:{r}"),
                    Some(self.cpu.upset_reg(r, upset.desc.bit)),
                ),
                UpsetLocus::Memory(addr) => (
                    format!("mem:{addr:#x}"),
                    self.bus.upset_word(addr, upset.desc.bit),
                ),
            };
            if let Some((pre, post)) = pre_post {
                self.fault_log.push(FaultLogRecord {
                    cycle: now,
                    fault_id: upset.desc.fault_id.clone(),
                    target,
                    pre: pre as u64,
                    post: post as u64,
                });
            }
        }
    }

    /// Events emitted by device ticks during the most recent step.
    pub fn last_events(&self) -> &[DeviceEvent] {
        &self.events
    }

    pub fn fault_log(&self) -> &[FaultLogRecord] {
        &self.fault_log
    }

    /// Harness stimulus: a scheduled byte write routed through the bus
    /// (and therefore through the interposer chain) at the current cycle.
    pub fn stimulus_write(&mut self, address: u32, value: u8) -> Response {
        let now = self.cpu.cycles;
        self.bus
            .access(Transaction::write(address, 1, value as u32, Initiator::Harness, now))
    }

    /// Non-intrusive multi-byte observation; None if any byte is outside
    /// peekable storage.
    pub fn peek_range(&self, address: u32, len: u32) -> Option<Vec<u8>> {
        (0..len).map(|i| self.bus.peek(address + i)).collect()
    }

    /// Combined fingerprint of core and devices, for purity checks.
    pub fn fingerprint(&self) -> u64 {
        self.cpu.fingerprint() ^ self.bus.fingerprint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm;
    use crate::fault::{
        compile_campaign, parse_campaign, FaultCampaign, FaultSpec, FaultTarget, FaultType,
        Frequency, Schedule,
    };
    use crate::platform::{instantiate, parse_platform};

    const PLATFORM: &str = "\
[platform]
name = t
entry_point = 0x0
test_exit_address = 0xf0000000

[device.rom0]
kind = rom
base = 0x0
size = 0x1000

[device.ram0]
kind = ram
base = 0x80000000
size = 0x1000
";

    fn sim_with(words: &[u32]) -> Simulator {
        let config = parse_platform(PLATFORM).unwrap();
        let mut sim = instantiate(&config).unwrap();
        for (i, b) in asm::to_bytes(words).iter().enumerate() {
            assert!(sim.bus.load_byte(i as u32, *b));
        }
        sim
    }

    fn exit_loop() -> Vec<u32> {
        let mut w = asm::li32(1, 0xF000_0000).to_vec();
        w.push(asm::sw(0, 1, 0));
        w
    }

    #[test]
    fn runs_to_exit_store() {
        let mut w = asm::li32(5, 0xABCD_0123).to_vec();
        w.extend(exit_loop());
        let mut sim = sim_with(&w);
        while !sim.cpu.halted {
            sim.step();
        }
        assert_eq!(sim.cpu.reg(5), 0xABCD_0123);
        assert_eq!(sim.cpu.exit_code, Some(0));
    }

    #[test]
    fn register_upset_fires_at_cycle() {
        let config = parse_platform(PLATFORM).unwrap();
        let campaign = FaultCampaign {
            seed: 0,
            faults: vec![FaultSpec {
                id: "upset5".into(),
                target: FaultTarget::Register(5),
                fault_type: FaultType::StateUpset { bit: 0 },
                kind: None,
                include_fetch: false,
                schedule: Schedule::new(2, Some(3), Frequency::Every),
                seed: 0,
            }],
        };
        let compiled = compile_campaign(&campaign, &config).unwrap();
        let mut w = vec![asm::addi(5, 0, 0x10)];
        w.extend(std::iter::repeat_n(asm::nop(), 5));
        let mut sim = sim_with(&w);
        sim.attach_campaign(&compiled);
        for _ in 0..4 {
            sim.step();
        }
        // Bit 0 of 0x10 flipped at cycle 2.
        assert_eq!(sim.cpu.reg(5), 0x11);
        assert_eq!(sim.fault_log().len(), 1);
        assert_eq!(sim.fault_log()[0].cycle, 2);
        assert_eq!(sim.fault_log()[0].pre, 0x10);
        assert_eq!(sim.fault_log()[0].post, 0x11);
    }

    #[test]
    fn register_zero_upset_is_suppressed_but_logged() {
        let config = parse_platform(PLATFORM).unwrap();
        let campaign = parse_campaign(
            "[fault.z]\ntarget = reg:0\ntype = state_upset\nbit = 3\nstart = 0\nstop = 1\n",
        )
        .unwrap();
        let compiled = compile_campaign(&campaign, &config).unwrap();
        let mut sim = sim_with(&[asm::nop(), asm::nop()]);
        sim.attach_campaign(&compiled);
        sim.step();
        assert_eq!(sim.cpu.reg(0), 0);
        assert_eq!(sim.fault_log().len(), 1);
        assert_eq!(sim.fault_log()[0].pre, 0);
        assert_eq!(sim.fault_log()[0].post, 0);
    }

    #[test]
    fn memory_upset_flips_word_bit() {
        let config = parse_platform(PLATFORM).unwrap();
        let campaign = parse_campaign(
            "[fault.m]\ntarget = mem:0x80000000\ntype = state_upset\nbit = 31\nstart = 0\nstop = 1\n",
        )
        .unwrap();
        let compiled = compile_campaign(&campaign, &config).unwrap();
        let mut sim = sim_with(&[asm::nop(), asm::nop()]);
        sim.attach_campaign(&compiled);
        sim.step();
        assert_eq!(
            sim.peek_range(0x8000_0000, 4),
            Some(vec![0, 0, 0, 0x80])
        );
        assert_eq!(sim.fault_log()[0].post, 0x8000_0000);
    }

    #[test]
    fn stimulus_goes_through_interposers() {
        let config = parse_platform(PLATFORM).unwrap();
        let campaign = parse_campaign(
            "[fault.f]\ntarget = bus:ram0\ntype = bit_flip\nmask = 0x0f\nkind = write\n",
        )
        .unwrap();
        let compiled = compile_campaign(&campaign, &config).unwrap();
        let mut sim = sim_with(&[asm::nop()]);
        sim.attach_campaign(&compiled);
        let r = sim.stimulus_write(0x8000_0010, 0xF0);
        assert!(r.status.is_ok());
        assert_eq!(sim.bus.peek(0x8000_0010), Some(0xFF));
    }

    #[test]
    fn empty_campaign_leaves_no_trace_of_itself() {
        let config = parse_platform(PLATFORM).unwrap();
        let compiled = compile_campaign(&FaultCampaign::default(), &config).unwrap();
        let mut w = asm::li32(6, 0x1234_5678).to_vec();
        w.extend(exit_loop());

        let mut plain = sim_with(&w);
        let mut with_empty = sim_with(&w);
        with_empty.attach_campaign(&compiled);

        loop {
            let a = plain.step();
            let b = with_empty.step();
            assert_eq!(a, b);
            if plain.cpu.halted {
                break;
            }
        }
        assert!(with_empty.fault_log().is_empty());
        assert_eq!(plain.fingerprint(), with_empty.fingerprint());
    }
}
