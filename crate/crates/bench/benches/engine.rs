use criterion::{black_box, criterion_group, criterion_main, Criterion, Throughput};

use vplat_bench::{loaded_simulator, workload_program};
use vplat_core::bus::{Initiator, Transaction};
use vplat_core::cpu::StepOutcome;
use vplat_core::decode::decode;
use vplat_core::fault::{compile_campaign, parse_campaign};
use vplat_core::rng::DetRng;

fn bench_decode(c: &mut Criterion) {
    let mut rng = DetRng::new(1);
    let words: Vec<u32> = (0..4096).map(|_| rng.next_u64() as u32).collect();
    let mut group = c.benchmark_group("decode");
    group.throughput(Throughput::Elements(words.len() as u64));
    group.bench_function("random_words", |b| {
        b.iter(|| {
            let mut ok = 0u32;
            for &w in &words {
                if decode(black_box(w)).is_ok() {
                    ok += 1;
                }
            }
            black_box(ok)
        })
    });
    group.finish();
}

fn run_to_halt(program: &[u32]) -> u64 {
    let mut sim = loaded_simulator(program);
    let mut retired = 0u64;
    loop {
        match sim.step() {
            StepOutcome::Retired(_) if !sim.cpu.halted => retired += 1,
            StepOutcome::Retired(_) => return retired + 1,
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}

fn bench_execution(c: &mut Criterion) {
    let program = workload_program(1000);
    let retired = run_to_halt(&program);
    let mut group = c.benchmark_group("execute");
    group.throughput(Throughput::Elements(retired));
    group.bench_function("workload_10k_instructions", |b| {
        b.iter(|| black_box(run_to_halt(black_box(&program))))
    });
    group.finish();
}

fn bench_interposers(c: &mut Criterion) {
    let config = vplat_bench::bench_platform();
    let campaign = parse_campaign(
        "[fault.f1]\ntarget = bus:ram0\ntype = bit_flip\nmask = 0x1\nkind = write\nstart = 1000000000\n\
         [fault.f2]\ntarget = bus:ram0\ntype = extra_delay\ndelay_cycles = 0\nstart = 1000000000\n",
    )
    .unwrap();
    let compiled = compile_campaign(&campaign, &config).unwrap();

    let mut group = c.benchmark_group("route");
    group.throughput(Throughput::Elements(1));
    group.bench_function("empty_chain", |b| {
        let mut sim = loaded_simulator(&[0x13]);
        b.iter(|| {
            sim.bus.access(Transaction::write(
                vplat_bench::RAM_BASE,
                4,
                black_box(0xABCD),
                Initiator::CpuData,
                0,
            ))
        })
    });
    group.bench_function("two_dormant_interposers", |b| {
        let mut sim = loaded_simulator(&[0x13]);
        sim.attach_campaign(&compiled);
        b.iter(|| {
            sim.bus.access(Transaction::write(
                vplat_bench::RAM_BASE,
                4,
                black_box(0xABCD),
                Initiator::CpuData,
                0,
            ))
        })
    });
    group.finish();
}

criterion_group!(benches, bench_decode, bench_execution, bench_interposers);
criterion_main!(benches);
