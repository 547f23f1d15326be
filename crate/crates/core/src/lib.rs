//! A fully virtual test platform for bare-metal embedded software.
//!
//! The crate combines a bit-accurate interpreting RV32I instruction-set
//! simulator, transaction-level memory-mapped device models, a
//! non-intrusive schedulable fault-injection engine, and a
//! scenario-driven test harness that produces verdicts, traces and
//! coverage. Unmodified target binaries run as-is; faults alter
//! transactions, device timing or architectural state from the outside,
//! never the software under test.
//!
//! Typical flow:
//!
//! 1. [`platform::parse_platform`] a platform file, [`platform::instantiate`]
//!    a [`sim::Simulator`].
//! 2. Optionally [`fault::parse_campaign`] + [`fault::compile_campaign`] a
//!    fault campaign and attach it.
//! 3. Drive everything from a scenario with the harness, or step manually.

pub mod asm;
pub mod bus;
pub mod cpu;
pub mod decode;
pub mod device;
pub mod fault;
pub mod harness;
pub mod kv;
pub mod platform;
pub mod rng;
pub mod sim;

pub use bus::{Initiator, Interconnect, MemoryMap, Response, Transaction, TxKind};
pub use cpu::{CpuState, StepOutcome, Trap, TrapCause};
pub use decode::{decode, DecodedInstruction, InstrClass, Op};
pub use fault::{compile_campaign, parse_campaign, FaultCampaign, FaultSpec, Schedule};
pub use platform::{instantiate, parse_platform, render, PlatformConfig};
pub use sim::Simulator;
