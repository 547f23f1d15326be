//! Structural coverage collected non-intrusively from the interpreter:
//! executed instruction addresses and conditional-branch outcomes.
//!
//! Reports from runs of the same binary layout can be merged (set
//! union); the layout line pins base, length and content digest of each
//! loaded segment so that reports from different binaries are rejected.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LayoutSegment {
    pub base: u32,
    pub len: u32,
    /// Hex digest prefix of the loaded bytes.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageReport {
    pub layout: BTreeSet<LayoutSegment>,
    pub executed: BTreeSet<u32>,
    /// branch pc -> (taken seen, not-taken seen)
    pub branches: BTreeMap<u32, (bool, bool)>,
}

impl CoverageReport {
    pub fn is_empty(&self) -> bool {
        self.layout.is_empty() && self.executed.is_empty() && self.branches.is_empty()
    }

    pub fn record_exec(&mut self, pc: u32) {
        self.executed.insert(pc);
    }

    pub fn record_branch(&mut self, pc: u32, taken: bool) {
        let entry = self.branches.entry(pc).or_insert((false, false));
        if taken {
            entry.0 = true;
        } else {
            entry.1 = true;
        }
    }

    /// Loaded instruction slots (4-byte words across all segments).
    pub fn total_words(&self) -> u64 {
        self.layout.iter().map(|s| (s.len as u64).div_ceil(4)).sum()
    }

    /// Executed-address coverage against the loaded code size, in percent
    /// with two fixed decimals.
    pub fn instruction_pct(&self) -> f64 {
        let total = self.total_words();
        if total == 0 {
            return 0.0;
        }
        (self.executed.len() as u64 * 10_000 / total) as f64 / 100.0
    }

    /// Covered branch outcomes over 2x the discovered branches.
    pub fn branch_outcome_pct(&self) -> f64 {
        if self.branches.is_empty() {
            return 100.0;
        }
        let covered: u64 = self
            .branches
            .values()
            .map(|(t, n)| *t as u64 + *n as u64)
            .sum();
        (covered * 10_000 / (2 * self.branches.len() as u64)) as f64 / 100.0
    }

    pub fn render(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for s in &self.layout {
            writeln!(out, "layout {:08x}:{:x}:{}", s.base, s.len, s.digest).unwrap();
        }
        for a in &self.executed {
            writeln!(out, "exec {a:08x}").unwrap();
        }
        for (pc, (taken, not_taken)) in &self.branches {
            writeln!(out, "branch {:08x} {} {}", pc, *taken as u8, *not_taken as u8).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CoverageError> {
        let mut report = CoverageReport::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let malformed = || CoverageError::Malformed { line: line_no };
            match tokens.next() {
                Some("layout") => {
                    let spec = tokens.next().ok_or_else(malformed)?;
                    let mut parts = spec.split(':');
                    let base = parts
                        .next()
                        .and_then(|t| u32::from_str_radix(t, 16).ok())
                        .ok_or_else(malformed)?;
                    let len = parts
                        .next()
                        .and_then(|t| u32::from_str_radix(t, 16).ok())
                        .ok_or_else(malformed)?;
                    let digest = parts.next().ok_or_else(malformed)?.to_string();
                    report.layout.insert(LayoutSegment { base, len, digest });
                }
                Some("exec") => {
                    let a = tokens
                        .next()
                        .and_then(|t| u32::from_str_radix(t, 16).ok())
                        .ok_or_else(malformed)?;
                    report.executed.insert(a);
                }
                Some("branch") => {
                    let pc = tokens
                        .next()
                        .and_then(|t| u32::from_str_radix(t, 16).ok())
                        .ok_or_else(malformed)?;
                    let taken = tokens.next() == Some("1");
                    let not_taken = tokens.next() == Some("1");
                    report.branches.insert(pc, (taken, not_taken));
                }
                _ => return Err(malformed()),
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoverageError {
    #[error("coverage reports come from different code layouts")]
    LayoutMismatch,
    #[error("malformed coverage report at line {line}")]
    Malformed { line: usize },
}

/// Union of reports sharing one code layout. The empty report is the
/// identity element; merging an empty list yields an empty report.
pub fn merge_coverage(reports: &[CoverageReport]) -> Result<CoverageReport, CoverageError> {
    let mut merged = CoverageReport::default();
    for r in reports {
        if r.is_empty() {
            continue;
        }
        if merged.is_empty() {
            merged.layout = r.layout.clone();
        } else if merged.layout != r.layout {
            return Err(CoverageError::LayoutMismatch);
        }
        merged.executed.extend(r.executed.iter().copied());
        for (pc, (taken, not_taken)) in &r.branches {
            let e = merged.branches.entry(*pc).or_insert((false, false));
            e.0 |= taken;
            e.1 |= not_taken;
        }
    }
    Ok(merged)
}
