//! Instruction traces: one line per retired instruction, fixed field
//! order, hexadecimal values.
//!
//! ```text
//! <cycle> <pc> <raw-word> <mnemonic[,operands]> [x<rd>=<value>] [<r|w><width>@<addr>=<value>]
//! ```
//!
//! Line-oriented rendering keeps traces diffable byte-for-byte, which is
//! what the non-intrusiveness check rests on.

use thiserror::Error;

use crate::bus::TxKind;
use crate::cpu::RetiredInfo;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub pc: u32,
    pub word: u32,
    pub disasm: String,
    pub reg_write: Option<(u8, u32)>,
    /// (kind, width, address, value)
    pub mem_op: Option<(TxKind, u8, u32, u32)>,
}

impl TraceRecord {
    pub fn from_retired(info: &RetiredInfo) -> Self {
        Self {
            cycle: info.at_cycle,
            pc: info.pc,
            word: info.word,
            disasm: info.decoded.to_string(),
            reg_write: info.reg_write,
            mem_op: info
                .mem_op
                .map(|m| (m.kind, m.width, m.address, m.value)),
        }
    }

    pub fn render(&self) -> String {
        let mut line = format!("{} {:08x} {:08x} {}", self.cycle, self.pc, self.word, self.disasm);
        if let Some((r, v)) = self.reg_write {
            line.push_str(&format!(" x{r}={v:08x}"));
        }
        if let Some((kind, width, addr, value)) = self.mem_op {
            let k = match kind {
                TxKind::Read => 'r',
                TxKind::Write => 'w',
            };
            line.push_str(&format!(" {k}{width}@{addr:08x}={value:08x}"));
        }
        line
    }
}

pub fn render_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.render());
        out.push('\n');
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed trace at line {line}: {message}")]
pub struct MalformedTrace {
    pub line: usize,
    pub message: String,
}

fn bad(line: usize, message: impl Into<String>) -> MalformedTrace {
    MalformedTrace {
        line,
        message: message.into(),
    }
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, MalformedTrace> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut tokens = raw.split_whitespace();
        let cycle = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(line_no, "missing cycle"))?;
        let pc = tokens
            .next()
            .and_then(|t| u32::from_str_radix(t, 16).ok())
            .ok_or_else(|| bad(line_no, "missing pc"))?;
        let word = tokens
            .next()
            .and_then(|t| u32::from_str_radix(t, 16).ok())
            .ok_or_else(|| bad(line_no, "missing instruction word"))?;
        let mut disasm_parts: Vec<&str> = Vec::new();
        let mut reg_write = None;
        let mut mem_op = None;
        for tok in tokens {
            if let Some(rest) = tok.strip_prefix('x') {
                if let Some((r, v)) = rest.split_once('=') {
                    let r = r.parse().map_err(|_| bad(line_no, "bad register index"))?;
                    let v = u32::from_str_radix(v, 16)
                        .map_err(|_| bad(line_no, "bad register value"))?;
                    reg_write = Some((r, v));
                    continue;
                }
            }
            if let Some(rest) = tok.strip_prefix('r').or_else(|| tok.strip_prefix('w')) {
                if rest.len() > 1 && rest.as_bytes()[1] == b'@' {
                    let kind = if tok.starts_with('r') {
                        TxKind::Read
                    } else {
                        TxKind::Write
                    };
                    let width = rest[..1]
                        .parse()
                        .map_err(|_| bad(line_no, "bad access width"))?;
                    let (addr, value) = rest[2..]
                        .split_once('=')
                        .ok_or_else(|| bad(line_no, "bad memory op"))?;
                    let addr = u32::from_str_radix(addr, 16)
                        .map_err(|_| bad(line_no, "bad memory address"))?;
                    let value = u32::from_str_radix(value, 16)
                        .map_err(|_| bad(line_no, "bad memory value"))?;
                    mem_op = Some((kind, width, addr, value));
                    continue;
                }
            }
            disasm_parts.push(tok);
        }
        if disasm_parts.is_empty() {
            return Err(bad(line_no, "missing mnemonic"));
        }
        out.push(TraceRecord {
            cycle,
            pc,
            word,
            disasm: disasm_parts.join(" "),
            reg_write,
            mem_op,
        });
    }
    Ok(out)
}

/// Outcome of comparing two traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceDiff {
    Equal,
    /// Earliest differing record: which field differs and at what cycle.
    DivergesAt { record: usize, cycle: u64, field: &'static str },
}

/// Compare two rendered traces record by record and report the first
/// divergence.
pub fn diff_traces(a: &str, b: &str) -> Result<TraceDiff, MalformedTrace> {
    let ra = parse_trace(a)?;
    let rb = parse_trace(b)?;
    for (i, (x, y)) in ra.iter().zip(rb.iter()).enumerate() {
        let field = if x.cycle != y.cycle {
            "cycle"
        } else if x.pc != y.pc {
            "pc"
        } else if x.word != y.word {
            "word"
        } else if x.disasm != y.disasm {
            "disasm"
        } else if x.reg_write != y.reg_write {
            "reg-write"
        } else if x.mem_op != y.mem_op {
            "mem-op"
        } else {
            continue;
        };
        return Ok(TraceDiff::DivergesAt {
            record: i,
            cycle: x.cycle.min(y.cycle),
            field,
        });
    }
    if ra.len() != rb.len() {
        let i = ra.len().min(rb.len());
        let cycle = ra.get(i).or_else(|| rb.get(i)).map(|r| r.cycle).unwrap_or(0);
        return Ok(TraceDiff::DivergesAt {
            record: i,
            cycle,
            field: "length",
        });
    }
    Ok(TraceDiff::Equal)
}
