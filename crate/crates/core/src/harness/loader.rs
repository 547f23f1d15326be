//! Binary loading: 32-bit little-endian executables (loadable segments +
//! header entry point) or raw images at an explicit load address. The
//! input bytes are copied into mapped memory and never modified.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::harness::coverage::LayoutSegment;
use crate::sim::Simulator;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("unsupported image: {0}")]
    UnsupportedImage(String),
    #[error("segment [{base:#010x}..{:#x}) is outside loadable mapped memory", *base as u64 + *len as u64)]
    SegmentOutsideMap { base: u32, len: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadResult {
    pub entry: u32,
    pub segments: Vec<LayoutSegment>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

const ELF_MAGIC: &[u8; 4] = b"\x7fELF";
const ET_EXEC: u16 = 2;
const EM_RISCV: u16 = 243;
const PT_LOAD: u32 = 1;

fn u16_at(bytes: &[u8], offset: usize) -> Option<u16> {
    Some(u16::from_le_bytes(bytes.get(offset..offset + 2)?.try_into().ok()?))
}

fn u32_at(bytes: &[u8], offset: usize) -> Option<u32> {
    Some(u32::from_le_bytes(bytes.get(offset..offset + 4)?.try_into().ok()?))
}

/// Load an image into mapped memory. Raw images need `load_address`;
/// executable images carry their own layout and entry point.
pub fn load_binary(
    image: &[u8],
    load_address: Option<u32>,
    sim: &mut Simulator,
) -> Result<LoadResult, LoadError> {
    if image.get(..4) == Some(ELF_MAGIC) {
        if load_address.is_some() {
            return Err(LoadError::UnsupportedImage(
                "load_address is only valid for raw images".into(),
            ));
        }
        load_executable(image, sim)
    } else {
        let base = load_address.ok_or_else(|| {
            LoadError::UnsupportedImage("raw image requires a load_address".into())
        })?;
        if base % 4 != 0 {
            return Err(LoadError::UnsupportedImage(
                "raw image load_address must be 4-byte aligned".into(),
            ));
        }
        copy_segment(sim, base, image)?;
        Ok(LoadResult {
            entry: base,
            segments: vec![segment_record(base, image)],
        })
    }
}

fn segment_record(base: u32, bytes: &[u8]) -> LayoutSegment {
    LayoutSegment {
        base,
        len: bytes.len() as u32,
        digest: sha256_hex(bytes)[..16].to_string(),
    }
}

fn copy_segment(sim: &mut Simulator, base: u32, bytes: &[u8]) -> Result<(), LoadError> {
    let outside = LoadError::SegmentOutsideMap {
        base,
        len: bytes.len() as u32,
    };
    if base as u64 + bytes.len() as u64 > 1 << 32 {
        return Err(outside);
    }
    for (i, b) in bytes.iter().enumerate() {
        if !sim.bus.load_byte(base + i as u32, *b) {
            return Err(outside);
        }
    }
    Ok(())
}

fn load_executable(image: &[u8], sim: &mut Simulator) -> Result<LoadResult, LoadError> {
    let unsupported = |msg: &str| LoadError::UnsupportedImage(msg.into());
    if image.get(4) != Some(&1) {
        return Err(unsupported("not a 32-bit image"));
    }
    if image.get(5) != Some(&1) {
        return Err(unsupported("not little-endian"));
    }
    if u16_at(image, 16) != Some(ET_EXEC) {
        return Err(unsupported("not an executable image"));
    }
    if u16_at(image, 18) != Some(EM_RISCV) {
        return Err(unsupported("wrong machine type"));
    }
    let entry = u32_at(image, 24).ok_or_else(|| unsupported("truncated header"))?;
    let phoff = u32_at(image, 28).ok_or_else(|| unsupported("truncated header"))? as usize;
    let phentsize = u16_at(image, 42).ok_or_else(|| unsupported("truncated header"))? as usize;
    let phnum = u16_at(image, 44).ok_or_else(|| unsupported("truncated header"))? as usize;
    if phentsize < 32 {
        return Err(unsupported("bad program header size"));
    }

    let mut segments = Vec::new();
    for i in 0..phnum {
        let ph = phoff + i * phentsize;
        let p_type = u32_at(image, ph).ok_or_else(|| unsupported("truncated program header"))?;
        if p_type != PT_LOAD {
            continue;
        }
        let p_offset = u32_at(image, ph + 4).unwrap_or(0) as usize;
        let p_paddr = u32_at(image, ph + 12).unwrap_or(0);
        let p_filesz = u32_at(image, ph + 16).unwrap_or(0) as usize;
        let p_memsz = u32_at(image, ph + 20).unwrap_or(0) as usize;
        if p_memsz == 0 {
            continue;
        }
        if p_filesz > p_memsz {
            return Err(unsupported("segment file size exceeds memory size"));
        }
        let data = image
            .get(p_offset..p_offset + p_filesz)
            .ok_or_else(|| unsupported("segment data outside the image"))?;
        // File bytes then zero fill up to memsz.
        let mut bytes = data.to_vec();
        bytes.resize(p_memsz, 0);
        copy_segment(sim, p_paddr, &bytes)?;
        segments.push(segment_record(p_paddr, &bytes));
    }
    if segments.is_empty() {
        return Err(unsupported("no loadable segments"));
    }
    Ok(LoadResult { entry, segments })
}

/// Build a minimal 32-bit little-endian executable wrapping the given
/// (address, bytes) segments. The inverse of [`load_executable`]; used by
/// fixtures and tests to produce loader inputs.
pub fn build_executable(entry: u32, segments: &[(u32, Vec<u8>)]) -> Vec<u8> {
    const EHSIZE: usize = 52;
    const PHENTSIZE: usize = 32;
    let phnum = segments.len();
    let mut image = Vec::new();
    image.extend_from_slice(ELF_MAGIC);
    image.extend_from_slice(&[1, 1, 1, 0]); // class, data, version, osabi
    image.extend_from_slice(&[0; 8]);
    image.extend_from_slice(&ET_EXEC.to_le_bytes());
    image.extend_from_slice(&EM_RISCV.to_le_bytes());
    image.extend_from_slice(&1u32.to_le_bytes()); // e_version
    image.extend_from_slice(&entry.to_le_bytes());
    image.extend_from_slice(&(EHSIZE as u32).to_le_bytes()); // e_phoff
    image.extend_from_slice(&0u32.to_le_bytes()); // e_shoff
    image.extend_from_slice(&0u32.to_le_bytes()); // e_flags
    image.extend_from_slice(&(EHSIZE as u16).to_le_bytes());
    image.extend_from_slice(&(PHENTSIZE as u16).to_le_bytes());
    image.extend_from_slice(&(phnum as u16).to_le_bytes());
    image.extend_from_slice(&[0; 6]); // shentsize, shnum, shstrndx

    let data_start = EHSIZE + phnum * PHENTSIZE;
    let mut offset = data_start;
    for (addr, bytes) in segments {
        image.extend_from_slice(&PT_LOAD.to_le_bytes());
        image.extend_from_slice(&(offset as u32).to_le_bytes());
        image.extend_from_slice(&addr.to_le_bytes()); // p_vaddr
        image.extend_from_slice(&addr.to_le_bytes()); // p_paddr
        image.extend_from_slice(&(bytes.len() as u32).to_le_bytes()); // p_filesz
        image.extend_from_slice(&(bytes.len() as u32).to_le_bytes()); // p_memsz
        image.extend_from_slice(&5u32.to_le_bytes()); // p_flags r-x
        image.extend_from_slice(&4u32.to_le_bytes()); // p_align
        offset += bytes.len();
    }
    debug_assert_eq!(image.len(), data_start);
    for (_, bytes) in segments {
        image.extend_from_slice(bytes);
    }
    image
}
