//! On-disk cache of [`FactorBlock`]s.
//!
//! One little-endian file per range:
//!
//! ```text
//! magic "SILB" | version u32 | n0 u64 | n1 u64 | P f64 | Q f64
//! Ω: u8 × len | λ: i8 × len | window_omega: u8 × len | flags: ⌈len/8⌉ bytes (LSB first)
//! ```

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sieve::{FactorBlock, PrimeWindow, Sieve};

pub const MAGIC: &[u8; 4] = b"SILB";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 + 8;

/// File name for a block; the window enters through the bit patterns of its ends.
pub fn block_file_name(range: &Range<u64>, window: &PrimeWindow) -> String {
    format!(
        "silb_{}_{}_{:016x}_{:016x}.bin",
        range.start,
        range.end,
        window.lower().to_bits(),
        window.upper().to_bits()
    )
}

pub fn encode_block(block: &FactorBlock) -> Vec<u8> {
    let len = block.len();
    let mut out = Vec::with_capacity(HEADER_LEN + 3 * len + len.div_ceil(8));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&block.start.to_le_bytes());
    out.extend_from_slice(&block.end.to_le_bytes());
    out.extend_from_slice(&block.window.lower().to_le_bytes());
    out.extend_from_slice(&block.window.upper().to_le_bytes());
    out.extend_from_slice(&block.big_omega);
    out.extend(block.lambda.iter().map(|&l| l as u8));
    out.extend_from_slice(&block.window_omega);
    let mut packed = vec![0u8; len.div_ceil(8)];
    for (i, &f) in block.window_square_flag.iter().enumerate() {
        if f {
            packed[i / 8] |= 1 << (i % 8);
        }
    }
    out.extend_from_slice(&packed);
    out
}

pub fn decode_block(bytes: &[u8], path: &Path) -> Result<FactorBlock> {
    let bad = |reason: &str| Error::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let (start, end) = (u64_at(8), u64_at(16));
    if end < start {
        return Err(bad("n1 < n0"));
    }
    let window = PrimeWindow::new(f64_at(24), f64_at(32)).map_err(|e| bad(&e.to_string()))?;
    let len = usize::try_from(end - start).map_err(|_| bad("range too long"))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 3 * len + len.div_ceil(8) {
        return Err(bad("payload length does not match header"));
    }
    let big_omega = body[..len].to_vec();
    let lambda = body[len..2 * len].iter().map(|&b| b as i8).collect();
    let window_omega = body[2 * len..3 * len].to_vec();
    let packed = &body[3 * len..];
    let window_square_flag = (0..len).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect();
    Ok(FactorBlock {
        start,
        end,
        window,
        big_omega,
        lambda,
        window_omega,
        window_square_flag,
    })
}

pub fn write_block(dir: &Path, block: &FactorBlock) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(block_file_name(&block.range(), &block.window));
    let tmp = path.with_extension("tmp");
    {
        let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(&encode_block(block))
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_block(path: &Path) -> Result<FactorBlock> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_block(&bytes, path)
}

/// Sieves `range`, reusing a cached file from `cache_dir` when present and
/// writing one otherwise. `None` disables caching.
pub fn sieve_block_cached(sieve: &Sieve, range: Range<u64>, cache_dir: Option<&Path>) -> Result<FactorBlock> {
    let Some(dir) = cache_dir else {
        return sieve.sieve_block(range);
    };
    let path = dir.join(block_file_name(&range, &sieve.window()));
    if path.exists() {
        let block = read_block(&path)?;
        if block.range() == range && block.window == sieve.window() {
            return Ok(block);
        }
    }
    let block = sieve.sieve_block(range)?;
    write_block(dir, &block)?;
    Ok(block)
}
