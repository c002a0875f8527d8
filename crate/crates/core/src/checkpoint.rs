//! Binary checkpoint format for MPS states.
//!
//! Little-endian layout, version 1:
//!
//! ```text
//! magic      8 bytes   "SPTMPS\0\x01"
//! version    u32       1
//! n_sites    u64
//! max_bond   u64
//! center     i64       -1 when the state has no canonical center
//! cutoff     f64
//! meta_len   u64       length of the UTF-8 metadata that follows
//! meta       bytes     JSON (the resolved schedule and model parameters)
//! per site:  dl u64, dr u64, then dl·2·dr f64 values in (l, s, r) order
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::mps::{Mps, SiteTensor};

pub const MAGIC: [u8; 8] = *b"SPTMPS\0\x01";
pub const VERSION: u32 = 1;

pub(crate) fn write<W: Write>(mps: &Mps, meta: &str, w: &mut W) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(mps.n_sites() as u64).to_le_bytes())?;
    w.write_all(&(mps.max_bond() as u64).to_le_bytes())?;
    let center = mps.center().map_or(-1i64, |c| c as i64);
    w.write_all(&center.to_le_bytes())?;
    w.write_all(&mps.cutoff().to_le_bytes())?;
    w.write_all(&(meta.len() as u64).to_le_bytes())?;
    w.write_all(meta.as_bytes())?;
    for t in mps.tensors() {
        w.write_all(&(t.dl as u64).to_le_bytes())?;
        w.write_all(&(t.dr as u64).to_le_bytes())?;
        for x in &t.data {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Guards allocations against corrupt headers.
const MAX_DIM: u64 = 1 << 16;

pub(crate) fn read<R: Read>(r: &mut R) -> Result<(Mps, String)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Checkpoint("not an MPS checkpoint (bad magic)".into()));
    }
    let mut vb = [0u8; 4];
    r.read_exact(&mut vb)?;
    let version = u32::from_le_bytes(vb);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n = read_u64(r)?;
    let max_bond = read_u64(r)?;
    let mut cb = [0u8; 8];
    r.read_exact(&mut cb)?;
    let center = i64::from_le_bytes(cb);
    let cutoff = read_f64(r)?;
    let meta_len = read_u64(r)?;
    if n == 0 || n > MAX_DIM || max_bond > MAX_DIM || meta_len > 1 << 24 {
        return Err(Error::Checkpoint("implausible header".into()));
    }
    let mut meta = vec![0u8; meta_len as usize];
    r.read_exact(&mut meta)?;
    let meta = String::from_utf8(meta).map_err(|_| Error::Checkpoint("metadata is not UTF-8".into()))?;
    let mut tensors = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let dl = read_u64(r)?;
        let dr = read_u64(r)?;
        if dl == 0 || dr == 0 || dl > MAX_DIM || dr > MAX_DIM {
            return Err(Error::Checkpoint(format!("bad bond dimensions {dl}×{dr}")));
        }
        let (dl, dr) = (dl as usize, dr as usize);
        let mut data = Vec::with_capacity(dl * 2 * dr);
        for _ in 0..dl * 2 * dr {
            data.push(read_f64(r)?);
        }
        tensors.push(SiteTensor { dl, dr, data });
    }
    let mut mps = Mps::from_tensors(tensors, max_bond as usize)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    mps.set_cutoff(cutoff);
    if center >= 0 {
        if center as u64 >= n {
            return Err(Error::Checkpoint(format!("center {center} out of range")));
        }
        mps.set_center_unchecked(Some(center as usize));
    }
    Ok((mps, meta))
}
