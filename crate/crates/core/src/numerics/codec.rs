//! Little-endian binary encoding of tensors: rank, extents, then values.

use std::io::{Read, Write};

use super::Tensor;
use crate::error::{Error, Result};

/// Upper bound on tensor rank accepted when decoding.
const MAX_RANK: u32 = 8;

pub fn write_tensor_body<W: Write>(w: &mut W, t: &Tensor) -> std::io::Result<()> {
    w.write_all(&(t.ndim() as u32).to_le_bytes())?;
    for &e in t.shape() {
        w.write_all(&(e as u64).to_le_bytes())?;
    }
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    Error::Format(format!("truncated tensor data: {e}"))
}

pub fn read_tensor_body<R: Read>(r: &mut R) -> Result<Tensor> {
    let rank = read_u32(r)?;
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Format(format!("unsupported tensor rank {rank}")));
    }
    let mut shape = Vec::with_capacity(rank as usize);
    let mut n: usize = 1;
    for _ in 0..rank {
        let e = usize::try_from(read_u64(r)?)
            .map_err(|_| Error::Format("tensor extent overflows usize".into()))?;
        n = n
            .checked_mul(e)
            .filter(|&n| n <= (1 << 32))
            .ok_or_else(|| Error::Format("tensor too large".into()))?;
        shape.push(e);
    }
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes).map_err(truncated)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor::new(shape, data).map_err(|e| Error::Format(e.to_string()))
}
