//! Binary checkpoint layout, all integers and reals little-endian:
//!
//! ```text
//! magic    8 bytes  "MIXAUGNN"
//! version  u32      1
//! H W C K  4 × u32
//! count    u32      number of parameter tensors (8)
//! tensors  count × (rank u32, rank × u64 extents, f64 values)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::params::{Architecture, NetworkParams, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::numerics::codec::{read_tensor_body, read_u32, write_tensor_body};

pub const MAGIC: &[u8; 8] = b"MIXAUGNN";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(w: &mut W, params: &NetworkParams) -> std::io::Result<()> {
    let a = params.arch();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [a.height, a.width, a.channels, a.classes] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&(params.tensors().len() as u32).to_le_bytes())?;
    for t in params.tensors() {
        write_tensor_body(w, t)?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<NetworkParams> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("checkpoint too short".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("not a checkpoint file (bad magic)".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = read_u32(r)? as usize;
    }
    let arch = Architecture::new(dims[0], dims[1], dims[2], dims[3])
        .map_err(|e| Error::Format(format!("bad architecture header: {e}")))?;
    let count = read_u32(r)? as usize;
    if count != PARAM_NAMES.len() {
        return Err(Error::Format(format!(
            "checkpoint holds {count} tensors, expected {}",
            PARAM_NAMES.len()
        )));
    }
    let tensors = (0..count)
        .map(|_| read_tensor_body(r))
        .collect::<Result<Vec<_>>>()?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)
        .map_err(|e| Error::Format(e.to_string()))?
        != 0
    {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    NetworkParams::from_tensors(arch, tensors).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_checkpoint(path: &Path, params: &NetworkParams) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_checkpoint(&mut w, params)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParams> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut BufReader::new(f))
}
