//! Binary channel dump for cross-implementation comparison.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic   8 bytes  b"FSSCHAN1"
//! K       u64      number of MSs
//! S       u64      number of subcarriers
//! M       u64      number of antennas
//! K x f64          pathloss in dB
//! K x u8           LOS flag (0/1)
//! K*S*M x (f64 re, f64 im)   MS-major, then subcarrier, then antenna
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;

use super::ChannelRealization;
use crate::{Error, Result};

pub const DUMP_MAGIC: &[u8; 8] = b"FSSCHAN1";

pub fn write_channel_dump<W: Write>(ch: &ChannelRealization, mut out: W) -> std::io::Result<()> {
    out.write_all(DUMP_MAGIC)?;
    for dim in [ch.num_ms(), ch.num_subcarriers(), ch.num_antennas()] {
        out.write_all(&(dim as u64).to_le_bytes())?;
    }
    for pl in &ch.pathloss_db {
        out.write_all(&pl.to_le_bytes())?;
    }
    for &los in &ch.los {
        out.write_all(&[los as u8])?;
    }
    for c in ch.coefficients() {
        out.write_all(&c.re.to_le_bytes())?;
        out.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_channel_dump<R: Read>(mut input: R) -> Result<ChannelRealization> {
    let io = |e| Error::io("<channel dump>", e);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Dimension("not a channel dump (bad magic)".into()));
    }
    let k = read_u64(&mut input).map_err(io)? as usize;
    let s = read_u64(&mut input).map_err(io)? as usize;
    let m = read_u64(&mut input).map_err(io)? as usize;
    let pathloss = (0..k).map(|_| read_f64(&mut input)).collect::<std::io::Result<Vec<_>>>().map_err(io)?;
    let mut flags = vec![0u8; k];
    input.read_exact(&mut flags).map_err(io)?;
    let n = k
        .checked_mul(s)
        .and_then(|x| x.checked_mul(m))
        .ok_or_else(|| Error::Dimension("dump dimensions overflow".into()))?;
    let mut coeffs = Vec::with_capacity(n);
    for _ in 0..n {
        let re = read_f64(&mut input).map_err(io)?;
        let im = read_f64(&mut input).map_err(io)?;
        coeffs.push(Complex64::new(re, im));
    }
    ChannelRealization::from_parts(k, s, m, coeffs, pathloss, flags.into_iter().map(|f| f != 0).collect())
}
