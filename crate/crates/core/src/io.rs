//! Property-map files: the binary `ISPM` container plus PGM and CSV exports.
//!
//! `ISPM` layout, little-endian: `"ISPM" | u32 version | u32 nx | u32 ny |
//! f64 eps_r[nx·ny] | f64 sigma_e[nx·ny]`, planes in storage order.

use crate::error::{Error, Result};
use crate::scene::PropertyMaps;
use std::io::{Read, Write};
use std::path::Path;

pub const MAPS_MAGIC: [u8; 4] = *b"ISPM";
pub const MAPS_VERSION: u32 = 1;

pub fn write_maps(maps: &PropertyMaps, w: &mut impl Write) -> Result<()> {
    w.write_all(&MAPS_MAGIC)?;
    w.write_all(&MAPS_VERSION.to_le_bytes())?;
    w.write_all(&(maps.nx as u32).to_le_bytes())?;
    w.write_all(&(maps.ny as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * maps.len());
    for v in maps.eps_r.iter().chain(&maps.sigma_e) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads maps without a physical-range check, so uncertainty maps and
/// unconstrained estimates round-trip too.
pub fn read_maps(r: &mut impl Read) -> Result<PropertyMaps> {
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    if word != MAPS_MAGIC {
        return Err(Error::BadMagic { expected: MAPS_MAGIC, found: word });
    }
    let mut next = || -> Result<u32> {
        r.read_exact(&mut word)?;
        Ok(u32::from_le_bytes(word))
    };
    let version = next()?;
    if version != MAPS_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let nx = next()? as usize;
    let ny = next()? as usize;
    let n = nx * ny;
    let mut raw = vec![0u8; 16 * n];
    r.read_exact(&mut raw)?;
    let vals: Vec<f64> = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
    PropertyMaps::unconstrained(nx, ny, vals[..n].to_vec(), vals[n..].to_vec())
}

pub fn save_maps(maps: &PropertyMaps, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_maps(maps, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_maps(path: impl AsRef<Path>) -> Result<PropertyMaps> {
    read_maps(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Binary 8-bit PGM with the largest `y` on the top row.
///
/// Values are scaled linearly from `range`, or from the data's own extent.
pub fn write_pgm(values: &[f64], nx: usize, ny: usize, range: Option<[f64; 2]>, w: &mut impl Write) -> Result<()> {
    if values.len() != nx * ny {
        return Err(Error::shape("image data do not match the grid"));
    }
    let [lo, hi] = range.unwrap_or_else(|| {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        [lo, hi]
    });
    let span = if hi > lo { hi - lo } else { 1.0 };
    write!(w, "P5\n{nx} {ny}\n255\n")?;
    let mut px = Vec::with_capacity(nx * ny);
    for iy in (0..ny).rev() {
        for v in &values[iy * nx..(iy + 1) * nx] {
            px.push((((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    w.write_all(&px)?;
    Ok(())
}

/// Parses a binary PGM written by [`write_pgm`], returning `(nx, ny, pixels)` in file order.
pub fn read_pgm(r: &mut impl Read) -> Result<(usize, usize, Vec<u8>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::config("truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::config(format!("bad PGM header field `{s}`")));
    if fields[0] != "P5" {
        return Err(Error::config("not a binary PGM"));
    }
    let (nx, ny) = (parse(&fields[1])?, parse(&fields[2])?);
    let data = bytes.get(pos..pos + nx * ny).ok_or_else(|| Error::config("truncated PGM data"))?;
    Ok((nx, ny, data.to_vec()))
}

/// One CSV line per grid row `iy`, columns `ix`, in storage order.
pub fn write_grid_csv(values: &[f64], nx: usize, ny: usize, w: &mut impl Write) -> Result<()> {
    if values.len() != nx * ny {
        return Err(Error::shape("grid data do not match the grid"));
    }
    for row in values.chunks_exact(nx) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_grid_csv(r: &mut impl Read) -> Result<(usize, usize, Vec<f64>)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut values = Vec::new();
    let mut nx = 0;
    let mut ny = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::config(format!("bad CSV value `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        if ny > 0 && row.len() != nx {
            return Err(Error::shape("ragged CSV grid"));
        }
        nx = row.len();
        ny += 1;
        values.extend(row);
    }
    Ok((nx, ny, values))
}
