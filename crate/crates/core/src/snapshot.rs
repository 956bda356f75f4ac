//! Binary field snapshots and the run checkpoint manifest.
//!
//! A snapshot is `"PFLD1\n"`, `u32 nx`, `u32 ny`, `f64 lx`, `f64 ly`,
//! `u8 bc`, then `nx * ny` little-endian `f64` values with `x` fastest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::field::{Boundary, GridSpec, ScalarField, StaggeredVectorField};

const MAGIC: &[u8; 6] = b"PFLD1\n";
const HEADER_LEN: usize = 6 + 4 + 4 + 8 + 8 + 1;

/// Raw snapshot payload: header fields plus values, without the cell-count
/// interpretation (face arrays reuse the same container).
#[derive(Debug, Clone, PartialEq)]
struct RawSnapshot {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    bc: Boundary,
    values: Vec<f64>,
}

fn encode(raw: &RawSnapshot) -> Result<Vec<u8>> {
    let nx = u32::try_from(raw.nx).map_err(|_| Error::Format(format!("nx = {} overflows u32", raw.nx)))?;
    let ny = u32::try_from(raw.ny).map_err(|_| Error::Format(format!("ny = {} overflows u32", raw.ny)))?;
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * raw.values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&nx.to_le_bytes());
    buf.extend_from_slice(&ny.to_le_bytes());
    buf.extend_from_slice(&raw.lx.to_le_bytes());
    buf.extend_from_slice(&raw.ly.to_le_bytes());
    buf.push(raw.bc.code());
    for v in &raw.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

fn decode(bytes: &[u8]) -> Result<RawSnapshot> {
    if bytes.len() < HEADER_LEN || &bytes[..6] != MAGIC {
        return Err(Error::Format("missing PFLD1 magic".into()));
    }
    let u32_at = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap()) as usize;
    let f64_at = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
    let nx = u32_at(6);
    let ny = u32_at(10);
    let lx = f64_at(14);
    let ly = f64_at(22);
    let bc = Boundary::from_code(bytes[30])
        .ok_or_else(|| Error::Format(format!("unknown boundary code {}", bytes[30])))?;
    let count = nx
        .checked_mul(ny)
        .ok_or_else(|| Error::Format(format!("dimensions {nx}x{ny} overflow")))?;
    let expected = count
        .checked_mul(8)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format(format!("dimensions {nx}x{ny} overflow")))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(RawSnapshot { nx, ny, lx, ly, bc, values })
}

fn write_raw(raw: &RawSnapshot, path: &Path) -> Result<()> {
    let bytes = encode(raw)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_raw(path: &Path) -> Result<RawSnapshot> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Writes a scalar field snapshot.
pub fn dump_field(f: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let g = f.grid();
    write_raw(
        &RawSnapshot {
            nx: g.nx,
            ny: g.ny,
            lx: g.lx,
            ly: g.ly,
            bc: g.bc,
            values: f.values().to_vec(),
        },
        path.as_ref(),
    )
}

/// Reads a scalar field snapshot written by [`dump_field`].
pub fn load_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let raw = read_raw(path.as_ref())?;
    let grid = GridSpec::new(raw.nx, raw.ny, raw.lx, raw.ly, raw.bc)
        .map_err(|e| Error::Format(e.to_string()))?;
    ScalarField::new(grid, raw.values).map_err(|e| Error::Format(e.to_string()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `path.u` and `path.v`, each carrying its face dimensions.
pub fn dump_staggered(w: &StaggeredVectorField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let g = w.grid();
    write_raw(
        &RawSnapshot {
            nx: g.nx + 1,
            ny: g.ny,
            lx: g.lx,
            ly: g.ly,
            bc: g.bc,
            values: w.u().to_vec(),
        },
        &with_suffix(path, ".u"),
    )?;
    write_raw(
        &RawSnapshot {
            nx: g.nx,
            ny: g.ny + 1,
            lx: g.lx,
            ly: g.ly,
            bc: g.bc,
            values: w.v().to_vec(),
        },
        &with_suffix(path, ".v"),
    )
}

pub fn load_staggered(path: impl AsRef<Path>) -> Result<StaggeredVectorField> {
    let path = path.as_ref();
    let u = read_raw(&with_suffix(path, ".u"))?;
    let v = read_raw(&with_suffix(path, ".v"))?;
    if u.nx < 1 || v.ny < 1 || u.nx - 1 != v.nx || u.ny + 1 != v.ny || u.lx != v.lx || u.ly != v.ly || u.bc != v.bc {
        return Err(Error::Format("inconsistent face snapshot headers".into()));
    }
    let grid = GridSpec::new(v.nx, u.ny, u.lx, u.ly, u.bc).map_err(|e| Error::Format(e.to_string()))?;
    StaggeredVectorField::from_parts(grid, u.values, v.values).map_err(|e| Error::Format(e.to_string()))
}

/// Contents of a `PRUN1` checkpoint manifest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunManifest {
    pub t: f64,
    pub eps: f64,
    pub dt: f64,
    pub step: u64,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        // {:?} prints the shortest representation that parses back exactly
        format!(
            "PRUN1\nt = {:?}\neps = {:?}\ndt = {:?}\nstep = {}\n",
            self.t, self.eps, self.dt, self.step
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("PRUN1") {
            return Err(Error::Format("missing PRUN1 header".into()));
        }
        let (mut t, mut eps, mut dt, mut step) = (None, None, None, None);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad manifest line {line:?}")))?;
            let v = v.trim();
            let num = || v.parse::<f64>().map_err(|_| Error::Format(format!("bad number {v:?}")));
            match k.trim() {
                "t" => t = Some(num()?),
                "eps" => eps = Some(num()?),
                "dt" => dt = Some(num()?),
                "step" => step = Some(v.parse::<u64>().map_err(|_| Error::Format(format!("bad step {v:?}")))?),
                other => return Err(Error::Format(format!("unknown manifest key {other:?}"))),
            }
        }
        let missing = |name: &str| Error::Format(format!("manifest lacks {name}"));
        Ok(Self {
            t: t.ok_or_else(|| missing("t"))?,
            eps: eps.ok_or_else(|| missing("eps"))?,
            dt: dt.ok_or_else(|| missing("dt"))?,
            step: step.ok_or_else(|| missing("step"))?,
        })
    }
}

/// Writes a checkpoint directory: `c`, `p`, `vel.u`, `vel.v` and `manifest`.
pub fn write_checkpoint(
    dir: impl AsRef<Path>,
    manifest: &RunManifest,
    c: &ScalarField,
    p: &ScalarField,
    v: &StaggeredVectorField,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    dump_field(c, dir.join("c"))?;
    dump_field(p, dir.join("p"))?;
    dump_staggered(v, dir.join("vel"))?;
    let mpath = dir.join("manifest");
    fs::write(&mpath, manifest.to_text()).map_err(|e| Error::io(&mpath, e))
}

pub fn read_checkpoint(
    dir: impl AsRef<Path>,
) -> Result<(RunManifest, ScalarField, ScalarField, StaggeredVectorField)> {
    let dir = dir.as_ref();
    let mpath = dir.join("manifest");
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    Ok((
        RunManifest::parse(&text)?,
        load_field(dir.join("c"))?,
        load_field(dir.join("p"))?,
        load_staggered(dir.join("vel"))?,
    ))
}
