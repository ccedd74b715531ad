//! Flat binary field dumps and axis line probes.
//!
//! Binary layout (all little-endian):
//!
//! | offset | size | content                         |
//! |--------|------|---------------------------------|
//! | 0      | 8    | magic `AFSTFLD\x01`             |
//! | 8      | 8    | `n` (u64), nodes per axis       |
//! | 16     | 8    | `r_out` (f64)                   |
//! | 24     | 4    | axis order `b"xyz\0"`           |
//! | 28     | 4    | components per node (u32)       |
//! | 32     | …    | `n³·components` f64, x fastest  |

use std::io::{Read, Write};

use super::Grid;
use crate::{Error, Result, Vec3};

pub const FIELD_MAGIC: [u8; 8] = *b"AFSTFLD\x01";
const AXIS_ORDER: [u8; 4] = *b"xyz\0";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldHeader {
    pub grid: Grid,
    pub components: usize,
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("field i/o: {e}"))
}

/// `data` holds `components` values per node, node-major.
pub fn write_field(mut w: impl Write, grid: &Grid, components: usize, data: &[f64]) -> Result<()> {
    if data.len() != grid.len() * components {
        return Err(Error::InvalidArgument(format!(
            "payload has {} values, expected {}",
            data.len(),
            grid.len() * components
        )));
    }
    let mut buf = Vec::with_capacity(32 + 8 * data.len());
    buf.extend_from_slice(&FIELD_MAGIC);
    buf.extend_from_slice(&(grid.n as u64).to_le_bytes());
    buf.extend_from_slice(&grid.r_out.to_le_bytes());
    buf.extend_from_slice(&AXIS_ORDER);
    buf.extend_from_slice(&(components as u32).to_le_bytes());
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err)
}

pub fn read_field(mut r: impl Read) -> Result<(FieldHeader, Vec<f64>)> {
    let mut head = [0u8; 32];
    r.read_exact(&mut head).map_err(io_err)?;
    if head[..8] != FIELD_MAGIC || head[24..28] != AXIS_ORDER {
        return Err(Error::InvalidArgument("not an afstab field file".into()));
    }
    let n = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let r_out = f64::from_le_bytes(head[16..24].try_into().unwrap());
    let components = u32::from_le_bytes(head[28..32].try_into().unwrap()) as usize;
    let grid = Grid::new(n, r_out)?;
    let mut payload = vec![0u8; grid.len() * components * 8];
    r.read_exact(&mut payload).map_err(io_err)?;
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((FieldHeader { grid, components }, data))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub s: f64,
    pub point: Vec3,
    pub value: f64,
}

/// Node values along the grid line parallel to `axis` through the node
/// nearest `through`.
pub fn line_probe(grid: &Grid, values: &[f64], axis: usize, through: &Vec3) -> Vec<ProbeRow> {
    let (i0, j0, k0) = grid.ijk(grid.nearest(through));
    (0..grid.n)
        .map(|t| {
            let (i, j, k) = match axis {
                0 => (t, j0, k0),
                1 => (i0, t, k0),
                _ => (i0, j0, t),
            };
            let idx = grid.index(i, j, k);
            let point = grid.point(i, j, k);
            ProbeRow { s: point[axis], point, value: values[idx] }
        })
        .collect()
}

pub fn write_line_probe(mut w: impl Write, rows: &[ProbeRow]) -> Result<()> {
    let mut out = String::from("s,x,y,z,value\n");
    for r in rows {
        out.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e}\n",
            r.s, r.point[0], r.point[1], r.point[2], r.value
        ));
    }
    w.write_all(out.as_bytes()).map_err(io_err)
}
