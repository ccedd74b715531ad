//! Structured Cartesian grids on `[−R_out, R_out]³` and node-valued fields.

mod io;

use serde::{Deserialize, Serialize};

pub use io::{
    line_probe, read_field, write_field, write_line_probe, FieldHeader, ProbeRow, FIELD_MAGIC,
};

use crate::{Error, Mat3, Result, Vec3};

/// `n` nodes per axis with spacing `h = 2 r_out / (n − 1)`; node `(i, j, k)`
/// is stored at `i + n (j + n k)` (x fastest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub r_out: f64,
}

impl Grid {
    pub fn new(n: usize, r_out: f64) -> Result<Self> {
        if n < 17 || n % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid needs an odd node count ≥ 17, got {n}"
            )));
        }
        if !(r_out > 0.0) || !r_out.is_finite() {
            return Err(Error::InvalidArgument(format!("r_out must be > 0, got {r_out}")));
        }
        Ok(Grid { n, r_out })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.r_out / (self.n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.r_out + i as f64 * self.h()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(self.coord(i), self.coord(j), self.coord(k))
    }

    pub fn point_of(&self, idx: usize) -> Vec3 {
        let (i, j, k) = self.ijk(idx);
        self.point(i, j, k)
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j, k) = self.ijk(idx);
        let last = self.n - 1;
        i == 0 || j == 0 || k == 0 || i == last || j == last || k == last
    }

    /// Distance (in nodes) to the nearest boundary face.
    pub fn depth(&self, idx: usize) -> usize {
        let (i, j, k) = self.ijk(idx);
        let last = self.n - 1;
        [i, j, k, last - i, last - j, last - k].into_iter().min().unwrap()
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        x.iter().all(|c| c.abs() <= self.r_out)
    }

    /// Lower cell corner and local coordinates in `[0, 1]³`.
    pub fn locate(&self, x: &Vec3) -> Option<([usize; 3], [f64; 3])> {
        if !self.contains(x) {
            return None;
        }
        let h = self.h();
        let mut cell = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let s = (x[a] + self.r_out) / h;
            let c = (s.floor() as isize).clamp(0, self.n as isize - 2) as usize;
            cell[a] = c;
            t[a] = s - c as f64;
        }
        Some((cell, t))
    }

    /// Node nearest to `x` (clamped into the grid).
    pub fn nearest(&self, x: &Vec3) -> usize {
        let h = self.h();
        let c = |v: f64| (((v + self.r_out) / h).round() as isize).clamp(0, self.n as isize - 1) as usize;
        self.index(c(x[0]), c(x[1]), c(x[2]))
    }

    /// Trilinear weights for the 8 corners of the cell containing `x`.
    pub fn trilinear(&self, x: &Vec3) -> Option<[(usize, f64); 8]> {
        let (c, t) = self.locate(x)?;
        let mut out = [(0usize, 0.0); 8];
        for (m, slot) in out.iter_mut().enumerate() {
            let (di, dj, dk) = (m & 1, (m >> 1) & 1, (m >> 2) & 1);
            let w = (if di == 1 { t[0] } else { 1.0 - t[0] })
                * (if dj == 1 { t[1] } else { 1.0 - t[1] })
                * (if dk == 1 { t[2] } else { 1.0 - t[2] });
            *slot = (self.index(c[0] + di, c[1] + dj, c[2] + dk), w);
        }
        Some(out)
    }

    /// Cells are indexed by their lower corner `(i, j, k)`, `i, j, k < n − 1`.
    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.h();
        self.point(i, j, k) + Vec3::repeat(0.5 * h)
    }

    pub fn cell_corners(&self, i: usize, j: usize, k: usize) -> [usize; 8] {
        let mut out = [0; 8];
        for (m, slot) in out.iter_mut().enumerate() {
            *slot = self.index(i + (m & 1), j + ((m >> 1) & 1), k + ((m >> 2) & 1));
        }
        out
    }

    pub fn n_cells(&self) -> usize {
        (self.n - 1).pow(3)
    }

    pub fn cell_ijk(&self, c: usize) -> (usize, usize, usize) {
        let m = self.n - 1;
        (c % m, (c / m) % m, c / (m * m))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarGridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarGridField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarGridField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Vec3) -> f64 + Sync) -> Self {
        use rayon::prelude::*;
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.point_of(i))).collect();
        ScalarGridField { grid, values }
    }

    /// Trilinear interpolation; `None` outside the grid box.
    pub fn sample(&self, x: &Vec3) -> Option<f64> {
        let w = self.grid.trilinear(x)?;
        Some(w.iter().map(|&(i, c)| c * self.values[i]).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorGridField {
    pub grid: Grid,
    pub values: Vec<[f64; 3]>,
}

impl VectorGridField {
    pub fn zeros(grid: Grid) -> Self {
        VectorGridField { grid, values: vec![[0.0; 3]; grid.len()] }
    }

    pub fn at(&self, idx: usize) -> Vec3 {
        Vec3::from(self.values[idx])
    }

    pub fn sample(&self, x: &Vec3) -> Option<Vec3> {
        let w = self.grid.trilinear(x)?;
        Some(w.iter().fold(Vec3::zeros(), |acc, &(i, c)| acc + Vec3::from(self.values[i]) * c))
    }
}

/// Symmetric 3×3 matrix per node, stored as `[xx, xy, xz, yy, yz, zz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricGridField {
    pub grid: Grid,
    pub values: Vec<[f64; 6]>,
}

impl SymmetricGridField {
    pub fn zeros(grid: Grid) -> Self {
        SymmetricGridField { grid, values: vec![[0.0; 6]; grid.len()] }
    }

    pub fn pack(m: &Mat3) -> [f64; 6] {
        [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 1)], m[(1, 2)], m[(2, 2)]]
    }

    pub fn unpack(v: &[f64; 6]) -> Mat3 {
        Mat3::new(v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5])
    }

    pub fn at(&self, idx: usize) -> Mat3 {
        Self::unpack(&self.values[idx])
    }

    pub fn sample(&self, x: &Vec3) -> Option<Mat3> {
        let w = self.grid.trilinear(x)?;
        Some(w.iter().fold(Mat3::zeros(), |acc, &(i, c)| acc + Self::unpack(&self.values[i]) * c))
    }
}
