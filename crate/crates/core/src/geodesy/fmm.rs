use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::segment_length;
use crate::{stats, Error, MetricChart, Result, Vec3};

/// First-order fast-marching distance from `q` on a cube of `n³` nodes with
/// half-width `half` centered at `q`.
///
/// The eikonal speed uses the isotropic slowness `(g₁₁ g₂₂ g₃₃)^{1/6}`,
/// exact for conformally flat metrics. Nodes within two cells of `q` are
/// initialized with the g-length of the chart segment.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub center: Vec3,
    pub n: usize,
    pub half: f64,
    pub dist: Vec<f64>,
    /// `√det g` per node (0 where undefined).
    pub weight: Vec<f64>,
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl DistanceField {
    pub fn h(&self) -> f64 {
        2.0 * self.half / (self.n - 1) as f64
    }

    pub fn point(&self, idx: usize) -> Vec3 {
        let n = self.n;
        let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
        let h = self.h();
        self.center - Vec3::repeat(self.half) + Vec3::new(i as f64 * h, j as f64 * h, k as f64 * h)
    }

    pub fn build(chart: &MetricChart, q: &Vec3, half: f64, n: usize) -> Result<Self> {
        if n < 5 || n % 2 == 0 {
            return Err(Error::InvalidArgument(format!("fast marching needs odd n ≥ 5, got {n}")));
        }
        chart.check_point(q)?;
        for s in [-1.0, 1.0] {
            for a in 0..3 {
                let mut c = *q;
                c[a] += s * half;
                if !chart.contains(&c) {
                    return Err(Error::OutOfDomain { p: c });
                }
            }
        }
        let mut f = DistanceField { center: *q, n, half, dist: vec![f64::INFINITY; n * n * n], weight: vec![] };
        let h = f.h();
        let len = n * n * n;
        let (slow, weight): (Vec<f64>, Vec<f64>) = (0..len)
            .into_par_iter()
            .map(|i| match chart.metric_only(&f.point(i)) {
                Ok(g) => ((g[(0, 0)] * g[(1, 1)] * g[(2, 2)]).powf(1.0 / 6.0), g.determinant().sqrt()),
                Err(_) => (f64::INFINITY, 0.0),
            })
            .unzip();
        f.weight = weight;
        let c = n / 2;
        let mut frozen = vec![false; len];
        let mut heap = BinaryHeap::new();
        for k in c - 2..=c + 2 {
            for j in c - 2..=c + 2 {
                for i in c - 2..=c + 2 {
                    let idx = i + n * (j + n * k);
                    if let Some(d) = segment_length(chart, q, &f.point(idx)) {
                        f.dist[idx] = d;
                        heap.push(Item(d, idx));
                    }
                }
            }
        }
        let stride = [1, n, n * n];
        while let Some(Item(d, idx)) = heap.pop() {
            if frozen[idx] || d > f.dist[idx] {
                continue;
            }
            frozen[idx] = true;
            let p = [idx % n, (idx / n) % n, idx / (n * n)];
            for a in 0..3 {
                for dir in [-1isize, 1] {
                    let np = p[a] as isize + dir;
                    if np < 0 || np >= n as isize {
                        continue;
                    }
                    let nb = (idx as isize + dir * stride[a] as isize) as usize;
                    if frozen[nb] || !slow[nb].is_finite() {
                        continue;
                    }
                    let t = f.update(nb, &frozen, slow[nb] * h);
                    if t < f.dist[nb] {
                        f.dist[nb] = t;
                        heap.push(Item(t, nb));
                    }
                }
            }
        }
        Ok(f)
    }

    /// Upwind update at `idx` from frozen neighbors; second-order along an
    /// axis when the next node in the same direction is frozen and ordered.
    fn update(&self, idx: usize, frozen: &[bool], fh: f64) -> f64 {
        let n = self.n;
        let p = [idx % n, (idx / n) % n, idx / (n * n)];
        let stride = [1, n, n * n];
        // (weight, center) per axis: w (T − c)² approximates h² (∂T)²
        let mut terms: Vec<(f64, f64)> = Vec::with_capacity(3);
        for ax in 0..3 {
            let mut best: Option<(f64, f64)> = None;
            for dir in [-1isize, 1] {
                let np = p[ax] as isize + dir;
                if np < 0 || np >= n as isize {
                    continue;
                }
                let j1 = (idx as isize + dir * stride[ax] as isize) as usize;
                if !frozen[j1] {
                    continue;
                }
                let a1 = self.dist[j1];
                let np2 = np + dir;
                let mut cand = (1.0, a1);
                if np2 >= 0 && np2 < n as isize {
                    let j2 = (j1 as isize + dir * stride[ax] as isize) as usize;
                    if frozen[j2] && self.dist[j2] <= a1 {
                        cand = (2.25, (4.0 * a1 - self.dist[j2]) / 3.0);
                    }
                }
                if best.map_or(true, |b| cand.1 < b.1) {
                    best = Some(cand);
                }
            }
            if let Some(b) = best {
                terms.push(b);
            }
        }
        terms.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f2 = fh * fh;
        let mut t = f64::INFINITY;
        for k in 1..=terms.len() {
            let (mut a, mut b, mut c) = (0.0, 0.0, -f2);
            for &(w, m) in &terms[..k] {
                a += w;
                b -= 2.0 * w * m;
                c += w * m * m;
            }
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                break;
            }
            let cand = (-b + disc.sqrt()) / (2.0 * a);
            t = cand;
            if k == terms.len() || cand <= terms[k].1 {
                break;
            }
        }
        if !t.is_finite() {
            // fall back to the one-sided first-order value
            let m = terms.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            t = m + fh;
        }
        t
    }

    /// Trilinear interpolation of the distance; `None` outside the cube or
    /// next to unreached nodes.
    pub fn sample(&self, x: &Vec3) -> Option<f64> {
        let h = self.h();
        let lo = self.center - Vec3::repeat(self.half);
        let n = self.n;
        let mut c = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let s = (x[a] - lo[a]) / h;
            if s < 0.0 || s > (n - 1) as f64 {
                return None;
            }
            let f = (s.floor() as usize).min(n - 2);
            c[a] = f;
            t[a] = s - f as f64;
        }
        let mut acc = 0.0;
        for m in 0..8 {
            let (di, dj, dk) = (m & 1, (m >> 1) & 1, (m >> 2) & 1);
            let w = (if di == 1 { t[0] } else { 1.0 - t[0] })
                * (if dj == 1 { t[1] } else { 1.0 - t[1] })
                * (if dk == 1 { t[2] } else { 1.0 - t[2] });
            let d = self.dist[(c[0] + di) + n * ((c[1] + dj) + n * (c[2] + dk))];
            if w > 0.0 {
                if !d.is_finite() {
                    return None;
                }
                acc += w * d;
            }
        }
        Some(acc)
    }

    /// `|B_r(q)|_g` with a smeared indicator of width one cell.
    pub fn ball_volume(&self, r: f64) -> f64 {
        let h = self.h();
        let h3 = h * h * h;
        let terms: Vec<f64> = self
            .dist
            .iter()
            .zip(&self.weight)
            .map(|(d, w)| if d.is_finite() { ((r - d) / h + 0.5).clamp(0.0, 1.0) * w * h3 } else { 0.0 })
            .collect();
        stats::pairwise_sum(&terms)
    }
}

/// Volume of the geodesic `r`-ball in the space form of sectional
/// curvature `−κ` (`κ = 0` gives `4πr³/3`).
pub fn hyperbolic_ball_volume(r: f64, kappa: f64) -> f64 {
    let s = kappa.max(0.0).sqrt();
    let x = 2.0 * s * r;
    if x < 1e-3 {
        // π(sinh x − x)/κ^{3/2} by series
        let v0 = 4.0 * std::f64::consts::PI * r.powi(3) / 3.0;
        return v0 * (1.0 + x * x / 20.0 + x.powi(4) / 840.0);
    }
    std::f64::consts::PI * (x.sinh() - x) / (s * s * s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BishopGromovReport {
    pub center: Vec3,
    pub kappa: f64,
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    pub model_volumes: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest relative increase between consecutive ratios (≤ 0 means
    /// nonincreasing).
    pub max_relative_increase: f64,
}

/// Volume ratios `|B_r(q)| / |B_r^{−κ}|` over increasing `radii`, with a
/// fast-marching distance field of `n³` nodes.
pub fn bishop_gromov_check(chart: &MetricChart, q: &Vec3, radii: &[f64], kappa: f64, n: usize) -> Result<BishopGromovReport> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::InvalidArgument("radii must be positive and increasing".into()));
    }
    let r_max = *radii.last().unwrap();
    // the chart ball must contain the g-ball: scale by the smallest metric eigenvalue
    let mut min_stretch = f64::INFINITY;
    let probe = 1.5 * r_max;
    for k in -4..=4 {
        for j in -4..=4 {
            for i in -4..=4 {
                let x = q + Vec3::new(i as f64, j as f64, k as f64) * (probe / 4.0);
                if let Ok(g) = chart.metric_only(&x) {
                    min_stretch = min_stretch.min(g.symmetric_eigenvalues().min().sqrt());
                }
            }
        }
    }
    let half = 1.15 * r_max / min_stretch.min(1.0);
    let field = DistanceField::build(chart, q, half, n)?;
    let volumes: Vec<f64> = radii.iter().map(|&r| field.ball_volume(r)).collect();
    let model: Vec<f64> = radii.iter().map(|&r| hyperbolic_ball_volume(r, kappa)).collect();
    let ratios: Vec<f64> = volumes.iter().zip(&model).map(|(v, m)| v / m).collect();
    let inc = ratios.windows(2).map(|w| (w[1] - w[0]) / w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(BishopGromovReport {
        center: *q,
        kappa,
        radii: radii.to_vec(),
        volumes,
        model_volumes: model,
        ratios,
        max_relative_increase: if inc.is_finite() { inc } else { 0.0 },
    })
}
