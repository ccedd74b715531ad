use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::mass::gauss_legendre;
use crate::{MetricChart, Vec3};

/// g-length of the chart segment `a → b` by 8-point Gauss–Legendre; `None`
/// if the segment touches an excised or out-of-domain point.
pub(crate) fn segment_length(chart: &MetricChart, a: &Vec3, b: &Vec3) -> Option<f64> {
    thread_local! {
        static GL: (Vec<f64>, Vec<f64>) = gauss_legendre(8);
    }
    let e = b - a;
    GL.with(|(xs, ws)| {
        let mut acc = 0.0;
        for (x, w) in xs.iter().zip(ws) {
            let p = a + e * (0.5 * (x + 1.0));
            let g = chart.metric_only(&p).ok()?;
            acc += w * (e.transpose() * g * e)[(0, 0)].sqrt();
        }
        Some(0.5 * acc)
    })
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on distance, ties by index
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Shortest path on a local 26-connected lattice spanning `x` and `y`.
///
/// Returns the polyline and its g-length, an upper bound on `d(x, y)`
/// because every edge is an admissible curve.
pub fn graph_distance(chart: &MetricChart, x: &Vec3, y: &Vec3, per_axis: usize) -> Option<(f64, Vec<Vec3>)> {
    let m = per_axis.max(3);
    let pad = 0.25 * (y - x).norm();
    let mut lo = x.inf(y) - Vec3::repeat(pad);
    let mut hi = x.sup(y) + Vec3::repeat(pad);
    let hw = chart.domain.half_width;
    for a in 0..3 {
        lo[a] = lo[a].max(-hw);
        hi[a] = hi[a].min(hw);
    }
    let step = (hi - lo) / (m - 1) as f64;
    let lattice = m * m * m;
    let point = |i: usize| -> Vec3 {
        let (a, b, c) = (i % m, (i / m) % m, i / (m * m));
        lo + Vec3::new(a as f64 * step[0], b as f64 * step[1], c as f64 * step[2])
    };
    let (sx, sy) = (lattice, lattice + 1);
    let pos = |i: usize| if i == sx { *x } else if i == sy { *y } else { point(i) };
    // terminals connect to the lattice nodes of their enclosing cells (± one)
    let near = |p: &Vec3| -> Vec<usize> {
        let mut out = Vec::new();
        let c: Vec<(usize, usize)> = (0..3)
            .map(|a| {
                let s = if step[a] > 0.0 { (p[a] - lo[a]) / step[a] } else { 0.0 };
                let f = s.floor().max(0.0) as usize;
                (f.saturating_sub(1), (f + 2).min(m - 1))
            })
            .collect();
        for k in c[2].0..=c[2].1 {
            for j in c[1].0..=c[1].1 {
                for i in c[0].0..=c[0].1 {
                    out.push(i + m * (j + m * k));
                }
            }
        }
        out
    };
    let (nx, ny) = (near(x), near(y));
    let neighbors = |i: usize| -> Vec<usize> {
        if i == sx {
            let mut v = nx.clone();
            v.push(sy);
            return v;
        }
        if i == sy {
            let mut v = ny.clone();
            v.push(sx);
            return v;
        }
        let (a, b, c) = ((i % m) as isize, ((i / m) % m) as isize, (i / (m * m)) as isize);
        let mut v = Vec::with_capacity(28);
        for dc in -1..=1 {
            for db in -1..=1 {
                for da in -1..=1 {
                    if da == 0 && db == 0 && dc == 0 {
                        continue;
                    }
                    let (p, q, r) = (a + da, b + db, c + dc);
                    let mi = m as isize;
                    if p < 0 || q < 0 || r < 0 || p >= mi || q >= mi || r >= mi {
                        continue;
                    }
                    v.push((p + mi * (q + mi * r)) as usize);
                }
            }
        }
        if nx.contains(&i) {
            v.push(sx);
        }
        if ny.contains(&i) {
            v.push(sy);
        }
        v
    };
    let total = lattice + 2;
    let mut dist = vec![f64::INFINITY; total];
    let mut prev = vec![usize::MAX; total];
    let mut heap = BinaryHeap::new();
    dist[sx] = 0.0;
    heap.push(Entry(0.0, sx));
    while let Some(Entry(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        if i == sy {
            break;
        }
        let pi = pos(i);
        for j in neighbors(i) {
            let Some(w) = segment_length(chart, &pi, &pos(j)) else { continue };
            let nd = d + w;
            if nd < dist[j] {
                dist[j] = nd;
                prev[j] = i;
                heap.push(Entry(nd, j));
            }
        }
    }
    if !dist[sy].is_finite() {
        return None;
    }
    let mut path = vec![*y];
    let mut cur = sy;
    while prev[cur] != usize::MAX {
        cur = prev[cur];
        path.push(pos(cur));
    }
    path.reverse();
    Some((dist[sy], path))
}
