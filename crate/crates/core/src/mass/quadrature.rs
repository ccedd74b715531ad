use crate::{Result, Vec3};

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ` times the
/// trapezoid rule in azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    pub n_theta: usize,
    pub n_phi: usize,
    nodes: Vec<(Vec3, f64)>,
}

impl SphereRule {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (ct, wt) = gauss_legendre(n_theta);
        let dphi = std::f64::consts::TAU / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).sqrt();
            for k in 0..n_phi {
                let ph = (k as f64 + 0.5) * dphi;
                nodes.push((Vec3::new(s * ph.cos(), s * ph.sin(), *c), w * dphi));
            }
        }
        SphereRule { n_theta, n_phi, nodes }
    }

    /// `∮_{S²} f dΩ`.
    pub fn integrate(&self, mut f: impl FnMut(Vec3) -> Result<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for (nu, w) in &self.nodes {
            acc += w * f(*nu)?;
        }
        Ok(acc)
    }
}

impl Default for SphereRule {
    fn default() -> Self {
        SphereRule::new(32, 64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact for degree 9
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((i - 2.0 / 9.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(32);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.cos()).sum();
        assert!((i - 2.0 * 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn sphere_area_and_moments() {
        let r = SphereRule::new(8, 16);
        let area = r.integrate(|_| Ok(1.0)).unwrap();
        assert!((area - 4.0 * std::f64::consts::PI).abs() < 1e-13);
        let z2 = r.integrate(|n| Ok(n[2] * n[2])).unwrap();
        assert!((z2 - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-13);
        let xy = r.integrate(|n| Ok(n[0] * n[0] * n[1] * n[1])).unwrap();
        assert!((xy - 4.0 * std::f64::consts::PI / 15.0).abs() < 1e-13);
    }
}
