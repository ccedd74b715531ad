use crate::{Mat3, Vec3};

/// Value, gradient and Hessian of a scalar at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorValue {
    pub value: f64,
    pub grad: Vec3,
    pub hess: Mat3,
}

impl FactorValue {
    fn zero() -> Self {
        FactorValue {
            value: 0.0,
            grad: Vec3::zeros(),
            hess: Mat3::zeros(),
        }
    }

    fn add(&mut self, other: FactorValue) {
        self.value += other.value;
        self.grad += other.grad;
        self.hess += other.hess;
    }

    pub fn laplacian(&self) -> f64 {
        self.hess.trace()
    }
}

/// `amp · exp(−|x − center|² / width²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub amp: f64,
    pub center: Vec3,
    pub width: f64,
}

impl Gaussian {
    pub fn eval(&self, x: &Vec3) -> FactorValue {
        let y = x - self.center;
        let w2 = self.width * self.width;
        let v = self.amp * (-y.norm_squared() / w2).exp();
        FactorValue {
            value: v,
            grad: y * (-2.0 * v / w2),
            hess: (y * y.transpose()) * (4.0 * v / (w2 * w2)) - Mat3::identity() * (2.0 * v / w2),
        }
    }
}

/// Smooth compactly supported bump `amp · exp(1 − 1/(1 − s²))` for
/// `s = |x − center| / width < 1`, zero outside. Peak value is `amp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub amp: f64,
    pub center: Vec3,
    pub width: f64,
}

impl Bump {
    pub fn eval(&self, x: &Vec3) -> FactorValue {
        let y = x - self.center;
        let w2 = self.width * self.width;
        let t = y.norm_squared() / w2;
        if t >= 1.0 {
            return FactorValue::zero();
        }
        let q = 1.0 - t;
        let f = self.amp * (1.0 - 1.0 / q).exp();
        // derivatives with respect to t
        let f1 = -f / (q * q);
        let f2 = f * (2.0 * t - 1.0) / (q * q * q * q);
        FactorValue {
            value: f,
            grad: y * (2.0 * f1 / w2),
            hess: (y * y.transpose()) * (4.0 * f2 / (w2 * w2)) + Mat3::identity() * (2.0 * f1 / w2),
        }
    }

    /// Largest chart radius touched by the support.
    pub fn outer_radius(&self) -> f64 {
        self.center.norm() + self.width
    }
}

/// Conformal factor `φ = 1 + A/(2|x|) + Σ gaussians + Σ bumps`; the metric is
/// `g = φ⁴ δ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConformalFactor {
    pub monopole: f64,
    pub gaussians: Vec<Gaussian>,
    pub bumps: Vec<Bump>,
}

impl ConformalFactor {
    pub fn eval(&self, x: &Vec3) -> FactorValue {
        let mut out = FactorValue {
            value: 1.0,
            grad: Vec3::zeros(),
            hess: Mat3::zeros(),
        };
        if self.monopole != 0.0 {
            let r2 = x.norm_squared();
            let r = r2.sqrt();
            let a = 0.5 * self.monopole;
            let r3 = r2 * r;
            out.add(FactorValue {
                value: a / r,
                grad: x * (-a / r3),
                hess: ((x * x.transpose()) * (3.0 / (r2 * r3)) - Mat3::identity() / r3) * a,
            });
        }
        for g in &self.gaussians {
            out.add(g.eval(x));
        }
        for b in &self.bumps {
            out.add(b.eval(x));
        }
        out
    }

    pub fn is_trivial(&self) -> bool {
        self.monopole == 0.0
            && self.gaussians.iter().all(|g| g.amp == 0.0)
            && self.bumps.iter().all(|b| b.amp == 0.0)
    }

    /// Crude positivity margin: `1 − Σ|negative amplitudes|`.
    pub(crate) fn positivity_margin(&self) -> f64 {
        let neg: f64 = self
            .gaussians
            .iter()
            .map(|g| g.amp.min(0.0))
            .chain(self.bumps.iter().map(|b| b.amp.min(0.0)))
            .sum();
        1.0 + neg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &dyn Fn(&Vec3) -> FactorValue, x: Vec3) {
        let h = 1e-5;
        let v = f(&x);
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            let (p, m) = (f(&(x + e)), f(&(x - e)));
            let dv = (p.value - m.value) / (2.0 * h);
            assert!((dv - v.grad[k]).abs() < 1e-7 * (1.0 + v.grad[k].abs()), "grad {k}");
            let dg = (p.grad - m.grad) / (2.0 * h);
            for l in 0..3 {
                assert!(
                    (dg[l] - v.hess[(k, l)]).abs() < 1e-6 * (1.0 + v.hess[(k, l)].abs()),
                    "hess {k}{l}: {} vs {}",
                    dg[l],
                    v.hess[(k, l)]
                );
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let factor = ConformalFactor {
            monopole: 0.3,
            gaussians: vec![Gaussian {
                amp: 0.1,
                center: Vec3::new(0.5, 0.0, -0.2),
                width: 1.3,
            }],
            bumps: vec![Bump {
                amp: -0.05,
                center: Vec3::new(1.0, 1.0, 0.0),
                width: 2.0,
            }],
        };
        for x in [
            Vec3::new(1.0, 0.7, 0.3),
            Vec3::new(-2.0, 0.1, 1.5),
            Vec3::new(0.4, 1.2, -0.3),
        ] {
            fd_check(&|p| factor.eval(p), x);
        }
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let b = Bump {
            amp: 1.0,
            center: Vec3::zeros(),
            width: 1.0,
        };
        assert_eq!(b.eval(&Vec3::new(1.0, 0.0, 0.0)).value, 0.0);
        assert_eq!(b.eval(&Vec3::new(0.0, 0.0, 0.0)).value, 1.0);
        assert!(b.eval(&Vec3::new(0.999, 0.0, 0.0)).value < 1e-100);
    }

    #[test]
    fn monopole_is_harmonic() {
        let f = ConformalFactor {
            monopole: 0.4,
            ..Default::default()
        };
        let v = f.eval(&Vec3::new(1.5, -0.5, 2.0));
        assert!(v.laplacian().abs() < 1e-15);
    }
}
