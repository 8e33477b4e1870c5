//! Extended-precision (256-bit mantissa, about 77 decimal digits) evaluation
//! of the quantities the double-precision code computes. Used as an
//! independent oracle; enabled in the CLI with `ODDGON_PRECISION=extended`.

use astro_float::{BigFloat, Consts, RoundingMode};

use crate::veech::PointFamily;

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

/// Whether `ODDGON_PRECISION=extended` is set.
pub fn extended_requested() -> bool {
    std::env::var("ODDGON_PRECISION").map(|v| v.eq_ignore_ascii_case("extended")).unwrap_or(false)
}

pub struct Extended {
    cc: Consts,
}

impl Default for Extended {
    fn default() -> Self {
        Self::new()
    }
}

impl Extended {
    pub fn new() -> Self {
        Extended { cc: Consts::new().expect("constant cache") }
    }

    fn int(&self, v: i64) -> BigFloat {
        BigFloat::from_i64(v, P)
    }

    /// `num·π/den`.
    fn angle(&mut self, num: i64, den: i64) -> BigFloat {
        self.cc.pi(P, RM).mul(&self.int(num), P, RM).div(&self.int(den), P, RM)
    }

    fn cos(&mut self, x: &BigFloat) -> BigFloat {
        x.cos(P, RM, &mut self.cc)
    }

    fn sin(&mut self, x: &BigFloat) -> BigFloat {
        x.sin(P, RM, &mut self.cc)
    }

    fn to_f64(x: &BigFloat) -> f64 {
        x.to_string().parse().expect("decimal rendering of a finite value")
    }

    /// `2cot(π/n)`.
    pub fn shear_modulus(&mut self, n: usize) -> f64 {
        let a = self.angle(1, n as i64);
        let c = self.cos(&a).div(&self.sin(&a), P, RM);
        Self::to_f64(&c.mul(&self.int(2), P, RM))
    }

    /// Both sides of the telescoping identity at `θ = num·π/den`.
    pub fn telescoping(&mut self, num: i64, den: i64, k: usize) -> (f64, f64) {
        let t = self.angle(num, den);
        let half = t.div(&self.int(2), P, RM);
        let kt = t.mul(&self.int(k as i64), P, RM);
        let lhs = self.cos(&half).div(&self.sin(&half), P, RM).mul(&self.sin(&kt), P, RM);
        let mut rhs = self.int(1).add(&self.cos(&kt), P, RM);
        for i in 1..k {
            let c = self.cos(&t.mul(&self.int(i as i64), P, RM));
            rhs = rhs.add(&c.mul(&self.int(2), P, RM), P, RM);
        }
        (Self::to_f64(&lhs), Self::to_f64(&rhs))
    }

    /// Both sides of the summed identity at `α = num·π/den`.
    pub fn identity_sum(&mut self, num: i64, den: i64, k: usize) -> (f64, f64) {
        let a = self.angle(num, den);
        let half = a.div(&self.int(2), P, RM);
        let cot = self.cos(&half).div(&self.sin(&half), P, RM);
        let mut lhs = self.int(0);
        let mut rhs = self.int(k as i64);
        for i in 1..=k {
            let ia = a.mul(&self.int(i as i64), P, RM);
            lhs = lhs.add(&cot.mul(&self.sin(&ia), P, RM), P, RM);
            let w = self.int((2 * (k - i) + 1) as i64);
            rhs = rhs.add(&w.mul(&self.cos(&ia), P, RM), P, RM);
        }
        (Self::to_f64(&lhs), Self::to_f64(&rhs))
    }

    /// Vertex `(family, k)` of the double `n`-gon, summed from unit edge
    /// vectors, and its image's x-coordinate under `M_n`.
    pub fn sheared_vertex(&mut self, family: PointFamily, n: usize, k: usize) -> ([f64; 2], f64) {
        let alpha = self.angle(2, n as i64);
        let mut sc = self.int(0);
        let mut ss = self.int(0);
        for i in 1..=k {
            let ia = alpha.mul(&self.int(i as i64), P, RM);
            sc = sc.add(&self.cos(&ia), P, RM);
            ss = ss.add(&self.sin(&ia), P, RM);
        }
        let (ca, sa) = (self.cos(&alpha), self.sin(&alpha));
        let one = self.int(1);
        let (x, y) = match family {
            PointFamily::UpperRight => (one.add(&sc, P, RM), ss),
            PointFamily::UpperLeft => (sc.neg(), ss),
            PointFamily::LowerRight => (ca.neg().add(&sc, P, RM), sa.sub(&ss, P, RM)),
            PointFamily::LowerLeft => {
                (ca.neg().sub(&one, P, RM).sub(&sc, P, RM), sa.sub(&ss, P, RM))
            }
        };
        let a = self.angle(1, n as i64);
        let mu = self.cos(&a).div(&self.sin(&a), P, RM).mul(&self.int(2), P, RM);
        let sx = x.add(&mu.mul(&y, P, RM), P, RM);
        ([Self::to_f64(&x), Self::to_f64(&y)], Self::to_f64(&sx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_constants() {
        let mut e = Extended::new();
        assert!((e.shear_modulus(5) - 2.752763840942347).abs() < 1e-15);
        let (l, r) = e.telescoping(2, 5, 2);
        assert!((l - 0.8090169943749475).abs() < 1e-15 && (l - r).abs() < 1e-15);
    }

    #[test]
    fn pentagon_vertex() {
        let mut e = Extended::new();
        let (v, x) = e.sheared_vertex(PointFamily::UpperRight, 5, 1);
        assert!((v[0] - 1.3090169943749475).abs() < 1e-15);
        assert!((x - 3.927050983124842).abs() < 1e-14);
    }
}
