use crate::error::{Error, Result};

/// Piecewise cubic Hermite interpolant through `(xs[j], ys[j])` with
/// prescribed derivatives `ms[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl HermiteSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ms: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || ys.len() != xs.len() || ms.len() != xs.len() {
            return Err(Error::InvalidParams(format!(
                "spline needs at least 2 knots with matching lengths (x {}, y {}, m {})",
                xs.len(),
                ys.len(),
                ms.len()
            )));
        }
        if !xs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParams("spline knots must be strictly increasing".into()));
        }
        Ok(HermiteSpline { xs, ys, ms })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(lo..=hi).contains(&x) {
            return Err(Error::OutOfSupport { x, lo, hi });
        }
        let j = (self.xs.partition_point(|&k| k <= x).max(1) - 1).min(self.xs.len() - 2);
        let h = self.xs[j + 1] - self.xs[j];
        let t = (x - self.xs[j]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.ys[j] + h10 * h * self.ms[j] + h01 * self.ys[j + 1] + h11 * h * self.ms[j + 1])
    }
}

pub fn hermite_spline(knots_x: &[f64; 5], knots_y: &[f64; 5], tangents: &[f64; 5], x: f64) -> Result<f64> {
    HermiteSpline::new(knots_x.to_vec(), knots_y.to_vec(), tangents.to_vec())?.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng as _;

    const XS: [f64; 5] = [-2.0, -0.5, 0.3, 1.0, 4.0];

    #[test]
    fn interpolates_knots_exactly() {
        let ys = [1.0, -3.0, 0.5, 2.0, 7.0];
        let ms = [0.1, 2.0, -1.0, 0.0, 3.0];
        for j in 0..5 {
            assert_eq!(hermite_spline(&XS, &ys, &ms, XS[j]).unwrap(), ys[j]);
        }
    }

    #[test]
    fn reproduces_constants() {
        let s = HermiteSpline::new(XS.to_vec(), vec![2.5; 5], vec![0.0; 5]).unwrap();
        for i in 0..=100 {
            let x = -2.0 + 6.0 * i as f64 / 100.0;
            assert!((s.eval(x).unwrap() - 2.5).abs() < 1e-15);
        }
    }

    #[test]
    fn reproduces_linear_functions() {
        let s = HermiteSpline::new(XS.to_vec(), XS.to_vec(), vec![1.0; 5]).unwrap();
        let mut r = rng::seeded(11);
        for _ in 0..100 {
            let x = r.random_range(-2.0..=4.0);
            assert!((s.eval(x).unwrap() - x).abs() < 1e-12);
        }
    }

    #[test]
    fn c1_at_interior_knots() {
        let ys = [1.0, -3.0, 0.5, 2.0, 7.0];
        let ms = [0.1, 2.0, -1.0, 0.0, 3.0];
        let s = HermiteSpline::new(XS.to_vec(), ys.to_vec(), ms.to_vec()).unwrap();
        let h = 1e-7;
        for j in 1..4 {
            let x = XS[j];
            let left = (s.eval(x).unwrap() - s.eval(x - h).unwrap()) / h;
            let right = (s.eval(x + h).unwrap() - s.eval(x).unwrap()) / h;
            let scale = left.abs().max(right.abs()).max(1.0);
            assert!((left - ms[j]).abs() / scale < 1e-5, "knot {j}: {left}");
            assert!((right - ms[j]).abs() / scale < 1e-5, "knot {j}: {right}");
        }
    }

    #[test]
    fn out_of_support() {
        let s = HermiteSpline::new(XS.to_vec(), vec![0.0; 5], vec![0.0; 5]).unwrap();
        assert!(matches!(s.eval(4.0001), Err(Error::OutOfSupport { .. })));
        assert!(matches!(s.eval(-2.1), Err(Error::OutOfSupport { .. })));
        assert!(HermiteSpline::new(vec![0.0, 0.0], vec![0.0; 2], vec![0.0; 2]).is_err());
    }
}
