//! Monotone piecewise-cubic interpolation (Fritsch-Carlson) with inverse
//! evaluation by bisection.
//!
//! Used to turn sampled switching waveforms into evaluable, invertible
//! functions. The Fritsch-Carlson slope limiter guarantees the interpolant
//! is monotone wherever the data is, so the inverse is well defined.

fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Monotone cubic Hermite interpolant over strictly increasing knots.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant. `xs` must be strictly increasing and `ys`
    /// strictly monotone (either direction); returns `None` otherwise.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Option<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return None;
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return None;
        }
        let increasing = ys[1] > ys[0];
        let ok = ys.windows(2).all(|w| if increasing { w[0] < w[1] } else { w[0] > w[1] });
        if !ok {
            return None;
        }

        // Secant slopes per interval, then Fritsch-Carlson limited tangents.
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut m = vec![0.0; n];
        // Three-point endpoint tangents (quadratic fit, clipped to keep
        // monotonicity); plain secants would cost an order of accuracy in
        // the boundary intervals.
        m[0] = if n == 2 {
            d[0]
        } else {
            endpoint_slope(xs[1] - xs[0], xs[2] - xs[1], d[0], d[1])
        };
        m[n - 1] = if n == 2 {
            d[n - 2]
        } else {
            endpoint_slope(
                xs[n - 1] - xs[n - 2],
                xs[n - 2] - xs[n - 3],
                d[n - 2],
                d[n - 3],
            )
        };
        for i in 1..n - 1 {
            if d[i - 1] * d[i] <= 0.0 {
                m[i] = 0.0;
            } else {
                // Weighted harmonic mean keeps the interpolant monotone.
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                m[i] = (w0 + w1) / (w0 / d[i - 1] + w1 / d[i]);
            }
        }
        Some(MonotoneCubic { xs, ys, slopes: m })
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn y_first(&self) -> f64 {
        self.ys[0]
    }

    pub fn y_last(&self) -> f64 {
        *self.ys.last().unwrap()
    }

    pub fn is_increasing(&self) -> bool {
        self.ys[1] > self.ys[0]
    }

    /// Evaluates at `x`, clamping to the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(self.x_min(), self.x_max());
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= self.xs.len() => self.xs.len() - 2,
            p => p - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    /// Inverse evaluation: the `x` with `eval(x) = y`, found by bisection to
    /// `tol` absolute on `x`. `y` is clamped to the value range.
    pub fn inverse(&self, y: f64, tol: f64) -> f64 {
        let (y_lo, y_hi) = if self.is_increasing() {
            (self.y_first(), self.y_last())
        } else {
            (self.y_last(), self.y_first())
        };
        let y = y.clamp(y_lo, y_hi);
        // Narrow to the knot interval first, then bisect inside it.
        let idx = self.ys.partition_point(|&v| if self.is_increasing() { v <= y } else { v >= y });
        if idx == 0 {
            return self.x_min();
        }
        if idx >= self.xs.len() {
            return self.x_max();
        }
        let mut lo = self.xs[idx - 1];
        let mut hi = self.xs[idx];
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let v = self.eval(mid);
            let below = if self.is_increasing() { v < y } else { v > y };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        (xs, ys)
    }

    #[test]
    fn reproduces_exponential_decay() {
        let (xs, ys) = sample(|t| (-t).exp(), 0.0, 20.0, 4001);
        let c = MonotoneCubic::new(xs, ys).unwrap();
        for i in 0..1000 {
            let x = 0.0123 + 15.0 * i as f64 / 1000.0;
            assert!((c.eval(x) - (-x).exp()).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let (xs, ys) = sample(|t| 1.0 - (-t).exp(), 0.0, 20.0, 2001);
        let c = MonotoneCubic::new(xs, ys).unwrap();
        for y in [0.1, 0.25, 0.5, 0.9, 0.99] {
            let x = c.inverse(y, 1e-12);
            assert!((c.eval(x) - y).abs() < 1e-10, "y={y}");
        }
    }

    #[test]
    fn decreasing_data() {
        let (xs, ys) = sample(|t| (-t).exp(), 0.0, 10.0, 501);
        let c = MonotoneCubic::new(xs, ys).unwrap();
        assert!(!c.is_increasing());
        let x = c.inverse(0.5, 1e-12);
        assert!((x - std::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_monotone() {
        assert!(MonotoneCubic::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 1.0]).is_none());
        assert!(MonotoneCubic::new(vec![0.0, 0.0, 2.0], vec![0.0, 1.0, 2.0]).is_none());
        assert!(MonotoneCubic::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn interpolant_stays_monotone() {
        // Data with strongly varying slopes; interpolant must not overshoot.
        let xs: Vec<f64> = vec![0.0, 0.1, 0.5, 1.0, 4.0, 10.0];
        let ys: Vec<f64> = vec![0.0, 0.05, 0.9, 0.95, 0.99, 1.0];
        let c = MonotoneCubic::new(xs, ys).unwrap();
        let mut prev = c.eval(0.0);
        for i in 1..=1000 {
            let x = 10.0 * i as f64 / 1000.0;
            let v = c.eval(x);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }
}
