//! Adaptive Chebyshev panel interpolation of smooth complex-valued functions
//! on an interval. Used to cache the Green tensor along the imaginary axis,
//! where the contour integrals sample it thousands of times per time grid.

use num_complex::Complex64;
use std::f64::consts::PI;

const DEGREE: usize = 16;

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    /// Chebyshev coefficients of the panel map x = (a+b)/2 + (b-a)/2 * s.
    coeffs: Vec<Complex64>,
}

impl Panel {
    fn fit<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Self {
        let n = DEGREE;
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        // Chebyshev-Gauss-Lobatto nodes.
        let values: Vec<Complex64> = (0..=n)
            .map(|j| f(mid + half * (PI * j as f64 / n as f64).cos()))
            .collect();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += w * v * (PI * (j * k) as f64 / n as f64).cos();
            }
            let norm = if k == 0 || k == n { 1.0 } else { 2.0 };
            *c = acc * (norm / n as f64);
        }
        Panel { a, b, coeffs }
    }

    fn scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Tail-coefficient error estimate relative to the panel scale.
    fn tail_error(&self) -> f64 {
        let n = self.coeffs.len();
        self.coeffs[n - 2].norm() + self.coeffs[n - 1].norm()
    }

    fn eval(&self, x: f64) -> Complex64 {
        let s = (2.0 * x - (self.a + self.b)) / (self.b - self.a);
        // Clenshaw recurrence.
        let mut b1 = Complex64::new(0.0, 0.0);
        let mut b2 = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let tmp = b1;
            b1 = 2.0 * s * b1 - b2 + c;
            b2 = tmp;
        }
        self.coeffs[0] + s * b1 - b2
    }
}

/// Piecewise-Chebyshev interpolant on [cuts.first(), cuts.last()].
#[derive(Debug, Clone)]
pub struct PanelInterpolant {
    panels: Vec<Panel>,
}

impl PanelInterpolant {
    /// Fit `f` over the panels delimited by `cuts`, bisecting any panel whose
    /// Chebyshev tail exceeds rel_tol times the global scale. Panels are not
    /// refined below a width of ~1e-12 of the domain.
    pub fn build<F: Fn(f64) -> Complex64>(f: F, cuts: &[f64], rel_tol: f64) -> Self {
        assert!(cuts.len() >= 2, "need at least one panel");
        let domain = cuts[cuts.len() - 1] - cuts[0];
        let min_width = 1e-12 * domain;
        let mut queue: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
        let mut panels: Vec<Panel> = Vec::new();
        // First pass to estimate the global scale.
        let mut scale: f64 = 0.0;
        let fitted: Vec<Panel> = queue
            .iter()
            .map(|&(a, b)| {
                let p = Panel::fit(&f, a, b);
                scale = scale.max(p.scale());
                p
            })
            .collect();
        queue.clear();
        let mut work: Vec<Panel> = fitted;
        while let Some(p) = work.pop() {
            let tol = rel_tol * scale.max(1e-300);
            let tail = p.tail_error();
            // A non-finite fit cannot improve by splitting; keep the panel
            // so the failure surfaces at evaluation time.
            if !tail.is_finite() || tail <= tol || (p.b - p.a) <= min_width {
                panels.push(p);
            } else {
                let mid = 0.5 * (p.a + p.b);
                let left = Panel::fit(&f, p.a, mid);
                let right = Panel::fit(&f, mid, p.b);
                scale = scale.max(left.scale()).max(right.scale());
                work.push(left);
                work.push(right);
            }
        }
        panels.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap());
        PanelInterpolant { panels }
    }

    pub fn domain(&self) -> (f64, f64) {
        (
            self.panels.first().unwrap().a,
            self.panels.last().unwrap().b,
        )
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Evaluate at x; clamps to the domain edges.
    pub fn eval(&self, x: f64) -> Complex64 {
        let idx = self
            .panels
            .partition_point(|p| p.b < x)
            .min(self.panels.len() - 1);
        self.panels[idx].eval(x.clamp(self.panels[idx].a, self.panels[idx].b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reproduces_smooth_function() {
        let f = |x: f64| Complex64::new((3.0 * x).sin() * (-x).exp(), x.cos());
        let interp = PanelInterpolant::build(f, &[0.0, 2.0, 10.0], 1e-12);
        for k in 0..200 {
            let x = 10.0 * (k as f64 + 0.5) / 200.0;
            let got = interp.eval(x);
            let want = f(x);
            assert!((got - want).norm() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn refines_steep_panels() {
        let f = |x: f64| Complex64::new(1.0 / (1e-3 + x * x), 0.0);
        let interp = PanelInterpolant::build(f, &[-1.0, 1.0], 1e-10);
        assert!(interp.panel_count() > 4);
        let got = interp.eval(0.01);
        assert_relative_eq!(got.re, 1.0 / (1e-3 + 1e-4), max_relative = 1e-8);
    }
}
