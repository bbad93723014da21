//! The smoothing operator `S_ε` and the boundary cut-off `η_ε`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{vec2, Rect, Vec2};

const RADIAL: usize = 6;
const ANGULAR: usize = 8;

/// `φ(y) = c exp(-1 / (1 - 4|y|²))` on `B(0, 1/2)`, normalized to unit
/// mass, with a polar product rule for convolutions.
#[derive(Clone, Debug, PartialEq)]
pub struct MollifierKernel {
    /// Quadrature nodes in `B(0, 1/2)` and weights `φ(y) dy`, summing to one.
    pub nodes: Vec<(Vec2, f64)>,
}

fn profile(r: f64) -> f64 {
    let s = 4.0 * r * r;
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
fn gauss_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration from the Chebyshev guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

impl Default for MollifierKernel {
    fn default() -> Self {
        Self::new()
    }
}

impl MollifierKernel {
    pub fn new() -> Self {
        let mut nodes = Vec::with_capacity(RADIAL * ANGULAR);
        for (s, ws) in gauss_unit(RADIAL) {
            let r = 0.5 * s;
            for k in 0..ANGULAR {
                let th = 2.0 * PI * (k as f64 + 0.5) / ANGULAR as f64;
                let w = ws * 0.5 * r * profile(r) * 2.0 * PI / ANGULAR as f64;
                nodes.push((vec2(r * th.cos(), r * th.sin()), w));
            }
        }
        let mass: f64 = nodes.iter().map(|n| n.1).sum();
        for n in nodes.iter_mut() {
            n.1 /= mass;
        }
        MollifierKernel { nodes }
    }

    /// `S_ε f (x) = Σ_q w_q f(x − ε y_q)`.
    pub fn apply(&self, x: Vec2, epsilon: f64, f: impl Fn(Vec2) -> f64) -> f64 {
        self.nodes.iter().map(|(y, w)| w * f(x - y * epsilon)).sum()
    }

    /// Vector valued version of [`MollifierKernel::apply`].
    pub fn apply_vec(&self, x: Vec2, epsilon: f64, f: impl Fn(Vec2) -> Vec2) -> Vec2 {
        self.nodes.iter().fold(Vec2::zeros(), |acc, (y, w)| acc + f(x - y * epsilon) * *w)
    }

    pub fn total_mass(&self) -> f64 {
        self.nodes.iter().map(|n| n.1).sum()
    }
}

/// `η_ε = 0` on `Σ_{zero_width}` and `1` off `Σ_{one_width}`, a C¹
/// smoothstep of the distance to `∂Ω` in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    pub zero_width: f64,
    pub one_width: f64,
    /// `sup |∇η|`.
    pub gradient_bound: f64,
}

impl CutoffFunction {
    /// Zero within `inner·ε` of the boundary, one beyond `outer·ε`.
    pub fn new(epsilon: f64, inner: f64, outer: f64) -> Self {
        assert!(outer > inner && inner >= 0.0, "cut-off multipliers must satisfy 0 <= inner < outer");
        let zero_width = inner * epsilon;
        let one_width = outer * epsilon;
        CutoffFunction {
            zero_width,
            one_width,
            gradient_bound: 1.5 / (one_width - zero_width),
        }
    }

    /// Multipliers `3d` and `4d` in dimension two.
    pub fn standard(epsilon: f64) -> Self {
        Self::new(epsilon, 6.0, 8.0)
    }

    pub fn at_distance(&self, d: f64) -> f64 {
        let s = ((d - self.zero_width) / (self.one_width - self.zero_width)).clamp(0.0, 1.0);
        s * s * (3.0 - 2.0 * s)
    }

    pub fn eval(&self, omega: &Rect, x: Vec2) -> f64 {
        if !omega.contains(x) {
            return 0.0;
        }
        self.at_distance(omega.dist_to_boundary(x))
    }

    /// True when `η ≡ 0` on `Ω`.
    pub fn vanishes_on(&self, omega: &Rect) -> bool {
        self.zero_width >= 0.5 * omega.width.min(omega.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_a_probability_on_the_half_ball() {
        let k = MollifierKernel::new();
        assert!((k.total_mass() - 1.0).abs() < 1e-10);
        assert!(k.nodes.iter().all(|(y, w)| y.norm() < 0.5 && *w >= 0.0));
    }

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let g = gauss_unit(4);
        // exact through degree 7
        for p in 0..8 {
            let s: f64 = g.iter().map(|(x, w)| w * x.powi(p)).sum();
            assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn normalization_matches_direct_integration() {
        // the constant c making ∫φ = 1, by a fine midpoint rule in polar form
        let n = 200_000;
        let h = 0.5 / n as f64;
        let mass: f64 = (0..n).map(|i| {
            let r = (i as f64 + 0.5) * h;
            2.0 * PI * r * profile(r) * h
        }).sum();
        let k = MollifierKernel::new();
        // S applied to |y|² gives the second moment, compared with the fine rule
        let second: f64 = (0..n).map(|i| {
            let r = (i as f64 + 0.5) * h;
            2.0 * PI * r * r * r * profile(r) * h
        }).sum::<f64>() / mass;
        let got = k.apply(Vec2::zeros(), 1.0, |y| y.norm_squared());
        assert!((got - second).abs() < 1e-3 * second, "{got} vs {second}");
    }

    #[test]
    fn constants_and_affine_functions_are_preserved() {
        let k = MollifierKernel::new();
        let x = vec2(0.3, 0.7);
        assert!((k.apply(x, 0.1, |_| 2.5) - 2.5).abs() < 1e-12);
        let a = |p: Vec2| 3.0 * p.x - 2.0 * p.y + 0.25;
        assert!((k.apply(x, 0.1, a) - a(x)).abs() < 1e-12);
    }

    #[test]
    fn smoothing_error_is_bounded_by_epsilon_gradient() {
        let k = MollifierKernel::new();
        let f = |p: Vec2| (2.0 * PI * p.x).sin();
        for eps in [0.25, 0.1, 0.05] {
            let n = 400;
            let mut err = 0.0;
            for i in 0..n {
                let x = vec2((i as f64 + 0.5) / n as f64, 0.5);
                err += (f(x) - k.apply(x, eps, f)).powi(2) / n as f64;
            }
            // ‖∇f‖ over the unit square is 2π/√2
            let bound = eps * 2.0 * PI / 2f64.sqrt();
            assert!(err.sqrt() <= bound, "eps {eps}: {} > {bound}", err.sqrt());
        }
    }

    #[test]
    fn cutoff_profile() {
        let c = CutoffFunction::standard(1.0 / 32.0);
        let omega = Rect::unit();
        assert_eq!(c.eval(&omega, vec2(0.1, 0.5)), 0.0);
        assert_eq!(c.eval(&omega, vec2(0.5, 0.5)), 1.0);
        let mid = c.eval(&omega, vec2(7.0 / 32.0, 0.5));
        assert!((mid - 0.5).abs() < 1e-12);
        // numerical slope stays below the recorded bound
        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let d = i as f64 * 0.3 / 1000.0;
            worst = worst.max((c.at_distance(d + 1e-7) - c.at_distance(d)) / 1e-7);
        }
        assert!(worst <= c.gradient_bound * (1.0 + 1e-4));
        assert!(CutoffFunction::standard(0.125).vanishes_on(&omega));
    }
}
