//! Closed-form roots of cubics (Cardano) and quartics (Ferrari).
//!
//! Both solvers work in complex arithmetic throughout and finish with a
//! guarded Newton polish on the original polynomial: a step is kept only
//! if it lowers the residual.

use serde::Serialize;

use crate::linalg::C64;

const POLISH_STEPS: usize = 4;

/// Evaluate a polynomial given highest-degree coefficient first.
pub fn horner(coeffs: &[f64], z: C64) -> C64 {
    coeffs.iter().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn horner_with_derivative(coeffs: &[f64], z: C64) -> (C64, C64) {
    let zero = C64::new(0.0, 0.0);
    coeffs
        .iter()
        .fold((zero, zero), |(p, dp), c| (p * z + c, dp * z + p))
}

/// `|p(z)| / Σ|c_i||z|^i`, a scale-free backward error.
pub fn relative_residual(coeffs: &[f64], z: C64) -> f64 {
    let scale = coeffs.iter().fold(0.0, |acc, c| acc * z.norm() + c.abs());
    let r = horner(coeffs, z).norm();
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

fn polish(coeffs: &[f64], mut z: C64) -> C64 {
    let mut best = horner(coeffs, z).norm();
    for _ in 0..POLISH_STEPS {
        if best == 0.0 {
            break;
        }
        let (p, dp) = horner_with_derivative(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        let r = horner(coeffs, next).norm();
        if r.is_finite() && r < best {
            z = next;
            best = r;
        } else {
            break;
        }
    }
    z
}

fn complex_cbrt(z: C64) -> C64 {
    if z.im == 0.0 {
        C64::new(z.re.cbrt(), 0.0)
    } else {
        C64::from_polar(z.norm().cbrt(), z.arg() / 3.0)
    }
}

/// Roots of `y³ + A y² + B y + C`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubicSolution {
    pub roots: [C64; 3],
    /// Depressed-cubic coefficients of `t³ + p t + q`, `y = t - A/3`.
    pub p: f64,
    pub q: f64,
    /// `(q/2)² + (p/3)³`
    pub discriminant: f64,
    /// Primitive cube root of unity `(-1 + √3 i)/2`.
    pub omega: C64,
}

impl CubicSolution {
    /// Largest root whose imaginary part is negligible.
    pub fn largest_real(&self) -> f64 {
        let tol = |z: &C64| 1e-8 * (1.0 + z.re.abs());
        let real = self
            .roots
            .iter()
            .filter(|z| z.im.abs() <= tol(z))
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if real.is_finite() {
            real
        } else {
            // A real cubic always has a real root; take the least complex one.
            self.roots
                .iter()
                .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
                .map(|z| z.re)
                .unwrap_or(f64::NAN)
        }
    }
}

pub fn solve_cubic_cardano(a: f64, b: f64, c: f64) -> CubicSolution {
    let shift = -a / 3.0;
    let p = b - a * a / 3.0;
    let q = c - a * b / 3.0 + 2.0 * a * a * a / 27.0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let omega = C64::new(-0.5, 3f64.sqrt() / 2.0);

    let (u, v) = if disc >= 0.0 {
        // Pick the sign that avoids cancellation.
        let s = disc.sqrt();
        let w = if q >= 0.0 { -q / 2.0 - s } else { -q / 2.0 + s };
        let u = w.cbrt();
        let v = if u == 0.0 {
            (-q).cbrt()
        } else {
            -p / (3.0 * u)
        };
        (C64::new(u, 0.0), C64::new(v, 0.0))
    } else {
        let u = complex_cbrt(C64::new(-q / 2.0, (-disc).sqrt()));
        (u, -p / (3.0 * u))
    };
    let w2 = omega * omega;
    let t = [u + v, u * omega + v * w2, u * w2 + v * omega];
    let coeffs = [1.0, a, b, c];
    let mut roots = t.map(|t| polish(&coeffs, t + shift));
    if disc >= 0.0 {
        roots[0].im = 0.0;
    }
    CubicSolution {
        roots,
        p,
        q,
        discriminant: disc,
        omega,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FerrariBranch {
    /// `R ≠ 0`
    General,
    /// `R = 0`: the quartic splits as a quadratic in `(β + d₃/4)²`.
    DegenerateR,
}

/// Roots of `β⁴ + d₃β³ + d₂β² + d₁β + d₀` with the intermediate quantities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuarticSolution {
    pub roots: [C64; 4],
    /// Root of the resolvent cubic that was used.
    pub y: f64,
    pub resolvent: Option<CubicSolution>,
    #[serde(rename = "R")]
    pub r: C64,
    #[serde(rename = "P")]
    pub p: C64,
    #[serde(rename = "T")]
    pub t: C64,
    pub branch: FerrariBranch,
}

/// Coefficients of the resolvent `y³ - d₂y² + (d₃d₁ - 4d₀)y + (4d₂d₀ - d₁² - d₃²d₀)`.
pub fn resolvent_coefficients(d: [f64; 4]) -> [f64; 3] {
    let [d0, d1, d2, d3] = d;
    [
        -d2,
        d3 * d1 - 4.0 * d0,
        4.0 * d2 * d0 - d1 * d1 - d3 * d3 * d0,
    ]
}

/// `d = [d₀, d₁, d₂, d₃]`. Uses the largest real resolvent root, which keeps
/// `R` as far from zero as possible.
pub fn solve_quartic_ferrari(d: [f64; 4]) -> QuarticSolution {
    let [ra, rb, rc] = resolvent_coefficients(d);
    let cubic = solve_cubic_cardano(ra, rb, rc);
    let y = cubic.largest_real();
    let mut sol = solve_quartic_with_resolvent(d, y);
    sol.resolvent = Some(cubic);
    sol
}

/// Ferrari's reduction with a caller-chosen resolvent root `y`.
pub fn solve_quartic_with_resolvent(d: [f64; 4], y: f64) -> QuarticSolution {
    let [d0, d1, d2, d3] = d;
    let r2 = d3 * d3 / 4.0 - d2 + y;
    let r = C64::new(r2, 0.0).sqrt();
    let scale = d3 * d3 / 4.0 + d2.abs() + y.abs();
    let base = C64::new(0.75 * d3 * d3 - 2.0 * d2, 0.0);

    let (branch, p, t) = if r2.abs() > 1e-14 * scale {
        let k = (4.0 * d3 * d2 - 8.0 * d1 - d3 * d3 * d3) / (4.0 * r);
        let common = base - r * r;
        (
            FerrariBranch::General,
            (common + k).sqrt(),
            (common - k).sqrt(),
        )
    } else {
        let s = 2.0 * C64::new(y * y - 4.0 * d0, 0.0).sqrt();
        (
            FerrariBranch::DegenerateR,
            (base + s).sqrt(),
            (base - s).sqrt(),
        )
    };

    let centre = C64::new(-d3 / 4.0, 0.0);
    let raw = [
        centre + r / 2.0 + p / 2.0,
        centre + r / 2.0 - p / 2.0,
        centre - r / 2.0 + t / 2.0,
        centre - r / 2.0 - t / 2.0,
    ];
    let coeffs = [1.0, d3, d2, d1, d0];
    QuarticSolution {
        roots: raw.map(|z| polish(&coeffs, z)),
        y,
        resolvent: None,
        r,
        p,
        t,
        branch,
    }
}

/// All complex roots of a real polynomial of degree at most four, highest
/// coefficient first. Leading coefficients that are negligible relative to
/// the largest one are dropped.
pub fn roots_up_to_quartic(coeffs: &[f64]) -> Vec<C64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    let start = coeffs
        .iter()
        .position(|c| c.abs() > 1e-13 * scale)
        .unwrap_or(coeffs.len());
    let c = &coeffs[start..];
    let lead = c[0];
    match c.len() {
        5 => solve_quartic_ferrari([c[4] / lead, c[3] / lead, c[2] / lead, c[1] / lead])
            .roots
            .to_vec(),
        4 => solve_cubic_cardano(c[1] / lead, c[2] / lead, c[3] / lead)
            .roots
            .to_vec(),
        3 => {
            let (b, cc) = (c[1] / lead, c[2] / lead);
            let s = C64::new(b * b / 4.0 - cc, 0.0).sqrt();
            vec![-b / 2.0 + s, -b / 2.0 - s]
        }
        2 => vec![C64::new(-c[1] / lead, 0.0)],
        0 | 1 => Vec::new(),
        n => panic!("degree {} exceeds four", n - 1),
    }
}
