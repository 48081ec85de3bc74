//! Quadrature rules on the reference interval and triangle.

use std::f64::consts::PI;

/// Gauss–Legendre points and weights on [0, 1] with `n` points (exact for
/// polynomials of degree `2n - 1`).
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let nf = n as f64;
    let d = nf * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Interval rule exact for polynomials of degree `degree`.
pub fn interval_rule(degree: usize) -> Vec<(f64, f64)> {
    gauss_legendre_unit(degree / 2 + 1)
}

/// Rule on the reference triangle {(a, b): a, b >= 0, a + b <= 1}, given as
/// (a, b, weight) with weights summing to 1/2. Degree 1 and 2 use the
/// symmetric 1- and 3-point rules; higher degrees use a collapsed
/// Gauss–Legendre product rule.
pub fn triangle_rule(degree: usize) -> Vec<(f64, f64, f64)> {
    match degree {
        0 | 1 => vec![(1.0 / 3.0, 1.0 / 3.0, 0.5)],
        2 => vec![
            (1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0),
            (2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0),
            (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0),
        ],
        _ => {
            let g = gauss_legendre_unit(degree / 2 + 2);
            let mut out = Vec::with_capacity(g.len() * g.len());
            for &(s, ws) in &g {
                for &(t, wt) in &g {
                    // (s, t) in the unit square -> (s, t (1 - s)), Jacobian 1 - s
                    out.push((s, t * (1.0 - s), ws * wt * (1.0 - s)));
                }
            }
            out
        }
    }
}
