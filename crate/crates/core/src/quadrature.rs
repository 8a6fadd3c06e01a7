//! Composite trapezoid quadrature on sampled 1-D profiles, plus a fixed
//! Gauss–Legendre panel rule for smooth radial integrands.

use crate::error::{Error, Result};

fn check_grid(s: &[f64], f: &[f64]) -> Result<()> {
    if s.len() != f.len() {
        return Err(Error::InvalidArgument(format!(
            "grid has {} points but {} samples",
            s.len(),
            f.len()
        )));
    }
    if s.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    Ok(())
}

fn power_of(x: f64, power: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite sample {x}")));
    }
    if x < 0.0 && power.fract() != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "negative sample {x} raised to non-integer power {power}"
        )));
    }
    Ok(x.powf(power))
}

/// `∫ f(t)^power dt` over the sample grid by the composite trapezoid rule.
pub fn profile_integral(s: &[f64], f: &[f64], power: f64) -> Result<f64> {
    Ok(*cumulative_integral(s, f, power)?.last().unwrap())
}

/// Running trapezoid integrals `∫_{s_0}^{s_i} f^power`, one per grid point.
pub fn cumulative_integral(s: &[f64], f: &[f64], power: f64) -> Result<Vec<f64>> {
    check_grid(s, f)?;
    let mut out = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    let mut prev = power_of(f[0], power)?;
    out.push(0.0);
    for i in 1..s.len() {
        let cur = power_of(f[i], power)?;
        acc += 0.5 * (prev + cur) * (s[i] - s[i - 1]);
        out.push(acc);
        prev = cur;
    }
    Ok(out)
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss–Legendre rule applied on each panel `[edges[i], edges[i+1]]`.
pub fn gauss_legendre_panels(edges: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    edges
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            half * GL_NODES
                .iter()
                .zip(GL_WEIGHTS)
                .map(|(x, wt)| wt * f(mid + half * x))
                .sum::<f64>()
        })
        .sum()
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (b - a) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| a + step * i as f64).collect();
    v[n - 1] = b;
    v
}
