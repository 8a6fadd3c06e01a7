//! Extremal functions on planar domains.
//!
//! The domain is represented by the nodes of a uniform square grid lying
//! strictly inside it (a staircase boundary); nodes outside carry the
//! Dirichlet value zero. The minimizer of the discrete quotient solves
//! `-Δ_h u = Λ u^{p-1}`, which we reach by the fixed point
//! `u ← normalize_p((-Δ_h)^{-1} u^{p-1})`. For `p = 2` this is inverse power
//! iteration; for `p = 1` it converges after a single solve.

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};

/// Largest grid accepted by [`build_grid`].
pub const MAX_NODES: usize = 4_000_000;

/// A scalar function on a uniform grid with an inside/outside mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriddedField {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Coordinates of node `(0, 0)`.
    pub origin: [f64; 2],
    pub mask: Vec<bool>,
    /// Row-major (`j * nx + i`), zero outside the mask.
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
}

impl GriddedField {
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        )
    }

    pub fn inside_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// `|Ω|` of the staircase domain: inside nodes times `h²`.
    pub fn measure(&self) -> f64 {
        self.inside_count() as f64 * self.h * self.h
    }

    /// Values at inside nodes, in grid order.
    pub fn inside_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
            .collect()
    }

    /// A copy carrying `values` (in inside-node order) on the same mask.
    pub fn with_inside_values(&self, inside: &[f64]) -> GriddedField {
        let mut out = self.clone();
        let mut it = inside.iter();
        for (v, m) in out.values.iter_mut().zip(&self.mask) {
            *v = if *m { *it.next().expect("length matches mask") } else { 0.0 };
        }
        out
    }

    pub fn map_inside(&self, f: impl Fn(f64, f64) -> f64) -> GriddedField {
        let mut out = self.clone();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.index(i, j);
                out.values[k] = if self.mask[k] {
                    let (x, y) = self.node(i, j);
                    f(x, y)
                } else {
                    0.0
                };
            }
        }
        out
    }

    /// `∫_Ω |u|^q dm` by node sums times `h²`.
    pub fn power_integral(&self, q: f64) -> f64 {
        let sum: f64 = self
            .values
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| v.abs().powf(q))
            .sum();
        sum * self.h * self.h
    }

    pub fn lq_norm(&self, q: f64) -> f64 {
        self.power_integral(q).powf(1.0 / q)
    }

    pub fn scaled(&self, c: f64) -> GriddedField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    fn same_mask(&self, other: &GriddedField) -> Result<()> {
        if self.nx != other.nx || self.ny != other.ny || self.mask != other.mask {
            return Err(Error::InvalidArgument("fields live on different masks".into()));
        }
        Ok(())
    }
}

/// The zero field on the nodes strictly inside `spec`, padded by one layer
/// of outside nodes on every side.
pub fn build_grid(spec: &DomainSpec, h: f64) -> Result<GriddedField> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid spacing h = {h}")));
    }
    spec.validate()?;
    let (x0, y0, x1, y1) = spec.bounding_box();
    let nx = ((x1 - x0) / h).ceil() as usize + 3;
    let ny = ((y1 - y0) / h).ceil() as usize + 3;
    if nx.saturating_mul(ny) > MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "grid of {nx}x{ny} nodes exceeds the budget of {MAX_NODES}"
        )));
    }
    let origin = [x0 - h, y0 - h];
    let mut mask = vec![false; nx * ny];
    for j in 0..ny {
        let y = y0 + (j as f64 - 1.0) * h;
        for i in 0..nx {
            let x = x0 + (i as f64 - 1.0) * h;
            mask[j * nx + i] = spec.contains(x, y);
        }
    }
    if !mask.iter().any(|m| *m) {
        return Err(Error::DomainUnresolved(format!(
            "{} has no grid nodes strictly inside at h = {h}",
            spec.label()
        )));
    }
    Ok(GriddedField {
        nx,
        ny,
        h,
        origin,
        mask,
        values: vec![0.0; nx * ny],
        domain: Some(spec.clone()),
    })
}

const OUTSIDE: u32 = u32::MAX;

/// Matrix-free 5-point Dirichlet Laplacian `-Δ_h` on the inside nodes.
#[derive(Debug, Clone)]
pub struct Laplacian {
    neighbors: Vec<[u32; 4]>,
    inv_h2: f64,
}

impl Laplacian {
    pub fn new(grid: &GriddedField) -> Self {
        let mut compact = vec![OUTSIDE; grid.mask.len()];
        let mut count = 0u32;
        for (k, m) in grid.mask.iter().enumerate() {
            if *m {
                compact[k] = count;
                count += 1;
            }
        }
        let mut neighbors = Vec::with_capacity(count as usize);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let k = grid.index(i, j);
                if !grid.mask[k] {
                    continue;
                }
                // build_grid pads with an outside layer, but fields read
                // from files need not be padded
                let at = |ii: Option<usize>, jj: Option<usize>| match (ii, jj) {
                    (Some(ii), Some(jj)) if ii < grid.nx && jj < grid.ny => {
                        compact[grid.index(ii, jj)]
                    }
                    _ => OUTSIDE,
                };
                neighbors.push([
                    at(i.checked_sub(1), Some(j)),
                    at(Some(i + 1), Some(j)),
                    at(Some(i), j.checked_sub(1)),
                    at(Some(i), Some(j + 1)),
                ]);
            }
        }
        Laplacian {
            neighbors,
            inv_h2: 1.0 / (grid.h * grid.h),
        }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (k, nb) in self.neighbors.iter().enumerate() {
            let mut acc = 4.0 * x[k];
            for &m in nb {
                if m != OUTSIDE {
                    acc -= x[m as usize];
                }
            }
            out[k] = acc * self.inv_h2;
        }
    }

    /// Conjugate gradients for `-Δ_h x = b`, starting from `guess`, to
    /// relative residual `rel_tol`.
    pub fn solve(&self, b: &[f64], guess: Option<&[f64]>, rel_tol: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let b_norm = dot(b, b).sqrt();
        if b_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let mut ax = vec![0.0; n];
        self.apply(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut d = r.clone();
        let mut rr = dot(&r, &r);
        let mut history = Vec::new();
        let max_iter = 20 * n + 100;
        let mut ad = vec![0.0; n];
        for _ in 0..max_iter {
            let res = rr.sqrt() / b_norm;
            history.push(res);
            if res <= rel_tol {
                return Ok(x);
            }
            self.apply(&d, &mut ad);
            let step = rr / dot(&d, &ad);
            for k in 0..n {
                x[k] += step * d[k];
                r[k] -= step * ad[k];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for k in 0..n {
                d[k] = r[k] + beta * d[k];
            }
            rr = rr_new;
        }
        let tail = history[history.len().saturating_sub(8)..].to_vec();
        Err(Error::CgNotConverged {
            iterations: max_iter,
            residual: *history.last().unwrap_or(&f64::NAN),
            tail,
        })
    }
}

/// Default relative residual for the conjugate-gradient solves.
pub const CG_TOL: f64 = 1e-10;

/// Solves `-Δ_h v = rhs` on the inside nodes with `v = 0` outside.
pub fn poisson_solve(grid: &GriddedField, rhs: &GriddedField) -> Result<GriddedField> {
    grid.same_mask(rhs)?;
    if rhs.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("right-hand side is not finite".into()));
    }
    let lap = Laplacian::new(grid);
    let v = lap.solve(&rhs.inside_values(), None, CG_TOL)?;
    Ok(grid.with_inside_values(&v))
}

/// `∫|∇u|² / (∫|u|^p)^{2/p}` with forward-difference gradients summed
/// over all grid cells and the `L^p` norm by node sums.
pub fn quotient(field: &GriddedField, p: f64) -> Result<f64> {
    let denom = field.power_integral(p);
    if !(denom > 0.0) {
        return Err(Error::TrivialFunction);
    }
    Ok(dirichlet_energy(field) / denom.powf(2.0 / p))
}

/// `∫|∇_h u|²` with forward differences; the `h²` cell area cancels the
/// `1/h²` of the squared difference quotients.
pub fn dirichlet_energy(field: &GriddedField) -> f64 {
    let (nx, ny) = (field.nx, field.ny);
    let u = &field.values;
    let mut energy = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            // values beyond the array edge are outside, hence zero
            let right = if i + 1 < nx { u[k + 1] } else { 0.0 };
            let up = if j + 1 < ny { u[k + nx] } else { 0.0 };
            energy += (right - u[k]).powi(2) + (up - u[k]).powi(2);
            if i == 0 {
                energy += u[k] * u[k];
            }
            if j == 0 {
                energy += u[k] * u[k];
            }
        }
    }
    energy
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    /// Stop once the relative change of `cp` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub cg_tol: f64,
    pub allow_supercritical: bool,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tol: 1e-10,
            max_iter: 500,
            cg_tol: CG_TOL,
            allow_supercritical: false,
        }
    }
}

/// Output of [`minimize_quotient`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevResult {
    /// The extremal, normalized so that `‖u‖_p = 1`.
    pub field: GriddedField,
    pub cp: f64,
    pub p: f64,
    pub n: usize,
    pub iterations: usize,
    /// Last relative change of `cp`.
    pub residual: f64,
    /// `cp` after each iterate, starting with the initial guess.
    pub trajectory: Vec<f64>,
}

fn normalize_p(v: &mut [f64], p: f64, h: f64) -> Result<()> {
    let norm = (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() * h * h).powf(1.0 / p);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::TrivialFunction);
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// Minimizes the discrete Sobolev quotient on the grid's mask.
pub fn minimize_quotient(grid: &GriddedField, p: f64, opts: &FixedPointOptions) -> Result<SobolevResult> {
    if !(p >= 1.0) {
        return Err(Error::Inadmissible {
            n: 2,
            p,
            critical: f64::INFINITY,
        });
    }
    if p > 2.0 && !opts.allow_supercritical {
        return Err(Error::Supercritical { p });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {}", opts.tol)));
    }
    let lap = Laplacian::new(grid);
    if lap.is_empty() {
        return Err(Error::DomainUnresolved("empty mask".into()));
    }
    let h = grid.h;
    let mut u = vec![1.0; lap.len()];
    normalize_p(&mut u, p, h)?;
    let mut cp = quotient(&grid.with_inside_values(&u), p)?;
    let mut trajectory = vec![cp];
    let mut rhs = vec![0.0; lap.len()];
    for iter in 1..=opts.max_iter {
        for (r, x) in rhs.iter_mut().zip(&u) {
            *r = if p == 1.0 { 1.0 } else { x.powf(p - 1.0) };
        }
        // at the fixed point (-Δ_h)^{-1} u^{p-1} = u / cp
        let guess: Vec<f64> = u.iter().map(|x| x / cp).collect();
        let mut v = lap.solve(&rhs, Some(&guess), opts.cg_tol)?;
        normalize_p(&mut v, p, h)?;
        u = v;
        let field = grid.with_inside_values(&u);
        let next = quotient(&field, p)?;
        trajectory.push(next);
        let change = ((next - cp) / cp).abs();
        cp = next;
        if change < opts.tol {
            return Ok(SobolevResult {
                field,
                cp,
                p,
                n: 2,
                iterations: iter,
                residual: change,
                trajectory,
            });
        }
    }
    let tail = trajectory[trajectory.len().saturating_sub(8)..].to_vec();
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        tail,
    })
}

/// Builds the grid for `spec` and minimizes the quotient on it.
pub fn solve_domain(spec: &DomainSpec, p: f64, h: f64, opts: &FixedPointOptions) -> Result<SobolevResult> {
    minimize_quotient(&build_grid(spec, h)?, p, opts)
}
