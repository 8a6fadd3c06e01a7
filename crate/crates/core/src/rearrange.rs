//! Distribution functions and rearrangements of gridded fields.
//!
//! Every inside node of a [`GriddedField`] stands for a cell of area `h²`,
//! so the decreasing rearrangement `u*` is obtained exactly by sorting node
//! values: equimeasurability holds as an identity between two sums over the
//! same multiset, not as an approximation.

use serde::{Deserialize, Serialize};

use crate::elliptic::GriddedField;
use crate::error::{Error, Result};
use crate::exponents::unit_ball_volume;
use crate::profile::{union_grid, ProfileKind, VolumeProfile};

/// `μ(t) = |{u > t}|` as a right-continuous step function: `μ(t) =
/// measures[k]` for `thresholds[k] <= t < thresholds[k+1]`, and zero from
/// the last threshold `M = sup u` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFunction {
    pub thresholds: Vec<f64>,
    pub measures: Vec<f64>,
}

impl DistributionFunction {
    pub fn eval(&self, t: f64) -> f64 {
        if t < self.thresholds[0] {
            return self.measures[0];
        }
        let k = self.thresholds.partition_point(|&x| x <= t) - 1;
        self.measures[k]
    }

    pub fn sup(&self) -> f64 {
        *self.thresholds.last().unwrap()
    }
}

fn sorted_desc(field: &GriddedField) -> Result<Vec<f64>> {
    let mut vals = field.inside_values();
    if let Some(v) = vals.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "rearrangement needs a finite nonnegative field, found {v}"
        )));
    }
    // stable sort: ties keep node-index order
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

/// Distribution function of the discrete field.
pub fn distribution(field: &GriddedField) -> Result<DistributionFunction> {
    let desc = sorted_desc(field)?;
    let cell = field.h * field.h;
    let mut thresholds = vec![0.0];
    let mut measures = vec![desc.iter().filter(|v| **v > 0.0).count() as f64 * cell];
    // walk distinct values from the smallest up
    let mut k = desc.len();
    while k > 0 {
        let v = desc[k - 1];
        let above = desc.partition_point(|&x| x > v);
        if v > 0.0 {
            thresholds.push(v);
            measures.push(above as f64 * cell);
        }
        k = above;
    }
    Ok(DistributionFunction {
        thresholds,
        measures,
    })
}

/// `u*(s) = inf{t >= 0 : μ(t) < s}`: the sorted node values laid out as a
/// step function over cells of width `h²`.
pub fn decreasing_rearrangement(field: &GriddedField) -> Result<VolumeProfile> {
    let desc = sorted_desc(field)?;
    if desc.is_empty() {
        return Err(Error::DomainUnresolved("field has an empty mask".into()));
    }
    VolumeProfile::uniform_step(desc, field.h * field.h)
}

/// `|∫_Ω u^q dm - ∫₀^{|Ω|} (u*)^q ds|`.
pub fn equimeasurability_residual(field: &GriddedField, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent q = {q}")));
    }
    let direct = field.power_integral(q);
    let rearranged = decreasing_rearrangement(field)?.integral_pow(q);
    Ok((direct - rearranged).abs())
}

/// The symmetric decreasing rearrangement `u†(x) = u*(ω_n|x|ⁿ)` on the ball
/// `Ω*` with `|Ω*| = |Ω|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricRearrangement {
    pub n: usize,
    pub radius: f64,
    pub profile: VolumeProfile,
}

impl SymmetricRearrangement {
    pub fn new(profile: VolumeProfile, n: usize) -> Result<Self> {
        let omega = unit_ball_volume(n)?;
        let radius = (profile.total_volume() / omega).powf(1.0 / n as f64);
        Ok(SymmetricRearrangement { n, radius, profile })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let omega = unit_ball_volume(self.n).expect("n >= 1");
        self.profile.eval(omega * r.powi(self.n as i32))
    }

    /// `‖u†‖_{L^q(Ω*)}`, summed over the spherical shells on which `u†` is
    /// constant.
    pub fn lq_norm(&self, q: f64) -> f64 {
        let omega = unit_ball_volume(self.n).expect("n >= 1");
        let nf = self.n as f64;
        let edges = self.profile.breakpoints();
        let radii: Vec<f64> = edges.iter().map(|s| (s / omega).powf(1.0 / nf)).collect();
        let total: f64 = match self.profile.kind() {
            ProfileKind::Step => self
                .profile
                .values()
                .iter()
                .zip(radii.windows(2))
                .map(|(v, r)| v.powf(q) * omega * (r[1].powf(nf) - r[0].powf(nf)))
                .sum(),
            ProfileKind::Nodal => self.profile.integral_pow(q),
        };
        total.powf(1.0 / q)
    }
}

/// Default Talenti-check settings for a step profile with cells of area
/// `cell`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TalentiOptions {
    /// Volumes below this are skipped (singular prefactor).
    pub s_min: f64,
    /// Backward differences span this many cells.
    pub window: usize,
}

impl TalentiOptions {
    pub fn for_profile(u_star: &VolumeProfile) -> Self {
        let s = u_star.breakpoints();
        let cell = s[1] - s[0];
        let cells = s.len() - 1;
        let window = match u_star.kind() {
            ProfileKind::Step => default_window(cells),
            ProfileKind::Nodal => 1,
        };
        TalentiOptions {
            s_min: 4.0 * cell,
            window,
        }
    }
}

/// Stencil width for the sorted-value derivative: one eighth of the cells.
/// Lattice symmetry makes groups of nodes share a value and the level-set
/// areas of a lattice function fluctuate at the cell scale, so short
/// differences are dominated by counting noise rather than by the profile.
pub fn default_window(cells: usize) -> usize {
    (cells / 8).max(1)
}

/// Worst relative violation `max_s [-(u*)'(s) - RHS(s)] / RHS(s)` of
/// `-(u*)' <= C n^{-2} ω_n^{-2/n} s^{-2+2/n} ∫₀^s (u*)^{p-1}` for `s >= s_min`.
///
/// The derivative is a backward difference over `window` cells between
/// step midpoints, compared against the average of the right-hand side
/// over the same span, which is the integrated form of the inequality over
/// that span. The violation is measured relative to that average, so it
/// does not depend on the scale of `Ω` or the normalization of `u`. A
/// nonpositive return certifies the inequality on the grid.
pub fn verify_talenti(u_star: &VolumeProfile, cp: f64, n: usize, p: f64, opts: &TalentiOptions) -> Result<f64> {
    let nf = n as f64;
    let prefactor = cp / (nf * nf) * unit_ball_volume(n)?.powf(-2.0 / nf);
    let edges = u_star.breakpoints();
    let values = u_star.values();
    // evaluation points and profile values there
    let (pts, vals): (Vec<f64>, Vec<f64>) = match u_star.kind() {
        ProfileKind::Step => edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .zip(values.iter().copied())
            .unzip(),
        ProfileKind::Nodal => (edges.to_vec(), values.to_vec()),
    };
    if vals.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let mut grid = pts.clone();
    if grid[0] > 0.0 {
        grid.insert(0, 0.0);
    }
    let offset = grid.len() - pts.len();
    let cumulative = u_star.cumulative_on(&grid, p - 1.0);
    let rhs: Vec<f64> = pts
        .iter()
        .enumerate()
        .map(|(i, &s)| prefactor * s.powf(-2.0 + 2.0 / nf) * cumulative[i + offset])
        .collect();
    let window = opts.window.max(1);
    let mut worst = f64::NEG_INFINITY;
    for j in window..pts.len() {
        if pts[j - window] < opts.s_min {
            continue;
        }
        let span = pts[j] - pts[j - window];
        let lhs = (vals[j - window] - vals[j]) / span;
        let avg = (j - window..j)
            .map(|i| 0.5 * (rhs[i] + rhs[i + 1]) * (pts[i + 1] - pts[i]))
            .sum::<f64>()
            / span;
        if !(avg > 0.0) {
            continue;
        }
        worst = worst.max((lhs - avg) / avg);
    }
    Ok(if worst.is_finite() { worst } else { 0.0 })
}

fn cumulative_pair(f: &VolumeProfile, g: &VolumeProfile, q: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let grid = union_grid(f, g);
    let cf = f.cumulative_on(&grid, q);
    let cg = g.cumulative_on(&grid, q);
    (grid, cf, cg)
}

fn first_dominance_failure(f: &VolumeProfile, g: &VolumeProfile, q1: f64) -> Result<Option<f64>> {
    if !(q1 > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent q1 = {q1}")));
    }
    let (grid, cf, cg) = cumulative_pair(f, g, q1);
    let scale = cf.last().unwrap().abs().max(cg.last().unwrap().abs()).max(f64::MIN_POSITIVE);
    Ok(grid
        .iter()
        .zip(cf.iter().zip(&cg))
        .find(|(_, (a, b))| **a > **b + 1e-12 * scale)
        .map(|(s, _)| *s))
}

/// Whether `∫₀^s f^{q1} <= ∫₀^s g^{q1}` at every breakpoint of either profile.
pub fn hlp_dominates(f: &VolumeProfile, g: &VolumeProfile, q1: f64) -> Result<bool> {
    Ok(first_dominance_failure(f, g, q1)?.is_none())
}

/// Checks the conclusion `∫f^{q2} <= ∫g^{q2}` of the dominance lemma. A
/// failed hypothesis is reported as [`Error::HlpPrecondition`], distinct from
/// a failed conclusion (`Ok(false)`).
pub fn hlp_conclusion_check(f: &VolumeProfile, g: &VolumeProfile, q1: f64, q2: f64) -> Result<bool> {
    if !(q2 >= q1) {
        return Err(Error::InvalidArgument(format!(
            "need q2 >= q1, got q1 = {q1}, q2 = {q2}"
        )));
    }
    if let Some(s) = first_dominance_failure(f, g, q1)? {
        return Err(Error::HlpPrecondition { s });
    }
    let (a, b) = (f.integral_pow(q2), g.integral_pow(q2));
    Ok(a <= b + 1e-12 * a.abs().max(b.abs()))
}
