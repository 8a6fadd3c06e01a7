//! Non-increasing functions of the volume variable `s ∈ [0, S]`.
//!
//! Two representations share one type: *nodal* profiles (samples of a
//! continuous function, linear between nodes, e.g. the ball extremal `φ*`)
//! and *step* profiles (piecewise constant on cells, e.g. the decreasing
//! rearrangement `u*` of a gridded field). Every profile is extended by zero
//! beyond its total volume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// `values[i]` is the value at `s[i]`; linear in between.
    Nodal,
    /// `values[i]` holds on `[s[i], s[i+1])`; `s` has one more entry than `values`.
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeProfile {
    kind: ProfileKind,
    s: Vec<f64>,
    values: Vec<f64>,
}

fn check_monotone(s: &[f64], values: &[f64]) -> Result<()> {
    if s.first() != Some(&0.0) {
        return Err(Error::InvalidArgument("volume grid must start at 0".into()));
    }
    if s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "volume grid must be strictly increasing".into(),
        ));
    }
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "profile value {} at index {i} is negative or non-finite",
            values[i]
        )));
    }
    if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::NotDecreasing { index: i + 1 });
    }
    Ok(())
}

impl VolumeProfile {
    pub fn nodal(s: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if s.len() != values.len() || s.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "nodal profile needs matching grids of length >= 2 (got {} and {})",
                s.len(),
                values.len()
            )));
        }
        check_monotone(&s, &values)?;
        Ok(VolumeProfile {
            kind: ProfileKind::Nodal,
            s,
            values,
        })
    }

    pub fn step(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if edges.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "step profile needs one more edge than values (got {} and {})",
                edges.len(),
                values.len()
            )));
        }
        check_monotone(&edges, &values)?;
        Ok(VolumeProfile {
            kind: ProfileKind::Step,
            s: edges,
            values,
        })
    }

    /// Step profile from cell values of equal width `cell`.
    pub fn uniform_step(values: Vec<f64>, cell: f64) -> Result<Self> {
        let edges = (0..=values.len()).map(|i| i as f64 * cell).collect();
        Self::step(edges, values)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Grid points (nodal) or cell edges (step).
    pub fn breakpoints(&self) -> &[f64] {
        &self.s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_volume(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Value at `s = 0`, the supremum.
    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    /// Right-continuous evaluation, zero outside `[0, S)`. A nodal profile
    /// is also evaluated at `s = S` itself.
    pub fn eval(&self, s: f64) -> f64 {
        let end = self.total_volume();
        if s < 0.0 || s > end {
            return 0.0;
        }
        // index of the last breakpoint <= s
        let i = self.s.partition_point(|&x| x <= s).saturating_sub(1);
        match self.kind {
            ProfileKind::Step => {
                if s >= end {
                    0.0
                } else {
                    self.values[i]
                }
            }
            ProfileKind::Nodal => {
                if i + 1 >= self.s.len() {
                    return self.values[self.s.len() - 1];
                }
                let (s0, s1) = (self.s[i], self.s[i + 1]);
                let t = (s - s0) / (s1 - s0);
                self.values[i] + t * (self.values[i + 1] - self.values[i])
            }
        }
    }

    /// The same function on `[0, total]`, zero past the current end.
    pub fn extend_to(&self, total: f64) -> Self {
        let end = self.total_volume();
        if total <= end {
            return self.clone();
        }
        let mut out = self.clone();
        match self.kind {
            ProfileKind::Nodal => {
                if *self.values.last().unwrap() > 0.0 {
                    // keep the drop to zero sharp rather than a long ramp
                    let jump = end + (total - end) * 1e-12;
                    out.s.push(jump);
                    out.values.push(0.0);
                }
                out.s.push(total);
                out.values.push(0.0);
            }
            ProfileKind::Step => {
                out.s.push(total);
                out.values.push(0.0);
            }
        }
        out
    }

    /// `∫₀^S f^q ds`.
    pub fn integral_pow(&self, q: f64) -> f64 {
        match self.kind {
            ProfileKind::Nodal => quadrature::profile_integral(&self.s, &self.values, q)
                .expect("profile invariants guarantee a valid grid"),
            ProfileKind::Step => self
                .values
                .iter()
                .zip(self.s.windows(2))
                .map(|(v, w)| v.powf(q) * (w[1] - w[0]))
                .sum(),
        }
    }

    /// Running integrals `∫₀^{grid[i]} f^q` on a grid that contains this
    /// profile's breakpoints (see [`union_grid`]). Exact for step profiles;
    /// trapezoid for nodal ones.
    pub fn cumulative_on(&self, grid: &[f64], q: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        out.push(0.0);
        match self.kind {
            ProfileKind::Step => {
                for w in grid.windows(2) {
                    acc += self.eval(w[0]).powf(q) * (w[1] - w[0]);
                    out.push(acc);
                }
            }
            ProfileKind::Nodal => {
                let mut prev = self.eval(grid[0]).powf(q);
                for w in grid.windows(2) {
                    let cur = self.eval(w[1]).powf(q);
                    acc += 0.5 * (prev + cur) * (w[1] - w[0]);
                    out.push(acc);
                    prev = cur;
                }
            }
        }
        out
    }

    /// Samples `(s, f(s))` for serialization: nodes for nodal profiles, left
    /// cell edges for step profiles (plus the closing edge with value 0).
    pub fn rows(&self) -> Vec<(f64, f64)> {
        match self.kind {
            ProfileKind::Nodal => self.s.iter().copied().zip(self.values.iter().copied()).collect(),
            ProfileKind::Step => {
                let mut rows: Vec<(f64, f64)> = self
                    .s
                    .iter()
                    .copied()
                    .zip(self.values.iter().copied())
                    .collect();
                rows.push((self.total_volume(), 0.0));
                rows
            }
        }
    }

    pub fn from_rows(kind: ProfileKind, rows: &[(f64, f64)]) -> Result<Self> {
        let (s, v): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
        match kind {
            ProfileKind::Nodal => Self::nodal(s, v),
            ProfileKind::Step => {
                let mut v = v;
                v.pop();
                Self::step(s, v)
            }
        }
    }
}

/// Sorted union of both profiles' breakpoints over `[0, max(S_f, S_g)]`.
pub fn union_grid(f: &VolumeProfile, g: &VolumeProfile) -> Vec<f64> {
    let end = f.total_volume().max(g.total_volume());
    let mut grid: Vec<f64> = f
        .breakpoints()
        .iter()
        .chain(g.breakpoints())
        .copied()
        .chain(std::iter::once(end))
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * end);
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_eval_and_integrals() {
        let f = VolumeProfile::uniform_step(vec![2.0, 1.0], 1.0).unwrap();
        assert_eq!(f.eval(0.0), 2.0);
        assert_eq!(f.eval(0.999), 2.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(2.0), 0.0);
        assert_eq!(f.integral_pow(2.0), 5.0);
        let g = f.extend_to(3.0);
        assert_eq!(g.total_volume(), 3.0);
        assert_eq!(g.integral_pow(1.0), 3.0);
    }

    #[test]
    fn nodal_eval() {
        let f = VolumeProfile::nodal(vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.eval(0.5), 1.5);
        assert_eq!(f.eval(2.0), 0.0);
        assert_eq!(f.eval(2.5), 0.0);
        assert!((f.integral_pow(1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_increasing() {
        assert!(matches!(
            VolumeProfile::nodal(vec![0.0, 1.0], vec![1.0, 2.0]),
            Err(Error::NotDecreasing { index: 1 })
        ));
        assert!(VolumeProfile::uniform_step(vec![1.0, -1.0], 1.0).is_err());
    }

    #[test]
    fn cumulative_on_union_grid_is_exact_for_steps() {
        let f = VolumeProfile::uniform_step(vec![1.0, 1.0], 1.0).unwrap();
        let g = VolumeProfile::step(vec![0.0, 0.5, 2.0], vec![3.0, 0.5]).unwrap();
        let grid = union_grid(&f, &g);
        assert_eq!(grid, vec![0.0, 0.5, 1.0, 2.0]);
        assert_eq!(g.cumulative_on(&grid, 1.0), vec![0.0, 1.5, 1.75, 2.25]);
    }

    #[test]
    fn rows_round_trip() {
        let f = VolumeProfile::uniform_step(vec![3.0, 2.0, 2.0], 0.5).unwrap();
        let back = VolumeProfile::from_rows(ProfileKind::Step, &f.rows()).unwrap();
        assert_eq!(back, f);
    }
}
