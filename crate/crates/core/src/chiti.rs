//! The comparison ball, the single-crossing analysis of `u*` against the
//! ball profile `φ*`, the sharp constant `K(n,p,q,C_p)` and the reverse
//! Hölder verification report.
//!
//! The comparison ball `B*` is the ball with `C_p(B*) = C_p(Ω)`. Its
//! normalized extremal `φ` and the domain extremal `u` share the
//! normalization `‖φ‖_p = ‖u‖_p = 1`; the reverse Hölder inequality
//! `‖u‖_p >= K‖u‖_q` holds with `K = ‖φ‖_p / ‖φ‖_q`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::elliptic::SobolevResult;
use crate::error::{Error, Result, StageExt};
use crate::exponents::{alpha, check_admissible, unit_ball_volume, Exponents};
use crate::profile::{union_grid, VolumeProfile};
use crate::radial::{unit_ball_profile, volume_profile, RadialProfile, ShootOptions};
use crate::rearrange::decreasing_rearrangement;

/// Samples of `φ*` on `[0, |B*|]` used by the pipeline.
pub const PHI_STAR_SAMPLES: usize = 8193;

/// Tolerance on `‖u*‖_p^p = ‖φ*‖_p^p` (relative).
pub const NORMALIZATION_TOL: f64 = 1e-5;

/// The ball `B*` with `C_p(B*) = C_p(Ω)` and its volume profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonBall {
    pub n: usize,
    pub p: f64,
    pub rho: f64,
    pub cp: f64,
    /// `|B*| = ω_n ρⁿ`.
    pub ball_volume: f64,
    /// Normalized extremal of `B*`.
    pub extremal: RadialProfile,
    /// `φ*` on `[0, |B*|]`, extended by zero to `[0, |Ω|]`.
    pub phi_star: VolumeProfile,
}

/// `ρ = (C_p(Ω)/C_p(B))^{1/α}` from the unit-ball extremal `unit`.
pub fn comparison_radius(unit: &RadialProfile, cp_omega: f64) -> Result<f64> {
    if !(cp_omega > 0.0 && cp_omega.is_finite()) {
        return Err(Error::InvalidArgument(format!("C_p = {cp_omega}")));
    }
    let a = alpha(unit.n, unit.p)?;
    Ok((cp_omega / unit.cp_ball).powf(1.0 / a))
}

/// Builds `B*` for a domain of volume `total_volume`. `fk_tol` is the
/// relative slack allowed on `|B*| <= |Ω|`.
pub fn comparison_ball(cp_omega: f64, n: usize, p: f64, total_volume: f64, fk_tol: f64) -> Result<ComparisonBall> {
    let unit = unit_ball_profile(n, p, &ShootOptions::default())?;
    comparison_ball_from(&unit, cp_omega, total_volume, fk_tol, PHI_STAR_SAMPLES)
}

/// [`comparison_ball`] with a precomputed unit-ball extremal.
pub fn comparison_ball_from(
    unit: &RadialProfile,
    cp_omega: f64,
    total_volume: f64,
    fk_tol: f64,
    samples: usize,
) -> Result<ComparisonBall> {
    if !(total_volume > 0.0 && total_volume.is_finite()) {
        return Err(Error::InvalidArgument(format!("domain volume {total_volume}")));
    }
    let rho = comparison_radius(unit, cp_omega)?;
    let ball_volume = unit_ball_volume(unit.n)? * rho.powi(unit.n as i32);
    if ball_volume > total_volume * (1.0 + fk_tol) {
        return Err(Error::FaberKrahnViolated {
            ball_volume,
            domain_volume: total_volume,
        });
    }
    let extremal = unit.rescale(rho)?;
    let phi_star = volume_profile(&extremal, rho, samples)?.extend_to(total_volume);
    Ok(ComparisonBall {
        n: unit.n,
        p: unit.p,
        rho,
        cp: cp_omega,
        ball_volume,
        extremal,
        phi_star,
    })
}

/// Outcome of comparing `u*` with `φ*` in the volume variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingAnalysis {
    /// Last downward crossing of `D = φ* - u*`; `None` for identical profiles.
    pub s1: Option<f64>,
    pub crossing_count: usize,
    pub band: f64,
    /// The equality case: `u*` and `φ*` are the same profile up to grid error.
    pub identical: bool,
    /// `max |D|` over the whole interval.
    pub max_difference: f64,
    /// `(s, D(s))` on the common grid.
    #[serde(skip)]
    pub difference: Vec<(f64, f64)>,
}

/// Default noise band: twice the lattice noise of `u*`, measured as the
/// largest deviation of `u*` from its centered running mean over
/// `noise_window(cells)` cells.
pub fn default_band(u_star: &VolumeProfile) -> f64 {
    let v = u_star.values();
    let w = noise_window(v.len());
    (2.0 * running_mean_deviation(v, w)).max(1e-12 * u_star.max_value())
}

/// Window for [`default_band`]: about `2√cells`, wider than one ring of
/// lattice ties near the maximum yet short against the profile's scale.
pub fn noise_window(cells: usize) -> usize {
    (2.0 * (cells as f64).sqrt()).round() as usize | 1
}

fn running_mean_deviation(v: &[f64], w: usize) -> f64 {
    let m = v.len();
    if w >= m {
        return 0.0;
    }
    let half = w / 2;
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(0.0);
    for x in v {
        prefix.push(prefix.last().unwrap() + x);
    }
    (half..m - half)
        .map(|i| (v[i] - (prefix[i + half + 1] - prefix[i - half]) / w as f64).abs())
        .fold(0.0, f64::max)
}

fn difference(u_star: &VolumeProfile, phi_star: &VolumeProfile) -> Vec<(f64, f64)> {
    union_grid(u_star, phi_star)
        .into_iter()
        .map(|s| (s, phi_star.eval(s) - u_star.eval(s)))
        .collect()
}

/// Counts sign changes of `D = φ* - u*` after zeroing `|D| < band`.
/// `identical` short-circuits the count for the equality case.
pub fn crossing_analysis(u_star: &VolumeProfile, ball: &ComparisonBall, band: f64, identical: bool) -> Result<CrossingAnalysis> {
    let diff = difference(u_star, &ball.phi_star);
    let max_difference = diff.iter().map(|(_, d)| d.abs()).fold(0.0, f64::max);
    let identical = identical || max_difference < band;
    if identical {
        return Ok(CrossingAnalysis {
            s1: None,
            crossing_count: 0,
            band,
            identical: true,
            max_difference,
            difference: diff,
        });
    }
    // signs of the suppressed signal, zeros skipped
    let mut crossings = 0;
    let mut last_sign = 0i8;
    let mut last_positive = None;
    let mut down = None;
    for (i, &(_, d)) in diff.iter().enumerate() {
        let sign = if d > band {
            1
        } else if d < -band {
            -1
        } else {
            continue;
        };
        if last_sign != 0 && sign != last_sign {
            crossings += 1;
            if sign < 0 {
                down = last_positive.map(|a| (a, i));
            }
        }
        if sign > 0 {
            last_positive = Some(i);
        }
        last_sign = sign;
    }
    let fail = |reason: &str, crossings| Error::Crossing {
        reason: reason.into(),
        crossings,
        difference: diff.clone(),
    };
    if crossings == 0 {
        let reason = if last_sign < 0 {
            "u* exceeds phi* everywhere, impossible under a shared L^p normalization"
        } else {
            "phi* exceeds u* everywhere, impossible under a shared L^p normalization"
        };
        return Err(fail(reason, 0));
    }
    if crossings != 1 {
        return Err(fail("expected a single crossing", crossings));
    }
    let Some((a, b)) = down else {
        return Err(fail("the only crossing is upward", crossings));
    };
    // zero of the running mean of D inside the last positive-to-negative
    // stretch; raw D jitters across zero there
    let half = noise_window(u_star.values().len()) / 2;
    let mean = |k: usize| {
        let (lo, hi) = (k.saturating_sub(half), (k + half).min(diff.len() - 1));
        diff[lo..=hi].iter().map(|(_, d)| d).sum::<f64>() / (hi - lo + 1) as f64
    };
    let smooth: Vec<f64> = (a..=b).map(mean).collect();
    let k = (0..smooth.len() - 1).rev().find(|&k| smooth[k] >= 0.0 && smooth[k + 1] < 0.0).unwrap_or(0);
    let (s0, d0) = (diff[a + k].0, smooth[k]);
    let (s1, d1) = (diff[a + k + 1].0, smooth[k + 1]);
    let s1 = if d0 > d1 { s0 + (s1 - s0) * d0 / (d0 - d1) } else { s0 };
    Ok(CrossingAnalysis {
        s1: Some(s1),
        crossing_count: 1,
        band,
        identical: false,
        max_difference,
        difference: diff,
    })
}

/// `I(s) = ∫₀^s (φ*)^p - ∫₀^s (u*)^p` on the common grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub min: f64,
    pub at: f64,
    pub start: f64,
    pub end: f64,
    #[serde(skip)]
    pub profile: Vec<(f64, f64)>,
}

pub fn dominance_check(u_star: &VolumeProfile, ball: &ComparisonBall, p: f64) -> Result<Dominance> {
    let grid = union_grid(u_star, &ball.phi_star);
    let cu = u_star.cumulative_on(&grid, p);
    let cf = ball.phi_star.cumulative_on(&grid, p);
    let (tu, tf) = (*cu.last().unwrap(), *cf.last().unwrap());
    if (tu - tf).abs() > NORMALIZATION_TOL * tu.max(tf) {
        return Err(Error::NormalizationMismatch { domain: tu, ball: tf });
    }
    let profile: Vec<(f64, f64)> = grid.iter().zip(cf.iter().zip(&cu)).map(|(s, (f, u))| (*s, f - u)).collect();
    let (at, min) = profile
        .iter()
        .copied()
        .fold((0.0, f64::INFINITY), |acc, (s, i)| if i < acc.1 { (s, i) } else { acc });
    Ok(Dominance {
        min,
        at,
        start: profile[0].1,
        end: profile.last().unwrap().1,
        profile,
    })
}

/// `K̂(n,p,q) = ‖ψ‖_p/‖ψ‖_q · C_p(B)^{-e}` with `ψ` the unit-ball extremal
/// and `e = (n/α)(1/p - 1/q)`, so that `K = K̂·C_p(Ω)^e`.
pub fn khat_from(unit: &RadialProfile, q: f64) -> Result<f64> {
    let e = Exponents::new(unit.n, unit.p, q)?.constant_exponent();
    Ok(unit.lq_norm(unit.p) / unit.lq_norm(q) * unit.cp_ball.powf(-e))
}

pub fn khat(n: usize, p: f64, q: f64) -> Result<f64> {
    khat_from(&unit_ball_profile(n, p, &ShootOptions::default())?, q)
}

/// Agreement required between the two evaluations of `K`.
pub const K_AGREEMENT: f64 = 1e-8;

/// `K` as the norm ratio of the extremal of `B*`, checked against
/// `K̂·C_p^e`.
pub fn constant_k_from(unit: &RadialProfile, q: f64, cp_omega: f64) -> Result<f64> {
    let e = Exponents::new(unit.n, unit.p, q)?.constant_exponent();
    let rho = comparison_radius(unit, cp_omega)?;
    let ball = unit.rescale(rho)?;
    let direct = ball.lq_norm(unit.p) / ball.lq_norm(q);
    let scaled = khat_from(unit, q)? * cp_omega.powf(e);
    if !((direct - scaled).abs() <= K_AGREEMENT * direct) {
        return Err(Error::InvalidArgument(format!(
            "constant evaluations disagree: direct {direct}, scaled {scaled}"
        )));
    }
    Ok(direct)
}

#[allow(non_snake_case)]
pub fn constant_K(n: usize, p: f64, q: f64, cp_omega: f64) -> Result<f64> {
    constant_k_from(&unit_ball_profile(n, p, &ShootOptions::default())?, q, cp_omega)
}

/// The `p = 1` constant written through the torsional rigidity
/// `P = 4/C₁`: `K = K̂_P · P^e` with `e = n/(n+2)·(1 - 1/q)`. The factor
/// `4^{-e}` is absorbed into `K̂_P = K̂·4^{-e}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorsionForm {
    pub rigidity: f64,
    pub exponent: f64,
    /// `4^{-e}`.
    pub absorbed: f64,
    pub khat: f64,
    pub khat_torsion: f64,
    pub constant: f64,
}

pub fn torsion_form_from(unit: &RadialProfile, q: f64, cp1_omega: f64) -> Result<TorsionForm> {
    if unit.p != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "torsion form needs p = 1, got {}",
            unit.p
        )));
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("need q >= p = 1, got {q}")));
    }
    let nf = unit.n as f64;
    let rigidity = 4.0 / cp1_omega;
    let exponent = nf / (nf + 2.0) * (1.0 - 1.0 / q);
    let absorbed = 4f64.powf(-exponent);
    let khat = khat_from(unit, q)?;
    let khat_torsion = khat * absorbed;
    let constant = khat_torsion * rigidity.powf(exponent);
    let reference = constant_k_from(unit, q, cp1_omega)?;
    if !((constant - reference).abs() <= 1e-12 * reference) {
        return Err(Error::InvalidArgument(format!(
            "torsion form {constant} disagrees with K = {reference}"
        )));
    }
    Ok(TorsionForm {
        rigidity,
        exponent,
        absorbed,
        khat,
        khat_torsion,
        constant,
    })
}

pub fn torsion_form(n: usize, q: f64, cp1_omega: f64) -> Result<TorsionForm> {
    torsion_form_from(&unit_ball_profile(n, 1.0, &ShootOptions::default())?, q, cp1_omega)
}

/// Tolerances of the verification pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// Margins must be at least `-margin_rel·‖u‖_p`.
    pub margin_rel: f64,
    /// `τ_I = dominance_factor·h`.
    pub dominance_factor: f64,
    /// `τ_FK = fk_factor·h/R`, `R` the radius of `Ω*`.
    pub fk_factor: f64,
    /// Fixed crossing band; `None` uses [`default_band`].
    pub band: Option<f64>,
    pub phi_samples: usize,
    pub allow_supercritical: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            margin_rel: 1e-3,
            dominance_factor: 5.0,
            fk_factor: 1.0,
            band: None,
            phi_samples: PHI_STAR_SAMPLES,
            allow_supercritical: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QRow {
    pub q: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub khat: f64,
    pub norm_q: f64,
    pub rhs: f64,
    pub margin: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub margin: f64,
    pub dominance: f64,
    pub faber_krahn: f64,
    pub band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseHolderReport {
    pub domain: Option<DomainSpec>,
    pub n: usize,
    pub p: f64,
    pub q: Vec<f64>,
    pub h: f64,
    pub cp_omega: f64,
    pub rho: f64,
    pub ball_volume: f64,
    pub domain_volume: f64,
    pub equality_case: bool,
    /// `‖u‖_p`.
    pub lhs: f64,
    pub rows: Vec<QRow>,
    pub crossing: CrossingAnalysis,
    pub dominance: Dominance,
    pub torsion: Option<Vec<TorsionForm>>,
    pub tolerances: Tolerances,
    pub passed: bool,
}

impl ReverseHolderReport {
    pub fn status(&self) -> &'static str {
        match (self.passed, self.equality_case) {
            (true, true) => "equality case (ball)",
            (true, false) => "strict inequality",
            (false, _) => "FAILED",
        }
    }

    /// Aligned human-readable table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let label = self.domain.as_ref().map_or("grid".to_string(), |d| d.label());
        let _ = writeln!(out, "domain      {label}");
        let _ = writeln!(out, "n, p, h     {}, {}, {}", self.n, self.p, self.h);
        let _ = writeln!(out, "C_p(Omega)  {:.10}", self.cp_omega);
        let _ = writeln!(
            out,
            "B*          rho = {:.8}, |B*| = {:.8}, |Omega| = {:.8}",
            self.rho, self.ball_volume, self.domain_volume
        );
        match self.crossing.s1 {
            Some(s1) => {
                let _ = writeln!(
                    out,
                    "crossing    count = {}, s1 = {:.8}, band = {:.3e}",
                    self.crossing.crossing_count, s1, self.crossing.band
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "crossing    identical profiles, max|D| = {:.3e}",
                    self.crossing.max_difference
                );
            }
        }
        let _ = writeln!(
            out,
            "dominance   min I = {:.3e} at s = {:.6}, tol = {:.3e}",
            self.dominance.min, self.dominance.at, self.tolerances.dominance
        );
        let _ = writeln!(out, "||u||_p     {:.12}", self.lhs);
        let _ = writeln!(
            out,
            "{:>8}  {:>16}  {:>16}  {:>16}  {:>16}  {:>13}  {}",
            "q", "K", "Khat", "||u||_q", "K||u||_q", "margin", "ok"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>8}  {:>16.12}  {:>16.12}  {:>16.12}  {:>16.12}  {:>13.6e}  {}",
                r.q, r.k, r.khat, r.norm_q, r.rhs, r.margin, r.ok
            );
        }
        let _ = writeln!(out, "status      {}", self.status());
        out
    }
}

/// Runs rearrangement, comparison ball, crossing and dominance analysis and
/// the per-`q` inequality on a solved extremal. Errors carry the failing
/// stage.
pub fn verify_reverse_holder(result: &SobolevResult, q_list: &[f64], config: &VerifyConfig) -> Result<ReverseHolderReport> {
    let (n, p) = (result.n, result.p);
    check_admissible(n, p).stage("input")?;
    if p > 2.0 && !config.allow_supercritical {
        return Err(Error::Supercritical { p }.at_stage("input"));
    }
    if q_list.is_empty() {
        return Err(Error::InvalidArgument("empty q list".into()).at_stage("input"));
    }
    if let Some(q) = q_list.iter().find(|q| !(**q >= p)) {
        return Err(Error::InvalidArgument(format!("need q >= p = {p}, got {q}")).at_stage("input"));
    }
    let mut qs = q_list.to_vec();
    qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    qs.dedup();

    let field = &result.field;
    let h = field.h;
    let u_star = decreasing_rearrangement(field).stage("rearrange")?;
    let domain_volume = u_star.total_volume();
    let omega = unit_ball_volume(n)?;
    let equivalent_radius = (domain_volume / omega).powf(1.0 / n as f64);
    let fk_tol = config.fk_factor * h / equivalent_radius;

    let shoot = ShootOptions {
        allow_supercritical: config.allow_supercritical,
        ..Default::default()
    };
    let unit = unit_ball_profile(n, p, &shoot).stage("ball extremal")?;
    let ball = comparison_ball_from(&unit, result.cp, domain_volume, fk_tol, config.phi_samples)
        .stage("comparison ball")?;
    let equality_case = ball.ball_volume >= domain_volume * (1.0 - fk_tol);
    let band = config.band.unwrap_or_else(|| default_band(&u_star));
    let crossing = crossing_analysis(&u_star, &ball, band, equality_case).stage("crossing")?;
    let dominance = dominance_check(&u_star, &ball, p).stage("dominance")?;

    let lhs = u_star.integral_pow(p).powf(1.0 / p);
    // in the equality case the margin is only determined up to the O(h)
    // volume mismatch between the staircase and the ball
    let margin_tol = if equality_case { fk_tol * lhs } else { config.margin_rel * lhs };
    let rows = qs
        .iter()
        .map(|&q| {
            let k = constant_k_from(&unit, q, result.cp)?;
            let khat = khat_from(&unit, q)?;
            let norm_q = u_star.integral_pow(q).powf(1.0 / q);
            let rhs = k * norm_q;
            let margin = lhs - rhs;
            let ok = if equality_case { margin.abs() <= margin_tol } else { margin >= -margin_tol };
            Ok(QRow { q, k, khat, norm_q, rhs, margin, ok })
        })
        .collect::<Result<Vec<_>>>()
        .stage("constant")?;
    let torsion = if p == 1.0 {
        Some(
            qs.iter()
                .map(|&q| torsion_form_from(&unit, q, result.cp))
                .collect::<Result<Vec<_>>>()
                .stage("torsion form")?,
        )
    } else {
        None
    };
    let dominance_tol = config.dominance_factor * h;
    let crossing_ok = crossing.identical && equality_case
        || crossing.crossing_count == 1 && crossing.s1.is_some_and(|s| s > 0.0 && s < ball.ball_volume);
    let passed = rows.iter().all(|r| r.ok) && crossing_ok && dominance.min >= -dominance_tol;
    Ok(ReverseHolderReport {
        domain: field.domain.clone(),
        n,
        p,
        q: qs,
        h,
        cp_omega: result.cp,
        rho: ball.rho,
        ball_volume: ball.ball_volume,
        domain_volume,
        equality_case,
        lhs,
        rows,
        crossing,
        dominance,
        torsion,
        tolerances: Tolerances {
            margin: margin_tol,
            dominance: dominance_tol,
            faber_krahn: fk_tol,
            band,
        },
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::cp_unit_ball;
    use std::f64::consts::PI;

    fn torsion_unit() -> RadialProfile {
        unit_ball_profile(2, 1.0, &ShootOptions::default()).unwrap()
    }

    #[test]
    fn unit_ball_is_its_own_comparison_ball() {
        let cp = cp_unit_ball(2, 2.0).unwrap();
        let b = comparison_ball(cp, 2, 2.0, PI, 1e-6).unwrap();
        assert!((b.rho - 1.0).abs() < 1e-12);
        assert!((b.ball_volume - PI).abs() < 1e-11);
    }

    #[test]
    fn radius_two_round_trip() {
        let cp = (8.0 / PI) / 16.0;
        let b = comparison_ball(cp, 2, 1.0, 4.0 * PI, 1e-6).unwrap();
        assert!((b.rho - 2.0).abs() < 1e-10);
        assert!((b.phi_star.integral_pow(1.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn square_comparison_ball() {
        // C_2 of the unit square is 2π², the unit disk's is j₀²
        let j0 = 2.404825557695773f64;
        let b = comparison_ball(2.0 * PI * PI, 2, 2.0, 1.0, 0.0).unwrap();
        assert!((b.rho - j0 / (2.0f64.sqrt() * PI)).abs() < 1e-9);
        assert!((b.rho - 0.5412).abs() < 1e-4);
        assert!((b.ball_volume - j0 * j0 / (2.0 * PI)).abs() < 1e-9);
        assert!((b.ball_volume - 0.9204).abs() < 1e-4);
        assert_eq!(b.phi_star.total_volume(), 1.0);
        assert_eq!(b.phi_star.eval(0.95), 0.0);
    }

    #[test]
    fn faber_krahn_violation_is_reported() {
        let cp = cp_unit_ball(2, 2.0).unwrap();
        let err = comparison_ball(cp, 2, 2.0, 3.0, 1e-3).unwrap_err();
        assert!(matches!(err, Error::FaberKrahnViolated { .. }));
    }

    #[test]
    fn k_equals_one_for_q_equal_p() {
        for p in [1.0, 1.5, 2.0] {
            let k = constant_K(2, p, p, 7.0).unwrap();
            assert!((k - 1.0).abs() < 1e-12, "p = {p}: {k}");
        }
    }

    #[test]
    fn hand_value_for_torsion_disk() {
        let k = constant_K(2, 1.0, 2.0, 8.0 / PI).unwrap();
        assert!((k - (3.0 * PI).sqrt() / 2.0).abs() < 1e-6, "{k}");
    }

    #[test]
    fn doubling_cp_scales_k() {
        let unit = torsion_unit();
        let a = constant_k_from(&unit, 2.0, 3.0).unwrap();
        let b = constant_k_from(&unit, 2.0, 6.0).unwrap();
        assert!((b / a - 2f64.powf(-0.25)).abs() < 1e-12);
    }

    #[test]
    fn q_below_p_rejected() {
        assert!(constant_K(2, 2.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn torsion_form_of_unit_disk() {
        let t = torsion_form(2, 2.0, 8.0 / PI).unwrap();
        assert!((t.rigidity - PI / 2.0).abs() < 1e-15);
        assert!((t.exponent - 0.25).abs() < 1e-15);
        let t1 = torsion_form(2, 1.0, 8.0 / PI).unwrap();
        assert_eq!(t1.exponent, 0.0);
        assert!((t1.constant - 1.0).abs() < 1e-12);
    }

    fn ball_like(ball: &ComparisonBall) -> VolumeProfile {
        let s: Vec<f64> = ball.phi_star.breakpoints().to_vec();
        let v: Vec<f64> = s.iter().map(|&x| ball.phi_star.eval(x)).collect();
        VolumeProfile::nodal(s, v).unwrap()
    }

    #[test]
    fn identical_profiles_are_degenerate() {
        let ball = comparison_ball(8.0 / PI, 2, 1.0, PI, 1e-6).unwrap();
        let u = ball_like(&ball);
        let c = crossing_analysis(&u, &ball, 1e-9, false).unwrap();
        assert!(c.identical);
        let d = dominance_check(&u, &ball, 1.0).unwrap();
        assert!(d.min.abs() < 1e-12 && d.start == 0.0 && d.end.abs() < 1e-12);
    }

    #[test]
    fn dominating_profile_is_a_contradiction() {
        let ball = comparison_ball(8.0 / PI, 2, 1.0, PI, 1e-6).unwrap();
        let s = ball.phi_star.breakpoints().to_vec();
        let v: Vec<f64> = s.iter().map(|&x| 1.1 * ball.phi_star.eval(x) + 0.01).collect();
        let u = VolumeProfile::nodal(s, v).unwrap();
        match crossing_analysis(&u, &ball, 1e-9, false).unwrap_err() {
            Error::Crossing { crossings, reason, difference } => {
                assert_eq!(crossings, 0);
                assert!(reason.contains("u* exceeds"));
                assert!(!difference.is_empty());
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn single_crossing_located() {
        // u* = 1/|B*| flat on the ball: same L^1 mass as the torsion φ*
        let ball = comparison_ball(8.0 / PI, 2, 1.0, PI, 1e-6).unwrap();
        let u = VolumeProfile::step(vec![0.0, PI], vec![1.0 / PI]).unwrap();
        let c = crossing_analysis(&u, &ball, 1e-9, false).unwrap();
        assert_eq!(c.crossing_count, 1);
        // φ*(s) = (2/π)(1 - s/π) meets 1/π at s = π/2
        assert!((c.s1.unwrap() - PI / 2.0).abs() < 1e-3);
        let d = dominance_check(&u, &ball, 1.0).unwrap();
        assert!(d.min >= -1e-12);
    }

    #[test]
    fn normalization_mismatch_rejected() {
        let ball = comparison_ball(8.0 / PI, 2, 1.0, PI, 1e-6).unwrap();
        let u = VolumeProfile::step(vec![0.0, PI], vec![2.0 / PI]).unwrap();
        assert!(matches!(
            dominance_check(&u, &ball, 1.0),
            Err(Error::NormalizationMismatch { .. })
        ));
    }
}
