//! Extremal functions on balls.
//!
//! On a ball the positive extremal is radial and decreasing, so the
//! Euler–Lagrange equation `Δφ + Λφ^{p-1} = 0` reduces to the Lane–Emden-type
//! ODE `y'' + (n-1)/r·y' + y^{p-1} = 0`. Thanks to the scaling symmetry of
//! that equation, a single forward integration from `y(0) = 1` with `Λ = 1`
//! determines the extremal on every ball: the first zero `R₀` fixes the
//! radius and the rescaling `φ(r) = A·y(R₀ r)` fixes both the `L^p`
//! normalization and the multiplier `Λ = R₀²A^{2-p}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{alpha, check_admissible, unit_ball_volume};
use crate::profile::VolumeProfile;
use crate::quadrature::{gauss_legendre_panels, linspace};

/// Default number of stored samples on `[0, radius]`.
pub const DEFAULT_SAMPLES: usize = 2049;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    /// Relative and absolute tolerance of the adaptive integrator.
    pub tol: f64,
    /// Series start radius; `y(ε) = 1 - ε²/(2n)`.
    pub epsilon: f64,
    pub samples: usize,
    /// Integration gives up looking for a zero beyond this radius.
    pub max_radius: f64,
    /// Lift the `p <= 2` gate.
    pub allow_supercritical: bool,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            tol: 1e-12,
            epsilon: 1e-6,
            samples: DEFAULT_SAMPLES,
            max_radius: 1e4,
            allow_supercritical: false,
        }
    }
}

impl ShootOptions {
    pub fn with_tol(tol: f64) -> Self {
        ShootOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Unnormalized solution of `y'' + (n-1)/r·y' + y^{p-1} = 0`, `y(0) = 1`,
/// `y'(0) = 0`, sampled uniformly on `[0, R₀]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawShot {
    pub n: usize,
    pub p: f64,
    pub r_samples: Vec<f64>,
    pub y_samples: Vec<f64>,
    pub dy_samples: Vec<f64>,
    /// First zero of `y`.
    pub r0: f64,
    /// `n ω_n ∫₀^{R₀} y^p r^{n-1} dr`, integrated alongside the ODE.
    pub p_moment: f64,
}

/// `y^{p-1}` extended oddly past the zero, so RK stages that overshoot see
/// a continuous right-hand side and never take fractional powers of
/// negatives.
fn forcing(y: f64, p: f64) -> f64 {
    if p == 1.0 {
        1.0
    } else if p == 2.0 {
        y
    } else {
        y.signum() * y.abs().powf(p - 1.0)
    }
}

type State = [f64; 3];

struct LaneEmden {
    n: f64,
    p: f64,
}

impl LaneEmden {
    fn rhs(&self, r: f64, s: &State) -> State {
        let [y, v, _] = *s;
        [
            v,
            -(self.n - 1.0) / r * v - forcing(y, self.p),
            y.abs().powf(self.p) * r.powf(self.n - 1.0),
        ]
    }

    /// One Dormand–Prince 5(4) step; returns the 5th-order state and the
    /// embedded error estimate.
    fn step(&self, r: f64, s: &State, h: f64) -> (State, State) {
        const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
        const A: [[f64; 6]; 7] = [
            [0.0; 6],
            [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
                0.0,
                0.0,
            ],
            [
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
                0.0,
            ],
            [
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        const B: [f64; 7] = [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
            0.0,
        ];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];
        let mut k = [[0.0; 3]; 7];
        for i in 0..7 {
            let mut st = *s;
            for (j, kj) in k.iter().enumerate().take(i) {
                for c in 0..3 {
                    st[c] += h * A[i][j] * kj[c];
                }
            }
            k[i] = self.rhs(r + C[i] * h, &st);
        }
        let mut out = *s;
        let mut err = [0.0; 3];
        for c in 0..3 {
            for i in 0..7 {
                out[c] += h * B[i] * k[i][c];
                err[c] += h * (B[i] - B4[i]) * k[i][c];
            }
        }
        (out, err)
    }
}

fn error_norm(err: &State, old: &State, new: &State, tol: f64) -> f64 {
    let sum: f64 = (0..3)
        .map(|c| {
            let scale = tol + tol * old[c].abs().max(new[c].abs());
            (err[c] / scale).powi(2)
        })
        .sum();
    (sum / 3.0).sqrt()
}

/// Adaptive integration from `(r, s)` to `target`, or until `y` changes sign
/// when `stop_at_zero` is set. Returns the final radius and state, and the
/// last accepted step before the sign change (for zero bracketing).
struct Advance {
    r: f64,
    state: State,
    crossed: bool,
}

fn advance(
    sys: &LaneEmden,
    mut r: f64,
    mut s: State,
    target: f64,
    h: &mut f64,
    tol: f64,
    stop_at_zero: bool,
) -> Result<Advance> {
    let min_step = 1e-14 * target.max(1.0);
    while r < target {
        let mut step = h.min(target - r);
        let last = step >= target - r;
        let (new, err) = sys.step(r, &s, step);
        let e = error_norm(&err, &s, &new, tol);
        if e <= 1.0 {
            if stop_at_zero && new[0] <= 0.0 {
                return Ok(Advance {
                    r,
                    state: s,
                    crossed: true,
                });
            }
            r = if last { target } else { r + step };
            s = new;
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            if !last {
                *h = step * factor;
            } else {
                *h = h.max(step * factor);
            }
        } else {
            step *= (0.9 * e.powf(-0.2)).clamp(0.1, 1.0);
            *h = step;
        }
        if *h < min_step {
            return Err(Error::StepUnderflow { r });
        }
    }
    Ok(Advance {
        r,
        state: s,
        crossed: false,
    })
}

fn series_start(n: usize, eps: f64) -> State {
    let nf = n as f64;
    [
        1.0 - eps * eps / (2.0 * nf),
        -eps / nf,
        eps.powi(n as i32) / nf,
    ]
}

/// Integrates the radial ODE with `Λ = 1` up to its first zero.
pub fn shoot(n: usize, p: f64, opts: &ShootOptions) -> Result<RawShot> {
    check_admissible(n, p)?;
    if p > 2.0 && !opts.allow_supercritical {
        return Err(Error::Supercritical { p });
    }
    if !(opts.tol > 0.0) || opts.samples < 5 || !(opts.epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("bad shoot options {opts:?}")));
    }
    let sys = LaneEmden { n: n as f64, p };
    let tol = opts.tol;

    // Pass 1: march until y changes sign, then bisect inside the bracketing step.
    let mut h = 1e-3;
    let start = series_start(n, opts.epsilon);
    let found = advance(&sys, opts.epsilon, start, opts.max_radius, &mut h, tol, true)?;
    if !found.crossed {
        return Err(Error::NoZeroFound {
            n,
            p,
            max_radius: opts.max_radius,
        });
    }
    let (r_k, s_k) = (found.r, found.state);
    // the step of length h from r_k was accepted and ends at y <= 0; shorter
    // single steps from r_k are at least as accurate
    let (mut lo, mut hi) = (0.0, h);
    while hi - lo > 1e-13 * (r_k + hi) {
        let mid = 0.5 * (lo + hi);
        let (new, _) = sys.step(r_k, &s_k, mid);
        if new[0] > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r0 = r_k + 0.5 * (lo + hi);
    let (at_zero, _) = sys.step(r_k, &s_k, 0.5 * (lo + hi));
    let omega = unit_ball_volume(n)?;
    let p_moment = n as f64 * omega * at_zero[2];

    // Pass 2: re-integrate onto the uniform output grid.
    let r_samples = linspace(0.0, r0, opts.samples);
    let mut y_samples = vec![1.0];
    let mut dy_samples = vec![0.0];
    let mut r = opts.epsilon;
    let mut s = start;
    let mut h = 1e-3;
    for &target in &r_samples[1..] {
        let next = advance(&sys, r, s, target, &mut h, tol, false)?;
        r = next.r;
        s = next.state;
        y_samples.push(s[0]);
        dy_samples.push(s[1]);
    }
    *y_samples.last_mut().unwrap() = 0.0;

    Ok(RawShot {
        n,
        p,
        r_samples,
        y_samples,
        dy_samples,
        r0,
        p_moment,
    })
}

impl RawShot {
    /// Max ODE residual over interior samples, with `y''` from a fourth-order
    /// central difference of the stored `y'`. Samples within `skip` of either
    /// end are ignored.
    pub fn max_residual(&self, skip: usize) -> f64 {
        let m = self.r_samples.len();
        let dr = self.r_samples[1] - self.r_samples[0];
        let d = &self.dy_samples;
        let skip = skip.max(2);
        (skip..m.saturating_sub(skip))
            .map(|i| {
                let ypp = (-d[i + 2] + 8.0 * d[i + 1] - 8.0 * d[i - 1] + d[i - 2]) / (12.0 * dr);
                let r = self.r_samples[i];
                (ypp + (self.n as f64 - 1.0) / r * d[i] + forcing(self.y_samples[i], self.p)).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.y_samples.windows(2).all(|w| w[1] < w[0])
    }
}

/// The normalized extremal `φ` on the ball of radius `radius`:
/// `‖φ‖_{L^p} = 1`, `Δφ + Λφ^{p-1} = 0`, and `Λ = C_p(ball)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub n: usize,
    pub p: f64,
    pub radius: f64,
    /// `φ` on the uniform grid `r_i = radius·i/(m-1)`.
    pub phi: Vec<f64>,
    /// `dφ/dr` on the same grid.
    pub dphi: Vec<f64>,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub cp_ball: f64,
}

/// Normalizes a shot on the unit ball.
pub fn normalize_to_unit_ball(shot: &RawShot) -> Result<RadialProfile> {
    normalize_to_ball(shot, 1.0)
}

/// Normalizes a shot on the ball of radius `radius`:
/// `φ(r) = A·y(R₀ r/ρ)` with `A = (R₀ⁿ/(ρⁿ I))^{1/p}` and
/// `Λ = (R₀/ρ)²A^{2-p}`.
pub fn normalize_to_ball(shot: &RawShot, radius: f64) -> Result<RadialProfile> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("ball radius {radius}")));
    }
    if !(shot.p_moment > 0.0 && shot.p_moment.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "shot has non-positive p-moment {}",
            shot.p_moment
        )));
    }
    let (n, p) = (shot.n, shot.p);
    let stretch = shot.r0 / radius;
    let amp = (stretch.powi(n as i32) / shot.p_moment).powf(1.0 / p);
    let lambda = stretch * stretch * amp.powf(2.0 - p);
    Ok(RadialProfile {
        n,
        p,
        radius,
        phi: shot.y_samples.iter().map(|y| amp * y).collect(),
        dphi: shot.dy_samples.iter().map(|dy| amp * stretch * dy).collect(),
        lambda,
        cp_ball: lambda,
    })
}

/// `C_p` of the unit ball in `ℝⁿ`.
pub fn cp_unit_ball(n: usize, p: f64) -> Result<f64> {
    Ok(unit_ball_profile(n, p, &ShootOptions::default())?.cp_ball)
}

pub fn unit_ball_profile(n: usize, p: f64, opts: &ShootOptions) -> Result<RadialProfile> {
    normalize_to_unit_ball(&shoot(n, p, opts)?)
}

impl RadialProfile {
    fn spacing(&self) -> f64 {
        self.radius / (self.phi.len() - 1) as f64
    }

    fn second_derivative(&self, i: usize) -> f64 {
        let nf = self.n as f64;
        let g = forcing(self.phi[i], self.p);
        if i == 0 {
            -self.lambda * g / nf
        } else {
            let r = i as f64 * self.spacing();
            -(nf - 1.0) / r * self.dphi[i] - self.lambda * g
        }
    }

    fn hermite(&self, r: f64, f: impl Fn(usize) -> (f64, f64)) -> f64 {
        let h = self.spacing();
        let x = r / h;
        let i = (x.floor() as usize).min(self.phi.len() - 2);
        let t = x - i as f64;
        let (f0, d0) = f(i);
        let (f1, d1) = f(i + 1);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * h * d1
    }

    /// `φ(r)` by cubic Hermite interpolation of the stored values and
    /// slopes; zero outside the ball.
    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        self.hermite(r.abs(), |i| (self.phi[i], self.dphi[i])).max(0.0)
    }

    /// `dφ/dr`, interpolated with `φ''` taken from the ODE.
    pub fn eval_derivative(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        self.hermite(r.abs(), |i| (self.dphi[i], self.second_derivative(i)))
    }

    fn radial_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        let nf = self.n as f64;
        let omega = unit_ball_volume(self.n).expect("n >= 2");
        let edges = linspace(0.0, self.radius, self.phi.len());
        nf * omega * gauss_legendre_panels(&edges, |r| f(r) * r.powf(nf - 1.0))
    }

    /// `∫_B φ^q dm`.
    pub fn power_integral(&self, q: f64) -> f64 {
        self.radial_integral(|r| self.eval(r).powf(q))
    }

    pub fn lq_norm(&self, q: f64) -> f64 {
        self.power_integral(q).powf(1.0 / q)
    }

    /// `∫_B |∇φ|² dm`.
    pub fn dirichlet_energy(&self) -> f64 {
        self.radial_integral(|r| self.eval_derivative(r).powi(2))
    }

    /// The Sobolev quotient of `φ`, evaluated by quadrature.
    pub fn quotient(&self) -> f64 {
        self.dirichlet_energy() / self.power_integral(self.p).powf(2.0 / self.p)
    }

    /// The normalized extremal of the ball of radius `radius`:
    /// `φ_ρ(x) = (ρ/ρ₀)^{-n/p} φ(x ρ₀/ρ)`, with `Λ` rescaled by `(ρ/ρ₀)^α`.
    pub fn rescale(&self, radius: f64) -> Result<RadialProfile> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius {radius}")));
        }
        let k = radius / self.radius;
        let amp = k.powf(-(self.n as f64) / self.p);
        let lambda = self.lambda * k.powf(alpha(self.n, self.p)?);
        Ok(RadialProfile {
            n: self.n,
            p: self.p,
            radius,
            phi: self.phi.iter().map(|v| amp * v).collect(),
            dphi: self.dphi.iter().map(|d| amp / k * d).collect(),
            lambda,
            cp_ball: lambda,
        })
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.phi.windows(2).all(|w| w[1] < w[0])
    }

    /// `(r_i, φ_i)` rows for serialization.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        let h = self.spacing();
        self.phi
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64 * h, *v))
            .collect()
    }
}

/// `φ*(s)` on a uniform `s`-grid over `[0, ω_n ρⁿ]`, where `φ` is the
/// normalized extremal of the ball of radius `ρ = radius` and
/// `φ(x) = φ*(ω_n|x|ⁿ)`.
pub fn volume_profile(profile: &RadialProfile, radius: f64, samples: usize) -> Result<VolumeProfile> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "volume profile needs a positive radius, got {radius}"
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let ball = if radius == profile.radius {
        profile.clone()
    } else {
        profile.rescale(radius)?
    };
    let n = profile.n as f64;
    let omega = unit_ball_volume(profile.n)?;
    let s = linspace(0.0, omega * radius.powf(n), samples);
    let mut values: Vec<f64> = s
        .iter()
        .map(|&si| ball.eval((si / omega).powf(1.0 / n)))
        .collect();
    values[0] = ball.phi[0];
    *values.last_mut().unwrap() = 0.0;
    // interpolation may leave ulp-level bumps on flat stretches
    for i in 1..values.len() {
        values[i] = values[i].min(values[i - 1]);
    }
    VolumeProfile::nodal(s, values)
}

/// Max over `s >= s_min` of `|(φ*)'(s) - RHS(s)|`, where
/// `RHS = -C n^{-2} ω_n^{-2/n} s^{-2+2/n} ∫₀^s (φ*)^{p-1}` and `(φ*)'` is a
/// backward difference. Vanishes (to discretization error) exactly when
/// `φ*` is the volume profile of a ball extremal with constant `cp`.
pub fn verify_integro_differential(
    vp: &VolumeProfile,
    cp: f64,
    n: usize,
    p: f64,
    s_min: f64,
) -> Result<f64> {
    let s = vp.breakpoints();
    let v = vp.values();
    if vp.kind() != crate::profile::ProfileKind::Nodal {
        return Err(Error::InvalidArgument(
            "integro-differential check expects a nodal profile".into(),
        ));
    }
    let nf = n as f64;
    let prefactor = cp / (nf * nf) * unit_ball_volume(n)?.powf(-2.0 / nf);
    let cumulative = vp.cumulative_on(s, p - 1.0);
    let mut worst = 0.0f64;
    for i in 1..s.len() {
        if s[i] < s_min || v[i] == 0.0 && v[i - 1] == 0.0 {
            continue;
        }
        let lhs = (v[i] - v[i - 1]) / (s[i] - s[i - 1]);
        let rhs = -prefactor * s[i].powf(-2.0 + 2.0 / nf) * cumulative[i];
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
