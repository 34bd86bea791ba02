//! One-dimensional autonomous traveling-wave machinery.
//!
//! Profiles solve `phi'' + c phi' + f(phi) = 0` with `phi(-inf) = theta_hi`,
//! `phi(+inf) = theta_lo`. Bistable and combustion connections carry a unique
//! speed located by bisection on a shooting classifier; monostable pieces
//! carry a minimal speed located by a monotone-connection existence test.
//! The stationary phase-plane flow `q'' + f(q) = 0` supplies compactly
//! supported bump subsolutions.

use crate::error::{Error, Result};

/// Launch offset below the top equilibrium.
const LAUNCH_OFFSET: f64 = 1e-8;
/// Level tolerance for overshoot/undershoot classification.
const LEVEL_TOL: f64 = 1e-6;
/// Slope-magnitude threshold declaring a stall.
const STALL_SLOPE: f64 = 1e-9;
/// Integration window cap.
const X_MAX: f64 = 4e3;
/// Speed-bracket hard cap.
const C_MAX: f64 = 1e3;
/// Bisection width target for unique-speed connections.
const C_BRACKET_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) for the two-dimensional profile system
// ---------------------------------------------------------------------------

/// One step attempt; returns (y_new, error_estimate).
fn dopri5_step(rhs: &impl Fn([f64; 2]) -> [f64; 2], y: [f64; 2], h: f64) -> ([f64; 2], f64) {
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let ax = |y: [f64; 2], k: &[[f64; 2]], c: &[f64]| -> [f64; 2] {
        let mut out = y;
        for (ki, ci) in k.iter().zip(c) {
            out[0] += h * ci * ki[0];
            out[1] += h * ci * ki[1];
        }
        out
    };
    let k1 = rhs(y);
    let k2 = rhs(ax(y, &[k1], &[A21]));
    let k3 = rhs(ax(y, &[k1, k2], &[A31, A32]));
    let k4 = rhs(ax(y, &[k1, k2, k3], &[A41, A42, A43]));
    let k5 = rhs(ax(y, &[k1, k2, k3, k4], &[A51, A52, A53, A54]));
    let k6 = rhs(ax(y, &[k1, k2, k3, k4, k5], &[A61, A62, A63, A64, A65]));
    let y_new = ax(y, &[k1, k3, k4, k5, k6], &[B1, B3, B4, B5, B6]);
    let k7 = rhs(y_new);
    let mut err: f64 = 0.0;
    for i in 0..2 {
        let e =
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        err = err.max(e.abs());
    }
    (y_new, err)
}

/// Integrate with adaptive steps until `stop` returns Some. `stop` receives
/// `(x, y, x_prev, y_prev)` after each accepted step.
fn integrate_until<T>(
    rhs: impl Fn([f64; 2]) -> [f64; 2],
    mut y: [f64; 2],
    tol: f64,
    max_step: f64,
    x_max: f64,
    mut stop: impl FnMut(f64, [f64; 2], f64, [f64; 2]) -> Option<T>,
) -> Option<T> {
    let mut x = 0.0;
    let mut h = (tol.sqrt() * 10.0).min(max_step).max(1e-8);
    while x < x_max {
        let h_try = h.min(x_max - x).min(max_step);
        let (y_new, err) = dopri5_step(&rhs, y, h_try);
        if err <= tol || h_try <= 1e-12 {
            let x_prev = x;
            let y_prev = y;
            x += h_try;
            y = y_new;
            if !y[0].is_finite() || !y[1].is_finite() {
                return None;
            }
            if let Some(t) = stop(x, y, x_prev, y_prev) {
                return Some(t);
            }
            let grow = if err > 0.0 {
                0.9 * (tol / err).powf(0.2)
            } else {
                5.0
            };
            h = (h_try * grow.clamp(0.2, 5.0)).min(max_step);
        } else {
            h = h_try * (0.9 * (tol / err).powf(0.2)).max(0.1);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Shooting classifier
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    /// Crossed below theta_lo - tol with the recorded slope.
    Overshoot { slope: f64 },
    /// Slope collapsed above theta_lo + tol; `min_level` is the lowest level
    /// reached before the stall (the split detector for terraces).
    Undershoot { min_level: f64 },
    /// No event fired inside the window: the trajectory hugged the connection.
    Inconclusive { min_level: f64 },
}

/// Unstable-manifold eigenrate at the top equilibrium.
fn launch_rate(c: f64, fp_hi: f64) -> Result<f64> {
    if fp_hi >= -1e-12 {
        return Err(Error::ShootingPrecondition(format!(
            "top equilibrium not strictly stable: f'(theta_hi) = {fp_hi:.3e}"
        )));
    }
    Ok(0.5 * (-c + (c * c - 4.0 * fp_hi).sqrt()))
}

/// Integrate the profile ODE from the top at speed c and classify the outcome.
/// `dead_top`: if the reaction vanishes identically on [theta_lo, dead_top],
/// the tail is projected analytically once the trajectory enters that zone.
fn shoot(
    f: &impl Fn(f64) -> f64,
    c: f64,
    theta_lo: f64,
    theta_hi: f64,
    fp_hi: f64,
    dead_top: Option<f64>,
    tol: f64,
) -> Result<Shot> {
    let s = launch_rate(c, fp_hi)?;
    let y0 = [theta_hi - LAUNCH_OFFSET, -LAUNCH_OFFSET * s];
    let armed_below = theta_hi - 1e-4;
    let rhs = |y: [f64; 2]| [y[1], -c * y[1] - f(y[0])];
    let mut min_level = theta_hi;
    let out = integrate_until(rhs, y0, tol, 0.25, X_MAX, |_x, y, _xp, yp| {
        min_level = min_level.min(y[0]);
        // analytic tail in a reaction-free zone (requires downhill motion)
        if let Some(dead) = dead_top {
            if y[0] <= dead && y[1] < 0.0 && c > 0.0 {
                let land = y[0] + y[1] / c;
                return if land >= theta_lo + LEVEL_TOL {
                    Some(Shot::Undershoot { min_level: land })
                } else {
                    Some(Shot::Overshoot {
                        slope: -c * (theta_lo - land).max(0.0),
                    })
                };
            }
        }
        if y[0] <= theta_lo - LEVEL_TOL {
            // interpolate the slope at the crossing
            let t = (yp[0] - (theta_lo - LEVEL_TOL)) / (yp[0] - y[0]).max(1e-300);
            let slope = yp[1] + (y[1] - yp[1]) * t.clamp(0.0, 1.0);
            return Some(Shot::Overshoot { slope });
        }
        if y[0] <= armed_below && y[0] >= theta_lo + LEVEL_TOL && y[1].abs() <= STALL_SLOPE {
            return Some(Shot::Undershoot { min_level });
        }
        // turned around and climbed back above the top: overdamped side
        if y[0] >= theta_hi && y[1] > 0.0 {
            return Some(Shot::Undershoot { min_level });
        }
        None
    });
    Ok(out.unwrap_or(Shot::Inconclusive { min_level }))
}

// ---------------------------------------------------------------------------
// Wave profiles
// ---------------------------------------------------------------------------

/// Monotone decreasing connection between two levels.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub theta_hi: f64,
    pub theta_lo: f64,
    pub c: f64,
    pub xs: Vec<f64>,
    pub phi: Vec<f64>,
    pub slope: Vec<f64>,
    /// Max norm of `phi'' + c phi' + f(phi)` over the sampled window.
    pub residual: f64,
    /// Lowest level the last undershooting trajectory reached during the
    /// speed bisection; terraces split when this sits at an intermediate zero.
    pub stall_floor: f64,
}

impl WaveProfile {
    /// Profile value by linear interpolation (clamped to the window).
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.phi[0];
        }
        if x >= self.xs[n - 1] {
            return self.phi[n - 1];
        }
        let h = self.xs[1] - self.xs[0];
        let j = (((x - self.xs[0]) / h).floor() as usize).min(n - 2);
        let t = (x - self.xs[j]) / h;
        self.phi[j] * (1.0 - t) + self.phi[j + 1] * t
    }

    /// x with phi(x) = level (the profile is strictly decreasing).
    pub fn x_at_level(&self, level: f64) -> Option<f64> {
        let n = self.xs.len();
        if level > self.phi[0] || level < self.phi[n - 1] {
            return None;
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.phi[mid] >= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (self.phi[lo] - level) / (self.phi[lo] - self.phi[hi]).max(1e-300);
        Some(self.xs[lo] + t * (self.xs[hi] - self.xs[lo]))
    }

    /// Slope at the point where the profile passes through `level`.
    pub fn slope_at_level(&self, level: f64) -> Option<f64> {
        let x = self.x_at_level(level)?;
        let h = self.xs[1] - self.xs[0];
        let j = (((x - self.xs[0]) / h).floor() as usize).min(self.xs.len() - 2);
        let t = (x - self.xs[j]) / h;
        Some(self.slope[j] * (1.0 - t) + self.slope[j + 1] * t)
    }

    /// Export as `x,phi,dphi` rows (downsampled to at most ~4000 rows).
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write as _;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "x,phi,dphi")?;
        let stride = (self.xs.len() / 4000).max(1);
        for i in (0..self.xs.len()).step_by(stride) {
            writeln!(
                f,
                "{:.9e},{:.9e},{:.9e}",
                self.xs[i], self.phi[i], self.slope[i]
            )?;
        }
        Ok(())
    }
}

/// Sample the profile at the converged speed on a uniform grid; the ODE
/// residual is measured by centered differences of the recorded slope.
fn assemble_profile(
    f: &impl Fn(f64) -> f64,
    c: f64,
    theta_lo: f64,
    theta_hi: f64,
    fp_hi: f64,
    stall_floor: f64,
) -> Result<WaveProfile> {
    let s = launch_rate(c, fp_hi)?;
    let h = 2e-3;
    let mut phi = vec![theta_hi - LAUNCH_OFFSET];
    let mut slope = vec![-LAUNCH_OFFSET * s];
    let rhs = |y: [f64; 2]| [y[1], -c * y[1] - f(y[0])];
    let mut y = [phi[0], slope[0]];
    let max_samples = 2_000_000;
    while y[0] > theta_lo + LEVEL_TOL {
        // classical RK4 at fixed step
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        phi.push(y[0]);
        slope.push(y[1]);
        if phi.len() > max_samples {
            return Err(Error::PhasePlane(format!(
                "profile window exceeded {max_samples} samples at c = {c}"
            )));
        }
    }
    // translate so the mid-level crossing sits at x = 0
    let mid = 0.5 * (theta_hi + theta_lo);
    let cross = phi.iter().position(|&v| v <= mid).unwrap_or(0);
    let x0 = if cross > 0 {
        let t = (phi[cross - 1] - mid) / (phi[cross - 1] - phi[cross]).max(1e-300);
        (cross as f64 - 1.0 + t) * h
    } else {
        0.0
    };
    let xs: Vec<f64> = (0..phi.len()).map(|i| i as f64 * h - x0).collect();
    let mut residual = 0.0_f64;
    for i in 1..phi.len() - 1 {
        let d2 = (slope[i + 1] - slope[i - 1]) / (2.0 * h);
        residual = residual.max((d2 + c * slope[i] + f(phi[i])).abs());
    }
    if slope.iter().take(slope.len() - 1).any(|&p| p >= 0.0) {
        return Err(Error::PhasePlane(format!(
            "assembled profile is not strictly decreasing at c = {c}"
        )));
    }
    Ok(WaveProfile {
        theta_hi,
        theta_lo,
        c,
        xs,
        phi,
        slope,
        residual,
        stall_floor,
    })
}

fn numeric_deriv(f: &impl Fn(f64) -> f64, u: f64, side: f64) -> f64 {
    let eps = 1e-7;
    (f(u + side * eps) - f(u)) / (side * eps)
}

/// Classify-and-bisect driver shared by the bistable and combustion routes.
/// Returns `(c_over, stall_floor)`: the overshooting endpoint of the final
/// bracket (within C_BRACKET_TOL of the unique speed) and the lowest level
/// reached by the last undershooting trajectory.
fn bisect_unique_speed(
    f: &impl Fn(f64) -> f64,
    theta_lo: f64,
    theta_hi: f64,
    dead_top: Option<f64>,
) -> Result<(f64, f64)> {
    let fp_hi = numeric_deriv(f, theta_hi, -1.0).min(-1e-12);
    let tol = 1e-10;
    let classify = |c: f64, tol: f64| shoot(f, c, theta_lo, theta_hi, fp_hi, dead_top, tol);

    let mut c_lo = if dead_top.is_some() { 1e-3 } else { -1.0 };
    let mut c_hi = 1.0;
    loop {
        match classify(c_lo, tol)? {
            Shot::Overshoot { .. } => break,
            _ => {
                c_lo = if dead_top.is_some() {
                    c_lo * 0.5
                } else {
                    c_lo * 2.0
                };
                if c_lo.abs() > C_MAX || (dead_top.is_some() && c_lo < 1e-12) {
                    return Err(Error::BracketExpansion(format!(
                        "no overshoot down to c = {c_lo:.3e}"
                    )));
                }
            }
        }
    }
    loop {
        match classify(c_hi, tol)? {
            Shot::Undershoot { .. } => break,
            _ => {
                c_hi *= 2.0;
                if c_hi > C_MAX {
                    return Err(Error::BracketExpansion(format!(
                        "no undershoot up to c = {c_hi:.3e}"
                    )));
                }
            }
        }
    }

    let mut stall_floor = theta_hi;
    while c_hi - c_lo > C_BRACKET_TOL {
        let cm = 0.5 * (c_lo + c_hi);
        match classify(cm, tol)? {
            Shot::Overshoot { .. } => c_lo = cm,
            Shot::Undershoot { min_level } => {
                c_hi = cm;
                stall_floor = min_level;
            }
            Shot::Inconclusive { .. } => {
                // tie: re-run at tighter integrator tolerance; a trajectory
                // that still hugs the connection for the whole window means
                // cm is the speed within resolution, so shrink from above
                match classify(cm, tol * 1e-2)? {
                    Shot::Overshoot { .. } => c_lo = cm,
                    Shot::Undershoot { min_level } | Shot::Inconclusive { min_level } => {
                        c_hi = cm;
                        stall_floor = min_level;
                    }
                }
            }
        }
    }
    Ok((c_lo, stall_floor))
}

/// Generalized unique-speed connection between two levels, without the
/// single-interior-zero gate; the terrace recursion uses the stall floor to
/// decide whether the direct connection exists or splits at an intermediate
/// level. `dead_top` marks an ignition-type zero plateau above theta_lo.
pub(crate) fn unique_speed_connection(
    f: &impl Fn(f64) -> f64,
    theta_lo: f64,
    theta_hi: f64,
    dead_top: Option<f64>,
) -> Result<WaveProfile> {
    let (c, stall_floor) = bisect_unique_speed(f, theta_lo, theta_hi, dead_top)?;
    let fp_hi = numeric_deriv(f, theta_hi, -1.0).min(-1e-12);
    assemble_profile(f, c, theta_lo, theta_hi, fp_hi, stall_floor)
}

/// Monotone connection at the minimal monostable speed.
pub fn monostable_wave(
    f: impl Fn(f64) -> f64,
    theta_lo: f64,
    theta_hi: f64,
) -> Result<WaveProfile> {
    let c = monostable_min_speed(&f, theta_lo, theta_hi)?;
    let fp_hi = numeric_deriv(&f, theta_hi, -1.0).min(-1e-12);
    assemble_profile(&f, c, theta_lo, theta_hi, fp_hi, theta_lo)
}

/// Unique-speed decreasing connection for a bistable interval: f < 0 then
/// f > 0 across exactly one interior zero of (theta_lo, theta_hi).
pub fn bistable_wave(
    f: impl Fn(f64) -> f64,
    theta_lo: f64,
    theta_hi: f64,
) -> Result<WaveProfile> {
    check_bistable_pattern(&f, theta_lo, theta_hi)?;
    let (c, stall_floor) = bisect_unique_speed(&f, theta_lo, theta_hi, None)?;
    let fp_hi = numeric_deriv(&f, theta_hi, -1.0).min(-1e-12);
    assemble_profile(&f, c, theta_lo, theta_hi, fp_hi, stall_floor)
}

fn check_bistable_pattern(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<()> {
    let n = 4000;
    let span = hi - lo;
    let scale = (0..=n)
        .map(|i| f(lo + span * i as f64 / n as f64).abs())
        .fold(0.0, f64::max);
    if f(lo).abs() > 1e-9 * scale.max(1.0) || f(hi).abs() > 1e-9 * scale.max(1.0) {
        return Err(Error::ShootingPrecondition(
            "f must vanish at both connection levels".into(),
        ));
    }
    let mut crossings = 0;
    let mut prev = 0.0;
    for i in 1..n {
        let v = f(lo + span * i as f64 / n as f64);
        if v.abs() <= 1e-14 * scale {
            continue;
        }
        if prev != 0.0 && v.signum() != prev {
            crossings += 1;
        }
        prev = v.signum();
    }
    let just_above = f(lo + span * 1e-3);
    let just_below = f(hi - span * 1e-3);
    if crossings != 1 || just_above >= 0.0 || just_below <= 0.0 {
        return Err(Error::ShootingPrecondition(format!(
            "interval ({lo}, {hi}) is not bistable: {crossings} interior sign changes"
        )));
    }
    Ok(())
}

/// Unique positive-speed connection for an ignition nonlinearity: f = 0 on
/// [0, theta], f > 0 on (theta, 1), f(1) = 0.
pub fn combustion_wave(f: impl Fn(f64) -> f64, theta_ignition: f64) -> Result<WaveProfile> {
    let n = 2000;
    for i in 0..=n {
        let u = theta_ignition * i as f64 / n as f64;
        if f(u).abs() > 1e-12 {
            return Err(Error::ShootingPrecondition(format!(
                "f does not vanish on the ignition interval (f({u:.4}) = {:.3e})",
                f(u)
            )));
        }
    }
    for i in 1..n {
        let u = theta_ignition + (1.0 - theta_ignition) * i as f64 / n as f64;
        if f(u) <= 0.0 && u < 1.0 - 1e-9 {
            return Err(Error::ShootingPrecondition(format!(
                "f must be positive on (theta, 1); f({u:.4}) = {:.3e}",
                f(u)
            )));
        }
    }
    let (c, stall_floor) = bisect_unique_speed(&f, 0.0, 1.0, Some(theta_ignition))?;
    let fp_hi = numeric_deriv(&f, 1.0, -1.0).min(-1e-12);
    assemble_profile(&f, c, 0.0, 1.0, fp_hi, stall_floor)
}

/// Minimal speed admitting a monotone connection over a monostable interval
/// (f > 0 strictly inside). Existence test: the shooting trajectory stays
/// above theta_lo for the whole integration window.
pub fn monostable_min_speed(
    f: impl Fn(f64) -> f64,
    theta_lo: f64,
    theta_hi: f64,
) -> Result<f64> {
    let n = 4000;
    let span = theta_hi - theta_lo;
    for i in 1..n {
        let u = theta_lo + span * i as f64 / n as f64;
        if f(u) <= 0.0 && u < theta_hi - 1e-9 * span {
            return Err(Error::ShootingPrecondition(format!(
                "f must be positive inside ({theta_lo}, {theta_hi}); f({u:.4}) = {:.3e}",
                f(u)
            )));
        }
    }
    let fp_hi = numeric_deriv(&f, theta_hi, -1.0).min(-1e-12);
    let fp_lo = numeric_deriv(&f, theta_lo, 1.0);
    let tol = 1e-10;
    let exists = |c: f64| -> Result<bool> {
        let s = launch_rate(c, fp_hi)?;
        let y0 = [theta_hi - LAUNCH_OFFSET, -LAUNCH_OFFSET * s];
        let rhs = |y: [f64; 2]| [y[1], -c * y[1] - f(y[0])];
        let crossed = integrate_until(rhs, y0, tol, 0.25, 1e3, |_x, y, _xp, _yp| {
            if y[0] < theta_lo - 1e-9 {
                Some(true)
            } else if y[0] < theta_lo + 1e-9 && y[1].abs() < 1e-6 {
                // settled onto the target equilibrium without crossing
                Some(false)
            } else {
                None
            }
        });
        Ok(!crossed.unwrap_or(false))
    };

    let c_kpp = 2.0 * fp_lo.max(0.0).sqrt();
    if c_kpp > 0.0 && exists(c_kpp)? {
        return Ok(c_kpp); // pulled front: the linearization bound is attained
    }
    let mut lo = c_kpp;
    let mut hi = c_kpp.max(0.5);
    while !exists(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > C_MAX {
            return Err(Error::BracketExpansion(format!(
                "no monotone connection up to c = {hi:.3e}"
            )));
        }
    }
    while hi - lo > 1e-7 {
        let cm = 0.5 * (lo + hi);
        if exists(cm)? {
            hi = cm;
        } else {
            lo = cm;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// Stationary phase plane and bump subsolutions
// ---------------------------------------------------------------------------

/// Outcome of integrating `q'' + f(q) = 0` from `(phi0, slope0)`.
#[derive(Debug, Clone)]
pub struct PhasePlaneReport {
    /// Lowest value on the right half-line before the first slope zero
    /// (None if the trajectory left the window inconclusively).
    pub inf_right: Option<f64>,
    /// Supremum over the left half-line (None if inconclusive).
    pub sup_left: Option<f64>,
    /// First stationary point to the left (x1 < 0).
    pub x1: Option<f64>,
    /// First right zero of q, if the trajectory reaches 0.
    pub x2: Option<f64>,
    /// Max Hamiltonian drift along the recorded trajectory.
    pub hamiltonian_drift: f64,
    /// Slope-comparison conclusions when a wave was supplied.
    pub lemma_lower: Option<bool>,
    pub lemma_upper: Option<bool>,
}

/// Integrate the stationary ODE both ways from `(phi0, slope0 < 0)`, report
/// the turning structure and, when `wave` is supplied, check the slope
/// comparison conclusions against it.
pub fn phase_plane_bump(
    f: impl Fn(f64) -> f64,
    phi0: f64,
    slope0: f64,
    wave: Option<&WaveProfile>,
) -> Result<PhasePlaneReport> {
    if !(slope0 < 0.0) {
        return Err(Error::ShootingPrecondition(format!(
            "slope0 = {slope0} must be negative"
        )));
    }
    let margin = 2.0 * phi0.abs().max(1.0);
    let antideriv = build_antiderivative(&f, margin);
    let h0 = 0.5 * slope0 * slope0 + antideriv(phi0);
    let mut drift: f64 = 0.0;

    // right: q decreasing until the first slope zero or the first zero of q
    let rhs = |y: [f64; 2]| [y[1], -f(y[0])];
    let mut inf_right = phi0;
    let mut x2 = None;
    let right = integrate_until(rhs, [phi0, slope0], 1e-12, 0.05, X_MAX, |x, y, xp, yp| {
        if y[0].abs() >= margin || y[1].abs() > 100.0 {
            inf_right = f64::NAN; // escaped the level range: inconclusive
            return Some(());
        }
        drift = drift.max((0.5 * y[1] * y[1] + antideriv(y[0]) - h0).abs());
        inf_right = inf_right.min(y[0]);
        if y[0] <= 0.0 {
            let t = yp[0] / (yp[0] - y[0]).max(1e-300);
            x2 = Some(xp + t * (x - xp));
            return Some(());
        }
        if y[1] >= 0.0 {
            return Some(()); // first slope zero
        }
        None
    });
    let inf_right = if right.is_some() && inf_right.is_finite() {
        Some(inf_right)
    } else {
        None
    };

    // left: substituting x -> -x flips the slope sign, same equation
    let mut sup_left = phi0;
    let mut x1 = None;
    let left = integrate_until(
        rhs,
        [phi0, -slope0],
        1e-12,
        0.05,
        X_MAX,
        |x, y, xp, yp| {
            if y[0].abs() >= margin || y[1].abs() > 100.0 {
                sup_left = f64::NAN;
                return Some(());
            }
            drift = drift.max((0.5 * y[1] * y[1] + antideriv(y[0]) - h0).abs());
            sup_left = sup_left.max(y[0]);
            if y[1] <= 0.0 {
                let t = yp[1] / (yp[1] - y[1]).max(1e-300);
                x1 = Some(-(xp + t * (x - xp)));
                return Some(());
            }
            None
        },
    );
    let sup_left = if left.is_some() && sup_left.is_finite() {
        Some(sup_left)
    } else {
        None
    };

    let (mut lemma_lower, mut lemma_upper) = (None, None);
    if let Some(w) = wave {
        if let Some(ws) = w.slope_at_level(phi0) {
            if slope0 <= ws {
                lemma_lower = inf_right.map(|v| v < w.theta_lo);
            }
            if ws <= slope0 && slope0 < 0.0 {
                lemma_upper = sup_left.map(|v| v < w.theta_hi);
            }
        }
    }

    Ok(PhasePlaneReport {
        inf_right,
        sup_left,
        x1,
        x2,
        hamiltonian_drift: drift,
        lemma_lower,
        lemma_upper,
    })
}

/// Cumulative antiderivative of f on [-margin, margin] (Simpson panels with
/// linear interpolation), shifted so F(0) = 0.
fn build_antiderivative(f: &impl Fn(f64) -> f64, margin: f64) -> impl Fn(f64) -> f64 {
    let n = 20_000usize;
    let lo = -margin;
    let h = 2.0 * margin / n as f64;
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for i in 0..n {
        let a = lo + i as f64 * h;
        acc += h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h));
        cum.push(acc);
    }
    let j0 = ((0.0 - lo) / h) as usize;
    let f0 = cum[j0];
    move |u: f64| {
        let s = ((u - lo) / h).clamp(0.0, (n - 1) as f64);
        let j = s.floor() as usize;
        let t = s - j as f64;
        cum[j] * (1.0 - t) + cum[j + 1] * t - f0
    }
}

/// Compactly supported even bump below a terrace level, built by cutting the
/// stationary phase-plane trajectory at its zeros.
#[derive(Debug, Clone)]
pub struct BumpProfile {
    /// Uniform sample positions, centered so the maximum sits at x = 0.
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    /// Support interval (symmetric about the origin).
    pub support: (f64, f64),
    pub target_level: f64,
    pub max_value: f64,
}

impl BumpProfile {
    pub fn value_at(&self, x: f64) -> f64 {
        if x <= self.support.0 || x >= self.support.1 {
            return 0.0;
        }
        let h = self.xs[1] - self.xs[0];
        let j = (((x - self.xs[0]) / h).floor() as usize).min(self.xs.len() - 2);
        let t = (x - self.xs[j]) / h;
        (self.values[j] * (1.0 - t) + self.values[j + 1] * t).max(0.0)
    }

    /// Resample as an exact discrete subsolution of the three-point scheme
    /// with spacing `h`: the recurrence `q_{i+1} = 2 q_i - q_{i-1} - h^2 f(q_i)`
    /// is the scheme's stationary equation node-by-node, the half-step start
    /// makes the extension even, and cutting at the first nonpositive entry
    /// only helps the inequality. Returns the right half [q_0, .., q_m] with
    /// q_m <= 0; the caller mirrors it about the center node.
    pub fn discrete_right_half(&self, f: &impl Fn(f64) -> f64, h: f64) -> Vec<f64> {
        let mut q = vec![
            self.max_value,
            self.max_value - 0.5 * h * h * f(self.max_value),
        ];
        loop {
            let n = q.len();
            let next = 2.0 * q[n - 1] - q[n - 2] - h * h * f(q[n - 1]);
            q.push(next);
            if next <= 0.0 || q.len() > 10_000_000 {
                break;
            }
        }
        q
    }
}

/// Crossing zeros, tangencies and plateaus of a reaction profile on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub enum ZeroPattern {
    /// Isolated sign-change zero; `stable` when f > 0 left and f < 0 right.
    Crossing { u: f64, stable: bool },
    /// Zero without a sign change; flagged, not classified.
    Tangent { u: f64 },
    /// f vanishes identically on [lo, hi].
    Plateau { lo: f64, hi: f64 },
}

impl ZeroPattern {
    pub fn location(&self) -> f64 {
        match self {
            ZeroPattern::Crossing { u, .. } | ZeroPattern::Tangent { u } => *u,
            ZeroPattern::Plateau { hi, .. } => *hi,
        }
    }
}

/// Scan f on a 10^4 grid over [0, 1], bisect each sign change to 1e-10 and
/// classify every zero. Runs of vanishing samples become plateaus.
pub fn stability_intervals(f: impl Fn(f64) -> f64) -> Vec<ZeroPattern> {
    let n = 10_000usize;
    let scale = (0..=n)
        .map(|i| f(i as f64 / n as f64).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let eps = 1e-13 * scale;
    let val = |i: usize| f(i as f64 / n as f64);
    let mut out: Vec<ZeroPattern> = Vec::new();
    let mut i = 0usize;
    while i <= n {
        if val(i).abs() <= eps {
            let start = i;
            while i + 1 <= n && val(i + 1).abs() <= eps {
                i += 1;
            }
            let (lo, hi) = (start as f64 / n as f64, i as f64 / n as f64);
            if i > start + 1 {
                out.push(ZeroPattern::Plateau { lo, hi });
            } else {
                let left = if start == 0 { 0.0 } else { val(start - 1) };
                let right = if i == n { 0.0 } else { val(i + 1) };
                let u = 0.5 * (lo + hi);
                if left > eps && right < -eps {
                    out.push(ZeroPattern::Crossing { u, stable: true });
                } else if left < -eps && right > eps {
                    out.push(ZeroPattern::Crossing { u, stable: false });
                } else if start == 0 {
                    out.push(ZeroPattern::Crossing {
                        u: 0.0,
                        stable: right < -eps,
                    });
                } else if i == n {
                    out.push(ZeroPattern::Crossing {
                        u: 1.0,
                        stable: left > eps,
                    });
                } else {
                    out.push(ZeroPattern::Tangent { u });
                }
            }
            i += 1;
            continue;
        }
        if i < n && val(i) * val(i + 1) < 0.0 {
            let (mut a, mut b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            while b - a > 1e-10 {
                let m = 0.5 * (a + b);
                if f(a) * f(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            let u = 0.5 * (a + b);
            out.push(ZeroPattern::Crossing {
                u,
                stable: val(i) > 0.0,
            });
        }
        i += 1;
    }
    out
}

/// For a level `theta` stable from below, the largest S < theta with f > 0 on
/// (S, theta). None when f is not positive immediately below theta or when
/// the floor would be the bottom equilibrium itself (degenerate monostable
/// level, no negative excursion below).
pub fn stability_floor(
    zeros: &[ZeroPattern],
    theta: f64,
    f: &impl Fn(f64) -> f64,
) -> Option<f64> {
    if f(theta - 1e-6) <= 0.0 {
        return None;
    }
    let mut below: Option<f64> = None;
    for z in zeros {
        let u = z.location();
        if u < theta - 1e-8 {
            below = Some(below.map_or(u, |b: f64| b.max(u)));
        }
    }
    let s = below?;
    if s <= 1e-8 {
        return None;
    }
    Some(s)
}

/// Even compactly supported subsolution below terrace level `theta_m`, built
/// from the connecting wave: translate the wave so its value at 0 is the
/// midpoint of (S_m, theta_m), launch the stationary flow with matched slope,
/// cut at the first right zero and reflect about the left stationary point.
pub fn build_bump_subsolution(
    f: impl Fn(f64) -> f64,
    theta_m: f64,
    wave: &WaveProfile,
) -> Result<BumpProfile> {
    let zeros = stability_intervals(&f);
    let s_m = stability_floor(&zeros, theta_m, &f).ok_or_else(|| {
        Error::ShootingPrecondition(format!(
            "level {theta_m} has no bistable floor; use the monostable route"
        ))
    })?;
    let phi0 = 0.5 * (s_m + theta_m);
    if f(phi0) <= 0.0 {
        return Err(Error::ShootingPrecondition(format!(
            "f not positive between S_m = {s_m} and theta_m = {theta_m}"
        )));
    }
    let slope0 = wave.slope_at_level(phi0).ok_or_else(|| {
        Error::PhasePlane("wave profile does not span the midpoint level".into())
    })?;

    let h = 2.5e-3;
    let rhs = |y: [f64; 2]| [y[1], -f(y[0])];
    let rk4 = |y: [f64; 2], h: f64| -> [f64; 2] {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };
    // right of the anchor: march to the first zero of q
    let mut right = vec![phi0];
    let mut y = [phi0, slope0];
    loop {
        y = rk4(y, h);
        right.push(y[0].max(0.0));
        if y[0] <= 0.0 {
            break;
        }
        if y[1] >= 0.0 {
            return Err(Error::PhasePlane(format!(
                "stationary trajectory turned at level {:.6} before vanishing",
                y[0]
            )));
        }
        if right.len() > 4_000_000 {
            return Err(Error::PhasePlane(
                "no zero within the integration window".into(),
            ));
        }
    }
    // left of the anchor: march (backwards) to the first stationary point
    let mut left = Vec::new();
    let mut y = [phi0, slope0];
    loop {
        y = rk4(y, -h);
        if y[1] >= 0.0 {
            break;
        }
        left.push(y[0]);
        if y[0] >= theta_m {
            return Err(Error::PhasePlane(
                "stationary trajectory exceeded the target level".into(),
            ));
        }
        if left.len() > 4_000_000 {
            return Err(Error::PhasePlane(
                "no stationary point within the integration window".into(),
            ));
        }
    }
    // half-profile from the maximum down to the zero
    let mut half: Vec<f64> = left.into_iter().rev().collect();
    half.extend(right);
    let m = half.len();
    let d = (m - 1) as f64 * h;
    let mut xs = Vec::with_capacity(2 * m - 1);
    let mut values = Vec::with_capacity(2 * m - 1);
    for i in 0..(2 * m - 1) {
        let x = -d + i as f64 * h;
        let j = ((x.abs() / h).round() as usize).min(m - 1);
        xs.push(x);
        values.push(half[j].max(0.0));
    }
    let max_value = half[0];
    if !(max_value < theta_m) {
        return Err(Error::PhasePlane(format!(
            "bump maximum {max_value} reached the target level {theta_m}"
        )));
    }
    Ok(BumpProfile {
        xs,
        values,
        support: (-d, d),
        target_level: theta_m,
        max_value,
    })
}
