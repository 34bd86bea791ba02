//! Propagating-terrace decomposition of a multistable autonomous reaction.
//!
//! A terrace stacks monotone waves `theta_m -> theta_{m-1}` with speeds
//! decreasing upward: the bottom front runs fastest, so compactly supported
//! data develop a multi-tiered profile with plateaus at the intermediate
//! levels. The decomposition is computed by recursive shooting: attempt the
//! direct connection, split where the trajectory stalls at an intermediate
//! stable zero, then apply the minimal-terrace selection (merge mis-ordered
//! neighbours, drop equal-speed entries keeping the topmost of each block).

use crate::error::{Error, Result};
use crate::model::{Dim, GridSpec, Model};
use crate::pdesim::{
    bump_from_profile, fit_speed, run, Observer, SimOptions, SimulationState, SnapshotRecorder,
};
use crate::waves::{
    bistable_wave, build_bump_subsolution, combustion_wave, monostable_wave, stability_intervals,
    unique_speed_connection, WaveProfile, ZeroPattern,
};

/// Speeds within this tolerance count as equal in the selection step.
pub const EQUAL_SPEED_TOL: f64 = 1e-6;

/// Decomposition into levels `0 = theta_0 < .. < theta_M = 1` and speeds
/// `c_1 > .. > c_M > 0`; `waves[m-1]` connects `levels[m]` down to
/// `levels[m-1]` at speed `speeds[m-1]`.
#[derive(Debug, Clone)]
pub struct TerraceDecomposition {
    pub levels: Vec<f64>,
    pub speeds: Vec<f64>,
    pub waves: Vec<WaveProfile>,
    /// Raw (upper level, speed) sequence before the equal-speed removal,
    /// bottom tier first.
    pub pre_merge: Vec<(f64, f64)>,
    /// Set when some pre-merge speed gaps sit within 10x of the equality
    /// tolerance: the selection outcome is then resolution-sensitive.
    pub borderline_speeds: bool,
}

impl TerraceDecomposition {
    pub fn tiers(&self) -> usize {
        self.speeds.len()
    }
}

/// One tier produced by the recursion.
struct Tier {
    lower: f64,
    upper: f64,
    wave: WaveProfile,
}

/// Compute the minimal propagating terrace of `f` on [0, 1].
pub fn compute_terrace(f: impl Fn(f64) -> f64) -> Result<TerraceDecomposition> {
    let zeros = stability_intervals(&f);
    for z in &zeros {
        if let ZeroPattern::Tangent { u } = z {
            return Err(Error::DegenerateZero { u: *u });
        }
    }
    let tiers = connect(&f, &zeros, 0.0, 1.0, zeros.len() + 2)?;

    // raw sequence, bottom first; the minimal-terrace property wants the
    // lower tier at least as fast as the one above it
    let mut tiers = merge_misordered(&f, tiers)?;
    for (i, t) in tiers.iter().enumerate() {
        if t.wave.c <= 0.0 {
            return Err(Error::NonpositiveTierSpeed {
                index: i + 1,
                speed: t.wave.c,
            });
        }
    }
    let pre_merge: Vec<(f64, f64)> = tiers.iter().map(|t| (t.upper, t.wave.c)).collect();
    let borderline_speeds = pre_merge.windows(2).any(|w| {
        let d = (w[0].1 - w[1].1).abs();
        d > EQUAL_SPEED_TOL && d <= 10.0 * EQUAL_SPEED_TOL
    });

    // equal-speed removal: keep the topmost entry of each equal-speed block
    let selected = select_minimal(&pre_merge, EQUAL_SPEED_TOL);
    if selected.len() != pre_merge.len() {
        // rebuild the direct waves across the removed levels
        let mut rebuilt: Vec<Tier> = Vec::with_capacity(selected.len());
        let mut lower = 0.0;
        for &(upper, _) in &selected {
            let idx = tiers
                .iter()
                .position(|t| (t.upper - upper).abs() < 1e-12)
                .expect("selected level came from the tier list");
            if (tiers[idx].lower - lower).abs() < 1e-12 {
                rebuilt.push(Tier {
                    lower,
                    upper,
                    wave: tiers[idx].wave.clone(),
                });
            } else {
                let wave = unique_speed_connection(&f, lower, upper, None)?;
                rebuilt.push(Tier { lower, upper, wave });
            }
            lower = upper;
        }
        tiers = rebuilt;
    }

    let mut levels = vec![0.0];
    let mut speeds = Vec::with_capacity(tiers.len());
    let mut waves = Vec::with_capacity(tiers.len());
    for t in tiers {
        levels.push(t.upper);
        speeds.push(t.wave.c);
        waves.push(t.wave);
    }
    // strict decrease with the selection margin
    for w in speeds.windows(2) {
        if !(w[0] > w[1] + EQUAL_SPEED_TOL) {
            return Err(Error::PhasePlane(format!(
                "terrace speeds not strictly decreasing after selection: {w:?}"
            )));
        }
    }
    Ok(TerraceDecomposition {
        levels,
        speeds,
        waves,
        pre_merge,
        borderline_speeds,
    })
}

/// The equal-speed selection step as a pure function on (level, speed) pairs:
/// drop every entry whose speed reappears further up the terrace.
pub fn select_minimal(seq: &[(f64, f64)], tol: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(seq.len());
    for (m, &(level, speed)) in seq.iter().enumerate() {
        let repeated_above = seq[m + 1..].iter().any(|&(_, c)| (c - speed).abs() <= tol);
        if !repeated_above {
            out.push((level, speed));
        }
    }
    out
}

/// Interior stable crossing zeros restricted to an open interval.
fn interior_stable_zeros(zeros: &[ZeroPattern], lo: f64, hi: f64) -> Vec<f64> {
    zeros
        .iter()
        .filter_map(|z| match z {
            ZeroPattern::Crossing { u, stable } if *stable => Some(*u),
            _ => None,
        })
        .filter(|u| *u > lo + 1e-9 && *u < hi - 1e-9)
        .collect()
}

fn interior_zeros(zeros: &[ZeroPattern], lo: f64, hi: f64) -> Vec<f64> {
    zeros
        .iter()
        .map(|z| z.location())
        .filter(|u| *u > lo + 1e-9 && *u < hi - 1e-9)
        .collect()
}

/// Recursive splitting: try the direct decreasing connection over (lo, hi);
/// when the shooting trajectory stalls at an intermediate stable zero, split
/// there and recurse on both halves.
fn connect(
    f: &impl Fn(f64) -> f64,
    zeros: &[ZeroPattern],
    lo: f64,
    hi: f64,
    budget: usize,
) -> Result<Vec<Tier>> {
    if budget == 0 {
        return Err(Error::PhasePlane(
            "terrace recursion exceeded the level budget".into(),
        ));
    }
    let inner = interior_zeros(zeros, lo, hi);
    // ignition plateau sitting on the bottom level?
    let dead_top = zeros.iter().find_map(|z| match z {
        ZeroPattern::Plateau { lo: plo, hi: phi } if (*plo - lo).abs() < 1e-9 && *phi < hi => {
            Some(*phi)
        }
        _ => None,
    });

    if inner.is_empty() && dead_top.is_none() {
        // single sign: decreasing connections need f > 0 inside
        let wave = monostable_wave(f, lo, hi)?;
        return Ok(vec![Tier {
            lower: lo,
            upper: hi,
            wave,
        }]);
    }
    if let Some(theta) = dead_top {
        if interior_zeros(zeros, theta, hi).is_empty() {
            // pure ignition block
            let wave = if lo == 0.0 && hi == 1.0 {
                combustion_wave(f, theta)?
            } else {
                unique_speed_connection(f, lo, hi, Some(theta))?
            };
            return Ok(vec![Tier {
                lower: lo,
                upper: hi,
                wave,
            }]);
        }
    }
    if inner.len() == 1 && dead_top.is_none() && f(lo + 1e-4 * (hi - lo)) < 0.0 {
        let wave = bistable_wave(f, lo, hi)?;
        return Ok(vec![Tier {
            lower: lo,
            upper: hi,
            wave,
        }]);
    }

    // several interior zeros: shoot the direct connection and inspect where
    // the undershooting trajectories bottom out
    let wave = unique_speed_connection(f, lo, hi, dead_top)?;
    let stall = wave.stall_floor;
    let split_at = interior_stable_zeros(zeros, lo, hi)
        .into_iter()
        .min_by(|a, b| (a - stall).abs().partial_cmp(&(b - stall).abs()).unwrap())
        .filter(|z| (z - stall).abs() < (stall - lo).abs());
    match split_at {
        None => Ok(vec![Tier {
            lower: lo,
            upper: hi,
            wave,
        }]),
        Some(theta) => {
            let mut lower_part = connect(f, zeros, lo, theta, budget - 1)?;
            let upper_part = connect(f, zeros, theta, hi, budget - 1)?;
            lower_part.extend(upper_part);
            Ok(lower_part)
        }
    }
}

/// Merge adjacent tiers whenever the lower one is slower than the upper one
/// (the stacked configuration is not viable; the direct connection is).
fn merge_misordered(f: &impl Fn(f64) -> f64, mut tiers: Vec<Tier>) -> Result<Vec<Tier>> {
    let mut guard = tiers.len() + 2;
    loop {
        let bad = tiers
            .windows(2)
            .position(|w| w[0].wave.c < w[1].wave.c - EQUAL_SPEED_TOL);
        match bad {
            None => return Ok(tiers),
            Some(i) => {
                if guard == 0 {
                    return Err(Error::PhasePlane("terrace merge did not stabilize".into()));
                }
                guard -= 1;
                let lower = tiers[i].lower;
                let upper = tiers[i + 1].upper;
                let wave = unique_speed_connection(f, lower, upper, None)?;
                tiers.splice(i..=i + 1, [Tier { lower, upper, wave }]);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Verification against simulation
// ---------------------------------------------------------------------------

/// One probe of the multi-tier profile.
#[derive(Debug, Clone)]
pub struct TierProbe {
    /// Probe radius divided by T.
    pub probe_speed: f64,
    /// Target value at that radius.
    pub target: f64,
    /// Worst |u - target| over the sampled directions.
    pub deviation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct MultitierReport {
    pub probes: Vec<TierProbe>,
    pub state_t: f64,
}

impl MultitierReport {
    pub fn passed(&self) -> bool {
        self.probes.iter().all(|p| p.passed)
    }
}

/// Evolve the top-level bump and probe the terrace structure at the final
/// time: between consecutive tier speeds the solution sits on the plateau
/// level, beyond the fastest tier it is near 0, inside the slowest near 1.
pub fn verify_multitier(
    model: &Model,
    terrace: &TerraceDecomposition,
    grid: &GridSpec,
    t_final: f64,
    tol: f64,
) -> Result<MultitierReport> {
    let state = run_from_top_bump(model, grid, t_final, &mut [])?;
    probe_tiers(&state, terrace, tol)
}

/// Launch the simulation from the compactly supported subsolution bump below
/// the top level (radially in 2D) and return the final state.
pub fn run_from_top_bump(
    model: &Model,
    grid: &GridSpec,
    t_final: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<SimulationState> {
    let f = model.reaction.scalar_autonomous()?;
    let top_wave = {
        let terrace = compute_terrace(&f)?;
        terrace
            .waves
            .last()
            .expect("terrace has at least one tier")
            .clone()
    };
    let bump = build_bump_subsolution(&f, 1.0, &top_wave)?;
    let u0 = match grid.dim {
        Dim::One => bump_from_profile(grid, &bump, &f)?,
        Dim::Two => {
            let n = grid.sim_points();
            let mut u = vec![0.0; n * n];
            for iy in 0..n {
                for ix in 0..n {
                    let (x, y) = (grid.sim_coord(ix), grid.sim_coord(iy));
                    u[iy * n + ix] = bump.value_at((x * x + y * y).sqrt());
                }
            }
            u
        }
    };
    run(model, grid, u0, t_final, observers, &SimOptions::default())
}

/// Probe a simulated state against a terrace decomposition.
pub fn probe_tiers(
    state: &SimulationState,
    terrace: &TerraceDecomposition,
    tol: f64,
) -> Result<MultitierReport> {
    let t = state.t;
    let c1 = terrace.speeds[0];
    let c_m = *terrace.speeds.last().unwrap();
    if 1.1 * c1 * t > state.half_width {
        return Err(Error::BoxTooSmall(format!(
            "outermost probe needs radius {:.1}, box half-width {:.1}",
            1.1 * c1 * t,
            state.half_width
        )));
    }
    let directions: Vec<[f64; 2]> = match state.dim {
        Dim::One => vec![[1.0, 0.0], [-1.0, 0.0]],
        Dim::Two => (0..8)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / 4.0;
                [a.cos(), a.sin()]
            })
            .collect(),
    };
    let sample_dir = |r: f64, e: &[f64; 2]| -> f64 {
        match state.dim {
            Dim::One => state.sample(&[r * e[0]]),
            Dim::Two => state.sample(&[r * e[0], r * e[1]]),
        }
    };
    let max_at_radius = |r: f64| -> f64 {
        directions
            .iter()
            .map(|e| sample_dir(r, e))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let dev_at_radius = |r: f64, target: f64| -> f64 {
        directions
            .iter()
            .map(|e| (sample_dir(r, e) - target).abs())
            .fold(0.0, f64::max)
    };

    let mut probes = Vec::new();
    // plateau probes: midpoint speed between consecutive tiers (0 below the top tier)
    let m_count = terrace.speeds.len();
    for m in 1..=m_count {
        let c_outer = terrace.speeds[m - 1];
        let c_inner = if m < m_count { terrace.speeds[m] } else { 0.0 };
        let probe_speed = 0.5 * (c_inner + c_outer);
        let target = terrace.levels[m];
        let deviation = dev_at_radius(probe_speed * t, target);
        probes.push(TierProbe {
            probe_speed,
            target,
            deviation,
            passed: deviation <= tol,
        });
    }
    // ahead of the fastest front
    let v = max_at_radius(1.1 * c1 * t);
    probes.push(TierProbe {
        probe_speed: 1.1 * c1,
        target: 0.0,
        deviation: v,
        passed: v <= 0.05,
    });
    // well inside the slowest front
    let dev = dev_at_radius(0.9 * c_m * t, 1.0);
    probes.push(TierProbe {
        probe_speed: 0.9 * c_m,
        target: 1.0,
        deviation: dev,
        passed: dev <= tol.max(0.05),
    });
    Ok(MultitierReport { probes, state_t: t })
}

// ---------------------------------------------------------------------------
// Empirical terrace extraction
// ---------------------------------------------------------------------------

/// Empirical (level, speed) pairs measured from a 1D run: plateaus of the
/// final snapshot matched to reaction zeros, with each interface tracked over
/// the trailing half of the run.
pub fn terrace_from_run(
    grid: &GridSpec,
    snaps: &SnapshotRecorder,
    reaction_zeros: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if grid.dim != Dim::One {
        return Err(Error::InvalidGrid(
            "terrace empirics are one-dimensional".into(),
        ));
    }
    let last = snaps
        .fields
        .last()
        .ok_or_else(|| Error::PhasePlane("no snapshots recorded".into()))?;
    let n = last.len();
    let h = grid.spacing();

    // plateau detection on the right half-line
    let mid = n / 2;
    let du: Vec<f64> = (mid..n - 1).map(|i| (last[i + 1] - last[i]) / h).collect();
    let du_max = du.iter().fold(0.0_f64, |m, &v| m.max(v.abs())).max(1e-300);
    let flat: Vec<bool> = du.iter().map(|&v| v.abs() <= 1e-3 * du_max).collect();
    let mut plateaus: Vec<f64> = Vec::new();
    let min_run = 5usize;
    let mut i = 0usize;
    while i < flat.len() {
        if flat[i] {
            let start = i;
            while i < flat.len() && flat[i] {
                i += 1;
            }
            if i - start >= min_run {
                let avg: f64 =
                    last[mid + start..mid + i].iter().sum::<f64>() / (i - start) as f64;
                if let Some(z) = reaction_zeros.iter().find(|z| (*z - avg).abs() <= 0.02) {
                    if !plateaus.iter().any(|p| (p - z).abs() < 1e-9) {
                        plateaus.push(*z);
                    }
                }
            }
        } else {
            i += 1;
        }
    }
    plateaus.sort_by(|a, b| b.partial_cmp(a).unwrap()); // descending from the core
    if plateaus.len() < 2 {
        return Err(Error::PhasePlane(format!(
            "run too short: only {} plateau(s) resolved",
            plateaus.len()
        )));
    }

    // one interface per adjacent plateau pair, tracked at the midpoint level
    let mut out = Vec::new();
    for w in plateaus.windows(2) {
        let (upper, lower) = (w[0], w[1]);
        let eta = 0.5 * (upper + lower);
        let mut times = Vec::new();
        let mut pos = Vec::new();
        for (t, field) in snaps.times.iter().zip(&snaps.fields) {
            // outermost upcrossing of eta on the right half-line
            let mut found = None;
            for i in (mid..n - 1).rev() {
                if field[i] >= eta && field[i + 1] < eta {
                    let tt = (field[i] - eta) / (field[i] - field[i + 1]);
                    found = Some((i - mid) as f64 * h + tt * h);
                    break;
                }
            }
            if let Some(p) = found {
                times.push(*t);
                pos.push(p);
            }
        }
        if let Some((speed, _)) = fit_speed(&times, &pos) {
            out.push((upper, speed));
        }
    }
    if out.is_empty() {
        return Err(Error::PhasePlane("no interfaces could be tracked".into()));
    }
    Ok(out)
}
