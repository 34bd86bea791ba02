//! Coefficient fields, the reaction-term catalog, grids and validation.
//!
//! Everything downstream (eigensolver, simulator, wave machinery) consumes the
//! types defined here. Periods are normalized to 1 in every axis and the
//! coefficient fields are stored as samples on the unit periodicity cell, so
//! operator assembly is deterministic and serializable.

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Spatial dimension of the problem (1 or 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

/// Discretization parameters shared by the cell problem and the simulation box.
///
/// The cell grid carries `cells_per_period` points per axis with spacing
/// `1/cells_per_period`; the simulation box `[-L, L]^dim` is sampled at the
/// same spacing so periodic coefficients line up with simulation nodes.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub dim: Dim,
    pub cells_per_period: usize,
    pub domain_half_width: f64,
}

impl GridSpec {
    pub fn new(dim: Dim, cells_per_period: usize, domain_half_width: f64) -> Result<Self> {
        if cells_per_period < 8 {
            return Err(Error::InvalidGrid(format!(
                "cells_per_period = {cells_per_period} < 8"
            )));
        }
        if cells_per_period % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "cells_per_period = {cells_per_period} must be even"
            )));
        }
        if !(domain_half_width > 0.0) || !domain_half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "domain_half_width = {domain_half_width}"
            )));
        }
        Ok(Self {
            dim,
            cells_per_period,
            domain_half_width,
        })
    }

    /// Grid spacing, equal on the cell grid and the simulation box.
    pub fn spacing(&self) -> f64 {
        1.0 / self.cells_per_period as f64
    }

    /// Number of simulation nodes per axis, boundary nodes included.
    pub fn sim_points(&self) -> usize {
        let h = self.spacing();
        (2.0 * self.domain_half_width / h).round() as usize + 1
    }

    /// Coordinate of simulation node `i` along one axis.
    pub fn sim_coord(&self, i: usize) -> f64 {
        -self.domain_half_width + i as f64 * self.spacing()
    }

    /// Largest explicit step satisfying the monotonicity condition
    /// `dt (2 dim a_max / h^2 + dim q_max / h + Lip f) <= 1`.
    pub fn time_step(&self, a_max: f64, q_max: f64, lip_f: f64) -> f64 {
        let h = self.spacing();
        let d = self.dim.as_usize() as f64;
        1.0 / (2.0 * d * a_max / (h * h) + d * q_max / h + lip_f)
    }
}

/// Diffusion matrix, advection field and linearization-at-zero sampled on the
/// unit periodicity cell (`n` points per axis, spacing `1/n`).
///
/// In one dimension only `a11`, `q1` and `lin` are populated.
#[derive(Debug, Clone)]
pub struct PeriodicCoefficients {
    pub dim: Dim,
    pub n: usize,
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub lin: Vec<f64>,
}

/// Outcome of `validate_coefficients`.
#[derive(Debug, Clone)]
pub struct CoefficientReport {
    pub a_min: f64,
    pub a_max: f64,
    pub max_divergence: f64,
    pub mean_advection: [f64; 2],
    pub q_max: f64,
    pub failures: Vec<String>,
}

impl CoefficientReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl PeriodicCoefficients {
    /// Sample 1D coefficients from closures on the cell grid.
    pub fn sample_1d(
        n: usize,
        a: impl Fn(f64) -> f64,
        q: impl Fn(f64) -> f64,
        lin: impl Fn(f64) -> f64,
    ) -> Self {
        let h = 1.0 / n as f64;
        let xs = (0..n).map(|i| i as f64 * h);
        Self {
            dim: Dim::One,
            n,
            a11: xs.clone().map(&a).collect(),
            a12: Vec::new(),
            a22: Vec::new(),
            q1: xs.clone().map(&q).collect(),
            q2: Vec::new(),
            lin: xs.map(&lin).collect(),
        }
    }

    /// Sample 2D coefficients from closures on the cell grid.
    /// `a` returns `[a11, a12, a22]`, `q` returns `[q1, q2]`.
    pub fn sample_2d(
        n: usize,
        a: impl Fn(f64, f64) -> [f64; 3],
        q: impl Fn(f64, f64) -> [f64; 2],
        lin: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let h = 1.0 / n as f64;
        let len = n * n;
        let mut out = Self {
            dim: Dim::Two,
            n,
            a11: vec![0.0; len],
            a12: vec![0.0; len],
            a22: vec![0.0; len],
            q1: vec![0.0; len],
            q2: vec![0.0; len],
            lin: vec![0.0; len],
        };
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = (ix as f64 * h, iy as f64 * h);
                let k = iy * n + ix;
                let am = a(x, y);
                let qm = q(x, y);
                out.a11[k] = am[0];
                out.a12[k] = am[1];
                out.a22[k] = am[2];
                out.q1[k] = qm[0];
                out.q2[k] = qm[1];
                out.lin[k] = lin(x, y);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        match self.dim {
            Dim::One => self.n,
            Dim::Two => self.n * self.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(self.dim == Dim::Two);
        iy * self.n + ix
    }

    /// Eigenvalue range of the diffusion matrix over all samples.
    pub fn a_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        match self.dim {
            Dim::One => {
                for &a in &self.a11 {
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
            }
            Dim::Two => {
                for k in 0..self.len() {
                    let (a, b, c) = (self.a11[k], self.a12[k], self.a22[k]);
                    let tr = 0.5 * (a + c);
                    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                    lo = lo.min(tr - disc);
                    hi = hi.max(tr + disc);
                }
            }
        }
        (lo, hi)
    }

    /// Max pointwise norm of the advection field.
    pub fn q_max(&self) -> f64 {
        match self.dim {
            Dim::One => self.q1.iter().fold(0.0, |m, &v| m.max(v.abs())),
            Dim::Two => (0..self.len())
                .map(|k| (self.q1[k] * self.q1[k] + self.q2[k] * self.q2[k]).sqrt())
                .fold(0.0, f64::max),
        }
    }

    /// Max norm of the central-difference divergence of q on the cell grid.
    pub fn max_divergence(&self) -> f64 {
        let n = self.n;
        let h = 1.0 / n as f64;
        let mut worst: f64 = 0.0;
        match self.dim {
            Dim::One => {
                for i in 0..n {
                    let div = (self.q1[(i + 1) % n] - self.q1[(i + n - 1) % n]) / (2.0 * h);
                    worst = worst.max(div.abs());
                }
            }
            Dim::Two => {
                for iy in 0..n {
                    for ix in 0..n {
                        let dq1 = (self.q1[self.idx((ix + 1) % n, iy)]
                            - self.q1[self.idx((ix + n - 1) % n, iy)])
                            / (2.0 * h);
                        let dq2 = (self.q2[self.idx(ix, (iy + 1) % n)]
                            - self.q2[self.idx(ix, (iy + n - 1) % n)])
                            / (2.0 * h);
                        worst = worst.max((dq1 + dq2).abs());
                    }
                }
            }
        }
        worst
    }

    /// Cell average of the advection field.
    pub fn mean_advection(&self) -> [f64; 2] {
        let len = self.len() as f64;
        let m1 = self.q1.iter().sum::<f64>() / len;
        let m2 = if self.dim == Dim::Two {
            self.q2.iter().sum::<f64>() / len
        } else {
            0.0
        };
        [m1, m2]
    }

    /// Periodic bilinear interpolation of a sampled cell field at position `x`.
    fn interp(&self, field: &[f64], x: &[f64]) -> f64 {
        let n = self.n;
        let nf = n as f64;
        match self.dim {
            Dim::One => {
                let s = (x[0].rem_euclid(1.0)) * nf;
                let i0 = s.floor() as usize % n;
                let w = s - s.floor();
                field[i0] * (1.0 - w) + field[(i0 + 1) % n] * w
            }
            Dim::Two => {
                let sx = (x[0].rem_euclid(1.0)) * nf;
                let sy = (x[1].rem_euclid(1.0)) * nf;
                let ix = sx.floor() as usize % n;
                let iy = sy.floor() as usize % n;
                let (wx, wy) = (sx - sx.floor(), sy - sy.floor());
                let (ix1, iy1) = ((ix + 1) % n, (iy + 1) % n);
                field[self.idx(ix, iy)] * (1.0 - wx) * (1.0 - wy)
                    + field[self.idx(ix1, iy)] * wx * (1.0 - wy)
                    + field[self.idx(ix, iy1)] * (1.0 - wx) * wy
                    + field[self.idx(ix1, iy1)] * wx * wy
            }
        }
    }

    pub fn a11_at(&self, x: &[f64]) -> f64 {
        self.interp(&self.a11, x)
    }

    pub fn a22_at(&self, x: &[f64]) -> f64 {
        self.interp(&self.a22, x)
    }

    pub fn a12_at(&self, x: &[f64]) -> f64 {
        if self.a12.is_empty() {
            0.0
        } else {
            self.interp(&self.a12, x)
        }
    }

    pub fn q_at(&self, x: &[f64]) -> [f64; 2] {
        match self.dim {
            Dim::One => [self.interp(&self.q1, x), 0.0],
            Dim::Two => [self.interp(&self.q1, x), self.interp(&self.q2, x)],
        }
    }
}

/// Ellipticity, divergence-free and zero-mean checks for a coefficient set.
pub fn validate_coefficients(c: &PeriodicCoefficients) -> CoefficientReport {
    let mut failures = Vec::new();
    for (name, field) in [
        ("a11", &c.a11),
        ("a12", &c.a12),
        ("a22", &c.a22),
        ("q1", &c.q1),
        ("q2", &c.q2),
        ("lin", &c.lin),
    ] {
        if field.iter().any(|v| !v.is_finite()) {
            failures.push(format!("non-finite sample in {name}"));
        }
    }
    let (a_min, a_max) = c.a_bounds();
    if !(a_min > 0.0) {
        failures.push(format!(
            "uniform ellipticity violated: min diffusion eigenvalue {a_min:.6e} <= 0"
        ));
    }
    let q_max = c.q_max();
    let max_divergence = c.max_divergence();
    let div_tol = 1e-8 * q_max.max(f64::MIN_POSITIVE);
    if q_max > 0.0 && max_divergence > div_tol {
        failures.push(format!(
            "advection not divergence-free: max |div q| = {max_divergence:.6e} > {div_tol:.3e}"
        ));
    }
    let mean_advection = c.mean_advection();
    let mean_norm = (mean_advection[0] * mean_advection[0]
        + mean_advection[1] * mean_advection[1])
        .sqrt();
    let mean_tol = 1e-8 * q_max.max(1.0);
    if mean_norm > mean_tol {
        failures.push(format!(
            "advection has nonzero cell average: |mean q| = {mean_norm:.6e} > {mean_tol:.3e}"
        ));
    }
    CoefficientReport {
        a_min,
        a_max,
        max_divergence,
        mean_advection,
        q_max,
        failures,
    }
}

/// Tagged nonlinearity. All catalog reactions vanish at u = 0 and u = 1 and
/// are extended by zero outside [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub enum ReactionKind {
    /// f = u(1-u); the linearization at 0 governs the spreading speed.
    Kpp,
    /// f = u^p (1-u); pushed-front regime for p > 1.
    MonostablePower { p: f64 },
    /// f = 2 max(0, u - theta)(1 - u); vanishes on [0, theta].
    Combustion { theta: f64 },
    /// f = u(1-u)(u - theta), theta in (0, 1/2).
    Bistable { theta: f64 },
    /// f = -scale * prod_i (u - z_i) over the ascending zero list (odd count,
    /// first 0, last 1), so that u = 0 is stable from above.
    Multistable { zeros: Vec<f64>, scale: f64 },
    /// f(t, u) = u(1-u)(u - theta(t)) with the almost-periodic modulation
    /// theta(t) = theta_bar + amp (sin t + sin sqrt(2) t).
    ApTimeBistable { theta_bar: f64, amp: f64 },
}

/// Optional periodic spatial factor r(x) with f(x, u) = r(x) f0(u).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialModulation {
    Uniform,
    /// r(x) = 1 + amplitude * sin(2 pi x_axis)
    SineAxis { axis: usize, amplitude: f64 },
}

impl SpatialModulation {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            SpatialModulation::Uniform => 1.0,
            SpatialModulation::SineAxis { axis, amplitude } => {
                1.0 + amplitude * (TWO_PI * x[axis]).sin()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionTerm {
    pub kind: ReactionKind,
    pub modulation: SpatialModulation,
}

impl ReactionKind {
    /// Base nonlinearity at `u` (time enters only in the a.p. case).
    pub fn base(&self, t: f64, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0; // extension by zero outside [0, 1]
        }
        match self {
            ReactionKind::Kpp => u * (1.0 - u),
            ReactionKind::MonostablePower { p } => u.powf(*p) * (1.0 - u),
            ReactionKind::Combustion { theta } => 2.0 * (u - theta).max(0.0) * (1.0 - u),
            ReactionKind::Bistable { theta } => u * (1.0 - u) * (u - theta),
            ReactionKind::Multistable { zeros, scale } => {
                -scale * zeros.iter().fold(1.0, |p, z| p * (u - z))
            }
            ReactionKind::ApTimeBistable { theta_bar, amp } => {
                u * (1.0 - u) * (u - ap_theta(t, *theta_bar, *amp))
            }
        }
    }

    /// d/du of the base nonlinearity (interior of [0, 1]).
    pub fn base_deriv(&self, t: f64, u: f64) -> f64 {
        match self {
            ReactionKind::Kpp => 1.0 - 2.0 * u,
            ReactionKind::MonostablePower { p } => {
                p * u.powf(p - 1.0) * (1.0 - u) - u.powf(*p)
            }
            ReactionKind::Combustion { theta } => {
                if u > *theta {
                    2.0 * (1.0 + theta - 2.0 * u)
                } else {
                    0.0
                }
            }
            ReactionKind::Bistable { theta } => {
                -3.0 * u * u + 2.0 * (1.0 + theta) * u - theta
            }
            ReactionKind::Multistable { zeros, scale } => {
                let mut sum = 0.0;
                for j in 0..zeros.len() {
                    let mut p = 1.0;
                    for (i, z) in zeros.iter().enumerate() {
                        if i != j {
                            p *= u - z;
                        }
                    }
                    sum += p;
                }
                -scale * sum
            }
            ReactionKind::ApTimeBistable { theta_bar, amp } => {
                let th = ap_theta(t, *theta_bar, *amp);
                -3.0 * u * u + 2.0 * (1.0 + th) * u - th
            }
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, ReactionKind::ApTimeBistable { amp, .. } if *amp != 0.0)
    }
}

/// theta(t) for the almost-periodic bistable reaction.
pub fn ap_theta(t: f64, theta_bar: f64, amp: f64) -> f64 {
    theta_bar + amp * (t.sin() + (std::f64::consts::SQRT_2 * t).sin())
}

impl ReactionTerm {
    pub fn new(kind: ReactionKind, modulation: SpatialModulation) -> Self {
        Self { kind, modulation }
    }

    /// f(x, t, u) with the spatial modulation applied.
    pub fn eval(&self, x: &[f64], t: f64, u: f64) -> f64 {
        self.modulation.value(x) * self.kind.base(t, u)
    }

    /// d/du f(x, t, u).
    pub fn deriv_u(&self, x: &[f64], t: f64, u: f64) -> f64 {
        self.modulation.value(x) * self.kind.base_deriv(t, u)
    }

    /// Global Lipschitz constant of f in u, by dense scan over u in [0, 1]
    /// (and over the theta excursion range for the a.p. reaction).
    pub fn lipschitz_u(&self) -> f64 {
        let r_max = match self.modulation {
            SpatialModulation::Uniform => 1.0,
            SpatialModulation::SineAxis { amplitude, .. } => 1.0 + amplitude.abs(),
        };
        let scan = |t: f64| -> f64 {
            (0..=4096)
                .map(|i| self.kind.base_deriv(t, i as f64 / 4096.0).abs())
                .fold(0.0, f64::max)
        };
        let base = match self.kind {
            ReactionKind::ApTimeBistable { .. } => {
                // sample the almost-periodic phase densely over one long sweep
                (0..=64).map(|i| scan(i as f64 * 0.7)).fold(0.0, f64::max)
            }
            _ => scan(0.0),
        };
        r_max * base
    }

    /// Eigenvalue route is only valid under the KPP condition.
    pub fn is_kpp(&self) -> bool {
        matches!(self.kind, ReactionKind::Kpp)
    }

    /// The autonomous scalar profile f0(u), for the 1D wave machinery.
    /// Errors for genuinely time-dependent reactions.
    pub fn scalar_autonomous(&self) -> Result<impl Fn(f64) -> f64 + Clone + '_> {
        if self.kind.is_time_dependent() {
            return Err(Error::ShootingPrecondition(
                "reaction is time-dependent; the autonomous wave machinery does not apply"
                    .into(),
            ));
        }
        let kind = self.kind.clone();
        Ok(move |u: f64| kind.base(0.0, u))
    }

    /// Known zeros of the autonomous profile, when the kind carries them.
    pub fn zeros_hint(&self) -> Vec<f64> {
        match &self.kind {
            ReactionKind::Kpp | ReactionKind::MonostablePower { .. } => vec![0.0, 1.0],
            ReactionKind::Combustion { theta } => vec![0.0, *theta, 1.0],
            ReactionKind::Bistable { theta } => vec![0.0, *theta, 1.0],
            ReactionKind::Multistable { zeros, .. } => zeros.clone(),
            ReactionKind::ApTimeBistable { theta_bar, .. } => vec![0.0, *theta_bar, 1.0],
        }
    }
}

/// Parameter overrides for catalog entries.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelParams {
    pub theta: Option<f64>,
    pub amp: Option<f64>,
}

/// Expected outputs documented with each catalog entry. Values marked as
/// closed forms are exact; the remaining targets are pinned by the oracle
/// fixtures in the test suite.
#[derive(Debug, Clone, Default)]
pub struct ExpectedOutputs {
    /// Critical spreading speed along the first axis, when known in closed form.
    pub critical_speed: Option<f64>,
    /// Unique 1D wave speed for combustion/bistable entries, when known in
    /// closed form.
    pub wave_speed: Option<f64>,
    /// (level, speed) tiers of the propagating terrace, lowest tier first,
    /// when known in closed form.
    pub terrace: Option<Vec<(f64, f64)>>,
    pub note: &'static str,
}

/// A fully populated catalog model.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub dim: Dim,
    pub coeffs: PeriodicCoefficients,
    pub reaction: ReactionTerm,
    pub expected: ExpectedOutputs,
}

impl Model {
    pub fn lipschitz_u(&self) -> f64 {
        self.reaction.lipschitz_u()
    }
}

pub const CATALOG: &[&str] = &[
    "homogeneous_kpp",
    "sinusoidal_kpp",
    "cubic_bistable",
    "combustion",
    "quintic_multistable",
    "ap_time_bistable",
];

/// Quintic catalog constants: zeros 0 < a < theta1 < b < 1 chosen so both
/// terrace waves have positive speed and the lower tier is strictly faster.
pub const QUINTIC_ZEROS: [f64; 5] = [0.0, 0.1, 0.5, 0.75, 1.0];
pub const QUINTIC_SCALE: f64 = 16.0;

/// Build a catalog model sampled with `cells` points per cell axis.
pub fn builtin_model(name: &str, dim: Dim, cells: usize, params: &ModelParams) -> Result<Model> {
    let identity = |c: usize| match dim {
        Dim::One => PeriodicCoefficients::sample_1d(c, |_| 1.0, |_| 0.0, |_| 0.0),
        Dim::Two => {
            PeriodicCoefficients::sample_2d(c, |_, _| [1.0, 0.0, 1.0], |_, _| [0.0, 0.0], |_, _| 0.0)
        }
    };
    let with_lin = |mut coeffs: PeriodicCoefficients,
                    reaction: &ReactionTerm|
     -> PeriodicCoefficients {
        let n = coeffs.n;
        let h = 1.0 / n as f64;
        match dim {
            Dim::One => {
                for i in 0..n {
                    coeffs.lin[i] = reaction.deriv_u(&[i as f64 * h], 0.0, 0.0);
                }
            }
            Dim::Two => {
                for iy in 0..n {
                    for ix in 0..n {
                        let k = iy * n + ix;
                        coeffs.lin[k] =
                            reaction.deriv_u(&[ix as f64 * h, iy as f64 * h], 0.0, 0.0);
                    }
                }
            }
        }
        coeffs
    };

    let (reaction, expected) = match name {
        "homogeneous_kpp" => (
            ReactionTerm::new(ReactionKind::Kpp, SpatialModulation::Uniform),
            ExpectedOutputs {
                critical_speed: Some(2.0),
                note: "c* = 2 sqrt(f'(0)) = 2, exact for the homogeneous KPP equation",
                ..Default::default()
            },
        ),
        "sinusoidal_kpp" => {
            let amplitude = params.amp.unwrap_or(0.5);
            (
                ReactionTerm::new(
                    ReactionKind::Kpp,
                    SpatialModulation::SineAxis { axis: 0, amplitude },
                ),
                ExpectedOutputs {
                    note: "critical speed pinned by the dense-eigensolver fixtures",
                    ..Default::default()
                },
            )
        }
        "cubic_bistable" => {
            let theta = params.theta.unwrap_or(0.3);
            if !(0.0 < theta && theta < 0.5) {
                return Err(Error::InvalidCoefficients(format!(
                    "bistable theta = {theta} outside (0, 1/2)"
                )));
            }
            let c = (1.0 - 2.0 * theta) / std::f64::consts::SQRT_2;
            (
                ReactionTerm::new(ReactionKind::Bistable { theta }, SpatialModulation::Uniform),
                ExpectedOutputs {
                    wave_speed: Some(c),
                    terrace: Some(vec![(1.0, c)]),
                    note: "unique wave speed (1 - 2 theta)/sqrt(2), exact via the profile 1/(1+exp(x/sqrt(2)))",
                    ..Default::default()
                },
            )
        }
        "combustion" => {
            let theta = params.theta.unwrap_or(0.3);
            if !(0.0 < theta && theta < 1.0) {
                return Err(Error::InvalidCoefficients(format!(
                    "ignition level theta = {theta} outside (0, 1)"
                )));
            }
            (
                ReactionTerm::new(
                    ReactionKind::Combustion { theta },
                    SpatialModulation::Uniform,
                ),
                ExpectedOutputs {
                    note: "unique wave speed pinned by the shooting oracle fixtures",
                    ..Default::default()
                },
            )
        }
        "quintic_multistable" => (
            ReactionTerm::new(
                ReactionKind::Multistable {
                    zeros: QUINTIC_ZEROS.to_vec(),
                    scale: QUINTIC_SCALE,
                },
                SpatialModulation::Uniform,
            ),
            ExpectedOutputs {
                note: "two-tier terrace; both wave speeds pinned by the shooting oracle fixtures",
                ..Default::default()
            },
        ),
        "ap_time_bistable" => {
            let theta_bar = params.theta.unwrap_or(0.25);
            let amp = params.amp.unwrap_or(0.05);
            let c = (1.0 - 2.0 * theta_bar) / std::f64::consts::SQRT_2;
            (
                ReactionTerm::new(
                    ReactionKind::ApTimeBistable { theta_bar, amp },
                    SpatialModulation::Uniform,
                ),
                ExpectedOutputs {
                    wave_speed: if amp == 0.0 { Some(c) } else { None },
                    note: "average front speed; exact only in the autonomous amp = 0 limit",
                    ..Default::default()
                },
            )
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };

    let coeffs = with_lin(identity(cells), &reaction);
    Ok(Model {
        name: name.to_string(),
        dim,
        coeffs,
        reaction,
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_rejects_bad_parameters() {
        assert!(GridSpec::new(Dim::One, 4, 10.0).is_err());
        assert!(GridSpec::new(Dim::One, 9, 10.0).is_err());
        assert!(GridSpec::new(Dim::One, 64, -1.0).is_err());
        let g = GridSpec::new(Dim::One, 64, 10.0).unwrap();
        assert_eq!(g.sim_points(), 1281);
        assert!(g.spacing() > 0.0);
        assert!(g.time_step(1.0, 0.0, 1.0) > 0.0);
    }

    #[test]
    fn constant_fields_validate_cleanly() {
        let c = PeriodicCoefficients::sample_2d(
            16,
            |_, _| [1.0, 0.0, 1.0],
            |_, _| [0.0, 0.0],
            |_, _| 1.0,
        );
        let rep = validate_coefficients(&c);
        assert!(rep.passed(), "{:?}", rep.failures);
        assert_eq!(rep.a_min, 1.0);
        assert_eq!(rep.a_max, 1.0);
        assert_eq!(rep.max_divergence, 0.0);
        assert_eq!(rep.mean_advection, [0.0, 0.0]);
    }

    #[test]
    fn shear_advection_is_divergence_free() {
        // q = (sin 2 pi x2, sin 2 pi x1): each component constant along its own axis
        let c = PeriodicCoefficients::sample_2d(
            32,
            |_, _| [1.0, 0.0, 1.0],
            |x, y| [(TWO_PI * y).sin(), (TWO_PI * x).sin()],
            |_, _| 1.0,
        );
        let rep = validate_coefficients(&c);
        assert!(rep.passed(), "{:?}", rep.failures);
        assert!(rep.max_divergence <= 1e-12);
        assert!(rep.mean_advection[0].abs() <= 1e-12);
        assert!(rep.mean_advection[1].abs() <= 1e-12);
    }

    #[test]
    fn linear_advection_fails_divergence() {
        let c = PeriodicCoefficients::sample_2d(
            32,
            |_, _| [1.0, 0.0, 1.0],
            |x, _| [x, 0.0],
            |_, _| 1.0,
        );
        let rep = validate_coefficients(&c);
        assert!(!rep.passed());
        assert!(rep
            .failures
            .iter()
            .any(|f| f.contains("divergence-free") || f.contains("cell average")));
    }

    #[test]
    fn catalog_entries_match_their_definitions() {
        let m = builtin_model("homogeneous_kpp", Dim::One, 64, &ModelParams::default()).unwrap();
        assert_eq!(m.reaction.eval(&[0.3], 0.0, 0.5), 0.25);
        assert_eq!(m.coeffs.a11[7], 1.0);
        assert_eq!(m.coeffs.q1[7], 0.0);

        let m = builtin_model("sinusoidal_kpp", Dim::One, 64, &ModelParams::default()).unwrap();
        let x = 5.0 / 64.0;
        let r = 1.0 + 0.5 * (TWO_PI * x).sin();
        assert!((m.reaction.eval(&[x], 0.0, 0.5) - r * 0.25).abs() < 1e-15);
        assert!((m.coeffs.lin[5] - r).abs() < 1e-15);

        let m = builtin_model(
            "cubic_bistable",
            Dim::One,
            64,
            &ModelParams {
                theta: Some(0.3),
                amp: None,
            },
        )
        .unwrap();
        let u = 0.4;
        assert!((m.reaction.eval(&[0.0], 0.0, u) - u * (1.0 - u) * (u - 0.3)).abs() < 1e-15);

        assert!(builtin_model("nope", Dim::One, 64, &ModelParams::default()).is_err());
    }

    #[test]
    fn reactions_vanish_at_equilibria_and_outside() {
        for name in CATALOG {
            let m = builtin_model(name, Dim::One, 32, &ModelParams::default()).unwrap();
            for t in [0.0, 1.7, 31.4] {
                for x in [0.0, 0.37] {
                    assert_eq!(m.reaction.eval(&[x], t, 0.0), 0.0, "{name}");
                    assert_eq!(m.reaction.eval(&[x], t, 1.0), 0.0, "{name}");
                    assert_eq!(m.reaction.eval(&[x], t, -0.25), 0.0, "{name}");
                    assert_eq!(m.reaction.eval(&[x], t, 1.25), 0.0, "{name}");
                }
            }
        }
    }

    #[test]
    fn coefficients_are_periodic_to_machine_precision() {
        let m = builtin_model("sinusoidal_kpp", Dim::Two, 24, &ModelParams::default()).unwrap();
        for &(x, y) in &[(0.13, 0.71), (0.5, 0.25), (0.999, 0.001)] {
            let base = m.reaction.eval(&[x, y], 0.0, 0.5);
            let shifted = m.reaction.eval(&[x + 1.0, y + 2.0], 0.0, 0.5);
            assert!((base - shifted).abs() <= 1e-12 * base.abs().max(1.0));
            let a = m.coeffs.a11_at(&[x, y]);
            let a2 = m.coeffs.a11_at(&[x + 3.0, y - 1.0]);
            assert!((a - a2).abs() <= 1e-12);
        }
    }

    #[test]
    fn multistable_derivative_matches_finite_differences() {
        let kind = ReactionKind::Multistable {
            zeros: QUINTIC_ZEROS.to_vec(),
            scale: QUINTIC_SCALE,
        };
        let eps = 1e-6;
        for i in 1..20 {
            let u = i as f64 / 20.0;
            let fd = (kind.base(0.0, u + eps) - kind.base(0.0, u - eps)) / (2.0 * eps);
            assert!((kind.base_deriv(0.0, u) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn ap_reaction_follows_the_moving_threshold() {
        let kind = ReactionKind::ApTimeBistable {
            theta_bar: 0.25,
            amp: 0.05,
        };
        let t = 2.0;
        let th = ap_theta(t, 0.25, 0.05);
        let u = 0.6;
        assert!((kind.base(t, u) - u * (1.0 - u) * (u - th)).abs() < 1e-15);
    }
}
