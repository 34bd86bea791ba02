//! Wulff shape of a directional speed table.
//!
//! Given speeds `c(e)` over directions, the spreading radial function is
//! `w(xi) = min over e with e.xi > 0 of c(e)/(e.xi)` and the Wulff shape is
//! the star-shaped set it carves out. The shape is reported as a sampled
//! polygon; no convexification is applied (the set need not be convex).

use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Dim;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
/// Directions are admissible in the minimization only when e.xi exceeds this.
const ADMISSIBLE_DOT: f64 = 1e-9;
/// Angular tolerance of the golden-section refinement.
const ANGLE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedSource {
    Eigenvalue,
    WaveBvp,
    MeasuredFront,
}

/// Sampled map `e -> c(e)`, angles strictly increasing in `[0, 2 pi)`.
#[derive(Debug, Clone)]
pub struct DirectionalSpeedTable {
    pub dim: Dim,
    pub angles: Vec<f64>,
    pub speeds: Vec<f64>,
    pub source: SpeedSource,
}

impl DirectionalSpeedTable {
    pub fn new_2d(angles: Vec<f64>, speeds: Vec<f64>, source: SpeedSource) -> Result<Self> {
        if angles.len() != speeds.len() || angles.is_empty() {
            return Err(Error::SpeedTable(format!(
                "angle/speed length mismatch: {} vs {}",
                angles.len(),
                speeds.len()
            )));
        }
        if speeds.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::SpeedTable("all speeds must be positive".into()));
        }
        let max_gap = TWO_PI / 64.0;
        for i in 0..angles.len() {
            let a = angles[i];
            if !(0.0..TWO_PI).contains(&a) {
                return Err(Error::SpeedTable(format!("angle {a} outside [0, 2 pi)")));
            }
            let gap = if i + 1 < angles.len() {
                angles[i + 1] - a
            } else {
                angles[0] + TWO_PI - a
            };
            if gap <= 0.0 {
                return Err(Error::SpeedTable("angles must be strictly increasing".into()));
            }
            if gap > max_gap + 1e-12 {
                return Err(Error::SpeedTable(format!(
                    "angular gap {gap:.4} exceeds 2 pi / 64"
                )));
            }
        }
        Ok(Self {
            dim: Dim::Two,
            angles,
            speeds,
            source,
        })
    }

    /// One-dimensional table: speeds for the directions -1 and +1.
    pub fn new_1d(speed_neg: f64, speed_pos: f64, source: SpeedSource) -> Result<Self> {
        if !(speed_neg > 0.0 && speed_pos > 0.0) {
            return Err(Error::SpeedTable("all speeds must be positive".into()));
        }
        Ok(Self {
            dim: Dim::One,
            angles: vec![0.0, std::f64::consts::PI],
            speeds: vec![speed_pos, speed_neg],
            source,
        })
    }

    /// Periodic linear interpolation of c at an arbitrary angle.
    pub fn speed_at(&self, angle: f64) -> f64 {
        let a = angle.rem_euclid(TWO_PI);
        let n = self.angles.len();
        let j = match self.angles.binary_search_by(|x| x.partial_cmp(&a).unwrap()) {
            Ok(j) => return self.speeds[j],
            Err(j) => j,
        };
        let (j0, j1, a0, mut a1) = if j == 0 || j == n {
            (n - 1, 0, self.angles[n - 1], self.angles[0] + TWO_PI)
        } else {
            (j - 1, j, self.angles[j - 1], self.angles[j])
        };
        let mut aa = a;
        if aa < a0 {
            aa += TWO_PI;
        }
        if a1 < a0 {
            a1 += TWO_PI;
        }
        let t = (aa - a0) / (a1 - a0);
        self.speeds[j0] * (1.0 - t) + self.speeds[j1] * t
    }

    pub fn min_speed(&self) -> f64 {
        self.speeds.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().cloned().fold(0.0, f64::max)
    }

    /// Max speed over the axis directions (nearest table samples to the four
    /// half-axes in 2D).
    pub fn max_axis_speed(&self) -> f64 {
        match self.dim {
            Dim::One => self.max_speed(),
            Dim::Two => [0.0, 0.5, 1.0, 1.5]
                .iter()
                .map(|&k| self.speed_at(k * std::f64::consts::PI))
                .fold(0.0, f64::max),
        }
    }
}

/// Sampled Wulff shape: boundary radii with per-direction minimizers.
#[derive(Debug, Clone)]
pub struct WulffShape {
    pub dim: Dim,
    pub xi_angles: Vec<f64>,
    pub radii: Vec<f64>,
    /// Minimizing direction angle for each sampled xi.
    pub minimizers: Vec<f64>,
    /// Boundary polygon w(xi) xi, counter-clockwise, not repeated at closure.
    pub vertices: Vec<[f64; 2]>,
}

impl WulffShape {
    /// Radial function at an arbitrary angle (periodic linear interpolation;
    /// assumes the equally spaced sampling produced by `build_wulff`).
    pub fn radius_at(&self, angle: f64) -> f64 {
        let a = angle.rem_euclid(TWO_PI);
        let n = self.xi_angles.len();
        if n == 1 {
            return self.radii[0];
        }
        let step = TWO_PI / n as f64;
        let j0 = ((a / step).floor() as usize).min(n - 1);
        let j1 = (j0 + 1) % n;
        let t = (a - self.xi_angles[j0]) / step;
        self.radii[j0] * (1.0 - t) + self.radii[j1] * t
    }
}

/// Evaluate `w(xi) = min_{e.xi>0} c(e)/(e.xi)` with refinement around the
/// discrete argmin. Returns `(w, minimizing angle)`.
pub fn spreading_speed(table: &DirectionalSpeedTable, xi_angle: f64) -> Result<(f64, f64)> {
    match table.dim {
        Dim::One => {
            // only e = xi is admissible on the line
            let c = table.speed_at(xi_angle);
            Ok((c, xi_angle.rem_euclid(TWO_PI)))
        }
        Dim::Two => {
            let objective = |e_angle: f64| -> f64 {
                let dot = (e_angle - xi_angle).cos();
                if dot <= ADMISSIBLE_DOT {
                    f64::INFINITY
                } else {
                    table.speed_at(e_angle) / dot
                }
            };
            let n = table.angles.len();
            let mut best = (f64::INFINITY, 0.0);
            for j in 0..n {
                let g = objective(table.angles[j]);
                if g < best.0 {
                    best = (g, table.angles[j]);
                }
            }
            if !best.0.is_finite() {
                return Err(Error::SpeedTable(
                    "no admissible direction for xi; table corrupted".into(),
                ));
            }
            // polish inside the two gaps adjacent to the discrete argmin:
            // dense scan first (the interpolated objective is only piecewise
            // smooth), then golden section around the scan winner
            let gap = TWO_PI / n as f64;
            let (lo0, hi0) = (best.1 - gap, best.1 + gap);
            const SCAN: usize = 64;
            for i in 0..=SCAN {
                let a = lo0 + (hi0 - lo0) * i as f64 / SCAN as f64;
                let g = objective(a);
                if g < best.0 {
                    best = (g, a);
                }
            }
            let cell = (hi0 - lo0) / SCAN as f64;
            let mut lo = best.1 - cell;
            let mut hi = best.1 + cell;
            let phi_inv = (5.0_f64.sqrt() - 1.0) / 2.0;
            let (mut a1, mut a2) = (hi - phi_inv * (hi - lo), lo + phi_inv * (hi - lo));
            let (mut g1, mut g2) = (objective(a1), objective(a2));
            while hi - lo > ANGLE_TOL {
                if g1 <= g2 {
                    hi = a2;
                    a2 = a1;
                    g2 = g1;
                    a1 = hi - phi_inv * (hi - lo);
                    g1 = objective(a1);
                } else {
                    lo = a1;
                    a1 = a2;
                    g1 = g2;
                    a2 = lo + phi_inv * (hi - lo);
                    g2 = objective(a2);
                }
            }
            if g1 < best.0 {
                best = (g1, a1);
            }
            if g2 < best.0 {
                best = (g2, a2);
            }
            Ok((best.0, best.1.rem_euclid(TWO_PI)))
        }
    }
}

/// Assemble the Wulff shape on `n_xi` equally spaced directions (2D) or the
/// two half-lines (1D).
pub fn build_wulff(table: &DirectionalSpeedTable, n_xi: usize) -> Result<WulffShape> {
    match table.dim {
        Dim::One => {
            let (w_pos, _) = spreading_speed(table, 0.0)?;
            let (w_neg, _) = spreading_speed(table, std::f64::consts::PI)?;
            Ok(WulffShape {
                dim: Dim::One,
                xi_angles: vec![0.0, std::f64::consts::PI],
                radii: vec![w_pos, w_neg],
                minimizers: vec![0.0, std::f64::consts::PI],
                vertices: vec![[w_pos, 0.0], [-w_neg, 0.0]],
            })
        }
        Dim::Two => {
            let mut xi_angles = Vec::with_capacity(n_xi);
            let mut radii = Vec::with_capacity(n_xi);
            let mut minimizers = Vec::with_capacity(n_xi);
            let mut vertices = Vec::with_capacity(n_xi);
            for i in 0..n_xi {
                let xi = TWO_PI * i as f64 / n_xi as f64;
                let (w, e_min) = spreading_speed(table, xi)?;
                xi_angles.push(xi);
                radii.push(w);
                minimizers.push(e_min);
                vertices.push([w * xi.cos(), w * xi.sin()]);
            }
            Ok(WulffShape {
                dim: Dim::Two,
                xi_angles,
                radii,
                minimizers,
                vertices,
            })
        }
    }
}

/// Supporting-hyperplane check: each minimizer e_xi must be an exterior
/// normal, i.e. `w(xi') (xi'.e_xi) <= c(e_xi)` for every sampled direction.
#[derive(Debug, Clone)]
pub struct NormalPropertyReport {
    /// Max of (w(xi')(xi'.e) - c(e)) / c(e) over all pairs.
    pub max_relative_violation: f64,
    pub passed: bool,
}

pub fn check_normal_property(
    shape: &WulffShape,
    table: &DirectionalSpeedTable,
) -> NormalPropertyReport {
    let mut worst = f64::NEG_INFINITY;
    match shape.dim {
        Dim::One => {
            // interval case: w(+1) <= c(+1) and w(-1) <= c(-1)
            for (i, &ang) in shape.xi_angles.iter().enumerate() {
                let c = table.speed_at(ang);
                worst = worst.max((shape.radii[i] - c) / c);
            }
        }
        Dim::Two => {
            for i in 0..shape.xi_angles.len() {
                let e = shape.minimizers[i];
                let c = table.speed_at(e);
                for j in 0..shape.xi_angles.len() {
                    let dot = (shape.xi_angles[j] - e).cos();
                    let lhs = shape.radii[j] * dot;
                    worst = worst.max((lhs - c) / c);
                }
            }
        }
    }
    NormalPropertyReport {
        max_relative_violation: worst,
        passed: worst <= 1e-6,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Inside,
    Outside,
    BoundaryBand,
}

/// Radial comparison of |x| against `(1 +/- margin) w(x/|x|)`.
pub fn point_classification(shape: &WulffShape, x: &[f64], margin: f64) -> PointClass {
    let r = match shape.dim {
        Dim::One => x[0].abs(),
        Dim::Two => (x[0] * x[0] + x[1] * x[1]).sqrt(),
    };
    if r == 0.0 {
        return PointClass::Inside;
    }
    let angle = match shape.dim {
        Dim::One => {
            if x[0] >= 0.0 {
                0.0
            } else {
                std::f64::consts::PI
            }
        }
        Dim::Two => x[1].atan2(x[0]),
    };
    let w = match shape.dim {
        Dim::One => {
            if x[0] >= 0.0 {
                self_radius(shape, 0)
            } else {
                self_radius(shape, 1)
            }
        }
        Dim::Two => shape.radius_at(angle),
    };
    if r < (1.0 - margin) * w {
        PointClass::Inside
    } else if r > (1.0 + margin) * w {
        PointClass::Outside
    } else {
        PointClass::BoundaryBand
    }
}

fn self_radius(shape: &WulffShape, idx: usize) -> f64 {
    shape.radii[idx]
}

/// Write the polygon as `angle,radius,x,y` rows.
pub fn write_polygon_csv(shape: &WulffShape, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "angle,radius,x,y")?;
    for i in 0..shape.xi_angles.len() {
        writeln!(
            f,
            "{:.12e},{:.12e},{:.12e},{:.12e}",
            shape.xi_angles[i], shape.radii[i], shape.vertices[i][0], shape.vertices[i][1]
        )?;
    }
    Ok(())
}

/// Minimal SVG with the closed boundary path, for downstream figures.
pub fn write_svg(shape: &WulffShape, path: &Path) -> Result<()> {
    let rmax = shape.radii.iter().cloned().fold(0.0, f64::max) * 1.1;
    let mut d = String::new();
    for (i, v) in shape.vertices.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        // SVG y-axis points down
        d.push_str(&format!("{} {:.6} {:.6} ", cmd, v[0], -v[1]));
    }
    d.push('Z');
    let svg = format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" ",
            "viewBox=\"{:.6} {:.6} {:.6} {:.6}\">\n",
            "  <path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{:.6}\"/>\n",
            "</svg>\n"
        ),
        -rmax,
        -rmax,
        2.0 * rmax,
        2.0 * rmax,
        d,
        rmax / 200.0
    );
    std::fs::write(path, svg)?;
    Ok(())
}
