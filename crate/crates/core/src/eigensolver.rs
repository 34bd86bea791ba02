//! Periodic cell operator, principal eigenvalue and critical front speed.
//!
//! The tilted operator on the unit cell is
//! `L_z phi = div(A grad phi) - 2 z.A grad phi + q.grad phi
//!          + (z.Az - div(Az) - q.z + lin) phi`,
//! discretized with second-order central differences (flux form for the
//! diagonal diffusion blocks) under periodic boundary conditions. Its
//! principal eigenvalue `k(z)` carries a positive periodic eigenfunction,
//! and the critical speed in a direction `e` is the minimum of
//! `k(lambda e)/lambda` over `lambda > 0`.

use crate::error::{Error, Result};
use crate::model::{Dim, GridSpec, PeriodicCoefficients};

/// Sparse stencil discretization of the tilted cell operator.
///
/// 3-point in 1D, 9-point in 2D (corner weights carry the mixed-derivative
/// terms of an anisotropic diffusion matrix).
#[derive(Debug, Clone)]
pub struct CellOperator {
    pub dim: Dim,
    pub n: usize,
    pub h: f64,
    pub z: [f64; 2],
    center: Vec<f64>,
    east: Vec<f64>,
    west: Vec<f64>,
    north: Vec<f64>,
    south: Vec<f64>,
    ne: Vec<f64>,
    nw: Vec<f64>,
    se: Vec<f64>,
    sw: Vec<f64>,
    /// Zeroth-order coefficient `z.Az - div(Az) - q.z + lin` sampled per node;
    /// equals the operator row sums because every difference term of a
    /// constant vanishes.
    zeroth: Vec<f64>,
}

impl CellOperator {
    pub fn len(&self) -> usize {
        match self.dim {
            Dim::One => self.n,
            Dim::Two => self.n * self.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeroth_order(&self) -> &[f64] {
        &self.zeroth
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.center
    }

    /// Row sums of the assembled matrix (one per node).
    pub fn row_sums(&self) -> Vec<f64> {
        let ones = vec![1.0; self.len()];
        let mut out = vec![0.0; self.len()];
        self.apply(&ones, &mut out);
        out
    }

    /// y = L x
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        match self.dim {
            Dim::One => {
                for i in 0..n {
                    let ip = if i + 1 == n { 0 } else { i + 1 };
                    let im = if i == 0 { n - 1 } else { i - 1 };
                    y[i] = self.center[i] * x[i] + self.east[i] * x[ip] + self.west[i] * x[im];
                }
            }
            Dim::Two => {
                for iy in 0..n {
                    let iyp = if iy + 1 == n { 0 } else { iy + 1 };
                    let iym = if iy == 0 { n - 1 } else { iy - 1 };
                    let row = iy * n;
                    let rowp = iyp * n;
                    let rowm = iym * n;
                    for ix in 0..n {
                        let ixp = if ix + 1 == n { 0 } else { ix + 1 };
                        let ixm = if ix == 0 { n - 1 } else { ix - 1 };
                        let k = row + ix;
                        y[k] = self.center[k] * x[k]
                            + self.east[k] * x[row + ixp]
                            + self.west[k] * x[row + ixm]
                            + self.north[k] * x[rowp + ix]
                            + self.south[k] * x[rowm + ix]
                            + self.ne[k] * x[rowp + ixp]
                            + self.nw[k] * x[rowp + ixm]
                            + self.se[k] * x[rowm + ixp]
                            + self.sw[k] * x[rowm + ixm];
                    }
                }
            }
        }
    }
}

/// Assemble the discretization of `L_z` for validated coefficients.
pub fn assemble_cell_operator(
    coeffs: &PeriodicCoefficients,
    z: &[f64],
    grid: &GridSpec,
) -> Result<CellOperator> {
    if coeffs.dim != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim.as_usize(),
            got: coeffs.dim.as_usize(),
        });
    }
    if z.len() != coeffs.dim.as_usize() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.dim.as_usize(),
            got: z.len(),
        });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("frequency vector z"));
    }
    let n = coeffs.n;
    let h = 1.0 / n as f64;
    let h2 = h * h;
    let len = coeffs.len();
    let mut op = CellOperator {
        dim: coeffs.dim,
        n,
        h,
        z: [z[0], if z.len() > 1 { z[1] } else { 0.0 }],
        center: vec![0.0; len],
        east: vec![0.0; len],
        west: vec![0.0; len],
        north: vec![0.0; if coeffs.dim == Dim::Two { len } else { 0 }],
        south: vec![0.0; if coeffs.dim == Dim::Two { len } else { 0 }],
        ne: vec![0.0; if coeffs.dim == Dim::Two { len } else { 0 }],
        nw: vec![0.0; if coeffs.dim == Dim::Two { len } else { 0 }],
        se: vec![0.0; if coeffs.dim == Dim::Two { len } else { 0 }],
        sw: vec![0.0; if coeffs.dim == Dim::Two { len } else { 0 }],
        zeroth: vec![0.0; len],
    };

    match coeffs.dim {
        Dim::One => {
            let zz = z[0];
            for i in 0..n {
                let ip = (i + 1) % n;
                let im = (i + n - 1) % n;
                let a = coeffs.a11[i];
                if !a.is_finite() || !coeffs.lin[i].is_finite() {
                    return Err(Error::NonFinite("coefficient sample"));
                }
                let ae = 0.5 * (a + coeffs.a11[ip]);
                let aw = 0.5 * (a + coeffs.a11[im]);
                // flux-form diffusion
                op.east[i] += ae / h2;
                op.west[i] += aw / h2;
                op.center[i] -= (ae + aw) / h2;
                // first order: (-2 a z + q) d/dx, central
                let b = -2.0 * a * zz + coeffs.q1[i];
                op.east[i] += b / (2.0 * h);
                op.west[i] -= b / (2.0 * h);
                // zeroth order, with d(a z)/dx by central differencing of samples
                let d_az = (coeffs.a11[ip] - coeffs.a11[im]) * zz / (2.0 * h);
                let v = zz * zz * a - d_az - coeffs.q1[i] * zz + coeffs.lin[i];
                op.center[i] += v;
                op.zeroth[i] = v;
            }
        }
        Dim::Two => {
            let (z1, z2) = (z[0], z[1]);
            for iy in 0..n {
                let iyp = (iy + 1) % n;
                let iym = (iy + n - 1) % n;
                for ix in 0..n {
                    let ixp = (ix + 1) % n;
                    let ixm = (ix + n - 1) % n;
                    let k = coeffs.idx(ix, iy);
                    let ke = coeffs.idx(ixp, iy);
                    let kw = coeffs.idx(ixm, iy);
                    let kn = coeffs.idx(ix, iyp);
                    let ks = coeffs.idx(ix, iym);
                    let (a11, a12, a22) = (coeffs.a11[k], coeffs.a12[k], coeffs.a22[k]);
                    if !(a11.is_finite() && a12.is_finite() && a22.is_finite()) {
                        return Err(Error::NonFinite("coefficient sample"));
                    }
                    // flux-form diagonal diffusion
                    let ae = 0.5 * (a11 + coeffs.a11[ke]);
                    let aw = 0.5 * (a11 + coeffs.a11[kw]);
                    let an = 0.5 * (a22 + coeffs.a22[kn]);
                    let a_s = 0.5 * (a22 + coeffs.a22[ks]);
                    op.east[k] += ae / h2;
                    op.west[k] += aw / h2;
                    op.north[k] += an / h2;
                    op.south[k] += a_s / h2;
                    op.center[k] -= (ae + aw + an + a_s) / h2;
                    // mixed derivative terms: central of central
                    let c4 = 1.0 / (4.0 * h2);
                    op.ne[k] += (coeffs.a12[ke] + coeffs.a12[kn]) * c4;
                    op.sw[k] += (coeffs.a12[kw] + coeffs.a12[ks]) * c4;
                    op.nw[k] -= (coeffs.a12[kw] + coeffs.a12[kn]) * c4;
                    op.se[k] -= (coeffs.a12[ke] + coeffs.a12[ks]) * c4;
                    // first order: b = -2 A z + q
                    let b1 = -2.0 * (a11 * z1 + a12 * z2) + coeffs.q1[k];
                    let b2 = -2.0 * (a12 * z1 + a22 * z2) + coeffs.q2[k];
                    op.east[k] += b1 / (2.0 * h);
                    op.west[k] -= b1 / (2.0 * h);
                    op.north[k] += b2 / (2.0 * h);
                    op.south[k] -= b2 / (2.0 * h);
                    // zeroth order
                    let z_az = a11 * z1 * z1 + 2.0 * a12 * z1 * z2 + a22 * z2 * z2;
                    let az1_e = coeffs.a11[ke] * z1 + coeffs.a12[ke] * z2;
                    let az1_w = coeffs.a11[kw] * z1 + coeffs.a12[kw] * z2;
                    let az2_n = coeffs.a12[kn] * z1 + coeffs.a22[kn] * z2;
                    let az2_s = coeffs.a12[ks] * z1 + coeffs.a22[ks] * z2;
                    let div_az = (az1_e - az1_w) / (2.0 * h) + (az2_n - az2_s) / (2.0 * h);
                    let qz = coeffs.q1[k] * z1 + coeffs.q2[k] * z2;
                    let v = z_az - div_az - qz + coeffs.lin[k];
                    op.center[k] += v;
                    op.zeroth[k] = v;
                }
            }
        }
    }
    Ok(op)
}

/// Principal eigenvalue with positive periodic eigenfunction.
#[derive(Debug, Clone)]
pub struct PrincipalEigenpair {
    pub z: [f64; 2],
    pub k: f64,
    /// Eigenfunction on the cell grid, normalized to max = 1.
    pub phi: Vec<f64>,
    /// Max-norm of `L phi - k phi`.
    pub residual: f64,
    pub iterations: usize,
}

/// Tolerance profile for the resolvent power iteration.
#[derive(Debug, Clone, Copy)]
pub struct EigenTolerance {
    /// Stop once successive Rayleigh-quotient eigenvalue estimates differ by
    /// less than this.
    pub k_tol: f64,
    /// Required residual, relative to |k| + 1.
    pub residual_factor: f64,
}

impl Default for EigenTolerance {
    fn default() -> Self {
        Self {
            k_tol: 1e-12,
            residual_factor: 1e-8,
        }
    }
}

impl EigenTolerance {
    /// Relaxed profile for bracketing probes that only feed comparisons.
    pub fn coarse() -> Self {
        Self {
            k_tol: 1e-9,
            residual_factor: 1e-4,
        }
    }
}

const MAX_POWER_ITERATIONS: usize = 50_000;
const TAU_RETRIES: usize = 3;

/// Compute the principal eigenpair by resolvent power iteration: repeatedly
/// solve `(I - tau L) v_{n+1} = v_n` with `tau = 0.1/(1 + max |V|)` where `V`
/// is the zeroth-order (diagonal) part of the operator, renormalize, and read
/// the eigenvalue off the resolvent Rayleigh quotient `mu` as
/// `k = (1 - 1/mu)/tau`.
pub fn principal_eigenvalue(op: &CellOperator) -> Result<PrincipalEigenpair> {
    principal_eigenvalue_with(op, EigenTolerance::default(), None)
}

pub fn principal_eigenvalue_with(
    op: &CellOperator,
    tol: EigenTolerance,
    start: Option<&[f64]>,
) -> Result<PrincipalEigenpair> {
    let max_v = op
        .zeroth
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v.abs()));
    let mut tau = 0.1 / (1.0 + max_v);
    let mut last_err = None;
    for _retry in 0..=TAU_RETRIES {
        match power_iterate(op, tau, tol, start) {
            Ok(pair) => return Ok(pair),
            Err(e @ Error::EigenPositivity { .. }) => {
                last_err = Some(e);
                tau /= 10.0; // shift too aggressive for this tilt; soften it
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::EigenNonConvergence {
        iterations: MAX_POWER_ITERATIONS,
    }))
}

fn power_iterate(
    op: &CellOperator,
    tau: f64,
    tol: EigenTolerance,
    start: Option<&[f64]>,
) -> Result<PrincipalEigenpair> {
    let len = op.len();
    let mut v: Vec<f64> = match start {
        Some(s) if s.len() == len => s.to_vec(),
        _ => vec![1.0; len],
    };
    normalize_max(&mut v);

    let mut solver = ResolventSolver::new(op, tau)?;
    let mut w = vec![0.0; len];
    let mut k_prev = f64::INFINITY;
    let mut k_est = 0.0;
    let mut iterations = 0;

    for it in 1..=MAX_POWER_ITERATIONS {
        iterations = it;
        solver.solve(&v, &mut w)?;
        // mu - 1 = <v, w - v>/<v, v>, cancellation-free for tiny tau
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..len {
            num += v[i] * (w[i] - v[i]);
            den += v[i] * v[i];
        }
        let s = num / den;
        k_est = s / (tau * (1.0 + s));
        if !k_est.is_finite() {
            return Err(Error::NonFinite("eigenvalue estimate"));
        }
        std::mem::swap(&mut v, &mut w);
        normalize_max(&mut v);
        if (k_est - k_prev).abs() < tol.k_tol {
            let residual = operator_residual(op, &v, k_est);
            if residual <= tol.residual_factor * (k_est.abs() + 1.0) {
                break;
            }
        }
        k_prev = k_est;
        if it == MAX_POWER_ITERATIONS {
            return Err(Error::EigenNonConvergence { iterations: it });
        }
    }

    let min_phi = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_phi < -1e-12 {
        return Err(Error::EigenPositivity {
            min: min_phi,
            retries: 0,
        });
    }
    let residual = operator_residual(op, &v, k_est);
    Ok(PrincipalEigenpair {
        z: op.z,
        k: k_est,
        phi: v,
        residual,
        iterations,
    })
}

fn normalize_max(v: &mut [f64]) {
    let m = v.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    if m > 0.0 {
        for x in v.iter_mut() {
            *x /= m;
        }
    }
}

fn operator_residual(op: &CellOperator, phi: &[f64], k: f64) -> f64 {
    let mut y = vec![0.0; phi.len()];
    op.apply(phi, &mut y);
    y.iter()
        .zip(phi)
        .fold(0.0_f64, |m, (ly, p)| m.max((ly - k * p).abs()))
}

/// Linear solver for `(I - tau L) x = b`: cyclic Thomas in 1D, Jacobi-
/// preconditioned BiCGStab on the stencil in 2D.
enum ResolventSolver<'a> {
    Tridiag(CyclicTridiag),
    Krylov {
        op: &'a CellOperator,
        tau: f64,
        inv_diag: Vec<f64>,
        scratch: KrylovScratch,
    },
}

impl<'a> ResolventSolver<'a> {
    fn new(op: &'a CellOperator, tau: f64) -> Result<Self> {
        match op.dim {
            Dim::One => Ok(ResolventSolver::Tridiag(CyclicTridiag::new(op, tau)?)),
            Dim::Two => {
                let inv_diag = op
                    .center
                    .iter()
                    .map(|c| 1.0 / (1.0 - tau * c))
                    .collect::<Vec<_>>();
                if inv_diag.iter().any(|d| !d.is_finite()) {
                    return Err(Error::NonFinite("resolvent diagonal"));
                }
                Ok(ResolventSolver::Krylov {
                    op,
                    tau,
                    inv_diag,
                    scratch: KrylovScratch::new(op.len()),
                })
            }
        }
    }

    fn solve(&mut self, b: &[f64], x: &mut [f64]) -> Result<()> {
        match self {
            ResolventSolver::Tridiag(t) => {
                t.solve(b, x);
                Ok(())
            }
            ResolventSolver::Krylov {
                op,
                tau,
                inv_diag,
                scratch,
            } => bicgstab(op, *tau, inv_diag, b, x, scratch),
        }
    }
}

/// Cyclic tridiagonal factorization of `I - tau L` via the rank-one
/// Sherman-Morrison correction of a plain Thomas solve.
struct CyclicTridiag {
    n: usize,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    /// Solution of `T zz = u` for the corner-correction vector u.
    zz: Vec<f64>,
    v0: f64,
    vn: f64,
    gamma: f64,
}

impl CyclicTridiag {
    fn new(op: &CellOperator, tau: f64) -> Result<Self> {
        let n = op.n;
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for i in 0..n {
            sub[i] = -tau * op.west[i];
            diag[i] = 1.0 - tau * op.center[i];
            sup[i] = -tau * op.east[i];
        }
        let alpha = sub[0]; // M[0][n-1]
        let beta = sup[n - 1]; // M[n-1][0]
        let gamma = -diag[0];
        // T = M - u v^T with u = (gamma, 0, .., beta), v = (1, 0, .., alpha/gamma)
        let mut t_diag = diag.clone();
        t_diag[0] -= gamma;
        t_diag[n - 1] -= alpha * beta / gamma;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = beta;
        let mut this = Self {
            n,
            sub,
            diag: t_diag,
            sup,
            zz: vec![0.0; n],
            v0: 1.0,
            vn: alpha / gamma,
            gamma,
        };
        let mut zz = vec![0.0; n];
        this.thomas(&u, &mut zz);
        if zz.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("cyclic tridiagonal factorization"));
        }
        this.zz = zz;
        Ok(this)
    }

    /// Plain Thomas solve on the corrected tridiagonal T (interior bands only).
    fn thomas(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        let mut c_star = vec![0.0; n];
        let mut d_star = vec![0.0; n];
        c_star[0] = self.sup[0] / self.diag[0];
        d_star[0] = b[0] / self.diag[0];
        for i in 1..n {
            let m = self.diag[i] - self.sub[i] * c_star[i - 1];
            c_star[i] = self.sup[i] / m;
            d_star[i] = (b[i] - self.sub[i] * d_star[i - 1]) / m;
        }
        x[n - 1] = d_star[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d_star[i] - c_star[i] * x[i + 1];
        }
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        self.thomas(b, x);
        let vy = self.v0 * x[0] + self.vn * x[n - 1];
        let vz = self.v0 * self.zz[0] + self.vn * self.zz[n - 1];
        let factor = vy / (1.0 + vz);
        for i in 0..n {
            x[i] -= factor * self.zz[i];
        }
        let _ = self.gamma;
    }
}

struct KrylovScratch {
    r: Vec<f64>,
    r_hat: Vec<f64>,
    p: Vec<f64>,
    vv: Vec<f64>,
    s: Vec<f64>,
    t: Vec<f64>,
    tmp: Vec<f64>,
}

impl KrylovScratch {
    fn new(len: usize) -> Self {
        Self {
            r: vec![0.0; len],
            r_hat: vec![0.0; len],
            p: vec![0.0; len],
            vv: vec![0.0; len],
            s: vec![0.0; len],
            t: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// y = (I - tau L) (D^{-1} x) for the right-preconditioned system.
fn apply_shifted_prec(
    op: &CellOperator,
    tau: f64,
    inv_diag: &[f64],
    x: &[f64],
    tmp: &mut [f64],
    y: &mut [f64],
) {
    for i in 0..x.len() {
        tmp[i] = x[i] * inv_diag[i];
    }
    op.apply(tmp, y);
    for i in 0..x.len() {
        y[i] = tmp[i] - tau * y[i];
    }
}

/// Right-preconditioned BiCGStab for `(I - tau L) x = b`. Deterministic:
/// shadow vector fixed to the initial residual.
fn bicgstab(
    op: &CellOperator,
    tau: f64,
    inv_diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    ws: &mut KrylovScratch,
) -> Result<()> {
    let len = b.len();
    let tol = 1e-13;
    let b_norm = b.iter().fold(0.0_f64, |m, &v| m.max(v.abs())).max(1e-300);
    // start from the right-hand side (the power iterate), a good guess
    let y = &mut ws.tmp;
    // unpreconditioned variable u with x = D^{-1} u at the end
    let mut u: Vec<f64> = b
        .iter()
        .zip(inv_diag)
        .map(|(bi, di)| bi / di)
        .collect();
    apply_shifted_prec(op, tau, inv_diag, &u, y, &mut ws.r);
    for i in 0..len {
        ws.r[i] = b[i] - ws.r[i];
    }
    ws.r_hat.copy_from_slice(&ws.r);
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    ws.p.iter_mut().for_each(|v| *v = 0.0);
    ws.vv.iter_mut().for_each(|v| *v = 0.0);

    let max_iter = 40 * ((len as f64).sqrt() as usize + 50);
    for _ in 0..max_iter {
        let rho_new = dot(&ws.r_hat, &ws.r);
        if rho_new.abs() < 1e-300 {
            // restart with the current residual as shadow
            ws.r_hat.copy_from_slice(&ws.r);
            rho = dot(&ws.r_hat, &ws.r);
            ws.p.copy_from_slice(&ws.r);
        } else {
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..len {
                ws.p[i] = ws.r[i] + beta * (ws.p[i] - omega * ws.vv[i]);
            }
        }
        {
            let (vv, tmp) = (&mut ws.vv, &mut ws.tmp);
            apply_shifted_prec(op, tau, inv_diag, &ws.p, tmp, vv);
        }
        alpha = rho / dot(&ws.r_hat, &ws.vv);
        if !alpha.is_finite() {
            return Err(Error::NonFinite("BiCGStab step"));
        }
        for i in 0..len {
            ws.s[i] = ws.r[i] - alpha * ws.vv[i];
        }
        let s_norm = ws.s.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        if s_norm <= tol * b_norm {
            for i in 0..len {
                u[i] += alpha * ws.p[i];
            }
            break;
        }
        {
            let (t, tmp) = (&mut ws.t, &mut ws.tmp);
            apply_shifted_prec(op, tau, inv_diag, &ws.s, tmp, t);
        }
        omega = dot(&ws.t, &ws.s) / dot(&ws.t, &ws.t);
        if !omega.is_finite() || omega == 0.0 {
            omega = 1e-8;
        }
        for i in 0..len {
            u[i] += alpha * ws.p[i] + omega * ws.s[i];
            ws.r[i] = ws.s[i] - omega * ws.t[i];
        }
        let r_norm = ws.r.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        if r_norm <= tol * b_norm {
            break;
        }
    }
    for i in 0..len {
        x[i] = u[i] * inv_diag[i];
    }
    Ok(())
}

/// Result of the directional speed minimization.
#[derive(Debug, Clone)]
pub struct CriticalSpeed {
    /// Unit direction.
    pub e: [f64; 2],
    pub c_star: f64,
    /// Minimizing decay rate.
    pub lambda_star: f64,
    /// Final golden-section interval.
    pub bracket: (f64, f64),
    /// Every probed (lambda, k, k/lambda) triple, in evaluation order.
    pub trace: Vec<(f64, f64, f64)>,
}

const LAMBDA_INIT: (f64, f64) = (1e-2, 1e2);
const LAMBDA_LIMIT: (f64, f64) = (1e-6, 1e6);

/// Critical front speed `c*(e) = min_{lambda>0} k(lambda e)/lambda`.
///
/// Valid under the KPP condition only; callers gate on the reaction class.
/// Bracket expansion from `[1e-2, 1e2]` is followed by golden-section search
/// on `log lambda` to relative tolerance 1e-6.
pub fn critical_speed(
    coeffs: &PeriodicCoefficients,
    e: &[f64],
    grid: &GridSpec,
) -> Result<CriticalSpeed> {
    let norm = (e.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::NonFinite("direction e"));
    }
    let dim = coeffs.dim.as_usize();
    let e: Vec<f64> = e.iter().take(dim).map(|v| v / norm).collect();

    let mut trace: Vec<(f64, f64, f64)> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let eval = |lambda: f64,
                    tol: EigenTolerance,
                    warm: &mut Option<Vec<f64>>,
                    trace: &mut Vec<(f64, f64, f64)>|
     -> Result<f64> {
        let z: Vec<f64> = e.iter().map(|c| c * lambda).collect();
        let op = assemble_cell_operator(coeffs, &z, grid)?;
        let pair = principal_eigenvalue_with(&op, tol, warm.as_deref())?;
        *warm = Some(pair.phi);
        let g = pair.k / lambda;
        trace.push((lambda, pair.k, g));
        Ok(g)
    };

    // bracket expansion: shrink/grow the window until the interior probe wins
    let coarse = EigenTolerance::coarse();
    let (mut lo, mut hi) = LAMBDA_INIT;
    let mut mid = (lo * hi).sqrt();
    let mut g_lo = eval(lo, coarse, &mut warm, &mut trace)?;
    let mut g_mid = eval(mid, coarse, &mut warm, &mut trace)?;
    let mut g_hi = eval(hi, coarse, &mut warm, &mut trace)?;
    loop {
        if g_lo > g_mid && g_hi > g_mid {
            break;
        }
        if g_lo <= g_mid {
            hi = mid;
            g_hi = g_mid;
            mid = lo;
            g_mid = g_lo;
            lo *= 0.5;
            if lo < LAMBDA_LIMIT.0 {
                return Err(Error::BracketExpansion(format!(
                    "lambda bracket fell below {:.0e}; k(lambda e)/lambda is not coercive",
                    LAMBDA_LIMIT.0
                )));
            }
            g_lo = eval(lo, coarse, &mut warm, &mut trace)?;
        } else {
            lo = mid;
            g_lo = g_mid;
            mid = hi;
            g_mid = g_hi;
            hi *= 2.0;
            if hi > LAMBDA_LIMIT.1 {
                return Err(Error::BracketExpansion(format!(
                    "lambda bracket exceeded {:.0e}; k(lambda e)/lambda is not coercive",
                    LAMBDA_LIMIT.1
                )));
            }
            g_hi = eval(hi, coarse, &mut warm, &mut trace)?;
        }
    }

    // golden section on t = ln lambda
    let fine = EigenTolerance::default();
    let phi_inv = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut t_lo, mut t_hi) = (lo.ln(), hi.ln());
    let mut t1 = t_hi - phi_inv * (t_hi - t_lo);
    let mut t2 = t_lo + phi_inv * (t_hi - t_lo);
    let mut g1 = eval(t1.exp(), fine, &mut warm, &mut trace)?;
    let mut g2 = eval(t2.exp(), fine, &mut warm, &mut trace)?;
    while t_hi - t_lo > 1e-6 {
        if g1 <= g2 {
            t_hi = t2;
            t2 = t1;
            g2 = g1;
            t1 = t_hi - phi_inv * (t_hi - t_lo);
            g1 = eval(t1.exp(), fine, &mut warm, &mut trace)?;
        } else {
            t_lo = t1;
            t1 = t2;
            g1 = g2;
            t2 = t_lo + phi_inv * (t_hi - t_lo);
            g2 = eval(t2.exp(), fine, &mut warm, &mut trace)?;
        }
    }

    // take the best probed point so c* never exceeds the trace minimum
    let &(lambda_star, _, c_star) = trace
        .iter()
        .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
        .expect("trace cannot be empty");
    let mut e_out = [0.0; 2];
    for (i, v) in e.iter().enumerate() {
        e_out[i] = *v;
    }
    Ok(CriticalSpeed {
        e: e_out,
        c_star,
        lambda_star,
        bracket: (t_lo.exp(), t_hi.exp()),
        trace,
    })
}

/// Tabulate `c*(e)` on equally spaced directions for the Wulff construction.
/// Valid for KPP-class models only; directions evaluate in parallel.
pub fn eigen_speed_table(
    model: &crate::model::Model,
    grid: &GridSpec,
    n_angles: usize,
) -> Result<crate::wulff::DirectionalSpeedTable> {
    use rayon::prelude::*;
    if !model.reaction.is_kpp() {
        return Err(Error::InvalidCoefficients(
            "the eigenvalue route is only valid under the KPP condition; \
             use the front-like simulation route for this model"
                .into(),
        ));
    }
    match model.dim {
        Dim::One => {
            let pos = critical_speed(&model.coeffs, &[1.0], grid)?.c_star;
            let neg = critical_speed(&model.coeffs, &[-1.0], grid)?.c_star;
            crate::wulff::DirectionalSpeedTable::new_1d(
                neg,
                pos,
                crate::wulff::SpeedSource::Eigenvalue,
            )
        }
        Dim::Two => {
            let angles: Vec<f64> = (0..n_angles)
                .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n_angles as f64)
                .collect();
            let speeds: Result<Vec<f64>> = angles
                .par_iter()
                .map(|a| {
                    critical_speed(&model.coeffs, &[a.cos(), a.sin()], grid).map(|c| c.c_star)
                })
                .collect();
            crate::wulff::DirectionalSpeedTable::new_2d(
                angles,
                speeds?,
                crate::wulff::SpeedSource::Eigenvalue,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, ModelParams};

    fn grid_1d(n: usize) -> GridSpec {
        GridSpec::new(Dim::One, n, 4.0).unwrap()
    }

    fn grid_2d(n: usize) -> GridSpec {
        GridSpec::new(Dim::Two, n, 4.0).unwrap()
    }

    #[test]
    fn laplacian_kills_constants() {
        let c = PeriodicCoefficients::sample_1d(32, |_| 1.0, |_| 0.0, |_| 0.0);
        let op = assemble_cell_operator(&c, &[0.0], &grid_1d(32)).unwrap();
        let ones = vec![1.0; 32];
        let mut y = vec![0.0; 32];
        op.apply(&ones, &mut y);
        for v in y {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_coefficients_on_constants_give_z2_plus_lin() {
        let c = PeriodicCoefficients::sample_2d(
            16,
            |_, _| [1.0, 0.0, 1.0],
            |_, _| [0.0, 0.0],
            |_, _| 1.0,
        );
        let z = [0.7, -0.4];
        let op = assemble_cell_operator(&c, &z, &grid_2d(16)).unwrap();
        let ones = vec![1.0; 256];
        let mut y = vec![0.0; 256];
        op.apply(&ones, &mut y);
        let expect = z[0] * z[0] + z[1] * z[1] + 1.0;
        for v in y {
            assert!((v - expect).abs() < 1e-11, "{v} vs {expect}");
        }
    }

    #[test]
    fn row_sums_reproduce_the_zeroth_order_coefficient() {
        let m = builtin_model("sinusoidal_kpp", Dim::Two, 48, &ModelParams::default()).unwrap();
        let op = assemble_cell_operator(&m.coeffs, &[1.0, 0.0], &grid_2d(48)).unwrap();
        let sums = op.row_sums();
        // A = I, q = 0: zeroth order is |z|^2 + lin(x) = 1 + r(x)
        for (k, s) in sums.iter().enumerate() {
            let expect = 1.0 + m.coeffs.lin[k];
            assert!((s - expect).abs() < 1e-9, "row {k}: {s} vs {expect}");
            assert!((op.zeroth_order()[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let c = PeriodicCoefficients::sample_1d(32, |_| 1.0, |_| 0.0, |_| 0.0);
        assert!(assemble_cell_operator(&c, &[0.0, 1.0], &grid_1d(32)).is_err());
        assert!(assemble_cell_operator(&c, &[f64::NAN], &grid_1d(32)).is_err());
    }

    #[test]
    fn constant_coefficient_eigenvalue_is_exact() {
        let c = PeriodicCoefficients::sample_1d(64, |_| 1.0, |_| 0.0, |_| 1.0);
        let op = assemble_cell_operator(&c, &[1.0], &grid_1d(64)).unwrap();
        let pair = principal_eigenvalue(&op).unwrap();
        assert!((pair.k - 2.0).abs() < 1e-10, "k = {}", pair.k);
        assert!(pair.residual <= 1e-10);
        for p in &pair.phi {
            assert!((p - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sinusoidal_k0_obeys_min_max_bounds() {
        let m = builtin_model("sinusoidal_kpp", Dim::One, 64, &ModelParams::default()).unwrap();
        let op = assemble_cell_operator(&m.coeffs, &[0.0], &grid_1d(64)).unwrap();
        let pair = principal_eigenvalue(&op).unwrap();
        assert!(pair.k >= 1.0, "k = {}", pair.k);
        assert!(pair.k <= 1.5, "k = {}", pair.k);
        assert!(pair.phi.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn constant_2d_eigenvalue_via_krylov_path() {
        let c = PeriodicCoefficients::sample_2d(
            24,
            |_, _| [1.0, 0.0, 1.0],
            |_, _| [0.0, 0.0],
            |_, _| 1.0,
        );
        let op = assemble_cell_operator(&c, &[1.0, 0.0], &grid_2d(24)).unwrap();
        let pair = principal_eigenvalue(&op).unwrap();
        assert!((pair.k - 2.0).abs() < 1e-9, "k = {}", pair.k);
    }

    #[test]
    fn homogeneous_kpp_critical_speed_is_two() {
        let m = builtin_model("homogeneous_kpp", Dim::One, 64, &ModelParams::default()).unwrap();
        let cs = critical_speed(&m.coeffs, &[1.0], &grid_1d(64)).unwrap();
        assert!((cs.c_star - 2.0).abs() < 1e-4, "c* = {}", cs.c_star);
        assert!((cs.lambda_star - 1.0).abs() < 1e-3, "lambda* = {}", cs.lambda_star);
        // search soundness: the reported minimum never exceeds any probe
        for &(_, _, g) in &cs.trace {
            assert!(cs.c_star <= g + 1e-9);
        }
    }

    #[test]
    fn potential_shift_moves_k_exactly() {
        let m = builtin_model("sinusoidal_kpp", Dim::One, 64, &ModelParams::default()).unwrap();
        let mut shifted = m.coeffs.clone();
        let delta = 0.37;
        for v in shifted.lin.iter_mut() {
            *v += delta;
        }
        let g = grid_1d(64);
        let k0 = principal_eigenvalue(&assemble_cell_operator(&m.coeffs, &[0.4], &g).unwrap())
            .unwrap()
            .k;
        let k1 = principal_eigenvalue(&assemble_cell_operator(&shifted, &[0.4], &g).unwrap())
            .unwrap()
            .k;
        assert!((k1 - k0 - delta).abs() < 1e-10, "shift error {}", k1 - k0 - delta);
    }
}
