//! Shared test oracles, independent of the library's solver paths: dense
//! eigendecomposition of the assembled cell matrix, a brute-force lambda scan
//! for critical speeds, and a fixed-step shooting bisection for unique wave
//! speeds.

use nalgebra::DMatrix;
use wulffspread_core::eigensolver::{assemble_cell_operator, CellOperator};
use wulffspread_core::{Dim, GridSpec, PeriodicCoefficients};

pub mod fixtures;

/// Materialize the stencil operator as a dense matrix.
pub fn dense_matrix(op: &CellOperator) -> DMatrix<f64> {
    let n = op.len();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Principal eigenvalue (largest real part) via dense Schur decomposition.
pub fn dense_principal_eigenvalue(op: &CellOperator) -> f64 {
    let m = dense_matrix(op);
    let eig = m.complex_eigenvalues();
    eig.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Dense-oracle eigenvalue of the 1D sinusoidal-potential cell problem.
pub fn dense_k_sinusoidal_1d(n: usize, lambda: f64) -> f64 {
    let coeffs = PeriodicCoefficients::sample_1d(
        n,
        |_| 1.0,
        |_| 0.0,
        |x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin(),
    );
    let grid = GridSpec::new(Dim::One, n, 4.0).unwrap();
    let op = assemble_cell_operator(&coeffs, &[lambda], &grid).unwrap();
    dense_principal_eigenvalue(&op)
}

/// Brute-force critical speed: tabulate k(lambda)/lambda on `count`
/// log-spaced lambdas in [1e-2, 1e2] with the dense eigensolver, then refine
/// the minimum by a local quadratic fit in log lambda.
pub fn lambda_scan_cstar(n: usize, count: usize) -> (f64, f64) {
    let lo = (1e-2_f64).ln();
    let hi = (1e2_f64).ln();
    let mut best = (f64::INFINITY, 0usize);
    let mut gs = Vec::with_capacity(count);
    let mut ls = Vec::with_capacity(count);
    for i in 0..count {
        let t = lo + (hi - lo) * i as f64 / (count - 1) as f64;
        let lam = t.exp();
        let g = dense_k_sinusoidal_1d(n, lam) / lam;
        if g < best.0 {
            best = (g, i);
        }
        gs.push(g);
        ls.push(t);
    }
    let i = best.1.clamp(2, count - 3);
    // quadratic fit through five points around the scan minimum
    let (mut s0, mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for j in i - 2..=i + 2 {
        let x = ls[j] - ls[i];
        let y = gs[j];
        s0 += 1.0;
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
        b0 += y;
        b1 += x * y;
        b2 += x * x * y;
    }
    // solve the 3x3 normal equations for y = a + b x + c x^2
    let det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s3 * s2) + s2 * (s1 * s3 - s2 * s2);
    let a = (b0 * (s2 * s4 - s3 * s3) - s1 * (b1 * s4 - s3 * b2) + s2 * (b1 * s3 - s2 * b2)) / det;
    let b = (s0 * (b1 * s4 - b2 * s3) - b0 * (s1 * s4 - s3 * s2) + s2 * (s1 * b2 - b1 * s2)) / det;
    let c = (s0 * (s2 * b2 - s3 * b1) - s1 * (s1 * b2 - s3 * b0) + b0 * (s1 * s3 - s2 * s2)) / det;
    let x_star = -b / (2.0 * c);
    let g_star = a + b * x_star + c * x_star * x_star;
    ((ls[i] + x_star).exp(), g_star)
}

/// Independent fixed-step RK4 shooting bisection for the unique decreasing
/// connection between `hi` and `lo`. Smaller `h` means a finer oracle.
pub fn shooting_oracle_speed(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    h: f64,
    positive_only: bool,
) -> f64 {
    let eps = 1e-7;
    let fp_hi = (f(hi) - f(hi - eps)) / eps;
    let classify = |c: f64| -> i8 {
        // +1 undershoot (c too big), -1 overshoot (c too small)
        let s = 0.5 * (-c + (c * c - 4.0 * fp_hi).sqrt());
        let d = 1e-9;
        let mut y = [hi - d, -d * s];
        let rhs = |y: [f64; 2]| [y[1], -c * y[1] - f(y[0])];
        let mut x = 0.0;
        while x < 8e3 {
            let k1 = rhs(y);
            let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            x += h;
            if y[0] < lo - 1e-7 {
                return -1;
            }
            if y[0] < hi - 1e-4 && y[0] > lo + 1e-7 && y[1] >= -1e-10 {
                return 1;
            }
            if y[0] > hi {
                return 1;
            }
        }
        1 // hugged the connection for the whole window
    };
    let mut c_lo = if positive_only { 1e-4 } else { -2.0 };
    let mut c_hi = 2.0;
    while classify(c_lo) != -1 {
        c_lo = if positive_only { c_lo * 0.5 } else { c_lo * 2.0 };
        assert!(c_lo.abs() > 1e-12 && c_lo.abs() < 64.0, "oracle bracket failed");
    }
    while classify(c_hi) != 1 {
        c_hi *= 2.0;
        assert!(c_hi < 64.0, "oracle bracket failed");
    }
    while c_hi - c_lo > 1e-10 {
        let cm = 0.5 * (c_lo + c_hi);
        if classify(cm) == -1 {
            c_lo = cm;
        } else {
            c_hi = cm;
        }
    }
    0.5 * (c_lo + c_hi)
}
