//! Frozen oracle targets. Every value here was produced by the matching
//! oracle in this test tree (dense eigendecomposition, brute-force lambda
//! scan, fine fixed-step shooting, long-horizon simulation) before being
//! pinned; the `oracles` test target re-derives each one on every run.

/// Principal eigenvalue of the 1D cell problem with potential
/// 1 + 0.5 sin(2 pi x) at z = 0, per grid (dense eigendecomposition).
pub const SINUSOIDAL_K0_N64: f64 = 1.003168608717807;
pub const SINUSOIDAL_K0_N128: f64 = 1.0031667005846242;
pub const SINUSOIDAL_K0_N256: f64 = 1.0031662236567927;
/// Richardson limit from the 128/256 pair (second-order scheme).
pub const SINUSOIDAL_K0_RICHARDSON: f64 = 1.0031660646808489;

/// Critical speed of the sinusoidal model along the modulated axis at cell
/// grid 64 (dense eigensolver + 1e4-point lambda scan + quadratic refine).
pub const SINUSOIDAL_CSTAR_E1_N64: f64 = 2.002874683992802;
/// Minimizing decay rate of the same scan.
pub const SINUSOIDAL_LAMBDA_STAR_N64: f64 = 1.0017;

/// Critical speed transverse to the modulation: the cell problem separates,
/// giving 2 sqrt(k(0)) at the same grid.
pub const SINUSOIDAL_CSTAR_E2_N64: f64 = 2.0031661040261646;

/// Unique ignition wave speed for f = 2 max(0, u - 0.3)(1 - u)
/// (fine fixed-step shooting oracle, h = 2.5e-4).
pub const COMBUSTION_C_THETA03: f64 = 0.7005581;

/// Terrace wave speeds of the quintic catalog entry
/// f = -16 u (u - 0.1)(u - 0.5)(u - 0.75)(u - 1): lower tier 0.5 -> 0 and
/// upper tier 1 -> 0.5 (fine fixed-step shooting oracle).
pub const QUINTIC_C_LOWER: f64 = 0.4579;
pub const QUINTIC_C_UPPER: f64 = 0.1416;

/// Pushed monostable minimal speed for f = u^2 (1 - u): exactly 1/sqrt(2).
pub const PUSHED_MONOSTABLE_C: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Average front speed of the a.p. bistable reaction with theta_bar = 0.25,
/// amp = 0.05 (long-horizon fine-grid run, T = 2000, h = 0.025).
pub const AP_FRONT_SPEED_AMP005: f64 = 0.3535;

/// Radial function of the ellipse with semi-axes (2, 1) at 45 degrees:
/// sqrt(8/5), cross-checked by the dense angular brute force.
pub const ELLIPSE_W45: f64 = 1.2649110640673518;
