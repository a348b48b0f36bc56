//! Synchronization bounds, the network Lyapunov function, equilibria of the
//! reduced system, and the Hopf point at the origin.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::integrator::Trajectory;
use crate::model::{
    check_positive, check_tau, output_difference, output_difference_slope, NetworkParams,
    NetworkState, ReducedParams, ReducedState, HYPERCOLUMN_DIM,
};

/// Real parts within this distance of zero are reported as marginal.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Interval of coupling weights for which the network is guaranteed to synchronize.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyncBounds {
    pub omega_min: f64,
    pub omega_max: f64,
}

impl SyncBounds {
    pub fn contains(&self, omega: f64) -> bool {
        self.omega_min < omega && omega < self.omega_max
    }
}

/// `(g_a/τ, g_a/(τ-1))`.
pub fn sync_bounds(g_a: f64, tau: f64) -> Result<SyncBounds> {
    check_positive("g_a", g_a)?;
    check_tau(tau)?;
    Ok(SyncBounds {
        omega_min: g_a / tau,
        omega_max: g_a / (tau - 1.0),
    })
}

/// Lyapunov function of the synchronization errors relative to hypercolumn 1:
///
/// `V = Σ_{k≥2} ½‖ḡ D_k + ω E_k‖² + ½ β ω ‖D_k‖²` with `D_k = s_1 - s_k`, `E_k = a_1 - a_k`.
pub fn lyapunov_value(state: &NetworkState, params: &NetworkParams) -> Result<f64> {
    if state.n_hypercolumns() != params.n_hypercolumns() {
        return Err(Error::Dimension {
            expected: params.n_hypercolumns(),
            actual: state.n_hypercolumns(),
        });
    }
    let beta = params.beta();
    if beta <= 0.0 {
        let bounds = sync_bounds(params.g_a(), params.tau())?;
        return Err(Error::Precondition(format!(
            "beta = {beta} is not positive; omega = {} must stay below omega_max = {}",
            params.omega(),
            bounds.omega_max
        )));
    }
    let g_bar = params.g_bar();
    let omega = params.omega();
    let cols = state.columns();
    let first = cols[0];
    let mut v = 0.0;
    for c in &cols[1..] {
        for j in 0..2 {
            let d = first.s[j] - c.s[j];
            let e = first.a[j] - c.a[j];
            let w = g_bar * d + omega * e;
            v += 0.5 * w * w + 0.5 * beta * omega * d * d;
        }
    }
    Ok(v)
}

/// Largest deviation of any hypercolumn from hypercolumn 1 in a flat state.
pub fn sync_deviation(flat: &[f64]) -> f64 {
    let (first, rest) = flat.split_at(HYPERCOLUMN_DIM);
    rest.chunks_exact(HYPERCOLUMN_DIM)
        .flat_map(|c| c.iter().zip(first).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Per-sample maximum of `|s_1j - s_lj|` and `|a_1j - a_lj|` over `l` and `j`.
pub fn sync_error(traj: &Trajectory<NetworkParams>) -> Vec<f64> {
    traj.states().map(sync_deviation).collect()
}

/// `(D_{1,l}, E_{1,l}) = (s_11 - s_l1, a_11 - a_l1)` for `l = 2..=N`.
pub fn relative_states(state: &NetworkState) -> Vec<(f64, f64)> {
    let cols = state.columns();
    cols[1..]
        .iter()
        .map(|c| (cols[0].s[0] - c.s[0], cols[0].a[0] - c.a[0]))
        .collect()
}

/// Equilibrium of the reduced system with its linearization.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Equilibrium {
    pub d_star: f64,
    pub e_star: f64,
    pub eigenvalues: [Complex64; 2],
    pub stable: bool,
    /// Some eigenvalue has real part within [`STABILITY_MARGIN`] of zero.
    pub marginal: bool,
}

impl Equilibrium {
    fn at(d_star: f64, params: &ReducedParams) -> Self {
        let e_star = params.g_a * output_difference(d_star);
        let j = jacobian_at(ReducedState::new(d_star, e_star), params);
        let eigenvalues = eigenvalues_2x2(&j);
        let lead = eigenvalues[0].re.max(eigenvalues[1].re);
        Self {
            d_star,
            e_star,
            eigenvalues,
            stable: lead < -STABILITY_MARGIN,
            marginal: eigenvalues.iter().any(|z| z.re.abs() <= STABILITY_MARGIN),
        }
    }

    /// Largest eigenvalue real part.
    pub fn leading_real_part(&self) -> f64 {
        self.eigenvalues[0].re.max(self.eigenvalues[1].re)
    }

    pub fn is_origin(&self) -> bool {
        self.d_star == 0.0
    }

    pub fn point(&self) -> ReducedState {
        ReducedState::new(self.d_star, self.e_star)
    }

    /// Residual of `(κ - g_a) tanh(d/2) - d`.
    pub fn residual(&self, params: &ReducedParams) -> f64 {
        (params.kappa - params.g_a) * output_difference(self.d_star) - self.d_star
    }
}

/// All equilibria of the reduced system: the origin first, then `+d*` and `-d*`
/// when `κ > g_a + 2`.
pub fn find_equilibria(params: &ReducedParams) -> Vec<Equilibrium> {
    let mut out = alloc::vec![Equilibrium::at(0.0, params)];
    if let Some(d) = positive_root(params.kappa - params.g_a) {
        out.push(Equilibrium::at(d, params));
        out.push(Equilibrium::at(-d, params));
    }
    out
}

/// Positive root of `c·tanh(d/2) = d`, which exists only for `c > 2`.
fn positive_root(c: f64) -> Option<f64> {
    if c <= 2.0 {
        return None;
    }
    let h = |d: f64| c * output_difference(d) - d;
    let mut lo = 1e-12;
    let mut hi = c;
    if h(lo) <= 0.0 {
        return None;
    }
    // h > 0 on (0, d*) and h < 0 beyond it
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut d = if h(lo).abs() < h(hi).abs() { lo } else { hi };
    for _ in 0..4 {
        let slope = c * output_difference_slope(d) - 1.0;
        if slope == 0.0 {
            break;
        }
        let next = d - h(d) / slope;
        if next.is_nan() || next <= 0.0 || h(next).abs() >= h(d).abs() {
            break;
        }
        d = next;
    }
    Some(d)
}

pub type Matrix2 = [[f64; 2]; 2];

/// Jacobian of the reduced vector field at `point`.
pub fn jacobian_at(point: ReducedState, params: &ReducedParams) -> Matrix2 {
    let slope = output_difference_slope(point.d);
    [
        [-1.0 + params.kappa * slope, -1.0],
        [params.g_a * slope / params.tau, -1.0 / params.tau],
    ]
}

/// Eigenvalues of a real 2×2 matrix from its trace and determinant,
/// ordered by decreasing real part (then decreasing imaginary part).
pub fn eigenvalues_2x2(m: &Matrix2) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    roots_of_monic(tr, det)
}

/// Roots of `λ² - tr·λ + det`.
fn roots_of_monic(tr: f64, det: f64) -> [Complex64; 2] {
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let sq = libm::sqrt(disc);
        // avoid cancellation in the smaller-magnitude root
        let big = 0.5 * (tr + if tr >= 0.0 { sq } else { -sq });
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (a, b) = if big >= small { (big, small) } else { (small, big) };
        [Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
    } else {
        let im = 0.5 * libm::sqrt(-disc);
        [Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im)]
    }
}

/// Trace `σ` and determinant `δ` of the linearization at the origin,
/// so that `ρ(λ) = λ² - σλ + δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CharPoly {
    pub sigma: f64,
    pub delta: f64,
}

impl CharPoly {
    pub fn roots(&self) -> [Complex64; 2] {
        roots_of_monic(self.sigma, self.delta)
    }
}

pub fn char_poly_coeffs(params: &ReducedParams) -> CharPoly {
    let ReducedParams { kappa, g_a, tau } = *params;
    CharPoly {
        sigma: (-2.0 * tau - 2.0 + tau * kappa) / (2.0 * tau),
        delta: (-2.0 * kappa + 2.0 * g_a + 4.0) / (4.0 * tau),
    }
}

/// `κ* = 2(1 + 1/τ)`, where the trace at the origin vanishes.
pub fn hopf_kappa(tau: f64) -> f64 {
    2.0 * (1.0 + 1.0 / tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HopfReport {
    pub kappa_star: f64,
    /// `g_a > 2/τ`; without it the origin has real eigenvalues at `κ*`.
    pub condition_ga: bool,
    /// Imaginary part `β` of the critical pair (0 when non-oscillatory).
    pub frequency: f64,
    pub eigenvalues_at_star: [Complex64; 2],
    /// `∂σ/∂κ` at `κ*`.
    pub transversality: f64,
    /// First Lyapunov (cubic normal form) coefficient; `None` when `condition_ga` fails.
    pub cubic_coefficient: Option<f64>,
}

impl HopfReport {
    pub fn is_supercritical(&self) -> bool {
        self.condition_ga && self.cubic_coefficient.is_some_and(|a| a < 0.0)
    }
}

pub fn hopf_report(g_a: f64, tau: f64) -> Result<HopfReport> {
    check_positive("g_a", g_a)?;
    check_tau(tau)?;
    let kappa_star = hopf_kappa(tau);
    let poly = char_poly_coeffs(&ReducedParams::new(kappa_star, g_a, tau)?);
    let condition_ga = g_a > 2.0 / tau;
    let eigenvalues_at_star = poly.roots();
    Ok(HopfReport {
        kappa_star,
        condition_ga,
        frequency: if condition_ga { libm::sqrt(poly.delta) } else { 0.0 },
        eigenvalues_at_star,
        // σ is affine in κ with slope τ/(2τ)
        transversality: tau / (2.0 * tau),
        cubic_coefficient: if condition_ga {
            Some(cubic_coefficient(g_a, tau)?)
        } else {
            None
        },
    })
}

/// Partial derivatives at the origin of the nonlinear part `(f, g)` of a planar system
/// `ẋ = -ωy + f(x, y)`, `ẏ = ωx + g(x, y)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlanarPartials {
    pub f_xx: f64,
    pub f_xy: f64,
    pub f_yy: f64,
    pub f_xxx: f64,
    pub f_xyy: f64,
    pub g_xx: f64,
    pub g_xy: f64,
    pub g_yy: f64,
    pub g_xxy: f64,
    pub g_yyy: f64,
}

/// Cubic normal-form coefficient of a Hopf point in rotation-normal coordinates
/// (Guckenheimer & Holmes, formula 3.4.11). Negative means the bifurcating cycle is stable.
pub fn normal_form_cubic(omega: f64, p: &PlanarPartials) -> f64 {
    (p.f_xxx + p.f_xyy + p.g_xxy + p.g_yyy) / 16.0
        + (p.f_xy * (p.f_xx + p.f_yy) - p.g_xy * (p.g_xx + p.g_yy) - p.f_xx * p.g_xx
            + p.f_yy * p.g_yy)
            / (16.0 * omega)
}

/// Value and first three derivatives of `tanh(d/2)`.
pub(crate) fn tanh_half_derivatives(d: f64) -> [f64; 4] {
    let t = output_difference(d);
    let s = 1.0 - t * t;
    [t, 0.5 * s, -0.5 * t * s, -0.25 * s * (1.0 - 3.0 * t * t)]
}

/// Cubic coefficient of the Hopf bifurcation of the reduced system at `κ*`.
///
/// With `β² = det J(κ*)` and `(d, e) = E (u, v)`, `E = [[0, 1], [-β, 1/τ]]`, the system
/// becomes a rotation at rate `β` plus `E⁻¹ (F₁(v), F₂(v))` where
/// `F₁(d) = -(1 + 1/τ) d + κ* tanh(d/2)` and `F₂(d) = -(g_a/2τ) d + (g_a/τ) tanh(d/2)`.
pub fn cubic_coefficient(g_a: f64, tau: f64) -> Result<f64> {
    check_positive("g_a", g_a)?;
    check_tau(tau)?;
    if g_a <= 2.0 / tau {
        return Err(domain(
            "g_a",
            format!("must exceed 2/tau = {} for a Hopf point, got {g_a}", 2.0 / tau),
        ));
    }
    let kappa = hopf_kappa(tau);
    let beta = libm::sqrt(g_a / (2.0 * tau) - 1.0 / (tau * tau));
    let tanh = tanh_half_derivatives(0.0);
    // derivatives of F1, F2 of order 2 and 3 at d = 0 (linear parts drop out)
    let f1 = [kappa * tanh[2], kappa * tanh[3]];
    let f2 = [g_a / tau * tanh[2], g_a / tau * tanh[3]];
    // f = F1/(τβ) - F2/β and g = F1, both functions of y = v alone
    let f_of_y = |k: usize| f1[k] / (tau * beta) - f2[k] / beta;
    let partials = PlanarPartials {
        f_yy: f_of_y(0),
        g_yy: f1[0],
        g_yyy: f1[1],
        ..PlanarPartials::default()
    };
    Ok(normal_form_cubic(beta, &partials))
}

/// Conditions combining synchronization, uniqueness of the equilibrium and the
/// necessary conditions for a limit cycle, expressed in terms of `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorollaryReport {
    pub kappa: f64,
    pub sync_bounds: SyncBounds,
    pub sync_condition: bool,
    /// `(g_a + 2)/(N - 1)`.
    pub unique_equilibrium_bound: f64,
    pub unique_equilibrium: bool,
    /// `(2/(N - 1))(1 + 1/τ)`.
    pub limit_cycle_omega_threshold: f64,
    pub limit_cycle_necessary: bool,
}

impl CorollaryReport {
    pub fn all_satisfied(&self) -> bool {
        self.sync_condition && self.unique_equilibrium && self.limit_cycle_necessary
    }
}

pub fn corollary_check(n: usize, omega: f64, g_a: f64, tau: f64) -> Result<CorollaryReport> {
    let params = NetworkParams::new(n, omega, g_a, tau)?;
    let links = (n - 1) as f64;
    let bounds = sync_bounds(g_a, tau)?;
    let unique_equilibrium_bound = (g_a + 2.0) / links;
    let limit_cycle_omega_threshold = 2.0 / links * (1.0 + 1.0 / tau);
    Ok(CorollaryReport {
        kappa: params.kappa(),
        sync_bounds: bounds,
        sync_condition: bounds.contains(omega),
        unique_equilibrium_bound,
        unique_equilibrium: omega < unique_equilibrium_bound,
        limit_cycle_omega_threshold,
        limit_cycle_necessary: g_a > 2.0 / tau && omega > limit_cycle_omega_threshold,
    })
}
