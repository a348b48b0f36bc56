//! Network and reduced-system vector fields.
//!
//! Each hypercolumn holds two minicolumns. Minicolumn `j` of hypercolumn `i`
//! has an activation `s_ij`, an adaptation `a_ij` and a softmax output
//! `o_ij`. Same-index minicolumns of different hypercolumns excite each other
//! with weight `ω/2` and cross-index pairs inhibit with `-ω/2`, which reduces
//! the input to minicolumn `ij` to `ω Σ_{k≠i} o_kj - κ/2` with `κ = (N-1)ω`.
//!
//! When every hypercolumn carries the same state, the differences
//! `d = s_i1 - s_i2` and `e = a_i1 - a_i2` evolve autonomously:
//!
//! ```text
//! ḋ = -d - e + κ tanh(d/2)
//! ė = (g_a tanh(d/2) - e) / τ
//! ```

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, ensure_finite, Error, Result};

/// Number of scalar state variables per hypercolumn (`s_i1, s_i2, a_i1, a_i2`).
pub const HYPERCOLUMN_DIM: usize = 4;

/// Model constants of the full network.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkParams {
    n_hypercolumns: usize,
    omega: f64,
    g_a: f64,
    tau: f64,
}

impl NetworkParams {
    pub fn new(n_hypercolumns: usize, omega: f64, g_a: f64, tau: f64) -> Result<Self> {
        if n_hypercolumns < 2 {
            return Err(domain(
                "n_hypercolumns",
                format!("must be at least 2, got {n_hypercolumns}"),
            ));
        }
        check_positive("omega", omega)?;
        check_positive("g_a", g_a)?;
        check_tau(tau)?;
        Ok(Self {
            n_hypercolumns,
            omega,
            g_a,
            tau,
        })
    }

    pub fn n_hypercolumns(&self) -> usize {
        self.n_hypercolumns
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn g_a(&self) -> f64 {
        self.g_a
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Effective coupling `(N-1)ω` seen by one hypercolumn.
    pub fn kappa(&self) -> f64 {
        (self.n_hypercolumns - 1) as f64 * self.omega
    }

    /// Adaptation rate `1/τ`.
    pub fn alpha(&self) -> f64 {
        1.0 / self.tau
    }

    /// Rate-scaled adaptation gain `g_a/τ`.
    pub fn g_bar(&self) -> f64 {
        self.alpha() * self.g_a
    }

    /// `ḡ + (α - 1)ω`; positive exactly when `ω < g_a/(τ-1)`.
    pub fn beta(&self) -> f64 {
        self.g_bar() + (self.alpha() - 1.0) * self.omega
    }

    /// Parameters of the per-hypercolumn difference dynamics on the synchronized set.
    pub fn reduced(&self) -> ReducedParams {
        ReducedParams {
            kappa: self.kappa(),
            g_a: self.g_a,
            tau: self.tau,
        }
    }
}

/// Parameters of the two-dimensional `(d, e)` system.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReducedParams {
    pub kappa: f64,
    pub g_a: f64,
    pub tau: f64,
}

impl ReducedParams {
    pub fn new(kappa: f64, g_a: f64, tau: f64) -> Result<Self> {
        ensure_finite("kappa", kappa)?;
        check_positive("g_a", g_a)?;
        check_tau(tau)?;
        Ok(Self { kappa, g_a, tau })
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        Self { kappa, ..self }
    }
}

pub(crate) fn check_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(domain(field, format!("must be positive and finite, got {value}")))
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 1.0 {
        Ok(())
    } else {
        Err(domain("tau", format!("must be finite and > 1, got {tau}")))
    }
}

/// Activation and adaptation of the two minicolumns of one hypercolumn.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Hypercolumn {
    pub s: [f64; 2],
    pub a: [f64; 2],
}

impl Hypercolumn {
    pub fn new(s: [f64; 2], a: [f64; 2]) -> Self {
        Self { s, a }
    }

    fn is_finite(&self) -> bool {
        self.s.iter().chain(&self.a).all(|v| v.is_finite())
    }
}

/// Full network state, stored hypercolumn-major.
///
/// Also used for time derivatives, which share the layout.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkState {
    columns: Vec<Hypercolumn>,
}

impl NetworkState {
    pub fn new(columns: Vec<Hypercolumn>) -> Result<Self> {
        if let Some(i) = columns.iter().position(|c| !c.is_finite()) {
            return Err(domain(
                "state",
                format!("hypercolumn {} has a non-finite entry", i + 1),
            ));
        }
        Ok(Self { columns })
    }

    pub fn zeros(n_hypercolumns: usize) -> Self {
        Self {
            columns: alloc::vec![Hypercolumn::default(); n_hypercolumns],
        }
    }

    /// State with every hypercolumn equal to `column`.
    pub fn synchronized(n_hypercolumns: usize, column: Hypercolumn) -> Self {
        Self {
            columns: alloc::vec![column; n_hypercolumns],
        }
    }

    /// Builds a state from the flat `[s_i1, s_i2, a_i1, a_i2, ...]` layout.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(HYPERCOLUMN_DIM) {
            return Err(Error::Dimension {
                expected: (flat.len() / HYPERCOLUMN_DIM + 1) * HYPERCOLUMN_DIM,
                actual: flat.len(),
            });
        }
        let columns = flat
            .chunks_exact(HYPERCOLUMN_DIM)
            .map(|c| Hypercolumn::new([c[0], c[1]], [c[2], c[3]]))
            .collect();
        Self::new(columns)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.columns.len() * HYPERCOLUMN_DIM);
        for c in &self.columns {
            flat.extend_from_slice(&[c.s[0], c.s[1], c.a[0], c.a[1]]);
        }
        flat
    }

    pub fn columns(&self) -> &[Hypercolumn] {
        &self.columns
    }

    pub fn n_hypercolumns(&self) -> usize {
        self.columns.len()
    }

    /// True when every hypercolumn equals the first one within `tol`.
    pub fn is_synchronized(&self, tol: f64) -> bool {
        let first = self.columns[0];
        self.columns.iter().all(|c| {
            (0..2).all(|j| (c.s[j] - first.s[j]).abs() <= tol && (c.a[j] - first.a[j]).abs() <= tol)
        })
    }
}

/// Difference coordinates `(d, e) = (s_i1 - s_i2, a_i1 - a_i2)` of one hypercolumn.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReducedState {
    pub d: f64,
    pub e: f64,
}

impl ReducedState {
    pub fn new(d: f64, e: f64) -> Self {
        Self { d, e }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.d, self.e]
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.d, self.e)
    }
}

/// Softmax outputs `o_ij`; every row lies in the open unit interval and sums to one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Output {
    pub o: Vec<[f64; 2]>,
}

impl Output {
    pub fn of(state: &NetworkState) -> Self {
        Self {
            o: state.columns.iter().map(|c| softmax_pair(c.s)).collect(),
        }
    }
}

/// Two-way softmax, evaluated with the row maximum subtracted.
pub fn softmax(s_row: [f64; 2]) -> Result<[f64; 2]> {
    ensure_finite("s_row[0]", s_row[0])?;
    ensure_finite("s_row[1]", s_row[1])?;
    Ok(softmax_pair(s_row))
}

#[inline]
pub(crate) fn softmax_pair(s: [f64; 2]) -> [f64; 2] {
    let m = s[0].max(s[1]);
    let e0 = libm::exp(s[0] - m);
    let e1 = libm::exp(s[1] - m);
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

/// `o_i1 - o_i2` as a function of `d = s_i1 - s_i2`, i.e. `tanh(d/2)`.
///
/// Non-finite input propagates as NaN.
#[inline]
pub fn output_difference(d: f64) -> f64 {
    libm::tanh(0.5 * d)
}

/// Derivative of [`output_difference`]: `sech²(d/2)/2`.
#[inline]
pub fn output_difference_slope(d: f64) -> f64 {
    let t = libm::tanh(0.5 * d);
    0.5 * (1.0 - t * t)
}

/// Time derivative of the full network state.
pub fn network_rhs(state: &NetworkState, params: &NetworkParams) -> Result<NetworkState> {
    let n = params.n_hypercolumns();
    if state.n_hypercolumns() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: state.n_hypercolumns(),
        });
    }
    let flat = state.to_flat();
    let mut out = alloc::vec![0.0; flat.len()];
    network_rhs_flat(params, &flat, &mut out);
    NetworkState::from_flat(&out)
}

/// [`network_rhs`] on the flat hypercolumn-major layout. `x` and `dx` must
/// both have length `4N`.
pub fn network_rhs_flat(params: &NetworkParams, x: &[f64], dx: &mut [f64]) {
    debug_assert_eq!(x.len(), params.n_hypercolumns() * HYPERCOLUMN_DIM);
    debug_assert_eq!(dx.len(), x.len());
    let omega = params.omega();
    let half_kappa = 0.5 * params.kappa();
    let rate = params.alpha();
    let g_a = params.g_a();

    let mut total = [0.0f64; 2];
    for c in x.chunks_exact(HYPERCOLUMN_DIM) {
        let o = softmax_pair([c[0], c[1]]);
        total[0] += o[0];
        total[1] += o[1];
    }

    for (c, d) in x
        .chunks_exact(HYPERCOLUMN_DIM)
        .zip(dx.chunks_exact_mut(HYPERCOLUMN_DIM))
    {
        let o = softmax_pair([c[0], c[1]]);
        for j in 0..2 {
            let others = total[j] - o[j];
            d[j] = -c[j] - c[2 + j] - half_kappa + omega * others;
            d[2 + j] = (g_a * o[j] - c[2 + j]) * rate;
        }
    }
}

/// Vector field of the reduced `(d, e)` system.
#[inline]
pub fn reduced_rhs(state: ReducedState, params: &ReducedParams) -> ReducedState {
    let f = output_difference(state.d);
    ReducedState {
        d: -state.d - state.e + params.kappa * f,
        e: (params.g_a * f - state.e) / params.tau,
    }
}

/// Per-hypercolumn difference coordinates.
pub fn project_reduced(state: &NetworkState) -> Vec<ReducedState> {
    state
        .columns
        .iter()
        .map(|c| ReducedState::new(c.s[0] - c.s[1], c.a[0] - c.a[1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Literal double sum over `k≠i`, `l` with `+ω/2` for `l = j` and `-ω/2` otherwise.
    fn brute_force_rhs(state: &NetworkState, p: &NetworkParams) -> Vec<Hypercolumn> {
        let cols = state.columns();
        let outputs: Vec<[f64; 2]> = cols
            .iter()
            .map(|c| {
                let e0 = c.s[0].exp();
                let e1 = c.s[1].exp();
                [e0 / (e0 + e1), e1 / (e0 + e1)]
            })
            .collect();
        let mut out = Vec::new();
        for (i, ci) in cols.iter().enumerate() {
            let mut h = Hypercolumn::default();
            for j in 0..2 {
                let mut input = 0.0;
                for (k, ok) in outputs.iter().enumerate() {
                    if k == i {
                        continue;
                    }
                    for l in 0..2 {
                        let w = if l == j { p.omega() / 2.0 } else { -p.omega() / 2.0 };
                        input += w * ok[l];
                    }
                }
                h.s[j] = input - ci.a[j] - ci.s[j];
                h.a[j] = (p.g_a() * outputs[i][j] - ci.a[j]) / p.tau();
            }
            out.push(h);
        }
        out
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax([0.0, 0.0]).unwrap(), [0.5, 0.5]);
        assert_eq!(softmax([7.25, 7.25]).unwrap(), [0.5, 0.5]);
        let o = softmax([3f64.ln(), 0.0]).unwrap();
        assert_abs_diff_eq!(o[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(o[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(matches!(softmax([f64::NAN, 0.0]), Err(Error::Domain { .. })));
        assert!(softmax([0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn softmax_survives_large_arguments() {
        let o = softmax([800.0, 799.0]).unwrap();
        assert!(o[0].is_finite() && o[1] > 0.0);
        assert_abs_diff_eq!(o[0] + o[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn output_difference_examples() {
        assert_eq!(output_difference(0.0), 0.0);
        assert_abs_diff_eq!(output_difference(2.0 * libm::atanh(0.9)), 0.9, epsilon = 1e-14);
        for d in [-30.0, -2.5, -0.1, 0.3, 4.0, 17.0] {
            assert_eq!(output_difference(d), -output_difference(-d));
            let o = softmax([d, 0.0]).unwrap();
            assert_abs_diff_eq!(output_difference(d), o[0] - o[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_zero_state() {
        let p = NetworkParams::new(2, 1.0, 10.0, 2.0).unwrap();
        let d = network_rhs(&NetworkState::zeros(2), &p).unwrap();
        for c in d.columns() {
            assert_eq!(c.s, [0.0, 0.0]);
            assert_eq!(c.a, [2.5, 2.5]);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = NetworkParams::new(3, 1.0, 10.0, 2.0).unwrap();
        let err = network_rhs(&NetworkState::zeros(2), &p).unwrap_err();
        assert_eq!(err, Error::Dimension { expected: 3, actual: 2 });
    }

    #[test]
    fn params_validation() {
        assert!(NetworkParams::new(1, 1.0, 1.0, 2.0).is_err());
        assert!(NetworkParams::new(2, 0.0, 1.0, 2.0).is_err());
        assert!(NetworkParams::new(2, 1.0, -1.0, 2.0).is_err());
        assert!(NetworkParams::new(2, 1.0, 1.0, 1.0).is_err());
        let p = NetworkParams::new(12, 1.8, 97.0, 54.0).unwrap();
        assert_abs_diff_eq!(p.kappa(), 19.8, epsilon = 1e-12);
        assert!(ReducedParams::new(f64::NAN, 1.0, 2.0).is_err());
    }

    #[test]
    fn project_example() {
        let s = NetworkState::new(alloc::vec![Hypercolumn::new([3.0, 1.0], [2.0, 2.0])]).unwrap();
        assert_eq!(project_reduced(&s), alloc::vec![ReducedState::new(2.0, 0.0)]);
        assert!(project_reduced(&NetworkState::zeros(4))
            .iter()
            .all(|r| *r == ReducedState::default()));
    }

    #[test]
    fn reduced_origin_is_fixed() {
        let p = ReducedParams::new(5.0, 10.0, 2.0).unwrap();
        assert_eq!(reduced_rhs(ReducedState::default(), &p), ReducedState::default());
    }

    #[test]
    fn non_finite_state_rejected() {
        let err = NetworkState::new(alloc::vec![Hypercolumn::new([f64::NAN, 0.0], [0.0, 0.0])]);
        assert!(err.is_err());
    }

    fn column() -> impl Strategy<Value = Hypercolumn> {
        (-5.0..5.0f64, -5.0..5.0f64, -20.0..20.0f64, -20.0..20.0f64)
            .prop_map(|(s0, s1, a0, a1)| Hypercolumn::new([s0, s1], [a0, a1]))
    }

    proptest! {
        #[test]
        fn softmax_rows_normalized(s0 in -700.0..700.0f64, s1 in -700.0..700.0f64) {
            let o = softmax([s0, s1]).unwrap();
            prop_assert!((o[0] + o[1] - 1.0).abs() <= 1e-12);
            prop_assert!(o[0] >= 0.0 && o[1] >= 0.0);
        }

        #[test]
        fn softmax_open_interval(s0 in -200.0..200.0f64, gap in -30.0..30.0f64) {
            // beyond a gap of ~37 the smaller output underflows relative to 1
            let o = softmax([s0, s0 + gap]).unwrap();
            prop_assert!(o[0] > 0.0 && o[0] < 1.0 && o[1] > 0.0 && o[1] < 1.0);
        }

        #[test]
        fn softmax_shift_invariant(s0 in -100.0..100.0f64, s1 in -100.0..100.0f64, c in -50.0..50.0f64) {
            let a = softmax([s0, s1]).unwrap();
            let b = softmax([s0 + c, s1 + c]).unwrap();
            prop_assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
        }

        #[test]
        fn softmax_monotone(a0 in -20.0..20.0f64, a1 in -20.0..20.0f64, b0 in -20.0..20.0f64, b1 in -20.0..20.0f64) {
            let sa = softmax([a0, a1]).unwrap();
            let sb = softmax([b0, b1]).unwrap();
            let inner = (a0 - b0) * (sa[0] - sb[0]) + (a1 - b1) * (sa[1] - sb[1]);
            prop_assert!(inner >= -1e-12);
        }

        #[test]
        fn reduced_rhs_is_odd(d in -20.0..20.0f64, e in -50.0..50.0f64, kappa in 0.0..30.0f64) {
            let p = ReducedParams::new(kappa, 10.0, 2.0).unwrap();
            let plus = reduced_rhs(ReducedState::new(d, e), &p);
            let minus = reduced_rhs(ReducedState::new(-d, -e), &p);
            prop_assert_eq!(plus.d, -minus.d);
            prop_assert_eq!(plus.e, -minus.e);
        }

        #[test]
        fn sync_manifold_is_invariant(c in column(), n in 2usize..16, omega in 0.1..3.0f64) {
            let p = NetworkParams::new(n, omega, 97.0, 54.0).unwrap();
            let d = network_rhs(&NetworkState::synchronized(n, c), &p).unwrap();
            prop_assert!(d.is_synchronized(1e-12));
        }

        #[test]
        fn reduction_commutes_on_sync_manifold(c in column(), n in 2usize..16, omega in 0.1..3.0f64, g_a in 0.5..100.0f64, tau in 1.1..60.0f64) {
            let p = NetworkParams::new(n, omega, g_a, tau).unwrap();
            let state = NetworkState::synchronized(n, c);
            let projected_rhs = project_reduced(&network_rhs(&state, &p).unwrap());
            let rhs_projected = reduced_rhs(project_reduced(&state)[0], &p.reduced());
            for r in projected_rhs {
                prop_assert!((r.d - rhs_projected.d).abs() <= 1e-10);
                prop_assert!((r.e - rhs_projected.e).abs() <= 1e-10);
            }
        }

        #[test]
        fn brute_force_oracle_matches(c1 in column(), c2 in column(), c3 in column(), omega in 0.1..3.0f64) {
            let p = NetworkParams::new(3, omega, 10.0, 2.0).unwrap();
            let state = NetworkState::new(alloc::vec![c1, c2, c3]).unwrap();
            let fast = network_rhs(&state, &p).unwrap();
            let slow = brute_force_rhs(&state, &p);
            for (f, s) in fast.columns().iter().zip(&slow) {
                for j in 0..2 {
                    prop_assert!((f.s[j] - s.s[j]).abs() <= 1e-12);
                    prop_assert!((f.a[j] - s.a[j]).abs() <= 1e-12);
                }
            }
        }
    }
}
