//! Fixed-step RK4 integration with strided trajectory recording.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::model::{
    network_rhs_flat, reduced_rhs, NetworkParams, NetworkState, ReducedParams, ReducedState,
    HYPERCOLUMN_DIM,
};

/// Any state component beyond this magnitude aborts the integration.
pub const BLOWUP_BOUND: f64 = 1e6;

/// Default step for the reduced system.
pub const DEFAULT_REDUCED_DT: f64 = 0.01;

/// Default step for the full network (fast activations against slow adaptation).
pub const DEFAULT_NETWORK_DT: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegrationConfig {
    dt: f64,
    t_end: f64,
    record_stride: usize,
}

impl IntegrationConfig {
    pub fn new(dt: f64, t_end: f64, record_stride: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(domain("dt", format!("must be positive and finite, got {dt}")));
        }
        if !(t_end.is_finite() && t_end >= dt) {
            return Err(domain(
                "t_end",
                format!("must be finite and at least dt = {dt}, got {t_end}"),
            ));
        }
        if record_stride == 0 {
            return Err(domain("record_stride", "must be at least 1"));
        }
        Ok(Self {
            dt,
            t_end,
            record_stride,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn record_stride(&self) -> usize {
        self.record_stride
    }

    /// Number of RK4 steps; `t_end` is rounded to the nearest whole step.
    pub fn n_steps(&self) -> usize {
        let n = libm::round(self.t_end / self.dt) as usize;
        n.max(1)
    }
}

/// Uniformly sampled solution. States are stored row-major, `dim` values per sample.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory<P> {
    times: Vec<f64>,
    dim: usize,
    data: Vec<f64>,
    params: P,
}

impl<P> Trajectory<P> {
    /// Assembles a trajectory from samples taken every `interval` time units from `t = 0`.
    pub fn from_samples(interval: f64, dim: usize, data: Vec<f64>, params: P) -> Result<Self> {
        if !(interval.is_finite() && interval > 0.0) {
            return Err(domain("interval", "must be positive and finite"));
        }
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                actual: data.len(),
            });
        }
        let times = (0..data.len() / dim).map(|k| k as f64 * interval).collect();
        Ok(Self {
            times,
            dim,
            data,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn params(&self) -> &P {
        &self.params
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states().map(|x| x[index]).collect()
    }

    /// Index of the first sample with `t >= time`.
    pub fn index_at(&self, time: f64) -> usize {
        self.times.partition_point(|&t| t < time)
    }
}

impl Trajectory<NetworkParams> {
    pub fn network_state(&self, k: usize) -> NetworkState {
        NetworkState::from_flat(self.state(k)).expect("trajectory holds finite network states")
    }

    pub fn n_hypercolumns(&self) -> usize {
        self.dim / HYPERCOLUMN_DIM
    }
}

impl Trajectory<ReducedParams> {
    pub fn reduced_state(&self, k: usize) -> ReducedState {
        let x = self.state(k);
        ReducedState::new(x[0], x[1])
    }
}

/// Reusable RK4 stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let z = alloc::vec![0.0; dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `x` by one classical RK4 step. `t` is only used for error reporting.
    pub fn step<F>(&mut self, rhs: &mut F, x: &mut [f64], dt: f64, t: f64) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let fail = Error::Blowup { time: t + dt };
        rhs(x, &mut self.k1);
        stage(&mut self.tmp, x, &self.k1, 0.5 * dt).ok_or_else(|| fail.clone())?;
        rhs(&self.tmp, &mut self.k2);
        stage(&mut self.tmp, x, &self.k2, 0.5 * dt).ok_or_else(|| fail.clone())?;
        rhs(&self.tmp, &mut self.k3);
        stage(&mut self.tmp, x, &self.k3, dt).ok_or_else(|| fail.clone())?;
        rhs(&self.tmp, &mut self.k4);
        let h6 = dt / 6.0;
        let mut ok = true;
        for i in 0..x.len() {
            x[i] += h6 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
            ok &= x[i].is_finite() && x[i].abs() <= BLOWUP_BOUND;
        }
        if ok {
            Ok(())
        } else {
            Err(fail)
        }
    }
}

fn stage(out: &mut [f64], x: &[f64], k: &[f64], h: f64) -> Option<()> {
    let mut ok = true;
    for ((o, &xi), &ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + h * ki;
        ok &= o.is_finite();
    }
    ok.then_some(())
}

/// One RK4 step from time `t`, returning the new state.
pub fn rk4_step<F>(mut rhs: F, state: &[f64], dt: f64, t: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(domain("dt", format!("must be positive and finite, got {dt}")));
    }
    let mut x = state.to_vec();
    Rk4::new(state.len()).step(&mut rhs, &mut x, dt, t)?;
    Ok(x)
}

/// Integrates an autonomous system from `t = 0`, recording `t = 0` and every
/// `record_stride`-th step after it.
pub fn integrate<P, F>(
    mut rhs: F,
    initial: &[f64],
    config: &IntegrationConfig,
    params: P,
) -> Result<Trajectory<P>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let dim = initial.len();
    if dim == 0 {
        return Err(Error::Dimension {
            expected: 1,
            actual: 0,
        });
    }
    if let Some(bad) = initial.iter().find(|v| !v.is_finite()) {
        return Err(domain("initial", format!("non-finite entry {bad}")));
    }
    let n_steps = config.n_steps();
    let stride = config.record_stride;
    let n_samples = n_steps / stride + 1;

    let mut times = Vec::with_capacity(n_samples);
    let mut data = Vec::with_capacity(n_samples * dim);
    let mut x = initial.to_vec();
    let mut rk = Rk4::new(dim);

    times.push(0.0);
    data.extend_from_slice(&x);
    for step in 1..=n_steps {
        let t = (step - 1) as f64 * config.dt;
        rk.step(&mut rhs, &mut x, config.dt, t)?;
        if step % stride == 0 {
            times.push(step as f64 * config.dt);
            data.extend_from_slice(&x);
        }
    }
    Ok(Trajectory {
        times,
        dim,
        data,
        params,
    })
}

pub fn integrate_network(
    params: &NetworkParams,
    initial: &NetworkState,
    config: &IntegrationConfig,
) -> Result<Trajectory<NetworkParams>> {
    if initial.n_hypercolumns() != params.n_hypercolumns() {
        return Err(Error::Dimension {
            expected: params.n_hypercolumns(),
            actual: initial.n_hypercolumns(),
        });
    }
    let p = *params;
    integrate(
        move |x: &[f64], dx: &mut [f64]| network_rhs_flat(&p, x, dx),
        &initial.to_flat(),
        config,
        p,
    )
}

pub fn integrate_reduced(
    params: &ReducedParams,
    initial: ReducedState,
    config: &IntegrationConfig,
) -> Result<Trajectory<ReducedParams>> {
    let p = *params;
    integrate(
        move |x: &[f64], dx: &mut [f64]| {
            let r = reduced_rhs(ReducedState::new(x[0], x[1]), &p);
            dx[0] = r.d;
            dx[1] = r.e;
        },
        &initial.to_array(),
        config,
        p,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Direction {
    Up,
    Down,
    Both,
}

/// Linearly interpolated times at which `component` crosses `level`.
pub fn detect_crossings<P>(
    traj: &Trajectory<P>,
    component: usize,
    level: f64,
    direction: Direction,
) -> Vec<f64> {
    crossings_in(traj.times(), traj.states().map(|x| x[component]), level, direction)
}

/// Crossing detection over parallel time/value sequences.
pub fn crossings_in<I>(times: &[f64], values: I, level: f64, direction: Direction) -> Vec<f64>
where
    I: IntoIterator<Item = f64>,
{
    let mut out = Vec::new();
    let mut iter = times.iter().copied().zip(values);
    let Some((mut t0, mut v0)) = iter.next() else {
        return out;
    };
    for (t1, v1) in iter {
        let up = v0 < level && v1 >= level;
        let down = v0 > level && v1 <= level;
        let hit = match direction {
            Direction::Up => up,
            Direction::Down => down,
            Direction::Both => up || down,
        };
        if hit {
            let frac = (level - v0) / (v1 - v0);
            out.push(t0 + frac * (t1 - t0));
        }
        t0 = t1;
        v0 = v1;
    }
    out
}
