//! Exact closed-system propagation and numerical inverse Laplace transform.
//!
//! The inversion runs on the horizontal contour `z = ω + iε`, `|ω| ≤ Ω`,
//! with trapezoidal weights:
//!
//! ```text
//! ρ(t) ≈ (e^{εt} / 2π) Σ_j w_j e^{-iω_j t} ρ(ω_j + iε)
//! ```
//!
//! Plain truncation of the `|ω| > Ω` tail costs a Gibbs jump of half of
//! `ρ(0)` at `t = 0`, since `ρ(z) ~ i ρ_0 / z`. Before summing, the leading
//! large-`|z|` terms are therefore removed with the exactly invertible pieces
//!
//! ```text
//! S(z) = Σ_{k<K} c_k (i / (z + iγ))^{k+1}  ⟷  Σ_{k<K} c_k t^k e^{-γt} / k!
//! ```
//!
//! whose coefficients reproduce the short-time Taylor data
//! `Tr_E (-iL)^j ρ_tot0`. The remainder then decays like `|z|^{-K-1}` and the
//! quadrature converges quickly; the subtracted piece is added back in closed
//! form.

use alloc::string::String;
use alloc::vec::Vec;

use crate::effective::{ComplexFrequency, EffectiveSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, I, ZERO};
use crate::model::{CompositeModel, EigenCache};
use crate::opspace::{partial_trace_env, Operator};
use crate::projection::split_initial;
use crate::{CMatrix, CVector, C64};

const PI: f64 = core::f64::consts::PI;

/// Default contour height in units of the energy scale.
pub const DEFAULT_EPS_FACTOR: f64 = 0.05;
/// Default half-width in units of the spectral radius of `L_tot`.
pub const DEFAULT_OMEGA_FACTOR: f64 = 4.0;
/// Safety factor on the node-count bound `n ≥ 2Ωt_max/π`.
pub const NYQUIST_SAFETY: f64 = 8.0;
/// Default number of subtracted large-`|z|` terms.
pub const DEFAULT_TAIL_ORDER: usize = 16;
/// Default decay rate of the subtraction functions, in units of the energy scale.
pub const DEFAULT_TAIL_DECAY_FACTOR: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidParameter("time grid is empty".into()));
        }
        if !(times[0] >= 0.0) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(
                "time grid must start at t >= 0 and be finite".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "time grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { times })
    }

    /// `count` equally spaced points covering `[0, t_max]` inclusive.
    pub fn uniform(t_max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(t_max > 0.0) {
            return Err(Error::InvalidParameter(
                "uniform grid needs t_max > 0 and at least 2 points".into(),
            ));
        }
        let h = t_max / (count - 1) as f64;
        let mut times: Vec<f64> = (0..count).map(|k| k as f64 * h).collect();
        times[count - 1] = t_max;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }
    pub fn count(&self) -> usize {
        self.times.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourSpec {
    pub epsilon: f64,
    pub omega_max: f64,
    pub n_points: usize,
    /// Number `K` of subtracted large-`|z|` terms (0 disables the subtraction).
    pub tail_order: usize,
    /// Decay rate `γ` of the subtraction functions.
    pub tail_decay: f64,
}

impl ContourSpec {
    pub fn new(epsilon: f64, omega_max: f64, n_points: usize) -> Self {
        Self {
            epsilon,
            omega_max,
            n_points,
            tail_order: DEFAULT_TAIL_ORDER,
            tail_decay: DEFAULT_TAIL_DECAY_FACTOR * omega_max / DEFAULT_OMEGA_FACTOR,
        }
    }

    pub fn with_tail(mut self, order: usize, decay: f64) -> Self {
        self.tail_order = order;
        self.tail_decay = decay;
        self
    }

    /// Smallest even node count satisfying the Nyquist-type bound.
    pub fn required_points(omega_max: f64, t_max: f64) -> usize {
        let n = libm::ceil(2.0 * omega_max * t_max / PI) as usize;
        n.max(2).next_multiple_of(2)
    }

    /// `ε = 0.05·scale`, `Ω = 4·scale`, `n` from the bound with 8x safety,
    /// where `scale` is the spectral radius of `L_tot` (1 if it vanishes).
    pub fn default_for(model: &CompositeModel, t_max: f64) -> Self {
        let scale = model.energy_scale();
        let omega = DEFAULT_OMEGA_FACTOR * scale;
        let n = libm::ceil(NYQUIST_SAFETY * Self::required_points(omega, t_max) as f64) as usize;
        Self {
            epsilon: DEFAULT_EPS_FACTOR * scale,
            omega_max: omega,
            n_points: n.next_multiple_of(2),
            tail_order: DEFAULT_TAIL_ORDER,
            tail_decay: DEFAULT_TAIL_DECAY_FACTOR * scale,
        }
    }

    /// One refinement step: `ε → ε/2`, `n → 2n`, `Ω` unchanged.
    pub fn refined(&self) -> Self {
        Self {
            epsilon: 0.5 * self.epsilon,
            n_points: 2 * self.n_points,
            ..*self
        }
    }

    pub fn validate(&self, spectral_radius: f64, t_max: f64) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter("contour epsilon must be > 0".into()));
        }
        if !(self.omega_max > spectral_radius) || !self.omega_max.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!(
                "omega_max {} must exceed the spectral radius {} of L_tot",
                self.omega_max,
                spectral_radius
            )));
        }
        if !self.n_points.is_multiple_of(2) || self.n_points < 2 {
            return Err(Error::InvalidParameter("n_points must be even and >= 2".into()));
        }
        let required = Self::required_points(self.omega_max, t_max);
        if self.n_points < required {
            return Err(Error::NyquistViolation {
                n_points: self.n_points,
                required,
            });
        }
        if self.tail_order > 0 && !(self.tail_decay > 0.0) {
            return Err(Error::InvalidParameter("tail_decay must be > 0".into()));
        }
        Ok(())
    }

    /// Node frequencies `ω_j` (`n + 1` points including both endpoints).
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (0..=self.n_points)
            .map(|j| -self.omega_max + j as f64 * h)
            .collect()
    }

    /// Trapezoidal weight of node `j`.
    pub fn weight(&self, j: usize) -> f64 {
        let h = self.step();
        if j == 0 || j == self.n_points {
            0.5 * h
        } else {
            h
        }
    }

    pub fn step(&self) -> f64 {
        2.0 * self.omega_max / self.n_points as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryMeta {
    pub model: String,
    pub method: String,
    /// Largest anti-hermitian part removed by hermitization (0 if none applied).
    pub hermiticity_defect: f64,
    /// Largest `|Tr ρ(t) - 1|` before hermitization.
    pub trace_defect: f64,
    /// Largest condition estimate seen during the computation.
    pub condition: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<Operator>,
    pub meta: TrajectoryMeta,
}

// ---------------------------------------------------------------------------
// exact propagation

/// `ρ_tot(t) = V e^{-iεt} V† ρ_tot0 V e^{iεt} V†`, stored in the eigenbasis.
#[derive(Clone, Debug)]
pub struct ExactPropagator {
    cache: EigenCache,
    rho_tilde: CMatrix,
    d_sys: usize,
    d_env: usize,
}

impl ExactPropagator {
    pub fn new(model: &CompositeModel) -> Result<Self> {
        let cache = model.eigen_cache()?;
        let rho_tilde = cache.to_eigenbasis(model.build_initial_total()?.operator().matrix());
        Ok(Self {
            cache,
            rho_tilde,
            d_sys: model.d_sys(),
            d_env: model.d_env(),
        })
    }

    pub fn cache(&self) -> &EigenCache {
        &self.cache
    }

    /// Initial total state in the `H_tot` eigenbasis.
    pub fn rho_tilde(&self) -> &CMatrix {
        &self.rho_tilde
    }

    pub fn total_at(&self, t: f64) -> CMatrix {
        let e = self.cache.energies();
        let d = e.len();
        let phase: Vec<C64> = e.iter().map(|&x| C64::from_polar(1.0, -x * t)).collect();
        let evolved = CMatrix::from_fn(d, d, |a, b| self.rho_tilde[(a, b)] * phase[a] * phase[b].conj());
        self.cache.from_eigenbasis(&evolved)
    }

    pub fn reduced_at(&self, t: f64) -> Result<Operator> {
        partial_trace_env(&Operator::new(self.total_at(t))?, self.d_sys, self.d_env)
    }
}

/// Reduced dynamics from exact diagonalization of `H_tot`.
pub fn exact_reduced_evolution(model: &CompositeModel, grid: &TimeGrid) -> Result<Trajectory> {
    let prop = ExactPropagator::new(model)?;
    let mut states = Vec::with_capacity(grid.count());
    for &t in grid.times() {
        states.push(prop.reduced_at(t)?);
    }
    finish_exact(model, grid, states)
}

/// Assemble an exact trajectory from states computed elsewhere (e.g. in parallel).
pub fn finish_exact(model: &CompositeModel, grid: &TimeGrid, states: Vec<Operator>) -> Result<Trajectory> {
    if states.len() != grid.count() {
        return Err(Error::GridMismatch);
    }
    let mut herm = 0.0f64;
    let mut tr = 0.0f64;
    for s in &states {
        herm = herm.max(s.hermitian_defect());
        tr = tr.max((s.trace() - 1.0).norm());
    }
    Ok(Trajectory {
        grid: grid.clone(),
        states,
        meta: TrajectoryMeta {
            model: model.name().into(),
            method: "exact-eigen".into(),
            hermiticity_defect: herm,
            trace_defect: tr,
            condition: 1.0,
        },
    })
}

// ---------------------------------------------------------------------------
// inverse Laplace

/// Precomputed pieces of one contour inversion. Node values are independent
/// (`node_value`), so callers may evaluate them in any order or in parallel
/// and hand the ordered list to `synthesize`.
pub struct LaplaceInversion<'a> {
    model_name: String,
    sys: &'a EffectiveSystem,
    contour: ContourSpec,
    rho_0: Operator,
    delta: CVector,
    /// `c_k` as `d_S x d_S` matrices.
    tail: Vec<CMatrix>,
    t_max: f64,
}

impl<'a> LaplaceInversion<'a> {
    pub fn new(
        model: &CompositeModel,
        sys: &'a EffectiveSystem,
        contour: ContourSpec,
        grid: &TimeGrid,
    ) -> Result<Self> {
        let radius = model.eigen_cache()?.spectral_range();
        contour.validate(radius, grid.t_max())?;
        ComplexFrequency::new(C64::new(0.0, contour.epsilon))?;
        let rho_tot = model.build_initial_total()?;
        let (rho_0, delta) = split_initial(&rho_tot, sys.projectors())?;
        let moments = sys.high_frequency_moments(rho_tot.operator(), contour.tail_order)?;
        let tail = tail_coefficients(&moments, contour.tail_decay);
        Ok(Self {
            model_name: model.name().into(),
            sys,
            contour,
            rho_0,
            delta,
            tail,
            t_max: grid.t_max(),
        })
    }

    pub fn contour(&self) -> &ContourSpec {
        &self.contour
    }

    pub fn node_frequencies(&self) -> Vec<f64> {
        self.contour.nodes()
    }

    /// `ρ(ω + iε) - S(ω + iε)` with the condition estimate of the solve.
    pub fn node_value(&self, omega: f64) -> Result<(CMatrix, f64)> {
        let z = ComplexFrequency::new(C64::new(omega, self.contour.epsilon))?;
        let st = self.sys.frequency_state(z, &self.rho_0, &self.delta)?;
        let mut r = st.rho_z.into_matrix();
        let u = I / (z.value() + C64::new(0.0, self.contour.tail_decay));
        let mut p = u;
        for c in &self.tail {
            r -= c * p;
            p *= u;
        }
        Ok((r, st.condition_report))
    }

    /// Closed-form inverse of the subtracted terms at time `t`.
    pub fn tail_at(&self, t: f64) -> CMatrix {
        let d = self.rho_0.dim();
        let mut out = CMatrix::zeros(d, d);
        let env = libm::exp(-self.contour.tail_decay * t);
        let mut f = env;
        for (k, c) in self.tail.iter().enumerate() {
            if k > 0 {
                f *= t / k as f64;
            }
            out += c * C64::new(f, 0.0);
        }
        out
    }

    /// Trapezoid sum plus tail, hermitized, as a trajectory.
    pub fn synthesize(&self, nodes: &[(CMatrix, f64)], grid: &TimeGrid) -> Result<Trajectory> {
        let omegas = self.contour.nodes();
        if nodes.len() != omegas.len() || grid.t_max() > self.t_max * (1.0 + 1e-12) {
            return Err(Error::GridMismatch);
        }
        let d = self.rho_0.dim();
        let eps = self.contour.epsilon;
        let h = self.contour.step();
        let mut states = Vec::with_capacity(grid.count());
        let mut herm = 0.0f64;
        let mut tr = 0.0f64;
        for &t in grid.times() {
            let mut acc = CMatrix::zeros(d, d);
            // e^{-iω_j t} by recurrence from the left endpoint
            let step = C64::from_polar(1.0, -h * t);
            let mut phase = C64::from_polar(1.0, self.contour.omega_max * t);
            for (j, (val, _)) in nodes.iter().enumerate() {
                if j % 256 == 0 {
                    phase = C64::from_polar(1.0, -omegas[j] * t);
                }
                let w = self.contour.weight(j);
                acc += val * (phase * w);
                phase *= step;
            }
            let rho = acc * C64::new(libm::exp(eps * t) / (2.0 * PI), 0.0) + self.tail_at(t);
            herm = herm.max(linalg::hermitian_defect(&rho));
            let trace: C64 = (0..d).map(|i| rho[(i, i)]).fold(ZERO, |a, b| a + b);
            tr = tr.max((trace - 1.0).norm());
            states.push(Operator::new(rho)?.hermitized());
        }
        let condition = nodes.iter().map(|n| n.1).fold(1.0, f64::max);
        Ok(Trajectory {
            grid: grid.clone(),
            states,
            meta: TrajectoryMeta {
                model: self.model_name.clone(),
                method: "inverse-laplace".into(),
                hermiticity_defect: herm,
                trace_defect: tr,
                condition,
            },
        })
    }
}

/// `c_k = Σ_j C(k, j) γ^{k-j} (-i)^j M_j`.
fn tail_coefficients(moments: &[Operator], gamma: f64) -> Vec<CMatrix> {
    let mut a: Vec<CMatrix> = Vec::with_capacity(moments.len());
    let mut mi = C64::new(1.0, 0.0);
    for m in moments {
        a.push(m.matrix() * mi);
        mi *= C64::new(0.0, -1.0);
    }
    (0..moments.len())
        .map(|k| {
            let d = moments[0].dim();
            let mut c = CMatrix::zeros(d, d);
            let mut binom = 1.0f64;
            for (j, aj) in a.iter().enumerate().take(k + 1) {
                if j > 0 {
                    binom = binom * (k + 1 - j) as f64 / j as f64;
                }
                c += aj * C64::new(binom * libm::pow(gamma, (k - j) as f64), 0.0);
            }
            c
        })
        .collect()
}

/// Reduced dynamics from the frequency-domain solution on a horizontal contour.
pub fn inverse_laplace_evolve(
    model: &CompositeModel,
    contour: &ContourSpec,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let sys = EffectiveSystem::new(model)?;
    inverse_laplace_with(model, &sys, contour, grid)
}

pub fn inverse_laplace_with(
    model: &CompositeModel,
    sys: &EffectiveSystem,
    contour: &ContourSpec,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let inv = LaplaceInversion::new(model, sys, *contour, grid)?;
    let nodes = inv
        .node_frequencies()
        .into_iter()
        .map(|w| inv.node_value(w))
        .collect::<Result<Vec<_>>>()?;
    inv.synthesize(&nodes, grid)
}

// ---------------------------------------------------------------------------
// comparison

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub max_deviation: f64,
    /// Mean over times of the per-time maximal entrywise deviation.
    pub mean_deviation: f64,
    pub per_time: Vec<f64>,
}

pub fn compare_trajectories(a: &Trajectory, b: &Trajectory) -> Result<ComparisonReport> {
    if a.grid != b.grid || a.states.len() != b.states.len() {
        return Err(Error::GridMismatch);
    }
    let mut per_time = Vec::with_capacity(a.states.len());
    for (x, y) in a.states.iter().zip(&b.states) {
        if x.dim() != y.dim() {
            return Err(Error::GridMismatch);
        }
        per_time.push(linalg::max_abs_diff(x.matrix(), y.matrix()));
    }
    let max_deviation = per_time.iter().copied().fold(0.0, f64::max);
    let mean_deviation = per_time.iter().sum::<f64>() / per_time.len() as f64;
    Ok(ComparisonReport {
        max_deviation,
        mean_deviation,
        per_time,
    })
}
