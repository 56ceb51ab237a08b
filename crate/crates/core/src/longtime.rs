//! Spectrum of `L(z)`, zero modes, stationary states and timescales.
//!
//! At finite `ε` the long-time value `lim -izρ(z)` is the Abel average
//! `ερ(iε) = ε ∫ e^{-εt} ρ(t) dt`. Finite environments have a discrete
//! spectrum, so the strict `ε → 0` limit sees recurrences; everything here
//! works at explicit finite `ε` and reports how results move with it.

use alloc::vec::Vec;

use crate::effective::{ComplexFrequency, EffectiveLiouvilleEval, EffectiveSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, ConditionedLu, ONE, ZERO};
use crate::model::CompositeModel;
use crate::opspace::{hs_inner, partial_trace_env, unvec, vec, Operator};
use crate::projection::split_initial;
use crate::{CMatrix, CVector, C64};

/// Eigenvalues closer than this (relative to the spectral radius) are solved
/// for as one cluster.
pub const GROUPING_TOL: f64 = 1e-8;
/// Default zero-cluster tolerance relative to the spectral radius of `L(z)`.
pub const ZERO_CLUSTER_TOL: f64 = 1e-6;
/// Bohr frequencies below this fraction of the spectral range count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Default `ε_ref` in units of the energy scale.
pub const DEFAULT_EPS_REF_FACTOR: f64 = 0.01;
/// `t_Q / t_PQ` below which initial correlations are judged negligible.
pub const CORRELATION_RATIO: f64 = 0.1;

pub const FINITE_SIZE_CAVEAT: &str = "finite environment: evaluated at finite eps; \
the strict eps -> 0 limit is dominated by recurrences and is not computed";

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub z: C64,
    pub eigenvalues: Vec<C64>,
    pub right: Vec<Operator>,
    pub left: Vec<Operator>,
    /// `max |⟨L_j, R_k⟩ - δ_jk|`.
    pub biorthogonality_defect: f64,
    /// Cluster index of each mode.
    pub cluster: Vec<usize>,
    /// Per cluster: geometric multiplicity short of algebraic, or left/right
    /// pairing singular.
    pub defective_cluster: Vec<bool>,
    /// Spectral radius of `L(z)` (1 if it vanishes).
    pub scale: f64,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }
    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
    pub fn defective(&self) -> bool {
        self.defective_cluster.iter().any(|&d| d)
    }
    /// Smallest `|λ_k|`.
    pub fn min_abs(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min)
    }
    /// Largest `Im λ_k` (positive values would be growing modes).
    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.im).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn clusters(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    // single linkage
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut ids: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        let r = root(&mut label, i);
        match ids.iter().find(|(k, _)| *k == r) {
            Some(&(_, g)) => groups[g].push(i),
            None => {
                ids.push((r, groups.len()));
                groups.push(alloc::vec![i]);
            }
        }
    }
    groups
}

/// Full left/right eigensystem of `L(z)`, biorthonormalized per cluster.
pub fn spectrum_effective(eval: &EffectiveLiouvilleEval) -> Result<SpectralData> {
    let a = &eval.l_eff;
    let n = a.nrows();
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Eigensolver("L(z) has non-finite entries"));
    }
    let d = libm::round(libm::sqrt(n as f64)) as usize;
    let values = linalg::eigenvalues(a)?;
    let radius = values.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let scale = if radius > 0.0 { radius } else { 1.0 };
    let null_tol = 1e-7 * scale.max(linalg::max_abs(a));

    let groups = clusters(&values, GROUPING_TOL * scale);
    let mut modes: Vec<(C64, CVector, CVector, usize)> = Vec::with_capacity(n);
    let mut defective_cluster = Vec::with_capacity(groups.len());
    for (gi, g) in groups.iter().enumerate() {
        let m = g.len();
        let lambda = g.iter().map(|&i| values[i]).fold(ZERO, |s, v| s + v) / m as f64;
        let (r, sr) = linalg::smallest_right_singular(&linalg::shifted(a, lambda).scale(-1.0), m);
        let (l, sl) = linalg::smallest_right_singular(&linalg::shifted(&a.adjoint(), lambda.conj()), m);
        let mut defective = sr.iter().chain(&sl).any(|&s| s > null_tol);
        // L ← L (G⁻¹)† with G = L† R so that L† R = 1 on the cluster
        let gram = l.adjoint() * &r;
        let lu = ConditionedLu::new(gram.clone());
        let l = match lu.inverse() {
            Some(inv) if lu.condition() < 1e10 => &l * inv.adjoint(),
            _ => {
                defective = true;
                l
            }
        };
        defective_cluster.push(defective);
        for k in 0..m {
            modes.push((lambda, r.column(k).into_owned(), l.column(k).into_owned(), gi));
        }
    }
    // individual eigenvalues inside a cluster are reported as computed
    let mut per_cluster_values: Vec<Vec<C64>> = groups
        .iter()
        .map(|g| g.iter().map(|&i| values[i]).collect())
        .collect();
    for (lambda, _, _, gi) in modes.iter_mut() {
        *lambda = per_cluster_values[*gi].remove(0);
    }
    modes.sort_by(|x, y| {
        x.0.im
            .abs()
            .partial_cmp(&y.0.im.abs())
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(x.0.re.partial_cmp(&y.0.re).unwrap_or(core::cmp::Ordering::Equal))
    });

    let rmat = CMatrix::from_columns(&modes.iter().map(|m| m.1.clone()).collect::<Vec<_>>());
    let lmat = CMatrix::from_columns(&modes.iter().map(|m| m.2.clone()).collect::<Vec<_>>());
    let bio = lmat.adjoint() * &rmat - CMatrix::identity(n, n);
    let biorthogonality_defect = linalg::max_abs(&bio);

    let mut eigenvalues = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut cluster = Vec::with_capacity(n);
    for (lambda, r, l, gi) in modes {
        eigenvalues.push(lambda);
        right.push(unvec(&r, d)?);
        left.push(unvec(&l, d)?);
        cluster.push(gi);
    }
    Ok(SpectralData {
        z: eval.z.value(),
        eigenvalues,
        right,
        left,
        biorthogonality_defect,
        cluster,
        defective_cluster,
        scale,
    })
}

#[derive(Clone, Debug)]
pub struct ZeroMode {
    pub eigenvalue: C64,
    pub right: Operator,
    pub left: Operator,
}

#[derive(Clone, Debug)]
pub struct ZeroModeProjector {
    /// Unit-trace right zero mode when non-degenerate; `Π⁰(1/d)` otherwise.
    pub rho_inf_candidate: Operator,
    /// `Π⁰` acting on row-major vectorized operators.
    pub projector: CMatrix,
    pub degeneracy: usize,
    pub modes: Vec<ZeroMode>,
    pub idempotency_defect: f64,
    /// `max |L_0 - 1|` of the biorthonormal left zero mode (non-degenerate case).
    pub left_identity_defect: f64,
}

impl ZeroModeProjector {
    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        let d = x.dim();
        if d * d != self.projector.nrows() {
            return Err(Error::DimensionMismatch {
                context: "zero-mode projector input",
                expected: libm::round(libm::sqrt(self.projector.nrows() as f64)) as usize,
                found: d,
            });
        }
        unvec(&(&self.projector * vec(x)), d)
    }
}

/// `Π⁰ = Σ_k vec(R_k) vec(L_k)†` over eigenvalues with `|λ| ≤ cluster_tol·scale`.
pub fn zero_mode_projector(sd: &SpectralData, cluster_tol: f64) -> Result<ZeroModeProjector> {
    let lim = cluster_tol * sd.scale;
    let idx: Vec<usize> = (0..sd.len()).filter(|&k| sd.eigenvalues[k].norm() <= lim).collect();
    if idx.is_empty() {
        return Err(Error::EmptyZeroCluster {
            smallest: sd.min_abs(),
        });
    }
    if idx.iter().any(|&k| sd.defective_cluster[sd.cluster[k]]) {
        return Err(Error::DefectiveCluster);
    }
    let d = sd.right[0].dim();
    let n = d * d;
    let id = Operator::identity(d);
    let modes: Vec<ZeroMode> = idx
        .iter()
        .map(|&k| ZeroMode {
            eigenvalue: sd.eigenvalues[k],
            right: sd.right[k].clone(),
            left: sd.left[k].clone(),
        })
        .collect();

    if modes.len() == 1 {
        let tr = modes[0].right.trace();
        if tr.norm() < 1e-12 {
            return Err(Error::Eigensolver("right zero mode is traceless"));
        }
        let rho = Operator::new(modes[0].right.matrix() / tr)?;
        // biorthonormal partner of the unit-trace mode
        let left = Operator::new(modes[0].left.matrix() * tr.conj())?;
        let left_identity_defect = linalg::max_abs_diff(left.matrix(), id.matrix());
        let projector = vec(&rho) * vec(&id).adjoint();
        let idempotency_defect = linalg::max_abs_diff(&(&projector * &projector), &projector);
        return Ok(ZeroModeProjector {
            rho_inf_candidate: rho.clone(),
            projector,
            degeneracy: 1,
            modes: alloc::vec![ZeroMode {
                eigenvalue: modes[0].eigenvalue,
                right: rho,
                left,
            }],
            idempotency_defect,
            left_identity_defect,
        });
    }

    let mut projector = CMatrix::zeros(n, n);
    for m in &modes {
        projector += vec(&m.right) * vec(&m.left).adjoint();
    }
    let idempotency_defect = linalg::max_abs_diff(&(&projector * &projector), &projector);
    let mixed = id.scale(1.0 / d as f64);
    let rho_inf_candidate = unvec(&(&projector * vec(&mixed)), d)?;
    Ok(ZeroModeProjector {
        rho_inf_candidate,
        projector,
        degeneracy: modes.len(),
        modes,
        idempotency_defect,
        left_identity_defect: f64::NAN,
    })
}

// ---------------------------------------------------------------------------
// long-time limits

#[derive(Clone, Debug)]
pub struct Extrapolation {
    pub rho_inf: Operator,
    /// `(ε, ερ(iε))` in the order given.
    pub samples: Vec<(f64, Operator)>,
    /// `max |g(ε_{k+1}) - g(ε_k)|`.
    pub step_differences: Vec<f64>,
    /// Step differences shrink monotonically.
    pub monotone: bool,
    /// Largest change of the extrapolated value when the last sample is dropped.
    pub extrapolation_change: f64,
    pub trace_defect: f64,
    pub hermiticity_defect: f64,
}

/// Quadratic (or lower with fewer samples) polynomial in `ε` through the last
/// three samples, evaluated at `ε = 0` by Neville's scheme.
pub fn richardson_to_zero(samples: &[(f64, CMatrix)]) -> Result<(CMatrix, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty eps sequence".into()));
    }
    let start = samples.len().saturating_sub(3);
    let pts = &samples[start..];
    let neville = |pts: &[(f64, CMatrix)]| -> CMatrix {
        let mut p: Vec<CMatrix> = pts.iter().map(|s| s.1.clone()).collect();
        let x: Vec<f64> = pts.iter().map(|s| s.0).collect();
        let n = p.len();
        for k in 1..n {
            for i in 0..n - k {
                // value at 0 of the interpolant through x_i..x_{i+k}
                let (xi, xj) = (x[i], x[i + k]);
                p[i] = (&p[i] * C64::new(-xj, 0.0) - &p[i + 1] * C64::new(-xi, 0.0)) / C64::new(xi - xj, 0.0);
            }
        }
        p.swap_remove(0)
    };
    let full = neville(pts);
    let change = if pts.len() > 1 {
        linalg::max_abs_diff(&full, &neville(&pts[..pts.len() - 1]))
    } else {
        f64::INFINITY
    };
    Ok((full, change))
}

fn check_eps_seq(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::InvalidParameter("eps sequence is empty".into()));
    }
    if eps.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidParameter("eps values must be positive".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("eps sequence must be decreasing".into()));
    }
    Ok(())
}

fn finish_extrapolation(samples: Vec<(f64, Operator)>) -> Result<Extrapolation> {
    let raw: Vec<(f64, CMatrix)> = samples.iter().map(|(e, g)| (*e, g.matrix().clone())).collect();
    let (ext, change) = richardson_to_zero(&raw)?;
    let step_differences: Vec<f64> = raw
        .windows(2)
        .map(|w| linalg::max_abs_diff(&w[1].1, &w[0].1))
        .collect();
    let monotone = step_differences.windows(2).all(|w| w[1] <= w[0]);
    let hermiticity_defect = linalg::hermitian_defect(&ext);
    let rho = Operator::new(ext)?.hermitized();
    let trace_defect = (rho.trace() - ONE).norm();
    Ok(Extrapolation {
        rho_inf: rho,
        samples,
        step_differences,
        monotone,
        extrapolation_change: change,
        trace_defect,
        hermiticity_defect,
    })
}

/// `ερ(iε)` from the effective pipeline.
pub fn abel_average(sys: &EffectiveSystem, model: &CompositeModel, eps: f64) -> Result<Operator> {
    let rho_tot = model.build_initial_total()?;
    let (rho_0, delta) = split_initial(&rho_tot, sys.projectors())?;
    let z = ComplexFrequency::new(C64::new(0.0, eps))?;
    let st = sys.frequency_state(z, &rho_0, &delta)?;
    Ok(st.rho_z.scale(eps))
}

/// Evaluates `g(ε) = -i(iε)ρ(iε)` along a decreasing sequence and
/// extrapolates to `ε = 0`.
pub fn long_time_limit_extrapolated(model: &CompositeModel, eps_seq: &[f64]) -> Result<Extrapolation> {
    check_eps_seq(eps_seq)?;
    let sys = EffectiveSystem::new(model)?;
    long_time_limit_extrapolated_with(&sys, model, eps_seq)
}

pub fn long_time_limit_extrapolated_with(
    sys: &EffectiveSystem,
    model: &CompositeModel,
    eps_seq: &[f64],
) -> Result<Extrapolation> {
    check_eps_seq(eps_seq)?;
    let samples = eps_seq
        .iter()
        .map(|&e| Ok((e, abel_average(sys, model, e)?)))
        .collect::<Result<Vec<_>>>()?;
    finish_extrapolation(samples)
}

#[derive(Clone, Debug)]
pub struct LongTimeFormula {
    pub rho_inf: Operator,
    pub eps_ref: f64,
    pub degeneracy: usize,
    pub zero_modes: ZeroModeProjector,
    /// Size of the correlated shift `Δρ₀(iε_ref)`.
    pub shift_norm: f64,
    /// Non-degenerate case: `max |Π⁰ρ_0 - Π⁰ρ_0'|` for `ρ_0' = 1/d`.
    pub initial_state_sensitivity: Option<f64>,
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
}

/// `ρ_∞ = Π⁰ (ρ_0 + Δρ₀(iε_ref))` with `Π⁰` from `L(iε_ref)`.
pub fn long_time_formula(model: &CompositeModel, eps_ref: f64) -> Result<LongTimeFormula> {
    let sys = EffectiveSystem::new(model)?;
    long_time_formula_with(&sys, model, eps_ref, ZERO_CLUSTER_TOL)
}

pub fn long_time_formula_with(
    sys: &EffectiveSystem,
    model: &CompositeModel,
    eps_ref: f64,
    cluster_tol: f64,
) -> Result<LongTimeFormula> {
    let z = ComplexFrequency::new(C64::new(0.0, eps_ref))?;
    let eval = sys.effective_liouville(z)?;
    let sd = spectrum_effective(&eval)?;
    let pi0 = zero_mode_projector(&sd, cluster_tol)?;
    let rho_tot = model.build_initial_total()?;
    let (rho_0, delta) = split_initial(&rho_tot, sys.projectors())?;
    let shift = sys.initial_shift(z, &delta)?;
    let raw = pi0.apply(&rho_0.add(&shift)?)?;
    let d = rho_0.dim();
    let initial_state_sensitivity = if pi0.degeneracy == 1 {
        let other = pi0.apply(&Operator::identity(d).scale(1.0 / d as f64))?;
        Some(linalg::max_abs_diff(pi0.apply(&rho_0)?.matrix(), other.matrix()))
    } else {
        None
    };
    let hermiticity_defect = raw.hermitian_defect();
    let rho = raw.hermitized();
    Ok(LongTimeFormula {
        trace_defect: (rho.trace() - ONE).norm(),
        rho_inf: rho,
        eps_ref,
        degeneracy: pi0.degeneracy,
        zero_modes: pi0,
        shift_norm: shift.max_abs(),
        initial_state_sensitivity,
        hermiticity_defect,
    })
}

/// Default `ε_ref = 0.01·scale`.
pub fn default_eps_ref(model: &CompositeModel) -> f64 {
    DEFAULT_EPS_REF_FACTOR * model.energy_scale()
}

/// Exact infinite-time average of the closed finite system, reduced:
/// drop every eigenbasis element of `ρ_tot0` oscillating at a non-degenerate
/// Bohr frequency.
pub fn time_average_oracle(model: &CompositeModel) -> Result<Operator> {
    let cache = model.eigen_cache()?;
    let tol = DEGENERACY_TOL * cache.spectral_range();
    let rt = cache.to_eigenbasis(model.build_initial_total()?.operator().matrix());
    let d = rt.nrows();
    let kept = CMatrix::from_fn(d, d, |a, b| {
        if cache.bohr(a, b).abs() <= tol {
            rt[(a, b)]
        } else {
            ZERO
        }
    });
    partial_trace_env(&Operator::new(cache.from_eigenbasis(&kept))?, model.d_sys(), model.d_env())
}

/// Exact Abel average `ε ∫ e^{-εt} ρ(t) dt` of the closed system:
/// `Σ ρ̃_αβ ε / (ε + iω_αβ)` in the eigenbasis, reduced.
pub fn abel_average_oracle(model: &CompositeModel, eps: f64) -> Result<Operator> {
    let cache = model.eigen_cache()?;
    let rt = cache.to_eigenbasis(model.build_initial_total()?.operator().matrix());
    let d = rt.nrows();
    let w = CMatrix::from_fn(d, d, |a, b| {
        rt[(a, b)] * C64::new(eps, 0.0) / C64::new(eps, cache.bohr(a, b))
    });
    partial_trace_env(&Operator::new(cache.from_eigenbasis(&w))?, model.d_sys(), model.d_env())
}

/// Abel-average oracle at every `ε` of the sequence, extrapolated the same way.
pub fn abel_oracle_extrapolated(model: &CompositeModel, eps_seq: &[f64]) -> Result<Extrapolation> {
    check_eps_seq(eps_seq)?;
    let samples = eps_seq
        .iter()
        .map(|&e| Ok((e, abel_average_oracle(model, e)?)))
        .collect::<Result<Vec<_>>>()?;
    finish_extrapolation(samples)
}

// ---------------------------------------------------------------------------
// timescales

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimescaleDiagnostics {
    Coupled {
        /// `1 / ‖R L_tot B‖₂`.
        t_pq: f64,
        /// `‖(iε_ref - M)⁻¹‖₂`.
        t_q: f64,
        /// `t_pq² / t_q`.
        tau: f64,
        eps_ref: f64,
        /// `t_q / t_pq < 0.1`.
        correlations_negligible: bool,
    },
    /// `L_PQ = 0`: the system never relaxes, `τ = ∞`.
    Uncoupled { t_q: f64, eps_ref: f64 },
}

impl TimescaleDiagnostics {
    pub fn tau(&self) -> f64 {
        match self {
            Self::Coupled { tau, .. } => *tau,
            Self::Uncoupled { .. } => f64::INFINITY,
        }
    }
}

/// Heuristic relaxation scales from spectral norms of the restricted blocks.
pub fn timescale_diagnostics(sys: &EffectiveSystem, eps_ref: f64) -> Result<TimescaleDiagnostics> {
    let z = ComplexFrequency::new(C64::new(0.0, eps_ref))?;
    let m = sys.l_q_restricted();
    let t_q = if m.nrows() == 0 {
        1.0 / eps_ref
    } else {
        let s = linalg::singular_values(&linalg::shifted(m, z.value()));
        let smin = s.last().copied().unwrap_or(0.0);
        if smin > 0.0 {
            1.0 / smin
        } else {
            f64::INFINITY
        }
    };
    let coupling = linalg::spectral_norm(sys.l_pq_restricted());
    let l_scale = linalg::max_abs(&sys.blocks().l_tot).max(1.0);
    if coupling <= 1e-14 * l_scale {
        return Ok(TimescaleDiagnostics::Uncoupled { t_q, eps_ref });
    }
    let t_pq = 1.0 / coupling;
    Ok(TimescaleDiagnostics::Coupled {
        t_pq,
        t_q,
        tau: t_pq * t_pq / t_q,
        eps_ref,
        correlations_negligible: t_q / t_pq < CORRELATION_RATIO,
    })
}

/// Hilbert-Schmidt pairing `⟨L_j, R_k⟩` matrix of a spectral data set.
pub fn pairing_matrix(sd: &SpectralData) -> Result<CMatrix> {
    let n = sd.len();
    let mut g = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            g[(j, k)] = hs_inner(&sd.left[j], &sd.right[k])?;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        catalog_model, catalog_model_with, default_rho_sys, sector_weighted_state, InitialStateSpec,
    };
    use crate::opspace::{commutator_superop, DensityOperator};

    fn iz(eps: f64) -> ComplexFrequency {
        ComplexFrequency::new(C64::new(0.0, eps)).unwrap()
    }

    fn qubit(h: f64) -> CompositeModel {
        CompositeModel::new(
            "qubit",
            crate::model::pauli_z().scale(h),
            Operator::zeros(2),
            Vec::new(),
            DensityOperator::maximally_mixed(2),
            InitialStateSpec::Product(default_rho_sys()),
        )
        .unwrap()
    }

    fn eval_of(m: &CompositeModel, eps: f64) -> EffectiveLiouvilleEval {
        EffectiveSystem::new(m).unwrap().effective_liouville(iz(eps)).unwrap()
    }

    #[test]
    fn isolated_qubit_spectrum() {
        let sd = spectrum_effective(&eval_of(&qubit(0.5), 0.1)).unwrap();
        let mut re: Vec<f64> = sd.eigenvalues.iter().map(|l| l.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in re.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(sd.eigenvalues.iter().all(|l| l.im.abs() < 1e-12));
        assert!(sd.biorthogonality_defect < 1e-8);
        assert!(!sd.defective());
        let g = pairing_matrix(&sd).unwrap();
        assert!(linalg::max_abs_diff(&g, &CMatrix::identity(4, 4)) < 1e-8);
        let pi = zero_mode_projector(&sd, ZERO_CLUSTER_TOL).unwrap();
        assert_eq!(pi.degeneracy, 2);
        assert!(pi.idempotency_defect < 1e-8);
    }

    #[test]
    fn eigenpairs_satisfy_eigen_equations() {
        let m = catalog_model("QB3", 0).unwrap();
        let eval = eval_of(&m, 0.03);
        let sd = spectrum_effective(&eval).unwrap();
        for k in 0..sd.len() {
            let r = vec(&sd.right[k]);
            let l = vec(&sd.left[k]);
            let lam = sd.eigenvalues[k];
            assert!(linalg::max_abs_vec(&(&eval.l_eff * &r - &r * lam)) < 1e-9);
            let lhs = l.adjoint() * &eval.l_eff;
            let rhs = l.adjoint() * lam;
            assert!((lhs - rhs).iter().all(|x| x.norm() < 1e-9));
        }
        assert!(sd.biorthogonality_defect < 1e-8);
        // sorted by |Im| ascending
        assert!(sd.eigenvalues.windows(2).all(|w| w[0].im.abs() <= w[1].im.abs() + 1e-15));
    }

    #[test]
    fn zero_mode_exists_and_left_mode_is_identity() {
        for name in ["QB3", "GENERIC", "DECOUPLED", "DEGENERATE"] {
            let m = catalog_model(name, 3).unwrap();
            for eps in [0.02, 0.2, 1.0] {
                let sd = spectrum_effective(&eval_of(&m, eps)).unwrap();
                assert!(sd.min_abs() <= 1e-8 * sd.scale, "{name} {eps}");
            }
        }
    }

    #[test]
    fn generic_zero_mode_is_nondegenerate() {
        let m = catalog_model_with("GENERIC", 0, Some(4)).unwrap();
        let sd = spectrum_effective(&eval_of(&m, 0.02)).unwrap();
        let pi = zero_mode_projector(&sd, ZERO_CLUSTER_TOL).unwrap();
        assert_eq!(pi.degeneracy, 1);
        assert!(pi.idempotency_defect < 1e-9);
        assert!(pi.left_identity_defect < 1e-8);
        assert!((pi.rho_inf_candidate.trace() - ONE).norm() < 1e-12);
        let x = DensityOperator::maximally_mixed(2).into_operator();
        assert!((pi.apply(&x).unwrap().trace() - ONE).norm() < 1e-8);
    }

    #[test]
    fn empty_cluster_is_an_error() {
        let sd = spectrum_effective(&eval_of(&catalog_model("QB3", 0).unwrap(), 0.1)).unwrap();
        let mut broken = sd.clone();
        for l in broken.eigenvalues.iter_mut() {
            *l += C64::new(1.0, 0.0);
        }
        assert!(matches!(
            zero_mode_projector(&broken, ZERO_CLUSTER_TOL),
            Err(Error::EmptyZeroCluster { .. })
        ));
    }

    #[test]
    fn zero_hamiltonian_long_time_is_initial_state() {
        let m = CompositeModel::new(
            "zero",
            Operator::zeros(2),
            Operator::zeros(2),
            Vec::new(),
            DensityOperator::maximally_mixed(2),
            InitialStateSpec::Product(default_rho_sys()),
        )
        .unwrap();
        let r0 = default_rho_sys().into_operator();
        let ext = long_time_limit_extrapolated(&m, &[0.2, 0.1, 0.05]).unwrap();
        assert!(linalg::max_abs_diff(ext.rho_inf.matrix(), r0.matrix()) < 1e-12);
        let o = time_average_oracle(&m).unwrap();
        assert!(linalg::max_abs_diff(o.matrix(), r0.matrix()) < 1e-14);
    }

    #[test]
    fn isolated_qubit_coherences_average_out() {
        let m = qubit(0.5);
        let ext = long_time_limit_extrapolated(&m, &[0.02, 0.01, 0.005]).unwrap();
        let r0 = default_rho_sys().into_operator();
        let mut diag = r0.matrix().clone();
        diag[(0, 1)] = ZERO;
        diag[(1, 0)] = ZERO;
        assert!(linalg::max_abs_diff(ext.rho_inf.matrix(), &diag) < 1e-6);
        assert!(ext.trace_defect < 1e-8);
        assert!(ext.monotone);
    }

    #[test]
    fn richardson_is_exact_on_quadratics() {
        let a = CMatrix::from_element(1, 1, C64::new(0.3, -0.1));
        let f = |e: f64| &a + CMatrix::from_element(1, 1, C64::new(2.0 * e - 5.0 * e * e, e));
        let s: Vec<(f64, CMatrix)> = [0.3, 0.2, 0.1].iter().map(|&e| (e, f(e))).collect();
        let (v, _) = richardson_to_zero(&s).unwrap();
        assert!(linalg::max_abs_diff(&v, &a) < 1e-14);
    }

    #[test]
    fn abel_oracle_matches_pipeline() {
        let m = catalog_model("QB3", 0).unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        for eps in [0.2, 0.05, 0.01] {
            let a = abel_average(&sys, &m, eps).unwrap();
            let b = abel_average_oracle(&m, eps).unwrap();
            assert!(linalg::max_abs_diff(a.matrix(), b.matrix()) < 1e-9);
        }
    }

    #[test]
    fn time_average_oracle_keeps_stationary_states() {
        // diagonal in the H_tot eigenbasis → unchanged
        let m = catalog_model("QB3", 0).unwrap();
        let cache = m.eigen_cache().unwrap();
        let d = m.d_total();
        let w: Vec<f64> = (0..d).map(|k| (k + 1) as f64).collect();
        let total: f64 = w.iter().sum();
        let diag = CMatrix::from_fn(d, d, |a, b| if a == b { C64::new(w[a] / total, 0.0) } else { ZERO });
        let rho = DensityOperator::new(Operator::new(cache.from_eigenbasis(&diag)).unwrap()).unwrap();
        let expect = partial_trace_env(rho.operator(), m.d_sys(), m.d_env()).unwrap();
        let m2 = m.with_initial(InitialStateSpec::FullMatrix(rho)).unwrap();
        let o = time_average_oracle(&m2).unwrap();
        assert!(linalg::max_abs_diff(o.matrix(), expect.matrix()) < 1e-12);
    }

    #[test]
    fn decoupled_formula_matches_sector_oracle() {
        let base = catalog_model("DECOUPLED", 0).unwrap();
        let mut outs = Vec::new();
        for w in [0.3, 0.5, 0.7] {
            let m = base
                .clone()
                .with_initial(InitialStateSpec::Product(sector_weighted_state(&base, w).unwrap()))
                .unwrap();
            let f = long_time_formula(&m, default_eps_ref(&m)).unwrap();
            assert!(f.degeneracy >= 2);
            let o = time_average_oracle(&m).unwrap();
            assert!(linalg::max_abs_diff(f.rho_inf.matrix(), o.matrix()) < 1e-6);
            outs.push(f.rho_inf);
        }
        // affine in w: middle point is the average of the outer ones
        let mid = (outs[0].matrix() + outs[2].matrix()) * C64::new(0.5, 0.0);
        assert!(linalg::max_abs_diff(&mid, outs[1].matrix()) < 1e-6);
    }

    #[test]
    fn uncoupled_timescale_is_infinite() {
        let m = catalog_model("QB3", 0).unwrap().with_coupling_scaled(0.0).unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        let t = timescale_diagnostics(&sys, 0.05).unwrap();
        assert!(matches!(t, TimescaleDiagnostics::Uncoupled { .. }));
        assert_eq!(t.tau(), f64::INFINITY);
    }

    #[test]
    fn coupling_scaling_of_timescales() {
        let base = catalog_model("QB3", 0).unwrap();
        let s1 = EffectiveSystem::new(&base).unwrap();
        let s2 = EffectiveSystem::new(&base.with_coupling_scaled(2.0).unwrap()).unwrap();
        let (a, b) = match (
            timescale_diagnostics(&s1, 0.02).unwrap(),
            timescale_diagnostics(&s2, 0.02).unwrap(),
        ) {
            (TimescaleDiagnostics::Coupled { t_pq: a, .. }, TimescaleDiagnostics::Coupled { t_pq: b, .. }) => (a, b),
            _ => panic!("expected coupled"),
        };
        assert!((a / b - 2.0).abs() < 1e-10);
    }

    #[test]
    fn zero_coupling_commutator() {
        let m = qubit(0.5);
        let eval = eval_of(&m, 0.3);
        let ls = commutator_superop(m.h_sys()).unwrap();
        assert!(linalg::max_abs_diff(&eval.l_eff, ls.matrix()) < 1e-12);
    }
}
