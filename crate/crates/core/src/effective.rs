//! Effective Liouville `L(z)`, the correlated initial shift and `ρ(z)`.
//!
//! All propagation inside Q-space happens in the orthonormal Q-image basis
//! `B`: with `M = B† L_Q B`,
//!
//! ```text
//! [z - L_Q]⁻¹ y = B (z - M)⁻¹ B† y          (y ∈ image Q)
//! L(z)          = R L E + (R L B) (z - M)⁻¹ (B† Q L E)
//! Δρ₀(z)        = (R L B) (z - M)⁻¹ B† Δ
//! ```
//!
//! where `E` embeds system operators as `ρ_S ⊗ ρ_E` and `R` is the partial
//! trace. The full-space `[z - L_Q]⁻¹` is never formed: on P-space it
//! degenerates to `1/z`.

use alloc::vec::Vec;

use crate::ensemble;
use crate::error::{Error, Result};
use crate::linalg::{self, ConditionedLu, I};
use crate::model::CompositeModel;
use crate::opspace::{unvec, vec, Operator};
use crate::projection::{
    build_projector_pair, decompose_liouville, q_image_basis, vec_identity, BlockDecomposition,
    ProjectorPair, QImageBasis,
};
use crate::{CMatrix, CVector, C64};

/// Lowest admissible `Im z`.
pub const EPS_MIN: f64 = 1e-9;

/// Condition estimate above which a resolvent solve is treated as hitting a pole.
pub const NEAR_POLE_CONDITION: f64 = 1e12;

/// A frequency strictly in the upper half plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexFrequency(C64);

impl ComplexFrequency {
    pub fn new(z: C64) -> Result<Self> {
        Self::with_floor(z, EPS_MIN)
    }

    pub fn with_floor(z: C64, min_im: f64) -> Result<Self> {
        if !(z.im >= min_im) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::BelowRealAxis { z, min_im });
        }
        Ok(Self(z))
    }

    /// `ω + iε`.
    pub fn from_parts(omega: f64, eps: f64) -> Result<Self> {
        Self::new(C64::new(omega, eps))
    }

    pub fn value(self) -> C64 {
        self.0
    }
}

/// `L(z)` in system coordinates (`d_S² x d_S²`).
#[derive(Clone, Debug)]
pub struct EffectiveLiouvilleEval {
    pub z: ComplexFrequency,
    pub l_eff: CMatrix,
    /// 1-norm condition number of the restricted Q-space solve.
    pub condition_report: f64,
}

impl EffectiveLiouvilleEval {
    /// `max |vec(1)† L(z)| / max|L(z)|` (zero when `L(z) = 0`).
    pub fn trace_row_defect(&self) -> f64 {
        let d = libm::round(libm::sqrt(self.l_eff.nrows() as f64)) as usize;
        let row = vec_identity(d).transpose() * &self.l_eff;
        let scale = linalg::max_abs(&self.l_eff);
        let defect = row.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            defect / scale
        } else {
            defect
        }
    }
}

/// `ρ(z)` (as a `d_S x d_S` matrix).
#[derive(Clone, Debug)]
pub struct FrequencyState {
    pub z: ComplexFrequency,
    pub rho_z: Operator,
    pub condition_report: f64,
}

impl FrequencyState {
    /// `|Tr ρ(z) - i/z|`.
    pub fn trace_defect(&self) -> f64 {
        (self.rho_z.trace() - I / self.z.value()).norm()
    }
}

/// Residuals of the projected-resolvent identities at one `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolventResiduals {
    pub z: C64,
    /// `|R [z - L_tot]⁻¹ E - [z - L(z)]⁻¹|`, relative.
    pub r66: f64,
    /// `|R [z - L_tot]⁻¹ q - [z - L(z)]⁻¹ L_PQ [z - L_Q]⁻¹ q|` for a random Q-space `q`, relative.
    pub r67: f64,
    pub condition_full: f64,
    pub condition_q: f64,
}

impl ResolventResiduals {
    pub fn max(&self) -> f64 {
        self.r66.max(self.r67)
    }
}

/// Factorization of `z - M` on the Q-image.
pub struct QResolvent {
    z: ComplexFrequency,
    lu: ConditionedLu,
}

impl QResolvent {
    pub fn condition(&self) -> f64 {
        self.lu.condition()
    }

    fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.lu.solve(rhs).ok_or(Error::NearPole {
            z: self.z.value(),
            condition: f64::INFINITY,
        })
    }
}

fn check_condition(lu: &ConditionedLu, z: ComplexFrequency) -> Result<()> {
    let c = lu.condition();
    if !(c <= NEAR_POLE_CONDITION) {
        return Err(Error::NearPole {
            z: z.value(),
            condition: c,
        });
    }
    Ok(())
}

/// Projector pair, Liouville blocks, Q-image basis and the restricted
/// matrices derived from them. Immutable once built; evaluations at different
/// `z` are independent.
#[derive(Clone, Debug)]
pub struct EffectiveSystem {
    pq: ProjectorPair,
    bd: BlockDecomposition,
    qb: QImageBasis,
    l_p_res: CMatrix,
    a_pq: CMatrix,
    a_qp: CMatrix,
    m_q: CMatrix,
}

impl EffectiveSystem {
    pub fn new(model: &CompositeModel) -> Result<Self> {
        let pq = build_projector_pair(model.rho_env(), model.d_sys(), model.d_env())?;
        let bd = decompose_liouville(&model.build_total_liouville()?, &pq)?;
        let qb = q_image_basis(&pq)?;
        Ok(Self::from_parts(pq, bd, qb))
    }

    pub fn from_parts(pq: ProjectorPair, bd: BlockDecomposition, qb: QImageBasis) -> Self {
        let b = qb.matrix();
        let l_p_res = bd.l_p_restricted();
        let a_pq = &bd.restrict * &bd.l_tot * b;
        let a_qp = b.adjoint() * (&bd.l_qp * &bd.embed);
        let m_q = b.adjoint() * &bd.l_q * b;
        Self {
            pq,
            bd,
            qb,
            l_p_res,
            a_pq,
            a_qp,
            m_q,
        }
    }

    pub fn projectors(&self) -> &ProjectorPair {
        &self.pq
    }
    pub fn blocks(&self) -> &BlockDecomposition {
        &self.bd
    }
    pub fn q_basis(&self) -> &QImageBasis {
        &self.qb
    }
    pub fn d_sys(&self) -> usize {
        self.bd.d_sys
    }

    /// `L_P` in system coordinates.
    pub fn l_p_restricted(&self) -> &CMatrix {
        &self.l_p_res
    }
    /// `R L_tot B`: the coupling block `L_PQ` in restricted coordinates.
    pub fn l_pq_restricted(&self) -> &CMatrix {
        &self.a_pq
    }
    /// `B† L_QP E`.
    pub fn l_qp_restricted(&self) -> &CMatrix {
        &self.a_qp
    }
    /// `B† L_Q B`.
    pub fn l_q_restricted(&self) -> &CMatrix {
        &self.m_q
    }

    pub fn q_resolvent(&self, z: ComplexFrequency) -> Result<QResolvent> {
        let lu = ConditionedLu::new(linalg::shifted(&self.m_q, z.value()));
        check_condition(&lu, z)?;
        Ok(QResolvent { z, lu })
    }

    /// `x ∈ image(Q)` with `(z - L_Q) x = Q y`.
    pub fn q_propagate(&self, z: ComplexFrequency, y: &CVector) -> Result<CVector> {
        let qr = self.q_resolvent(z)?;
        self.q_propagate_with(&qr, y)
    }

    fn q_propagate_with(&self, qr: &QResolvent, y: &CVector) -> Result<CVector> {
        let qy = self.pq.q().matrix() * y;
        let c = CMatrix::from_column_slice(self.qb.len(), 1, self.qb.coordinates(&qy).as_slice());
        let sol = qr.solve(&c)?;
        Ok(self.qb.matrix() * sol.column(0))
    }

    fn l_eff_with(&self, qr: &QResolvent) -> Result<CMatrix> {
        let memory = &self.a_pq * qr.solve(&self.a_qp)?;
        Ok(&self.l_p_res + memory)
    }

    fn shift_with(&self, qr: &QResolvent, delta: &CVector) -> Result<CVector> {
        let qd = self.pq.q().matrix() * delta;
        let c = CMatrix::from_column_slice(self.qb.len(), 1, self.qb.coordinates(&qd).as_slice());
        let sol = qr.solve(&c)?;
        Ok(&self.a_pq * sol.column(0))
    }

    /// `L(z) = L_P + L_PQ [z - L_Q]⁻¹ L_QP` in system coordinates.
    pub fn effective_liouville(&self, z: ComplexFrequency) -> Result<EffectiveLiouvilleEval> {
        let qr = self.q_resolvent(z)?;
        Ok(EffectiveLiouvilleEval {
            z,
            l_eff: self.l_eff_with(&qr)?,
            condition_report: qr.condition(),
        })
    }

    /// Memory part `L(z) - L_P`.
    pub fn memory_kernel(&self, z: ComplexFrequency) -> Result<CMatrix> {
        let qr = self.q_resolvent(z)?;
        Ok(&self.a_pq * qr.solve(&self.a_qp)?)
    }

    /// `Δρ₀(z) = Tr_E L_tot [z - L_Q]⁻¹ Δ` for a Q-space vector `Δ`.
    pub fn initial_shift(&self, z: ComplexFrequency, delta_corr: &CVector) -> Result<Operator> {
        self.check_big(delta_corr)?;
        let qr = self.q_resolvent(z)?;
        unvec(&self.shift_with(&qr, delta_corr)?, self.d_sys())
    }

    /// `ρ(z) = i [z - L(z)]⁻¹ vec(ρ_0 + shift)`.
    pub fn rho_z(
        &self,
        eval: &EffectiveLiouvilleEval,
        rho_0: &Operator,
        shift: &Operator,
    ) -> Result<FrequencyState> {
        let d = self.d_sys();
        if rho_0.dim() != d || shift.dim() != d || eval.l_eff.nrows() != d * d {
            return Err(Error::DimensionMismatch {
                context: "rho(z) inputs",
                expected: d,
                found: rho_0.dim(),
            });
        }
        let lu = ConditionedLu::new(linalg::shifted(&eval.l_eff, eval.z.value()));
        check_condition(&lu, eval.z)?;
        let rhs = vec(&rho_0.add(shift)?);
        let sol = lu.solve_vec(&rhs).ok_or(Error::NearPole {
            z: eval.z.value(),
            condition: f64::INFINITY,
        })?;
        Ok(FrequencyState {
            z: eval.z,
            rho_z: unvec(&(sol * I), d)?,
            condition_report: lu.condition().max(eval.condition_report),
        })
    }

    /// Complete pipeline at one frequency with a single Q-space factorization.
    pub fn frequency_state(
        &self,
        z: ComplexFrequency,
        rho_0: &Operator,
        delta_corr: &CVector,
    ) -> Result<FrequencyState> {
        self.check_big(delta_corr)?;
        let qr = self.q_resolvent(z)?;
        let eval = EffectiveLiouvilleEval {
            z,
            l_eff: self.l_eff_with(&qr)?,
            condition_report: qr.condition(),
        };
        let shift = unvec(&self.shift_with(&qr, delta_corr)?, self.d_sys())?;
        self.rho_z(&eval, rho_0, &shift)
    }

    fn check_big(&self, v: &CVector) -> Result<()> {
        if v.len() != self.bd.big_dim() {
            return Err(Error::DimensionMismatch {
                context: "Liouville-space vector",
                expected: self.bd.big_dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    // --- full-space references --------------------------------------------

    /// `[z - L_tot]⁻¹` on the full Liouville space.
    pub fn full_resolvent(&self, z: ComplexFrequency) -> Result<(CMatrix, f64)> {
        let lu = ConditionedLu::new(linalg::shifted(&self.bd.l_tot, z.value()));
        check_condition(&lu, z)?;
        let inv = lu.inverse().ok_or(Error::NearPole {
            z: z.value(),
            condition: f64::INFINITY,
        })?;
        Ok((inv, lu.condition()))
    }

    /// `Tr_E (i [z - L_tot]⁻¹ ρ_tot0)` straight from the closed-system resolvent.
    pub fn full_space_rho_z(&self, z: ComplexFrequency, rho_tot0: &Operator) -> Result<Operator> {
        let lu = ConditionedLu::new(linalg::shifted(&self.bd.l_tot, z.value()));
        check_condition(&lu, z)?;
        let x = lu.solve_vec(&vec(rho_tot0)).ok_or(Error::NearPole {
            z: z.value(),
            condition: f64::INFINITY,
        })?;
        unvec(&(&self.bd.restrict * x * I), self.d_sys())
    }

    /// Residuals of `P[z - L]⁻¹P = [z - L(z)]⁻¹` and
    /// `P[z - L]⁻¹Q = [z - L(z)]⁻¹ L_PQ [z - L_Q]⁻¹`, the latter on a seeded
    /// random Q-space probe.
    pub fn verify_resolvent_identities(
        &self,
        z: ComplexFrequency,
        probe_seed: u64,
    ) -> Result<ResolventResiduals> {
        let (g, condition_full) = self.full_resolvent(z)?;
        let lhs66 = &self.bd.restrict * &g * &self.bd.embed;
        let qr = self.q_resolvent(z)?;
        let l_eff = self.l_eff_with(&qr)?;
        let lu_eff = ConditionedLu::new(linalg::shifted(&l_eff, z.value()));
        check_condition(&lu_eff, z)?;
        let rhs66 = lu_eff.inverse().ok_or(Error::NearPole {
            z: z.value(),
            condition: f64::INFINITY,
        })?;
        let r66 = relative(&lhs66, &rhs66);

        let big = self.bd.big_dim();
        let raw = ensemble::gaussian_matrix(big, 1, &mut ensemble::rng(probe_seed));
        let probe = self.pq.q().matrix() * raw;
        let lhs67 = &self.bd.restrict * &g * &probe;
        let c = self.qb.matrix().adjoint() * &probe;
        let rhs67 = &rhs66 * (&self.a_pq * qr.solve(&c)?);
        let r67 = relative(&lhs67, &rhs67);
        Ok(ResolventResiduals {
            z: z.value(),
            r66,
            r67,
            condition_full,
            condition_q: qr.condition(),
        })
    }

    /// `Tr_E L_tot^k ρ_tot0` for `k = 0..count`: the coefficients of the
    /// large-`|z|` expansion `ρ(z) = i Σ_k M_k / z^{k+1}`.
    pub fn high_frequency_moments(&self, rho_tot0: &Operator, count: usize) -> Result<Vec<Operator>> {
        let mut v = vec(rho_tot0);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(unvec(&(&self.bd.restrict * &v), self.d_sys())?);
            v = &self.bd.l_tot * v;
        }
        Ok(out)
    }
}

fn relative(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = linalg::max_abs(a).max(linalg::max_abs(b));
    let diff = linalg::max_abs_diff(a, b);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// `ρ_0 + Δρ₀(z)` for convenience when inspecting the shifted initial state.
pub fn shifted_initial(rho_0: &Operator, shift: &Operator) -> Result<Operator> {
    rho_0.add(shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bell_state, catalog_model, default_rho_sys, Coupling, InitialStateSpec};
    use crate::opspace::{commutator_superop, DensityOperator};
    use crate::projection::split_initial;
    use crate::testutil::random_matrix;

    fn z(re: f64, im: f64) -> ComplexFrequency {
        ComplexFrequency::new(C64::new(re, im)).unwrap()
    }

    fn zero_model() -> CompositeModel {
        CompositeModel::new(
            "zero",
            Operator::zeros(2),
            Operator::zeros(2),
            Vec::new(),
            DensityOperator::maximally_mixed(2),
            InitialStateSpec::Product(default_rho_sys()),
        )
        .unwrap()
    }

    #[test]
    fn frequency_below_floor_rejected() {
        assert!(ComplexFrequency::new(C64::new(1.0, 0.0)).is_err());
        assert!(ComplexFrequency::new(C64::new(1.0, -0.1)).is_err());
        assert!(ComplexFrequency::new(C64::new(1.0, 1e-9)).is_ok());
    }

    #[test]
    fn q_propagate_zero_input_and_zero_hamiltonian() {
        let sys = EffectiveSystem::new(&zero_model()).unwrap();
        let zz = z(0.4, 0.2);
        let zero = CVector::zeros(16);
        assert_eq!(sys.q_propagate(zz, &zero).unwrap(), zero);
        let raw = random_matrix(16, 1, 5).column(0).into_owned();
        let y = sys.projectors().q().matrix() * raw;
        let x = sys.q_propagate(zz, &y).unwrap();
        let expect = &y / zz.value();
        assert!(linalg::max_abs_vec(&(x - expect)) < 1e-14);
    }

    #[test]
    fn q_propagate_matches_full_space_solve() {
        let m = catalog_model("QB3", 0).unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        let zz = z(0.3, 0.01);
        let raw = random_matrix(36, 1, 6).column(0).into_owned();
        let y = sys.projectors().q().matrix() * raw;
        let x = sys.q_propagate(zz, &y).unwrap();
        // full-space dense solve of (z - L_Q) x = y; the Q-image solution is
        // unique because y ∈ image(Q) and z ≠ 0
        let full = linalg::shifted(&sys.blocks().l_q, zz.value()).lu().solve(&y).unwrap();
        let res = linalg::shifted(&sys.blocks().l_q, zz.value()) * &x - &y;
        assert!(res.norm() <= 1e-9 * y.norm());
        assert!((x - full).norm() <= 1e-9 * y.norm());
    }

    #[test]
    fn zero_coupling_reduces_to_system_liouville() {
        let m = catalog_model("QB3", 0).unwrap().with_coupling_scaled(0.0).unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        let l_s = commutator_superop(m.h_sys()).unwrap();
        for zz in [z(0.5, 0.1), z(-2.0, 0.03), z(0.0, 1.0)] {
            let eval = sys.effective_liouville(zz).unwrap();
            assert!(linalg::max_abs_diff(&eval.l_eff, l_s.matrix()) <= 1e-11);
        }
    }

    #[test]
    fn resolvent_identity_qb3() {
        let m = catalog_model("QB3", 0).unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        let r = sys.verify_resolvent_identities(z(2.0, 0.1), 1).unwrap();
        assert!(r.r66 <= 1e-9, "{r:?}");
        assert!(r.r67 <= 1e-9, "{r:?}");
    }

    #[test]
    fn left_zero_mode_everywhere() {
        let m = catalog_model("QB3", 0).unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        for k in 0..8 {
            let zz = z(-2.0 + 0.6 * k as f64, 0.02 + 0.1 * k as f64);
            assert!(sys.effective_liouville(zz).unwrap().trace_row_defect() <= 1e-10);
        }
    }

    #[test]
    fn shift_vanishes_for_product_state_and_is_traceless() {
        let m = catalog_model("QB3", 0).unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        let (_, delta) = split_initial(&m.build_initial_total().unwrap(), sys.projectors()).unwrap();
        let s = sys.initial_shift(z(0.7, 0.05), &delta).unwrap();
        assert!(s.max_abs() <= 1e-12);

        let corr = m.with_initial(InitialStateSpec::FullMatrix(bell_state(2, 3).unwrap())).unwrap();
        let (_, delta) = split_initial(&corr.build_initial_total().unwrap(), sys.projectors()).unwrap();
        let s = sys.initial_shift(z(0.7, 0.05), &delta).unwrap();
        assert!(s.trace().norm() <= 1e-10);
        assert!(s.max_abs() > 1e-3);
        // linear in delta
        let s2 = sys.initial_shift(z(0.7, 0.05), &(&delta * C64::new(2.0, -1.0))).unwrap();
        assert!(linalg::max_abs_diff(s2.matrix(), &(s.matrix() * C64::new(2.0, -1.0))) < 1e-12);
    }

    #[test]
    fn bell_shift_matches_full_resolvent_rearrangement() {
        // d_S = d_E = 2 fixture with a non-trivial coupling
        let h_env = Operator::from_real_diagonal(&[0.0, 0.8]);
        let m = CompositeModel::new(
            "bell22",
            crate::model::pauli_z().scale(0.5),
            h_env.clone(),
            alloc::vec![Coupling {
                sys: crate::model::pauli_x(),
                env: crate::model::pauli_x().scale(0.3),
            }],
            DensityOperator::gibbs(&h_env, 1.0).unwrap(),
            InitialStateSpec::FullMatrix(bell_state(2, 2).unwrap()),
        )
        .unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        let zz = z(1.0, 0.05);
        let rho_tot = m.build_initial_total().unwrap();
        let (_, delta) = split_initial(&rho_tot, sys.projectors()).unwrap();
        let shift = sys.initial_shift(zz, &delta).unwrap();
        // [z - L(z)] · restrict [z - L_tot]⁻¹ Q vec(ρ_tot0)
        let (g, _) = sys.full_resolvent(zz).unwrap();
        let q_part = sys.projectors().q().matrix() * vec(rho_tot.operator());
        let pgq = &sys.blocks().restrict * g * q_part;
        let eval = sys.effective_liouville(zz).unwrap();
        let oracle = linalg::shifted(&eval.l_eff, zz.value()) * pgq;
        let got = vec(&shift);
        assert!(linalg::max_abs_vec(&(got - oracle)) <= 1e-9);
    }

    #[test]
    fn rho_z_of_zero_hamiltonian() {
        let sys = EffectiveSystem::new(&zero_model()).unwrap();
        let zz = z(0.3, 0.2);
        let rho0 = default_rho_sys().into_operator();
        let st = sys.frequency_state(zz, &rho0, &CVector::zeros(16)).unwrap();
        let expect = rho0.matrix() * (I / zz.value());
        assert!(linalg::max_abs_diff(st.rho_z.matrix(), &expect) < 1e-14);
    }

    #[test]
    fn probability_conservation_qb3() {
        let m = catalog_model("QB3", 0).unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        let rho0 = m.initial_reduced().unwrap();
        let delta = CVector::zeros(36);
        for k in 0..10 {
            let zz = z(-3.0 + 0.65 * k as f64, 0.03 + 0.05 * k as f64);
            let st = sys.frequency_state(zz, &rho0, &delta).unwrap();
            assert!(st.trace_defect() <= 1e-9, "k={k} {}", st.trace_defect());
        }
    }

    #[test]
    fn correlated_rho_z_matches_full_space() {
        let m = catalog_model("QB3", 0)
            .unwrap()
            .with_initial(InitialStateSpec::FullMatrix(bell_state(2, 3).unwrap()))
            .unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        let rho_tot = m.build_initial_total().unwrap();
        let (rho0, delta) = split_initial(&rho_tot, sys.projectors()).unwrap();
        for zz in [z(0.2, 0.05), z(-1.1, 0.3), z(1.7, 0.02)] {
            let st = sys.frequency_state(zz, &rho0, &delta).unwrap();
            let oracle = sys.full_space_rho_z(zz, rho_tot.operator()).unwrap();
            assert!(linalg::max_abs_diff(st.rho_z.matrix(), oracle.matrix()) <= 1e-9);
        }
    }

    #[test]
    fn memory_term_scales_quadratically() {
        let base = catalog_model("QB3", 0).unwrap();
        let zz = z(0.4, 0.2);
        let norms: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&g| {
                let sys = EffectiveSystem::new(&base.with_coupling_scaled(g).unwrap()).unwrap();
                linalg::max_abs(&sys.memory_kernel(zz).unwrap())
            })
            .collect();
        for w in norms.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 100.0).abs() < 1.0, "ratio {ratio}");
        }
    }

    #[test]
    fn near_pole_is_reported() {
        // a stiff isolated qubit probed right next to its Bohr frequency
        let m = CompositeModel::new(
            "stiff",
            crate::model::pauli_z().scale(1e4),
            Operator::zeros(2),
            Vec::new(),
            DensityOperator::maximally_mixed(2),
            InitialStateSpec::Product(default_rho_sys()),
        )
        .unwrap();
        let sys = EffectiveSystem::new(&m).unwrap();
        let zz = ComplexFrequency::new(C64::new(2e4, 1e-9)).unwrap();
        assert!(matches!(sys.full_resolvent(zz), Err(Error::NearPole { .. })));
        let rho0 = m.initial_reduced().unwrap();
        let st = sys.frequency_state(zz, &rho0, &CVector::zeros(16));
        assert!(matches!(st, Err(Error::NearPole { .. })));
    }
}
