//! Composite system ⊗ environment models and the fixture catalog.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ensemble;
use crate::error::{Error, Result};
use crate::linalg::{self, ZERO};
use crate::opspace::{
    commutator_superop, embed_with_env, partial_trace_env, DensityOperator, Operator,
    SuperOperator,
};
use crate::{CMatrix, CVector, C64};

/// One interaction term `S ⊗ E`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub sys: Operator,
    pub env: Operator,
}

/// How the total initial state is specified.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialStateSpec {
    /// `ρ_0 ⊗ ρ_E`.
    Product(DensityOperator),
    /// An arbitrary total density operator.
    FullMatrix(DensityOperator),
    /// `ρ_0 ⊗ ρ_E + Δ` with `Δ` in Q-space.
    ProductPlusCorrelation { rho_sys: DensityOperator, delta: Operator },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeModel {
    name: String,
    d_sys: usize,
    d_env: usize,
    h_sys: Operator,
    h_env: Operator,
    couplings: Vec<Coupling>,
    rho_env: DensityOperator,
    initial: InitialStateSpec,
    conserved: Option<Operator>,
}

fn check_dim(op: &Operator, expected: usize, context: &'static str) -> Result<()> {
    if op.dim() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found: op.dim(),
        });
    }
    Ok(())
}

impl CompositeModel {
    /// Validates dimensions, hermiticity of every Hamiltonian piece and the
    /// initial state.
    pub fn new(
        name: impl Into<String>,
        h_sys: Operator,
        h_env: Operator,
        couplings: Vec<Coupling>,
        rho_env: DensityOperator,
        initial: InitialStateSpec,
    ) -> Result<Self> {
        let d_sys = h_sys.dim();
        let d_env = h_env.dim();
        if d_sys == 0 || d_env == 0 {
            return Err(Error::InvalidParameter("dimensions must be positive".to_string()));
        }
        let h_sys = h_sys.require_hermitian("system Hamiltonian")?;
        let h_env = h_env.require_hermitian("environment Hamiltonian")?;
        check_dim(rho_env.operator(), d_env, "environment state")?;
        let mut checked = Vec::with_capacity(couplings.len());
        for c in couplings {
            check_dim(&c.sys, d_sys, "coupling system operator")?;
            check_dim(&c.env, d_env, "coupling environment operator")?;
            checked.push(Coupling {
                sys: c.sys.require_hermitian("coupling system operator")?,
                env: c.env.require_hermitian("coupling environment operator")?,
            });
        }
        let model = Self {
            name: name.into(),
            d_sys,
            d_env,
            h_sys,
            h_env,
            couplings: checked,
            rho_env,
            initial,
            conserved: None,
        };
        model.build_initial_total()?;
        Ok(model)
    }

    /// Same model with another initial state.
    pub fn with_initial(mut self, initial: InitialStateSpec) -> Result<Self> {
        self.initial = initial;
        self.build_initial_total()?;
        Ok(self)
    }

    /// Declares a system projector `Π` such that `Π ⊗ 1` commutes with `H_tot`.
    pub fn with_conserved_projector(mut self, pi: Operator) -> Result<Self> {
        check_dim(&pi, self.d_sys, "conserved projector")?;
        let full = pi.kron(&Operator::identity(self.d_env));
        let defect = linalg::max_abs(self.build_total_hamiltonian().commutator(&full)?.matrix());
        if defect > 1e-12 * self.build_total_hamiltonian().max_abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "declared projector is not conserved (|[H, Π]| = {defect:.3e})"
            )));
        }
        self.conserved = Some(pi);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn d_sys(&self) -> usize {
        self.d_sys
    }
    pub fn d_env(&self) -> usize {
        self.d_env
    }
    pub fn d_total(&self) -> usize {
        self.d_sys * self.d_env
    }
    pub fn h_sys(&self) -> &Operator {
        &self.h_sys
    }
    pub fn h_env(&self) -> &Operator {
        &self.h_env
    }
    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }
    pub fn rho_env(&self) -> &DensityOperator {
        &self.rho_env
    }
    pub fn initial(&self) -> &InitialStateSpec {
        &self.initial
    }
    pub fn conserved_projector(&self) -> Option<&Operator> {
        self.conserved.as_ref()
    }

    /// `H_S ⊗ 1 + 1 ⊗ H_E + Σ_k S_k ⊗ E_k`.
    pub fn build_total_hamiltonian(&self) -> Operator {
        let id_s = Operator::identity(self.d_sys);
        let id_e = Operator::identity(self.d_env);
        let mut m = self.h_sys.kron(&id_e).into_matrix() + id_s.kron(&self.h_env).into_matrix();
        for c in &self.couplings {
            m += c.sys.kron(&c.env).into_matrix();
        }
        // symmetrize away roundoff so downstream checks see an exactly hermitian matrix
        Operator::new(m).expect("square").hermitized()
    }

    pub fn build_total_liouville(&self) -> Result<SuperOperator> {
        commutator_superop(&self.build_total_hamiltonian())
    }

    /// The validated total initial state.
    pub fn build_initial_total(&self) -> Result<DensityOperator> {
        match &self.initial {
            InitialStateSpec::Product(rho0) => {
                check_dim(rho0.operator(), self.d_sys, "initial system state")?;
                DensityOperator::new(embed_with_env(rho0.operator(), &self.rho_env))
            }
            InitialStateSpec::FullMatrix(rho) => {
                check_dim(rho.operator(), self.d_total(), "initial total state")?;
                Ok(rho.clone())
            }
            InitialStateSpec::ProductPlusCorrelation { rho_sys, delta } => {
                check_dim(rho_sys.operator(), self.d_sys, "initial system state")?;
                check_dim(delta, self.d_total(), "correlation operator")?;
                let defect = delta.hermitian_defect();
                if defect > 1e-12 * delta.max_abs().max(1.0) {
                    return Err(Error::NotHermitian {
                        what: "correlation operator",
                        defect,
                    });
                }
                let tr = delta.trace().norm();
                if tr > 1e-12 {
                    return Err(Error::NotTraceless { trace: tr });
                }
                let p_delta = embed_with_env(
                    &partial_trace_env(delta, self.d_sys, self.d_env)?,
                    &self.rho_env,
                );
                let residual = p_delta.max_abs();
                if residual > 1e-10 {
                    return Err(Error::NotInQSpace { residual });
                }
                let total = embed_with_env(rho_sys.operator(), &self.rho_env).add(delta)?;
                DensityOperator::new(total.hermitized())
            }
        }
    }

    /// Reduced initial state `Tr_E ρ_tot0`.
    pub fn initial_reduced(&self) -> Result<Operator> {
        partial_trace_env(self.build_initial_total()?.operator(), self.d_sys, self.d_env)
    }

    pub fn eigen_cache(&self) -> Result<EigenCache> {
        EigenCache::new(&self.build_total_hamiltonian())
    }

    /// Spectral radius of `L_tot`, i.e. the spread of total energies, or 1 when
    /// the Hamiltonian is zero.
    pub fn energy_scale(&self) -> f64 {
        let r = self
            .eigen_cache()
            .map(|c| c.spectral_range())
            .unwrap_or(0.0);
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    /// Copy of the model with every coupling scaled by `s`.
    pub fn with_coupling_scaled(&self, s: f64) -> Result<Self> {
        let mut m = self.clone();
        for c in &mut m.couplings {
            c.env = c.env.scale(s);
        }
        m.build_initial_total()?;
        Ok(m)
    }
}

/// Eigendecomposition of `H_tot` with derived Bohr frequencies.
#[derive(Clone, Debug)]
pub struct EigenCache {
    energies: Vec<f64>,
    vectors: CMatrix,
    residual: f64,
}

impl EigenCache {
    pub fn new(h: &Operator) -> Result<Self> {
        let (energies, vectors) = linalg::hermitian_eigen(h.matrix())?;
        let d = energies.len();
        let diag = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(energies[i], 0.0)
            } else {
                ZERO
            }
        });
        let rec = &vectors * diag * vectors.adjoint();
        let residual = linalg::max_abs_diff(&rec, h.matrix());
        if residual > 1e-10 * h.max_abs().max(f64::MIN_POSITIVE) && residual > 1e-14 {
            return Err(Error::Eigensolver("H_tot reconstruction residual too large"));
        }
        Ok(Self {
            energies,
            vectors,
            residual,
        })
    }

    /// Ascending energies `ε_α`.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Eigenvector matrix `V` with `H = V diag(ε) V†`.
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `ω_αβ = ε_α - ε_β`.
    pub fn bohr(&self, alpha: usize, beta: usize) -> f64 {
        self.energies[alpha] - self.energies[beta]
    }

    /// All `d²` Bohr frequencies in row-major `(α, β)` order.
    pub fn bohr_frequencies(&self) -> Vec<f64> {
        let d = self.energies.len();
        (0..d * d).map(|k| self.bohr(k / d, k % d)).collect()
    }

    pub fn spectral_range(&self) -> f64 {
        match (self.energies.first(), self.energies.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    pub fn min_gap(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// `V† X V`.
    pub fn to_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * x * &self.vectors
    }

    /// `V X V†`.
    pub fn from_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        &self.vectors * x * self.vectors.adjoint()
    }
}

// ---------------------------------------------------------------------------
// fixtures

pub fn pauli_x() -> Operator {
    let one = C64::new(1.0, 0.0);
    Operator::from_row_slice(2, &[ZERO, one, one, ZERO]).expect("2x2")
}

pub fn pauli_y() -> Operator {
    Operator::from_row_slice(2, &[ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]).expect("2x2")
}

pub fn pauli_z() -> Operator {
    Operator::from_real_diagonal(&[1.0, -1.0])
}

/// Environment operator of the QB3 coupling, row-major.
pub const QB3_V: [[(f64, f64); 3]; 3] = [
    [(0.4, 0.0), (0.6, 0.0), (0.2, -0.3)],
    [(0.6, 0.0), (-0.3, 0.0), (0.5, 0.1)],
    [(0.2, 0.3), (0.5, -0.1), (0.1, 0.0)],
];

/// Environment level energies of QB3.
pub const QB3_ENV_LEVELS: [f64; 3] = [0.0, 0.7, 1.3];

/// Coupling prefactor of QB3 (`g σ_x ⊗ V`).
pub const QB3_COUPLING: f64 = 0.2;

/// Scale of the Gaussian environment Hamiltonian in the random fixtures.
pub const GENERIC_ENV_SCALE: f64 = 0.5;

/// Scale of the Gaussian coupling operators in the random fixtures.
pub const GENERIC_COUPLING_SCALE: f64 = 0.3;

/// Default environment dimension of GENERIC.
pub const GENERIC_DEFAULT_D_ENV: usize = 4;

pub const CATALOG_NAMES: [&str; 4] = ["QB3", "GENERIC", "DEGENERATE", "DECOUPLED"];

fn qb3_v() -> Operator {
    let e: Vec<C64> = QB3_V.iter().flatten().map(|&(re, im)| C64::new(re, im)).collect();
    Operator::from_row_slice(3, &e).expect("3x3")
}

/// Default initial system state of the catalog qubit fixtures.
pub fn default_rho_sys() -> DensityOperator {
    let m = Operator::from_row_slice(
        2,
        &[
            C64::new(0.7, 0.0),
            C64::new(0.3, -0.2),
            C64::new(0.3, 0.2),
            C64::new(0.3, 0.0),
        ],
    )
    .expect("2x2");
    DensityOperator::new(m).expect("valid fixture state")
}

/// Builds a catalog fixture with default options.
pub fn catalog_model(name: &str, seed: u64) -> Result<CompositeModel> {
    catalog_model_with(name, seed, None)
}

/// Builds a catalog fixture; `d_env` is honored by GENERIC only.
///
/// * `QB3`: qubit `H_S = σ_z/2` coupled by `0.2 σ_x ⊗ V` ([`QB3_V`]) to a
///   three-level environment `diag(0, 0.7, 1.3)` in its `β = 1` Gibbs state.
/// * `GENERIC`: qubit `H_S = σ_z/2`, Gaussian `H_E` and couplings
///   `σ_x ⊗ E_1 + σ_z ⊗ E_2`, Gibbs `ρ_E`; redrawn until `H_tot` has no
///   degeneracies.
/// * `DECOUPLED`: pure dephasing, `σ_z ⊗ E`. The system populations are
///   conserved, so the two system levels are dynamically disconnected sectors.
/// * `DEGENERATE`: qutrit whose level `|2⟩` is a conserved sector while the
///   levels `|0⟩, |1⟩` exchange energy with the environment.
pub fn catalog_model_with(name: &str, seed: u64, d_env: Option<usize>) -> Result<CompositeModel> {
    match name {
        "QB3" => qb3(),
        "GENERIC" => generic(seed, d_env.unwrap_or(GENERIC_DEFAULT_D_ENV)),
        "DECOUPLED" => decoupled(seed),
        "DEGENERATE" => degenerate(seed),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

fn qb3() -> Result<CompositeModel> {
    let h_env = Operator::from_real_diagonal(&QB3_ENV_LEVELS);
    let rho_env = DensityOperator::gibbs(&h_env, 1.0)?;
    CompositeModel::new(
        "QB3",
        pauli_z().scale(0.5),
        h_env,
        alloc::vec![Coupling {
            sys: pauli_x(),
            env: qb3_v().scale(QB3_COUPLING),
        }],
        rho_env,
        InitialStateSpec::Product(default_rho_sys()),
    )
}

const MAX_DRAWS: usize = 64;

fn generic(seed: u64, d_env: usize) -> Result<CompositeModel> {
    if d_env == 0 {
        return Err(Error::InvalidParameter("d_env must be positive".to_string()));
    }
    let mut rng = ensemble::rng(seed);
    for _ in 0..MAX_DRAWS {
        let h_env = Operator::new(ensemble::gaussian_hermitian(d_env, &mut rng).scale(GENERIC_ENV_SCALE))?;
        let e1 = Operator::new(ensemble::gaussian_hermitian(d_env, &mut rng).scale(GENERIC_COUPLING_SCALE))?;
        let e2 = Operator::new(ensemble::gaussian_hermitian(d_env, &mut rng).scale(GENERIC_COUPLING_SCALE))?;
        let rho_env = DensityOperator::gibbs(&h_env, 1.0)?;
        let m = CompositeModel::new(
            "GENERIC",
            pauli_z().scale(0.5),
            h_env,
            alloc::vec![
                Coupling { sys: pauli_x(), env: e1 },
                Coupling { sys: pauli_z(), env: e2 },
            ],
            rho_env,
            InitialStateSpec::Product(default_rho_sys()),
        )?;
        let cache = m.eigen_cache()?;
        if cache.min_gap() >= 1e-6 * cache.spectral_range() {
            return Ok(m);
        }
    }
    Err(Error::DegenerateDraw { attempts: MAX_DRAWS })
}

fn decoupled(seed: u64) -> Result<CompositeModel> {
    let d_env = 3;
    let mut rng = ensemble::rng(seed);
    let h_env = Operator::new(ensemble::gaussian_hermitian(d_env, &mut rng).scale(GENERIC_ENV_SCALE))?;
    let e = Operator::new(ensemble::gaussian_hermitian(d_env, &mut rng).scale(GENERIC_COUPLING_SCALE))?;
    let rho_env = DensityOperator::gibbs(&h_env, 1.0)?;
    let m = CompositeModel::new(
        "DECOUPLED",
        pauli_z().scale(0.5),
        h_env,
        alloc::vec![Coupling { sys: pauli_z(), env: e }],
        rho_env,
        InitialStateSpec::Product(default_rho_sys()),
    )?;
    m.with_conserved_projector(Operator::basis(2, 0, 0))
}

fn degenerate(seed: u64) -> Result<CompositeModel> {
    let d_env = 3;
    let mut rng = ensemble::rng(seed);
    let h_env = Operator::new(ensemble::gaussian_hermitian(d_env, &mut rng).scale(GENERIC_ENV_SCALE))?;
    let e1 = Operator::new(ensemble::gaussian_hermitian(d_env, &mut rng).scale(GENERIC_COUPLING_SCALE))?;
    let e2 = Operator::new(ensemble::gaussian_hermitian(d_env, &mut rng).scale(GENERIC_COUPLING_SCALE))?;
    let rho_env = DensityOperator::gibbs(&h_env, 1.0)?;
    let one = C64::new(1.0, 0.0);
    let s1 = Operator::from_row_slice(3, &[ZERO, one, ZERO, one, ZERO, ZERO, ZERO, ZERO, ZERO])?;
    let s2 = Operator::basis(3, 2, 2);
    let rho0 = DensityOperator::new(Operator::from_real_diagonal(&[0.4, 0.2, 0.4]))?;
    let m = CompositeModel::new(
        "DEGENERATE",
        Operator::from_real_diagonal(&[0.5, -0.5, 0.15]),
        h_env,
        alloc::vec![Coupling { sys: s1, env: e1 }, Coupling { sys: s2, env: e2 }],
        rho_env,
        InitialStateSpec::Product(rho0),
    )?;
    m.with_conserved_projector(Operator::basis(3, 2, 2))
}

/// `(|0,0⟩ + |1,1⟩)/√2` on `d_sys ⊗ d_env` (both at least 2).
pub fn bell_state(d_sys: usize, d_env: usize) -> Result<DensityOperator> {
    if d_sys < 2 || d_env < 2 {
        return Err(Error::InvalidParameter("Bell state needs d_sys, d_env >= 2".to_string()));
    }
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut psi = CVector::zeros(d_sys * d_env);
    psi[0] = C64::new(s, 0.0);
    psi[d_env + 1] = C64::new(s, 0.0);
    DensityOperator::new(Operator::pure(&psi))
}

/// System state with weight `w` spread uniformly over the conserved sector
/// `Π` and `1 - w` over its complement. Requires a declared conserved projector.
pub fn sector_weighted_state(model: &CompositeModel, w: f64) -> Result<DensityOperator> {
    let pi = model
        .conserved_projector()
        .ok_or_else(|| Error::InvalidParameter(format!("model {} declares no conserved sector", model.name())))?;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!("sector weight {w} outside [0, 1]")));
    }
    let d = model.d_sys();
    let n_in = pi.trace().re;
    let n_out = d as f64 - n_in;
    let comp = Operator::identity(d).sub(pi)?;
    let mut rho = pi.scale(w / n_in);
    if n_out > 0.5 {
        rho = rho.add(&comp.scale((1.0 - w) / n_out))?;
    }
    DensityOperator::new(rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncoupled_total_hamiltonian_is_kron_sum() {
        let m = CompositeModel::new(
            "t",
            pauli_z().scale(0.5),
            Operator::from_real_diagonal(&[0.0, 1.0]),
            Vec::new(),
            DensityOperator::maximally_mixed(2),
            InitialStateSpec::Product(DensityOperator::maximally_mixed(2)),
        )
        .unwrap();
        let h = m.build_total_hamiltonian();
        let expect = Operator::from_real_diagonal(&[0.5, 1.5, -0.5, 0.5]);
        assert!(linalg::max_abs_diff(h.matrix(), expect.matrix()) < 1e-15);
    }

    #[test]
    fn all_zero_pieces_give_zero() {
        let m = CompositeModel::new(
            "z",
            Operator::zeros(2),
            Operator::zeros(3),
            alloc::vec![Coupling { sys: Operator::zeros(2), env: Operator::zeros(3) }],
            DensityOperator::maximally_mixed(3),
            InitialStateSpec::Product(DensityOperator::maximally_mixed(2)),
        )
        .unwrap();
        assert_eq!(m.build_total_hamiltonian(), Operator::zeros(6));
        assert_eq!(m.build_total_liouville().unwrap(), SuperOperator::zeros(6));
        assert_eq!(m.energy_scale(), 1.0);
    }

    #[test]
    fn rejects_non_hermitian_pieces_and_bad_dims() {
        let bad = Operator::basis(2, 0, 1);
        let r = CompositeModel::new(
            "b",
            bad,
            Operator::zeros(2),
            Vec::new(),
            DensityOperator::maximally_mixed(2),
            InitialStateSpec::Product(DensityOperator::maximally_mixed(2)),
        );
        assert!(matches!(r, Err(Error::NotHermitian { .. })));
        let r = CompositeModel::new(
            "b",
            Operator::zeros(2),
            Operator::zeros(2),
            alloc::vec![Coupling { sys: Operator::zeros(3), env: Operator::zeros(2) }],
            DensityOperator::maximally_mixed(2),
            InitialStateSpec::Product(DensityOperator::maximally_mixed(2)),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn catalog_is_deterministic() {
        assert_eq!(catalog_model("QB3", 1).unwrap(), catalog_model("QB3", 99).unwrap());
        assert_eq!(catalog_model("GENERIC", 7).unwrap(), catalog_model("GENERIC", 7).unwrap());
        assert_ne!(catalog_model("GENERIC", 7).unwrap(), catalog_model("GENERIC", 8).unwrap());
        assert!(matches!(catalog_model("NOPE", 0), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn product_initial_state() {
        let m = catalog_model("QB3", 0)
            .unwrap()
            .with_initial(InitialStateSpec::Product(
                DensityOperator::new(Operator::basis(2, 0, 0)).unwrap(),
            ))
            .unwrap();
        let rho = m.build_initial_total().unwrap();
        assert!((rho.operator().trace() - C64::new(1.0, 0.0)).norm() < 1e-14);
        // block diagonal: lower block vanishes
        for i in 3..6 {
            for j in 0..6 {
                assert_eq!(rho.operator().matrix()[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn full_matrix_bell_initial_state() {
        let env = DensityOperator::maximally_mixed(2);
        let m = CompositeModel::new(
            "bell",
            pauli_z().scale(0.5),
            Operator::zeros(2),
            Vec::new(),
            env,
            InitialStateSpec::FullMatrix(bell_state(2, 2).unwrap()),
        )
        .unwrap();
        let red = m.initial_reduced().unwrap();
        assert!(linalg::max_abs_diff(red.matrix(), Operator::identity(2).scale(0.5).matrix()) < 1e-15);
    }

    #[test]
    fn rejects_delta_outside_q_space() {
        let m = catalog_model("QB3", 0).unwrap();
        // 1 ⊗ A with traceless A has Tr_E = 0, but σ_z ⊗ 1/3 does not
        let delta = pauli_z().kron(&Operator::identity(3)).scale(0.01);
        let r = m.with_initial(InitialStateSpec::ProductPlusCorrelation {
            rho_sys: default_rho_sys(),
            delta,
        });
        assert!(matches!(r, Err(Error::NotInQSpace { .. })));
    }

    #[test]
    fn decoupled_commutes_with_sector() {
        for seed in 0..4 {
            let m = catalog_model("DECOUPLED", seed).unwrap();
            let pi = m.conserved_projector().unwrap().kron(&Operator::identity(m.d_env()));
            let c = m.build_total_hamiltonian().commutator(&pi).unwrap();
            assert!(c.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn generic_has_no_degeneracies() {
        for seed in 0..5 {
            let c = catalog_model("GENERIC", seed).unwrap().eigen_cache().unwrap();
            assert!(c.min_gap() >= 1e-6 * c.spectral_range());
        }
    }

    #[test]
    fn sector_weighted_states() {
        let m = catalog_model("DECOUPLED", 0).unwrap();
        let rho = sector_weighted_state(&m, 0.3).unwrap();
        assert!(linalg::max_abs_diff(rho.operator().matrix(), Operator::from_real_diagonal(&[0.3, 0.7]).matrix()) < 1e-15);
        assert!(sector_weighted_state(&catalog_model("QB3", 0).unwrap(), 0.3).is_err());
        let m = catalog_model("DEGENERATE", 0).unwrap();
        let rho = sector_weighted_state(&m, 0.3).unwrap();
        assert!(linalg::max_abs_diff(rho.operator().matrix(), Operator::from_real_diagonal(&[0.35, 0.35, 0.3]).matrix()) < 1e-15);
    }
}
