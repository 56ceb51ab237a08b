//! TOML run configuration.
//!
//! Every table rejects unknown keys. Complex matrices are written row-major as
//! nested arrays of `[re, im]` pairs, e.g. `[[[0.5, 0], [0, 0]], [[0, 0], [-0.5, 0]]]`.
//! See `docs/config.md` for the full grammar.

use openmem_core::model::{bell_state, catalog_model_with, sector_weighted_state, CATALOG_NAMES};
use openmem_core::{
    ensemble, CMatrix, CompositeModel, Coupling, DensityOperator, InitialStateSpec, Operator, C64,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type MatrixRepr = Vec<Vec<[f64; 2]>>;

pub fn matrix_from_repr(field: &str, m: &MatrixRepr) -> Result<CMatrix, CliError> {
    let rows = m.len();
    if rows == 0 || m.iter().any(|r| r.len() != rows) {
        return Err(CliError::Config(format!("{field}: matrix must be square and non-empty")));
    }
    if m.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("{field}: non-finite entry")));
    }
    Ok(CMatrix::from_fn(rows, rows, |i, j| C64::new(m[i][j][0], m[i][j][1])))
}

pub fn matrix_to_repr(m: &CMatrix) -> MatrixRepr {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn hermitian(field: &str, m: &MatrixRepr) -> Result<Operator, CliError> {
    let op = Operator::new(matrix_from_repr(field, m)?).map_err(|e| field_err(field, e))?;
    op.require_hermitian("matrix").map_err(|e| field_err(field, e))
}

fn density(field: &str, m: &MatrixRepr) -> Result<DensityOperator, CliError> {
    let op = Operator::new(matrix_from_repr(field, m)?).map_err(|e| field_err(field, e))?;
    DensityOperator::new(op).map_err(|e| field_err(field, e))
}

fn field_err(field: &str, e: openmem_core::Error) -> CliError {
    CliError::Config(format!("{field}: {e}"))
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub verify: VerifyParams,
    #[serde(default)]
    pub evolve: EvolveParams,
    #[serde(default)]
    pub freq_sweep: SweepParams,
    #[serde(default)]
    pub spectrum: SpectrumParams,
    #[serde(default)]
    pub longtime: LongtimeParams,
    #[serde(default)]
    pub diagnose: DiagnoseParams,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Defaults to `QB3` when `inline` is absent too.
    pub catalog: Option<String>,
    /// Environment dimension for `GENERIC`.
    pub d_env: Option<usize>,
    pub inline: Option<InlineModel>,
    pub initial: Option<InitialSpec>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            catalog: Some("QB3".into()),
            d_env: None,
            inline: None,
            initial: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    pub name: Option<String>,
    pub h_sys: MatrixRepr,
    pub h_env: MatrixRepr,
    #[serde(default)]
    pub couplings: Vec<InlineCoupling>,
    /// Explicit `ρ_E`; exclusive with `env_beta`.
    pub rho_env: Option<MatrixRepr>,
    /// `ρ_E = e^{-βH_E}/Z`.
    pub env_beta: Option<f64>,
    /// Conserved system projector, enables `kind = "sector"` initial states.
    pub conserved: Option<MatrixRepr>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InlineCoupling {
    pub sys: MatrixRepr,
    pub env: MatrixRepr,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// System state times `ρ_E`.
    Product { rho_sys: MatrixRepr },
    /// `(|00⟩ + |11⟩)/√2`.
    Bell,
    /// Full total density matrix.
    Full { rho: MatrixRepr },
    /// `ρ_S ⊗ ρ_E + Δ` with a Q-space correlation `Δ`.
    Correlated { rho_sys: MatrixRepr, delta: MatrixRepr },
    /// Weight `w` on the conserved sector, `1 - w` on its complement.
    Sector { weight: f64 },
    /// Seeded random full-rank total state.
    Random { seed: Option<u64> },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ZGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub count: usize,
}

impl ZGrid {
    /// `count` points, real part linear and imaginary part geometric.
    pub fn points(&self) -> Vec<C64> {
        let n = self.count;
        (0..n)
            .map(|k| {
                let s = if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 };
                let re = self.re_min + s * (self.re_max - self.re_min);
                let im = self.im_min * (self.im_max / self.im_min).powf(s);
                C64::new(re, im)
            })
            .collect()
    }
}

impl Default for ZGrid {
    fn default() -> Self {
        Self {
            re_min: -3.0,
            re_max: 3.0,
            im_min: 0.02,
            im_max: 1.0,
            count: 20,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    /// Explicit `[re, im]` points; replaces `grid` when present.
    pub z: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub grid: ZGrid,
    pub threshold: f64,
    pub probe_seed: Option<u64>,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            z: None,
            grid: ZGrid::default(),
            threshold: 1e-8,
            probe_seed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ContourParams {
    pub epsilon: f64,
    pub omega_max: f64,
    pub n_points: usize,
    pub tail_order: Option<usize>,
    pub tail_decay: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveParams {
    pub t_max: f64,
    pub count: usize,
    /// Default contour when absent.
    pub contour: Option<ContourParams>,
    /// Extra runs at successively refined contours.
    pub refinements: usize,
}

impl Default for EvolveParams {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            count: 101,
            contour: None,
            refinements: 0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub omega_min: f64,
    pub omega_max: f64,
    pub count: usize,
    pub epsilon: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            omega_min: -3.0,
            omega_max: 3.0,
            count: 61,
            epsilon: 0.05,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    pub z: [f64; 2],
    pub cluster_tol: f64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            z: [0.0, 0.02],
            cluster_tol: openmem_core::longtime::ZERO_CLUSTER_TOL,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LongtimeParams {
    /// Decreasing `ε` values; default `(0.2, 0.1, 0.05)`.
    pub eps_seq: Option<Vec<f64>>,
    /// Default `0.01·scale`.
    pub eps_ref: Option<f64>,
    pub cluster_tol: Option<f64>,
    /// One result per sector weight (models with a conserved sector).
    pub initial_weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseParams {
    pub eps_ref: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Record,
    Table,
}

/// Parse and fully validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(field: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field}: must be a positive finite number, got {x}")))
    }
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.build_model()?;
        let v = &self.verify;
        positive("verify.threshold", v.threshold)?;
        if let Some(z) = &v.z {
            if z.is_empty() {
                return Err(CliError::Config("verify.z: empty".into()));
            }
            for p in z {
                positive("verify.z[].im", p[1])?;
            }
        } else {
            let g = &v.grid;
            positive("verify.grid.im_min", g.im_min)?;
            positive("verify.grid.im_max", g.im_max)?;
            if g.count == 0 {
                return Err(CliError::Config("verify.grid.count: must be >= 1".into()));
            }
        }
        let e = &self.evolve;
        positive("evolve.t_max", e.t_max)?;
        if e.count < 2 {
            return Err(CliError::Config("evolve.count: must be >= 2".into()));
        }
        if let Some(c) = &e.contour {
            positive("evolve.contour.epsilon", c.epsilon)?;
            positive("evolve.contour.omega_max", c.omega_max)?;
            if c.n_points < 2 || !c.n_points.is_multiple_of(2) {
                return Err(CliError::Config("evolve.contour.n_points: must be even and >= 2".into()));
            }
            if let Some(g) = c.tail_decay {
                positive("evolve.contour.tail_decay", g)?;
            }
        }
        let s = &self.freq_sweep;
        positive("freq_sweep.epsilon", s.epsilon)?;
        if s.count == 0 || !(s.omega_max >= s.omega_min) {
            return Err(CliError::Config("freq_sweep: need count >= 1 and omega_max >= omega_min".into()));
        }
        positive("spectrum.z[1]", self.spectrum.z[1])?;
        positive("spectrum.cluster_tol", self.spectrum.cluster_tol)?;
        let l = &self.longtime;
        if let Some(seq) = &l.eps_seq {
            if seq.is_empty() {
                return Err(CliError::Config("longtime.eps_seq: empty".into()));
            }
            for &x in seq {
                positive("longtime.eps_seq[]", x)?;
            }
            if seq.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(CliError::Config("longtime.eps_seq: must be strictly decreasing".into()));
            }
        }
        if let Some(x) = l.eps_ref {
            positive("longtime.eps_ref", x)?;
        }
        if let Some(x) = l.cluster_tol {
            positive("longtime.cluster_tol", x)?;
        }
        if let Some(ws) = &l.initial_weights {
            if ws.is_empty() || ws.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(CliError::Config("longtime.initial_weights: values must lie in [0, 1]".into()));
            }
            let m = self.build_model()?;
            if m.conserved_projector().is_none() {
                return Err(CliError::Config(format!(
                    "longtime.initial_weights: model {} has no conserved sector",
                    m.name()
                )));
            }
        }
        if let Some(x) = self.diagnose.eps_ref {
            positive("diagnose.eps_ref", x)?;
        }
        Ok(())
    }

    /// Composite model described by `[model]`, initial state included.
    pub fn build_model(&self) -> Result<CompositeModel, CliError> {
        let spec = &self.model;
        let base = match (&spec.catalog, &spec.inline) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("model: give either catalog or inline, not both".into()))
            }
            (catalog, None) => {
                let name = catalog.as_deref().unwrap_or("QB3");
                if !CATALOG_NAMES.contains(&name) {
                    return Err(CliError::Config(format!(
                        "model.catalog: unknown model {name:?} (known: {})",
                        CATALOG_NAMES.join(", ")
                    )));
                }
                if spec.d_env.is_some() && name != "GENERIC" {
                    return Err(CliError::Config("model.d_env: only GENERIC takes d_env".into()));
                }
                catalog_model_with(name, self.seed(), spec.d_env).map_err(|e| field_err("model", e))?
            }
            (None, Some(inline)) => {
                if spec.d_env.is_some() {
                    return Err(CliError::Config("model.d_env: only valid with catalog = \"GENERIC\"".into()));
                }
                build_inline(inline)?
            }
        };
        match &spec.initial {
            None => Ok(base),
            Some(init) => {
                let spec = initial_state(&base, init, self.seed())?;
                base.with_initial(spec).map_err(|e| field_err("model.initial", e))
            }
        }
    }
}

fn build_inline(m: &InlineModel) -> Result<CompositeModel, CliError> {
    let h_sys = hermitian("model.inline.h_sys", &m.h_sys)?;
    let h_env = hermitian("model.inline.h_env", &m.h_env)?;
    let mut couplings = Vec::with_capacity(m.couplings.len());
    for (k, c) in m.couplings.iter().enumerate() {
        couplings.push(Coupling {
            sys: hermitian(&format!("model.inline.couplings[{k}].sys"), &c.sys)?,
            env: hermitian(&format!("model.inline.couplings[{k}].env"), &c.env)?,
        });
    }
    let rho_env = match (&m.rho_env, m.env_beta) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("model.inline: give rho_env or env_beta, not both".into()))
        }
        (Some(r), None) => density("model.inline.rho_env", r)?,
        (None, Some(beta)) => {
            if !beta.is_finite() {
                return Err(CliError::Config("model.inline.env_beta: must be finite".into()));
            }
            DensityOperator::gibbs(&h_env, beta).map_err(|e| field_err("model.inline.env_beta", e))?
        }
        (None, None) => DensityOperator::maximally_mixed(h_env.dim()),
    };
    let d_sys = h_sys.dim();
    let initial = InitialStateSpec::Product(DensityOperator::maximally_mixed(d_sys));
    let name = m.name.clone().unwrap_or_else(|| "inline".into());
    let mut model = CompositeModel::new(&name, h_sys, h_env, couplings, rho_env, initial)
        .map_err(|e| field_err("model.inline", e))?;
    if let Some(p) = &m.conserved {
        let pi = hermitian("model.inline.conserved", p)?;
        model = model
            .with_conserved_projector(pi)
            .map_err(|e| field_err("model.inline.conserved", e))?;
    }
    Ok(model)
}

fn initial_state(model: &CompositeModel, init: &InitialSpec, seed: u64) -> Result<InitialStateSpec, CliError> {
    let f = "model.initial";
    Ok(match init {
        InitialSpec::Product { rho_sys } => {
            InitialStateSpec::Product(density(&format!("{f}.rho_sys"), rho_sys)?)
        }
        InitialSpec::Bell => InitialStateSpec::FullMatrix(
            bell_state(model.d_sys(), model.d_env()).map_err(|e| field_err(f, e))?,
        ),
        InitialSpec::Full { rho } => InitialStateSpec::FullMatrix(density(&format!("{f}.rho"), rho)?),
        InitialSpec::Correlated { rho_sys, delta } => InitialStateSpec::ProductPlusCorrelation {
            rho_sys: density(&format!("{f}.rho_sys"), rho_sys)?,
            delta: Operator::new(matrix_from_repr(&format!("{f}.delta"), delta)?)
                .map_err(|e| field_err(f, e))?,
        },
        InitialSpec::Sector { weight } => {
            InitialStateSpec::Product(sector_weighted_state(model, *weight).map_err(|e| field_err(f, e))?)
        }
        InitialSpec::Random { seed: s } => {
            let d = model.d_total();
            let rho = ensemble::random_density(d, &mut ensemble::rng(s.unwrap_or(seed)));
            InitialStateSpec::FullMatrix(
                DensityOperator::new(Operator::new(rho).map_err(|e| field_err(f, e))?)
                    .map_err(|e| field_err(f, e))?,
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_reference() {
        let cfg = parse_config("[model]\ncatalog = \"QB3\"\n").unwrap();
        let m = cfg.build_model().unwrap();
        assert_eq!(m.d_sys(), 2);
        assert_eq!(m.d_env(), 3);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("[model]\ncatalog = \"QB3\"\ncolour = 3\n").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("colour"));
        assert!(parse_config("[evolve]\nt_max = 1.0\nbogus = 1\n").is_err());
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_config("[model\ncatalog = 1").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn non_hermitian_rejected_with_field() {
        let text = r#"
[model.inline]
h_sys = [[[0.5, 0], [1, 0]], [[0, 0], [-0.5, 0]]]
h_env = [[[0, 0], [0, 0]], [[0, 0], [1, 0]]]
"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("model.inline.h_sys"), "{err}");
    }

    #[test]
    fn invalid_density_rejected() {
        let text = r#"
[model]
catalog = "QB3"
[model.initial]
kind = "product"
rho_sys = [[[1.2, 0], [0, 0]], [[0, 0], [-0.2, 0]]]
"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("model.initial.rho_sys"), "{err}");
    }

    #[test]
    fn inline_correlated_six_by_six_state() {
        // Bell state on 2 ⊗ 3 written out explicitly
        let mut rows = vec![vec!["[0, 0]".to_string(); 6]; 6];
        for (i, j) in [(0, 0), (0, 4), (4, 0), (4, 4)] {
            rows[i][j] = "[0.5, 0]".into();
        }
        let rho: Vec<String> = rows.iter().map(|r| format!("[{}]", r.join(", "))).collect();
        let text = format!("[model]\ncatalog = \"QB3\"\n[model.initial]\nkind = \"full\"\nrho = [{}]\n", rho.join(", "));
        let cfg = parse_config(&text).unwrap();
        let m = cfg.build_model().unwrap();
        let r = m.build_initial_total().unwrap();
        assert!((r.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_need_a_sector() {
        assert!(parse_config("[longtime]\ninitial_weights = [0.3]\n").is_err());
        assert!(parse_config("[model]\ncatalog = \"DECOUPLED\"\n[longtime]\ninitial_weights = [0.3, 0.7]\n").is_ok());
    }

    #[test]
    fn range_checks() {
        assert!(parse_config("[evolve]\nt_max = -1.0\n").is_err());
        assert!(parse_config("[longtime]\neps_seq = [0.1, 0.2]\n").is_err());
        assert!(parse_config("[verify]\nz = [[1.0, 0.0]]\n").is_err());
        assert!(parse_config("[model]\ncatalog = \"NOPE\"\n").is_err());
    }
}
