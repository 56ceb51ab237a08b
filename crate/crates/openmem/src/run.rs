//! Subcommand implementations. Each returns a record plus a flat table; the
//! caller decides which one to write.

use std::collections::BTreeMap;

use openmem_core::effective::ResolventResiduals;
use openmem_core::linalg;
use openmem_core::longtime::{
    abel_oracle_extrapolated, default_eps_ref, long_time_formula_with,
    long_time_limit_extrapolated_with, spectrum_effective, time_average_oracle,
    timescale_diagnostics, TimescaleDiagnostics, FINITE_SIZE_CAVEAT, ZERO_CLUSTER_TOL,
};
use openmem_core::model::{catalog_model, sector_weighted_state, CATALOG_NAMES};
use openmem_core::projection::split_initial;
use openmem_core::timedomain::{compare_trajectories, exact_reduced_evolution, LaplaceInversion};
use openmem_core::{
    ComplexFrequency, CompositeModel, ContourSpec, EffectiveSystem, Error as CoreError,
    InitialStateSpec, TimeGrid, Trajectory, C64,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::record::{self, complex, matrix, model_info, num, Diagnostics, ResultRecord, Row, Table};

pub const DEFAULT_EPS_SEQ: [f64; 3] = [0.2, 0.1, 0.05];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Evolve,
    FreqSweep,
    Spectrum,
    Longtime,
    Diagnose,
    Catalog,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Evolve => "evolve",
            Command::FreqSweep => "freq-sweep",
            Command::Spectrum => "spectrum",
            Command::Longtime => "longtime",
            Command::Diagnose => "diagnose",
            Command::Catalog => "catalog",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub record: ResultRecord,
    pub table: Table,
    /// Set by `verify` when a residual exceeds the threshold.
    pub violation: Option<String>,
}

fn core(context: &'static str) -> impl Fn(CoreError) -> CliError {
    move |e| CliError::from_core(context, e)
}

/// Runs `cmd` on a dedicated pool of `threads` workers (rayon's default when `None`).
pub fn run_with_threads(cmd: Command, cfg: &RunConfig, threads: Option<usize>) -> Result<Outcome, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| CliError::Config(format!("threads: {e}")))?;
    pool.install(|| run_command(cmd, cfg))
}

pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.build_model()?;
    let (parameters, payload, diagnostics, table, violation) = match cmd {
        Command::Verify => verify(cfg, &model)?,
        Command::Evolve => evolve(cfg, &model)?,
        Command::FreqSweep => freq_sweep(cfg, &model)?,
        Command::Spectrum => spectrum(cfg, &model)?,
        Command::Longtime => longtime(cfg, &model)?,
        Command::Diagnose => diagnose(cfg, &model)?,
        Command::Catalog => catalog(cfg)?,
    };
    let mut parameters = parameters;
    if let Value::Object(m) = &mut parameters {
        m.insert("seed".into(), json!(cfg.seed()));
    }
    Ok(Outcome {
        record: ResultRecord {
            command: cmd.name().into(),
            version: record::VERSION.into(),
            model: model_info(&model),
            parameters,
            payload,
            diagnostics,
        },
        table,
        violation,
    })
}

type Parts = (Value, Value, Diagnostics, Table, Option<String>);

fn ok_diag() -> Diagnostics {
    Diagnostics {
        status: "ok".into(),
        ..Diagnostics::default()
    }
}

fn trajectory_value(tr: &Trajectory) -> Value {
    Value::Array(tr.states.iter().map(|s| matrix(s.matrix())).collect())
}

// ---------------------------------------------------------------------------

fn verify(cfg: &RunConfig, model: &CompositeModel) -> Result<Parts, CliError> {
    let p = &cfg.verify;
    let sys = EffectiveSystem::new(model).map_err(core("effective system"))?;
    let rho_tot = model.build_initial_total().map_err(core("initial state"))?;
    let (rho_0, delta) = split_initial(&rho_tot, sys.projectors()).map_err(core("initial split"))?;
    let points: Vec<C64> = match &p.z {
        Some(z) => z.iter().map(|q| C64::new(q[0], q[1])).collect(),
        None => p.grid.points(),
    };
    let seed = p.probe_seed.unwrap_or(cfg.seed());

    struct Point {
        res: ResolventResiduals,
        rho_dev: f64,
        trace_defect: f64,
        trace_row: f64,
    }
    let results: Vec<Result<Point, CoreError>> = points
        .par_iter()
        .enumerate()
        .map(|(k, &z)| {
            let z = ComplexFrequency::new(z)?;
            let res = sys.verify_resolvent_identities(z, seed.wrapping_add(k as u64))?;
            let st = sys.frequency_state(z, &rho_0, &delta)?;
            let full = sys.full_space_rho_z(z, rho_tot.operator())?;
            let scale = linalg::max_abs(full.matrix()).max(f64::MIN_POSITIVE);
            let eval = sys.effective_liouville(z)?;
            Ok(Point {
                res,
                rho_dev: linalg::max_abs_diff(st.rho_z.matrix(), full.matrix()) / scale,
                trace_defect: st.trace_defect() * z.value().norm(),
                trace_row: eval.trace_row_defect(),
            })
        })
        .collect();

    let mut diag = ok_diag();
    let mut table = Table::new();
    table.complex_column("z");
    for c in ["r_projected", "r_mixed", "rho_z_deviation", "trace_defect", "trace_row_defect", "cond_full", "cond_q"] {
        table.column(c);
    }
    let mut entries = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_cond = 1.0f64;
    let mut evaluated = 0usize;
    for (z, r) in points.iter().zip(results) {
        match r {
            Ok(pt) => {
                evaluated += 1;
                let m = pt.res.max().max(pt.rho_dev).max(pt.trace_defect).max(pt.trace_row);
                worst = worst.max(m);
                worst_cond = worst_cond.max(pt.res.condition_full).max(pt.res.condition_q);
                entries.push(json!({
                    "z": complex(*z),
                    "r_projected": num(pt.res.r66),
                    "r_mixed": num(pt.res.r67),
                    "rho_z_deviation": num(pt.rho_dev),
                    "trace_defect": num(pt.trace_defect),
                    "trace_row_defect": num(pt.trace_row),
                    "condition_full": num(pt.res.condition_full),
                    "condition_q": num(pt.res.condition_q),
                }));
                table.rows.push(
                    Row::new()
                        .complex(*z)
                        .real(pt.res.r66)
                        .real(pt.res.r67)
                        .real(pt.rho_dev)
                        .real(pt.trace_defect)
                        .real(pt.trace_row)
                        .real(pt.res.condition_full)
                        .real(pt.res.condition_q)
                        .finish(),
                );
            }
            Err(CoreError::NearPole { z, condition }) => {
                diag.warnings.push(format!("skipped near-pole point z = {z} (condition {condition:.3e})"));
                entries.push(json!({ "z": complex(z), "skipped": "near pole", "condition": num(condition) }));
            }
            Err(e) => return Err(CliError::from_core("verify", e)),
        }
    }
    diag.residuals.insert("max".into(), num(worst));
    diag.conditions.insert("max".into(), num(worst_cond));
    let violation = if evaluated == 0 {
        Some("no frequency could be evaluated".to_string())
    } else if !(worst <= p.threshold) {
        Some(format!("max residual {worst:.3e} exceeds threshold {:.3e}", p.threshold))
    } else {
        None
    };
    if violation.is_some() {
        diag.status = "threshold-violated".into();
    }
    let params = serde_json::to_value(p).expect("params serialize");
    Ok((params, json!({ "points": entries }), diag, table, violation))
}

// ---------------------------------------------------------------------------

fn contour_for(cfg: &RunConfig, model: &CompositeModel) -> ContourSpec {
    let e = &cfg.evolve;
    match &e.contour {
        None => ContourSpec::default_for(model, e.t_max),
        Some(c) => {
            let base = ContourSpec::new(c.epsilon, c.omega_max, c.n_points);
            base.with_tail(
                c.tail_order.unwrap_or(base.tail_order),
                c.tail_decay.unwrap_or(base.tail_decay),
            )
        }
    }
}

fn contour_value(c: &ContourSpec) -> Value {
    json!({
        "epsilon": num(c.epsilon),
        "omega_max": num(c.omega_max),
        "n_points": c.n_points,
        "tail_order": c.tail_order,
        "tail_decay": num(c.tail_decay),
    })
}

/// Inverse-Laplace trajectory with node values evaluated in parallel and
/// collected in node order, so the sum is independent of the thread count.
pub fn parallel_inversion(
    model: &CompositeModel,
    sys: &EffectiveSystem,
    contour: ContourSpec,
    grid: &TimeGrid,
) -> Result<Trajectory, CliError> {
    let inv = LaplaceInversion::new(model, sys, contour, grid).map_err(core("contour"))?;
    let nodes = inv
        .node_frequencies()
        .par_iter()
        .map(|&w| inv.node_value(w))
        .collect::<Result<Vec<_>, _>>()
        .map_err(core("contour node"))?;
    inv.synthesize(&nodes, grid).map_err(core("synthesis"))
}

fn evolve(cfg: &RunConfig, model: &CompositeModel) -> Result<Parts, CliError> {
    let e = &cfg.evolve;
    let grid = TimeGrid::uniform(e.t_max, e.count).map_err(core("time grid"))?;
    let sys = EffectiveSystem::new(model).map_err(core("effective system"))?;
    let contour = contour_for(cfg, model);
    let traj = parallel_inversion(model, &sys, contour, &grid)?;
    let exact = exact_reduced_evolution(model, &grid).map_err(core("exact evolution"))?;
    let cmp = compare_trajectories(&traj, &exact).map_err(core("comparison"))?;

    let mut levels = vec![json!({
        "contour": contour_value(&contour),
        "max_deviation": num(cmp.max_deviation),
        "mean_deviation": num(cmp.mean_deviation),
    })];
    let mut c = contour;
    for _ in 0..e.refinements {
        c = c.refined();
        let t = parallel_inversion(model, &sys, c, &grid)?;
        let r = compare_trajectories(&t, &exact).map_err(core("comparison"))?;
        levels.push(json!({
            "contour": contour_value(&c),
            "max_deviation": num(r.max_deviation),
            "mean_deviation": num(r.mean_deviation),
        }));
    }

    let d = model.d_sys();
    let mut table = Table::new();
    table.column("t");
    table.matrix_columns("rho", d);
    table.matrix_columns("exact", d);
    table.column("deviation");
    for (k, &t) in grid.times().iter().enumerate() {
        table.rows.push(
            Row::new()
                .real(t)
                .matrix(traj.states[k].matrix())
                .matrix(exact.states[k].matrix())
                .real(cmp.per_time[k])
                .finish(),
        );
    }

    let mut diag = ok_diag();
    diag.residuals.insert("max_deviation".into(), num(cmp.max_deviation));
    diag.residuals.insert("hermiticity_defect".into(), num(traj.meta.hermiticity_defect));
    diag.residuals.insert("trace_defect".into(), num(traj.meta.trace_defect));
    diag.conditions.insert("max".into(), num(traj.meta.condition));

    let params = json!({ "evolve": serde_json::to_value(e).expect("params serialize"), "contour": contour_value(&contour) });
    let payload = json!({
        "times": grid.times().iter().map(|&t| num(t)).collect::<Vec<_>>(),
        "rho": trajectory_value(&traj),
        "exact": trajectory_value(&exact),
        "deviation": cmp.per_time.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "refinement": levels,
    });
    Ok((params, payload, diag, table, None))
}

// ---------------------------------------------------------------------------

fn freq_sweep(cfg: &RunConfig, model: &CompositeModel) -> Result<Parts, CliError> {
    let s = &cfg.freq_sweep;
    let sys = EffectiveSystem::new(model).map_err(core("effective system"))?;
    let rho_tot = model.build_initial_total().map_err(core("initial state"))?;
    let (rho_0, delta) = split_initial(&rho_tot, sys.projectors()).map_err(core("initial split"))?;
    let omegas: Vec<f64> = (0..s.count)
        .map(|k| {
            if s.count == 1 {
                s.omega_min
            } else {
                s.omega_min + (s.omega_max - s.omega_min) * k as f64 / (s.count - 1) as f64
            }
        })
        .collect();
    let states = omegas
        .par_iter()
        .map(|&w| {
            let z = ComplexFrequency::from_parts(w, s.epsilon)?;
            let st = sys.frequency_state(z, &rho_0, &delta)?;
            let full = sys.full_space_rho_z(z, rho_tot.operator())?;
            let dev = linalg::max_abs_diff(st.rho_z.matrix(), full.matrix());
            Ok((st, dev))
        })
        .collect::<Result<Vec<_>, CoreError>>()
        .map_err(core("frequency sweep"))?;

    let d = model.d_sys();
    let mut table = Table::new();
    table.column("omega");
    table.matrix_columns("rho_z", d);
    table.column("deviation");
    table.column("condition");
    let mut worst = 0.0f64;
    let mut cond = 1.0f64;
    let mut pts = Vec::new();
    for (&w, (st, dev)) in omegas.iter().zip(&states) {
        worst = worst.max(*dev);
        cond = cond.max(st.condition_report);
        table.rows.push(
            Row::new()
                .real(w)
                .matrix(st.rho_z.matrix())
                .real(*dev)
                .real(st.condition_report)
                .finish(),
        );
        pts.push(json!({
            "omega": num(w),
            "rho_z": matrix(st.rho_z.matrix()),
            "deviation": num(*dev),
            "condition": num(st.condition_report),
        }));
    }
    let mut diag = ok_diag();
    diag.residuals.insert("max_deviation".into(), num(worst));
    diag.conditions.insert("max".into(), num(cond));
    let params = serde_json::to_value(s).expect("params serialize");
    Ok((params, json!({ "points": pts }), diag, table, None))
}

// ---------------------------------------------------------------------------

fn spectrum(cfg: &RunConfig, model: &CompositeModel) -> Result<Parts, CliError> {
    let p = &cfg.spectrum;
    let sys = EffectiveSystem::new(model).map_err(core("effective system"))?;
    let z = ComplexFrequency::new(C64::new(p.z[0], p.z[1])).map_err(core("spectrum.z"))?;
    let eval = sys.effective_liouville(z).map_err(core("effective Liouville"))?;
    let sd = spectrum_effective(&eval).map_err(core("spectrum"))?;
    let lim = p.cluster_tol * sd.scale;

    let mut table = Table::new();
    for c in ["index", "lambda.re", "lambda.im", "abs", "cluster", "zero_mode"] {
        table.column(c);
    }
    let mut modes = Vec::new();
    for (k, l) in sd.eigenvalues.iter().enumerate() {
        let zero = l.norm() <= lim;
        table.rows.push(
            Row::new()
                .text(&k.to_string())
                .complex(*l)
                .real(l.norm())
                .text(&sd.cluster[k].to_string())
                .text(if zero { "true" } else { "false" })
                .finish(),
        );
        modes.push(json!({
            "eigenvalue": complex(*l),
            "cluster": sd.cluster[k],
            "defective": sd.defective_cluster[sd.cluster[k]],
            "zero_mode": zero,
            "right": matrix(sd.right[k].matrix()),
            "left": matrix(sd.left[k].matrix()),
        }));
    }
    let mut diag = ok_diag();
    diag.residuals.insert("biorthogonality_defect".into(), num(sd.biorthogonality_defect));
    diag.residuals.insert("trace_row_defect".into(), num(eval.trace_row_defect()));
    diag.conditions.insert("q_solve".into(), num(eval.condition_report));
    if sd.max_imag() > lim {
        diag.warnings.push(format!("eigenvalue with Im = {:.3e} > 0", sd.max_imag()));
    }
    if sd.defective() {
        diag.warnings.push("defective eigenvalue cluster present".into());
    }
    let params = serde_json::to_value(p).expect("params serialize");
    let payload = json!({
        "z": complex(z.value()),
        "scale": num(sd.scale),
        "max_imag": num(sd.max_imag()),
        "modes": modes,
    });
    Ok((params, payload, diag, table, None))
}

// ---------------------------------------------------------------------------

fn longtime(cfg: &RunConfig, model: &CompositeModel) -> Result<Parts, CliError> {
    let p = &cfg.longtime;
    let eps_seq = p.eps_seq.clone().unwrap_or_else(|| DEFAULT_EPS_SEQ.to_vec());
    let eps_ref = p.eps_ref.unwrap_or_else(|| default_eps_ref(model));
    let tol = p.cluster_tol.unwrap_or(ZERO_CLUSTER_TOL);

    let variants: Vec<(Option<f64>, CompositeModel)> = match &p.initial_weights {
        None => vec![(None, model.clone())],
        Some(ws) => ws
            .iter()
            .map(|&w| {
                let rho = sector_weighted_state(model, w).map_err(core("sector state"))?;
                let m = model
                    .clone()
                    .with_initial(InitialStateSpec::Product(rho))
                    .map_err(core("sector state"))?;
                Ok((Some(w), m))
            })
            .collect::<Result<_, CliError>>()?,
    };
    let sys = EffectiveSystem::new(model).map_err(core("effective system"))?;

    let d = model.d_sys();
    let mut table = Table::new();
    table.column("weight");
    table.column("method");
    table.matrix_columns("rho_inf", d);
    let mut diag = ok_diag();
    diag.warnings.push(FINITE_SIZE_CAVEAT.into());
    let mut entries = Vec::new();
    let mut dev_formula = 0.0f64;
    let mut dev_ext = 0.0f64;
    for (w, m) in &variants {
        let formula = long_time_formula_with(&sys, m, eps_ref, tol).map_err(core("zero-mode formula"))?;
        let ext = long_time_limit_extrapolated_with(&sys, m, &eps_seq).map_err(core("extrapolation"))?;
        let matched = abel_oracle_extrapolated(m, &eps_seq).map_err(core("Abel oracle"))?;
        let infinite = time_average_oracle(m).map_err(core("time-average oracle"))?;
        let ext_vs_matched = linalg::max_abs_diff(ext.rho_inf.matrix(), matched.rho_inf.matrix());
        let formula_vs_ext = linalg::max_abs_diff(formula.rho_inf.matrix(), ext.rho_inf.matrix());
        let formula_vs_inf = linalg::max_abs_diff(formula.rho_inf.matrix(), infinite.matrix());
        let ext_vs_inf = linalg::max_abs_diff(ext.rho_inf.matrix(), infinite.matrix());
        dev_formula = dev_formula.max(formula_vs_ext);
        dev_ext = dev_ext.max(ext_vs_matched);
        if !ext.monotone {
            diag.warnings.push("extrapolation step differences are not monotone".into());
        }
        let label = w.map_or("-".to_string(), |x| format!("{x:?}"));
        for (name, rho) in [
            ("formula", formula.rho_inf.matrix()),
            ("extrapolated", ext.rho_inf.matrix()),
            ("abel-oracle", matched.rho_inf.matrix()),
            ("time-average", infinite.matrix()),
        ] {
            table.rows.push(Row::new().text(&label).text(name).matrix(rho).finish());
        }
        entries.push(json!({
            "weight": w.map_or(Value::Null, num),
            "formula": {
                "rho_inf": matrix(formula.rho_inf.matrix()),
                "eps_ref": num(formula.eps_ref),
                "degeneracy": formula.degeneracy,
                "zero_eigenvalues": formula.zero_modes.modes.iter().map(|z| complex(z.eigenvalue)).collect::<Vec<_>>(),
                "shift_norm": num(formula.shift_norm),
                "initial_state_sensitivity": formula.initial_state_sensitivity.map_or(Value::Null, num),
                "idempotency_defect": num(formula.zero_modes.idempotency_defect),
                "hermiticity_defect": num(formula.hermiticity_defect),
                "trace_defect": num(formula.trace_defect),
            },
            "extrapolated": {
                "rho_inf": matrix(ext.rho_inf.matrix()),
                "samples": ext.samples.iter().map(|(e, g)| json!({ "eps": num(*e), "value": matrix(g.matrix()) })).collect::<Vec<_>>(),
                "step_differences": ext.step_differences.iter().map(|&x| num(x)).collect::<Vec<_>>(),
                "monotone": ext.monotone,
                "extrapolation_change": num(ext.extrapolation_change),
            },
            "abel_oracle": matrix(matched.rho_inf.matrix()),
            "time_average_oracle": matrix(infinite.matrix()),
            "deviations": {
                "extrapolated_vs_abel_oracle": num(ext_vs_matched),
                "formula_vs_extrapolated": num(formula_vs_ext),
                "formula_vs_time_average": num(formula_vs_inf),
                "extrapolated_vs_time_average": num(ext_vs_inf),
            },
        }));
    }
    diag.residuals.insert("extrapolated_vs_abel_oracle".into(), num(dev_ext));
    diag.residuals.insert("formula_vs_extrapolated".into(), num(dev_formula));
    let params = json!({
        "eps_seq": eps_seq.iter().map(|&e| num(e)).collect::<Vec<_>>(),
        "eps_ref": num(eps_ref),
        "cluster_tol": num(tol),
        "initial_weights": p.initial_weights,
    });
    Ok((params, json!({ "results": entries }), diag, table, None))
}

// ---------------------------------------------------------------------------

fn diagnose(cfg: &RunConfig, model: &CompositeModel) -> Result<Parts, CliError> {
    let eps_ref = cfg.diagnose.eps_ref.unwrap_or_else(|| default_eps_ref(model));
    let sys = EffectiveSystem::new(model).map_err(core("effective system"))?;
    let t = timescale_diagnostics(&sys, eps_ref).map_err(core("timescales"))?;
    let mut table = Table::new();
    for c in ["t_pq", "t_q", "tau", "eps_ref", "correlations_negligible"] {
        table.column(c);
    }
    let payload = match t {
        TimescaleDiagnostics::Coupled { t_pq, t_q, tau, eps_ref, correlations_negligible } => {
            table.rows.push(
                Row::new()
                    .real(t_pq)
                    .real(t_q)
                    .real(tau)
                    .real(eps_ref)
                    .text(if correlations_negligible { "true" } else { "false" })
                    .finish(),
            );
            json!({
                "coupled": true,
                "t_pq": num(t_pq),
                "t_q": num(t_q),
                "tau": num(tau),
                "ratio": num(t_q / t_pq),
                "correlations_negligible": correlations_negligible,
            })
        }
        TimescaleDiagnostics::Uncoupled { t_q, .. } => {
            table.rows.push(
                Row::new().text("inf").real(t_q).text("inf").real(eps_ref).text("true").finish(),
            );
            json!({
                "coupled": false,
                "t_pq": num(f64::INFINITY),
                "t_q": num(t_q),
                "tau": num(f64::INFINITY),
                "correlations_negligible": true,
            })
        }
    };
    let mut diag = ok_diag();
    diag.warnings.push("timescales are order-of-magnitude heuristics from block norms".into());
    Ok((json!({ "eps_ref": num(eps_ref) }), payload, diag, table, None))
}

// ---------------------------------------------------------------------------

fn catalog(cfg: &RunConfig) -> Result<Parts, CliError> {
    let mut table = Table::new();
    for c in ["name", "d_sys", "d_env", "energy_scale", "fingerprint"] {
        table.column(c);
    }
    let mut entries = BTreeMap::new();
    for name in CATALOG_NAMES {
        let m = catalog_model(name, cfg.seed()).map_err(core("catalog"))?;
        let info = model_info(&m);
        table.rows.push(
            Row::new()
                .text(name)
                .text(&info.d_sys.to_string())
                .text(&info.d_env.to_string())
                .real(m.energy_scale())
                .text(&info.fingerprint)
                .finish(),
        );
        entries.insert(
            name.to_string(),
            json!({
                "d_sys": info.d_sys,
                "d_env": info.d_env,
                "energy_scale": num(m.energy_scale()),
                "fingerprint": info.fingerprint,
                "conserved_sector": m.conserved_projector().is_some(),
            }),
        );
    }
    Ok((json!({}), json!({ "models": entries }), ok_diag(), table, None))
}
