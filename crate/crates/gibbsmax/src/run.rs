//! The four experiment commands.

use std::path::PathBuf;

use gibbsmax_core::bounds::{self, BoundConfig, BoundReport, Verdict};
use gibbsmax_core::quench::{self, quadrature_oracle, McConfig, DEFAULT_RESOLUTION};
use gibbsmax_core::rem::{self, PressureCurve};
use gibbsmax_core::{IndexedEnsemble, Observable};
use serde_json::{json, Value};

use crate::config::{parse_observable, Built, Command, EnsembleDef, EnsembleSpec, ExperimentConfig, Format};
use crate::error::{CliError, EXIT_OK, EXIT_ORACLE_MISMATCH, EXIT_VIOLATED};
use crate::exec::RayonExecutor;
use crate::svg::{LineChart, Series};
use crate::table::{Cell, Table};

/// Tolerance of the replica identity between two quadrature evaluations.
pub const REPLICA_TOLERANCE: f64 = 1e-6;
/// Monte Carlo and oracle must agree within this many standard errors.
pub const ORACLE_Z: f64 = 3.0;

/// What a run produced, before anything is written.
pub struct RunOutcome {
    pub exit_code: i32,
    pub table: Table,
    /// Run-level facts for JSON output and the summary line.
    pub meta: Value,
    pub svg: Option<String>,
}

/// Output files written by [`emit`].
#[derive(Debug, Default)]
pub struct Written {
    pub data: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

fn executor(cfg: &ExperimentConfig) -> Result<RayonExecutor, CliError> {
    match cfg.threads {
        Some(t) => RayonExecutor::with_threads(t).map_err(|e| CliError::Config(format!("thread pool: {e}"))),
        None => Ok(RayonExecutor::global()),
    }
}

fn build(cfg: &ExperimentConfig) -> Result<Built, CliError> {
    cfg.ensemble
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("{} needs an ensemble", cfg.command)))?
        .resolve()?
        .build()
}

fn need_grid(cfg: &ExperimentConfig) -> Result<&[f64], CliError> {
    if cfg.beta_grid.is_empty() {
        return Err(CliError::Config(format!("{} needs a beta grid", cfg.command)));
    }
    Ok(&cfg.beta_grid)
}

/// Runs the configured command.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let exec = executor(cfg)?;
    let mc = McConfig::new(cfg.n_samples, cfg.seed).with_executor(&exec);
    match cfg.command {
        Command::Estimate => estimate(cfg, &mc),
        Command::Bounds => bounds_cmd(cfg, &mc),
        Command::RemSweep => rem_sweep(cfg, &mc),
        Command::OracleCheck => oracle_check(cfg, &mc),
    }
}

fn estimate(cfg: &ExperimentConfig, mc: &McConfig<'_>) -> Result<RunOutcome, CliError> {
    let built = build(cfg)?;
    let ens = built.ensemble();
    let grid = need_grid(cfg)?;
    let observables = if cfg.observables.is_empty() {
        vec![Observable::GibbsAverage]
    } else {
        cfg.observables
            .iter()
            .map(|s| parse_observable(s))
            .collect::<Result<_, _>>()?
    };
    let probes: Vec<(Observable, f64)> = observables
        .iter()
        .flat_map(|o| grid.iter().map(move |&b| (o.clone(), b)))
        .collect();
    let estimates = quench::mc_estimate_many(ens, &probes, mc)?;

    let mut table = Table::new(&["observable", "beta", "mean", "se", "n_samples", "seed"], &[]);
    for (q, (_, beta)) in estimates.iter().zip(&probes) {
        table.push(vec![
            q.observable.to_string().into(),
            (*beta).into(),
            q.mean.into(),
            q.std_error.into(),
            Cell::Int(q.n_samples as u64),
            Cell::Int(q.seed),
        ]);
    }
    Ok(RunOutcome {
        exit_code: EXIT_OK,
        table,
        meta: json!({ "size": ens.len() }),
        svg: None,
    })
}

fn report_row(r: &BoundReport) -> Vec<Cell> {
    let mut row: Vec<Cell> = r.csv_fields().into_iter().map(Cell::Text).collect();
    for (i, v) in [
        r.beta,
        r.lhs.mean,
        r.lhs.std_error,
        r.rhs.mean,
        r.rhs.std_error,
        r.slack,
        r.z,
    ]
    .into_iter()
    .enumerate()
    {
        row[i + 1] = Cell::Num(v);
    }
    row.push(r.direction.as_str().into());
    row.push(r.out_of_regime.into());
    row.push(r.note.clone().into());
    row
}

fn bounds_cmd(cfg: &ExperimentConfig, mc: &McConfig<'_>) -> Result<RunOutcome, CliError> {
    let built = build(cfg)?;
    let ens = built.ensemble();
    let grid = need_grid(cfg)?;
    let bcfg = BoundConfig {
        packing_scale: cfg.packing_scale,
        ..BoundConfig::with_c(cfg.c)
    };
    bcfg.validate()?;

    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    let threshold = match quench::beta_star(ens, bcfg.c, mc, DEFAULT_RESOLUTION) {
        Ok(t) => Some(t),
        Err(e @ gibbsmax_core::Error::UnboundedThreshold { .. }) => {
            skipped.push(format!("threshold-dependent bounds skipped: {e}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let iid = ens.iid_variance().is_some();
    for &beta in grid {
        reports.push(bounds::g_upper(ens, beta, mc, &bcfg)?);
        reports.push(bounds::g_upper_entropy_form(ens, beta, mc, &bcfg)?);
        if let Some(th) = &threshold {
            reports.push(bounds::g_lower_lowtemp(ens, beta, th, mc, &bcfg)?);
            if iid {
                reports.push(bounds::g_lower_iid_with_threshold(ens, beta, th, mc, &bcfg)?);
            }
        }
        reports.push(bounds::phi_upper(ens, beta, mc, &bcfg)?);
        if iid {
            reports.push(bounds::phi_lower_iid(ens, beta, mc, &bcfg)?);
        }
        if beta > 0.0 {
            reports.push(bounds::soft_super_sudakov(ens, beta, mc, &bcfg)?.report);
        }
    }
    let (upper, lower) = bounds::max_bounds(ens, mc, &bcfg)?;
    reports.push(upper);
    reports.push(lower);

    let mut table = Table::new(&BoundReport::CSV_HEADER, &["direction", "out_of_regime", "note"]);
    for r in &reports {
        table.push(report_row(r));
    }
    let violated = reports.iter().filter(|r| r.verdict == Verdict::Violated).count();
    let inconclusive = reports.iter().filter(|r| r.verdict == Verdict::Inconclusive).count();
    Ok(RunOutcome {
        exit_code: if violated > 0 { EXIT_VIOLATED } else { EXIT_OK },
        table,
        meta: json!({
            "size": ens.len(),
            "beta_star": threshold.as_ref().map(|t| t.beta_star),
            "reports": reports.len(),
            "violated": violated,
            "inconclusive": inconclusive,
            "skipped": skipped,
        }),
        svg: None,
    })
}

fn rem_sweep(cfg: &ExperimentConfig, mc: &McConfig<'_>) -> Result<RunOutcome, CliError> {
    let model = match build(cfg)? {
        Built::Rem(m) => m,
        Built::Plain(_) => return Err(CliError::Config("rem-sweep needs a rem ensemble (--spins)".into())),
    };
    let grid = need_grid(cfg)?;
    let curve = rem::pressure_sweep(&model, grid, mc, cfg.c)?;
    let mut table = Table::new(&rem::PressureRow::CSV_HEADER, &[]);
    for r in &curve.rows {
        table.push(vec![
            r.beta.into(),
            r.p_hat.mean.into(),
            r.p_hat.std_error.into(),
            r.q_lower.into(),
            r.q_upper_min.into(),
            r.q_upper_cap.into(),
            r.limit.into(),
            r.verdict.as_str().into(),
        ]);
    }
    let svg = cfg.plot.then(|| pressure_chart(&curve).render());
    let violated = curve.rows.iter().any(|r| r.verdict == Verdict::Violated);
    Ok(RunOutcome {
        exit_code: if violated { EXIT_VIOLATED } else { EXIT_OK },
        table,
        meta: json!({
            "n_spins": curve.n_spins,
            "beta_c": rem::beta_c(),
            "beta_star": curve.threshold.beta_star,
            "integral_check_holds": curve.integral.holds,
            "integral_max_abs_residual": curve.integral.max_abs_residual,
        }),
        svg,
    })
}

/// The five sweep curves against `β`.
pub fn pressure_chart(curve: &PressureCurve) -> LineChart {
    let series = |name: &str, color: &'static str, dashed: bool, f: &dyn Fn(&rem::PressureRow) -> f64| Series {
        name: name.to_string(),
        color,
        dashed,
        points: curve.rows.iter().map(|r| (r.beta, f(r))).collect(),
    };
    LineChart {
        title: format!("REM quenched pressure, N = {}", curve.n_spins),
        x_label: "beta".into(),
        y_label: "pressure".into(),
        series: vec![
            series("P_N estimate", "#000000", false, &|r| r.p_hat.mean),
            series("lower Q", "#1f77b4", false, &|r| r.q_lower),
            series("upper Q (min)", "#d62728", false, &|r| r.q_upper_min),
            series("upper Q (cap)", "#ff7f0e", true, &|r| r.q_upper_cap),
            series("N -> inf limit", "#2ca02c", true, &|r| r.limit),
        ],
    }
}

/// Small fixtures used by `oracle-check` when no ensemble is given.
pub fn oracle_fixtures() -> Vec<(&'static str, IndexedEnsemble)> {
    let iid = IndexedEnsemble::build_iid(2, 1.0).expect("valid fixture");
    let corr = IndexedEnsemble::build_from_covariance(
        vec!["a".into(), "b".into(), "c".into()],
        &[vec![1.0, 0.4, 0.1], vec![0.4, 1.5, 0.3], vec![0.1, 0.3, 0.8]],
    )
    .expect("valid fixture");
    vec![("iid2", iid), ("corr3", corr)]
}

/// Observables compared against the quadrature oracle.
pub fn oracle_observables() -> Vec<Observable> {
    vec![
        Observable::GibbsAverage,
        Observable::FreeEnergy,
        Observable::ParticipationRatio,
        Observable::KlToUniform,
        Observable::RenyiToUniform(0.5),
    ]
}

fn oracle_check(cfg: &ExperimentConfig, mc: &McConfig<'_>) -> Result<RunOutcome, CliError> {
    let fixtures = match &cfg.ensemble {
        Some(spec) => vec![("custom", spec.resolve()?.build()?.ensemble().clone())],
        None => oracle_fixtures(),
    };
    let grid: Vec<f64> = if cfg.beta_grid.is_empty() {
        vec![0.25, 1.0, 4.0]
    } else {
        cfg.beta_grid.clone()
    };
    let nodes = cfg.quadrature_nodes;
    let mut table = Table::new(
        &[
            "ensemble",
            "check",
            "observable",
            "beta",
            "oracle",
            "value",
            "se",
            "diff",
            "tolerance",
            "pass",
        ],
        &[],
    );
    let mut failures = 0;
    for (name, ens) in &fixtures {
        let probes: Vec<(Observable, f64)> = oracle_observables()
            .into_iter()
            .flat_map(|o| grid.iter().map(move |&b| (o.clone(), b)))
            .collect();
        let estimates = quench::mc_estimate_many(ens, &probes, mc)?;
        for (q, (obs, beta)) in estimates.iter().zip(&probes) {
            let oracle = quadrature_oracle(ens, obs, *beta, nodes)?;
            let diff = q.mean - oracle;
            let tol = ORACLE_Z * q.std_error;
            let pass = diff.abs() <= tol + 1e-12;
            failures += usize::from(!pass);
            table.push(vec![
                (*name).into(),
                "mc_vs_oracle".into(),
                obs.to_string().into(),
                (*beta).into(),
                oracle.into(),
                q.mean.into(),
                q.std_error.into(),
                diff.into(),
                tol.into(),
                pass.into(),
            ]);
        }
        for &beta in &grid {
            let direct = quadrature_oracle(ens, &Observable::GibbsAverage, beta, nodes)?;
            let replica = quadrature_oracle(ens, &Observable::ReplicaGibbs, beta, nodes)?;
            let diff = replica - direct;
            let pass = diff.abs() <= REPLICA_TOLERANCE;
            failures += usize::from(!pass);
            table.push(vec![
                (*name).into(),
                "replica_identity".into(),
                Observable::ReplicaGibbs.to_string().into(),
                beta.into(),
                direct.into(),
                replica.into(),
                0.0.into(),
                diff.into(),
                REPLICA_TOLERANCE.into(),
                pass.into(),
            ]);
        }
    }
    Ok(RunOutcome {
        exit_code: if failures > 0 { EXIT_ORACLE_MISMATCH } else { EXIT_OK },
        table,
        meta: json!({ "failures": failures, "nodes_per_dim": nodes }),
        svg: None,
    })
}

/// Comment line carried by every CSV file.
pub fn header_comment(cfg: &ExperimentConfig) -> Result<String, CliError> {
    Ok(format!(
        "config_hash={} seed={} command={}",
        cfg.hash()?,
        cfg.seed,
        cfg.command
    ))
}

/// The data file contents in the configured format.
pub fn render(cfg: &ExperimentConfig, outcome: &RunOutcome) -> Result<String, CliError> {
    match cfg.format {
        Format::Csv => Ok(outcome.table.to_csv(&header_comment(cfg)?)?),
        Format::Json => {
            let doc = json!({
                "config_hash": cfg.hash()?,
                "seed": cfg.seed,
                "command": cfg.command.as_str(),
                "meta": outcome.meta,
                "rows": outcome.table.to_json_rows(),
            });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

fn with_extension(prefix: &std::path::Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes the data file (or prints it when no output prefix is set) and
/// the SVG chart if one was produced.
pub fn emit(cfg: &ExperimentConfig, outcome: &RunOutcome) -> Result<Written, CliError> {
    let text = render(cfg, outcome)?;
    let mut written = Written::default();
    match &cfg.output {
        None => print!("{text}"),
        Some(prefix) => {
            if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let ext = match cfg.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            let path = with_extension(prefix, ext);
            std::fs::write(&path, text)?;
            written.data = Some(path);
            if let Some(svg) = &outcome.svg {
                let path = with_extension(prefix, "svg");
                std::fs::write(&path, svg)?;
                written.svg = Some(path);
            }
        }
    }
    Ok(written)
}

/// A REM ensemble spec.
pub fn rem_spec(n_spins: usize) -> EnsembleSpec {
    EnsembleSpec::Inline(EnsembleDef::Rem { n_spins })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: Command) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(command);
        c.n_samples = 400;
        c.seed = 5;
        c
    }

    #[test]
    fn estimate_at_zero_temperature_is_centered() {
        let mut c = cfg(Command::Estimate);
        c.ensemble = Some(EnsembleSpec::Inline(EnsembleDef::Iid { n: 2, variance: 1.0 }));
        c.beta_grid = vec![0.0];
        let out = run(&c).unwrap();
        assert_eq!(out.table.rows.len(), 1);
        let (Cell::Num(mean), Cell::Num(se)) = (&out.table.rows[0][2], &out.table.rows[0][3]) else {
            panic!()
        };
        assert!(mean.abs() <= 3.0 * se);
    }

    #[test]
    fn missing_pieces_are_config_errors() {
        let c = cfg(Command::Estimate);
        assert!(matches!(run(&c), Err(CliError::Config(_))));
        let mut c = cfg(Command::RemSweep);
        c.ensemble = Some(EnsembleSpec::Inline(EnsembleDef::Iid { n: 2, variance: 1.0 }));
        c.beta_grid = vec![0.0];
        assert!(matches!(run(&c), Err(CliError::Config(_))));
    }

    #[test]
    fn small_bounds_run_has_no_violations() {
        let mut c = cfg(Command::Bounds);
        c.ensemble = Some(EnsembleSpec::Inline(EnsembleDef::Iid { n: 4, variance: 1.0 }));
        c.beta_grid = vec![0.0, 1.0];
        let out = run(&c).unwrap();
        assert_eq!(out.exit_code, EXIT_OK);
        // per beta: 2 upper g, lowtemp, iid g, phi upper, phi lower; super-Sudakov at beta > 0; 2 max
        assert_eq!(out.table.rows.len(), 6 + 7 + 2);
    }

    #[test]
    fn oracle_check_default_fixtures() {
        let mut c = cfg(Command::OracleCheck);
        c.n_samples = 2000;
        c.quadrature_nodes = 32;
        c.beta_grid = vec![1.0];
        let out = run(&c).unwrap();
        assert_eq!(out.table.rows.len(), 2 * (5 + 1));
    }

    #[test]
    fn sweep_chart_has_five_curves() {
        let mut c = cfg(Command::RemSweep);
        c.ensemble = Some(rem_spec(4));
        c.beta_grid = vec![0.0, 0.5, 1.0];
        c.plot = true;
        c.output = Some("unused".into());
        let out = run(&c).unwrap();
        assert_eq!(out.svg.as_ref().unwrap().matches("<polyline").count(), 5);
        let csv = render(&c, &out).unwrap();
        assert!(csv.starts_with("# config_hash="));
        assert_eq!(csv.lines().count(), 2 + 3);
    }
}
