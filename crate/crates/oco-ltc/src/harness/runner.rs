//! Cell execution and the four harness commands.
//!
//! * `run`: every (horizon, seed) cell of the config, per-step traces
//!   always written.
//! * `sweep`: the same cells plus a log-log rate fit over the horizons.
//! * `verify`: a fixed grid of environments and engines, each run put
//!   through the full certificate battery.
//! * `fit`: re-fit rates from an existing summary file.
//!
//! All commands write `summary.csv` with one fixed 16-column schema; rows
//! are emitted in a deterministic order so identical invocations produce
//! identical bytes (the wall-clock column aside). Columns that do not apply
//! to an engine are left empty.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::algorithms::{self, RunContext, RunTrace};
use crate::core::{make_schedule, ScheduleParams, ScheduleVariant};
use crate::environments::{
    self, generate_environment, ConstraintKind, CostKind, Environment, EnvironmentSpec,
};
use crate::error::Error;
use crate::geometry::{FeasibleSetX, Regularizer};
use crate::harness::{ExperimentConfig, Mode, VerifySection};
use crate::linalg;
use crate::metrics::{self, Comparator};
use crate::predictors::{self, PredictorParams};
use crate::subproblem::{brute_force_step, composite_objective, CompositeStepSpec};
use crate::verify;
use crate::Result;

/// Output options shared by all commands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Directory for `summary.csv`, reports, and traces.
    pub out_dir: PathBuf,
    /// Whether `sweep` and `verify` also write per-step traces (`run`
    /// always does).
    pub write_traces: bool,
    /// Offset added to every environment seed.
    pub seed_offset: u64,
}

/// Column order of `summary.csv`. Stable; downstream tooling may rely on it.
pub const SUMMARY_COLUMNS: [&str; 16] = [
    "algorithm",
    "T",
    "seed",
    "c_exp",
    "a_exp",
    "eta",
    "gamma",
    "R_T",
    "C_T",
    "thm3_rhs_regret",
    "thm3_rhs_violation",
    "lemma1_slack_1",
    "lemma1_slack_2",
    "queue_residual",
    "solver_flags",
    "wall_ms",
];

/// One summary line. Optional fields print as empty cells: the inequality
/// columns only apply to the hint-driven engine, the hint-accuracy exponent
/// only to runs that take hints.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub horizon: usize,
    pub seed: u64,
    pub c_exp: f64,
    pub a_exp: Option<f64>,
    pub eta: f64,
    pub gamma: f64,
    pub regret: f64,
    pub violation: f64,
    pub thm3_rhs_regret: Option<f64>,
    pub thm3_rhs_violation: Option<f64>,
    pub lemma1_slack_1: Option<f64>,
    pub lemma1_slack_2: Option<f64>,
    pub queue_residual: f64,
    pub solver_flags: usize,
    pub wall_ms: f64,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl SummaryRow {
    /// The row as CSV cells, in [`SUMMARY_COLUMNS`] order.
    pub fn record(&self) -> [String; 16] {
        [
            self.algorithm.clone(),
            format!("{}", self.horizon),
            format!("{}", self.seed),
            format!("{}", self.c_exp),
            fmt_opt(self.a_exp),
            format!("{}", self.eta),
            format!("{}", self.gamma),
            format!("{}", self.regret),
            format!("{}", self.violation),
            fmt_opt(self.thm3_rhs_regret),
            fmt_opt(self.thm3_rhs_violation),
            fmt_opt(self.lemma1_slack_1),
            fmt_opt(self.lemma1_slack_2),
            format!("{}", self.queue_residual),
            format!("{}", self.solver_flags),
            format!("{}", self.wall_ms),
        ]
    }
}

/// Writes rows (in the given order) under the fixed header.
pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

fn parse_cell_f64(cell: &str, column: &'static str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| {
        Error::invalid_input("read_summary", format!("bad {column} value `{cell}`"))
    })
}

fn parse_cell_opt(cell: &str, column: &'static str) -> Result<Option<f64>> {
    if cell.is_empty() {
        Ok(None)
    } else {
        parse_cell_f64(cell, column).map(Some)
    }
}

/// Reads a summary file back; rejects files whose header is not exactly
/// [`SUMMARY_COLUMNS`].
pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let expected: Vec<&str> = SUMMARY_COLUMNS.to_vec();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::invalid_input(
            "read_summary",
            format!("`{}` is not a summary file (wrong header)", path.display()),
        ));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let rec = record?;
        if rec.len() != SUMMARY_COLUMNS.len() {
            return Err(Error::invalid_input(
                "read_summary",
                format!("row with {} cells, expected {}", rec.len(), SUMMARY_COLUMNS.len()),
            ));
        }
        rows.push(SummaryRow {
            algorithm: rec[0].to_string(),
            horizon: rec[1].parse().map_err(|_| {
                Error::invalid_input("read_summary", format!("bad T value `{}`", &rec[1]))
            })?,
            seed: rec[2].parse().map_err(|_| {
                Error::invalid_input("read_summary", format!("bad seed value `{}`", &rec[2]))
            })?,
            c_exp: parse_cell_f64(&rec[3], "c_exp")?,
            a_exp: parse_cell_opt(&rec[4], "a_exp")?,
            eta: parse_cell_f64(&rec[5], "eta")?,
            gamma: parse_cell_f64(&rec[6], "gamma")?,
            regret: parse_cell_f64(&rec[7], "R_T")?,
            violation: parse_cell_f64(&rec[8], "C_T")?,
            thm3_rhs_regret: parse_cell_opt(&rec[9], "thm3_rhs_regret")?,
            thm3_rhs_violation: parse_cell_opt(&rec[10], "thm3_rhs_violation")?,
            lemma1_slack_1: parse_cell_opt(&rec[11], "lemma1_slack_1")?,
            lemma1_slack_2: parse_cell_opt(&rec[12], "lemma1_slack_2")?,
            queue_residual: parse_cell_f64(&rec[13], "queue_residual")?,
            solver_flags: rec[14].parse().map_err(|_| {
                Error::invalid_input(
                    "read_summary",
                    format!("bad solver_flags value `{}`", &rec[14]),
                )
            })?,
            wall_ms: parse_cell_f64(&rec[15], "wall_ms")?,
        });
    }
    Ok(rows)
}

/// Everything one executed cell yields.
pub struct CellOutcome {
    pub row: SummaryRow,
    pub trace: RunTrace,
    pub env: Environment,
    pub comparator: Comparator,
    /// Whether every certificate computed for this cell passed.
    pub checks_pass: bool,
    /// Human-readable descriptions of the failures, if any.
    pub check_failures: Vec<String>,
}

fn schedule_for(
    algorithm: &str,
    horizon: usize,
    c_exp: f64,
    a_exp: f64,
    g_bound: f64,
) -> Result<ScheduleParams> {
    if algorithm == "predictive" {
        make_schedule(horizon, c_exp, ScheduleVariant::Predictive, g_bound)?.with_a_exp(a_exp)
    } else {
        make_schedule(horizon, c_exp, ScheduleVariant::Baseline, g_bound)
    }
}

/// Runs one (horizon, seed) cell of a config: generate, run, score, check.
pub fn execute_cell(
    config: &ExperimentConfig,
    horizon: usize,
    env_seed: u64,
) -> Result<CellOutcome> {
    let algorithm = config.experiment.algorithm.as_str();
    let engine = algorithms::by_name(algorithm)?;
    let env = generate_environment(&config.environment_spec(horizon, env_seed)?)?;
    let schedule = schedule_for(
        algorithm,
        horizon,
        config.experiment.c_exp,
        config.predictor.a_exp,
        env.g_bound,
    )?;
    let predictor = if engine.needs_predictor() {
        Some(predictors::build(
            &config.predictor.kind,
            &config.predictor_params(env_seed),
        )?)
    } else {
        None
    };
    let ctx = RunContext {
        env: &env,
        schedule: &schedule,
        predictor: predictor.as_deref(),
        solver: config.solver,
    };
    let started = Instant::now();
    let trace = engine.run(&ctx)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let comparator = metrics::compute_comparator(&env)?;
    let regret = metrics::regret(&trace, &env, &comparator)?;
    let violation = metrics::violation(&trace);
    let identity = verify::check_queue_identity(&trace)?;

    let mut check_failures = Vec::new();
    if !identity.pass {
        check_failures.push(format!(
            "T={horizon} seed={env_seed}: queue residual {} above tolerance {}",
            identity.residual, identity.tolerance
        ));
    }
    let (mut lemma_cols, mut thm_cols) = ((None, None), (None, None));
    let mut a_exp_col = None;
    if algorithm == "predictive" {
        a_exp_col = Some(config.predictor.a_exp);
        let lemma = verify::check_lemma1(&trace, &env, &comparator.point, false)?;
        if !lemma.pass_first || !lemma.pass_second {
            check_failures.push(format!(
                "T={horizon} seed={env_seed}: descent slacks {} / {} below allowance {}",
                lemma.slack_first, lemma.slack_second, lemma.allowance
            ));
        }
        let thm = verify::check_theorem3_bounds(&trace, &env, &comparator)?;
        if !thm.pass_regret || !thm.pass_violation {
            check_failures.push(format!(
                "T={horizon} seed={env_seed}: bound check failed \
                 (regret {} vs {}, violation {} vs {})",
                thm.regret, thm.regret_bound, thm.violation, thm.violation_bound
            ));
        }
        lemma_cols = (Some(lemma.slack_first), Some(lemma.slack_second));
        thm_cols = (Some(thm.regret_bound), Some(thm.violation_bound));
    }

    let row = SummaryRow {
        algorithm: algorithm.to_string(),
        horizon,
        seed: env_seed,
        c_exp: config.experiment.c_exp,
        a_exp: a_exp_col,
        eta: schedule.eta,
        gamma: schedule.gamma,
        regret,
        violation,
        thm3_rhs_regret: thm_cols.0,
        thm3_rhs_violation: thm_cols.1,
        lemma1_slack_1: lemma_cols.0,
        lemma1_slack_2: lemma_cols.1,
        queue_residual: identity.residual,
        solver_flags: trace.solver_flags,
        wall_ms,
    };
    Ok(CellOutcome {
        checks_pass: check_failures.is_empty(),
        check_failures,
        row,
        trace,
        env,
        comparator,
    })
}

fn join_coords(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Writes the per-step record of one run:
/// `step, cost_value, violation_l1, queue_l1, x, z, hint`, vector cells
/// space-separated, empty where the engine has no such quantity.
pub fn write_trace(dir: &Path, trace: &RunTrace, env_seed: u64) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!(
        "{}-T{}-s{}.csv",
        trace.algorithm,
        trace.horizon(),
        env_seed
    ));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["step", "cost_value", "violation_l1", "queue_l1", "x", "z", "hint"])?;
    for t in 1..=trace.horizon() {
        let z_cell = trace
            .z
            .get(t - 1)
            .map(|z| join_coords(z.as_slice()))
            .unwrap_or_default();
        let hint_cell = trace
            .hints
            .get(t - 1)
            .map(|h| join_coords(h))
            .unwrap_or_default();
        w.write_record([
            format!("{t}"),
            format!("{}", trace.cost_values[t - 1]),
            format!("{}", linalg::norm1(&trace.violations[t - 1])),
            format!("{}", linalg::norm1(&trace.q[t - 1])),
            join_coords(trace.x[t - 1].as_slice()),
            z_cell,
            hint_cell,
        ])?;
    }
    w.flush()?;
    Ok(path)
}

fn run_cells(
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<Vec<CellOutcome>> {
    let mut cells = Vec::new();
    for &horizon in &config.experiment.horizons {
        for s in 0..config.experiment.seeds {
            cells.push((horizon, opts.seed_offset + s));
        }
    }
    let mut outcomes = cells
        .par_iter()
        .map(|&(horizon, seed)| execute_cell(config, horizon, seed))
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by_key(|o| (o.row.horizon, o.row.seed));
    Ok(outcomes)
}

fn report_cell_problems(outcomes: &[CellOutcome]) -> (bool, usize) {
    let flags: usize = outcomes.iter().map(|o| o.row.solver_flags).sum();
    let mut ok = flags == 0;
    for o in outcomes {
        for line in &o.check_failures {
            println!("check failed: {line}");
            ok = false;
        }
    }
    if flags > 0 {
        println!("DEGRADED: {flags} proximal solves missed their certificate tolerance");
    }
    (ok, flags)
}

/// Executes every cell of the config and writes summary plus per-step
/// traces. Returns whether all certificates passed and every solve was
/// certified.
pub fn cmd_run(config: &ExperimentConfig, opts: &RunOptions) -> Result<bool> {
    config.validate(Mode::Run)?;
    std::fs::create_dir_all(&opts.out_dir)?;
    let outcomes = run_cells(config, opts)?;
    let rows: Vec<SummaryRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    let summary_path = opts.out_dir.join("summary.csv");
    write_summary(&summary_path, &rows)?;
    let trace_dir = opts.out_dir.join("traces");
    for o in &outcomes {
        write_trace(&trace_dir, &o.trace, o.row.seed)?;
    }
    println!(
        "wrote {} ({} rows) and {} trace files",
        summary_path.display(),
        rows.len(),
        outcomes.len()
    );
    let (ok, _) = report_cell_problems(&outcomes);
    Ok(ok)
}

/// Group key for rate fitting: engine name plus the two exponents that set
/// the reference rates (bit patterns keep the key orderable).
type FitKey = (String, u64, u64);

fn fit_key(row: &SummaryRow) -> FitKey {
    (
        row.algorithm.clone(),
        row.c_exp.to_bits(),
        row.a_exp.unwrap_or(f64::NAN).to_bits(),
    )
}

/// Builds the rate report for a set of summary rows: per group, the mean
/// clipped regret and mean violation per horizon, fitted slopes, and the
/// reference exponents implied by the step-size schedule. Returns the text
/// and whether at least one fit was produced.
fn rate_report(rows: &[SummaryRow]) -> (String, bool) {
    let mut groups: BTreeMap<FitKey, BTreeMap<usize, Vec<(f64, f64)>>> = BTreeMap::new();
    for row in rows {
        groups
            .entry(fit_key(row))
            .or_default()
            .entry(row.horizon)
            .or_default()
            .push((row.regret, row.violation));
    }
    let mut text = String::new();
    let mut any_fit = false;
    for ((algorithm, c_bits, a_bits), by_t) in &groups {
        let c_exp = f64::from_bits(*c_bits);
        let a_exp = f64::from_bits(*a_bits);
        text.push_str(&format!("group algorithm={algorithm} c_exp={c_exp}"));
        if !a_exp.is_nan() {
            text.push_str(&format!(" a_exp={a_exp}"));
        }
        text.push('\n');

        let mut regret_points = Vec::new();
        let mut violation_points = Vec::new();
        for (t, vals) in by_t {
            let n = vals.len() as f64;
            let mean_pos_regret =
                vals.iter().map(|(r, _)| r.max(0.0)).sum::<f64>() / n;
            let mean_violation = vals.iter().map(|(_, c)| c).sum::<f64>() / n;
            text.push_str(&format!(
                "  T={t}: mean clipped regret {mean_pos_regret:.6}, \
                 mean violation {mean_violation:.6} ({} seeds)\n",
                vals.len()
            ));
            regret_points.push((*t, mean_pos_regret));
            violation_points.push((*t, mean_violation));
        }

        let regret_ref = if !a_exp.is_nan() {
            (1.0 - a_exp - c_exp).max(c_exp)
        } else {
            (1.0 - c_exp).max(c_exp)
        };
        let violation_ref = 0.5 - 0.5 * c_exp;
        for (label, points, reference) in [
            ("regret", regret_points, regret_ref),
            ("violation", violation_points, violation_ref),
        ] {
            match metrics::fit_rate(&points) {
                Ok(fit) => {
                    any_fit = true;
                    text.push_str(&format!(
                        "  {label}: fitted T^{:.4} (R^2 {:.4}), reference T^{:.4}\n",
                        fit.slope, fit.r_squared, reference
                    ));
                }
                Err(_) => {
                    text.push_str(&format!(
                        "  {label}: not fitted (needs >= 2 horizons with \
                         positive means), reference T^{:.4}\n",
                        reference
                    ));
                }
            }
        }
    }
    (text, any_fit)
}

/// Runs a horizon sweep and fits rates. Traces are written only when
/// requested. Returns whether certificates passed, solves were certified,
/// and the rates could be fitted.
pub fn cmd_sweep(config: &ExperimentConfig, opts: &RunOptions) -> Result<bool> {
    config.validate(Mode::Sweep)?;
    std::fs::create_dir_all(&opts.out_dir)?;
    let outcomes = run_cells(config, opts)?;
    let rows: Vec<SummaryRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    let summary_path = opts.out_dir.join("summary.csv");
    write_summary(&summary_path, &rows)?;
    if opts.write_traces {
        let trace_dir = opts.out_dir.join("traces");
        for o in &outcomes {
            write_trace(&trace_dir, &o.trace, o.row.seed)?;
        }
    }
    let (mut text, any_fit) = rate_report(&rows);
    let flags: usize = rows.iter().map(|r| r.solver_flags).sum();
    if flags > 0 {
        text.push_str(&format!("DEGRADED: {flags} uncertified proximal solves\n"));
    } else {
        text.push_str("all proximal solves certified\n");
    }
    let report_path = opts.out_dir.join("rate_report.txt");
    std::fs::write(&report_path, &text)?;
    print!("{text}");
    println!("wrote {} and {}", summary_path.display(), report_path.display());
    let (checks_ok, _) = report_cell_problems(&outcomes);
    Ok(checks_ok && any_fit)
}

/// Re-fits rates from an existing `summary.csv` in the output directory and
/// rewrites `rate_report.txt` next to it.
pub fn cmd_fit(opts: &RunOptions) -> Result<bool> {
    let summary_path = opts.out_dir.join("summary.csv");
    let rows = read_summary(&summary_path)?;
    if rows.is_empty() {
        return Err(Error::invalid_input("cmd_fit", "summary file has no rows"));
    }
    let (text, any_fit) = rate_report(&rows);
    let report_path = opts.out_dir.join("rate_report.txt");
    std::fs::write(&report_path, &text)?;
    print!("{text}");
    println!("wrote {}", report_path.display());
    Ok(any_fit)
}

/// One scheduled battery run.
#[derive(Debug, Clone)]
struct BatteryUnit {
    idx: usize,
    algorithm: &'static str,
    horizon: usize,
    p: usize,
    m: usize,
    cell_idx: usize,
    seed_idx: u64,
}

/// Per-cell styling: a deterministic function of the cell index that walks
/// through all cost processes, constraint processes, domain shapes, hint
/// providers, and step-size exponents.
#[derive(Debug, Clone)]
struct CellStyle {
    cost: CostKind,
    time_varying: bool,
    ball: bool,
    c_exp: f64,
    predictor: &'static str,
}

fn cell_style(cell_idx: usize) -> CellStyle {
    CellStyle {
        cost: match cell_idx % 3 {
            0 => CostKind::IidRandom,
            1 => CostKind::Drifting { sigma: 0.05 },
            _ => CostKind::PiecewiseConstant { segments: 4 },
        },
        time_varying: cell_idx % 2 == 1,
        ball: (cell_idx / 2) % 2 == 1,
        c_exp: [0.3, 0.5, 0.7][(cell_idx / 3) % 3],
        predictor: ["oracle-decay", "perfect", "last-value", "zero"][cell_idx % 4],
    }
}

fn battery_units(section: &VerifySection) -> Vec<BatteryUnit> {
    let mut units = Vec::new();
    let mut cell_idx = 0usize;
    for &horizon in &section.horizons {
        for &p in &section.p {
            for &m in &section.m {
                let style = cell_style(cell_idx);
                for seed_idx in 0..section.seeds_per_cell {
                    units.push(BatteryUnit {
                        idx: units.len(),
                        algorithm: "predictive",
                        horizon,
                        p,
                        m,
                        cell_idx,
                        seed_idx,
                    });
                }
                if !style.time_varying {
                    for seed_idx in 0..section.seeds_per_cell {
                        units.push(BatteryUnit {
                            idx: units.len(),
                            algorithm: "baseline",
                            horizon,
                            p,
                            m,
                            cell_idx,
                            seed_idx,
                        });
                    }
                }
                cell_idx += 1;
            }
        }
    }
    units
}

struct UnitResult {
    idx: usize,
    row: SummaryRow,
    trace: RunTrace,
    env_seed: u64,
    identity_pass: bool,
    lemma_pass: Option<bool>,
    thm_pass: Option<bool>,
    probes_pass: bool,
    spot_checks: usize,
    spot_passes: usize,
    failures: Vec<String>,
}

fn unit_env_spec(unit: &BatteryUnit, style: &CellStyle, env_seed: u64) -> Result<EnvironmentSpec> {
    let domain = if style.ball {
        FeasibleSetX::new_ball(vec![0.0; unit.p], 1.0)?
    } else {
        FeasibleSetX::centered_box(unit.p, 1.0)?
    };
    Ok(EnvironmentSpec {
        p: unit.p,
        m: unit.m,
        horizon: unit.horizon,
        cost: style.cost.clone(),
        constraints: if style.time_varying {
            ConstraintKind::TimeVaryingAffine { sigma: 0.02 }
        } else {
            ConstraintKind::StaticAffine
        },
        domain,
        g_bound: 1.0,
        f_bound: None,
        margin: 0.1,
        band: 0.2,
        seed: env_seed,
    })
}

/// 200 uniformly drawn feasible points must all cost at least as much as
/// the comparator, up to `1e-6` of the problem scale.
fn comparator_probes(env: &Environment, comp: &Comparator, env_seed: u64) -> Result<(bool, f64)> {
    let mut csum = vec![0.0; env.domain.dim()];
    for c in &env.costs {
        linalg::axpy_mut(&mut csum, 1.0, c.gradient());
    }
    let scale = (linalg::norm2(&csum) * env.domain.diameter()).max(1.0);
    let mut rng = ChaCha20Rng::seed_from_u64(
        env_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xC0FF_EE),
    );
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let y = metrics::random_feasible_point(env, &mut rng)?;
        let gap = linalg::dot(&csum, y.as_slice()) - comp.objective;
        worst = worst.min(gap);
    }
    Ok((worst >= -1e-6 * scale, worst))
}

/// Re-solves a few of the run's proximal steps with the exhaustive grid
/// reference (dimensions 1 and 2 only) and demands the recorded points do
/// at least as well, up to `1e-4`.
fn spot_check_solves(
    trace: &RunTrace,
    env: &Environment,
    failures: &mut Vec<String>,
    label: &str,
) -> Result<(usize, usize)> {
    let p = env.domain.dim();
    if p > 2 {
        return Ok((0, 0));
    }
    let resolution = if p == 1 { 1e-4 } else { 2e-3 };
    let horizon = trace.horizon();
    let steps: BTreeSet<usize> = [1, (horizon / 2).max(1), horizon].into_iter().collect();
    let mut checked = 0;
    let mut passed = 0;
    for &t in &steps {
        let (spec, recorded) = match trace.algorithm.as_str() {
            "predictive" => {
                let weights: &[f64] = if t == 1 {
                    &trace.q_hat0
                } else {
                    &trace.q_hat[t - 2]
                };
                let recorded = if t < horizon {
                    &trace.z[t]
                } else {
                    trace.z_final.as_ref().expect("predictive trace")
                };
                (
                    CompositeStepSpec {
                        linear: env.costs[t - 1].gradient(),
                        queue_weights: weights,
                        eta: trace.schedule.eta,
                        gamma: trace.schedule.gamma,
                        constraints: &env.constraints,
                        step: t,
                        anchor: &trace.z[t - 1],
                        domain: &env.domain,
                        regularizer: Regularizer::Quadratic,
                        f_bound: env.f_bound,
                    },
                    recorded,
                )
            }
            "baseline" => {
                let recorded = if t < horizon {
                    &trace.x[t]
                } else {
                    &trace.x_final
                };
                (
                    CompositeStepSpec {
                        linear: env.costs[t - 1].gradient(),
                        queue_weights: &trace.q_hat[t - 1],
                        eta: trace.schedule.eta / 2.0,
                        gamma: trace.schedule.gamma,
                        constraints: &env.constraints,
                        step: t,
                        anchor: &trace.x[t - 1],
                        domain: &env.domain,
                        regularizer: Regularizer::Quadratic,
                        f_bound: env.f_bound,
                    },
                    recorded,
                )
            }
            _ => continue,
        };
        let engine_obj = composite_objective(&spec, recorded)?;
        let (_, grid_obj) = brute_force_step(&spec, resolution)?;
        checked += 1;
        if engine_obj <= grid_obj + 1e-4 {
            passed += 1;
        } else {
            failures.push(format!(
                "{label}: step {t} solve is {} above the grid reference",
                engine_obj - grid_obj
            ));
        }
    }
    Ok((checked, passed))
}

fn run_battery_unit(
    config: &ExperimentConfig,
    opts: &RunOptions,
    unit: &BatteryUnit,
) -> Result<UnitResult> {
    let style = cell_style(unit.cell_idx);
    let env_seed = opts.seed_offset + unit.cell_idx as u64 * 1009 + unit.seed_idx;
    let env = generate_environment(&unit_env_spec(unit, &style, env_seed)?)?;
    let label = format!(
        "unit {} [{} T={} p={} m={} seed={}]",
        unit.idx, unit.algorithm, unit.horizon, unit.p, unit.m, env_seed
    );
    let mut failures = Vec::new();

    environments::verify_bounds(&env)?;

    let schedule = schedule_for(unit.algorithm, unit.horizon, style.c_exp, 0.5, env.g_bound)?;
    let predictor = if unit.algorithm == "predictive" {
        Some(predictors::build(
            style.predictor,
            &PredictorParams {
                a_exp: 0.5,
                delta: None,
                seed: env_seed.wrapping_mul(0x100_0000_01b3),
            },
        )?)
    } else {
        None
    };
    let engine = algorithms::by_name(unit.algorithm)?;
    let ctx = RunContext {
        env: &env,
        schedule: &schedule,
        predictor: predictor.as_deref(),
        solver: config.solver,
    };
    let started = Instant::now();
    let trace = engine.run(&ctx)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let comparator = metrics::compute_comparator(&env)?;
    let regret = metrics::regret(&trace, &env, &comparator)?;
    let violation = metrics::violation(&trace);

    let identity = verify::check_queue_identity(&trace)?;
    if !identity.pass {
        failures.push(format!(
            "{label}: queue residual {} above tolerance {}",
            identity.residual, identity.tolerance
        ));
    }

    let mut lemma_pass = None;
    let mut thm_pass = None;
    let (mut lemma_cols, mut thm_cols) = ((None, None), (None, None));
    let mut a_exp_col = None;
    if unit.algorithm == "predictive" {
        a_exp_col = Some(0.5);
        let lemma = verify::check_lemma1(
            &trace,
            &env,
            &comparator.point,
            config.verify.prefix_mode,
        )?;
        let ok = lemma.pass_first && lemma.pass_second;
        if !ok {
            let detail = lemma
                .per_prefix
                .as_ref()
                .and_then(|list| {
                    list.iter().find(|pre| {
                        pre.slack_first < -pre.allowance || pre.slack_second < -pre.allowance
                    })
                })
                .map(|pre| format!(" (first failing prefix: {})", pre.horizon))
                .unwrap_or_default();
            failures.push(format!(
                "{label}: descent slacks {} / {} below allowance {}{detail}",
                lemma.slack_first, lemma.slack_second, lemma.allowance
            ));
        }
        lemma_pass = Some(ok);
        lemma_cols = (Some(lemma.slack_first), Some(lemma.slack_second));

        let thm = verify::check_theorem3_bounds(&trace, &env, &comparator)?;
        let ok = thm.pass_regret && thm.pass_violation;
        if !ok {
            failures.push(format!(
                "{label}: bound check failed (regret {} vs {}, violation {} vs {})",
                thm.regret, thm.regret_bound, thm.violation, thm.violation_bound
            ));
        }
        thm_pass = Some(ok);
        thm_cols = (Some(thm.regret_bound), Some(thm.violation_bound));
    }

    let (probes_pass, worst_gap) = comparator_probes(&env, &comparator, env_seed)?;
    if !probes_pass {
        failures.push(format!(
            "{label}: a sampled feasible point undercuts the comparator by {}",
            -worst_gap
        ));
    }

    let (spot_checks, spot_passes) = spot_check_solves(&trace, &env, &mut failures, &label)?;

    let row = SummaryRow {
        algorithm: unit.algorithm.to_string(),
        horizon: unit.horizon,
        seed: env_seed,
        c_exp: style.c_exp,
        a_exp: a_exp_col,
        eta: schedule.eta,
        gamma: schedule.gamma,
        regret,
        violation,
        thm3_rhs_regret: thm_cols.0,
        thm3_rhs_violation: thm_cols.1,
        lemma1_slack_1: lemma_cols.0,
        lemma1_slack_2: lemma_cols.1,
        queue_residual: identity.residual,
        solver_flags: trace.solver_flags,
        wall_ms,
    };
    Ok(UnitResult {
        idx: unit.idx,
        row,
        trace,
        env_seed,
        identity_pass: identity.pass,
        lemma_pass,
        thm_pass,
        probes_pass,
        spot_checks,
        spot_passes,
        failures,
    })
}

/// Runs the full verification battery over the config's verify grid:
/// declared-bound audit, queue identity, both descent inequalities, both
/// end-to-end bounds, comparator optimality probes, and grid cross-checks
/// of individual proximal solves. Writes `summary.csv` and
/// `verify_report.txt`.
pub fn cmd_verify(config: &ExperimentConfig, opts: &RunOptions) -> Result<bool> {
    config.validate(Mode::Verify)?;
    std::fs::create_dir_all(&opts.out_dir)?;
    let units = battery_units(&config.verify);
    let mut results = units
        .par_iter()
        .map(|u| run_battery_unit(config, opts, u))
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|r| r.idx);

    let rows: Vec<SummaryRow> = results.iter().map(|r| r.row.clone()).collect();
    let summary_path = opts.out_dir.join("summary.csv");
    write_summary(&summary_path, &rows)?;
    if opts.write_traces {
        let trace_dir = opts.out_dir.join("traces");
        for r in &results {
            write_trace(&trace_dir, &r.trace, r.env_seed)?;
        }
    }

    let total = results.len();
    let predictive = results.iter().filter(|r| r.lemma_pass.is_some()).count();
    let identity_ok = results.iter().filter(|r| r.identity_pass).count();
    let lemma_ok = results.iter().filter(|r| r.lemma_pass == Some(true)).count();
    let thm_ok = results.iter().filter(|r| r.thm_pass == Some(true)).count();
    let probes_ok = results.iter().filter(|r| r.probes_pass).count();
    let spot_total: usize = results.iter().map(|r| r.spot_checks).sum();
    let spot_ok: usize = results.iter().map(|r| r.spot_passes).sum();
    let flags: usize = results.iter().map(|r| r.row.solver_flags).sum();
    let all_failures: Vec<&String> = results.iter().flat_map(|r| &r.failures).collect();
    let ok = all_failures.is_empty() && flags == 0;

    let v = &config.verify;
    let mut text = String::new();
    text.push_str("verification battery\n");
    text.push_str(&format!(
        "units: {total} (predictive {predictive}, baseline {})\n",
        total - predictive
    ));
    text.push_str(&format!(
        "grid: T in {:?}, p in {:?}, m in {:?}, seeds per cell {}\n",
        v.horizons, v.p, v.m, v.seeds_per_cell
    ));
    text.push_str(&format!(
        "declared-bound audit: {total}/{total} environments within declared bounds\n"
    ));
    text.push_str(&format!(
        "queue identity: {identity_ok}/{total} residuals within 1e-9 relative\n"
    ));
    text.push_str(&format!(
        "descent inequalities: {lemma_ok}/{predictive} runs, both slacks within allowance\n"
    ));
    text.push_str(&format!(
        "cost/violation bounds: {thm_ok}/{predictive} runs, both bounds hold\n"
    ));
    text.push_str(&format!(
        "comparator optimality: {probes_ok}/{total} units, 200 feasible probes each\n"
    ));
    text.push_str(&format!(
        "step-solver grid cross-checks: {spot_ok}/{spot_total} recorded solves \
         within 1e-4 of exhaustive search\n"
    ));
    text.push_str(&format!("uncertified solves: {flags} across {total} runs\n"));
    for f in &all_failures {
        text.push_str(&format!("FAIL {f}\n"));
    }
    text.push_str(if ok { "result: PASS\n" } else { "result: FAIL\n" });

    let report_path = opts.out_dir.join("verify_report.txt");
    std::fs::write(&report_path, &text)?;
    print!("{text}");
    println!("wrote {} and {}", summary_path.display(), report_path.display());
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentConfig;

    fn small_config(text: &str) -> ExperimentConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn summary_rows_round_trip_through_the_file() {
        let rows = vec![
            SummaryRow {
                algorithm: "predictive".into(),
                horizon: 64,
                seed: 3,
                c_exp: 0.5,
                a_exp: Some(0.5),
                eta: 0.125,
                gamma: 2.828,
                regret: 1.5,
                violation: 2.25,
                thm3_rhs_regret: Some(10.0),
                thm3_rhs_violation: Some(20.0),
                lemma1_slack_1: Some(0.25),
                lemma1_slack_2: Some(0.125),
                queue_residual: 0.0,
                solver_flags: 0,
                wall_ms: 12.5,
            },
            SummaryRow {
                algorithm: "ogd".into(),
                horizon: 64,
                seed: 4,
                c_exp: 0.5,
                a_exp: None,
                eta: 0.125,
                gamma: 2.0,
                regret: -0.5,
                violation: 7.0,
                thm3_rhs_regret: None,
                thm3_rhs_violation: None,
                lemma1_slack_1: None,
                lemma1_slack_2: None,
                queue_residual: 1e-12,
                solver_flags: 0,
                wall_ms: 0.5,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        write_summary(&path, &rows).unwrap();
        assert_eq!(read_summary(&path).unwrap(), rows);

        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SUMMARY_COLUMNS.join(","));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn read_summary_rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("other.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_summary(&path).is_err());
    }

    #[test]
    fn default_battery_has_the_documented_shape() {
        let units = battery_units(&VerifySection::default());
        assert_eq!(units.len(), 108);
        let predictive = units.iter().filter(|u| u.algorithm == "predictive").count();
        assert_eq!(predictive, 72);
        assert_eq!(units.len() - predictive, 36);
        for u in &units {
            assert_eq!(u.idx, units[u.idx].idx);
            if u.algorithm == "baseline" {
                assert!(!cell_style(u.cell_idx).time_varying);
            }
        }
    }

    #[test]
    fn cmd_run_writes_summary_and_traces() {
        let cfg = small_config(
            "[experiment]\nalgorithm = \"predictive\"\nhorizons = [6]\nseeds = 2\n\
             [environment]\np = 1\nm = 1\n\
             [predictor]\nkind = \"oracle-decay\"\n",
        );
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out_dir: dir.path().to_path_buf(),
            write_traces: false,
            seed_offset: 0,
        };
        let ok = cmd_run(&cfg, &opts).unwrap();
        assert!(ok);
        let rows = read_summary(&dir.path().join("summary.csv")).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.algorithm == "predictive"));
        assert!(rows[0].thm3_rhs_regret.is_some());
        assert!(dir.path().join("traces/predictive-T6-s0.csv").exists());
        assert!(dir.path().join("traces/predictive-T6-s1.csv").exists());
    }

    #[test]
    fn cmd_sweep_fits_rates_and_reports() {
        let cfg = small_config(
            "[experiment]\nalgorithm = \"predictive\"\nhorizons = [6, 12, 24, 48]\n\
             seeds = 2\n\
             [environment]\np = 1\nm = 1\ncost = \"piecewise\"\nsegments = 1\n\
             [predictor]\nkind = \"last-value\"\n",
        );
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out_dir: dir.path().to_path_buf(),
            write_traces: false,
            seed_offset: 0,
        };
        cmd_sweep(&cfg, &opts).unwrap();
        let report = std::fs::read_to_string(dir.path().join("rate_report.txt")).unwrap();
        assert!(report.contains("group algorithm=predictive"), "{report}");
        assert!(report.contains("reference T^"), "{report}");
        assert_eq!(read_summary(&dir.path().join("summary.csv")).unwrap().len(), 8);
        assert!(
            !dir.path().join("traces").exists(),
            "sweep must not write traces unless asked"
        );

        let fit_ok = cmd_fit(&opts).unwrap();
        assert!(fit_ok);
    }
}
