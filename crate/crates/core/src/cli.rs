//! Command-line front end: configuration ingestion, scenario execution, and
//! report emission.
//!
//! Configuration is JSON with exact field names; unknown keys are rejected
//! with the path of the offending key, numeric values outside their range
//! with the field name. Command-line flags override configuration-file
//! fields. Exit codes: 0 when every executed expectation passes, 1 on an
//! expectation failure, 2 on configuration or usage errors.

use crate::dynamics::DynamicsParams;
use crate::error::{CoreError, Result};
use crate::funcspace::{build_exhaustion, SeminormSpec};
use crate::multiindex::MultiIndex;
use crate::report::{
    evolution_trace_csv, grid_csv, growth_trace_csv, iterate_trace_csv, write_meta_sidecar,
    write_text, ReportDocument,
};
use crate::scenarios::{
    builtin_catalog, find_scenario, run_scenario, Diagnostic, RunParams, Scenario, ScenarioReport,
    ScenarioSpec,
};
use crate::semigroup::{
    check_generator, check_semigroup_law, exp_apply, SemigroupParams, TailBudget,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Catalog,
    Diagnose,
    Invariance,
    Semigroup,
    Expansion,
}

impl CommandKind {
    fn name(&self) -> &'static str {
        match self {
            CommandKind::Catalog => "catalog",
            CommandKind::Diagnose => "diagnose",
            CommandKind::Invariance => "invariance",
            CommandKind::Semigroup => "semigroup",
            CommandKind::Expansion => "expansion",
        }
    }

    fn needs_scenario(&self) -> bool {
        matches!(
            self,
            CommandKind::Diagnose | CommandKind::Invariance | CommandKind::Semigroup
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    /// Iterate horizon M for orbit and growth diagnostics.
    pub horizon: usize,
    /// Grid spacing for internally built exhaustion grids.
    pub resolution: f64,
    /// Residual tolerance for invariance/closure checks.
    pub tol: f64,
    /// Cauchy tolerance for ergodic convergence.
    pub ergodic_tol: f64,
    /// Tolerance for Cesaro limits against their closed forms.
    pub limit_tol: f64,
    /// Tolerance for the semigroup law defect.
    pub law_tol: f64,
    /// Tolerance for the generator difference-quotient defect.
    pub generator_tol: f64,
    /// Cesaro window (n1, n2).
    pub window: (usize, usize),
    /// Semigroup times.
    pub t: f64,
    pub s: f64,
    /// Tail budget for the exponential series.
    pub eps: f64,
    /// Multi-index for the `expansion` command.
    pub alpha: Option<Vec<u32>>,
    /// Largest iterate probed by the denseness check.
    pub denseness_m_max: usize,
}

impl Default for Overrides {
    fn default() -> Self {
        Overrides {
            horizon: 200,
            resolution: 0.25,
            tol: 1e-6,
            ergodic_tol: 5e-2,
            limit_tol: 5e-2,
            law_tol: 1e-8,
            generator_tol: 1e-3,
            window: (500, 1000),
            t: 1.0,
            s: 0.5,
            eps: 1e-9,
            alpha: None,
            denseness_m_max: 5,
        }
    }
}

impl Overrides {
    /// The per-diagnostic parameters these overrides induce.
    pub fn run_params(&self) -> RunParams {
        RunParams {
            dynamics: DynamicsParams {
                horizon: self.horizon,
                resolution: self.resolution,
                ..DynamicsParams::default()
            },
            window: self.window,
            ergodic_tol: self.ergodic_tol,
            limit_tol: self.limit_tol,
            residual_tol: self.tol,
            denseness_m_max: self.denseness_m_max,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub json_path: Option<PathBuf>,
    pub csv_dir: Option<PathBuf>,
    pub verbosity: Option<u8>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub scenario_ref: Option<String>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        RunConfig {
            command,
            scenario_ref: None,
            overrides: Overrides::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization")
    }

    pub fn validate(&self) -> Result<()> {
        let ov = &self.overrides;
        let range = |field: &str, message: String| {
            Err(CoreError::Range {
                field: field.into(),
                message,
            })
        };
        if ov.horizon < 4 {
            return range("overrides.horizon", format!("must be >= 4, got {}", ov.horizon));
        }
        for (name, value) in [
            ("overrides.resolution", ov.resolution),
            ("overrides.tol", ov.tol),
            ("overrides.ergodic_tol", ov.ergodic_tol),
            ("overrides.limit_tol", ov.limit_tol),
            ("overrides.law_tol", ov.law_tol),
            ("overrides.generator_tol", ov.generator_tol),
            ("overrides.eps", ov.eps),
        ] {
            let valid = value.is_finite() && value > 0.0;
            if !valid {
                return range(name, format!("must be positive and finite, got {value}"));
            }
        }
        if ov.t < 0.0 || ov.s < 0.0 {
            return range("overrides.t", "semigroup times must be nonnegative".into());
        }
        let (n1, n2) = ov.window;
        if n1 == 0 || n1 >= n2 {
            return range(
                "overrides.window",
                format!("need 1 <= n1 < n2, got ({n1}, {n2})"),
            );
        }
        if self.command.needs_scenario() {
            let Some(name) = &self.scenario_ref else {
                return Err(CoreError::Schema {
                    path: "scenario_ref".into(),
                    message: format!("command `{}` needs a scenario", self.command.name()),
                });
            };
            let known = builtin_catalog().iter().any(|s| s.name == *name);
            if !known && !Path::new(name).exists() {
                return Err(CoreError::Schema {
                    path: "scenario_ref".into(),
                    message: format!("`{name}` is neither a built-in scenario nor a file"),
                });
            }
        }
        if self.command == CommandKind::Expansion {
            match &ov.alpha {
                Some(alpha) if !alpha.is_empty() && alpha.iter().sum::<u32>() >= 1 => {}
                _ => {
                    return Err(CoreError::Schema {
                        path: "overrides.alpha".into(),
                        message: "expansion needs a nonzero multi-index".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn run_params(&self) -> RunParams {
        self.overrides.run_params()
    }

    pub fn resolve_scenario(&self) -> Result<Scenario> {
        let name = self.scenario_ref.as_deref().ok_or_else(|| CoreError::Schema {
            path: "scenario_ref".into(),
            message: "missing scenario reference".into(),
        })?;
        let catalog = builtin_catalog();
        if let Ok(s) = find_scenario(&catalog, name) {
            return Ok(s);
        }
        let text = std::fs::read_to_string(name)?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let spec: ScenarioSpec =
            serde_path_to_error::deserialize(de).map_err(|e| CoreError::Schema {
                path: format!("{name}:{}", e.path()),
                message: e.inner().to_string(),
            })?;
        Scenario::from_spec(spec)
    }
}

/// Parses and fully validates a configuration document.
pub fn parse_config(source: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(source);
    let config: RunConfig =
        serde_path_to_error::deserialize(de).map_err(|e| CoreError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    config.validate()?;
    Ok(config)
}

/// Everything a command run produced, separated from terminal and file IO.
pub struct ExecutionOutcome {
    pub exit_code: i32,
    pub summary: Vec<String>,
    pub report_json: String,
    pub csv_files: BTreeMap<String, String>,
}

fn scenario_summary(report: &ScenarioReport) -> Vec<String> {
    let mut lines = Vec::new();
    let verdict = if report.all_pass { "PASS" } else { "FAIL" };
    lines.push(format!(
        "[{verdict}] {} ({}/{} expectations)",
        report.name,
        report.expectations.iter().filter(|e| e.pass).count(),
        report.expectations.len()
    ));
    for e in &report.expectations {
        let mark = if e.pass { "pass" } else { "FAIL" };
        let detail = e
            .error
            .as_deref()
            .map(|m| format!(" error: {m}"))
            .unwrap_or_default();
        lines.push(format!(
            "    {mark} {} expected={} observed={}{detail}",
            e.diagnostic, e.expected, e.observed
        ));
    }
    lines
}

fn scenario_csvs(scenario: &Scenario, report: &ScenarioReport, csv: &mut BTreeMap<String, String>) {
    csv.insert(
        format!("{}.base_grid.csv", scenario.name),
        grid_csv(&scenario.base_grid),
    );
    csv.insert(
        format!("{}.probe_grid.csv", scenario.name),
        grid_csv(&scenario.probe_grid),
    );
    if let Some(pb) = &report.reports.power_bounded {
        csv.insert(
            format!("{}.growth.csv", scenario.name),
            growth_trace_csv(&pb.growth),
        );
    }
}

fn execute_catalog(config: &RunConfig) -> Result<ExecutionOutcome> {
    let params = config.run_params();
    let catalog = builtin_catalog();
    let mut summary = Vec::new();
    let mut reports = Vec::with_capacity(catalog.len());
    let mut csv_files = BTreeMap::new();
    for scenario in &catalog {
        let report = run_scenario(scenario, &params);
        summary.extend(scenario_summary(&report));
        scenario_csvs(scenario, &report, &mut csv_files);
        reports.push(report);
    }
    let all = reports.iter().all(|r| r.all_pass);
    summary.push(format!(
        "catalog: {}/{} scenarios pass",
        reports.iter().filter(|r| r.all_pass).count(),
        reports.len()
    ));
    Ok(ExecutionOutcome {
        exit_code: if all { 0 } else { 1 },
        summary,
        report_json: ReportDocument::new("catalog", &reports).to_json(),
        csv_files,
    })
}

fn execute_diagnose(config: &RunConfig) -> Result<ExecutionOutcome> {
    let scenario = config.resolve_scenario()?;
    let params = config.run_params();
    let report = run_scenario(&scenario, &params);
    let summary = scenario_summary(&report);
    let mut csv_files = BTreeMap::new();
    scenario_csvs(&scenario, &report, &mut csv_files);
    // Sampled iterate values of the first diagnostic field on the probes.
    if let Some(&index) = scenario.diagnostic_fields.first() {
        let op = scenario.operator();
        let f = &scenario.test_fields[index];
        let mut samples = Vec::new();
        for (pi, p) in scenario.probe_grid.points.iter().enumerate() {
            for m in 0..=20usize {
                if let Ok(v) = op.iterate_value(f, m, p) {
                    samples.push((m, pi, v));
                }
            }
        }
        csv_files.insert(
            format!("{}.iterates.csv", scenario.name),
            iterate_trace_csv(&samples),
        );
    }
    Ok(ExecutionOutcome {
        exit_code: if report.all_pass { 0 } else { 1 },
        summary,
        report_json: ReportDocument::new("diagnose", &report).to_json(),
        csv_files,
    })
}

fn execute_invariance(config: &RunConfig) -> Result<ExecutionOutcome> {
    let scenario = config.resolve_scenario()?;
    let verdict = crate::pdekernel::verify_heat_invariance(
        &scenario.weight,
        &scenario.symbol,
        &scenario.space.domain,
        &scenario.probe_grid,
        config.overrides.tol,
    )?;
    let mut summary = vec![format!(
        "heat invariance for `{}`: {}",
        scenario.name,
        if verdict.overall { "accepted" } else { "rejected" }
    )];
    for (name, check) in &verdict.conditions {
        summary.push(format!(
            "    {} {} residual={:e}",
            if check.pass { "pass" } else { "FAIL" },
            name,
            check.residual
        ));
    }
    let expected = scenario.expected.iter().find_map(|e| match &e.diagnostic {
        Diagnostic::HeatInvariance { accepted } => Some(*accepted),
        _ => None,
    });
    let exit_code = match expected {
        Some(accepted) => {
            if verdict.overall == accepted {
                0
            } else {
                1
            }
        }
        None => 0,
    };
    Ok(ExecutionOutcome {
        exit_code,
        summary,
        report_json: ReportDocument::new("invariance", &verdict).to_json(),
        csv_files: BTreeMap::new(),
    })
}

#[derive(Serialize)]
struct SemigroupRunReport {
    scenario: String,
    t: f64,
    s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    refusal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<TailBudget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    law: Option<crate::semigroup::SemigroupLawReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<crate::semigroup::GeneratorReport>,
}

fn execute_semigroup(config: &RunConfig) -> Result<ExecutionOutcome> {
    let scenario = config.resolve_scenario()?;
    let ov = &config.overrides;
    let op = scenario.operator();
    let params = config.run_params();
    let sg_params = SemigroupParams {
        stability_horizon: ov.horizon,
        ..SemigroupParams::default()
    };
    let Some(&index) = scenario.diagnostic_fields.first() else {
        return Err(CoreError::Precondition {
            message: "scenario has no diagnostic field to evolve".into(),
        });
    };
    let f = &scenario.test_fields[index];

    let k_spec = SeminormSpec::sup(scenario.base_grid.clone());
    let orbit = crate::dynamics::check_stable_orbits(
        &scenario.symbol,
        &scenario.space.domain,
        &scenario.base_grid,
        &params.dynamics,
    )?;
    let l_spec = match orbit.enclosing_level {
        Some(level) => {
            let (_, grid) = build_exhaustion(&scenario.space.domain, level, ov.resolution);
            if grid.is_empty() {
                k_spec.clone()
            } else {
                SeminormSpec::sup(grid)
            }
        }
        None => k_spec.clone(),
    };

    let mut summary = Vec::new();
    let mut csv_files = BTreeMap::new();
    match exp_apply(&op, f, ov.t, ov.eps, &k_spec, &l_spec, &sg_params) {
        Err(CoreError::NoGrowthBound { reason }) => {
            // Refusal is sound, and expected exactly when the scenario is
            // declared unstable.
            let expected_unstable = scenario.expected.iter().any(|e| {
                matches!(e.diagnostic, Diagnostic::StableOrbits { stable: false })
            });
            summary.push(format!("refused: {reason}"));
            summary.push(format!(
                "refusal {} for `{}`",
                if expected_unstable { "expected" } else { "UNEXPECTED" },
                scenario.name
            ));
            let report = SemigroupRunReport {
                scenario: scenario.name.clone(),
                t: ov.t,
                s: ov.s,
                refusal: Some(reason),
                budget: None,
                law: None,
                generator: None,
            };
            Ok(ExecutionOutcome {
                exit_code: if expected_unstable { 0 } else { 1 },
                summary,
                report_json: ReportDocument::new("semigroup", &report).to_json(),
                csv_files,
            })
        }
        Err(e) => Err(e),
        Ok((_, budget)) => {
            summary.push(format!(
                "series certified: gamma={:.6e}, N={}, tail<{:.3e}",
                budget.gamma, budget.n_terms, budget.tail_bound
            ));
            let law = check_semigroup_law(
                &op,
                f,
                ov.t,
                ov.s,
                &scenario.probe_grid,
                ov.law_tol,
                &k_spec,
                &l_spec,
                &sg_params,
            )?;
            summary.push(format!(
                "semigroup law ({}, {}): defect={:.3e} [{}]",
                ov.t,
                ov.s,
                law.defect,
                if law.pass { "pass" } else { "FAIL" }
            ));
            let generator = check_generator(
                &op,
                f,
                &scenario.probe_grid,
                &[1e-1, 1e-2, 1e-3, 1e-4],
                ov.generator_tol,
                &k_spec,
                &l_spec,
                &sg_params,
            )?;
            summary.push(format!(
                "generator quotient: final defect={:.3e} [{}]",
                generator.final_defect,
                if generator.pass { "pass" } else { "FAIL" }
            ));
            // Evolution trace for plotting.
            let mut samples = Vec::new();
            for j in 0..=8 {
                let tj = ov.t * j as f64 / 8.0;
                let (field, _) = exp_apply(&op, f, tj, ov.eps, &k_spec, &l_spec, &sg_params)?;
                for (pi, p) in scenario.probe_grid.points.iter().enumerate() {
                    samples.push((tj, pi, field.eval(p)?));
                }
            }
            csv_files.insert(
                format!("{}.evolution.csv", scenario.name),
                evolution_trace_csv(&samples),
            );
            let pass = law.pass && generator.pass;
            let report = SemigroupRunReport {
                scenario: scenario.name.clone(),
                t: ov.t,
                s: ov.s,
                refusal: None,
                budget: Some(budget),
                law: Some(law),
                generator: Some(generator),
            };
            Ok(ExecutionOutcome {
                exit_code: if pass { 0 } else { 1 },
                summary,
                report_json: ReportDocument::new("semigroup", &report).to_json(),
                csv_files,
            })
        }
    }
}

fn execute_expansion(config: &RunConfig) -> Result<ExecutionOutcome> {
    let alpha_vec = config
        .overrides
        .alpha
        .clone()
        .expect("validated: expansion needs alpha");
    let alpha = MultiIndex::new(alpha_vec);
    let table = crate::smoothcalc::build_expansion(&alpha, alpha.dim())?;
    let summary = vec![format!(
        "expansion of order {} in dimension {}: {} terms, total multiplicity {}, B={}",
        alpha.order(),
        alpha.dim(),
        table.terms.len(),
        table.total_multiplicity(),
        table.b_constant
    )];
    Ok(ExecutionOutcome {
        exit_code: 0,
        summary,
        report_json: ReportDocument::new("expansion", &table).to_json(),
        csv_files: BTreeMap::new(),
    })
}

/// Executes a validated configuration without touching stdout or the
/// filesystem.
pub fn execute(config: &RunConfig) -> Result<ExecutionOutcome> {
    match config.command {
        CommandKind::Catalog => execute_catalog(config),
        CommandKind::Diagnose => execute_diagnose(config),
        CommandKind::Invariance => execute_invariance(config),
        CommandKind::Semigroup => execute_semigroup(config),
        CommandKind::Expansion => execute_expansion(config),
    }
}

/// Executes and performs the configured IO. Returns the process exit code.
pub fn run(config: &RunConfig) -> Result<i32> {
    config.validate()?;
    let outcome = execute(config)?;
    if config.output.verbosity.unwrap_or(1) > 0 {
        for line in &outcome.summary {
            println!("{line}");
        }
    }
    if let Some(json_path) = &config.output.json_path {
        write_text(json_path, &outcome.report_json)?;
        let meta = json_path.with_extension("meta.json");
        write_meta_sidecar(&meta)?;
    }
    if let Some(csv_dir) = &config.output.csv_dir {
        for (name, content) in &outcome.csv_files {
            write_text(&csv_dir.join(name), content)?;
        }
    }
    Ok(outcome.exit_code)
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "wcop",
    version,
    about = "Numerical dynamics of weighted composition operators"
)]
pub struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Run every built-in scenario against its expected verdicts
    Catalog(CommonArgs),
    /// Run all diagnostics of one scenario
    Diagnose(CommonArgs),
    /// Verify the heat-kernel invariance conditions of a scenario's pair
    Invariance(CommonArgs),
    /// Evolve the exponential series and check the semigroup/generator laws
    Semigroup(CommonArgs),
    /// Print the derivative-of-composition term table for a multi-index
    Expansion(ExpansionArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON configuration file; explicit flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario name or path to a scenario JSON file
    #[arg(long)]
    scenario: Option<String>,
    /// Iterate horizon
    #[arg(long)]
    horizon: Option<usize>,
    /// Residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory (report.json and csv/ inside)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Which outputs to write under --out
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args, Debug)]
struct ExpansionArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Multi-index, comma separated (e.g. 2,1)
    #[arg(long)]
    alpha: Option<String>,
}

fn apply_common(config: &mut RunConfig, args: &CommonArgs) -> Result<()> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        let mut from_file = parse_config_unvalidated(&text)?;
        from_file.command = config.command;
        *config = from_file;
    }
    if let Some(scenario) = &args.scenario {
        config.scenario_ref = Some(scenario.clone());
    }
    if let Some(horizon) = args.horizon {
        config.overrides.horizon = horizon;
    }
    if let Some(tol) = args.tol {
        config.overrides.tol = tol;
    }
    if let Some(out) = &args.out {
        let format = args.format.unwrap_or(OutputFormat::Both);
        if matches!(format, OutputFormat::Json | OutputFormat::Both) {
            config.output.json_path = Some(out.join("report.json"));
        }
        if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
            config.output.csv_dir = Some(out.join("csv"));
        }
    }
    Ok(())
}

/// Parse without range validation (validation runs after flag merging).
fn parse_config_unvalidated(source: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(source);
    serde_path_to_error::deserialize(de).map_err(|e| CoreError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let (kind, common, alpha) = match &cli.command {
        CliCommand::Catalog(c) => (CommandKind::Catalog, c, None),
        CliCommand::Diagnose(c) => (CommandKind::Diagnose, c, None),
        CliCommand::Invariance(c) => (CommandKind::Invariance, c, None),
        CliCommand::Semigroup(c) => (CommandKind::Semigroup, c, None),
        CliCommand::Expansion(e) => (CommandKind::Expansion, &e.common, e.alpha.as_deref()),
    };
    let mut config = RunConfig::new(kind);
    apply_common(&mut config, common)?;
    if let Some(alpha_text) = alpha {
        let parsed: std::result::Result<Vec<u32>, _> = alpha_text
            .split(',')
            .map(|part| part.trim().parse::<u32>())
            .collect();
        match parsed {
            Ok(alpha_vec) => config.overrides.alpha = Some(alpha_vec),
            Err(e) => {
                return Err(CoreError::Schema {
                    path: "--alpha".into(),
                    message: e.to_string(),
                })
            }
        }
    }
    config.validate()?;
    Ok(config)
}

/// Full command-line entry point; maps every failure mode to an exit code
/// and never panics on bad input.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = std::panic::catch_unwind(|| build_config(&cli).and_then(|c| run(&c)));
    match result {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(_) => {
            eprintln!("error: internal panic");
            2
        }
    }
}
