//! Bundled example scenarios with analytically known verdicts.
//!
//! Each scenario pairs a weight, a symbol, and a space instance with the
//! verdicts its diagnostics must produce, each tagged with how the expected
//! value was obtained. The catalog is the corpus the whole toolkit is
//! accepted against; scenarios are also loadable from configuration using
//! the same schema as the built-ins.

use crate::dynamics::{
    check_denseness_hypothesis, test_power_bounded_characterization, test_uniform_mean_ergodic,
    DensenessReport, DynamicsParams, ErgodicReport, PowerBoundedReport,
};
use crate::error::{CoreError, Result};
use crate::funcspace::{CompactGrid, Domain, SeminormSpec, SpaceInstance, SpaceTag};
use crate::multiindex::MultiIndex;
use crate::pdekernel::{
    closure_sampling_check, verify_heat_invariance, ClosureReport, DiffOperator,
    InvarianceVerdict,
};
use crate::wcomp::{ScalarField, SelfMap, WCOperator};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// Declarative scenario schema (built-ins and config files share it)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Euclidean { dim: usize },
    Ball { center: Vec<f64>, radius: f64 },
    HalfSpace { dim: usize, coord: usize, threshold: f64 },
}

impl DomainSpec {
    pub fn build(&self) -> Domain {
        match self {
            DomainSpec::Euclidean { dim } => Domain::euclidean(*dim),
            DomainSpec::Ball { center, radius } => Domain::open_ball(center.clone(), *radius),
            DomainSpec::HalfSpace {
                dim,
                coord,
                threshold,
            } => Domain::half_space(*dim, *coord, *threshold),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceTagSpec {
    Continuous,
    Cr { order: u32 },
    Holomorphic,
    Heat { space_dim: usize },
    Laplace { dim: usize },
    CauchyRiemann,
    /// Arbitrary operator kernel: coefficient triples (multi-index, re, im).
    Kernel {
        label: String,
        coefficients: Vec<(Vec<u32>, f64, f64)>,
        elliptic: bool,
        hypoelliptic: bool,
    },
}

impl SpaceTagSpec {
    pub fn build(&self, dim: usize) -> Result<SpaceTag> {
        Ok(match self {
            SpaceTagSpec::Continuous => SpaceTag::Continuous,
            SpaceTagSpec::Cr { order } => SpaceTag::Cr { order: *order },
            SpaceTagSpec::Holomorphic => SpaceTag::Holomorphic,
            SpaceTagSpec::Heat { space_dim } => SpaceTag::PdeKernel {
                operator: DiffOperator::heat(*space_dim),
            },
            SpaceTagSpec::Laplace { dim } => SpaceTag::PdeKernel {
                operator: DiffOperator::laplace(*dim),
            },
            SpaceTagSpec::CauchyRiemann => SpaceTag::PdeKernel {
                operator: DiffOperator::cauchy_riemann(),
            },
            SpaceTagSpec::Kernel {
                label,
                coefficients,
                elliptic,
                hypoelliptic,
            } => {
                let coeffs = coefficients
                    .iter()
                    .map(|(alpha, re, im)| {
                        (MultiIndex::new(alpha.clone()), Complex64::new(*re, *im))
                    })
                    .collect();
                SpaceTag::PdeKernel {
                    operator: DiffOperator::new(
                        label.clone(),
                        dim,
                        coeffs,
                        *elliptic,
                        *hypoelliptic,
                    )?,
                }
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub tag: SpaceTagSpec,
    pub domain: DomainSpec,
    #[serde(default)]
    pub membership_residual_tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridShape {
    Circle { center: [f64; 2], radius: f64, count: usize },
    Box { lo: Vec<f64>, hi: Vec<f64>, spacing: f64 },
    Points { points: Vec<Vec<f64>> },
}

impl GridShape {
    pub fn build(&self, domain: &Domain) -> CompactGrid {
        match self {
            GridShape::Circle {
                center,
                radius,
                count,
            } => CompactGrid::circle(domain, center, *radius, *count),
            GridShape::Box { lo, hi, spacing } => CompactGrid::box_grid(domain, lo, hi, *spacing),
            GridShape::Points { points } => {
                let dim = domain.dim();
                let kept: Vec<Vec<f64>> =
                    points.iter().filter(|p| domain.contains(p)).cloned().collect();
                CompactGrid::from_points(dim, kept, 1.0, "points")
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub label: String,
    pub expr: String,
}

/// How an expected verdict was obtained.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Trivially true by construction of the scenario.
    Construction,
    /// Analytic closed form.
    ClosedForm,
    /// Verified by hand computation.
    HandChecked,
    /// Computed by an independent brute-force oracle.
    BruteForce,
    /// Follows from the declared hypotheses of the underlying theory.
    Cited,
}

/// Shape of the expected Cesaro limit.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LimitForm {
    /// Only convergence is asserted.
    Unspecified,
    /// Limit is the field value at an attracting fixed point.
    FixedPointValue { point: Vec<f64> },
    /// Limit is the orbit average over a finite symbol cycle.
    CycleAverage { period: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Diagnostic {
    StableOrbits { stable: bool },
    PowerBounded { power_bounded: bool },
    Growth { classification: String },
    MeanErgodic { converged: bool, limit: LimitForm },
    UniformMeanErgodic { converged: bool },
    HeatInvariance { accepted: bool },
    Closure { pass: bool },
    Denseness { dense: bool },
}

impl Diagnostic {
    pub fn name(&self) -> &'static str {
        match self {
            Diagnostic::StableOrbits { .. } => "stable_orbits",
            Diagnostic::PowerBounded { .. } => "power_bounded",
            Diagnostic::Growth { .. } => "growth",
            Diagnostic::MeanErgodic { .. } => "mean_ergodic",
            Diagnostic::UniformMeanErgodic { .. } => "uniform_mean_ergodic",
            Diagnostic::HeatInvariance { .. } => "heat_invariance",
            Diagnostic::Closure { .. } => "closure",
            Diagnostic::Denseness { .. } => "denseness",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub diagnostic: Diagnostic,
    pub provenance: Provenance,
}

/// Hypotheses behind the power-boundedness characterizations, declared per
/// scenario and trusted: none of them is verified computationally.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AssumptionFlags {
    /// Dense nonvanishing of `w o psi^m` for every m.
    pub denseness_c: bool,
    /// Dense range of the restriction maps onto exhaustion levels.
    pub dense_range_a: bool,
    /// Point evaluations are nontrivial functionals on the instance.
    pub kernel_b: bool,
    /// The domain is P-convex for supports (kernel instances).
    pub p_convex: bool,
}

impl AssumptionFlags {
    pub fn all_true() -> Self {
        AssumptionFlags {
            denseness_c: true,
            dense_range_a: true,
            kernel_b: true,
            p_convex: true,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.denseness_c && self.dense_range_a && self.kernel_b && self.p_convex
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub space: SpaceSpec,
    pub weight: String,
    pub symbol: Vec<String>,
    pub test_fields: Vec<FieldSpec>,
    /// Indices of test fields admissible for growth and ergodic diagnostics
    /// (fields that belong to the instance on the whole domain). Defaults to
    /// all test fields.
    #[serde(default)]
    pub diagnostic_fields: Option<Vec<usize>>,
    pub expected: Vec<Expectation>,
    pub assumption_flags: AssumptionFlags,
    pub base_grid: GridShape,
    pub probe_grid: GridShape,
}

// ---------------------------------------------------------------------------
// Built scenario
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub space: SpaceInstance,
    pub weight: ScalarField,
    pub symbol: SelfMap,
    pub test_fields: Vec<ScalarField>,
    pub diagnostic_fields: Vec<usize>,
    pub expected: Vec<Expectation>,
    pub assumption_flags: AssumptionFlags,
    pub base_grid: CompactGrid,
    pub probe_grid: CompactGrid,
    pub spec: ScenarioSpec,
}

impl Scenario {
    pub fn from_spec(spec: ScenarioSpec) -> Result<Self> {
        let domain = spec.space.domain.build();
        let dim = domain.dim();
        let tol = spec.space.membership_residual_tol.unwrap_or(1e-6);
        let tag = spec.space.tag.build(dim)?;
        let space = SpaceInstance::new(tag, domain.clone(), tol)?;
        let weight = ScalarField::parse(format!("w[{}]", spec.weight), dim, &spec.weight)?;
        if spec.symbol.len() != dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim,
                got: spec.symbol.len(),
            });
        }
        let sources: Vec<&str> = spec.symbol.iter().map(|s| s.as_str()).collect();
        let symbol = SelfMap::parse(format!("psi[{}]", spec.symbol.join("; ")), &sources)?;
        let test_fields = spec
            .test_fields
            .iter()
            .map(|f| ScalarField::parse(f.label.clone(), dim, &f.expr))
            .collect::<Result<Vec<_>>>()?;
        let diagnostic_fields = match &spec.diagnostic_fields {
            Some(indices) => {
                for &i in indices {
                    if i >= test_fields.len() {
                        return Err(CoreError::Range {
                            field: "diagnostic_fields".into(),
                            message: format!("index {i} out of range"),
                        });
                    }
                }
                indices.clone()
            }
            None => (0..test_fields.len()).collect(),
        };
        let base_grid = spec.base_grid.build(&domain);
        let probe_grid = spec.probe_grid.build(&domain);
        if base_grid.is_empty() || probe_grid.is_empty() {
            return Err(CoreError::Precondition {
                message: format!("scenario {} has an empty grid", spec.name),
            });
        }
        // The operator must be constructible; surface dimension errors now.
        WCOperator::new(weight.clone(), symbol.clone(), space.clone())?;
        Ok(Scenario {
            name: spec.name.clone(),
            space,
            weight,
            symbol,
            test_fields,
            diagnostic_fields,
            expected: spec.expected.clone(),
            assumption_flags: spec.assumption_flags.clone(),
            base_grid,
            probe_grid,
            spec,
        })
    }

    pub fn operator(&self) -> WCOperator {
        WCOperator::new(
            self.weight.clone(),
            self.symbol.clone(),
            self.space.clone(),
        )
        .expect("validated at construction")
    }

    pub fn diagnostic_basis(&self) -> Vec<ScalarField> {
        self.diagnostic_fields
            .iter()
            .map(|&i| self.test_fields[i].clone())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Knobs shared by every diagnostic of a scenario run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunParams {
    pub dynamics: DynamicsParams,
    /// Cesaro window (n1, n2).
    pub window: (usize, usize),
    /// Cauchy tolerance for ergodic convergence.
    pub ergodic_tol: f64,
    /// Tolerance when comparing Cesaro limits against their closed form.
    pub limit_tol: f64,
    /// Residual tolerance for invariance and closure checks (oracle paths).
    pub residual_tol: f64,
    /// Largest iterate probed by the denseness check.
    pub denseness_m_max: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            dynamics: DynamicsParams::default(),
            window: (500, 1000),
            ergodic_tol: 5e-2,
            limit_tol: 5e-2,
            residual_tol: 1e-6,
            denseness_m_max: 5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpectationResult {
    pub diagnostic: String,
    pub provenance: Provenance,
    pub expected: serde_json::Value,
    pub observed: serde_json::Value,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Sub-reports produced while checking the expectations, keyed for the JSON
/// report.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SubReports {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit: Option<crate::dynamics::OrbitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_bounded: Option<PowerBoundedReport>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub mean_ergodic: BTreeMap<String, ErgodicReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform_mean_ergodic: Option<ErgodicReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heat_invariance: Option<InvarianceVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denseness: Option<DensenessReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub assumption_flags: AssumptionFlags,
    pub expectations: Vec<ExpectationResult>,
    pub all_pass: bool,
    pub reports: SubReports,
}

struct Evaluator<'a> {
    scenario: &'a Scenario,
    params: &'a RunParams,
    op: WCOperator,
    basis: Vec<ScalarField>,
    orbit: Option<std::result::Result<crate::dynamics::OrbitReport, String>>,
    pb: Option<std::result::Result<PowerBoundedReport, String>>,
    sub: SubReports,
}

impl<'a> Evaluator<'a> {
    fn new(scenario: &'a Scenario, params: &'a RunParams) -> Self {
        Evaluator {
            scenario,
            params,
            op: scenario.operator(),
            basis: scenario.diagnostic_basis(),
            orbit: None,
            pb: None,
            sub: SubReports::default(),
        }
    }

    /// Stable orbits is a property of the symbol alone; it does not need
    /// sup-type seminorms.
    fn orbit(&mut self) -> std::result::Result<crate::dynamics::OrbitReport, String> {
        if self.orbit.is_none() {
            let result = crate::dynamics::check_stable_orbits(
                &self.scenario.symbol,
                &self.scenario.space.domain,
                &self.scenario.base_grid,
                &self.params.dynamics,
            )
            .map_err(|e| e.to_string());
            if let Ok(r) = &result {
                self.sub.orbit = Some(r.clone());
            }
            self.orbit = Some(result);
        }
        self.orbit.clone().unwrap()
    }

    fn power_bounded(&mut self) -> std::result::Result<PowerBoundedReport, String> {
        if self.pb.is_none() {
            let spec = SeminormSpec::sup(self.scenario.base_grid.clone());
            let result = test_power_bounded_characterization(
                &self.op,
                &self.basis,
                &[spec],
                &self.params.dynamics,
            )
            .map_err(|e| e.to_string());
            if let Ok(r) = &result {
                self.sub.power_bounded = Some(r.clone());
            }
            self.pb = Some(result);
        }
        self.pb.clone().unwrap()
    }

    /// Expected Cesaro limit of `f` at a probe point under the stated form.
    fn expected_limit(
        &self,
        f: &ScalarField,
        p: &[f64],
        limit: &LimitForm,
    ) -> Result<Option<Complex64>> {
        match limit {
            LimitForm::Unspecified => Ok(None),
            LimitForm::FixedPointValue { point } => Ok(Some(f.eval(point)?)),
            LimitForm::CycleAverage { period } => {
                let mut sum = Complex64::new(0.0, 0.0);
                let mut y = p.to_vec();
                for _ in 0..*period {
                    sum += f.eval(&y)?;
                    y = self.scenario.symbol.apply_raw(&y)?;
                }
                Ok(Some(sum / *period as f64))
            }
        }
    }

    fn check(&mut self, expectation: &Expectation) -> ExpectationResult {
        let diagnostic = expectation.diagnostic.name().to_string();
        let provenance = expectation.provenance;
        let fail = |expected: serde_json::Value, message: String| ExpectationResult {
            diagnostic: diagnostic.clone(),
            provenance,
            expected,
            observed: json!(null),
            pass: false,
            error: Some(message),
        };
        match &expectation.diagnostic {
            Diagnostic::StableOrbits { stable } => match self.orbit() {
                Ok(orbit) => ExpectationResult {
                    diagnostic,
                    provenance,
                    expected: json!({ "stable": stable }),
                    observed: json!({
                        "stable": orbit.stable,
                        "enclosing_level": orbit.enclosing_level,
                        "monotone_escape": orbit.monotone_escape,
                    }),
                    pass: orbit.stable == *stable,
                    error: None,
                },
                Err(e) => fail(json!({ "stable": stable }), e),
            },
            Diagnostic::PowerBounded { power_bounded } => match self.power_bounded() {
                Ok(report) => ExpectationResult {
                    diagnostic,
                    provenance,
                    expected: json!({ "power_bounded": power_bounded }),
                    observed: json!({
                        "power_bounded": report.power_bounded,
                        "agrees_with_growth": report.agrees_with_growth,
                    }),
                    pass: report.power_bounded == *power_bounded && report.agrees_with_growth,
                    error: None,
                },
                Err(e) => fail(json!({ "power_bounded": power_bounded }), e),
            },
            Diagnostic::Growth { classification } => match self.power_bounded() {
                Ok(report) => {
                    let observed = report.growth.classification.kind();
                    ExpectationResult {
                        diagnostic,
                        provenance,
                        expected: json!({ "classification": classification }),
                        observed: json!({
                            "classification": observed,
                            "fit_residual": report.growth.fit_residual,
                        }),
                        pass: observed == classification,
                        error: None,
                    }
                }
                Err(e) => fail(json!({ "classification": classification }), e),
            },
            Diagnostic::MeanErgodic { converged, limit } => {
                let expected = json!({ "converged": converged, "limit": limit });
                let mut pass = true;
                let mut worst_defect = 0.0f64;
                let mut worst_limit_error = 0.0f64;
                for (idx, f) in self.basis.clone().iter().enumerate() {
                    let report = match test_uniform_mean_ergodic(
                        &self.op,
                        std::slice::from_ref(f),
                        &self.scenario.probe_grid,
                        self.params.window,
                        self.params.ergodic_tol,
                    ) {
                        Ok(r) => r,
                        Err(e) => return fail(expected, e.to_string()),
                    };
                    worst_defect = worst_defect.max(report.cauchy_defect);
                    pass &= report.converged == *converged;
                    if *converged {
                        for (p, observed_limit) in self
                            .scenario
                            .probe_grid
                            .points
                            .iter()
                            .zip(&report.limit_estimate[0])
                        {
                            match self.expected_limit(f, p, limit) {
                                Ok(Some(expect)) => {
                                    let err = (observed_limit - expect).norm();
                                    worst_limit_error = worst_limit_error.max(err);
                                    pass &= err < self.params.limit_tol;
                                }
                                Ok(None) => {}
                                Err(e) => return fail(expected, e.to_string()),
                            }
                        }
                    }
                    self.sub
                        .mean_ergodic
                        .insert(format!("{idx}:{}", f.label()), report);
                }
                ExpectationResult {
                    diagnostic,
                    provenance,
                    expected,
                    observed: json!({
                        "cauchy_defect": worst_defect,
                        "limit_error": worst_limit_error,
                    }),
                    pass,
                    error: None,
                }
            }
            Diagnostic::UniformMeanErgodic { converged } => {
                let expected = json!({ "converged": converged });
                match test_uniform_mean_ergodic(
                    &self.op,
                    &self.basis,
                    &self.scenario.probe_grid,
                    self.params.window,
                    self.params.ergodic_tol,
                ) {
                    Ok(report) => {
                        let pass = report.converged == *converged;
                        let observed = json!({
                            "converged": report.converged,
                            "cauchy_defect": report.cauchy_defect,
                        });
                        self.sub.uniform_mean_ergodic = Some(report);
                        ExpectationResult {
                            diagnostic,
                            provenance,
                            expected,
                            observed,
                            pass,
                            error: None,
                        }
                    }
                    Err(e) => fail(expected, e.to_string()),
                }
            }
            Diagnostic::HeatInvariance { accepted } => {
                let expected = json!({ "accepted": accepted });
                match verify_heat_invariance(
                    &self.scenario.weight,
                    &self.scenario.symbol,
                    &self.scenario.space.domain,
                    &self.scenario.probe_grid,
                    self.params.residual_tol,
                ) {
                    Ok(verdict) => {
                        let pass = verdict.overall == *accepted;
                        let observed = json!({
                            "overall": verdict.overall,
                            "conditions": verdict
                                .conditions
                                .iter()
                                .map(|(k, v)| (k.clone(), v.residual))
                                .collect::<BTreeMap<_, _>>(),
                        });
                        self.sub.heat_invariance = Some(verdict);
                        ExpectationResult {
                            diagnostic,
                            provenance,
                            expected,
                            observed,
                            pass,
                            error: None,
                        }
                    }
                    Err(e) => fail(expected, e.to_string()),
                }
            }
            Diagnostic::Closure { pass: expected_pass } => {
                let expected = json!({ "pass": expected_pass });
                match closure_sampling_check(
                    &self.op,
                    &self.scenario.test_fields,
                    &self.scenario.probe_grid,
                    self.params.residual_tol,
                ) {
                    Ok(report) => {
                        let pass = report.pass == *expected_pass;
                        let observed = json!({
                            "pass": report.pass,
                            "max_residual": report.max_residual,
                        });
                        self.sub.closure = Some(report);
                        ExpectationResult {
                            diagnostic,
                            provenance,
                            expected,
                            observed,
                            pass,
                            error: None,
                        }
                    }
                    Err(e) => fail(expected, e.to_string()),
                }
            }
            Diagnostic::Denseness { dense } => {
                let expected = json!({ "dense": dense });
                match check_denseness_hypothesis(
                    &self.scenario.weight,
                    &self.scenario.symbol,
                    &self.scenario.space.domain,
                    &self.scenario.base_grid,
                    self.params.denseness_m_max,
                    &self.params.dynamics,
                ) {
                    Ok(report) => {
                        let pass = report.dense == *dense;
                        let observed = json!({
                            "dense": report.dense,
                            "densities": report.densities,
                        });
                        self.sub.denseness = Some(report);
                        ExpectationResult {
                            diagnostic,
                            provenance,
                            expected,
                            observed,
                            pass,
                            error: None,
                        }
                    }
                    Err(e) => fail(expected, e.to_string()),
                }
            }
        }
    }
}

/// Executes every expectation of a scenario; sub-errors are recorded per
/// expectation and do not abort the remaining diagnostics.
pub fn run_scenario(scenario: &Scenario, params: &RunParams) -> ScenarioReport {
    let mut evaluator = Evaluator::new(scenario, params);
    let expectations: Vec<ExpectationResult> = scenario
        .expected
        .iter()
        .map(|e| evaluator.check(e))
        .collect();
    let all_pass = expectations.iter().all(|r| r.pass);
    ScenarioReport {
        name: scenario.name.clone(),
        assumption_flags: scenario.assumption_flags.clone(),
        expectations,
        all_pass,
        reports: evaluator.sub,
    }
}

// ---------------------------------------------------------------------------
// Built-in catalog
// ---------------------------------------------------------------------------

fn fields(specs: &[(&str, &str)]) -> Vec<FieldSpec> {
    specs
        .iter()
        .map(|(label, expr)| FieldSpec {
            label: label.to_string(),
            expr: expr.to_string(),
        })
        .collect()
}

fn expect(diagnostic: Diagnostic, provenance: Provenance) -> Expectation {
    Expectation {
        diagnostic,
        provenance,
    }
}

const COS45: &str = "0.7071067811865476";

/// The built-in scenario specifications.
pub fn builtin_specs() -> Vec<ScenarioSpec> {
    use Diagnostic::*;
    use Provenance::*;
    let monomials = [("1", "1"), ("z", "z"), ("z^2", "z^2")];
    let rot = |i: usize| -> String {
        if i == 0 {
            format!("{COS45}*x0 - {COS45}*x1")
        } else {
            format!("{COS45}*x0 + {COS45}*x1")
        }
    };
    vec![
        ScenarioSpec {
            name: "identity-on-plane".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Continuous,
                domain: DomainSpec::Euclidean { dim: 2 },
                membership_residual_tol: None,
            },
            weight: "1".into(),
            symbol: vec!["x0".into(), "x1".into()],
            test_fields: fields(&monomials),
            diagnostic_fields: None,
            expected: vec![
                expect(StableOrbits { stable: true }, Construction),
                expect(PowerBounded { power_bounded: true }, Construction),
                expect(Growth { classification: "bounded".into() }, Construction),
                expect(
                    MeanErgodic { converged: true, limit: LimitForm::Unspecified },
                    Construction,
                ),
                expect(Denseness { dense: true }, Construction),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Circle { center: [0.0, 0.0], radius: 1.0, count: 16 },
            probe_grid: GridShape::Points { points: vec![vec![0.3, 0.1], vec![-0.5, 0.4]] },
        },
        ScenarioSpec {
            name: "contraction-on-disk".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Holomorphic,
                domain: DomainSpec::Ball { center: vec![0.0, 0.0], radius: 1.0 },
                membership_residual_tol: None,
            },
            weight: "1".into(),
            symbol: vec!["x0/2".into(), "x1/2".into()],
            test_fields: fields(&monomials),
            diagnostic_fields: None,
            expected: vec![
                expect(StableOrbits { stable: true }, ClosedForm),
                expect(PowerBounded { power_bounded: true }, ClosedForm),
                expect(Growth { classification: "bounded".into() }, BruteForce),
                expect(
                    MeanErgodic {
                        converged: true,
                        limit: LimitForm::FixedPointValue { point: vec![0.0, 0.0] },
                    },
                    ClosedForm,
                ),
                expect(UniformMeanErgodic { converged: true }, ClosedForm),
                expect(Closure { pass: true }, Construction),
                expect(Denseness { dense: true }, Construction),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Circle { center: [0.0, 0.0], radius: 0.75, count: 24 },
            probe_grid: GridShape::Points { points: vec![vec![0.5, 0.0], vec![0.25, 0.25]] },
        },
        ScenarioSpec {
            name: "rotation-half-turn".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Holomorphic,
                domain: DomainSpec::Euclidean { dim: 2 },
                membership_residual_tol: None,
            },
            weight: "1".into(),
            symbol: vec!["-x0".into(), "-x1".into()],
            test_fields: fields(&monomials),
            diagnostic_fields: None,
            expected: vec![
                expect(StableOrbits { stable: true }, Construction),
                expect(PowerBounded { power_bounded: true }, ClosedForm),
                expect(Growth { classification: "bounded".into() }, ClosedForm),
                expect(
                    MeanErgodic {
                        converged: true,
                        limit: LimitForm::CycleAverage { period: 2 },
                    },
                    ClosedForm,
                ),
                expect(UniformMeanErgodic { converged: true }, ClosedForm),
                expect(Closure { pass: true }, Construction),
                expect(Denseness { dense: true }, Construction),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Circle { center: [0.0, 0.0], radius: 1.0, count: 16 },
            probe_grid: GridShape::Points { points: vec![vec![1.0, 0.0], vec![0.4, 0.3]] },
        },
        ScenarioSpec {
            name: "dilation-2".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Holomorphic,
                domain: DomainSpec::Euclidean { dim: 2 },
                membership_residual_tol: None,
            },
            weight: "1".into(),
            symbol: vec!["2*x0".into(), "2*x1".into()],
            test_fields: fields(&monomials),
            diagnostic_fields: None,
            expected: vec![
                expect(StableOrbits { stable: false }, ClosedForm),
                expect(PowerBounded { power_bounded: false }, ClosedForm),
                expect(
                    Growth { classification: "superexponential".into() },
                    BruteForce,
                ),
                expect(Denseness { dense: true }, Construction),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Circle { center: [0.0, 0.0], radius: 1.0, count: 16 },
            probe_grid: GridShape::Points { points: vec![vec![1.0, 0.0]] },
        },
        ScenarioSpec {
            name: "weighted-monomial-disk".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Holomorphic,
                domain: DomainSpec::Ball { center: vec![0.0, 0.0], radius: 1.0 },
                membership_residual_tol: None,
            },
            weight: "z".into(),
            symbol: vec!["x0".into(), "x1".into()],
            test_fields: fields(&monomials),
            diagnostic_fields: None,
            expected: vec![
                expect(StableOrbits { stable: true }, Construction),
                expect(PowerBounded { power_bounded: true }, ClosedForm),
                expect(Growth { classification: "bounded".into() }, ClosedForm),
                expect(Closure { pass: true }, Construction),
                expect(Denseness { dense: true }, BruteForce),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Circle { center: [0.0, 0.0], radius: 0.75, count: 24 },
            probe_grid: GridShape::Points { points: vec![vec![0.5, 0.0]] },
        },
        ScenarioSpec {
            name: "exponential-weight-line".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Continuous,
                domain: DomainSpec::Euclidean { dim: 1 },
                membership_residual_tol: None,
            },
            weight: "exp(-x0)".into(),
            symbol: vec!["x0".into()],
            test_fields: fields(&[("1", "1"), ("x", "x0")]),
            diagnostic_fields: None,
            expected: vec![
                expect(StableOrbits { stable: true }, Construction),
                expect(PowerBounded { power_bounded: false }, ClosedForm),
                expect(
                    Growth { classification: "exponential".into() },
                    ClosedForm,
                ),
                expect(Denseness { dense: true }, Construction),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Box { lo: vec![-1.0], hi: vec![1.0], spacing: 0.25 },
            probe_grid: GridShape::Points { points: vec![vec![0.0]] },
        },
        ScenarioSpec {
            name: "zero-weight-disk".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Continuous,
                domain: DomainSpec::Ball { center: vec![0.0, 0.0], radius: 1.0 },
                membership_residual_tol: None,
            },
            weight: "0".into(),
            symbol: vec!["x0/2".into(), "x1/2".into()],
            test_fields: fields(&[("1", "1"), ("z", "z")]),
            diagnostic_fields: None,
            expected: vec![
                expect(Denseness { dense: false }, Construction),
                expect(StableOrbits { stable: true }, Construction),
                expect(PowerBounded { power_bounded: true }, Construction),
                expect(Growth { classification: "bounded".into() }, Construction),
            ],
            assumption_flags: AssumptionFlags {
                denseness_c: false,
                dense_range_a: true,
                kernel_b: true,
                p_convex: true,
            },
            base_grid: GridShape::Circle { center: [0.0, 0.0], radius: 0.5, count: 12 },
            probe_grid: GridShape::Points { points: vec![vec![0.25, 0.0]] },
        },
        ScenarioSpec {
            name: "harmonic-rotation-plane".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Laplace { dim: 2 },
                domain: DomainSpec::Euclidean { dim: 2 },
                membership_residual_tol: None,
            },
            weight: "1".into(),
            symbol: vec![rot(0), rot(1)],
            test_fields: fields(&[
                ("1", "1"),
                ("x", "x0"),
                ("y", "x1"),
                ("x^2-y^2", "x0^2 - x1^2"),
                ("xy", "x0*x1"),
            ]),
            diagnostic_fields: None,
            expected: vec![
                expect(StableOrbits { stable: true }, Construction),
                expect(PowerBounded { power_bounded: true }, Cited),
                expect(Growth { classification: "bounded".into() }, ClosedForm),
                expect(
                    MeanErgodic {
                        converged: true,
                        limit: LimitForm::CycleAverage { period: 8 },
                    },
                    ClosedForm,
                ),
                expect(Closure { pass: true }, HandChecked),
                expect(Denseness { dense: true }, Construction),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Circle { center: [0.0, 0.0], radius: 1.0, count: 16 },
            probe_grid: GridShape::Points { points: vec![vec![1.0, 0.0], vec![0.5, 0.5]] },
        },
        ScenarioSpec {
            name: "heat-rescale-parabolic".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Heat { space_dim: 1 },
                domain: DomainSpec::Euclidean { dim: 2 },
                membership_residual_tol: None,
            },
            weight: "1".into(),
            symbol: vec!["x0/4".into(), "x1/2".into()],
            test_fields: fields(&[
                ("exp(t+x)", "exp(x0 + x1)"),
                ("x^2+2t", "x1^2 + 2*x0"),
                ("gauss-kernel", "x0^(-0.5)*exp(-(x1^2)/(4*x0))"),
            ]),
            diagnostic_fields: Some(vec![0, 1]),
            expected: vec![
                expect(HeatInvariance { accepted: true }, HandChecked),
                expect(Closure { pass: true }, ClosedForm),
                expect(StableOrbits { stable: true }, ClosedForm),
                expect(PowerBounded { power_bounded: true }, Cited),
                expect(Growth { classification: "bounded".into() }, ClosedForm),
                expect(
                    MeanErgodic {
                        converged: true,
                        limit: LimitForm::FixedPointValue { point: vec![0.0, 0.0] },
                    },
                    ClosedForm,
                ),
                expect(Denseness { dense: true }, Construction),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Box { lo: vec![1.0, 1.0], hi: vec![2.0, 2.0], spacing: 0.25 },
            probe_grid: GridShape::Box { lo: vec![1.0, 1.0], hi: vec![2.0, 2.0], spacing: 0.25 },
        },
        ScenarioSpec {
            name: "heat-swap".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Heat { space_dim: 1 },
                domain: DomainSpec::Euclidean { dim: 2 },
                membership_residual_tol: None,
            },
            weight: "1".into(),
            symbol: vec!["x1".into(), "x0".into()],
            test_fields: fields(&[
                ("exp(t+x)", "exp(x0 + x1)"),
                ("x^2+2t", "x1^2 + 2*x0"),
            ]),
            diagnostic_fields: None,
            expected: vec![
                expect(HeatInvariance { accepted: false }, HandChecked),
                expect(Closure { pass: false }, HandChecked),
                expect(StableOrbits { stable: true }, Construction),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Box { lo: vec![1.0, 1.0], hi: vec![2.0, 2.0], spacing: 0.25 },
            probe_grid: GridShape::Box { lo: vec![1.0, 1.0], hi: vec![2.0, 2.0], spacing: 0.25 },
        },
        ScenarioSpec {
            name: "smooth-nonlinear-interval".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Cr { order: 4 },
                domain: DomainSpec::Ball { center: vec![0.0], radius: 1.0 },
                membership_residual_tol: None,
            },
            weight: "1".into(),
            symbol: vec!["x0/2 + x0^2/8".into()],
            test_fields: fields(&[("x", "x0"), ("x^2", "x0^2"), ("sin", "sin(x0)")]),
            diagnostic_fields: None,
            expected: vec![
                expect(StableOrbits { stable: true }, ClosedForm),
                expect(
                    MeanErgodic {
                        converged: true,
                        limit: LimitForm::FixedPointValue { point: vec![0.0] },
                    },
                    ClosedForm,
                ),
                expect(Denseness { dense: true }, Construction),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Box { lo: vec![-0.9], hi: vec![0.9], spacing: 0.15 },
            probe_grid: GridShape::Points { points: vec![vec![0.5], vec![-0.3]] },
        },
        ScenarioSpec {
            name: "smooth-rotation-plane".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Cr { order: 4 },
                domain: DomainSpec::Euclidean { dim: 2 },
                membership_residual_tol: None,
            },
            weight: "1".into(),
            symbol: vec![rot(0), rot(1)],
            test_fields: fields(&[
                ("xy", "x0*x1"),
                ("x^2-y^2", "x0^2 - x1^2"),
                ("x+y", "x0 + x1"),
            ]),
            diagnostic_fields: None,
            expected: vec![
                expect(StableOrbits { stable: true }, Construction),
                expect(
                    MeanErgodic {
                        converged: true,
                        limit: LimitForm::CycleAverage { period: 8 },
                    },
                    ClosedForm,
                ),
            ],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Circle { center: [0.0, 0.0], radius: 1.0, count: 16 },
            probe_grid: GridShape::Points { points: vec![vec![1.0, 0.0], vec![0.3, 0.4]] },
        },
        ScenarioSpec {
            name: "weighted-smooth-line".into(),
            space: SpaceSpec {
                tag: SpaceTagSpec::Cr { order: 3 },
                domain: DomainSpec::Euclidean { dim: 1 },
                membership_residual_tol: None,
            },
            weight: "exp(-x0)".into(),
            symbol: vec!["x0/2".into()],
            test_fields: fields(&[("x", "x0"), ("x^2", "x0^2")]),
            diagnostic_fields: None,
            expected: vec![expect(StableOrbits { stable: true }, Construction)],
            assumption_flags: AssumptionFlags::all_true(),
            base_grid: GridShape::Box { lo: vec![-1.0], hi: vec![1.0], spacing: 0.25 },
            probe_grid: GridShape::Points { points: vec![vec![0.5]] },
        },
    ]
}

/// Builds the complete built-in catalog.
pub fn builtin_catalog() -> Vec<Scenario> {
    builtin_specs()
        .into_iter()
        .map(|spec| {
            let name = spec.name.clone();
            Scenario::from_spec(spec)
                .unwrap_or_else(|e| panic!("builtin scenario {name} failed to build: {e}"))
        })
        .collect()
}

pub fn find_scenario(catalog: &[Scenario], name: &str) -> Result<Scenario> {
    catalog
        .iter()
        .find(|s| s.name == name)
        .cloned()
        .ok_or_else(|| CoreError::Schema {
            path: "scenario_ref".into(),
            message: format!("unknown scenario `{name}`"),
        })
}
