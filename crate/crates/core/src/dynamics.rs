//! Diagnostics for the dynamical behaviour of a weighted composition
//! operator: stable orbits of the symbol, growth classification of iterate
//! seminorms, power boundedness, (uniform) mean ergodicity of Cesaro means,
//! and the nonvanishing-density hypothesis on the weight.
//!
//! Every verdict produced here is finite-horizon evidence, not a proof: a
//! "stable" report certifies containment up to the probed horizon, and a
//! negative report with monotone escape is strong evidence of instability.

use crate::error::{CoreError, Result};
use crate::funcspace::{
    build_exhaustion, least_enclosing_level, CompactGrid, Domain, SeminormKind, SeminormSpec,
    CONTAINMENT_PAD,
};
use crate::wcomp::{ScalarField, SelfMap, WCOperator};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Tunable horizons and thresholds, with the calibrated defaults.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DynamicsParams {
    /// Iterate horizon M.
    pub horizon: usize,
    /// Largest exhaustion level accepted as an enclosing compact set.
    pub max_level: u32,
    /// Log-space slope below which a growth series counts as flat.
    pub slope_tol: f64,
    /// RMS residual below which a log-linear fit is accepted.
    pub fit_tol: f64,
    /// Allowed ratio max/first for a bounded series.
    pub bound_factor: f64,
    /// Smallest admissible nonvanishing fraction in the denseness check.
    pub density_floor: f64,
    /// Grid spacing for internally built exhaustion grids.
    pub resolution: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        DynamicsParams {
            horizon: 200,
            max_level: 1000,
            slope_tol: 1e-3,
            fit_tol: 1e-2,
            bound_factor: 10.0,
            density_floor: 0.5,
            resolution: 0.25,
        }
    }
}

/// First witness of an orbit leaving every admissible compact set.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EscapeEvidence {
    /// The starting grid point whose orbit escapes.
    pub point: Vec<f64>,
    /// The iterate count at which the escape was observed.
    pub iterate: usize,
    /// `max(|psi^m(x)|, 1/dist)` at the escape, or infinity if the symbol
    /// left the domain outright.
    pub magnitude: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OrbitReport {
    pub stable: bool,
    pub horizon: usize,
    /// Least exhaustion level containing every probed iterate, when stable.
    pub enclosing_level: Option<u32>,
    pub escape_evidence: Option<EscapeEvidence>,
    /// Escape measure nondecreasing over the last quarter of the horizon
    /// (only meaningful, and only set, for unstable verdicts).
    pub monotone_escape: bool,
}

/// The size of the smallest exhaustion level that would hold `y`, as a real
/// number (infinite outside the domain).
fn escape_measure(domain: &Domain, y: &[f64]) -> f64 {
    let dist = domain.dist_to_complement(y);
    if dist.is_nan() || dist <= 0.0 {
        return f64::INFINITY;
    }
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    norm.max(1.0 / dist)
}

/// Probes whether every forward image `psi^m(K)`, `m <= M`, stays inside a
/// single level of the canonical exhaustion.
///
/// A symbol leaving the domain counts as unstable at that point; the report
/// then carries the escape witness instead of an error.
pub fn check_stable_orbits(
    symbol: &SelfMap,
    domain: &Domain,
    k: &CompactGrid,
    params: &DynamicsParams,
) -> Result<OrbitReport> {
    if k.is_empty() {
        return Err(CoreError::Precondition {
            message: "stable-orbit check needs a nonempty grid".into(),
        });
    }
    let m_max = params.horizon;
    let mut trace = vec![0.0f64; m_max + 1];
    let mut worst_level: u32 = 1;
    let mut escape: Option<EscapeEvidence> = None;

    'points: for p in &k.points {
        let mut y = p.clone();
        #[allow(clippy::needless_range_loop)] // m is the iterate count
        for m in 0..=m_max {
            if m > 0 {
                y = match symbol.apply_raw(&y) {
                    Ok(next) => next,
                    Err(_) => {
                        escape.get_or_insert(EscapeEvidence {
                            point: p.clone(),
                            iterate: m,
                            magnitude: f64::INFINITY,
                        });
                        continue 'points;
                    }
                };
            }
            let measure = escape_measure(domain, &y);
            trace[m] = trace[m].max(measure);
            match least_enclosing_level(domain, &y) {
                Some(level) if level <= params.max_level => {
                    worst_level = worst_level.max(level);
                }
                _ => {
                    escape.get_or_insert(EscapeEvidence {
                        point: p.clone(),
                        iterate: m,
                        magnitude: measure,
                    });
                    // Keep walking to fill the escape trace for the
                    // monotonicity heuristic, unless values degenerate.
                    if !measure.is_finite() {
                        continue 'points;
                    }
                }
            }
        }
    }

    let stable = escape.is_none();
    let monotone_escape = if stable {
        false
    } else {
        let start = 3 * m_max / 4;
        (start..m_max).all(|m| trace[m + 1] >= trace[m] - 1e-12 * trace[m].abs().max(1.0))
    };
    Ok(OrbitReport {
        stable,
        horizon: m_max,
        enclosing_level: stable.then_some(worst_level),
        escape_evidence: escape,
        monotone_escape,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum GrowthClassification {
    Bounded,
    Exponential { rate: f64 },
    Superexponential,
    Inconclusive,
}

impl GrowthClassification {
    pub fn is_bounded(&self) -> bool {
        matches!(self, GrowthClassification::Bounded)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GrowthClassification::Bounded => "bounded",
            GrowthClassification::Exponential { .. } => "exponential",
            GrowthClassification::Superexponential => "superexponential",
            GrowthClassification::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GrowthReport {
    /// Descriptions of the (target K, source L) seminorm pair.
    pub seminorm_pair: (String, String),
    /// Operator-seminorm estimates, one per iterate `m = 1..=M`. Entries can
    /// be infinite when the true value overflows; classification happens in
    /// log space.
    pub values: Vec<f64>,
    pub log_values: Vec<f64>,
    pub classification: GrowthClassification,
    /// RMS residual of the log-linear fit behind the classification.
    pub fit_residual: f64,
    /// Present when iterates escaped the source hull or the domain.
    pub escape: Option<EscapeEvidence>,
}

fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rms = (points
        .iter()
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Some((slope, intercept, rms))
}

/// Labels a positive series (given in log space) as bounded, exponential,
/// superexponential, or inconclusive.
fn classify_log_series(
    log_values: &[f64],
    escaped: bool,
    params: &DynamicsParams,
) -> (GrowthClassification, f64) {
    if escaped || log_values.iter().any(|v| *v == f64::INFINITY || v.is_nan()) {
        return (GrowthClassification::Superexponential, 0.0);
    }
    if log_values.iter().all(|v| *v == f64::NEG_INFINITY) {
        // Identically zero estimates: the zero operator is power bounded.
        return (GrowthClassification::Bounded, 0.0);
    }
    let finite: Vec<(f64, f64)> = log_values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(i, v)| ((i + 1) as f64, *v))
        .collect();
    let Some((slope, _, rms)) = linear_fit(&finite) else {
        return (GrowthClassification::Inconclusive, 0.0);
    };
    let first = log_values[0];
    let max = log_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ratio_ok = if first.is_finite() {
        max - first <= params.bound_factor.ln()
    } else {
        max == f64::NEG_INFINITY
    };
    if ratio_ok && slope <= params.slope_tol {
        return (GrowthClassification::Bounded, rms);
    }
    if rms < params.fit_tol && slope > params.slope_tol {
        return (GrowthClassification::Exponential { rate: slope }, rms);
    }
    // Convexity of the log series signals faster-than-exponential growth.
    if finite.len() >= 3 {
        let second_diffs: Vec<f64> = finite
            .windows(3)
            .map(|w| w[2].1 - 2.0 * w[1].1 + w[0].1)
            .collect();
        let mean = second_diffs.iter().sum::<f64>() / second_diffs.len() as f64;
        if mean > params.slope_tol {
            return (GrowthClassification::Superexponential, rms);
        }
    }
    (GrowthClassification::Inconclusive, rms)
}

fn seminorm_or_sup(
    spec: &SeminormSpec,
    f: &ScalarField,
    domain: &Domain,
) -> Result<f64> {
    crate::funcspace::eval_seminorm(spec, f, Some(domain))
}

/// Estimates operator-seminorm growth `m -> max_f |C^m f|_K / |f|_L` over a
/// declared basis and classifies it.
///
/// The estimate is a reproducible lower bound for the true operator
/// seminorm; a sup over the unit ball is not computable. Iterates leaving
/// the hull of the source grid `L` (or the domain) dominate any seminorm
/// bound and force the superexponential classification.
pub fn estimate_growth(
    op: &WCOperator,
    basis: &[ScalarField],
    k_spec: &SeminormSpec,
    l_spec: &SeminormSpec,
    params: &DynamicsParams,
) -> Result<GrowthReport> {
    let domain = op.domain();
    let m_max = params.horizon;
    let usable: Vec<(&ScalarField, f64)> = basis
        .iter()
        .map(|f| Ok((f, seminorm_or_sup(l_spec, f, domain)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, n)| *n > 0.0)
        .collect();
    if usable.is_empty() {
        return Err(CoreError::EmptyBasis);
    }
    if l_spec.grid.is_empty() {
        return Err(CoreError::Precondition {
            message: "growth estimation needs a nonempty source grid".into(),
        });
    }
    let (l_lo, l_hi) = l_spec.grid.bounding_box().expect("nonempty grid");
    let pad = l_spec.grid.spacing + CONTAINMENT_PAD;
    let inside_hull = |y: &[f64]| {
        y.iter()
            .enumerate()
            .all(|(i, v)| *v >= l_lo[i] - pad && *v <= l_hi[i] + pad)
    };

    let mut log_sup = vec![f64::NEG_INFINITY; m_max];
    let mut escape: Option<EscapeEvidence> = None;
    for (f, l_norm) in &usable {
        let log_l = l_norm.ln();
        for p in &k_spec.grid.points {
            let mut y = p.clone();
            let mut log_cocycle = 0.0f64;
            for m in 1..=m_max {
                log_cocycle += op.weight().eval(&y)?.norm().ln();
                y = match op.symbol().apply_raw(&y) {
                    Ok(next) => next,
                    Err(_) => {
                        escape.get_or_insert(EscapeEvidence {
                            point: p.clone(),
                            iterate: m,
                            magnitude: f64::INFINITY,
                        });
                        break;
                    }
                };
                if !domain.contains(&y) || !inside_hull(&y) {
                    escape.get_or_insert(EscapeEvidence {
                        point: p.clone(),
                        iterate: m,
                        magnitude: escape_measure(domain, &y),
                    });
                    break;
                }
                let value = log_cocycle + f.eval(&y)?.norm().ln() - log_l;
                log_sup[m - 1] = log_sup[m - 1].max(value);
            }
            if escape.is_some() {
                break;
            }
        }
        if escape.is_some() {
            break;
        }
    }

    let (classification, fit_residual) =
        classify_log_series(&log_sup, escape.is_some(), params);
    Ok(GrowthReport {
        seminorm_pair: (k_spec.describe(), l_spec.describe()),
        values: log_sup.iter().map(|v| v.exp()).collect(),
        log_values: log_sup,
        classification,
        fit_residual,
        escape,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PowerBoundedReport {
    pub orbit: OrbitReport,
    /// Per-iterate sups of `|C^m_{w,psi}(w)|` over the probe grids.
    pub weight_orbit_values: Vec<f64>,
    pub weight_orbit_bounded: bool,
    pub growth: GrowthReport,
    /// Empirical m-topologizability: the growth estimates admit a geometric
    /// domination, i.e. classify as bounded or exponential.
    pub m_topologizable: bool,
    /// The composite verdict: stable orbits and bounded weight orbit.
    pub power_bounded: bool,
    /// Whether the composite verdict matches the direct growth
    /// classification on the same probes.
    pub agrees_with_growth: bool,
    /// Whether the composite verdict also matches the route through
    /// topologizability plus weight-orbit boundedness.
    pub agrees_with_topologizability: bool,
}

/// Runs the two equivalent routes to power boundedness on sup-seminorm
/// instances: (stable orbits and bounded weight orbit) against direct growth
/// classification, and reports whether they agree.
pub fn test_power_bounded_characterization(
    op: &WCOperator,
    basis: &[ScalarField],
    k_specs: &[SeminormSpec],
    params: &DynamicsParams,
) -> Result<PowerBoundedReport> {
    if k_specs.is_empty() {
        return Err(CoreError::Precondition {
            message: "at least one target seminorm is required".into(),
        });
    }
    if !op.space().tag.is_sup_type() {
        return Err(CoreError::Precondition {
            message: format!(
                "power-bounded characterization needs sup-type seminorms, got {}",
                op.space().tag.name()
            ),
        });
    }
    if k_specs.iter().any(|s| s.kind != SeminormKind::Sup) {
        return Err(CoreError::Precondition {
            message: "target seminorms must be of sup kind".into(),
        });
    }
    let domain = op.domain();
    let m_max = params.horizon;

    let orbit_grid = CompactGrid::from_points(
        k_specs[0].grid.dim,
        k_specs
            .iter()
            .flat_map(|s| s.grid.points.iter().cloned())
            .collect(),
        k_specs[0].grid.spacing,
        "union of probe grids",
    );
    let orbit = check_stable_orbits(op.symbol(), domain, &orbit_grid, params)?;

    // The weight orbit C^m_{w,psi}(w) evaluates to the (m+1)-step cocycle.
    let mut weight_log = vec![f64::NEG_INFINITY; m_max];
    let mut weight_escaped = false;
    'outer: for p in &orbit_grid.points {
        let mut y = p.clone();
        let mut log_cocycle = op.weight().eval(&y)?.norm().ln();
        for m in 1..=m_max {
            y = match op.symbol().apply_raw(&y) {
                Ok(next) => next,
                Err(_) => {
                    weight_escaped = true;
                    break 'outer;
                }
            };
            if !domain.contains(&y) {
                weight_escaped = true;
                break 'outer;
            }
            log_cocycle += op.weight().eval(&y)?.norm().ln();
            weight_log[m - 1] = weight_log[m - 1].max(log_cocycle);
        }
    }
    let (weight_class, _) = classify_log_series(&weight_log, weight_escaped, params);
    let weight_orbit_bounded = weight_class.is_bounded();

    let l_spec = if let Some(level) = orbit.enclosing_level {
        let (_, grid) = build_exhaustion(domain, level, params.resolution);
        if grid.is_empty() {
            k_specs[0].clone()
        } else {
            SeminormSpec::sup(grid)
        }
    } else {
        k_specs[0].clone()
    };
    let growth = estimate_growth(op, basis, &k_specs[0], &l_spec, params)?;

    let power_bounded = orbit.stable && weight_orbit_bounded;
    let agrees_with_growth = power_bounded == growth.classification.is_bounded();
    let m_topologizable = matches!(
        growth.classification,
        GrowthClassification::Bounded | GrowthClassification::Exponential { .. }
    );
    let agrees_with_topologizability =
        power_bounded == (m_topologizable && weight_orbit_bounded);
    Ok(PowerBoundedReport {
        orbit,
        weight_orbit_values: weight_log.iter().map(|v| v.exp()).collect(),
        weight_orbit_bounded,
        growth,
        m_topologizable,
        power_bounded,
        agrees_with_growth,
        agrees_with_topologizability,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ErgodicReport {
    pub converged: bool,
    /// Cesaro values at the highest probed index, one row per field, one
    /// column per probe point.
    pub limit_estimate: Vec<Vec<Complex64>>,
    /// Largest pairwise sup-difference of Cesaro fields over the window.
    pub cauchy_defect: f64,
    /// Log-log decay rate of `|T_[n] - T_[2n]|`, when it decreases.
    pub rate_estimate: Option<f64>,
}

fn window_samples(n1: usize, n2: usize) -> Vec<usize> {
    let mut samples: Vec<usize> = (0..=4).map(|j| n1 + j * (n2 - n1) / 4).collect();
    samples.dedup();
    samples
}

/// Tests convergence of the Cesaro means of one field on a probe grid: the
/// sampled means across the window must be Cauchy within `tol`.
pub fn test_mean_ergodic(
    op: &WCOperator,
    f: &ScalarField,
    probe: &CompactGrid,
    window: (usize, usize),
    tol: f64,
) -> Result<ErgodicReport> {
    test_uniform_mean_ergodic(op, std::slice::from_ref(f), probe, window, tol)
}

/// Family version: the Cauchy defect is maximized over all fields, so the
/// verdict is uniform over the (finite, hence bounded) family.
pub fn test_uniform_mean_ergodic(
    op: &WCOperator,
    family: &[ScalarField],
    probe: &CompactGrid,
    window: (usize, usize),
    tol: f64,
) -> Result<ErgodicReport> {
    let (n1, n2) = window;
    if n1 >= n2 || n1 == 0 {
        return Err(CoreError::Range {
            field: "window".into(),
            message: format!("need 1 <= n1 < n2, got ({n1}, {n2})"),
        });
    }
    if probe.is_empty() {
        return Err(CoreError::Precondition {
            message: "mean-ergodic test needs a nonempty probe grid".into(),
        });
    }
    let samples = window_samples(n1, n2);
    let mut defect = 0.0f64;
    let mut limit_rows = Vec::with_capacity(family.len());
    // Decay probes n, 2n, 4n, ... within the window for the rate estimate.
    let mut decay_ns = Vec::new();
    let mut n = n1;
    while 2 * n <= n2 {
        decay_ns.push(n);
        n *= 2;
    }
    let mut decay_sup = vec![0.0f64; decay_ns.len()];

    for f in family {
        let mut row = Vec::with_capacity(probe.len());
        for p in &probe.points {
            let trajectory = op.cesaro_trajectory(f, p, n2)?;
            for (i, &a) in samples.iter().enumerate() {
                for &b in samples.iter().skip(i + 1) {
                    defect = defect.max((trajectory[a - 1] - trajectory[b - 1]).norm());
                }
            }
            for (i, &dn) in decay_ns.iter().enumerate() {
                decay_sup[i] =
                    decay_sup[i].max((trajectory[dn - 1] - trajectory[2 * dn - 1]).norm());
            }
            row.push(trajectory[n2 - 1]);
        }
        limit_rows.push(row);
    }

    let decreasing = decay_sup.windows(2).all(|w| w[1] < w[0]);
    let rate_estimate = if decay_sup.len() >= 2 && decreasing && decay_sup.iter().all(|v| *v > 0.0)
    {
        let pts: Vec<(f64, f64)> = decay_ns
            .iter()
            .zip(&decay_sup)
            .map(|(&n, &v)| ((n as f64).ln(), v.ln()))
            .collect();
        linear_fit(&pts).map(|(slope, _, _)| -slope)
    } else {
        None
    };

    Ok(ErgodicReport {
        converged: defect < tol,
        limit_estimate: limit_rows,
        cauchy_defect: defect,
        rate_estimate,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DensenessReport {
    /// Fraction of sample points with `w(psi^m(x)) != 0`, for `m = 0..=m_max`.
    pub densities: Vec<f64>,
    /// Iterate counts whose nonvanishing fraction fell below the floor.
    pub flagged: Vec<usize>,
    pub dense: bool,
    pub zero_tol: f64,
}

/// Samples the hypothesis that `{ x : w(psi^m(x)) != 0 }` is dense, for each
/// `m` up to `m_max`. Exact zeros only matter as sets; the sampled fraction
/// against a scale-relative threshold is the observable.
pub fn check_denseness_hypothesis(
    weight: &ScalarField,
    symbol: &SelfMap,
    domain: &Domain,
    sample_grid: &CompactGrid,
    m_max: usize,
    params: &DynamicsParams,
) -> Result<DensenessReport> {
    if sample_grid.is_empty() {
        return Err(CoreError::Precondition {
            message: "denseness check needs a nonempty sample grid".into(),
        });
    }
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(m_max + 1);
    let mut scale = 0.0f64;
    let mut orbits: Vec<Vec<f64>> = sample_grid.points.clone();
    for m in 0..=m_max {
        if m > 0 {
            for y in orbits.iter_mut() {
                let next = symbol.apply_raw(y)?;
                if !domain.contains(&next) {
                    return Err(CoreError::LeftDomain {
                        point: next,
                        step: m,
                    });
                }
                *y = next;
            }
        }
        let mut row = Vec::with_capacity(orbits.len());
        for y in &orbits {
            let v = weight.eval(y)?.norm();
            scale = scale.max(v);
            row.push(v);
        }
        values.push(row);
    }
    let zero_tol = 1e-12 * (1.0 + scale);
    let densities: Vec<f64> = values
        .iter()
        .map(|row| row.iter().filter(|v| **v > zero_tol).count() as f64 / row.len() as f64)
        .collect();
    let flagged: Vec<usize> = densities
        .iter()
        .enumerate()
        .filter(|(_, d)| **d < params.density_floor)
        .map(|(m, _)| m)
        .collect();
    Ok(DensenessReport {
        dense: flagged.is_empty(),
        densities,
        flagged,
        zero_tol,
    })
}
