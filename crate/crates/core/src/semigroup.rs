//! The exponential operator series `T_t f = sum_k (t^k / k!) C_{w,psi}^k f`
//! with a certified truncation order.
//!
//! Convergence is certified through the seminorm estimate
//! `|C^k f|_K <= gamma^k |f|_L` available once the orbit of `K` is enclosed
//! by `L`: the omitted tail is then dominated by the scalar exponential
//! tail `sum_{k>N} (t gamma)^k / k! * |f|_L`. Without that enclosure no
//! value is returned at all.

use crate::error::{CoreError, Result};
use crate::funcspace::{CompactGrid, SeminormSpec, CONTAINMENT_PAD};
use crate::wcomp::{ScalarField, WCOperator};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SemigroupParams {
    /// Horizon for the orbit-enclosure certificate.
    pub stability_horizon: usize,
    /// Hard cap on the truncation order.
    pub max_terms: usize,
    /// Safety inflation applied to the measured growth constant.
    pub gamma_margin: f64,
}

impl Default for SemigroupParams {
    fn default() -> Self {
        SemigroupParams {
            stability_horizon: 200,
            max_terms: 10_000,
            gamma_margin: 1.1,
        }
    }
}

/// The truncation certificate of one series evaluation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TailBudget {
    /// Growth constant: measured sup of `|w|` on the enclosing grid,
    /// inflated by the safety margin.
    pub gamma: f64,
    pub source_spec: String,
    pub target_spec: String,
    /// Truncation order: terms `k = 0..=N` are summed.
    #[serde(rename = "N")]
    pub n_terms: usize,
    /// Over-estimate of the omitted tail in the target seminorm.
    pub tail_bound: f64,
    pub eps: f64,
}

/// Certifies that every iterate of the target grid stays inside the hull of
/// the enclosing grid, walking each orbit up to the horizon.
fn certify_enclosure(
    op: &WCOperator,
    k_grid: &CompactGrid,
    l_grid: &CompactGrid,
    horizon: usize,
) -> Result<()> {
    let Some((lo, hi)) = l_grid.bounding_box() else {
        return Err(CoreError::NoGrowthBound {
            reason: "enclosing grid is empty".into(),
        });
    };
    let pad = l_grid.spacing + CONTAINMENT_PAD;
    let domain = op.domain();
    for p in &k_grid.points {
        let mut y = p.clone();
        for m in 1..=horizon {
            y = op.symbol().apply_raw(&y).map_err(|_| CoreError::NoGrowthBound {
                reason: format!("symbol evaluation failed along the orbit of {p:?}"),
            })?;
            if !domain.contains(&y) {
                return Err(CoreError::NoGrowthBound {
                    reason: format!(
                        "orbit of {p:?} leaves the domain after {m} steps; stable-orbit \
                         evidence is unavailable"
                    ),
                });
            }
            let escapes = y
                .iter()
                .enumerate()
                .any(|(i, v)| *v < lo[i] - pad || *v > hi[i] + pad);
            if escapes {
                return Err(CoreError::NoGrowthBound {
                    reason: format!(
                        "orbit of {p:?} leaves the enclosing grid hull after {m} steps; the \
                         series is not certified to converge"
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Smallest `N` whose scalar tail `sum_{k>N} a^k/k! * f_norm` is provably
/// below `eps`, together with the tail over-estimate. Log-space throughout,
/// so large `a = t*gamma` cannot overflow.
fn truncation_order(a: f64, f_norm: f64, eps: f64, max_terms: usize) -> Result<(usize, f64)> {
    if a == 0.0 || f_norm == 0.0 {
        return Ok((0, 0.0));
    }
    let log_fnorm = f_norm.ln();
    let mut log_term = a.ln(); // term_1 = a / 1!
    for n in 0..=max_terms {
        // log_term holds log(a^{N+1} / (N+1)!) for N = n.
        let q = a / (n as f64 + 2.0);
        if q < 1.0 {
            let log_tail = log_term - (1.0 - q).ln() + log_fnorm;
            if log_tail < eps.ln() {
                return Ok((n, log_tail.exp()));
            }
        }
        log_term += a.ln() - (n as f64 + 2.0).ln();
    }
    Err(CoreError::NoGrowthBound {
        reason: format!("truncation order exceeds {max_terms} for t*gamma = {a}"),
    })
}

/// Applies the truncated exponential series to `f`, returning the evaluated
/// field and its tail certificate.
///
/// Preconditions are enforced, not assumed: the orbit of the target grid
/// must stay inside the hull of the enclosing grid over the stability
/// horizon, otherwise `NoGrowthBound` is raised and no value is produced.
/// `t = 0` returns `f` exactly.
pub fn exp_apply(
    op: &WCOperator,
    f: &ScalarField,
    t: f64,
    eps: f64,
    k_spec: &SeminormSpec,
    l_spec: &SeminormSpec,
    params: &SemigroupParams,
) -> Result<(ScalarField, TailBudget)> {
    if t < 0.0 {
        return Err(CoreError::Range {
            field: "t".into(),
            message: "the semigroup parameter must be nonnegative".into(),
        });
    }
    if eps <= 0.0 {
        return Err(CoreError::Range {
            field: "eps".into(),
            message: "the tail budget must be positive".into(),
        });
    }
    if t == 0.0 {
        let budget = TailBudget {
            gamma: 0.0,
            source_spec: l_spec.describe(),
            target_spec: k_spec.describe(),
            n_terms: 0,
            tail_bound: 0.0,
            eps,
        };
        return Ok((f.clone(), budget));
    }
    certify_enclosure(op, &k_spec.grid, &l_spec.grid, params.stability_horizon)?;

    let mut w_sup = 0.0f64;
    for p in &l_spec.grid.points {
        w_sup = w_sup.max(op.weight().eval(p)?.norm());
    }
    let gamma = params.gamma_margin * w_sup;
    let mut f_norm = 0.0f64;
    for p in &l_spec.grid.points {
        f_norm = f_norm.max(f.eval(p)?.norm());
    }
    let (n_terms, tail_bound) = truncation_order(t * gamma, f_norm, eps, params.max_terms)?;

    let budget = TailBudget {
        gamma,
        source_spec: l_spec.describe(),
        target_spec: k_spec.describe(),
        n_terms,
        tail_bound,
        eps,
    };

    let op2 = op.clone();
    let inner = f.clone();
    let label = format!("exp({t}*[{}])({})", op.describe(), f.label());
    let field = ScalarField::from_fallible(label, op.dim(), move |x| {
        evaluate_series(&op2, &inner, t, n_terms, x)
    });
    Ok((field, budget))
}

/// Evaluates `sum_{k=0}^{N} (t^k/k!) C^k f (x)` along a single orbit walk,
/// in ascending k with compensated summation.
fn evaluate_series(
    op: &WCOperator,
    f: &ScalarField,
    t: f64,
    n_terms: usize,
    x: &[f64],
) -> Result<Complex64> {
    let domain = op.domain();
    if !domain.contains(x) {
        return Err(CoreError::LeftDomain {
            point: x.to_vec(),
            step: 0,
        });
    }
    let mut sum = C_ZERO;
    let mut compensation = C_ZERO;
    let mut add = |sum: &mut Complex64, value: Complex64| {
        let y = value - compensation;
        let t_new = *sum + y;
        compensation = (t_new - *sum) - y;
        *sum = t_new;
    };
    let mut coeff = 1.0f64; // t^k / k!
    let mut cocycle = Complex64::new(1.0, 0.0);
    let mut y = x.to_vec();
    add(&mut sum, f.eval(&y)?);
    for k in 1..=n_terms {
        cocycle *= op.weight().eval(&y)?;
        y = op.symbol().apply_raw(&y)?;
        if !domain.contains(&y) {
            return Err(CoreError::LeftDomain { point: y, step: k });
        }
        coeff *= t / k as f64;
        add(&mut sum, cocycle * f.eval(&y)? * coeff);
    }
    Ok(sum)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SemigroupLawReport {
    pub t: f64,
    pub s: f64,
    /// Sup over the probe of `|T_{t+s} f - T_t T_s f|`.
    pub defect: f64,
    pub pass: bool,
    pub budgets: Vec<TailBudget>,
}

/// Checks the semigroup law `T_{t+s} = T_t T_s` pointwise on a probe grid,
/// with tail budgets tightened to a tenth of the comparison tolerance.
#[allow(clippy::too_many_arguments)]
pub fn check_semigroup_law(
    op: &WCOperator,
    f: &ScalarField,
    t: f64,
    s: f64,
    probe: &CompactGrid,
    tol: f64,
    k_spec: &SeminormSpec,
    l_spec: &SeminormSpec,
    params: &SemigroupParams,
) -> Result<SemigroupLawReport> {
    let eps = tol / 10.0;
    let (combined, b0) = exp_apply(op, f, t + s, eps, k_spec, l_spec, params)?;
    let (first, b1) = exp_apply(op, f, s, eps, k_spec, l_spec, params)?;
    let (then, b2) = exp_apply(op, &first, t, eps, k_spec, l_spec, params)?;
    let mut defect = 0.0f64;
    for p in &probe.points {
        defect = defect.max((combined.eval(p)? - then.eval(p)?).norm());
    }
    Ok(SemigroupLawReport {
        t,
        s,
        defect,
        pass: defect < tol,
        budgets: vec![b0, b1, b2],
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeneratorReport {
    /// Pairs `(h, defect)` with defect the sup over the probe of
    /// `|(T_h f - f)/h - C_{w,psi} f|`.
    pub defects: Vec<(f64, f64)>,
    pub decreasing: bool,
    pub final_defect: f64,
    /// Scale of the generator values used in the pass threshold.
    pub scale: f64,
    pub pass: bool,
}

/// Difference-quotient test of the generator property: `(T_h f - f)/h`
/// must approach `C_{w,psi} f` as `h` shrinks.
#[allow(clippy::too_many_arguments)]
pub fn check_generator(
    op: &WCOperator,
    f: &ScalarField,
    probe: &CompactGrid,
    h_sequence: &[f64],
    tol: f64,
    k_spec: &SeminormSpec,
    l_spec: &SeminormSpec,
    params: &SemigroupParams,
) -> Result<GeneratorReport> {
    if h_sequence.is_empty() || h_sequence.iter().any(|h| *h <= 0.0) {
        return Err(CoreError::Range {
            field: "h_sequence".into(),
            message: "step sizes must be positive".into(),
        });
    }
    let generator = op.apply_iterate(f, 1);
    let mut scale = 0.0f64;
    let mut generator_values = Vec::with_capacity(probe.len());
    for p in &probe.points {
        let v = generator.eval(p)?;
        scale = scale.max(v.norm());
        generator_values.push(v);
    }
    let mut defects = Vec::with_capacity(h_sequence.len());
    for &h in h_sequence {
        // Truncation must stay far below the O(h) quotient error.
        let eps = (1e-3 * tol * h * (1.0 + scale)).min(1e-12);
        let (evolved, _) = exp_apply(op, f, h, eps, k_spec, l_spec, params)?;
        let mut defect = 0.0f64;
        for (p, gv) in probe.points.iter().zip(&generator_values) {
            let quotient = (evolved.eval(p)? - f.eval(p)?) / h;
            defect = defect.max((quotient - gv).norm());
        }
        defects.push((h, defect));
    }
    let decreasing = defects.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9));
    let final_defect = defects.last().unwrap().1;
    let pass = decreasing && final_defect < tol * (1.0 + scale);
    Ok(GeneratorReport {
        defects,
        decreasing,
        final_defect,
        scale,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{Domain, SpaceInstance, SpaceTag};
    use crate::wcomp::SelfMap;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk_setup() -> (WCOperator, SeminormSpec, SeminormSpec) {
        let domain = Domain::open_ball(vec![0.0, 0.0], 1.0);
        let space = SpaceInstance::new(SpaceTag::Holomorphic, domain.clone(), 1e-6).unwrap();
        let w = ScalarField::parse("z", 2, "z").unwrap();
        let op = WCOperator::new(w, SelfMap::identity(2), space).unwrap();
        let k = SeminormSpec::sup(CompactGrid::circle(&domain, &[0.0, 0.0], 0.5, 16));
        let l = SeminormSpec::sup(CompactGrid::circle(&domain, &[0.0, 0.0], 0.75, 24));
        (op, k, l)
    }

    #[test]
    fn scalar_exponential_identity_symbol() {
        // w = 1, psi = id: T_t f = e^t f; at t = 1, f = 1 the value is e.
        let domain = Domain::euclidean(2);
        let space = SpaceInstance::new(SpaceTag::Continuous, domain.clone(), 1e-6).unwrap();
        let op = WCOperator::unweighted(SelfMap::identity(2), space).unwrap();
        let spec = SeminormSpec::sup(CompactGrid::circle(&domain, &[0.0, 0.0], 1.0, 8));
        let f = ScalarField::one(2);
        let (field, budget) =
            exp_apply(&op, &f, 1.0, 1e-12, &spec, &spec, &SemigroupParams::default()).unwrap();
        let v = field.eval(&[0.3, 0.4]).unwrap();
        assert!((v - c(std::f64::consts::E, 0.0)).norm() < 1e-12);
        assert!(budget.tail_bound < 1e-12);
    }

    #[test]
    fn multiplication_operator_gives_pointwise_exponential() {
        // w(z) = z, psi = id: T_t f(z) = e^{tz} f(z); e^{1/2} at z = 1/2.
        let (op, k, l) = disk_setup();
        let f = ScalarField::one(2);
        let (field, budget) =
            exp_apply(&op, &f, 1.0, 1e-9, &k, &l, &SemigroupParams::default()).unwrap();
        let v = field.eval(&[0.5, 0.0]).unwrap();
        assert!((v - c(0.5f64.exp(), 0.0)).norm() < 1e-9, "got {v}");
        assert!(budget.gamma >= 0.75 && budget.gamma <= 0.9);
    }

    #[test]
    fn halving_symbol_closed_form() {
        // w = 1, psi(z) = z/2, f(z) = z: T_t f(z) = z e^{t/2}.
        let domain = Domain::euclidean(2);
        let space = SpaceInstance::new(SpaceTag::Continuous, domain.clone(), 1e-6).unwrap();
        let halving = SelfMap::parse("z/2", &["x0/2", "x1/2"]).unwrap();
        let op = WCOperator::unweighted(halving, space).unwrap();
        let spec = SeminormSpec::sup(CompactGrid::circle(&domain, &[0.0, 0.0], 1.0, 16));
        let f = ScalarField::parse("z", 2, "z").unwrap();
        let (field, _) =
            exp_apply(&op, &f, 2.0, 1e-10, &spec, &spec, &SemigroupParams::default()).unwrap();
        let v = field.eval(&[1.0, 0.0]).unwrap();
        assert!((v - c(std::f64::consts::E, 0.0)).norm() < 1e-10, "got {v}");
    }

    #[test]
    fn zero_time_returns_field_exactly() {
        let (op, k, l) = disk_setup();
        let f = ScalarField::parse("z^2", 2, "z^2").unwrap();
        let (field, budget) =
            exp_apply(&op, &f, 0.0, 1e-9, &k, &l, &SemigroupParams::default()).unwrap();
        let x = [0.2, 0.1];
        assert_eq!(field.eval(&x).unwrap(), f.eval(&x).unwrap());
        assert_eq!(budget.n_terms, 0);
        assert_eq!(budget.tail_bound, 0.0);
    }

    #[test]
    fn refusal_on_unstable_symbol() {
        // Doubling escapes the unit disk hull: no value may be returned.
        let domain = Domain::euclidean(2);
        let space = SpaceInstance::new(SpaceTag::Continuous, domain.clone(), 1e-6).unwrap();
        let doubling = SelfMap::parse("2z", &["2*x0", "2*x1"]).unwrap();
        let op = WCOperator::unweighted(doubling, space).unwrap();
        let spec = SeminormSpec::sup(CompactGrid::circle(&domain, &[0.0, 0.0], 1.0, 8));
        let f = ScalarField::one(2);
        let err = exp_apply(&op, &f, 1.0, 1e-9, &spec, &spec, &SemigroupParams::default())
            .unwrap_err();
        assert!(matches!(err, CoreError::NoGrowthBound { .. }), "{err:?}");
    }

    #[test]
    fn truncation_budget_is_conservative() {
        // Increasing N beyond the budgeted order changes the value by less
        // than eps.
        let (op, k, l) = disk_setup();
        let f = ScalarField::one(2);
        let eps = 1e-9;
        let (_, budget) =
            exp_apply(&op, &f, 1.0, eps, &k, &l, &SemigroupParams::default()).unwrap();
        let x = [0.5, 0.0];
        let at = |n: usize| evaluate_series(&op, &f, 1.0, n, &x).unwrap();
        let budgeted = at(budget.n_terms);
        let extended = at(budget.n_terms + 25);
        assert!((budgeted - extended).norm() < eps);
    }

    #[test]
    fn semigroup_law_multiplication_operator() {
        let (op, k, l) = disk_setup();
        let f = ScalarField::one(2);
        let probe = CompactGrid::singleton(vec![0.5, 0.0]);
        let report = check_semigroup_law(
            &op,
            &f,
            0.3,
            0.2,
            &probe,
            1e-8,
            &k,
            &l,
            &SemigroupParams::default(),
        )
        .unwrap();
        assert!(report.pass, "defect {}", report.defect);
        // Closed form on both sides: e^{z/2} at z = 1/2.
        assert!(report.defect < 1e-10);
    }

    #[test]
    fn semigroup_law_zero_time_edge() {
        let (op, k, l) = disk_setup();
        let f = ScalarField::parse("z", 2, "z").unwrap();
        let probe = CompactGrid::singleton(vec![0.3, 0.2]);
        let report = check_semigroup_law(
            &op,
            &f,
            0.0,
            0.4,
            &probe,
            1e-8,
            &k,
            &l,
            &SemigroupParams::default(),
        )
        .unwrap();
        assert!(report.pass);
    }

    #[test]
    fn semigroup_law_alternating_symbol() {
        // psi(z) = -z: T_t f(z) = z e^{-t} for f(z) = z.
        let domain = Domain::euclidean(2);
        let space = SpaceInstance::new(SpaceTag::Continuous, domain.clone(), 1e-6).unwrap();
        let flip = SelfMap::parse("-z", &["-x0", "-x1"]).unwrap();
        let op = WCOperator::unweighted(flip, space).unwrap();
        let spec = SeminormSpec::sup(CompactGrid::circle(&domain, &[0.0, 0.0], 1.0, 8));
        let f = ScalarField::parse("z", 2, "z").unwrap();
        let probe = CompactGrid::singleton(vec![1.0, 0.0]);
        let report = check_semigroup_law(
            &op,
            &f,
            1.0,
            1.0,
            &probe,
            1e-8,
            &spec,
            &spec,
            &SemigroupParams::default(),
        )
        .unwrap();
        assert!(report.pass, "defect {}", report.defect);
        // Brute-force high-order series oracle for T_2 f(1) = e^{-2}.
        let direct = evaluate_series(&op, &f, 2.0, 60, &[1.0, 0.0]).unwrap();
        assert!((direct - c((-2.0f64).exp(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn generator_difference_quotient_converges() {
        let (op, k, l) = disk_setup();
        let f = ScalarField::one(2);
        let probe = CompactGrid::singleton(vec![0.5, 0.0]);
        let report = check_generator(
            &op,
            &f,
            &probe,
            &[1e-1, 1e-2, 1e-3, 1e-4],
            1e-3,
            &k,
            &l,
            &SemigroupParams::default(),
        )
        .unwrap();
        assert!(report.pass, "{report:?}");
        // Quotient error is O(h): halving h roughly halves the defect.
        let report2 = check_generator(
            &op,
            &f,
            &probe,
            &[2e-2, 1e-2],
            1e-1,
            &k,
            &l,
            &SemigroupParams::default(),
        )
        .unwrap();
        let ratio = report2.defects[0].1 / report2.defects[1].1;
        assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn generator_constant_weight_two() {
        // w = 2, psi = id, f(z) = z at z = 1: limit 2 * f(1) = 2.
        let domain = Domain::euclidean(2);
        let space = SpaceInstance::new(SpaceTag::Continuous, domain.clone(), 1e-6).unwrap();
        let w = ScalarField::constant(2, c(2.0, 0.0));
        let op = WCOperator::new(w, SelfMap::identity(2), space).unwrap();
        let spec = SeminormSpec::sup(CompactGrid::circle(&domain, &[0.0, 0.0], 1.5, 8));
        let f = ScalarField::parse("z", 2, "z").unwrap();
        let probe = CompactGrid::singleton(vec![1.0, 0.0]);
        let report = check_generator(
            &op,
            &f,
            &probe,
            &[1e-2, 1e-3, 1e-4],
            1e-3,
            &spec,
            &spec,
            &SemigroupParams::default(),
        )
        .unwrap();
        assert!(report.pass, "{report:?}");
        assert!((report.scale - 2.0).abs() < 1e-12);
    }
}
