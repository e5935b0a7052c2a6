//! Constant-coefficient differential operators, kernel-membership residuals,
//! exponential solutions, and the closed-form invariance verifier for the
//! heat operator.
//!
//! Coordinate 0 plays the role of time for the heat operator
//! `H = d/dt - Laplace_x`; spatial coordinates are `1..=d`.

use crate::error::{CoreError, Result};
use crate::funcspace::{CompactGrid, Domain};
use crate::multiindex::MultiIndex;
use crate::wcomp::{ScalarField, SelfMap, WCOperator};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tolerance for accepting a frequency vector as a characteristic zero.
pub const VARIETY_TOL: f64 = 1e-12;

/// A polynomial differential operator `P(d) = sum a_alpha d^alpha`.
///
/// The `elliptic` / `hypoelliptic` flags are caller declarations validated
/// only by spot checks; deciding them is out of scope for the diagnostics
/// that merely branch on them.
#[derive(Clone, Debug, Serialize)]
pub struct DiffOperator {
    label: String,
    dim: usize,
    coefficients: BTreeMap<MultiIndex, Complex64>,
    order: u32,
    elliptic: bool,
    hypoelliptic: bool,
}

impl DiffOperator {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        coefficients: Vec<(MultiIndex, Complex64)>,
        elliptic: bool,
        hypoelliptic: bool,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (alpha, a) in coefficients {
            if alpha.dim() != dim {
                return Err(CoreError::DimensionMismatch {
                    expected: dim,
                    got: alpha.dim(),
                });
            }
            if a != C_ZERO {
                *map.entry(alpha).or_insert(C_ZERO) += a;
            }
        }
        map.retain(|_, a| *a != C_ZERO);
        let order = map.keys().map(|a| a.order()).max().unwrap_or(0);
        Ok(DiffOperator {
            label: label.into(),
            dim,
            coefficients: map,
            order,
            elliptic,
            hypoelliptic,
        })
    }

    /// `Laplace = sum_j d_j^2` on `R^d`.
    pub fn laplace(dim: usize) -> Self {
        let coeffs = (0..dim)
            .map(|j| {
                let mut v = vec![0u32; dim];
                v[j] = 2;
                (MultiIndex::new(v), Complex64::new(1.0, 0.0))
            })
            .collect();
        DiffOperator::new("laplace", dim, coeffs, true, true).unwrap()
    }

    /// The heat operator `d_0 - sum_{j>=1} d_j^2` on `R^{1+d}`.
    pub fn heat(space_dim: usize) -> Self {
        let dim = space_dim + 1;
        let mut coeffs = vec![(MultiIndex::unit(dim, 0), Complex64::new(1.0, 0.0))];
        for j in 1..dim {
            let mut v = vec![0u32; dim];
            v[j] = 2;
            coeffs.push((MultiIndex::new(v), Complex64::new(-1.0, 0.0)));
        }
        DiffOperator::new("heat", dim, coeffs, false, true).unwrap()
    }

    /// The Cauchy-Riemann operator `(d_0 + i d_1)/2` on `C ~ R^2`; its kernel
    /// is the holomorphic fields.
    pub fn cauchy_riemann() -> Self {
        let coeffs = vec![
            (MultiIndex::unit(2, 0), Complex64::new(0.5, 0.0)),
            (MultiIndex::unit(2, 1), Complex64::new(0.0, 0.5)),
        ];
        DiffOperator::new("cauchy-riemann", 2, coeffs, true, true).unwrap()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn elliptic(&self) -> bool {
        self.elliptic
    }

    pub fn hypoelliptic(&self) -> bool {
        self.hypoelliptic
    }

    pub fn coefficients(&self) -> &BTreeMap<MultiIndex, Complex64> {
        &self.coefficients
    }

    /// The polynomial symbol `P(xi) = sum a_alpha xi^alpha`.
    pub fn symbol(&self, xi: &[Complex64]) -> Complex64 {
        self.coefficients
            .iter()
            .map(|(alpha, a)| a * alpha.complex_power(xi))
            .sum()
    }

    /// The principal part `P_m(xi)`, the top-order homogeneous piece.
    pub fn principal_symbol(&self, xi: &[Complex64]) -> Complex64 {
        self.coefficients
            .iter()
            .filter(|(alpha, _)| alpha.order() == self.order)
            .map(|(alpha, a)| a * alpha.complex_power(xi))
            .sum()
    }

    /// Spot check of the declared ellipticity flag: the principal symbol
    /// must not vanish at the given nonzero real sample directions.
    pub fn spot_check_elliptic(&self, samples: &[Vec<f64>]) -> bool {
        if !self.elliptic {
            return true;
        }
        samples.iter().all(|xi| {
            let c: Vec<Complex64> = xi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let norm: f64 = xi.iter().map(|v| v * v).sum();
            norm == 0.0 || self.principal_symbol(&c).norm() > 1e-12
        })
    }

    /// `P(d) u (x)`, exact when `u` has a derivative oracle.
    pub fn apply(&self, u: &ScalarField, x: &[f64], domain: Option<&Domain>) -> Result<Complex64> {
        let mut sum = C_ZERO;
        for (alpha, a) in &self.coefficients {
            sum += a * u.derivative(alpha, x, domain)?;
        }
        Ok(sum)
    }
}

/// Sup over the grid of `|P(d) u|` -- the membership residual for the kernel
/// instance `{ u : P(d) u = 0 }`.
pub fn membership_residual(
    operator: &DiffOperator,
    u: &ScalarField,
    grid: &CompactGrid,
    domain: Option<&Domain>,
) -> Result<f64> {
    let mut sup = 0.0f64;
    for p in &grid.points {
        sup = sup.max(operator.apply(u, p, domain)?.norm());
    }
    Ok(sup)
}

/// An exponential kernel element `e_zeta(x) = exp(sum zeta_j x_j)` with the
/// exact derivative identity `d^alpha e_zeta = zeta^alpha e_zeta`.
#[derive(Clone, Debug)]
pub struct ExponentialSolution {
    zeta: Vec<Complex64>,
    field: ScalarField,
}

impl ExponentialSolution {
    pub fn zeta(&self) -> &[Complex64] {
        &self.zeta
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }
}

/// Builds `e_zeta` for a characteristic zero of `P`, rejecting frequency
/// vectors with `|P(zeta)| >= 1e-12`.
pub fn make_exponential_solution(
    operator: &DiffOperator,
    zeta: Vec<Complex64>,
) -> Result<ExponentialSolution> {
    if zeta.len() != operator.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: operator.dim(),
            got: zeta.len(),
        });
    }
    let value = operator.symbol(&zeta);
    if value.norm() >= VARIETY_TOL {
        return Err(CoreError::NotInVariety { value });
    }
    Ok(exponential_field(zeta))
}

/// The exponential field itself, without the kernel check.
pub fn exponential_field(zeta: Vec<Complex64>) -> ExponentialSolution {
    let dim = zeta.len();
    let z_eval = zeta.clone();
    let z_deriv = zeta.clone();
    let mut field = ScalarField::from_fn(format!("e_zeta({zeta:?})"), dim, move |x| {
        let phase: Complex64 = z_eval
            .iter()
            .zip(x)
            .map(|(z, &v)| z * v)
            .sum();
        phase.exp()
    });
    field = {
        let mut f = field;
        let eval_zeta = z_deriv.clone();
        f.set_derivative_oracle(move |alpha: &MultiIndex, x: &[f64]| {
            let phase: Complex64 = eval_zeta.iter().zip(x).map(|(z, &v)| z * v).sum();
            Ok(alpha.complex_power(&eval_zeta) * phase.exp())
        });
        f
    };
    ExponentialSolution { zeta, field }
}

/// One residual of the heat-invariance system.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub residual: f64,
    pub pass: bool,
}

/// Verdict of the closed-form invariance conditions for the heat operator.
///
/// Keys: `a_weight` and `a_wpsi_j` (the weight and the products `w psi_j`
/// are caloric), `b` (`H(w psi_0) = w |grad_x psi_1|^2`), `c_time`
/// (`w |grad_x psi_0|^2 = 0`), `c_equal` (spatial gradient norms agree), and
/// `d_orth` (`w <grad_x psi_j, grad_x psi_k> = 0` for `j != k`).
#[derive(Clone, Debug, Serialize)]
pub struct InvarianceVerdict {
    pub conditions: BTreeMap<String, ConditionCheck>,
    pub overall: bool,
    pub probe: CompactGrid,
}

/// Checks the invariance conditions for `(w, psi)` on the heat kernel over a
/// probe grid. The conditions are equivalent to `C_{w,psi}` mapping caloric
/// fields to caloric fields, so an accepting verdict must be corroborated by
/// small membership residuals of `C_{w,psi}(u)` for caloric probes `u`.
pub fn verify_heat_invariance(
    weight: &ScalarField,
    symbol: &SelfMap,
    domain: &Domain,
    probe: &CompactGrid,
    tol: f64,
) -> Result<InvarianceVerdict> {
    let dim = domain.dim();
    if dim < 2 {
        return Err(CoreError::Precondition {
            message: "heat invariance needs one time plus at least one space coordinate".into(),
        });
    }
    let d = dim - 1;
    let heat = DiffOperator::heat(d);

    let mut r_a_weight = 0.0f64;
    let mut r_a_wpsi = 0.0f64;
    let mut r_b = 0.0f64;
    let mut r_c_time = 0.0f64;
    let mut r_c_equal = 0.0f64;
    let mut r_d_orth = 0.0f64;

    let products: Vec<ScalarField> = (0..=d)
        .map(|j| weight.times(symbol.component(j)))
        .collect::<Result<Vec<_>>>()?;

    for p in &probe.points {
        let w = weight.eval(p)?;
        // Spatial gradients of every symbol component.
        let mut grads: Vec<Vec<Complex64>> = Vec::with_capacity(d + 1);
        for j in 0..=d {
            let mut g = Vec::with_capacity(d);
            for sp in 1..=d {
                g.push(symbol.component(j).derivative(
                    &MultiIndex::unit(dim, sp),
                    p,
                    Some(domain),
                )?);
            }
            grads.push(g);
        }
        let grad_sq = |j: usize| -> Complex64 { grads[j].iter().map(|v| v * v).sum() };
        let grad_dot = |j: usize, k: usize| -> Complex64 {
            grads[j].iter().zip(&grads[k]).map(|(a, b)| a * b).sum()
        };

        r_a_weight = r_a_weight.max(heat.apply(weight, p, Some(domain))?.norm());
        #[allow(clippy::needless_range_loop)] // j is the component index
        for j in 1..=d {
            r_a_wpsi = r_a_wpsi.max(heat.apply(&products[j], p, Some(domain))?.norm());
        }
        r_b = r_b.max(
            (heat.apply(&products[0], p, Some(domain))? - w * grad_sq(1)).norm(),
        );
        r_c_time = r_c_time.max((w * grad_sq(0)).norm());
        for j in 1..=d {
            for k in (j + 1)..=d {
                r_c_equal = r_c_equal.max((w * (grad_sq(j) - grad_sq(k))).norm());
            }
        }
        for j in 0..=d {
            for k in (j + 1)..=d {
                r_d_orth = r_d_orth.max((w * grad_dot(j, k)).norm());
            }
        }
    }

    let mut conditions = BTreeMap::new();
    for (name, residual) in [
        ("a_weight", r_a_weight),
        ("a_wpsi_j", r_a_wpsi),
        ("b", r_b),
        ("c_time", r_c_time),
        ("c_equal", r_c_equal),
        ("d_orth", r_d_orth),
    ] {
        conditions.insert(
            name.to_string(),
            ConditionCheck {
                residual,
                pass: residual < tol,
            },
        );
    }
    let overall = conditions.values().all(|c| c.pass);
    Ok(InvarianceVerdict {
        conditions,
        overall,
        probe: probe.clone(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosureReport {
    /// Residual of each input solution itself (they should be near zero).
    pub solution_residuals: Vec<(String, f64)>,
    /// Residual of `C_{w,psi}(u)` per solution.
    pub image_residuals: Vec<(String, f64)>,
    pub max_residual: f64,
    pub pass: bool,
}

/// Samples whether `C_{w,psi}` maps kernel elements back into the kernel:
/// the generic closure check for operators without a closed-form verifier.
pub fn closure_sampling_check(
    op: &WCOperator,
    solutions: &[ScalarField],
    probe: &CompactGrid,
    tol: f64,
) -> Result<ClosureReport> {
    let Some(kernel_op) = op.space().kernel_operator() else {
        return Err(CoreError::Precondition {
            message: "closure sampling needs a kernel-type space instance".into(),
        });
    };
    let domain = op.domain();
    let mut solution_residuals = Vec::with_capacity(solutions.len());
    let mut image_residuals = Vec::with_capacity(solutions.len());
    let mut max_residual = 0.0f64;
    for u in solutions {
        let own = membership_residual(&kernel_op, u, probe, Some(domain))?;
        solution_residuals.push((u.label().to_string(), own));
        let image = op.apply_iterate(u, 1);
        let res = membership_residual(&kernel_op, &image, probe, Some(domain))?;
        max_residual = max_residual.max(res);
        image_residuals.push((u.label().to_string(), res));
    }
    Ok(ClosureReport {
        solution_residuals,
        image_residuals,
        max_residual,
        pass: max_residual < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{SpaceInstance, SpaceTag};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn laplace_annihilates_harmonic_polynomial() {
        let laplace = DiffOperator::laplace(2);
        let u = ScalarField::parse("u", 2, "x0^2 - x1^2").unwrap();
        let v = laplace.apply(&u, &[0.7, -0.4], None).unwrap();
        assert_eq!(v, C_ZERO);
    }

    #[test]
    fn heat_symbol_on_exponentials() {
        let heat = DiffOperator::heat(1);
        // zeta = (1, 1): 1 - 1^2 = 0.
        assert_eq!(heat.symbol(&[c(1.0, 0.0), c(1.0, 0.0)]), C_ZERO);
        let sol = make_exponential_solution(&heat, vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let v = heat.apply(sol.field(), &[0.3, 0.4], None).unwrap();
        assert_eq!(v, C_ZERO);
        // zeta = (1, 0) is rejected with P(zeta) = 1.
        let err = make_exponential_solution(&heat, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap_err();
        match err {
            CoreError::NotInVariety { value } => assert_eq!(value, c(1.0, 0.0)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sqrt_i_exponential_is_caloric() {
        // zeta_0 = i, zeta_1 = principal sqrt(i): i - sqrt(i)^2 = 0.
        let heat = DiffOperator::heat(1);
        let root = c(0.0, 1.0).sqrt();
        let sol = make_exponential_solution(&heat, vec![c(0.0, 1.0), root]).unwrap();
        let v = heat.apply(sol.field(), &[0.2, -0.5], None).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn exponential_derivative_identity() {
        let zeta = vec![c(0.3, 1.1), c(-0.2, 0.4)];
        let sol = exponential_field(zeta.clone());
        let x = [0.9, -0.3];
        for alpha in crate::multiindex::multi_indices_up_to(2, 4) {
            let lhs = sol.field().derivative(&alpha, &x, None).unwrap();
            let rhs = alpha.complex_power(&zeta) * sol.field().eval(&x).unwrap();
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn cauchy_riemann_detects_conjugate() {
        let cr = DiffOperator::cauchy_riemann();
        let zbar = ScalarField::parse("zbar", 2, "zbar").unwrap();
        let v = cr.apply(&zbar, &[0.3, 0.8], None).unwrap();
        assert_eq!(v, c(1.0, 0.0));
        let z2 = ScalarField::parse("z^2", 2, "z^2").unwrap();
        assert_eq!(cr.apply(&z2, &[0.3, 0.8], None).unwrap(), C_ZERO);
    }

    #[test]
    fn constants_lie_in_kernels_with_vanishing_zero_order_term() {
        let heat = DiffOperator::heat(2);
        let u = ScalarField::constant(3, c(4.2, -1.0));
        let domain = Domain::euclidean(3);
        let grid = CompactGrid::box_grid(&domain, &[1.0, -1.0, -1.0], &[2.0, 1.0, 1.0], 0.5);
        assert_eq!(membership_residual(&heat, &u, &grid, None).unwrap(), 0.0);
    }

    #[test]
    fn heat_kernel_membership_residual() {
        let heat = DiffOperator::heat(1);
        let domain = Domain::euclidean(2);
        let u = ScalarField::parse("gauss", 2, "x0^(-0.5)*exp(-(x1^2)/(4*x0))").unwrap();
        let grid = CompactGrid::box_grid(&domain, &[1.0, -1.0], &[2.0, 1.0], 0.25);
        let res = membership_residual(&heat, &u, &grid, Some(&domain)).unwrap();
        assert!(res < 1e-6, "oracle-path residual {res}");
        // Finite-difference fallback stays within its looser budget.
        let opaque = ScalarField::from_fn("gauss opaque", 2, |x| {
            Complex64::new(x[0].powf(-0.5) * (-(x[1] * x[1]) / (4.0 * x[0])).exp(), 0.0)
        });
        let res_fd = membership_residual(&heat, &opaque, &grid, Some(&domain)).unwrap();
        assert!(res_fd < 1e-4, "fd-path residual {res_fd}");
    }

    fn heat_probe(domain: &Domain) -> CompactGrid {
        CompactGrid::box_grid(domain, &[1.0, 1.0], &[2.0, 2.0], 0.25)
    }

    #[test]
    fn parabolic_rescaling_is_accepted() {
        let domain = Domain::euclidean(2);
        let w = ScalarField::one(2);
        let psi = SelfMap::parse("parabolic", &["x0/4", "x1/2"]).unwrap();
        let verdict =
            verify_heat_invariance(&w, &psi, &domain, &heat_probe(&domain), 1e-10).unwrap();
        assert!(verdict.overall, "{verdict:?}");
        for check in verdict.conditions.values() {
            assert!(check.residual < 1e-12);
        }
    }

    #[test]
    fn coordinate_swap_is_rejected_on_condition_c() {
        let domain = Domain::euclidean(2);
        let w = ScalarField::one(2);
        let psi = SelfMap::parse("swap", &["x1", "x0"]).unwrap();
        let verdict =
            verify_heat_invariance(&w, &psi, &domain, &heat_probe(&domain), 1e-6).unwrap();
        assert!(!verdict.overall);
        let c_time = &verdict.conditions["c_time"];
        assert!(!c_time.pass);
        assert!((c_time.residual - 1.0).abs() < 1e-10);
    }

    #[test]
    fn identity_symbol_is_accepted() {
        let domain = Domain::euclidean(2);
        let w = ScalarField::one(2);
        let psi = SelfMap::identity(2);
        let verdict =
            verify_heat_invariance(&w, &psi, &domain, &heat_probe(&domain), 1e-10).unwrap();
        assert!(verdict.overall, "{verdict:?}");
    }

    #[test]
    fn closure_check_for_holomorphic_pair() {
        let domain = Domain::euclidean(2);
        let space = SpaceInstance::new(SpaceTag::Holomorphic, domain.clone(), 1e-6).unwrap();
        let w = ScalarField::parse("z", 2, "z").unwrap();
        let psi = SelfMap::parse("z^2", &["x0^2 - x1^2", "2*x0*x1"]).unwrap();
        let op = WCOperator::new(w, psi, space).unwrap();
        let solutions = vec![
            ScalarField::one(2),
            ScalarField::parse("z", 2, "z").unwrap(),
            ScalarField::parse("z^2", 2, "z^2").unwrap(),
        ];
        let probe = CompactGrid::box_grid(&domain, &[-0.5, -0.5], &[0.5, 0.5], 0.25);
        let report = closure_sampling_check(&op, &solutions, &probe, 1e-8).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn residuals_never_decrease_under_probe_refinement() {
        let heat = DiffOperator::heat(1);
        let domain = Domain::euclidean(2);
        // A field that is caloric nowhere, with growing residual.
        let u = ScalarField::parse("u", 2, "x0^2 + x1^3").unwrap();
        let coarse = CompactGrid::box_grid(&domain, &[1.0, -1.0], &[2.0, 1.0], 0.5);
        let fine = CompactGrid::box_grid(&domain, &[1.0, -1.0], &[2.0, 1.0], 0.1);
        let r_coarse = membership_residual(&heat, &u, &coarse, Some(&domain)).unwrap();
        let r_fine = membership_residual(&heat, &u, &fine, Some(&domain)).unwrap();
        assert!(r_fine >= r_coarse);
    }

    #[test]
    fn rejected_pair_produces_large_image_residual() {
        // Completeness direction at desk scale: the swap symbol pushes some
        // caloric probe far out of the kernel (well above 100x the
        // acceptance tolerance).
        let domain = Domain::euclidean(2);
        let space = SpaceInstance::new(
            SpaceTag::PdeKernel {
                operator: DiffOperator::heat(1),
            },
            domain.clone(),
            1e-6,
        )
        .unwrap();
        let psi = SelfMap::parse("swap", &["x1", "x0"]).unwrap();
        let op = WCOperator::unweighted(psi, space).unwrap();
        let probe = heat_probe(&domain);
        let caloric = ScalarField::parse("x^2+2t", 2, "x1^2 + 2*x0").unwrap();
        let report = closure_sampling_check(&op, &[caloric], &probe, 1e-6).unwrap();
        assert!(!report.pass);
        assert!(report.max_residual > 100.0 * 1e-6);
    }

    #[test]
    fn well_definedness_residual_flags_bad_weight() {
        let domain = Domain::euclidean(2);
        let space = SpaceInstance::new(SpaceTag::Holomorphic, domain.clone(), 1e-6).unwrap();
        let probe = CompactGrid::box_grid(&domain, &[-0.5, -0.5], &[0.5, 0.5], 0.25);
        let basis = vec![
            ScalarField::one(2),
            ScalarField::parse("z", 2, "z").unwrap(),
        ];

        let good = WCOperator::new(
            ScalarField::parse("z", 2, "z").unwrap(),
            SelfMap::identity(2),
            space.clone(),
        )
        .unwrap();
        assert!(good.well_defined_residual(&basis, &probe).unwrap() < 1e-12);

        let bad = WCOperator::new(
            ScalarField::parse("zbar", 2, "zbar").unwrap(),
            SelfMap::identity(2),
            space,
        )
        .unwrap();
        assert!(bad.well_defined_residual(&basis, &probe).unwrap() > 0.5);
    }

    #[test]
    fn closure_check_rejects_conjugate_weight() {
        let domain = Domain::euclidean(2);
        let space = SpaceInstance::new(SpaceTag::Holomorphic, domain.clone(), 1e-6).unwrap();
        let w = ScalarField::parse("zbar", 2, "zbar").unwrap();
        let op = WCOperator::new(w, SelfMap::identity(2), space).unwrap();
        let probe = CompactGrid::box_grid(&domain, &[-0.5, -0.5], &[0.5, 0.5], 0.25);
        let report =
            closure_sampling_check(&op, &[ScalarField::one(2)], &probe, 1e-8).unwrap();
        assert!(!report.pass);
        assert!((report.max_residual - 1.0).abs() < 1e-10);
    }
}
