//! The weighted composition operator core.
//!
//! An operator is a pair `(w, psi)` acting on fields by
//! `f -> w * (f o psi)`. The m-th iterate evaluates to the cocycle product
//! `prod_{j=0}^{m-1} w(psi^j(x))` times `f(psi^m(x))`; everything downstream
//! (growth diagnostics, Cesaro means, the exponential series) reduces to
//! walking orbits while accumulating that product.

use crate::error::{CoreError, Result};
use crate::expr::{DerivativeCache, Expr};
use crate::fd::{central_derivative, FdConfig};
use crate::funcspace::{Domain, SpaceInstance};
use crate::multiindex::MultiIndex;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

type EvalFn = Arc<dyn Fn(&[f64]) -> Result<Complex64> + Send + Sync>;
type DerivFn = Arc<dyn Fn(&MultiIndex, &[f64]) -> Result<Complex64> + Send + Sync>;

/// A scalar-valued function of a point in `R^d`.
///
/// Values are complex with the fixed identification `z = x + iy`; real
/// fields simply carry zero imaginary part. A field may expose an exact
/// derivative oracle; without one, derivatives fall back to central finite
/// differences.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    dim: usize,
    eval: EvalFn,
    deriv: Option<DerivFn>,
    fd: FdConfig,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ScalarField({}, dim={}, oracle={})",
            self.label,
            self.dim,
            self.deriv.is_some()
        )
    }
}

const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl ScalarField {
    pub fn from_fallible(
        label: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            label: label.into(),
            dim,
            eval: Arc::new(eval),
            deriv: None,
            fd: FdConfig::default(),
        }
    }

    pub fn from_fn(
        label: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_fallible(label, dim, move |x| Ok(eval(x)))
    }

    pub fn constant(dim: usize, value: Complex64) -> Self {
        let mut f = Self::from_fn(format!("{value}"), dim, move |_| value);
        f.deriv = Some(Arc::new(move |alpha: &MultiIndex, _: &[f64]| {
            Ok(if alpha.is_zero() { value } else { C_ZERO })
        }));
        f
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, C_ONE)
    }

    /// The coordinate projection `x -> x_i`, with exact derivatives.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut f = Self::from_fn(format!("x{i}"), dim, move |x| Complex64::new(x[i], 0.0));
        f.deriv = Some(Arc::new(move |alpha: &MultiIndex, x: &[f64]| {
            if alpha.is_zero() {
                Ok(Complex64::new(x[i], 0.0))
            } else if alpha.order() == 1 && alpha.component(i) == 1 {
                Ok(C_ONE)
            } else {
                Ok(C_ZERO)
            }
        }));
        f
    }

    /// Builds a field from the closed function grammar; the derivative
    /// oracle is exact (symbolic differentiation with caching).
    pub fn from_expr(label: impl Into<String>, dim: usize, expr: Expr) -> Result<Self> {
        if let Some(max) = expr.max_coordinate() {
            if max >= dim {
                return Err(CoreError::DimensionMismatch {
                    expected: dim,
                    got: max + 1,
                });
            }
        }
        let cache = Arc::new(DerivativeCache::new(expr.clone()));
        let cache2 = cache.clone();
        Ok(ScalarField {
            label: label.into(),
            dim,
            eval: Arc::new(move |x| Ok(cache.expr().eval(x))),
            deriv: Some(Arc::new(move |alpha, x| {
                Ok(cache2.derivative(alpha).eval(x))
            })),
            fd: FdConfig::default(),
        })
    }

    pub fn parse(label: impl Into<String>, dim: usize, source: &str) -> Result<Self> {
        Self::from_expr(label, dim, Expr::parse(source)?)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_derivative_oracle(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Installs an exact derivative oracle; the oracle must return the field
    /// value itself for the zero multi-index.
    pub fn set_derivative_oracle(
        &mut self,
        oracle: impl Fn(&MultiIndex, &[f64]) -> Result<Complex64> + Send + Sync + 'static,
    ) {
        self.deriv = Some(Arc::new(oracle));
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        (self.eval)(x)
    }

    /// `d^alpha f(x)`: exact oracle when available, central finite
    /// differences otherwise (stencil nodes checked against `domain`).
    pub fn derivative(
        &self,
        alpha: &MultiIndex,
        x: &[f64],
        domain: Option<&Domain>,
    ) -> Result<Complex64> {
        if alpha.dim() != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                got: alpha.dim(),
            });
        }
        if alpha.is_zero() {
            return self.eval(x);
        }
        match &self.deriv {
            Some(oracle) => oracle(alpha, x),
            None => central_derivative(&|p: &[f64]| (self.eval)(p), alpha, x, domain, self.fd),
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let inner = self.clone();
        let mut out = ScalarField {
            label: format!("{c}*{}", self.label),
            dim: self.dim,
            eval: Arc::new(move |x| Ok(c * (inner.eval)(x)?)),
            deriv: None,
            fd: self.fd,
        };
        if let Some(oracle) = &self.deriv {
            let oracle = oracle.clone();
            out.deriv = Some(Arc::new(move |alpha, x| Ok(c * oracle(alpha, x)?)));
        }
        out
    }

    pub fn plus(&self, other: &ScalarField) -> Result<Self> {
        self.combine(other, C_ONE, "+")
    }

    pub fn minus(&self, other: &ScalarField) -> Result<Self> {
        self.combine(other, -C_ONE, "-")
    }

    fn combine(&self, other: &ScalarField, sign: Complex64, op: &str) -> Result<Self> {
        if other.dim != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let (a, b) = (self.clone(), other.clone());
        let mut out = ScalarField {
            label: format!("({} {op} {})", self.label, other.label),
            dim: self.dim,
            eval: Arc::new(move |x| Ok((a.eval)(x)? + sign * (b.eval)(x)?)),
            deriv: None,
            fd: self.fd,
        };
        if let (Some(da), Some(db)) = (&self.deriv, &other.deriv) {
            let (da, db) = (da.clone(), db.clone());
            out.deriv = Some(Arc::new(move |alpha, x| {
                Ok(da(alpha, x)? + sign * db(alpha, x)?)
            }));
        }
        Ok(out)
    }

    /// Pointwise product, with a Leibniz-rule oracle when both factors have
    /// oracles.
    pub fn times(&self, other: &ScalarField) -> Result<Self> {
        if other.dim != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let (a, b) = (self.clone(), other.clone());
        let mut out = ScalarField {
            label: format!("({}*{})", self.label, other.label),
            dim: self.dim,
            eval: Arc::new(move |x| Ok((a.eval)(x)? * (b.eval)(x)?)),
            deriv: None,
            fd: self.fd,
        };
        if let (Some(da), Some(db)) = (&self.deriv, &other.deriv) {
            let (da, db) = (da.clone(), db.clone());
            out.deriv = Some(Arc::new(move |alpha: &MultiIndex, x: &[f64]| {
                let mut sum = C_ZERO;
                for beta in alpha.lower_set() {
                    let rest = alpha.sub(&beta).expect("beta <= alpha");
                    sum += Complex64::new(alpha.binomial(&beta), 0.0)
                        * da(&beta, x)?
                        * db(&rest, x)?;
                }
                Ok(sum)
            }));
        }
        Ok(out)
    }
}

/// The symbol `psi : X -> X`, given by its `d` component fields.
#[derive(Clone, Debug)]
pub struct SelfMap {
    label: String,
    components: Vec<ScalarField>,
}

impl SelfMap {
    pub fn new(label: impl Into<String>, components: Vec<ScalarField>) -> Result<Self> {
        let dim = components.len();
        for c in &components {
            if c.dim() != dim {
                return Err(CoreError::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        Ok(SelfMap {
            label: label.into(),
            components,
        })
    }

    pub fn identity(dim: usize) -> Self {
        SelfMap {
            label: "id".into(),
            components: (0..dim).map(|i| ScalarField::coordinate(dim, i)).collect(),
        }
    }

    pub fn from_exprs(label: impl Into<String>, exprs: Vec<Expr>) -> Result<Self> {
        let dim = exprs.len();
        let components = exprs
            .into_iter()
            .enumerate()
            .map(|(i, e)| ScalarField::from_expr(format!("psi{i}"), dim, e))
            .collect::<Result<Vec<_>>>()?;
        SelfMap::new(label, components)
    }

    pub fn parse(label: impl Into<String>, sources: &[&str]) -> Result<Self> {
        let exprs = sources
            .iter()
            .map(|s| Expr::parse(s))
            .collect::<Result<Vec<_>>>()?;
        SelfMap::from_exprs(label, exprs)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, c: usize) -> &ScalarField {
        &self.components[c]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn has_derivative_oracles(&self) -> bool {
        self.components.iter().all(|c| c.has_derivative_oracle())
    }

    /// One application, without any domain check. Components are real maps;
    /// imaginary parts of component values are discarded.
    pub fn apply_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| Ok(c.eval(x)?.re)).collect()
    }

    /// `psi^m(x)`, verifying that every intermediate image stays in the
    /// domain. The failing image and its application count are reported.
    pub fn iterate(&self, domain: &Domain, x: &[f64], m: usize) -> Result<Vec<f64>> {
        if !domain.contains(x) {
            return Err(CoreError::LeftDomain {
                point: x.to_vec(),
                step: 0,
            });
        }
        let mut y = x.to_vec();
        for j in 1..=m {
            y = self.apply_raw(&y)?;
            if !domain.contains(&y) {
                return Err(CoreError::LeftDomain { point: y, step: j });
            }
        }
        Ok(y)
    }
}

/// A product kept in scaled form `mantissa * exp(log_scale)` so that growth
/// classification can read the exponent even when the plain value would
/// overflow.
#[derive(Clone, Copy, Debug)]
pub struct ScaledScalar {
    mantissa: Complex64,
    log_scale: f64,
}

impl ScaledScalar {
    pub fn one() -> Self {
        ScaledScalar {
            mantissa: C_ONE,
            log_scale: 0.0,
        }
    }

    pub fn mul_value(&mut self, v: Complex64) {
        // Renormalize before the product can leave the representable range;
        // products of ordinary magnitude go through untouched.
        let mn = self.mantissa.norm();
        let vn = v.norm();
        if mn != 0.0 && vn != 0.0 && !(1e-300..=1e300).contains(&(mn * vn)) {
            self.log_scale += mn.ln();
            self.mantissa /= mn;
        }
        self.mantissa *= v;
        let n = self.mantissa.norm();
        if n.is_finite() && n != 0.0 && !(1e-300..=1e300).contains(&n) {
            self.log_scale += n.ln();
            self.mantissa /= n;
        }
    }

    pub fn value(&self) -> Complex64 {
        if self.log_scale == 0.0 {
            self.mantissa
        } else {
            self.mantissa * self.log_scale.exp()
        }
    }

    pub fn log_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }
}

/// The weighted composition operator `(w, psi)` acting on a space instance.
#[derive(Clone, Debug)]
pub struct WCOperator {
    weight: ScalarField,
    symbol: SelfMap,
    space: SpaceInstance,
}

impl WCOperator {
    pub fn new(weight: ScalarField, symbol: SelfMap, space: SpaceInstance) -> Result<Self> {
        let dim = space.domain.dim();
        if weight.dim() != dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim,
                got: weight.dim(),
            });
        }
        if symbol.dim() != dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim,
                got: symbol.dim(),
            });
        }
        Ok(WCOperator {
            weight,
            symbol,
            space,
        })
    }

    /// The unweighted composition operator (`w = 1`).
    pub fn unweighted(symbol: SelfMap, space: SpaceInstance) -> Result<Self> {
        let one = ScalarField::one(space.domain.dim());
        WCOperator::new(one, symbol, space)
    }

    pub fn weight(&self) -> &ScalarField {
        &self.weight
    }

    pub fn symbol(&self) -> &SelfMap {
        &self.symbol
    }

    pub fn space(&self) -> &SpaceInstance {
        &self.space
    }

    pub fn domain(&self) -> &Domain {
        &self.space.domain
    }

    pub fn dim(&self) -> usize {
        self.space.domain.dim()
    }

    /// The cocycle `prod_{j=0}^{m-1} w(psi^j(x))`; the empty product is 1.
    pub fn cocycle(&self, x: &[f64], m: usize) -> Result<Complex64> {
        Ok(self.cocycle_scaled(x, m)?.value())
    }

    /// Cocycle in scaled form; see [`ScaledScalar`].
    pub fn cocycle_scaled(&self, x: &[f64], m: usize) -> Result<ScaledScalar> {
        let domain = self.domain();
        if !domain.contains(x) {
            return Err(CoreError::LeftDomain {
                point: x.to_vec(),
                step: 0,
            });
        }
        let mut acc = ScaledScalar::one();
        let mut y = x.to_vec();
        for j in 0..m {
            acc.mul_value(self.weight.eval(&y)?);
            if j + 1 < m {
                y = self.symbol.apply_raw(&y)?;
                if !domain.contains(&y) {
                    return Err(CoreError::LeftDomain {
                        point: y,
                        step: j + 1,
                    });
                }
            }
        }
        Ok(acc)
    }

    /// Evaluates the m-th iterate applied to `f` at a single point.
    pub fn iterate_value(&self, f: &ScalarField, m: usize, x: &[f64]) -> Result<Complex64> {
        let domain = self.domain();
        if !domain.contains(x) {
            return Err(CoreError::LeftDomain {
                point: x.to_vec(),
                step: 0,
            });
        }
        let mut acc = C_ONE;
        let mut y = x.to_vec();
        for j in 0..m {
            acc *= self.weight.eval(&y)?;
            y = self.symbol.apply_raw(&y)?;
            if !domain.contains(&y) {
                return Err(CoreError::LeftDomain {
                    point: y,
                    step: j + 1,
                });
            }
        }
        Ok(acc * f.eval(&y)?)
    }

    /// The m-th iterate as a lazy field. `m = 0` returns `f` itself. The
    /// returned field carries an exact derivative oracle whenever the
    /// weight, the symbol components, and `f` all do.
    pub fn apply_iterate(&self, f: &ScalarField, m: usize) -> ScalarField {
        if m == 0 {
            return f.clone();
        }
        let op = self.clone();
        let inner = f.clone();
        let label = format!("iterate{m}[{}]({})", self.describe(), f.label());
        let mut field = ScalarField::from_fallible(label, self.dim(), move |x| {
            op.iterate_value(&inner, m, x)
        });
        if self.weight.has_derivative_oracle()
            && self.symbol.has_derivative_oracles()
            && f.has_derivative_oracle()
        {
            let op = self.clone();
            let inner = f.clone();
            field.deriv = Some(Arc::new(move |alpha: &MultiIndex, x: &[f64]| {
                crate::smoothcalc::weighted_iterate_derivative(&op, &inner, m, alpha, x)
            }));
        }
        field
    }

    /// Cesaro mean `T_[n] f = (1/n) sum_{m=1}^{n} C^m f` as a lazy field.
    /// Iterate values are accumulated along a single orbit walk per point.
    pub fn cesaro_mean(&self, f: &ScalarField, n: usize) -> ScalarField {
        assert!(n >= 1, "cesaro means start at n = 1");
        let op = self.clone();
        let inner = f.clone();
        let label = format!("cesaro{n}[{}]({})", self.describe(), f.label());
        ScalarField::from_fallible(label, self.dim(), move |x| {
            let values = op.cesaro_trajectory(&inner, x, n)?;
            Ok(values[n - 1])
        })
    }

    /// `T_[n] f(x)` for all `n = 1..=n_max` in one orbit walk.
    pub fn cesaro_trajectory(
        &self,
        f: &ScalarField,
        x: &[f64],
        n_max: usize,
    ) -> Result<Vec<Complex64>> {
        let domain = self.domain();
        if !domain.contains(x) {
            return Err(CoreError::LeftDomain {
                point: x.to_vec(),
                step: 0,
            });
        }
        let mut acc = C_ONE;
        let mut y = x.to_vec();
        let mut partial = C_ZERO;
        let mut out = Vec::with_capacity(n_max);
        for m in 1..=n_max {
            acc *= self.weight.eval(&y)?;
            y = self.symbol.apply_raw(&y)?;
            if !domain.contains(&y) {
                return Err(CoreError::LeftDomain { point: y, step: m });
            }
            partial += acc * f.eval(&y)?;
            out.push(partial / m as f64);
        }
        Ok(out)
    }

    /// Largest membership residual of `C f` over the given basis fields; the
    /// sampling proxy for "the operator is well-defined on the instance".
    pub fn well_defined_residual(
        &self,
        basis: &[ScalarField],
        probe: &crate::funcspace::CompactGrid,
    ) -> Result<f64> {
        let mut worst = 0.0f64;
        for f in basis {
            let image = self.apply_iterate(f, 1);
            worst = worst.max(self.space.membership_residual(&image, probe)?);
        }
        Ok(worst)
    }

    pub fn describe(&self) -> String {
        format!("w={}, psi={}", self.weight.label(), self.symbol.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{SpaceInstance, SpaceTag};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plane_space() -> SpaceInstance {
        SpaceInstance::new(SpaceTag::Continuous, Domain::euclidean(2), 1e-6).unwrap()
    }

    fn disk_space() -> SpaceInstance {
        SpaceInstance::new(
            SpaceTag::Continuous,
            Domain::open_ball(vec![0.0, 0.0], 1.0),
            1e-6,
        )
        .unwrap()
    }

    fn halving() -> SelfMap {
        SelfMap::parse("z/2", &["x0/2", "x1/2"]).unwrap()
    }

    #[test]
    fn cocycle_empty_product() {
        let op = WCOperator::unweighted(halving(), plane_space()).unwrap();
        assert_eq!(op.cocycle(&[0.3, 0.4], 0).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn cocycle_weight_z_halving() {
        // w(z) = z, psi(z) = z/2, x = 1, m = 3: 1 * 1/2 * 1/4 = 1/8.
        let w = ScalarField::parse("z", 2, "z").unwrap();
        let op = WCOperator::new(w, halving(), plane_space()).unwrap();
        let v = op.cocycle(&[1.0, 0.0], 3).unwrap();
        assert!((v - c(0.125, 0.0)).norm() < 1e-15);
        // Independent direct loop.
        let mut prod = c(1.0, 0.0);
        let mut y = [1.0, 0.0];
        for _ in 0..3 {
            prod *= c(y[0], y[1]);
            y = [y[0] / 2.0, y[1] / 2.0];
        }
        assert_eq!(v, prod);
    }

    #[test]
    fn cocycle_constant_weight_translation() {
        // w = 2, psi(z) = z + 1 on C, x = 0, m = 2 -> 4.
        let w = ScalarField::constant(2, c(2.0, 0.0));
        let shift = SelfMap::parse("z+1", &["x0+1", "x1"]).unwrap();
        let op = WCOperator::new(w, shift, plane_space()).unwrap();
        assert_eq!(op.cocycle(&[0.0, 0.0], 2).unwrap(), c(4.0, 0.0));
    }

    #[test]
    fn iterate_of_identity_operator_is_f() {
        let op = WCOperator::unweighted(SelfMap::identity(2), plane_space()).unwrap();
        let f = ScalarField::parse("z^2", 2, "z^2").unwrap();
        let it = op.apply_iterate(&f, 5);
        let x = [0.3, -0.7];
        assert_eq!(it.eval(&x).unwrap(), f.eval(&x).unwrap());
    }

    #[test]
    fn iterate_weight_z_identity_symbol() {
        // w(z) = z, psi = id, f = 1, m = 4 at z = 1/2: (1/2)^4.
        let w = ScalarField::parse("z", 2, "z").unwrap();
        let op = WCOperator::new(w, SelfMap::identity(2), disk_space()).unwrap();
        let it = op.apply_iterate(&ScalarField::one(2), 4);
        let v = it.eval(&[0.5, 0.0]).unwrap();
        assert!((v - c(0.0625, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn iterate_translation_example() {
        // w = 2, psi(z) = z + 1, f(z) = z, m = 2 at z = 0 -> 4 * f(2) = 8.
        let w = ScalarField::constant(2, c(2.0, 0.0));
        let shift = SelfMap::parse("z+1", &["x0+1", "x1"]).unwrap();
        let op = WCOperator::new(w, shift, plane_space()).unwrap();
        let f = ScalarField::parse("z", 2, "z").unwrap();
        let v = op.apply_iterate(&f, 2).eval(&[0.0, 0.0]).unwrap();
        assert_eq!(v, c(8.0, 0.0));
    }

    #[test]
    fn left_domain_surfaces_from_translation_on_disk() {
        let shift = SelfMap::parse("z+1", &["x0+1", "x1"]).unwrap();
        let op = WCOperator::unweighted(shift, disk_space()).unwrap();
        let err = op
            .apply_iterate(&ScalarField::one(2), 1)
            .eval(&[0.0, 0.0])
            .unwrap_err();
        assert!(matches!(err, CoreError::LeftDomain { step: 1, .. }));
    }

    #[test]
    fn semigroup_law_of_iterates() {
        let w = ScalarField::parse("w", 2, "1 + x0/4").unwrap();
        let op = WCOperator::new(w, halving(), plane_space()).unwrap();
        let f = ScalarField::parse("f", 2, "z^2 + 1").unwrap();
        let x = [0.4, -0.2];
        for (m, k) in [(1, 1), (2, 3), (4, 2)] {
            let lhs = op
                .apply_iterate(&op.apply_iterate(&f, k), m)
                .eval(&x)
                .unwrap();
            let rhs = op.apply_iterate(&f, m + k).eval(&x).unwrap();
            assert!(
                (lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0),
                "m={m} k={k}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn cocycle_multiplicativity() {
        let w = ScalarField::parse("w", 2, "1 + x1/3").unwrap();
        let op = WCOperator::new(w, halving(), plane_space()).unwrap();
        let x = [0.9, 0.1];
        for (m, k) in [(1, 2), (3, 4), (0, 5)] {
            let total = op.cocycle(&x, m + k).unwrap();
            let head = op.cocycle(&x, m).unwrap();
            let mid = op.symbol().iterate(op.domain(), &x, m).unwrap();
            let tail = op.cocycle(&mid, k).unwrap();
            assert!(
                (total - head * tail).norm() <= 1e-12 * total.norm().max(1.0),
                "m={m} k={k}"
            );
        }
    }

    #[test]
    fn linearity_of_iterates() {
        let w = ScalarField::parse("w", 2, "x0").unwrap();
        let op = WCOperator::new(w, halving(), plane_space()).unwrap();
        let f = ScalarField::parse("f", 2, "z").unwrap();
        let g = ScalarField::parse("g", 2, "z^2").unwrap();
        let (a, b) = (c(2.0, 1.0), c(-0.5, 0.3));
        let combo = f.scaled(a).plus(&g.scaled(b)).unwrap();
        let x = [0.6, 0.2];
        let m = 3;
        let lhs = op.apply_iterate(&combo, m).eval(&x).unwrap();
        let rhs = a * op.apply_iterate(&f, m).eval(&x).unwrap()
            + b * op.apply_iterate(&g, m).eval(&x).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
    }

    #[test]
    fn cesaro_identity_operator_fixes_f() {
        let op = WCOperator::unweighted(SelfMap::identity(2), plane_space()).unwrap();
        let f = ScalarField::parse("f", 2, "z^2").unwrap();
        let x = [0.2, 0.5];
        for n in [1, 3, 10] {
            let v = op.cesaro_mean(&f, n).eval(&x).unwrap();
            assert!((v - f.eval(&x).unwrap()).norm() < 1e-14);
        }
    }

    #[test]
    fn cesaro_zero_field() {
        let op = WCOperator::unweighted(halving(), plane_space()).unwrap();
        let zero = ScalarField::constant(2, C_ZERO);
        assert_eq!(op.cesaro_mean(&zero, 7).eval(&[0.4, 0.0]).unwrap(), C_ZERO);
    }

    #[test]
    fn cesaro_halving_closed_form() {
        // psi(z) = z/2, f(z) = z, n = 4 at z = 1/2 -> 15/128.
        let op = WCOperator::unweighted(halving(), disk_space()).unwrap();
        let f = ScalarField::parse("z", 2, "z").unwrap();
        let v = op.cesaro_mean(&f, 4).eval(&[0.5, 0.0]).unwrap();
        assert!((v - c(15.0 / 128.0, 0.0)).norm() < 1e-16);
        // Brute-force double loop oracle.
        let mut total = C_ZERO;
        for m in 1..=4 {
            let mut y = [0.5, 0.0];
            for _ in 0..m {
                y = [y[0] / 2.0, y[1] / 2.0];
            }
            total += c(y[0], y[1]);
        }
        assert!((v - total / 4.0).norm() < 1e-16);
    }

    #[test]
    fn cesaro_recombination_identity() {
        // (1/n) C^n f = T_[n] f - ((n-1)/n) T_[n-1] f.
        let w = ScalarField::parse("w", 2, "1 - x0/5").unwrap();
        let op = WCOperator::new(w, halving(), plane_space()).unwrap();
        let f = ScalarField::parse("f", 2, "z^2 + z").unwrap();
        let x = [0.7, -0.3];
        for n in [2usize, 5, 17] {
            let tn = op.cesaro_mean(&f, n).eval(&x).unwrap();
            let tn1 = op.cesaro_mean(&f, n - 1).eval(&x).unwrap();
            let cn = op.apply_iterate(&f, n).eval(&x).unwrap();
            let lhs = cn / n as f64;
            let rhs = tn - tn1 * ((n - 1) as f64 / n as f64);
            assert!((lhs - rhs).norm() < 1e-10, "n={n}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn oracle_zeroth_derivative_is_eval() {
        let f = ScalarField::parse("f", 2, "exp(x0)*sin(x1)").unwrap();
        let x = [0.3, 0.9];
        let alpha = MultiIndex::zero(2);
        assert_eq!(
            f.derivative(&alpha, &x, None).unwrap(),
            f.eval(&x).unwrap()
        );
    }

    #[test]
    fn mixed_partials_commute_on_grammar_fields() {
        let e = Expr::parse("exp(x0*x1)*cos(x1)").unwrap();
        let d01 = e.diff(0).diff(1);
        let d10 = e.diff(1).diff(0);
        let x = [0.4, 0.8];
        assert!((d01.eval(&x) - d10.eval(&x)).norm() < 1e-12);
    }

    #[test]
    fn scaled_cocycle_tracks_exponent_past_overflow() {
        let w = ScalarField::constant(1, c(1e155, 0.0));
        let space =
            SpaceInstance::new(SpaceTag::Continuous, Domain::euclidean(1), 1e-6).unwrap();
        let op = WCOperator::new(w, SelfMap::identity(1), space).unwrap();
        let s = op.cocycle_scaled(&[0.0], 4).unwrap();
        assert!((s.log_abs() - 4.0 * 155.0 * std::f64::consts::LN_10).abs() < 1e-9);
        assert!(op.cocycle(&[0.0], 4).unwrap().norm().is_infinite());
    }
}
