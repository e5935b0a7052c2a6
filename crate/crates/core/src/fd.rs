//! Central finite differences for fields without exact derivative oracles.
//!
//! Order-2 central stencils, iterated coordinate by coordinate for mixed
//! partials. The base step is `max(1e-5, 1e-4 * local scale)` and widens by a
//! decade per derivative order beyond the first so rounding error stays
//! subdominant to truncation error.

use crate::error::{CoreError, Result};
use crate::funcspace::Domain;
use crate::multiindex::MultiIndex;
use num_complex::Complex64;

#[derive(Clone, Copy, Debug)]
pub struct FdConfig {
    pub base_step: f64,
    pub scale_coeff: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            base_step: 1e-5,
            scale_coeff: 1e-4,
        }
    }
}

impl FdConfig {
    /// Step size at `x` for a derivative of total order `order`. Higher
    /// orders get wider steps: the cancellation error of a k-fold nested
    /// central stencil grows like `eps / h^k`, so `h` tracks `eps^(1/(k+2))`.
    pub fn step(&self, x: &[f64], order: u32) -> f64 {
        let scale = x.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let base = (self.scale_coeff * scale).max(self.base_step);
        match order {
            0 | 1 => base,
            2 => base.max(1e-4 * scale.max(1.0)),
            3 => base.max(1e-3 * scale.max(1.0)),
            _ => base.max(3.2e-3 * scale.max(1.0)),
        }
    }
}

/// Central-difference approximation of `d^alpha f(x)`.
///
/// When `domain` is given, every displaced stencil node is checked against
/// the membership predicate and a violation is `StencilOutsideDomain`.
pub fn central_derivative<F>(
    f: &F,
    alpha: &MultiIndex,
    x: &[f64],
    domain: Option<&Domain>,
    cfg: FdConfig,
) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Result<Complex64>,
{
    if alpha.is_zero() {
        return f(x);
    }
    let h = cfg.step(x, alpha.order());
    let mut point = x.to_vec();
    recurse(f, alpha, &mut point, h, domain)
}

fn recurse<F>(
    f: &F,
    alpha: &MultiIndex,
    x: &mut Vec<f64>,
    h: f64,
    domain: Option<&Domain>,
) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Result<Complex64>,
{
    let Some(i) = alpha.components().iter().position(|&c| c > 0) else {
        return f(x);
    };
    let lowered = alpha.lowered(i).expect("component is positive");
    let base = x[i];

    x[i] = base + h;
    check_inside(x, domain)?;
    let plus = recurse(f, &lowered, x, h, domain)?;

    x[i] = base - h;
    check_inside(x, domain)?;
    let minus = recurse(f, &lowered, x, h, domain)?;

    x[i] = base;
    Ok((plus - minus) / (2.0 * h))
}

fn check_inside(x: &[f64], domain: Option<&Domain>) -> Result<()> {
    if let Some(d) = domain {
        if !d.contains(x) {
            return Err(CoreError::StencilOutsideDomain { point: x.to_vec() });
        }
    }
    Ok(())
}
