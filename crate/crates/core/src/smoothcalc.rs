//! Higher-order derivatives of operator iterates.
//!
//! The central object is the expansion of `d^alpha (C_psi^m f)` as a sum of
//! terms `((d^beta f) o psi^m) * prod_j d^{gamma_j} (psi^m)_{c_j}` with
//! `sum_j gamma_j = alpha`. Tables of such terms are generated by literally
//! differentiating term lists one coordinate at a time: each step either
//! raises `beta` (creating a fresh first-order factor) or raises the order of
//! one existing factor. The generated tables drive exact iterate derivatives,
//! the `C^r` seminorm bound, and its weighted variant.

use crate::error::{CoreError, Result};
use crate::funcspace::{map_grid, CompactGrid, Domain};
use crate::multiindex::{multi_indices_up_to, MultiIndex};
use crate::wcomp::{ScalarField, SelfMap, WCOperator};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One derivative factor `d^gamma (psi^m)_component`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Factor {
    pub gamma: MultiIndex,
    pub component: usize,
}

/// One term of the expansion: the outer derivative order `beta` of `f` and
/// the list of inner derivative factors, with an integer multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionTerm {
    pub beta: MultiIndex,
    pub factors: Vec<Factor>,
    pub multiplicity: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionTable {
    pub alpha: MultiIndex,
    pub dim: usize,
    pub terms: Vec<ExpansionTerm>,
    /// The counting constant `B_{|alpha|}`: `|alpha| * max n(beta)` in one
    /// dimension and `d^{|alpha|} * max n(beta)` otherwise, where `n(beta)`
    /// totals the multiplicities sharing an outer order `beta`.
    pub b_constant: u64,
}

impl ExpansionTable {
    /// Multiplicity totals per outer order `beta`.
    pub fn n_beta(&self) -> BTreeMap<MultiIndex, u64> {
        let mut map = BTreeMap::new();
        for t in &self.terms {
            *map.entry(t.beta.clone()).or_insert(0) += t.multiplicity;
        }
        map
    }

    /// Total multiplicity over all terms (the raw product-rule term count).
    pub fn total_multiplicity(&self) -> u64 {
        self.terms.iter().map(|t| t.multiplicity).sum()
    }

    /// Merges terms with equal `(beta, factor multiset)`, accumulating
    /// multiplicities. Evaluation is unaffected.
    pub fn merged(&self) -> ExpansionTable {
        let mut map: BTreeMap<(MultiIndex, Vec<Factor>), u64> = BTreeMap::new();
        for t in &self.terms {
            let mut fs = t.factors.clone();
            fs.sort();
            *map.entry((t.beta.clone(), fs)).or_insert(0) += t.multiplicity;
        }
        ExpansionTable {
            alpha: self.alpha.clone(),
            dim: self.dim,
            terms: map
                .into_iter()
                .map(|((beta, factors), multiplicity)| ExpansionTerm {
                    beta,
                    factors,
                    multiplicity,
                })
                .collect(),
            b_constant: self.b_constant,
        }
    }
}

/// Generates the expansion table for `alpha` by the inductive step: starting
/// from `d_i (C^m f) = sum_c ((d_c f) o psi^m) * d_i (psi^m)_c`, each further
/// coordinate derivative maps a term to `d` "raise beta" children plus one
/// "raise gamma_p" child per existing factor.
pub fn build_expansion(alpha: &MultiIndex, dim: usize) -> Result<ExpansionTable> {
    if alpha.is_zero() {
        return Err(CoreError::Precondition {
            message: "expansion tables require |alpha| >= 1".into(),
        });
    }
    if alpha.dim() != dim {
        return Err(CoreError::DimensionMismatch {
            expected: dim,
            got: alpha.dim(),
        });
    }
    let steps = alpha.index_sequence();
    let mut table: BTreeMap<(MultiIndex, Vec<Factor>), u64> = BTreeMap::new();
    for c in 0..dim {
        table.insert(
            (
                MultiIndex::unit(dim, c),
                vec![Factor {
                    gamma: MultiIndex::unit(dim, steps[0]),
                    component: c,
                }],
            ),
            1,
        );
    }
    for &i in &steps[1..] {
        let mut next: BTreeMap<(MultiIndex, Vec<Factor>), u64> = BTreeMap::new();
        for ((beta, factors), mult) in &table {
            for c in 0..dim {
                let mut fs = factors.clone();
                fs.push(Factor {
                    gamma: MultiIndex::unit(dim, i),
                    component: c,
                });
                *next.entry((beta.raised(c), fs)).or_insert(0) += mult;
            }
            for p in 0..factors.len() {
                let mut fs = factors.clone();
                fs[p].gamma = fs[p].gamma.raised(i);
                *next.entry((beta.clone(), fs)).or_insert(0) += mult;
            }
        }
        table = next;
    }
    let terms: Vec<ExpansionTerm> = table
        .into_iter()
        .map(|((beta, factors), multiplicity)| ExpansionTerm {
            beta,
            factors,
            multiplicity,
        })
        .collect();
    let mut n_beta: BTreeMap<&MultiIndex, u64> = BTreeMap::new();
    for t in &terms {
        *n_beta.entry(&t.beta).or_insert(0) += t.multiplicity;
    }
    let max_n = n_beta.values().copied().max().unwrap_or(1);
    let order = alpha.order() as u64;
    let b_constant = if dim == 1 {
        order * max_n
    } else {
        (dim as u64).pow(alpha.order()) * max_n
    };
    Ok(ExpansionTable {
        alpha: alpha.clone(),
        dim,
        terms,
        b_constant,
    })
}

type TableCache = Mutex<HashMap<(usize, MultiIndex), Arc<ExpansionTable>>>;

fn table_cache() -> &'static TableCache {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn table_for(alpha: &MultiIndex) -> Result<Arc<ExpansionTable>> {
    let key = (alpha.dim(), alpha.clone());
    if let Some(t) = table_cache().lock().unwrap().get(&key) {
        return Ok(t.clone());
    }
    let t = Arc::new(build_expansion(alpha, alpha.dim())?);
    table_cache().lock().unwrap().insert(key, t.clone());
    Ok(t)
}

/// The constant `M_l`: the largest total term multiplicity over all orders
/// `1 <= |alpha| <= l` (at least 1, covering `alpha = 0`). Computed from the
/// generated tables, never hardcoded.
pub fn m_constant(dim: usize, l: u32) -> Result<f64> {
    let mut best = 1u64;
    for alpha in multi_indices_up_to(dim, l) {
        if alpha.is_zero() {
            continue;
        }
        best = best.max(table_for(&alpha)?.total_multiplicity());
    }
    Ok(best as f64)
}

/// Per-point memo for the mutually recursive derivative evaluations.
struct Scratch<'a> {
    x: &'a [f64],
    iterates: Vec<Vec<f64>>,
    icd: HashMap<(usize, usize, MultiIndex), Complex64>,
    coc: HashMap<(usize, MultiIndex), Complex64>,
    comp_f: HashMap<(usize, MultiIndex), Complex64>,
    comp_w: HashMap<(usize, MultiIndex), Complex64>,
}

impl<'a> Scratch<'a> {
    fn new(x: &'a [f64]) -> Self {
        Scratch {
            x,
            iterates: vec![x.to_vec()],
            icd: HashMap::new(),
            coc: HashMap::new(),
            comp_f: HashMap::new(),
            comp_w: HashMap::new(),
        }
    }

    fn iterate(&mut self, symbol: &SelfMap, domain: &Domain, m: usize) -> Result<Vec<f64>> {
        if !domain.contains(self.x) {
            return Err(CoreError::LeftDomain {
                point: self.x.to_vec(),
                step: 0,
            });
        }
        while self.iterates.len() <= m {
            let prev = self.iterates.last().unwrap();
            let next = symbol.apply_raw(prev)?;
            if !domain.contains(&next) {
                return Err(CoreError::LeftDomain {
                    point: next,
                    step: self.iterates.len(),
                });
            }
            self.iterates.push(next);
        }
        Ok(self.iterates[m].clone())
    }
}

/// `d^gamma` of component `c` of the m-fold iterate, at the scratch point.
/// Level 0 is the identity map.
fn iterate_component_derivative(
    symbol: &SelfMap,
    domain: &Domain,
    c: usize,
    m: usize,
    gamma: &MultiIndex,
    scratch: &mut Scratch,
) -> Result<Complex64> {
    if m == 0 {
        return Ok(if gamma.is_zero() {
            Complex64::new(scratch.x[c], 0.0)
        } else if gamma.order() == 1 && gamma.component(c) == 1 {
            C_ONE
        } else {
            C_ZERO
        });
    }
    let key = (c, m, gamma.clone());
    if let Some(v) = scratch.icd.get(&key) {
        return Ok(*v);
    }
    let value = if gamma.is_zero() {
        let y = scratch.iterate(symbol, domain, m)?;
        Complex64::new(y[c], 0.0)
    } else {
        let y_prev = scratch.iterate(symbol, domain, m - 1)?;
        let table = table_for(gamma)?;
        let mut sum = C_ZERO;
        for term in &table.terms {
            let outer = symbol
                .component(c)
                .derivative(&term.beta, &y_prev, Some(domain))?;
            if outer == C_ZERO {
                continue;
            }
            let mut prod = C_ONE;
            for factor in &term.factors {
                prod *= iterate_component_derivative(
                    symbol,
                    domain,
                    factor.component,
                    m - 1,
                    &factor.gamma,
                    scratch,
                )?;
                if prod == C_ZERO {
                    break;
                }
            }
            sum += Complex64::new(term.multiplicity as f64, 0.0) * outer * prod;
        }
        sum
    };
    scratch.icd.insert(key, value);
    Ok(value)
}

fn composition_derivative_inner(
    symbol: &SelfMap,
    domain: &Domain,
    f: &ScalarField,
    m: usize,
    alpha: &MultiIndex,
    scratch: &mut Scratch,
    memo: MemoSlot,
) -> Result<Complex64> {
    let key = (m, alpha.clone());
    if let Some(v) = memo_get(scratch, memo, &key) {
        return Ok(v);
    }
    let value = if alpha.is_zero() {
        let y = scratch.iterate(symbol, domain, m)?;
        f.eval(&y)?
    } else if m == 0 {
        f.derivative(alpha, scratch.x, Some(domain))?
    } else {
        let table = table_for(alpha)?;
        let ym = scratch.iterate(symbol, domain, m)?;
        let mut sum = C_ZERO;
        for term in &table.terms {
            let outer = f.derivative(&term.beta, &ym, Some(domain))?;
            if outer == C_ZERO {
                continue;
            }
            let mut prod = C_ONE;
            for factor in &term.factors {
                prod *= iterate_component_derivative(
                    symbol,
                    domain,
                    factor.component,
                    m,
                    &factor.gamma,
                    scratch,
                )?;
                if prod == C_ZERO {
                    break;
                }
            }
            sum += Complex64::new(term.multiplicity as f64, 0.0) * outer * prod;
        }
        sum
    };
    memo_put(scratch, memo, key, value);
    Ok(value)
}

#[derive(Clone, Copy)]
enum MemoSlot {
    FieldF,
    FieldW,
}

fn memo_get(scratch: &Scratch, slot: MemoSlot, key: &(usize, MultiIndex)) -> Option<Complex64> {
    match slot {
        MemoSlot::FieldF => scratch.comp_f.get(key).copied(),
        MemoSlot::FieldW => scratch.comp_w.get(key).copied(),
    }
}

fn memo_put(scratch: &mut Scratch, slot: MemoSlot, key: (usize, MultiIndex), value: Complex64) {
    match slot {
        MemoSlot::FieldF => scratch.comp_f.insert(key, value),
        MemoSlot::FieldW => scratch.comp_w.insert(key, value),
    };
}

/// `d^beta` of the cocycle `C_{w,psi}^{m-1}(w) = prod_{j<m} w o psi^j`,
/// by the Leibniz recursion over the last factor.
fn cocycle_derivative(
    op: &WCOperator,
    m: usize,
    beta: &MultiIndex,
    scratch: &mut Scratch,
) -> Result<Complex64> {
    if m == 0 {
        return Ok(if beta.is_zero() { C_ONE } else { C_ZERO });
    }
    let key = (m, beta.clone());
    if let Some(v) = scratch.coc.get(&key) {
        return Ok(*v);
    }
    let mut sum = C_ZERO;
    for gamma in beta.lower_set() {
        let head = cocycle_derivative(op, m - 1, &gamma, scratch)?;
        if head == C_ZERO {
            continue;
        }
        let rest = beta.sub(&gamma).expect("gamma <= beta");
        let tail = composition_derivative_inner(
            op.symbol(),
            op.domain(),
            op.weight(),
            m - 1,
            &rest,
            scratch,
            MemoSlot::FieldW,
        )?;
        sum += Complex64::new(beta.binomial(&gamma), 0.0) * head * tail;
    }
    scratch.coc.insert(key, sum);
    Ok(sum)
}

/// Evaluates the term table for `d^alpha (C_psi^m f)(x)` (unweighted
/// composition operator, `m >= 1`).
pub fn eval_expansion(
    table: &ExpansionTable,
    symbol: &SelfMap,
    domain: &Domain,
    f: &ScalarField,
    m: usize,
    x: &[f64],
) -> Result<Complex64> {
    if m == 0 {
        return Err(CoreError::Precondition {
            message: "eval_expansion requires m >= 1".into(),
        });
    }
    let mut scratch = Scratch::new(x);
    let ym = scratch.iterate(symbol, domain, m)?;
    let mut sum = C_ZERO;
    for term in &table.terms {
        let outer = f.derivative(&term.beta, &ym, Some(domain))?;
        if outer == C_ZERO {
            continue;
        }
        let mut prod = C_ONE;
        for factor in &term.factors {
            prod *= iterate_component_derivative(
                symbol,
                domain,
                factor.component,
                m,
                &factor.gamma,
                &mut scratch,
            )?;
            if prod == C_ZERO {
                break;
            }
        }
        sum += Complex64::new(term.multiplicity as f64, 0.0) * outer * prod;
    }
    Ok(sum)
}

/// `d^alpha (C_psi^m f)(x)` for any `m >= 0` and any order, including 0.
pub fn composition_derivative(
    symbol: &SelfMap,
    domain: &Domain,
    f: &ScalarField,
    m: usize,
    alpha: &MultiIndex,
    x: &[f64],
) -> Result<Complex64> {
    let mut scratch = Scratch::new(x);
    composition_derivative_inner(symbol, domain, f, m, alpha, &mut scratch, MemoSlot::FieldF)
}

/// `d^alpha (C_{w,psi}^m f)(x)` via the splitting
/// `C_{w,psi}^m f = C_{w,psi}^{m-1}(w) * (f o psi^m)` and the Leibniz rule.
pub fn weighted_iterate_derivative(
    op: &WCOperator,
    f: &ScalarField,
    m: usize,
    alpha: &MultiIndex,
    x: &[f64],
) -> Result<Complex64> {
    let mut scratch = Scratch::new(x);
    weighted_iterate_derivative_inner(op, f, m, alpha, &mut scratch)
}

fn weighted_iterate_derivative_inner(
    op: &WCOperator,
    f: &ScalarField,
    m: usize,
    alpha: &MultiIndex,
    scratch: &mut Scratch,
) -> Result<Complex64> {
    if m == 0 {
        return f.derivative(alpha, scratch.x, Some(op.domain()));
    }
    let mut sum = C_ZERO;
    for beta in alpha.lower_set() {
        let coc = cocycle_derivative(op, m, &beta, scratch)?;
        if coc == C_ZERO {
            continue;
        }
        let rest = alpha.sub(&beta).expect("beta <= alpha");
        let comp = composition_derivative_inner(
            op.symbol(),
            op.domain(),
            f,
            m,
            &rest,
            scratch,
            MemoSlot::FieldF,
        )?;
        sum += Complex64::new(alpha.binomial(&beta), 0.0) * coc * comp;
    }
    Ok(sum)
}

/// A measured left-hand side against its proven upper bound.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub m_constant: f64,
    /// Contract slack: 1e-10 when every participating derivative came from
    /// an exact oracle, 1e-4 once finite differences are involved.
    pub fd_slack: f64,
}

impl BoundCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + slack)
    }

    /// The contract `lhs <= rhs * (1 + fd_slack)` at the bound's own slack.
    pub fn holds_contract(&self) -> bool {
        self.holds(self.fd_slack)
    }
}

fn slack_for(symbol: &SelfMap, fields: &[&ScalarField]) -> f64 {
    let all_exact = symbol.has_derivative_oracles()
        && fields.iter().all(|f| f.has_derivative_oracle());
    if all_exact {
        1e-10
    } else {
        1e-4
    }
}

fn cr_norm_of_field(
    f: &ScalarField,
    grid: &CompactGrid,
    l: u32,
    domain: &Domain,
) -> Result<f64> {
    let alphas = multi_indices_up_to(grid.dim, l);
    let mut sup = 0.0f64;
    for p in &grid.points {
        for alpha in &alphas {
            sup = sup.max(f.derivative(alpha, p, Some(domain))?.norm());
        }
    }
    Ok(sup)
}

/// Measures `|C_psi^m f|_{l,K}` against the bound
/// `|f|_{l,psi^m(K)} * M_l * (max_c max(1, |C_psi^{m-1} psi_c|_{l,K}))^l`.
pub fn cr_seminorm_bound(
    symbol: &SelfMap,
    domain: &Domain,
    f: &ScalarField,
    l: u32,
    k: &CompactGrid,
    m: usize,
) -> Result<BoundCheck> {
    let alphas = multi_indices_up_to(k.dim, l);
    let mut lhs = 0.0f64;
    let mut comp_norm = 1.0f64;
    for p in &k.points {
        let mut scratch = Scratch::new(p);
        for alpha in &alphas {
            lhs = lhs.max(
                composition_derivative_inner(
                    symbol,
                    domain,
                    f,
                    m,
                    alpha,
                    &mut scratch,
                    MemoSlot::FieldF,
                )?
                .norm(),
            );
            for c in 0..k.dim {
                comp_norm = comp_norm.max(
                    iterate_component_derivative(symbol, domain, c, m, alpha, &mut scratch)?
                        .norm(),
                );
            }
        }
    }
    let mapped = map_grid(k, symbol, domain, m)?;
    let f_norm = cr_norm_of_field(f, &mapped, l, domain)?;
    let m_l = m_constant(k.dim, l)?;
    let rhs = f_norm * m_l * comp_norm.powi(l as i32);
    Ok(BoundCheck {
        lhs,
        rhs,
        m_constant: m_l,
        fd_slack: slack_for(symbol, &[f]),
    })
}

/// Measures `|C_{w,psi}^m f|_{l,K}` against
/// `2^l * M_l * |C_{w,psi}^{m-1} w|_{l,K} * (max_c max(1, |C_psi^{m-1}
/// psi_c|_{l,K}))^l * |f|_{l,L}`.
///
/// The caller must have established `psi^j(K)` inside `L` for `j <= m`; the
/// `L`-seminorm of `f` is sharpened with the mapped grid points of `K`, which
/// the continuum set `L` contains.
pub fn weighted_cr_growth(
    op: &WCOperator,
    f: &ScalarField,
    l: u32,
    k: &CompactGrid,
    l_grid: &CompactGrid,
    m: usize,
) -> Result<BoundCheck> {
    let domain = op.domain();
    let alphas = multi_indices_up_to(k.dim, l);
    let mut lhs = 0.0f64;
    let mut comp_norm = 1.0f64;
    let mut coc_norm = 0.0f64;
    for p in &k.points {
        let mut scratch = Scratch::new(p);
        for alpha in &alphas {
            lhs = lhs.max(
                weighted_iterate_derivative_inner(op, f, m, alpha, &mut scratch)?.norm(),
            );
            coc_norm = coc_norm.max(cocycle_derivative(op, m, alpha, &mut scratch)?.norm());
            for c in 0..k.dim {
                comp_norm = comp_norm.max(
                    iterate_component_derivative(op.symbol(), domain, c, m, alpha, &mut scratch)?
                        .norm(),
                );
            }
        }
    }
    let mapped = map_grid(k, op.symbol(), domain, m)?;
    let f_norm = cr_norm_of_field(f, l_grid, l, domain)?
        .max(cr_norm_of_field(f, &mapped, l, domain)?);
    let m_l = m_constant(k.dim, l)?;
    let rhs = 2f64.powi(l as i32) * m_l * coc_norm * comp_norm.powi(l as i32) * f_norm;
    Ok(BoundCheck {
        lhs,
        rhs,
        m_constant: m_l,
        fd_slack: slack_for(op.symbol(), &[f, op.weight()]),
    })
}
