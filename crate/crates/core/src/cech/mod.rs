//! Banach modules over a one-variable affinoid, completed localization on a
//! Laurent cover, Čech exactness checks and glueing of free modules.
//!
//! The base is the closed unit disc with coordinate `x` and the cover is
//! cut out by `f = p⁻¹x`: the plus chart `|x| ≤ |p|` with coordinate
//! `X = f`, the minus chart `|p| ≤ |x| ≤ 1` with coordinates `x` and
//! `Y = p/x`, and their overlap `|x| = |p|` with Laurent coordinate `f`.
//! Elements are stored on canonical monomial representatives and the norm
//! is the Gauss norm of that representative.

mod check;
mod glue;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{Matrix, PadicContext, PadicError, PadicScalar};
use crate::spectral::{BanachModuleModel, BaseRing};
use crate::ErrorClass;

pub use check::{cech_check, open_mapping_bound, CechReport, OpenMappingBound};
pub use glue::{kiehl_glue, GlueRecord, GluedModule};

#[derive(Debug, Error)]
pub enum CechError {
    #[error("unsupported chart: {0}")]
    UnsupportedChart(String),
    #[error("splitting did not contract in round {round}")]
    NonContracting { round: usize },
    #[error("transition is not invertible over the overlap: {0}")]
    NonInvertibleTransition(String),
    #[error("transition is not close to a constant invertible matrix")]
    NonContractingTransition,
    #[error("iteration stalled after {rounds} rounds before reaching the working precision")]
    PrecisionExhausted { rounds: usize },
    #[error("map is not surjective")]
    NotSurjective,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

impl CechError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CechError::Padic(e) => e.class(),
            CechError::PrecisionExhausted { .. } => ErrorClass::Precision,
            CechError::NonContracting { .. } => ErrorClass::Invariant,
            CechError::UnsupportedChart(_)
            | CechError::NonInvertibleTransition(_)
            | CechError::NonContractingTransition
            | CechError::NotSurjective
            | CechError::DimensionMismatch(_) => ErrorClass::Validation,
        }
    }
}

/// Where an element lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// The disc itself, coordinate `x`.
    Base,
    /// `|f| ≤ 1`, coordinate `X = f`.
    Plus,
    /// `|f| ≥ 1`, coordinates `x` and `Y = f⁻¹`.
    Minus,
    /// `|f| = 1`, Laurent coordinate `f`.
    Both,
}

impl Chart {
    fn allows(self, k: i64) -> bool {
        match self {
            Chart::Base | Chart::Plus => k >= 0,
            Chart::Minus | Chart::Both => true,
        }
    }

    /// Exponents of the canonical monomials of total degree at most `degree`.
    pub fn exponents(self, degree: u32) -> Vec<i64> {
        let d = degree as i64;
        match self {
            Chart::Base | Chart::Plus => (0..=d).collect(),
            Chart::Minus => (0..=d).chain((1..=d).map(|k| -k)).collect(),
            Chart::Both => (-d..=d).collect(),
        }
    }

    /// Human-readable name of the monomial with the given exponent.
    pub fn monomial_label(self, k: i64) -> String {
        match self {
            Chart::Base => format!("x^{k}"),
            Chart::Plus => format!("X^{k}"),
            Chart::Minus if k >= 0 => format!("x^{k}"),
            Chart::Minus => format!("Y^{}", -k),
            Chart::Both => format!("f^{k}"),
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Chart::Base => "base",
            Chart::Plus => "plus",
            Chart::Minus => "minus",
            Chart::Both => "both",
        };
        f.write_str(s)
    }
}

/// A function on one chart, stored sparsely on canonical monomials.
///
/// Exponent `k` means `x^k` on the base, `X^k` on the plus chart, `f^k` on
/// the overlap, and on the minus chart `x^k` for `k ≥ 0` and `Y^{-k}` for
/// `k < 0`. Coefficients that vanish at the working precision are dropped.
#[derive(Clone, PartialEq)]
pub struct ChartElement {
    ctx: PadicContext,
    chart: Chart,
    terms: BTreeMap<i64, PadicScalar>,
}

impl ChartElement {
    pub fn zero(ctx: PadicContext, chart: Chart) -> Self {
        ChartElement { ctx, chart, terms: BTreeMap::new() }
    }

    pub fn one(ctx: PadicContext, chart: Chart) -> Self {
        Self::constant(ctx, chart, PadicScalar::one(ctx))
    }

    pub fn constant(ctx: PadicContext, chart: Chart, c: PadicScalar) -> Self {
        let mut out = Self::zero(ctx, chart);
        out.add_term(0, &c);
        out
    }

    pub fn monomial(ctx: PadicContext, chart: Chart, k: i64, c: PadicScalar) -> Result<Self, CechError> {
        if !chart.allows(k) {
            return Err(CechError::UnsupportedChart(format!("exponent {k} on the {chart} chart")));
        }
        let mut out = Self::zero(ctx, chart);
        out.add_term(k, &c);
        Ok(out)
    }

    /// Element with integer coefficients, given as `(exponent, value)` pairs.
    pub fn from_i64_terms(ctx: PadicContext, chart: Chart, terms: &[(i64, i64)]) -> Result<Self, CechError> {
        let mut out = Self::zero(ctx, chart);
        for &(k, c) in terms {
            if !chart.allows(k) {
                return Err(CechError::UnsupportedChart(format!("exponent {k} on the {chart} chart")));
            }
            out.add_term(k, &PadicScalar::from_i64(ctx, c));
        }
        Ok(out)
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &PadicScalar)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    pub fn coeff(&self, k: i64) -> PadicScalar {
        self.terms.get(&k).cloned().unwrap_or_else(|| PadicScalar::zero(self.ctx))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest |exponent| present (0 for the zero element).
    pub fn exponent_span(&self) -> u32 {
        self.terms.keys().map(|k| k.unsigned_abs() as u32).max().unwrap_or(0)
    }

    fn add_term(&mut self, k: i64, c: &PadicScalar) {
        let v = match self.terms.get(&k) {
            Some(old) => old + c,
            None => c.clone(),
        };
        if v.is_zero() {
            self.terms.remove(&k);
        } else {
            self.terms.insert(k, v);
        }
    }

    /// Gauss norm of the canonical representative as a valuation in
    /// π-units; `None` for zero.
    pub fn valuation_pi(&self) -> Option<i64> {
        self.terms.values().filter_map(|c| c.valuation_pi()).min()
    }

    fn same_ring(&self, other: &Self) -> Result<(), CechError> {
        if self.chart != other.chart {
            return Err(CechError::UnsupportedChart(format!("{} vs {}", self.chart, other.chart)));
        }
        if self.ctx != other.ctx {
            return Err(PadicError::ContextMismatch.into());
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, CechError> {
        self.same_ring(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(*k, c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, CechError> {
        self.checked_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        ChartElement { ctx: self.ctx, chart: self.chart, terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect() }
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        let mut out = Self::zero(self.ctx, self.chart);
        for (k, a) in &self.terms {
            out.add_term(*k, &(a * c));
        }
        out
    }

    /// Product in the chart's ring. On the minus chart `x·Y = p`.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, CechError> {
        self.same_ring(other)?;
        let mut out = Self::zero(self.ctx, self.chart);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut c = ca * cb;
                if self.chart == Chart::Minus && a.signum() * b.signum() < 0 {
                    let m = a.abs().min(b.abs());
                    c = &c * &PadicScalar::p_pow(self.ctx, m);
                }
                out.add_term(a + b, &c);
            }
        }
        Ok(out)
    }

    /// Image under the restriction map to a smaller chart.
    pub fn restrict(&self, target: Chart) -> Result<Self, CechError> {
        if target == self.chart {
            return Ok(self.clone());
        }
        let ctx = self.ctx;
        let p_pow = |k: i64| PadicScalar::p_pow(ctx, k);
        let mut out = Self::zero(ctx, target);
        match (self.chart, target) {
            (Chart::Base, Chart::Plus) | (Chart::Base, Chart::Both) => {
                for (k, c) in &self.terms {
                    out.add_term(*k, &(c * &p_pow(*k)));
                }
            }
            (Chart::Base, Chart::Minus) | (Chart::Plus, Chart::Both) => {
                for (k, c) in &self.terms {
                    out.add_term(*k, c);
                }
            }
            (Chart::Minus, Chart::Both) => {
                for (k, c) in &self.terms {
                    if *k >= 0 {
                        out.add_term(*k, &(c * &p_pow(*k)));
                    } else {
                        out.add_term(*k, c);
                    }
                }
            }
            (from, to) => return Err(CechError::UnsupportedChart(format!("no restriction from {from} to {to}"))),
        }
        Ok(out)
    }

    /// Rewrites an overlap element on the plus or minus chart, when its
    /// Laurent expansion lies in that chart's ring.
    pub fn descend(&self, target: Chart) -> Result<Self, CechError> {
        if self.chart != Chart::Both {
            return Err(CechError::UnsupportedChart(format!("descend from {}", self.chart)));
        }
        let mut out = Self::zero(self.ctx, target);
        match target {
            Chart::Plus => {
                for (k, c) in &self.terms {
                    if *k < 0 {
                        return Err(CechError::UnsupportedChart(format!("f^{k} does not extend over the plus chart")));
                    }
                    out.add_term(*k, c);
                }
            }
            Chart::Minus => {
                for (k, c) in &self.terms {
                    if *k > 0 {
                        out.add_term(*k, &c.checked_div(&PadicScalar::p_pow(self.ctx, *k))?);
                    } else {
                        out.add_term(*k, c);
                    }
                }
            }
            Chart::Both => return Ok(self.clone()),
            Chart::Base => return Err(CechError::UnsupportedChart("descend to the base".into())),
        }
        Ok(out)
    }

    /// Drops monomials with |exponent| above `degree`.
    pub fn truncate(&self, degree: u32) -> Self {
        let d = degree as i64;
        ChartElement {
            ctx: self.ctx,
            chart: self.chart,
            terms: self.terms.iter().filter(|(k, _)| k.abs() <= d).map(|(k, c)| (*k, c.clone())).collect(),
        }
    }

    /// Coordinates on `chart.exponents(degree)`.
    pub fn to_coordinates(&self, degree: u32) -> Result<Vec<PadicScalar>, CechError> {
        if self.exponent_span() > degree {
            return Err(CechError::DimensionMismatch(format!(
                "element has exponent {} beyond degree {degree}",
                self.exponent_span()
            )));
        }
        Ok(self.chart.exponents(degree).into_iter().map(|k| self.coeff(k)).collect())
    }

    pub fn from_coordinates(ctx: PadicContext, chart: Chart, degree: u32, v: &[PadicScalar]) -> Result<Self, CechError> {
        let exps = chart.exponents(degree);
        if exps.len() != v.len() {
            return Err(CechError::DimensionMismatch(format!("{} coordinates for {} monomials", v.len(), exps.len())));
        }
        let mut out = Self::zero(ctx, chart);
        for (k, c) in exps.into_iter().zip(v) {
            out.add_term(k, c);
        }
        Ok(out)
    }
}

impl fmt::Display for ChartElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(k, c)| format!("({c})*{}", self.chart.monomial_label(*k))).collect();
        f.write_str(&parts.join(" + "))
    }
}

impl fmt::Debug for ChartElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChartElement[{}]({self})", self.chart)
    }
}

/// Split of an overlap element `g = g₊ − g₋`: exponents `≥ 0` go to the plus
/// chart, negative exponents (negated) to the minus chart. Each part has
/// norm at most `|g|`.
pub fn laurent_split(g: &ChartElement) -> Result<(ChartElement, ChartElement), CechError> {
    if g.chart != Chart::Both {
        return Err(CechError::UnsupportedChart(format!("split expects an overlap element, got {}", g.chart)));
    }
    let mut plus = ChartElement::zero(g.ctx, Chart::Plus);
    let mut minus = ChartElement::zero(g.ctx, Chart::Minus);
    for (k, c) in &g.terms {
        if *k >= 0 {
            plus.add_term(*k, c);
        } else {
            minus.add_term(*k, &-c);
        }
    }
    Ok((plus, minus))
}

/// The Tate algebra `K⟨x⟩` truncated at degree `D_A`, with the Laurent cover
/// by `f = p⁻¹x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffinoidModel {
    ctx: PadicContext,
    degree: u32,
}

impl AffinoidModel {
    pub fn new(ctx: PadicContext, degree: u32) -> Result<Self, CechError> {
        if degree == 0 {
            return Err(CechError::DimensionMismatch("truncation degree must be positive".into()));
        }
        Ok(AffinoidModel { ctx, degree })
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn base_ring(&self) -> BaseRing {
        BaseRing::Tate { vars: vec!["x".into()], degree: self.degree }
    }

    /// `f = p⁻¹x` as a (non-integral) element of the base.
    pub fn distinguished_element(&self) -> ChartElement {
        let mut f = ChartElement::zero(self.ctx, Chart::Base);
        f.add_term(1, &PadicScalar::p_pow(self.ctx, -1));
        f
    }

    pub fn chart_dimension(&self, chart: Chart) -> usize {
        chart.exponents(self.degree).len()
    }

    pub fn chart_labels(&self, chart: Chart) -> Vec<String> {
        chart.exponents(self.degree).into_iter().map(|k| chart.monomial_label(k)).collect()
    }
}

/// `M ⊗̂_A A_𝒰` for an orthonormalizable or projective `M`, presented as
/// one copy of the chart ring per basis vector of `M`.
#[derive(Debug, Clone)]
pub struct LocalizedModule {
    base: AffinoidModel,
    chart: Chart,
    basis: Vec<String>,
    idempotent: Option<Matrix<PadicScalar>>,
}

impl LocalizedModule {
    pub fn base(&self) -> &AffinoidModel {
        &self.base
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn basis(&self) -> &[String] {
        &self.basis
    }

    pub fn idempotent(&self) -> Option<&Matrix<PadicScalar>> {
        self.idempotent.as_ref()
    }

    /// Number of copies of the chart ring (before applying the idempotent).
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Canonical monomial basis of one copy of the chart ring.
    pub fn monomial_basis(&self) -> Vec<String> {
        self.base.chart_labels(self.chart)
    }

    /// Coordinates of an element of `M` (one base-chart function per basis
    /// vector) pushed to the chart.
    pub fn localize(&self, m: &[ChartElement]) -> Result<Vec<ChartElement>, CechError> {
        if m.len() != self.basis.len() {
            return Err(CechError::DimensionMismatch(format!("{} coordinates for rank {}", m.len(), self.basis.len())));
        }
        m.iter().map(|c| c.truncate(self.base.degree).restrict(self.chart)).collect()
    }

    /// Sup of the Gauss norms of the coordinates, as a valuation.
    pub fn norm_valuation_pi(&self, v: &[ChartElement]) -> Option<i64> {
        v.iter().filter_map(|c| c.valuation_pi()).min()
    }
}

/// Extends `M` along `A → A_𝒰` for one chart of the Laurent cover.
pub fn completed_localization(
    m: &BanachModuleModel,
    base: &AffinoidModel,
    chart: Chart,
) -> Result<LocalizedModule, CechError> {
    if chart == Chart::Base {
        return Err(CechError::UnsupportedChart("the base is not a chart of the cover".into()));
    }
    match &m.base {
        BaseRing::Tate { vars, degree } if vars.len() == 1 && *degree == base.degree => {}
        BaseRing::Tate { vars, degree } => {
            return Err(CechError::UnsupportedChart(format!(
                "module over a Tate algebra in {} variables of degree {degree}",
                vars.len()
            )))
        }
        BaseRing::Field => return Err(CechError::UnsupportedChart("module over the scalar field".into())),
    }
    Ok(LocalizedModule { base: *base, chart, basis: m.basis.clone(), idempotent: m.idempotent().cloned() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PadicContext {
        PadicContext::new(5, 1, 20).unwrap()
    }

    fn overlap(terms: &[(i64, i64)]) -> ChartElement {
        ChartElement::from_i64_terms(ctx(), Chart::Both, terms).unwrap()
    }

    #[test]
    fn split_examples() {
        let (gp, gm) = laurent_split(&overlap(&[(1, 1), (-1, 1)])).unwrap();
        assert_eq!(gp, ChartElement::from_i64_terms(ctx(), Chart::Plus, &[(1, 1)]).unwrap());
        assert_eq!(gm, ChartElement::from_i64_terms(ctx(), Chart::Minus, &[(-1, -1)]).unwrap());
        let (gp, gm) = laurent_split(&overlap(&[(0, 1)])).unwrap();
        assert_eq!(gp, ChartElement::one(ctx(), Chart::Plus));
        assert!(gm.is_zero());
    }

    #[test]
    fn split_recombines() {
        let g = overlap(&[(-3, 7), (0, 2), (2, 25), (-1, 5)]);
        let (gp, gm) = laurent_split(&g).unwrap();
        let back = gp.restrict(Chart::Both).unwrap().checked_sub(&gm.restrict(Chart::Both).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn chart_relations() {
        let c = ctx();
        let x = ChartElement::from_i64_terms(c, Chart::Base, &[(1, 1)]).unwrap();
        // x = pX on the plus chart
        assert_eq!(x.restrict(Chart::Plus).unwrap(), ChartElement::from_i64_terms(c, Chart::Plus, &[(1, 5)]).unwrap());
        // x·Y = p on the minus chart
        let xm = x.restrict(Chart::Minus).unwrap();
        let y = ChartElement::from_i64_terms(c, Chart::Minus, &[(-1, 1)]).unwrap();
        assert_eq!(xm.checked_mul(&y).unwrap(), ChartElement::from_i64_terms(c, Chart::Minus, &[(0, 5)]).unwrap());
        // f·f⁻¹ = 1 on the overlap
        let f = overlap(&[(1, 1)]);
        assert_eq!(f.checked_mul(&overlap(&[(-1, 1)])).unwrap(), overlap(&[(0, 1)]));
        let fb = AffinoidModel::new(c, 4).unwrap().distinguished_element().restrict(Chart::Both).unwrap();
        assert_eq!(fb, f);
    }

    #[test]
    fn restriction_commutes_with_products() {
        let c = ctx();
        let a = ChartElement::from_i64_terms(c, Chart::Minus, &[(2, 3), (-1, 1), (0, 4)]).unwrap();
        let b = ChartElement::from_i64_terms(c, Chart::Minus, &[(-2, 2), (1, 1)]).unwrap();
        let lhs = a.checked_mul(&b).unwrap().restrict(Chart::Both).unwrap();
        let rhs = a.restrict(Chart::Both).unwrap().checked_mul(&b.restrict(Chart::Both).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn localization_of_free_modules() {
        let c = ctx();
        let base = AffinoidModel::new(c, 6).unwrap();
        let a = BanachModuleModel::orthonormal(base.base_ring(), vec!["1".into()]);
        let lp = completed_localization(&a, &base, Chart::Plus).unwrap();
        assert_eq!(lp.rank(), 1);
        assert_eq!(lp.monomial_basis(), (0..=6).map(|k| format!("X^{k}")).collect::<Vec<_>>());
        let m = BanachModuleModel::orthonormal(base.base_ring(), vec!["e0".into(), "e1".into(), "e2".into()]);
        let lb = completed_localization(&m, &base, Chart::Both).unwrap();
        assert_eq!(lb.rank(), 3);
        assert_eq!(lb.monomial_basis().len(), 13);
        let field = BanachModuleModel::orthonormal(BaseRing::Field, vec!["e".into()]);
        assert!(matches!(completed_localization(&field, &base, Chart::Plus), Err(CechError::UnsupportedChart(_))));
    }

    #[test]
    fn localization_contracts_norm() {
        let c = ctx();
        let base = AffinoidModel::new(c, 5).unwrap();
        let m = BanachModuleModel::orthonormal(base.base_ring(), vec!["e0".into(), "e1".into()]);
        let v = vec![
            ChartElement::from_i64_terms(c, Chart::Base, &[(0, 5), (3, 1), (5, 2)]).unwrap(),
            ChartElement::from_i64_terms(c, Chart::Base, &[(1, 25)]).unwrap(),
        ];
        let nv = v.iter().filter_map(|x| x.valuation_pi()).min();
        for chart in [Chart::Plus, Chart::Minus, Chart::Both] {
            let l = completed_localization(&m, &base, chart).unwrap();
            let img = l.localize(&v).unwrap();
            assert!(l.norm_valuation_pi(&img) >= nv);
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let g = overlap(&[(-2, 3), (1, 1)]);
        let v = g.to_coordinates(3).unwrap();
        assert_eq!(v.len(), 7);
        assert_eq!(ChartElement::from_coordinates(ctx(), Chart::Both, 3, &v).unwrap(), g);
        let m = ChartElement::from_i64_terms(ctx(), Chart::Minus, &[(-2, 3), (1, 1)]).unwrap();
        let v = m.to_coordinates(2).unwrap();
        assert_eq!(ChartElement::from_coordinates(ctx(), Chart::Minus, 2, &v).unwrap(), m);
        assert!(g.to_coordinates(1).is_err());
    }
}
