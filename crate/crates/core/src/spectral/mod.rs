//! Spectral theory of compact operators on orthonormalizable Banach
//! modules: Fredholm series with certified prefixes, Newton slopes, slope
//! factorizations, Riesz projectors, and eigenfamilies over Tate algebras.

mod factor;
mod family;
mod joint;

pub use factor::{riesz_projector, slope_factor, FactorizationRecord, RieszProjector, SlopeFactorization, SlopeSide};
pub use family::{eigen_family_lift, fiber_eigendata, EigenFamily, FamilyOperator, FiberEigendata, FiberPoint};
pub use joint::{joint_eigensystems, JointEigensystem, JointEigensystemRecord};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{Matrix, NewtonPolygon, PadicContext, PadicError, PadicScalar, ScalarRecord, GUARD_DIGITS};
use crate::ErrorClass;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectralError {
    #[error("operator has no tail bound; truncation cannot be certified")]
    TailBoundMissing,
    #[error("certified prefix too short to determine the Newton polygon")]
    PrefixTooShort,
    #[error("slope bound {0} is a slope of the series and no side convention was given")]
    SlopeOnBoundary(String),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    #[error("specialization point outside the closed unit polydisc")]
    SpecializationOutsideDomain,
    #[error("eigenvalue is not a simple root with unit derivative; no family is claimed")]
    RamifiedPoint,
    #[error("Newton iteration did not converge")]
    DivergentIteration,
    #[error("operators do not commute on the projected space")]
    NonCommutingInput,
    #[error("eigenvalues do not all lie in the coefficient field")]
    EigenvaluesOutsideField,
    #[error("invalid operator model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

impl SpectralError {
    pub fn class(&self) -> ErrorClass {
        match self {
            SpectralError::Padic(e) => e.class(),
            SpectralError::InsufficientPrecision(_)
            | SpectralError::PrecisionLoss(_)
            | SpectralError::PrefixTooShort
            | SpectralError::DivergentIteration => ErrorClass::Precision,
            SpectralError::NonCommutingInput
            | SpectralError::EigenvaluesOutsideField
            | SpectralError::SlopeOnBoundary(_)
            | SpectralError::TailBoundMissing
            | SpectralError::SpecializationOutsideDomain
            | SpectralError::RamifiedPoint
            | SpectralError::InvalidModel(_) => ErrorClass::Validation,
        }
    }
}

/// Bound on the part of an operator discarded by truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "valuation_pi", rename_all = "snake_case")]
pub enum Tail {
    /// The stored matrix is the whole operator.
    Exact,
    /// Every entry outside the stored block has valuation ≥ this (π-units).
    Bound(i64),
    /// Nothing is known about the discarded part.
    Missing,
}

/// Coefficient ring of a Banach module model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseRing {
    Field,
    /// Tate algebra in the given variables, truncated at total degree.
    Tate { vars: Vec<String>, degree: u32 },
}

/// C(I) for a finite or enumerated index set, optionally cut down by an
/// idempotent to a projective module.
#[derive(Debug, Clone)]
pub struct BanachModuleModel {
    pub base: BaseRing,
    pub basis: Vec<String>,
    idempotent: Option<Matrix<PadicScalar>>,
}

impl BanachModuleModel {
    pub fn orthonormal(base: BaseRing, basis: Vec<String>) -> Self {
        BanachModuleModel { base, basis, idempotent: None }
    }

    /// Direct factor e·C(I); `e` must be idempotent to precision.
    pub fn projective(base: BaseRing, basis: Vec<String>, e: Matrix<PadicScalar>) -> Result<Self, SpectralError> {
        if e.rows() != basis.len() || !e.is_square() {
            return Err(SpectralError::InvalidModel("idempotent size does not match the basis".into()));
        }
        let ctx = e.get(0, 0).context();
        let defect = e.checked_mul(&e)?.checked_sub(&e)?;
        if defect.valuation_floor_pi() < ctx.cap() - GUARD_DIGITS as i64 * ctx.e() as i64 {
            return Err(SpectralError::InvalidModel("matrix is not idempotent".into()));
        }
        Ok(BanachModuleModel { base, basis, idempotent: Some(e) })
    }

    pub fn idempotent(&self) -> Option<&Matrix<PadicScalar>> {
        self.idempotent.as_ref()
    }

    /// Rank of the module (of the image of the idempotent if present).
    pub fn rank(&self) -> usize {
        match &self.idempotent {
            Some(e) => {
                let ctx = e.get(0, 0).context();
                e.chop(ctx.cap() - GUARD_DIGITS as i64 * ctx.e() as i64).rank()
            }
            None => self.basis.len(),
        }
    }

    /// Sup norm of a coordinate vector, as a valuation (π-units).
    pub fn norm_valuation_pi(&self, x: &[PadicScalar]) -> Option<i64> {
        x.iter().filter_map(|c| c.valuation_pi()).min()
    }
}

/// A compact operator given by a finite matrix block and a bound on what
/// was discarded. Stored entries are scaled to be integral; `scale_pi`
/// records the power of π applied.
#[derive(Debug, Clone)]
pub struct CompactOperatorModel {
    ctx: PadicContext,
    matrix: Matrix<PadicScalar>,
    tail: Tail,
    scale_pi: i64,
    labels: Option<Vec<String>>,
}

impl CompactOperatorModel {
    pub fn new(matrix: Matrix<PadicScalar>, tail: Tail) -> Result<Self, SpectralError> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(SpectralError::InvalidModel("operator matrix must be square and nonempty".into()));
        }
        let ctx = matrix.get(0, 0).context();
        if matrix.entries().iter().any(|x| x.context() != ctx) {
            return Err(PadicError::ContextMismatch.into());
        }
        let lo = matrix.valuation_floor_pi().min(0);
        let scale_pi = -lo;
        let matrix = if scale_pi > 0 {
            matrix.scale(&PadicScalar::uniformizer_pow(ctx, scale_pi))
        } else {
            matrix
        };
        let tail = match tail {
            Tail::Bound(t) => Tail::Bound(t + scale_pi),
            other => other,
        };
        Ok(CompactOperatorModel { ctx, matrix, tail, scale_pi, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// The operator block itself (without scaling).
    pub fn matrix(&self) -> Matrix<PadicScalar> {
        if self.scale_pi == 0 {
            self.matrix.clone()
        } else {
            let inv = PadicScalar::uniformizer_pow(self.ctx, -self.scale_pi);
            self.matrix.scale(&inv)
        }
    }

    /// The integral scaled block π^{scale} · U.
    pub fn scaled_matrix(&self) -> &Matrix<PadicScalar> {
        &self.matrix
    }

    pub fn scale_pi(&self) -> i64 {
        self.scale_pi
    }

    /// Tail bound of the unscaled operator.
    pub fn tail(&self) -> Tail {
        match self.tail {
            Tail::Bound(t) => Tail::Bound(t - self.scale_pi),
            other => other,
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Leading `n × n` block, with the discarded part bounded by the
    /// smaller of the old tail and the dropped columns.
    pub fn truncate(&self, n: usize) -> Result<Self, SpectralError> {
        let n = n.min(self.size());
        if n == 0 {
            return Err(SpectralError::InvalidModel("empty truncation".into()));
        }
        let m = self.matrix();
        let mut dropped = i64::MAX;
        for i in 0..self.size() {
            for j in 0..self.size() {
                if i >= n || j >= n {
                    dropped = dropped.min(m.get(i, j).valuation_floor_pi());
                }
            }
        }
        let tail = match (self.tail(), n == self.size()) {
            (t, true) => t,
            (Tail::Missing, false) => Tail::Missing,
            (Tail::Exact, false) => Tail::Bound(dropped),
            (Tail::Bound(t), false) => Tail::Bound(t.min(dropped)),
        };
        let mut out = Self::new(m.leading_block(n), tail)?;
        out.labels = self.labels.as_ref().map(|l| l[..n].to_vec());
        Ok(out)
    }
}

/// What is known about a coefficient c_n of the full operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Known {
    Value(i64),
    AtLeast(i64),
}

/// Fredholm series det(1 − T·U) computed on a truncation.
#[derive(Debug, Clone)]
pub struct FredholmSeries {
    ctx: PadicContext,
    coeffs: Vec<PadicScalar>,
    /// Lower bounds for v(c_n) from the column valuations, n < len.
    floors: Vec<i64>,
    certified_prefix: usize,
    hull_end: usize,
    /// Lower bounds for c_n beyond the computed range, n = len, len+1, …
    beyond: Vec<i64>,
    /// Growth of the lower bound per step past `beyond`; `None` when all
    /// later coefficients vanish.
    asymptotic: Option<i64>,
}

/// Serialized Fredholm series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FredholmRecord {
    pub coeffs: Vec<ScalarRecord>,
    pub certified_prefix: usize,
    pub certified_polygon_end: usize,
}

impl FredholmSeries {
    /// A series given directly by its coefficients, with every later
    /// coefficient zero.
    pub fn from_polynomial(coeffs: Vec<PadicScalar>) -> Result<Self, SpectralError> {
        let ctx = coeffs.first().ok_or(PadicError::AllCoefficientsZero)?.context();
        if coeffs[0] != PadicScalar::one(ctx) {
            return Err(PadicError::NonUnitConstantTerm.into());
        }
        let mut s = FredholmSeries {
            ctx,
            floors: vec![i64::MIN; coeffs.len()],
            coeffs,
            certified_prefix: 0,
            hull_end: 0,
            beyond: Vec::new(),
            asymptotic: None,
        };
        s.certify(0);
        Ok(s)
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    /// c_0, …, c_N, each truncated to its certified precision.
    pub fn coeffs(&self) -> &[PadicScalar] {
        &self.coeffs
    }

    /// Largest n₀ such that c_0..c_{n₀} are determined independently of the
    /// truncation: either to full working precision or as vertices of the
    /// Newton polygon.
    pub fn certified_prefix(&self) -> usize {
        self.certified_prefix
    }

    /// End of the part of the Newton polygon certified for the full operator.
    pub fn certified_polygon_end(&self) -> usize {
        self.hull_end
    }

    pub fn to_record(&self) -> FredholmRecord {
        FredholmRecord {
            coeffs: self.coeffs.iter().map(|c| c.to_record()).collect(),
            certified_prefix: self.certified_prefix,
            certified_polygon_end: self.hull_end,
        }
    }

    fn known(&self) -> Vec<Known> {
        self.coeffs
            .iter()
            .zip(&self.floors)
            .map(|(c, &f)| match c.valuation_pi() {
                Some(v) => Known::Value(v),
                None => Known::AtLeast(c.abs_precision_pi().max(f)),
            })
            .chain(self.beyond.iter().map(|&b| Known::AtLeast(b)))
            .collect()
    }

    /// Whether every coefficient at index n > `from` lies strictly (or
    /// weakly) above the line through (from, v_from) with slope `slope`
    /// (π-units per step), including the asymptotic region.
    fn above_line(&self, from: usize, v_from: Ratio<i64>, slope: Ratio<i64>, strict: bool) -> bool {
        let known = self.known();
        for (n, k) in known.iter().enumerate().skip(from + 1) {
            let bound = v_from + slope * Ratio::from((n - from) as i64);
            let v = Ratio::from(match k {
                Known::Value(v) | Known::AtLeast(v) => *v,
            });
            if v < bound || (strict && v == bound) {
                return false;
            }
        }
        match self.asymptotic {
            None => true,
            Some(step) => {
                let step = Ratio::from(step);
                if strict {
                    step > slope
                } else {
                    step >= slope
                }
            }
        }
    }

    /// `scale_pi`: unscaling lowered the precision of c_n by n·scale_pi.
    fn certify(&mut self, scale_pi: i64) {
        let cap = self.ctx.cap();
        let run = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .take_while(|(n, c)| c.abs_precision_pi() >= cap - *n as i64 * scale_pi)
            .count();
        let pts: Vec<(u32, Ratio<i64>)> = self
            .coeffs
            .iter()
            .enumerate()
            .filter_map(|(n, c)| c.valuation_pi().map(|v| (n as u32, Ratio::from(v))))
            .collect();
        let poly = NewtonPolygon::from_points(&pts);
        let mut hull_end = 0;
        for (k, w) in poly.vertices.windows(2).enumerate().rev() {
            let slope = poly.segments[k].slope;
            if self.polygon_below_unknowns(&poly, k + 1) && self.above_line(w[1].0 as usize, w[1].1, slope, false) {
                hull_end = w[1].0 as usize;
                break;
            }
        }
        self.hull_end = hull_end;
        self.certified_prefix = run.max(hull_end);
    }

    /// Unknown coefficients left of vertex `upto` lie on or above the polygon.
    fn polygon_below_unknowns(&self, poly: &NewtonPolygon, upto: usize) -> bool {
        let end = poly.vertices[upto].0;
        for (n, c) in self.coeffs.iter().enumerate() {
            if n as u32 >= end {
                break;
            }
            if c.valuation_pi().is_none() {
                if let Some(v) = poly.value_at(n as u32) {
                    if Ratio::from(c.abs_precision_pi().max(self.floors[n])) < v {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// det(1 − T·U) on the stored block, coefficients truncated to what the
/// tail bound certifies: c_n is known modulo π^{τ + S_{n−1}}, where S_k is
/// the sum of the k smallest column valuations (tail columns counted at τ).
pub fn fredholm_series(u: &CompactOperatorModel, max_n: Option<usize>) -> Result<FredholmSeries, SpectralError> {
    let ctx = u.ctx;
    let n = u.size();
    let top = max_n.unwrap_or(n).min(n);
    let t = match u.tail {
        Tail::Missing => return Err(SpectralError::TailBoundMissing),
        Tail::Exact => None,
        Tail::Bound(t) => Some(t),
    };
    let raw = u.matrix.fredholm_coefficients(top, &PadicScalar::one(ctx));
    let mut colv = u.matrix.column_valuations_pi();
    if let Some(t) = t {
        for c in colv.iter_mut() {
            *c = (*c).min(t);
        }
    }
    colv.sort_unstable();
    // sum of the k smallest column valuations, tail columns counted at t
    let smallest = |k: usize| -> Option<i64> {
        let mut s = 0i64;
        for i in 0..k {
            match colv.get(i) {
                Some(&c) => s = s.saturating_add(c.min(t.unwrap_or(i64::MAX))),
                None => s = s.saturating_add(t?),
            }
        }
        Some(s)
    };
    let s = u.scale_pi;
    let unscale = |k: usize| PadicScalar::uniformizer_pow(ctx, -(k as i64) * s);
    let mut coeffs = Vec::with_capacity(raw.len());
    let floors: Vec<i64> =
        (0..raw.len()).map(|k| smallest(k).map_or(i64::MIN, |b| b.saturating_sub(k as i64 * s))).collect();
    for (k, c) in raw.into_iter().enumerate() {
        let mut c = c;
        if k > 0 {
            if let Some(t) = t {
                let bound = t.saturating_add(smallest(k - 1).unwrap_or(i64::MAX));
                c = c.truncate(bound.min(c.abs_precision_pi()));
            }
        }
        coeffs.push(if s == 0 { c } else { &c * &unscale(k) });
    }
    // bounds beyond the computed range: v(c_k) ≥ S_k
    let mut beyond = Vec::new();
    let limit = if t.is_some() { n + 2 } else { n };
    for k in top + 1..=limit {
        match smallest(k) {
            Some(b) => beyond.push(b - k as i64 * s),
            None => break,
        }
    }
    let asymptotic = t.map(|t| t - s);
    let mut series = FredholmSeries { ctx, coeffs, floors, certified_prefix: 0, hull_end: 0, beyond, asymptotic };
    series.certify(s);
    Ok(series)
}

/// Newton polygon of the certified part of the series; slopes in p-adic
/// units.
pub fn newton_slopes(p: &FredholmSeries) -> Result<NewtonPolygon, SpectralError> {
    let e = p.ctx.e() as i64;
    let end = p.hull_end;
    if end == 0 {
        let trivial = p.asymptotic.is_none()
            && p.beyond.is_empty()
            && p.coeffs.iter().skip(1).all(|c| c.is_zero() && c.abs_precision_pi() >= p.ctx.cap());
        if trivial {
            return Ok(NewtonPolygon::from_points(&[(0, Ratio::from(0))]));
        }
        return Err(SpectralError::PrefixTooShort);
    }
    let pts: Vec<(u32, Ratio<i64>)> = p.coeffs[..=end]
        .iter()
        .enumerate()
        .filter_map(|(n, c)| c.valuation_pi().map(|v| (n as u32, Ratio::new(v, e))))
        .collect();
    Ok(NewtonPolygon::from_points(&pts))
}
