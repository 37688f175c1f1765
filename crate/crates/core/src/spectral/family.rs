//! Operators over a truncated Tate algebra: fibers of the spectral variety
//! and Hensel lifting of eigenvectors along the base.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{fredholm_series, slope_factor, CompactOperatorModel, SlopeSide, SpectralError, Tail};
use crate::padic::{Matrix, PadicContext, PadicError, PadicScalar, Poly, ScalarRecord, TruncatedSeries, GUARD_DIGITS};

/// A matrix with entries in K⟨S_1, …, S_g⟩ truncated at total degree D_A.
#[derive(Debug, Clone)]
pub struct FamilyOperator {
    ctx: PadicContext,
    vars: Arc<Vec<String>>,
    degree: u32,
    matrix: Matrix<TruncatedSeries>,
    tail: Tail,
}

impl FamilyOperator {
    pub fn new(matrix: Matrix<TruncatedSeries>, tail: Tail) -> Result<Self, SpectralError> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(SpectralError::InvalidModel("family matrix must be square and nonempty".into()));
        }
        let first = matrix.get(0, 0);
        let (ctx, vars, degree) = (first.context(), first.vars().clone(), first.degree_bound());
        if matrix
            .entries()
            .iter()
            .any(|x| x.context() != ctx || x.vars() != &vars || x.degree_bound() != degree)
        {
            return Err(PadicError::VariableMismatch.into());
        }
        Ok(FamilyOperator { ctx, vars, degree, matrix, tail })
    }

    /// Entries from integer polynomials given as (exponent, coefficient) lists.
    pub fn from_terms(
        ctx: PadicContext,
        vars: &[&str],
        degree: u32,
        entries: &[Vec<Vec<(Vec<u32>, i64)>>],
    ) -> Result<Self, SpectralError> {
        let template = TruncatedSeries::with_vars(ctx, vars, degree);
        let rows = entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|terms| {
                        let mut s = template.zero_like();
                        for (k, c) in terms {
                            s.add_term(k.clone(), &PadicScalar::from_i64(ctx, *c));
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        Self::new(Matrix::from_rows(rows)?, Tail::Exact)
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn matrix(&self) -> &Matrix<TruncatedSeries> {
        &self.matrix
    }

    fn check_point(&self, point: &[PadicScalar]) -> Result<(), SpectralError> {
        if point.len() != self.nvars() {
            return Err(PadicError::DimensionMismatch("specialization point".into()).into());
        }
        if point.iter().any(|x| x.valuation_floor_pi() < 0) {
            return Err(SpectralError::SpecializationOutsideDomain);
        }
        Ok(())
    }

    /// The fiber operator at a point of the closed unit polydisc.
    pub fn specialize(&self, point: &[PadicScalar]) -> Result<CompactOperatorModel, SpectralError> {
        self.check_point(point)?;
        let mut vals = Vec::with_capacity(self.size() * self.size());
        for x in self.matrix.entries() {
            vals.push(x.eval(point)?);
        }
        let n = self.size();
        CompactOperatorModel::new(Matrix::from_fn(n, n, |i, j| vals[i * n + j].clone()), self.tail)
    }

    /// Coefficients of det(1 − T·U(S)) as series in S.
    pub fn fredholm_coefficients(&self, max_n: usize) -> Vec<TruncatedSeries> {
        let one = self.matrix.get(0, 0).one_like();
        self.matrix.fredholm_coefficients(max_n, &one)
    }
}

/// One root of the slope-≤h factor on a fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    /// Eigenvalue of U (reciprocal root of Q), when it lies in the field.
    pub eigenvalue: Option<ScalarRecord>,
    #[serde(with = "crate::padic::ratio_serde")]
    pub slope: Ratio<i64>,
    pub multiplicity: usize,
}

/// Points of the spectral variety over one weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberEigendata {
    pub degree_q: usize,
    pub points: Vec<FiberPoint>,
}

impl FiberEigendata {
    pub fn eigenvalues(&self, ctx: PadicContext) -> Vec<(PadicScalar, usize)> {
        self.points
            .iter()
            .filter_map(|p| {
                p.eigenvalue
                    .as_ref()
                    .and_then(|r| PadicScalar::from_record(ctx, r).ok())
                    .map(|x| (x, p.multiplicity))
            })
            .collect()
    }
}

/// Eigenvalues of slope ≤ h on the fiber at `point`, with slopes and
/// multiplicities. Eigenvalues outside K are reported without a value.
pub fn fiber_eigendata(
    family: &FamilyOperator,
    point: &[PadicScalar],
    h: Ratio<i64>,
    side: SlopeSide,
) -> Result<FiberEigendata, SpectralError> {
    let u = family.specialize(point)?;
    let p = fredholm_series(&u, None)?;
    let fact = slope_factor(&p, h, side)?;
    let d = fact.d();
    if d == 0 {
        return Ok(FiberEigendata { degree_q: 0, points: Vec::new() });
    }
    let e = u.context().e() as i64;
    // roots of A(x) = x^d Q(1/x) are the eigenvalues
    let a = fact.q.reversed(d);
    let roots = a.integral_roots();
    let mut points: Vec<FiberPoint> = roots
        .iter()
        .map(|(x, m)| FiberPoint {
            eigenvalue: Some(x.to_record()),
            slope: Ratio::new(x.valuation_pi().unwrap_or(u.context().cap()), e),
            multiplicity: *m,
        })
        .collect();
    let qpoly = crate::padic::NewtonPolygon::from_coefficients(fact.q.coeffs())?;
    for seg in &qpoly.segments {
        let found: usize = points.iter().filter(|p| p.slope == seg.slope).map(|p| p.multiplicity).sum();
        if found < seg.multiplicity as usize {
            points.push(FiberPoint { eigenvalue: None, slope: seg.slope, multiplicity: seg.multiplicity as usize - found });
        }
    }
    points.sort_by(|a, b| a.slope.cmp(&b.slope));
    Ok(FiberEigendata { degree_q: d, points })
}

/// An eigenvalue λ(S) and eigenvector v(S) with U(S)v(S) = λ(S)v(S) to the
/// truncation degree; v is normalized by v_j = 1.
#[derive(Debug, Clone)]
pub struct EigenFamily {
    pub lambda: TruncatedSeries,
    pub vector: Vec<TruncatedSeries>,
    pub normalization: usize,
    /// Valuation (π-units) of the residual U v − λ v.
    pub residual_pi: i64,
}

impl EigenFamily {
    pub fn specialize(&self, point: &[PadicScalar]) -> Result<(PadicScalar, Vec<PadicScalar>), SpectralError> {
        let l = self.lambda.eval(point)?;
        let v = self.vector.iter().map(|x| x.eval(point)).collect::<Result<Vec<_>, _>>()?;
        Ok((l, v))
    }

    /// Eigenvalue series of another operator commuting with the family,
    /// read off at the normalized coordinate; errors if v(S) is not an
    /// eigenvector of it.
    pub fn eigenvalue_of(&self, op: &FamilyOperator) -> Result<TruncatedSeries, SpectralError> {
        let w = op.matrix.mul_vec(&self.vector);
        let mu = w[self.normalization].clone();
        let ctx = op.context();
        let tol = ctx.cap() - 2 * GUARD_DIGITS as i64 * ctx.e() as i64;
        for (wi, vi) in w.iter().zip(&self.vector) {
            let r = wi.checked_add(&mu.checked_mul(vi)?.neg())?;
            if r.terms().any(|(_, c)| c.valuation_floor_pi() < tol) {
                return Err(SpectralError::NonCommutingInput);
            }
        }
        Ok(mu)
    }
}

fn scalar_matrix_on_series(m: &Matrix<PadicScalar>, v: &[TruncatedSeries]) -> Vec<TruncatedSeries> {
    let keys: BTreeSet<Vec<u32>> = v.iter().flat_map(|s| s.terms().map(|(k, _)| k.clone())).collect();
    let mut out: Vec<TruncatedSeries> = (0..m.rows()).map(|_| v[0].zero_like()).collect();
    for k in keys {
        let col: Vec<PadicScalar> = v.iter().map(|s| s.coeff(&k)).collect();
        for (i, x) in m.mul_vec(&col).into_iter().enumerate() {
            out[i].add_term(k.clone(), &x);
        }
    }
    out
}

/// Lift a simple eigenvalue λ₀ of U(0) to a family over the base, by
/// Newton iteration on the bordered system
/// F(v, λ) = (U v − λ v, v_j − 1) = 0.
pub fn eigen_family_lift(
    family: &FamilyOperator,
    lambda0: &PadicScalar,
    normalization: Option<usize>,
) -> Result<EigenFamily, SpectralError> {
    let ctx = family.context();
    let n = family.size();
    let origin = vec![PadicScalar::zero(ctx); family.nvars()];
    let u0 = family.specialize(&origin)?.matrix();
    // unramifiedness: λ₀^{-1} is a simple root of P with unit derivative
    let p0 = Poly::new(ctx, u0.fredholm_coefficients(n, &PadicScalar::one(ctx)));
    let t0 = lambda0.inverse()?;
    let tol = ctx.cap() - GUARD_DIGITS as i64 * ctx.e() as i64;
    if p0.eval(&t0).valuation_floor_pi() < tol {
        return Err(SpectralError::InvalidModel("λ₀ is not an eigenvalue of the fiber at 0".into()));
    }
    if !p0.derivative().eval(&t0).is_unit() {
        return Err(SpectralError::RamifiedPoint);
    }
    let shifted = u0.checked_sub(&Matrix::identity(ctx, n).scale(lambda0))?;
    let ker = shifted.chop(tol).kernel()?;
    if ker.len() != 1 {
        return Err(SpectralError::RamifiedPoint);
    }
    let v0 = &ker[0];
    let j = match normalization {
        Some(j) if j < n && !v0[j].is_zero() => j,
        Some(_) => return Err(SpectralError::InvalidModel("normalization coordinate vanishes on v₀".into())),
        None => {
            let vmin = v0.iter().filter_map(|x| x.valuation_pi()).min().ok_or(SpectralError::RamifiedPoint)?;
            (0..n).rev().find(|&i| v0[i].valuation_pi() == Some(vmin)).expect("minimum is attained")
        }
    };
    let scale = v0[j].inverse()?;
    let v0: Vec<PadicScalar> = v0.iter().map(|x| x * &scale).collect();
    // bordered Jacobian at S = 0
    let mut j0 = Matrix::zeros(ctx, n + 1, n + 1);
    for r in 0..n {
        for c in 0..n {
            j0.set(r, c, shifted.get(r, c).clone());
        }
        j0.set(r, n, -&v0[r]);
    }
    j0.set(n, j, PadicScalar::one(ctx));
    let j0inv = j0.inverse()?;
    let j0h = j0.map(|x| x.as_exact());
    let loss = (-j0inv.valuation_floor_pi()).max(0);
    let d = family.degree();
    let hi = ctx.elevated_capped(loss as u32 * (d + 2) + GUARD_DIGITS);
    let um = family.matrix.map(|x| x.map_coefficients(hi, |c| c.as_exact().lift(hi)));
    let j0inv = j0inv.map(|x| x.as_exact().lift(hi));
    let j0h = j0h.map(|x| x.lift(hi));
    let template = um.get(0, 0).zero_like();
    let mut v: Vec<TruncatedSeries> = v0.iter().map(|x| template.scalar_like(x.as_exact().lift(hi))).collect();
    let mut lambda = template.scalar_like(lambda0.as_exact().lift(hi));
    let residual = |v: &[TruncatedSeries], lambda: &TruncatedSeries| -> Result<Vec<TruncatedSeries>, SpectralError> {
        let uv = um.mul_vec(v);
        let mut f = Vec::with_capacity(n + 1);
        for i in 0..n {
            f.push(uv[i].checked_add(&lambda.checked_mul(&v[i])?.neg())?);
        }
        f.push(v[j].checked_add(&template.scalar_like(PadicScalar::one(hi)).neg())?);
        Ok(f)
    };
    let jacobian = |v: &[TruncatedSeries], lambda: &TruncatedSeries, dx: &[TruncatedSeries]| -> Result<Vec<TruncatedSeries>, SpectralError> {
        let dv = &dx[..n];
        let dl = &dx[n];
        let udv = um.mul_vec(dv);
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let t = udv[i].checked_add(&lambda.checked_mul(&dv[i])?.neg())?.checked_add(&dl.checked_mul(&v[i])?.neg())?;
            out.push(t);
        }
        out.push(dv[j].clone());
        Ok(out)
    };
    let hi_tol = hi.cap() - GUARD_DIGITS as i64 * hi.e() as i64;
    let small = |f: &[TruncatedSeries]| f.iter().all(|s| s.terms().all(|(_, c)| c.valuation_floor_pi() >= hi_tol));
    let max_outer = 2 * (32 - (d + 1).leading_zeros()) as usize + 4;
    let mut converged = false;
    for _ in 0..max_outer {
        let f = residual(&v, &lambda)?;
        if small(&f) {
            converged = true;
            break;
        }
        // J Δ = F with J = J0 + (J − J0); fixed point one degree at a time
        let mut dx = scalar_matrix_on_series(&j0inv, &f);
        for _ in 0..=d {
            let jd = jacobian(&v, &lambda, &dx)?;
            let j0d = scalar_matrix_on_series(&j0h, &dx);
            let corr: Vec<TruncatedSeries> = f
                .iter()
                .zip(jd.iter().zip(&j0d))
                .map(|(fi, (a, b))| fi.checked_add(&a.neg()).and_then(|x| x.checked_add(b)))
                .collect::<Result<_, _>>()?;
            dx = scalar_matrix_on_series(&j0inv, &corr);
        }
        for i in 0..n {
            v[i] = v[i].checked_add(&dx[i].neg())?;
        }
        lambda = lambda.checked_add(&dx[n].neg())?;
    }
    if !converged {
        return Err(SpectralError::DivergentIteration);
    }
    let down = |s: &TruncatedSeries| s.map_coefficients(ctx, |c| c.reduce(ctx));
    let v: Vec<TruncatedSeries> = v.iter().map(down).collect();
    let lambda = down(&lambda);
    let f = {
        let um_lo = family.matrix.clone();
        let uv = um_lo.mul_vec(&v);
        let mut worst = ctx.cap();
        for i in 0..n {
            let r = uv[i].checked_add(&lambda.checked_mul(&v[i])?.neg())?;
            for (_, c) in r.terms() {
                worst = worst.min(c.valuation_floor_pi());
            }
        }
        worst
    };
    if f < ctx.cap() - 2 * ctx.e() as i64 {
        return Err(SpectralError::DivergentIteration);
    }
    Ok(EigenFamily { lambda, vector: v, normalization: j, residual_pi: f })
}
