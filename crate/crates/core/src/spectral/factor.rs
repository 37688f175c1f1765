//! Slope factorizations P = Q·R and the projectors they induce.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{newton_slopes, CompactOperatorModel, FredholmSeries, SpectralError};
use crate::padic::{Matrix, NewtonPolygon, PadicContext, PadicScalar, Poly, ScalarRecord, GUARD_DIGITS};

/// Which part of the spectrum a boundary slope belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeSide {
    /// Reject h if it is a slope.
    Strict,
    /// Slopes ≤ h go to Q.
    LowerInclusive,
    /// Slopes < h go to Q.
    LowerExclusive,
}

/// P = Q·R with Q a polynomial carrying the slopes ≤ h (or < h), together
/// with Bezout data a·Q + b·R ≡ 1.
#[derive(Debug, Clone)]
pub struct SlopeFactorization {
    pub h: Ratio<i64>,
    pub side: SlopeSide,
    pub q: Poly,
    /// R modulo T^{N−d+1}.
    pub r: Poly,
    pub bezout_a: Poly,
    pub bezout_b: Poly,
    /// Valuation (π-units) of a·Q + b·R − 1 modulo T^{N+1}.
    pub bezout_precision_pi: i64,
    /// Precision (π-units) to which Q and R are independent of the
    /// uncertainty in P.
    pub certified_pi: i64,
    /// Number N of coefficients of P used.
    pub degree: usize,
}

/// Serialized factorization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorizationRecord {
    pub h: String,
    pub side: SlopeSide,
    pub q: Vec<ScalarRecord>,
    pub r_prefix: Vec<ScalarRecord>,
    pub bezout_precision: i64,
    pub certified_precision: i64,
}

impl SlopeFactorization {
    pub fn d(&self) -> usize {
        self.q.degree().unwrap_or(0)
    }

    pub fn to_record(&self) -> FactorizationRecord {
        let h = if *self.h.denom() == 1 { self.h.numer().to_string() } else { format!("{}/{}", self.h.numer(), self.h.denom()) };
        FactorizationRecord {
            h,
            side: self.side,
            q: self.q.coeffs().iter().map(|c| c.to_record()).collect(),
            r_prefix: self.r.coeffs().iter().map(|c| c.to_record()).collect(),
            bezout_precision: self.bezout_precision_pi,
            certified_precision: self.certified_pi,
        }
    }
}

fn exact_lift(p: &Poly, hi: PadicContext) -> Poly {
    Poly::new(hi, p.coeffs().iter().map(|c| c.as_exact().lift(hi)).collect())
}

/// Splits P (in the context of its coefficients) as Q·S with deg Q = d,
/// starting from Q_0 = P_{≤d} and iterating Q ← Q + (P mod Q) until the
/// remainder has valuation ≥ `tol`. Returns (Q, S) normalized so that
/// Q(0) = 1.
fn hensel_split(p: &Poly, d: usize, tol: i64) -> Result<(Poly, Poly), SpectralError> {
    let ctx = p.context();
    if p.len() <= d + 1 {
        return Ok((p.clone(), Poly::one(ctx)));
    }
    let mut q = p.truncated(d + 1);
    let max_iter = 4 * ctx.cap() as usize + 16;
    for _ in 0..max_iter {
        let (s, r) = p.divmod(&q)?;
        if r.coeffs().iter().all(|c| c.valuation_floor_pi() >= tol) {
            let q0 = q.coeff(0);
            let qn = Poly::new(ctx, q.coeffs().iter().map(|c| c.checked_div(&q0)).collect::<Result<_, _>>()?);
            return Ok((qn, s.scale(&q0)));
        }
        let q2 = q.add(&r);
        q = Poly::new(ctx, q2.coeffs().iter().map(|c| c.as_exact()).collect());
    }
    Err(SpectralError::InsufficientPrecision("slope factorization did not converge".into()))
}

/// b with b·f ≡ 1 modulo m (deg m = d, deg f < d).
fn inverse_mod(f: &Poly, m: &Poly) -> Result<Poly, SpectralError> {
    let ctx = m.context();
    let d = m.degree().unwrap_or(0);
    if d == 0 {
        return Ok(Poly::zero(ctx));
    }
    let mut cols = Vec::with_capacity(d);
    let mut cur = f.divmod(m)?.1;
    let x = Poly::from_i64(ctx, &[0, 1]);
    for _ in 0..d {
        cols.push(cur.clone());
        cur = cur.mul(&x).divmod(m)?.1;
    }
    let mat = Matrix::from_fn(d, d, |i, j| cols[j].coeff(i));
    let mut rhs = Matrix::zeros(ctx, d, 1);
    rhs.set(0, 0, PadicScalar::one(ctx));
    let sol = mat.solve(&rhs)?;
    Ok(Poly::new(ctx, (0..d).map(|i| sol.get(i, 0).clone()).collect()))
}

/// 1/q modulo T^n, for q(0) a unit.
fn series_inverse(q: &Poly, n: usize) -> Result<Poly, SpectralError> {
    let ctx = q.context();
    let inv0 = q.coeff(0).inverse()?;
    let mut out = vec![PadicScalar::zero(ctx); n];
    if n == 0 {
        return Ok(Poly::new(ctx, out));
    }
    out[0] = inv0.clone();
    for k in 1..n {
        let mut acc = PadicScalar::zero(ctx);
        for j in 1..=k.min(q.len().saturating_sub(1)) {
            acc = &acc + &(&q.coeff(j) * &out[k - j]);
        }
        out[k] = -&(&acc * &inv0);
    }
    Ok(Poly::new(ctx, out))
}

/// Drops trailing coefficients beyond degree d for which `negligible` holds.
fn trim_tail(p: &Poly, d: usize, negligible: impl Fn(&PadicScalar) -> bool) -> Poly {
    let mut len = p.len();
    while len > d + 1 && negligible(&p.coeff(len - 1)) {
        len -= 1;
    }
    p.truncated(len)
}

fn digits_for(v_pi: i64, e: u32) -> u32 {
    (v_pi.max(0) as u32).div_ceil(e)
}

/// Extra digits for splitting a degree-n polynomial at degree d: division
/// by Q loses v_d per step, and the remainder must reach cap + v_d.
fn split_extra(v_d: i64, e: u32, n: usize, d: usize) -> u32 {
    digits_for(v_d, e) * (n - d + 2) as u32 + 2 * GUARD_DIGITS
}

/// Remainder valuation after which Q is correct modulo π^cap.
fn split_tol(ctx: &PadicContext, v_d: i64) -> i64 {
    ctx.cap() + v_d + GUARD_DIGITS as i64 * ctx.e() as i64
}

/// Lower bound (π-units) for the first-order change of Q when the
/// coefficients of P move within their uncertainty. A change δ·T^k moves Q
/// by δ·(T^k·b mod Q), b = R^{-1} mod Q. Indices past the stored and
/// bounded range use the Gauss norm at the largest root radius of Q, under
/// which reduction mod Q is contractive.
fn perturbation_bound(p: &FredholmSeries, q: &Poly, b: &Poly) -> i64 {
    let hi = q.context();
    let d = q.degree().unwrap_or(0);
    let pts: Vec<(u32, Ratio<i64>)> =
        q.coeffs().iter().enumerate().filter_map(|(i, c)| c.valuation_pi().map(|v| (i as u32, Ratio::from(v)))).collect();
    let top_slope = NewtonPolygon::from_points(&pts).segments.iter().map(|s| s.slope).max().unwrap_or(Ratio::from(0));
    let gauss_b = b
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| Ratio::from(c.valuation_floor_pi()) - top_slope * Ratio::from(i as i64))
        .min()
        .unwrap_or(Ratio::from(hi.cap()));
    let stored = p.coeffs.iter().zip(&p.floors).map(|(c, &f)| match c.valuation_pi() {
        Some(_) => c.abs_precision_pi(),
        None => c.abs_precision_pi().max(f),
    });
    let uncertainty: Vec<i64> = stored.chain(p.beyond.iter().copied()).collect();
    let x = Poly::from_i64(hi, &[0, 1]);
    let mut cur = match b.divmod(q) {
        Ok((_, r)) => r,
        Err(_) => return i64::MIN,
    };
    let mut bound = i64::MAX;
    for (k, &u) in uncertainty.iter().enumerate() {
        if k > 0 {
            cur = match cur.mul(&x).divmod(q) {
                Ok((_, r)) => r,
                Err(_) => return i64::MIN,
            };
        }
        if k == 0 || d == 0 {
            continue;
        }
        let sigma = cur.coeffs().iter().map(|c| c.valuation_floor_pi()).min().unwrap_or(hi.cap());
        bound = bound.min(u.saturating_add(sigma));
    }
    if let Some(step) = p.asymptotic {
        let last = uncertainty.len().saturating_sub(1);
        let u = Ratio::from(*uncertainty.last().unwrap_or(&0));
        if Ratio::from(step) < top_slope {
            return i64::MIN;
        }
        let tail = u + gauss_b - top_slope * Ratio::from(last as i64);
        bound = bound.min(tail.floor().to_integer());
    }
    bound
}

/// Factor P = Q·R separating slopes ≤ h (per `side`) from the rest.
pub fn slope_factor(p: &FredholmSeries, h: Ratio<i64>, side: SlopeSide) -> Result<SlopeFactorization, SpectralError> {
    let ctx = p.context();
    let e = ctx.e() as i64;
    let poly = newton_slopes(p)?;
    if side == SlopeSide::Strict && poly.has_slope(h) {
        return Err(SpectralError::SlopeOnBoundary(format!("{h}")));
    }
    let d = poly.mass_below(h, side == SlopeSide::LowerExclusive) as usize;
    let v_d = if d == 0 { 0 } else { p.coeffs()[d].valuation_pi().ok_or(SpectralError::PrefixTooShort)? };
    let strict = side != SlopeSide::LowerExclusive;
    if !p.above_line(d, Ratio::from(v_d), h * e, strict) {
        return Err(SpectralError::InsufficientPrecision(format!(
            "slopes beyond the certified prefix are not separated from {h}"
        )));
    }
    let n = p.coeffs().len() - 1;
    let full = Poly::new(ctx, p.coeffs().to_vec());
    if d == 0 {
        return Ok(SlopeFactorization {
            h,
            side,
            q: Poly::one(ctx),
            r: full,
            bezout_a: Poly::one(ctx),
            bezout_b: Poly::zero(ctx),
            bezout_precision_pi: ctx.cap(),
            certified_pi: ctx.cap(),
            degree: n,
        });
    }
    // coefficients that vanish at precision enter as exact zeros; their
    // uncertainty is already charged to certified_pi
    let used = trim_tail(&full, d, |c| c.valuation_pi().is_none());
    let hi = ctx.elevated_capped(split_extra(v_d, ctx.e(), used.len() - 1, d));
    let ph = exact_lift(&used, hi);
    let (q, r) = hensel_split(&ph, d, split_tol(&ctx, v_d))?;
    let r = r.truncated(n - d + 1);
    // Bezout: b = (R mod Q)^{-1} mod Q, a = (1 − bR)/Q as a series
    let b = inverse_mod(&r, &q)?;
    let certified_pi = perturbation_bound(p, &q, &b).min(ctx.cap());
    let one = Poly::one(hi);
    let num = one.sub(&b.mul_truncated(&r, n + 1));
    let a = num.mul_truncated(&series_inverse(&q, n + 1)?, n + 1);
    let residual = a.mul_truncated(&q, n + 1).add(&b.mul_truncated(&r, n + 1)).sub(&one);
    let bezout_precision_pi = residual
        .coeffs()
        .iter()
        .map(|c| c.valuation_floor_pi())
        .min()
        .unwrap_or(hi.cap())
        .min(ctx.cap());
    let down = |x: &Poly| Poly::new(ctx, x.coeffs().iter().map(|c| c.reduce(ctx)).collect());
    let (q, r) = (down(&q), down(&r));
    if q.min_precision_pi() < ctx.cap() || r.min_precision_pi() < ctx.cap() {
        return Err(SpectralError::InsufficientPrecision(format!(
            "factor precision {} below the working cap",
            q.min_precision_pi().min(r.min_precision_pi())
        )));
    }
    Ok(SlopeFactorization {
        h,
        side,
        q,
        r,
        bezout_a: down(&a),
        bezout_b: down(&b),
        bezout_precision_pi,
        certified_pi,
        degree: n,
    })
}

/// Spectral projector onto the generalized eigenspace cut out by a slope
/// factorization, with its defects measured in π-units.
#[derive(Debug, Clone)]
pub struct RieszProjector {
    pub e: Matrix<PadicScalar>,
    pub rank: usize,
    /// Valuation of e² − e.
    pub idempotency_defect_pi: i64,
    /// Valuation of eU − Ue.
    pub commutator_defect_pi: i64,
    /// Valuation of det(1 − T·eU) − Q.
    pub charpoly_defect_pi: i64,
}

fn poly_at_matrix(p: &Poly, u: &Matrix<PadicScalar>) -> Result<Matrix<PadicScalar>, SpectralError> {
    let ctx = p.context();
    let n = u.rows();
    let id = Matrix::identity(ctx, n);
    let mut acc = Matrix::zeros(ctx, n, n);
    for c in p.coeffs().iter().rev() {
        acc = acc.checked_mul(u)?.checked_add(&id.scale(c))?;
    }
    Ok(acc)
}

fn defect(m: &Matrix<PadicScalar>) -> i64 {
    m.valuation_floor_pi()
}

/// d-dimensional right and left kernels of `a` after discarding entries of
/// valuation ≥ τ, for the largest τ ≤ `cap` at which both have dimension d.
fn approximate_kernels(
    a: &Matrix<PadicScalar>,
    d: usize,
    cap: i64,
) -> Result<(Matrix<PadicScalar>, Matrix<PadicScalar>), SpectralError> {
    let n = a.rows();
    for tau in (1..=cap).rev() {
        let m = a.chop(tau);
        let right = m.kernel()?;
        if right.len() != d {
            continue;
        }
        let left = m.transpose().kernel()?;
        if left.len() != d {
            continue;
        }
        return Ok((
            Matrix::from_fn(n, d, |i, j| right[j][i].clone()),
            Matrix::from_fn(n, d, |i, j| left[j][i].clone()),
        ));
    }
    Err(SpectralError::PrecisionLoss(format!("A(U) has no kernel of dimension {d} at any precision")))
}

/// Fixed pseudo-random integers (splitmix64 output, reduced).
fn mix(k: u64) -> i64 {
    let mut z = k.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    ((z ^ (z >> 31)) >> 33) as i64
}

/// Subspace iteration X ← U·X, renormalized on pivot rows, until X moves by
/// less than π^target. Converges to the invariant subspace of the d
/// eigenvalues of smallest slope when they are separated from the rest.
fn dominant_subspace(
    u: &Matrix<PadicScalar>,
    mut x: Matrix<PadicScalar>,
    target: i64,
) -> Result<Matrix<PadicScalar>, SpectralError> {
    let max_iter = 4 * u.get(0, 0).context().cap() as usize + 16;
    let normalize = |z: &Matrix<PadicScalar>| -> Result<Matrix<PadicScalar>, SpectralError> {
        let rows = z.transpose().independent_columns();
        if rows.len() != z.cols() {
            return Err(SpectralError::PrecisionLoss("invariant subspace lost rank".into()));
        }
        let block = Matrix::from_fn(rows.len(), rows.len(), |i, j| z.get(rows[i], j).clone());
        // the iteration is self-correcting, so rounding is not tracked; the
        // projector built from the limit is checked afterwards
        Ok(z.checked_mul(&block.inverse()?)?.map(|c| c.as_exact()))
    };
    x = normalize(&x)?;
    for _ in 0..max_iter {
        let next = normalize(&u.checked_mul(&x)?)?;
        let moved = next.checked_sub(&x)?.valuation_floor_pi();
        x = next;
        if moved >= target {
            return Ok(x);
        }
    }
    Err(SpectralError::InsufficientPrecision("invariant subspace iteration did not converge".into()))
}

/// Projector onto the generalized eigenspace of the stored block for the
/// eigenvalues of slope ≤ h (or < h), along the complementary invariant
/// subspace: e = X (YᵀX)^{-1} Yᵀ with X, Y the right and left invariant
/// subspaces, seeded from the kernels of A(U) = U^d Q(1/U).
pub fn riesz_projector(u: &CompactOperatorModel, fact: &SlopeFactorization) -> Result<RieszProjector, SpectralError> {
    let ctx = u.context();
    let n = u.size();
    let d = fact.d();
    let tol = ctx.cap() - GUARD_DIGITS as i64 * ctx.e() as i64;
    let um = u.matrix();
    if d == 0 {
        return Ok(RieszProjector {
            e: Matrix::zeros(ctx, n, n),
            rank: 0,
            idempotency_defect_pi: ctx.cap(),
            commutator_defect_pi: ctx.cap(),
            charpoly_defect_pi: ctx.cap(),
        });
    }
    if d > n {
        return Err(SpectralError::InvalidModel("factor degree exceeds the operator size".into()));
    }
    let v_d = fact.q.coeff(d).valuation_pi().unwrap_or(0).max(0);
    let hi = ctx.elevated_capped(digits_for(v_d, ctx.e()) + 2 * GUARD_DIGITS);
    let uh = um.map(|x| x.as_exact().lift(hi));
    let a_u = poly_at_matrix(&exact_lift(&fact.q, hi).reversed(d), &uh)?;
    let (x0, y0) = approximate_kernels(&a_u, d, ctx.cap()).unwrap_or_else(|_| {
        // fixed generic start; the iteration only needs a nonzero component
        // along the dominant subspace
        let g = Matrix::from_fn(n, d, |i, j| PadicScalar::from_i64(hi, mix((i * d + j) as u64)));
        (g.clone(), g)
    });
    let target = ctx.cap() + GUARD_DIGITS as i64 * ctx.e() as i64;
    let x = dominant_subspace(&uh, x0, target)?;
    let y = dominant_subspace(&uh.transpose(), y0, target)?;
    let yt = y.transpose();
    let e_hi = x.checked_mul(&yt.checked_mul(&x)?.inverse()?)?.checked_mul(&yt)?;
    let e = e_hi.reduce(ctx);
    let idem = defect(&e.checked_mul(&e)?.checked_sub(&e)?);
    let comm = defect(&e.checked_mul(&um)?.checked_sub(&um.checked_mul(&e)?)?);
    let rank = e.chop(tol).rank();
    let eu = e.checked_mul(&um)?;
    let cp = eu.fredholm_coefficients(n, &PadicScalar::one(ctx));
    let mut charpoly = ctx.cap();
    for (k, c) in cp.iter().enumerate() {
        charpoly = charpoly.min((c - &fact.q.coeff(k)).valuation_floor_pi());
    }
    if idem < tol || comm < tol {
        return Err(SpectralError::PrecisionLoss(format!("projector defects π^{idem}, π^{comm}")));
    }
    if rank != d {
        return Err(SpectralError::PrecisionLoss(format!("projector rank {rank} differs from deg Q = {d}")));
    }
    if charpoly < tol.min(fact.certified_pi) {
        return Err(SpectralError::PrecisionLoss(format!("char series on im e matches Q only to π^{charpoly}")));
    }
    Ok(RieszProjector {
        e,
        rank,
        idempotency_defect_pi: idem,
        commutator_defect_pi: comm,
        charpoly_defect_pi: charpoly,
    })
}
