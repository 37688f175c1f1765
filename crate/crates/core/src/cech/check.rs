//! Exactness of the augmented Čech complex for a free module on the Laurent
//! cover, and a two-sided norm bound for surjections of free modules.

use serde::{Deserialize, Serialize};

use super::{laurent_split, AffinoidModel, CechError, Chart, ChartElement};
use crate::padic::{Matrix, PadicContext, PadicScalar, GUARD_DIGITS};
use crate::spectral::BanachModuleModel;

const MAX_ROUNDS: usize = 64;

/// Outcome of [`cech_check`]. Norms are upper bounds: a quantity that
/// vanishes at the working precision is reported as `p^{-m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CechReport {
    /// `M → M₊ ⊕ M₋` has full column rank.
    pub injective: bool,
    /// The kernel of the difference map has the dimension of the image of
    /// `M` and every kernel vector lies in that image up to the defect.
    pub middle_exact: bool,
    pub middle_defect_norm: f64,
    /// `None` when the defect vanishes at precision.
    pub middle_defect_valuation_pi: Option<i64>,
    /// Splitting rounds needed to reach the working precision.
    pub rounds: usize,
    /// Worst per-round contraction of the surjectivity residual.
    pub epsilon: f64,
    /// Worst residual valuation after each round (`None` = zero).
    pub round_residuals_pi: Vec<Option<i64>>,
    /// Every split part had norm at most the norm of its input.
    pub split_bound_holds: bool,
    /// Rank of H⁰ as a free module.
    pub recovered_rank: usize,
    /// Dimension of the kernel of the difference map on the truncations.
    pub h0_dimension: usize,
}

fn tolerance(ctx: PadicContext) -> i64 {
    ctx.cap() - GUARD_DIGITS as i64 * ctx.e() as i64
}

pub(crate) fn norm_bound(ctx: PadicContext, v: Option<i64>) -> f64 {
    let v = v.unwrap_or(ctx.cap());
    (ctx.p() as f64).powf(-(v as f64) / ctx.e() as f64)
}

fn block_diagonal(m: &Matrix<PadicScalar>, n: usize, ctx: PadicContext) -> Matrix<PadicScalar> {
    let (r, c) = (m.rows(), m.cols());
    Matrix::from_fn(n * r, n * c, |i, j| {
        if i / r == j / c {
            m.get(i % r, j % c).clone()
        } else {
            PadicScalar::zero(ctx)
        }
    })
}

fn min_val(v: &[Option<i64>]) -> Option<i64> {
    v.iter().flatten().copied().min()
}

/// Restriction `A → A₊ ⊕ A₋` and difference `A₊ ⊕ A₋ → A₊₋` on the
/// truncated coordinates of one copy of the base.
fn complex_matrices(base: &AffinoidModel) -> Result<(Matrix<PadicScalar>, Matrix<PadicScalar>), CechError> {
    let ctx = base.context();
    let d = base.degree();
    let one = PadicScalar::one(ctx);
    let mut iota_cols = Vec::new();
    for k in Chart::Base.exponents(d) {
        let a = ChartElement::monomial(ctx, Chart::Base, k, one.clone())?;
        let mut col = a.restrict(Chart::Plus)?.to_coordinates(d)?;
        col.extend(a.restrict(Chart::Minus)?.to_coordinates(d)?);
        iota_cols.push(col);
    }
    let mut d_cols = Vec::new();
    for chart in [Chart::Plus, Chart::Minus] {
        for k in chart.exponents(d) {
            let u = ChartElement::monomial(ctx, chart, k, one.clone())?.restrict(Chart::Both)?;
            let u = if chart == Chart::Minus { u.neg() } else { u };
            d_cols.push(u.to_coordinates(d)?);
        }
    }
    let iota = Matrix::from_fn(iota_cols[0].len(), iota_cols.len(), |i, j| iota_cols[j][i].clone());
    let dm = Matrix::from_fn(d_cols[0].len(), d_cols.len(), |i, j| d_cols[j][i].clone());
    Ok((iota, dm))
}

/// Checks injectivity, middle exactness and surjectivity of
/// `0 → M → M₊ ⊕ M₋ → M₊₋ → 0` for `M = C(I)` over the Laurent cover of
/// `base`. A projective `M` is checked on its ambient `C(I)`, of which the
/// complex for `M` is a direct summand.
pub fn cech_check(m: &BanachModuleModel, base: &AffinoidModel) -> Result<CechReport, CechError> {
    let ctx = base.context();
    let d = base.degree();
    let n = m.basis.len();
    if n == 0 {
        return Err(CechError::DimensionMismatch("module has an empty basis".into()));
    }
    let tol = tolerance(ctx);
    let (iota1, d1) = complex_matrices(base)?;
    let dim_a = iota1.cols();
    let iota = block_diagonal(&iota1, n, ctx);
    let dmap = block_diagonal(&d1, n, ctx);

    let rank_iota = iota.rank();
    let injective = rank_iota == n * dim_a;

    // image ⊆ kernel
    let mut defects = vec![dmap.checked_mul(&iota)?.min_valuation_pi()];
    // kernel ⊆ image
    let kernel = dmap.kernel()?;
    let rows = iota.transpose().independent_columns();
    let mut kernel_in_image = rows.len() == iota.cols();
    if kernel_in_image {
        let square = Matrix::from_fn(rows.len(), iota.cols(), |i, j| iota.get(rows[i], j).clone());
        for kv in &kernel {
            let rhs = Matrix::from_fn(rows.len(), 1, |i, _| kv[rows[i]].clone());
            let a = square.solve(&rhs)?;
            let image = iota.mul_vec(&a.column(0));
            let residual: Vec<Option<i64>> = image.iter().zip(kv).map(|(x, y)| (x - y).valuation_pi()).collect();
            defects.push(min_val(&residual));
        }
    } else {
        kernel_in_image = false;
    }
    let defect = min_val(&defects);
    let middle_exact = kernel_in_image && kernel.len() == rank_iota && defect.map_or(true, |v| v >= tol);

    // surjectivity by iterated splitting, on every overlap basis vector
    let mut rounds = 0;
    let mut contraction: Option<i64> = None;
    let mut residuals: Vec<Option<i64>> = Vec::new();
    let mut split_bound_holds = true;
    for c in 0..n {
        for k in Chart::Both.exponents(d) {
            let mut r: Vec<ChartElement> = (0..n)
                .map(|i| {
                    if i == c {
                        ChartElement::monomial(ctx, Chart::Both, k, PadicScalar::one(ctx))
                    } else {
                        Ok(ChartElement::zero(ctx, Chart::Both))
                    }
                })
                .collect::<Result<_, _>>()?;
            let mut v_prev = min_val(&r.iter().map(|x| x.valuation_pi()).collect::<Vec<_>>());
            let mut round = 0;
            while let Some(v) = v_prev.filter(|&v| v < tol) {
                round += 1;
                if round > MAX_ROUNDS {
                    return Err(CechError::NonContracting { round });
                }
                let mut next = Vec::with_capacity(n);
                for g in &r {
                    let (gp, gm) = laurent_split(g)?;
                    let gv = g.valuation_pi();
                    if gp.valuation_pi().zip(gv).map_or(false, |(a, b)| a < b)
                        || gm.valuation_pi().zip(gv).map_or(false, |(a, b)| a < b)
                    {
                        split_bound_holds = false;
                    }
                    let back = gp.restrict(Chart::Both)?.checked_sub(&gm.restrict(Chart::Both)?)?;
                    next.push(g.checked_sub(&back)?);
                }
                let v_new = min_val(&next.iter().map(|x| x.valuation_pi()).collect::<Vec<_>>());
                let gain = v_new.unwrap_or(ctx.cap()) - v;
                if gain <= 0 {
                    return Err(CechError::NonContracting { round });
                }
                contraction = Some(contraction.map_or(gain, |g: i64| g.min(gain)));
                if residuals.len() < round {
                    residuals.push(v_new);
                } else {
                    residuals[round - 1] = match (residuals[round - 1], v_new) {
                        (Some(a), Some(b)) => Some(a.min(b)),
                        (a, b) => a.or(b),
                    };
                }
                r = next;
                v_prev = v_new;
            }
            rounds = rounds.max(round);
        }
    }
    let epsilon = match contraction {
        Some(g) => (ctx.p() as f64).powf(-(g as f64) / ctx.e() as f64),
        None => 0.0,
    };

    Ok(CechReport {
        injective,
        middle_exact,
        middle_defect_norm: norm_bound(ctx, defect),
        middle_defect_valuation_pi: defect,
        rounds,
        epsilon,
        round_residuals_pi: residuals,
        split_bound_holds,
        recovered_rank: kernel.len() / dim_a,
        h0_dimension: kernel.len(),
    })
}

/// A bounded right inverse `R` of a surjection `S` between finite free
/// modules, giving for every `y` the two-sided estimate
/// `v(y) + v(R) ≤ v_quot(y) ≤ v(y) − v(S)` on the quotient norm.
#[derive(Debug, Clone)]
pub struct OpenMappingBound {
    pub section: Matrix<PadicScalar>,
    pub map_valuation_pi: i64,
    pub section_valuation_pi: i64,
}

impl OpenMappingBound {
    /// Preimage `R·y` of `y`.
    pub fn preimage(&self, y: &[PadicScalar]) -> Vec<PadicScalar> {
        self.section.mul_vec(y)
    }

    /// Valuation interval containing the quotient norm of `y`; `None` for
    /// `y = 0`.
    pub fn quotient_valuation_bounds(&self, y: &[PadicScalar]) -> Option<(i64, i64)> {
        let v = y.iter().filter_map(|c| c.valuation_pi()).min()?;
        Some((v + self.section_valuation_pi, v - self.map_valuation_pi))
    }
}

/// Builds the section for a surjective matrix `s` from a maximal set of
/// independent columns.
pub fn open_mapping_bound(s: &Matrix<PadicScalar>) -> Result<OpenMappingBound, CechError> {
    if s.rows() == 0 || s.cols() == 0 {
        return Err(CechError::DimensionMismatch("empty map".into()));
    }
    let ctx = s.get(0, 0).context();
    let tol = tolerance(ctx);
    let chopped = s.chop(tol);
    let cols = chopped.independent_columns();
    if cols.len() < s.rows() {
        return Err(CechError::NotSurjective);
    }
    let square = Matrix::from_fn(s.rows(), s.rows(), |i, j| s.get(i, cols[j]).clone());
    let inv = square.inverse()?;
    let mut section = Matrix::zeros(ctx, s.cols(), s.rows());
    for (i, &c) in cols.iter().enumerate() {
        for j in 0..s.rows() {
            section.set(c, j, inv.get(i, j).clone());
        }
    }
    Ok(OpenMappingBound {
        map_valuation_pi: s.valuation_floor_pi(),
        section_valuation_pi: section.valuation_floor_pi(),
        section,
    })
}
