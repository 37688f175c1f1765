//! Glueing free modules on the two charts of the Laurent cover along a
//! transition matrix on the overlap.
//!
//! The transition `G` (sending plus-frame coordinates to minus-frame
//! coordinates on the overlap) is factored as `G = N·P` with `N` invertible
//! over the minus chart and `P` invertible over the plus chart, by repeatedly
//! splitting `G − 1`. Global sections are then `w ∈ A^n`, restricting to
//! `u = P⁻¹w` on the plus chart and `v = N·w` on the minus chart.

use serde::{Deserialize, Serialize};

use super::check::norm_bound;
use super::{laurent_split, CechError, Chart, ChartElement, LocalizedModule};
use crate::padic::{Matrix, PadicContext, PadicScalar, GUARD_DIGITS};
use crate::spectral::BanachModuleModel;

const MAX_ROUNDS: usize = 64;

type ChartMatrix = Vec<Vec<ChartElement>>;

fn identity(ctx: PadicContext, chart: Chart, n: usize) -> ChartMatrix {
    (0..n)
        .map(|i| {
            (0..n).map(|j| if i == j { ChartElement::one(ctx, chart) } else { ChartElement::zero(ctx, chart) }).collect()
        })
        .collect()
}

fn mat_mul(a: &ChartMatrix, b: &ChartMatrix) -> Result<ChartMatrix, CechError> {
    let n = a.len();
    let m = b[0].len();
    let mut out = Vec::with_capacity(n);
    for row in a {
        let mut out_row = Vec::with_capacity(m);
        for j in 0..m {
            let mut acc = ChartElement::zero(row[0].context(), row[0].chart());
            for (k, x) in row.iter().enumerate() {
                if x.is_zero() || b[k][j].is_zero() {
                    continue;
                }
                acc = acc.checked_add(&x.checked_mul(&b[k][j])?)?;
            }
            out_row.push(acc);
        }
        out.push(out_row);
    }
    Ok(out)
}

fn mat_sub(a: &ChartMatrix, b: &ChartMatrix) -> Result<ChartMatrix, CechError> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.checked_sub(y)).collect())
        .collect()
}

fn mat_valuation(a: &ChartMatrix) -> Option<i64> {
    a.iter().flatten().filter_map(|x| x.valuation_pi()).min()
}

fn constant_term(a: &ChartMatrix) -> Matrix<PadicScalar> {
    Matrix::from_fn(a.len(), a[0].len(), |i, j| a[i][j].coeff(0))
}

fn scalar_times(s: &Matrix<PadicScalar>, a: &ChartMatrix) -> Result<ChartMatrix, CechError> {
    let ctx = a[0][0].context();
    let chart = a[0][0].chart();
    let lifted: ChartMatrix = (0..s.rows())
        .map(|i| (0..s.cols()).map(|j| ChartElement::constant(ctx, chart, s.get(i, j).clone())).collect())
        .collect();
    mat_mul(&lifted, a)
}

/// `(1 + h)⁻¹` by the Neumann series, for `|h| < 1`.
fn one_plus_inverse(h: &ChartMatrix) -> Result<ChartMatrix, CechError> {
    let ctx = h[0][0].context();
    let chart = h[0][0].chart();
    let n = h.len();
    let minus_h: ChartMatrix = h.iter().map(|r| r.iter().map(|x| x.neg()).collect()).collect();
    let mut sum = identity(ctx, chart, n);
    let mut term = identity(ctx, chart, n);
    for _ in 0..=ctx.cap() {
        term = mat_mul(&term, &minus_h)?;
        if mat_valuation(&term).is_none() {
            return Ok(sum);
        }
        sum = sum.iter().zip(&term).map(|(r, t)| r.iter().zip(t).map(|(x, y)| x.checked_add(y)).collect()).collect::<Result<_, _>>()?;
    }
    Err(CechError::PrecisionExhausted { rounds: ctx.cap() as usize })
}

/// Determinant by expansion over column subsets.
fn determinant(a: &ChartMatrix) -> Result<ChartElement, CechError> {
    let n = a.len();
    if n > 16 {
        return Err(CechError::DimensionMismatch(format!("transition of rank {n} is too large")));
    }
    let ctx = a[0][0].context();
    let mut dp: Vec<Option<ChartElement>> = vec![None; 1 << n];
    dp[0] = Some(ChartElement::one(ctx, Chart::Both));
    for mask in 0usize..(1 << n) {
        let Some(cur) = dp[mask].take() else { continue };
        let r = mask.count_ones() as usize;
        if r == n {
            dp[mask] = Some(cur);
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) != 0 || a[r][j].is_zero() {
                continue;
            }
            let above = (mask >> (j + 1)).count_ones();
            let mut t = cur.checked_mul(&a[r][j])?;
            if above % 2 == 1 {
                t = t.neg();
            }
            let next = mask | (1 << j);
            dp[next] = Some(match dp[next].take() {
                Some(acc) => acc.checked_add(&t)?,
                None => t,
            });
        }
        dp[mask] = Some(cur);
    }
    Ok(dp[(1 << n) - 1].clone().unwrap_or_else(|| ChartElement::zero(ctx, Chart::Both)))
}

/// Global sections of the glued module together with the frames that
/// realize them on each chart.
#[derive(Debug, Clone)]
pub struct GluedModule {
    pub module: BanachModuleModel,
    /// `P⁻¹` over the plus chart: column `j` is the `j`-th global basis
    /// section in plus-frame coordinates.
    pub plus_frame: Vec<Vec<ChartElement>>,
    /// `N` over the minus chart: the same sections in minus-frame
    /// coordinates.
    pub minus_frame: Vec<Vec<ChartElement>>,
    pub rounds: usize,
    /// Smallest per-round gain in the valuation of `G − 1` (π-units);
    /// `None` if no round was needed.
    pub contraction_pi: Option<i64>,
    /// Valuation of `G·P⁻¹ − N` on the overlap (`None` = zero).
    pub round_trip_defect_pi: Option<i64>,
    /// Rank of the relocalized sections on each chart.
    pub plus_rank: usize,
    pub minus_rank: usize,
}

/// Serialized summary of a glueing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueRecord {
    pub rank: usize,
    pub rounds: usize,
    pub contraction_pi: Option<i64>,
    pub round_trip_defect_pi: Option<i64>,
    pub round_trip_defect_norm: f64,
    pub plus_rank: usize,
    pub minus_rank: usize,
}

impl GluedModule {
    pub fn to_record(&self, ctx: PadicContext) -> GlueRecord {
        GlueRecord {
            rank: self.module.rank(),
            rounds: self.rounds,
            contraction_pi: self.contraction_pi,
            round_trip_defect_pi: self.round_trip_defect_pi,
            round_trip_defect_norm: norm_bound(ctx, self.round_trip_defect_pi),
            plus_rank: self.plus_rank,
            minus_rank: self.minus_rank,
        }
    }
}

/// Glues free modules on the plus and minus charts along the overlap
/// transition `transition` (an `n × n` matrix of overlap elements).
pub fn kiehl_glue(
    plus: &LocalizedModule,
    minus: &LocalizedModule,
    transition: &[Vec<ChartElement>],
) -> Result<GluedModule, CechError> {
    if plus.chart() != Chart::Plus || minus.chart() != Chart::Minus {
        return Err(CechError::UnsupportedChart(format!("glueing {} with {}", plus.chart(), minus.chart())));
    }
    if plus.base() != minus.base() {
        return Err(CechError::UnsupportedChart("modules over different bases".into()));
    }
    let n = plus.rank();
    if n == 0 || minus.rank() != n || transition.len() != n || transition.iter().any(|r| r.len() != n) {
        return Err(CechError::DimensionMismatch("transition shape does not match the module ranks".into()));
    }
    if transition.iter().flatten().any(|x| x.chart() != Chart::Both) {
        return Err(CechError::UnsupportedChart("transition entries must live on the overlap".into()));
    }
    let base = plus.base();
    let ctx = base.context();
    let tol = ctx.cap() - GUARD_DIGITS as i64 * ctx.e() as i64;
    let g: ChartMatrix = transition.to_vec();

    if mat_valuation(&g).map_or(false, |v| v < 0) {
        return Err(CechError::NonInvertibleTransition("entries exceed the unit ball".into()));
    }
    // A Laurent series is a unit exactly when its reduction is a monomial.
    let det = determinant(&g)?;
    let unit_terms = det.terms().filter(|(_, c)| c.valuation_pi() == Some(0)).count();
    if det.valuation_pi() != Some(0) || unit_terms != 1 {
        return Err(CechError::NonInvertibleTransition(format!("determinant {det} is not a unit")));
    }

    let g0 = constant_term(&g);
    let g0_inv = g0.inverse().map_err(|_| CechError::NonContractingTransition)?;
    if g0_inv.valuation_floor_pi() < 0 {
        return Err(CechError::NonContractingTransition);
    }
    let mut r = scalar_times(&g0_inv, &g)?;
    let one = identity(ctx, Chart::Both, n);
    let mut h = mat_sub(&r, &one)?;
    let mut v = mat_valuation(&h);
    if v.map_or(false, |v| v < 1) {
        return Err(CechError::NonContractingTransition);
    }

    let mut n_acc: ChartMatrix =
        (0..n).map(|i| (0..n).map(|j| ChartElement::constant(ctx, Chart::Both, g0.get(i, j).clone())).collect()).collect();
    let mut p_inv = identity(ctx, Chart::Both, n);
    let mut rounds = 0;
    let mut contraction: Option<i64> = None;
    while let Some(vh) = v.filter(|&x| x < tol) {
        rounds += 1;
        if rounds > MAX_ROUNDS {
            return Err(CechError::PrecisionExhausted { rounds });
        }
        let mut hp = Vec::with_capacity(n);
        let mut hm = Vec::with_capacity(n);
        for row in &h {
            let mut rp = Vec::with_capacity(n);
            let mut rm = Vec::with_capacity(n);
            for x in row {
                let (a, b) = laurent_split(x)?;
                rp.push(a.restrict(Chart::Both)?);
                rm.push(b.restrict(Chart::Both)?.neg());
            }
            hp.push(rp);
            hm.push(rm);
        }
        let one_hm = mat_sub(&one, &hm.iter().map(|r| r.iter().map(|x| x.neg()).collect()).collect())?;
        let inv_hp = one_plus_inverse(&hp)?;
        let inv_hm = one_plus_inverse(&hm)?;
        n_acc = mat_mul(&n_acc, &one_hm)?;
        p_inv = mat_mul(&p_inv, &inv_hp)?;
        r = mat_mul(&mat_mul(&inv_hm, &r)?, &inv_hp)?;
        h = mat_sub(&r, &one)?;
        let v_new = mat_valuation(&h);
        let gain = v_new.unwrap_or(ctx.cap()) - vh;
        if gain <= 0 {
            return Err(CechError::PrecisionExhausted { rounds });
        }
        contraction = Some(contraction.map_or(gain, |c: i64| c.min(gain)));
        v = v_new;
    }

    let defect = mat_valuation(&mat_sub(&mat_mul(&g, &p_inv)?, &n_acc)?);
    if defect.map_or(false, |d| d < tol) {
        return Err(CechError::PrecisionExhausted { rounds });
    }
    let plus_frame: ChartMatrix =
        p_inv.iter().map(|r| r.iter().map(|x| x.descend(Chart::Plus)).collect()).collect::<Result<_, _>>()?;
    let minus_frame: ChartMatrix =
        n_acc.iter().map(|r| r.iter().map(|x| x.descend(Chart::Minus)).collect()).collect::<Result<_, _>>()?;
    let plus_rank = constant_term(&plus_frame).chop(tol).rank();
    let minus_rank = constant_term(&minus_frame).chop(tol).rank();
    let module = BanachModuleModel::orthonormal(base.base_ring(), (0..n).map(|i| format!("h{i}")).collect());
    Ok(GluedModule {
        module,
        plus_frame,
        minus_frame,
        rounds,
        contraction_pi: contraction,
        round_trip_defect_pi: defect,
        plus_rank,
        minus_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{completed_localization, AffinoidModel};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (LocalizedModule, LocalizedModule, PadicContext) {
        let ctx = PadicContext::new(5, 1, 20).unwrap();
        let base = AffinoidModel::new(ctx, 8).unwrap();
        let m = BanachModuleModel::orthonormal(base.base_ring(), (0..n).map(|i| format!("e{i}")).collect());
        (
            completed_localization(&m, &base, Chart::Plus).unwrap(),
            completed_localization(&m, &base, Chart::Minus).unwrap(),
            ctx,
        )
    }

    fn el(ctx: PadicContext, terms: &[(i64, i64)]) -> ChartElement {
        ChartElement::from_i64_terms(ctx, Chart::Both, terms).unwrap()
    }

    #[test]
    fn identity_transition() {
        let (p, m, ctx) = setup(2);
        let g = identity(ctx, Chart::Both, 2);
        let out = kiehl_glue(&p, &m, &g).unwrap();
        assert_eq!(out.rounds, 0);
        assert_eq!(out.module.rank(), 2);
        assert_eq!((out.plus_rank, out.minus_rank), (2, 2));
        assert_eq!(out.round_trip_defect_pi, None);
    }

    #[test]
    fn one_unit_diagonal() {
        let (p, m, ctx) = setup(2);
        let u = el(ctx, &[(0, 1), (1, 5), (-2, 5), (-1, 25)]);
        let g = vec![vec![el(ctx, &[(0, 1)]), el(ctx, &[])], vec![el(ctx, &[]), u]];
        let out = kiehl_glue(&p, &m, &g).unwrap();
        assert_eq!(out.module.rank(), 2);
        assert_eq!((out.plus_rank, out.minus_rank), (2, 2));
        assert!(out.round_trip_defect_pi.map_or(true, |d| d >= 16));
        assert!(out.contraction_pi.unwrap() >= 1);
    }

    #[test]
    fn non_unit_determinant() {
        let (p, m, ctx) = setup(2);
        let g = vec![vec![el(ctx, &[(0, 1)]), el(ctx, &[])], vec![el(ctx, &[]), el(ctx, &[(0, 5)])]];
        assert!(matches!(kiehl_glue(&p, &m, &g), Err(CechError::NonInvertibleTransition(_))));
        let g = vec![vec![el(ctx, &[(0, 1)]), el(ctx, &[])], vec![el(ctx, &[]), el(ctx, &[(0, 1), (1, 1)])]];
        assert!(matches!(kiehl_glue(&p, &m, &g), Err(CechError::NonInvertibleTransition(_))));
    }

    #[test]
    fn monomial_unit_is_out_of_range() {
        let (p, m, ctx) = setup(1);
        let g = vec![vec![el(ctx, &[(1, 1)])]];
        assert!(matches!(kiehl_glue(&p, &m, &g), Err(CechError::NonContractingTransition)));
    }

    #[test]
    fn random_transitions_contract() {
        let (p, m, ctx) = setup(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let g: ChartMatrix = (0..3)
                .map(|i| {
                    (0..3)
                        .map(|j| {
                            let mut terms: Vec<(i64, i64)> =
                                (-3..=3).map(|k| (k, 5 * rng.gen_range(-3..4))).collect();
                            if i == j {
                                terms.push((0, rng.gen_range(1..5)));
                            }
                            el(ctx, &terms)
                        })
                        .collect()
                })
                .collect();
            let out = kiehl_glue(&p, &m, &g).unwrap();
            assert_eq!((out.plus_rank, out.minus_rank), (3, 3));
            assert!(out.contraction_pi.unwrap() >= 1);
            assert!(out.round_trip_defect_pi.map_or(true, |d| d >= 16));
        }
    }
}
