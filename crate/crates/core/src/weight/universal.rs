//! The universal character ∏_i (1 + p^w X_i)^{S_i c}, c = p^{2/(p−1) − w},
//! as a truncated series in S_1..S_g, X_1..X_g.

use std::sync::Arc;

use num_rational::Ratio;

use super::{weight_coordinate, Character, WeightError};
use crate::padic::{PadicContext, PadicScalar, TruncatedSeries};

/// Chart of weight space on which characters are w-analytic.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalCharacterChart {
    ctx: PadicContext,
    w: Ratio<i64>,
    g: usize,
    degree: u32,
}

impl UniversalCharacterChart {
    pub fn new(ctx: PadicContext, w: Ratio<i64>, g: usize, degree: u32) -> Result<Self, WeightError> {
        if w <= Ratio::from(0) {
            return Err(WeightError::InvalidCharacter("w must be positive".into()));
        }
        if g == 0 {
            return Err(WeightError::InvalidCharacter("g must be positive".into()));
        }
        let e = ctx.e() as i64;
        let q = ctx.p() as i64 - 1;
        let cexp = Ratio::new(2, q) - w;
        if !(w * e).is_integer() || !(cexp * e).is_integer() {
            return Err(WeightError::UnrepresentableExponent { e: ctx.e() });
        }
        Ok(UniversalCharacterChart { ctx, w, g, degree })
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn w(&self) -> Ratio<i64> {
        self.w
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// π-exponent of p^w.
    fn w_pi(&self) -> i64 {
        (self.w * self.ctx.e() as i64).to_integer()
    }

    /// π-exponent of c = p^{2/(p−1) − w}.
    fn c_pi(&self) -> i64 {
        let q = self.ctx.p() as i64 - 1;
        ((Ratio::new(2, q) - self.w) * self.ctx.e() as i64).to_integer()
    }

    /// Variable names: S_1..S_g then X_1..X_g.
    pub fn variables(&self) -> Arc<Vec<String>> {
        let mut v: Vec<String> = (1..=self.g).map(|i| format!("S{i}")).collect();
        v.extend((1..=self.g).map(|i| format!("X{i}")));
        Arc::new(v)
    }

    /// Lower bound (π-units) for the valuation of X-degree-k coefficients:
    /// e(k+1)/(p−1) for k ≥ 1.
    pub fn coefficient_bound_pi(&self, k: u32) -> i64 {
        if k == 0 {
            return 0;
        }
        (k as i64 + 1) * self.ctx.e() as i64 / (self.ctx.p() as i64 - 1)
    }
}

fn vp_factorial(p: u64, n: u64) -> u64 {
    let mut v = 0;
    let mut q = n / p;
    while q > 0 {
        v += q;
        q /= p;
    }
    v
}

/// Truncated expansion of the universal character on the chart.
///
/// In each factor the coefficient of S^j X^k is p^{wk} c^j s(k, j) / k!
/// with s(k, j) the signed Stirling numbers of the first kind, since
/// C(Sc, k) = Σ_j s(k, j) (Sc)^j / k!.
pub fn universal_character_eval(chart: &UniversalCharacterChart) -> TruncatedSeries {
    let ctx = chart.ctx;
    let d = chart.degree;
    let extra = vp_factorial(ctx.p(), d as u64) as u32 + 2;
    let hi = ctx.elevated_capped(extra);
    let vars = chart.variables();
    let g = chart.g;
    let a = PadicScalar::uniformizer_pow(hi, chart.w_pi());
    let c = PadicScalar::uniformizer_pow(hi, chart.c_pi());
    // Stirling numbers s(k, j), 0 ≤ j ≤ k ≤ d
    let mut stirling: Vec<Vec<PadicScalar>> = vec![vec![PadicScalar::one(hi)]];
    for k in 0..d as usize {
        let prev = &stirling[k];
        let kk = PadicScalar::from_i64(hi, k as i64);
        let mut row = vec![PadicScalar::zero(hi); k + 2];
        for j in 0..=k + 1 {
            let mut v = PadicScalar::zero(hi);
            if j >= 1 && j - 1 <= k {
                v = &v + &prev[j - 1];
            }
            if j <= k {
                v = &v - &(&kk * &prev[j]);
            }
            row[j] = v;
        }
        stirling.push(row);
    }
    let mut result = TruncatedSeries::constant(hi, vars.clone(), d, PadicScalar::one(hi));
    let mut fact = PadicScalar::one(hi);
    let mut factors: Vec<TruncatedSeries> = (0..g)
        .map(|_| TruncatedSeries::constant(hi, vars.clone(), d, PadicScalar::one(hi)))
        .collect();
    for k in 1..=d {
        fact = &fact * &PadicScalar::from_i64(hi, k as i64);
        let ak = a.pow(k as u64);
        for j in 1..=k {
            if j + k > d {
                break;
            }
            let s = &stirling[k as usize][j as usize];
            if s.is_zero() {
                continue;
            }
            let coef = (&(&ak * &c.pow(j as u64)) * s).checked_div(&fact).expect("k! is nonzero");
            for (i, f) in factors.iter_mut().enumerate() {
                let mut exp = vec![0u32; 2 * g];
                exp[i] = j;
                exp[g + i] = k;
                f.add_term(exp, &coef);
            }
        }
    }
    for f in &factors {
        result = result.checked_mul(f).expect("same ring");
    }
    result.map_coefficients(ctx, |x| x.reduce(ctx))
}

/// The universal character with the weight coordinates of one character
/// substituted for S, as a series in X_1..X_g.
#[derive(Debug, Clone)]
pub struct SpecializedCharacter {
    pub series: TruncatedSeries,
    /// Precision (π-units) to which evaluation at integral X is certified.
    pub certified_pi: i64,
    pub w: Ratio<i64>,
}

impl SpecializedCharacter {
    /// Value at integral X, truncated to the certified precision.
    pub fn eval(&self, x: &[PadicScalar]) -> Result<PadicScalar, WeightError> {
        for xi in x {
            if xi.valuation_floor_pi() < 0 {
                return Err(WeightError::InvalidCharacter("evaluation point outside the unit polydisc".into()));
            }
        }
        Ok(self.series.eval(x)?.truncate(self.certified_pi))
    }

    /// The torus point 1 + p^w x_i corresponding to `x`.
    pub fn torus_point(&self, x: &[PadicScalar]) -> Vec<PadicScalar> {
        let ctx = self.series.context();
        let pw = PadicScalar::uniformizer_pow(ctx, (self.w * ctx.e() as i64).to_integer());
        x.iter().map(|xi| &PadicScalar::one(ctx) + &(&pw * xi)).collect()
    }
}

/// Substitute S_i = b_i / c with b_i = log s_i / log(1+p). Only X-degrees
/// whose expansion is complete within the truncation are kept; the
/// dropped tail has valuation at least (⌊D/2⌋ + 2)/(p − 1).
pub fn specialize_universal(
    series: &TruncatedSeries,
    kappa: &Character,
    chart: &UniversalCharacterChart,
) -> Result<SpecializedCharacter, WeightError> {
    let ctx = chart.ctx;
    if kappa.context() != ctx || series.context() != ctx {
        return Err(crate::padic::PadicError::ContextMismatch.into());
    }
    if kappa.g() != chart.g || series.nvars() != 2 * chart.g {
        return Err(WeightError::InvalidCharacter("genus does not match the chart".into()));
    }
    let c = PadicScalar::uniformizer_pow(ctx, chart.c_pi());
    let mut svals = Vec::with_capacity(chart.g);
    for (i, s) in kappa.s().iter().enumerate() {
        let b = weight_coordinate(s)?;
        let si = b.checked_div(&c)?;
        if si.valuation_floor_pi() < 0 {
            return Err(WeightError::NotWAnalytic(format!(
                "weight coordinate S_{} has negative valuation for w = {}",
                i + 1,
                chart.w
            )));
        }
        svals.push(si);
    }
    let which: Vec<usize> = (0..chart.g).collect();
    let spec = series.specialize(&which, &svals)?;
    let keep = chart.degree / 2;
    let mut trimmed = spec.zero_like();
    for (k, v) in spec.terms() {
        if k.iter().sum::<u32>() <= keep {
            trimmed.set(k.clone(), v.clone());
        }
    }
    let certified_pi = chart.coefficient_bound_pi(keep + 1).min(ctx.cap());
    Ok(SpecializedCharacter { series: trimmed, certified_pi, w: chart.w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::eval_character;

    fn chart(d: u32) -> UniversalCharacterChart {
        let c = PadicContext::new(5, 8, 10).unwrap();
        UniversalCharacterChart::new(c, Ratio::from(1), 1, d).unwrap()
    }

    #[test]
    fn constant_term_and_bound() {
        let ch = chart(12);
        let f = universal_character_eval(&ch);
        assert_eq!(f.constant_term(), PadicScalar::one(ch.context()));
        for (k, v) in f.terms() {
            let xdeg = k[1];
            if xdeg == 0 {
                continue;
            }
            if let Some(val) = v.valuation_pi() {
                assert!(val >= ch.coefficient_bound_pi(xdeg), "{k:?}: {v}");
            }
        }
    }

    #[test]
    fn rejects_unrepresentable_exponent() {
        let c = PadicContext::new(5, 1, 10).unwrap();
        assert!(matches!(
            UniversalCharacterChart::new(c, Ratio::from(1), 1, 6),
            Err(WeightError::UnrepresentableExponent { .. })
        ));
    }

    #[test]
    fn integer_exponent_two() {
        let ch = chart(10);
        let c = ch.context();
        let f = universal_character_eval(&ch);
        let cval = PadicScalar::uniformizer_pow(c, ch.c_pi());
        let s = PadicScalar::from_i64(c, 2).checked_div(&cval).unwrap();
        let g = f.specialize(&[0], &[s]).unwrap();
        // (1 + pX)^2 = 1 + 2pX + p^2 X^2 on the complete range k ≤ D/2
        assert_eq!(g.coeff(&[0]), PadicScalar::one(c));
        assert_eq!(g.coeff(&[1]), PadicScalar::from_i64(c, 10));
        assert_eq!(g.coeff(&[2]), PadicScalar::from_i64(c, 25));
        for k in 3..=5 {
            assert!(g.coeff(&[k]).is_zero(), "k = {k}");
        }
    }

    #[test]
    fn pairing_recovers_character() {
        let ch = chart(16);
        let c = ch.context();
        let f = universal_character_eval(&ch);
        let s = &PadicScalar::one(c) + &PadicScalar::from_i64(c, 5 * 3);
        let kappa = Character::new(c, vec![2], vec![s]).unwrap();
        let spec = specialize_universal(&f, &kappa, &ch).unwrap();
        for x in [0i64, 1, 2, 7, -3] {
            let xs = [PadicScalar::from_i64(c, x)];
            let t = spec.torus_point(&xs);
            let want = eval_character(&kappa, &t).unwrap();
            assert_eq!(spec.eval(&xs).unwrap(), want.truncate(spec.certified_pi));
        }
    }
}
