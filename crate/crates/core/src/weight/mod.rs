//! Weight space: continuous characters of the diagonal torus T(ℤ_p) of
//! GL_g, presented as a character of T(ℤ/pℤ) (exponents on Teichmüller
//! lifts) together with g one-unit parameters s_i = κ(1, …, 1+p, …, 1).

mod universal;

pub use universal::{specialize_universal, universal_character_eval, SpecializedCharacter, UniversalCharacterChart};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{
    exp_small, log_one_unit, one_unit_pow, teichmuller_decompose, PadicContext, PadicError,
    PadicScalar, ScalarRecord,
};
use crate::ErrorClass;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("torus coordinate {0} is not a unit")]
    NonUnitArgument(usize),
    #[error("character is not analytic on the requested chart: {0}")]
    NotWAnalytic(String),
    #[error("exponent constant p^(2/(p-1) - w) is not representable with e = {e}")]
    UnrepresentableExponent { e: u32 },
    #[error("invalid character: {0}")]
    InvalidCharacter(String),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

impl WeightError {
    pub fn class(&self) -> ErrorClass {
        match self {
            WeightError::Padic(e) => e.class(),
            _ => ErrorClass::Validation,
        }
    }
}

/// A point of weight space.
#[derive(Clone, Debug, PartialEq)]
pub struct Character {
    ctx: PadicContext,
    chi: Vec<i64>,
    s: Vec<PadicScalar>,
    algebraic: Option<Vec<i64>>,
}

/// Serialized character.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterRecord {
    pub p: u64,
    pub e: u32,
    pub g: usize,
    pub chi: Vec<i64>,
    pub s: Vec<ScalarRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub algebraic: Option<Vec<i64>>,
}

impl Character {
    /// Character with finite part `chi` (exponents mod p−1) and one-unit
    /// parameters `s`.
    pub fn new(ctx: PadicContext, chi: Vec<i64>, s: Vec<PadicScalar>) -> Result<Self, WeightError> {
        if chi.len() != s.len() || chi.is_empty() {
            return Err(WeightError::InvalidCharacter("chi and s must have the same positive length".into()));
        }
        let one = PadicScalar::one(ctx);
        for (i, si) in s.iter().enumerate() {
            if si.context() != ctx {
                return Err(PadicError::ContextMismatch.into());
            }
            if (si - &one).valuation_floor_pi() <= 0 {
                return Err(WeightError::InvalidCharacter(format!("s_{} is not a 1-unit", i + 1)));
            }
        }
        let q = ctx.p() as i64 - 1;
        let chi = chi.into_iter().map(|c| c.rem_euclid(q)).collect();
        Ok(Character { ctx, chi, s, algebraic: None })
    }

    /// The algebraic character t ↦ ∏ t_i^{k_i}.
    pub fn algebraic(ctx: PadicContext, k: &[i64]) -> Result<Self, WeightError> {
        if k.is_empty() {
            return Err(WeightError::InvalidCharacter("empty weight".into()));
        }
        let gen = PadicScalar::from_i64(ctx, 1 + ctx.p() as i64);
        let s = k.iter().map(|&ki| gen.powi(ki)).collect::<Result<Vec<_>, _>>()?;
        let mut c = Self::new(ctx, k.to_vec(), s)?;
        c.algebraic = Some(k.to_vec());
        Ok(c)
    }

    pub fn trivial(ctx: PadicContext, g: usize) -> Self {
        Self::algebraic(ctx, &vec![0; g]).expect("trivial character")
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn g(&self) -> usize {
        self.s.len()
    }

    pub fn chi(&self) -> &[i64] {
        &self.chi
    }

    pub fn s(&self) -> &[PadicScalar] {
        &self.s
    }

    pub fn algebraic_weight(&self) -> Option<&[i64]> {
        self.algebraic.as_deref()
    }

    /// Algebraic with k_1 ≥ … ≥ k_g.
    pub fn is_dominant(&self) -> bool {
        self.algebraic.as_ref().is_some_and(|k| k.windows(2).all(|w| w[0] >= w[1]))
    }

    /// Pairing with the coroot of α_i = e_i − e_{i+1} (1-based `i`), when
    /// the weight is algebraic.
    pub fn pairing(&self, i: usize) -> Option<i64> {
        let k = self.algebraic.as_ref()?;
        (i >= 1 && i < k.len()).then(|| k[i - 1] - k[i])
    }

    /// Product with the algebraic character `k`.
    pub fn twist(&self, k: &[i64]) -> Result<Self, WeightError> {
        if k.len() != self.g() {
            return Err(WeightError::InvalidCharacter(format!("expected {} exponents", self.g())));
        }
        let other = Self::algebraic(self.ctx, k)?;
        let q = self.ctx.p() as i64 - 1;
        Ok(Character {
            ctx: self.ctx,
            chi: self.chi.iter().zip(k).map(|(c, ki)| (c + ki).rem_euclid(q)).collect(),
            s: self.s.iter().zip(&other.s).map(|(a, b)| a * b).collect(),
            algebraic: self
                .algebraic
                .as_ref()
                .map(|a| a.iter().zip(k).map(|(x, y)| x + y).collect()),
        })
    }

    pub fn to_record(&self) -> CharacterRecord {
        CharacterRecord {
            p: self.ctx.p(),
            e: self.ctx.e(),
            g: self.g(),
            chi: self.chi.clone(),
            s: self.s.iter().map(|x| x.to_record()).collect(),
            algebraic: self.algebraic.clone(),
        }
    }

    pub fn from_record(ctx: PadicContext, rec: &CharacterRecord) -> Result<Self, WeightError> {
        if let Some(k) = &rec.algebraic {
            return Self::algebraic(ctx, k);
        }
        let s = rec.s.iter().map(|r| PadicScalar::from_record(ctx, r)).collect::<Result<Vec<_>, _>>()?;
        Self::new(ctx, rec.chi.clone(), s)
    }
}

/// log(x) / log(1+p) for a 1-unit `x`, computed with two extra digits.
pub fn weight_coordinate(x: &PadicScalar) -> Result<PadicScalar, PadicError> {
    let ctx = x.context();
    let hi = ctx.elevated_capped(2);
    let xh = x.lift(hi);
    let gen = PadicScalar::from_i64(hi, 1 + ctx.p() as i64);
    let b = log_one_unit(&xh)?.checked_div(&log_one_unit(&gen)?)?;
    Ok(b.reduce(ctx))
}

/// `s^b` for a 1-unit `s` and `b ∈ K`: digit expansion when `b ∈ ℤ_p`,
/// otherwise exp(b·log s) where that converges.
pub fn one_unit_pow_general(s: &PadicScalar, b: &PadicScalar) -> Result<PadicScalar, PadicError> {
    if b.valuation_floor_pi() >= 0 && b.is_in_zp() {
        return one_unit_pow(s, b);
    }
    let y = b * &log_one_unit(s)?;
    exp_small(&y)
}

/// κ(t) = χ(λ) · ∏ s_i^{log x_i / log(1+p)} where t_i = λ_i x_i splits into a
/// Teichmüller lift and a 1-unit.
pub fn eval_character(kappa: &Character, t: &[PadicScalar]) -> Result<PadicScalar, WeightError> {
    if t.len() != kappa.g() {
        return Err(WeightError::InvalidCharacter(format!("expected {} torus coordinates", kappa.g())));
    }
    let ctx = kappa.ctx;
    let mut acc = PadicScalar::one(ctx);
    for (i, ti) in t.iter().enumerate() {
        if ti.context() != ctx {
            return Err(PadicError::ContextMismatch.into());
        }
        if !ti.is_unit() {
            return Err(WeightError::NonUnitArgument(i + 1));
        }
        let (_, omega, x) = teichmuller_decompose(ti)?;
        if kappa.chi[i] != 0 {
            acc = &acc * &omega.pow(kappa.chi[i] as u64);
        }
        let b = weight_coordinate(&x)?;
        acc = &acc * &one_unit_pow_general(&kappa.s[i], &b)?;
    }
    Ok(acc)
}

/// κ′ = (−k_g, …, −k_1): χ′_i = −χ_{g+1−i}, s′_i = s_{g+1−i}^{-1}.
pub fn involution(kappa: &Character) -> Character {
    let g = kappa.g();
    let q = kappa.ctx.p() as i64 - 1;
    let chi = (0..g).map(|i| (-kappa.chi[g - 1 - i]).rem_euclid(q)).collect();
    let s = (0..g).map(|i| kappa.s[g - 1 - i].inverse().expect("1-units are invertible")).collect();
    let algebraic = kappa.algebraic.as_ref().map(|k| (0..g).map(|i| -k[g - 1 - i]).collect());
    Character { ctx: kappa.ctx, chi, s, algebraic }
}

/// Least w on the grid (1/e)ℤ_{>0} for which the expansion of
/// (1 + p^w y)^{b_i}, b_i = log s_i / log(1+p), has coefficients of
/// nonnegative valuation that keep decreasing in norm up to degree 2m.
pub fn analyticity_radius(kappa: &Character) -> Ratio<i64> {
    analyticity_radius_with(kappa, 2 * kappa.ctx.prec() as usize)
}

/// As [`analyticity_radius`] with an explicit scan degree `d`.
pub fn analyticity_radius_with(kappa: &Character, d: usize) -> Ratio<i64> {
    let ctx = kappa.ctx;
    let e = ctx.e() as i64;
    let mut best = 1i64;
    for s in &kappa.s {
        let Ok(b) = weight_coordinate(s) else { continue };
        best = best.max(radius_for_exponent(&b, d, ctx));
    }
    Ratio::new(best, e)
}

/// Grid index j (w = j/e) for one exponent.
fn radius_for_exponent(b: &PadicScalar, d: usize, ctx: PadicContext) -> i64 {
    let e = ctx.e() as i64;
    let p = ctx.p();
    let d = d.max(2);
    // v(C(b, n)) in π-units for n = 1..d
    let mut vbin = Vec::with_capacity(d);
    let mut acc = 0i64;
    let mut fact_v = 0i64;
    for n in 1..=d {
        let diff = b - &PadicScalar::from_i64(ctx, n as i64 - 1);
        if diff.is_zero() {
            // b is a nonnegative integer: the expansion is a polynomial
            return 1;
        }
        acc += diff.valuation_floor_pi();
        let mut m = n as u64;
        while m % p == 0 {
            fact_v += e;
            m /= p;
        }
        vbin.push(acc - fact_v);
    }
    let cut = (d as u64 / p).max(1) as usize;
    let max_j = e * (ctx.prec() as i64 + 2);
    for j in 1..=max_j {
        let nu: Vec<i64> = vbin.iter().enumerate().map(|(i, v)| v + (i as i64 + 1) * j).collect();
        if nu.iter().any(|&x| x < 0) {
            continue;
        }
        let head = nu[..cut].iter().min().copied().unwrap_or(0);
        let tail = nu[cut..].iter().min().copied().unwrap_or(i64::MAX);
        if tail > head {
            return j;
        }
    }
    max_j
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PadicContext {
        PadicContext::new(5, 1, 10).unwrap()
    }

    #[test]
    fn algebraic_evaluation() {
        let c = ctx();
        let k = Character::algebraic(c, &[2, 1]).unwrap();
        let t = [PadicScalar::from_i64(c, 6), PadicScalar::one(c)];
        assert_eq!(eval_character(&k, &t).unwrap(), PadicScalar::from_i64(c, 36));
        let one = [PadicScalar::one(c), PadicScalar::one(c)];
        assert_eq!(eval_character(&k, &one).unwrap(), PadicScalar::one(c));
    }

    #[test]
    fn finite_part_uses_teichmuller() {
        let c = ctx();
        let k = Character::new(c, vec![1, 0], vec![PadicScalar::one(c), PadicScalar::one(c)]).unwrap();
        let t = [PadicScalar::from_i64(c, 2), PadicScalar::one(c)];
        let v = eval_character(&k, &t).unwrap();
        assert_eq!(v, crate::padic::teichmuller(c, 2).unwrap());
        assert_eq!(v.to_u128_mod_p_pow(2).unwrap(), 7);
    }

    #[test]
    fn generators_return_parameters() {
        let c = PadicContext::new(7, 2, 8).unwrap();
        let s1 = &PadicScalar::one(c) + &PadicScalar::from_i64(c, 14);
        let s2 = &PadicScalar::one(c) + &PadicScalar::uniformizer_pow(c, 1);
        let k = Character::new(c, vec![3, 1], vec![s1.clone(), s2.clone()]).unwrap();
        let gen = PadicScalar::from_i64(c, 8);
        let one = PadicScalar::one(c);
        assert_eq!(eval_character(&k, &[gen.clone(), one.clone()]).unwrap(), s1);
        assert_eq!(eval_character(&k, &[one, gen]).unwrap(), s2);
    }

    #[test]
    fn involution_formula() {
        let c = ctx();
        let k = Character::algebraic(c, &[3, 1]).unwrap();
        let kp = involution(&k);
        assert_eq!(kp.algebraic_weight(), Some(&[-1, -3][..]));
        assert_eq!(kp, Character::algebraic(c, &[-1, -3]).unwrap());
        assert_eq!(involution(&kp), k);
        assert!(kp.is_dominant());
        let t = Character::trivial(c, 3);
        assert_eq!(involution(&t), t);
    }

    #[test]
    fn non_unit_rejected() {
        let c = ctx();
        let k = Character::algebraic(c, &[1]).unwrap();
        assert!(matches!(
            eval_character(&k, &[PadicScalar::from_i64(c, 5)]),
            Err(WeightError::NonUnitArgument(1))
        ));
    }

    #[test]
    fn radius_grows_with_smaller_s_valuation() {
        let c = PadicContext::new(5, 8, 10).unwrap();
        let one = PadicScalar::one(c);
        let alg = Character::algebraic(c, &[4, 2]).unwrap();
        assert_eq!(analyticity_radius(&alg), Ratio::new(1, 8));
        let s1 = &one + &PadicScalar::from_i64(c, 5);
        let k1 = Character::new(c, vec![0, 0], vec![s1, one.clone()]).unwrap();
        let w1 = analyticity_radius(&k1);
        assert!(w1 <= Ratio::from(1));
        let s2 = &one + &PadicScalar::uniformizer_pow(c, 4);
        let k2 = Character::new(c, vec![0, 0], vec![s2, one]).unwrap();
        let w2 = analyticity_radius(&k2);
        assert!(w2 > w1, "{w2} vs {w1}");
        assert_eq!(w2, Ratio::new(7, 8));
    }

    #[test]
    fn record_round_trip() {
        let c = ctx();
        let k = Character::new(c, vec![2, 1], vec![PadicScalar::from_i64(c, 26), PadicScalar::from_i64(c, 11)]).unwrap();
        assert_eq!(Character::from_record(c, &k.to_record()).unwrap(), k);
    }
}
