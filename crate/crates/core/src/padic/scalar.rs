//! Scalars of a totally ramified extension K/ℚ_p at capped absolute precision.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::context::PadicContext;
use super::residue::{self, Coeffs};
use super::PadicError;

/// An element x = π^val · u of K, known modulo π^abs.
///
/// The unit `u` is stored as `e` coefficients in ℤ/p^work with `u` reduced
/// modulo π^(abs − val), so two scalars with the same value and precision
/// have identical representations. A scalar that is zero to its precision
/// has `val == abs` and an empty unit.
#[derive(Clone)]
pub struct PadicScalar {
    ctx: PadicContext,
    val: i64,
    abs: i64,
    unit: Coeffs,
}

/// Binary operation selector for [`PadicScalar::arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl PadicScalar {
    fn from_raw(ctx: PadicContext, base: i64, abs: i64, raw: Coeffs) -> Self {
        let abs = abs.min(ctx.cap()).min(base.saturating_add(ctx.rel_cap()));
        let k = residue::vec_valuation(&ctx, &raw);
        let val = base.saturating_add(k);
        if val >= abs {
            return Self::zero_with_precision(ctx, abs);
        }
        let mut unit = if k == 0 { raw } else { residue::shift_down(&ctx, &raw, k) };
        let rel = (abs - val).min(ctx.rel_cap());
        residue::mask(&ctx, &mut unit, rel);
        PadicScalar { ctx, val, abs: val + rel, unit }
    }

    /// Zero known modulo π^abs (capped).
    pub fn zero_with_precision(ctx: PadicContext, abs: i64) -> Self {
        let abs = abs.min(ctx.cap());
        PadicScalar { ctx, val: abs, abs, unit: SmallVec::new() }
    }

    pub fn zero(ctx: PadicContext) -> Self {
        Self::zero_with_precision(ctx, ctx.cap())
    }

    pub fn one(ctx: PadicContext) -> Self {
        Self::from_i64(ctx, 1)
    }

    pub fn from_i64(ctx: PadicContext, n: i64) -> Self {
        let m = ctx.modulus();
        let r = if n >= 0 {
            (n as u128) % m
        } else {
            let a = (n.unsigned_abs() as u128) % m;
            if a == 0 {
                0
            } else {
                m - a
            }
        };
        let mut raw: Coeffs = SmallVec::from_elem(0, ctx.e() as usize);
        raw[0] = r;
        Self::from_raw(ctx, 0, ctx.cap(), raw)
    }

    /// Element of ℤ_p given by its residue mod p^work.
    pub(crate) fn from_zp_residue(ctx: PadicContext, r: u128) -> Self {
        let mut raw: Coeffs = SmallVec::from_elem(0, ctx.e() as usize);
        raw[0] = r % ctx.modulus();
        Self::from_raw(ctx, 0, ctx.cap(), raw)
    }

    /// `num / den`; fails only when `den` is zero.
    pub fn from_ratio(ctx: PadicContext, num: i64, den: i64) -> Result<Self, PadicError> {
        Self::from_i64(ctx, num).checked_div(&Self::from_i64(ctx, den))
    }

    /// π^k, exact to the cap.
    pub fn uniformizer_pow(ctx: PadicContext, k: i64) -> Self {
        let mut raw: Coeffs = SmallVec::from_elem(0, ctx.e() as usize);
        raw[0] = 1;
        Self::from_raw(ctx, k, ctx.cap(), raw)
    }

    /// p^k, exact to the cap.
    pub fn p_pow(ctx: PadicContext, k: i64) -> Self {
        Self::uniformizer_pow(ctx, k * ctx.e() as i64)
    }

    /// Element `Σ coeffs[j] π^j` with integer coefficients.
    pub fn from_pi_coefficients(ctx: PadicContext, coeffs: &[i64]) -> Self {
        let mut acc = Self::zero(ctx);
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0 {
                acc = &acc + &(&Self::from_i64(ctx, c) * &Self::uniformizer_pow(ctx, j as i64));
            }
        }
        acc
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    /// True when the value is zero to its absolute precision.
    pub fn is_zero(&self) -> bool {
        self.unit.is_empty()
    }

    /// π-adic valuation; `None` when zero to precision.
    pub fn valuation_pi(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Valuation normalized by v(p) = 1.
    pub fn valuation(&self) -> Option<Ratio<i64>> {
        self.valuation_pi().map(|v| Ratio::new(v, self.ctx.e() as i64))
    }

    /// Lower bound on the valuation: the valuation when nonzero, else the
    /// absolute precision.
    pub fn valuation_floor_pi(&self) -> i64 {
        self.val
    }

    /// Absolute precision in π-digits.
    pub fn abs_precision_pi(&self) -> i64 {
        self.abs
    }

    /// Relative precision in π-digits (zero for a zero scalar).
    pub fn rel_precision_pi(&self) -> i64 {
        self.abs - self.val
    }

    pub fn is_unit(&self) -> bool {
        !self.is_zero() && self.val == 0
    }

    /// Whether the value lies in ℤ_p, i.e. only the π^0 coordinate is used.
    pub fn is_in_zp(&self) -> bool {
        if self.is_zero() {
            return true;
        }
        if self.val % self.ctx.e() as i64 != 0 {
            return false;
        }
        self.unit[1..].iter().all(|&c| c == 0)
    }

    /// Residue of the unit part modulo π, in `0..p`. Zero for non-units.
    pub fn residue(&self) -> u64 {
        if self.is_zero() || self.val > 0 {
            0
        } else if self.val < 0 {
            panic!("residue of a non-integral scalar")
        } else {
            (self.unit[0] % self.ctx.p() as u128) as u64
        }
    }

    /// Same value with absolute precision lowered to `abs` (never raised).
    pub fn truncate(&self, abs: i64) -> Self {
        if abs >= self.abs {
            return self.clone();
        }
        if self.is_zero() {
            return Self::zero_with_precision(self.ctx, abs);
        }
        Self::from_raw(self.ctx, self.val, abs, self.unit.clone())
    }

    /// Move to another context of the same field. With `exact`, the stored
    /// digits are taken as an exact representative (precision becomes the
    /// target cap); otherwise the current precision is kept.
    pub fn to_context(&self, target: PadicContext, exact: bool) -> Result<Self, PadicError> {
        if !self.ctx.same_field(&target) {
            return Err(PadicError::ContextMismatch);
        }
        let abs = if exact { target.cap() } else { self.abs };
        if self.is_zero() {
            if exact {
                return Ok(Self::zero(target));
            }
            return Ok(Self::zero_with_precision(target, abs));
        }
        let n = target.modulus();
        let raw: Coeffs = self.unit.iter().map(|&c| c % n).collect();
        Ok(Self::from_raw(target, self.val, abs, raw))
    }

    /// Treat the stored digits as exact in the current context.
    pub fn as_exact(&self) -> Self {
        self.to_context(self.ctx, true).expect("same context")
    }

    /// Lift into a context of the same field with higher precision, treating
    /// the value as exact when it already carries the full cap of its own
    /// context.
    pub fn lift(&self, target: PadicContext) -> Self {
        let exact = self.abs >= self.ctx.cap();
        self.to_context(target, exact).expect("lift within one field")
    }

    /// Bring back to `target`, keeping the propagated precision (capped).
    pub fn reduce(&self, target: PadicContext) -> Self {
        self.to_context(target, false).expect("reduce within one field")
    }

    /// Checked binary arithmetic.
    pub fn arith(&self, other: &Self, op: ArithOp) -> Result<Self, PadicError> {
        self.ctx.check(&other.ctx)?;
        Ok(match op {
            ArithOp::Add => self.add_impl(other),
            ArithOp::Sub => self.add_impl(&other.neg_impl()),
            ArithOp::Mul => self.mul_impl(other),
            ArithOp::Div => return self.checked_div(other),
        })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, PadicError> {
        self.ctx.check(&other.ctx)?;
        if other.is_zero() {
            return Err(PadicError::DivisionByZeroToPrecision);
        }
        if self.is_zero() {
            return Ok(Self::zero_with_precision(self.ctx, self.abs - other.val));
        }
        let inv = residue::inv_vec(&self.ctx, &other.unit);
        let raw = residue::mul_vec(&self.ctx, &self.unit, &inv);
        let val = self.val - other.val;
        let rel = self.rel_precision_pi().min(other.rel_precision_pi());
        Ok(Self::from_raw(self.ctx, val, val + rel, raw))
    }

    pub fn inverse(&self) -> Result<Self, PadicError> {
        Self::one(self.ctx).checked_div(self)
    }

    fn add_impl(&self, other: &Self) -> Self {
        let abs = self.abs.min(other.abs);
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::zero_with_precision(self.ctx, abs),
            (true, false) => other.truncate(abs),
            (false, true) => self.truncate(abs),
            (false, false) => {
                let base = self.val.min(other.val);
                let a = if self.val == base {
                    self.unit.clone()
                } else {
                    residue::shift_up(&self.ctx, &self.unit, self.val - base)
                };
                let b = if other.val == base {
                    other.unit.clone()
                } else {
                    residue::shift_up(&self.ctx, &other.unit, other.val - base)
                };
                let raw = residue::add_vec(&self.ctx, &a, &b);
                Self::from_raw(self.ctx, base, abs, raw)
            }
        }
    }

    fn neg_impl(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut unit = residue::neg_vec(&self.ctx, &self.unit);
        residue::mask(&self.ctx, &mut unit, self.rel_precision_pi());
        PadicScalar { ctx: self.ctx, val: self.val, abs: self.abs, unit }
    }

    fn mul_impl(&self, other: &Self) -> Self {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::zero_with_precision(self.ctx, self.abs.saturating_add(other.abs)),
            (true, false) => Self::zero_with_precision(self.ctx, self.abs + other.val),
            (false, true) => Self::zero_with_precision(self.ctx, other.abs + self.val),
            (false, false) => {
                let raw = residue::mul_vec(&self.ctx, &self.unit, &other.unit);
                let val = self.val + other.val;
                let rel = self.rel_precision_pi().min(other.rel_precision_pi());
                Self::from_raw(self.ctx, val, val + rel, raw)
            }
        }
    }

    pub fn pow(&self, mut k: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.ctx);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_impl(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul_impl(&base);
            }
        }
        acc
    }

    /// Integer power allowing negative exponents.
    pub fn powi(&self, k: i64) -> Result<Self, PadicError> {
        if k >= 0 {
            Ok(self.pow(k as u64))
        } else {
            self.pow(k.unsigned_abs()).inverse()
        }
    }

    /// π-adic digits of the unit part, least significant first, one per
    /// π-digit of relative precision.
    pub fn digits(&self) -> Vec<u64> {
        let mut out = Vec::new();
        if self.is_zero() {
            return out;
        }
        let p = self.ctx.p() as u128;
        let n = self.ctx.modulus();
        let mut cur = self.unit.clone();
        for _ in 0..self.rel_precision_pi() {
            let d = cur[0] % p;
            out.push(d as u64);
            cur[0] = residue::sub_mod(cur[0], d, n);
            cur = residue::shift_down(&self.ctx, &cur, 1);
        }
        out
    }

    /// Interpret a ℤ_p element as an integer in `[0, p^k)` (its residue mod p^k).
    pub fn to_u128_mod_p_pow(&self, k: u32) -> Result<u128, PadicError> {
        if !self.is_in_zp() || self.val < 0 {
            return Err(PadicError::ExponentNotIntegral);
        }
        if self.is_zero() {
            return Ok(0);
        }
        let q = (self.val / self.ctx.e() as i64) as u32;
        if q >= k {
            return Ok(0);
        }
        let modk = self.ctx.pow_p(k);
        Ok(residue::mul_mod(self.unit[0] % modk, self.ctx.pow_p(q), modk))
    }

    /// Serializable form.
    pub fn to_record(&self) -> ScalarRecord {
        ScalarRecord {
            p: self.ctx.p(),
            e: self.ctx.e(),
            valuation: if self.is_zero() { None } else { Some(self.val) },
            precision: self.abs,
            digits: self.digits(),
        }
    }

    /// Rebuild from a record in `ctx`; digits past the record precision are
    /// taken as unknown.
    pub fn from_record(ctx: PadicContext, rec: &ScalarRecord) -> Result<Self, PadicError> {
        if rec.p != ctx.p() || rec.e != ctx.e() {
            return Err(PadicError::ContextMismatch);
        }
        let Some(val) = rec.valuation else {
            return Ok(Self::zero_with_precision(ctx, rec.precision));
        };
        let mut acc = Self::zero(ctx);
        for (j, &d) in rec.digits.iter().enumerate() {
            if d >= ctx.p() {
                return Err(PadicError::InvalidDigit(d));
            }
            if d != 0 {
                let term = &Self::from_i64(ctx, d as i64) * &Self::uniformizer_pow(ctx, val + j as i64);
                acc = &acc + &term;
            }
        }
        Ok(acc.truncate(rec.precision))
    }
}

/// Serialized scalar: `value = π^valuation · Σ digits[j] π^j + O(π^precision)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarRecord {
    pub p: u64,
    pub e: u32,
    /// Numerator over `e`; absent for zero-to-precision.
    pub valuation: Option<i64>,
    /// Absolute precision in π-digits.
    pub precision: i64,
    pub digits: Vec<u64>,
}

impl PartialEq for PadicScalar {
    /// Equality at the joint warranted precision.
    fn eq(&self, other: &Self) -> bool {
        self.ctx == other.ctx && self.add_impl(&other.neg_impl()).is_zero()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a> $tr<&'a PadicScalar> for &'a PadicScalar {
            type Output = PadicScalar;
            fn $m(self, rhs: &'a PadicScalar) -> PadicScalar {
                assert!(self.ctx == rhs.ctx, "p-adic context mismatch");
                $body(self, rhs)
            }
        }
        impl $tr<PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $m(self, rhs: PadicScalar) -> PadicScalar {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $m(self, rhs: &'a PadicScalar) -> PadicScalar {
                (&self).$m(rhs)
            }
        }
    };
}

binop!(Add, add, |a: &PadicScalar, b: &PadicScalar| a.add_impl(b));
binop!(Sub, sub, |a: &PadicScalar, b: &PadicScalar| a.add_impl(&b.neg_impl()));
binop!(Mul, mul, |a: &PadicScalar, b: &PadicScalar| a.mul_impl(b));
binop!(Div, div, |a: &PadicScalar, b: &PadicScalar| a
    .checked_div(b)
    .expect("division by a scalar that is zero to precision"));

impl Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        self.neg_impl()
    }
}

impl Neg for PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        self.neg_impl()
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = if self.ctx.e() == 1 { "p" } else { "π" };
        if self.is_zero() {
            return write!(f, "O({sym}^{})", self.abs);
        }
        let mut first = true;
        for (j, d) in self.digits().iter().enumerate() {
            if *d == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let k = self.val + j as i64;
            match k {
                0 => write!(f, "{d}")?,
                1 => write!(f, "{d}*{sym}")?,
                _ => write!(f, "{d}*{sym}^{k}")?,
            }
        }
        write!(f, " + O({sym}^{})", self.abs)
    }
}

impl fmt::Debug for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
