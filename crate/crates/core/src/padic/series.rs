//! Multivariate power series truncated at a total degree.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::context::PadicContext;
use super::scalar::PadicScalar;
use super::PadicError;

/// Element of K[x_1..x_n] / (monomials of total degree > D).
///
/// Exactly-zero coefficients are not stored; coefficients that are zero only
/// to a reduced precision are kept so that their precision is not lost.
#[derive(Clone)]
pub struct TruncatedSeries {
    ctx: PadicContext,
    vars: Arc<Vec<String>>,
    degree: u32,
    terms: BTreeMap<Vec<u32>, PadicScalar>,
}

fn total(exp: &[u32]) -> u32 {
    exp.iter().sum()
}

impl TruncatedSeries {
    pub fn zero(ctx: PadicContext, vars: Arc<Vec<String>>, degree: u32) -> Self {
        TruncatedSeries { ctx, vars, degree, terms: BTreeMap::new() }
    }

    pub fn with_vars(ctx: PadicContext, vars: &[&str], degree: u32) -> Self {
        Self::zero(ctx, Arc::new(vars.iter().map(|s| s.to_string()).collect()), degree)
    }

    pub fn constant(ctx: PadicContext, vars: Arc<Vec<String>>, degree: u32, c: PadicScalar) -> Self {
        let mut s = Self::zero(ctx, vars, degree);
        let n = s.vars.len();
        s.set(vec![0; n], c);
        s
    }

    /// The variable with index `i`.
    pub fn variable(ctx: PadicContext, vars: Arc<Vec<String>>, degree: u32, i: usize) -> Self {
        let mut s = Self::zero(ctx, vars, degree);
        let mut exp = vec![0; s.vars.len()];
        exp[i] = 1;
        s.set(exp, PadicScalar::one(ctx));
        s
    }

    /// Same ring, zero element.
    pub fn zero_like(&self) -> Self {
        Self::zero(self.ctx, self.vars.clone(), self.degree)
    }

    pub fn one_like(&self) -> Self {
        Self::constant(self.ctx, self.vars.clone(), self.degree, PadicScalar::one(self.ctx))
    }

    /// Constant `c` in the ring of `self`.
    pub fn scalar_like(&self, c: PadicScalar) -> Self {
        Self::constant(self.ctx, self.vars.clone(), self.degree, c)
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn vars(&self) -> &Arc<Vec<String>> {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree
    }

    fn same_ring(&self, other: &Self) -> bool {
        self.ctx == other.ctx && self.degree == other.degree && self.vars == other.vars
    }

    /// Store `c` at `exp`; monomials beyond the degree bound are dropped.
    pub fn set(&mut self, exp: Vec<u32>, c: PadicScalar) {
        assert_eq!(exp.len(), self.vars.len(), "exponent arity");
        if total(&exp) > self.degree {
            return;
        }
        if c.is_zero() && c.abs_precision_pi() >= self.ctx.cap() {
            self.terms.remove(&exp);
        } else {
            self.terms.insert(exp, c);
        }
    }

    pub fn add_term(&mut self, exp: Vec<u32>, c: &PadicScalar) {
        if total(&exp) > self.degree {
            return;
        }
        let cur = self.coeff(&exp);
        self.set(exp, &cur + c);
    }

    pub fn coeff(&self, exp: &[u32]) -> PadicScalar {
        self.terms.get(exp).cloned().unwrap_or_else(|| PadicScalar::zero(self.ctx))
    }

    pub fn constant_term(&self) -> PadicScalar {
        self.coeff(&vec![0; self.vars.len()])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &PadicScalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every coefficient is zero to its precision.
    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    /// Smallest coefficient valuation (π-units): −log_p of the Gauss norm
    /// times e. `None` when the series is zero to precision.
    pub fn gauss_valuation_pi(&self) -> Option<i64> {
        self.terms.values().filter_map(|c| c.valuation_pi()).min()
    }

    /// Gauss norm on the polydisc of radius p^{-r} in every variable, as a
    /// valuation in π-units: min over terms of v(c) + r·|exp|.
    pub fn gauss_valuation_at_radius_pi(&self, r_pi: i64) -> Option<i64> {
        self.terms
            .iter()
            .filter_map(|(k, c)| c.valuation_pi().map(|v| v + r_pi * total(k) as i64))
            .min()
    }

    /// Smallest absolute precision among stored coefficients (the cap if
    /// none is stored).
    pub fn min_precision_pi(&self) -> i64 {
        self.terms.values().map(|c| c.abs_precision_pi()).min().unwrap_or(self.ctx.cap())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PadicError> {
        if !self.same_ring(other) {
            return Err(PadicError::VariableMismatch);
        }
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -&*c;
        }
        out
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PadicError> {
        if !self.same_ring(other) {
            return Err(PadicError::VariableMismatch);
        }
        let mut acc: BTreeMap<Vec<u32>, PadicScalar> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            let da = total(ka);
            for (kb, cb) in &other.terms {
                if da + total(kb) > self.degree {
                    continue;
                }
                let k: Vec<u32> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                let t = ca * cb;
                match acc.get_mut(&k) {
                    Some(v) => *v = &*v + &t,
                    None => {
                        acc.insert(k, t);
                    }
                }
            }
        }
        let mut out = self.zero_like();
        for (k, c) in acc {
            out.set(k, c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        let mut out = self.zero_like();
        for (k, v) in &self.terms {
            out.set(k.clone(), v * c);
        }
        out
    }

    pub fn pow(&self, mut k: u32) -> Self {
        let mut base = self.clone();
        let mut acc = self.one_like();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.checked_mul(&base).expect("same ring");
            }
            k >>= 1;
            if k > 0 {
                base = base.checked_mul(&base).expect("same ring");
            }
        }
        acc
    }

    /// Multiplicative inverse when the constant term is a unit of K
    /// (nonzero): c0^{-1} Σ (−N)^j with N = x/c0 − 1 nilpotent.
    pub fn inverse(&self) -> Result<Self, PadicError> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(PadicError::DivisionByZeroToPrecision);
        }
        let c0inv = c0.inverse()?;
        let mut n = self.scale(&c0inv);
        let zero_exp = vec![0; self.vars.len()];
        n.terms.remove(&zero_exp);
        let neg_n = n.neg();
        let mut acc = self.one_like();
        let mut pw = self.one_like();
        for _ in 0..self.degree {
            pw = pw.checked_mul(&neg_n)?;
            if pw.is_empty() {
                break;
            }
            acc = acc.checked_add(&pw)?;
        }
        Ok(acc.scale(&c0inv))
    }

    /// Drop monomials of total degree above `d`.
    pub fn truncate_degree(&self, d: u32) -> Self {
        let mut out = self.clone();
        out.degree = d.min(self.degree);
        out.terms.retain(|k, _| total(k) <= out.degree);
        out
    }

    /// Homogeneous part of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        let mut out = self.zero_like();
        for (k, c) in &self.terms {
            if total(k) == d {
                out.set(k.clone(), c.clone());
            }
        }
        out
    }

    /// Evaluate at a point (one scalar per variable). Only the stored
    /// truncation is summed.
    pub fn eval(&self, point: &[PadicScalar]) -> Result<PadicScalar, PadicError> {
        if point.len() != self.vars.len() {
            return Err(PadicError::DimensionMismatch(format!(
                "{} coordinates for {} variables",
                point.len(),
                self.vars.len()
            )));
        }
        let mut acc = PadicScalar::zero(self.ctx);
        for (k, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(k) {
                if e > 0 {
                    t = &t * &x.pow(e as u64);
                }
            }
            acc = &acc + &t;
        }
        Ok(acc)
    }

    /// Substitute values for the variables listed in `which`; the result
    /// lives in the remaining variables with the same degree bound.
    pub fn specialize(&self, which: &[usize], values: &[PadicScalar]) -> Result<Self, PadicError> {
        if which.len() != values.len() {
            return Err(PadicError::DimensionMismatch("specialization arity".into()));
        }
        let keep: Vec<usize> = (0..self.vars.len()).filter(|i| !which.contains(i)).collect();
        let vars: Vec<String> = keep.iter().map(|&i| self.vars[i].clone()).collect();
        let mut out = Self::zero(self.ctx, Arc::new(vars), self.degree);
        for (k, c) in &self.terms {
            let mut t = c.clone();
            for (&i, x) in which.iter().zip(values) {
                if k[i] > 0 {
                    t = &t * &x.pow(k[i] as u64);
                }
            }
            let exp: Vec<u32> = keep.iter().map(|&i| k[i]).collect();
            out.add_term(exp, &t);
        }
        Ok(out)
    }

    /// Rebuild in another context of the same field (see
    /// [`PadicScalar::lift`] and [`PadicScalar::reduce`]).
    pub fn map_coefficients(&self, ctx: PadicContext, f: impl Fn(&PadicScalar) -> PadicScalar) -> Self {
        let mut out = Self::zero(ctx, self.vars.clone(), self.degree);
        for (k, c) in &self.terms {
            out.set(k.clone(), f(c));
        }
        out
    }
}

impl PartialEq for TruncatedSeries {
    /// Coefficientwise equality at the joint warranted precision.
    fn eq(&self, other: &Self) -> bool {
        self.same_ring(other)
            && self.checked_add(&other.neg()).map(|d| d.is_zero()).unwrap_or(false)
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (name, &e) in self.vars.iter().zip(k) {
                match e {
                    0 => {}
                    1 => write!(f, "*{name}")?,
                    _ => write!(f, "*{name}^{e}")?,
                }
            }
        }
        write!(f, " + O(deg > {})", self.degree)
    }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
