//! Dense univariate polynomials over K and root finding in O_K.

use std::fmt;

use super::context::PadicContext;
use super::scalar::PadicScalar;
use super::PadicError;

/// `Σ coeffs[i] T^i`.
#[derive(Clone, PartialEq)]
pub struct Poly {
    ctx: PadicContext,
    coeffs: Vec<PadicScalar>,
}

impl Poly {
    pub fn new(ctx: PadicContext, coeffs: Vec<PadicScalar>) -> Self {
        for c in &coeffs {
            assert!(c.context() == ctx, "coefficient context");
        }
        Poly { ctx, coeffs }
    }

    pub fn from_i64(ctx: PadicContext, coeffs: &[i64]) -> Self {
        Poly { ctx, coeffs: coeffs.iter().map(|&c| PadicScalar::from_i64(ctx, c)).collect() }
    }

    pub fn zero(ctx: PadicContext) -> Self {
        Poly { ctx, coeffs: Vec::new() }
    }

    pub fn one(ctx: PadicContext) -> Self {
        Poly { ctx, coeffs: vec![PadicScalar::one(ctx)] }
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn coeffs(&self) -> &[PadicScalar] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<PadicScalar> {
        self.coeffs
    }

    /// Coefficient of T^i (zero past the stored length).
    pub fn coeff(&self, i: usize) -> PadicScalar {
        self.coeffs.get(i).cloned().unwrap_or_else(|| PadicScalar::zero(self.ctx))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Index of the last coefficient that is nonzero to precision.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    /// Drop trailing coefficients that are zero to precision.
    pub fn trimmed(&self) -> Self {
        let n = self.degree().map_or(0, |d| d + 1);
        Poly { ctx: self.ctx, coeffs: self.coeffs[..n].to_vec() }
    }

    /// Keep the coefficients of T^0..T^{n-1}.
    pub fn truncated(&self, n: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.truncate(n);
        Poly { ctx: self.ctx, coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        let coeffs = (0..n).map(|i| &self.coeff(i) + &other.coeff(i)).collect();
        Poly { ctx: self.ctx, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        let coeffs = (0..n).map(|i| &self.coeff(i) - &other.coeff(i)).collect();
        Poly { ctx: self.ctx, coeffs }
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        Poly { ctx: self.ctx, coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_truncated(other, usize::MAX)
    }

    /// Product modulo T^n.
    pub fn mul_truncated(&self, other: &Self, n: usize) -> Self {
        if self.is_empty() || other.is_empty() {
            return Poly::zero(self.ctx);
        }
        let len = (self.len() + other.len() - 1).min(n);
        let mut coeffs = vec![PadicScalar::zero(self.ctx); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i >= len || (a.is_zero() && a.abs_precision_pi() >= self.ctx.cap()) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                coeffs[i + j] = &coeffs[i + j] + &(a * b);
            }
        }
        Poly { ctx: self.ctx, coeffs }
    }

    /// Quotient and remainder by `d`, whose top stored coefficient must be
    /// nonzero to precision.
    pub fn divmod(&self, d: &Self) -> Result<(Self, Self), PadicError> {
        let dd = d.degree().ok_or(PadicError::DivisionByZeroToPrecision)?;
        let lead = d.coeffs[dd].clone();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Poly::zero(self.ctx), self.clone()));
        }
        let qlen = rem.len() - dd;
        let mut q = vec![PadicScalar::zero(self.ctx); qlen];
        for k in (0..qlen).rev() {
            let c = rem[k + dd].checked_div(&lead)?;
            if !c.is_zero() || c.abs_precision_pi() < self.ctx.cap() {
                for j in 0..=dd {
                    rem[k + j] = &rem[k + j] - &(&c * &d.coeffs[j]);
                }
            }
            q[k] = c;
        }
        rem.truncate(dd);
        Ok((Poly { ctx: self.ctx, coeffs: q }, Poly { ctx: self.ctx, coeffs: rem }))
    }

    pub fn eval(&self, x: &PadicScalar) -> PadicScalar {
        let mut acc = PadicScalar::zero(self.ctx);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * &PadicScalar::from_i64(self.ctx, i as i64))
            .collect();
        Poly { ctx: self.ctx, coeffs }
    }

    /// `T^n · self(1/T)` for `n ≥` the stored length minus one.
    pub fn reversed(&self, n: usize) -> Self {
        let mut coeffs = vec![PadicScalar::zero(self.ctx); n + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            if i <= n {
                coeffs[n - i] = c.clone();
            }
        }
        Poly { ctx: self.ctx, coeffs }
    }

    /// Smallest coefficient valuation (π-units).
    pub fn min_valuation_pi(&self) -> Option<i64> {
        self.coeffs.iter().filter_map(|c| c.valuation_pi()).min()
    }

    /// Smallest coefficient precision (π-units).
    pub fn min_precision_pi(&self) -> i64 {
        self.coeffs.iter().map(|c| c.abs_precision_pi()).min().unwrap_or(self.ctx.cap())
    }

    /// `self(a + b·y)` as a polynomial in y.
    pub fn compose_affine(&self, a: &PadicScalar, b: &PadicScalar) -> Self {
        let n = self.len();
        let mut c = self.coeffs.clone();
        // Taylor shift by a (repeated synthetic division)
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                c[j] = &c[j] + &(a * &c[j + 1]);
            }
        }
        let mut pw = PadicScalar::one(self.ctx);
        for ci in c.iter_mut() {
            *ci = &*ci * &pw;
            pw = &pw * b;
        }
        Poly { ctx: self.ctx, coeffs: c }
    }

    /// Roots in O_K with multiplicities, found by successive residue
    /// refinement; simple roots are finished by Newton iteration. Roots
    /// outside K are not returned, so multiplicities may sum to less than
    /// the degree.
    pub fn integral_roots(&self) -> Vec<(PadicScalar, usize)> {
        let mut out = Vec::new();
        let p = self.trimmed();
        if p.degree().unwrap_or(0) == 0 {
            return out;
        }
        let zero = PadicScalar::zero(self.ctx);
        roots_rec(&p, &zero, 0, usize::MAX, &mut out);
        out
    }
}

/// Roots of `orig` of the form `prefix + π^k y` with y ∈ O_K, where `poly`
/// is `orig(prefix + π^k y)` up to a unit scaling.
fn roots_rec(
    orig: &Poly,
    prefix: &PadicScalar,
    k: i64,
    mult_hint: usize,
    out: &mut Vec<(PadicScalar, usize)>,
) {
    let ctx = orig.ctx;
    let pi_k = PadicScalar::uniformizer_pow(ctx, k);
    let poly = orig.compose_affine(prefix, &pi_k);
    let Some(vmin) = poly.min_valuation_pi() else {
        out.push((prefix.truncate(k), mult_hint));
        return;
    };
    if k >= ctx.cap() {
        out.push((prefix.clone(), mult_hint));
        return;
    }
    let scale = PadicScalar::uniformizer_pow(ctx, -vmin);
    let norm = poly.scale(&scale);
    // reduction mod π; coefficients that are not known mod π end the search
    if norm.coeffs.iter().any(|c| c.abs_precision_pi() <= 0) {
        out.push((prefix.truncate(k), mult_hint));
        return;
    }
    let p = ctx.p();
    let residues: Vec<u64> = norm
        .coeffs
        .iter()
        .map(|c| if c.valuation_floor_pi() > 0 { 0 } else { c.residue() })
        .collect();
    for r in 0..p {
        let mu = residue_root_multiplicity(&residues, r, p);
        if mu == 0 {
            continue;
        }
        let rs = PadicScalar::from_i64(ctx, r as i64);
        let next = prefix + &(&rs * &pi_k);
        if mu == 1 {
            out.push((newton_refine(orig, next), 1));
        } else {
            roots_rec(orig, &next, k + 1, mu, out);
        }
    }
}

fn residue_root_multiplicity(coeffs: &[u64], r: u64, p: u64) -> usize {
    let mut c: Vec<u64> = coeffs.to_vec();
    while c.last() == Some(&0) {
        c.pop();
    }
    if c.is_empty() {
        return 0;
    }
    let mut mu = 0;
    loop {
        // synthetic division by (y − r) over F_p
        let n = c.len();
        if n <= 1 {
            return mu;
        }
        let mut q = vec![0u64; n - 1];
        let mut acc = 0u64;
        for i in (0..n).rev() {
            acc = (acc * r + c[i]) % p;
            if i > 0 {
                q[i - 1] = acc;
            }
        }
        if acc != 0 {
            return mu;
        }
        mu += 1;
        c = q;
    }
}

fn newton_refine(f: &Poly, mut x: PadicScalar) -> PadicScalar {
    let df = f.derivative();
    for _ in 0..64 {
        let fx = f.eval(&x);
        if fx.is_zero() {
            break;
        }
        let Ok(step) = fx.checked_div(&df.eval(&x)) else { break };
        if step.is_zero() {
            break;
        }
        x = (&x - &step).as_exact();
    }
    // a perturbation δ of the coefficients moves a simple root by δ / f'(x)
    let dv = df.eval(&x).valuation_floor_pi();
    x.truncate(f.min_precision_pi() - dv)
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PadicContext {
        PadicContext::new(5, 1, 12).unwrap()
    }

    #[test]
    fn divmod_reconstructs() {
        let c = ctx();
        let a = Poly::from_i64(c, &[3, 1, 4, 1, 5, 9]);
        let d = Poly::from_i64(c, &[2, 7, 1]);
        let (q, r) = a.divmod(&d).unwrap();
        assert_eq!(q.mul(&d).add(&r).trimmed(), a);
        assert!(r.len() < 3);
    }

    #[test]
    fn roots_of_split_polynomial() {
        let c = ctx();
        // (x − 1)(x − 5)(x − 7)^2
        let f = Poly::from_i64(c, &[-1, 1])
            .mul(&Poly::from_i64(c, &[-5, 1]))
            .mul(&Poly::from_i64(c, &[-7, 1]).mul(&Poly::from_i64(c, &[-7, 1])));
        let mut roots = f.integral_roots();
        roots.sort_by_key(|(r, _)| r.to_u128_mod_p_pow(3).unwrap());
        assert_eq!(roots.len(), 3);
        assert_eq!(roots[0].0, PadicScalar::one(c));
        assert_eq!(roots[1], (PadicScalar::from_i64(c, 5), 1));
        assert_eq!(roots[2].1, 2);
        assert_eq!(roots[2].0, PadicScalar::from_i64(c, 7));
    }

    #[test]
    fn irreducible_has_no_roots() {
        let c = ctx();
        // x^2 − 2 has no root mod 5
        let f = Poly::from_i64(c, &[-2, 0, 1]);
        assert!(f.integral_roots().is_empty());
    }

    #[test]
    fn compose_affine_matches_eval() {
        let c = ctx();
        let f = Poly::from_i64(c, &[1, -3, 0, 2]);
        let a = PadicScalar::from_i64(c, 4);
        let b = PadicScalar::from_i64(c, 5);
        let g = f.compose_affine(&a, &b);
        let y = PadicScalar::from_i64(c, 3);
        assert_eq!(g.eval(&y), f.eval(&(&a + &(&b * &y))));
    }
}
