//! Teichmüller lifts and the 1-unit kernels: p-adic powers, log and exp.
//!
//! log and exp run in a context with extra digits, treating the input as an
//! exact representative, and the result is truncated to the precision that
//! the kernel's Lipschitz behaviour certifies for the actual input.

use super::context::PadicContext;
use super::residue;
use super::scalar::PadicScalar;
use super::PadicError;

/// The (p−1)-th root of unity congruent to `x` mod p.
pub fn teichmuller(ctx: PadicContext, x: i64) -> Result<PadicScalar, PadicError> {
    let p = ctx.p() as i64;
    let r = x.rem_euclid(p);
    if r == 0 {
        return Err(PadicError::ZeroResidue);
    }
    let n = ctx.modulus();
    let mut t = r as u128;
    // each t -> t^p gains one correct digit
    for _ in 0..ctx.work_digits() {
        let next = residue::pow_mod(t, ctx.p() as u128, n);
        if next == t {
            break;
        }
        t = next;
    }
    Ok(PadicScalar::from_zp_residue(ctx, t))
}

/// Split a unit `t` as `ω · x` with ω a Teichmüller lift and `x` a 1-unit.
/// Returns the residue of `t`, ω and `x`.
pub fn teichmuller_decompose(
    t: &PadicScalar,
) -> Result<(u64, PadicScalar, PadicScalar), PadicError> {
    if !t.is_unit() {
        return Err(PadicError::ZeroResidue);
    }
    let r = t.residue();
    let omega = teichmuller(t.context(), r as i64)?;
    let x = t.checked_div(&omega)?;
    Ok((r, omega, x))
}

fn check_one_unit(s: &PadicScalar) -> Result<(), PadicError> {
    let one = PadicScalar::one(s.context());
    if (s - &one).valuation_floor_pi() <= 0 {
        return Err(PadicError::NotOneUnit);
    }
    Ok(())
}

/// `s^a` for a 1-unit `s` and `a ∈ ℤ_p`, via s^a = ∏_j (s^{p^j})^{a_j} over
/// the known p-adic digits of `a`.
pub fn one_unit_pow(s: &PadicScalar, a: &PadicScalar) -> Result<PadicScalar, PadicError> {
    let ctx = s.context();
    ctx.check(&a.context())?;
    check_one_unit(s)?;
    if a.valuation_floor_pi() < 0 || !a.is_in_zp() {
        return Err(PadicError::ExponentNotIntegral);
    }
    let e = ctx.e() as i64;
    let k = (a.abs_precision_pi() / e).clamp(0, ctx.prec() as i64) as u32;
    let mut digits = a.to_u128_mod_p_pow(k)?;
    let p = ctx.p() as u128;
    let mut acc = PadicScalar::one(ctx);
    let mut sj = s.clone();
    for _ in 0..k {
        let d = (digits % p) as u64;
        digits /= p;
        if d != 0 {
            acc = &acc * &sj.pow(d);
        }
        sj = sj.pow(ctx.p());
    }
    // sj = s^{p^k}; the unknown part of the exponent moves the result by a
    // power of sj, which is 1 to within v(sj − 1).
    let bound = (&sj - &PadicScalar::one(ctx)).valuation_floor_pi();
    Ok(acc.truncate(bound))
}

fn ilog(p: u64, mut n: u64) -> u32 {
    let mut k = 0;
    while n >= p {
        n /= p;
        k += 1;
    }
    k
}

/// p-adic logarithm of a 1-unit.
pub fn log_one_unit(x: &PadicScalar) -> Result<PadicScalar, PadicError> {
    let ctx = x.context();
    let p = ctx.p();
    let e = ctx.e() as i64;
    let one = PadicScalar::one(ctx);
    let d = x - &one;
    let v0 = d.valuation_floor_pi();
    if v0 <= 0 {
        return Err(PadicError::OutsideConvergenceDomain);
    }
    // log(x(1+δ)) − log x = log(1+δ); its valuation is at least
    // min_j (p^j v(δ) − j) in p-units.
    let a = x.abs_precision_pi();
    let mut certified = a;
    let mut pj = 1i64;
    for j in 0..8i64 {
        certified = certified.min(pj.saturating_mul(a).saturating_sub(j * e));
        pj = pj.saturating_mul(p as i64);
    }
    if d.is_zero() {
        return Ok(PadicScalar::zero_with_precision(ctx, certified));
    }
    // number of p-th powers needed to reach v(y − 1) ≥ 1
    let mut r = 0u32;
    let mut v = v0;
    while v < e {
        v = if v * (p as i64 - 1) < e { v * p as i64 } else { v + e };
        r += 1;
    }
    let extra = r + 3 + ilog(p, 2 * (ctx.prec() as u64 + r as u64 + 10));
    let hi = ctx.elevated_capped(extra);
    let xh = x.to_context(hi, true)?;
    let mut y = xh;
    for _ in 0..r {
        y = y.pow(p);
    }
    let u = &y - &PadicScalar::one(hi);
    let vy = u.valuation_floor_pi();
    let mut sum = PadicScalar::zero(hi);
    let mut upow = u.clone();
    let mut n: u64 = 1;
    loop {
        let term = upow.checked_div(&PadicScalar::from_i64(hi, n as i64))?;
        sum = if n % 2 == 1 { &sum + &term } else { &sum - &term };
        n += 1;
        upow = &upow * &u;
        // n·v(u) − v_p(n) is increasing once v(u) ≥ 1
        if upow.is_zero()
            || (n as i64) * vy - e * ilog(p, n) as i64 >= hi.cap() + e
        {
            break;
        }
    }
    let res = sum.checked_div(&PadicScalar::p_pow(hi, r as i64))?;
    Ok(res.reduce(ctx).truncate(certified))
}

/// p-adic exponential on v(y) > 1/(p−1).
pub fn exp_small(y: &PadicScalar) -> Result<PadicScalar, PadicError> {
    let ctx = y.context();
    let p = ctx.p() as i64;
    let e = ctx.e() as i64;
    let v = y.valuation_floor_pi();
    if v * (p - 1) <= e {
        return Err(PadicError::OutsideConvergenceDomain);
    }
    let certified = y.abs_precision_pi();
    if y.is_zero() {
        return Ok(PadicScalar::one(ctx).truncate(certified));
    }
    let hi = ctx.elevated_capped(3);
    let yh = y.to_context(hi, true)?;
    let gap = v * (p - 1) - e;
    let mut sum = PadicScalar::one(hi);
    let mut term = PadicScalar::one(hi);
    let mut n: i64 = 1;
    loop {
        term = (&term * &yh).checked_div(&PadicScalar::from_i64(hi, n))?;
        sum = &sum + &term;
        n += 1;
        // v(y^n / n!) ≥ n (v − 1/(p−1))
        if n * gap >= (hi.cap() + e) * (p - 1) {
            break;
        }
    }
    Ok(sum.reduce(ctx).truncate(certified))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, e: u32, m: u32) -> PadicContext {
        PadicContext::new(p, e, m).unwrap()
    }

    #[test]
    fn teichmuller_of_two_mod_25() {
        let c = ctx(5, 1, 10);
        let t = teichmuller(c, 2).unwrap();
        assert_eq!(t.to_u128_mod_p_pow(2).unwrap(), 7);
        assert_eq!(t.pow(4), PadicScalar::one(c));
        assert_eq!(teichmuller(c, 1).unwrap(), PadicScalar::one(c));
        assert!(matches!(teichmuller(c, 10), Err(PadicError::ZeroResidue)));
    }

    #[test]
    fn teichmuller_ramified_context() {
        let c = ctx(7, 12, 6);
        for x in 1..7 {
            let t = teichmuller(c, x).unwrap();
            assert_eq!(t.pow(6), PadicScalar::one(c));
            assert_eq!(t.residue(), x as u64);
        }
    }

    #[test]
    fn one_unit_pow_integer_exponents() {
        let c = ctx(5, 1, 10);
        let s = PadicScalar::from_i64(c, 6);
        let a = PadicScalar::from_i64(c, 2);
        assert_eq!(one_unit_pow(&s, &a).unwrap(), PadicScalar::from_i64(c, 36));
        let a3 = PadicScalar::from_i64(c, 3);
        assert_eq!(one_unit_pow(&s, &a3).unwrap(), s.pow(3));
        assert_eq!(
            one_unit_pow(&s, &PadicScalar::zero(c)).unwrap(),
            PadicScalar::one(c)
        );
    }

    #[test]
    fn one_unit_pow_rejects_bad_inputs() {
        let c = ctx(5, 2, 8);
        let two = PadicScalar::from_i64(c, 2);
        assert!(matches!(one_unit_pow(&two, &two), Err(PadicError::NotOneUnit)));
        let s = PadicScalar::from_i64(c, 6);
        let pi = PadicScalar::uniformizer_pow(c, 1);
        assert!(matches!(one_unit_pow(&s, &pi), Err(PadicError::ExponentNotIntegral)));
        let inv = PadicScalar::p_pow(c, -1);
        assert!(matches!(one_unit_pow(&s, &inv), Err(PadicError::ExponentNotIntegral)));
    }

    #[test]
    fn one_unit_pow_negative_integer() {
        let c = ctx(5, 1, 12);
        let s = PadicScalar::from_i64(c, 6);
        let m1 = PadicScalar::from_i64(c, -1);
        assert_eq!(one_unit_pow(&s, &m1).unwrap(), s.inverse().unwrap());
    }

    #[test]
    fn log_of_one_plus_p_has_valuation_one() {
        let c = ctx(5, 1, 10);
        let x = PadicScalar::from_i64(c, 6);
        let l = log_one_unit(&x).unwrap();
        assert_eq!(l.valuation_pi(), Some(1));
        // partial sums of Σ (−1)^{n+1} 5^n / n to 10 digits
        let mut oracle = PadicScalar::zero(c);
        let five = PadicScalar::from_i64(c, 5);
        for n in 1..40i64 {
            let t = five.pow(n as u64).checked_div(&PadicScalar::from_i64(c, n)).unwrap();
            oracle = if n % 2 == 1 { &oracle + &t } else { &oracle - &t };
        }
        assert_eq!(l, oracle);
    }

    #[test]
    fn exp_log_round_trip() {
        let c = ctx(5, 8, 10);
        let x = PadicScalar::from_i64(c, 6);
        let l = log_one_unit(&x).unwrap();
        assert_eq!(exp_small(&l).unwrap(), x);
        assert_eq!(log_one_unit(&PadicScalar::one(c)).unwrap(), PadicScalar::zero(c));
        assert_eq!(exp_small(&PadicScalar::zero(c)).unwrap(), PadicScalar::one(c));
    }

    #[test]
    fn log_of_ramified_one_unit() {
        let c = ctx(5, 8, 8);
        let x = &PadicScalar::one(c) + &PadicScalar::uniformizer_pow(c, 1);
        let y = &PadicScalar::one(c) + &PadicScalar::uniformizer_pow(c, 3);
        let lx = log_one_unit(&x).unwrap();
        let ly = log_one_unit(&y).unwrap();
        let lxy = log_one_unit(&(&x * &y)).unwrap();
        assert_eq!(lxy, &lx + &ly);
        assert!(matches!(
            exp_small(&PadicScalar::uniformizer_pow(c, 2)),
            Err(PadicError::OutsideConvergenceDomain)
        ));
        assert!(matches!(
            log_one_unit(&PadicScalar::from_i64(c, 2)),
            Err(PadicError::OutsideConvergenceDomain)
        ));
    }
}
