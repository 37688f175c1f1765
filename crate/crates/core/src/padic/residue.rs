//! Modular arithmetic on `u128` residues and on unit vectors of
//! O_K = ℤ_p[π]/(π^e − p), stored as `e` coefficients modulo p^work.

use smallvec::SmallVec;

use super::context::PadicContext;

pub(crate) type Coeffs = SmallVec<[u128; 8]>;

#[inline]
pub(crate) fn add_mod(a: u128, b: u128, n: u128) -> u128 {
    // n < 2^127 so a + b cannot overflow
    let s = a + b;
    if s >= n {
        s - n
    } else {
        s
    }
}

#[inline]
pub(crate) fn sub_mod(a: u128, b: u128, n: u128) -> u128 {
    if a >= b {
        a - b
    } else {
        a + (n - b)
    }
}

#[inline]
pub(crate) fn mul_mod(a: u128, b: u128, n: u128) -> u128 {
    if a == 0 || b == 0 {
        return 0;
    }
    if n <= u64::MAX as u128 {
        return (a * b) % n;
    }
    // 256-bit product, then bitwise reduction; n < 2^127.
    let (a1, a0) = (a >> 64, a & (u64::MAX as u128));
    let (b1, b0) = (b >> 64, b & (u64::MAX as u128));
    let ll = a0 * b0;
    let lh = a0 * b1;
    let hl = a1 * b0;
    let hh = a1 * b1;
    let (mid, carry_mid) = lh.overflowing_add(hl);
    let (lo, carry_lo) = ll.overflowing_add(mid << 64);
    let hi = hh + (mid >> 64) + ((carry_mid as u128) << 64) + carry_lo as u128;
    let mut r = hi % n;
    for i in (0..128).rev() {
        r <<= 1;
        r |= (lo >> i) & 1;
        if r >= n {
            r -= n;
        }
    }
    r
}

pub(crate) fn pow_mod(mut a: u128, mut k: u128, n: u128) -> u128 {
    let mut acc = 1 % n;
    while k > 0 {
        if k & 1 == 1 {
            acc = mul_mod(acc, a, n);
        }
        a = mul_mod(a, a, n);
        k >>= 1;
    }
    acc
}

/// p-adic valuation of a residue mod p^work, capped at `work`.
pub(crate) fn vp(ctx: &PadicContext, mut a: u128) -> u32 {
    let p = ctx.p() as u128;
    let work = ctx.work_digits();
    if a == 0 {
        return work;
    }
    let mut v = 0;
    while v < work && a % p == 0 {
        a /= p;
        v += 1;
    }
    v
}

/// π-adic valuation of `Σ a_j π^j`; `e·work` when every coefficient vanishes.
pub(crate) fn vec_valuation(ctx: &PadicContext, a: &[u128]) -> i64 {
    let e = ctx.e() as i64;
    let mut best = ctx.rel_cap();
    for (j, &c) in a.iter().enumerate() {
        if c != 0 {
            let v = e * vp(ctx, c) as i64 + j as i64;
            best = best.min(v);
        }
    }
    best
}

/// Multiply by π^s, s ≥ 0.
pub(crate) fn shift_up(ctx: &PadicContext, a: &[u128], s: i64) -> Coeffs {
    let e = ctx.e() as i64;
    let n = ctx.modulus();
    let mut out: Coeffs = SmallVec::from_elem(0, e as usize);
    if s >= ctx.rel_cap() {
        return out;
    }
    for (j, &c) in a.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let t = j as i64 + s;
        let q = (t / e) as u32;
        let r = (t % e) as usize;
        if q >= ctx.work_digits() {
            continue;
        }
        let term = mul_mod(c, ctx.pow_p(q), n);
        out[r] = add_mod(out[r], term, n);
    }
    out
}

/// Divide by π^s where the vector has π-valuation at least s.
pub(crate) fn shift_down(ctx: &PadicContext, a: &[u128], s: i64) -> Coeffs {
    let e = ctx.e() as i64;
    let mut out: Coeffs = SmallVec::from_elem(0, e as usize);
    for (j, &c) in a.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let t = j as i64 - s;
        let r = t.rem_euclid(e);
        let q = ((r - t) / e) as u32;
        out[r as usize] = if q == 0 { c } else { c / ctx.pow_p(q) };
    }
    out
}

/// Reduce `Σ a_j π^j` modulo π^rel.
pub(crate) fn mask(ctx: &PadicContext, a: &mut [u128], rel: i64) {
    let e = ctx.e() as i64;
    for (j, c) in a.iter_mut().enumerate() {
        let k = rel - j as i64;
        let digits = if k <= 0 { 0 } else { ((k + e - 1) / e).min(ctx.work_digits() as i64) };
        if digits == 0 {
            *c = 0;
        } else if (digits as u32) < ctx.work_digits() {
            *c %= ctx.pow_p(digits as u32);
        }
    }
}

/// Product in ℤ_p[π]/(π^e − p), coefficients mod p^work.
pub(crate) fn mul_vec(ctx: &PadicContext, a: &[u128], b: &[u128]) -> Coeffs {
    let e = ctx.e() as usize;
    let n = ctx.modulus();
    let mut out: Coeffs = SmallVec::from_elem(0, e);
    let a_int = a[1..].iter().all(|&c| c == 0);
    let b_int = b[1..].iter().all(|&c| c == 0);
    if a_int && b_int {
        out[0] = mul_mod(a[0], b[0], n);
        return out;
    }
    let p = ctx.p() as u128;
    let mut wrap: Coeffs = SmallVec::from_elem(0, e);
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            if y == 0 {
                continue;
            }
            let t = mul_mod(x, y, n);
            let k = i + j;
            if k < e {
                out[k] = add_mod(out[k], t, n);
            } else {
                wrap[k - e] = add_mod(wrap[k - e], t, n);
            }
        }
    }
    for k in 0..e {
        if wrap[k] != 0 {
            out[k] = add_mod(out[k], mul_mod(wrap[k], p, n), n);
        }
    }
    out
}

pub(crate) fn add_vec(ctx: &PadicContext, a: &[u128], b: &[u128]) -> Coeffs {
    let n = ctx.modulus();
    a.iter().zip(b).map(|(&x, &y)| add_mod(x, y, n)).collect()
}

pub(crate) fn neg_vec(ctx: &PadicContext, a: &[u128]) -> Coeffs {
    let n = ctx.modulus();
    a.iter().map(|&x| if x == 0 { 0 } else { n - x }).collect()
}

/// Inverse of a unit vector (a_0 not divisible by p).
pub(crate) fn inv_vec(ctx: &PadicContext, a: &[u128]) -> Coeffs {
    let e = ctx.e() as usize;
    let n = ctx.modulus();
    let p = ctx.p() as u128;
    let a0 = a[0] % p;
    debug_assert!(a0 != 0, "inverting a non-unit");
    let z0 = pow_mod(a0, p - 2, p);
    let mut z: Coeffs = SmallVec::from_elem(0, e);
    z[0] = z0;
    let target = ctx.rel_cap();
    let mut known = 1i64;
    let mut two: Coeffs = SmallVec::from_elem(0, e);
    two[0] = 2 % n;
    while known < target {
        // z ← z (2 − a z)
        let az = mul_vec(ctx, a, &z);
        let t: Coeffs = two.iter().zip(&az).map(|(&x, &y)| sub_mod(x, y, n)).collect();
        z = mul_vec(ctx, &z, &t);
        known *= 2;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_mulmod_matches_naive() {
        let n: u128 = 5u128.pow(50);
        let a = n - 12345;
        let b = n / 3 + 7;
        // reference via repeated doubling
        let mut acc = 0u128;
        let mut x = a % n;
        let mut k = b;
        while k > 0 {
            if k & 1 == 1 {
                acc = add_mod(acc, x, n);
            }
            x = add_mod(x, x, n);
            k >>= 1;
        }
        assert_eq!(mul_mod(a, b, n), acc);
    }

    #[test]
    fn inverse_vec_is_inverse() {
        let ctx = PadicContext::new(5, 3, 10).unwrap();
        let a: Coeffs = SmallVec::from_slice(&[3, 7, 11]);
        let inv = inv_vec(&ctx, &a);
        let prod = mul_vec(&ctx, &a, &inv);
        assert_eq!(prod[0], 1);
        assert_eq!(prod[1], 0);
        assert_eq!(prod[2], 0);
    }
}
