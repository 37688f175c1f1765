//! Interned arithmetic contexts for a totally ramified extension of ℚ_p.
//!
//! A context fixes `p`, the ramification index `e` (uniformizer π with
//! π^e = p) and the absolute precision cap `m`, measured in p-adic valuation
//! units: every scalar is known at most modulo p^m = π^{e·m}.
//!
//! Contexts are interned so that scalars can carry a `Copy` handle and the
//! power table is shared.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use super::PadicError;

/// Extra p-adic digits stored beyond the cap, so that elements of mildly
/// negative valuation keep their full absolute precision.
pub const GUARD_DIGITS: u32 = 4;

pub(crate) struct ContextData {
    pub(crate) p: u64,
    pub(crate) e: u32,
    pub(crate) prec: u32,
    pub(crate) work: u32,
    /// `pow[k] = p^k` for `k = 0..=work`.
    pub(crate) pow: Vec<u128>,
}

/// Handle on an interned `(p, e, m)` context.
#[derive(Clone, Copy)]
pub struct PadicContext {
    pub(crate) data: &'static ContextData,
}

fn registry() -> &'static Mutex<HashMap<(u64, u32, u32), &'static ContextData>> {
    static REGISTRY: OnceLock<Mutex<HashMap<(u64, u32, u32), &'static ContextData>>> =
        OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl PadicContext {
    /// Context for `p` odd prime, ramification `e ≥ 1`, precision `m ≥ 1`
    /// (p-adic digits).
    pub fn new(p: u64, e: u32, prec: u32) -> Result<Self, PadicError> {
        if p < 3 || !is_prime(p) {
            return Err(PadicError::InvalidContext(format!("p = {p} is not an odd prime")));
        }
        if e == 0 {
            return Err(PadicError::InvalidContext("ramification index must be positive".into()));
        }
        if prec == 0 {
            return Err(PadicError::InvalidContext("precision must be positive".into()));
        }
        let key = (p, e, prec);
        let mut reg = registry().lock().expect("context registry poisoned");
        if let Some(data) = reg.get(&key) {
            return Ok(PadicContext { data });
        }
        let work = prec + GUARD_DIGITS;
        let mut pow = Vec::with_capacity(work as usize + 1);
        let mut acc: u128 = 1;
        pow.push(acc);
        for _ in 0..work {
            acc = acc
                .checked_mul(p as u128)
                .filter(|v| *v < (1u128 << 127))
                .ok_or(PadicError::PrecisionTooLarge { p, digits: work })?;
            pow.push(acc);
        }
        let data: &'static ContextData =
            Box::leak(Box::new(ContextData { p, e, prec, work, pow }));
        reg.insert(key, data);
        Ok(PadicContext { data })
    }

    /// Context with the default ramification `e = 2(p − 1)`, which makes
    /// 1/(p−1), 2/(p−1) and 1/2 all representable valuations.
    pub fn with_default_ramification(p: u64, prec: u32) -> Result<Self, PadicError> {
        if p < 3 {
            return Err(PadicError::InvalidContext(format!("p = {p} is not an odd prime")));
        }
        Self::new(p, (2 * (p - 1)) as u32, prec)
    }

    pub fn p(&self) -> u64 {
        self.data.p
    }

    pub fn e(&self) -> u32 {
        self.data.e
    }

    /// Absolute precision cap in p-adic digits.
    pub fn prec(&self) -> u32 {
        self.data.prec
    }

    /// Absolute precision cap in π-adic digits, `e·m`.
    pub fn cap(&self) -> i64 {
        self.data.e as i64 * self.data.prec as i64
    }

    /// Number of p-adic digits stored per coefficient.
    pub fn work_digits(&self) -> u32 {
        self.data.work
    }

    /// Largest relative precision (π-digits) a stored unit can carry.
    pub(crate) fn rel_cap(&self) -> i64 {
        self.data.e as i64 * self.data.work as i64
    }

    pub(crate) fn modulus(&self) -> u128 {
        self.data.pow[self.data.work as usize]
    }

    pub(crate) fn pow_p(&self, k: u32) -> u128 {
        self.data.pow[k.min(self.data.work) as usize]
    }

    /// Same `p` and `e` with `extra` more digits of precision.
    pub fn elevated(&self, extra: u32) -> Result<Self, PadicError> {
        Self::new(self.p(), self.e(), self.prec() + extra)
    }

    /// Largest precision a context for this `p` can carry.
    pub fn max_prec_for(p: u64) -> u32 {
        let mut acc: u128 = 1;
        let mut digits = 0u32;
        while let Some(v) = acc.checked_mul(p as u128).filter(|v| *v < (1u128 << 127)) {
            acc = v;
            digits += 1;
        }
        digits.saturating_sub(GUARD_DIGITS)
    }

    /// Like [`elevated`](Self::elevated) but never exceeds the representable
    /// range; the returned context may carry fewer extra digits.
    pub fn elevated_capped(&self, extra: u32) -> Self {
        let top = Self::max_prec_for(self.p()).max(self.prec());
        let prec = (self.prec() + extra).min(top);
        Self::new(self.p(), self.e(), prec).expect("capped precision is representable")
    }

    /// Same `p` and `e` with precision `prec`.
    pub fn with_prec(&self, prec: u32) -> Result<Self, PadicError> {
        Self::new(self.p(), self.e(), prec)
    }

    /// Whether two contexts describe the same field (ignoring precision).
    pub fn same_field(&self, other: &PadicContext) -> bool {
        self.p() == other.p() && self.e() == other.e()
    }

    pub(crate) fn check(&self, other: &PadicContext) -> Result<(), PadicError> {
        if self == other {
            Ok(())
        } else {
            Err(PadicError::ContextMismatch)
        }
    }
}

impl PartialEq for PadicContext {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.data, other.data)
    }
}

impl Eq for PadicContext {}

impl fmt::Debug for PadicContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PadicContext(p={}, e={}, m={})", self.p(), self.e(), self.prec())
    }
}
