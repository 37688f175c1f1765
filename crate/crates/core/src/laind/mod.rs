//! Truncated models of locally analytic induced representations of the
//! Iwahori subgroup of GL_g, restricted to the lower unipotent block N⁰.
//!
//! A function is a polynomial in the coordinates z_{k,l} (k > l) of total
//! degree at most D. The torus acts diagonally on monomials, the dilations
//! δ_i rescale coordinates by powers of p, and the BGG operators Θ_α are
//! powers of first-order lowering fields.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{Matrix, PadicContext, PadicError, PadicScalar, TruncatedSeries};
use crate::spectral::{CompactOperatorModel, SpectralError, Tail};
use crate::weight::{eval_character, Character, WeightError};
use crate::ErrorClass;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LaindError {
    #[error("torus coordinate {0} is not a unit")]
    NonUnitTorusPoint(usize),
    #[error("index {i} out of range for g = {g}")]
    IndexOutOfRange { i: usize, g: usize },
    #[error("pairing with the coroot of α_{0} is not an integer ≥ −1")]
    NonIntegralPairing(usize),
    #[error("weight is not algebraic dominant")]
    NotDominant,
    #[error("kernel dimension not stable at degree {degree}: {dim} vs {next} at degree {}", degree + 1)]
    TruncationTooSmall { degree: u32, dim: usize, next: usize },
    #[error("not a joint δ-eigenvector: {0}")]
    NotAnEigenvector(String),
    #[error("functions live on different spaces")]
    SpaceMismatch,
    #[error("small-slope eigenvector is not killed by Θ_{0}")]
    ClassicityViolation(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

impl LaindError {
    pub fn class(&self) -> ErrorClass {
        match self {
            LaindError::Weight(e) => e.class(),
            LaindError::Spectral(e) => e.class(),
            LaindError::Padic(e) => e.class(),
            LaindError::SpaceMismatch | LaindError::ClassicityViolation(_) => ErrorClass::Invariant,
            LaindError::TruncationTooSmall { .. } => ErrorClass::Precision,
            _ => ErrorClass::Validation,
        }
    }
}

/// Weights of GL_g as integer vectors, with simple roots, coroot pairings
/// and the dot action of simple reflections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootDatum {
    g: usize,
}

impl RootDatum {
    pub fn new(g: usize) -> Self {
        RootDatum { g }
    }

    pub fn g(&self) -> usize {
        self.g
    }

    /// α_i = e_i − e_{i+1}, 1-based.
    pub fn simple_root(&self, i: usize) -> Vec<i64> {
        let mut a = vec![0; self.g];
        a[i - 1] = 1;
        a[i] = -1;
        a
    }

    /// ρ = ((g−1)/2, …) shifted to integers: (g−1, g−2, …, 0).
    pub fn rho(&self) -> Vec<i64> {
        (0..self.g).map(|j| (self.g - 1 - j) as i64).collect()
    }

    pub fn pairing(&self, k: &[i64], i: usize) -> i64 {
        k[i - 1] - k[i]
    }

    /// Reflection s_i: swap coordinates i and i+1.
    pub fn reflect(&self, k: &[i64], i: usize) -> Vec<i64> {
        let mut v = k.to_vec();
        v.swap(i - 1, i);
        v
    }

    /// s_i•κ = κ − (⟨κ, α_i^∨⟩ + 1) α_i.
    pub fn dot_action(&self, k: &[i64], i: usize) -> Vec<i64> {
        let n = self.pairing(k, i) + 1;
        let a = self.simple_root(i);
        k.iter().zip(a).map(|(x, y)| x - n * y).collect()
    }

    pub fn is_dominant(&self, k: &[i64]) -> bool {
        k.windows(2).all(|w| w[0] >= w[1])
    }

    /// Dimension of the irreducible representation of highest weight `k`.
    pub fn weyl_dimension(&self, k: &[i64]) -> u64 {
        let mut num: u128 = 1;
        let mut den: u128 = 1;
        for i in 0..self.g {
            for j in i + 1..self.g {
                num *= (k[i] - k[j] + (j - i) as i64) as u128;
                den *= (j - i) as u128;
            }
        }
        (num / den) as u64
    }
}

/// The coordinates z_{k,l}, k > l, in (k, l) order, 1-based.
pub fn coordinates(g: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for k in 1..=g {
        for l in 1..k {
            v.push((k, l));
        }
    }
    v
}

fn coord_index(k: usize, l: usize) -> usize {
    (k - 1) * (k - 2) / 2 + (l - 1)
}

fn variable_names(g: usize) -> Arc<Vec<String>> {
    Arc::new(coordinates(g).into_iter().map(|(k, l)| format!("z{k}{l}")).collect())
}

/// All exponent vectors of total degree ≤ `degree` in `n` variables, in
/// graded lexicographic order.
pub fn monomial_basis(n: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for d in 0..=degree {
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, d);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == cur.len() - 1 {
        cur[pos] = left;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for a in (0..=left).rev() {
        cur[pos] = a;
        fill(out, cur, pos + 1, left - a);
    }
    cur[pos] = 0;
}

/// Torus weight of z^M: Σ M_{k,l} (e_l − e_k).
fn torus_weight(g: usize, m: &[u32]) -> Vec<i64> {
    let mut w = vec![0i64; g];
    for (idx, (k, l)) in coordinates(g).into_iter().enumerate() {
        w[l - 1] += m[idx] as i64;
        w[k - 1] -= m[idx] as i64;
    }
    w
}

/// A truncated element of the induced representation of weight κ.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedFunction {
    kappa: Character,
    poly: TruncatedSeries,
    w: Ratio<i64>,
}

impl InducedFunction {
    pub fn zero(kappa: &Character, degree: u32) -> Self {
        let ctx = kappa.context();
        InducedFunction {
            kappa: kappa.clone(),
            poly: TruncatedSeries::zero(ctx, variable_names(kappa.g()), degree),
            w: Ratio::from(1),
        }
    }

    pub fn monomial(kappa: &Character, degree: u32, m: &[u32]) -> Self {
        let mut f = Self::zero(kappa, degree);
        f.poly.set(m.to_vec(), PadicScalar::one(kappa.context()));
        f
    }

    pub fn from_series(kappa: &Character, poly: TruncatedSeries) -> Result<Self, LaindError> {
        if poly.nvars() != kappa.g() * (kappa.g() - 1) / 2 || poly.context() != kappa.context() {
            return Err(LaindError::SpaceMismatch);
        }
        let poly = TruncatedSeries::zero(poly.context(), variable_names(kappa.g()), poly.degree_bound())
            .checked_add(&relabel(&poly, kappa.g()))?;
        Ok(InducedFunction { kappa: kappa.clone(), poly, w: Ratio::from(1) })
    }

    /// Analyticity tag, used only for norms at other radii.
    pub fn with_analyticity(mut self, w: Ratio<i64>) -> Self {
        self.w = w;
        self
    }

    pub fn kappa(&self) -> &Character {
        &self.kappa
    }

    pub fn g(&self) -> usize {
        self.kappa.g()
    }

    pub fn degree(&self) -> u32 {
        self.poly.degree_bound()
    }

    pub fn analyticity(&self) -> Ratio<i64> {
        self.w
    }

    pub fn series(&self) -> &TruncatedSeries {
        &self.poly
    }

    pub fn coeff(&self, m: &[u32]) -> PadicScalar {
        self.poly.coeff(m)
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// Gauss valuation (π-units) on the polydisc (pℤ_p)^{g(g−1)/2}.
    pub fn gauss_valuation_pi(&self) -> Option<i64> {
        self.poly.gauss_valuation_at_radius_pi(self.poly.context().e() as i64)
    }

    /// Coefficient vector on [`monomial_basis`].
    pub fn to_vector(&self) -> Vec<PadicScalar> {
        let n = self.g() * (self.g() - 1) / 2;
        monomial_basis(n, self.degree()).iter().map(|m| self.coeff(m)).collect()
    }

    fn with_poly(&self, poly: TruncatedSeries) -> Self {
        InducedFunction { kappa: self.kappa.clone(), poly, w: self.w }
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, LaindError> {
        if self.kappa != other.kappa {
            return Err(LaindError::SpaceMismatch);
        }
        Ok(self.with_poly(self.poly.checked_add(&other.poly.neg())?))
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        self.with_poly(self.poly.scale(c))
    }
}

fn relabel(poly: &TruncatedSeries, g: usize) -> TruncatedSeries {
    let mut out = TruncatedSeries::zero(poly.context(), variable_names(g), poly.degree_bound());
    for (k, c) in poly.terms() {
        out.set(k.clone(), c.clone());
    }
    out
}

fn check_index(i: usize, g: usize, max: usize) -> Result<(), LaindError> {
    if i == 0 || i > max {
        return Err(LaindError::IndexOutOfRange { i, g });
    }
    Ok(())
}

/// Eigenvalue of the torus point `t` on z^M for weight κ:
/// κ(t)^{-1} ∏ (t_k^{-1} t_l)^{M_{k,l}}.
fn torus_factors(kappa: &Character, t: &[PadicScalar]) -> Result<(PadicScalar, Vec<PadicScalar>), LaindError> {
    let g = kappa.g();
    if t.len() != g {
        return Err(LaindError::IndexOutOfRange { i: t.len(), g });
    }
    for (i, ti) in t.iter().enumerate() {
        if !ti.is_unit() {
            return Err(LaindError::NonUnitTorusPoint(i + 1));
        }
    }
    let kinv = eval_character(kappa, t)?.inverse()?;
    let ratios = coordinates(g)
        .into_iter()
        .map(|(k, l)| t[l - 1].checked_div(&t[k - 1]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((kinv, ratios))
}

/// Left translation by a torus point: z^M ↦ κ(t)^{-1} ∏(t_k^{-1} t_l)^{M_{k,l}} z^M.
pub fn torus_act(t: &[PadicScalar], f: &InducedFunction) -> Result<InducedFunction, LaindError> {
    let (kinv, ratios) = torus_factors(&f.kappa, t)?;
    let mut out = f.poly.zero_like();
    for (m, c) in f.poly.terms() {
        let mut x = &kinv * c;
        for (r, &e) in ratios.iter().zip(m) {
            if e > 0 {
                x = &x * &r.pow(e as u64);
            }
        }
        out.set(m.clone(), x);
    }
    Ok(f.with_poly(out))
}

/// Whether δ_i rescales z_{k,l}: k ≥ g−i+1 and l ≤ g−i.
fn scaled(g: usize, i: usize, k: usize, l: usize) -> bool {
    k + i > g && l + i <= g
}

/// Number of δ_i-scaled coordinates in z^M, i.e. the slope of z^M.
pub fn delta_slope(g: usize, i: usize, m: &[u32]) -> u32 {
    coordinates(g)
        .into_iter()
        .zip(m)
        .filter(|((k, l), _)| scaled(g, i, *k, *l))
        .map(|(_, &e)| e)
        .sum()
}

/// The dilation δ_i: z_{k,l} ↦ p z_{k,l} on the scaled coordinates.
pub fn delta_i(i: usize, f: &InducedFunction) -> Result<InducedFunction, LaindError> {
    let g = f.g();
    check_index(i, g, g)?;
    let ctx = f.poly.context();
    let mut out = f.poly.zero_like();
    for (m, c) in f.poly.terms() {
        let s = delta_slope(g, i, m);
        out.set(m.clone(), c * &PadicScalar::p_pow(ctx, s as i64));
    }
    Ok(f.with_poly(out))
}

/// The lowering vector field for α_i, as a list of (multiplier, variable)
/// pairs: ∂/∂z_{i+1,i} + Σ_{k>i+1} z_{k,i+1} ∂/∂z_{k,i}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoweringField {
    g: usize,
    i: usize,
}

impl LoweringField {
    pub fn new(g: usize, i: usize) -> Result<Self, LaindError> {
        check_index(i, g, g.saturating_sub(1))?;
        Ok(LoweringField { g, i })
    }

    /// Terms `(multiplier coordinate, differentiated coordinate)`, with
    /// `None` for the constant multiplier.
    pub fn terms(&self) -> Vec<(Option<(usize, usize)>, (usize, usize))> {
        let i = self.i;
        let mut v = vec![(None, (i + 1, i))];
        for k in i + 2..=self.g {
            v.push((Some((k, i + 1)), (k, i)));
        }
        v
    }

    pub fn apply(&self, f: &TruncatedSeries) -> TruncatedSeries {
        let ctx = f.context();
        let terms: Vec<(Option<usize>, usize)> = self
            .terms()
            .into_iter()
            .map(|(a, (k, l))| (a.map(|(x, y)| coord_index(x, y)), coord_index(k, l)))
            .collect();
        let mut out = f.zero_like();
        for (m, c) in f.terms() {
            for &(mult, d) in &terms {
                if m[d] == 0 {
                    continue;
                }
                let mut m2 = m.clone();
                m2[d] -= 1;
                if let Some(a) = mult {
                    m2[a] += 1;
                }
                out.add_term(m2, &(c * &PadicScalar::from_i64(ctx, m[d] as i64)));
            }
        }
        out
    }
}

pub fn lowering_field(g: usize, i: usize) -> Result<LoweringField, LaindError> {
    LoweringField::new(g, i)
}

/// Θ_{α_i} applied with an explicit pairing n = ⟨κ, α_i^∨⟩: the lowering
/// field to the power n + 1, retagged with weight s_i•κ.
pub fn theta_alpha_with_pairing(i: usize, pairing: i64, f: &InducedFunction) -> Result<InducedFunction, LaindError> {
    let g = f.g();
    let field = LoweringField::new(g, i)?;
    if pairing < -1 {
        return Err(LaindError::NonIntegralPairing(i));
    }
    let power = (pairing + 1) as u32;
    let mut poly = f.poly.clone();
    for _ in 0..power {
        if poly.is_empty() {
            break;
        }
        poly = field.apply(&poly);
    }
    let mut shift = vec![0i64; g];
    shift[i - 1] = -(power as i64);
    shift[i] = power as i64;
    let kappa = f.kappa.twist(&shift)?;
    Ok(InducedFunction { kappa, poly, w: f.w })
}

/// Θ_{α_i} for a weight whose pairing with α_i^∨ is known.
pub fn theta_alpha(i: usize, f: &InducedFunction) -> Result<InducedFunction, LaindError> {
    check_index(i, f.g(), f.g().saturating_sub(1))?;
    let n = f.kappa.pairing(i).ok_or(LaindError::NonIntegralPairing(i))?;
    theta_alpha_with_pairing(i, n, f)
}

fn dominant_weight(kappa: &Character) -> Result<Vec<i64>, LaindError> {
    if !kappa.is_dominant() {
        return Err(LaindError::NotDominant);
    }
    Ok(kappa.algebraic_weight().expect("dominant implies algebraic").to_vec())
}

/// Basis of ∩_i ker Θ_{α_i} on polynomials of degree ≤ `degree`, computed
/// block by block on torus weights.
fn theta_kernel(kappa: &Character, degree: u32) -> Result<Vec<InducedFunction>, LaindError> {
    let k = dominant_weight(kappa)?;
    let g = kappa.g();
    let ctx = kappa.context();
    let n = g * (g - 1) / 2;
    let basis = monomial_basis(n, degree);
    let mut blocks: BTreeMap<Vec<i64>, Vec<Vec<u32>>> = BTreeMap::new();
    for m in &basis {
        blocks.entry(torus_weight(g, m)).or_default().push(m.clone());
    }
    let fields: Vec<LoweringField> = (1..g).map(|i| LoweringField::new(g, i).expect("valid index")).collect();
    let mut out = Vec::new();
    for mons in blocks.values() {
        // rows: (root index, target monomial)
        let mut rows: BTreeMap<(usize, Vec<u32>), usize> = BTreeMap::new();
        let mut cols: Vec<Vec<((usize, Vec<u32>), PadicScalar)>> = Vec::new();
        for m in mons {
            let f = InducedFunction::monomial(kappa, degree, m);
            let mut col = Vec::new();
            for (idx, field) in fields.iter().enumerate() {
                let mut poly = f.poly.clone();
                for _ in 0..=(k[idx] - k[idx + 1]) {
                    poly = field.apply(&poly);
                }
                for (t, c) in poly.terms() {
                    let key = (idx, t.clone());
                    let len = rows.len();
                    rows.entry(key.clone()).or_insert(len);
                    col.push((key, c.clone()));
                }
            }
            cols.push(col);
        }
        if rows.is_empty() {
            for m in mons {
                out.push(InducedFunction::monomial(kappa, degree, m));
            }
            continue;
        }
        let mut mat = Matrix::zeros(ctx, rows.len(), mons.len());
        for (j, col) in cols.iter().enumerate() {
            for (key, c) in col {
                mat.set(rows[key], j, c.clone());
            }
        }
        for v in mat.kernel()? {
            let mut f = InducedFunction::zero(kappa, degree);
            for (m, c) in mons.iter().zip(v) {
                f.poly.set(m.clone(), c);
            }
            out.push(f);
        }
    }
    Ok(out)
}

/// The algebraic representation V_κ inside the truncated induction, as
/// the joint kernel of the Θ operators.
pub fn algebraic_subspace(kappa: &Character, degree: u32) -> Result<Vec<InducedFunction>, LaindError> {
    let here = theta_kernel(kappa, degree)?;
    let next = theta_kernel(kappa, degree + 1)?;
    if here.len() != next.len() {
        return Err(LaindError::TruncationTooSmall { degree, dim: here.len(), next: next.len() });
    }
    Ok(here)
}

/// Outcome of [`bgg_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BggReport {
    pub g: usize,
    pub weight: Vec<i64>,
    pub degree: u32,
    pub kernel_dim: usize,
    pub expected_dim: u64,
    /// Kernel dimension one degree higher.
    pub kernel_dim_next: usize,
    /// Weights s_i•κ of the targets of the Θ operators.
    pub target_weights: Vec<Vec<i64>>,
    /// Whether Θ kills every kernel vector exactly.
    pub composition_zero: bool,
    /// Commutation δ_{g−i}Θ_i = p^{−(n+1)} Θ_i δ_{g−i} on all monomials.
    pub commutation_holds: bool,
    /// Slopes of the compact operator ∏δ_i on a basis of the kernel.
    pub slopes: Vec<u32>,
    /// Smallest absolute precision (π-units) among kernel coefficients.
    pub precision_margin: i64,
    pub verdict: String,
}

/// Verifies 0 → V_κ → V_κ^{an} → ⊕ V_{s_α•κ}^{an} on the truncated space.
pub fn bgg_check(kappa: &Character, degree: u32) -> Result<BggReport, LaindError> {
    let k = dominant_weight(kappa)?;
    let g = kappa.g();
    let rd = RootDatum::new(g);
    let ker = algebraic_subspace(kappa, degree)?;
    let next = theta_kernel(kappa, degree + 1)?.len();
    let mut composition_zero = true;
    for f in &ker {
        for i in 1..g {
            if !theta_alpha(i, f)?.is_zero() {
                composition_zero = false;
            }
        }
    }
    let mut commutation_holds = true;
    for i in 1..g {
        commutation_holds &= check_commutation(kappa, i, degree)?;
    }
    let slopes = small_slope_basis_slopes(&ker);
    let precision_margin = ker
        .iter()
        .map(|f| f.poly.min_precision_pi())
        .min()
        .unwrap_or(kappa.context().cap());
    let expected = rd.weyl_dimension(&k);
    let ok = composition_zero && commutation_holds && ker.len() as u64 == expected;
    Ok(BggReport {
        g,
        weight: k.clone(),
        degree,
        kernel_dim: ker.len(),
        expected_dim: expected,
        kernel_dim_next: next,
        target_weights: (1..g).map(|i| rd.dot_action(&k, i)).collect(),
        composition_zero,
        commutation_holds,
        slopes,
        precision_margin,
        verdict: if ok { "exact".into() } else { "mismatch".into() },
    })
}

fn small_slope_basis_slopes(fs: &[InducedFunction]) -> Vec<u32> {
    let mut v: Vec<u32> = fs
        .iter()
        .map(|f| {
            let g = f.g();
            f.poly
                .terms()
                .filter(|(_, c)| !c.is_zero())
                .map(|(m, _)| u_slope(g, m))
                .min()
                .unwrap_or(0)
        })
        .collect();
    v.sort_unstable();
    v
}

/// Valuation of the ∏δ_i eigenvalue on z^M: Σ (k−l) M_{k,l}.
pub fn u_slope(g: usize, m: &[u32]) -> u32 {
    coordinates(g).into_iter().zip(m).map(|((k, l), &e)| (k - l) as u32 * e).sum()
}

/// Checks p^{n+1} δ_{g−i} Θ_i = Θ_i δ_{g−i} and
/// δ_{g−i} Θ_i = p^{−(n+1)} Θ_i δ_{g−i} on every monomial of degree ≤ `degree`.
pub fn check_commutation(kappa: &Character, i: usize, degree: u32) -> Result<bool, LaindError> {
    let g = kappa.g();
    check_index(i, g, g.saturating_sub(1))?;
    let n = kappa.pairing(i).ok_or(LaindError::NonIntegralPairing(i))?;
    let ctx = kappa.context();
    let pn = PadicScalar::p_pow(ctx, n + 1);
    let pinv = pn.inverse()?;
    let j = g - i;
    for m in monomial_basis(g * (g - 1) / 2, degree) {
        let f = InducedFunction::monomial(kappa, degree, &m);
        let lhs = delta_i(j, &theta_alpha(i, &f)?)?;
        let rhs = theta_alpha(i, &delta_i(j, &f)?)?;
        if lhs.scale(&pn) != rhs || lhs != rhs.scale(&pinv) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Matrix of U = ∏_i δ_i on the monomial basis of degree ≤ `degree`,
/// optionally composed with a torus point acting on weight κ. Entries on
/// z^M are p^{Σ(k−l)M_{k,l}}; discarded columns have valuation ≥ D+1.
pub fn compact_u_matrix(
    ctx: PadicContext,
    g: usize,
    twist: Option<(&Character, &[PadicScalar])>,
    degree: u32,
) -> Result<CompactOperatorModel, LaindError> {
    if g == 0 {
        return Err(LaindError::IndexOutOfRange { i: 0, g });
    }
    let basis = monomial_basis(g * (g - 1) / 2, degree);
    let tw = match twist {
        Some((kappa, t)) => {
            if kappa.context() != ctx || kappa.g() != g {
                return Err(LaindError::SpaceMismatch);
            }
            Some(torus_factors(kappa, t)?)
        }
        None => None,
    };
    let diag: Vec<PadicScalar> = basis
        .iter()
        .map(|m| {
            let mut x = PadicScalar::p_pow(ctx, u_slope(g, m) as i64);
            if let Some((kinv, ratios)) = &tw {
                x = &x * kinv;
                for (r, &e) in ratios.iter().zip(m) {
                    if e > 0 {
                        x = &x * &r.pow(e as u64);
                    }
                }
            }
            x
        })
        .collect();
    let tail = if g == 1 { Tail::Exact } else { Tail::Bound(ctx.e() as i64 * (degree as i64 + 1)) };
    let labels = basis.iter().map(|m| monomial_label(g, m)).collect();
    Ok(CompactOperatorModel::new(Matrix::diagonal(ctx, &diag), tail)?.with_labels(labels))
}

fn monomial_label(g: usize, m: &[u32]) -> String {
    let parts: Vec<String> = coordinates(g)
        .into_iter()
        .zip(m)
        .filter(|(_, &e)| e > 0)
        .map(|((k, l), &e)| if e == 1 { format!("z{k}{l}") } else { format!("z{k}{l}^{e}") })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// Bounds v_j = k_{g−j} − k_{g−j+1} + 1 on the δ_j-slopes, j = 1..g−1.
pub fn classicity_bounds(k: &[i64]) -> Vec<i64> {
    let g = k.len();
    (1..g).map(|j| k[g - j - 1] - k[g - j] + 1).collect()
}

/// Verdict of [`classicity_filter`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Classicity {
    /// All δ-slopes are below the bounds and Θ_α f = 0 was verified.
    Classical { slopes: Vec<u32>, bounds: Vec<i64> },
    /// Some slope reaches its bound; nothing is asserted.
    NoClaim { slopes: Vec<u32>, bounds: Vec<i64> },
}

/// δ-slopes of a joint δ_j-eigenvector (j = 1..g−1).
pub fn delta_slopes(f: &InducedFunction) -> Result<Vec<u32>, LaindError> {
    let g = f.g();
    let support: Vec<&Vec<u32>> = f.poly.terms().filter(|(_, c)| !c.is_zero()).map(|(m, _)| m).collect();
    if support.is_empty() {
        return Err(LaindError::NotAnEigenvector("zero function".into()));
    }
    (1..g)
        .map(|j| {
            let s = delta_slope(g, j, support[0]);
            if support.iter().all(|m| delta_slope(g, j, m) == s) {
                Ok(s)
            } else {
                Err(LaindError::NotAnEigenvector(format!("mixed δ_{j}-slopes")))
            }
        })
        .collect()
}

/// If every δ_j-slope of the eigenvector `f` lies below v_j, verifies that
/// f is killed by every Θ_α (so lies in V_κ); otherwise makes no claim.
/// `slopes`, when given, must agree with the slopes of f.
pub fn classicity_filter(f: &InducedFunction, slopes: Option<&[u32]>) -> Result<Classicity, LaindError> {
    let k = dominant_weight(&f.kappa)?;
    let actual = delta_slopes(f)?;
    if let Some(s) = slopes {
        if s != actual.as_slice() {
            return Err(LaindError::NotAnEigenvector(format!("supplied slopes {s:?} differ from {actual:?}")));
        }
    }
    let bounds = classicity_bounds(&k);
    if actual.iter().zip(&bounds).any(|(&s, &b)| s as i64 >= b) {
        return Ok(Classicity::NoClaim { slopes: actual, bounds });
    }
    for i in 1..f.g() {
        if !theta_alpha(i, f)?.is_zero() {
            return Err(LaindError::ClassicityViolation(i));
        }
    }
    Ok(Classicity::Classical { slopes: actual, bounds })
}

/// Joint (δ, torus) eigenvectors with all δ_j-slopes below v_j, intersected
/// with ker Θ. Monomials are joint eigenvectors, so the small-slope space
/// is spanned by the monomials below the bounds.
pub fn small_slope_subspace(kappa: &Character, degree: u32) -> Result<Vec<InducedFunction>, LaindError> {
    let k = dominant_weight(kappa)?;
    let g = kappa.g();
    let ctx = kappa.context();
    let bounds = classicity_bounds(&k);
    let mons: Vec<Vec<u32>> = monomial_basis(g * (g - 1) / 2, degree)
        .into_iter()
        .filter(|m| (1..g).all(|j| (delta_slope(g, j, m) as i64) < bounds[j - 1]))
        .collect();
    let mut targets: BTreeMap<(usize, Vec<u32>), usize> = BTreeMap::new();
    let mut cols = Vec::new();
    for m in &mons {
        let f = InducedFunction::monomial(kappa, degree, m);
        let mut col = Vec::new();
        for i in 1..g {
            for (t, c) in theta_alpha(i, &f)?.poly.terms() {
                let len = targets.len();
                let r = *targets.entry((i, t.clone())).or_insert(len);
                col.push((r, c.clone()));
            }
        }
        cols.push(col);
    }
    if targets.is_empty() {
        return Ok(mons.iter().map(|m| InducedFunction::monomial(kappa, degree, m)).collect());
    }
    let mut mat = Matrix::zeros(ctx, targets.len(), mons.len());
    for (j, col) in cols.into_iter().enumerate() {
        for (r, c) in col {
            mat.set(r, j, c);
        }
    }
    Ok(mat
        .kernel()?
        .into_iter()
        .map(|v| {
            let mut f = InducedFunction::zero(kappa, degree);
            for (m, c) in mons.iter().zip(v) {
                f.poly.set(m.clone(), c);
            }
            f
        })
        .collect())
}

/// Whether the spans of two families of functions coincide.
pub fn same_span(a: &[InducedFunction], b: &[InducedFunction]) -> Result<bool, LaindError> {
    if a.is_empty() || b.is_empty() {
        return Ok(a.is_empty() && b.is_empty());
    }
    let cols: Vec<Vec<PadicScalar>> = a.iter().chain(b).map(|f| f.to_vector()).collect();
    let n = cols[0].len();
    if cols.iter().any(|c| c.len() != n) {
        return Err(LaindError::SpaceMismatch);
    }
    let build = |fs: &[Vec<PadicScalar>]| Matrix::from_fn(n, fs.len(), |i, j| fs[j][i].clone());
    let ra = build(&cols[..a.len()]).rank();
    let rb = build(&cols[a.len()..]).rank();
    let rab = build(&cols).rank();
    Ok(ra == rab && rb == rab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PadicContext {
        PadicContext::new(5, 1, 20).unwrap()
    }

    fn alg(k: &[i64]) -> Character {
        Character::algebraic(ctx(), k).unwrap()
    }

    #[test]
    fn basis_order() {
        let b = monomial_basis(2, 2);
        assert_eq!(b, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(monomial_basis(0, 3), vec![Vec::<u32>::new()]);
        assert_eq!(coordinates(3), vec![(2, 1), (3, 1), (3, 2)]);
        for (idx, (k, l)) in coordinates(4).into_iter().enumerate() {
            assert_eq!(coord_index(k, l), idx);
        }
    }

    #[test]
    fn dot_action() {
        let rd = RootDatum::new(2);
        assert_eq!(rd.dot_action(&[1, 0], 1), vec![-1, 2]);
        let rd3 = RootDatum::new(3);
        let k = [4, 1, -2];
        for i in 1..3 {
            assert_eq!(rd3.dot_action(&rd3.dot_action(&k, i), i), k.to_vec());
            let rho = rd3.rho();
            let shifted: Vec<i64> = k.iter().zip(&rho).map(|(a, b)| a + b).collect();
            let via: Vec<i64> = rd3.reflect(&shifted, i).iter().zip(&rho).map(|(a, b)| a - b).collect();
            assert_eq!(rd3.dot_action(&k, i), via);
        }
        assert_eq!(rd3.weyl_dimension(&[2, 1, 0]), 8);
        assert_eq!(RootDatum::new(2).weyl_dimension(&[3, 1]), 3);
    }

    #[test]
    fn torus_example() {
        let c = ctx();
        let kappa = alg(&[0, 0]);
        let u = PadicScalar::from_i64(c, 7);
        let f = InducedFunction::monomial(&kappa, 5, &[3]);
        let g = torus_act(&[u.clone(), PadicScalar::one(c)], &f).unwrap();
        assert_eq!(g.coeff(&[3]), u.pow(3));
        let id = [PadicScalar::one(c), PadicScalar::one(c)];
        assert_eq!(torus_act(&id, &f).unwrap(), f);
        assert!(matches!(
            torus_act(&[PadicScalar::from_i64(c, 5), PadicScalar::one(c)], &f),
            Err(LaindError::NonUnitTorusPoint(1))
        ));
    }

    #[test]
    fn delta_examples() {
        let kappa = alg(&[0, 0, 0]);
        let scaled1: Vec<(usize, usize)> =
            coordinates(3).into_iter().filter(|&(k, l)| scaled(3, 1, k, l)).collect();
        assert_eq!(scaled1, vec![(3, 1), (3, 2)]);
        let f = InducedFunction::monomial(&kappa, 4, &[1, 1, 1]);
        assert_eq!(delta_i(3, &f).unwrap(), f);
        assert!(matches!(delta_i(4, &f), Err(LaindError::IndexOutOfRange { .. })));
        let k2 = alg(&[0, 0]);
        let z3 = InducedFunction::monomial(&k2, 5, &[3]);
        assert_eq!(delta_i(1, &z3).unwrap().coeff(&[3]), PadicScalar::from_i64(ctx(), 125));
    }

    #[test]
    fn lowering_examples() {
        let f3 = LoweringField::new(3, 1).unwrap();
        assert_eq!(f3.terms(), vec![(None, (2, 1)), (Some((3, 2)), (3, 1))]);
        let one = InducedFunction::monomial(&alg(&[0, 0, 0]), 3, &[0, 0, 0]);
        assert!(f3.apply(one.series()).is_empty());
    }

    #[test]
    fn theta_examples() {
        let kappa = alg(&[1, 0]);
        let z2 = InducedFunction::monomial(&kappa, 6, &[2]);
        let t = theta_alpha(1, &z2).unwrap();
        assert_eq!(t.coeff(&[0]), PadicScalar::from_i64(ctx(), 2));
        assert_eq!(t.kappa().algebraic_weight(), Some(&[-1i64, 2][..]));
        assert!(theta_alpha(1, &InducedFunction::monomial(&kappa, 6, &[1])).unwrap().is_zero());
    }

    #[test]
    fn kernel_dimensions_g2() {
        for k in 0..=5 {
            let v = algebraic_subspace(&alg(&[k, 0]), 12).unwrap();
            assert_eq!(v.len(), k as usize + 1);
        }
        assert_eq!(algebraic_subspace(&alg(&[3, 1]), 12).unwrap().len(), 3);
        assert_eq!(algebraic_subspace(&alg(&[2, 2, 2]), 4).unwrap().len(), 1);
    }

    #[test]
    fn kernel_g3_and_truncation() {
        let r = bgg_check(&alg(&[2, 1, 0]), 10).unwrap();
        assert_eq!(r.kernel_dim, 8);
        assert_eq!(r.kernel_dim_next, 8);
        assert!(r.composition_zero && r.commutation_holds);
        assert!(matches!(
            algebraic_subspace(&alg(&[4, 0]), 2),
            Err(LaindError::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn equivariance_on_torus() {
        let c = ctx();
        let kappa = alg(&[3, 1, 0]);
        let t = [PadicScalar::from_i64(c, 2), PadicScalar::from_i64(c, 3), PadicScalar::from_i64(c, 7)];
        let mut f = InducedFunction::zero(&kappa, 6);
        for (n, m) in monomial_basis(3, 6).into_iter().enumerate() {
            f.poly.set(m, PadicScalar::from_i64(c, n as i64 * 7 + 1));
        }
        for i in 1..3 {
            let a = theta_alpha(i, &torus_act(&t, &f).unwrap()).unwrap();
            let b = torus_act(&t, &theta_alpha(i, &f).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn compact_u_slopes() {
        let c = ctx();
        let u = compact_u_matrix(c, 2, None, 5).unwrap();
        let v: Vec<i64> = (0..4).map(|i| u.matrix().get(i, i).valuation_pi().unwrap()).collect();
        assert_eq!(v, vec![0, 1, 2, 3]);
        let z31 = monomial_basis(3, 1).iter().position(|m| m == &vec![0, 1, 0]).unwrap();
        let u3 = compact_u_matrix(c, 3, None, 1).unwrap();
        assert_eq!(u3.matrix().get(z31, z31).valuation_pi(), Some(2));
    }

    #[test]
    fn classicity_g2() {
        let kappa = alg(&[3, 1]);
        for d in 0..3 {
            let f = InducedFunction::monomial(&kappa, 8, &[d]);
            assert!(matches!(classicity_filter(&f, Some(&[d])).unwrap(), Classicity::Classical { .. }));
        }
        let f = InducedFunction::monomial(&kappa, 8, &[3]);
        assert!(matches!(classicity_filter(&f, None).unwrap(), Classicity::NoClaim { .. }));
        let mixed = f.checked_sub(&InducedFunction::monomial(&kappa, 8, &[1])).unwrap();
        assert!(matches!(classicity_filter(&mixed, None), Err(LaindError::NotAnEigenvector(_))));
        let small = small_slope_subspace(&kappa, 8).unwrap();
        let alg_sub = algebraic_subspace(&kappa, 8).unwrap();
        assert_eq!(small.len(), 3);
        assert!(same_span(&small, &alg_sub).unwrap());
        let k10 = small_slope_subspace(&alg(&[1, 0]), 8).unwrap();
        assert!(k10.len() <= 2);
    }
}
