//! Simultaneous eigenvalues of commuting operators on the image of a
//! projector.

use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::padic::{Matrix, PadicContext, PadicScalar, Poly, ScalarRecord, GUARD_DIGITS};

/// One joint eigenvalue tuple with the dimension of its generalized
/// eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEigensystem {
    pub values: Vec<PadicScalar>,
    pub multiplicity: usize,
}

/// Serialized eigensystem (one CSV row per character).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointEigensystemRecord {
    pub values: Vec<ScalarRecord>,
    pub multiplicity: usize,
}

impl JointEigensystem {
    pub fn to_record(&self) -> JointEigensystemRecord {
        JointEigensystemRecord { values: self.values.iter().map(|v| v.to_record()).collect(), multiplicity: self.multiplicity }
    }
}

fn tolerance(ctx: PadicContext) -> i64 {
    ctx.cap() - GUARD_DIGITS as i64 * ctx.e() as i64
}

/// Matrices of `ops` on the column span of `basis` (full column rank),
/// with the loss in precision incurred by the change of basis.
fn restrict(
    ops: &[Matrix<PadicScalar>],
    basis: &Matrix<PadicScalar>,
    tol: i64,
) -> Result<(Vec<Matrix<PadicScalar>>, i64), SpectralError> {
    let r = basis.cols();
    let rows = basis.transpose().independent_columns();
    if rows.len() != r {
        return Err(SpectralError::PrecisionLoss("basis of the invariant subspace is degenerate".into()));
    }
    let br = Matrix::from_fn(r, r, |i, j| basis.get(rows[i], j).clone());
    let brinv = br.inverse()?;
    let loss = (-brinv.valuation_floor_pi()).max(0);
    let mut out = Vec::with_capacity(ops.len());
    for x in ops {
        let xb = x.checked_mul(basis)?;
        let xbr = Matrix::from_fn(r, r, |i, j| xb.get(rows[i], j).clone());
        let y = brinv.checked_mul(&xbr)?;
        if basis.checked_mul(&y)?.checked_sub(&xb)?.valuation_floor_pi() < tol - loss {
            return Err(SpectralError::NonCommutingInput);
        }
        out.push(y);
    }
    Ok((out, loss))
}

fn recurse(
    ys: &[Matrix<PadicScalar>],
    prefix: &mut Vec<PadicScalar>,
    tol: i64,
    out: &mut Vec<JointEigensystem>,
) -> Result<(), SpectralError> {
    let Some(y) = ys.first() else {
        return Ok(());
    };
    let r = y.rows();
    let ctx = y.get(0, 0).context();
    // scale to an integral matrix so that its eigenvalues are integral
    let s = (-y.valuation_floor_pi()).max(0);
    let ys0 = if s > 0 { y.scale(&PadicScalar::uniformizer_pow(ctx, s)) } else { y.clone() };
    let c = ys0.fredholm_coefficients(r, &PadicScalar::one(ctx));
    let chi = Poly::new(ctx, c).reversed(r);
    let roots = chi.integral_roots();
    if roots.iter().map(|(_, m)| m).sum::<usize>() != r {
        return Err(SpectralError::EigenvaluesOutsideField);
    }
    let unscale = PadicScalar::uniformizer_pow(ctx, -s);
    for (mu, k) in roots {
        let chop = tol.min(mu.abs_precision_pi() - GUARD_DIGITS as i64 * ctx.e() as i64);
        let shifted = ys0.checked_sub(&Matrix::identity(ctx, r).scale(&mu))?;
        let mut pow = shifted.clone();
        for _ in 1..k {
            pow = pow.checked_mul(&shifted)?;
        }
        let ker = pow.chop(chop).kernel()?;
        if ker.len() != k {
            return Err(SpectralError::PrecisionLoss(format!(
                "generalized eigenspace has dimension {} instead of {k}",
                ker.len()
            )));
        }
        let value = if s > 0 { &mu * &unscale } else { mu.clone() };
        prefix.push(value);
        if ys.len() == 1 {
            out.push(JointEigensystem { values: prefix.clone(), multiplicity: k });
        } else {
            let w = Matrix::from_fn(r, k, |i, j| ker[j][i].clone());
            let (rest, loss) = restrict(&ys[1..], &w, chop)?;
            recurse(&rest, prefix, chop - loss, out)?;
        }
        prefix.pop();
    }
    Ok(())
}

/// Joint eigenvalue tuples of commuting operators on im e, one entry per
/// joint generalized eigenspace.
pub fn joint_eigensystems(
    ops: &[Matrix<PadicScalar>],
    e: &Matrix<PadicScalar>,
) -> Result<Vec<JointEigensystem>, SpectralError> {
    if ops.is_empty() {
        return Ok(Vec::new());
    }
    let ctx = e.get(0, 0).context();
    let tol = tolerance(ctx);
    let ec = e.chop(tol);
    let cols = ec.independent_columns();
    if cols.is_empty() {
        return Ok(Vec::new());
    }
    let basis = Matrix::from_fn(e.rows(), cols.len(), |i, j| ec.get(i, cols[j]).clone());
    let (ys, loss) = restrict(ops, &basis, tol)?;
    let ctol = tol - 2 * loss;
    for a in 0..ys.len() {
        for b in a + 1..ys.len() {
            let c = ys[a].checked_mul(&ys[b])?.checked_sub(&ys[b].checked_mul(&ys[a])?)?;
            if c.valuation_floor_pi() < ctol {
                return Err(SpectralError::NonCommutingInput);
            }
        }
    }
    let mut out = Vec::new();
    recurse(&ys, &mut Vec::new(), ctol, &mut out)?;
    Ok(out)
}
