//! Dense linear-algebra helpers shared by the estimators and bound
//! computations: thin-QR projections, guarded Hermitian solves, and a
//! bracketed 1-D maximizer.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Condition number beyond which solves log a warning.
const COND_WARN: f64 = 1e12;
/// Eigenvalue ratio below which a nominally positive matrix is treated as
/// numerically singular.
const SINGULAR_REL_TOL: f64 = 1e-14;

/// Thin Q factor of `m` (orthonormal columns spanning its column space),
/// or `mkerr` if the columns are numerically dependent. Rank is judged from
/// the R diagonal, which is adequate for detecting (near-)coincident model
/// columns.
pub(crate) fn projector_basis(
    m: &DMatrix<Complex64>,
    mkerr: impl FnOnce(String) -> Error,
) -> Result<DMatrix<Complex64>> {
    let qr = m.clone().qr();
    let r = qr.r();
    let mut dmin = f64::INFINITY;
    let mut dmax: f64 = 0.0;
    for i in 0..r.nrows().min(r.ncols()) {
        let d = r[(i, i)].norm();
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    if dmax == 0.0 || dmin <= 1e-12 * dmax {
        return Err(mkerr(format!(
            "column span collapses (R diagonal ratio {:.3e})",
            if dmax == 0.0 { 0.0 } else { dmin / dmax }
        )));
    }
    Ok(qr.q())
}

/// X − Q(QᴴX), the projection of the columns of `x` onto the orthogonal
/// complement of the column space spanned by `q`.
pub(crate) fn project_out(q: &DMatrix<Complex64>, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    x - q * (q.ad_mul(x))
}

/// Solves the Hermitian positive-definite system G Z = RHS with an
/// eigenvalue guard: errors when G is numerically singular or indefinite,
/// warns when its condition number exceeds 1e12.
pub(crate) fn solve_hermitian(
    g: &DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
    what: &'static str,
    mkerr: impl FnOnce(String) -> Error,
) -> Result<DMatrix<Complex64>> {
    let eig = SymmetricEigen::new(g.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lmin > SINGULAR_REL_TOL * lmax) {
        return Err(mkerr(format!(
            "{what}: eigenvalue range [{lmin:.3e}, {lmax:.3e}]"
        )));
    }
    if lmax / lmin > COND_WARN {
        log::warn!("{what}: condition number {:.3e} exceeds 1e12", lmax / lmin);
    }
    g.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::SingularInformation {
            matrix: what,
            detail: "LU solve failed".into(),
        })
}

/// Eigenvalue range (λ_min, λ_max) of a real symmetric matrix.
pub(crate) fn symmetric_eig_range(a: &DMatrix<f64>) -> (f64, f64) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    (lmin, lmax)
}

/// Inverse of a real symmetric positive-definite matrix via an LU solve
/// against the identity, with the same guard policy as `solve_hermitian`.
/// The result is symmetrized.
pub(crate) fn invert_sym_positive(
    a: &DMatrix<f64>,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    let (lmin, lmax) = symmetric_eig_range(a);
    if !(lmin > SINGULAR_REL_TOL * lmax.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularInformation {
            matrix: what,
            detail: format!("eigenvalue range [{lmin:.3e}, {lmax:.3e}]"),
        });
    }
    if lmax / lmin > COND_WARN {
        log::warn!("{what}: condition number {:.3e} exceeds 1e12", lmax / lmin);
    }
    let n = a.nrows();
    let inv = a
        .clone()
        .lu()
        .solve(&DMatrix::<f64>::identity(n, n))
        .ok_or_else(|| Error::SingularInformation {
            matrix: what,
            detail: "LU solve failed".into(),
        })?;
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Golden-section maximization of `f` on [center − halfwidth, center + halfwidth],
/// shrinking the bracket until it is narrower than `tol`. Returns the best
/// point actually evaluated, seeded with (center, f_center), so the result
/// never scores worse than the starting point.
pub(crate) fn refine_max_1d(
    mut f: impl FnMut(f64) -> f64,
    center: f64,
    halfwidth: f64,
    f_center: f64,
    tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut best_x = center;
    let mut best_f = f_center;
    let mut a = center - halfwidth;
    let mut b = center + halfwidth;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    loop {
        if fc > best_f {
            best_f = fc;
            best_x = c;
        }
        if fd > best_f {
            best_f = fd;
            best_x = d;
        }
        if (b - a) <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    (best_x, best_f)
}

/// Number of coarse grid points g·step, g = 0..n, covering [0, span)
/// without duplicating the periodic endpoint: the last point stays
/// strictly below `span`.
pub(crate) fn coarse_grid_len(step: f64, span: f64) -> usize {
    let mut n = ((span / step).ceil().max(1.0)) as usize;
    while n > 1 && (n - 1) as f64 * step >= span {
        n -= 1;
    }
    n
}

/// Index and value of the largest element. `values` must be non-empty;
/// ties resolve to the earliest index.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}
