//! Dense complex-matrix kernels shared by every instance kind.
//!
//! Thin wrappers over nalgebra for the primitives the library needs:
//! checked inversion with singular-value diagnostics, general complex
//! eigenvalues, hermitian eigendecompositions, principal square roots,
//! matrix exponentials and orthonormal range bases.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Smallest and largest singular values. Falls back to the hermitian
/// eigenvalues of m^H m when the SVD iteration stalls.
pub fn sv_extremes(m: &CMat) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    if let Some(svd) = m.clone().try_svd(false, false, 1e-14, 5000) {
        let sv = svd.singular_values;
        let mut smin = f64::INFINITY;
        let mut smax: f64 = 0.0;
        for s in sv.iter() {
            smin = smin.min(*s);
            smax = smax.max(*s);
        }
        (smin, smax)
    } else {
        let gram = m.adjoint() * m;
        let ev = gram.symmetric_eigen().eigenvalues;
        let mut smin = f64::INFINITY;
        let mut smax: f64 = 0.0;
        for l in ev.iter() {
            let s = l.max(0.0).sqrt();
            smin = smin.min(s);
            smax = smax.max(s);
        }
        (smin, smax)
    }
}

/// LU-based inverse; `None` when the factorization breaks down.
pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse().filter(all_finite)
}

/// Eigenvalues of a general complex square matrix.
///
/// nalgebra's Schur handles the complex case directly; the fallback walks
/// the quasi-triangular form and resolves any residual 2x2 blocks by hand.
pub fn eigenvalues(m: &CMat) -> Option<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    if n == 1 {
        return Some(vec![m[(0, 0)]]);
    }
    if let Some(ev) = m.clone().eigenvalues() {
        return Some(ev.iter().copied().collect());
    }
    let schur = m.clone().try_schur(1e-13, 20000)?;
    let (_, t) = schur.unpack();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].norm() > 1e-13 * (t[(i, i)].norm() + t[(i + 1, i + 1)].norm()).max(1.0) {
            // unresolved 2x2 block: quadratic formula
            let a = t[(i, i)];
            let b = t[(i, i + 1)];
            let cc = t[(i + 1, i)];
            let d = t[(i + 1, i + 1)];
            let tr = a + d;
            let det = a * d - b * cc;
            let disc = (tr * tr - cr(4.0) * det).sqrt();
            out.push((tr + disc) * cr(0.5));
            out.push((tr - disc) * cr(0.5));
            i += 2;
        } else {
            out.push(t[(i, i)]);
            i += 1;
        }
    }
    Some(out)
}

/// Eigendecomposition of a hermitian matrix: real eigenvalues plus a
/// unitary eigenvector matrix `v` with m = v diag(lambda) v^H.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let se = m.clone().symmetric_eigen();
    (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
}

/// Principal square root of a hermitian positive-definite matrix.
pub fn hermitian_sqrt(m: &CMat) -> Option<CMat> {
    let (vals, vecs) = hermitian_eigen(m);
    if vals.iter().any(|l| *l <= 0.0) {
        return None;
    }
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|l| cr(l.sqrt())),
    ));
    Some(&vecs * d * vecs.adjoint())
}

/// Principal square root of a general matrix with spectrum off (-inf, 0],
/// via complex Schur and the triangular square-root recurrence.
pub fn principal_sqrt(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    if n == 0 {
        return Some(m.clone());
    }
    let schur = m.clone().try_schur(1e-14, 20000)?;
    let (q, t) = schur.unpack();
    // reject if the form kept a genuinely coupled 2x2 block
    for i in 0..n - 1 {
        if t[(i + 1, i)].norm() > 1e-10 * t.norm().max(1.0) {
            return None;
        }
    }
    let mut u = zeros(n);
    for i in 0..n {
        let root = t[(i, i)].sqrt();
        if root.re <= 0.0 && root.norm() > 0.0 && t[(i, i)].re < 0.0 && t[(i, i)].im.abs() < 1e-14 {
            return None; // spectrum touches the cut
        }
        u[(i, i)] = root;
    }
    for off in 1..n {
        for i in 0..n - off {
            let j = i + off;
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= u[(i, k)] * u[(k, j)];
            }
            let denom = u[(i, i)] + u[(j, j)];
            if denom.norm() < 1e-300 {
                return None;
            }
            u[(i, j)] = s / denom;
        }
    }
    let res = &q * u * q.adjoint();
    if all_finite(&res) {
        Some(res)
    } else {
        None
    }
}

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
pub fn expm(m: &CMat) -> CMat {
    let n = m.nrows();
    let norm = m.norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.map(|z| z / cr(2f64.powi(s as i32)));
    let mut term = identity(n);
    let mut acc = identity(n);
    for k in 1..=24 {
        term = &term * &scaled / cr(k as f64);
        acc += &term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        acc = &acc * &acc;
    }
    acc
}

/// QR with the R diagonal normalized to be real positive.
/// Zero (or numerically tiny) diagonal entries keep phase 1.
pub fn qr_positive(m: &CMat) -> (CMat, CMat) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let k = r.nrows().min(r.ncols());
    for j in 0..k {
        let d = r[(j, j)];
        if d.norm() > 1e-300 {
            let phase = d / cr(d.norm());
            for i in 0..q.nrows() {
                q[(i, j)] *= phase;
            }
            let ph_conj = phase.conj();
            for l in 0..r.ncols() {
                r[(j, l)] *= ph_conj;
            }
        }
    }
    (q, r)
}

/// Orthonormal basis of the range of an idempotent matrix with the given
/// rank, from a column-pivoted QR.
pub fn range_basis(p: &CMat, rank: usize) -> CMat {
    let n = p.nrows();
    debug_assert!(rank <= n);
    let qr = p.clone().col_piv_qr();
    let q = qr.q();
    q.columns(0, rank).into_owned()
}

/// Rank of an idempotent read off its trace.
pub fn idempotent_rank(p: &CMat) -> usize {
    let tr: Complex64 = p.diagonal().iter().sum();
    tr.re.round().max(0.0) as usize
}

/// One-sided Hausdorff distance from `a` to `b`: sup over a of dist to b.
pub fn directed_hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = f64::INFINITY;
        for y in b {
            best = best.min((x - y).norm());
        }
        if b.is_empty() {
            best = f64::INFINITY;
        }
        worst = worst.max(best);
    }
    worst
}

/// Symmetric Hausdorff distance between two finite spectra.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Collapse numerically coincident spectrum points (multiplicity removal).
pub fn dedup_points(points: &mut Vec<Complex64>, tol: f64) {
    points.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut out: Vec<Complex64> = Vec::with_capacity(points.len());
    for p in points.iter() {
        if out.iter().all(|q| (p - q).norm() > tol) {
            out.push(*p);
        }
    }
    *points = out;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(n: usize, data: &[f64]) -> CMat {
        CMat::from_fn(n, n, |i, j| cr(data[i * n + j]))
    }

    #[test]
    fn inverse_and_extremes() {
        let m = mat(2, &[2.0, 1.0, 1.0, 1.0]);
        let inv = inverse(&m).unwrap();
        assert!((inv.clone() * &m - identity(2)).norm() < 1e-12);
        let (smin, smax) = sv_extremes(&m);
        assert!(smin > 0.0 && smax >= smin);
    }

    #[test]
    fn eigenvalues_rotation() {
        let m = mat(2, &[0.0, 1.0, -1.0, 0.0]);
        let mut ev = eigenvalues(&m).unwrap();
        dedup_points(&mut ev, 1e-10);
        assert_eq!(ev.len(), 2);
        assert!(ev.iter().any(|l| (l - I).norm() < 1e-12));
        assert!(ev.iter().any(|l| (l + I).norm() < 1e-12));
    }

    #[test]
    fn hermitian_sqrt_squares_back() {
        let m = mat(2, &[5.0, 3.0, 3.0, 2.0]);
        let r = hermitian_sqrt(&m).unwrap();
        assert!((&r * &r - &m).norm() < 1e-12);
        assert!((&r - r.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn principal_sqrt_matches_hermitian_path() {
        let m = mat(3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let a = principal_sqrt(&m).unwrap();
        let b = hermitian_sqrt(&m).unwrap();
        assert!((&a - &b).norm() < 1e-9);
    }

    #[test]
    fn principal_sqrt_nonnormal() {
        let m = mat(2, &[1.0, 3.0, 0.0, 4.0]);
        let a = principal_sqrt(&m).unwrap();
        assert!((&a * &a - &m).norm() < 1e-11);
    }

    #[test]
    fn expm_scalar_and_nilpotent() {
        let m = mat(1, &[1.0]);
        assert!((expm(&m)[(0, 0)] - cr(std::f64::consts::E)).norm() < 1e-12);
        let nil = mat(2, &[0.0, 1.0, 0.0, 0.0]);
        let e = expm(&nil);
        assert!((e - mat(2, &[1.0, 1.0, 0.0, 1.0])).norm() < 1e-14);
    }

    #[test]
    fn qr_positive_diagonal() {
        let m = CMat::from_fn(3, 3, |i, j| c((i + 2 * j) as f64 - 2.0, (i * j) as f64));
        let (q, r) = qr_positive(&m);
        assert!((&q * &r - &m).norm() < 1e-12);
        assert!((q.adjoint() * &q - identity(3)).norm() < 1e-12);
        for j in 0..3 {
            assert!(r[(j, j)].im.abs() < 1e-12);
            assert!(r[(j, j)].re > 0.0);
        }
    }

    #[test]
    fn range_basis_spans_projection() {
        // oblique idempotent [[1,1],[0,0]]
        let p = mat(2, &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(idempotent_rank(&p), 1);
        let u = range_basis(&p, 1);
        // range of p is span(e1)
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(u[(1, 0)].norm() < 1e-12);
    }

    #[test]
    fn hausdorff_sets() {
        let a = vec![cr(0.0), cr(1.0)];
        let b = vec![cr(0.0), cr(1.0), cr(1.5)];
        assert!((hausdorff(&a, &b) - 0.5).abs() < 1e-15);
    }
}
