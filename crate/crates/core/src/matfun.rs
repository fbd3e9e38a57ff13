//! Principal matrix functions of small dense complex matrices.
//!
//! `f(A) = X f(Λ) X⁻¹` from the Schur form when the eigenvector matrix is
//! well conditioned, otherwise the function is evaluated on the triangular
//! Schur factor directly.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::{Complex, ComplexField};

use crate::error::{Error, Result};
use crate::scalar::{lit, CMat, Mat, Real, Vector, C};

/// Eigenvector condition number above which the Schur route is used.
pub const EIGVEC_COND_MAX: f64 = 1e8;

struct Decomposition<T: Real> {
    q: CMat<T>,
    t: CMat<T>,
    eigvec: Option<(CMat<T>, CMat<T>)>,
}

/// Eigenvalues and (column) eigenvectors of a general complex matrix.
#[derive(Debug, Clone)]
pub struct Eigen<T: Real> {
    pub values: Vec<C<T>>,
    pub vectors: CMat<T>,
    pub cond: T,
}

fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

fn cre<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

fn schur<T: Real>(a: &CMat<T>) -> Result<(CMat<T>, CMat<T>)> {
    if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NumericalBreakdown("non-finite matrix entry".into()));
    }
    let n = a.nrows();
    if n == 1 {
        return Ok((CMat::identity(1, 1), a.clone()));
    }
    let s = Schur::try_new(a.clone(), T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::NumericalBreakdown("Schur iteration did not converge".into()))?;
    let (q, mut t) = s.unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = czero();
        }
    }
    Ok((q, t))
}

fn triangular_eigvecs<T: Real>(t: &CMat<T>) -> CMat<T> {
    let n = t.nrows();
    let scale = t.norm().max(T::one());
    let small = scale * T::default_epsilon();
    let mut y = CMat::<T>::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = cre(T::one());
        for i in (0..k).rev() {
            let mut s: C<T> = czero();
            for j in i + 1..=k {
                s += t[(i, j)] * y[(j, k)];
            }
            let mut d = t[(i, i)] - t[(k, k)];
            if d.modulus() < small {
                d = cre(small);
            }
            y[(i, k)] = -s / d;
        }
    }
    y
}

fn decompose<T: Real>(a: &CMat<T>) -> Result<Decomposition<T>> {
    let (q, t) = schur(a)?;
    let mut x = &q * triangular_eigvecs(&t);
    for mut col in x.column_iter_mut() {
        let nrm = col.norm();
        if nrm > T::zero() {
            col /= cre(nrm);
        }
    }
    let eigvec = x.clone().try_inverse().and_then(|xi| {
        let cond = x.norm() * xi.norm();
        (cond.is_finite() && cond <= lit(EIGVEC_COND_MAX)).then_some((x, xi))
    });
    Ok(Decomposition { q, t, eigvec })
}

/// General eigendecomposition. `cond` is the Frobenius condition number of
/// the normalized eigenvector matrix (infinite when it is singular).
pub fn eig<T: Real>(a: &CMat<T>) -> Result<Eigen<T>> {
    let (q, t) = schur(a)?;
    let mut x = &q * triangular_eigvecs(&t);
    for mut col in x.column_iter_mut() {
        let nrm = col.norm();
        if nrm > T::zero() {
            col /= cre(nrm);
        }
    }
    let cond = match x.clone().try_inverse() {
        Some(xi) => x.norm() * xi.norm(),
        None => T::max_value().unwrap_or_else(|| lit(f64::MAX)),
    };
    Ok(Eigen { values: t.diagonal().iter().copied().collect(), vectors: x, cond })
}

/// Eigenvalues only.
pub fn eigenvalues<T: Real>(a: &CMat<T>) -> Result<Vec<C<T>>> {
    let (_, t) = schur(a)?;
    Ok(t.diagonal().iter().copied().collect())
}

fn on_branch_cut<T: Real>(z: C<T>) -> bool {
    let m = z.modulus();
    z.re <= T::zero() && z.im.abs() <= lit::<T>(1e-12) * m.max(T::one())
}

fn apply_diag<T: Real>(x: &CMat<T>, xi: &CMat<T>, vals: &[C<T>]) -> CMat<T> {
    let mut xs = x.clone();
    for (j, mut col) in xs.column_iter_mut().enumerate() {
        col *= vals[j];
    }
    xs * xi
}

fn sqrt_triangular<T: Real>(t: &CMat<T>) -> CMat<T> {
    let n = t.nrows();
    let mut r = CMat::<T>::zeros(n, n);
    for j in 0..n {
        r[(j, j)] = ComplexField::sqrt(t[(j, j)]);
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            let d = r[(i, i)] + r[(j, j)];
            r[(i, j)] = if d.modulus() > T::zero() { s / d } else { czero() };
        }
    }
    r
}

fn log_triangular<T: Real>(t: &CMat<T>) -> Result<CMat<T>> {
    let n = t.nrows();
    let id = CMat::<T>::identity(n, n);
    let mut r = t.clone();
    let mut k = 0u32;
    while (&r - &id).norm() > lit(0.25) {
        if k > 100 {
            return Err(Error::NumericalBreakdown("inverse scaling did not converge".into()));
        }
        r = sqrt_triangular(&r);
        k += 1;
    }
    let z = (&r - &id)
        * (&r + &id)
            .try_inverse()
            .ok_or_else(|| Error::NumericalBreakdown("singular Cayley transform".into()))?;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z;
    for m in 1..400 {
        term = &term * &z2;
        let add = &term * cre(T::one() / lit::<T>((2 * m + 1) as f64));
        sum += &add;
        if add.norm() <= T::default_epsilon() * sum.norm() {
            break;
        }
    }
    Ok(sum * cre(lit::<T>(2.0) * lit::<T>(2f64.powi(k as i32))))
}

fn exp_taylor<T: Real>(a: &CMat<T>) -> CMat<T> {
    let n = a.nrows();
    let nrm = a.norm();
    let mut s = 0i32;
    while nrm / lit::<T>(2f64.powi(s)) > lit(0.5) {
        s += 1;
    }
    let b = a * cre(T::one() / lit::<T>(2f64.powi(s)));
    let mut sum = CMat::<T>::identity(n, n);
    let mut term = sum.clone();
    for k in 1..100 {
        term = &term * &b * cre(T::one() / lit::<T>(k as f64));
        sum += &term;
        if term.norm() <= T::default_epsilon() * sum.norm() {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn conj_back<T: Real>(q: &CMat<T>, f: CMat<T>) -> CMat<T> {
    q * f * q.adjoint()
}

/// Principal square root. Fails when an eigenvalue lies on `(-∞, 0]`.
pub fn sqrtm<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    let d = decompose(a)?;
    let vals: Vec<C<T>> = d.t.diagonal().iter().copied().collect();
    if vals.iter().any(|&z| on_branch_cut(z)) {
        return Err(Error::BranchCutEigenvalue);
    }
    Ok(match &d.eigvec {
        Some((x, xi)) => {
            let f: Vec<C<T>> = vals.iter().map(|&z| ComplexField::sqrt(z)).collect();
            apply_diag(x, xi, &f)
        }
        None => conj_back(&d.q, sqrt_triangular(&d.t)),
    })
}

/// Principal logarithm. Fails when an eigenvalue lies on `(-∞, 0]`.
pub fn logm<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    let d = decompose(a)?;
    let vals: Vec<C<T>> = d.t.diagonal().iter().copied().collect();
    if vals.iter().any(|&z| on_branch_cut(z)) {
        return Err(Error::BranchCutEigenvalue);
    }
    match &d.eigvec {
        Some((x, xi)) => {
            let f: Vec<C<T>> = vals.iter().map(|&z| ComplexField::ln(z)).collect();
            Ok(apply_diag(x, xi, &f))
        }
        None => Ok(conj_back(&d.q, log_triangular(&d.t)?)),
    }
}

/// Matrix exponential.
pub fn expm<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    let d = decompose(a)?;
    Ok(match &d.eigvec {
        Some((x, xi)) => {
            let f: Vec<C<T>> = d.t.diagonal().iter().map(|&z| ComplexField::exp(z)).collect();
            apply_diag(x, xi, &f)
        }
        None => conj_back(&d.q, exp_taylor(&d.t)),
    })
}

/// `(e^A − 1) A⁻¹`, read off the exponential of `[[A, 1], [0, 0]]`.
pub fn exprel<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    let n = a.nrows();
    let mut big = CMat::<T>::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    big.view_mut((0, n), (n, n)).fill_with_identity();
    let e = exp_taylor(&big);
    Ok(e.view((0, n), (n, n)).into_owned())
}

/// Real symmetric eigendecomposition, eigenvalues ascending.
pub fn sym_eig<T: Real>(a: &Mat<T>) -> (Vector<T>, Mat<T>) {
    let se = SymmetricEigen::new(a.clone());
    let n = a.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = Vector::from_iterator(n, idx.iter().map(|&i| se.eigenvalues[i]));
    let vecs = Mat::from_fn(n, n, |r, c| se.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Function of a real symmetric matrix through its eigenvalues.
pub fn sym_fn<T: Real>(a: &Mat<T>, f: impl Fn(T) -> T) -> Mat<T> {
    let (vals, vecs) = sym_eig(a);
    let fv = Mat::from_diagonal(&vals.map(f));
    &vecs * fv * vecs.transpose()
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn herm_eig<T: Real>(a: &CMat<T>) -> (Vector<T>, CMat<T>) {
    let h = (a + a.adjoint()) * cre(lit::<T>(0.5));
    let se = SymmetricEigen::new(h);
    let n = a.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = Vector::from_iterator(n, idx.iter().map(|&i| se.eigenvalues[i]));
    let vecs = CMat::from_fn(n, n, |r, c| se.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Function of a Hermitian matrix through its eigenvalues.
pub fn herm_fn<T: Real>(a: &CMat<T>, f: impl Fn(T) -> T) -> CMat<T> {
    let (vals, vecs) = herm_eig(a);
    let mut scaled = vecs.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= cre(f(vals[j]));
    }
    scaled * vecs.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::complexify;

    fn cm(rows: usize, data: &[f64]) -> CMat<f64> {
        complexify(&Mat::from_row_slice(rows, rows, data))
    }

    #[test]
    fn sqrt_of_diagonal() {
        let r = sqrtm(&cm(2, &[1.0, 0.0, 0.0, 9.0])).unwrap();
        assert!((r - cm(2, &[1.0, 0.0, 0.0, 3.0])).norm() < 1e-14);
    }

    #[test]
    fn sqrt_of_scaled_identity_uses_fallback_or_not() {
        let r = sqrtm(&cm(2, &[4.0, 0.0, 0.0, 4.0])).unwrap();
        assert!((r - cm(2, &[2.0, 0.0, 0.0, 2.0])).norm() < 1e-14);
    }

    #[test]
    fn sqrt_rejects_negative_eigenvalue() {
        assert_eq!(sqrtm(&cm(2, &[-1.0, 0.0, 0.0, 1.0])), Err(Error::BranchCutEigenvalue));
        assert_eq!(logm(&cm(2, &[0.0, 0.0, 0.0, 1.0])), Err(Error::BranchCutEigenvalue));
    }

    #[test]
    fn sqrt_squares_back_spd() {
        let b = Mat::from_fn(4, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.4);
        let a = &b * b.transpose() + Mat::identity(4, 4);
        let ca = complexify(&a);
        let r = sqrtm(&ca).unwrap();
        assert!((&r * &r - &ca).norm() / ca.norm() < 1e-11);
    }

    #[test]
    fn jordan_block_takes_schur_route() {
        let a = cm(3, &[2.0, 1.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0, 2.0]);
        let r = sqrtm(&a).unwrap();
        assert!((&r * &r - &a).norm() < 1e-13);
        let l = logm(&a).unwrap();
        let back = expm(&l).unwrap();
        assert!((back - &a).norm() < 1e-12);
    }

    #[test]
    fn exp_log_roundtrip() {
        let a = cm(3, &[0.3, -0.2, 0.1, 0.5, 0.1, 0.0, -0.2, 0.4, -0.6]);
        let e = expm(&a).unwrap();
        let l = logm(&e).unwrap();
        assert!((l - a).norm() < 1e-13);
    }

    #[test]
    fn exp_of_rotation_generator() {
        let t = 0.7f64;
        let a = cm(2, &[0.0, t, -t, 0.0]);
        let e = expm(&a).unwrap();
        let want = cm(2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        assert!((e - want).norm() < 1e-14);
    }

    #[test]
    fn exprel_scalar_and_zero() {
        let z = exprel(&cm(2, &[0.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((z - cm(2, &[1.0, 0.0, 0.0, 1.0])).norm() < 1e-15);
        let z = exprel(&cm(1, &[2.0])).unwrap();
        assert!((z[(0, 0)].re - (2f64.exp() - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_decomposition_reconstructs() {
        let a = cm(3, &[1.0, 2.0, 0.0, -1.0, 0.5, 0.3, 0.2, 0.0, 2.0]);
        let e = eig(&a).unwrap();
        for (j, col) in e.vectors.column_iter().enumerate() {
            assert!((&a * col - col * e.values[j]).norm() < 1e-13);
        }
        assert!(e.cond < 1e3);
    }

    #[test]
    fn hermitian_function() {
        let a = cm(2, &[2.0, 1.0, 1.0, 2.0]);
        let s = herm_fn(&a, |x| x.sqrt());
        assert!((&s * &s - &a).norm() < 1e-14);
        let r = sym_fn(&Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]), |x| x.sqrt());
        assert!((&r * &r - Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).norm() < 1e-14);
    }

    #[test]
    fn works_in_single_precision() {
        let a = complexify(&Mat::<f32>::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]));
        let r = sqrtm(&a).unwrap();
        assert!((&r * &r - &a).norm() < 1e-5);
    }
}
