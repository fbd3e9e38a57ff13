//! Truncated Fock-space brute force: dense density matrices, the literal
//! `M̂` operator, fidelity, POVM statistics and symmetric logarithmic
//! derivatives.

use nalgebra::{Complex, ComplexField};

use crate::error::{Error, Result};
use crate::fidelity::Distribution;
use crate::matfun::{herm_eig, herm_fn};
use crate::scalar::{lit, to_f64, CMat, Mat, Real, Vector, C};
use crate::symplectic::GaussianState;

/// Largest trace lost to truncation for a usable state.
pub const MAX_TRACE_DEFICIT: f64 = 1e-6;
/// Eigenvalues of `ρ₁` below this fraction of the largest are outside its support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Condition number of `ρ₁` above which `M̂` needs an explicit pseudo-inverse opt-in.
pub const MAX_CONDITION: f64 = 1e14;
/// Completeness tolerance for POVMs.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Bins used to discretize homodyne outcomes.
pub const HOMODYNE_BINS: usize = 801;
/// Half-width of the homodyne window in standard deviations.
pub const HOMODYNE_SIGMAS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix<T: Real = f64> {
    pub cutoff: usize,
    pub rho: CMat<T>,
    /// `1 − Tr ρ` before renormalization.
    pub trace_deficit: T,
}

fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

/// Annihilation operator on `n` levels.
pub fn annihilation<T: Real>(n: usize) -> CMat<T> {
    let mut a = CMat::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c(lit::<T>(k as f64).sqrt(), T::zero());
    }
    a
}

/// Truncated `(x̂, p̂)`, `x̂ = (â + â†)/√2`, `p̂ = (â − â†)/(i√2)`.
pub fn quadratures<T: Real>(n: usize) -> (CMat<T>, CMat<T>) {
    let a = annihilation::<T>(n);
    let ad = a.adjoint();
    let s = lit::<T>(0.5).sqrt();
    let x = (&a + &ad) * c(s, T::zero());
    let p = (&a - &ad) * c(T::zero(), -s);
    (x, p)
}

fn number_operator<T: Real>(n: usize) -> CMat<T> {
    CMat::from_diagonal(&nalgebra::DVector::from_fn(n, |k, _| c(lit::<T>(k as f64), T::zero())))
}

/// `exp(A)` for anti-Hermitian `A`, through the Hermitian `−iA`.
fn exp_anti_hermitian<T: Real>(a: &CMat<T>) -> CMat<T> {
    let h = a * c(T::zero(), -T::one());
    let (vals, vecs) = herm_eig(&h);
    let mut scaled = vecs.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let (s, co) = vals[j].sin_cos();
        col *= c(co, s);
    }
    scaled * vecs.adjoint()
}

/// `D(α) = exp(αâ† − α*â)` on `n` levels.
pub fn displacement_operator<T: Real>(alpha: C<T>, n: usize) -> CMat<T> {
    let a = annihilation::<T>(n);
    let gen = a.adjoint() * alpha - a * alpha.conj();
    exp_anti_hermitian(&gen)
}

/// `exp((ξâ†² − ξ*â²)/2)`, `ξ = r e^{iθ}`: anti-squeezes along angle θ/2.
pub fn squeeze_operator<T: Real>(r: T, theta: T, n: usize) -> CMat<T> {
    let a = annihilation::<T>(n);
    let a2 = &a * &a;
    let (s, co) = theta.sin_cos();
    let xi = c(r * co, r * s);
    let gen = (a2.adjoint() * xi - a2 * xi.conj()) * c(lit::<T>(0.5), T::zero());
    exp_anti_hermitian(&gen)
}

/// `e^{−iφn̂}`.
pub fn rotation_operator<T: Real>(phi: T, n: usize) -> CMat<T> {
    CMat::from_diagonal(&nalgebra::DVector::from_fn(n, |k, _| {
        let (s, co) = (phi * lit::<T>(k as f64)).sin_cos();
        c(co, -s)
    }))
}

fn work_dim(cutoff: usize) -> usize {
    2 * cutoff + 20
}

/// Dense `D(α) S ρ_th(n̄) S† D(α)†` truncated to `cutoff` levels.
pub fn build_state<T: Real>(nbar: T, r: T, theta_s: T, alpha: C<T>, cutoff: usize) -> Result<FockDensityMatrix<T>> {
    if cutoff < 2 {
        return Err(Error::InvalidArgument("cutoff must be at least 2".into()));
    }
    if !(nbar >= T::zero()) {
        return Err(Error::DomainError("nbar must be non-negative".into()));
    }
    let m = work_dim(cutoff);
    let mut thermal = CMat::<T>::zeros(m, m);
    if nbar == T::zero() {
        thermal[(0, 0)] = c(T::one(), T::zero());
    } else {
        let x = nbar / (nbar + T::one());
        let mut p = T::one() / (nbar + T::one());
        for k in 0..m {
            thermal[(k, k)] = c(p, T::zero());
            p *= x;
        }
    }
    let u = displacement_operator(alpha, m) * squeeze_operator(r, theta_s, m);
    let full = &u * thermal * u.adjoint();
    let mut rho = full.view((0, 0), (cutoff, cutoff)).into_owned();
    let tr = rho.trace().re;
    let deficit = T::one() - tr;
    if deficit > lit(MAX_TRACE_DEFICIT) {
        return Err(Error::CutoffTooSmall { deficit: to_f64(deficit) });
    }
    rho /= c(tr, T::zero());
    let rho = (&rho + rho.adjoint()) * c(lit::<T>(0.5), T::zero());
    Ok(FockDensityMatrix { cutoff, rho, trace_deficit: deficit.max(T::zero()) })
}

/// Builder parameters `(n̄, r, θ_s, α)` of a single-mode Gaussian state.
pub fn builder_parameters<T: Real>(state: &GaussianState<T>) -> Result<(T, T, T, C<T>)> {
    if state.n_modes() != 1 {
        return Err(Error::NotSingleMode);
    }
    let v = state.cov();
    let nu = v.determinant().sqrt();
    let nbar = (nu - lit::<T>(0.5)).max(T::zero());
    let (a, b, d) = (v[(0, 0)] / nu, v[(0, 1)] / nu, v[(1, 1)] / nu);
    let tr = a + d;
    // eigenvalues of the unit-determinant matrix are e^{±2r}
    let r = ((tr * lit::<T>(0.5)).max(T::one())).acosh() * lit::<T>(0.5);
    let theta_s = (b * lit::<T>(2.0)).atan2(a - d);
    let s = lit::<T>(0.5).sqrt();
    let alpha = c(state.mean()[0] * s, state.mean()[1] * s);
    Ok((nbar, r, theta_s, alpha))
}

/// Dense density matrix of an arbitrary single-mode Gaussian state.
pub fn build_from_gaussian<T: Real>(state: &GaussianState<T>, cutoff: usize) -> Result<FockDensityMatrix<T>> {
    let (nbar, r, theta_s, alpha) = builder_parameters(state)?;
    build_state(nbar, r, theta_s, alpha, cutoff)
}

/// Quadrature moments `(⟨Q⟩, ½⟨{ΔQ_j, ΔQ_k}⟩)` of a dense state.
pub fn moments<T: Real>(rho: &FockDensityMatrix<T>) -> (Vector<T>, Mat<T>) {
    let (x, p) = quadratures::<T>(rho.cutoff);
    let q = [x, p];
    let mean = Vector::from_fn(2, |j, _| (&rho.rho * &q[j]).trace().re);
    let cov = Mat::from_fn(2, 2, |j, k| {
        let sym = (&q[j] * &q[k] + &q[k] * &q[j]) * c(lit::<T>(0.5), T::zero());
        (&rho.rho * sym).trace().re - mean[j] * mean[k]
    });
    (mean, cov)
}

/// `M̂` restricted to the support of `ρ₁`, with its eigenbasis.
#[derive(Debug, Clone)]
pub struct FockMOperator<T: Real = f64> {
    pub m: CMat<T>,
    /// Eigenvalues of `M̂` on the support of `ρ₁`, ascending.
    pub eigenvalues: Vector<T>,
    /// Corresponding eigenvectors as columns.
    pub eigenvectors: CMat<T>,
    /// Projector onto the orthogonal complement of the support, if non-trivial.
    pub complement: Option<CMat<T>>,
}

/// Eigenvectors of `ρ₁` above the support threshold.
struct SupportFrame<T: Real> {
    p: Vec<T>,
    us: CMat<T>,
    cond: T,
}

impl<T: Real> SupportFrame<T> {
    fn new(rho1: &FockDensityMatrix<T>) -> Self {
        let n = rho1.cutoff;
        let (p, u) = herm_eig(&rho1.rho);
        let pmax = p[n - 1];
        let cond = if p[0] > T::zero() { pmax / p[0] } else { lit(f64::INFINITY) };
        let cut = pmax * lit::<T>(SUPPORT_THRESHOLD);
        let keep: Vec<usize> = (0..n).filter(|&k| p[k] > cut).collect();
        let us = CMat::from_fn(n, keep.len(), |r, j| u[(r, keep[j])]);
        SupportFrame { p: keep.iter().map(|&j| p[j]).collect(), us, cond }
    }

    /// `√(ρ₁^{1/2}ρ₀ρ₁^{1/2})` in the support eigenbasis.
    fn sqrt_k(&self, rho0: &FockDensityMatrix<T>) -> CMat<T> {
        let k = self.p.len();
        let r0 = self.us.adjoint() * &rho0.rho * &self.us;
        let kmat = CMat::from_fn(k, k, |i, j| r0[(i, j)] * c((self.p[i] * self.p[j]).sqrt(), T::zero()));
        herm_sqrt(&kmat)
    }
}

/// `M̂ = ρ₁^{-1/2}√(ρ₁^{1/2}ρ₀ρ₁^{1/2})ρ₁^{-1/2}`, evaluated in the eigenbasis
/// of `ρ₁`. Rank-deficient `ρ₁` needs `allow_pseudo_inverse`.
pub fn m_operator_fock<T: Real>(
    rho0: &FockDensityMatrix<T>,
    rho1: &FockDensityMatrix<T>,
    allow_pseudo_inverse: bool,
) -> Result<FockMOperator<T>> {
    let n = rho1.cutoff;
    if rho0.cutoff != n {
        return Err(Error::DimensionMismatch("cutoffs differ".into()));
    }
    let frame = SupportFrame::new(rho1);
    if frame.cond > lit(MAX_CONDITION) && !allow_pseudo_inverse {
        return Err(Error::IllConditioned { cond: to_f64(frame.cond) });
    }
    let root = frame.sqrt_k(rho0);
    let ps = &frame.p;
    let k = ps.len();
    let us = &frame.us;
    let ms = CMat::from_fn(k, k, |i, j| root[(i, j)] / c((ps[i] * ps[j]).sqrt(), T::zero()));
    let (vals, vecs) = herm_eig(&ms);
    let m = us * &ms * us.adjoint();
    let complement = (k < n).then(|| CMat::identity(n, n) - us * us.adjoint());
    Ok(FockMOperator { m, eigenvalues: vals, eigenvectors: us * vecs, complement })
}

fn herm_sqrt<T: Real>(rho: &CMat<T>) -> CMat<T> {
    herm_fn(rho, |x| x.max(T::zero()).sqrt())
}

fn check_usable<T: Real>(rho: &FockDensityMatrix<T>) -> Result<()> {
    if rho.trace_deficit > lit(MAX_TRACE_DEFICIT) {
        return Err(Error::CutoffTooSmall { deficit: to_f64(rho.trace_deficit) });
    }
    Ok(())
}

/// `(Tr|√ρ₀√ρ₁|)²`, from the singular values of `√ρ₀√ρ₁`.
pub fn fidelity_fock<T: Real>(rho0: &FockDensityMatrix<T>, rho1: &FockDensityMatrix<T>) -> Result<T> {
    check_usable(rho0)?;
    check_usable(rho1)?;
    if rho0.cutoff != rho1.cutoff {
        return Err(Error::DimensionMismatch("cutoffs differ".into()));
    }
    let a = herm_sqrt(&rho0.rho) * herm_sqrt(&rho1.rho);
    let s = a.singular_values().sum();
    Ok((s * s).max(T::zero()).min(T::one()))
}

/// A finite POVM on the truncated space.
#[derive(Debug, Clone)]
pub struct OraclePovm<T: Real = f64> {
    elements: Vec<CMat<T>>,
}

fn projector<T: Real>(v: nalgebra::DVectorView<'_, C<T>>) -> CMat<T> {
    v * v.adjoint()
}

impl<T: Real> OraclePovm<T> {
    /// Validates positivity and completeness.
    pub fn new(elements: Vec<CMat<T>>) -> Result<Self> {
        let n = elements.first().map(|e| e.nrows()).ok_or_else(|| Error::InvalidArgument("empty POVM".into()))?;
        let mut sum = CMat::<T>::zeros(n, n);
        for e in &elements {
            if e.shape() != (n, n) {
                return Err(Error::DimensionMismatch("POVM elements differ in size".into()));
            }
            let (vals, _) = herm_eig(e);
            if vals[0] < lit(-1e-10) {
                return Err(Error::InvalidArgument("POVM element is not positive".into()));
            }
            sum += e;
        }
        let dev = (sum - CMat::identity(n, n)).norm();
        if dev > lit(COMPLETENESS_TOL) {
            return Err(Error::InvalidArgument(format!("POVM incomplete (deviation {:e})", to_f64(dev))));
        }
        Ok(OraclePovm { elements })
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn from_basis(u: &CMat<T>) -> Result<Self> {
        Self::new(u.column_iter().map(projector).collect())
    }

    pub fn number_basis(n: usize) -> Self {
        OraclePovm { elements: (0..n).map(|k| {
            let mut e = CMat::zeros(n, n);
            e[(k, k)] = c(T::one(), T::zero());
            e
        }).collect() }
    }

    /// Eigenprojectors of `M̂` plus the projector off the support of `ρ₁`.
    pub fn from_m_operator(m: &FockMOperator<T>) -> Result<Self> {
        let mut els: Vec<CMat<T>> = m.eigenvectors.column_iter().map(projector).collect();
        if let Some(comp) = &m.complement {
            els.push(comp.clone());
        }
        Self::new(els)
    }

    /// Eigenbasis of a truncated Hermitian operator.
    pub fn eigenbasis(op: &CMat<T>) -> Result<Self> {
        let (_, vecs) = herm_eig(op);
        Self::from_basis(&vecs)
    }

    /// Binned eigenprojectors of the truncated quadrature `x̂cos φ + p̂ sin φ`
    /// over `center ± 10σ`; outliers go to the edge bins.
    pub fn homodyne(n: usize, phi: T, center: T, sigma: T) -> Result<Self> {
        let (x, p) = quadratures::<T>(n);
        let (s, co) = phi.sin_cos();
        let q = x * c(co, T::zero()) + p * c(s, T::zero());
        let (vals, vecs) = herm_eig(&q);
        let half = sigma * lit::<T>(HOMODYNE_SIGMAS);
        let lo = center - half;
        let width = half * lit::<T>(2.0) / lit::<T>(HOMODYNE_BINS as f64);
        let mut bins: Vec<Option<CMat<T>>> = vec![None; HOMODYNE_BINS];
        for j in 0..n {
            let idx = ((vals[j] - lo) / width).floor().to_f64().unwrap_or(0.0);
            let idx = idx.clamp(0.0, (HOMODYNE_BINS - 1) as f64) as usize;
            let pr = projector(vecs.column(j));
            bins[idx] = Some(match bins[idx].take() {
                Some(b) => b + pr,
                None => pr,
            });
        }
        Self::new(bins.into_iter().flatten().collect())
    }

    pub fn elements(&self) -> &[CMat<T>] {
        &self.elements
    }

    /// Outcome probabilities `Tr[ρE_x]`.
    pub fn probabilities(&self, rho: &FockDensityMatrix<T>) -> Result<Vec<T>> {
        if self.elements[0].nrows() != rho.cutoff {
            return Err(Error::DimensionMismatch("POVM and state sizes differ".into()));
        }
        Ok(self.elements.iter().map(|e| (&rho.rho * e).trace().re.max(T::zero())).collect())
    }
}

/// Bhattacharyya coefficient of the outcome statistics of `povm`.
pub fn bc_under_povm<T: Real>(
    rho0: &FockDensityMatrix<T>,
    rho1: &FockDensityMatrix<T>,
    povm: &OraclePovm<T>,
) -> Result<T> {
    let p0 = povm.probabilities(rho0)?;
    let p1 = povm.probabilities(rho1)?;
    crate::fidelity::bhattacharyya(&Distribution::Discrete(p0), &Distribution::Discrete(p1))
}

/// Distance of the smaller of `a`, `b` from the span of the larger.
fn collinearity_residual<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    let (big, small) = if a.norm() >= b.norm() { (a, b) } else { (b, a) };
    let bb = big.dotc(big);
    if bb.re <= T::zero() {
        return T::zero();
    }
    let mu = big.dotc(small) / bb;
    (small - big * mu).norm()
}

/// Worst-case violations of the optimality conditions
/// `E^{1/2}ρ₁^{1/2} ∥ E^{1/2}ρ₀^{1/2}W†` and `Tr(Wρ₀^{1/2}Eρ₁^{1/2}) ∈ ℝ`.
/// `W` enters only through `Wρ₀^{1/2} = √(ρ₁^{1/2}ρ₀ρ₁^{1/2})ρ₁^{-1/2}`,
/// evaluated on the support of `ρ₁`.
pub fn fuchs_caves_conditions<T: Real>(
    rho0: &FockDensityMatrix<T>,
    rho1: &FockDensityMatrix<T>,
    povm: &OraclePovm<T>,
) -> Result<(T, T)> {
    let n = rho1.cutoff;
    if rho0.cutoff != n {
        return Err(Error::DimensionMismatch("cutoffs differ".into()));
    }
    let frame = SupportFrame::new(rho1);
    let root = frame.sqrt_k(rho0);
    let sq: Vec<T> = frame.p.iter().map(|&x| x.sqrt()).collect();
    // Wρ₀^{1/2} = U_s X U_s† and ρ₁^{1/2} = U_s D U_s† in ρ₁'s eigenbasis
    let k = frame.p.len();
    let x = CMat::from_fn(k, k, |i, j| root[(i, j)] / c(sq[j], T::zero()));
    let d = CMat::from_diagonal(&nalgebra::DVector::from_fn(k, |i, _| c(sq[i], T::zero())));
    let uxd = &frame.us * x.adjoint();
    let ud = &frame.us * &d;
    let mut worst_res = T::zero();
    let mut worst_im = T::zero();
    for e in povm.elements() {
        let eh = herm_sqrt(e);
        worst_res = worst_res.max(collinearity_residual(&(&eh * &ud), &(&eh * &uxd)));
        let t = (&x * frame.us.adjoint() * e * &ud).trace();
        worst_im = worst_im.max(t.im.abs());
    }
    Ok((worst_res, worst_im))
}

/// Symmetric logarithmic derivative `L_nm = 2(∂ρ)_nm/(p_n + p_m)` and `Tr[ρL²]`.
pub fn sld_fock<T: Real>(rho: &FockDensityMatrix<T>, drho: &CMat<T>) -> Result<(CMat<T>, T)> {
    let n = rho.cutoff;
    if drho.shape() != (n, n) {
        return Err(Error::DimensionMismatch("derivative size".into()));
    }
    let (p, u) = herm_eig(&rho.rho);
    let d = u.adjoint() * drho * &u;
    let cut = p[n - 1] * lit::<T>(SUPPORT_THRESHOLD);
    let mut l = CMat::<T>::zeros(n, n);
    let mut qfi = T::zero();
    for i in 0..n {
        for j in 0..n {
            let s = p[i] + p[j];
            if s > cut {
                l[(i, j)] = d[(i, j)] * c(lit::<T>(2.0) / s, T::zero());
                qfi += p[i] * l[(i, j)].modulus_squared();
            }
        }
    }
    Ok((&u * l * u.adjoint(), qfi))
}

/// Dense form of `−(Q−u)ᵀX(Q−u) + 2yᵀ(Q−u) + ν`.
pub fn quadratic_operator<T: Real>(x: &Mat<T>, y: &Vector<T>, u: &Vector<T>, nu: T, n: usize) -> CMat<T> {
    let (xq, pq) = quadratures::<T>(n);
    let id = CMat::<T>::identity(n, n);
    let q = [&xq - &id * c(u[0], T::zero()), &pq - &id * c(u[1], T::zero())];
    let mut op = &id * c(nu, T::zero());
    for j in 0..2 {
        op += &q[j] * c(lit::<T>(2.0) * y[j], T::zero());
        for k in 0..2 {
            op -= &q[j] * &q[k] * c(x[(j, k)], T::zero());
        }
    }
    op
}

/// `n̂` on `n` levels.
pub fn number<T: Real>(n: usize) -> CMat<T> {
    number_operator(n)
}
