//! Infinitesimal-pair limit of `M̂`: the symmetric logarithmic derivative
//! `L̂ = −D(u)(QᵀXQ − 2yᵀQ)D(u)† + ν` with `X = G_M/dθ`, `y = v_M/dθ`,
//! and the quantum Fisher information `H = −Tr[∂V X] + ∂uᵀV⁻¹∂u`.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::fidelity::fidelity_gaussian;
use crate::gibbs::{regularize, DEFAULT_EPSILON};
use crate::matfun::sym_eig;
use crate::measurement::{m_operator, MeasurementType, DEFAULT_CLASSIFY_TOL};
use crate::scalar::{complexify, lit, symmetrize, to_f64, CMat, Mat, Real, Vector, C};
use crate::symplectic::{
    i_omega, omega, rotation, squeezer, state_builder, symplectic_spectrum, GaussianState, GaussianUnitary,
};

/// Largest relative Lyapunov residual accepted from the linear solve.
pub const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-10;
/// Probes with a symplectic eigenvalue within this of ½ count as pure.
pub const PURE_PROBE_TOL: f64 = 1e-10;
/// Series terms below this Frobenius norm end the summation.
pub const SERIES_TERM_TOL: f64 = 1e-14;
pub const SERIES_MAX_TERMS: usize = 10_000;
/// Regularization ladder used to extrapolate pure probes.
pub const RICHARDSON_EPSILONS: [f64; 3] = [1e-6, 1e-7, 1e-8];
/// Step of the finite-difference check on channel derivatives.
pub const DERIVATIVE_CHECK_STEP: f64 = 1e-5;
pub const DERIVATIVE_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind<T: Real = f64> {
    /// `u → u + (θ, 0)`.
    Displacement,
    /// `e^{−iθn̂}` acting on the probe.
    Phase,
    /// `diag(e^θ, e^{−θ})` acting on the probe.
    Squeezing,
    /// Pure loss at rate `θ = γ` for a fixed time `t`.
    Loss { t: T },
    Custom,
}

impl<T: Real> ChannelKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelKind::Displacement => "displacement",
            ChannelKind::Phase => "phase",
            ChannelKind::Squeezing => "squeezing",
            ChannelKind::Loss { .. } => "loss",
            ChannelKind::Custom => "custom",
        }
    }
}

/// A one-parameter family of Gaussian states with its exact derivative.
pub trait ParametrizedChannel<T: Real = f64>: Sync {
    fn kind(&self) -> ChannelKind<T>;
    fn state(&self, theta: T) -> Result<GaussianState<T>>;
    /// `(∂u/∂θ, ∂V/∂θ)`.
    fn derivative(&self, theta: T) -> Result<(Vector<T>, Mat<T>)>;
}

/// Single-mode probe `D(α)S(re^{iθ_s})ρ_th(n̄)S†D(α)†`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe<T: Real = f64> {
    pub nbar: T,
    pub r: T,
    pub theta_s: T,
    pub alpha: C<T>,
}

impl<T: Real> Probe<T> {
    pub fn new(nbar: T, r: T, theta_s: T, alpha: C<T>) -> Self {
        Probe { nbar, r, theta_s, alpha }
    }

    pub fn thermal(nbar: T) -> Self {
        Probe::new(nbar, T::zero(), T::zero(), Complex::new(T::zero(), T::zero()))
    }

    pub fn state(&self) -> Result<GaussianState<T>> {
        state_builder(self.nbar, self.r, self.theta_s, self.alpha)
    }
}

/// One of the four closed-form channels applied to a [`Probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticChannel<T: Real = f64> {
    kind: ChannelKind<T>,
    probe: Probe<T>,
    mean: Vector<T>,
    cov: Mat<T>,
}

/// Builds an analytic channel. `Custom` is rejected; use [`CustomChannel`].
pub fn channel_library<T: Real>(kind: ChannelKind<T>, probe: Probe<T>) -> Result<AnalyticChannel<T>> {
    let finite = probe.nbar.is_finite() && probe.r.is_finite() && probe.theta_s.is_finite();
    if !finite || !(probe.nbar >= T::zero()) || !probe.alpha.re.is_finite() || !probe.alpha.im.is_finite() {
        return Err(Error::InvalidProbe("need finite parameters and nbar >= 0".into()));
    }
    match kind {
        ChannelKind::Custom => return Err(Error::InvalidProbe("custom channels carry their own callables".into())),
        ChannelKind::Loss { t } if !(t > T::zero()) || !t.is_finite() => {
            return Err(Error::InvalidProbe("loss time must be positive".into()))
        }
        _ => {}
    }
    let s = probe.state()?;
    Ok(AnalyticChannel { kind, probe, mean: s.mean().clone(), cov: s.cov().clone() })
}

impl<T: Real> AnalyticChannel<T> {
    pub fn probe(&self) -> &Probe<T> {
        &self.probe
    }

    fn moments(&self, theta: T) -> (Vector<T>, Mat<T>, Vector<T>, Mat<T>) {
        let (u, v) = (&self.mean, &self.cov);
        let half = lit::<T>(0.5);
        match self.kind {
            ChannelKind::Displacement => {
                let mut ut = u.clone();
                ut[0] += theta;
                (ut, v.clone(), Vector::from_vec(vec![T::one(), T::zero()]), Mat::zeros(2, 2))
            }
            ChannelKind::Phase => {
                let w = omega::<T>(1);
                let r = rotation(-theta);
                let ut = &r * u;
                let vt = symmetrize(&(&r * v * r.transpose()));
                let dv = &w * &vt - &vt * &w;
                (ut.clone(), vt, &w * ut, dv)
            }
            ChannelKind::Squeezing => {
                let z = Mat::from_diagonal(&Vector::from_vec(vec![T::one(), -T::one()]));
                let s = squeezer(theta);
                let ut = &s * u;
                let vt = symmetrize(&(&s * v * s.transpose()));
                let dv = &z * &vt + &vt * &z;
                (ut.clone(), vt, &z * ut, dv)
            }
            ChannelKind::Loss { t } => {
                let e = (-theta * t).exp();
                let id = Mat::identity(2, 2);
                let vt = v * e + &id * ((T::one() - e) * half);
                let dv = (v - &id * half) * (-t * e);
                let ut = u * (-theta * t * half).exp();
                let du = &ut * (-t * half);
                (ut, vt, du, dv)
            }
            ChannelKind::Custom => unreachable!("rejected by channel_library"),
        }
    }
}

impl<T: Real> ParametrizedChannel<T> for AnalyticChannel<T> {
    fn kind(&self) -> ChannelKind<T> {
        self.kind
    }

    fn state(&self, theta: T) -> Result<GaussianState<T>> {
        let (u, v, _, _) = self.moments(theta);
        GaussianState::new(u, v)
    }

    fn derivative(&self, theta: T) -> Result<(Vector<T>, Mat<T>)> {
        let (_, _, du, dv) = self.moments(theta);
        Ok((du, dv))
    }
}

/// Channel given by user callables.
pub struct CustomChannel<F, D> {
    pub describe: F,
    pub derivative: D,
}

impl<T, F, D> ParametrizedChannel<T> for CustomChannel<F, D>
where
    T: Real,
    F: Fn(T) -> Result<GaussianState<T>> + Sync,
    D: Fn(T) -> Result<(Vector<T>, Mat<T>)> + Sync,
{
    fn kind(&self) -> ChannelKind<T> {
        ChannelKind::Custom
    }

    fn state(&self, theta: T) -> Result<GaussianState<T>> {
        (self.describe)(theta)
    }

    fn derivative(&self, theta: T) -> Result<(Vector<T>, Mat<T>)> {
        (self.derivative)(theta)
    }
}

/// Central-difference errors `(‖Δu/2h − ∂u‖, ‖ΔV/2h − ∂V‖)` at `h = 1e−5`.
pub fn derivative_errors<T: Real, Ch: ParametrizedChannel<T> + ?Sized>(ch: &Ch, theta: T) -> Result<(T, T)> {
    let h = lit::<T>(DERIVATIVE_CHECK_STEP);
    let plus = ch.state(theta + h)?;
    let minus = ch.state(theta - h)?;
    let (du, dv) = ch.derivative(theta)?;
    let two_h = h * lit::<T>(2.0);
    let eu = ((plus.mean() - minus.mean()) / two_h - du).norm();
    let ev = ((plus.cov() - minus.cov()) / two_h - dv).norm();
    Ok((eu, ev))
}

/// Rejects channels whose derivative disagrees with finite differences.
pub fn validate_channel<T: Real, Ch: ParametrizedChannel<T> + ?Sized>(ch: &Ch, theta: T) -> Result<()> {
    let (eu, ev) = derivative_errors(ch, theta)?;
    let s = ch.state(theta)?;
    // rounding floor of the difference quotient for low-precision scalars
    let floor = T::default_epsilon() * lit::<T>(1e3) * (T::one() + s.cov().norm() + s.mean().norm())
        / lit::<T>(DERIVATIVE_CHECK_STEP);
    let tol = lit::<T>(DERIVATIVE_CHECK_TOL).max(floor);
    if !(eu < tol && ev < tol) {
        return Err(Error::InvalidProbe(format!(
            "derivative disagrees with finite differences (du {:e}, dV {:e})",
            to_f64(eu),
            to_f64(ev)
        )));
    }
    Ok(())
}

fn check_square<T: Real>(v: &Mat<T>, dv: &Mat<T>) -> Result<usize> {
    let n = v.nrows();
    if n == 0 || n % 2 != 0 || v.ncols() != n || dv.shape() != (n, n) {
        return Err(Error::DimensionMismatch("V and dV must both be 2n x 2n".into()));
    }
    Ok(n)
}

fn require_mixed<T: Real>(v: &Mat<T>) -> Result<()> {
    let nu = symplectic_spectrum(v)?;
    let min = nu[nu.len() - 1];
    if min < lit::<T>(0.5 + PURE_PROBE_TOL) {
        if min < lit::<T>(0.5 - 1e-8) {
            return Err(Error::NonPhysicalCovariance { min_nu: to_f64(min) });
        }
        return Err(Error::PureProbeUnsupported);
    }
    Ok(())
}

/// `4VXV + ΩXΩ + 2∂V = 0` as a residual norm relative to `‖∂V‖`.
pub fn lyapunov_residual<T: Real>(v: &Mat<T>, dv: &Mat<T>, x: &Mat<T>) -> T {
    let w = omega::<T>(v.nrows() / 2);
    let r = v * x * v * lit::<T>(4.0) + &w * x * &w + dv * lit::<T>(2.0);
    r.norm() / dv.norm().max(T::default_epsilon())
}

/// `X = G_M/dθ` from `4VXV + ΩXΩ = −2∂V`, solved through its Kronecker form.
pub fn gm_rate_lyapunov<T: Real>(v: &Mat<T>, dv: &Mat<T>) -> Result<Mat<T>> {
    let n = check_square(v, dv)?;
    require_mixed(v)?;
    if dv.norm() == T::zero() {
        return Ok(Mat::zeros(n, n));
    }
    let w = omega::<T>(n / 2);
    let a = v.kronecker(v) * lit::<T>(4.0) + w.transpose().kronecker(&w);
    let b = Vector::from_iterator(n * n, dv.iter().map(|&x| x * lit::<T>(-2.0)));
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NumericalBreakdown("Lyapunov operator singular".into()))?;
    let x = symmetrize(&Mat::from_column_slice(n, n, sol.as_slice()));
    let res = lyapunov_residual(v, dv, &x);
    if !(res < lit::<T>(LYAPUNOV_RESIDUAL_TOL).max(T::default_epsilon() * lit::<T>(1e4))) {
        return Err(Error::ResidualTooLarge { residual: to_f64(res) });
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution<T: Real = f64> {
    pub gm_rate: Mat<T>,
    pub terms: usize,
    pub converged: bool,
    /// Contraction factor `(2ν_min)⁻²` per term.
    pub ratio: T,
    /// Set when `ratio ≥ 1 − 1e−6`, where the sum converges too slowly to trust.
    pub slow: bool,
}

/// `X = iΩ Σ_m W^{−m−1} ∂W W^{−m−1}` with `W = −2ViΩ`.
pub fn gm_rate_series<T: Real>(v: &Mat<T>, dv: &Mat<T>) -> Result<SeriesSolution<T>> {
    let n = check_square(v, dv)?;
    let nu = symplectic_spectrum(v)?;
    let min = nu[nu.len() - 1];
    let ratio = T::one() / (min * min * lit::<T>(4.0));
    let iw = i_omega::<T>(n / 2);
    let m2 = Complex::new(lit::<T>(-2.0), T::zero());
    let wm = complexify(v) * &iw * m2;
    let dw = complexify(dv) * &iw * m2;
    let winv = wm.try_inverse().ok_or(Error::PureProbeUnsupported)?;
    let mut left = winv.clone();
    let mut sum = CMat::<T>::zeros(n, n);
    let mut terms = 0;
    let mut converged = false;
    while terms < SERIES_MAX_TERMS {
        let term = &left * &dw * &left;
        sum += &term;
        terms += 1;
        if term.norm() < lit::<T>(SERIES_TERM_TOL) {
            converged = true;
            break;
        }
        left = &left * &winv;
    }
    let g = iw * sum;
    let im = g.iter().fold(T::zero(), |a, z| a.max(z.im.abs()));
    if im > lit::<T>(1e-8) * g.norm().max(T::one()) {
        return Err(Error::NumericalBreakdown(format!("series imaginary residue {:e}", to_f64(im))));
    }
    Ok(SeriesSolution {
        gm_rate: symmetrize(&g.map(|z| z.re)),
        terms,
        converged,
        ratio,
        slow: ratio >= lit::<T>(1.0 - 1e-6),
    })
}

/// Isothermal shortcut `X = −Ω∂VΩ/(2n̄² + 2n̄ + 1)`, valid when every mode has
/// occupation `n̄` and `∂n̄/∂θ = 0`.
pub fn isothermal_gm_rate<T: Real>(dv: &Mat<T>, nbar: T) -> Mat<T> {
    let w = omega::<T>(dv.nrows() / 2);
    let c = nbar * nbar * lit::<T>(2.0) + nbar * lit::<T>(2.0) + T::one();
    -(&w * dv * &w) / c
}

/// `Var(QᵀXQ)` of a centred Gaussian, `2Tr(XVXV) + ½Tr(XΩXΩ)`.
pub fn quadratic_variance<T: Real>(v: &Mat<T>, x: &Mat<T>) -> T {
    let w = omega::<T>(v.nrows() / 2);
    let xv = x * v;
    let xw = x * &w;
    (&xv * &xv).trace() * lit::<T>(2.0) + (&xw * &xw).trace() * lit::<T>(0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SldQfiResult<T: Real = f64> {
    pub gm_rate: Mat<T>,
    pub vm_rate: Vector<T>,
    pub nu: T,
    pub qfi: T,
    /// Eigenbasis of `L̂`; `None` for multimode channels.
    pub measurement_type: Option<MeasurementType<T>>,
    /// Smallest regularization of the extrapolation ladder, or zero.
    pub epsilon_used: T,
}

struct Rates<T: Real> {
    x: Mat<T>,
    y: Vector<T>,
    nu: T,
    qfi: T,
}

fn rates<T: Real>(v: &Mat<T>, du: &Vector<T>, dv: &Mat<T>) -> Result<Rates<T>> {
    let x = gm_rate_lyapunov(v, dv)?;
    let chol = v.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let vinv_du = chol.solve(du);
    let y = &vinv_du * lit::<T>(0.5);
    let nu = (&x * v).trace();
    let qfi = -(dv * &x).trace() + du.dot(&vinv_du);
    Ok(Rates { x, y, nu, qfi })
}

/// Three-point Lagrange extrapolation to `ε = 0`.
fn lagrange_weights<T: Real>(eps: &[T; 3]) -> [T; 3] {
    let mut w = [T::one(); 3];
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                w[i] *= eps[j] / (eps[j] - eps[i]);
            }
        }
    }
    w
}

/// SLD parameters and QFI of `ch` at `θ`. Pure probes are regularized over
/// [`RICHARDSON_EPSILONS`] and extrapolated to zero regularization.
pub fn sld_qfi<T: Real, Ch: ParametrizedChannel<T> + ?Sized>(ch: &Ch, theta: T) -> Result<SldQfiResult<T>> {
    validate_channel(ch, theta)?;
    let s = ch.state(theta)?;
    let (du, dv) = ch.derivative(theta)?;
    let nu = symplectic_spectrum(s.cov())?;
    let pure = nu[nu.len() - 1] < lit::<T>(0.5 + PURE_PROBE_TOL);
    let (r, eps_used) = if pure {
        let eps = RICHARDSON_EPSILONS.map(lit::<T>);
        let w = lagrange_weights(&eps);
        let mut acc: Option<Rates<T>> = None;
        for (e, wi) in eps.iter().zip(w) {
            let (v, _) = regularize(s.cov(), *e)?;
            let r = rates(&v, &du, &dv)?;
            acc = Some(match acc {
                None => Rates { x: r.x * wi, y: r.y * wi, nu: r.nu * wi, qfi: r.qfi * wi },
                Some(a) => Rates { x: a.x + r.x * wi, y: a.y + r.y * wi, nu: a.nu + r.nu * wi, qfi: a.qfi + r.qfi * wi },
            });
        }
        (acc.expect("three regularizations"), eps[2])
    } else {
        (rates(s.cov(), &du, &dv)?, T::zero())
    };
    let measurement_type = if s.n_modes() == 1 { Some(sld_measurement(&r.x, &r.y, s.mean())?) } else { None };
    Ok(SldQfiResult { gm_rate: r.x, vm_rate: r.y, nu: r.nu, qfi: r.qfi, measurement_type, epsilon_used: eps_used })
}

fn angle_of<T: Real>(w: &Vector<T>) -> T {
    let mut phi = w[1].atan2(w[0]);
    if phi < T::zero() {
        phi += T::pi();
    }
    if phi >= T::pi() {
        phi -= T::pi();
    }
    phi
}

/// Eigenbasis of the single-mode quadratic `−(Q−u)ᵀX(Q−u) + 2yᵀ(Q−u)`.
fn sld_measurement<T: Real>(x: &Mat<T>, y: &Vector<T>, u: &Vector<T>) -> Result<MeasurementType<T>> {
    let (vals, vecs) = sym_eig(x);
    let big = vals[0].abs().max(vals[1].abs());
    let tol = lit::<T>(DEFAULT_CLASSIFY_TOL);
    let rel = if big > T::zero() { vals[0] * vals[1] / (big * big) } else { T::zero() };
    if big <= tol * (T::one() + y.norm()) || rel.abs() <= tol {
        let dir = if big > tol * (T::one() + y.norm()) {
            let k = if vals[0].abs() >= vals[1].abs() { 0 } else { 1 };
            vecs.column(k).into_owned()
        } else {
            y.clone()
        };
        let angle = if dir.norm() > T::zero() { angle_of(&dir) } else { T::zero() };
        return Ok(MeasurementType::Homodyne { angle, pre_displacement: u.clone() });
    }
    let centre = u + x.clone().lu().solve(y).ok_or(Error::NumericalBreakdown("singular SLD quadratic".into()))?;
    // orient eigenvectors as a proper rotation
    let mut o = vecs;
    if o.determinant() < T::zero() {
        o.column_mut(1).neg_mut();
    }
    let s = (vals[1].abs() / vals[0].abs()).powf(lit(0.25));
    if rel > T::zero() {
        let pre = GaussianUnitary::new(&o * squeezer(s.ln()), centre)?;
        Ok(MeasurementType::NumberResolving { pre_unitary: pre })
    } else {
        let pre = GaussianUnitary::new(&o * squeezer(s.ln()) * rotation(-T::frac_pi_4()), centre)?;
        Ok(MeasurementType::XpPlusPxEigenbasis { pre_unitary: pre })
    }
}

/// `4(1 − F(ρ_θ, ρ_{θ+dθ}))/dθ²`.
pub fn qfi_from_fidelity<T: Real, Ch: ParametrizedChannel<T> + ?Sized>(ch: &Ch, theta: T, dtheta: T) -> Result<T> {
    if !(dtheta >= lit::<T>(1e-5) && dtheta <= lit::<T>(1e-3)) {
        return Err(Error::InvalidArgument("dtheta must lie in [1e-5, 1e-3]".into()));
    }
    let a = ch.state(theta)?;
    let b = ch.state(theta + dtheta)?;
    let f = fidelity_gaussian(&a, &b, lit(DEFAULT_EPSILON))?.fidelity;
    Ok((T::one() - f) * lit::<T>(4.0) / (dtheta * dtheta))
}

/// `(G_M/dθ, v_M/dθ)` of the finite pair `ρ₀ = ρ_{θ+dθ}`, `ρ₁ = ρ_θ`.
pub fn finite_pair_rates<T: Real, Ch: ParametrizedChannel<T> + ?Sized>(
    ch: &Ch,
    theta: T,
    dtheta: T,
) -> Result<(Mat<T>, Vector<T>)> {
    if !(dtheta != T::zero()) {
        return Err(Error::InvalidArgument("dtheta must be non-zero".into()));
    }
    let s1 = ch.state(theta)?;
    let s0 = ch.state(theta + dtheta)?;
    let m = m_operator(&s0, &s1, lit(DEFAULT_EPSILON))?;
    Ok((m.gm / dtheta, m.vm / dtheta))
}

/// Printed closed forms; pieces absent for a channel are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm<T: Real = f64> {
    pub qfi: Option<T>,
    pub gm_rate: Option<Mat<T>>,
    pub vm_rate: Option<Vector<T>>,
}

fn out_of_domain<T>(msg: &str) -> Result<T> {
    Err(Error::OutOfFormulaDomain(msg.into()))
}

/// Closed-form SLD data of the analytic channels at parameter `theta`.
pub fn sld_closed_forms<T: Real>(kind: ChannelKind<T>, probe: &Probe<T>, theta: T) -> Result<ClosedForm<T>> {
    let (n, r) = (probe.nbar, probe.r);
    if !(n >= T::zero()) {
        return out_of_domain("nbar must be non-negative");
    }
    let two = lit::<T>(2.0);
    let c = n * n * two + n * two + T::one();
    let k = n * two + T::one();
    let zero_mean = probe.alpha.re == T::zero() && probe.alpha.im == T::zero();
    match kind {
        ChannelKind::Displacement => {
            let s = probe.state()?;
            let vinv = s.cov().clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
            Ok(ClosedForm {
                qfi: Some(vinv[(0, 0)]),
                gm_rate: Some(Mat::zeros(2, 2)),
                vm_rate: Some(vinv.column(0).into_owned() * lit::<T>(0.5)),
            })
        }
        ChannelKind::Phase => {
            if !zero_mean || theta != T::zero() || probe.theta_s != T::zero() {
                return out_of_domain("phase closed form needs a centred, axis-aligned probe at theta = 0");
            }
            let a = k * (two * r).sinh() / c;
            let s2 = (two * r).sinh();
            Ok(ClosedForm {
                qfi: Some(two * k * k * s2 * s2 / c),
                gm_rate: Some(Mat::from_row_slice(2, 2, &[T::zero(), a, a, T::zero()])),
                vm_rate: Some(Vector::zeros(2)),
            })
        }
        ChannelKind::Squeezing => {
            let (ch2, sh2) = ((two * r).cosh(), (two * r).sinh());
            let cs = probe.theta_s.cos();
            let mod2 = probe.alpha.norm_sqr();
            let theta_c = probe.alpha.im.atan2(probe.alpha.re);
            let qfi = two * k * k / c * (ch2 * ch2 - cs * cs * sh2 * sh2)
                + lit::<T>(4.0) * mod2 / k * (ch2 - sh2 * (two * theta_c + probe.theta_s).cos());
            let gm_rate = (probe.theta_s.sin().abs() <= lit::<T>(1e-15)).then(|| {
                let d1 = (-two * theta).exp() * (ch2 - cs * sh2);
                let d2 = -(two * theta).exp() * (ch2 + cs * sh2);
                Mat::from_diagonal(&Vector::from_vec(vec![-d1, -d2])) * (k / c)
            });
            let s = probe.state()?;
            let sq = squeezer(theta);
            let u = &sq * s.mean();
            let v = &sq * s.cov() * &sq;
            let z = Mat::from_diagonal(&Vector::from_vec(vec![T::one(), -T::one()]));
            let vinv = v.try_inverse().ok_or(Error::NotPositiveDefinite)?;
            Ok(ClosedForm { qfi: Some(qfi), gm_rate, vm_rate: Some(vinv * z * u * lit::<T>(0.5)) })
        }
        ChannelKind::Loss { t } => {
            if n != T::zero() || !zero_mean {
                return out_of_domain("loss closed form needs a centred squeezed-vacuum probe");
            }
            if !(theta * t > T::zero()) {
                return out_of_domain("loss closed form needs gamma * t > 0");
            }
            let cos2 = (-theta * t).exp();
            let sin2 = T::one() - cos2;
            let sc = sin2 * cos2;
            let sh = r.sinh();
            let qfi = cos2 * (T::one() - two * sc) * sh * sh / (sin2 * (T::one() + two * sc * sh * sh)) * t * t;
            let gm_rate = (probe.theta_s == T::zero()).then(|| {
                let phi = cos2.sqrt().acos();
                let a = lit::<T>(4.0)
                    / ((-two * sh * sh * (lit::<T>(4.0) * phi).cos() + (two * r).cosh() + lit::<T>(7.0)) * sin2);
                Mat::from_diagonal(&Vector::from_vec(vec![
                    sin2 * sin2 - (-two * r).exp() * cos2 * cos2,
                    sin2 * sin2 - (two * r).exp() * cos2 * cos2,
                ])) * (a * t)
            });
            Ok(ClosedForm { qfi: Some(qfi), gm_rate, vm_rate: Some(Vector::zeros(2)) })
        }
        ChannelKind::Custom => out_of_domain("custom channels have no closed form"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn z() -> C<f64> {
        Complex::new(0.0, 0.0)
    }

    fn ch(kind: ChannelKind, p: Probe) -> AnalyticChannel {
        channel_library(kind, p).unwrap()
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = Probe::new(0.4, 0.6, 0.7, Complex::new(0.5, -0.2));
        for kind in [ChannelKind::Displacement, ChannelKind::Phase, ChannelKind::Squeezing, ChannelKind::Loss { t: 0.8 }] {
            let (eu, ev) = derivative_errors(&ch(kind, p), 0.3).unwrap();
            assert!(eu < 1e-8 && ev < 1e-8, "{kind:?}: {eu} {ev}");
        }
    }

    #[test]
    fn phase_matches_rotated_matrix() {
        let (n, r, th) = (0.5, 0.4, 0.3f64);
        let s = ch(ChannelKind::Phase, Probe::new(n, r, 0.0, z())).state(-th).unwrap();
        let k = (2.0 * n + 1.0) / 2.0;
        let (c2, s2) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let want = Mat::from_row_slice(2, 2, &[
            c2 + (2.0 * th).cos() * s2, s2 * (2.0 * th).sin(),
            s2 * (2.0 * th).sin(), c2 - (2.0 * th).cos() * s2,
        ]) * k;
        assert_relative_eq!(s.cov().clone(), want, epsilon = 1e-12);
    }

    #[test]
    fn loss_mean_derivative() {
        let c = ch(ChannelKind::Loss { t: 2.0 }, Probe::new(0.1, 0.2, 0.0, Complex::new(1.0, 0.0)));
        let (du, _) = c.derivative(0.3).unwrap();
        let u0 = 2f64.sqrt();
        assert_relative_eq!(du[0], -(2.0 / 2.0) * (-0.3f64 * 2.0 / 2.0).exp() * u0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_probes() {
        assert!(matches!(channel_library(ChannelKind::Loss { t: 0.0 }, Probe::thermal(0.1)), Err(Error::InvalidProbe(_))));
        assert!(matches!(channel_library(ChannelKind::Phase, Probe::thermal(-0.1)), Err(Error::InvalidProbe(_))));
    }

    #[test]
    fn isothermal_shortcut() {
        let c = ch(ChannelKind::Phase, Probe::new(0.7, 0.5, 0.3, z()));
        let s = c.state(0.2).unwrap();
        let (_, dv) = c.derivative(0.2).unwrap();
        let x = gm_rate_lyapunov(s.cov(), &dv).unwrap();
        assert_relative_eq!(x, isothermal_gm_rate(&dv, 0.7), epsilon = 1e-12);
    }

    #[test]
    fn zero_derivative_gives_zero() {
        let v = Mat::identity(2, 2) * 0.9;
        assert_eq!(gm_rate_lyapunov(&v, &Mat::zeros(2, 2)).unwrap(), Mat::zeros(2, 2));
    }

    #[test]
    fn series_agrees_with_lyapunov() {
        let v = Mat::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.7]);
        let dv = Mat::from_row_slice(2, 2, &[0.1, -0.4, -0.4, 0.3]);
        let a = gm_rate_lyapunov(&v, &dv).unwrap();
        let b = gm_rate_series(&v, &dv).unwrap();
        assert!(b.converged && !b.slow);
        assert_relative_eq!(a, b.gm_rate, epsilon = 1e-10);
    }

    #[test]
    fn pure_probe_rejected_by_solver() {
        let v = Mat::identity(2, 2) * 0.5;
        assert_eq!(gm_rate_lyapunov(&v, &Mat::identity(2, 2)).unwrap_err(), Error::PureProbeUnsupported);
    }

    #[test]
    fn displacement_qfi() {
        let r = sld_qfi(&ch(ChannelKind::Displacement, Probe::thermal(1.0)), 0.0).unwrap();
        assert_relative_eq!(r.qfi, 2.0 / 3.0, epsilon = 1e-13);
        assert!(matches!(r.measurement_type, Some(MeasurementType::Homodyne { angle, .. }) if angle.abs() < 1e-12));
        let r = sld_qfi(&ch(ChannelKind::Displacement, Probe::thermal(0.0)), 0.0).unwrap();
        assert_relative_eq!(r.qfi, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn phase_sld_matches_closed_form() {
        let p = Probe::new(0.5, 1.0, 0.0, z());
        let r = sld_qfi(&ch(ChannelKind::Phase, p), 0.0).unwrap();
        let cf = sld_closed_forms(ChannelKind::Phase, &p, 0.0).unwrap();
        assert_relative_eq!(r.gm_rate, cf.gm_rate.unwrap(), max_relative = 1e-10);
        assert_relative_eq!(r.qfi, cf.qfi.unwrap(), max_relative = 1e-10);
        assert_relative_eq!(r.gm_rate[(0, 1)], 2.0 * 2f64.sinh() / 2.5, max_relative = 1e-12);
        assert!(matches!(r.measurement_type, Some(MeasurementType::XpPlusPxEigenbasis { .. })));
    }

    #[test]
    fn squeezing_sld_matches_closed_form() {
        for (n, r, ts, a) in [(0.3, 0.4, 0.0, Complex::new(0.5, 0.2)), (0.8, 0.2, 1.1, Complex::new(-0.3, 0.6))] {
            let p = Probe::new(n, r, ts, a);
            let cf = sld_closed_forms(ChannelKind::Squeezing, &p, 0.25).unwrap();
            let s = sld_qfi(&ch(ChannelKind::Squeezing, p), 0.25).unwrap();
            assert_relative_eq!(s.qfi, cf.qfi.unwrap(), max_relative = 1e-10);
            assert_relative_eq!(s.vm_rate, cf.vm_rate.unwrap(), max_relative = 1e-10);
            if let Some(g) = cf.gm_rate {
                assert_relative_eq!(s.gm_rate, g, max_relative = 1e-10);
            }
            assert!(matches!(s.measurement_type, Some(MeasurementType::XpPlusPxEigenbasis { .. })));
        }
        let vac = sld_closed_forms(ChannelKind::Squeezing, &Probe::thermal(0.0), 0.0).unwrap();
        assert_eq!(vac.qfi, Some(2.0));
    }

    #[test]
    fn loss_sld_matches_closed_form() {
        let p = Probe::new(0.0, 0.7, 0.0, z());
        let c = ch(ChannelKind::Loss { t: 1.5 }, p);
        let cf = sld_closed_forms(ChannelKind::Loss { t: 1.5 }, &p, 0.4).unwrap();
        let s = sld_qfi(&c, 0.4).unwrap();
        assert_relative_eq!(s.qfi, cf.qfi.unwrap(), max_relative = 1e-10);
        assert_relative_eq!(s.gm_rate, cf.gm_rate.unwrap(), max_relative = 1e-10);
        // negative definite only while tan²φ < e^{−r}
        assert!(matches!(s.measurement_type, Some(MeasurementType::XpPlusPxEigenbasis { .. })));
        let small = sld_qfi(&c, 0.1).unwrap();
        assert!(small.gm_rate[(0, 0)] < 0.0 && small.gm_rate[(1, 1)] < 0.0);
        assert!(matches!(small.measurement_type, Some(MeasurementType::NumberResolving { .. })));
        let flat = sld_closed_forms(ChannelKind::Loss { t: 1.5 }, &Probe::thermal(0.0), 0.4).unwrap();
        assert_eq!(flat.qfi, Some(0.0));
    }

    #[test]
    fn closed_form_domains() {
        let p = Probe::new(0.5, 0.3, 0.2, z());
        assert!(matches!(sld_closed_forms(ChannelKind::Phase, &p, 0.0), Err(Error::OutOfFormulaDomain(_))));
        assert!(matches!(sld_closed_forms(ChannelKind::Loss { t: 1.0 }, &p, 0.1), Err(Error::OutOfFormulaDomain(_))));
    }

    #[test]
    fn qfi_from_fidelity_agrees() {
        let c = ch(ChannelKind::Phase, Probe::new(0.5, 1.0, 0.0, z()));
        let h = sld_qfi(&c, 0.1).unwrap().qfi;
        let f = qfi_from_fidelity(&c, 0.1, 1e-4).unwrap();
        assert!((f - h).abs() < 1e-4f64.max(10.0 * 1e-8 * h), "{f} {h}");
        let d = ch(ChannelKind::Displacement, Probe::thermal(1.0));
        assert_relative_eq!(qfi_from_fidelity(&d, 0.0, 1e-4).unwrap(), 2.0 / 3.0, epsilon = 1e-5);
    }

    #[test]
    fn constant_custom_channel() {
        let s = GaussianState::thermal(0.5).unwrap();
        let c = CustomChannel {
            describe: move |_t: f64| Ok(s.clone()),
            derivative: |_t: f64| Ok((Vector::zeros(2), Mat::zeros(2, 2))),
        };
        assert_eq!(qfi_from_fidelity(&c, 0.0, 1e-4).unwrap(), 0.0);
        assert_eq!(sld_qfi(&c, 0.0).unwrap().qfi, 0.0);
    }

    #[test]
    fn wick_variance_matches_qfi() {
        let c = ch(ChannelKind::Squeezing, Probe::new(0.6, 0.3, 0.0, z()));
        let s = c.state(0.1).unwrap();
        let r = sld_qfi(&c, 0.1).unwrap();
        assert_relative_eq!(quadratic_variance(s.cov(), &r.gm_rate), r.qfi, max_relative = 1e-10);
    }
}
