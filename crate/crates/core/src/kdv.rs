//! Spectral Galerkin truncation of periodic KdV in interaction-picture
//! Fourier variables, with its operator-valued rough path.
//!
//! A state holds the modes k in {-K, ..., -1, 1, ..., K}; the zero mode is
//! absent (mean-free data stays mean-free under the flow). In the
//! interaction picture the free dispersion is rotated away and the
//! generator is the symmetric bilinear convolution
//!
//! ```text
//! (Xdot_sigma(phi1, phi2))(k)
//!     = (ik/2) sum_{k1+k2=k, ki != 0, |ki| <= K}
//!           e^{-i 3 k k1 k2 sigma} phi1(k1) phi2(k2),
//! ```
//!
//! where the cubic phase collapses on the diagonal,
//! k^3 - k1^3 - k2^3 = 3 k k1 k2 for k = k1 + k2, and never vanishes for
//! admissible triples. Every time integral below is therefore a finite
//! combination of elementary oscillatory integrals: the first levels of
//! the operator path,
//!
//! ```text
//! Xbullet_{ts}(phi1, phi2)        = int_s^t Xdot_sigma(phi1, phi2) dsigma
//! Xbracket_{ts}(phi1, phi2, phi3) = int_s^t Xdot_sigma(Xbullet_{sigma s}(phi1, phi2), phi3) dsigma
//! Xdbracket_{ts}(phi1, ..., phi4) = int_s^t Xdot_sigma(Xbullet_{sigma s}(phi1, phi2),
//!                                                      Xbullet_{sigma s}(phi3, phi4)) dsigma
//! ```
//!
//! are evaluated in closed form, with no time quadrature anywhere. They
//! obey exact Chen-type relations over ordered times s <= u <= t:
//!
//! ```text
//! delta Xbullet   = 0
//! delta Xbracket  (p1,p2,p3)_{tus} = Xbullet_{tu}(Xbullet_{us}(p1,p2), p3)
//! delta Xdbracket (p1,..,p4)_{tus} = Xbracket_{tu}(p1, p2, Xbullet_{us}(p3,p4))
//!                                  + Xbracket_{tu}(p3, p4, Xbullet_{us}(p1,p2))
//!                                  + Xbullet_{tu}(Xbullet_{us}(p1,p2), Xbullet_{us}(p3,p4))
//! ```
//!
//! and the trilinear antisymmetry <p1, Xdot(p2, p3)> + cyclic = 0, which
//! the symmetric mode truncation preserves exactly and which makes the
//! truncated flow conserve the quadratic energy H_0.
//!
//! The second-order tree scheme advances v by v + Xbullet(v, v) +
//! 2 Xbracket(v, v, v); see [`TREE_COEFF`] for why the factor is 2.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hard cap on the mode cutoff.
///
/// The quadrilinear operator walks O(K^4) mode tuples per evaluation in
/// closed form; the cap keeps that walk cheap enough that no fallback
/// time quadrature is ever needed.
pub const MODE_CAP: i64 = 32;

/// Largest window a single tree-scheme step may cover.
pub const STEP_CAP: f64 = 1.0;

/// Coefficient of the trilinear term in the tree-scheme step.
///
/// One step must reproduce the second Picard iterate of the integral
/// equation through second order in the window. Substituting
/// v1_sigma = v + Xbullet_{sigma s}(v, v) into the Duhamel integral
/// produces the trilinear term twice (the two cross terms agree because
/// Xdot is symmetric), so the scheme carries the bracket with weight 2.
/// The same constant is the one for which the quadratic energy identity
/// 2<v, X2(v,v,v)> + <Xbullet(v,v), Xbullet(v,v)> = 0 cancels exactly
/// with X2 = TREE_COEFF * Xbracket.
pub const TREE_COEFF: f64 = 2.0;

/// Truncated Fourier state: modes k in {-K, ..., -1, 1, ..., K}.
///
/// Storage is a dense vector in the order -K, ..., -1, 1, ..., K. Real
/// initial data satisfies v(-k) = conj(v(k)); single-mode basis states
/// break that constraint on purpose and are admitted for the algebraic
/// identities.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState<R: Real> {
    k_max: i64,
    alpha: R,
    v: Vec<Complex<R>>,
}

fn modes(k_max: i64) -> impl Iterator<Item = i64> {
    (-k_max..=k_max).filter(|&k| k != 0)
}

fn check_cutoff(k_max: i64) -> Result<()> {
    if k_max < 1 || k_max > MODE_CAP {
        return Err(Error::InvalidParam(format!(
            "mode cutoff must lie in 1..={MODE_CAP}, got {k_max}"
        )));
    }
    Ok(())
}

impl<R: Real> SpectralState<R> {
    /// Zero state at cutoff `k_max` carrying the regularity index `alpha`.
    pub fn zero(k_max: i64, alpha: R) -> Result<Self> {
        check_cutoff(k_max)?;
        Ok(Self {
            k_max,
            alpha,
            v: vec![Complex::new(R::zero(), R::zero()); 2 * k_max as usize],
        })
    }

    /// Unit mass on the single mode `k`. Not reality-constrained.
    pub fn basis(k_max: i64, alpha: R, k: i64) -> Result<Self> {
        let mut out = Self::zero(k_max, alpha)?;
        out.set(k, Complex::new(R::one(), R::zero()))?;
        Ok(out)
    }

    /// Real state from the coefficients of the positive modes:
    /// `coeffs[j]` becomes v(j+1) and v(-(j+1)) = conj(coeffs[j]).
    pub fn from_positive_modes(k_max: i64, alpha: R, coeffs: &[Complex<R>]) -> Result<Self> {
        check_cutoff(k_max)?;
        if coeffs.len() > k_max as usize {
            return Err(Error::InvalidParam(format!(
                "{} positive-mode coefficients exceed cutoff {k_max}",
                coeffs.len()
            )));
        }
        let mut out = Self::zero(k_max, alpha)?;
        for (j, &c) in coeffs.iter().enumerate() {
            let k = j as i64 + 1;
            out.set(k, c)?;
            out.set(-k, c.conj())?;
        }
        Ok(out)
    }

    /// Reality-constrained state with pseudo-random smooth coefficients:
    /// v(k) = scale (u1 + i u2) / k^2 with u1, u2 uniform on [-1, 1].
    pub fn random_real(k_max: i64, alpha: R, seed: u64, scale: R) -> Result<Self> {
        check_cutoff(k_max)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Self::zero(k_max, alpha)?;
        for k in 1..=k_max {
            let u1: f64 = rng.gen_range(-1.0..1.0);
            let u2: f64 = rng.gen_range(-1.0..1.0);
            let damp = scale / R::from_f((k * k) as f64);
            let c = Complex::new(damp * R::from_f(u1), damp * R::from_f(u2));
            out.set(k, c)?;
            out.set(-k, c.conj())?;
        }
        Ok(out)
    }

    /// Mode cutoff K.
    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    /// Regularity index carried by the state.
    pub fn alpha(&self) -> R {
        self.alpha
    }

    /// The admissible mode numbers, in storage order.
    pub fn modes(&self) -> impl Iterator<Item = i64> {
        modes(self.k_max)
    }

    fn uidx(&self, k: i64) -> usize {
        debug_assert!(k != 0 && k.abs() <= self.k_max);
        if k < 0 {
            (k + self.k_max) as usize
        } else {
            (self.k_max + k - 1) as usize
        }
    }

    fn coeff(&self, k: i64) -> Complex<R> {
        self.v[self.uidx(k)]
    }

    fn check_mode(&self, k: i64) -> Result<()> {
        if k == 0 || k.abs() > self.k_max {
            return Err(Error::InvalidParam(format!(
                "mode {k} outside {{-{0}..-1, 1..{0}}}",
                self.k_max
            )));
        }
        Ok(())
    }

    /// Coefficient of mode `k`.
    pub fn get(&self, k: i64) -> Result<Complex<R>> {
        self.check_mode(k)?;
        Ok(self.coeff(k))
    }

    /// Overwrite the coefficient of mode `k`.
    pub fn set(&mut self, k: i64, value: Complex<R>) -> Result<()> {
        self.check_mode(k)?;
        let i = self.uidx(k);
        self.v[i] = value;
        Ok(())
    }

    /// Largest violation of v(-k) = conj(v(k)) over the positive modes.
    pub fn reality_defect(&self) -> R {
        let mut worst = R::zero();
        for k in 1..=self.k_max {
            let d = (self.coeff(-k) - self.coeff(k).conj()).norm();
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// Bilinear pairing sum_k |k|^{2 alpha} self(-k) other(k).
    ///
    /// Bilinear, not sesquilinear: for reality-constrained states the
    /// diagonal value is the real energy sum |k|^{2 alpha} |v(k)|^2.
    pub fn pairing_alpha(&self, other: &Self, alpha: R) -> Result<Complex<R>> {
        if self.k_max != other.k_max {
            return Err(Error::GridMismatch(format!(
                "mode cutoffs {} and {}",
                self.k_max, other.k_max
            )));
        }
        let two_alpha = alpha + alpha;
        let mut acc = Complex::new(R::zero(), R::zero());
        for k in modes(self.k_max) {
            let w = R::from_f(k.abs() as f64).powf(two_alpha);
            acc += self.coeff(-k) * other.coeff(k) * Complex::new(w, R::zero());
        }
        Ok(acc)
    }

    /// Real part of the diagonal pairing at index `alpha`.
    pub fn h_alpha(&self, alpha: R) -> R {
        self.pairing_alpha(self, alpha).expect("same cutoff").re
    }

    /// Quadratic energy H_0 = sum_k v(-k) v(k).
    pub fn h0(&self) -> R {
        self.h_alpha(R::zero())
    }

    /// Modulus-based Sobolev norm (sum |k|^{2 alpha} |v(k)|^2)^{1/2}.
    ///
    /// Agrees with sqrt(H_alpha) on reality-constrained states and stays
    /// a norm on the basis states that break the constraint.
    pub fn sobolev_norm(&self, alpha: R) -> R {
        let two_alpha = alpha + alpha;
        let mut acc = R::zero();
        for k in modes(self.k_max) {
            acc += R::from_f(k.abs() as f64).powf(two_alpha) * self.coeff(k).norm_sqr();
        }
        acc.sqrt()
    }

    /// Largest coefficient modulus.
    pub fn sup_mode(&self) -> R {
        let mut worst = R::zero();
        for c in &self.v {
            let d = c.norm();
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// Largest modulus of the coefficient-wise difference.
    pub fn sup_diff(&self, other: &Self) -> Result<R> {
        if self.k_max != other.k_max {
            return Err(Error::GridMismatch(format!(
                "mode cutoffs {} and {}",
                self.k_max, other.k_max
            )));
        }
        let mut worst = R::zero();
        for (a, b) in self.v.iter().zip(&other.v) {
            let d = (*a - *b).norm();
            if d > worst {
                worst = d;
            }
        }
        Ok(worst)
    }

    /// Coefficient-wise sum; cutoffs must match.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.k_max != other.k_max {
            return Err(Error::GridMismatch(format!(
                "mode cutoffs {} and {}",
                self.k_max, other.k_max
            )));
        }
        let mut out = self.clone();
        for (a, b) in out.v.iter_mut().zip(&other.v) {
            *a += *b;
        }
        Ok(out)
    }

    /// Coefficient-wise scaling by a complex constant.
    pub fn scaled(&self, c: Complex<R>) -> Self {
        let mut out = self.clone();
        for a in out.v.iter_mut() {
            *a *= c;
        }
        out
    }

    /// True when every coefficient is finite.
    pub fn is_finite(&self) -> bool {
        self.v.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// e^{i x} for real x.
fn im_exp<R: Real>(x: R) -> Complex<R> {
    Complex::new(x.cos(), x.sin())
}

/// int_s^t e^{-i w sigma} dsigma, exact for every integer frequency.
fn e_int<R: Real>(w: i64, s: R, t: R) -> Complex<R> {
    if w == 0 {
        return Complex::new(t - s, R::zero());
    }
    let wf = R::from_f(w as f64);
    let miw = Complex::new(R::zero(), -wf);
    (im_exp(-wf * t) - im_exp(-wf * s)) / miw
}

fn same_cutoff<R: Real>(states: &[&SpectralState<R>]) -> Result<i64> {
    let k_max = states[0].k_max();
    for s in states {
        if s.k_max() != k_max {
            return Err(Error::GridMismatch(format!(
                "mode cutoffs {} and {}",
                k_max,
                s.k_max()
            )));
        }
    }
    Ok(k_max)
}

/// i k / 2 as a complex scalar.
fn half_ik<R: Real>(k: i64) -> Complex<R> {
    Complex::new(R::zero(), R::from_f(k as f64 / 2.0))
}

/// The interaction-picture generator Xdot_sigma(phi1, phi2).
///
/// Symmetric in its two arguments and support-limited by the truncated
/// convolution; preserves the reality constraint.
pub fn xdot<R: Real>(
    sigma: R,
    phi1: &SpectralState<R>,
    phi2: &SpectralState<R>,
) -> Result<SpectralState<R>> {
    let k_max = same_cutoff(&[phi1, phi2])?;
    let mut out = SpectralState::zero(k_max, phi1.alpha())?;
    for k in modes(k_max) {
        let mut acc = Complex::new(R::zero(), R::zero());
        for k1 in modes(k_max) {
            let k2 = k - k1;
            if k2 == 0 || k2.abs() > k_max {
                continue;
            }
            let w = 3 * k * k1 * k2;
            acc += im_exp(R::from_f(-w as f64) * sigma) * phi1.coeff(k1) * phi2.coeff(k2);
        }
        out.set(k, half_ik::<R>(k) * acc)?;
    }
    Ok(out)
}

/// First-level operator Xbullet_{ts} = int_s^t Xdot_sigma dsigma.
///
/// Per mode triple the frequency 3 k k1 k2 is a nonzero integer, so the
/// integral is evaluated in closed form; the result is additive in time,
/// Xbullet_{ts} = Xbullet_{tu} + Xbullet_{us}.
pub fn x_bullet<R: Real>(
    s: R,
    t: R,
    phi1: &SpectralState<R>,
    phi2: &SpectralState<R>,
) -> Result<SpectralState<R>> {
    let k_max = same_cutoff(&[phi1, phi2])?;
    let mut out = SpectralState::zero(k_max, phi1.alpha())?;
    for k in modes(k_max) {
        let mut acc = Complex::new(R::zero(), R::zero());
        for k1 in modes(k_max) {
            let k2 = k - k1;
            if k2 == 0 || k2.abs() > k_max {
                continue;
            }
            let w = 3 * k * k1 * k2;
            acc += e_int(w, s, t) * phi1.coeff(k1) * phi2.coeff(k2);
        }
        out.set(k, half_ik::<R>(k) * acc)?;
    }
    Ok(out)
}

/// Inner-pair table for the bracket operators: for each ordered admissible
/// pair (k1, k2) with m = k1 + k2 kept by the truncation, the product of
/// coefficients, the pair frequency 3 m k1 k2, and m.
fn pair_table<R: Real>(
    phi1: &SpectralState<R>,
    phi2: &SpectralState<R>,
) -> Vec<(i64, i64, Complex<R>)> {
    let k_max = phi1.k_max();
    let zero = Complex::new(R::zero(), R::zero());
    let mut table = Vec::new();
    for k1 in modes(k_max) {
        for k2 in modes(k_max) {
            let m = k1 + k2;
            if m == 0 || m.abs() > k_max {
                continue;
            }
            let c = phi1.coeff(k1) * phi2.coeff(k2);
            if c == zero {
                continue;
            }
            table.push((m, 3 * m * k1 * k2, c));
        }
    }
    table
}

/// Second-level operator Xbracket_{ts}(phi1, phi2, phi3)
/// = int_s^t Xdot_sigma(Xbullet_{sigma s}(phi1, phi2), phi3) dsigma.
///
/// The sigma-dependence of the inner integral is a difference of two
/// exponentials, so each mode tuple contributes two elementary integrals;
/// everything is exact in time.
pub fn x_bracket_single<R: Real>(
    s: R,
    t: R,
    phi1: &SpectralState<R>,
    phi2: &SpectralState<R>,
    phi3: &SpectralState<R>,
) -> Result<SpectralState<R>> {
    let k_max = same_cutoff(&[phi1, phi2, phi3])?;
    let mut out = SpectralState::zero(k_max, phi1.alpha())?;
    for (m, w1, c12) in pair_table(phi1, phi2) {
        // (e^{-i w1 sigma} - e^{-i w1 s}) / (-i w1) integrated against the
        // outer phase e^{-i w2 sigma}.
        let inv1 = Complex::new(R::zero(), -R::from_f(w1 as f64));
        let phase1 = im_exp(-R::from_f(w1 as f64) * s);
        let lead = half_ik::<R>(m) * c12 / inv1;
        for k3 in modes(k_max) {
            let k = m + k3;
            if k == 0 || k.abs() > k_max {
                continue;
            }
            let w2 = 3 * k * m * k3;
            let time = e_int(w1 + w2, s, t) - phase1 * e_int(w2, s, t);
            let term = half_ik::<R>(k) * lead * time * phi3.coeff(k3);
            let cur = out.coeff(k);
            out.set(k, cur + term)?;
        }
    }
    Ok(out)
}

/// Second-level operator Xdbracket_{ts}(phi1, phi2, phi3, phi4)
/// = int_s^t Xdot_sigma(Xbullet_{sigma s}(phi1, phi2), Xbullet_{sigma s}(phi3, phi4)) dsigma.
///
/// The product of the two inner integrals expands into four elementary
/// oscillatory integrals per mode tuple; exact in time.
pub fn x_bracket_double<R: Real>(
    s: R,
    t: R,
    phi1: &SpectralState<R>,
    phi2: &SpectralState<R>,
    phi3: &SpectralState<R>,
    phi4: &SpectralState<R>,
) -> Result<SpectralState<R>> {
    let k_max = same_cutoff(&[phi1, phi2, phi3, phi4])?;
    let mut out = SpectralState::zero(k_max, phi1.alpha())?;
    let left = pair_table(phi1, phi2);
    let right = pair_table(phi3, phi4);
    for &(m1, w1, c12) in &left {
        let inv1 = Complex::new(R::zero(), -R::from_f(w1 as f64));
        let phase1 = im_exp(-R::from_f(w1 as f64) * s);
        let lead1 = half_ik::<R>(m1) * c12 / inv1;
        for &(m2, w2, c34) in &right {
            let k = m1 + m2;
            if k == 0 || k.abs() > k_max {
                continue;
            }
            let inv2 = Complex::new(R::zero(), -R::from_f(w2 as f64));
            let phase2 = im_exp(-R::from_f(w2 as f64) * s);
            let w0 = 3 * k * m1 * m2;
            let time = e_int(w0 + w1 + w2, s, t) - phase2 * e_int(w0 + w1, s, t)
                - phase1 * e_int(w0 + w2, s, t)
                + phase1 * phase2 * e_int(w0, s, t);
            let term = half_ik::<R>(k) * lead1 * (half_ik::<R>(m2) * c34 / inv2) * time;
            let cur = out.coeff(k);
            out.set(k, cur + term)?;
        }
    }
    Ok(out)
}

/// Which second-level operator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketKind {
    /// Trilinear bracket with one inner first-level integral.
    Single,
    /// Quadrilinear bracket with two inner first-level integrals.
    Double,
}

/// The first two levels of the operator path at a fixed cutoff, packaged
/// as evaluators over (s, t, arguments).
#[derive(Debug, Clone, Copy)]
pub struct KdvOperatorLevel {
    k_max: i64,
}

impl KdvOperatorLevel {
    /// Evaluators at cutoff `k_max` (capped at [`MODE_CAP`]).
    pub fn new(k_max: i64) -> Result<Self> {
        check_cutoff(k_max)?;
        Ok(Self { k_max })
    }

    /// Mode cutoff K shared by all arguments.
    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    fn admit<R: Real>(&self, states: &[&SpectralState<R>]) -> Result<()> {
        let k = same_cutoff(states)?;
        if k != self.k_max {
            return Err(Error::GridMismatch(format!(
                "operator cutoff {} but state cutoff {k}",
                self.k_max
            )));
        }
        Ok(())
    }

    /// First level: Xbullet_{ts}.
    pub fn x1<R: Real>(
        &self,
        s: R,
        t: R,
        phi1: &SpectralState<R>,
        phi2: &SpectralState<R>,
    ) -> Result<SpectralState<R>> {
        self.admit(&[phi1, phi2])?;
        x_bullet(s, t, phi1, phi2)
    }

    /// Second level, dispatching on the bracket kind; `Single` takes
    /// three arguments, `Double` takes four.
    pub fn x_level2<R: Real>(
        &self,
        s: R,
        t: R,
        kind: BracketKind,
        args: &[&SpectralState<R>],
    ) -> Result<SpectralState<R>> {
        match kind {
            BracketKind::Single => {
                if args.len() != 3 {
                    return Err(Error::InvalidParam(format!(
                        "single bracket takes 3 arguments, got {}",
                        args.len()
                    )));
                }
                self.admit(args)?;
                x_bracket_single(s, t, args[0], args[1], args[2])
            }
            BracketKind::Double => {
                if args.len() != 4 {
                    return Err(Error::InvalidParam(format!(
                        "double bracket takes 4 arguments, got {}",
                        args.len()
                    )));
                }
                self.admit(args)?;
                x_bracket_double(s, t, args[0], args[1], args[2], args[3])
            }
        }
    }
}

/// One step of the second-order tree scheme on [s, t]:
/// v + Xbullet_{ts}(v, v) + [`TREE_COEFF`] Xbracket_{ts}(v, v, v).
pub fn kdv_tree_step<R: Real>(v: &SpectralState<R>, s: R, t: R) -> Result<SpectralState<R>> {
    if !(t - s).is_finite() || (t - s).to_f() > STEP_CAP {
        return Err(Error::InvalidParam(format!(
            "step width {:?} exceeds cap {STEP_CAP}",
            t - s
        )));
    }
    let lin = x_bullet(s, t, v, v)?;
    let tri = x_bracket_single(s, t, v, v, v)?;
    let out = v
        .plus(&lin)?
        .plus(&tri.scaled(Complex::new(R::from_f(TREE_COEFF), R::zero())))?;
    if !out.is_finite() {
        return Err(Error::NonFinite("kdv tree step"));
    }
    Ok(out)
}

/// Time series of states with the conserved quantities per step.
#[derive(Debug, Clone)]
pub struct KdvTrajectory<R: Real> {
    times: Vec<R>,
    h0: Vec<R>,
    h_alpha: Vec<R>,
    states: Vec<SpectralState<R>>,
}

impl<R: Real> KdvTrajectory<R> {
    fn record(v0: SpectralState<R>, capacity: usize) -> Self {
        let mut out = Self {
            times: Vec::with_capacity(capacity),
            h0: Vec::with_capacity(capacity),
            h_alpha: Vec::with_capacity(capacity),
            states: Vec::with_capacity(capacity),
        };
        out.push(R::zero(), v0);
        out
    }

    fn push(&mut self, time: R, state: SpectralState<R>) {
        self.times.push(time);
        self.h0.push(state.h0());
        self.h_alpha.push(state.h_alpha(state.alpha()));
        self.states.push(state);
    }

    /// Recorded times, one entry per step including the initial state.
    pub fn times(&self) -> &[R] {
        &self.times
    }

    /// Quadratic energy H_0 per recorded state.
    pub fn h0(&self) -> &[R] {
        &self.h0
    }

    /// H_alpha per recorded state, at the state's own regularity index.
    pub fn h_alpha(&self) -> &[R] {
        &self.h_alpha
    }

    /// Recorded states.
    pub fn states(&self) -> &[SpectralState<R>] {
        &self.states
    }

    /// State after the last step.
    pub fn final_state(&self) -> &SpectralState<R> {
        self.states.last().expect("trajectory never empty")
    }

    /// Relative drift of H_0 between the first and last state.
    pub fn h0_drift(&self) -> R {
        let first = self.h0[0];
        let last = *self.h0.last().expect("trajectory never empty");
        (last - first).abs() / first.abs().max(R::from_f(f64::MIN_POSITIVE))
    }

    /// CSV export: step, time, H_0, H_alpha, then one |v(k)| column per
    /// mode in storage order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,time,h0,h_alpha");
        let state0 = &self.states[0];
        for k in state0.modes() {
            out.push_str(&format!(",abs_v_{k}"));
        }
        out.push('\n');
        for (i, state) in self.states.iter().enumerate() {
            out.push_str(&format!(
                "{},{:?},{:?},{:?}",
                i, self.times[i], self.h0[i], self.h_alpha[i]
            ));
            for k in state.modes() {
                out.push_str(&format!(",{:?}", state.coeff(k).norm()));
            }
            out.push('\n');
        }
        out
    }

    /// JSON run manifest: all parameters of the run plus the convention
    /// constant of the scheme. Keys serialize in sorted order.
    pub fn manifest_json(&self, scheme: &str) -> String {
        let steps = self.times.len() - 1;
        let t_final = self.times.last().expect("trajectory never empty").to_f();
        let state0 = &self.states[0];
        let value = serde_json::json!({
            "alpha": state0.alpha().to_f(),
            "h": if steps > 0 { t_final / steps as f64 } else { 0.0 },
            "k_max": state0.k_max(),
            "scheme": scheme,
            "steps": steps,
            "t_final": t_final,
            "tree_coefficient": TREE_COEFF,
        });
        serde_json::to_string_pretty(&value).expect("manifest serializes")
    }
}

fn blowup_guard<R: Real>(state: &SpectralState<R>, h0_start: R) -> Result<()> {
    if !state.is_finite() {
        return Err(Error::NonFinite("kdv solve"));
    }
    if state.h0() > R::from_f(1e6) * (h0_start + R::one()) {
        return Err(Error::NonFinite("kdv solve (energy blow-up)"));
    }
    Ok(())
}

/// Integrate the tree scheme over [0, t_final] in `steps` uniform steps,
/// recording H_0 and H_alpha per step. Aborts on blow-up.
pub fn kdv_solve<R: Real>(
    v0: &SpectralState<R>,
    t_final: R,
    steps: usize,
) -> Result<KdvTrajectory<R>> {
    if steps == 0 || t_final.to_f() <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "need steps >= 1 and t_final > 0, got {steps} and {t_final:?}"
        )));
    }
    let h = t_final / R::from_f(steps as f64);
    let h0_start = v0.h0();
    let mut trajectory = KdvTrajectory::record(v0.clone(), steps + 1);
    let mut v = v0.clone();
    for i in 0..steps {
        let s = h * R::from_f(i as f64);
        let t = if i + 1 == steps {
            t_final
        } else {
            h * R::from_f((i + 1) as f64)
        };
        v = kdv_tree_step(&v, s, t)?;
        blowup_guard(&v, h0_start)?;
        trajectory.push(t, v.clone());
    }
    Ok(trajectory)
}

/// Classical fourth-order reference integration of the truncated
/// interaction-picture system dv/dsigma = Xdot_sigma(v, v).
pub fn rk4_reference<R: Real>(
    v0: &SpectralState<R>,
    t_final: R,
    steps: usize,
) -> Result<KdvTrajectory<R>> {
    if steps == 0 || t_final.to_f() <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "need steps >= 1 and t_final > 0, got {steps} and {t_final:?}"
        )));
    }
    let h = t_final / R::from_f(steps as f64);
    let half = Complex::new(h / R::from_f(2.0), R::zero());
    let sixth = Complex::new(h / R::from_f(6.0), R::zero());
    let two = Complex::new(R::from_f(2.0), R::zero());
    let h0_start = v0.h0();
    let mut trajectory = KdvTrajectory::record(v0.clone(), steps + 1);
    let mut v = v0.clone();
    for i in 0..steps {
        let s = h * R::from_f(i as f64);
        let k1 = xdot(s, &v, &v)?;
        let mid1 = v.plus(&k1.scaled(half))?;
        let k2 = xdot(s + h / R::from_f(2.0), &mid1, &mid1)?;
        let mid2 = v.plus(&k2.scaled(half))?;
        let k3 = xdot(s + h / R::from_f(2.0), &mid2, &mid2)?;
        let end = v.plus(&k3.scaled(Complex::new(h, R::zero())))?;
        let k4 = xdot(s + h, &end, &end)?;
        let incr = k1.plus(&k2.scaled(two))?.plus(&k3.scaled(two))?.plus(&k4)?;
        v = v.plus(&incr.scaled(sixth))?;
        blowup_guard(&v, h0_start)?;
        let t = if i + 1 == steps {
            t_final
        } else {
            h * R::from_f((i + 1) as f64)
        };
        trajectory.push(t, v.clone());
    }
    Ok(trajectory)
}
