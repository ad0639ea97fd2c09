//! Fixed-point sums: every coefficient family evaluated in closed
//! combinatorial form.
//!
//! The K-theoretic coefficient in multiplicative variables (q1, q2, u, p) is
//! a finite sum over r-tuples of partitions of total size n,
//!
//!   Z_n(u;p) = sum_{|Y|=n} [ prod_a prod_{s in Y_a} prod_m (z^a_s - p_m) ]
//!              / prod_{a,b} N^Y_{a,b},
//!
//! with residue points z^a_{x,y} = u_a q1^{x-1} q2^{y-1} and denominator
//! factors built from arm/leg statistics:
//!
//!   N^Y_{a,b} = prod_{s in Y_a} (1 - (u_a/u_b) q1^{l_{Y_a}(s)+1} q2^{-a_{Y_b}(s)})
//!             * prod_{t in Y_b} (1 - (u_a/u_b) q1^{-l_{Y_b}(t)} q2^{a_{Y_a}(t)+1}),
//!
//!   M^Y_{a,b} = prod_{s in Y_a} (1 - (u_a/u_b) q1^{-l_{Y_b}(s)} q2^{a_{Y_a}(s)+1})
//!             * prod_{t in Y_b} (1 - (u_a/u_b) q1^{l_{Y_a}(t)+1} q2^{-a_{Y_b}(t)}).
//!
//! The N and M denominators give the same sum — one of the identities the
//! test suite verifies numerically. All terms are finite exactly when the
//! grid (non-resonance) condition holds:
//!
//!   u_a/u_b != q1^x q2^y        for a != b,  x,y in {-n..n},
//!   q1^x != q2^{y+1},  q1^{x+1} != q2^y      for x,y in {0..n-1}.
//!
//! The same sum is implemented independently in gauge-theory variables
//! (lambda, eps1, eps2, a, w) where every factor is 1 - e^{-lambda(...)}, in
//! a sinh-product form, in a homological (linear-factor) form, in the
//! (q,t,Q) normalization used by the Whittaker-vector cross-check, and as
//! four-mass conformal-block coefficients. Products are evaluated directly
//! (no log-sum trick — complex phases matter) in the deterministic
//! enumeration order, so results are bit-reproducible.

use crate::partitions::{enumerate_partitions, enumerate_tuples, MultiPartition, Partition};
use crate::{Error, Result, TAU_GRID};
use num_complex::Complex64;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Integer power of a complex number by binary exponentiation; negative
/// exponents invert first. Deterministic and branch-stable.
pub(crate) fn cpow(z: Complex64, k: i64) -> Complex64 {
    let (mut base, mut e) = if k >= 0 { (z, k as u64) } else { (z.finv(), (-k) as u64) };
    let mut acc = ONE;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Residue point z^a_{x,y} = u_a q1^{x-1} q2^{y-1} for a 1-based box (x,y).
pub(crate) fn z_point(u_alpha: Complex64, q1: Complex64, q2: Complex64, x: usize, y: usize) -> Complex64 {
    u_alpha * cpow(q1, x as i64 - 1) * cpow(q2, y as i64 - 1)
}

/// Relative near-equality at the grid tolerance; used both for violation
/// scanning and degenerate-factor detection.
fn approx_eq(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= TAU_GRID * (1.0 + a.norm() + b.norm())
}

/// A factor (1 - w) counts as degenerate when it vanishes within the grid
/// tolerance relative to the size of w.
fn degenerate(factor: Complex64, w: Complex64) -> bool {
    factor.norm() <= TAU_GRID * (1.0 + w.norm())
}

/// Parameters of the multiplicative-variable coefficients Z_n(u;p).
#[derive(Clone, Debug)]
pub struct MultiplicativeParams {
    pub q1: Complex64,
    pub q2: Complex64,
    /// Coulomb parameters u_1..u_r; r = u.len().
    pub u: Vec<Complex64>,
    /// Matter parameters p_1..p_s; s = p.len().
    pub p: Vec<Complex64>,
}

impl MultiplicativeParams {
    pub fn new(q1: Complex64, q2: Complex64, u: Vec<Complex64>, p: Vec<Complex64>) -> Self {
        assert!(!u.is_empty(), "need at least one u parameter");
        MultiplicativeParams { q1, q2, u, p }
    }

    /// Rank r.
    pub fn r(&self) -> usize {
        self.u.len()
    }

    /// Integral-regime admissibility: |q_i| < 1, the pair (q1,q2) is either
    /// complex-conjugate or both real in (0,1), and |q_i| max|u| < min|u|
    /// so that a pole-free contour annulus exists.
    pub fn admissible(&self) -> Result<()> {
        for (name, q) in [("q1", self.q1), ("q2", self.q2)] {
            if q.norm() >= 1.0 {
                return Err(Error::Inadmissible(format!("|{name}| = {} >= 1", q.norm())));
            }
        }
        let conjugate_pair = (self.q1.conj() - self.q2).norm() <= 1e-12 * (1.0 + self.q2.norm());
        let both_real_01 = self.q1.im == 0.0
            && self.q2.im == 0.0
            && self.q1.re > 0.0
            && self.q2.re > 0.0;
        if !conjugate_pair && !both_real_01 {
            return Err(Error::Inadmissible(
                "q1, q2 must be a conjugate pair or both real in (0,1)".into(),
            ));
        }
        let umax = self.u.iter().map(|u| u.norm()).fold(0.0, f64::max);
        let umin = self.u.iter().map(|u| u.norm()).fold(f64::INFINITY, f64::min);
        if umin == 0.0 {
            return Err(Error::ZeroParameter("some |u_a| is zero".into()));
        }
        for (name, q) in [("q1", self.q1), ("q2", self.q2)] {
            if q.norm() * umax >= umin {
                return Err(Error::Inadmissible(format!(
                    "|{name}|*max|u| = {} >= min|u| = {umin}",
                    q.norm() * umax
                )));
            }
        }
        Ok(())
    }
}

/// Parameters in gauge-theory (exponential) variables. They map onto
/// [`MultiplicativeParams`] by q_i = e^{-lambda eps_i}, u_a = e^{-lambda a_a},
/// p_m = e^{lambda w_m}.
#[derive(Clone, Debug)]
pub struct ExponentialParams {
    pub lambda: f64,
    pub eps1: Complex64,
    pub eps2: Complex64,
    /// Coulomb parameters a_1..a_r.
    pub a: Vec<Complex64>,
    /// Matter masses w_1..w_s.
    pub w: Vec<Complex64>,
    /// Instanton-counting parameter (the series variable's coefficient).
    pub coupling: Complex64,
}

impl ExponentialParams {
    pub fn r(&self) -> usize {
        self.a.len()
    }

    /// The multiplicative image q_i = e^{-lambda eps_i}, u_a = e^{-lambda a_a},
    /// p_m = e^{lambda w_m}.
    pub fn to_multiplicative(&self) -> MultiplicativeParams {
        let l = self.lambda;
        MultiplicativeParams {
            q1: (-self.eps1.scale(l)).exp(),
            q2: (-self.eps2.scale(l)).exp(),
            u: self.a.iter().map(|a| (-a.scale(l)).exp()).collect(),
            p: self.w.iter().map(|w| w.scale(l).exp()).collect(),
        }
    }

    /// Hypotheses of the convergence-domain statement: lambda > 0,
    /// Re eps_i > 0, and (eps1, eps2) a conjugate pair or both real.
    pub fn admissible(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::Inadmissible("lambda must be positive".into()));
        }
        if self.eps1.re <= 0.0 || self.eps2.re <= 0.0 {
            return Err(Error::Inadmissible("Re eps_i must be positive".into()));
        }
        let conjugate_pair = (self.eps1.conj() - self.eps2).norm() <= 1e-12 * (1.0 + self.eps2.norm());
        let both_real = self.eps1.im == 0.0 && self.eps2.im == 0.0;
        if !conjugate_pair && !both_real {
            return Err(Error::Inadmissible(
                "eps1, eps2 must be a conjugate pair or both real".into(),
            ));
        }
        Ok(())
    }
}

/// One violated non-resonance inequality found by [`check_grid`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridViolation {
    /// Some((a,b)) for a u_a/u_b = q1^x q2^y hit (1-based indices);
    /// None for a q1^x = q2^y hit between the q's alone.
    pub pair: Option<(usize, usize)>,
    pub x: i64,
    pub y: i64,
}

impl std::fmt::Display for GridViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.pair {
            Some((a, b)) => write!(f, "u_{a}/u_{b} = q1^{} q2^{}", self.x, self.y),
            None => write!(f, "q1^{} = q2^{}", self.x, self.y),
        }
    }
}

/// Scans the grid (non-resonance) condition at order n and reports every
/// violated inequality: u_a/u_b = q1^x q2^y for a != b, x,y in {-n..n}, and
/// q1^x = q2^{y+1} or q1^{x+1} = q2^y for x,y in {0..n-1}. Empty result
/// means every fixed-point term at orders <= n is finite.
pub fn check_grid(mp: &MultiplicativeParams, n: u32) -> Vec<GridViolation> {
    let mut violations = Vec::new();
    let n = n as i64;
    let r = mp.r();
    for alpha in 0..r {
        for beta in 0..r {
            if alpha == beta {
                continue;
            }
            let ratio = mp.u[alpha] / mp.u[beta];
            for x in -n..=n {
                for y in -n..=n {
                    if approx_eq(ratio, cpow(mp.q1, x) * cpow(mp.q2, y)) {
                        violations.push(GridViolation {
                            pair: Some((alpha + 1, beta + 1)),
                            x,
                            y,
                        });
                    }
                }
            }
        }
    }
    for x in 0..n {
        for y in 0..n {
            if approx_eq(cpow(mp.q1, x), cpow(mp.q2, y + 1)) {
                violations.push(GridViolation { pair: None, x, y: y + 1 });
            }
            if approx_eq(cpow(mp.q1, x + 1), cpow(mp.q2, y)) {
                violations.push(GridViolation { pair: None, x: x + 1, y });
            }
        }
    }
    violations
}

fn grid_error(violations: Vec<GridViolation>) -> Error {
    Error::GridViolation(violations.iter().map(|v| v.to_string()).collect())
}

/// Which denominator convention a fixed-point sum uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumForm {
    N,
    M,
}

/// Denominator factor N^Y_{a,b} (0-based component indices):
///
///   prod_{s in Y_a} (1 - (u_a/u_b) q1^{l_{Y_a}(s)+1} q2^{-a_{Y_b}(s)})
/// * prod_{t in Y_b} (1 - (u_a/u_b) q1^{-l_{Y_b}(t)} q2^{a_{Y_a}(t)+1}).
pub fn n_factor_n(
    q1: Complex64,
    q2: Complex64,
    u: &[Complex64],
    v: &MultiPartition,
    alpha: usize,
    beta: usize,
) -> Result<Complex64> {
    let ya = v.component(alpha);
    let yb = v.component(beta);
    let ratio = u[alpha] / u[beta];
    let mut prod = ONE;
    for (x, y) in ya.boxes() {
        let w = ratio * cpow(q1, ya.leg(x, y) + 1) * cpow(q2, -yb.arm(x, y));
        let f = ONE - w;
        if degenerate(f, w) {
            return Err(Error::DegenerateFactor(format!(
                "N factor vanishes at box ({x},{y}) of component {} against {}",
                alpha + 1,
                beta + 1
            )));
        }
        prod *= f;
    }
    for (x, y) in yb.boxes() {
        let w = ratio * cpow(q1, -yb.leg(x, y)) * cpow(q2, ya.arm(x, y) + 1);
        let f = ONE - w;
        if degenerate(f, w) {
            return Err(Error::DegenerateFactor(format!(
                "N factor vanishes at box ({x},{y}) of component {} against {}",
                beta + 1,
                alpha + 1
            )));
        }
        prod *= f;
    }
    Ok(prod)
}

/// Denominator factor M^Y_{a,b}, the alternative convention with the roles
/// of own-arm/other-leg exponents swapped:
///
///   prod_{s in Y_a} (1 - (u_a/u_b) q1^{-l_{Y_b}(s)} q2^{a_{Y_a}(s)+1})
/// * prod_{t in Y_b} (1 - (u_a/u_b) q1^{l_{Y_a}(t)+1} q2^{-a_{Y_b}(t)}).
pub fn n_factor_m(
    q1: Complex64,
    q2: Complex64,
    u: &[Complex64],
    v: &MultiPartition,
    alpha: usize,
    beta: usize,
) -> Result<Complex64> {
    let ya = v.component(alpha);
    let yb = v.component(beta);
    let ratio = u[alpha] / u[beta];
    let mut prod = ONE;
    for (x, y) in ya.boxes() {
        let w = ratio * cpow(q1, -yb.leg(x, y)) * cpow(q2, ya.arm(x, y) + 1);
        let f = ONE - w;
        if degenerate(f, w) {
            return Err(Error::DegenerateFactor(format!(
                "M factor vanishes at box ({x},{y}) of component {} against {}",
                alpha + 1,
                beta + 1
            )));
        }
        prod *= f;
    }
    for (x, y) in yb.boxes() {
        let w = ratio * cpow(q1, ya.leg(x, y) + 1) * cpow(q2, -yb.arm(x, y));
        let f = ONE - w;
        if degenerate(f, w) {
            return Err(Error::DegenerateFactor(format!(
                "M factor vanishes at box ({x},{y}) of component {} against {}",
                beta + 1,
                alpha + 1
            )));
        }
        prod *= f;
    }
    Ok(prod)
}

/// Numerator of a fixed-point term: prod_a prod_{(x,y) in Y_a} prod_m
/// (z^a_{x,y} - p_m). Equals 1 when p is empty.
pub fn numerator_kappa(mp: &MultiplicativeParams, v: &MultiPartition) -> Complex64 {
    let mut prod = ONE;
    for (alpha, ya) in v.components().iter().enumerate() {
        for (x, y) in ya.boxes() {
            let z = z_point(mp.u[alpha], mp.q1, mp.q2, x, y);
            for &pm in &mp.p {
                prod *= z - pm;
            }
        }
    }
    prod
}

/// One fixed-point term: numerator / prod_{a,b} (N or M factor).
pub fn tuple_term(mp: &MultiplicativeParams, v: &MultiPartition, form: SumForm) -> Result<Complex64> {
    let r = mp.r();
    assert_eq!(v.r(), r, "tuple rank must match parameter rank");
    let mut den = ONE;
    for alpha in 0..r {
        for beta in 0..r {
            den *= match form {
                SumForm::N => n_factor_n(mp.q1, mp.q2, &mp.u, v, alpha, beta)?,
                SumForm::M => n_factor_m(mp.q1, mp.q2, &mp.u, v, alpha, beta)?,
            };
        }
    }
    Ok(numerator_kappa(mp, v) / den)
}

/// The coefficient Z_n(u;p) as the fixed-point sum over all r-tuples of
/// total size n, in the requested denominator convention. Fails loudly when
/// the grid condition is violated at this order.
pub fn zn_multiplicative(mp: &MultiplicativeParams, n: u32, form: SumForm) -> Result<Complex64> {
    let violations = check_grid(mp, n);
    if !violations.is_empty() {
        return Err(grid_error(violations));
    }
    let mut sum = ZERO;
    for v in enumerate_tuples(mp.r(), n) {
        sum += tuple_term(mp, &v, form)?;
    }
    Ok(sum)
}

/// The same coefficient computed natively in exponential variables: every
/// denominator factor is
///
///   1 - e^{-lambda(-l_{Y_b}(s) eps1 + (a_{Y_a}(s)+1) eps2 + a_a - a_b)}  or
///   1 - e^{-lambda((l_{Y_a}(t)+1) eps1 - a_{Y_b}(t) eps2 + a_a - a_b)},
///
/// and every numerator factor is e^{-lambda(a_a + (x-1) eps1 + (y-1) eps2)}
/// - e^{lambda w_m}. Under the exponential map this is exactly the
/// multiplicative sum; computing it without going through that map gives an
/// independent implementation to cross-check.
pub fn zn_exponential(ep: &ExponentialParams, n: u32) -> Result<Complex64> {
    let violations = check_grid(&ep.to_multiplicative(), n);
    if !violations.is_empty() {
        return Err(grid_error(violations));
    }
    let l = ep.lambda;
    let r = ep.r();
    let mut sum = ZERO;
    for v in enumerate_tuples(r, n) {
        let mut den = ONE;
        for alpha in 0..r {
            for beta in 0..r {
                let ya = v.component(alpha);
                let yb = v.component(beta);
                let da = ep.a[alpha] - ep.a[beta];
                for (x, y) in ya.boxes() {
                    let e = -ep.eps1.scale(yb.leg(x, y) as f64)
                        + ep.eps2.scale((ya.arm(x, y) + 1) as f64)
                        + da;
                    let w = (-e.scale(l)).exp();
                    let f = ONE - w;
                    if degenerate(f, w) {
                        return Err(Error::DegenerateFactor(format!(
                            "exponential factor vanishes at box ({x},{y}), components ({},{})",
                            alpha + 1,
                            beta + 1
                        )));
                    }
                    den *= f;
                }
                for (x, y) in yb.boxes() {
                    let e = ep.eps1.scale((ya.leg(x, y) + 1) as f64)
                        - ep.eps2.scale(yb.arm(x, y) as f64)
                        + da;
                    let w = (-e.scale(l)).exp();
                    let f = ONE - w;
                    if degenerate(f, w) {
                        return Err(Error::DegenerateFactor(format!(
                            "exponential factor vanishes at box ({x},{y}), components ({},{})",
                            beta + 1,
                            alpha + 1
                        )));
                    }
                    den *= f;
                }
            }
        }
        let mut num = ONE;
        for (alpha, ya) in v.components().iter().enumerate() {
            for (x, y) in ya.boxes() {
                let z = (-(ep.a[alpha] + ep.eps1.scale((x - 1) as f64) + ep.eps2.scale((y - 1) as f64))
                    .scale(l))
                .exp();
                for &wm in &ep.w {
                    num *= z - wm.scale(l).exp();
                }
            }
        }
        sum += num / den;
    }
    Ok(sum)
}

/// One row of a convergence table: the coefficient, its root statistic
/// |Z_n|^{1/n}, and the theoretical radius-type bound it is compared to.
#[derive(Clone, Debug)]
pub struct SeriesRow {
    pub n: u32,
    pub value: Complex64,
    pub root_stat: f64,
    pub bound: f64,
}

/// Partial sum of the instanton series through order n_max,
///
///   sum_{n<=N} (coupling * lambda^{2r-s} e^{-r lambda (eps1+eps2)/2})^n Z_n,
///
/// together with the per-order report rows.
pub fn partition_function_partial(
    ep: &ExponentialParams,
    n_max: u32,
) -> Result<(Complex64, Vec<SeriesRow>)> {
    let r = ep.r() as i32;
    let s = ep.w.len() as i32;
    let mp = ep.to_multiplicative();
    let bound = radius_bound(&mp)?;
    let z = ep.coupling
        * Complex64::new(ep.lambda.powi(2 * r - s), 0.0)
        * (-(ep.eps1 + ep.eps2).scale(ep.lambda * r as f64 / 2.0)).exp();
    let mut partial = ZERO;
    let mut zpow = ONE;
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let zn = zn_exponential(ep, n)?;
        partial += zpow * zn;
        zpow *= z;
        let root_stat = if n == 0 { zn.norm() } else { zn.norm().powf(1.0 / n as f64) };
        rows.push(SeriesRow { n, value: zn, root_stat, bound });
    }
    Ok((partial, rows))
}

/// Pure-gauge coefficient in the sinh-product normalization,
///
///   sum_{|Y|=n} prod_{a,b} prod_{box in Y_a}
///     (lambda/2)^2 / ( sinh(lambda E_{ab}/2) sinh(lambda (eps1+eps2-E_{ab})/2) ),
///
///   E_{ab}(box) = a_a - a_b - l_{Y_b}(box) eps1 + (a_{Y_a}(box)+1) eps2.
///
/// Related to [`zn_exponential`] by
/// zn_sinh_intro(n) = lambda^{2rn} e^{-lambda r n (eps1+eps2)/2} * Z_n,
/// which is the change of series variable z = coupling * lambda^{2r}
/// e^{-lambda(eps1+eps2)r/2}; the equality is pinned by tests.
pub fn zn_sinh_intro(ep: &ExponentialParams, n: u32) -> Result<Complex64> {
    if !ep.w.is_empty() {
        return Err(Error::RegimeViolation(
            "sinh-product form is stated for pure gauge (no matter) only".into(),
        ));
    }
    let l = ep.lambda;
    let r = ep.r();
    let half = Complex64::new(l / 2.0, 0.0);
    let mut sum = ZERO;
    for v in enumerate_tuples(r, n) {
        let mut term = ONE;
        for alpha in 0..r {
            for beta in 0..r {
                let ya = v.component(alpha);
                let yb = v.component(beta);
                let da = ep.a[alpha] - ep.a[beta];
                for (x, y) in ya.boxes() {
                    let e = da - ep.eps1.scale(yb.leg(x, y) as f64)
                        + ep.eps2.scale((ya.arm(x, y) + 1) as f64);
                    let s1 = (e.scale(l / 2.0)).sinh();
                    let s2 = ((ep.eps1 + ep.eps2 - e).scale(l / 2.0)).sinh();
                    if s1.norm() <= TAU_GRID || s2.norm() <= TAU_GRID {
                        return Err(Error::DegenerateFactor(format!(
                            "sinh factor vanishes at box ({x},{y}), components ({},{})",
                            alpha + 1,
                            beta + 1
                        )));
                    }
                    term *= half * half / (s1 * s2);
                }
            }
        }
        sum += term;
    }
    Ok(sum)
}

/// Homological (linear-factor) coefficient: the same sum with every
/// multiplicative factor replaced by its exponent,
///
///   n^Y_{a,b} = prod_{s in Y_a} (-l_{Y_b}(s) eps1 + (a_{Y_a}(s)+1) eps2 + a_a - a_b)
///             * prod_{t in Y_b} ((l_{Y_a}(t)+1) eps1 - a_{Y_b}(t) eps2 + a_a - a_b),
///
///   Z_n = sum_{|Y|=n} 1 / prod_{a,b} n^Y_{a,b}.
///
/// This is the small-lambda limit of lambda^{2rn} Z_n(lambda).
pub fn zn_homological(
    eps1: Complex64,
    eps2: Complex64,
    a: &[Complex64],
    n: u32,
) -> Result<Complex64> {
    let r = a.len();
    assert!(r >= 1, "need at least one Coulomb parameter");
    let scale = 1.0
        + eps1.norm()
        + eps2.norm()
        + 2.0 * a.iter().map(|ai| ai.norm()).fold(0.0, f64::max);
    let mut sum = ZERO;
    for v in enumerate_tuples(r, n) {
        let mut den = ONE;
        for alpha in 0..r {
            for beta in 0..r {
                let ya = v.component(alpha);
                let yb = v.component(beta);
                let da = a[alpha] - a[beta];
                for (x, y) in ya.boxes() {
                    let f = -eps1.scale(yb.leg(x, y) as f64)
                        + eps2.scale((ya.arm(x, y) + 1) as f64)
                        + da;
                    if f.norm() <= TAU_GRID * scale {
                        return Err(Error::DegenerateFactor(format!(
                            "linear factor vanishes at box ({x},{y}), components ({},{})",
                            alpha + 1,
                            beta + 1
                        )));
                    }
                    den *= f;
                }
                for (x, y) in yb.boxes() {
                    let f = eps1.scale((ya.leg(x, y) + 1) as f64)
                        - eps2.scale(yb.arm(x, y) as f64)
                        + da;
                    if f.norm() <= TAU_GRID * scale {
                        return Err(Error::DegenerateFactor(format!(
                            "linear factor vanishes at box ({x},{y}), components ({},{})",
                            beta + 1,
                            alpha + 1
                        )));
                    }
                    den *= f;
                }
            }
        }
        sum += den.finv();
    }
    Ok(sum)
}

/// Pair factor of the (q,t,Q) normalization:
///
///   N_{nu,mu}(Q) = prod_{t-box in mu} (1 - Q q^{a_nu(t)} t^{l_mu(t)+1})
///                * prod_{s in nu}    (1 - Q q^{-a_mu(s)-1} t^{-l_nu(s)}).
fn gaiotto_pair_factor(
    q: Complex64,
    t: Complex64,
    nu: &Partition,
    mu: &Partition,
    big_q: Complex64,
) -> Result<Complex64> {
    let mut prod = ONE;
    for (x, y) in mu.boxes() {
        let w = big_q * cpow(q, nu.arm(x, y)) * cpow(t, mu.leg(x, y) + 1);
        let f = ONE - w;
        if degenerate(f, w) {
            return Err(Error::DegenerateFactor(format!(
                "pair factor vanishes at box ({x},{y}) of the second partition"
            )));
        }
        prod *= f;
    }
    for (x, y) in nu.boxes() {
        let w = big_q * cpow(q, -mu.arm(x, y) - 1) * cpow(t, -nu.leg(x, y));
        let f = ONE - w;
        if degenerate(f, w) {
            return Err(Error::DegenerateFactor(format!(
                "pair factor vanishes at box ({x},{y}) of the first partition"
            )));
        }
        prod *= f;
    }
    Ok(prod)
}

/// Pure-gauge rank-2 coefficient in the (q,t,Q) normalization:
///
///   Z_n(q,t,Q) = sum_{|nu|+|mu|=n}
///     1 / ( N_{nu,mu}(Q) N_{mu,nu}(Q^{-1}) N_{nu,nu}(1) N_{mu,mu}(1) ).
///
/// Identifying q1 = t, q2 = q^{-1}, u = (Q^{1/2}, Q^{-1/2}) turns this into
/// [`zn_multiplicative`] with p empty — a cross-check the tests pin. Only Q
/// (not its square root) enters here, so the formula is insensitive to the
/// branch and satisfies Z_n(Q) = Z_n(Q^{-1}).
pub fn zn_gaiotto(q: Complex64, t: Complex64, big_q: Complex64, n: u32) -> Result<Complex64> {
    let mut sum = ZERO;
    for k in 0..=n {
        for nu in enumerate_partitions(k) {
            for mu in enumerate_partitions(n - k) {
                let den = gaiotto_pair_factor(q, t, &nu, &mu, big_q)?
                    * gaiotto_pair_factor(q, t, &mu, &nu, big_q.finv())?
                    * gaiotto_pair_factor(q, t, &nu, &nu, ONE)?
                    * gaiotto_pair_factor(q, t, &mu, &mu, ONE)?;
                sum += den.finv();
            }
        }
    }
    Ok(sum)
}

/// The four mass combinations entering the block numerator:
/// v1 = ar + pr, v2 = ar - pr, v3 = -al + b + 1/b + pl,
/// v4 = -al + b + 1/b - pl.
#[cfg(test)]
fn block_masses(
    b: Complex64,
    alpha_r: Complex64,
    alpha_l: Complex64,
    p_r: Complex64,
    p_l: Complex64,
) -> [Complex64; 4] {
    let binv = b.finv();
    [
        alpha_r + p_r,
        alpha_r - p_r,
        -alpha_l + b + binv + p_l,
        -alpha_l + b + binv - p_l,
    ]
}

/// Bifundamental block factor for pairs of partitions and paired momenta
/// Pvec = (P, -P), Pvec' = (P', -P'):
///
///   Z_bif(alpha | P',Y'; P,Y) = prod_{i,j=1}^2
///     prod_{s in Y_i}  (P'_j - P_i + b (l_{Y'_j}(s)+1) - b^{-1} a_{Y_i}(s) - alpha)
///   * prod_{t in Y'_j} (P'_j - P_i - b l_{Y_i}(t) + b^{-1} (a_{Y'_j}(t)+1) - alpha).
pub fn conformal_z_bif(
    b: Complex64,
    alpha: Complex64,
    p_prime: Complex64,
    y_prime: (&Partition, &Partition),
    p: Complex64,
    y: (&Partition, &Partition),
) -> Complex64 {
    let binv = b.finv();
    let pv = [p, -p];
    let pv_prime = [p_prime, -p_prime];
    let ys = [y.0, y.1];
    let ys_prime = [y_prime.0, y_prime.1];
    let mut prod = ONE;
    for i in 0..2 {
        for j in 0..2 {
            let base = pv_prime[j] - pv[i] - alpha;
            for (x, yy) in ys[i].boxes() {
                prod *= base + b.scale((ys_prime[j].leg(x, yy) + 1) as f64)
                    - binv.scale(ys[i].arm(x, yy) as f64);
            }
            for (x, yy) in ys_prime[j].boxes() {
                prod *= base - b.scale(ys[i].leg(x, yy) as f64)
                    + binv.scale((ys_prime[j].arm(x, yy) + 1) as f64);
            }
        }
    }
    prod
}

/// Four-point conformal-block coefficient:
///
///   F_n = sum_{|Y1|+|Y2|=n}
///     Z_bif(ar | Pr, (0,0); Pm, (Y1,Y2)) * Z_bif(al | Pm, (Y1,Y2); Pl, (0,0))
///     / Z_bif(0 | Pm, (Y1,Y2); Pm, (Y1,Y2)).
pub fn conformal_block_fn(
    b: Complex64,
    alpha_r: Complex64,
    alpha_l: Complex64,
    p_r: Complex64,
    p_m: Complex64,
    p_l: Complex64,
    n: u32,
) -> Result<Complex64> {
    let scale = 1.0 + b.norm() + b.finv().norm() + p_m.norm();
    let empty = Partition::empty();
    let mut sum = ZERO;
    for k in 0..=n {
        for y1 in enumerate_partitions(k) {
            for y2 in enumerate_partitions(n - k) {
                let num_r =
                    conformal_z_bif(b, alpha_r, p_r, (&empty, &empty), p_m, (&y1, &y2));
                let num_l =
                    conformal_z_bif(b, alpha_l, p_m, (&y1, &y2), p_l, (&empty, &empty));
                let den = conformal_z_bif(b, ZERO, p_m, (&y1, &y2), p_m, (&y1, &y2));
                if den.norm() <= TAU_GRID * scale.powi(2 * (n as i32).max(1)) {
                    return Err(Error::DegenerateFactor(
                        "vanishing self-pairing denominator in block coefficient; \
                         the middle momentum sits on a half-lattice resonance"
                            .into(),
                    ));
                }
                sum += num_r * num_l / den;
            }
        }
    }
    Ok(sum)
}

/// The radius-type bound prod_m max{|p_m|, |u_1|,..,|u_r|} on
/// limsup |Z_n|^{1/n} in multiplicative variables; 1 for pure gauge.
pub fn radius_bound(mp: &MultiplicativeParams) -> Result<f64> {
    mp.admissible()?;
    let umax = mp.u.iter().map(|u| u.norm()).fold(0.0, f64::max);
    Ok(mp.p.iter().map(|p| p.norm().max(umax)).product())
}

/// The coupling-domain bound in exponential variables:
///
///   lambda^{s-2r} e^{lambda (r Re(eps1+eps2)/2 + sum_m min{-Re w_m, Re a_1,..,Re a_r})}.
///
/// The series converges for |coupling| below this value.
pub fn domain_bound(ep: &ExponentialParams) -> Result<f64> {
    ep.admissible()?;
    let r = ep.r() as i32;
    let s = ep.w.len() as i32;
    let amin = ep.a.iter().map(|a| a.re).fold(f64::INFINITY, f64::min);
    let mass_sum: f64 = ep.w.iter().map(|w| (-w.re).min(amin)).sum();
    let exponent = ep.lambda * (r as f64 * (ep.eps1 + ep.eps2).re / 2.0 + mass_sum);
    Ok(ep.lambda.powi(s - 2 * r) * exponent.exp())
}

/// The inversion (q1,q2,u) -> (1/q1, 1/q2, 1/u componentwise), defined for
/// pure gauge. Satisfies Z_n(inverted) = (q1 q2)^{n r} Z_n(original) with
/// q1, q2 the original parameters — i.e. the multiplier is (q1' q2')^{-n r}
/// in the inverted parameters q_i' = 1/q_i. (Check at r = 1, n = 1:
/// 1/((1-1/q1)(1-1/q2)) = q1 q2 / ((1-q1)(1-q2)).)
pub fn invert_params(mp: &MultiplicativeParams) -> Result<MultiplicativeParams> {
    if !mp.p.is_empty() {
        return Err(Error::Inadmissible(
            "inversion symmetry is stated for pure gauge (p empty) only".into(),
        ));
    }
    for (name, z) in [("q1", mp.q1), ("q2", mp.q2)] {
        if z == ZERO {
            return Err(Error::ZeroParameter(format!("{name} is zero")));
        }
    }
    if mp.u.iter().any(|&u| u == ZERO) {
        return Err(Error::ZeroParameter("some u_a is zero".into()));
    }
    Ok(MultiplicativeParams {
        q1: mp.q1.finv(),
        q2: mp.q2.finv(),
        u: mp.u.iter().map(|u| u.finv()).collect(),
        p: Vec::new(),
    })
}
