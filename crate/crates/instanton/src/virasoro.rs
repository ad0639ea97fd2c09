//! Deformed Virasoro algebra on Verma modules: structure coefficients r_l,
//! normal-ordering rewriting of mode monomials, Shapovalov/Kac matrices and
//! their determinant zeros, Gaiotto-state solves, and the norm coefficients
//! that the fixed-point route reproduces — the independent oracle for the
//! whole pipeline.
//!
//! The algebra is generated by modes T_n, n in Z, with
//!
//!   [T_n, T_m] = -sum_{l >= 1} r_l (T_{n-l} T_{m+l} - T_{m-l} T_{n+l})
//!                - kappa (q^n t^{-n} - q^{-n} t^n) delta_{m+n,0},
//!
//! kappa = (1-q)(1-t^{-1})/(1-q t^{-1}), and the r_l read off from
//!
//!   r(x) = sum_{l >= 0} r_l x^l
//!        = exp( sum_{n >= 1} ((1-q^n)(1-t^{-n})/(1+q^n t^{-n})) x^n/n ).
//!
//! The Verma module M_h is generated by |h> with T_0|h> = h|h> and
//! T_n|h> = 0 for n >= 1; level-n subspaces have the basis T_lambda|h> =
//! T_{-lambda(1)} ... T_{-lambda(l)} |h> over partitions of n. The
//! Shapovalov form is fixed by S(|h>,|h>) = 1 and S(T_n x, y) =
//! S(x, T_{-n} y); its level-n block is the Kac matrix S^(n), whose
//! determinant vanishes exactly at
//!
//!   h = +/- (t^{r/2} q^{-s/2} + t^{-r/2} q^{s/2}),   r, s >= 1, r s = n.
//!
//! Away from those zeros the level-n Gaiotto coefficients solve
//! sum_lambda g_lambda S^(n)_{lambda mu} = delta_{mu (1^n)}, and the norm
//! coefficient (S^(n))^{-1}_{(1^n),(1^n)} matches q^{-n} t^n Z_n(q,t,Q) at
//! h = Q^{1/2} + Q^{-1/2}, where Z_n is the rank-2 fixed-point sum computed
//! by entirely different code — the strongest cross-check in the crate.
//!
//! Rewriting terminates because every commutator splits a monomial into
//! pieces acting on strictly fewer modes: pushing T_m through T_{-k}
//! (k + m >= 1 in every non-canonical case) spawns inner applications on
//! the tail of the monomial and outer applications on states of level
//! |lambda| - l or |lambda| - k - m, all strictly below |lambda|. The
//! l-sum truncates at l <= max(k + d, d - m) (d the tail's level): beyond
//! that both right factors annihilate every state they meet.

use crate::nekrasov::cpow;
use crate::partitions::{enumerate_partitions, Partition};
use crate::series::{series_exp, series_mul};
use crate::{Error, Result};
use num_complex::Complex64;
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Parameters (q, t) of the algebra and the highest weight h.
#[derive(Clone, Copy, Debug)]
pub struct AlgebraParams {
    pub q: Complex64,
    pub t: Complex64,
    pub h: Complex64,
}

impl AlgebraParams {
    /// Validates the structural exclusions q != 1, t != 1, q t^{-1} != 1
    /// (the central coefficient and the r_l series degenerate there).
    pub fn new(q: Complex64, t: Complex64, h: Complex64) -> Result<Self> {
        for (val, name) in [(q - ONE, "q"), (t - ONE, "t"), (q / t - ONE, "q t^{-1}")] {
            if val.norm() < 1e-9 {
                return Err(Error::Inadmissible(format!("{name} must differ from 1")));
            }
        }
        Ok(AlgebraParams { q, t, h })
    }

    /// Central-term coefficient kappa = (1-q)(1-t^{-1})/(1-q t^{-1}).
    pub fn kappa(&self) -> Complex64 {
        (ONE - self.q) * (ONE - self.t.finv()) / (ONE - self.q * self.t.finv())
    }
}

/// Coefficients r_0..r_L of r(x) = exp(sum_{n>=1} ((1-q^n)(1-t^{-n})
/// / (1+q^n t^{-n})) x^n / n), by power-series exponentiation.
pub fn r_coefficients(q: Complex64, t: Complex64, l_max: usize) -> Vec<Complex64> {
    let mut exponent = vec![ZERO; l_max + 1];
    for (n, slot) in exponent.iter_mut().enumerate().skip(1) {
        let qn = cpow(q, n as i64);
        let tn = cpow(t, -(n as i64));
        *slot = (ONE - qn) * (ONE - tn) / (ONE + qn * tn) / (n as f64);
    }
    series_exp(&exponent)
}

/// A homogeneous vector in the Verma module, stored as amplitudes on the
/// canonical basis T_lambda|h> at one level. The zero vector has empty
/// support (its level field is then immaterial).
#[derive(Clone, Debug, PartialEq)]
pub struct GradedState {
    level: u32,
    amplitudes: BTreeMap<Partition, Complex64>,
}

impl GradedState {
    /// The zero vector.
    pub fn zero() -> Self {
        GradedState { level: 0, amplitudes: BTreeMap::new() }
    }

    /// The basis vector T_lambda|h> (|h> itself for the empty partition).
    pub fn monomial(lambda: Partition) -> Self {
        let level = lambda.size() as u32;
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(lambda, ONE);
        GradedState { level, amplitudes }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Amplitude on T_lambda|h> (zero off the support).
    pub fn coefficient(&self, lambda: &Partition) -> Complex64 {
        self.amplitudes.get(lambda).copied().unwrap_or(ZERO)
    }

    /// Support with amplitudes, in the basis order of the map.
    pub fn amplitudes(&self) -> impl Iterator<Item = (&Partition, &Complex64)> {
        self.amplitudes.iter()
    }

    /// Euclidean norm of the amplitude vector.
    pub fn amplitude_norm(&self) -> f64 {
        self.amplitudes.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// self += factor * other; levels must agree when both are nonzero.
    fn add_scaled(&mut self, other: &GradedState, factor: Complex64) {
        if other.amplitudes.is_empty() || factor == ZERO {
            return;
        }
        if self.amplitudes.is_empty() {
            self.level = other.level;
        }
        debug_assert_eq!(self.level, other.level, "level mismatch in state addition");
        for (p, a) in &other.amplitudes {
            *self.amplitudes.entry(p.clone()).or_insert(ZERO) += factor * a;
        }
    }
}

/// The basis partitions of one level, in lexicographic descending order:
/// (n) first, (1^n) last.
pub fn level_basis(n: u32) -> Vec<Partition> {
    let mut basis = enumerate_partitions(n);
    basis.sort_by(|a, b| b.cmp(a));
    basis
}

/// The level-n block of the Shapovalov form on the canonical basis.
#[derive(Clone, Debug)]
pub struct KacMatrix {
    pub level: u32,
    pub basis: Vec<Partition>,
    pub entries: Vec<Vec<Complex64>>,
}

impl KacMatrix {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Frobenius norm of the entry matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|row| row.iter())
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// One determinant zero h = t^{r/2} q^{-s/2} + t^{-r/2} q^{s/2} (principal
/// branches; the other zero of the pair is its negative).
pub fn kac_zero(q: Complex64, t: Complex64, r: u32, s: u32) -> Complex64 {
    t.powf(r as f64 / 2.0) * q.powf(-(s as f64) / 2.0)
        + t.powf(-(r as f64) / 2.0) * q.powf(s as f64 / 2.0)
}

/// All level-n determinant zeros: +/- kac_zero(q,t,r,s) over factorizations
/// r s = n with r, s >= 1.
pub fn kac_zeros(q: Complex64, t: Complex64, n: u32) -> Vec<Complex64> {
    let mut zeros = Vec::new();
    for r in 1..=n {
        if n % r == 0 {
            let z = kac_zero(q, t, r, n / r);
            zeros.push(z);
            zeros.push(-z);
        }
    }
    zeros
}

/// Largest |xi| radius on which the Gaiotto norm series is controlled,
/// |t|^{-1/2} |q|^{1/2}, in the regime |t| < 1 < |q|.
pub fn gaiotto_radius(q: Complex64, t: Complex64) -> Result<f64> {
    if !(t.norm() < 1.0 && 1.0 < q.norm()) {
        return Err(Error::RegimeViolation(format!(
            "need |t| < 1 < |q|, got |t| = {}, |q| = {}",
            t.norm(),
            q.norm()
        )));
    }
    Ok((q.norm() / t.norm()).sqrt())
}

/// LU decomposition with partial pivoting; returns (packed LU, row
/// permutation, permutation sign). A column without any usable pivot leaves
/// an exact zero on the diagonal (the matrix is singular; determinants
/// still come out as zero).
pub(crate) fn lu_decompose(
    mut a: Vec<Vec<Complex64>>,
) -> (Vec<Vec<Complex64>>, Vec<usize>, f64) {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap_or(col);
        if a[pivot_row][col].norm() == 0.0 {
            continue;
        }
        if pivot_row != col {
            a.swap(pivot_row, col);
            perm.swap(pivot_row, col);
            sign = -sign;
        }
        let pivot = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / pivot;
            a[row][col] = factor;
            for k in col + 1..n {
                let sub = factor * a[col][k];
                a[row][k] -= sub;
            }
        }
    }
    (a, perm, sign)
}

/// Determinant via the LU factorization.
pub(crate) fn lu_det(a: &[Vec<Complex64>]) -> Complex64 {
    let (lu, _, sign) = lu_decompose(a.to_vec());
    let mut det = Complex64::new(sign, 0.0);
    for (i, row) in lu.iter().enumerate() {
        det *= row[i];
    }
    det
}

/// Solves a x = b by the pivoted LU factorization; an exactly singular
/// pivot is refused.
pub(crate) fn lu_solve(a: &[Vec<Complex64>], b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.len();
    let (lu, perm, _) = lu_decompose(a.to_vec());
    for i in 0..n {
        if lu[i][i].norm() == 0.0 {
            return Err(Error::SingularKacMatrix(
                "exactly singular pivot in linear solve".into(),
            ));
        }
    }
    // Forward substitution on the permuted right-hand side.
    let mut y: Vec<Complex64> = perm.iter().map(|&pi| b[pi]).collect();
    for i in 0..n {
        for j in 0..i {
            let sub = lu[i][j] * y[j];
            y[i] -= sub;
        }
    }
    // Back substitution.
    let mut x = y;
    for i in (0..n).rev() {
        for j in i + 1..n {
            let sub = lu[i][j] * x[j];
            x[i] -= sub;
        }
        x[i] /= lu[i][i];
    }
    Ok(x)
}

/// The rewriting engine: applies modes to states at a fixed (q, t, h),
/// memoizing monomial reductions. Not Sync by design — parallel callers
/// build one engine per thread, and results are deterministic regardless of
/// schedule because every entry is a pure function of the inputs.
pub struct VirasoroEngine {
    params: AlgebraParams,
    r: Vec<Complex64>,
    level_cap: u32,
    l_slack: i64,
    memo: RefCell<HashMap<(i64, Partition), Rc<GradedState>>>,
}

impl VirasoroEngine {
    /// Engine with the default level cap 4 (basis sizes 1, 1, 2, 3, 5 at
    /// levels 0..=4 — the rewriting blow-up is the binding cost above that).
    pub fn new(params: AlgebraParams) -> Self {
        Self::with_level_cap(params, 4)
    }

    pub fn with_level_cap(params: AlgebraParams, level_cap: u32) -> Self {
        Self::with_l_sum_slack(params, level_cap, 0)
    }

    /// Engine whose commutator l-sums run `l_slack` terms past the forced
    /// truncation point — diagnostics only: the extra terms must all act as
    /// zero, and the truncation-soundness test checks exactly that.
    pub fn with_l_sum_slack(params: AlgebraParams, level_cap: u32, l_slack: i64) -> Self {
        let r = r_coefficients(params.q, params.t, (level_cap as i64 + l_slack + 4) as usize);
        VirasoroEngine { params, r, level_cap, l_slack, memo: RefCell::new(HashMap::new()) }
    }

    pub fn params(&self) -> &AlgebraParams {
        &self.params
    }

    pub fn level_cap(&self) -> u32 {
        self.level_cap
    }

    /// T_m applied to a state. The input and output levels must both fit
    /// under the level cap.
    pub fn apply_t(&self, m: i64, v: &GradedState) -> Result<GradedState> {
        if v.is_zero() {
            return Ok(GradedState::zero());
        }
        let out_level = v.level() as i64 - m;
        if v.level() > self.level_cap || out_level > self.level_cap as i64 {
            return Err(Error::CapExceeded(format!(
                "T_{m} maps level {} to level {out_level}, past the cap {}",
                v.level(),
                self.level_cap
            )));
        }
        Ok(self.act_state(m, v))
    }

    /// T_m on a whole state: linear extension of the monomial action.
    fn act_state(&self, m: i64, v: &GradedState) -> GradedState {
        let mut out = GradedState::zero();
        for (lambda, &c) in &v.amplitudes {
            if c == ZERO {
                continue;
            }
            let acted = self.act_monomial(m, lambda);
            out.add_scaled(&acted, c);
        }
        out
    }

    /// T_m on the basis monomial T_lambda|h>, memoized. Every recursive
    /// call acts on a strictly smaller monomial, so the recursion is
    /// well-founded (see the module header).
    fn act_monomial(&self, m: i64, lambda: &Partition) -> Rc<GradedState> {
        // Annihilation below the floor: the result would sit at negative
        // level, so it vanishes.
        if m > lambda.size() as i64 {
            return Rc::new(GradedState::zero());
        }
        let key = (m, lambda.clone());
        if let Some(hit) = self.memo.borrow().get(&key) {
            return Rc::clone(hit);
        }
        let result = if lambda.is_empty() {
            // Highest-weight vector: T_m|h> = 0 for m >= 1 (caught above),
            // T_0|h> = h|h>, T_{-k}|h> = the monomial (k).
            if m == 0 {
                let mut s = GradedState::monomial(Partition::empty());
                s.amplitudes.insert(Partition::empty(), self.params.h);
                s
            } else {
                GradedState::monomial(Partition::new(vec![(-m) as u32]))
            }
        } else {
            let k = lambda.part(1) as i64;
            if m <= -1 && -m >= k {
                // Creation at least as large as the leading part: prepending
                // keeps the monomial canonical.
                let mut parts = Vec::with_capacity(lambda.len() + 1);
                parts.push((-m) as u32);
                parts.extend_from_slice(lambda.parts());
                GradedState::monomial(Partition::new(parts))
            } else {
                // Push T_m through the leading T_{-k} (here k + m >= 1):
                //   T_m T_{-k} = T_{-k} T_m
                //     - sum_{l>=1} r_l (T_{m-l} T_{-k+l} - T_{-k-l} T_{m+l})
                //     - kappa (q^m t^{-m} - q^{-m} t^m) [m = k],
                // everything acting on the tail monomial. Right factors
                // annihilate every state once l > max(k + d, d - m).
                let rest = Partition::new(lambda.parts()[1..].to_vec());
                let d = rest.size() as i64;
                let cap = (k + d).max(d - m) + self.l_slack;
                let mut out = GradedState::zero();
                out.add_scaled(&self.act_state(-k, &self.act_monomial(m, &rest)), ONE);
                for l in 1..=cap {
                    let rl = self.r[l as usize];
                    let a = self.act_state(m - l, &self.act_monomial(-k + l, &rest));
                    let b = self.act_state(-k - l, &self.act_monomial(m + l, &rest));
                    out.add_scaled(&a, -rl);
                    out.add_scaled(&b, rl);
                }
                if m == k {
                    let q = self.params.q;
                    let t = self.params.t;
                    let central = cpow(q, m) * cpow(t, -m) - cpow(q, -m) * cpow(t, m);
                    out.add_scaled(
                        &GradedState::monomial(rest),
                        -self.params.kappa() * central,
                    );
                }
                out
            }
        };
        let rc = Rc::new(result);
        self.memo.borrow_mut().insert(key, Rc::clone(&rc));
        rc
    }

    /// The level-n Shapovalov block: S_{lambda mu} is the |h>-amplitude of
    /// T_{lambda(l)} ... T_{lambda(1)} T_mu |h>, peeling the largest part
    /// of lambda first — precisely S(T_lambda|h>, T_mu|h>) by repeated
    /// transposition of the form.
    pub fn shapovalov_matrix(&self, n: u32) -> Result<KacMatrix> {
        if n > self.level_cap {
            return Err(Error::CapExceeded(format!(
                "level {n} past the cap {}",
                self.level_cap
            )));
        }
        let basis = level_basis(n);
        let dim = basis.len();
        let mut entries = vec![vec![ZERO; dim]; dim];
        for (j, mu) in basis.iter().enumerate() {
            let column_seed = GradedState::monomial(mu.clone());
            for (i, lambda) in basis.iter().enumerate() {
                let mut state = column_seed.clone();
                for &part in lambda.parts() {
                    state = self.act_state(part as i64, &state);
                }
                entries[i][j] = state.coefficient(&Partition::empty());
            }
        }
        Ok(KacMatrix { level: n, basis, entries })
    }

    /// det S^(n).
    pub fn kac_determinant(&self, n: u32) -> Result<Complex64> {
        Ok(lu_det(&self.shapovalov_matrix(n)?.entries))
    }

    /// Distance from h to the nearest level-n determinant zero.
    pub fn nearest_kac_distance(&self, n: u32) -> f64 {
        kac_zeros(self.params.q, self.params.t, n)
            .iter()
            .map(|z| (self.params.h - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// The level-n Gaiotto coefficients g_lambda solving
    /// sum_lambda g_lambda S^(n)_{lambda mu} = delta_{mu (1^n)}, returned
    /// as a state. Refused near a determinant zero, and whenever the solve
    /// residual is out of tolerance.
    pub fn gaiotto_coefficients(&self, n: u32) -> Result<GradedState> {
        if n == 0 {
            return Ok(GradedState::monomial(Partition::empty()));
        }
        let distance = self.nearest_kac_distance(n);
        if distance < 1e-6 {
            return Err(Error::SingularKacMatrix(format!(
                "highest weight within {distance:.3e} of a level-{n} determinant zero"
            )));
        }
        let matrix = self.shapovalov_matrix(n)?;
        let dim = matrix.dim();
        // g^T S = e_{(1^n)}  <=>  S^T g = e_{(1^n)}.
        let transposed: Vec<Vec<Complex64>> =
            (0..dim).map(|i| (0..dim).map(|j| matrix.entries[j][i]).collect()).collect();
        let ones = Partition::new(vec![1; n as usize]);
        let target = matrix.basis.iter().position(|p| *p == ones).expect("(1^n) in basis");
        let mut rhs = vec![ZERO; dim];
        rhs[target] = ONE;
        let g = lu_solve(&transposed, &rhs)?;
        // Residual check against the untransformed system.
        let gnorm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let scale = matrix.frobenius_norm() * gnorm;
        for (mu, _) in matrix.basis.iter().enumerate() {
            let mut acc = ZERO;
            for (lambda, &gl) in g.iter().enumerate() {
                acc += gl * matrix.entries[lambda][mu];
            }
            acc -= rhs[mu];
            if acc.norm() > 1e-10 * scale.max(1.0) {
                return Err(Error::SingularKacMatrix(format!(
                    "solve residual {:.3e} exceeds tolerance at scale {scale:.3e}",
                    acc.norm()
                )));
            }
        }
        let mut amplitudes = BTreeMap::new();
        for (idx, p) in matrix.basis.iter().enumerate() {
            amplitudes.insert(p.clone(), g[idx]);
        }
        Ok(GradedState { level: n, amplitudes })
    }

    /// (S^(n))^{-1}_{(1^n),(1^n)} = g^(n)_{(1^n)}, the coefficient of
    /// xi^{2n} in the Gaiotto norm series.
    pub fn gaiotto_norm_coefficient(&self, n: u32) -> Result<Complex64> {
        let g = self.gaiotto_coefficients(n)?;
        Ok(g.coefficient(&Partition::new(vec![1; n as usize])))
    }

    /// The matrix of T_0 on the level-n basis. T_0 does NOT act as the
    /// scalar h + n under these relations (already at level 1 it acts as
    /// h (1 - r_1), and from level 2 on it is not scalar at all); the
    /// engine never assumes a T_0-eigenvalue grading, and this diagnostic
    /// exposes the observed action.
    pub fn t0_level_matrix(&self, n: u32) -> Result<(Vec<Partition>, Vec<Vec<Complex64>>)> {
        if n > self.level_cap {
            return Err(Error::CapExceeded(format!(
                "level {n} past the cap {}",
                self.level_cap
            )));
        }
        let basis = level_basis(n);
        let dim = basis.len();
        let mut entries = vec![vec![ZERO; dim]; dim];
        for (j, mu) in basis.iter().enumerate() {
            let image = self.act_state(0, &GradedState::monomial(mu.clone()));
            for (i, lambda) in basis.iter().enumerate() {
                entries[i][j] = image.coefficient(lambda);
            }
        }
        Ok((basis, entries))
    }
}
