//! Bookkeeping identities of the iterated residue calculus.
//!
//! Collapsing the n-fold contour integral onto fixed-point data happens one
//! residue at a time, and three self-contained facts keep the collapse
//! consistent. This module implements them as checkable computations:
//!
//! 1. **Sign/weight cancellation.** Picking residues along a horizontal strip
//!    of J boxes proceeds substrip by substrip; the possible decompositions
//!    are the 2^(J-1) compositions of J. Each composition carries an exact
//!    integer weight w (the number of admissible picking orders) and a sign s
//!    read off from the part of the strip west of a marked box. Whenever the
//!    marked box is not the westernmost box (l0 >= 1), the signed counts
//!    cancel: sum of s*w over all compositions is exactly 0. With the mark at
//!    the west end (l0 = 0) every sign is +1 and the sum is a positive count.
//! 2. **Telescoping identity.** The rational function
//!    sum_{J=1}^L prod_{j=1}^J (x_j + ... + x_L)/(x_{j+1} + ... + x_L + 1)
//!    collapses to x_1 + ... + x_L for arbitrary positive tuples; it is the
//!    scalar skeleton of the strip resummation.
//! 3. **One-box step ratio.** Removing the last box from an r-tuple of
//!    diagrams divides the fixed-point denominator product by a closed
//!    rational factor. The same factor arrives from the contour side as a
//!    one-variable limit xi -> 1 of the integrand quotient. Both sides are
//!    computed here by disjoint code paths and compared.
//!
//! Weights and signed sums use arbitrary-precision integers: the weights grow
//! factorially and the cancellation test is exact, not approximate.

use num_bigint::BigInt;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::nekrasov::{check_grid, cpow, n_factor_n, z_point, MultiplicativeParams};
use crate::partitions::MultiPartition;
use crate::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A composition of a positive integer: an ordered tuple of positive parts.
/// Unlike a [`crate::partitions::Partition`], the order of parts matters and
/// parts need not decrease.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrderedPartition {
    parts: Vec<u32>,
}

impl OrderedPartition {
    pub fn new(parts: impl Into<Vec<u32>>) -> Self {
        let parts = parts.into();
        assert!(!parts.is_empty(), "a composition has at least one part");
        assert!(parts.iter().all(|&p| p > 0), "parts must be positive");
        OrderedPartition { parts }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// The composed integer J = sum of parts.
    pub fn total(&self) -> u32 {
        self.parts.iter().sum()
    }
}

/// Geometry of a residue strip: J boxes in a row, numbered 1..J from west to
/// east, with a marked box at position l0 + 1. The l0 boxes strictly west of
/// the mark together with the mark itself form the marked prefix of length
/// m = l0 + 1; the remaining k = J - l0 - 1 boxes lie east of the mark.
#[derive(Clone, Copy, Debug)]
pub struct StripContext {
    /// Total strip length J >= 1.
    pub j: u32,
    /// Number of boxes strictly west of the marked box, 0 <= l0 <= J - 1.
    pub l0: u32,
}

impl StripContext {
    pub fn new(j: u32, l0: u32) -> Self {
        assert!(j >= 1, "strip must contain at least one box");
        assert!(l0 < j, "the mark must sit on the strip: l0 <= J - 1");
        StripContext { j, l0 }
    }

    /// Length m = l0 + 1 of the marked prefix (mark included).
    pub fn m(&self) -> u32 {
        self.l0 + 1
    }

    /// Number k = J - l0 - 1 of boxes strictly east of the mark.
    pub fn k(&self) -> u32 {
        self.j - self.l0 - 1
    }
}

/// All 2^(J-1) compositions of J in a deterministic order: bit i of a mask
/// running upward from 0 decides whether the strip is cut between box i+1 and
/// box i+2. The first entry is always (J), the last (1,1,...,1).
pub fn ordered_partitions(j: u32) -> Vec<OrderedPartition> {
    assert!(j >= 1, "need a positive integer to compose");
    assert!(j <= 30, "composition enumeration is exponential in J");
    let gaps = j - 1;
    let mut out = Vec::with_capacity(1usize << gaps);
    for mask in 0u64..(1u64 << gaps) {
        let mut parts = Vec::new();
        let mut run = 1u32;
        for gap in 0..gaps {
            if mask >> gap & 1 == 1 {
                parts.push(run);
                run = 1;
            } else {
                run += 1;
            }
        }
        parts.push(run);
        out.push(OrderedPartition::new(parts));
    }
    out
}

/// The cut image and westward/eastward reordering of a composition relative
/// to a strip context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutReorder {
    /// Composition of m(): every part intersected with the marked prefix,
    /// empty intersections dropped.
    pub cut: OrderedPartition,
    /// (B_0, B_1..B_b, C_1..C_c): the uncut part containing the mark first,
    /// then the parts west of it ordered nearest-first, then the parts east
    /// of it ordered nearest-first.
    pub reo: Vec<u32>,
    /// Number of parts strictly west of the mark-carrying part.
    pub b: usize,
    /// Number of parts strictly east of the mark-carrying part.
    pub c: usize,
}

/// Slice a composition of J at the mark: intersect each part with the marked
/// prefix to obtain the cut composition of m, and reorder the full parts
/// around the part that carries the mark.
pub fn cut_and_reorder(vec_j: &OrderedPartition, ctx: StripContext) -> CutReorder {
    assert_eq!(vec_j.total(), ctx.j, "composition must compose the strip length");
    let m = ctx.m();
    let mut cut = Vec::new();
    let mut west = Vec::new();
    let mut east = Vec::new();
    let mut b0 = 0u32;
    let mut start = 0u32; // boxes of the current part: start+1 ..= start+len
    for &len in vec_j.parts() {
        let end = start + len;
        // Intersection with the marked prefix [1, m].
        let overlap = end.min(m).saturating_sub(start);
        if overlap > 0 {
            cut.push(overlap);
        }
        if start < m && m <= end {
            b0 = len; // this part contains the mark, kept uncut
        } else if end < m {
            west.push(len);
        } else {
            east.push(len);
        }
        start = end;
    }
    // Westward order is nearest-to-the-mark first: reverse the scan order.
    west.reverse();
    let b = west.len();
    let c = east.len();
    let mut reo = Vec::with_capacity(1 + b + c);
    reo.push(b0);
    reo.extend_from_slice(&west);
    reo.extend_from_slice(&east);
    CutReorder {
        cut: OrderedPartition::new(cut),
        reo,
        b,
        c,
    }
}

/// Sign of a composition: product of (-1)^(1 + part) over the parts of its
/// cut image, i.e. -1 to the number of even cut parts.
pub fn sign_s(vec_j: &OrderedPartition, ctx: StripContext) -> i32 {
    let cr = cut_and_reorder(vec_j, ctx);
    let evens = cr.cut.parts().iter().filter(|&&p| p % 2 == 0).count();
    if evens % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Weight of one placement order (B_0, A_1, ..., A_{b+c}): the substrip at
/// slot j anchors for free and then makes (length - 1) internal picks; the
/// h-th pick has (R + h) possibilities, where R is the total number of boxes
/// in the substrips not yet placed (the slots after j).
fn arrangement_weight(arrangement: &[u32]) -> BigInt {
    let mut prod = BigInt::from(1u32);
    let mut tail: u64 = arrangement.iter().map(|&x| u64::from(x)).sum();
    for &len in arrangement {
        tail -= u64::from(len);
        for h in 1..u64::from(len) {
            prod *= BigInt::from(tail + h);
        }
    }
    prod
}

/// The weight w of a composition: the mark-carrying part B_0 is placed
/// first, the western parts B_1..B_b and eastern parts C_1..C_c follow in
/// any interleaving that preserves both internal orders (a (b,c) shuffle),
/// and each placement order contributes the product of its internal pick
/// counts. Always >= 1; for the uncut composition (J) this is (J-1)!.
pub fn weight_w(vec_j: &OrderedPartition, ctx: StripContext) -> BigInt {
    let cr = cut_and_reorder(vec_j, ctx);
    let b0 = cr.reo[0];
    let bs = &cr.reo[1..1 + cr.b];
    let cs = &cr.reo[1 + cr.b..];
    let slots = cr.b + cr.c;
    let mut total = BigInt::from(0u32);
    // Subsets of slot positions of size b = the (b,c) shuffles: marked slots
    // receive B_1..B_b in order, the rest receive C_1..C_c in order.
    for mask in 0u64..(1u64 << slots) {
        if mask.count_ones() as usize != cr.b {
            continue;
        }
        let mut arrangement = Vec::with_capacity(1 + slots);
        arrangement.push(b0);
        let (mut bi, mut ci) = (0, 0);
        for slot in 0..slots {
            if mask >> slot & 1 == 1 {
                arrangement.push(bs[bi]);
                bi += 1;
            } else {
                arrangement.push(cs[ci]);
                ci += 1;
            }
        }
        total += arrangement_weight(&arrangement);
    }
    total
}

/// Literal simulation of the residue-picking process, used as an independent
/// oracle for [`weight_w`]: walk every branch of the decision tree (which
/// queue supplies the next substrip, and which of the R + h admissible
/// variables the h-th internal pick takes) and count the leaves one by one.
/// Exponential in J; intended for J <= 5.
pub fn weight_w_simulation(vec_j: &OrderedPartition, ctx: StripContext) -> BigInt {
    let cr = cut_and_reorder(vec_j, ctx);
    let bs = &cr.reo[1..1 + cr.b];
    let cs = &cr.reo[1 + cr.b..];

    fn place_substrip(len: u32, west: &[u32], east: &[u32]) -> BigInt {
        let elsewhere: u64 = west.iter().chain(east).map(|&x| u64::from(x)).sum();
        internal_picks(len, 1, elsewhere, west, east)
    }

    fn internal_picks(len: u32, h: u64, elsewhere: u64, west: &[u32], east: &[u32]) -> BigInt {
        if h >= u64::from(len) {
            return next_substrip(west, east);
        }
        // The h-th internal pick: one branch per admissible choice.
        let mut total = BigInt::from(0u32);
        for _choice in 0..elsewhere + h {
            total += internal_picks(len, h + 1, elsewhere, west, east);
        }
        total
    }

    fn next_substrip(west: &[u32], east: &[u32]) -> BigInt {
        if west.is_empty() && east.is_empty() {
            return BigInt::from(1u32); // one complete picking order
        }
        let mut total = BigInt::from(0u32);
        if let Some((&len, rest)) = west.split_first() {
            total += place_substrip(len, rest, east);
        }
        if let Some((&len, rest)) = east.split_first() {
            total += place_substrip(len, west, rest);
        }
        total
    }

    // The mark-carrying substrip is always placed first.
    place_substrip(cr.reo[0], bs, cs)
}

/// The signed count sum of s*w over all 2^(J-1) compositions of J. For
/// l0 >= 1 the cancellation claim says this is exactly 0; for l0 = 0 every
/// sign is +1 and the value is a positive order count, reported as computed.
pub fn cancellation_sum(j: u32, l0: u32) -> BigInt {
    let ctx = StripContext::new(j, l0);
    ordered_partitions(j)
        .par_iter()
        .map(|vec_j| {
            let w = weight_w(vec_j, ctx);
            if sign_s(vec_j, ctx) >= 0 {
                w
            } else {
                -w
            }
        })
        .reduce(|| BigInt::from(0u32), |a, b| a + b)
}

/// Both sides of the telescoping identity
///
///   sum_{J=1}^L prod_{j=1}^J (x_j + ... + x_L) / (x_{j+1} + ... + x_L + 1)
///     = x_1 + ... + x_L
///
/// for a tuple of positive reals. Returns (lhs, rhs) for comparison by the
/// caller; positivity keeps every denominator away from zero.
pub fn telescoping_check(x: &[f64]) -> (f64, f64) {
    assert!(!x.is_empty(), "need at least one term");
    assert!(x.iter().all(|&v| v > 0.0), "terms must be positive");
    let l = x.len();
    let mut lhs = 0.0;
    for j_top in 1..=l {
        let mut prod = 1.0;
        for j in 1..=j_top {
            let head: f64 = x[j - 1..].iter().sum();
            let tail: f64 = x[j..].iter().sum::<f64>() + 1.0;
            prod *= head / tail;
        }
        lhs += prod;
    }
    let rhs = x.iter().sum();
    (lhs, rhs)
}

/// Classification tolerance for the one-box limit: a monic factor (xi - a)
/// counts as vanishing at xi = 1 when |1 - a| falls below this. Structural
/// zeros are exact up to roundoff (~1e-13 for desk-scale exponents) while
/// generic parameters keep every other root at distance O(0.1), so the split
/// is unambiguous; parameters closer than this to an accidental resonance
/// are rejected up front.
const XI_VANISH: f64 = 1e-8;

/// Reject parameters with q1^a q2^b = 1 for some (a,b) != (0,0) in range:
/// such a relation makes two generically distinct factor roots collide at
/// xi = 1 and the factored limit form of the step ratio loses its meaning
/// (the grid condition only excludes mixed-sign relations, not these).
fn reject_q_resonances(q1: Complex64, q2: Complex64, range: i64) -> Result<()> {
    for a in -range..=range {
        for b in -range..=range {
            if (a, b) == (0, 0) {
                continue;
            }
            let w = cpow(q1, a) * cpow(q2, b);
            if (w - ONE).norm() < XI_VANISH * (1.0 + w.norm()) {
                return Err(Error::DegenerateFactor(format!(
                    "q1^{a} q2^{b} = 1 within tolerance; the one-box limit collides distinct factors"
                )));
            }
        }
    }
    Ok(())
}

/// Product of monic linear factors prod (xi - a) / prod (xi - b) times a
/// constant, evaluated in the limit xi -> 1. Factors whose root sits at 1
/// vanish there; they must occur in equal numbers above and below, where
/// each pair contributes lim (xi-1)/(xi-1) = 1, so the limit is the constant
/// times the product of the remaining factor values at xi = 1.
struct XiLimit {
    constant: Complex64,
    num_roots: Vec<Complex64>,
    den_roots: Vec<Complex64>,
}

impl XiLimit {
    fn new() -> Self {
        XiLimit {
            constant: ONE,
            num_roots: Vec::new(),
            den_roots: Vec::new(),
        }
    }

    fn evaluate(&self) -> Result<Complex64> {
        let vanishes = |root: &Complex64| (ONE - root).norm() < XI_VANISH;
        let nv = self.num_roots.iter().filter(|r| vanishes(r)).count();
        let dv = self.den_roots.iter().filter(|r| vanishes(r)).count();
        if nv != dv {
            return Err(Error::DegenerateFactor(format!(
                "one-box limit has {nv} vanishing numerator factors but {dv} in the denominator"
            )));
        }
        let mut value = self.constant;
        for root in self.num_roots.iter().filter(|r| !vanishes(r)) {
            value *= ONE - root;
        }
        for root in self.den_roots.iter().filter(|r| !vanishes(r)) {
            value /= ONE - root;
        }
        Ok(value)
    }
}

/// Both sides of the one-box step ratio. Removing the last box (l, w) from
/// the last nonempty component Y_c of V yields V'; the ratio of fixed-point
/// terms term(V)/term(V') is computed two ways:
///
/// * **rhs** — the closed denominator-product form: prod_{a,b} N^{V'}_{ab}
///   divided by prod_{a,b} N^{V}_{ab}, each factor straight from the arm/leg
///   data of the diagrams.
/// * **lhs** — the contour form: with z_lw the fixed-point coordinate of the
///   removed box and xi = z_n / z_lw,
///
///     lim_{xi->1} (xi - 1/q1)(xi - 1/q2) / ((xi - 1)(xi - 1/(q1 q2)))
///       * prod_a [ -xi u_a z_lw / ((xi z_lw - u_a)(q1 q2 xi z_lw - u_a))
///                  * A_a(xi) ],
///
///   where A_a multiplies, over every box of the full Y_a (removed box
///   included),
///
///     (xi - zeta)^2 (xi - q1 q2 zeta)(xi - zeta/(q1 q2))
///     / ((xi - q1 zeta)(xi - q2 zeta)(xi - zeta/q1)(xi - zeta/q2)),
///
///   with zeta the box coordinate relative to z_lw. The limit is evaluated
///   by the vanishing-pair bookkeeping of [`XiLimit`].
///
/// Agreement of the two values is the per-box consistency of the residue
/// collapse. The caller compares them; errors flag degenerate parameters.
pub fn step_ratio_check(
    mp: &MultiplicativeParams,
    v: &MultiPartition,
) -> Result<(Complex64, Complex64)> {
    assert_eq!(mp.r(), v.r(), "tuple rank must match parameter rank");
    let n = v.total_size() as u32;
    let violations = check_grid(mp, n);
    if !violations.is_empty() {
        return Err(Error::GridViolation(
            violations.iter().map(|x| x.to_string()).collect(),
        ));
    }
    reject_q_resonances(mp.q1, mp.q2, i64::from(n) + 1)?;
    let (v_prime, (l, w), c) = v.remove_last_box()?;
    let r = mp.r();
    let q12 = mp.q1 * mp.q2;

    // Closed side: the full denominator products of both tuples.
    let mut reduced = ONE;
    let mut full = ONE;
    for alpha in 0..r {
        for beta in 0..r {
            reduced *= n_factor_n(mp.q1, mp.q2, &mp.u, &v_prime, alpha, beta)?;
            full *= n_factor_n(mp.q1, mp.q2, &mp.u, v, alpha, beta)?;
        }
    }
    let rhs = reduced / full;

    // Contour side: assemble the monic factor lists of the xi -> 1 limit.
    let z_lw = z_point(mp.u[c], mp.q1, mp.q2, l, w);
    let mut limit = XiLimit::new();
    // Global prefactor (xi - 1/q1)(xi - 1/q2) / ((xi - 1)(xi - 1/(q1 q2))).
    limit.num_roots.push(ONE / mp.q1);
    limit.num_roots.push(ONE / mp.q2);
    limit.den_roots.push(ONE);
    limit.den_roots.push(ONE / q12);
    for alpha in 0..r {
        // Single-particle block -xi u_a z_lw / ((xi z_lw - u_a)(q1 q2 xi z_lw - u_a)),
        // each factor split into its scale and a monic root.
        limit.constant *= -mp.u[alpha] * z_lw;
        limit.num_roots.push(Complex64::new(0.0, 0.0));
        limit.constant /= z_lw;
        limit.den_roots.push(mp.u[alpha] / z_lw);
        limit.constant /= q12 * z_lw;
        limit.den_roots.push(mp.u[alpha] / (q12 * z_lw));
        // A_a over the full component, removed box included.
        for (x, y) in v.component(alpha).boxes() {
            let zeta = z_point(mp.u[alpha], mp.q1, mp.q2, x, y) / z_lw;
            limit.num_roots.push(zeta);
            limit.num_roots.push(zeta);
            limit.num_roots.push(q12 * zeta);
            limit.num_roots.push(zeta / q12);
            limit.den_roots.push(mp.q1 * zeta);
            limit.den_roots.push(mp.q2 * zeta);
            limit.den_roots.push(zeta / mp.q1);
            limit.den_roots.push(zeta / mp.q2);
        }
    }
    let lhs = limit.evaluate()?;
    Ok((lhs, rhs))
}
