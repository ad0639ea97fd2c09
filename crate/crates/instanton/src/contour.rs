//! Contour-integral route: the same coefficients as [`crate::nekrasov`],
//! but computed as n-dimensional torus integrals.
//!
//! The coefficient has the integral representation
//!
//!   Z_n(u;p) = (1/n!) ((1-q1 q2)/((1-q1)(1-q2)))^n
//!              * integral over |z_j| = rho of  prod_j dz_j/(2 pi i z_j)
//!                prod_j prod_m (z_j - p_m)
//!                prod_j prod_a (-u_a z_j) / ((z_j - u_a)(q1 q2 z_j - u_a))
//!                prod_{j != k} (z_j - z_k)(z_j - q1 q2 z_k)
//!                             / ((z_j - q1 z_k)(z_j - q2 z_k)),
//!
//! valid whenever the circle radius rho separates the pole families:
//! |u_a| < rho < |q_i|^{-1} |u_a| for all a, i. On z_j = rho e^{i theta_j}
//! the measure dz_j/(2 pi i z_j) becomes d theta_j / (2 pi), so the integral
//! is the plain mean of the integrand over the n-torus and the tensor
//! trapezoidal rule (uniform angles, equal weights) converges spectrally.
//!
//! The module also computes the reference sequence
//!
//!   a_n = (1/n!) ((1-q1 q2)/((1-q1)(1-q2)))^n
//!         * mean over the unit torus of prod_{j != k} (pairwise factor),
//!
//! whose generating series is exp(sum_{n>=1} (1-(q1 q2)^n) /
//! ((1-q1^n)(1-q2^n)) z^n / n) — the growth yardstick behind the radius
//! bound — and the extra pairwise weight for massive adjoint matter, which
//! is provided for quadrature only (no combinatorial counterpart is claimed
//! for it; its single-particle polynomial is out of scope).

use crate::nekrasov::MultiplicativeParams;
use crate::series::series_exp;
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerance for detecting an evaluation point sitting on a pole.
const TAU_POLE: f64 = 1e-12;

/// Default cap on the integral dimension; cost scales as M^n.
pub const DEFAULT_N_MAX: u32 = 3;

/// Cap on the total number of grid cells (main grid plus halved grid).
pub const BUDGET_CELLS: u64 = 1 << 24;

/// A circle |z| = rho that separates the inner pole family {u_a} from the
/// outer one {u_a / q_i}, plus the grid resolution used on it.
#[derive(Clone, Copy, Debug)]
pub struct ContourSpec {
    pub rho: f64,
    pub points_per_dim: u32,
}

/// One quadrature outcome: the value, the resolution it was computed at,
/// and the halving error estimate |value(M) - value(M/2)|.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub points_per_dim: u32,
    pub est_error: f64,
}

/// Picks the contour radius as the geometric mean of the two ends of the
/// admissible annulus (max_a |u_a|, min_i |q_i|^{-1} min_a |u_a|). When a
/// q_i vanishes the outer end is unbounded; any radius beyond the u's works
/// and 2 max|u| is used.
pub fn choose_rho(mp: &MultiplicativeParams) -> Result<ContourSpec> {
    mp.admissible()?;
    let umax = mp.u.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let umin = mp.u.iter().map(|u| u.norm()).fold(f64::INFINITY, f64::min);
    let qmax = mp.q1.norm().max(mp.q2.norm());
    let rho = if qmax == 0.0 { 2.0 * umax } else { (umax * umin / qmax).sqrt() };
    debug_assert!(umax < rho && (qmax == 0.0 || rho < umin / qmax));
    Ok(ContourSpec { rho, points_per_dim: 64 })
}

/// The ordered-pair interaction factor
/// (z_j - z_k)(z_j - q1 q2 z_k) / ((z_j - q1 z_k)(z_j - q2 z_k)).
pub fn pairwise_weight(
    zj: Complex64,
    zk: Complex64,
    q1: Complex64,
    q2: Complex64,
) -> Result<Complex64> {
    let scale = zj.norm() + zk.norm();
    let d1 = zj - q1 * zk;
    let d2 = zj - q2 * zk;
    if d1.norm() <= TAU_POLE * scale || d2.norm() <= TAU_POLE * scale {
        return Err(Error::PoleHit(format!("pairwise pole at z_j={zj}, z_k={zk}")));
    }
    Ok((zj - zk) * (zj - q1 * q2 * zk) / (d1 * d2))
}

/// The one-particle factor prod_m (z - p_m) prod_a (-u_a z) /
/// ((z - u_a)(q1 q2 z - u_a)).
pub fn single_particle_factor(z: Complex64, mp: &MultiplicativeParams) -> Result<Complex64> {
    let mut f = ONE;
    for &pm in &mp.p {
        f *= z - pm;
    }
    for &ua in &mp.u {
        let d1 = z - ua;
        let d2 = mp.q1 * mp.q2 * z - ua;
        let scale = z.norm() + ua.norm();
        if d1.norm() <= TAU_POLE * scale || d2.norm() <= TAU_POLE * scale {
            return Err(Error::PoleHit(format!("one-particle pole at z={z}, u={ua}")));
        }
        f *= -ua * z / (d1 * d2);
    }
    Ok(f)
}

/// Full integrand at a point z = (z_1..z_n), excluding the
/// (1/n!)((1-q1 q2)/((1-q1)(1-q2)))^n prefactor which the quadrature
/// routines apply. Symmetric in the z_j.
pub fn integrand(z: &[Complex64], mp: &MultiplicativeParams) -> Result<Complex64> {
    let mut f = ONE;
    for &zj in z {
        f *= single_particle_factor(zj, mp)?;
    }
    for (j, &zj) in z.iter().enumerate() {
        for (k, &zk) in z.iter().enumerate() {
            if j != k {
                f *= pairwise_weight(zj, zk, mp.q1, mp.q2)?;
            }
        }
    }
    Ok(f)
}

/// Extra ordered-pair weight for massive adjoint matter with multiplicative
/// mass m:
///
///   (z_j - q1 m^{-1} z_k)(z_j - q2 m^{-1} z_k)(z_j - q1^{-1} m z_k)(z_j - q2^{-1} m z_k)
///   / ((z_j - m z_k)(z_j - m^{-1} z_k)(z_j - q1 q2 m^{-1} z_k)(z_j - q1^{-1} q2^{-1} m z_k)).
///
/// At m = 1 it is the exact reciprocal of the base pairwise interaction of
/// the pair (both orientations combined), so the two cancel — the tests pin
/// this identity.
pub fn adjoint_weight(
    zj: Complex64,
    zk: Complex64,
    m: Complex64,
    q1: Complex64,
    q2: Complex64,
) -> Result<Complex64> {
    let minv = m.finv();
    let num = (zj - q1 * minv * zk)
        * (zj - q2 * minv * zk)
        * (zj - q1.finv() * m * zk)
        * (zj - q2.finv() * m * zk);
    let scale = zj.norm() + zk.norm() * (m.norm() + minv.norm());
    let mut den = ONE;
    for d in [
        zj - m * zk,
        zj - minv * zk,
        zj - q1 * q2 * minv * zk,
        zj - (q1 * q2).finv() * m * zk,
    ] {
        if d.norm() <= TAU_POLE * scale {
            return Err(Error::PoleHit(format!("adjoint-weight pole at z_j={zj}, z_k={zk}")));
        }
        den *= d;
    }
    Ok(num / den)
}

/// Deterministic pairwise (cascade) summation: fixed association order
/// independent of thread scheduling.
fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    match v.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => v[0],
        2 => v[0] + v[1],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// The series prefactor ((1-q1 q2)/((1-q1)(1-q2)))^n / n!.
fn prefactor(q1: Complex64, q2: Complex64, n: u32) -> Complex64 {
    let base = (ONE - q1 * q2) / ((ONE - q1) * (ONE - q2));
    let mut p = ONE;
    for _ in 0..n {
        p *= base;
    }
    p / Complex64::new(factorial(n), 0.0)
}

/// Mean of `f` over the uniform n-torus grid with `m` angles per dimension
/// on the circle of radius `rho`. Outer index parallelized; reductions use
/// a fixed pairwise order so the result is independent of thread count.
fn torus_mean<F>(n: u32, m: u32, rho: f64, f: F) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Sync,
{
    if n == 0 {
        return Ok(ONE);
    }
    let nodes: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(rho, std::f64::consts::TAU * k as f64 / m as f64))
        .collect();
    let inner_cells = (m as u64).pow(n - 1);
    let per_outer: Vec<Complex64> = (0..m)
        .into_par_iter()
        .map(|k0| -> Result<Complex64> {
            let mut z = vec![Complex64::new(0.0, 0.0); n as usize];
            z[0] = nodes[k0 as usize];
            let mut vals = Vec::with_capacity(inner_cells as usize);
            for cell in 0..inner_cells {
                let mut rest = cell;
                for j in 1..n as usize {
                    z[j] = nodes[(rest % m as u64) as usize];
                    rest /= m as u64;
                }
                vals.push(f(&z)?);
            }
            Ok(pairwise_sum(&vals))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&per_outer) / Complex64::new((m as u64).pow(n) as f64, 0.0))
}

fn check_budget(n: u32, m: u32) -> Result<()> {
    if m < 4 || m % 2 != 0 {
        return Err(Error::Inadmissible(format!(
            "points_per_dim must be even and >= 4, got {m}"
        )));
    }
    let cells = (m as u64)
        .checked_pow(n)
        .and_then(|c| c.checked_add((m as u64 / 2).pow(n)))
        .ok_or_else(|| Error::BudgetExceeded("grid size overflows".into()))?;
    if cells > BUDGET_CELLS {
        return Err(Error::BudgetExceeded(format!(
            "grid of {cells} cells exceeds the cap of {BUDGET_CELLS}"
        )));
    }
    Ok(())
}

/// Quadrature for Z_n on an explicitly chosen radius (rho-independence
/// within the admissible annulus is itself a correctness check).
pub fn zn_quadrature_at(
    mp: &MultiplicativeParams,
    n: u32,
    m: u32,
    rho: f64,
) -> Result<QuadratureResult> {
    check_budget(n, m)?;
    let pf = prefactor(mp.q1, mp.q2, n);
    let coarse = pf * torus_mean(n, m / 2, rho, |z| integrand(z, mp))?;
    let value = pf * torus_mean(n, m, rho, |z| integrand(z, mp))?;
    Ok(QuadratureResult { value, points_per_dim: m, est_error: (value - coarse).norm() })
}

/// Quadrature for Z_n with the automatically chosen contour and the default
/// dimension cap.
pub fn zn_quadrature(mp: &MultiplicativeParams, n: u32, m: u32) -> Result<QuadratureResult> {
    zn_quadrature_with_cap(mp, n, m, DEFAULT_N_MAX)
}

/// Quadrature for Z_n with an explicit dimension cap (the CLI exposes this
/// for callers who accept the M^n cost).
pub fn zn_quadrature_with_cap(
    mp: &MultiplicativeParams,
    n: u32,
    m: u32,
    n_max: u32,
) -> Result<QuadratureResult> {
    if n > n_max {
        return Err(Error::CapExceeded(format!(
            "integral dimension n={n} exceeds the cap {n_max}; cost grows as M^n"
        )));
    }
    if n == 0 {
        return Ok(QuadratureResult { value: ONE, points_per_dim: m, est_error: 0.0 });
    }
    let spec = choose_rho(mp)?;
    zn_quadrature_at(mp, n, m, spec.rho)
}

/// Quadrature for the reference coefficient a_n: the pairwise interaction
/// alone on the unit torus.
pub fn a_n_quadrature(q1: Complex64, q2: Complex64, n: u32, m: u32) -> Result<QuadratureResult> {
    for (name, q) in [("q1", q1), ("q2", q2)] {
        if q.norm() >= 1.0 {
            return Err(Error::Inadmissible(format!("|{name}| = {} >= 1", q.norm())));
        }
    }
    if n > DEFAULT_N_MAX {
        return Err(Error::CapExceeded(format!(
            "integral dimension n={n} exceeds the cap {DEFAULT_N_MAX}"
        )));
    }
    if n == 0 {
        return Ok(QuadratureResult { value: ONE, points_per_dim: m, est_error: 0.0 });
    }
    check_budget(n, m)?;
    let weight = |z: &[Complex64]| -> Result<Complex64> {
        let mut f = ONE;
        for (j, &zj) in z.iter().enumerate() {
            for (k, &zk) in z.iter().enumerate() {
                if j != k {
                    f *= pairwise_weight(zj, zk, q1, q2)?;
                }
            }
        }
        Ok(f)
    };
    let pf = prefactor(q1, q2, n);
    let coarse = pf * torus_mean(n, m / 2, 1.0, weight)?;
    let value = pf * torus_mean(n, m, 1.0, weight)?;
    Ok(QuadratureResult { value, points_per_dim: m, est_error: (value - coarse).norm() })
}

/// First N+1 coefficients of sum_n a_n z^n = exp(sum_{n>=1}
/// (1-(q1 q2)^n) / ((1-q1^n)(1-q2^n)) z^n / n); the reference growth series
/// with radius of convergence 1 (coefficients are positive for real q's in
/// (0,1)).
pub fn a_n_series(q1: Complex64, q2: Complex64, n_terms: u32) -> Vec<Complex64> {
    let mut exponent = vec![Complex64::new(0.0, 0.0); n_terms as usize + 1];
    let mut q1n = ONE;
    let mut q2n = ONE;
    for n in 1..=n_terms as usize {
        q1n *= q1;
        q2n *= q2;
        exponent[n] = (ONE - q1n * q2n) / ((ONE - q1n) * (ONE - q2n)) / (n as f64);
    }
    series_exp(&exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nekrasov::{zn_multiplicative, SumForm};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm() + b.norm())
    }

    #[test]
    fn choose_rho_examples() {
        let mp = MultiplicativeParams::new(c(0.5, 0.0), c(0.5, 0.0), vec![c(1.0, 0.0)], vec![]);
        let spec = choose_rho(&mp).unwrap();
        assert!((spec.rho - 2.0f64.sqrt()).abs() < 1e-14);

        let mp = MultiplicativeParams::new(
            c(0.3, 0.0),
            c(0.2, 0.0),
            vec![c(1.0, 0.0), c(1.2, 0.0)],
            vec![],
        );
        let spec = choose_rho(&mp).unwrap();
        assert!((spec.rho - 2.0).abs() < 1e-14); // sqrt(1.2 * 10/3) = 2
        assert!(1.2 < spec.rho && spec.rho < 10.0 / 3.0);

        // Annulus empty: |q1| max|u| >= min|u|.
        let mp = MultiplicativeParams::new(
            c(0.9, 0.0),
            c(0.2, 0.0),
            vec![c(1.0, 0.0), c(0.5, 0.0)],
            vec![],
        );
        assert!(matches!(choose_rho(&mp), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn integrand_one_dimensional_example() {
        // r=1, q1=q2=0: the one-particle factor is (-u z)/((z-u)(-u)) =
        // z/(z-u), so at z = 2u it equals 2.
        let mp = MultiplicativeParams::new(c(0.0, 0.0), c(0.0, 0.0), vec![c(1.0, 0.0)], vec![]);
        let v = integrand(&[c(2.0, 0.0)], &mp).unwrap();
        assert!(close(v, c(2.0, 0.0), 1e-14));
    }

    #[test]
    fn integrand_is_symmetric() {
        let mp = MultiplicativeParams::new(
            c(0.3, 0.05),
            c(0.3, -0.05),
            vec![c(1.0, 0.0), Complex64::from_polar(1.1, 2.0)],
            vec![c(0.7, 0.2)],
        );
        let z = [
            Complex64::from_polar(1.7, 0.3),
            Complex64::from_polar(1.7, 1.9),
            Complex64::from_polar(1.7, 4.4),
        ];
        let base = integrand(&z, &mp).unwrap();
        for perm in [[1, 0, 2], [2, 1, 0], [1, 2, 0], [2, 0, 1], [0, 2, 1]] {
            let zp = [z[perm[0]], z[perm[1]], z[perm[2]]];
            assert!(close(integrand(&zp, &mp).unwrap(), base, 1e-12), "{perm:?}");
        }
    }

    #[test]
    fn integrand_reports_pole() {
        let mp = MultiplicativeParams::new(c(0.3, 0.0), c(0.2, 0.0), vec![c(1.0, 0.0)], vec![]);
        let z1 = Complex64::from_polar(1.8, 0.4);
        match integrand(&[z1, mp.q1 * z1], &mp) {
            Err(Error::PoleHit(_)) => {}
            other => panic!("expected pole hit, got {other:?}"),
        }
    }

    #[test]
    fn quadrature_reproduces_rank_one_order_one() {
        let mp = MultiplicativeParams::new(c(0.3, 0.0), c(0.2, 0.0), vec![c(1.0, 0.0)], vec![]);
        let want = ((ONE - mp.q1) * (ONE - mp.q2)).finv();
        let got = zn_quadrature(&mp, 1, 64).unwrap();
        assert!(close(got.value, want, 1e-10), "{} vs {want}", got.value);
        assert!(got.est_error < 1e-8);
        assert_eq!(zn_quadrature(&mp, 0, 64).unwrap().value, ONE);
    }

    #[test]
    fn quadrature_matches_combinatorial_rank_two() {
        let mp = MultiplicativeParams::new(
            c(0.3, 0.0),
            c(0.2, 0.0),
            vec![c(1.0, 0.0), Complex64::from_polar(1.05, 2.1)],
            vec![c(0.8, 0.3)],
        );
        let want = zn_multiplicative(&mp, 2, SumForm::N).unwrap();
        let got = zn_quadrature(&mp, 2, 96).unwrap();
        assert!(
            close(got.value, want, 1e-8),
            "{} vs {want}, est {}",
            got.value,
            got.est_error
        );
    }

    #[test]
    fn quadrature_is_rho_independent() {
        let mp = MultiplicativeParams::new(c(0.35, 0.0), c(0.25, 0.0), vec![c(1.0, 0.0)], vec![]);
        // Admissible annulus is (1, 1/0.35); pick two separated radii.
        let v1 = zn_quadrature_at(&mp, 2, 96, 1.35).unwrap();
        let v2 = zn_quadrature_at(&mp, 2, 96, 2.2).unwrap();
        assert!(close(v1.value, v2.value, 1e-9), "{} vs {}", v1.value, v2.value);
    }

    #[test]
    fn quadrature_converges_spectrally() {
        let mp = MultiplicativeParams::new(c(0.55, 0.0), c(0.5, 0.0), vec![c(1.0, 0.0)], vec![]);
        let fine = zn_quadrature(&mp, 2, 128).unwrap();
        let coarse = zn_quadrature(&mp, 2, 32).unwrap();
        assert!(coarse.est_error > 0.0);
        assert!(
            fine.est_error < coarse.est_error * 1e-3,
            "fine {} vs coarse {}",
            fine.est_error,
            coarse.est_error
        );
    }

    #[test]
    fn quadrature_enforces_caps() {
        let mp = MultiplicativeParams::new(c(0.3, 0.0), c(0.2, 0.0), vec![c(1.0, 0.0)], vec![]);
        assert!(matches!(zn_quadrature(&mp, 4, 16), Err(Error::CapExceeded(_))));
        assert!(matches!(
            zn_quadrature_with_cap(&mp, 4, 4096, 4),
            Err(Error::BudgetExceeded(_))
        ));
        assert!(matches!(zn_quadrature(&mp, 1, 7), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn a_sequence_small_orders() {
        let q1 = c(0.3, 0.0);
        let q2 = c(0.2, 0.0);
        let a1_closed = (ONE - q1 * q2) / ((ONE - q1) * (ONE - q2));
        assert_eq!(a_n_quadrature(q1, q2, 0, 64).unwrap().value, ONE);
        let a1 = a_n_quadrature(q1, q2, 1, 64).unwrap();
        assert!(close(a1.value, a1_closed, 1e-12));

        let series = a_n_series(q1, q2, 3);
        assert!(close(series[0], ONE, 1e-15));
        assert!(close(series[1], a1_closed, 1e-14));
        let a2 = a_n_quadrature(q1, q2, 2, 96).unwrap();
        assert!(close(a2.value, series[2], 1e-9), "{} vs {}", a2.value, series[2]);
    }

    #[test]
    fn a_series_degenerate_and_positive() {
        // q1 = q2 = 0: the exponent is sum z^n/n = -log(1-z), so a_n = 1.
        let series = a_n_series(c(0.0, 0.0), c(0.0, 0.0), 8);
        for (n, an) in series.iter().enumerate() {
            assert!(close(*an, ONE, 1e-13), "n={n}: {an}");
        }
        // Real q's in (0,1): positive coefficients.
        for an in a_n_series(c(0.4, 0.0), c(0.25, 0.0), 12) {
            assert!(an.re > 0.0 && an.im.abs() < 1e-13);
        }
    }

    #[test]
    fn adjoint_weight_cancels_base_interaction_at_unit_mass() {
        let q1 = c(0.4, 0.1);
        let q2 = c(0.3, -0.2);
        let zj = Complex64::from_polar(1.3, 0.7);
        let zk = Complex64::from_polar(1.3, 2.9);
        let base = pairwise_weight(zj, zk, q1, q2).unwrap()
            * pairwise_weight(zk, zj, q1, q2).unwrap();
        let adj = adjoint_weight(zj, zk, ONE, q1, q2).unwrap();
        assert!(close(base * adj, ONE, 1e-12), "{}", base * adj);
    }

    #[test]
    fn adjoint_weight_vanishes_at_coincident_points_for_mass_q1() {
        let q1 = c(0.4, 0.0);
        let q2 = c(0.25, 0.0);
        let z = Complex64::from_polar(1.0, 1.1);
        let w = adjoint_weight(z, z, q1, q1, q2).unwrap();
        assert!(w.norm() < 1e-14, "{w}");
    }

    #[test]
    fn adjoint_weight_swap_symmetry() {
        // Every factor is (z_j - c z_k) with the multiplier multiset closed
        // under c -> 1/c and of product 1, in the numerator and denominator
        // separately — so the weight is symmetric under j <-> k outright
        // (no mass inversion needed), and the product over pairs is
        // invariant under any relabeling of the z's.
        let q1 = c(0.4, 0.1);
        let q2 = c(0.3, -0.2);
        let m = Complex64::from_polar(0.8, 0.5);
        let zj = Complex64::from_polar(1.2, 0.4);
        let zk = Complex64::from_polar(1.2, 2.3);
        let a = adjoint_weight(zj, zk, m, q1, q2).unwrap();
        let b = adjoint_weight(zk, zj, m, q1, q2).unwrap();
        assert!(close(a, b, 1e-12), "{a} vs {b}");
    }
}
