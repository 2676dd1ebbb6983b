//! The sewing construction on grids: the per-step summation operator,
//! its complement, and the inverse of the coboundary on closed
//! three-parameter increments.
//!
//! On a finite grid, summing a two-parameter increment over consecutive
//! steps produces prefix sums F, and the exact increment F(t) - F(s) is
//! the grid sewing limit. It is idempotent and reproduces every exact
//! increment. For a closed three-parameter h (vanishing delta), reading
//! h against the grid origin gives a two-parameter b with delta b = h;
//! removing its sewing part leaves the unique preimage whose sewing
//! part vanishes.

use crate::error::{Error, Result};
use crate::increments::{delta3_residual_fn, Grid, Inc2, Inc3};
use crate::scalar::Real;

/// Sample budget for the closedness precondition check.
const CLOSEDNESS_SAMPLES: usize = 100_000;
const CLOSEDNESS_SEED: u64 = 0x5e317;

/// Per-step prefix sums of a two-parameter increment, one cumulative
/// value per grid point and component. F(t_0) = 0.
pub fn step_sums<R: Real>(a: &Inc2<R>) -> Vec<Vec<R>> {
    let n = a.grid().len();
    let dim = a.dim();
    let mut f = vec![vec![R::zero(); dim]; n];
    for i in 1..n {
        for k in 0..dim {
            f[i][k] = f[i - 1][k] + a.value(i, i - 1, k);
        }
    }
    f
}

/// Grid sewing limit: the exact increment F(t) - F(s) of the per-step
/// prefix sums of a.
pub fn sew_limit<R: Real>(a: &Inc2<R>) -> Result<Inc2<R>> {
    let f = step_sums(a);
    let n = a.grid().len();
    let dim = a.dim();
    let mut out = Inc2::zeros(a.grid().clone(), dim)?;
    for i in 0..n {
        for j in 0..n {
            for k in 0..dim {
                out.set(i, j, k, f[i][k] - f[j][k]);
            }
        }
    }
    Ok(out)
}

/// Split a into its sewing part and the remainder a - sew(a). The
/// remainder vanishes on every single step, and its delta equals the
/// delta of a.
pub fn split_exact<R: Real>(a: &Inc2<R>) -> Result<(Inc2<R>, Inc2<R>)> {
    let sew = sew_limit(a)?;
    let n = a.grid().len();
    let mut rem = Inc2::zeros(a.grid().clone(), a.dim())?;
    for i in 0..n {
        for j in 0..n {
            for k in 0..a.dim() {
                rem.set(i, j, k, a.value(i, j, k) - sew.value(i, j, k));
            }
        }
    }
    Ok((sew, rem))
}

/// Inverse of the coboundary on closed h: the unique two-parameter b
/// with delta b = h and vanishing sewing part.
///
/// Closedness is a precondition, checked on sampled ordered 4-tuples
/// against `tol` (default 1e-10 times the sup norm of h, floored at
/// 1e-14 for exactly-zero inputs).
pub fn lambda<R: Real>(h: &Inc3<R>, tol: Option<R>) -> Result<Inc2<R>> {
    lambda_fn(h.grid(), h.dim(), |i, j, k, c| h.value(i, j, k, c), tol)
}

/// Closure form of the coboundary inverse for three-parameter values
/// too large to store densely; `value(i, j, k, c)` is component c at the
/// index triple (i, j, k).
pub fn lambda_fn<R: Real>(
    grid: &Grid<R>,
    dim: usize,
    value: impl Fn(usize, usize, usize, usize) -> R,
    tol: Option<R>,
) -> Result<Inc2<R>> {
    let (residual, scale) =
        delta3_residual_fn(grid.len(), dim, &value, CLOSEDNESS_SAMPLES, CLOSEDNESS_SEED);
    let tol = tol.unwrap_or_else(|| (R::from_f(1e-10) * scale).max(R::from_f(1e-14)));
    if residual > tol {
        return Err(Error::NotClosed { residual: residual.to_f(), tol: tol.to_f() });
    }
    // b(t, s) = -h(t, s, t_0) satisfies delta b = h when h is closed
    let n = grid.len();
    let mut b = Inc2::zeros(grid.clone(), dim)?;
    for i in 0..n {
        for j in 0..n {
            for k in 0..dim {
                b.set(i, j, k, -value(i, j, 0, k));
            }
        }
    }
    let sew = sew_limit(&b)?;
    let mut out = Inc2::zeros(grid.clone(), dim)?;
    for i in 0..n {
        for j in 0..n {
            for k in 0..dim {
                out.set(i, j, k, b.value(i, j, k) - sew.value(i, j, k));
            }
        }
    }
    Ok(out)
}

/// Convergence study of the sewing part at the grid endpoints: for each
/// step count, the endpoint value of sew(a) built from sampling `a` on a
/// uniform grid over [0, t_end].
pub fn endpoint_sums<R: Real>(
    steps: &[usize],
    t_end: R,
    dim: usize,
    mut a: impl FnMut(R, R) -> Vec<R>,
) -> Result<Vec<Vec<R>>> {
    let mut out = Vec::with_capacity(steps.len());
    for &n in steps {
        let grid = Grid::uniform(n, t_end)?;
        let mut acc = vec![R::zero(); dim];
        for i in 1..grid.len() {
            let row = a(grid.t(i), grid.t(i - 1));
            for (k, v) in row.into_iter().enumerate() {
                acc[k] += v;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::{delta1, delta2, Inc1};
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Grid<f64> {
        Grid::uniform(n, 1.0).unwrap()
    }

    fn sup_diff(a: &Inc2<f64>, b: &Inc2<f64>) -> f64 {
        let n = a.grid().len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                for k in 0..a.dim() {
                    best = best.max((a.value(i, j, k) - b.value(i, j, k)).abs());
                }
            }
        }
        best
    }

    #[test]
    fn sewing_fixes_exact_increments() {
        let f = Inc1::from_fn(grid(20), 2, |t| vec![(2.0 * t).sin(), t * t]).unwrap();
        let a = delta1(&f).unwrap();
        let s = sew_limit(&a).unwrap();
        assert!(sup_diff(&a, &s) < 1e-14);
    }

    #[test]
    fn sewing_is_idempotent() {
        let a = Inc2::from_fn(grid(24), 1, |t, s| vec![(t - s) + (t - s) * (t - s)]).unwrap();
        let s1 = sew_limit(&a).unwrap();
        let s2 = sew_limit(&s1).unwrap();
        assert!(sup_diff(&s1, &s2) < 1e-14);
    }

    #[test]
    fn split_parts_recombine() {
        let a = Inc2::from_fn(grid(10), 1, |t, s| vec![(t - s).powf(1.5) + t - s]).unwrap();
        let (sew, rem) = split_exact(&a).unwrap();
        let n = a.grid().len();
        for i in 0..n {
            for j in 0..=i {
                assert_abs_diff_eq!(
                    sew.value(i, j, 0) + rem.value(i, j, 0),
                    a.value(i, j, 0),
                    epsilon = 1e-14
                );
            }
        }
        // the remainder vanishes on single steps
        for i in 1..n {
            assert_abs_diff_eq!(rem.value(i, i - 1, 0), 0.0, epsilon = 1e-15);
        }
        // both parts have the same delta as a splits demand
        let d_rem = delta2(&rem).unwrap();
        let d_a = delta2(&a).unwrap();
        for i in 0..n {
            for j in 0..=i {
                for k in 0..=j {
                    assert_abs_diff_eq!(
                        d_rem.value(i, j, k, 0),
                        d_a.value(i, j, k, 0),
                        epsilon = 1e-13
                    );
                }
            }
        }
    }

    #[test]
    fn lambda_inverts_delta() {
        // h = delta a is closed; lambda h must satisfy delta(lambda h) = h
        let a = Inc2::from_fn(grid(16), 2, |t, s| {
            vec![(t - s) * (1.0 + t + s), (t * t - s * s) * s]
        })
        .unwrap();
        let h = delta2(&a).unwrap();
        let lh = lambda(&h, None).unwrap();
        let dlh = delta2(&lh).unwrap();
        let n = h.grid().len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                for k in 0..=j {
                    for c in 0..2 {
                        best = best.max((dlh.value(i, j, k, c) - h.value(i, j, k, c)).abs());
                    }
                }
            }
        }
        assert!(best < 1e-13, "delta lambda h differs from h by {best}");
        // normalization: the sewing part of lambda h vanishes
        assert!(sew_limit(&lh).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn lambda_is_linear() {
        let a1 = Inc2::from_fn(grid(12), 1, |t, s| vec![(t - s) * t.cos()]).unwrap();
        let a2 = Inc2::from_fn(grid(12), 1, |t, s| vec![(t - s) * (s + 2.0) * (s + t)]).unwrap();
        let h1 = delta2(&a1).unwrap();
        let h2 = delta2(&a2).unwrap();
        let mut combo = Inc3::zeros(grid(12), 1).unwrap();
        let n = 13;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    combo.set(i, j, k, 0, 3.0 * h1.value(i, j, k, 0) - 0.5 * h2.value(i, j, k, 0));
                }
            }
        }
        let l1 = lambda(&h1, None).unwrap();
        let l2 = lambda(&h2, None).unwrap();
        let lc = lambda(&combo, None).unwrap();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                let expect = 3.0 * l1.value(i, j, 0) - 0.5 * l2.value(i, j, 0);
                best = best.max((lc.value(i, j, 0) - expect).abs());
            }
        }
        assert!(best < 1e-13);
    }

    /// Any preimage of h differs from lambda h by an exact increment;
    /// lambda h is singled out by its vanishing sewing part.
    #[test]
    fn lambda_uniqueness_normalization() {
        let a = Inc2::from_fn(grid(14), 1, |t, s| vec![(t - s) * (t + 1.0) * (s + 1.0)]).unwrap();
        let h = delta2(&a).unwrap();
        let lh = lambda(&h, None).unwrap();
        // a itself is a preimage: a - lambda h must be closed (delta = 0)
        let n = 15;
        let mut diff = Inc2::zeros(grid(14), 1).unwrap();
        for i in 0..n {
            for j in 0..n {
                diff.set(i, j, 0, a.value(i, j, 0) - lh.value(i, j, 0));
            }
        }
        assert!(delta2(&diff).unwrap().sup_norm() < 1e-13);
        // and sew recovers that exact part entirely
        let (sew, rem) = split_exact(&diff).unwrap();
        assert!(rem.sup_norm() < 1e-13);
        assert!(sup_diff(&sew, &diff) < 1e-13);
    }

    #[test]
    fn lambda_rejects_non_closed_input() {
        let h = Inc3::from_fn(grid(8), 1, |t, u, s| vec![t * u * s + 1.0]).unwrap();
        match lambda(&h, None) {
            Err(Error::NotClosed { residual, tol }) => {
                assert!(residual > tol);
            }
            other => panic!("expected NotClosed, got {other:?}"),
        }
    }

    /// theta = 1.5 perturbation: endpoint sums converge to the exact part
    /// at rate N^(1-theta) = N^(-1/2).
    #[test]
    fn refinement_rate_of_endpoint_sums() {
        let steps = [64usize, 256, 1024, 4096];
        let sums = endpoint_sums(&steps, 1.0, 1, |t: f64, s: f64| {
            vec![(t - s) + (t - s).powf(1.5)]
        })
        .unwrap();
        let errs: Vec<f64> = sums.iter().map(|v| (v[0] - 1.0).abs()).collect();
        // consecutive ratios are 4x in N, so errors shrink by ~2x
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (1.8..2.2).contains(&ratio),
                "expected halving, got ratio {ratio} in {errs:?}"
            );
        }
    }
}
