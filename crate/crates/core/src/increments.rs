//! Grids and the increment complex: one-, two-, and three-parameter
//! functions of grid times, the coboundary maps between them, cup
//! products, and Hölder-type norms.
//!
//! A one-parameter function f gives the increment (delta f)_(t,s) =
//! f(t) - f(s); a two-parameter a gives (delta a)_(t,u,s) = a(t,s) -
//! a(t,u) - a(u,s). Composing the two maps gives zero, and a
//! two-parameter increment with vanishing delta is exactly a difference
//! f(t) - f(s), recovered by reading off a against the grid origin.
//!
//! Two-parameter data is stored densely over all index pairs and
//! three-parameter data over all index triples, so grid sizes are capped
//! (2048 and 256 points respectively) to keep allocations sane. Only the
//! ordered part (later time first) is ever read.

use ndarray::{Array2, Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest point count for which dense two-parameter storage is allowed.
pub const INC2_CAP: usize = 2048;
/// Largest point count for which dense three-parameter storage is allowed.
pub const INC3_CAP: usize = 256;

/// Finite increasing time grid starting at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<R: Real> {
    times: Vec<R>,
}

impl<R: Real> Grid<R> {
    /// Validating constructor: the first time must be 0 and times must
    /// increase strictly.
    pub fn from_times(times: Vec<R>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidParam("grid needs at least two points".into()));
        }
        if times[0] != R::zero() {
            return Err(Error::InvalidParam("grid must start at 0".into()));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParam("grid times must increase strictly".into()));
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("grid time"));
        }
        Ok(Self { times })
    }

    /// Uniform grid with `steps` equal steps on [0, t_end].
    pub fn uniform(steps: usize, t_end: R) -> Result<Self> {
        if steps == 0 || !(t_end > R::zero()) {
            return Err(Error::InvalidParam("uniform grid needs steps >= 1, t_end > 0".into()));
        }
        let n = R::from_usize(steps).expect("step count fits scalar");
        let times = (0..=steps).map(|i| R::from_usize(i).unwrap() / n * t_end).collect();
        Self::from_times(times)
    }

    /// Dyadic grid with 2^level steps on [0, t_end].
    pub fn dyadic(level: u32, t_end: R) -> Result<Self> {
        Self::uniform(1usize << level, t_end)
    }

    /// Split every interval into `k` equal parts.
    pub fn refine(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParam("refinement factor must be >= 1".into()));
        }
        let kf = R::from_usize(k).unwrap();
        let mut times = Vec::with_capacity((self.times.len() - 1) * k + 1);
        for w in self.times.windows(2) {
            for j in 0..k {
                times.push(w[0] + (w[1] - w[0]) * R::from_usize(j).unwrap() / kf);
            }
        }
        times.push(*self.times.last().unwrap());
        Self::from_times(times)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[R] {
        &self.times
    }

    pub fn t(&self, i: usize) -> R {
        self.times[i]
    }

    pub fn span(&self) -> R {
        *self.times.last().unwrap()
    }

    /// Largest step size.
    pub fn mesh(&self) -> R {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(R::zero(), |a, b| a.max(b))
    }

    /// Index of a grid time, if present (exact comparison).
    pub fn index_of(&self, t: R) -> Option<usize> {
        self.times.iter().position(|&x| x == t)
    }
}

/// Vector-valued function of one grid time.
#[derive(Clone, Debug, PartialEq)]
pub struct Inc1<R: Real> {
    grid: Grid<R>,
    /// (point, component)
    values: Array2<R>,
}

/// Vector-valued function of two grid times (t, s), stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct Inc2<R: Real> {
    grid: Grid<R>,
    /// (t index, s index, component)
    values: Array3<R>,
}

/// Vector-valued function of three grid times (t, u, s), stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct Inc3<R: Real> {
    grid: Grid<R>,
    /// (t index, u index, s index, component)
    values: Array4<R>,
}

impl<R: Real> Inc1<R> {
    pub fn from_samples(grid: Grid<R>, values: Array2<R>) -> Result<Self> {
        if values.nrows() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples on a {}-point grid",
                values.nrows(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid<R>, dim: usize, mut f: impl FnMut(R) -> Vec<R>) -> Result<Self> {
        let mut values = Array2::zeros((grid.len(), dim));
        for (i, &t) in grid.times().iter().enumerate() {
            let row = f(t);
            if row.len() != dim {
                return Err(Error::GridMismatch("component count changed".into()));
            }
            for (k, v) in row.into_iter().enumerate() {
                values[[i, k]] = v;
            }
        }
        Self::from_samples(grid, values)
    }

    pub fn grid(&self) -> &Grid<R> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn value(&self, i: usize, k: usize) -> R {
        self.values[[i, k]]
    }

    pub fn values(&self) -> &Array2<R> {
        &self.values
    }

    pub fn sup_norm(&self) -> R {
        norm_sup(self.values.iter())
    }

    /// CSV text with a `t` column followed by one column per component.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for k in 0..self.dim() {
            out.push_str(&format!(",x{k}"));
        }
        out.push('\n');
        for i in 0..self.grid.len() {
            out.push_str(&format!("{}", self.grid.t(i)));
            for k in 0..self.dim() {
                out.push_str(&format!(",{}", self.values[[i, k]]));
            }
            out.push('\n');
        }
        out
    }
}

impl<R: Real> Inc2<R> {
    pub fn zeros(grid: Grid<R>, dim: usize) -> Result<Self> {
        let n = grid.len();
        if n > INC2_CAP {
            return Err(Error::CapExceeded { what: "two-parameter grid points", cap: INC2_CAP });
        }
        Ok(Self { grid, values: Array3::zeros((n, n, dim)) })
    }

    pub fn from_fn(grid: Grid<R>, dim: usize, mut f: impl FnMut(R, R) -> Vec<R>) -> Result<Self> {
        let mut a = Self::zeros(grid, dim)?;
        let n = a.grid.len();
        for i in 0..n {
            for j in 0..n {
                let row = f(a.grid.t(i), a.grid.t(j));
                for (k, v) in row.into_iter().enumerate() {
                    a.values[[i, j, k]] = v;
                }
            }
        }
        Ok(a)
    }

    pub fn grid(&self) -> &Grid<R> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values.shape()[2]
    }

    /// Entry a_(t_i, t_j), component k.
    pub fn value(&self, i: usize, j: usize, k: usize) -> R {
        self.values[[i, j, k]]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: R) {
        self.values[[i, j, k]] = v;
    }

    pub fn sup_norm(&self) -> R {
        let n = self.grid.len();
        let mut best = R::zero();
        for i in 0..n {
            for j in 0..=i {
                best = best.max(self.entry_norm(i, j));
            }
        }
        best
    }

    /// Euclidean norm over components at one index pair.
    fn entry_norm(&self, i: usize, j: usize) -> R {
        let mut s = R::zero();
        for k in 0..self.dim() {
            let v = self.values[[i, j, k]];
            s += v * v;
        }
        s.sqrt()
    }

    /// sup over ordered pairs of |a_(t,s)| / (t-s)^gamma.
    pub fn holder_norm(&self, gamma: f64) -> R {
        let n = self.grid.len();
        let g = R::from_f(gamma);
        let mut best = R::zero();
        for i in 1..n {
            for j in 0..i {
                let dt = self.grid.t(i) - self.grid.t(j);
                best = best.max(self.entry_norm(i, j) / dt.powf(g));
            }
        }
        best
    }

    /// CSV text with t, s columns then one column per component; ordered
    /// pairs only.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,s");
        for k in 0..self.dim() {
            out.push_str(&format!(",a{k}"));
        }
        out.push('\n');
        for i in 0..self.grid.len() {
            for j in 0..=i {
                out.push_str(&format!("{},{}", self.grid.t(i), self.grid.t(j)));
                for k in 0..self.dim() {
                    out.push_str(&format!(",{}", self.values[[i, j, k]]));
                }
                out.push('\n');
            }
        }
        out
    }
}

impl<R: Real> Inc3<R> {
    pub fn zeros(grid: Grid<R>, dim: usize) -> Result<Self> {
        let n = grid.len();
        if n > INC3_CAP {
            return Err(Error::CapExceeded { what: "three-parameter grid points", cap: INC3_CAP });
        }
        Ok(Self { grid, values: Array4::zeros((n, n, n, dim)) })
    }

    pub fn from_fn(
        grid: Grid<R>,
        dim: usize,
        mut f: impl FnMut(R, R, R) -> Vec<R>,
    ) -> Result<Self> {
        let mut b = Self::zeros(grid, dim)?;
        let n = b.grid.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let row = f(b.grid.t(i), b.grid.t(j), b.grid.t(k));
                    for (c, v) in row.into_iter().enumerate() {
                        b.values[[i, j, k, c]] = v;
                    }
                }
            }
        }
        Ok(b)
    }

    pub fn grid(&self) -> &Grid<R> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values.shape()[3]
    }

    /// Entry b_(t_i, t_j, t_k), component c.
    pub fn value(&self, i: usize, j: usize, k: usize, c: usize) -> R {
        self.values[[i, j, k, c]]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, c: usize, v: R) {
        self.values[[i, j, k, c]] = v;
    }

    fn entry_norm(&self, i: usize, j: usize, k: usize) -> R {
        let mut s = R::zero();
        for c in 0..self.dim() {
            let v = self.values[[i, j, k, c]];
            s += v * v;
        }
        s.sqrt()
    }

    pub fn sup_norm(&self) -> R {
        let n = self.grid.len();
        let mut best = R::zero();
        for i in 0..n {
            for j in 0..=i {
                for k in 0..=j {
                    best = best.max(self.entry_norm(i, j, k));
                }
            }
        }
        best
    }

    /// sup over ordered triples of |b_(t,u,s)| / (t-s)^gamma, measured
    /// against the outer gap.
    pub fn holder_norm(&self, gamma: f64) -> R {
        let n = self.grid.len();
        let g = R::from_f(gamma);
        let mut best = R::zero();
        for i in 2..n {
            for j in 1..i {
                for k in 0..j {
                    let dt = self.grid.t(i) - self.grid.t(k);
                    best = best.max(self.entry_norm(i, j, k) / dt.powf(g));
                }
            }
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Coboundaries
// ---------------------------------------------------------------------------

/// (delta f)_(t,s) = f(t) - f(s).
pub fn delta1<R: Real>(f: &Inc1<R>) -> Result<Inc2<R>> {
    let mut a = Inc2::zeros(f.grid().clone(), f.dim())?;
    let n = f.grid().len();
    for i in 0..n {
        for j in 0..n {
            for k in 0..f.dim() {
                a.values[[i, j, k]] = f.value(i, k) - f.value(j, k);
            }
        }
    }
    Ok(a)
}

/// (delta a)_(t,u,s) = a(t,s) - a(t,u) - a(u,s).
pub fn delta2<R: Real>(a: &Inc2<R>) -> Result<Inc3<R>> {
    let mut b = Inc3::zeros(a.grid().clone(), a.dim())?;
    let n = a.grid().len();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for c in 0..a.dim() {
                    b.values[[i, j, k, c]] =
                        a.value(i, k, c) - a.value(i, j, c) - a.value(j, k, c);
                }
            }
        }
    }
    Ok(b)
}

/// Largest norm of (delta b)_(t,u,v,s) = b(u,v,s) - b(t,v,s) + b(t,u,s)
/// - b(t,u,v) over ordered index 4-tuples, sampled when the grid has too
/// many. Deterministic for a fixed seed.
pub fn delta3_residual<R: Real>(b: &Inc3<R>, max_samples: usize, seed: u64) -> R {
    delta3_residual_fn(b.grid().len(), b.dim(), |i, j, k, c| b.value(i, j, k, c), max_samples, seed)
        .0
}

/// Same residual over a three-parameter value closure that never exists
/// densely. Returns the largest residual norm together with the largest
/// entry magnitude encountered, for scale-aware tolerances.
pub fn delta3_residual_fn<R: Real>(
    n: usize,
    dim: usize,
    value: impl Fn(usize, usize, usize, usize) -> R,
    max_samples: usize,
    seed: u64,
) -> (R, R) {
    let total: u128 = if n >= 4 {
        (n as u128) * (n as u128 - 1) * (n as u128 - 2) * (n as u128 - 3) / 24
    } else {
        0
    };
    let mut best = R::zero();
    let mut scale = R::zero();
    let mut probe = |i: usize, j: usize, k: usize, l: usize| {
        let mut s = R::zero();
        for c in 0..dim {
            let (e1, e2, e3, e4) =
                (value(j, k, l, c), value(i, k, l, c), value(i, j, l, c), value(i, j, k, c));
            for e in [e1, e2, e3, e4] {
                scale = scale.max(e.abs());
            }
            let v = e1 - e2 + e3 - e4;
            s += v * v;
        }
        best = best.max(s.sqrt());
    };
    if total <= max_samples as u128 {
        for i in 3..n {
            for j in 2..i {
                for k in 1..j {
                    for l in 0..k {
                        probe(i, j, k, l);
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut done = 0usize;
        while done < max_samples {
            let mut idx = [0usize; 4];
            for slot in idx.iter_mut() {
                *slot = rng.gen_range(0..n);
            }
            idx.sort_unstable();
            if idx[0] < idx[1] && idx[1] < idx[2] && idx[2] < idx[3] {
                probe(idx[3], idx[2], idx[1], idx[0]);
                done += 1;
            }
        }
    }
    (best, scale)
}

// ---------------------------------------------------------------------------
// Cup products
// ---------------------------------------------------------------------------

fn cup_dims(a: usize, b: usize) -> Result<usize> {
    match (a, b) {
        (x, y) if x == y => Ok(x),
        (1, y) => Ok(y),
        (x, 1) => Ok(x),
        _ => Err(Error::GridMismatch(format!("cup product dims {a} vs {b}"))),
    }
}

fn pick(row_dim: usize, k: usize) -> usize {
    if row_dim == 1 {
        0
    } else {
        k
    }
}

/// (g h)_(t,s) = g(t) h(t,s), componentwise with broadcast from dim 1.
pub fn cup_12<R: Real>(g: &Inc1<R>, h: &Inc2<R>) -> Result<Inc2<R>> {
    if g.grid() != h.grid() {
        return Err(Error::GridMismatch("cup product on different grids".into()));
    }
    let dim = cup_dims(g.dim(), h.dim())?;
    let n = g.grid().len();
    let mut out = Inc2::zeros(g.grid().clone(), dim)?;
    for i in 0..n {
        for j in 0..n {
            for k in 0..dim {
                out.values[[i, j, k]] = g.value(i, pick(g.dim(), k))
                    * h.value(i, j, pick(h.dim(), k));
            }
        }
    }
    Ok(out)
}

/// (g h)_(t,s) = g(t,s) h(s), componentwise with broadcast from dim 1.
pub fn cup_21<R: Real>(g: &Inc2<R>, h: &Inc1<R>) -> Result<Inc2<R>> {
    if g.grid() != h.grid() {
        return Err(Error::GridMismatch("cup product on different grids".into()));
    }
    let dim = cup_dims(g.dim(), h.dim())?;
    let n = g.grid().len();
    let mut out = Inc2::zeros(g.grid().clone(), dim)?;
    for i in 0..n {
        for j in 0..n {
            for k in 0..dim {
                out.values[[i, j, k]] = g.value(i, j, pick(g.dim(), k))
                    * h.value(j, pick(h.dim(), k));
            }
        }
    }
    Ok(out)
}

/// (g h)_(t,u,s) = g(t,u) h(u,s), componentwise with broadcast from dim 1.
pub fn cup_22<R: Real>(g: &Inc2<R>, h: &Inc2<R>) -> Result<Inc3<R>> {
    if g.grid() != h.grid() {
        return Err(Error::GridMismatch("cup product on different grids".into()));
    }
    let dim = cup_dims(g.dim(), h.dim())?;
    let n = g.grid().len();
    let mut out = Inc3::zeros(g.grid().clone(), dim)?;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for c in 0..dim {
                    out.values[[i, j, k, c]] = g.value(i, j, pick(g.dim(), c))
                        * h.value(j, k, pick(h.dim(), c));
                }
            }
        }
    }
    Ok(out)
}

/// Rebuild a one-parameter function from an increment with vanishing
/// delta: f(t_i) = f0 + a(t_i, t_0).
pub fn reconstruct<R: Real>(a: &Inc2<R>, f0: &[R]) -> Result<Inc1<R>> {
    if f0.len() != a.dim() {
        return Err(Error::GridMismatch("base value dimension".into()));
    }
    let n = a.grid().len();
    let mut values = Array2::zeros((n, a.dim()));
    for i in 0..n {
        for k in 0..a.dim() {
            values[[i, k]] = f0[k] + a.value(i, 0, k);
        }
    }
    Inc1::from_samples(a.grid().clone(), values)
}

fn norm_sup<'a, R: Real>(iter: impl Iterator<Item = &'a R>) -> R {
    iter.fold(R::zero(), |acc, &v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid<f64> {
        Grid::uniform(n, 1.0).unwrap()
    }

    #[test]
    fn grid_constructors_and_accessors() {
        let g = grid(4);
        assert_eq!(g.len(), 5);
        assert_eq!(g.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.span(), 1.0);
        assert_eq!(g.mesh(), 0.25);
        assert_eq!(g.index_of(0.5), Some(2));
        assert_eq!(g.index_of(0.3), None);

        let d = Grid::<f64>::dyadic(3, 2.0).unwrap();
        assert_eq!(d.len(), 9);
        assert_eq!(d.mesh(), 0.25);

        let r = g.refine(2).unwrap();
        assert_eq!(r.len(), 9);
        assert_abs_diff_eq!(r.t(1), 0.125, epsilon = 1e-15);
        assert_eq!(r.span(), 1.0);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::from_times(vec![0.0]).is_err());
        assert!(Grid::from_times(vec![0.1, 0.2]).is_err());
        assert!(Grid::from_times(vec![0.0, 0.2, 0.2]).is_err());
        assert!(Grid::from_times(vec![0.0, 0.3, 0.2]).is_err());
        assert!(Grid::<f64>::uniform(0, 1.0).is_err());
    }

    #[test]
    fn caps_are_enforced() {
        let big = Grid::uniform(INC2_CAP, 1.0).unwrap();
        assert!(matches!(
            Inc2::zeros(big, 1),
            Err(Error::CapExceeded { cap: INC2_CAP, .. })
        ));
        let big3 = Grid::uniform(INC3_CAP, 1.0).unwrap();
        assert!(matches!(
            Inc3::zeros(big3, 1),
            Err(Error::CapExceeded { cap: INC3_CAP, .. })
        ));
    }

    #[test]
    fn delta1_of_t_squared() {
        let f = Inc1::from_fn(grid(8), 1, |t| vec![t * t]).unwrap();
        let a = delta1(&f).unwrap();
        for i in 0..9 {
            for j in 0..=i {
                let (t, s) = (a.grid().t(i), a.grid().t(j));
                assert_abs_diff_eq!(a.value(i, j, 0), t * t - s * s, epsilon = 1e-15);
            }
        }
    }

    /// a_(t,s) = (t-s)^2 has delta a_(t,u,s) = +2 (t-u)(u-s).
    #[test]
    fn delta2_of_square_gap() {
        let a = Inc2::from_fn(grid(6), 1, |t, s| vec![(t - s) * (t - s)]).unwrap();
        let b = delta2(&a).unwrap();
        for i in 0..7 {
            for j in 0..=i {
                for k in 0..=j {
                    let (t, u, s) = (b.grid().t(i), b.grid().t(j), b.grid().t(k));
                    assert_abs_diff_eq!(
                        b.value(i, j, k, 0),
                        2.0 * (t - u) * (u - s),
                        epsilon = 1e-14
                    );
                }
            }
        }
    }

    #[test]
    fn delta2_after_delta1_vanishes() {
        let f = Inc1::from_fn(grid(10), 2, |t| vec![(3.0 * t).sin(), t * t * t - t]).unwrap();
        let b = delta2(&delta1(&f).unwrap()).unwrap();
        assert!(b.sup_norm() < 1e-14);
    }

    #[test]
    fn delta3_of_delta2_vanishes() {
        let a = Inc2::from_fn(grid(12), 1, |t, s| vec![(t - s) * (t + 2.0 * s).cos()]).unwrap();
        let b = delta2(&a).unwrap();
        assert!(delta3_residual(&b, 100_000, 7) < 1e-14);
    }

    /// delta kills exactly the increments of one-parameter functions, and
    /// reading the increment against the grid origin recovers f.
    #[test]
    fn exactness_reconstruction() {
        let f = Inc1::from_fn(grid(9), 2, |t| vec![t.exp(), 1.0 + t]).unwrap();
        let a = delta1(&f).unwrap();
        assert!(delta2(&a).unwrap().sup_norm() < 1e-13);
        let g = reconstruct(&a, &[1.0, 1.0]).unwrap();
        for i in 0..f.grid().len() {
            for k in 0..2 {
                assert_abs_diff_eq!(g.value(i, k), f.value(i, k), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn holder_norms_frozen_values() {
        // delta of f(t) = t: sup (t-s)^(1-gamma) = 1 on [0,1]
        let f = Inc1::from_fn(grid(16), 1, |t| vec![t]).unwrap();
        let a = delta1(&f).unwrap();
        assert_abs_diff_eq!(a.holder_norm(0.5), 1.0, epsilon = 1e-12);
        // a = (t-s)^2: gamma-norm is sup (t-s)^(2-gamma)
        let a = Inc2::from_fn(grid(16), 1, |t, s| vec![(t - s) * (t - s)]).unwrap();
        assert_abs_diff_eq!(a.holder_norm(1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.holder_norm(0.5), 1.0, epsilon = 1e-12);
        // its delta measured with the outer gap: sup 2(t-u)(u-s)/(t-s)
        // = sup (t-s)/2 at the midpoint split
        let b = delta2(&a).unwrap();
        assert_abs_diff_eq!(b.holder_norm(1.0), 0.5, epsilon = 1e-12);
        // sup norms
        assert_abs_diff_eq!(a.sup_norm(), 1.0, epsilon = 1e-15);
    }

    /// The increment a_(t,s) = (delta g)_(t,s) h(s) satisfies
    /// delta a = -(delta g) cup (delta h).
    #[test]
    fn rank_one_leibniz() {
        let g = Inc1::from_fn(grid(8), 1, |t| vec![(2.0 * t).sin()]).unwrap();
        let h = Inc1::from_fn(grid(8), 1, |t| vec![t * t + 1.0]).unwrap();
        let dg = delta1(&g).unwrap();
        let a = cup_21(&dg, &h).unwrap();
        let lhs = delta2(&a).unwrap();
        let rhs = cup_22(&dg, &delta1(&h).unwrap()).unwrap();
        let n = lhs.grid().len();
        for i in 0..n {
            for j in 0..=i {
                for k in 0..=j {
                    assert_abs_diff_eq!(
                        lhs.value(i, j, k, 0),
                        -rhs.value(i, j, k, 0),
                        epsilon = 1e-13
                    );
                }
            }
        }
    }

    #[test]
    fn cup_broadcasts_scalar_factor() {
        let g = Inc1::from_fn(grid(4), 1, |t| vec![t + 1.0]).unwrap();
        let h = Inc2::from_fn(grid(4), 2, |t, s| vec![t - s, (t - s) * 2.0]).unwrap();
        let out = cup_12(&g, &h).unwrap();
        assert_eq!(out.dim(), 2);
        let (i, j) = (3, 1);
        let (t, s) = (out.grid().t(i), out.grid().t(j));
        assert_abs_diff_eq!(out.value(i, j, 0), (t + 1.0) * (t - s), epsilon = 1e-15);
        assert_abs_diff_eq!(out.value(i, j, 1), (t + 1.0) * (t - s) * 2.0, epsilon = 1e-15);
        // mismatched non-unit dims are rejected
        let g3 = Inc1::from_fn(grid(4), 3, |t| vec![t, t, t]).unwrap();
        assert!(cup_12(&g3, &h).is_err());
    }

    #[test]
    fn csv_shapes() {
        let f = Inc1::from_fn(grid(2), 2, |t| vec![t, -t]).unwrap();
        let csv = f.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x0,x1");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,0,-0");

        let a = delta1(&f).unwrap();
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,s,a0,a1");
        // ordered pairs of a 3-point grid: 6 rows
        assert_eq!(lines.len(), 7);
    }

    #[test]
    fn delta3_sampling_is_deterministic() {
        let b = Inc3::from_fn(grid(40), 1, |t, u, s| vec![t * u * s + u]).unwrap();
        let r1 = delta3_residual(&b, 500, 42);
        let r2 = delta3_residual(&b, 500, 42);
        assert_eq!(r1, r2);
        assert!(r1 > 0.0);
    }

    proptest! {
        #[test]
        fn prop_delta_delta_zero(coeffs in proptest::collection::vec(-2.0f64..2.0, 4)) {
            let f = Inc1::from_fn(grid(7), 1, |t| {
                vec![coeffs[0] + coeffs[1] * t + coeffs[2] * t * t + coeffs[3] * (t).sin()]
            }).unwrap();
            let b = delta2(&delta1(&f).unwrap()).unwrap();
            prop_assert!(b.sup_norm() < 1e-13);
        }

        #[test]
        fn prop_reconstruct_round_trip(vals in proptest::collection::vec(-5.0f64..5.0, 6)) {
            let g = grid(5);
            let mut arr = Array2::zeros((6, 1));
            for (i, v) in vals.iter().enumerate() {
                arr[[i, 0]] = *v;
            }
            let f = Inc1::from_samples(g, arr).unwrap();
            let a = delta1(&f).unwrap();
            let g2 = reconstruct(&a, &[vals[0]]).unwrap();
            for i in 0..6 {
                prop_assert!((g2.value(i, 0) - f.value(i, 0)).abs() < 1e-12);
            }
        }
    }
}
