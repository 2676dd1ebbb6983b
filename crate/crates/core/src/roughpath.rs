//! Rough paths on grids: iterated-integral levels built from samples,
//! multiplicativity checks, extensions to higher levels and branched
//! (tree-indexed) collections, controlled paths, and driven-equation
//! solvers.
//!
//! Index convention for iterated integrals: in a multi-index the first
//! label is the innermost integral, so level2 component (b, a) is the
//! integral of the b-increment against dx^a, and the linear tree with
//! root a and leaf b matches component (b, a).
//!
//! The lift stores running fine-grid integrals restricted to the coarse
//! grid, so the two- and three-time multiplicative identities hold by
//! cancellation of the prefix values, independent of quadrature error;
//! quadrature accuracy only affects closeness to the analytic integrals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::drivers::Driver;
use crate::error::{Error, Result};
use crate::fields::Fields;
use crate::hopf::reduced_coproduct;
use crate::increments::{delta1, Grid, Inc1, Inc2};
use crate::quadrature::{cumulative_integral, Quadrature};
use crate::reports::{band_sup, LineFit};
use crate::scalar::Real;
use crate::sewing::lambda_fn;
use crate::trees::{enumerate_trees, Forest, Label, Tree};

/// Flat index of level-2 component (b, a), b innermost.
pub fn idx2(d: usize, b: usize, a: usize) -> usize {
    b * d + a
}

/// Flat index of level-3 component (c, b, a), c innermost.
pub fn idx3(d: usize, c: usize, b: usize, a: usize) -> usize {
    (c * d + b) * d + a
}

/// A rough path over a grid: the driving path, its increments, and the
/// second (and optionally third) iterated-integral level.
#[derive(Clone, Debug)]
pub struct RoughPath<R: Real> {
    grid: Grid<R>,
    dim: usize,
    gamma: f64,
    path: Inc1<R>,
    level1: Inc2<R>,
    level2: Inc2<R>,
    level3: Option<Inc2<R>>,
}

impl<R: Real> RoughPath<R> {
    /// Assemble from explicitly given levels; the first level is derived
    /// from the path. No multiplicativity is enforced here, use
    /// [`RoughPath::check_chen`].
    pub fn from_parts(
        path: Inc1<R>,
        level2: Inc2<R>,
        level3: Option<Inc2<R>>,
        gamma: f64,
    ) -> Result<Self> {
        let dim = path.dim();
        if level2.dim() != dim * dim {
            return Err(Error::GridMismatch(format!(
                "level2 carries {} components for a dim-{} path",
                level2.dim(),
                dim
            )));
        }
        if path.grid() != level2.grid() {
            return Err(Error::GridMismatch("path and level2 grids differ".into()));
        }
        if let Some(l3) = &level3 {
            if l3.dim() != dim * dim * dim || l3.grid() != path.grid() {
                return Err(Error::GridMismatch("level3 shape mismatch".into()));
            }
        }
        if !(0.0 < gamma && gamma <= 1.0) {
            return Err(Error::InvalidParam(format!("gamma {gamma} outside (0, 1]")));
        }
        let level1 = delta1(&path)?;
        Ok(Self { grid: path.grid().clone(), dim, gamma, path, level1, level2, level3 })
    }

    /// Lift a finely sampled path: running integrals are accumulated on
    /// the full sample grid and restricted to every `every`-th point.
    /// With the paired quadrature rule, `every` should be even so the
    /// coarse points sit on stencil boundaries.
    pub fn lift(
        x_fine: &Inc1<R>,
        every: usize,
        gamma: f64,
        rule: Quadrature,
        with_level3: bool,
    ) -> Result<Self> {
        let nf = x_fine.grid().len();
        if every == 0 || (nf - 1) % every != 0 {
            return Err(Error::InvalidParam(format!(
                "stride {} does not divide {} fine steps",
                every,
                nf - 1
            )));
        }
        let d = x_fine.dim();
        let tf = x_fine.grid().times().to_vec();
        let comps: Vec<Vec<R>> =
            (0..d).map(|k| (0..nf).map(|i| x_fine.value(i, k)).collect()).collect();

        // fine running integrals of x^b against x^a
        let mut p_fine: Vec<Vec<R>> = Vec::with_capacity(d * d);
        for b in 0..d {
            for a in 0..d {
                p_fine.push(cumulative_integral(rule, &tf, &comps[b], &comps[a])?);
            }
        }

        let nc = (nf - 1) / every + 1;
        let coarse_times: Vec<R> = (0..nc).map(|i| tf[i * every]).collect();
        let coarse = Grid::from_times(coarse_times)?;
        let pick = |v: &[R], i: usize| v[i * every];

        let path = Inc1::from_samples(
            coarse.clone(),
            ndarray::Array2::from_shape_fn((nc, d), |(i, k)| pick(&comps[k], i)),
        )?;

        let mut level2 = Inc2::zeros(coarse.clone(), d * d)?;
        for b in 0..d {
            for a in 0..d {
                let p = &p_fine[idx2(d, b, a)];
                for i in 0..nc {
                    for j in 0..nc {
                        let xa = pick(&comps[a], i) - pick(&comps[a], j);
                        let v = pick(p, i) - pick(p, j) - pick(&comps[b], j) * xa;
                        level2.set(i, j, idx2(d, b, a), v);
                    }
                }
            }
        }

        let level3 = if with_level3 {
            let mut l3 = Inc2::zeros(coarse.clone(), d * d * d)?;
            for c in 0..d {
                for b in 0..d {
                    let p_cb = &p_fine[idx2(d, c, b)];
                    for a in 0..d {
                        let q = cumulative_integral(rule, &tf, p_cb, &comps[a])?;
                        let p_ba = &p_fine[idx2(d, b, a)];
                        for i in 0..nc {
                            for j in 0..nc {
                                let xa = pick(&comps[a], i) - pick(&comps[a], j);
                                let v = pick(&q, i)
                                    - pick(&q, j)
                                    - pick(p_cb, j) * xa
                                    - pick(&comps[c], j) * (pick(p_ba, i) - pick(p_ba, j))
                                    + pick(&comps[c], j) * pick(&comps[b], j) * xa;
                                l3.set(i, j, idx3(d, c, b, a), v);
                            }
                        }
                    }
                }
            }
            Some(l3)
        } else {
            None
        };

        let level1 = delta1(&path)?;
        if !(0.0 < gamma && gamma <= 1.0) {
            return Err(Error::InvalidParam(format!("gamma {gamma} outside (0, 1]")));
        }
        Ok(Self { grid: coarse, dim: d, gamma, path, level1, level2, level3 })
    }

    /// Sample a driver on `oversample` fine steps per coarse step, then
    /// lift onto the coarse grid.
    pub fn lift_driver(
        driver: &Driver,
        coarse: &Grid<R>,
        oversample: usize,
        gamma: f64,
        rule: Quadrature,
        with_level3: bool,
    ) -> Result<Self> {
        let fine = coarse.refine(oversample)?;
        let x = driver.sample(&fine)?;
        Self::lift(&x, oversample, gamma, rule, with_level3)
    }

    pub fn grid(&self) -> &Grid<R> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn path(&self) -> &Inc1<R> {
        &self.path
    }

    pub fn level1(&self) -> &Inc2<R> {
        &self.level1
    }

    pub fn level2(&self) -> &Inc2<R> {
        &self.level2
    }

    pub fn level3(&self) -> Option<&Inc2<R>> {
        self.level3.as_ref()
    }

    /// X^a over (t_i, t_j).
    pub fn value1(&self, i: usize, j: usize, a: usize) -> R {
        self.level1.value(i, j, a)
    }

    /// X^(b,a) over (t_i, t_j), b innermost.
    pub fn value2(&self, i: usize, j: usize, b: usize, a: usize) -> R {
        self.level2.value(i, j, idx2(self.dim, b, a))
    }

    /// X^(c,b,a) over (t_i, t_j), c innermost.
    pub fn value3(&self, i: usize, j: usize, c: usize, b: usize, a: usize) -> Option<R> {
        self.level3.as_ref().map(|l| l.value(i, j, idx3(self.dim, c, b, a)))
    }

    /// Largest multiplicativity residual over sampled ordered triples:
    /// level 2 against products of level 1, and level 3 (when present)
    /// against mixed products. Deterministic for a fixed seed.
    pub fn check_chen(&self, max_samples: usize, seed: u64) -> R {
        use rand::{Rng, SeedableRng};
        let n = self.grid.len();
        let d = self.dim;
        let mut best = R::zero();
        let mut probe = |i: usize, j: usize, k: usize| {
            for b in 0..d {
                for a in 0..d {
                    let delta = self.value2(i, k, b, a)
                        - self.value2(i, j, b, a)
                        - self.value2(j, k, b, a);
                    let rhs = self.value1(i, j, a) * self.value1(j, k, b);
                    best = best.max((delta - rhs).abs());
                }
            }
            if self.level3.is_some() {
                for c in 0..d {
                    for b in 0..d {
                        for a in 0..d {
                            let delta = self.value3(i, k, c, b, a).unwrap()
                                - self.value3(i, j, c, b, a).unwrap()
                                - self.value3(j, k, c, b, a).unwrap();
                            let rhs = self.value2(j, k, c, b) * self.value1(i, j, a)
                                + self.value1(j, k, c) * self.value2(i, j, b, a);
                            best = best.max((delta - rhs).abs());
                        }
                    }
                }
            }
        };
        let total: u128 = if n >= 3 {
            (n as u128) * (n as u128 - 1) * (n as u128 - 2) / 6
        } else {
            0
        };
        if total <= max_samples as u128 {
            for i in 2..n {
                for j in 1..i {
                    for k in 0..j {
                        probe(i, j, k);
                    }
                }
            }
        } else {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut done = 0;
            while done < max_samples {
                let mut idx = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
                idx.sort_unstable();
                if idx[0] < idx[1] && idx[1] < idx[2] {
                    probe(idx[2], idx[1], idx[0]);
                    done += 1;
                }
            }
        }
        best
    }

    /// Add c (t - s) to every diagonal level-2 component. The third
    /// level is invalidated and must be re-extended afterwards.
    pub fn ito_shift(&mut self, c: R) {
        let n = self.grid.len();
        for a in 0..self.dim {
            let comp = idx2(self.dim, a, a);
            for i in 0..n {
                for j in 0..n {
                    let dt = self.grid.t(i) - self.grid.t(j);
                    let v = self.level2.value(i, j, comp) + c * dt;
                    self.level2.set(i, j, comp, v);
                }
            }
        }
        self.level3 = None;
    }

    /// X^a X^b - X^(a,b) - X^(b,a): zero for lifts of sampled paths,
    /// and -2c(t-s) on the diagonal after an ito shift by c.
    pub fn shuffle_defect(&self, a: usize, b: usize) -> Result<Inc2<R>> {
        let n = self.grid.len();
        let mut out = Inc2::zeros(self.grid.clone(), 1)?;
        for i in 0..n {
            for j in 0..n {
                let v = self.value1(i, j, a) * self.value1(i, j, b)
                    - self.value2(i, j, a, b)
                    - self.value2(i, j, b, a);
                out.set(i, j, 0, v);
            }
        }
        Ok(out)
    }

    /// Third level from the second by inverting the coboundary on the
    /// multiplicative defect. The result is normalized to vanishing
    /// sewing part, so it matches a directly lifted third level only
    /// after removing that exact part.
    pub fn extend_level3(&self, tol: Option<R>) -> Result<Inc2<R>> {
        let d = self.dim;
        lambda_fn(
            &self.grid,
            d * d * d,
            |i, j, k, comp| {
                let a = comp % d;
                let b = (comp / d) % d;
                let c = comp / (d * d);
                self.value2(j, k, c, b) * self.value1(i, j, a)
                    + self.value1(j, k, c) * self.value2(i, j, b, a)
            },
            tol,
        )
    }

    /// Tree-indexed extension up to `max_weight`: single-node trees read
    /// off level 1, linear weight-2 trees read off level 2, and every
    /// heavier tree comes from inverting the coboundary on its
    /// coproduct germ, in weight order.
    pub fn extend_branched(&self, max_weight: u32, tol: Option<R>) -> Result<TreeMap<R>> {
        if self.dim > u8::MAX as usize {
            return Err(Error::InvalidParam("driver dimension exceeds label space".into()));
        }
        let n = self.grid.len();
        let mut map: BTreeMap<Tree, Inc2<R>> = BTreeMap::new();
        let mut trees = enumerate_trees(self.dim as u8, max_weight)?;
        trees.sort_by_key(|t| t.weight());
        for tree in trees {
            let w = tree.weight();
            let mut comp = Inc2::zeros(self.grid.clone(), 1)?;
            if w == 1 {
                let a = tree.label().0 as usize;
                for i in 0..n {
                    for j in 0..n {
                        comp.set(i, j, 0, self.value1(i, j, a));
                    }
                }
            } else if w == 2 {
                let a = tree.label().0 as usize;
                let b = tree.children()[0].label().0 as usize;
                for i in 0..n {
                    for j in 0..n {
                        comp.set(i, j, 0, self.value2(i, j, b, a));
                    }
                }
            } else {
                let germ = germ_terms(&tree, &map)?;
                comp = lambda_fn(
                    &self.grid,
                    1,
                    |i, j, k, _| {
                        let mut acc = R::zero();
                        for (coeff, trunk, branches) in &germ {
                            let mut term = R::from_f(*coeff) * trunk.value(i, j, 0);
                            for br in branches {
                                term *= br.value(j, k, 0);
                            }
                            acc += term;
                        }
                        acc
                    },
                    tol,
                )?;
            }
            map.insert(tree, comp);
        }
        Ok(map)
    }

    /// Integral of a one-form against the rough path: germ summation
    /// with first-order compensation, plus the remainder increment.
    pub fn rough_integral(&self, g: &dyn Fields<R>) -> Result<RoughIntegral<R>> {
        if self.gamma <= 1.0 / 3.0 {
            return Err(Error::InvalidParam(format!(
                "second-order integration needs gamma > 1/3, got {}",
                self.gamma
            )));
        }
        if g.arg_dim() != self.dim || g.driver_dim() != self.dim {
            return Err(Error::GridMismatch("one-form dimensions differ from the path".into()));
        }
        let n = self.grid.len();
        let m = g.out_dim();
        let point = |j: usize| -> Vec<R> { (0..self.dim).map(|k| self.path.value(j, k)).collect() };
        let germ = |i: usize, j: usize, x_j: &[R]| -> Vec<R> {
            let mut out = vec![R::zero(); m];
            for a in 0..self.dim {
                let ga = g.eval(a, x_j);
                let xa = self.value1(i, j, a);
                for p in 0..m {
                    out[p] += ga[p] * xa;
                }
                for b in 0..self.dim {
                    let xba = self.value2(i, j, b, a);
                    for p in 0..m {
                        out[p] += g.deriv(a, p, &[b], x_j) * xba;
                    }
                }
            }
            out
        };
        // compensated prefix sums of the one-step germs
        let mut sums = vec![Neumaier::default(); m];
        let mut values = ndarray::Array2::zeros((n, m));
        for i in 1..n {
            let x_prev = point(i - 1);
            let a = germ(i, i - 1, &x_prev);
            for p in 0..m {
                sums[p].add(a[p]);
                values[[i, p]] = sums[p].value();
            }
        }
        let integral = Inc1::from_samples(self.grid.clone(), values)?;
        let mut remainder = Inc2::zeros(self.grid.clone(), m)?;
        for i in 0..n {
            for j in 0..n {
                let x_j = point(j);
                let a = germ(i, j, &x_j);
                for p in 0..m {
                    remainder.set(i, j, p, integral.value(i, p) - integral.value(j, p) - a[p]);
                }
            }
        }
        Ok(RoughIntegral { integral, remainder })
    }

    /// One-pass driven-equation solve with the second-order step.
    pub fn rde_solve(&self, f: &dyn Fields<R>, y0: &[R]) -> Result<Inc1<R>> {
        self.validate_fields(f, y0)?;
        let n = self.grid.len();
        let m = y0.len();
        let mut values = ndarray::Array2::zeros((n, m));
        let mut y = y0.to_vec();
        for p in 0..m {
            values[[0, p]] = y[p];
        }
        for i in 1..n {
            let inc = rde_germ(f, &y, self, i, i - 1);
            for p in 0..m {
                y[p] += inc[p];
                values[[i, p]] = y[p];
            }
        }
        Inc1::from_samples(self.grid.clone(), values)
    }

    /// Fixed-point form of the same step: iterate the global summation
    /// map until it stabilizes. Causality makes it agree with the
    /// one-pass solution after at most one sweep per grid point.
    pub fn rde_solve_picard(
        &self,
        f: &dyn Fields<R>,
        y0: &[R],
        max_iters: usize,
        tol: R,
    ) -> Result<(Inc1<R>, usize)> {
        self.validate_fields(f, y0)?;
        let n = self.grid.len();
        let m = y0.len();
        let mut current: Vec<Vec<R>> = vec![y0.to_vec(); n];
        let mut iters = 0;
        for sweep in 1..=max_iters {
            iters = sweep;
            let mut next: Vec<Vec<R>> = Vec::with_capacity(n);
            next.push(y0.to_vec());
            let mut sums: Vec<Neumaier<R>> = y0.iter().map(|&v| Neumaier::seeded(v)).collect();
            for i in 1..n {
                let inc = rde_germ(f, &current[i - 1], self, i, i - 1);
                let mut row = Vec::with_capacity(m);
                for p in 0..m {
                    sums[p].add(inc[p]);
                    row.push(sums[p].value());
                }
                next.push(row);
            }
            let mut diff = R::zero();
            for i in 0..n {
                for p in 0..m {
                    diff = diff.max((next[i][p] - current[i][p]).abs());
                }
            }
            current = next;
            if diff <= tol {
                break;
            }
        }
        let mut values = ndarray::Array2::zeros((n, m));
        for i in 0..n {
            for p in 0..m {
                values[[i, p]] = current[i][p];
            }
        }
        Ok((Inc1::from_samples(self.grid.clone(), values)?, iters))
    }

    fn validate_fields(&self, f: &dyn Fields<R>, y0: &[R]) -> Result<()> {
        if self.gamma <= 1.0 / 3.0 {
            return Err(Error::InvalidParam(format!(
                "the second-order step needs gamma > 1/3, got {}",
                self.gamma
            )));
        }
        if f.driver_dim() != self.dim {
            return Err(Error::GridMismatch("field count differs from driver dimension".into()));
        }
        if f.arg_dim() != f.out_dim() || f.arg_dim() != y0.len() {
            return Err(Error::GridMismatch("field dimensions differ from the state".into()));
        }
        Ok(())
    }

    /// Serialize to JSON: grid times, path samples, and the origin
    /// columns of the higher levels. Dense entries are rebuilt from the
    /// columns through the multiplicative identities on load.
    pub fn to_json(&self) -> Result<String> {
        let n = self.grid.len();
        let d = self.dim;
        let js = RoughPathJson {
            gamma: self.gamma,
            times: self.grid.times().iter().map(|t| t.to_f()).collect(),
            path: (0..n)
                .map(|i| (0..d).map(|k| self.path.value(i, k).to_f()).collect())
                .collect(),
            level2: (0..d * d)
                .map(|c| (0..n).map(|i| self.level2.value(i, 0, c).to_f()).collect())
                .collect(),
            level3: self.level3.as_ref().map(|l3| {
                (0..d * d * d)
                    .map(|c| (0..n).map(|i| l3.value(i, 0, c).to_f()).collect())
                    .collect()
            }),
        };
        serde_json::to_string_pretty(&js).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Inverse of [`RoughPath::to_json`].
    pub fn from_json(s: &str) -> Result<Self> {
        let js: RoughPathJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let n = js.times.len();
        if n < 2 || js.path.len() != n {
            return Err(Error::Parse("times and path lengths differ".into()));
        }
        let d = js.path[0].len();
        if js.level2.len() != d * d || js.level2.iter().any(|col| col.len() != n) {
            return Err(Error::Parse("level2 column shape mismatch".into()));
        }
        let grid = Grid::from_times(js.times.iter().map(|&t| R::from_f(t)).collect())?;
        let path = Inc1::from_samples(
            grid.clone(),
            ndarray::Array2::from_shape_fn((n, d), |(i, k)| R::from_f(js.path[i][k])),
        )?;
        let x = |i: usize, k: usize| R::from_f(js.path[i][k]);
        let mut level2 = Inc2::zeros(grid.clone(), d * d)?;
        for b in 0..d {
            for a in 0..d {
                let col = &js.level2[idx2(d, b, a)];
                for i in 0..n {
                    for j in 0..n {
                        let xa = x(i, a) - x(j, a);
                        let xb0 = x(j, b) - x(0, b);
                        let v = R::from_f(col[i]) - R::from_f(col[j]) - xa * xb0;
                        level2.set(i, j, idx2(d, b, a), v);
                    }
                }
            }
        }
        let level3 = match &js.level3 {
            None => None,
            Some(cols) => {
                if cols.len() != d * d * d || cols.iter().any(|col| col.len() != n) {
                    return Err(Error::Parse("level3 column shape mismatch".into()));
                }
                let mut l3 = Inc2::zeros(grid.clone(), d * d * d)?;
                for c in 0..d {
                    for b in 0..d {
                        for a in 0..d {
                            let col = &cols[idx3(d, c, b, a)];
                            let col2 = &js.level2[idx2(d, c, b)];
                            for i in 0..n {
                                for j in 0..n {
                                    let xa = x(i, a) - x(j, a);
                                    let xc0 = x(j, c) - x(0, c);
                                    let v = R::from_f(col[i])
                                        - R::from_f(col[j])
                                        - R::from_f(col2[j]) * xa
                                        - xc0 * level2.value(i, j, idx2(d, b, a));
                                    l3.set(i, j, idx3(d, c, b, a), v);
                                }
                            }
                        }
                    }
                }
                Some(l3)
            }
        };
        Self::from_parts(path, level2, level3, js.gamma)
    }
}

/// Tree-indexed component collection.
pub type TreeMap<R> = BTreeMap<Tree, Inc2<R>>;

#[derive(Serialize, Deserialize)]
struct RoughPathJson {
    gamma: f64,
    times: Vec<f64>,
    path: Vec<Vec<f64>>,
    level2: Vec<Vec<f64>>,
    level3: Option<Vec<Vec<f64>>>,
}

/// Result of a rough integral: the running values and the two-parameter
/// remainder against the local germ.
pub struct RoughIntegral<R: Real> {
    pub integral: Inc1<R>,
    pub remainder: Inc2<R>,
}

/// Coproduct germ of one tree, resolved against already-built
/// components: (coefficient, trunk component, branch components).
fn germ_terms<'m, R: Real>(
    tree: &Tree,
    map: &'m TreeMap<R>,
) -> Result<Vec<(f64, &'m Inc2<R>, Vec<&'m Inc2<R>>)>> {
    let reduced = reduced_coproduct(&Forest::single(tree.clone()))?;
    let mut out = Vec::new();
    for ((trunk, branches), c) in reduced.iter() {
        let trunk_tree =
            trunk.as_single_tree().ok_or_else(|| Error::Parse("trunk is not a tree".into()))?;
        let trunk_comp = map
            .get(trunk_tree)
            .ok_or_else(|| Error::MissingLevel { level: trunk_tree.weight() as u8 })?;
        let mut branch_comps = Vec::new();
        for b in branches.trees() {
            branch_comps
                .push(map.get(b).ok_or_else(|| Error::MissingLevel { level: b.weight() as u8 })?);
        }
        let num: f64 = c.numer().to_string().parse().unwrap();
        let den: f64 = c.denom().to_string().parse().unwrap();
        out.push((num / den, trunk_comp, branch_comps));
    }
    Ok(out)
}

/// Largest sampled residual of the tree relation for one tree: the
/// three-time defect of its component against the coproduct germ.
pub fn branched_residual<R: Real>(
    map: &TreeMap<R>,
    tree: &Tree,
    max_samples: usize,
    seed: u64,
) -> Result<R> {
    use rand::{Rng, SeedableRng};
    let comp = map.get(tree).ok_or(Error::MissingLevel { level: tree.weight() as u8 })?;
    let germ = germ_terms(tree, map)?;
    let n = comp.grid().len();
    let mut best = R::zero();
    let mut probe = |i: usize, j: usize, k: usize| {
        let delta = comp.value(i, k, 0) - comp.value(i, j, 0) - comp.value(j, k, 0);
        let mut rhs = R::zero();
        for (coeff, trunk, branches) in &germ {
            let mut term = R::from_f(*coeff) * trunk.value(i, j, 0);
            for br in branches {
                term *= br.value(j, k, 0);
            }
            rhs += term;
        }
        best = best.max((delta - rhs).abs());
    };
    let total: u128 =
        if n >= 3 { (n as u128) * (n as u128 - 1) * (n as u128 - 2) / 6 } else { 0 };
    if total <= max_samples as u128 {
        for i in 2..n {
            for j in 1..i {
                for k in 0..j {
                    probe(i, j, k);
                }
            }
        }
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut done = 0;
        while done < max_samples {
            let mut idx = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
            idx.sort_unstable();
            if idx[0] < idx[1] && idx[1] < idx[2] {
                probe(idx[2], idx[1], idx[0]);
                done += 1;
            }
        }
    }
    Ok(best)
}

/// Second-order step germ for the driven equation.
fn rde_germ<R: Real>(
    f: &dyn Fields<R>,
    y: &[R],
    x: &RoughPath<R>,
    i: usize,
    j: usize,
) -> Vec<R> {
    let d = x.dim();
    let m = y.len();
    let vals: Vec<Vec<R>> = (0..d).map(|a| f.eval(a, y)).collect();
    let mut out = vec![R::zero(); m];
    for a in 0..d {
        let xa = x.value1(i, j, a);
        for p in 0..m {
            out[p] += vals[a][p] * xa;
        }
        for b in 0..d {
            let xba = x.value2(i, j, b, a);
            if xba == R::zero() {
                continue;
            }
            for p in 0..m {
                let mut acc = R::zero();
                for q in 0..m {
                    acc += f.deriv(a, p, &[q], y) * vals[b][q];
                }
                out[p] += acc * xba;
            }
        }
    }
    out
}

/// Fit the level growth bound: Hölder norms against
/// C1 C2^k / (k!)^gamma over the stored levels.
pub fn level_growth_fit(x: &RoughPath<f64>) -> crate::reports::GrowthFit {
    let gamma = x.gamma();
    let mut pts = Vec::new();
    let mut push = |k: usize, norm: f64| {
        if norm > 0.0 && norm.is_finite() {
            let fact: f64 = (1..=k).map(|v| v as f64).product();
            pts.push((k as f64, (norm * fact.powf(gamma)).ln()));
        }
    };
    push(1, x.level1().holder_norm(gamma));
    push(2, x.level2().holder_norm(2.0 * gamma));
    if let Some(l3) = x.level3() {
        push(3, l3.holder_norm(3.0 * gamma));
    }
    let fit = crate::reports::fit_line(&pts);
    crate::reports::GrowthFit {
        c1: fit.intercept.exp(),
        c2: fit.slope.exp(),
        used: pts.len(),
    }
}

/// Fit the branched growth bound: per-weight maxima of the tree-component
/// Hölder norms divided by q_gamma against C1 C2^|tau|.
pub fn branched_growth_fit(map: &TreeMap<f64>, gamma: f64) -> Result<crate::reports::GrowthFit> {
    let mut per_weight: BTreeMap<u32, f64> = BTreeMap::new();
    for (tree, comp) in map {
        let q = crate::hopf::q_gamma(tree, gamma)?;
        let norm = comp.holder_norm(gamma * tree.weight() as f64) / q;
        let e = per_weight.entry(tree.weight()).or_insert(0.0);
        *e = e.max(norm);
    }
    let pts: Vec<(f64, f64)> = per_weight
        .iter()
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(&w, &v)| (w as f64, v.ln()))
        .collect();
    let fit = crate::reports::fit_line(&pts);
    Ok(crate::reports::GrowthFit { c1: fit.intercept.exp(), c2: fit.slope.exp(), used: pts.len() })
}

/// Compensated accumulator.
#[derive(Clone, Copy, Debug)]
struct Neumaier<R: Real> {
    sum: R,
    comp: R,
}

impl<R: Real> Default for Neumaier<R> {
    fn default() -> Self {
        Self { sum: R::zero(), comp: R::zero() }
    }
}

impl<R: Real> Neumaier<R> {
    fn seeded(v: R) -> Self {
        Self { sum: v, comp: R::zero() }
    }

    fn add(&mut self, v: R) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> R {
        self.sum + self.comp
    }
}

// ---------------------------------------------------------------------------
// Controlled paths
// ---------------------------------------------------------------------------

/// A candidate controlled path: the base path plus one derivative
/// component per tree.
pub struct ControlledPath<R: Real> {
    pub base: Inc1<R>,
    pub derivs: BTreeMap<Tree, Inc1<R>>,
}

/// Sup and scale-band slope of one residual.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualStat {
    pub sup: f64,
    pub slope: f64,
}

/// Residual report of a controlled-path check.
#[derive(Clone, Debug, Serialize)]
pub struct ControlledCheck {
    pub residual1: ResidualStat,
    pub residual2: Vec<(String, ResidualStat)>,
}

impl ControlledCheck {
    /// A residual passes when it is flat zero (below `atol`) or decays
    /// with slope at least `min_slope`.
    pub fn passes(&self, min_slope: f64, atol: f64) -> bool {
        let one = |r: &ResidualStat| r.sup <= atol || r.slope >= min_slope;
        one(&self.residual1) && self.residual2.iter().all(|(_, r)| one(r))
    }
}

fn residual_stat(r: &Inc2<f64>, step_counts: &[usize]) -> ResidualStat {
    let bands = band_sup(r, step_counts);
    let sup = bands.iter().fold(0.0f64, |acc, b| acc.max(b.1));
    // drop bands at the roundoff floor before fitting
    let floor = 1e-14;
    let xs: Vec<f64> = bands.iter().filter(|b| b.1 > floor).map(|b| b.0).collect();
    let ys: Vec<f64> = bands.iter().filter(|b| b.1 > floor).map(|b| b.1).collect();
    let LineFit { slope, .. } = band_slope_points(&xs, &ys);
    ResidualStat { sup, slope }
}

fn band_slope_points(xs: &[f64], ys: &[f64]) -> LineFit {
    crate::reports::fit_log_slope(xs, ys)
}

/// Check the controlled-path expansions against tree components.
///
/// Residual 1 is the base increment minus the first-order model
/// sum_rho h^rho_s X^rho_(t,s); residual 2, for each component alpha, is
/// its increment minus sum over trees rho pruning to trunk alpha of
/// c'(rho, alpha, beta) h^rho_s X^beta_(t,s).
pub fn check_controlled<R: Real>(
    cp: &ControlledPath<R>,
    xtrees: &TreeMap<R>,
    step_counts: &[usize],
) -> Result<ControlledCheck> {
    let grid = cp.base.grid();
    let n = grid.len();
    let m = cp.base.dim();
    let grid64 = Grid::from_times(grid.times().iter().map(|t| t.to_f()).collect())?;
    for (tree, h) in &cp.derivs {
        if h.grid() != grid || h.dim() != m {
            return Err(Error::GridMismatch(format!("component {tree} shape mismatch")));
        }
        if !xtrees.contains_key(tree) {
            return Err(Error::MissingLevel { level: tree.weight() as u8 });
        }
    }

    // residual 1
    let mut r1 = Inc2::zeros(grid64.clone(), m)?;
    for i in 0..n {
        for j in 0..n {
            for p in 0..m {
                let mut v = cp.base.value(i, p) - cp.base.value(j, p);
                for (tree, h) in &cp.derivs {
                    v -= h.value(j, p) * xtrees[tree].value(i, j, 0);
                }
                r1.set(i, j, p, v.to_f());
            }
        }
    }

    // residual 2 per component
    let mut r2 = Vec::new();
    for (alpha, h_alpha) in &cp.derivs {
        // expansion terms: trees rho whose reduced coproduct has trunk alpha
        let mut terms: Vec<(f64, &Inc1<R>, Vec<&Inc2<R>>)> = Vec::new();
        for (rho, h_rho) in &cp.derivs {
            if rho == alpha {
                continue;
            }
            let reduced = reduced_coproduct(&Forest::single(rho.clone()))?;
            for ((trunk, branches), c) in reduced.iter() {
                if trunk.as_single_tree() != Some(alpha) {
                    continue;
                }
                let mut branch_comps = Vec::new();
                for b in branches.trees() {
                    branch_comps.push(
                        xtrees
                            .get(b)
                            .ok_or(Error::MissingLevel { level: b.weight() as u8 })?,
                    );
                }
                let num: f64 = c.numer().to_string().parse().unwrap();
                let den: f64 = c.denom().to_string().parse().unwrap();
                terms.push((num / den, h_rho, branch_comps));
            }
        }
        let mut r = Inc2::zeros(grid64.clone(), m)?;
        for i in 0..n {
            for j in 0..n {
                for p in 0..m {
                    let mut v = h_alpha.value(i, p) - h_alpha.value(j, p);
                    for (coeff, h_rho, branches) in &terms {
                        let mut term = R::from_f(*coeff) * h_rho.value(j, p);
                        for br in branches {
                            term *= br.value(i, j, 0);
                        }
                        v -= term;
                    }
                    r.set(i, j, p, v.to_f());
                }
            }
        }
        r2.push((alpha.to_string(), residual_stat(&r, step_counts)));
    }

    Ok(ControlledCheck { residual1: residual_stat(&r1, step_counts), residual2: r2 })
}

/// Build the controlled path generated by constant coefficients: every
/// component is expanded around the grid origin with the given constant
/// tree coefficients. Its check residuals vanish identically.
pub fn constants_controlled<R: Real>(
    grid: &Grid<R>,
    xtrees: &TreeMap<R>,
    base0: &[R],
    h0: &BTreeMap<Tree, Vec<R>>,
) -> Result<ControlledPath<R>> {
    let n = grid.len();
    let m = base0.len();
    for (tree, v) in h0 {
        if v.len() != m {
            return Err(Error::GridMismatch("constant coefficient dimension".into()));
        }
        if !xtrees.contains_key(tree) {
            return Err(Error::MissingLevel { level: tree.weight() as u8 });
        }
    }
    let mut base = ndarray::Array2::zeros((n, m));
    for i in 0..n {
        for p in 0..m {
            let mut v = base0[p];
            for (tree, h) in h0 {
                v += h[p] * xtrees[tree].value(i, 0, 0);
            }
            base[[i, p]] = v;
        }
    }
    let mut derivs = BTreeMap::new();
    for alpha in h0.keys() {
        let mut vals = ndarray::Array2::zeros((n, m));
        for i in 0..n {
            for p in 0..m {
                let mut v = h0[alpha][p];
                for (rho, h) in h0 {
                    if rho == alpha {
                        continue;
                    }
                    let reduced = reduced_coproduct(&Forest::single(rho.clone()))?;
                    for ((trunk, branches), c) in reduced.iter() {
                        if trunk.as_single_tree() != Some(alpha) {
                            continue;
                        }
                        let num: f64 = c.numer().to_string().parse().unwrap();
                        let den: f64 = c.denom().to_string().parse().unwrap();
                        let mut term = R::from_f(num / den) * h[p];
                        for b in branches.trees() {
                            term *= xtrees[b].value(i, 0, 0);
                        }
                        v += term;
                    }
                }
                vals[[i, p]] = v;
            }
        }
        derivs.insert(alpha.clone(), Inc1::from_samples(grid.clone(), vals)?);
    }
    Ok(ControlledPath { base: Inc1::from_samples(grid.clone(), base)?, derivs })
}

/// Convenience: the two d = 1 tree shapes used in low-order controlled
/// expansions.
pub fn dot_tree() -> Tree {
    Tree::leaf(Label(0))
}

pub fn chain2_tree() -> Tree {
    Tree::node(Label(0), vec![Tree::leaf(Label(0))])
}
