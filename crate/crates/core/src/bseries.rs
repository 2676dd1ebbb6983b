//! Tree-indexed iterated integrals of smooth paths, closed forms on the
//! identity path, elementary differentials, and truncated series
//! solutions of driven equations.
//!
//! Integrals here are genuinely iterated: each component is integrated
//! from its base point with the integrand rebuilt from lower-weight
//! components, so the tree relation holds only up to quadrature error.
//! This is the counterpart of the prefix-restricted construction in
//! `roughpath`, where the relations are exact and accuracy is the
//! approximate part.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::fields::Fields;
use crate::hopf::{reduced_coproduct, shuffle, Word};
use crate::increments::{Grid, Inc1};
use crate::quadrature::{cumulative_integral, Quadrature};
use crate::scalar::Real;
use crate::trees::{enumerate_trees, Forest, Label, Tree};

/// Cap on derivative multi-indices per node in elementary differentials.
pub const DIFF_CAP: usize = 10_000;

/// Iterated integrals of a sampled path, indexed by trees, stored for
/// every grid point against a set of base points.
pub struct TreeIntegrals<R: Real> {
    grid: Grid<R>,
    path: Inc1<R>,
    bases: Vec<usize>,
    values: BTreeMap<Tree, Array2<R>>,
}

/// Trees ordered by weight with resolved child positions, shared by the
/// integral recursions.
struct TreePlan {
    trees: Vec<Tree>,
    labels: Vec<usize>,
    child_pos: Vec<Vec<usize>>,
}

fn max_label(t: &Tree) -> u8 {
    t.children().iter().map(max_label).fold(t.label().0, u8::max)
}

/// Close a tree set under coproduct components.
pub fn component_closure(trees: &[Tree]) -> Result<Vec<Tree>> {
    let mut seen: BTreeSet<Tree> = BTreeSet::new();
    let mut stack: Vec<Tree> = trees.to_vec();
    while let Some(t) = stack.pop() {
        if !seen.insert(t.clone()) {
            continue;
        }
        let reduced = reduced_coproduct(&Forest::single(t))?;
        for ((trunk, branches), _) in reduced.iter() {
            if let Some(tt) = trunk.as_single_tree() {
                stack.push(tt.clone());
            }
            for b in branches.trees() {
                stack.push(b.clone());
            }
        }
    }
    let mut all: Vec<Tree> = seen.into_iter().collect();
    all.sort_by_key(|t| t.weight());
    Ok(all)
}

fn make_plan(all: Vec<Tree>) -> TreePlan {
    let pos: BTreeMap<Tree, usize> = all.iter().cloned().zip(0..).collect();
    let labels = all.iter().map(|t| t.label().0 as usize).collect();
    let child_pos = all
        .iter()
        .map(|t| t.children().iter().map(|c| pos[c]).collect())
        .collect();
    TreePlan { trees: all, labels, child_pos }
}

/// Values of every planned tree over [t_lo, t_hi], based at t_lo, on the
/// fine grid. Children precede parents by weight ordering.
fn fine_values<R: Real>(
    plan: &TreePlan,
    tf: &[R],
    comps: &[Vec<R>],
    lo: usize,
    hi: usize,
    rule: Quadrature,
) -> Result<Vec<Vec<R>>> {
    let len = hi - lo + 1;
    let mut vals: Vec<Vec<R>> = Vec::with_capacity(plan.trees.len());
    for (ti, tree) in plan.trees.iter().enumerate() {
        let a = plan.labels[ti];
        let v = if tree.is_leaf() {
            (lo..=hi).map(|r| comps[a][r] - comps[a][lo]).collect()
        } else if len == 1 {
            vec![R::zero()]
        } else {
            let mut g = vec![R::one(); len];
            for &ci in &plan.child_pos[ti] {
                for (gi, cv) in g.iter_mut().zip(&vals[ci]) {
                    *gi *= *cv;
                }
            }
            cumulative_integral(rule, &tf[lo..=hi], &g, &comps[a][lo..=hi])?
        };
        vals.push(v);
    }
    Ok(vals)
}

/// Build iterated tree integrals from a finely sampled path. The tree
/// set is closed under coproduct components automatically. Values are
/// stored on the coarse grid (every `every`-th sample) for each base in
/// `bases` (all coarse points when omitted); entries before a base are
/// zero.
pub fn tree_integrals<R: Real>(
    x_fine: &Inc1<R>,
    every: usize,
    trees: &[Tree],
    bases: Option<&[usize]>,
    rule: Quadrature,
) -> Result<TreeIntegrals<R>> {
    let nf = x_fine.grid().len();
    if every == 0 || (nf - 1) % every != 0 {
        return Err(Error::InvalidParam(format!(
            "stride {} does not divide {} fine steps",
            every,
            nf - 1
        )));
    }
    let nc = (nf - 1) / every + 1;
    let d = x_fine.dim();
    let all = component_closure(trees)?;
    if all.is_empty() {
        return Err(Error::InvalidParam("no trees requested".into()));
    }
    for t in &all {
        if max_label(t) as usize >= d {
            return Err(Error::InvalidParam(format!(
                "tree {t} uses labels beyond driver dimension {d}"
            )));
        }
    }
    let bases: Vec<usize> = match bases {
        None => (0..nc).collect(),
        Some(b) => {
            if b.is_empty() || b.windows(2).any(|w| w[0] >= w[1]) || *b.last().unwrap() >= nc {
                return Err(Error::InvalidParam(
                    "bases must be strictly increasing coarse indices".into(),
                ));
            }
            b.to_vec()
        }
    };
    let tf = x_fine.grid().times().to_vec();
    let comps: Vec<Vec<R>> =
        (0..d).map(|k| (0..nf).map(|i| x_fine.value(i, k)).collect()).collect();
    let plan = make_plan(all);

    let mut values: BTreeMap<Tree, Array2<R>> = plan
        .trees
        .iter()
        .map(|t| (t.clone(), Array2::zeros((nc, bases.len()))))
        .collect();
    for (bpos, &bc) in bases.iter().enumerate() {
        let fb = bc * every;
        let vals = fine_values(&plan, &tf, &comps, fb, nf - 1, rule)?;
        for (ti, tree) in plan.trees.iter().enumerate() {
            let arr = values.get_mut(tree).unwrap();
            for i in bc..nc {
                arr[[i, bpos]] = vals[ti][i * every - fb];
            }
        }
    }

    let coarse = Grid::from_times((0..nc).map(|i| tf[i * every]).collect())?;
    let path = Inc1::from_samples(
        coarse.clone(),
        Array2::from_shape_fn((nc, d), |(i, k)| comps[k][i * every]),
    )?;
    Ok(TreeIntegrals { grid: coarse, path, bases, values })
}

impl<R: Real> TreeIntegrals<R> {
    pub fn grid(&self) -> &Grid<R> {
        &self.grid
    }

    pub fn path(&self) -> &Inc1<R> {
        &self.path
    }

    pub fn bases(&self) -> &[usize] {
        &self.bases
    }

    pub fn trees(&self) -> impl Iterator<Item = &Tree> {
        self.values.keys()
    }

    fn base_pos(&self, j: usize) -> Result<usize> {
        self.bases
            .binary_search(&j)
            .map_err(|_| Error::GridMismatch(format!("base index {j} is not tracked")))
    }

    /// X^tree over (t_i, t_j); j must be a tracked base.
    pub fn value(&self, tree: &Tree, i: usize, j: usize) -> Result<R> {
        let arr = self
            .values
            .get(tree)
            .ok_or(Error::MissingLevel { level: tree.weight() as u8 })?;
        Ok(arr[[i, self.base_pos(j)?]])
    }

    /// Largest residual of the tree relation for one stored tree over
    /// all (i, j, k) with tracked j, k and any grid i >= j.
    pub fn relation_residual(&self, tree: &Tree) -> Result<R> {
        let arr = self
            .values
            .get(tree)
            .ok_or(Error::MissingLevel { level: tree.weight() as u8 })?;
        let reduced = reduced_coproduct(&Forest::single(tree.clone()))?;
        let mut germ: Vec<(R, &Array2<R>, Vec<&Array2<R>>)> = Vec::new();
        for ((trunk, branches), c) in reduced.iter() {
            let tt = trunk.as_single_tree().ok_or_else(|| {
                Error::Parse("coproduct trunk is not a single tree".into())
            })?;
            let tv = self
                .values
                .get(tt)
                .ok_or(Error::MissingLevel { level: tt.weight() as u8 })?;
            let mut bv = Vec::new();
            for b in branches.trees() {
                bv.push(
                    self.values
                        .get(b)
                        .ok_or(Error::MissingLevel { level: b.weight() as u8 })?,
                );
            }
            let coeff = R::from_f(c.to_f64().ok_or_else(|| {
                Error::Parse("coproduct coefficient out of float range".into())
            })?);
            germ.push((coeff, tv, bv));
        }
        let n = self.grid.len();
        let mut best = R::zero();
        for (pj, &j) in self.bases.iter().enumerate() {
            for (pk, _) in self.bases.iter().enumerate().take(pj) {
                for i in j..n {
                    let delta = arr[[i, pk]] - arr[[i, pj]] - arr[[j, pk]];
                    let mut rhs = R::zero();
                    for (coeff, tv, bv) in &germ {
                        let mut term = *coeff * tv[[i, pj]];
                        for b in bv {
                            term *= b[[j, pk]];
                        }
                        rhs += term;
                    }
                    best = best.max((delta - rhs).abs());
                }
            }
        }
        Ok(best)
    }

    /// CSV rows (tree, i, j, value) over tracked bases.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tree,i,j,value\n");
        let n = self.grid.len();
        for (tree, arr) in &self.values {
            for (pj, &j) in self.bases.iter().enumerate() {
                for i in j..n {
                    out.push_str(&format!("{tree},{i},{j},{:?}\n", arr[[i, pj]].to_f()));
                }
            }
        }
        out
    }
}

/// Closed-form integral of one tree along the identity path:
/// (t - s)^|tau| / tau!.
pub fn identity_path_integrals(tree: &Tree, t: f64, s: f64) -> f64 {
    let w = tree.weight();
    let fact = tree
        .tree_factorial()
        .to_f64()
        .expect("tree factorial overflows f64 far beyond tested weights");
    (t - s).powi(w as i32) / fact
}

/// Linear tree of a word, first letter innermost.
pub fn word_tree(word: &[Label]) -> Result<Tree> {
    let (first, rest) = word
        .split_first()
        .ok_or_else(|| Error::InvalidParam("empty word has no tree".into()))?;
    let mut t = Tree::leaf(*first);
    for l in rest {
        t = Tree::node(*l, vec![t]);
    }
    Ok(t)
}

/// Largest residual of the shuffle identity
/// X^a X^b = sum over shuffles of X^c, over tracked pairs.
pub fn shuffle_reduction_check<R: Real>(
    xi: &TreeIntegrals<R>,
    a: &Word,
    b: &Word,
) -> Result<R> {
    let ta = word_tree(a)?;
    let tb = word_tree(b)?;
    let mut terms: BTreeMap<Tree, usize> = BTreeMap::new();
    for w in shuffle(a, b) {
        *terms.entry(word_tree(&w)?).or_insert(0) += 1;
    }
    let n = xi.grid.len();
    let mut best = R::zero();
    for &j in &xi.bases {
        for i in j..n {
            let lhs = xi.value(&ta, i, j)? * xi.value(&tb, i, j)?;
            let mut rhs = R::zero();
            for (t, &mult) in &terms {
                rhs += R::from_f(mult as f64) * xi.value(t, i, j)?;
            }
            best = best.max((lhs - rhs).abs());
        }
    }
    Ok(best)
}

/// Elementary differential of a vector field set along one tree:
/// the leaf value is the field itself, an inner node contracts the
/// node-order derivative with its children's values.
pub fn elementary_differential<R: Real>(
    f: &dyn Fields<R>,
    tree: &Tree,
    xi: &[R],
) -> Result<Vec<R>> {
    let m = f.arg_dim();
    if xi.len() != m {
        return Err(Error::GridMismatch("evaluation point dimension".into()));
    }
    let a = tree.label().0 as usize;
    if a >= f.driver_dim() {
        return Err(Error::InvalidParam(format!(
            "tree label {a} beyond driver dimension {}",
            f.driver_dim()
        )));
    }
    if tree.is_leaf() {
        return Ok(f.eval(a, xi));
    }
    let k = tree.children().len();
    let combos = m.checked_pow(k as u32).filter(|&c| c <= DIFF_CAP);
    let Some(combos) = combos else {
        return Err(Error::CapExceeded { what: "derivative multi-indices", cap: DIFF_CAP });
    };
    let phis: Vec<Vec<R>> = tree
        .children()
        .iter()
        .map(|c| elementary_differential(f, c, xi))
        .collect::<Result<_>>()?;
    let mut out = vec![R::zero(); f.out_dim()];
    let mut dirs = vec![0usize; k];
    for combo in 0..combos {
        let mut rem = combo;
        let mut weight = R::one();
        for (slot, d) in dirs.iter_mut().enumerate() {
            *d = rem % m;
            rem /= m;
            weight *= phis[slot][*d];
        }
        if weight == R::zero() {
            continue;
        }
        for (p, o) in out.iter_mut().enumerate() {
            *o += f.deriv(a, p, &dirs, xi) * weight;
        }
    }
    Ok(out)
}

/// Stepwise truncated series solution: on each grid step the increment
/// is the sum over trees up to `max_weight` of
/// phi^f(tree)(y_i) X^tree / sigma(tree), with the tree integrals
/// rebuilt on the oversampled window of that step.
pub fn series_solution<R: Real>(
    f: &dyn Fields<R>,
    x_fine: &Inc1<R>,
    every: usize,
    y0: &[R],
    max_weight: u32,
    rule: Quadrature,
) -> Result<Inc1<R>> {
    let nf = x_fine.grid().len();
    if every == 0 || (nf - 1) % every != 0 {
        return Err(Error::InvalidParam(format!(
            "stride {} does not divide {} fine steps",
            every,
            nf - 1
        )));
    }
    let d = x_fine.dim();
    if f.driver_dim() != d || f.arg_dim() != y0.len() || f.out_dim() != y0.len() {
        return Err(Error::GridMismatch("field dimensions differ from driver or state".into()));
    }
    let nc = (nf - 1) / every + 1;
    let trees = enumerate_trees(d as u8, max_weight)?;
    let plan = make_plan({
        let mut t = trees;
        t.sort_by_key(|t| t.weight());
        t
    });
    let sigma_inv: Vec<R> = plan
        .trees
        .iter()
        .map(|t| {
            R::from_f(
                1.0 / t.symmetry_factor().to_f64().expect("symmetry factor in float range"),
            )
        })
        .collect();
    let tf = x_fine.grid().times().to_vec();
    let comps: Vec<Vec<R>> =
        (0..d).map(|k| (0..nf).map(|i| x_fine.value(i, k)).collect()).collect();

    let m = y0.len();
    let mut out = Array2::zeros((nc, m));
    let mut y = y0.to_vec();
    for p in 0..m {
        out[[0, p]] = y[p];
    }
    for i in 1..nc {
        let vals = fine_values(&plan, &tf, &comps, (i - 1) * every, i * every, rule)?;
        for (ti, tree) in plan.trees.iter().enumerate() {
            let x_step = *vals[ti].last().unwrap();
            if x_step == R::zero() {
                continue;
            }
            let phi = elementary_differential(f, tree, &y)?;
            for p in 0..m {
                out[[i, p]] += sigma_inv[ti] * phi[p] * x_step;
            }
        }
        for p in 0..m {
            let v = y[p] + out[[i, p]];
            if !v.is_finite() {
                return Err(Error::NonFinite("series solution state"));
            }
            out[[i, p]] = v;
            y[p] = v;
        }
    }
    let coarse = Grid::from_times((0..nc).map(|i| tf[i * every]).collect())?;
    Inc1::from_samples(coarse, out)
}

/// Local-order ladder: for each truncation weight, the Richardson
/// exponent log2 of the defect ratio between one step of size h and two
/// of size h/2, repeated at h/2 vs h/4. Slope ~ weight + 1 for smooth
/// problems.
pub fn local_order_report(
    f: &dyn Fields<f64>,
    driver: &crate::drivers::Driver,
    h: f64,
    y0: &[f64],
    orders: &[u32],
    oversample: usize,
    rule: Quadrature,
) -> Result<Vec<(u32, f64)>> {
    let defect = |order: u32, step: f64| -> Result<f64> {
        let solve = |steps: usize| -> Result<Vec<f64>> {
            let coarse = Grid::<f64>::uniform(steps, step)?;
            let fine = coarse.refine(oversample)?;
            let x = driver.sample(&fine)?;
            let sol = series_solution(f, &x, oversample, y0, order, rule)?;
            Ok((0..y0.len()).map(|p| sol.value(steps, p)).collect())
        };
        let one = solve(1)?;
        let two = solve(2)?;
        Ok(one
            .iter()
            .zip(&two)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    };
    let mut rows = Vec::new();
    for &n in orders {
        let e1 = defect(n, h)?;
        let e2 = defect(n, h / 2.0)?;
        let slope = if e2 > 0.0 { (e1 / e2).log2() } else { f64::NAN };
        rows.push((n, slope));
    }
    Ok(rows)
}
