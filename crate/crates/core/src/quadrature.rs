//! Cumulative quadrature of d-integrals from samples alone.
//!
//! Both rules return the running integral of g against the path x over a
//! sampled interval: trapezoid joins consecutive samples linearly, and
//! the paired rule fits quadratics to both g and x over each disjoint
//! pair of segments and integrates the product polynomial exactly,
//! giving fourth-order accuracy without any derivative input.
//!
//! Stencil weights are produced at runtime by exact monomial
//! integration of Lagrange-basis products, so non-uniform sample
//! spacing is handled with no precomputed constants.
//!
//! Restriction property used downstream: a cumulative integral started
//! at sample j agrees with the difference of the full cumulative for
//! every j (trapezoid) or every even j (paired rule), because the
//! stencil decomposition of the tail is then identical.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Quadrature rule for sampled integrands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    /// Second order, one segment at a time.
    Trapezoid,
    /// Fourth order, quadratic fits over segment pairs.
    QuadPair,
}

impl Quadrature {
    pub fn name(self) -> &'static str {
        match self {
            Quadrature::Trapezoid => "trapezoid",
            Quadrature::QuadPair => "quad-pair",
        }
    }
}

impl std::str::FromStr for Quadrature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(Quadrature::Trapezoid),
            "quad-pair" => Ok(Quadrature::QuadPair),
            other => Err(Error::Parse(format!("unknown quadrature rule '{other}'"))),
        }
    }
}

/// Monomial coefficients (constant first) of the Lagrange basis
/// polynomial through three nodes that is 1 at node `j`.
fn lagrange_quadratic<R: Real>(nodes: [R; 3], j: usize) -> [R; 3] {
    let tj = nodes[j];
    let others: Vec<R> = (0..3).filter(|&k| k != j).map(|k| nodes[k]).collect();
    let (a, b) = (others[0], others[1]);
    let denom = (tj - a) * (tj - b);
    // (t - a)(t - b) / denom
    [a * b / denom, -(a + b) / denom, R::one() / denom]
}

/// Exact integral over [lo, hi] of the product of a quadratic (3
/// coefficients) and the derivative of another quadratic.
fn product_integral<R: Real>(g: [R; 3], x: [R; 3], lo: R, hi: R) -> R {
    // derivative of x: x1 + 2 x2 t
    let dx = [x[1], R::from_f(2.0) * x[2]];
    // degree-3 product coefficients
    let mut prod = [R::zero(); 4];
    for (i, gi) in g.iter().enumerate() {
        for (j, dj) in dx.iter().enumerate() {
            prod[i + j] += *gi * *dj;
        }
    }
    let mut acc = R::zero();
    for (k, c) in prod.iter().enumerate() {
        let p = R::from_usize(k + 1).unwrap();
        acc += *c * (hi.powi(k as i32 + 1) - lo.powi(k as i32 + 1)) / p;
    }
    acc
}

/// Integral of the quadratic model over one subinterval of a 3-point
/// stencil: fits both g and x through the stencil samples, then
/// integrates g x' exactly from `lo` to `hi`. Times are shifted to the
/// stencil origin for conditioning.
fn stencil_piece<R: Real>(t: [R; 3], g: [R; 3], x: [R; 3], lo: R, hi: R) -> R {
    let base = t[0];
    let nodes = [R::zero(), t[1] - base, t[2] - base];
    let mut acc = R::zero();
    for j in 0..3 {
        let lj = lagrange_quadratic(nodes, j);
        for k in 0..3 {
            let lk = lagrange_quadratic(nodes, k);
            acc += g[j] * x[k] * product_integral(lj, lk, lo - base, hi - base);
        }
    }
    acc
}

/// Running integral P with P[i] the integral of g against x from t[0]
/// to t[i]. All slices must share a length of at least 2.
pub fn cumulative_integral<R: Real>(
    rule: Quadrature,
    t: &[R],
    g: &[R],
    x: &[R],
) -> Result<Vec<R>> {
    let n = t.len();
    if n < 2 || g.len() != n || x.len() != n {
        return Err(Error::GridMismatch(format!(
            "cumulative integral over lengths t={} g={} x={}",
            n,
            g.len(),
            x.len()
        )));
    }
    let mut p = vec![R::zero(); n];
    match rule {
        Quadrature::Trapezoid => {
            let half = R::from_f(0.5);
            for i in 1..n {
                p[i] = p[i - 1] + (g[i] + g[i - 1]) * half * (x[i] - x[i - 1]);
            }
        }
        Quadrature::QuadPair => {
            if n == 2 {
                // single segment: no quadratic stencil exists
                let half = R::from_f(0.5);
                p[1] = (g[0] + g[1]) * half * (x[1] - x[0]);
                return Ok(p);
            }
            let mut i = 0;
            while i + 2 < n {
                let ts = [t[i], t[i + 1], t[i + 2]];
                let gs = [g[i], g[i + 1], g[i + 2]];
                let xs = [x[i], x[i + 1], x[i + 2]];
                p[i + 1] = p[i] + stencil_piece(ts, gs, xs, t[i], t[i + 1]);
                p[i + 2] = p[i + 1] + stencil_piece(ts, gs, xs, t[i + 1], t[i + 2]);
                i += 2;
            }
            if i + 1 < n {
                // one leftover segment: reuse the trailing stencil
                let ts = [t[n - 3], t[n - 2], t[n - 1]];
                let gs = [g[n - 3], g[n - 2], g[n - 1]];
                let xs = [x[n - 3], x[n - 2], x[n - 1]];
                p[n - 1] = p[n - 2] + stencil_piece(ts, gs, xs, t[n - 2], t[n - 1]);
            }
        }
    }
    Ok(p)
}

/// Definite integral of g against x over the whole sample range.
pub fn integral<R: Real>(rule: Quadrature, t: &[R], g: &[R], x: &[R]) -> Result<R> {
    Ok(*cumulative_integral(rule, t, g, x)?.last().unwrap())
}
