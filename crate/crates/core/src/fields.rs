//! Vector-field collections with evaluable mixed partials.
//!
//! Solvers need one field per driver component together with arbitrary
//! mixed partial derivatives at a point. The polynomial-backed
//! implementation differentiates symbolically so derivatives of any
//! order are exact; a closure-backed variant lets callers supply
//! hand-coded derivatives when polynomials don't fit.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Multivariate polynomial: exponent vector -> coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<R: Real> {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, R>,
}

impl<R: Real> Polynomial<R> {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: R) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate polynomial y_i.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut exp = vec![0; nvars];
        exp[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(exp, R::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn add_term(&mut self, exp: Vec<u32>, c: R) {
        assert_eq!(exp.len(), self.nvars);
        if c == R::zero() {
            return;
        }
        let slot = self.terms.entry(exp).or_insert_with(R::zero);
        *slot += c;
        if *slot == R::zero() {
            self.terms.retain(|_, v| *v != R::zero());
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, c: R) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), *v * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let exp: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(exp, *c1 * *c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(self.nvars, R::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact partial derivative in variable i.
    pub fn partial(&self, i: usize) -> Self {
        assert!(i < self.nvars);
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut exp = e.clone();
            exp[i] -= 1;
            out.add_term(exp, *c * R::from_u32(e[i]).unwrap());
        }
        out
    }

    pub fn eval(&self, y: &[R]) -> R {
        assert_eq!(y.len(), self.nvars);
        let mut acc = R::zero();
        for (e, c) in &self.terms {
            let mut term = *c;
            for (i, &p) in e.iter().enumerate() {
                term *= y[i].powi(p as i32);
            }
            acc += term;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// One field per driver component, with evaluable mixed partials of
/// every component function.
pub trait Fields<R: Real> {
    /// Number of driver components (the index a).
    fn driver_dim(&self) -> usize;
    /// Dimension of the argument point.
    fn arg_dim(&self) -> usize;
    /// Dimension of each field value.
    fn out_dim(&self) -> usize;
    /// Value of field a at y.
    fn eval(&self, a: usize, y: &[R]) -> Vec<R>;
    /// Mixed partial of component i of field a, differentiated once in
    /// each direction listed in `dirs` (order irrelevant).
    fn deriv(&self, a: usize, i: usize, dirs: &[usize], y: &[R]) -> R;
}

/// Polynomial-backed field collection; derivatives are symbolic.
#[derive(Clone, Debug)]
pub struct PolyFields<R: Real> {
    arg_dim: usize,
    /// components[a][i]: polynomial in the argument variables
    components: Vec<Vec<Polynomial<R>>>,
}

impl<R: Real> PolyFields<R> {
    pub fn new(arg_dim: usize, components: Vec<Vec<Polynomial<R>>>) -> Result<Self> {
        if components.is_empty() || components[0].is_empty() {
            return Err(Error::InvalidParam("empty field collection".into()));
        }
        let out = components[0].len();
        for comp in &components {
            if comp.len() != out {
                return Err(Error::InvalidParam("ragged field components".into()));
            }
            for p in comp {
                if p.nvars() != arg_dim {
                    return Err(Error::InvalidParam("field arity mismatch".into()));
                }
            }
        }
        Ok(Self { arg_dim, components })
    }

    /// Linear fields f_a(y) = A_a y from one matrix per driver
    /// component (rows index output, columns input).
    pub fn linear(mats: Vec<Vec<Vec<R>>>) -> Result<Self> {
        let m = mats[0].len();
        let mut components = Vec::with_capacity(mats.len());
        for mat in &mats {
            let mut comp = Vec::with_capacity(m);
            for row in mat {
                let mut p = Polynomial::zero(m);
                for (j, &c) in row.iter().enumerate() {
                    let mut exp = vec![0; m];
                    exp[j] = 1;
                    p.add_term(exp, c);
                }
                comp.push(p);
            }
            components.push(comp);
        }
        Self::new(m, components)
    }
}

impl<R: Real> Fields<R> for PolyFields<R> {
    fn driver_dim(&self) -> usize {
        self.components.len()
    }

    fn arg_dim(&self) -> usize {
        self.arg_dim
    }

    fn out_dim(&self) -> usize {
        self.components[0].len()
    }

    fn eval(&self, a: usize, y: &[R]) -> Vec<R> {
        self.components[a].iter().map(|p| p.eval(y)).collect()
    }

    fn deriv(&self, a: usize, i: usize, dirs: &[usize], y: &[R]) -> R {
        let mut p = self.components[a][i].clone();
        for &d in dirs {
            p = p.partial(d);
            if p.is_zero() {
                return R::zero();
            }
        }
        p.eval(y)
    }
}

/// Closure-backed fields for cases a polynomial can't express; the
/// caller supplies consistent hand-coded derivatives.
pub struct ClosureFields<R: Real> {
    pub driver_dim: usize,
    pub arg_dim: usize,
    pub out_dim: usize,
    #[allow(clippy::type_complexity)]
    pub eval: Box<dyn Fn(usize, &[R]) -> Vec<R> + Send + Sync>,
    #[allow(clippy::type_complexity)]
    pub deriv: Box<dyn Fn(usize, usize, &[usize], &[R]) -> R + Send + Sync>,
}

impl<R: Real> Fields<R> for ClosureFields<R> {
    fn driver_dim(&self) -> usize {
        self.driver_dim
    }

    fn arg_dim(&self) -> usize {
        self.arg_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn eval(&self, a: usize, y: &[R]) -> Vec<R> {
        (self.eval)(a, y)
    }

    fn deriv(&self, a: usize, i: usize, dirs: &[usize], y: &[R]) -> R {
        (self.deriv)(a, i, dirs, y)
    }
}
