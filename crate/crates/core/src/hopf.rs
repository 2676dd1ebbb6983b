//! Hopf-algebra combinatorics on forests: the Connes-Kreimer coproduct,
//! counting functions, the shuffle product on words, the tree binomial
//! identity, and the q_gamma weight recursion.
//!
//! Coefficients are exact rationals. The coproduct of a tree is defined
//! recursively: the primitive part 1 (x) t plus the root grafted back onto
//! the left slots of the children coproduct; on forests it extends as an
//! algebra homomorphism. Left slots of a tree's reduced coproduct are
//! always single trees, right slots are forests.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trees::{b_plus, enumerate_trees, enumerate_trees_capped, Forest, Label, Tree};
use crate::Rat;

/// Finite word over the label alphabet.
pub type Word = Vec<Label>;

/// Formal rational combination of forests.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ForestVector {
    terms: BTreeMap<Forest, Rat>,
}

impl ForestVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(f: Forest) -> Self {
        let mut v = Self::new();
        v.add(f, Rat::one());
        v
    }

    /// Add `coeff * f`, dropping the entry if it cancels to zero.
    pub fn add(&mut self, f: Forest, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(f).or_insert_with(Rat::zero);
        *slot += coeff;
        if slot.is_zero() {
            let dead: Vec<Forest> =
                self.terms.iter().filter(|(_, c)| c.is_zero()).map(|(f, _)| f.clone()).collect();
            for f in dead {
                self.terms.remove(&f);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Forest, &Rat)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, f: &Forest) -> Rat {
        self.terms.get(f).cloned().unwrap_or_else(Rat::zero)
    }
}

/// Formal rational combination of forest pairs (a tensor in two slots).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TensorVector {
    terms: BTreeMap<(Forest, Forest), Rat>,
}

impl TensorVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// The tensor unit 1 (x) 1.
    pub fn unit() -> Self {
        let mut v = Self::new();
        v.add(Forest::empty(), Forest::empty(), Rat::one());
        v
    }

    pub fn add(&mut self, left: Forest, right: Forest, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry((left, right)).or_insert_with(Rat::zero);
        *slot += coeff;
        if slot.is_zero() {
            let dead: Vec<(Forest, Forest)> =
                self.terms.iter().filter(|(_, c)| c.is_zero()).map(|(k, _)| k.clone()).collect();
            for k in dead {
                self.terms.remove(&k);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Forest, Forest), &Rat)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, left: &Forest, right: &Forest) -> Rat {
        self.terms.get(&(left.clone(), right.clone())).cloned().unwrap_or_else(Rat::zero)
    }

    /// Slotwise product: (a (x) b)(c (x) d) = ac (x) bd.
    pub fn mul(&self, other: &TensorVector) -> TensorVector {
        let mut out = TensorVector::new();
        for ((l1, r1), c1) in self.iter() {
            for ((l2, r2), c2) in other.iter() {
                out.add(l1.product(l2), r1.product(r2), c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for TensorVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, ((l, r), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c} ({l}) (x) ({r})")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    left: String,
    right: String,
    num: String,
    den: String,
}

impl Serialize for TensorVector {
    /// JSON: a list of {left, right, num, den} records in canonical term
    /// order, with big integers carried as decimal strings.
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(self.terms.len()))?;
        for ((l, r), c) in &self.terms {
            seq.serialize_element(&TensorRecord {
                left: l.to_string(),
                right: r.to_string(),
                num: c.numer().to_string(),
                den: c.denom().to_string(),
            })?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for TensorVector {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let records = Vec::<TensorRecord>::deserialize(de)?;
        let mut out = TensorVector::new();
        for rec in records {
            let left: Forest = rec.left.parse().map_err(D::Error::custom)?;
            let right: Forest = rec.right.parse().map_err(D::Error::custom)?;
            let num: BigInt = rec.num.parse().map_err(D::Error::custom)?;
            let den: BigInt = rec.den.parse().map_err(D::Error::custom)?;
            if den.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            out.add(left, right, BigRational::new(num, den));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Coproduct
// ---------------------------------------------------------------------------

/// Connes-Kreimer coproduct of a single tree.
pub fn coproduct_tree(t: &Tree) -> TensorVector {
    let children = Forest::new(t.children().to_vec());
    let inner = coproduct(&children);
    let mut out = TensorVector::new();
    out.add(Forest::empty(), Forest::single(t.clone()), Rat::one());
    for ((left, right), c) in inner.iter() {
        out.add(Forest::single(b_plus(t.label(), left.clone())), right.clone(), c.clone());
    }
    out
}

/// Coproduct of a forest (algebra homomorphism over the tree coproducts).
pub fn coproduct(f: &Forest) -> TensorVector {
    let mut acc = TensorVector::unit();
    for t in f.trees() {
        acc = acc.mul(&coproduct_tree(t));
    }
    acc
}

/// Reduced coproduct: the coproduct with both primitive terms removed.
/// The empty forest has no reduced part.
pub fn reduced_coproduct(f: &Forest) -> Result<TensorVector> {
    if f.is_empty() {
        return Err(Error::InvalidParam("reduced coproduct of the unit".into()));
    }
    let mut out = coproduct(f);
    out.add(Forest::empty(), f.clone(), -Rat::one());
    out.add(f.clone(), Forest::empty(), -Rat::one());
    Ok(out)
}

/// Coefficient of `rho (x) sigma` in the coproduct of `tau`; always a
/// non-negative integer.
pub fn counting(tau: &Tree, rho: &Tree, sigma: &Forest) -> BigInt {
    let c = coproduct_tree(tau).coeff(&Forest::single(rho.clone()), sigma);
    debug_assert!(c.denom().is_one());
    c.to_integer()
}

/// Coefficient of `rho (x) sigma` in the reduced coproduct of `tau`.
pub fn counting_reduced(tau: &Tree, rho: &Tree, sigma: &Forest) -> BigInt {
    let c = reduced_coproduct(&Forest::single(tau.clone()))
        .expect("tree is not the unit")
        .coeff(&Forest::single(rho.clone()), sigma);
    debug_assert!(c.denom().is_one());
    c.to_integer()
}

/// Counit law residual: both (counit (x) id) Delta f = f and
/// (id (x) counit) Delta f = f, checked exactly.
pub fn counit_laws_hold(f: &Forest) -> bool {
    let delta = coproduct(f);
    let mut left = ForestVector::new();
    let mut right = ForestVector::new();
    for ((l, r), c) in delta.iter() {
        if l.is_empty() {
            left.add(r.clone(), c.clone());
        }
        if r.is_empty() {
            right.add(l.clone(), c.clone());
        }
    }
    let id = ForestVector::single(f.clone());
    left == id && right == id
}

/// Coassociativity: (Delta (x) id) Delta f = (id (x) Delta) Delta f,
/// compared exactly term by term.
pub fn coassociativity_holds(f: &Forest) -> bool {
    let delta = coproduct(f);
    let mut lhs: BTreeMap<(Forest, Forest, Forest), Rat> = BTreeMap::new();
    let mut rhs: BTreeMap<(Forest, Forest, Forest), Rat> = BTreeMap::new();
    for ((l, r), c) in delta.iter() {
        for ((a, b), c2) in coproduct(l).iter() {
            let slot = lhs.entry((a.clone(), b.clone(), r.clone())).or_insert_with(Rat::zero);
            *slot += c * c2;
        }
        for ((a, b), c2) in coproduct(r).iter() {
            let slot = rhs.entry((l.clone(), a.clone(), b.clone())).or_insert_with(Rat::zero);
            *slot += c * c2;
        }
    }
    lhs.retain(|_, c| !c.is_zero());
    rhs.retain(|_, c| !c.is_zero());
    lhs == rhs
}

/// Every coproduct term splits the grading: degrees of the two slots sum
/// to the degree of the input.
pub fn grading_holds(f: &Forest) -> bool {
    coproduct(f).iter().all(|((l, r), _)| l.degree() + r.degree() == f.degree())
}

// ---------------------------------------------------------------------------
// Shuffle product
// ---------------------------------------------------------------------------

/// All interleavings of `u` and `v` keeping both internal orders; the
/// result is a multiset with exactly binomial(|u| + |v|, |u|) entries.
pub fn shuffle(u: &Word, v: &Word) -> Vec<Word> {
    fn rec(u: &[Label], v: &[Label], prefix: &mut Word, out: &mut Vec<Word>) {
        if u.is_empty() && v.is_empty() {
            out.push(prefix.clone());
            return;
        }
        if let Some((&h, rest)) = u.split_first() {
            prefix.push(h);
            rec(rest, v, prefix, out);
            prefix.pop();
        }
        if let Some((&h, rest)) = v.split_first() {
            prefix.push(h);
            rec(u, rest, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(u, v, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// Tree binomial
// ---------------------------------------------------------------------------

/// Residual of the tree binomial identity: `(a+b)^|tau|` minus the sum over
/// the full coproduct of `tau! / (rho! sigma!) a^|rho| b^|sigma|`. Zero for
/// every tree and every rational pair.
pub fn tree_binomial_residual(tau: &Tree, a: &Rat, b: &Rat) -> Rat {
    let tau_fact = Rat::from_integer(tau.tree_factorial());
    let mut sum = Rat::zero();
    for ((rho, sigma), c) in coproduct_tree(tau).iter() {
        let weight_coeff =
            &tau_fact / Rat::from_integer(rho.tree_factorial() * sigma.tree_factorial());
        sum += c * weight_coeff * rat_pow(a, rho.degree()) * rat_pow(b, sigma.degree());
    }
    rat_pow(&(a + b), tau.weight()) - sum
}

fn rat_pow(x: &Rat, n: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..n {
        acc *= x;
    }
    acc
}

// ---------------------------------------------------------------------------
// q_gamma recursion
// ---------------------------------------------------------------------------

/// Weight recursion for the branched growth bound: q = 1 while
/// gamma * |tau| <= 1, and otherwise
/// (2^(gamma |tau|) - 2)^(-1) times the reduced-coproduct sum of products
/// of the slot values, with the right slot extended multiplicatively.
pub fn q_gamma(tau: &Tree, gamma: f64) -> Result<f64> {
    let mut memo = BTreeMap::new();
    q_gamma_memo(tau, gamma, &mut memo)
}

fn q_gamma_memo(tau: &Tree, gamma: f64, memo: &mut BTreeMap<Tree, f64>) -> Result<f64> {
    if let Some(&q) = memo.get(tau) {
        return Ok(q);
    }
    let exponent = gamma * tau.weight() as f64;
    let q = if exponent <= 1.0 {
        1.0
    } else {
        let denom = 2f64.powf(exponent) - 2.0;
        if denom.abs() < 1e-9 {
            return Err(Error::SingularExponent { exponent });
        }
        let mut sum = 0.0;
        for ((rho, sigma), c) in
            reduced_coproduct(&Forest::single(tau.clone()))?.iter()
        {
            let rho_tree = rho.as_single_tree().expect("left slot of a tree's reduced coproduct");
            let mut term = q_gamma_memo(rho_tree, gamma, memo)?;
            for s in sigma.trees() {
                term *= q_gamma_memo(s, gamma, memo)?;
            }
            sum += rat_to_f64(c) * term;
        }
        sum / denom
    };
    memo.insert(tau.clone(), q);
    Ok(q)
}

fn rat_to_f64(r: &Rat) -> f64 {
    // Coproduct coefficients are small integers; go through i64.
    let num = r.numer();
    let den = r.denom();
    let to = |x: &BigInt| -> f64 {
        let (sign, mag) = (x.is_negative(), x.magnitude());
        let v = mag.to_string().parse::<f64>().expect("magnitude fits f64");
        if sign {
            -v
        } else {
            v
        }
    };
    to(num) / to(den)
}

/// One row of the q_gamma ratio table.
#[derive(Clone, Debug, Serialize)]
pub struct QGammaRow {
    pub tree: String,
    pub weight: u32,
    pub q: f64,
    /// q * (tau!)^gamma; the conjectured comparison holds when these ratios
    /// stay bounded across weights. Reported, never asserted.
    pub ratio: f64,
}

/// Ratio table q_gamma(tau) * (tau!)^gamma over all trees with
/// gamma * |tau| > 1 up to `max_weight` (the base regime is excluded since
/// q is identically 1 there).
pub fn q_gamma_table(d: u8, max_weight: u32, gamma: f64, cap: usize) -> Result<Vec<QGammaRow>> {
    let mut rows = Vec::new();
    for t in enumerate_trees_capped(d, max_weight, cap)? {
        let exponent = gamma * t.weight() as f64;
        if exponent <= 1.0 {
            continue;
        }
        let q = q_gamma(&t, gamma)?;
        let fact = t.tree_factorial().to_string().parse::<f64>().expect("factorial fits f64");
        rows.push(QGammaRow {
            tree: t.to_string(),
            weight: t.weight(),
            q,
            ratio: q * fact.powf(gamma),
        });
    }
    Ok(rows)
}

/// All forests over `d` labels of degree 0..=`max`, including the unit
/// (the empty forest), enumerated as non-decreasing tree multisets.
pub fn all_forests(d: u8, max: u32) -> Result<Vec<Forest>> {
    let trees = enumerate_trees(d, max)?;
    let mut out = vec![Forest::empty()];
    fn extend(
        trees: &[Tree],
        budget: u32,
        from: usize,
        prefix: &mut Vec<Tree>,
        out: &mut Vec<Forest>,
    ) {
        for i in from..trees.len() {
            let w = trees[i].weight();
            if w > budget {
                continue;
            }
            prefix.push(trees[i].clone());
            out.push(Forest::new(prefix.clone()));
            extend(trees, budget - w, i, prefix, out);
            prefix.pop();
        }
    }
    extend(&trees, max, 0, &mut Vec::new(), &mut out);
    Ok(out)
}
