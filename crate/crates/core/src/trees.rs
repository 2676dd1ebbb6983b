//! Labeled rooted trees, forests, and planar binary trees.
//!
//! Trees are unordered: children are held in a canonical order (weight, then
//! root label, then lexicographic comparison of children), so structural
//! equality is isomorphism and each isomorphism class has exactly one
//! representative. The tree factorial and symmetry factor are exact
//! integers; both outgrow u64 near weight 20, hence [`BigInt`].
//!
//! Planar trees with at most two branches per vertex are a separate type:
//! there the branch order is significant and the interesting quantities are
//! the counting sequence `Z_n` and the resolvent degree `theta`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of trees an enumeration may materialize.
pub const ENUM_CAP: usize = 1_000_000;

/// Vertex label: an index into an alphabet of size `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u8);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Labeled rooted tree in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    label: Label,
    weight: u32,
    children: Vec<Tree>,
}

impl Tree {
    /// Single vertex.
    pub fn leaf(label: Label) -> Self {
        Tree { label, weight: 1, children: Vec::new() }
    }

    /// Tree with the given root label and children; children are sorted
    /// into canonical order, so any input order yields the same value.
    pub fn node(label: Label, mut children: Vec<Tree>) -> Self {
        children.sort_unstable();
        let weight = 1 + children.iter().map(|c| c.weight).sum::<u32>();
        Tree { label, weight, children }
    }

    pub fn label(&self) -> Label {
        self.label
    }

    /// Number of vertices.
    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn children(&self) -> &[Tree] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Tree factorial: 1 on leaves, weight times the children's factorials.
    pub fn tree_factorial(&self) -> BigInt {
        let mut acc = BigInt::from(self.weight);
        for c in &self.children {
            acc *= c.tree_factorial();
        }
        acc
    }

    /// Symmetry factor: product over groups of equal children of
    /// (multiplicity)! times each member's own factor, 1 on leaves.
    pub fn symmetry_factor(&self) -> BigInt {
        let mut acc = BigInt::one();
        let mut i = 0;
        while i < self.children.len() {
            let mut j = i + 1;
            while j < self.children.len() && self.children[j] == self.children[i] {
                j += 1;
            }
            let mult = j - i;
            acc *= factorial(mult as u32);
            let child = self.children[i].symmetry_factor();
            for _ in 0..mult {
                acc *= &child;
            }
            i = j;
        }
        acc
    }

    /// Every node has at most one child.
    pub fn is_chain(&self) -> bool {
        match self.children.len() {
            0 => true,
            1 => self.children[0].is_chain(),
            _ => false,
        }
    }
}

impl PartialOrd for Tree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Tree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .cmp(&other.weight)
            .then_with(|| self.label.cmp(&other.label))
            .then_with(|| self.children.cmp(&other.children))
    }
}

/// Grow a tree: attach every tree of the forest under a new root.
pub fn b_plus(label: Label, forest: Forest) -> Tree {
    Tree::node(label, forest.trees)
}

/// Prune a root: the children forest when the root label matches, else None.
pub fn b_minus(label: Label, t: &Tree) -> Option<Forest> {
    if t.label == label {
        Some(Forest::new(t.children.clone()))
    } else {
        None
    }
}

fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// Multiset of trees in canonical order; the empty forest is the unit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub fn new(mut trees: Vec<Tree>) -> Self {
        trees.sort_unstable();
        Forest { trees }
    }

    pub fn empty() -> Self {
        Forest::default()
    }

    pub fn single(t: Tree) -> Self {
        Forest { trees: vec![t] }
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Total vertex count (the grading degree).
    pub fn degree(&self) -> u32 {
        self.trees.iter().map(|t| t.weight).sum()
    }

    /// Multiset union.
    pub fn product(&self, other: &Forest) -> Forest {
        let mut trees = self.trees.clone();
        trees.extend_from_slice(&other.trees);
        Forest::new(trees)
    }

    /// Product of the member factorials.
    pub fn tree_factorial(&self) -> BigInt {
        let mut acc = BigInt::one();
        for t in &self.trees {
            acc *= t.tree_factorial();
        }
        acc
    }

    /// If this forest is a single tree, that tree.
    pub fn as_single_tree(&self) -> Option<&Tree> {
        if self.trees.len() == 1 {
            Some(&self.trees[0])
        } else {
            None
        }
    }
}

// ---------------------------------------------------------------------------
// Text and JSON forms
// ---------------------------------------------------------------------------

impl fmt::Display for Tree {
    /// Bracket form `[label: child child ...]`; a leaf prints as `[a:]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}:", self.label)?;
        for c in &self.children {
            write!(f, " {c}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for Forest {
    /// Space-joined trees; the empty forest prints as `1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.trees.is_empty() {
            return write!(f, "1");
        }
        for (i, t) in self.trees.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for Tree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        let mut pos = 0;
        let t = parse_tree(bytes, &mut pos)?;
        skip_spaces(bytes, &mut pos);
        if pos != bytes.len() {
            return Err(Error::Parse(format!("trailing input at byte {pos} in {s:?}")));
        }
        Ok(t)
    }
}

impl FromStr for Forest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed == "1" {
            return Ok(Forest::empty());
        }
        let bytes = trimmed.as_bytes();
        let mut pos = 0;
        let mut trees = Vec::new();
        while pos < bytes.len() {
            skip_spaces(bytes, &mut pos);
            if pos == bytes.len() {
                break;
            }
            trees.push(parse_tree(bytes, &mut pos)?);
        }
        Ok(Forest::new(trees))
    }
}

fn skip_spaces(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() && bytes[*pos] == b' ' {
        *pos += 1;
    }
}

fn parse_tree(bytes: &[u8], pos: &mut usize) -> Result<Tree> {
    let err = |msg: &str, at: usize| Error::Parse(format!("{msg} at byte {at}"));
    if *pos >= bytes.len() || bytes[*pos] != b'[' {
        return Err(err("expected '['", *pos));
    }
    *pos += 1;
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return Err(err("expected label digits", *pos));
    }
    let label: u8 = std::str::from_utf8(&bytes[start..*pos])
        .expect("digits are utf8")
        .parse()
        .map_err(|_| err("label out of range", start))?;
    if *pos >= bytes.len() || bytes[*pos] != b':' {
        return Err(err("expected ':'", *pos));
    }
    *pos += 1;
    let mut children = Vec::new();
    loop {
        skip_spaces(bytes, pos);
        if *pos >= bytes.len() {
            return Err(err("unterminated tree", *pos));
        }
        if bytes[*pos] == b']' {
            *pos += 1;
            return Ok(Tree::node(Label(label), children));
        }
        children.push(parse_tree(bytes, pos)?);
    }
}

impl Serialize for Tree {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = ser.serialize_struct("Tree", 2)?;
        st.serialize_field("label", &self.label)?;
        st.serialize_field("children", &self.children)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Tree {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            label: Label,
            #[serde(default)]
            children: Vec<Tree>,
        }
        let raw = Raw::deserialize(de)?;
        Ok(Tree::node(raw.label, raw.children))
    }
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// All canonical trees over `d` labels with weight between 1 and
/// `max_weight`, in canonical order, using the default size cap.
pub fn enumerate_trees(d: u8, max_weight: u32) -> Result<Vec<Tree>> {
    enumerate_trees_capped(d, max_weight, ENUM_CAP)
}

/// Same as [`enumerate_trees`] with an explicit cap; errs when the output
/// would exceed it.
pub fn enumerate_trees_capped(d: u8, max_weight: u32, cap: usize) -> Result<Vec<Tree>> {
    if d == 0 {
        return Err(Error::InvalidParam("alphabet size d must be >= 1".into()));
    }
    // by_weight[w] holds the canonical trees of weight w, sorted.
    let mut by_weight: Vec<Vec<Tree>> = vec![Vec::new(); max_weight as usize + 1];
    let mut total = 0usize;
    for w in 1..=max_weight {
        let mut bucket = Vec::new();
        if w == 1 {
            for a in 0..d {
                bucket.push(Tree::leaf(Label(a)));
            }
        } else {
            let mut forest = Vec::new();
            collect_forests(w - 1, &by_weight, (1, 0), &mut forest, &mut |trees| {
                for a in 0..d {
                    bucket.push(Tree::node(Label(a), trees.to_vec()));
                }
            });
        }
        bucket.sort_unstable();
        total += bucket.len();
        if total > cap {
            return Err(Error::CapExceeded { what: "tree enumeration", cap });
        }
        by_weight[w as usize] = bucket;
    }
    Ok(by_weight.into_iter().flatten().collect())
}

/// All forests (non-decreasing tree sequences) of exact total degree
/// `degree`, choosing each member at position >= `from` in the by-weight
/// table so every multiset appears once.
fn collect_forests(
    degree: u32,
    by_weight: &[Vec<Tree>],
    from: (usize, usize),
    prefix: &mut Vec<Tree>,
    sink: &mut impl FnMut(&[Tree]),
) {
    if degree == 0 {
        sink(prefix);
        return;
    }
    let (mut w, mut start) = from;
    while w <= degree as usize {
        for pos in start..by_weight[w].len() {
            prefix.push(by_weight[w][pos].clone());
            collect_forests(degree - w as u32, by_weight, (w, pos), prefix, sink);
            prefix.pop();
        }
        w += 1;
        start = 0;
    }
}

// ---------------------------------------------------------------------------
// Planar trees with at most two branches
// ---------------------------------------------------------------------------

/// Unlabeled planar tree with at most two children per vertex; the child
/// order is significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlanarTree {
    children: Vec<PlanarTree>,
}

impl PlanarTree {
    pub fn leaf() -> Self {
        PlanarTree { children: Vec::new() }
    }

    pub fn unary(child: PlanarTree) -> Self {
        PlanarTree { children: vec![child] }
    }

    pub fn binary(left: PlanarTree, right: PlanarTree) -> Self {
        PlanarTree { children: vec![left, right] }
    }

    pub fn children(&self) -> &[PlanarTree] {
        &self.children
    }

    pub fn weight(&self) -> u32 {
        1 + self.children.iter().map(|c| c.weight()).sum::<u32>()
    }

    /// Resolvent degree: 2 on leaves, 1 + theta through a single branch,
    /// and the sum of the two branch values at a binary vertex.
    pub fn theta(&self) -> u32 {
        match self.children.as_slice() {
            [] => 2,
            [c] => 1 + c.theta(),
            [l, r] => l.theta() + r.theta(),
            _ => unreachable!("planar trees have at most two children"),
        }
    }

    /// Forget planarity: the canonical labeled tree with every vertex
    /// carrying `label`.
    pub fn to_tree(&self, label: Label) -> Tree {
        Tree::node(label, self.children.iter().map(|c| c.to_tree(label)).collect())
    }
}

/// Number of planar trees with at most two branches and exactly `n`
/// vertices (Motzkin recursion).
pub fn count_zn(n: u32) -> u64 {
    let n = n as usize;
    let mut z = vec![0u64; n + 1];
    if n >= 1 {
        z[1] = 1;
    }
    for m in 2..=n {
        let mut acc = z[m - 1];
        for i in 1..m - 1 {
            acc = acc
                .checked_add(z[i].checked_mul(z[m - 1 - i]).expect("Z_n overflow"))
                .expect("Z_n overflow");
        }
        z[m] = acc;
    }
    if n == 0 {
        0
    } else {
        z[n]
    }
}

/// All planar trees with at most two branches and exactly `n` vertices, in
/// a deterministic order, subject to the default size cap.
pub fn enumerate_planar_binary(n: u32) -> Result<Vec<PlanarTree>> {
    enumerate_planar_binary_capped(n, ENUM_CAP)
}

pub fn enumerate_planar_binary_capped(n: u32, cap: usize) -> Result<Vec<PlanarTree>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut by_weight: Vec<Vec<PlanarTree>> = vec![Vec::new()];
    let mut total = 0usize;
    for m in 1..=n as usize {
        let mut bucket = Vec::new();
        if m == 1 {
            bucket.push(PlanarTree::leaf());
        } else {
            for t in &by_weight[m - 1] {
                bucket.push(PlanarTree::unary(t.clone()));
            }
            for i in 1..m - 1 {
                for l in &by_weight[i] {
                    for r in &by_weight[m - 1 - i] {
                        bucket.push(PlanarTree::binary(l.clone(), r.clone()));
                    }
                }
            }
        }
        total += bucket.len();
        if total > cap {
            return Err(Error::CapExceeded { what: "planar tree enumeration", cap });
        }
        by_weight.push(bucket);
    }
    Ok(by_weight.pop().expect("bucket for n"))
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Structural class of a tree for the growth-rate reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TreeClass {
    /// Every vertex has at most one branch.
    Simple,
    /// Every internal vertex has exactly two branches and each split is
    /// balanced within the band around (alpha, 1 - alpha).
    Short,
    Other,
}

/// Classify with the default band half-width 0.1 around alpha.
pub fn classify_tree(t: &Tree, alpha: f64) -> TreeClass {
    classify_tree_banded(t, alpha, 0.1)
}

/// A binary split with subtree weights (w1, w2) is balanced when
/// min(w1, w2) / (w1 + w2) lies in [alpha - band, alpha + band].
pub fn classify_tree_banded(t: &Tree, alpha: f64, band: f64) -> TreeClass {
    if t.is_chain() {
        return TreeClass::Simple;
    }
    if all_splits_balanced(t, alpha, band) {
        return TreeClass::Short;
    }
    TreeClass::Other
}

fn all_splits_balanced(t: &Tree, alpha: f64, band: f64) -> bool {
    match t.children().len() {
        0 => true,
        2 => {
            let w1 = t.children()[0].weight() as f64;
            let w2 = t.children()[1].weight() as f64;
            let ratio = w1.min(w2) / (w1 + w2);
            (ratio - alpha).abs() <= band
                && t.children().iter().all(|c| all_splits_balanced(c, alpha, band))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn l(a: u8) -> Tree {
        Tree::leaf(Label(a))
    }

    fn n(a: u8, children: Vec<Tree>) -> Tree {
        Tree::node(Label(a), children)
    }

    /// Chain of `k` vertices, all labeled 0.
    fn chain(k: u32) -> Tree {
        let mut t = l(0);
        for _ in 1..k {
            t = n(0, vec![t]);
        }
        t
    }

    // -- brute-force oracles ------------------------------------------------

    /// Number of linear extensions of the root-down order (root first).
    fn linear_extensions(frontier: &mut Vec<Tree>) -> u64 {
        if frontier.is_empty() {
            return 1;
        }
        let mut acc = 0;
        for i in 0..frontier.len() {
            let picked = frontier.remove(i);
            let mut extended = frontier.clone();
            extended.extend_from_slice(picked.children());
            acc += linear_extensions(&mut extended);
            frontier.insert(i, picked);
        }
        acc
    }

    fn u64_factorial(k: u64) -> u64 {
        (1..=k).product()
    }

    /// Tree factorial via increasing labelings: |t|! / (number of linear
    /// extensions). Independent of the product recursion.
    fn factorial_oracle(t: &Tree) -> u64 {
        let ext = linear_extensions(&mut vec![t.clone()]);
        let fact = u64_factorial(t.weight() as u64);
        assert_eq!(fact % ext, 0);
        fact / ext
    }

    /// Order of the label-preserving automorphism group fixing the root,
    /// counted by trying every permutation of the non-root vertices.
    fn automorphism_oracle(t: &Tree) -> u64 {
        // Flatten to parent and label arrays, vertex 0 = root.
        fn flatten(t: &Tree, parent: Option<usize>, parents: &mut Vec<usize>, labels: &mut Vec<u8>) {
            let me = parents.len();
            parents.push(parent.unwrap_or(usize::MAX));
            labels.push(t.label().0);
            for c in t.children() {
                flatten(c, Some(me), parents, labels);
            }
        }
        let mut parents = Vec::new();
        let mut labels = Vec::new();
        flatten(t, None, &mut parents, &mut labels);
        let n = parents.len();
        let mut others: Vec<usize> = (1..n).collect();
        let mut count = 0u64;
        permute(&mut others, 0, &mut |perm| {
            // full[v] is the image of vertex v.
            let mut full = vec![0usize; n];
            for (slot, &img) in perm.iter().enumerate() {
                full[slot + 1] = img;
            }
            let ok = (1..n).all(|v| {
                labels[full[v]] == labels[v] && full[parents[v]] == parents[full[v]]
            });
            if ok {
                count += 1;
            }
        });
        count
    }

    fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }

    // -- construction and basic ops ----------------------------------------

    #[test]
    fn b_plus_then_b_minus_round_trips() {
        let f = Forest::new(vec![l(0), n(1, vec![l(0)])]);
        let t = b_plus(Label(1), f.clone());
        assert_eq!(t.weight(), 4);
        assert_eq!(b_minus(Label(1), &t), Some(f));
        assert_eq!(b_minus(Label(0), &t), None);
    }

    #[test]
    fn node_order_is_canonical() {
        let c1 = n(0, vec![l(0), n(0, vec![l(0)])]);
        let c2 = n(0, vec![n(0, vec![l(0)]), l(0)]);
        assert_eq!(c1, c2);
        // weight dominates label in the child sort
        let t = n(0, vec![n(1, vec![l(0)]), l(1)]);
        assert_eq!(t.children()[0], l(1));
    }

    #[test]
    fn factorial_small_cases() {
        assert_eq!(l(0).tree_factorial(), BigInt::from(1));
        assert_eq!(chain(2).tree_factorial(), BigInt::from(2));
        assert_eq!(chain(3).tree_factorial(), BigInt::from(6));
        // cherry: weight 3, two leaf children
        let cherry = n(0, vec![l(0), l(0)]);
        assert_eq!(cherry.tree_factorial(), BigInt::from(3));
        // mixed weight-4: [. [.]] has factorial 4 * 1 * 2 = 8
        let mixed = n(0, vec![l(0), chain(2)]);
        assert_eq!(mixed.tree_factorial(), BigInt::from(8));
    }

    #[test]
    fn symmetry_small_cases() {
        assert_eq!(l(0).symmetry_factor(), BigInt::from(1));
        let cherry = n(0, vec![l(0), l(0)]);
        assert_eq!(cherry.symmetry_factor(), BigInt::from(2));
        let mixed = n(0, vec![l(0), chain(2)]);
        assert_eq!(mixed.symmetry_factor(), BigInt::from(1));
        let double = n(0, vec![chain(2), chain(2)]);
        assert_eq!(double.symmetry_factor(), BigInt::from(2));
        let triple = n(0, vec![l(0), l(0), l(0)]);
        assert_eq!(triple.symmetry_factor(), BigInt::from(6));
        // labels break symmetry
        let two_labels = n(0, vec![l(0), l(0), l(1)]);
        assert_eq!(two_labels.symmetry_factor(), BigInt::from(2));
    }

    #[test]
    fn factorial_and_symmetry_match_brute_force_up_to_weight_7() {
        for d in 1..=2u8 {
            let max = if d == 1 { 7 } else { 5 };
            for t in enumerate_trees(d, max).unwrap() {
                assert_eq!(
                    t.tree_factorial(),
                    BigInt::from(factorial_oracle(&t)),
                    "factorial mismatch on {t}"
                );
                assert_eq!(
                    t.symmetry_factor(),
                    BigInt::from(automorphism_oracle(&t)),
                    "symmetry mismatch on {t}"
                );
            }
        }
    }

    // -- enumeration ---------------------------------------------------------

    #[test]
    fn unlabeled_counts_match_known_sequence() {
        // rooted unlabeled trees per weight: 1, 1, 2, 4, 9, 20, 48
        let all = enumerate_trees(1, 7).unwrap();
        let mut per_weight = vec![0usize; 8];
        for t in &all {
            per_weight[t.weight() as usize] += 1;
        }
        assert_eq!(&per_weight[1..], &[1, 1, 2, 4, 9, 20, 48]);
        assert_eq!(all.len(), 85);
    }

    #[test]
    fn two_label_counts() {
        let all = enumerate_trees(2, 4).unwrap();
        let mut per_weight = vec![0usize; 5];
        for t in &all {
            per_weight[t.weight() as usize] += 1;
        }
        assert_eq!(&per_weight[1..], &[2, 4, 14, 52]);
    }

    #[test]
    fn enumeration_is_sorted_and_duplicate_free() {
        let all = enumerate_trees(2, 5).unwrap();
        let set: BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
    }

    #[test]
    fn enumeration_cap_errors() {
        match enumerate_trees_capped(1, 10, 100) {
            Err(Error::CapExceeded { .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    // -- planar trees --------------------------------------------------------

    #[test]
    fn zn_matches_enumeration_and_sequence() {
        let expected = [1u64, 1, 2, 4, 9, 21, 51, 127, 323, 835];
        for (i, &zn) in expected.iter().enumerate() {
            let n = i as u32 + 1;
            assert_eq!(count_zn(n), zn);
            assert_eq!(enumerate_planar_binary(n).unwrap().len() as u64, zn);
        }
    }

    #[test]
    fn planar_enumeration_distinct() {
        let ts = enumerate_planar_binary(8).unwrap();
        let set: BTreeSet<String> = ts.iter().map(|t| format!("{t:?}")).collect();
        assert_eq!(set.len(), ts.len());
    }

    #[test]
    fn theta_base_cases_and_bounds() {
        assert_eq!(PlanarTree::leaf().theta(), 2);
        let mut chain = PlanarTree::leaf();
        for k in 1..6 {
            chain = PlanarTree::unary(chain);
            assert_eq!(chain.theta(), 2 + k);
        }
        for nn in 1..=12u32 {
            for t in enumerate_planar_binary(nn).unwrap() {
                let th = t.theta();
                assert!(2 * th >= nn + 1, "lower bound fails on {t:?}");
                assert!(th <= nn + 1, "upper bound fails on {t:?}");
            }
        }
    }

    /// The planar-binary factorial floor: gamma >= (3/4) * 2^(n-1) holds on
    /// every enumerated tree through weight 12, with equality only at the
    /// weight-3 cherry; the unweakened floor 2^(n-1) itself fails there
    /// (gamma = 3 < 4), so only the 3/4 form is asserted.
    #[test]
    fn planar_factorial_floor() {
        let mut equality_cases = Vec::new();
        for nn in 1..=12u32 {
            let pow = BigInt::from(1) << (nn - 1);
            let mut min_ratio_num = None::<(BigInt, BigInt)>;
            for t in enumerate_planar_binary(nn).unwrap() {
                let gamma = t.to_tree(Label(0)).tree_factorial();
                assert!(
                    &gamma * 4u32 >= &pow * 3u32,
                    "floor fails at weight {nn}: gamma = {gamma}"
                );
                if &gamma * 4u32 == &pow * 3u32 {
                    equality_cases.push(nn);
                }
                let better = match &min_ratio_num {
                    None => true,
                    Some((g, p)) => &gamma * p < g * &pow,
                };
                if better {
                    min_ratio_num = Some((gamma, pow.clone()));
                }
            }
            if nn == 3 {
                let (g, p) = min_ratio_num.unwrap();
                assert_eq!(g, BigInt::from(3));
                assert_eq!(p, BigInt::from(4));
            }
        }
        assert_eq!(equality_cases, vec![3]);
    }

    // -- classification ------------------------------------------------------

    #[test]
    fn classify_examples() {
        assert_eq!(classify_tree(&l(0), 0.3), TreeClass::Simple);
        assert_eq!(classify_tree(&chain(5), 0.3), TreeClass::Simple);
        // complete balanced binary tree of weight 7
        let b3 = n(0, vec![l(0), l(0)]);
        let b7 = n(0, vec![b3.clone(), b3.clone()]);
        assert_eq!(classify_tree(&b7, 0.5), TreeClass::Short);
        assert_eq!(classify_tree(&b7, 0.2), TreeClass::Other);
        // binary node above a unary node is neither simple nor short
        let mixed = n(0, vec![l(0), n(0, vec![b3.clone()])]);
        assert_eq!(classify_tree(&mixed, 0.5), TreeClass::Other);
        // lopsided root split (1 vs 3) plus an even inner split needs a
        // band wide enough to cover both 0.25 and 0.5
        let lop = n(0, vec![l(0), b3.clone()]);
        assert_eq!(classify_tree(&lop, 0.25), TreeClass::Other);
        assert_eq!(classify_tree_banded(&lop, 0.375, 0.15), TreeClass::Short);
    }

    // -- serialization -------------------------------------------------------

    #[test]
    fn bracket_form_round_trips() {
        let t = n(1, vec![l(0), n(0, vec![l(1), l(1)])]);
        let text = t.to_string();
        assert_eq!(text, "[1: [0:] [0: [1:] [1:]]]");
        let back: Tree = text.parse().unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_string(), text);
    }

    #[test]
    fn forest_text_round_trips() {
        let f = Forest::new(vec![l(1), chain(2)]);
        let text = f.to_string();
        let back: Forest = text.parse().unwrap();
        assert_eq!(back, f);
        assert_eq!(Forest::empty().to_string(), "1");
        assert_eq!("1".parse::<Forest>().unwrap(), Forest::empty());
    }

    #[test]
    fn json_round_trips() {
        let t = n(0, vec![l(1), chain(3)]);
        let js = serde_json::to_string(&t).unwrap();
        let back: Tree = serde_json::from_str(&js).unwrap();
        assert_eq!(back, t);
        assert_eq!(serde_json::to_string(&back).unwrap(), js);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("".parse::<Tree>().is_err());
        assert!("[0:".parse::<Tree>().is_err());
        assert!("[x:]".parse::<Tree>().is_err());
        assert!("[0:] junk".parse::<Tree>().is_err());
        assert!("[999:]".parse::<Tree>().is_err());
    }

    proptest::proptest! {
        #[test]
        fn prop_text_round_trip(t in arb_tree(2, 3)) {
            let back: Tree = t.to_string().parse().unwrap();
            proptest::prop_assert_eq!(&back, &t);
            let js = serde_json::to_string(&t).unwrap();
            let back2: Tree = serde_json::from_str(&js).unwrap();
            proptest::prop_assert_eq!(&back2, &t);
        }

        #[test]
        fn prop_weight_grading(t in arb_tree(2, 3)) {
            let child_sum: u32 = t.children().iter().map(|c| c.weight()).sum();
            proptest::prop_assert_eq!(t.weight(), child_sum + 1);
        }
    }

    fn arb_tree(d: u8, depth: u32) -> impl proptest::strategy::Strategy<Value = Tree> {
        use proptest::prelude::*;
        let leaf = (0..d).prop_map(|a| Tree::leaf(Label(a)));
        leaf.prop_recursive(depth, 16, 3, move |inner| {
            ((0..d), proptest::collection::vec(inner, 0..3))
                .prop_map(|(a, cs)| Tree::node(Label(a), cs))
        })
    }
}
