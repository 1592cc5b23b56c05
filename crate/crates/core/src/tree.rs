//! Binary decision trees: data model, JSON parsing with validation, a
//! direct-traversal evaluator, and a seeded random generator for testing.
//!
//! Trees are strictly binary: every internal node carries exactly one test
//! and two children, so a tree with `L` leaves has `L - 1` internal nodes.
//! Ties at a threshold route left (`x[f] <= threshold` passes).

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node identifier as written in tree documents. Ids are explicit rather
/// than positional so structural comparisons survive re-serialization.
pub type NodeId = u64;

/// Value stored at a leaf. All leaves of one tree share a single variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", content = "v", rename_all = "lowercase")]
pub enum LeafValue {
    Real(f64),
    Label(i64),
}

impl LeafValue {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            LeafValue::Real(v) => Some(*v),
            LeafValue::Label(_) => None,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            LeafValue::Real(_) => "real",
            LeafValue::Label(_) => "label",
        }
    }
}

impl std::fmt::Display for LeafValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LeafValue::Real(v) => write!(f, "{v}"),
            LeafValue::Label(v) => write!(f, "{v}"),
        }
    }
}

/// Binary test at an internal node. A passing test routes the sample to the
/// left child, a failing test to the right child.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Test {
    /// Passes iff `x[feature] <= threshold`. Equality passes, so boundary
    /// samples route left.
    Le { feature: usize, threshold: f64 },
    /// Passes iff `x[feature] == category`, with the category drawn from the
    /// feature's declared finite domain.
    Eq { feature: usize, category: f64 },
}

impl Test {
    pub fn feature(&self) -> usize {
        match self {
            Test::Le { feature, .. } | Test::Eq { feature, .. } => *feature,
        }
    }

    pub fn passes(&self, x: &[f64]) -> bool {
        match self {
            Test::Le { feature, threshold } => x[*feature] <= *threshold,
            Test::Eq { feature, category } => x[*feature] == *category,
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, Test::Eq { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Internal { test: Test, left: usize, right: usize },
    Leaf { value: LeafValue },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

/// Result of walking a tree for one input.
#[derive(Clone, Debug, PartialEq)]
pub struct Traversal {
    /// Id of the reached leaf.
    pub leaf: NodeId,
    pub value: LeafValue,
    /// Internal nodes crossed, in order, with the outcome of their test
    /// (`true` = passed = went left).
    pub path: Vec<(NodeId, bool)>,
}

/// Immutable strictly-binary decision tree over a fixed feature space.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    feature_count: usize,
    nodes: Vec<Node>,
    root: usize,
    categorical_domains: BTreeMap<usize, Vec<f64>>,
}

impl DecisionTree {
    /// Validates and assembles a tree from an arena of nodes. `left`/`right`
    /// in [`NodeKind::Internal`] are arena indices into `nodes`.
    pub fn new(
        feature_count: usize,
        nodes: Vec<Node>,
        root: usize,
        categorical_domains: BTreeMap<usize, Vec<f64>>,
    ) -> Result<Self> {
        let tree = DecisionTree {
            feature_count,
            nodes,
            root,
            categorical_domains,
        };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        if self.feature_count == 0 {
            return Err(Error::InvalidTreeDocument("feature_count must be >= 1".into()));
        }
        if self.nodes.is_empty() {
            return Err(Error::InvalidTreeDocument("tree has no nodes".into()));
        }
        if self.root >= self.nodes.len() {
            return Err(Error::InvalidTreeDocument("root references a missing node".into()));
        }
        let mut ids = HashSet::with_capacity(self.nodes.len());
        for node in &self.nodes {
            if !ids.insert(node.id) {
                return Err(Error::InvalidTree {
                    node: node.id,
                    reason: "duplicate node id".into(),
                });
            }
        }

        for (f, domain) in &self.categorical_domains {
            validate_domain(*f, domain)?;
            if *f >= self.feature_count {
                return Err(Error::CategoricalDomain {
                    feature: *f,
                    reason: format!("domain declared for feature {f} outside feature space"),
                });
            }
        }

        // Walk from the root: every node must be visited exactly once, which
        // rules out cycles, shared children, and unreachable nodes.
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        let mut leaf_tag: Option<&'static str> = None;
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx];
            if visited[idx] {
                return Err(Error::InvalidTree {
                    node: node.id,
                    reason: "node reachable twice (cycle or shared child)".into(),
                });
            }
            visited[idx] = true;
            match &node.kind {
                NodeKind::Leaf { value } => {
                    let tag = value.tag();
                    match leaf_tag {
                        None => leaf_tag = Some(tag),
                        Some(prev) if prev != tag => {
                            return Err(Error::InvalidTree {
                                node: node.id,
                                reason: format!(
                                    "mixed leaf value tags: tree uses '{prev}' but this leaf is '{tag}'"
                                ),
                            })
                        }
                        _ => {}
                    }
                    if let LeafValue::Real(v) = value {
                        if !v.is_finite() {
                            return Err(Error::InvalidTree {
                                node: node.id,
                                reason: "leaf value is not finite".into(),
                            });
                        }
                    }
                }
                NodeKind::Internal { test, left, right } => {
                    if left == right {
                        return Err(Error::InvalidTree {
                            node: node.id,
                            reason: "non-binary node: left and right reference the same child".into(),
                        });
                    }
                    for &child in [left, right] {
                        if child >= self.nodes.len() {
                            return Err(Error::InvalidTree {
                                node: node.id,
                                reason: "child references a missing node".into(),
                            });
                        }
                    }
                    let f = test.feature();
                    if f >= self.feature_count {
                        return Err(Error::InvalidTree {
                            node: node.id,
                            reason: format!(
                                "feature index {f} out of range [0, {})",
                                self.feature_count
                            ),
                        });
                    }
                    match test {
                        Test::Le { threshold, .. } => {
                            if !threshold.is_finite() {
                                return Err(Error::InvalidTree {
                                    node: node.id,
                                    reason: "threshold is not finite".into(),
                                });
                            }
                        }
                        Test::Eq { feature, category } => {
                            let domain = self.categorical_domains.get(feature).ok_or_else(|| {
                                Error::InvalidTree {
                                    node: node.id,
                                    reason: format!(
                                        "categorical test on feature {feature} without a declared domain"
                                    ),
                                }
                            })?;
                            if !domain.iter().any(|e| e == category) {
                                return Err(Error::InvalidTree {
                                    node: node.id,
                                    reason: format!(
                                        "category {category} is not in the declared domain of feature {feature}"
                                    ),
                                });
                            }
                        }
                    }
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        if let Some(idx) = visited.iter().position(|v| !v) {
            return Err(Error::InvalidTree {
                node: self.nodes[idx].id,
                reason: "node is not reachable from the root".into(),
            });
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn categorical_domains(&self) -> &BTreeMap<usize, Vec<f64>> {
        &self.categorical_domains
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    pub fn has_categorical_tests(&self) -> bool {
        self.nodes.iter().any(|n| match &n.kind {
            NodeKind::Internal { test, .. } => test.is_categorical(),
            NodeKind::Leaf { .. } => false,
        })
    }

    /// Edge depth of the deepest leaf (number of tests on its path).
    pub fn max_depth(&self) -> usize {
        fn depth(tree: &DecisionTree, idx: usize) -> usize {
            match &tree.nodes[idx].kind {
                NodeKind::Leaf { .. } => 0,
                NodeKind::Internal { left, right, .. } => {
                    1 + depth(tree, *left).max(depth(tree, *right))
                }
            }
        }
        depth(self, self.root)
    }

    /// Internal nodes in level order (root first, then each level left to
    /// right). This is the test ordering used for compilation.
    pub fn internal_level_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.internal_count());
        let mut queue = std::collections::VecDeque::from([self.root]);
        while let Some(idx) = queue.pop_front() {
            if let NodeKind::Internal { left, right, .. } = &self.nodes[idx].kind {
                order.push(idx);
                queue.push_back(*left);
                queue.push_back(*right);
            }
        }
        order
    }

    /// Leaves from left to right. This is the leaf ordering used for
    /// compilation.
    pub fn leaves_in_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.leaf_count());
        let mut stack = vec![self.root];
        while let Some(idx) = stack.pop() {
            match &self.nodes[idx].kind {
                NodeKind::Leaf { .. } => order.push(idx),
                NodeKind::Internal { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        order
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_count {
            return Err(Error::InputLength {
                expected: self.feature_count,
                got: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| v.is_nan()) {
            return Err(Error::NanInput { index: i });
        }
        Ok(())
    }

    /// Follows tests from the root: pass goes left, fail goes right.
    /// `traverse` is pure and the reference evaluator every compiled form is
    /// checked against.
    pub fn traverse(&self, x: &[f64]) -> Result<Traversal> {
        self.check_input(x)?;
        let mut idx = self.root;
        let mut path = Vec::new();
        loop {
            match &self.nodes[idx].kind {
                NodeKind::Leaf { value } => {
                    return Ok(Traversal {
                        leaf: self.nodes[idx].id,
                        value: *value,
                        path,
                    })
                }
                NodeKind::Internal { test, left, right } => {
                    let pass = test.passes(x);
                    path.push((self.nodes[idx].id, pass));
                    idx = if pass { *left } else { *right };
                }
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: TreeDoc = serde_json::from_str(text)?;
        doc.into_tree()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TreeDoc::from_tree(self)).expect("tree serialization")
    }
}

pub(crate) fn validate_domain(feature: usize, domain: &[f64]) -> Result<()> {
    if domain.len() < 2 {
        return Err(Error::CategoricalDomain {
            feature,
            reason: format!("domain has {} values; at least 2 required", domain.len()),
        });
    }
    for v in domain {
        if !v.is_finite() {
            return Err(Error::CategoricalDomain {
                feature,
                reason: "domain contains a non-finite value".into(),
            });
        }
    }
    for (i, a) in domain.iter().enumerate() {
        if domain[i + 1..].contains(a) {
            return Err(Error::CategoricalDomain {
                feature,
                reason: format!("duplicate value {a} in domain"),
            });
        }
    }
    Ok(())
}

// --- JSON document form -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    feature_count: usize,
    root: NodeId,
    nodes: Vec<NodeDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    categorical_domains: BTreeMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: NodeId,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    test: Option<TestDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<LeafValue>,
}

#[derive(Serialize, Deserialize)]
struct TestDoc {
    kind: String,
    feature: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<f64>,
}

impl TreeDoc {
    fn into_tree(self) -> Result<DecisionTree> {
        let mut index_of: HashMap<NodeId, usize> = HashMap::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            if index_of.insert(node.id, i).is_some() {
                return Err(Error::InvalidTree {
                    node: node.id,
                    reason: "duplicate node id".into(),
                });
            }
        }
        let lookup = |owner: NodeId, child: NodeId| {
            index_of.get(&child).copied().ok_or(Error::InvalidTree {
                node: owner,
                reason: format!("references missing node {child}"),
            })
        };
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for doc in &self.nodes {
            let kind = match doc.kind.as_str() {
                "leaf" => {
                    let value = doc.value.ok_or(Error::InvalidTree {
                        node: doc.id,
                        reason: "leaf without a value".into(),
                    })?;
                    NodeKind::Leaf { value }
                }
                "internal" => {
                    let test = doc.test.as_ref().ok_or(Error::InvalidTree {
                        node: doc.id,
                        reason: "internal node without a test".into(),
                    })?;
                    let left = doc.left.ok_or(Error::InvalidTree {
                        node: doc.id,
                        reason: "internal node without a left child".into(),
                    })?;
                    let right = doc.right.ok_or(Error::InvalidTree {
                        node: doc.id,
                        reason: "internal node without a right child".into(),
                    })?;
                    if left == right {
                        return Err(Error::InvalidTree {
                            node: doc.id,
                            reason: "non-binary node: left and right reference the same child".into(),
                        });
                    }
                    let test = match test.kind.as_str() {
                        "le" => Test::Le {
                            feature: test.feature,
                            threshold: test.threshold.ok_or(Error::InvalidTree {
                                node: doc.id,
                                reason: "le test without a threshold".into(),
                            })?,
                        },
                        "eq" => Test::Eq {
                            feature: test.feature,
                            category: test.category.ok_or(Error::InvalidTree {
                                node: doc.id,
                                reason: "eq test without a category".into(),
                            })?,
                        },
                        other => {
                            return Err(Error::InvalidTree {
                                node: doc.id,
                                reason: format!("unknown test kind '{other}'"),
                            })
                        }
                    };
                    NodeKind::Internal {
                        test,
                        left: lookup(doc.id, left)?,
                        right: lookup(doc.id, right)?,
                    }
                }
                other => {
                    return Err(Error::InvalidTree {
                        node: doc.id,
                        reason: format!("unknown node kind '{other}'"),
                    })
                }
            };
            nodes.push(Node { id: doc.id, kind });
        }
        let root = index_of
            .get(&self.root)
            .copied()
            .ok_or_else(|| Error::InvalidTreeDocument(format!("root {} not found", self.root)))?;
        let mut domains = BTreeMap::new();
        for (key, values) in self.categorical_domains {
            let feature: usize = key.parse().map_err(|_| {
                Error::InvalidTreeDocument(format!("categorical domain key '{key}' is not a feature index"))
            })?;
            domains.insert(feature, values);
        }
        DecisionTree::new(self.feature_count, nodes, root, domains)
    }

    fn from_tree(tree: &DecisionTree) -> TreeDoc {
        let nodes = tree
            .nodes
            .iter()
            .map(|node| match &node.kind {
                NodeKind::Leaf { value } => NodeDoc {
                    id: node.id,
                    kind: "leaf".into(),
                    test: None,
                    left: None,
                    right: None,
                    value: Some(*value),
                },
                NodeKind::Internal { test, left, right } => NodeDoc {
                    id: node.id,
                    kind: "internal".into(),
                    test: Some(match test {
                        Test::Le { feature, threshold } => TestDoc {
                            kind: "le".into(),
                            feature: *feature,
                            threshold: Some(*threshold),
                            category: None,
                        },
                        Test::Eq { feature, category } => TestDoc {
                            kind: "eq".into(),
                            feature: *feature,
                            threshold: None,
                            category: Some(*category),
                        },
                    }),
                    left: Some(tree.nodes[*left].id),
                    right: Some(tree.nodes[*right].id),
                    value: None,
                },
            })
            .collect();
        TreeDoc {
            feature_count: tree.feature_count,
            root: tree.nodes[tree.root].id,
            nodes,
            categorical_domains: tree
                .categorical_domains
                .iter()
                .map(|(f, d)| (f.to_string(), d.clone()))
                .collect(),
        }
    }
}

// --- Builder --------------------------------------------------------------

/// Incremental construction of trees in code; ids are assigned sequentially
/// starting at 1 unless set explicitly.
#[derive(Default)]
pub struct TreeBuilder {
    feature_count: usize,
    nodes: Vec<Node>,
    categorical_domains: BTreeMap<usize, Vec<f64>>,
}

impl TreeBuilder {
    pub fn new(feature_count: usize) -> Self {
        TreeBuilder {
            feature_count,
            nodes: Vec::new(),
            categorical_domains: BTreeMap::new(),
        }
    }

    pub fn domain(mut self, feature: usize, values: &[f64]) -> Self {
        self.categorical_domains.insert(feature, values.to_vec());
        self
    }

    pub fn leaf(&mut self, value: LeafValue) -> usize {
        self.push(NodeKind::Leaf { value })
    }

    pub fn le(&mut self, feature: usize, threshold: f64, left: usize, right: usize) -> usize {
        self.push(NodeKind::Internal {
            test: Test::Le { feature, threshold },
            left,
            right,
        })
    }

    pub fn eq(&mut self, feature: usize, category: f64, left: usize, right: usize) -> usize {
        self.push(NodeKind::Internal {
            test: Test::Eq { feature, category },
            left,
            right,
        })
    }

    fn push(&mut self, kind: NodeKind) -> usize {
        let id = self.nodes.len() as NodeId + 1;
        self.nodes.push(Node { id, kind });
        self.nodes.len() - 1
    }

    pub fn build(self, root: usize) -> Result<DecisionTree> {
        DecisionTree::new(self.feature_count, self.nodes, root, self.categorical_domains)
    }
}

// --- Random generation ------------------------------------------------------

/// Configuration for [`random_tree`].
///
/// Generation scheme: nodes are grown recursively in pre-order with a
/// `ChaCha8` stream seeded from the caller's seed, so output is identical
/// across runs and platforms. A node at depth `d < max_depth` becomes
/// internal with probability `split_probability` (always a leaf at
/// `max_depth`). Internal nodes draw a feature uniformly; features with a
/// declared domain get an equality test against a uniformly chosen domain
/// value, all others a threshold test with the threshold uniform in
/// `threshold_range`. Leaf values are uniform reals in `value_range` or
/// uniform labels in `[0, label_classes)`.
#[derive(Clone, Debug)]
pub struct RandomTreeConfig {
    pub max_depth: usize,
    pub feature_count: usize,
    pub leaf_tag: RandomLeafTag,
    pub split_probability: f64,
    pub threshold_range: (f64, f64),
    pub categorical_domains: BTreeMap<usize, Vec<f64>>,
}

#[derive(Clone, Copy, Debug)]
pub enum RandomLeafTag {
    Real { lo: f64, hi: f64 },
    Label { classes: u32 },
}

impl RandomTreeConfig {
    pub fn new(max_depth: usize, feature_count: usize) -> Self {
        RandomTreeConfig {
            max_depth,
            feature_count,
            leaf_tag: RandomLeafTag::Real { lo: -10.0, hi: 10.0 },
            split_probability: 0.75,
            threshold_range: (-4.0, 4.0),
            categorical_domains: BTreeMap::new(),
        }
    }

    pub fn with_leaf_tag(mut self, tag: RandomLeafTag) -> Self {
        self.leaf_tag = tag;
        self
    }

    pub fn with_split_probability(mut self, p: f64) -> Self {
        self.split_probability = p;
        self
    }

    pub fn with_domain(mut self, feature: usize, values: &[f64]) -> Self {
        self.categorical_domains.insert(feature, values.to_vec());
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.feature_count == 0 {
            return Err(Error::InvalidConfig("feature_count must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.split_probability) {
            return Err(Error::InvalidConfig("split_probability must lie in [0, 1]".into()));
        }
        if !(self.threshold_range.0 < self.threshold_range.1) {
            return Err(Error::InvalidConfig("threshold_range must be a nonempty interval".into()));
        }
        if let RandomLeafTag::Real { lo, hi } = self.leaf_tag {
            if !(lo < hi) {
                return Err(Error::InvalidConfig("leaf value range must be nonempty".into()));
            }
        }
        if let RandomLeafTag::Label { classes } = self.leaf_tag {
            if classes == 0 {
                return Err(Error::InvalidConfig("label classes must be >= 1".into()));
            }
        }
        for (f, domain) in &self.categorical_domains {
            validate_domain(*f, domain)?;
        }
        Ok(())
    }
}

/// Deterministic random tree: identical `(seed, config)` pairs produce
/// byte-identical trees. See [`RandomTreeConfig`] for the scheme.
pub fn random_tree(seed: u64, config: &RandomTreeConfig) -> Result<DecisionTree> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut builder = TreeBuilder::new(config.feature_count);
    for (f, domain) in &config.categorical_domains {
        builder = builder.domain(*f, domain);
    }
    let root = grow(&mut builder, &mut rng, config, 0);
    builder.build(root)
}

fn grow(
    builder: &mut TreeBuilder,
    rng: &mut ChaCha8Rng,
    config: &RandomTreeConfig,
    depth: usize,
) -> usize {
    let split = depth < config.max_depth && rng.random_bool(config.split_probability);
    if !split {
        let value = match config.leaf_tag {
            RandomLeafTag::Real { lo, hi } => LeafValue::Real(rng.random_range(lo..hi)),
            RandomLeafTag::Label { classes } => {
                LeafValue::Label(i64::from(rng.random_range(0..classes)))
            }
        };
        return builder.leaf(value);
    }
    let feature = rng.random_range(0..config.feature_count);
    let test: (usize, Option<f64>, Option<f64>) = match config.categorical_domains.get(&feature) {
        Some(domain) => {
            let category = domain[rng.random_range(0..domain.len())];
            (feature, None, Some(category))
        }
        None => {
            let (lo, hi) = config.threshold_range;
            (feature, Some(rng.random_range(lo..hi)), None)
        }
    };
    let left = grow(builder, rng, config, depth + 1);
    let right = grow(builder, rng, config, depth + 1);
    match test {
        (f, Some(threshold), None) => builder.le(f, threshold, left, right),
        (f, None, Some(category)) => builder.eq(f, category, left, right),
        _ => unreachable!(),
    }
}

/// Deterministic random inputs compatible with a feature space: numeric
/// coordinates uniform in `range`, coordinates with a declared domain drawn
/// uniformly from that domain.
pub fn random_inputs(
    seed: u64,
    rows: usize,
    feature_count: usize,
    range: (f64, f64),
    categorical_domains: &BTreeMap<usize, Vec<f64>>,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|_| {
            (0..feature_count)
                .map(|f| match categorical_domains.get(&f) {
                    Some(domain) => domain[rng.random_range(0..domain.len())],
                    None => rng.random_range(range.0..range.1),
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn tree1_shape() {
        let tree = fixtures::tree1();
        assert_eq!(tree.feature_count(), 4);
        assert_eq!(tree.internal_count(), 5);
        assert_eq!(tree.leaf_count(), 6);
        assert_eq!(tree.max_depth(), 4);
    }

    #[test]
    fn tree1_traversal_reaches_fifth_leaf() {
        let tree = fixtures::tree1();
        let result = tree.traverse(&[2.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(result.value, LeafValue::Real(50.0));
        assert_eq!(result.leaf, 10);
        // Root fails (2 > 1), then the right-subtree test passes (2 <= 3).
        assert_eq!(result.path, vec![(1, false), (3, true)]);
    }

    #[test]
    fn boundary_ties_route_left() {
        let tree = fixtures::tree1();
        // x1 = 1 and x2 = 4 sit exactly on thresholds and pass; the depth-3
        // test (x2 <= 2) fails, so this lands on the second leaf.
        let result = tree.traverse(&[1.0, 4.0, 0.0, 0.0]).unwrap();
        assert_eq!(result.value, LeafValue::Real(20.0));
        assert_eq!(result.path, vec![(1, true), (2, true), (4, false), (5, true)]);
    }

    #[test]
    fn single_leaf_tree() {
        let mut b = TreeBuilder::new(1);
        let leaf = b.leaf(LeafValue::Real(7.0));
        let tree = b.build(leaf).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(tree.internal_count(), 0);
        let out = tree.traverse(&[123.0]).unwrap();
        assert_eq!(out.value, LeafValue::Real(7.0));
    }

    #[test]
    fn parse_rejects_duplicate_child() {
        let text = r#"{
            "feature_count": 1,
            "root": 1,
            "nodes": [
                {"id": 1, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 0.5}, "left": 2, "right": 2},
                {"id": 2, "kind": "leaf", "value": {"tag": "real", "v": 1.0}}
            ]
        }"#;
        let err = DecisionTree::parse(text).unwrap_err();
        match err {
            Error::InvalidTree { node, reason } => {
                assert_eq!(node, 1);
                assert!(reason.contains("non-binary"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn parse_rejects_feature_out_of_range() {
        let text = r#"{
            "feature_count": 2,
            "root": 1,
            "nodes": [
                {"id": 1, "kind": "internal", "test": {"kind": "le", "feature": 5, "threshold": 0.0}, "left": 2, "right": 3},
                {"id": 2, "kind": "leaf", "value": {"tag": "real", "v": 1.0}},
                {"id": 3, "kind": "leaf", "value": {"tag": "real", "v": 2.0}}
            ]
        }"#;
        let err = DecisionTree::parse(text).unwrap_err();
        assert!(matches!(err, Error::InvalidTree { node: 1, .. }), "{err}");
    }

    #[test]
    fn parse_rejects_mixed_leaf_tags() {
        let text = r#"{
            "feature_count": 1,
            "root": 1,
            "nodes": [
                {"id": 1, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 0.0}, "left": 2, "right": 3},
                {"id": 2, "kind": "leaf", "value": {"tag": "real", "v": 1.0}},
                {"id": 3, "kind": "leaf", "value": {"tag": "label", "v": 2}}
            ]
        }"#;
        let err = DecisionTree::parse(text).unwrap_err();
        assert!(matches!(err, Error::InvalidTree { .. }), "{err}");
    }

    #[test]
    fn parse_rejects_cycle() {
        let text = r#"{
            "feature_count": 1,
            "root": 1,
            "nodes": [
                {"id": 1, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 0.0}, "left": 2, "right": 3},
                {"id": 2, "kind": "internal", "test": {"kind": "le", "feature": 0, "threshold": 0.0}, "left": 1, "right": 4},
                {"id": 3, "kind": "leaf", "value": {"tag": "real", "v": 1.0}},
                {"id": 4, "kind": "leaf", "value": {"tag": "real", "v": 2.0}}
            ]
        }"#;
        assert!(DecisionTree::parse(text).is_err());
    }

    #[test]
    fn json_round_trip_preserves_structure() {
        let tree = fixtures::tree1();
        let back = DecisionTree::parse(&tree.to_json()).unwrap();
        assert_eq!(back, tree);
    }

    #[test]
    fn random_tree_is_reproducible() {
        let config = RandomTreeConfig::new(8, 4);
        let a = random_tree(42, &config).unwrap();
        let b = random_tree(42, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        let c = random_tree(43, &config).unwrap();
        assert!(a != c || a.leaf_count() == 1);
    }

    #[test]
    fn random_tree_respects_depth_bound() {
        let config = RandomTreeConfig::new(8, 4);
        for seed in [0, 1, 42, 1000] {
            let tree = random_tree(seed, &config).unwrap();
            assert!(tree.max_depth() <= 8);
            assert!(tree.leaf_count() <= 256);
        }
    }

    #[test]
    fn random_tree_depth_one() {
        let config = RandomTreeConfig::new(1, 2);
        let tree = random_tree(0, &config).unwrap();
        assert!(tree.max_depth() <= 1);
    }

    #[test]
    fn traversal_path_matches_direct_test_evaluation() {
        let config = RandomTreeConfig::new(6, 5);
        for seed in 0..20 {
            let tree = random_tree(seed, &config).unwrap();
            for x in random_inputs(seed ^ 0x5eed, 10, 5, (-5.0, 5.0), &BTreeMap::new()) {
                let t = tree.traverse(&x).unwrap();
                for (node_id, pass) in &t.path {
                    let node = tree.nodes().iter().find(|n| n.id == *node_id).unwrap();
                    match &node.kind {
                        NodeKind::Internal { test, .. } => assert_eq!(test.passes(&x), *pass),
                        NodeKind::Leaf { .. } => panic!("leaf on path"),
                    }
                }
            }
        }
    }
}
