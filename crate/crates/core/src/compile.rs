//! Compilation of decision trees into their analytic machine form.
//!
//! A tree with `L` leaves and `n` features becomes four aligned pieces:
//!
//! * a selection matrix `S` (`L-1 x n`, one row per test) paired with a
//!   threshold vector `t`, so `S x - t` yields every test margin at once;
//! * a ternary template matrix `B` (`L x L-1`) whose row `i` encodes leaf
//!   `i`'s path: `-1` for tests it passes, `+1` for tests it fails, `0` for
//!   tests not on its path;
//! * per-row L1 norms of `B` (the path lengths);
//! * the leaf value vector `v`.
//!
//! Tests are ordered level by level from the root (so the root is always
//! column 0 and its column has no zeros); leaves are ordered left to right.

use serde::{Deserialize, Serialize};

use crate::categorical::{expand_categorical, CategoricalMode, FeatureTransform};
use crate::error::{Error, Result};
use crate::ternary::TernaryMatrix;
use crate::tree::{DecisionTree, LeafValue, NodeId, NodeKind, Test};

/// Sparse selection row: `(feature index, coefficient)` pairs. Compilation
/// of axis-aligned trees emits exactly one pair per row; the representation
/// admits multi-entry rows for oblique splits supplied by hand.
pub type SelectionRow = Vec<(usize, f64)>;

/// A decision tree in analytic form. Immutable after construction and safe
/// to share across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionMachine {
    feature_count: usize,
    selection: Vec<SelectionRow>,
    thresholds: Vec<f64>,
    template: TernaryMatrix,
    row_norms: Vec<u32>,
    values: Vec<LeafValue>,
    test_order: Vec<NodeId>,
    leaf_order: Vec<NodeId>,
    transform: FeatureTransform,
    /// Cached nonzero positions of each template row, used by the decoders.
    support: Vec<Vec<(u32, i8)>>,
}

/// Template matrix with per-row integer denominators: row `i` of the
/// normalized template is `B_i / denominators[i]`, kept as an exact
/// integer pair rather than divided out.
#[derive(Clone, Copy, Debug)]
pub struct NormalizedTemplate<'a> {
    pub matrix: &'a TernaryMatrix,
    pub denominators: &'a [u32],
}

impl NormalizedTemplate<'_> {
    /// Exact self-similarity of a row: `B_i . B_i / ||B_i||_1 = 1` because
    /// squared ternary entries sum to the nonzero count.
    pub fn self_score(&self, row: usize) -> (i64, u32) {
        let num = self.matrix.row_dot(row, self.matrix.row(row));
        (num, self.denominators[row])
    }
}

/// Compiles a tree whose tests are all threshold tests. Trees containing
/// equality tests must pass through categorical expansion first; see
/// [`DecisionMachine::from_tree`] for the combined entry point.
///
/// A single-leaf tree compiles to the degenerate machine: empty `S`, `t`
/// and `B`, one value. Its prediction is that value for every input and the
/// similarity stage is skipped.
pub fn compile(tree: &DecisionTree) -> Result<DecisionMachine> {
    compile_with_transform(tree, FeatureTransform::identity(tree.feature_count()))
}

fn compile_with_transform(
    tree: &DecisionTree,
    transform: FeatureTransform,
) -> Result<DecisionMachine> {
    for node in tree.nodes() {
        if let NodeKind::Internal { test, .. } = &node.kind {
            if test.is_categorical() {
                return Err(Error::UnexpandedCategorical { node: node.id });
            }
        }
    }

    let internal = tree.internal_level_order();
    let leaves = tree.leaves_in_order();
    let test_count = internal.len();
    let leaf_count = leaves.len();

    let mut column_of = vec![usize::MAX; tree.nodes().len()];
    let mut selection = Vec::with_capacity(test_count);
    let mut thresholds = Vec::with_capacity(test_count);
    let mut test_order = Vec::with_capacity(test_count);
    for (col, &idx) in internal.iter().enumerate() {
        column_of[idx] = col;
        match &tree.node(idx).kind {
            NodeKind::Internal {
                test: Test::Le { feature, threshold },
                ..
            } => {
                selection.push(vec![(*feature, 1.0)]);
                thresholds.push(*threshold);
                test_order.push(tree.node(idx).id);
            }
            _ => unreachable!("level order yields threshold tests only"),
        }
    }

    let mut row_of = vec![usize::MAX; tree.nodes().len()];
    for (row, &idx) in leaves.iter().enumerate() {
        row_of[idx] = row;
    }

    let mut template = TernaryMatrix::zeros(leaf_count, test_count);
    let mut values = vec![LeafValue::Real(0.0); leaf_count];
    let mut leaf_order = vec![0; leaf_count];

    // Depth-first walk carrying the signed path: left child appends -1 at
    // the node's column, right child +1.
    let mut stack: Vec<(usize, Vec<(usize, i8)>)> = vec![(tree.root(), Vec::new())];
    while let Some((idx, path)) = stack.pop() {
        match &tree.node(idx).kind {
            NodeKind::Leaf { value } => {
                let row = row_of[idx];
                for &(col, sign) in &path {
                    template.set(row, col, sign);
                }
                values[row] = *value;
                leaf_order[row] = tree.node(idx).id;
            }
            NodeKind::Internal { left, right, .. } => {
                let col = column_of[idx];
                let mut left_path = path.clone();
                left_path.push((col, -1));
                let mut right_path = path;
                right_path.push((col, 1));
                stack.push((*left, left_path));
                stack.push((*right, right_path));
            }
        }
    }

    let row_norms: Vec<u32> = (0..leaf_count).map(|r| template.row_l1_norm(r)).collect();
    DecisionMachine::from_parts(
        transform.expanded_count(),
        selection,
        thresholds,
        template,
        row_norms,
        values,
        test_order,
        leaf_order,
        transform,
    )
}

impl DecisionMachine {
    /// Expands categorical tests if present, then compiles. The resulting
    /// machine applies the same expansion to raw inputs at prediction time.
    pub fn from_tree(tree: &DecisionTree, mode: CategoricalMode) -> Result<Self> {
        let (expanded, transform) = expand_categorical(tree, mode)?;
        compile_with_transform(&expanded, transform)
    }

    /// Assembles a machine from explicit parts, validating cross-field
    /// consistency. This is the single gate used by both compilation and
    /// deserialization.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        feature_count: usize,
        selection: Vec<SelectionRow>,
        thresholds: Vec<f64>,
        template: TernaryMatrix,
        row_norms: Vec<u32>,
        values: Vec<LeafValue>,
        test_order: Vec<NodeId>,
        leaf_order: Vec<NodeId>,
        transform: FeatureTransform,
    ) -> Result<Self> {
        let leaf_count = template.rows();
        let test_count = template.cols();
        if leaf_count == 0 {
            return Err(Error::InvalidMachine("machine needs at least one leaf".into()));
        }
        if test_count + 1 != leaf_count {
            return Err(Error::InvalidMachine(format!(
                "{leaf_count} leaves require {} tests, template has {test_count} columns",
                leaf_count - 1
            )));
        }
        if selection.len() != test_count || thresholds.len() != test_count {
            return Err(Error::InvalidMachine(format!(
                "selection/threshold count {}/{} does not match {test_count} tests",
                selection.len(),
                thresholds.len()
            )));
        }
        if values.len() != leaf_count {
            return Err(Error::InvalidMachine(format!(
                "value count {} does not match {leaf_count} leaves",
                values.len()
            )));
        }
        if test_order.len() != test_count || leaf_order.len() != leaf_count {
            return Err(Error::InvalidMachine(
                "test_order/leaf_order lengths do not match the template shape".into(),
            ));
        }
        if row_norms.len() != leaf_count {
            return Err(Error::InvalidMachine("row_norms length mismatch".into()));
        }
        for r in 0..leaf_count {
            let actual = template.row_l1_norm(r);
            if row_norms[r] != actual {
                return Err(Error::InvalidMachine(format!(
                    "row {r} declares norm {} but has {actual} nonzero entries",
                    row_norms[r]
                )));
            }
            if leaf_count >= 2 && actual == 0 {
                return Err(Error::ZeroTemplateRow { row: r });
            }
        }
        for (j, row) in selection.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::InvalidMachine(format!("selection row {j} is empty")));
            }
            for &(f, c) in row {
                if f >= feature_count {
                    return Err(Error::InvalidMachine(format!(
                        "selection row {j} references feature {f} outside [0, {feature_count})"
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::InvalidMachine(format!(
                        "selection row {j} has a non-finite coefficient"
                    )));
                }
            }
        }
        if let Some(j) = thresholds.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidMachine(format!("threshold {j} is not finite")));
        }
        let transform = transform.validated()?;
        if transform.expanded_count() != feature_count {
            return Err(Error::InvalidMachine(format!(
                "transform expands to {} features but the machine declares {feature_count}",
                transform.expanded_count()
            )));
        }

        let support = (0..leaf_count)
            .map(|r| {
                template
                    .row_support(r)
                    .map(|(j, s)| (j as u32, s))
                    .collect()
            })
            .collect();

        Ok(DecisionMachine {
            feature_count,
            selection,
            thresholds,
            template,
            row_norms,
            values,
            test_order,
            leaf_order,
            transform,
            support,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Width of raw inputs, before categorical expansion.
    pub fn base_feature_count(&self) -> usize {
        self.transform.base_feature_count
    }

    pub fn leaf_count(&self) -> usize {
        self.template.rows()
    }

    pub fn test_count(&self) -> usize {
        self.template.cols()
    }

    pub fn is_degenerate(&self) -> bool {
        self.leaf_count() == 1
    }

    pub fn selection(&self) -> &[SelectionRow] {
        &self.selection
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn template(&self) -> &TernaryMatrix {
        &self.template
    }

    pub fn row_norms(&self) -> &[u32] {
        &self.row_norms
    }

    pub fn values(&self) -> &[LeafValue] {
        &self.values
    }

    pub fn test_order(&self) -> &[NodeId] {
        &self.test_order
    }

    pub fn leaf_order(&self) -> &[NodeId] {
        &self.leaf_order
    }

    pub fn transform(&self) -> &FeatureTransform {
        &self.transform
    }

    pub(crate) fn row_support_cached(&self, row: usize) -> &[(u32, i8)] {
        &self.support[row]
    }

    /// Position of a leaf (by node id) in the row ordering.
    pub fn leaf_position(&self, leaf: NodeId) -> Option<usize> {
        self.leaf_order.iter().position(|&id| id == leaf)
    }

    /// Leaf values as reals; errors when the machine carries labels.
    pub fn numeric_values(&self) -> Result<Vec<f64>> {
        self.values
            .iter()
            .map(|v| v.as_real().ok_or(Error::NumericLeavesRequired))
            .collect()
    }

    /// The template with exact per-row denominators.
    pub fn normalized_template(&self) -> NormalizedTemplate<'_> {
        NormalizedTemplate {
            matrix: &self.template,
            denominators: &self.row_norms,
        }
    }

    /// Augmented form: selection rows gain a final column holding the row's
    /// threshold and inputs gain a trailing `-1`, so the augmented product
    /// equals `S x - t` entry for entry.
    pub fn augment(&self, x: &[f64]) -> Result<(Vec<SelectionRow>, Vec<f64>)> {
        let expanded = self.expand_input(x)?;
        Ok((self.augmented_selection(), augment_vector(&expanded)))
    }

    pub fn augmented_selection(&self) -> Vec<SelectionRow> {
        self.selection
            .iter()
            .zip(&self.thresholds)
            .map(|(row, &t)| {
                let mut row = row.clone();
                row.push((self.feature_count, t));
                row
            })
            .collect()
    }

    /// Validates a raw input and applies the categorical expansion.
    pub(crate) fn expand_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.transform.base_feature_count {
            return Err(Error::InputLength {
                expected: self.transform.base_feature_count,
                got: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| v.is_nan()) {
            return Err(Error::NanInput { index: i });
        }
        self.transform.apply(x)
    }

    /// All test margins `S x - t` for a raw input.
    pub fn test_margins(&self, x: &[f64]) -> Result<Vec<f64>> {
        let expanded = self.expand_input(x)?;
        Ok(self.margins_expanded(&expanded))
    }

    pub(crate) fn margins_expanded(&self, expanded: &[f64]) -> Vec<f64> {
        self.selection
            .iter()
            .zip(&self.thresholds)
            .map(|(row, &t)| dot_sparse(row, expanded) - t)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MachineDoc::from_machine(self)).expect("machine serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MachineDoc = serde_json::from_str(text)?;
        doc.into_machine()
    }
}

pub(crate) fn dot_sparse(row: &[(usize, f64)], x: &[f64]) -> f64 {
    row.iter().map(|&(f, c)| c * x[f]).sum()
}

pub(crate) fn augment_vector(expanded: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(expanded.len() + 1);
    out.extend_from_slice(expanded);
    out.push(-1.0);
    out
}

// --- JSON document form ----------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MachineDoc {
    n: usize,
    #[serde(rename = "L")]
    leaves: usize,
    #[serde(rename = "S")]
    selection: Vec<(usize, usize, f64)>,
    t: Vec<f64>,
    #[serde(rename = "B")]
    template: Vec<String>,
    row_norms: Vec<u32>,
    v: Vec<LeafValue>,
    test_order: Vec<NodeId>,
    leaf_order: Vec<NodeId>,
    feature_transform: FeatureTransform,
}

impl MachineDoc {
    fn from_machine(machine: &DecisionMachine) -> Self {
        let mut triplets = Vec::new();
        for (j, row) in machine.selection.iter().enumerate() {
            for &(f, c) in row {
                triplets.push((j, f, c));
            }
        }
        MachineDoc {
            n: machine.feature_count,
            leaves: machine.leaf_count(),
            selection: triplets,
            t: machine.thresholds.clone(),
            template: machine.template.row_strings(),
            row_norms: machine.row_norms.clone(),
            v: machine.values.clone(),
            test_order: machine.test_order.clone(),
            leaf_order: machine.leaf_order.clone(),
            feature_transform: machine.transform.clone(),
        }
    }

    fn into_machine(self) -> Result<DecisionMachine> {
        if self.template.len() != self.leaves {
            return Err(Error::InvalidMachine(format!(
                "declared L = {} but B has {} rows",
                self.leaves,
                self.template.len()
            )));
        }
        let template = if self.leaves == 1 && self.template[0].is_empty() {
            TernaryMatrix::zeros(1, 0)
        } else {
            TernaryMatrix::from_row_strings(&self.template)
                .map_err(|e| Error::InvalidMachine(e.to_string()))?
        };
        let mut selection: Vec<SelectionRow> = vec![Vec::new(); template.cols()];
        for (row, feature, coeff) in self.selection {
            if row >= selection.len() {
                return Err(Error::InvalidMachine(format!(
                    "S triplet references test row {row} outside [0, {})",
                    selection.len()
                )));
            }
            selection[row].push((feature, coeff));
        }
        DecisionMachine::from_parts(
            self.n,
            selection,
            self.t,
            template,
            self.row_norms,
            self.v,
            self.test_order,
            self.leaf_order,
            self.feature_transform,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::tree::TreeBuilder;

    /// Template rows of the canonical example, also printed in the docs.
    const TREE1_ROWS: [&str; 6] = ["--0-0", "--0+-", "--0++", "-+000", "+0-00", "+0+00"];

    #[test]
    fn tree1_compiles_to_expected_matrices() {
        let machine = compile(&fixtures::tree1()).unwrap();
        assert_eq!(machine.leaf_count(), 6);
        assert_eq!(machine.test_count(), 5);
        assert_eq!(machine.feature_count(), 4);

        let features: Vec<usize> = machine.selection().iter().map(|r| r[0].0).collect();
        assert_eq!(features, vec![0, 1, 2, 1, 3]);
        assert!(machine.selection().iter().all(|r| r.len() == 1 && r[0].1 == 1.0));
        assert_eq!(machine.thresholds(), &[1.0, 4.0, 3.0, 2.0, 5.0]);
        assert_eq!(machine.template().row_strings(), TREE1_ROWS);
        assert_eq!(machine.row_norms(), &[3, 4, 4, 2, 2, 2]);
        assert_eq!(machine.test_order(), &[1, 2, 3, 4, 5]);
        assert_eq!(machine.leaf_order(), &[6, 7, 8, 9, 10, 11]);
        let values: Vec<f64> = machine.numeric_values().unwrap();
        assert_eq!(values, vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0]);
    }

    #[test]
    fn third_leaf_template_row() {
        let machine = compile(&fixtures::tree1()).unwrap();
        assert_eq!(machine.template().row(2), &[-1, -1, 0, 1, 1]);
    }

    #[test]
    fn depth_one_tree() {
        let mut b = TreeBuilder::new(1);
        let l = b.leaf(LeafValue::Real(0.0));
        let r = b.leaf(LeafValue::Real(1.0));
        let root = b.le(0, 0.5, l, r);
        let machine = compile(&b.build(root).unwrap()).unwrap();
        assert_eq!(machine.template().row_strings(), vec!["-", "+"]);
        assert_eq!(machine.row_norms(), &[1, 1]);
    }

    #[test]
    fn single_leaf_machine_is_degenerate() {
        let mut b = TreeBuilder::new(1);
        let leaf = b.leaf(LeafValue::Real(7.0));
        let machine = compile(&b.build(leaf).unwrap()).unwrap();
        assert!(machine.is_degenerate());
        assert_eq!(machine.test_count(), 0);
        assert_eq!(machine.values(), &[LeafValue::Real(7.0)]);
    }

    #[test]
    fn categorical_tree_must_be_expanded() {
        let mut b = TreeBuilder::new(1).domain(0, &[1.0, 2.0]);
        let l1 = b.leaf(LeafValue::Real(0.0));
        let l2 = b.leaf(LeafValue::Real(1.0));
        let root = b.eq(0, 1.0, l1, l2);
        let tree = b.build(root).unwrap();
        assert!(matches!(
            compile(&tree),
            Err(Error::UnexpandedCategorical { .. })
        ));
        assert!(DecisionMachine::from_tree(&tree, CategoricalMode::Lagrange).is_ok());
    }

    #[test]
    fn normalized_template_denominators() {
        let machine = compile(&fixtures::tree1()).unwrap();
        let normalized = machine.normalized_template();
        assert_eq!(normalized.matrix.row(0), &[-1, -1, 0, -1, 0]);
        assert_eq!(normalized.denominators[0], 3);
        for row in 0..machine.leaf_count() {
            let (num, den) = normalized.self_score(row);
            assert_eq!(num, i64::from(den), "row {row} self-score must be exactly 1");
        }
    }

    #[test]
    fn norm_one_row_unchanged() {
        let mut b = TreeBuilder::new(1);
        let l = b.leaf(LeafValue::Real(0.0));
        let r = b.leaf(LeafValue::Real(1.0));
        let root = b.le(0, 0.5, l, r);
        let machine = compile(&b.build(root).unwrap()).unwrap();
        let normalized = machine.normalized_template();
        assert_eq!(normalized.denominators, &[1, 1]);
        assert_eq!(normalized.matrix.row(0), &[-1]);
    }

    #[test]
    fn augmented_product_equals_margins() {
        let machine = compile(&fixtures::tree1()).unwrap();
        let x = [2.0, 1.0, 2.0, 2.0];
        let (aug_rows, aug_x) = machine.augment(&x).unwrap();
        let margins: Vec<f64> = aug_rows.iter().map(|row| dot_sparse(row, &aug_x)).collect();
        assert_eq!(margins, vec![1.0, -3.0, -1.0, -1.0, -3.0]);
        assert_eq!(margins, machine.test_margins(&x).unwrap());
        assert_eq!(aug_x, vec![2.0, 1.0, 2.0, 2.0, -1.0]);
    }

    #[test]
    fn augment_zero_cases() {
        let machine = compile(&fixtures::tree1()).unwrap();
        // Zero input: margins reduce to -t.
        let zero = [0.0; 4];
        let expect: Vec<f64> = machine.thresholds().iter().map(|t| -t).collect();
        assert_eq!(machine.test_margins(&zero).unwrap(), expect);
    }

    #[test]
    fn machine_json_round_trip() {
        let machine = compile(&fixtures::tree1()).unwrap();
        let back = DecisionMachine::from_json(&machine.to_json()).unwrap();
        assert_eq!(back, machine);
    }

    #[test]
    fn machine_json_rejects_inconsistent_norms() {
        let machine = compile(&fixtures::tree1()).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&machine.to_json()).unwrap();
        doc["row_norms"][0] = serde_json::json!(9);
        let err = DecisionMachine::from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, Error::InvalidMachine(_)), "{err}");
    }

    #[test]
    fn degenerate_machine_round_trips() {
        let mut b = TreeBuilder::new(1);
        let leaf = b.leaf(LeafValue::Real(7.0));
        let machine = compile(&b.build(leaf).unwrap()).unwrap();
        let back = DecisionMachine::from_json(&machine.to_json()).unwrap();
        assert_eq!(back, machine);
    }
}
