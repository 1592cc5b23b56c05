//! Rewriting categorical equality tests as threshold tests on synthesized
//! indicator features.
//!
//! An equality test `x[f] == e` becomes `indicator(x[f]) <= 0` where the
//! indicator is exactly 0 on the target value and exactly 1 on every other
//! value of the declared domain. Two evaluation modes exist: `lagrange`
//! evaluates the interpolating polynomial in product form, `dummy` compares
//! directly. Both are exact for inputs inside the domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{validate_domain, DecisionTree, Node, NodeKind, Test, TreeBuilder};

/// Largest domain the polynomial mode accepts. Beyond this, use
/// [`CategoricalMode::Dummy`], which scales to any domain size.
pub const MAX_LAGRANGE_DOMAIN: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoricalMode {
    #[default]
    Lagrange,
    Dummy,
}

/// Indicator built on a finite set of distinct reals: evaluates to 0 at the
/// target value and 1 at every other member of the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangeIndicator {
    domain: Vec<f64>,
    target: f64,
}

impl LagrangeIndicator {
    pub fn new(domain: &[f64], target: f64) -> Result<Self> {
        validate_domain(usize::MAX, domain).map_err(|e| match e {
            Error::CategoricalDomain { reason, .. } => Error::CategoricalDomain {
                feature: usize::MAX,
                reason,
            },
            other => other,
        })?;
        if !domain.contains(&target) {
            return Err(Error::CategoricalDomain {
                feature: usize::MAX,
                reason: format!("target {target} is not in the domain"),
            });
        }
        if domain.len() > MAX_LAGRANGE_DOMAIN {
            return Err(Error::CategoricalDomain {
                feature: usize::MAX,
                reason: format!(
                    "domain has {} values; the polynomial form is limited to {MAX_LAGRANGE_DOMAIN} \
                     — use dummy mode instead",
                    domain.len()
                ),
            });
        }
        Ok(LagrangeIndicator {
            domain: domain.to_vec(),
            target,
        })
    }

    /// `1 - prod_{e != target} (x - e) / (target - e)`.
    ///
    /// The product form keeps evaluation exact on domain members: at the
    /// target every factor is exactly 1, elsewhere one factor is exactly 0.
    pub fn eval(&self, x: f64) -> f64 {
        let mut basis = 1.0;
        for &e in &self.domain {
            if e != self.target {
                basis *= (x - e) / (self.target - e);
            }
        }
        1.0 - basis
    }
}

/// One synthesized feature appended by categorical expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoFeature {
    pub source_feature: usize,
    pub target: f64,
    pub domain: Vec<f64>,
    pub mode: CategoricalMode,
}

impl PseudoFeature {
    fn eval(&self, x: f64) -> f64 {
        match self.mode {
            CategoricalMode::Lagrange => {
                let mut basis = 1.0;
                for &e in &self.domain {
                    if e != self.target {
                        basis *= (x - e) / (self.target - e);
                    }
                }
                1.0 - basis
            }
            CategoricalMode::Dummy => {
                if x == self.target {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Maps raw inputs onto the expanded feature space a compiled machine
/// operates on. Identity (no pseudo features) for purely numeric trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTransform {
    pub base_feature_count: usize,
    #[serde(default)]
    pub pseudo_features: Vec<PseudoFeature>,
}

impl FeatureTransform {
    pub fn identity(feature_count: usize) -> Self {
        FeatureTransform {
            base_feature_count: feature_count,
            pseudo_features: Vec::new(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.pseudo_features.is_empty()
    }

    pub fn expanded_count(&self) -> usize {
        self.base_feature_count + self.pseudo_features.len()
    }

    /// Appends indicator values for every pseudo feature to a raw input.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.base_feature_count {
            return Err(Error::InputLength {
                expected: self.base_feature_count,
                got: x.len(),
            });
        }
        let mut out = Vec::with_capacity(self.expanded_count());
        out.extend_from_slice(x);
        for pseudo in &self.pseudo_features {
            out.push(pseudo.eval(x[pseudo.source_feature]));
        }
        Ok(out)
    }

    /// Checks that every categorical coordinate of a raw input takes a value
    /// from its declared domain.
    pub fn check_domain_membership(&self, x: &[f64]) -> Result<()> {
        for pseudo in &self.pseudo_features {
            let v = x[pseudo.source_feature];
            if !pseudo.domain.contains(&v) {
                return Err(Error::CategoricalDomain {
                    feature: pseudo.source_feature,
                    reason: format!("value {v} is outside the declared domain"),
                });
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for pseudo in &self.pseudo_features {
            if pseudo.source_feature >= self.base_feature_count {
                return Err(Error::InvalidMachine(format!(
                    "pseudo feature sources feature {} outside the base space",
                    pseudo.source_feature
                )));
            }
            validate_domain(pseudo.source_feature, &pseudo.domain)?;
            if !pseudo.domain.contains(&pseudo.target) {
                return Err(Error::CategoricalDomain {
                    feature: pseudo.source_feature,
                    reason: format!("target {} is not in the domain", pseudo.target),
                });
            }
            if pseudo.mode == CategoricalMode::Lagrange && pseudo.domain.len() > MAX_LAGRANGE_DOMAIN
            {
                return Err(Error::CategoricalDomain {
                    feature: pseudo.source_feature,
                    reason: "domain too large for the polynomial mode".into(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }
}

/// Rewrites every equality test into a threshold test on a synthesized
/// indicator feature. Trees without equality tests come back unchanged with
/// an identity transform.
///
/// Each distinct `(feature, category)` pair used by a test gets one pseudo
/// feature: the indicator is 0 exactly on the category, so the rewritten
/// test `indicator <= 0` passes precisely when the original equality held.
pub fn expand_categorical(
    tree: &DecisionTree,
    mode: CategoricalMode,
) -> Result<(DecisionTree, FeatureTransform)> {
    if !tree.has_categorical_tests() {
        return Ok((tree.clone(), FeatureTransform::identity(tree.feature_count())));
    }

    let base = tree.feature_count();
    let mut pseudo: Vec<PseudoFeature> = Vec::new();
    let mut index_of_pair: Vec<((usize, u64), usize)> = Vec::new();

    let mut nodes = Vec::with_capacity(tree.nodes().len());
    for node in tree.nodes() {
        let kind = match &node.kind {
            NodeKind::Leaf { value } => NodeKind::Leaf { value: *value },
            NodeKind::Internal { test, left, right } => {
                let test = match test {
                    Test::Le { feature, threshold } => Test::Le {
                        feature: *feature,
                        threshold: *threshold,
                    },
                    Test::Eq { feature, category } => {
                        let domain = tree
                            .categorical_domains()
                            .get(feature)
                            .expect("validated categorical test has a domain");
                        if mode == CategoricalMode::Lagrange && domain.len() > MAX_LAGRANGE_DOMAIN {
                            return Err(Error::CategoricalDomain {
                                feature: *feature,
                                reason: format!(
                                    "domain has {} values; the polynomial form is limited to \
                                     {MAX_LAGRANGE_DOMAIN} — use dummy mode instead",
                                    domain.len()
                                ),
                            });
                        }
                        let key = (*feature, category.to_bits());
                        let slot = match index_of_pair.iter().find(|(k, _)| *k == key) {
                            Some((_, idx)) => *idx,
                            None => {
                                pseudo.push(PseudoFeature {
                                    source_feature: *feature,
                                    target: *category,
                                    domain: domain.clone(),
                                    mode,
                                });
                                let idx = pseudo.len() - 1;
                                index_of_pair.push((key, idx));
                                idx
                            }
                        };
                        Test::Le {
                            feature: base + slot,
                            threshold: 0.0,
                        }
                    }
                };
                NodeKind::Internal {
                    test,
                    left: *left,
                    right: *right,
                }
            }
        };
        nodes.push(Node { id: node.id, kind });
    }

    let expanded = DecisionTree::new(
        base + pseudo.len(),
        nodes,
        tree.root(),
        tree.categorical_domains().clone(),
    )?;
    let transform = FeatureTransform {
        base_feature_count: base,
        pseudo_features: pseudo,
    };
    Ok((expanded, transform))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::LeafValue;

    #[test]
    fn indicator_is_exact_on_domain() {
        let ind = LagrangeIndicator::new(&[1.0, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(ind.eval(2.0), 0.0);
        assert_eq!(ind.eval(1.0), 1.0);
        assert_eq!(ind.eval(3.0), 1.0);
    }

    #[test]
    fn indicator_two_point_domain() {
        // basis(x) = (x - 5) / (0 - 5), so basis(5) = 0 and the indicator is 1.
        let ind = LagrangeIndicator::new(&[0.0, 5.0], 0.0).unwrap();
        assert_eq!(ind.eval(5.0), 1.0);
        assert_eq!(ind.eval(0.0), 0.0);
    }

    #[test]
    fn indicator_rejects_bad_domains() {
        assert!(LagrangeIndicator::new(&[1.0], 1.0).is_err());
        assert!(LagrangeIndicator::new(&[1.0, 1.0], 1.0).is_err());
        assert!(LagrangeIndicator::new(&[1.0, 2.0], 3.0).is_err());
        let big: Vec<f64> = (0..17).map(f64::from).collect();
        assert!(LagrangeIndicator::new(&big, 0.0).is_err());
    }

    #[test]
    fn dummy_mode_matches_lagrange_on_domain() {
        let domain = [2.0, 4.0, 8.0, 16.0];
        for &target in &domain {
            let lagrange = PseudoFeature {
                source_feature: 0,
                target,
                domain: domain.to_vec(),
                mode: CategoricalMode::Lagrange,
            };
            let dummy = PseudoFeature {
                source_feature: 0,
                target,
                domain: domain.to_vec(),
                mode: CategoricalMode::Dummy,
            };
            for &x in &domain {
                assert_eq!(lagrange.eval(x), dummy.eval(x));
            }
        }
    }

    #[test]
    fn numeric_tree_passes_through_unchanged() {
        let tree = crate::fixtures::tree1();
        let (expanded, transform) = expand_categorical(&tree, CategoricalMode::Lagrange).unwrap();
        assert_eq!(expanded, tree);
        assert!(transform.is_identity());
        assert_eq!(transform.expanded_count(), 4);
    }

    #[test]
    fn expansion_rewrites_equality_tests() {
        let mut b = TreeBuilder::new(2).domain(1, &[1.0, 2.0, 3.0]);
        let l1 = b.leaf(LeafValue::Real(-1.0));
        let l2 = b.leaf(LeafValue::Real(1.0));
        let root = b.eq(1, 2.0, l1, l2);
        let tree = b.build(root).unwrap();

        let (expanded, transform) = expand_categorical(&tree, CategoricalMode::Lagrange).unwrap();
        assert_eq!(expanded.feature_count(), 3);
        assert!(!expanded.has_categorical_tests());
        assert_eq!(transform.pseudo_features.len(), 1);

        // The expanded tree agrees with the original on every domain value.
        for &v in &[1.0, 2.0, 3.0] {
            let x = [0.0, v];
            let expect = tree.traverse(&x).unwrap().value;
            let expanded_x = transform.apply(&x).unwrap();
            assert_eq!(expanded.traverse(&expanded_x).unwrap().value, expect);
        }
    }

    #[test]
    fn shared_pairs_get_one_pseudo_feature() {
        let mut b = TreeBuilder::new(1).domain(0, &[1.0, 2.0]);
        let l1 = b.leaf(LeafValue::Real(0.0));
        let l2 = b.leaf(LeafValue::Real(1.0));
        let l3 = b.leaf(LeafValue::Real(2.0));
        let inner = b.eq(0, 1.0, l1, l2);
        let root = b.eq(0, 1.0, inner, l3);
        let tree = b.build(root).unwrap();
        let (_, transform) = expand_categorical(&tree, CategoricalMode::Dummy).unwrap();
        assert_eq!(transform.pseudo_features.len(), 1);
    }

    #[test]
    fn domain_membership_check() {
        let transform = FeatureTransform {
            base_feature_count: 1,
            pseudo_features: vec![PseudoFeature {
                source_feature: 0,
                target: 1.0,
                domain: vec![1.0, 2.0],
                mode: CategoricalMode::Lagrange,
            }],
        };
        assert!(transform.check_domain_membership(&[2.0]).is_ok());
        assert!(transform.check_domain_membership(&[7.0]).is_err());
    }
}
