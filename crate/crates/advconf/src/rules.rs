//! Distill a trained classifier into a small decision tree and turn its
//! non-acceptable leaves into variability-model constraints.
//!
//! The tree is fit CART-style on fresh samples labeled by the classifier
//! (not on the training set), so the extracted rules reflect the decision
//! function itself, including regions reshaped by adversarial retraining.
//! Each leaf predicting -1 becomes one constraint: the negation of its
//! path conjunction, translated back from feature slots to option atoms.

use crate::classifier::{Label, SvmModel};
use crate::encoding::{Encoder, Slot};
use crate::error::{Error, Result};
use crate::varmodel::{Atom, CmpOp, Constraint, Expr, Value, VariabilityModel};

/// Binary decision tree over feature slots; thresholds live in \[0,1\].
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        slot: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        label: Label,
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub dim: usize,
}

impl DecisionTree {
    /// Route a point to its leaf label (left on `< threshold`).
    pub fn predict(&self, coords: &[f64]) -> Result<Label> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: coords.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return Ok(*label),
                TreeNode::Split {
                    slot,
                    threshold,
                    left,
                    right,
                } => {
                    node = if coords[*slot] < *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }

    /// Indented text export, one node per line.
    pub fn to_text(&self, encoder: &Encoder) -> String {
        fn walk(node: &TreeNode, encoder: &Encoder, indent: usize, out: &mut String) {
            let pad = "  ".repeat(indent);
            match node {
                TreeNode::Leaf { label, samples } => {
                    out.push_str(&format!("{pad}leaf {label} {samples}\n"));
                }
                TreeNode::Split {
                    slot,
                    threshold,
                    left,
                    right,
                } => {
                    out.push_str(&format!(
                        "{pad}{} < {threshold:?}\n",
                        encoder.slot(*slot).name()
                    ));
                    walk(left, encoder, indent + 1, out);
                    walk(right, encoder, indent + 1, out);
                }
            }
        }
        let mut out = String::new();
        walk(&self.root, encoder, 0, &mut out);
        out
    }
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct BestSplit {
    slot: usize,
    threshold: f64,
    impurity: f64,
}

// Exhaustive search over midpoints of consecutive sorted unique values,
// one sweep per slot with running class counts. Ties in impurity keep the
// first candidate found, i.e. the lowest slot then the lowest threshold.
fn best_split(points: &[Vec<f64>], labels: &[Label], indices: &[usize], dim: usize) -> Option<BestSplit> {
    let total = indices.len();
    let total_pos = indices
        .iter()
        .filter(|&&i| labels[i] == Label::Acceptable)
        .count();
    let mut best: Option<BestSplit> = None;
    let mut order: Vec<usize> = Vec::with_capacity(total);
    for slot in 0..dim {
        order.clear();
        order.extend_from_slice(indices);
        order.sort_by(|&a, &b| {
            points[a][slot]
                .partial_cmp(&points[b][slot])
                .expect("finite coordinates")
        });
        let mut left_n = 0usize;
        let mut left_pos = 0usize;
        for w in 0..total - 1 {
            let i = order[w];
            left_n += 1;
            if labels[i] == Label::Acceptable {
                left_pos += 1;
            }
            let here = points[i][slot];
            let next = points[order[w + 1]][slot];
            if here == next {
                continue;
            }
            let threshold = here + (next - here) / 2.0;
            let right_n = total - left_n;
            let right_pos = total_pos - left_pos;
            let impurity = (left_n as f64 * gini(left_pos, left_n)
                + right_n as f64 * gini(right_pos, right_n))
                / total as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                best = Some(BestSplit {
                    slot,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

fn grow(
    points: &[Vec<f64>],
    labels: &[Label],
    indices: Vec<usize>,
    depth_left: usize,
    dim: usize,
) -> TreeNode {
    let samples = indices.len();
    let pos = indices
        .iter()
        .filter(|&&i| labels[i] == Label::Acceptable)
        .count();
    let majority = if pos * 2 >= samples {
        Label::Acceptable
    } else {
        Label::NonAcceptable
    };
    if pos == 0 || pos == samples || depth_left == 0 {
        return TreeNode::Leaf {
            label: majority,
            samples,
        };
    }
    let Some(split) = best_split(points, labels, &indices, dim) else {
        return TreeNode::Leaf {
            label: majority,
            samples,
        };
    };
    let (left, right): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| points[i][split.slot] < split.threshold);
    TreeNode::Split {
        slot: split.slot,
        threshold: split.threshold,
        left: Box::new(grow(points, labels, left, depth_left - 1, dim)),
        right: Box::new(grow(points, labels, right, depth_left - 1, dim)),
    }
}

/// Fit a depth-bounded CART tree to the classifier's own predictions on
/// `n_samples` fresh valid configurations. Deterministic for a fixed seed.
pub fn distill_tree(
    svm: &SvmModel,
    encoder: &Encoder,
    model: &VariabilityModel,
    n_samples: usize,
    max_depth: usize,
    seed: u64,
) -> Result<DecisionTree> {
    if n_samples == 0 {
        return Err(Error::InvalidParams(
            "distillation needs at least one sample".into(),
        ));
    }
    let configs = model.sample_valid(n_samples, seed)?;
    let mut points = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for c in &configs {
        let x = encoder.encode(c)?;
        let g = svm.decision(&x)?;
        labels.push(Label::from_decision(g));
        points.push(x.into_coords());
    }
    let dim = encoder.dim();
    let indices: Vec<usize> = (0..n_samples).collect();
    let root = grow(&points, &labels, indices, max_depth, dim);
    Ok(DecisionTree { root, dim })
}

/// Translate one tree edge into an option-level atom.
fn edge_expr(encoder: &Encoder, slot: usize, threshold: f64, went_left: bool) -> Expr {
    match encoder.slot(slot) {
        Slot::Numeric { option, min, max } => {
            let value = min + threshold * (max - min);
            let op = if went_left { CmpOp::Lt } else { CmpOp::Ge };
            Expr::Atom(Atom::Cmp {
                option: option.clone(),
                op,
                value,
            })
        }
        Slot::Boolean { option } => {
            let atom = Expr::Atom(Atom::Eq {
                option: option.clone(),
                value: Value::Bool(true),
            });
            if went_left {
                Expr::Not(Box::new(atom))
            } else {
                atom
            }
        }
        Slot::OneHot { option, choice } => {
            let atom = Expr::Atom(Atom::Eq {
                option: option.clone(),
                value: Value::Choice(choice.clone()),
            });
            if went_left {
                Expr::Not(Box::new(atom))
            } else {
                atom
            }
        }
    }
}

fn conjoin(mut atoms: Vec<Expr>) -> Option<Expr> {
    let first = if atoms.is_empty() {
        return None;
    } else {
        atoms.remove(0)
    };
    Some(
        atoms
            .into_iter()
            .fold(first, |acc, e| Expr::And(Box::new(acc), Box::new(e))),
    )
}

// Constant-false expression for the degenerate all-rejecting tree; built
// from the first option so it stays inside the constraint grammar.
fn contradiction(model: &VariabilityModel) -> Expr {
    let opt = &model.options[0];
    match &opt.kind {
        crate::varmodel::OptionKind::Numeric { min, .. } => Expr::Atom(Atom::Cmp {
            option: opt.name.clone(),
            op: CmpOp::Lt,
            value: *min,
        }),
        crate::varmodel::OptionKind::Boolean => {
            let atom = Expr::Atom(Atom::Eq {
                option: opt.name.clone(),
                value: Value::Bool(true),
            });
            Expr::And(Box::new(atom.clone()), Box::new(Expr::Not(Box::new(atom))))
        }
        crate::varmodel::OptionKind::Categorical { choices } => {
            let atom = Expr::Atom(Atom::Eq {
                option: opt.name.clone(),
                value: Value::Choice(choices[0].clone()),
            });
            Expr::And(Box::new(atom.clone()), Box::new(Expr::Not(Box::new(atom))))
        }
    }
}

/// One constraint per non-acceptable leaf: the negated path conjunction.
/// Requires the model only for the degenerate single-leaf case.
pub fn extract_constraints(
    tree: &DecisionTree,
    encoder: &Encoder,
    model: &VariabilityModel,
) -> Vec<Constraint> {
    fn walk(
        node: &TreeNode,
        encoder: &Encoder,
        model: &VariabilityModel,
        path: &mut Vec<Expr>,
        out: &mut Vec<Constraint>,
    ) {
        match node {
            TreeNode::Leaf {
                label: Label::Acceptable,
                ..
            } => {}
            TreeNode::Leaf {
                label: Label::NonAcceptable,
                ..
            } => {
                let expr = match conjoin(path.clone()) {
                    Some(conj) => Expr::Not(Box::new(conj)),
                    // The whole space is rejected: emit an unsatisfiable
                    // constraint instead of an empty conjunction.
                    None => contradiction(model),
                };
                out.push(Constraint::new(expr));
            }
            TreeNode::Split {
                slot,
                threshold,
                left,
                right,
            } => {
                path.push(edge_expr(encoder, *slot, *threshold, true));
                walk(left, encoder, model, path, out);
                path.pop();
                path.push(edge_expr(encoder, *slot, *threshold, false));
                walk(right, encoder, model, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(&tree.root, encoder, model, &mut Vec::new(), &mut out);
    out
}

/// Return a new model with `constraints` appended, after checking each one
/// is well-formed over the model's options.
pub fn inject_constraints(
    model: &VariabilityModel,
    constraints: &[Constraint],
) -> Result<VariabilityModel> {
    for c in constraints {
        c.check_against(&model.options)?;
    }
    let mut combined = model.constraints.clone();
    combined.extend(constraints.iter().cloned());
    VariabilityModel::new(model.options.clone(), combined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Kernel;
    use crate::encoding::build_encoder;
    use crate::varmodel::OptionDef;

    fn split_model() -> SvmModel {
        // g(x) = 2 x0 - 1: positive iff x0 >= 0.5
        SvmModel::new(Kernel::Linear, 2, vec![vec![1.0, 0.0]], vec![2.0], -1.0).unwrap()
    }

    fn two_numeric() -> VariabilityModel {
        VariabilityModel::new(
            vec![
                OptionDef::numeric("a", 0.0, 1.0),
                OptionDef::numeric("b", 0.0, 1.0),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn learns_an_axis_aligned_split() {
        let model = two_numeric();
        let encoder = build_encoder(&model);
        let tree = distill_tree(&split_model(), &encoder, &model, 400, 3, 11).unwrap();
        match &tree.root {
            TreeNode::Split { slot, threshold, .. } => {
                assert_eq!(*slot, 0);
                assert!((threshold - 0.5).abs() < 0.05, "threshold {threshold}");
            }
            other => panic!("expected a split at the root, got {other:?}"),
        }
        // hand-checked Gini: the perfect split has zero impurity, so the
        // children must be pure leaves
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn single_class_labeling_gives_a_single_leaf() {
        let model = two_numeric();
        let encoder = build_encoder(&model);
        // bias so large everything is acceptable
        let svm =
            SvmModel::new(Kernel::Linear, 2, vec![vec![1.0, 0.0]], vec![0.1], 5.0).unwrap();
        let tree = distill_tree(&svm, &encoder, &model, 100, 4, 1).unwrap();
        assert_eq!(
            tree.root,
            TreeNode::Leaf {
                label: Label::Acceptable,
                samples: 100
            }
        );
    }

    #[test]
    fn max_depth_zero_is_a_majority_leaf() {
        let model = two_numeric();
        let encoder = build_encoder(&model);
        let tree = distill_tree(&split_model(), &encoder, &model, 100, 0, 1).unwrap();
        assert!(matches!(tree.root, TreeNode::Leaf { .. }));
        assert!(distill_tree(&split_model(), &encoder, &model, 0, 4, 1).is_err());
    }

    #[test]
    fn gini_hand_computation() {
        // 4 positives of 10: gini = 2 * 0.4 * 0.6 = 0.48
        assert!((gini(4, 10) - 0.48).abs() < 1e-15);
        assert_eq!(gini(0, 10), 0.0);
        assert_eq!(gini(10, 10), 0.0);
    }

    #[test]
    fn extracts_negated_paths_with_denormalized_thresholds() {
        let model = VariabilityModel::new(
            vec![OptionDef::numeric("noise", 0.0, 10.0)],
            vec![],
        )
        .unwrap();
        let encoder = build_encoder(&model);
        let tree = DecisionTree {
            root: TreeNode::Split {
                slot: 0,
                threshold: 0.8,
                left: Box::new(TreeNode::Leaf {
                    label: Label::Acceptable,
                    samples: 10,
                }),
                right: Box::new(TreeNode::Leaf {
                    label: Label::NonAcceptable,
                    samples: 5,
                }),
            },
            dim: 1,
        };
        let constraints = extract_constraints(&tree, &encoder, &model);
        assert_eq!(constraints.len(), 1);
        assert_eq!(constraints[0].to_string(), "!(noise >= 8.0)");
    }

    #[test]
    fn two_atom_path_and_boolean_translation() {
        let model = VariabilityModel::new(
            vec![
                OptionDef::boolean("fog"),
                OptionDef::numeric("blur", 0.0, 1.0),
            ],
            vec![],
        )
        .unwrap();
        let encoder = build_encoder(&model);
        let tree = DecisionTree {
            root: TreeNode::Split {
                slot: 0,
                threshold: 0.5,
                left: Box::new(TreeNode::Leaf {
                    label: Label::Acceptable,
                    samples: 8,
                }),
                right: Box::new(TreeNode::Split {
                    slot: 1,
                    threshold: 0.6,
                    left: Box::new(TreeNode::Leaf {
                        label: Label::Acceptable,
                        samples: 4,
                    }),
                    right: Box::new(TreeNode::Leaf {
                        label: Label::NonAcceptable,
                        samples: 3,
                    }),
                }),
            },
            dim: 2,
        };
        let constraints = extract_constraints(&tree, &encoder, &model);
        assert_eq!(constraints.len(), 1);
        assert_eq!(
            constraints[0].to_string(),
            "!(fog == true && blur >= 0.6)"
        );
    }

    #[test]
    fn no_negative_leaves_means_no_constraints() {
        let model = two_numeric();
        let encoder = build_encoder(&model);
        let tree = DecisionTree {
            root: TreeNode::Leaf {
                label: Label::Acceptable,
                samples: 10,
            },
            dim: 2,
        };
        assert!(extract_constraints(&tree, &encoder, &model).is_empty());
    }

    #[test]
    fn all_rejecting_root_emits_a_contradiction() {
        let model = two_numeric();
        let encoder = build_encoder(&model);
        let tree = DecisionTree {
            root: TreeNode::Leaf {
                label: Label::NonAcceptable,
                samples: 10,
            },
            dim: 2,
        };
        let constraints = extract_constraints(&tree, &encoder, &model);
        assert_eq!(constraints.len(), 1);
        let injected = inject_constraints(&model, &constraints).unwrap();
        for c in model.sample_valid(20, 3).unwrap() {
            assert!(!injected.validate(&c).unwrap().valid);
        }
    }

    #[test]
    fn inject_appends_and_preserves_the_original() {
        let model = two_numeric();
        let c = crate::varmodel::parse_constraint("a < 0.5", &model.options).unwrap();
        let injected = inject_constraints(&model, &[c]).unwrap();
        assert_eq!(injected.constraints.len(), model.constraints.len() + 1);
        let unchanged = inject_constraints(&model, &[]).unwrap();
        assert_eq!(unchanged, model);
        // malformed constraint over this model
        let other = VariabilityModel::new(vec![OptionDef::boolean("z")], vec![]).unwrap();
        let bad = crate::varmodel::parse_constraint("z == true", &other.options).unwrap();
        assert!(inject_constraints(&model, &[bad]).is_err());
    }

    /// Routing through the tree and validating against the injected model
    /// must agree on every sampled configuration.
    #[test]
    fn soundness_of_extraction() {
        let model = VariabilityModel::new(
            vec![
                OptionDef::boolean("fog"),
                OptionDef::categorical("weather", ["sun", "rain", "fog3"]),
                OptionDef::numeric("noise", 0.0, 8.0),
            ],
            vec![],
        )
        .unwrap();
        let encoder = build_encoder(&model);
        // an arbitrary rbf classifier over this space
        let svm = SvmModel::new(
            Kernel::Rbf { gamma: 2.0 },
            encoder.dim(),
            vec![
                vec![1.0, 1.0, 0.0, 0.0, 0.9],
                vec![0.0, 0.0, 1.0, 0.0, 0.1],
            ],
            vec![1.4, -1.1],
            0.05,
        )
        .unwrap();
        let tree = distill_tree(&svm, &encoder, &model, 500, 3, 21).unwrap();
        let constraints = extract_constraints(&tree, &encoder, &model);
        let injected = inject_constraints(&model, &constraints).unwrap();
        let base = model.constraints.len();
        for c in model.sample_valid(500, 77).unwrap() {
            let x = encoder.encode(&c).unwrap();
            let rejected = tree.predict(x.coords()).unwrap() == Label::NonAcceptable;
            let report = injected.validate(&c).unwrap();
            let hit_injected = report.violations.iter().any(|&i| i >= base);
            assert_eq!(rejected, hit_injected, "config {c:?}");
        }
    }

    #[test]
    fn text_export_shape() {
        let model = two_numeric();
        let encoder = build_encoder(&model);
        let tree = DecisionTree {
            root: TreeNode::Split {
                slot: 1,
                threshold: 0.25,
                left: Box::new(TreeNode::Leaf {
                    label: Label::NonAcceptable,
                    samples: 2,
                }),
                right: Box::new(TreeNode::Leaf {
                    label: Label::Acceptable,
                    samples: 8,
                }),
            },
            dim: 2,
        };
        let text = tree.to_text(&encoder);
        assert_eq!(text, "b < 0.25\n  leaf -1 2\n  leaf 1 8\n");
    }
}
