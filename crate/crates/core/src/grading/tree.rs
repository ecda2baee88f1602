//! Per-question CART regression trees over scoring vectors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Direction, PathStep};
use crate::jsonl::{self, FORMAT_VERSION};
use crate::{float9, Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or cannot be split; written as
    /// `"unbounded"`.
    #[serde(with = "depth")]
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

mod depth {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    const UNBOUNDED: &str = "unbounded";

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Depth(usize),
        Word(String),
        Null(()),
    }

    pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(d) => s.serialize_u64(*d as u64),
            None => s.serialize_str(UNBOUNDED),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Depth(n) => Ok(Some(n)),
            Repr::Word(w) if w == UNBOUNDED => Ok(None),
            Repr::Null(()) => Ok(None),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "max_depth must be a depth or {UNBOUNDED:?}, found {w:?}"
            ))),
        }
    }
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: Some(3),
            min_samples_leaf: 1,
        }
    }
}

impl TreeParams {
    pub fn unbounded() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::Validation("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar", rename_all = "lowercase")]
pub enum Node<F> {
    Split {
        feature_index: usize,
        #[serde(with = "float9::full")]
        split_threshold: F,
        left: usize,
        right: usize,
    },
    Leaf {
        #[serde(with = "float9::full")]
        prediction: F,
        n_train: usize,
    },
}

/// Nodes in pre-order; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct DecisionTreeModel<F> {
    pub format_version: String,
    pub question_id: String,
    pub num_features: usize,
    pub params: TreeParams,
    pub nodes: Vec<Node<F>>,
}

impl<F: Scalar> DecisionTreeModel<F> {
    pub fn depth(&self) -> usize {
        fn go<F>(nodes: &[Node<F>], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Validation(format!("tree {}: no nodes", self.question_id)));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match *n {
                Node::Split {
                    feature_index,
                    left,
                    right,
                    ..
                } => {
                    if feature_index >= self.num_features {
                        return Err(Error::Validation(format!(
                            "tree {}: node {i} splits on feature {feature_index} of {}",
                            self.question_id, self.num_features
                        )));
                    }
                    if left <= i || right <= i || left >= self.nodes.len() || right >= self.nodes.len() {
                        return Err(Error::Validation(format!(
                            "tree {}: node {i} has invalid children",
                            self.question_id
                        )));
                    }
                }
                Node::Leaf { prediction, .. } => {
                    if !(prediction >= F::zero() && prediction <= F::one()) {
                        return Err(Error::Validation(format!(
                            "tree {}: leaf {i} predicts {prediction}",
                            self.question_id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

struct Builder<'a, F> {
    x: &'a [&'a [F]],
    y: &'a [F],
    params: TreeParams,
    nodes: Vec<Node<F>>,
}

fn sse<F: Scalar>(y: &[F], idx: impl Iterator<Item = usize> + Clone) -> F {
    let (sum, n) = idx.clone().fold((F::zero(), 0usize), |(s, n), i| (s + y[i], n + 1));
    let mean = sum / F::from_count(n);
    idx.map(|i| (y[i] - mean) * (y[i] - mean)).sum()
}

impl<'a, F: Scalar> Builder<'a, F> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let sum: F = idx.iter().map(|&i| self.y[i]).sum();
        self.nodes.push(Node::Leaf {
            prediction: (sum / F::from_count(idx.len())).clamp01(),
            n_train: idx.len(),
        });
        self.nodes.len() - 1
    }

    /// Lowest-SSE split; ties keep the earlier (feature, threshold).
    fn best_split(&self, idx: &[usize]) -> Option<(usize, F)> {
        let min_leaf = self.params.min_samples_leaf;
        let num_features = self.x[idx[0]].len();
        let mut best: Option<(F, usize, F)> = None;
        for f in 0..num_features {
            let mut values: Vec<F> = idx.iter().map(|&i| self.x[i][f]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
            values.dedup();
            for w in values.windows(2) {
                let threshold = (w[0] + w[1]) / F::lit(2.0);
                let left = idx.iter().copied().filter(|&i| self.x[i][f] <= threshold);
                let right = idx.iter().copied().filter(|&i| self.x[i][f] > threshold);
                let (nl, nr) = (left.clone().count(), right.clone().count());
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let cost = sse(self.y, left) + sse(self.y, right);
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let first = self.y[idx[0]];
        let pure = idx.iter().all(|&i| self.y[i] == first);
        let at_limit = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || at_limit || idx.len() < 2 * self.params.min_samples_leaf {
            return self.leaf(&idx);
        }
        let Some((feature_index, split_threshold)) = self.best_split(&idx) else {
            return self.leaf(&idx);
        };
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            prediction: F::zero(),
            n_train: 0,
        });
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature_index] <= split_threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature_index,
            split_threshold,
            left,
            right,
        };
        slot
    }
}

/// Fits a regression tree minimizing the summed squared error of the two
/// children; candidate thresholds are midpoints of consecutive distinct
/// feature values.
pub fn tree_fit<F: Scalar, V: AsRef<[F]>>(
    question_id: &str,
    vectors: &[V],
    scores: &[F],
    params: &TreeParams,
) -> Result<DecisionTreeModel<F>> {
    params.validate()?;
    if vectors.is_empty() {
        return Err(Error::Empty("tree_fit needs at least one training sample"));
    }
    if vectors.len() != scores.len() {
        return Err(Error::Dimension {
            expected: vectors.len(),
            found: scores.len(),
        });
    }
    let x: Vec<&[F]> = vectors.iter().map(AsRef::as_ref).collect();
    let num_features = x[0].len();
    if let Some(bad) = x.iter().find(|v| v.len() != num_features) {
        return Err(Error::Dimension {
            expected: num_features,
            found: bad.len(),
        });
    }
    if x.iter().flat_map(|v| v.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("tree {question_id}: non-finite feature value")));
    }
    if let Some(s) = scores.iter().find(|s| !(**s >= F::zero() && **s <= F::one())) {
        return Err(Error::Validation(format!("tree {question_id}: score {s} outside [0,1]")));
    }
    let mut b = Builder {
        x: &x,
        y: scores,
        params: *params,
        nodes: Vec::new(),
    };
    b.grow((0..x.len()).collect(), 0);
    Ok(DecisionTreeModel {
        format_version: FORMAT_VERSION.to_string(),
        question_id: question_id.to_string(),
        num_features,
        params: *params,
        nodes: b.nodes,
    })
}

/// Prediction plus the root-to-leaf route (left when value ≤ threshold).
pub fn tree_path<F: Scalar>(model: &DecisionTreeModel<F>, values: &[F]) -> Result<(F, Vec<PathStep<F>>)> {
    if values.len() != model.num_features {
        return Err(Error::Dimension {
            expected: model.num_features,
            found: values.len(),
        });
    }
    let mut path = Vec::new();
    let mut i = 0;
    loop {
        match model.nodes[i] {
            Node::Leaf { prediction, .. } => return Ok((prediction, path)),
            Node::Split {
                feature_index,
                split_threshold,
                left,
                right,
            } => {
                let direction = if values[feature_index] <= split_threshold {
                    Direction::Left
                } else {
                    Direction::Right
                };
                path.push(PathStep {
                    feature_index,
                    threshold: split_threshold,
                    direction,
                });
                i = if direction == Direction::Left { left } else { right };
            }
        }
    }
}

pub fn tree_predict<F: Scalar>(model: &DecisionTreeModel<F>, values: &[F]) -> Result<F> {
    tree_path(model, values).map(|(p, _)| p)
}

pub fn model_to_json<F: Scalar>(model: &DecisionTreeModel<F>) -> Result<String> {
    serde_json::to_string(model).map_err(|e| Error::Validation(format!("cannot serialize tree: {e}")))
}

pub fn model_from_json<F: Scalar>(text: &str) -> Result<DecisionTreeModel<F>> {
    let m: DecisionTreeModel<F> =
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("malformed tree model: {e}")))?;
    m.validate()?;
    Ok(m)
}

/// One model document per line.
pub fn write_models<F: Scalar>(models: &[DecisionTreeModel<F>], path: &Path) -> Result<()> {
    jsonl::write_atomic(path, jsonl::to_lines(models)?.as_bytes())
}

pub fn load_models<F: Scalar>(path: &Path) -> Result<Vec<DecisionTreeModel<F>>> {
    jsonl::read_records::<DecisionTreeModel<F>>(path)?
        .into_iter()
        .map(|(_, m)| {
            jsonl::check_version(path, &m.format_version)?;
            m.validate()?;
            Ok(m)
        })
        .collect()
}
