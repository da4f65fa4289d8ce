//! Filesystem-tree reconstruction from path sets.
//!
//! A [`WeightedTree`] is a rooted tree of directory segments where each node
//! counts how many inserted paths traverse it. With the weights ignored it
//! doubles as the reconstructed filesystem of a single target site
//! ([`SiteTree`]), which backs the offline simulation oracle. The weighted
//! wordlist tree is the training tree pruned to nodes whose segment appears
//! in a wordlist and whose ancestors survive the pruning.

use crate::url_model::{PathSeq, Segment};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

/// One directory node: a repetition counter plus children keyed by segment
/// name. Child names are unique under one parent by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TreeNode {
    pub weight: u64,
    children: BTreeMap<Segment, TreeNode>,
}

/// Rooted tree of directory segments with per-node repetition counters.
/// The root is the site base URL and carries an empty segment name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightedTree {
    root: TreeNode,
}

/// A reconstructed filesystem of one target web application: a
/// [`WeightedTree`] whose weights are irrelevant to membership queries.
pub type SiteTree = WeightedTree;

impl WeightedTree {
    pub fn new() -> Self {
        WeightedTree::default()
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Total number of inserted paths (including empty root paths).
    pub fn total_paths(&self) -> u64 {
        self.root.weight
    }

    /// Inserts one normalized path, creating missing nodes and incrementing
    /// the counter of every node on the path, root included.
    pub fn insert_path(&mut self, path: &PathSeq) {
        self.root.weight += 1;
        let mut node = &mut self.root;
        for segment in path {
            node = node.children.entry(segment.clone()).or_default();
            node.weight += 1;
        }
    }

    /// Number of nodes, root included.
    pub fn node_count(&self) -> usize {
        fn count(node: &TreeNode) -> usize {
            1 + node.children.values().map(count).sum::<usize>()
        }
        count(&self.root)
    }

    fn resolve(&self, path: &PathSeq) -> Option<&TreeNode> {
        let mut node = &self.root;
        for segment in path {
            node = node.children.get(segment)?;
        }
        Some(node)
    }

    /// True iff the path resolves to a node. The root is always present.
    pub fn contains(&self, path: &PathSeq) -> bool {
        self.resolve(path).is_some()
    }

    /// Child (segment, weight) pairs of the node at `path`, ordered weight
    /// descending with lexicographic tie-break. Empty if the path does not
    /// resolve or the node is a leaf.
    pub fn children_with_weights(&self, path: &PathSeq) -> Vec<(Segment, u64)> {
        let Some(node) = self.resolve(path) else {
            return Vec::new();
        };
        let mut pairs: Vec<(Segment, u64)> = node
            .children
            .iter()
            .map(|(seg, child)| (seg.clone(), child.weight))
            .collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        pairs
    }

    /// Sum of the weights of every segment named `word` anywhere in the
    /// tree. Used to order fallback wordlists by prior frequency.
    pub fn global_weight(&self, word: &Segment) -> u64 {
        fn walk(node: &TreeNode, word: &Segment, acc: &mut u64) {
            for (seg, child) in &node.children {
                if seg == word {
                    *acc += child.weight;
                }
                walk(child, word, acc);
            }
        }
        let mut acc = 0;
        walk(&self.root, word, &mut acc);
        acc
    }

    /// Visits every node as (path, weight), depth-first in child order.
    pub fn visit<F: FnMut(&PathSeq, u64)>(&self, mut f: F) {
        fn walk<F: FnMut(&PathSeq, u64)>(node: &TreeNode, path: &PathSeq, f: &mut F) {
            f(path, node.weight);
            for (seg, child) in &node.children {
                walk(child, &path.child(seg.clone()), f);
            }
        }
        walk(&self.root, &PathSeq::root(), &mut f);
    }
}

/// Merges every path of a training corpus into one weighted tree,
/// indistinctly of which site each path came from.
pub fn build_weighted_training_tree<'a, I>(corpus: I) -> WeightedTree
where
    I: IntoIterator<Item = &'a PathSeq>,
{
    let mut tree = WeightedTree::new();
    for path in corpus {
        tree.insert_path(path);
    }
    tree
}

/// Prunes a training tree down to nodes whose segment appears in the
/// wordlist and whose parent is retained (the root always is). Weights are
/// copied unchanged.
pub fn build_wordlist_tree<'a, W>(training: &WeightedTree, wordlist: W) -> WeightedTree
where
    W: IntoIterator<Item = &'a Segment>,
{
    let keep: HashSet<&Segment> = wordlist.into_iter().collect();
    fn prune(node: &TreeNode, keep: &HashSet<&Segment>) -> TreeNode {
        let children = node
            .children
            .iter()
            .filter(|(seg, _)| keep.contains(seg))
            .map(|(seg, child)| (seg.clone(), prune(child, keep)))
            .collect();
        TreeNode {
            weight: node.weight,
            children,
        }
    }
    WeightedTree {
        root: prune(&training.root, &keep),
    }
}

// Serialization mirror: nested {segment, weight, children:[...]} with
// children emitted in the deterministic (weight desc, lexicographic)
// order so equal trees serialize byte-identically.
#[derive(Serialize, Deserialize)]
struct NodeRepr {
    segment: String,
    weight: u64,
    children: Vec<NodeRepr>,
}

fn to_repr(segment: &str, node: &TreeNode) -> NodeRepr {
    let mut pairs: Vec<(&Segment, &TreeNode)> = node.children.iter().collect();
    pairs.sort_by(|a, b| b.1.weight.cmp(&a.1.weight).then_with(|| a.0.cmp(b.0)));
    NodeRepr {
        segment: segment.to_string(),
        weight: node.weight,
        children: pairs
            .into_iter()
            .map(|(seg, child)| to_repr(seg.as_str(), child))
            .collect(),
    }
}

fn from_repr(repr: NodeRepr) -> Result<TreeNode, crate::url_model::UrlError> {
    let mut children = BTreeMap::new();
    for child in repr.children {
        let seg = Segment::new(child.segment.clone())?;
        children.insert(seg, from_repr(child)?);
    }
    Ok(TreeNode {
        weight: repr.weight,
        children,
    })
}

impl Serialize for WeightedTree {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        to_repr("", &self.root).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WeightedTree {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = NodeRepr::deserialize(deserializer)?;
        if !repr.segment.is_empty() {
            return Err(serde::de::Error::custom("root segment must be empty"));
        }
        let root = from_repr(repr).map_err(serde::de::Error::custom)?;
        Ok(WeightedTree { root })
    }
}
