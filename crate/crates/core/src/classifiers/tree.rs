use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Routing table of a decision tree over configuration indices. Each interior
/// configuration maps its argmax output class to the next configuration;
/// configurations without an entry are leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeRouting {
    root: usize,
    node_map: BTreeMap<usize, Vec<usize>>,
    leaves: BTreeSet<usize>,
}

impl TreeRouting {
    /// Checks that the table is a tree rooted at `root`: no cycles, every
    /// non-root node has exactly one parent configuration, and every interior
    /// node is reachable from the root.
    pub fn new(root: usize, node_map: BTreeMap<usize, Vec<usize>>) -> Result<Self> {
        let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
        for (&node, children) in &node_map {
            if children.is_empty() {
                return Err(Error::InvalidRouting(format!("interior node {node} has no edges")));
            }
            for &child in children {
                if child == root {
                    return Err(Error::InvalidRouting(format!("edge {node} -> root {root}")));
                }
                if let Some(&p) = parent.get(&child) {
                    if p != node {
                        return Err(Error::InvalidRouting(format!(
                            "node {child} has two parents ({p} and {node})"
                        )));
                    }
                }
                parent.insert(child, node);
            }
        }

        // Walk from the root; with single parents a revisit means a cycle.
        let mut seen = BTreeSet::new();
        let mut leaves = BTreeSet::new();
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            if !seen.insert(node) {
                return Err(Error::InvalidRouting(format!("cycle through node {node}")));
            }
            match node_map.get(&node) {
                Some(children) => {
                    let unique: BTreeSet<usize> = children.iter().copied().collect();
                    stack.extend(unique);
                }
                None => {
                    leaves.insert(node);
                }
            }
        }
        if let Some(orphan) = node_map.keys().find(|n| !seen.contains(n)) {
            return Err(Error::InvalidRouting(format!(
                "interior node {orphan} is unreachable from root {root}"
            )));
        }
        Ok(TreeRouting {
            root,
            node_map,
            leaves,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaves(&self) -> &BTreeSet<usize> {
        &self.leaves
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        !self.node_map.contains_key(&node)
    }

    /// Next configuration after `node` produced `class`; `None` at a leaf.
    pub fn next(&self, node: usize, class: usize) -> Option<usize> {
        self.node_map.get(&node).map(|children| children[class])
    }

    /// Every referenced configuration must exist and every interior node needs
    /// an edge for each of the `classes` outputs.
    pub(crate) fn check_against(&self, count: usize, classes: usize) -> Result<()> {
        for &node in self.leaves.iter().chain(self.node_map.keys()) {
            if node >= count {
                return Err(Error::InvalidRouting(format!(
                    "node {node} is not one of the {count} configurations"
                )));
            }
        }
        for (node, children) in &self.node_map {
            if children.len() != classes {
                return Err(Error::InvalidRouting(format!(
                    "interior node {node} routes {} classes but produces {classes}",
                    children.len()
                )));
            }
        }
        Ok(())
    }
}
