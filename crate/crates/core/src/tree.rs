//! Rooted real trees with finitely many nodes, a mass measure made of
//! node atoms plus a constant density along each edge.
//!
//! Nodes are stored parent-before-child with the root at index 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind<T> {
    Root,
    Binary,
    /// Node of infinite degree in the limit, carrying the jump size `delta`.
    Infinite { delta: T },
    Leaf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node<T> {
    pub parent: Option<usize>,
    /// Length of the edge from the parent.
    pub length: T,
    pub kind: NodeKind<T>,
    /// Point mass at the node.
    pub atom: T,
    /// Mass per unit length along the edge from the parent.
    pub density: T,
}

impl<T: Real> Node<T> {
    pub fn root(kind: NodeKind<T>) -> Self {
        Node { parent: None, length: T::zero(), kind, atom: T::zero(), density: T::zero() }
    }

    pub fn child(parent: usize, length: T, kind: NodeKind<T>, density: T) -> Self {
        Node { parent: Some(parent), length, kind, atom: T::zero(), density }
    }
}

/// Where to attach a grafted tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttachPoint<T> {
    Node(usize),
    /// Point on the edge above `node`, at distance `offset` from its parent.
    Edge { node: usize, offset: T },
}

/// Component of `{x : d(root, x) > a}` together with its anchor in the original tree.
#[derive(Debug, Clone)]
pub struct SubtreeAbove<T> {
    /// Node whose edge crosses level `a`, or the node sitting exactly at `a`.
    pub anchor: usize,
    pub tree: FiniteTree<T>,
}

/// Compressed child lists.
#[derive(Debug, Clone)]
pub struct Children {
    start: Vec<usize>,
    list: Vec<usize>,
}

impl Children {
    pub fn of(&self, v: usize) -> &[usize] {
        &self.list[self.start[v]..self.start[v + 1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTree<T> {
    nodes: Vec<Node<T>>,
    scale: T,
    cap: Option<T>,
}

impl<T: Real> FiniteTree<T> {
    /// Validates and topologically sorts arbitrary nodes.
    ///
    /// Returns the tree and the new index of every input node.
    pub fn from_nodes(nodes: Vec<Node<T>>, scale: T) -> Result<(Self, Vec<usize>)> {
        let n = nodes.len();
        let mut root = None;
        for (i, v) in nodes.iter().enumerate() {
            match v.parent {
                None => {
                    if root.replace(i).is_some() {
                        return Err(Error::InvalidTree("more than one root".into()));
                    }
                }
                Some(p) if p >= n || p == i => {
                    return Err(Error::InvalidTree(format!("node {i} has invalid parent {p}")));
                }
                Some(_) => {}
            }
            if !(v.length >= T::zero() && v.length.is_finite()) {
                return Err(Error::InvalidTree(format!("node {i} has edge length {}", v.length)));
            }
            if !(v.atom >= T::zero() && v.density >= T::zero()) {
                return Err(Error::InvalidTree(format!("node {i} has negative mass")));
            }
        }
        let root = root.ok_or_else(|| Error::InvalidTree("no root".into()))?;
        let mut count = vec![0usize; n + 1];
        for v in &nodes {
            if let Some(p) = v.parent {
                count[p + 1] += 1;
            }
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut list = vec![0usize; n.saturating_sub(1)];
        for (i, v) in nodes.iter().enumerate() {
            if let Some(p) = v.parent {
                list[fill[p]] = i;
                fill[p] += 1;
            }
        }
        let mut order = Vec::with_capacity(n);
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            order.extend_from_slice(&list[count[v]..count[v + 1]]);
        }
        if order.len() != n {
            return Err(Error::InvalidTree("nodes unreachable from the root (cycle)".into()));
        }
        let mut new_id = vec![0usize; n];
        for (k, &v) in order.iter().enumerate() {
            new_id[v] = k;
        }
        let sorted = order
            .iter()
            .map(|&v| {
                let mut node = nodes[v];
                node.parent = node.parent.map(|p| new_id[p]);
                node
            })
            .collect();
        Ok((FiniteTree { nodes: sorted, scale, cap: None }, new_id))
    }

    /// Wraps nodes already in parent-before-child order.
    pub(crate) fn from_sorted(nodes: Vec<Node<T>>, scale: T, cap: Option<T>) -> Self {
        debug_assert!(nodes.iter().enumerate().all(|(i, v)| v.parent.map_or(i == 0, |p| p < i)));
        FiniteTree { nodes, scale, cap }
    }

    /// Single root node.
    pub fn trivial(kind: NodeKind<T>) -> Self {
        FiniteTree { nodes: vec![Node::root(kind)], scale: T::zero(), cap: None }
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node<T> {
        &self.nodes[i]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        let mut has_child = vec![false; self.nodes.len()];
        for v in &self.nodes {
            if let Some(p) = v.parent {
                has_child[p] = true;
            }
        }
        has_child.iter().skip(1).filter(|&&c| !c).count()
    }

    /// Discretisation scale, zero for exact trees.
    pub fn scale(&self) -> T {
        self.scale
    }

    /// Height at which sampling was truncated, if any.
    pub fn cap(&self) -> Option<T> {
        self.cap
    }

    pub fn set_cap(&mut self, cap: Option<T>) {
        self.cap = cap;
    }

    pub fn children(&self) -> Children {
        let n = self.nodes.len();
        let mut start = vec![0usize; n + 1];
        for v in &self.nodes {
            if let Some(p) = v.parent {
                start[p + 1] += 1;
            }
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut list = vec![0usize; n.saturating_sub(1)];
        for (i, v) in self.nodes.iter().enumerate() {
            if let Some(p) = v.parent {
                list[fill[p]] = i;
                fill[p] += 1;
            }
        }
        Children { start, list }
    }

    /// Distance of each node from the root.
    pub fn depths(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.nodes.len()];
        for i in 1..self.nodes.len() {
            let v = &self.nodes[i];
            d[i] = d[v.parent.unwrap_or(0)] + v.length;
        }
        d
    }

    pub fn height(&self) -> T {
        self.depths().into_iter().fold(T::zero(), T::max)
    }

    pub fn total_mass(&self) -> T {
        self.nodes.iter().map(|v| v.atom + v.density * v.length).sum()
    }

    /// Density of the mass measure on the level set at height `a > 0`.
    pub fn level_mass(&self, a: T) -> T {
        let d = self.depths();
        self.nodes
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(i, v)| d[*i] - v.length < a && a <= d[*i])
            .map(|(_, v)| v.density)
            .sum()
    }

    /// The subtree `{x : d(root, x) <= a}`, with the new index of each kept
    /// node. Edges crossing `a` end in a new leaf, indexed by the node above.
    pub fn restrict_below(&self, a: T) -> (Self, Vec<Option<usize>>) {
        let d = self.depths();
        let mut map = vec![None; self.nodes.len()];
        let mut out = Vec::new();
        for (i, v) in self.nodes.iter().enumerate() {
            let Some(p) = v.parent else {
                map[i] = Some(out.len());
                out.push(*v);
                continue;
            };
            let Some(np) = map[p] else { continue };
            if d[p] >= a {
                continue;
            }
            map[i] = Some(out.len());
            if d[i] <= a {
                out.push(Node { parent: Some(np), ..*v });
            } else {
                out.push(Node {
                    parent: Some(np),
                    length: a - d[p],
                    kind: NodeKind::Leaf,
                    atom: T::zero(),
                    density: v.density,
                });
            }
        }
        (FiniteTree { nodes: out, scale: self.scale, cap: self.cap }, map)
    }

    /// Components of `{x : d(root, x) > a}`, each rooted at its base point.
    pub fn subtrees_above(&self, a: T) -> Vec<SubtreeAbove<T>> {
        let d = self.depths();
        let ch = self.children();
        let mut out = Vec::new();
        for (i, v) in self.nodes.iter().enumerate().skip(1) {
            let p = v.parent.unwrap_or(0);
            if d[p] < a && a < d[i] {
                out.push(SubtreeAbove { anchor: i, tree: self.extract(i, d[i] - a, &ch) });
            } else if d[i] == a {
                for &c in ch.of(i) {
                    out.push(SubtreeAbove { anchor: i, tree: self.extract(c, self.nodes[c].length, &ch) });
                }
            }
        }
        out
    }

    /// Copies the subtree above node `top`, hanging below a new root at
    /// distance `stem` from `top`.
    fn extract(&self, top: usize, stem: T, ch: &Children) -> Self {
        let mut out = vec![Node::root(NodeKind::Root)];
        let mut stack = vec![(top, 0usize)];
        while let Some((v, parent)) = stack.pop() {
            let node = &self.nodes[v];
            let length = if v == top { stem } else { node.length };
            let id = out.len();
            out.push(Node { parent: Some(parent), length, ..*node });
            for &c in ch.of(v).iter().rev() {
                stack.push((c, id));
            }
        }
        let (tree, _) = Self::from_nodes(out, self.scale).expect("extracted subtree is valid");
        FiniteTree { cap: self.cap, ..tree }
    }

    /// Attaches each tree at its point. Tree roots merge into the attach
    /// point; a former leaf left with a single child and no atom is dissolved
    /// into the edge through it.
    pub fn graft(&self, grafts: Vec<(AttachPoint<T>, FiniteTree<T>)>) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        let n0 = nodes.len();
        let mut edge_points: Vec<(usize, T)> = grafts
            .iter()
            .filter_map(|(ap, _)| match *ap {
                AttachPoint::Edge { node, offset } => Some((node, offset)),
                AttachPoint::Node(_) => None,
            })
            .collect();
        for &(node, offset) in &edge_points {
            if node == 0 || node >= n0 {
                return Err(Error::InvalidTree(format!("no edge above node {node}")));
            }
            if !(offset >= T::zero() && offset <= nodes[node].length) {
                return Err(Error::InvalidTree(format!("offset {offset} outside edge above {node}")));
            }
        }
        edge_points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)));
        edge_points.dedup();
        // Split each edge at its attach offsets.
        let mut split_ids: Vec<((usize, T), usize)> = Vec::new();
        let mut k = 0;
        while k < edge_points.len() {
            let node = edge_points[k].0;
            let total = nodes[node].length;
            let mut parent = nodes[node].parent.unwrap_or(0);
            let mut used = T::zero();
            while k < edge_points.len() && edge_points[k].0 == node {
                let off = edge_points[k].1;
                let id = if off == T::zero() {
                    nodes[node].parent.unwrap_or(0)
                } else if off == total {
                    node
                } else {
                    let id = nodes.len();
                    nodes.push(Node {
                        parent: Some(parent),
                        length: off - used,
                        kind: NodeKind::Binary,
                        atom: T::zero(),
                        density: nodes[node].density,
                    });
                    parent = id;
                    used = off;
                    id
                };
                split_ids.push((edge_points[k], id));
                k += 1;
            }
            nodes[node].parent = Some(parent);
            nodes[node].length = total - used;
        }
        let was_leaf: Vec<bool> = {
            let mut has_child = vec![false; n0];
            for v in &self.nodes {
                if let Some(p) = v.parent {
                    has_child[p] = true;
                }
            }
            (0..n0).map(|i| i > 0 && !has_child[i]).collect()
        };
        let mut touched = Vec::new();
        for (ap, sub) in grafts {
            let at = match ap {
                AttachPoint::Node(v) => {
                    if v >= n0 {
                        return Err(Error::InvalidTree(format!("no node {v}")));
                    }
                    v
                }
                AttachPoint::Edge { node, offset } => split_ids
                    .iter()
                    .find(|(key, _)| *key == (node, offset))
                    .map(|&(_, id)| id)
                    .ok_or_else(|| Error::InvalidTree("lost attach point".into()))?,
            };
            let base = nodes.len();
            let sroot = sub.nodes[0];
            nodes[at].atom = nodes[at].atom + sroot.atom;
            match sroot.kind {
                NodeKind::Infinite { delta } => nodes[at].kind = NodeKind::Infinite { delta },
                _ => {
                    if nodes[at].kind == NodeKind::Leaf && sub.nodes.len() > 1 {
                        nodes[at].kind = NodeKind::Binary;
                    }
                }
            }
            for v in sub.nodes.iter().skip(1) {
                let p = v.parent.unwrap_or(0);
                let parent = if p == 0 { at } else { base + p - 1 };
                nodes.push(Node { parent: Some(parent), ..*v });
            }
            touched.push(at);
        }
        // Dissolve former leaves that now continue a single edge.
        let mut child_count = vec![0usize; nodes.len()];
        for v in &nodes {
            if let Some(p) = v.parent {
                child_count[p] += 1;
            }
        }
        let mut removed = vec![false; nodes.len()];
        for &at in &touched {
            if at < n0 && was_leaf[at] && !removed[at] && child_count[at] == 1 && nodes[at].atom == T::zero() {
                let c = (0..nodes.len()).find(|&c| nodes[c].parent == Some(at)).expect("one child");
                if nodes[c].density == nodes[at].density {
                    nodes[c].parent = nodes[at].parent;
                    nodes[c].length = nodes[c].length + nodes[at].length;
                    removed[at] = true;
                }
            }
        }
        let mut remap = vec![0usize; nodes.len()];
        let mut kept = Vec::with_capacity(nodes.len());
        for (i, v) in nodes.iter().enumerate() {
            if !removed[i] {
                remap[i] = kept.len();
                kept.push(*v);
            }
        }
        for v in &mut kept {
            v.parent = v.parent.map(|p| remap[p]);
        }
        let (tree, _) = Self::from_nodes(kept, self.scale)?;
        Ok(FiniteTree { cap: self.cap, ..tree })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TreeJson::from_tree(self)).expect("tree serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: TreeJson<T> =
            serde_json::from_str(s).map_err(|e| Error::InvalidTree(format!("bad tree json: {e}")))?;
        j.into_tree()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct TreeJson<T> {
    scale: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cap: Option<T>,
    nodes: Vec<NodeJson<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct NodeJson<T> {
    id: usize,
    parent: Option<usize>,
    len: T,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<T>,
    density: T,
}

impl<T: Real> TreeJson<T> {
    fn from_tree(t: &FiniteTree<T>) -> Self {
        let nodes = t
            .nodes
            .iter()
            .enumerate()
            .map(|(id, v)| {
                let (kind, delta) = match v.kind {
                    NodeKind::Root => ("root", None),
                    NodeKind::Binary => ("binary", None),
                    NodeKind::Infinite { delta } => ("infinite", Some(delta)),
                    NodeKind::Leaf => ("leaf", None),
                };
                NodeJson {
                    id,
                    parent: v.parent,
                    len: v.length,
                    kind: kind.to_string(),
                    delta,
                    mu: if v.atom > T::zero() { Some(v.atom) } else { None },
                    density: v.density,
                }
            })
            .collect();
        TreeJson { scale: t.scale, cap: t.cap, nodes }
    }

    fn into_tree(self) -> Result<FiniteTree<T>> {
        let n = self.nodes.len();
        let mut slot = vec![None; n];
        for (i, nj) in self.nodes.iter().enumerate() {
            if nj.id >= n || slot[nj.id].replace(i).is_some() {
                return Err(Error::InvalidTree(format!("node ids must be a permutation of 0..{n}")));
            }
        }
        let mut nodes = Vec::with_capacity(n);
        for i in slot.into_iter().map(|s| s.expect("filled")) {
            let nj = &self.nodes[i];
            let kind = match (nj.kind.as_str(), nj.delta) {
                ("root", _) => NodeKind::Root,
                ("binary", _) => NodeKind::Binary,
                ("infinite", Some(delta)) => NodeKind::Infinite { delta },
                ("leaf", _) => NodeKind::Leaf,
                (k, _) => return Err(Error::InvalidTree(format!("bad node kind {k:?}"))),
            };
            nodes.push(Node {
                parent: nj.parent,
                length: nj.len,
                kind,
                atom: nj.mu.unwrap_or(T::zero()),
                density: nj.density,
            });
        }
        let (tree, _) = FiniteTree::from_nodes(nodes, self.scale)?;
        Ok(FiniteTree { cap: self.cap, ..tree })
    }
}
