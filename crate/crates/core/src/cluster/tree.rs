use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{chebyshev, ClusterError, FeatureVector};
use crate::ingest::RawTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    /// Unweighted mean over all cross pairs of original points.
    Upgma,
    /// Mean of the two merged clusters' distances.
    Wpgma,
}

impl Linkage {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upgma" | "average" => Some(Linkage::Upgma),
            "wpgma" | "weighted" => Some(Linkage::Wpgma),
            _ => None,
        }
    }
}

/// One merge. Ids below the leaf count are leaves (in sorted label order);
/// id `n + i` is the cluster formed by merge `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub left_members: Vec<String>,
    pub right_members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub linkage: Linkage,
    /// Sorted leaf labels.
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
    /// Indices of merges lower than the merge before them.
    pub inversions: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Node {
    members: Vec<usize>,
    min_leaf: usize,
}

/// Agglomerates from singletons, always merging the closest pair of
/// clusters. Equal distances go to the pair whose smallest leaf labels
/// sort first. The result does not depend on input order.
pub fn agglomerate(vectors: &[FeatureVector], linkage: Linkage) -> Result<Dendrogram, ClusterError> {
    let n = vectors.len();
    if n < 2 {
        return Err(ClusterError::TooFewLeaves(n));
    }
    let mut sorted: Vec<&FeatureVector> = vectors.iter().collect();
    sorted.sort_by(|a, b| a.label.cmp(&b.label));
    if let Some(w) = sorted.windows(2).find(|w| w[0].label == w[1].label) {
        return Err(ClusterError::DuplicateLabel(w[0].label.clone()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let dists = pairs
        .par_iter()
        .map(|&(i, j)| chebyshev(sorted[i], sorted[j]))
        .collect::<Result<Vec<f64>, _>>()?;
    // UPGMA keeps cross-pair sums; WPGMA keeps the distance itself.
    let mut link: HashMap<(usize, usize), f64> = pairs.into_iter().zip(dists).collect();

    let mut nodes: Vec<Node> = (0..n).map(|i| Node { members: vec![i], min_leaf: i }).collect();
    let mut active: BTreeSet<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    let mut inversions = Vec::new();
    let value = |link: &HashMap<(usize, usize), f64>, nodes: &[Node], a: usize, b: usize| {
        let v = link[&(a.min(b), a.max(b))];
        match linkage {
            Linkage::Upgma => v / (nodes[a].members.len() * nodes[b].members.len()) as f64,
            Linkage::Wpgma => v,
        }
    };

    while active.len() > 1 {
        let ids: Vec<usize> = active.iter().copied().collect();
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                let d = value(&link, &nodes, a, b);
                let (la, lb) = (nodes[a].min_leaf, nodes[b].min_leaf);
                let key = (la.min(lb), la.max(lb));
                let better = match best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < bd || (d == bd && key < bkey),
                };
                if better {
                    best = Some((d, key, a, b));
                }
            }
        }
        let (height, _, a, b) = best.expect("at least one pair");
        let (left, right) = if nodes[a].min_leaf < nodes[b].min_leaf { (a, b) } else { (b, a) };
        let id = nodes.len();
        active.remove(&a);
        active.remove(&b);
        for &c in &active {
            let ac = link[&(a.min(c), a.max(c))];
            let bc = link[&(b.min(c), b.max(c))];
            let v = match linkage {
                Linkage::Upgma => ac + bc,
                Linkage::Wpgma => (ac + bc) / 2.0,
            };
            link.insert((c, id), v);
        }
        let mut members = nodes[left].members.clone();
        members.extend(&nodes[right].members);
        members.sort_unstable();
        let label = |ids: &[usize]| ids.iter().map(|&i| sorted[i].label.clone()).collect::<Vec<_>>();
        if merges.last().is_some_and(|m: &Merge| height < m.height) {
            inversions.push(merges.len());
        }
        merges.push(Merge {
            left,
            right,
            height,
            left_members: label(&nodes[left].members),
            right_members: label(&nodes[right].members),
        });
        nodes.push(Node {
            min_leaf: members[0],
            members,
        });
        active.insert(id);
    }
    Ok(Dendrogram {
        linkage,
        leaves: sorted.iter().map(|v| v.label.clone()).collect(),
        merges,
        inversions,
    })
}

impl Dendrogram {
    fn height_of(&self, id: usize) -> f64 {
        let n = self.leaves.len();
        if id < n {
            0.0
        } else {
            self.merges[id - n].height
        }
    }

    fn newick_node(&self, id: usize, parent_height: f64, out: &mut String) {
        let n = self.leaves.len();
        if id < n {
            out.push_str(&newick_label(&self.leaves[id]));
        } else {
            let m = &self.merges[id - n];
            out.push('(');
            self.newick_node(m.left, m.height, out);
            out.push(',');
            self.newick_node(m.right, m.height, out);
            out.push(')');
        }
        out.push_str(&format!(":{:.6}", parent_height - self.height_of(id)));
    }

    /// Newick text with branch lengths equal to height differences.
    pub fn to_newick(&self) -> String {
        let n = self.leaves.len();
        let root = 2 * n - 2;
        let m = &self.merges[root - n];
        let mut out = String::from("(");
        self.newick_node(m.left, m.height, &mut out);
        out.push(',');
        self.newick_node(m.right, m.height, &mut out);
        out.push_str(");\n");
        out
    }

    fn nested(&self, id: usize) -> Value {
        let n = self.leaves.len();
        if id < n {
            json!({ "label": self.leaves[id] })
        } else {
            let m = &self.merges[id - n];
            json!({
                "height": m.height,
                "size": m.left_members.len() + m.right_members.len(),
                "children": [self.nested(m.left), self.nested(m.right)],
            })
        }
    }

    /// Nested merges with heights, rooted at the last merge.
    pub fn to_nested_json(&self) -> Value {
        self.nested(2 * self.leaves.len() - 2)
    }
}

fn newick_label(s: &str) -> String {
    if s.chars().any(|c| "()[]':;,".contains(c) || c.is_whitespace()) {
        format!("'{}'", s.replace('\'', "''"))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub k: usize,
    /// Leaf label -> cluster number in 1..=k. Clusters are numbered in
    /// order of their smallest member label.
    pub assignment: BTreeMap<String, usize>,
}

impl Partition {
    pub fn clusters(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.k];
        for (leaf, c) in &self.assignment {
            out[c - 1].push(leaf.clone());
        }
        out
    }

    /// Same grouping regardless of cluster numbering.
    pub fn same_grouping(&self, groups: &[Vec<String>]) -> bool {
        let clusters = self.clusters();
        let mine: BTreeSet<BTreeSet<&str>> = clusters
            .iter()
            .map(|c| c.iter().map(String::as_str).collect())
            .collect();
        let theirs: BTreeSet<BTreeSet<&str>> = groups.iter().map(|c| c.iter().map(String::as_str).collect()).collect();
        mine == theirs
    }

    pub fn to_table(&self) -> RawTable {
        let mut t = RawTable::new(vec!["group".into(), "cluster".into()]);
        for (leaf, c) in &self.assignment {
            t.push(vec![leaf.clone(), c.to_string()]);
        }
        t
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Undoes the last k − 1 merges.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<Partition, ClusterError> {
    let n = dendrogram.leaves.len();
    if k < 1 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    for (i, m) in dendrogram.merges.iter().take(n - k).enumerate() {
        let id = n + i;
        let l = find(&mut parent, m.left);
        let r = find(&mut parent, m.right);
        parent[l] = id;
        parent[r] = id;
    }
    let mut first_leaf: BTreeMap<usize, usize> = BTreeMap::new();
    let roots: Vec<usize> = (0..n).map(|leaf| find(&mut parent, leaf)).collect();
    for (leaf, root) in roots.iter().enumerate() {
        first_leaf.entry(*root).or_insert(leaf);
    }
    let mut order: Vec<(usize, usize)> = first_leaf.into_iter().map(|(root, leaf)| (leaf, root)).collect();
    order.sort_unstable();
    let number: HashMap<usize, usize> = order.iter().enumerate().map(|(i, (_, root))| (*root, i + 1)).collect();
    Ok(Partition {
        k,
        assignment: roots
            .iter()
            .enumerate()
            .map(|(leaf, root)| (dendrogram.leaves[leaf].clone(), number[root]))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCell {
    pub a: usize,
    pub b: usize,
    pub count: usize,
    pub leaves: Vec<String>,
}

/// Contingency table of two partitions of the same leaves; every
/// (a, b) combination is present, including empty ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTab {
    pub a_k: usize,
    pub b_k: usize,
    pub cells: Vec<CrossCell>,
}

impl CrossTab {
    pub fn count(&self, a: usize, b: usize) -> usize {
        self.cells
            .iter()
            .find(|c| c.a == a && c.b == b)
            .map_or(0, |c| c.count)
    }

    pub fn total(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }

    /// Matrix CSV: one row per `a` cluster, one column per `b` cluster.
    pub fn to_table(&self) -> RawTable {
        let mut header = vec!["a_cluster".to_string()];
        header.extend((1..=self.b_k).map(|b| format!("b{b}")));
        let mut t = RawTable::new(header);
        for a in 1..=self.a_k {
            let mut row = vec![a.to_string()];
            row.extend((1..=self.b_k).map(|b| self.count(a, b).to_string()));
            t.push(row);
        }
        t
    }
}

pub fn cross_tab(a: &Partition, b: &Partition) -> Result<CrossTab, ClusterError> {
    if a.assignment.keys().ne(b.assignment.keys()) {
        return Err(ClusterError::LeafMismatch);
    }
    let mut cells = Vec::with_capacity(a.k * b.k);
    for ca in 1..=a.k {
        for cb in 1..=b.k {
            let leaves: Vec<String> = a
                .assignment
                .iter()
                .filter(|(leaf, x)| **x == ca && b.assignment[*leaf] == cb)
                .map(|(leaf, _)| leaf.clone())
                .collect();
            cells.push(CrossCell {
                a: ca,
                b: cb,
                count: leaves.len(),
                leaves,
            });
        }
    }
    Ok(CrossTab {
        a_k: a.k,
        b_k: b.k,
        cells,
    })
}
