use serde::Serialize;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// 0 for the root.
    pub level: usize,
    /// Documents whose path passes through this node (`m_i`).
    pub customers: usize,
    /// `b_{c,v}`, dense over the vocabulary.
    #[serde(skip)]
    pub word_counts: Vec<u32>,
    /// `s_c`.
    pub total: u32,
}

/// Arena-backed nCRP tree. Slot 0 is the root and is never pruned; freed
/// slots are reused.
#[derive(Debug, Clone, PartialEq)]
pub struct NcrpTree {
    nodes: Vec<Option<Node>>,
    free: Vec<NodeId>,
    words: usize,
    depth: usize,
}

impl NcrpTree {
    pub fn new(depth: usize, words: usize) -> Self {
        let root = Node {
            parent: None,
            children: Vec::new(),
            level: 0,
            customers: 0,
            word_counts: vec![0; words],
            total: 0,
        };
        Self {
            nodes: vec![Some(root)],
            free: Vec::new(),
            words,
            depth,
        }
    }

    pub const ROOT: NodeId = 0;

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn node(&self, id: NodeId) -> &Node {
        self.nodes[id].as_ref().expect("dangling node id")
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut Node {
        self.nodes[id].as_mut().expect("dangling node id")
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.get(id).is_some_and(Option::is_some)
    }

    /// Live node ids in increasing order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| n.as_ref().map(|_| i))
    }

    pub fn nodes_at_level(&self, level: usize) -> Vec<NodeId> {
        self.node_ids().filter(|&id| self.node(id).level == level).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn add_child(&mut self, parent: NodeId) -> NodeId {
        let level = self.node(parent).level + 1;
        assert!(level < self.depth, "cannot grow below the leaf level");
        let node = Node {
            parent: Some(parent),
            children: Vec::new(),
            level,
            customers: 0,
            word_counts: vec![0; self.words],
            total: 0,
        };
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id] = Some(node);
                id
            }
            None => {
                self.nodes.push(Some(node));
                self.nodes.len() - 1
            }
        };
        self.node_mut(parent).children.push(id);
        id
    }

    /// Seats a document on a root-to-leaf `path` with `words[l]` assigned
    /// to level `l`.
    pub fn add_document(&mut self, path: &[NodeId], words: &[Vec<(u32, u32)>]) {
        assert_eq!(path.len(), self.depth, "path must reach the leaf level");
        for (l, &id) in path.iter().enumerate() {
            let node = self.node_mut(id);
            node.customers += 1;
            for &(w, c) in words.get(l).map_or(&[][..], Vec::as_slice) {
                node.word_counts[w as usize] += c;
                node.total += c;
            }
        }
    }

    /// Root-to-node chain.
    pub fn ancestry(&self, mut id: NodeId) -> Vec<NodeId> {
        let mut chain = vec![id];
        while let Some(p) = self.node(id).parent {
            chain.push(p);
            id = p;
        }
        chain.reverse();
        chain
    }

    /// Removes nodes without customers along the path, bottom-up.
    pub(crate) fn prune_path(&mut self, path: &[NodeId]) {
        for &id in path.iter().rev() {
            if id == Self::ROOT || self.node(id).customers > 0 {
                continue;
            }
            debug_assert!(self.node(id).children.is_empty());
            debug_assert_eq!(self.node(id).total, 0);
            let parent = self.node(id).parent.expect("non-root node has a parent");
            self.node_mut(parent).children.retain(|&c| c != id);
            self.nodes[id] = None;
            self.free.push(id);
        }
    }

    /// Structural checks: links are symmetric, levels consistent, customer
    /// counts of children add up to their parent's, no empty non-root node.
    pub fn check_structure(&self) -> Result<(), String> {
        for id in self.node_ids() {
            let node = self.node(id);
            if id != Self::ROOT && node.customers == 0 {
                return Err(format!("node {id} has no customers"));
            }
            let sum: u32 = node.word_counts.iter().sum();
            if sum != node.total {
                return Err(format!("node {id}: Σ_v b != s"));
            }
            if !node.children.is_empty() {
                let kids: usize = node.children.iter().map(|&c| self.node(c).customers).sum();
                if kids != node.customers {
                    return Err(format!("node {id}: children hold {kids} of {} customers", node.customers));
                }
            } else if node.level + 1 != self.depth && node.customers > 0 {
                return Err(format!("internal node {id} has customers but no children"));
            }
            for &c in &node.children {
                let child = self.nodes.get(c).and_then(Option::as_ref);
                match child {
                    Some(ch) if ch.parent == Some(id) && ch.level == node.level + 1 => {}
                    _ => return Err(format!("broken link {id} -> {c}")),
                }
            }
        }
        Ok(())
    }
}
