use crate::tree_model::{TreeArena, TreeError, VertexId};

use super::SimError;

/// What the event engine needs from a graph. Vertices are grouped into rate
/// classes of equal degree so that event selection costs one pass over the
/// classes.
pub trait Topology {
    fn root(&self) -> VertexId;
    fn class_count(&self) -> usize;
    fn class_of(&self, v: VertexId) -> usize;
    fn class_degree(&self, class: usize) -> u32;
    /// Endpoint of edge `slot` (in `0..degree`) at `v`, growing the graph if
    /// needed; `None` when the endpoint lies outside the simulated region.
    fn neighbor(&mut self, v: VertexId, slot: u32) -> Result<Option<VertexId>, TreeError>;
    fn vertex_count(&self) -> usize;
}

impl Topology for TreeArena {
    fn root(&self) -> VertexId {
        TreeArena::root(self)
    }

    fn class_count(&self) -> usize {
        self.degree_seq().period()
    }

    fn class_of(&self, v: VertexId) -> usize {
        self.residue(v)
    }

    fn class_degree(&self, class: usize) -> u32 {
        self.degree_seq().degrees()[class] + 1
    }

    fn neighbor(&mut self, v: VertexId, slot: u32) -> Result<Option<VertexId>, TreeError> {
        TreeArena::neighbor(self, v, slot).map(Some)
    }

    fn vertex_count(&self) -> usize {
        self.len()
    }
}

/// The periodic tree restricted to the ball of graph distance `radius`
/// around the root: edges leaving the ball are closed.
#[derive(Debug, Clone)]
pub struct BallTree {
    arena: TreeArena,
    distance: Vec<u32>,
    radius: u32,
}

impl BallTree {
    pub fn new(arena: TreeArena, radius: u32) -> Self {
        assert_eq!(arena.len(), 1, "ball trees start from a fresh arena");
        Self {
            arena,
            distance: vec![0],
            radius,
        }
    }

    pub fn arena(&self) -> &TreeArena {
        &self.arena
    }

    pub fn distance(&self, v: VertexId) -> u32 {
        self.distance[v as usize]
    }
}

impl Topology for BallTree {
    fn root(&self) -> VertexId {
        self.arena.root()
    }

    fn class_count(&self) -> usize {
        Topology::class_count(&self.arena)
    }

    fn class_of(&self, v: VertexId) -> usize {
        self.arena.residue(v)
    }

    fn class_degree(&self, class: usize) -> u32 {
        Topology::class_degree(&self.arena, class)
    }

    fn neighbor(&mut self, v: VertexId, slot: u32) -> Result<Option<VertexId>, TreeError> {
        if self.distance[v as usize] >= self.radius {
            // Only the edge back toward the root can stay inside: the parent,
            // or for vertices below the root the spine child in slot 1.
            let toward_root = match slot {
                0 => self.arena.parent(v),
                1 => self.arena.spine_child(v),
                _ => None,
            };
            return Ok(toward_root.filter(|&w| self.distance[w as usize] < self.distance[v as usize]));
        }
        // Every vertex created here is one step farther out than `v`: fresh
        // children of `v`, or the new spine vertex below it.
        let before = self.arena.len();
        let w = self.arena.neighbor(v, slot)?;
        let d = self.distance[v as usize] + 1;
        self.distance.resize(before, 0);
        self.distance.extend(std::iter::repeat_n(d, self.arena.len() - before));
        Ok(Some(w))
    }

    fn vertex_count(&self) -> usize {
        self.arena.len()
    }
}

/// A finite undirected simple graph given by adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitGraph {
    adjacency: Vec<Vec<VertexId>>,
    root: VertexId,
    class: Vec<usize>,
    class_degrees: Vec<u32>,
}

impl ExplicitGraph {
    pub fn new(adjacency: Vec<Vec<VertexId>>, root: VertexId) -> Result<Self, SimError> {
        let n = adjacency.len();
        let bad = |msg: String| Err(SimError::InvalidGraph(msg));
        if root as usize >= n {
            return bad(format!("root {root} outside 0..{n}"));
        }
        for (v, nbrs) in adjacency.iter().enumerate() {
            for (i, &w) in nbrs.iter().enumerate() {
                if w as usize >= n {
                    return bad(format!("edge {v}-{w} leaves the graph"));
                }
                if w as usize == v {
                    return bad(format!("self-loop at {v}"));
                }
                if nbrs[..i].contains(&w) {
                    return bad(format!("repeated edge {v}-{w}"));
                }
                if !adjacency[w as usize].contains(&(v as VertexId)) {
                    return bad(format!("edge {v}-{w} is not symmetric"));
                }
            }
        }
        let mut class_degrees: Vec<u32> = adjacency.iter().map(|a| a.len() as u32).collect();
        class_degrees.sort_unstable();
        class_degrees.dedup();
        let class = adjacency
            .iter()
            .map(|a| class_degrees.binary_search(&(a.len() as u32)).expect("degree listed"))
            .collect();
        Ok(Self {
            adjacency,
            root,
            class,
            class_degrees,
        })
    }

    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)], root: VertexId) -> Result<Self, SimError> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(SimError::InvalidGraph(format!("edge {u}-{v} leaves the graph")));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        Self::new(adjacency, root)
    }

    /// The ball of the given radius around the root of a tree arena, with the
    /// tree's root as vertex 0.
    pub fn from_tree_ball(arena: &mut TreeArena, radius: u32) -> Result<Self, SimError> {
        let cap_error = |e: TreeError| SimError::InvalidGraph(e.to_string());
        let root = arena.root();
        let mut index = std::collections::HashMap::from([(root, 0u32)]);
        let mut order = vec![root];
        let mut edges = Vec::new();
        let mut frontier = vec![root];
        for _ in 0..radius {
            let mut next = Vec::new();
            for &v in &frontier {
                for slot in 0..arena.graph_degree(v) {
                    let w = TreeArena::neighbor(arena, v, slot).map_err(cap_error)?;
                    if !index.contains_key(&w) {
                        index.insert(w, order.len() as u32);
                        order.push(w);
                        edges.push((index[&v], index[&w]));
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        Self::from_edges(order.len(), &edges, 0)
    }

    /// The finite rooted tree of the given depth: a residue-`root_residue`
    /// vertex with no parent, its children, their children, and so on.
    pub fn rooted_truncation(
        seq: &crate::tree_model::PeriodicDegreeSequence,
        root_residue: usize,
        depth: u32,
    ) -> Result<Self, SimError> {
        let mut edges = Vec::new();
        let mut count: VertexId = 1;
        let mut frontier = vec![0 as VertexId];
        for level in 0..depth {
            let kids = seq.degree_at(root_residue as i64 + level as i64);
            let mut next = Vec::new();
            for &v in &frontier {
                for _ in 0..kids {
                    edges.push((v, count));
                    next.push(count);
                    count += 1;
                }
            }
            frontier = next;
        }
        Self::from_edges(count as usize, &edges, 0)
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn adjacency(&self) -> &[Vec<VertexId>] {
        &self.adjacency
    }

    pub fn with_root(mut self, root: VertexId) -> Result<Self, SimError> {
        if root as usize >= self.len() {
            return Err(SimError::InvalidGraph(format!("root {root} outside 0..{}", self.len())));
        }
        self.root = root;
        Ok(self)
    }
}

impl Topology for ExplicitGraph {
    fn root(&self) -> VertexId {
        self.root
    }

    fn class_count(&self) -> usize {
        self.class_degrees.len()
    }

    fn class_of(&self, v: VertexId) -> usize {
        self.class[v as usize]
    }

    fn class_degree(&self, class: usize) -> u32 {
        self.class_degrees[class]
    }

    fn neighbor(&mut self, v: VertexId, slot: u32) -> Result<Option<VertexId>, TreeError> {
        self.adjacency
            .get(v as usize)
            .and_then(|a| a.get(slot as usize))
            .copied()
            .map(Some)
            .ok_or(TreeError::UnknownVertex(v))
    }

    fn vertex_count(&self) -> usize {
        self.len()
    }
}
