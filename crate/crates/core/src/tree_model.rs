//! Lazily materialized periodic trees.
//!
//! A periodic tree is described by its children-count function `g`, which is
//! periodic in the height of a vertex. Every vertex has exactly one parent, so
//! a vertex at height `h` has graph degree `g(h mod k) + 1`.
//!
//! The bi-infinite tree is realized as a spine that grows downward from the
//! anchor root and subtrees that grow upward on demand. Vertex ids are arena
//! indices and stay stable for the lifetime of the arena.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Index of a vertex inside a [`TreeArena`].
pub type VertexId = u32;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("degree sequence is empty")]
    Empty,
    #[error("degree sequence entry {index} is {value}; every entry must be at least 1")]
    NonPositive { index: usize, value: i64 },
    #[error("cannot parse degree sequence {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("vertex cap of {cap} would be exceeded")]
    CapacityExceeded { cap: usize },
    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),
}

/// Children counts `g(0), ..., g(k-1)` of a period-`k` tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicDegreeSequence {
    degrees: Vec<u32>,
}

impl PeriodicDegreeSequence {
    pub fn new(degrees: Vec<u32>) -> Result<Self, TreeError> {
        if degrees.is_empty() {
            return Err(TreeError::Empty);
        }
        if let Some((index, &value)) = degrees.iter().enumerate().find(|(_, &d)| d == 0) {
            return Err(TreeError::NonPositive {
                index,
                value: value as i64,
            });
        }
        Ok(Self { degrees })
    }

    /// The homogeneous tree in which every vertex has `d` children.
    pub fn homogeneous(d: u32) -> Result<Self, TreeError> {
        Self::new(vec![d])
    }

    pub fn period(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Children count at `height`, using the non-negative residue of `height` mod k.
    pub fn degree_at(&self, height: i64) -> u32 {
        self.degrees[self.residue(height)]
    }

    pub fn residue(&self, height: i64) -> usize {
        height.rem_euclid(self.degrees.len() as i64) as usize
    }

    /// Geometric mean of the children counts, `(prod g(i))^(1/k)`.
    pub fn geometric_mean(&self) -> f64 {
        let log_sum: f64 = self.degrees.iter().map(|&d| (d as f64).ln()).sum();
        (log_sum / self.period() as f64).exp()
    }

    /// The sequence relabeled so that residue `shift` becomes residue 0.
    pub fn rotated(&self, shift: usize) -> Self {
        let mut degrees = self.degrees.clone();
        degrees.rotate_left(shift % self.period());
        Self { degrees }
    }
}

pub fn degree_at(seq: &PeriodicDegreeSequence, height: i64) -> u32 {
    seq.degree_at(height)
}

impl fmt::Display for PeriodicDegreeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.degrees.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for PeriodicDegreeSequence {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = |reason: String| TreeError::Parse {
            input: s.to_string(),
            reason,
        };
        let mut degrees = Vec::new();
        for (index, part) in s.split(',').enumerate() {
            let part = part.trim();
            let value: i64 = part
                .parse()
                .map_err(|e| parse_err(format!("entry {index} ({part:?}): {e}")))?;
            if value < 1 {
                return Err(TreeError::NonPositive { index, value });
            }
            let value =
                u32::try_from(value).map_err(|_| parse_err(format!("entry {index} too large")))?;
            degrees.push(value);
        }
        Self::new(degrees)
    }
}

impl Serialize for PeriodicDegreeSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.degrees.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PeriodicDegreeSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            List(Vec<u32>),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::List(degrees) => Self::new(degrees),
            Repr::Text(text) => text.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Children of a materialized vertex: an optional spine child followed by a
/// contiguous block of fresh ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Children {
    spine: Option<VertexId>,
    fresh: Range<VertexId>,
}

impl Children {
    pub fn len(&self) -> usize {
        self.spine.is_some() as usize + self.fresh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, index: usize) -> Option<VertexId> {
        match self.spine {
            Some(s) if index == 0 => Some(s),
            Some(_) => self.fresh.clone().nth(index - 1),
            None => self.fresh.clone().nth(index),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.spine.into_iter().chain(self.fresh.clone())
    }

    pub fn to_vec(&self) -> Vec<VertexId> {
        self.iter().collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    height: i32,
    parent: u32,
    spine_child: u32,
    first_fresh: u32,
    // NONE until the children have been materialized.
    fresh_count: u32,
}

/// Snapshot of a vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexRef {
    pub id: VertexId,
    pub height: i64,
    pub parent: Option<VertexId>,
    pub children: Option<Vec<VertexId>>,
}

/// The growable store of materialized vertices.
#[derive(Debug, Clone)]
pub struct TreeArena {
    seq: PeriodicDegreeSequence,
    root_residue: usize,
    slots: Vec<Slot>,
    spine_bottom: VertexId,
    max_vertices: usize,
}

impl TreeArena {
    /// A fresh arena holding only the root, at height 0 and residue `root_residue`.
    pub fn new(seq: PeriodicDegreeSequence, root_residue: usize, max_vertices: usize) -> Self {
        let root_residue = root_residue % seq.period();
        let mut slots = Vec::with_capacity(max_vertices.min(1 << 12));
        slots.push(Slot {
            height: 0,
            parent: NONE,
            spine_child: NONE,
            first_fresh: 0,
            fresh_count: NONE,
        });
        Self {
            seq,
            root_residue,
            slots,
            spine_bottom: 0,
            max_vertices: max_vertices.max(1),
        }
    }

    pub fn degree_seq(&self) -> &PeriodicDegreeSequence {
        &self.seq
    }

    pub fn root(&self) -> VertexId {
        0
    }

    pub fn root_residue(&self) -> usize {
        self.root_residue
    }

    pub fn spine_bottom(&self) -> VertexId {
        self.spine_bottom
    }

    pub fn max_vertices(&self) -> usize {
        self.max_vertices
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        (v as usize) < self.slots.len()
    }

    pub fn height(&self, v: VertexId) -> i64 {
        self.slots[v as usize].height as i64
    }

    pub fn residue(&self, v: VertexId) -> usize {
        self.seq.residue(self.height(v) + self.root_residue as i64)
    }

    /// Children count of `v`.
    pub fn children_count(&self, v: VertexId) -> u32 {
        self.seq.degrees()[self.residue(v)]
    }

    /// Graph degree of `v` (children plus parent).
    pub fn graph_degree(&self, v: VertexId) -> u32 {
        self.children_count(v) + 1
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        let p = self.slots[v as usize].parent;
        (p != NONE).then_some(p)
    }

    /// The child of `v` on the path to the anchor root, when `v` lies below it.
    pub fn spine_child(&self, v: VertexId) -> Option<VertexId> {
        let c = self.slots[v as usize].spine_child;
        (c != NONE).then_some(c)
    }

    pub fn children(&self, v: VertexId) -> Option<Children> {
        let slot = &self.slots[v as usize];
        if slot.fresh_count == NONE {
            return None;
        }
        Some(Children {
            spine: (slot.spine_child != NONE).then_some(slot.spine_child),
            fresh: slot.first_fresh..slot.first_fresh + slot.fresh_count,
        })
    }

    pub fn vertex(&self, v: VertexId) -> Result<VertexRef, TreeError> {
        if !self.contains(v) {
            return Err(TreeError::UnknownVertex(v));
        }
        Ok(VertexRef {
            id: v,
            height: self.height(v),
            parent: self.parent(v),
            children: self.children(v).map(|c| c.to_vec()),
        })
    }

    fn reserve(&self, extra: usize) -> Result<(), TreeError> {
        if self.slots.len() + extra > self.max_vertices {
            return Err(TreeError::CapacityExceeded {
                cap: self.max_vertices,
            });
        }
        Ok(())
    }

    /// Ensures `v` has all of its children. Idempotent.
    pub fn materialize_children(&mut self, v: VertexId) -> Result<Children, TreeError> {
        if !self.contains(v) {
            return Err(TreeError::UnknownVertex(v));
        }
        if let Some(children) = self.children(v) {
            return Ok(children);
        }
        let slot = self.slots[v as usize];
        let total = self.children_count(v);
        let fresh = total - (slot.spine_child != NONE) as u32;
        self.reserve(fresh as usize)?;
        let first = self.slots.len() as u32;
        let height = slot.height + 1;
        self.slots.extend((0..fresh).map(|_| Slot {
            height,
            parent: v,
            spine_child: NONE,
            first_fresh: 0,
            fresh_count: NONE,
        }));
        let slot = &mut self.slots[v as usize];
        slot.first_fresh = first;
        slot.fresh_count = fresh;
        Ok(self.children(v).expect("just materialized"))
    }

    /// Returns the parent of `v`, extending the spine one level down when `v`
    /// is the current spine bottom.
    pub fn materialize_parent(&mut self, v: VertexId) -> Result<VertexId, TreeError> {
        if !self.contains(v) {
            return Err(TreeError::UnknownVertex(v));
        }
        if let Some(p) = self.parent(v) {
            return Ok(p);
        }
        debug_assert_eq!(v, self.spine_bottom);
        self.reserve(1)?;
        let id = self.slots.len() as u32;
        self.slots.push(Slot {
            height: self.slots[v as usize].height - 1,
            parent: NONE,
            spine_child: v,
            first_fresh: 0,
            fresh_count: NONE,
        });
        self.slots[v as usize].parent = id;
        self.spine_bottom = id;
        Ok(id)
    }

    /// Neighbor through incident edge `slot`: 0 is the parent, `1..=g` the children.
    pub fn neighbor(&mut self, v: VertexId, slot: u32) -> Result<VertexId, TreeError> {
        if slot == 0 {
            self.materialize_parent(v)
        } else {
            let children = self.materialize_children(v)?;
            Ok(children
                .get(slot as usize - 1)
                .expect("edge slot within graph degree"))
        }
    }
}
