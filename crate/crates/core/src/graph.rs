//! Co-activation tuple graphs.
//!
//! Every frame's activity mask is rewritten as the set of neuron tuples that
//! fire together (singles, pairs or triplets). Graphs from several examples
//! are summed so that a tuple's count is the number of examples in which it
//! appears, and the strongest tuples are selected with a deterministic
//! tie-break.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::ActivityMask;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("pattern order must be 1, 2 or 3, got {0}")]
    InvalidOrder(usize),
    #[error("tuple indices must be strictly increasing")]
    UnsortedTuple,
    #[error("cannot sum an empty list of graphs")]
    NoGraphs,
    #[error("graphs have mixed pattern orders ({first} and {other})")]
    MixedOrders { first: usize, other: usize },
    #[error("graphs have mixed dimensions ({first} and {other})")]
    MixedDims { first: usize, other: usize },
    #[error("at least one connection must be requested")]
    ZeroRequested,
}

/// Arity of the co-activation patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum PatternOrder {
    Singles,
    #[default]
    Pairs,
    Triplets,
}

impl PatternOrder {
    pub const ALL: [PatternOrder; 3] = [PatternOrder::Singles, PatternOrder::Pairs, PatternOrder::Triplets];

    pub fn from_arity(arity: usize) -> Result<Self, GraphError> {
        match arity {
            1 => Ok(PatternOrder::Singles),
            2 => Ok(PatternOrder::Pairs),
            3 => Ok(PatternOrder::Triplets),
            other => Err(GraphError::InvalidOrder(other)),
        }
    }

    pub fn arity(self) -> usize {
        match self {
            PatternOrder::Singles => 1,
            PatternOrder::Pairs => 2,
            PatternOrder::Triplets => 3,
        }
    }
}

impl fmt::Display for PatternOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.arity())
    }
}

/// Strictly increasing neuron indices, one to three of them.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeuronTuple {
    len: u8,
    idx: [u32; 3],
}

impl NeuronTuple {
    pub fn new(indices: &[u32]) -> Result<Self, GraphError> {
        if indices.is_empty() || indices.len() > 3 {
            return Err(GraphError::InvalidOrder(indices.len()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GraphError::UnsortedTuple);
        }
        let mut idx = [0u32; 3];
        idx[..indices.len()].copy_from_slice(indices);
        Ok(Self { len: indices.len() as u8, idx })
    }

    /// Caller guarantees `indices` is strictly increasing with length 1..=3.
    fn from_sorted(indices: &[u32]) -> Self {
        let mut idx = [0u32; 3];
        idx[..indices.len()].copy_from_slice(indices);
        Self { len: indices.len() as u8, idx }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.idx[..self.len as usize]
    }

    pub fn arity(&self) -> usize {
        self.len as usize
    }

    pub fn max_index(&self) -> u32 {
        self.as_slice()[self.len as usize - 1]
    }
}

impl Ord for NeuronTuple {
    fn cmp(&self, other: &Self) -> Ordering {
        self.as_slice().cmp(other.as_slice())
    }
}

impl PartialOrd for NeuronTuple {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for NeuronTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("NeuronTuple").field(&self.as_slice()).finish()
    }
}

impl fmt::Display for NeuronTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, n) in self.as_slice().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str(")")
    }
}

/// Calls `visit` with every `arity`-combination of the sorted `active` slice,
/// in lexicographic order.
pub(crate) fn for_each_combination<F>(active: &[u32], arity: usize, mut visit: F)
where
    F: FnMut(&[u32]),
{
    let m = active.len();
    if arity == 0 || m < arity {
        return;
    }
    let mut pos: [usize; 3] = [0, 1, 2];
    let mut buf = [0u32; 3];
    loop {
        for (slot, &p) in buf.iter_mut().zip(&pos[..arity]) {
            *slot = active[p];
        }
        visit(&buf[..arity]);
        // Advance the rightmost position that still has room.
        let mut i = arity;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if pos[i] < m - arity + i {
                pos[i] += 1;
                for j in i + 1..arity {
                    pos[j] = pos[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Tuple counts of one pattern order over a `dim`-neuron encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoactivationGraph {
    order: PatternOrder,
    dim: usize,
    counts: BTreeMap<NeuronTuple, u64>,
}

impl CoactivationGraph {
    pub fn empty(order: PatternOrder, dim: usize) -> Self {
        Self { order, dim, counts: BTreeMap::new() }
    }

    /// Adds one to the count of every tuple active in `mask`.
    ///
    /// The mask's dimension is expected to match the graph's.
    pub fn add_mask(&mut self, mask: &ActivityMask) {
        debug_assert_eq!(mask.dim(), self.dim);
        for_each_combination(mask.indices(), self.order.arity(), |t| {
            *self.counts.entry(NeuronTuple::from_sorted(t)).or_insert(0) += 1;
        });
    }

    pub fn order(&self) -> PatternOrder {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, tuple: &NeuronTuple) -> u64 {
        self.counts.get(tuple).copied().unwrap_or(0)
    }

    /// Tuples in ascending lexicographic order with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (&NeuronTuple, u64)> + '_ {
        self.counts.iter().map(|(t, &c)| (t, c))
    }
}

/// All `order`-combinations of the active neurons, each with count 1.
pub fn tuples_from_mask(mask: &ActivityMask, order: PatternOrder) -> CoactivationGraph {
    let mut graph = CoactivationGraph::empty(order, mask.dim());
    graph.add_mask(mask);
    graph
}

/// Element-wise sum of tuple counts.
pub fn sum_graphs<'a, I>(graphs: I) -> Result<CoactivationGraph, GraphError>
where
    I: IntoIterator<Item = &'a CoactivationGraph>,
{
    let mut iter = graphs.into_iter();
    let first = iter.next().ok_or(GraphError::NoGraphs)?;
    let mut total = first.clone();
    for g in iter {
        if g.order != total.order {
            return Err(GraphError::MixedOrders { first: total.order.arity(), other: g.order.arity() });
        }
        if g.dim != total.dim {
            return Err(GraphError::MixedDims { first: total.dim, other: g.dim });
        }
        for (t, &c) in &g.counts {
            *total.counts.entry(*t).or_insert(0) += c;
        }
    }
    Ok(total)
}

/// Strongest connections of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopConnections {
    pub entries: Vec<(NeuronTuple, u64)>,
    pub requested: usize,
}

impl TopConnections {
    /// Set when the graph held fewer tuples than requested.
    pub fn is_short(&self) -> bool {
        self.entries.len() < self.requested
    }
}

/// The `n` highest-count tuples, ordered by count descending and then by
/// tuple indices ascending.
pub fn top_n(graph: &CoactivationGraph, n: usize) -> Result<TopConnections, GraphError> {
    if n == 0 {
        return Err(GraphError::ZeroRequested);
    }
    let mut entries: Vec<(NeuronTuple, u64)> = graph.counts.iter().map(|(t, &c)| (*t, c)).collect();
    // Map iteration is already tuple-ascending, so a stable sort on count keeps the tie-break.
    entries.sort_by_key(|e| core::cmp::Reverse(e.1));
    entries.truncate(n);
    Ok(TopConnections { entries, requested: n })
}
