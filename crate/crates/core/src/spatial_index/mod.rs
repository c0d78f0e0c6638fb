//! Range-query structures used by routers and originators.
//!
//! [`RangeTree`] answers rectangle queries over full-precision points.
//! [`IntervalIndex`] answers Z-interval intersection queries over clients that
//! only reported a prefix. Both are static snapshots; callers rebuild them.
//! Queries add their comparison counts to a caller-supplied counter.

mod interval_index;
mod range_tree;

use thiserror::Error;

pub use interval_index::IntervalIndex;
pub use range_tree::RangeTree;

use crate::zorder::GridPoint;

/// Identified points to index.
pub type PointSet<I> = Vec<(I, GridPoint)>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("query intervals must be sorted and disjoint")]
    UnsortedQuery,
}

pub fn build_range_tree<I: Copy + Ord + std::fmt::Debug>(points: PointSet<I>) -> Result<RangeTree<I>, IndexError> {
    RangeTree::build(points)
}

pub fn build_interval_index<I: Copy + Ord + std::fmt::Debug>(
    items: Vec<(I, crate::zorder::ZInterval)>,
) -> Result<IntervalIndex<I>, IndexError> {
    IntervalIndex::build(items)
}
