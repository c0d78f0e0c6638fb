use crate::spatial_index::IndexError;
use crate::zorder::ZInterval;

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: u64,
    hi: u64,
    item: u32,
}

/// Static interval tree over Z-order intervals.
///
/// Wrapping intervals are split at the ring seam into two segments. Segments
/// are sorted by lower endpoint and laid out as an implicit balanced tree
/// (the middle element of every range is its root), each node carrying the
/// largest upper endpoint of its subtree.
#[derive(Debug, Clone)]
pub struct IntervalIndex<I> {
    items: Vec<(I, ZInterval)>,
    segments: Vec<Segment>,
    max_hi: Vec<u64>,
}

impl<I: Copy + Ord + std::fmt::Debug> IntervalIndex<I> {
    pub fn build(items: Vec<(I, ZInterval)>) -> Result<Self, IndexError> {
        let mut ids: Vec<I> = items.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(IndexError::DuplicateId(format!("{:?}", w[0])));
        }
        let mut segments: Vec<Segment> = items
            .iter()
            .enumerate()
            .flat_map(|(i, (_, iv))| {
                iv.segments().map(move |(lo, hi)| Segment {
                    lo,
                    hi,
                    item: i as u32,
                })
            })
            .collect();
        segments.sort_by_key(|s| (s.lo, s.hi, s.item));
        let mut max_hi = vec![0; segments.len()];
        fill_max(&segments, &mut max_hi, 0, segments.len());
        Ok(Self {
            items,
            segments,
            max_hi,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(I, ZInterval)] {
        &self.items
    }

    /// Ids of stored intervals intersecting any query interval, ascending and
    /// without duplicates. Query intervals must be sorted and pairwise
    /// disjoint; a wrapping interval counts as its two seam-split pieces.
    pub fn query_intervals(&self, q: &[ZInterval], comparisons: &mut u64) -> Result<Vec<I>, IndexError> {
        let pieces = seam_split_sorted(q)?;
        let mut hits = Vec::new();
        for (lo, hi) in pieces {
            self.visit(0, self.segments.len(), lo, hi, comparisons, &mut hits);
        }
        hits.sort_unstable();
        hits.dedup();
        let mut ids: Vec<I> = hits.into_iter().map(|i| self.items[i as usize].0).collect();
        ids.sort_unstable();
        Ok(ids)
    }

    fn visit(&self, lo: usize, hi: usize, qlo: u64, qhi: u64, comparisons: &mut u64, hits: &mut Vec<u32>) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        *comparisons += 1;
        if self.max_hi[mid] < qlo {
            return;
        }
        self.visit(lo, mid, qlo, qhi, comparisons, hits);
        let s = self.segments[mid];
        *comparisons += 1;
        if s.lo > qhi {
            return;
        }
        *comparisons += 1;
        if s.hi >= qlo {
            hits.push(s.item);
        }
        self.visit(mid + 1, hi, qlo, qhi, comparisons, hits);
    }
}

fn fill_max(segments: &[Segment], max_hi: &mut [u64], lo: usize, hi: usize) -> u64 {
    if lo >= hi {
        return 0;
    }
    let mid = lo + (hi - lo) / 2;
    let m = segments[mid]
        .hi
        .max(fill_max(segments, max_hi, lo, mid))
        .max(fill_max(segments, max_hi, mid + 1, hi));
    max_hi[mid] = m;
    m
}

fn seam_split_sorted(q: &[ZInterval]) -> Result<Vec<(u64, u64)>, IndexError> {
    let mut pieces: Vec<(u64, u64)> = Vec::with_capacity(q.len() + 1);
    let mut tail = None;
    for (i, iv) in q.iter().enumerate() {
        if iv.wraps() {
            // Only the last interval may wrap; its low piece sorts first.
            if i + 1 != q.len() {
                return Err(IndexError::UnsortedQuery);
            }
            let mut segs = iv.segments();
            tail = segs.next();
            pieces.insert(0, segs.next().expect("wrapping interval has two pieces"));
        } else {
            pieces.push((iv.lo().value(), iv.hi().value()));
        }
    }
    pieces.extend(tail);
    if pieces.windows(2).any(|w| w[0].1 >= w[1].0) {
        return Err(IndexError::UnsortedQuery);
    }
    Ok(pieces)
}
