use crate::spatial_index::{IndexError, PointSet};
use crate::zorder::{GridPoint, Rect};

/// One element of a node's y-sorted list.
///
/// `left` / `right` are the cascade pointers: the position, inside the left
/// (right) child's list, of the first element whose y is at least `y`.
#[derive(Debug, Clone, Copy, Default)]
struct Entry {
    y: u32,
    item: u32,
    left: u32,
    right: u32,
}

/// Static two-dimensional layered range tree.
///
/// The primary tree is a balanced split over the points sorted by x. Every
/// node keeps its points sorted by y, and each entry links into both child
/// lists, so one binary search on y at the root is enough for the whole
/// query: reporting costs `O(log n + k)` comparisons.
///
/// Node lists are stored per depth: the node covering sorted positions
/// `lo..hi` at depth `d` owns `levels[d][lo..hi]`.
#[derive(Debug, Clone)]
pub struct RangeTree<I> {
    points: Vec<(I, GridPoint)>,
    xs: Vec<u32>,
    levels: Vec<Vec<Entry>>,
}

impl<I: Copy + Ord + std::fmt::Debug> RangeTree<I> {
    pub fn build(points: PointSet<I>) -> Result<Self, IndexError> {
        let mut ids: Vec<I> = points.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(IndexError::DuplicateId(format!("{:?}", w[0])));
        }
        let mut points = points;
        points.sort_by_key(|(id, p)| (p.x, p.y, *id));
        let xs = points.iter().map(|(_, p)| p.x).collect();
        let mut tree = RangeTree {
            points,
            xs,
            levels: Vec::new(),
        };
        let n = tree.points.len();
        if n > 0 {
            tree.build_node(0, 0, n);
        }
        Ok(tree)
    }

    fn build_node(&mut self, depth: usize, lo: usize, hi: usize) {
        let n = self.points.len();
        if self.levels.len() <= depth {
            self.levels.push(vec![Entry::default(); n]);
        }
        if hi - lo == 1 {
            self.levels[depth][lo] = Entry {
                y: self.points[lo].1.y,
                item: lo as u32,
                ..Entry::default()
            };
            return;
        }
        let mid = lo + (hi - lo) / 2;
        self.build_node(depth + 1, lo, mid);
        self.build_node(depth + 1, mid, hi);

        let (upper, lower) = self.levels.split_at_mut(depth + 1);
        let parent = &mut upper[depth][lo..hi];
        let left = &lower[0][lo..mid];
        let right = &lower[0][mid..hi];

        let (mut i, mut j) = (0, 0);
        for slot in parent.iter_mut() {
            let take_left = j == right.len() || (i < left.len() && left[i].y <= right[j].y);
            *slot = if take_left {
                i += 1;
                left[i - 1]
            } else {
                j += 1;
                right[j - 1]
            };
        }
        let (mut li, mut ri) = (0, 0);
        for slot in parent.iter_mut() {
            while li < left.len() && left[li].y < slot.y {
                li += 1;
            }
            while ri < right.len() && right[ri].y < slot.y {
                ri += 1;
            }
            slot.left = li as u32;
            slot.right = ri as u32;
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(I, GridPoint)] {
        &self.points
    }

    /// Ids of all points inside `r` (inclusive bounds). Every key comparison
    /// and node visit is added to `comparisons`.
    pub fn query_rect(&self, r: &Rect, comparisons: &mut u64) -> Vec<I> {
        let mut out = Vec::new();
        self.query_into(r, comparisons, &mut out);
        out
    }

    pub fn query_into(&self, r: &Rect, comparisons: &mut u64, out: &mut Vec<I>) {
        let n = self.points.len();
        if n == 0 {
            return;
        }
        let a = counted_partition(&self.xs, |x| x < r.x_min, comparisons);
        let b = counted_partition(&self.xs, |x| x <= r.x_max, comparisons);
        if a >= b {
            return;
        }
        let p = counted_partition_by(&self.levels[0][..n], |e| e.y < r.y_min, comparisons);
        let mut q = Query {
            tree: self,
            a,
            b,
            y_max: r.y_max,
            comparisons,
            out,
        };
        q.visit(0, 0, n, p);
    }
}

struct Query<'a, I> {
    tree: &'a RangeTree<I>,
    a: usize,
    b: usize,
    y_max: u32,
    comparisons: &'a mut u64,
    out: &'a mut Vec<I>,
}

impl<I: Copy> Query<'_, I> {
    fn visit(&mut self, depth: usize, lo: usize, hi: usize, pos: usize) {
        *self.comparisons += 1;
        if hi <= self.a || self.b <= lo {
            return;
        }
        let list = &self.tree.levels[depth][lo..hi];
        if self.a <= lo && hi <= self.b {
            for e in &list[pos..] {
                *self.comparisons += 1;
                if e.y > self.y_max {
                    return;
                }
                self.out.push(self.tree.points[e.item as usize].0);
            }
            return;
        }
        // Leaves are always fully inside or outside the index range.
        let mid = lo + (hi - lo) / 2;
        let (lpos, rpos) = match list.get(pos) {
            Some(e) => (e.left as usize, e.right as usize),
            None => (mid - lo, hi - mid),
        };
        self.visit(depth + 1, lo, mid, lpos);
        self.visit(depth + 1, mid, hi, rpos);
    }
}

fn counted_partition(xs: &[u32], pred: impl Fn(u32) -> bool, comparisons: &mut u64) -> usize {
    counted_partition_by(xs, |x| pred(*x), comparisons)
}

/// `partition_point` that counts predicate evaluations.
fn counted_partition_by<T>(s: &[T], pred: impl Fn(&T) -> bool, comparisons: &mut u64) -> usize {
    let (mut lo, mut hi) = (0, s.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        *comparisons += 1;
        if pred(&s[mid]) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}
