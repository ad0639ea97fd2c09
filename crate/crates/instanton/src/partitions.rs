//! Exact combinatorics of integer partitions, Young diagrams, and r-tuples.
//!
//! Partitions are weakly decreasing sequences of positive integers drawn in
//! English convention: row x (1-based, top to bottom) has Y(x) boxes, box
//! (x,y) sits in row x, column y. For a box s = (x,y) — inside the diagram
//! or not — the arm and leg lengths are
//!
//!   a_Y(s) = Y(x) - y,      l_Y(s) = Y^T(y) - x,
//!
//! where Y^T is the transposed diagram and Y(x) = 0 for x > l(Y). Both may
//! be negative outside the diagram. The hook length of a box inside Y is
//! a_Y(s) + l_Y(s) + 1.
//!
//! Every fixed-point formula in this crate is a sum over r-tuples of
//! partitions of prescribed total size; the enumeration order fixed here
//! (lexicographic descending per component, sizes of earlier components
//! descending first) makes all those sums bit-reproducible.

use crate::{Error, Result};

/// An integer partition Y = (Y(1) >= Y(2) >= ... >= Y(l) >= 1), possibly
/// empty. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    /// Builds a partition from its row lengths.
    ///
    /// Panics if the sequence is not weakly decreasing or contains a zero;
    /// constructing an invalid partition is a programming error, not a
    /// runtime condition.
    pub fn new(parts: impl Into<Vec<u32>>) -> Self {
        let parts = parts.into();
        for i in 0..parts.len() {
            assert!(parts[i] >= 1, "partition parts must be positive");
            if i + 1 < parts.len() {
                assert!(
                    parts[i] >= parts[i + 1],
                    "partition parts must be weakly decreasing"
                );
            }
        }
        Partition { parts }
    }

    /// The empty partition (no rows).
    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    /// Row lengths, weakly decreasing.
    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// Number of boxes |Y|.
    pub fn size(&self) -> u64 {
        self.parts.iter().map(|&p| p as u64).sum()
    }

    /// Number of rows l(Y).
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    /// Whether the diagram has no boxes.
    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Row length Y(x) for a 1-based row index; 0 beyond the last row.
    pub fn part(&self, x: usize) -> u32 {
        if x >= 1 && x <= self.parts.len() {
            self.parts[x - 1]
        } else {
            0
        }
    }

    /// Column height Y^T(y) for a 1-based column index: the number of rows
    /// with at least y boxes.
    pub fn col_height(&self, y: usize) -> usize {
        self.parts.iter().take_while(|&&p| p as usize >= y).count()
    }

    /// Whether box (x,y) (1-based) belongs to the diagram.
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= 1 && y >= 1 && y <= self.part(x) as usize
    }

    /// Arm length a_Y(x,y) = Y(x) - y. Negative outside the diagram.
    pub fn arm(&self, x: usize, y: usize) -> i64 {
        self.part(x) as i64 - y as i64
    }

    /// Leg length l_Y(x,y) = Y^T(y) - x. Negative outside the diagram.
    pub fn leg(&self, x: usize, y: usize) -> i64 {
        self.col_height(y) as i64 - x as i64
    }

    /// Hook length a + l + 1 of a box that must lie inside the diagram.
    pub fn hook(&self, x: usize, y: usize) -> Result<u64> {
        if !self.contains(x, y) {
            return Err(Error::BoxOutsideDiagram(format!(
                "box ({x},{y}) not in partition {:?}",
                self.parts
            )));
        }
        Ok((self.arm(x, y) + self.leg(x, y) + 1) as u64)
    }

    /// Transposed (conjugate) diagram: row y of the transpose has Y^T(y)
    /// boxes. Satisfies arm(Y,(x,y)) = leg(Y^T,(y,x)) for every box.
    pub fn transpose(&self) -> Partition {
        let cols = self.part(1) as usize;
        let parts = (1..=cols).map(|y| self.col_height(y) as u32).collect();
        Partition { parts }
    }

    /// Iterates over the boxes (x,y) of the diagram in row-major order.
    pub fn boxes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parts
            .iter()
            .enumerate()
            .flat_map(|(i, &p)| (1..=p as usize).map(move |y| (i + 1, y)))
    }
}

/// All partitions of n, each exactly once, in lexicographic descending
/// order: (n) first, (1,1,...,1) last.
pub fn enumerate_partitions(n: u32) -> Vec<Partition> {
    fn rec(remaining: u32, max_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            out.push(Partition {
                parts: prefix.clone(),
            });
            return;
        }
        let hi = remaining.min(max_part);
        for k in (1..=hi).rev() {
            prefix.push(k);
            rec(remaining - k, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n.max(1), &mut Vec::new(), &mut out);
    out
}

/// An r-tuple of partitions, the index set of every fixed-point sum.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiPartition {
    components: Vec<Partition>,
}

impl MultiPartition {
    /// Builds a tuple from its components. Panics when r = 0.
    pub fn new(components: impl Into<Vec<Partition>>) -> Self {
        let components = components.into();
        assert!(!components.is_empty(), "need at least one component");
        MultiPartition { components }
    }

    /// The component partitions in order.
    pub fn components(&self) -> &[Partition] {
        &self.components
    }

    /// Number of components r.
    pub fn r(&self) -> usize {
        self.components.len()
    }

    /// Component by 0-based index.
    pub fn component(&self, alpha: usize) -> &Partition {
        &self.components[alpha]
    }

    /// Total box count |Y_1| + ... + |Y_r|.
    pub fn total_size(&self) -> u64 {
        self.components.iter().map(|c| c.size()).sum()
    }

    /// Removes the box (l, w) = (l(Y_c), Y_c(l)) — last row, last column of
    /// that row — from the last nonempty component Y_c. Returns the reduced
    /// tuple, the removed box, and the 0-based component index c.
    pub fn remove_last_box(&self) -> Result<(MultiPartition, (usize, usize), usize)> {
        let c = self
            .components
            .iter()
            .rposition(|p| !p.is_empty())
            .ok_or(Error::AllComponentsEmpty)?;
        let comp = &self.components[c];
        let l = comp.len();
        let w = comp.part(l) as usize;
        let mut parts = comp.parts.clone();
        if w == 1 {
            parts.pop();
        } else {
            parts[l - 1] -= 1;
        }
        let mut components = self.components.clone();
        components[c] = Partition { parts };
        Ok((MultiPartition { components }, (l, w), c))
    }
}

/// All r-tuples of partitions with total size n, in the canonical order:
/// the size of component 1 descends from n to 0, recursively for the rest;
/// within a fixed size vector each component runs through
/// [`enumerate_partitions`] order.
pub fn enumerate_tuples(r: usize, n: u32) -> Vec<MultiPartition> {
    assert!(r >= 1, "need at least one component");
    fn rec(r_left: usize, n_left: u32, prefix: &mut Vec<Partition>, out: &mut Vec<MultiPartition>) {
        if r_left == 1 {
            for p in enumerate_partitions(n_left) {
                prefix.push(p);
                out.push(MultiPartition {
                    components: prefix.clone(),
                });
                prefix.pop();
            }
            return;
        }
        for k in (0..=n_left).rev() {
            for p in enumerate_partitions(k) {
                prefix.push(p);
                rec(r_left - 1, n_left - k, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(r, n, &mut Vec::new(), &mut out);
    out
}
