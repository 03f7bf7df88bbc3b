//! Subdomain multi-indices, their lexicographic orders, the ordinal map over
//! directed interface pairs and the checkerboard partition built on top.
//!
//! Subdomain `(i1, i2)` sits in column `i1` and row `i2`, both 1-based. The
//! directed pair `(owner, neighbor)` names the interface block that carries
//! the Robin datum *incoming* to `owner` across `Γ(owner, neighbor)`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Range, RangeInclusive};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub i1: usize,
    pub i2: usize,
}

impl MultiIndex {
    pub const fn new(i1: usize, i2: usize) -> Self {
        Self { i1, i2 }
    }

    /// Discrete l1 norm, which is also the diagonal group of the subdomain.
    pub const fn l1(self) -> usize {
        self.i1 + self.i2
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i1, self.i2)
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic order: by `|i|₁` first, then by column.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.l1().cmp(&other.l1()).then(self.i1.cmp(&other.i1))
    }
}

pub fn lex_less_multi(a: MultiIndex, b: MultiIndex) -> bool {
    a.l1() < b.l1() || (a.l1() == b.l1() && a.i1 < b.i1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectedPair {
    pub owner: MultiIndex,
    pub neighbor: MultiIndex,
}

impl DirectedPair {
    pub const fn new(owner: MultiIndex, neighbor: MultiIndex) -> Self {
        Self { owner, neighbor }
    }

    pub const fn reversed(self) -> Self {
        Self {
            owner: self.neighbor,
            neighbor: self.owner,
        }
    }
}

impl fmt::Display for DirectedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.owner, self.neighbor)
    }
}

pub fn lex_less_pair(p: DirectedPair, q: DirectedPair) -> bool {
    lex_less_multi(p.owner, q.owner)
        || (p.owner == q.owner && lex_less_multi(p.neighbor, q.neighbor))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowKind {
    Lower,
    Upper,
}

/// A contiguous range of diagonal groups handled by one partial sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupWindow {
    pub kind: WindowKind,
    /// 1-based block number.
    pub block_index: usize,
    pub first: usize,
    pub last: usize,
}

impl GroupWindow {
    pub fn groups(&self) -> RangeInclusive<usize> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }

    pub fn contains(&self, group: usize) -> bool {
        self.first <= group && group <= self.last
    }
}

/// Checkerboard lattice of `n1` columns by `n2` rows.
#[derive(Debug, Clone)]
pub struct Partition {
    n1: usize,
    n2: usize,
    subdomains: Vec<MultiIndex>,
    neighbors: Vec<Vec<MultiIndex>>,
    pairs: Vec<DirectedPair>,
    ordinals: HashMap<DirectedPair, usize>,
    groups: Vec<Vec<MultiIndex>>,
    group_blocks: Vec<Range<usize>>,
}

impl Partition {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidPartition { n1, n2 });
        }
        let mut subdomains = Vec::with_capacity(n1 * n2);
        for i2 in 1..=n2 {
            for i1 in 1..=n1 {
                subdomains.push(MultiIndex::new(i1, i2));
            }
        }

        let mut neighbors = Vec::with_capacity(subdomains.len());
        let mut pairs = Vec::new();
        for &s in &subdomains {
            let mut d = Vec::with_capacity(4);
            if s.i1 > 1 {
                d.push(MultiIndex::new(s.i1 - 1, s.i2));
            }
            if s.i1 < n1 {
                d.push(MultiIndex::new(s.i1 + 1, s.i2));
            }
            if s.i2 > 1 {
                d.push(MultiIndex::new(s.i1, s.i2 - 1));
            }
            if s.i2 < n2 {
                d.push(MultiIndex::new(s.i1, s.i2 + 1));
            }
            d.sort();
            pairs.extend(d.iter().map(|&nb| DirectedPair::new(s, nb)));
            neighbors.push(d);
        }
        pairs.sort_by(|p, q| (p.owner, p.neighbor).cmp(&(q.owner, q.neighbor)));
        let ordinals = pairs.iter().enumerate().map(|(k, &p)| (p, k + 1)).collect();

        let n_groups = n1 + n2 - 1;
        let mut groups = vec![Vec::new(); n_groups];
        let mut ordered = subdomains.clone();
        ordered.sort();
        for s in ordered {
            groups[s.l1() - 2].push(s);
        }

        // Pairs are sorted by owner first, so each group's blocks are contiguous.
        let mut group_blocks = vec![0..0; n_groups];
        let mut start = 0;
        for (g, range) in group_blocks.iter_mut().enumerate() {
            let mut end = start;
            while end < pairs.len() && pairs[end].owner.l1() == g + 2 {
                end += 1;
            }
            *range = start..end;
            start = end;
        }

        Ok(Self {
            n1,
            n2,
            subdomains,
            neighbors,
            pairs,
            ordinals,
            groups,
            group_blocks,
        })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n_subdomains(&self) -> usize {
        self.n1 * self.n2
    }

    /// Number of undirected interior interfaces.
    pub fn n_interfaces(&self) -> usize {
        2 * self.n1 * self.n2 - self.n1 - self.n2
    }

    /// Number of diagonal groups.
    pub fn n_groups(&self) -> usize {
        self.n1 + self.n2 - 1
    }

    /// Group labels run over `2..=n_groups() + 1`.
    pub fn group_labels(&self) -> RangeInclusive<usize> {
        2..=self.n_groups() + 1
    }

    /// Subdomains in row-major order (row `i2` outer, column `i1` inner).
    pub fn subdomains(&self) -> &[MultiIndex] {
        &self.subdomains
    }

    pub fn contains(&self, i: MultiIndex) -> bool {
        (1..=self.n1).contains(&i.i1) && (1..=self.n2).contains(&i.i2)
    }

    /// Row-major position of `i` in [`Self::subdomains`].
    pub fn linear(&self, i: MultiIndex) -> usize {
        (i.i2 - 1) * self.n1 + (i.i1 - 1)
    }

    /// `D_i`, in lexicographic order.
    pub fn neighbors(&self, i: MultiIndex) -> &[MultiIndex] {
        &self.neighbors[self.linear(i)]
    }

    /// All directed pairs sorted by their ordinal.
    pub fn pairs(&self) -> &[DirectedPair] {
        &self.pairs
    }

    pub fn group(&self, label: usize) -> &[MultiIndex] {
        match label.checked_sub(2) {
            Some(k) if k < self.groups.len() => &self.groups[k],
            _ => &[],
        }
    }

    /// 0-based block positions owned by subdomains of group `label`.
    pub fn group_blocks(&self, label: usize) -> Range<usize> {
        match label.checked_sub(2) {
            Some(k) if k < self.group_blocks.len() => self.group_blocks[k].clone(),
            _ => 0..0,
        }
    }

    /// 1-based ordinal of a directed pair.
    pub fn m_index(&self, pair: DirectedPair) -> Result<usize> {
        self.ordinals
            .get(&pair)
            .copied()
            .ok_or(Error::NotAnInterface {
                owner: pair.owner,
                neighbor: pair.neighbor,
            })
    }

    /// 0-based block position, for lookups on pairs known to be valid.
    pub fn block(&self, owner: MultiIndex, neighbor: MultiIndex) -> usize {
        self.ordinals[&DirectedPair::new(owner, neighbor)] - 1
    }

    pub fn m_invert(&self, ordinal: usize) -> Result<DirectedPair> {
        if ordinal == 0 || ordinal > self.pairs.len() {
            return Err(Error::OrdinalOutOfRange {
                ordinal,
                max: self.pairs.len(),
            });
        }
        Ok(self.pairs[ordinal - 1])
    }

    /// Partial-sweep windows. Lower windows start at group 2 and advance by
    /// `n1` groups; upper windows mirror them from group `n_groups() + 1`.
    /// Consecutive windows share exactly one seam group.
    pub fn windows(&self, kind: WindowKind) -> Vec<GroupWindow> {
        let top = self.n_groups() + 1;
        let span = self.n_groups() - 1;
        let count = span.div_ceil(self.n1);
        (1..=count)
            .map(|block_index| {
                let (first, last) = match kind {
                    WindowKind::Lower => {
                        let first = 2 + (block_index - 1) * self.n1;
                        (first, (2 + block_index * self.n1).min(top))
                    }
                    WindowKind::Upper => {
                        let last = top - (block_index - 1) * self.n1;
                        (
                            (top as isize - (block_index * self.n1) as isize).max(2) as usize,
                            last,
                        )
                    }
                };
                GroupWindow {
                    kind,
                    block_index,
                    first,
                    last,
                }
            })
            .collect()
    }
}

pub fn build_partition(n1: usize, n2: usize) -> Result<Partition> {
    Partition::new(n1, n2)
}

pub fn build_windows(partition: &Partition, kind: WindowKind) -> Vec<GroupWindow> {
    partition.windows(kind)
}
