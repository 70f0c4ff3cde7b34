//! Set partitions of `N = {1..n}` ordered by refinement.
//!
//! Indices are 0-based in memory and 1-based on the wire: a partition of
//! four particles serializes as `[[1,2],[3],[4]]`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{param, Error, Result};

/// Largest ground set accepted by [`enumerate_partitions`].
pub const MAX_ENUMERATION_N: usize = 12;

/// A set partition (cluster decomposition) in canonical form.
///
/// Blocks are sorted internally and ordered by their least element, so the
/// derived equality, hashing and ordering are structural.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from 0-based blocks, validating coverage and
    /// disjointness.
    pub fn from_blocks(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut blocks = blocks;
        for block in &mut blocks {
            if block.is_empty() {
                return Err(param("partition contains an empty block"));
            }
            for &i in block.iter() {
                if i >= n {
                    return Err(param("block element outside the ground set"));
                }
                if seen[i] {
                    return Err(param("blocks are not disjoint"));
                }
                seen[i] = true;
            }
            block.sort_unstable();
        }
        if seen.iter().any(|s| !s) {
            return Err(param("blocks do not cover the ground set"));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Partition { n, blocks })
    }

    /// Builds a partition from 1-based blocks; the ground set size is the
    /// total number of elements.
    pub fn from_one_based(blocks: &[Vec<usize>]) -> Result<Self> {
        let n = blocks.iter().map(Vec::len).sum();
        let mut zero = Vec::with_capacity(blocks.len());
        for b in blocks {
            let mut block = Vec::with_capacity(b.len());
            for &i in b {
                if i == 0 {
                    return Err(param("partition indices are 1-based"));
                }
                block.push(i - 1);
            }
            zero.push(block);
        }
        Self::from_blocks(n, zero)
    }

    /// Builds a partition from a block label per element. Labels may be any
    /// integers; elements with equal labels share a block.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut keys: Vec<usize> = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            match keys.iter().position(|&k| k == l) {
                Some(b) => blocks[b].push(i),
                None => {
                    keys.push(l);
                    blocks.push(vec![i]);
                }
            }
        }
        // first-occurrence order already sorts blocks by least element
        Partition {
            n: labels.len(),
            blocks,
        }
    }

    /// The finest partition `{{1},…,{n}}`.
    pub fn finest(n: usize) -> Self {
        Partition {
            n,
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// The coarsest partition `{{1,…,n}}`.
    pub fn coarsest(n: usize) -> Self {
        Partition {
            n,
            blocks: if n == 0 { Vec::new() } else { vec![(0..n).collect()] },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks.
    pub fn rank(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block index of every element.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                labels[i] = b;
            }
        }
        labels
    }

    /// The block containing element `i` (0-based).
    pub fn block_of(&self, i: usize) -> &[usize] {
        self.blocks
            .iter()
            .find(|b| b.contains(&i))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn contains_block(&self, block: &[usize]) -> bool {
        self.blocks.iter().any(|b| b.as_slice() == block)
    }

    /// Blocks with at least two elements.
    pub fn nontrivial_blocks(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.blocks.iter().filter(|b| b.len() > 1)
    }

    fn check_same_ground(&self, other: &Partition) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GroundSetMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// The join `self ∨ other`: connected components of the union of both
    /// block relations.
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        self.check_same_ground(other)?;
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for block in self.blocks.iter().chain(other.blocks.iter()) {
            let root = find(&mut parent, block[0]);
            for &i in &block[1..] {
                let r = find(&mut parent, i);
                if r != root {
                    parent[r] = root;
                }
            }
        }
        let labels: Vec<usize> = (0..self.n).map(|i| find(&mut parent, i)).collect();
        Ok(Partition::from_labels(&labels))
    }

    /// True iff every block of `self` lies inside a block of `coarser`.
    pub fn is_refinement(&self, coarser: &Partition) -> Result<bool> {
        self.check_same_ground(coarser)?;
        let labels = coarser.labels();
        Ok(self
            .blocks
            .iter()
            .all(|b| b.iter().all(|&i| labels[i] == labels[b[0]])))
    }

    /// True iff one of the two partitions refines the other.
    pub fn comparable(&self, other: &Partition) -> Result<bool> {
        Ok(self.is_refinement(other)? || other.is_refinement(self)?)
    }

    /// 1-based list-of-lists form.
    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|i| i + 1).collect())
            .collect()
    }
}

fn fmt_block(f: &mut fmt::Formatter<'_>, block: &[usize]) -> fmt::Result {
    f.write_str("[")?;
    for (k, i) in block.iter().enumerate() {
        if k > 0 {
            f.write_str(",")?;
        }
        write!(f, "{}", i + 1)?;
    }
    f.write_str("]")
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            fmt_block(f, b)?;
        }
        f.write_str("]")
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let raw: Vec<Vec<usize>> = Vec::deserialize(d)?;
        Partition::from_one_based(&raw).map_err(serde::de::Error::custom)
    }
}

/// Lazily walks all partitions of `{0..n}` as restricted growth strings in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct PartitionIter {
    rgs: Vec<usize>,
    done: bool,
}

impl PartitionIter {
    pub fn new(n: usize) -> Self {
        PartitionIter {
            rgs: vec![0; n],
            done: n == 0,
        }
    }

    fn advance(&mut self) {
        let n = self.rgs.len();
        // prefix maxima determine how far each position may grow
        let mut i = n;
        while i > 1 {
            i -= 1;
            let max_prefix = self.rgs[..i].iter().copied().max().unwrap_or(0);
            if self.rgs[i] <= max_prefix {
                self.rgs[i] += 1;
                for x in &mut self.rgs[i + 1..] {
                    *x = 0;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let p = Partition::from_labels(&self.rgs);
        self.advance();
        Some(p)
    }
}

/// Every partition of `{1..n}` exactly once, in restricted-growth-string
/// order. `n` must lie in `1..=12`.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>> {
    if n == 0 || n > MAX_ENUMERATION_N {
        return Err(param(alloc::format!(
            "partition enumeration needs 1 <= n <= {MAX_ENUMERATION_N}, got {n}"
        )));
    }
    Ok(PartitionIter::new(n).collect())
}

/// Partitions of rank `k`.
pub fn partitions_of_rank(n: usize, k: usize) -> Result<Vec<Partition>> {
    Ok(enumerate_partitions(n)?
        .into_iter()
        .filter(|p| p.rank() == k)
        .collect())
}

/// An ordered triple of clusters `(C1, C2, C3)` forming a rank-3 partition.
/// `c2` is the messenger slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessengerTuple {
    pub c1: Vec<usize>,
    pub c2: Vec<usize>,
    pub c3: Vec<usize>,
}

impl MessengerTuple {
    pub fn new(c1: Vec<usize>, c2: Vec<usize>, c3: Vec<usize>) -> Result<Self> {
        let n = c1.len() + c2.len() + c3.len();
        let p = Partition::from_blocks(n, vec![c1.clone(), c2.clone(), c3.clone()])?;
        let sorted = |b: &Vec<usize>| p.block_of(b[0]).to_vec();
        Ok(MessengerTuple {
            c1: sorted(&c1),
            c2: sorted(&c2),
            c3: sorted(&c3),
        })
    }

    /// The underlying unordered partition.
    pub fn partition(&self) -> Partition {
        let n = self.c1.len() + self.c2.len() + self.c3.len();
        Partition::from_blocks(n, vec![self.c1.clone(), self.c2.clone(), self.c3.clone()])
            .expect("tuple blocks form a partition")
    }

    /// `{C1 ∪ C2, C3}`: the configuration before the messenger departs.
    pub fn before(&self) -> Partition {
        let mut merged = self.c1.clone();
        merged.extend_from_slice(&self.c2);
        Partition::from_blocks(self.n(), vec![merged, self.c3.clone()]).expect("valid tuple")
    }

    /// `{C1, C2 ∪ C3}`: the configuration after the messenger arrives.
    pub fn after(&self) -> Partition {
        let mut merged = self.c2.clone();
        merged.extend_from_slice(&self.c3);
        Partition::from_blocks(self.n(), vec![self.c1.clone(), merged]).expect("valid tuple")
    }

    pub fn n(&self) -> usize {
        self.c1.len() + self.c2.len() + self.c3.len()
    }
}

impl fmt::Display for MessengerTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        fmt_block(f, &self.c1)?;
        f.write_str(",")?;
        fmt_block(f, &self.c2)?;
        f.write_str(",")?;
        fmt_block(f, &self.c3)?;
        f.write_str(")")
    }
}

impl Serialize for MessengerTuple {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let one = |b: &Vec<usize>| b.iter().map(|i| i + 1).collect::<Vec<_>>();
        [one(&self.c1), one(&self.c2), one(&self.c3)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for MessengerTuple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let raw: [Vec<usize>; 3] = Deserialize::deserialize(d)?;
        let zero = |b: &Vec<usize>| -> core::result::Result<Vec<usize>, D::Error> {
            b.iter()
                .map(|&i| {
                    i.checked_sub(1)
                        .ok_or_else(|| serde::de::Error::custom("indices are 1-based"))
                })
                .collect()
        };
        MessengerTuple::new(zero(&raw[0])?, zero(&raw[1])?, zero(&raw[2])?)
            .map_err(serde::de::Error::custom)
    }
}

const PERMUTATIONS_3: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// All ordered triples `(C1, C2, C3)` whose blocks form a rank-3 partition
/// of `{1..n}`. For `n = 4` there are 36.
pub fn messenger_tuples(n: usize) -> Result<Vec<MessengerTuple>> {
    if n < 3 {
        return Err(param("messenger tuples need at least three particles"));
    }
    let mut out = Vec::new();
    for p in partitions_of_rank(n, 3)? {
        let b = p.blocks();
        for perm in PERMUTATIONS_3 {
            out.push(MessengerTuple {
                c1: b[perm[0]].clone(),
                c2: b[perm[1]].clone(),
                c3: b[perm[2]].clone(),
            });
        }
    }
    Ok(out)
}

/// Canonical string key, identical to the JSON form.
pub fn partition_key(p: &Partition) -> String {
    alloc::format!("{p}")
}
