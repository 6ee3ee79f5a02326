//! Set partitions of `{0, .., n-1}`: enumeration, Möbius values, non-crossing
//! partitions, Kreweras complements and pairings.
//!
//! A partition is stored as a restricted growth string: `labels[i]` is the
//! block of element `i`, and blocks are numbered in order of their minimum.

use crate::error::{Error, Result};

/// Hard limit on the ground-set size accepted by any enumerator.
pub const HARD_MAX: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    labels: Vec<u8>,
    nblocks: usize,
}

impl SetPartition {
    /// Builds a partition from arbitrary block labels, renumbering them into
    /// restricted growth form.
    pub fn from_labels<T: Copy + Eq>(raw: &[T]) -> Self {
        let mut seen: Vec<T> = Vec::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &x in raw {
            let b = match seen.iter().position(|&y| y == x) {
                Some(b) => b,
                None => {
                    seen.push(x);
                    seen.len() - 1
                }
            };
            labels.push(b as u8);
        }
        SetPartition { labels, nblocks: seen.len() }
    }

    /// Builds a partition from explicit blocks; every element of `0..n` must
    /// appear exactly once.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut raw = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &x in block {
                if x >= n || raw[x] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("element {x} out of range or repeated")));
                }
                raw[x] = b;
            }
        }
        if raw.contains(&usize::MAX) {
            return Err(Error::InvalidPartition("blocks do not cover the ground set".into()));
        }
        Ok(Self::from_labels(&raw))
    }

    pub fn discrete(n: usize) -> Self {
        SetPartition { labels: (0..n as u8).collect(), nblocks: n }
    }

    pub fn full(n: usize) -> Self {
        SetPartition { labels: vec![0; n], nblocks: usize::from(n > 0) }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn num_blocks(&self) -> usize {
        self.nblocks
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nblocks];
        for (i, &b) in self.labels.iter().enumerate() {
            out[b as usize].push(i);
        }
        out
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.nblocks];
        for &b in &self.labels {
            out[b as usize] += 1;
        }
        out
    }

    /// `self ≤ other` in refinement order.
    pub fn refines(&self, other: &SetPartition) -> bool {
        assert_eq!(self.len(), other.len());
        let mut image = vec![u8::MAX; self.nblocks];
        for (i, &b) in self.labels.iter().enumerate() {
            let o = other.labels[i];
            if image[b as usize] == u8::MAX {
                image[b as usize] = o;
            } else if image[b as usize] != o {
                return false;
            }
        }
        true
    }

    pub fn is_noncrossing(&self) -> bool {
        let n = self.len();
        for a in 0..n {
            for b in a + 1..n {
                if self.labels[b] == self.labels[a] {
                    continue;
                }
                for c in b + 1..n {
                    if self.labels[c] != self.labels[a] {
                        continue;
                    }
                    for d in c + 1..n {
                        if self.labels[d] == self.labels[b] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// μ(0̂, π) = Π_B (-1)^{|B|-1} (|B|-1)! in the full partition lattice.
    pub fn mobius_from_zero(&self) -> i64 {
        self.block_sizes()
            .into_iter()
            .map(|s| {
                let f: i64 = (1..s as i64).product();
                if s % 2 == 0 {
                    -f
                } else {
                    f
                }
            })
            .product()
    }

    /// Kreweras complement. Element `i` of the result stands for the point
    /// sitting between `i` and `i + 1` in the interlaced order.
    pub fn kreweras(&self) -> Result<SetPartition> {
        if !self.is_noncrossing() {
            return Err(Error::NotNoncrossing);
        }
        let n = self.len();
        // Blocks as increasing cycles; the complement is the cycle structure
        // of π⁻¹ ∘ (0 1 … n-1).
        let mut prev = vec![0usize; n];
        for block in self.blocks() {
            for (k, &x) in block.iter().enumerate() {
                prev[block[(k + 1) % block.len()]] = x;
            }
        }
        let perm: Vec<usize> = (0..n).map(|i| prev[(i + 1) % n]).collect();
        let mut raw = vec![usize::MAX; n];
        let mut c = 0;
        for s in 0..n {
            if raw[s] != usize::MAX {
                continue;
            }
            let mut x = s;
            while raw[x] == usize::MAX {
                raw[x] = c;
                x = perm[x];
            }
            c += 1;
        }
        Ok(SetPartition::from_labels(&raw))
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n > HARD_MAX {
        Err(Error::CapExceeded { what: "partition ground set", size: n, cap: HARD_MAX })
    } else {
        Ok(())
    }
}

/// Depth-first generator of restricted growth strings. `allow(labels, i, b)`
/// decides whether element `i` may join block `b` (with `b == nblocks`
/// meaning a new block) given the assignment of `0..i`.
fn generate<F>(n: usize, mut allow: F, out: &mut Vec<SetPartition>)
where
    F: FnMut(&[u8], usize, usize, usize) -> bool,
{
    fn rec<F: FnMut(&[u8], usize, usize, usize) -> bool>(
        n: usize,
        labels: &mut Vec<u8>,
        nb: usize,
        allow: &mut F,
        out: &mut Vec<SetPartition>,
    ) {
        let i = labels.len();
        if i == n {
            out.push(SetPartition { labels: labels.clone(), nblocks: nb });
            return;
        }
        for b in 0..=nb {
            if !allow(labels, i, b, nb) {
                continue;
            }
            labels.push(b as u8);
            rec(n, labels, nb.max(b + 1), allow, out);
            labels.pop();
        }
    }
    let mut labels = Vec::with_capacity(n);
    rec(n, &mut labels, 0, &mut allow, out);
}

/// All partitions of an `n`-set, in restricted-growth lexicographic order.
pub fn all_partitions(n: usize) -> Result<Vec<SetPartition>> {
    check_cap(n)?;
    let mut out = Vec::new();
    generate(n, |_, _, _, _| true, &mut out);
    Ok(out)
}

/// Non-crossing partitions, generated directly (no filtering of the full
/// lattice).
pub fn noncrossing_partitions(n: usize) -> Result<Vec<SetPartition>> {
    check_cap(n)?;
    let mut out = Vec::new();
    generate(
        n,
        |labels, i, b, nb| {
            if b == nb {
                return true;
            }
            // Joining block b closes an arc (last(b), i). Any other block with
            // an element inside the arc must lie entirely inside it.
            let last = labels.iter().rposition(|&x| x as usize == b).unwrap();
            for &c in &labels[last + 1..i] {
                let first_c = labels.iter().position(|&x| x == c).unwrap();
                if first_c < last {
                    return false;
                }
            }
            true
        },
        &mut out,
    );
    Ok(out)
}

/// Perfect matchings of an `n`-set (empty when `n` is odd).
pub fn pair_partitions(n: usize) -> Result<Vec<SetPartition>> {
    check_cap(n)?;
    let mut out = Vec::new();
    if n % 2 == 1 {
        return Ok(out);
    }
    generate(
        n,
        |labels, i, b, nb| {
            let size = labels.iter().filter(|&&x| x as usize == b).count();
            let open = (0..nb).filter(|&c| labels.iter().filter(|&&x| x as usize == c).count() == 1).count();
            if b == nb {
                // a new block must still be closable
                open + 1 <= n - i - 1
            } else {
                size == 1
            }
        },
        &mut out,
    );
    Ok(out)
}

pub fn catalan(n: usize) -> u64 {
    let mut c: u64 = 1;
    for k in 0..n as u64 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

pub fn bell(n: usize) -> u64 {
    // Bell triangle
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let y = *next.last().unwrap() + x;
            next.push(y);
        }
        row = next;
    }
    row[0]
}

/// μ_NC(π, 1̂_n) = Π over blocks K of the Kreweras complement of
/// (-1)^{|K|-1} Cat(|K|-1).
pub fn nc_mobius_to_top(pi: &SetPartition) -> Result<i64> {
    let k = pi.kreweras()?;
    Ok(k.block_sizes()
        .into_iter()
        .map(|s| {
            let c = catalan(s - 1) as i64;
            if s % 2 == 0 {
                -c
            } else {
                c
            }
        })
        .product())
}
