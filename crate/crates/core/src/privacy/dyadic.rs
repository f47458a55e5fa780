use serde::Serialize;

/// A node of one epoch's binary tree, covering global items
/// `start..=end` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DyadicNode {
    pub epoch: u32,
    pub level: u32,
    pub start: u64,
    pub end: u64,
}

impl DyadicNode {
    /// Number of levels in the node's epoch tree, `ceil(log2 L) + 1` for an
    /// epoch of length `L = 2^epoch`.
    pub fn levels(&self) -> u32 {
        self.epoch + 1
    }

    pub fn len(&self) -> u64 {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Epoch containing global item `t` (1-based): `floor(log2 t)`.
pub(crate) fn epoch_of(t: u64) -> u32 {
    debug_assert!(t > 0);
    63 - t.leading_zeros()
}

/// Binary decomposition of local positions `1..=p` inside a tree over
/// `epoch_len` slots, as local `(start, end)` pairs, largest block first.
pub fn within_epoch_decomposition(p: u64, epoch_len: u64) -> Vec<(u64, u64)> {
    assert!(epoch_len.is_power_of_two() && p <= epoch_len);
    let mut out = Vec::new();
    let mut start = 1;
    for level in (0..=epoch_len.trailing_zeros()).rev() {
        let size = 1u64 << level;
        if p & size != 0 {
            out.push((start, start + size - 1));
            start += size;
        }
    }
    out
}

/// Tree nodes whose noisy sums make up the release at time `t`: the roots of
/// all completed epochs, then the decomposition of the current epoch.
pub fn decomposition(t: u64) -> Vec<DyadicNode> {
    if t == 0 {
        return Vec::new();
    }
    let current = epoch_of(t);
    let mut nodes: Vec<DyadicNode> = (0..current)
        .map(|e| DyadicNode {
            epoch: e,
            level: e,
            start: 1 << e,
            end: (1 << (e + 1)) - 1,
        })
        .collect();
    let base = 1u64 << current;
    let p = t - base + 1;
    for (s, e) in within_epoch_decomposition(p, base) {
        nodes.push(DyadicNode {
            epoch: current,
            level: (e + 1 - s).trailing_zeros(),
            start: base + s - 1,
            end: base + e - 1,
        });
    }
    nodes
}

/// `decomposition(t).len()` without allocating.
pub fn node_count(t: u64) -> usize {
    if t == 0 {
        return 0;
    }
    let current = epoch_of(t);
    let p = t - (1u64 << current) + 1;
    current as usize + p.count_ones() as usize
}
