//! Merkle root computed top-down.
//!
//! Level `k` has `ceil(n_{k-1} / 2)` nodes. Node `i` hashes children `2i`
//! and `2i + 1`, and a missing right child is replaced by the left one.

use crate::sha256::sha256d;

fn level_sizes(leaves: usize) -> Vec<usize> {
    let mut sizes = vec![leaves];
    while *sizes.last().unwrap() > 1 {
        let n = *sizes.last().unwrap();
        sizes.push(n.div_ceil(2));
    }
    sizes
}

fn node(leaves: &[[u8; 32]], sizes: &[usize], level: usize, index: usize) -> [u8; 32] {
    if level == 0 {
        return leaves[index];
    }
    let below = sizes[level - 1];
    let left = node(leaves, sizes, level - 1, 2 * index);
    let right = node(leaves, sizes, level - 1, (2 * index + 1).min(below - 1));
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(&left);
    buf[32..].copy_from_slice(&right);
    sha256d(&buf)
}

pub fn root(leaves: &[[u8; 32]]) -> Option<[u8; 32]> {
    if leaves.is_empty() {
        return None;
    }
    let sizes = level_sizes(leaves.len());
    Some(node(leaves, &sizes, sizes.len() - 1, 0))
}

/// Root over `sha256d` of each serialized transaction.
pub fn root_of_serialized(txs: &[Vec<u8>]) -> Option<[u8; 32]> {
    let leaves: Vec<[u8; 32]> = txs.iter().map(|t| sha256d(t)).collect();
    root(&leaves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_leaves_hash_once() {
        let a = [1u8; 32];
        let b = [2u8; 32];
        let mut buf = [0u8; 64];
        buf[..32].copy_from_slice(&a);
        buf[32..].copy_from_slice(&b);
        assert_eq!(root(&[a, b]), Some(sha256d(&buf)));
    }

    #[test]
    fn odd_count_pairs_last_with_itself() {
        let l = [[1u8; 32], [2u8; 32], [3u8; 32]];
        assert_eq!(root(&l), root(&[l[0], l[1], l[2], l[2]]));
    }
}
