use std::fmt;

use sha2::{Digest as _, Sha256};

/// Output of the double SHA-256 pipeline.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let raw = hex::decode(s).ok()?;
        Some(Digest(raw.try_into().ok()?))
    }

    /// First four bytes in hex, for logs and tables.
    pub fn short(&self) -> String {
        hex::encode(&self.0[..4])
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.short())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// `SHA-256(SHA-256(data))`.
pub fn double_hash(data: &[u8]) -> Digest {
    let first = Sha256::digest(data);
    Digest(Sha256::digest(first).into())
}

/// Hash of two concatenated child nodes.
pub fn hash_pair(left: &Digest, right: &Digest) -> Digest {
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(&left.0);
    buf[32..].copy_from_slice(&right.0);
    double_hash(&buf)
}

/// Folds leaf digests into a Merkle root. An odd level pairs its last node
/// with itself. Returns `None` for an empty slice.
pub fn merkle_root_of_leaves(leaves: &[Digest]) -> Option<Digest> {
    if leaves.is_empty() {
        return None;
    }
    let mut level = leaves.to_vec();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| hash_pair(&pair[0], pair.get(1).unwrap_or(&pair[0])))
            .collect();
    }
    Some(level[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_leaf_is_root() {
        let leaf = double_hash(b"x");
        assert_eq!(merkle_root_of_leaves(&[leaf]), Some(leaf));
    }

    #[test]
    fn empty_leaves_have_no_root() {
        assert_eq!(merkle_root_of_leaves(&[]), None);
    }

    #[test]
    fn three_leaves_duplicate_the_last() {
        let l: Vec<_> = [b"a", b"b", b"c"].iter().map(|d| double_hash(*d)).collect();
        let expected = hash_pair(&hash_pair(&l[0], &l[1]), &hash_pair(&l[2], &l[2]));
        assert_eq!(merkle_root_of_leaves(&l), Some(expected));
    }

    #[test]
    fn hex_round_trip() {
        let d = double_hash(b"abc");
        assert_eq!(Digest::from_hex(&d.to_hex()), Some(d));
        assert_eq!(Digest::from_hex("00"), None);
    }
}
