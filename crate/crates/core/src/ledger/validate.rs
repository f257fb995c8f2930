use std::collections::HashSet;

use thiserror::Error;

use super::{merkle_root, Block, Chain, Digest, TxKind, BLOCK_VERSION};
use crate::consensus::{eligible_miners, DiversityRule, MinerSet};
use crate::registry::ParticipantId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("block does not link to its parent")]
    BadLink,
    #[error("unsupported block version {0}")]
    UnsupportedVersion(u32),
    #[error("timestamp {timestamp} precedes parent timestamp {parent}")]
    NonMonotonicTimestamp { parent: u64, timestamp: u64 },
    #[error("merkle root does not match transactions")]
    BadMerkleRoot,
    #[error("transaction count does not match")]
    BadCount,
    #[error("invalid signature")]
    BadSignature,
    #[error("miner {0:?} is not permitted")]
    UnpermittedMiner(ParticipantId),
    #[error("miner {0:?} mined inside the diversity window")]
    DiversityViolation(ParticipantId),
    #[error("transaction ({0:?}, nonce {1}) already on chain")]
    DuplicateTransaction(ParticipantId, u64),
    #[error("genesis may only hold permission grants")]
    BadGenesis,
}

/// Checks the parts of a block that need no context: merkle root, count
/// and signatures.
fn check_body(block: &Block) -> Result<(), ValidationError> {
    if block.transactions.is_empty() {
        return Err(ValidationError::BadCount);
    }
    let root = merkle_root(&block.transactions).map_err(|_| ValidationError::BadCount)?;
    if root != block.header.merkle_root {
        return Err(ValidationError::BadMerkleRoot);
    }
    if block.tx_count as usize != block.transactions.len() {
        return Err(ValidationError::BadCount);
    }
    if !block.verify_miner_signature() || !block.transactions.iter().all(|tx| tx.verify_signature()) {
        return Err(ValidationError::BadSignature);
    }
    Ok(())
}

/// Structural check of a height-0 block.
pub fn validate_genesis(block: &Block) -> Result<(), ValidationError> {
    if block.header.height != 0 || block.header.prev_hash != Digest::ZERO {
        return Err(ValidationError::BadLink);
    }
    if block.header.version != BLOCK_VERSION {
        return Err(ValidationError::UnsupportedVersion(block.header.version));
    }
    check_body(block)?;
    if block.transactions.iter().any(|tx| tx.kind != TxKind::PermissionGrant) {
        return Err(ValidationError::BadGenesis);
    }
    Ok(())
}

/// Validates `block` as the child of `history.last()`.
///
/// Checks run in order and the first failure is returned: hash linkage,
/// merkle root, transaction count, signatures, miner permission, diversity
/// eligibility, then transaction replay. Eligibility ignores the liveness
/// flags in `miners`; whether a miner is online does not change which
/// blocks are valid.
pub fn validate_block(
    block: &Block,
    history: &[Block],
    rule: &DiversityRule,
    miners: &MinerSet,
) -> Result<(), ValidationError> {
    let parent = history.last().ok_or(ValidationError::BadLink)?;
    let h = &block.header;
    if h.prev_hash != parent.id() || h.height != parent.header.height + 1 {
        return Err(ValidationError::BadLink);
    }
    if h.version != BLOCK_VERSION {
        return Err(ValidationError::UnsupportedVersion(h.version));
    }
    if h.timestamp < parent.header.timestamp {
        return Err(ValidationError::NonMonotonicTimestamp {
            parent: parent.header.timestamp,
            timestamp: h.timestamp,
        });
    }
    check_body(block)?;
    if !miners.is_permitted(&h.miner) {
        return Err(ValidationError::UnpermittedMiner(h.miner));
    }
    if !eligible_miners(history, &miners.all_active(), rule).contains(&h.miner) {
        return Err(ValidationError::DiversityViolation(h.miner));
    }
    let mut seen: HashSet<(ParticipantId, u64)> = history
        .iter()
        .flat_map(|b| &b.transactions)
        .map(|tx| (tx.author, tx.nonce))
        .collect();
    for tx in &block.transactions {
        if !seen.insert((tx.author, tx.nonce)) {
            return Err(ValidationError::DuplicateTransaction(tx.author, tx.nonce));
        }
    }
    Ok(())
}

/// Validates a whole chain, reporting the first failing height.
pub fn validate_chain(chain: &Chain, rule: &DiversityRule, miners: &MinerSet) -> Result<(), (u64, ValidationError)> {
    let blocks = chain.blocks();
    validate_genesis(&blocks[0]).map_err(|e| (0, e))?;
    for i in 1..blocks.len() {
        validate_block(&blocks[i], &blocks[..i], rule, miners).map_err(|e| (i as u64, e))?;
    }
    Ok(())
}
