//! Blocks, transactions, hashing and the canonical wire format.
//!
//! Wire layout of a block (all integers little-endian):
//!
//! ```text
//! version      4B
//! prev_hash   32B
//! merkle_root 32B
//! height       8B
//! timestamp    8B
//! miner       32B
//! signature    2B length || scheme_id || bytes   (length 0 when unsigned)
//! tx_count     4B
//! tx_count × ( 4B length || transaction )
//! ```
//!
//! A transaction is `kind 1B || author 32B || nonce 8B || 4B length || payload
//! || signature`. The block id is the double hash of the header fields only.

pub mod codec;
mod hash;
pub mod store;
mod validate;

pub use hash::{double_hash, hash_pair, merkle_root_of_leaves, Digest};
pub use validate::{validate_block, validate_chain, validate_genesis, ValidationError};

use std::fmt;

use thiserror::Error;

use crate::registry::{Keypair, Permission, ParticipantId, Rights, Role, Signature};
use codec::{Canonical, DecodeError, Reader, Writer};

pub const BLOCK_VERSION: u32 = 1;
/// Encoded size of a header.
pub const HEADER_LEN: usize = 4 + 32 + 32 + 8 + 8 + 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("a block needs at least one transaction")]
    EmptyTransactionList,
    #[error("timestamp {timestamp} is earlier than parent timestamp {parent}")]
    NonMonotonicTimestamp { parent: u64, timestamp: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TxKind {
    ClaimAttestation,
    ContractRecord,
    HrEventRecord,
    PermissionGrant,
}

impl TxKind {
    fn tag(self) -> u8 {
        match self {
            TxKind::ClaimAttestation => 1,
            TxKind::ContractRecord => 2,
            TxKind::HrEventRecord => 3,
            TxKind::PermissionGrant => 4,
        }
    }

    fn from_tag(tag: u8) -> Result<Self, DecodeError> {
        Ok(match tag {
            1 => TxKind::ClaimAttestation,
            2 => TxKind::ContractRecord,
            3 => TxKind::HrEventRecord,
            4 => TxKind::PermissionGrant,
            tag => {
                return Err(DecodeError::BadTag {
                    what: "transaction kind",
                    tag,
                })
            }
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TxKind::ClaimAttestation => "ClaimAttestation",
            TxKind::ContractRecord => "ContractRecord",
            TxKind::HrEventRecord => "HrEventRecord",
            TxKind::PermissionGrant => "PermissionGrant",
        }
    }
}

impl fmt::Display for TxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A signed on-chain record. The payload is the canonical encoding of the
/// kind-specific record (see `recruit`, `hrm`, `registry`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub kind: TxKind,
    pub author: ParticipantId,
    pub nonce: u64,
    pub payload: Vec<u8>,
    pub author_signature: Signature,
}

impl Transaction {
    /// Builds and signs a transaction. The author is the signer.
    pub fn new_signed(kind: TxKind, payload: Vec<u8>, nonce: u64, author: &Keypair) -> Self {
        let mut tx = Transaction {
            kind,
            author: author.id(),
            nonce,
            payload,
            author_signature: Signature::none(),
        };
        tx.author_signature = author.sign(&tx.signing_bytes());
        tx
    }

    /// Bytes covered by the author signature: everything but the signature.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_unsigned(&mut w);
        w.finish()
    }

    fn encode_unsigned(&self, w: &mut Writer) {
        w.u8(self.kind.tag());
        self.author.encode_into(w);
        w.u64(self.nonce).bytes(&self.payload);
    }

    pub fn verify_signature(&self) -> bool {
        crate::registry::verify_signed_by(&self.author, &self.signing_bytes(), &self.author_signature)
    }

    /// Leaf hash in the Merkle tree; also used as the transaction id.
    pub fn id(&self) -> Digest {
        double_hash(&encode_tx(self))
    }
}

impl Canonical for Transaction {
    fn encode_into(&self, w: &mut Writer) {
        self.encode_unsigned(w);
        self.author_signature.encode_into(w);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let kind = TxKind::from_tag(r.u8()?)?;
        let author = ParticipantId::decode_from(r)?;
        let nonce = r.u64()?;
        let payload = r.bytes()?.to_vec();
        let author_signature = Signature::decode_from(r)?;
        Ok(Transaction {
            kind,
            author,
            nonce,
            payload,
            author_signature,
        })
    }
}

pub fn encode_tx(tx: &Transaction) -> Vec<u8> {
    tx.to_canonical_bytes()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub version: u32,
    pub prev_hash: Digest,
    pub merkle_root: Digest,
    pub height: u64,
    /// Simulated milliseconds (ticks).
    pub timestamp: u64,
    pub miner: ParticipantId,
}

impl Canonical for BlockHeader {
    fn encode_into(&self, w: &mut Writer) {
        w.u32(self.version)
            .fixed(self.prev_hash.as_bytes())
            .fixed(self.merkle_root.as_bytes())
            .u64(self.height)
            .u64(self.timestamp);
        self.miner.encode_into(w);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(BlockHeader {
            version: r.u32()?,
            prev_hash: Digest(r.array()?),
            merkle_root: Digest(r.array()?),
            height: r.u64()?,
            timestamp: r.u64()?,
            miner: ParticipantId::decode_from(r)?,
        })
    }
}

pub fn encode_header(header: &BlockHeader) -> Vec<u8> {
    header.to_canonical_bytes()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub tx_count: u32,
    pub transactions: Vec<Transaction>,
    pub miner_signature: Signature,
}

impl Block {
    pub fn id(&self) -> Digest {
        double_hash(&encode_header(&self.header))
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    /// Miner signs the block id.
    pub fn sign(&mut self, miner: &Keypair) {
        self.miner_signature = miner.sign(self.id().as_bytes());
    }

    pub fn verify_miner_signature(&self) -> bool {
        crate::registry::verify_signed_by(&self.header.miner, self.id().as_bytes(), &self.miner_signature)
    }
}

impl Canonical for Block {
    fn encode_into(&self, w: &mut Writer) {
        self.header.encode_into(w);
        self.miner_signature.encode_into(w);
        w.u32(self.tx_count);
        for tx in &self.transactions {
            w.bytes(&encode_tx(tx));
        }
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let header = BlockHeader::decode_from(r)?;
        let miner_signature = Signature::decode_from(r)?;
        let tx_count = r.u32()?;
        // Each frame takes at least its 4-byte length; bound the allocation.
        let mut transactions = Vec::with_capacity((tx_count as usize).min(r.remaining() / 4));
        for _ in 0..tx_count {
            let frame = r.bytes()?;
            transactions.push(Transaction::from_canonical_bytes(frame)?);
        }
        Ok(Block {
            header,
            tx_count,
            transactions,
            miner_signature,
        })
    }
}

pub fn encode_block(block: &Block) -> Vec<u8> {
    block.to_canonical_bytes()
}

pub fn decode_block(bytes: &[u8]) -> Result<Block, DecodeError> {
    Block::from_canonical_bytes(bytes)
}

/// Root of the Merkle tree over `double_hash(encode_tx(tx))` leaves.
pub fn merkle_root(transactions: &[Transaction]) -> Result<Digest, BuildError> {
    let leaves: Vec<Digest> = transactions.iter().map(Transaction::id).collect();
    merkle_root_of_leaves(&leaves).ok_or(BuildError::EmptyTransactionList)
}

/// Builds an unsigned child of `parent`.
pub fn build_block(
    parent: &Block,
    transactions: Vec<Transaction>,
    miner: ParticipantId,
    timestamp: u64,
) -> Result<Block, BuildError> {
    let merkle_root = merkle_root(&transactions)?;
    if timestamp < parent.header.timestamp {
        return Err(BuildError::NonMonotonicTimestamp {
            parent: parent.header.timestamp,
            timestamp,
        });
    }
    Ok(Block {
        header: BlockHeader {
            version: BLOCK_VERSION,
            prev_hash: parent.id(),
            merkle_root,
            height: parent.header.height + 1,
            timestamp,
            miner,
        },
        tx_count: transactions.len() as u32,
        transactions,
        miner_signature: Signature::none(),
    })
}

/// A founding participant listed in the genesis block.
#[derive(Debug, Clone)]
pub struct GenesisMember {
    pub id: ParticipantId,
    pub role: Role,
    pub rights: Rights,
}

/// Builds the height-0 block: one `PermissionGrant` per member, all
/// granted and signed by `founder`, who must be the first member. The
/// result depends only on its inputs.
pub fn build_genesis(founder: &Keypair, members: &[GenesisMember]) -> Result<Block, BuildError> {
    let transactions: Vec<Transaction> = members
        .iter()
        .enumerate()
        .map(|(nonce, m)| {
            let grant = Permission {
                subject: m.id,
                role: m.role,
                rights: m.rights,
                grantor: founder.id(),
            };
            Transaction::new_signed(TxKind::PermissionGrant, grant.to_canonical_bytes(), nonce as u64, founder)
        })
        .collect();
    let mut block = Block {
        header: BlockHeader {
            version: BLOCK_VERSION,
            prev_hash: Digest::ZERO,
            merkle_root: merkle_root(&transactions)?,
            height: 0,
            timestamp: 0,
            miner: founder.id(),
        },
        tx_count: transactions.len() as u32,
        transactions,
        miner_signature: Signature::none(),
    };
    block.sign(founder);
    Ok(block)
}

/// An ordered list of blocks starting at genesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    blocks: Vec<Block>,
}

impl Chain {
    pub fn from_genesis(genesis: Block) -> Self {
        Chain { blocks: vec![genesis] }
    }

    /// Wraps blocks without validating them; see [`validate_chain`].
    pub fn from_blocks(blocks: Vec<Block>) -> Option<Self> {
        (!blocks.is_empty()).then_some(Chain { blocks })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn genesis(&self) -> &Block {
        &self.blocks[0]
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain is never empty")
    }

    pub fn height(&self) -> u64 {
        self.tip().header.height
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, height: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(height).ok()?)
    }

    /// Appends without validation. Callers validate first.
    pub fn push(&mut self, block: Block) {
        self.blocks.push(block);
    }

    /// Drops every block above `height`.
    pub fn truncate(&mut self, height: u64) {
        self.blocks.truncate(height as usize + 1);
    }

    pub fn transactions(&self) -> impl Iterator<Item = (u64, &Transaction)> {
        self.blocks
            .iter()
            .flat_map(|b| b.transactions.iter().map(move |tx| (b.header.height, tx)))
    }

    /// Smallest nonce not yet used by `author` on this chain.
    pub fn next_nonce(&self, author: &ParticipantId) -> u64 {
        self.transactions()
            .filter(|(_, tx)| tx.author == *author)
            .map(|(_, tx)| tx.nonce + 1)
            .max()
            .unwrap_or(0)
    }
}
