//! Per-node append-only chain file.
//!
//! `chain.dat` is a sequence of frames, each a 4-byte little-endian length
//! followed by one encoded block.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::codec::{DecodeError, Reader};
use super::{decode_block, encode_block, Block, Chain};

pub const CHAIN_FILE: &str = "chain.dat";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt chain file: {0}")]
    Decode(#[from] DecodeError),
    #[error("chain file holds no blocks")]
    Empty,
}

pub fn encode_frame(block: &Block, out: &mut Vec<u8>) {
    let body = encode_block(block);
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(&body);
}

/// Serializes a whole chain in `chain.dat` form.
pub fn encode_chain(chain: &Chain) -> Vec<u8> {
    let mut out = Vec::new();
    for b in chain.blocks() {
        encode_frame(b, &mut out);
    }
    out
}

pub fn decode_chain(bytes: &[u8]) -> Result<Chain, StoreError> {
    let mut r = Reader::new(bytes);
    let mut blocks = Vec::new();
    while r.remaining() > 0 {
        blocks.push(decode_block(r.bytes()?)?);
    }
    Chain::from_blocks(blocks).ok_or(StoreError::Empty)
}

/// `chain.dat` inside one node directory.
#[derive(Debug, Clone)]
pub struct ChainStore {
    path: PathBuf,
}

impl ChainStore {
    pub fn new(node_dir: impl AsRef<Path>) -> Self {
        ChainStore {
            path: node_dir.as_ref().join(CHAIN_FILE),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn exists(&self) -> bool {
        self.path.exists()
    }

    fn io_err(&self, source: io::Error) -> StoreError {
        StoreError::Io {
            path: self.path.clone(),
            source,
        }
    }

    pub fn load(&self) -> Result<Chain, StoreError> {
        let bytes = fs::read(&self.path).map_err(|e| self.io_err(e))?;
        decode_chain(&bytes)
    }

    /// Appends blocks to the end of the file; existing bytes are untouched.
    pub fn append(&self, blocks: &[Block]) -> Result<(), StoreError> {
        let mut buf = Vec::new();
        for b in blocks {
            encode_frame(b, &mut buf);
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| self.io_err(e))?;
        f.write_all(&buf).map_err(|e| self.io_err(e))
    }

    /// Rewrites the whole file. Only needed after a fork switch.
    pub fn replace(&self, chain: &Chain) -> Result<(), StoreError> {
        fs::write(&self.path, encode_chain(chain)).map_err(|e| self.io_err(e))
    }

    /// Brings the file in line with `chain`: appends when the stored chain is
    /// a prefix of it, rewrites otherwise.
    pub fn sync(&self, chain: &Chain) -> Result<(), StoreError> {
        if !self.exists() {
            return self.replace(chain);
        }
        let stored = self.load()?;
        let n = stored.len();
        if n <= chain.len() && stored.blocks() == &chain.blocks()[..n] {
            self.append(&chain.blocks()[n..])
        } else {
            self.replace(chain)
        }
    }
}
