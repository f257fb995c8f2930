//! Round-robin block production under a mining-diversity rule.
//!
//! With `M` permitted miners and diversity `d`, the window is
//! `ceil(d * M)`: a miner that produced any of the previous `window - 1`
//! non-genesis blocks may not produce the next one. The designated proposer
//! for height `h` is `miners[(h - 1) mod M]`, or the next eligible miner in
//! registration order when that one is not eligible. A single validator,
//! the next active miner after the proposer, approves each block.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ledger::{build_block, validate_block, Block, BuildError, Chain, Digest, Transaction, ValidationError};
use crate::registry::{verify_signed_by, Keypair, ParticipantId, Signature};

/// Mining diversity as an exact fraction in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiversityRule {
    num: u64,
    den: u64,
}

impl DiversityRule {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        (den > 0 && num <= den).then_some(DiversityRule { num, den })
    }

    /// Three quarters, the usual setting for a five-miner deployment.
    pub fn default_075() -> Self {
        DiversityRule { num: 3, den: 4 }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `ceil(d * miner_count)`.
    pub fn window(&self, miner_count: usize) -> usize {
        let m = miner_count as u64;
        (self.num * m).div_ceil(self.den) as usize
    }
}

impl Default for DiversityRule {
    fn default() -> Self {
        Self::default_075()
    }
}

impl FromStr for DiversityRule {
    type Err = String;

    /// Parses a decimal such as `0.75` or `1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("bad diversity `{s}`, expected a decimal in [0, 1]");
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() || frac.len() > 9 {
            return Err(bad());
        }
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int) || !all_digits(frac) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac_v)).ok_or_else(bad)?;
        DiversityRule::new(num, den).ok_or_else(bad)
    }
}

impl fmt::Display for DiversityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

/// Permitted miners in registration order, with a liveness flag each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinerSet {
    miners: Vec<ParticipantId>,
    active: Vec<bool>,
}

impl MinerSet {
    /// All miners start active. Returns `None` for an empty list.
    pub fn new(miners: Vec<ParticipantId>) -> Option<Self> {
        if miners.is_empty() {
            return None;
        }
        let active = vec![true; miners.len()];
        Some(MinerSet { miners, active })
    }

    pub fn len(&self) -> usize {
        self.miners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.miners.is_empty()
    }

    pub fn miners(&self) -> &[ParticipantId] {
        &self.miners
    }

    pub fn index_of(&self, id: &ParticipantId) -> Option<usize> {
        self.miners.iter().position(|m| m == id)
    }

    pub fn is_permitted(&self, id: &ParticipantId) -> bool {
        self.index_of(id).is_some()
    }

    pub fn is_active(&self, id: &ParticipantId) -> bool {
        self.index_of(id).is_some_and(|i| self.active[i])
    }

    pub fn set_active(&mut self, id: &ParticipantId, active: bool) -> bool {
        match self.index_of(id) {
            Some(i) => {
                self.active[i] = active;
                true
            }
            None => false,
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Same miners with every liveness flag set.
    pub fn all_active(&self) -> MinerSet {
        MinerSet {
            miners: self.miners.clone(),
            active: vec![true; self.miners.len()],
        }
    }
}

/// Miners allowed to produce the block after the tip of `history`.
///
/// A miner is eligible iff it is permitted, active, and mined none of the
/// blocks at heights `[max(1, h - window + 1), h - 1]`, where `h` is the
/// next height. Genesis never counts.
pub fn eligible_miners(history: &[Block], miners: &MinerSet, rule: &DiversityRule) -> BTreeSet<ParticipantId> {
    let next = history.last().map_or(0, |b| b.header.height + 1);
    let window = rule.window(miners.len()) as u64;
    let lo = (next + 1).saturating_sub(window).max(1);
    let recent: BTreeSet<ParticipantId> = history
        .iter()
        .rev()
        .take_while(|b| b.header.height >= lo)
        .filter(|b| b.header.height >= 1)
        .map(|b| b.header.miner)
        .collect();
    miners
        .miners
        .iter()
        .zip(&miners.active)
        .filter(|(id, active)| **active && !recent.contains(id))
        .map(|(id, _)| *id)
        .collect()
}

/// Round-robin proposer for `height`, scanning forward past ineligible
/// miners. `None` when nobody is eligible.
pub fn designated_proposer(height: u64, miners: &MinerSet, eligible: &BTreeSet<ParticipantId>) -> Option<ParticipantId> {
    let m = miners.len();
    let start = (height.wrapping_sub(1) % m as u64) as usize;
    (0..m)
        .map(|k| miners.miners[(start + k) % m])
        .find(|id| eligible.contains(id))
}

/// The next active miner after `proposer` in registration order.
pub fn designated_validator(proposer: &ParticipantId, miners: &MinerSet) -> Option<ParticipantId> {
    let m = miners.len();
    let start = miners.index_of(proposer)?;
    (1..m)
        .map(|k| (start + k) % m)
        .find(|&i| miners.active[i])
        .map(|i| miners.miners[i])
}

/// A validator's signed acceptance of a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Approval {
    pub validator: ParticipantId,
    pub block_id: Digest,
    pub signature: Signature,
}

impl Approval {
    fn message(block_id: &Digest) -> Vec<u8> {
        let mut m = b"approve:".to_vec();
        m.extend_from_slice(block_id.as_bytes());
        m
    }

    pub fn verify(&self) -> bool {
        verify_signed_by(&self.validator, &Self::message(&self.block_id), &self.signature)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("proposer may not validate its own block")]
    SelfValidation,
    #[error("validator {0:?} does not hold the Mine right")]
    NotAMiner(ParticipantId),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Runs block validation on behalf of `validator` and signs an approval.
pub fn approve_block(
    block: &Block,
    validator: &Keypair,
    history: &[Block],
    rule: &DiversityRule,
    miners: &MinerSet,
) -> Result<Approval, Rejection> {
    let id = validator.id();
    if !miners.is_permitted(&id) {
        return Err(Rejection::NotAMiner(id));
    }
    if id == block.header.miner {
        return Err(Rejection::SelfValidation);
    }
    validate_block(block, history, rule, miners)?;
    let block_id = block.id();
    Ok(Approval {
        validator: id,
        block_id,
        signature: validator.sign(&Approval::message(&block_id)),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForkChoiceError {
    #[error("no valid candidate chain")]
    NoValidCandidate,
}

/// Longest chain wins; equal lengths go to the smaller tip id. The order
/// is total, so the result does not depend on the order of `candidates`.
pub fn fork_choice(candidates: &[Chain]) -> Result<&Chain, ForkChoiceError> {
    candidates
        .iter()
        .min_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.tip().id().cmp(&b.tip().id())))
        .ok_or(ForkChoiceError::NoValidCandidate)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsensusError {
    #[error("consensus stalled: no eligible proposer or validator")]
    ConsensusStalled,
    #[error("block rejected: {0}")]
    Rejected(#[from] Rejection),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("no key held for miner {0:?}")]
    MissingKey(ParticipantId),
}

/// What a successful commit looked like.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commit {
    pub height: u64,
    pub proposer: ParticipantId,
    pub approval: Approval,
}

/// In-process consensus over a known set of miner keys: pick the proposer,
/// build and sign the block, have the designated validator approve it, and
/// append. The simulator runs the same steps as messages between nodes.
#[derive(Debug, Clone)]
pub struct LocalConsensus {
    pub miners: MinerSet,
    pub rule: DiversityRule,
    keys: BTreeMap<ParticipantId, Keypair>,
}

impl LocalConsensus {
    pub fn new(miners: MinerSet, rule: DiversityRule, keys: impl IntoIterator<Item = Keypair>) -> Self {
        let keys = keys.into_iter().map(|k| (k.id(), k)).collect();
        LocalConsensus { miners, rule, keys }
    }

    pub fn set_active(&mut self, id: &ParticipantId, active: bool) -> bool {
        self.miners.set_active(id, active)
    }

    fn key(&self, id: &ParticipantId) -> Result<&Keypair, ConsensusError> {
        self.keys.get(id).ok_or(ConsensusError::MissingKey(*id))
    }

    /// Commits `transactions` as one new block at `tip timestamp + 1`.
    pub fn commit(&self, chain: &mut Chain, transactions: Vec<Transaction>) -> Result<Commit, ConsensusError> {
        let height = chain.height() + 1;
        let eligible = eligible_miners(chain.blocks(), &self.miners, &self.rule);
        let proposer = designated_proposer(height, &self.miners, &eligible).ok_or(ConsensusError::ConsensusStalled)?;
        let validator = designated_validator(&proposer, &self.miners).ok_or(ConsensusError::ConsensusStalled)?;
        let mut block = build_block(chain.tip(), transactions, proposer, chain.tip().header.timestamp + 1)?;
        block.sign(self.key(&proposer)?);
        let approval = approve_block(&block, self.key(&validator)?, chain.blocks(), &self.rule, &self.miners)?;
        chain.push(block);
        Ok(Commit {
            height,
            proposer,
            approval,
        })
    }
}
