//! Deterministic discrete-event simulation of a multi-node deployment.
//!
//! Every roster node keeps its own chain, mempool and local records and
//! talks to the others only through messages on a virtual clock. A message
//! sent at tick `t` arrives at `t + 1 + latency` (plus seeded jitter when
//! enabled), self-deliveries included. One transaction goes through three
//! hops: it is announced to every node, the designated proposer sends a
//! block to its validator, and the validator broadcasts the approved
//! block. With zero latency and idle miners that is three ticks.
//!
//! Events run in `(tick, insertion sequence)` order. All randomness comes
//! from a ChaCha generator seeded by the scenario, so a run is a pure
//! function of its scenario.

mod report;
mod scenario;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::consensus::{
    approve_block, designated_proposer, designated_validator, eligible_miners, fork_choice, Approval, DiversityRule,
    MinerSet,
};
use crate::hrm::{self, EmploymentContract, HireDecision, HrEventRecord};
use crate::ledger::codec::Canonical;
use crate::ledger::{build_block, build_genesis, validate_block, validate_chain, Block, Chain, Digest, GenesisMember, Transaction, TxKind};
use crate::record::{Record, Value};
use crate::recruit::{
    rank_with_records, ApplicantProfile, AuthorityStore, Claim, ClaimKind, RankedList, RequirementItem,
    RequirementSpec, VerificationRecord,
};
use crate::registry::{authority_for, Directory, Keypair, ParticipantId, Permission, Rights};

pub use report::{MessageStats, NodeSummary, Ranking, RejectedAction, SimReport, StallInterval, TxTrace};
pub use scenario::{Action, Inactivity, Scenario, Step, DEFAULT_TICK_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("malformed scenario: {0}")]
    MalformedScenario(String),
    #[error("`{0}` is not a miner in this scenario")]
    UnknownMiner(String),
    #[error("transaction {0} was not committed")]
    TxNotCommitted(Digest),
}

/// Adds an offline window `[from, to)` for `miner`; `to = None` never ends.
pub fn inject_inactivity(mut scenario: Scenario, miner: &str, from: u64, to: Option<u64>) -> Result<Scenario, SimError> {
    if !scenario.miners.iter().any(|m| m == miner) {
        return Err(SimError::UnknownMiner(miner.to_owned()));
    }
    scenario.inactivity.push(Inactivity {
        miner: miner.to_owned(),
        from,
        to,
    });
    Ok(scenario)
}

/// Commit tick minus announce tick.
pub fn measure_latency(report: &SimReport, tx_id: &Digest) -> Result<u64, SimError> {
    report
        .txs
        .iter()
        .find(|t| t.id == *tx_id)
        .and_then(|t| Some(t.commit_tick? - t.announce_tick))
        .ok_or(SimError::TxNotCommitted(*tx_id))
}

/// Genesis for a scenario: miners first in rotation order (the first one
/// founds the chain), then the other nodes, then node-less applicants.
pub fn scenario_genesis(scenario: &Scenario) -> Block {
    let founder = &scenario.node(&scenario.miners[0]).expect("checked").key;
    let mut order: Vec<_> = scenario.miners.iter().map(|m| scenario.node(m).expect("checked")).collect();
    order.extend(scenario.roster.entries().iter().filter(|e| !scenario.miners.contains(&e.name)));
    order.extend(&scenario.applicants);
    let members: Vec<GenesisMember> = order
        .into_iter()
        .map(|e| {
            let mut rights = Rights::CONNECT | Rights::SEND;
            if scenario.miners.contains(&e.name) {
                rights |= Rights::MINE;
            }
            if e.role.is_authority() {
                rights |= Rights::ATTEST;
            }
            GenesisMember {
                id: e.id(),
                role: e.role,
                rights,
            }
        })
        .collect();
    build_genesis(founder, &members).expect("at least one member")
}

#[derive(Debug, Clone)]
enum Msg {
    Tx(Transaction),
    Validate(Block),
    Commit(Block, Approval),
    VerifyRequest { applicant: ParticipantId, claim: Claim },
    VerifyResponse(VerificationRecord),
    SyncRequest,
    SyncResponse(Chain),
}

#[derive(Debug, Clone)]
enum Event {
    Deliver { from: usize, to: usize, msg: Msg },
    MinerDown(ParticipantId),
    MinerUp(ParticipantId),
    Client(usize, Action),
    Timeout { node: usize, height: u64 },
}

struct RankRound {
    profiles: Vec<ApplicantProfile>,
    spec: RequirementSpec,
    /// One slot per claim, keyed by (applicant, evidence hash, attester).
    slots: Vec<(ParticipantId, Digest, ParticipantId, Option<VerificationRecord>)>,
    started: u64,
}

impl RankRound {
    fn outstanding(&self) -> usize {
        self.slots.iter().filter(|s| s.3.is_none()).count()
    }
}

struct Node {
    name: String,
    key: Keypair,
    chain: Chain,
    /// Ids of transactions on `chain`.
    known: BTreeSet<Digest>,
    mempool: Vec<Transaction>,
    next_nonce: u64,
    /// Height of an outstanding proposal.
    pending: Option<u64>,
    store: AuthorityStore,
    profiles: Vec<ApplicantProfile>,
    requirements: Vec<RequirementItem>,
    round: Option<RankRound>,
    ranked: Option<RankedList>,
}

impl Node {
    fn nonce(&mut self) -> u64 {
        let n = self.next_nonce.max(self.chain.next_nonce(&self.key.id()));
        self.next_nonce = n + 1;
        n
    }

    fn reindex(&mut self) {
        self.known = self.chain.transactions().map(|(_, tx)| tx.id()).collect();
        let known = &self.known;
        self.mempool.retain(|tx| !known.contains(&tx.id()));
    }
}

struct Sim<'a> {
    sc: &'a Scenario,
    rule: DiversityRule,
    nodes: Vec<Node>,
    index: BTreeMap<ParticipantId, usize>,
    miners: MinerSet,
    down: BTreeMap<ParticipantId, u32>,
    queue: BTreeMap<(u64, u64), Event>,
    seq: u64,
    rng: ChaCha8Rng,
    now: u64,
    traces: Vec<TxTrace>,
    trace_of: BTreeMap<Digest, usize>,
    stalls: Vec<StallInterval>,
    rejected_blocks: u64,
    rejected_actions: Vec<RejectedAction>,
    rankings: Vec<Ranking>,
    stats: MessageStats,
}

/// Runs `scenario` to quiescence or its tick limit.
pub fn run(scenario: &Scenario) -> Result<SimReport, SimError> {
    scenario.check().map_err(SimError::MalformedScenario)?;
    let mut sim = Sim::new(scenario);
    let mut hit_limit = false;
    while let Some((&(tick, _), _)) = sim.queue.first_key_value() {
        if tick > scenario.tick_limit {
            hit_limit = true;
            break;
        }
        sim.now = tick;
        while let Some(entry) = sim.queue.first_entry() {
            if entry.key().0 != tick {
                break;
            }
            let event = entry.remove();
            sim.handle(event);
        }
        sim.end_of_tick();
    }
    Ok(sim.finish(hit_limit))
}

impl<'a> Sim<'a> {
    fn new(sc: &'a Scenario) -> Self {
        let genesis = sc
            .base
            .clone()
            .unwrap_or_else(|| Chain::from_genesis(scenario_genesis(sc)));
        let dir = Directory::from_chain(&genesis);
        let miners = MinerSet::new(dir.miners()).expect("at least one miner");
        let nodes: Vec<Node> = sc
            .roster
            .entries()
            .iter()
            .map(|e| Node {
                name: e.name.clone(),
                key: e.key.clone(),
                known: genesis.transactions().map(|(_, tx)| tx.id()).collect(),
                chain: genesis.clone(),
                mempool: Vec::new(),
                next_nonce: 0,
                pending: None,
                store: AuthorityStore::new(),
                profiles: Vec::new(),
                requirements: Vec::new(),
                round: None,
                ranked: None,
            })
            .collect();
        let index = nodes.iter().enumerate().map(|(i, n)| (n.key.id(), i)).collect();
        let mut sim = Sim {
            sc,
            rule: sc.diversity,
            nodes,
            index,
            miners,
            down: BTreeMap::new(),
            queue: BTreeMap::new(),
            seq: 0,
            rng: ChaCha8Rng::seed_from_u64(sc.seed),
            now: 0,
            traces: Vec::new(),
            trace_of: BTreeMap::new(),
            stalls: Vec::new(),
            rejected_blocks: 0,
            rejected_actions: Vec::new(),
            rankings: Vec::new(),
            stats: MessageStats::default(),
        };
        for w in &sc.inactivity {
            let id = sc.node(&w.miner).expect("checked").id();
            sim.schedule(w.from, Event::MinerDown(id));
            if let Some(to) = w.to {
                sim.schedule(to, Event::MinerUp(id));
            }
        }
        for step in &sc.script {
            let node = sim.node_index(step.action.actor());
            sim.schedule(step.tick, Event::Client(node, step.action.clone()));
        }
        sim
    }

    fn node_index(&self, name: &str) -> usize {
        self.sc.roster.index_of(name).expect("checked")
    }

    fn id_of(&self, name: &str) -> ParticipantId {
        self.sc.participant(name).expect("checked").id()
    }

    fn schedule(&mut self, tick: u64, event: Event) {
        self.queue.insert((tick, self.seq), event);
        self.seq += 1;
    }

    fn delay(&self) -> u64 {
        1 + self.sc.latency
    }

    fn send(&mut self, from: usize, to: usize, msg: Msg) {
        self.stats.sent += 1;
        if from != to && self.sc.loss_ppm > 0 && self.rng.gen_range(0..1_000_000) < self.sc.loss_ppm {
            self.stats.dropped += 1;
            return;
        }
        let jitter = if self.sc.jitter > 0 {
            self.rng.gen_range(0..=self.sc.jitter)
        } else {
            0
        };
        self.schedule(self.now + self.delay() + jitter, Event::Deliver { from, to, msg });
    }

    fn broadcast(&mut self, from: usize, msg: Msg) {
        for to in 0..self.nodes.len() {
            self.send(from, to, msg.clone());
        }
    }

    fn announce(&mut self, from: usize, tx: Transaction) {
        let id = tx.id();
        self.trace_of.insert(id, self.traces.len());
        self.traces.push(TxTrace {
            id,
            kind: tx.kind,
            author: self.nodes[from].name.clone(),
            announce_tick: self.now,
            commit_tick: None,
            height: None,
        });
        self.broadcast(from, Msg::Tx(tx));
    }

    fn reject_action(&mut self, node: usize, action: &Action, reason: String) {
        self.rejected_actions.push(RejectedAction {
            tick: self.now,
            node: self.nodes[node].name.clone(),
            action: action.to_string(),
            reason,
        });
    }

    fn handle(&mut self, event: Event) {
        match event {
            Event::Deliver { from, to, msg } => {
                self.stats.delivered += 1;
                self.deliver(from, to, msg);
            }
            Event::MinerDown(id) => {
                *self.down.entry(id).or_default() += 1;
                self.miners.set_active(&id, false);
            }
            Event::MinerUp(id) => {
                let count = self.down.entry(id).or_default();
                *count = count.saturating_sub(1);
                if *count == 0 {
                    self.miners.set_active(&id, true);
                }
            }
            Event::Client(node, action) => self.client(node, action),
            Event::Timeout { node, height } => {
                let n = &mut self.nodes[node];
                if n.pending == Some(height) && n.chain.height() < height {
                    n.pending = None;
                }
            }
        }
    }

    fn deliver(&mut self, from: usize, to: usize, msg: Msg) {
        match msg {
            Msg::Tx(tx) => {
                let node = &mut self.nodes[to];
                let id = tx.id();
                if tx.verify_signature() && !node.known.contains(&id) && !node.mempool.iter().any(|t| t.id() == id) {
                    node.mempool.push(tx);
                }
            }
            Msg::Validate(block) => self.on_validate(to, block),
            Msg::Commit(block, approval) => self.on_commit(from, to, block, approval),
            Msg::VerifyRequest { applicant, claim } => {
                let node = &self.nodes[to];
                let verdict = node.store.lookup(&applicant, claim.kind, &claim.evidence_hash);
                let record = VerificationRecord::signed(applicant, claim.evidence_hash, verdict, &node.key);
                let nonce = self.nodes[to].nonce();
                let tx = record.to_transaction(&self.nodes[to].key, nonce);
                self.announce(to, tx);
                self.send(to, from, Msg::VerifyResponse(record));
            }
            Msg::VerifyResponse(record) => {
                if !record.verify() {
                    return;
                }
                if let Some(round) = self.nodes[to].round.as_mut() {
                    if let Some(slot) = round
                        .slots
                        .iter_mut()
                        .find(|s| s.0 == record.subject && s.1 == record.claim_ref && s.2 == record.attester && s.3.is_none())
                    {
                        slot.3 = Some(record);
                    }
                }
                self.try_finish_round(to);
            }
            Msg::SyncRequest => {
                let chain = self.nodes[to].chain.clone();
                self.send(to, from, Msg::SyncResponse(chain));
            }
            Msg::SyncResponse(candidate) => self.on_sync(to, candidate),
        }
    }

    fn on_validate(&mut self, me: usize, block: Block) {
        let id = self.nodes[me].key.id();
        if !self.miners.is_active(&id) {
            return;
        }
        let node = &self.nodes[me];
        if designated_validator(&block.header.miner, &self.miners) != Some(id)
            || block.header.prev_hash != node.chain.tip().id()
        {
            self.rejected_blocks += 1;
            return;
        }
        match approve_block(&block, &node.key, node.chain.blocks(), &self.rule, &self.miners) {
            Ok(approval) => self.broadcast(me, Msg::Commit(block, approval)),
            Err(_) => self.rejected_blocks += 1,
        }
    }

    fn on_commit(&mut self, from: usize, me: usize, block: Block, approval: Approval) {
        let block_id = block.id();
        if !approval.verify()
            || approval.block_id != block_id
            || approval.validator == block.header.miner
            || !self.miners.is_permitted(&approval.validator)
        {
            self.rejected_blocks += 1;
            return;
        }
        let node = &self.nodes[me];
        if node.chain.get(block.header.height).is_some_and(|b| b.id() == block_id) {
            return;
        }
        if block.header.prev_hash == node.chain.tip().id() {
            if validate_block(&block, node.chain.blocks(), &self.rule, &self.miners).is_ok() {
                self.apply(me, block);
            } else {
                self.rejected_blocks += 1;
            }
        } else if block.header.height > node.chain.height() {
            self.send(me, from, Msg::SyncRequest);
        }
    }

    fn apply(&mut self, me: usize, block: Block) {
        let height = block.header.height;
        self.mark_committed(&block);
        let node = &mut self.nodes[me];
        for tx in &block.transactions {
            node.known.insert(tx.id());
        }
        let known = &node.known;
        node.mempool.retain(|tx| !known.contains(&tx.id()));
        if node.pending.is_some_and(|h| h <= height) {
            node.pending = None;
        }
        node.chain.push(block);
    }

    fn mark_committed(&mut self, block: &Block) {
        for tx in &block.transactions {
            if let Some(&i) = self.trace_of.get(&tx.id()) {
                let t = &mut self.traces[i];
                if t.commit_tick.is_none() {
                    t.commit_tick = Some(self.now);
                    t.height = Some(block.header.height);
                }
            }
        }
    }

    fn on_sync(&mut self, me: usize, candidate: Chain) {
        if validate_chain(&candidate, &self.rule, &self.miners).is_err() {
            self.rejected_blocks += 1;
            return;
        }
        let own = &self.nodes[me].chain;
        if candidate.genesis() != own.genesis() {
            return;
        }
        let pair = [own.clone(), candidate];
        let better = fork_choice(&pair).expect("two candidates") == &pair[1];
        if !better {
            return;
        }
        let [old, new] = pair;
        for b in new.blocks() {
            self.mark_committed(b);
        }
        let node = &mut self.nodes[me];
        node.chain = new;
        let orphaned: Vec<Transaction> = old.blocks()[1..]
            .iter()
            .flat_map(|b| b.transactions.iter().cloned())
            .collect();
        node.mempool.splice(0..0, orphaned);
        node.reindex();
        let mut seen = BTreeSet::new();
        node.mempool.retain(|tx| seen.insert(tx.id()));
        if node.pending.is_some_and(|h| h <= node.chain.height()) {
            node.pending = None;
        }
    }

    fn end_of_tick(&mut self) {
        for i in 0..self.nodes.len() {
            self.maybe_propose(i);
        }
        self.track_stall();
    }

    fn maybe_propose(&mut self, i: usize) {
        let node = &self.nodes[i];
        let id = node.key.id();
        if !self.miners.is_active(&id) || node.mempool.is_empty() {
            return;
        }
        let height = node.chain.height() + 1;
        if node.pending.is_some_and(|h| h >= height) {
            return;
        }
        let eligible = eligible_miners(node.chain.blocks(), &self.miners, &self.rule);
        if designated_proposer(height, &self.miners, &eligible) != Some(id) {
            return;
        }
        let Some(validator) = designated_validator(&id, &self.miners) else {
            return;
        };
        let txs: Vec<Transaction> = node.mempool.iter().take(self.sc.batch).cloned().collect();
        let mut block = build_block(node.chain.tip(), txs, id, self.now).expect("non-empty, monotonic");
        block.sign(&node.key);
        self.nodes[i].pending = Some(height);
        let to = self.index[&validator];
        self.send(i, to, Msg::Validate(block));
        let deadline = self.now + 2 * (self.delay() + self.sc.jitter) + 1;
        self.schedule(deadline, Event::Timeout { node: i, height });
    }

    /// Stalled while transactions wait and the best chain has no eligible
    /// proposer or no validator.
    fn track_stall(&mut self) {
        let waiting = self.traces.iter().any(|t| t.commit_tick.is_none());
        let chains: Vec<Chain> = self.nodes.iter().map(|n| n.chain.clone()).collect();
        let best = fork_choice(&chains).expect("nodes exist");
        let eligible = eligible_miners(best.blocks(), &self.miners, &self.rule);
        let height = best.height() + 1;
        let blocked = match designated_proposer(height, &self.miners, &eligible) {
            None => true,
            Some(p) => designated_validator(&p, &self.miners).is_none(),
        };
        let stalled = waiting && blocked;
        match self.stalls.last_mut() {
            Some(open) if open.end.is_none() => {
                if !stalled {
                    open.end = Some(self.now);
                }
            }
            _ if stalled => self.stalls.push(StallInterval {
                start: self.now,
                end: None,
            }),
            _ => {}
        }
    }

    fn client(&mut self, i: usize, action: Action) {
        match &action {
            Action::Record {
                applicant,
                kind,
                statement,
                ..
            } => {
                let applicant = self.id_of(applicant);
                self.nodes[i].store.insert(applicant, *kind, statement.clone());
            }
            Action::Claim {
                applicant,
                kind,
                issuer,
                statement,
                ..
            } => {
                let applicant = self.id_of(applicant);
                let issuer = issuer.as_deref().map_or(ParticipantId::ZERO, |n| self.id_of(n));
                let claim = Claim::new(*kind, issuer, statement.clone());
                let profiles = &mut self.nodes[i].profiles;
                match profiles.iter_mut().find(|p| p.applicant == applicant) {
                    Some(p) => p.claims.push(claim),
                    None => profiles.push(ApplicantProfile {
                        applicant,
                        claims: vec![claim],
                    }),
                }
            }
            Action::Require { item, .. } => self.nodes[i].requirements.push(item.clone()),
            Action::Rank { .. } => self.start_round(i, &action),
            Action::Hire {
                applicant,
                employee_terms,
                ..
            } => self.hire(i, &action, applicant, employee_terms),
            Action::Event {
                subject,
                kind,
                details,
                ..
            } => {
                let node = &self.nodes[i];
                let event = HrEventRecord::new_signed(self.id_of(subject), *kind, details.clone(), self.now, &node.key);
                if let Err(e) = hrm::check_hr_event(&event, &node.chain) {
                    return self.reject_action(i, &action, e.to_string());
                }
                let nonce = self.nodes[i].nonce();
                let tx = hrm::event_transaction(&event, &self.nodes[i].key, nonce);
                self.announce(i, tx);
            }
            Action::Grant {
                subject, role, rights, ..
            } => {
                let node = &self.nodes[i];
                let permission = Permission {
                    subject: self.id_of(subject),
                    role: *role,
                    rights: *rights,
                    grantor: node.key.id(),
                };
                let mut dir = Directory::from_chain(&node.chain);
                if let Err(e) = dir.apply_grant(&permission) {
                    return self.reject_action(i, &action, e.to_string());
                }
                let nonce = self.nodes[i].nonce();
                let tx = Transaction::new_signed(TxKind::PermissionGrant, permission.to_canonical_bytes(), nonce, &self.nodes[i].key);
                self.announce(i, tx);
            }
        }
    }

    fn start_round(&mut self, i: usize, action: &Action) {
        if self.nodes[i].round.is_some() {
            return self.reject_action(i, action, "a ranking is already in progress".into());
        }
        let node = &self.nodes[i];
        let dir = Directory::from_chain(&node.chain);
        let profiles = node.profiles.clone();
        let spec = RequirementSpec {
            company: node.key.id(),
            items: node.requirements.clone(),
        };
        let mut slots = Vec::new();
        let mut requests = Vec::new();
        for p in &profiles {
            for claim in &p.claims {
                let target = authority_for(claim.kind, &claim.issuer, &dir)
                    .ok()
                    .and_then(|a| self.index.get(&a).copied());
                let (attester, record) = match target {
                    Some(t) => {
                        requests.push((t, p.applicant, claim.clone()));
                        (self.nodes[t].key.id(), None)
                    }
                    None => (
                        ParticipantId::ZERO,
                        Some(VerificationRecord::unattested(p.applicant, claim.evidence_hash)),
                    ),
                };
                slots.push((p.applicant, claim.evidence_hash, attester, record));
            }
        }
        self.nodes[i].round = Some(RankRound {
            profiles,
            spec,
            slots,
            started: self.now,
        });
        for (to, applicant, claim) in requests {
            self.send(i, to, Msg::VerifyRequest { applicant, claim });
        }
        self.try_finish_round(i);
    }

    fn try_finish_round(&mut self, i: usize) {
        if self.nodes[i].round.as_ref().is_none_or(|r| r.outstanding() > 0) {
            return;
        }
        let round = self.nodes[i].round.take().expect("checked");
        let records: Vec<VerificationRecord> = round.slots.into_iter().filter_map(|s| s.3).collect();
        match rank_with_records(&round.profiles, &records, &round.spec) {
            Ok(list) => {
                self.rankings.push(Ranking {
                    started: round.started,
                    finished: self.now,
                    company: self.nodes[i].name.clone(),
                    list: list.clone(),
                });
                self.nodes[i].ranked = Some(list);
            }
            Err(e) => {
                let action = Action::Rank {
                    company: self.nodes[i].name.clone(),
                };
                self.reject_action(i, &action, e.to_string());
            }
        }
    }

    fn hire(&mut self, i: usize, action: &Action, applicant_name: &str, terms: &Record) {
        let applicant = self.sc.participant(applicant_name).expect("checked");
        let node = &self.nodes[i];
        let previous = node
            .profiles
            .iter()
            .find(|p| p.applicant == applicant.id())
            .and_then(|p| p.claims.iter().rev().find(|c| c.kind == ClaimKind::Employment))
            .map(|c| c.statement.clone())
            .unwrap_or_default();
        let sections = [
            Record::new().with("name", Value::Text(applicant.name.clone())),
            previous,
            Record::new().with("name", Value::Text(node.name.clone())),
            Record::new().with("hired_at", Value::Int(self.now as i64)),
            terms.clone(),
        ];
        let contract = EmploymentContract::new_signed(sections, &applicant.key, &node.key);
        let ranked = node.ranked.clone().unwrap_or_default();
        let decision = HireDecision {
            company: node.key.id(),
            applicant: applicant.id(),
            source_rank: ranked.position(&applicant.id()).map_or(0, |p| p as u32 + 1),
        };
        let dir = Directory::from_chain(&node.chain);
        if let Err(e) = hrm::check_hire(&decision, &contract, &ranked, &dir) {
            return self.reject_action(i, action, e.to_string());
        }
        let nonce = self.nodes[i].nonce();
        let tx = hrm::contract_transaction(&contract, &self.nodes[i].key, nonce);
        self.announce(i, tx);
    }

    fn finish(mut self, hit_tick_limit: bool) -> SimReport {
        let reactivation_pending = self.queue.values().any(|e| matches!(e, Event::MinerUp(_)));
        let permanent_stall = self.stalls.last().is_some_and(|s| s.end.is_none()) && !reactivation_pending;
        let names = self.sc.participants().map(|e| (e.id(), e.name.clone())).collect();
        let nodes = std::mem::take(&mut self.nodes)
            .into_iter()
            .map(|n| NodeSummary::new(n.name, n.chain))
            .collect();
        SimReport {
            seed: self.sc.seed,
            final_tick: self.now,
            hit_tick_limit,
            nodes,
            txs: self.traces,
            stalls: self.stalls,
            permanent_stall,
            rejected_blocks: self.rejected_blocks,
            rejected_actions: self.rejected_actions,
            rankings: self.rankings,
            messages: self.stats,
            names,
        }
    }
}

/// Miner keys of a scenario, for driving [`crate::consensus::LocalConsensus`]
/// over the same genesis.
pub fn miner_keys(scenario: &Scenario) -> Vec<Keypair> {
    scenario
        .miners
        .iter()
        .filter_map(|m| scenario.node(m))
        .map(|e| e.key.clone())
        .collect()
}
