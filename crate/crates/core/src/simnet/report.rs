use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::ledger::store::encode_chain;
use crate::ledger::{double_hash, Chain, Digest, TxKind};
use crate::recruit::io::export_ranked;
use crate::recruit::RankedList;
use crate::registry::ParticipantId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSummary {
    pub name: String,
    pub height: u64,
    pub tip: Digest,
    /// Digest of the node's `chain.dat` bytes.
    pub chain_digest: Digest,
    pub chain: Chain,
}

impl NodeSummary {
    pub fn new(name: String, chain: Chain) -> Self {
        NodeSummary {
            name,
            height: chain.height(),
            tip: chain.tip().id(),
            chain_digest: double_hash(&encode_chain(&chain)),
            chain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxTrace {
    pub id: Digest,
    pub kind: TxKind,
    pub author: String,
    pub announce_tick: u64,
    pub commit_tick: Option<u64>,
    pub height: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StallInterval {
    pub start: u64,
    /// `None` when the run ended stalled.
    pub end: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    pub started: u64,
    pub finished: u64,
    pub company: String,
    pub list: RankedList,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedAction {
    pub tick: u64,
    pub node: String,
    pub action: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MessageStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    pub seed: u64,
    pub final_tick: u64,
    pub hit_tick_limit: bool,
    /// In roster order.
    pub nodes: Vec<NodeSummary>,
    /// In announce order.
    pub txs: Vec<TxTrace>,
    pub stalls: Vec<StallInterval>,
    /// The run ended stalled with no miner due back.
    pub permanent_stall: bool,
    pub rejected_blocks: u64,
    pub rejected_actions: Vec<RejectedAction>,
    pub rankings: Vec<Ranking>,
    pub messages: MessageStats,
    pub names: BTreeMap<ParticipantId, String>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl SimReport {
    /// Every node ended with the same chain.
    pub fn converged(&self) -> bool {
        self.nodes.windows(2).all(|w| w[0].chain_digest == w[1].chain_digest)
    }

    pub fn node(&self, name: &str) -> Option<&NodeSummary> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn committed(&self) -> impl Iterator<Item = &TxTrace> {
        self.txs.iter().filter(|t| t.commit_tick.is_some())
    }

    pub fn name_of(&self, id: &ParticipantId) -> String {
        self.names.get(id).cloned().unwrap_or_else(|| id.to_string())
    }

    /// A short human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let committed = self.committed().count();
        let _ = writeln!(out, "seed {} ran to tick {}", self.seed, self.final_tick);
        if self.hit_tick_limit {
            let _ = writeln!(out, "stopped at the tick limit");
        }
        let _ = writeln!(out, "transactions: {} announced, {} committed", self.txs.len(), committed);
        let _ = writeln!(out, "rejected blocks: {}", self.rejected_blocks);
        for s in &self.stalls {
            match s.end {
                Some(end) => writeln!(out, "stalled from tick {} to {}", s.start, end),
                None => writeln!(out, "stalled from tick {} onwards", s.start),
            }
            .expect("string write");
        }
        if self.permanent_stall {
            let _ = writeln!(out, "PERMANENT STALL");
        }
        for r in &self.rejected_actions {
            let _ = writeln!(out, "rejected at tick {} on {}: {} ({})", r.tick, r.node, r.action, r.reason);
        }
        for n in &self.nodes {
            let _ = writeln!(out, "{:<12} height {:>4}  chain {}", n.name, n.height, n.chain_digest);
        }
        let _ = writeln!(out, "converged: {}", if self.converged() { "yes" } else { "no" });
        out
    }

    /// The full export: a `key: value` summary block, then one CSV table
    /// per `[section]`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "seed: {}", self.seed);
        let _ = writeln!(w, "final_tick: {}", self.final_tick);
        let _ = writeln!(w, "hit_tick_limit: {}", self.hit_tick_limit);
        let _ = writeln!(w, "permanent_stall: {}", self.permanent_stall);
        let _ = writeln!(w, "rejected_blocks: {}", self.rejected_blocks);
        let _ = writeln!(
            w,
            "messages: sent={} delivered={} dropped={}",
            self.messages.sent, self.messages.delivered, self.messages.dropped
        );
        let _ = writeln!(w, "converged: {}", self.converged());

        let _ = writeln!(w, "\n[nodes]\nnode,height,tip,chain_digest");
        for n in &self.nodes {
            let _ = writeln!(w, "{},{},{},{}", n.name, n.height, n.tip, n.chain_digest);
        }

        let _ = writeln!(w, "\n[transactions]\ntx,kind,author,announce_tick,commit_tick,height,latency");
        for t in &self.txs {
            let opt = |v: Option<u64>| v.map_or_else(|| "-".to_owned(), |v| v.to_string());
            let _ = writeln!(
                w,
                "{},{},{},{},{},{},{}",
                t.id,
                t.kind,
                t.author,
                t.announce_tick,
                opt(t.commit_tick),
                opt(t.height),
                opt(t.commit_tick.map(|c| c - t.announce_tick))
            );
        }

        let _ = writeln!(w, "\n[stalls]\nstart,end");
        for s in &self.stalls {
            let _ = writeln!(w, "{},{}", s.start, s.end.map_or_else(|| "-".to_owned(), |e| e.to_string()));
        }

        let _ = writeln!(w, "\n[rejected_actions]\ntick,node,action,reason");
        for r in &self.rejected_actions {
            let _ = writeln!(w, "{},{},{},{}", r.tick, r.node, csv_field(&r.action), csv_field(&r.reason));
        }

        for r in &self.rankings {
            let _ = writeln!(w, "\n[ranking {} {}-{}]", r.company, r.started, r.finished);
            w.push_str(&export_ranked(&r.list, &|id| self.name_of(id)));
        }
        out
    }
}
