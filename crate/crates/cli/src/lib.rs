//! The `hrchain` command line: initialize node directories, run scenarios,
//! rank applicants, record hires and inspect chains.
//!
//! A data directory looks like this:
//!
//! ```text
//! roster.txt              every participant: role,name,secret_hex
//! consensus.txt           diversity = 0.75
//! report.txt              written by `run`
//! nodes/<name>/chain.dat  one per simulated node
//! nodes/<name>/key.hex
//! nodes/<name>/ranked.csv written by `rank` for the ranking company
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use hrchain::consensus::{fork_choice, DiversityRule, LocalConsensus, MinerSet};
use hrchain::hrm::{self, ContractFile, EmploymentContract, HireDecision, HistoryRecord, HrmError};
use hrchain::ledger::store::{ChainStore, StoreError};
use hrchain::ledger::{validate_chain, Block, Chain, Digest};
use hrchain::recruit::io::{export_ranked, parse_applicants, parse_authority_records, parse_ranked, parse_requirements};
use hrchain::registry::{Directory, ParticipantId, Rights, Role};
use hrchain::roster::{Roster, RosterEntry};
use hrchain::simnet::{self, Action, Scenario, SimError, Step};
use hrchain::text::{content_lines, fields, ParseError};

#[derive(Debug, Parser)]
#[command(name = "hrchain", version, about = "Permissioned ledger for verified recruitment and HR records")]
pub struct Cli {
    /// Where node directories and reports live.
    #[arg(long, global = true, default_value = "hrchain-data")]
    pub data_dir: PathBuf,
    /// Scenario file for `run`.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create one node directory per roster entry, each holding genesis.
    Init { roster: PathBuf },
    /// Simulate a scenario and write each node's chain and the report.
    Run {
        #[arg(value_name = "SCENARIO")]
        path: Option<PathBuf>,
    },
    /// Verify, screen and rank applicants against a requirement spec.
    Rank {
        applicants: PathBuf,
        spec: PathBuf,
        /// Records the authorities hold: authority,applicant,kind,fields.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Ranking company; defaults to the first RecruitingCompany node.
        #[arg(long)]
        company: Option<String>,
    },
    /// Print a node's chain, or one block in full.
    Inspect {
        node: String,
        #[arg(long)]
        height: Option<u64>,
    },
    /// Commit an employment contract for a ranked applicant.
    Hire { contract: PathBuf },
    /// Every committed record about a participant.
    History { node: String, participant: String },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{} is already initialized", .0.display())]
    AlreadyInitialized(PathBuf),
    #[error("bad roster {}: {err}", path.display())]
    BadRoster { path: PathBuf, err: ParseError },
    #[error("{} is not initialized; run `hrchain init` first", .0.display())]
    NotInitialized(PathBuf),
    #[error("no such node `{0}`")]
    NoSuchNode(String),
    #[error("height {height} is beyond the tip at {tip}")]
    HeightOutOfRange { height: u64, tip: u64 },
    #[error("{}: {err}", path.display())]
    Parse { path: PathBuf, err: ParseError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("no scenario given; pass a path or --scenario")]
    NoScenario,
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Hrm(#[from] HrmError),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    /// 2 for a consensus stall, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Hrm(HrmError::ConsensusStalled) => 2,
            _ => 1,
        }
    }
}

/// What a successful command prints and its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, code: 0 }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let data = DataDir::new(&cli.data_dir);
    match &cli.command {
        Command::Init { roster } => cmd_init(&data, roster),
        Command::Run { path } => {
            let path = path.as_ref().or(cli.scenario.as_ref()).ok_or(CliError::NoScenario)?;
            cmd_run(&data, path, cli.seed, cli.format)
        }
        Command::Rank {
            applicants,
            spec,
            records,
            company,
        } => cmd_rank(&data, applicants, spec, records.as_deref(), company.as_deref(), cli.seed),
        Command::Inspect { node, height } => cmd_inspect(&data, node, *height, cli.format),
        Command::Hire { contract } => cmd_hire(&data, contract),
        Command::History { node, participant } => cmd_history(&data, node, participant, cli.format),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse<T>(path: &Path, f: impl FnOnce(&str) -> Result<T, ParseError>) -> Result<T, CliError> {
    let text = read(path)?;
    f(&text).map_err(|err| CliError::Parse {
        path: path.to_owned(),
        err,
    })
}

struct DataDir {
    root: PathBuf,
}

impl DataDir {
    fn new(root: &Path) -> Self {
        DataDir { root: root.to_owned() }
    }

    fn roster_path(&self) -> PathBuf {
        self.root.join("roster.txt")
    }

    fn consensus_path(&self) -> PathBuf {
        self.root.join("consensus.txt")
    }

    fn node_dir(&self, name: &str) -> PathBuf {
        self.root.join("nodes").join(name)
    }

    fn is_node(&self, name: &str) -> bool {
        ChainStore::new(self.node_dir(name)).exists()
    }

    fn roster(&self) -> Result<Roster, CliError> {
        let path = self.roster_path();
        if !path.exists() {
            return Err(CliError::NotInitialized(self.root.clone()));
        }
        parse(&path, Roster::parse)
    }

    fn diversity(&self) -> Result<DiversityRule, CliError> {
        let path = self.consensus_path();
        if !path.exists() {
            return Ok(DiversityRule::default_075());
        }
        parse(&path, |text| {
            for (no, line) in content_lines(text) {
                if let Some(("diversity", v)) = line.split_once('=').map(|(k, v)| (k.trim(), v.trim())) {
                    return v.parse().map_err(|e: String| ParseError::new(no, e));
                }
            }
            Err(ParseError::new(0, "no `diversity` setting"))
        })
    }

    /// Roster entries that have a node directory, in roster order.
    fn nodes(&self, roster: &Roster) -> Roster {
        Roster::new(roster.entries().iter().filter(|e| self.is_node(&e.name)).cloned().collect()).expect("subset of a valid roster")
    }

    fn load_chain(&self, name: &str) -> Result<Chain, CliError> {
        if !self.is_node(name) {
            return Err(CliError::NoSuchNode(name.to_owned()));
        }
        Ok(ChainStore::new(self.node_dir(name)).load()?)
    }

    /// The fork-choice winner among the nodes' valid chains.
    fn best_chain(&self, nodes: &Roster, rule: &DiversityRule) -> Result<Chain, CliError> {
        let mut chains = Vec::new();
        for e in nodes.entries() {
            let chain = self.load_chain(&e.name)?;
            let miners = MinerSet::new(Directory::from_chain(&chain).miners());
            if miners.is_some_and(|m| validate_chain(&chain, rule, &m).is_ok()) {
                chains.push(chain);
            }
        }
        fork_choice(&chains)
            .cloned()
            .map_err(|_| CliError::Invalid("no node holds a valid chain".into()))
    }

    fn write_node(&self, entry: &RosterEntry, chain: &Chain) -> Result<(), CliError> {
        let dir = self.node_dir(&entry.name);
        fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        write(&dir.join("key.hex"), &format!("{}\n", hex_key(entry)))?;
        ChainStore::new(&dir).sync(chain)?;
        Ok(())
    }

    fn write_meta(&self, roster: &Roster, rule: &DiversityRule) -> Result<(), CliError> {
        fs::create_dir_all(&self.root).map_err(|source| CliError::Io {
            path: self.root.clone(),
            source,
        })?;
        write(&self.roster_path(), &roster.to_text())?;
        write(&self.consensus_path(), &format!("diversity = {rule}\n"))
    }
}

fn hex_key(entry: &RosterEntry) -> String {
    hex::encode(entry.key.secret_bytes())
}

fn cmd_init(data: &DataDir, roster_path: &Path) -> Result<Outcome, CliError> {
    if data.roster_path().exists() || data.root.join("nodes").exists() {
        return Err(CliError::AlreadyInitialized(data.root.clone()));
    }
    let text = read(roster_path)?;
    let roster = Roster::parse(&text).map_err(|err| CliError::BadRoster {
        path: roster_path.to_owned(),
        err,
    })?;
    let scenario = Scenario::new(roster.clone());
    let genesis = Chain::from_genesis(simnet::scenario_genesis(&scenario));
    data.write_meta(&roster, &scenario.diversity)?;
    for e in roster.entries() {
        data.write_node(e, &genesis)?;
    }
    Ok(Outcome::ok(format!(
        "initialized {} nodes in {}\ngenesis {}\n",
        roster.len(),
        data.root.display(),
        genesis.genesis().id()
    )))
}

fn cmd_run(data: &DataDir, path: &Path, seed: Option<u64>, format: Format) -> Result<Outcome, CliError> {
    let mut scenario = parse(path, Scenario::parse)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let report = simnet::run(&scenario)?;
    let mut everyone = scenario.roster.clone();
    for a in &scenario.applicants {
        everyone.push(a.clone()).map_err(CliError::Invalid)?;
    }
    data.write_meta(&everyone, &scenario.diversity)?;
    for (entry, node) in scenario.roster.entries().iter().zip(&report.nodes) {
        data.write_node(entry, &node.chain)?;
    }
    let export = report.to_text();
    write(&data.root.join("report.txt"), &export)?;
    let stdout = match format {
        Format::Text => report.summary(),
        Format::Csv => export,
    };
    Ok(Outcome {
        stdout,
        code: if report.permanent_stall { 2 } else { 0 },
    })
}

/// Looks up roster participants by name; any other name is a new
/// applicant whose key derives from the name.
fn participant(roster: &Roster, name: &str) -> RosterEntry {
    roster
        .get(name)
        .cloned()
        .unwrap_or_else(|| RosterEntry::new(Role::Applicant, name))
}

fn cmd_rank(
    data: &DataDir,
    applicants_path: &Path,
    spec_path: &Path,
    records_path: Option<&Path>,
    company: Option<&str>,
    seed: Option<u64>,
) -> Result<Outcome, CliError> {
    let roster = data.roster()?;
    let rule = data.diversity()?;
    let nodes = data.nodes(&roster);
    let company = match company {
        Some(name) => nodes.get(name).ok_or_else(|| CliError::NoSuchNode(name.to_owned()))?,
        None => nodes
            .entries()
            .iter()
            .find(|e| e.role == Role::RecruitingCompany)
            .ok_or_else(|| CliError::Invalid("no RecruitingCompany node; pass --company".into()))?,
    }
    .clone();
    let lookup = |name: &str| Some(participant(&roster, name).id());

    let claims = parse(applicants_path, |t| claim_lines(t, &lookup))?;
    let spec = parse(spec_path, |t| parse_requirements(t, company.id()))?;
    let records = match records_path {
        Some(p) => parse(p, |t| record_lines(t, &lookup))?,
        None => Vec::new(),
    };

    let base = data.best_chain(&nodes, &rule)?;
    let dir = Directory::from_chain(&base);
    let mut scenario = Scenario::new(nodes.clone());
    scenario.diversity = rule;
    scenario.seed = seed.unwrap_or(0);
    scenario.miners = dir
        .miners()
        .iter()
        .map(|id| nodes.name_of(id).map(str::to_owned).ok_or_else(|| CliError::Invalid(format!("miner {id} has no node"))))
        .collect::<Result<_, _>>()?;

    // Participants the chain has not seen are granted Applicant rights first.
    let mut names: Vec<&str> = Vec::new();
    for a in &claims {
        if let Action::Claim { applicant, issuer, .. } = a {
            names.push(applicant);
            names.extend(issuer.as_deref());
        }
    }
    for r in &records {
        if let Action::Record { authority, applicant, .. } = r {
            if nodes.get(authority).is_none() {
                return Err(CliError::Invalid(format!("authority `{authority}` has no node")));
            }
            names.push(applicant);
        }
    }
    let mut script = Vec::new();
    for name in names {
        if scenario.participant(name).is_some() {
            continue;
        }
        let entry = participant(&roster, name);
        if !dir.contains(&entry.id()) {
            script.push(Action::Grant {
                grantor: scenario.miners[0].clone(),
                subject: name.to_owned(),
                role: Role::Applicant,
                rights: Rights::CONNECT | Rights::SEND,
            });
        }
        scenario.applicants.push(entry);
    }
    script.extend(records);
    script.extend(claims.into_iter().map(|a| match a {
        Action::Claim {
            applicant,
            kind,
            issuer,
            statement,
            ..
        } => Action::Claim {
            company: company.name.clone(),
            applicant,
            kind,
            issuer,
            statement,
        },
        other => other,
    }));
    script.extend(spec.items.into_iter().map(|item| Action::Require {
        company: company.name.clone(),
        item,
    }));
    scenario.script = script.into_iter().map(|action| Step { tick: 1, action }).collect();
    scenario.script.push(Step {
        tick: 2,
        action: Action::Rank {
            company: company.name.clone(),
        },
    });
    scenario.base = Some(base);

    let report = simnet::run(&scenario)?;
    if let Some(r) = report.rejected_actions.first() {
        return Err(CliError::Invalid(format!("{} was rejected: {}", r.action, r.reason)));
    }
    let ranking = report
        .rankings
        .last()
        .ok_or_else(|| CliError::Invalid("ranking did not complete".into()))?;
    let out = export_ranked(&ranking.list, &|id| report.name_of(id));

    let mut everyone = roster.clone();
    for a in &scenario.applicants {
        if everyone.get(&a.name).is_none() {
            everyone.push(a.clone()).map_err(CliError::Invalid)?;
        }
    }
    data.write_meta(&everyone, &rule)?;
    for (entry, node) in nodes.entries().iter().zip(&report.nodes) {
        data.write_node(entry, &node.chain)?;
    }
    write(&data.node_dir(&company.name).join("ranked.csv"), &out)?;
    Ok(Outcome::ok(out))
}

/// `applicant,kind,issuer,fields` lines as claims; the company is filled
/// in later. Checked with the library reader first for its diagnostics.
fn claim_lines(text: &str, lookup: &dyn Fn(&str) -> Option<ParticipantId>) -> Result<Vec<Action>, ParseError> {
    parse_applicants(text, lookup)?;
    content_lines(text)
        .map(|(no, line)| {
            let f = fields(no, line, 4, "a claim")?;
            Ok(Action::Claim {
                company: String::new(),
                applicant: f[0].clone(),
                kind: f[1].parse().map_err(|e: String| ParseError::new(no, e))?,
                issuer: (f[2] != "-" && !f[2].is_empty()).then(|| f[2].clone()),
                statement: f[3].parse().map_err(|e: String| ParseError::new(no, e))?,
            })
        })
        .collect()
}

fn record_lines(text: &str, lookup: &dyn Fn(&str) -> Option<ParticipantId>) -> Result<Vec<Action>, ParseError> {
    let parsed = parse_authority_records(text, lookup)?;
    content_lines(text)
        .zip(parsed)
        .map(|((no, line), rec)| {
            let f = fields(no, line, 4, "an authority record")?;
            Ok(Action::Record {
                authority: f[0].clone(),
                applicant: f[1].clone(),
                kind: rec.kind,
                statement: rec.statement,
            })
        })
        .collect()
}

fn cmd_hire(data: &DataDir, contract_path: &Path) -> Result<Outcome, CliError> {
    let file = parse(contract_path, ContractFile::parse)?;
    let roster = data.roster()?;
    let rule = data.diversity()?;
    let nodes = data.nodes(&roster);
    let employer = nodes
        .get(&file.employer)
        .ok_or_else(|| CliError::NoSuchNode(file.employer.clone()))?
        .clone();
    let employee = participant(&roster, &file.employee);
    let ranked_path = data.node_dir(&employer.name).join("ranked.csv");
    if !ranked_path.exists() {
        return Err(CliError::Invalid(format!("`{}` has no ranked list; run `rank` first", employer.name)));
    }
    let ranked = parse(&ranked_path, |t| parse_ranked(t, &|name| Some(participant(&roster, name).id())))?;

    let mut chain = data.best_chain(&nodes, &rule)?;
    let dir = Directory::from_chain(&chain);
    let contract = EmploymentContract::new_signed(file.sections, &employee.key, &employer.key);
    let decision = HireDecision {
        company: employer.id(),
        applicant: employee.id(),
        source_rank: ranked.position(&employee.id()).map_or(0, |p| p as u32 + 1),
    };
    let miners = MinerSet::new(dir.miners()).ok_or_else(|| CliError::Invalid("chain has no miners".into()))?;
    let consensus = LocalConsensus::new(miners, rule, nodes.entries().iter().map(|e| e.key.clone()));
    let commit = hrm::record_hire(&decision, &contract, &ranked, &dir, &mut chain, &consensus, &employer.key)?;
    for e in nodes.entries() {
        data.write_node(e, &chain)?;
    }
    Ok(Outcome::ok(format!(
        "hired {} (rank {}) at height {}, block {}\n",
        employee.name,
        decision.source_rank,
        commit.height,
        chain.tip().id()
    )))
}

fn cmd_inspect(data: &DataDir, node: &str, height: Option<u64>, format: Format) -> Result<Outcome, CliError> {
    let roster = data.roster()?;
    let chain = data.load_chain(node)?;
    let name = |id: &ParticipantId| roster.display(id);
    let mut out = String::new();
    match height {
        Some(h) => {
            let block = chain.get(h).ok_or(CliError::HeightOutOfRange {
                height: h,
                tip: chain.height(),
            })?;
            block_detail(&mut out, block, &name, format);
        }
        None => {
            if format == Format::Csv {
                out.push_str("height,id,prev_hash,merkle_root,timestamp,miner,tx_count,kinds\n");
            } else {
                let _ = writeln!(out, "node {node}: height {}, tip {}", chain.height(), chain.tip().id());
            }
            for b in chain.blocks() {
                let h = &b.header;
                let kinds: Vec<String> = b.transactions.iter().map(|t| t.kind.to_string()).collect();
                match format {
                    Format::Csv => writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        h.height,
                        b.id(),
                        h.prev_hash,
                        h.merkle_root,
                        h.timestamp,
                        name(&h.miner),
                        b.tx_count,
                        kinds.join(";")
                    ),
                    Format::Text => writeln!(
                        out,
                        "#{:<4} {}  prev {}  t={:<5} miner {:<10} {}",
                        h.height,
                        b.id(),
                        h.prev_hash,
                        h.timestamp,
                        name(&h.miner),
                        kinds.join(" ")
                    ),
                }
                .expect("string write");
            }
        }
    }
    Ok(Outcome::ok(out))
}

fn block_detail(out: &mut String, block: &Block, name: &dyn Fn(&ParticipantId) -> String, format: Format) {
    let h = &block.header;
    if format == Format::Csv {
        out.push_str("index,kind,author,nonce,id,payload_digest\n");
        for (i, tx) in block.transactions.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{}",
                tx.kind,
                name(&tx.author),
                tx.nonce,
                tx.id(),
                hrchain::ledger::double_hash(&tx.payload)
            );
        }
        return;
    }
    let _ = writeln!(out, "height:      {}", h.height);
    let _ = writeln!(out, "id:          {}", block.id());
    let _ = writeln!(out, "version:     {}", h.version);
    let _ = writeln!(out, "prev_hash:   {}", h.prev_hash);
    let _ = writeln!(out, "merkle_root: {}", h.merkle_root);
    let _ = writeln!(out, "timestamp:   {}", h.timestamp);
    let _ = writeln!(out, "miner:       {} ({})", name(&h.miner), h.miner);
    let _ = writeln!(
        out,
        "signature:   {}",
        if block.verify_miner_signature() { "valid" } else { "INVALID" }
    );
    let _ = writeln!(out, "transactions: {}", block.tx_count);
    for (i, tx) in block.transactions.iter().enumerate() {
        let _ = writeln!(
            out,
            "  [{i}] {} by {} nonce {} id {}",
            tx.kind,
            name(&tx.author),
            tx.nonce,
            tx.id()
        );
    }
}

fn cmd_history(data: &DataDir, node: &str, who: &str, format: Format) -> Result<Outcome, CliError> {
    let roster = data.roster()?;
    let chain = data.load_chain(node)?;
    let subject = participant(&roster, who).id();
    let items = hrm::query_history(&subject, &chain);
    if format == Format::Csv {
        return Ok(Outcome::ok(hrm::export_history(who, &items)));
    }
    let name = |id: &ParticipantId| roster.display(id);
    let mut out = String::new();
    for item in &items {
        let detail = match &item.record {
            HistoryRecord::Contract(c) => format!("employee {} employer {} terms {}", name(&c.employee), name(&c.employer), c.employee_terms),
            HistoryRecord::HrEvent(e) => format!("{} by {} at tick {}: {}", e.kind, name(&e.issuer), e.effective_tick, e.details),
            HistoryRecord::Attestation(a) => format!("{} by {} for claim {}", a.verdict, name(&a.attester), short(&a.claim_ref)),
        };
        let _ = writeln!(out, "height {:<4} {:<16} {detail}", item.height, item.record.kind().to_string());
    }
    if items.is_empty() {
        let _ = writeln!(out, "no records for {who}");
    }
    Ok(Outcome::ok(out))
}

fn short(d: &Digest) -> String {
    d.to_hex()[..12].to_owned()
}

/// The guide's command-line chapter, compiled so its listings run as doc-tests.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book {}
