//! Scenario files.
//!
//! ```text
//! [roster]                      # simulated nodes: role,name[,secret_hex]
//! RecruitingCompany,company
//! Employer,employer
//! [applicants]                  # participants without a node: name[,secret_hex]
//! alice
//! [consensus]
//! diversity = 0.75
//! miners = company, employer    # default: every node, in roster order
//! batch = 1                     # transactions per block
//! inactive = employer:10-40     # down for ticks [10, 40); `10-` is forever
//! [network]
//! seed = 7
//! latency = 0                   # extra ticks per message on top of one
//! jitter = 0                    # up to this many more, drawn from the seed
//! loss = 0                      # drop probability for messages between nodes
//! tick_limit = 10000
//! [script]
//! at 1 record employer, alice, Education, degree=MSc
//! at 1 claim company, alice, Education, employer, degree=MSc
//! at 1 require company, Education, degree=MSc, 3, true
//! at 2 rank company
//! at 10 hire company, alice, salary=50000
//! at 20 event company, alice, Salary, amount=55000
//! at 30..39 grant company, alice, Applicant, connect|send
//! ```
//!
//! `at A..B` repeats an action on every tick from `A` to `B` inclusive.

use std::collections::BTreeSet;
use std::fmt;

use crate::consensus::DiversityRule;
use crate::hrm::HrEventKind;
use crate::ledger::Chain;
use crate::record::Record;
use crate::recruit::{ClaimKind, Predicate, RequirementItem, Score};
use crate::registry::{Rights, Role};
use crate::roster::{parse_entry, Roster, RosterEntry};
use crate::text::{content_lines, fields, ParseError};

/// A miner's offline window, `[from, to)`; `to = None` never ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inactivity {
    pub miner: String,
    pub from: u64,
    pub to: Option<u64>,
}

/// Something a participant does at a scripted tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// An authority files a record in its local store.
    Record {
        authority: String,
        applicant: String,
        kind: ClaimKind,
        statement: Record,
    },
    /// An applicant submits a claim to a company.
    Claim {
        company: String,
        applicant: String,
        kind: ClaimKind,
        issuer: Option<String>,
        statement: Record,
    },
    /// A company adds a requirement item.
    Require { company: String, item: RequirementItem },
    /// A company verifies, screens and ranks its applicants.
    Rank { company: String },
    /// A company hires a ranked applicant.
    Hire {
        company: String,
        applicant: String,
        employee_terms: Record,
    },
    /// An employer records an HR event about an employee.
    Event {
        issuer: String,
        subject: String,
        kind: HrEventKind,
        details: Record,
    },
    /// A miner grants a role and rights.
    Grant {
        grantor: String,
        subject: String,
        role: Role,
        rights: Rights,
    },
}

impl Action {
    /// The node that performs the action.
    pub fn actor(&self) -> &str {
        match self {
            Action::Record { authority, .. } => authority,
            Action::Claim { company, .. }
            | Action::Require { company, .. }
            | Action::Rank { company }
            | Action::Hire { company, .. } => company,
            Action::Event { issuer, .. } => issuer,
            Action::Grant { grantor, .. } => grantor,
        }
    }

    fn names(&self) -> Vec<&str> {
        let mut v = vec![self.actor()];
        match self {
            Action::Record { applicant, .. } | Action::Hire { applicant, .. } => v.push(applicant),
            Action::Claim { applicant, issuer, .. } => {
                v.push(applicant);
                v.extend(issuer.as_deref());
            }
            Action::Event { subject, .. } | Action::Grant { subject, .. } => v.push(subject),
            Action::Require { .. } | Action::Rank { .. } => {}
        }
        v
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Record {
                authority,
                applicant,
                kind,
                statement,
            } => write!(f, "record {authority}, {applicant}, {kind}, {statement}"),
            Action::Claim {
                company,
                applicant,
                kind,
                issuer,
                statement,
            } => write!(
                f,
                "claim {company}, {applicant}, {kind}, {}, {statement}",
                issuer.as_deref().unwrap_or("-")
            ),
            Action::Require { company, item } => write!(
                f,
                "require {company}, {}, {}, {}, {}",
                item.kind, item.predicate, item.weight, item.mandatory
            ),
            Action::Rank { company } => write!(f, "rank {company}"),
            Action::Hire {
                company,
                applicant,
                employee_terms,
            } => {
                write!(f, "hire {company}, {applicant}")?;
                if !employee_terms.is_empty() {
                    write!(f, ", {employee_terms}")?;
                }
                Ok(())
            }
            Action::Event {
                issuer,
                subject,
                kind,
                details,
            } => write!(f, "event {issuer}, {subject}, {kind}, {details}"),
            Action::Grant {
                grantor,
                subject,
                role,
                rights,
            } => write!(f, "grant {grantor}, {subject}, {role}, {rights}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub tick: u64,
    pub action: Action,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub roster: Roster,
    pub applicants: Vec<RosterEntry>,
    pub diversity: DiversityRule,
    /// Miner names in rotation order.
    pub miners: Vec<String>,
    pub batch: usize,
    pub inactivity: Vec<Inactivity>,
    pub latency: u64,
    pub jitter: u64,
    /// Drop probability in parts per million.
    pub loss_ppm: u32,
    pub tick_limit: u64,
    pub script: Vec<Step>,
    /// Chain every node starts from instead of a fresh genesis. Its
    /// permitted miners must be the roster nodes named in `miners`.
    pub base: Option<Chain>,
}

pub const DEFAULT_TICK_LIMIT: u64 = 10_000;

impl Scenario {
    /// Every roster node mines, in roster order, under default settings.
    pub fn new(roster: Roster) -> Self {
        let miners = roster.entries().iter().map(|e| e.name.clone()).collect();
        Scenario {
            seed: 0,
            roster,
            applicants: Vec::new(),
            diversity: DiversityRule::default_075(),
            miners,
            batch: 1,
            inactivity: Vec::new(),
            latency: 0,
            jitter: 0,
            loss_ppm: 0,
            tick_limit: DEFAULT_TICK_LIMIT,
            script: Vec::new(),
            base: None,
        }
    }

    /// The five-entity deployment with no script.
    pub fn five_entities() -> Self {
        Scenario::new(Roster::five_entities())
    }

    pub fn at(mut self, tick: u64, action: Action) -> Self {
        self.script.push(Step { tick, action });
        self
    }

    /// Node entry by name.
    pub fn node(&self, name: &str) -> Option<&RosterEntry> {
        self.roster.get(name)
    }

    /// Any participant, node or not.
    pub fn participant(&self, name: &str) -> Option<&RosterEntry> {
        self.roster
            .get(name)
            .or_else(|| self.applicants.iter().find(|e| e.name == name))
    }

    pub fn participants(&self) -> impl Iterator<Item = &RosterEntry> {
        self.roster.entries().iter().chain(&self.applicants)
    }

    /// Checks cross references. Parsing calls this; so does the simulator
    /// for scenarios built in code.
    pub fn check(&self) -> Result<(), String> {
        if self.roster.is_empty() {
            return Err("roster is empty".into());
        }
        if self.miners.is_empty() {
            return Err("no miners".into());
        }
        let mut seen = BTreeSet::new();
        for m in &self.miners {
            if self.node(m).is_none() {
                return Err(format!("miner `{m}` is not a roster node"));
            }
            if !seen.insert(m) {
                return Err(format!("miner `{m}` listed twice"));
            }
        }
        let mut ids = BTreeSet::new();
        for e in self.participants() {
            if !ids.insert(e.id()) {
                return Err(format!("participant `{}` is declared twice", e.name));
            }
        }
        if let Some(base) = &self.base {
            let on_chain = crate::registry::Directory::from_chain(base).miners();
            let named: Vec<_> = self.miners.iter().filter_map(|m| self.node(m)).map(RosterEntry::id).collect();
            if on_chain != named {
                return Err("`miners` does not match the miners on the base chain".into());
            }
        }
        if self.batch == 0 {
            return Err("batch must be at least 1".into());
        }
        for w in &self.inactivity {
            if !self.miners.contains(&w.miner) {
                return Err(format!("inactive `{}` is not a miner", w.miner));
            }
            if w.to.is_some_and(|to| to <= w.from) {
                return Err(format!("empty inactivity window for `{}`", w.miner));
            }
        }
        for step in &self.script {
            if self.node(step.action.actor()).is_none() {
                return Err(format!("`{}` acts at tick {} but is not a node", step.action.actor(), step.tick));
            }
            for name in step.action.names() {
                if self.participant(name).is_none() {
                    return Err(format!("unknown participant `{name}` at tick {}", step.tick));
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut section = "";
        let mut roster_lines = Vec::new();
        let mut applicants = Vec::new();
        let mut miners: Option<Vec<String>> = None;
        let mut s = Scenario::new(Roster::default());
        for (no, line) in content_lines(text) {
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name.trim() {
                    n @ ("roster" | "applicants" | "consensus" | "network" | "script") => n,
                    other => return Err(ParseError::new(no, format!("unknown section `[{other}]`"))),
                };
                continue;
            }
            match section {
                "roster" => roster_lines.push(parse_entry(no, line)?),
                "applicants" => {
                    let (name, key) = line.split_once(',').unwrap_or((line, ""));
                    applicants.push(parse_entry(no, &format!("Applicant,{},{}", name.trim(), key.trim()))?);
                }
                "consensus" => {
                    let (k, v) = setting(no, line)?;
                    match k {
                        "diversity" => s.diversity = v.parse().map_err(|e: String| ParseError::new(no, e))?,
                        "miners" => miners = Some(v.split(',').map(|m| m.trim().to_owned()).filter(|m| !m.is_empty()).collect()),
                        "batch" => s.batch = number(no, v)? as usize,
                        "inactive" => s.inactivity.push(inactivity(no, v)?),
                        _ => return Err(ParseError::new(no, format!("unknown consensus setting `{k}`"))),
                    }
                }
                "network" => {
                    let (k, v) = setting(no, line)?;
                    match k {
                        "seed" => s.seed = number(no, v)?,
                        "latency" => s.latency = number(no, v)?,
                        "jitter" => s.jitter = number(no, v)?,
                        "tick_limit" => s.tick_limit = number(no, v)?,
                        "loss" => s.loss_ppm = probability(no, v)?,
                        _ => return Err(ParseError::new(no, format!("unknown network setting `{k}`"))),
                    }
                }
                "script" => s.script.extend(parse_step(no, line)?),
                _ => return Err(ParseError::new(no, "content before the first section")),
            }
        }
        s.roster = Roster::new(roster_lines).map_err(|e| ParseError::new(0, e))?;
        s.applicants = applicants;
        s.miners = miners.unwrap_or_else(|| s.roster.entries().iter().map(|e| e.name.clone()).collect());
        s.check().map_err(|e| ParseError::new(0, e))?;
        Ok(s)
    }
}

fn setting(no: usize, line: &str) -> Result<(&str, &str), ParseError> {
    line.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| ParseError::new(no, "expected `key = value`"))
}

fn number(no: usize, v: &str) -> Result<u64, ParseError> {
    v.trim()
        .parse()
        .map_err(|_| ParseError::new(no, format!("`{v}` is not a non-negative integer")))
}

fn probability(no: usize, v: &str) -> Result<u32, ParseError> {
    let p: f64 = v.parse().map_err(|_| ParseError::new(no, format!("`{v}` is not a number")))?;
    if !(0.0..1.0).contains(&p) {
        return Err(ParseError::new(no, "loss must be in [0, 1)"));
    }
    Ok((p * 1e6).round() as u32)
}

fn inactivity(no: usize, v: &str) -> Result<Inactivity, ParseError> {
    let (miner, range) = v
        .split_once(':')
        .ok_or_else(|| ParseError::new(no, "expected `miner:from-to`"))?;
    let (from, to) = range
        .split_once('-')
        .ok_or_else(|| ParseError::new(no, "expected `miner:from-to`"))?;
    let to = match to.trim() {
        "" => None,
        t => Some(number(no, t)?),
    };
    Ok(Inactivity {
        miner: miner.trim().to_owned(),
        from: number(no, from)?,
        to,
    })
}

fn parse_step(no: usize, line: &str) -> Result<Vec<Step>, ParseError> {
    let rest = line
        .strip_prefix("at ")
        .ok_or_else(|| ParseError::new(no, "script lines start with `at TICK`"))?
        .trim_start();
    let (when, rest) = rest
        .split_once(char::is_whitespace)
        .ok_or_else(|| ParseError::new(no, "missing action"))?;
    let (first, last) = match when.split_once("..") {
        Some((a, b)) => (number(no, a)?, number(no, b)?),
        None => {
            let t = number(no, when)?;
            (t, t)
        }
    };
    if last < first {
        return Err(ParseError::new(no, "empty tick range"));
    }
    let action = parse_action(no, rest.trim())?;
    Ok((first..=last)
        .map(|tick| Step {
            tick,
            action: action.clone(),
        })
        .collect())
}

fn parse_action(no: usize, text: &str) -> Result<Action, ParseError> {
    let (verb, args) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    let args = args.trim();
    let err = |e: String| ParseError::new(no, e);
    let rec = |s: &str| s.parse::<Record>().map_err(err);
    let kind = |s: &str| s.parse::<ClaimKind>().map_err(err);
    Ok(match verb {
        "record" => {
            let f = fields(no, args, 4, "record")?;
            Action::Record {
                authority: f[0].clone(),
                applicant: f[1].clone(),
                kind: kind(&f[2])?,
                statement: rec(&f[3])?,
            }
        }
        "claim" => {
            let f = fields(no, args, 5, "claim")?;
            Action::Claim {
                company: f[0].clone(),
                applicant: f[1].clone(),
                kind: kind(&f[2])?,
                issuer: (f[3] != "-").then(|| f[3].clone()),
                statement: rec(&f[4])?,
            }
        }
        "require" => {
            let f = fields(no, args, 5, "require")?;
            let mandatory = match f[4].as_str() {
                "true" => true,
                "false" => false,
                other => return Err(ParseError::new(no, format!("mandatory must be true or false, got `{other}`"))),
            };
            Action::Require {
                company: f[0].clone(),
                item: RequirementItem {
                    kind: kind(&f[1])?,
                    predicate: f[2].parse::<Predicate>().map_err(err)?,
                    weight: f[3].parse::<Score>().map_err(err)?,
                    mandatory,
                },
            }
        }
        "rank" => {
            if args.is_empty() || args.contains(',') {
                return Err(ParseError::new(no, "expected `rank COMPANY`"));
            }
            Action::Rank {
                company: args.to_owned(),
            }
        }
        "hire" => {
            let f: Vec<&str> = args.splitn(3, ',').map(str::trim).collect();
            if f.len() < 2 {
                return Err(ParseError::new(no, "expected `hire COMPANY, APPLICANT[, TERMS]`"));
            }
            Action::Hire {
                company: f[0].to_owned(),
                applicant: f[1].to_owned(),
                employee_terms: f.get(2).map_or(Ok(Record::new()), |t| rec(t))?,
            }
        }
        "event" => {
            let f = fields(no, args, 4, "event")?;
            Action::Event {
                issuer: f[0].clone(),
                subject: f[1].clone(),
                kind: f[2].parse().map_err(err)?,
                details: rec(&f[3])?,
            }
        }
        "grant" => {
            let f = fields(no, args, 4, "grant")?;
            Action::Grant {
                grantor: f[0].clone(),
                subject: f[1].clone(),
                role: f[2].parse().map_err(err)?,
                rights: f[3].parse().map_err(err)?,
            }
        }
        other => return Err(ParseError::new(no, format!("unknown action `{other}`"))),
    })
}
