//! Participant rosters: `role,name,key_hex`, one per line.
//!
//! `key_hex` is the 32-byte Ed25519 secret key in hex. When it is left
//! empty the key is derived from the name, which keeps test rosters short.

use std::fmt::Write as _;

use crate::registry::{Keypair, ParticipantId, Role};
use crate::text::{content_lines, ParseError};

#[derive(Debug, Clone)]
pub struct RosterEntry {
    pub role: Role,
    pub name: String,
    pub key: Keypair,
}

impl RosterEntry {
    pub fn new(role: Role, name: &str) -> Self {
        RosterEntry {
            role,
            name: name.to_owned(),
            key: Keypair::derive(name),
        }
    }

    pub fn id(&self) -> ParticipantId {
        self.key.id()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Roster {
    entries: Vec<RosterEntry>,
}

impl Roster {
    pub fn new(entries: Vec<RosterEntry>) -> Result<Self, String> {
        let mut roster = Roster::default();
        for e in entries {
            roster.push(e)?;
        }
        Ok(roster)
    }

    pub fn push(&mut self, entry: RosterEntry) -> Result<(), String> {
        if self.get(&entry.name).is_some() {
            return Err(format!("duplicate participant `{}`", entry.name));
        }
        if self.name_of(&entry.id()).is_some() {
            return Err(format!("participant `{}` reuses another key", entry.name));
        }
        self.entries.push(entry);
        Ok(())
    }

    /// The five-entity deployment: a recruiting company, an employer, a
    /// health authority, a law agency and the applicants' node.
    pub fn five_entities() -> Self {
        Roster::new(vec![
            RosterEntry::new(Role::RecruitingCompany, "company"),
            RosterEntry::new(Role::Employer, "employer"),
            RosterEntry::new(Role::Applicant, "applicants"),
            RosterEntry::new(Role::HealthAuthority, "health"),
            RosterEntry::new(Role::LawAgency, "law"),
        ])
        .expect("distinct names")
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut roster = Roster::default();
        for (no, line) in content_lines(text) {
            roster.push(parse_entry(no, line)?).map_err(|e| ParseError::new(no, e))?;
        }
        if roster.is_empty() {
            return Err(ParseError::new(0, "roster is empty"));
        }
        Ok(roster)
    }

    /// Text form with every key written out.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{}", e.role, e.name, hex::encode(e.key.secret_bytes()));
        }
        out
    }

    pub fn entries(&self) -> &[RosterEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&RosterEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn id_of(&self, name: &str) -> Option<ParticipantId> {
        self.get(name).map(RosterEntry::id)
    }

    pub fn name_of(&self, id: &ParticipantId) -> Option<&str> {
        self.entries.iter().find(|e| e.id() == *id).map(|e| e.name.as_str())
    }

    /// Name if known, otherwise the full hex id.
    pub fn display(&self, id: &ParticipantId) -> String {
        self.name_of(id).map_or_else(|| id.to_string(), str::to_owned)
    }
}

pub(crate) fn parse_entry(no: usize, line: &str) -> Result<RosterEntry, ParseError> {
    let parts: Vec<&str> = line.split(',').map(str::trim).collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(ParseError::new(no, "expected `role,name,key_hex`"));
    }
    let role: Role = parts[0].parse().map_err(|e: String| ParseError::new(no, e))?;
    let name = parts[1];
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(ParseError::new(no, format!("bad participant name `{name}`")));
    }
    let key = match parts.get(2).copied().filter(|k| !k.is_empty()) {
        None => Keypair::derive(name),
        Some(h) => {
            let raw = hex::decode(h).map_err(|_| ParseError::new(no, "key is not hex"))?;
            Keypair::from_secret(&raw).map_err(|e| ParseError::new(no, e.to_string()))?
        }
    };
    Ok(RosterEntry {
        role,
        name: name.to_owned(),
        key,
    })
}
