//! Text formats for applicants, requirements, authority records and ranked
//! lists. Names are resolved to participant ids by the caller.

use std::fmt::Write as _;

use super::{ApplicantProfile, Claim, ClaimKind, DiscardReason, RankedList, RequirementItem, RequirementSpec, Score};
use crate::record::Record;
use crate::registry::ParticipantId;
use crate::text::{content_lines, fields, ParseError};

fn resolve(no: usize, name: &str, lookup: &dyn Fn(&str) -> Option<ParticipantId>) -> Result<ParticipantId, ParseError> {
    lookup(name).ok_or_else(|| ParseError::new(no, format!("unknown participant `{name}`")))
}

fn kind(no: usize, s: &str) -> Result<ClaimKind, ParseError> {
    s.parse().map_err(|e: String| ParseError::new(no, e))
}

fn record(no: usize, s: &str) -> Result<Record, ParseError> {
    s.parse().map_err(|e: String| ParseError::new(no, e))
}

/// `applicant,kind,issuer,field=value;...` per claim. Profiles come out in
/// order of first appearance. An issuer of `-` names nobody.
pub fn parse_applicants(
    text: &str,
    lookup: &dyn Fn(&str) -> Option<ParticipantId>,
) -> Result<Vec<ApplicantProfile>, ParseError> {
    let mut profiles: Vec<ApplicantProfile> = Vec::new();
    for (no, line) in content_lines(text) {
        let f = fields(no, line, 4, "a claim")?;
        let applicant = resolve(no, &f[0], lookup)?;
        let issuer = match f[2].as_str() {
            "-" | "" => ParticipantId::ZERO,
            name => resolve(no, name, lookup)?,
        };
        let claim = Claim::new(kind(no, &f[1])?, issuer, record(no, &f[3])?);
        match profiles.iter_mut().find(|p| p.applicant == applicant) {
            Some(p) => p.claims.push(claim),
            None => profiles.push(ApplicantProfile {
                applicant,
                claims: vec![claim],
            }),
        }
    }
    Ok(profiles)
}

/// `kind,predicate,weight,mandatory` per item.
pub fn parse_requirements(text: &str, company: ParticipantId) -> Result<RequirementSpec, ParseError> {
    let mut items = Vec::new();
    for (no, line) in content_lines(text) {
        let f = fields(no, line, 4, "a requirement")?;
        let mandatory = match f[3].to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => true,
            "false" | "no" | "0" => false,
            other => return Err(ParseError::new(no, format!("mandatory must be true or false, got `{other}`"))),
        };
        items.push(RequirementItem {
            kind: kind(no, &f[0])?,
            predicate: f[1].parse().map_err(|e: String| ParseError::new(no, e))?,
            weight: f[2].parse().map_err(|e: String| ParseError::new(no, e))?,
            mandatory,
        });
    }
    if items.is_empty() {
        return Err(ParseError::new(0, "requirement spec has no items"));
    }
    Ok(RequirementSpec { company, items })
}

/// One row of an authority's record store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorityRecordLine {
    pub authority: ParticipantId,
    pub applicant: ParticipantId,
    pub kind: ClaimKind,
    pub statement: Record,
}

/// `authority,applicant,kind,field=value;...` per stored record.
pub fn parse_authority_records(
    text: &str,
    lookup: &dyn Fn(&str) -> Option<ParticipantId>,
) -> Result<Vec<AuthorityRecordLine>, ParseError> {
    content_lines(text)
        .map(|(no, line)| {
            let f = fields(no, line, 4, "an authority record")?;
            Ok(AuthorityRecordLine {
                authority: resolve(no, &f[0], lookup)?,
                applicant: resolve(no, &f[1], lookup)?,
                kind: kind(no, &f[2])?,
                statement: record(no, &f[3])?,
            })
        })
        .collect()
}

pub const RANKED_HEADER: &str = "rank,applicant,score";
pub const DISCARDED_MARKER: &str = "discarded";
pub const DISCARDED_HEADER: &str = "applicant,reason";

/// CSV export: the ranked rows, then a `discarded` section.
pub fn export_ranked(list: &RankedList, name_of: &dyn Fn(&ParticipantId) -> String) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{RANKED_HEADER}");
    for (i, (id, score)) in list.entries.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, name_of(id), score);
    }
    let _ = writeln!(out, "{DISCARDED_MARKER}");
    let _ = writeln!(out, "{DISCARDED_HEADER}");
    for (id, reason) in &list.discarded {
        let _ = writeln!(out, "{},{}", name_of(id), reason);
    }
    out
}

/// Reads back what [`export_ranked`] writes.
pub fn parse_ranked(text: &str, lookup: &dyn Fn(&str) -> Option<ParticipantId>) -> Result<RankedList, ParseError> {
    let mut list = RankedList::default();
    let mut in_discarded = false;
    for (no, line) in content_lines(text) {
        match line {
            RANKED_HEADER | DISCARDED_HEADER => continue,
            DISCARDED_MARKER => {
                in_discarded = true;
                continue;
            }
            _ => {}
        }
        if in_discarded {
            let f = fields(no, line, 2, "a discarded row")?;
            let reason: DiscardReason = f[1].parse().map_err(|e: String| ParseError::new(no, e))?;
            list.discarded.push((resolve(no, &f[0], lookup)?, reason));
        } else {
            let f = fields(no, line, 3, "a ranked row")?;
            let score: Score = f[2].parse().map_err(|e: String| ParseError::new(no, e))?;
            list.entries.push((resolve(no, &f[1], lookup)?, score));
        }
    }
    Ok(list)
}
