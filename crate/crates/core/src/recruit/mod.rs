//! Applicant verification, screening and ranking.
//!
//! Each claim an applicant makes is sent to the participant responsible for
//! it (see [`authority_for`]), which answers with a signed
//! [`VerificationRecord`]. Profiles with refuted claims, adverse criminal or
//! performance records, or statements that do not match their evidence
//! hash are discarded. The rest are scored against a company's
//! [`RequirementSpec`] and sorted into a [`RankedList`].

pub mod io;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ledger::codec::{Canonical, DecodeError, Reader, Writer};
use crate::ledger::{double_hash, Digest, Transaction, TxKind};
use crate::record::{Record, Value};
use crate::registry::{authority_for, verify_signed_by, Directory, Keypair, ParticipantId, RegistryError, Role, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecruitError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("attestation signature failed to verify")]
    SignatureFailure,
    #[error("claim {0:?} has no verification record")]
    MissingVerification(Digest),
    #[error("applicant {0:?} listed twice")]
    DuplicateApplicant(ParticipantId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClaimKind {
    Education,
    Employment,
    Training,
    Certificate,
    SalaryHistory,
    Performance,
    HealthRecord,
    CriminalRecord,
}

impl ClaimKind {
    pub const ALL: [ClaimKind; 8] = [
        ClaimKind::Education,
        ClaimKind::Employment,
        ClaimKind::Training,
        ClaimKind::Certificate,
        ClaimKind::SalaryHistory,
        ClaimKind::Performance,
        ClaimKind::HealthRecord,
        ClaimKind::CriminalRecord,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimKind::Education => "Education",
            ClaimKind::Employment => "Employment",
            ClaimKind::Training => "Training",
            ClaimKind::Certificate => "Certificate",
            ClaimKind::SalaryHistory => "SalaryHistory",
            ClaimKind::Performance => "Performance",
            ClaimKind::HealthRecord => "HealthRecord",
            ClaimKind::CriminalRecord => "CriminalRecord",
        }
    }

    /// Role of the participant that attests this kind of claim.
    pub fn authority_role(self) -> Role {
        match self {
            ClaimKind::HealthRecord => Role::HealthAuthority,
            ClaimKind::CriminalRecord => Role::LawAgency,
            _ => Role::Employer,
        }
    }
}

impl fmt::Display for ClaimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClaimKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown claim kind `{s}`"))
    }
}

/// One assertion in an applicant's profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim {
    pub kind: ClaimKind,
    /// The authority the applicant says can confirm this.
    pub issuer: ParticipantId,
    pub statement: Record,
    pub evidence_hash: Digest,
}

impl Claim {
    pub fn new(kind: ClaimKind, issuer: ParticipantId, statement: Record) -> Self {
        let evidence_hash = double_hash(&statement.to_canonical_bytes());
        Claim {
            kind,
            issuer,
            statement,
            evidence_hash,
        }
    }

    pub fn evidence_matches(&self) -> bool {
        double_hash(&self.statement.to_canonical_bytes()) == self.evidence_hash
    }

    /// Statement carries `adverse=true`.
    pub fn is_adverse(&self) -> bool {
        self.statement.flag("adverse")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApplicantProfile {
    pub applicant: ParticipantId,
    pub claims: Vec<Claim>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Confirmed,
    Refuted,
    Unknown,
}

impl Verdict {
    fn tag(self) -> u8 {
        match self {
            Verdict::Confirmed => 0,
            Verdict::Refuted => 1,
            Verdict::Unknown => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// An authority's verdict on one claim. This is the payload of a
/// `ClaimAttestation` transaction.
///
/// Claims with no registered authority get an unsigned `Unknown` record
/// whose attester is [`ParticipantId::ZERO`]; those are never notarized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationRecord {
    pub subject: ParticipantId,
    pub claim_ref: Digest,
    pub verdict: Verdict,
    pub attester: ParticipantId,
    pub attester_signature: Signature,
}

impl VerificationRecord {
    fn signing_bytes(subject: &ParticipantId, claim_ref: &Digest, verdict: Verdict) -> Vec<u8> {
        let mut w = Writer::new();
        w.fixed(subject.as_bytes()).fixed(claim_ref.as_bytes()).u8(verdict.tag());
        w.finish()
    }

    pub fn signed(subject: ParticipantId, claim_ref: Digest, verdict: Verdict, attester: &Keypair) -> Self {
        let sig = attester.sign(&Self::signing_bytes(&subject, &claim_ref, verdict));
        VerificationRecord {
            subject,
            claim_ref,
            verdict,
            attester: attester.id(),
            attester_signature: sig,
        }
    }

    pub fn unattested(subject: ParticipantId, claim_ref: Digest) -> Self {
        VerificationRecord {
            subject,
            claim_ref,
            verdict: Verdict::Unknown,
            attester: ParticipantId::ZERO,
            attester_signature: Signature::none(),
        }
    }

    pub fn is_attested(&self) -> bool {
        !self.attester_signature.is_none()
    }

    pub fn verify(&self) -> bool {
        verify_signed_by(
            &self.attester,
            &Self::signing_bytes(&self.subject, &self.claim_ref, self.verdict),
            &self.attester_signature,
        )
    }

    /// Wraps the record as a `ClaimAttestation` signed by the attester.
    pub fn to_transaction(&self, attester: &Keypair, nonce: u64) -> Transaction {
        Transaction::new_signed(TxKind::ClaimAttestation, self.to_canonical_bytes(), nonce, attester)
    }
}

impl Canonical for VerificationRecord {
    fn encode_into(&self, w: &mut Writer) {
        self.subject.encode_into(w);
        w.fixed(self.claim_ref.as_bytes()).u8(self.verdict.tag());
        self.attester.encode_into(w);
        self.attester_signature.encode_into(w);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let subject = ParticipantId::decode_from(r)?;
        let claim_ref = Digest(r.array()?);
        let verdict = match r.u8()? {
            0 => Verdict::Confirmed,
            1 => Verdict::Refuted,
            2 => Verdict::Unknown,
            tag => return Err(DecodeError::BadTag { what: "verdict", tag }),
        };
        Ok(VerificationRecord {
            subject,
            claim_ref,
            verdict,
            attester: ParticipantId::decode_from(r)?,
            attester_signature: Signature::decode_from(r)?,
        })
    }
}

/// Records an authority holds about applicants, by applicant and kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuthorityStore {
    records: BTreeMap<(ParticipantId, ClaimKind), Vec<Record>>,
}

impl AuthorityStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, applicant: ParticipantId, kind: ClaimKind, statement: Record) {
        self.records.entry((applicant, kind)).or_default().push(statement);
    }

    /// Exact evidence match confirms; any other record for the same
    /// applicant and kind refutes; no record at all is unknown.
    pub fn lookup(&self, applicant: &ParticipantId, kind: ClaimKind, evidence_hash: &Digest) -> Verdict {
        match self.records.get(&(*applicant, kind)) {
            None => Verdict::Unknown,
            Some(stored) if stored
                .iter()
                .any(|r| double_hash(&r.to_canonical_bytes()) == *evidence_hash) =>
            {
                Verdict::Confirmed
            }
            Some(_) => Verdict::Refuted,
        }
    }
}

/// An attesting participant: its key and what it knows.
#[derive(Debug, Clone)]
pub struct Authority {
    pub key: Keypair,
    pub store: AuthorityStore,
}

impl Authority {
    pub fn new(key: Keypair) -> Self {
        Authority {
            key,
            store: AuthorityStore::new(),
        }
    }

    pub fn attest(&self, applicant: &ParticipantId, claim: &Claim) -> VerificationRecord {
        let verdict = self.store.lookup(applicant, claim.kind, &claim.evidence_hash);
        VerificationRecord::signed(*applicant, claim.evidence_hash, verdict, &self.key)
    }
}

/// Authorities reachable for verification, by id.
pub type Authorities = BTreeMap<ParticipantId, Authority>;

/// Routes `claim` to its responsible authority and returns the signed
/// verdict.
pub fn verify_claim(
    applicant: &ParticipantId,
    claim: &Claim,
    directory: &Directory,
    authorities: &Authorities,
) -> Result<VerificationRecord, RecruitError> {
    let attester = authority_for(claim.kind, &claim.issuer, directory)?;
    let authority = authorities
        .get(&attester)
        .ok_or(RegistryError::NoAuthorityRegistered(claim.kind))?;
    let record = authority.attest(applicant, claim);
    if !record.verify() {
        return Err(RecruitError::SignatureFailure);
    }
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiscardReason {
    /// A claim was refuted by its authority.
    FakeCertificate,
    /// A confirmed criminal record carries `adverse=true`.
    LawIssue,
    /// A confirmed performance record carries `adverse=true`.
    BehaviouralIssue,
    /// A statement does not hash to its evidence hash.
    EvidenceMismatch,
    /// A mandatory requirement is not met.
    Disqualified,
}

impl DiscardReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscardReason::FakeCertificate => "FakeCertificate",
            DiscardReason::LawIssue => "LawIssue",
            DiscardReason::BehaviouralIssue => "BehaviouralIssue",
            DiscardReason::EvidenceMismatch => "EvidenceMismatch",
            DiscardReason::Disqualified => "Disqualified",
        }
    }
}

impl fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiscardReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            DiscardReason::FakeCertificate,
            DiscardReason::LawIssue,
            DiscardReason::BehaviouralIssue,
            DiscardReason::EvidenceMismatch,
            DiscardReason::Disqualified,
        ]
        .into_iter()
        .find(|r| r.as_str() == s.trim())
        .ok_or_else(|| format!("unknown discard reason `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Screening {
    Pass,
    Discard(DiscardReason),
}

fn verdicts_for<'a>(
    profile: &'a ApplicantProfile,
    records: &[VerificationRecord],
) -> Result<Vec<(&'a Claim, Verdict)>, RecruitError> {
    // Two claims may share an evidence hash; their records pair up in order
    // and the last one is reused if records run short.
    let mut by_ref: BTreeMap<Digest, VecDeque<Verdict>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.subject == profile.applicant) {
        by_ref.entry(r.claim_ref).or_default().push_back(r.verdict);
    }
    profile
        .claims
        .iter()
        .map(|c| {
            let queue = by_ref
                .get_mut(&c.evidence_hash)
                .ok_or(RecruitError::MissingVerification(c.evidence_hash))?;
            let v = if queue.len() > 1 { queue.pop_front() } else { queue.front().copied() };
            Ok((c, v.expect("queues are never empty")))
        })
        .collect()
}

/// Decides whether a profile is ranked at all.
///
/// Reasons are checked in a fixed order: refuted claims, then adverse
/// criminal records, then adverse performance records, then evidence
/// mismatches.
pub fn screen(profile: &ApplicantProfile, records: &[VerificationRecord]) -> Result<Screening, RecruitError> {
    let checked = verdicts_for(profile, records)?;
    let confirmed_adverse = |kind| {
        checked
            .iter()
            .any(|(c, v)| c.kind == kind && *v == Verdict::Confirmed && c.is_adverse())
    };
    let reason = if checked.iter().any(|(_, v)| *v == Verdict::Refuted) {
        Some(DiscardReason::FakeCertificate)
    } else if confirmed_adverse(ClaimKind::CriminalRecord) {
        Some(DiscardReason::LawIssue)
    } else if confirmed_adverse(ClaimKind::Performance) {
        Some(DiscardReason::BehaviouralIssue)
    } else if checked.iter().any(|(c, _)| !c.evidence_matches()) {
        Some(DiscardReason::EvidenceMismatch)
    } else {
        None
    };
    Ok(reason.map_or(Screening::Pass, Screening::Discard))
}

/// A non-negative decimal with six fractional digits, stored exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Score(u64);

impl Score {
    pub const ZERO: Score = Score(0);
    const SCALE: u64 = 1_000_000;

    pub fn from_units(whole: u64) -> Self {
        Score(whole * Self::SCALE)
    }

    pub fn micros(self) -> u64 {
        self.0
    }

    pub fn from_micros(m: u64) -> Self {
        Score(m)
    }
}

impl std::ops::Add for Score {
    type Output = Score;
    fn add(self, rhs: Score) -> Score {
        Score(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Score {
    fn sum<I: Iterator<Item = Score>>(iter: I) -> Score {
        iter.fold(Score::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / Self::SCALE;
        let frac = self.0 % Self::SCALE;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl FromStr for Score {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("bad weight `{s}`, expected a non-negative decimal");
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if int.is_empty() || !digits(int) || !digits(frac) || frac.len() > 6 {
            return Err(bad());
        }
        let whole: u64 = int.parse().map_err(|_| bad())?;
        let frac_v: u64 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<6}").parse().map_err(|_| bad())?
        };
        whole
            .checked_mul(Self::SCALE)
            .and_then(|v| v.checked_add(frac_v))
            .map(Score)
            .ok_or_else(bad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Test over one statement field. Thresholds apply to integers only;
/// equality applies to any value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    /// Any confirmed claim of the kind satisfies the item.
    Any,
    Compare { field: String, op: CmpOp, value: Value },
}

impl Predicate {
    pub fn eval(&self, statement: &Record) -> bool {
        let Predicate::Compare { field, op, value } = self else {
            return true;
        };
        let Some(actual) = statement.get(field) else {
            return false;
        };
        match op {
            CmpOp::Eq => actual == value,
            CmpOp::Ne => actual != value,
            _ => match (actual, value) {
                (Value::Int(a), Value::Int(b)) => match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Eq | CmpOp::Ne => unreachable!(),
                },
                _ => false,
            },
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Any => f.write_str("*"),
            Predicate::Compare { field, op, value } => write!(f, "{field}{}{value}", op.symbol()),
        }
    }
}

impl FromStr for Predicate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "*" {
            return Ok(Predicate::Any);
        }
        // two-character operators first so `>=` is not read as `>`
        const OPS: [(&str, CmpOp); 6] = [
            ("!=", CmpOp::Ne),
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("=", CmpOp::Eq),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ];
        for (sym, op) in OPS {
            if let Some((field, value)) = s.split_once(sym) {
                let field = field.trim();
                if field.is_empty() || field.contains(['<', '>', '!', '=']) {
                    continue;
                }
                let value = Value::parse(value);
                if !matches!(op, CmpOp::Eq | CmpOp::Ne) && !matches!(value, Value::Int(_)) {
                    return Err(format!("threshold `{s}` needs an integer"));
                }
                return Ok(Predicate::Compare {
                    field: field.to_owned(),
                    op,
                    value,
                });
            }
        }
        Err(format!("bad predicate `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequirementItem {
    pub kind: ClaimKind,
    pub predicate: Predicate,
    pub weight: Score,
    pub mandatory: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequirementSpec {
    pub company: ParticipantId,
    pub items: Vec<RequirementItem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Match {
    Score(Score),
    Disqualified,
}

/// Sum of weights of satisfied items. An item is satisfied when some
/// confirmed claim of its kind makes the predicate true.
pub fn matching_score(
    profile: &ApplicantProfile,
    records: &[VerificationRecord],
    spec: &RequirementSpec,
) -> Result<Match, RecruitError> {
    let checked = verdicts_for(profile, records)?;
    let mut score = Score::ZERO;
    for item in &spec.items {
        let satisfied = checked
            .iter()
            .any(|(c, v)| *v == Verdict::Confirmed && c.kind == item.kind && item.predicate.eval(&c.statement));
        if satisfied {
            score = score + item.weight;
        } else if item.mandatory {
            return Ok(Match::Disqualified);
        }
    }
    Ok(Match::Score(score))
}

/// Ranked applicants and those set aside.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankedList {
    /// Score descending, then applicant id ascending.
    pub entries: Vec<(ParticipantId, Score)>,
    /// In input order.
    pub discarded: Vec<(ParticipantId, DiscardReason)>,
}

impl RankedList {
    pub fn position(&self, applicant: &ParticipantId) -> Option<usize> {
        self.entries.iter().position(|(a, _)| a == applicant)
    }

    pub fn contains(&self, applicant: &ParticipantId) -> bool {
        self.position(applicant).is_some()
    }
}

/// Screens, scores and sorts profiles whose claims already have records.
pub fn rank_with_records(
    profiles: &[ApplicantProfile],
    records: &[VerificationRecord],
    spec: &RequirementSpec,
) -> Result<RankedList, RecruitError> {
    let mut seen = BTreeSet::new();
    let mut out = RankedList::default();
    for p in profiles {
        if !seen.insert(p.applicant) {
            return Err(RecruitError::DuplicateApplicant(p.applicant));
        }
        match screen(p, records)? {
            Screening::Discard(reason) => out.discarded.push((p.applicant, reason)),
            Screening::Pass => match matching_score(p, records, spec)? {
                Match::Score(s) => out.entries.push((p.applicant, s)),
                Match::Disqualified => out.discarded.push((p.applicant, DiscardReason::Disqualified)),
            },
        }
    }
    out.entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// Verifies every claim of every applicant, then screens, scores and
/// sorts. Claims without a reachable authority get an unsigned `Unknown`
/// record instead of failing the batch.
///
/// Returns the ranked list and every verification record, in applicant
/// then claim order.
pub fn rank_applicants(
    profiles: &[ApplicantProfile],
    directory: &Directory,
    authorities: &Authorities,
    spec: &RequirementSpec,
) -> Result<(RankedList, Vec<VerificationRecord>), RecruitError> {
    let mut records = Vec::new();
    for p in profiles {
        for claim in &p.claims {
            let record = match verify_claim(&p.applicant, claim, directory, authorities) {
                Ok(r) => r,
                Err(RecruitError::Registry(RegistryError::NoAuthorityRegistered(_))) => {
                    VerificationRecord::unattested(p.applicant, claim.evidence_hash)
                }
                Err(e) => return Err(e),
            };
            records.push(record);
        }
    }
    let ranked = rank_with_records(profiles, &records, spec)?;
    Ok((ranked, records))
}
