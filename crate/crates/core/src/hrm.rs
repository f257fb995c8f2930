//! Employment contracts and HR events committed to the chain.
//!
//! A hire becomes one `ContractRecord` transaction in its own block. Later
//! changes (salary, title, training, transfer...) are `HrEventRecord`s that
//! only the employee's current employer may issue. The current employer is
//! the employer on the latest contract, cleared by a `Transfer` event with
//! `terminated=true`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::consensus::{Commit, ConsensusError, LocalConsensus};
use crate::ledger::codec::{Canonical, DecodeError, Reader, Writer};
use crate::ledger::{double_hash, Chain, Digest, Transaction, TxKind};
use crate::record::Record;
use crate::recruit::{RankedList, VerificationRecord};
use crate::registry::{verify_signed_by, Directory, Keypair, ParticipantId, Signature};
use crate::text::ParseError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HrmError {
    #[error("invalid signature")]
    BadSignature,
    #[error("participant {0:?} is not registered")]
    UnknownParticipant(ParticipantId),
    #[error("applicant {0:?} is not in the company's latest ranked list")]
    NotRanked(ParticipantId),
    #[error("hire decision does not match the contract parties")]
    PartyMismatch,
    #[error("{issuer:?} is not the current employer of {subject:?}")]
    NotCurrentEmployer { issuer: ParticipantId, subject: ParticipantId },
    #[error("consensus stalled: no eligible miner")]
    ConsensusStalled,
    #[error(transparent)]
    Consensus(ConsensusError),
}

impl From<ConsensusError> for HrmError {
    fn from(e: ConsensusError) -> Self {
        match e {
            ConsensusError::ConsensusStalled => HrmError::ConsensusStalled,
            other => HrmError::Consensus(other),
        }
    }
}

/// Section headings of a contract, in encoding order.
pub const SECTION_NAMES: [&str; 5] = [
    "Personal Information",
    "Previous job information",
    "Company Information",
    "Company terms",
    "Employee terms",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmploymentContract {
    pub personal_info: Record,
    pub previous_job_info: Record,
    pub company_info: Record,
    pub company_terms: Record,
    pub employee_terms: Record,
    pub employee: ParticipantId,
    pub employer: ParticipantId,
    pub employee_signature: Signature,
    pub employer_signature: Signature,
}

impl EmploymentContract {
    /// Builds a contract from its five sections and has both parties sign.
    pub fn new_signed(sections: [Record; 5], employee: &Keypair, employer: &Keypair) -> Self {
        let [personal_info, previous_job_info, company_info, company_terms, employee_terms] = sections;
        let mut c = EmploymentContract {
            personal_info,
            previous_job_info,
            company_info,
            company_terms,
            employee_terms,
            employee: employee.id(),
            employer: employer.id(),
            employee_signature: Signature::none(),
            employer_signature: Signature::none(),
        };
        let msg = c.signing_bytes();
        c.employee_signature = employee.sign(&msg);
        c.employer_signature = employer.sign(&msg);
        c
    }

    pub fn sections(&self) -> [&Record; 5] {
        [
            &self.personal_info,
            &self.previous_job_info,
            &self.company_info,
            &self.company_terms,
            &self.employee_terms,
        ]
    }

    /// The five sections and both party ids.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_body(&mut w);
        w.finish()
    }

    fn encode_body(&self, w: &mut Writer) {
        for s in self.sections() {
            s.encode_into(w);
        }
        self.employee.encode_into(w);
        self.employer.encode_into(w);
    }

    pub fn verify_signatures(&self) -> bool {
        let msg = self.signing_bytes();
        verify_signed_by(&self.employee, &msg, &self.employee_signature)
            && verify_signed_by(&self.employer, &msg, &self.employer_signature)
    }
}

impl Canonical for EmploymentContract {
    fn encode_into(&self, w: &mut Writer) {
        self.encode_body(w);
        self.employee_signature.encode_into(w);
        self.employer_signature.encode_into(w);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(EmploymentContract {
            personal_info: Record::decode_from(r)?,
            previous_job_info: Record::decode_from(r)?,
            company_info: Record::decode_from(r)?,
            company_terms: Record::decode_from(r)?,
            employee_terms: Record::decode_from(r)?,
            employee: ParticipantId::decode_from(r)?,
            employer: ParticipantId::decode_from(r)?,
            employee_signature: Signature::decode_from(r)?,
            employer_signature: Signature::decode_from(r)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HrEventKind {
    Salary,
    Title,
    Promotion,
    Training,
    Leave,
    Performance,
    Transfer,
}

impl HrEventKind {
    pub const ALL: [HrEventKind; 7] = [
        HrEventKind::Salary,
        HrEventKind::Title,
        HrEventKind::Promotion,
        HrEventKind::Training,
        HrEventKind::Leave,
        HrEventKind::Performance,
        HrEventKind::Transfer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HrEventKind::Salary => "Salary",
            HrEventKind::Title => "Title",
            HrEventKind::Promotion => "Promotion",
            HrEventKind::Training => "Training",
            HrEventKind::Leave => "Leave",
            HrEventKind::Performance => "Performance",
            HrEventKind::Transfer => "Transfer",
        }
    }
}

impl fmt::Display for HrEventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HrEventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown HR event kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HrEventRecord {
    pub subject: ParticipantId,
    pub kind: HrEventKind,
    pub details: Record,
    pub effective_tick: u64,
    pub issuer: ParticipantId,
    pub issuer_signature: Signature,
}

impl HrEventRecord {
    pub fn new_signed(subject: ParticipantId, kind: HrEventKind, details: Record, effective_tick: u64, issuer: &Keypair) -> Self {
        let mut e = HrEventRecord {
            subject,
            kind,
            details,
            effective_tick,
            issuer: issuer.id(),
            issuer_signature: Signature::none(),
        };
        e.issuer_signature = issuer.sign(&e.signing_bytes());
        e
    }

    fn encode_body(&self, w: &mut Writer) {
        self.subject.encode_into(w);
        let tag = HrEventKind::ALL.iter().position(|k| *k == self.kind).expect("listed") as u8;
        w.u8(tag);
        self.details.encode_into(w);
        w.u64(self.effective_tick);
        self.issuer.encode_into(w);
    }

    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_body(&mut w);
        w.finish()
    }

    pub fn verify_signature(&self) -> bool {
        verify_signed_by(&self.issuer, &self.signing_bytes(), &self.issuer_signature)
    }

    /// A transfer that ends the current employment.
    pub fn is_termination(&self) -> bool {
        self.kind == HrEventKind::Transfer && self.details.flag("terminated")
    }
}

impl Canonical for HrEventRecord {
    fn encode_into(&self, w: &mut Writer) {
        self.encode_body(w);
        self.issuer_signature.encode_into(w);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let subject = ParticipantId::decode_from(r)?;
        let tag = r.u8()?;
        let kind = *HrEventKind::ALL
            .get(tag as usize)
            .ok_or(DecodeError::BadTag { what: "hr event kind", tag })?;
        Ok(HrEventRecord {
            subject,
            kind,
            details: Record::decode_from(r)?,
            effective_tick: r.u64()?,
            issuer: ParticipantId::decode_from(r)?,
            issuer_signature: Signature::decode_from(r)?,
        })
    }
}

/// A company's choice of a ranked applicant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HireDecision {
    pub company: ParticipantId,
    pub applicant: ParticipantId,
    /// 1-based position in the ranked list the decision came from.
    pub source_rank: u32,
}

/// Current employer of every employed participant, folded over the chain.
pub fn employers(chain: &Chain) -> BTreeMap<ParticipantId, ParticipantId> {
    let mut map = BTreeMap::new();
    for (_, tx) in chain.transactions() {
        match tx.kind {
            TxKind::ContractRecord => {
                if let Ok(c) = EmploymentContract::from_canonical_bytes(&tx.payload) {
                    map.insert(c.employee, c.employer);
                }
            }
            TxKind::HrEventRecord => {
                if let Ok(e) = HrEventRecord::from_canonical_bytes(&tx.payload) {
                    if e.is_termination() && map.get(&e.subject) == Some(&e.issuer) {
                        map.remove(&e.subject);
                    }
                }
            }
            _ => {}
        }
    }
    map
}

pub fn current_employer(chain: &Chain, subject: &ParticipantId) -> Option<ParticipantId> {
    employers(chain).get(subject).copied()
}

/// Checks a hire before it is announced.
pub fn check_hire(
    decision: &HireDecision,
    contract: &EmploymentContract,
    ranked: &RankedList,
    directory: &Directory,
) -> Result<(), HrmError> {
    if !contract.verify_signatures() {
        return Err(HrmError::BadSignature);
    }
    for party in [contract.employee, contract.employer] {
        if !directory.contains(&party) {
            return Err(HrmError::UnknownParticipant(party));
        }
    }
    if decision.applicant != contract.employee || decision.company != contract.employer {
        return Err(HrmError::PartyMismatch);
    }
    if !ranked.contains(&decision.applicant) {
        return Err(HrmError::NotRanked(decision.applicant));
    }
    Ok(())
}

/// Checks an HR event against the chain it will extend.
pub fn check_hr_event(event: &HrEventRecord, chain: &Chain) -> Result<(), HrmError> {
    if !event.verify_signature() {
        return Err(HrmError::BadSignature);
    }
    if current_employer(chain, &event.subject) != Some(event.issuer) {
        return Err(HrmError::NotCurrentEmployer {
            issuer: event.issuer,
            subject: event.subject,
        });
    }
    Ok(())
}

pub fn contract_transaction(contract: &EmploymentContract, employer: &Keypair, nonce: u64) -> Transaction {
    Transaction::new_signed(TxKind::ContractRecord, contract.to_canonical_bytes(), nonce, employer)
}

pub fn event_transaction(event: &HrEventRecord, issuer: &Keypair, nonce: u64) -> Transaction {
    Transaction::new_signed(TxKind::HrEventRecord, event.to_canonical_bytes(), nonce, issuer)
}

/// Commits a hire as a new block holding exactly its `ContractRecord`.
/// `employer` signs the transaction and must be the contract's employer.
pub fn record_hire(
    decision: &HireDecision,
    contract: &EmploymentContract,
    ranked: &RankedList,
    directory: &Directory,
    chain: &mut Chain,
    consensus: &LocalConsensus,
    employer: &Keypair,
) -> Result<Commit, HrmError> {
    check_hire(decision, contract, ranked, directory)?;
    if employer.id() != contract.employer {
        return Err(HrmError::PartyMismatch);
    }
    let tx = contract_transaction(contract, employer, chain.next_nonce(&employer.id()));
    Ok(consensus.commit(chain, vec![tx])?)
}

/// Commits an HR event issued by the subject's current employer.
pub fn record_hr_event(
    event: &HrEventRecord,
    chain: &mut Chain,
    consensus: &LocalConsensus,
    issuer: &Keypair,
) -> Result<Commit, HrmError> {
    check_hr_event(event, chain)?;
    if issuer.id() != event.issuer {
        return Err(HrmError::BadSignature);
    }
    let tx = event_transaction(event, issuer, chain.next_nonce(&issuer.id()));
    Ok(consensus.commit(chain, vec![tx])?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HistoryRecord {
    Contract(EmploymentContract),
    HrEvent(HrEventRecord),
    Attestation(VerificationRecord),
}

impl HistoryRecord {
    pub fn kind(&self) -> TxKind {
        match self {
            HistoryRecord::Contract(_) => TxKind::ContractRecord,
            HistoryRecord::HrEvent(_) => TxKind::HrEventRecord,
            HistoryRecord::Attestation(_) => TxKind::ClaimAttestation,
        }
    }

    /// Canonical payload bytes, identical to what the chain stores.
    pub fn payload(&self) -> Vec<u8> {
        match self {
            HistoryRecord::Contract(c) => c.to_canonical_bytes(),
            HistoryRecord::HrEvent(e) => e.to_canonical_bytes(),
            HistoryRecord::Attestation(a) => a.to_canonical_bytes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryItem {
    pub height: u64,
    pub tx_id: Digest,
    pub record: HistoryRecord,
}

/// Every committed record about `subject`, in commit order: contracts where
/// it is either party, HR events about it, and attestations of its claims.
pub fn query_history(subject: &ParticipantId, chain: &Chain) -> Vec<HistoryItem> {
    let mut out = Vec::new();
    for (height, tx) in chain.transactions() {
        let record = match tx.kind {
            TxKind::ContractRecord => EmploymentContract::from_canonical_bytes(&tx.payload)
                .ok()
                .filter(|c| c.employee == *subject || c.employer == *subject)
                .map(HistoryRecord::Contract),
            TxKind::HrEventRecord => HrEventRecord::from_canonical_bytes(&tx.payload)
                .ok()
                .filter(|e| e.subject == *subject)
                .map(HistoryRecord::HrEvent),
            TxKind::ClaimAttestation => VerificationRecord::from_canonical_bytes(&tx.payload)
                .ok()
                .filter(|a| a.subject == *subject)
                .map(HistoryRecord::Attestation),
            TxKind::PermissionGrant => None,
        };
        if let Some(record) = record {
            out.push(HistoryItem {
                height,
                tx_id: tx.id(),
                record,
            });
        }
    }
    out
}

/// CSV: `height,kind,subject,details_hash`.
pub fn export_history(subject: &str, items: &[HistoryItem]) -> String {
    let mut out = String::from("height,kind,subject,details_hash\n");
    for item in items {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            item.height,
            item.record.kind(),
            subject,
            double_hash(&item.record.payload())
        );
    }
    out
}

/// A contract file: `employee = name` and `employer = name` lines, then the
/// five `[Section]` blocks of `key=value` lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractFile {
    pub employee: String,
    pub employer: String,
    pub sections: [Record; 5],
}

impl ContractFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut employee = None;
        let mut employer = None;
        let mut sections: [Option<Record>; 5] = Default::default();
        let mut current: Option<usize> = None;
        for (no, line) in crate::text::content_lines(text) {
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let idx = SECTION_NAMES
                    .iter()
                    .position(|s| s.eq_ignore_ascii_case(name.trim()))
                    .ok_or_else(|| ParseError::new(no, format!("unknown section `{name}`")))?;
                if sections[idx].is_some() {
                    return Err(ParseError::new(no, format!("section `{name}` given twice")));
                }
                sections[idx] = Some(Record::new());
                current = Some(idx);
                continue;
            }
            match current {
                None => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| ParseError::new(no, "expected `employee = name` or `employer = name`"))?;
                    match k.trim() {
                        "employee" => employee = Some(v.trim().to_owned()),
                        "employer" => employer = Some(v.trim().to_owned()),
                        other => return Err(ParseError::new(no, format!("unknown key `{other}`"))),
                    }
                }
                Some(idx) => {
                    let part: Record = line.parse().map_err(|e: String| ParseError::new(no, e))?;
                    let sec = sections[idx].as_mut().expect("opened above");
                    for (k, v) in part.iter() {
                        sec.insert(k, v.clone());
                    }
                }
            }
        }
        let missing = |what: &str| ParseError::new(0, format!("contract is missing {what}"));
        let sections = sections
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| missing(&format!("section [{}]", SECTION_NAMES[i]))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ContractFile {
            employee: employee.ok_or_else(|| missing("`employee`"))?,
            employer: employer.ok_or_else(|| missing("`employer`"))?,
            sections: sections.try_into().expect("five sections"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{DiversityRule, MinerSet};
    use crate::ledger::{build_genesis, GenesisMember};
    use crate::registry::{Rights, Role};
    use crate::recruit::Score;

    struct Fixture {
        company: Keypair,
        other: Keypair,
        alice: Keypair,
        chain: Chain,
        dir: Directory,
        consensus: LocalConsensus,
    }

    fn fixture() -> Fixture {
        let company = Keypair::derive("company");
        let other = Keypair::derive("other");
        let m3 = Keypair::derive("m3");
        let alice = Keypair::derive("alice");
        let members: Vec<GenesisMember> = [
            (&company, Role::RecruitingCompany, Rights::MINE),
            (&other, Role::Employer, Rights::MINE | Rights::ATTEST),
            (&m3, Role::LawAgency, Rights::MINE | Rights::ATTEST),
            (&alice, Role::Applicant, Rights::SEND),
        ]
        .into_iter()
        .map(|(k, role, rights)| GenesisMember { id: k.id(), role, rights })
        .collect();
        let chain = Chain::from_genesis(build_genesis(&company, &members).unwrap());
        let dir = Directory::from_chain(&chain);
        let miners = MinerSet::new(dir.miners()).unwrap();
        let consensus = LocalConsensus::new(
            miners,
            DiversityRule::default_075(),
            [company.clone(), other.clone(), m3.clone()],
        );
        Fixture {
            company,
            other,
            alice,
            chain,
            dir,
            consensus,
        }
    }

    fn sections() -> [Record; 5] {
        ["name=Alice", "employer=globex;years=3", "name=company", "probation=3", "salary=50000"]
            .map(|s| s.parse().unwrap())
    }

    fn ranked(alice: &Keypair) -> RankedList {
        RankedList {
            entries: vec![(alice.id(), Score::from_units(3))],
            discarded: vec![],
        }
    }

    fn hire(f: &mut Fixture) -> Commit {
        let contract = EmploymentContract::new_signed(sections(), &f.alice, &f.company);
        let decision = HireDecision {
            company: f.company.id(),
            applicant: f.alice.id(),
            source_rank: 1,
        };
        record_hire(&decision, &contract, &ranked(&f.alice), &f.dir, &mut f.chain, &f.consensus, &f.company).unwrap()
    }

    #[test]
    fn hire_adds_one_block_with_the_contract() {
        let mut f = fixture();
        let h = f.chain.height();
        hire(&mut f);
        assert_eq!(f.chain.height(), h + 1);
        let tip = f.chain.tip();
        assert_eq!(tip.transactions.len(), 1);
        assert_eq!(tip.transactions[0].kind, TxKind::ContractRecord);
        assert_eq!(current_employer(&f.chain, &f.alice.id()), Some(f.company.id()));
    }

    #[test]
    fn hire_checks() {
        let f = fixture();
        let contract = EmploymentContract::new_signed(sections(), &f.alice, &f.company);
        let decision = HireDecision {
            company: f.company.id(),
            applicant: f.alice.id(),
            source_rank: 1,
        };
        assert_eq!(
            check_hire(&decision, &contract, &RankedList::default(), &f.dir),
            Err(HrmError::NotRanked(f.alice.id()))
        );
        let mut forged = contract.clone();
        forged.employee_terms = "salary=90000".parse().unwrap();
        assert_eq!(check_hire(&decision, &forged, &ranked(&f.alice), &f.dir), Err(HrmError::BadSignature));
        let stranger = Keypair::derive("stranger");
        let c2 = EmploymentContract::new_signed(sections(), &stranger, &f.company);
        assert_eq!(
            check_hire(&decision, &c2, &ranked(&f.alice), &f.dir),
            Err(HrmError::UnknownParticipant(stranger.id()))
        );
    }

    #[test]
    fn events_need_the_current_employer() {
        let mut f = fixture();
        hire(&mut f);
        let promo = HrEventRecord::new_signed(f.alice.id(), HrEventKind::Promotion, "title=lead".parse().unwrap(), 10, &f.company);
        record_hr_event(&promo, &mut f.chain, &f.consensus, &f.company).unwrap();

        let salary = HrEventRecord::new_signed(f.alice.id(), HrEventKind::Salary, "amount=1".parse().unwrap(), 11, &f.other);
        assert_eq!(
            record_hr_event(&salary, &mut f.chain, &f.consensus, &f.other),
            Err(HrmError::NotCurrentEmployer {
                issuer: f.other.id(),
                subject: f.alice.id()
            })
        );
    }

    #[test]
    fn termination_clears_employer() {
        let mut f = fixture();
        hire(&mut f);
        let end = HrEventRecord::new_signed(f.alice.id(), HrEventKind::Transfer, "terminated=true".parse().unwrap(), 5, &f.company);
        record_hr_event(&end, &mut f.chain, &f.consensus, &f.company).unwrap();
        assert_eq!(current_employer(&f.chain, &f.alice.id()), None);
    }

    #[test]
    fn history_in_commit_order() {
        let mut f = fixture();
        assert!(query_history(&f.alice.id(), &f.chain).is_empty());
        hire(&mut f);
        for (i, kind) in [HrEventKind::Training, HrEventKind::Salary].into_iter().enumerate() {
            let e = HrEventRecord::new_signed(f.alice.id(), kind, "x=1".parse().unwrap(), i as u64, &f.company);
            record_hr_event(&e, &mut f.chain, &f.consensus, &f.company).unwrap();
        }
        let hist = query_history(&f.alice.id(), &f.chain);
        assert_eq!(hist.len(), 3);
        assert_eq!(hist[0].record.kind(), TxKind::ContractRecord);
        assert!(matches!(&hist[1].record, HistoryRecord::HrEvent(e) if e.kind == HrEventKind::Training));
        assert!(hist.windows(2).all(|w| w[0].height < w[1].height));
        assert!(query_history(&Keypair::derive("nobody").id(), &f.chain).is_empty());
        let csv = export_history("alice", &hist);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("height,kind,subject,details_hash\n"));
    }

    #[test]
    fn contract_round_trip() {
        let f = fixture();
        let c = EmploymentContract::new_signed(sections(), &f.alice, &f.company);
        assert!(c.verify_signatures());
        assert_eq!(EmploymentContract::from_canonical_bytes(&c.to_canonical_bytes()).unwrap(), c);
    }

    #[test]
    fn contract_file_parse() {
        let text = "employee = alice\nemployer = company\n[Personal Information]\nname=Alice;age=30\n[Previous job information]\nemployer=globex\n[Company Information]\nname=Acme\n[Company terms]\nprobation=3\n[Employee terms]\nsalary=50000\nhours=40\n";
        let cf = ContractFile::parse(text).unwrap();
        assert_eq!(cf.employee, "alice");
        assert_eq!(cf.sections[4].len(), 2);
        let missing = ContractFile::parse("employee = a\nemployer = b\n[Personal Information]\nx=1\n").unwrap_err();
        assert!(missing.message.contains("Previous job information"));
        assert_eq!(ContractFile::parse("[Bogus]\n").unwrap_err().line, 1);
    }
}
