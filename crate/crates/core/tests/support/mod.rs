//! Fixtures shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use hrchain::consensus::{DiversityRule, LocalConsensus, MinerSet};
use hrchain::hrm::{EmploymentContract, HireDecision};
use hrchain::ledger::{build_genesis, decode_block, encode_block, validate_chain, Chain, GenesisMember, Transaction, TxKind};
use hrchain::record::Record;
use hrchain::recruit::{
    ApplicantProfile, Authorities, Authority, Claim, ClaimKind, RankedList, RequirementItem, RequirementSpec, Score,
    Verdict, VerificationRecord,
};
use hrchain::registry::{Directory, Keypair, ParticipantId, Permission, Rights, Role};
use hrchain_oracle::ranking::{AuthRole, Instance, Outcome, KINDS};

/// An oracle instance rebuilt from hrchain types.
pub struct RankWorld {
    pub directory: Directory,
    pub authorities: Authorities,
    pub profiles: Vec<ApplicantProfile>,
    pub spec: RequirementSpec,
    pub ids: Vec<[u8; 32]>,
}

fn record(text: &str) -> Record {
    text.parse().expect("oracle statements parse")
}

pub fn rank_world(seed: u64, inst: &Instance) -> RankWorld {
    let company = Keypair::derive("oracle-company");
    let mut directory = Directory::new();
    directory
        .apply_grant(&Permission {
            subject: company.id(),
            role: Role::RecruitingCompany,
            rights: Rights::MINE,
            grantor: company.id(),
        })
        .unwrap();

    let auth_keys: Vec<Keypair> = (0..inst.authorities.len())
        .map(|i| Keypair::derive(&format!("oracle-authority-{i}")))
        .collect();
    let mut authorities = Authorities::new();
    for (a, key) in inst.authorities.iter().zip(&auth_keys) {
        let role = match a.role {
            AuthRole::Employer => Role::Employer,
            AuthRole::Health => Role::HealthAuthority,
            AuthRole::Law => Role::LawAgency,
        };
        let rights = if a.attests { Rights::ATTEST } else { Rights::CONNECT | Rights::SEND };
        directory
            .apply_grant(&Permission {
                subject: key.id(),
                role,
                rights,
                grantor: company.id(),
            })
            .unwrap();
        if a.attests {
            authorities.insert(key.id(), Authority::new(key.clone()));
        }
    }

    let applicant_ids: Vec<ParticipantId> = (0..inst.applicants.len())
        .map(|i| Keypair::derive(&format!("oracle-applicant-{seed}-{i}")).id())
        .collect();
    for e in &inst.store {
        let auth = authorities.get_mut(&auth_keys[e.authority].id()).expect("store targets attest");
        auth.store.insert(
            applicant_ids[e.applicant],
            KINDS[e.kind].parse().unwrap(),
            record(&e.statement.render()),
        );
    }

    let profiles = inst
        .applicants
        .iter()
        .zip(&applicant_ids)
        .map(|(claims, id)| ApplicantProfile {
            applicant: *id,
            claims: claims
                .iter()
                .map(|c| {
                    let mut claim = Claim::new(KINDS[c.kind].parse().unwrap(), auth_keys[c.issuer].id(), record(&c.hashed.render()));
                    claim.statement = record(&c.shown.render());
                    claim
                })
                .collect(),
        })
        .collect();

    let spec = RequirementSpec {
        company: company.id(),
        items: inst
            .items
            .iter()
            .map(|i| RequirementItem {
                kind: KINDS[i.kind].parse().unwrap(),
                predicate: i.pred.render().parse().unwrap(),
                weight: Score::from_micros(i.weight_micros),
                mandatory: i.mandatory,
            })
            .collect(),
    };

    RankWorld {
        directory,
        authorities,
        profiles,
        spec,
        ids: applicant_ids.iter().map(|id| *id.as_bytes()).collect(),
    }
}

/// Maps a ranked list back to oracle indices.
pub fn to_outcome(list: &RankedList, world: &RankWorld) -> Outcome {
    let index = |id: &ParticipantId| world.ids.iter().position(|x| x == id.as_bytes()).expect("known applicant");
    Outcome {
        ranked: list.entries.iter().map(|(id, s)| (index(id), s.micros())).collect(),
        discarded: list.discarded.iter().map(|(id, r)| (index(id), r.as_str())).collect(),
    }
}

/// The five deployment miners in rotation order.
pub const MINERS: [(&str, Role); 5] = [
    ("company", Role::RecruitingCompany),
    ("employer", Role::Employer),
    ("applicants", Role::Applicant),
    ("health", Role::HealthAuthority),
    ("law", Role::LawAgency),
];

pub struct Deployment {
    pub keys: Vec<Keypair>,
    pub workers: Vec<Keypair>,
    pub chain: Chain,
    pub consensus: LocalConsensus,
}

impl Deployment {
    pub fn key(&self, name: &str) -> &Keypair {
        let i = MINERS.iter().position(|(n, _)| *n == name).expect("miner name");
        &self.keys[i]
    }

    pub fn directory(&self) -> Directory {
        Directory::from_chain(&self.chain)
    }
}

/// Genesis with the five miners plus `workers` applicants.
pub fn deployment(workers: usize) -> Deployment {
    let keys: Vec<Keypair> = MINERS.iter().map(|(n, _)| Keypair::derive(n)).collect();
    let workers: Vec<Keypair> = (0..workers).map(|i| Keypair::derive(&format!("worker{i}"))).collect();
    let mut members: Vec<GenesisMember> = MINERS
        .iter()
        .zip(&keys)
        .map(|((_, role), k)| GenesisMember {
            id: k.id(),
            role: *role,
            rights: Rights::CONNECT | Rights::SEND | Rights::MINE | if role.is_authority() { Rights::ATTEST } else { Rights::NONE },
        })
        .collect();
    members.extend(workers.iter().map(|k| GenesisMember {
        id: k.id(),
        role: Role::Applicant,
        rights: Rights::CONNECT | Rights::SEND,
    }));
    let genesis = build_genesis(&keys[0], &members).unwrap();
    let set = MinerSet::new(keys.iter().map(Keypair::id).collect()).unwrap();
    Deployment {
        consensus: LocalConsensus::new(set, DiversityRule::default_075(), keys.clone()),
        keys,
        workers,
        chain: Chain::from_genesis(genesis),
    }
}

/// A chain of `height` blocks above genesis carrying a mix of attestation
/// and contract transactions.
pub fn sample_chain(height: u64) -> Deployment {
    let mut d = deployment(3);
    let employer = d.key("employer").clone();
    let law = d.key("law").clone();
    for h in 1..=height {
        let worker = d.workers[(h as usize) % d.workers.len()].clone();
        let mut txs = Vec::new();
        let claim = Claim::new(ClaimKind::CriminalRecord, law.id(), record(&format!("cleared=true;case={h}")));
        let att = VerificationRecord::signed(worker.id(), claim.evidence_hash, Verdict::Confirmed, &law);
        txs.push(att.to_transaction(&law, d.chain.next_nonce(&law.id())));
        if h % 2 == 0 {
            let contract = contract_for(&worker, &employer, h);
            txs.push(hrchain::hrm::contract_transaction(&contract, &employer, d.chain.next_nonce(&employer.id())));
        }
        if h % 3 == 0 {
            txs.push(Transaction::new_signed(TxKind::HrEventRecord, vec![h as u8; 5], d.chain.next_nonce(&worker.id()), &worker));
        }
        d.consensus.commit(&mut d.chain, txs).unwrap();
    }
    d
}

pub fn contract_for(employee: &Keypair, employer: &Keypair, n: u64) -> EmploymentContract {
    let sections = [
        record(&format!("name=worker;ref={n}")),
        record("degree=MSc"),
        record("years=3"),
        record(&format!("company=employer;hired_at={n}")),
        record(&format!("salary={};notice_days=30", 40_000 + n)),
    ];
    EmploymentContract::new_signed(sections, employee, employer)
}

pub fn hire_decision(contract: &EmploymentContract) -> HireDecision {
    HireDecision {
        company: contract.employer,
        applicant: contract.employee,
        source_rank: 1,
    }
}

/// Ranked list holding every given applicant with equal scores.
pub fn ranked(ids: &[ParticipantId]) -> RankedList {
    let mut entries: Vec<_> = ids.iter().map(|id| (*id, Score::from_units(1))).collect();
    entries.sort_by_key(|e| e.0);
    RankedList {
        entries,
        discarded: Vec::new(),
    }
}

/// Flips every byte of every block's encoding in turn and checks that the
/// block fails to decode or the chain fails validation at or below its
/// height. Returns the number of flips tried.
pub fn tamper_sweep(d: &Deployment) -> Result<usize, String> {
    let (rule, miners) = (&d.consensus.rule, &d.consensus.miners);
    validate_chain(&d.chain, rule, miners).map_err(|e| format!("untampered chain invalid: {e:?}"))?;
    let mut flips = 0;
    for (h, block) in d.chain.blocks().iter().enumerate() {
        let bytes = encode_block(block);
        for i in 0..bytes.len() {
            let mut bad = bytes.clone();
            bad[i] ^= 0xff;
            flips += 1;
            let Ok(decoded) = decode_block(&bad) else { continue };
            let mut blocks = d.chain.blocks()[..h].to_vec();
            blocks.push(decoded);
            let tampered = Chain::from_blocks(blocks).expect("non-empty");
            match validate_chain(&tampered, rule, miners) {
                Err((at, _)) if at <= h as u64 => {}
                Err((at, e)) => return Err(format!("byte {i} of block {h} caught late at {at}: {e}")),
                Ok(()) => return Err(format!("byte {i} of block {h} went unnoticed")),
            }
        }
    }
    Ok(flips)
}
