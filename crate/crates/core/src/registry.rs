//! Participant identities, roles, signatures and on-chain permissions.
//!
//! A participant is identified by the double hash of its Ed25519 public key.
//! Signatures are computed over the double hash of the message and carry
//! the signer's public key, so any holder of a chain can check who signed
//! what without a side channel.
//!
//! Rights live on chain as `PermissionGrant` transactions. [`Directory`] is
//! the fold of those grants; replaying a chain rebuilds it exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer as _, SigningKey, Verifier as _, VerifyingKey};
use thiserror::Error;

use crate::ledger::codec::{Canonical, DecodeError, Reader, Writer};
use crate::ledger::{double_hash, Chain, Digest, TxKind};
use crate::recruit::ClaimKind;

pub const PUBLIC_KEY_LEN: usize = 32;
pub const SECRET_KEY_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("bad key length {0}, expected 32")]
    BadKeyLength(usize),
    #[error("no authority registered for {0} claims")]
    NoAuthorityRegistered(ClaimKind),
    #[error("grantor {0} does not hold the Mine right")]
    GrantorNotMiner(ParticipantId),
    #[error("Attest granted to {0}, which does not hold an authority role")]
    AttestWithoutAuthority(ParticipantId),
}

/// Double hash of a participant's public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ParticipantId(pub Digest);

impl ParticipantId {
    pub const ZERO: ParticipantId = ParticipantId(Digest::ZERO);

    pub fn from_public_key(public_key: &[u8]) -> Self {
        ParticipantId(double_hash(public_key))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0 .0
    }

    pub fn short(&self) -> String {
        self.0.short()
    }
}

impl fmt::Debug for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParticipantId({})", self.0.short())
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Canonical for ParticipantId {
    fn encode_into(&self, w: &mut Writer) {
        w.fixed(self.as_bytes());
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(ParticipantId(Digest(r.array()?)))
    }
}

/// The five kinds of participating entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    RecruitingCompany,
    Employer,
    Applicant,
    HealthAuthority,
    LawAgency,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::RecruitingCompany,
        Role::Employer,
        Role::Applicant,
        Role::HealthAuthority,
        Role::LawAgency,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::RecruitingCompany => "RecruitingCompany",
            Role::Employer => "Employer",
            Role::Applicant => "Applicant",
            Role::HealthAuthority => "HealthAuthority",
            Role::LawAgency => "LawAgency",
        }
    }

    /// Roles allowed to hold the Attest right.
    pub fn is_authority(self) -> bool {
        matches!(self, Role::Employer | Role::HealthAuthority | Role::LawAgency)
    }

    fn tag(self) -> u8 {
        match self {
            Role::RecruitingCompany => 0,
            Role::Employer => 1,
            Role::Applicant => 2,
            Role::HealthAuthority => 3,
            Role::LawAgency => 4,
        }
    }

    fn from_tag(tag: u8) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.tag() == tag)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

/// Subset of {Connect, Send, Mine, Attest}.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rights(u8);

impl Rights {
    pub const NONE: Rights = Rights(0);
    pub const CONNECT: Rights = Rights(1);
    pub const SEND: Rights = Rights(2);
    pub const MINE: Rights = Rights(4);
    pub const ATTEST: Rights = Rights(8);
    const NAMES: [(Rights, &'static str); 4] = [
        (Rights::CONNECT, "connect"),
        (Rights::SEND, "send"),
        (Rights::MINE, "mine"),
        (Rights::ATTEST, "attest"),
    ];

    pub fn contains(self, other: Rights) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

impl std::ops::BitOr for Rights {
    type Output = Rights;
    fn bitor(self, rhs: Rights) -> Rights {
        Rights(self.0 | rhs.0)
    }
}

impl std::ops::BitOrAssign for Rights {
    fn bitor_assign(&mut self, rhs: Rights) {
        self.0 |= rhs.0;
    }
}

impl fmt::Debug for Rights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rights({self})")
    }
}

impl fmt::Display for Rights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = Self::NAMES
            .iter()
            .filter(|(r, _)| self.contains(*r))
            .map(|(_, n)| *n)
            .collect();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join("|"))
        }
    }
}

impl FromStr for Rights {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("none") {
            return Ok(Rights::NONE);
        }
        s.split('|').try_fold(Rights::NONE, |acc, part| {
            Self::NAMES
                .iter()
                .find(|(_, n)| n.eq_ignore_ascii_case(part.trim()))
                .map(|(r, _)| acc | *r)
                .ok_or_else(|| format!("unknown right `{part}`"))
        })
    }
}

/// Payload of a `PermissionGrant` transaction. An empty rights set revokes
/// whatever the same grantor granted before.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permission {
    pub subject: ParticipantId,
    pub role: Role,
    pub rights: Rights,
    pub grantor: ParticipantId,
}

impl Canonical for Permission {
    fn encode_into(&self, w: &mut Writer) {
        self.subject.encode_into(w);
        w.u8(self.role.tag()).u8(self.rights.bits());
        self.grantor.encode_into(w);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let subject = ParticipantId::decode_from(r)?;
        let tag = r.u8()?;
        let role = Role::from_tag(tag).ok_or(DecodeError::BadTag { what: "role", tag })?;
        let bits = r.u8()?;
        if bits & !0x0f != 0 {
            return Err(DecodeError::BadTag {
                what: "rights",
                tag: bits,
            });
        }
        let grantor = ParticipantId::decode_from(r)?;
        Ok(Permission {
            subject,
            role,
            rights: Rights(bits),
            grantor,
        })
    }
}

/// Identifier of a signature scheme. Zero marks an absent signature.
pub const SCHEME_NONE: u8 = 0;
pub const SCHEME_ED25519: u8 = 1;
const ED25519_SIG_LEN: usize = 64;

/// A scheme-tagged signature.
///
/// For Ed25519 the bytes are `public_key (32) || signature (64)`, and the
/// signature covers `double_hash(message)`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Signature {
    scheme_id: u8,
    bytes: Vec<u8>,
}

impl Signature {
    /// Placeholder carried by unsigned values.
    pub fn none() -> Self {
        Signature::default()
    }

    pub fn is_none(&self) -> bool {
        self.scheme_id == SCHEME_NONE
    }

    pub fn scheme_id(&self) -> u8 {
        self.scheme_id
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Public key embedded in an Ed25519 signature.
    pub fn signer_key(&self) -> Option<&[u8]> {
        (self.scheme_id == SCHEME_ED25519 && self.bytes.len() == PUBLIC_KEY_LEN + ED25519_SIG_LEN)
            .then(|| &self.bytes[..PUBLIC_KEY_LEN])
    }

    pub fn signer(&self) -> Option<ParticipantId> {
        self.signer_key().map(ParticipantId::from_public_key)
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_none() {
            f.write_str("Signature(none)")
        } else {
            let tail = &self.bytes[self.bytes.len().saturating_sub(4)..];
            write!(f, "Signature({}:..{})", self.scheme_id, hex::encode(tail))
        }
    }
}

/// Wire form: 2-byte length, then `scheme_id || bytes`. The absent
/// signature encodes as a zero length.
impl Canonical for Signature {
    fn encode_into(&self, w: &mut Writer) {
        if self.is_none() {
            w.u16(0);
            return;
        }
        let len = u16::try_from(self.bytes.len() + 1).expect("signature too long");
        w.u16(len).u8(self.scheme_id).fixed(&self.bytes);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let len = r.u16()? as usize;
        if len == 0 {
            return Ok(Signature::none());
        }
        let body = r.take(len)?;
        match body[0] {
            SCHEME_ED25519 => Ok(Signature {
                scheme_id: SCHEME_ED25519,
                bytes: body[1..].to_vec(),
            }),
            tag => Err(DecodeError::BadTag {
                what: "signature scheme",
                tag,
            }),
        }
    }
}

/// An Ed25519 key pair.
#[derive(Clone)]
pub struct Keypair {
    signing: SigningKey,
}

impl Keypair {
    pub fn from_secret(secret: &[u8]) -> Result<Self, RegistryError> {
        let seed: [u8; SECRET_KEY_LEN] = secret
            .try_into()
            .map_err(|_| RegistryError::BadKeyLength(secret.len()))?;
        Ok(Keypair {
            signing: SigningKey::from_bytes(&seed),
        })
    }

    /// Deterministic key for a label. Used for fixtures and for roster
    /// entries that omit an explicit key.
    pub fn derive(label: &str) -> Self {
        let seed = double_hash(format!("hrchain-key:{label}").as_bytes());
        Keypair {
            signing: SigningKey::from_bytes(&seed.0),
        }
    }

    pub fn secret_bytes(&self) -> [u8; SECRET_KEY_LEN] {
        self.signing.to_bytes()
    }

    pub fn public_key(&self) -> [u8; PUBLIC_KEY_LEN] {
        self.signing.verifying_key().to_bytes()
    }

    pub fn id(&self) -> ParticipantId {
        ParticipantId::from_public_key(&self.public_key())
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        let digest = double_hash(message);
        let sig = self.signing.sign(&digest.0);
        let mut bytes = Vec::with_capacity(PUBLIC_KEY_LEN + ED25519_SIG_LEN);
        bytes.extend_from_slice(&self.public_key());
        bytes.extend_from_slice(&sig.to_bytes());
        Signature {
            scheme_id: SCHEME_ED25519,
            bytes,
        }
    }
}

impl fmt::Debug for Keypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Keypair({})", self.id().short())
    }
}

/// Signs `message` with a raw 32-byte secret key.
pub fn sign(secret_key: &[u8], message: &[u8]) -> Result<Signature, RegistryError> {
    Ok(Keypair::from_secret(secret_key)?.sign(message))
}

/// Checks `signature` over `message` against a raw public key.
pub fn verify(public_key: &[u8], message: &[u8], signature: &Signature) -> Result<bool, RegistryError> {
    let pk: [u8; PUBLIC_KEY_LEN] = public_key
        .try_into()
        .map_err(|_| RegistryError::BadKeyLength(public_key.len()))?;
    Ok(signature.signer_key() == Some(&pk[..]) && verify_embedded(message, signature))
}

/// Checks that `signature` is a valid signature over `message` made by the
/// participant `signer`.
pub fn verify_signed_by(signer: &ParticipantId, message: &[u8], signature: &Signature) -> bool {
    signature.signer().as_ref() == Some(signer) && verify_embedded(message, signature)
}

fn verify_embedded(message: &[u8], signature: &Signature) -> bool {
    let Some(pk) = signature.signer_key() else {
        return false;
    };
    let Ok(vk) = VerifyingKey::from_bytes(pk.try_into().expect("length checked")) else {
        return false;
    };
    let sig_bytes: [u8; ED25519_SIG_LEN] = signature.bytes[PUBLIC_KEY_LEN..]
        .try_into()
        .expect("length checked");
    let sig = ed25519_dalek::Signature::from_bytes(&sig_bytes);
    vk.verify(&double_hash(message).0, &sig).is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectoryEntry {
    pub role: Role,
    pub public_key: Option<[u8; PUBLIC_KEY_LEN]>,
    /// Position in registration order.
    pub order: usize,
}

/// Participants, their roles and effective rights.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Directory {
    entries: BTreeMap<ParticipantId, DirectoryEntry>,
    /// Latest grant per (grantor, subject).
    grants: BTreeMap<(ParticipantId, ParticipantId), Rights>,
}

impl Directory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a participant by public key. Registering the same key again is
    /// a no-op returning the same id.
    pub fn register_participant(&mut self, role: Role, public_key: &[u8]) -> Result<ParticipantId, RegistryError> {
        let pk: [u8; PUBLIC_KEY_LEN] = public_key
            .try_into()
            .map_err(|_| RegistryError::BadKeyLength(public_key.len()))?;
        let id = ParticipantId::from_public_key(&pk);
        let order = self.entries.len();
        let entry = self.entries.entry(id).or_insert(DirectoryEntry {
            role,
            public_key: None,
            order,
        });
        entry.public_key = Some(pk);
        Ok(id)
    }

    /// Applies one grant. An empty directory accepts a self-grant from the
    /// founding participant; afterwards the grantor must hold Mine.
    pub fn apply_grant(&mut self, p: &Permission) -> Result<(), RegistryError> {
        let bootstrap = self.grants.is_empty() && p.grantor == p.subject;
        if !bootstrap && !self.rights(&p.grantor).contains(Rights::MINE) {
            return Err(RegistryError::GrantorNotMiner(p.grantor));
        }
        if p.rights.contains(Rights::ATTEST) && !p.role.is_authority() {
            return Err(RegistryError::AttestWithoutAuthority(p.subject));
        }
        let order = self.entries.len();
        let entry = self.entries.entry(p.subject).or_insert(DirectoryEntry {
            role: p.role,
            public_key: None,
            order,
        });
        entry.role = p.role;
        self.grants.insert((p.grantor, p.subject), p.rights);
        Ok(())
    }

    /// Replays every `PermissionGrant` on the chain in commit order.
    /// Grants that fail the rules are skipped, as nodes would refuse them.
    pub fn from_chain(chain: &Chain) -> Self {
        let mut dir = Directory::new();
        for tx in chain.blocks().iter().flat_map(|b| &b.transactions) {
            if tx.kind == TxKind::PermissionGrant {
                if let Ok(p) = Permission::from_canonical_bytes(&tx.payload) {
                    let _ = dir.apply_grant(&p);
                }
            }
        }
        dir
    }

    pub fn get(&self, id: &ParticipantId) -> Option<&DirectoryEntry> {
        self.entries.get(id)
    }

    pub fn role(&self, id: &ParticipantId) -> Option<Role> {
        self.entries.get(id).map(|e| e.role)
    }

    pub fn contains(&self, id: &ParticipantId) -> bool {
        self.entries.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Union of the latest grants from every grantor.
    pub fn rights(&self, id: &ParticipantId) -> Rights {
        self.grants
            .iter()
            .filter(|((_, subject), _)| subject == id)
            .fold(Rights::NONE, |acc, (_, r)| acc | *r)
    }

    /// Participants in registration order.
    pub fn participants(&self) -> Vec<ParticipantId> {
        let mut ids: Vec<_> = self.entries.iter().map(|(id, e)| (e.order, *id)).collect();
        ids.sort();
        ids.into_iter().map(|(_, id)| id).collect()
    }

    /// Holders of Mine, in registration order.
    pub fn miners(&self) -> Vec<ParticipantId> {
        self.participants()
            .into_iter()
            .filter(|id| self.rights(id).contains(Rights::MINE))
            .collect()
    }

    fn attester_with_role(&self, role: Role) -> impl Iterator<Item = ParticipantId> + '_ {
        self.participants()
            .into_iter()
            .filter(move |id| self.role(id) == Some(role) && self.rights(id).contains(Rights::ATTEST))
    }
}

/// Resolves which participant must attest a claim of `kind` naming
/// `issuer`. Employment-type claims go to the named Employer; health and
/// criminal claims go to the named authority if it qualifies, otherwise to
/// the first registered HealthAuthority or LawAgency.
pub fn authority_for(kind: ClaimKind, issuer: &ParticipantId, directory: &Directory) -> Result<ParticipantId, RegistryError> {
    let role = kind.authority_role();
    let qualifies = |id: &ParticipantId| {
        directory.role(id) == Some(role) && directory.rights(id).contains(Rights::ATTEST)
    };
    if qualifies(issuer) {
        return Ok(*issuer);
    }
    match role {
        Role::HealthAuthority | Role::LawAgency => directory
            .attester_with_role(role)
            .next()
            .ok_or(RegistryError::NoAuthorityRegistered(kind)),
        _ => Err(RegistryError::NoAuthorityRegistered(kind)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grant(dir: &mut Directory, grantor: &Keypair, subject: &Keypair, role: Role, rights: Rights) {
        dir.apply_grant(&Permission {
            subject: subject.id(),
            role,
            rights,
            grantor: grantor.id(),
        })
        .unwrap();
    }

    #[test]
    fn register_is_idempotent_and_hash_derived() {
        let kp = Keypair::derive("acme");
        let mut dir = Directory::new();
        let a = dir.register_participant(Role::RecruitingCompany, &kp.public_key()).unwrap();
        let b = dir.register_participant(Role::RecruitingCompany, &kp.public_key()).unwrap();
        assert_eq!(a, b);
        assert_eq!(dir.len(), 1);
        assert_eq!(a, ParticipantId(double_hash(&kp.public_key())));
    }

    #[test]
    fn empty_key_is_rejected() {
        let mut dir = Directory::new();
        assert_eq!(
            dir.register_participant(Role::Applicant, &[]),
            Err(RegistryError::BadKeyLength(0))
        );
        assert_eq!(sign(&[1, 2, 3], b"m"), Err(RegistryError::BadKeyLength(3)));
    }

    #[test]
    fn sign_verify_law() {
        let kp = Keypair::derive("k");
        let other = Keypair::derive("other");
        let sig = sign(&kp.secret_bytes(), b"hello").unwrap();
        assert_eq!(verify(&kp.public_key(), b"hello", &sig), Ok(true));
        assert_eq!(verify(&kp.public_key(), b"hellp", &sig), Ok(false));
        assert_eq!(verify(&other.public_key(), b"hello", &sig), Ok(false));
        assert!(verify_signed_by(&kp.id(), b"hello", &sig));
        assert!(!verify_signed_by(&other.id(), b"hello", &sig));
        assert!(!verify_signed_by(&kp.id(), b"hello", &Signature::none()));
    }

    #[test]
    fn signature_wire_round_trip() {
        let sig = Keypair::derive("k").sign(b"x");
        let bytes = sig.to_canonical_bytes();
        assert_eq!(bytes.len(), 2 + 1 + 96);
        assert_eq!(Signature::from_canonical_bytes(&bytes).unwrap(), sig);
        assert_eq!(Signature::none().to_canonical_bytes(), vec![0, 0]);
        assert!(matches!(
            Signature::from_canonical_bytes(&[1, 0, 9]),
            Err(DecodeError::BadTag { .. })
        ));
    }

    #[test]
    fn rights_parse_and_display() {
        let r: Rights = "connect|mine".parse().unwrap();
        assert!(r.contains(Rights::MINE) && !r.contains(Rights::ATTEST));
        assert_eq!(r.to_string(), "connect|mine");
        assert_eq!("none".parse::<Rights>().unwrap(), Rights::NONE);
        assert!("fly".parse::<Rights>().is_err());
    }

    #[test]
    fn grants_need_a_miner_and_latest_wins() {
        let founder = Keypair::derive("f");
        let emp = Keypair::derive("e");
        let outsider = Keypair::derive("o");
        let mut dir = Directory::new();
        grant(&mut dir, &founder, &founder, Role::RecruitingCompany, Rights::MINE);
        grant(&mut dir, &founder, &emp, Role::Employer, Rights::ATTEST | Rights::MINE);
        assert!(dir.rights(&emp.id()).contains(Rights::ATTEST));

        let err = dir.apply_grant(&Permission {
            subject: outsider.id(),
            role: Role::Applicant,
            rights: Rights::SEND,
            grantor: outsider.id(),
        });
        assert_eq!(err, Err(RegistryError::GrantorNotMiner(outsider.id())));

        grant(&mut dir, &founder, &emp, Role::Employer, Rights::NONE);
        assert_eq!(dir.rights(&emp.id()), Rights::NONE);
        assert_eq!(dir.miners(), vec![founder.id()]);
    }

    #[test]
    fn attest_requires_authority_role() {
        let founder = Keypair::derive("f");
        let app = Keypair::derive("a");
        let mut dir = Directory::new();
        grant(&mut dir, &founder, &founder, Role::RecruitingCompany, Rights::MINE);
        let err = dir.apply_grant(&Permission {
            subject: app.id(),
            role: Role::Applicant,
            rights: Rights::ATTEST,
            grantor: founder.id(),
        });
        assert_eq!(err, Err(RegistryError::AttestWithoutAuthority(app.id())));
    }

    #[test]
    fn authority_resolution() {
        let founder = Keypair::derive("f");
        let emp = Keypair::derive("e");
        let law = Keypair::derive("l");
        let mut dir = Directory::new();
        grant(&mut dir, &founder, &founder, Role::RecruitingCompany, Rights::MINE);
        grant(&mut dir, &founder, &emp, Role::Employer, Rights::ATTEST);
        grant(&mut dir, &founder, &law, Role::LawAgency, Rights::ATTEST);

        assert_eq!(authority_for(ClaimKind::CriminalRecord, &ParticipantId::ZERO, &dir), Ok(law.id()));
        assert_eq!(authority_for(ClaimKind::Employment, &emp.id(), &dir), Ok(emp.id()));
        assert_eq!(authority_for(ClaimKind::Education, &emp.id(), &dir), Ok(emp.id()));
        assert_eq!(
            authority_for(ClaimKind::HealthRecord, &ParticipantId::ZERO, &dir),
            Err(RegistryError::NoAuthorityRegistered(ClaimKind::HealthRecord))
        );
        assert_eq!(
            authority_for(ClaimKind::Employment, &law.id(), &dir),
            Err(RegistryError::NoAuthorityRegistered(ClaimKind::Employment))
        );
    }
}
