//! Brute-force screening and ranking over plain data.
//!
//! The pipeline runs in four passes over the whole instance: verify every
//! claim, filter out discarded profiles, score the rest, then sort by
//! repeated selection of the best remaining applicant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Claim kinds by index, in declaration order.
pub const KINDS: [&str; 8] = [
    "Education",
    "Employment",
    "Training",
    "Certificate",
    "SalaryHistory",
    "Performance",
    "HealthRecord",
    "CriminalRecord",
];
pub const PERFORMANCE: usize = 5;
pub const HEALTH: usize = 6;
pub const CRIMINAL: usize = 7;

pub const TRACKS: [&str; 3] = ["ops", "dev", "law"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthRole {
    Employer,
    Health,
    Law,
}

fn role_for(kind: usize) -> AuthRole {
    match kind {
        HEALTH => AuthRole::Health,
        CRIMINAL => AuthRole::Law,
        _ => AuthRole::Employer,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Authority {
    pub role: AuthRole,
    /// Holds the attest right.
    pub attests: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub level: i64,
    pub track: &'static str,
    pub adverse: bool,
}

impl Statement {
    /// `key=value;...` text form.
    pub fn render(&self) -> String {
        let mut s = format!("level={};track={}", self.level, self.track);
        if self.adverse {
            s.push_str(";adverse=true");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim {
    pub kind: usize,
    /// Index into [`Instance::authorities`].
    pub issuer: usize,
    /// The statement the evidence hash was taken over.
    pub hashed: Statement,
    /// The statement the applicant shows.
    pub shown: Statement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreEntry {
    pub authority: usize,
    pub applicant: usize,
    pub kind: usize,
    pub statement: Statement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pred {
    Any,
    LevelAtLeast(i64),
    LevelBelow(i64),
    LevelIs(i64),
    TrackIs(&'static str),
    TrackIsNot(&'static str),
}

impl Pred {
    /// Text form accepted by requirement files.
    pub fn render(&self) -> String {
        match self {
            Pred::Any => "*".into(),
            Pred::LevelAtLeast(v) => format!("level>={v}"),
            Pred::LevelBelow(v) => format!("level<{v}"),
            Pred::LevelIs(v) => format!("level={v}"),
            Pred::TrackIs(t) => format!("track={t}"),
            Pred::TrackIsNot(t) => format!("track!={t}"),
        }
    }

    fn holds(&self, s: &Statement) -> bool {
        match self {
            Pred::Any => true,
            Pred::LevelAtLeast(v) => s.level >= *v,
            Pred::LevelBelow(v) => s.level < *v,
            Pred::LevelIs(v) => s.level == *v,
            Pred::TrackIs(t) => s.track == *t,
            Pred::TrackIsNot(t) => s.track != *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub kind: usize,
    pub pred: Pred,
    pub weight_micros: u64,
    pub mandatory: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub authorities: Vec<Authority>,
    /// Claims per applicant, in input order.
    pub applicants: Vec<Vec<Claim>>,
    pub store: Vec<StoreEntry>,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Confirmed,
    Refuted,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    /// `(applicant index, score in micros)`, best first.
    pub ranked: Vec<(usize, u64)>,
    /// `(applicant index, reason)`, in input order.
    pub discarded: Vec<(usize, &'static str)>,
}

impl Instance {
    /// Fixed authority table: two attesting employers, one employer
    /// without the attest right, then health and law authorities in the
    /// same pattern.
    pub fn authority_table() -> Vec<Authority> {
        use AuthRole::*;
        [(Employer, true), (Employer, true), (Employer, false), (Health, false), (Health, true), (Law, true)]
            .into_iter()
            .map(|(role, attests)| Authority { role, attests })
            .collect()
    }

    /// Up to `max_applicants` applicants with up to `max_claims` claims.
    pub fn generate(seed: u64, max_applicants: usize, max_claims: usize) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let authorities = Self::authority_table();
        let statement = |rng: &mut ChaCha8Rng, kind: usize| Statement {
            level: rng.gen_range(0..=5),
            track: TRACKS[rng.gen_range(0..TRACKS.len())],
            adverse: rng.gen_bool(if kind == CRIMINAL || kind == PERFORMANCE { 0.3 } else { 0.05 }),
        };

        let mut inst = Instance {
            authorities,
            applicants: Vec::new(),
            store: Vec::new(),
            items: Vec::new(),
        };
        for a in 0..rng.gen_range(0..=max_applicants) {
            let mut claims = Vec::new();
            for _ in 0..rng.gen_range(0..=max_claims) {
                let kind = rng.gen_range(0..KINDS.len());
                let issuer = rng.gen_range(0..inst.authorities.len());
                let hashed = statement(&mut rng, kind);
                let mut shown = hashed.clone();
                if rng.gen_bool(0.07) {
                    shown.level += 1;
                }
                if let Some(target) = inst.route(kind, issuer) {
                    let roll: f64 = rng.gen();
                    if roll < 0.4 {
                        inst.store.push(StoreEntry { authority: target, applicant: a, kind, statement: hashed.clone() });
                    } else if roll < 0.65 {
                        let mut other = hashed.clone();
                        other.level += 10;
                        inst.store.push(StoreEntry { authority: target, applicant: a, kind, statement: other });
                    }
                }
                claims.push(Claim { kind, issuer, hashed, shown });
            }
            inst.applicants.push(claims);
        }
        for _ in 0..rng.gen_range(1..=4) {
            let pred = match rng.gen_range(0..6) {
                0 => Pred::Any,
                1 => Pred::LevelAtLeast(rng.gen_range(0..=5)),
                2 => Pred::LevelBelow(rng.gen_range(0..=5)),
                3 => Pred::LevelIs(rng.gen_range(0..=5)),
                4 => Pred::TrackIs(TRACKS[rng.gen_range(0..TRACKS.len())]),
                _ => Pred::TrackIsNot(TRACKS[rng.gen_range(0..TRACKS.len())]),
            };
            inst.items.push(Item {
                kind: rng.gen_range(0..KINDS.len()),
                pred,
                weight_micros: rng.gen_range(0..=20) * 250_000,
                mandatory: rng.gen_bool(0.25),
            });
        }
        inst
    }

    /// Which authority attests `kind` when the claim names `issuer`.
    pub fn route(&self, kind: usize, issuer: usize) -> Option<usize> {
        let role = role_for(kind);
        let a = self.authorities[issuer];
        if a.role == role && a.attests {
            return Some(issuer);
        }
        if role == AuthRole::Employer {
            return None;
        }
        self.authorities.iter().position(|a| a.role == role && a.attests)
    }

    pub fn verdict(&self, applicant: usize, claim: &Claim) -> Verdict {
        let Some(target) = self.route(claim.kind, claim.issuer) else {
            return Verdict::Unknown;
        };
        let held: Vec<&Statement> = self
            .store
            .iter()
            .filter(|e| e.authority == target && e.applicant == applicant && e.kind == claim.kind)
            .map(|e| &e.statement)
            .collect();
        if held.is_empty() {
            Verdict::Unknown
        } else if held.contains(&&claim.hashed) {
            Verdict::Confirmed
        } else {
            Verdict::Refuted
        }
    }

    /// The whole pipeline. `ids` orders tied applicants, smallest first.
    pub fn rank(&self, ids: &[[u8; 32]]) -> Outcome {
        // verify all
        let verdicts: Vec<Vec<Verdict>> = self
            .applicants
            .iter()
            .enumerate()
            .map(|(a, claims)| claims.iter().map(|c| self.verdict(a, c)).collect())
            .collect();

        // filter
        let mut discarded = Vec::new();
        let mut kept = Vec::new();
        for (a, claims) in self.applicants.iter().enumerate() {
            let v = &verdicts[a];
            let confirmed_adverse = |kind| claims.iter().zip(v).any(|(c, v)| c.kind == kind && *v == Verdict::Confirmed && c.shown.adverse);
            let reason = if v.contains(&Verdict::Refuted) {
                Some("FakeCertificate")
            } else if confirmed_adverse(CRIMINAL) {
                Some("LawIssue")
            } else if confirmed_adverse(PERFORMANCE) {
                Some("BehaviouralIssue")
            } else if claims.iter().any(|c| c.hashed != c.shown) {
                Some("EvidenceMismatch")
            } else {
                None
            };
            match reason {
                Some(r) => discarded.push((a, r)),
                None => kept.push(a),
            }
        }

        // score
        let mut scored = Vec::new();
        for a in kept {
            let claims = &self.applicants[a];
            let mut total = 0;
            let mut disqualified = false;
            for item in &self.items {
                let met = claims
                    .iter()
                    .zip(&verdicts[a])
                    .any(|(c, v)| *v == Verdict::Confirmed && c.kind == item.kind && item.pred.holds(&c.shown));
                if met {
                    total += item.weight_micros;
                } else if item.mandatory {
                    disqualified = true;
                }
            }
            if disqualified {
                discarded.push((a, "Disqualified"));
            } else {
                scored.push((a, total));
            }
        }
        discarded.sort_by_key(|(a, _)| *a);

        // sort
        let mut ranked = Vec::new();
        while !scored.is_empty() {
            let mut best = 0;
            for i in 1..scored.len() {
                let (a, s) = scored[i];
                let (b, t) = scored[best];
                if s > t || (s == t && ids[a] < ids[b]) {
                    best = i;
                }
            }
            ranked.push(scored.remove(best));
        }
        Outcome { ranked, discarded }
    }
}
