//! Acceptance criteria for the whole system, one line per criterion.
//!
//! Runs as a plain binary so the report prints in order and unbuffered.
//! Each criterion has a wall-clock budget measured on the test profile;
//! going over it counts as a failure.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use hrchain::consensus::MinerSet;
use hrchain::hrm::{query_history, record_hire, EmploymentContract, HistoryRecord};
use hrchain::ledger::codec::Canonical;
use hrchain::ledger::{double_hash, encode_tx, merkle_root, validate_chain, Chain, Transaction, TxKind};
use hrchain::recruit::rank_applicants;
use hrchain::registry::{Directory, Keypair, Role};
use hrchain::roster::RosterEntry;
use hrchain::simnet::{self, inject_inactivity, Action, Scenario};
use hrchain_oracle::eligibility::window_respected;
use hrchain_oracle::ranking::{Instance, Outcome, Verdict, CRIMINAL};
use hrchain_oracle::{merkle, sha256};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LIVENESS: &str = include_str!("../../../scenarios/liveness.scn");
const FIVE: &str = include_str!("../../../scenarios/five_entities.scn");
const MINERS: [&str; 5] = ["company", "employer", "applicants", "health", "law"];

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn miner_indices(chain: &Chain) -> Vec<usize> {
    let ids: Vec<_> = MINERS.iter().map(|n| Keypair::derive(n).id()).collect();
    chain.blocks()[1..]
        .iter()
        .map(|b| ids.iter().position(|id| *id == b.header.miner).expect("known miner"))
        .collect()
}

fn grants(mut s: Scenario, ticks: impl IntoIterator<Item = (u64, usize)>) -> Scenario {
    if s.participant("alice").is_none() {
        s.applicants.push(RosterEntry::new(Role::Applicant, "alice"));
    }
    for (t, g) in ticks {
        s = s.at(
            t,
            Action::Grant {
                grantor: MINERS[g].into(),
                subject: "alice".into(),
                role: Role::Applicant,
                rights: "connect|send".parse().unwrap(),
            },
        );
    }
    s
}

fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(12..=24);
    let steps: Vec<(u64, usize)> = (0..n).map(|_| (rng.gen_range(1..=80), rng.gen_range(0..5))).collect();
    let mut s = grants(Scenario::five_entities(), steps);
    s.seed = seed;
    s.latency = rng.gen_range(0..=2);
    s.jitter = rng.gen_range(0..=3);
    s.loss_ppm = if rng.gen_bool(0.25) { 20_000 } else { 0 };
    s.tick_limit = 2_000;
    if rng.gen_bool(0.5) {
        let from = rng.gen_range(0..60);
        let to = from + rng.gen_range(5..60);
        s = inject_inactivity(s, MINERS[rng.gen_range(0..5)], from, Some(to)).unwrap();
    }
    s
}

/// Any four consecutive non-genesis blocks have four distinct miners.
fn c1_diversity_window() -> Check {
    let mut blocks = 0;
    let scenarios = 120;
    for seed in 0..scenarios {
        let report = simnet::run(&random_scenario(seed)).map_err(|e| e.to_string())?;
        for node in &report.nodes {
            let seq = miner_indices(&node.chain);
            blocks += seq.len();
            ensure(window_respected(&seq, 4), || format!("seed {seed} node {}: {seq:?}", node.name))?;
        }
    }
    ensure(blocks > 1_000, || format!("only {blocks} blocks checked"))?;
    Ok(format!("{scenarios} seeded scenarios, {blocks} node-blocks scanned, 0 violations"))
}

/// Four of five miners keep the chain growing; three of five stall it.
fn c2_liveness_boundary() -> Check {
    let base = Scenario::parse(LIVENESS).map_err(|e| e.to_string())?;
    let mut fresh = base.clone();
    fresh.inactivity.clear();

    let mut min_height = u64::MAX;
    for down in MINERS {
        let s = inject_inactivity(fresh.clone(), down, 0, None).map_err(|e| e.to_string())?;
        let r = simnet::run(&s).map_err(|e| e.to_string())?;
        ensure(r == simnet::run(&s).unwrap(), || format!("{down} down: runs differ"))?;
        ensure(!r.permanent_stall && r.stalls.is_empty(), || format!("{down} down: stalled"))?;
        min_height = min_height.min(r.nodes[0].height);
    }
    ensure(min_height >= 20, || format!("4 of 5 reached only {min_height} blocks"))?;

    let mut stalls = 0;
    for (i, a) in MINERS.iter().enumerate() {
        for b in &MINERS[i + 1..] {
            let mut s = inject_inactivity(fresh.clone(), a, 0, None).unwrap();
            s = inject_inactivity(s, b, 0, None).unwrap();
            let r = simnet::run(&s).map_err(|e| e.to_string())?;
            ensure(r.permanent_stall, || format!("{a} and {b} down: no stall flagged"))?;
            ensure(r == simnet::run(&s).unwrap(), || "stall runs differ".into())?;
            stalls += 1;
        }
    }

    let code = |name: &str| {
        let dir = tempfile::tempdir().unwrap();
        Command::new(env!("CARGO_BIN_EXE_hrchain"))
            .arg("--data-dir")
            .arg(dir.path())
            .arg("run")
            .arg(scenario_path(name))
            .output()
            .expect("binary runs")
            .status
            .code()
    };
    ensure(code("liveness.scn") == Some(0), || "liveness.scn did not exit 0".into())?;
    ensure(code("stall.scn") == Some(2), || "stall.scn did not exit 2".into())?;
    Ok(format!(
        "4/5 active: >= {min_height} blocks for each of 5 outages; 3/5 active: {stalls}/10 pairs stall; exit codes 0 and 2"
    ))
}

fn corpus() -> Vec<(Instance, support::RankWorld, Outcome)> {
    (0..100)
        .map(|seed| {
            let inst = Instance::generate(seed, 10, 8);
            let world = support::rank_world(seed, &inst);
            let (list, _) = rank_applicants(&world.profiles, &world.directory, &world.authorities, &world.spec)
                .expect("ranking runs");
            let got = support::to_outcome(&list, &world);
            (inst, world, got)
        })
        .collect()
}

/// rank_applicants agrees with the brute-force pipeline.
fn c3_ranking_oracle() -> Check {
    let mut ranked = 0;
    let mut discarded = 0;
    for (seed, (inst, world, got)) in corpus().iter().enumerate() {
        let want = inst.rank(&world.ids);
        ensure(*got == want, || format!("seed {seed}: got {got:?}, oracle {want:?}"))?;
        ranked += got.ranked.len();
        discarded += got.discarded.len();
    }
    Ok(format!("100 instances, {ranked} ranked and {discarded} discarded entries match exactly"))
}

/// Five hires give five blocks whose contracts read back byte for byte.
fn c4_hire_growth() -> Check {
    let mut d = support::deployment(5);
    let employer = d.key("employer").clone();
    let list = support::ranked(&d.workers.iter().map(Keypair::id).collect::<Vec<_>>());
    let dir = d.directory();
    let start = d.chain.height();
    for (n, w) in d.workers.clone().iter().enumerate() {
        let c = support::contract_for(w, &employer, n as u64);
        record_hire(&support::hire_decision(&c), &c, &list, &dir, &mut d.chain, &d.consensus, &employer)
            .map_err(|e| e.to_string())?;
        let tx = &d.chain.tip().transactions[0];
        let back = EmploymentContract::from_canonical_bytes(&tx.payload).map_err(|e| e.to_string())?;
        ensure(back == c && back.to_canonical_bytes() == tx.payload, || format!("hire {n}: contract changed"))?;
        let history = query_history(&w.id(), &d.chain);
        ensure(
            history.len() == 1 && history[0].record == HistoryRecord::Contract(c.clone()) && history[0].record.payload() == tx.payload,
            || format!("hire {n}: history mismatch"),
        )?;
    }
    ensure(d.chain.height() == start + 5, || format!("height {} after 5 hires from {start}", d.chain.height()))?;
    validate_chain(&d.chain, &d.consensus.rule, &d.consensus.miners).map_err(|e| format!("{e:?}"))?;
    Ok(format!("height {start} -> {}, 5 contracts round-trip", d.chain.height()))
}

/// Every single-byte flip is caught at or before the flipped block.
fn c5_tamper_evidence() -> Check {
    let d = support::sample_chain(9);
    ensure(d.chain.len() == 10, || "chain is not 10 blocks".into())?;
    let flips = support::tamper_sweep(&d)?;
    Ok(format!("10-block chain, {flips} byte flips, 0 misses"))
}

/// All five nodes write the same chain.dat and runs repeat exactly.
fn c6_convergence() -> Check {
    let s = Scenario::parse(FIVE).map_err(|e| e.to_string())?;
    let a = simnet::run(&s).map_err(|e| e.to_string())?;
    let b = simnet::run(&s).map_err(|e| e.to_string())?;
    ensure(a == b && a.to_text() == b.to_text(), || "two runs differ".into())?;

    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_hrchain"))
        .arg("--data-dir")
        .arg(dir.path())
        .arg("run")
        .arg(scenario_path("five_entities.scn"))
        .output()
        .expect("binary runs")
        .status;
    ensure(status.success(), || format!("run exited {status}"))?;
    let files: Vec<Vec<u8>> = MINERS
        .iter()
        .map(|n| std::fs::read(dir.path().join("nodes").join(n).join("chain.dat")).unwrap())
        .collect();
    ensure(files.windows(2).all(|w| w[0] == w[1]), || "chain.dat differs between nodes".into())?;
    let chain = hrchain::ledger::store::decode_chain(&files[0]).map_err(|e| e.to_string())?;
    let miners = MinerSet::new(Directory::from_chain(&chain).miners()).ok_or("no miners")?;
    validate_chain(&chain, &s.diversity, &miners).map_err(|e| format!("{e:?}"))?;
    ensure(double_hash(&files[0]) == a.nodes[0].chain_digest, || "files differ from the report".into())?;
    Ok(format!("5 identical chain.dat files at height {}, 2 identical reports", chain.height()))
}

/// Merkle roots and hashes agree with the reference implementations.
fn c7_hash_oracle() -> Check {
    let k = Keypair::derive("merkle");
    for n in 1..=16usize {
        let txs: Vec<Transaction> = (0..n)
            .map(|i| Transaction::new_signed(TxKind::HrEventRecord, vec![i as u8; i], i as u64, &k))
            .collect();
        let frames: Vec<Vec<u8>> = txs.iter().map(encode_tx).collect();
        let want = merkle::root_of_serialized(&frames).unwrap();
        ensure(merkle_root(&txs).map(|d| d.0) == Ok(want), || format!("merkle root differs at {n} transactions"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..10_000 {
        let data: Vec<u8> = (0..rng.gen_range(0..256)).map(|_| rng.gen()).collect();
        ensure(double_hash(&data).0 == sha256::sha256d(&data), || format!("input {i} hashes differently"))?;
    }
    Ok("merkle roots for 1..16 transactions, 10000 random hash inputs".into())
}

/// Refuted or adverse-criminal applicants appear only as discarded.
fn c8_screening_fidelity() -> Check {
    let (mut fake, mut law) = (0, 0);
    for (seed, (inst, _, got)) in corpus().iter().enumerate() {
        for (a, claims) in inst.applicants.iter().enumerate() {
            let verdicts: Vec<Verdict> = claims.iter().map(|c| inst.verdict(a, c)).collect();
            let reason = if verdicts.contains(&Verdict::Refuted) {
                fake += 1;
                "FakeCertificate"
            } else if claims
                .iter()
                .zip(&verdicts)
                .any(|(c, v)| c.kind == CRIMINAL && *v == Verdict::Confirmed && c.shown.adverse)
            {
                law += 1;
                "LawIssue"
            } else {
                continue;
            };
            ensure(got.ranked.iter().all(|(x, _)| *x != a), || format!("seed {seed}: applicant {a} ranked"))?;
            let entries: Vec<_> = got.discarded.iter().filter(|(x, _)| *x == a).collect();
            ensure(entries == [&(a, reason)], || format!("seed {seed}: applicant {a} listed as {entries:?}, want {reason}"))?;
        }
    }
    ensure(fake > 0 && law > 0, || "corpus lacks a discard reason".into())?;
    Ok(format!("{fake} refuted and {law} adverse-criminal applicants discarded with the right reason"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("C1 diversity window", Duration::from_secs(10), c1_diversity_window),
        ("C2 liveness boundary", Duration::from_secs(5), c2_liveness_boundary),
        ("C3 ranking oracle", Duration::from_secs(10), c3_ranking_oracle),
        ("C4 hire chain growth", Duration::from_secs(5), c4_hire_growth),
        ("C5 tamper evidence", Duration::from_secs(60), c5_tamper_evidence),
        ("C6 convergence", Duration::from_secs(5), c6_convergence),
        ("C7 hash and merkle oracle", Duration::from_secs(5), c7_hash_oracle),
        ("C8 screening fidelity", Duration::from_secs(10), c8_screening_fidelity),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let (verdict, detail) = match result {
            Ok(detail) if took <= budget => ("PASS", detail),
            Ok(detail) => ("FAIL", format!("{detail}; over budget")),
            Err(why) => ("FAIL", why),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("{verdict} {name:<26} {:>6.2}s / {:>2}s  {detail}", took.as_secs_f64(), budget.as_secs());
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria pass");
}
