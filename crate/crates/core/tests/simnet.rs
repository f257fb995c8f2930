use hrchain::consensus::DiversityRule;
use hrchain::ledger::{Chain, TxKind};
use hrchain::recruit::DiscardReason;
use hrchain::roster::Roster;
use hrchain::simnet::{self, inject_inactivity, measure_latency, run, Action, Scenario, SimError};

const FIVE: &str = include_str!("../../../scenarios/five_entities.scn");
const LIVENESS: &str = include_str!("../../../scenarios/liveness.scn");
const STALL: &str = include_str!("../../../scenarios/stall.scn");

fn with_alice(mut s: Scenario) -> Scenario {
    s.applicants.push(hrchain::roster::RosterEntry::new(hrchain::registry::Role::Applicant, "alice"));
    s
}

fn grants(s: Scenario, ticks: std::ops::RangeInclusive<u64>) -> Scenario {
    let mut s = with_alice(s);
    let grantor = s.miners[0].clone();
    for t in ticks {
        s = s.at(
            t,
            Action::Grant {
                grantor: grantor.clone(),
                subject: "alice".into(),
                role: hrchain::registry::Role::Applicant,
                rights: "connect|send".parse().unwrap(),
            },
        );
    }
    s
}

fn miner_run_lengths(chain: &Chain, window: usize) -> bool {
    let blocks = &chain.blocks()[1..];
    blocks.windows(window).all(|w| {
        let mut ids: Vec<_> = w.iter().map(|b| b.header.miner).collect();
        ids.sort();
        ids.dedup();
        ids.len() == w.len()
    })
}

#[test]
fn empty_script_leaves_genesis_everywhere() {
    let report = run(&Scenario::five_entities()).unwrap();
    assert!(report.nodes.iter().all(|n| n.height == 0));
    assert!(report.converged());
    assert!(report.txs.is_empty());
    assert!(report.stalls.is_empty());
}

#[test]
fn five_entity_recruitment_converges() {
    let scenario = Scenario::parse(FIVE).unwrap();
    let report = run(&scenario).unwrap();
    assert!(report.converged(), "{}", report.summary());
    assert!(report.rejected_actions.is_empty(), "{:?}", report.rejected_actions);
    assert_eq!(report.rankings.len(), 1);
    let list = &report.rankings[0].list;
    let names: Vec<String> = list.entries.iter().map(|(id, _)| report.name_of(id)).collect();
    assert_eq!(names, ["alice", "dave"]);
    let discarded: Vec<(String, DiscardReason)> = list.discarded.iter().map(|(id, r)| (report.name_of(id), *r)).collect();
    assert_eq!(
        discarded,
        [("bob".into(), DiscardReason::FakeCertificate), ("carol".into(), DiscardReason::LawIssue)]
    );

    let hire = report.txs.iter().find(|t| t.kind == TxKind::ContractRecord).unwrap();
    assert_eq!(measure_latency(&report, &hire.id), Ok(3));
    // 8 attestations then the contract
    assert_eq!(report.nodes[0].height, 9);
    assert_eq!(report.txs.iter().filter(|t| t.kind == TxKind::ClaimAttestation).count(), 8);
}

#[test]
fn runs_are_byte_identical() {
    let scenario = Scenario::parse(FIVE).unwrap();
    let a = run(&scenario).unwrap();
    let b = run(&scenario).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_text(), b.to_text());
}

#[test]
fn latency_is_three_hops_of_one_plus_link_latency() {
    for latency in 0..4 {
        let mut s = grants(Scenario::five_entities(), 1..=1);
        s.latency = latency;
        let report = run(&s).unwrap();
        assert_eq!(measure_latency(&report, &report.txs[0].id), Ok(3 * (1 + latency)));
    }
}

#[test]
fn one_miner_down_keeps_the_chain_growing() {
    let report = run(&Scenario::parse(LIVENESS).unwrap()).unwrap();
    assert!(!report.permanent_stall);
    assert!(report.stalls.is_empty());
    assert_eq!(report.nodes[0].height, 25);
    assert!(report.converged());
}

#[test]
fn two_miners_down_stall_for_good() {
    let report = run(&Scenario::parse(STALL).unwrap()).unwrap();
    assert!(report.permanent_stall);
    // three active miners fill the window after three blocks
    assert_eq!(report.nodes[0].height, 3);
    assert_eq!(report.stalls.len(), 1);
    assert_eq!(report.stalls[0].end, None);
    let stuck = report.txs.iter().find(|t| t.commit_tick.is_none()).unwrap();
    assert_eq!(measure_latency(&report, &stuck.id), Err(SimError::TxNotCommitted(stuck.id)));
}

#[test]
fn three_miners_down_stall_too() {
    let mut s = grants(Scenario::five_entities(), 1..=10);
    for m in ["applicants", "health", "law"] {
        s = inject_inactivity(s, m, 0, None).unwrap();
    }
    let report = run(&s).unwrap();
    assert!(report.permanent_stall);
    assert_eq!(report.nodes[0].height, 2);
}

#[test]
fn reactivation_resumes_the_chain() {
    let mut s = grants(Scenario::five_entities(), 1..=12);
    s = inject_inactivity(s, "health", 0, Some(60)).unwrap();
    s = inject_inactivity(s, "law", 0, Some(60)).unwrap();
    let report = run(&s).unwrap();
    assert!(!report.permanent_stall);
    assert_eq!(report.stalls.len(), 1);
    let stall = report.stalls[0];
    assert!(stall.end.unwrap() >= 60);
    assert_eq!(report.nodes[0].height, 12);
    assert!(report.converged());
}

#[test]
fn unknown_miner_is_refused() {
    let s = Scenario::five_entities();
    assert_eq!(
        inject_inactivity(s, "nobody", 0, None).unwrap_err(),
        SimError::UnknownMiner("nobody".into())
    );
}

#[test]
fn malformed_scenarios_are_refused() {
    let mut s = Scenario::five_entities();
    s.miners.clear();
    assert!(matches!(run(&s), Err(SimError::MalformedScenario(_))));
    let s = Scenario::new(Roster::default());
    assert!(matches!(run(&s), Err(SimError::MalformedScenario(_))));
}

#[test]
fn hire_without_ranking_is_rejected() {
    let s = with_alice(Scenario::five_entities()).at(
        1,
        Action::Hire {
            company: "company".into(),
            applicant: "alice".into(),
            employee_terms: Default::default(),
        },
    );
    let report = run(&s).unwrap();
    assert_eq!(report.rejected_actions.len(), 1);
    assert!(report.rejected_actions[0].reason.contains("ranked"));
    assert!(report.txs.is_empty());
}

#[test]
fn diversity_window_holds_with_jitter() {
    for seed in 0..10 {
        let mut s = grants(Scenario::five_entities(), 1..=15);
        s.seed = seed;
        s.latency = 1;
        s.jitter = 3;
        let report = run(&s).unwrap();
        assert!(report.converged(), "seed {seed}\n{}", report.summary());
        assert_eq!(report.nodes[0].height, 15, "seed {seed}");
        assert!(miner_run_lengths(&report.nodes[0].chain, 4));
    }
}

#[test]
fn lossy_links_still_commit_with_resync() {
    let mut s = grants(Scenario::five_entities(), 1..=10);
    s.seed = 11;
    s.loss_ppm = 50_000;
    let report = run(&s).unwrap();
    assert!(report.messages.dropped > 0);
    assert!(miner_run_lengths(&report.nodes[0].chain, 4));
    let a = run(&s).unwrap();
    assert_eq!(a, report);
}

#[test]
fn other_diversity_values_set_the_window() {
    let mut s = grants(Scenario::five_entities(), 1..=12);
    s.diversity = DiversityRule::new(1, 1).unwrap();
    let report = run(&s).unwrap();
    assert!(miner_run_lengths(&report.nodes[0].chain, 5));
    assert_eq!(report.nodes[0].height, 12);
}

#[test]
fn report_export_has_every_section() {
    let report = run(&Scenario::parse(FIVE).unwrap()).unwrap();
    let text = report.to_text();
    for section in ["[nodes]", "[transactions]", "[stalls]", "[rejected_actions]", "[ranking company"] {
        assert!(text.contains(section), "missing {section}");
    }
    assert!(text.contains("converged: true"));
    assert_eq!(simnet::scenario_genesis(&Scenario::parse(FIVE).unwrap()).id(), report.nodes[0].chain.genesis().id());
}
