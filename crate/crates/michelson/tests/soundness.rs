use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tzdesk_michelson::interp::{run_script, ExecEnv, ExecErrorKind};
use tzdesk_michelson::testkit::{ill_typed_corpus, originated_pool, random_ty, random_value, FuzzContracts, ProgramGen};
use tzdesk_michelson::syntax::CORE_OPCODES;
use tzdesk_michelson::{expand_macros, parse_program, typecheck_program, Address, Instr, LoadError};

fn collect_names(code: &[Instr], out: &mut BTreeSet<String>) {
    for i in code {
        out.insert(i.name().to_string());
        for b in i.blocks() {
            collect_names(b, out);
        }
    }
}

#[test]
fn fuzzed_well_typed_programs_never_hit_stack_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failed_runs = 0;
    let mut seen = BTreeSet::new();
    for case in 0..10_000 {
        let raw = ProgramGen::new(&mut rng, 40).program();
        collect_names(&raw.code, &mut seen);
        let typed = typecheck_program(&raw)
            .unwrap_or_else(|e| panic!("case {case}: generator produced ill-typed program ({e}):\n{raw:?}"));
        let param = random_value(&mut rng, &raw.parameter);
        let storage = random_value(&mut rng, &raw.storage);
        let contracts =
            FuzzContracts(originated_pool().into_iter().map(|a| (a, random_ty(&mut rng, 1))).collect::<BTreeMap<_, _>>());
        let env = ExecEnv {
            amount: rng.gen_range(0..1000),
            sender: Address::implicit([1; 20]),
            source: Address::implicit([2; 20]),
            self_address: Address::originated([11; 20]),
            balance: 5_000,
            now: 1_557_271_345,
            gas_limit: 20_000,
            contracts: &contracts,
        };
        match run_script(&typed, param, storage, &env) {
            Ok(r) => assert!(r.gas_consumed <= env.gas_limit),
            Err(e) => {
                assert!(!matches!(e.kind, ExecErrorKind::StackShape(_)), "case {case}: {e}\n{raw:?}");
                failed_runs += 1;
            }
        }
    }
    // the generator should mostly produce programs that run to completion
    assert!(failed_runs < 5_000, "{failed_runs} failing runs");
    let missing: Vec<_> = CORE_OPCODES.iter().filter(|o| !seen.contains(**o)).collect();
    assert!(missing.is_empty(), "opcodes never generated: {missing:?}");
}

#[test]
fn ill_typed_corpus_is_rejected_with_expected_kind() {
    let corpus = ill_typed_corpus();
    assert!(corpus.len() >= 100);
    for (kind, src) in corpus {
        let raw = parse_program(src).unwrap_or_else(|e| panic!("corpus entry does not parse: {src}: {e}"));
        let expanded = expand_macros(&raw).unwrap();
        match typecheck_program(&expanded) {
            Ok(_) => panic!("accepted ill-typed program: {src}"),
            Err(e) => assert_eq!(e.kind(), kind, "{src}: {e}"),
        }
    }
}

#[test]
fn load_reports_parse_and_type_errors() {
    assert!(matches!(tzdesk_michelson::load("parameter unit"), Err(LoadError::Parse(_))));
    assert!(matches!(tzdesk_michelson::load("parameter unit; storage unit; code { CDR }"), Err(LoadError::Type(_))));
}
