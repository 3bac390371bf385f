//! Offline script handling: typecheck, literals and local runs.

use tzdesk_core::Script;
use tzdesk_michelson::interp::ImplicitOnly;
use tzdesk_michelson::syntax::{parse_expr, Node};
use tzdesk_michelson::{load, parse_data, parse_program, run_script, Address, DataError, ExecEnv, TypeError, TypedProgram, Value};

use crate::error::{ClientError, Result};

pub fn typecheck(src: &str) -> Result<TypedProgram> {
    load(src).map_err(|e| ClientError::Typecheck(e.to_string()))
}

/// Checks `lit` against `ty`, naming it `what` in errors.
pub fn literal(lit: &str, ty: &tzdesk_michelson::Ty, what: &'static str) -> Result<Value> {
    parse_data(lit, ty).map_err(|e| match e {
        DataError::Type(TypeError::UnorderedMapLiteral) => ClientError::UnorderedMapLiteral,
        e => ClientError::BadLiteral { what, reason: e.to_string() },
    })
}

/// An untyped expression, as sent in operations.
pub fn expr(lit: &str, what: &'static str) -> Result<Node> {
    parse_expr(lit).map_err(|e| ClientError::BadLiteral { what, reason: e.to_string() })
}

/// The script and initial storage of an origination, typechecked locally.
pub fn origination_script(src: &str, init: &str) -> Result<Script> {
    let prog = typecheck(src)?;
    literal(init, &prog.storage, "the initial storage")?;
    let raw = parse_program(src).map_err(|e| ClientError::Typecheck(e.to_string()))?;
    Ok(Script { code: Node::seq(raw.to_nodes()), storage: expr(init, "the initial storage")? })
}

#[derive(Debug, Clone)]
pub struct LocalRun {
    pub storage: Value,
    pub operations: Vec<tzdesk_michelson::InternalOp>,
    pub gas: u64,
}

/// Runs a script once with only implicit accounts in scope.
pub fn run_local(src: &str, arg: &str, storage: &str, amount: u64, now: i64) -> Result<LocalRun> {
    let prog = typecheck(src)?;
    let param = literal(arg, &prog.parameter, "the argument")?;
    let storage = literal(storage, &prog.storage, "the storage")?;
    let caller = Address::implicit([0; 20]);
    let env = ExecEnv {
        amount,
        sender: caller,
        source: caller,
        self_address: Address::originated([0; 20]),
        balance: amount,
        now,
        gas_limit: 400_000,
        contracts: &ImplicitOnly,
    };
    let r = run_script(&prog, param, storage, &env).map_err(|e| ClientError::SimulationFailed {
        status: "failed".into(),
        errors: serde_json::json!([{"id": "script_failed", "msg": e.to_string()}]),
    })?;
    Ok(LocalRun { storage: r.storage, operations: r.operations, gas: r.gas_consumed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tzdesk_michelson::contracts::VOTE;

    const BALLOT: &str = "{ Elt \"Sierra\" 0 ; Elt \"Summit\" 0 ; Elt \"Sunway\" 0 ; Elt \"Tianhe-2A\" 0 }";

    #[test]
    fn vote_init_must_be_sorted() {
        origination_script(VOTE, BALLOT).unwrap();
        let unsorted = "{ Elt \"Summit\" 0 ; Elt \"Sierra\" 0 }";
        assert!(matches!(origination_script(VOTE, unsorted), Err(ClientError::UnorderedMapLiteral)));
        assert!(matches!(origination_script(VOTE, "{ Elt 1 0 }"), Err(ClientError::BadLiteral { .. })));
        assert!(matches!(origination_script("parameter unit", "Unit"), Err(ClientError::Typecheck(_))));
    }

    #[test]
    fn local_vote_runs() {
        let r = run_local(VOTE, "\"Summit\"", BALLOT, 5_000, 0).unwrap();
        assert_eq!(r.storage.to_string(), "{ Elt \"Sierra\" 0 ; Elt \"Summit\" 1 ; Elt \"Sunway\" 0 ; Elt \"Tianhe-2A\" 0 }");
        assert!(r.operations.is_empty());
        assert!(matches!(run_local(VOTE, "\"Summit\"", BALLOT, 1_000, 0), Err(ClientError::SimulationFailed { .. })));
    }
}
