//! Reading and printing operation receipts.

use serde_json::Value as Json;
use tzdesk_core::json::u64_of;
use tzdesk_michelson::syntax::Node;
use tzdesk_michelson::Address;

use crate::tez::format_tez;
use crate::wallet::Wallet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InternalTransfer {
    pub source: Address,
    pub destination: Address,
    pub amount: u64,
    pub status: String,
}

/// Internal transfers of every content, in execution order.
pub fn internal_transfers(receipt: &Json) -> Vec<InternalTransfer> {
    let addr = |j: &Json| j.as_str().and_then(|s| s.parse().ok()).unwrap_or(Address::implicit([0; 20]));
    receipt["contents"]
        .as_array()
        .into_iter()
        .flatten()
        .flat_map(|c| c["metadata"]["internal_operation_results"].as_array().cloned().unwrap_or_default())
        .map(|i| InternalTransfer {
            source: addr(&i["source"]),
            destination: addr(&i["destination"]),
            amount: u64_of(&i["amount"]).unwrap_or(0),
            status: i["result"]["status"].as_str().unwrap_or_default().to_string(),
        })
        .collect()
}

/// Status of each content, in order.
pub fn statuses(receipt: &Json) -> Vec<String> {
    receipt["contents"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|c| c["metadata"]["operation_result"]["status"].as_str().unwrap_or("missing").to_string())
        .collect()
}

pub fn total_fee(receipt: &Json) -> u64 {
    receipt["contents"].as_array().into_iter().flatten().filter_map(|c| u64_of(&c["fee"])).sum()
}

fn name(w: &Wallet, j: &Json) -> String {
    let text = j.as_str().unwrap_or("?");
    match text.parse::<Address>().ok().and_then(|a| w.alias_of(&a).map(String::from)) {
        Some(alias) => alias,
        None => text.to_string(),
    }
}

fn inline(j: &Json) -> Option<String> {
    Node::from_json(j).ok().map(|n| n.to_inline())
}

/// A short human-readable account of a receipt.
pub fn describe(receipt: &Json, w: &Wallet) -> Vec<String> {
    let mut out = vec![format!("Operation {}", receipt["hash"].as_str().unwrap_or("?"))];
    for c in receipt["contents"].as_array().into_iter().flatten() {
        let r = &c["metadata"]["operation_result"];
        let status = r["status"].as_str().unwrap_or("?");
        let kind = c["kind"].as_str().unwrap_or("?");
        let mut line = match kind {
            "transaction" => format!(
                "  transaction of {} tez from {} to {}",
                format_tez(u64_of(&c["amount"]).unwrap_or(0)),
                name(w, &c["source"]),
                name(w, &c["destination"])
            ),
            "origination" => format!("  origination by {} with {} tez", name(w, &c["source"]), format_tez(u64_of(&c["balance"]).unwrap_or(0))),
            "activate_account" => format!("  activation of {} for {} tez", name(w, &c["pkh"]), format_tez(u64_of(&c["amount"]).unwrap_or(0))),
            k => format!("  {k} by {}", name(w, &c["source"])),
        };
        if let Some(p) = c.get("parameters").and_then(inline) {
            line.push_str(&format!(" with {p}"));
        }
        out.push(line);
        let mut facts = vec![status.to_string()];
        if let Some(fee) = u64_of(&c["fee"]) {
            facts.push(format!("fee {}", format_tez(fee)));
        }
        if let Some(g) = u64_of(&r["consumed_gas"]) {
            facts.push(format!("gas {g}"));
        }
        if let Some(b) = u64_of(&r["burned"]) {
            facts.push(format!("burned {}", format_tez(b)));
        }
        for a in r["originated_contracts"].as_array().into_iter().flatten() {
            facts.push(format!("originated {}", a.as_str().unwrap_or("?")));
        }
        out.push(format!("    {}", facts.join(", ")));
        for e in r["errors"].as_array().into_iter().flatten() {
            out.push(format!("    error {}: {}", e["id"].as_str().unwrap_or("?"), e["msg"].as_str().unwrap_or("")));
        }
        for i in c["metadata"]["internal_operation_results"].as_array().into_iter().flatten() {
            let mut line = format!(
                "    internal transaction of {} tez from {} to {}",
                format_tez(u64_of(&i["amount"]).unwrap_or(0)),
                name(w, &i["source"]),
                name(w, &i["destination"])
            );
            if let Some(p) = inline(&i["parameters"]) {
                line.push_str(&format!(" with {p}"));
            }
            line.push_str(&format!(", {}", i["result"]["status"].as_str().unwrap_or("?")));
            out.push(line);
        }
    }
    out
}
