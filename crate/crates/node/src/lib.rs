//! A single-node chain served over the JSON RPC paths used by the client.

pub mod faucet;
pub mod identity;
pub mod server;
pub mod service;

pub use faucet::FaucetFile;
pub use identity::{generate_identity, NodeIdentity};
pub use server::BackgroundNode;
pub use service::{Method, NodeService, RpcError};

pub const DEFAULT_RPC_PORT: u16 = 8732;

/// `--data-dir`, else `$TZDESK_NODE_DIR`, else `~/.tzdesk-node`.
pub fn data_dir(flag: Option<std::path::PathBuf>) -> std::path::PathBuf {
    flag.or_else(|| std::env::var_os("TZDESK_NODE_DIR").map(Into::into))
        .unwrap_or_else(|| std::path::PathBuf::from(std::env::var_os("HOME").unwrap_or_else(|| ".".into())).join(".tzdesk-node"))
}
