use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use tzdesk_core::block::bootstrap_keys;
use tzdesk_core::{Constants, MUTEZ_PER_TEZ};
use tzdesk_node::identity::{generate_identity, NodeIdentity, DEFAULT_DIFFICULTY};
use tzdesk_node::server::{serve, spawn_baker};
use tzdesk_node::{data_dir, FaucetFile, NodeService, DEFAULT_RPC_PORT};

#[derive(Parser)]
#[command(name = "tzdesk-node", version, about = "Single-node desk chain with a JSON RPC server")]
struct Cli {
    /// Data directory (default: $TZDESK_NODE_DIR or ~/.tzdesk-node).
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Node identity management.
    Identity {
        #[command(subcommand)]
        cmd: IdentityCmd,
    },
    /// Start the chain and serve RPCs.
    Run {
        /// Listen address; the port defaults to 8732.
        #[arg(long, default_value = "127.0.0.1")]
        rpc_addr: String,
        /// Required leading zero bits of the identity stamp.
        #[arg(long, default_value_t = DEFAULT_DIFFICULTY)]
        difficulty: u32,
        /// Seconds between baked blocks; 0 disables the baker.
        #[arg(long, default_value_t = 5.0)]
        block_interval: f64,
        #[arg(long, value_enum, default_value_t = Preset::Mainnet)]
        constants: Preset,
    },
    /// Write a faucet file that activates a fresh account.
    Faucet {
        /// Amount in tez.
        #[arg(long)]
        amount: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum IdentityCmd {
    Generate {
        #[arg(long, default_value_t = DEFAULT_DIFFICULTY)]
        difficulty: u32,
    },
    Show,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Mainnet,
    Desk,
}

fn rpc_addr(s: &str) -> Result<SocketAddr, String> {
    let with_port = if s.contains(':') { s.to_string() } else { format!("{s}:{DEFAULT_RPC_PORT}") };
    with_port.parse().map_err(|e| format!("bad --rpc-addr {s}: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("Error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let dir = data_dir(cli.data_dir);
    let id_path = dir.join("identity.json");
    match cli.cmd {
        Cmd::Identity { cmd: IdentityCmd::Generate { difficulty } } => {
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            let (id, tries) = generate_identity(&mut rand::thread_rng(), difficulty).map_err(|e| e.to_string())?;
            std::fs::write(&id_path, serde_json::to_string_pretty(&id).expect("identity serializes")).map_err(|e| e.to_string())?;
            println!("Stored the new identity ({}) into '{}' after {tries} attempts.", id.peer_id, id_path.display());
            Ok(())
        }
        Cmd::Identity { cmd: IdentityCmd::Show } => {
            let id = load_identity(&id_path)?;
            println!("{}", serde_json::to_string_pretty(&serde_json::json!({"peer_id": id.peer_id, "public_key": id.public_key})).expect("json"));
            Ok(())
        }
        Cmd::Faucet { amount, out } => {
            let f = FaucetFile::generate(&mut rand::thread_rng(), amount * MUTEZ_PER_TEZ);
            let text = serde_json::to_string_pretty(&f).expect("faucet serializes");
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| e.to_string())?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Cmd::Run { rpc_addr: addr, difficulty, block_interval, constants } => {
            let id = load_identity(&id_path)?;
            id.verify(difficulty).map_err(|e| format!("{e}; regenerate with `identity generate --difficulty {difficulty}`"))?;
            let addr = rpc_addr(&addr)?;
            let constants = match constants {
                Preset::Mainnet => Constants::mainnet(),
                Preset::Desk => Constants::desk(),
            };
            let svc = Arc::new(NodeService::new(constants));
            println!("Node {} listening on http://{addr}", id.peer_id);
            for (i, k) in bootstrap_keys(5).iter().enumerate() {
                println!("bootstrap{} {} {}", i + 1, k.public_key().address(), k);
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| format!("cannot bind {addr}: {e}"))?;
                if block_interval > 0.0 {
                    spawn_baker(svc.clone(), Duration::from_secs_f64(block_interval));
                }
                serve(listener, svc, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
                .map_err(|e| e.to_string())
            })
        }
    }
}

fn load_identity(path: &std::path::Path) -> Result<NodeIdentity, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| format!("no identity at {}; run `tzdesk-node identity generate` first", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("corrupt identity file {}: {e}", path.display()))
}
