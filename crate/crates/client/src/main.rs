use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::Value as Json;
use tzdesk_client::receipt::describe;
use tzdesk_client::scenario::{self, Session};
use tzdesk_client::script::{expr, origination_script, run_local, typecheck};
use tzdesk_client::tez::{format_tez, parse_tez};
use tzdesk_client::{client_dir, Client, ClientError, Http, SubmitOptions, Submitted, Wallet};
use tzdesk_core::block::SANDBOX_GENESIS_TIME;
use tzdesk_core::SecretKey;
use tzdesk_node::FaucetFile;
use tzdesk_sim::{run_simulation, SimConfig};

#[derive(Parser)]
#[command(name = "tzdesk-client", version, about = "Wallet and command-line interface to a tzdesk node")]
struct Cli {
    /// Client directory holding the wallet files.
    #[arg(short = 'd', long = "base-dir", global = true)]
    base_dir: Option<PathBuf>,
    /// Node RPC endpoint.
    #[arg(short = 'E', long, global = true, default_value = "http://127.0.0.1:8732")]
    endpoint: String,
    /// Print every RPC request and reply on stderr.
    #[arg(short = 'l', long = "log-requests", global = true)]
    log_requests: bool,
    /// Seconds between two polls of the node while waiting.
    #[arg(long, global = true, default_value_t = 1.0)]
    poll_interval: f64,
    /// Polls before giving up while waiting.
    #[arg(long, global = true, default_value_t = 3600)]
    max_polls: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Fees {
    /// Largest total fee to pay, in tez. The minimal fee is paid.
    #[arg(long)]
    fee: Option<String>,
    /// Largest storage burn to accept, in tez.
    #[arg(long, default_value = "0")]
    burn_cap: String,
    /// Inject even if the simulation fails.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// gen keys <alias>
    Gen {
        #[arg(value_parser = ["keys"])]
        keys: String,
        alias: String,
        #[arg(long)]
        force: bool,
    },
    /// import secret key <alias> unencrypted:<edsk...>
    Import {
        #[arg(value_parser = ["secret"])]
        secret: String,
        #[arg(value_parser = ["key"])]
        key: String,
        alias: String,
        secret_key: String,
        #[arg(long)]
        force: bool,
    },
    /// activate account <alias> with <faucet.json>
    Activate {
        #[arg(value_parser = ["account"])]
        account: String,
        alias: String,
        #[arg(value_parser = ["with"])]
        with: String,
        file: PathBuf,
    },
    /// get balance for <name> | get script storage for <name>
    Get {
        #[command(subcommand)]
        what: GetCommand,
    },
    /// transfer <amount> from <source> to <destination>
    Transfer {
        amount: String,
        #[arg(value_parser = ["from"])]
        from_kw: String,
        source: String,
        #[arg(value_parser = ["to"])]
        to_kw: String,
        destination: String,
        /// Contract parameter, as a Michelson literal.
        #[arg(long)]
        arg: Option<String>,
        #[command(flatten)]
        fees: Fees,
    },
    /// reveal key for <alias>
    Reveal {
        #[arg(value_parser = ["key"])]
        key: String,
        #[arg(value_parser = ["for"])]
        for_kw: String,
        alias: String,
        #[command(flatten)]
        fees: Fees,
    },
    /// wait for <operation> to be included
    Wait {
        #[arg(value_parser = ["for"])]
        for_kw: String,
        operation: String,
        #[arg(value_parser = ["to"])]
        to_kw: String,
        #[arg(value_parser = ["be"])]
        be_kw: String,
        #[arg(value_parser = ["included"])]
        included_kw: String,
        /// Blocks required on top of the including block.
        #[arg(long, default_value_t = 60)]
        confirmations: u64,
    },
    /// originate contract <name> for <manager> transferring <amount> from <source> running <file>
    Originate {
        #[arg(value_parser = ["contract"])]
        contract_kw: String,
        name: String,
        #[arg(value_parser = ["for"])]
        for_kw: String,
        manager: String,
        #[arg(value_parser = ["transferring"])]
        transferring_kw: String,
        amount: String,
        #[arg(value_parser = ["from"])]
        from_kw: String,
        source: String,
        #[arg(value_parser = ["running"])]
        running_kw: String,
        file: PathBuf,
        /// Initial storage, as a Michelson literal.
        #[arg(long)]
        init: String,
        /// Replace an existing alias.
        #[arg(long)]
        replace: bool,
        #[command(flatten)]
        fees: Fees,
    },
    /// show known contract <name>
    Show {
        #[arg(value_parser = ["known"])]
        known: String,
        #[arg(value_parser = ["contract"])]
        contract: String,
        name: String,
    },
    /// rpc get <path> | rpc post <path> [json]
    Rpc {
        #[arg(value_parser = ["get", "post"])]
        method: String,
        path: String,
        body: Option<String>,
    },
    /// Wait until the node reports its head.
    Bootstrapped,
    /// typecheck <file>
    Typecheck { file: PathBuf },
    /// run script <file> --arg <literal> --storage <literal>
    Run {
        #[arg(value_parser = ["script"])]
        script: String,
        file: PathBuf,
        #[arg(long)]
        arg: String,
        #[arg(long)]
        storage: String,
        /// Amount sent with the call, in tez.
        #[arg(long, default_value = "0")]
        amount: String,
    },
    /// scenario vote | scenario insurance, on a fresh in-process chain
    Scenario {
        #[arg(value_parser = ["vote", "insurance"])]
        name: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Rain level fed to the oracle.
        #[arg(long, default_value_t = 15)]
        rain: i64,
    },
    /// simulate <config.json>: run the multi-node consensus simulator
    Simulate {
        config: PathBuf,
        /// Write the event log as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GetCommand {
    Balance {
        #[arg(value_parser = ["for"])]
        for_kw: String,
        name: String,
    },
    Script {
        #[arg(value_parser = ["storage"])]
        storage: String,
        #[arg(value_parser = ["for"])]
        for_kw: String,
        name: String,
    },
}

fn tez(s: &str) -> Result<u64, ClientError> {
    parse_tez(s).ok_or_else(|| ClientError::BadAmount(s.to_string()))
}

fn read(path: &PathBuf) -> Result<String, ClientError> {
    std::fs::read_to_string(path).map_err(|e| ClientError::File { path: path.display().to_string(), reason: e.to_string() })
}

impl Fees {
    fn options(&self) -> Result<SubmitOptions, ClientError> {
        Ok(SubmitOptions { fee: self.fee.as_deref().map(tez).transpose()?, burn_cap: tez(&self.burn_cap)?, force: self.force })
    }
}

fn print_submitted(c: &Client<Http>, s: &Submitted) {
    for line in describe(&s.receipt, &c.wallet) {
        println!("{line}");
    }
    println!("Injected {}", s.hash);
    println!("Use `tzdesk-client wait for {} to be included` to follow it.", s.hash);
}

fn run(cli: Cli) -> Result<(), ClientError> {
    let dir = client_dir(cli.base_dir);
    let wallet = Wallet::open(&dir)?;
    wallet.check_consistency()?;
    let http = Http::new(&cli.endpoint, Duration::from_secs_f64(cli.poll_interval.max(0.0)));
    let mut c = Client::new(http, wallet);
    c.verbose = cli.log_requests;
    c.max_polls = cli.max_polls;
    match cli.command {
        Command::Gen { alias, force, .. } => {
            if force {
                let sk = SecretKey::generate(&mut rand::thread_rng());
                c.wallet.import_secret_key(&alias, &sk, true)?;
            } else {
                c.wallet.gen_keys(&alias, &mut rand::thread_rng())?;
            }
            c.wallet.save()?;
            println!("{alias}: {}", c.wallet.resolve(&alias)?);
        }
        Command::Import { alias, secret_key, force, .. } => {
            let text = secret_key.strip_prefix("unencrypted:").unwrap_or(&secret_key);
            let sk: SecretKey = text.parse().map_err(|_| ClientError::BadLiteral { what: "the secret key", reason: secret_key.clone() })?;
            let a = c.wallet.import_secret_key(&alias, &sk, force)?;
            c.wallet.save()?;
            println!("{alias}: {a}");
        }
        Command::Activate { alias, file, .. } => {
            let faucet: FaucetFile = serde_json::from_str(&read(&file)?)
                .map_err(|e| ClientError::File { path: file.display().to_string(), reason: e.to_string() })?;
            let hash = c.activate(&alias, &faucet)?;
            c.wallet.save()?;
            println!("Activation of {alias} ({}) for {} tez injected as {hash}", faucet.pkh, format_tez(faucet.amount.parse().unwrap_or(0)));
        }
        Command::Get { what: GetCommand::Balance { name, .. } } => println!("{} tez", format_tez(c.balance(&name)?)),
        Command::Get { what: GetCommand::Script { name, .. } } => println!("{}", c.storage(&name)?.to_inline()),
        Command::Transfer { amount, source, destination, arg, fees, .. } => {
            let parameters = arg.as_deref().map(|a| expr(a, "the argument")).transpose()?;
            let s = c.transfer(tez(&amount)?, &source, &destination, parameters, &fees.options()?)?;
            print_submitted(&c, &s);
        }
        Command::Reveal { alias, fees, .. } => {
            let s = c.reveal(&alias, &fees.options()?)?;
            print_submitted(&c, &s);
        }
        Command::Wait { operation, confirmations, .. } => {
            let inc = c.wait_for(&operation, confirmations)?;
            println!("Operation {operation} included in block {} at level {} ({} confirmations)", inc.block, inc.level, inc.confirmations);
        }
        Command::Originate { name, manager, amount, source, file, init, replace, fees, .. } => {
            if c.wallet.resolve(&manager)? != c.wallet.resolve(&source)? {
                return Err(ClientError::BadLiteral { what: "the manager", reason: "the source manages the contracts it originates".into() });
            }
            let script = origination_script(&read(&file)?, &init)?;
            let (addr, s) = c.originate(&name, tez(&amount)?, &source, script, &fees.options()?, replace)?;
            c.wallet.save()?;
            print_submitted(&c, &s);
            println!("New contract {addr} originated as {name}");
        }
        Command::Show { name, .. } => {
            let a = c.wallet.contract(&name).ok_or(tzdesk_client::WalletError::UnknownAlias(name))?;
            println!("{a}");
        }
        Command::Rpc { method, path, body } => {
            let reply = if method == "get" {
                c.get(&path)?
            } else {
                let body: Json = match body {
                    Some(b) => serde_json::from_str(&b).map_err(|e| ClientError::BadLiteral { what: "the request body", reason: e.to_string() })?,
                    None => Json::Null,
                };
                c.post(&path, body)?
            };
            println!("{}", serde_json::to_string_pretty(&reply).expect("json prints"));
        }
        Command::Bootstrapped => {
            let j = c.get("/monitor/bootstrapped")?;
            println!("Node is bootstrapped, head {} at {}", j["block"].as_str().unwrap_or("?"), j["timestamp"].as_str().unwrap_or("?"));
        }
        Command::Typecheck { file } => {
            let p = typecheck(&read(&file)?)?;
            println!("Well typed");
            println!("parameter {}", p.parameter);
            println!("storage {}", p.storage);
        }
        Command::Run { file, arg, storage, amount, .. } => {
            let r = run_local(&read(&file)?, &arg, &storage, tez(&amount)?, SANDBOX_GENESIS_TIME)?;
            println!("storage\n  {}", r.storage);
            println!("emitted operations");
            for op in &r.operations {
                println!("  transfer {} tez to {} with {}", format_tez(op.amount), op.destination, op.parameter);
            }
            println!("gas {}", r.gas);
        }
        Command::Scenario { name, seed, rain } => {
            let mut s = Session::new(seed)?;
            let out = match name.as_str() {
                "vote" => scenario::vote(&mut s).map(|_| ()),
                _ => scenario::insurance(&mut s, rain).map(|_| ()),
            };
            print!("{}", s.text());
            out?;
        }
        Command::Simulate { config, log } => {
            let cfg = SimConfig::from_json(&read(&config)?).map_err(|e| ClientError::File { path: config.display().to_string(), reason: e.to_string() })?;
            let out = run_simulation(&cfg).map_err(|e| ClientError::File { path: config.display().to_string(), reason: e.to_string() })?;
            if let Some(path) = log {
                std::fs::write(&path, out.log_jsonl()).map_err(|e| ClientError::File { path: path.display().to_string(), reason: e.to_string() })?;
            }
            println!("{}", serde_json::to_string_pretty(&out.summary).expect("summary serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("Error: {e}");
            ExitCode::FAILURE
        }
    }
}
