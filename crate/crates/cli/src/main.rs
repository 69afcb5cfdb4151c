mod args;
mod state;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use vfac_core::harness::{self, RunOptions, Scenario};
use vfac_core::protocol::{CtId, Request, Response};
use vfac_core::{Attribute, AuthorityId, Error, Gid, PolicyNode, Result};

use args::{AuthorityCommand, Cli, Command, PoolCommand, ReportFormat, ScenarioCommand, UserCommand};
use state::Workspace;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotSatisfied => 2,
        Error::VerificationFailed => 3,
        Error::UnknownUser(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn emit(format: ReportFormat, value: serde_json::Value, text: String) {
    match format {
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&value).expect("json")),
        ReportFormat::Table => print!("{text}"),
    }
}

fn attributes(names: &[String]) -> Result<Vec<Attribute>> {
    names.iter().map(|n| Attribute::new(n)).collect()
}

fn parse_ct_id(s: &str) -> Result<CtId> {
    let bytes = hex::decode(s).map_err(|e| Error::InvalidInput(format!("ciphertext id: {e}")))?;
    bytes.try_into().map_err(|_| Error::InvalidInput("ciphertext id must be 32 bytes of hex".into()))
}

fn run(cli: &Cli) -> Result<u8> {
    let g = &cli.global;
    let format = g.report;
    match &cli.command {
        Command::Setup { lambda } => {
            let ws = Workspace::create(g, *lambda)?;
            emit(
                format,
                json!({ "data_dir": ws.dir(), "lambda": lambda }),
                format!("initialized {}\n", ws.dir().display()),
            );
        }
        Command::Authority(AuthorityCommand::New { id }) => {
            let mut ws = Workspace::open(g, &cli_words())?;
            let id = AuthorityId::new(id)?;
            let keys = ws.new_authority(&id)?;
            let public = hex::encode(vfac_core::codec::Encode::to_bytes(&keys.public));
            emit(format, json!({ "authority": id.to_string(), "public_key": public }), format!("authority {id} created\n"));
        }
        Command::User(UserCommand::Enroll { gid, attributes: names }) => {
            let mut ws = Workspace::open(g, &cli_words())?;
            let gid = Gid::new(gid)?;
            let (issued, held) = ws.enroll(&gid, &attributes(names)?)?;
            emit(
                format,
                json!({ "gid": gid.to_string(), "issued": names_of(&issued), "attributes": names_of(&held) }),
                format!(
                    "{gid}: issued [{}], now holds [{}]\n",
                    join(&issued),
                    join(&held)
                ),
            );
        }
        Command::Pool(PoolCommand::Fill { attributes: names, count }) => {
            let mut ws = Workspace::open(g, &cli_words())?;
            let list = attributes(names)?;
            let mut owner = ws.owner()?;
            owner.precompute_pool(&list, *count)?;
            let available: serde_json::Map<String, serde_json::Value> =
                list.iter().map(|a| (a.to_string(), json!(owner.pool().available(a)))).collect();
            let text: String = list.iter().map(|a| format!("{a}: {} available\n", owner.pool().available(a))).collect();
            emit(format, json!({ "available": available }), text);
        }
        Command::Encrypt { policy, message, input } => {
            let mut ws = Workspace::open(g, &cli_words())?;
            let policy: PolicyNode = policy.parse()?;
            let message = match (message, input) {
                (Some(m), _) => m.as_bytes().to_vec(),
                (None, Some(path)) => fs::read(path)?,
                (None, None) => return Err(Error::InvalidInput("give --message or --input".into())),
            };
            let mut owner = ws.owner()?;
            let id = owner.encrypt(&message, &policy)?;
            let id = hex::encode(id);
            emit(format, json!({ "ct_id": id, "policy": policy.to_string() }), format!("{id}\n"));
        }
        Command::Decrypt { gid, ct_id, output } => {
            let ws = Workspace::open(g, &cli_words())?;
            let user = ws.load_user(&Gid::new(gid)?)?;
            let plain = user.decrypt(ws.deployment().cloud_link(), &parse_ct_id(ct_id)?)?;
            match (output, format) {
                (Some(path), _) => {
                    fs::write(path, &plain)?;
                    emit(format, json!({ "written": path, "bytes": plain.len() }), String::new());
                }
                (None, ReportFormat::Json) => emit(
                    format,
                    json!({ "plaintext": String::from_utf8_lossy(&plain), "hex": hex::encode(&plain) }),
                    String::new(),
                ),
                (None, ReportFormat::Table) => std::io::stdout().write_all(&plain)?,
            }
        }
        Command::Revoke { gid } => {
            let ws = Workspace::open(g, &cli_words())?;
            let gid = Gid::new(gid)?;
            let changed = ws
                .deployment()
                .cloud_link()
                .call(&Request::Revoke { gid: gid.clone() })
                .and_then(Response::into_ack)?;
            let text = if changed { format!("{gid} revoked\n") } else { format!("{gid} was not enrolled\n") };
            emit(format, json!({ "gid": gid.to_string(), "changed": changed }), text);
        }
        Command::Bench { rows } => {
            let report = harness::bench(*rows, g.seed.unwrap_or(1))?;
            match format {
                ReportFormat::Json => println!("{}", report.to_json()),
                ReportFormat::Table => print!("{}", report.to_table()),
            }
        }
        Command::Scenario(ScenarioCommand::Run { file }) => {
            let scenario = Scenario::load(file)?;
            let opts = RunOptions { seed: g.seed, transport: g.transport, data_dir: g.data_dir.clone() };
            let report = harness::run_scenario(&scenario, &opts)?;
            match format {
                ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&report).expect("json")),
                ReportFormat::Table => print!("{}", report.to_table()),
            }
            return Ok(if report.passed { 0 } else { 1 });
        }
    }
    Ok(0)
}

fn names_of(list: &[Attribute]) -> Vec<String> {
    list.iter().map(|a| a.to_string()).collect()
}

fn join(list: &[Attribute]) -> String {
    names_of(list).join(", ")
}

/// The words of the command line, used to separate the random streams of
/// different invocations under one seed.
fn cli_words() -> Vec<String> {
    std::env::args().skip(1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_classes_have_distinct_codes() {
        assert_eq!(exit_code(&Error::NotSatisfied), 2);
        assert_eq!(exit_code(&Error::VerificationFailed), 3);
        assert_eq!(exit_code(&Error::UnknownUser("u".into())), 4);
        assert_eq!(exit_code(&Error::NotFound("x".into())), 1);
        assert_eq!(exit_code(&Error::PoolEmpty("a".into())), 1);
    }

    #[test]
    fn ct_ids_are_checked() {
        assert!(parse_ct_id(&"ab".repeat(32)).is_ok());
        assert!(parse_ct_id("abc").is_err());
        assert!(parse_ct_id(&"ab".repeat(31)).is_err());
    }
}
