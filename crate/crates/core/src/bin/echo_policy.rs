//! Test double for the external-policy protocol: always answers with the
//! lowest legal action.
//!
//! Usage: `echo_policy [--tcp ADDR] [--version V] [--behaviour first|illegal|garbage|silent]`

use std::io;
use std::net::TcpListener;
use std::process::ExitCode;

use yle_core::agents::external::{serve_echo, EchoBehaviour, PROTOCOL_VERSION};

fn main() -> ExitCode {
    let mut tcp = None;
    let mut version = PROTOCOL_VERSION.to_string();
    let mut behaviour = EchoBehaviour::FirstLegal;
    let mut args = std::env::args().skip(1);
    while let Some(flag) = args.next() {
        let value = args.next();
        match (flag.as_str(), value) {
            ("--tcp", Some(v)) => tcp = Some(v),
            ("--version", Some(v)) => version = v,
            ("--behaviour", Some(v)) => {
                behaviour = match v.as_str() {
                    "first" => EchoBehaviour::FirstLegal,
                    "illegal" => EchoBehaviour::Illegal,
                    "garbage" => EchoBehaviour::Garbage,
                    "silent" => EchoBehaviour::Silent,
                    other => {
                        eprintln!("unknown behaviour {other:?}");
                        return ExitCode::from(2);
                    }
                }
            }
            (other, _) => {
                eprintln!("unexpected argument {other:?}");
                return ExitCode::from(2);
            }
        }
    }
    let result = match tcp {
        Some(addr) => TcpListener::bind(&addr).and_then(|l| l.accept()).map_err(Into::into).and_then(|(stream, _)| {
            let reader = stream.try_clone()?;
            serve_echo(reader, stream, &version, behaviour)
        }),
        None => serve_echo(io::stdin().lock(), io::stdout().lock(), &version, behaviour),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("echo_policy: {e}");
            ExitCode::FAILURE
        }
    }
}
