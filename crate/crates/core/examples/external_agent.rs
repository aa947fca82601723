//! Plays a match against an agent that lives behind the line-delimited JSON
//! protocol on a loopback TCP socket. The remote agent always offers the
//! cooperative quantity and explains itself in the rationale field.

use std::io::BufReader;
use std::net::TcpListener;
use std::thread;

use market_trust::agents::AgentSpec;
use market_trust::engine::{self, MatchConfig};
use market_trust::game::GameSpec;
use market_trust::protocol::{serve, Endpoint, Response};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let address = listener.local_addr()?.to_string();
    let server = thread::spawn(move || -> Result<usize, String> {
        let (stream, _) = listener.accept().map_err(|e| e.to_string())?;
        let reader = BufReader::new(stream.try_clone().map_err(|e| e.to_string())?);
        serve(reader, stream, |req| {
            let b = req.game.own_value;
            let n = req.game.n_agents.unwrap_or(2) as f64;
            let mut r = Response::new(b / (2.0 * n));
            r.rationale = Some(format!("round {}/{}: holding the cooperative share", req.round, req.horizon));
            r
        })
        .map_err(|e| e.to_string())
    });

    let remote = AgentSpec::External { endpoint: Endpoint::Tcp { address } };
    let config = MatchConfig::new(GameSpec::cournot(vec![15.0, 15.0])?, 6, vec![remote, AgentSpec::synthetic()]);
    let log = engine::run_match(&config)?;
    for r in &log.rounds {
        println!(
            "round {}: actions {:?} payoffs {:?} | {}",
            r.round,
            r.actions,
            r.outcome.payoffs,
            r.rationales.first().cloned().flatten().unwrap_or_default()
        );
    }
    println!("status {:?}", log.status);
    drop(log);
    println!("remote agent answered {} requests", server.join().expect("server thread")?);
    Ok(())
}
