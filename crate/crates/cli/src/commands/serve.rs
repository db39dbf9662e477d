use std::io::{self, BufReader, Write};
use std::net::TcpListener;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Args;
use pasta_core::bridge::{serve_lines, serve_tcp, ReadSource, StubModel, WriteSink};
use serde::Serialize;

#[derive(Args, Debug, Serialize)]
pub struct StubServeArgs {
    /// Listen on this address instead of stdio; the bound address is printed first
    #[arg(long)]
    pub tcp: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
}

pub fn stub_serve(args: &StubServeArgs) -> Result<()> {
    let service = Arc::new(StubModel::new());
    match &args.tcp {
        Some(addr) => {
            let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
            let mut stdout = io::stdout();
            writeln!(stdout, "{}", listener.local_addr()?)?;
            stdout.flush()?;
            serve_tcp(listener, service, args.workers)?;
        }
        None => serve_lines(service, ReadSource(BufReader::new(io::stdin())), WriteSink(io::stdout()), args.workers)?,
    }
    Ok(())
}
