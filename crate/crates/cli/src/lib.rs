//! Command-line front end and HTTP session service for the layout engine.

pub mod args;
pub mod commands;
pub mod service;
pub mod wire;

use std::io::Write;
use std::net::SocketAddr;

use anyhow::{Context, Result};

use crate::args::{Cli, Command, ServeArgs};
use crate::service::AppState;

/// Runs one parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Scenarios { json } => commands::scenarios(json, out),
        Command::Plan(a) => commands::plan(&a, out),
        Command::Train(a) => commands::train(&a, out),
        Command::Eval(a) => commands::eval(&a, out),
        Command::Render(a) => commands::render(&a, out),
        Command::Plot(a) => commands::plot(&a, out),
        Command::Serve(a) => serve(&a),
    }
}

fn serve(args: &ServeArgs) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let state = match &args.snapshot {
            Some(p) if p.exists() => {
                AppState::load(p).await.with_context(|| format!("restoring sessions from {}", p.display()))?
            }
            _ => AppState::default(),
        };
        let addr: SocketAddr = format!("{}:{}", args.host, args.port).parse().context("bad --host/--port")?;
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        tracing::info!(%addr, sessions = state.len().await, "listening");
        axum::serve(listener, service::router(state.clone()))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        if let Some(p) = &args.snapshot {
            state.save(p).await.with_context(|| format!("writing {}", p.display()))?;
            tracing::info!(path = %p.display(), "sessions saved");
        }
        Ok(())
    })
}
