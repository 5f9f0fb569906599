//! Batch commands and the session server behind the `handguide` binary.

pub mod args;
pub mod commands;
pub mod server;

use std::sync::Arc;

use args::{Cli, Command, ServeArgs};
use commands::{CliError, Report};
use handguide_core::service::SessionManager;

pub async fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let addr = format!("{}:{}", args.host, args.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| CliError::Usage(format!("bind error on {addr}: {e}")))?;
    eprintln!("listening on {}", listener.local_addr().map_or(addr, |a| a.to_string()));
    let app = server::router(Arc::new(SessionManager::default()));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Failed(format!("server error: {e}")))
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Register(a) => commands::register(a),
        Command::Bench(a) => commands::bench(a),
        Command::Replay(a) => commands::replay_cmd(a),
        Command::Synth(a) => commands::synth(a),
        Command::Serve(a) => {
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| CliError::Failed(format!("cannot start runtime: {e}")))?;
            runtime.block_on(serve(a))?;
            Ok(Report::default())
        }
    }
}
