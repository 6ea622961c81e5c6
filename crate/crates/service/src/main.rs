use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;
use featacq_service::{router, AppState, ModelRegistry, SessionStore};

#[derive(Parser)]
#[command(name = "featacq-service", version, about = "Serve interactive acquisition sessions over HTTP")]
struct Args {
    #[arg(long, env = "ACQ_ADDR", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Directory of `<tag>/model.json` + `<tag>/schema.json` pairs.
    #[arg(long, env = "ACQ_MODEL_DIR")]
    model_dir: PathBuf,
    /// Idle time before a session is evicted.
    #[arg(long, env = "ACQ_SESSION_TTL_SECS", default_value_t = 24 * 60 * 60)]
    session_ttl_secs: u64,
}

#[tokio::main]
async fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let models = match ModelRegistry::load_dir(&args.model_dir) {
        Ok(m) if m.is_empty() => {
            log::error!("no <tag>/model.json + schema.json pairs under {}", args.model_dir.display());
            return std::process::ExitCode::FAILURE;
        }
        Ok(m) => m,
        Err(e) => {
            log::error!("{e}");
            return std::process::ExitCode::FAILURE;
        }
    };
    log::info!("loaded {} model(s)", models.len());
    let sessions = SessionStore::new(Duration::from_secs(args.session_ttl_secs));
    let app = router(AppState::new(models, sessions));
    let listener = match tokio::net::TcpListener::bind(args.addr).await {
        Ok(l) => l,
        Err(e) => {
            log::error!("bind {}: {e}", args.addr);
            return std::process::ExitCode::FAILURE;
        }
    };
    log::info!("listening on {}", args.addr);
    if let Err(e) = axum::serve(listener, app).await {
        log::error!("{e}");
        return std::process::ExitCode::FAILURE;
    }
    std::process::ExitCode::SUCCESS
}
