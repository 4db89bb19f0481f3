//! Running the service: background store loading, expiry sweeps, shutdown.

use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use hintbandit::{Engine, Normalizer, WordStore};
use tokio::net::TcpListener;

use crate::api::{router, AppState};
use crate::config::ServiceConfig;

/// How often abandoned sessions are looked for.
const REAP_EVERY: Duration = Duration::from_secs(30);
/// How long after its deadline an unfinished session is closed by the server.
const REAP_GRACE_MS: u64 = 60_000;

/// Loads the word store and normalizer named in `config`.
pub fn load_engine(config: &ServiceConfig) -> anyhow::Result<Engine> {
    let store = WordStore::load(&config.embeddings, &config.frequencies)
        .with_context(|| format!("loading {} and {}", config.embeddings.display(), config.frequencies.display()))?;
    let normalizer = Normalizer::from_files(config.stopwords.as_deref(), config.lemmas.as_deref())?;
    tracing::info!(
        words = store.space().len(),
        candidates = store.candidates().len(),
        "word store loaded"
    );
    Ok(Engine::new(Arc::new(store), Arc::new(normalizer)))
}

/// Binds, starts answering immediately (503 until the store is loaded), and
/// runs until Ctrl-C. A store that fails to load stops the service.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let state = Arc::new(AppState::from_config(&config));
    let app = router(state.clone(), config.static_dir.as_deref());
    let listener = TcpListener::bind(config.bind)
        .await
        .with_context(|| format!("binding {}", config.bind))?;
    tracing::info!(addr = %listener.local_addr()?, corpus = %state.corpus_path().display(), "listening");

    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
                tracing::info!("shutting down");
            })
            .await
    });

    let loader = {
        let config = config.clone();
        tokio::task::spawn_blocking(move || load_engine(&config))
    };
    match loader.await? {
        Ok(engine) => {
            state.set_engine(engine);
        }
        Err(e) => {
            server.abort();
            return Err(e);
        }
    }

    let reaper = {
        let state = state.clone();
        tokio::spawn(async move {
            let mut every = tokio::time::interval(REAP_EVERY);
            loop {
                every.tick().await;
                let closed = state.reap_expired(REAP_GRACE_MS).await;
                if closed > 0 {
                    tracing::info!(closed, "closed abandoned sessions");
                }
            }
        })
    };
    let result = server.await;
    reaper.abort();
    result?.context("server error")
}
