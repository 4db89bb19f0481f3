//! HTTP session service and command-line front end for [`hintbandit`].
//!
//! - [`api`]: the JSON routes (`/sessions`, features, hints, finish,
//!   `/healthz`) and static assets.
//! - [`config`]: the service config file and its environment overrides.
//! - [`corpus`]: append-only JSONL persistence of finished records.
//! - [`server`]: startup, background loading and shutdown.
//! - [`cli`]: the `analyze`, `simulate` and `serve` subcommands.

pub mod api;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod server;

pub use api::{router, AppState};
pub use config::ServiceConfig;
