//! HTTP API over interactive acquisition sessions.
//!
//! Values cross the wire in the model's [0, 1] space. Each session's
//! schema summary carries the raw-unit bounds for converting clinical
//! values on the client.

pub mod api;
pub mod registry;
pub mod routes;
pub mod store;

pub use api::{parse_create_session, parse_submit_feature, ApiError};
pub use registry::ModelRegistry;
pub use routes::{router, AppState};
pub use store::SessionStore;
