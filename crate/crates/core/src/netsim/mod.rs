//! Mesh radio simulation: log-distance path loss with wall attenuation,
//! hop-count routing over usable links, strict-priority message classes and
//! chunked bulk map transfer.

mod network;
mod radio;
mod routing;

pub use network::{
    Delivery, LinkBytes, LinkChange, Message, MessageClass, MessageId, Network, SendError, SessionId, SessionState,
    StepReport, TransferSession, CONTROL_MAX_BYTES, DEFAULT_CHUNK_SIZE,
};
pub use radio::{link_loss, LinkState, RadioNode, RadioProfile};
pub use routing::{compute_routes, Route, RoutingTable};
