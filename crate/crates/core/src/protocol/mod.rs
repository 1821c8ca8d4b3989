//! Per-round protocol: latency screening, user selection, opportunistic
//! intermediate uploads and the server inbox.

pub mod inbox;
pub mod latency;
pub mod selection;
pub mod transmission;

pub use inbox::{
    collect_for_aggregation, final_upload, Collected, EntryKind, FinalOutcome, InboxEntry, Scheme, ServerInbox,
    StaleQueue, StaleUpdate,
};
pub use latency::{
    activation_bits, model_size_bits, one_round_latency, uplink_latency, LatencyProfile, LinkRates, Mode,
    PayloadSizes, RoundWorkload,
};
pub use selection::{select_users, select_with_priorities, Candidate, SelectionResult};
pub use transmission::{compute_budget, scheduled_epochs, try_opportunistic_transmit, TransmissionBudget, TransmitOutcome};
