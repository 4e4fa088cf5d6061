//! Hierarchical dynamic quantum secret sharing.
//!
//! A boss shares an n-bit key with each primary agent through a two-party
//! key-establishment sub-protocol (simulated BB84 or an ideal oracle). The
//! master key is the XOR of those keys, so it can only be rebuilt when every
//! primary agent collaborates. Agents may recruit sub-agents of their own and
//! decide whether to fold them into their contribution. Membership changes
//! are single XOR updates.
//!
//! Modules, bottom-up:
//!
//! - [`key`]: n-bit strings and XOR.
//! - [`quantum`]: BB84 qubit preparation, channel, measurement.
//! - [`subprotocol`]: two-party key establishment.
//! - [`keytree`]: the hierarchy and its membership operations.
//! - [`sharing`]: recovery, one-time-pad broadcast, permutation locks.
//! - [`analysis`]: qubit efficiency, the comparison table and audits.
//! - [`harness`]: scenario scripts and transcripts.

pub mod analysis;
pub mod harness;
pub mod key;
pub mod keytree;
pub mod permutation;
pub mod quantum;
pub mod sharing;
pub mod subprotocol;

pub use key::{Key, KeyError};
pub use keytree::{AgentId, AgentNode, HierarchyTree, KeyTreeError};
pub use permutation::Permutation;
pub use quantum::{seeded, Basis, ChannelModel, EveModel, QubitSymbol, RandomSource};
pub use sharing::{Contribution, ControlledState, SharingError};
pub use subprotocol::{
    establish_key, run_bb84, AbortReason, Bb84Config, KeyEstablishment, SessionError,
    SessionResult, SubprotocolKind,
};
