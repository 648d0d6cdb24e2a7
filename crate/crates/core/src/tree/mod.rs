//! Key-tree identification followed by HB+ authentication.

mod directory;
mod keys;
mod protocol;

pub use directory::{setup_system, TagCredential, TreeDirectory};
pub use keys::{derive_auth_keys, derive_node_key, MasterSecret, NodePath};
pub use protocol::{
    reader_descend, reader_descend_path, run_protocol_iterated, run_protocol_once,
    run_protocol_traced, run_protocol_with, tag_traversal_respond, Descent, OpCounts,
    ProtocolOutcome, RunOptions, Transcript, TraversalMessage,
};
