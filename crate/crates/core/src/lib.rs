//! A discrete-event simulation kernel with classic and parallel semantics,
//! runtime structure changes, typed ports, a declarative model format, and
//! byte-stable traces.
//!
//! Models are hierarchies of atomic components (state, transition functions,
//! output function, time advance) wired into networks by typed couplings.
//! The kernel drives them per the abstract simulator protocol: initialize,
//! activate the imminent set, route outputs as inputs, transition, repeat.
//! Components may request structure changes — adding, removing, or replacing
//! models, rewiring couplings, reshaping ports — which apply at a safe point
//! at the end of each step, under either distributed or executive-only
//! authority.
//!
//! The `parallel` feature (on by default) runs the data-independent per-step
//! phases over rayon; traces are byte-identical to the sequential fallback
//! either way.

pub mod atomic;
pub mod audit;
pub mod behaviors;
pub mod catalog;
pub mod coupled;
pub mod doc;
pub mod engine;
pub mod error;
pub mod flatten;
pub mod format;
pub mod message;
pub mod model;
pub mod path;
pub mod port;
pub mod structure;
pub mod time;
pub mod trace;
pub mod value;

pub use atomic::{AtomicBehavior, AtomicProcessor, AtomicSpec, TransitionKind};
pub use catalog::BehaviorCatalog;
pub use coupled::{instantiate, validate_tree, Coordinator, Processor};
pub use engine::{Engine, HaltReason, MessageCounters, RunSummary};
pub use error::{BehaviorError, SimError, StructureError, StructureErrorCode, UsageError};
pub use flatten::flatten;
pub use format::{parse_model, print_model};
pub use message::{Bag, Message};
pub use model::{
    AtomicModelSpec, CoupledModelSpec, Coupling, Mode, ModelDocument, ModelSpec, ParamMap,
    ParamValue, PortRef, StopCondition,
};
pub use path::ModelPath;
pub use port::{Direction, PortSpec};
pub use structure::{
    apply_batch, snapshot_context, validate, Authority, ChangePolicy, ConflictMode,
    ContextSnapshot, InitDirective, StructureChangeKind, StructureChangeRequest,
};
pub use time::SimTime;
pub use trace::{
    parse_trace, write_trace, MemorySink, NullSink, RecordKind, TraceRecord, TraceSink, WriteSink,
};
pub use value::{check_value, StateValue, Value, ValueTypeTag};
