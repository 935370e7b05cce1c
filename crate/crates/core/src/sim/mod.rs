//! Deterministic discrete-event simulation of asynchronous reliable FIFO
//! point-to-point links with Byzantine processes fixed at the start.
//!
//! Every scheduled event is either the delivery of the oldest message on one
//! channel or the injection of an enabled invocation. The adversary picks
//! among enabled events, by script or by a seeded PRNG, so equal setups give
//! equal traces.

mod engine;
mod machine;
mod message;
mod script;
mod trace;

pub use engine::{
    run, Invocation, Protocol, ProtocolKind, Schedule, ScheduleStep, SimSetup, Simulation,
    DEFAULT_MAX_STEPS,
};
pub use machine::{Context, Machine, Operation, Output, RegisterState};
pub use message::{Envelope, Message, MessageKind, Value};
pub use script::{Action, ByzantineScript, Emit, Rule, ScriptEnv, ScriptMachine, Target, TargetWord, Trigger};
pub use trace::{DeliveryEvent, Event, Record, Trace};
