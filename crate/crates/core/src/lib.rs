//! Quantum sensor circuit synthesis with a hybrid quantum-selection DQN.
//!
//! * [`statevector`]: dense statevector engine.
//! * [`sensor_env`]: the circuit-building environment, QFI reward and Husimi-Q observation.
//! * [`qnet`]: Q-network, replay buffer, Adam and checkpoints.
//! * [`selector`]: quantum and epsilon-greedy action selection.
//! * [`trainer`]: episode loop, run reports and the brute-force oracle.

pub mod error;
pub mod qnet;
pub mod selector;
pub mod sensor_env;
pub mod statevector;
pub mod trainer;

pub use error::{Error, Result};
pub use qnet::{Checkpoint, Hyperparams, NetworkParams, Transition};
pub use selector::SelectionMode;
pub use sensor_env::{Action, EnvConfig, HusimiFeatures, SensorEnv, StepOutcome, Termination};
pub use statevector::{Amplitude, Axis, Gate2x2, StateVector};
pub use trainer::{brute_force, run_training, AgentKind, EpisodeRecord, RunReport, Trainer};
