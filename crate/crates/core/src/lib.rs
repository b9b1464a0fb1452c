//! Discrete-event simulator of a spiking-neural-network accelerator whose
//! processing elements keep neuron-model lookup tables in ROM-embedded RAM.
//!
//! The crate is layered bottom-up:
//!
//! | module        | contents |
//! |---------------|----------|
//! | [`fixed`]     | Q-format fixed point and the counting, saturating ALU |
//! | [`lut`]       | lookup tables, the ROM image and range-reduced `exp` |
//! | [`memory`]    | SRAM / R-SRAM / STT-MRAM / R-MRAM arrays with access counters, energy and area |
//! | [`neuron`]    | LIF, Izhikevich and Hodgkin-Huxley updates and STDP, all through LUTs |
//! | [`spikes`]    | packed spike vectors and HWC tensors |
//! | [`mapper`]    | network grammar, conv lowering, PE packing, output merge |
//! | [`pe`]        | the event-driven processing element |
//! | [`scheduler`] | global memory, scatter/gather, pipelined timing |
//! | [`encoder`]   | rate coding and MNIST / CIFAR-10 readers |
//! | [`config`], [`report`] | TOML experiments and energy / area / performance reports |
//!
//! A run in a few lines:
//!
//! ```
//! use romsnn::config::ExperimentConfig;
//! use romsnn::report::run_experiment;
//!
//! let mut cfg = ExperimentConfig::with_network("8x8x1-4c3-2s-10o");
//! cfg.images = 2;
//! cfg.timesteps = 5;
//! let report = run_experiment(&cfg).unwrap();
//! assert!(report.stats.total_pj > 0.0);
//! ```

pub mod config;
pub mod encoder;
pub mod error;
pub mod fixed;
pub mod lut;
pub mod mapper;
pub mod memory;
pub mod neuron;
pub mod pe;
pub mod report;
pub mod scheduler;
pub mod spikes;

pub use error::{Error, Result};
