//! Simulation and verification library for a lossy quasistatic slab lens.
//!
//! The physical setup is a slab of thickness `a` with permittivity
//! `-1 + i delta` between a cladding layer (`1 + i mu`) occupying `x < 0`
//! and the background medium (`1`) for `x > a`, driven by a compactly
//! supported charge source placed to the right of the slab. Everything of
//! interest is computed from the Fourier transform of the potential in the
//! coordinate along the slab: layer potentials, their derivatives, the
//! time-averaged power dissipated in a strip behind the slab, and a family
//! of rigorous upper and lower bounds on that dissipation whose crossing
//! behavior decides whether the configuration exhibits anomalous localized
//! resonance (unbounded dissipation as the loss `delta` vanishes).
//!
//! Modules, roughly bottom-up:
//!
//! - [`math`]: exact binary scaling, stable log helpers, root finding.
//! - [`scaled`]: complex values `mantissa * 2^exp2` for magnitudes outside
//!   the f64 range.
//! - [`par`]: the sequential/parallel execution seam (rayon behind the
//!   `parallel` feature; results are byte-identical either way).
//! - [`quad`]: deterministic adaptive Clenshaw-Curtis quadrature, including
//!   a log-domain driver for integrands with extreme dynamic range.
//! - [`slab`]: slab configuration, loss model `mu = delta + lambda delta^beta`,
//!   derived scalars, and validity thresholds on `delta`.
//! - [`source`]: rectangle, circle, and gridded charge densities with their
//!   closed-form or quadrature transforms and source-dependent constants.
//! - [`potential`]: transform-domain potentials in the three layers, their
//!   x-derivatives, real-space reconstruction, and energy identities.
//! - [`dissipation`]: the dissipated-power integral `E_xi(delta)` evaluated
//!   in the log domain with a certified truncation tail.
//! - [`bounds`]: the lemma-level bound chain, the four-term upper bound, the
//!   theorem lower bound, and the resonance classifier.
//! - [`sweep`]: run configuration (TOML), presets, sweep execution, CSV/JSON
//!   rows, and the self-check suites the CLI exposes.

pub mod bounds;
pub mod error;
pub mod math;
pub mod dissipation;
pub mod par;
pub mod potential;
pub mod quad;
pub mod scaled;
pub mod slab;
pub mod source;
pub mod sweep;

pub use bounds::{
    BlowupPoint, BlowupSequence, BoundChain, BoundEvaluation, ChainConstants, ClassifyProbe,
    FarFieldConstants, LemmaCheck, LemmaPlan, LemmaSuiteReport, Regime, RegimeReport,
    TheoremBound, WindowBound,
};
pub use error::{Error, Result};
pub use dissipation::{DissipationOptions, DissipationResult, DissipationSolver};
pub use par::ExecMode;
pub use potential::{HatParts, PotentialSolver, RowEnergy};
pub use scaled::ScaledComplex;
pub use slab::{DeltaThresholds, LayerScalars, SlabConfig};
pub use source::{Source, SourceBounds};
pub use sweep::{
    preset, run_eval, run_sweep, run_verify, MutationMode, RunConfig, SweepOutcome, SweepRow,
    SweepSummary, VerifyReport,
};
