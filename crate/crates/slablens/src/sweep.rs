//! Run configuration, presets, sweep execution, dataset writers, and the
//! verification suites exposed by the command-line front end.
//!
//! A run is described by a flat TOML file with one level of sections. The
//! full schema, with defaults in brackets:
//!
//! ```toml
//! [slab]
//! lambda = 1.0            # loss amplitude of mu = delta + lambda delta^beta
//! a = 3.0                 # slab depth; set either this or a_rule
//! # a_rule = "near_edge_over_tau"   # derive a from the source geometry:
//! #   "far_edge_over_tau"  puts the influence boundary on the far edge,
//! #   "near_edge_over_tau" puts it on the near edge
//! xi_over_a = 0.25        # dissipation strip width as a fraction of a [0.25]
//!
//! [source]
//! kind = "rectangle"      # "rectangle" | "circle" | "grid"
//! q = 1.0                 # charge scale [1.0]
//! center_x = 6.0          # rectangle and circle
//! center_y = 6.0
//! half_width = 1.0        # rectangle only
//! lobe_height = 1.0       # rectangle only: each lobe's height
//! # radius = 1.0          # circle only
//! # grid_file = "rho.txt" # grid only; see the grid file format below
//!
//! [sweep]
//! betas = [0.2, 0.5, 0.8] # loss exponents, one row group per value
//! # Either an explicit list (sorted descending, duplicates removed):
//! # deltas = [1e-4, 1e-6]
//! # or a log-spaced range:
//! delta_start = 1e-4      # largest loss
//! delta_stop = 1e-12      # smallest loss
//! points_per_decade = 25  # [25]
//! # d_star = 6.0          # witness depth for classification [auto]
//!
//! [output]
//! # path = "sweep.csv"    # dataset destination; the CLI defaults to stdout
//! format = "csv"          # "csv" | "json" [csv]
//!
//! [tolerances]
//! rel_tol = 1e-9          # dissipation integration tolerance [1e-9]
//!
//! # [theorem]             # optional: populate the theorem_bound column
//! # witness = 0.1         # witness constant for the explicit lower bound
//! # d_star = 6.0          # witness depth [the sweep's witness depth]
//!
//! [verify]
//! suites = ["oracles", "lemmas", "pde", "plancherel", "sandwich"]
//! seed = 1370168901       # sample stream seed [0x51ab_1e45]
//! samples = 800           # lemma samples per parameter combination [800]
//! mutate = "none"         # "none" | "flip-closed-form-sign"
//! ```
//!
//! # Grid file format
//!
//! A gridded source is a whitespace-separated text file; `#` starts a
//! comment that runs to the end of the line. The payload is
//!
//! ```text
//! nx ny                   # cell counts along x and y
//! x_min y_min dx dy       # origin of the first cell and the cell sizes
//! v(0,0) v(0,1) ... v(0,ny-1)   # then nx*ny cell values, x-major:
//! v(1,0) ...                     # all ny values of one x-column first
//! ```
//!
//! Values are scaled by `source.q` and must be net charge neutral up to the
//! repairable tolerance documented on the grid constructor.
//!
//! # Dataset schema
//!
//! One row per (loss exponent, loss) pair, exponents ascending and losses
//! descending within each exponent. Columns ([`CSV_HEADER`]):
//!
//! `beta, delta, E_xi, error_estimate, k0, tau_a, regime, T1, T2, T3, T4,
//! theorem_bound`
//!
//! Numbers are written with 17 significant digits so f64 values round-trip.
//! A column is empty when the quantity does not apply: the four-term bound
//! columns need the chain's geometric hypotheses, and `theorem_bound` needs
//! a `[theorem]` section plus a loss small enough for the bound's validity
//! gates. Rows are fully deterministic for a fixed configuration: worker
//! counts only change how rows are distributed, never their values or
//! order, which is what makes byte-identical reruns a testable contract.
//!
//! # Verification suites
//!
//! [`run_verify`] executes the named suites and returns a deterministic
//! report ([`VerifyReport`], serialized by [`VerifyReport::to_json`]):
//!
//! - `oracles`: closed-form source transforms against brute-force
//!   quadrature oracles (panel Gauss-Legendre for the rectangle, a fixed
//!   million-strip grid for the circle) at twenty log-spaced wavenumbers.
//! - `lemmas`: the seeded inequality suite from [`crate::bounds`].
//! - `pde`: interface continuity (value and flux) and a finite-difference
//!   residual of the transform-domain equation at random (loss,
//!   wavenumber, depth) triples.
//! - `plancherel`: line energy computed in real space against the
//!   transform-domain identity, and the dissipation integral against a
//!   direct strip assembly of the gradient energy.
//! - `sandwich`: blow-up monotonicity on a critical geometry and
//!   upper-bound domination plus collapse on a subcritical one.
//!
//! The `mutate` knob exists to prove the oracle suite can fail: flipping
//! the closed-form sign must produce a failing report (the CLI maps it to
//! a nonzero exit).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    blowup_sequence, classify, delta_ceiling, lemma_suite, theorem_lower_bound,
    upper_bound_chain, ClassifyProbe, LemmaPlan, MARGIN_SLACK,
};
use crate::dissipation::{DissipationOptions, DissipationSolver};
use crate::error::{Error, Result};
use crate::math::logspace;
use crate::par::{par_map, with_worker_count, ExecMode};
use crate::potential::PotentialSolver;
use crate::quad::{integrate, QuadOptions};
use crate::scaled::ScaledComplex;
use crate::slab::SlabConfig;
use crate::source::Source;

/// Default sweep resolution in points per decade of loss.
pub const DEFAULT_POINTS_PER_DECADE: usize = 25;

/// Column order of the sweep dataset; shared by the writer and its tests.
pub const CSV_HEADER: &str =
    "beta,delta,E_xi,error_estimate,k0,tau_a,regime,T1,T2,T3,T4,theorem_bound";

/// Verification suites [`run_verify`] knows, in canonical execution order.
pub const SUITE_NAMES: [&str; 5] = ["oracles", "lemmas", "pde", "plancherel", "sandwich"];

/// Names of the bundled example configurations.
pub const PRESET_NAMES: [&str; 4] = ["fig2", "fig3", "fig6", "fig7"];

fn default_q() -> f64 {
    1.0
}
fn default_xi_over_a() -> f64 {
    0.25
}
fn default_points_per_decade() -> usize {
    DEFAULT_POINTS_PER_DECADE
}
fn default_format() -> String {
    "csv".to_string()
}
fn default_rel_tol() -> f64 {
    1e-9
}
fn default_suites() -> Vec<String> {
    SUITE_NAMES.iter().map(|s| s.to_string()).collect()
}
fn default_seed() -> u64 {
    0x51ab_1e45
}
fn default_samples() -> usize {
    800
}
fn default_mutate() -> String {
    "none".to_string()
}

/// `[slab]` section: loss amplitude and geometry of the lens layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabSection {
    /// Loss amplitude `lambda` of `mu = delta + lambda delta^beta`.
    pub lambda: f64,
    /// Explicit slab depth. Set either this or `a_rule`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Geometry rule deriving the depth from the source:
    /// `"far_edge_over_tau"` or `"near_edge_over_tau"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_rule: Option<String>,
    /// Dissipation strip width as a fraction of the slab depth, in (0, 1].
    #[serde(default = "default_xi_over_a")]
    pub xi_over_a: f64,
}

/// `[source]` section: the charge density driving the lens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// `"rectangle"`, `"circle"`, or `"grid"`.
    pub kind: String,
    /// Charge scale multiplying the density.
    #[serde(default = "default_q")]
    pub q: f64,
    /// Center depth (rectangle and circle).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_x: Option<f64>,
    /// Center height (rectangle and circle).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_y: Option<f64>,
    /// Rectangle half width along the depth axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Rectangle lobe height: each signed lobe spans this much of `y`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lobe_height: Option<f64>,
    /// Circle radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Path to a grid file (see the module docs for the format).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_file: Option<String>,
}

/// `[sweep]` section: the (beta, delta) grid and the witness depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Loss exponents; one row group per value, sorted ascending.
    pub betas: Vec<f64>,
    /// Explicit loss values. Mutually exclusive with the range fields; an
    /// empty list yields an empty dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    /// Largest loss of the log-spaced range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_start: Option<f64>,
    /// Smallest loss of the log-spaced range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_stop: Option<f64>,
    /// Resolution of the log-spaced range.
    #[serde(default = "default_points_per_decade")]
    pub points_per_decade: usize,
    /// Witness depth used for regime classification. Defaults to a depth
    /// cutting the source where resonance evidence is strongest (see
    /// [`default_witness_depth`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_star: Option<f64>,
}

/// `[output]` section: dataset destination and encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Destination path; the CLI writes to stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// `"csv"` or `"json"`.
    #[serde(default = "default_format")]
    pub format: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: None,
            format: default_format(),
        }
    }
}

/// `[tolerances]` section: numeric knobs shared by the sweep rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    /// Relative tolerance of the dissipation integration.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            rel_tol: default_rel_tol(),
        }
    }
}

/// `[theorem]` section: enables the explicit lower-bound column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremSection {
    /// Witness constant for the explicit asymptotic lower bound.
    pub witness: f64,
    /// Witness depth; defaults to the sweep's witness depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_star: Option<f64>,
}

/// `[verify]` section: suite selection and sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Suites to run, drawn from [`SUITE_NAMES`].
    #[serde(default = "default_suites")]
    pub suites: Vec<String>,
    /// Seed of the deterministic sample streams.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Lemma-suite samples per parameter combination.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Mutation switch proving the oracle suite can fail:
    /// `"none"` or `"flip-closed-form-sign"`.
    #[serde(default = "default_mutate")]
    pub mutate: String,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            suites: default_suites(),
            seed: default_seed(),
            samples: default_samples(),
            mutate: default_mutate(),
        }
    }
}

/// A complete run description; see the module docs for the TOML schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub slab: SlabSection,
    pub source: SourceSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<TheoremSection>,
    #[serde(default)]
    pub verify: VerifySection,
}

impl RunConfig {
    /// Parses a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Serializes back to TOML. Inverse of [`Self::from_toml`] up to key
    /// order and formatting: parsing the output reproduces `self` exactly.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run configuration serializes to TOML")
    }

    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Checks every section, constructing the source and one slab per
    /// sweep exponent, without running any numerics. All sweep and verify
    /// entry points call this first so bad inputs fail before work starts.
    pub fn validate(&self) -> Result<()> {
        let source = build_source(&self.source)?;
        if self.sweep.betas.is_empty() {
            return Err(Error::Config("sweep.betas must not be empty".into()));
        }
        delta_grid(&self.sweep)?;
        let (d0, d1) = (source.near_edge(), source.far_edge());
        for &beta in &self.sweep.betas {
            let slab = slab_for_beta(&self.slab, &source, beta)?;
            if d0 <= slab.a {
                return Err(Error::Config(format!(
                    "source must sit strictly beyond the slab: near edge {d0:e} \
                     is not above the depth {:e} at beta = {beta:e}",
                    slab.a
                )));
            }
        }
        let depth_ok = |d: f64| d.is_finite() && d >= d0 && d <= d1;
        if let Some(d) = self.sweep.d_star {
            if !depth_ok(d) {
                return Err(Error::Config(format!(
                    "sweep.d_star = {d:e} must lie inside the source depth range [{d0:e}, {d1:e}]"
                )));
            }
        }
        if let Some(th) = &self.theorem {
            if !(th.witness.is_finite() && th.witness > 0.0) {
                return Err(Error::Config(format!(
                    "theorem.witness must be finite and positive, got {:e}",
                    th.witness
                )));
            }
            if let Some(d) = th.d_star {
                if !depth_ok(d) {
                    return Err(Error::Config(format!(
                        "theorem.d_star = {d:e} must lie inside the source depth range \
                         [{d0:e}, {d1:e}]"
                    )));
                }
            }
        }
        match self.output.format.as_str() {
            "csv" | "json" => {}
            other => {
                return Err(Error::Config(format!(
                    "unknown output.format {other:?}; expected \"csv\" or \"json\""
                )))
            }
        }
        let rel = self.tolerances.rel_tol;
        if !(rel.is_finite() && rel > 0.0 && rel <= 1e-2) {
            return Err(Error::Config(format!(
                "tolerances.rel_tol must lie in (0, 1e-2], got {rel:e}"
            )));
        }
        for s in &self.verify.suites {
            if !SUITE_NAMES.contains(&s.as_str()) {
                return Err(Error::Config(format!(
                    "unknown verify suite {s:?}; available: {}",
                    SUITE_NAMES.join(", ")
                )));
            }
        }
        parse_mutation(&self.verify.mutate)?;
        if self.verify.samples == 0 {
            return Err(Error::Config("verify.samples must be positive".into()));
        }
        Ok(())
    }
}

/// Returns a bundled example configuration by name (see [`PRESET_NAMES`]).
///
/// The blow-up pair sizes the slab so the influence region covers the whole
/// source (`fig2` rectangle, `fig3` circle); the bounded pair leaves the
/// entire source outside it (`fig6` rectangle, `fig7` circle). All four
/// sweep the exponents 0.2, 0.5, and 0.8 at unit amplitude and charge with
/// a quarter-depth dissipation strip; the circle presets stop at 1e-12
/// where their transforms run out of f64 headroom, the rectangle presets
/// continue to 1e-16.
pub fn preset(name: &str) -> Result<RunConfig> {
    let (kind, a_rule, delta_stop) = match name {
        "fig2" => ("rectangle", "far_edge_over_tau", 1e-16),
        "fig3" => ("circle", "far_edge_over_tau", 1e-12),
        "fig6" => ("rectangle", "near_edge_over_tau", 1e-16),
        "fig7" => ("circle", "near_edge_over_tau", 1e-12),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let source = if kind == "rectangle" {
        SourceSection {
            kind: kind.to_string(),
            q: 1.0,
            center_x: Some(6.0),
            center_y: Some(6.0),
            half_width: Some(1.0),
            lobe_height: Some(1.0),
            radius: None,
            grid_file: None,
        }
    } else {
        SourceSection {
            kind: kind.to_string(),
            q: 1.0,
            center_x: Some(6.0),
            center_y: Some(6.0),
            half_width: None,
            lobe_height: None,
            radius: Some(1.0),
            grid_file: None,
        }
    };
    Ok(RunConfig {
        slab: SlabSection {
            lambda: 1.0,
            a: None,
            a_rule: Some(a_rule.to_string()),
            xi_over_a: default_xi_over_a(),
        },
        source,
        sweep: SweepSection {
            betas: vec![0.2, 0.5, 0.8],
            deltas: None,
            delta_start: Some(1e-4),
            delta_stop: Some(delta_stop),
            points_per_decade: DEFAULT_POINTS_PER_DECADE,
            d_star: None,
        },
        output: OutputSection {
            path: Some(format!("{name}.csv")),
            format: "csv".to_string(),
        },
        tolerances: ToleranceSection::default(),
        theorem: None,
        verify: VerifySection::default(),
    })
}

/// One-line description of a preset, for listings.
pub fn preset_summary(name: &str) -> &'static str {
    match name {
        "fig2" => "rectangle source fully inside the influence region (blow-up regime)",
        "fig3" => "circle source fully inside the influence region (blow-up regime)",
        "fig6" => "rectangle source fully outside the influence region (bounded regime)",
        "fig7" => "circle source fully outside the influence region (bounded regime)",
        _ => "unknown preset",
    }
}

/// Builds the source described by a `[source]` section.
pub fn build_source(section: &SourceSection) -> Result<Source> {
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| {
            Error::Config(format!(
                "source.{key} is required for kind = {:?}",
                section.kind
            ))
        })
    };
    match section.kind.as_str() {
        "rectangle" => Source::rectangle(
            section.q,
            need(section.center_x, "center_x")?,
            need(section.center_y, "center_y")?,
            need(section.half_width, "half_width")?,
            need(section.lobe_height, "lobe_height")?,
        ),
        "circle" => Source::circle(
            section.q,
            need(section.center_x, "center_x")?,
            need(section.center_y, "center_y")?,
            need(section.radius, "radius")?,
        ),
        "grid" => {
            let path = section.grid_file.as_deref().ok_or_else(|| {
                Error::Config("source.grid_file is required for kind = \"grid\"".into())
            })?;
            load_grid_source(Path::new(path), section.q)
        }
        other => Err(Error::Config(format!(
            "unknown source kind {other:?}; expected \"rectangle\", \"circle\", or \"grid\""
        ))),
    }
}

/// Reads a grid file (module docs describe the format) and builds the
/// source, scaling every cell by `charge_scale`.
pub fn load_grid_source(path: &Path, charge_scale: f64) -> Result<Source> {
    parse_grid_source(&fs::read_to_string(path)?, charge_scale)
}

/// Parses grid file text; see [`load_grid_source`].
pub fn parse_grid_source(text: &str, charge_scale: f64) -> Result<Source> {
    if !(charge_scale.is_finite() && charge_scale != 0.0) {
        return Err(Error::SourceData(format!(
            "grid charge scale must be finite and nonzero, got {charge_scale:e}"
        )));
    }
    let toks: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
        .collect();
    if toks.len() < 6 {
        return Err(Error::SourceData(
            "grid file needs \"nx ny\", \"x_min y_min dx dy\", then nx*ny values".into(),
        ));
    }
    let count = |t: &str, what: &str| -> Result<usize> {
        t.parse()
            .map_err(|_| Error::SourceData(format!("bad {what} {t:?}")))
    };
    let real = |t: &str, what: &str| -> Result<f64> {
        t.parse()
            .map_err(|_| Error::SourceData(format!("bad {what} {t:?}")))
    };
    let nx = count(toks[0], "cell count nx")?;
    let ny = count(toks[1], "cell count ny")?;
    let x_min = real(toks[2], "origin x_min")?;
    let y_min = real(toks[3], "origin y_min")?;
    let dx = real(toks[4], "cell size dx")?;
    let dy = real(toks[5], "cell size dy")?;
    let body = &toks[6..];
    if nx == 0 || ny == 0 || body.len() != nx * ny {
        return Err(Error::SourceData(format!(
            "grid declares {nx} x {ny} cells but carries {} values",
            body.len()
        )));
    }
    let mut values = Vec::with_capacity(body.len());
    for t in body {
        values.push(real(t, "cell value")? * charge_scale);
    }
    Source::grid(x_min, y_min, dx, dy, nx, ny, values)
}

/// Resolves the slab for one sweep exponent, applying the depth rule.
pub fn slab_for_beta(section: &SlabSection, source: &Source, beta: f64) -> Result<SlabConfig> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Config(format!(
            "sweep exponent must be positive and finite, got {beta:e}"
        )));
    }
    let tau = if beta < 1.0 {
        (beta + 2.0) / (beta + 1.0)
    } else {
        1.5
    };
    let a = match (section.a, section.a_rule.as_deref()) {
        (Some(a), None) => a,
        (None, Some("far_edge_over_tau")) => source.far_edge() / tau,
        (None, Some("near_edge_over_tau")) => source.near_edge() / tau,
        (None, Some(other)) => {
            return Err(Error::Config(format!(
                "unknown slab.a_rule {other:?}; expected \"far_edge_over_tau\" or \
                 \"near_edge_over_tau\""
            )))
        }
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "set exactly one of slab.a and slab.a_rule, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Config(
                "one of slab.a or slab.a_rule is required".into(),
            ))
        }
    };
    let frac = section.xi_over_a;
    if !(frac.is_finite() && frac > 0.0 && frac <= 1.0) {
        return Err(Error::Config(format!(
            "slab.xi_over_a must lie in (0, 1], got {frac:e}"
        )));
    }
    SlabConfig::new(a, section.lambda, beta, frac * a)
}

/// Expands the `[sweep]` loss specification into a descending grid.
pub fn delta_grid(section: &SweepSection) -> Result<Vec<f64>> {
    if let Some(list) = &section.deltas {
        if section.delta_start.is_some() || section.delta_stop.is_some() {
            return Err(Error::Config(
                "set either sweep.deltas or the delta_start/delta_stop range, not both".into(),
            ));
        }
        for &d in list {
            if !(d.is_finite() && d > 0.0 && d < 1.0) {
                return Err(Error::Config(format!(
                    "every sweep delta must lie in (0, 1), got {d:e}"
                )));
            }
        }
        let mut grid = list.clone();
        grid.sort_by(|p, q| q.total_cmp(p));
        grid.dedup();
        return Ok(grid);
    }
    let (Some(start), Some(stop)) = (section.delta_start, section.delta_stop) else {
        return Err(Error::Config(
            "sweep needs either deltas or both delta_start and delta_stop".into(),
        ));
    };
    if !(start.is_finite() && stop.is_finite() && stop > 0.0 && start < 1.0 && stop <= start) {
        return Err(Error::Config(format!(
            "sweep range needs 0 < delta_stop <= delta_start < 1, got start {start:e}, \
             stop {stop:e}"
        )));
    }
    if section.points_per_decade == 0 {
        return Err(Error::Config(
            "sweep.points_per_decade must be positive".into(),
        ));
    }
    if stop == start {
        return Ok(vec![start]);
    }
    let decades = (start / stop).log10();
    let n = ((decades * section.points_per_decade as f64).round() as usize).max(1) + 1;
    let mut grid = logspace(stop, start, n);
    grid.reverse();
    // Pin the endpoints so configured values appear verbatim in datasets.
    grid[0] = start;
    *grid.last_mut().expect("nonempty") = stop;
    Ok(grid)
}

/// The witness depth used when the configuration does not pin one: the
/// midpoint of the near edge and the shallower of the far edge and the
/// influence boundary. Inside the influence region that is where the
/// resonant lower bounds are strongest; outside it the choice only labels
/// the report.
pub fn default_witness_depth(slab: &SlabConfig, source: &Source) -> f64 {
    let (d0, d1) = (source.near_edge(), source.far_edge());
    let tau_a = slab.tau() * slab.a;
    if tau_a > d0 {
        0.5 * (d0 + d1.min(tau_a))
    } else {
        0.5 * (d0 + d1)
    }
}

/// One dataset row; see the module docs for the column semantics.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub delta: f64,
    /// Time-averaged power dissipation, when it fits in f64.
    #[serde(rename = "E_xi", skip_serializing_if = "Option::is_none")]
    pub e_xi: Option<f64>,
    /// Relative error estimate of the dissipation integration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_estimate: Option<f64>,
    /// Cutoff wavenumber at this loss.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
    /// Critical depth of the influence region.
    pub tau_a: f64,
    /// Regime verdict for this exponent's geometry.
    pub regime: String,
    /// Four-term upper bound, when its hypotheses hold at this loss.
    #[serde(rename = "T1", skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(rename = "T2", skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(rename = "T3", skip_serializing_if = "Option::is_none")]
    pub t3: Option<f64>,
    #[serde(rename = "T4", skip_serializing_if = "Option::is_none")]
    pub t4: Option<f64>,
    /// Explicit lower bound, when configured and valid at this loss.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem_bound: Option<f64>,
    /// Numeric warnings accumulated while computing the row; absent from
    /// the CSV schema, carried so callers can surface degraded rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Per-exponent sweep digest.
#[derive(Debug, Clone, Serialize)]
pub struct BetaSummary {
    pub beta: f64,
    pub regime: String,
    pub tau_a: f64,
    pub points: usize,
    pub warnings: usize,
    /// Smallest finite dissipation value over the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_e: Option<f64>,
    /// Largest finite dissipation value over the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_e: Option<f64>,
    /// Ratio of each loss decade's dissipation envelope to the previous
    /// (larger-loss) decade's, ordered from large loss to small. Growth
    /// factors above one as the loss shrinks are the blow-up signature;
    /// factors below one indicate collapse.
    pub decade_growth: Vec<f64>,
}

/// Whole-sweep digest.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub per_beta: Vec<BetaSummary>,
    pub total_warnings: usize,
}

impl SweepSummary {
    fn build(prepared: &[PreparedBeta], rows: &[SweepRow]) -> Self {
        let per_beta = prepared
            .iter()
            .map(|p| {
                let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.beta == p.beta).collect();
                let warnings = mine.iter().filter(|r| r.warning.is_some()).count();
                let finite: Vec<(f64, f64)> =
                    mine.iter().filter_map(|r| r.e_xi.map(|e| (r.delta, e))).collect();
                let min_e = finite
                    .iter()
                    .map(|&(_, e)| e)
                    .min_by(f64::total_cmp);
                let max_e = finite
                    .iter()
                    .map(|&(_, e)| e)
                    .max_by(f64::total_cmp);
                // Envelope per loss decade, keyed by floor(-log10 delta).
                let mut env: BTreeMap<i64, f64> = BTreeMap::new();
                for &(delta, e) in &finite {
                    let key = (-delta.log10() + 1e-9).floor() as i64;
                    let slot = env.entry(key).or_insert(f64::NEG_INFINITY);
                    *slot = slot.max(e);
                }
                let keyed: Vec<(i64, f64)> = env.into_iter().collect();
                let decade_growth = keyed
                    .windows(2)
                    .filter(|w| w[1].0 == w[0].0 + 1)
                    .map(|w| w[1].1 / w[0].1)
                    .collect();
                BetaSummary {
                    beta: p.beta,
                    regime: p.regime.clone(),
                    tau_a: p.tau_a,
                    points: mine.len(),
                    warnings,
                    min_e,
                    max_e,
                    decade_growth,
                }
            })
            .collect();
        let total_warnings = rows.iter().filter(|r| r.warning.is_some()).count();
        Self {
            per_beta,
            total_warnings,
        }
    }

    /// Deterministic human-readable digest, one line per exponent.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for b in &self.per_beta {
            let _ = write!(
                out,
                "beta {:.6e}: regime {}, critical depth {:.6e}, {} points, {} warnings",
                b.beta, b.regime, b.tau_a, b.points, b.warnings
            );
            if let (Some(lo), Some(hi)) = (b.min_e, b.max_e) {
                let _ = write!(out, ", E in [{lo:.6e}, {hi:.6e}]");
            }
            if !b.decade_growth.is_empty() {
                let factors: Vec<String> =
                    b.decade_growth.iter().map(|g| format!("{g:.3e}")).collect();
                let _ = write!(out, ", decade growth {}", factors.join(" "));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "total warnings: {}", self.total_warnings);
        out
    }
}

/// A computed sweep: rows plus a digest.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

struct PreparedBeta {
    beta: f64,
    slab: SlabConfig,
    solver: DissipationSolver,
    tau_a: f64,
    regime: String,
    rel_tol: f64,
    /// `(witness constant, witness depth)` when the theorem column is on.
    theorem: Option<(f64, f64)>,
}

fn prepare_beta(config: &RunConfig, source: &Source, beta: f64) -> Result<PreparedBeta> {
    let slab = slab_for_beta(&config.slab, source, beta)?;
    let tau_a = slab.tau() * slab.a;
    let d_star = config
        .sweep
        .d_star
        .unwrap_or_else(|| default_witness_depth(&slab, source));
    let regime = classify(&slab, source, d_star, &ClassifyProbe::default())?
        .regime
        .as_str()
        .to_string();
    let theorem = config
        .theorem
        .as_ref()
        .map(|th| (th.witness, th.d_star.unwrap_or(d_star)));
    let solver = DissipationSolver::new(slab.clone(), source.clone())?;
    Ok(PreparedBeta {
        beta,
        slab,
        solver,
        tau_a,
        regime,
        rel_tol: config.tolerances.rel_tol,
        theorem,
    })
}

fn compute_row(prep: &PreparedBeta, delta: f64) -> SweepRow {
    let mut warnings: Vec<String> = Vec::new();
    let opts = DissipationOptions {
        rel_tol: prep.rel_tol,
        ..DissipationOptions::default()
    };
    // Rows stay internally sequential: parallelism distributes whole rows,
    // so worker counts cannot influence any row's arithmetic.
    let (mut e_xi, mut error_estimate) = (None, None);
    match prep.solver.evaluate(delta, &opts, ExecMode::Sequential) {
        Ok(r) => {
            error_estimate = Some(r.rel_error);
            if r.value.is_finite() && r.value > 0.0 {
                e_xi = Some(r.value);
            } else {
                warnings.push(format!(
                    "dissipation exceeds f64 range; ln E = {:.6e}",
                    r.ln_value
                ));
            }
            if !r.converged {
                warnings.push(format!(
                    "dissipation integral reached {:.3e} relative error, requested {:.3e}",
                    r.rel_error, prep.rel_tol
                ));
            }
        }
        Err(e) => warnings.push(format!("dissipation evaluation failed: {e}")),
    }
    let k0 = prep.slab.k0(delta).ok();
    let mut terms = [None; 4];
    match upper_bound_chain(&prep.slab, &prep.solver.source, delta, ExecMode::Sequential) {
        Ok(chain) => {
            for (slot, term) in terms.iter_mut().zip(chain.terms.iter()) {
                *slot = Some(term.value);
            }
        }
        // Geometry or loss outside the bound's hypotheses: the columns
        // stay empty, which is their documented meaning.
        Err(Error::ChainNotApplicable(_))
        | Err(Error::NotApplicable(_))
        | Err(Error::DeltaTooLarge { .. }) => {}
        Err(e) => warnings.push(format!("upper-bound chain failed: {e}")),
    }
    let theorem_bound = prep.theorem.and_then(|(witness, d_star)| {
        match theorem_lower_bound(&prep.slab, &prep.solver.source, d_star, witness, delta) {
            Ok(tb) if tb.valid && tb.rhs.is_finite() => Some(tb.rhs),
            _ => None,
        }
    });
    SweepRow {
        beta: prep.beta,
        delta,
        e_xi,
        error_estimate,
        k0,
        tau_a: prep.tau_a,
        regime: prep.regime.clone(),
        t1: terms[0],
        t2: terms[1],
        t3: terms[2],
        t4: terms[3],
        theorem_bound,
        warning: (!warnings.is_empty()).then(|| warnings.join("; ")),
    }
}

/// Runs the configured sweep. `workers` caps the worker-thread count
/// (`None` uses the default pool); results are identical for every count.
pub fn run_sweep(config: &RunConfig, workers: Option<usize>) -> Result<SweepOutcome> {
    config.validate()?;
    let source = build_source(&config.source)?;
    let mut betas = config.sweep.betas.clone();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    let deltas = delta_grid(&config.sweep)?;
    let mut prepared = Vec::with_capacity(betas.len());
    for &beta in &betas {
        prepared.push(prepare_beta(config, &source, beta)?);
    }
    let mut points = Vec::with_capacity(prepared.len() * deltas.len());
    for i in 0..prepared.len() {
        for &d in &deltas {
            points.push((i, d));
        }
    }
    let rows = with_worker_count(workers, || {
        par_map(ExecMode::Parallel, &points, |&(i, d)| {
            compute_row(&prepared[i], d)
        })
    });
    let summary = SweepSummary::build(&prepared, &rows);
    Ok(SweepOutcome { rows, summary })
}

/// Computes a single row, defaulting to the first configured exponent and
/// the largest configured loss when overrides are absent.
pub fn run_eval(config: &RunConfig, beta: Option<f64>, delta: Option<f64>) -> Result<SweepRow> {
    config.validate()?;
    let source = build_source(&config.source)?;
    let beta = match beta {
        Some(b) => b,
        None => config.sweep.betas[0],
    };
    let delta = match delta {
        Some(d) => {
            if !(d.is_finite() && d > 0.0 && d < 1.0) {
                return Err(Error::Config(format!(
                    "delta must lie in (0, 1), got {d:e}"
                )));
            }
            d
        }
        None => *delta_grid(&config.sweep)?.first().ok_or_else(|| {
            Error::Config("the configured delta grid is empty; pass an explicit delta".into())
        })?,
    };
    let prep = prepare_beta(config, &source, beta)?;
    Ok(compute_row(&prep, delta))
}

fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// Renders rows as CSV: UTF-8, header row, `.` decimal separator, 17
/// significant digits, empty fields for inapplicable quantities.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(CSV_HEADER.len() + 1 + rows.len() * 240);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            format_f64(r.beta),
            format_f64(r.delta),
            format_opt(r.e_xi),
            format_opt(r.error_estimate),
            format_opt(r.k0),
            format_f64(r.tau_a),
            r.regime,
            format_opt(r.t1),
            format_opt(r.t2),
            format_opt(r.t3),
            format_opt(r.t4),
            format_opt(r.theorem_bound),
        );
    }
    out
}

/// Renders rows as pretty-printed JSON (an array of row objects using the
/// CSV column names; inapplicable fields are omitted).
pub fn rows_to_json(rows: &[SweepRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

/// Renders rows in the requested dataset format (`"csv"` or `"json"`).
pub fn render_dataset(rows: &[SweepRow], format: &str) -> Result<String> {
    match format {
        "csv" => Ok(rows_to_csv(rows)),
        "json" => Ok(rows_to_json(rows)),
        other => Err(Error::Config(format!(
            "unknown output format {other:?}; expected \"csv\" or \"json\""
        ))),
    }
}

/// Oracle-suite mutation switch; see the `[verify]` section docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationMode {
    /// Ship the closed forms as implemented.
    None,
    /// Flip the sign of every closed-form transform before comparing, to
    /// prove the oracle comparisons can fail.
    FlipClosedFormSign,
}

/// Parses the `verify.mutate` knob.
pub fn parse_mutation(text: &str) -> Result<MutationMode> {
    match text {
        "none" => Ok(MutationMode::None),
        "flip-closed-form-sign" => Ok(MutationMode::FlipClosedFormSign),
        other => Err(Error::Config(format!(
            "unknown verify.mutate {other:?}; expected \"none\" or \"flip-closed-form-sign\""
        ))),
    }
}

/// One verified inequality: `measured` against `threshold` in the sense of
/// `orientation` (`"at_most"`, `"at_least"`, or `"greater_than"`).
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
    pub orientation: &'static str,
}

fn check_at_most(name: &str, measured: f64, threshold: f64) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        pass: measured.is_finite() && measured <= threshold,
        measured,
        threshold,
        orientation: "at_most",
    }
}

fn check_at_least(name: &str, measured: f64, threshold: f64) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        pass: measured >= threshold,
        measured,
        threshold,
        orientation: "at_least",
    }
}

fn check_greater(name: &str, measured: f64, threshold: f64) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        pass: measured > threshold,
        measured,
        threshold,
        orientation: "greater_than",
    }
}

/// One suite's outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: &'static str,
    pub pass: bool,
    pub checks: Vec<CheckOutcome>,
}

fn finish_suite(suite: &'static str, checks: Vec<CheckOutcome>) -> SuiteOutcome {
    SuiteOutcome {
        suite,
        pass: checks.iter().all(|c| c.pass),
        checks,
    }
}

/// Deterministic verification report; byte-identical across reruns and
/// worker counts for a fixed configuration.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub suites: Vec<SuiteOutcome>,
}

impl VerifyReport {
    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Terminal-friendly digest: one line per suite, one per failing check.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let _ = writeln!(
                out,
                "suite {}: {} ({} checks)",
                s.suite,
                if s.pass { "pass" } else { "FAIL" },
                s.checks.len()
            );
            for c in s.checks.iter().filter(|c| !c.pass) {
                let _ = writeln!(
                    out,
                    "  {}: FAIL measured {:.6e} vs {} {:.6e}",
                    c.name, c.measured, c.orientation, c.threshold
                );
            }
        }
        let _ = writeln!(out, "verify: {}", if self.pass { "pass" } else { "FAIL" });
        out
    }
}

/// Runs the configured verification suites.
pub fn run_verify(config: &RunConfig, workers: Option<usize>) -> Result<VerifyReport> {
    config.validate()?;
    let mutation = parse_mutation(&config.verify.mutate)?;
    let mut names: Vec<&str> = Vec::new();
    for s in &config.verify.suites {
        if !names.contains(&s.as_str()) {
            names.push(s.as_str());
        }
    }
    with_worker_count(workers, || {
        let mut suites = Vec::with_capacity(names.len());
        for name in names {
            let suite = match name {
                "oracles" => suite_oracles(mutation)?,
                "lemmas" => suite_lemmas(config)?,
                "pde" => suite_pde(config)?,
                "plancherel" => suite_plancherel(config)?,
                "sandwich" => suite_sandwich()?,
                _ => unreachable!("validated above"),
            };
            suites.push(suite);
        }
        Ok(VerifyReport {
            pass: suites.iter().all(|s| s.pass),
            suites,
        })
    })
}

// ---------------------------------------------------------------------------
// Oracle suite: closed-form transforms against brute-force quadrature.
// ---------------------------------------------------------------------------

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence; standard construction, no tables.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, dp) = legendre_with_derivative(n, x);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for m in 2..=n {
        let mf = m as f64;
        let p2 = ((2.0 * mf - 1.0) * x * p1 - (mf - 1.0) * p0) / mf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Panel points `(node, weight)` covering `[lo, hi]` with `panels` equal
/// panels of the given base rule.
fn panel_points(lo: f64, hi: f64, panels: usize, base: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    let h = (hi - lo) / panels as f64;
    let mut pts = Vec::with_capacity(panels * base.0.len());
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for (t, w) in base.0.iter().zip(&base.1) {
            pts.push((mid + 0.5 * h * t, 0.5 * h * w));
        }
    }
    pts
}

fn rel_c(value: Complex64, reference: Complex64) -> f64 {
    (value - reference).norm() / reference.norm()
}

/// Line-transform oracle: panel quadrature of `rho(x, y) e^{-i k y}` in
/// `y`, splitting panels at the sign change so every panel is smooth.
fn oracle_line_transform(source: &Source, k: f64, x: f64, base: &(Vec<f64>, Vec<f64>)) -> Complex64 {
    let sup = source.support();
    let cy = 0.5 * (sup.y_min + sup.y_max);
    let mut acc = Complex64::new(0.0, 0.0);
    for (lo, hi) in [(sup.y_min, cy), (cy, sup.y_max)] {
        for (y, w) in panel_points(lo, hi, 64, base) {
            acc += source.evaluate(x, y) * w * Complex64::from_polar(1.0, -k * y);
        }
    }
    acc
}

/// Area-transform oracle: tensor panel quadrature of
/// `rho(x, y) e^{-k (x - d0)} e^{-i k y}` over the support, evaluating the
/// density pointwise. The per-axis exponential factors are precomputed;
/// the density is still sampled at every node pair.
fn oracle_area_transform(source: &Source, k: f64, base: &(Vec<f64>, Vec<f64>)) -> Complex64 {
    let sup = source.support();
    let d0 = source.near_edge();
    let cy = 0.5 * (sup.y_min + sup.y_max);
    let xs = panel_points(sup.x_min, sup.x_max, 64, base);
    let mut ys = panel_points(sup.y_min, cy, 64, base);
    ys.extend(panel_points(cy, sup.y_max, 64, base));
    let ex: Vec<f64> = xs.iter().map(|&(x, w)| w * (-k * (x - d0)).exp()).collect();
    let ey: Vec<Complex64> = ys
        .iter()
        .map(|&(y, w)| Complex64::from_polar(w, -k * y))
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (&(x, _), &fx) in xs.iter().zip(&ex) {
        let mut row = Complex64::new(0.0, 0.0);
        for (&(y, _), &fy) in ys.iter().zip(&ey) {
            row += source.evaluate(x, y) * fy;
        }
        acc += row * fx;
    }
    acc
}

fn neumaier_add(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

/// Fixed-grid oracle for the circle's area transform: one million midpoint
/// strips in `y`, each with the exact elementary antiderivative of the
/// `x` factor across the chord, summed with Neumaier compensation.
fn oracle_circle_strips(source: &Source, k: f64) -> Complex64 {
    let sup = source.support();
    let cx = 0.5 * (sup.x_min + sup.x_max);
    let cy = 0.5 * (sup.y_min + sup.y_max);
    let r = 0.5 * (sup.x_max - sup.x_min);
    let d0 = source.near_edge();
    let n = 1_000_000usize;
    let h = (sup.y_max - sup.y_min) / n as f64;
    let (mut re, mut re_c, mut im, mut im_c) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        let y = sup.y_min + (j as f64 + 0.5) * h;
        let w_sq = r * r - (y - cy) * (y - cy);
        if w_sq <= 0.0 {
            continue;
        }
        let w = w_sq.sqrt();
        // Exact chord integral of e^{-k (x - d0)} from cx - w to cx + w.
        let x_int = ((-k * (cx - w - d0)).exp() - (-k * (cx + w - d0)).exp()) / k;
        // The density is constant along the chord's midline; sample it
        // there rather than reusing any closed form.
        let term = source.evaluate(cx, y) * x_int * h * Complex64::from_polar(1.0, -k * y);
        neumaier_add(&mut re, &mut re_c, term.re);
        neumaier_add(&mut im, &mut im_c, term.im);
    }
    Complex64::new(re + re_c, im + im_c)
}

fn suite_oracles(mutation: MutationMode) -> Result<SuiteOutcome> {
    let flip = match mutation {
        MutationMode::None => 1.0,
        MutationMode::FlipClosedFormSign => -1.0,
    };
    let base = gauss_legendre(16);
    let ks = logspace(0.05, 50.0, 20);
    let rect = Source::rectangle(1.0, 6.0, 6.0, 1.0, 1.0)?;
    let circle = Source::circle(1.0, 6.0, 6.0, 1.0)?;

    // Line transform at three interior depths of the rectangle.
    let stations = [5.4, 6.0, 6.6];
    let worst_line = ks
        .iter()
        .map(|&k| {
            stations
                .iter()
                .map(|&x| rel_c(rect.rho_hat(k, x) * flip, oracle_line_transform(&rect, k, x, &base)))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);

    let worst_rect = ks
        .iter()
        .map(|&k| rel_c(rect.transform_i_shifted(k) * flip, oracle_area_transform(&rect, k, &base)))
        .fold(0.0, f64::max);

    let circle_errs = par_map(ExecMode::Parallel, &ks, |&k| {
        rel_c(circle.transform_i_shifted(k) * flip, oracle_circle_strips(&circle, k))
    });
    let worst_circle = circle_errs.into_iter().fold(0.0, f64::max);

    Ok(finish_suite(
        "oracles",
        vec![
            check_at_most("rectangle-line-transform-vs-quadrature", worst_line, 1e-8),
            check_at_most("rectangle-area-transform-vs-quadrature", worst_rect, 1e-8),
            check_at_most("circle-area-transform-vs-fixed-grid", worst_circle, 1e-7),
        ],
    ))
}

// ---------------------------------------------------------------------------
// Lemma suite: delegated to the bounds module's seeded sampler.
// ---------------------------------------------------------------------------

fn suite_lemmas(config: &RunConfig) -> Result<SuiteOutcome> {
    let source = build_source(&config.source)?;
    let mut betas = config.sweep.betas.clone();
    betas.sort_by(f64::total_cmp);
    let base = slab_for_beta(&config.slab, &source, betas[0])?;
    let plan = LemmaPlan {
        seed: config.verify.seed,
        samples_per_combo: config.verify.samples,
        ..LemmaPlan::default()
    };
    let report = lemma_suite(&base, &source, &plan)?;
    let checks = report
        .checks
        .iter()
        .map(|c| CheckOutcome {
            name: c.name.to_string(),
            pass: c.pass,
            measured: c.min_margin,
            threshold: -MARGIN_SLACK,
            orientation: "at_least",
        })
        .collect();
    Ok(finish_suite("lemmas", checks))
}

// ---------------------------------------------------------------------------
// PDE suite: interface continuity and the transform-domain equation.
// ---------------------------------------------------------------------------

fn rel_scaled(p: ScaledComplex, q: ScaledComplex) -> f64 {
    let scale = p.log_magnitude().max(q.log_magnitude());
    if scale == f64::NEG_INFINITY {
        return 0.0;
    }
    ((p - q).log_magnitude() - scale).exp()
}

fn suite_pde(config: &RunConfig) -> Result<SuiteOutcome> {
    let source = build_source(&config.source)?;
    let mut betas = config.sweep.betas.clone();
    betas.sort_by(f64::total_cmp);
    let slab = slab_for_beta(&config.slab, &source, betas[0])?;
    let solver = PotentialSolver::new(slab.clone(), source.clone())?;
    let a = slab.a;
    let (d0, d1) = (source.near_edge(), source.far_edge());
    let sup = source.support();

    // Depth windows where the transform is smooth in x: between the slab
    // and the source, beyond the source, and (for the closed-form shapes,
    // whose profiles are smooth strictly inside) across the support.
    let mut regions = vec![(a, d0), (d1, d1 + (d1 - d0).max(1.0))];
    if !matches!(source, Source::Grid(_)) {
        regions.push((sup.x_min, sup.x_max));
    }

    let ceiling = delta_ceiling(&slab).min(1e-2);
    let floor = 1e-9_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.verify.seed ^ 0x50de_7e57);
    let (mut worst_value, mut worst_flux, mut worst_resid) = (0.0f64, 0.0f64, 0.0f64);

    for _ in 0..100 {
        let delta = (rng.gen_range(floor.ln()..=ceiling.ln())).exp();
        let kmag = (rng.gen_range(0.05f64.ln()..=20.0f64.ln())).exp();
        let k = if rng.gen_bool(0.5) { kmag } else { -kmag };
        let scalars = slab.layer_scalars(delta)?;

        // Continuity of the value and the permittivity-weighted derivative
        // across both interfaces.
        let cladding = solver.potential_hat_with_dx(k, 0.0, delta)?;
        let slab_lo = solver.potential_hat_with_dx(k, 1e-300, delta)?;
        let slab_hi = solver.potential_hat_with_dx(k, a, delta)?;
        let medium = solver.potential_hat_with_dx(k, a.next_up(), delta)?;
        let eps_c = ScaledComplex::from_complex(scalars.eps_cladding);
        let eps_s = ScaledComplex::from_complex(scalars.eps_slab);
        worst_value = worst_value
            .max(rel_scaled(cladding.value, slab_lo.value))
            .max(rel_scaled(slab_hi.value, medium.value));
        worst_flux = worst_flux
            .max(rel_scaled(eps_c * cladding.dx, eps_s * slab_lo.dx))
            .max(rel_scaled(eps_s * slab_hi.dx, medium.dx));

        // Central-difference residual of V'' - k^2 V = -rho_hat in the
        // medium. The step balances O(h^2 k^2) truncation against O(eps/h^2)
        // rounding; both sit far below the tolerance at these wavenumbers.
        let (lo, hi) = regions[rng.gen_range(0..regions.len())];
        let width = hi - lo;
        let h = (5.6e-4 / kmag.max(1.0)).min(width / 16.0);
        let x = lo + rng.gen_range(0.15..=0.85) * width;
        let v = solver.potential_hat_with_dx(k, x, delta)?.value.to_complex();
        let vp = solver
            .potential_hat_with_dx(k, x + h, delta)?
            .value
            .to_complex();
        let vm = solver
            .potential_hat_with_dx(k, x - h, delta)?
            .value
            .to_complex();
        let fd = (vp - 2.0 * v + vm) / (h * h);
        let rho = source.rho_hat(k, x);
        let residual = fd - k * k * v + rho;
        let scale = fd.norm().max(k * k * v.norm()).max(rho.norm());
        worst_resid = worst_resid.max(residual.norm() / scale);
    }

    Ok(finish_suite(
        "pde",
        vec![
            check_at_most("interface-value-continuity", worst_value, 1e-9),
            check_at_most("interface-flux-continuity", worst_flux, 1e-9),
            check_at_most("medium-equation-residual", worst_resid, 1e-6),
        ],
    ))
}

// ---------------------------------------------------------------------------
// Plancherel suite: real-space line energy against the transform identity,
// and the dissipation integral against a direct strip assembly.
// ---------------------------------------------------------------------------

/// Solves a 3x3 linear system by Gaussian elimination with partial
/// pivoting; used for the least-squares tail fit below.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("nonempty");
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for c in col..3 {
                m[row][c] -= f * m[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for c in row + 1..3 {
            s -= m[row][c] * x[c];
        }
        x[row] = s / m[row][row];
    }
    x
}

fn suite_plancherel(config: &RunConfig) -> Result<SuiteOutcome> {
    let source = build_source(&config.source)?;
    let mut betas = config.sweep.betas.clone();
    betas.sort_by(f64::total_cmp);
    let slab = slab_for_beta(&config.slab, &source, betas[0])?;
    let solver = PotentialSolver::new(slab.clone(), source.clone())?;
    let delta = (0.5 * delta_ceiling(&slab)).min(1e-2);
    let x = -4.0 * slab.a;

    // Transform side of the identity.
    let row = solver.row_energy(x, delta, 1e-8)?;

    // Real side: adaptive window integral plus an asymptotic completion.
    // The potential's line profile decays like 1/y (its transform has a
    // conjugate-symmetry jump at k = 0), so truncation alone converges far
    // too slowly; instead the tail of |V|^2 is fit to its power expansion
    // c2/t^2 + c3/t^3 + c4/t^4 from samples inside the reachable range and
    // integrated in closed form.
    let sup = source.support();
    let cy = 0.5 * (sup.y_min + sup.y_max);
    let depth = source.far_edge() + 4.0 * slab.a + 0.5 * (sup.y_max - sup.y_min);
    let window = 15.0 * depth;
    // Anchor an absolute error floor to the line's peak scale: the
    // potential vanishes on symmetry axes of the source, where a pure
    // relative target can never converge.
    let span = (sup.y_max - sup.y_min).max(1.0);
    let vscale = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&m| {
            solver
                .reconstruct(x, cy + m * span, delta, 1e-6)
                .map(|v| v.norm())
                .unwrap_or(f64::NAN)
        })
        .fold(f64::NAN, f64::max);
    let floor = 1e-6 * vscale;
    let vsq = |y: f64| {
        solver
            .reconstruct_with_floor(x, y, delta, 1e-6, floor)
            .map(|v| v.norm_sqr())
            .unwrap_or(f64::NAN)
    };
    let opts = QuadOptions {
        rel_tol: 1e-6,
        abs_tol: 0.0,
        max_evals: 1 << 15,
        initial_panels: 48,
    };
    let win = integrate(vsq, cy - window, cy + window, &opts, ExecMode::Parallel);
    let window_value = if win.converged { win.value } else { f64::NAN };
    let tail = |side: f64| -> f64 {
        // Least squares for g(u) = t^2 |V|^2 = c2 + c3 u + c4 u^2 with
        // u = window/t over t in [window, 3 window]; then
        // int_window^inf |V|^2 dt = (c2 + c3/2 + c4/3) / window.
        let mut m = [[0.0; 3]; 3];
        let mut b = [0.0; 3];
        for mult in [1.0, 1.2, 1.5, 1.9, 2.4, 3.0] {
            let t = mult * window;
            let g = vsq(cy + side * t) * t * t;
            let u = 1.0 / mult;
            let basis = [1.0, u, u * u];
            for i in 0..3 {
                b[i] += basis[i] * g;
                for j in 0..3 {
                    m[i][j] += basis[i] * basis[j];
                }
            }
        }
        let c = solve3(m, b);
        (c[0] + c[1] / 2.0 + c[2] / 3.0) / window
    };
    let real_side = window_value + tail(1.0) + tail(-1.0);
    let plancherel_rel = ((real_side - row.potential_sq) / row.potential_sq).abs();

    // Dissipation against its defining strip assembly: E = delta times the
    // gradient energy of the strip, rebuilt from per-depth line energies.
    let diss = DissipationSolver::new(slab.clone(), source.clone())?;
    let e = diss.evaluate(delta, &DissipationOptions::default(), ExecMode::Parallel)?;
    let strip_opts = QuadOptions {
        rel_tol: 1e-6,
        abs_tol: 0.0,
        max_evals: 1 << 13,
        initial_panels: 24,
    };
    let strip = integrate(
        |xs| {
            solver
                .row_energy(xs, delta, 1e-8)
                .map(|r| r.gradient_sq)
                .unwrap_or(f64::NAN)
        },
        slab.a - slab.xi,
        slab.a,
        &strip_opts,
        ExecMode::Parallel,
    );
    let strip_value = if strip.converged {
        strip.value
    } else {
        f64::NAN
    };
    let assembly_rel = ((delta * strip_value - e.value) / e.value).abs();

    Ok(finish_suite(
        "plancherel",
        vec![
            check_at_most("row-energy-plancherel", plancherel_rel, 1e-4),
            check_at_most("dissipation-strip-assembly", assembly_rel, 1e-3),
        ],
    ))
}

// ---------------------------------------------------------------------------
// Sandwich suite: blow-up monotonicity and upper-bound domination on fixed
// reference geometries, one on each side of the critical depth.
// ---------------------------------------------------------------------------

fn descending_log_grid(hi: f64, lo: f64, per_decade: usize) -> Vec<f64> {
    let n = (((hi / lo).log10() * per_decade as f64).round() as usize).max(1) + 1;
    let mut g = logspace(lo, hi, n.max(2));
    g.reverse();
    g
}

/// Largest finite envelope of `lns` per loss decade, clamped to the keys
/// `kmin..=kmax` (the exact-boundary smallest loss folds into the last
/// window). Returns one value per key, negative infinity where a window
/// saw nothing finite.
fn decade_envelopes(deltas: &[f64], lns: &[f64], kmin: i64, kmax: i64) -> Vec<f64> {
    let mut env = vec![f64::NEG_INFINITY; (kmax - kmin + 1) as usize];
    for (&d, &ln) in deltas.iter().zip(lns) {
        if !ln.is_finite() {
            continue;
        }
        let key = ((-d.log10() + 1e-9).floor() as i64).clamp(kmin, kmax);
        let slot = &mut env[(key - kmin) as usize];
        *slot = slot.max(ln);
    }
    env
}

fn min_consecutive_increase(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn suite_sandwich() -> Result<SuiteOutcome> {
    let source = Source::rectangle(1.0, 6.0, 6.0, 1.0, 1.0)?;
    let opts = DissipationOptions {
        rel_tol: 1e-7,
        ..DissipationOptions::default()
    };
    let ln_e = |diss: &DissipationSolver, delta: f64| -> f64 {
        match diss.evaluate(delta, &opts, ExecMode::Sequential) {
            Ok(r) if r.converged => r.ln_value,
            _ => f64::NAN,
        }
    };
    let mut checks = Vec::new();

    // Critical geometry: the influence boundary sits on the far edge, so
    // the whole source drives resonances and the dissipation must grow as
    // the loss shrinks.
    {
        let beta = 0.8;
        let tau = (beta + 2.0) / (beta + 1.0);
        let a = source.far_edge() / tau;
        let slab = SlabConfig::new(a, 1.0, beta, 0.25 * a)?;
        let diss = DissipationSolver::new(slab.clone(), source.clone())?;
        let deltas = descending_log_grid(1e-4, 1e-14, 25);
        let lns = par_map(ExecMode::Parallel, &deltas, |&d| ln_e(&diss, d));
        let env = decade_envelopes(&deltas, &lns, 4, 13);
        checks.push(check_greater(
            "decade-envelopes-strictly-increase",
            min_consecutive_increase(&env),
            0.0,
        ));

        let seq = blowup_sequence(&slab, &source, 6.0, 2..=10)?;
        checks.push(check_at_least(
            "resonant-sequence-complete",
            seq.points.len() as f64,
            9.0,
        ));
        let seq_deltas: Vec<f64> = seq.points.iter().map(|p| p.delta_j).collect();
        let seq_lns = par_map(ExecMode::Parallel, &seq_deltas, |&d| ln_e(&diss, d));
        checks.push(check_greater(
            "resonant-sequence-dissipation-increases",
            min_consecutive_increase(&seq_lns),
            0.0,
        ));
    }

    // Subcritical geometry: the influence boundary sits on the near edge,
    // so the four-term bound applies, dominates the measured dissipation,
    // and forces collapse as the loss shrinks.
    {
        let beta = 0.5;
        let tau = (beta + 2.0) / (beta + 1.0);
        let a = source.near_edge() / tau;
        let slab = SlabConfig::new(a, 1.0, beta, 0.25 * a)?;
        let diss = DissipationSolver::new(slab.clone(), source.clone())?;
        let deltas = descending_log_grid(1e-4, 1e-12, 25);
        let pairs = par_map(ExecMode::Parallel, &deltas, |&d| {
            let ln = ln_e(&diss, d);
            let margin = match upper_bound_chain(&slab, &source, d, ExecMode::Sequential) {
                Ok(chain) => chain.ln_total - ln,
                Err(_) => f64::NAN,
            };
            (ln, margin)
        });
        let min_margin = pairs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        checks.push(check_at_least("chain-dominates-dissipation", min_margin, 0.0));
        let collapse = (pairs.last().expect("nonempty grid").0
            - pairs.first().expect("nonempty grid").0)
            .exp();
        checks.push(check_at_most(
            "small-loss-dissipation-collapses",
            collapse,
            1e-2,
        ));
    }

    Ok(finish_suite("sandwich", checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_config() -> RunConfig {
        RunConfig {
            slab: SlabSection {
                lambda: 1.0,
                a: Some(3.0),
                a_rule: None,
                xi_over_a: 0.25,
            },
            source: SourceSection {
                kind: "rectangle".to_string(),
                q: 1.0,
                center_x: Some(6.0),
                center_y: Some(6.0),
                half_width: Some(1.0),
                lobe_height: Some(1.0),
                radius: None,
                grid_file: None,
            },
            sweep: SweepSection {
                betas: vec![0.5, 0.2],
                deltas: Some(vec![1e-3, 1e-2]),
                delta_start: None,
                delta_stop: None,
                points_per_decade: DEFAULT_POINTS_PER_DECADE,
                d_star: None,
            },
            output: OutputSection::default(),
            tolerances: ToleranceSection { rel_tol: 1e-7 },
            theorem: None,
            verify: VerifySection::default(),
        }
    }

    #[test]
    fn presets_round_trip_through_toml() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_toml();
            let back = RunConfig::from_toml(&text).unwrap();
            assert_eq!(cfg, back, "preset {name} must round-trip");
        }
        assert!(preset("fig4").is_err());
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let text = r#"
            [slab]
            lambda = 1.0
            a = 3.0

            [source]
            kind = "rectangle"
            center_x = 6.0
            center_y = 6.0
            half_width = 1.0
            lobe_height = 1.0

            [sweep]
            betas = [0.5]
            deltas = [1e-3]
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.slab.xi_over_a, 0.25);
        assert_eq!(cfg.source.q, 1.0);
        assert_eq!(cfg.sweep.points_per_decade, DEFAULT_POINTS_PER_DECADE);
        assert_eq!(cfg.output.format, "csv");
        assert_eq!(cfg.tolerances.rel_tol, 1e-9);
        assert_eq!(cfg.verify.suites.len(), SUITE_NAMES.len());
        assert_eq!(cfg.verify.mutate, "none");
        cfg.validate().unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"
            [slab]
            lambda = 1.0
            a = 3.0
            thickness = 2.0

            [source]
            kind = "rectangle"

            [sweep]
            betas = [0.5]
            deltas = [1e-3]
        "#;
        assert!(matches!(
            RunConfig::from_toml(text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validation_rejects_inconsistent_sections() {
        let mut c = small_config();
        c.sweep.betas.clear();
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        let mut c = small_config();
        c.output.format = "xml".to_string();
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        let mut c = small_config();
        c.sweep.d_star = Some(2.0);
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        let mut c = small_config();
        c.verify.mutate = "scramble".to_string();
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        let mut c = small_config();
        c.slab.a_rule = Some("far_edge_over_tau".to_string());
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        let mut c = small_config();
        c.source.kind = "circle".to_string();
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        // A slab reaching past the source's near edge is geometry the
        // solver does not model.
        let mut c = small_config();
        c.slab.a = Some(5.5);
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        // Infeasible loss-model pair: negative amplitude below exponent 1.
        let mut c = small_config();
        c.slab.lambda = -1.0;
        assert!(matches!(c.validate(), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn delta_grid_orders_and_pins_endpoints() {
        let mut s = small_config().sweep;
        s.deltas = None;
        s.delta_start = Some(1e-4);
        s.delta_stop = Some(1e-6);
        s.points_per_decade = 25;
        let grid = delta_grid(&s).unwrap();
        assert_eq!(grid.len(), 51);
        assert_eq!(grid[0], 1e-4);
        assert_eq!(*grid.last().unwrap(), 1e-6);
        assert!(grid.windows(2).all(|w| w[0] > w[1]));

        s.delta_stop = Some(1e-4);
        assert_eq!(delta_grid(&s).unwrap(), vec![1e-4]);

        let mut s = small_config().sweep;
        s.deltas = Some(vec![1e-5, 1e-3, 1e-3, 1e-4]);
        assert_eq!(delta_grid(&s).unwrap(), vec![1e-3, 1e-4, 1e-5]);

        s.deltas = Some(vec![]);
        assert!(delta_grid(&s).unwrap().is_empty());

        s.deltas = Some(vec![2.0]);
        assert!(delta_grid(&s).is_err());

        let mut s = small_config().sweep;
        s.delta_start = Some(1e-4);
        assert!(delta_grid(&s).is_err(), "range needs both endpoints");
        s.deltas = Some(vec![1e-3]);
        assert!(delta_grid(&s).is_err(), "list and range are exclusive");
    }

    #[test]
    fn grid_files_parse_scale_and_reject() {
        let text = "# a tiny dipole\n2 1\n5.0 0.0 0.5 1.0\n 1.0\n-1.0\n";
        let src = parse_grid_source(text, 2.0).unwrap();
        assert_eq!(src.near_edge(), 5.0);
        let Source::Grid(grid) = &src else {
            panic!("expected a grid source");
        };
        assert_eq!(grid.values(), &[2.0, -2.0]);

        assert!(matches!(
            parse_grid_source("2 1\n0 0 1 1\n1.0\n", 1.0),
            Err(Error::SourceData(_))
        ));
        assert!(matches!(
            parse_grid_source("2 1\n0 0 1 1\n1.0 oops\n", 1.0),
            Err(Error::SourceData(_))
        ));
        assert!(matches!(
            parse_grid_source("2 1\n0 0 1 1\n1.0 -0.2\n", 1.0),
            Err(Error::SourceData(_)),
        ));
        assert!(matches!(
            parse_grid_source("1 1\n", 1.0),
            Err(Error::SourceData(_))
        ));
    }

    #[test]
    fn csv_writer_matches_schema_and_leaves_gaps_empty() {
        let row = SweepRow {
            beta: 0.5,
            delta: 1e-3,
            e_xi: Some(2.0),
            error_estimate: Some(1e-10),
            k0: None,
            tau_a: 5.0,
            regime: "indeterminate".to_string(),
            t1: None,
            t2: None,
            t3: None,
            t4: None,
            theorem_bound: None,
            warning: Some("not serialized".to_string()),
        };
        let text = rows_to_csv(&[row]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let data = lines.next().unwrap();
        let fields: Vec<&str> = data.split(',').collect();
        assert_eq!(fields.len(), CSV_HEADER.split(',').count());
        assert_eq!(fields[0], "5.0000000000000000e-1");
        assert_eq!(fields[4], "");
        assert_eq!(fields[6], "indeterminate");
        assert_eq!(fields[11], "");
        assert!(!text.contains("not serialized"));
        assert_eq!(rows_to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn sweep_rows_are_ordered_deterministic_and_worker_independent() {
        let cfg = small_config();
        let first = run_sweep(&cfg, Some(1)).unwrap();
        let second = run_sweep(&cfg, Some(4)).unwrap();
        let csv1 = rows_to_csv(&first.rows);
        let csv2 = rows_to_csv(&second.rows);
        assert_eq!(csv1, csv2, "worker count must not change any byte");

        assert_eq!(first.rows.len(), 4);
        let order: Vec<(f64, f64)> = first.rows.iter().map(|r| (r.beta, r.delta)).collect();
        assert_eq!(
            order,
            vec![(0.2, 1e-2), (0.2, 1e-3), (0.5, 1e-2), (0.5, 1e-3)]
        );
        for row in &first.rows {
            assert!(row.e_xi.unwrap() > 0.0);
            assert!(row.k0.unwrap() > 0.0);
            assert!(row.warning.is_none());
            // d0 = 5 > 1.5 a = 4.5 and xi < a: the chain applies here.
            assert!(row.t1.unwrap() > 0.0);
        }
        let digest = first.summary.render();
        assert!(digest.contains("beta 2.000000e-1"));
        assert!(digest.contains("total warnings: 0"));
    }

    #[test]
    fn eval_row_matches_the_sweep() {
        let cfg = small_config();
        let sweep = run_sweep(&cfg, None).unwrap();
        let row = run_eval(&cfg, Some(0.5), Some(1e-3)).unwrap();
        let from_sweep = sweep
            .rows
            .iter()
            .find(|r| r.beta == 0.5 && r.delta == 1e-3)
            .unwrap();
        assert_eq!(rows_to_csv(&[row]), rows_to_csv(&[from_sweep.clone()]));
    }

    #[test]
    fn empty_delta_list_yields_empty_dataset() {
        let mut cfg = small_config();
        cfg.sweep.deltas = Some(vec![]);
        let out = run_sweep(&cfg, None).unwrap();
        assert!(out.rows.is_empty());
        assert_eq!(rows_to_csv(&out.rows), format!("{CSV_HEADER}\n"));
        assert_eq!(out.summary.per_beta.len(), 2);
        assert_eq!(out.summary.total_warnings, 0);
    }

    #[test]
    fn theorem_column_populates_when_configured() {
        let mut cfg = small_config();
        cfg.slab.a = None;
        cfg.slab.a_rule = Some("far_edge_over_tau".to_string());
        cfg.sweep.betas = vec![0.5];
        cfg.sweep.deltas = Some(vec![1e-8]);
        cfg.theorem = Some(TheoremSection {
            witness: 0.1,
            d_star: Some(6.0),
        });
        let out = run_sweep(&cfg, None).unwrap();
        let bound = out.rows[0].theorem_bound.unwrap();
        assert!(bound > 0.0);
        let e = out.rows[0].e_xi.unwrap();
        assert!(
            bound <= e,
            "lower bound {bound:e} must sit below the measured dissipation {e:e}"
        );
    }

    #[test]
    fn mutation_knob_parses() {
        assert_eq!(parse_mutation("none").unwrap(), MutationMode::None);
        assert_eq!(
            parse_mutation("flip-closed-form-sign").unwrap(),
            MutationMode::FlipClosedFormSign
        );
        assert!(parse_mutation("other").is_err());
    }

    #[test]
    fn gauss_legendre_rule_integrates_polynomials_exactly() {
        let (nodes, weights) = gauss_legendre(16);
        assert_eq!(nodes.len(), 16);
        let total: f64 = weights.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
        // Degree 29 is inside the rule's exactness range (2n - 1 = 31).
        let moment: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * x.powi(28))
            .sum();
        assert_relative_eq!(moment, 2.0 / 29.0, max_relative = 1e-12);
    }

    #[test]
    fn decade_envelopes_fold_boundary_points() {
        let deltas = [1e-4, 3e-5, 1e-5, 3e-6, 1e-6];
        let lns = [1.0, 2.0, 3.0, 4.0, 5.0];
        let env = decade_envelopes(&deltas, &lns, 4, 5);
        // Window 4 owns [1e-5, 1e-4); 1e-5 itself keys to 5; 1e-6 folds in.
        assert_eq!(env, vec![2.0, 5.0]);
        assert_eq!(min_consecutive_increase(&env), 3.0);
    }
}
