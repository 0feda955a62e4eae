//! Run configuration: a flat key-value text format with dotted section names.
//!
//! ```text
//!   # comment
//!   grid.n = 32
//!   grid.box_length = 50.26548245743669
//!   alpha = 1.0
//!   nonlinearity.kind = cubic
//!   forcing.kind = random
//!   forcing.seed = 7
//!   forcing.h1_norm = 0.5
//!   init.kind = random
//!   init.seed = 1
//!   init.energy_norm = 1.0
//!   run.dt = 0.02
//!   run.scheme = etd2-midpoint
//!   run.t_final = 10.0
//!   run.snapshot_spacing = 0.25
//! ```
//!
//! Unknown keys are rejected; every numeric field is validated against the
//! preconditions of the module that consumes it. `to_canonical_string`
//! serializes with sorted keys, and the config hash is FNV-1a over that text,
//! so semantically equal configs hash equally.

use crate::dynamics::{NonlinearitySpec, Scheme, SolverConfig};
use crate::error::{Error, Result};
use crate::experiments::random_band_limited_field;
use crate::spectral::{energy_norm, Grid, SpectralField, StateVector, DEFAULT_BOX_LENGTH};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325_u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[derive(Clone, Debug, PartialEq)]
pub enum NonlinearityConfig {
    Zero,
    Cubic { c3: f64, kappa: f64 },
    Custom {
        c1: f64,
        c3: f64,
        c5: f64,
        kappa: f64,
        l: f64,
        k: f64,
        c: f64,
    },
}

impl NonlinearityConfig {
    pub fn build(&self) -> Result<NonlinearitySpec> {
        match self {
            NonlinearityConfig::Zero => Ok(NonlinearitySpec::zero()),
            NonlinearityConfig::Cubic { c3, kappa } => {
                let mut spec = NonlinearitySpec::cubic_scaled(*c3);
                spec.kappa = *kappa;
                Ok(spec)
            }
            NonlinearityConfig::Custom {
                c1,
                c3,
                c5,
                kappa,
                l,
                k,
                c,
            } => NonlinearitySpec::custom(*c1, *c3, *c5, *kappa, *l, *k, *c),
        }
    }
}

/// A real cosine mode `amplitude·cos(k·x)` placed at ±m.
pub type ModeAmplitude = ([i64; 3], f64);

#[derive(Clone, Debug, PartialEq)]
pub enum FieldSource {
    Zero,
    Modes(Vec<ModeAmplitude>),
    Random {
        seed: u64,
        envelope_r: f64,
        band_max: f64,
    },
}

impl FieldSource {
    /// Materialize on a grid, rescaled to `target_norm` in the given Sobolev
    /// order when requested. The mean is always removed.
    fn build(
        &self,
        grid: &Arc<Grid>,
        target: Option<(f64, f64)>, // (sobolev order, norm)
        stream: u64,
    ) -> Result<SpectralField> {
        let mut field = match self {
            FieldSource::Zero => SpectralField::zeros(grid.clone()),
            FieldSource::Modes(list) => {
                let pairs: Vec<([i64; 3], Complex64)> = list
                    .iter()
                    .map(|&(m, a)| (m, Complex64::new(a / 2.0, 0.0)))
                    .collect();
                SpectralField::from_modes(grid.clone(), &pairs)
            }
            FieldSource::Random {
                seed,
                envelope_r,
                band_max,
            } => {
                let band = if *band_max > 0.0 {
                    *band_max
                } else {
                    (grid.n() / 4) as f64
                };
                random_band_limited_field(grid, *seed, *envelope_r, band, stream)
            }
        };
        field.remove_mean();
        if let Some((order, norm)) = target {
            if norm > 0.0 && !matches!(self, FieldSource::Zero) {
                let current = field.sobolev_norm(order)?;
                if current == 0.0 {
                    return Err(Error::Config(
                        "cannot rescale a zero field to a positive norm".into(),
                    ));
                }
                field.scale(norm / current);
            }
        }
        Ok(field)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrichartzConfig {
    pub count: usize,
    pub horizon: f64,
    pub samples_per_unit: usize,
    pub seed: u64,
    pub envelope_r: f64,
    pub band_max: f64,
    pub bands: Vec<f64>,
}

impl Default for StrichartzConfig {
    fn default() -> Self {
        StrichartzConfig {
            count: 100,
            horizon: 1.0,
            samples_per_unit: 16,
            seed: 2,
            envelope_r: 2.0,
            band_max: 0.0,
            bands: vec![2.0, 4.0, 8.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttractorConfig {
    pub burn_in: f64,
    pub samples: usize,
    pub spacing: f64,
}

impl Default for AttractorConfig {
    fn default() -> Self {
        AttractorConfig {
            burn_in: 12.0,
            samples: 8,
            spacing: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub g_amplitudes: Vec<f64>,
    pub box_lengths: Vec<f64>,
    pub budget: usize,
    pub t_final: f64,
    pub init_norm: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            alphas: vec![1.0],
            kappas: vec![2.0],
            g_amplitudes: vec![0.0],
            box_lengths: vec![DEFAULT_BOX_LENGTH],
            budget: 64,
            t_final: 10.0,
            init_norm: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid_n: usize,
    pub box_length: f64,
    pub alpha: f64,
    pub nonlinearity: NonlinearityConfig,
    pub forcing: FieldSource,
    /// Target Ḣ¹ norm for a random forcing (0 = leave unscaled).
    pub forcing_h1_norm: f64,
    pub init: FieldSource,
    pub init_v: FieldSource,
    /// Target 𝓔 norm of the initial state (0 = leave unscaled).
    pub init_energy_norm: f64,
    pub init_seed: u64,
    pub dt: f64,
    pub scheme: Scheme,
    pub t_final: f64,
    pub snapshot_spacing: f64,
    pub dealias_pad: usize,
    pub quad_refine: bool,
    pub output_dir: Option<PathBuf>,
    pub strichartz: StrichartzConfig,
    pub attractor: AttractorConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid_n: 32,
            box_length: DEFAULT_BOX_LENGTH,
            alpha: 1.0,
            nonlinearity: NonlinearityConfig::Cubic { c3: 1.0, kappa: 2.0 },
            forcing: FieldSource::Zero,
            forcing_h1_norm: 0.0,
            init: FieldSource::Random {
                seed: 1,
                envelope_r: 3.0,
                band_max: 0.0,
            },
            init_v: FieldSource::Zero,
            init_energy_norm: 1.0,
            init_seed: 1,
            dt: 0.02,
            scheme: Scheme::Etd2Midpoint,
            t_final: 10.0,
            snapshot_spacing: 0.25,
            dealias_pad: 1,
            quad_refine: false,
            output_dir: None,
            strichartz: StrichartzConfig::default(),
            attractor: AttractorConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

struct KvReader {
    map: BTreeMap<String, String>,
    consumed: std::collections::BTreeSet<String>,
}

impl KvReader {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if map
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::Config(format!("duplicate key '{key}'")));
            }
        }
        Ok(KvReader {
            map,
            consumed: Default::default(),
        })
    }

    fn get(&mut self, key: &str) -> Option<String> {
        self.consumed.insert(key.to_string());
        self.map.get(key).cloned()
    }

    fn parse_as<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(text) => text
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse '{key} = {text}'"))),
        }
    }

    fn parse_list(&mut self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default),
            Some(text) => text
                .split_whitespace()
                .map(|tok| {
                    tok.parse()
                        .map_err(|_| Error::Config(format!("cannot parse '{key}' entry '{tok}'")))
                })
                .collect(),
        }
    }

    /// Collect indexed keys `prefix.0, prefix.1, ...` as "mx my mz amplitude".
    fn parse_modes(&mut self, prefix: &str) -> Result<Vec<ModeAmplitude>> {
        let mut out = Vec::new();
        for i in 0.. {
            let key = format!("{prefix}.{i}");
            match self.get(&key) {
                None => break,
                Some(text) => {
                    let toks: Vec<&str> = text.split_whitespace().collect();
                    if toks.len() != 4 {
                        return Err(Error::Config(format!(
                            "'{key}' must be 'mx my mz amplitude'"
                        )));
                    }
                    let m = [
                        toks[0].parse().map_err(|_| bad_mode(&key))?,
                        toks[1].parse().map_err(|_| bad_mode(&key))?,
                        toks[2].parse().map_err(|_| bad_mode(&key))?,
                    ];
                    let a: f64 = toks[3].parse().map_err(|_| bad_mode(&key))?;
                    out.push((m, a));
                }
            }
        }
        Ok(out)
    }

    fn reject_unknown(&self) -> Result<()> {
        for key in self.map.keys() {
            if !self.consumed.contains(key) {
                return Err(Error::Config(format!("unknown key '{key}'")));
            }
        }
        Ok(())
    }
}

fn bad_mode(key: &str) -> Error {
    Error::Config(format!("cannot parse mode entry '{key}'"))
}

fn parse_field_source(reader: &mut KvReader, section: &str, default: FieldSource) -> Result<FieldSource> {
    let kind = reader.get(&format!("{section}.kind"));
    let modes = reader.parse_modes(&format!("{section}.mode"))?;
    let seed = reader.parse_as(&format!("{section}.seed"), 0_u64)?;
    let envelope_r = reader.parse_as(&format!("{section}.envelope_r"), 3.0_f64)?;
    let band_max = reader.parse_as(&format!("{section}.band_max"), 0.0_f64)?;
    match kind.as_deref() {
        None => Ok(default),
        Some("zero") => Ok(FieldSource::Zero),
        Some("modes") => {
            if modes.is_empty() {
                return Err(Error::Config(format!(
                    "'{section}.kind = modes' needs at least one '{section}.mode.N' entry"
                )));
            }
            Ok(FieldSource::Modes(modes))
        }
        Some("random") => Ok(FieldSource::Random {
            seed,
            envelope_r,
            band_max,
        }),
        Some(other) => Err(Error::Config(format!(
            "unknown {section}.kind '{other}' (zero | modes | random)"
        ))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut r = KvReader::parse(text)?;
        let defaults = RunConfig::default();

        let grid_n = r.parse_as("grid.n", defaults.grid_n)?;
        let box_length = r.parse_as("grid.box_length", defaults.box_length)?;
        let alpha = r.parse_as("alpha", defaults.alpha)?;

        let nl_kind = r.get("nonlinearity.kind");
        let c1 = r.parse_as("nonlinearity.c1", 0.0_f64)?;
        let c3 = r.parse_as("nonlinearity.c3", 1.0_f64)?;
        let c5 = r.parse_as("nonlinearity.c5", 0.0_f64)?;
        let kappa = r.parse_as("nonlinearity.kappa", 2.0_f64)?;
        let l = r.parse_as("nonlinearity.l", 0.25_f64)?;
        let k = r.parse_as("nonlinearity.k", 0.0_f64)?;
        let c = r.parse_as("nonlinearity.c", 6.0_f64)?;
        let nonlinearity = match nl_kind.as_deref() {
            None => defaults.nonlinearity.clone(),
            Some("zero") => NonlinearityConfig::Zero,
            Some("cubic") => NonlinearityConfig::Cubic { c3, kappa },
            Some("custom") => NonlinearityConfig::Custom {
                c1,
                c3,
                c5,
                kappa,
                l,
                k,
                c,
            },
            Some(other) => {
                return Err(Error::Config(format!(
                    "unknown nonlinearity.kind '{other}' (zero | cubic | custom)"
                )))
            }
        };

        let forcing = parse_field_source(&mut r, "forcing", FieldSource::Zero)?;
        let forcing_h1_norm = r.parse_as("forcing.h1_norm", 0.0_f64)?;
        let init = parse_field_source(&mut r, "init", defaults.init.clone())?;
        let init_v = parse_field_source(&mut r, "init_v", FieldSource::Zero)?;
        let init_energy_norm = r.parse_as("init.energy_norm", defaults.init_energy_norm)?;

        let dt = r.parse_as("run.dt", defaults.dt)?;
        let scheme: Scheme = match r.get("run.scheme") {
            None => defaults.scheme,
            Some(text) => text.parse()?,
        };
        let t_final = r.parse_as("run.t_final", defaults.t_final)?;
        let snapshot_spacing = r.parse_as("run.snapshot_spacing", defaults.snapshot_spacing)?;
        let dealias_pad = r.parse_as("run.dealias_pad", defaults.dealias_pad)?;
        let quad_refine = r.parse_as("run.quad_refine", defaults.quad_refine)?;
        let output_dir = r.get("output.dir").map(PathBuf::from);

        let strichartz = StrichartzConfig {
            count: r.parse_as("strichartz.count", defaults.strichartz.count)?,
            horizon: r.parse_as("strichartz.horizon", defaults.strichartz.horizon)?,
            samples_per_unit: r.parse_as(
                "strichartz.samples_per_unit",
                defaults.strichartz.samples_per_unit,
            )?,
            seed: r.parse_as("strichartz.seed", defaults.strichartz.seed)?,
            envelope_r: r.parse_as("strichartz.envelope_r", defaults.strichartz.envelope_r)?,
            band_max: r.parse_as("strichartz.band_max", defaults.strichartz.band_max)?,
            bands: r.parse_list("strichartz.bands", defaults.strichartz.bands.clone())?,
        };
        let attractor = AttractorConfig {
            burn_in: r.parse_as("attractor.burn_in", defaults.attractor.burn_in)?,
            samples: r.parse_as("attractor.samples", defaults.attractor.samples)?,
            spacing: r.parse_as("attractor.spacing", defaults.attractor.spacing)?,
        };
        let sweep = SweepConfig {
            alphas: r.parse_list("sweep.alphas", defaults.sweep.alphas.clone())?,
            kappas: r.parse_list("sweep.kappas", defaults.sweep.kappas.clone())?,
            g_amplitudes: r.parse_list(
                "sweep.g_amplitudes",
                defaults.sweep.g_amplitudes.clone(),
            )?,
            box_lengths: r.parse_list(
                "sweep.box_lengths",
                defaults.sweep.box_lengths.clone(),
            )?,
            budget: r.parse_as("sweep.budget", defaults.sweep.budget)?,
            t_final: r.parse_as("sweep.t_final", defaults.sweep.t_final)?,
            init_norm: r.parse_as("sweep.init_norm", defaults.sweep.init_norm)?,
        };
        let init_seed = match &init {
            FieldSource::Random { seed, .. } => *seed,
            _ => r.parse_as("init.seed", defaults.init_seed)?,
        };

        r.reject_unknown()?;

        let config = RunConfig {
            grid_n,
            box_length,
            alpha,
            nonlinearity,
            forcing,
            forcing_h1_norm,
            init,
            init_v,
            init_energy_norm,
            init_seed,
            dt,
            scheme,
            t_final,
            snapshot_spacing,
            dealias_pad,
            quad_refine,
            output_dir,
            strichartz,
            attractor,
            sweep,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 8 || self.grid_n % 2 != 0 {
            return Err(Error::Config(format!(
                "grid.n must be even and >= 8, got {}",
                self.grid_n
            )));
        }
        if !(self.box_length > 0.0) {
            return Err(Error::Config("grid.box_length must be positive".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("run.dt must be positive".into()));
        }
        if self.t_final < self.dt {
            return Err(Error::Config(format!(
                "run.t_final = {} is shorter than one step dt = {}",
                self.t_final, self.dt
            )));
        }
        if !(self.snapshot_spacing >= self.dt) {
            return Err(Error::Config(
                "run.snapshot_spacing must be at least run.dt".into(),
            ));
        }
        if self.dealias_pad == 0 || self.dealias_pad > 4 {
            return Err(Error::Config("run.dealias_pad must lie in 1..=4".into()));
        }
        self.nonlinearity.build()?;
        if self.strichartz.count == 0 || self.strichartz.samples_per_unit == 0 {
            return Err(Error::Config(
                "strichartz.count and samples_per_unit must be positive".into(),
            ));
        }
        if !(self.strichartz.horizon > 0.0) {
            return Err(Error::Config("strichartz.horizon must be positive".into()));
        }
        if self.strichartz.bands.windows(2).any(|w| w[0] >= w[1])
            || self.strichartz.bands.first().map(|&b| b <= 1.0).unwrap_or(false)
        {
            return Err(Error::Config(
                "strichartz.bands must be strictly increasing and > 1".into(),
            ));
        }
        if !(self.attractor.burn_in > 0.0 && self.attractor.spacing > 0.0)
            || self.attractor.samples == 0
        {
            return Err(Error::Config("attractor section must be positive".into()));
        }
        if self.sweep.budget == 0 {
            return Err(Error::Config("sweep.budget must be positive".into()));
        }
        Ok(())
    }

    /// Canonical serialization: sorted keys, full-precision floats. Parsing
    /// this text reproduces the config exactly.
    pub fn to_canonical_string(&self) -> String {
        let mut pairs: Vec<(String, String)> = vec![
            ("grid.n".into(), self.grid_n.to_string()),
            ("grid.box_length".into(), format!("{}", self.box_length)),
            ("alpha".into(), format!("{}", self.alpha)),
            ("run.dt".into(), format!("{}", self.dt)),
            ("run.scheme".into(), self.scheme.to_string()),
            ("run.t_final".into(), format!("{}", self.t_final)),
            (
                "run.snapshot_spacing".into(),
                format!("{}", self.snapshot_spacing),
            ),
            ("run.dealias_pad".into(), self.dealias_pad.to_string()),
            ("run.quad_refine".into(), self.quad_refine.to_string()),
            ("init.energy_norm".into(), format!("{}", self.init_energy_norm)),
            ("forcing.h1_norm".into(), format!("{}", self.forcing_h1_norm)),
        ];
        match &self.nonlinearity {
            NonlinearityConfig::Zero => pairs.push(("nonlinearity.kind".into(), "zero".into())),
            NonlinearityConfig::Cubic { c3, kappa } => {
                pairs.push(("nonlinearity.kind".into(), "cubic".into()));
                pairs.push(("nonlinearity.c3".into(), format!("{c3}")));
                pairs.push(("nonlinearity.kappa".into(), format!("{kappa}")));
            }
            NonlinearityConfig::Custom {
                c1,
                c3,
                c5,
                kappa,
                l,
                k,
                c,
            } => {
                pairs.push(("nonlinearity.kind".into(), "custom".into()));
                pairs.push(("nonlinearity.c1".into(), format!("{c1}")));
                pairs.push(("nonlinearity.c3".into(), format!("{c3}")));
                pairs.push(("nonlinearity.c5".into(), format!("{c5}")));
                pairs.push(("nonlinearity.kappa".into(), format!("{kappa}")));
                pairs.push(("nonlinearity.l".into(), format!("{l}")));
                pairs.push(("nonlinearity.k".into(), format!("{k}")));
                pairs.push(("nonlinearity.c".into(), format!("{c}")));
            }
        }
        let mut field_source = |section: &str, source: &FieldSource| match source {
            FieldSource::Zero => pairs.push((format!("{section}.kind"), "zero".into())),
            FieldSource::Modes(list) => {
                pairs.push((format!("{section}.kind"), "modes".into()));
                for (i, (m, a)) in list.iter().enumerate() {
                    pairs.push((
                        format!("{section}.mode.{i}"),
                        format!("{} {} {} {}", m[0], m[1], m[2], a),
                    ));
                }
            }
            FieldSource::Random {
                seed,
                envelope_r,
                band_max,
            } => {
                pairs.push((format!("{section}.kind"), "random".into()));
                pairs.push((format!("{section}.seed"), seed.to_string()));
                pairs.push((format!("{section}.envelope_r"), format!("{envelope_r}")));
                pairs.push((format!("{section}.band_max"), format!("{band_max}")));
            }
        };
        field_source("forcing", &self.forcing);
        field_source("init", &self.init);
        field_source("init_v", &self.init_v);
        pairs.push((
            "strichartz.count".into(),
            self.strichartz.count.to_string(),
        ));
        pairs.push((
            "strichartz.horizon".into(),
            format!("{}", self.strichartz.horizon),
        ));
        pairs.push((
            "strichartz.samples_per_unit".into(),
            self.strichartz.samples_per_unit.to_string(),
        ));
        pairs.push(("strichartz.seed".into(), self.strichartz.seed.to_string()));
        pairs.push((
            "strichartz.envelope_r".into(),
            format!("{}", self.strichartz.envelope_r),
        ));
        pairs.push((
            "strichartz.band_max".into(),
            format!("{}", self.strichartz.band_max),
        ));
        pairs.push((
            "strichartz.bands".into(),
            self.strichartz
                .bands
                .iter()
                .map(|b| format!("{b}"))
                .collect::<Vec<_>>()
                .join(" "),
        ));
        pairs.push((
            "attractor.burn_in".into(),
            format!("{}", self.attractor.burn_in),
        ));
        pairs.push(("attractor.samples".into(), self.attractor.samples.to_string()));
        pairs.push((
            "attractor.spacing".into(),
            format!("{}", self.attractor.spacing),
        ));
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        pairs.push(("sweep.alphas".into(), join(&self.sweep.alphas)));
        pairs.push(("sweep.kappas".into(), join(&self.sweep.kappas)));
        pairs.push(("sweep.g_amplitudes".into(), join(&self.sweep.g_amplitudes)));
        pairs.push(("sweep.box_lengths".into(), join(&self.sweep.box_lengths)));
        pairs.push(("sweep.budget".into(), self.sweep.budget.to_string()));
        pairs.push(("sweep.t_final".into(), format!("{}", self.sweep.t_final)));
        pairs.push(("sweep.init_norm".into(), format!("{}", self.sweep.init_norm)));
        if let Some(dir) = &self.output_dir {
            pairs.push(("output.dir".into(), dir.display().to_string()));
        }
        pairs.sort();
        let mut out = String::new();
        for (k, v) in pairs {
            out.push_str(&k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    pub fn config_hash(&self) -> u64 {
        fnv1a64(self.to_canonical_string().as_bytes())
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.box_length, self.grid_n)
    }

    /// External force on the grid, rescaled to the requested Ḣ¹ norm.
    pub fn build_forcing(&self, grid: &Arc<Grid>) -> Result<SpectralField> {
        let target = if self.forcing_h1_norm > 0.0 {
            Some((1.0, self.forcing_h1_norm))
        } else {
            None
        };
        self.forcing.build(grid, target, 3)
    }

    /// Initial state (u, v) on the grid, rescaled to the target energy norm.
    pub fn build_initial_state(&self, grid: &Arc<Grid>) -> Result<StateVector> {
        let u = self.init.build(grid, None, 1)?;
        let v = self.init_v.build(grid, None, 2)?;
        let raw = StateVector::new(u, v, 0.0)?;
        if self.init_energy_norm > 0.0 {
            let norm = energy_norm(&raw, self.alpha)?;
            if norm == 0.0 {
                return Err(Error::Config(
                    "initial state is zero; cannot reach the target energy norm".into(),
                ));
            }
            Ok(raw.scaled(self.init_energy_norm / norm))
        } else {
            Ok(raw)
        }
    }

    pub fn build_solver_config(&self, grid: &Arc<Grid>) -> Result<SolverConfig> {
        let g = self.build_forcing(grid)?;
        let mut config = SolverConfig::new(self.dt, self.scheme, self.alpha, g)?;
        config.snapshot_every = ((self.snapshot_spacing / self.dt).round() as usize).max(1);
        config.dealias_pad = self.dealias_pad;
        config.quad_refine = self.quad_refine;
        Ok(config)
    }

    pub fn build_nonlinearity(&self) -> Result<NonlinearitySpec> {
        self.nonlinearity.build()
    }

    /// Replace every seed with `seed`-derived values (CLI --seed override).
    pub fn override_seed(&mut self, seed: u64) {
        self.init_seed = seed;
        if let FieldSource::Random { seed: s, .. } = &mut self.init {
            *s = seed;
        }
        if let FieldSource::Random { seed: s, .. } = &mut self.init_v {
            *s = seed ^ 0x9e37_79b9_7f4a_7c15;
        }
        self.strichartz.seed = seed ^ 0x517c_c1b7_2722_0a95;
    }
}
