// SPDX-License-Identifier: Apache-2.0
//! Run configuration shared by every command.
//!
//! Resolution order, later wins: built-in defaults, the named preset, the JSON
//! file, command-line flags. Unknown keys are rejected.
//!
//! | key         | default              | meaning                                              |
//! |-------------|----------------------|------------------------------------------------------|
//! | schema      | 1                    | config schema version                                |
//! | dim         | 2                    | torus dimension                                      |
//! | M           | 64                   | grid points per axis                                 |
//! | eps         | 1/16                 | mollifier scale ε (needs 1/ε ≤ M/4)                  |
//! | mollifier   | sharp-cutoff         | `sharp-cutoff` or `smooth-bump`                      |
//! | amplitude   | 1                    | noise amplitude; 0 gives the noise-free operator     |
//! | seed        | 7                    | noise seed                                           |
//! | K           | M/4                  | Galerkin mode radius                                 |
//! | N           | selected             | paracontrolled cutoff; `null` runs the selection     |
//! | c2_cap      | 16                   | mode cap of the 3d double sum                        |
//! | method      | by K                 | propagation method; `null` picks dense or Krylov     |
//! | T           | 1                    | final time                                           |
//! | samples     | 101                  | output times on [0, T] (propagate)                   |
//! | dt          | 1e-3                 | NLS time step                                        |
//! | stride      | 10                   | NLS ledger stride in steps                           |
//! | s           | 0.6                  | Sobolev index of data and reports                    |
//! | sigma       | 0.55                 | derivative index σ of W^{σ,p} norms                  |
//! | scheme      | strang               | NLS scheme: `strang` or `picard`                     |
//! | data_amplitude | 1                 | H^s size of NLS and propagation data                 |
//! | generator   | free                 | Strichartz generator                                 |
//! | exponent    | 4                    | Strichartz p (or r)                                  |
//! | interval    | unit                 | `unit` = [0, 1], `short` = [0, 1/N]                  |
//! | N_list      | [8, 16, 32, 64, 128] | data frequencies                                     |
//! | seeds       | 0..20                | ensemble seeds                                       |
//! | n_t         | 128                  | time samples of space-time norms                     |
//! | tolerance   | per experiment       | slope tolerance override                             |
//! | profile     | standard             | verify profile: `zero-noise` or `standard`           |
//! | checks      | []                   | verify subset; empty runs the whole profile          |
//! | out         | "out"                | output directory                                     |

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::anderson2d::{AndersonOperator2d, OperatorOptions};
use crate::anderson3d::AndersonOperator3d;
use crate::error::{Error, Result};
use crate::fourier::{Grid, TorusField};
use crate::nls::Scheme;
use crate::noise::{
    enhance_2d, enhance_3d, sample_white_noise, EnhancedNoise2d, EnhancedNoise3d, Mollifier, MollifierKind,
};
use crate::propagator::{Flow, GeneratorKind, Method, PropagatorPlan, SharpFlow};
use crate::strichartz::{
    anderson2d_config, anderson3d_config, laplacian_config, run_scaling, short_time_config, Interval, PassRule,
    ScalingConfig, ScalingReport, DEFAULT_TIME_SAMPLES,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sample,
    Enhance,
    Operator,
    Spectrum,
    Propagate,
    Nls,
    Strichartz,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Enhance => "enhance",
            Command::Operator => "operator",
            Command::Spectrum => "spectrum",
            Command::Propagate => "propagate",
            Command::Nls => "nls",
            Command::Strichartz => "strichartz",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Degenerate identities of the noise-free operators.
    ZeroNoise,
    Standard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub preset: Option<String>,
    pub dim: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub eps: f64,
    pub mollifier: MollifierKind,
    pub amplitude: f64,
    pub seed: u64,
    #[serde(rename = "K")]
    pub k_radius: Option<f64>,
    #[serde(rename = "N")]
    pub cutoff: Option<usize>,
    pub c2_cap: f64,
    pub method: Option<Method>,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub samples: usize,
    pub dt: f64,
    pub stride: usize,
    pub s: f64,
    pub sigma: f64,
    pub scheme: Scheme,
    pub data_amplitude: f64,
    pub generator: GeneratorKind,
    pub exponent: f64,
    pub interval: Interval,
    #[serde(rename = "N_list")]
    pub n_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_t: usize,
    pub tolerance: Option<f64>,
    pub profile: Profile,
    pub checks: Vec<String>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            preset: None,
            dim: 2,
            m: 64,
            eps: 1.0 / 16.0,
            mollifier: MollifierKind::SharpCutoff,
            amplitude: 1.0,
            seed: 7,
            k_radius: None,
            cutoff: None,
            c2_cap: crate::noise::DEFAULT_C2_CAP,
            method: None,
            t_final: 1.0,
            samples: 101,
            dt: 1e-3,
            stride: 10,
            s: 0.6,
            sigma: 0.55,
            scheme: Scheme::Strang,
            data_amplitude: 1.0,
            generator: GeneratorKind::Free,
            exponent: 4.0,
            interval: Interval::Unit,
            n_list: vec![8.0, 16.0, 32.0, 64.0, 128.0],
            seeds: (0..20).collect(),
            n_t: DEFAULT_TIME_SAMPLES,
            tolerance: None,
            profile: Profile::Standard,
            checks: Vec::new(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Cheap consistency checks; the modules re-check what they need.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.schema != SCHEMA_VERSION {
            return bad(format!("unsupported schema {} (this build reads {SCHEMA_VERSION})", self.schema));
        }
        if !(2..=3).contains(&self.dim) {
            return bad(format!("dim must be 2 or 3, got {}", self.dim));
        }
        if self.m < 4 || !self.m.is_power_of_two() {
            return bad(format!("M must be a power of two >= 4, got {}", self.m));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if 1.0 / self.eps > (self.m / 4) as f64 + 1e-9 {
            return bad(format!("mollifier not resolved: 1/eps = {} exceeds M/4 = {}", 1.0 / self.eps, self.m / 4));
        }
        if !(self.t_final >= 0.0) || !(self.dt > 0.0) {
            return bad("T must be nonnegative and dt positive".into());
        }
        if self.samples < 2 {
            return bad("samples must be at least 2".into());
        }
        if let Some(k) = self.k_radius {
            if !(k >= 1.0) || k >= (self.m / 2) as f64 {
                return bad(format!("K must lie in [1, M/2), got {k}"));
            }
        }
        Ok(())
    }

    pub fn k_radius_or_default(&self) -> f64 {
        self.k_radius.unwrap_or((self.m / 4) as f64)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.m)
    }

    pub fn mollifier(&self) -> Mollifier {
        Mollifier::new(self.mollifier, self.eps)
    }

    pub fn operator_options(&self) -> OperatorOptions {
        OperatorOptions { radius: self.k_radius, cutoff: self.cutoff, ..Default::default() }
    }

    /// White noise for `seed`, in the configured dimension.
    pub fn white_noise(&self) -> Result<TorusField> {
        Ok(sample_white_noise(self.dim, self.m, self.seed)?.field)
    }

    pub fn noise_2d(&self) -> Result<EnhancedNoise2d> {
        let grid = Grid::new(2, self.m)?;
        if self.amplitude == 0.0 {
            return Ok(EnhancedNoise2d::zero(grid, self.mollifier()));
        }
        let xi = sample_white_noise(2, self.m, self.seed)?.field;
        let n = enhance_2d(&xi, &self.mollifier())?;
        Ok(if self.amplitude == 1.0 { n } else { n.scaled(self.amplitude) })
    }

    pub fn noise_3d(&self) -> Result<EnhancedNoise3d> {
        let grid = Grid::new(3, self.m)?;
        if self.amplitude == 0.0 {
            return EnhancedNoise3d::zero(grid, self.mollifier());
        }
        let xi = sample_white_noise(3, self.m, self.seed)?.field;
        let n = enhance_3d(&xi, &self.mollifier(), self.c2_cap)?;
        if self.amplitude == 1.0 {
            Ok(n)
        } else {
            n.scaled(self.amplitude)
        }
    }

    pub fn operator_2d(&self) -> Result<AndersonOperator2d> {
        AndersonOperator2d::new(self.noise_2d()?, &self.operator_options())
    }

    pub fn operator_3d(&self) -> Result<AndersonOperator3d> {
        AndersonOperator3d::new(self.noise_3d()?, &self.operator_options())
    }

    pub fn plan(&self, generator: GeneratorKind) -> PropagatorPlan {
        let mut plan = PropagatorPlan::for_matrix(generator, self.k_radius_or_default());
        if let Some(m) = self.method {
            plan.method = m;
        }
        plan
    }
}

impl RunConfig {
    /// The scaling experiment described by `generator`, `exponent`, `interval` and `N_list`.
    pub fn scaling_config(&self) -> Result<ScalingConfig> {
        let mut sc = match (self.generator, self.interval) {
            (GeneratorKind::Free, Interval::Unit) => laplacian_config(self.dim, self.exponent, self.n_list.clone(), self.seeds.clone())?,
            (GeneratorKind::Free, Interval::Short) => short_time_config(self.dim, self.exponent, self.n_list.clone(), self.seeds.clone())?,
            (GeneratorKind::Anderson2d, Interval::Unit) => {
                anderson2d_config(self.exponent, self.sigma, self.n_list.clone(), self.seeds.clone(), 0.25)?
            }
            (GeneratorKind::Anderson3d, Interval::Unit) => {
                anderson3d_config(self.exponent, self.sigma, self.n_list.clone(), self.seeds.clone(), 0.35)?
            }
            (_, Interval::Short) => return Err(Error::Config("the short interval is only defined for the free group".into())),
        };
        let want_dim = match self.generator {
            GeneratorKind::Free => self.dim,
            GeneratorKind::Anderson2d => 2,
            GeneratorKind::Anderson3d => 3,
        };
        if want_dim != self.dim {
            return Err(Error::Config(format!("generator needs dim = {want_dim}, got {}", self.dim)));
        }
        sc.n_t = self.n_t;
        if let Some(tol) = self.tolerance {
            sc.rule = match sc.rule {
                PassRule::AtMost(_) => PassRule::AtMost(sc.theory_slope.max(0.0) + tol),
                PassRule::Within(_) => PassRule::Within(tol),
            };
        }
        Ok(sc)
    }

    /// Builds the operator when needed and runs the scaling ensemble.
    pub fn run_strichartz(&self) -> Result<ScalingReport> {
        let sc = self.scaling_config()?;
        match self.generator {
            GeneratorKind::Free => run_scaling(&sc, None),
            GeneratorKind::Anderson2d => {
                let op = self.operator_2d()?;
                let flow = SharpFlow::tabulated(Flow::anderson2d(&op, &self.plan(GeneratorKind::Anderson2d)))?;
                run_scaling(&sc, Some(&flow))
            }
            GeneratorKind::Anderson3d => {
                let op = self.operator_3d()?;
                let flow = SharpFlow::tabulated(Flow::anderson3d(&op, &self.plan(GeneratorKind::Anderson3d)))?;
                run_scaling(&sc, Some(&flow))
            }
        }
    }
}

/// A named experiment: the command it runs and the keys it sets.
pub struct Preset {
    pub name: &'static str,
    pub command: Command,
    pub summary: &'static str,
    values: fn() -> Value,
}

impl Preset {
    pub fn values(&self) -> Value {
        (self.values)()
    }
}

fn seeds(n: u64) -> Value {
    json!((0..n).collect::<Vec<_>>())
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "reconstruction-2d",
        command: Command::Verify,
        summary: "paraproduct reconstruction on 50 random pairs, 2d M = 256",
        values: || json!({"dim": 2, "M": 256, "seeds": seeds(50), "checks": ["reconstruction"]}),
    },
    Preset {
        name: "bernstein",
        command: Command::Verify,
        summary: "single-mode derivative ratios against 2π|k|",
        values: || json!({"dim": 2, "M": 64, "checks": ["bernstein"]}),
    },
    Preset {
        name: "renorm-constants",
        command: Command::Verify,
        summary: "c_ε against log(1/ε); c¹_ε·ε convergence",
        values: || json!({"checks": ["renorm-2d", "renorm-3d"]}),
    },
    Preset {
        name: "thm6.3-cauchy",
        command: Command::Verify,
        summary: "Cauchy property of Ξ₂ over dyadic ε at M = 512, 20 seeds",
        values: || json!({"dim": 2, "M": 512, "eps": 1.0 / 16.0, "seeds": seeds(20), "checks": ["cauchy"]}),
    },
    Preset {
        name: "lemma3.3-gamma",
        command: Command::Verify,
        summary: "2d Γ contraction, inverse pair and ratio constants at M and 2M",
        values: || json!({"dim": 2, "M": 64, "eps": 1.0 / 16.0, "checks": ["gamma-2d"]}),
    },
    Preset {
        name: "thm3.1-norm-equivalence",
        command: Command::Verify,
        summary: "2d ratio ||HΓu♯|| / ||u♯||_{H²} over 50 probes at M and 2M",
        values: || json!({"dim": 2, "M": 64, "eps": 1.0 / 16.0, "seeds": seeds(50), "checks": ["norm-equivalence-2d"]}),
    },
    Preset {
        name: "lemma3.8-norm-equivalence",
        command: Command::Verify,
        summary: "3d ratio ||Hu|| / ||u♯||_{H²} over 50 probes at M and 2M",
        values: || json!({"dim": 3, "M": 16, "eps": 0.25, "seeds": seeds(50), "checks": ["norm-equivalence-3d"]}),
    },
    Preset {
        name: "prop3.2-perturbation",
        command: Command::Verify,
        summary: "2d growth exponent of (H♯ - Δ + shift)e_k over |k| in 4..64",
        values: || json!({"dim": 2, "M": 256, "eps": 1.0 / 64.0, "checks": ["perturbation-2d"]}),
    },
    Preset {
        name: "prop3.9-perturbation",
        command: Command::Verify,
        summary: "3d growth exponent of (H♯ - Δ + shift)e_k over |k| in 2..16",
        values: || json!({"dim": 3, "M": 64, "eps": 1.0 / 16.0, "checks": ["perturbation-3d"]}),
    },
    Preset {
        name: "unitarity-2d",
        command: Command::Verify,
        summary: "mass and energy drift, group law of e^{-itH}",
        values: || json!({"dim": 2, "M": 128, "eps": 1.0 / 32.0, "K": 24.0, "checks": ["unitarity"]}),
    },
    Preset {
        name: "prop4.1-duhamel",
        command: Command::Verify,
        summary: "Duhamel difference identity at quad_steps 8..64, 2d M = 128, K = 24",
        values: || json!({"dim": 2, "M": 128, "eps": 1.0 / 32.0, "K": 24.0, "T": 0.01, "checks": ["duhamel"]}),
    },
    Preset {
        name: "thm2.4-d2-p4",
        command: Command::Strichartz,
        summary: "free group, d = 2, p = 4, slope at most 0.2",
        values: || json!({"generator": "free", "dim": 2, "exponent": 4.0, "N_list": [8.0, 16.0, 32.0, 64.0]}),
    },
    Preset {
        name: "thm2.4-d2-p8",
        command: Command::Strichartz,
        summary: "free group, d = 2, p = 8, slope at most 1/2 + 0.2",
        values: || json!({"generator": "free", "dim": 2, "exponent": 8.0, "N_list": [8.0, 16.0, 32.0, 64.0]}),
    },
    Preset {
        name: "thm2.4-d3-p10_3",
        command: Command::Strichartz,
        summary: "free group, d = 3, p = 10/3, slope at most 0.25",
        values: || json!({"generator": "free", "dim": 3, "exponent": 10.0 / 3.0, "N_list": [2.0, 4.0, 8.0, 16.0]}),
    },
    Preset {
        name: "prop2.5-d2-p4",
        command: Command::Strichartz,
        summary: "free group on [0, 1/N], d = 2, p = 4, slope -1/4 within 0.2",
        values: || {
            json!({"generator": "free", "dim": 2, "exponent": 4.0, "interval": "short", "N_list": [8.0, 16.0, 32.0, 64.0]})
        },
    },
    Preset {
        name: "thm4.2-r4",
        command: Command::Strichartz,
        summary: "2d sharpened Anderson group, r = 4, slope at most 0.25",
        values: || {
            json!({"generator": "anderson2d", "dim": 2, "M": 128, "eps": 1.0 / 32.0, "K": 24.0,
                   "exponent": 4.0, "sigma": 0.0, "N_list": [3.0, 6.0, 12.0, 24.0]})
        },
    },
    Preset {
        name: "thm4.3-p10_3",
        command: Command::Strichartz,
        summary: "3d sharpened Anderson group, p = 10/3, slope at most 0.35",
        values: || {
            json!({"generator": "anderson3d", "dim": 3, "M": 64, "eps": 1.0 / 16.0, "K": 8.0,
                   "exponent": 10.0 / 3.0, "sigma": 0.0, "N_list": [2.0, 4.0, 6.0, 8.0]})
        },
    },
    Preset {
        name: "nls-strang-order",
        command: Command::Verify,
        summary: "Strang self-convergence ratio under dt halving",
        values: || json!({"dim": 2, "M": 32, "eps": 1.0 / 8.0, "K": 8.0, "T": 0.1, "checks": ["nls-strang-order"]}),
    },
    Preset {
        name: "nls-picard",
        command: Command::Verify,
        summary: "Picard iteration against Strang splitting at T = 0.05",
        values: || json!({"dim": 2, "M": 32, "eps": 1.0 / 8.0, "K": 8.0, "T": 0.05, "checks": ["nls-picard"]}),
    },
    Preset {
        name: "nls-lwp",
        command: Command::Verify,
        summary: "Lipschitz quotients at s = 0.6 over 10 seeds and three δ",
        values: || {
            json!({"dim": 2, "M": 32, "eps": 1.0 / 8.0, "K": 8.0, "T": 0.05, "s": 0.6, "seeds": seeds(10), "checks": ["nls-lwp"]})
        },
    },
    Preset {
        name: "nls-gwp",
        command: Command::Verify,
        summary: "energy-space run to T = 5",
        values: || json!({"dim": 2, "M": 32, "eps": 1.0 / 8.0, "K": 8.0, "T": 5.0, "dt": 1e-3, "checks": ["nls-gwp"]}),
    },
    Preset {
        name: "spectrum-2d",
        command: Command::Spectrum,
        summary: "eigenvalues of -H, 2d M = 128, K = 24, ε = 2^-5",
        values: || json!({"dim": 2, "M": 128, "eps": 1.0 / 32.0, "K": 24.0}),
    },
    Preset {
        name: "verify-zero-noise",
        command: Command::Verify,
        summary: "degenerate identities with the noise switched off",
        values: || json!({"amplitude": 0.0, "profile": "zero-noise"}),
    },
    Preset {
        name: "verify-standard",
        command: Command::Verify,
        summary: "the full invariant suite at desk scale",
        values: || json!({"profile": "standard"}),
    },
];

pub fn find_preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::Config(format!("unknown preset {name:?}; available: {}", names.join(", ")))
    })
}

fn merge(base: &mut Map<String, Value>, over: &Value, what: &str) -> Result<()> {
    let Value::Object(over) = over else {
        return Err(Error::Config(format!("{what} must be a JSON object")));
    };
    for (k, v) in over {
        if !base.contains_key(k) {
            return Err(Error::Config(format!("unknown key {k:?} in {what}")));
        }
        base.insert(k.clone(), v.clone());
    }
    Ok(())
}

/// Applies preset, file and flag layers on top of the defaults.
///
/// The preset may be named by `preset_flag` or by a `preset` key in the file; the
/// flag wins. A preset meant for another command is an error.
pub fn resolve(command: Command, file: Option<&Value>, preset_flag: Option<&str>, flags: &Value) -> Result<RunConfig> {
    let Value::Object(mut cfg) = serde_json::to_value(RunConfig::default())? else {
        unreachable!("RunConfig serializes to an object")
    };
    let preset_name = match preset_flag {
        Some(p) => Some(p.to_string()),
        None => file.and_then(|f| f.get("preset")).and_then(Value::as_str).map(str::to_string),
    };
    if let Some(name) = &preset_name {
        let preset = find_preset(name)?;
        if preset.command != command {
            return Err(Error::Config(format!(
                "preset {name:?} belongs to the {} command, not {}",
                preset.command.name(),
                command.name()
            )));
        }
        merge(&mut cfg, &preset.values(), "preset")?;
    }
    if let Some(f) = file {
        merge(&mut cfg, f, "config file")?;
    }
    merge(&mut cfg, flags, "flags")?;
    cfg.insert("preset".into(), preset_name.map(Value::String).unwrap_or(Value::Null));
    let config: RunConfig = serde_json::from_value(Value::Object(cfg))?;
    config.validate()?;
    Ok(config)
}
