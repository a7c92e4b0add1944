//! The three benchmark operators and their dataset generators.
//!
//! | system | inputs | output |
//! |---|---|---|
//! | `ode` | forcing `f₁`, `f₂` | pendulum angle `u₁(t)` |
//! | `dr` | diffusivity `D = 0.01(|f| + 1)`, source `g` | `u(x, t)` |
//! | `ad` | diffusivity `D = 0.05|f₂(sin²πx)| + 0.05`, initial value `u₀ = f₁(sin²πx)` | `u(x, t)` |
//!
//! Every input is drawn from a GRF on the fine grid and encoded on 100
//! sensors. The PDE solvers read the sensor values, so the reference
//! solution is a function of the branch coordinates alone.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{assemble_dataset, Dataset, Provenance, SamplingPolicy, Solution};
use crate::encoding::{encode, EncodedFunction, SensorGrid};
use crate::error::{Error, Result};
use crate::grf::{periodic_compose, GrfSampler, GrfSpec};
use crate::solvers::{solve_advection_diffusion, solve_diffusion_reaction, solve_pendulum, OUTPUT_POINTS};

pub const SENSORS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Ode,
    Dr,
    Ad,
}

impl System {
    pub const ALL: [System; 3] = [System::Ode, System::Dr, System::Ad];

    pub fn name(self) -> &'static str {
        match self {
            System::Ode => "ode",
            System::Dr => "dr",
            System::Ad => "ad",
        }
    }

    pub fn default_length_scale(self) -> f64 {
        match self {
            System::Ode | System::Dr => 0.2,
            System::Ad => 0.5,
        }
    }

    /// Output samples kept per input tuple by default.
    pub fn default_policy(self, seed: u64) -> SamplingPolicy {
        match self {
            System::Ad => SamplingPolicy::RandomSubset { count: 100, seed },
            _ => SamplingPolicy::AllPoints,
        }
    }

    pub fn point_dim(self) -> usize {
        match self {
            System::Ode => 1,
            _ => 2,
        }
    }

    pub fn input_names(self) -> [&'static str; 2] {
        match self {
            System::Ode => ["f1", "f2"],
            System::Dr => ["D", "g"],
            System::Ad => ["D", "u0"],
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        System::ALL
            .into_iter()
            .find(|sys| sys.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown system `{s}`, expected ode, dr or ad")))
    }
}

/// What to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub system: System,
    pub count: usize,
    pub length_scale: f64,
    pub seed: u64,
    /// Index of the first sample; train and test sets use disjoint ranges.
    pub sample_offset: u64,
    pub policy: SamplingPolicy,
}

impl GenSpec {
    pub fn new(system: System, count: usize, seed: u64) -> Self {
        Self {
            system,
            count,
            length_scale: system.default_length_scale(),
            seed,
            sample_offset: 0,
            policy: system.default_policy(seed),
        }
    }
}

/// Draws the GRF inputs of sample `index` and returns the two sensor encodings.
pub fn sample_inputs(system: System, sampler: &GrfSampler, seed: u64, index: u64) -> Result<Vec<EncodedFunction>> {
    let sensors = SensorGrid::new(SENSORS)?;
    let a = sampler.draw(seed, 2 * index);
    let b = sampler.draw(seed, 2 * index + 1);
    Ok(match system {
        System::Ode => vec![encode(&a, &sensors)?, encode(&b, &sensors)?],
        System::Dr => {
            let d = a.map(|v| 0.01 * (v.abs() + 1.0))?;
            vec![encode(&d, &sensors)?, encode(&b, &sensors)?]
        }
        System::Ad => {
            let d = periodic_compose(&b, &sensors)?.map(|v| 0.05 * v.abs() + 0.05)?;
            vec![d, periodic_compose(&a, &sensors)?]
        }
    })
}

/// Reference solution for one sample. The ODE is integrated on the
/// fine-grid forcing; the PDEs on the sensor encodings.
fn solve_sample(system: System, sampler: &GrfSampler, seed: u64, index: u64, inputs: &[EncodedFunction]) -> Result<Solution> {
    Ok(match system {
        System::Ode => {
            let f1 = sampler.draw(seed, 2 * index);
            let f2 = sampler.draw(seed, 2 * index + 1);
            Solution::Ode(solve_pendulum(&f1, &f2)?)
        }
        System::Dr => Solution::Field(solve_diffusion_reaction(&inputs[0], &inputs[1])?),
        System::Ad => Solution::Field(solve_advection_diffusion(&inputs[0], &inputs[1])?),
    })
}

/// Solves a PDE system directly from stored branch coordinates.
pub fn reference_field(system: System, coords: &[&[f64]]) -> Result<crate::solvers::Field2D> {
    if coords.len() != 2 {
        return Err(Error::dim("input functions", 2, coords.len()));
    }
    let sensors = SensorGrid::new(SENSORS)?;
    let d = EncodedFunction::new(sensors.clone(), coords[0].to_vec())?;
    let other = EncodedFunction::new(sensors, coords[1].to_vec())?;
    match system {
        System::Dr => solve_diffusion_reaction(&d, &other),
        System::Ad => solve_advection_diffusion(&d, &other),
        System::Ode => Err(Error::Usage("the ode system has no space-time field".into())),
    }
}

fn tag_sample(index: u64, e: Error) -> Error {
    match e {
        Error::Solver { time, message } => Error::Solver {
            time,
            message: format!("sample {index}: {message}"),
        },
        Error::Domain(m) => Error::Domain(format!("sample {index}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("sample {index}: {m}")),
        other => other,
    }
}

/// Samples inputs, solves, and assembles a dataset.
pub fn generate(spec: &GenSpec) -> Result<Dataset> {
    if spec.count == 0 {
        return Err(Error::config("count", "an empty dataset was requested"));
    }
    let sampler = GrfSampler::new(GrfSpec::new(spec.length_scale)?)?;
    let mut inputs = Vec::with_capacity(spec.count);
    let mut solutions = Vec::with_capacity(spec.count);
    for k in 0..spec.count as u64 {
        let index = spec.sample_offset + k;
        let x = sample_inputs(spec.system, &sampler, spec.seed, index).map_err(|e| tag_sample(index, e))?;
        let sol = solve_sample(spec.system, &sampler, spec.seed, index, &x).map_err(|e| tag_sample(index, e))?;
        inputs.push(x);
        solutions.push(sol);
    }
    debug_assert!(solutions.iter().all(|s| s.len() % OUTPUT_POINTS == 0));
    let provenance = Provenance {
        system: spec.system.name().to_string(),
        seed: spec.seed,
        length_scale: spec.length_scale,
        sample_offset: spec.sample_offset,
        policy: spec.policy,
    };
    assemble_dataset(&inputs, &solutions, spec.policy, provenance)
}
