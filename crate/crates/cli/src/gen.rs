use mionet::data::{Dataset, SamplingPolicy};
use mionet::systems::{generate, GenSpec, System};
use mionet::Result;
use serde_json::json;

use crate::manifest::Run;
use crate::{LayoutArg, OutArg};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, value_parser = parse_system)]
    pub system: System,
    /// Number of training functions.
    #[arg(long = "train", default_value_t = 1000)]
    pub train_count: usize,
    /// Number of test functions.
    #[arg(long = "test", default_value_t = 1000)]
    pub test_count: usize,
    /// GRF length scale; the system default when omitted.
    #[arg(long)]
    pub length_scale: Option<f64>,
    /// Output samples kept per function (0 keeps all); the system default when omitted.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum, default_value_t = LayoutArg::Auto)]
    pub layout: LayoutArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArg,
}

pub fn parse_system(s: &str) -> std::result::Result<System, String> {
    s.parse().map_err(|e: mionet::Error| e.to_string())
}

/// Training and test specs over disjoint sample ranges.
pub fn specs(system: System, train: usize, test: usize, length_scale: Option<f64>, points: Option<usize>, seed: u64) -> (GenSpec, GenSpec) {
    let mut a = GenSpec::new(system, train, seed);
    if let Some(l) = length_scale {
        a.length_scale = l;
    }
    match points {
        Some(0) => a.policy = SamplingPolicy::AllPoints,
        Some(count) => a.policy = SamplingPolicy::RandomSubset { count, seed },
        None => {}
    }
    let mut b = a.clone();
    b.count = test;
    b.sample_offset = train as u64;
    (a, b)
}

pub fn run(args: Args) -> Result<()> {
    let mut run = Run::start("gen-data", &args.out.out)?;
    let (train_spec, test_spec) = specs(
        args.system,
        args.train_count,
        args.test_count,
        args.length_scale,
        args.points,
        args.seed,
    );
    let layout = args.layout.resolve(args.system);
    let train: Dataset = generate(&train_spec)?;
    train.write(&run.path("train"), layout)?;
    let test = generate(&test_spec)?;
    test.write(&run.path("test"), layout)?;
    run.finish(
        json!({ "train": train_spec, "test": test_spec, "layout": layout }),
        vec![args.seed],
    )
}
