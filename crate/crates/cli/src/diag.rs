use mionet::diagnostics::{grf_statistics, gradcheck_suite};
use mionet::encoding::projection_error_profile;
use mionet::grf::{GrfSampler, GrfSpec};
use mionet::Result;
use serde_json::json;

use crate::manifest::Run;
use crate::OutArg;

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum Kind {
    Projection,
    Grf,
    Gradcheck,
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample count: GRF draws for `projection` (default 100) and `grf`
    /// (default 10 000), random batches per model for `gradcheck` (default 20).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub length_scale: f64,
    #[command(flatten)]
    pub out: OutArg,
}

pub const PROJECTION_SIZES: [usize; 6] = [3, 5, 9, 17, 33, 65];

pub fn run(args: Args) -> Result<()> {
    let mut run = Run::start("diagnostics", &args.out.out)?;
    let config = match args.kind {
        Kind::Projection => {
            let count = args.samples.unwrap_or(100);
            let samples = GrfSampler::new(GrfSpec::new(args.length_scale)?)?.sample(args.seed, count)?;
            let profile = projection_error_profile(&samples, &PROJECTION_SIZES)?;
            run.write("projection.csv", profile.to_csv())?;
            print!("{}", profile.to_csv());
            json!({ "kind": "projection", "samples": count, "length_scale": args.length_scale, "ns": PROJECTION_SIZES })
        }
        Kind::Grf => {
            let count = args.samples.unwrap_or(10_000);
            let stats = grf_statistics(args.length_scale, count, args.seed)?;
            run.write_json("grf.json", &stats)?;
            println!("max covariance deviation {:.4}", stats.max_cov_deviation);
            json!({ "kind": "grf", "samples": count, "length_scale": args.length_scale })
        }
        Kind::Gradcheck => {
            let batches = args.samples.unwrap_or(20);
            let checks = gradcheck_suite(args.seed, batches)?;
            let worst = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
            run.write_json("gradcheck.json", &json!({ "max_rel_error": worst, "models": checks }))?;
            println!("max relative gradient error {worst:e}");
            json!({ "kind": "gradcheck", "batches": batches })
        }
    };
    run.finish(config, vec![args.seed])
}
