//! `mvgeo eval-depth` — standard depth-estimation error statistics after
//! median scaling, printed as a table and optionally written as CSV.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use mvgeo::metrics::depth_metrics;
use mvgeo::{io, Result};

use crate::params::Params;
use crate::{logging, report};

#[derive(ClapArgs)]
pub struct Args {
    /// Predicted depth map (PFM).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth depth map (PFM).
    #[arg(long)]
    gt: PathBuf,
    /// Optional `key = value` parameter file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ignore ground-truth depths beyond this value.
    #[arg(long)]
    cap: Option<f64>,
    /// Also write the statistics as a one-row CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let mut params = Params::load(args.config.as_deref())?;
    let cap = params.value("cap", args.cap, 80.0)?;
    let resolved = params.finish()?;
    logging::resolved("eval-depth configuration", &resolved);

    let pred = io::read_pfm(&args.pred)?;
    let gt = io::read_pfm(&args.gt)?;
    let r = depth_metrics(&pred, &gt, cap)?;

    let names = ["abs_rel", "sq_rel", "rms", "rms_log", "log10", "delta1", "delta2", "delta3"];
    let values = [r.abs_rel, r.sq_rel, r.rms, r.rms_log, r.log10, r.delta1, r.delta2, r.delta3];
    println!("{}", report::table(&names, &values));
    println!("n_valid = {}", r.n_valid);
    println!("scale = {}", r.scale);

    if let Some(csv) = &args.csv {
        let header = [
            "abs_rel", "sq_rel", "rms", "rms_log", "log10", "delta1", "delta2", "delta3",
            "n_valid", "scale",
        ];
        let mut row: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        row.push(r.n_valid.to_string());
        row.push(r.scale.to_string());
        report::write_csv(csv, &header, &row)?;
    }
    Ok(())
}
