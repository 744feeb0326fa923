use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use dsproj_core::{feasibility_check, pattern_of, FeasibilityCertificate, Pattern};

use crate::input::read_symmetric;
use crate::{ReadArgs, EXIT_INFEASIBLE, EXIT_OK};

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub read: ReadArgs,
}

/// Verdict followed by the certificate, all indices 1-based.
pub fn report(cert: &FeasibilityCertificate, pattern: &Pattern) -> String {
    if cert.feasible {
        let pairs: Vec<String> = cert
            .matching
            .iter()
            .flatten()
            .map(|&(i, j)| format!("({},{})", i + 1, j + 1))
            .collect();
        format!("feasible\nmatching {}\n", pairs.join(","))
    } else {
        let rows = cert.deficient_set.clone().unwrap_or_default();
        let mut cols: Vec<usize> = rows.iter().flat_map(|&i| pattern.neighbors(i).iter().copied()).collect();
        cols.sort_unstable();
        cols.dedup();
        let fmt = |v: &[usize]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")
            }
        };
        format!(
            "infeasible\ndeficient rows {}\ntheir columns {}\n",
            fmt(&rows),
            fmt(&cols)
        )
    }
}

pub fn run(args: &CheckArgs) -> Result<u8> {
    let m = read_symmetric(&args.input, &args.read.options())?;
    let pattern = pattern_of(&m);
    let cert = feasibility_check(&pattern);
    print!("{}", report(&cert, &pattern));
    Ok(if cert.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}
