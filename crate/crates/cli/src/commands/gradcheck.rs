use aniso_lobe::gradcheck::{registry, run_check, CheckOptions, REL_TOLERANCE};

use super::prepare;
use crate::cells;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Csv;

/// Runs every registered analytic-vs-finite-difference check and writes
/// `gradcheck.csv` and `gradcheck.txt`. `flip_sign` negates one check's
/// analytic gradient to demonstrate that the harness catches the error.
pub fn run(cfg: RunConfig, flip_sign: Option<String>) -> Result<(), CliError> {
    let checks = registry();
    let flip = match flip_sign {
        None => None,
        Some(name) => Some(
            checks
                .iter()
                .map(|c| c.name)
                .find(|n| *n == name)
                .ok_or_else(|| CliError::Usage(format!("no gradient check named `{name}`")))?,
        ),
    };
    let mut out = prepare(&cfg)?;
    let opts = CheckOptions {
        seed: cfg.seed,
        flip_sign_of: flip,
    };

    let mut table = Csv::new(&["name", "family", "coords_checked", "max_rel_err", "worst_coord", "passed"]);
    let mut report = format!("gradient checks (central differences, tolerance {REL_TOLERANCE:e} relative)\n");
    let mut failed = Vec::new();
    let mut families = Vec::new();
    for check in &checks {
        let o = run_check(check, &opts)?;
        table.row(&cells![o.name, o.family, o.coords_checked, o.max_rel_err, o.worst_coord, o.passed]);
        report += &format!(
            "{:<4} {:<28} {:<17} {:>5} coords  max rel err {:.3e}\n",
            if o.passed { "ok" } else { "FAIL" },
            o.name,
            o.family,
            o.coords_checked,
            o.max_rel_err
        );
        if !o.passed {
            failed.push(o.name);
        }
        if !families.contains(&o.family) {
            families.push(o.family);
        }
    }
    report += &format!("{} checks across {} families, {} failed\n", checks.len(), families.len(), failed.len());
    out.csv("gradcheck.csv", &table)?;
    out.write("gradcheck.txt", report.as_bytes())?;
    print!("{report}");
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("gradient mismatch in {}", failed.join(", "))))
    }
}
