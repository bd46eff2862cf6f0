use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{KneeResult, SweepRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub summary: String,
    /// gnuplot script with the data inlined.
    pub plot_script: String,
}

pub fn report(records: &[SweepRecord], knee: Option<&KneeResult>) -> Result<SweepReport> {
    if records.is_empty() {
        return Err(Error::data("no sweep records to report"));
    }
    Ok(SweepReport {
        summary: summary(records, knee),
        plot_script: plot_script(records, knee),
    })
}

fn summary(records: &[SweepRecord], knee: Option<&KneeResult>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>2} {:>11} {:>6} {:>12} {:>9} {:>9} {:>10} {:>10} {:>10}",
        "n", "angle_deg", "views", "depth_mse", "depth_acc", "cgh_acc", "t_est_s", "t_synth_s", "t_recon_s"
    );
    for r in records {
        let _ = writeln!(
            s,
            "{:>2} {:>11} {:>6} {:>12.6e} {:>9.6} {:>9.6} {:>10.3} {:>10.3} {:>10.3}",
            r.n,
            r.central_angle_deg,
            r.train_views,
            r.depth_mse,
            r.depth_acc,
            r.cgh_acc,
            r.t_estimate_s,
            r.t_synth_s,
            r.t_recon_s
        );
    }
    match knee {
        Some(k) => {
            let ratios: Vec<String> = k.improvement_ratios.iter().map(|r| format!("{r:.3}")).collect();
            let _ = writeln!(s, "\nMSE improvement ratios: {}", ratios.join(", "));
            let _ = writeln!(s, "knee at {}° (threshold {})", k.knee_angle_deg, k.threshold);
        }
        None => {
            let _ = writeln!(s, "\nno knee (fewer than two records)");
        }
    }
    s
}

fn plot_script(records: &[SweepRecord], knee: Option<&KneeResult>) -> String {
    let mut s = String::new();
    s.push_str("$sweep << EOD\n# angle_deg depth_mse depth_acc cgh_acc\n");
    for r in records {
        let _ = writeln!(
            s,
            "{} {} {} {}",
            r.central_angle_deg, r.depth_mse, r.depth_acc, r.cgh_acc
        );
    }
    s.push_str("EOD\n\n");
    s.push_str("set logscale x 2\nset xlabel 'central angle (deg)'\nset ylabel 'depth MSE'\n");
    s.push_str("set y2label 'ACC'\nset y2range [0:1.05]\nset ytics nomirror\nset y2tics\nset grid\n");
    s.push_str("set key outside\n");
    if let Some(k) = knee {
        let _ = writeln!(
            s,
            "set arrow from {0}, graph 0 to {0}, graph 1 nohead dashtype 2 lc rgb 'gray40'",
            k.knee_angle_deg
        );
        let _ = writeln!(s, "set label 'knee' at {}, graph 0.95 offset 0.5,0", k.knee_angle_deg);
    }
    s.push_str(
        "plot $sweep using 1:2 axes x1y1 with linespoints title 'depth MSE', \\\n     \
         $sweep using 1:3 axes x1y2 with linespoints title 'depth ACC', \\\n     \
         $sweep using 1:4 axes x1y2 with linespoints title 'CGH ACC'\n",
    );
    s
}

/// Writes `summary.txt` and `sweep.gp` into `dir`.
pub fn write_report(dir: &Path, rep: &SweepReport) -> Result<()> {
    crate::imageio::create_dir_all(dir)?;
    let summary = dir.join("summary.txt");
    std::fs::write(&summary, &rep.summary).map_err(|e| Error::io(&summary, e))?;
    let plot = dir.join("sweep.gp");
    std::fs::write(&plot, &rep.plot_script).map_err(|e| Error::io(&plot, e))
}
