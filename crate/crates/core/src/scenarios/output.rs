use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::report::AssertionReport;
use crate::analysis::Trajectory;
use crate::Result;

/// Version of the CSV and report layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Write `contents` to `path` through a sibling temporary file and a rename,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// CSV with header `t,x1..xN,z1..zK,u1..uM,d1..dM,h1..hQ,status`.
///
/// Every `stride`-th sample is written, plus the last one. Rows carry status
/// `ok` except the final row, which carries the run's final status tag.
pub fn trajectory_csv(traj: &Trajectory, stride: usize) -> String {
    let stride = stride.max(1);
    let n = traj.base_dim;
    let k = traj.states.first().map_or(0, |x| x.len() - n);
    let m = traj.inputs.first().map_or(0, |u| u.len());
    let md = traj.disturbances.first().map_or(0, |d| d.len());
    let q = traj.labels.len();

    let mut out = String::new();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=k).map(|i| format!("z{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.extend((1..=md).map(|i| format!("d{i}")));
    header.extend((1..=q).map(|i| format!("h{i}")));
    header.push("status".into());
    out.push_str(&header.join(","));
    out.push('\n');

    let last = traj.len().saturating_sub(1);
    for i in (0..traj.len()).filter(|&i| i % stride == 0 || i == last) {
        let _ = write!(out, "{}", traj.times[i]);
        for v in traj.states[i].iter().chain(traj.inputs[i].iter()).chain(traj.disturbances[i].iter()) {
            let _ = write!(out, ",{v}");
        }
        for h in &traj.margins[i] {
            let _ = write!(out, ",{h}");
        }
        let status = if i == last { traj.status.tag() } else { "ok" };
        let _ = writeln!(out, ",{status}");
    }
    out
}

/// Tab-separated assertion report.
pub fn report_text(report: &AssertionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema_version\t{SCHEMA_VERSION}");
    let _ = writeln!(out, "scenario\t{}", report.scenario);
    let _ = writeln!(out, "seed\t{}", report.seed);
    let _ = writeln!(out, "id\texpected\tobserved\ttolerance\tverdict");
    for a in &report.assertions {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            a.id,
            clean(&a.expected),
            clean(&a.observed),
            clean(&a.tolerance),
            a.verdict
        );
    }
    let _ = writeln!(out, "summary\t{}", report.verdict());
    out
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n'], " ")
}
