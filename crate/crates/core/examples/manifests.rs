//! Runs every manifest under `manifests/` except the slow confinement one as a sweep into a temp dir.

use std::path::Path;

use irrtorus::cli::{sweep, ExperimentManifest};

fn main() -> irrtorus::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("manifests");
    let out = std::env::temp_dir().join("irrtorus-example-sweep");
    let mut manifests = Vec::new();
    let mut paths: Vec<_> = std::fs::read_dir(&dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.sort();
    for path in paths {
        let mut m = ExperimentManifest::from_file(&path)?;
        if m.command.as_str() == "verify-theorem" {
            continue;
        }
        m.output_dir = out.join(&m.name);
        manifests.push(m);
    }
    let result = sweep(&manifests, &out.join("sweep"), 1)?;
    for r in &result.runs {
        println!("{:<18} {:<14} exit {}", r.name, r.command.as_str(), r.status.code());
    }
    println!("summary: {}", out.join("sweep/sweep_summary.csv").display());
    Ok(())
}
