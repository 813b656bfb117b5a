//! Runs an experiment from TOML the way the `ciblp` binary does and lists
//! what it writes.

use ciblp::cli::cmd_ser_sweep;
use ciblp::cli::config::ExperimentConfig;

const CONFIG: &str = r#"
k = 2
n_t = 4
n_block = 4
modulation = "16qam"
snr_db = [10.0, 20.0]
n_channels = 50
schemes = ["ci-blp", "zf"]
seed = 1
"#;

fn main() -> ciblp::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    let out = std::env::temp_dir().join("ciblp-experiment-config");
    cmd_ser_sweep(&cfg, &out)?;

    let mut files: Vec<_> = std::fs::read_dir(&out)
        .map_err(|e| ciblp::Error::Io(e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    files.sort();
    println!("wrote {}: {}", out.display(), files.join(", "));
    print!("{}", std::fs::read_to_string(out.join("ser_sweep.csv")).map_err(|e| ciblp::Error::Io(e.to_string()))?);
    Ok(())
}
