//! Output directory layout shared by every command: `manifest.json`,
//! `config.normalized`, and line-oriented sinks that are flushed even when a
//! run aborts midway.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use vpil_core::config::ConfigFile;

use crate::{runtime_err, Failure, RunArgs};

/// What the run was asked to do; enough to reproduce it bit for bit
/// together with the configuration file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub config_path: String,
    pub output_dir: String,
    pub seed: Option<u64>,
}

pub fn load_config(args: &RunArgs) -> Result<ConfigFile, Failure> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        Failure::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    ConfigFile::parse(&text).map_err(|e| Failure::Config(e.to_string()))
}

/// Creates the output directory and writes `manifest.json` and
/// `config.normalized` before the run starts, so even an aborted run
/// records what it was.
pub fn prepare_out_dir(
    command: &'static str,
    args: &RunArgs,
    file: &ConfigFile,
) -> Result<PathBuf, Failure> {
    let out = args.out.clone();
    fs::create_dir_all(&out).map_err(runtime_err)?;
    let manifest = RunManifest {
        command,
        config_path: args.config.display().to_string(),
        output_dir: args.out.display().to_string(),
        seed: args.seed,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    fs::write(out.join("config.normalized"), file.normalized()).map_err(runtime_err)?;
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime_err)?;
    text.push('\n');
    fs::write(path, text).map_err(runtime_err)
}

/// CSV sink; rows reach the file as they are produced, so an aborted run
/// keeps every completed row.
pub struct CsvSink {
    writer: BufWriter<File>,
}

impl CsvSink {
    pub fn create(path: &Path, header: &str) -> Result<Self, Failure> {
        let mut writer = BufWriter::new(File::create(path).map_err(runtime_err)?);
        writeln!(writer, "{header}").map_err(runtime_err)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, row: &str) -> io::Result<()> {
        writeln!(self.writer, "{row}")
    }

    pub fn flush(&mut self) -> Result<(), Failure> {
        self.writer.flush().map_err(runtime_err)
    }
}

/// JSON-lines sink, one serialized value per line.
pub struct JsonlSink {
    writer: BufWriter<File>,
}

impl JsonlSink {
    pub fn create(path: &Path) -> Result<Self, Failure> {
        Ok(Self {
            writer: BufWriter::new(File::create(path).map_err(runtime_err)?),
        })
    }

    pub fn line<T: Serialize>(&mut self, value: &T) -> Result<(), Failure> {
        let text = serde_json::to_string(value).map_err(runtime_err)?;
        writeln!(self.writer, "{text}").map_err(runtime_err)
    }

    pub fn flush(&mut self) -> Result<(), Failure> {
        self.writer.flush().map_err(runtime_err)
    }
}
