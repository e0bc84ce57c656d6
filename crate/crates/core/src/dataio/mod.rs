//! Session files, configuration files and report tables.

mod config;
mod report;
mod session;

pub use config::{
    read_accel_params, read_calibration_options, read_gyro_params, read_sim_config, read_truth, truth_path,
    write_params, write_truth, TruthFile,
};
pub use report::Table;
pub use session::{
    fmt_num, read_recording, read_session, write_recording, write_session, Recording, Row, Segment, SegmentKind,
    FORMAT_NAME, FORMAT_VERSION,
};

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file beside `path` and renames it into place,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
