//! On-disk result store: one directory per run.
//!
//! ```text
//! metadata.txt      key=value lines: version, config echo (config.*), solver, timings
//! eigenvalues.csv   index,energy,excitation,residual
//! eigenvectors.bin  "TCV1", u32 rows, u32 cols, 4 zero bytes, then f64 LE column-major
//! states.csv        per-state observables
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::RunConfig;
use crate::eigen::{SolverMeta, SolverMethod, Spectrum};
use crate::error::{Error, Result};

pub const VECTOR_MAGIC: &[u8; 4] = b"TCV1";
pub const VECTOR_HEADER_LEN: usize = 16;

pub const METADATA_FILE: &str = "metadata.txt";
pub const EIGENVALUES_FILE: &str = "eigenvalues.csv";
pub const EIGENVECTORS_FILE: &str = "eigenvectors.bin";
pub const STATES_FILE: &str = "states.csv";

/// Writes a column-major matrix with the `TCV1` header.
pub fn write_vectors<W: Write>(mut w: W, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::Dimension {
            expected: rows * cols,
            got: data.len(),
        });
    }
    let r = u32::try_from(rows).map_err(|_| Error::InvalidInput("too many rows".into()))?;
    let c = u32::try_from(cols).map_err(|_| Error::InvalidInput("too many columns".into()))?;
    w.write_all(VECTOR_MAGIC)?;
    w.write_all(&r.to_le_bytes())?;
    w.write_all(&c.to_le_bytes())?;
    w.write_all(&[0u8; 4])?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a `TCV1` buffer into `(rows, cols, data)`.
pub fn read_vectors(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bad = |msg: &str| Error::Format {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    if bytes.len() < VECTOR_HEADER_LEN || &bytes[..4] != VECTOR_MAGIC {
        return Err(bad("missing TCV1 header"));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[VECTOR_HEADER_LEN..];
    if payload.len() != rows * cols * 8 {
        return Err(bad("payload length does not match header dimensions"));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows, cols, data))
}

/// Creates `base/name`, or `base/name-<timestamp>` if that already exists.
pub fn create_run_dir(base: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(base)?;
    let first = base.join(name);
    if fs::create_dir(&first).is_ok() {
        return Ok(first);
    }
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    for attempt in 0u32.. {
        let candidate = if attempt == 0 {
            base.join(format!("{name}-{stamp}"))
        } else {
            base.join(format!("{name}-{stamp}-{attempt}"))
        };
        match fs::create_dir(&candidate) {
            Ok(()) => return Ok(candidate),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

/// Shortest round-trip decimal form, switching to exponent notation for
/// magnitudes outside `[1e-4, 1e15)` so tiny values stay readable.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn eigenvalues_csv(spectrum: &Spectrum) -> String {
    let mut s = String::from("index,energy,excitation,residual\n");
    for i in 0..spectrum.len() {
        let _ = writeln!(
            s,
            "{i},{},{},{}",
            fmt_f64(spectrum.eigenvalues[i]),
            fmt_f64(spectrum.excitation(i)),
            fmt_f64(spectrum.residual_norms[i])
        );
    }
    s
}

/// Everything written to a run directory, besides the observables tables.
pub struct StoreContents<'a> {
    pub config: &'a RunConfig,
    pub spectrum: &'a Spectrum,
    /// Extra metadata (timings, verification), written after the config echo.
    pub extra: Vec<(String, String)>,
}

pub fn write_store(dir: &Path, contents: &StoreContents<'_>) -> Result<()> {
    let spectrum = contents.spectrum;
    let mut meta = String::new();
    let _ = writeln!(meta, "version={}", env!("CARGO_PKG_VERSION"));
    for line in contents.config.to_text().lines() {
        let _ = writeln!(meta, "config.{line}");
    }
    let m = &spectrum.meta;
    let _ = writeln!(meta, "solver.method={}", m.method);
    let _ = writeln!(meta, "solver.iterations={}", m.iterations);
    if let Some(seed) = m.seed {
        let _ = writeln!(meta, "solver.seed={seed}");
    }
    let _ = writeln!(meta, "solver.tolerance={}", fmt_f64(m.tolerance));
    if let Some(shift) = m.shift {
        let _ = writeln!(meta, "solver.shift={}", fmt_f64(shift));
    }
    let _ = writeln!(meta, "solver.converged={}", m.converged);
    let _ = writeln!(meta, "solver.restarts={}", m.restarts);
    let _ = writeln!(meta, "spectrum.count={}", spectrum.len());
    let _ = writeln!(meta, "spectrum.dim={}", spectrum.dim());
    let _ = writeln!(meta, "spectrum.measure={}", fmt_f64(spectrum.measure));
    for (k, v) in &contents.extra {
        let _ = writeln!(meta, "{k}={v}");
    }
    fs::write(dir.join(METADATA_FILE), meta)?;
    fs::write(dir.join(EIGENVALUES_FILE), eigenvalues_csv(spectrum))?;
    let file = fs::File::create(dir.join(EIGENVECTORS_FILE))?;
    write_vectors(
        BufWriter::new(file),
        spectrum.dim(),
        spectrum.len(),
        spectrum.eigenvectors_column_major(),
    )?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LoadedStore {
    pub dir: PathBuf,
    pub config: RunConfig,
    pub spectrum: Spectrum,
    pub metadata: BTreeMap<String, String>,
}

fn parse_metadata(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn load_store(dir: &Path) -> Result<LoadedStore> {
    let missing = || Error::MissingStore(dir.to_path_buf());
    for f in [METADATA_FILE, EIGENVALUES_FILE, EIGENVECTORS_FILE] {
        if !dir.join(f).is_file() {
            return Err(missing());
        }
    }
    let meta_path = dir.join(METADATA_FILE);
    let metadata = parse_metadata(&fs::read_to_string(&meta_path)?);
    let echo: String = metadata
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("config.").map(|k| format!("{k}={v}\n")))
        .collect();
    let config = RunConfig::parse(&echo)?;

    let bad = |path: &Path, msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    let get = |key: &str| {
        metadata
            .get(key)
            .ok_or_else(|| bad(&meta_path, format!("missing `{key}`")))
    };
    let method = match get("solver.method")?.as_str() {
        "dense" => SolverMethod::Dense,
        "lanczos" => SolverMethod::Lanczos,
        "shift-invert-lanczos" => SolverMethod::ShiftInvertLanczos,
        other => return Err(bad(&meta_path, format!("unknown solver method `{other}`"))),
    };
    let num = |key: &str| -> Result<f64> {
        get(key)?
            .parse::<f64>()
            .map_err(|_| bad(&meta_path, format!("`{key}` is not a number")))
    };
    let meta = SolverMeta {
        method,
        iterations: num("solver.iterations")? as usize,
        seed: metadata.get("solver.seed").and_then(|s| s.parse().ok()),
        tolerance: num("solver.tolerance")?,
        shift: metadata.get("solver.shift").and_then(|s| s.parse().ok()),
        converged: get("solver.converged")? == "true",
        restarts: num("solver.restarts")? as usize,
    };
    let measure = num("spectrum.measure")?;

    let ev_path = dir.join(EIGENVALUES_FILE);
    let mut values = Vec::new();
    let mut residuals = Vec::new();
    for (i, line) in fs::read_to_string(&ev_path)?.lines().skip(1).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(&ev_path, format!("line {} has {} fields", i + 2, fields.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(&ev_path, format!("line {}: bad number `{s}`", i + 2)))
        };
        values.push(parse(fields[1])?);
        residuals.push(parse(fields[3])?);
    }
    let vec_path = dir.join(EIGENVECTORS_FILE);
    let (rows, cols, data) = read_vectors(&fs::read(&vec_path)?, &vec_path)?;
    if cols != values.len() {
        return Err(bad(
            &vec_path,
            format!("{cols} vectors but {} eigenvalues", values.len()),
        ));
    }
    let spectrum = Spectrum::from_stored(values, data, rows, residuals, meta, measure)?;
    Ok(LoadedStore {
        dir: dir.to_path_buf(),
        config,
        spectrum,
        metadata,
    })
}
