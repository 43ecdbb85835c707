use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use landmark_core::io::{self, BoxSpec, CloudFormat};
use landmark_core::search::{find_in_prepared, PreparedScene};
use landmark_core::synth::{self, Suite};
use landmark_core::{CaptureMetadata, Error, Landmark, PointCloud, SearchParams};

use crate::report::{FindReport, LandmarkResult};
use crate::{Command, OutputFormat};

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Capture { scene, bbox, name, out } => capture(&scene, &bbox, &name, &out),
        Command::Find {
            scene,
            landmarks,
            params,
            seed,
            out,
            format,
        } => {
            let report = find(&scene, &landmarks, params.as_deref(), seed)?;
            let bytes = match format {
                OutputFormat::Json => report.to_json(),
                OutputFormat::Table => report.to_table().into_bytes(),
            };
            emit(out.as_deref(), &bytes)
        }
        Command::Eval { suite, params, out } => eval(&suite, params.as_deref(), &out),
        Command::DemoSuite { out } => {
            let mut bytes = serde_json::to_vec_pretty(&synth::catalog::demo_suite())?;
            bytes.push(b'\n');
            write_file(&out, &bytes)
        }
        Command::Serve {
            scene,
            port,
            host,
            landmark_dir,
        } => crate::server::serve(&scene, &host, port, &landmark_dir),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_file(path, bytes),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Reads a PCD or PLY file, chosen by extension.
pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let format =
        CloudFormat::from_path(path).ok_or_else(|| anyhow!("{}: unknown cloud format (expected .pcd or .ply)", path.display()))?;
    let loaded = io::read_point_cloud(&read_file(path)?, format).with_context(|| format!("parsing {}", path.display()))?;
    if loaded.dropped_non_finite > 0 {
        eprintln!(
            "{}: skipped {} non-finite points",
            path.display(),
            loaded.dropped_non_finite
        );
    }
    Ok(loaded.cloud)
}

pub fn load_params_file(path: Option<&Path>) -> Result<SearchParams> {
    match path {
        Some(p) => io::load_params(&read_file(p)?).with_context(|| format!("parsing {}", p.display())),
        None => Ok(SearchParams::default()),
    }
}

pub fn scene_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn now_iso8601() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn capture(scene: &Path, bbox: &BoxSpec, name: &str, out: &Path) -> Result<()> {
    let cloud = load_cloud(scene)?;
    let metadata = CaptureMetadata {
        scene_id: scene_id(scene),
        created_at: now_iso8601(),
    };
    let landmark = Landmark::capture(name, &cloud, bbox.to_box()?, metadata)?;
    write_file(out, &io::save_landmark(&landmark))?;
    eprintln!("captured {} points into {}", landmark.cloud().len(), out.display());
    Ok(())
}

/// Searches for every landmark in the scene. A scene with nothing inside the
/// workspace yields empty match lists.
pub fn find(scene: &Path, landmarks: &[PathBuf], params: Option<&Path>, seed: Option<u64>) -> Result<FindReport> {
    let mut params = load_params_file(params)?;
    if let Some(seed) = seed {
        params.seed = seed;
    }
    let landmarks = landmarks
        .iter()
        .map(|p| io::load_landmark(&read_file(p)?).with_context(|| format!("parsing {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let cloud = load_cloud(scene)?;
    let prepared = match PreparedScene::new(&cloud, &params) {
        Ok(p) => Some(p),
        Err(Error::SceneEmptyAfterCrop) => None,
        Err(e) => return Err(e.into()),
    };
    let mut results = Vec::with_capacity(landmarks.len());
    for landmark in &landmarks {
        let matches = match &prepared {
            Some(p) => find_in_prepared(p, landmark, &params)?,
            None => Vec::new(),
        };
        results.push(LandmarkResult {
            landmark: landmark.name().to_string(),
            matches,
        });
    }
    Ok(FindReport { results })
}

pub fn eval(suite: &Path, params: Option<&Path>, out: &Path) -> Result<()> {
    let params = load_params_file(params)?;
    let suite: Suite = serde_json::from_slice(&read_file(suite)?).with_context(|| format!("parsing {}", suite.display()))?;
    let table_path = out.with_extension("txt");
    if table_path == out {
        bail!("--out must not end in .txt");
    }
    let run = synth::run_benchmark(&suite, &params)?;
    let mut json = serde_json::to_vec_pretty(&run.report)?;
    json.push(b'\n');
    write_file(out, &json)?;
    let table = run.report.to_string();
    write_file(&table_path, table.as_bytes())?;
    print!("{table}");
    Ok(())
}
