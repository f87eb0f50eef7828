//! Supervised datasets for learned channel estimators.
//!
//! Each split writes seven raw little-endian `f32` blobs named
//! `{split}_{tensor}.f32` next to a `manifest.json`. Complex tensors store
//! the real plane first and the imaginary plane second:
//!
//! | tensor                 | per-sample shape | content                    |
//! |------------------------|------------------|----------------------------|
//! | `inputs_direct`        | `2 × K × N`      | `Ỹ₁`, row-major planes     |
//! | `labels_direct_ls`     | `2K`             | LS `ĥ`                     |
//! | `labels_direct_true`   | `2K`             | `h`                        |
//! | `inputs_cascaded`      | `2 × K × N`      | `Ỹ₂`, row-major planes     |
//! | `labels_cascaded_ls`   | `2KN`            | LS `vec(Ĥ)` (column-major) |
//! | `labels_cascaded_true` | `2KN`            | `vec(H_biu)`               |
//! | `snr_db`               | `1`              | per-sample SNR             |

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::harness::{simulate_trial, snr_to_noise};
use crate::linalg::{CMat, CVec};
use crate::pilot::{PilotSchedule, TransmitOptions};
use crate::rng::{self, Domain};
use crate::system::LinkGains;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;
const CHUNK: usize = 512;

pub const TENSORS: [&str; 7] = [
    "inputs_direct",
    "labels_direct_ls",
    "labels_direct_true",
    "inputs_cascaded",
    "labels_cascaded_ls",
    "labels_cascaded_true",
    "snr_db",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSizes {
    pub train: usize,
    pub validate: usize,
    pub test: usize,
}

impl Default for DatasetSizes {
    /// 10 000 samples split 90/10, plus 5 000 freshly drawn test samples.
    fn default() -> Self {
        DatasetSizes {
            train: 9000,
            validate: 1000,
            test: 5000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SnrPolicy {
    /// The noise powers in the configuration, for every sample.
    #[default]
    FromConfig,
    Fixed {
        snr_db: f64,
    },
    /// Per-sample SNR drawn uniformly in dB.
    UniformRange {
        min_db: f64,
        max_db: f64,
    },
    Noiseless,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub dtype: String,
    pub endianness: String,
    pub complex_order: String,
    pub matrix_order: String,
    pub vector_order: String,
}

impl Default for Layout {
    fn default() -> Self {
        Layout {
            dtype: "float32".into(),
            endianness: "little".into(),
            complex_order: "real plane, then imaginary plane".into(),
            matrix_order: "sample, plane, row (K), column (N)".into(),
            vector_order: "sample, plane, column-major vec index".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub split: String,
    pub tensor: String,
    pub path: String,
    /// `[count, ...per-sample shape]`
    pub shape: Vec<usize>,
    pub offset: u64,
    pub byte_length: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub counts: DatasetSizes,
    pub snr_policy: SnrPolicy,
    pub seed: u64,
    pub layout: Layout,
    pub config: SystemConfig,
    pub files: Vec<FileEntry>,
}

impl DatasetManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn entry(&self, split: &str, tensor: &str) -> Option<&FileEntry> {
        self.files
            .iter()
            .find(|f| f.split == split && f.tensor == tensor)
    }
}

/// Read a whole blob back as `f32`.
pub fn read_tensor(dir: &Path, entry: &FileEntry) -> Result<Vec<f32>> {
    let path = dir.join(&entry.path);
    let mut bytes = Vec::new();
    File::open(&path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(&path, e))?;
    if bytes.len() as u64 != entry.byte_length {
        return Err(Error::Shape(format!(
            "{} holds {} bytes, manifest says {}",
            path.display(),
            bytes.len(),
            entry.byte_length
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn split_domain(split: &str) -> Domain {
    match split {
        "train" => Domain::Train,
        "validate" => Domain::Validate,
        _ => Domain::Test,
    }
}

fn push_matrix(out: &mut Vec<f32>, m: &CMat) {
    for part in [|z: &crate::C64| z.re, |z: &crate::C64| z.im] {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.push(part(&m[(r, c)]) as f32);
            }
        }
    }
}

fn push_vector<'a>(out: &mut Vec<f32>, v: impl Iterator<Item = &'a crate::C64> + Clone) {
    out.extend(v.clone().map(|z| z.re as f32));
    out.extend(v.map(|z| z.im as f32));
}

/// One sample's seven tensors, in [`TENSORS`] order.
type Sample = [Vec<f32>; 7];

fn make_sample(
    cfg: &SystemConfig,
    sched: &PilotSchedule,
    policy: SnrPolicy,
    domain: Domain,
    i: usize,
) -> Result<Sample> {
    let mut r = rng::stream(domain, cfg.seed, 0, i as u64);
    let mut cfg = cfg.clone();
    let mut opts = TransmitOptions::default();
    let snr = match policy {
        SnrPolicy::FromConfig => {
            let g = LinkGains::from_config(&cfg)?;
            10.0 * (cfg.beta * cfg.p_t * g.ub / cfg.sigma_b2).log10()
        }
        SnrPolicy::Fixed { snr_db } => snr_db,
        SnrPolicy::UniformRange { min_db, max_db } => {
            min_db + (max_db - min_db) * r.random::<f64>()
        }
        SnrPolicy::Noiseless => {
            opts = TransmitOptions::noiseless();
            f64::INFINITY
        }
    };
    if matches!(
        policy,
        SnrPolicy::Fixed { .. } | SnrPolicy::UniformRange { .. }
    ) {
        let (si, sb) = snr_to_noise(&cfg, snr)?;
        cfg.sigma_i2 = si;
        cfg.sigma_b2 = sb;
    }
    let t = simulate_trial(&cfg, sched, opts, &mut r)?;
    let frame_inputs = |y: &CMat| {
        let mut v = Vec::with_capacity(2 * y.len());
        push_matrix(&mut v, y);
        v
    };
    let vector = |v: &CVec| {
        let mut out = Vec::with_capacity(2 * v.len());
        push_vector(&mut out, v.iter());
        out
    };
    Ok([
        frame_inputs(&t.frame.ytilde1),
        vector(&t.direct.h_hat),
        vector(&t.channel.h),
        frame_inputs(&t.frame.ytilde2),
        vector(&t.cascaded.h_hat_vec),
        vector(&crate::linalg::vec_of(&t.channel.h_biu)),
        vec![snr as f32],
    ])
}

fn validate(cfg: &SystemConfig, sizes: &DatasetSizes, policy: SnrPolicy) -> Result<()> {
    cfg.validate()?;
    if cfg.k % 8 != 0 || cfg.n % 8 != 0 {
        return Err(Error::Config(format!(
            "K = {} and N = {} must be divisible by 8",
            cfg.k, cfg.n
        )));
    }
    if cfg.pilot_len() != cfg.n {
        return Err(Error::Config("dataset inputs require Q = N".into()));
    }
    if sizes.train == 0 || sizes.validate == 0 || sizes.test == 0 {
        return Err(Error::Config(
            "every split needs at least one sample".into(),
        ));
    }
    match policy {
        SnrPolicy::Fixed { snr_db } if !snr_db.is_finite() => {
            Err(Error::Config("fixed SNR must be finite".into()))
        }
        SnrPolicy::UniformRange { min_db, max_db }
            if !(min_db.is_finite() && max_db.is_finite() && min_db <= max_db) =>
        {
            Err(Error::Config(format!(
                "invalid SNR range [{min_db}, {max_db}]"
            )))
        }
        _ => Ok(()),
    }
}

pub fn export_dataset(
    cfg: &SystemConfig,
    sizes: DatasetSizes,
    policy: SnrPolicy,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    validate(cfg, &sizes, policy)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let sched = PilotSchedule::build(cfg)?;
    let (k, n) = (cfg.k, cfg.n);
    let shapes: [Vec<usize>; 7] = [
        vec![2, k, n],
        vec![2 * k],
        vec![2 * k],
        vec![2, k, n],
        vec![2 * k * n],
        vec![2 * k * n],
        vec![],
    ];

    let mut files = Vec::new();
    for (split, count) in [
        ("train", sizes.train),
        ("validate", sizes.validate),
        ("test", sizes.test),
    ] {
        let domain = split_domain(split);
        let paths: Vec<PathBuf> = TENSORS
            .iter()
            .map(|t| out_dir.join(format!("{split}_{t}.f32")))
            .collect();
        let mut writers = paths
            .iter()
            .map(|p| {
                File::create(p)
                    .map(BufWriter::new)
                    .map_err(|e| Error::io(p, e))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut start = 0;
        while start < count {
            let end = (start + CHUNK).min(count);
            let samples = (start..end)
                .into_par_iter()
                .map(|i| make_sample(cfg, &sched, policy, domain, i))
                .collect::<Result<Vec<Sample>>>()?;
            for s in &samples {
                for ((w, data), p) in writers.iter_mut().zip(s).zip(&paths) {
                    for x in data {
                        w.write_all(&x.to_le_bytes()).map_err(|e| Error::io(p, e))?;
                    }
                }
            }
            start = end;
        }
        for (w, p) in writers.iter_mut().zip(&paths) {
            w.flush().map_err(|e| Error::io(p, e))?;
        }
        for ((tensor, shape), p) in TENSORS.iter().zip(&shapes).zip(&paths) {
            let per_sample: usize = shape.iter().product();
            let mut full = vec![count];
            full.extend(shape);
            files.push(FileEntry {
                split: split.into(),
                tensor: (*tensor).into(),
                path: p.file_name().unwrap().to_string_lossy().into_owned(),
                shape: full,
                offset: 0,
                byte_length: (count * per_sample * 4) as u64,
            });
        }
    }

    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        k,
        n,
        counts: sizes,
        snr_policy: policy,
        seed: cfg.seed,
        layout: Layout::default(),
        config: cfg.clone(),
        files,
    };
    let path = out_dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
