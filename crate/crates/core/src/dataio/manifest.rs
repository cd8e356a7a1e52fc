//! Dataset manifests and loading.
//!
//! A manifest is a CSV file with header `path,class[,lx1,ly1,…,lx5,ly5]`,
//! optionally preceded by `key=value` lines:
//!
//! ```text
//! k=7
//! size=32
//! classes=surprise;fear;disgust;happiness;sadness;anger;neutral
//! template=38.29 51.69 73.53 51.50 56.03 71.74 41.55 92.37 70.73 92.20
//! path,class,lx1,ly1,lx2,ly2,lx3,ly3,lx4,ly4,lx5,ly5
//! images/0001.pgm,3
//! images/0002.pgm,5,30.1,40.2,60.3,40.0,45.0,55.5,33.2,70.1,58.7,70.4
//! ```
//!
//! Relative image paths resolve against the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::align::{solve_affine, warp_affine, AlignmentTemplate, Landmarks5};
use super::image::{normalize, read_raw_tensor, resize_bilinear, RAW_TENSOR_MAGIC};
use super::netpbm::decode_pnm;
use crate::augment::LabeledImage;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// The seven basic expression classes, in canonical index order.
pub const EXPRESSIONS: [&str; 7] = [
    "surprise",
    "fear",
    "disgust",
    "happiness",
    "sadness",
    "anger",
    "neutral",
];

pub fn default_class_names(k: usize) -> Vec<String> {
    if k == EXPRESSIONS.len() {
        EXPRESSIONS.iter().map(|s| s.to_string()).collect()
    } else {
        (0..k).map(|i| format!("class{i}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRecord {
    pub path: PathBuf,
    pub class: usize,
    pub landmarks: Option<Landmarks5>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
    pub class_names: Vec<String>,
    /// Output side length; images are resized to `size×size` when set.
    pub size: Option<usize>,
    pub template: Option<AlignmentTemplate>,
    /// Directory that relative record paths resolve against.
    pub base_dir: PathBuf,
}

/// A loaded dataset in manifest order.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub items: Vec<LabeledImage>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }
}

const HEADER_KEYS: [&str; 4] = ["k", "size", "classes", "template"];

fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad number {t:?}")))
        })
        .collect()
}

impl DatasetManifest {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut k: Option<usize> = None;
        let mut names: Option<Vec<String>> = None;
        let mut size = None;
        let mut template_vals: Option<Vec<f64>> = None;

        let mut lines = text.lines().peekable();
        while let Some(line) = lines.peek().map(|l| l.trim()) {
            if line.is_empty() || line.starts_with('#') {
                lines.next();
                continue;
            }
            let Some((key, value)) = line
                .split_once('=')
                .filter(|(k, _)| HEADER_KEYS.contains(&k.trim()))
            else {
                break;
            };
            let bad = |what: &str| Error::Format(format!("bad {what} header line {line:?}"));
            match key.trim() {
                "k" => k = Some(value.trim().parse().map_err(|_| bad("k"))?),
                "size" => size = Some(value.trim().parse().map_err(|_| bad("size"))?),
                "classes" => names = Some(value.split(';').map(|s| s.trim().to_string()).collect()),
                _ => template_vals = Some(parse_reals(value)?),
            }
            lines.next();
        }

        let class_names = match (k, names) {
            (Some(k), Some(n)) if n.len() != k => {
                return Err(Error::Format(format!(
                    "k={k} but {} class names given",
                    n.len()
                )))
            }
            (_, Some(n)) => n,
            (Some(k), None) => default_class_names(k),
            (None, None) => default_class_names(EXPRESSIONS.len()),
        };
        if class_names.len() < 2 {
            return Err(Error::Format("a dataset needs at least two classes".into()));
        }
        if size == Some(0) {
            return Err(Error::Format("size must be positive".into()));
        }
        let template = match template_vals {
            None => None,
            Some(v) => {
                let s = size.ok_or_else(|| {
                    Error::Format("template header requires a size header".into())
                })?;
                let lm = Landmarks5::from_flat(&v)?;
                Some(AlignmentTemplate::new(*lm.points(), s)?)
            }
        };

        let body: String = lines.map(|l| format!("{l}\n")).collect();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| Error::Format(e.to_string()))?
            .clone();
        if !headers.is_empty()
            && (headers.get(0) != Some("path") || headers.get(1) != Some("class"))
        {
            return Err(Error::Format(format!(
                "manifest header must start with path,class; got {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let k = class_names.len();
        let mut records = Vec::new();
        for (n, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| Error::Format(e.to_string()))?;
            let record = format!("record {} ({})", n + 1, row.get(0).unwrap_or(""));
            if row.len() != 2 && row.len() != 12 {
                return Err(Error::load(
                    record,
                    format!("expected 2 or 12 fields, got {}", row.len()),
                ));
            }
            let class: usize = row[1]
                .parse()
                .map_err(|_| Error::load(&record, format!("bad class index {:?}", &row[1])))?;
            if class >= k {
                return Err(Error::load(
                    record,
                    format!("class index {class} out of range for {k} classes"),
                ));
            }
            let landmarks = if row.len() == 12 {
                let v: Vec<f64> = row
                    .iter()
                    .skip(2)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::load(&record, "bad landmark coordinate"))?;
                Some(Landmarks5::from_flat(&v).map_err(|e| Error::load(&record, e))?)
            } else {
                None
            };
            records.push(ManifestRecord {
                path: PathBuf::from(&row[0]),
                class,
                landmarks,
            });
        }
        Ok(DatasetManifest {
            records,
            class_names,
            size,
            template,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "k={}", self.class_names.len());
        if let Some(size) = self.size {
            let _ = writeln!(s, "size={size}");
        }
        let _ = writeln!(s, "classes={}", self.class_names.join(";"));
        if let Some(t) = &self.template {
            let vals: Vec<String> = t
                .as_landmarks()
                .flat()
                .iter()
                .map(|v| v.to_string())
                .collect();
            let _ = writeln!(s, "template={}", vals.join(" "));
        }
        let with_lm = self.records.iter().any(|r| r.landmarks.is_some());
        s.push_str("path,class");
        if with_lm {
            s.push_str(",lx1,ly1,lx2,ly2,lx3,ly3,lx4,ly4,lx5,ly5");
        }
        s.push('\n');
        for r in &self.records {
            let _ = write!(s, "{},{}", r.path.display(), r.class);
            if let Some(lm) = &r.landmarks {
                for v in lm.flat() {
                    let _ = write!(s, ",{v}");
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        if record.path.is_absolute() {
            record.path.clone()
        } else {
            self.base_dir.join(&record.path)
        }
    }
}

/// Decode a NetPBM or raw tensor file into an `H×W×C` tensor in `[0, 1]`.
pub fn decode_image(bytes: &[u8]) -> Result<Tensor> {
    if bytes.starts_with(RAW_TENSOR_MAGIC) {
        let t = read_raw_tensor(&mut &bytes[..])?;
        if t.ndim() != 3 {
            return Err(Error::Format(format!(
                "raw image must be H×W×C, got {:?}",
                t.shape()
            )));
        }
        if t.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Format("raw image values must lie in [0, 1]".into()));
        }
        return Ok(t);
    }
    let img = decode_pnm(bytes)?;
    normalize(&img.data, (img.height, img.width, img.channels), img.maxval)
}

fn load_record(manifest: &DatasetManifest, index: usize) -> Result<LabeledImage> {
    let rec = &manifest.records[index];
    let path = manifest.resolve(rec);
    let name = format!("record {} ({})", index + 1, rec.path.display());
    let bytes = fs::read(&path).map_err(|e| Error::load(&name, e))?;
    let mut img = decode_image(&bytes).map_err(|e| Error::load(&name, e))?;
    if let Some(lm) = &rec.landmarks {
        let template = match (&manifest.template, manifest.size) {
            (Some(t), _) => *t,
            (None, Some(s)) => AlignmentTemplate::frontal(s).map_err(|e| Error::load(&name, e))?,
            (None, None) => {
                return Err(Error::load(
                    &name,
                    "landmarks given but the manifest has no size",
                ))
            }
        };
        let a = solve_affine(lm, &template).map_err(|e| Error::load(&name, e))?;
        img = warp_affine(&img, &a, template.size()).map_err(|e| Error::load(&name, e))?;
    }
    if let Some(s) = manifest.size {
        if img.shape()[0] != s || img.shape()[1] != s {
            img = resize_bilinear(&img, s).map_err(|e| Error::load(&name, e))?;
        }
    }
    // bilinear weights can overshoot 1 by an ulp
    let img = img.map(|v| v.clamp(0.0, 1.0))?;
    LabeledImage::with_class(img, rec.class, manifest.num_classes())
        .map_err(|e| Error::load(&name, e))
}

/// Decode, align, resize and normalise every record, in manifest order.
pub fn load_manifest(manifest: &DatasetManifest) -> Result<Dataset> {
    let items: Vec<LabeledImage> = (0..manifest.records.len())
        .into_par_iter()
        .map(|i| load_record(manifest, i))
        .collect::<Result<_>>()?;
    if let Some(first) = items.first() {
        let shape = first.pixels().shape();
        if let Some((i, _)) = items
            .iter()
            .enumerate()
            .find(|(_, it)| it.pixels().shape() != shape)
        {
            return Err(Error::load(
                format!("record {} ({})", i + 1, manifest.records[i].path.display()),
                format!("image shape differs from the first record's {shape:?}"),
            ));
        }
    }
    Ok(Dataset {
        items,
        class_names: manifest.class_names.clone(),
    })
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let manifest = DatasetManifest::read(path)?;
    load_manifest(&manifest)
}
