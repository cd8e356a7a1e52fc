//! Procedural expression glyphs: a deterministic, desk-scale stand-in for a
//! facial-expression dataset.
//!
//! Each class is a parametric face schematic (eye opening, brow height and
//! tilt, mouth curvature, opening, width and skew). Samples jitter those
//! parameters and the face identity, then pose the face with a random
//! rotation, scale and translation before adding Gaussian pixel noise, so
//! pairs drawn for mixing are usually misaligned.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::align::{Affine, Landmarks5, Point};
use super::image::normalize;
use super::manifest::{default_class_names, DatasetManifest, ManifestRecord};
use super::netpbm::{encode_pnm, PnmImage};
use crate::augment::LabeledImage;
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Per-class test-set supports of a large in-the-wild expression corpus,
/// in [`super::EXPRESSIONS`] order; used as the `raf` imbalance profile.
pub const RAF_SUPPORTS: [f64; 7] = [329.0, 74.0, 160.0, 1185.0, 478.0, 162.0, 680.0];

/// Train:eval size ratio.
pub const TRAIN_EVAL_RATIO: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    /// Mean number of training samples per class.
    pub per_class: usize,
    pub size: usize,
    pub seed: u64,
    /// Relative class proportions; `None` for a balanced dataset.
    pub imbalance: Option<Vec<f64>>,
    pub noise_sigma: f64,
    pub max_rotation_deg: f64,
    /// Maximum translation as a fraction of the image side.
    pub max_shift: f64,
    /// Standard deviation of the per-sample expression parameter jitter.
    pub expression_jitter: f64,
}

impl SynthConfig {
    pub fn new(classes: usize, per_class: usize, size: usize, seed: u64) -> Self {
        SynthConfig {
            classes,
            per_class,
            size,
            seed,
            imbalance: None,
            noise_sigma: 0.05,
            max_rotation_deg: 15.0,
            max_shift: 0.10,
            expression_jitter: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.per_class < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 samples per class, got {}",
                self.per_class
            )));
        }
        if self.size < 8 {
            return Err(Error::Argument(format!(
                "image size {} is too small",
                self.size
            )));
        }
        if let Some(p) = &self.imbalance {
            if p.len() != self.classes {
                return Err(Error::Argument(format!(
                    "imbalance profile has {} entries for {} classes",
                    p.len(),
                    self.classes
                )));
            }
            if p.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Argument("class proportions must be positive".into()));
            }
        }
        for (name, v) in [
            ("noise sigma", self.noise_sigma),
            ("rotation", self.max_rotation_deg),
            ("shift", self.max_shift),
            ("jitter", self.expression_jitter),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Argument(format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }

    fn proportions(&self) -> Vec<f64> {
        let p = self
            .imbalance
            .clone()
            .unwrap_or_else(|| vec![1.0; self.classes]);
        let s: f64 = p.iter().sum();
        p.iter().map(|v| v / s).collect()
    }

    /// Per-class sample counts for the train and eval splits.
    pub fn class_counts(&self) -> (Vec<usize>, Vec<usize>) {
        let p = self.proportions();
        let train_total = self.per_class * self.classes;
        let eval_total = (train_total as f64 / TRAIN_EVAL_RATIO as f64).round() as usize;
        (apportion(train_total, &p), apportion(eval_total, &p))
    }
}

/// Largest-remainder apportionment of `total` by proportions `p` (summing
/// to one). Remainder ties go to the lowest index.
pub fn apportion(total: usize, p: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = p.iter().map(|v| v * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSample {
    /// `size×size` grey bytes.
    pub pixels: Vec<u8>,
    pub class: usize,
    /// Where the eyes, nose tip and mouth corners ended up after posing.
    pub landmarks: Landmarks5,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthDataset {
    pub size: usize,
    pub class_names: Vec<String>,
    pub train: Vec<SynthSample>,
    pub eval: Vec<SynthSample>,
}

impl SynthSample {
    pub fn to_labeled(&self, size: usize, k: usize) -> Result<LabeledImage> {
        LabeledImage::with_class(
            normalize(&self.pixels, (size, size, 1), 255)?,
            self.class,
            k,
        )
    }
}

impl SynthDataset {
    pub fn train_items(&self) -> Result<Vec<LabeledImage>> {
        self.items(&self.train)
    }

    pub fn eval_items(&self) -> Result<Vec<LabeledImage>> {
        self.items(&self.eval)
    }

    fn items(&self, samples: &[SynthSample]) -> Result<Vec<LabeledImage>> {
        let k = self.class_names.len();
        samples.iter().map(|s| s.to_labeled(self.size, k)).collect()
    }

    /// Write `train.csv`, `eval.csv` and the images under `images/` in `dir`.
    /// Returns the two manifest paths.
    pub fn write(&self, dir: &Path, with_landmarks: bool) -> Result<(PathBuf, PathBuf)> {
        let mut paths = Vec::new();
        for (split, samples) in [("train", &self.train), ("eval", &self.eval)] {
            let img_dir = dir.join("images").join(split);
            fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
            let mut records = Vec::with_capacity(samples.len());
            for (i, s) in samples.iter().enumerate() {
                let rel = PathBuf::from("images")
                    .join(split)
                    .join(format!("{i:05}.pgm"));
                let img = PnmImage::new(self.size, self.size, 1, s.pixels.clone())?;
                let path = dir.join(&rel);
                fs::write(&path, encode_pnm(&img)).map_err(|e| Error::io(&path, e))?;
                records.push(ManifestRecord {
                    path: rel,
                    class: s.class,
                    landmarks: with_landmarks.then_some(s.landmarks),
                });
            }
            let manifest = DatasetManifest {
                records,
                class_names: self.class_names.clone(),
                size: Some(self.size),
                template: None,
                base_dir: dir.to_path_buf(),
            };
            let mpath = dir.join(format!("{split}.csv"));
            manifest.write(&mpath)?;
            paths.push(mpath);
        }
        let eval = paths.pop().unwrap();
        Ok((paths.pop().unwrap(), eval))
    }
}

/// Expression controls, each roughly in `[-1, 1]`.
#[derive(Clone, Copy, Debug)]
struct Expression {
    eye_open: f64,
    brow_raise: f64,
    /// Positive lifts the inner brow ends.
    brow_tilt: f64,
    /// Positive curves the mouth into a smile.
    mouth_curve: f64,
    mouth_open: f64,
    mouth_width: f64,
    /// One mouth corner raised relative to the other.
    mouth_skew: f64,
}

impl Expression {
    const fn new(v: [f64; 7]) -> Self {
        Expression {
            eye_open: v[0],
            brow_raise: v[1],
            brow_tilt: v[2],
            mouth_curve: v[3],
            mouth_open: v[4],
            mouth_width: v[5],
            mouth_skew: v[6],
        }
    }

    fn to_array(self) -> [f64; 7] {
        [
            self.eye_open,
            self.brow_raise,
            self.brow_tilt,
            self.mouth_curve,
            self.mouth_open,
            self.mouth_width,
            self.mouth_skew,
        ]
    }
}

/// Prototypes for the seven basic expressions, in class-index order.
const PROTOTYPES: [Expression; 7] = [
    Expression::new([1.0, 1.0, 0.0, 0.0, 0.9, 0.45, 0.0]), // surprise
    Expression::new([0.85, 0.6, 0.6, -0.3, 0.45, 0.75, 0.0]), // fear
    Expression::new([0.35, -0.5, -0.3, -0.4, 0.1, 0.55, 0.6]), // disgust
    Expression::new([0.5, 0.0, 0.0, 1.0, 0.3, 0.85, 0.0]), // happiness
    Expression::new([0.45, 0.1, 0.8, -0.9, 0.0, 0.6, 0.0]), // sadness
    Expression::new([0.55, -0.8, -0.9, -0.2, 0.0, 0.5, 0.0]), // anger
    Expression::new([0.6, 0.0, 0.0, 0.0, 0.0, 0.6, 0.0]),  // neutral
];

fn prototypes(k: usize) -> Vec<Expression> {
    // classes beyond the seven get fixed pseudo-random prototypes, independent of the seed
    let mut rng = Rng::new(0x5eed_face);
    (0..k)
        .map(|c| {
            PROTOTYPES.get(c).copied().unwrap_or_else(|| {
                Expression::new([
                    rng.uniform_range(0.2, 1.0),
                    rng.uniform_range(-1.0, 1.0),
                    rng.uniform_range(-1.0, 1.0),
                    rng.uniform_range(-1.0, 1.0),
                    rng.uniform_range(0.0, 0.9),
                    rng.uniform_range(0.4, 0.9),
                    rng.uniform_range(0.0, 0.6),
                ])
            })
        })
        .collect()
}

enum Shape {
    /// Closed polygon, filled.
    Fill(Vec<Point>),
    /// Open polyline with a half-width in pixels.
    Stroke(Vec<Point>, f64),
}

struct Layer {
    shape: Shape,
    value: f64,
}

fn ellipse(c: Point, rx: f64, ry: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            [c[0] + rx * t.cos(), c[1] + ry * t.sin()]
        })
        .collect()
}

fn bezier(p0: Point, ctrl: Point, p1: Point, n: usize) -> Vec<Point> {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let (a, b, c) = ((1.0 - t) * (1.0 - t), 2.0 * t * (1.0 - t), t * t);
            [
                a * p0[0] + b * ctrl[0] + c * p1[0],
                a * p0[1] + b * ctrl[1] + c * p1[1],
            ]
        })
        .collect()
}

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (ex, ey) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (ex * ex + ey * ey).sqrt()
}

fn inside(p: Point, poly: &[Point]) -> bool {
    let mut c = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + n - 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1])
            && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]
        {
            c = !c;
        }
    }
    c
}

fn paint(canvas: &mut [f64], s: usize, layer: &Layer) {
    let (pts, pad) = match &layer.shape {
        Shape::Fill(p) => (p, 1.0),
        Shape::Stroke(p, hw) => (p, hw + 1.0),
    };
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    let lo = |v: f64| (v - pad).floor().max(0.0) as usize;
    let hi = |v: f64| ((v + pad).ceil().max(0.0) as usize).min(s - 1);
    for y in lo(y0)..=hi(y1) {
        for x in lo(x0)..=hi(x1) {
            let p = [x as f64, y as f64];
            let cov = match &layer.shape {
                Shape::Fill(poly) => {
                    let n = poly.len();
                    let d = (0..n)
                        .map(|i| seg_dist(p, poly[i], poly[(i + 1) % n]))
                        .fold(f64::MAX, f64::min);
                    let sd = if inside(p, poly) { d } else { -d };
                    (0.5 + sd).clamp(0.0, 1.0)
                }
                Shape::Stroke(line, hw) => {
                    let d = line
                        .windows(2)
                        .map(|w| seg_dist(p, w[0], w[1]))
                        .fold(f64::MAX, f64::min);
                    (hw + 0.5 - d).clamp(0.0, 1.0)
                }
            };
            if cov > 0.0 {
                let v = &mut canvas[y * s + x];
                *v = *v * (1.0 - cov) + layer.value * cov;
            }
        }
    }
}

fn render(
    proto: &Expression,
    jitter: f64,
    cfg: &SynthConfig,
    rng: &mut Rng,
) -> (Vec<f64>, Landmarks5) {
    let s = cfg.size;
    let sf = s as f64;
    let mut e = proto.to_array();
    for v in &mut e {
        *v += jitter * rng.gaussian();
    }
    let e = Expression::new(e);
    let skew = e.mouth_skew * if rng.bernoulli(0.5) { 1.0 } else { -1.0 };

    // identity
    let face_w = rng.uniform_range(0.66, 0.80);
    let face_h = rng.uniform_range(0.82, 0.96);
    let eye_dx = rng.uniform_range(0.27, 0.36);
    let eye_y = rng.uniform_range(-0.30, -0.20);
    let mouth_y = rng.uniform_range(0.40, 0.50);
    let skin = rng.uniform_range(0.55, 0.85);
    let bg = rng.uniform_range(0.05, 0.40);
    let bg_grad = rng.uniform_range(-0.15, 0.15);
    let ink = rng.uniform_range(0.0, 0.15);

    // pose: face units to pixels
    let radius = 0.42 * sf * rng.uniform_range(0.9, 1.1);
    let angle = rng.uniform_range(-1.0, 1.0) * cfg.max_rotation_deg.to_radians();
    let shift = [
        rng.uniform_range(-1.0, 1.0) * cfg.max_shift * sf,
        rng.uniform_range(-1.0, 1.0) * cfg.max_shift * sf,
    ];
    let c = (sf - 1.0) / 2.0;
    let pose = Affine::similarity(angle, 1.0, [0.0, 0.0], [c + shift[0], c + shift[1]])
        .compose(&Affine([radius, 0.0, 0.0, 0.0, radius, 0.0]));
    let tf = |pts: Vec<Point>| -> Vec<Point> { pts.into_iter().map(|p| pose.apply(p)).collect() };

    let stroke_hw = (0.045 * radius).max(0.5);
    let mut layers = vec![Layer {
        shape: Shape::Fill(tf(ellipse([0.0, 0.0], face_w, face_h, 40))),
        value: skin,
    }];

    let eye_ry = (0.025 + 0.09 * e.eye_open).max(0.02);
    let brow_base = eye_y - 0.17 - 0.08 * e.brow_raise;
    for side in [-1.0, 1.0] {
        let ex = side * eye_dx;
        layers.push(Layer {
            shape: Shape::Fill(tf(ellipse([ex, eye_y], 0.12, eye_ry, 20))),
            value: ink,
        });
        let inner = [side * (eye_dx - 0.13), brow_base - 0.10 * e.brow_tilt];
        let outer = [side * (eye_dx + 0.15), brow_base + 0.02 * e.brow_tilt];
        layers.push(Layer {
            shape: Shape::Stroke(tf(vec![inner, outer]), stroke_hw),
            value: ink,
        });
    }
    let nose_tip = [0.0, 0.12];
    layers.push(Layer {
        shape: Shape::Stroke(tf(vec![[0.0, eye_y + 0.12], nose_tip]), stroke_hw * 0.8),
        value: ink,
    });

    let half_w = 0.45 * e.mouth_width.clamp(0.2, 1.2);
    let left = [-half_w, mouth_y - 0.08 * skew];
    let right = [half_w, mouth_y + 0.08 * skew];
    let ctrl_y = mouth_y + 0.22 * e.mouth_curve;
    let upper = bezier(left, [0.0, ctrl_y], right, 16);
    let open = e.mouth_open.max(0.0);
    if open > 0.05 {
        let mut poly = upper.clone();
        let mut lower = bezier(left, [0.0, ctrl_y + 0.35 * open], right, 16);
        lower.reverse();
        poly.extend(lower);
        layers.push(Layer {
            shape: Shape::Fill(tf(poly)),
            value: ink,
        });
    }
    layers.push(Layer {
        shape: Shape::Stroke(tf(upper), stroke_hw),
        value: ink,
    });

    let mut canvas: Vec<f64> = (0..s * s)
        .map(|i| bg + bg_grad * ((i % s) as f64 / sf - 0.5))
        .collect();
    for layer in &layers {
        paint(&mut canvas, s, layer);
    }
    for v in &mut canvas {
        *v = (*v + cfg.noise_sigma * rng.gaussian()).clamp(0.0, 1.0);
    }

    let lm = [[-eye_dx, eye_y], [eye_dx, eye_y], nose_tip, left, right].map(|p| pose.apply(p));
    let lm = Landmarks5::new(lm).expect("face landmarks are never collinear");
    (canvas, lm)
}

/// Generate the train and eval splits. Identical configurations give
/// byte-identical datasets.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let protos = prototypes(cfg.classes);
    let (train_counts, eval_counts) = cfg.class_counts();
    let mut rng = Rng::new(cfg.seed);
    let mut split = |counts: &[usize]| -> Vec<(usize, u64)> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .map(|c| (c, rng.next_u64()))
            .collect()
    };
    let train_jobs = split(&train_counts);
    let eval_jobs = split(&eval_counts);
    let make = |jobs: Vec<(usize, u64)>| -> Vec<SynthSample> {
        jobs.into_par_iter()
            .map(|(class, seed)| {
                let mut r = Rng::new(seed);
                let (canvas, landmarks) =
                    render(&protos[class], cfg.expression_jitter, cfg, &mut r);
                SynthSample {
                    pixels: canvas.iter().map(|v| (v * 255.0).round() as u8).collect(),
                    class,
                    landmarks,
                }
            })
            .collect()
    };
    Ok(SynthDataset {
        size: cfg.size,
        class_names: default_class_names(cfg.classes),
        train: make(train_jobs),
        eval: make(eval_jobs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let cfg = SynthConfig::new(3, 4, 16, 9);
        assert_eq!(
            generate_synthetic(&cfg).unwrap(),
            generate_synthetic(&cfg).unwrap()
        );
        let other = SynthConfig { seed: 10, ..cfg };
        assert_ne!(
            generate_synthetic(&other).unwrap().train,
            generate_synthetic(&SynthConfig::new(3, 4, 16, 9))
                .unwrap()
                .train
        );
    }

    #[test]
    fn four_to_one_split() {
        let cfg = SynthConfig::new(7, 200, 16, 1);
        let (tr, ev) = cfg.class_counts();
        assert_eq!(tr, vec![200; 7]);
        assert_eq!(ev, vec![50; 7]);
        let d = generate_synthetic(&SynthConfig::new(7, 8, 16, 1)).unwrap();
        assert_eq!(d.train.len(), 56);
        assert_eq!(d.eval.len(), 14);
        assert_eq!(d.train.len(), 4 * d.eval.len());
    }

    #[test]
    fn imbalance_counts_are_exact_apportionment() {
        let mut cfg = SynthConfig::new(7, 100, 16, 1);
        cfg.imbalance = Some(RAF_SUPPORTS.to_vec());
        let (tr, ev) = cfg.class_counts();
        assert_eq!(tr.iter().sum::<usize>(), 700);
        assert_eq!(ev.iter().sum::<usize>(), 175);
        let total: f64 = RAF_SUPPORTS.iter().sum();
        for (c, &n) in tr.iter().enumerate() {
            assert!((n as f64 - 700.0 * RAF_SUPPORTS[c] / total).abs() < 1.0);
        }
        // happiness is the majority and fear the minority class
        assert_eq!(tr.iter().enumerate().max_by_key(|p| p.1).unwrap().0, 3);
        assert_eq!(tr.iter().enumerate().min_by_key(|p| p.1).unwrap().0, 1);
        let d = generate_synthetic(&cfg).unwrap();
        for c in 0..7 {
            assert_eq!(d.train.iter().filter(|s| s.class == c).count(), tr[c]);
        }
    }

    #[test]
    fn apportion_sums() {
        assert_eq!(apportion(10, &[0.5, 0.25, 0.25]), vec![5, 3, 2]);
        assert_eq!(apportion(3, &[1.0 / 3.0; 3]), vec![1, 1, 1]);
        assert_eq!(apportion(0, &[0.5, 0.5]), vec![0, 0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(generate_synthetic(&SynthConfig::new(1, 10, 16, 0)).is_err());
        assert!(generate_synthetic(&SynthConfig::new(3, 1, 16, 0)).is_err());
        let mut cfg = SynthConfig::new(3, 4, 16, 0);
        cfg.imbalance = Some(vec![1.0, 2.0]);
        assert!(generate_synthetic(&cfg).is_err());
    }

    #[test]
    fn landmarks_fall_inside_the_frame() {
        let d = generate_synthetic(&SynthConfig::new(7, 4, 32, 3)).unwrap();
        for s in d.train.iter().chain(&d.eval) {
            for p in s.landmarks.points() {
                assert!(p.iter().all(|&v| (0.0..32.0).contains(&v)), "{p:?}");
            }
        }
    }
}
