//! Five-point landmark alignment: least-squares affine fit and warping.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

use super::image::sample_zero_pad;

pub type Point = [f64; 2];

/// Reference five-point layout for a 112×112 frontal face, in the order
/// left eye, right eye, nose tip, left mouth corner, right mouth corner.
pub const FRONTAL_112: [Point; 5] = [
    [38.2946, 51.6963],
    [73.5318, 51.5014],
    [56.0252, 71.7366],
    [41.5493, 92.3655],
    [70.7299, 92.2041],
];

fn check_spread(points: &[Point; 5]) -> Result<()> {
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Argument(
            "landmark coordinates must be finite".into(),
        ));
    }
    // smallest eigenvalue of the 2×2 scatter matrix is zero iff the points are collinear
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0] / n, sy + p[1] / n));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    if tr <= 0.0 || det <= 1e-10 * tr * tr {
        return Err(Error::DegenerateGeometry(
            "landmarks are collinear or coincident".into(),
        ));
    }
    Ok(())
}

/// Five facial landmarks in pixel coordinates, ordered left eye, right eye,
/// nose, left mouth corner, right mouth corner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Landmarks5 {
    points: [Point; 5],
}

impl Landmarks5 {
    pub fn new(points: [Point; 5]) -> Result<Self> {
        check_spread(&points)?;
        Ok(Landmarks5 { points })
    }

    pub fn from_flat(v: &[f64]) -> Result<Self> {
        if v.len() != 10 {
            return Err(Error::Argument(format!(
                "expected 10 landmark values, got {}",
                v.len()
            )));
        }
        let mut points = [[0.0; 2]; 5];
        for (p, xy) in points.iter_mut().zip(v.chunks_exact(2)) {
            *p = [xy[0], xy[1]];
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[Point; 5] {
        &self.points
    }

    pub fn flat(&self) -> [f64; 10] {
        let mut out = [0.0; 10];
        for (o, p) in out.chunks_exact_mut(2).zip(&self.points) {
            o.copy_from_slice(p);
        }
        out
    }

    pub fn transformed(&self, a: &Affine) -> Result<Landmarks5> {
        Self::new(self.points.map(|p| a.apply(p)))
    }
}

/// Canonical landmark positions in an `S×S` output frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentTemplate {
    points: [Point; 5],
    size: usize,
}

impl AlignmentTemplate {
    pub fn new(points: [Point; 5], size: usize) -> Result<Self> {
        check_spread(&points)?;
        let s = size as f64;
        if size == 0 || points.iter().flatten().any(|&v| !(0.0..s).contains(&v)) {
            return Err(Error::Argument(format!(
                "template points must lie in [0, {size})"
            )));
        }
        Ok(AlignmentTemplate { points, size })
    }

    /// The standard frontal layout scaled to `size`.
    pub fn frontal(size: usize) -> Result<Self> {
        let k = size as f64 / 112.0;
        Self::new(FRONTAL_112.map(|[x, y]| [x * k, y * k]), size)
    }

    pub fn points(&self) -> &[Point; 5] {
        &self.points
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn as_landmarks(&self) -> Landmarks5 {
        Landmarks5 {
            points: self.points,
        }
    }
}

/// Row-major 2×3 affine map `[a b tx; c d ty]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine(pub [f64; 6]);

impl Affine {
    pub const IDENTITY: Affine = Affine([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);

    /// Rotation by `angle` (radians) and uniform `scale` about `center`,
    /// followed by translation `shift`.
    pub fn similarity(angle: f64, scale: f64, center: Point, shift: Point) -> Affine {
        let (s, c) = angle.sin_cos();
        let (a, b) = (scale * c, -scale * s);
        let (cc, d) = (scale * s, scale * c);
        let tx = center[0] - a * center[0] - b * center[1] + shift[0];
        let ty = center[1] - cc * center[0] - d * center[1] + shift[1];
        Affine([a, b, tx, cc, d, ty])
    }

    pub fn apply(&self, p: Point) -> Point {
        let m = &self.0;
        [
            m[0] * p[0] + m[1] * p[1] + m[2],
            m[3] * p[0] + m[4] * p[1] + m[5],
        ]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Affine) -> Affine {
        let (a, b) = (&self.0, &other.0);
        Affine([
            a[0] * b[0] + a[1] * b[3],
            a[0] * b[1] + a[1] * b[4],
            a[0] * b[2] + a[1] * b[5] + a[2],
            a[3] * b[0] + a[4] * b[3],
            a[3] * b[1] + a[4] * b[4],
            a[3] * b[2] + a[4] * b[5] + a[5],
        ])
    }

    pub fn determinant(&self) -> f64 {
        self.0[0] * self.0[4] - self.0[1] * self.0[3]
    }

    pub fn inverse(&self) -> Result<Affine> {
        let det = self.determinant();
        let m = &self.0;
        let scale = m[0].abs().max(m[1].abs()).max(m[3].abs()).max(m[4].abs());
        if !det.is_finite() || det.abs() <= 1e-12 * scale * scale {
            return Err(Error::DegenerateGeometry(
                "affine map is not invertible".into(),
            ));
        }
        let (a, b, c, d) = (m[4] / det, -m[1] / det, -m[3] / det, m[0] / det);
        Ok(Affine([
            a,
            b,
            -(a * m[2] + b * m[5]),
            c,
            d,
            -(c * m[2] + d * m[5]),
        ]))
    }

    /// Linear part scale for a similarity, `sqrt(|det|)`.
    pub fn scale(&self) -> f64 {
        self.determinant().abs().sqrt()
    }
}

/// Solve the 3×3 system `m·x = r` by Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut r: [[f64; 2]; 3]) -> Option<[[f64; 2]; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            for k in 0..2 {
                r[row][k] -= f * r[col][k];
            }
        }
    }
    let mut x = [[0.0; 2]; 3];
    for row in (0..3).rev() {
        for k in 0..2 {
            let acc: f64 = (row + 1..3).map(|j| m[row][j] * x[j][k]).sum();
            x[row][k] = (r[row][k] - acc) / m[row][row];
        }
    }
    Some(x)
}

/// Least-squares 6-DOF affine map taking `src` onto `template`, via the
/// normal equations.
pub fn solve_affine(src: &Landmarks5, template: &AlignmentTemplate) -> Result<Affine> {
    check_spread(&src.points)?;
    let mut m = [[0.0; 3]; 3];
    let mut r = [[0.0; 2]; 3];
    for (p, q) in src.points.iter().zip(&template.points) {
        let v = [p[0], p[1], 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += v[i] * v[j];
            }
            r[i][0] += v[i] * q[0];
            r[i][1] += v[i] * q[1];
        }
    }
    let x = solve3(m, r).ok_or_else(|| {
        Error::DegenerateGeometry("singular normal matrix for landmark alignment".into())
    })?;
    Ok(Affine([
        x[0][0], x[1][0], x[2][0], x[0][1], x[1][1], x[2][1],
    ]))
}

/// Warp `img` (`H×W×C`) into an `S×S` frame: each output pixel is read from
/// `A⁻¹·(x, y)` by bilinear sampling, zero outside the source.
pub fn warp_affine(img: &Tensor, a: &Affine, out_size: usize) -> Result<Tensor> {
    let (h, w, c) = match img.shape() {
        &[h, w, c] => (h, w, c),
        s => {
            return Err(Error::Dimension(format!(
                "expected an H×W×C image, got {s:?}"
            )))
        }
    };
    if out_size == 0 {
        return Err(Error::Argument("output size must be positive".into()));
    }
    let inv = a.inverse()?;
    let mut out = vec![0.0; out_size * out_size * c];
    for y in 0..out_size {
        for x in 0..out_size {
            let [sx, sy] = inv.apply([x as f64, y as f64]);
            let base = (y * out_size + x) * c;
            sample_zero_pad(img.data(), (h, w, c), sx, sy, &mut out[base..base + c]);
        }
    }
    Tensor::new(vec![out_size, out_size, c], out)
}
