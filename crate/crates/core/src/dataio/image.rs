//! Pixel conversions, bilinear resizing and the raw tensor file format.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numerics::codec::{read_tensor_body, write_tensor_body};
use crate::numerics::Tensor;

/// Magic prefix of raw tensor files; the rest is the tensor body.
pub const RAW_TENSOR_MAGIC: &[u8; 8] = b"MXTENSOR";

/// Bytes `0..=maxval` to an `H×W×C` tensor in `[0, 1]`.
pub fn normalize(bytes: &[u8], (h, w, c): (usize, usize, usize), maxval: u16) -> Result<Tensor> {
    if maxval == 0 {
        return Err(Error::Argument("maxval must be positive".into()));
    }
    let scale = f64::from(maxval);
    let data = bytes
        .iter()
        .map(|&b| (f64::from(b) / scale).min(1.0))
        .collect();
    Tensor::new(vec![h, w, c], data)
}

/// Nearest byte value for each pixel, `round(255·v)`.
pub fn quantize(t: &Tensor) -> Vec<u8> {
    t.data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

fn hwc(img: &Tensor) -> Result<(usize, usize, usize)> {
    match img.shape() {
        &[h, w, c] => Ok((h, w, c)),
        s => Err(Error::Dimension(format!(
            "expected an H×W×C image, got {s:?}"
        ))),
    }
}

/// Bilinear sample at continuous pixel coordinates (pixel centres on
/// integers); taps outside the image read as 0.
pub(crate) fn sample_zero_pad(
    img: &[f64],
    (h, w, c): (usize, usize, usize),
    x: f64,
    y: f64,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    for (dy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
        for (dx, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
            let (px, py) = (x0 + dx, y0 + dy);
            let wgt = wx * wy;
            if wgt == 0.0 || px < 0.0 || py < 0.0 || px >= w as f64 || py >= h as f64 {
                continue;
            }
            let base = (py as usize * w + px as usize) * c;
            for (o, &v) in out.iter_mut().zip(&img[base..base + c]) {
                *o += wgt * v;
            }
        }
    }
}

/// Resize to `target×target` with half-pixel-centred bilinear interpolation
/// and edge clamping.
pub fn resize_bilinear(img: &Tensor, target: usize) -> Result<Tensor> {
    let (h, w, c) = hwc(img)?;
    if target == 0 {
        return Err(Error::Argument("resize target must be positive".into()));
    }
    let src = img.data();
    let axis = |dst: usize, n_in: usize| -> (usize, usize, f64) {
        let s =
            ((dst as f64 + 0.5) * n_in as f64 / target as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n_in - 1);
        (i0, i1, s - i0 as f64)
    };
    let mut out = Vec::with_capacity(target * target * c);
    for oy in 0..target {
        let (y0, y1, fy) = axis(oy, h);
        for ox in 0..target {
            let (x0, x1, fx) = axis(ox, w);
            for ch in 0..c {
                let at = |y: usize, x: usize| src[(y * w + x) * c + ch];
                let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
                let bot = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
                out.push(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    Tensor::new(vec![target, target, c], out)
}

pub fn write_raw_tensor<W: Write>(w: &mut W, t: &Tensor) -> std::io::Result<()> {
    w.write_all(RAW_TENSOR_MAGIC)?;
    write_tensor_body(w, t)
}

pub fn read_raw_tensor<R: Read>(r: &mut R) -> Result<Tensor> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("raw tensor file too short".into()))?;
    if &magic != RAW_TENSOR_MAGIC {
        return Err(Error::Format("not a raw tensor file".into()));
    }
    read_tensor_body(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_endpoints() {
        let t = normalize(&[0, 128, 255], (1, 3, 1), 255).unwrap();
        assert_eq!(t.data()[0], 0.0);
        assert!((t.data()[1] - 0.50196).abs() < 1e-5);
        assert_eq!(t.data()[2], 1.0);
    }

    #[test]
    fn quantization_error_bound() {
        let vals: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let t = Tensor::new(vec![1, vals.len(), 1], vals.clone()).unwrap();
        let back = normalize(&quantize(&t), (1, vals.len(), 1), 255).unwrap();
        for (a, b) in vals.iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 510.0 + 1e-15);
        }
    }

    #[test]
    fn resize_constant_and_identity() {
        let c = Tensor::full(&[5, 7, 2], 0.3).unwrap();
        let r = resize_bilinear(&c, 11).unwrap();
        assert!(r.data().iter().all(|&v| (v - 0.3).abs() < 1e-12));

        let img = Tensor::new(vec![4, 4, 1], (0..16).map(|v| v as f64 / 16.0).collect()).unwrap();
        let same = resize_bilinear(&img, 4).unwrap();
        for (a, b) in same.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(resize_bilinear(&img, 0).is_err());
    }

    #[test]
    fn checkerboard_centre_is_mean() {
        let img = Tensor::new(vec![2, 2, 1], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let r = resize_bilinear(&img, 3).unwrap();
        assert!((r.get(&[1, 1, 0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn raw_tensor_round_trip() {
        let t = Tensor::new(vec![2, 3, 1], vec![0.0, 0.1, 0.2, 0.3, 0.4, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_raw_tensor(&mut buf, &t).unwrap();
        assert_eq!(read_raw_tensor(&mut buf.as_slice()).unwrap(), t);
        assert!(read_raw_tensor(&mut &buf[..buf.len() - 1]).is_err());
        assert!(read_raw_tensor(&mut &b"P5 nope"[..]).is_err());
    }
}
