//! Convolution kernels on raw NCHW buffers (im2col + GEMM).
//!
//! Geometry is always expressed in the forward-convolution orientation: the
//! *image* side has `channels × height × width`, the *column* side has
//! `out_h × out_w` window positions. A transposed convolution runs the same
//! geometry backwards, with its output on the image side.

use crate::error::{shape_err, Result};
use crate::scalar::{gemm, MatRef, Scalar};

/// Upper bound on im2col buffer elements per batch chunk.
const COL_BUDGET: usize = 1 << 23;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    /// Window geometry for a forward convolution over a `height × width` image.
    pub fn forward(
        channels: usize,
        height: usize,
        width: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Result<Self> {
        if kernel == 0 || kernel.is_multiple_of(2) {
            return shape_err(format!("kernel size {kernel} must be odd"));
        }
        if stride == 0 {
            return shape_err("stride must be positive");
        }
        let span_h = height + 2 * pad;
        let span_w = width + 2 * pad;
        if span_h < kernel || span_w < kernel {
            return shape_err(format!(
                "non-positive output extent: {height}x{width} with kernel {kernel}, pad {pad}"
            ));
        }
        Ok(Self {
            channels,
            height,
            width,
            kernel,
            stride,
            pad,
            out_h: (span_h - kernel) / stride + 1,
            out_w: (span_w - kernel) / stride + 1,
        })
    }

    /// Geometry of a transposed convolution taking `in_h × in_w` to
    /// `(in−1)·stride − 2·pad + kernel + output_pad`.
    pub fn transposed(
        out_channels: usize,
        in_h: usize,
        in_w: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        output_pad: usize,
    ) -> Result<Self> {
        if stride == 0 {
            return shape_err("stride must be positive");
        }
        if output_pad >= stride {
            return shape_err(format!("output_pad {output_pad} must be < stride {stride}"));
        }
        let extent = |len: usize| -> Result<usize> {
            let grown = (len - 1) * stride + kernel + output_pad;
            if grown <= 2 * pad {
                return shape_err(format!("non-positive transposed output extent for input {len}"));
            }
            Ok(grown - 2 * pad)
        };
        let (h, w) = (extent(in_h)?, extent(in_w)?);
        let g = Self::forward(out_channels, h, w, kernel, stride, pad)?;
        debug_assert_eq!((g.out_h, g.out_w), (in_h, in_w));
        Ok(g)
    }

    pub fn kk(&self) -> usize {
        self.kernel * self.kernel
    }

    pub fn col_rows(&self) -> usize {
        self.channels * self.kk()
    }

    pub fn image_plane(&self) -> usize {
        self.height * self.width
    }

    pub fn col_plane(&self) -> usize {
        self.out_h * self.out_w
    }

    fn chunk(&self, batch: usize) -> usize {
        let per_image = self.col_rows() * self.col_plane();
        (COL_BUDGET / per_image.max(1)).clamp(1, batch.max(1))
    }

    /// Valid window positions `[lo, hi)` along one axis for kernel tap `tap`.
    fn valid(&self, tap: usize, len: usize, out: usize) -> (usize, usize) {
        // position o reads input o·stride + tap − pad, which must lie in [0, len)
        let s = self.stride;
        let lo = if tap >= self.pad { 0 } else { (self.pad - tap).div_ceil(s) };
        let hi = if len + self.pad <= tap { 0 } else { (len + self.pad - tap).div_ceil(s) };
        (lo.min(out), hi.min(out).max(lo.min(out)))
    }
}

/// Unfolds images `[nb, C, H, W]` into `[C·k·k, nb·out_h·out_w]`.
fn im2col<T: Scalar>(g: &ConvGeometry, images: &[T], nb: usize, cols: &mut [T]) {
    let (k, s, p) = (g.kernel, g.stride, g.pad);
    let plane = g.col_plane();
    let width = nb * plane;
    debug_assert_eq!(cols.len(), g.col_rows() * width);
    for c in 0..g.channels {
        for ki in 0..k {
            let (oh_lo, oh_hi) = g.valid(ki, g.height, g.out_h);
            for kj in 0..k {
                let (ow_lo, ow_hi) = g.valid(kj, g.width, g.out_w);
                let row = (c * k + ki) * k + kj;
                let dst_row = &mut cols[row * width..(row + 1) * width];
                for n in 0..nb {
                    let src = &images[(n * g.channels + c) * g.image_plane()..][..g.image_plane()];
                    let dst = &mut dst_row[n * plane..(n + 1) * plane];
                    for oh in 0..g.out_h {
                        let out_row = &mut dst[oh * g.out_w..(oh + 1) * g.out_w];
                        if oh < oh_lo || oh >= oh_hi {
                            out_row.fill(T::zero());
                            continue;
                        }
                        let ih = oh * s + ki - p;
                        let src_row = &src[ih * g.width..(ih + 1) * g.width];
                        out_row[..ow_lo].fill(T::zero());
                        out_row[ow_hi..].fill(T::zero());
                        if ow_lo == ow_hi {
                            continue;
                        }
                        if s == 1 {
                            let start = ow_lo + kj - p;
                            out_row[ow_lo..ow_hi]
                                .copy_from_slice(&src_row[start..start + (ow_hi - ow_lo)]);
                        } else {
                            for ow in ow_lo..ow_hi {
                                out_row[ow] = src_row[ow * s + kj - p];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Folds `[C·k·k, nb·out_h·out_w]` back onto images, accumulating overlaps.
fn col2im<T: Scalar>(g: &ConvGeometry, cols: &[T], nb: usize, images: &mut [T]) {
    let (k, s, p) = (g.kernel, g.stride, g.pad);
    let plane = g.col_plane();
    let width = nb * plane;
    for c in 0..g.channels {
        for ki in 0..k {
            let (oh_lo, oh_hi) = g.valid(ki, g.height, g.out_h);
            for kj in 0..k {
                let (ow_lo, ow_hi) = g.valid(kj, g.width, g.out_w);
                let row = (c * k + ki) * k + kj;
                let src_row = &cols[row * width..(row + 1) * width];
                for n in 0..nb {
                    let dst =
                        &mut images[(n * g.channels + c) * g.image_plane()..][..g.image_plane()];
                    let src = &src_row[n * plane..(n + 1) * plane];
                    for oh in oh_lo..oh_hi {
                        let ih = oh * s + ki - p;
                        let dst_row = &mut dst[ih * g.width..(ih + 1) * g.width];
                        let col_row = &src[oh * g.out_w..(oh + 1) * g.out_w];
                        if ow_lo == ow_hi {
                            continue;
                        }
                        if s == 1 {
                            let start = ow_lo + kj - p;
                            dst_row[start..start + (ow_hi - ow_lo)]
                                .iter_mut()
                                .zip(&col_row[ow_lo..ow_hi])
                                .for_each(|(d, &v)| *d += v);
                        } else {
                            for ow in ow_lo..ow_hi {
                                dst_row[ow * s + kj - p] += col_row[ow];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// `[nb, C, P]` → `[C, nb·P]`.
fn gather_channels<T: Scalar>(src: &[T], nb: usize, channels: usize, plane: usize, dst: &mut [T]) {
    let width = nb * plane;
    for n in 0..nb {
        for c in 0..channels {
            dst[c * width + n * plane..][..plane]
                .copy_from_slice(&src[(n * channels + c) * plane..][..plane]);
        }
    }
}

/// `[C, nb·P]` → `[nb, C, P]`, adding `bias[c]` when given.
fn scatter_channels<T: Scalar>(
    src: &[T],
    nb: usize,
    channels: usize,
    plane: usize,
    bias: Option<&[T]>,
    dst: &mut [T],
) {
    let width = nb * plane;
    for n in 0..nb {
        for c in 0..channels {
            let out = &mut dst[(n * channels + c) * plane..][..plane];
            let inp = &src[c * width + n * plane..][..plane];
            match bias {
                Some(b) => out.iter_mut().zip(inp).for_each(|(o, &v)| *o = v + b[c]),
                None => out.copy_from_slice(inp),
            }
        }
    }
}

fn add_bias_planes<T: Scalar>(dst: &mut [T], batch: usize, channels: usize, plane: usize, bias: &[T]) {
    for n in 0..batch {
        for c in 0..channels {
            dst[(n * channels + c) * plane..][..plane].iter_mut().for_each(|v| *v += bias[c]);
        }
    }
}

fn bias_grad<T: Scalar>(dy: &[T], batch: usize, channels: usize, plane: usize) -> Vec<T> {
    let mut db = vec![T::zero(); channels];
    for n in 0..batch {
        for (c, acc) in db.iter_mut().enumerate() {
            *acc += dy[(n * channels + c) * plane..][..plane].iter().copied().sum::<T>();
        }
    }
    db
}

/// Cross-correlation. `x: [N, Cin, H, W]`, `w: [Cout, Cin, k, k]` → `[N, Cout, out_h, out_w]`.
pub fn conv2d_forward<T: Scalar>(
    g: &ConvGeometry,
    batch: usize,
    x: &[T],
    w: &[T],
    bias: &[T],
    cout: usize,
) -> Vec<T> {
    let rows = g.col_rows();
    let plane = g.col_plane();
    let chunk = g.chunk(batch);
    let mut y = vec![T::zero(); batch * cout * plane];
    let mut cols = vec![T::zero(); rows * chunk * plane];
    let mut ym = vec![T::zero(); cout * chunk * plane];
    let mut n0 = 0;
    while n0 < batch {
        let nb = chunk.min(batch - n0);
        let cols = &mut cols[..rows * nb * plane];
        let ym = &mut ym[..cout * nb * plane];
        im2col(g, &x[n0 * g.channels * g.image_plane()..], nb, cols);
        gemm(MatRef::new(w, cout, rows), MatRef::new(cols, rows, nb * plane), T::zero(), ym);
        scatter_channels(ym, nb, cout, plane, Some(bias), &mut y[n0 * cout * plane..]);
        n0 += nb;
    }
    y
}

/// Returns `(dx, dw, db)`; `dx` is skipped when `need_dx` is false.
pub fn conv2d_backward<T: Scalar>(
    g: &ConvGeometry,
    batch: usize,
    x: &[T],
    w: &[T],
    dy: &[T],
    cout: usize,
    need_dx: bool,
) -> (Option<Vec<T>>, Vec<T>, Vec<T>) {
    let rows = g.col_rows();
    let plane = g.col_plane();
    let chunk = g.chunk(batch);
    let mut dw = vec![T::zero(); cout * rows];
    let mut dx = need_dx.then(|| vec![T::zero(); batch * g.channels * g.image_plane()]);
    let mut cols = vec![T::zero(); rows * chunk * plane];
    let mut dym = vec![T::zero(); cout * chunk * plane];
    let mut n0 = 0;
    while n0 < batch {
        let nb = chunk.min(batch - n0);
        let cols = &mut cols[..rows * nb * plane];
        let dym = &mut dym[..cout * nb * plane];
        gather_channels(&dy[n0 * cout * plane..], nb, cout, plane, dym);
        im2col(g, &x[n0 * g.channels * g.image_plane()..], nb, cols);
        let dym_mat = MatRef::new(&*dym, cout, nb * plane);
        gemm(dym_mat, MatRef::new(&*cols, rows, nb * plane).t(), T::one(), &mut dw);
        if let Some(dx) = dx.as_mut() {
            gemm(MatRef::new(w, cout, rows).t(), dym_mat, T::zero(), cols);
            col2im(g, cols, nb, &mut dx[n0 * g.channels * g.image_plane()..]);
        }
        n0 += nb;
    }
    (dx, dw, bias_grad(dy, batch, cout, plane))
}

/// Transposed convolution. `x: [N, Cin, out_h, out_w]` (column side),
/// `w: [Cin, Cout, k, k]` → `[N, Cout, height, width]` where `g.channels == Cout`.
pub fn conv_transpose2d_forward<T: Scalar>(
    g: &ConvGeometry,
    batch: usize,
    x: &[T],
    w: &[T],
    bias: &[T],
    cin: usize,
) -> Vec<T> {
    let rows = g.col_rows();
    let plane = g.col_plane();
    let chunk = g.chunk(batch);
    let mut y = vec![T::zero(); batch * g.channels * g.image_plane()];
    let mut xm = vec![T::zero(); cin * chunk * plane];
    let mut cols = vec![T::zero(); rows * chunk * plane];
    let mut n0 = 0;
    while n0 < batch {
        let nb = chunk.min(batch - n0);
        let xm = &mut xm[..cin * nb * plane];
        let cols = &mut cols[..rows * nb * plane];
        gather_channels(&x[n0 * cin * plane..], nb, cin, plane, xm);
        gemm(MatRef::new(w, cin, rows).t(), MatRef::new(&*xm, cin, nb * plane), T::zero(), cols);
        col2im(g, cols, nb, &mut y[n0 * g.channels * g.image_plane()..]);
        n0 += nb;
    }
    add_bias_planes(&mut y, batch, g.channels, g.image_plane(), bias);
    y
}

/// Returns `(dx, dw, db)` for [`conv_transpose2d_forward`].
pub fn conv_transpose2d_backward<T: Scalar>(
    g: &ConvGeometry,
    batch: usize,
    x: &[T],
    w: &[T],
    dy: &[T],
    cin: usize,
    need_dx: bool,
) -> (Option<Vec<T>>, Vec<T>, Vec<T>) {
    let rows = g.col_rows();
    let plane = g.col_plane();
    let chunk = g.chunk(batch);
    let mut dw = vec![T::zero(); cin * rows];
    let mut dx = need_dx.then(|| vec![T::zero(); batch * cin * plane]);
    let mut xm = vec![T::zero(); cin * chunk * plane];
    let mut cols = vec![T::zero(); rows * chunk * plane];
    let mut n0 = 0;
    while n0 < batch {
        let nb = chunk.min(batch - n0);
        let xm = &mut xm[..cin * nb * plane];
        let cols = &mut cols[..rows * nb * plane];
        im2col(g, &dy[n0 * g.channels * g.image_plane()..], nb, cols);
        gather_channels(&x[n0 * cin * plane..], nb, cin, plane, xm);
        let cols_mat = MatRef::new(&*cols, rows, nb * plane);
        gemm(MatRef::new(&*xm, cin, nb * plane), cols_mat.t(), T::one(), &mut dw);
        if let Some(dx) = dx.as_mut() {
            gemm(MatRef::new(w, cin, rows), cols_mat, T::zero(), xm);
            scatter_channels(xm, nb, cin, plane, None, &mut dx[n0 * cin * plane..]);
        }
        n0 += nb;
    }
    (dx, dw, bias_grad(dy, batch, g.channels, g.image_plane()))
}
