//! Dealiased sine-grid transforms for pointwise products on `[0, pi]`.
//!
//! Fields are stored as coefficients in `e_k = sqrt(2/pi) sin(kx)`. Products
//! are evaluated on the interior grid `x_j = j pi / P`, `j = 1..P-1`, with
//! `P > 2N` a power of two, so that a triple product of modes `<= N` (degree
//! `<= 3N`) aliases only onto modes `>= 2P - 3N > N`. Coefficients of retained
//! modes are therefore exact up to rounding.
//!
//! A product of an even number of sine series is a cosine polynomial (degree
//! `<= 2N` for two factors), not a sine polynomial. Those are analysed with a
//! DCT-I on the same nodes, which is exact below degree `P`, and then
//! projected onto `e_1..e_N` with the closed-form integrals
//! `int_0^pi cos(jx) sin(kx) dx = 2k / (k^2 - j^2)` for `k + j` odd.
//!
//! Both transforms run through one complex FFT of length `2P`: the odd
//! extension of a grid function has a purely imaginary spectrum and the even
//! extension a purely real one, so one odd and one even function share a pass.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use alloc::format;

#[allow(unused_imports)] // f64 math comes from libm without std
use num_traits::Float;

use crate::error::{check_len, Error, Result};

/// `sqrt(2/pi)`, the normalization of `e_k`.
pub const DIRICHLET_NORM: f64 = 0.797_884_560_802_865_4;

#[cfg(not(feature = "rustfft"))]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Complex {
    re: f64,
    im: f64,
}

#[cfg(feature = "rustfft")]
type Complex = rustfft::num_complex::Complex<f64>;

#[inline]
fn cmul(a: Complex, b: Complex) -> Complex {
    Complex { re: a.re * b.re - a.im * b.im, im: a.re * b.im + a.im * b.re }
}

#[inline]
fn cadd(a: Complex, b: Complex) -> Complex {
    Complex { re: a.re + b.re, im: a.im + b.im }
}

#[inline]
fn csub(a: Complex, b: Complex) -> Complex {
    Complex { re: a.re - b.re, im: a.im - b.im }
}

/// In-place iterative radix-2 FFT, `X_j = sum_n x_n exp(-2 pi i n j / L)`, with
/// consecutive stages fused pairwise into radix-4 passes.
#[derive(Debug, Clone)]
struct Radix2Fft {
    len: usize,
    /// Per fused pass with half-width `h`: `(exp(-i pi k / h), exp(-i pi k / 2h))`, `k < h`.
    twiddles: Vec<(Complex, Complex)>,
    bitrev: Vec<usize>,
}

#[inline]
fn cis(theta: f64) -> Complex {
    Complex { re: theta.cos(), im: theta.sin() }
}

impl Radix2Fft {
    fn new(len: usize) -> Self {
        assert!(len.is_power_of_two() && len >= 2);
        let mut twiddles = Vec::with_capacity(len);
        let mut half = Self::first_half(len);
        while 4 * half <= len {
            twiddles.extend((0..half).map(|k| {
                let t = -PI * k as f64 / half as f64;
                (cis(t), cis(0.5 * t))
            }));
            half *= 4;
        }
        let bits = len.trailing_zeros();
        let bitrev = (0..len).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        Self { len, twiddles, bitrev }
    }

    /// Half-width of the first fused pass: one plain radix-2 stage runs first when `log2 L` is odd.
    fn first_half(len: usize) -> usize {
        if len.trailing_zeros() % 2 == 1 {
            2
        } else {
            1
        }
    }

    fn process(&self, data: &mut [Complex]) {
        debug_assert_eq!(data.len(), self.len);
        for (i, &j) in self.bitrev.iter().enumerate() {
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = Self::first_half(self.len);
        if half == 2 {
            for pair in data.chunks_exact_mut(2) {
                let (u, t) = (pair[0], pair[1]);
                pair[0] = cadd(u, t);
                pair[1] = csub(u, t);
            }
        }
        let mut offset = 0;
        while 4 * half <= self.len {
            let tw = &self.twiddles[offset..offset + half];
            for block in data.chunks_exact_mut(4 * half) {
                let (q01, q23) = block.split_at_mut(2 * half);
                let (q0, q1) = q01.split_at_mut(half);
                let (q2, q3) = q23.split_at_mut(half);
                for ((((x0, x1), x2), x3), (w1, w2)) in
                    q0.iter_mut().zip(q1.iter_mut()).zip(q2.iter_mut()).zip(q3.iter_mut()).zip(tw)
                {
                    let a1 = cmul(*x1, *w1);
                    let a3 = cmul(*x3, *w1);
                    let b0 = cadd(*x0, a1);
                    let b1 = csub(*x0, a1);
                    let b2 = cmul(cadd(*x2, a3), *w2);
                    // twiddle of the odd half is w2 * (-i)
                    let d = cmul(csub(*x2, a3), *w2);
                    let b3 = Complex { re: d.im, im: -d.re };
                    *x0 = cadd(b0, b2);
                    *x2 = csub(b0, b2);
                    *x1 = cadd(b1, b3);
                    *x3 = csub(b1, b3);
                }
            }
            offset += half;
            half *= 4;
        }
    }
}

/// Reusable buffer for [`SineGrid`] transforms.
#[derive(Debug, Clone)]
pub struct GridScratch {
    buf: Vec<Complex>,
    fft: Vec<Complex>,
    parity: Vec<f64>,
}

/// Dot product with four independent accumulators.
#[inline]
fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|x| *x == 0.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Clone)]
enum Backend {
    Builtin(Radix2Fft),
    #[cfg(feature = "rustfft")]
    External(alloc::sync::Arc<dyn rustfft::Fft<f64>>),
}

impl core::fmt::Debug for Backend {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Builtin(b) => write!(f, "Builtin({})", b.len),
            #[cfg(feature = "rustfft")]
            Self::External(e) => write!(f, "External({})", e.len()),
        }
    }
}

impl Backend {
    fn scratch_len(&self) -> usize {
        match self {
            Self::Builtin(_) => 0,
            #[cfg(feature = "rustfft")]
            Self::External(e) => e.get_inplace_scratch_len(),
        }
    }

    fn process(&self, data: &mut [Complex], scratch: &mut [Complex]) {
        match self {
            Self::Builtin(b) => {
                let _ = scratch;
                b.process(data)
            }
            #[cfg(feature = "rustfft")]
            Self::External(e) => e.process_with_scratch(data, scratch),
        }
    }
}

/// Zero-padded sine grid for `n_modes` retained modes.
#[derive(Debug, Clone)]
pub struct SineGrid {
    n_modes: usize,
    p: usize,
    fft: Backend,
    /// `e_k`-coefficient of the DCT output `Y_j`, row-major `N x (N + 1)` over the `j` of opposite parity to `k`.
    cos_to_sine: Vec<f64>,
}

impl SineGrid {
    /// Uses `rustfft` when the `rustfft` feature is on, the built-in FFT otherwise.
    pub fn new(n_modes: usize) -> Self {
        #[cfg(feature = "rustfft")]
        {
            let len = 2 * (2 * n_modes + 1).next_power_of_two();
            let plan = rustfft::FftPlanner::new().plan_fft_forward(len);
            Self::with_backend(n_modes, Backend::External(plan))
        }
        #[cfg(not(feature = "rustfft"))]
        Self::with_builtin_fft(n_modes)
    }

    /// Always uses the built-in radix-2/4 FFT.
    pub fn with_builtin_fft(n_modes: usize) -> Self {
        let len = 2 * (2 * n_modes.max(1) + 1).next_power_of_two();
        Self::with_backend(n_modes, Backend::Builtin(Radix2Fft::new(len)))
    }

    fn with_backend(n_modes: usize, fft: Backend) -> Self {
        assert!(n_modes >= 1, "sine grid needs at least one mode");
        let p = (2 * n_modes + 1).next_power_of_two();
        // only j with k + j odd contribute: odd k read even j = 0, 2, .., 2N and
        // even k read odd j = 1, 3, .., 2N - 1; the DCT scale 1/P (1/2P for j = 0) is folded in
        let width = n_modes + 1;
        let mut cos_to_sine = vec![0.0; n_modes * width];
        for k in 1..=n_modes {
            let kf = k as f64;
            let row = &mut cos_to_sine[(k - 1) * width..k * width];
            for (i, r) in row.iter_mut().enumerate() {
                let j = 2 * i + (k + 1) % 2;
                if j > 2 * n_modes {
                    continue;
                }
                let jf = j as f64;
                let scale = if j == 0 { 0.5 } else { 1.0 } / p as f64;
                *r = scale * DIRICHLET_NORM * 2.0 * kf / (kf * kf - jf * jf);
            }
        }
        Self { n_modes, p, fft, cos_to_sine }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Number of interior grid points, `P - 1`.
    pub fn grid_len(&self) -> usize {
        self.p - 1
    }

    /// Interior nodes `j pi / P`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..self.p).map(|j| j as f64 * PI / self.p as f64).collect()
    }

    pub fn scratch(&self) -> GridScratch {
        GridScratch {
            buf: vec![Complex::default(); 2 * self.p],
            fft: vec![Complex::default(); self.fft.scratch_len()],
            parity: vec![0.0; 2 * (self.n_modes + 1)],
        }
    }

    fn load_odd(&self, buf: &mut [Complex], re: &[f64], re_scale: f64, im: Option<(&[f64], f64)>) {
        buf.iter_mut().for_each(|c| *c = Complex::default());
        let two_p = 2 * self.p;
        for (i, &c) in re.iter().enumerate() {
            let k = i + 1;
            buf[k].re = c * re_scale;
            buf[two_p - k].re = -c * re_scale;
        }
        if let Some((im, im_scale)) = im {
            for (i, &c) in im.iter().enumerate() {
                let k = i + 1;
                buf[k].im = c * im_scale;
                buf[two_p - k].im = -c * im_scale;
            }
        }
    }

    /// Grid values of the field with `e`-coefficients `coeffs`.
    pub fn to_grid(&self, coeffs: &[f64], out: &mut [f64], scratch: &mut GridScratch) -> Result<()> {
        check_len(self.n_modes, coeffs.len())?;
        check_len(self.grid_len(), out.len())?;
        self.load_odd(&mut scratch.buf, coeffs, DIRICHLET_NORM, None);
        self.fft.process(&mut scratch.buf, &mut scratch.fft);
        for (j, o) in out.iter_mut().enumerate() {
            *o = -0.5 * scratch.buf[j + 1].im;
        }
        Ok(())
    }

    /// Two syntheses with one FFT (real and imaginary parts of the odd extension).
    pub fn to_grid_pair(
        &self,
        a: &[f64],
        b: &[f64],
        out_a: &mut [f64],
        out_b: &mut [f64],
        scratch: &mut GridScratch,
    ) -> Result<()> {
        check_len(self.n_modes, a.len())?;
        check_len(self.n_modes, b.len())?;
        check_len(self.grid_len(), out_a.len())?;
        check_len(self.grid_len(), out_b.len())?;
        // a zero partner would pick up rounding crosstalk through the shared FFT
        if is_zero(b) {
            out_b.iter_mut().for_each(|x| *x = 0.0);
            return self.to_grid(a, out_a, scratch);
        }
        if is_zero(a) {
            out_a.iter_mut().for_each(|x| *x = 0.0);
            return self.to_grid(b, out_b, scratch);
        }
        self.load_odd(&mut scratch.buf, a, DIRICHLET_NORM, Some((b, DIRICHLET_NORM)));
        self.fft.process(&mut scratch.buf, &mut scratch.fft);
        for j in 0..self.grid_len() {
            let x = scratch.buf[j + 1];
            out_a[j] = -0.5 * x.im;
            out_b[j] = 0.5 * x.re;
        }
        Ok(())
    }

    /// `e`-coefficients of modes `1..=N` of a sine polynomial of degree `< 2P - N`
    /// sampled on the grid (e.g. an odd product of fields).
    pub fn from_grid(&self, grid: &[f64], out: &mut [f64], scratch: &mut GridScratch) -> Result<()> {
        check_len(self.grid_len(), grid.len())?;
        check_len(self.n_modes, out.len())?;
        let GridScratch { buf, fft, .. } = scratch;
        buf.iter_mut().for_each(|c| *c = Complex::default());
        self.load_real(buf, grid, -1.0);
        self.fft.process(buf, fft);
        self.read_sine(buf, out);
        Ok(())
    }

    /// Galerkin coefficients `<f, e_k>`, `k = 1..=N`, of a cosine polynomial of
    /// degree `<= 2N` that vanishes at both ends (e.g. a product of two fields).
    pub fn from_grid_even(&self, grid: &[f64], out: &mut [f64], scratch: &mut GridScratch) -> Result<()> {
        check_len(self.grid_len(), grid.len())?;
        check_len(self.n_modes, out.len())?;
        let GridScratch { buf, fft, parity } = scratch;
        buf.iter_mut().for_each(|c| *c = Complex::default());
        self.load_real(buf, grid, 1.0);
        self.fft.process(buf, fft);
        self.read_cosine(buf, out, parity);
        Ok(())
    }

    /// [`Self::from_grid`] of `odd` and [`Self::from_grid_even`] of `even` with one FFT.
    pub fn from_grid_split(
        &self,
        odd: &[f64],
        even: &[f64],
        out_odd: &mut [f64],
        out_even: &mut [f64],
        scratch: &mut GridScratch,
    ) -> Result<()> {
        check_len(self.grid_len(), odd.len())?;
        check_len(self.grid_len(), even.len())?;
        check_len(self.n_modes, out_odd.len())?;
        check_len(self.n_modes, out_even.len())?;
        if is_zero(even) {
            out_even.iter_mut().for_each(|x| *x = 0.0);
            return self.from_grid(odd, out_odd, scratch);
        }
        if is_zero(odd) {
            out_odd.iter_mut().for_each(|x| *x = 0.0);
            return self.from_grid_even(even, out_even, scratch);
        }
        let GridScratch { buf, fft, parity } = scratch;
        buf.iter_mut().for_each(|c| *c = Complex::default());
        self.load_real(buf, odd, -1.0);
        self.load_real(buf, even, 1.0);
        self.fft.process(buf, fft);
        self.read_sine(buf, out_odd);
        self.read_cosine(buf, out_even, parity);
        Ok(())
    }

    /// Adds the extension with `f(2pi - x) = parity f(x)` to the real part.
    fn load_real(&self, buf: &mut [Complex], grid: &[f64], parity: f64) {
        let two_p = 2 * self.p;
        for (i, &g) in grid.iter().enumerate() {
            let j = i + 1;
            buf[j].re += g;
            buf[two_p - j].re += parity * g;
        }
    }

    fn read_sine(&self, buf: &[Complex], out: &mut [f64]) {
        // sine coefficient s_k = (2/P) sum_j g_j sin(pi k j / P); e-coefficient = s_k / sqrt(2/pi)
        let scale = -0.5 * 2.0 / (self.p as f64 * DIRICHLET_NORM);
        for (i, o) in out.iter_mut().enumerate() {
            *o = scale * buf[i + 1].im;
        }
    }

    fn read_cosine(&self, buf: &[Complex], out: &mut [f64], parity_split: &mut [f64]) {
        let width = self.n_modes + 1;
        let (even, odd) = parity_split.split_at_mut(width);
        for (i, (e, o)) in even.iter_mut().zip(odd.iter_mut()).enumerate() {
            *e = buf[2 * i].re;
            *o = buf[2 * i + 1].re;
        }
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.cos_to_sine[k * width..(k + 1) * width];
            // k is 0-based here: 1-based odd k pairs with even j
            let y = if k % 2 == 0 { &*even } else { &*odd };
            *o = dot(row, y);
        }
    }

    /// Galerkin coefficients of the pointwise product of one, two or three fields.
    pub fn product(&self, factors: &[&[f64]]) -> Result<Vec<f64>> {
        if factors.len() > 3 {
            return Err(Error::Domain(format!("{} factors exceed the grid resolution", factors.len())));
        }
        let mut scratch = self.scratch();
        let mut acc = vec![1.0; self.grid_len()];
        let mut tmp = vec![0.0; self.grid_len()];
        for f in factors {
            self.to_grid(f, &mut tmp, &mut scratch)?;
            acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a *= t);
        }
        let mut out = vec![0.0; self.n_modes];
        if factors.len() % 2 == 1 {
            self.from_grid(&acc, &mut out, &mut scratch)?;
        } else {
            self.from_grid_even(&acc, &mut out, &mut scratch)?;
        }
        Ok(out)
    }
}
