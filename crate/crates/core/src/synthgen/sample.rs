//! Portable distribution transforms on top of a ChaCha stream.
//!
//! Only uniform `f64` draws come from `rand`; every other distribution is
//! derived here so that a seed pins down the output independently of the
//! `rand_distr` implementation details.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream for instance `index` of a dataset with master seed `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw in `(0, 1]`.
#[inline]
fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Integer uniform on `lo..=hi`.
#[inline]
pub fn uniform_int<R: Rng + ?Sized>(rng: &mut R, lo: usize, hi: usize) -> usize {
    rng.gen_range(lo..=hi)
}

#[inline]
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.gen::<f64>() < p
}

/// Weibull with scale 1 by inverse CDF.
#[inline]
pub fn weibull<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    (-unit_open(rng).ln()).powf(1.0 / shape)
}

/// One Box–Muller output per call; the sine branch is discarded.
#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1 = unit_open(rng);
    let u2 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    mean + sd * standard_normal(rng)
}
