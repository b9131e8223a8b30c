mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use common::*;
use ris_align::alignment::{
    draw_channel, laguerre_half, magnitude_moments, rician_approx, ChannelSampler,
};
use ris_align::special::{bessel_i0, bessel_i1};
use ris_align::{AlignmentModel, BranchDistribution, RandomStream, WindowConvention};

fn dists() -> Vec<BranchDistribution<f64>> {
    vec![
        BranchDistribution::rayleigh(1.0).unwrap(),
        BranchDistribution::rayleigh(0.3).unwrap(),
        BranchDistribution::rician(1.0, 1.0).unwrap(),
        BranchDistribution::rician(2.0, 0.5).unwrap(),
        BranchDistribution::rician(5.0, 0.2).unwrap(),
    ]
}

#[test]
fn densities_integrate_to_one() {
    for d in dists() {
        let m = d.moments();
        let top = 20.0 * (m.mean + d.scale().unwrap().sqrt());
        let mass = integrate_split(&|x| d.pdf(x).unwrap(), 0.0, top, 200, 1e-12);
        assert!((mass - 1.0).abs() < 1e-9, "{d:?}: {mass}");
    }
}

#[test]
fn bessel_agrees_with_integral_representation() {
    for &x in &[0.3, 1.0, 4.0, 12.0, 30.0] {
        assert_relative_eq!(bessel_i0(x), bessel_i0_trapezoid(x), max_relative = 1e-12);
        assert_relative_eq!(bessel_i1(x), bessel_i1_trapezoid(x), max_relative = 1e-12);
    }
}

#[test]
fn rician_density_against_independent_bessel() {
    let d = BranchDistribution::rician(1.0, 1.0).unwrap();
    for &x in &[0.2, 1.0, 3.0] {
        assert_relative_eq!(d.pdf(x).unwrap(), rician_pdf(1.0, 1.0, x), max_relative = 1e-10);
    }
}

#[test]
fn moments_match_quadrature() {
    for d in dists() {
        let m = d.moments();
        let top = 20.0 * (m.mean + d.scale().unwrap().sqrt());
        let mean = integrate_split(&|x| x * d.pdf(x).unwrap(), 0.0, top, 200, 1e-12);
        let ms = integrate_split(&|x| x * x * d.pdf(x).unwrap(), 0.0, top, 200, 1e-12);
        assert_relative_eq!(m.mean, mean, max_relative = 1e-8);
        assert_relative_eq!(m.mean_square, ms, max_relative = 1e-8);
    }
    let r = BranchDistribution::rayleigh(1.0).unwrap().moments();
    assert_relative_eq!(r.mean, 1.2533141373155003, max_relative = 1e-14);
    assert_eq!(BranchDistribution::rician(2.0, 0.5).unwrap().moments().mean_square, 5.0);
}

#[test]
fn cdf_matches_integrated_density() {
    for d in dists() {
        for &x in &[0.05, 0.5, 1.0, 2.5, 5.5] {
            let want = integrate_split(&|t| d.pdf(t).unwrap(), 0.0, x, 20, 1e-14);
            assert!((d.cdf(x) - want).abs() < 1e-11, "{d:?} at {x}: {} vs {want}", d.cdf(x));
        }
    }
}

#[test]
fn rayleigh_sample_mean_within_three_sigma() {
    let d = BranchDistribution::rayleigh(1.0).unwrap();
    let xs = d.sample(1_000_000, &RandomStream::new(2024));
    let (mean, _) = mean_and_var(&xs);
    let sigma = ((2.0 - PI / 2.0) / 1e6).sqrt();
    assert!((mean - 1.2533141373155003).abs() < 3.0 * sigma, "{mean}");
}

#[test]
fn samples_pass_kolmogorov_smirnov() {
    for (i, d) in dists().into_iter().enumerate() {
        let xs = d.sample(100_000, &RandomStream::with_substream(99, i as u64));
        let ks = ks_statistic(xs, |x| d.cdf(x));
        assert!(ks < 0.01, "{d:?}: {ks}");
    }
}

#[test]
fn rician_sample_mean_square() {
    let d = BranchDistribution::rician(2.0, 0.5).unwrap();
    let sq: Vec<f64> = d.sample(200_000, &RandomStream::new(5)).iter().map(|x| x * x).collect();
    let (m, v) = mean_and_var(&sq);
    assert!((m - 5.0).abs() < 3.0 * (v / sq.len() as f64).sqrt(), "{m}");
}

#[test]
fn laguerre_cross_checked_by_rician_mean_integral() {
    // alpha = 2, beta = 1 gives argument -alpha^2/(2 beta^2) = -2.
    let quad = integrate_split(&|x| x * rician_pdf(2.0, 1.0, x), 0.0, 30.0, 100, 1e-13);
    let inverted = quad / (PI / 2.0).sqrt();
    assert_relative_eq!(laguerre_half(-2.0).unwrap(), inverted, max_relative = 1e-10);
    let direct = (-1.0f64).exp() * (3.0 * bessel_i0_trapezoid(1.0) + 2.0 * bessel_i1_trapezoid(1.0));
    assert_relative_eq!(laguerre_half(-2.0).unwrap(), direct, max_relative = 1e-12);
}

#[test]
fn rician_mean_tends_to_specular_amplitude() {
    // K = s^2 / 2b = 1e4
    let d = BranchDistribution::<f64>::rician(200.0, 2.0).unwrap();
    assert!((d.moments().mean / 200.0 - 1.0).abs() < 1e-3);
}

fn mc_moments(model: &AlignmentModel<f64>, dist: &BranchDistribution<f64>, m: usize, n: u64, seed: u64) -> (f64, f64) {
    let sampler: ChannelSampler<f64> = model.sampler(m).unwrap();
    let mut rng = RandomStream::new(seed).rng();
    let xs: Vec<f64> = (0..n).map(|_| sampler.draw(&mut rng, dist).magnitude).collect();
    mean_and_var(&xs)
}

#[test]
fn random_alignment_moments() {
    let d = BranchDistribution::rayleigh(1.0).unwrap();
    let model = AlignmentModel::random();
    let closed = magnitude_moments(&model, &d, 16).unwrap();
    assert_relative_eq!(closed.mean, (16.0 * PI * 2.0f64).sqrt() / 2.0, max_relative = 1e-14);
    assert_relative_eq!(closed.variance, 16.0 * 2.0 * (4.0 - PI) / 4.0, max_relative = 1e-14);
    let (mean, var) = mc_moments(&model, &d, 16, 1_000_000, 11);
    assert!((mean - closed.mean).abs() < 3.0 * (var / 1e6).sqrt(), "{mean}");
    // Standard error of a sample variance: sqrt((mu4 - sigma^4)/n); |H|^2 is
    // exponential here so mu4 stays modest, and 2% is well beyond 3 SE.
    assert!((var / closed.variance - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn perfect_alignment_moments() {
    let d = BranchDistribution::rayleigh(1.0).unwrap();
    let model = AlignmentModel::perfect(0.0);
    let closed = magnitude_moments(&model, &d, 4).unwrap();
    let quad = integrate_split(&|x| x * rayleigh_pdf(1.0, x), 0.0, 40.0, 40, 1e-13);
    assert_relative_eq!(closed.mean, 4.0 * quad, max_relative = 1e-10);
    assert_relative_eq!(closed.mean, 5.0132565492620005, max_relative = 1e-12);
    let (mean, var) = mc_moments(&model, &d, 4, 1_000_000, 12);
    assert!((mean - closed.mean).abs() < 3.0 * (var / 1e6).sqrt());
    assert!((var / closed.variance - 1.0).abs() < 0.01);
}

#[test]
fn coherent_moments_reduce_to_perfect() {
    let d = BranchDistribution::rician(1.0, 0.5).unwrap();
    let tiny = AlignmentModel::coherent(0.0, 1e-9).unwrap();
    let a = magnitude_moments(&tiny, &d, 8).unwrap();
    let b = magnitude_moments(&AlignmentModel::perfect(0.0), &d, 8).unwrap();
    assert_relative_eq!(a.mean, b.mean, max_relative = 1e-9);
}

#[test]
fn coherent_mean_from_rician_approximation() {
    let d = BranchDistribution::rayleigh(1.0).unwrap();
    for levels in [2u32, 4] {
        let approx = rician_approx(&d, 16, levels).unwrap();
        let model = AlignmentModel::quantized(0.0, levels, WindowConvention::AppendixA).unwrap();
        let (mean, _) = mc_moments(&model, &d, 16, 400_000, 13);
        assert!((approx.mean() / mean - 1.0).abs() < 0.02, "L={levels}: {} vs {mean}", approx.mean());
    }
}

#[test]
fn draws_are_reproducible_and_distinct_across_streams() {
    let d = BranchDistribution::rayleigh(1.0).unwrap();
    let m = AlignmentModel::coherent(0.0, 0.5).unwrap();
    let a = draw_channel(&m, &d, 8, &RandomStream::with_substream(1, 2)).unwrap();
    let b = draw_channel(&m, &d, 8, &RandomStream::with_substream(1, 2)).unwrap();
    let c = draw_channel(&m, &d, 8, &RandomStream::with_substream(1, 3)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn random_alignment_approaches_rayleigh() {
    let d = BranchDistribution::rayleigh(1.0).unwrap();
    let sampler = AlignmentModel::random().sampler(64).unwrap();
    let mut rng = RandomStream::new(21).rng();
    let scale = (64.0f64 * 2.0).sqrt();
    let xs: Vec<f64> = (0..100_000).map(|_| sampler.draw(&mut rng, &d).magnitude / scale).collect();
    // Unit mean-square Rayleigh: b = 1/2.
    let ks = ks_statistic(xs, |x| rayleigh_cdf(0.5, x));
    assert!(ks < 0.02, "{ks}");
}
