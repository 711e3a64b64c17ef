mod common;

use blindmimo::channel::{
    beamspace_bin, draw_channel, snap_to_grid, steering_vector, ChannelConfig, GridMode,
};
use blindmimo::numerics::{
    dft_matrix, hermitian_eig, hpd_inverse, hpd_logdet, q_inverse, q_logdet,
    sample_complex_gaussian,
};
use blindmimo::{CMatrix, CMatrix32, RngStream, C};

use common::*;

#[test]
fn eig_reconstructs_and_orders() {
    for seed in 0..50 {
        let a = gaussian(7, 7, seed, 0);
        let h = &a + &a.adjoint();
        let eig = hermitian_eig(&h).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        assert!((&eig.reconstruct() - &h).max_abs() < 1e-10 * h.max_abs());
        let gram = eig.vectors.adjoint_matmul(&eig.vectors);
        assert!((&gram - &CMatrix::identity(7)).max_abs() < 1e-11);
    }
}

#[test]
fn low_rank_helpers_match_dense_oracles() {
    for seed in 0..50 {
        let n = 3 + (seed as usize % 6);
        let k = 1 + (seed as usize % 3).min(n - 1);
        let s = gaussian(n, k, 500 + seed, 0);
        let rho = 0.05 + 0.3 * seed as f64;
        let q = dense_q(&s, rho);
        let inv = hpd_inverse(&q).unwrap();
        assert!((&q_inverse(&s, rho).unwrap() - &inv).max_abs() < 1e-10 * inv.max_abs().max(1.0));
        let ld = hpd_logdet(&q).unwrap();
        assert!((q_logdet(&s, rho).unwrap() - ld).abs() < 1e-10 * ld.abs().max(1.0));
    }
}

#[test]
fn low_rank_helpers_in_single_precision() {
    let s64 = gaussian(6, 2, 9, 0);
    let s32 = CMatrix32::from_fn(6, 2, |i, j| {
        let z = s64[(i, j)];
        C::new(z.re as f32, z.im as f32)
    });
    let ld64 = q_logdet(&s64, 0.5).unwrap();
    let ld32 = q_logdet(&s32, 0.5f32).unwrap();
    assert!((ld32 as f64 - ld64).abs() < 1e-4 * ld64.abs());
    let inv32 = q_inverse(&s32, 0.5f32).unwrap();
    let inv64 = q_inverse(&s64, 0.5).unwrap();
    for (a, b) in inv32.as_slice().iter().zip(inv64.as_slice()) {
        assert!((a.re as f64 - b.re).abs() < 1e-4 && (a.im as f64 - b.im).abs() < 1e-4);
    }
}

#[test]
fn dft_columns_are_steering_vectors_on_grid() {
    let n = 8;
    let f = dft_matrix::<f64>(n).unwrap();
    for q in 0..=n / 2 {
        let theta = (q as f64 / (0.5 * n as f64)).asin();
        let a = steering_vector(theta, n, 0.5);
        let bin = beamspace_bin(q, n);
        // the steering vector is √N times one DFT column
        for p in 0..n {
            let expected = f[(p, bin)] * (n as f64).sqrt();
            assert!((a[p] - expected).norm() < 1e-12, "q {q} p {p}");
        }
    }
}

#[test]
fn channel_energy_matches_path_count() {
    let cfg = ChannelConfig::new(32, 2, 3);
    let trials = 2000;
    let mut total = 0.0;
    for t in 0..trials {
        let ch = draw_channel::<f64>(&cfg, &mut RngStream::new(3, t)).unwrap();
        total += ch.h.norm_sqr();
    }
    // E‖h_k‖² = N·L per user
    let per_user = total / (trials as f64 * 2.0);
    assert!((per_user - 96.0).abs() < 0.05 * 96.0, "{per_user}");
}

#[test]
fn angles_are_uniform() {
    let cfg = ChannelConfig::new(8, 2, 3);
    let mut angles: Vec<f64> = (0..500)
        .flat_map(|t| {
            draw_channel::<f64>(&cfg, &mut RngStream::new(4, t))
                .unwrap()
                .angles
                .into_iter()
                .flatten()
        })
        .collect();
    assert!(angles
        .iter()
        .all(|&a| (0.0..std::f64::consts::PI).contains(&a)));
    angles.sort_by(f64::total_cmp);
    let n = angles.len() as f64;
    let d = angles
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let cdf = a / std::f64::consts::PI;
            (cdf - i as f64 / n)
                .abs()
                .max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    // Kolmogorov–Smirnov critical value at the 0.1% level
    assert!(d < 1.95 / n.sqrt(), "D = {d}");
}

#[test]
fn on_grid_channels_are_sparse_in_beamspace() {
    let cfg = ChannelConfig::new(16, 3, 2).with_grid_mode(GridMode::OnGrid);
    for t in 0..100 {
        let ch = draw_channel::<f64>(&cfg, &mut RngStream::new(5, t)).unwrap();
        let mut off_support = 0.0f64;
        for k in 0..3 {
            let support = ch.user_support(k);
            assert!(!support.is_empty() && support.len() <= 2);
            for bin in 0..16 {
                if !support.contains(&bin) {
                    off_support = off_support.max(ch.beamspace[(bin, k)].norm());
                }
            }
        }
        assert!(off_support < 1e-10);
        for (k, angles) in ch.angles.iter().enumerate() {
            for &a in angles {
                let p = snap_to_grid(a, 16, 0.5).unwrap();
                assert!((p.theta - a).abs() < 1e-9);
                assert!(ch
                    .user_support(k)
                    .contains(&beamspace_bin(p.grid_index, 16)));
            }
        }
    }
}

#[test]
fn off_grid_channels_leak_across_bins() {
    let cfg = ChannelConfig::new(16, 1, 1);
    let ch = draw_channel::<f64>(&cfg, &mut RngStream::new(6, 0)).unwrap();
    assert!(ch.support.is_empty());
    let significant = (0..16)
        .filter(|&b| ch.beamspace[(b, 0)].norm() > 1e-6)
        .count();
    assert!(significant > 1);
}

#[test]
fn complex_gaussian_has_requested_variance() {
    let x = sample_complex_gaussian::<f64>(200, 200, 2.5, &mut RngStream::new(7, 0));
    let mean_power = x.norm_sqr() / 40_000.0;
    assert!((mean_power - 2.5).abs() < 0.05);
    let re_power: f64 = x.as_slice().iter().map(|z| z.re * z.re).sum::<f64>() / 40_000.0;
    assert!((re_power - 1.25).abs() < 0.05);
}
