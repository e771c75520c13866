//! Discriminator training behaviour on the arc geometry.

use std::f64::consts::PI;
use std::sync::OnceLock;

use pfbi::discriminator::{evaluate, train_with_callback, DEFAULT_HIDDEN};
use pfbi::*;

fn half_arc(seed: u64) -> LatentDataset {
    let kind = SynthKind::Arc { radius: 1.0, start: 0.0, span: PI };
    generate(&SynthSpec { kind, dim: 2, n_points: 1000, noise_sigma: 0.05, seed }).unwrap()
}

fn prior_points(n: usize, seed: u64) -> Vec<LatentPoint> {
    let prior = PriorSpec::new(2).unwrap();
    let mut rng = RngState::new(seed, 3);
    (0..n).map(|_| LatentPoint::new(prior.sample(&mut rng))).collect()
}

fn trained() -> &'static DiscriminatorNet {
    static NET: OnceLock<DiscriminatorNet> = OnceLock::new();
    NET.get_or_init(|| train(&half_arc(11), &PriorSpec::new(2).unwrap(), &TrainConfig::default(), &DEFAULT_HIDDEN).unwrap())
}

#[test]
fn half_arc_held_out_auc() {
    let h = evaluate(trained(), half_arc(12).points(), &prior_points(2000, 1)).unwrap();
    assert!(h.auc >= 0.95, "held-out AUC {:.4}", h.auc);
}

#[test]
fn scores_fall_along_rays_into_empty_space() {
    let net = trained();
    let data = half_arc(13);
    // outward rays leave the arc radially; inward rays head for the empty centre
    for (dir, steps) in [(1.0, 8), (-1.0, 4)] {
        let mut profile = vec![0.0; steps + 1];
        for p in data.points().iter().take(300) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let u = [dir * p[0] / r, dir * p[1] / r];
            for (j, slot) in profile.iter_mut().enumerate() {
                let s = 0.2 * j as f64;
                *slot += net.forward(&[p[0] + s * u[0], p[1] + s * u[1]]).unwrap() / 300.0;
            }
        }
        for w in profile.windows(2) {
            assert!(w[1] <= w[0] + 1e-3, "direction {dir}: average profile {profile:?}");
        }
        assert!(profile[steps] < 0.5 * profile[0], "direction {dir}: average profile {profile:?}");
    }
}

#[test]
fn early_loss_trends_down() {
    let data = half_arc(11);
    let neg = prior_points(512, 2);
    let pos: Vec<&[f64]> = data.points()[..512].iter().map(|p| p.coords()).collect();
    let neg: Vec<&[f64]> = neg.iter().map(|p| p.coords()).collect();
    let mut checkpoints = Vec::new();
    let cfg = TrainConfig { steps: 100, ..TrainConfig::default() };
    train_with_callback(&data, &PriorSpec::new(2).unwrap(), &cfg, &DEFAULT_HIDDEN, |step, _, net| {
        if step % 10 == 0 || step == 99 {
            checkpoints.push(net.bce(&pos, &neg).unwrap());
        }
    })
    .unwrap();
    for w in checkpoints.windows(2) {
        assert!(w[1] <= w[0], "evaluation loss every 10 steps: {checkpoints:?}");
    }
}

#[test]
fn outputs_stay_strictly_inside_unit_interval() {
    let net = trained();
    for z in [[1e6, 0.0], [-1e6, 3e5], [0.0, 0.0], [1e-300, -1e-300], [0.0, 1.0]] {
        let s = net.forward(&z).unwrap();
        assert!(s > 0.0 && s < 1.0, "{z:?} -> {s}");
    }
}
