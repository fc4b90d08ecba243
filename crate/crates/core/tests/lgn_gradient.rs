use groundfuse_core::lgn::layers::bce_from_logit;
use groundfuse_core::lgn::{CellTarget, LgnConfig, LgnModel};
use groundfuse_core::rng::seeded;
use groundfuse_core::Relation;
use rand::Rng;

const H: usize = 16;
const W: usize = 16;

fn loss(model: &LgnModel, input: &[f64], targets: &[CellTarget]) -> f64 {
    let cache = model.build_pyramid(input, H, W).unwrap();
    let mut l = 0.0;
    let mut w = 0.0;
    for t in targets {
        l += t.weight * bce_from_logit(model.logit(&cache, t.row, t.col, t.relation).unwrap(), t.target);
        w += t.weight;
    }
    l / w
}

fn check(config: LgnConfig, seed: u64) {
    let mut rng = seeded(seed, 0);
    let model = LgnModel::init(config, &mut rng).unwrap();
    let input: Vec<f64> = (0..H * W * config.in_channels).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let targets: Vec<CellTarget> = (0..6)
        .map(|i| CellTarget {
            row: rng.gen_range(0..H),
            col: rng.gen_range(0..W),
            relation: Relation::ALL[i % Relation::ALL.len()],
            target: [0.0, 1.0, 0.3][i % 3],
            weight: 1.0 + i as f64,
        })
        .collect();
    let cache = model.build_pyramid(&input, H, W).unwrap();
    let mut grad = vec![0.0; model.params.len()];
    let (_, total) = model.accumulate_gradient(&cache, &targets, &mut grad).unwrap();
    grad.iter_mut().for_each(|g| *g /= total);

    let h = 1e-4;
    let mut worst = 0.0f64;
    for (name, slots) in model.layout.named() {
        for slot in [slots.w, slots.b] {
            for k in 0..slot.len.min(5) {
                let i = slot.off + (k * 7919) % slot.len;
                let mut plus = model.clone();
                plus.params[i] += h;
                let mut minus = model.clone();
                minus.params[i] -= h;
                let numeric = (loss(&plus, &input, &targets) - loss(&minus, &input, &targets)) / (2.0 * h);
                let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-6);
                assert!(rel < 1e-3, "{name}[{i}]: analytic {} numeric {numeric} rel {rel}", grad[i]);
                worst = worst.max(rel);
            }
        }
    }
    eprintln!("worst relative error {worst:.2e}");
}

fn small() -> LgnConfig {
    LgnConfig { features: 2, map_embed: 4, rel_embed: 3, hidden: 4, roi: 3, ..LgnConfig::default() }
}

#[test]
fn gradient_matches_finite_differences() {
    check(small(), 1);
}

#[test]
fn single_level_gradient_matches_finite_differences() {
    check(LgnConfig { single_level: true, ..small() }, 2);
}

#[test]
fn odd_window_at_the_border() {
    check(LgnConfig { roi: 5, levels: 3, ..small() }, 3);
}
