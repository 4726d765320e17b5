//! Closed-form values of the constructed instances, checked exactly.

use amdl_core::complexity::{disagreement_coefficient, star_number, theta_max, vc_dimension, VcDimension};
use amdl_core::domain::{best_nu, disagreement, loss, max_disagreement, worst_loss, LabeledDistribution, MdlInstance};
use amdl_core::instances::{gen_agnostic_lb, gen_prop1, gen_star_lb};

fn agnostic_table(k: usize, nu: f64, eps: f64) -> Vec<(&'static str, f64, f64)> {
    let base = gen_agnostic_lb(k, nu, eps, None).unwrap();
    let flipped = gen_agnostic_lb(k, nu, eps, Some(2)).unwrap();
    let h1 = base.class().hypothesis(0);
    let h2 = base.class().hypothesis(1);
    let d1 = &base.distributions()[0];
    let di = &base.distributions()[1];
    let di_flip = &flipped.distributions()[1];
    vec![
        ("L(h1,D1)", loss(h1, d1).unwrap(), 0.0),
        ("L(h1,Di)", loss(h1, di).unwrap(), nu - 2.0 * eps),
        ("L(h1,D'i)", loss(h1, di_flip).unwrap(), nu + 2.0 * eps),
        ("L(h2,D1)", loss(h2, d1).unwrap(), nu),
        ("L(h2,Di)", loss(h2, di).unwrap(), nu / 2.0 - 2.0 * eps),
        ("L(h2,D'i)", loss(h2, di_flip).unwrap(), nu / 2.0 + 2.0 * eps),
    ]
}

#[test]
fn agnostic_loss_table_is_exact() {
    for (name, got, want) in agnostic_table(4, 0.4, 0.05) {
        assert_eq!(got, want, "{name}: {got:?} vs {want:?}");
    }
}

#[test]
fn agnostic_optima() {
    let (nu, eps) = (0.4, 0.05);
    let base = gen_agnostic_lb(4, nu, eps, None).unwrap();
    assert_eq!(best_nu(&base), (0, nu - 2.0 * eps));
    assert_eq!(worst_loss(base.class().hypothesis(1), &base).unwrap(), nu);
    for flip in 2..=4 {
        let inst = gen_agnostic_lb(4, nu, eps, Some(flip)).unwrap();
        let (_, opt) = best_nu(&inst);
        let valid: Vec<usize> = (0..inst.class().len())
            .filter(|&h| worst_loss(inst.class().hypothesis(h), &inst).unwrap() <= opt + eps)
            .collect();
        assert_eq!(valid, vec![1], "flip {flip}");
    }
}

fn prop1_avg(inst: &MdlInstance) -> LabeledDistribution {
    inst.average_distribution().unwrap()
}

#[test]
fn prop1_coefficients() {
    let eps = 0.05;
    for k in [2usize, 4, 8] {
        let inst = gen_prop1(k, eps).unwrap();
        let hstar = inst.class().hypothesis(0);
        for d in inst.distributions() {
            assert_eq!(disagreement_coefficient(d, inst.class(), hstar, eps).unwrap(), 1.0);
        }
        assert_eq!(theta_max(&inst, hstar, eps).unwrap(), 1.0);
        let avg = prop1_avg(&inst);
        assert_eq!(disagreement_coefficient(&avg, inst.class(), hstar, eps / k as f64).unwrap(), k as f64);
    }
}

#[test]
fn prop1_losses_and_metric() {
    let eps = 0.05;
    let inst = gen_prop1(4, eps).unwrap();
    let class = inst.class();
    let hstar = class.hypothesis(0);
    for i in 1..=4 {
        let d = &inst.distributions()[i - 1];
        assert_eq!(loss(hstar, d).unwrap(), eps);
        assert_eq!(disagreement(hstar, class.hypothesis(i), d).unwrap(), eps);
        for j in 1..=4 {
            if j != i {
                assert_eq!(max_disagreement(class.hypothesis(i), class.hypothesis(j), &inst).unwrap(), eps);
            }
        }
    }
    let dis = class.full_version_space().region_map(class).unwrap().disagreement_points();
    assert_eq!(dis, vec![1, 2, 3, 4]);
    assert_eq!(best_nu(&inst).1, eps);
}

#[test]
fn star_family_measures() {
    for (k, theta) in [(2usize, 2usize), (2, 4), (3, 3), (4, 2)] {
        let inst = gen_star_lb(k, theta, 1, 1).unwrap();
        let h0 = inst.class().hypothesis(0);
        assert_eq!(vc_dimension(inst.class(), 12).unwrap(), VcDimension::Exact(1));
        assert!(star_number(inst.class(), h0, 128).unwrap().value >= k * theta);
        let eps = 0.9 / (2.0 * theta as f64);
        let labeler = inst.class().hypothesis(1);
        assert!(theta_max(&inst, labeler, eps).unwrap() <= theta as f64);
        assert!(theta_max(&inst, h0, eps).unwrap() <= theta as f64);
    }
}
