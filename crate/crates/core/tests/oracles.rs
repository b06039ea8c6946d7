//! Independent oracles for the combinatorics, model tables and objectives.
#![allow(clippy::needless_range_loop)]

use mpl_core::data::Sample;
use mpl_core::models::{CategoricalParams, FvbmParams, RbmParams};
use mpl_core::pl::{self, scheme_categorical, scheme_full_conditionals, scheme_ml, EntropyVariant};
use mpl_core::pmf::TabularPmf;
use mpl_core::sample::{Rng, SeedSpec};
use mpl_core::support::{enumerate_partitions, enumerate_subsets, partition_count, PartitionId, SupportSpec};

fn bits(q: usize, i: usize) -> Vec<f64> {
    (0..q).map(|k| ((i >> (q - 1 - k)) & 1) as f64).collect()
}

fn random_fvbm(rng: &mut Rng, q: usize, scale: f64) -> FvbmParams {
    let theta: Vec<f64> = (0..FvbmParams::num_free(q))
        .map(|_| rng.uniform_in(-scale, scale))
        .collect();
    FvbmParams::from_flat(q, &theta).unwrap()
}

fn random_rbm(rng: &mut Rng, q: usize, r: usize, scale: f64) -> RbmParams {
    let theta: Vec<f64> = (0..RbmParams::num_free(q, r))
        .map(|_| rng.uniform_in(-scale, scale))
        .collect();
    RbmParams::from_flat(q, r, &theta).unwrap()
}

fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

#[test]
fn subset_and_partition_counts() {
    for q in 1..=10usize {
        let spec = SupportSpec::binary(q).unwrap();
        let subsets = enumerate_subsets(&spec).unwrap();
        assert_eq!(subsets.len(), (1usize << q) - 1);
        let parts = enumerate_partitions(&spec).unwrap();
        let full = (1u64 << q) - 1;
        let mut brute = Vec::new();
        for left in 1..=full {
            for right in 1..=full {
                if left & right == 0 {
                    brute.push((left, right));
                }
            }
        }
        let mut got: Vec<(u64, u64)> = parts.iter().map(|p| (p.left(), p.right())).collect();
        got.sort_unstable();
        assert_eq!(got, brute, "q = {q}");
        assert_eq!(parts.len() as u64, partition_count(q as u32));
    }
}

#[test]
fn fvbm_conditionals_match_table() {
    let mut rng = SeedSpec::new(11, 0).rng();
    for draw in 0..20 {
        let q = 2 + draw % 5;
        let p = random_fvbm(&mut rng, q, 1.0);
        let joint = p.joint().unwrap();
        for k in 1..=q {
            let cond = joint.condition(PartitionId::full_conditional(q, k).unwrap()).unwrap();
            for i in 0..1usize << q {
                let x = bits(q, i);
                let xi: Vec<i64> = x.iter().map(|&v| v as i64).collect();
                let field: f64 = (0..q).map(|l| p.coupling(l, k - 1) * x[l]).sum::<f64>() + p.bias()[k - 1];
                let one = 1.0 / (1.0 + (-field).exp());
                let want = if x[k - 1] == 1.0 { one } else { 1.0 - one };
                let table = cond.prob_of(&xi).unwrap().unwrap();
                assert!((table - want).abs() < 1e-12);
                assert!((p.conditional(&x, k - 1) - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn rbm_marginal_matches_hidden_sum() {
    let mut rng = SeedSpec::new(12, 0).rng();
    for q in 1..=6 {
        for r in [1, 3, 6] {
            let p = random_rbm(&mut rng, q, r, 1.0);
            let mut weights = Vec::new();
            for i in 0..1usize << q {
                let x = bits(q, i);
                let mut s = 0.0;
                for yi in 0..1usize << r {
                    let y = bits(r, yi);
                    let mut e = 0.0;
                    for l in 0..q {
                        e += p.visible_bias()[l] * x[l];
                        for j in 0..r {
                            e += x[l] * p.weight(l, j) * y[j];
                        }
                    }
                    for j in 0..r {
                        e += p.hidden_bias()[j] * y[j];
                    }
                    s += e.exp();
                }
                weights.push(s);
            }
            let z: f64 = weights.iter().sum();
            let marginal = p.marginal().unwrap();
            for (i, w) in weights.iter().enumerate() {
                let want = w / z;
                let got = marginal.probs()[i];
                assert!((got - want).abs() <= 1e-10 * want, "q {q} r {r}");
            }
        }
    }
}

#[test]
fn rbm_conditionals_match_table_and_literal_form() {
    let mut rng = SeedSpec::new(13, 0).rng();
    for draw in 0..20 {
        let q = 2 + draw % 5;
        let r = 1 + draw % 4;
        let p = random_rbm(&mut rng, q, r, 1.0);
        let joint = p.marginal().unwrap();
        for k in 0..q {
            let cond = joint
                .condition(PartitionId::full_conditional(q, k + 1).unwrap())
                .unwrap();
            for i in 0..1usize << q {
                let x = bits(q, i);
                let xi: Vec<i64> = x.iter().map(|&v| v as i64).collect();
                // Numerator over xi_k in {0, 1}, written out term by term.
                let num = |xk: f64| {
                    let mut e = p.visible_bias()[k] * xk;
                    for l in (0..q).filter(|&l| l != k) {
                        e += p.visible_bias()[l] * x[l];
                    }
                    for j in 0..r {
                        let mut h = p.weight(k, j) * xk + p.hidden_bias()[j];
                        for l in (0..q).filter(|&l| l != k) {
                            h += p.weight(l, j) * x[l];
                        }
                        e += softplus(h);
                    }
                    e.exp()
                };
                let want = num(x[k]) / (num(0.0) + num(1.0));
                let table = cond.prob_of(&xi).unwrap().unwrap();
                assert!((table - want).abs() < 1e-12);
                assert!((p.conditional(&x, k) - want).abs() < 1e-12);
            }
        }
    }
}

fn random_binary(rng: &mut Rng, q: usize, n: usize) -> Sample {
    Sample::new(q, (0..n * q).map(|_| rng.bernoulli(0.4) as i64).collect()).unwrap()
}

fn gradient_gap(value: impl Fn(&[f64]) -> f64, grad: &[f64], theta: &[f64]) -> f64 {
    let h = 1e-5;
    let fd: Vec<f64> = (0..theta.len())
        .map(|i| {
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[i] += h;
            down[i] -= h;
            (value(&up) - value(&down)) / (2.0 * h)
        })
        .collect();
    let diff: f64 = fd.iter().zip(grad).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = fd.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / norm.max(1.0)
}

#[test]
fn fvbm_gradient_matches_finite_differences() {
    let mut rng = SeedSpec::new(14, 0).rng();
    for _ in 0..10 {
        let q = 4;
        let data = random_binary(&mut rng, q, 200);
        let p = random_fvbm(&mut rng, q, 1.0);
        let g = p.logpl_grad(&data).unwrap();
        let gap = gradient_gap(
            |t| FvbmParams::from_flat(q, t).unwrap().logpl(&data).unwrap(),
            &g,
            &p.to_flat(),
        );
        assert!(gap <= 1e-6, "relative gap {gap}");
    }
}

#[test]
fn rbm_gradient_matches_finite_differences() {
    let mut rng = SeedSpec::new(15, 0).rng();
    for _ in 0..10 {
        let (q, r) = (4, 3);
        let data = random_binary(&mut rng, q, 200);
        let p = random_rbm(&mut rng, q, r, 1.0);
        let g = p.logpl_grad(&data).unwrap();
        let gap = gradient_gap(
            |t| RbmParams::from_flat(q, r, t).unwrap().logpl(&data).unwrap(),
            &g,
            &p.to_flat(),
        );
        assert!(gap <= 1e-6, "relative gap {gap}");
    }
}

#[test]
fn native_objectives_match_generic_full_conditionals() {
    let mut rng = SeedSpec::new(16, 0).rng();
    let q = 4;
    let data = random_binary(&mut rng, q, 50);
    let w = scheme_full_conditionals(q).unwrap();
    let f = random_fvbm(&mut rng, q, 1.0);
    let generic = pl::log_pl(&f.joint().unwrap(), &data, &w).unwrap().total;
    assert!((generic - f.logpl(&data).unwrap()).abs() < 1e-10);
    let b = random_rbm(&mut rng, q, 2, 1.0);
    let generic = pl::log_pl(&b.marginal().unwrap(), &data, &w).unwrap().total;
    assert!((generic - b.logpl(&data).unwrap()).abs() < 1e-10);
}

#[test]
fn ml_scheme_is_log_likelihood() {
    let mut rng = SeedSpec::new(17, 0).rng();
    for _ in 0..50 {
        let q = 1 + (rng.next_u64() % 4) as usize;
        let values: Vec<Vec<i64>> = (0..q)
            .map(|_| {
                let radix = 2 + (rng.next_u64() % 3) as i64;
                (0..radix).map(|v| v * 3 - 2).collect()
            })
            .collect();
        let spec = SupportSpec::new(values.clone()).unwrap();
        let len = spec.table_len().unwrap();
        let raw: Vec<f64> = (0..len).map(|_| rng.uniform_in(0.05, 1.0)).collect();
        let total: f64 = raw.iter().sum();
        let f = TabularPmf::new(spec.clone(), raw.iter().map(|w| w / total).collect()).unwrap();
        let data: Vec<Vec<i64>> = (0..30)
            .map(|_| {
                values
                    .iter()
                    .map(|v| v[(rng.next_u64() % v.len() as u64) as usize])
                    .collect()
            })
            .collect();
        let sample = Sample::from_rows(q, &data).unwrap();
        let want: f64 = data.iter().map(|x| f.prob(x).unwrap().ln()).sum();
        let got = pl::log_pl(&f, &sample, &scheme_ml(q).unwrap()).unwrap().total;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn categorical_pseudo_entropy_closed_form() {
    for pi in [vec![0.2, 0.3, 0.5], vec![0.1, 0.6, 0.05, 0.25], vec![0.5, 0.5]] {
        let q = pi.len();
        let head: f64 = pi[..q - 1].iter().sum();
        let want: f64 = -pi.iter().map(|p| p * p.ln()).sum::<f64>()
            - pi[..q - 1].iter().map(|p| (p / head) * (p / head).ln()).sum::<f64>();
        let params = CategoricalParams::new(pi.clone()).unwrap();
        let w = scheme_categorical(q).unwrap();
        let f = params.joint().unwrap();
        let got = pl::pseudo_entropy(&f, &w, EntropyVariant::Unweighted).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!((params.pseudoentropy() - want).abs() < 1e-12);
        let report = pl::entropy_term_bound_check(&f, &w).unwrap();
        assert!(report.all_within && report.finite);
        assert!(report.max_summand <= pl::NEG_XLOGX_MAX);
    }
}

#[test]
fn uniform_ml_entropy() {
    for q in 1..=8 {
        let f = TabularPmf::uniform(SupportSpec::binary(q).unwrap()).unwrap();
        let h = pl::pseudo_entropy(&f, &scheme_ml(q).unwrap(), EntropyVariant::Unweighted).unwrap();
        assert!((h - q as f64 * std::f64::consts::LN_2).abs() < 1e-12);
    }
}

#[test]
fn categorical_scheme_objective_matches_closed_form() {
    let data = Sample::from_rows(3, &[[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 1, 0], [1, 0, 0]]).unwrap();
    let pi = [0.2, 0.3, 0.5];
    let counts = [2.0, 2.0, 1.0];
    let head = pi[0] + pi[1];
    let want: f64 = (0..3).map(|k| counts[k] * f64::ln(pi[k])).sum::<f64>()
        + (0..2)
            .map(|k| counts[k] * (f64::ln(pi[k]) - f64::ln(head)))
            .sum::<f64>();
    let params = CategoricalParams::new(pi.to_vec()).unwrap();
    assert!((params.logpl(&data).unwrap() - want).abs() < 1e-12);
    let generic = pl::log_pl(&params.joint().unwrap(), &data, &scheme_categorical(3).unwrap()).unwrap();
    assert!((generic.total - want).abs() < 1e-12);
}
