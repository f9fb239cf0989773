#![allow(dead_code)]

use prodgeom::domain::DomainBox;
use prodgeom::prodfun::{build_acms, build_cobb_douglas, build_quasi_sum, FunctionExpr, QuasiSumSpec, ScalarFn};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_box(n: usize) -> DomainBox {
    DomainBox::cube(0.5, 2.0, n).unwrap()
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.gen_range(lo..hi)
}

pub fn random_cobb_douglas(r: &mut ChaCha8Rng, n: usize) -> FunctionExpr {
    let alpha = (0..n).map(|_| uniform(r, 0.1, 1.0)).collect();
    build_cobb_douglas(uniform(r, 0.5, 2.0), alpha).unwrap()
}

/// rho away from zero, in [-2, -0.2] or [0.2, 2].
pub fn random_rho(r: &mut ChaCha8Rng) -> f64 {
    let m = uniform(r, 0.2, 2.0);
    if r.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

pub fn random_acms(r: &mut ChaCha8Rng, n: usize) -> FunctionExpr {
    let a = (0..n).map(|_| uniform(r, 0.5, 1.5)).collect();
    build_acms(uniform(r, 0.5, 2.0), a, random_rho(r), uniform(r, 0.5, 1.5)).unwrap()
}

/// Strictly increasing inner function that stays positive on the orthant.
fn positive_inner(r: &mut ChaCha8Rng) -> ScalarFn {
    match r.gen_range(0..3) {
        0 => ScalarFn::power(uniform(r, 0.3, 1.0), uniform(r, 0.3, 1.5), 0.0).unwrap(),
        1 => ScalarFn::affine(uniform(r, 0.3, 1.0), 0.0).unwrap(),
        _ => ScalarFn::exp(uniform(r, 0.2, 0.5), 0.0).unwrap(),
    }
}

/// Strictly increasing inner function of any sign.
fn signed_inner(r: &mut ChaCha8Rng) -> ScalarFn {
    match r.gen_range(0..4) {
        0 => ScalarFn::power(-uniform(r, 0.3, 1.0), -uniform(r, 0.3, 1.5), uniform(r, -0.5, 0.5)).unwrap(),
        1 => ScalarFn::log(uniform(r, 0.3, 1.0), uniform(r, -0.5, 0.5)).unwrap(),
        2 => ScalarFn::affine(uniform(r, 0.3, 1.0), uniform(r, -1.0, 1.0)).unwrap(),
        _ => positive_inner(r),
    }
}

/// Random valid quasi-sum with moderate gradients on [0.5, 2]^n.
pub fn random_quasi_sum_spec(r: &mut ChaCha8Rng, n: usize) -> QuasiSumSpec {
    if r.gen_bool(0.5) {
        let outer = ScalarFn::power(uniform(r, 0.5, 1.0), uniform(r, 0.5, 2.0), 0.0).unwrap();
        QuasiSumSpec::new(outer, (0..n).map(|_| positive_inner(r)).collect()).unwrap()
    } else {
        let outer = if r.gen_bool(0.5) {
            ScalarFn::exp(uniform(r, 0.2, 0.6), uniform(r, -0.5, 0.5)).unwrap()
        } else {
            ScalarFn::affine(uniform(r, 0.5, 2.0), uniform(r, -1.0, 1.0)).unwrap()
        };
        QuasiSumSpec::new(outer, (0..n).map(|_| signed_inner(r)).collect()).unwrap()
    }
}

pub fn random_quasi_sum(r: &mut ChaCha8Rng, n: usize) -> FunctionExpr {
    build_quasi_sum(random_quasi_sum_spec(r, n), &unit_box(n)).unwrap()
}

/// Linearly homogeneous ACMS: `d = 1`.
pub fn unit_degree_acms(r: &mut ChaCha8Rng, n: usize) -> (f64, Vec<f64>, f64) {
    let a = (0..n).map(|_| uniform(r, 0.5, 1.5)).collect();
    (uniform(r, 0.5, 2.0), a, random_rho(r))
}

/// Random positive weights summing to one.
pub fn unit_sum_alpha(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| uniform(r, 0.2, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|a| a / total).collect()
}
