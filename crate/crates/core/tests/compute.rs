mod common;

use minigl::compute::{self, LocalCsr, TileConfig};
use minigl::{Error, FeatureMatrix};
use proptest::prelude::*;

fn configs() -> Vec<TileConfig> {
    [(8, 32), (4, 16), (1, 1), (3, 7), (31, 32)]
        .iter()
        .map(|&(x, y)| TileConfig::new(x, y, 1 << 20).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_matches_dense_oracle(seed in any::<u64>(), d in 1usize..40) {
        let csr = common::random_local_csr(seed, 60, 12);
        let x = FeatureMatrix::random(csr.num_sources(), d, seed ^ 1);
        let want = common::dense_product(&csr, &x);
        let naive = compute::aggregate_naive(&csr, &x).unwrap();
        for cfg in configs() {
            let got = compute::aggregate_forward(&csr, &x, &cfg).unwrap();
            prop_assert_eq!(got.data(), naive.data());
            for (g, w) in got.data().iter().zip(&want) {
                prop_assert!((f64::from(*g) - w).abs() <= 1e-5 * w.abs().max(1.0));
            }
        }
    }

    #[test]
    fn backward_is_the_adjoint(seed in any::<u64>(), d in 1usize..20) {
        let csr = common::random_local_csr(seed, 40, 8);
        let cfg = TileConfig::default();
        let x = FeatureMatrix::random(csr.num_sources(), d, seed ^ 2);
        let g = FeatureMatrix::random(csr.num_targets(), d, seed ^ 3);
        let ax = compute::aggregate_forward(&csr, &x, &cfg).unwrap();
        let atg = compute::aggregate_backward(&csr.transpose(), &g, &cfg).unwrap();
        let lhs: f64 = ax.data().iter().zip(g.data()).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
        let rhs: f64 = x.data().iter().zip(atg.data()).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-5 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn plan_covers_every_cell_once(nt in 0usize..100, d in 1usize..100, x in 1usize..32, y in 1usize..32, fmax in 0usize..20) {
        let cfg = TileConfig::new(x, y, 1 << 20).unwrap();
        let fanouts: Vec<usize> = (0..nt).map(|t| (t * 7) % (fmax + 1)).collect();
        let plan = compute::plan_tiles(nt, d, &fanouts, &cfg).unwrap();
        let mut hits = vec![0u8; nt * d];
        for tile in &plan.tiles {
            prop_assert!(tile.targets.len() <= x && tile.dims.len() <= y);
            let widest = tile.targets.clone().map(|t| fanouts[t]).max().unwrap();
            prop_assert_eq!(tile.max_fanout, widest);
            prop_assert_eq!(tile.scratch_bytes, 4 * x * y + 4 * x * widest);
            for t in tile.targets.clone() {
                for j in tile.dims.clone() {
                    hits[t * d + j] += 1;
                }
            }
        }
        prop_assert!(hits.iter().all(|&h| h == 1));
    }

    #[test]
    fn transpose_round_trips(seed in any::<u64>()) {
        let csr = common::random_local_csr(seed, 30, 6);
        let back = csr.transpose().transpose();
        let mut a: Vec<_> = csr.edges().collect();
        let mut b: Vec<_> = back.edges().collect();
        a.sort_by(|p, q| p.partial_cmp(q).unwrap());
        b.sort_by(|p, q| p.partial_cmp(q).unwrap());
        prop_assert_eq!(a, b);
    }
}

fn triple_loop(a: &FeatureMatrix, b: &FeatureMatrix) -> Vec<f64> {
    let (n, k, m) = (a.num_nodes(), a.dim(), b.dim());
    let mut out = vec![0f64; n * m];
    for i in 0..n {
        for j in 0..m {
            for l in 0..k {
                out[i * m + j] += f64::from(a.get(i, l)) * f64::from(b.get(l, j));
            }
        }
    }
    out
}

fn transpose(a: &FeatureMatrix) -> FeatureMatrix {
    let mut t = FeatureMatrix::zeros(a.dim(), a.num_nodes());
    for i in 0..a.num_nodes() {
        for j in 0..a.dim() {
            t.row_mut(j)[i] = a.get(i, j);
        }
    }
    t
}

#[test]
fn dense_products_match_triple_loop() {
    let a = FeatureMatrix::random(17, 9, 1);
    let b = FeatureMatrix::random(9, 5, 2);
    let c = FeatureMatrix::random(17, 5, 3);
    let close = |got: &FeatureMatrix, want: &[f64]| {
        got.data().iter().zip(want).all(|(g, w)| (f64::from(*g) - w).abs() <= 1e-6 * w.abs().max(1.0))
    };
    assert!(close(&compute::matmul(&a, &b).unwrap(), &triple_loop(&a, &b)));
    assert!(close(&compute::matmul_at_b(&a, &c).unwrap(), &triple_loop(&transpose(&a), &c)));
    assert!(close(&compute::matmul_a_bt(&c, &b).unwrap(), &triple_loop(&c, &transpose(&b))));
    assert!(compute::matmul(&a, &a).is_err());
}

#[test]
fn backward_matches_finite_differences() {
    // L(x) = <g, A x>; dL/dx = A^T g, checked entry by entry in f64.
    for seed in 0..5 {
        let csr = common::random_local_csr(seed, 20, 5);
        let d = 3;
        let x = FeatureMatrix::random(csr.num_sources(), d, seed + 10);
        let g = FeatureMatrix::random(csr.num_targets(), d, seed + 20);
        let grad = compute::aggregate_backward(&csr.transpose(), &g, &TileConfig::default()).unwrap();
        let loss = |x: &FeatureMatrix| -> f64 {
            common::dense_product(&csr, x).iter().zip(g.data()).map(|(a, b)| a * f64::from(*b)).sum()
        };
        let h = 1e-3f32;
        for i in 0..x.data().len() {
            let mut p = x.clone();
            p.data_mut()[i] += h;
            let mut m = x.clone();
            m.data_mut()[i] -= h;
            let hp = f64::from(p.data()[i]) - f64::from(m.data()[i]);
            let fd = (loss(&p) - loss(&m)) / hp;
            let an = f64::from(grad.data()[i]);
            assert!((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1.0), "seed {seed} i {i}: {fd} vs {an}");
        }
    }
}

#[test]
fn oversized_tiles_are_config_errors() {
    assert!(matches!(TileConfig::new(16, 64, 1 << 20), Err(Error::Config(_))));
    assert!(matches!(TileConfig::new(32, 32, 1 << 20), Err(Error::Config(_))));
    let cfg = TileConfig::new(8, 32, 1504).unwrap();
    assert_eq!(compute::plan_tiles(8, 32, &[15; 8], &cfg).unwrap().max_scratch_bytes(), 1504);
    assert!(matches!(compute::plan_tiles(8, 32, &[16; 8], &cfg), Err(Error::Config(_))));
    let csr = LocalCsr::from_edges(1, 1, &[(0, 0, 1.0)]).unwrap();
    let x = FeatureMatrix::zeros(2, 4);
    assert!(compute::aggregate_forward(&csr, &x, &cfg).is_err());
}
