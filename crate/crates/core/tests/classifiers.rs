use cadm::classifiers::{GaussianNb, IncrementalClassifier, RandomFeatureRls, RlsParams};
use cadm::stream::Sample;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_samples(rng: &mut ChaCha8Rng, n: usize, d: usize, m: usize) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            let x = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            // every class appears in the first m samples
            let y = if i < m { i } else { rng.random_range(0..m) };
            Sample::labeled(x, y)
        })
        .collect()
}

/// Ridge solution from a QR factorization of the stacked system
/// `[H; √γ I] β = [T; 0]`, independent of the normal equations.
fn ridge_qr(h: &DMatrix<f64>, t: &DMatrix<f64>, ridge: f64) -> DMatrix<f64> {
    let (n, k) = h.shape();
    let mut a = DMatrix::zeros(n + k, k);
    a.view_mut((0, 0), (n, k)).copy_from(h);
    a.view_mut((n, 0), (k, k)).fill_diagonal(ridge.sqrt());
    let mut b = DMatrix::zeros(n + k, t.ncols());
    b.view_mut((0, 0), (n, t.ncols())).copy_from(t);
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    qr.r().solve_upper_triangular(&qtb).expect("R is nonsingular with a ridge")
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

#[test]
fn rls_fits_fifty_separable_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut samples = Vec::new();
    while samples.len() < 50 {
        let x: Vec<f64> = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let margin = x[1] - x[0];
        if margin.abs() > 0.2 {
            samples.push(Sample::labeled(x, usize::from(margin > 0.0)));
        }
    }
    let mut model = RandomFeatureRls::new(2, 2, RlsParams::default()).unwrap();
    model.fit(&samples).unwrap();
    let pred = model.hard_pseudo_label(&samples).unwrap();
    let hits = pred.iter().zip(&samples).filter(|(p, s)| Some(**p) == s.label).count();
    assert_eq!(hits, 50);

    // the fitted weights are the batch ridge solution
    let inputs: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
    let labels: Vec<usize> = samples.iter().map(|s| s.label.unwrap()).collect();
    let t = DMatrix::from_fn(labels.len(), 2, |r, c| f64::from(u8::from(labels[r] == c)));
    let oracle = ridge_qr(&model.hidden_features(&inputs), &t, 1e-3);
    assert!(max_abs_diff(model.beta(), &oracle) < 1e-6);
}

#[test]
fn rls_inverse_gram_stays_symmetric_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model = RandomFeatureRls::new(3, 3, RlsParams::default()).unwrap();
    model.fit(&random_samples(&mut rng, 40, 3, 3)).unwrap();
    for _ in 0..20 {
        model.partial_fit(&random_samples(&mut rng, 80, 3, 3)).unwrap();
        let p = model.inverse_gram();
        assert!(max_abs_diff(p, &p.transpose()) < 1e-8);
        assert!(p.diagonal().iter().all(|&v| v > 0.0));
    }
}

#[test]
fn rls_same_seed_same_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data = random_samples(&mut rng, 60, 2, 2);
    let build = || {
        let mut m = RandomFeatureRls::new(2, 2, RlsParams { seed: 4, ..RlsParams::default() }).unwrap();
        m.fit(&data[..30]).unwrap();
        m.partial_fit(&data[30..]).unwrap();
        m
    };
    assert_eq!(build(), build());
}

#[test]
fn gnb_separated_clusters_confident_at_centers() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut samples = Vec::new();
    for _ in 0..200 {
        let u: f64 = rng.random_range(-0.5..0.5);
        samples.push(Sample::labeled(vec![-5.0 + u], 0));
        samples.push(Sample::labeled(vec![5.0 + u], 1));
    }
    let mut nb = GaussianNb::new(1, 2).unwrap();
    nb.fit(&samples).unwrap();
    let probs = nb
        .predict_prob(&[Sample::unlabeled(vec![-5.0]), Sample::unlabeled(vec![5.0])])
        .unwrap();
    assert!(probs.get(0, 0) > 0.99);
    assert!(probs.get(1, 1) > 0.99);
}

#[test]
fn snapshot_chain_replays_history() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let probe = random_samples(&mut rng, 25, 2, 2);
    for mut model in [
        cadm::Classifier::GaussianNb(GaussianNb::new(2, 2).unwrap()),
        cadm::Classifier::Rls(RandomFeatureRls::new(2, 2, RlsParams::default()).unwrap()),
    ] {
        model.fit(&random_samples(&mut rng, 30, 2, 2)).unwrap();
        let mut snapshots = Vec::new();
        let mut recorded = Vec::new();
        for _ in 0..5 {
            snapshots.push(model.snapshot());
            recorded.push(model.predict_prob(&probe).unwrap());
            model.partial_fit(&random_samples(&mut rng, 30, 2, 2)).unwrap();
        }
        for (snap, expected) in snapshots.iter().zip(&recorded) {
            assert_eq!(&snap.predict_prob(&probe).unwrap(), expected);
        }
        assert_ne!(model.predict_prob(&probe).unwrap(), recorded[0]);
    }
}

#[test]
fn pseudo_labels_match_recomputed_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut nb = GaussianNb::new(2, 3).unwrap();
    nb.fit(&random_samples(&mut rng, 60, 2, 3)).unwrap();
    let probe: Vec<Sample> = random_samples(&mut rng, 10, 2, 3).iter().map(Sample::without_label).collect();
    let probs = nb.predict_prob(&probe).unwrap();
    let expected: Vec<usize> = (0..probe.len())
        .map(|j| {
            let col = probs.column(j);
            let mut best = 0;
            for (c, &p) in col.iter().enumerate() {
                if p > col[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    assert_eq!(nb.hard_pseudo_label(&probe).unwrap(), expected);
}

#[test]
fn empty_partial_fit_is_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let probe = random_samples(&mut rng, 10, 2, 2);
    let mut rls = RandomFeatureRls::new(2, 2, RlsParams::default()).unwrap();
    rls.fit(&random_samples(&mut rng, 30, 2, 2)).unwrap();
    let before = rls.predict_prob(&probe).unwrap();
    rls.partial_fit(&[]).unwrap();
    assert_eq!(rls.predict_prob(&probe).unwrap(), before);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gnb_incremental_equals_batch(seed: u64, d in 1usize..4, m in 2usize..4, sizes in prop::collection::vec(1usize..40, 2..6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total: usize = sizes.iter().sum::<usize>() + m;
        let data = random_samples(&mut rng, total, d, m);
        let probe: Vec<Sample> = random_samples(&mut rng, 20, d, m);

        let mut batch = GaussianNb::new(d, m).unwrap();
        batch.fit(&data).unwrap();

        let mut inc = GaussianNb::new(d, m).unwrap();
        let mut start = sizes[0] + m;
        inc.fit(&data[..start]).unwrap();
        for &s in &sizes[1..] {
            inc.partial_fit(&data[start..start + s]).unwrap();
            start += s;
        }

        for c in 0..m {
            prop_assert_eq!(inc.class_count(c), batch.class_count(c));
            for f in 0..d {
                prop_assert!((inc.mean(c, f) - batch.mean(c, f)).abs() < 1e-9);
                prop_assert!((inc.variance(c, f) - batch.variance(c, f)).abs() < 1e-9);
            }
        }
        let (a, b) = (inc.predict_prob(&probe).unwrap(), batch.predict_prob(&probe).unwrap());
        for c in 0..m {
            for j in 0..probe.len() {
                prop_assert!((a.get(c, j) - b.get(c, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rls_sequential_equals_batch_ridge(seed: u64, d in 1usize..5, blocks in prop::collection::vec(1usize..60, 1..6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 3;
        let n0 = 20;
        let total = n0 + blocks.iter().sum::<usize>();
        let inputs: Vec<Vec<f64>> = (0..total).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let targets = DMatrix::from_fn(total, m, |_, _| rng.random_range(-1.0..1.0));

        let mut model = RandomFeatureRls::new(d, m, RlsParams { seed, ..RlsParams::default() }).unwrap();
        model.fit_targets(&inputs[..n0], &targets.rows(0, n0).into_owned()).unwrap();
        let mut start = n0;
        for &b in &blocks {
            model.partial_fit_targets(&inputs[start..start + b], &targets.rows(start, b).into_owned()).unwrap();
            start += b;
        }
        let oracle = ridge_qr(&model.hidden_features(&inputs), &targets, model.params().ridge);
        prop_assert!(max_abs_diff(model.beta(), &oracle) < 1e-6, "max diff {}", max_abs_diff(model.beta(), &oracle));
    }

    #[test]
    fn predict_prob_columns_are_stochastic(seed: u64, m in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_samples(&mut rng, 50, 2, m);
        let probe = random_samples(&mut rng, 30, 2, m);
        let mut nb = GaussianNb::new(2, m).unwrap();
        nb.fit(&data).unwrap();
        let mut rls = RandomFeatureRls::new(2, m, RlsParams { seed, ..RlsParams::default() }).unwrap();
        rls.fit(&data).unwrap();
        for p in [nb.predict_prob(&probe).unwrap(), rls.predict_prob(&probe).unwrap()] {
            prop_assert!(p.validate().is_ok());
        }
    }
}
