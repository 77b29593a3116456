use proptest::prelude::*;

use fieldnet::artifact::{dequantize, quantize};
use fieldnet::coords::normalize;
use fieldnet::gridfield::{
    error_report, latitude_weights, load_field, sample_value, store_field, Grid, GridField4D,
};
use fieldnet::network::{
    apply_scaling, backward, build_scaling_table, forward_infer, forward_train, init_params, Activation, ModelConfig,
    ModelParams,
};

fn axis(start: f64, steps: Vec<f64>) -> Vec<f64> {
    let mut v = vec![start];
    for s in steps {
        let last = *v.last().unwrap();
        v.push(last + s);
    }
    v
}

prop_compose! {
    fn small_field()(
        t_steps in prop::collection::vec(1.0f64..12.0, 1..3),
        np in 1usize..3,
        nlat in 2usize..6,
        nlon in 2usize..7,
        seed in any::<u64>(),
    ) -> GridField4D {
        let times = axis(0.0, t_steps);
        let pressures: Vec<f64> = (0..np).map(|i| 300.0 + 200.0 * i as f64).collect();
        let grid = Grid::equiangular(times, pressures, nlat, nlon).unwrap();
        let mut state = seed | 1;
        GridField4D::from_fn("f", "1", grid, |_, _, _, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 20.0 - 10.0
        })
        .unwrap()
    }
}

/// Brackets by linear scan: (lo, hi, frac) with clamping at the ends.
fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64) {
    if x <= axis[0] {
        return (0, 0, 0.0);
    }
    let n = axis.len();
    if x >= axis[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let mut i = 0;
    while axis[i + 1] < x {
        i += 1;
    }
    (i, i + 1, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

/// Independent per-axis interpolation: lon, then lat, then time.
fn interp_oracle(f: &GridField4D, t: f64, p: usize, psi: f64, phi: f64) -> f64 {
    let g = &f.grid;
    let phi = phi.rem_euclid(360.0);
    let nlon = g.lons.len();
    let (j0, j1, fj) = {
        let mut lons = g.lons.clone();
        lons.push(g.lons[0] + 360.0);
        let x = if phi < g.lons[0] { phi + 360.0 } else { phi };
        let (a, b, fr) = bracket(&lons, x);
        (a % nlon, b % nlon, fr)
    };
    let (i0, i1, fi) = bracket(&g.lats, psi);
    let (k0, k1, fk) = bracket(&g.times, t);
    let along_lon = |k: usize, i: usize| {
        let a = f.at(k, p, i, j0) as f64;
        let b = f.at(k, p, i, j1) as f64;
        a + (b - a) * fj
    };
    let along_lat = |k: usize| {
        let a = along_lon(k, i0);
        a + (along_lon(k, i1) - a) * fi
    };
    let a = along_lat(k0);
    a + (along_lat(k1) - a) * fk
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn interpolation_exact_on_nodes(f in small_field()) {
        let g = &f.grid;
        for (k, &t) in g.times.iter().enumerate() {
            for p in 0..g.pressures.len() {
                for (i, &psi) in g.lats.iter().enumerate() {
                    for (j, &phi) in g.lons.iter().enumerate() {
                        prop_assert_eq!(sample_value(&f, t, p, psi, phi).unwrap(), f.at(k, p, i, j) as f64);
                    }
                }
            }
        }
    }

    #[test]
    fn interpolation_matches_axis_oracle(
        f in small_field(),
        ut in 0.0f64..=1.0, upsi in -95.0f64..95.0, phi in -720.0f64..720.0, pick in any::<prop::sample::Index>(),
    ) {
        let (t0, t1) = f.grid.time_span();
        let t = t0 + (t1 - t0) * ut;
        let p = pick.index(f.grid.pressures.len());
        let got = sample_value(&f, t, p, upsi, phi).unwrap();
        let want = interp_oracle(&f, t, p, upsi, phi);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{} vs {}", got, want);
    }

    #[test]
    fn longitude_period_is_exact(f in small_field(), k in 0u32..(360 * 64), turns in -3i32..3) {
        let phi = k as f64 / 64.0;
        let (t0, _) = f.grid.time_span();
        let a = sample_value(&f, t0, 0, 10.0, phi).unwrap();
        let b = sample_value(&f, t0, 0, 10.0, phi + 360.0 * turns as f64).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn weights_sum_to_one(lats in prop::collection::btree_set(-9000i32..=9000, 1..40)) {
        let lats: Vec<f64> = lats.into_iter().map(|l| l as f64 / 100.0).collect();
        if lats.iter().all(|l| l.abs() == 90.0) {
            return Ok(());
        }
        let w = latitude_weights(&lats);
        let s: f64 = w.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn metrics_invariant_under_longitude_roll(a in small_field(), seed in any::<u64>(), shift in 1usize..6) {
        let mut b = a.clone();
        let mut s = seed | 1;
        for v in &mut b.values {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v += ((s >> 40) as f32 / (1u32 << 24) as f32) - 0.5;
        }
        let roll = |f: &GridField4D| {
            let [nt, np, nlat, nlon] = f.shape();
            let mut out = f.clone();
            for t in 0..nt { for p in 0..np { for i in 0..nlat { for j in 0..nlon {
                out.values[f.grid.index(t, p, i, (j + shift) % nlon)] = f.at(t, p, i, j);
            }}}}
            out
        };
        if a.grid.lats.iter().all(|l| l.abs() == 90.0) {
            prop_assert!(error_report(&a, &b, 0.9).is_err());
            return Ok(());
        }
        let r1 = error_report(&a, &b, 0.9).unwrap();
        let r2 = error_report(&roll(&a), &roll(&b), 0.9).unwrap();
        prop_assert!((r1.weighted_rmse - r2.weighted_rmse).abs() <= 1e-12 * r1.weighted_rmse.max(1e-300));
        prop_assert!((r1.weighted_mae - r2.weighted_mae).abs() <= 1e-12 * r1.weighted_mae.max(1e-300));
        prop_assert_eq!(r1.max_abs_error, r2.max_abs_error);
        prop_assert_eq!(r1.abs_error_quantile, r2.abs_error_quantile);
    }

    #[test]
    fn sphere_embedding_has_unit_norm(psi in -90.0f64..=90.0, phi in -1000.0f64..1000.0) {
        let v = normalize(5.0, 500.0, psi, phi, 10.0, 1000.0).unwrap();
        let n = (v.x * v.x + v.y * v.y + v.z * v.z).sqrt();
        prop_assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_round_trip(f in small_field(), v in -50.0f64..50.0, pick in any::<prop::sample::Index>(), psi in -90.0f64..=90.0) {
        let table = build_scaling_table(&f).unwrap();
        let p = f.grid.pressures[pick.index(f.grid.pressures.len())];
        let raw = table.normalize(p, psi, v);
        let back = apply_scaling(&table, p, psi, raw);
        prop_assert!((back - v).abs() <= 1e-9 * (1.0 + v.abs()));
    }

    #[test]
    fn container_round_trip_is_bit_exact(f in small_field()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.nngf");
        store_field(&f, &path).unwrap();
        let g = load_field(&path).unwrap();
        prop_assert_eq!(&g, &f);
    }

    #[test]
    fn quantization_is_idempotent_and_tight(seed in any::<u64>(), scale in 0.01f32..1.0) {
        let cfg = ModelConfig::uniform(2, 8, 4, 1.0, 1.0, 1.0);
        let mut p: ModelParams<f32> = init_params(&cfg, seed).unwrap();
        let mut s = seed | 1;
        for t in p.trainable_mut() {
            for w in t.iter_mut() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                *w = ((s >> 40) as f32 / (1u32 << 23) as f32 - 1.0) * scale;
            }
        }
        let blob = quantize(&p).unwrap();
        let q: ModelParams<f32> = dequantize(&blob, &cfg).unwrap();
        prop_assert_eq!(quantize(&q).unwrap(), blob);
        for (a, b) in p.trainable().iter().zip(q.trainable()) {
            for (&x, &y) in a.iter().zip(b) {
                let tol = if x.abs() >= 6.103_515_6e-5 { x.abs() * 2f32.powi(-11) } else { 2f32.powi(-25) };
                prop_assert!((x - y).abs() <= tol, "{} -> {}", x, y);
            }
        }
    }
}

fn gelu_oracle(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Row-by-row inference written out longhand.
fn naive_infer(p: &ModelParams<f64>, cfg: &ModelConfig, row: &[f64]) -> f64 {
    let lin = |l: &fieldnet::network::Linear<f64>, x: &[f64]| -> Vec<f64> {
        (0..l.fan_out)
            .map(|o| l.bias[o] + (0..l.fan_in).map(|i| x[i] * l.weight[i * l.fan_out + o]).sum::<f64>())
            .collect()
    };
    let act = |v: f64| match cfg.activation {
        Activation::Gelu => gelu_oracle(v),
        Activation::Relu => v.max(0.0),
    };
    let bn = |b: &Option<fieldnet::network::BatchNorm<f64>>, z: Vec<f64>| -> Vec<f64> {
        match b {
            None => z,
            Some(b) => z
                .iter()
                .enumerate()
                .map(|(k, &v)| (v - b.running_mean[k]) / (b.running_var[k] + cfg.bn_eps).sqrt() * b.gamma[k] + b.beta[k])
                .collect(),
        }
    };
    let mut h = lin(&p.input, row);
    for blk in &p.blocks {
        let a: Vec<f64> = bn(&blk.bn1, lin(&blk.lin1, &h)).into_iter().map(act).collect();
        let mut o: Vec<f64> = bn(&blk.bn2, lin(&blk.lin2, &a)).into_iter().map(act).collect();
        if cfg.use_skip {
            o.iter_mut().zip(&h).for_each(|(o, &x)| *o += x);
        }
        h = o;
    }
    lin(&p.output, &h)[0]
}

fn randomize(p: &mut ModelParams<f64>, seed: u64) {
    let mut s = seed | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    for t in p.trainable_mut() {
        t.iter_mut().for_each(|w| *w = next() - 0.5);
    }
    for (i, t) in p.running_mut().into_iter().enumerate() {
        t.iter_mut().for_each(|w| *w = if i % 2 == 1 { 0.5 + next() } else { next() - 0.5 });
    }
}

prop_compose! {
    fn toggled_config()(
        d in 1usize..3, w in 2usize..6, m in 1usize..4,
        fourier in any::<bool>(), xyz in any::<bool>(), skip in any::<bool>(), bn in any::<bool>(), relu in any::<bool>(),
    ) -> ModelConfig {
        let mut c = ModelConfig::uniform(d, w, m, 1.0, 1.0, 1.0);
        c.use_fourier = fourier;
        c.use_xyz = xyz;
        c.use_skip = skip;
        c.use_batchnorm = bn;
        c.activation = if relu { Activation::Relu } else { Activation::Gelu };
        c
    }
}

proptest! {
    #![proptest_config(cases(32))]

    #[test]
    fn inference_matches_longhand_oracle(cfg in toggled_config(), seed in any::<u64>(), rows in 1usize..6) {
        let mut p: ModelParams<f64> = init_params(&cfg, seed).unwrap();
        randomize(&mut p, seed);
        let dim = cfg.input_dim();
        let x: Vec<f64> = (0..rows * dim).map(|i| ((i * 7919 + seed as usize % 97) % 101) as f64 / 50.0 - 1.0).collect();
        let y = forward_infer(&p, &cfg, &x).unwrap();
        for r in 0..rows {
            let want = naive_infer(&p, &cfg, &x[r * dim..(r + 1) * dim]);
            prop_assert!((y[r] - want).abs() <= 1e-12 * (1.0 + want.abs()), "{} vs {}", y[r], want);
        }
    }

    #[test]
    fn gradients_match_finite_differences(cfg in toggled_config(), seed in any::<u64>()) {
        // smooth activation only: ReLU kinks break central differences
        let mut cfg = cfg;
        cfg.activation = Activation::Gelu;
        let mut p: ModelParams<f64> = init_params(&cfg, seed).unwrap();
        randomize(&mut p, seed);
        let batch = 5;
        let dim = cfg.input_dim();
        let x: Vec<f64> = (0..batch * dim).map(|i| ((i * 31 + seed as usize % 13) % 17) as f64 / 8.0 - 1.0).collect();
        let c: Vec<f64> = (0..batch).map(|i| 1.0 + 0.25 * i as f64).collect();
        let loss = |q: &ModelParams<f64>| -> f64 {
            forward_train(q, &cfg, &x).unwrap().raw.iter().zip(&c).map(|(r, w)| r * w).sum()
        };
        let cache = forward_train(&p, &cfg, &x).unwrap();
        let g = backward(&p, &cfg, &cache, &c).unwrap();
        let analytic: Vec<f64> = g.trainable().iter().flat_map(|t| t.iter().copied()).collect();
        let n = analytic.len();
        let h = 1e-5;
        for k in 0..n {
            let mut plus = p.clone();
            let mut minus = p.clone();
            *plus.trainable_mut().into_iter().flat_map(|t| t.iter_mut()).nth(k).unwrap() += h;
            *minus.trainable_mut().into_iter().flat_map(|t| t.iter_mut()).nth(k).unwrap() -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let err = (fd - analytic[k]).abs();
            prop_assert!(err <= 1e-5 * fd.abs().max(analytic[k].abs()) + 1e-7, "param {}: fd {} analytic {}", k, fd, analytic[k]);
        }
    }
}
