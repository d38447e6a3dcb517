//! Hot-path benchmarks: simulator stepping, dense-network passes at training
//! batch size, one full agent update, and trace synthesis.

use std::sync::Arc;

use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng as _;

use precool_core::config::{HyperParams, RunConfig};
use precool_core::env::{synthesize, BuildingEnv};
use precool_core::nn::{Matrix, Mlp};
use precool_core::rng::seeded_rng;
use precool_core::sac::{SacAgent, Transition};

fn bench_cfg() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.traces.synthetic.days = 40;
    cfg
}

fn traces(cfg: &RunConfig) -> Arc<precool_core::TraceSet> {
    Arc::new(synthesize(&cfg.traces.synthetic, &cfg.schedule, cfg.run.sim_step_minutes).unwrap())
}

fn env_step(c: &mut Criterion) {
    let cfg = bench_cfg();
    let mut env = BuildingEnv::new(&cfg, traces(&cfg)).unwrap();
    let start = NaiveDate::from_ymd_opt(2017, 4, 3).unwrap();
    let end = NaiveDate::from_ymd_opt(2017, 5, 2).unwrap();
    env.reset(start, end).unwrap();
    c.bench_function("env_step_15min", |b| {
        b.iter(|| {
            let res = env.step(23.5).unwrap();
            if res.done {
                env.reset(start, end).unwrap();
            }
            res.e_total_kwh
        })
    });
}

fn mlp_passes(c: &mut Criterion) {
    let mut rng = seeded_rng(1, "bench");
    let net = Mlp::new(&[27, 64, 64, 1], &mut rng).unwrap();
    let batch = 2048;
    let mut x = Matrix::zeros(batch, 27);
    for r in 0..batch {
        for v in x.row_mut(r) {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    c.bench_function("mlp_forward_2048x27_64_64_1", |b| {
        b.iter(|| net.forward_batch(&x).unwrap().output().row(0)[0])
    });

    let mut d_out = Matrix::zeros(batch, 1);
    for r in 0..batch {
        d_out.row_mut(r)[0] = 1.0 / batch as f64;
    }
    let mut grads = vec![0.0; net.n_params()];
    c.bench_function("mlp_forward_backward_2048x27_64_64_1", |b| {
        b.iter(|| {
            let cache = net.forward_batch(&x).unwrap();
            net.backward_batch(&cache, &d_out, &mut grads);
            grads[0]
        })
    });
}

fn sac_update(c: &mut Criterion) {
    let hp = HyperParams::default();
    let obs_dim = 26;
    let mut agent = SacAgent::new(obs_dim, hp, 1).unwrap();
    let mut rng = seeded_rng(2, "bench");
    for _ in 0..4096 {
        let obs: Vec<f64> = (0..obs_dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        let next_obs: Vec<f64> = (0..obs_dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        agent
            .record(Transition {
                obs,
                action: rng.gen_range(0.0..1.0),
                reward: rng.gen_range(-2.0..0.0),
                next_obs,
                done: false,
            })
            .unwrap();
    }
    c.bench_function("sac_update_batch2048_hidden64", |b| {
        b.iter(|| agent.update().unwrap().q1_loss)
    });
}

fn trace_synthesis(c: &mut Criterion) {
    let cfg = bench_cfg();
    c.bench_function("synthesize_40_days", |b| {
        b.iter(|| {
            synthesize(&cfg.traces.synthetic, &cfg.schedule, cfg.run.sim_step_minutes)
                .unwrap()
                .len()
        })
    });
}

criterion_group!(benches, env_step, mlp_passes, sac_update, trace_synthesis);
criterion_main!(benches);
