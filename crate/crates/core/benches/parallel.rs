use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cgm_core::axioms::{check_soundness, find_axiom, SoundnessOptions};
use cgm_core::dsl::parse;
use cgm_core::exec::Execution;
use cgm_core::normalform::{disintegrate, emit_nf};
use cgm_core::random::{random_term, random_word, TermConfig};
use cgm_core::semantics::{eval, sample_many, BitVec, EvalOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn soundness(c: &mut Criterion) {
    let mut group = c.benchmark_group("soundness_trials");
    group.sample_size(10);
    for name in ["E10", "E6"] {
        let schema = find_axiom(name).unwrap();
        for (label, exec) in MODES {
            let opts = SoundnessOptions { exec, ..SoundnessOptions::default() };
            group.bench_with_input(BenchmarkId::new(label, name), &opts, |b, o| {
                b.iter(|| check_soundness(schema, 100, 7, o))
            });
        }
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let src = "flip(3/10) * (stdnormal * one ; id(R) * scal(3) ; add) * (stdnormal ; scal(2)) ; ite";
    let m = eval(&parse(src).unwrap(), &EvalOptions::default()).unwrap();
    let mut group = c.benchmark_group("sample_many");
    group.sample_size(10);
    for (label, exec) in MODES {
        group.bench_function(label, |b| b.iter(|| sample_many(&m, &BitVec::empty(), &[], 100_000, 1, exec).unwrap()));
    }
    group.finish();
}

fn normal_forms(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let terms: Vec<_> = (0..32)
        .map(|_| {
            let (dom, cod) = (random_word(&mut rng, 3, 2), random_word(&mut rng, 3, 2));
            random_term(&mut rng, &dom, &cod, &TermConfig::default())
        })
        .collect();
    let opts = EvalOptions::default();
    let mut group = c.benchmark_group("nf_round_trip");
    group.sample_size(10);
    for (label, exec) in MODES {
        group.bench_function(label, |b| {
            b.iter(|| {
                exec.map_indexed(terms.len(), |i| {
                    let nf = disintegrate(&eval(&terms[i], &opts).unwrap(), opts.tolerance);
                    eval(&emit_nf(&nf, opts.tolerance).unwrap(), &opts).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, soundness, sampling, normal_forms);
criterion_main!(benches);
