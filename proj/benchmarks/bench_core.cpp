#include "modcomp/eval.hpp"
#include "modcomp/model.hpp"
#include "modcomp/tasks.hpp"
#include "modcomp/tensor.hpp"
#include "modcomp/trainer.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace modcomp;

namespace {

Tensor random_tensor(std::vector<int> shape, unsigned seed) {
    Tensor t(std::move(shape));
    std::mt19937 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
    return t;
}

ModelConfig bench_config(int d_model) {
    ModelConfig mc;
    mc.seed = 7;
    mc.n_layers = 4;
    mc.d_model = d_model;
    mc.n_heads = 4;
    mc.d_ff = 3 * d_model;
    mc.vocab_size = 64;
    mc.max_seq_len = 80;
    return mc;
}

Batch math_batch(int batch_size, int seed) {
    const Dataset ds = gen_math_corpus(batch_size, seed);
    Batch b;
    b.origin = ds.origin;
    for (const auto& s : ds.samples) b.items.push_back(make_train_item(s, Vocab::eos));
    return b;
}

void bm_matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Tensor a = random_tensor({n, n}, 1);
    const Tensor b = random_tensor({n, n}, 2);
    for (auto _ : state) {
        Tensor c = matmul(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations());
    state.counters["flops"] = benchmark::Counter(
        2.0 * n * n * n * static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}

void bm_forward(benchmark::State& state) {
    const ModelParams params = init_model(bench_config(static_cast<int>(state.range(0))));
    const Batch batch = math_batch(8, 11);
    for (auto _ : state) {
        for (const auto& item : batch.items) {
            Tensor logits = forward_logits(params, item.tokens);
            benchmark::DoNotOptimize(logits.data());
        }
    }
    state.SetItemsProcessed(state.iterations() * batch.items.size());
}

void bm_train_step(benchmark::State& state) {
    ModelParams params = init_model(bench_config(static_cast<int>(state.range(0))));
    const Batch batch = math_batch(16, 11);
    for (auto _ : state) {
        GradMap grads;
        double loss = loss_and_grads(params, batch, &grads);
        benchmark::DoNotOptimize(loss);
        benchmark::DoNotOptimize(grads.size());
    }
    state.SetItemsProcessed(state.iterations() * batch.items.size());
}

void bm_decode(benchmark::State& state) {
    const ModelParams params = init_model(bench_config(static_cast<int>(state.range(0))));
    auto [vocab, cipher] = build_vocab_cipher(101);
    auto [src, tgt] = gen_eval_sets(4, 5, cipher);
    for (auto _ : state) {
        EvalReport r = exact_match_eval(params, src, 2);
        benchmark::DoNotOptimize(r.em_accuracy);
    }
    state.SetItemsProcessed(state.iterations() * src.size());
}

BENCHMARK(bm_matmul)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_forward)->Arg(48)->Arg(64);
BENCHMARK(bm_train_step)->Arg(48)->Arg(64);
BENCHMARK(bm_decode)->Arg(48)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
