#include "modcomp/trainer.hpp"

#include "modcomp/error.hpp"
#include "modcomp/hash.hpp"
#include "modcomp/tasks.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace modcomp {

namespace {

using nlohmann::json;

std::mt19937 stream_rng(int seed, const std::string& tag) {
    const std::uint64_t h = fnv1a64(tag);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(h),
                      static_cast<std::uint32_t>(h >> 32)};
    return std::mt19937(seq);
}

Batch build_batch(const Dataset& ds, const std::vector<int>& order, std::size_t from,
                  std::size_t count, int max_len) {
    Batch b;
    b.origin = ds.origin;
    std::vector<const Sample*> group;
    group.reserve(count);
    for (std::size_t i = from; i < from + count; ++i) {
        group.push_back(&ds.samples[order[i]]);
    }
    b.items = pack_train_items(group, max_len, ds.origin, Vocab::bos, Vocab::eos, Vocab::sep);
    return b;
}

std::int64_t supervised_positions(const Batch& b) {
    std::int64_t n = 0;
    for (const TrainItem& item : b.items) {
        for (std::uint8_t m : item.mask) n += m;
    }
    return n;
}

// Shared state for one optimization run, regardless of mode.
struct Run {
    ModelParams* params = nullptr;
    const TrainConfig* cfg = nullptr;
    const Dataset* valset = nullptr;
    AdapterSet* adapters = nullptr;  // non-null only in LoRA mode
    OptimizerState state;
    TrainReport report;

    void maybe_validate(bool force) {
        if (!valset) return;
        const int step = state.global_step;
        if (!force && cfg->validate_every > 0 && step % cfg->validate_every != 0) return;
        if (!report.val_loss.empty() && report.val_loss.back().first == step) return;
        report.val_loss.emplace_back(step, validate(*params, *valset, adapters));
    }

    void step(const Batch& batch, const std::vector<ParamName>& trainable_names,
              std::map<ParamName, Tensor*>& trainable_ptrs) {
        GradMap grads, adapter_grads;
        double loss;
        if (adapters) {
            loss = loss_and_grads(*params, batch, nullptr, adapters, &adapter_grads);
        } else {
            loss = loss_and_grads(*params, batch, &grads, nullptr, nullptr);
        }
        // Only the trainable subset is clipped; frozen grads are dropped.
        GradMap train_grads;
        GradMap& source = adapters ? adapter_grads : grads;
        for (const ParamName& name : trainable_names) {
            auto node = source.extract(name);
            if (node.empty()) throw TrainError("missing gradient for " + name.str());
            train_grads.insert(std::move(node));
        }
        clip_global_norm(train_grads, cfg->optim.max_grad_norm);
        // Schedule steps are 1-based so the first update is not zeroed by warmup.
        adamw_step(trainable_ptrs, train_grads, state, cfg->optim, state.global_step + 1);
        report.train_loss.push_back(loss);
        report.steps = state.global_step;
    }
};

std::map<ParamName, Tensor*> base_ptrs(ModelParams& params, const std::vector<ParamName>& names) {
    std::map<ParamName, Tensor*> ptrs;
    for (const ParamName& name : names) ptrs[name] = &params.weights.at(name);
    return ptrs;
}

std::map<ParamName, Tensor*> adapter_ptrs(AdapterSet& set, std::vector<ParamName>& names_out) {
    std::map<ParamName, Tensor*> ptrs;
    names_out.clear();
    for (auto& [name, pair] : set.pairs) {
        const ParamName an = name.with_lora(ParamName::LoraPart::a);
        const ParamName bn = name.with_lora(ParamName::LoraPart::b);
        ptrs[an] = &pair.a;
        ptrs[bn] = &pair.b;
        names_out.push_back(an);
        names_out.push_back(bn);
    }
    return ptrs;
}

std::optional<Side> resolve_side(const std::optional<Side>& side, TrainablePolicy policy) {
    if (side) return side;
    switch (policy) {
        case TrainablePolicy::all: return std::nullopt;
        case TrainablePolicy::lang_side: return Side::LANG;
        case TrainablePolicy::math_side: return Side::MATH;
    }
    return std::nullopt;
}

void check_spec(const PartitionSpec& spec, const ModelParams& params) {
    const PartitionAudit audit = validate_partition(spec, params);
    if (!audit.ok()) {
        throw ConfigError("partition does not cover the model: " + audit.problems.front());
    }
}

}  // namespace

TrainMode train_mode_parse(const std::string& s) {
    if (s == "single") return TrainMode::single;
    if (s == "mixed") return TrainMode::mixed;
    if (s == "simultaneous") return TrainMode::simultaneous;
    throw ConfigError("unknown train mode: " + s);
}

const char* train_mode_str(TrainMode m) {
    switch (m) {
        case TrainMode::single: return "single";
        case TrainMode::mixed: return "mixed";
        case TrainMode::simultaneous: return "simultaneous";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (effective_batch_size < 1) throw ConfigError("effective_batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (steps_per_switch < 1) throw ConfigError("steps_per_switch must be >= 1");
    if (max_seq_len_train < 16) throw ConfigError("max_seq_len_train must be >= 16");
    optim.validate();
}

double TrainReport::start_val_loss() const {
    if (val_loss.empty()) throw TrainError("no validation losses recorded");
    return val_loss.front().second;
}

double TrainReport::end_val_loss() const {
    if (val_loss.empty()) throw TrainError("no validation losses recorded");
    return val_loss.back().second;
}

std::string TrainReport::to_json() const {
    json doc;
    doc["steps"] = steps;
    doc["train_loss"] = train_loss;
    json vl = json::array();
    for (const auto& [step, loss] : val_loss) vl.push_back({{"step", step}, {"loss", loss}});
    doc["val_loss"] = std::move(vl);
    if (!switch_log.empty()) {
        json sl = json::array();
        for (const auto& [step, side] : switch_log) sl.push_back({{"step", step}, {"side", side}});
        doc["switch_log"] = std::move(sl);
    }
    if (!checkpoint_ref.empty()) doc["checkpoint"] = checkpoint_ref;
    return doc.dump(2);
}

double validate(const ModelParams& params, const Dataset& valset, const AdapterSet* adapters) {
    if (valset.empty()) throw DataError("empty validation set");
    constexpr std::size_t kChunk = 32;
    double total = 0.0;
    std::int64_t count = 0;
    for (std::size_t from = 0; from < valset.samples.size(); from += kChunk) {
        Batch b;
        b.origin = valset.origin;
        const std::size_t to = std::min(valset.samples.size(), from + kChunk);
        std::vector<const Sample*> group;
        for (std::size_t i = from; i < to; ++i) group.push_back(&valset.samples[i]);
        b.items = pack_train_items(group, params.config.max_seq_len, valset.origin, Vocab::bos,
                                   Vocab::eos, Vocab::sep);
        const double mean = loss_and_grads(params, b, nullptr, adapters, nullptr);
        const std::int64_t n = supervised_positions(b);
        total += mean * static_cast<double>(n);
        count += n;
    }
    return total / static_cast<double>(count);
}

std::vector<int> planned_order(int n, int count, int seed, const std::string& stream_tag) {
    if (n < 1) throw DataError("empty dataset for stream " + stream_tag);
    std::mt19937 rng = stream_rng(seed, stream_tag);
    std::vector<int> order;
    order.reserve(count);
    std::vector<int> epoch(n);
    while (static_cast<int>(order.size()) < count) {
        std::iota(epoch.begin(), epoch.end(), 0);
        std::shuffle(epoch.begin(), epoch.end(), rng);
        for (int idx : epoch) {
            if (static_cast<int>(order.size()) == count) break;
            order.push_back(idx);
        }
    }
    return order;
}

TrainReport train_single(ModelParams& params, const Dataset& dataset,
                         const std::optional<PartitionSpec>& spec, std::optional<Side> side,
                         const TrainConfig& cfg, const Dataset* valset, AdapterSet* adapters_out) {
    cfg.validate();
    if (dataset.empty()) throw DataError("empty training dataset");
    const std::optional<Side> train_side = resolve_side(side, cfg.trainable_policy);
    if (train_side && !spec) throw ConfigError("side-restricted training needs a partition spec");
    if (spec) check_spec(*spec, params);

    Run run;
    run.params = &params;
    run.cfg = &cfg;
    run.valset = valset;

    std::vector<ParamName> trainable_names;
    std::map<ParamName, Tensor*> trainable_ptrs;
    AdapterSet adapters;
    if (cfg.lora) {
        AdapterConfig acfg = *cfg.lora;
        if (acfg.target_names.empty()) acfg.target_names = default_lora_targets(params.config);
        if (train_side) {
            // "Frozen" under LoRA: the other side's matrices get no adapter.
            std::vector<ParamName> kept;
            for (const ParamName& name : acfg.target_names) {
                if (spec->assignment.at(name) == *train_side) kept.push_back(name);
            }
            acfg.target_names = std::move(kept);
        }
        adapters = init_adapters(acfg, params);
        run.adapters = &adapters;
        trainable_ptrs = adapter_ptrs(adapters, trainable_names);
    } else {
        trainable_names = train_side ? spec->side_names(*train_side) : registry_names(params.config);
        trainable_ptrs = base_ptrs(params, trainable_names);
    }

    run.maybe_validate(true);
    const int n = static_cast<int>(dataset.size());
    const int batch = cfg.effective_batch_size;
    std::mt19937 rng = stream_rng(cfg.seed, "train-" + dataset.origin);
    std::vector<int> order(n);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (int from = 0; from < n; from += batch) {
            const int count = std::min(batch, n - from);
            const Batch b = build_batch(dataset, order, from, count, cfg.max_seq_len_train);
            run.step(b, trainable_names, trainable_ptrs);
            run.maybe_validate(false);
        }
    }
    run.maybe_validate(true);
    if (adapters_out && cfg.lora) *adapters_out = std::move(adapters);
    return std::move(run.report);
}

TrainReport train_mixed(ModelParams& params, const Dataset& dataset_a, const Dataset& dataset_b,
                        const TrainConfig& cfg, const Dataset* valset) {
    if (dataset_a.empty() || dataset_b.empty()) throw DataError("empty dataset in mix");
    Dataset merged;
    merged.origin = dataset_a.origin + "+" + dataset_b.origin;
    merged.samples = dataset_a.samples;
    merged.samples.insert(merged.samples.end(), dataset_b.samples.begin(), dataset_b.samples.end());
    return train_single(params, merged, std::nullopt, std::nullopt, cfg, valset, nullptr);
}

TrainReport train_simultaneous(ModelParams& params, const Dataset& dataset_lang,
                               const Dataset& dataset_math, const PartitionSpec& spec,
                               const TrainConfig& cfg, const Dataset* valset) {
    cfg.validate();
    if (cfg.lora) throw ConfigError("simultaneous mode trains full partitions, not adapters");
    if (dataset_lang.empty() || dataset_math.empty()) throw DataError("empty dataset");
    check_spec(spec, params);

    const int batch = cfg.effective_batch_size;
    const int n_max = static_cast<int>(std::max(dataset_lang.size(), dataset_math.size()));
    const int steps_per_side = ((n_max + batch - 1) / batch) * cfg.epochs;

    const std::vector<int> lang_order =
        planned_order(static_cast<int>(dataset_lang.size()), steps_per_side * batch, cfg.seed, "lang");
    const std::vector<int> math_order =
        planned_order(static_cast<int>(dataset_math.size()), steps_per_side * batch, cfg.seed, "math");

    Run run;
    run.params = &params;
    run.cfg = &cfg;
    run.valset = valset;

    std::vector<ParamName> names[2] = {spec.side_names(Side::LANG), spec.side_names(Side::MATH)};
    std::map<ParamName, Tensor*> ptrs[2] = {base_ptrs(params, names[0]), base_ptrs(params, names[1])};
    const Dataset* sets[2] = {&dataset_lang, &dataset_math};
    const std::vector<int>* orders[2] = {&lang_order, &math_order};
    int done[2] = {0, 0};

    run.maybe_validate(true);
    int cur = 0;  // LANG first
    while (done[0] < steps_per_side || done[1] < steps_per_side) {
        if (done[cur] == steps_per_side) {
            cur = 1 - cur;
            continue;
        }
        const int block = std::min(cfg.steps_per_switch, steps_per_side - done[cur]);
        run.report.switch_log.emplace_back(run.state.global_step, cur == 0 ? "LANG" : "MATH");
        for (int i = 0; i < block; ++i) {
            const Batch b = build_batch(*sets[cur], *orders[cur],
                                        static_cast<std::size_t>(done[cur]) * batch, batch,
                                        cfg.max_seq_len_train);
            run.step(b, names[cur], ptrs[cur]);
            ++done[cur];
            run.maybe_validate(false);
        }
        cur = 1 - cur;
    }
    run.maybe_validate(true);
    return std::move(run.report);
}

Dataset blend_valsets(const Dataset& lang, const Dataset& math) {
    Dataset blend;
    blend.origin = "val-blend";
    blend.samples = lang.samples;
    blend.samples.insert(blend.samples.end(), math.samples.begin(), math.samples.end());
    return blend;
}

}  // namespace modcomp
