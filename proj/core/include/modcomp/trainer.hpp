#pragma once

#include "modcomp/data.hpp"
#include "modcomp/lora.hpp"
#include "modcomp/model.hpp"
#include "modcomp/optimizer.hpp"
#include "modcomp/partition.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace modcomp {

enum class TrainMode { single, mixed, simultaneous };

TrainMode train_mode_parse(const std::string& s);
const char* train_mode_str(TrainMode m);

enum class TrainablePolicy { all, lang_side, math_side };

struct TrainConfig {
    TrainMode mode = TrainMode::single;
    int effective_batch_size = 16;
    int epochs = 1;
    int steps_per_switch = 1;  // simultaneous only
    int seed = 0;
    TrainablePolicy trainable_policy = TrainablePolicy::all;
    std::optional<AdapterConfig> lora;
    int max_seq_len_train = 80;
    OptimizerConfig optim;
    int validate_every = 50;

    void validate() const;  // throws ConfigError
};

struct TrainReport {
    std::vector<double> train_loss;                     // one entry per optimizer step
    std::vector<std::pair<int, double>> val_loss;       // (global step, loss)
    std::vector<std::pair<int, std::string>> switch_log;  // (first step of block, side)
    int steps = 0;
    std::string checkpoint_ref;

    double start_val_loss() const;  // throws TrainError when no validation ran
    double end_val_loss() const;
    std::string to_json() const;
};

// Mean masked cross-entropy over the whole set, pooled across positions.
// No gradients, no mutation.
double validate(const ModelParams& params, const Dataset& valset,
                const AdapterSet* adapters = nullptr);

// One SFT run over the shuffled dataset. side picks the trainable partition
// side (requires spec); absent side falls back to cfg.trainable_policy, and
// policy `all` trains everything. Under cfg.lora the base stays frozen and
// the adapters (written to *adapters_out) are trained instead, restricted to
// the chosen side's targets when a side is given.
TrainReport train_single(ModelParams& params, const Dataset& dataset,
                         const std::optional<PartitionSpec>& spec, std::optional<Side> side,
                         const TrainConfig& cfg, const Dataset* valset = nullptr,
                         AdapterSet* adapters_out = nullptr);

// Jointly optimizes the seed-shuffled union of both datasets, all parameters
// trainable.
TrainReport train_mixed(ModelParams& params, const Dataset& dataset_a, const Dataset& dataset_b,
                        const TrainConfig& cfg, const Dataset* valset = nullptr);

// Alternates blocks of cfg.steps_per_switch steps: LANG batches update the
// LANG side, MATH batches the MATH side, one shared schedule and one
// partition-aware optimizer state. The shorter dataset restarts reshuffled.
TrainReport train_simultaneous(ModelParams& params, const Dataset& dataset_lang,
                               const Dataset& dataset_math, const PartitionSpec& spec,
                               const TrainConfig& cfg, const Dataset* valset = nullptr);

// Fixed lang-then-math concatenation ("equal amount from each" validation).
Dataset blend_valsets(const Dataset& lang, const Dataset& math);

// Deterministic sample-index schedule for a named stream: repeated shuffled
// epochs over [0, n), truncated to count draws. Simultaneous training
// consumes exactly this schedule, which lets tests replay its batches.
std::vector<int> planned_order(int n, int count, int seed, const std::string& stream_tag);

}  // namespace modcomp
