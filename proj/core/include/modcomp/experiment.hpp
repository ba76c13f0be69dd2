#pragma once

#include "modcomp/eval.hpp"
#include "modcomp/json_io.hpp"
#include "modcomp/merge.hpp"
#include "modcomp/partition.hpp"
#include "modcomp/trainer.hpp"

#include <cstdint>
#include <exception>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace modcomp {

struct DataConfig {
    int train_per_dataset = 8000;
    int val_per_dataset = 200;
    int eval_items = 500;
    int cipher_seed = 101;
    bool identity_cipher = false;

    void validate() const;  // throws ConfigError
};
void to_json(nlohmann::json& j, const DataConfig& c);
void from_json(const nlohmann::json& j, DataConfig& c);

struct PartitionSection {
    Scheme scheme = Scheme::C;
    Side boundary_policy = Side::LANG;
    bool z_complement = true;
};
void to_json(nlohmann::json& j, const PartitionSection& c);
void from_json(const nlohmann::json& j, PartitionSection& c);

// Post-training merge step. Expert refs are either empty (use the expert this
// run trained) or paths to weight checkpoints from earlier runs.
struct MergeSection {
    std::string kind = "layer_swap";  // layer_swap | revert | interpolate
    std::string math_expert;
    std::string lang_expert;
    Side revert_side = Side::LANG;
    float lam = 1.0f;
};
void to_json(nlohmann::json& j, const MergeSection& c);
void from_json(const nlohmann::json& j, MergeSection& c);

struct EvalSection {
    int n_shot = 2;
    std::vector<std::string> splits = {"source", "target"};
    bool include_items = false;
};
void to_json(nlohmann::json& j, const EvalSection& c);
void from_json(const nlohmann::json& j, EvalSection& c);

// One pipeline: generate data, train per `treatment`, optionally merge, then
// run exact-match evals. Treatments:
//   base          no training, evaluate the starting weights
//   math_only     full SFT on the math corpus
//   lang_only     full SFT on the cipher-language corpus
//   partial_math  SFT with only the MATH side trainable
//   partial_lang  SFT with only the LANG side trainable
//   data_mix      full SFT on the shuffled union of both corpora
//   simultaneous  alternating partition training on both corpora
//   layer_swap    trains both full experts, then swaps sides
//   partial_swap  trains both partial experts, then swaps sides
struct ExperimentConfig {
    std::string name = "run";
    std::string treatment = "data_mix";
    int seed = 0;                       // master seed, fanned out per stream
    std::string seed_source = "config";
    ModelConfig model;
    DataConfig data;
    TrainConfig training;
    PartitionSection partition;
    std::optional<MergeSection> merge;
    EvalSection eval;
    std::string base_checkpoint;        // start from these weights when set
    std::string output_dir = "runs/out";
    bool overwrite = false;

    void validate() const;          // throws ConfigError
    std::uint64_t config_hash() const;
};
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

extern const std::vector<std::string> kRunTreatments;    // all accepted values
extern const std::vector<std::string> kSuiteTreatments;  // the 6-column matrix

struct RunResult {
    std::string run_dir;
    nlohmann::json summary;
};

// Coarse error family ("config", "data", "train", "merge", "eval", "other")
// used in failure reports and for process exit codes.
const char* error_class(const std::exception& ex);

// Tag-separated stream seed derived from a master seed. Every stage derives
// its own stream so corpora, init, and batch order stay independent.
int fold_seed(int seed, const std::string& tag);

// Executes the config and fills output_dir with datasets, checkpoints,
// train/eval reports, and summary.json (config hash plus the hashes of every
// checkpoint consumed and produced). A failing stage still writes summary.json
// with the stage tag before the error propagates.
RunResult run_experiment(const ExperimentConfig& cfg);

// The canned 6-treatment matrix over seeds x cipher seeds. Each seed shares
// one mixed-pretrained base and one pair of math experts; each (seed, cipher)
// condition trains the language-side treatments, swaps, and evaluates. Also
// runs the scheme-C train-then-revert harness on the math experts when
// enabled.
struct SuiteConfig {
    ModelConfig model;
    DataConfig data;
    TrainConfig pretrain;
    TrainConfig sft;
    PartitionSection partition;
    std::vector<int> seeds = {1, 2, 3, 4, 5};
    std::vector<int> cipher_seeds = {101, 202};
    std::string seed_source = "config";
    EvalSection eval;
    bool source_evals = true;
    bool revert_harness = true;
    bool lambda_grid = false;
    std::vector<float> lambdas = {0.0f, 0.25f, 0.5f, 0.75f, 1.0f};
    std::string output_dir = "runs/suite";
    bool overwrite = false;

    void validate() const;
};
void to_json(nlohmann::json& j, const SuiteConfig& c);
void from_json(const nlohmann::json& j, SuiteConfig& c);

SuiteConfig suite_default_config();

struct SuiteResult {
    std::string suite_dir;
    ScoreTable table;  // target-language EM, treatments x (seed, cipher) blocks
    FriedmanResult friedman;
    nlohmann::json summary;
};

SuiteResult run_suite(const SuiteConfig& cfg);

// steps_per_switch sweep for simultaneous training. Cadences are positive
// integers or "sequential" (one block per side). Emits starting/ending
// validation loss and target EM per cadence.
struct AblateConfig {
    ModelConfig model;
    DataConfig data;
    TrainConfig pretrain;
    TrainConfig sft;
    PartitionSection partition;
    std::vector<std::string> cadences = {"1", "5", "10", "50", "200", "sequential"};
    int seed = 1;
    std::string seed_source = "config";
    EvalSection eval;
    std::string output_dir = "runs/ablate";
    bool overwrite = false;

    void validate() const;
};
void to_json(nlohmann::json& j, const AblateConfig& c);
void from_json(const nlohmann::json& j, AblateConfig& c);

AblateConfig ablate_default_config();

struct AblateResult {
    std::string dir;
    nlohmann::json report;
};

AblateResult run_cadence_ablation(const AblateConfig& cfg);

struct CompareResult {
    ScoreTable table;
    FriedmanResult friedman;
};

// Reads summary.json from each run directory and assembles the treatment x
// block score table from target-split EM. Throws StatsError when a
// (treatment, block) cell is missing or duplicated.
CompareResult compare_treatments(const std::vector<std::string>& run_dirs,
                                 const std::vector<std::string>& treatments);

}  // namespace modcomp
