#pragma once

#include "modcomp/data.hpp"
#include "modcomp/lora.hpp"
#include "modcomp/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace modcomp {

inline constexpr const char* kFewshotTemplateVersion = "fewshot-v1";

struct EvalReport {
    struct Item {
        std::vector<int> prompt;
        std::vector<int> gold;
        std::vector<int> prediction;
        bool correct = false;
    };
    std::string split;
    std::string template_version = kFewshotTemplateVersion;
    int n_items = 0;
    double em_accuracy = 0.0;
    std::vector<Item> items;

    std::string to_json(bool include_items = true) const;
    static EvalReport from_json(const std::string& text);
};

// Greedy continuation oracle: given the full prompt, produce up to max_new
// tokens, stopping after eos. Injectable so eval logic is testable without a
// model.
using DecodeFn =
    std::function<std::vector<int>(const std::vector<int>& prompt, int max_new, int eos_id)>;

DecodeFn greedy_decoder(const ModelParams& params, const AdapterSet* adapters = nullptr);

// Two-shot (by default) exact match over the scored items. Shots come from
// the dataset's exemplar pool and are the same for every item; the predicted
// answer must reproduce the gold tokens exactly.
EvalReport exact_match_eval(const DecodeFn& decode, const Dataset& evalset, int n_shot = 2);
EvalReport exact_match_eval(const ModelParams& params, const Dataset& evalset, int n_shot = 2,
                            const AdapterSet* adapters = nullptr);

struct ScoreTable {
    std::vector<std::string> treatments;  // columns
    std::vector<std::string> blocks;      // rows (conditions)
    std::vector<std::vector<double>> scores;

    void validate() const;  // throws StatsError
    std::string to_csv() const;
    std::string to_json() const;
};

struct FriedmanResult {
    double chi_square = 0.0;
    double p_value = 1.0;
    int k = 0;  // treatments
    int n = 0;  // blocks
};

// Midrank-based Friedman statistic with a chi-square (k-1 df) p-value.
FriedmanResult friedman_test(const ScoreTable& table);

}  // namespace modcomp
