#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace modcomp {

// One supervised example. The loss mask is derived, not stored: prompt tokens
// are context only, answer tokens (plus the trailing eos) are targets.
struct Sample {
    std::vector<int> prompt;
    std::vector<int> answer;
    std::string origin;
};

// A tokenized training sequence with an aligned target mask. mask[i] == 1
// means tokens[i] is supervised when predicted from its left context.
struct TrainItem {
    std::vector<int> tokens;
    std::vector<std::uint8_t> mask;
    std::string origin;
};

struct Batch {
    std::vector<TrainItem> items;
    std::string origin;  // tag of the stream this batch was drawn from
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<Sample> exemplars;  // few-shot pool, never scored or trained on
    std::string origin;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }
};

TrainItem make_train_item(const Sample& s, int eos_id);

// Greedy left-to-right packing of samples into shared sequences capped at
// max_len: bos, then problem/answer pairs with sep after each answer; the
// final sample's terminator becomes eos. Masks cover answers and their
// terminators. A sample that cannot fit alone raises DataError.
std::vector<TrainItem> pack_train_items(const std::vector<const Sample*>& group, int max_len,
                                        const std::string& origin, int bos_id, int eos_id,
                                        int sep_id);

// Line-delimited JSON: {"prompt": [ids], "answer": [ids], "origin": str}.
// Exemplar rows carry an "exemplar:" origin prefix and load back into the pool.
void save_dataset_jsonl(const Dataset& ds, const std::string& path);
Dataset load_dataset_jsonl(const std::string& path);

}  // namespace modcomp
