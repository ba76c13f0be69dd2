#include "modcomp/data.hpp"

#include "modcomp/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace modcomp {

namespace {

using nlohmann::json;

constexpr const char* kExemplarPrefix = "exemplar:";

json sample_to_json(const Sample& s, bool exemplar) {
    json row;
    row["prompt"] = s.prompt;
    row["answer"] = s.answer;
    row["origin"] = exemplar ? kExemplarPrefix + s.origin : s.origin;
    return row;
}

Sample sample_from_json(const json& row) {
    Sample s;
    s.prompt = row.at("prompt").get<std::vector<int>>();
    s.answer = row.at("answer").get<std::vector<int>>();
    s.origin = row.at("origin").get<std::string>();
    return s;
}

}  // namespace

TrainItem make_train_item(const Sample& s, int eos_id) {
    if (s.answer.empty()) throw DataError("sample with empty answer");
    TrainItem item;
    item.origin = s.origin;
    item.tokens = s.prompt;
    item.tokens.insert(item.tokens.end(), s.answer.begin(), s.answer.end());
    item.tokens.push_back(eos_id);
    item.mask.assign(item.tokens.size(), 1);
    for (std::size_t i = 0; i < s.prompt.size(); ++i) item.mask[i] = 0;
    return item;
}

std::vector<TrainItem> pack_train_items(const std::vector<const Sample*>& group, int max_len,
                                        const std::string& origin, int bos_id, int eos_id,
                                        int sep_id) {
    std::vector<TrainItem> out;
    TrainItem cur;
    const auto flush = [&] {
        if (cur.tokens.size() <= 1) return;
        cur.tokens.back() = eos_id;  // final sample ends the sequence
        out.push_back(std::move(cur));
        cur = TrainItem{};
    };
    for (const Sample* s : group) {
        if (!s) throw DataError("null sample in pack group");
        if (s->answer.empty()) throw DataError("sample with empty answer");
        std::size_t from = !s->prompt.empty() && s->prompt.front() == bos_id ? 1 : 0;
        const std::size_t body = s->prompt.size() - from;
        const std::size_t need = body + s->answer.size() + 1;
        if (1 + need > static_cast<std::size_t>(max_len)) {
            throw DataError("training sequence longer than max_seq_len_train");
        }
        if (cur.tokens.size() + need > static_cast<std::size_t>(max_len)) flush();
        if (cur.tokens.empty()) {
            cur.origin = origin;
            cur.tokens.push_back(bos_id);
            cur.mask.push_back(0);
        }
        cur.tokens.insert(cur.tokens.end(), s->prompt.begin() + from, s->prompt.end());
        cur.mask.insert(cur.mask.end(), body, 0);
        cur.tokens.insert(cur.tokens.end(), s->answer.begin(), s->answer.end());
        cur.mask.insert(cur.mask.end(), s->answer.size(), 1);
        cur.tokens.push_back(sep_id);
        cur.mask.push_back(1);
    }
    flush();
    return out;
}

void save_dataset_jsonl(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const Sample& s : ds.exemplars) out << sample_to_json(s, true).dump() << '\n';
    for (const Sample& s : ds.samples) out << sample_to_json(s, false).dump() << '\n';
    if (!out) throw DataError("write failed: " + path);
}

Dataset load_dataset_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path);
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        Sample s = sample_from_json(row);
        if (s.origin.rfind(kExemplarPrefix, 0) == 0) {
            s.origin = s.origin.substr(std::string(kExemplarPrefix).size());
            if (ds.origin.empty()) ds.origin = s.origin;
            ds.exemplars.push_back(std::move(s));
        } else {
            if (ds.origin.empty()) ds.origin = s.origin;
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

}  // namespace modcomp
