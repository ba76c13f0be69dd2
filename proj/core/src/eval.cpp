#include "modcomp/eval.hpp"

#include "modcomp/error.hpp"
#include "modcomp/tasks.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>

namespace modcomp {

namespace {

using nlohmann::json;

// bos + each shot's problem and gold answer, sep-joined, then the problem.
std::vector<int> fewshot_prompt(const std::vector<Sample>& shots, const Sample& item) {
    std::vector<int> prompt{Vocab::bos};
    const auto append_body = [&prompt](const std::vector<int>& toks) {
        // every stored prompt starts with its own bos; keep a single one
        std::size_t from = !toks.empty() && toks.front() == Vocab::bos ? 1 : 0;
        prompt.insert(prompt.end(), toks.begin() + from, toks.end());
    };
    for (const Sample& shot : shots) {
        append_body(shot.prompt);
        prompt.insert(prompt.end(), shot.answer.begin(), shot.answer.end());
        prompt.push_back(Vocab::sep);
    }
    append_body(item.prompt);
    return prompt;
}

}  // namespace

std::string EvalReport::to_json(bool include_items) const {
    json doc;
    doc["split"] = split;
    doc["template_version"] = template_version;
    doc["n_items"] = n_items;
    doc["em_accuracy"] = em_accuracy;
    if (include_items) {
        json arr = json::array();
        for (const Item& it : items) {
            arr.push_back({{"prompt", it.prompt},
                           {"gold", it.gold},
                           {"prediction", it.prediction},
                           {"correct", it.correct}});
        }
        doc["items"] = std::move(arr);
    }
    return doc.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw EvalError(std::string("bad eval report JSON: ") + e.what());
    }
    EvalReport r;
    r.split = doc.at("split").get<std::string>();
    r.template_version = doc.at("template_version").get<std::string>();
    r.n_items = doc.at("n_items").get<int>();
    r.em_accuracy = doc.at("em_accuracy").get<double>();
    if (doc.contains("items")) {
        for (const auto& row : doc["items"]) {
            Item it;
            it.prompt = row.at("prompt").get<std::vector<int>>();
            it.gold = row.at("gold").get<std::vector<int>>();
            it.prediction = row.at("prediction").get<std::vector<int>>();
            it.correct = row.at("correct").get<bool>();
            r.items.push_back(std::move(it));
        }
    }
    return r;
}

DecodeFn greedy_decoder(const ModelParams& params, const AdapterSet* adapters) {
    return [&params, adapters](const std::vector<int>& prompt, int max_new, int eos_id) {
        std::vector<int> seq = prompt;
        std::vector<int> out;
        for (int i = 0; i < max_new; ++i) {
            const Tensor logits = forward_logits(params, seq, adapters);
            const int t = logits.rows() - 1;
            int best = 0;
            float best_v = logits.at(t, 0);
            for (int v = 1; v < logits.cols(); ++v) {
                if (logits.at(t, v) > best_v) {
                    best_v = logits.at(t, v);
                    best = v;
                }
            }
            out.push_back(best);
            if (best == eos_id || best == Vocab::sep) break;
            seq.push_back(best);
            if (static_cast<int>(seq.size()) >= params.config.max_seq_len) break;
        }
        return out;
    };
}

EvalReport exact_match_eval(const DecodeFn& decode, const Dataset& evalset, int n_shot) {
    if (n_shot < 0) throw EvalError("n_shot must be non-negative");
    if (static_cast<int>(evalset.exemplars.size()) < n_shot) {
        throw EvalError("exemplar pool smaller than n_shot");
    }
    if (evalset.samples.empty()) throw EvalError("no items to score");
    const std::vector<Sample> shots(evalset.exemplars.begin(), evalset.exemplars.begin() + n_shot);

    EvalReport report;
    report.split = evalset.origin;
    report.n_items = static_cast<int>(evalset.samples.size());
    int correct = 0;
    for (const Sample& item : evalset.samples) {
        EvalReport::Item rec;
        rec.prompt = fewshot_prompt(shots, item);
        rec.gold = item.answer;
        const int cap = static_cast<int>(item.answer.size()) + 2;
        std::vector<int> produced = decode(rec.prompt, cap, Vocab::eos);
        // The template ends every answer with sep (eos closes a sequence), so
        // either one marks the end of the prediction.
        if (!produced.empty() && (produced.back() == Vocab::eos || produced.back() == Vocab::sep)) {
            produced.pop_back();
        }
        rec.prediction = std::move(produced);
        rec.correct = rec.prediction == rec.gold;
        correct += rec.correct ? 1 : 0;
        report.items.push_back(std::move(rec));
    }
    report.em_accuracy = static_cast<double>(correct) / report.n_items;
    return report;
}

EvalReport exact_match_eval(const ModelParams& params, const Dataset& evalset, int n_shot,
                            const AdapterSet* adapters) {
    return exact_match_eval(greedy_decoder(params, adapters), evalset, n_shot);
}

void ScoreTable::validate() const {
    if (treatments.size() < 2) throw StatsError("need at least 2 treatments");
    if (blocks.size() < 2) throw StatsError("need at least 2 blocks");
    if (scores.size() != blocks.size()) throw StatsError("score rows must match blocks");
    for (const auto& row : scores) {
        if (row.size() != treatments.size()) throw StatsError("ragged score table");
    }
}

std::string ScoreTable::to_csv() const {
    std::string out = "block";
    for (const std::string& t : treatments) out += "," + t;
    out += "\n";
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        out += blocks[b];
        for (double v : scores[b]) out += "," + std::to_string(v);
        out += "\n";
    }
    return out;
}

std::string ScoreTable::to_json() const {
    json doc;
    doc["treatments"] = treatments;
    doc["blocks"] = blocks;
    doc["scores"] = scores;
    return doc.dump(2);
}

FriedmanResult friedman_test(const ScoreTable& table) {
    table.validate();
    const int k = static_cast<int>(table.treatments.size());
    const int n = static_cast<int>(table.blocks.size());
    std::vector<double> rank_sum(k, 0.0);
    std::vector<int> idx(k);
    for (int b = 0; b < n; ++b) {
        const std::vector<double>& row = table.scores[b];
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&row](int a, int c) { return row[a] < row[c]; });
        // midranks over tied runs
        int i = 0;
        while (i < k) {
            int j = i;
            while (j + 1 < k && row[idx[j + 1]] == row[idx[i]]) ++j;
            const double mid = (static_cast<double>(i) + j) / 2.0 + 1.0;
            for (int t = i; t <= j; ++t) rank_sum[idx[t]] += mid;
            i = j + 1;
        }
    }
    double sum_sq = 0.0;
    for (double r : rank_sum) sum_sq += r * r;
    FriedmanResult result;
    result.k = k;
    result.n = n;
    result.chi_square =
        12.0 / (static_cast<double>(n) * k * (k + 1)) * sum_sq - 3.0 * n * (k + 1);
    if (result.chi_square < 0.0 && result.chi_square > -1e-9) result.chi_square = 0.0;
    boost::math::chi_squared_distribution<double> dist(k - 1);
    result.p_value = boost::math::cdf(boost::math::complement(dist, result.chi_square));
    return result;
}

}  // namespace modcomp
