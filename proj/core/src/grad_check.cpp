#include "modcomp/grad_check.hpp"

#include "modcomp/error.hpp"
#include "modcomp/hash.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace modcomp {

GradCheckReport compare_with_fd(ModelParams params, const Batch& batch,
                                const GradMap& analytic, const GradCheckOptions& opt) {
    if (opt.epsilon <= 0.0 || opt.epsilon > 1e-2) {
        throw ConfigError("grad_check epsilon must lie in (0, 1e-2]");
    }
    const int max_coords = std::min(opt.max_coords_per_param, 512);
    if (max_coords < 1) throw ConfigError("grad_check needs at least one coordinate per parameter");

    GradCheckReport report;
    for (const ParamName& name : registry_names(params.config)) {
        auto ait = analytic.find(name);
        if (ait == analytic.end()) throw ConfigError("analytic gradients missing " + name.str());
        const Tensor& ana = ait->second;
        Tensor& w = params.weights.at(name);
        if (!w.same_shape(ana)) throw ShapeError("analytic gradient shape mismatch for " + name.str());

        float ana_max = 0.0f;
        for (std::int64_t i = 0; i < ana.size(); ++i) ana_max = std::max(ana_max, std::abs(ana.at(i)));
        const double floor = 1e-3 * static_cast<double>(ana_max);

        std::vector<std::int64_t> coords(static_cast<std::size_t>(w.size()));
        std::iota(coords.begin(), coords.end(), 0);
        if (static_cast<int>(coords.size()) > max_coords) {
            const std::uint64_t h = fnv1a64(name.str());
            std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(h),
                              static_cast<std::uint32_t>(h >> 32)};
            std::mt19937 gen(seq);
            std::shuffle(coords.begin(), coords.end(), gen);
            coords.resize(max_coords);
        }

        GradCheckReport::ParamResult pr;
        pr.name = name;
        pr.coords_checked = static_cast<int>(coords.size());
        for (std::int64_t idx : coords) {
            const float orig = w.at(idx);
            const float plus = static_cast<float>(static_cast<double>(orig) + opt.epsilon);
            const float minus = static_cast<float>(static_cast<double>(orig) - opt.epsilon);
            w.at(idx) = plus;
            const double loss_plus = batch_loss_f64(params, batch);
            w.at(idx) = minus;
            const double loss_minus = batch_loss_f64(params, batch);
            w.at(idx) = orig;
            if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus)) {
                throw NumericError("non-finite loss while perturbing " + name.str());
            }
            // Use the step the f32 weight actually took, not the nominal 2*eps.
            const double num = (loss_plus - loss_minus) /
                               (static_cast<double>(plus) - static_cast<double>(minus));
            const double an = static_cast<double>(ana.at(idx));
            const double denom = std::max({std::abs(num), std::abs(an), floor});
            const double err = denom == 0.0 ? 0.0 : std::abs(num - an) / denom;
            pr.max_rel_err = std::max(pr.max_rel_err, err);
        }
        report.max_rel_err = std::max(report.max_rel_err, pr.max_rel_err);
        report.per_param.push_back(std::move(pr));
    }
    return report;
}

GradCheckReport grad_check(const ModelParams& params, const Batch& batch,
                           const GradCheckOptions& opt) {
    GradMap grads;
    loss_and_grads(params, batch, &grads);
    return compare_with_fd(params, batch, grads, opt);
}

double grad_check(const ModelParams& params, const Batch& batch, double epsilon) {
    GradCheckOptions opt;
    opt.epsilon = epsilon;
    return grad_check(params, batch, opt).max_rel_err;
}

}  // namespace modcomp
