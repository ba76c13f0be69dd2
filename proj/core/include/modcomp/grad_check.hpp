#pragma once

#include "modcomp/data.hpp"
#include "modcomp/model.hpp"
#include "modcomp/param_name.hpp"

#include <string>
#include <vector>

namespace modcomp {

struct GradCheckOptions {
    double epsilon = 1e-3;
    int max_coords_per_param = 128;  // sampled without replacement, capped at 512
    int seed = 0;
};

struct GradCheckReport {
    struct ParamResult {
        ParamName name;
        double max_rel_err = 0.0;
        int coords_checked = 0;
    };
    std::vector<ParamResult> per_param;
    double max_rel_err = 0.0;
};

// Central finite differences against a caller-supplied analytic GradMap.
// The FD reference evaluates the loss in float64 over the f32 weights; each
// coordinate error is |num - ana| / max(|num|, |ana|, 1e-3 * max|ana| in the
// parameter), and 0 when numerator and denominator both vanish.
GradCheckReport compare_with_fd(ModelParams params, const Batch& batch,
                                const GradMap& analytic, const GradCheckOptions& opt);

// Computes the analytic gradients itself, then compares.
GradCheckReport grad_check(const ModelParams& params, const Batch& batch,
                           const GradCheckOptions& opt = {});

// Spec-shaped convenience: returns the worst relative error.
double grad_check(const ModelParams& params, const Batch& batch, double epsilon);

}  // namespace modcomp
