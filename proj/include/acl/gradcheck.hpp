#pragma once

#include <vector>

#include "acl/layer.hpp"
#include "acl/tensor.hpp"

namespace acl {

struct GradCheckRow {
    int kernel_index = 0;
    KernelFamily family = KernelFamily::Plain;
    int akp_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
    bool pass = false;
};

struct GradCheckReport {
    std::vector<GradCheckRow> rows;
    bool all_pass = true;
};

// |a - n| / max(|a|, |n|), guarded against 0/0.
double relative_error(double analytic, double numeric);

// Fills rel_err/pass on every row and all_pass on the report. A row passes
// when the relative error is under tol or both values agree within
// abs_guard absolutely (covers legitimately zero gradients). Separated from
// the gradient computation so a deliberately corrupted report can be used
// to prove the harness actually rejects wrong gradients.
void judge(GradCheckReport& report, double tol, double abs_guard = 1e-8);

// Compares every AKP gradient produced by the layer's backward pass against
// central finite differences of a fixed scalar loss
//   L = sum(R .* out) + 0.5 * sum(out^2)
// through the forward pass, where R is a deterministic random tensor. The
// loss is nonlinear in the output on purpose: pure scale errors in either
// pass cannot cancel.
GradCheckReport gradcheck_layer(const AclLayer& layer, const Tensor4& input,
                                double fd_step = 1e-6, double tol = 1e-4);

// Per-family rollup for table output.
struct FamilySummary {
    KernelFamily family = KernelFamily::Plain;
    int akps_checked = 0;
    double max_rel_err = 0.0;
    bool pass = true;
};
std::vector<FamilySummary> summarize(const GradCheckReport& report);

// Draws default-initialized AKPs, rejecting points where a family's kernel
// is not differentiable on the sampling grid (orientation aligned with a
// sign/indicator boundary), so finite differences are trustworthy there.
KernelSpec random_smooth_spec(KernelFamily family, KernelSize size, Rng& rng);

}  // namespace acl
