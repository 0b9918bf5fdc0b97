#pragma once

#include <cstdint>
#include <vector>

#include "acl/kernels.hpp"
#include "acl/matrix.hpp"

namespace acl {

// Fit one analytic family to a batch of target weight matrices, one kernel
// per target, by minimizing the squared Frobenius reconstruction error.
struct FitProblem {
    std::vector<Mat> targets;
    KernelFamily family = KernelFamily::Gabor;
    int restarts = 16;
    int max_iters = 500;
    double tol = 1e-8;    // stop when the gradient norm falls below this
    uint64_t seed = 0;    // start-point stream; fixed seed -> fixed result
};

struct FitResult {
    std::vector<KernelSpec> specs;  // best spec per target
    std::vector<double> rmse;       // sqrt(error / (h*w)) per target
    int akp_total = 0;
    int param_total = 0;            // dense parameter count of the targets
};

// Multi-start projected gradient descent with Armijo backtracking. The
// first eight starts stratify theta over {0, pi/8, ..., 7pi/8} for the
// oriented families; remaining starts are fully random. Restarts may run
// in parallel; the winner is picked by (error, restart index), so results
// do not depend on thread count. Plain and Mean targets are rejected.
FitResult fit(const FitProblem& problem);

struct FitReport {
    std::vector<double> rmse;
    std::vector<std::vector<double>> akps;
    int akp_total = 0;
    int param_total = 0;
    double compression_ratio = 0.0;  // 1 - akp_total / param_total
};

FitReport fit_report(const FitResult& result);

}  // namespace acl
