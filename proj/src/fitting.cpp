#include "acl/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "acl/parallel.hpp"
#include "acl/rng.hpp"

namespace acl {
namespace {

constexpr double kArmijoC = 1e-4;
constexpr double kMinStep = 1e-12;

// Squared Frobenius distance between the sampled kernel and the target.
double objective(const KernelSpec& spec, const Mat& target) {
    const Mat s = sample(spec);
    double acc = 0.0;
    for (size_t i = 0; i < s.v.size(); ++i) {
        const double d = s.v[i] - target.v[i];
        acc += d * d;
    }
    return acc;
}

std::vector<double> gradient(const KernelSpec& spec, const Mat& target) {
    const Mat s = sample(spec);
    const std::vector<Mat> jac = akp_jacobian(spec);
    std::vector<double> g(jac.size(), 0.0);
    for (size_t l = 0; l < jac.size(); ++l) {
        double acc = 0.0;
        for (size_t i = 0; i < s.v.size(); ++i)
            acc += 2.0 * (s.v[i] - target.v[i]) * jac[l].v[i];
        g[l] = acc;
    }
    return g;
}

// Keeps every iterate inside the family's domain: scale parameters stay
// >= the AKP floor and Gabor's wavelength keeps its magnitude away from 0.
void project(KernelSpec& spec) {
    const std::vector<bool> pos = akp_positivity(spec.family, spec.size);
    for (size_t l = 0; l < spec.akps.size(); ++l)
        if (pos[l] && spec.akps[l] < kAkpFloor) spec.akps[l] = kAkpFloor;
    if (spec.family == KernelFamily::Gabor) {
        double& lambda = spec.akps[0];
        if (std::abs(lambda) < kAkpFloor)
            lambda = lambda < 0.0 ? -kAkpFloor : kAkpFloor;
    }
}

// Index of the orientation AKP, or -1 for the isotropic families.
int theta_index(KernelFamily family) {
    switch (family) {
        case KernelFamily::Gabor:
            return 1;
        case KernelFamily::TGD1st:
        case KernelFamily::TGD2nd:
            return 0;
        default:
            return -1;
    }
}

struct Descent {
    KernelSpec spec;
    double error = 0.0;
};

Descent descend(KernelSpec spec, const Mat& target, int max_iters, double tol) {
    project(spec);
    double fx = objective(spec, target);
    std::vector<double> prev_akps, prev_g;
    double trial = 1.0;
    for (int iter = 0; iter < max_iters; ++iter) {
        const std::vector<double> g = gradient(spec, target);
        double gnorm2 = 0.0, ginf = 0.0;
        for (double v : g) {
            gnorm2 += v * v;
            ginf = std::max(ginf, std::abs(v));
        }
        if (std::sqrt(gnorm2) < tol) break;

        // Seed the backtracking with a Barzilai-Borwein spectral step. A
        // fixed trial step crawls on this objective: the AKPs differ in
        // scale by orders of magnitude, so plain descent zigzags.
        if (!prev_akps.empty()) {
            double ss = 0.0, sy = 0.0;
            for (size_t l = 0; l < g.size(); ++l) {
                const double s = spec.akps[l] - prev_akps[l];
                const double y = g[l] - prev_g[l];
                ss += s * s;
                sy += s * y;
            }
            if (sy > 0.0 && std::isfinite(ss / sy)) trial = ss / sy;
        }
        // No single iteration may move any AKP by more than one unit.
        // Without this cap a far-off start can fling a scale parameter
        // straight onto its floor, and the projected spike kernel is a
        // boundary minimum that Armijo accepts and never escapes.
        trial = std::min(trial, 1.0 / ginf);
        trial = std::clamp(trial, kMinStep, 1e8);
        prev_akps = spec.akps;
        prev_g = g;

        double step = trial;
        bool moved = false;
        while (step >= kMinStep) {
            KernelSpec cand = spec;
            for (size_t l = 0; l < g.size(); ++l) cand.akps[l] -= step * g[l];
            project(cand);
            const double fc = objective(cand, target);
            if (fc <= fx - kArmijoC * step * gnorm2) {
                spec = std::move(cand);
                fx = fc;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;  // no acceptable step left at this point
        trial = 2.0 * step;  // fallback trial when the spectral pair is unusable
    }
    return {std::move(spec), fx};
}

}  // namespace

FitResult fit(const FitProblem& problem) {
    if (problem.targets.empty())
        throw std::invalid_argument("fit: no targets given");
    if (problem.family == KernelFamily::Plain)
        throw std::invalid_argument(
            "fit: Plain kernels copy the target exactly; nothing to fit");
    if (problem.family == KernelFamily::Mean)
        throw std::invalid_argument("fit: Mean kernels have no parameters to fit");
    if (problem.restarts < 1 || problem.max_iters < 1 || !(problem.tol > 0.0))
        throw std::invalid_argument("fit: restarts/max_iters/tol must be positive");

    const KernelSize size{problem.targets[0].h, problem.targets[0].w};
    if (size.h < 1 || size.w < 1)
        throw std::invalid_argument("fit: target size must be positive");
    for (const Mat& t : problem.targets)
        if (t.h != size.h || t.w != size.w)
            throw std::invalid_argument("fit: targets must share one size");

    const int ti = theta_index(problem.family);
    FitResult result;
    result.specs.reserve(problem.targets.size());
    result.rmse.reserve(problem.targets.size());

    for (size_t t = 0; t < problem.targets.size(); ++t) {
        // Starts are drawn sequentially from a per-target stream, so adding
        // restarts extends the start list without changing its prefix.
        Rng start_rng = Rng::stream(problem.seed, t);
        std::vector<KernelSpec> starts;
        starts.reserve(static_cast<size_t>(problem.restarts));
        for (int r = 0; r < problem.restarts; ++r) {
            KernelSpec s = default_init(problem.family, size, start_rng);
            if (ti >= 0 && r < 8)
                s.akps[static_cast<size_t>(ti)] = r * std::numbers::pi / 8.0;
            starts.push_back(std::move(s));
        }

        const Mat& target = problem.targets[t];
        std::vector<Descent> runs = run_indexed<Descent>(
            problem.restarts, [&](int r) {
                return descend(starts[static_cast<size_t>(r)], target,
                               problem.max_iters, problem.tol);
            });
        size_t best = 0;
        for (size_t r = 1; r < runs.size(); ++r)
            if (runs[r].error < runs[best].error) best = r;  // index breaks ties

        result.rmse.push_back(
            std::sqrt(runs[best].error / (static_cast<double>(size.h) * size.w)));
        result.specs.push_back(std::move(runs[best].spec));
        result.akp_total += akp_count(problem.family, size);
        result.param_total += size.h * size.w;
    }
    return result;
}

FitReport fit_report(const FitResult& result) {
    if (result.specs.empty() || result.param_total <= 0)
        throw std::invalid_argument("fit_report: empty fit result");
    if (result.specs.size() != result.rmse.size())
        throw std::invalid_argument("fit_report: specs/rmse length mismatch");
    FitReport rep;
    rep.rmse = result.rmse;
    for (const KernelSpec& s : result.specs) rep.akps.push_back(s.akps);
    rep.akp_total = result.akp_total;
    rep.param_total = result.param_total;
    rep.compression_ratio =
        1.0 - static_cast<double>(result.akp_total) / result.param_total;
    return rep;
}

}  // namespace acl
