#include "acl/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace acl {
namespace {

// Deterministic companion tensor for the loss term sum(R .* out).
Tensor4 loss_weights(const Tensor4& like) {
    Rng rng = Rng::stream(0x6c05, like.size());
    Tensor4 r(like.b, like.c, like.h, like.w);
    for (double& x : r.v) x = rng.uniform(-1.0, 1.0);
    return r;
}

double loss_value(const AclLayer& layer, const Tensor4& input, const Tensor4& r) {
    const Tensor4 out = forward(layer, input);
    double acc = 0.0;
    for (size_t i = 0; i < out.size(); ++i)
        acc += r.v[i] * out.v[i] + 0.5 * out.v[i] * out.v[i];
    return acc;
}

}  // namespace

double relative_error(double analytic, double numeric) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale == 0.0) return 0.0;
    return std::abs(analytic - numeric) / scale;
}

void judge(GradCheckReport& report, double tol, double abs_guard) {
    report.all_pass = true;
    for (GradCheckRow& row : report.rows) {
        row.rel_err = relative_error(row.analytic, row.numeric);
        row.pass = std::abs(row.analytic - row.numeric) <= abs_guard ||
                   row.rel_err < tol;
        if (!row.pass) report.all_pass = false;
    }
}

GradCheckReport gradcheck_layer(const AclLayer& layer, const Tensor4& input,
                                double fd_step, double tol) {
    validate(layer);
    const Tensor4 out = forward(layer, input);
    const Tensor4 r = loss_weights(out);

    // dL/dout for L = sum(R .* out) + 0.5 * sum(out^2)
    Tensor4 grad_out = out;
    for (size_t i = 0; i < grad_out.size(); ++i) grad_out.v[i] += r.v[i];
    const auto [grads, grad_in] = backward(layer, input, grad_out);
    (void)grad_in;

    GradCheckReport report;
    for (size_t k = 0; k < layer.specs.size(); ++k) {
        for (size_t l = 0; l < layer.specs[k].akps.size(); ++l) {
            AclLayer probe = layer;
            double& akp = probe.specs[k].akps[l];
            const double saved = akp;
            akp = saved + fd_step;
            const double lp = loss_value(probe, input, r);
            akp = saved - fd_step;
            const double lm = loss_value(probe, input, r);

            GradCheckRow row;
            row.kernel_index = static_cast<int>(k);
            row.family = layer.specs[k].family;
            row.akp_index = static_cast<int>(l);
            row.analytic = grads.akp_grads[k][l];
            row.numeric = (lp - lm) / (2.0 * fd_step);
            report.rows.push_back(row);
        }
    }
    judge(report, tol);
    return report;
}

std::vector<FamilySummary> summarize(const GradCheckReport& report) {
    std::vector<FamilySummary> out;
    for (const GradCheckRow& row : report.rows) {
        FamilySummary* s = nullptr;
        for (FamilySummary& cand : out)
            if (cand.family == row.family) s = &cand;
        if (!s) {
            out.push_back({row.family, 0, 0.0, true});
            s = &out.back();
        }
        ++s->akps_checked;
        s->max_rel_err = std::max(s->max_rel_err, row.rel_err);
        if (!row.pass) s->pass = false;
    }
    return out;
}

KernelSpec random_smooth_spec(KernelFamily family, KernelSize size, Rng& rng) {
    const std::vector<double> xs = grid_offsets(size.h);
    const std::vector<double> ys = grid_offsets(size.w);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        KernelSpec spec = default_init(family, size, rng);
        bool ok = true;
        if (family == KernelFamily::TGD1st) {
            const double theta = spec.akps[0];
            if (std::abs(std::cos(theta)) <= 1e-3) continue;
            // No grid point may sit near the lobe indicator's edge.
            for (double x : xs) {
                for (double y : ys) {
                    const double xp = x * std::cos(theta) + y * std::sin(theta);
                    if (std::abs(std::abs(xp) - kTgdDelta) <= 5e-5) ok = false;
                }
            }
        } else if (family == KernelFamily::TGD2nd) {
            const double theta = spec.akps[0];
            // |x'| kinks at x' = 0; keep all off-center points clear of it.
            for (double x : xs) {
                for (double y : ys) {
                    if (x == 0.0 && y == 0.0) continue;
                    const double xp = x * std::cos(theta) + y * std::sin(theta);
                    if (std::abs(xp) <= 1e-3) ok = false;
                }
            }
        }
        if (ok) return spec;
    }
    throw std::runtime_error("random_smooth_spec: no smooth point found");
}

}  // namespace acl
