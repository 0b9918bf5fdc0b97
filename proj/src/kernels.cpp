#include "acl/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace acl {
namespace {

constexpr double kPi = std::numbers::pi;

double sign(double v) {
    if (v > 0.0) return 1.0;
    if (v < 0.0) return -1.0;
    return 0.0;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::domain_error(msg);
}

std::string bad_akp(KernelFamily family, const char* akp, const std::string& why) {
    return std::string(family_name(family)) + " kernel: " + akp + " " + why;
}

}  // namespace

int akp_count(KernelFamily family, KernelSize size) {
    switch (family) {
        case KernelFamily::Mean:
            return 0;
        case KernelFamily::Gabor:
            return 4;
        case KernelFamily::LoG:
            return 1;
        case KernelFamily::TGD1st:
            return 3;
        case KernelFamily::TGD2nd:
            return 2;
        case KernelFamily::LoT:
            return 1;
        case KernelFamily::Plain:
            return size.h * size.w;
    }
    throw std::invalid_argument("akp_count: unknown family");
}

const char* family_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::Mean:
            return "Mean";
        case KernelFamily::Gabor:
            return "Gabor";
        case KernelFamily::LoG:
            return "LoG";
        case KernelFamily::TGD1st:
            return "TGD1st";
        case KernelFamily::TGD2nd:
            return "TGD2nd";
        case KernelFamily::LoT:
            return "LoT";
        case KernelFamily::Plain:
            return "Plain";
    }
    throw std::invalid_argument("family_name: unknown family");
}

const char* family_code(KernelFamily family) {
    switch (family) {
        case KernelFamily::Mean:
            return "M";
        case KernelFamily::Gabor:
            return "G";
        case KernelFamily::LoG:
            return "Lg";
        case KernelFamily::TGD1st:
            return "Tf";
        case KernelFamily::TGD2nd:
            return "Ts";
        case KernelFamily::LoT:
            return "Lt";
        case KernelFamily::Plain:
            return "P";
    }
    throw std::invalid_argument("family_code: unknown family");
}

std::optional<KernelFamily> family_from_code(std::string_view code) {
    for (KernelFamily f : kAllFamilies) {
        if (code == family_code(f)) return f;
    }
    return std::nullopt;
}

std::vector<std::string> akp_names(KernelFamily family) {
    switch (family) {
        case KernelFamily::Mean:
            return {};
        case KernelFamily::Gabor:
            return {"lambda", "theta", "psi", "sigma"};
        case KernelFamily::LoG:
            return {"sigma"};
        case KernelFamily::TGD1st:
            return {"theta", "gamma1", "gamma2"};
        case KernelFamily::TGD2nd:
            return {"theta", "gamma"};
        case KernelFamily::LoT:
            return {"sigma"};
        case KernelFamily::Plain:
            return {};  // positional; see akp index convention in validate_spec
    }
    throw std::invalid_argument("akp_names: unknown family");
}

std::vector<bool> akp_positivity(KernelFamily family, KernelSize size) {
    switch (family) {
        case KernelFamily::Mean:
            return {};
        case KernelFamily::Gabor:
            return {false, false, false, true};  // only sigma
        case KernelFamily::LoG:
            return {true};
        case KernelFamily::TGD1st:
            return {false, true, true};
        case KernelFamily::TGD2nd:
            return {false, true};
        case KernelFamily::LoT:
            return {true};
        case KernelFamily::Plain:
            return std::vector<bool>(static_cast<size_t>(size.h) * size.w, false);
    }
    throw std::invalid_argument("akp_positivity: unknown family");
}

void validate_spec(const KernelSpec& spec) {
    require(spec.size.h >= 1 && spec.size.w >= 1,
            std::string(family_name(spec.family)) + " kernel: size must be positive");
    const int expect = akp_count(spec.family, spec.size);
    require(static_cast<int>(spec.akps.size()) == expect,
            std::string(family_name(spec.family)) + " kernel: expected " +
                std::to_string(expect) + " AKPs, got " +
                std::to_string(spec.akps.size()));
    for (double a : spec.akps) {
        require(std::isfinite(a),
                std::string(family_name(spec.family)) + " kernel: non-finite AKP");
    }
    switch (spec.family) {
        case KernelFamily::Gabor:
            require(spec.akps[0] != 0.0, bad_akp(spec.family, "lambda", "must be nonzero"));
            require(spec.akps[3] > 0.0, bad_akp(spec.family, "sigma", "must be positive"));
            require(spec.gabor_gamma > 0.0,
                    bad_akp(spec.family, "gamma", "must be positive"));
            break;
        case KernelFamily::LoG:
            require(spec.akps[0] > 0.0, bad_akp(spec.family, "sigma", "must be positive"));
            break;
        case KernelFamily::TGD1st:
            require(spec.akps[1] > 0.0, bad_akp(spec.family, "gamma1", "must be positive"));
            require(spec.akps[2] > 0.0, bad_akp(spec.family, "gamma2", "must be positive"));
            break;
        case KernelFamily::TGD2nd:
            require(spec.akps[1] > 0.0, bad_akp(spec.family, "gamma", "must be positive"));
            break;
        case KernelFamily::LoT:
            require(spec.akps[0] > 0.0, bad_akp(spec.family, "sigma", "must be positive"));
            break;
        case KernelFamily::Mean:
        case KernelFamily::Plain:
            break;
    }
}

std::vector<double> grid_offsets(int n) {
    std::vector<double> off(static_cast<size_t>(n));
    const double center = (n + 1) / 2.0;
    for (int i = 1; i <= n; ++i) off[static_cast<size_t>(i - 1)] = i - center;
    return off;
}

Mat sample(const KernelSpec& spec) {
    validate_spec(spec);
    const int h = spec.size.h, w = spec.size.w;
    Mat out(h, w);
    const std::vector<double> xs = grid_offsets(h);  // x = row offset
    const std::vector<double> ys = grid_offsets(w);  // y = column offset

    switch (spec.family) {
        case KernelFamily::Mean: {
            const double v = 1.0 / std::sqrt(static_cast<double>(h) * w);
            for (double& e : out.v) e = v;
            break;
        }
        case KernelFamily::Gabor: {
            const double lambda = spec.akps[0], theta = spec.akps[1];
            const double psi = spec.akps[2], sigma = spec.akps[3];
            const double g2 = spec.gabor_gamma * spec.gabor_gamma;
            const double c = std::cos(theta), s = std::sin(theta);
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double x = xs[i], y = ys[j];
                    const double xp = x * c + y * s;
                    const double yp = -x * s + y * c;
                    const double env =
                        std::exp(-(xp * xp + g2 * yp * yp) / (2.0 * sigma * sigma));
                    out.at(i, j) = env * std::cos(2.0 * kPi * xp / lambda + psi);
                }
            }
            break;
        }
        case KernelFamily::LoG: {
            const double sigma = spec.akps[0];
            const double s2 = sigma * sigma;
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double r2 = xs[i] * xs[i] + ys[j] * ys[j];
                    const double u = r2 / (2.0 * s2);
                    out.at(i, j) = -1.0 / (kPi * s2 * s2) * (1.0 - u) * std::exp(-u);
                }
            }
            break;
        }
        case KernelFamily::TGD1st: {
            const double theta = spec.akps[0];
            const double g1 = spec.akps[1], g2 = spec.akps[2];
            const double c = std::cos(theta), s = std::sin(theta);
            const double dir = sign(c);
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double x = xs[i], y = ys[j];
                    const double xp = x * c + y * s;
                    const double yp = -x * s + y * c;
                    if (std::abs(xp) <= kTgdDelta) {
                        out.at(i, j) = 0.0;
                        continue;
                    }
                    out.at(i, j) = std::exp(-xp * xp / (g1 * g1) - yp * yp / (g2 * g2)) *
                                   dir * sign(xp);
                }
            }
            break;
        }
        case KernelFamily::TGD2nd: {
            const double theta = spec.akps[0], gamma = spec.akps[1];
            const double c = std::cos(theta), s = std::sin(theta);
            double total = 0.0;
            int ci = -1, cj = -1;
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double x = xs[i], y = ys[j];
                    if (x == 0.0 && y == 0.0) {
                        ci = i;
                        cj = j;
                        out.at(i, j) = 0.0;  // |x'|/r^2 has no value at the origin
                        continue;
                    }
                    const double r2 = x * x + y * y;
                    const double xp = x * c + y * s;
                    out.at(i, j) = std::exp(-r2 / (gamma * gamma)) * std::abs(xp) / r2;
                    total += out.at(i, j);
                }
            }
            // Balance the center so the kernel sums to zero (odd sizes only
            // have a center cell; even sizes are left as-is).
            if (ci >= 0) out.at(ci, cj) = -total;
            break;
        }
        case KernelFamily::LoT: {
            const double sigma = spec.akps[0];
            double total = 0.0;
            int ci = -1, cj = -1;
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double x = xs[i], y = ys[j];
                    if (x == 0.0 && y == 0.0) {
                        ci = i;
                        cj = j;
                        out.at(i, j) = 0.0;
                        continue;
                    }
                    const double r2 = x * x + y * y;
                    out.at(i, j) = std::exp(-r2 / (sigma * sigma));
                    total += out.at(i, j);
                }
            }
            if (ci >= 0) out.at(ci, cj) = -total;
            break;
        }
        case KernelFamily::Plain: {
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j)
                    out.at(i, j) = spec.akps[static_cast<size_t>(i) * w + j];
            break;
        }
    }
    return out;
}

std::vector<Mat> akp_jacobian(const KernelSpec& spec) {
    validate_spec(spec);
    const int h = spec.size.h, w = spec.size.w;
    const std::vector<double> xs = grid_offsets(h);
    const std::vector<double> ys = grid_offsets(w);
    const int n = akp_count(spec.family, spec.size);
    std::vector<Mat> jac;
    jac.reserve(static_cast<size_t>(n));
    for (int l = 0; l < n; ++l) jac.emplace_back(h, w);

    switch (spec.family) {
        case KernelFamily::Mean:
            break;  // no AKPs
        case KernelFamily::Gabor: {
            const double lambda = spec.akps[0], theta = spec.akps[1];
            const double psi = spec.akps[2], sigma = spec.akps[3];
            const double gg = spec.gabor_gamma;
            const double g2 = gg * gg;
            const double s2 = sigma * sigma;
            const double c = std::cos(theta), s = std::sin(theta);
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double x = xs[i], y = ys[j];
                    const double xp = x * c + y * s;
                    const double yp = -x * s + y * c;
                    const double env = std::exp(-(xp * xp + g2 * yp * yp) / (2.0 * s2));
                    const double arg = 2.0 * kPi * xp / lambda + psi;
                    const double ca = std::cos(arg), sa = std::sin(arg);
                    // d(xp)/d(theta) = yp, d(yp)/d(theta) = -xp
                    jac[0].at(i, j) = env * sa * 2.0 * kPi * xp / (lambda * lambda);
                    jac[1].at(i, j) =
                        env * (-xp * yp * (1.0 - g2) / s2 * ca -
                               sa * (2.0 * kPi / lambda) * yp);
                    jac[2].at(i, j) = -env * sa;
                    jac[3].at(i, j) =
                        env * ca * (xp * xp + g2 * yp * yp) / (s2 * sigma);
                }
            }
            break;
        }
        case KernelFamily::LoG: {
            const double sigma = spec.akps[0];
            const double s2 = sigma * sigma;
            const double s5 = s2 * s2 * sigma;
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double r2 = xs[i] * xs[i] + ys[j] * ys[j];
                    const double u = r2 / (2.0 * s2);
                    jac[0].at(i, j) =
                        std::exp(-u) / (kPi * s5) * (2.0 * u * u - 8.0 * u + 4.0);
                }
            }
            break;
        }
        case KernelFamily::TGD1st: {
            const double theta = spec.akps[0];
            const double g1 = spec.akps[1], g2 = spec.akps[2];
            const double c = std::cos(theta), s = std::sin(theta);
            const double dir = sign(c);
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double x = xs[i], y = ys[j];
                    const double xp = x * c + y * s;
                    const double yp = -x * s + y * c;
                    if (std::abs(xp) <= kTgdDelta) continue;  // kernel is 0 here
                    const double env =
                        std::exp(-xp * xp / (g1 * g1) - yp * yp / (g2 * g2));
                    const double sgn = dir * sign(xp);
                    // sign factors are locally constant; only the envelope moves
                    jac[0].at(i, j) = env * sgn * 2.0 * xp * yp *
                                      (1.0 / (g2 * g2) - 1.0 / (g1 * g1));
                    jac[1].at(i, j) = env * sgn * 2.0 * xp * xp / (g1 * g1 * g1);
                    jac[2].at(i, j) = env * sgn * 2.0 * yp * yp / (g2 * g2 * g2);
                }
            }
            break;
        }
        case KernelFamily::TGD2nd: {
            const double theta = spec.akps[0], gamma = spec.akps[1];
            const double c = std::cos(theta), s = std::sin(theta);
            const double g3 = gamma * gamma * gamma;
            int ci = -1, cj = -1;
            double tot0 = 0.0, tot1 = 0.0;
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double x = xs[i], y = ys[j];
                    if (x == 0.0 && y == 0.0) {
                        ci = i;
                        cj = j;
                        continue;
                    }
                    const double r2 = x * x + y * y;
                    const double xp = x * c + y * s;
                    const double yp = -x * s + y * c;
                    const double env = std::exp(-r2 / (gamma * gamma));
                    jac[0].at(i, j) = env * sign(xp) * yp / r2;
                    jac[1].at(i, j) = env * 2.0 * std::abs(xp) / g3;
                    tot0 += jac[0].at(i, j);
                    tot1 += jac[1].at(i, j);
                }
            }
            // The center entry is minus the sum of the others, so its
            // derivative is minus the sum of their derivatives.
            if (ci >= 0) {
                jac[0].at(ci, cj) = -tot0;
                jac[1].at(ci, cj) = -tot1;
            }
            break;
        }
        case KernelFamily::LoT: {
            const double sigma = spec.akps[0];
            const double s3 = sigma * sigma * sigma;
            int ci = -1, cj = -1;
            double tot = 0.0;
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double x = xs[i], y = ys[j];
                    if (x == 0.0 && y == 0.0) {
                        ci = i;
                        cj = j;
                        continue;
                    }
                    const double r2 = x * x + y * y;
                    jac[0].at(i, j) = std::exp(-r2 / (sigma * sigma)) * 2.0 * r2 / s3;
                    tot += jac[0].at(i, j);
                }
            }
            if (ci >= 0) jac[0].at(ci, cj) = -tot;
            break;
        }
        case KernelFamily::Plain: {
            for (int l = 0; l < n; ++l) jac[static_cast<size_t>(l)].v[static_cast<size_t>(l)] = 1.0;
            break;
        }
    }
    return jac;
}

KernelSpec default_init(KernelFamily family, KernelSize size, Rng& rng, int fan_in) {
    if (size.h < 1 || size.w < 1)
        throw std::invalid_argument("default_init: size must be positive");
    const double m = std::min(size.h, size.w);
    const double s = m / 4.0;
    KernelSpec spec;
    spec.family = family;
    spec.size = size;
    switch (family) {
        case KernelFamily::Mean:
            break;
        case KernelFamily::Gabor:
            spec.akps = {rng.uniform(2.0, std::max(2.0, m)),
                         rng.uniform(0.0, kPi),
                         rng.uniform(0.0, 2.0 * kPi),
                         rng.uniform(0.5 * s, 2.0 * s)};
            break;
        case KernelFamily::LoG:
        case KernelFamily::LoT:
            spec.akps = {rng.uniform(0.5 * s, 2.0 * s)};
            break;
        case KernelFamily::TGD1st:
            spec.akps = {rng.uniform(0.0, kPi), rng.uniform(0.5 * s, 2.0 * s),
                         rng.uniform(0.5 * s, 2.0 * s)};
            break;
        case KernelFamily::TGD2nd:
            spec.akps = {rng.uniform(0.0, kPi), rng.uniform(0.5 * s, 2.0 * s)};
            break;
        case KernelFamily::Plain: {
            const int n = size.h * size.w;
            const int fi = fan_in > 0 ? fan_in : n;
            const double bound = 1.0 / std::sqrt(static_cast<double>(fi));
            spec.akps.resize(static_cast<size_t>(n));
            for (double& a : spec.akps) a = rng.uniform(-bound, bound);
            break;
        }
    }
    validate_spec(spec);
    return spec;
}

KernelSpec default_init(KernelFamily family, KernelSize size, uint64_t seed,
                        int fan_in) {
    Rng rng(seed);
    return default_init(family, size, rng, fan_in);
}

}  // namespace acl
