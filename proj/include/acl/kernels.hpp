#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acl/matrix.hpp"
#include "acl/rng.hpp"

namespace acl {

class Rng;

// Analytic kernel families. Every family except Plain generates its weight
// matrix from a closed-form function of a few analytic kernel parameters
// (AKPs); Plain is the classical per-element kernel and Mean is a fixed
// constant kernel with no parameters at all.
enum class KernelFamily { Mean, Gabor, LoG, TGD1st, TGD2nd, LoT, Plain };

inline constexpr KernelFamily kAllFamilies[] = {
    KernelFamily::Mean,   KernelFamily::Gabor,  KernelFamily::LoG,
    KernelFamily::TGD1st, KernelFamily::TGD2nd, KernelFamily::LoT,
    KernelFamily::Plain,
};

struct KernelSize {
    int h = 0;
    int w = 0;
    bool operator==(const KernelSize&) const = default;
};

// Number of learnable parameters per kernel of the given family and size.
int akp_count(KernelFamily family, KernelSize size);

// Human-readable name ("Gabor") and pattern code ("G").
const char* family_name(KernelFamily family);
const char* family_code(KernelFamily family);
std::optional<KernelFamily> family_from_code(std::string_view code);

// Parameter names in AKP-vector order, e.g. Gabor -> lambda, theta, psi, sigma.
std::vector<std::string> akp_names(KernelFamily family);

// Half-width of the dead zone separating the positive and negative lobes of
// the first-order difference kernel. Fixed, never trained.
inline constexpr double kTgdDelta = 1e-4;

// Lower bound enforced on scale-like AKPs (sigma, gamma, gamma1, gamma2)
// after gradient updates and inside the fitter.
inline constexpr double kAkpFloor = 1e-3;

// Per-AKP flag: true where the parameter must stay positive.
std::vector<bool> akp_positivity(KernelFamily family, KernelSize size);

// One analytic kernel: family tag + AKP vector + sampling size.
//
// AKP layouts:
//   Mean    -- (none)
//   Gabor   -- lambda, theta, psi, sigma     (aspect ratio fixed, see below)
//   LoG     -- sigma
//   TGD1st  -- theta, gamma1, gamma2
//   TGD2nd  -- theta, gamma
//   LoT     -- sigma
//   Plain   -- h*w weights, row-major
struct KernelSpec {
    KernelFamily family = KernelFamily::Plain;
    KernelSize size;
    std::vector<double> akps;

    // Gabor aspect ratio. Fixed at construction and excluded from the AKP
    // vector, so it never receives gradient updates. Non-unit values are
    // only used when modeling externally supplied kernels.
    double gabor_gamma = 1.0;
};

// Throws std::domain_error naming the offending AKP when the spec violates
// its family's domain (sigma <= 0, lambda == 0, wrong AKP count, ...).
void validate_spec(const KernelSpec& spec);

// Sampling grid offsets for one axis of length n: offset[i] = i+1 - (n+1)/2,
// symmetric about zero (integers for odd n, half-integers for even n).
std::vector<double> grid_offsets(int n);

// Samples the kernel function on the centered h x w grid.
Mat sample(const KernelSpec& spec);

// d(weight matrix)/d(AKP l) for every l, each evaluated on the same grid as
// sample(). Discontinuous factors (sign, lobe indicator, |.| at its kink)
// contribute zero. Mean has no AKPs and yields an empty Jacobian.
std::vector<Mat> akp_jacobian(const KernelSpec& spec);

// Random spec with AKPs drawn from ranges scaled to the kernel support:
//   theta ~ U[0, pi)          psi ~ U[0, 2*pi)      lambda ~ U[2, min(h,w)]
//   sigma, gamma, gamma1, gamma2 ~ U[s/2, 2s], s = min(h,w)/4
//   Plain weights ~ U[-1/sqrt(fan_in), +1/sqrt(fan_in)]
// fan_in defaults to h*w; layers pass in_channels*h*w.
KernelSpec default_init(KernelFamily family, KernelSize size, Rng& rng,
                        int fan_in = 0);
KernelSpec default_init(KernelFamily family, KernelSize size, uint64_t seed,
                        int fan_in = 0);

}  // namespace acl
