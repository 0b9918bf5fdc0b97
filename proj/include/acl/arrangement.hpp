#pragma once

#include <string>
#include <variant>
#include <vector>

#include "acl/kernels.hpp"

namespace acl {

// One run of identical-family kernels inside an arrangement.
struct CountBlock {
    KernelFamily family = KernelFamily::Plain;
    int count = 0;
};

// Fully bound kernel arrangement: which families fill the Ci x Co kernel
// bank, in what order, and at what kernel size. Block order is significant
// and preserved exactly.
struct Arrangement {
    int in_channels = 0;
    int out_channels = 0;
    KernelSize kernel_size;
    std::vector<CountBlock> blocks;
};

struct RatioBlock {
    KernelFamily family = KernelFamily::Plain;
    double ratio = 0.0;
};

// Channel-agnostic arrangement: families with fractional shares instead of
// absolute counts. Bound to concrete counts once Ci and Co are known.
struct RatioArrangement {
    std::vector<RatioBlock> blocks;
};

// Throws std::invalid_argument when counts are non-positive, the sum is not
// Ci*Co, or channel/size fields are non-positive.
void validate(const Arrangement& a);
void validate(const RatioArrangement& r);

// Parses the textual pattern grammar:
//
//   pattern  := [ "(" Ci "x" Co ")" ] block+
//   block    := code number
//   code     := G | Lg | Lt | Tf | Ts | M | P
//   number   := integer            (count form; prefix required)
//             | decimal with "."   (ratio form; each in (0,1], sum in [0.99, 1])
//
// Count and ratio blocks may not be mixed. A ratio pattern carrying the
// channel prefix is bound immediately (see bind_ratios) and comes back as an
// Arrangement; `context_size` supplies the kernel size in that case and for
// count patterns. Errors name the offending block.
std::variant<Arrangement, RatioArrangement> parse_pattern(
    const std::string& text, KernelSize context_size = {7, 7});

// Converts shares to counts summing exactly to Ci*Co: each block gets
// floor(ratio*Ci*Co), then the leftover units go to the blocks with the
// largest remainders (ties broken toward the earlier block). A block whose
// count lands on zero is an error, since a declared family must appear.
Arrangement bind_ratios(const RatioArrangement& r, int in_channels,
                        int out_channels, KernelSize kernel_size);

// Fraction of the dense parameter budget Ci*Co*h*w saved by the analytic
// families: 1 - (sum over blocks of count * akps-per-kernel) / (Ci*Co*h*w).
// All-Plain gives exactly 0, all-Mean exactly 1.
double compact_factor(const Arrangement& a);

// Canonical count-form text, e.g. "(3x64)G30Lg15Lt15Tf36P96". Parsing the
// result reconstructs the arrangement exactly.
std::string serialize(const Arrangement& a);

}  // namespace acl
