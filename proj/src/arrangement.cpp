#include "acl/arrangement.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace acl {
namespace {

constexpr double kRatioSumTol = 0.01;   // paper-style rounded ratios sum to 0.9999
constexpr double kFloatSlack = 1e-12;   // parse noise on the "sum <= 1" side

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("pattern: " + msg);
}

std::string block_label(int index, const std::string& text) {
    return "block " + std::to_string(index + 1) + " ('" + text + "')";
}

// Cursor-based scanner over the pattern text.
struct Scanner {
    const std::string& s;
    size_t pos = 0;

    bool done() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }

    bool consume(char c) {
        if (done() || s[pos] != c) return false;
        ++pos;
        return true;
    }

    int read_int(const char* what) {
        size_t start = pos;
        while (!done() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos == start) fail(std::string("expected ") + what + " at position " +
                               std::to_string(start + 1));
        return std::stoi(s.substr(start, pos - start));
    }

    // Reads digits with at most one '.'; reports whether a '.' was present.
    std::string read_number(bool& has_dot) {
        size_t start = pos;
        has_dot = false;
        while (!done()) {
            char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                ++pos;
            } else if (c == '.' && !has_dot) {
                has_dot = true;
                ++pos;
            } else {
                break;
            }
        }
        return s.substr(start, pos - start);
    }

    // Two-letter codes first so "Lg" does not stop at "L".
    KernelFamily read_code() {
        static const char* kCodes[] = {"Lg", "Lt", "Tf", "Ts", "G", "M", "P"};
        for (const char* code : kCodes) {
            size_t n = std::char_traits<char>::length(code);
            if (s.compare(pos, n, code) == 0) {
                pos += n;
                return *family_from_code(code);
            }
        }
        fail("unknown family code at '" + s.substr(pos, 4) + "'");
    }
};

}  // namespace

void validate(const Arrangement& a) {
    if (a.in_channels < 1 || a.out_channels < 1)
        throw std::invalid_argument("arrangement: channels must be positive");
    if (a.kernel_size.h < 1 || a.kernel_size.w < 1)
        throw std::invalid_argument("arrangement: kernel size must be positive");
    if (a.blocks.empty())
        throw std::invalid_argument("arrangement: needs at least one block");
    long long sum = 0;
    for (size_t i = 0; i < a.blocks.size(); ++i) {
        if (a.blocks[i].count < 1)
            throw std::invalid_argument(
                "arrangement: block " + std::to_string(i + 1) + " (" +
                family_code(a.blocks[i].family) + ") has non-positive count");
        sum += a.blocks[i].count;
    }
    const long long want =
        static_cast<long long>(a.in_channels) * a.out_channels;
    if (sum != want)
        throw std::invalid_argument("arrangement: counts sum " +
                                    std::to_string(sum) + ", expected Ci*Co = " +
                                    std::to_string(want));
}

void validate(const RatioArrangement& r) {
    if (r.blocks.empty())
        throw std::invalid_argument("arrangement: needs at least one block");
    double sum = 0.0;
    for (size_t i = 0; i < r.blocks.size(); ++i) {
        const double v = r.blocks[i].ratio;
        if (!(v > 0.0) || v > 1.0)
            throw std::invalid_argument(
                "arrangement: block " + std::to_string(i + 1) + " (" +
                family_code(r.blocks[i].family) + ") ratio " + std::to_string(v) +
                " outside (0, 1]");
        sum += v;
    }
    if (sum < 1.0 - kRatioSumTol || sum > 1.0 + kFloatSlack)
        throw std::invalid_argument("arrangement: ratios sum " +
                                    std::to_string(sum) +
                                    ", expected within 0.01 of 1");
}

std::variant<Arrangement, RatioArrangement> parse_pattern(
    const std::string& text, KernelSize context_size) {
    Scanner sc{text};
    if (text.empty()) fail("empty pattern");

    bool has_prefix = false;
    int ci = 0, co = 0;
    if (sc.consume('(')) {
        ci = sc.read_int("input channel count");
        if (!sc.consume('x')) fail("expected 'x' in channel prefix");
        co = sc.read_int("output channel count");
        if (!sc.consume(')')) fail("expected ')' closing channel prefix");
        if (ci < 1 || co < 1) fail("channel prefix must be positive");
        has_prefix = true;
    }

    std::vector<CountBlock> counts;
    std::vector<RatioBlock> ratios;
    int index = 0;
    while (!sc.done()) {
        size_t block_start = sc.pos;
        KernelFamily fam = sc.read_code();
        bool has_dot = false;
        std::string num = sc.read_number(has_dot);
        std::string btxt = text.substr(block_start, sc.pos - block_start);
        if (num.empty() || num == ".")
            fail(block_label(index, btxt) + ": missing number");
        if (has_dot) {
            if (!counts.empty())
                fail(block_label(index, btxt) +
                     ": ratio block in a count pattern (forms may not be mixed)");
            const double v = std::stod(num);
            if (!(v > 0.0) || v > 1.0)
                fail(block_label(index, btxt) + ": ratio " + num +
                     " outside (0, 1]");
            ratios.push_back({fam, v});
        } else {
            if (!ratios.empty())
                fail(block_label(index, btxt) +
                     ": count block in a ratio pattern (forms may not be mixed)");
            const int v = std::stoi(num);
            if (v < 1) fail(block_label(index, btxt) + ": count must be positive");
            counts.push_back({fam, v});
        }
        ++index;
    }
    if (counts.empty() && ratios.empty()) fail("no blocks");

    if (!counts.empty()) {
        if (!has_prefix) fail("count form requires the (CixCo) prefix");
        Arrangement a{ci, co, context_size, std::move(counts)};
        validate(a);  // reports count-sum violations
        return a;
    }

    RatioArrangement r{std::move(ratios)};
    validate(r);
    if (has_prefix) return bind_ratios(r, ci, co, context_size);
    return r;
}

Arrangement bind_ratios(const RatioArrangement& r, int in_channels,
                        int out_channels, KernelSize kernel_size) {
    validate(r);
    if (in_channels < 1 || out_channels < 1)
        throw std::invalid_argument("bind_ratios: channels must be positive");
    const long long total =
        static_cast<long long>(in_channels) * out_channels;
    const size_t n = r.blocks.size();

    std::vector<long long> counts(n);
    std::vector<double> remainders(n);
    long long assigned = 0;
    for (size_t i = 0; i < n; ++i) {
        const double exact = r.blocks[i].ratio * static_cast<double>(total);
        counts[i] = static_cast<long long>(std::floor(exact));
        remainders[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }

    // Hand the leftover units to the largest remainders, earlier block on
    // ties; wraps around in the unusual case of more leftovers than blocks.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return remainders[a] > remainders[b];
    });
    for (long long t = 0; t < total - assigned; ++t)
        ++counts[order[static_cast<size_t>(t) % n]];

    Arrangement a;
    a.in_channels = in_channels;
    a.out_channels = out_channels;
    a.kernel_size = kernel_size;
    a.blocks.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (counts[i] == 0)
            throw std::invalid_argument(
                "bind_ratios: block " + std::to_string(i + 1) + " (" +
                family_code(r.blocks[i].family) + ", ratio " +
                std::to_string(r.blocks[i].ratio) + ") binds to zero kernels");
        a.blocks.push_back({r.blocks[i].family, static_cast<int>(counts[i])});
    }
    validate(a);
    return a;
}

double compact_factor(const Arrangement& a) {
    validate(a);
    double learnable = 0.0;
    for (const CountBlock& b : a.blocks)
        learnable += static_cast<double>(b.count) *
                     akp_count(b.family, a.kernel_size);
    const double dense = static_cast<double>(a.in_channels) * a.out_channels *
                         a.kernel_size.h * a.kernel_size.w;
    return 1.0 - learnable / dense;
}

std::string serialize(const Arrangement& a) {
    validate(a);
    std::string out = "(" + std::to_string(a.in_channels) + "x" +
                      std::to_string(a.out_channels) + ")";
    for (const CountBlock& b : a.blocks)
        out += std::string(family_code(b.family)) + std::to_string(b.count);
    return out;
}

}  // namespace acl
