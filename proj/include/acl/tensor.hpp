#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace acl {

// Dense 4-D array in (batch, channel, height, width) order, row-major.
struct Tensor4 {
    int b = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor4() = default;
    Tensor4(int b_, int c_, int h_, int w_)
        : b(b_), c(c_), h(h_), w(w_),
          v(static_cast<size_t>(b_) * c_ * h_ * w_, 0.0) {
        if (b_ < 0 || c_ < 0 || h_ < 0 || w_ < 0)
            throw std::invalid_argument("Tensor4: negative dimension");
    }

    size_t size() const { return v.size(); }

    size_t index(int ib, int ic, int ih, int iw) const {
        return ((static_cast<size_t>(ib) * c + ic) * h + ih) * w + iw;
    }
    double& at(int ib, int ic, int ih, int iw) { return v[index(ib, ic, ih, iw)]; }
    double at(int ib, int ic, int ih, int iw) const {
        return v[index(ib, ic, ih, iw)];
    }

    // Pointer to the start of one (batch, channel) plane.
    double* plane(int ib, int ic) { return v.data() + index(ib, ic, 0, 0); }
    const double* plane(int ib, int ic) const {
        return v.data() + index(ib, ic, 0, 0);
    }

    bool same_shape(const Tensor4& o) const {
        return b == o.b && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const {
        return "(" + std::to_string(b) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

}  // namespace acl
