#pragma once

#include <cstddef>
#include <vector>

namespace acl {

// Dense row-major h x w matrix of doubles. The currency for single kernel
// weight planes and their per-parameter derivative planes.
struct Mat {
    int h = 0;
    int w = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0.0) {}

    double& at(int i, int j) { return v[static_cast<size_t>(i) * w + j]; }
    double at(int i, int j) const { return v[static_cast<size_t>(i) * w + j]; }

    size_t size() const { return v.size(); }

    double sum() const {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
};

}  // namespace acl
