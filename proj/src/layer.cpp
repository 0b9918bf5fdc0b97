#include "acl/layer.hpp"

#include <algorithm>
#include <stdexcept>

namespace acl {
namespace {

int floor_div(int a, int b) {
    int q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

int ceil_div(int a, int b) { return -floor_div(-a, b); }

void check_hyper(const ConvHyper& h) {
    if (h.stride < 1 || h.padding < 0 || h.dilation < 1)
        throw std::invalid_argument(
            "layer: stride/dilation must be >= 1 and padding >= 0");
}

// Valid output-index range [lo, hi] along one axis for kernel tap kt, such
// that the corresponding input index stays inside [0, in).
void tap_range(int in, int out, int kt, ConvHyper hy, int& lo, int& hi) {
    lo = std::max(0, ceil_div(hy.padding - kt * hy.dilation, hy.stride));
    hi = std::min(out - 1,
                  floor_div(in - 1 + hy.padding - kt * hy.dilation, hy.stride));
}

}  // namespace

std::vector<KernelFamily> flatten_families(const Arrangement& a) {
    std::vector<KernelFamily> fams;
    fams.reserve(static_cast<size_t>(a.in_channels) * a.out_channels);
    for (const CountBlock& b : a.blocks)
        fams.insert(fams.end(), static_cast<size_t>(b.count), b.family);
    return fams;
}

AclLayer make_layer(const Arrangement& a, ConvHyper hyper, Rng& rng) {
    validate(a);
    check_hyper(hyper);
    AclLayer layer;
    layer.arrangement = a;
    layer.hyper = hyper;
    layer.bias.assign(static_cast<size_t>(a.out_channels), 0.0);
    const int fan_in = a.in_channels * a.kernel_size.h * a.kernel_size.w;
    for (KernelFamily f : flatten_families(a))
        layer.specs.push_back(default_init(f, a.kernel_size, rng, fan_in));
    return layer;
}

void validate(const AclLayer& layer) {
    validate(layer.arrangement);
    check_hyper(layer.hyper);
    const Arrangement& a = layer.arrangement;
    const std::vector<KernelFamily> fams = flatten_families(a);
    if (layer.specs.size() != fams.size())
        throw std::invalid_argument("layer: spec count does not match arrangement");
    for (size_t k = 0; k < fams.size(); ++k) {
        if (layer.specs[k].family != fams[k])
            throw std::invalid_argument("layer: kernel " + std::to_string(k) +
                                        " family does not match arrangement order");
        if (!(layer.specs[k].size == a.kernel_size))
            throw std::invalid_argument("layer: kernel " + std::to_string(k) +
                                        " size does not match arrangement");
        validate_spec(layer.specs[k]);
    }
    if (static_cast<int>(layer.bias.size()) != a.out_channels)
        throw std::invalid_argument("layer: bias length must equal out_channels");
}

std::vector<Mat> materialize(const AclLayer& layer) {
    std::vector<Mat> bank;
    bank.reserve(layer.specs.size());
    for (const KernelSpec& s : layer.specs) bank.push_back(sample(s));
    return bank;
}

int conv_out_dim(int in, int kernel, ConvHyper hyper) {
    return (in + 2 * hyper.padding - hyper.dilation * (kernel - 1) - 1) /
               hyper.stride +
           1;
}

Tensor4 forward(const AclLayer& layer, const Tensor4& input) {
    return forward_with_bank(layer, materialize(layer), input);
}

Tensor4 forward_with_bank(const AclLayer& layer, const std::vector<Mat>& bank,
                          const Tensor4& input) {
    validate(layer);
    const Arrangement& a = layer.arrangement;
    if (input.c != a.in_channels)
        throw std::invalid_argument("layer forward: input has " +
                                    std::to_string(input.c) + " channels, layer expects " +
                                    std::to_string(a.in_channels));
    const int kh = a.kernel_size.h, kw = a.kernel_size.w;
    const ConvHyper hy = layer.hyper;
    const int oh = conv_out_dim(input.h, kh, hy);
    const int ow = conv_out_dim(input.w, kw, hy);
    if (oh < 1 || ow < 1)
        throw std::invalid_argument("layer forward: input " + input.shape_str() +
                                    " too small for kernel/stride/padding");

    Tensor4 out(input.b, a.out_channels, oh, ow);
    for (int m = 0; m < input.b; ++m) {
        for (int q = 0; q < a.out_channels; ++q) {
            double* op = out.plane(m, q);
            std::fill(op, op + static_cast<size_t>(oh) * ow, layer.bias[static_cast<size_t>(q)]);
            for (int p = 0; p < a.in_channels; ++p) {
                const Mat& ker = bank[static_cast<size_t>(q) * a.in_channels + p];
                const double* ip = input.plane(m, p);
                for (int ki = 0; ki < kh; ++ki) {
                    int rlo, rhi;
                    tap_range(input.h, oh, ki, hy, rlo, rhi);
                    for (int kj = 0; kj < kw; ++kj) {
                        int clo, chi;
                        tap_range(input.w, ow, kj, hy, clo, chi);
                        const double wk = ker.at(ki, kj);
                        if (wk == 0.0) continue;
                        for (int r = rlo; r <= rhi; ++r) {
                            const double* irow =
                                ip + static_cast<size_t>(r * hy.stride - hy.padding +
                                                         ki * hy.dilation) *
                                         input.w;
                            double* orow = op + static_cast<size_t>(r) * ow;
                            const int base = -hy.padding + kj * hy.dilation;
                            for (int c = clo; c <= chi; ++c)
                                orow[c] += wk * irow[c * hy.stride + base];
                        }
                    }
                }
            }
        }
    }
    return out;
}

std::pair<AclGradients, Tensor4> backward(const AclLayer& layer,
                                          const Tensor4& input,
                                          const Tensor4& grad_output) {
    validate(layer);
    const Arrangement& a = layer.arrangement;
    if (input.c != a.in_channels)
        throw std::invalid_argument("layer backward: input channels mismatch");
    const int kh = a.kernel_size.h, kw = a.kernel_size.w;
    const ConvHyper hy = layer.hyper;
    const int oh = conv_out_dim(input.h, kh, hy);
    const int ow = conv_out_dim(input.w, kw, hy);
    if (grad_output.b != input.b || grad_output.c != a.out_channels ||
        grad_output.h != oh || grad_output.w != ow)
        throw std::invalid_argument("layer backward: grad_output shape " +
                                    grad_output.shape_str() +
                                    " does not match forward output");

    const std::vector<Mat> bank = materialize(layer);
    std::vector<Mat> grad_w(bank.size(), Mat(kh, kw));
    AclGradients grads;
    grads.bias_grads.assign(static_cast<size_t>(a.out_channels), 0.0);
    Tensor4 grad_in(input.b, input.c, input.h, input.w);

    for (int m = 0; m < input.b; ++m) {
        for (int q = 0; q < a.out_channels; ++q) {
            const double* gp = grad_output.plane(m, q);
            double bsum = 0.0;
            for (size_t i = 0; i < static_cast<size_t>(oh) * ow; ++i) bsum += gp[i];
            grads.bias_grads[static_cast<size_t>(q)] += bsum;

            for (int p = 0; p < a.in_channels; ++p) {
                const size_t k = static_cast<size_t>(q) * a.in_channels + p;
                const Mat& ker = bank[k];
                Mat& gw = grad_w[k];
                const double* ip = input.plane(m, p);
                double* gip = grad_in.plane(m, p);
                for (int ki = 0; ki < kh; ++ki) {
                    int rlo, rhi;
                    tap_range(input.h, oh, ki, hy, rlo, rhi);
                    for (int kj = 0; kj < kw; ++kj) {
                        int clo, chi;
                        tap_range(input.w, ow, kj, hy, clo, chi);
                        const int base = -hy.padding + kj * hy.dilation;
                        const double wk = ker.at(ki, kj);
                        double acc = 0.0;
                        for (int r = rlo; r <= rhi; ++r) {
                            const size_t irow_off =
                                static_cast<size_t>(r * hy.stride - hy.padding +
                                                    ki * hy.dilation) *
                                input.w;
                            const double* irow = ip + irow_off;
                            double* girow = gip + irow_off;
                            const double* grow = gp + static_cast<size_t>(r) * ow;
                            for (int c = clo; c <= chi; ++c) {
                                const int ic = c * hy.stride + base;
                                acc += grow[c] * irow[ic];
                                girow[ic] += wk * grow[c];
                            }
                        }
                        gw.at(ki, kj) += acc;
                    }
                }
            }
        }
    }

    // Contract the per-element weight gradients with each kernel's AKP
    // Jacobian. Plain kernels shortcut to the flattened weight gradient.
    grads.akp_grads.resize(layer.specs.size());
    for (size_t k = 0; k < layer.specs.size(); ++k) {
        const KernelSpec& spec = layer.specs[k];
        switch (spec.family) {
            case KernelFamily::Mean:
                break;  // nothing to learn
            case KernelFamily::Plain:
                grads.akp_grads[k] = grad_w[k].v;
                break;
            default: {
                const std::vector<Mat> jac = akp_jacobian(spec);
                std::vector<double>& g = grads.akp_grads[k];
                g.assign(jac.size(), 0.0);
                for (size_t l = 0; l < jac.size(); ++l) {
                    double acc = 0.0;
                    for (size_t i = 0; i < grad_w[k].v.size(); ++i)
                        acc += grad_w[k].v[i] * jac[l].v[i];
                    g[l] = acc;
                }
            }
        }
    }
    return {std::move(grads), std::move(grad_in)};
}

void apply_update(AclLayer& layer, const AclGradients& grads, double eta) {
    if (eta < 0.0) throw std::invalid_argument("apply_update: eta must be >= 0");
    if (grads.akp_grads.size() != layer.specs.size() ||
        grads.bias_grads.size() != layer.bias.size())
        throw std::invalid_argument("apply_update: gradient shapes mismatch");
    for (size_t k = 0; k < layer.specs.size(); ++k) {
        KernelSpec& spec = layer.specs[k];
        const std::vector<double>& g = grads.akp_grads[k];
        if (g.size() != spec.akps.size())
            throw std::invalid_argument("apply_update: AKP gradient length mismatch");
        const std::vector<bool> pos = akp_positivity(spec.family, spec.size);
        for (size_t l = 0; l < g.size(); ++l) {
            spec.akps[l] -= eta * g[l];
            if (pos[l] && spec.akps[l] < kAkpFloor) spec.akps[l] = kAkpFloor;
        }
    }
    for (size_t q = 0; q < layer.bias.size(); ++q)
        layer.bias[q] -= eta * grads.bias_grads[q];
}

}  // namespace acl
