#pragma once

#include <utility>
#include <vector>

#include "acl/arrangement.hpp"
#include "acl/kernels.hpp"
#include "acl/tensor.hpp"

namespace acl {

struct ConvHyper {
    int stride = 1;
    int padding = 0;
    int dilation = 1;
};

// A convolutional layer whose Ci x Co kernel bank is a mosaic of analytic
// and plain kernels laid out in arrangement order. Kernel k serves output
// channel k / Ci and input channel k % Ci, so consecutive arrangement
// blocks fill the input-channel slots of each output channel in turn.
struct AclLayer {
    Arrangement arrangement;
    std::vector<KernelSpec> specs;  // length Ci*Co, arrangement order
    std::vector<double> bias;       // length Co, starts at zero
    ConvHyper hyper;
};

// Per-layer gradient bundle; shapes mirror the layer exactly. Kernels
// without AKPs (Mean) carry empty gradient vectors.
struct AclGradients {
    std::vector<std::vector<double>> akp_grads;
    std::vector<double> bias_grads;
};

// Flattens the arrangement into per-kernel family tags, in order.
std::vector<KernelFamily> flatten_families(const Arrangement& a);

// Builds a layer with default-initialized AKPs. Plain kernels use fan_in =
// Ci*h*w. Throws on invalid arrangement or hyperparameters.
AclLayer make_layer(const Arrangement& a, ConvHyper hyper, Rng& rng);

// Consistency check: spec families match the arrangement, sizes agree,
// bias length is Co. Throws std::invalid_argument on violation.
void validate(const AclLayer& layer);

// Samples every kernel spec; entry k of the result is the weight matrix of
// output channel k / Ci, input channel k % Ci.
std::vector<Mat> materialize(const AclLayer& layer);

// Output height for one spatial axis.
int conv_out_dim(int in, int kernel, ConvHyper hyper);

// Cross-correlation with zero padding:
//   out[m][q] = bias[q] + sum_p corr(in[m][p], W[q*Ci+p])
// The weight bank is re-sampled from the AKPs on every call.
Tensor4 forward(const AclLayer& layer, const Tensor4& input);

// Same, reusing an already materialized bank (for callers that need the
// bank anyway, e.g. the backward pass driver).
Tensor4 forward_with_bank(const AclLayer& layer, const std::vector<Mat>& bank,
                          const Tensor4& input);

// Backpropagation through the layer: the per-element weight gradient is
// contracted with each kernel's AKP Jacobian to yield AKP gradients, the
// data gradient flows back by transposed correlation, and bias gradients
// are the per-channel sums of grad_output.
std::pair<AclGradients, Tensor4> backward(const AclLayer& layer,
                                          const Tensor4& input,
                                          const Tensor4& grad_output);

// One SGD step: akp -= eta * grad for every AKP and bias element, then
// scale-like AKPs (sigma, gamma, gamma1, gamma2) are clamped to >= 1e-3.
void apply_update(AclLayer& layer, const AclGradients& grads, double eta);

}  // namespace acl
