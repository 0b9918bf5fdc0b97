#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "acl/layer.hpp"
#include "acl/parallel.hpp"
#include "acl/tensor.hpp"

namespace acl {

// ---------------------------------------------------------------- network

struct MaxPoolNode {
    int k = 2;
    int s = 2;
};
struct ReluNode {};
struct FlattenNode {};

struct LinearNode {
    int in = 0, out = 0;
    std::vector<double> w;  // out x in, row-major
    std::vector<double> b;  // out
};

using Node = std::variant<AclLayer, MaxPoolNode, ReluNode, FlattenNode, LinearNode>;

struct Network {
    std::vector<Node> nodes;
};

// Weights ~ U[-1/sqrt(in), 1/sqrt(in)], bias zero.
LinearNode make_linear(int in, int out, Rng& rng);

// Structural checks: positive dims, exactly one flatten and it precedes the
// first linear node. Shape composition itself is verified during forward,
// which names the offending node on mismatch.
void validate(const Network& net);

// Activations recorded by the forward pass for reuse in backward.
struct Tape {
    std::vector<Tensor4> inputs;               // input seen by each node
    std::vector<std::vector<size_t>> argmax;   // per node; used by maxpool
    Tensor4 output;
};

// Pure forward. Errors name the failing node, e.g. "node 3 (linear): ...".
Tensor4 net_forward(const Network& net, const Tensor4& input);
Tensor4 net_forward(const Network& net, const Tensor4& input, Tape& tape);

// Parameter gradients, one slot per node (empty for stateless nodes).
struct NodeGrads {
    AclGradients acl;
    std::vector<double> w, b;
};
struct NetGrads {
    std::vector<NodeGrads> nodes;
};

NetGrads zero_grads(const Network& net);
void accumulate(NetGrads& into, const NetGrads& part);

// Backpropagates grad wrt the network output, accumulating parameter
// gradients into `grads`; returns grad wrt the network input.
Tensor4 net_backward(const Network& net, const Tape& tape,
                     const Tensor4& grad_output, NetGrads& grads);

// phi <- phi - eta * grad across every parameterized node.
void net_update(Network& net, const NetGrads& grads, double eta);

// ------------------------------------------------------------------ loss

// Single-sample softmax cross-entropy, stabilized by max subtraction.
// Returns (loss, d loss / d logits).
std::pair<double, std::vector<double>> softmax_ce(
    const std::vector<double>& logits, int label);

// ----------------------------------------------------------------- data

// Single-channel image classification set (images flattened row-major).
struct Dataset {
    int rows = 0, cols = 0;
    std::vector<double> pixels;   // count * rows * cols
    std::vector<uint8_t> labels;  // count

    int count() const { return static_cast<int>(labels.size()); }
};

// [n,1,rows,cols] tensor for the given sample indices.
Tensor4 make_batch(const Dataset& data, const std::vector<int>& indices);

// Keeps the first n samples.
Dataset take_prefix(const Dataset& data, int n);

// ------------------------------------------------------------- training

struct TrainConfig {
    double lr = 0.1;
    int batch_size = 32;
    int epochs = 1;
    uint64_t seed = 1;
};

struct EpochMetrics {
    double loss = 0.0;      // mean pre-update loss over the epoch
    double accuracy = 0.0;  // pre-update top-1 accuracy over the epoch
};

// One pass of minibatch SGD in a seeded shuffle order (the order depends on
// config.seed and epoch_index only). Identical inputs give bit-identical
// results for any worker-thread count: batches are split into fixed chunks
// of 8 samples and chunk gradients are reduced in chunk order.
EpochMetrics sgd_epoch(Network& net, const Dataset& data,
                       const TrainConfig& config, int epoch_index);

// Top-1 accuracy; ties pick the lowest class index. Pure.
double evaluate(const Network& net, const Dataset& data);

// ------------------------------------------------------------------ nets

// Classic 28x28 LeNet-style stack with both conv layers as ACLs:
//   ACL(1->8, 5x5, pad 2), relu, maxpool2,
//   ACL(8->16, 5x5, valid), relu, maxpool2,
//   flatten, linear(400,120), relu, linear(120,84), relu, linear(84,10)
// The ratio arrangement is bound separately per conv layer. Plain LeNet is
// the same net with the all-Plain ratio pattern.
Network make_lenet(const RatioArrangement& ratios, uint64_t seed);

// Arrangement pattern strings of the network's ACL nodes, in order.
std::vector<std::string> acl_patterns(const Network& net);

}  // namespace acl
