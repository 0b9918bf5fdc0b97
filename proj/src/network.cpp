#include "acl/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace acl {
namespace {

// Fixed slice size for gradient reduction. Chunks are always reduced in
// order, so worker count never changes the arithmetic.
constexpr int kChunk = 8;

const char* node_kind(const Node& n) {
    if (std::holds_alternative<AclLayer>(n)) return "acl";
    if (std::holds_alternative<MaxPoolNode>(n)) return "maxpool";
    if (std::holds_alternative<ReluNode>(n)) return "relu";
    if (std::holds_alternative<FlattenNode>(n)) return "flatten";
    return "linear";
}

[[noreturn]] void node_fail(size_t index, const Node& n, const std::string& why) {
    throw std::invalid_argument("node " + std::to_string(index) + " (" +
                                node_kind(n) + "): " + why);
}

// ------------------------------------------------------------ node math

Tensor4 maxpool_forward(const MaxPoolNode& mp, const Tensor4& in,
                        std::vector<size_t>* argmax) {
    if (mp.k < 1 || mp.s < 1)
        throw std::invalid_argument("maxpool: k and s must be >= 1");
    const int oh = (in.h - mp.k) / mp.s + 1;
    const int ow = (in.w - mp.k) / mp.s + 1;
    if (in.h < mp.k || in.w < mp.k)
        throw std::invalid_argument("maxpool: input " + in.shape_str() +
                                    " smaller than window");
    Tensor4 out(in.b, in.c, oh, ow);
    if (argmax) argmax->assign(out.size(), 0);
    size_t o = 0;
    for (int m = 0; m < in.b; ++m)
        for (int c = 0; c < in.c; ++c)
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j, ++o) {
                    double best = -1e300;
                    size_t best_at = 0;
                    for (int di = 0; di < mp.k; ++di)
                        for (int dj = 0; dj < mp.k; ++dj) {
                            const size_t idx =
                                in.index(m, c, i * mp.s + di, j * mp.s + dj);
                            if (in.v[idx] > best) {  // ties keep the lowest index
                                best = in.v[idx];
                                best_at = idx;
                            }
                        }
                    out.v[o] = best;
                    if (argmax) (*argmax)[o] = best_at;
                }
    return out;
}

Tensor4 maxpool_backward(const Tensor4& in, const Tensor4& grad_out,
                         const std::vector<size_t>& argmax) {
    Tensor4 gin(in.b, in.c, in.h, in.w);
    for (size_t o = 0; o < grad_out.size(); ++o) gin.v[argmax[o]] += grad_out.v[o];
    return gin;
}

Tensor4 relu_forward(const Tensor4& in) {
    Tensor4 out = in;
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
    return out;
}

Tensor4 relu_backward(const Tensor4& in, const Tensor4& grad_out) {
    Tensor4 gin = grad_out;
    for (size_t i = 0; i < gin.size(); ++i)
        if (in.v[i] <= 0.0) gin.v[i] = 0.0;
    return gin;
}

Tensor4 flatten_forward(const Tensor4& in) {
    Tensor4 out = in;
    out.c = in.c * in.h * in.w;
    out.h = 1;
    out.w = 1;
    return out;
}

Tensor4 linear_forward(const LinearNode& lin, const Tensor4& in) {
    if (in.c != lin.in || in.h != 1 || in.w != 1)
        throw std::invalid_argument("linear: expected input (B," +
                                    std::to_string(lin.in) + ",1,1), got " +
                                    in.shape_str());
    Tensor4 out(in.b, lin.out, 1, 1);
    for (int m = 0; m < in.b; ++m) {
        const double* x = in.v.data() + static_cast<size_t>(m) * lin.in;
        double* y = out.v.data() + static_cast<size_t>(m) * lin.out;
        for (int o = 0; o < lin.out; ++o) {
            const double* wrow = lin.w.data() + static_cast<size_t>(o) * lin.in;
            double acc = lin.b[static_cast<size_t>(o)];
            for (int i = 0; i < lin.in; ++i) acc += wrow[i] * x[i];
            y[o] = acc;
        }
    }
    return out;
}

Tensor4 linear_backward(const LinearNode& lin, const Tensor4& in,
                        const Tensor4& grad_out, NodeGrads& g) {
    if (g.w.empty()) g.w.assign(lin.w.size(), 0.0);
    if (g.b.empty()) g.b.assign(lin.b.size(), 0.0);
    Tensor4 gin(in.b, lin.in, 1, 1);
    for (int m = 0; m < in.b; ++m) {
        const double* x = in.v.data() + static_cast<size_t>(m) * lin.in;
        const double* gy = grad_out.v.data() + static_cast<size_t>(m) * lin.out;
        double* gx = gin.v.data() + static_cast<size_t>(m) * lin.in;
        for (int o = 0; o < lin.out; ++o) {
            const double go = gy[o];
            g.b[static_cast<size_t>(o)] += go;
            double* gwrow = g.w.data() + static_cast<size_t>(o) * lin.in;
            const double* wrow = lin.w.data() + static_cast<size_t>(o) * lin.in;
            for (int i = 0; i < lin.in; ++i) {
                gwrow[i] += go * x[i];
                gx[i] += go * wrow[i];
            }
        }
    }
    return gin;
}

}  // namespace

LinearNode make_linear(int in, int out, Rng& rng) {
    if (in < 1 || out < 1)
        throw std::invalid_argument("linear: dimensions must be positive");
    LinearNode lin;
    lin.in = in;
    lin.out = out;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    lin.w.resize(static_cast<size_t>(in) * out);
    for (double& x : lin.w) x = rng.uniform(-bound, bound);
    lin.b.assign(static_cast<size_t>(out), 0.0);
    return lin;
}

void validate(const Network& net) {
    int flattens = 0;
    int first_linear = -1, flatten_at = -1;
    for (size_t i = 0; i < net.nodes.size(); ++i) {
        const Node& n = net.nodes[i];
        if (const auto* acl = std::get_if<AclLayer>(&n)) {
            validate(*acl);
        } else if (const auto* mp = std::get_if<MaxPoolNode>(&n)) {
            if (mp->k < 1 || mp->s < 1) node_fail(i, n, "k and s must be >= 1");
        } else if (const auto* lin = std::get_if<LinearNode>(&n)) {
            if (lin->in < 1 || lin->out < 1) node_fail(i, n, "bad dimensions");
            if (lin->w.size() != static_cast<size_t>(lin->in) * lin->out ||
                lin->b.size() != static_cast<size_t>(lin->out))
                node_fail(i, n, "weight storage does not match dimensions");
            if (first_linear < 0) first_linear = static_cast<int>(i);
        } else if (std::holds_alternative<FlattenNode>(n)) {
            ++flattens;
            flatten_at = static_cast<int>(i);
        }
    }
    if (flattens > 1)
        throw std::invalid_argument("network: more than one flatten node");
    if (first_linear >= 0 && (flattens != 1 || flatten_at > first_linear))
        throw std::invalid_argument(
            "network: linear nodes require exactly one preceding flatten");
}

Tensor4 net_forward(const Network& net, const Tensor4& input) {
    Tensor4 cur = input;
    for (size_t i = 0; i < net.nodes.size(); ++i) {
        const Node& n = net.nodes[i];
        try {
            if (const auto* acl = std::get_if<AclLayer>(&n))
                cur = forward(*acl, cur);
            else if (const auto* mp = std::get_if<MaxPoolNode>(&n))
                cur = maxpool_forward(*mp, cur, nullptr);
            else if (std::holds_alternative<ReluNode>(n))
                cur = relu_forward(cur);
            else if (std::holds_alternative<FlattenNode>(n))
                cur = flatten_forward(cur);
            else
                cur = linear_forward(std::get<LinearNode>(n), cur);
        } catch (const std::exception& e) {
            node_fail(i, n, e.what());
        }
    }
    return cur;
}

Tensor4 net_forward(const Network& net, const Tensor4& input, Tape& tape) {
    tape.inputs.clear();
    tape.argmax.assign(net.nodes.size(), {});
    Tensor4 cur = input;
    for (size_t i = 0; i < net.nodes.size(); ++i) {
        const Node& n = net.nodes[i];
        tape.inputs.push_back(cur);
        try {
            if (const auto* acl = std::get_if<AclLayer>(&n))
                cur = forward(*acl, cur);
            else if (const auto* mp = std::get_if<MaxPoolNode>(&n))
                cur = maxpool_forward(*mp, cur, &tape.argmax[i]);
            else if (std::holds_alternative<ReluNode>(n))
                cur = relu_forward(cur);
            else if (std::holds_alternative<FlattenNode>(n))
                cur = flatten_forward(cur);
            else
                cur = linear_forward(std::get<LinearNode>(n), cur);
        } catch (const std::exception& e) {
            node_fail(i, n, e.what());
        }
    }
    tape.output = cur;
    return cur;
}

NetGrads zero_grads(const Network& net) {
    NetGrads g;
    g.nodes.resize(net.nodes.size());
    for (size_t i = 0; i < net.nodes.size(); ++i) {
        if (const auto* acl = std::get_if<AclLayer>(&net.nodes[i])) {
            NodeGrads& ng = g.nodes[i];
            ng.acl.bias_grads.assign(acl->bias.size(), 0.0);
            ng.acl.akp_grads.resize(acl->specs.size());
            for (size_t k = 0; k < acl->specs.size(); ++k)
                ng.acl.akp_grads[k].assign(acl->specs[k].akps.size(), 0.0);
        } else if (const auto* lin = std::get_if<LinearNode>(&net.nodes[i])) {
            g.nodes[i].w.assign(lin->w.size(), 0.0);
            g.nodes[i].b.assign(lin->b.size(), 0.0);
        }
    }
    return g;
}

namespace {

void add_into(std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty()) {
        a = b;
        return;
    }
    if (a.size() != b.size())
        throw std::invalid_argument("gradient accumulate: size mismatch");
    for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace

void accumulate(NetGrads& into, const NetGrads& part) {
    if (into.nodes.size() != part.nodes.size())
        throw std::invalid_argument("gradient accumulate: node count mismatch");
    for (size_t i = 0; i < into.nodes.size(); ++i) {
        NodeGrads& a = into.nodes[i];
        const NodeGrads& b = part.nodes[i];
        add_into(a.b, b.b);
        add_into(a.w, b.w);
        add_into(a.acl.bias_grads, b.acl.bias_grads);
        if (a.acl.akp_grads.empty()) {
            a.acl.akp_grads = b.acl.akp_grads;
        } else {
            if (a.acl.akp_grads.size() != b.acl.akp_grads.size())
                throw std::invalid_argument("gradient accumulate: kernel count mismatch");
            for (size_t k = 0; k < a.acl.akp_grads.size(); ++k)
                add_into(a.acl.akp_grads[k], b.acl.akp_grads[k]);
        }
    }
}

Tensor4 net_backward(const Network& net, const Tape& tape,
                     const Tensor4& grad_output, NetGrads& grads) {
    if (tape.inputs.size() != net.nodes.size() ||
        grads.nodes.size() != net.nodes.size())
        throw std::invalid_argument("net_backward: tape/grads do not match network");
    Tensor4 g = grad_output;
    for (size_t ri = net.nodes.size(); ri-- > 0;) {
        const Node& n = net.nodes[ri];
        const Tensor4& in = tape.inputs[ri];
        if (const auto* acl = std::get_if<AclLayer>(&n)) {
            auto [lg, gin] = backward(*acl, in, g);
            NodeGrads& ng = grads.nodes[ri];
            add_into(ng.acl.bias_grads, lg.bias_grads);
            if (ng.acl.akp_grads.empty()) {
                ng.acl.akp_grads = std::move(lg.akp_grads);
            } else {
                for (size_t k = 0; k < lg.akp_grads.size(); ++k)
                    add_into(ng.acl.akp_grads[k], lg.akp_grads[k]);
            }
            g = std::move(gin);
        } else if (const auto* mp = std::get_if<MaxPoolNode>(&n)) {
            (void)mp;
            g = maxpool_backward(in, g, tape.argmax[ri]);
        } else if (std::holds_alternative<ReluNode>(n)) {
            g = relu_backward(in, g);
        } else if (std::holds_alternative<FlattenNode>(n)) {
            Tensor4 gin = std::move(g);
            gin.c = in.c;
            gin.h = in.h;
            gin.w = in.w;
            g = std::move(gin);
        } else {
            g = linear_backward(std::get<LinearNode>(n), in, g, grads.nodes[ri]);
        }
    }
    return g;
}

void net_update(Network& net, const NetGrads& grads, double eta) {
    if (grads.nodes.size() != net.nodes.size())
        throw std::invalid_argument("net_update: grads do not match network");
    for (size_t i = 0; i < net.nodes.size(); ++i) {
        if (auto* acl = std::get_if<AclLayer>(&net.nodes[i])) {
            apply_update(*acl, grads.nodes[i].acl, eta);
        } else if (auto* lin = std::get_if<LinearNode>(&net.nodes[i])) {
            const NodeGrads& g = grads.nodes[i];
            for (size_t j = 0; j < lin->w.size(); ++j) lin->w[j] -= eta * g.w[j];
            for (size_t j = 0; j < lin->b.size(); ++j) lin->b[j] -= eta * g.b[j];
        }
    }
}

std::pair<double, std::vector<double>> softmax_ce(
    const std::vector<double>& logits, int label) {
    if (logits.empty() || label < 0 || label >= static_cast<int>(logits.size()))
        throw std::invalid_argument("softmax_ce: label out of range");
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits) denom += std::exp(z - zmax);
    const double log_denom = std::log(denom);
    const double loss = log_denom - (logits[static_cast<size_t>(label)] - zmax);
    std::vector<double> grad(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
        grad[i] = std::exp(logits[i] - zmax) / denom;
        if (static_cast<int>(i) == label) grad[i] -= 1.0;
    }
    return {loss, std::move(grad)};
}

Tensor4 make_batch(const Dataset& data, const std::vector<int>& indices) {
    const size_t px = static_cast<size_t>(data.rows) * data.cols;
    Tensor4 t(static_cast<int>(indices.size()), 1, data.rows, data.cols);
    for (size_t m = 0; m < indices.size(); ++m)
        std::copy_n(data.pixels.data() + static_cast<size_t>(indices[m]) * px, px,
                    t.v.data() + m * px);
    return t;
}

Dataset take_prefix(const Dataset& data, int n) {
    if (n < 1 || n > data.count())
        throw std::invalid_argument("take_prefix: n out of range");
    Dataset d;
    d.rows = data.rows;
    d.cols = data.cols;
    const size_t px = static_cast<size_t>(data.rows) * data.cols;
    d.pixels.assign(data.pixels.begin(),
                    data.pixels.begin() + static_cast<size_t>(n) * px);
    d.labels.assign(data.labels.begin(), data.labels.begin() + n);
    return d;
}

int worker_threads() {
    if (const char* env = std::getenv("ANALYTIC_CONV_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return std::min(n, 256);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

namespace {

struct ChunkStats {
    NetGrads grads;
    double loss_sum = 0.0;
    int correct = 0;
};

int argmax_class(const double* logits, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (logits[i] > logits[static_cast<size_t>(best)]) best = i;
    return best;
}

ChunkStats train_chunk(const Network& net, const Dataset& data,
                       const std::vector<int>& order, int lo, int hi) {
    ChunkStats cs;
    cs.grads = zero_grads(net);
    std::vector<int> idx(order.begin() + lo, order.begin() + hi);
    const Tensor4 batch = make_batch(data, idx);
    Tape tape;
    const Tensor4 logits = net_forward(net, batch, tape);
    const int classes = logits.c;
    Tensor4 grad_logits(logits.b, logits.c, 1, 1);
    std::vector<double> row(static_cast<size_t>(classes));
    for (int m = 0; m < logits.b; ++m) {
        const double* lp = logits.v.data() + static_cast<size_t>(m) * classes;
        std::copy_n(lp, classes, row.data());
        const int label = data.labels[static_cast<size_t>(idx[static_cast<size_t>(m)])];
        auto [loss, grad] = softmax_ce(row, label);
        cs.loss_sum += loss;
        if (argmax_class(lp, classes) == label) ++cs.correct;
        std::copy_n(grad.data(), classes,
                    grad_logits.v.data() + static_cast<size_t>(m) * classes);
    }
    net_backward(net, tape, grad_logits, cs.grads);
    return cs;
}

}  // namespace

EpochMetrics sgd_epoch(Network& net, const Dataset& data,
                       const TrainConfig& config, int epoch_index) {
    if (data.count() == 0) throw std::invalid_argument("sgd_epoch: empty dataset");
    if (config.lr < 0.0 || config.batch_size < 1)
        throw std::invalid_argument("sgd_epoch: bad config");
    validate(net);

    std::vector<int> order(static_cast<size_t>(data.count()));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = Rng::stream(config.seed, 100 + static_cast<uint64_t>(epoch_index));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    long long correct = 0;
    const int n = data.count();
    for (int start = 0; start < n; start += config.batch_size) {
        const int stop = std::min(n, start + config.batch_size);
        const int nchunks = (stop - start + kChunk - 1) / kChunk;
        std::vector<ChunkStats> stats = run_indexed<ChunkStats>(nchunks, [&](int c) {
            const int lo = start + c * kChunk;
            const int hi = std::min(stop, lo + kChunk);
            return train_chunk(net, data, order, lo, hi);
        });
        NetGrads batch_grads = zero_grads(net);
        for (const ChunkStats& cs : stats) {
            accumulate(batch_grads, cs.grads);
            loss_sum += cs.loss_sum;
            correct += cs.correct;
        }
        net_update(net, batch_grads, config.lr / (stop - start));
    }
    return {loss_sum / n, static_cast<double>(correct) / n};
}

double evaluate(const Network& net, const Dataset& data) {
    if (data.count() == 0) throw std::invalid_argument("evaluate: empty dataset");
    validate(net);
    constexpr int kEvalChunk = 64;
    const int n = data.count();
    const int nchunks = (n + kEvalChunk - 1) / kEvalChunk;
    std::vector<int> corrects = run_indexed<int>(nchunks, [&](int c) {
        const int lo = c * kEvalChunk;
        const int hi = std::min(n, lo + kEvalChunk);
        std::vector<int> idx(static_cast<size_t>(hi - lo));
        std::iota(idx.begin(), idx.end(), lo);
        const Tensor4 logits = net_forward(net, make_batch(data, idx));
        const int classes = logits.c * logits.h * logits.w;
        int correct = 0;
        for (int m = 0; m < logits.b; ++m) {
            const double* lp = logits.v.data() + static_cast<size_t>(m) * classes;
            if (argmax_class(lp, classes) == data.labels[static_cast<size_t>(lo + m)])
                ++correct;
        }
        return correct;
    });
    long long total = 0;
    for (int c : corrects) total += c;
    return static_cast<double>(total) / n;
}

Network make_lenet(const RatioArrangement& ratios, uint64_t seed) {
    validate(ratios);
    const KernelSize k5{5, 5};
    Network net;

    Rng r0 = Rng::stream(seed, 0);
    AclLayer conv1 = make_layer(bind_ratios(ratios, 1, 8, k5), {1, 2, 1}, r0);
    net.nodes.emplace_back(std::move(conv1));
    net.nodes.emplace_back(ReluNode{});
    net.nodes.emplace_back(MaxPoolNode{2, 2});

    Rng r1 = Rng::stream(seed, 1);
    AclLayer conv2 = make_layer(bind_ratios(ratios, 8, 16, k5), {1, 0, 1}, r1);
    net.nodes.emplace_back(std::move(conv2));
    net.nodes.emplace_back(ReluNode{});
    net.nodes.emplace_back(MaxPoolNode{2, 2});

    net.nodes.emplace_back(FlattenNode{});
    Rng r2 = Rng::stream(seed, 2);
    net.nodes.emplace_back(make_linear(400, 120, r2));
    net.nodes.emplace_back(ReluNode{});
    Rng r3 = Rng::stream(seed, 3);
    net.nodes.emplace_back(make_linear(120, 84, r3));
    net.nodes.emplace_back(ReluNode{});
    Rng r4 = Rng::stream(seed, 4);
    net.nodes.emplace_back(make_linear(84, 10, r4));

    validate(net);
    return net;
}

std::vector<std::string> acl_patterns(const Network& net) {
    std::vector<std::string> out;
    for (const Node& n : net.nodes)
        if (const auto* acl = std::get_if<AclLayer>(&n))
            out.push_back(serialize(acl->arrangement));
    return out;
}

}  // namespace acl
