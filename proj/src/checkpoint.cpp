#include "acl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <stdexcept>

#include "acl/fileio.hpp"

namespace acl {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'A', 'C', 'L', 'N', 'E', 'T', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void append_le32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64(std::string& out, double d) {
    const uint64_t u = std::bit_cast<uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& bytes;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > bytes.size())
            throw std::runtime_error("corrupt checkpoint: truncated record");
    }
    uint32_t le32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        uint64_t u = 0;
        for (int i = 0; i < 8; ++i)
            u |= static_cast<uint64_t>(static_cast<uint8_t>(bytes[pos + i])) << (8 * i);
        pos += 8;
        return std::bit_cast<double>(u);
    }
};

json describe_nodes(const Network& net) {
    json nodes = json::array();
    for (const Node& n : net.nodes) {
        if (const auto* acl = std::get_if<AclLayer>(&n)) {
            nodes.push_back({{"kind", "acl"},
                             {"pattern", serialize(acl->arrangement)},
                             {"h", acl->arrangement.kernel_size.h},
                             {"w", acl->arrangement.kernel_size.w},
                             {"stride", acl->hyper.stride},
                             {"padding", acl->hyper.padding},
                             {"dilation", acl->hyper.dilation}});
        } else if (const auto* mp = std::get_if<MaxPoolNode>(&n)) {
            nodes.push_back({{"kind", "maxpool"}, {"k", mp->k}, {"s", mp->s}});
        } else if (std::holds_alternative<ReluNode>(n)) {
            nodes.push_back({{"kind", "relu"}});
        } else if (std::holds_alternative<FlattenNode>(n)) {
            nodes.push_back({{"kind", "flatten"}});
        } else {
            const auto& lin = std::get<LinearNode>(n);
            nodes.push_back({{"kind", "linear"}, {"in", lin.in}, {"out", lin.out}});
        }
    }
    return nodes;
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path,
                     const json& train_meta) {
    validate(net);
    const json meta = {{"nodes", describe_nodes(net)}, {"train", train_meta}};
    const std::string meta_text = meta.dump();

    std::string out(kMagic, sizeof(kMagic));
    append_le32(out, kVersion);
    append_le32(out, static_cast<uint32_t>(meta_text.size()));
    out += meta_text;

    for (const Node& n : net.nodes) {
        if (const auto* acl = std::get_if<AclLayer>(&n)) {
            for (const KernelSpec& s : acl->specs)
                for (double a : s.akps) append_f64(out, a);
            for (const KernelSpec& s : acl->specs) append_f64(out, s.gabor_gamma);
            for (double b : acl->bias) append_f64(out, b);
        } else if (const auto* lin = std::get_if<LinearNode>(&n)) {
            for (double w : lin->w) append_f64(out, w);
            for (double b : lin->b) append_f64(out, b);
        }
    }
    write_file_atomic(path, out);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < sizeof(kMagic) ||
        bytes.compare(0, sizeof(kMagic), kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path + ": not a checkpoint file (bad magic)");
    Reader rd{bytes, sizeof(kMagic)};
    const uint32_t version = rd.le32();
    if (version != kVersion)
        throw std::runtime_error(path + ": unsupported checkpoint version " +
                                 std::to_string(version));
    const uint32_t meta_len = rd.le32();
    rd.need(meta_len);
    json meta;
    try {
        meta = json::parse(bytes.substr(rd.pos, meta_len));
    } catch (const json::exception& e) {
        throw std::runtime_error("corrupt checkpoint: bad metadata (" +
                                 std::string(e.what()) + ")");
    }
    rd.pos += meta_len;

    LoadedCheckpoint loaded;
    try {
        loaded.train_meta =
            meta.contains("train") ? meta["train"] : json::object();
        for (const json& jn : meta.at("nodes")) {
            const std::string kind = jn.at("kind");
            if (kind == "acl") {
                const KernelSize size{jn.at("h").get<int>(), jn.at("w").get<int>()};
                const auto parsed =
                    parse_pattern(jn.at("pattern").get<std::string>(), size);
                const auto* arr = std::get_if<Arrangement>(&parsed);
                if (!arr)
                    throw std::runtime_error(
                        "corrupt checkpoint: ACL pattern is not in count form");
                AclLayer layer;
                layer.arrangement = *arr;
                layer.hyper = {jn.at("stride").get<int>(),
                               jn.at("padding").get<int>(),
                               jn.at("dilation").get<int>()};
                for (KernelFamily f : flatten_families(*arr)) {
                    KernelSpec s;
                    s.family = f;
                    s.size = arr->kernel_size;
                    s.akps.resize(static_cast<size_t>(akp_count(f, s.size)));
                    for (double& a : s.akps) a = rd.f64();
                    layer.specs.push_back(std::move(s));
                }
                for (KernelSpec& s : layer.specs) s.gabor_gamma = rd.f64();
                layer.bias.resize(static_cast<size_t>(arr->out_channels));
                for (double& b : layer.bias) b = rd.f64();
                loaded.net.nodes.emplace_back(std::move(layer));
            } else if (kind == "maxpool") {
                loaded.net.nodes.emplace_back(
                    MaxPoolNode{jn.at("k").get<int>(), jn.at("s").get<int>()});
            } else if (kind == "relu") {
                loaded.net.nodes.emplace_back(ReluNode{});
            } else if (kind == "flatten") {
                loaded.net.nodes.emplace_back(FlattenNode{});
            } else if (kind == "linear") {
                LinearNode lin;
                lin.in = jn.at("in").get<int>();
                lin.out = jn.at("out").get<int>();
                if (lin.in < 1 || lin.out < 1)
                    throw std::runtime_error("corrupt checkpoint: bad linear dims");
                lin.w.resize(static_cast<size_t>(lin.in) * lin.out);
                for (double& w : lin.w) w = rd.f64();
                lin.b.resize(static_cast<size_t>(lin.out));
                for (double& b : lin.b) b = rd.f64();
                loaded.net.nodes.emplace_back(std::move(lin));
            } else {
                throw std::runtime_error("corrupt checkpoint: unknown node kind '" +
                                         kind + "'");
            }
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("corrupt checkpoint: bad metadata (" +
                                 std::string(e.what()) + ")");
    }
    if (rd.pos != bytes.size())
        throw std::runtime_error("corrupt checkpoint: trailing bytes");
    validate(loaded.net);
    return loaded;
}

}  // namespace acl
