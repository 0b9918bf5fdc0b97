#pragma once

#include <string>

#include "json.hpp"

#include "acl/network.hpp"

namespace acl {

// Checkpoint container: fixed magic, format version, a JSON metadata block
// describing the topology (ACL nodes by their arrangement pattern string)
// plus caller-supplied training metadata, followed by every parameter as a
// raw little-endian 64-bit float. Reloading reproduces forward outputs
// bit-exactly.
void save_checkpoint(const Network& net, const std::string& path,
                     const nlohmann::json& train_meta = nlohmann::json::object());

struct LoadedCheckpoint {
    Network net;
    nlohmann::json train_meta;
};

// Throws std::runtime_error on a bad magic, an unsupported version, or a
// corrupt/truncated record.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace acl
