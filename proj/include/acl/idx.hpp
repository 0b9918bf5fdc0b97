#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acl/network.hpp"

namespace acl {

// Loads a paired IDX image/label file set (the MNIST container format:
// big-endian magic + dims + raw bytes). Pixels are scaled to [0,1] as
// byte/255. Throws std::runtime_error with a distinct message for a wrong
// magic number, a truncated file, and an image/label count mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Fixture writers: encode images (count x rows x cols bytes) and labels in
// the same container format, atomically.
void write_idx_images(const std::string& path, int rows, int cols,
                      const std::vector<uint8_t>& pixels);
void write_idx_labels(const std::string& path, const std::vector<uint8_t>& labels);

}  // namespace acl
