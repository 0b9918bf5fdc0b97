#include "acl/idx.hpp"

#include <stdexcept>

#include "acl/fileio.hpp"

namespace acl {
namespace {

constexpr uint32_t kImagesMagic = 0x00000803;
constexpr uint32_t kLabelsMagic = 0x00000801;

uint32_t read_be32(const std::string& bytes, size_t off, const std::string& path) {
    if (off + 4 > bytes.size())
        throw std::runtime_error(path + ": truncated IDX header");
    return (static_cast<uint32_t>(static_cast<uint8_t>(bytes[off])) << 24) |
           (static_cast<uint32_t>(static_cast<uint8_t>(bytes[off + 1])) << 16) |
           (static_cast<uint32_t>(static_cast<uint8_t>(bytes[off + 2])) << 8) |
           static_cast<uint32_t>(static_cast<uint8_t>(bytes[off + 3]));
}

void append_be32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const std::string img = read_file(images_path);
    if (read_be32(img, 0, images_path) != kImagesMagic)
        throw std::runtime_error(images_path + ": not an image file (bad magic)");
    const uint32_t count = read_be32(img, 4, images_path);
    const uint32_t rows = read_be32(img, 8, images_path);
    const uint32_t cols = read_be32(img, 12, images_path);
    const size_t need = 16 + static_cast<size_t>(count) * rows * cols;
    if (img.size() < need)
        throw std::runtime_error(images_path + ": truncated image data (" +
                                 std::to_string(img.size()) + " bytes, need " +
                                 std::to_string(need) + ")");

    const std::string lab = read_file(labels_path);
    if (read_be32(lab, 0, labels_path) != kLabelsMagic)
        throw std::runtime_error(labels_path + ": not a label file (bad magic)");
    const uint32_t lcount = read_be32(lab, 4, labels_path);
    if (lab.size() < 8 + static_cast<size_t>(lcount))
        throw std::runtime_error(labels_path + ": truncated label data");
    if (lcount != count)
        throw std::runtime_error("image/label count mismatch: " +
                                 std::to_string(count) + " images vs " +
                                 std::to_string(lcount) + " labels");

    Dataset d;
    d.rows = static_cast<int>(rows);
    d.cols = static_cast<int>(cols);
    d.pixels.resize(static_cast<size_t>(count) * rows * cols);
    for (size_t i = 0; i < d.pixels.size(); ++i)
        d.pixels[i] = static_cast<uint8_t>(img[16 + i]) / 255.0;
    d.labels.resize(count);
    for (uint32_t i = 0; i < lcount; ++i)
        d.labels[i] = static_cast<uint8_t>(lab[8 + i]);
    return d;
}

void write_idx_images(const std::string& path, int rows, int cols,
                      const std::vector<uint8_t>& pixels) {
    if (rows < 1 || cols < 1 ||
        pixels.size() % (static_cast<size_t>(rows) * cols) != 0)
        throw std::invalid_argument("write_idx_images: pixel count is not a "
                                    "whole number of rows x cols images");
    const uint32_t count =
        static_cast<uint32_t>(pixels.size() / (static_cast<size_t>(rows) * cols));
    std::string out;
    out.reserve(16 + pixels.size());
    append_be32(out, kImagesMagic);
    append_be32(out, count);
    append_be32(out, static_cast<uint32_t>(rows));
    append_be32(out, static_cast<uint32_t>(cols));
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    write_file_atomic(path, out);
}

void write_idx_labels(const std::string& path, const std::vector<uint8_t>& labels) {
    std::string out;
    out.reserve(8 + labels.size());
    append_be32(out, kLabelsMagic);
    append_be32(out, static_cast<uint32_t>(labels.size()));
    out.append(reinterpret_cast<const char*>(labels.data()), labels.size());
    write_file_atomic(path, out);
}

}  // namespace acl
