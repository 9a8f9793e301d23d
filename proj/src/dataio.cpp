#include "ndl/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ndl {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

uint32_t read_u32_be(const std::vector<uint8_t>& bytes, size_t offset) {
    if (offset + 4 > bytes.size()) {
        throw ParseError("truncated header: need 4 bytes, have " +
                             std::to_string(bytes.size() - offset),
                         offset);
    }
    return (uint32_t(bytes[offset]) << 24) | (uint32_t(bytes[offset + 1]) << 16) |
           (uint32_t(bytes[offset + 2]) << 8) | uint32_t(bytes[offset + 3]);
}

void append_u32_be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

uint8_t pixel_to_byte(double p) {
    const long v = std::lround(p * 255.0);
    return uint8_t(std::clamp(v, 0L, 255L));
}

std::string hex32(uint32_t v) {
    char buf[11];
    std::snprintf(buf, sizeof(buf), "0x%08x", v);
    return buf;
}

}  // namespace

LabeledDataset::LabeledDataset(Matrix images_in, std::vector<int> labels_in, size_t h, size_t w)
    : images(std::move(images_in)), labels(std::move(labels_in)), height(h), width(w) {
    if (images.rows != labels.size()) {
        throw DataError("dataset has " + std::to_string(images.rows) + " images but " +
                        std::to_string(labels.size()) + " labels");
    }
    if (images.rows > 0 && images.cols != height * width) {
        throw DataError("image width " + std::to_string(images.cols) + " != height*width " +
                        std::to_string(height * width));
    }
    for (double p : images.data) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DataError("pixel value " + std::to_string(p) + " outside [0,1]");
        }
    }
}

std::set<int> LabeledDataset::class_set() const {
    return std::set<int>(labels.begin(), labels.end());
}

IdxImages parse_idx_images(const std::vector<uint8_t>& bytes) {
    const uint32_t magic = read_u32_be(bytes, 0);
    if (magic != kImageMagic) {
        throw ParseError("bad image magic " + hex32(magic) + ", expected 0x00000803", 0);
    }
    const uint64_t count = read_u32_be(bytes, 4);
    const uint64_t height = read_u32_be(bytes, 8);
    const uint64_t width = read_u32_be(bytes, 12);
    const uint64_t payload = count * height * width;
    if (height * width > 0 && payload / (height * width) != count) {
        throw ParseError("image dimensions overflow", 4);
    }
    const uint64_t expected = 16 + payload;
    if (bytes.size() != expected) {
        throw ParseError("payload length mismatch: expected " + std::to_string(expected) +
                             " bytes total, have " + std::to_string(bytes.size()),
                         std::min<uint64_t>(bytes.size(), expected));
    }
    IdxImages out;
    out.height = size_t(height);
    out.width = size_t(width);
    out.pixels = Matrix(size_t(count), size_t(height * width));
    for (size_t i = 0; i < out.pixels.data.size(); ++i) {
        out.pixels.data[i] = double(bytes[16 + i]) / 255.0;
    }
    return out;
}

std::vector<int> parse_idx_labels(const std::vector<uint8_t>& bytes) {
    const uint32_t magic = read_u32_be(bytes, 0);
    if (magic != kLabelMagic) {
        throw ParseError("bad label magic " + hex32(magic) + ", expected 0x00000801", 0);
    }
    const uint64_t count = read_u32_be(bytes, 4);
    const uint64_t expected = 8 + count;
    if (bytes.size() != expected) {
        throw ParseError("payload length mismatch: expected " + std::to_string(expected) +
                             " bytes total, have " + std::to_string(bytes.size()),
                         std::min<uint64_t>(bytes.size(), expected));
    }
    std::vector<int> labels(static_cast<size_t>(count));
    for (size_t i = 0; i < labels.size(); ++i) labels[i] = int(bytes[8 + i]);
    return labels;
}

std::vector<uint8_t> write_idx_images(const Matrix& pixels, size_t height, size_t width) {
    if (pixels.rows > 0 && pixels.cols != height * width) {
        throw ShapeError("write_idx_images: row length " + std::to_string(pixels.cols) +
                         " != height*width " + std::to_string(height * width));
    }
    std::vector<uint8_t> out;
    out.reserve(16 + pixels.data.size());
    append_u32_be(out, kImageMagic);
    append_u32_be(out, uint32_t(pixels.rows));
    append_u32_be(out, uint32_t(height));
    append_u32_be(out, uint32_t(width));
    for (double p : pixels.data) out.push_back(pixel_to_byte(p));
    return out;
}

std::vector<uint8_t> write_idx_labels(const std::vector<int>& labels) {
    std::vector<uint8_t> out;
    out.reserve(8 + labels.size());
    append_u32_be(out, kLabelMagic);
    append_u32_be(out, uint32_t(labels.size()));
    for (int l : labels) out.push_back(uint8_t(l));
    return out;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw DataError("short write to " + path);
}

LabeledDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
    IdxImages imgs = parse_idx_images(read_file_bytes(images_path));
    std::vector<int> labels = parse_idx_labels(read_file_bytes(labels_path));
    if (imgs.pixels.rows != labels.size()) {
        throw DataError("image/label count mismatch: " + std::to_string(imgs.pixels.rows) +
                        " images vs " + std::to_string(labels.size()) + " labels");
    }
    return LabeledDataset(std::move(imgs.pixels), std::move(labels), imgs.height, imgs.width);
}

void save_idx_dataset(const LabeledDataset& ds, const std::string& images_path,
                      const std::string& labels_path) {
    write_file_bytes(images_path, write_idx_images(ds.images, ds.height, ds.width));
    write_file_bytes(labels_path, write_idx_labels(ds.labels));
}

LabeledDataset filter_classes(const LabeledDataset& ds, const std::set<int>& keep) {
    std::vector<size_t> rows;
    for (size_t r = 0; r < ds.size(); ++r) {
        if (keep.count(ds.labels[r])) rows.push_back(r);
    }
    Matrix images(rows.size(), ds.images.cols);
    std::vector<int> labels(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        images.set_row(i, ds.images.row(rows[i]));
        labels[i] = ds.labels[rows[i]];
    }
    return LabeledDataset(std::move(images), std::move(labels), ds.height, ds.width);
}

Vec downsample(const Vec& image, size_t src_h, size_t src_w, size_t target_h, size_t target_w) {
    if (image.size() != src_h * src_w) {
        throw ShapeError("downsample: image length " + std::to_string(image.size()) +
                         " != source dims " + std::to_string(src_h * src_w));
    }
    if (target_h > src_h || target_w > src_w) {
        throw Error("downsample: upsampling to " + std::to_string(target_h) + "x" +
                    std::to_string(target_w) + " is unsupported");
    }
    Vec out(target_h * target_w);
    const double sy = double(src_h) / double(target_h);
    const double sx = double(src_w) / double(target_w);
    for (size_t ty = 0; ty < target_h; ++ty) {
        // half-pixel centers, clamped to the source grid
        double fy = (double(ty) + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, double(src_h - 1));
        const size_t y0 = size_t(fy);
        const size_t y1 = std::min(y0 + 1, src_h - 1);
        const double wy = fy - double(y0);
        for (size_t tx = 0; tx < target_w; ++tx) {
            double fx = (double(tx) + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, double(src_w - 1));
            const size_t x0 = size_t(fx);
            const size_t x1 = std::min(x0 + 1, src_w - 1);
            const double wx = fx - double(x0);
            const double top = image[y0 * src_w + x0] * (1.0 - wx) + image[y0 * src_w + x1] * wx;
            const double bot = image[y1 * src_w + x0] * (1.0 - wx) + image[y1 * src_w + x1] * wx;
            out[ty * target_w + tx] = top * (1.0 - wy) + bot * wy;
        }
    }
    return out;
}

LabeledDataset make_synthetic(size_t classes, size_t per_class, size_t dim, RngState& rng) {
    if (dim < 4) throw Error("make_synthetic: dim must be >= 4");
    Matrix images(classes * per_class, dim);
    std::vector<int> labels(classes * per_class);
    size_t row = 0;
    for (size_t c = 0; c < classes; ++c) {
        Vec proto(dim);
        for (double& v : proto) v = rng.uniform(0.1, 0.9);
        for (size_t s = 0; s < per_class; ++s, ++row) {
            double* dst = images.row_ptr(row);
            for (size_t i = 0; i < dim; ++i) {
                dst[i] = std::clamp(proto[i] + rng.uniform(-0.05, 0.05), 0.0, 1.0);
            }
            labels[row] = int(c);
        }
    }
    return LabeledDataset(std::move(images), std::move(labels), 1, dim);
}

}  // namespace ndl
