#ifndef NDL_DATAIO_HPP
#define NDL_DATAIO_HPP

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ndl/numkernel.hpp"

namespace ndl {

/// Row-major images in [0,1] with integer class labels.
struct LabeledDataset {
    Matrix images;            // rows = samples, cols = height*width
    std::vector<int> labels;  // one per row
    size_t height = 0;
    size_t width = 0;

    LabeledDataset() = default;
    /// Validates the invariants: matching row/label counts, pixels in [0,1].
    LabeledDataset(Matrix images, std::vector<int> labels, size_t height, size_t width);

    size_t size() const { return images.rows; }
    std::set<int> class_set() const;
};

struct IdxImages {
    Matrix pixels;  // one image per row, scaled to [0,1]
    size_t height = 0;
    size_t width = 0;
};

/// IDX image container: magic 0x00000803, big-endian u32 count/height/width,
/// then count*height*width unsigned pixel bytes. Strict: bad magic, truncated
/// or oversized payloads and dimension overflow all throw ParseError with the
/// offending byte offset.
IdxImages parse_idx_images(const std::vector<uint8_t>& bytes);

/// IDX label container: magic 0x00000801, big-endian u32 count, label bytes.
std::vector<int> parse_idx_labels(const std::vector<uint8_t>& bytes);

std::vector<uint8_t> write_idx_images(const Matrix& pixels, size_t height, size_t width);
std::vector<uint8_t> write_idx_labels(const std::vector<int>& labels);

/// Reads a paired IDX image/label file set. Count mismatch -> DataError.
LabeledDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);

void save_idx_dataset(const LabeledDataset& ds, const std::string& images_path,
                      const std::string& labels_path);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);

/// Rows whose label is in `keep`, original order preserved.
LabeledDataset filter_classes(const LabeledDataset& ds, const std::set<int>& keep);

/// Bilinear downsample of one row-major image. Target dims must not exceed
/// the source dims.
Vec downsample(const Vec& image, size_t src_h, size_t src_w, size_t target_h, size_t target_w);

/// Per class: one fixed prototype in [0.1, 0.9] plus small uniform noise,
/// clamped to [0,1]. Labels run 0..classes-1; height is 1, width is dim.
LabeledDataset make_synthetic(size_t classes, size_t per_class, size_t dim, RngState& rng);

}  // namespace ndl

#endif
