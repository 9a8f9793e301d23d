#ifndef NDL_CHECKPOINT_HPP
#define NDL_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ndl/autoencoder.hpp"
#include "ndl/replay.hpp"

namespace ndl {

/// Model + replay-store container. Binary, little-endian, versioned:
///
///   magic   "NDLCKPT1" (8 bytes)
///   u32     format version (currently 1)
///   u32     level count N
///   N x     encode layer:  u32 out_dim, u32 in_dim,
///           out*in f64 row-major weights, out f64 biases
///   N x     decode layer:  same layout
///   u32     store class count C, u32 store code width
///   C x     i32 label, u32 code width, u64 sample count,
///           width f64 mean, width*width f64 Cholesky factor
///
/// Doubles are written bit-for-bit, so write -> read -> write reproduces the
/// file exactly.
struct Checkpoint {
    StackedAutoencoder model;
    ReplayStore store;
};

std::vector<uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::vector<uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ndl

#endif
