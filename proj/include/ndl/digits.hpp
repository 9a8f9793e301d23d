#ifndef NDL_DIGITS_HPP
#define NDL_DIGITS_HPP

#include <vector>

#include "ndl/dataio.hpp"
#include "ndl/numkernel.hpp"

namespace ndl {

inline constexpr size_t kDigitSide = 28;

/// One 28x28 grayscale rendering of `digit` (0..9): anti-aliased strokes and
/// arcs with per-sample jitter in position, scale, thickness and intensity.
Vec render_digit(int digit, RngState& rng);

/// Deterministic handwritten-style dataset: `per_class` renderings of each
/// requested digit, rows grouped by class in the order given.
LabeledDataset make_digit_dataset(const std::vector<int>& digits, size_t per_class,
                                  RngState& rng);

}  // namespace ndl

#endif
