#pragma once

#include <array>
#include <cstdint>

#include "dbsloc/volume.hpp"

namespace dbsloc {

/// Single-channel heatmap regressor. With stochastic=false the output depends
/// only on the input; with stochastic=true it depends only on (input, seed).
/// Implementations hold no mutable state, so concurrent calls are allowed.
class Localizer {
 public:
  virtual ~Localizer() = default;
  virtual Volume3 predict(const Volume3& volume, bool stochastic, std::uint64_t seed) const = 0;
};

/// Background / left / right probability channels, same grid as the input.
using SegmentationChannels = std::array<Volume3, 3>;

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual SegmentationChannels predict(const Volume3& volume) const = 0;
};

/// f(x) = x. Used to check that the TTA chain cancels the spatial transform.
class EchoLocalizer final : public Localizer {
 public:
  Volume3 predict(const Volume3& volume, bool, std::uint64_t) const override { return volume; }
};

}  // namespace dbsloc
