#include "dbsloc/components.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstdint>
#include <limits>
#include <vector>

#include "dbsloc/errors.hpp"

namespace dbsloc {

Volume3 largest_connected_component(const Volume3& mask, Connectivity connectivity) {
  auto data = mask.data();

  std::vector<Index3> offsets;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (connectivity == Connectivity::Six && manhattan != 1) continue;
        offsets.push_back({dx, dy, dz});
      }

  constexpr std::int32_t kUnlabelled = -1;
  std::vector<std::int32_t> label(data.size(), kUnlabelled);
  std::vector<std::size_t> stack;
  std::int32_t next_label = 0;
  std::int32_t best_label = kUnlabelled;
  std::size_t best_size = 0;

  for (std::size_t seed = 0; seed < data.size(); ++seed) {
    if (!(data[seed] > 0.5) || label[seed] != kUnlabelled) continue;
    const std::int32_t current = next_label++;
    std::size_t size = 0;
    label[seed] = current;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t n = stack.back();
      stack.pop_back();
      ++size;
      const Index3 p = mask.voxel_of(n);
      for (const Index3& o : offsets) {
        const Index3 q{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
        if (!mask.contains(q)) continue;
        const std::size_t m = mask.linear_index(q);
        if (data[m] > 0.5 && label[m] == kUnlabelled) {
          label[m] = current;
          stack.push_back(m);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best_label = current;
    }
  }
  if (best_label == kUnlabelled) throw EmptyComponent("mask has no foreground voxels");

  Volume3 out = mask.like();
  auto dst = out.data();
  for (std::size_t n = 0; n < dst.size(); ++n) dst[n] = label[n] == best_label ? 1.0 : 0.0;
  return out;
}

Index3 bounding_box_center(const Volume3& mask) {
  Index3 lo{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
  Index3 hi{-1, -1, -1};
  const Index3& d = mask.dims();
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) {
        if (!(mask(i, j, k) > 0.5)) continue;
        lo = {std::min(lo[0], i), std::min(lo[1], j), std::min(lo[2], k)};
        hi = {std::max(hi[0], i), std::max(hi[1], j), std::max(hi[2], k)};
      }
  if (hi[0] < 0) throw EmptyComponent("mask has no foreground voxels");
  return {(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2};
}

}  // namespace dbsloc
