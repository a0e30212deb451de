#include "dbsloc/synthetic_segmenter.hpp"

#include <vector>

#include "dbsloc/errors.hpp"
#include "dbsloc/rng.hpp"

namespace dbsloc {

namespace {

enum Label : unsigned char { kBackground = 0, kLeft = 1, kRight = 2 };

bool mask_hit(const Volume3& mask, const Volume3& grid, int i, int j, int k) {
  const Point3 c(i * grid.spacing()[0] / mask.spacing()[0], j * grid.spacing()[1] / mask.spacing()[1],
                 k * grid.spacing()[2] / mask.spacing()[2]);
  return sample_nearest(mask, c) > 0.5;
}

}  // namespace

SegmentationChannels synthetic_segment(const Volume3& v, const Volume3* left_mask, const Volume3* right_mask,
                                       const SegmenterOptions& options,
                                       const std::optional<ThresholdFallback>& fallback) {
  if (!(options.confidence > 1.0 / 3.0 && options.confidence <= 1.0)) {
    throw InvalidArgument("segmenter confidence must be in (1/3, 1]");
  }
  const bool have_masks = left_mask && right_mask;
  if (!have_masks && !fallback) throw InvalidArgument("synthetic_segment needs truth masks or a threshold fallback");

  const Index3& d = v.dims();
  std::vector<unsigned char> labels(v.size(), kBackground);
  for (int k = 0; k < d[2]; ++k) {
    for (int j = 0; j < d[1]; ++j) {
      for (int i = 0; i < d[0]; ++i) {
        unsigned char label = kBackground;
        if (have_masks) {
          if (mask_hit(*left_mask, v, i, j, k)) {
            label = kLeft;
          } else if (mask_hit(*right_mask, v, i, j, k)) {
            label = kRight;
          }
        } else {
          const double u = v(i, j, k);
          if (u >= fallback->lo && u <= fallback->hi) label = 2 * i < d[0] ? kLeft : kRight;
        }
        if (options.swap_labels && label != kBackground) label = label == kLeft ? kRight : kLeft;
        labels[v.linear_index(i, j, k)] = label;
      }
    }
  }

  if (options.boundary_noise > 0.0) {
    const std::vector<unsigned char> clean = labels;
    const int offsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (int k = 0; k < d[2]; ++k) {
      for (int j = 0; j < d[1]; ++j) {
        for (int i = 0; i < d[0]; ++i) {
          const std::size_t n = v.linear_index(i, j, k);
          unsigned char other = clean[n];
          for (const auto& o : offsets) {
            const Index3 q{i + o[0], j + o[1], k + o[2]};
            if (!v.contains(q)) continue;
            const unsigned char lq = clean[v.linear_index(q)];
            if (lq != clean[n]) {
              other = lq;
              break;
            }
          }
          if (other == clean[n]) continue;
          if (unit_from_bits(mix_seed(options.seed, n)) < options.boundary_noise) labels[n] = other;
        }
      }
    }
  }

  const double off = (1.0 - options.confidence) / 2.0;
  SegmentationChannels out{v.like(), v.like(), v.like()};
  for (std::size_t n = 0; n < labels.size(); ++n) {
    for (int c = 0; c < 3; ++c) out[c].data()[n] = c == labels[n] ? options.confidence : off;
  }
  return out;
}

SyntheticSegmenter::SyntheticSegmenter(Volume3 left_mask, Volume3 right_mask, SegmenterOptions options)
    : left_(std::move(left_mask)), right_(std::move(right_mask)), options_(options) {}

SyntheticSegmenter SyntheticSegmenter::from_threshold(ThresholdFallback fallback, SegmenterOptions options) {
  SyntheticSegmenter s;
  s.fallback_ = fallback;
  s.options_ = options;
  return s;
}

SegmentationChannels SyntheticSegmenter::predict(const Volume3& volume) const {
  return synthetic_segment(volume, left_ ? &*left_ : nullptr, right_ ? &*right_ : nullptr, options_, fallback_);
}

}  // namespace dbsloc
