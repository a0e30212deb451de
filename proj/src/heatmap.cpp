#include "dbsloc/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbsloc/errors.hpp"

namespace dbsloc {

namespace {

void require_same_grid(const Volume3& a, const Volume3& b, const char* op) {
  if (a.dims() != b.dims()) throw InvalidArgument(std::string(op) + ": volume dims differ");
}

}  // namespace

double HeatmapSpec::support_radius() const {
  if (cutoff <= 0.0) return std::numeric_limits<double>::infinity();
  return sigma * std::sqrt(2.0 * std::log(peak / cutoff));
}

void validate(const HeatmapSpec& spec) {
  if (!(spec.sigma > 0.0)) throw InvalidArgument("heatmap sigma must be > 0");
  if (!(spec.cutoff >= 0.0 && spec.cutoff < spec.peak)) throw InvalidArgument("heatmap cutoff must be in [0, peak)");
}

std::string_view to_string(Side side) { return side == Side::Left ? "left" : "right"; }

Volume3 gaussian_heatmap(const HeatmapSpec& spec, const Point3& center, const Index3& dims, const Spacing3& spacing) {
  validate(spec);
  Volume3 out(dims, spacing);
  const double inv_two_var = 1.0 / (2.0 * spec.sigma * spec.sigma);
  const double radius = spec.support_radius();

  Index3 lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    if (std::isfinite(radius)) {
      const double reach = radius / spacing[a];
      lo[a] = std::max(0, static_cast<int>(std::floor(center[a] - reach)));
      hi[a] = std::min(dims[a] - 1, static_cast<int>(std::ceil(center[a] + reach)));
    } else {
      lo[a] = 0;
      hi[a] = dims[a] - 1;
    }
  }
  for (int k = lo[2]; k <= hi[2]; ++k) {
    const double dz = (k - center.z()) * spacing[2];
    for (int j = lo[1]; j <= hi[1]; ++j) {
      const double dy = (j - center.y()) * spacing[1];
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const double dx = (i - center.x()) * spacing[0];
        const double value = spec.peak * std::exp(-(dx * dx + dy * dy + dz * dz) * inv_two_var);
        out(i, j, k) = value < spec.cutoff ? 0.0 : value;
      }
    }
  }
  return out;
}

Index3 argmax_position(const Volume3& h) {
  if (h.empty()) throw InvalidArgument("argmax of an empty volume");
  auto data = h.data();
  std::size_t best = data.size();
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (std::isnan(data[n])) continue;
    if (best == data.size() || data[n] > data[best]) best = n;
  }
  if (best == data.size()) throw InvalidData("argmax of an all-NaN volume");
  return h.voxel_of(best);
}

Point3 to_point(const Index3& p) { return Point3(p[0], p[1], p[2]); }

Index3 round_to_voxel(const Point3& p) {
  return {static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y())),
          static_cast<int>(std::lround(p.z()))};
}

LossAndGradient wmse(const Volume3& pred, const Volume3& gt, double fg_weight) {
  require_same_grid(pred, gt, "wmse");
  if (!(fg_weight >= 1.0)) throw InvalidArgument("wmse foreground weight must be >= 1");
  LossAndGradient out{0.0, pred.like()};
  auto p = pred.data();
  auto g = gt.data();
  auto grad = out.grad.data();
  const double inv_n = 1.0 / static_cast<double>(p.size());
  double sum = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) {
    const double w = g[n] > 0.0 ? fg_weight : 1.0;
    const double r = p[n] - g[n];
    sum += w * r * r;
    grad[n] = 2.0 * inv_n * w * r;
  }
  out.loss = sum * inv_n;
  return out;
}

double dice_score(const Volume3& a, const Volume3& b) {
  require_same_grid(a, b, "dice_score");
  auto da = a.data();
  auto db = b.data();
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t n = 0; n < da.size(); ++n) {
    if ((da[n] != 0.0 && da[n] != 1.0) || (db[n] != 0.0 && db[n] != 1.0)) {
      throw InvalidArgument("dice_score expects binary masks");
    }
    const bool in_a = da[n] == 1.0;
    const bool in_b = db[n] == 1.0;
    na += in_a;
    nb += in_b;
    both += in_a && in_b;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

LossAndGradient soft_dice_loss(const Volume3& pred, const Volume3& gt) {
  require_same_grid(pred, gt, "soft_dice_loss");
  auto p = pred.data();
  auto g = gt.data();
  double inter = 0.0, denom = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) {
    inter += p[n] * g[n];
    denom += p[n] + g[n];
  }
  LossAndGradient out{0.0, pred.like()};
  if (denom == 0.0) return out;  // both empty: score 1, flat
  out.loss = 1.0 - 2.0 * inter / denom;
  auto grad = out.grad.data();
  const double inv_d2 = 1.0 / (denom * denom);
  for (std::size_t n = 0; n < p.size(); ++n) grad[n] = -2.0 * (g[n] * denom - inter) * inv_d2;
  return out;
}

}  // namespace dbsloc
