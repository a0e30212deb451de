#include "dbsloc/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dbsloc/components.hpp"
#include "dbsloc/errors.hpp"
#include "dbsloc/rng.hpp"

namespace dbsloc {

using nlohmann::json;

namespace {

double normalized_radius(const EllipsoidSpec& e, const Point3& p) {
  return (p - e.center_mm).cwiseQuotient(e.semi_axes_mm).norm();
}

/// Soft indicator: ~1 inside, ~0 outside, with a tanh edge of width w.
double soft_inside(const EllipsoidSpec& e, const Point3& p, double w) {
  const double rho = normalized_radius(e, p);
  return 0.5 * (1.0 + std::tanh((1.0 - rho) * e.semi_axes_mm.minCoeff() / w));
}

bool near(const EllipsoidSpec& e, const Point3& p, double margin) {
  const Point3 d = (p - e.center_mm).cwiseAbs();
  return (d.array() <= e.semi_axes_mm.array() + margin).all();
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

void validate(const PhantomSpec& spec) {
  for (int a = 0; a < 3; ++a)
    if (spec.dims[a] < 2) throw InvalidArgument("phantom dims must be >= 2");
  if (!(spec.spacing_mm > 0.0)) throw InvalidArgument("phantom spacing must be > 0");
  for (const EllipsoidSpec* e : {&spec.head, &spec.ventricle, &spec.left_thalamus, &spec.right_thalamus}) {
    if (!(e->semi_axes_mm.minCoeff() > 0.0)) throw InvalidArgument("ellipsoid semi-axes must be > 0");
  }
  if (!(spec.ventricle_enlargement >= 0.0)) throw InvalidArgument("ventricle enlargement must be >= 0");
  if (!(spec.displacement_ramp_mm > 0.0)) throw InvalidArgument("displacement ramp must be > 0");
  if (!(spec.noise_std >= 0.0)) throw InvalidArgument("noise_std must be >= 0");
  if (!(spec.bias_field_amplitude >= 0.0 && spec.bias_field_amplitude < 1.0)) {
    throw InvalidArgument("bias field amplitude must be in [0,1)");
  }
  if (!(spec.nucleus_sigma_mm > 0.0) || !(spec.edge_width_mm > 0.0)) {
    throw InvalidArgument("nucleus sigma and edge width must be > 0");
  }
  if (spec.crop_extent < 1) throw InvalidArgument("crop extent must be >= 1");
}

}  // namespace

double lateral_displacement(const PhantomSpec& spec, double x_mm) {
  const double mid = (spec.dims[0] - 1) / 2.0 * spec.spacing_mm;
  const double offset = x_mm - mid;
  const double sign = offset < 0.0 ? -1.0 : 1.0;
  return sign * spec.ventricle_enlargement * smoothstep(std::abs(offset) / spec.displacement_ramp_mm);
}

PhantomCase generate_phantom(const PhantomSpec& spec) {
  validate(spec);
  const Index3& d = spec.dims;
  const double h = spec.spacing_mm;
  const double mid = (d[0] - 1) / 2.0 * h;

  // Undisplaced x for every output column: solve x + u(x) = y by bisection
  // (x + u(x) is strictly increasing).
  std::vector<double> base_x(d[0]);
  for (int i = 0; i < d[0]; ++i) {
    const double y = i * h;
    double lo = y - spec.ventricle_enlargement - 1.0;
    double hi = y + spec.ventricle_enlargement + 1.0;
    for (int it = 0; it < 80; ++it) {
      const double m = 0.5 * (lo + hi);
      if (m + lateral_displacement(spec, m) < y) {
        lo = m;
      } else {
        hi = m;
      }
    }
    base_x[i] = 0.5 * (lo + hi);
  }

  // Targets on the undisplaced grid, then carried by the displacement.
  std::array<TargetPoint, 2> targets;
  std::array<Point3, 2> base_targets;
  const std::array<const EllipsoidSpec*, 2> thalami{&spec.left_thalamus, &spec.right_thalamus};
  for (int s = 0; s < 2; ++s) {
    const EllipsoidSpec& e = *thalami[s];
    const double medial = e.center_mm.x() < mid ? 1.0 : -1.0;
    Point3 t = e.center_mm + Point3(medial * spec.target_fraction.x() * e.semi_axes_mm.x(),
                                    spec.target_fraction.y() * e.semi_axes_mm.y(),
                                    spec.target_fraction.z() * e.semi_axes_mm.z());
    for (int a = 0; a < 3; ++a) t[a] = std::round(t[a] / h) * h;
    base_targets[s] = t;
    Point3 moved = t;
    moved.x() += lateral_displacement(spec, t.x());
    targets[s].position = moved / h;
    targets[s].side = s == 0 ? Side::Left : Side::Right;
  }

  const double w = spec.edge_width_mm;
  const double margin = 6.0 * w + 1.0;
  const double nucleus_reach = 5.0 * spec.nucleus_sigma_mm;
  const double inv_two_var = 1.0 / (2.0 * spec.nucleus_sigma_mm * spec.nucleus_sigma_mm);

  Volume3 image(d, {h, h, h});
  Volume3 left(d, {h, h, h});
  Volume3 right(d, {h, h, h});
  std::array<Volume3*, 2> masks{&left, &right};

  for (int k = 0; k < d[2]; ++k) {
    for (int j = 0; j < d[1]; ++j) {
      for (int i = 0; i < d[0]; ++i) {
        const Point3 p(base_x[i], j * h, k * h);
        double v = spec.head.intensity * soft_inside(spec.head, p, w);
        if (near(spec.ventricle, p, margin)) {
          v += (spec.ventricle.intensity - spec.head.intensity) * soft_inside(spec.ventricle, p, w);
        }
        for (int s = 0; s < 2; ++s) {
          const EllipsoidSpec& e = *thalami[s];
          if (!near(e, p, margin)) continue;
          const double inside = soft_inside(e, p, w);
          v += (e.intensity - spec.head.intensity) * inside;
          const Point3 dt = p - base_targets[s];
          if (dt.cwiseAbs().maxCoeff() <= nucleus_reach) {
            v += spec.nucleus_boost * std::exp(-dt.squaredNorm() * inv_two_var) * inside;
          }
          if (normalized_radius(e, p) <= 1.0) (*masks[s])(i, j, k) = 1.0;
        }
        image(i, j, k) = v;
      }
    }
  }

  for (std::size_t n = 0; n < left.size(); ++n) {
    if (left.data()[n] > 0.5 && right.data()[n] > 0.5) throw SpecInfeasible("thalami overlap");
  }
  for (int s = 0; s < 2; ++s) {
    const Index3 t = round_to_voxel(targets[s].position);
    if (!masks[s]->contains(t) || (*masks[s])[t] != 1.0) {
      throw SpecInfeasible(std::string(to_string(targets[s].side)) + " target lies outside its thalamus");
    }
    Index3 c;
    try {
      c = bounding_box_center(*masks[s]);
    } catch (const EmptyComponent&) {
      throw SpecInfeasible(std::string(to_string(targets[s].side)) + " thalamus lies outside the grid");
    }
    for (int a = 0; a < 3; ++a) {
      const int lo = c[a] - spec.crop_extent / 2;
      if (lo < 0 || lo + spec.crop_extent > d[a]) {
        throw SpecInfeasible("grid too small to contain the crop around the " +
                             std::string(to_string(targets[s].side)) + " thalamus");
      }
    }
  }

  std::mt19937_64 rng(mix_seed(spec.seed, 0x7068616e746f6dULL));
  if (spec.bias_field_amplitude > 0.0) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::array<double, 6> c{};
    for (double& x : c) x = coef(rng);
    const double norm = std::accumulate(c.begin(), c.end(), 0.0, [](double acc, double x) { return acc + std::abs(x); });
    for (double& x : c) x /= norm;
    for (int k = 0; k < d[2]; ++k) {
      const double z = 2.0 * k / (d[2] - 1) - 1.0;
      for (int j = 0; j < d[1]; ++j) {
        const double y = 2.0 * j / (d[1] - 1) - 1.0;
        for (int i = 0; i < d[0]; ++i) {
          const double x = 2.0 * i / (d[0] - 1) - 1.0;
          const double poly = c[0] * x + c[1] * y + c[2] * z + c[3] * x * y + c[4] * y * z + c[5] * x * z;
          image(i, j, k) *= 1.0 + spec.bias_field_amplitude * poly;
        }
      }
    }
  }
  if (spec.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    for (double& v : image.data()) v = std::max(0.0, v + noise(rng));
  }

  PhantomCase out;
  out.image = rescale_intensity(image);
  out.left_mask = std::move(left);
  out.right_mask = std::move(right);
  out.targets = targets;
  out.spec = spec;
  return out;
}

std::vector<CohortEntry> plan_cohort(int n, const CohortMix& mix, std::uint64_t seed, const PhantomSpec& base) {
  if (n < 1) throw InvalidArgument("cohort size must be >= 1");
  if (mix.hard_count < 0 || mix.hard_count > n || mix.injected_failures < 0 || mix.injected_failures > n) {
    throw InvalidArgument("cohort mix counts must lie in [0, n]");
  }

  auto lowest_ranked = [&](std::uint64_t stream, int count) {
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
      return mix_seed(seed ^ stream, static_cast<std::uint64_t>(a)) < mix_seed(seed ^ stream, static_cast<std::uint64_t>(b));
    });
    std::vector<bool> chosen(n, false);
    for (int r = 0; r < count; ++r) chosen[ids[r]] = true;
    return chosen;
  };
  const std::vector<bool> hard = lowest_ranked(0x68617264ULL, mix.hard_count);
  const std::vector<bool> failing = lowest_ranked(0x6661696cULL, mix.injected_failures);

  std::vector<CohortEntry> entries;
  entries.reserve(n);
  for (int i = 0; i < n; ++i) {
    CohortEntry e;
    e.id = i;
    e.hard = hard[i];
    const std::uint64_t case_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(case_seed);
    std::uniform_real_distribution<double> jitter(-2.0, 2.0);
    std::uniform_real_distribution<double> axis_jitter(-1.0, 1.0);

    PhantomSpec s = base;
    s.seed = case_seed;
    // Mirror-symmetric geometry perturbation keeps both thalami equally far
    // from the midline.
    const Point3 shift(std::round(jitter(rng)), std::round(jitter(rng)), std::round(jitter(rng)));
    s.left_thalamus.center_mm += Point3(-shift.x(), shift.y(), shift.z());
    s.right_thalamus.center_mm += Point3(shift.x(), shift.y(), shift.z());
    const Point3 axes(axis_jitter(rng), axis_jitter(rng), axis_jitter(rng));
    s.left_thalamus.semi_axes_mm += axes;
    s.right_thalamus.semi_axes_mm += axes;
    s.noise_std = base.noise_std;
    s.bias_field_amplitude = base.bias_field_amplitude;
    if (e.hard) {
      s.ventricle_enlargement = std::uniform_real_distribution<double>(6.0, 10.0)(rng);
      s.noise_std = std::max(base.noise_std, 0.05);
    }
    e.spec = s;
    if (failing[i]) {
      e.injected_failure = (mix_seed(seed ^ 0x73696465ULL, static_cast<std::uint64_t>(i)) & 1U) ? Side::Right : Side::Left;
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<CohortCase> generate_cohort(int n, const CohortMix& mix, std::uint64_t seed, const PhantomSpec& base) {
  std::vector<CohortCase> out;
  for (CohortEntry& e : plan_cohort(n, mix, seed, base)) {
    PhantomCase c = generate_phantom(e.spec);
    out.push_back({std::move(e), std::move(c)});
  }
  return out;
}

namespace {

json point_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

Point3 point_from(const json& j) { return Point3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

json ellipsoid_json(const EllipsoidSpec& e) {
  return {{"center_mm", point_json(e.center_mm)}, {"semi_axes_mm", point_json(e.semi_axes_mm)}, {"intensity", e.intensity}};
}

EllipsoidSpec ellipsoid_from(const json& j) {
  return {point_from(j.at("center_mm")), point_from(j.at("semi_axes_mm")), j.at("intensity").get<double>()};
}

}  // namespace

json to_json(const PhantomSpec& s) {
  return {
      {"dims", {s.dims[0], s.dims[1], s.dims[2]}},
      {"spacing_mm", s.spacing_mm},
      {"head", ellipsoid_json(s.head)},
      {"ventricle", ellipsoid_json(s.ventricle)},
      {"left_thalamus", ellipsoid_json(s.left_thalamus)},
      {"right_thalamus", ellipsoid_json(s.right_thalamus)},
      {"target_fraction", point_json(s.target_fraction)},
      {"nucleus_sigma_mm", s.nucleus_sigma_mm},
      {"nucleus_boost", s.nucleus_boost},
      {"edge_width_mm", s.edge_width_mm},
      {"ventricle_enlargement", s.ventricle_enlargement},
      {"displacement_ramp_mm", s.displacement_ramp_mm},
      {"noise_std", s.noise_std},
      {"bias_field_amplitude", s.bias_field_amplitude},
      {"crop_extent", s.crop_extent},
      {"seed", s.seed},
  };
}

PhantomSpec phantom_spec_from_json(const json& j) {
  PhantomSpec s;
  try {
    if (j.contains("dims")) s.dims = {j["dims"].at(0).get<int>(), j["dims"].at(1).get<int>(), j["dims"].at(2).get<int>()};
    s.spacing_mm = j.value("spacing_mm", s.spacing_mm);
    if (j.contains("head")) s.head = ellipsoid_from(j["head"]);
    if (j.contains("ventricle")) s.ventricle = ellipsoid_from(j["ventricle"]);
    if (j.contains("left_thalamus")) s.left_thalamus = ellipsoid_from(j["left_thalamus"]);
    if (j.contains("right_thalamus")) s.right_thalamus = ellipsoid_from(j["right_thalamus"]);
    if (j.contains("target_fraction")) s.target_fraction = point_from(j["target_fraction"]);
    s.nucleus_sigma_mm = j.value("nucleus_sigma_mm", s.nucleus_sigma_mm);
    s.nucleus_boost = j.value("nucleus_boost", s.nucleus_boost);
    s.edge_width_mm = j.value("edge_width_mm", s.edge_width_mm);
    s.ventricle_enlargement = j.value("ventricle_enlargement", s.ventricle_enlargement);
    s.displacement_ramp_mm = j.value("displacement_ramp_mm", s.displacement_ramp_mm);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.bias_field_amplitude = j.value("bias_field_amplitude", s.bias_field_amplitude);
    s.crop_extent = j.value("crop_extent", s.crop_extent);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed phantom spec: ") + e.what());
  }
  return s;
}

}  // namespace dbsloc
