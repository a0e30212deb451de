#include "dbsloc/transform_sampling.hpp"

#include <random>

#include "dbsloc/errors.hpp"
#include "dbsloc/rng.hpp"

namespace dbsloc {

using nlohmann::json;

TransformPriors TransformPriors::identity() {
  TransformPriors p;
  p.translation = {0.0, 0.0};
  p.rotation_deg = {0.0, 0.0};
  p.sample_curve = false;
  return p;
}

void validate(const TransformPriors& priors) {
  for (const Range& r : {priors.translation, priors.rotation_deg, priors.curve_control}) {
    if (!(r.lo <= r.hi)) throw InvalidArgument("prior range must satisfy lo <= hi");
  }
  if (priors.curve_control.lo < 0.0 || priors.curve_control.hi > 1.0) {
    throw InvalidArgument("curve control range must lie within [0,1]");
  }
}

TransformPair sample_transform(const TransformPriors& priors, std::uint64_t seed, const Point3& pivot) {
  validate(priors);
  std::mt19937_64 rng(mix_seed(seed, 0x7472616e73666f72ULL));
  auto uniform = [&](const Range& r) {
    if (r.lo == r.hi) return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  };

  TransformPair pair;
  for (int a = 0; a < 3; ++a) pair.spatial.translation[a] = uniform(priors.translation);

  std::normal_distribution<double> gauss(0.0, 1.0);
  Point3 axis;
  do {
    axis = Point3(gauss(rng), gauss(rng), gauss(rng));
  } while (axis.norm() < 1e-12);
  pair.spatial.axis = axis.normalized();
  pair.spatial.angle_deg = uniform(priors.rotation_deg);
  pair.spatial.pivot = pivot;

  if (priors.sample_curve) {
    const Point2 p1(uniform(priors.curve_control), uniform(priors.curve_control));
    const Point2 p2(uniform(priors.curve_control), uniform(priors.curve_control));
    pair.intensity = IntensityCurve(p1, p2);
  }
  return pair;
}

json to_json(const TransformPair& pair) {
  const auto& s = pair.spatial;
  return {
      {"axis", {s.axis.x(), s.axis.y(), s.axis.z()}},
      {"angle_deg", s.angle_deg},
      {"translation", {s.translation.x(), s.translation.y(), s.translation.z()}},
      {"curve",
       {{"p1", {pair.intensity.p1().x(), pair.intensity.p1().y()}},
        {"p2", {pair.intensity.p2().x(), pair.intensity.p2().y()}}}},
  };
}

TransformPair transform_pair_from_json(const json& j) {
  try {
    TransformPair pair;
    const auto& axis = j.at("axis");
    const auto& t = j.at("translation");
    for (int a = 0; a < 3; ++a) {
      pair.spatial.axis[a] = axis.at(a).get<double>();
      pair.spatial.translation[a] = t.at(a).get<double>();
    }
    pair.spatial.angle_deg = j.at("angle_deg").get<double>();
    const auto& c = j.at("curve");
    pair.intensity = IntensityCurve(Point2(c.at("p1").at(0).get<double>(), c.at("p1").at(1).get<double>()),
                                    Point2(c.at("p2").at(0).get<double>(), c.at("p2").at(1).get<double>()));
    validate(pair.spatial);
    return pair;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed transform record: ") + e.what());
  }
}

json to_json(const TransformPriors& p) {
  return {
      {"translation", {p.translation.lo, p.translation.hi}},
      {"rotation_deg", {p.rotation_deg.lo, p.rotation_deg.hi}},
      {"curve_control", {p.curve_control.lo, p.curve_control.hi}},
      {"sample_curve", p.sample_curve},
  };
}

TransformPriors priors_from_json(const json& j) {
  TransformPriors p;
  auto range = [&](const char* key, Range& r) {
    if (j.contains(key)) r = {j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>()};
  };
  range("translation", p.translation);
  range("rotation_deg", p.rotation_deg);
  range("curve_control", p.curve_control);
  if (j.contains("sample_curve")) p.sample_curve = j.at("sample_curve").get<bool>();
  validate(p);
  return p;
}

}  // namespace dbsloc
