#include "dbsloc/convnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "dbsloc/errors.hpp"
#include "dbsloc/rng.hpp"

namespace dbsloc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kKernel = 3;
constexpr int kTaps = kKernel * kKernel * kKernel;

using Channels = std::vector<std::vector<double>>;

/// Same-padded 3x3x3 convolution of every input channel into every output.
Channels convolve(const ConvLayer& layer, const Channels& in, const Index3& d) {
  const std::size_t nvox = static_cast<std::size_t>(d[0]) * d[1] * d[2];
  const std::size_t sy = static_cast<std::size_t>(d[0]), sz = sy * d[1];
  Channels out(layer.out_channels, std::vector<double>(nvox));
  for (int o = 0; o < layer.out_channels; ++o) {
    std::vector<double>& dst = out[o];
    std::fill(dst.begin(), dst.end(), layer.bias[o]);
    for (int c = 0; c < layer.in_channels; ++c) {
      const double* w = &layer.weights[(static_cast<std::size_t>(o) * layer.in_channels + c) * kTaps];
      const std::vector<double>& src = in[c];
      for (int kz = -1; kz <= 1; ++kz) {
        for (int ky = -1; ky <= 1; ++ky) {
          for (int kx = -1; kx <= 1; ++kx) {
            const double wt = w[(kz + 1) * 9 + (ky + 1) * 3 + (kx + 1)];
            if (wt == 0.0) continue;
            const int x0 = std::max(0, -kx), x1 = std::min(d[0], d[0] - kx);
            const int y0 = std::max(0, -ky), y1 = std::min(d[1], d[1] - ky);
            const int z0 = std::max(0, -kz), z1 = std::min(d[2], d[2] - kz);
            for (int z = z0; z < z1; ++z) {
              for (int y = y0; y < y1; ++y) {
                const std::size_t row = z * sz + y * sy;
                const std::size_t src_row = (z + kz) * sz + (y + ky) * sy;
                double* out_p = dst.data() + row;
                const double* in_p = src.data() + src_row;
                for (int x = x0; x < x1; ++x) out_p[x] += wt * in_p[x + kx];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

std::uint32_t le32(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
  }
  return x;
}

}  // namespace

std::vector<int> ConvNetSpec::dropout_layers() const {
  const int hidden = hidden_layers();
  if (hidden <= 0) return {};
  const int count = std::max(1, hidden / 2);
  const int first = (hidden - count) / 2;
  std::vector<int> out;
  for (int l = first; l < first + count; ++l) out.push_back(l);
  return out;
}

void validate(const ConvNetSpec& spec) {
  if (spec.channels.empty() || spec.channels.back() != 1) throw InvalidModel("conv net must end in one channel");
  for (int c : spec.channels)
    if (c < 1) throw InvalidModel("conv net channel counts must be positive");
  if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0)) throw InvalidModel("dropout rate must be in [0,1)");
}

void apply_dropout(std::vector<double>& activations, double rate, std::uint64_t seed) {
  if (rate <= 0.0) return;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t n = 0; n < activations.size(); ++n) {
    const double u = unit_from_bits(mix_seed(seed, n));
    activations[n] = u < rate ? 0.0 : activations[n] * keep_scale;
  }
}

ConvNet::ConvNet(ConvNetSpec spec, std::vector<ConvLayer> layers) : spec_(std::move(spec)), layers_(std::move(layers)) {
  validate(spec_);
  if (layers_.size() != spec_.channels.size()) throw InvalidModel("layer count does not match spec");
  int in = 1;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const ConvLayer& layer = layers_[l];
    if (layer.in_channels != in || layer.out_channels != spec_.channels[l]) {
      throw InvalidModel("layer " + std::to_string(l) + " shape does not match spec");
    }
    if (layer.weights.size() != static_cast<std::size_t>(layer.in_channels) * layer.out_channels * kTaps ||
        layer.bias.size() != static_cast<std::size_t>(layer.out_channels)) {
      throw InvalidModel("layer " + std::to_string(l) + " has wrong parameter count");
    }
    in = layer.out_channels;
  }
  dropout_after_.assign(layers_.size(), false);
  for (int l : spec_.dropout_layers()) dropout_after_[l] = true;
}

ConvNet ConvNet::seeded(const ConvNetSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(mix_seed(seed, 0x636f6e766e6574ULL));
  std::vector<ConvLayer> layers;
  int in = 1;
  for (int out : spec.channels) {
    ConvLayer layer;
    layer.in_channels = in;
    layer.out_channels = out;
    const double bound = std::sqrt(6.0 / ((in + out) * kTaps));
    std::uniform_real_distribution<double> dist(-bound, bound);
    layer.weights.resize(static_cast<std::size_t>(in) * out * kTaps);
    for (double& w : layer.weights) w = dist(rng);
    layer.bias.assign(out, 0.0);
    layers.push_back(std::move(layer));
    in = out;
  }
  return ConvNet(spec, std::move(layers));
}

void ConvNet::save(const fs::path& manifest) const {
  const fs::path payload_name = manifest.stem().string() + ".weights.raw";
  json layers = json::array();
  std::vector<std::uint32_t> words;
  for (const ConvLayer& layer : layers_) {
    layers.push_back({{"in", layer.in_channels}, {"out", layer.out_channels}, {"kernel", {3, 3, 3}}});
    for (double w : layer.weights) words.push_back(le32(std::bit_cast<std::uint32_t>(static_cast<float>(w))));
    for (double b : layer.bias) words.push_back(le32(std::bit_cast<std::uint32_t>(static_cast<float>(b))));
  }
  const json doc = {{"format", "dbsloc-convnet"},
                    {"dtype", "f32"},
                    {"layout", "per layer: weights[out][in][kz][ky][kx] then bias[out]"},
                    {"payload", payload_name.string()},
                    {"layers", layers}};
  std::ofstream m(manifest, std::ios::trunc);
  if (!m) throw IoError("cannot write " + manifest.string());
  m << doc.dump(2) << '\n';
  std::ofstream p(manifest.parent_path() / payload_name, std::ios::binary | std::ios::trunc);
  if (!p) throw IoError("cannot write weight payload next to " + manifest.string());
  p.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
}

ConvNet ConvNet::load(const ConvNetSpec& spec, const fs::path& manifest) {
  validate(spec);
  json doc;
  {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open " + manifest.string());
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw InvalidModel(std::string("malformed weight manifest: ") + e.what());
    }
  }
  std::vector<ConvLayer> layers;
  std::size_t total = 0;
  fs::path payload;
  try {
    if (doc.at("dtype").get<std::string>() != "f32") throw InvalidModel("weight dtype must be f32");
    payload = manifest.parent_path() / doc.at("payload").get<std::string>();
    for (const auto& l : doc.at("layers")) {
      ConvLayer layer;
      layer.in_channels = l.at("in").get<int>();
      layer.out_channels = l.at("out").get<int>();
      if (l.at("kernel") != json({3, 3, 3})) throw InvalidModel("only 3x3x3 kernels are supported");
      if (layer.in_channels < 1 || layer.out_channels < 1) throw InvalidModel("non-positive channel count");
      total += static_cast<std::size_t>(layer.in_channels) * layer.out_channels * kTaps + layer.out_channels;
      layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw InvalidModel(std::string("malformed weight manifest: ") + e.what());
  }
  if (layers.size() != spec.channels.size()) throw InvalidModel("weight file layer count does not match spec");

  std::error_code ec;
  const auto bytes = fs::file_size(payload, ec);
  if (ec) throw IoError("cannot stat " + payload.string());
  if (bytes != total * 4) throw InvalidModel("weight payload size does not match manifest shapes");
  std::vector<std::uint32_t> words(total);
  std::ifstream in(payload, std::ios::binary);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(total * 4));
  if (!in) throw IoError("short read on " + payload.string());

  std::size_t pos = 0;
  auto next = [&] { return static_cast<double>(std::bit_cast<float>(le32(words[pos++]))); };
  for (ConvLayer& layer : layers) {
    layer.weights.resize(static_cast<std::size_t>(layer.in_channels) * layer.out_channels * kTaps);
    for (double& w : layer.weights) w = next();
    layer.bias.resize(layer.out_channels);
    for (double& b : layer.bias) b = next();
  }
  return ConvNet(spec, std::move(layers));
}

Volume3 ConvNet::predict(const Volume3& volume, bool stochastic, std::uint64_t seed) const {
  const Index3& d = volume.dims();
  Channels act(1, std::vector<double>(volume.data().begin(), volume.data().end()));
  for (const double a : act[0])
    if (!std::isfinite(a)) throw InvalidData("conv net input has non-finite intensities");

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    act = convolve(layers_[l], act, d);
    const bool last = l + 1 == layers_.size();
    for (std::size_t c = 0; c < act.size(); ++c) {
      std::vector<double>& ch = act[c];
      if (last) {
        for (double& a : ch) a = 1.0 / (1.0 + std::exp(-a));
      } else {
        for (double& a : ch) a = std::max(0.0, a);
        if (stochastic && dropout_after_[l]) {
          apply_dropout(ch, spec_.dropout_rate, mix_seed(seed, (static_cast<std::uint64_t>(l) << 32) | c));
        }
      }
    }
  }
  return Volume3(d, volume.spacing(), std::move(act[0]));
}

Volume3 convnet_forward(const ConvNet& net, const Volume3& v, bool stochastic, std::uint64_t seed) {
  return net.predict(v, stochastic, seed);
}

}  // namespace dbsloc
