#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dbsloc/predictors.hpp"

namespace dbsloc {

/// Plain stack of same-padded 3x3x3 convolutions. `channels` lists the output
/// width of each layer; the input has one channel and the last entry must be 1.
/// Hidden layers use ReLU, the output a sigmoid.
struct ConvNetSpec {
  std::vector<int> channels{8, 16, 16, 8, 1};
  double dropout_rate = 0.5;

  int hidden_layers() const { return static_cast<int>(channels.size()) - 1; }
  /// Dropout sits after the deepest half of the hidden layers, i.e. the
  /// middle of the stack where a U-Net would have its bottleneck.
  std::vector<int> dropout_layers() const;
};

void validate(const ConvNetSpec& spec);

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<double> weights;  // [out][in][kz][ky][kx]
  std::vector<double> bias;     // [out]
};

class ConvNet final : public Localizer {
 public:
  /// Xavier-uniform weights drawn from `seed`.
  static ConvNet seeded(const ConvNetSpec& spec, std::uint64_t seed);
  /// Reads a JSON manifest plus its float32 payload; throws InvalidModel when
  /// the shapes disagree with `spec`.
  static ConvNet load(const ConvNetSpec& spec, const std::filesystem::path& manifest);

  ConvNet(ConvNetSpec spec, std::vector<ConvLayer> layers);

  void save(const std::filesystem::path& manifest) const;

  Volume3 predict(const Volume3& volume, bool stochastic, std::uint64_t seed) const override;

  const ConvNetSpec& spec() const { return spec_; }
  const std::vector<ConvLayer>& layers() const { return layers_; }

 private:
  ConvNetSpec spec_;
  std::vector<ConvLayer> layers_;
  std::vector<bool> dropout_after_;
};

Volume3 convnet_forward(const ConvNet& net, const Volume3& v, bool stochastic, std::uint64_t seed);

/// Inverted dropout in place: each element is zeroed with probability `rate`
/// and survivors are scaled by 1/(1-rate). The mask is a pure function of
/// (seed, element index).
void apply_dropout(std::vector<double>& activations, double rate, std::uint64_t seed);

}  // namespace dbsloc
