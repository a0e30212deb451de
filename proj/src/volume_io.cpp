#include "dbsloc/volume_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dbsloc/errors.hpp"

namespace dbsloc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint32_t to_little_endian(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
  }
  return x;
}

}  // namespace

VolumeFiles VolumeFiles::from_stem(const fs::path& stem) {
  fs::path header = stem;
  fs::path payload = stem;
  header += ".json";
  payload += ".raw";
  return {header, payload};
}

void write_volume(const Volume3& v, const VolumeFiles& files) {
  const json header = {
      {"dims", {v.dims()[0], v.dims()[1], v.dims()[2]}},
      {"spacing", {v.spacing()[0], v.spacing()[1], v.spacing()[2]}},
      {"dtype", "f32"},
      {"order", "x-fastest"},
      {"axis0", "LR"},
  };
  {
    std::ofstream out(files.header, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + files.header.string() + " for writing");
    out << header.dump() << '\n';
    if (!out) throw IoError("write failed: " + files.header.string());
  }

  std::vector<std::uint32_t> words(v.size());
  auto data = v.data();
  for (std::size_t n = 0; n < words.size(); ++n) {
    words[n] = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(data[n])));
  }
  std::ofstream out(files.payload, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + files.payload.string() + " for writing");
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (!out) throw IoError("write failed: " + files.payload.string());
}

void write_volume(const Volume3& v, const fs::path& stem) { write_volume(v, VolumeFiles::from_stem(stem)); }

Volume3 read_volume(const VolumeFiles& files) {
  json header;
  {
    std::ifstream in(files.header, std::ios::binary);
    if (!in) throw IoError("cannot open " + files.header.string());
    try {
      in >> header;
    } catch (const json::exception& e) {
      throw IoError("malformed volume header " + files.header.string() + ": " + e.what());
    }
  }

  Index3 dims{};
  Spacing3 spacing{};
  try {
    if (header.at("dtype").get<std::string>() != "f32") throw IoError("unsupported dtype");
    if (header.at("order").get<std::string>() != "x-fastest") throw IoError("unsupported voxel order");
    if (header.at("axis0").get<std::string>() != "LR") throw IoError("unsupported axis convention");
    const auto& d = header.at("dims");
    const auto& s = header.at("spacing");
    if (d.size() != 3 || s.size() != 3) throw IoError("dims and spacing need 3 entries");
    for (int a = 0; a < 3; ++a) {
      dims[a] = d.at(a).get<int>();
      spacing[a] = s.at(a).get<double>();
      if (dims[a] < 1 || !(spacing[a] > 0.0)) throw IoError("non-positive dims or spacing");
    }
  } catch (const json::exception& e) {
    throw IoError("malformed volume header " + files.header.string() + ": " + e.what());
  }

  const std::size_t count =
      static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
  std::error_code ec;
  const auto bytes = fs::file_size(files.payload, ec);
  if (ec) throw IoError("cannot stat " + files.payload.string());
  if (bytes != count * 4) {
    throw IoError("payload " + files.payload.string() + " has " + std::to_string(bytes) + " bytes, expected " +
                  std::to_string(count * 4));
  }

  std::vector<std::uint32_t> words(count);
  std::ifstream in(files.payload, std::ios::binary);
  if (!in) throw IoError("cannot open " + files.payload.string());
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * 4));
  if (!in) throw IoError("short read on " + files.payload.string());

  std::vector<double> data(count);
  for (std::size_t n = 0; n < count; ++n) {
    data[n] = static_cast<double>(std::bit_cast<float>(to_little_endian(words[n])));
  }
  return Volume3(dims, spacing, std::move(data));
}

Volume3 read_volume(const fs::path& stem) { return read_volume(VolumeFiles::from_stem(stem)); }

}  // namespace dbsloc
