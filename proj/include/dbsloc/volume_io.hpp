#pragma once

#include <filesystem>

#include "dbsloc/volume.hpp"

namespace dbsloc {

/// Two-file volume format: `<stem>.json` holds
///   {"dims":[x,y,z],"spacing":[x,y,z],"dtype":"f32","order":"x-fastest","axis0":"LR"}
/// and `<stem>.raw` holds dims[0]*dims[1]*dims[2] little-endian float32 values.
struct VolumeFiles {
  std::filesystem::path header;
  std::filesystem::path payload;

  static VolumeFiles from_stem(const std::filesystem::path& stem);
};

/// Values are narrowed to float32 on write.
void write_volume(const Volume3& v, const VolumeFiles& files);
void write_volume(const Volume3& v, const std::filesystem::path& stem);

/// Throws IoError on unreadable files, malformed headers or a payload whose
/// byte length disagrees with the header dims.
Volume3 read_volume(const VolumeFiles& files);
Volume3 read_volume(const std::filesystem::path& stem);

}  // namespace dbsloc
