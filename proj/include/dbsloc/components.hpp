#pragma once

#include "dbsloc/volume.hpp"

namespace dbsloc {

enum class Connectivity { Six = 6, TwentySix = 26 };

/// Keeps the component with the most voxels (value > 0.5 is foreground).
/// Ties go to the component whose first voxel has the smallest linear index.
/// Throws EmptyComponent on an empty mask.
Volume3 largest_connected_component(const Volume3& mask, Connectivity connectivity = Connectivity::TwentySix);

/// floor((min + max) / 2) per axis over the foreground voxels.
Index3 bounding_box_center(const Volume3& mask);

}  // namespace dbsloc
