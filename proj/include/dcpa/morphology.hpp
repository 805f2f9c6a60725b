#pragma once

#include "dcpa/mask.hpp"

namespace dcpa {

// Keeps only the maximum-area 8-connected foreground component (ties broken
// by the component whose first row-major pixel comes first). Empty masks pass
// through.
SegMask largest_component(const SegMask& mask);

// Converts background pixels that are not 4-connected to the border's
// background into foreground.
SegMask fill_holes(const SegMask& mask);

}  // namespace dcpa
