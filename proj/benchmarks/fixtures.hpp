#pragma once

#include "dualview/image.hpp"
#include "dualview/synthgen.hpp"

namespace dualview::bench {

/// Photo-like source of side n, fixed seed so runs are comparable.
inline Image photo(int n) { return procedural_source(7, n, n); }

}  // namespace dualview::bench
