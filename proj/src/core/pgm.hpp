#pragma once

#include <string>

#include "mat.hpp"

namespace intona {

// Binary PGM (P5): one pixel per matrix cell, row-major, values scaled
// linearly onto 0..255 from the image's own [min, max].
void write_pgm(const std::string& path, const Mat<double>& m);

}  // namespace intona
