#include "pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace intona {

void write_pgm(const std::string& path, const Mat<double>& m) {
  require(m.rows > 0 && m.cols > 0, Status::InvalidArgument,
          "write_pgm: empty matrix");
  double lo = m.v[0], hi = m.v[0];
  for (double x : m.v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double span = hi - lo;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), Status::Io, "cannot write pgm file: " + path);
  f << "P5\n" << m.cols << " " << m.rows << "\n255\n";
  std::string bytes(m.size(), '\0');
  for (size_t i = 0; i < m.size(); ++i) {
    const double t = span > 0.0 ? (m.v[i] - lo) / span : 0.0;
    bytes[i] = static_cast<char>(
        static_cast<unsigned char>(std::lrint(t * 255.0)));
  }
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(f.good(), Status::Io, "short write on pgm file: " + path);
}

}  // namespace intona
