#pragma once

#include <vector>

#include "error.hpp"

namespace intona {

struct GaussianPosterior {
  std::vector<double> mu;
  std::vector<double> sigma;  // strictly positive

  int dim() const { return static_cast<int>(mu.size()); }
  void validate() const {
    require(mu.size() == sigma.size(), Status::ShapeMismatch,
            "posterior mu/sigma dimensions differ");
    for (double s : sigma)
      require(s > 0.0, Status::InvalidArgument,
              "posterior sigma must be strictly positive");
  }
};

struct LatentVector {
  std::vector<double> z;
  int dim() const { return static_cast<int>(z.size()); }
};

struct NoiseVector {
  std::vector<double> eps;
  int dim() const { return static_cast<int>(eps.size()); }
};

}  // namespace intona
