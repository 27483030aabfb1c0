#pragma once

#include <stdexcept>
#include <string>

namespace fmer {

struct insufficient_data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct degenerate_basis_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct rank_deficient_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct undefined_metric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fmer
