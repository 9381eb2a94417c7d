#pragma once

#include <functional>
#include <span>
#include <string>

#include "csf/tape.hpp"

namespace csf {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    double worst_ad_norm = 0.0;
    double worst_fd_norm = 0.0;
};

// Compares reverse-mode gradients against central finite differences over
// every entry of every parameter. Per parameter the comparison is norm-based,
// |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8) with |.| the Euclidean norm over
// the tensor; per-entry relative error is meaningless below the
// finite-difference noise floor (~1e-8 in gradient units at float64), which
// individual near-zero gradient entries routinely undercut.
//
// loss(with_grad) must rebuild the forward graph from the current parameter
// values and return the scalar loss; when with_grad is true it must also run
// backward and flush gradients into the parameters.
GradCheckReport grad_check(const std::function<double(bool with_grad)>& loss,
                           std::span<Param* const> params, double h = 1e-5);

}  // namespace csf
