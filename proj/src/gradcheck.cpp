#include "csf/gradcheck.hpp"

#include <cmath>
#include <vector>

namespace csf {

GradCheckReport grad_check(const std::function<double(bool with_grad)>& loss,
                           std::span<Param* const> params, double h) {
    constexpr double kEps = 1e-8;
    for (Param* p : params) p->zero_grad();
    const double base = loss(true);
    if (!std::isfinite(base)) throw NumericError("grad_check: non-finite forward value");

    std::vector<std::vector<double>> ad;
    ad.reserve(params.size());
    for (Param* p : params) ad.push_back(p->grad.vec());

    GradCheckReport report;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Param* p = params[pi];
        double ad_sq = 0.0, fd_sq = 0.0, diff_sq = 0.0;
        for (size_t k = 0; k < p->value.size(); ++k) {
            const double orig = p->value.vec()[k];
            p->value.vec()[k] = orig + h;
            const double fp = loss(false);
            p->value.vec()[k] = orig - h;
            const double fm = loss(false);
            p->value.vec()[k] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("grad_check: non-finite value at perturbed point");
            const double g_fd = (fp - fm) / (2.0 * h);
            const double g_ad = ad[pi][k];
            ad_sq += g_ad * g_ad;
            fd_sq += g_fd * g_fd;
            diff_sq += (g_ad - g_fd) * (g_ad - g_fd);
        }
        const double ad_norm = std::sqrt(ad_sq);
        const double fd_norm = std::sqrt(fd_sq);
        const double denom = std::max({ad_norm, fd_norm, kEps});
        const double rel = std::sqrt(diff_sq) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_param = p->name;
            report.worst_ad_norm = ad_norm;
            report.worst_fd_norm = fd_norm;
        }
    }
    return report;
}

}  // namespace csf
