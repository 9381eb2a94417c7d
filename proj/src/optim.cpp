#include "csf/optim.hpp"

#include <cmath>

namespace csf {

void AdamW::step(std::span<Param* const> params) {
    if (state_.empty()) {
        state_.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state_[i].m = Matrix(params[i]->value.rows(), params[i]->value.cols());
            state_[i].v = Matrix(params[i]->value.rows(), params[i]->value.cols());
        }
    }
    if (state_.size() != params.size()) throw NumericError("AdamW: parameter list changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        Param& p = *params[i];
        if (!p.trainable) continue;
        Moments& st = state_[i];
        for (size_t k = 0; k < p.value.size(); ++k) {
            const double g = p.grad.vec()[k];
            double& m = st.m.vec()[k];
            double& v = st.v.vec()[k];
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
            const double mh = m / bc1;
            const double vh = v / bc2;
            double& w = p.value.vec()[k];
            w -= cfg_.step_size * (mh / (std::sqrt(vh) + cfg_.eps) + cfg_.weight_decay * w);
        }
    }
}

void AdamW::zero_grad(std::span<Param* const> params) {
    for (Param* p : params) p->zero_grad();
}

}  // namespace csf
