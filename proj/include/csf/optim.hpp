#pragma once

#include <span>
#include <vector>

#include "csf/tape.hpp"

namespace csf {

// Adam with decoupled weight decay. Moment state is positional: call step()
// with the same parameter list (same order) every time.
class AdamW {
public:
    struct Config {
        double step_size = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.01;
    };

    AdamW() = default;
    explicit AdamW(Config cfg) : cfg_(cfg) {}

    void step(std::span<Param* const> params);
    static void zero_grad(std::span<Param* const> params);

private:
    struct Moments {
        Matrix m, v;
    };
    Config cfg_;
    std::vector<Moments> state_;
    long t_ = 0;
};

}  // namespace csf
