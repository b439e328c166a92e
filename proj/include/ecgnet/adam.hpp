#pragma once

#include "ecgnet/layers.hpp"

#include <cstdint>
#include <vector>

namespace ecgnet {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// 1e-3 until the drop epoch, then 1e-4. Epochs are numbered from 1.
struct StepLrSchedule {
    double initial = 1e-3;
    double dropped = 1e-4;
    int drop_epoch = 13;

    double lr_at(int epoch) const noexcept { return epoch >= drop_epoch ? dropped : initial; }
};

class Adam {
public:
    Adam(std::vector<Param*> params, AdamConfig config = {});

    /// One bias-corrected update from the gradients currently in params.
    void step(double lr);

    std::int64_t step_count() const noexcept { return t_; }
    const std::vector<Tensor>& first_moments() const noexcept { return m_; }
    const std::vector<Tensor>& second_moments() const noexcept { return v_; }

private:
    std::vector<Param*> params_;
    AdamConfig config_;
    std::vector<Tensor> m_, v_;
    std::int64_t t_ = 0;
};

} // namespace ecgnet
