#include "ecgnet/adam.hpp"

#include <cmath>

namespace ecgnet {

Adam::Adam(std::vector<Param*> params, AdamConfig config) : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto* p : params_) {
        m_.push_back(Tensor::zeros_like(p->value));
        v_.push_back(Tensor::zeros_like(p->value));
    }
}

void Adam::step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto value = params_[i]->value.data();
        const auto grad = params_[i]->grad.data();
        auto m = m_[i].data();
        auto v = v_[i].data();
        for (std::size_t k = 0; k < value.size(); ++k) {
            m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * grad[k];
            v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * grad[k] * grad[k];
            value[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.eps);
        }
    }
}

} // namespace ecgnet
