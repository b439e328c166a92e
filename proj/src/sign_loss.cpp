#include "ecgnet/sign_loss.hpp"

#include "ecgnet/error.hpp"

#include <algorithm>
#include <cmath>

namespace ecgnet {

double clamp_probability(double p) noexcept { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

double sign_coeff(double p, double y) noexcept {
    if (std::abs(y - p) < 0.5) return y - 2.0 * p * y + p * p;
    return 1.0;
}

double binary_cross_entropy(double p, double y) noexcept { return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)); }

void LossBatch::validate() const {
    if (probabilities.rank() != 2 || probabilities.shape() != targets.shape())
        throw ShapeError("loss batch shapes differ: " + probabilities.shape_string() + " vs " + targets.shape_string());
    for (double y : targets.data())
        if (y != 0.0 && y != 1.0) throw ValidationError("targets must be 0 or 1");
    for (double p : probabilities.data())
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probabilities must lie in [0, 1]");
}

namespace {

// d/dp [coeff(p, y) * BCE(p, y)] at an already clamped p.
double label_grad(double p, double y) {
    const double bce = binary_cross_entropy(p, y);
    const double bce_grad = (p - y) / (p * (1.0 - p));
    if (std::abs(y - p) < 0.5) {
        const double coeff = y - 2.0 * p * y + p * p;
        const double coeff_grad = -2.0 * y + 2.0 * p;
        return coeff_grad * bce + coeff * bce_grad;
    }
    return bce_grad;
}

} // namespace

SignLossResult sign_loss(const LossBatch& batch) {
    batch.validate();
    const auto rows = batch.probabilities.dim(0);
    const auto cols = batch.probabilities.dim(1);
    SignLossResult out;
    out.per_label = Tensor({rows, cols});
    double total = 0.0;
    for (std::size_t b = 0; b < rows; ++b) {
        for (std::size_t i = 0; i < cols; ++i) {
            const double p = clamp_probability(batch.probabilities.at(b, i));
            const double y = batch.targets.at(b, i);
            const double v = sign_coeff(p, y) * binary_cross_entropy(p, y);
            out.per_label.at(b, i) = v;
            total += v;
        }
    }
    out.total = rows ? total / static_cast<double>(rows) : 0.0;
    return out;
}

Tensor sign_loss_grad(const LossBatch& batch) {
    batch.validate();
    const auto rows = batch.probabilities.dim(0);
    const auto cols = batch.probabilities.dim(1);
    Tensor grad({rows, cols});
    for (std::size_t b = 0; b < rows; ++b)
        for (std::size_t i = 0; i < cols; ++i)
            grad.at(b, i) =
                label_grad(clamp_probability(batch.probabilities.at(b, i)), batch.targets.at(b, i)) / static_cast<double>(rows);
    return grad;
}

Tensor sign_loss_grad_logits(const Tensor& logits, const Tensor& targets, double* total) {
    if (logits.rank() != 2 || logits.shape() != targets.shape())
        throw ShapeError("logit/target shapes differ: " + logits.shape_string() + " vs " + targets.shape_string());
    const auto rows = logits.dim(0);
    const auto cols = logits.dim(1);
    Tensor grad({rows, cols});
    double sum = 0.0;
    for (std::size_t b = 0; b < rows; ++b) {
        for (std::size_t i = 0; i < cols; ++i) {
            const double raw = 1.0 / (1.0 + std::exp(-logits.at(b, i)));
            const double p = clamp_probability(raw);
            const double y = targets.at(b, i);
            sum += sign_coeff(p, y) * binary_cross_entropy(p, y);
            // Exact inside the clamp range; straight-through outside it so a
            // saturated wrong logit still receives the (p - y) signal.
            grad.at(b, i) = label_grad(p, y) * p * (1.0 - p) / static_cast<double>(rows);
        }
    }
    if (total) *total = rows ? sum / static_cast<double>(rows) : 0.0;
    return grad;
}

} // namespace ecgnet
