#pragma once

#include "ecgnet/tensor.hpp"

namespace ecgnet {

inline constexpr double kProbabilityClamp = 1e-7;

double clamp_probability(double p) noexcept;

/// Per-label weight on the cross-entropy term: y - 2py + p^2 when
/// |y - p| < 0.5, otherwise 1. The boundary belongs to the far branch.
double sign_coeff(double p, double y) noexcept;

double binary_cross_entropy(double p, double y) noexcept;

/// probabilities and targets are [batch x labels] and equally shaped.
struct LossBatch {
    Tensor probabilities;
    Tensor targets;

    /// Throws ShapeError / ValidationError.
    void validate() const;
};

struct SignLossResult {
    double total = 0.0;  // mean over batch of the per-record label sums
    Tensor per_label;    // [batch x labels], unreduced coeff * BCE
};

/// Probabilities are clamped to [1e-7, 1 - 1e-7] before evaluation.
SignLossResult sign_loss(const LossBatch& batch);

/// d total / d p, with the branch indicator held locally constant and the
/// coefficient differentiated on the near branch. Includes the 1/batch
/// factor of the mean reduction.
Tensor sign_loss_grad(const LossBatch& batch);

/// d total / d logit for p = sigmoid(logit); the training-path gradient.
Tensor sign_loss_grad_logits(const Tensor& logits, const Tensor& targets, double* total = nullptr);

} // namespace ecgnet
