#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "risklab/common.hpp"

namespace risklab {

struct DimensionMismatch : Error {
    DimensionMismatch(std::size_t expected, std::size_t got);
};

struct SingleClassData : Error {
    SingleClassData();
};

/// Slice-level training set: n rows of dimension dim, row-major, with a
/// 0/1 label per row (1 = at risk).
struct LabeledSlices {
    std::size_t dim = 0;
    std::vector<double> features;  // n * dim
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    const double* row(std::size_t i) const { return features.data() + i * dim; }
    void push_row(std::span<const double> x, int label);
};

struct TrainingMeta {
    std::uint64_t seed = 0;
    int iterations = 0;
    double final_loss = 0.0;
};

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    double l2_lambda = 0.0;
    TrainingMeta training_meta;
};

// Sigmoid clamped to the open unit interval; finite for any argument.
double stable_sigmoid(double z);

double predict_proba(const LogisticModel& model, std::span<const double> x);

enum class Execution { Serial, OpenMP };

/// Inner kernels. Both executions accumulate over the same fixed block
/// grid, so results are bitwise identical regardless of thread count; the
/// serial path is the reference the tests and the benchmark compare against.
namespace kernels {

constexpr std::size_t kReductionBlocks = 64;

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

// L2-regularized logistic negative log-likelihood and its gradient.
// The bias is not penalized.
LossGrad loss_grad(const LabeledSlices& data, std::span<const double> w, double b,
                   double l2_lambda, Execution exec);

// Per-row probabilities; rows are independent so both paths are exact.
void predict_batch(const LabeledSlices& data, std::span<const double> w, double b,
                   std::span<double> out, Execution exec);

}  // namespace kernels

/// Full-batch gradient descent with Armijo backtracking. Deterministic:
/// all-zero init (the seed is recorded in training_meta only), fixed
/// evaluation order. Stops when the gradient max-norm drops below tol or
/// after max_iters accepted steps.
LogisticModel train_logistic(const LabeledSlices& data, double l2_lambda, std::uint64_t seed,
                             int max_iters, double tol, Execution exec = Execution::OpenMP);

}  // namespace risklab
