#pragma once

#include <span>
#include <string>

#include "risklab/common.hpp"

namespace risklab {

enum class PoolKind { Mean, Max, Mellowmax };

struct PoolingSpec {
    PoolKind kind = PoolKind::Mean;
    double omega = 0.0;  // required (and nonzero) iff kind == Mellowmax

    static PoolingSpec mean() { return {PoolKind::Mean, 0.0}; }
    static PoolingSpec max() { return {PoolKind::Max, 0.0}; }
    static PoolingSpec mellowmax(double omega) { return {PoolKind::Mellowmax, omega}; }

    std::string name() const;
};

struct EmptyInput : Error {
    EmptyInput();
};

struct OmegaZero : Error {
    OmegaZero();
};

// "mean" | "max" | "mellowmax:<omega>", e.g. "mellowmax:1.0".
PoolingSpec pooling_spec_from_token(const std::string& token);

/// Pools slice probabilities to one score. Mellowmax is
/// mm_w(x) = (1/w) * ln((1/n) * sum_i e^{w*x_i}), evaluated with the
/// shifted log-sum-exp so large |w| stays finite; negative w gives the
/// soft-min. The result is clamped into [min(probs), max(probs)].
double pool(std::span<const double> probs, const PoolingSpec& spec);

}  // namespace risklab
