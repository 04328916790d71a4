#include "risklab/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace risklab {

DimensionMismatch::DimensionMismatch(std::size_t expected, std::size_t got)
    : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
            std::to_string(got)) {}

SingleClassData::SingleClassData() : Error("training data contains a single class") {}

void LabeledSlices::push_row(std::span<const double> x, int label) {
    if (dim == 0) dim = x.size();
    if (x.size() != dim) throw DimensionMismatch(dim, x.size());
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label ? 1 : 0);
}

double stable_sigmoid(double z) {
    double p;
    if (z >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        p = e / (1.0 + e);
    }
    // Keep the output inside the open interval even when exp underflows.
    const double lo = std::numeric_limits<double>::min();
    const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    return std::clamp(p, lo, hi);
}

double predict_proba(const LogisticModel& model, std::span<const double> x) {
    if (x.size() != model.weights.size()) throw DimensionMismatch(model.weights.size(), x.size());
    double z = model.bias;
    for (std::size_t j = 0; j < x.size(); ++j) z += model.weights[j] * x[j];
    return stable_sigmoid(z);
}

namespace kernels {

namespace {

// log(1 + e^z) without overflow.
double log1pexp(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

struct BlockAccum {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

void accumulate_block(const LabeledSlices& data, std::span<const double> w, double b,
                      std::size_t begin, std::size_t end, BlockAccum& acc) {
    const std::size_t d = data.dim;
    acc.grad_w.assign(d, 0.0);
    for (std::size_t i = begin; i < end; ++i) {
        const double* x = data.row(i);
        double z = b;
        for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
        const double y = static_cast<double>(data.labels[i]);
        acc.loss += log1pexp(z) - y * z;
        const double r = stable_sigmoid(z) - y;
        for (std::size_t j = 0; j < d; ++j) acc.grad_w[j] += r * x[j];
        acc.grad_b += r;
    }
}

}  // namespace

LossGrad loss_grad(const LabeledSlices& data, std::span<const double> w, double b,
                   double l2_lambda, Execution exec) {
    if (w.size() != data.dim) throw DimensionMismatch(data.dim, w.size());
    const std::size_t n = data.size();
    const std::size_t nblocks = std::min<std::size_t>(kReductionBlocks, std::max<std::size_t>(n, 1));
    std::vector<BlockAccum> partial(nblocks);

    auto block_range = [&](std::size_t blk) {
        const std::size_t lo = n * blk / nblocks;
        const std::size_t hi = n * (blk + 1) / nblocks;
        return std::pair<std::size_t, std::size_t>{lo, hi};
    };

    if (exec == Execution::OpenMP) {
#pragma omp parallel for schedule(static)
        for (long blk = 0; blk < static_cast<long>(nblocks); ++blk) {
            auto [lo, hi] = block_range(static_cast<std::size_t>(blk));
            accumulate_block(data, w, b, lo, hi, partial[static_cast<std::size_t>(blk)]);
        }
    } else {
        for (std::size_t blk = 0; blk < nblocks; ++blk) {
            auto [lo, hi] = block_range(blk);
            accumulate_block(data, w, b, lo, hi, partial[blk]);
        }
    }

    // Combine in block order; same rounding for both executions.
    LossGrad out;
    out.grad_w.assign(data.dim, 0.0);
    for (const auto& acc : partial) {
        out.loss += acc.loss;
        out.grad_b += acc.grad_b;
        for (std::size_t j = 0; j < data.dim; ++j) out.grad_w[j] += acc.grad_w[j];
    }
    double wsq = 0.0;
    for (std::size_t j = 0; j < data.dim; ++j) {
        wsq += w[j] * w[j];
        out.grad_w[j] += l2_lambda * w[j];
    }
    out.loss += 0.5 * l2_lambda * wsq;
    return out;
}

void predict_batch(const LabeledSlices& data, std::span<const double> w, double b,
                   std::span<double> out, Execution exec) {
    if (w.size() != data.dim) throw DimensionMismatch(data.dim, w.size());
    if (out.size() != data.size()) throw DimensionMismatch(data.size(), out.size());
    const long n = static_cast<long>(data.size());
    const std::size_t d = data.dim;
    if (exec == Execution::OpenMP) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i) {
            const double* x = data.row(static_cast<std::size_t>(i));
            double z = b;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
            out[static_cast<std::size_t>(i)] = stable_sigmoid(z);
        }
    } else {
        for (long i = 0; i < n; ++i) {
            const double* x = data.row(static_cast<std::size_t>(i));
            double z = b;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
            out[static_cast<std::size_t>(i)] = stable_sigmoid(z);
        }
    }
}

}  // namespace kernels

LogisticModel train_logistic(const LabeledSlices& data, double l2_lambda, std::uint64_t seed,
                             int max_iters, double tol, Execution exec) {
    if (data.size() == 0) throw Error("empty training data");
    if (l2_lambda < 0.0) throw Error("l2_lambda must be nonnegative");
    const bool has_pos = std::any_of(data.labels.begin(), data.labels.end(), [](int y) { return y == 1; });
    const bool has_neg = std::any_of(data.labels.begin(), data.labels.end(), [](int y) { return y == 0; });
    if (!has_pos || !has_neg) throw SingleClassData();

    LogisticModel model;
    model.l2_lambda = l2_lambda;
    model.weights.assign(data.dim, 0.0);
    model.bias = 0.0;
    model.training_meta.seed = seed;

    auto eval = [&](std::span<const double> w, double b) {
        return kernels::loss_grad(data, w, b, l2_lambda, exec);
    };

    kernels::LossGrad cur = eval(model.weights, model.bias);
    int iters = 0;
    constexpr double kArmijo = 1e-4;
    while (iters < max_iters) {
        double gmax = std::fabs(cur.grad_b);
        double gsq = cur.grad_b * cur.grad_b;
        for (double g : cur.grad_w) {
            gmax = std::max(gmax, std::fabs(g));
            gsq += g * g;
        }
        if (gmax < tol) break;

        double step = 1.0;
        std::vector<double> w_try(data.dim);
        double b_try = 0.0;
        kernels::LossGrad next;
        bool accepted = false;
        while (step > 1e-18) {
            for (std::size_t j = 0; j < data.dim; ++j)
                w_try[j] = model.weights[j] - step * cur.grad_w[j];
            b_try = model.bias - step * cur.grad_b;
            next = eval(w_try, b_try);
            if (next.loss <= cur.loss - kArmijo * step * gsq) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // step underflow, no further progress possible
        model.weights = std::move(w_try);
        model.bias = b_try;
        cur = std::move(next);
        ++iters;
    }
    model.training_meta.iterations = iters;
    model.training_meta.final_loss = cur.loss;
    return model;
}

}  // namespace risklab
