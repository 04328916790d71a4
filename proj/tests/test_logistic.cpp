#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "risklab/common.hpp"
#include "risklab/logistic.hpp"

#include "oracles.hpp"

using namespace risklab;

namespace {

LabeledSlices random_instance(Rng& rng, std::size_t max_dim = 16, std::size_t max_rows = 64) {
    LabeledSlices data;
    const std::size_t dim = 1 + rng.below(max_dim);
    const std::size_t rows = 2 + rng.below(max_rows - 1);
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < rows; ++i) {
        for (auto& v : x) v = 4.0 * rng.unit() - 2.0;
        data.push_row(x, rng.unit() < 0.5 ? 0 : 1);
    }
    return data;
}

double loss_at(const LabeledSlices& data, const std::vector<double>& w, double b, double lambda) {
    return kernels::loss_grad(data, w, b, lambda, Execution::Serial).loss;
}

LabeledSlices one_dim_pair() {
    LabeledSlices data;
    const double neg = -1.0, pos = 1.0;
    data.push_row(std::span<const double>(&neg, 1), 0);
    data.push_row(std::span<const double>(&pos, 1), 1);
    return data;
}

}  // namespace

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(99);
    const double lambda = 0.01;
    const double h = 1e-5;
    for (int inst = 0; inst < 10; ++inst) {
        const auto data = random_instance(rng);
        std::vector<double> w(data.dim);
        for (auto& v : w) v = rng.unit() - 0.5;
        const double b = rng.unit() - 0.5;

        const auto lg = kernels::loss_grad(data, w, b, lambda, Execution::Serial);
        double scale = std::fabs(lg.grad_b);
        for (double g : lg.grad_w) scale = std::max(scale, std::fabs(g));
        scale = std::max(scale, 1.0);

        for (std::size_t j = 0; j < data.dim; ++j) {
            auto wp = w, wm = w;
            wp[j] += h;
            wm[j] -= h;
            const double fd = (loss_at(data, wp, b, lambda) - loss_at(data, wm, b, lambda)) / (2 * h);
            CHECK(std::fabs(fd - lg.grad_w[j]) / scale < 1e-4);
        }
        const double fd_b = (loss_at(data, w, b + h, lambda) - loss_at(data, w, b - h, lambda)) / (2 * h);
        CHECK(std::fabs(fd_b - lg.grad_b) / scale < 1e-4);
    }
}

TEST_CASE("serial and OpenMP kernels are bitwise identical") {
    Rng rng(7);
    for (int inst = 0; inst < 8; ++inst) {
        const auto data = random_instance(rng, 12, 200);
        std::vector<double> w(data.dim);
        for (auto& v : w) v = rng.unit() - 0.5;
        const double b = rng.unit() - 0.5;

        const auto a = kernels::loss_grad(data, w, b, 1e-3, Execution::Serial);
        const auto c = kernels::loss_grad(data, w, b, 1e-3, Execution::OpenMP);
        CHECK(a.loss == c.loss);
        CHECK(a.grad_b == c.grad_b);
        REQUIRE(a.grad_w.size() == c.grad_w.size());
        for (std::size_t j = 0; j < a.grad_w.size(); ++j) CHECK(a.grad_w[j] == c.grad_w[j]);

        std::vector<double> pa(data.size()), pc(data.size());
        kernels::predict_batch(data, w, b, pa, Execution::Serial);
        kernels::predict_batch(data, w, b, pc, Execution::OpenMP);
        for (std::size_t i = 0; i < data.size(); ++i) CHECK(pa[i] == pc[i]);
    }
}

TEST_CASE("training is execution-independent") {
    Rng rng(21);
    auto data = random_instance(rng, 6, 60);
    // Ensure both classes are present.
    data.labels[0] = 0;
    data.labels[1] = 1;
    const auto serial = train_logistic(data, 1e-3, 0, 200, 1e-8, Execution::Serial);
    const auto openmp = train_logistic(data, 1e-3, 0, 200, 1e-8, Execution::OpenMP);
    CHECK(serial.bias == openmp.bias);
    REQUIRE(serial.weights.size() == openmp.weights.size());
    for (std::size_t j = 0; j < serial.weights.size(); ++j)
        CHECK(serial.weights[j] == openmp.weights[j]);
    CHECK(serial.training_meta.final_loss == openmp.training_meta.final_loss);
}

TEST_CASE("one-dimensional training reaches the known optimum") {
    const auto data = one_dim_pair();
    const auto model = train_logistic(data, 0.01, 0, 20000, 1e-10, Execution::Serial);
    REQUIRE(model.weights.size() == 1);
    CHECK(model.weights[0] == doctest::Approx(oracle::kLogistic1dWeight).epsilon(1e-7));
    CHECK(std::fabs(model.bias) < 1e-9);
    CHECK(model.training_meta.final_loss ==
          doctest::Approx(oracle::kLogistic1dLoss).epsilon(1e-9));
    CHECK(model.l2_lambda == 0.01);
    CHECK(model.training_meta.seed == 0);
    CHECK(model.training_meta.iterations > 0);
}

TEST_CASE("loss decreases monotonically over accepted steps") {
    Rng rng(3);
    auto data = random_instance(rng, 4, 40);
    data.labels[0] = 0;
    data.labels[1] = 1;
    double prev = loss_at(data, std::vector<double>(data.dim, 0.0), 0.0, 1e-3);
    for (int iters = 1; iters <= 25; ++iters) {
        const auto model = train_logistic(data, 1e-3, 0, iters, 0.0, Execution::Serial);
        CHECK(model.training_meta.final_loss <= prev + 1e-12);
        prev = model.training_meta.final_loss;
    }
}

TEST_CASE("stable_sigmoid") {
    CHECK(stable_sigmoid(0.0) == 0.5);
    CHECK(stable_sigmoid(1.0) == doctest::Approx(oracle::kSigmoidOfOne).epsilon(1e-15));
    for (double z : {-800.0, -37.0, 37.0, 800.0}) {
        const double p = stable_sigmoid(z);
        CHECK(std::isfinite(p));
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
    CHECK(stable_sigmoid(10.0) + stable_sigmoid(-10.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("predict_proba applies the linear model") {
    LogisticModel model;
    model.weights = {2.0, -1.0};
    model.bias = 0.5;
    const std::vector<double> x = {1.5, 1.0};
    CHECK(predict_proba(model, x) == doctest::Approx(stable_sigmoid(2.5)).epsilon(1e-15));
    const std::vector<double> bad = {1.0};
    CHECK_THROWS_AS(predict_proba(model, bad), DimensionMismatch);
}

TEST_CASE("degenerate inputs are rejected") {
    LabeledSlices one_class;
    const std::vector<double> row = {1.0, 2.0};
    one_class.push_row(row, 1);
    one_class.push_row(row, 1);
    CHECK_THROWS_AS(train_logistic(one_class, 1e-3, 0, 10, 1e-8), SingleClassData);

    LabeledSlices data;
    data.push_row(row, 0);
    const std::vector<double> short_row = {1.0};
    CHECK_THROWS_AS(data.push_row(short_row, 1), DimensionMismatch);
}

TEST_CASE("regularization shrinks weights") {
    const auto data = one_dim_pair();
    const auto loose = train_logistic(data, 0.01, 0, 5000, 1e-9, Execution::Serial);
    const auto tight = train_logistic(data, 1.0, 0, 5000, 1e-9, Execution::Serial);
    CHECK(std::fabs(tight.weights[0]) < std::fabs(loose.weights[0]));
}
