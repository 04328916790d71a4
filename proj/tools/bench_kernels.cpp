// Times the serial and OpenMP logistic kernels on synthetic data and checks
// that both produce bitwise-identical results.

#include <chrono>
#include <cstdio>
#include <vector>

#include <CLI11.hpp>

#include "risklab/common.hpp"
#include "risklab/logistic.hpp"

using namespace risklab;

namespace {

LabeledSlices synthetic_data(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    LabeledSlices data;
    data.dim = dim;
    data.features.reserve(rows * dim);
    data.labels.reserve(rows);
    std::vector<double> direction(dim);
    for (auto& v : direction) v = rng.unit() * 2.0 - 1.0;
    for (std::size_t i = 0; i < rows; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double x = rng.unit() * 2.0 - 1.0;
            data.features.push_back(x);
            dot += x * direction[j];
        }
        data.labels.push_back(dot + (rng.unit() - 0.5) > 0.0 ? 1 : 0);
    }
    return data;
}

template <typename F>
double time_ms(int repeats, F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() /
           repeats;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"logistic kernel benchmark: serial reference vs OpenMP"};
    std::size_t rows = 50000;
    std::size_t dim = 128;
    int repeats = 20;
    std::uint64_t seed = 42;
    app.add_option("--rows", rows, "Synthetic slice count");
    app.add_option("--dim", dim, "Feature dimension");
    app.add_option("--repeats", repeats, "Timed repetitions per kernel");
    app.add_option("--seed", seed, "Data generator seed");
    CLI11_PARSE(app, argc, argv);

    const auto data = synthetic_data(rows, dim, seed);
    Rng rng(seed + 1);
    std::vector<double> w(dim);
    for (auto& v : w) v = rng.unit() * 0.1 - 0.05;
    const double b = 0.01;
    const double lambda = 1e-3;

    const auto serial = kernels::loss_grad(data, w, b, lambda, Execution::Serial);
    const auto openmp = kernels::loss_grad(data, w, b, lambda, Execution::OpenMP);
    bool identical = serial.loss == openmp.loss && serial.grad_b == openmp.grad_b;
    for (std::size_t j = 0; j < dim && identical; ++j)
        identical = serial.grad_w[j] == openmp.grad_w[j];

    std::vector<double> probs_serial(rows), probs_openmp(rows);
    kernels::predict_batch(data, w, b, probs_serial, Execution::Serial);
    kernels::predict_batch(data, w, b, probs_openmp, Execution::OpenMP);
    for (std::size_t i = 0; i < rows && identical; ++i)
        identical = probs_serial[i] == probs_openmp[i];

    const double grad_serial_ms = time_ms(repeats, [&] {
        kernels::loss_grad(data, w, b, lambda, Execution::Serial);
    });
    const double grad_openmp_ms = time_ms(repeats, [&] {
        kernels::loss_grad(data, w, b, lambda, Execution::OpenMP);
    });
    const double pred_serial_ms = time_ms(repeats, [&] {
        kernels::predict_batch(data, w, b, probs_serial, Execution::Serial);
    });
    const double pred_openmp_ms = time_ms(repeats, [&] {
        kernels::predict_batch(data, w, b, probs_openmp, Execution::OpenMP);
    });

    std::printf("rows=%zu dim=%zu repeats=%d\n", rows, dim, repeats);
    std::printf("%-14s %12s %12s %9s\n", "kernel", "serial (ms)", "openmp (ms)",
                "speedup");
    std::printf("%-14s %12.3f %12.3f %8.2fx\n", "loss_grad", grad_serial_ms,
                grad_openmp_ms, grad_serial_ms / grad_openmp_ms);
    std::printf("%-14s %12.3f %12.3f %8.2fx\n", "predict_batch", pred_serial_ms,
                pred_openmp_ms, pred_serial_ms / pred_openmp_ms);
    std::printf("results bitwise identical: %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
