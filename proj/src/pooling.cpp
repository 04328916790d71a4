#include "risklab/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace risklab {

EmptyInput::EmptyInput() : Error("pool: empty probability list") {}

OmegaZero::OmegaZero() : Error("pool: mellowmax omega must be nonzero") {}

std::string PoolingSpec::name() const {
    switch (kind) {
        case PoolKind::Mean: return "mean";
        case PoolKind::Max: return "max";
        case PoolKind::Mellowmax: {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "mellowmax:%g", omega);
            return buf;
        }
    }
    return "?";
}

PoolingSpec pooling_spec_from_token(const std::string& token) {
    const auto colon = token.find(':');
    const std::string head = trim(colon == std::string::npos ? token : token.substr(0, colon));
    if (head == "mean") return PoolingSpec::mean();
    if (head == "max") return PoolingSpec::max();
    if (head == "mellowmax") {
        if (colon == std::string::npos) throw Error("mellowmax needs an omega, e.g. \"mellowmax:1.0\"");
        const std::string arg = trim(token.substr(colon + 1));
        try {
            std::size_t pos = 0;
            double omega = std::stod(arg, &pos);
            if (pos != arg.size()) throw std::invalid_argument("trailing");
            if (omega == 0.0) throw OmegaZero();
            return PoolingSpec::mellowmax(omega);
        } catch (const OmegaZero&) {
            throw;
        } catch (const std::exception&) {
            throw Error("bad mellowmax omega: \"" + arg + "\"");
        }
    }
    throw Error("unknown pooling \"" + token + "\"");
}

double pool(std::span<const double> probs, const PoolingSpec& spec) {
    if (probs.empty()) throw EmptyInput();
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error("pool: probability out of [0,1]");
    }
    const auto [mn_it, mx_it] = std::minmax_element(probs.begin(), probs.end());
    const double mn = *mn_it;
    const double mx = *mx_it;

    double value = 0.0;
    switch (spec.kind) {
        case PoolKind::Mean: {
            double sum = 0.0;
            for (double p : probs) sum += p;
            value = sum / static_cast<double>(probs.size());
            break;
        }
        case PoolKind::Max:
            value = mx;
            break;
        case PoolKind::Mellowmax: {
            const double w = spec.omega;
            if (w == 0.0) throw OmegaZero();
            // Shift by max(w*x_i) so the sum stays in [1, n].
            double shift = w * probs[0];
            for (double p : probs) shift = std::max(shift, w * p);
            double sum = 0.0;
            for (double p : probs) sum += std::exp(w * p - shift);
            value = (shift + std::log(sum / static_cast<double>(probs.size()))) / w;
            break;
        }
    }
    return std::clamp(value, mn, mx);
}

}  // namespace risklab
