#pragma once

// Diagonal Gaussian value type plus the plain (non-tape) distribution
// math shared by the model and the statistics pipeline.

#include <cmath>
#include <span>
#include <vector>

#include "voe/common.hpp"

namespace voe::num {

struct DiagonalGaussian {
    std::vector<double> mean;
    std::vector<double> std;

    DiagonalGaussian() = default;
    DiagonalGaussian(std::vector<double> m, std::vector<double> s)
        : mean(std::move(m)), std(std::move(s)) {
        validate();
    }

    std::size_t dim() const { return mean.size(); }

    void validate() const {
        if (mean.size() != std.size())
            throw DimensionError("DiagonalGaussian: mean/std length mismatch");
        for (double s : std)
            if (!(s > 0.0))
                throw ContractError("DiagonalGaussian: std components must be > 0");
    }
};

// KL(p || q) = sum_i ln(sq/sp) + (sp^2 + (mp-mq)^2) / (2 sq^2) - 1/2
inline double gaussian_kl(const DiagonalGaussian& p, const DiagonalGaussian& q) {
    if (p.dim() != q.dim())
        throw DimensionError("gaussian_kl: dimension mismatch");
    p.validate();
    q.validate();
    double kl = 0.0;
    for (std::size_t i = 0; i < p.dim(); ++i) {
        const double d = p.mean[i] - q.mean[i];
        kl += std::log(q.std[i] / p.std[i]) +
              (p.std[i] * p.std[i] + d * d) / (2.0 * q.std[i] * q.std[i]) - 0.5;
    }
    return kl;
}

// Reparameterised sample mu + sigma * noise.
inline std::vector<double> gaussian_sample(const DiagonalGaussian& g,
                                           std::span<const double> noise) {
    if (noise.size() != g.dim())
        throw DimensionError("gaussian_sample: noise length mismatch");
    std::vector<double> out(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i)
        out[i] = g.mean[i] + g.std[i] * noise[i];
    return out;
}

inline double stable_softplus_scalar(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

inline double stable_sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// sum_i x ln s(l) + (1-x) ln(1-s(l)), evaluated as x*l - softplus(l).
inline double bernoulli_log_likelihood(std::span<const double> target,
                                       std::span<const double> logits) {
    if (target.size() != logits.size())
        throw DimensionError("bernoulli_log_likelihood: shape mismatch");
    double ll = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (!(target[i] >= 0.0 && target[i] <= 1.0))
            throw ContractError("bernoulli_log_likelihood: target outside [0,1]");
        ll += target[i] * logits[i] - stable_softplus_scalar(logits[i]);
    }
    return ll;
}

}  // namespace voe::num
