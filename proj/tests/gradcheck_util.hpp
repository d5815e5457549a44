#pragma once

// Central-finite-difference gradient checker. The numeric side only ever
// evaluates the forward pass, so it stays independent of the backward
// implementation it is checking.

#include <functional>
#include <vector>

#include "voe/adam.hpp"
#include "voe/tape.hpp"

namespace voe::testutil {

using BuildFn =
    std::function<num::Var(num::Tape&, const std::vector<num::Var>&)>;

// Max relative error between analytic and central-difference gradients
// over every element of every input. rel = |a-n| / max(1, |a|, |n|).
inline double gradcheck(const BuildFn& f, std::vector<num::Tensor> inputs,
                        double h = 1e-3) {
    auto eval = [&](const std::vector<num::Tensor>& xs) {
        num::Tape t;
        std::vector<num::Var> leaves;
        leaves.reserve(xs.size());
        for (const auto& x : xs) leaves.push_back(t.leaf(x));
        num::Var out = f(t, leaves);
        return t.val(out)[0];
    };

    // Analytic gradients.
    num::Tape t;
    std::vector<num::Var> leaves;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        leaves.push_back(t.leaf(inputs[i], static_cast<int>(i)));
    num::Var out = f(t, leaves);
    t.backward(out);
    std::vector<num::Tensor> analytic;
    for (const auto& x : inputs) analytic.emplace_back(x.shape);
    t.add_param_grads(analytic);

    double max_rel = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t j = 0; j < inputs[i].numel(); ++j) {
            const double orig = inputs[i].data[j];
            inputs[i].data[j] = orig + h;
            const double fp = eval(inputs);
            inputs[i].data[j] = orig - h;
            const double fm = eval(inputs);
            inputs[i].data[j] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[i].data[j];
            const double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
            max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
        }
    }
    return max_rel;
}

}  // namespace voe::testutil
