#pragma once

// Bias-corrected Adam over a flat parameter vector, plus the named
// parameter store the model registers its tensors in.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "voe/common.hpp"
#include "voe/tensor.hpp"

namespace voe::num {

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Standard update; rejects non-finite gradients without touching params.
inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& st, double lr) {
    if (params.size() != grads.size() || params.size() != st.m.size())
        throw DimensionError("adam_step: parameter/gradient/state size mismatch");
    if (!(lr > 0.0)) throw ParameterError("adam_step: lr must be > 0");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            throw NumericalError("adam_step: non-finite gradient at index " +
                                 std::to_string(i) + "; update rejected");
    st.t += 1;
    const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grads[i];
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grads[i] * grads[i];
        const double mhat = st.m[i] / c1;
        const double vhat = st.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

// Named tensors with stable ids; the flat view feeds adam_step.
class ParameterStore {
  public:
    int add(std::string name, Tensor init) {
        names_.push_back(std::move(name));
        values_.push_back(std::move(init));
        return static_cast<int>(values_.size()) - 1;
    }

    int count() const { return static_cast<int>(values_.size()); }
    Tensor& value(int id) { return values_[static_cast<std::size_t>(id)]; }
    const Tensor& value(int id) const { return values_[static_cast<std::size_t>(id)]; }
    const std::string& name(int id) const { return names_[static_cast<std::size_t>(id)]; }

    int find(std::string_view name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return static_cast<int>(i);
        return -1;
    }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& v : values_) n += v.numel();
        return n;
    }

    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(total_size());
        for (const auto& v : values_) out.insert(out.end(), v.data.begin(), v.data.end());
        return out;
    }

    void unflatten(std::span<const double> flat) {
        if (flat.size() != total_size())
            throw DimensionError("ParameterStore::unflatten: size mismatch");
        std::size_t off = 0;
        for (auto& v : values_) {
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                      flat.begin() + static_cast<std::ptrdiff_t>(off + v.numel()),
                      v.data.begin());
            off += v.numel();
        }
    }

    // Zeroed gradient tensors matching every parameter.
    std::vector<Tensor> zero_grads() const {
        std::vector<Tensor> g;
        g.reserve(values_.size());
        for (const auto& v : values_) g.emplace_back(v.shape);
        return g;
    }

  private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

}  // namespace voe::num
