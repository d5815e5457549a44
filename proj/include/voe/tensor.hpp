#pragma once

// Dense row-major tensor of 64-bit floats. All model arithmetic in this
// project is double precision; desk-scale sizes make that cheap and it
// keeps reruns bit-exact.

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "voe/common.hpp"
#include "voe/rng.hpp"

namespace voe::num {

struct Shape {
    std::vector<int> dims;

    Shape() = default;
    Shape(std::initializer_list<int> d) : dims(d) {}
    explicit Shape(std::vector<int> d) : dims(std::move(d)) {}

    int rank() const { return static_cast<int>(dims.size()); }
    int operator[](int i) const { return dims[static_cast<std::size_t>(i)]; }

    std::size_t numel() const {
        std::size_t n = 1;
        for (int d : dims) n *= static_cast<std::size_t>(d);
        return n;
    }

    bool operator==(const Shape& o) const { return dims == o.dims; }
    bool operator!=(const Shape& o) const { return dims != o.dims; }

    std::string str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(dims[i]);
        }
        return s + "]";
    }
};

struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s) : shape(std::move(s)), data(shape.numel(), 0.0) {}
    Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != shape.numel())
            throw DimensionError("tensor data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape.str());
    }
    Tensor(Shape s, double fill) : shape(std::move(s)), data(shape.numel(), fill) {}

    static Tensor vector(std::vector<double> d) {
        int n = static_cast<int>(d.size());
        return Tensor(Shape{n}, std::move(d));
    }

    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }

    static Tensor filled(Shape s, double v) { return Tensor(std::move(s), v); }

    // Glorot-uniform init for a weight tensor with the given fan pair.
    static Tensor glorot(Shape s, int fan_in, int fan_out, Rng& rng) {
        Tensor t(std::move(s));
        double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : t.data) v = rng.uniform(-bound, bound);
        return t;
    }

    std::size_t numel() const { return data.size(); }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }

    // 3-d (H,W,C) accessors used by image ops.
    double& at3(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * shape[1] + x) * shape[2] + c];
    }
    double at3(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * shape[1] + x) * shape[2] + c];
    }
};

}  // namespace voe::num
