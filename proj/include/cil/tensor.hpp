#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cil {

// Dense row-major 64-bit float array. The one numeric carrier used for
// feature maps (H x W x D), weight matrices (rows x cols) and flat vectors.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;

    Tensor(std::vector<int> shape_, std::vector<double> data_)
        : shape(std::move(shape_)), data(std::move(data_)) {
        if (static_cast<std::size_t>(numel(shape)) != data.size())
            throw std::invalid_argument("Tensor: data length does not match shape");
    }

    static Tensor zeros(std::vector<int> shape_) {
        auto n = numel(shape_);
        return Tensor(std::move(shape_), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    }

    static long long numel(const std::vector<int>& shape_) {
        long long n = 1;
        for (int d : shape_) {
            if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
            n *= d;
        }
        return n;
    }

    int rank() const { return static_cast<int>(shape.size()); }
    std::size_t size() const { return data.size(); }

    double operator[](std::size_t i) const { return data[i]; }
    double& operator[](std::size_t i) { return data[i]; }

    // rank-2 access, row-major
    double at2(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
    double& at2(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void ensure_finite(const Tensor& t, const std::string& what) {
    if (!all_finite(t.data))
        throw std::invalid_argument(what + ": non-finite value");
}

} // namespace cil
