#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace adadqa {

// Dense row-major tensor with a flat buffer. Small enough on purpose: the
// models in this project are a handful of linear maps and 3-d convolutions,
// all indexed explicitly.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(count(shape)), T(0));
    }

    static long long count(const std::vector<int>& s) {
        long long n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
            n *= d;
        }
        return n;
    }

    int size() const { return static_cast<int>(data.size()); }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }
    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

// A named trainable parameter: value plus accumulated gradient.
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;

    Param() = default;
    Param(std::string n, std::vector<int> shape)
        : name(std::move(n)), value(shape), grad(std::move(shape)) {}

    void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
using ParamRefs = std::vector<Param<T>*>;

}  // namespace adadqa
