#pragma once

// Dense row-major float32 tensor. Shapes are small (at most rank 2 in
// practice); arithmetic that needs better precision accumulates in double
// at the call site.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace arta {

// Error taxonomy mirrored by the CLI exit codes.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};
struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != numel_of(shape))
            throw ConfigError("tensor data length does not match shape");
    }

    static std::int64_t numel_of(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int d : s) {
            if (d <= 0) throw ConfigError("tensor dimensions must be positive");
            n *= d;
        }
        return n;
    }

    static Tensor zeros(std::vector<int> s) {
        auto n = numel_of(s);
        return Tensor(std::move(s), std::vector<float>(static_cast<std::size_t>(n), 0.0f));
    }

    static Tensor full(std::vector<int> s, float v) {
        auto n = numel_of(s);
        return Tensor(std::move(s), std::vector<float>(static_cast<std::size_t>(n), v));
    }

    static Tensor identity(int n) {
        Tensor t = zeros({n, n});
        for (int i = 0; i < n; ++i) t.at(i, i) = 1.0f;
        return t;
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return rank() < 2 ? 1 : shape[1]; }

    float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
    float at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

    float& operator[](std::size_t i) { return data[i]; }
    float operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
        os << "]";
        return os.str();
    }
};

inline void require_shape(const Tensor& t, const std::vector<int>& s, const char* what) {
    if (t.shape != s)
        throw ConfigError(std::string(what) + ": expected shape, got " + t.shape_str());
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ConfigError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace arta
