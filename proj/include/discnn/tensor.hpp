#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "discnn/common.hpp"

namespace discnn::num {

std::string shape_str(const std::vector<int>& shape);

// Dense n-dimensional array of doubles in row-major order, with an optional
// gradient buffer of the same length. The universal numeric carrier.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> values);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double value);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int axis) const;
    std::size_t size() const { return values.size(); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    double* data() { return values.data(); }
    const double* data() const { return values.data(); }

    std::size_t index4(int a, int b, int c, int d) const {
        return ((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d;
    }
    std::size_t index3(int a, int b, int c) const {
        return (static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c;
    }
    std::size_t index2(int a, int b) const { return static_cast<std::size_t>(a) * shape_[1] + b; }

    double& at4(int a, int b, int c, int d) { return values[index4(a, b, c, d)]; }
    double at4(int a, int b, int c, int d) const { return values[index4(a, b, c, d)]; }
    double& at3(int a, int b, int c) { return values[index3(a, b, c)]; }
    double at3(int a, int b, int c) const { return values[index3(a, b, c)]; }
    double& at2(int a, int b) { return values[index2(a, b)]; }
    double at2(int a, int b) const { return values[index2(a, b)]; }

    bool has_grad() const { return !grad.empty(); }
    void ensure_grad();
    void zero_grad();

    // Same data, new shape; element counts must match.
    Tensor reshaped(std::vector<int> new_shape) const;

    // Throws DataError if any value is NaN or Inf.
    void require_finite(const std::string& what) const;
    bool all_finite() const;

    std::vector<double> values;
    std::vector<double> grad;  // empty unless ensure_grad() was called

private:
    static std::size_t checked_product(const std::vector<int>& shape);

    std::vector<int> shape_;
};

// Deterministic random stream. The generator and all derived draws are
// pinned down here (mt19937_64 plus explicit bit mappings) so identical
// seeds give identical sequences on every platform; the std:: distribution
// templates are implementation-defined and deliberately not used.
class RngStream {
public:
    static constexpr const char* kAlgorithm = "mt19937_64/canonical-v1";

    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; the second draw is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
        cached_ = radius * std::sin(angle);
        has_cached_ = true;
        return radius * std::cos(angle);
    }

    // Unbiased integer in [0, n) via rejection sampling.
    std::int64_t uniform_int(std::int64_t n) {
        if (n <= 0) throw ConfigError("uniform_int: bound must be positive");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t draw;
        do {
            draw = next_u64();
        } while (draw >= limit);
        return static_cast<std::int64_t>(draw % un);
    }

    // In-place Fisher-Yates.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent child stream; the derivation is a fixed mix of the parent
    // seed and the stream id, so forks are reproducible.
    RngStream fork(std::uint64_t stream_id) const {
        std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return RngStream(z ^ (z >> 31));
    }

private:
    std::uint64_t seed_ = 0;
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace discnn::num
