#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace uniesn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct PowerIterationOptions {
    double tolerance = 1e-12;
    int max_iterations = 10000;
};

/// Operator norm induced by the Euclidean vector norm (largest singular
/// value), estimated by power iteration on A^T A.
double operator_norm(const Matrix& a, const PowerIterationOptions& opts = {});

/// SplitMix64 mixer; used to derive independent per-stage seeds from one
/// user seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Deterministic generator. Only the engine is taken from the standard
/// library; the real-valued transforms are spelled out so that streams are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi].
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal (Box-Muller, one draw per call).
    double normal();

    Vector uniform_vector(Eigen::Index n, double lo, double hi);
    Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi);

private:
    std::mt19937_64 engine_;
};

}  // namespace uniesn
