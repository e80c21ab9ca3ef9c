#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "uniesn/linalg.hpp"

namespace uniesn {

/// Scalar activation applied componentwise. Both supported kinds are
/// Lipschitz, bounded and non-constant.
class Activation {
public:
    enum class Kind { Tanh, Logistic };

    constexpr Activation() = default;
    constexpr explicit Activation(Kind kind) : kind_(kind) {}

    static Activation tanh() { return Activation(Kind::Tanh); }
    static Activation logistic() { return Activation(Kind::Logistic); }
    /// Accepts "tanh" or "logistic"; throws DomainError otherwise.
    static Activation from_name(const std::string& name);

    Kind kind() const noexcept { return kind_; }
    std::string name() const;

    /// Lipschitz constant L_sigma.
    double lipschitz_const() const noexcept { return kind_ == Kind::Tanh ? 1.0 : 0.25; }
    /// sup |sigma|.
    double sup_bound() const noexcept { return 1.0; }

    double operator()(double x) const;
    Vector operator()(const Vector& x) const;
    void apply_inplace(Eigen::Ref<Matrix> x) const;

    friend bool operator==(Activation, Activation) = default;

private:
    Kind kind_ = Kind::Tanh;
};

/// u -> readout * sigma(hidden_matrix * u + hidden_bias).
class ShallowNet {
public:
    ShallowNet(Matrix hidden_matrix, Vector hidden_bias, Matrix readout,
               Activation activation = Activation::tanh());

    int in_dim() const noexcept { return static_cast<int>(hidden_.cols()); }
    int out_dim() const noexcept { return static_cast<int>(readout_.rows()); }
    int width() const noexcept { return static_cast<int>(hidden_.rows()); }

    const Matrix& hidden_matrix() const noexcept { return hidden_; }
    const Vector& hidden_bias() const noexcept { return bias_; }
    const Matrix& readout() const noexcept { return readout_; }
    Activation activation() const noexcept { return activation_; }

private:
    Matrix hidden_;
    Vector bias_;
    Matrix readout_;
    Activation activation_;
};

Vector forward(const ShallowNet& net, const Vector& u);

/// Row-wise forward pass: row i of the result is forward(net, inputs.row(i)).
Matrix forward_rows(const ShallowNet& net, const Matrix& inputs);

/// ||readout|| * L_sigma * ||hidden_matrix|| with operator norms.
double lipschitz_bound(const ShallowNet& net);

/// Paired training data; row i of `inputs` maps to row i of `targets`.
struct SampleSet {
    Matrix inputs;
    Matrix targets;
};

/// Random hidden layer (entries i.i.d. uniform on [-scale, scale]) with the
/// readout solved by ridge least squares. Throws FitError when ridge == 0
/// and the feature matrix is rank deficient.
ShallowNet fit_random_feature(const SampleSet& samples, int width, double ridge, double scale,
                              std::uint64_t seed, Activation activation = Activation::tanh());

ShallowNet fit_random_feature(const std::vector<std::pair<Vector, Vector>>& samples, int width,
                              double ridge, double scale, std::uint64_t seed,
                              Activation activation = Activation::tanh());

/// Product of `blocks` closed balls of radius `radius` in R^block_dim; a
/// single ball when blocks == 1. Points are stacked block after block.
struct FitDomain {
    int blocks = 1;
    int block_dim = 1;
    double radius = 1.0;

    int dim() const noexcept { return blocks * block_dim; }
};

/// n points of the domain, one per row. Row 0 is the origin and row 1 puts
/// every block at radius * e_1. Every fourth remaining row has all blocks on
/// their boundary spheres; the rest are uniform in each ball.
Matrix sample_domain(const FitDomain& domain, int n, std::uint64_t seed);

struct WidthPolicy {
    int start_width = 16;
    int max_width = 1024;
    int train_samples = 2000;
    int validation_samples = 2000;
    double margin = 0.8;
    /// Ridge penalty per training sample (ridge = ridge_per_sample * n).
    double ridge_per_sample = 1e-10;
    /// Hidden-weight scale; <= 0 selects 2 / (radius * sqrt(blocks)), i.e. 2 over
    /// the circumradius of the fitting domain.
    double scale = 0.0;
};

struct FitResult {
    ShallowNet net;
    /// Sampled sup of ||net(x) - target(x)|| over training and validation points.
    double achieved;
    /// (width, achieved) for every width that was tried.
    std::vector<std::pair<int, double>> history;
};

using VectorMap = std::function<Vector(const Vector&)>;

/// Doubles the width from policy.start_width until the sampled sup error is
/// at most tol * policy.margin. Throws FitError carrying the best error seen
/// when policy.max_width is exceeded.
FitResult fit_to_tolerance(const VectorMap& target, const FitDomain& domain, double tol,
                           const WidthPolicy& policy, std::uint64_t seed,
                           Activation activation = Activation::tanh());

/// fit_to_tolerance with the identity map of R^d on the ball of the given radius.
FitResult fit_identity(int d, double radius, double tol, const WidthPolicy& policy,
                       std::uint64_t seed, Activation activation = Activation::tanh());

}  // namespace uniesn
