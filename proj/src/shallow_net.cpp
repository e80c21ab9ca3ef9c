#include "uniesn/shallow_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uniesn/errors.hpp"
#include "uniesn/sequence.hpp"

namespace uniesn {

Activation Activation::from_name(const std::string& name)
{
    if (name == "tanh") return tanh();
    if (name == "logistic") return logistic();
    throw DomainError("unknown activation '" + name + "'");
}

std::string Activation::name() const
{
    return kind_ == Kind::Tanh ? "tanh" : "logistic";
}

double Activation::operator()(double x) const
{
    if (kind_ == Kind::Tanh) return std::tanh(x);
    return 1.0 / (1.0 + std::exp(-x));
}

Vector Activation::operator()(const Vector& x) const
{
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = (*this)(x(i));
    return out;
}

void Activation::apply_inplace(Eigen::Ref<Matrix> x) const
{
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = (*this)(x(i, j));
}

ShallowNet::ShallowNet(Matrix hidden_matrix, Vector hidden_bias, Matrix readout, Activation activation)
    : hidden_(std::move(hidden_matrix)),
      bias_(std::move(hidden_bias)),
      readout_(std::move(readout)),
      activation_(activation)
{
    if (hidden_.rows() < 1 || hidden_.cols() < 1 || readout_.rows() < 1)
        throw DomainError("shallow net dimensions must be positive");
    if (bias_.size() != hidden_.rows())
        throw DomainError("hidden bias length does not match hidden width");
    if (readout_.cols() != hidden_.rows())
        throw DomainError("readout column count does not match hidden width");
}

Vector forward(const ShallowNet& net, const Vector& u)
{
    if (u.size() != net.in_dim())
        throw DomainError("forward: input has " + std::to_string(u.size()) + " entries, expected " +
                          std::to_string(net.in_dim()));
    Vector pre = net.hidden_matrix() * u + net.hidden_bias();
    return net.readout() * net.activation()(pre);
}

Matrix forward_rows(const ShallowNet& net, const Matrix& inputs)
{
    if (inputs.cols() != net.in_dim()) throw DomainError("forward_rows: input dimension mismatch");
    Matrix pre = inputs * net.hidden_matrix().transpose();
    pre.rowwise() += net.hidden_bias().transpose();
    net.activation().apply_inplace(pre);
    return pre * net.readout().transpose();
}

double lipschitz_bound(const ShallowNet& net)
{
    return operator_norm(net.readout()) * net.activation().lipschitz_const() *
           operator_norm(net.hidden_matrix());
}

ShallowNet fit_random_feature(const SampleSet& samples, int width, double ridge, double scale,
                              std::uint64_t seed, Activation activation)
{
    const Eigen::Index n = samples.inputs.rows();
    if (width < 1) throw DomainError("fit_random_feature: width must be >= 1");
    if (!(ridge >= 0.0)) throw DomainError("fit_random_feature: ridge must be >= 0");
    if (!(scale > 0.0)) throw DomainError("fit_random_feature: scale must be > 0");
    if (n < 1 || samples.inputs.cols() < 1 || samples.targets.cols() < 1)
        throw DomainError("fit_random_feature: empty sample set");
    if (samples.targets.rows() != n) throw DomainError("fit_random_feature: inputs and targets disagree in count");

    Rng rng(seed);
    Matrix hidden = rng.uniform_matrix(width, samples.inputs.cols(), -scale, scale);
    Vector bias = rng.uniform_vector(width, -scale, scale);

    Matrix features = samples.inputs * hidden.transpose();
    features.rowwise() += bias.transpose();
    activation.apply_inplace(features);

    Matrix coeffs;  // width x out_dim
    if (ridge > 0.0) {
        // Ridge problem as an ordinary least-squares problem on the stacked
        // system [features; sqrt(ridge) I] x = [targets; 0].
        Matrix lhs(n + width, width);
        lhs.topRows(n) = features;
        lhs.bottomRows(width) = Matrix::Identity(width, width) * std::sqrt(ridge);
        Matrix rhs = Matrix::Zero(n + width, samples.targets.cols());
        rhs.topRows(n) = samples.targets;
        coeffs = lhs.householderQr().solve(rhs);
    } else {
        Eigen::ColPivHouseholderQR<Matrix> qr(features);
        if (qr.rank() < width) {
            throw FitError("singular normal equations (rank " + std::to_string(qr.rank()) + " < width " +
                               std::to_string(width) + "); increase ridge or reduce width",
                           std::numeric_limits<double>::infinity(), width);
        }
        coeffs = qr.solve(samples.targets);
    }
    return ShallowNet(std::move(hidden), std::move(bias), coeffs.transpose(), activation);
}

ShallowNet fit_random_feature(const std::vector<std::pair<Vector, Vector>>& samples, int width,
                              double ridge, double scale, std::uint64_t seed, Activation activation)
{
    if (samples.empty()) throw DomainError("fit_random_feature: empty sample set");
    const Eigen::Index in = samples.front().first.size();
    const Eigen::Index out = samples.front().second.size();
    SampleSet set{Matrix(static_cast<Eigen::Index>(samples.size()), in),
                  Matrix(static_cast<Eigen::Index>(samples.size()), out)};
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].first.size() != in || samples[i].second.size() != out)
            throw DomainError("fit_random_feature: inconsistent sample dimensions");
        set.inputs.row(static_cast<Eigen::Index>(i)) = samples[i].first.transpose();
        set.targets.row(static_cast<Eigen::Index>(i)) = samples[i].second.transpose();
    }
    return fit_random_feature(set, width, ridge, scale, seed, activation);
}

Matrix sample_domain(const FitDomain& domain, int n, std::uint64_t seed)
{
    if (domain.blocks < 1 || domain.block_dim < 1 || !(domain.radius > 0.0) || n < 1)
        throw DomainError("sample_domain: invalid domain or sample count");
    const int d = domain.block_dim;
    Matrix out = Matrix::Zero(n, domain.dim());
    if (n >= 2)
        for (int b = 0; b < domain.blocks; ++b) out(1, b * d) = domain.radius;

    Rng rng(seed);
    for (int i = 2; i < n; ++i) {
        const bool on_boundary = (i % 4) == 0;
        for (int b = 0; b < domain.blocks; ++b) {
            Vector v = draw_in_ball(rng, d, domain.radius);
            if (on_boundary) {
                const double vn = v.norm();
                if (vn > 0.0) v *= domain.radius / vn;
            }
            out.row(i).segment(b * d, d) = v.transpose();
        }
    }
    return out;
}

namespace {

Matrix eval_rows(const VectorMap& target, const Matrix& inputs)
{
    Vector first = target(inputs.row(0).transpose());
    Matrix out(inputs.rows(), first.size());
    out.row(0) = first.transpose();
    for (Eigen::Index i = 1; i < inputs.rows(); ++i) {
        Vector y = target(inputs.row(i).transpose());
        if (y.size() != first.size()) throw DomainError("target map returned inconsistent output sizes");
        out.row(i) = y.transpose();
    }
    return out;
}

double sup_row_error(const ShallowNet& net, const Matrix& inputs, const Matrix& targets)
{
    const Matrix diff = forward_rows(net, inputs) - targets;
    return diff.rowwise().norm().maxCoeff();
}

}  // namespace

FitResult fit_to_tolerance(const VectorMap& target, const FitDomain& domain, double tol,
                           const WidthPolicy& policy, std::uint64_t seed, Activation activation)
{
    if (!(tol > 0.0)) throw DomainError("fit_to_tolerance: tol must be > 0");
    if (policy.start_width < 1 || policy.max_width < policy.start_width)
        throw DomainError("fit_to_tolerance: invalid width range");
    if (policy.train_samples < 1 || policy.validation_samples < 1)
        throw DomainError("fit_to_tolerance: sample counts must be >= 1");
    if (!(policy.margin > 0.0 && policy.margin <= 1.0))
        throw DomainError("fit_to_tolerance: margin must lie in (0, 1]");

    SampleSet train;
    train.inputs = sample_domain(domain, policy.train_samples, derive_seed(seed, 1));
    train.targets = eval_rows(target, train.inputs);
    const Matrix val_inputs = sample_domain(domain, policy.validation_samples, derive_seed(seed, 2));
    const Matrix val_targets = eval_rows(target, val_inputs);

    // Default scale is 2 over the circumradius of the domain (radius * sqrt(blocks)).
    const double scale =
        policy.scale > 0.0 ? policy.scale : 2.0 / (domain.radius * std::sqrt(static_cast<double>(domain.blocks)));
    const double ridge = policy.ridge_per_sample * static_cast<double>(policy.train_samples);
    const double goal = tol * policy.margin;

    std::vector<std::pair<int, double>> history;
    double best = std::numeric_limits<double>::infinity();
    int best_width = 0;
    for (int width = policy.start_width; width <= policy.max_width; width *= 2) {
        ShallowNet net = fit_random_feature(train, width, ridge, scale,
                                            derive_seed(seed, 100 + static_cast<std::uint64_t>(width)),
                                            activation);
        const double err = std::max(sup_row_error(net, train.inputs, train.targets),
                                    sup_row_error(net, val_inputs, val_targets));
        history.emplace_back(width, err);
        if (err < best) {
            best = err;
            best_width = width;
        }
        if (err <= goal) return FitResult{std::move(net), err, std::move(history)};
    }
    throw FitError("tolerance not met: best sampled sup error " + std::to_string(best) + " at width " +
                       std::to_string(best_width) + " exceeds " + std::to_string(goal) +
                       " (tol " + std::to_string(tol) + " x margin " + std::to_string(policy.margin) + ")",
                   best, best_width);
}

FitResult fit_identity(int d, double radius, double tol, const WidthPolicy& policy, std::uint64_t seed,
                       Activation activation)
{
    if (d < 1) throw DomainError("fit_identity: d must be >= 1");
    return fit_to_tolerance([](const Vector& x) { return x; }, FitDomain{1, d, radius}, tol, policy, seed,
                            activation);
}

}  // namespace uniesn
