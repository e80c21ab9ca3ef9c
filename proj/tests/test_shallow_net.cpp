#include <cmath>

#include <gtest/gtest.h>

#include "test_helpers.hpp"
#include "uniesn/errors.hpp"
#include "uniesn/sequence.hpp"
#include "uniesn/shallow_net.hpp"

using namespace uniesn;

namespace {

ShallowNet scalar_net(double readout, double hidden, double bias)
{
    return ShallowNet(Matrix::Constant(1, 1, hidden), Vector::Constant(1, bias), Matrix::Constant(1, 1, readout));
}

SampleSet grid_samples(int n, const std::function<double(double)>& fn)
{
    SampleSet s{Matrix(n, 1), Matrix(n, 1)};
    for (int i = 0; i < n; ++i) {
        const double x = -1.0 + 2.0 * i / (n - 1);
        s.inputs(i, 0) = x;
        s.targets(i, 0) = fn(x);
    }
    return s;
}

}  // namespace

TEST(Activation, Constants)
{
    EXPECT_EQ(Activation::tanh().lipschitz_const(), 1.0);
    EXPECT_EQ(Activation::tanh().sup_bound(), 1.0);
    EXPECT_EQ(Activation::logistic().lipschitz_const(), 0.25);
    EXPECT_EQ(Activation::from_name("logistic"), Activation::logistic());
    EXPECT_THROW(Activation::from_name("relu"), DomainError);
    EXPECT_DOUBLE_EQ(Activation::logistic()(0.0), 0.5);
}

TEST(Forward, Examples)
{
    EXPECT_EQ(forward(scalar_net(1, 1, 0), Vector::Zero(1))(0), 0.0);
    EXPECT_NEAR(forward(scalar_net(2, 1, 0), Vector::Constant(1, 0.5))(0), 0.92423431, 1e-8);
    EXPECT_DOUBLE_EQ(forward(scalar_net(2, 1, 0), Vector::Constant(1, 0.5))(0), 2.0 * std::tanh(0.5));

    Rng rng(1);
    const ShallowNet zero_readout(rng.uniform_matrix(5, 3, -1, 1), rng.uniform_vector(5, -1, 1), Matrix::Zero(2, 5));
    EXPECT_EQ(forward(zero_readout, rng.uniform_vector(3, -4, 4)), Vector::Zero(2));
}

TEST(Forward, DimensionChecks)
{
    EXPECT_THROW(forward(scalar_net(1, 1, 0), Vector::Zero(2)), DomainError);
    EXPECT_THROW(ShallowNet(Matrix::Zero(3, 2), Vector::Zero(2), Matrix::Zero(1, 3)), DomainError);
    EXPECT_THROW(ShallowNet(Matrix::Zero(3, 2), Vector::Zero(3), Matrix::Zero(1, 4)), DomainError);
}

TEST(Forward, RowsAgreeWithSingleEvaluation)
{
    Rng rng(2);
    const ShallowNet net = test_support::random_net(rng, 3, 7, 2);
    const Matrix x = rng.uniform_matrix(20, 3, -1, 1);
    const Matrix batch = forward_rows(net, x);
    for (int i = 0; i < 20; ++i)
        EXPECT_LT((batch.row(i).transpose() - forward(net, x.row(i).transpose())).norm(), 1e-14);
}

TEST(Forward, GloballyBounded)
{
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const ShallowNet net = test_support::random_net(rng, 2, 12, 3, 5.0);
        const double bound = operator_norm(net.readout()) * net.activation().sup_bound() * std::sqrt(net.width());
        for (int k = 0; k < 50; ++k)
            EXPECT_LE(forward(net, rng.uniform_vector(2, -1e6, 1e6)).norm(), bound * (1 + 1e-12));
    }
}

TEST(LipschitzBound, Examples)
{
    EXPECT_EQ(lipschitz_bound(scalar_net(0, 3, 0)), 0.0);
    EXPECT_NEAR(lipschitz_bound(scalar_net(1, 3, 0)), 3.0, 1e-15);
    const ShallowNet logistic(Matrix::Constant(1, 1, 3.0), Vector::Zero(1), Matrix::Constant(1, 1, 1.0),
                              Activation::logistic());
    EXPECT_NEAR(lipschitz_bound(logistic), 0.75, 1e-15);
}

TEST(LipschitzBound, HoldsOnRandomPairs)
{
    Rng rng(4);
    const ShallowNet net = test_support::random_net(rng, 3, 16, 2, 2.0);
    const double lip = lipschitz_bound(net);
    for (int i = 0; i < 1000; ++i) {
        const Vector x = rng.uniform_vector(3, -2, 2);
        const Vector y = x + rng.uniform_vector(3, -0.5, 0.5);
        ASSERT_LE((forward(net, x) - forward(net, y)).norm(), lip * (x - y).norm() * (1 + 1e-12));
    }
}

TEST(FitRandomFeature, ZeroTargetsGiveZeroReadout)
{
    SampleSet s = grid_samples(50, [](double) { return 0.0; });
    const ShallowNet net = fit_random_feature(s, 20, 1e-6, 2.0, 5);
    EXPECT_TRUE((net.readout().array() == 0.0).all());
}

TEST(FitRandomFeature, FitsSine)
{
    // Calibration run: width 200, ridge 1e-8, scale 2, seed 1, 400 grid points.
    const SampleSet s = grid_samples(400, [](double x) { return std::sin(x); });
    const ShallowNet net = fit_random_feature(s, 200, 1e-8, 2.0, 1);
    const double err = (forward_rows(net, s.inputs) - s.targets).cwiseAbs().maxCoeff();
    EXPECT_LT(err, 1e-2);
}

TEST(FitRandomFeature, BitwiseDeterministic)
{
    const SampleSet s = grid_samples(100, [](double x) { return x * x; });
    const ShallowNet a = fit_random_feature(s, 30, 1e-8, 2.0, 9);
    const ShallowNet b = fit_random_feature(s, 30, 1e-8, 2.0, 9);
    EXPECT_EQ(a.hidden_matrix(), b.hidden_matrix());
    EXPECT_EQ(a.hidden_bias(), b.hidden_bias());
    EXPECT_EQ(a.readout(), b.readout());
}

TEST(FitRandomFeature, DuplicatedSamplesGiveSameLeastSquaresReadout)
{
    // Plain least squares (ridge 0) is invariant under duplicating every sample.
    const SampleSet s = grid_samples(60, [](double x) { return std::cos(2 * x); });
    SampleSet twice{Matrix(120, 1), Matrix(120, 1)};
    twice.inputs << s.inputs, s.inputs;
    twice.targets << s.targets, s.targets;
    const ShallowNet a = fit_random_feature(s, 6, 0.0, 1.0, 2);
    const ShallowNet b = fit_random_feature(twice, 6, 0.0, 1.0, 2);
    EXPECT_LT((a.readout() - b.readout()).norm(), 1e-8 * a.readout().norm());
}

TEST(FitRandomFeature, RankDeficientWithoutRidgeFails)
{
    const SampleSet s = grid_samples(3, [](double x) { return x; });
    EXPECT_THROW(fit_random_feature(s, 10, 0.0, 2.0, 1), FitError);
}

TEST(FitRandomFeature, PairOverloadMatchesMatrixForm)
{
    const SampleSet s = grid_samples(30, [](double x) { return x; });
    std::vector<std::pair<Vector, Vector>> pairs;
    for (int i = 0; i < 30; ++i) pairs.emplace_back(s.inputs.row(i).transpose(), s.targets.row(i).transpose());
    EXPECT_EQ(fit_random_feature(pairs, 8, 1e-8, 2.0, 4).readout(), fit_random_feature(s, 8, 1e-8, 2.0, 4).readout());
    EXPECT_THROW(fit_random_feature(s, 0, 1e-8, 2.0, 4), DomainError);
    EXPECT_THROW(fit_random_feature(s, 8, -1.0, 2.0, 4), DomainError);
}

TEST(SampleDomain, ProductBallGeometry)
{
    const FitDomain dom{4, 2, 1.5};
    const Matrix pts = sample_domain(dom, 500, 3);
    ASSERT_EQ(pts.cols(), 8);
    EXPECT_EQ(pts.row(0).norm(), 0.0);
    bool saw_boundary = false;
    for (int i = 0; i < pts.rows(); ++i) {
        for (int b = 0; b < 4; ++b) {
            const double n = pts.row(i).segment(2 * b, 2).norm();
            ASSERT_LE(n, 1.5 * (1 + 1e-15));
            if (i >= 2 && std::abs(n - 1.5) < 1e-12) saw_boundary = true;
        }
    }
    EXPECT_TRUE(saw_boundary);
    EXPECT_EQ(sample_domain(dom, 500, 3), pts);
}

TEST(FitToTolerance, ConstantTargetAtMinimalWidth)
{
    WidthPolicy policy;
    policy.start_width = 16;
    const auto res = fit_to_tolerance([](const Vector&) { return Vector::Constant(1, 0.7); }, FitDomain{1, 1, 1.0}, 1e-4,
                                      policy, 3);
    EXPECT_LE(res.achieved, 1e-4 * policy.margin);
    EXPECT_EQ(res.net.width(), 16);
}

TEST(FitToTolerance, IdentityOnInterval)
{
    WidthPolicy policy;
    const auto res = fit_to_tolerance([](const Vector& x) { return x; }, FitDomain{1, 1, 1.0}, 1e-2, policy, 5);
    EXPECT_LE(res.achieved, 8e-3);
    EXPECT_LE(res.net.width(), 512);
    // Fresh sample set.
    for (const auto& x : sample_ball(1, 1.0, 5000, 77)) ASSERT_LE((forward(res.net, x) - x).norm(), 1e-2);
}

TEST(FitToTolerance, ReportsAchievedWhenWidthExhausted)
{
    WidthPolicy policy;
    policy.start_width = 2;
    policy.max_width = 4;
    try {
        fit_to_tolerance([](const Vector& x) { return Vector::Constant(1, std::sin(3 * x(0))); }, FitDomain{1, 1, 1.0},
                         1e-12, policy, 1);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        EXPECT_GT(e.achieved(), 1e-12);
        EXPECT_TRUE(std::isfinite(e.achieved()));
        EXPECT_LE(e.width(), 4);
        EXPECT_NE(std::string(e.what()).find("tolerance not met"), std::string::npos);
    }
}

TEST(FitToTolerance, NeverReturnsAboveTolerance)
{
    WidthPolicy policy;
    policy.max_width = 256;
    for (double tol : {0.2, 0.05, 0.01, 1e-3}) {
        try {
            const auto res = fit_to_tolerance([](const Vector& x) { return Vector::Constant(1, std::abs(x(0))); },
                                              FitDomain{1, 1, 1.0}, tol, policy, 8);
            EXPECT_LE(res.achieved, tol * policy.margin);
            EXPECT_EQ(res.history.back().second, res.achieved);
        } catch (const FitError& e) {
            EXPECT_GT(e.achieved(), tol * policy.margin);
        }
    }
}

TEST(FitToTolerance, RejectsBadArguments)
{
    WidthPolicy policy;
    EXPECT_THROW(fit_to_tolerance([](const Vector& x) { return x; }, FitDomain{}, 0.0, policy, 1), DomainError);
    policy.margin = 1.5;
    EXPECT_THROW(fit_to_tolerance([](const Vector& x) { return x; }, FitDomain{}, 0.1, policy, 1), DomainError);
}

TEST(FitIdentity, ToleranceOnBallAndSubBall)
{
    WidthPolicy policy;
    const auto res = fit_identity(1, 1.0, 0.05, policy, 2);
    EXPECT_LE(res.achieved, 0.04);
    EXPECT_LE(res.net.width(), 256);
    EXPECT_LE(forward(res.net, Vector::Zero(1)).norm(), 0.05);
    for (const auto& x : sample_ball(1, 0.5, 2000, 4)) ASSERT_LE((forward(res.net, x) - x).norm(), 0.05);
}

TEST(FitIdentity, TwoDimensional)
{
    WidthPolicy policy;
    const auto res = fit_identity(2, 1.0, 0.05, policy, 6);
    EXPECT_EQ(res.net.in_dim(), 2);
    EXPECT_EQ(res.net.out_dim(), 2);
    for (const auto& x : sample_ball(2, 1.0, 2000, 5)) ASSERT_LE((forward(res.net, x) - x).norm(), 0.05);
}
