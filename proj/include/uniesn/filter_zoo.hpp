#pragma once

#include <functional>
#include <string>
#include <vector>

#include "uniesn/linalg.hpp"
#include "uniesn/sequence.hpp"
#include "uniesn/shallow_net.hpp"

namespace uniesn {

/// One quadratic term of a second-order Volterra filter: contributes
/// coeff * (z_{-lag_a}^T z_{-lag_b}) to the output.
struct QuadraticTerm {
    int lag_a = 0;
    int lag_b = 0;
    Vector coeff;  // m entries
};

/// Causal, time-invariant, fading-memory functional on K_M together with an
/// analytic bound on its finite-memory truncation error.
class TargetFilter {
public:
    enum class Kind { FIR, ExpFading, Volterra2, Uncertified };

    using Functional = std::function<Vector(std::span<const Vector>)>;

    /// H(z) = sum_j taps[j] z_{-j}; each tap is m x d.
    static TargetFilter fir(std::vector<Matrix> taps, double input_bound);
    /// H(z) = sum_{j >= 0} lambda^j B z_{-j} with lambda in (0, 1).
    static TargetFilter exp_fading(Matrix b, double lambda, double input_bound);
    /// FIR part plus finitely many quadratic terms.
    static TargetFilter volterra2(std::vector<Matrix> taps, std::vector<QuadraticTerm> quadratic,
                                  double input_bound);
    /// Arbitrary functional of the entries (past to present). No truncation
    /// bound is available, so the certified construction path rejects it.
    static TargetFilter uncertified(int in_dim, int out_dim, double input_bound, Functional fn);

    Kind kind() const noexcept { return kind_; }
    std::string kind_name() const;
    bool certified() const noexcept { return kind_ != Kind::Uncertified; }
    int in_dim() const noexcept { return d_; }
    int out_dim() const noexcept { return m_; }
    double input_bound() const noexcept { return bound_; }

    const std::vector<Matrix>& taps() const noexcept { return taps_; }
    const Matrix& fading_matrix() const noexcept { return b_; }
    double lambda() const noexcept { return lambda_; }
    const std::vector<QuadraticTerm>& quadratic_terms() const noexcept { return quadratic_; }

    /// Evaluates on raw entries ordered past to present, zero-extended to the
    /// left. No ball check is made on the entries.
    Vector evaluate(std::span<const Vector> entries) const;

private:
    TargetFilter() = default;

    Kind kind_ = Kind::FIR;
    int d_ = 0;
    int m_ = 0;
    double bound_ = 0.0;
    std::vector<Matrix> taps_;
    Matrix b_;
    double lambda_ = 0.0;
    std::vector<QuadraticTerm> quadratic_;
    Functional custom_;
};

/// H_U(z) with z the zero extension of the window.
Vector eval_functional(const TargetFilter& f, const InputWindow& w);

/// U(z)_{-k} = H_U of the window truncated at -k.
Vector eval_filter_at(const TargetFilter& f, const InputWindow& w, int k);

/// Upper bound on sup over K_M of ||H_U(z) - H_U(z restricted to z_{-K..0})||.
/// Throws DomainError for uncertified filters.
double truncation_bound(const TargetFilter& f, int memory);

/// Smallest K >= 0 with truncation_bound(f, K) < budget. Throws DomainError
/// when no K up to 10^4 works.
int choose_K(const TargetFilter& f, double budget);

inline constexpr int kMaxMemory = 10000;

/// The finite-memory restriction G on stacked inputs (z_{-K}; ...; z_0).
VectorMap truncated_functional(const TargetFilter& f, int memory);

}  // namespace uniesn
