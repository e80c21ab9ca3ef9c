#include "uniesn/esn.hpp"

#include <cstring>
#include <numeric>
#include <string>

#include "uniesn/errors.hpp"

namespace uniesn {

int BlockStructure::total() const noexcept
{
    return std::accumulate(widths.begin(), widths.end(), 0);
}

int BlockStructure::offset(int block) const
{
    if (block < 0 || block > memory()) throw DomainError("block index out of range");
    return std::accumulate(widths.begin(), widths.begin() + block, 0);
}

ESNParams::ESNParams(Matrix a, Matrix c, Vector zeta, Matrix w, Activation activation,
                     std::optional<BlockStructure> structure)
    : a_(std::move(a)),
      c_(std::move(c)),
      zeta_(std::move(zeta)),
      w_(std::move(w)),
      activation_(activation),
      structure_(std::move(structure))
{
    const auto n = a_.rows();
    if (n < 1 || a_.cols() != n) throw DomainError("A must be square and nonempty");
    if (c_.rows() != n || c_.cols() < 1) throw DomainError("C must be N x d with d >= 1");
    if (zeta_.size() != n) throw DomainError("zeta must have N entries");
    if (w_.cols() != n || w_.rows() < 1) throw DomainError("W must be m x N with m >= 1");
    if (structure_) {
        if (structure_->widths.empty()) throw DomainError("block structure needs at least one block");
        for (int wdt : structure_->widths)
            if (wdt < 1) throw DomainError("block widths must be >= 1");
        if (structure_->total() != n) throw DomainError("block widths do not sum to N");
    }
    a_sparse_ = a_.sparseView();
    a_sparse_.makeCompressed();
}

Vector esn_step(const ESNParams& p, const Vector& x_prev, const Vector& z)
{
    if (x_prev.size() != p.state_dim()) throw DomainError("esn_step: state dimension mismatch");
    if (z.size() != p.in_dim()) throw DomainError("esn_step: input dimension mismatch");
    Vector pre = p.A_sparse() * x_prev;
    pre += p.C() * z;
    pre += p.zeta();
    return p.activation()(pre);
}

std::vector<Vector> esn_run(const ESNParams& p, const InputWindow& w, const Vector& x_init)
{
    if (w.dim() != p.in_dim()) throw DomainError("esn_run: window dimension mismatch");
    std::vector<Vector> traj;
    traj.reserve(static_cast<std::size_t>(w.length()));
    Vector x = x_init;
    for (const Vector& z : w.entries()) {
        x = esn_step(p, x, z);
        traj.push_back(x);
    }
    return traj;
}

namespace {

Vector run_to_zero(const ESNParams& p, const InputWindow& w, Vector x)
{
    for (const Vector& z : w.entries()) x = esn_step(p, x, z);
    return x;
}

constexpr int kMaxBurnIn = 10000;

// Fixed point of x -> sigma(A x + zeta), i.e. the state under an all-zero past.
Vector zero_input_fixed_point(const ESNParams& p)
{
    const Vector zero_in = Vector::Zero(p.in_dim());
    Vector x = Vector::Zero(p.state_dim());
    for (int i = 0; i < kMaxBurnIn; ++i) {
        Vector next = esn_step(p, x, zero_in);
        const double delta = (next - x).cwiseAbs().maxCoeff();
        x = std::move(next);
        if (delta < 1e-12) break;
    }
    return x;
}

}  // namespace

Vector esn_state(const ESNParams& p, const InputWindow& w)
{
    if (w.dim() != p.in_dim()) throw DomainError("esn_state: window dimension mismatch");
    if (p.structure()) {
        const int k = p.structure()->memory();
        if (w.length() < k + 1)
            throw DomainError("esn_state: window of length " + std::to_string(w.length()) +
                              " is shorter than K+1 = " + std::to_string(k + 1));
        return run_to_zero(p, w, Vector::Zero(p.state_dim()));
    }
    const double lip = check_contraction(p);
    if (!(lip < 1.0))
        throw DomainError("esn_state: unstructured system with L_sigma ||A|| = " + std::to_string(lip) +
                          " >= 1; echo state property cannot be certified");
    return run_to_zero(p, w, zero_input_fixed_point(p));
}

Vector esn_functional(const ESNParams& p, const InputWindow& w)
{
    return p.W() * esn_state(p, w);
}

NilpotencyCheck check_nilpotent(const ESNParams& p)
{
    if (!p.structure()) throw DomainError("check_nilpotent: system has no block structure");
    const BlockStructure& s = *p.structure();
    const int k = s.memory();
    const Matrix& a = p.A();

    NilpotencyCheck out;
    out.pattern_ok = true;
    for (int r = 0; r <= k && out.pattern_ok; ++r) {
        for (int c = 0; c <= k && out.pattern_ok; ++c) {
            const bool allowed = c < r && (r == c + 1 || r == k);
            if (allowed) continue;
            const int r0 = s.offset(r);
            const int c0 = s.offset(c);
            for (int i = 0; i < s.widths[static_cast<std::size_t>(r)] && out.pattern_ok; ++i) {
                for (int j = 0; j < s.widths[static_cast<std::size_t>(c)]; ++j) {
                    if (a(r0 + i, c0 + j) != 0.0) {
                        out.pattern_ok = false;
                        out.violation = "nonzero A(" + std::to_string(r0 + i) + "," + std::to_string(c0 + j) +
                                        ") in block (" + std::to_string(r) + "," + std::to_string(c) + ")";
                        break;
                    }
                }
            }
        }
    }

    // Exact powers: sparse products only ever combine stored entries, so a
    // zero result is structural rather than the outcome of cancellation.
    using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
    const Sparse& base = p.A_sparse();
    Sparse power = base;
    auto is_zero = [](const Sparse& m) {
        for (int i = 0; i < m.outerSize(); ++i)
            for (Sparse::InnerIterator it(m, i); it; ++it)
                if (it.value() != 0.0) return false;
        return true;
    };
    for (int deg = 1; deg <= k + 1; ++deg) {
        if (deg > 1) power = Sparse(power * base);
        if (is_zero(power)) {
            out.degree = deg;
            break;
        }
    }
    if (out.degree == 0 && out.violation.empty()) out.violation = "A^(K+1) is not zero";
    out.nilpotent = out.pattern_ok && out.degree != 0;
    if (!out.nilpotent && out.degree != 0 && out.violation.empty()) out.violation = "block pattern violated";
    return out;
}

EspCheck check_esp_empirical(const ESNParams& p, const InputWindow& w, int trials, std::uint64_t seed)
{
    if (trials < 2) throw DomainError("check_esp_empirical: need at least 2 trials");
    if (w.dim() != p.in_dim()) throw DomainError("check_esp_empirical: window dimension mismatch");
    const bool structured = p.structure().has_value();
    if (structured && w.length() < p.structure()->memory() + 1)
        throw DomainError("check_esp_empirical: window shorter than K+1");

    Rng rng(seed);
    const double s = p.activation().sup_bound();
    std::vector<Vector> starts;
    for (int t = 0; t < trials; ++t) starts.push_back(rng.uniform_vector(p.state_dim(), -s, s));

    if (!structured) {
        const Vector zero_in = Vector::Zero(p.in_dim());
        for (int step = 0; step < kMaxBurnIn; ++step) {
            double spread = 0.0;
            for (auto& x : starts) x = esn_step(p, x, zero_in);
            for (std::size_t t = 1; t < starts.size(); ++t)
                spread = std::max(spread, (starts[t] - starts[0]).cwiseAbs().maxCoeff());
            if (spread < 1e-12) break;
        }
    }

    std::vector<Vector> finals;
    for (const auto& x : starts) finals.push_back(run_to_zero(p, w, x));

    EspCheck out;
    out.bitwise = true;
    for (std::size_t t = 1; t < finals.size(); ++t) {
        out.max_discrepancy = std::max(out.max_discrepancy, (finals[t] - finals[0]).cwiseAbs().maxCoeff());
        out.bitwise = out.bitwise && bitwise_equal(finals[t], finals[0]);
    }
    out.passed = structured ? out.bitwise : out.max_discrepancy <= kEspTolerance;
    return out;
}

bool check_finite_memory(const ESNParams& p, const InputWindow& w1, const InputWindow& w2)
{
    if (!p.structure()) throw DomainError("check_finite_memory: system has no block structure");
    const int k = p.structure()->memory();
    if (w1.length() < k + 1 || w2.length() < k + 1)
        throw DomainError("check_finite_memory: windows must have length >= K+1");
    for (int t = -k; t <= 0; ++t)
        if (w1.at(t) != w2.at(t))
            throw DomainError("check_finite_memory: windows differ at index " + std::to_string(t) + " >= -K");
    return bitwise_equal(esn_functional(p, w1), esn_functional(p, w2));
}

double check_contraction(const ESNParams& p)
{
    return p.activation().lipschitz_const() * operator_norm(p.A());
}

bool bitwise_equal(const Vector& a, const Vector& b)
{
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

}  // namespace uniesn
