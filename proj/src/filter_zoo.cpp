#include "uniesn/filter_zoo.hpp"

#include <cmath>

#include "uniesn/errors.hpp"

namespace uniesn {

namespace {

void check_taps(const std::vector<Matrix>& taps)
{
    if (taps.empty()) throw DomainError("filter needs at least one tap");
    for (const Matrix& a : taps)
        if (a.rows() != taps.front().rows() || a.cols() != taps.front().cols() || a.size() == 0)
            throw DomainError("filter taps must share a nonempty m x d shape");
}

void check_bound(double m)
{
    if (!(m > 0.0)) throw DomainError("input bound M must be positive");
}

}  // namespace

TargetFilter TargetFilter::fir(std::vector<Matrix> taps, double input_bound)
{
    check_taps(taps);
    check_bound(input_bound);
    TargetFilter f;
    f.kind_ = Kind::FIR;
    f.m_ = static_cast<int>(taps.front().rows());
    f.d_ = static_cast<int>(taps.front().cols());
    f.bound_ = input_bound;
    f.taps_ = std::move(taps);
    return f;
}

TargetFilter TargetFilter::exp_fading(Matrix b, double lambda, double input_bound)
{
    if (b.size() == 0) throw DomainError("fading matrix must be nonempty");
    if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("lambda must lie in (0, 1)");
    check_bound(input_bound);
    TargetFilter f;
    f.kind_ = Kind::ExpFading;
    f.m_ = static_cast<int>(b.rows());
    f.d_ = static_cast<int>(b.cols());
    f.bound_ = input_bound;
    f.b_ = std::move(b);
    f.lambda_ = lambda;
    return f;
}

TargetFilter TargetFilter::volterra2(std::vector<Matrix> taps, std::vector<QuadraticTerm> quadratic,
                                     double input_bound)
{
    TargetFilter f = fir(std::move(taps), input_bound);
    for (const QuadraticTerm& q : quadratic) {
        if (q.lag_a < 0 || q.lag_b < 0) throw DomainError("quadratic term lags must be >= 0");
        if (q.coeff.size() != f.m_) throw DomainError("quadratic term coefficient must have m entries");
    }
    f.kind_ = Kind::Volterra2;
    f.quadratic_ = std::move(quadratic);
    return f;
}

TargetFilter TargetFilter::uncertified(int in_dim, int out_dim, double input_bound, Functional fn)
{
    if (in_dim < 1 || out_dim < 1) throw DomainError("filter dimensions must be >= 1");
    check_bound(input_bound);
    if (!fn) throw DomainError("uncertified filter needs a callable");
    TargetFilter f;
    f.kind_ = Kind::Uncertified;
    f.d_ = in_dim;
    f.m_ = out_dim;
    f.bound_ = input_bound;
    f.custom_ = std::move(fn);
    return f;
}

std::string TargetFilter::kind_name() const
{
    switch (kind_) {
    case Kind::FIR: return "fir";
    case Kind::ExpFading: return "exp_fading";
    case Kind::Volterra2: return "volterra2";
    case Kind::Uncertified: return "uncertified";
    }
    return "unknown";
}

Vector TargetFilter::evaluate(std::span<const Vector> entries) const
{
    const int len = static_cast<int>(entries.size());
    for (const Vector& e : entries)
        if (e.size() != d_) throw DomainError("filter input dimension mismatch");
    // lag j reads entries[len - 1 - j]
    auto lagged = [&](int j) -> const Vector* { return j < len ? &entries[static_cast<std::size_t>(len - 1 - j)] : nullptr; };

    Vector out = Vector::Zero(m_);
    switch (kind_) {
    case Kind::ExpFading: {
        double weight = 1.0;
        for (int j = 0; j < len; ++j) {
            out += weight * (b_ * *lagged(j));
            weight *= lambda_;
        }
        break;
    }
    case Kind::FIR:
    case Kind::Volterra2:
        for (int j = 0; j < static_cast<int>(taps_.size()) && j < len; ++j) out += taps_[static_cast<std::size_t>(j)] * *lagged(j);
        for (const QuadraticTerm& q : quadratic_) {
            const Vector* a = lagged(q.lag_a);
            const Vector* b = lagged(q.lag_b);
            if (a && b) out += q.coeff * a->dot(*b);
        }
        break;
    case Kind::Uncertified: {
        out = custom_(entries);
        if (out.size() != m_) throw DomainError("uncertified filter returned wrong output size");
        break;
    }
    }
    return out;
}

Vector eval_functional(const TargetFilter& f, const InputWindow& w)
{
    if (w.dim() != f.in_dim()) throw DomainError("eval_functional: window dimension does not match filter");
    return f.evaluate(w.entries());
}

Vector eval_filter_at(const TargetFilter& f, const InputWindow& w, int k)
{
    return eval_functional(f, shift_window(w, k));
}

double truncation_bound(const TargetFilter& f, int memory)
{
    if (memory < 0) throw DomainError("truncation_bound: K must be >= 0");
    const double m = f.input_bound();
    switch (f.kind()) {
    case TargetFilter::Kind::ExpFading:
        return operator_norm(f.fading_matrix()) * m * std::pow(f.lambda(), memory + 1) / (1.0 - f.lambda());
    case TargetFilter::Kind::FIR:
    case TargetFilter::Kind::Volterra2: {
        double tail = 0.0;
        const auto& taps = f.taps();
        for (std::size_t j = static_cast<std::size_t>(memory) + 1; j < taps.size(); ++j)
            tail += operator_norm(taps[j]) * m;
        for (const QuadraticTerm& q : f.quadratic_terms())
            if (std::max(q.lag_a, q.lag_b) > memory) tail += q.coeff.norm() * m * m;
        return tail;
    }
    case TargetFilter::Kind::Uncertified: break;
    }
    throw DomainError("truncation_bound: filter is uncertified (no analytic tail bound)");
}

int choose_K(const TargetFilter& f, double budget)
{
    if (!(budget > 0.0)) throw DomainError("choose_K: budget must be > 0");
    for (int k = 0; k <= kMaxMemory; ++k)
        if (truncation_bound(f, k) < budget) return k;
    throw DomainError("choose_K: no memory K <= " + std::to_string(kMaxMemory) +
                      " meets the truncation budget " + std::to_string(budget));
}

VectorMap truncated_functional(const TargetFilter& f, int memory)
{
    if (memory < 0) throw DomainError("truncated_functional: K must be >= 0");
    const int d = f.in_dim();
    return [f, memory, d](const Vector& stacked) {
        if (stacked.size() != static_cast<Eigen::Index>(memory + 1) * d)
            throw DomainError("truncated functional expects (K+1) d stacked entries");
        std::vector<Vector> entries;
        entries.reserve(static_cast<std::size_t>(memory + 1));
        for (int i = 0; i <= memory; ++i) entries.push_back(stacked.segment(static_cast<Eigen::Index>(i) * d, d));
        return f.evaluate(entries);
    };
}

}  // namespace uniesn
