#include "uniesn/sequence.hpp"

#include <cmath>
#include <string>

#include "uniesn/errors.hpp"

namespace uniesn {

InputWindow::InputWindow(std::vector<Vector> entries, double bound)
    : entries_(std::move(entries)), bound_(bound)
{
    if (!(bound_ > 0.0)) throw DomainError("window bound must be positive");
    if (entries_.empty()) throw DomainError("window must contain at least one entry");
    dim_ = static_cast<int>(entries_.front().size());
    if (dim_ < 1) throw DomainError("window entries must have dimension >= 1");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const Vector& e = entries_[i];
        if (e.size() != dim_) throw DomainError("window entries have inconsistent dimensions");
        const double n = e.norm();
        if (!(n <= bound_)) {
            throw DomainError("entry " + std::to_string(i) + " has norm " + std::to_string(n) +
                              " outside the ball of radius " + std::to_string(bound_));
        }
    }
}

Vector InputWindow::at(int t) const
{
    if (t > 0) throw DomainError("window has no entries with positive time index");
    const int idx = length() - 1 + t;
    if (idx < 0) return Vector::Zero(dim_);
    return entries_[static_cast<std::size_t>(idx)];
}

Vector InputWindow::stacked_tail(int k) const
{
    if (k < 0) throw DomainError("stacked_tail requires k >= 0");
    Vector out(static_cast<Eigen::Index>(k + 1) * dim_);
    for (int i = 0; i <= k; ++i) out.segment(static_cast<Eigen::Index>(i) * dim_, dim_) = at(i - k);
    return out;
}

bool operator==(const InputWindow& a, const InputWindow& b)
{
    if (a.bound_ != b.bound_ || a.dim_ != b.dim_ || a.length() != b.length()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i)
        if (a.entries_[i] != b.entries_[i]) return false;
    return true;
}

InputWindow make_window(std::vector<Vector> entries, double bound)
{
    return InputWindow(std::move(entries), bound);
}

InputWindow shift_window(const InputWindow& w, int k)
{
    if (k < 0 || k >= w.length()) {
        throw DomainError("shift " + std::to_string(k) + " exhausts a window of length " +
                          std::to_string(w.length()));
    }
    const auto& e = w.entries();
    return InputWindow(std::vector<Vector>(e.begin(), e.end() - k), w.bound());
}

Vector draw_in_ball(Rng& rng, int d, double radius)
{
    Vector dir(d);
    double n = 0.0;
    do {
        for (int i = 0; i < d; ++i) dir(i) = rng.normal();
        n = dir.norm();
    } while (n == 0.0);
    const double r = radius * std::pow(rng.uniform(), 1.0 / d);
    Vector v = dir * (r / n);
    // Guard against rounding pushing a point past the boundary.
    const double vn = v.norm();
    if (vn > radius) v *= radius / vn;
    return v;
}

std::vector<Vector> sample_ball(int d, double radius, int n, std::uint64_t seed)
{
    if (d < 1 || !(radius > 0.0) || n < 1) throw DomainError("sample_ball: need d >= 1, radius > 0, n >= 1");
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(n));
    out.push_back(Vector::Zero(d));
    if (n >= 2) {
        Vector e1 = Vector::Zero(d);
        e1(0) = radius;
        out.push_back(e1);
    }
    Rng rng(seed);
    while (static_cast<int>(out.size()) < n) out.push_back(draw_in_ball(rng, d, radius));
    return out;
}

std::vector<InputWindow> sample_windows(int d, double bound, int length, int n, std::uint64_t seed)
{
    if (d < 1 || !(bound > 0.0) || length < 1 || n < 1) {
        throw DomainError("sample_windows: need d >= 1, M > 0, T >= 1, n >= 1");
    }
    std::vector<InputWindow> out;
    out.reserve(static_cast<std::size_t>(n));
    out.emplace_back(std::vector<Vector>(static_cast<std::size_t>(length), Vector::Zero(d)), bound);
    if (n >= 2) {
        Vector e1 = Vector::Zero(d);
        e1(0) = bound;
        out.emplace_back(std::vector<Vector>(static_cast<std::size_t>(length), e1), bound);
    }
    Rng rng(seed);
    while (static_cast<int>(out.size()) < n) {
        std::vector<Vector> entries;
        entries.reserve(static_cast<std::size_t>(length));
        for (int t = 0; t < length; ++t) entries.push_back(draw_in_ball(rng, d, bound));
        out.emplace_back(std::move(entries), bound);
    }
    return out;
}

double weighted_distance(const InputWindow& w1, const InputWindow& w2, double decay)
{
    if (!(decay > 0.0 && decay < 1.0)) throw DomainError("decay must lie in (0, 1)");
    if (w1.dim() != w2.dim()) throw DomainError("weighted_distance: dimension mismatch");
    const int len = std::max(w1.length(), w2.length());
    double total = 0.0;
    double weight = 1.0;
    for (int k = 0; k < len; ++k) {
        total += weight * (w1.at(-k) - w2.at(-k)).norm();
        weight *= decay;
    }
    return total;
}

}  // namespace uniesn
