#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uniesn/linalg.hpp"

namespace uniesn {

/// A finite stretch z_{-(T-1)}, ..., z_0 of a semi-infinite input sequence
/// whose entries lie in the closed Euclidean ball of radius `bound`. Entries
/// older than the window are taken to be zero.
class InputWindow {
public:
    /// Throws DomainError if any entry has norm > bound, the window is empty,
    /// the entries disagree in dimension, or bound <= 0.
    InputWindow(std::vector<Vector> entries, double bound);

    /// Number of stored entries T.
    int length() const noexcept { return static_cast<int>(entries_.size()); }
    int dim() const noexcept { return dim_; }
    double bound() const noexcept { return bound_; }

    /// Entry at time index t in [-(T-1), 0]; anything earlier is zero.
    Vector at(int t) const;

    /// Entries ordered from most past to t = 0.
    const std::vector<Vector>& entries() const noexcept { return entries_; }

    /// The last k+1 entries stacked as (z_{-k}; ...; z_0), zero-filled if the
    /// window is shorter than k+1.
    Vector stacked_tail(int k) const;

    /// Exact entrywise equality (same bound, length, and values).
    friend bool operator==(const InputWindow& a, const InputWindow& b);

private:
    std::vector<Vector> entries_;
    int dim_ = 0;
    double bound_ = 0.0;
};

InputWindow make_window(std::vector<Vector> entries, double bound);

/// Drops the k most recent entries; the entry that was at -k becomes t = 0.
InputWindow shift_window(const InputWindow& w, int k);

/// One point uniform in volume on the closed ball of radius r in R^d.
Vector draw_in_ball(Rng& rng, int d, double radius);

/// n points in the closed ball of radius r in R^d, uniform in volume. The
/// first two points are always the origin and r * e_1.
std::vector<Vector> sample_ball(int d, double radius, int n, std::uint64_t seed);

/// n windows of length T drawn uniformly from the ball of radius M entrywise.
/// The first two are the all-zero window and the constant window M * e_1.
std::vector<InputWindow> sample_windows(int d, double bound, int length, int n,
                                        std::uint64_t seed);

/// sum_{t <= 0} decay^{|t|} ||z1_t - z2_t||, zero-extending the shorter one.
double weighted_distance(const InputWindow& w1, const InputWindow& w2, double decay = 0.5);

/// A Monte Carlo lower estimate of a supremum.
struct SupMetricEstimate {
    double value = 0.0;
    int sample_count = 0;
    std::uint64_t sampler_seed = 0;
};

}  // namespace uniesn
