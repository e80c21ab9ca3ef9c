#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "uniesn/linalg.hpp"
#include "uniesn/sequence.hpp"
#include "uniesn/shallow_net.hpp"

namespace uniesn {

/// Block layout of a constructed reservoir: widths [N~_1, ..., N~_K, N_bar]
/// of the state blocks x^(0), ..., x^(K), stacked in that order.
struct BlockStructure {
    std::vector<int> widths;

    int memory() const noexcept { return static_cast<int>(widths.size()) - 1; }
    int total() const noexcept;
    /// Row/column offset of block i.
    int offset(int block) const;

    friend bool operator==(const BlockStructure&, const BlockStructure&) = default;
};

/// x_t = sigma(A x_{t-1} + C z_t + zeta),  y_t = W x_t.
class ESNParams {
public:
    /// Validates dimensions (and sum of block widths == N when a structure is
    /// given). The block sparsity pattern is not enforced here; see
    /// check_nilpotent.
    ESNParams(Matrix a, Matrix c, Vector zeta, Matrix w, Activation activation = Activation::tanh(),
              std::optional<BlockStructure> structure = std::nullopt);

    int state_dim() const noexcept { return static_cast<int>(a_.rows()); }
    int in_dim() const noexcept { return static_cast<int>(c_.cols()); }
    int out_dim() const noexcept { return static_cast<int>(w_.rows()); }

    const Matrix& A() const noexcept { return a_; }
    const Matrix& C() const noexcept { return c_; }
    const Vector& zeta() const noexcept { return zeta_; }
    const Matrix& W() const noexcept { return w_; }
    Activation activation() const noexcept { return activation_; }
    const std::optional<BlockStructure>& structure() const noexcept { return structure_; }

    /// Compressed copy of A used for stepping; holds only the nonzero entries.
    const Eigen::SparseMatrix<double, Eigen::RowMajor>& A_sparse() const noexcept { return a_sparse_; }

private:
    Matrix a_;
    Matrix c_;
    Vector zeta_;
    Matrix w_;
    Activation activation_;
    std::optional<BlockStructure> structure_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> a_sparse_;
};

Vector esn_step(const ESNParams& p, const Vector& x_prev, const Vector& z);

/// States x_{-(T-1)}, ..., x_0 starting from x_init at time -T.
std::vector<Vector> esn_run(const ESNParams& p, const InputWindow& w, const Vector& x_init);

/// x_0 of the unique solution for the zero-extended input. Structured systems
/// need T >= K+1 and run from the zero state; unstructured ones need
/// L_sigma ||A|| < 1 and start from the fixed point of the zero-input map.
Vector esn_state(const ESNParams& p, const InputWindow& w);

/// W x_0 with x_0 from esn_state.
Vector esn_functional(const ESNParams& p, const InputWindow& w);

struct NilpotencyCheck {
    bool nilpotent = false;
    /// Smallest k <= K+1 with A^k = 0 (0 when none).
    int degree = 0;
    bool pattern_ok = false;
    /// Human-readable location of the first violation, empty when none.
    std::string violation;
};

/// Entrywise block-pattern check plus exact evaluation of A^{K+1}. Requires
/// a structure.
NilpotencyCheck check_nilpotent(const ESNParams& p);

struct EspCheck {
    bool passed = false;
    /// Max |x_0(init_a) - x_0(init_b)| over all trial pairs.
    double max_discrepancy = 0.0;
    bool bitwise = false;
};

/// Runs from `trials` random initial states and compares the time-0 states:
/// bitwise for structured systems, within 1e-9 otherwise. Unstructured runs
/// are preceded by a zero-input burn-in (at most 10^4 steps).
EspCheck check_esp_empirical(const ESNParams& p, const InputWindow& w, int trials, std::uint64_t seed);

inline constexpr double kEspTolerance = 1e-9;

/// True iff esn_functional agrees bitwise on two windows sharing their last
/// K+1 entries. Requires a structure.
bool check_finite_memory(const ESNParams& p, const InputWindow& w1, const InputWindow& w2);

/// L_sigma * ||A||; a value < 1 certifies ESP and FMP.
double check_contraction(const ESNParams& p);

/// Bit-for-bit equality of two vectors.
bool bitwise_equal(const Vector& a, const Vector& b);

}  // namespace uniesn
