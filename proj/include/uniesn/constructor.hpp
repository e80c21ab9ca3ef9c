#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uniesn/esn.hpp"
#include "uniesn/filter_zoo.hpp"
#include "uniesn/linalg.hpp"
#include "uniesn/sequence.hpp"
#include "uniesn/shallow_net.hpp"

namespace uniesn {

/// The approximator of the truncated functional, with its hidden matrix cut
/// into the per-lag column blocks A^(-K), ..., A^(0).
class GSplit {
public:
    /// g_net must take (K+1) d inputs.
    GSplit(ShallowNet g_net, int memory, int in_dim);

    const ShallowNet& g_net() const noexcept { return net_; }
    int memory() const noexcept { return memory_; }
    int in_dim() const noexcept { return d_; }
    int width() const noexcept { return net_.width(); }

    /// A^(-lag), lag in [0, K]; N_bar x d.
    Matrix block(int lag) const;
    /// Blocks in stacked-input order A^(-K), ..., A^(0).
    std::vector<Matrix> column_blocks() const;
    const Vector& zeta_bar() const noexcept { return net_.hidden_bias(); }
    const Matrix& w_bar() const noexcept { return net_.readout(); }

private:
    ShallowNet net_;
    int memory_;
    int d_;
};

/// c = ||w_bar|| L_sigma sum_j j ||A^(-j)||; blocks[j] is A^(-j).
double compute_c(const Matrix& w_bar, double lipschitz, const std::vector<Matrix>& blocks);

struct IdentityChain {
    std::vector<ShallowNet> nets;       // I_1, ..., I_K
    std::vector<double> radii;          // fitting ball radius of each I_j
    std::vector<double> achieved;       // sampled fit error of each I_j
    double per_net_tol = 0.0;           // eps / (3c)
};

/// Fits I_j on the ball of radius M + (j-1) eps/(3c) to tolerance eps/(3c).
/// When c == 0 the chain term vanishes for any chain; eps/3 is used as the
/// per-net tolerance in that case. Fit failures are rethrown as
/// StageError("fit_identity") naming j.
IdentityChain build_identity_chain(int d, double bound, int memory, double eps, double c,
                                   const WidthPolicy& policy, std::uint64_t seed,
                                   Activation activation = Activation::tanh());

/// J_j = I_j o ... o I_1 applied to each row of `points`; j = 0 returns the input.
Matrix compose_chain(const std::vector<ShallowNet>& chain, int j, const Matrix& points);

struct ChainCheck {
    bool passed = true;
    std::vector<double> per_j_error;    // sampled sup ||J_j(z) - z||, j = 0..K
    std::vector<double> per_j_norm;     // sampled sup ||J_j(z)||, j = 0..K
    int sample_count = 0;
    std::uint64_t sampler_seed = 0;
    int failed_j = -1;
    Vector witness;
    std::string message;
};

/// Checks ||J_j(z) - z|| < j * per_net_tol and ||J_j(z)|| <= M + j * per_net_tol
/// on n samples of the ball of radius M.
ChainCheck verify_chain_bound(const std::vector<ShallowNet>& chain, double bound, double per_net_tol,
                              int n, std::uint64_t seed);

/// Block matrices of the reservoir built from the G split and the identity chain.
ESNParams assemble_esn(const GSplit& gs, const std::vector<ShallowNet>& chain, int in_dim);

/// sigma(sum_j A^(-j) J_j(z_{-j}) + zeta_bar), evaluated without recursion.
Vector closed_form_state(const GSplit& gs, const std::vector<ShallowNet>& chain, const InputWindow& w);

/// W_bar sigma(sum_j A^(-j) z_{-j} + zeta_bar).
Vector eval_h_fnn(const GSplit& gs, const InputWindow& w);

struct ConstructionConfig {
    double eps = 0.3;
    std::uint64_t seed = 1;
    Activation activation = Activation::tanh();
    WidthPolicy g_policy{32, 2048, 4000, 4000, 0.8, 1e-10, 0.0};
    WidthPolicy identity_policy{16, 1024, 2000, 2000, 0.8, 1e-10, 0.0};
    int g_check_samples = 10000;   // fresh product-ball samples for the G-fit term
    int chain_samples = 10000;     // ball samples for the chain bound
    int budget_windows = 10000;    // windows for the sampled total and chain term
    int window_length = 30;
};

struct ErrorBudget {
    double eps = 0.0;
    double truncation_bound_analytic = 0.0;   // certified upper bound
    double g_fit_sampled = 0.0;               // sampled sup (lower estimate)
    double chain_term_sampled = 0.0;          // sampled sup (lower estimate)
    double total_sampled = 0.0;               // sampled sup (lower estimate)
    std::vector<double> per_j_chain_errors;
    /// Samples where the Lipschitz estimate of the chain term failed.
    int lipschitz_violations = 0;
    /// total_sampled <= truncation + g_fit + chain.
    bool triangle_ok = true;
    std::vector<std::string> violations;

    bool passed() const noexcept { return violations.empty() && lipschitz_violations == 0 && triangle_ok; }
};

struct Construction {
    int memory = 0;
    double c = 0.0;
    GSplit gsplit;
    IdentityChain chain;
    ChainCheck chain_check;
    ESNParams esn;
    ErrorBudget budget;
    std::vector<std::pair<int, double>> g_history;
    std::vector<std::pair<std::string, double>> wall_times;   // seconds per stage
};

/// Runs the whole construction. Stage failures raise StageError; a missed
/// budget is reported in `budget.violations` without throwing.
Construction run_construction(const TargetFilter& f, const ConstructionConfig& cfg);

/// run_construction that additionally raises StageError("budget") naming the
/// offending term when the budget is not met.
Construction construct_universal_esn(const TargetFilter& f, const ConstructionConfig& cfg);

}  // namespace uniesn
