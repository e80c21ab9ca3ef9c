#include "uniesn/constructor.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>

#include "uniesn/errors.hpp"

namespace uniesn {

GSplit::GSplit(ShallowNet g_net, int memory, int in_dim) : net_(std::move(g_net)), memory_(memory), d_(in_dim)
{
    if (memory_ < 0 || d_ < 1) throw DomainError("GSplit: need K >= 0 and d >= 1");
    if (net_.in_dim() != (memory_ + 1) * d_)
        throw DomainError("GSplit: network input dimension is not (K+1) d");
}

Matrix GSplit::block(int lag) const
{
    if (lag < 0 || lag > memory_) throw DomainError("GSplit: lag out of range");
    return net_.hidden_matrix().middleCols(static_cast<Eigen::Index>(memory_ - lag) * d_, d_);
}

std::vector<Matrix> GSplit::column_blocks() const
{
    std::vector<Matrix> out;
    for (int lag = memory_; lag >= 0; --lag) out.push_back(block(lag));
    return out;
}

double compute_c(const Matrix& w_bar, double lipschitz, const std::vector<Matrix>& blocks)
{
    if (blocks.size() <= 1) return 0.0;
    double sum = 0.0;
    for (std::size_t j = 1; j < blocks.size(); ++j) sum += operator_norm(blocks[j]) * static_cast<double>(j);
    return operator_norm(w_bar) * lipschitz * sum;
}

IdentityChain build_identity_chain(int d, double bound, int memory, double eps, double c,
                                   const WidthPolicy& policy, std::uint64_t seed, Activation activation)
{
    if (memory < 0) throw DomainError("build_identity_chain: K must be >= 0");
    if (!(eps > 0.0)) throw DomainError("build_identity_chain: eps must be > 0");
    if (!(c >= 0.0)) throw DomainError("build_identity_chain: c must be >= 0");
    IdentityChain chain;
    if (memory == 0) return chain;
    chain.per_net_tol = c > 0.0 ? eps / (3.0 * c) : eps / 3.0;
    for (int j = 1; j <= memory; ++j) {
        const double radius = bound + (j - 1) * chain.per_net_tol;
        try {
            FitResult fit = fit_identity(d, radius, chain.per_net_tol, policy,
                                         derive_seed(seed, static_cast<std::uint64_t>(j)), activation);
            chain.nets.push_back(std::move(fit.net));
            chain.achieved.push_back(fit.achieved);
            chain.radii.push_back(radius);
        } catch (const FitError& e) {
            throw StageError("fit_identity", "identity net j=" + std::to_string(j) + ": " + e.what());
        }
    }
    return chain;
}

Matrix compose_chain(const std::vector<ShallowNet>& chain, int j, const Matrix& points)
{
    if (j < 0 || j > static_cast<int>(chain.size())) throw DomainError("compose_chain: j out of range");
    Matrix out = points;
    for (int i = 0; i < j; ++i) out = forward_rows(chain[static_cast<std::size_t>(i)], out);
    return out;
}

ChainCheck verify_chain_bound(const std::vector<ShallowNet>& chain, double bound, double per_net_tol, int n,
                              std::uint64_t seed)
{
    ChainCheck out;
    if (chain.empty()) {
        out.per_j_error = {0.0};
        out.per_j_norm = {bound};
        return out;
    }
    const int d = chain.front().in_dim();
    const auto pts = sample_ball(d, bound, n, seed);
    Matrix z(n, d);
    for (int i = 0; i < n; ++i) z.row(i) = pts[static_cast<std::size_t>(i)].transpose();
    out.sample_count = n;
    out.sampler_seed = seed;

    Matrix current = z;
    out.per_j_error.push_back(0.0);
    out.per_j_norm.push_back(z.rowwise().norm().maxCoeff());
    for (std::size_t j = 1; j <= chain.size(); ++j) {
        const ShallowNet& net = chain[j - 1];
        if (net.in_dim() != d || net.out_dim() != d)
            throw DomainError("verify_chain_bound: identity nets must map R^d to R^d");
        current = forward_rows(net, current);
        const Vector err = (current - z).rowwise().norm();
        const Vector nrm = current.rowwise().norm();
        Eigen::Index worst_err = 0, worst_norm = 0;
        out.per_j_error.push_back(err.maxCoeff(&worst_err));
        out.per_j_norm.push_back(nrm.maxCoeff(&worst_norm));
        const double jd = static_cast<double>(j);
        if (out.passed && !(out.per_j_error.back() < jd * per_net_tol)) {
            out.passed = false;
            out.failed_j = static_cast<int>(j);
            out.witness = z.row(worst_err).transpose();
            std::ostringstream msg;
            msg << "sup ||J_" << j << "(z) - z|| = " << out.per_j_error.back() << " is not below " << jd * per_net_tol;
            out.message = msg.str();
        }
        if (out.passed && !(out.per_j_norm.back() <= bound + jd * per_net_tol)) {
            out.passed = false;
            out.failed_j = static_cast<int>(j);
            out.witness = z.row(worst_norm).transpose();
            std::ostringstream msg;
            msg << "sup ||J_" << j << "(z)|| = " << out.per_j_norm.back() << " exceeds " << bound + jd * per_net_tol;
            out.message = msg.str();
        }
    }
    return out;
}

ESNParams assemble_esn(const GSplit& gs, const std::vector<ShallowNet>& chain, int in_dim)
{
    const int k = gs.memory();
    const int d = in_dim;
    if (gs.in_dim() != d) throw DomainError("assemble_esn: G split input dimension differs from d");
    if (static_cast<int>(chain.size()) != k)
        throw DomainError("assemble_esn: chain has " + std::to_string(chain.size()) + " nets, expected K = " +
                          std::to_string(k));
    for (std::size_t j = 0; j < chain.size(); ++j) {
        if (chain[j].in_dim() != d || chain[j].out_dim() != d)
            throw DomainError("assemble_esn: identity net " + std::to_string(j + 1) + " must map R^d to R^d");
        if (chain[j].activation() != gs.g_net().activation())
            throw DomainError("assemble_esn: identity nets must share the activation of G");
    }

    BlockStructure s;
    for (const ShallowNet& net : chain) s.widths.push_back(net.width());
    s.widths.push_back(gs.width());
    const int n = s.total();
    const int last = s.offset(k);

    Matrix a = Matrix::Zero(n, n);
    Matrix c = Matrix::Zero(n, d);
    Vector zeta(n);
    Matrix w = Matrix::Zero(gs.w_bar().rows(), n);

    // Block rows 1..K-1: x^(j) reads x^(j-1) through A~_{j+1} W~_j.
    for (int j = 1; j < k; ++j) {
        const ShallowNet& next = chain[static_cast<std::size_t>(j)];
        const ShallowNet& prev = chain[static_cast<std::size_t>(j - 1)];
        a.block(s.offset(j), s.offset(j - 1), next.width(), prev.width()) = next.hidden_matrix() * prev.readout();
    }
    // Last block row: A^(-j) W~_j in column block j-1.
    for (int j = 1; j <= k; ++j) {
        const ShallowNet& net = chain[static_cast<std::size_t>(j - 1)];
        a.block(last, s.offset(j - 1), gs.width(), net.width()) = gs.block(j) * net.readout();
    }

    if (k >= 1) c.topRows(chain.front().width()) = chain.front().hidden_matrix();
    c.bottomRows(gs.width()) = gs.block(0);

    for (int j = 0; j < k; ++j) zeta.segment(s.offset(j), s.widths[static_cast<std::size_t>(j)]) = chain[static_cast<std::size_t>(j)].hidden_bias();
    zeta.tail(gs.width()) = gs.zeta_bar();

    w.rightCols(gs.width()) = gs.w_bar();
    return ESNParams(std::move(a), std::move(c), std::move(zeta), std::move(w), gs.g_net().activation(), std::move(s));
}

Vector closed_form_state(const GSplit& gs, const std::vector<ShallowNet>& chain, const InputWindow& w)
{
    const int k = gs.memory();
    if (static_cast<int>(chain.size()) != k) throw DomainError("closed_form_state: chain length must be K");
    if (w.dim() != gs.in_dim()) throw DomainError("closed_form_state: window dimension mismatch");
    if (w.length() < k + 1) throw DomainError("closed_form_state: window shorter than K+1");
    Vector pre = gs.zeta_bar();
    for (int j = 0; j <= k; ++j) {
        Vector carried = w.at(-j);
        for (int i = 0; i < j; ++i) carried = forward(chain[static_cast<std::size_t>(i)], carried);
        pre += gs.block(j) * carried;
    }
    return gs.g_net().activation()(pre);
}

Vector eval_h_fnn(const GSplit& gs, const InputWindow& w)
{
    if (w.dim() != gs.in_dim()) throw DomainError("eval_h_fnn: window dimension mismatch");
    if (w.length() < gs.memory() + 1) throw DomainError("eval_h_fnn: window shorter than K+1");
    return forward(gs.g_net(), w.stacked_tail(gs.memory()));
}

namespace {

// Seed streams of the pipeline stages.
enum Stream : std::uint64_t { kFitG = 10, kIdentity = 20, kChainCheck = 30, kGCheck = 40, kBudget = 50 };

class StageTimer {
public:
    explicit StageTimer(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
    void mark(const std::string& stage)
    {
        const auto now = std::chrono::steady_clock::now();
        sink_.emplace_back(stage, std::chrono::duration<double>(now - last_).count());
        last_ = now;
    }

private:
    std::vector<std::pair<std::string, double>>& sink_;
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

}  // namespace

Construction run_construction(const TargetFilter& f, const ConstructionConfig& cfg)
{
    if (!(cfg.eps > 0.0)) throw DomainError("construction: eps must be > 0");
    if (!f.certified()) throw StageError("choose_K", "target filter is uncertified (no analytic truncation bound)");
    const double third = cfg.eps / 3.0;
    const int d = f.in_dim();
    const double bound = f.input_bound();
    const double lip = cfg.activation.lipschitz_const();

    std::vector<std::pair<std::string, double>> times;
    StageTimer timer(times);

    int memory = 0;
    try {
        memory = choose_K(f, third);
    } catch (const DomainError& e) {
        throw StageError("choose_K", e.what());
    }
    timer.mark("choose_K");

    std::optional<FitResult> g_fit;
    try {
        g_fit = fit_to_tolerance(truncated_functional(f, memory), FitDomain{memory + 1, d, bound}, third,
                                 cfg.g_policy, derive_seed(cfg.seed, kFitG), cfg.activation);
    } catch (const FitError& e) {
        throw StageError("fit_G", e.what());
    }
    GSplit gs(g_fit->net, memory, d);
    timer.mark("fit_G");

    std::vector<Matrix> blocks;
    for (int j = 0; j <= memory; ++j) blocks.push_back(gs.block(j));
    const double c = compute_c(gs.w_bar(), lip, blocks);
    if (!std::isfinite(c)) throw StageError("compute_c", "constant c is not finite");
    timer.mark("compute_c");

    IdentityChain chain = build_identity_chain(d, bound, memory, cfg.eps, c, cfg.identity_policy,
                                               derive_seed(cfg.seed, kIdentity), cfg.activation);
    timer.mark("fit_identity");

    ChainCheck chain_check = verify_chain_bound(chain.nets, bound, chain.per_net_tol, cfg.chain_samples,
                                                derive_seed(cfg.seed, kChainCheck));
    if (!chain_check.passed) throw StageError("verify_chain", chain_check.message);
    timer.mark("verify_chain");

    ESNParams esn = [&] {
        try {
            return assemble_esn(gs, chain.nets, d);
        } catch (const DomainError& e) {
            throw StageError("assemble", e.what());
        }
    }();
    timer.mark("assemble");

    ErrorBudget budget;
    budget.eps = cfg.eps;
    budget.truncation_bound_analytic = truncation_bound(f, memory);
    budget.per_j_chain_errors = chain_check.per_j_error;

    // G-fit term: training/validation sup, fresh product-ball samples, and the
    // truncated budget windows are all points of the product ball.
    const VectorMap g_target = truncated_functional(f, memory);
    double g_sup = g_fit->achieved;
    {
        const Matrix pts = sample_domain(FitDomain{memory + 1, d, bound}, cfg.g_check_samples,
                                         derive_seed(cfg.seed, kGCheck));
        const Matrix out = forward_rows(gs.g_net(), pts);
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
            g_sup = std::max(g_sup, (out.row(i).transpose() - g_target(pts.row(i).transpose())).norm());
    }

    const double w_norm = operator_norm(gs.w_bar());
    std::vector<double> block_norms;
    for (const Matrix& b : blocks) block_norms.push_back(operator_norm(b));

    const auto windows = sample_windows(d, bound, std::max(cfg.window_length, memory + 1), cfg.budget_windows,
                                        derive_seed(cfg.seed, kBudget));
    double chain_sup = 0.0;
    double total_sup = 0.0;
    for (const InputWindow& w : windows) {
        const Vector h_u = eval_functional(f, w);
        const Vector h_esn = esn_functional(esn, w);
        const Vector h_fnn = eval_h_fnn(gs, w);
        const Vector stacked = w.stacked_tail(memory);
        g_sup = std::max(g_sup, (g_target(stacked) - h_fnn).norm());
        const double gap = (h_fnn - h_esn).norm();
        chain_sup = std::max(chain_sup, gap);
        total_sup = std::max(total_sup, (h_u - h_esn).norm());

        double rhs = 0.0;
        for (int j = 1; j <= memory; ++j) {
            Vector carried = w.at(-j);
            const Vector z = carried;
            for (int i = 0; i < j; ++i) carried = forward(chain.nets[static_cast<std::size_t>(i)], carried);
            rhs += block_norms[static_cast<std::size_t>(j)] * (z - carried).norm();
        }
        rhs *= w_norm * lip;
        if (gap > rhs) ++budget.lipschitz_violations;
    }
    budget.g_fit_sampled = g_sup;
    budget.chain_term_sampled = chain_sup;
    budget.total_sampled = total_sup;
    budget.triangle_ok = total_sup <= budget.truncation_bound_analytic + g_sup + chain_sup;

    if (!(budget.truncation_bound_analytic < third))
        budget.violations.push_back("truncation " + fmt(budget.truncation_bound_analytic) + " >= eps/3");
    if (!(budget.g_fit_sampled < third)) budget.violations.push_back("g_fit " + fmt(budget.g_fit_sampled) + " >= eps/3");
    if (!(budget.chain_term_sampled < third))
        budget.violations.push_back("chain " + fmt(budget.chain_term_sampled) + " >= eps/3");
    if (!(budget.total_sampled < cfg.eps)) budget.violations.push_back("total " + fmt(budget.total_sampled) + " >= eps");
    if (budget.lipschitz_violations > 0)
        budget.violations.push_back("Lipschitz estimate failed on " + std::to_string(budget.lipschitz_violations) + " samples");
    if (!budget.triangle_ok) budget.violations.push_back("total exceeds the sum of the three terms");
    timer.mark("budget");

    return Construction{memory,       c,     std::move(gs), std::move(chain), std::move(chain_check),
                        std::move(esn), std::move(budget), std::move(g_fit->history), std::move(times)};
}

Construction construct_universal_esn(const TargetFilter& f, const ConstructionConfig& cfg)
{
    Construction out = run_construction(f, cfg);
    if (!out.budget.violations.empty()) throw StageError("budget", out.budget.violations.front());
    return out;
}

}  // namespace uniesn
