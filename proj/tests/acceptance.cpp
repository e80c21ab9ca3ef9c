// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "uniesn/cli.hpp"
#include "uniesn/constructor.hpp"
#include "uniesn/io.hpp"

using namespace uniesn;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double svd_norm(const Matrix& a)
{
    if (a.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

io::RunConfig demo_config() { return io::config_from_json(io::read_json(fs::path(UNIESN_CONFIG_DIR) / "exp_fading_demo.json")); }

/// Reservoir matrix rebuilt entry by entry from the nets with scalar loops.
Matrix expected_reservoir(const GSplit& gs, const std::vector<ShallowNet>& chain)
{
    const int k = gs.memory();
    std::vector<int> off{0};
    for (const auto& n : chain) off.push_back(off.back() + n.width());
    const int n_total = off.back() + gs.width();
    Matrix a = Matrix::Zero(n_total, n_total);
    const int d = gs.in_dim();
    auto product = [&](const Matrix& left, const Matrix& right, int row0, int col0) {
        for (int r = 0; r < left.rows(); ++r)
            for (int c = 0; c < right.cols(); ++c) {
                double s = 0.0;
                for (int l = 0; l < d; ++l) s += left(r, l) * right(l, c);
                a(row0 + r, col0 + c) = s;
            }
    };
    for (int j = 1; j < k; ++j)
        product(chain[static_cast<std::size_t>(j)].hidden_matrix(), chain[static_cast<std::size_t>(j - 1)].readout(),
                off[static_cast<std::size_t>(j)], off[static_cast<std::size_t>(j - 1)]);
    const Matrix& g = gs.g_net().hidden_matrix();
    for (int j = 1; j <= k; ++j)
        product(g.middleCols((k - j) * d, d), chain[static_cast<std::size_t>(j - 1)].readout(), off.back(),
                off[static_cast<std::size_t>(j - 1)]);
    return a;
}

/// A^{K+1} == 0 entrywise and A matches the block display entrywise.
bool nilpotent_and_pattern(const Construction& c, std::string& note)
{
    const auto nil = check_nilpotent(c.esn);
    if (!nil.nilpotent || !nil.pattern_ok) {
        note = "check_nilpotent: " + nil.violation;
        return false;
    }
    Matrix power = Matrix::Identity(c.esn.state_dim(), c.esn.state_dim());
    for (int i = 0; i <= c.memory; ++i) power = power * c.esn.A();
    // Dense products of a nilpotent block-triangular matrix still produce exact
    // zeros: every term of each entry multiplies a structural zero.
    if (!(power.array() == 0.0).all()) {
        note = "dense A^(K+1) has nonzero entries";
        return false;
    }
    const Matrix expect = expected_reservoir(c.gsplit, c.chain.nets);
    const double gap = (expect - c.esn.A()).cwiseAbs().maxCoeff();
    const bool zeros_match = ((expect.array() == 0.0) == (c.esn.A().array() == 0.0)).all();
    if (!(gap <= 1e-14) || !zeros_match) {
        note = "entrywise pattern mismatch (gap " + fmt(gap) + ")";
        return false;
    }
    return true;
}

struct Report {
    int failures = 0;
    void line(int id, const std::string& name, bool ok, const std::string& detail)
    {
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << detail << std::endl;
        if (!ok) ++failures;
    }
};

}  // namespace

int main()
{
    Report rep;
    const io::RunConfig demo = demo_config();
    const fs::path work = fs::temp_directory_path() / "uniesn_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    // 1. End-to-end instance on the demo target.
    const auto t1 = Clock::now();
    const Construction main_run = run_construction(demo.filter, demo.construction);
    const double t1_secs = seconds_since(t1);
    {
        const ErrorBudget& b = main_run.budget;
        const bool ok = main_run.memory == 4 && std::abs(b.truncation_bound_analytic - 0.0625) < 1e-15 &&
                        demo.construction.budget_windows >= 10000 && demo.construction.window_length == 30 &&
                        b.total_sampled < 0.3 && b.truncation_bound_analytic < 0.1 && b.g_fit_sampled < 0.1 &&
                        b.chain_term_sampled < 0.1 && b.passed() && t1_secs < 120.0;
        rep.line(1, "end-to-end", ok,
                 "K=" + std::to_string(main_run.memory) + " truncation=" + fmt(b.truncation_bound_analytic) +
                     " g_fit=" + fmt(b.g_fit_sampled) + " chain=" + fmt(b.chain_term_sampled) +
                     " total=" + fmt(b.total_sampled) + " over " + std::to_string(demo.construction.budget_windows) +
                     " windows, " + fmt(t1_secs) + " s");
    }

    // Twenty further constructions shared by criteria 2, 3 and 5.
    std::vector<Construction> instances;
    for (int i = 0; i < 20; ++i) {
        ConstructionConfig cc = demo.construction;
        cc.eps = i % 2 ? 0.5 : 0.4;
        cc.seed = 1000 + static_cast<std::uint64_t>(i);
        cc.budget_windows = 500;
        cc.g_check_samples = 1000;
        cc.chain_samples = 1000;
        instances.push_back(run_construction(demo.filter, cc));
    }

    // 2. Nilpotency and block pattern.
    {
        bool ok = true;
        std::string note;
        int checked = 0;
        for (const Construction* c : [&] {
                 std::vector<const Construction*> all{&main_run};
                 for (const auto& x : instances) all.push_back(&x);
                 return all;
             }()) {
            ++checked;
            if (!nilpotent_and_pattern(*c, note)) {
                ok = false;
                break;
            }
        }
        rep.line(2, "nilpotency", ok, ok ? std::to_string(checked) + " ESNs, A^(K+1) = 0 exactly, pattern entrywise" : note);
    }

    // 3. ESP: 10 random initial states, windows of length K+1, bitwise.
    {
        bool ok = true;
        double worst_secs = 0.0;
        std::uint64_t s = 3000;
        for (const Construction* c : std::vector<const Construction*>{&main_run, &instances[0], &instances[1]}) {
            const auto t0 = Clock::now();
            for (const auto& w : sample_windows(1, 1.0, c->memory + 1, 10, ++s)) {
                const auto r = check_esp_empirical(c->esn, w, 10, ++s);
                ok = ok && r.passed && r.bitwise;
            }
            worst_secs = std::max(worst_secs, seconds_since(t0));
        }
        ok = ok && worst_secs < 1.0;
        rep.line(3, "echo state property", ok, "bitwise over 10 windows x 10 inits, slowest instance " + fmt(worst_secs) + " s");
    }

    // 4. Finite memory: entries older than -K replaced by boundary vectors.
    {
        const int k = main_run.memory;
        const auto windows = sample_windows(1, 1.0, 30, 1000, 4000);
        Rng rng(4001);
        int failures = 0;
        for (const auto& w : windows) {
            std::vector<Vector> e = w.entries();
            for (std::size_t i = 0; i + static_cast<std::size_t>(k) + 1 < e.size(); ++i) {
                Vector v = Vector::Constant(1, rng.uniform() < 0.5 ? -1.0 : 1.0);
                e[i] = v;
            }
            if (!bitwise_equal(esn_functional(main_run.esn, w), esn_functional(main_run.esn, InputWindow(e, 1.0))))
                ++failures;
        }
        rep.line(4, "finite memory", failures == 0, std::to_string(failures) + " changed outputs in 1000 trials");
    }

    // 5. Closed form against the recursion.
    {
        double worst = 0.0;
        std::uint64_t s = 5000;
        for (const auto& c : instances) {
            for (const auto& w : sample_windows(1, 1.0, 30, 1000, ++s)) {
                const Vector rec = esn_state(c.esn, w).tail(c.gsplit.width());
                worst = std::max(worst, (rec - closed_form_state(c.gsplit, c.chain.nets, w)).cwiseAbs().maxCoeff());
            }
        }
        rep.line(5, "closed form", worst <= 1e-10, "max deviation " + fmt(worst) + " over 20 instances x 1000 windows");
    }

    // 6. Chain bound on fresh ball samples.
    {
        const double tol = main_run.chain.per_net_tol;
        const auto check = verify_chain_bound(main_run.chain.nets, 1.0, tol, 10000, 6000);
        bool ok = check.passed && check.sample_count >= 10000 && main_run.chain_check.passed &&
                  main_run.chain_check.sample_count >= 10000 &&
                  std::abs(tol - 0.3 / (3.0 * main_run.c)) <= 1e-15 * tol;
        double worst_ratio = 0.0;
        for (int j = 1; j <= main_run.memory; ++j)
            worst_ratio = std::max(worst_ratio, check.per_j_error[static_cast<std::size_t>(j)] / (j * tol));
        rep.line(6, "chain bound", ok,
                 "K=" + std::to_string(main_run.memory) + ", worst err/(j tol) = " + fmt(worst_ratio) + ", 10000 samples");
    }

    // 7. Lipschitz estimate per sample, with SVD norms.
    {
        const auto& c = main_run;
        const double wn = svd_norm(c.gsplit.w_bar());
        std::vector<double> bn;
        for (int j = 0; j <= c.memory; ++j) bn.push_back(svd_norm(c.gsplit.block(j)));
        int violations = 0;
        const auto windows = sample_windows(1, 1.0, 30, 10000, 7000);
        for (const auto& w : windows) {
            double rhs = 0.0;
            for (int j = 1; j <= c.memory; ++j) {
                Vector carried = w.at(-j);
                for (int i = 0; i < j; ++i) carried = forward(c.chain.nets[static_cast<std::size_t>(i)], carried);
                rhs += bn[static_cast<std::size_t>(j)] * (w.at(-j) - carried).norm();
            }
            rhs *= wn * c.esn.activation().lipschitz_const();
            if ((eval_h_fnn(c.gsplit, w) - esn_functional(c.esn, w)).norm() > rhs) ++violations;
        }
        const bool ok = violations == 0 && c.budget.lipschitz_violations == 0;
        rep.line(7, "lipschitz estimate", ok,
                 std::to_string(violations) + " violations in 10000 windows (pipeline: " +
                     std::to_string(c.budget.lipschitz_violations) + ")");
    }

    // 8. Truncation oracle.
    {
        const TargetFilter f = TargetFilter::exp_fading(Matrix::Ones(1, 1), 0.5, 1.0);
        const double bound = truncation_bound(f, 4);
        const VectorMap g = truncated_functional(f, 4);
        double worst = 0.0;
        for (const auto& w : sample_windows(1, 1.0, 30, 10000, 8000))
            worst = std::max(worst, (eval_functional(f, w) - g(w.stacked_tail(4))).norm());
        const InputWindow constant(std::vector<Vector>(30, Vector::Ones(1)), 1.0);
        const double attained = (eval_functional(f, constant) - g(constant.stacked_tail(4))).norm();
        const bool ok = std::abs(bound - 0.0625) < 1e-15 && worst <= bound && attained >= 0.99 * bound;
        rep.line(8, "truncation oracle", ok,
                 "bound=" + fmt(bound) + " sampled=" + fmt(worst) + " constant window=" + fmt(attained));
    }

    // 9. Sweep through the driver.
    {
        std::ostringstream out, log;
        cli::SweepOptions o{(fs::path(UNIESN_CONFIG_DIR) / "exp_fading_demo.json").string(),
                            std::vector<double>{0.5, 0.3, 0.1}, (work / "sweep").string(), std::nullopt};
        const auto t0 = Clock::now();
        const int code = cli::cmd_sweep(o, out, log);
        const double secs = seconds_since(t0);
        bool ok = code == cli::kOk && secs < 600.0;
        std::istringstream csv(slurp(work / "sweep" / "sweep.csv"));
        std::string line;
        std::getline(csv, line);
        std::getline(csv, line);
        int prev_k = -1, rows = 0;
        std::string detail;
        while (std::getline(csv, line)) {
            std::vector<std::string> cells;
            std::stringstream ls(line);
            for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
            if (cells.size() != 10) {
                ok = false;
                break;
            }
            const double eps = std::stod(cells[0]);
            const int k = std::stoi(cells[1]);
            const double total = std::stod(cells[7]);
            ok = ok && total < eps && k >= prev_k && cells[9] == "ok";
            prev_k = k;
            ++rows;
            detail += " eps=" + cells[0] + ":K=" + cells[1] + ",total=" + fmt(total);
        }
        ok = ok && rows == 3;
        rep.line(9, "sweep", ok, detail.substr(detail.empty() ? 0 : 1) + ", " + fmt(secs) + " s");
    }

    // 10. Determinism of the construct command.
    {
        const std::string cfg = (fs::path(UNIESN_CONFIG_DIR) / "exp_fading_demo.json").string();
        std::ostringstream out, log;
        const int a = cli::cmd_construct(cli::ConstructOptions{cfg, (work / "run_a").string(), std::nullopt}, out, log);
        const int b = cli::cmd_construct(cli::ConstructOptions{cfg, (work / "run_b").string(), std::nullopt}, out, log);
        bool ok = a == cli::kOk && b == cli::kOk;
        for (const char* f : {"esn.json", "report.json"}) {
            const std::string x = slurp(work / "run_a" / f);
            ok = ok && !x.empty() && x == slurp(work / "run_b" / f);
        }
        rep.line(10, "determinism", ok, "esn.json and report.json byte-identical across two runs");
    }

    fs::remove_all(work);
    std::cout << (rep.failures == 0 ? "ALL PASS" : std::to_string(rep.failures) + " FAILED") << std::endl;
    return rep.failures == 0 ? 0 : 1;
}
