#include "uniesn/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "uniesn/constructor.hpp"
#include "uniesn/errors.hpp"
#include "uniesn/io.hpp"

namespace uniesn::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

// Shortest round-trip decimal form, as used in the JSON outputs.
std::string num(double v)
{
    return Json(v).dump();
}

std::optional<io::RunConfig> load_config(const std::string& path, std::ostream& log)
{
    try {
        return io::config_from_json(io::read_json(path));
    } catch (const io::FormatError& e) {
        log << "config error: " << e.what() << "\n";
    } catch (const Json::exception& e) {
        log << "config error: " << path << ": " << e.what() << "\n";
    } catch (const Error& e) {
        log << "config error: " << path << ": " << e.what() << "\n";
    }
    return std::nullopt;
}

/// --seed beats UNIESN_SEED, which beats the config file.
bool apply_seed(io::RunConfig& cfg, const std::optional<std::uint64_t>& flag, std::ostream& log)
{
    if (flag) {
        cfg.construction.seed = *flag;
        return true;
    }
    if (const char* env = std::getenv("UNIESN_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
            cfg.construction.seed = v;
        } catch (const std::exception&) {
            log << "config error: UNIESN_SEED='" << env << "' is not an unsigned integer\n";
            return false;
        }
    }
    return true;
}

fs::path prepare_dir(const std::string& dir)
{
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

std::string budget_csv(const ErrorBudget& b)
{
    std::ostringstream s;
    s << "# schema_version=1\n";
    s << "term,value,bound,status\n";
    const double third = b.eps / 3.0;
    s << "truncation," << num(b.truncation_bound_analytic) << "," << num(third) << ",certified_upper_bound\n";
    s << "g_fit," << num(b.g_fit_sampled) << "," << num(third) << ",sampled_sup\n";
    s << "chain," << num(b.chain_term_sampled) << "," << num(third) << ",sampled_sup\n";
    s << "total," << num(b.total_sampled) << "," << num(b.eps) << ",sampled_sup\n";
    return s.str();
}

Json timings_json(const Construction& c)
{
    Json t = Json::object();
    for (const auto& [stage, secs] : c.wall_times) t[stage] = secs;
    return Json{{"wall_times", t}};
}

void log_construction(const Construction& c, std::ostream& log)
{
    log << "K = " << c.memory << ", N = " << c.esn.state_dim() << ", c = " << c.c << "\n";
    for (const auto& [width, err] : c.g_history) log << "  fit_G width " << width << ": sampled sup " << err << "\n";
    for (std::size_t j = 0; j < c.chain.nets.size(); ++j)
        log << "  I_" << j + 1 << " width " << c.chain.nets[j].width() << ": sampled sup " << c.chain.achieved[j] << "\n";
    const ErrorBudget& b = c.budget;
    log << "budget: truncation " << b.truncation_bound_analytic << " (certified), g_fit " << b.g_fit_sampled
        << ", chain " << b.chain_term_sampled << ", total " << b.total_sampled << " vs eps " << b.eps << "\n";
    for (const auto& [stage, secs] : c.wall_times) log << "  " << stage << ": " << secs << " s\n";
}

}  // namespace

int cmd_construct(const ConstructOptions& opts, std::ostream& out, std::ostream& log)
{
    auto cfg = load_config(opts.config_path, log);
    if (!cfg || !apply_seed(*cfg, opts.seed, log)) return kConfigError;
    const std::string dir_name = opts.out_dir.value_or(cfg->output_dir);

    std::optional<Construction> result;
    try {
        log << "construct: eps = " << cfg->construction.eps << ", seed = " << cfg->construction.seed << "\n";
        result = run_construction(cfg->filter, cfg->construction);
    } catch (const StageError& e) {
        log << "stage " << e.stage() << " failed: " << e.what() << "\n";
        return kStageFailure;
    } catch (const Error& e) {
        log << "stage setup failed: " << e.what() << "\n";
        return kStageFailure;
    }
    log_construction(*result, log);

    fs::path dir;
    try {
        dir = prepare_dir(dir_name);
        io::write_json(dir / "esn.json", io::esn_to_json(result->esn));
        io::write_json(dir / "nets.json", io::nets_to_json(result->gsplit, result->chain.nets));
        io::write_json(dir / "report.json", io::report_to_json(*result, *cfg));
        io::write_text(dir / "budget.csv", budget_csv(result->budget));
        io::write_json(dir / "timings.json", timings_json(*result));
    } catch (const std::exception& e) {
        log << "output error: " << e.what() << "\n";
        return kConfigError;
    }
    out << (dir / "report.json").string() << "\n";

    if (!result->budget.passed()) {
        for (const auto& v : result->budget.violations) log << "budget violation: " << v << "\n";
        return kBudgetViolation;
    }
    return kOk;
}

namespace {

// Window equal to `w` on its last K+1 entries with every older entry moved to
// the boundary sphere (+-M along a random axis).
InputWindow perturb_past(const InputWindow& w, int memory, Rng& rng)
{
    std::vector<Vector> entries = w.entries();
    const int old = w.length() - (memory + 1);
    for (int i = 0; i < old; ++i) {
        Vector v = Vector::Zero(w.dim());
        const auto axis = static_cast<Eigen::Index>(rng.uniform() * w.dim());
        v(std::min<Eigen::Index>(axis, w.dim() - 1)) = rng.uniform() < 0.5 ? -w.bound() : w.bound();
        entries[static_cast<std::size_t>(i)] = v;
    }
    return InputWindow(std::move(entries), w.bound());
}

}  // namespace

int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& log)
{
    auto cfg = load_config(opts.config_path, log);
    if (!cfg) return kConfigError;

    std::optional<ESNParams> esn;
    try {
        esn = io::esn_from_json(io::read_json(opts.esn_path));
    } catch (const std::exception& e) {
        log << "load error: " << opts.esn_path << ": " << e.what() << "\n";
        return kConfigError;
    }
    const double bound = cfg->filter.input_bound();
    const int d = esn->in_dim();
    if (d != cfg->filter.in_dim()) {
        log << "load error: ESN input dimension " << d << " differs from the filter's " << cfg->filter.in_dim() << "\n";
        return kConfigError;
    }

    const fs::path esn_path(opts.esn_path);
    const fs::path nets_path = opts.nets_path ? fs::path(*opts.nets_path) : esn_path.parent_path() / "nets.json";
    const io::VerificationConfig& vc = cfg->verification;
    Json checks = Json::object();
    bool all_passed = true;

    try {
        if (esn->structure()) {
            const int k = esn->structure()->memory();

            const NilpotencyCheck nil = check_nilpotent(*esn);
            checks["nilpotent"] = Json{{"passed", nil.nilpotent}, {"degree", nil.degree}, {"expected_degree", k + 1},
                                       {"pattern_ok", nil.pattern_ok}, {"violation", nil.violation}};
            all_passed = all_passed && nil.nilpotent;
            log << "nilpotent: " << (nil.nilpotent ? "pass" : "FAIL " + nil.violation) << "\n";

            bool esp_ok = true;
            double esp_gap = 0.0;
            const auto esp_windows = sample_windows(d, bound, k + 1, vc.esp_windows, derive_seed(vc.seed, 1));
            for (std::size_t i = 0; i < esp_windows.size(); ++i) {
                const EspCheck e = check_esp_empirical(*esn, esp_windows[i], vc.esp_trials, derive_seed(vc.seed, 100 + i));
                esp_ok = esp_ok && e.passed;
                esp_gap = std::max(esp_gap, e.max_discrepancy);
            }
            checks["esp"] = Json{{"passed", esp_ok}, {"windows", vc.esp_windows}, {"trials", vc.esp_trials},
                                 {"max_discrepancy", esp_gap}, {"mode", "bitwise"}};
            all_passed = all_passed && esp_ok;
            log << "esp: " << (esp_ok ? "pass" : "FAIL") << "\n";

            int fm_failures = 0;
            Rng rng(derive_seed(vc.seed, 2));
            const auto fm_windows =
                sample_windows(d, bound, std::max(vc.window_length, k + 2), vc.fm_trials, derive_seed(vc.seed, 3));
            for (const InputWindow& w : fm_windows)
                if (!check_finite_memory(*esn, w, perturb_past(w, k, rng))) ++fm_failures;
            checks["finite_memory"] = Json{{"passed", fm_failures == 0}, {"trials", vc.fm_trials}, {"failures", fm_failures}};
            all_passed = all_passed && fm_failures == 0;
            log << "finite_memory: " << (fm_failures == 0 ? "pass" : "FAIL") << "\n";

            if (fs::exists(nets_path)) {
                auto [gs, chain] = io::nets_from_json(io::read_json(nets_path));
                const int nbar = gs.width();
                double worst = 0.0;
                bool usable = gs.memory() == k && gs.in_dim() == d && nbar <= esn->state_dim();
                if (usable) {
                    const auto windows = sample_windows(d, bound, std::max(vc.window_length, k + 1), vc.closed_form_windows,
                                                        derive_seed(vc.seed, 4));
                    for (const InputWindow& w : windows) {
                        const Vector rec = esn_state(*esn, w).tail(nbar);
                        worst = std::max(worst, (rec - closed_form_state(gs, chain, w)).cwiseAbs().maxCoeff());
                    }
                }
                const bool ok = usable && worst <= 1e-10;
                checks["closed_form"] = Json{{"passed", ok}, {"windows", vc.closed_form_windows}, {"max_error", worst},
                                             {"tolerance", 1e-10}, {"nets", nets_path.string()}};
                all_passed = all_passed && ok;
                log << "closed_form: " << (ok ? "pass" : "FAIL") << " (max error " << worst << ")\n";
            } else {
                checks["closed_form"] = Json{{"passed", nullptr}, {"skipped", "no nets file at " + nets_path.string()}};
                log << "closed_form: skipped (no " << nets_path.string() << ")\n";
            }
        } else {
            const double lip = check_contraction(*esn);
            const bool contractive = lip < 1.0;
            checks["contraction"] = Json{{"passed", contractive}, {"value", lip}};
            log << "contraction: L_sigma ||A|| = " << lip << (contractive ? " < 1" : " >= 1 (FAIL)") << "\n";
            all_passed = all_passed && contractive;
            if (contractive) {
                bool esp_ok = true;
                double gap = 0.0;
                const auto windows = sample_windows(d, bound, vc.window_length, vc.esp_windows, derive_seed(vc.seed, 1));
                for (std::size_t i = 0; i < windows.size(); ++i) {
                    const EspCheck e = check_esp_empirical(*esn, windows[i], vc.esp_trials, derive_seed(vc.seed, 100 + i));
                    esp_ok = esp_ok && e.passed;
                    gap = std::max(gap, e.max_discrepancy);
                }
                checks["esp"] = Json{{"passed", esp_ok}, {"windows", vc.esp_windows}, {"trials", vc.esp_trials},
                                     {"max_discrepancy", gap}, {"mode", "tolerance"}, {"tolerance", kEspTolerance}};
                all_passed = all_passed && esp_ok;
            }
        }
    } catch (const std::exception& e) {
        log << "verification error: " << e.what() << "\n";
        checks["error"] = e.what();
        all_passed = false;
    }

    const Json report{{"esn", esn_path.string()}, {"structured", esn->structure().has_value()}, {"checks", checks},
                      {"passed", all_passed}};
    fs::path dir;
    try {
        dir = prepare_dir(opts.out_dir.value_or(esn_path.parent_path().empty() ? "." : esn_path.parent_path().string()));
        io::write_json(dir / "verify.json", report);
    } catch (const std::exception& e) {
        log << "output error: " << e.what() << "\n";
        return kConfigError;
    }
    out << (dir / "verify.json").string() << "\n";
    return all_passed ? kOk : kVerifyFailure;
}

std::vector<double> parse_eps_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw std::invalid_argument("malformed eps entry '" + item + "'");
        out.push_back(v);
    }
    return out;
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& log)
{
    auto cfg = load_config(opts.config_path, log);
    if (!cfg || !apply_seed(*cfg, opts.seed, log)) return kConfigError;
    const std::vector<double> eps_list = opts.eps.value_or(cfg->sweep_eps);
    if (eps_list.empty()) {
        log << "config error: empty eps list\n";
        return kConfigError;
    }
    for (double e : eps_list) {
        if (!(e > 0.0)) {
            log << "config error: eps values must be > 0\n";
            return kConfigError;
        }
    }

    std::ostringstream csv;
    csv << "# schema_version=1\n";
    csv << "eps,K,N,widths,truncation,g_fit,chain,total,wall_time,status\n";
    int code = kOk;
    for (double eps : eps_list) {
        ConstructionConfig cc = cfg->construction;
        cc.eps = eps;
        const auto t0 = std::chrono::steady_clock::now();
        std::string status = "ok";
        std::optional<Construction> res;
        try {
            log << "sweep: eps = " << eps << "\n";
            res = run_construction(cfg->filter, cc);
            if (!res->budget.passed()) {
                status = "budget";
                if (code == kOk) code = kBudgetViolation;
            }
        } catch (const StageError& e) {
            status = "stage:" + e.stage();
            log << "stage " << e.stage() << " failed: " << e.what() << "\n";
            code = kStageFailure;
        } catch (const Error& e) {
            status = "error";
            log << "error: " << e.what() << "\n";
            code = kStageFailure;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        csv << num(eps) << ",";
        if (res) {
            std::string widths;
            for (const ShallowNet& n : res->chain.nets) widths += std::to_string(n.width()) + ";";
            widths += std::to_string(res->gsplit.width());
            const ErrorBudget& b = res->budget;
            csv << res->memory << "," << res->esn.state_dim() << "," << widths << "," << num(b.truncation_bound_analytic)
                << "," << num(b.g_fit_sampled) << "," << num(b.chain_term_sampled) << "," << num(b.total_sampled);
            log_construction(*res, log);
        } else {
            csv << ",,,,,,";
        }
        csv << "," << num(secs) << "," << status << "\n";
    }

    fs::path dir;
    try {
        dir = prepare_dir(opts.out_dir.value_or(cfg->output_dir));
        io::write_text(dir / "sweep.csv", csv.str());
    } catch (const std::exception& e) {
        log << "output error: " << e.what() << "\n";
        return kConfigError;
    }
    out << (dir / "sweep.csv").string() << "\n";
    return code;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log)
{
    CLI::App app{"Constructs and verifies universal echo state networks for fading memory filters"};
    app.require_subcommand(1);

    ConstructOptions copts;
    std::string c_out;
    std::uint64_t c_seed = 0;
    auto* construct = app.add_subcommand("construct", "Build an ESN for the target filter in the config");
    construct->add_option("config", copts.config_path, "Run configuration (JSON)")->required();
    auto* c_out_opt = construct->add_option("--out", c_out, "Output directory");
    auto* c_seed_opt = construct->add_option("--seed", c_seed, "Seed (overrides UNIESN_SEED and the config)");

    VerifyOptions vopts;
    std::string v_out, v_nets;
    auto* verify = app.add_subcommand("verify", "Check ESP, nilpotency, finite memory and the closed form");
    verify->add_option("esn", vopts.esn_path, "Serialized ESN (JSON)")->required();
    verify->add_option("config", vopts.config_path, "Run configuration (JSON)")->required();
    auto* v_out_opt = verify->add_option("--out", v_out, "Output directory (default: directory of the ESN)");
    auto* v_nets_opt = verify->add_option("--nets", v_nets, "Serialized nets (default: nets.json beside the ESN)");

    SweepOptions sopts;
    std::string s_eps, s_out;
    std::uint64_t s_seed = 0;
    auto* sweep = app.add_subcommand("sweep", "Tabulate construction size and error against eps");
    sweep->add_option("config", sopts.config_path, "Run configuration (JSON)")->required();
    auto* s_eps_opt = sweep->add_option("--eps", s_eps, "Comma-separated eps list, e.g. 0.5,0.3,0.1");
    auto* s_out_opt = sweep->add_option("--out", s_out, "Output directory");
    auto* s_seed_opt = sweep->add_option("--seed", s_seed, "Seed (overrides UNIESN_SEED and the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        log << e.what() << "\n";
        return kConfigError;
    }

    if (construct->parsed()) {
        if (*c_out_opt) copts.out_dir = c_out;
        if (*c_seed_opt) copts.seed = c_seed;
        return cmd_construct(copts, out, log);
    }
    if (verify->parsed()) {
        if (*v_out_opt) vopts.out_dir = v_out;
        if (*v_nets_opt) vopts.nets_path = v_nets;
        return cmd_verify(vopts, out, log);
    }
    if (*s_out_opt) sopts.out_dir = s_out;
    if (*s_seed_opt) sopts.seed = s_seed;
    if (*s_eps_opt) {
        try {
            sopts.eps = parse_eps_list(s_eps);
        } catch (const std::exception& e) {
            log << "config error: --eps: " << e.what() << "\n";
            return kConfigError;
        }
    }
    return cmd_sweep(sopts, out, log);
}

}  // namespace uniesn::cli
