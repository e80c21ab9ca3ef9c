#include "uniesn/io.hpp"

#include <fstream>
#include <sstream>

namespace uniesn::io {

namespace {

const Json& require(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    return j.at(key);
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback)
{
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw FormatError(std::string("field '") + key + "': " + e.what());
    }
}

double to_double(const Json& j)
{
    if (!j.is_number()) throw FormatError("expected a number");
    return j.get<double>();
}

}  // namespace

Json matrix_to_json(const Matrix& m)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j)
{
    if (!j.is_array() || j.empty()) throw FormatError("matrix must be a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j.front().is_array() || j.front().empty()) throw FormatError("matrix rows must be nonempty arrays");
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw FormatError("matrix rows have inconsistent lengths");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = to_double(row[static_cast<std::size_t>(k)]);
    }
    return m;
}

Json vector_to_json(const Vector& v)
{
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const Json& j)
{
    if (!j.is_array()) throw FormatError("vector must be an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(j[i]);
    return v;
}

Json window_to_json(const InputWindow& w)
{
    Json entries = Json::array();
    for (const Vector& e : w.entries()) entries.push_back(vector_to_json(e));
    return Json{{"time_order", "past_to_present"}, {"dim", w.dim()}, {"bound", w.bound()}, {"entries", entries}};
}

InputWindow window_from_json(const Json& j)
{
    if (get_or<std::string>(j, "time_order", "past_to_present") != "past_to_present")
        throw FormatError("window time_order must be 'past_to_present'");
    std::vector<Vector> entries;
    for (const Json& e : require(j, "entries")) entries.push_back(vector_from_json(e));
    InputWindow w(std::move(entries), to_double(require(j, "bound")));
    if (j.contains("dim") && j.at("dim").get<int>() != w.dim()) throw FormatError("window dim disagrees with entries");
    return w;
}

Json net_to_json(const ShallowNet& net)
{
    return Json{{"in_dim", net.in_dim()},
                {"out_dim", net.out_dim()},
                {"width", net.width()},
                {"activation", net.activation().name()},
                {"hidden_matrix", matrix_to_json(net.hidden_matrix())},
                {"hidden_bias", vector_to_json(net.hidden_bias())},
                {"readout", matrix_to_json(net.readout())}};
}

ShallowNet net_from_json(const Json& j)
{
    ShallowNet net(matrix_from_json(require(j, "hidden_matrix")), vector_from_json(require(j, "hidden_bias")),
                   matrix_from_json(require(j, "readout")),
                   Activation::from_name(get_or<std::string>(j, "activation", "tanh")));
    if (get_or<int>(j, "in_dim", net.in_dim()) != net.in_dim() || get_or<int>(j, "out_dim", net.out_dim()) != net.out_dim() ||
        get_or<int>(j, "width", net.width()) != net.width())
        throw FormatError("net header dimensions disagree with its matrices");
    return net;
}

Json filter_to_json(const TargetFilter& f)
{
    Json j{{"kind", f.kind_name()}, {"d", f.in_dim()}, {"m", f.out_dim()}, {"M", f.input_bound()}};
    switch (f.kind()) {
    case TargetFilter::Kind::ExpFading:
        j["lambda"] = f.lambda();
        j["B"] = matrix_to_json(f.fading_matrix());
        break;
    case TargetFilter::Kind::Volterra2: {
        Json quad = Json::array();
        for (const QuadraticTerm& q : f.quadratic_terms())
            quad.push_back(Json{{"lags", {q.lag_a, q.lag_b}}, {"coeff", vector_to_json(q.coeff)}});
        j["quadratic"] = quad;
        [[fallthrough]];
    }
    case TargetFilter::Kind::FIR: {
        Json taps = Json::array();
        for (const Matrix& a : f.taps()) taps.push_back(matrix_to_json(a));
        j["taps"] = taps;
        break;
    }
    case TargetFilter::Kind::Uncertified: throw FormatError("uncertified filters cannot be serialized");
    }
    return j;
}

TargetFilter filter_from_json(const Json& j)
{
    const std::string kind = require(j, "kind").get<std::string>();
    const double bound = to_double(require(j, "M"));
    auto read_taps = [&] {
        std::vector<Matrix> taps;
        for (const Json& t : require(j, "taps")) taps.push_back(matrix_from_json(t));
        return taps;
    };
    TargetFilter f = [&] {
        if (kind == "exp_fading")
            return TargetFilter::exp_fading(matrix_from_json(require(j, "B")), to_double(require(j, "lambda")), bound);
        if (kind == "fir") return TargetFilter::fir(read_taps(), bound);
        if (kind == "volterra2") {
            std::vector<QuadraticTerm> quad;
            for (const Json& q : get_or<Json>(j, "quadratic", Json::array())) {
                const Json& lags = require(q, "lags");
                if (!lags.is_array() || lags.size() != 2) throw FormatError("quadratic lags must be a pair");
                quad.push_back(QuadraticTerm{lags[0].get<int>(), lags[1].get<int>(), vector_from_json(require(q, "coeff"))});
            }
            return TargetFilter::volterra2(read_taps(), std::move(quad), bound);
        }
        throw FormatError("unknown filter kind '" + kind + "'");
    }();
    if (get_or<int>(j, "d", f.in_dim()) != f.in_dim() || get_or<int>(j, "m", f.out_dim()) != f.out_dim())
        throw FormatError("filter d/m disagree with its coefficients");
    return f;
}

Json esn_to_json(const ESNParams& p)
{
    Json structure = nullptr;
    if (p.structure()) structure = Json{{"widths", p.structure()->widths}, {"K", p.structure()->memory()}};
    return Json{{"N", p.state_dim()},
                {"d", p.in_dim()},
                {"m", p.out_dim()},
                {"activation", p.activation().name()},
                {"A", matrix_to_json(p.A())},
                {"C", matrix_to_json(p.C())},
                {"zeta", vector_to_json(p.zeta())},
                {"W", matrix_to_json(p.W())},
                {"structure", structure}};
}

ESNParams esn_from_json(const Json& j)
{
    std::optional<BlockStructure> structure;
    if (j.contains("structure") && !j.at("structure").is_null()) {
        const Json& s = j.at("structure");
        BlockStructure bs{require(s, "widths").get<std::vector<int>>()};
        if (s.contains("K") && s.at("K").get<int>() != bs.memory()) throw FormatError("structure K disagrees with widths");
        structure = std::move(bs);
    }
    ESNParams p(matrix_from_json(require(j, "A")), matrix_from_json(require(j, "C")), vector_from_json(require(j, "zeta")),
                matrix_from_json(require(j, "W")), Activation::from_name(get_or<std::string>(j, "activation", "tanh")),
                std::move(structure));
    if (get_or<int>(j, "N", p.state_dim()) != p.state_dim() || get_or<int>(j, "d", p.in_dim()) != p.in_dim() ||
        get_or<int>(j, "m", p.out_dim()) != p.out_dim())
        throw FormatError("ESN header dimensions disagree with its matrices");
    return p;
}

Json nets_to_json(const GSplit& gs, const std::vector<ShallowNet>& chain)
{
    Json ids = Json::array();
    for (const ShallowNet& n : chain) ids.push_back(net_to_json(n));
    return Json{{"memory", gs.memory()}, {"d", gs.in_dim()}, {"g_net", net_to_json(gs.g_net())}, {"identity_nets", ids}};
}

std::pair<GSplit, std::vector<ShallowNet>> nets_from_json(const Json& j)
{
    GSplit gs(net_from_json(require(j, "g_net")), require(j, "memory").get<int>(), require(j, "d").get<int>());
    std::vector<ShallowNet> chain;
    for (const Json& n : require(j, "identity_nets")) chain.push_back(net_from_json(n));
    return {std::move(gs), std::move(chain)};
}

namespace {

WidthPolicy policy_from_json(const Json& j, WidthPolicy p)
{
    p.start_width = get_or(j, "start_width", p.start_width);
    p.max_width = get_or(j, "max_width", p.max_width);
    p.train_samples = get_or(j, "train_samples", p.train_samples);
    p.validation_samples = get_or(j, "validation_samples", p.validation_samples);
    p.margin = get_or(j, "margin", p.margin);
    p.ridge_per_sample = get_or(j, "ridge_per_sample", p.ridge_per_sample);
    p.scale = get_or(j, "scale", p.scale);
    return p;
}

Json policy_to_json(const WidthPolicy& p)
{
    return Json{{"start_width", p.start_width},         {"max_width", p.max_width},
                {"train_samples", p.train_samples},     {"validation_samples", p.validation_samples},
                {"margin", p.margin},                   {"ridge_per_sample", p.ridge_per_sample},
                {"scale", p.scale}};
}

}  // namespace

RunConfig config_from_json(const Json& j)
{
    if (!j.is_object()) throw FormatError("config must be a JSON object");
    RunConfig cfg;
    try {
        cfg.filter = filter_from_json(require(j, "filter"));
    } catch (const DomainError& e) {
        throw FormatError(std::string("filter: ") + e.what());
    }

    const Json cons = get_or<Json>(j, "construction", Json::object());
    ConstructionConfig& cc = cfg.construction;
    cc.eps = get_or(cons, "eps", cc.eps);
    cc.seed = get_or<std::uint64_t>(cons, "seed", cc.seed);
    cc.activation = Activation::from_name(get_or<std::string>(cons, "activation", cc.activation.name()));
    cc.g_policy = policy_from_json(get_or<Json>(cons, "g_policy", Json::object()), cc.g_policy);
    cc.identity_policy = policy_from_json(get_or<Json>(cons, "identity_policy", Json::object()), cc.identity_policy);
    if (cons.contains("margin")) {
        const double margin = get_or(cons, "margin", 0.8);
        cc.g_policy.margin = margin;
        cc.identity_policy.margin = margin;
    }
    cc.g_check_samples = get_or(cons, "g_check_samples", cc.g_check_samples);
    cc.chain_samples = get_or(cons, "chain_samples", cc.chain_samples);
    cc.budget_windows = get_or(cons, "budget_windows", cc.budget_windows);
    cc.window_length = get_or(cons, "window_length", cc.window_length);
    if (!(cc.eps > 0.0)) throw FormatError("construction.eps must be > 0");
    if (!(cc.g_policy.margin > 0.0 && cc.g_policy.margin <= 1.0) ||
        !(cc.identity_policy.margin > 0.0 && cc.identity_policy.margin <= 1.0))
        throw FormatError("margin must lie in (0, 1]");
    if (cc.g_check_samples < 1 || cc.chain_samples < 1 || cc.budget_windows < 1 || cc.window_length < 1)
        throw FormatError("sample counts and window length must be >= 1");

    const Json ver = get_or<Json>(j, "verification", Json::object());
    VerificationConfig& vc = cfg.verification;
    vc.seed = get_or<std::uint64_t>(ver, "seed", vc.seed);
    vc.esp_windows = get_or(ver, "esp_windows", vc.esp_windows);
    vc.esp_trials = get_or(ver, "esp_trials", vc.esp_trials);
    vc.fm_trials = get_or(ver, "fm_trials", vc.fm_trials);
    vc.closed_form_windows = get_or(ver, "closed_form_windows", vc.closed_form_windows);
    vc.window_length = get_or(ver, "window_length", vc.window_length);
    if (vc.esp_windows < 1 || vc.esp_trials < 2 || vc.fm_trials < 1 || vc.closed_form_windows < 1 || vc.window_length < 1)
        throw FormatError("verification counts out of range");

    const Json sweep = get_or<Json>(j, "sweep", Json::object());
    cfg.sweep_eps = get_or<std::vector<double>>(sweep, "eps", {});
    cfg.output_dir = get_or<std::string>(get_or<Json>(j, "output", Json::object()), "dir", cfg.output_dir);
    return cfg;
}

Json config_to_json(const RunConfig& cfg)
{
    const ConstructionConfig& cc = cfg.construction;
    const VerificationConfig& vc = cfg.verification;
    return Json{{"filter", filter_to_json(cfg.filter)},
                {"construction",
                 {{"eps", cc.eps},
                  {"seed", cc.seed},
                  {"activation", cc.activation.name()},
                  {"g_policy", policy_to_json(cc.g_policy)},
                  {"identity_policy", policy_to_json(cc.identity_policy)},
                  {"g_check_samples", cc.g_check_samples},
                  {"chain_samples", cc.chain_samples},
                  {"budget_windows", cc.budget_windows},
                  {"window_length", cc.window_length}}},
                {"verification",
                 {{"seed", vc.seed},
                  {"esp_windows", vc.esp_windows},
                  {"esp_trials", vc.esp_trials},
                  {"fm_trials", vc.fm_trials},
                  {"closed_form_windows", vc.closed_form_windows},
                  {"window_length", vc.window_length}}},
                {"sweep", {{"eps", cfg.sweep_eps}}},
                {"output", {{"dir", cfg.output_dir}}}};
}

Json report_to_json(const Construction& c, const RunConfig& cfg)
{
    const ErrorBudget& b = c.budget;
    const ConstructionConfig& cc = cfg.construction;
    Json history = Json::array();
    for (const auto& [w, e] : c.g_history) history.push_back(Json{{"width", w}, {"achieved", e}});
    Json identity = Json{{"per_net_tol", c.chain.per_net_tol}, {"radii", c.chain.radii}, {"achieved", c.chain.achieved}};
    Json widths = Json::array();
    for (const ShallowNet& n : c.chain.nets) widths.push_back(n.width());
    widths.push_back(c.gsplit.width());

    return Json{
        {"schema_version", 1},
        {"filter", filter_to_json(cfg.filter)},
        {"K", c.memory},
        {"N", c.esn.state_dim()},
        {"widths", widths},
        {"c", c.c},
        {"budget",
         {{"eps", b.eps},
          {"truncation", b.truncation_bound_analytic},
          {"g_fit", b.g_fit_sampled},
          {"chain", b.chain_term_sampled},
          {"total", b.total_sampled},
          {"status",
           {{"truncation", "certified_upper_bound"},
            {"g_fit", "sampled_sup"},
            {"chain", "sampled_sup"},
            {"total", "sampled_sup"}}},
          {"lipschitz_violations", b.lipschitz_violations},
          {"triangle_ok", b.triangle_ok},
          {"violations", b.violations},
          {"passed", b.passed()}}},
        {"per_j_chain_errors", b.per_j_chain_errors},
        {"per_j_chain_norms", c.chain_check.per_j_norm},
        {"identity", identity},
        {"g_fit", {{"history", history}}},
        {"seeds", {{"base", cc.seed}}},
        {"sample_counts",
         {{"g_train", cc.g_policy.train_samples},
          {"g_validation", cc.g_policy.validation_samples},
          {"identity_train", cc.identity_policy.train_samples},
          {"identity_validation", cc.identity_policy.validation_samples},
          {"g_check", cc.g_check_samples},
          {"chain", cc.chain_samples},
          {"budget_windows", cc.budget_windows},
          {"window_length", cc.window_length}}}};
}

Json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const Json& j)
{
    write_text(path, j.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << text;
    if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace uniesn::io
