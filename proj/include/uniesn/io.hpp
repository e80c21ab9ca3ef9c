#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uniesn/constructor.hpp"
#include "uniesn/errors.hpp"
#include "uniesn/esn.hpp"
#include "uniesn/filter_zoo.hpp"
#include "uniesn/sequence.hpp"
#include "uniesn/shallow_net.hpp"

namespace uniesn::io {

using Json = nlohmann::json;

/// Raised for malformed or inconsistent JSON documents.
class FormatError : public Error {
public:
    using Error::Error;
};

// Matrices are arrays of rows; doubles are written in shortest round-trip form.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

/// {"time_order":"past_to_present","dim":d,"bound":M,"entries":[[...],...]}
Json window_to_json(const InputWindow& w);
InputWindow window_from_json(const Json& j);

/// {in_dim, out_dim, width, activation, hidden_matrix, hidden_bias, readout}
Json net_to_json(const ShallowNet& net);
ShallowNet net_from_json(const Json& j);

/// {"kind":"exp_fading","lambda":..,"B":[[..]],"d":..,"m":..,"M":..}, and
/// {"kind":"fir","taps":[...]} / {"kind":"volterra2","taps":[...],
/// "quadratic":[{"lags":[a,b],"coeff":[...]}]} with the same d, m, M keys.
Json filter_to_json(const TargetFilter& f);
TargetFilter filter_from_json(const Json& j);

/// {N, d, m, activation, A, C, zeta, W, structure:{widths,K}|null}
Json esn_to_json(const ESNParams& p);
ESNParams esn_from_json(const Json& j);

/// {"memory":K, "d":d, "g_net":{...}, "identity_nets":[{...},...]}
Json nets_to_json(const GSplit& gs, const std::vector<ShallowNet>& chain);
std::pair<GSplit, std::vector<ShallowNet>> nets_from_json(const Json& j);

struct VerificationConfig {
    std::uint64_t seed = 7;
    int esp_windows = 10;
    int esp_trials = 10;
    int fm_trials = 1000;
    int closed_form_windows = 1000;
    int window_length = 30;
};

/// The complete run configuration of the command-line driver.
struct RunConfig {
    TargetFilter filter = TargetFilter::exp_fading(Matrix::Ones(1, 1), 0.5, 1.0);
    ConstructionConfig construction;
    VerificationConfig verification;
    std::vector<double> sweep_eps;
    std::string output_dir = ".";
};

RunConfig config_from_json(const Json& j);
Json config_to_json(const RunConfig& cfg);

/// Deterministic pipeline report (no timings).
Json report_to_json(const Construction& c, const RunConfig& cfg);

Json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace uniesn::io
