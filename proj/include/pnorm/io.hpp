#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnorm/objectives.hpp"
#include "pnorm/optimizer.hpp"
#include "pnorm/tensor.hpp"

namespace pnorm {

/// Malformed or unreadable input (CLI exit code 2).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Canonical tensor JSON:
/// {"shape":[...],"field":"real"|"complex","re":[...],"im":[...]}
/// with flat row-major arrays. "im" may be omitted for the real field.
Tensor parse_tensor_json(const std::string& text);
Tensor read_tensor_file(const std::string& path);
std::string tensor_to_json(const Tensor& t);

/// {"norm_estimate":..,"nuclear_rank":..,"recon_error":..,"converged":..,
///  "restart_index":..,"coeffs_abs":[...]}
std::string result_to_json(const FitResult& r);

/// Debug snapshot: the reconstruction in canonical form plus the raw
/// coefficients and cores.
std::string model_snapshot_json(const CpModel& model);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

struct SweepRow {
    double param1 = 0.0;
    double param2 = 0.0;
    double norm = 0.0;
    int rank = 0;
    double recon_error = 0.0;
    bool converged = false;
};

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Shortest round-trip decimal of x (17 significant digits at most).
std::string format_double(double x);

/// Writes `text` to `path`, throwing std::runtime_error on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pnorm
