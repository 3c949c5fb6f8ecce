#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "pnorm/io.hpp"
#include "pnorm/optimizer.hpp"
#include "pnorm/states.hpp"
#include "pnorm/verify.hpp"

namespace pnorm::cli {
namespace {

struct Options {
    std::string state;
    std::vector<std::string> params;
    std::string file;
    std::string field = "complex";
    bool symmetric = false;
    int restarts = FitConfig{}.restarts;
    int epochs = FitConfig{}.max_epochs;
    double lr = FitConfig{}.step_size;
    double k1 = LossWeights{}.k1;
    double k2 = LossWeights{}.k2;
    double k3 = LossWeights{}.k3;
    double eps = LossWeights{}.epsilon;
    double tolerance = FitConfig{}.prune_tolerance;
    std::optional<double> recon_tol;
    double verdict_tol = 0.02;
    std::uint64_t seed = FitConfig{}.seed;
    std::optional<std::size_t> rank;
    std::vector<std::string> grid;
    std::string out_dir;
    bool trace = false;
    // verify / oracle
    std::string suite = "all";
    int seeds = 20;
    int starts = 64;
};

struct GridAxis {
    std::string name;
    std::vector<double> values;
};

Field parse_field(const std::string& s) { return s == "real" ? Field::Real : Field::Complex; }

std::string field_name(Field f) { return f == Field::Real ? "real" : "complex"; }

double parse_number(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw InputError("cannot parse " + what + ": '" + text + "'");
    }
    if (used != text.size()) throw InputError("cannot parse " + what + ": '" + text + "'");
    return v;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw InputError("--param expects key=value, got '" + item + "'");
        out[item.substr(0, eq)] = parse_number(item.substr(eq + 1), "--param " + item.substr(0, eq));
    }
    return out;
}

GridAxis parse_grid(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--grid expects name=lo:hi:count, got '" + spec + "'");
    GridAxis axis{spec.substr(0, eq), {}};
    std::vector<std::string> parts;
    std::stringstream rest(spec.substr(eq + 1));
    for (std::string part; std::getline(rest, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw InputError("--grid expects name=lo:hi:count, got '" + spec + "'");
    const double lo = parse_number(parts[0], "grid lower bound");
    const double hi = parse_number(parts[1], "grid upper bound");
    const double count = parse_number(parts[2], "grid count");
    if (count < 1 || count != static_cast<int>(count)) throw InputError("grid count must be a positive integer");
    const int n = static_cast<int>(count);
    for (int i = 0; i < n; ++i) axis.values.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return axis;
}

FitConfig make_config(const Options& o) {
    FitConfig c;
    c.weights.k1 = o.k1;
    c.weights.k2 = o.k2;
    c.weights.k3 = o.k3;
    c.weights.epsilon = o.eps;
    c.step_size = o.lr;
    c.max_epochs = o.epochs;
    c.polish_epochs = o.epochs / 4;
    c.prune_tolerance = o.tolerance;
    c.restarts = o.restarts;
    c.seed = o.seed;
    c.recon_tol = o.recon_tol;
    c.rank_override = o.rank;
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    return c;
}

struct Input {
    Tensor tensor;
    std::string label;
    bool density = false;
};

Input load_input(const Options& o, const std::map<std::string, double>& overrides = {}) {
    if (o.state.empty() == o.file.empty()) throw InputError("give exactly one of --state or --file");
    if (!o.file.empty()) {
        Tensor t = read_tensor_file(o.file);
        if (o.field == "real" && t.field() == Field::Complex) {
            for (auto z : t.entries())
                if (z.imag() != 0.0) throw InputError("--field real given for a tensor with imaginary entries");
        }
        t = t.with_field(parse_field(o.field));
        return {std::move(t), o.file, false};
    }
    StateSpec spec{o.state, parse_params(o.params), parse_field(o.field)};
    for (const auto& [k, v] : overrides) spec.params[k] = v;
    try {
        return {make_state(spec), o.state, is_density_state(o.state)};
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

void ensure_out_dir(const Options& o) {
    if (!o.out_dir.empty()) std::filesystem::create_directories(o.out_dir);
}

std::string out_path(const Options& o, const std::string& name) {
    return (std::filesystem::path(o.out_dir) / name).string();
}

void write_fit_outputs(const Options& o, const FitResult& r) {
    if (o.out_dir.empty()) return;
    ensure_out_dir(o);
    write_text_file(out_path(o, "result.json"), result_to_json(r) + "\n");
    if (o.trace) {
        std::ostringstream csv;
        write_trace_csv(csv, r.trace);
        write_text_file(out_path(o, "trace.csv"), csv.str());
    }
}

std::string summary_line(const FitResult& r) {
    return "norm=" + format_double(r.norm_estimate) + " rank=" + std::to_string(r.nuclear_rank) +
           " converged=" + (r.converged ? "true" : "false");
}

int run_norm(const Options& o, std::ostream& out) {
    const FitConfig config = make_config(o);
    const Input in = load_input(o);
    if (in.density) throw InputError("state '" + in.label + "' is an operator; use density-norm");
    FitResult r;
    try {
        r = multi_restart(in.tensor, config, o.symmetric ? FitKind::Symmetric : FitKind::General);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    write_fit_outputs(o, r);
    out << summary_line(r) << "\n";
    return r.converged ? kOk : kNotConverged;
}

FitResult fit_density_input(const Tensor& rho, const FitConfig& config) {
    try {
        operator_party_dims(rho);
        return multi_restart(rho, config, FitKind::Density);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

int run_density_norm(const Options& o, std::ostream& out) {
    const FitConfig config = make_config(o);
    const Input in = load_input(o);
    const FitResult r = fit_density_input(in.tensor, config);
    write_fit_outputs(o, r);
    out << summary_line(r) << "\n";
    out << "verdict=" << to_string(separability_verdict(r, o.verdict_tol, frobenius_norm(in.tensor))) << "\n";
    return r.converged ? kOk : kNotConverged;
}

int run_sweep(const Options& o, std::ostream& out) {
    if (o.grid.empty() || o.grid.size() > 2) throw InputError("sweep needs one or two --grid axes");
    if (o.state.empty()) throw InputError("sweep needs --state");
    const FitConfig config = make_config(o);
    std::vector<GridAxis> axes;
    for (const auto& g : o.grid) axes.push_back(parse_grid(g));
    if (axes.size() == 2 && axes[0].name == axes[1].name) throw InputError("grid axes must differ");
    const std::vector<double> inner = axes.size() == 2 ? axes[1].values : std::vector<double>{0.0};

    std::vector<SweepRow> rows;
    bool all_converged = true;
    for (double p1 : axes[0].values) {
        for (double p2 : inner) {
            std::map<std::string, double> overrides{{axes[0].name, p1}};
            if (axes.size() == 2) overrides[axes[1].name] = p2;
            const Input in = load_input(o, overrides);
            FitResult r;
            if (in.density) {
                r = fit_density_input(in.tensor, config);
            } else {
                try {
                    r = multi_restart(in.tensor, config, o.symmetric ? FitKind::Symmetric : FitKind::General);
                } catch (const std::invalid_argument& e) {
                    throw InputError(e.what());
                }
            }
            all_converged = all_converged && r.converged;
            rows.push_back({p1, p2, r.norm_estimate, r.nuclear_rank, r.recon_error, r.converged});
        }
    }
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    if (o.out_dir.empty()) {
        out << csv.str();
    } else {
        ensure_out_dir(o);
        write_text_file(out_path(o, "sweep.csv"), csv.str());
        out << "rows=" << rows.size() << " file=" << out_path(o, "sweep.csv") << "\n";
    }
    return all_converged ? kOk : kNotConverged;
}

void print_reports(std::ostream& out, const std::vector<CheckReport>& reports) {
    for (const auto& r : reports) {
        out << (r.pass ? "PASS " : "FAIL ") << r.name << " measured=" << format_double(r.measured)
            << " reference=" << format_double(r.reference) << " tolerance=" << format_double(r.tolerance);
        if (!r.details.empty()) out << " (" << r.details << ")";
        out << "\n";
    }
}

int run_verify(const Options& o, std::ostream& out) {
    static const std::vector<std::string> suites = {"gradients", "order2", "consistency", "all"};
    if (std::find(suites.begin(), suites.end(), o.suite) == suites.end()) throw InputError("unknown suite " + o.suite);
    if (o.seeds < 1) throw InputError("--seeds must be positive");
    const FitConfig config = make_config(o);
    const bool all = o.suite == "all";
    std::vector<CheckReport> deciding;

    if (all || o.suite == "gradients") {
        std::vector<CheckReport> reports;
        for (LossKind kind : {LossKind::AdaptiveRank, LossKind::NuclearRank, LossKind::SymmetricNuclearRank,
                              LossKind::Density}) {
            for (Field f : {Field::Real, Field::Complex}) {
                for (int s = 0; s < o.seeds; ++s) {
                    reports.push_back(check_gradient(kind, f, o.seed + static_cast<std::uint64_t>(s)));
                }
            }
        }
        print_reports(out, reports);
        deciding.insert(deciding.end(), reports.begin(), reports.end());
    }
    if (all || o.suite == "order2") {
        std::vector<CheckReport> reports;
        int passed = 0;
        for (int s = 0; s < o.seeds; ++s) {
            reports.push_back(check_order2(random_matrix(4, 4, o.seed + static_cast<std::uint64_t>(s)), config));
            passed += reports.back().pass;
        }
        print_reports(out, reports);
        const double rate = static_cast<double>(passed) / o.seeds;
        const auto summary = make_report("order2 pass rate", rate, 0.95, 0.0, CheckReport::Comparison::AtLeast);
        print_reports(out, {summary});
        deciding.push_back(summary);
    }
    if (all || o.suite == "consistency") {
        std::vector<CheckReport> reports;
        const std::vector<Vector> factors = {Vector{1.0, 0.0}, Vector{0.6, 0.8}};
        for (const Tensor& psi : {product_state(factors), bell(Field::Complex), ghz(3, Field::Complex)}) {
            reports.push_back(check_pure_density_consistency(psi, config));
        }
        print_reports(out, reports);
        deciding.insert(deciding.end(), reports.begin(), reports.end());
    }
    const bool ok = std::all_of(deciding.begin(), deciding.end(), [](const CheckReport& r) { return r.pass; });
    out << (ok ? "all checks passed" : "verification FAILED") << "\n";
    return ok ? kOk : kVerificationFailed;
}

int run_oracle(const Options& o, std::ostream& out) {
    if (o.starts < 1) throw InputError("--starts must be positive");
    const FitConfig config = make_config(o);
    const Input in = load_input(o);
    const FitKind kind = in.density ? FitKind::Density : (o.symmetric ? FitKind::Symmetric : FitKind::General);
    if (in.tensor.order() == 2 && kind == FitKind::General) {
        const std::size_t rows[] = {0};
        out << "svd_nuclear_norm=" << format_double(svd_nuclear_norm(matricize(in.tensor, rows))) << "\n";
    }
    OracleResult r;
    try {
        r = multi_start_oracle(in.tensor, o.starts, config, kind);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    } catch (const std::runtime_error& e) {
        out << "oracle: " << e.what() << "\n";
        return kNotConverged;
    }
    nlohmann::ordered_json j;
    j["state"] = in.label;
    j["field"] = field_name(in.tensor.field());
    j["norm"] = r.norm;
    j["rank"] = r.rank;
    j["oracle_seed"] = o.seed;
    j["n_starts"] = r.n_starts;
    const std::string text = j.dump();
    out << text << "\n";
    out << "converged_starts=" << r.converged_starts << " best_start=" << r.best_start << "\n";
    if (!o.out_dir.empty()) {
        ensure_out_dir(o);
        write_text_file(out_path(o, "oracle.json"), text + "\n");
    }
    return kOk;
}

int run_export(const Options& o, std::ostream& out) {
    const Input in = load_input(o);
    const std::string text = tensor_to_json(in.tensor);
    if (o.out_dir.empty()) {
        out << text << "\n";
    } else {
        ensure_out_dir(o);
        write_text_file(out_path(o, "tensor.json"), text + "\n");
    }
    return kOk;
}

void add_input_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--state", o.state, "Named state (bell, ghz, w, psib, product, random, random-symmetric, "
                                        "dps3, dps4, zzzg, density-<name>)");
    cmd->add_option("--param", o.params, "State parameter key=value (repeatable)");
    cmd->add_option("--file", o.file, "Tensor JSON input file");
    cmd->add_option("--field", o.field, "Optimization field")->check(CLI::IsMember({"real", "complex"}))
        ->capture_default_str();
}

void add_fit_flags(CLI::App* cmd, Options& o) {
    cmd->add_flag("--symmetric", o.symmetric, "Use the symmetric decomposition");
    cmd->add_option("--restarts", o.restarts, "Random restarts")->capture_default_str();
    cmd->add_option("--epochs", o.epochs, "Epoch budget per fit (the last quarter decays the step size)")
        ->capture_default_str();
    cmd->add_option("--lr", o.lr, "Adam step size")->capture_default_str();
    cmd->add_option("--k1", o.k1, "Reconstruction weight")->capture_default_str();
    cmd->add_option("--k2", o.k2, "Rank-count weight")->capture_default_str();
    cmd->add_option("--k3", o.k3, "Norm-cost weight")->capture_default_str();
    cmd->add_option("--eps", o.eps, "Indicator and pruning threshold")->capture_default_str();
    cmd->add_option("--tolerance", o.tolerance, "Coefficient magnitude counted toward the nuclear rank")
        ->capture_default_str();
    cmd->add_option("--recon-tol", o.recon_tol, "Convergence gate on the residual (default 1e-4 * ||T||_F)");
    cmd->add_option("--seed", o.seed, "Base seed")->capture_default_str();
    cmd->add_option("--rank", o.rank, "Candidate rank (default: the rank upper bound)");
    cmd->add_option("--out", o.out_dir, "Output directory");
    cmd->add_flag("--trace", o.trace, "Also write trace.csv to the output directory");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Projective tensor norm estimation"};
    app.require_subcommand(1);
    Options o;

    auto* norm = app.add_subcommand("norm", "Projective norm of a vector-form tensor");
    add_input_flags(norm, o);
    add_fit_flags(norm, o);

    auto* dnorm = app.add_subcommand("density-norm", "Projective norm of a density operator with a verdict");
    add_input_flags(dnorm, o);
    add_fit_flags(dnorm, o);
    dnorm->add_option("--verdict-tol", o.verdict_tol, "Slack above 1 still called separable")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Grid over one or two state parameters");
    add_input_flags(sweep, o);
    add_fit_flags(sweep, o);
    sweep->add_option("--grid", o.grid, "Axis name=lo:hi:count, endpoints included (one or two)");

    auto* oracle = app.add_subcommand("oracle", "Multi-start reference norm");
    add_input_flags(oracle, o);
    add_fit_flags(oracle, o);
    oracle->add_option("--starts", o.starts, "Number of starts")->capture_default_str();

    auto* verify = app.add_subcommand("verify", "Run a check suite");
    add_fit_flags(verify, o);
    verify->add_option("--suite", o.suite, "gradients, order2, consistency or all")->capture_default_str();
    verify->add_option("--seeds", o.seeds, "Instances per check family")->capture_default_str();

    auto* exp = app.add_subcommand("export-state", "Write a named state as tensor JSON");
    add_input_flags(exp, o);
    exp->add_option("--out", o.out_dir, "Output directory (stdout when absent)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }

    try {
        if (norm->parsed()) return run_norm(o, out);
        if (dnorm->parsed()) return run_density_norm(o, out);
        if (sweep->parsed()) return run_sweep(o, out);
        if (oracle->parsed()) return run_oracle(o, out);
        if (verify->parsed()) return run_verify(o, out);
        return run_export(o, out);
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace pnorm::cli
