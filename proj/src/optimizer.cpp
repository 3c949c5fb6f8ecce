#include "pnorm/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <future>
#include <numeric>
#include <thread>

namespace pnorm {

namespace {

constexpr int kMaxDegenerateEvents = 100;
constexpr int kMaxRefineRounds = 3;
constexpr int kRefineEpochs = 2000;
constexpr double kRefineStartRatio = 0.1;
constexpr double kQuietThreshold = 1e-10;

Vector random_core(std::size_t d, Field field, Rng& rng) {
    Vector v(d, field);
    const double sd = std::sqrt(1.0 / static_cast<double>(d));
    for (std::size_t p = 0; p < d; ++p) v[p] = rng.normal(0.0, sd);
    if (field == Field::Complex)
        for (std::size_t p = 0; p < d; ++p) v[p] += Scalar(0.0, rng.normal(0.0, sd));
    return v;
}

std::vector<Scalar> random_coeffs(std::size_t rank, Field field, Rng& rng) {
    std::vector<Scalar> c(rank);
    for (auto& z : c) z = rng.normal();
    if (field == Field::Complex)
        for (auto& z : c) z += Scalar(0.0, rng.normal());
    return c;
}

// Fixed parameter order shared by Adam, the degeneracy scan and the
// quiet-epoch detector: coefficients, then every core vector term by term.
std::vector<Vector*> core_list(CpModel& m) {
    std::vector<Vector*> out;
    for (auto& term : m.cores)
        for (auto& v : term) out.push_back(&v);
    return out;
}

std::vector<Vector*> core_list(DensityCpModel& m) {
    std::vector<Vector*> out;
    for (std::size_t j = 0; j < m.rank(); ++j) {
        for (auto& v : m.kets[j]) out.push_back(&v);
        for (auto& v : m.bras[j]) out.push_back(&v);
    }
    return out;
}

std::vector<const std::vector<Scalar>*> grad_list(const CpGradients& g) {
    std::vector<const std::vector<Scalar>*> out;
    for (const auto& term : g.cores)
        for (const auto& v : term) out.push_back(&v);
    return out;
}

std::vector<const std::vector<Scalar>*> grad_list(const DensityGradients& g) {
    std::vector<const std::vector<Scalar>*> out;
    for (std::size_t j = 0; j < g.coeffs.size(); ++j) {
        for (const auto& v : g.kets[j]) out.push_back(&v);
        for (const auto& v : g.bras[j]) out.push_back(&v);
    }
    return out;
}

/// One Adam update of a single real coordinate; returns the applied move.
double adam_coordinate(double& x, double g, double& m, double& v, const FitConfig& c, double bc1, double bc2) {
    m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * g;
    v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * g * g;
    const double step = c.step_size * (m / bc1) / (std::sqrt(v / bc2) + c.adam_eps);
    x -= step;
    return std::abs(step);
}

/// Shared Adam engine. `frozen[j]` pins coefficient j (value and moments).
/// Returns the largest coordinate move.
template <class Model, class Grads>
double adam_update(Model& model, const Grads& grads, AdamState& state, const FitConfig& config,
                   const std::vector<bool>* frozen) {
    auto cores = core_list(model);
    auto gcores = grad_list(grads);
    if (gcores.size() != cores.size() || grads.coeffs.size() != model.coeffs.size()) {
        throw std::invalid_argument("adam_step: gradient shape does not match model");
    }
    std::size_t n_scalars = model.coeffs.size();
    for (std::size_t k = 0; k < cores.size(); ++k) {
        if (gcores[k]->size() != cores[k]->dim()) throw std::invalid_argument("adam_step: gradient shape mismatch");
        n_scalars += cores[k]->dim();
    }
    if (state.first.empty()) {
        state.first.assign(2 * n_scalars, 0.0);
        state.second.assign(2 * n_scalars, 0.0);
    }
    if (state.first.size() != 2 * n_scalars) throw std::invalid_argument("adam_step: state does not match model");

    ++state.step;
    const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
    const bool complex = model.field == Field::Complex;
    double max_move = 0.0;
    std::size_t slot = 0;

    auto update = [&](Scalar& z, Scalar g) {
        double re = z.real(), im = z.imag();
        max_move = std::max(max_move, adam_coordinate(re, g.real(), state.first[slot], state.second[slot], config,
                                                      bc1, bc2));
        if (complex) {
            max_move = std::max(max_move, adam_coordinate(im, g.imag(), state.first[slot + 1],
                                                          state.second[slot + 1], config, bc1, bc2));
        }
        z = Scalar(re, im);
        slot += 2;
    };

    for (std::size_t j = 0; j < model.coeffs.size(); ++j) {
        if (frozen && (*frozen)[j]) {
            model.coeffs[j] = 0.0;
            state.first[slot] = state.first[slot + 1] = 0.0;
            state.second[slot] = state.second[slot + 1] = 0.0;
            slot += 2;
            continue;
        }
        update(model.coeffs[j], grads.coeffs[j]);
    }
    for (std::size_t k = 0; k < cores.size(); ++k) {
        auto entries = cores[k]->entries();
        for (std::size_t p = 0; p < entries.size(); ++p) update(entries[p], (*gcores[k])[p]);
    }
    return max_move;
}

struct CpOps {
    using Model = CpModel;
    using Grads = CpGradients;
    using Evaluator = CpEvaluator;
    Objective objective;
    Evaluator evaluator(const Tensor& t, const LossWeights& w) const { return CpEvaluator(t, w, objective); }
};

struct DensityOps {
    using Model = DensityCpModel;
    using Grads = DensityGradients;
    using Evaluator = DensityEvaluator;
    Evaluator evaluator(const Tensor& t, const LossWeights& w) const { return DensityEvaluator(t, w); }
};

/// Replaces every core below the degeneracy floor with a fresh draw.
template <class Model>
int repair_degenerate(Model& model, Rng& rng) {
    int events = 0;
    for (Vector* v : core_list(model)) {
        if (v->norm() < kDegeneracyFloor) {
            *v = random_core(v->dim(), model.field, rng);
            ++events;
        }
    }
    return events;
}

Tensor phi_of(const CpModel& m, std::size_t j) { return build_phi(m, j); }
Tensor phi_of(const DensityCpModel& m, std::size_t j) { return build_phi_density(m, j); }

Scalar inner(const Tensor& a, const Tensor& b) {
    Scalar s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

/// Folds every near-parallel pair of terms into one: C_keep += C_drop
/// <phi_keep, phi_drop>, C_drop = 0. The direction of the larger coefficient
/// survives. Returns the number of folds performed.
template <class Model>
int merge_parallel_terms(Model& model) {
    constexpr double kParallel = 0.99;
    const std::size_t R = model.rank();
    std::vector<Tensor> phi(R);
    for (std::size_t j = 0; j < R; ++j) phi[j] = phi_of(model, j);
    int merges = 0;
    for (;;) {
        double best = kParallel;
        std::size_t bi = R, bj = R;
        for (std::size_t i = 0; i < R; ++i) {
            if (model.coeffs[i] == Scalar{}) continue;
            for (std::size_t j = i + 1; j < R; ++j) {
                if (model.coeffs[j] == Scalar{}) continue;
                const double o = std::abs(inner(phi[i], phi[j]));
                if (o > best) {
                    best = o;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi == R) return merges;
        const bool flip = std::abs(model.coeffs[bj]) > std::abs(model.coeffs[bi]);
        const std::size_t keep = flip ? bj : bi, drop = flip ? bi : bj;
        Scalar merged = model.coeffs[keep] + model.coeffs[drop] * inner(phi[keep], phi[drop]);
        if (model.field == Field::Real) merged = merged.real();
        model.coeffs[keep] = merged;
        model.coeffs[drop] = 0.0;
        ++merges;
    }
}

TraceRow trace_row(int epoch, const LossBreakdown& b) {
    return TraceRow{epoch, b.total, b.recon, b.rank_count, b.norm_sum};
}

template <class Ops>
FitResult run_loop(const Tensor& target, const FitConfig& config, typename Ops::Model model, const Ops& ops) {
    Rng repair_rng = Rng(config.seed).split(0xDE6E);
    AdamState state;
    const std::size_t R = model.rank();
    std::vector<bool> frozen(R, false);
    std::vector<int> frozen_until(R, 0);
    int degenerate_events = 0;
    int quiet = 0;

    auto evaluator = ops.evaluator(target, config.weights);
    typename Ops::Grads g;

    FitResult result;
    result.candidate_rank = R;
    result.trace.reserve(static_cast<std::size_t>(config.max_epochs) + 1);

    const int polish_start = config.max_epochs - config.polish_epochs;
    FitConfig step_config = config;
    int epoch = 0;
    for (; epoch < config.max_epochs; ++epoch) {
        if (epoch >= polish_start) {
            const double progress = static_cast<double>(epoch - polish_start) / config.polish_epochs;
            step_config.step_size = config.step_size * std::pow(config.polish_ratio, progress);
        }
        if (config.pruning && epoch > 0) {
            for (std::size_t j = 0; j < R; ++j)
                if (frozen[j] && epoch >= frozen_until[j]) frozen[j] = false;
            if (epoch % config.prune_period == 0) {
                for (std::size_t j = 0; j < R; ++j) {
                    if (!frozen[j] && std::abs(model.coeffs[j]) < config.weights.epsilon) {
                        model.coeffs[j] = 0.0;
                        frozen[j] = true;
                        frozen_until[j] = epoch + config.prune_period;
                    }
                }
            }
        }

        const LossBreakdown b = evaluator.evaluate(model, &g);
        result.trace.push_back(trace_row(epoch, b));
        const double moved = adam_update(model, g, state, step_config, &frozen);

        if (config.observer) config.observer(epoch, model.coeffs);

        const int events = repair_degenerate(model, repair_rng);
        if (events > 0) {
            degenerate_events += events;
            if (degenerate_events > kMaxDegenerateEvents) {
                throw std::runtime_error("fit: too many degenerate-core re-randomizations (divergence)");
            }
        }

        quiet = (b.recon < kQuietThreshold && moved < kQuietThreshold) ? quiet + 1 : 0;
        if (quiet >= config.stagnation_epochs) {
            ++epoch;
            break;
        }
    }

    const double gate = config.recon_tolerance_for(target);
    if (config.merge_parallel) {
        // Split terms along one direction cost almost nothing in sum |C_j|
        // but inflate the rank count. Fold them together, re-polish the rest
        // with the dropped slots frozen, and keep the result when it is still
        // converged and no worse in norm.
        for (int round = 0; round < kMaxRefineRounds; ++round) {
            const LossBreakdown before = evaluator.evaluate(model, nullptr);
            if (before.recon > gate) break;
            auto candidate = model;
            if (merge_parallel_terms(candidate) == 0) break;
            std::vector<bool> dropped(R);
            for (std::size_t j = 0; j < R; ++j) dropped[j] = candidate.coeffs[j] == Scalar{};
            AdamState refine_state;
            std::vector<TraceRow> rows;
            const double first = config.step_size * kRefineStartRatio;
            const double last = config.step_size * config.polish_ratio;
            bool degenerate = false;
            try {
                for (int e = 0; e < kRefineEpochs && !degenerate; ++e) {
                    step_config.step_size = first * std::pow(last / first, static_cast<double>(e) / kRefineEpochs);
                    const LossBreakdown b = evaluator.evaluate(candidate, &g);
                    rows.push_back(trace_row(epoch + e, b));
                    adam_update(candidate, g, refine_state, step_config, &dropped);
                    degenerate = repair_degenerate(candidate, repair_rng) > 0;
                }
            } catch (const DegenerateCoreError&) {
                degenerate = true;
            }
            if (degenerate) break;
            const LossBreakdown after = evaluator.evaluate(candidate, nullptr);
            if (after.recon > gate || after.norm_sum > before.norm_sum + 1e-9) break;
            model = std::move(candidate);
            result.trace.insert(result.trace.end(), rows.begin(), rows.end());
            epoch += kRefineEpochs;
        }
    }
    const LossBreakdown final_loss = evaluator.evaluate(model, nullptr);
    result.trace.push_back(trace_row(epoch, final_loss));
    result.wall_epochs = epoch;
    result.coeffs = model.coeffs;
    result.norm_estimate = norm_estimate(result.coeffs);
    result.nuclear_rank = effective_rank(result.coeffs, config.prune_tolerance);
    result.recon_error = final_loss.recon;
    result.converged = result.recon_error <= gate;
    return result;
}

void require_nonzero(const Tensor& target, const char* what) {
    if (frobenius_norm(target) == 0.0) throw std::invalid_argument(std::string(what) + ": target tensor is zero");
}

}  // namespace

// ---------------------------------------------------------------- config

void FitConfig::validate() const {
    weights.validate();
    if (!(step_size > 0.0)) throw std::invalid_argument("FitConfig: step size must be positive");
    if (!(0.0 < adam_beta1 && adam_beta1 < adam_beta2 && adam_beta2 < 1.0)) {
        throw std::invalid_argument("FitConfig: need 0 < beta1 < beta2 < 1");
    }
    if (!(adam_eps > 0.0)) throw std::invalid_argument("FitConfig: adam_eps must be positive");
    if (max_epochs < 1) throw std::invalid_argument("FitConfig: max_epochs must be positive");
    if (polish_epochs < 0 || polish_epochs > max_epochs) {
        throw std::invalid_argument("FitConfig: polish_epochs must lie in [0, max_epochs]");
    }
    if (!(polish_ratio > 0.0 && polish_ratio <= 1.0)) throw std::invalid_argument("FitConfig: polish_ratio must lie in (0, 1]");
    if (!(prune_tolerance > 0.0)) throw std::invalid_argument("FitConfig: prune tolerance must be positive");
    if (prune_period < 1) throw std::invalid_argument("FitConfig: prune period must be positive");
    if (restarts < 1) throw std::invalid_argument("FitConfig: restarts must be at least 1");
    if (recon_tol && !(*recon_tol > 0.0)) throw std::invalid_argument("FitConfig: recon_tol must be positive");
    if (rank_override && *rank_override < 1) throw std::invalid_argument("FitConfig: rank override must be >= 1");
    if (stagnation_epochs < 1) throw std::invalid_argument("FitConfig: stagnation window must be positive");
}

double FitConfig::recon_tolerance_for(const Tensor& target) const {
    return recon_tol ? *recon_tol : 1e-4 * frobenius_norm(target);
}

// ---------------------------------------------------------------- rank bounds

std::size_t rank_upper_bound(const std::vector<std::size_t>& dims) {
    if (dims.empty()) throw std::invalid_argument("rank_upper_bound: empty dimension list");
    std::size_t prod = 1;
    for (auto d : dims) {
        if (d == 0) throw std::invalid_argument("rank_upper_bound: dimensions must be positive");
        prod *= d;
    }
    return prod / *std::max_element(dims.begin(), dims.end());
}

std::size_t rank_upper_bound_symmetric(std::size_t d, std::size_t m) {
    if (d == 0 || m == 0) throw std::invalid_argument("rank_upper_bound_symmetric: d and m must be positive");
    std::size_t r = 1;
    for (std::size_t k = 1; k < m; ++k) r *= d;
    return r;
}

std::size_t rank_upper_bound_density(const std::vector<std::size_t>& dims) {
    const auto r = rank_upper_bound(dims);
    return r * r;
}

// ---------------------------------------------------------------- initialization

CpModel init_model(const std::vector<std::size_t>& dims, Field field, std::size_t rank, std::uint64_t seed) {
    if (rank < 1) throw std::invalid_argument("init_model: rank must be at least 1");
    Rng rng(seed);
    CpModel m;
    m.dims = dims;
    m.field = field;
    m.cores.resize(rank);
    for (auto& term : m.cores)
        for (auto d : dims) term.push_back(random_core(d, field, rng));
    m.coeffs = random_coeffs(rank, field, rng);
    m.validate();
    return m;
}

CpModel init_symmetric_model(std::size_t d, std::size_t order, Field field, std::size_t rank, std::uint64_t seed) {
    if (rank < 1) throw std::invalid_argument("init_symmetric_model: rank must be at least 1");
    Rng rng(seed);
    CpModel m;
    m.dims.assign(order, d);
    m.field = field;
    m.symmetric = true;
    m.cores.resize(rank);
    for (auto& term : m.cores) term.push_back(random_core(d, field, rng));
    m.coeffs = random_coeffs(rank, field, rng);
    m.validate();
    return m;
}

DensityCpModel init_density_model(const std::vector<std::size_t>& dims, Field field, std::size_t rank,
                                  std::uint64_t seed) {
    if (rank < 1) throw std::invalid_argument("init_density_model: rank must be at least 1");
    Rng rng(seed);
    DensityCpModel m;
    m.dims = dims;
    m.field = field;
    m.kets.resize(rank);
    m.bras.resize(rank);
    for (std::size_t j = 0; j < rank; ++j) {
        for (auto d : dims) m.kets[j].push_back(random_core(d, field, rng));
        for (auto d : dims) m.bras[j].push_back(random_core(d, field, rng));
    }
    m.coeffs = random_coeffs(rank, field, rng);
    m.validate();
    return m;
}

// ---------------------------------------------------------------- Adam

void adam_step(CpModel& model, const CpGradients& grads, AdamState& state, const FitConfig& config) {
    adam_update(model, grads, state, config, nullptr);
}

void adam_step(DensityCpModel& model, const DensityGradients& grads, AdamState& state, const FitConfig& config) {
    adam_update(model, grads, state, config, nullptr);
}

// ---------------------------------------------------------------- fits

FitResult fit(const Tensor& target, const FitConfig& config) {
    config.validate();
    require_nonzero(target, "fit");
    const std::size_t R = config.rank_override.value_or(rank_upper_bound(target.shape()));
    auto model = init_model(target.shape(), target.field(), R, config.seed);
    return run_loop(target, config, std::move(model), CpOps{config.objective});
}

FitResult fit_symmetric(const Tensor& target, const FitConfig& config) {
    config.validate();
    require_nonzero(target, "fit_symmetric");
    const std::size_t d = target.dim(0);
    const std::size_t m = target.order();
    for (std::size_t k = 1; k < m; ++k)
        if (target.dim(k) != d) throw std::invalid_argument("fit_symmetric: mode dimensions must be equal");
    if (symmetry_defect(target) > 1e-10) throw std::invalid_argument("fit_symmetric: target is not symmetric");
    const std::size_t R = config.rank_override.value_or(rank_upper_bound_symmetric(d, m));
    auto model = init_symmetric_model(d, m, target.field(), R, config.seed);
    return run_loop(target, config, std::move(model), CpOps{Objective::NuclearRank});
}

std::vector<std::size_t> operator_party_dims(const Tensor& rho) {
    const std::size_t order = rho.order();
    if (order < 2 || order % 2 != 0) throw std::invalid_argument("density target must have operator shape [d..., d...]");
    const std::size_t m = order / 2;
    std::vector<std::size_t> dims(rho.shape().begin(), rho.shape().begin() + static_cast<std::ptrdiff_t>(m));
    for (std::size_t i = 0; i < m; ++i)
        if (rho.dim(m + i) != dims[i]) throw std::invalid_argument("density target must have operator shape [d..., d...]");
    return dims;
}

FitResult fit_density(const Tensor& target, const FitConfig& config) {
    config.validate();
    require_nonzero(target, "fit_density");
    const auto dims = operator_party_dims(target);
    const std::size_t R = config.rank_override.value_or(rank_upper_bound_density(dims));
    auto model = init_density_model(dims, target.field(), R, config.seed);
    return run_loop(target, config, std::move(model), DensityOps{});
}

FitResult fit_any(const Tensor& target, const FitConfig& config, FitKind kind) {
    switch (kind) {
        case FitKind::Symmetric: return fit_symmetric(target, config);
        case FitKind::Density: return fit_density(target, config);
        case FitKind::General: break;
    }
    return fit(target, config);
}

// ---------------------------------------------------------------- restarts

std::vector<FitResult> run_restarts(const Tensor& target, const FitConfig& config, FitKind kind) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.restarts);
    std::vector<std::optional<FitResult>> slots(n);
    auto one = [&](std::size_t r) -> std::optional<FitResult> {
        FitConfig c = config;
        c.seed = config.seed + r;
        try {
            FitResult res = fit_any(target, c, kind);
            res.restart_index = static_cast<int>(r);
            return res;
        } catch (const std::runtime_error&) {
            return std::nullopt;  // recorded as a failed restart
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    if (workers == 1) {
        for (std::size_t r = 0; r < n; ++r) slots[r] = one(r);
    } else {
        std::vector<std::future<void>> pending;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < workers; ++w) {
            pending.push_back(std::async(std::launch::async, [&] {
                for (std::size_t r = next++; r < n; r = next++) slots[r] = one(r);
            }));
        }
        for (auto& f : pending) f.get();
    }

    std::vector<FitResult> runs;
    for (auto& s : slots)
        if (s) runs.push_back(std::move(*s));
    if (runs.empty()) throw std::runtime_error("multi_restart: every restart failed");
    return runs;
}

const FitResult& select_best(const std::vector<FitResult>& runs) {
    if (runs.empty()) throw std::invalid_argument("select_best: no runs");
    const FitResult* best = nullptr;
    for (const auto& r : runs) {
        if (!r.converged) continue;
        if (!best || r.norm_estimate < best->norm_estimate - 1e-10) best = &r;
    }
    if (best) return *best;
    for (const auto& r : runs)
        if (!best || r.recon_error < best->recon_error) best = &r;
    return *best;
}

FitResult multi_restart(const Tensor& target, const FitConfig& config, FitKind kind) {
    return select_best(run_restarts(target, config, kind));
}

}  // namespace pnorm
