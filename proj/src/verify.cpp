#include "pnorm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "pnorm/objectives.hpp"
#include "pnorm/rng.hpp"
#include "pnorm/states.hpp"

namespace pnorm {

namespace {

constexpr double kStep = 1e-4;
constexpr double kGradientTolerance = 1e-5;

Scalar random_phase(Rng& rng, Field field) {
    if (field == Field::Real) return rng.uniform() < 0.5 ? -1.0 : 1.0;
    return std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
}

/// Rescales v to a random norm in [0.75, 1.25].
void tame_core(Vector& v, Rng& rng) {
    const double target = 0.75 + 0.5 * rng.uniform();
    const double n = v.norm();
    for (auto& z : v.entries()) z *= target / n;
}

void tame_coeffs(std::vector<Scalar>& coeffs, Field field, Rng& rng) {
    for (auto& c : coeffs) c = (0.2 + rng.uniform()) * random_phase(rng, field);
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1) - 1e-12);
}

struct Instance {
    Tensor target;
    std::vector<Scalar*> params;
    std::vector<Scalar> analytic;
    std::function<double()> loss;
};

template <class Grid>
void append_grid(std::vector<Scalar*>& out, Grid& grid) {
    for (auto& term : grid)
        for (auto& v : term)
            for (auto& z : v.entries()) out.push_back(&z);
}

template <class Grid>
void append_grads(std::vector<Scalar>& out, const Grid& grid) {
    for (const auto& term : grid)
        for (const auto& v : term) out.insert(out.end(), v.begin(), v.end());
}

std::string relative_error_details(std::size_t coords, double abs_err, double ref_norm) {
    std::ostringstream ss;
    ss << coords << " coordinates, |g - fd| = " << abs_err << ", |fd| = " << ref_norm;
    return ss.str();
}

}  // namespace

bool CheckReport::recompute() const {
    switch (comparison) {
        case Comparison::Within: return std::abs(measured - reference) <= tolerance;
        case Comparison::AtLeast: return measured >= reference - tolerance;
        case Comparison::AtMost: return measured <= reference + tolerance;
    }
    return false;
}

CheckReport make_report(std::string name, double measured, double reference, double tolerance,
                        CheckReport::Comparison comparison, std::string details) {
    CheckReport r;
    r.name = std::move(name);
    r.measured = measured;
    r.reference = reference;
    r.tolerance = tolerance;
    r.comparison = comparison;
    r.details = std::move(details);
    r.pass = r.recompute();
    return r;
}

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::AdaptiveRank: return "arcpd";
        case LossKind::NuclearRank: return "nrcpd";
        case LossKind::SymmetricNuclearRank: return "snrcpd";
        case LossKind::Density: return "density";
    }
    return "unknown";
}

Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    return random_state({rows, cols}, Field::Complex, seed);
}

CheckReport check_order2(const Tensor& target, const FitConfig& config) {
    if (target.order() != 2) throw std::invalid_argument("check_order2: target must have order 2");
    const std::size_t rows[] = {0};
    const double reference = svd_nuclear_norm(matricize(target, rows));
    const FitResult r = multi_restart(target, config);
    std::ostringstream ss;
    ss << target.dim(0) << "x" << target.dim(1) << " " << to_string(target.field()) << ", rank " << r.nuclear_rank
       << (r.converged ? "" : ", unconverged");
    return make_report("order2", r.norm_estimate, reference, 1e-2 * reference, CheckReport::Comparison::Within, ss.str());
}

CheckReport check_gradient(LossKind kind, Field field, std::uint64_t seed) {
    Rng rng = Rng(seed).split(0x6AD);
    LossWeights w;
    CpModel cp;
    DensityCpModel dm;
    Instance inst;

    switch (kind) {
        case LossKind::AdaptiveRank:
        case LossKind::NuclearRank: {
            std::vector<std::size_t> dims(pick(rng, 2, 3));
            for (auto& d : dims) d = pick(rng, 2, 3);
            cp = init_model(dims, field, pick(rng, 2, 3), rng.next_u64());
            inst.target = random_state(dims, field, rng.next_u64());
            break;
        }
        case LossKind::SymmetricNuclearRank: {
            const std::size_t d = pick(rng, 2, 3);
            const std::size_t m = pick(rng, 2, 3);
            cp = init_symmetric_model(d, m, field, pick(rng, 2, 3), rng.next_u64());
            inst.target = random_symmetric_state(d, m, field, rng.next_u64());
            break;
        }
        case LossKind::Density: {
            std::vector<std::size_t> dims(pick(rng, 1, 2));
            for (auto& d : dims) d = pick(rng, 2, 3);
            dm = init_density_model(dims, field, pick(rng, 2, 3), rng.next_u64());
            inst.target = random_state(dm.operator_shape(), field, rng.next_u64());
            break;
        }
    }

    if (kind == LossKind::Density) {
        for (auto* grid : {&dm.kets, &dm.bras})
            for (auto& term : *grid)
                for (auto& v : term) tame_core(v, rng);
        tame_coeffs(dm.coeffs, field, rng);
        append_grid(inst.params, dm.kets);
        append_grid(inst.params, dm.bras);
        for (auto& c : dm.coeffs) inst.params.push_back(&c);
        const auto g = gradients(inst.target, dm, w);
        append_grads(inst.analytic, g.kets);
        append_grads(inst.analytic, g.bras);
        inst.analytic.insert(inst.analytic.end(), g.coeffs.begin(), g.coeffs.end());
        inst.loss = [&] { return loss_density(inst.target, dm, w).total; };
    } else {
        for (auto& term : cp.cores)
            for (auto& v : term) tame_core(v, rng);
        tame_coeffs(cp.coeffs, field, rng);
        append_grid(inst.params, cp.cores);
        for (auto& c : cp.coeffs) inst.params.push_back(&c);
        const Objective obj = kind == LossKind::AdaptiveRank ? Objective::AdaptiveRank : Objective::NuclearRank;
        const auto g = gradients(inst.target, cp, w, obj);
        append_grads(inst.analytic, g.cores);
        inst.analytic.insert(inst.analytic.end(), g.coeffs.begin(), g.coeffs.end());
        inst.loss = [&, obj] {
            return obj == Objective::AdaptiveRank ? loss_arcpd(inst.target, cp, w).total
                                                  : loss_nrcpd(inst.target, cp, w).total;
        };
    }

    // One derivative per real coordinate; the imaginary direction exists only
    // over the complex field.
    double err2 = 0.0, ref2 = 0.0;
    std::size_t coords = 0;
    for (std::size_t i = 0; i < inst.params.size(); ++i) {
        Scalar& z = *inst.params[i];
        const Scalar saved = z;
        const int parts = field == Field::Complex ? 2 : 1;
        for (int part = 0; part < parts; ++part) {
            const Scalar dir = part == 0 ? Scalar(1.0, 0.0) : Scalar(0.0, 1.0);
            z = saved + kStep * dir;
            const double up = inst.loss();
            z = saved - kStep * dir;
            const double down = inst.loss();
            z = saved;
            const double fd = (up - down) / (2.0 * kStep);
            const double an = part == 0 ? inst.analytic[i].real() : inst.analytic[i].imag();
            err2 += (an - fd) * (an - fd);
            ref2 += fd * fd;
            ++coords;
        }
    }
    const double rel = std::sqrt(err2) / std::max(std::sqrt(ref2), 1e-300);
    return make_report("gradient/" + to_string(kind) + "/" + to_string(field) + "/seed" + std::to_string(seed), rel, 0.0,
                       kGradientTolerance, CheckReport::Comparison::AtMost,
                       relative_error_details(coords, std::sqrt(err2), std::sqrt(ref2)));
}

CheckReport check_pure_density_consistency(const Tensor& psi, const FitConfig& config) {
    const FitResult vec = multi_restart(psi, config, FitKind::General);
    const FitResult dens = multi_restart(density_from_pure(psi), config, FitKind::Density);
    std::ostringstream ss;
    ss << "vector norm " << vec.norm_estimate << (vec.converged ? "" : " (unconverged)") << ", density rank "
       << dens.nuclear_rank << (dens.converged ? "" : " (unconverged)");
    auto r = make_report("pure-density", dens.norm_estimate, vec.norm_estimate * vec.norm_estimate, 0.03,
                         CheckReport::Comparison::Within, ss.str());
    r.pass = r.pass && vec.converged && dens.converged;
    return r;
}

CheckReport check_frobenius_lower_bound(const FitResult& result, const Tensor& target) {
    return make_report("frobenius-bound", result.norm_estimate, frobenius_norm(target) - result.recon_error, 1e-10,
                       CheckReport::Comparison::AtLeast);
}

OracleResult multi_start_oracle(const Tensor& target, int n_starts, const FitConfig& config, FitKind kind) {
    if (n_starts < 1) throw std::invalid_argument("multi_start_oracle: need at least one start");
    FitConfig c = config;
    c.restarts = n_starts;
    c.max_epochs = 2 * config.max_epochs;
    c.polish_epochs = 2 * config.polish_epochs;
    const auto runs = run_restarts(target, c, kind);
    OracleResult out;
    out.n_starts = n_starts;
    bool found = false;
    for (const auto& r : runs) {
        if (!r.converged) continue;
        ++out.converged_starts;
        if (!found || r.norm_estimate < out.norm) {
            out.norm = r.norm_estimate;
            out.rank = r.nuclear_rank;
            out.best_start = r.restart_index;
            found = true;
        }
    }
    if (!found) throw std::runtime_error("multi_start_oracle: no start converged");
    return out;
}

}  // namespace pnorm
