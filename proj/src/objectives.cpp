#include "pnorm/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace pnorm {

namespace {

void check_grid(const std::vector<std::vector<Vector>>& grid, const std::vector<std::size_t>& dims,
                std::size_t rank, std::size_t slots, Field field, const char* what) {
    if (grid.size() != rank) throw std::invalid_argument(std::string(what) + ": term count does not match rank");
    for (const auto& term : grid) {
        if (term.size() != slots) throw std::invalid_argument(std::string(what) + ": wrong number of cores per term");
        for (std::size_t i = 0; i < slots; ++i) {
            if (term[i].dim() != dims[i]) throw std::invalid_argument(std::string(what) + ": core dimension mismatch");
            if (term[i].field() != field) throw std::invalid_argument(std::string(what) + ": core field mismatch");
        }
    }
}

void check_coeffs(std::span<const Scalar> coeffs, Field field, const char* what) {
    if (coeffs.empty()) throw std::invalid_argument(std::string(what) + ": rank must be at least 1");
    if (field == Field::Real)
        for (const auto& c : coeffs)
            if (c.imag() != 0.0) throw std::invalid_argument(std::string(what) + ": real model has complex coefficient");
}

/// Unit-normalized factors of one rank-one term, one per target mode.
struct Term {
    std::vector<std::vector<Scalar>> units;
    std::vector<double> norms;
};

std::vector<Scalar> unit_of(const Vector& v, std::size_t term, bool conjugate, double& norm) {
    norm = v.norm();
    if (!(norm >= kDegeneracyFloor)) throw DegenerateCoreError(term);
    std::vector<Scalar> u(v.dim());
    for (std::size_t p = 0; p < v.dim(); ++p) u[p] = (conjugate ? std::conj(v[p]) : v[p]) / norm;
    return u;
}

Term cp_term(const CpModel& model, std::size_t j) {
    Term t;
    const std::size_t m = model.order();
    t.units.resize(m);
    t.norms.resize(m);
    if (model.symmetric) {
        double n = 0.0;
        auto u = unit_of(model.cores[j].front(), j, false, n);
        for (std::size_t i = 0; i < m; ++i) {
            t.units[i] = u;
            t.norms[i] = n;
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) t.units[i] = unit_of(model.cores[j][i], j, false, t.norms[i]);
    }
    return t;
}

// The bra enters the operator entry as conj(b), so its slot holds conj(b)/|b|.
Term density_term(const DensityCpModel& model, std::size_t j) {
    Term t;
    const std::size_t m = model.parties();
    t.units.resize(2 * m);
    t.norms.resize(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        t.units[i] = unit_of(model.kets[j][i], j, false, t.norms[i]);
        t.units[m + i] = unit_of(model.bras[j][i], j, true, t.norms[m + i]);
    }
    return t;
}

void accumulate_rank_one(const Term& term, Scalar weight, Tensor& out) {
    std::vector<Scalar> acc{weight};
    for (const auto& u : term.units) {
        std::vector<Scalar> next;
        next.reserve(acc.size() * u.size());
        for (const auto& a : acc)
            for (const auto& x : u) next.push_back(a * x);
        acc = std::move(next);
    }
    auto e = out.entries();
    for (std::size_t i = 0; i < acc.size(); ++i) e[i] += acc[i];
}

Tensor rank_one(const Term& term, const std::vector<std::size_t>& shape, Field field) {
    Tensor out(shape, field);
    accumulate_rank_one(term, Scalar{1.0}, out);
    return out;
}

Scalar magnitude_gradient(Scalar c) {
    const double a = std::abs(c);
    return a == 0.0 ? Scalar{} : c / a;
}

void realify(std::vector<Scalar>& v) {
    for (auto& z : v) z = z.real();
}

void require_same_shape_dims(const std::vector<std::size_t>& target, const std::vector<std::size_t>& shape,
                             const char* what) {
    if (target != shape) throw std::invalid_argument(std::string(what) + ": target shape does not match model");
}

LossBreakdown breakdown(double recon, std::span<const Scalar> coeffs, const LossWeights& w, bool with_norm) {
    LossBreakdown b;
    b.recon = recon;
    for (const auto& c : coeffs) {
        const double a = std::abs(c);
        if (a > w.epsilon) ++b.rank_count;
        b.norm_sum += a;
    }
    b.total = w.k1 * b.recon + w.k2 * b.rank_count + (with_norm ? w.k3 * b.norm_sum : 0.0);
    return b;
}

}  // namespace

// ---------------------------------------------------------------- model invariants

void CpModel::validate() const {
    if (dims.empty()) throw std::invalid_argument("CpModel: order must be at least 1");
    for (auto d : dims)
        if (d == 0) throw std::invalid_argument("CpModel: mode dimensions must be positive");
    check_coeffs(coeffs, field, "CpModel");
    if (symmetric) {
        for (auto d : dims)
            if (d != dims.front()) throw std::invalid_argument("CpModel: symmetric mode needs equal dimensions");
        check_grid(cores, {dims.front()}, rank(), 1, field, "CpModel");
    } else {
        check_grid(cores, dims, rank(), dims.size(), field, "CpModel");
    }
}

std::vector<std::size_t> DensityCpModel::operator_shape() const {
    std::vector<std::size_t> s = dims;
    s.insert(s.end(), dims.begin(), dims.end());
    return s;
}

void DensityCpModel::validate() const {
    if (dims.empty()) throw std::invalid_argument("DensityCpModel: at least one party required");
    for (auto d : dims)
        if (d == 0) throw std::invalid_argument("DensityCpModel: party dimensions must be positive");
    check_coeffs(coeffs, field, "DensityCpModel");
    check_grid(kets, dims, rank(), dims.size(), field, "DensityCpModel kets");
    check_grid(bras, dims, rank(), dims.size(), field, "DensityCpModel bras");
}

void LossWeights::validate() const {
    if (!(k1 > 0.0)) throw std::invalid_argument("LossWeights: k1 must be positive");
    if (k2 < 0.0 || k3 < 0.0) throw std::invalid_argument("LossWeights: k2 and k3 must be nonnegative");
    if (!(epsilon > 0.0)) throw std::invalid_argument("LossWeights: epsilon must be positive");
}

// ---------------------------------------------------------------- reconstruction

Tensor build_phi(const CpModel& model, std::size_t term) {
    return rank_one(cp_term(model, term), model.dims, model.field);
}

Tensor reconstruct(const CpModel& model) {
    Tensor out(model.dims, model.field);
    for (std::size_t j = 0; j < model.rank(); ++j) accumulate_rank_one(cp_term(model, j), model.coeffs[j], out);
    return out;
}

Tensor build_phi_density(const DensityCpModel& model, std::size_t term) {
    return rank_one(density_term(model, term), model.operator_shape(), model.field);
}

Tensor reconstruct(const DensityCpModel& model) {
    Tensor out(model.operator_shape(), model.field);
    for (std::size_t j = 0; j < model.rank(); ++j) accumulate_rank_one(density_term(model, j), model.coeffs[j], out);
    return out;
}

// ---------------------------------------------------------------- engine

namespace detail {

// Plain product without the inf/nan recovery of operator*, which the
// compiler routes through a library call; every operand here is finite.
inline Scalar mul(Scalar a, Scalar b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// Weighted sum of rank-one terms against a fixed target: residual, its
/// Frobenius norm and the reconstruction gradient with respect to every
/// (pre-normalization) factor vector and coefficient.
class RankOneEngine {
public:
    explicit RankOneEngine(const Tensor& target)
        : target_(target.entries().begin(), target.entries().end()),
          shape_(target.shape()),
          n_(target.size()),
          m_(target.order()),
          dmax_(*std::max_element(shape_.begin(), shape_.end())),
          residual_(n_),
          conj_residual_(n_),
          left_(n_),
          next_left_(n_),
          scratch_(n_),
          contraction_(m_ * dmax_) {}

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t order() const { return m_; }

    void resize(std::size_t rank) {
        if (rank == r_) return;
        r_ = rank;
        units_.assign(r_ * m_ * dmax_, Scalar{});
        norms_.assign(r_ * m_, 0.0);
        phi_.assign(n_, Scalar{});
        slot_grads_.assign(r_ * m_ * dmax_, Scalar{});
        coeff_grads_.assign(r_, Scalar{});
    }

    /// Slot k of term j becomes v/|v| (or conj(v)/|v|).
    void load(std::size_t j, std::size_t k, const Vector& v, bool conjugate) {
        const double n = v.norm();
        if (!(n >= kDegeneracyFloor)) throw DegenerateCoreError(j);
        norms_[j * m_ + k] = n;
        Scalar* u = unit(j, k);
        for (std::size_t p = 0; p < v.dim(); ++p) u[p] = (conjugate ? std::conj(v[p]) : v[p]) / n;
    }

    /// Returns ||target - sum_j C_j phi_j||_F; with `want_grads` also fills
    /// the gradients of k1 times that norm.
    double run(std::span<const Scalar> coeffs, double k1, bool want_grads) {
        std::copy(target_.begin(), target_.end(), residual_.begin());
        for (std::size_t j = 0; j < r_; ++j) {
            Scalar* phi = phi_.data();
            expand(j, phi);
            const Scalar c = coeffs[j];
            for (std::size_t f = 0; f < n_; ++f) residual_[f] -= mul(c, phi[f]);
        }
        double sq = 0.0;
        for (const auto& e : residual_) sq += std::norm(e);
        const double delta = std::sqrt(sq);
        if (!want_grads) return delta;

        std::fill(slot_grads_.begin(), slot_grads_.end(), Scalar{});
        std::fill(coeff_grads_.begin(), coeff_grads_.end(), Scalar{});
        if (delta < kResidualFloor) return delta;

        for (std::size_t f = 0; f < n_; ++f) conj_residual_[f] = std::conj(residual_[f]);
        for (std::size_t j = 0; j < r_; ++j) {
            contract_all_but_one(j);
            Scalar s{};  // sum conj(E) phi_j
            const Scalar* u0 = unit(j, 0);
            for (std::size_t p = 0; p < shape_[0]; ++p) s += mul(contraction_[p], u0[p]);
            coeff_grads_[j] = -k1 * std::conj(s) / delta;

            // phi depends on x only through x/|x|: drop the radial component.
            const Scalar c = coeffs[j];
            const double radial = (c * s).real();
            for (std::size_t k = 0; k < m_; ++k) {
                const Scalar* u = unit(j, k);
                Scalar* g = &slot_grads_[(j * m_ + k) * dmax_];
                const double scale = -k1 / (norms_[j * m_ + k] * delta);
                for (std::size_t p = 0; p < shape_[k]; ++p) {
                    const Scalar w = c * contraction_[k * dmax_ + p];
                    g[p] = scale * (std::conj(w) - radial * u[p]);
                }
            }
        }
        return delta;
    }

    const Scalar* slot_grad(std::size_t j, std::size_t k) const { return &slot_grads_[(j * m_ + k) * dmax_]; }
    Scalar coeff_grad(std::size_t j) const { return coeff_grads_[j]; }

private:
    Scalar* unit(std::size_t j, std::size_t k) { return &units_[(j * m_ + k) * dmax_]; }

    /// contraction_[k][p] = sum over entries with index p in mode k of
    /// conj(E) times the unit factors of term j in every other mode. Modes
    /// before k are peeled off the front, modes after k off the back.
    void contract_all_but_one(std::size_t j) {
        std::copy(conj_residual_.begin(), conj_residual_.end(), left_.begin());
        std::size_t len = n_;
        for (std::size_t k = 0; k < m_; ++k) {
            const Scalar* tail = left_.data();
            std::size_t tail_len = len;
            for (std::size_t l = m_; l-- > k + 1;) {
                const Scalar* u = unit(j, l);
                const std::size_t d = shape_[l];
                tail_len /= d;
                for (std::size_t i = 0; i < tail_len; ++i) {
                    Scalar acc{};
                    for (std::size_t p = 0; p < d; ++p) acc += mul(tail[i * d + p], u[p]);
                    scratch_[i] = acc;
                }
                tail = scratch_.data();
            }
            std::copy(tail, tail + shape_[k], &contraction_[k * dmax_]);

            if (k + 1 == m_) break;
            const Scalar* u = unit(j, k);
            const std::size_t d = shape_[k];
            const std::size_t rest = len / d;
            for (std::size_t i = 0; i < rest; ++i) {
                Scalar acc{};
                for (std::size_t p = 0; p < d; ++p) acc += mul(u[p], left_[p * rest + i]);
                next_left_[i] = acc;
            }
            std::swap(left_, next_left_);
            len = rest;
        }
    }

    /// Row-major outer product of term j's unit factors, expanded in place.
    void expand(std::size_t j, Scalar* out) {
        out[0] = 1.0;
        std::size_t len = 1;
        for (std::size_t l = 0; l < m_; ++l) {
            const Scalar* u = unit(j, l);
            const std::size_t d = shape_[l];
            for (std::size_t i = len; i-- > 0;) {
                const Scalar v = out[i];
                for (std::size_t p = d; p-- > 0;) out[i * d + p] = mul(v, u[p]);
            }
            len *= d;
        }
    }

    std::vector<Scalar> target_;
    std::vector<std::size_t> shape_;
    std::size_t n_, m_, dmax_;
    std::size_t r_ = 0;
    std::vector<Scalar> units_;
    std::vector<double> norms_;
    std::vector<Scalar> phi_;
    std::vector<Scalar> residual_;
    std::vector<Scalar> conj_residual_;
    std::vector<Scalar> left_, next_left_, scratch_;
    std::vector<Scalar> contraction_;
    std::vector<Scalar> slot_grads_;
    std::vector<Scalar> coeff_grads_;
};

}  // namespace detail

// ---------------------------------------------------------------- evaluators

namespace {

void shape_grads(std::vector<std::vector<std::vector<Scalar>>>& grid, std::size_t rank,
                 const std::vector<std::size_t>& dims) {
    if (grid.size() == rank && (rank == 0 || grid.front().size() == dims.size())) return;
    grid.assign(rank, {});
    for (auto& term : grid)
        for (auto d : dims) term.emplace_back(d);
}

}  // namespace

CpEvaluator::CpEvaluator(const Tensor& target, const LossWeights& w, Objective objective)
    : engine_(std::make_unique<detail::RankOneEngine>(target)), weights_(w), objective_(objective) {}
CpEvaluator::~CpEvaluator() = default;
CpEvaluator::CpEvaluator(CpEvaluator&&) noexcept = default;
CpEvaluator& CpEvaluator::operator=(CpEvaluator&&) noexcept = default;

LossBreakdown CpEvaluator::evaluate(const CpModel& model, CpGradients* grads) {
    require_same_shape_dims(engine_->shape(), model.dims, "CpEvaluator");
    const std::size_t R = model.rank();
    const std::size_t m = model.order();
    engine_->resize(R);
    for (std::size_t j = 0; j < R; ++j)
        for (std::size_t k = 0; k < m; ++k) engine_->load(j, k, model.core(j, k), false);
    const bool with_norm = objective_ == Objective::NuclearRank;
    const double delta = engine_->run(model.coeffs, weights_.k1, grads != nullptr);
    if (grads) {
        const std::size_t slots = model.symmetric ? 1 : m;
        shape_grads(grads->cores, R, std::vector<std::size_t>(model.dims.begin(),
                                                              model.dims.begin() + static_cast<std::ptrdiff_t>(slots)));
        grads->coeffs.resize(R);
        for (std::size_t j = 0; j < R; ++j) {
            grads->coeffs[j] = engine_->coeff_grad(j);
            if (with_norm) grads->coeffs[j] += weights_.k3 * magnitude_gradient(model.coeffs[j]);
            if (model.symmetric) {
                // One shared core: the chain rule sums the per-slot gradients.
                auto& g = grads->cores[j][0];
                std::fill(g.begin(), g.end(), Scalar{});
                for (std::size_t k = 0; k < m; ++k) {
                    const Scalar* sg = engine_->slot_grad(j, k);
                    for (std::size_t p = 0; p < g.size(); ++p) g[p] += sg[p];
                }
            } else {
                for (std::size_t k = 0; k < m; ++k) {
                    const Scalar* sg = engine_->slot_grad(j, k);
                    std::copy(sg, sg + model.dims[k], grads->cores[j][k].begin());
                }
            }
        }
        if (model.field == Field::Real) {
            realify(grads->coeffs);
            for (auto& term : grads->cores)
                for (auto& v : term) realify(v);
        }
    }
    return breakdown(delta, model.coeffs, weights_, with_norm);
}

DensityEvaluator::DensityEvaluator(const Tensor& target, const LossWeights& w)
    : engine_(std::make_unique<detail::RankOneEngine>(target)), weights_(w) {}
DensityEvaluator::~DensityEvaluator() = default;
DensityEvaluator::DensityEvaluator(DensityEvaluator&&) noexcept = default;
DensityEvaluator& DensityEvaluator::operator=(DensityEvaluator&&) noexcept = default;

LossBreakdown DensityEvaluator::evaluate(const DensityCpModel& model, DensityGradients* grads) {
    require_same_shape_dims(engine_->shape(), model.operator_shape(), "DensityEvaluator");
    const std::size_t R = model.rank();
    const std::size_t m = model.parties();
    engine_->resize(R);
    // The bra enters each operator entry as conj(b), so its slot holds conj(b)/|b|.
    for (std::size_t j = 0; j < R; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            engine_->load(j, i, model.kets[j][i], false);
            engine_->load(j, m + i, model.bras[j][i], true);
        }
    }
    const double delta = engine_->run(model.coeffs, weights_.k1, grads != nullptr);
    if (grads) {
        shape_grads(grads->kets, R, model.dims);
        shape_grads(grads->bras, R, model.dims);
        grads->coeffs.resize(R);
        for (std::size_t j = 0; j < R; ++j) {
            grads->coeffs[j] = engine_->coeff_grad(j) + weights_.k3 * magnitude_gradient(model.coeffs[j]);
            for (std::size_t i = 0; i < m; ++i) {
                const Scalar* ket = engine_->slot_grad(j, i);
                std::copy(ket, ket + model.dims[i], grads->kets[j][i].begin());
                // The slot parameter is conj(b), so the gradient in b is its conjugate.
                const Scalar* bra = engine_->slot_grad(j, m + i);
                for (std::size_t p = 0; p < model.dims[i]; ++p) grads->bras[j][i][p] = std::conj(bra[p]);
            }
        }
        if (model.field == Field::Real) {
            realify(grads->coeffs);
            for (auto* grid : {&grads->kets, &grads->bras})
                for (auto& term : *grid)
                    for (auto& v : term) realify(v);
        }
    }
    return breakdown(delta, model.coeffs, weights_, true);
}

// ---------------------------------------------------------------- one-shot wrappers

LossBreakdown loss_arcpd(const Tensor& target, const CpModel& model, const LossWeights& w) {
    model.validate();
    return CpEvaluator(target, w, Objective::AdaptiveRank).evaluate(model, nullptr);
}

LossBreakdown loss_nrcpd(const Tensor& target, const CpModel& model, const LossWeights& w) {
    model.validate();
    return CpEvaluator(target, w, Objective::NuclearRank).evaluate(model, nullptr);
}

LossBreakdown loss_density(const Tensor& target, const DensityCpModel& model, const LossWeights& w) {
    model.validate();
    return DensityEvaluator(target, w).evaluate(model, nullptr);
}

CpGradients gradients(const Tensor& target, const CpModel& model, const LossWeights& w, Objective objective) {
    model.validate();
    CpGradients g;
    CpEvaluator(target, w, objective).evaluate(model, &g);
    return g;
}

DensityGradients gradients(const Tensor& target, const DensityCpModel& model, const LossWeights& w) {
    model.validate();
    DensityGradients g;
    DensityEvaluator(target, w).evaluate(model, &g);
    return g;
}

// ---------------------------------------------------------------- summaries

int effective_rank(std::span<const Scalar> coeffs, double tolerance) {
    if (!(tolerance > 0.0)) throw std::invalid_argument("effective_rank: tolerance must be positive");
    return static_cast<int>(std::count_if(coeffs.begin(), coeffs.end(),
                                          [&](const Scalar& c) { return std::abs(c) > tolerance; }));
}

double norm_estimate(std::span<const Scalar> coeffs) {
    double s = 0.0;
    for (const auto& c : coeffs) s += std::abs(c);
    return s;
}

}  // namespace pnorm
