#ifndef RISKWINDOW_TPE_HPP
#define RISKWINDOW_TPE_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskwindow/common.hpp"

namespace riskwindow {

// --- search-space description ----------------------------------------------

struct ParamDomain {
    enum class Kind { Int, Discrete, Uniform, LogUniform, Categorical };

    std::string name;
    Kind kind = Kind::Uniform;
    double lo = 0.0, hi = 1.0;  // inclusive bounds (Int/Discrete: on the grid)
    double step = 1.0;          // Int / Discrete grid step
    std::vector<std::string> choices;  // Categorical

    // Dimension is only active when params[condition_on] >= condition_min.
    std::string condition_on;
    double condition_min = 0.0;

    void check() const {
        if (kind == Kind::Categorical) {
            if (choices.empty()) throw std::invalid_argument("ParamDomain " + name + ": no choices");
            return;
        }
        if (!(hi >= lo)) throw std::invalid_argument("ParamDomain " + name + ": hi < lo");
        if ((kind == Kind::Int || kind == Kind::Discrete) && !(step > 0.0))
            throw std::invalid_argument("ParamDomain " + name + ": step must be positive");
        if (kind == Kind::LogUniform && !(lo > 0.0))
            throw std::invalid_argument("ParamDomain " + name + ": log domain needs lo > 0");
    }

    std::size_t n_grid() const {
        // Count whole steps that fit inside [lo, hi]; the epsilon absorbs
        // representation error on exact grids without admitting values > hi.
        return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    }
};

// Parameter assignments: categorical values are stored as choice indices.
using ParamMap = std::map<std::string, double>;

inline std::string cat_value(const ParamDomain& dom, double stored) {
    return dom.choices.at(static_cast<std::size_t>(std::lround(stored)));
}

inline bool param_active(const ParamDomain& dom, const ParamMap& params) {
    if (dom.condition_on.empty()) return true;
    auto it = params.find(dom.condition_on);
    return it != params.end() && it->second >= dom.condition_min - 1e-12;
}

struct SearchSpace {
    // Order matters: a conditioned dimension must follow the one it depends on.
    std::vector<ParamDomain> dims;

    const ParamDomain& at(const std::string& name) const {
        for (const auto& d : dims)
            if (d.name == name) return d;
        throw std::out_of_range("SearchSpace: no dimension " + name);
    }

    void check() const {
        for (const auto& d : dims) d.check();
    }
};

// --- tree-structured Parzen estimator ----------------------------------------

struct TPEOptions {
    int n_startup = 10;   // random trials before the densities switch on
    double gamma = 0.25;  // quantile defining the "good" set
    int n_candidates = 24;
};

struct TPEObservation {
    ParamMap params;
    double objective = 0.0;  // maximised
};

namespace detail {

inline double sample_prior(const ParamDomain& dom, Rng& rng) {
    switch (dom.kind) {
        case ParamDomain::Kind::Categorical: {
            std::uniform_int_distribution<std::size_t> pick(0, dom.choices.size() - 1);
            return static_cast<double>(pick(rng));
        }
        case ParamDomain::Kind::Int:
        case ParamDomain::Kind::Discrete: {
            std::uniform_int_distribution<std::size_t> pick(0, dom.n_grid() - 1);
            return dom.lo + static_cast<double>(pick(rng)) * dom.step;
        }
        case ParamDomain::Kind::Uniform: {
            std::uniform_real_distribution<double> u(dom.lo, dom.hi);
            return u(rng);
        }
        case ParamDomain::Kind::LogUniform: {
            std::uniform_real_distribution<double> u(std::log(dom.lo), std::log(dom.hi));
            return std::exp(u(rng));
        }
    }
    return dom.lo;
}

inline double snap_to_grid(const ParamDomain& dom, double v) {
    if (dom.kind != ParamDomain::Kind::Int && dom.kind != ParamDomain::Kind::Discrete) return v;
    const double idx = std::clamp(std::floor((v - dom.lo) / dom.step + 0.5), 0.0,
                                  static_cast<double>(dom.n_grid() - 1));
    return dom.lo + idx * dom.step;
}

// One-dimensional Parzen mixture over the observed values of a numeric
// dimension, with a flat prior component so unexplored regions keep mass.
class ParzenDensity {
public:
    ParzenDensity(const ParamDomain& dom, const std::vector<double>& values) : dom_(&dom) {
        log_space_ = dom.kind == ParamDomain::Kind::LogUniform;
        lo_ = log_space_ ? std::log(dom.lo) : dom.lo;
        hi_ = log_space_ ? std::log(dom.hi) : dom.hi;
        for (double v : values) centers_.push_back(log_space_ ? std::log(v) : v);
        const double span = std::max(hi_ - lo_, 1e-12);
        bw_ = centers_.empty()
                  ? span
                  : std::max(span / std::sqrt(static_cast<double>(centers_.size()) + 1.0),
                             span * 1e-3);
    }

    double sample(Rng& rng) const {
        // One mixture component is the uniform prior.
        std::uniform_int_distribution<std::size_t> pick(0, centers_.size());
        const std::size_t c = pick(rng);
        double v;
        if (c == centers_.size()) {
            std::uniform_real_distribution<double> u(lo_, hi_);
            v = u(rng);
        } else {
            std::normal_distribution<double> g(centers_[c], bw_);
            v = std::clamp(g(rng), lo_, hi_);
        }
        return log_space_ ? std::exp(v) : v;
    }

    double log_pdf(double x) const {
        const double v = log_space_ ? std::log(x) : x;
        const double span = std::max(hi_ - lo_, 1e-12);
        double acc = 1.0 / span;  // prior component
        for (double c : centers_) {
            const double z = (v - c) / bw_;
            acc += std::exp(-0.5 * z * z) / (bw_ * std::sqrt(2.0 * 3.14159265358979323846));
        }
        return std::log(acc / static_cast<double>(centers_.size() + 1));
    }

private:
    const ParamDomain* dom_;
    std::vector<double> centers_;
    double bw_ = 1.0, lo_ = 0.0, hi_ = 1.0;
    bool log_space_ = false;
};

// Laplace-smoothed counts for categorical (and small-grid integer) dims.
class CategoricalDensity {
public:
    CategoricalDensity(std::size_t n_options, const ParamDomain& dom,
                       const std::vector<double>& values)
        : dom_(&dom), weights_(n_options, 1.0) {
        for (double v : values) weights_[index_of(v)] += 1.0;
        total_ = 0.0;
        for (double w : weights_) total_ += w;
    }

    std::size_t index_of(double v) const {
        if (dom_->kind == ParamDomain::Kind::Categorical)
            return static_cast<std::size_t>(std::lround(v));
        return static_cast<std::size_t>(std::lround((v - dom_->lo) / dom_->step));
    }

    double value_of(std::size_t idx) const {
        if (dom_->kind == ParamDomain::Kind::Categorical) return static_cast<double>(idx);
        return dom_->lo + static_cast<double>(idx) * dom_->step;
    }

    double sample(Rng& rng) const {
        std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
        return value_of(pick(rng));
    }

    double log_pdf(double v) const { return std::log(weights_[index_of(v)] / total_); }

private:
    const ParamDomain* dom_;
    std::vector<double> weights_;
    double total_ = 0.0;
};

}  // namespace detail

inline ParamMap tpe_random_sample(const SearchSpace& space, Rng& rng) {
    ParamMap out;
    for (const auto& dom : space.dims) {
        if (!param_active(dom, out)) continue;
        out[dom.name] = detail::sample_prior(dom, rng);
    }
    return out;
}

// Suggest the next configuration. Maximises the objective: the top-gamma
// quantile of history forms the "good" density l, the rest g; candidates are
// drawn from l and scored by l(x)/g(x).
inline ParamMap tpe_suggest(const SearchSpace& space, const std::vector<TPEObservation>& history,
                            Rng& rng, const TPEOptions& opts = {}) {
    space.check();
    if (static_cast<int>(history.size()) < opts.n_startup) return tpe_random_sample(space, rng);

    std::vector<std::size_t> order(history.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return history[a].objective > history[b].objective;
    });
    const std::size_t n_good = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(opts.gamma * static_cast<double>(history.size()))));

    ParamMap best;
    double best_score = -1e300;
    for (int c = 0; c < opts.n_candidates; ++c) {
        ParamMap cand;
        double score = 0.0;
        for (const auto& dom : space.dims) {
            if (!param_active(dom, cand)) continue;
            // Per-dimension densities over trials where this dim was active.
            std::vector<double> good_vals, bad_vals;
            for (std::size_t r = 0; r < order.size(); ++r) {
                auto it = history[order[r]].params.find(dom.name);
                if (it == history[order[r]].params.end()) continue;
                (r < n_good ? good_vals : bad_vals).push_back(it->second);
            }
            const bool discrete_like = dom.kind == ParamDomain::Kind::Categorical ||
                                       ((dom.kind == ParamDomain::Kind::Int ||
                                         dom.kind == ParamDomain::Kind::Discrete) &&
                                        dom.n_grid() <= 64);
            double v;
            if (discrete_like) {
                const std::size_t n_opt = dom.kind == ParamDomain::Kind::Categorical
                                              ? dom.choices.size()
                                              : dom.n_grid();
                detail::CategoricalDensity l(n_opt, dom, good_vals), g(n_opt, dom, bad_vals);
                v = l.sample(rng);
                score += l.log_pdf(v) - g.log_pdf(v);
            } else {
                detail::ParzenDensity l(dom, good_vals), g(dom, bad_vals);
                v = detail::snap_to_grid(dom, l.sample(rng));
                score += l.log_pdf(v) - g.log_pdf(v);
            }
            cand[dom.name] = v;
        }
        if (score > best_score) {
            best_score = score;
            best = std::move(cand);
        }
    }
    return best;
}

}  // namespace riskwindow

#endif
