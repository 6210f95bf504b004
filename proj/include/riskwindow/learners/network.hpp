#ifndef RISKWINDOW_LEARNERS_NETWORK_HPP
#define RISKWINDOW_LEARNERS_NETWORK_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "riskwindow/learners/classifier.hpp"
#include "riskwindow/common.hpp"

namespace riskwindow {

// Pearson correlation of the training/validation error windows; undefined
// (nullopt) when either window has zero variance.
inline std::optional<double> cdsc_correlation(std::span<const double> e_tr,
                                              std::span<const double> e_va) {
    if (e_tr.size() != e_va.size() || e_tr.size() < 2)
        throw std::invalid_argument("cdsc_correlation: windows must have equal length >= 2");
    const double mt = mean(e_tr), mv = mean(e_va);
    double num = 0.0, st = 0.0, sv = 0.0;
    for (std::size_t i = 0; i < e_tr.size(); ++i) {
        const double a = e_tr[i] - mt, b = e_va[i] - mv;
        num += a * b;
        st += a * a;
        sv += b * b;
    }
    if (st == 0.0 || sv == 0.0) return std::nullopt;
    return num / (std::sqrt(st) * std::sqrt(sv));
}

enum class Activation { Relu, Tanh, LeakyRelu };

inline Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "leaky_relu") return Activation::LeakyRelu;
    throw std::invalid_argument("unknown activation: " + s);
}

struct NNConfig {
    int units_1 = 64;
    std::string activation_1 = "relu";
    double dropout_1 = 0.1;
    double l2_reg_1 = 1e-3;
    int num_layers = 1;  // total hidden layers; 0 = plain logistic regression
    int units_i = 32;
    std::string activation_i = "relu";
    double dropout_i = 0.1;
    double l2_reg_i = 0.001;
    double lr = 1e-3;
    int epochs = 50;
    int batch_size = 128;
    std::string optimizer = "Adam";  // Adam | SGD | RMSprop
    // Stopping: CDSC over the last kappa+1 epochs, stop when r < r_stop for
    // cdsc_patience consecutive epochs. Undefined r never counts as below.
    int cdsc_kappa = 5;
    double r_stop = 0.0;
    int cdsc_patience = 3;
    int plateau_patience = 5;  // epochs without val improvement before lr halving
    double lr_factor = 0.5;
    std::uint64_t seed = 0;
};

// Feed-forward binary classifier: per hidden layer dense -> batch norm ->
// activation -> dropout, sigmoid output, binary cross-entropy loss.
// Features are standardised internally.
class NeuralNet : public Classifier {
public:
    explicit NeuralNet(NNConfig cfg = {}) : cfg_(std::move(cfg)) {}

    struct LayerSpec {
        std::size_t in = 0, out = 0;
        Activation act = Activation::Relu;
        double dropout = 0.0;
        double l2 = 0.0;
        // offsets into theta
        std::size_t w = 0, b = 0, gamma = 0, beta = 0;
    };

    void initialize(std::size_t n_features) {
        layers_.clear();
        std::size_t in = n_features;
        for (int l = 0; l < cfg_.num_layers; ++l) {
            LayerSpec s;
            s.in = in;
            s.out = static_cast<std::size_t>(l == 0 ? cfg_.units_1 : cfg_.units_i);
            s.act = activation_from_name(l == 0 ? cfg_.activation_1 : cfg_.activation_i);
            s.dropout = l == 0 ? cfg_.dropout_1 : cfg_.dropout_i;
            s.l2 = l == 0 ? cfg_.l2_reg_1 : cfg_.l2_reg_i;
            layers_.push_back(s);
            in = s.out;
        }
        out_in_ = in;

        std::size_t off = 0;
        for (auto& s : layers_) {
            s.w = off;
            off += s.in * s.out;
            s.b = off;
            off += s.out;
            s.gamma = off;
            off += s.out;
            s.beta = off;
            off += s.out;
        }
        out_w_ = off;
        off += out_in_;
        out_b_ = off;
        off += 1;
        theta_.assign(off, 0.0);

        Rng rng(split_seed(cfg_.seed, 0xA11));
        for (const auto& s : layers_) {
            // He-style init scaled by fan-in.
            std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(s.in)));
            for (std::size_t i = 0; i < s.in * s.out; ++i) theta_[s.w + i] = init(rng);
            for (std::size_t i = 0; i < s.out; ++i) theta_[s.gamma + i] = 1.0;
        }
        std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(out_in_)));
        for (std::size_t i = 0; i < out_in_; ++i) theta_[out_w_ + i] = init(rng);

        run_mean_.clear();
        run_var_.clear();
        for (const auto& s : layers_) {
            run_mean_.push_back(std::vector<double>(s.out, 0.0));
            run_var_.push_back(std::vector<double>(s.out, 1.0));
        }
    }

    // Training-mode loss and gradient on a batch (dropout off, running
    // statistics untouched). Exposed for gradient verification.
    double loss_and_grad(const Dataset& batch, std::vector<double>* grad) const {
        std::vector<double> g;
        const double loss = forward_backward(batch, /*training=*/true, /*dropout_rng=*/nullptr,
                                             grad ? &g : nullptr, nullptr);
        if (grad) *grad = std::move(g);
        return loss;
    }

    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }

    void fit(const Dataset& train_raw, const Dataset& val_raw) override {
        if (train_raw.n_rows == 0) throw std::invalid_argument("NeuralNet: empty training data");
        scaler_.fit(train_raw);
        const Dataset train = scaler_.transform(train_raw);
        const Dataset val = scaler_.transform(val_raw);
        initialize(train.n_cols);

        OptimizerState opt(theta_.size());
        double lr = cfg_.lr;
        Rng shuffle_rng(split_seed(cfg_.seed, 0x5EED));
        Rng dropout_rng(split_seed(cfg_.seed, 0xD0));

        std::vector<std::size_t> order(train.n_rows);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        e_tr_.clear();
        e_va_.clear();
        double best_val = std::numeric_limits<double>::infinity();
        std::vector<double> best_theta = theta_;
        auto best_rm = run_mean_;
        auto best_rv = run_var_;
        int plateau = 0, cdsc_below = 0;

        for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            double tr_loss = 0.0;
            long n_batches = 0;
            for (std::size_t start = 0; start < train.n_rows;
                 start += static_cast<std::size_t>(cfg_.batch_size)) {
                const std::size_t stop =
                    std::min(train.n_rows, start + static_cast<std::size_t>(cfg_.batch_size));
                std::vector<std::size_t> idx(order.begin() + static_cast<long>(start),
                                             order.begin() + static_cast<long>(stop));
                Dataset batch = train.select_rows(idx);
                std::vector<double> grad;
                const double loss =
                    forward_backward(batch, true, &dropout_rng, &grad, &running_update_);
                if (!std::isfinite(loss))
                    throw std::runtime_error(
                        "NeuralNet: non-finite training loss; try a lower learning rate");
                opt.step(theta_, grad, lr, cfg_.optimizer);
                tr_loss += loss;
                ++n_batches;
            }
            e_tr_.push_back(tr_loss / static_cast<double>(std::max(1L, n_batches)));
            const double va_loss = val.n_rows ? eval_loss(val) : e_tr_.back();
            e_va_.push_back(va_loss);

            if (va_loss < best_val - 1e-12) {
                best_val = va_loss;
                best_theta = theta_;
                best_rm = run_mean_;
                best_rv = run_var_;
                plateau = 0;
            } else if (++plateau >= cfg_.plateau_patience) {
                lr *= cfg_.lr_factor;
                plateau = 0;
            }

            // CDSC early stop over the last kappa+1 epochs.
            if (static_cast<int>(e_tr_.size()) >= cfg_.cdsc_kappa + 1) {
                const std::size_t n = static_cast<std::size_t>(cfg_.cdsc_kappa + 1);
                auto r = cdsc_correlation(
                    std::span<const double>(e_tr_).last(n), std::span<const double>(e_va_).last(n));
                if (r && *r < cfg_.r_stop) {
                    if (++cdsc_below >= cfg_.cdsc_patience) break;
                } else {
                    cdsc_below = 0;
                }
            }
        }

        theta_ = std::move(best_theta);
        run_mean_ = std::move(best_rm);
        run_var_ = std::move(best_rv);
        probe_.capture(*this, train_raw);
    }

    std::vector<double> predict_proba(const Dataset& raw) const override {
        const Dataset data = scaler_.mean_.empty() ? raw : scaler_.transform(raw);
        std::vector<double> out(data.n_rows);
        std::vector<double> probs;
        forward_eval(data, probs);
        return probs;
    }

    std::string kind() const override { return "network"; }

    const std::vector<double>& train_loss_trace() const { return e_tr_; }
    const std::vector<double>& val_loss_trace() const { return e_va_; }
    const ProbeBatch& probe() const { return probe_; }

    void save(std::ostream& os) const override {
        os << "riskwindow-model v1\n";
        os << "kind network\n";
        os << "seed " << cfg_.seed << '\n';
        os << "config " << cfg_.units_1 << ' ' << cfg_.activation_1 << ' '
           << artifact::fmt(cfg_.dropout_1) << ' ' << artifact::fmt(cfg_.l2_reg_1) << ' '
           << cfg_.num_layers << ' ' << cfg_.units_i << ' ' << cfg_.activation_i << ' '
           << artifact::fmt(cfg_.dropout_i) << ' ' << artifact::fmt(cfg_.l2_reg_i) << ' '
           << artifact::fmt(cfg_.lr) << ' ' << cfg_.epochs << ' ' << cfg_.batch_size << ' '
           << cfg_.optimizer << '\n';
        os << "n_features " << (layers_.empty() ? out_in_ : layers_.front().in) << '\n';
        artifact::write_vector(os, "scaler_mean", scaler_.mean_);
        artifact::write_vector(os, "scaler_std", scaler_.std_);
        artifact::write_vector(os, "theta", theta_);
        os << "n_bn " << run_mean_.size() << '\n';
        for (std::size_t l = 0; l < run_mean_.size(); ++l) {
            artifact::write_vector(os, "run_mean", run_mean_[l]);
            artifact::write_vector(os, "run_var", run_var_[l]);
        }
        probe_.save(os);
        os << "end\n";
    }

    void load(std::istream& is) override {
        artifact::Reader r(is);
        r.expect("riskwindow-model v1");
        if (r.read_string("kind") != "network") throw std::runtime_error("not a network artifact");
        cfg_.seed = static_cast<std::uint64_t>(r.read_long("seed"));
        {
            std::istringstream ss(r.read_string("config"));
            std::string d1, l1, di, li, lr;
            ss >> cfg_.units_1 >> cfg_.activation_1 >> d1 >> l1 >> cfg_.num_layers >> cfg_.units_i >>
                cfg_.activation_i >> di >> li >> lr >> cfg_.epochs >> cfg_.batch_size >>
                cfg_.optimizer;
            cfg_.dropout_1 = std::strtod(d1.c_str(), nullptr);
            cfg_.l2_reg_1 = std::strtod(l1.c_str(), nullptr);
            cfg_.dropout_i = std::strtod(di.c_str(), nullptr);
            cfg_.l2_reg_i = std::strtod(li.c_str(), nullptr);
            cfg_.lr = std::strtod(lr.c_str(), nullptr);
        }
        const auto n_features = static_cast<std::size_t>(r.read_long("n_features"));
        scaler_.mean_ = r.read_vector("scaler_mean");
        scaler_.std_ = r.read_vector("scaler_std");
        initialize(n_features);
        theta_ = r.read_vector("theta");
        const long nb = r.read_long("n_bn");
        run_mean_.assign(static_cast<std::size_t>(nb), {});
        run_var_.assign(static_cast<std::size_t>(nb), {});
        for (long l = 0; l < nb; ++l) {
            run_mean_[static_cast<std::size_t>(l)] = r.read_vector("run_mean");
            run_var_[static_cast<std::size_t>(l)] = r.read_vector("run_var");
        }
        probe_.load(r);
        r.expect("end");
    }

private:
    static constexpr double kBnEps = 1e-5;
    static constexpr double kBnMomentum = 0.9;

    NNConfig cfg_;
    std::vector<LayerSpec> layers_;
    std::size_t out_in_ = 0, out_w_ = 0, out_b_ = 0;
    std::vector<double> theta_;
    std::vector<std::vector<double>> run_mean_, run_var_;
    Standardizer scaler_;
    std::vector<double> e_tr_, e_va_;
    ProbeBatch probe_;
    struct RunningUpdateTag {};
    RunningUpdateTag running_update_;

    struct OptimizerState {
        std::vector<double> m, v;
        long t = 0;
        explicit OptimizerState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
        void step(std::vector<double>& theta, const std::vector<double>& g, double lr,
                  const std::string& kind) {
            ++t;
            if (kind == "SGD") {
                for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * g[i];
            } else if (kind == "RMSprop") {
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    v[i] = 0.9 * v[i] + 0.1 * g[i] * g[i];
                    theta[i] -= lr * g[i] / (std::sqrt(v[i]) + 1e-8);
                }
            } else if (kind == "Adam") {
                const double b1 = 0.9, b2 = 0.999;
                const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
                const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                    theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-8);
                }
            } else {
                throw std::invalid_argument("unknown optimizer: " + kind);
            }
        }
    };

    static double activate(Activation a, double z) {
        switch (a) {
            case Activation::Relu: return z > 0.0 ? z : 0.0;
            case Activation::Tanh: return std::tanh(z);
            case Activation::LeakyRelu: return z > 0.0 ? z : 0.01 * z;
        }
        return z;
    }
    static double activate_grad(Activation a, double z) {
        switch (a) {
            case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
            case Activation::Tanh: {
                const double th = std::tanh(z);
                return 1.0 - th * th;
            }
            case Activation::LeakyRelu: return z > 0.0 ? 1.0 : 0.01;
        }
        return 1.0;
    }

    // Training-mode forward + (optionally) backward over one batch. Returns
    // the regularised mean BCE. When update_running is non-null the batch
    // statistics are folded into the running estimates.
    double forward_backward(const Dataset& batch, bool training, Rng* dropout_rng,
                            std::vector<double>* grad_out, RunningUpdateTag* update_running) const {
        const std::size_t B = batch.n_rows;
        const std::size_t L = layers_.size();

        std::vector<std::vector<double>> input(L + 1);   // layer inputs, row-major B x in
        std::vector<std::vector<double>> z(L), zhat(L), pre_act(L);
        std::vector<std::vector<double>> mu(L), var(L);
        std::vector<std::vector<double>> mask(L);

        input[0] = batch.x;
        for (std::size_t l = 0; l < L; ++l) {
            const auto& s = layers_[l];
            z[l].assign(B * s.out, 0.0);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t k = 0; k < s.in; ++k) {
                    const double xv = input[l][i * s.in + k];
                    if (xv == 0.0) continue;
                    const double* wrow = &theta_[s.w + k * s.out];
                    double* zrow = &z[l][i * s.out];
                    for (std::size_t j = 0; j < s.out; ++j) zrow[j] += xv * wrow[j];
                }
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < s.out; ++j) z[l][i * s.out + j] += theta_[s.b + j];

            mu[l].assign(s.out, 0.0);
            var[l].assign(s.out, 0.0);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < s.out; ++j) mu[l][j] += z[l][i * s.out + j];
            for (auto& m : mu[l]) m /= static_cast<double>(B);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < s.out; ++j) {
                    const double d = z[l][i * s.out + j] - mu[l][j];
                    var[l][j] += d * d;
                }
            for (auto& v : var[l]) v /= static_cast<double>(B);

            if (update_running) {
                auto* self = const_cast<NeuralNet*>(this);
                for (std::size_t j = 0; j < s.out; ++j) {
                    self->run_mean_[l][j] = kBnMomentum * run_mean_[l][j] + (1.0 - kBnMomentum) * mu[l][j];
                    self->run_var_[l][j] = kBnMomentum * run_var_[l][j] + (1.0 - kBnMomentum) * var[l][j];
                }
            }

            zhat[l].assign(B * s.out, 0.0);
            pre_act[l].assign(B * s.out, 0.0);
            input[l + 1].assign(B * s.out, 0.0);
            mask[l].assign(B * s.out, 1.0);
            const bool use_dropout = training && dropout_rng && s.dropout > 0.0;
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < s.out; ++j) {
                    const std::size_t ix = i * s.out + j;
                    zhat[l][ix] = (z[l][ix] - mu[l][j]) / std::sqrt(var[l][j] + kBnEps);
                    pre_act[l][ix] = theta_[s.gamma + j] * zhat[l][ix] + theta_[s.beta + j];
                    double a = activate(s.act, pre_act[l][ix]);
                    if (use_dropout) {
                        if (u(*dropout_rng) < s.dropout) {
                            mask[l][ix] = 0.0;
                            a = 0.0;
                        } else {
                            mask[l][ix] = 1.0 / (1.0 - s.dropout);
                            a *= mask[l][ix];
                        }
                    }
                    input[l + 1][ix] = a;
                }
        }

        // Output layer: logit and stable BCE.
        std::vector<double> logit(B, theta_[out_b_]);
        for (std::size_t i = 0; i < B; ++i)
            for (std::size_t k = 0; k < out_in_; ++k)
                logit[i] += input[L][i * out_in_ + k] * theta_[out_w_ + k];

        double loss = 0.0;
        std::vector<double> dlogit(B);
        for (std::size_t i = 0; i < B; ++i) {
            const double zv = logit[i];
            const double y = static_cast<double>(batch.y[i]);
            loss += std::max(zv, 0.0) - y * zv + std::log1p(std::exp(-std::abs(zv)));
            dlogit[i] = (sigmoid_stable(zv) - y) / static_cast<double>(B);
        }
        loss /= static_cast<double>(B);
        for (const auto& s : layers_)
            for (std::size_t i = 0; i < s.in * s.out; ++i)
                loss += s.l2 * theta_[s.w + i] * theta_[s.w + i];

        if (!grad_out) return loss;

        std::vector<double>& grad = *grad_out;
        grad.assign(theta_.size(), 0.0);

        // Output layer backward.
        std::vector<double> dinput(B * out_in_, 0.0);
        for (std::size_t i = 0; i < B; ++i) {
            grad[out_b_] += dlogit[i];
            for (std::size_t k = 0; k < out_in_; ++k) {
                grad[out_w_ + k] += dlogit[i] * input[L][i * out_in_ + k];
                dinput[i * out_in_ + k] = dlogit[i] * theta_[out_w_ + k];
            }
        }

        for (std::size_t li = L; li-- > 0;) {
            const auto& s = layers_[li];
            // Through dropout and activation.
            std::vector<double> dpre(B * s.out);
            for (std::size_t ix = 0; ix < B * s.out; ++ix)
                dpre[ix] = dinput[ix] * mask[li][ix] * activate_grad(s.act, pre_act[li][ix]);

            // Batch norm backward.
            std::vector<double> dz(B * s.out, 0.0);
            for (std::size_t j = 0; j < s.out; ++j) {
                const double inv_std = 1.0 / std::sqrt(var[li][j] + kBnEps);
                double sum_dzh = 0.0, sum_dzh_zh = 0.0;
                for (std::size_t i = 0; i < B; ++i) {
                    const std::size_t ix = i * s.out + j;
                    const double dzh = dpre[ix] * theta_[s.gamma + j];
                    sum_dzh += dzh;
                    sum_dzh_zh += dzh * zhat[li][ix];
                    grad[s.gamma + j] += dpre[ix] * zhat[li][ix];
                    grad[s.beta + j] += dpre[ix];
                }
                for (std::size_t i = 0; i < B; ++i) {
                    const std::size_t ix = i * s.out + j;
                    const double dzh = dpre[ix] * theta_[s.gamma + j];
                    dz[ix] = inv_std * (dzh - sum_dzh / static_cast<double>(B) -
                                        zhat[li][ix] * sum_dzh_zh / static_cast<double>(B));
                }
            }

            // Dense backward.
            std::vector<double> dx(B * s.in, 0.0);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t k = 0; k < s.in; ++k) {
                    const double xv = input[li][i * s.in + k];
                    double acc = 0.0;
                    for (std::size_t j = 0; j < s.out; ++j) {
                        const double dzv = dz[i * s.out + j];
                        grad[s.w + k * s.out + j] += xv * dzv;
                        acc += dzv * theta_[s.w + k * s.out + j];
                    }
                    dx[i * s.in + k] = acc;
                }
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < s.out; ++j) grad[s.b + j] += dz[i * s.out + j];
            for (std::size_t i = 0; i < s.in * s.out; ++i)
                grad[s.w + i] += 2.0 * s.l2 * theta_[s.w + i];
            dinput = std::move(dx);
        }
        return loss;
    }

    static double sigmoid_stable(double z) {
        if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    }

    // Inference forward with running batch-norm statistics, no dropout.
    void forward_eval(const Dataset& data, std::vector<double>& probs) const {
        const std::size_t B = data.n_rows;
        std::vector<double> cur = data.x;
        std::size_t cur_cols = data.n_cols;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& s = layers_[l];
            std::vector<double> next(B * s.out, 0.0);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t k = 0; k < s.in; ++k) {
                    const double xv = cur[i * cur_cols + k];
                    if (xv == 0.0) continue;
                    for (std::size_t j = 0; j < s.out; ++j)
                        next[i * s.out + j] += xv * theta_[s.w + k * s.out + j];
                }
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < s.out; ++j) {
                    double zv = next[i * s.out + j] + theta_[s.b + j];
                    zv = (zv - run_mean_[l][j]) / std::sqrt(run_var_[l][j] + kBnEps);
                    zv = theta_[s.gamma + j] * zv + theta_[s.beta + j];
                    next[i * s.out + j] = activate(s.act, zv);
                }
            cur = std::move(next);
            cur_cols = s.out;
        }
        probs.assign(B, 0.0);
        for (std::size_t i = 0; i < B; ++i) {
            double zv = theta_[out_b_];
            for (std::size_t k = 0; k < out_in_; ++k) zv += cur[i * cur_cols + k] * theta_[out_w_ + k];
            probs[i] = sigmoid_stable(zv);
        }
    }

    double eval_loss(const Dataset& data) const {
        std::vector<double> probs;
        forward_eval(data, probs);
        double loss = 0.0;
        for (std::size_t i = 0; i < data.n_rows; ++i) {
            const double p = std::clamp(probs[i], 1e-12, 1.0 - 1e-12);
            loss -= data.y[i] ? std::log(p) : std::log(1.0 - p);
        }
        return loss / static_cast<double>(data.n_rows);
    }
};

}  // namespace riskwindow

#endif
