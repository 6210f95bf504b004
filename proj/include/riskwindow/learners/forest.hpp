#ifndef RISKWINDOW_LEARNERS_FOREST_HPP
#define RISKWINDOW_LEARNERS_FOREST_HPP

#include <random>
#include <vector>

#include "riskwindow/learners/classifier.hpp"
#include "riskwindow/learners/tree.hpp"
#include "riskwindow/telemetry.hpp"

namespace riskwindow {

struct RFConfig {
    int n_estimators = 300;
    int max_depth = 12;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    std::string max_features = "sqrt";  // none | sqrt | log2
    std::string criterion = "gini";     // gini | entropy | log_loss
    int patience = 10;  // tree additions without OOB improvement before stopping
    std::uint64_t seed = 0;
};

// Bagged classification trees grown incrementally; growth stops early when
// the out-of-bag error has not improved for `patience` added trees.
// predict_proba is the fraction of trees voting positive.
class RandomForest : public Classifier {
public:
    explicit RandomForest(RFConfig cfg = {}) : cfg_(std::move(cfg)) {}

    void fit(const Dataset& train, const Dataset& /*val*/) override {
        if (train.n_rows == 0) throw std::invalid_argument("RandomForest: empty training data");
        trees_.clear();
        importance_.assign(train.n_cols, 0.0);
        n_cols_ = train.n_cols;
        degenerate_ = false;

        const long pos = train.positives();
        if (pos == 0 || pos == static_cast<long>(train.n_rows)) {
            // Single-class data: constant model.
            degenerate_ = true;
            constant_proba_ = pos == 0 ? 0.0 : 1.0;
            warning_ = "single-class training data; constant model";
            probe_.capture(*this, train);
            return;
        }

        ClassificationTree::Params tp;
        tp.max_depth = cfg_.max_depth;
        tp.min_samples_split = cfg_.min_samples_split;
        tp.min_samples_leaf = cfg_.min_samples_leaf;
        tp.max_features = max_features_from_name(cfg_.max_features);
        tp.criterion = criterion_from_name(cfg_.criterion);

        std::vector<long> oob_votes_pos(train.n_rows, 0), oob_votes_total(train.n_rows, 0);
        double best_oob = 1.0 + 1e-9;
        int since_improve = 0;
        oob_trace_.clear();

        for (int m = 0; m < cfg_.n_estimators; ++m) {
            Rng rng(split_seed(cfg_.seed, static_cast<std::uint64_t>(m)));
            std::vector<std::size_t> bag(train.n_rows);
            std::vector<char> in_bag(train.n_rows, 0);
            std::uniform_int_distribution<std::size_t> pick(0, train.n_rows - 1);
            for (auto& b : bag) {
                b = pick(rng);
                in_bag[b] = 1;
            }
            ClassificationTree tree;
            tree.fit(train, bag, tp, rng, &importance_);
            for (std::size_t i = 0; i < train.n_rows; ++i) {
                if (in_bag[i]) continue;
                oob_votes_pos[i] += tree.vote(train.row(i));
                ++oob_votes_total[i];
            }
            trees_.push_back(std::move(tree));

            long errors = 0, covered = 0;
            for (std::size_t i = 0; i < train.n_rows; ++i) {
                if (oob_votes_total[i] == 0) continue;
                ++covered;
                const int pred = 2 * oob_votes_pos[i] > oob_votes_total[i] ? 1 : 0;
                if (pred != train.y[i]) ++errors;
            }
            const double oob_err =
                covered > 0 ? static_cast<double>(errors) / static_cast<double>(covered) : 1.0;
            oob_trace_.push_back(oob_err);
            if (oob_err < best_oob - 1e-12) {
                best_oob = oob_err;
                since_improve = 0;
            } else if (++since_improve >= cfg_.patience) {
                break;
            }
        }

        double total = 0.0;
        for (double v : importance_) total += v;
        if (total > 0.0)
            for (double& v : importance_) v /= total;
        probe_.capture(*this, train);
    }

    std::vector<double> predict_proba(const Dataset& data) const override {
        std::vector<double> out(data.n_rows, constant_proba_);
        if (trees_.empty()) return out;
        for (std::size_t i = 0; i < data.n_rows; ++i) {
            long votes = 0;
            for (const auto& t : trees_) votes += t.vote(data.row(i));
            out[i] = static_cast<double>(votes) / static_cast<double>(trees_.size());
        }
        return out;
    }

    std::string kind() const override { return "forest"; }
    std::optional<std::vector<double>> importance() const override { return importance_; }

    const std::vector<double>& oob_trace() const { return oob_trace_; }
    std::size_t n_trees() const { return trees_.size(); }
    const std::string& warning() const { return warning_; }
    const ProbeBatch& probe() const { return probe_; }
    const RFConfig& config() const { return cfg_; }
    std::vector<ClassificationTree>& trees_for_test() { return trees_; }

    void save(std::ostream& os) const override {
        os << "riskwindow-model v1\n";
        os << "kind forest\n";
        os << "seed " << cfg_.seed << '\n';
        os << "config " << cfg_.n_estimators << ' ' << cfg_.max_depth << ' '
           << cfg_.min_samples_split << ' ' << cfg_.min_samples_leaf << ' ' << cfg_.max_features
           << ' ' << cfg_.criterion << ' ' << cfg_.patience << '\n';
        os << "n_cols " << n_cols_ << '\n';
        os << "degenerate " << (degenerate_ ? 1 : 0) << '\n';
        os << "constant_proba " << artifact::fmt(constant_proba_) << '\n';
        artifact::write_vector(os, "importance", importance_);
        os << "n_trees " << trees_.size() << '\n';
        for (const auto& t : trees_) {
            os << "tree " << t.nodes().size() << '\n';
            for (const auto& n : t.nodes())
                os << n.feature << ' ' << artifact::fmt(n.threshold) << ' ' << n.left << ' '
                   << n.right << ' ' << artifact::fmt(n.pos_frac) << '\n';
        }
        probe_.save(os);
        os << "end\n";
    }

    void load(std::istream& is) override {
        artifact::Reader r(is);
        r.expect("riskwindow-model v1");
        if (r.read_string("kind") != "forest") throw std::runtime_error("not a forest artifact");
        cfg_.seed = static_cast<std::uint64_t>(r.read_long("seed"));
        {
            std::istringstream ss(r.read_string("config"));
            ss >> cfg_.n_estimators >> cfg_.max_depth >> cfg_.min_samples_split >>
                cfg_.min_samples_leaf >> cfg_.max_features >> cfg_.criterion >> cfg_.patience;
        }
        n_cols_ = static_cast<std::size_t>(r.read_long("n_cols"));
        degenerate_ = r.read_long("degenerate") != 0;
        constant_proba_ = r.read_double("constant_proba");
        importance_ = r.read_vector("importance");
        const long nt = r.read_long("n_trees");
        trees_.assign(static_cast<std::size_t>(nt), {});
        for (auto& t : trees_) {
            const long nn = r.read_long("tree");
            t.nodes().resize(static_cast<std::size_t>(nn));
            for (auto& n : t.nodes()) {
                std::istringstream ss(r.next_line());
                std::string thr, pf;
                ss >> n.feature >> thr >> n.left >> n.right >> pf;
                n.threshold = std::strtod(thr.c_str(), nullptr);
                n.pos_frac = std::strtod(pf.c_str(), nullptr);
            }
        }
        probe_.load(r);
        r.expect("end");
    }

private:
    RFConfig cfg_;
    std::vector<ClassificationTree> trees_;
    std::vector<double> importance_;
    std::vector<double> oob_trace_;
    std::size_t n_cols_ = 0;
    bool degenerate_ = false;
    double constant_proba_ = 0.0;
    std::string warning_;
    ProbeBatch probe_;
};

}  // namespace riskwindow

#endif
