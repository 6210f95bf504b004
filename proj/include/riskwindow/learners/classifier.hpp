#ifndef RISKWINDOW_LEARNERS_CLASSIFIER_HPP
#define RISKWINDOW_LEARNERS_CLASSIFIER_HPP

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "riskwindow/dataset.hpp"

namespace riskwindow {

// Uniform contract over the three model families. predict(x, thr) is defined
// as predict_proba(x) > thr for every implementation.
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual void fit(const Dataset& train, const Dataset& val) = 0;
    virtual std::vector<double> predict_proba(const Dataset& data) const = 0;
    virtual std::string kind() const = 0;
    // Per-feature importance; absent for the network.
    virtual std::optional<std::vector<double>> importance() const { return std::nullopt; }

    virtual void save(std::ostream& os) const = 0;
    virtual void load(std::istream& is) = 0;

    std::vector<int> predict(const Dataset& data, double threshold) const {
        auto p = predict_proba(data);
        std::vector<int> out(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] > threshold ? 1 : 0;
        return out;
    }
};

// --- text model artifact -------------------------------------------------
// Line-oriented format: `key value...` with doubles written as hexfloats so
// loading reproduces predictions bit-for-bit.

namespace artifact {

inline std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline void write_vector(std::ostream& os, const std::string& key, const std::vector<double>& v) {
    os << key << ' ' << v.size();
    for (double d : v) os << ' ' << fmt(d);
    os << '\n';
}

inline void write_ints(std::ostream& os, const std::string& key, const std::vector<int>& v) {
    os << key << ' ' << v.size();
    for (int d : v) os << ' ' << d;
    os << '\n';
}

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}

    std::string next_line() {
        std::string line;
        if (!std::getline(is_, line)) throw std::runtime_error("model artifact: truncated");
        return line;
    }

    std::string expect(const std::string& key) {
        std::string line;
        if (!std::getline(is_, line)) throw std::runtime_error("model artifact: truncated at '" + key + "'");
        if (line.rfind(key + " ", 0) != 0 && line != key)
            throw std::runtime_error("model artifact: expected '" + key + "', got '" + line + "'");
        return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
    }

    std::vector<double> read_vector(const std::string& key) {
        std::istringstream ss(expect(key));
        std::size_t n;
        ss >> n;
        std::vector<double> out(n);
        std::string tok;
        for (std::size_t i = 0; i < n; ++i) {
            ss >> tok;
            out[i] = std::strtod(tok.c_str(), nullptr);
        }
        if (!ss) throw std::runtime_error("model artifact: malformed vector '" + key + "'");
        return out;
    }

    std::vector<int> read_ints(const std::string& key) {
        std::istringstream ss(expect(key));
        std::size_t n;
        ss >> n;
        std::vector<int> out(n);
        for (auto& v : out) ss >> v;
        if (!ss) throw std::runtime_error("model artifact: malformed ints '" + key + "'");
        return out;
    }

    double read_double(const std::string& key) {
        return std::strtod(expect(key).c_str(), nullptr);
    }
    long read_long(const std::string& key) { return std::stol(expect(key)); }
    std::string read_string(const std::string& key) { return expect(key); }

private:
    std::istream& is_;
};

}  // namespace artifact

// Probe batch embedded in every artifact: loading a model must reproduce
// these probabilities bit-for-bit.
struct ProbeBatch {
    std::size_t n_cols = 0;
    std::vector<double> x;
    std::vector<double> proba;

    void capture(const Classifier& model, const Dataset& train, std::size_t max_rows = 16) {
        const std::size_t n = std::min(max_rows, train.n_rows);
        Dataset probe;
        probe.n_cols = train.n_cols;
        probe.feature_names = train.feature_names;
        probe.x.assign(train.x.begin(), train.x.begin() + static_cast<long>(n * train.n_cols));
        probe.n_rows = n;
        n_cols = train.n_cols;
        x = probe.x;
        proba = model.predict_proba(probe);
    }

    void save(std::ostream& os) const {
        os << "probe_cols " << n_cols << '\n';
        artifact::write_vector(os, "probe_x", x);
        artifact::write_vector(os, "probe_p", proba);
    }

    void load(artifact::Reader& r) {
        n_cols = static_cast<std::size_t>(r.read_long("probe_cols"));
        x = r.read_vector("probe_x");
        proba = r.read_vector("probe_p");
    }

    Dataset as_dataset() const {
        Dataset d;
        d.n_cols = n_cols;
        d.x = x;
        d.n_rows = n_cols == 0 ? 0 : x.size() / n_cols;
        return d;
    }
};

inline void save_model_file(const Classifier& model, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open model file for writing: " + path);
    model.save(os);
}

}  // namespace riskwindow

#endif
