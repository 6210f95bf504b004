#ifndef RISKWINDOW_DATASET_HPP
#define RISKWINDOW_DATASET_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace riskwindow {

// Row-major numeric feature matrix with binary labels.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<double> x;  // n_rows * n_cols, row-major
    std::vector<int> y;     // empty for unlabeled data
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;

    std::span<const double> row(std::size_t i) const {
        return {x.data() + i * n_cols, n_cols};
    }
    double at(std::size_t i, std::size_t j) const { return x[i * n_cols + j]; }

    void push_row(std::span<const double> values, int label) {
        if (n_rows == 0 && n_cols == 0) n_cols = values.size();
        if (values.size() != n_cols) throw std::invalid_argument("Dataset: column count mismatch");
        x.insert(x.end(), values.begin(), values.end());
        y.push_back(label);
        ++n_rows;
    }

    Dataset select_rows(std::span<const std::size_t> idx) const {
        Dataset out;
        out.feature_names = feature_names;
        out.n_cols = n_cols;
        for (std::size_t i : idx) {
            out.x.insert(out.x.end(), x.begin() + static_cast<long>(i * n_cols),
                         x.begin() + static_cast<long>((i + 1) * n_cols));
            if (!y.empty()) out.y.push_back(y[i]);
        }
        out.n_rows = idx.size();
        return out;
    }

    Dataset select_columns(std::span<const std::size_t> cols) const {
        Dataset out;
        out.n_cols = cols.size();
        out.n_rows = n_rows;
        out.y = y;
        for (std::size_t c : cols) out.feature_names.push_back(feature_names.empty() ? "" : feature_names[c]);
        out.x.reserve(n_rows * cols.size());
        for (std::size_t i = 0; i < n_rows; ++i)
            for (std::size_t c : cols) out.x.push_back(at(i, c));
        return out;
    }

    long positives() const {
        long p = 0;
        for (int v : y) p += v ? 1 : 0;
        return p;
    }
};

// Per-column standardisation fitted on training data.
struct Standardizer {
    std::vector<double> mean_, std_;

    void fit(const Dataset& d) {
        mean_.assign(d.n_cols, 0.0);
        std_.assign(d.n_cols, 0.0);
        if (d.n_rows == 0) return;
        for (std::size_t i = 0; i < d.n_rows; ++i)
            for (std::size_t j = 0; j < d.n_cols; ++j) mean_[j] += d.at(i, j);
        for (auto& m : mean_) m /= static_cast<double>(d.n_rows);
        for (std::size_t i = 0; i < d.n_rows; ++i)
            for (std::size_t j = 0; j < d.n_cols; ++j) {
                const double dlt = d.at(i, j) - mean_[j];
                std_[j] += dlt * dlt;
            }
        for (auto& s : std_) {
            s = std::sqrt(s / static_cast<double>(d.n_rows));
            if (s < 1e-12) s = 1.0;  // constant column
        }
    }

    Dataset transform(const Dataset& d) const {
        Dataset out = d;
        for (std::size_t i = 0; i < d.n_rows; ++i)
            for (std::size_t j = 0; j < d.n_cols; ++j)
                out.x[i * d.n_cols + j] = (d.at(i, j) - mean_[j]) / std_[j];
        return out;
    }
};

}  // namespace riskwindow

#endif
