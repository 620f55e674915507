#include "saal/relmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace saal {

RelationshipMatrix::RelationshipMatrix(int num_tasks, std::string method)
    : num_tasks_(num_tasks),
      method_(std::move(method)),
      score_(static_cast<std::size_t>(num_tasks) * num_tasks, 0.0),
      defined_(static_cast<std::size_t>(num_tasks) * num_tasks, 0) {
    if (num_tasks < 1) throw config_error("relationship matrix needs at least one task");
}

std::size_t RelationshipMatrix::at(int s, int t) const {
    if (s < 0 || s >= num_tasks_ || t < 0 || t >= num_tasks_) {
        throw contract_error("relationship cell out of range");
    }
    return static_cast<std::size_t>(s) * num_tasks_ + t;
}

void RelationshipMatrix::set(int s, int t, double value) {
    if (!std::isfinite(value)) throw numeric_error("relationship scores must be finite");
    const std::size_t i = at(s, t);
    score_[i] = value;
    defined_[i] = 1;
}

bool RelationshipMatrix::defined(int s, int t) const { return defined_[at(s, t)] != 0; }

double RelationshipMatrix::get(int s, int t) const {
    const std::size_t i = at(s, t);
    if (!defined_[i]) throw contract_error("relationship cell undefined");
    return score_[i];
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

namespace {

// Pearson correlation of the rank vectors; handles ties exactly.
std::optional<double> rank_correlation(const std::vector<double>& a,
                                       const std::vector<double>& b) {
    const std::size_t n = a.size();
    if (n < 2) return std::nullopt;
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return std::nullopt;  // constant column
    return cov / std::sqrt(va * vb);
}

}  // namespace

CorrelationReport spearman(const RelationshipMatrix& a, const RelationshipMatrix& b) {
    if (a.num_tasks() != b.num_tasks()) {
        throw contract_error("spearman requires matrices over the same task set");
    }
    const int T = a.num_tasks();
    CorrelationReport report;
    double total = 0.0;
    int counted = 0;
    for (int t = 0; t < T; ++t) {
        std::vector<double> col_a, col_b;
        for (int s = 0; s < T; ++s) {
            if (s == t) continue;
            if (a.defined(s, t) && b.defined(s, t)) {
                col_a.push_back(a.get(s, t));
                col_b.push_back(b.get(s, t));
            }
        }
        const auto rho = rank_correlation(col_a, col_b);
        report.per_target[t] = rho;
        if (rho) {
            total += *rho;
            ++counted;
        }
    }
    if (counted > 0) report.mean = total / counted;
    return report;
}

}  // namespace saal
