#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "saal/errors.hpp"

namespace saal {

// Directed T x T matrix of transfer effects: score(s, t) is the effect of
// source task s on target task t. Cells start undefined; the diagonal is
// left undefined by most estimators (feature transfer stores its
// self-transfer control there). The enumeration variant also keeps the raw
// baseline and pairwise performances so the selection cases can be
// reconstructed.
class RelationshipMatrix {
public:
    RelationshipMatrix() = default;
    RelationshipMatrix(int num_tasks, std::string method);

    int num_tasks() const { return num_tasks_; }
    const std::string& method() const { return method_; }

    void set(int s, int t, double value);
    bool defined(int s, int t) const;
    double get(int s, int t) const;

    std::map<int, double> baseline;                    // A_t^{{t}}
    std::map<std::pair<int, int>, double> pairwise;    // A_t^{{s,t}} keyed (s, t)
    std::vector<std::uint64_t> seeds;

private:
    std::size_t at(int s, int t) const;
    int num_tasks_ = 0;
    std::string method_;
    std::vector<double> score_;
    std::vector<char> defined_;
};

// Per-target Spearman rank correlation between the source rankings of two
// matrices. Targets whose columns have fewer than two comparable entries or
// a constant column report a missing rho.
struct CorrelationReport {
    std::map<int, std::optional<double>> per_target;
    std::optional<double> mean;
};

CorrelationReport spearman(const RelationshipMatrix& a, const RelationshipMatrix& b);

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& values);

}  // namespace saal
