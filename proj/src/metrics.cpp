#include "citescope/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "citescope/error.hpp"
#include "citescope/text.hpp"

namespace citescope {

std::string to_string(MatrixKind kind) {
    switch (kind) {
        case MatrixKind::inter_citation_percent: return "inter_citation_percent";
        case MatrixKind::jaccard: return "jaccard";
        case MatrixKind::composition_prob: return "composition_prob";
        case MatrixKind::composition_znorm: return "composition_znorm";
    }
    return "unknown";
}

std::string to_string(CompositionLevel level) {
    return level == CompositionLevel::first_level_only ? "first_level_only" : "all_nodes";
}

CompositionLevel composition_level_from_string(const std::string& s) {
    if (s == "first_level_only") return CompositionLevel::first_level_only;
    if (s == "all_nodes") return CompositionLevel::all_nodes;
    throw UsageError("composition_level must be first_level_only or all_nodes, got '" + s + "'");
}

double rounded(double v) { return std::stod(text::fixed(v)); }

// ---------------------------------------------------------------------------

FitResult rank_size_fit(std::span<const double> sizes) {
    if (sizes.size() < 2) throw DataError("rank_size_fit needs at least 2 sizes");
    std::vector<double> sorted(sizes.begin(), sizes.end());
    for (double s : sorted) {
        if (!(s > 0.0) || !std::isfinite(s)) throw DataError("rank_size_fit: sizes must be strictly positive");
    }
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t n = sorted.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::log(static_cast<double>(i + 1));
        y[i] = std::log(sorted[i]);
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    FitResult fit;
    fit.n_points = n;
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.exponent * x[i]);
        ssr += r * r;
    }
    const double r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    if (n > 2) {
        fit.std_error = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
        fit.adjusted_r2 = 1.0 - (1.0 - r2) * static_cast<double>(n - 1) / static_cast<double>(n - 2);
    } else {
        fit.std_error = 0.0;
        fit.adjusted_r2 = r2;
    }
    return fit;
}

MetricsMatrix inter_citation_matrix(const CitationGraph& g, const Partition& p,
                                    const std::vector<CommunityLabel>& selected) {
    if (!g.directed()) throw DataError("inter_citation_matrix requires the directed graph");
    const auto labels = p.aligned_to(g);
    const std::size_t k = p.community_count();
    std::vector<std::ptrdiff_t> column(k, -1);
    for (std::size_t i = 0; i < selected.size(); ++i) {
        if (selected[i] >= k) throw DataError("unknown community label " + std::to_string(selected[i]));
        column[selected[i]] = static_cast<std::ptrdiff_t>(i);
    }
    const std::size_t s = selected.size();
    std::vector<std::vector<double>> counts(s, std::vector<double>(s + 1, 0.0));
    std::vector<double> totals(s, 0.0);
    for (const auto& [u, v] : g.edges()) {
        const auto row = column[labels[u]];
        if (row < 0) continue;
        const auto col = column[labels[v]];
        counts[row][col < 0 ? s : static_cast<std::size_t>(col)] += 1.0;
        totals[row] += 1.0;
    }
    MetricsMatrix m;
    m.kind = MatrixKind::inter_citation_percent;
    for (auto l : selected) {
        m.row_labels.push_back(std::to_string(l));
        m.col_labels.push_back(std::to_string(l));
    }
    m.col_labels.push_back("others");
    for (std::size_t r = 0; r < s; ++r) {
        if (totals[r] == 0.0) {
            throw DataError("community " + std::to_string(selected[r]) + " has no outgoing citation link");
        }
        std::vector<double> row(s + 1);
        for (std::size_t c = 0; c <= s; ++c) row[c] = 100.0 * counts[r][c] / totals[r];
        m.values.push_back(std::move(row));
    }
    return m;
}

double jaccard_similarity(const NodeSet& a, const NodeSet& b, SimilarityForm form) {
    if (a.empty() || b.empty()) throw DataError("jaccard_similarity: empty set");
    std::size_t common = 0;
    auto i = a.members.begin();
    auto j = b.members.begin();
    while (i != a.members.end() && j != b.members.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++common;
            ++i;
            ++j;
        }
    }
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double c = static_cast<double>(common);
    if (form == SimilarityForm::dice) return 2.0 * c / (na + nb);
    return c / (na + nb - c);
}

MetricsMatrix jaccard_matrix(const std::vector<NodeSet>& sets, SimilarityForm form) {
    if (sets.size() < 2) throw DataError("jaccard_matrix needs at least 2 sets");
    MetricsMatrix m;
    m.kind = MatrixKind::jaccard;
    const std::size_t n = sets.size();
    m.values.assign(n, std::vector<double>(n, 1.0));
    for (const auto& s : sets) {
        if (s.empty()) throw DataError("jaccard_matrix: set '" + s.label + "' is empty");
        m.row_labels.push_back(s.label);
        m.col_labels.push_back(s.label);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = jaccard_similarity(sets[i], sets[j], form);
            m.values[i][j] = v;
            m.values[j][i] = v;
        }
    }
    return m;
}

MetricsMatrix composition_matrix(const CitationGraph& g, const std::vector<NodeSet>& subnetworks, const Partition& p,
                                 CompositionLevel level) {
    const std::size_t k = p.community_count();
    MetricsMatrix m;
    m.kind = MatrixKind::composition_prob;
    for (std::size_t c = 0; c < k; ++c) m.col_labels.push_back(std::to_string(c));
    for (const auto& sub : subnetworks) {
        std::vector<double> counts(k, 0.0);
        double total = 0.0;
        for (const auto& id : sub.members) {
            if (level == CompositionLevel::first_level_only) {
                auto v = g.find(id);
                if (!v) throw DataError("composition_matrix: node '" + id + "' is not in the graph");
                if (g.node(*v).depth != 1) continue;
            }
            auto label = p.label_of(id);
            if (!label) throw DataError("composition_matrix: partition does not cover node '" + id + "'");
            counts[*label] += 1.0;
            total += 1.0;
        }
        if (total == 0.0) throw DataError("composition_matrix: subnetwork '" + sub.label + "' has no counted node");
        for (auto& c : counts) c /= total;
        m.row_labels.push_back(sub.label);
        m.values.push_back(std::move(counts));
    }
    return m;
}

MetricsMatrix znormalize_columns(const MetricsMatrix& m, StdMode mode) {
    const std::size_t rows = m.rows();
    if (rows < 2) throw DataError("znormalize_columns needs at least 2 rows");
    MetricsMatrix out = m;
    out.kind = MatrixKind::composition_znorm;
    const double denom = mode == StdMode::population ? static_cast<double>(rows) : static_cast<double>(rows - 1);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < rows; ++r) mean += m.values[r][c];
        mean /= static_cast<double>(rows);
        double ss = 0.0, scale = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = m.values[r][c] - mean;
            ss += d * d;
            scale = std::max(scale, std::abs(m.values[r][c]));
        }
        const double sd = std::sqrt(ss / denom);
        const bool degenerate = sd <= 1e-12 * std::max(1.0, scale);
        for (std::size_t r = 0; r < rows; ++r) {
            out.values[r][c] = degenerate ? 0.0 : (m.values[r][c] - mean) / sd;
        }
    }
    return out;
}

double herfindahl_index(std::span<const double> row) {
    if (row.empty()) throw DataError("herfindahl_index: empty vector");
    long double sum = 0.0L, h = 0.0L;
    for (double p : row) {
        if (!(p >= 0.0)) throw DataError("herfindahl_index: negative or non-finite share");
        sum += p;
        h += static_cast<long double>(p) * p;
    }
    if (std::abs(static_cast<double>(sum) - 1.0) > 1e-6) {
        throw DataError("herfindahl_index: shares sum to " + text::fixed(static_cast<double>(sum), 9) + ", not 1");
    }
    return static_cast<double>(h);
}

// ---------------------------------------------------------------------------

namespace {

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string matrix_to_csv(const MetricsMatrix& m, const std::string& header_comment) {
    std::string out;
    if (!header_comment.empty()) out += "# " + header_comment + "\n";
    out += "row";
    for (const auto& c : m.col_labels) out += "," + csv_cell(c);
    out += '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out += csv_cell(m.row_labels[r]);
        for (double v : m.values[r]) out += "," + text::fixed(v);
        out += '\n';
    }
    return out;
}

nlohmann::json matrix_to_json(const MetricsMatrix& m) {
    nlohmann::json j;
    j["kind"] = to_string(m.kind);
    j["row_labels"] = m.row_labels;
    j["col_labels"] = m.col_labels;
    nlohmann::json values = nlohmann::json::array();
    for (const auto& row : m.values) {
        nlohmann::json r = nlohmann::json::array();
        for (double v : row) r.push_back(rounded(v));
        values.push_back(std::move(r));
    }
    j["values"] = std::move(values);
    return j;
}

std::string matrix_to_long_tsv(const MetricsMatrix& m, const std::string& header_comment) {
    std::string out;
    if (!header_comment.empty()) out += "# " + header_comment + "\n";
    out += "row\tcol\tvalue\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out += text::tsv_clean(m.row_labels[r]) + "\t" + text::tsv_clean(m.col_labels[c]) + "\t" +
                   text::fixed(m.values[r][c]) + "\n";
        }
    }
    return out;
}

nlohmann::json fit_to_json(const FitResult& fit) {
    nlohmann::json j;
    j["exponent"] = rounded(fit.exponent);
    j["intercept"] = rounded(fit.intercept);
    j["std_error"] = rounded(fit.std_error);
    j["adjusted_r2"] = rounded(fit.adjusted_r2);
    j["n_points"] = fit.n_points;
    return j;
}

}  // namespace citescope
