#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "citescope/community.hpp"
#include "citescope/graph.hpp"

namespace citescope {

enum class MatrixKind { inter_citation_percent, jaccard, composition_prob, composition_znorm };

std::string to_string(MatrixKind kind);

struct MetricsMatrix {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<double>> values;
    MatrixKind kind = MatrixKind::jaccard;

    std::size_t rows() const { return values.size(); }
    std::size_t cols() const { return col_labels.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r][c]; }
};

struct FitResult {
    double exponent = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;
    double adjusted_r2 = 1.0;
    std::size_t n_points = 0;
};

// OLS of log(size) on log(rank), ranks 1..n after a descending sort. With
// n == 2 the fit is exact: std_error is 0 and adjusted R^2 equals R^2. A
// constant series has R^2 = 1.
FitResult rank_size_fit(std::span<const double> sizes);

// Row i: percentage of citation links leaving community selected[i] that
// land in each selected community, plus a final "others" column.
MetricsMatrix inter_citation_matrix(const CitationGraph& g, const Partition& p,
                                    const std::vector<CommunityLabel>& selected);

enum class SimilarityForm {
    dice,     // 2|A n B| / (|A| + |B|)
    jaccard,  // |A n B| / |A u B|
};

double jaccard_similarity(const NodeSet& a, const NodeSet& b, SimilarityForm form = SimilarityForm::dice);
MetricsMatrix jaccard_matrix(const std::vector<NodeSet>& sets, SimilarityForm form = SimilarityForm::dice);

enum class CompositionLevel { first_level_only, all_nodes };

std::string to_string(CompositionLevel level);
CompositionLevel composition_level_from_string(const std::string& s);

// Row i: distribution of subnetwork i's counted nodes over community labels
// (columns 0..k-1). first_level_only counts only crawl-depth-1 papers;
// depth comes from g.
MetricsMatrix composition_matrix(const CitationGraph& g, const std::vector<NodeSet>& subnetworks, const Partition& p,
                                 CompositionLevel level = CompositionLevel::first_level_only);

enum class StdMode { population, sample };

// Per-column z-score. Columns whose spread is numerically zero become zeros.
MetricsMatrix znormalize_columns(const MetricsMatrix& m, StdMode mode = StdMode::population);

// Sum of squared shares. Entries must be >= 0 and sum to 1 +- 1e-6.
double herfindahl_index(std::span<const double> row);

// Serialization. Values are written with 10 decimals.
std::string matrix_to_csv(const MetricsMatrix& m, const std::string& header_comment = {});
nlohmann::json matrix_to_json(const MetricsMatrix& m);
std::string matrix_to_long_tsv(const MetricsMatrix& m, const std::string& header_comment = {});
nlohmann::json fit_to_json(const FitResult& fit);

// Rounds to 10 decimals so JSON output is stable across summation order.
double rounded(double v);

}  // namespace citescope
