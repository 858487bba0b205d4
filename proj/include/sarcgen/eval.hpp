#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sarcgen/pipeline.hpp"

namespace sarcgen {

enum class Criterion { sarcasticness, creativity, humor, grammaticality };

inline constexpr Criterion kCriteria[] = {Criterion::sarcasticness, Criterion::creativity, Criterion::humor,
                                          Criterion::grammaticality};

// Column code: S, C, H or G.
std::string_view criterion_code(Criterion c);
std::string_view criterion_name(Criterion c);
Criterion criterion_from_string(std::string_view s);

// Display label used in rendered tables ("Full Model", ...).
std::string_view system_label(SystemVariant v);

struct RatingRecord {
    std::string item_id;
    SystemVariant system = SystemVariant::full_model;
    std::string judge_id;
    std::array<int, 4> scores{};  // indexed by Criterion

    int score(Criterion c) const { return scores[static_cast<std::size_t>(c)]; }
};

// Ratings CSV with columns item_id,system,judge_id,S,C,H,G located by header
// name; extra columns (such as text) are ignored. Throws ValidationError with
// the row's line number for a score outside 1..5, an unknown system, or a
// repeated (item, system, judge) key.
std::vector<RatingRecord> load_ratings(const std::filesystem::path& path);
std::vector<RatingRecord> parse_ratings(std::istream& in, std::string_view source = "ratings");

// n_items x k_judges scores for one (system, criterion). Rows follow sorted
// item ids, columns sorted judge ids.
struct RatingsGrid {
    std::vector<std::string> item_ids;
    std::vector<std::string> judge_ids;
    std::vector<double> values;  // row-major

    std::size_t items() const { return item_ids.size(); }
    std::size_t judges() const { return judge_ids.size(); }
    double at(std::size_t item, std::size_t judge) const { return values[item * judge_ids.size() + judge]; }
};

// Throws MissingDataError when no record matches or some judge did not rate
// some item.
RatingsGrid build_grid(std::span<const RatingRecord> ratings, SystemVariant system, Criterion criterion);
RatingsGrid make_grid(std::size_t items, std::size_t judges, std::vector<double> values);

struct IccResult {
    double value = 0.0;
    double msr = 0.0;  // between items
    double msc = 0.0;  // between judges
    double mse = 0.0;  // residual
    std::size_t items = 0;
    std::size_t judges = 0;
    // Set when the estimate falls outside [0, 1]; the value is reported as is.
    bool out_of_range = false;
};

// ICC(2,k): two-way random effects, absolute agreement, mean of k judges.
// Throws PreconditionError for fewer than 2 items or judges and
// DegenerateGridError when the grid has no variance.
IccResult icc_2k(const RatingsGrid& grid);

// Flat mean over every (item, judge) rating. Throws MissingDataError when no
// record matches.
double mean_scores(std::span<const RatingRecord> ratings, SystemVariant system, Criterion criterion);

enum class VarianceMode {
    ratings,     // every individual judge rating
    item_means,  // judge-averaged score per item
};

std::string_view to_string(VarianceMode m);

struct VarianceResult {
    double value = 0.0;
    std::size_t count = 0;
    VarianceMode mode = VarianceMode::ratings;
    std::string estimator = "population";  // divisor N
};

// Throws MissingDataError with fewer than 2 values to pool.
VarianceResult variance_scores(std::span<const RatingRecord> ratings, SystemVariant system, Criterion criterion,
                               VarianceMode mode = VarianceMode::ratings);

struct DetectionPrediction {
    std::string text_id;
    int true_label = 0;
    int predicted_label = 0;
    std::optional<double> score;
};

// CSV text_id,true_label,predicted_label,score. An empty score cell leaves
// the score absent. Labels must be 0 or 1 and scores lie in [0, 1].
std::vector<DetectionPrediction> load_predictions(const std::filesystem::path& path);
std::vector<DetectionPrediction> parse_predictions(std::istream& in, std::string_view source = "predictions");

class DetectionMetrics {
public:
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool has_roc_auc() const { return auc_.has_value(); }
    // Throws AUCUndefinedError with the reason when AUC could not be computed.
    double roc_auc() const;
    const std::string& auc_undefined_reason() const { return auc_reason_; }

private:
    friend DetectionMetrics detection_metrics(std::span<const DetectionPrediction> predictions);
    std::optional<double> auc_;
    std::string auc_reason_;
};

// Precision, recall and F1 of the positive class (0 when undefined) and the
// rank-statistic ROC AUC with tied scores counted as one half.
DetectionMetrics detection_metrics(std::span<const DetectionPrediction> predictions);

// ICC, mean and variance for every (system, criterion) present in the
// ratings. Cells that cannot be computed carry an "error" entry.
nlohmann::json ratings_report(std::span<const RatingRecord> ratings, VarianceMode mode = VarianceMode::ratings);
nlohmann::json detection_report(const DetectionMetrics& metrics);

enum class ReportTable { icc, variances, means };

// System x S/C/H/G table with two-decimal cells.
std::string render_table(const nlohmann::json& report, ReportTable table);

}  // namespace sarcgen
