#include "sarcgen/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sarcgen/csv.hpp"
#include "sarcgen/errors.hpp"

namespace sarcgen {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string{s.substr(b, e - b + 1)};
}

std::string where(std::string_view source, std::size_t line) {
    return std::string{source} + ":" + std::to_string(line) + ": ";
}

int parse_int(const std::string& text, const std::string& context) {
    int v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (text.empty() || ec != std::errc{} || ptr != end) throw ValidationError(context + "'" + text + "' is not an integer");
    return v;
}

double parse_double(const std::string& text, const std::string& context) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (text.empty() || used != text.size() || !std::isfinite(v)) {
        throw ValidationError(context + "'" + text + "' is not a number");
    }
    return v;
}

std::vector<double> matching_scores(std::span<const RatingRecord> ratings, SystemVariant system, Criterion criterion) {
    std::vector<double> out;
    for (const auto& r : ratings) {
        if (r.system == system) out.push_back(r.score(criterion));
    }
    return out;
}

double population_variance(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size());
}

std::string cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string_view criterion_code(Criterion c) {
    switch (c) {
        case Criterion::sarcasticness: return "S";
        case Criterion::creativity: return "C";
        case Criterion::humor: return "H";
        case Criterion::grammaticality: return "G";
    }
    return "S";
}

std::string_view criterion_name(Criterion c) {
    switch (c) {
        case Criterion::sarcasticness: return "sarcasticness";
        case Criterion::creativity: return "creativity";
        case Criterion::humor: return "humor";
        case Criterion::grammaticality: return "grammaticality";
    }
    return "sarcasticness";
}

Criterion criterion_from_string(std::string_view s) {
    for (auto c : kCriteria) {
        if (s == criterion_code(c) || s == criterion_name(c)) return c;
    }
    throw ValidationError("unknown criterion '" + std::string{s} + "'");
}

std::string_view system_label(SystemVariant v) {
    switch (v) {
        case SystemVariant::full_model: return "Full Model";
        case SystemVariant::without_emoji: return "Without Emoji";
        case SystemVariant::without_context: return "Without Context";
        case SystemVariant::external_baseline: return "External Baseline";
    }
    return "Full Model";
}

std::string_view to_string(VarianceMode m) { return m == VarianceMode::ratings ? "ratings" : "item_means"; }

// ---------------------------------------------------------------------------
// Ratings
// ---------------------------------------------------------------------------

std::vector<RatingRecord> parse_ratings(std::istream& in, std::string_view source) {
    const auto rows = read_csv(in);
    if (rows.empty()) throw ValidationError(std::string{source} + ": empty ratings file");
    const CsvHeader header(rows.front());
    const auto item_col = header.require("item_id");
    const auto system_col = header.require("system");
    const auto judge_col = header.require("judge_id");
    std::array<std::size_t, 4> score_cols{};
    for (auto c : kCriteria) score_cols[static_cast<std::size_t>(c)] = header.require(criterion_code(c));

    std::vector<RatingRecord> out;
    std::set<std::tuple<std::string, SystemVariant, std::string>> seen;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const auto ctx = where(source, row.line);
        auto field = [&](std::size_t col) { return col < row.fields.size() ? trim(row.fields[col]) : std::string{}; };
        RatingRecord r;
        r.item_id = field(item_col);
        r.judge_id = field(judge_col);
        if (r.item_id.empty()) throw ValidationError(ctx + "missing item_id");
        if (r.judge_id.empty()) throw ValidationError(ctx + "missing judge_id");
        try {
            r.system = system_variant_from_string(field(system_col));
        } catch (const ValidationError& e) {
            throw ValidationError(ctx + e.what());
        }
        for (auto c : kCriteria) {
            const auto k = static_cast<std::size_t>(c);
            const int v = parse_int(field(score_cols[k]), ctx + std::string{criterion_code(c)} + " ");
            if (v < 1 || v > 5) {
                throw ValidationError(ctx + std::string{criterion_code(c)} + " score " + std::to_string(v) +
                                      " outside 1..5");
            }
            r.scores[k] = v;
        }
        if (!seen.emplace(r.item_id, r.system, r.judge_id).second) {
            throw ValidationError(ctx + "duplicate rating for item " + r.item_id + ", system " +
                                  std::string{to_string(r.system)} + ", judge " + r.judge_id);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RatingRecord> load_ratings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path.string());
    return parse_ratings(in, path.string());
}

RatingsGrid make_grid(std::size_t items, std::size_t judges, std::vector<double> values) {
    if (values.size() != items * judges) throw ShapeError("grid values do not match items x judges");
    RatingsGrid g;
    for (std::size_t i = 0; i < items; ++i) g.item_ids.push_back("item" + std::to_string(i));
    for (std::size_t j = 0; j < judges; ++j) g.judge_ids.push_back("judge" + std::to_string(j));
    g.values = std::move(values);
    return g;
}

RatingsGrid build_grid(std::span<const RatingRecord> ratings, SystemVariant system, Criterion criterion) {
    std::map<std::pair<std::string, std::string>, double> cells;
    std::set<std::string> items;
    std::set<std::string> judges;
    for (const auto& r : ratings) {
        if (r.system != system) continue;
        items.insert(r.item_id);
        judges.insert(r.judge_id);
        cells[{r.item_id, r.judge_id}] = r.score(criterion);
    }
    const std::string what = std::string{to_string(system)} + "/" + std::string{criterion_code(criterion)};
    if (cells.empty()) throw MissingDataError("no ratings for " + what);
    RatingsGrid g;
    g.item_ids.assign(items.begin(), items.end());
    g.judge_ids.assign(judges.begin(), judges.end());
    g.values.reserve(items.size() * judges.size());
    for (const auto& item : g.item_ids) {
        for (const auto& judge : g.judge_ids) {
            const auto it = cells.find({item, judge});
            if (it == cells.end()) {
                throw MissingDataError("incomplete grid for " + what + ": judge " + judge + " did not rate item " + item);
            }
            g.values.push_back(it->second);
        }
    }
    return g;
}

IccResult icc_2k(const RatingsGrid& grid) {
    const std::size_t n = grid.items();
    const std::size_t k = grid.judges();
    if (n < 2 || k < 2) throw PreconditionError("ICC needs at least 2 items and 2 judges");
    if (grid.values.size() != n * k) throw ShapeError("grid values do not match items x judges");

    std::vector<double> row_mean(n, 0.0);
    std::vector<double> col_mean(k, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double x = grid.at(i, j);
            row_mean[i] += x;
            col_mean[j] += x;
            grand += x;
        }
    }
    for (auto& m : row_mean) m /= static_cast<double>(k);
    for (auto& m : col_mean) m /= static_cast<double>(n);
    grand /= static_cast<double>(n * k);

    double ssr = 0.0, ssc = 0.0, sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) ssr += (row_mean[i] - grand) * (row_mean[i] - grand);
    ssr *= static_cast<double>(k);
    for (std::size_t j = 0; j < k; ++j) ssc += (col_mean[j] - grand) * (col_mean[j] - grand);
    ssc *= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double x = grid.at(i, j);
            const double r = x - row_mean[i] - col_mean[j] + grand;
            sse += r * r;
            sst += (x - grand) * (x - grand);
        }
    }
    if (sst == 0.0) throw DegenerateGridError("ratings grid has zero total variance");

    IccResult out;
    out.items = n;
    out.judges = k;
    out.msr = ssr / static_cast<double>(n - 1);
    out.msc = ssc / static_cast<double>(k - 1);
    out.mse = sse / static_cast<double>((n - 1) * (k - 1));
    const double denom = out.msr + (out.msc - out.mse) / static_cast<double>(n);
    if (denom == 0.0) throw DegenerateGridError("ICC denominator is zero");
    out.value = (out.msr - out.mse) / denom;
    out.out_of_range = !(out.value >= 0.0 && out.value <= 1.0);
    return out;
}

double mean_scores(std::span<const RatingRecord> ratings, SystemVariant system, Criterion criterion) {
    const auto xs = matching_scores(ratings, system, criterion);
    if (xs.empty()) {
        throw MissingDataError("no ratings for " + std::string{to_string(system)} + "/" +
                               std::string{criterion_code(criterion)});
    }
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

VarianceResult variance_scores(std::span<const RatingRecord> ratings, SystemVariant system, Criterion criterion,
                               VarianceMode mode) {
    std::vector<double> xs;
    if (mode == VarianceMode::ratings) {
        xs = matching_scores(ratings, system, criterion);
    } else {
        std::map<std::string, std::pair<double, std::size_t>> per_item;
        for (const auto& r : ratings) {
            if (r.system != system) continue;
            auto& [sum, count] = per_item[r.item_id];
            sum += r.score(criterion);
            ++count;
        }
        for (const auto& [item, acc] : per_item) xs.push_back(acc.first / static_cast<double>(acc.second));
    }
    if (xs.size() < 2) {
        throw MissingDataError("variance of " + std::string{to_string(system)} + "/" +
                               std::string{criterion_code(criterion)} + " needs at least 2 values, got " +
                               std::to_string(xs.size()));
    }
    VarianceResult out;
    out.value = population_variance(xs);
    out.count = xs.size();
    out.mode = mode;
    return out;
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

std::vector<DetectionPrediction> parse_predictions(std::istream& in, std::string_view source) {
    const auto rows = read_csv(in);
    if (rows.empty()) throw ValidationError(std::string{source} + ": empty predictions file");
    const CsvHeader header(rows.front());
    const auto id_col = header.require("text_id");
    const auto true_col = header.require("true_label");
    const auto pred_col = header.require("predicted_label");
    const auto score_col = header.find("score");

    std::vector<DetectionPrediction> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const auto ctx = where(source, row.line);
        auto field = [&](std::size_t col) { return col < row.fields.size() ? trim(row.fields[col]) : std::string{}; };
        DetectionPrediction p;
        p.text_id = field(id_col);
        p.true_label = parse_int(field(true_col), ctx + "true_label ");
        p.predicted_label = parse_int(field(pred_col), ctx + "predicted_label ");
        if ((p.true_label != 0 && p.true_label != 1) || (p.predicted_label != 0 && p.predicted_label != 1)) {
            throw ValidationError(ctx + "labels must be 0 or 1");
        }
        if (score_col) {
            const auto text = field(*score_col);
            if (!text.empty()) {
                const double s = parse_double(text, ctx + "score ");
                if (s < 0.0 || s > 1.0) throw ValidationError(ctx + "score " + text + " outside [0, 1]");
                p.score = s;
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<DetectionPrediction> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path.string());
    return parse_predictions(in, path.string());
}

double DetectionMetrics::roc_auc() const {
    if (!auc_) throw AUCUndefinedError(auc_reason_);
    return *auc_;
}

DetectionMetrics detection_metrics(std::span<const DetectionPrediction> predictions) {
    if (predictions.empty()) throw MissingDataError("no predictions");
    DetectionMetrics m;
    std::size_t positives = 0;
    bool all_scored = true;
    for (const auto& p : predictions) {
        if (p.true_label == 1) {
            ++positives;
            (p.predicted_label == 1 ? m.tp : m.fn)++;
        } else {
            (p.predicted_label == 1 ? m.fp : m.tn)++;
        }
        all_scored = all_scored && p.score.has_value();
    }
    m.precision = m.tp + m.fp ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = m.tp + m.fn ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;

    const std::size_t negatives = predictions.size() - positives;
    if (positives == 0 || negatives == 0) {
        m.auc_reason_ = "ROC AUC needs both classes in the true labels";
        return m;
    }
    if (!all_scored) {
        m.auc_reason_ = "ROC AUC needs a score on every prediction";
        return m;
    }
    // Mann-Whitney U with average ranks over tied scores.
    std::vector<std::size_t> order(predictions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return *predictions[a].score < *predictions[b].score; });
    double positive_rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && *predictions[order[j]].score == *predictions[order[i]].score) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) {
            if (predictions[order[t]].true_label == 1) positive_rank_sum += rank;
        }
        i = j;
    }
    const double np = static_cast<double>(positives);
    const double nn = static_cast<double>(negatives);
    m.auc_ = (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
    return m;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

nlohmann::json ratings_report(std::span<const RatingRecord> ratings, VarianceMode mode) {
    std::set<SystemVariant> present;
    for (const auto& r : ratings) present.insert(r.system);

    nlohmann::json systems = nlohmann::json::array();
    for (auto v : kAllVariants) {
        if (present.count(v) == 0) continue;
        nlohmann::json criteria = nlohmann::json::object();
        for (auto c : kCriteria) {
            nlohmann::json entry;
            try {
                const auto icc = icc_2k(build_grid(ratings, v, c));
                entry["icc"] = icc.value;
                entry["icc_out_of_range"] = icc.out_of_range;
                entry["icc_items"] = icc.items;
                entry["icc_judges"] = icc.judges;
            } catch (const Error& e) {
                entry["icc"] = nullptr;
                entry["icc_error"] = e.what();
            }
            entry["mean"] = mean_scores(ratings, v, c);
            try {
                const auto var = variance_scores(ratings, v, c, mode);
                entry["variance"] = var.value;
                entry["variance_count"] = var.count;
            } catch (const MissingDataError& e) {
                entry["variance"] = nullptr;
                entry["variance_error"] = e.what();
            }
            criteria[std::string{criterion_code(c)}] = entry;
        }
        systems.push_back({{"system", to_string(v)}, {"criteria", criteria}});
    }
    return {{"ratings", ratings.size()},
            {"icc_form", "ICC(2,k)"},
            {"variance_mode", to_string(mode)},
            {"variance_estimator", "population"},
            {"systems", systems}};
}

nlohmann::json detection_report(const DetectionMetrics& metrics) {
    nlohmann::json j{{"tp", metrics.tp}, {"fp", metrics.fp},         {"fn", metrics.fn},
                     {"tn", metrics.tn}, {"precision", metrics.precision}, {"recall", metrics.recall},
                     {"f1", metrics.f1}};
    if (metrics.has_roc_auc()) {
        j["roc_auc"] = metrics.roc_auc();
    } else {
        j["roc_auc"] = nullptr;
        j["roc_auc_error"] = metrics.auc_undefined_reason();
    }
    return j;
}

std::string render_table(const nlohmann::json& report, ReportTable table) {
    const char* key = table == ReportTable::icc ? "icc" : table == ReportTable::variances ? "variance" : "mean";
    const char* title = table == ReportTable::icc         ? "Intraclass Correlation Coefficient (ICC)"
                        : table == ReportTable::variances ? "Variance"
                                                          : "Average rating";
    std::vector<std::array<std::string, 5>> rows;
    rows.push_back({"System", "S", "C", "H", "G"});
    for (const auto& s : report.at("systems")) {
        std::array<std::string, 5> row;
        row[0] = std::string{system_label(system_variant_from_string(s.at("system").get<std::string>()))};
        for (std::size_t c = 0; c < 4; ++c) {
            const auto& entry = s.at("criteria").at(std::string{criterion_code(kCriteria[c])});
            row[c + 1] = entry.contains(key) && entry[key].is_number() ? cell(entry[key].get<double>()) : "-";
        }
        rows.push_back(row);
    }
    std::array<std::size_t, 5> width{};
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream out;
    out << title << '\n';
    std::size_t total = 0;
    for (auto w : width) total += w + 3;
    const std::string rule(total - 1, '-');
    out << rule << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < 5; ++c) {
            const auto& text = rows[i][c];
            if (c == 0) {
                out << text << std::string(width[c] - text.size(), ' ');
            } else {
                out << " | " << std::string(width[c] - text.size(), ' ') << text;
            }
        }
        out << '\n';
        if (i == 0) out << rule << '\n';
    }
    out << rule << '\n';
    return out.str();
}

}  // namespace sarcgen
