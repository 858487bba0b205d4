#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sarcgen/backends.hpp"
#include "sarcgen/commonsense.hpp"
#include "sarcgen/emoji.hpp"
#include "sarcgen/inducer.hpp"
#include "sarcgen/lexicon.hpp"
#include "sarcgen/neutralizer.hpp"
#include "sarcgen/text.hpp"

namespace sarcgen {

enum class SystemVariant { full_model, without_emoji, without_context, external_baseline };

std::string_view to_string(SystemVariant v);
SystemVariant system_variant_from_string(std::string_view s);

inline constexpr SystemVariant kGeneratedVariants[] = {SystemVariant::full_model, SystemVariant::without_emoji,
                                                       SystemVariant::without_context};
inline constexpr SystemVariant kAllVariants[] = {SystemVariant::full_model, SystemVariant::without_emoji,
                                                 SystemVariant::without_context, SystemVariant::external_baseline};

inline constexpr int kRecordSchemaVersion = 1;

namespace flags {
inline constexpr std::string_view kCollapseFallback = "collapse_fallback";
inline constexpr std::string_view kCopyFallback = "copy_fallback";
inline constexpr std::string_view kNoContext = "no_context";
}  // namespace flags

// One input carried through every stage. Text fields hold the normalized,
// lowercase, space-joined forms.
struct SarcasticRecord {
    std::string id;
    std::string input;
    std::string neutralized;
    std::string reversed;
    std::optional<std::string> inferred_phrase;
    std::optional<std::string> keyword;
    std::optional<std::string> subject;
    std::vector<ContextCandidate> candidates;
    std::optional<std::string> selected_context;
    // Emoji for the full model (input + context) and for the variant without
    // context (input alone).
    std::optional<std::size_t> emoji_index;
    std::optional<std::size_t> emoji_index_without_context;
    std::map<SystemVariant, std::string> outputs;
    std::set<std::string, std::less<>> flags;
    // Why the context stage produced nothing, when it did not.
    std::string no_context_reason;

    bool flagged() const { return !flags.empty(); }
};

void to_json(nlohmann::json& j, const SarcasticRecord& r);
void from_json(const nlohmann::json& j, SarcasticRecord& r);

struct PipelineModels {
    std::shared_ptr<const AttentionClassifier> neutralizer;
    std::shared_ptr<const Inducer> inducer;
};

struct PipelineOptions {
    float threshold_factor = kDefaultThresholdFactor;
    NliDirection nli_direction = NliDirection::reversed_as_premise;
    Normalizer normalizer;
};

// Runs normalize -> neutralize -> induce -> context -> emoji. Immutable
// apart from the retrieval cache, which is internally synchronized, so one
// generator may serve many threads.
class SarcasmGenerator {
public:
    SarcasmGenerator(PipelineModels models, BackendSuite backends, Lexicon lexicon, EmojiVocabulary vocabulary,
                     PipelineOptions options = {});

    // Produces the outputs of the requested variants (all generated ones by
    // default). The external baseline cannot be generated.
    SarcasticRecord generate(const std::string& input, std::string id = {},
                             std::span<const SystemVariant> variants = kGeneratedVariants) const;

    const EmojiVocabulary& vocabulary() const { return vocabulary_; }
    const RetrievalCache& cache() const { return *cache_; }

private:
    void build_context(SarcasticRecord& record, const Utterance& input) const;

    PipelineModels models_;
    BackendSuite backends_;
    Lexicon lexicon_;
    EmojiVocabulary vocabulary_;
    PipelineOptions options_;
    std::unique_ptr<RetrievalCache> cache_;
};

SarcasticRecord generate_sarcasm(const SarcasmGenerator& generator, const std::string& input,
                                 SystemVariant variant = SystemVariant::full_model);

// Side files next to a dataset: flagged records and per-record errors.
std::filesystem::path flagged_path(const std::filesystem::path& dataset);
std::filesystem::path errors_path(const std::filesystem::path& dataset);

struct DatasetOptions {
    std::size_t workers = 1;
    // Records processed between ordered appends.
    std::size_t chunk_size = 64;
};

struct DatasetSummary {
    std::size_t written = 0;
    std::size_t flagged = 0;
    std::size_t failed = 0;
    std::size_t skipped = 0;
};

// Appends one JSON line per unflagged record to out_path; flagged records go
// to the flagged side file and failures to the errors side file. Ids
// already present in any of the three files are skipped, so reruns resume.
// Output bytes do not depend on the worker count.
DatasetSummary generate_dataset(std::span<const RawRecord> corpus, const SarcasmGenerator& generator,
                                const std::filesystem::path& out_path, const DatasetOptions& options = {});

std::vector<SarcasticRecord> load_dataset(const std::filesystem::path& path);

// Baseline outputs keyed by record id. Input JSONL lines carry "output"
// and either "id" or "input"; inputs are matched to dataset records by
// their normalized text.
std::map<std::string, std::string> import_baseline(const std::filesystem::path& baseline_jsonl,
                                                    std::span<const SarcasticRecord> dataset);
void save_baseline(const std::filesystem::path& path, const std::map<std::string, std::string>& baseline);
std::map<std::string, std::string> load_baseline(const std::filesystem::path& path);

struct SheetRow {
    std::string item_id;
    SystemVariant system = SystemVariant::full_model;
    std::string text;
};

// n distinct records drawn by a seeded partial Fisher-Yates shuffle, four
// rows each (one per system). Baseline text is empty for records missing
// from `baseline`. Throws RangeError when n exceeds the dataset size.
std::vector<SheetRow> sample_for_evaluation(std::span<const SarcasticRecord> dataset, std::size_t n, std::uint64_t seed,
                                            const std::map<std::string, std::string>& baseline = {});

// CSV with header item_id,system,judge_id,text,S,C,H,G; judge and score
// columns are left blank for the raters.
void write_rating_sheet(const std::filesystem::path& path, std::span<const SheetRow> rows);

}  // namespace sarcgen
